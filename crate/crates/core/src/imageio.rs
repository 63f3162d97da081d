//! Image containers, binary PGM/PPM I/O and the luminance decomposition used
//! to run grayscale enhancement on color images.
//!
//! Color images are enhanced through their HSV value channel `V = max(R,G,B)`.
//! Recombination scales all three channels by `V'/V`, which leaves hue and
//! saturation untouched.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};

/// A grayscale image with `bit_depth`-bit samples stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    bit_depth: u32,
    data: Vec<u16>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, bit_depth: u32, data: Vec<u16>) -> Result<Self> {
        if !(1..=16).contains(&bit_depth) {
            return Err(Error::InvalidImage(format!(
                "bit depth {bit_depth} outside 1..=16"
            )));
        }
        if data.len() != width * height {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        let max = ((1u32 << bit_depth) - 1) as u16;
        if let Some(p) = data.iter().find(|&&p| p > max) {
            return Err(Error::InvalidImage(format!(
                "pixel value {p} exceeds {max} for {bit_depth}-bit data"
            )));
        }
        Ok(Self {
            width,
            height,
            bit_depth,
            data,
        })
    }

    /// Builds an 8-bit image from raw bytes.
    pub fn from_u8(width: usize, height: usize, data: &[u8]) -> Result<Self> {
        Self::new(width, height, 8, data.iter().map(|&p| p as u16).collect())
    }

    /// Builds an 8-bit image by evaluating `f(row, col)` at every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j) as u16);
            }
        }
        Self {
            width,
            height,
            bit_depth: 8,
            data,
        }
    }

    // Only for callers that already guarantee the invariants.
    pub(crate) fn from_parts(width: usize, height: usize, bit_depth: u32, data: Vec<u16>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            bit_depth,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bit_depth(&self) -> u32 {
        self.bit_depth
    }

    /// Number of representable gray levels, `2^B`.
    pub fn levels(&self) -> usize {
        1 << self.bit_depth
    }

    pub fn max_value(&self) -> u16 {
        (self.levels() - 1) as u16
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u16> {
        self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> u16 {
        self.data[row * self.width + col]
    }

    pub fn row(&self, row: usize) -> &[u16] {
        &self.data[row * self.width..(row + 1) * self.width]
    }

    /// Bytes of an 8-bit image; `None` for other depths.
    pub fn to_u8(&self) -> Option<Vec<u8>> {
        (self.bit_depth == 8).then(|| self.data.iter().map(|&p| p as u8).collect())
    }
}

/// An 8-bit interleaved RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl ColorImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::InvalidImage(format!(
                "data length {} does not match {width}x{height}x3",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, row: usize, col: usize) -> [u8; 3] {
        let o = (row * self.width + col) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }
}

/// Either kind of image a PNM file can hold.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Image {
    Gray(GrayImage),
    Color(ColorImage),
}

impl Image {
    pub fn width(&self) -> usize {
        match self {
            Image::Gray(g) => g.width(),
            Image::Color(c) => c.width(),
        }
    }

    pub fn height(&self) -> usize {
        match self {
            Image::Gray(g) => g.height(),
            Image::Color(c) => c.height(),
        }
    }
}

impl From<GrayImage> for Image {
    fn from(img: GrayImage) -> Self {
        Image::Gray(img)
    }
}

impl From<ColorImage> for Image {
    fn from(img: ColorImage) -> Self {
        Image::Color(img)
    }
}

struct HeaderCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderCursor<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &str) -> Result<u32> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(Error::MalformedHeader(format!(
                "{field}: expected a decimal number"
            )));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::MalformedHeader(format!("{field}: value out of range")))
    }
}

/// Decodes a binary PGM (P5) or PPM (P6) with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<Image> {
    if bytes.len() < 2 {
        return Err(Error::MalformedHeader("magic: file too short".into()));
    }
    let channels = match &bytes[..2] {
        b"P5" => 1,
        b"P6" => 3,
        other => {
            return Err(Error::UnsupportedFormat(
                String::from_utf8_lossy(other).into_owned(),
            ))
        }
    };
    let mut cur = HeaderCursor { bytes, pos: 2 };
    let width = cur.number("width")? as usize;
    let height = cur.number("height")? as usize;
    let maxval = cur.number("maxval")?;
    if maxval != 255 {
        return Err(Error::UnsupportedMaxval(maxval));
    }
    match bytes.get(cur.pos) {
        Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
        _ => {
            return Err(Error::MalformedHeader(
                "maxval: missing whitespace before raster".into(),
            ))
        }
    }
    let expected = width * height * channels;
    let payload = &bytes[cur.pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let raster = &payload[..expected];
    Ok(if channels == 1 {
        Image::Gray(GrayImage::from_u8(width, height, raster)?)
    } else {
        Image::Color(ColorImage::new(width, height, raster.to_vec())?)
    })
}

/// Encodes an image as binary PGM/PPM.
pub fn encode_pnm(img: &Image) -> Result<Vec<u8>> {
    if img.width() == 0 || img.height() == 0 {
        return Err(Error::EmptyImage);
    }
    let (magic, raster) = match img {
        Image::Gray(g) => (
            "P5",
            g.to_u8().ok_or_else(|| {
                Error::InvalidImage(format!(
                    "PGM output supports 8-bit images only, got {} bits",
                    g.bit_depth()
                ))
            })?,
        ),
        Image::Color(c) => ("P6", c.data().to_vec()),
    };
    let mut out = Vec::with_capacity(raster.len() + 20);
    write!(out, "{magic}\n{} {}\n255\n", img.width(), img.height())?;
    out.extend_from_slice(&raster);
    Ok(out)
}

pub fn read_image(path: impl AsRef<Path>) -> Result<Image> {
    decode_pnm(&fs::read(path)?)
}

pub fn write_image(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    let bytes = encode_pnm(img)?;
    fs::write(path, bytes)?;
    Ok(())
}

/// HSV value channel, `max(R, G, B)` per pixel.
pub fn extract_luminance(img: &ColorImage) -> GrayImage {
    let data = img
        .data
        .chunks_exact(3)
        .map(|px| px[0].max(px[1]).max(px[2]) as u16)
        .collect();
    GrayImage::from_parts(img.width, img.height, 8, data)
}

/// Replaces the value channel of `img` with `new_v`, scaling each pixel's
/// channels uniformly. Black pixels (V = 0) become neutral gray `new_v`.
pub fn recombine_luminance(img: &ColorImage, new_v: &GrayImage) -> Result<ColorImage> {
    if (new_v.width(), new_v.height()) != (img.width, img.height) {
        return Err(Error::DimensionMismatch {
            expected: (img.width, img.height),
            got: (new_v.width(), new_v.height()),
        });
    }
    let mut data = Vec::with_capacity(img.data.len());
    for (px, &nv) in img.data.chunks_exact(3).zip(new_v.data()) {
        let nv = nv.min(255) as u32;
        let v = px[0].max(px[1]).max(px[2]) as u32;
        if v == 0 {
            data.extend_from_slice(&[nv as u8; 3]);
        } else {
            // round(c * nv / v), half up, in exact integer arithmetic
            for &c in px {
                let scaled = (2 * c as u32 * nv + v) / (2 * v);
                data.push(scaled.min(255) as u8);
            }
        }
    }
    Ok(ColorImage {
        width: img.width,
        height: img.height,
        data,
    })
}
