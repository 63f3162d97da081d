//! Mapping-function calibration: turning a low-resolution or partial gray
//! level mapping into a full `2^B`-entry lookup table.
//!
//! [`calibrate`] linearly interpolates between the defined points and holds
//! the first/last value constant outside them. [`naive_upsample_scheme1`] is
//! the nearest-bin staircase expansion, kept for comparison only: it has at
//! most `N_g` distinct outputs and produces visible banding.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// How the abscissae of a [`PartialCurve`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveDomain {
    /// One point per histogram bin, at the bin's lower edge `k·Δ`.
    BinIndexed { delta: usize },
    /// Points only on the occupied bins (the support set), at `x_k·Δ`.
    SupportIndexed { delta: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvePoint {
    /// Input gray level.
    pub x: u32,
    /// Output value, real-valued, in gray-level units.
    pub y: f64,
}

/// A mapping defined only at some gray levels.
#[derive(Debug, Clone, PartialEq)]
pub struct PartialCurve {
    points: Vec<CurvePoint>,
    domain: CurveDomain,
}

impl PartialCurve {
    pub fn new(points: Vec<CurvePoint>, domain: CurveDomain) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyCurve);
        }
        if points.windows(2).any(|w| w[0].x >= w[1].x) {
            return Err(Error::InvalidCurve { max: u32::MAX });
        }
        Ok(Self { points, domain })
    }

    /// One value per bin; bin `k` sits at gray level `k·delta`.
    pub fn bin_indexed(values: &[f64], delta: usize) -> Result<Self> {
        let points = values
            .iter()
            .enumerate()
            .map(|(k, &y)| CurvePoint {
                x: (k * delta) as u32,
                y,
            })
            .collect();
        Self::new(points, CurveDomain::BinIndexed { delta })
    }

    /// Values on the occupied bins `support` (increasing bin indices).
    pub fn support_indexed(support: &[usize], values: &[f64], delta: usize) -> Result<Self> {
        if support.len() != values.len() {
            return Err(Error::InvalidCurve { max: u32::MAX });
        }
        let points = support
            .iter()
            .zip(values)
            .map(|(&k, &y)| CurvePoint {
                x: (k * delta) as u32,
                y,
            })
            .collect();
        Self::new(points, CurveDomain::SupportIndexed { delta })
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn domain(&self) -> CurveDomain {
        self.domain
    }
}

/// A full-range lookup table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CalibratedCurve {
    lut: Vec<u16>,
}

impl CalibratedCurve {
    /// `lut` must have a power-of-two length no larger than `2^16`, with every
    /// entry below that length.
    pub fn new(lut: Vec<u16>) -> Result<Self> {
        let n = lut.len();
        if !n.is_power_of_two()
            || !(2..=1 << 16).contains(&n)
            || lut.iter().any(|&v| v as usize >= n)
        {
            return Err(Error::LutMismatch {
                expected: n.next_power_of_two().max(2),
                got: n,
            });
        }
        Ok(Self { lut })
    }

    pub(crate) fn from_lut(lut: Vec<u16>) -> Self {
        Self { lut }
    }

    pub fn lut(&self) -> &[u16] {
        &self.lut
    }

    pub fn len(&self) -> usize {
        self.lut.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lut.is_empty()
    }

    pub fn is_non_decreasing(&self) -> bool {
        self.lut.windows(2).all(|w| w[0] <= w[1])
    }

    pub fn distinct_values(&self) -> usize {
        let mut seen = vec![false; self.lut.len()];
        for &v in &self.lut {
            seen[v as usize] = true;
        }
        seen.into_iter().filter(|&s| s).count()
    }

    /// Writes `x,lut[x]` rows with a header.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "x,lut")?;
        for (x, v) in self.lut.iter().enumerate() {
            writeln!(out, "{x},{v}")?;
        }
        Ok(())
    }
}

/// Rounds half up and clamps into `[0, max]`.
pub fn quantize(y: f64, max: u16) -> u16 {
    let r = (y + 0.5).floor();
    if r.is_nan() || r <= 0.0 {
        0
    } else if r >= max as f64 {
        max
    } else {
        r as u16
    }
}

/// Linear completion and upsampling of `curve` to `2^bit_depth` entries.
pub fn calibrate(curve: &PartialCurve, bit_depth: u32) -> Result<CalibratedCurve> {
    let levels = 1usize << bit_depth;
    let max = (levels - 1) as u16;
    let pts = curve.points();
    let (first, last) = match (pts.first(), pts.last()) {
        (Some(f), Some(l)) => (*f, *l),
        _ => return Err(Error::EmptyCurve),
    };
    if last.x as usize >= levels {
        return Err(Error::InvalidCurve { max: max as u32 });
    }

    let mut lut = Vec::with_capacity(levels);
    let head = quantize(first.y, max);
    lut.resize(first.x as usize, head);
    for w in pts.windows(2) {
        let (a, b) = (w[0], w[1]);
        let span = (b.x - a.x) as f64;
        let slope = b.y - a.y;
        for x in a.x..b.x {
            let y = a.y + slope * (x - a.x) as f64 / span;
            lut.push(quantize(y, max));
        }
    }
    let tail = quantize(last.y, max);
    lut.resize(levels, tail);
    Ok(CalibratedCurve { lut })
}

/// Nearest-bin expansion `lut[x] = m(⌊x/Δ⌋)`.
pub fn naive_upsample_scheme1(curve: &PartialCurve, bit_depth: u32) -> Result<CalibratedCurve> {
    let CurveDomain::BinIndexed { delta } = curve.domain() else {
        return Err(Error::Scheme1Unsupported);
    };
    let levels = 1usize << bit_depth;
    let pts = curve.points();
    let covers_all = delta > 0
        && pts.len() * delta == levels
        && pts
            .iter()
            .enumerate()
            .all(|(k, p)| p.x as usize == k * delta);
    if !covers_all {
        return Err(Error::Scheme1Unsupported);
    }
    let max = (levels - 1) as u16;
    let lut = (0..levels)
        .map(|x| quantize(pts[x / delta].y, max))
        .collect();
    Ok(CalibratedCurve { lut })
}

/// `output(i, j) = lut[x(i, j)]`.
pub fn apply_curve(x: &GrayImage, curve: &CalibratedCurve) -> Result<GrayImage> {
    if curve.len() != x.levels() {
        return Err(Error::LutMismatch {
            expected: x.levels(),
            got: curve.len(),
        });
    }
    let lut = curve.lut();
    let data = match <&[u16; 256]>::try_from(lut) {
        // 8-bit pixels index a 256-entry table without bounds checks
        Ok(lut8) => x.data().iter().map(|&p| lut8[p as u8 as usize]).collect(),
        Err(_) => x.data().iter().map(|&p| lut[p as usize]).collect(),
    };
    Ok(GrayImage::from_parts(
        x.width(),
        x.height(),
        x.bit_depth(),
        data,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_points(a: (u32, f64), b: (u32, f64)) -> PartialCurve {
        PartialCurve::new(
            vec![CurvePoint { x: a.0, y: a.1 }, CurvePoint { x: b.0, y: b.1 }],
            CurveDomain::SupportIndexed { delta: 1 },
        )
        .unwrap()
    }

    #[test]
    fn identity_curves() {
        let values: Vec<f64> = (0..256).map(f64::from).collect();
        let full = PartialCurve::bin_indexed(&values, 1).unwrap();
        let lut = calibrate(&full, 8).unwrap();
        assert!(lut.lut().iter().enumerate().all(|(x, &v)| v as usize == x));

        let diag = calibrate(&two_points((0, 0.0), (255, 255.0)), 8).unwrap();
        assert_eq!(diag, lut);
    }

    #[test]
    fn interpolation_and_extension() {
        let lut = calibrate(&two_points((0, 0.0), (128, 255.0)), 8).unwrap();
        // 255 * 64 / 128 = 127.5, rounded half up
        assert_eq!(lut.lut()[64], 128);
        assert_eq!(lut.lut()[128], 255);
        assert_eq!(lut.lut()[200], 255);

        let lut = calibrate(&two_points((10, 40.0), (20, 60.0)), 8).unwrap();
        assert!(lut.lut()[..10].iter().all(|&v| v == 40));
        assert_eq!(lut.lut()[15], 50);
        assert!(lut.lut()[20..].iter().all(|&v| v == 60));
    }

    #[test]
    fn clamps_out_of_range_values() {
        let lut = calibrate(&two_points((0, -30.0), (255, 400.0)), 8).unwrap();
        assert_eq!(lut.lut()[0], 0);
        assert_eq!(lut.lut()[255], 255);
    }

    #[test]
    fn curve_validation() {
        assert!(matches!(
            PartialCurve::new(vec![], CurveDomain::BinIndexed { delta: 1 }),
            Err(Error::EmptyCurve)
        ));
        let dup = vec![CurvePoint { x: 3, y: 0.0 }, CurvePoint { x: 3, y: 1.0 }];
        assert!(PartialCurve::new(dup, CurveDomain::BinIndexed { delta: 1 }).is_err());
        let far = two_points((0, 0.0), (300, 1.0));
        assert!(calibrate(&far, 8).is_err());
    }

    #[test]
    fn scheme1_examples() {
        let m: Vec<f64> = (0..64).map(|k| 4.0 * k as f64).collect();
        let curve = PartialCurve::bin_indexed(&m, 4).unwrap();
        let stairs = naive_upsample_scheme1(&curve, 8).unwrap();
        for (x, &v) in stairs.lut().iter().enumerate() {
            assert_eq!(v as usize, 4 * (x / 4));
        }
        assert_eq!(stairs.distinct_values(), 64);
        assert!(calibrate(&curve, 8).unwrap().distinct_values() > 64);

        let ident: Vec<f64> = (0..256).map(|k| k as f64 * 0.7).collect();
        let c = PartialCurve::bin_indexed(&ident, 1).unwrap();
        assert_eq!(
            naive_upsample_scheme1(&c, 8).unwrap(),
            calibrate(&c, 8).unwrap()
        );

        let partial = PartialCurve::support_indexed(&[0, 5], &[0.0, 255.0], 4).unwrap();
        assert!(matches!(
            naive_upsample_scheme1(&partial, 8),
            Err(Error::Scheme1Unsupported)
        ));
    }

    #[test]
    fn apply_examples() {
        let x = GrayImage::from_u8(3, 1, &[0, 128, 255]).unwrap();
        let ident = CalibratedCurve::new((0..256).collect()).unwrap();
        assert_eq!(apply_curve(&x, &ident).unwrap(), x);

        let white = CalibratedCurve::new(vec![255; 256]).unwrap();
        assert!(apply_curve(&x, &white)
            .unwrap()
            .data()
            .iter()
            .all(|&v| v == 255));

        let neg = CalibratedCurve::new((0..256).map(|v| 255 - v).collect()).unwrap();
        assert_eq!(apply_curve(&x, &neg).unwrap().data(), &[255, 127, 0]);

        let short = CalibratedCurve::new(vec![0; 16]).unwrap();
        assert!(matches!(
            apply_curve(&x, &short),
            Err(Error::LutMismatch {
                expected: 256,
                got: 16
            })
        ));
    }

    #[test]
    fn csv_dump() {
        let lut = CalibratedCurve::new(vec![0, 1, 1, 3]).unwrap();
        let mut buf = Vec::new();
        lut.write_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "x,lut\n0,0\n1,1\n2,1\n3,3\n"
        );
    }

    fn monotone_curve() -> impl Strategy<Value = PartialCurve> {
        proptest::collection::btree_map(0u32..256, 0.0f64..4.0, 1..40).prop_map(|m| {
            let mut y = -20.0;
            let points = m
                .into_iter()
                .map(|(x, dy)| {
                    y += dy * 10.0;
                    CurvePoint { x, y }
                })
                .collect();
            PartialCurve::new(points, CurveDomain::SupportIndexed { delta: 1 }).unwrap()
        })
    }

    proptest! {
        #[test]
        fn calibrate_monotone_exact_in_range(curve in monotone_curve()) {
            let lut = calibrate(&curve, 8).unwrap();
            prop_assert_eq!(lut.len(), 256);
            prop_assert!(lut.is_non_decreasing());
            prop_assert!(lut.lut().iter().all(|&v| v <= 255));
            for p in curve.points() {
                prop_assert_eq!(lut.lut()[p.x as usize], quantize(p.y, 255));
            }
        }
    }
}
