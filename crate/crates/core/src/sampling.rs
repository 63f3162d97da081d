//! Spatial decimation and quantized (global and blockwise) histograms.
//!
//! Decimation keeps pixel `(s·i, s·j)` for `i < ⌊M/s⌋`, `j < ⌊N/s⌋`. Gray
//! levels are quantized into `N_g` bins of width `Δ = 2^B / N_g`, with `N_g`
//! a power of two so `Δ` is exact. The `downsampled_*` functions fuse the
//! decimation into the histogram pass and never materialize the small image.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imageio::GrayImage;

/// Non-overlapping block partition, `blocks_y` rows by `blocks_x` columns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BlockGrid {
    pub blocks_y: usize,
    pub blocks_x: usize,
}

impl BlockGrid {
    pub const fn new(blocks_y: usize, blocks_x: usize) -> Self {
        Self { blocks_y, blocks_x }
    }

    pub fn count(&self) -> usize {
        self.blocks_y * self.blocks_x
    }
}

impl Default for BlockGrid {
    fn default() -> Self {
        Self::new(8, 8)
    }
}

impl fmt::Display for BlockGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}", self.blocks_y, self.blocks_x)
    }
}

impl FromStr for BlockGrid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (y, x) = s
            .split_once(['x', 'X'])
            .ok_or_else(|| format!("expected <blocks_y>x<blocks_x>, got {s:?}"))?;
        let parse = |t: &str| {
            t.trim()
                .parse::<usize>()
                .ok()
                .filter(|&v| v > 0)
                .ok_or_else(|| format!("invalid block count {t:?}"))
        };
        Ok(Self::new(parse(y)?, parse(x)?))
    }
}

/// Quantized gray-level histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    bins: Vec<u64>,
    delta: usize,
    total: u64,
}

impl Histogram {
    /// Builds a histogram from raw counts; `delta` is the quantization step.
    pub fn from_counts(bins: Vec<u64>, delta: usize) -> Self {
        let total = bins.iter().sum();
        Self { bins, delta, total }
    }

    pub fn bins(&self) -> &[u64] {
        &self.bins
    }

    pub fn n_bins(&self) -> usize {
        self.bins.len()
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn total(&self) -> u64 {
        self.total
    }
}

/// Validates `n_g` against a `levels`-level image and returns `log2(Δ)`.
pub fn quantization_shift(n_g: usize, levels: usize) -> Result<u32> {
    if n_g < 2 || n_g > levels || !n_g.is_power_of_two() {
        return Err(Error::InvalidBinCount {
            got: n_g,
            max: levels,
        });
    }
    Ok((levels / n_g).trailing_zeros())
}

fn decimated_dims(x: &GrayImage, s: usize) -> Result<(usize, usize)> {
    let bad = Error::InvalidStep {
        step: s,
        width: x.width(),
        height: x.height(),
    };
    if s == 0 {
        return Err(bad);
    }
    let (h, w) = (x.height() / s, x.width() / s);
    if h == 0 || w == 0 {
        return Err(bad);
    }
    Ok((h, w))
}

/// Uniform decimation with integer step `s`.
pub fn spatial_downsample(x: &GrayImage, s: usize) -> Result<GrayImage> {
    let (h, w) = decimated_dims(x, s)?;
    let mut data = Vec::with_capacity(h * w);
    for i in 0..h {
        let row = x.row(s * i);
        data.extend(row.iter().step_by(s).take(w));
    }
    Ok(GrayImage::from_parts(w, h, x.bit_depth(), data))
}

/// Histogram of `x` with `n_g` bins.
pub fn histogram(x: &GrayImage, n_g: usize) -> Result<Histogram> {
    let shift = quantization_shift(n_g, x.levels())?;
    let mut bins = vec![0u64; n_g];
    for &p in x.data() {
        bins[(p >> shift) as usize] += 1;
    }
    Ok(Histogram {
        bins,
        delta: 1 << shift,
        total: x.len() as u64,
    })
}

/// Equivalent to `histogram(&spatial_downsample(x, s)?, n_g)`.
pub fn downsampled_histogram(x: &GrayImage, s: usize, n_g: usize) -> Result<Histogram> {
    if s == 1 {
        return histogram(x, n_g);
    }
    let shift = quantization_shift(n_g, x.levels())?;
    let (h, w) = decimated_dims(x, s)?;
    let mut bins = vec![0u64; n_g];
    for i in 0..h {
        for &p in x.row(s * i).iter().step_by(s).take(w) {
            bins[(p >> shift) as usize] += 1;
        }
    }
    Ok(Histogram {
        bins,
        delta: 1 << shift,
        total: (h * w) as u64,
    })
}

/// Blockwise histograms, normalized so the whole matrix sums to one.
///
/// Row `b` holds block `b` in row-major block order; entry `(b, k)` is the
/// number of pixels of block `b` in bin `k` divided by the total pixel count.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockHistogramMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
    grid: BlockGrid,
    delta: usize,
}

impl BlockHistogramMatrix {
    /// Builds a matrix from already-normalized row-major entries.
    pub fn from_entries(
        grid: BlockGrid,
        cols: usize,
        delta: usize,
        entries: Vec<f64>,
    ) -> Result<Self> {
        let rows = grid.count();
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::InvalidImage(format!(
                "block histogram matrix needs {rows}x{cols} entries, got {}",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
            grid,
            delta,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn grid(&self) -> BlockGrid {
        self.grid
    }

    pub fn delta(&self) -> usize {
        self.delta
    }

    pub fn get(&self, block: usize, bin: usize) -> f64 {
        self.entries[block * self.cols + bin]
    }

    pub fn row(&self, block: usize) -> &[f64] {
        &self.entries[block * self.cols..(block + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    /// Per-bin mass summed over all blocks.
    pub fn column_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.cols];
        for row in self.entries.chunks_exact(self.cols) {
            for (s, v) in sums.iter_mut().zip(row) {
                *s += v;
            }
        }
        sums
    }
}

// Maps each coordinate along an axis of length `len` to its block; the last
// block absorbs the remainder.
fn block_index(len: usize, blocks: usize) -> Vec<usize> {
    let size = len / blocks;
    (0..len).map(|i| (i / size).min(blocks - 1)).collect()
}

pub fn block_histograms(
    x: &GrayImage,
    n_g: usize,
    grid: BlockGrid,
) -> Result<BlockHistogramMatrix> {
    downsampled_block_histograms(x, 1, n_g, grid)
}

/// Equivalent to `block_histograms(&spatial_downsample(x, s)?, n_g, grid)`.
pub fn downsampled_block_histograms(
    x: &GrayImage,
    s: usize,
    n_g: usize,
    grid: BlockGrid,
) -> Result<BlockHistogramMatrix> {
    let shift = quantization_shift(n_g, x.levels())?;
    let (h, w) = decimated_dims(x, s)?;
    if grid.blocks_y == 0 || grid.blocks_x == 0 || grid.blocks_y > h || grid.blocks_x > w {
        return Err(Error::InvalidGrid {
            blocks_y: grid.blocks_y,
            blocks_x: grid.blocks_x,
            width: w,
            height: h,
        });
    }
    let row_block = block_index(h, grid.blocks_y);
    let col_block = block_index(w, grid.blocks_x);
    let mut counts = vec![0u32; grid.count() * n_g];
    for (i, &by) in row_block.iter().enumerate() {
        let row = x.row(s * i);
        let base = by * grid.blocks_x;
        for (&p, &bx) in row.iter().step_by(s).zip(&col_block) {
            counts[(base + bx) * n_g + (p >> shift) as usize] += 1;
        }
    }
    let total = (h * w) as f64;
    Ok(BlockHistogramMatrix {
        rows: grid.count(),
        cols: n_g,
        entries: counts.into_iter().map(|c| c as f64 / total).collect(),
        grid,
        delta: 1 << shift,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |i, j| (i * w + j) as u8)
    }

    #[test]
    fn downsample_examples() {
        let x = ramp(4, 4);
        assert_eq!(spatial_downsample(&x, 1).unwrap(), x);
        assert_eq!(spatial_downsample(&x, 2).unwrap().data(), &[0, 2, 8, 10]);

        let y = ramp(5, 5);
        let d = spatial_downsample(&y, 2).unwrap();
        assert_eq!((d.width(), d.height()), (2, 2));
        // rows/cols {0, 2} of a 5-wide ramp
        assert_eq!(d.data(), &[0, 2, 10, 12]);

        assert!(matches!(
            spatial_downsample(&x, 5),
            Err(Error::InvalidStep { step: 5, .. })
        ));
        assert!(spatial_downsample(&x, 0).is_err());
    }

    #[test]
    fn histogram_examples() {
        let zeros = GrayImage::from_fn(3, 2, |_, _| 0);
        for n_g in [2, 16, 256] {
            let h = histogram(&zeros, n_g).unwrap();
            assert_eq!(h.bins()[0], 6);
            assert!(h.bins()[1..].iter().all(|&c| c == 0));
        }

        let x = GrayImage::from_u8(2, 2, &[0, 63, 128, 255]).unwrap();
        let h = histogram(&x, 64).unwrap();
        assert_eq!(h.delta(), 4);
        for (k, &c) in h.bins().iter().enumerate() {
            assert_eq!(c, u64::from([0, 15, 32, 63].contains(&k)), "bin {k}");
        }

        let exact = histogram(&x, 256).unwrap();
        for (k, &c) in exact.bins().iter().enumerate() {
            assert_eq!(c, u64::from([0, 63, 128, 255].contains(&k)));
        }
    }

    #[test]
    fn rejects_bad_bin_counts() {
        let x = ramp(4, 4);
        for n_g in [0, 1, 3, 100, 512] {
            let err = histogram(&x, n_g).unwrap_err();
            assert!(err.to_string().starts_with("n_g must be a power of two"));
        }
    }

    #[test]
    fn block_histogram_examples() {
        let x = ramp(4, 4);
        let one = block_histograms(&x, 64, BlockGrid::new(1, 1)).unwrap();
        let h = histogram(&x, 64).unwrap();
        for k in 0..64 {
            assert_eq!(one.get(0, k), h.bins()[k] as f64 / 16.0);
        }

        let four = block_histograms(&x, 256, BlockGrid::new(2, 2)).unwrap();
        assert_eq!(four.rows(), 4);
        for b in 0..4 {
            assert_eq!(four.row(b).iter().sum::<f64>(), 0.25);
        }
        // top-right block holds 2, 3, 6, 7
        for v in [2, 3, 6, 7] {
            assert_eq!(four.get(1, v), 1.0 / 16.0);
        }
        assert!(block_histograms(&x, 256, BlockGrid::new(5, 1)).is_err());
    }

    #[test]
    fn remainder_absorbed_by_last_block() {
        let x = ramp(5, 5);
        let m = block_histograms(&x, 256, BlockGrid::new(2, 2)).unwrap();
        // last block is 3x3 (rows 2..5, cols 2..5)
        assert_eq!(m.row(3).iter().sum::<f64>(), 9.0 / 25.0);
        assert_eq!(m.row(0).iter().sum::<f64>(), 4.0 / 25.0);
    }

    #[test]
    fn grid_parsing() {
        assert_eq!("8x8".parse::<BlockGrid>().unwrap(), BlockGrid::new(8, 8));
        assert_eq!("4X2".parse::<BlockGrid>().unwrap(), BlockGrid::new(4, 2));
        assert!("0x2".parse::<BlockGrid>().is_err());
        assert!("8".parse::<BlockGrid>().is_err());
    }

    fn image_strategy() -> impl Strategy<Value = GrayImage> {
        (1usize..24, 1usize..24).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |d| GrayImage::from_u8(w, h, &d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn mass_and_coarsening(x in image_strategy(), log_ng in 1u32..=8) {
            let n_g = 1usize << log_ng;
            let fine = histogram(&x, 256).unwrap();
            let coarse = histogram(&x, n_g).unwrap();
            prop_assert_eq!(coarse.bins().iter().sum::<u64>(), x.len() as u64);
            prop_assert_eq!(coarse.total(), x.len() as u64);
            let delta = 256 / n_g;
            for (k, &c) in coarse.bins().iter().enumerate() {
                prop_assert_eq!(c, fine.bins()[k * delta..(k + 1) * delta].iter().sum::<u64>());
            }
        }

        #[test]
        fn fused_matches_materialized(x in image_strategy(), s in 1usize..5, log_ng in 1u32..=8) {
            let n_g = 1usize << log_ng;
            match spatial_downsample(&x, s) {
                Ok(d) => {
                    prop_assert_eq!(downsampled_histogram(&x, s, n_g).unwrap(), histogram(&d, n_g).unwrap());
                    let grid = BlockGrid::new(d.height().min(3), d.width().min(2));
                    prop_assert_eq!(
                        downsampled_block_histograms(&x, s, n_g, grid).unwrap(),
                        block_histograms(&d, n_g, grid).unwrap()
                    );
                }
                Err(_) => prop_assert!(downsampled_histogram(&x, s, n_g).is_err()),
            }
        }

        #[test]
        fn downsample_composes(w in 1usize..5, h in 1usize..5, s1 in 1usize..4, s2 in 1usize..4, seed in any::<u8>()) {
            let (w, h) = (w * s1 * s2, h * s1 * s2);
            let x = GrayImage::from_fn(w, h, |i, j| (i * 31 + j * 7) as u8 ^ seed);
            let once = spatial_downsample(&x, s1 * s2).unwrap();
            let twice = spatial_downsample(&spatial_downsample(&x, s1).unwrap(), s2).unwrap();
            prop_assert_eq!(once, twice);
        }

        #[test]
        fn block_matrix_normalized(x in image_strategy(), by in 1usize..5, bx in 1usize..5) {
            let grid = BlockGrid::new(by.min(x.height()), bx.min(x.width()));
            let m = block_histograms(&x, 256, grid).unwrap();
            prop_assert!((m.entries().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            let global = histogram(&x, 256).unwrap();
            for (k, s) in m.column_sums().iter().enumerate() {
                prop_assert!((s - global.bins()[k] as f64 / x.len() as f64).abs() < 1e-12);
            }
        }
    }
}
