//! Gray-level ranking enhancement over a spatial mutual-information graph.
//!
//! Pipeline, for an image split into `N_b` blocks:
//!
//! 1. Blockwise histograms `h_b(k)`, normalized by the total pixel count.
//! 2. Mutual information between occupied levels,
//!    `I(k,l) = Σ_b m·ln(m / (h_b(k)·h_b(l)))` with `m = min(h_b(k), h_b(l))`.
//! 3. `S` = column-normalized `I`, and the damped ranking
//!    `r = (1−α)(E − αS)⁻¹ v`, the stationary vector of
//!    `G = αS + (1−α)·o·vᵀ`.
//! 4. Output spacing: `y_1 = 0`, `y_k = y_{k−1} + Δ_{k−1,k}·(2^B−1)` with
//!    `Δ_{k−1,k} = (r_{k−1} + r_k)/2 + (r_1 + r_K)/(2(K−1))`, so `y_K = 2^B−1`.
//! 5. The partial map over occupied levels is completed and upsampled by
//!    [`calibrate`] and applied to the full-resolution image.
//!
//! The accelerated form runs steps 1–4 on a decimated image with `N_g` bins.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::mapping::{apply_curve, calibrate, CalibratedCurve, PartialCurve};
use crate::sampling::{
    block_histograms, downsampled_block_histograms, BlockGrid, BlockHistogramMatrix,
};

/// Mutual information between the occupied levels of a block histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct MutualInfoMatrix {
    support: Vec<usize>,
    entries: DMatrix<f64>,
}

impl MutualInfoMatrix {
    pub fn new(support: Vec<usize>, entries: DMatrix<f64>) -> Result<Self> {
        let k = support.len();
        if k == 0 || entries.shape() != (k, k) {
            return Err(Error::ZeroMatrix);
        }
        Ok(Self { support, entries })
    }

    /// Number of occupied levels, `K`.
    pub fn dim(&self) -> usize {
        self.support.len()
    }

    /// Occupied bin indices in increasing order.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }
}

/// Stationary ranking of the occupied gray levels.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    values: Vec<f64>,
    alpha: f64,
}

impl RankVector {
    /// Wraps externally computed rank values.
    pub fn new(values: Vec<f64>, alpha: f64) -> Self {
        Self { values, alpha }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

/// Output levels assigned to the support set.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelMapping {
    pub curve: PartialCurve,
    /// Set when fewer than two levels are occupied; the single level is then
    /// mapped to the top of the range.
    pub degenerate: bool,
}

pub fn mutual_information(h: &BlockHistogramMatrix) -> Result<MutualInfoMatrix> {
    mutual_information_with_log(h, f64::ln)
}

/// [`mutual_information`] with a caller-chosen logarithm. The log base only
/// rescales `I`, which column normalization cancels.
pub fn mutual_information_with_log(
    h: &BlockHistogramMatrix,
    log: impl Fn(f64) -> f64,
) -> Result<MutualInfoMatrix> {
    let support: Vec<usize> = h
        .column_sums()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m > 0.0)
        .map(|(k, _)| k)
        .collect();
    let k = support.len();
    if k == 0 {
        return Err(Error::ZeroMatrix);
    }
    let blocks = h.rows();
    // Column-major copy restricted to the support: columns[k] is level k over blocks.
    let mut columns = vec![0.0; k * blocks];
    for b in 0..blocks {
        let row = h.row(b);
        for (n, &bin) in support.iter().enumerate() {
            columns[n * blocks + b] = row[bin];
        }
    }

    let mut entries = DMatrix::zeros(k, k);
    for a in 0..k {
        let ca = &columns[a * blocks..(a + 1) * blocks];
        for c in a..k {
            let cc = &columns[c * blocks..(c + 1) * blocks];
            let mut acc = 0.0;
            for (&p, &q) in ca.iter().zip(cc) {
                if p > 0.0 && q > 0.0 {
                    // min·log(min/(p·q)) = −min·log(max)
                    acc -= p.min(q) * log(p.max(q));
                }
            }
            entries[(a, c)] = acc;
            entries[(c, a)] = acc;
        }
    }
    Ok(MutualInfoMatrix { support, entries })
}

/// Column-normalized `I`. Columns summing to zero become uniform `1/K`.
pub fn column_stochastic(mi: &MutualInfoMatrix) -> DMatrix<f64> {
    let k = mi.dim();
    let mut s = mi.entries().clone();
    for mut col in s.column_iter_mut() {
        let sum: f64 = col.iter().sum();
        if sum > 0.0 && sum.is_finite() {
            col /= sum;
        } else {
            col.fill(1.0 / k as f64);
        }
    }
    s
}

/// `G = αS + (1−α)·o·vᵀ` with `v` uniform.
pub fn transition_matrix(mi: &MutualInfoMatrix, alpha: f64) -> Result<DMatrix<f64>> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidDamping(alpha));
    }
    let k = mi.dim();
    if k == 0 {
        return Err(Error::ZeroMatrix);
    }
    let teleport = (1.0 - alpha) / k as f64;
    Ok(column_stochastic(mi).map(|v| alpha * v + teleport))
}

/// Solves `(E − αS)·r = (1−α)·v` for a column-stochastic `S`.
pub fn rank_vector(s: &DMatrix<f64>, alpha: f64) -> Result<RankVector> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidDamping(alpha));
    }
    let k = s.nrows();
    if k == 0 || s.ncols() != k {
        return Err(Error::ZeroMatrix);
    }
    let system = DMatrix::identity(k, k) - s * alpha;
    let rhs = DVector::from_element(k, (1.0 - alpha) / k as f64);
    let r = system.lu().solve(&rhs).ok_or(Error::Singular)?;
    Ok(RankVector {
        values: r.iter().copied().collect(),
        alpha,
    })
}

/// Assigns output levels to the support set from the rank vector.
///
/// `support` holds bin indices; bin `k` maps to gray level `k·delta`.
pub fn rank_to_mapping(
    r: &RankVector,
    support: &[usize],
    delta: usize,
    bit_depth: u32,
) -> Result<LevelMapping> {
    let r = r.values();
    if r.len() != support.len() || r.is_empty() {
        return Err(Error::EmptyCurve);
    }
    let top = ((1u32 << bit_depth) - 1) as f64;
    let k = r.len();
    if k == 1 {
        return Ok(LevelMapping {
            curve: PartialCurve::support_indexed(support, &[top], delta)?,
            degenerate: true,
        });
    }
    let ends = (r[0] + r[k - 1]) / (2.0 * (k - 1) as f64);
    let mut y = Vec::with_capacity(k);
    let mut acc = 0.0;
    y.push(acc);
    for w in r.windows(2) {
        acc += ((w[0] + w[1]) / 2.0 + ends) * top;
        y.push(acc);
    }
    Ok(LevelMapping {
        curve: PartialCurve::support_indexed(support, &y, delta)?,
        degenerate: false,
    })
}

/// Every intermediate of one ranking run.
#[derive(Debug, Clone)]
pub struct SmirankTrace {
    pub blocks: BlockHistogramMatrix,
    pub mutual_info: MutualInfoMatrix,
    pub stochastic: DMatrix<f64>,
    pub rank: RankVector,
    pub mapping: LevelMapping,
    pub lut: CalibratedCurve,
}

impl SmirankTrace {
    fn from_blocks(blocks: BlockHistogramMatrix, alpha: f64, bit_depth: u32) -> Result<Self> {
        let mutual_info = mutual_information(&blocks)?;
        let stochastic = column_stochastic(&mutual_info);
        let rank = rank_vector(&stochastic, alpha)?;
        let mapping = rank_to_mapping(&rank, mutual_info.support(), blocks.delta(), bit_depth)?;
        let lut = calibrate(&mapping.curve, bit_depth)?;
        Ok(Self {
            blocks,
            mutual_info,
            stochastic,
            rank,
            mapping,
            lut,
        })
    }

    /// Writes `mi.csv`, `stochastic.csv`, `rank.csv` and `lut.csv` into `dir`.
    pub fn write_csv_dir(&self, dir: &Path) -> io::Result<()> {
        std::fs::create_dir_all(dir)?;
        let support = self.mutual_info.support();
        write_matrix_csv(&dir.join("mi.csv"), support, self.mutual_info.entries())?;
        write_matrix_csv(&dir.join("stochastic.csv"), support, &self.stochastic)?;

        let mut out = BufWriter::new(File::create(dir.join("rank.csv"))?);
        writeln!(out, "bin,level,rank,output")?;
        for ((&bin, r), p) in support
            .iter()
            .zip(self.rank.values())
            .zip(self.mapping.curve.points())
        {
            writeln!(out, "{bin},{},{r},{}", p.x, p.y)?;
        }
        out.flush()?;

        let mut out = BufWriter::new(File::create(dir.join("lut.csv"))?);
        self.lut.write_csv(&mut out)?;
        out.flush()
    }
}

fn write_matrix_csv(path: &Path, support: &[usize], m: &DMatrix<f64>) -> io::Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "bin")?;
    for s in support {
        write!(out, ",{s}")?;
    }
    writeln!(out)?;
    for (i, s) in support.iter().enumerate() {
        write!(out, "{s}")?;
        for j in 0..support.len() {
            write!(out, ",{}", m[(i, j)])?;
        }
        writeln!(out)?;
    }
    out.flush()
}

fn check_nonempty(x: &GrayImage) -> Result<()> {
    if x.is_empty() {
        Err(Error::EmptyImage)
    } else {
        Ok(())
    }
}

pub fn smirank_trace(x: &GrayImage, alpha: f64, grid: BlockGrid) -> Result<SmirankTrace> {
    check_nonempty(x)?;
    let blocks = block_histograms(x, x.levels(), grid)?;
    SmirankTrace::from_blocks(blocks, alpha, x.bit_depth())
}

pub fn fsmirank_trace(
    x: &GrayImage,
    s: usize,
    n_g: usize,
    alpha: f64,
    grid: BlockGrid,
) -> Result<SmirankTrace> {
    check_nonempty(x)?;
    let blocks = downsampled_block_histograms(x, s, n_g, grid)?;
    SmirankTrace::from_blocks(blocks, alpha, x.bit_depth())
}

pub fn smirank_lut(x: &GrayImage, alpha: f64, grid: BlockGrid) -> Result<CalibratedCurve> {
    Ok(smirank_trace(x, alpha, grid)?.lut)
}

pub fn fsmirank_lut(
    x: &GrayImage,
    s: usize,
    n_g: usize,
    alpha: f64,
    grid: BlockGrid,
) -> Result<CalibratedCurve> {
    Ok(fsmirank_trace(x, s, n_g, alpha, grid)?.lut)
}

pub fn smirank(x: &GrayImage, alpha: f64, grid: BlockGrid) -> Result<GrayImage> {
    apply_curve(x, &smirank_lut(x, alpha, grid)?)
}

pub fn fsmirank(
    x: &GrayImage,
    s: usize,
    n_g: usize,
    alpha: f64,
    grid: BlockGrid,
) -> Result<GrayImage> {
    apply_curve(x, &fsmirank_lut(x, s, n_g, alpha, grid)?)
}
