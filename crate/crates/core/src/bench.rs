//! Algorithm dispatch, corpus loading and the timing sweep.
//!
//! A sweep times every fast algorithm at every `(s, N_g)` cell on every
//! image, plus its naive counterpart once per image. Each timing is the
//! median of `repetitions` single-threaded runs after `warmup` discarded runs.

use std::fmt;
use std::hint::black_box;
use std::io;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use crate::error::{Error, Result};
use crate::he::{fhe, fhe_lut, he, he_lut};
use crate::imageio::{extract_luminance, read_image, recombine_luminance, GrayImage, Image};
use crate::mapping::CalibratedCurve;
use crate::sampling::{quantization_shift, BlockGrid};
use crate::smirank::{fsmirank, fsmirank_lut, smirank, smirank_lut};
use crate::synth::{generate_synthetic, SyntheticKind};

pub const CSV_HEADER: [&str; 10] = [
    "algorithm",
    "s",
    "ng",
    "alpha",
    "image_id",
    "width",
    "height",
    "wall_time_us",
    "mean_abs_diff",
    "max_abs_diff",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Algorithm {
    He,
    Fhe,
    Smirank,
    Fsmirank,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [
        Algorithm::He,
        Algorithm::Fhe,
        Algorithm::Smirank,
        Algorithm::Fsmirank,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::He => "he",
            Algorithm::Fhe => "fhe",
            Algorithm::Smirank => "smirank",
            Algorithm::Fsmirank => "fsmirank",
        }
    }

    pub fn is_fast(&self) -> bool {
        matches!(self, Algorithm::Fhe | Algorithm::Fsmirank)
    }

    /// The naive algorithm a fast one approximates; naive ones map to themselves.
    pub fn baseline(&self) -> Algorithm {
        match self {
            Algorithm::He | Algorithm::Fhe => Algorithm::He,
            Algorithm::Smirank | Algorithm::Fsmirank => Algorithm::Smirank,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| {
                format!("unknown algorithm {s:?} (expected he, fhe, smirank or fsmirank)")
            })
    }
}

/// Parameters shared by all four algorithms; each uses the subset it needs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnhanceParams {
    pub s: usize,
    pub n_g: usize,
    pub alpha: f64,
    pub grid: BlockGrid,
}

impl Default for EnhanceParams {
    fn default() -> Self {
        Self {
            s: crate::DEFAULT_STEP,
            n_g: crate::DEFAULT_BINS,
            alpha: crate::DEFAULT_ALPHA,
            grid: BlockGrid::default(),
        }
    }
}

pub fn run_gray(alg: Algorithm, x: &GrayImage, p: &EnhanceParams) -> Result<GrayImage> {
    match alg {
        Algorithm::He => he(x),
        Algorithm::Fhe => fhe(x, p.s, p.n_g),
        Algorithm::Smirank => smirank(x, p.alpha, p.grid),
        Algorithm::Fsmirank => fsmirank(x, p.s, p.n_g, p.alpha, p.grid),
    }
}

pub fn lut_for(alg: Algorithm, x: &GrayImage, p: &EnhanceParams) -> Result<CalibratedCurve> {
    match alg {
        Algorithm::He => he_lut(x),
        Algorithm::Fhe => fhe_lut(x, p.s, p.n_g),
        Algorithm::Smirank => smirank_lut(x, p.alpha, p.grid),
        Algorithm::Fsmirank => fsmirank_lut(x, p.s, p.n_g, p.alpha, p.grid),
    }
}

/// Enhances a gray image directly, or a color image through its value channel.
pub fn enhance(alg: Algorithm, img: &Image, p: &EnhanceParams) -> Result<Image> {
    match img {
        Image::Gray(g) => Ok(Image::Gray(run_gray(alg, g, p)?)),
        Image::Color(c) => {
            let v = run_gray(alg, &extract_luminance(c), p)?;
            Ok(Image::Color(recombine_luminance(c, &v)?))
        }
    }
}

/// Luminance plane of any image.
pub fn luminance(img: Image) -> GrayImage {
    match img {
        Image::Gray(g) => g,
        Image::Color(c) => extract_luminance(&c),
    }
}

/// Reads every `.pgm`/`.ppm` file in `dir` (sorted by name) as luminance.
pub fn load_corpus(dir: &Path) -> Result<Vec<(String, GrayImage)>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "pgm" | "ppm"))
        })
        .collect();
    paths.sort();
    paths
        .into_iter()
        .map(|p| {
            let id = p
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            Ok((id, luminance(read_image(&p)?)))
        })
        .collect()
}

/// `count` images cycling through every synthetic kind.
pub fn synthetic_corpus(
    count: usize,
    width: usize,
    height: usize,
    seed: u64,
) -> Vec<(String, GrayImage)> {
    (0..count)
        .map(|n| {
            let kind = SyntheticKind::ALL[n % SyntheticKind::ALL.len()];
            let s = seed.wrapping_add(n as u64);
            (
                format!("{kind}-{n:03}"),
                generate_synthetic(kind, width, height, s),
            )
        })
        .collect()
}

/// Median wall time of `f` in microseconds.
pub fn median_time_us<T>(warmup: usize, reps: usize, mut f: impl FnMut() -> T) -> f64 {
    for _ in 0..warmup {
        black_box(f());
    }
    let mut times: Vec<f64> = (0..reps.max(1))
        .map(|_| {
            let start = Instant::now();
            black_box(f());
            start.elapsed().as_secs_f64() * 1e6
        })
        .collect();
    times.sort_by(f64::total_cmp);
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        (times[n / 2 - 1] + times[n / 2]) / 2.0
    }
}

/// Mean and max absolute pixel difference.
pub fn abs_diff(a: &GrayImage, b: &GrayImage) -> (f64, u16) {
    let mut sum = 0u64;
    let mut max = 0u16;
    for (&p, &q) in a.data().iter().zip(b.data()) {
        let d = p.abs_diff(q);
        sum += d as u64;
        max = max.max(d);
    }
    (sum as f64 / a.len().max(1) as f64, max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRecord {
    pub algorithm: Algorithm,
    pub s: usize,
    pub n_g: usize,
    pub alpha: f64,
    pub image_id: String,
    pub width: usize,
    pub height: usize,
    /// Median over the timed repetitions.
    pub wall_time_us: f64,
    pub mean_abs_diff: f64,
    pub max_abs_diff: u16,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub s_values: Vec<usize>,
    pub n_g_values: Vec<usize>,
    pub algorithms: Vec<Algorithm>,
    pub repetitions: usize,
    pub warmup: usize,
    pub alpha: f64,
    pub grid: BlockGrid,
    pub corpus: Option<PathBuf>,
    /// Number of synthetic images added to the corpus.
    pub synthetic: usize,
    pub synthetic_size: (usize, usize),
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            s_values: vec![1, 4, 8, 16],
            n_g_values: vec![256, 128, 64, 32],
            algorithms: vec![Algorithm::Fhe, Algorithm::Fsmirank],
            repetitions: 5,
            warmup: 2,
            alpha: crate::DEFAULT_ALPHA,
            grid: BlockGrid::default(),
            corpus: None,
            synthetic: 0,
            synthetic_size: (1024, 768),
            seed: 0,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(&s) = self.s_values.iter().find(|&&s| s == 0) {
            return Err(Error::InvalidStep {
                step: s,
                width: 0,
                height: 0,
            });
        }
        for &n_g in &self.n_g_values {
            quantization_shift(n_g, 256)?;
        }
        if self.repetitions < 3 {
            return Err(Error::InvalidConfig(format!(
                "at least 3 repetitions are required, got {}",
                self.repetitions
            )));
        }
        if self.algorithms.is_empty() {
            return Err(Error::InvalidConfig("no algorithms selected".into()));
        }
        Ok(())
    }

    /// Corpus images followed by the configured synthetic images.
    pub fn load_images(&self) -> Result<Vec<(String, GrayImage)>> {
        let mut images = match &self.corpus {
            Some(dir) => load_corpus(dir)?,
            None => Vec::new(),
        };
        let (w, h) = self.synthetic_size;
        images.extend(synthetic_corpus(self.synthetic, w, h, self.seed));
        if images.is_empty() {
            return Err(Error::Io(io::Error::new(
                io::ErrorKind::NotFound,
                "sweep corpus is empty",
            )));
        }
        Ok(images)
    }
}

/// Runs the sweep. Naive rows come first per image, then fast rows in
/// `(algorithm, s, n_g)` order.
pub fn run_sweep(config: &SweepConfig, images: &[(String, GrayImage)]) -> Result<Vec<BenchRecord>> {
    config.validate()?;
    let mut baselines: Vec<Algorithm> = config.algorithms.iter().map(|a| a.baseline()).collect();
    baselines.sort();
    baselines.dedup();
    let fast: Vec<Algorithm> = config
        .algorithms
        .iter()
        .copied()
        .filter(Algorithm::is_fast)
        .collect();

    let mut records = Vec::new();
    for (id, x) in images {
        let record = |algorithm, s, n_g, wall_time_us, (mean_abs_diff, max_abs_diff)| BenchRecord {
            algorithm,
            s,
            n_g,
            alpha: config.alpha,
            image_id: id.clone(),
            width: x.width(),
            height: x.height(),
            wall_time_us,
            mean_abs_diff,
            max_abs_diff,
        };
        let mut naive_out = Vec::new();
        for &alg in &baselines {
            let p = EnhanceParams {
                s: 1,
                n_g: x.levels(),
                alpha: config.alpha,
                grid: config.grid,
            };
            let t = median_time_us(config.warmup, config.repetitions, || run_gray(alg, x, &p));
            naive_out.push((alg, run_gray(alg, x, &p)?));
            records.push(record(alg, 1, x.levels(), t, (0.0, 0)));
        }
        for &alg in &fast {
            let reference = &naive_out
                .iter()
                .find(|(a, _)| *a == alg.baseline())
                .expect("baseline computed")
                .1;
            for &s in &config.s_values {
                for &n_g in &config.n_g_values {
                    let p = EnhanceParams {
                        s,
                        n_g,
                        alpha: config.alpha,
                        grid: config.grid,
                    };
                    let y = run_gray(alg, x, &p)?;
                    let t =
                        median_time_us(config.warmup, config.repetitions, || run_gray(alg, x, &p));
                    records.push(record(alg, s, n_g, t, abs_diff(&y, reference)));
                }
            }
        }
    }
    Ok(records)
}

pub fn write_records_csv<W: io::Write>(records: &[BenchRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER).map_err(csv_err)?;
    for r in records {
        w.write_record([
            r.algorithm.name().to_string(),
            r.s.to_string(),
            r.n_g.to_string(),
            r.alpha.to_string(),
            r.image_id.clone(),
            r.width.to_string(),
            r.height.to_string(),
            format!("{:.3}", r.wall_time_us),
            format!("{:.6}", r.mean_abs_diff),
            r.max_abs_diff.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(io::Error::other(e))
}

/// Per-configuration aggregate over images.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub algorithm: Algorithm,
    pub s: usize,
    pub n_g: usize,
    pub images: usize,
    pub mean_wall_time_us: f64,
    pub median_wall_time_us: f64,
    pub mean_abs_diff: f64,
    /// Median over images of `baseline time / this time`.
    pub median_speedup: f64,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

pub fn summarize(records: &[BenchRecord]) -> Vec<SummaryRow> {
    let mut keys: Vec<(Algorithm, usize, usize)> =
        records.iter().map(|r| (r.algorithm, r.s, r.n_g)).collect();
    keys.dedup();
    let mut seen = Vec::new();
    keys.retain(|k| {
        let fresh = !seen.contains(k);
        seen.push(*k);
        fresh
    });

    keys.into_iter()
        .map(|(algorithm, s, n_g)| {
            let rows: Vec<&BenchRecord> = records
                .iter()
                .filter(|r| (r.algorithm, r.s, r.n_g) == (algorithm, s, n_g))
                .collect();
            let speedups = rows
                .iter()
                .filter_map(|r| {
                    records
                        .iter()
                        .find(|b| {
                            b.algorithm == algorithm.baseline()
                                && !b.algorithm.is_fast()
                                && b.image_id == r.image_id
                        })
                        .map(|b| b.wall_time_us / r.wall_time_us)
                })
                .collect();
            let n = rows.len() as f64;
            SummaryRow {
                algorithm,
                s,
                n_g,
                images: rows.len(),
                mean_wall_time_us: rows.iter().map(|r| r.wall_time_us).sum::<f64>() / n,
                median_wall_time_us: median(rows.iter().map(|r| r.wall_time_us).collect()),
                mean_abs_diff: rows.iter().map(|r| r.mean_abs_diff).sum::<f64>() / n,
                median_speedup: median(speedups),
            }
        })
        .collect()
}

pub fn write_summary_csv<W: io::Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "algorithm",
        "s",
        "ng",
        "images",
        "mean_wall_time_us",
        "median_wall_time_us",
        "mean_abs_diff",
        "median_speedup",
    ])
    .map_err(csv_err)?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.s.to_string(),
            r.n_g.to_string(),
            r.images.to_string(),
            format!("{:.3}", r.mean_wall_time_us),
            format!("{:.3}", r.median_wall_time_us),
            format!("{:.6}", r.mean_abs_diff),
            format!("{:.3}", r.median_speedup),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Soft check that fast-algorithm time does not grow as `N_g` shrinks (fixed
/// `s`) or as `s` grows (fixed `N_g`). Only images of at least 512x512 count.
pub fn trend_warnings(records: &[BenchRecord]) -> Vec<String> {
    let large: Vec<BenchRecord> = records
        .iter()
        .filter(|r| r.algorithm.is_fast() && r.width >= 512 && r.height >= 512)
        .cloned()
        .collect();
    let summary = summarize(&large);
    let mut warnings = Vec::new();
    for a in &summary {
        for b in &summary {
            if a.algorithm != b.algorithm {
                continue;
            }
            let coarser_bins = a.s == b.s && b.n_g < a.n_g;
            let larger_step = a.n_g == b.n_g && b.s > a.s;
            let adjacent = summary.iter().all(|c| {
                c.algorithm != a.algorithm
                    || !((coarser_bins && c.s == a.s && c.n_g < a.n_g && c.n_g > b.n_g)
                        || (larger_step && c.n_g == a.n_g && c.s > a.s && c.s < b.s))
            });
            if (coarser_bins || larger_step)
                && adjacent
                && b.median_wall_time_us > a.median_wall_time_us
            {
                warnings.push(format!(
                    "{}: median time rose from {:.1}us (s={}, ng={}) to {:.1}us (s={}, ng={})",
                    a.algorithm,
                    a.median_wall_time_us,
                    a.s,
                    a.n_g,
                    b.median_wall_time_us,
                    b.s,
                    b.n_g
                ));
            }
        }
    }
    warnings
}
