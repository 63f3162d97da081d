//! Deterministic synthetic test images.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::imageio::GrayImage;

/// Gray-level bands holding most of the mass of [`SyntheticKind::TwoPeak`].
pub const TWO_PEAK_BANDS: [(u8, u8); 2] = [(40, 55), (180, 195)];

/// Fraction of [`SyntheticKind::TwoPeak`] pixels drawn outside the bands.
const TWO_PEAK_OUTLIERS: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    /// Independent uniform pixels.
    UniformNoise,
    /// Two narrow peaks laid out in 16x16 cells, with sparse outliers.
    TwoPeak,
    /// Horizontal ramp from 0 to 255.
    SmoothGradient,
    /// Large dark region, a narrow bright peak and a smooth mid-tone ramp.
    HdrPeaky,
}

impl SyntheticKind {
    pub const ALL: [SyntheticKind; 4] = [
        SyntheticKind::UniformNoise,
        SyntheticKind::TwoPeak,
        SyntheticKind::SmoothGradient,
        SyntheticKind::HdrPeaky,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SyntheticKind::UniformNoise => "uniform-noise",
            SyntheticKind::TwoPeak => "two-peak",
            SyntheticKind::SmoothGradient => "smooth-gradient",
            SyntheticKind::HdrPeaky => "hdr-peaky",
        }
    }
}

impl fmt::Display for SyntheticKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SyntheticKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| format!("unknown synthetic kind {s:?}"))
    }
}

fn ramp(j: usize, width: usize) -> u8 {
    if width <= 1 {
        0
    } else {
        ((j * 255 * 2 + (width - 1)) / (2 * (width - 1))) as u8
    }
}

/// Generates an 8-bit image; identical seeds give identical images.
pub fn generate_synthetic(
    kind: SyntheticKind,
    width: usize,
    height: usize,
    seed: u64,
) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match kind {
        SyntheticKind::UniformNoise => GrayImage::from_fn(width, height, |_, _| rng.gen()),
        SyntheticKind::SmoothGradient => GrayImage::from_fn(width, height, |_, j| ramp(j, width)),
        SyntheticKind::TwoPeak => {
            let cells_x = width.div_ceil(16);
            let cells: Vec<usize> = (0..cells_x * height.div_ceil(16))
                .map(|_| rng.gen_range(0..2))
                .collect();
            GrayImage::from_fn(width, height, |i, j| {
                if rng.gen_bool(TWO_PEAK_OUTLIERS) {
                    rng.gen()
                } else {
                    let (lo, hi) = TWO_PEAK_BANDS[cells[(i / 16) * cells_x + j / 16]];
                    rng.gen_range(lo..=hi)
                }
            })
        }
        SyntheticKind::HdrPeaky => {
            let bright_row = rng.gen_range(0..height.max(1));
            GrayImage::from_fn(width, height, |i, j| {
                let u: f64 = rng.gen();
                if i.abs_diff(bright_row) < height / 10 + 1 {
                    rng.gen_range(235..=250)
                } else if j < width * 2 / 3 {
                    // exponential tail concentrated near black
                    (4.0 - 6.0 * (1.0 - u).ln()).min(255.0) as u8
                } else {
                    ramp(j, width).saturating_add(rng.gen_range(0..4))
                }
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_is_a_ramp() {
        let g = generate_synthetic(SyntheticKind::SmoothGradient, 256, 1, 0);
        for j in 0..256 {
            assert_eq!(g.pixel(0, j) as usize, j);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        for kind in SyntheticKind::ALL {
            let a = generate_synthetic(kind, 40, 30, 99);
            assert_eq!(a, generate_synthetic(kind, 40, 30, 99));
            assert_eq!((a.width(), a.height()), (40, 30));
        }
        assert_ne!(
            generate_synthetic(SyntheticKind::UniformNoise, 40, 30, 1),
            generate_synthetic(SyntheticKind::UniformNoise, 40, 30, 2)
        );
    }

    #[test]
    fn two_peak_mass_in_bands() {
        for seed in 0..5 {
            let x = generate_synthetic(SyntheticKind::TwoPeak, 128, 96, seed);
            let inside = x
                .data()
                .iter()
                .filter(|&&p| {
                    TWO_PEAK_BANDS
                        .iter()
                        .any(|&(lo, hi)| (lo as u16..=hi as u16).contains(&p))
                })
                .count();
            assert!(
                inside as f64 >= 0.8 * x.len() as f64,
                "{inside} of {}",
                x.len()
            );
        }
    }

    #[test]
    fn kind_names_round_trip() {
        for kind in SyntheticKind::ALL {
            assert_eq!(kind.name().parse::<SyntheticKind>().unwrap(), kind);
        }
        assert!("stripes".parse::<SyntheticKind>().is_err());
    }
}
