//! Histogram equalization, naive and accelerated.
//!
//! Both map a pixel through the gray-level CDF: `Y = round((2^B − 1)·c(X))`.
//! The accelerated form estimates the CDF from a decimated image with `N_g`
//! bins and recovers the full-range map with [`calibrate`].

use crate::error::{Error, Result};
use crate::imageio::GrayImage;
use crate::mapping::{apply_curve, calibrate, quantize, CalibratedCurve, PartialCurve};
use crate::sampling::{downsampled_histogram, histogram, Histogram};

/// Cumulative distribution over histogram bins.
#[derive(Debug, Clone, PartialEq)]
pub struct CdfCurve {
    values: Vec<f64>,
}

impl CdfCurve {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn cdf(h: &Histogram) -> Result<CdfCurve> {
    if h.total() == 0 {
        return Err(Error::EmptyHistogram);
    }
    let total = h.total() as f64;
    let mut acc = 0u64;
    let values = h
        .bins()
        .iter()
        .map(|&c| {
            acc += c;
            acc as f64 / total
        })
        .collect();
    Ok(CdfCurve { values })
}

/// Lookup table of plain histogram equalization.
pub fn he_lut(x: &GrayImage) -> Result<CalibratedCurve> {
    if x.is_empty() {
        return Err(Error::EmptyImage);
    }
    let c = cdf(&histogram(x, x.levels())?)?;
    let max = x.max_value();
    let lut = c
        .values()
        .iter()
        .map(|&v| quantize(max as f64 * v, max))
        .collect();
    Ok(CalibratedCurve::from_lut(lut))
}

pub fn he(x: &GrayImage) -> Result<GrayImage> {
    apply_curve(x, &he_lut(x)?)
}

/// Lookup table of the accelerated equalization with step `s` and `n_g` bins.
pub fn fhe_lut(x: &GrayImage, s: usize, n_g: usize) -> Result<CalibratedCurve> {
    if x.is_empty() {
        return Err(Error::EmptyImage);
    }
    let h = downsampled_histogram(x, s, n_g)?;
    let c = cdf(&h)?;
    let max = x.max_value() as f64;
    let scaled: Vec<f64> = c.values().iter().map(|&v| max * v).collect();
    calibrate(
        &PartialCurve::bin_indexed(&scaled, h.delta())?,
        x.bit_depth(),
    )
}

pub fn fhe(x: &GrayImage, s: usize, n_g: usize) -> Result<GrayImage> {
    apply_curve(x, &fhe_lut(x, s, n_g)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::spatial_downsample;
    use proptest::prelude::*;

    #[test]
    fn cdf_examples() {
        let single = Histogram::from_counts(vec![5, 0, 0, 0], 64);
        assert_eq!(cdf(&single).unwrap().values(), &[1.0; 4]);

        let uniform = Histogram::from_counts(vec![3; 8], 32);
        for (k, &v) in cdf(&uniform).unwrap().values().iter().enumerate() {
            assert_eq!(v, (k + 1) as f64 / 8.0);
        }

        let h = Histogram::from_counts(vec![2, 0, 2, 0], 64);
        assert_eq!(cdf(&h).unwrap().values(), &[0.5, 0.5, 1.0, 1.0]);

        assert!(matches!(
            cdf(&Histogram::from_counts(vec![0; 4], 64)),
            Err(Error::EmptyHistogram)
        ));
    }

    #[test]
    fn constant_image_saturates() {
        let x = GrayImage::from_fn(16, 16, |_, _| 77);
        assert!(he(&x).unwrap().data().iter().all(|&v| v == 255));
        for (s, n_g) in [(1, 256), (2, 64), (8, 32), (16, 2)] {
            assert!(fhe(&x, s, n_g).unwrap().data().iter().all(|&v| v == 255));
        }
    }

    #[test]
    fn two_level_image() {
        let x = GrayImage::from_fn(4, 4, |i, _| if i % 2 == 0 { 0 } else { 255 });
        let y = he(&x).unwrap();
        // 255 * 0.5 = 127.5 rounds half up
        assert_eq!(y.pixel(0, 0), 128);
        assert_eq!(y.pixel(1, 0), 255);
    }

    #[test]
    fn uniform_histogram_is_nearly_fixed() {
        // Plain CDF mapping shifts levels up by at most one: with c(k) = (k+1)/256,
        // round(255 c(k)) is k+1 for k <= 127 and k above.
        let x = GrayImage::from_fn(256, 2, |_, j| j as u8);
        let lut = he_lut(&x).unwrap();
        for (k, &v) in lut.lut().iter().enumerate() {
            assert_eq!(v as usize, if k <= 127 { k + 1 } else { k });
        }
    }

    #[test]
    fn block_constant_image_matches_naive() {
        let x = GrayImage::from_fn(8, 8, |i, j| ((i / 2) * 37 + (j / 2) * 11) as u8);
        let d = spatial_downsample(&x, 2).unwrap();
        let naive = histogram(&x, 256).unwrap();
        let small = histogram(&d, 256).unwrap();
        for (a, b) in naive.bins().iter().zip(small.bins()) {
            assert_eq!(*a, 4 * b);
        }
        assert_eq!(fhe(&x, 2, 256).unwrap(), he(&x).unwrap());
    }

    #[test]
    fn empty_image_rejected() {
        let x = GrayImage::new(0, 0, 8, vec![]).unwrap();
        assert!(matches!(he(&x), Err(Error::EmptyImage)));
        assert!(fhe(&x, 1, 256).is_err());
    }

    fn image_strategy() -> impl Strategy<Value = GrayImage> {
        (1usize..40, 1usize..40).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |d| GrayImage::from_u8(w, h, &d).unwrap())
        })
    }

    proptest! {
        #[test]
        fn fhe_without_downsampling_is_he(x in image_strategy()) {
            prop_assert_eq!(fhe(&x, 1, 256).unwrap(), he(&x).unwrap());
        }

        #[test]
        fn luts_are_monotone(x in image_strategy(), s in 1usize..4, log_ng in 1u32..=8) {
            prop_assert!(he_lut(&x).unwrap().is_non_decreasing());
            if let Ok(lut) = fhe_lut(&x, s, 1 << log_ng) {
                prop_assert!(lut.is_non_decreasing());
                prop_assert!(lut.lut().iter().all(|&v| v <= 255));
            }
        }

        #[test]
        fn cdf_is_scale_free(counts in proptest::collection::vec(0u64..1000, 2..64), k in 1u64..50) {
            prop_assume!(counts.iter().any(|&c| c > 0));
            let a = cdf(&Histogram::from_counts(counts.clone(), 1)).unwrap();
            let b = cdf(&Histogram::from_counts(counts.iter().map(|c| c * k).collect(), 1)).unwrap();
            prop_assert_eq!(a, b);
        }
    }
}
