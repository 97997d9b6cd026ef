//! Separable Gaussian smoothing with symmetric (`abc|cba`) border reflection.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::types::{FloatImage, GrayImage};

/// Normalized symmetric 1-D kernel of `2 * radius + 1` taps.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1D {
    radius: usize,
    weights: Vec<f64>,
}

impl Kernel1D {
    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` and normalized to unit sum.
pub fn gaussian_kernel(sigma: f64) -> Result<Kernel1D> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::NonPositiveSigma(sigma));
    }
    let radius = (3.0 * sigma).ceil() as usize;
    let denom = 2.0 * sigma * sigma;
    let mut weights: Vec<f64> = (0..=2 * radius)
        .map(|i| {
            let k = i as f64 - radius as f64;
            (-k * k / denom).exp()
        })
        .collect();
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    // Mirror so the kernel is bit-for-bit symmetric.
    for k in 0..radius {
        weights[2 * radius - k] = weights[k];
    }
    Ok(Kernel1D { radius, weights })
}

/// Maps any integer coordinate into `[0, n)` by reflecting about the edges,
/// repeating the edge sample (`-1 -> 0`, `n -> n - 1`).
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

pub fn blur(img: &GrayImage, sigma: f64) -> Result<FloatImage> {
    blur_float(&img.to_float(), sigma)
}

/// Horizontal pass followed by a vertical pass.
pub fn blur_float(img: &FloatImage, sigma: f64) -> Result<FloatImage> {
    let kernel = gaussian_kernel(sigma)?;
    let (w, h) = (img.width(), img.height());
    let r = kernel.radius as isize;
    let weights = &kernel.weights;
    let src = img.data();

    // Precompute reflected column/row indices for each tap offset.
    let col_index: Vec<Vec<usize>> = (0..w as isize)
        .map(|x| (-r..=r).map(|k| reflect(x + k, w)).collect())
        .collect();
    let row_index: Vec<Vec<usize>> = (0..h as isize)
        .map(|y| (-r..=r).map(|k| reflect(y + k, h)).collect())
        .collect();

    let mut horizontal = vec![0.0; w * h];
    horizontal
        .par_chunks_mut(w)
        .enumerate()
        .for_each(|(y, row)| {
            let line = &src[y * w..(y + 1) * w];
            for (x, out) in row.iter_mut().enumerate() {
                *out = col_index[x]
                    .iter()
                    .zip(weights)
                    .map(|(&xi, &wt)| wt * line[xi])
                    .sum();
            }
        });

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (&yi, &wt) in row_index[y].iter().zip(weights) {
            let line = &horizontal[yi * w..(yi + 1) * w];
            for (o, &v) in row.iter_mut().zip(line) {
                *o += wt * v;
            }
        }
    });
    FloatImage::new(w, h, out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sigma_seven_has_radius_21() {
        let k = gaussian_kernel(7.0).unwrap();
        assert_eq!(k.radius(), 21);
        assert_eq!(k.weights().len(), 43);
    }

    #[test]
    fn rejects_non_positive_sigma() {
        for s in [0.0, -1.0, f64::NAN, f64::INFINITY] {
            assert!(matches!(
                gaussian_kernel(s),
                Err(Error::NonPositiveSigma(_))
            ));
        }
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        for sigma in [0.3, 1.0, 2.5, 7.0, 13.7] {
            let k = gaussian_kernel(sigma).unwrap();
            let sum: f64 = k.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-9);
            let r = k.radius();
            for d in 0..=r {
                assert_eq!(k.weights()[r - d], k.weights()[r + d]);
            }
        }
    }

    #[test]
    fn unit_sigma_center_weight_matches_closed_form() {
        // exp(0) / sum_{k=-3..3} exp(-k^2/2)
        let norm: f64 = (-3..=3).map(|k: i32| (-(k * k) as f64 / 2.0).exp()).sum();
        let k = gaussian_kernel(1.0).unwrap();
        assert_eq!(k.radius(), 3);
        assert!((k.weights()[3] - 1.0 / norm).abs() < 1e-15);
        assert!((k.weights()[3] - 0.399_050_279_652_454_9).abs() < 1e-12);
    }

    #[test]
    fn reflect_repeats_edge_sample() {
        assert_eq!(reflect(-1, 5), 0);
        assert_eq!(reflect(-2, 5), 1);
        assert_eq!(reflect(5, 5), 4);
        assert_eq!(reflect(6, 5), 3);
        assert_eq!(reflect(-7, 1), 0);
        assert_eq!(reflect(12, 3), 0);
    }

    #[test]
    fn constant_image_is_preserved() {
        let img = GrayImage::from_u8(9, 5, &[77; 45]).unwrap();
        let out = blur(&img, 2.0).unwrap();
        assert!(out.data().iter().all(|&v| (v - 77.0).abs() < 1e-9));
    }

    #[test]
    fn single_pixel_is_unchanged() {
        let img = GrayImage::from_u8(1, 1, &[42]).unwrap();
        let out = blur(&img, 7.0).unwrap();
        assert!((out.data()[0] - 42.0).abs() < 1e-12);
    }
}
