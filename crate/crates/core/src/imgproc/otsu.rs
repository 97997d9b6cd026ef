//! Otsu's global threshold over a 256-bin histogram.
//!
//! The between-class variance `w0 * w1 * (mu0 - mu1)^2` is compared exactly in
//! integer arithmetic, so plateaus and ties resolve to the first maximizing
//! bin regardless of floating-point rounding.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::types::{BitDepth, FloatImage, GrayImage};

pub const BINS: usize = 256;

/// Histogram bin of a raw intensity. 16-bit samples keep their high byte.
pub fn bin_of(value: u16, depth: BitDepth) -> usize {
    match depth {
        BitDepth::Eight => value.min(255) as usize,
        BitDepth::Sixteen => (value >> 8) as usize,
    }
}

/// Histogram bin of a filtered sample: rounded to the nearest intensity, clamped, then binned.
pub fn bin_of_float(value: f64, depth: BitDepth) -> usize {
    let level = value.round().clamp(0.0, depth.max_value() as f64) as u16;
    bin_of(level, depth)
}

pub fn histogram(img: &GrayImage) -> [u64; BINS] {
    let mut hist = [0u64; BINS];
    for &v in img.data() {
        hist[bin_of(v, img.depth())] += 1;
    }
    hist
}

pub fn histogram_float(img: &FloatImage, depth: BitDepth) -> [u64; BINS] {
    let mut hist = [0u64; BINS];
    for &v in img.data() {
        hist[bin_of_float(v, depth)] += 1;
    }
    hist
}

/// Threshold bin `t`; foreground is every pixel whose bin is `> t`.
pub fn otsu_threshold(region: &GrayImage) -> Result<u8> {
    otsu_from_histogram(&histogram(region))
}

// Above this total the squared numerators no longer fit in u128.
const MAX_PIXELS: u64 = 1 << 27;

/// Score proportional to the between-class variance, kept as the fraction
/// `numer / denom` with `numer = (s0 * N - S * n0)^2` and `denom = n0 * n1`.
#[derive(Clone, Copy)]
struct Score {
    numer: u128,
    denom: u128,
}

impl Score {
    fn cmp(&self, other: &Score) -> Ordering {
        // Compare quotients first, then remainders as cross products; both
        // remainders are below their denominators (< 2^54), so nothing overflows.
        let (q1, r1) = (self.numer / self.denom, self.numer % self.denom);
        let (q2, r2) = (other.numer / other.denom, other.numer % other.denom);
        q1.cmp(&q2)
            .then_with(|| (r1 * other.denom).cmp(&(r2 * self.denom)))
    }
}

pub fn otsu_from_histogram(hist: &[u64; BINS]) -> Result<u8> {
    let total: u64 = hist.iter().sum();
    if total > MAX_PIXELS {
        return Err(Error::RegionTooLarge(total));
    }
    if hist.iter().filter(|&&c| c > 0).count() < 2 {
        return Err(Error::DegenerateRegion);
    }
    let n = total as i128;
    let weighted_total: i128 = hist
        .iter()
        .enumerate()
        .map(|(i, &c)| i as i128 * c as i128)
        .sum();

    let mut best: Option<(usize, Score)> = None;
    let mut n0: i128 = 0;
    let mut s0: i128 = 0;
    for (t, &count) in hist.iter().enumerate().take(BINS - 1) {
        n0 += count as i128;
        s0 += t as i128 * count as i128;
        let n1 = n - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (s0 * n - weighted_total * n0).unsigned_abs();
        let score = Score {
            numer: diff * diff,
            denom: (n0 * n1) as u128,
        };
        match &best {
            Some((_, b)) if score.cmp(b) != Ordering::Greater => {}
            _ => best = Some((t, score)),
        }
    }
    // At least two occupied bins guarantee some split has both classes non-empty.
    Ok(best.expect("two occupied bins").0 as u8)
}
