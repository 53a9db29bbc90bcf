//! Coding-quality criteria: entropy of the non-zero values, reversibility
//! (fraction of coding mass inside a mask around the true centers) and the
//! squared L2 distance between maps.

use crate::error::{Error, Result};
use crate::geometry::{check_dims, dilate_disk, pairwise_sum, BinaryMask, CenterSet, ScalarField};

pub const DEFAULT_BIN_COUNT: usize = 8;
pub const DEFAULT_DILATION_DIAMETER: f64 = 5.0;

/// Entropy and reversibility of one coding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingQuality {
    pub entropy_bits: f64,
    pub reversibility: f64,
    pub reversibility_dilated: f64,
    pub bin_count: usize,
    pub dilation_diameter: f64,
}

impl CodingQuality {
    pub fn measure(
        field: &ScalarField,
        labels: &CenterSet,
        bin_count: usize,
        dilation_diameter: f64,
    ) -> Result<Self> {
        Ok(Self {
            entropy_bits: coding_entropy(field, bin_count),
            reversibility: reversibility(field, &BinaryMask::from_centers(labels))?,
            reversibility_dilated: reversibility_dilated(field, labels, dilation_diameter)?,
            bin_count,
            dilation_diameter,
        })
    }
}

/// Base-2 Shannon entropy of the histogram of strictly positive values over
/// `bin_count` equal-width bins spanning `(0, max]`.
///
/// Bin `i` holds values in `(i * max / n, (i + 1) * max / n]`. Fields with no
/// positive value, or a single distinct positive value, have zero entropy.
pub fn coding_entropy(field: &ScalarField, bin_count: usize) -> f64 {
    let bin_count = bin_count.max(2);
    let positive = || field.values().iter().copied().filter(|&v| v > 0.0);
    let Some(max) = positive().reduce(f64::max) else {
        return 0.0;
    };
    if positive().all(|v| v == max) {
        return 0.0;
    }

    let mut hist = vec![0usize; bin_count];
    let mut total = 0usize;
    for v in positive() {
        let scaled = (v / max) * bin_count as f64;
        let bin = (scaled.ceil() as usize).clamp(1, bin_count) - 1;
        hist[bin] += 1;
        total += 1;
    }
    let total = total as f64;
    hist.iter()
        .filter(|&&n| n > 0)
        .map(|&n| {
            let p = n as f64 / total;
            -p * p.log2()
        })
        .sum()
}

/// Fraction of the field's total mass lying inside `mask`.
pub fn reversibility(field: &ScalarField, mask: &BinaryMask) -> Result<f64> {
    check_dims(field.dims(), mask.dims())?;
    let total = field.sum();
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let inside: Vec<f64> = field
        .values()
        .iter()
        .zip(mask.bits())
        .map(|(&v, &m)| if m { v } else { 0.0 })
        .collect();
    Ok(pairwise_sum(&inside) / total)
}

/// Reversibility against the labels dilated by a disk of `diameter` pixels.
pub fn reversibility_dilated(field: &ScalarField, labels: &CenterSet, diameter: f64) -> Result<f64> {
    let mask = dilate_disk(labels, diameter)?;
    reversibility(field, &mask)
}

/// Sum of squared per-pixel differences.
pub fn l2_distance(a: &ScalarField, b: &ScalarField) -> Result<f64> {
    check_dims(a.dims(), b.dims())?;
    let sq: Vec<f64> = a
        .values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y) * (x - y))
        .collect();
    Ok(pairwise_sum(&sq))
}
