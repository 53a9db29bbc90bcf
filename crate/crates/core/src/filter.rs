//! Truncated Gaussian kernels and separable zero-padded convolution.

use crate::geometry::ScalarField;

/// Half-width of a Gaussian kernel truncated at three standard deviations.
pub fn gaussian_radius(sigma: f64) -> usize {
    (3.0 * sigma).ceil() as usize
}

/// Unnormalized taps `exp(-x^2 / 2 sigma^2)` for `x` in `-radius..=radius`.
pub fn gaussian_taps(sigma: f64) -> Vec<f64> {
    let radius = gaussian_radius(sigma) as i64;
    let denom = 2.0 * sigma * sigma;
    (-radius..=radius)
        .map(|x| (-((x * x) as f64) / denom).exp())
        .collect()
}

/// 1D Gaussian kernel truncated at 3 sigma, normalized to unit sum.
pub fn gaussian_kernel_1d(sigma: f64) -> Vec<f64> {
    let mut taps = gaussian_taps(sigma);
    let total: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= total);
    taps
}

/// Separable Gaussian blur with zero padding. `sigma <= 0` returns a copy.
pub fn gaussian_blur(field: &ScalarField, sigma: f64) -> ScalarField {
    if !(sigma > 0.0) {
        return field.clone();
    }
    let kernel = gaussian_kernel_1d(sigma);
    let (h, w) = field.dims();
    let mut tmp = ScalarField::zeros(h, w);
    for r in 0..h {
        convolve_zero_padded(field.row(r), &kernel, |c, v| tmp[(r, c)] = v);
    }
    let mut out = ScalarField::zeros(h, w);
    let mut column = vec![0.0; h];
    for c in 0..w {
        for (r, slot) in column.iter_mut().enumerate() {
            *slot = tmp[(r, c)];
        }
        convolve_zero_padded(&column, &kernel, |r, v| out[(r, c)] = v);
    }
    out
}

fn convolve_zero_padded(
    input: &[f64],
    kernel: &[f64],
    mut emit: impl FnMut(usize, f64),
) {
    let n = input.len();
    let radius = (kernel.len() / 2) as i64;
    for i in 0..n as i64 {
        let mut acc = 0.0;
        for (k, &weight) in kernel.iter().enumerate() {
            let j = i + k as i64 - radius;
            if j >= 0 && j < n as i64 {
                acc += weight * input[j as usize];
            }
        }
        emit(i as usize, acc);
    }
}
