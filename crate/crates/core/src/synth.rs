//! Synthetic label-only cell scenes and simulated prediction errors.
//!
//! All randomness comes from `ChaCha8Rng::seed_from_u64(seed)` (crate
//! `rand_chacha` 0.9, sampled through `rand` 0.9 and `rand_distr` 0.5), so a
//! scene or perturbation is fully determined by its spec.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{invalid, Error, Result};
use crate::filter::gaussian_blur;
use crate::geometry::{CenterSet, Point, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneSpec {
    pub height: usize,
    pub width: usize,
    pub n_cells: usize,
    /// Minimum distance between any two centers.
    pub min_spacing: f64,
    /// Fraction of cells placed as near-pairs with spacing in
    /// `[min_spacing, 2 * cell_radius)`.
    pub crowded_fraction: f64,
    pub cell_radius: f64,
    pub seed: u64,
}

impl SceneSpec {
    /// Attempt budget per cell before placement is declared infeasible.
    pub const RETRIES_PER_CELL: usize = 1000;

    pub fn n_pairs(&self) -> usize {
        let pairs = (self.crowded_fraction * self.n_cells as f64 / 2.0).round() as usize;
        pairs.min(self.n_cells / 2)
    }

    pub fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::EmptyGrid {
                height: self.height,
                width: self.width,
            });
        }
        if !(self.min_spacing >= 0.0 && self.min_spacing.is_finite()) {
            return Err(invalid("min_spacing", format!("must be >= 0, got {}", self.min_spacing)));
        }
        if !(0.0..=1.0).contains(&self.crowded_fraction) {
            return Err(invalid(
                "crowded_fraction",
                format!("must lie in [0, 1], got {}", self.crowded_fraction),
            ));
        }
        if !(self.cell_radius > 0.0 && self.cell_radius.is_finite()) {
            return Err(invalid("cell_radius", format!("must be > 0, got {}", self.cell_radius)));
        }
        if self.n_pairs() > 0 && self.min_spacing >= 2.0 * self.cell_radius {
            return Err(invalid(
                "min_spacing",
                format!(
                    "crowded pairs need min_spacing < 2 * cell_radius ({} >= {})",
                    self.min_spacing,
                    2.0 * self.cell_radius
                ),
            ));
        }
        Ok(())
    }
}

/// Places `n_cells` centers by rejection sampling: near-pairs first, then
/// isolated cells, all at least `min_spacing` apart.
pub fn generate_scene(spec: &SceneSpec) -> Result<CenterSet> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let budget = SceneSpec::RETRIES_PER_CELL * spec.n_cells;
    let mut attempts = 0usize;
    // Spacing >= 1 keeps centers distinct even when min_spacing is below one pixel.
    let min_sq = spec.min_spacing.max(1.0).powi(2);
    let pair_max = 2.0 * spec.cell_radius;
    let mut placed: Vec<Point> = Vec::with_capacity(spec.n_cells);

    let fits = |placed: &[Point], p: Point| placed.iter().all(|q| p.dist_sq(*q) as f64 >= min_sq);
    let exhausted = |placed: &[Point], attempts: usize, what: &str| Error::Placement {
        attempts,
        constraint: format!(
            "{what}: placed {} of {} cells with min_spacing {} on {}x{}",
            placed.len(),
            spec.n_cells,
            spec.min_spacing,
            spec.height,
            spec.width
        ),
    };

    for _ in 0..spec.n_pairs() {
        loop {
            if attempts >= budget {
                return Err(exhausted(&placed, attempts, "crowded pair placement"));
            }
            attempts += 1;
            let anchor = random_pixel(&mut rng, spec);
            if !fits(&placed, anchor) {
                continue;
            }
            let spacing = rng.random_range(spec.min_spacing..pair_max);
            let angle = rng.random_range(0.0..std::f64::consts::TAU);
            let r = anchor.row as f64 + spacing * angle.sin();
            let c = anchor.col as f64 + spacing * angle.cos();
            let (r, c) = (r.round(), c.round());
            if r < 0.0 || c < 0.0 || r >= spec.height as f64 || c >= spec.width as f64 {
                continue;
            }
            let partner = Point::new(r as usize, c as usize);
            let d_sq = anchor.dist_sq(partner) as f64;
            if d_sq < min_sq || d_sq >= pair_max * pair_max || !fits(&placed, partner) {
                continue;
            }
            placed.push(anchor);
            placed.push(partner);
            break;
        }
    }

    while placed.len() < spec.n_cells {
        if attempts >= budget {
            return Err(exhausted(&placed, attempts, "isolated cell placement"));
        }
        attempts += 1;
        let p = random_pixel(&mut rng, spec);
        if fits(&placed, p) {
            placed.push(p);
        }
    }

    CenterSet::new(spec.height, spec.width, placed)
}

fn random_pixel(rng: &mut ChaCha8Rng, spec: &SceneSpec) -> Point {
    Point::new(rng.random_range(0..spec.height), rng.random_range(0..spec.width))
}

/// Emulated prediction error: blur then additive Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbSpec {
    pub blur_sigma: f64,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl PerturbSpec {
    pub fn identity() -> Self {
        Self {
            blur_sigma: 0.0,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.blur_sigma >= 0.0 && self.blur_sigma.is_finite()) {
            return Err(invalid("blur_sigma", format!("must be >= 0, got {}", self.blur_sigma)));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(invalid("noise_sigma", format!("must be >= 0, got {}", self.noise_sigma)));
        }
        Ok(())
    }
}

/// Gaussian blur (3 sigma truncation, zero padding), then zero-mean pixel
/// noise drawn in row-major order, then clamping at zero.
pub fn perturb(field: &ScalarField, spec: &PerturbSpec) -> Result<ScalarField> {
    spec.validate()?;
    let mut out = gaussian_blur(field, spec.blur_sigma);
    if spec.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let normal = Normal::new(0.0, spec.noise_sigma)
            .map_err(|e| invalid("noise_sigma", e.to_string()))?;
        for v in out.values_mut() {
            *v += normal.sample(&mut rng);
        }
    }
    for v in out.values_mut() {
        *v = v.max(0.0);
    }
    Ok(out)
}
