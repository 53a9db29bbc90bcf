//! Dot-label codings: dot, Gaussian, rectangle, proximity and repel.
//!
//! Proximity coding maps the distance `d` to the nearest center through
//! `1 / (1 + alpha * d)` inside a cutoff `r`. Repel coding feeds the same
//! mapping a suppressed distance
//!
//! ```text
//! D' = d1 * (1 + d1 / d2)^2
//! ```
//!
//! where `d1` and `d2` are the distances to the nearest and second-nearest
//! centers. Between two neighbors `d1 / d2` approaches 1 and the distance is
//! inflated by up to a factor of four, which carves a valley into the map.
//! With a single center `d2` is infinite and repel equals proximity.
//!
//! Gaussian and rectangle codings are density maps: each center is stamped
//! with a kernel, and in [`Normalization::UnitMass`] mode each stamp is
//! rescaled over its in-bounds support so that every cell integrates to one
//! even at the image border.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::filter::gaussian_taps;
use crate::geometry::{distance_fields, CenterSet, ScalarField};

/// Default decay of the proximity/repel mapping.
pub const DEFAULT_ALPHA: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Scheme {
    Dot,
    Gaussian,
    Rectangle,
    Proximity,
    Repel,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Dot,
        Scheme::Gaussian,
        Scheme::Rectangle,
        Scheme::Proximity,
        Scheme::Repel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Dot => "dot",
            Scheme::Gaussian => "gaussian",
            Scheme::Rectangle => "rect",
            Scheme::Proximity => "proximity",
            Scheme::Repel => "repel",
        }
    }

    /// Codings whose maxima sit exactly on the centers.
    pub fn preserves_local_maxima(self) -> bool {
        matches!(self, Scheme::Dot | Scheme::Proximity | Scheme::Repel)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dot" => Ok(Scheme::Dot),
            "gaussian" => Ok(Scheme::Gaussian),
            "rect" | "rectangle" => Ok(Scheme::Rectangle),
            "proximity" => Ok(Scheme::Proximity),
            "repel" => Ok(Scheme::Repel),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Normalization {
    /// Kernel normalized over its full window; border cells lose mass.
    Raw,
    /// Field rescaled so its maximum is 1. Display only.
    PeakOne,
    /// Each cell contributes exactly unit mass, renormalized at borders.
    UnitMass,
}

impl Normalization {
    pub fn name(self) -> &'static str {
        match self {
            Normalization::Raw => "raw",
            Normalization::PeakOne => "peak_one",
            Normalization::UnitMass => "unit_mass",
        }
    }
}

impl fmt::Display for Normalization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalization {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "raw" => Ok(Normalization::Raw),
            "peak_one" => Ok(Normalization::PeakOne),
            "unit_mass" => Ok(Normalization::UnitMass),
            other => Err(invalid(
                "normalization",
                format!("unknown normalization `{other}`"),
            )),
        }
    }
}

/// Scheme selector plus every encoder parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodingSpec {
    pub scheme: Scheme,
    /// Decay of `1 / (1 + alpha * d)` for proximity and repel codings.
    pub alpha: f64,
    /// Distance cutoff `r` beyond which proximity/repel codings are zero.
    pub radius_cutoff: f64,
    /// Gaussian kernel standard deviation in pixels.
    pub sigma: f64,
    /// Side of the rectangle kernel; odd.
    pub kernel_size: usize,
    pub normalization: Normalization,
}

impl CodingSpec {
    /// Defaults scaled to the average cell radius: `r = 2 * radius`,
    /// `sigma = radius / 2`, rectangle side `2 * radius + 1` (made odd).
    pub fn for_cell_radius(scheme: Scheme, cell_radius: f64) -> Self {
        let mut kernel_size = (2.0 * cell_radius).round().max(0.0) as usize + 1;
        if kernel_size % 2 == 0 {
            kernel_size += 1;
        }
        Self {
            scheme,
            alpha: DEFAULT_ALPHA,
            radius_cutoff: 2.0 * cell_radius,
            sigma: cell_radius / 2.0,
            kernel_size,
            normalization: Normalization::UnitMass,
        }
    }

    pub fn with_scheme(self, scheme: Scheme) -> Self {
        Self { scheme, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be finite and > 0, got {v}")))
            }
        };
        positive("alpha", self.alpha)?;
        positive("radius_cutoff", self.radius_cutoff)?;
        positive("sigma", self.sigma)?;
        if self.kernel_size == 0 || self.kernel_size % 2 == 0 {
            return Err(invalid(
                "kernel_size",
                format!("must be odd and >= 1, got {}", self.kernel_size),
            ));
        }
        Ok(())
    }
}

/// Encodes `labels` with the scheme selected in `spec`.
pub fn encode(labels: &CenterSet, spec: &CodingSpec) -> Result<ScalarField> {
    spec.validate()?;
    let field = match spec.scheme {
        Scheme::Dot => encode_dot(labels),
        Scheme::Proximity => encode_proximity(labels, spec)?,
        Scheme::Repel => encode_repel(labels, spec)?,
        Scheme::Gaussian => encode_gaussian(labels, spec)?,
        Scheme::Rectangle => encode_rectangle(labels, spec)?,
    };
    Ok(field)
}

/// One at every center pixel, zero elsewhere.
pub fn encode_dot(labels: &CenterSet) -> ScalarField {
    let mut field = ScalarField::zeros(labels.height(), labels.width());
    for p in labels.centers() {
        field[(p.row, p.col)] = 1.0;
    }
    field
}

/// `1 / (1 + alpha * d)` where `d < r`, else 0. Shared by proximity and repel.
#[inline]
pub fn proximity_value(distance: f64, alpha: f64, cutoff: f64) -> f64 {
    if distance < cutoff {
        1.0 / (1.0 + alpha * distance)
    } else {
        0.0
    }
}

/// The repel distance `d1 * (1 + d1 / d2)^2`; equals `d1` when `d2` is infinite.
#[inline]
pub fn repel_distance(nearest: f64, second: f64) -> f64 {
    let ratio = nearest / second;
    let factor = 1.0 + ratio;
    nearest * factor * factor
}

pub fn encode_proximity(labels: &CenterSet, spec: &CodingSpec) -> Result<ScalarField> {
    check_decay(spec)?;
    let dist = distance_fields(labels);
    Ok(dist
        .nearest
        .map(|d| proximity_value(d, spec.alpha, spec.radius_cutoff)))
}

pub fn encode_repel(labels: &CenterSet, spec: &CodingSpec) -> Result<ScalarField> {
    check_decay(spec)?;
    let dist = distance_fields(labels);
    let values = dist
        .nearest
        .values()
        .iter()
        .zip(dist.second.values())
        .map(|(&d1, &d2)| proximity_value(repel_distance(d1, d2), spec.alpha, spec.radius_cutoff))
        .collect();
    ScalarField::from_vec(labels.height(), labels.width(), values)
}

fn check_decay(spec: &CodingSpec) -> Result<()> {
    if !(spec.alpha > 0.0 && spec.alpha.is_finite()) {
        return Err(invalid("alpha", format!("must be > 0, got {}", spec.alpha)));
    }
    if !(spec.radius_cutoff > 0.0) {
        return Err(invalid(
            "radius_cutoff",
            format!("must be > 0, got {}", spec.radius_cutoff),
        ));
    }
    Ok(())
}

/// Dot labels convolved with a Gaussian truncated at 3 sigma.
pub fn encode_gaussian(labels: &CenterSet, spec: &CodingSpec) -> Result<ScalarField> {
    if !(spec.sigma > 0.0 && spec.sigma.is_finite()) {
        return Err(invalid("sigma", format!("must be > 0, got {}", spec.sigma)));
    }
    let taps = gaussian_taps(spec.sigma);
    let side = taps.len();
    let kernel: Vec<f64> = (0..side * side)
        .map(|i| taps[i / side] * taps[i % side])
        .collect();
    Ok(stamp_kernel(labels, &kernel, side, spec.normalization))
}

/// Dot labels convolved with a `k x k` box.
pub fn encode_rectangle(labels: &CenterSet, spec: &CodingSpec) -> Result<ScalarField> {
    let k = spec.kernel_size;
    if k == 0 || k % 2 == 0 {
        return Err(invalid(
            "kernel_size",
            format!("must be odd and >= 1, got {k}"),
        ));
    }
    Ok(stamp_kernel(labels, &vec![1.0; k * k], k, spec.normalization))
}

/// Adds a centered copy of `kernel` (side `side`, unnormalized) at every
/// center. Equivalent to zero-padded convolution of the dot map.
fn stamp_kernel(
    labels: &CenterSet,
    kernel: &[f64],
    side: usize,
    normalization: Normalization,
) -> ScalarField {
    let (h, w) = (labels.height() as i64, labels.width() as i64);
    let half = (side / 2) as i64;
    let full_mass: f64 = kernel.iter().sum();
    let mut field = ScalarField::zeros(labels.height(), labels.width());

    for p in labels.centers() {
        let (r0, c0) = (p.row as i64 - half, p.col as i64 - half);
        let rows = r0.max(0)..(r0 + side as i64).min(h);
        let cols = c0.max(0)..(c0 + side as i64).min(w);
        let tap = |r: i64, c: i64| kernel[((r - r0) as usize) * side + (c - c0) as usize];

        let mass = match normalization {
            Normalization::UnitMass => rows
                .clone()
                .flat_map(|r| cols.clone().map(move |c| (r, c)))
                .map(|(r, c)| tap(r, c))
                .sum::<f64>(),
            Normalization::Raw | Normalization::PeakOne => full_mass,
        };
        for r in rows.clone() {
            for c in cols.clone() {
                field[(r as usize, c as usize)] += tap(r, c) / mass;
            }
        }
    }

    if normalization == Normalization::PeakOne {
        if let Some(peak) = field.max().filter(|&m| m > 0.0) {
            field = field.map(|v| v / peak);
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(h: usize, w: usize, pts: &[(usize, usize)]) -> CenterSet {
        CenterSet::new(h, w, pts.iter().map(|&p| p.into()).collect()).unwrap()
    }

    fn spec(scheme: Scheme) -> CodingSpec {
        CodingSpec::for_cell_radius(scheme, 8.0)
    }

    #[test]
    fn default_parameters_follow_cell_radius() {
        let s = spec(Scheme::Repel);
        assert_eq!(s.alpha, 0.8);
        assert_eq!(s.radius_cutoff, 16.0);
        assert_eq!(s.sigma, 4.0);
        assert_eq!(s.kernel_size, 17);
        assert_eq!(CodingSpec::for_cell_radius(Scheme::Dot, 2.5).kernel_size, 7);
        assert_eq!(CodingSpec::for_cell_radius(Scheme::Dot, 11.0).kernel_size, 23);
    }

    #[test]
    fn validation_rejects_bad_parameters() {
        let base = spec(Scheme::Dot);
        for bad in [
            CodingSpec { alpha: 0.0, ..base },
            CodingSpec { radius_cutoff: -1.0, ..base },
            CodingSpec { sigma: f64::NAN, ..base },
            CodingSpec { kernel_size: 4, ..base },
            CodingSpec { kernel_size: 0, ..base },
        ] {
            assert!(encode(&set(4, 4, &[]), &bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("rectangle".parse::<Scheme>().unwrap(), Scheme::Rectangle);
        assert!("watershed".parse::<Scheme>().is_err());
        assert_eq!("peak_one".parse::<Normalization>().unwrap(), Normalization::PeakOne);
    }

    #[test]
    fn dot_coding() {
        let f = encode_dot(&set(5, 5, &[(2, 3)]));
        assert_eq!(f[(2, 3)], 1.0);
        assert_eq!(f.sum(), 1.0);
        assert_eq!(encode_dot(&set(5, 5, &[])).sum(), 0.0);
        assert_eq!(encode_dot(&set(9, 9, &[(0, 0), (4, 4), (8, 1)])).sum(), 3.0);
    }

    #[test]
    fn proximity_values() {
        assert_eq!(proximity_value(0.0, 0.8, 10.0), 1.0);
        assert!((proximity_value(5.0, 0.8, 10.0) - 0.2).abs() < 1e-15);
        assert_eq!(proximity_value(10.0, 0.8, 10.0), 0.0);
        assert_eq!(proximity_value(f64::INFINITY, 0.8, 10.0), 0.0);

        let f = encode_proximity(&set(21, 21, &[(10, 10)]), &spec(Scheme::Proximity)).unwrap();
        assert_eq!(f[(10, 10)], 1.0);
        assert_eq!(f[(10, 15)], 1.0 / (1.0 + 0.8 * 5.0));
        assert!(f[(10, 11)] > f[(10, 12)]);
    }

    #[test]
    fn repel_distance_examples() {
        assert_eq!(repel_distance(5.0, 5.0), 20.0);
        assert_eq!(repel_distance(2.0, 8.0), 3.125);
        assert_eq!(repel_distance(3.0, f64::INFINITY), 3.0);
        assert_eq!(repel_distance(0.0, 4.0), 0.0);
    }

    #[test]
    fn repel_midpoint_of_pair() {
        let labels = set(11, 21, &[(5, 5), (5, 15)]);
        let s = CodingSpec {
            alpha: 0.5,
            radius_cutoff: 30.0,
            ..spec(Scheme::Repel)
        };
        let f = encode_repel(&labels, &s).unwrap();
        assert_eq!(f[(5, 10)], 1.0 / 11.0);
        assert_eq!(f[(5, 5)], 1.0);
        assert_eq!(f[(5, 15)], 1.0);
    }

    #[test]
    fn repel_with_single_center_is_proximity() {
        let labels = set(17, 13, &[(3, 9)]);
        let s = spec(Scheme::Repel);
        assert_eq!(
            encode_repel(&labels, &s).unwrap(),
            encode_proximity(&labels, &s).unwrap()
        );
    }

    #[test]
    fn gaussian_normalizations() {
        let labels = set(41, 41, &[(20, 20)]);
        let unit = encode_gaussian(&labels, &spec(Scheme::Gaussian)).unwrap();
        assert!((unit.sum() - 1.0).abs() < 1e-6);

        let peak = encode_gaussian(
            &labels,
            &CodingSpec {
                normalization: Normalization::PeakOne,
                ..spec(Scheme::Gaussian)
            },
        )
        .unwrap();
        assert_eq!(peak.max(), Some(1.0));
        assert_eq!(peak[(20, 20)], 1.0);
    }

    #[test]
    fn gaussian_is_linear_in_far_apart_centers() {
        let s = spec(Scheme::Gaussian);
        let a = set(40, 80, &[(20, 15)]);
        let b = set(40, 80, &[(20, 60)]);
        let ab = set(40, 80, &[(20, 15), (20, 60)]);
        let sum = encode_gaussian(&a, &s)
            .unwrap()
            .add(&encode_gaussian(&b, &s).unwrap())
            .unwrap();
        assert_eq!(encode_gaussian(&ab, &s).unwrap(), sum);
    }

    #[test]
    fn rectangle_examples() {
        let labels = set(15, 15, &[(7, 7), (0, 14), (3, 2)]);
        let unit_one = CodingSpec {
            kernel_size: 1,
            ..spec(Scheme::Rectangle)
        };
        assert_eq!(encode_rectangle(&labels, &unit_one).unwrap(), encode_dot(&labels));

        let raw5 = CodingSpec {
            kernel_size: 5,
            normalization: Normalization::Raw,
            ..spec(Scheme::Rectangle)
        };
        let f = encode_rectangle(&set(15, 15, &[(7, 7)]), &raw5).unwrap();
        let support: Vec<f64> = f.values().iter().copied().filter(|&v| v > 0.0).collect();
        assert_eq!(support.len(), 25);
        assert!(support.iter().all(|&v| v == 1.0 / 25.0));
    }

    #[test]
    fn unit_mass_renormalizes_border_cells() {
        let labels = set(30, 30, &[(0, 0), (29, 15), (12, 29)]);
        for scheme in [Scheme::Gaussian, Scheme::Rectangle] {
            let unit = encode(&labels, &spec(scheme)).unwrap();
            assert!((unit.sum() - 3.0).abs() < 1e-9, "{scheme}");
            let raw = encode(
                &labels,
                &CodingSpec {
                    normalization: Normalization::Raw,
                    ..spec(scheme)
                },
            )
            .unwrap();
            assert!(raw.sum() < 3.0 - 0.5, "{scheme}");
        }
    }

    #[test]
    fn codings_are_non_negative() {
        let labels = set(
            32,
            32,
            &[(1, 1), (5, 9), (6, 12), (20, 20), (31, 0), (16, 30)],
        );
        for scheme in Scheme::ALL {
            let f = encode(&labels, &spec(scheme)).unwrap();
            assert!(f.values().iter().all(|&v| v >= 0.0 && v.is_finite()), "{scheme}");
        }
    }

    #[test]
    fn empty_labels_encode_to_zero() {
        let labels = CenterSet::empty(8, 8).unwrap();
        for scheme in Scheme::ALL {
            assert_eq!(encode(&labels, &spec(scheme)).unwrap().sum(), 0.0, "{scheme}");
        }
    }
}
