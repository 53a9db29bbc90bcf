//! Inverting coded maps: local-maximum detection and integration counting.

use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::geometry::{CenterSet, Point, ScalarField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ThresholdMode {
    Absolute,
    /// Threshold is a fraction of the field maximum.
    RelativeToMax,
}

impl ThresholdMode {
    pub fn name(self) -> &'static str {
        match self {
            ThresholdMode::Absolute => "absolute",
            ThresholdMode::RelativeToMax => "relative_to_max",
        }
    }
}

impl fmt::Display for ThresholdMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ThresholdMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "absolute" => Ok(ThresholdMode::Absolute),
            "relative_to_max" | "relative" => Ok(ThresholdMode::RelativeToMax),
            other => Err(invalid(
                "threshold_mode",
                format!("unknown threshold mode `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecodeSpec {
    /// Radius of the circular suppression neighborhood.
    pub nms_radius: f64,
    pub threshold_mode: ThresholdMode,
    pub threshold: f64,
}

impl DecodeSpec {
    pub const DEFAULT_RELATIVE_THRESHOLD: f64 = 0.1;

    /// NMS radius equal to the cell radius, threshold at 10% of the maximum.
    pub fn for_cell_radius(cell_radius: f64) -> Self {
        Self {
            nms_radius: cell_radius,
            threshold_mode: ThresholdMode::RelativeToMax,
            threshold: Self::DEFAULT_RELATIVE_THRESHOLD,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.nms_radius > 0.0 && self.nms_radius.is_finite()) {
            return Err(invalid(
                "nms_radius",
                format!("must be finite and > 0, got {}", self.nms_radius),
            ));
        }
        let ok = match self.threshold_mode {
            ThresholdMode::Absolute => self.threshold >= 0.0 && self.threshold.is_finite(),
            ThresholdMode::RelativeToMax => (0.0..=1.0).contains(&self.threshold),
        };
        if !ok {
            return Err(invalid(
                "threshold",
                format!("{} is out of range for {} mode", self.threshold, self.threshold_mode),
            ));
        }
        Ok(())
    }
}

/// Lattice offsets of the closed disk of radius `radius`, excluding the origin.
pub(crate) fn disk_offsets(radius: f64) -> Vec<(i64, i64)> {
    let reach = radius.floor() as i64;
    let r2 = radius * radius;
    (-reach..=reach)
        .flat_map(|dr| (-reach..=reach).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| (dr, dc) != (0, 0) && ((dr * dr + dc * dc) as f64) <= r2)
        .collect()
}

/// Pixels that dominate (`>=`) their circular neighborhood and exceed the
/// resolved threshold. Equal-valued candidates within `nms_radius` of each
/// other collapse to the smallest `(row, col)` of their group. The result is
/// sorted by `(row, col)`.
pub fn detect_local_maxima(field: &ScalarField, spec: &DecodeSpec) -> Result<CenterSet> {
    spec.validate()?;
    let (h, w) = field.dims();
    let Some(max) = field.max() else {
        return CenterSet::empty(h, w);
    };
    let threshold = match spec.threshold_mode {
        ThresholdMode::Absolute => spec.threshold,
        ThresholdMode::RelativeToMax => spec.threshold * max,
    };

    let offsets = disk_offsets(spec.nms_radius);
    let value = |r: i64, c: i64| -> Option<f64> {
        (r >= 0 && c >= 0 && r < h as i64 && c < w as i64).then(|| field[(r as usize, c as usize)])
    };

    let mut candidates = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = field[(r, c)];
            if !(v > threshold) {
                continue;
            }
            let (ri, ci) = (r as i64, c as i64);
            let dominated = offsets
                .iter()
                .any(|&(dr, dc)| value(ri + dr, ci + dc).is_some_and(|q| q > v));
            if !dominated {
                candidates.push(Point::new(r, c));
            }
        }
    }

    let kept = dedup_plateaus(field, &candidates, &offsets);
    CenterSet::new(h, w, kept)
}

/// Groups candidates that share a value and lie within the NMS disk of one
/// another (transitively) and keeps the first of each group in scan order.
fn dedup_plateaus(field: &ScalarField, candidates: &[Point], offsets: &[(i64, i64)]) -> Vec<Point> {
    let (h, w) = field.dims();
    let mut slot = vec![usize::MAX; h * w];
    for (i, p) in candidates.iter().enumerate() {
        slot[p.row * w + p.col] = i;
    }

    let mut visited = vec![false; candidates.len()];
    let mut kept = Vec::new();
    let mut stack = Vec::new();
    // Candidates are in row-major order, so the first unvisited one is the
    // lexicographic minimum of its group.
    for start in 0..candidates.len() {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        kept.push(candidates[start]);
        let v = field[(candidates[start].row, candidates[start].col)];
        stack.push(start);
        while let Some(i) = stack.pop() {
            let p = candidates[i];
            for &(dr, dc) in offsets {
                let (r, c) = (p.row as i64 + dr, p.col as i64 + dc);
                if r < 0 || c < 0 || r >= h as i64 || c >= w as i64 {
                    continue;
                }
                let j = slot[r as usize * w + c as usize];
                if j != usize::MAX && !visited[j] && field[(r as usize, c as usize)] == v {
                    visited[j] = true;
                    stack.push(j);
                }
            }
        }
    }
    kept
}

/// Total mass of the field; the cell count for unit-mass density codings.
pub fn count_by_integration(field: &ScalarField) -> f64 {
    field.sum()
}
