//! Greedy closest-pair matching of detections to ground truth, and the
//! precision / recall / F1 scores derived from it.
//!
//! Matching repeatedly takes the globally closest unmatched
//! (detection, truth) pair until one side runs out; the distance threshold is
//! applied only afterwards when counting successful matches.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;

use crate::error::{invalid, Error, Result};
use crate::geometry::Point;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub detection: usize,
    pub truth: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MatchReport {
    pub pairs: Vec<MatchedPair>,
    pub n_detections: usize,
    pub n_truth: usize,
    pub unmatched_detections: usize,
    pub unmatched_truth: usize,
    pub precision: f64,
    pub recall: f64,
    /// `2PR / (P + R)`.
    pub f1_standard: f64,
    /// `1 / (1/P + 1/R) = PR / (P + R)`, half the usual F1.
    pub f1_paper_literal: f64,
    pub threshold: f64,
}

/// Datasets with a known average cell radius used as the match threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dataset {
    Dg,
    Adip,
    Hbm,
    Vgg,
}

impl Dataset {
    /// Average cell radius in pixels.
    pub fn radius(self) -> f64 {
        match self {
            Dataset::Dg => 8.0,
            Dataset::Adip => 11.0,
            Dataset::Hbm => 15.0,
            Dataset::Vgg => 11.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dataset::Dg => "dg",
            Dataset::Adip => "adip",
            Dataset::Hbm => "hbm",
            Dataset::Vgg => "vgg",
        }
    }
}

impl fmt::Display for Dataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Dataset {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "dg" => Ok(Dataset::Dg),
            "adip" => Ok(Dataset::Adip),
            "hbm" => Ok(Dataset::Hbm),
            "vgg" => Ok(Dataset::Vgg),
            other => Err(invalid("dataset", format!("unknown dataset `{other}`"))),
        }
    }
}

/// Greedy closest-pair extraction.
///
/// Ties in distance go to the smallest detection index, then the smallest
/// truth index. Each detection keeps a cursor into its truth list sorted by
/// distance; a min-heap holds one cursor head per detection and stale heads
/// (truth already taken) are advanced lazily.
pub fn greedy_match(detections: &[Point], truth: &[Point]) -> Vec<MatchedPair> {
    if detections.is_empty() || truth.is_empty() {
        return Vec::new();
    }

    let ranked: Vec<Vec<(u64, usize)>> = detections
        .iter()
        .map(|d| {
            let mut row: Vec<(u64, usize)> =
                truth.iter().enumerate().map(|(g, t)| (d.dist_sq(*t), g)).collect();
            row.sort_unstable();
            row
        })
        .collect();

    let mut cursor = vec![0usize; detections.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut heap: BinaryHeap<Reverse<(u64, usize, usize)>> = ranked
        .iter()
        .enumerate()
        .map(|(d, row)| Reverse((row[0].0, d, row[0].1)))
        .collect();

    let limit = detections.len().min(truth.len());
    let mut pairs = Vec::with_capacity(limit);
    while pairs.len() < limit {
        let Some(Reverse((dist_sq, d, g))) = heap.pop() else {
            break;
        };
        if truth_used[g] {
            let row = &ranked[d];
            let mut k = cursor[d] + 1;
            while k < row.len() && truth_used[row[k].1] {
                k += 1;
            }
            cursor[d] = k;
            if let Some(&(next_sq, next_g)) = row.get(k) {
                heap.push(Reverse((next_sq, d, next_g)));
            }
            continue;
        }
        truth_used[g] = true;
        pairs.push(MatchedPair {
            detection: d,
            truth: g,
            distance: (dist_sq as f64).sqrt(),
        });
    }
    pairs
}

/// Runs [`greedy_match`] and scores matches with `distance <= threshold`.
///
/// Conventions: with no detections and no truth, P = R = F1 = 1; with only one
/// side empty, P = R = 0.
pub fn score(detections: &[Point], truth: &[Point], threshold: f64) -> Result<MatchReport> {
    if !(threshold > 0.0) {
        return Err(invalid("threshold", format!("must be > 0, got {threshold}")));
    }
    let pairs = greedy_match(detections, truth);
    let hits = pairs.iter().filter(|p| p.distance <= threshold).count();
    let (n_det, n_gt) = (detections.len(), truth.len());

    let (precision, recall) = match (n_det, n_gt) {
        (0, 0) => (1.0, 1.0),
        (0, _) | (_, 0) => (0.0, 0.0),
        _ => (hits as f64 / n_det as f64, hits as f64 / n_gt as f64),
    };
    let denom = precision + recall;
    let (f1_standard, f1_paper_literal) = if denom > 0.0 {
        let product = precision * recall;
        (2.0 * product / denom, product / denom)
    } else {
        (0.0, 0.0)
    };

    Ok(MatchReport {
        unmatched_detections: n_det - pairs.len(),
        unmatched_truth: n_gt - pairs.len(),
        pairs,
        n_detections: n_det,
        n_truth: n_gt,
        precision,
        recall,
        f1_standard,
        f1_paper_literal,
        threshold,
    })
}
