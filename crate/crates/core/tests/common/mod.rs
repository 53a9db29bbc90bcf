//! Exhaustive reference implementations used as test oracles. Deliberately
//! naive: full scans, full sorts, no shared code with the library.

#![allow(dead_code)]

use cellcode::{CenterSet, Point, ScalarField, SceneSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Nearest and second-nearest center distance per pixel, by scanning every
/// center from every pixel.
pub fn brute_distance_fields(labels: &CenterSet) -> (Vec<f64>, Vec<f64>) {
    let (h, w) = (labels.height(), labels.width());
    let mut nearest = Vec::with_capacity(h * w);
    let mut second = Vec::with_capacity(h * w);
    for r in 0..h {
        for c in 0..w {
            let mut d: Vec<u64> = labels
                .centers()
                .iter()
                .map(|p| {
                    let dr = r as i64 - p.row as i64;
                    let dc = c as i64 - p.col as i64;
                    (dr * dr + dc * dc) as u64
                })
                .collect();
            d.sort_unstable();
            let at = |i: usize| d.get(i).map_or(f64::INFINITY, |&s| (s as f64).sqrt());
            nearest.push(at(0));
            second.push(at(1));
        }
    }
    (nearest, second)
}

/// Local maxima by definition: strictly above `threshold`, no pixel within
/// the closed disk is larger, and equal-valued candidates within the disk of
/// each other are merged (transitively) into their smallest `(row, col)`.
pub fn brute_local_maxima(field: &ScalarField, radius: f64, threshold: f64) -> Vec<Point> {
    let (h, w) = field.dims();
    let r2 = radius * radius;
    let near = |a: Point, b: Point| {
        let dr = a.row as f64 - b.row as f64;
        let dc = a.col as f64 - b.col as f64;
        dr * dr + dc * dc <= r2
    };
    let mut cands = Vec::new();
    for r in 0..h {
        for c in 0..w {
            let v = field[(r, c)];
            if !(v > threshold) {
                continue;
            }
            let p = Point::new(r, c);
            let mut ok = true;
            for rr in 0..h {
                for cc in 0..w {
                    if near(p, Point::new(rr, cc)) && field[(rr, cc)] > v {
                        ok = false;
                    }
                }
            }
            if ok {
                cands.push(p);
            }
        }
    }

    // Union-find over all candidate pairs.
    let mut parent: Vec<usize> = (0..cands.len()).collect();
    fn find(parent: &mut [usize], i: usize) -> usize {
        let mut i = i;
        while parent[i] != i {
            i = parent[i];
        }
        i
    }
    for i in 0..cands.len() {
        for j in i + 1..cands.len() {
            let (a, b) = (cands[i], cands[j]);
            if near(a, b) && field[(a.row, a.col)] == field[(b.row, b.col)] {
                let (ra, rb) = (find(&mut parent, i), find(&mut parent, j));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let mut out: Vec<Point> = (0..cands.len())
        .filter(|&i| find(&mut parent, i) == i)
        .map(|i| cands[i])
        .collect();
    // Roots are the smallest index of each component, and candidates are in
    // row-major order, so each root is its group's lexicographic minimum.
    out.sort();
    out
}

/// Greedy closest-pair matching over a full sort of every pair by
/// `(distance, detection index, truth index)`.
pub fn brute_greedy(det: &[Point], truth: &[Point]) -> Vec<(usize, usize, f64)> {
    let mut all = Vec::new();
    for (i, d) in det.iter().enumerate() {
        for (j, t) in truth.iter().enumerate() {
            let dr = d.row as f64 - t.row as f64;
            let dc = d.col as f64 - t.col as f64;
            all.push((dr * dr + dc * dc, i, j));
        }
    }
    all.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut det_used = vec![false; det.len()];
    let mut truth_used = vec![false; truth.len()];
    let mut out = Vec::new();
    for (d2, i, j) in all {
        if !det_used[i] && !truth_used[j] {
            det_used[i] = true;
            truth_used[j] = true;
            out.push((i, j, d2.sqrt()));
        }
    }
    out
}

/// Shannon entropy of positive values over `bins` equal-width bins of
/// `(0, max]`, computed with explicit interval tests.
pub fn brute_entropy(values: &[f64], bins: usize) -> f64 {
    let pos: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    if pos.is_empty() {
        return 0.0;
    }
    let max = pos.iter().copied().fold(f64::MIN, f64::max);
    if pos.iter().all(|&v| v == max) {
        return 0.0;
    }
    let mut counts = vec![0usize; bins];
    for &v in &pos {
        let k = (0..bins)
            .find(|&k| v <= max * (k + 1) as f64 / bins as f64)
            .unwrap_or(bins - 1);
        counts[k] += 1;
    }
    let n = pos.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.log2()
        })
        .sum()
}

/// Random distinct centers on an `h x w` grid.
pub fn random_centers(rng: &mut ChaCha8Rng, h: usize, w: usize, n: usize) -> CenterSet {
    let n = n.min(h * w);
    let mut pts: Vec<Point> = Vec::with_capacity(n);
    while pts.len() < n {
        let p = Point::new(rng.random_range(0..h), rng.random_range(0..w));
        if !pts.contains(&p) {
            pts.push(p);
        }
    }
    CenterSet::new(h, w, pts).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn crowded_scene(cell_radius: f64, size: usize, n_cells: usize, seed: u64) -> SceneSpec {
    SceneSpec {
        height: size,
        width: size,
        n_cells,
        min_spacing: cell_radius,
        crowded_fraction: 0.5,
        cell_radius,
        seed,
    }
}
