//! Center sets, dense fields and the distance geometry every coding builds on.
//!
//! Distances to the nearest and second-nearest center are computed exactly:
//! squared distances are kept as integers on the pixel lattice and only
//! converted to `f64` at the end, so the accelerated search and an exhaustive
//! scan over all centers agree bit for bit.

use std::collections::HashSet;
use std::ops::{Index, IndexMut};

use crate::error::{invalid, Error, Result};

/// A pixel coordinate on the label grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Point {
    pub row: usize,
    pub col: usize,
}

impl Point {
    pub const fn new(row: usize, col: usize) -> Self {
        Self { row, col }
    }

    /// Squared Euclidean distance, exact on the integer lattice.
    #[inline]
    pub fn dist_sq(self, other: Point) -> u64 {
        let dr = self.row.abs_diff(other.row) as u64;
        let dc = self.col.abs_diff(other.col) as u64;
        dr * dr + dc * dc
    }

    #[inline]
    pub fn dist(self, other: Point) -> f64 {
        (self.dist_sq(other) as f64).sqrt()
    }
}

impl From<(usize, usize)> for Point {
    fn from((row, col): (usize, usize)) -> Self {
        Self { row, col }
    }
}

/// Raw dot labels: integer cell centers on an `height x width` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CenterSet {
    height: usize,
    width: usize,
    centers: Vec<Point>,
}

impl CenterSet {
    /// Validates bounds and uniqueness. The center list may be empty.
    pub fn new(height: usize, width: usize, centers: Vec<Point>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::EmptyGrid { height, width });
        }
        let mut seen = HashSet::with_capacity(centers.len());
        for &p in &centers {
            if p.row >= height || p.col >= width {
                return Err(Error::CenterOutOfBounds {
                    row: p.row,
                    col: p.col,
                    height,
                    width,
                });
            }
            if !seen.insert(p) {
                return Err(Error::DuplicateCenter {
                    row: p.row,
                    col: p.col,
                });
            }
        }
        Ok(Self {
            height,
            width,
            centers,
        })
    }

    pub fn empty(height: usize, width: usize) -> Result<Self> {
        Self::new(height, width, Vec::new())
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn centers(&self) -> &[Point] {
        &self.centers
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    /// Same centers in (row, col) order.
    pub fn sorted(&self) -> CenterSet {
        let mut centers = self.centers.clone();
        centers.sort_unstable();
        CenterSet {
            height: self.height,
            width: self.width,
            centers,
        }
    }
}

/// Dense row-major real-valued map.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    height: usize,
    width: usize,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self {
            height,
            width,
            values: vec![value; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(invalid(
                "values",
                format!(
                    "expected {} values for {height}x{width}, got {}",
                    height * width,
                    values.len()
                ),
            ));
        }
        Ok(Self {
            height,
            width,
            values,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.width..(row + 1) * self.width]
    }

    /// Sum of all values, reduced pairwise in a fixed order.
    pub fn sum(&self) -> f64 {
        pairwise_sum(&self.values)
    }

    /// Largest value, or `None` for an empty field. NaNs are ignored.
    pub fn max(&self) -> Option<f64> {
        self.values.iter().copied().fold(None, |acc, v| match acc {
            None if !v.is_nan() => Some(v),
            Some(m) if v > m => Some(v),
            other => other,
        })
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ScalarField {
        ScalarField {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Rounds every value through `f32`, the precision of the `SFLD` format.
    pub fn quantize_f32(&self) -> ScalarField {
        self.map(|v| v as f32 as f64)
    }

    /// Pointwise sum of two fields of equal shape.
    pub fn add(&self, other: &ScalarField) -> Result<ScalarField> {
        check_dims(self.dims(), other.dims())?;
        Ok(ScalarField {
            height: self.height,
            width: self.width,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }
}

impl Index<(usize, usize)> for ScalarField {
    type Output = f64;

    #[inline]
    fn index(&self, (row, col): (usize, usize)) -> &f64 {
        &self.values[row * self.width + col]
    }
}

impl IndexMut<(usize, usize)> for ScalarField {
    #[inline]
    fn index_mut(&mut self, (row, col): (usize, usize)) -> &mut f64 {
        &mut self.values[row * self.width + col]
    }
}

/// Dense row-major boolean map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    height: usize,
    width: usize,
    bits: Vec<bool>,
}

impl BinaryMask {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![false; height * width],
        }
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            bits: vec![true; height * width],
        }
    }

    /// Binarized raw dot labels.
    pub fn from_centers(labels: &CenterSet) -> Self {
        let mut mask = Self::new(labels.height, labels.width);
        for p in &labels.centers {
            mask.set(p.row, p.col, true);
        }
        mask
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// True when every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &BinaryMask) -> bool {
        self.dims() == other.dims() && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

pub(crate) fn check_dims(left: (usize, usize), right: (usize, usize)) -> Result<()> {
    if left != right {
        return Err(Error::DimensionMismatch {
            left_h: left.0,
            left_w: left.1,
            right_h: right.0,
            right_w: right.1,
        });
    }
    Ok(())
}

/// Pairwise (cascade) summation with a fixed split order, so the result is
/// reproducible and the rounding error grows as O(log n).
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const BLOCK: usize = 64;
    if values.len() <= BLOCK {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Distances from every pixel to its nearest and second-nearest center.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceFields {
    /// Distance to the nearest center; `+inf` everywhere when there are no centers.
    pub nearest: ScalarField,
    /// Distance to the second-nearest center; `+inf` everywhere with fewer than two centers.
    pub second: ScalarField,
}

/// Exact Euclidean first- and second-nearest center distances.
///
/// Centers are bucketed on a coarse grid and each pixel searches Chebyshev
/// rings of buckets outward until the ring's lower distance bound exceeds the
/// current second-best candidate.
pub fn distance_fields(labels: &CenterSet) -> DistanceFields {
    let sq = nearest_two_sq(labels);
    let to_dist = |d: u64| {
        if d == u64::MAX {
            f64::INFINITY
        } else {
            (d as f64).sqrt()
        }
    };
    let (h, w) = (labels.height, labels.width);
    let nearest = sq.iter().map(|&(a, _)| to_dist(a)).collect();
    let second = sq.iter().map(|&(_, b)| to_dist(b)).collect();
    DistanceFields {
        nearest: ScalarField {
            height: h,
            width: w,
            values: nearest,
        },
        second: ScalarField {
            height: h,
            width: w,
            values: second,
        },
    }
}

/// Per-pixel squared distances to the two nearest centers (`u64::MAX` = none).
fn nearest_two_sq(labels: &CenterSet) -> Vec<(u64, u64)> {
    let (h, w) = (labels.height, labels.width);
    let n = labels.centers.len();
    if n == 0 {
        return vec![(u64::MAX, u64::MAX); h * w];
    }

    let cell = (((h * w) as f64 / n as f64).sqrt().ceil() as usize).max(1);
    let bh = h.div_ceil(cell);
    let bw = w.div_ceil(cell);

    // CSR layout: bucket b holds centers[start[b]..start[b + 1]].
    let bucket_of = |p: &Point| (p.row / cell) * bw + p.col / cell;
    let mut start = vec![0usize; bh * bw + 1];
    for p in &labels.centers {
        start[bucket_of(p) + 1] += 1;
    }
    for b in 0..bh * bw {
        start[b + 1] += start[b];
    }
    let mut fill = start.clone();
    let mut bucketed = vec![Point::new(0, 0); n];
    for p in &labels.centers {
        let b = bucket_of(p);
        bucketed[fill[b]] = *p;
        fill[b] += 1;
    }

    let max_ring = bh.max(bw);
    let mut out = Vec::with_capacity(h * w);
    for row in 0..h {
        let br = row / cell;
        for col in 0..w {
            let bc = col / cell;
            let px = Point::new(row, col);
            let mut best = (u64::MAX, u64::MAX);
            for ring in 0..=max_ring {
                for_each_ring_bucket(br, bc, ring, bh, bw, &mut |b| {
                    for &c in &bucketed[start[b]..start[b + 1]] {
                        let d = px.dist_sq(c);
                        if d < best.0 {
                            best = (d, best.0);
                        } else if d < best.1 {
                            best.1 = d;
                        }
                    }
                });
                // Any center in ring + 1 or beyond differs by at least
                // ring * cell + 1 pixels along one axis.
                let bound = (ring * cell + 1) as u64;
                if best.1 <= bound * bound {
                    break;
                }
            }
            out.push(best);
        }
    }
    out
}

fn for_each_ring_bucket(
    br: usize,
    bc: usize,
    ring: usize,
    bh: usize,
    bw: usize,
    visit: &mut impl FnMut(usize),
) {
    let (br, bc, k) = (br as i64, bc as i64, ring as i64);
    let in_grid = |r: i64, c: i64| r >= 0 && c >= 0 && r < bh as i64 && c < bw as i64;
    for r in br - k..=br + k {
        if r < 0 || r >= bh as i64 {
            continue;
        }
        if r == br - k || r == br + k {
            for c in (bc - k).max(0)..=(bc + k).min(bw as i64 - 1) {
                visit(r as usize * bw + c as usize);
            }
        } else {
            for c in [bc - k, bc + k] {
                if in_grid(r, c) {
                    visit(r as usize * bw + c as usize);
                }
            }
        }
    }
}

/// Disk dilation of the dot labels: a pixel is set iff some center lies
/// within `diameter / 2` of it (closed disk). `diameter == 1` gives back the
/// raw dot mask.
pub fn dilate_disk(labels: &CenterSet, diameter: f64) -> Result<BinaryMask> {
    if !(diameter >= 1.0) || !diameter.is_finite() {
        return Err(invalid(
            "diameter",
            format!("must be finite and >= 1, got {diameter}"),
        ));
    }
    let radius = diameter / 2.0;
    let r2 = radius * radius;
    let reach = radius.floor() as i64;
    let offsets: Vec<(i64, i64)> = (-reach..=reach)
        .flat_map(|dr| (-reach..=reach).map(move |dc| (dr, dc)))
        .filter(|&(dr, dc)| ((dr * dr + dc * dc) as f64) <= r2)
        .collect();

    let (h, w) = (labels.height as i64, labels.width as i64);
    let mut mask = BinaryMask::new(labels.height, labels.width);
    for p in &labels.centers {
        for &(dr, dc) in &offsets {
            let (r, c) = (p.row as i64 + dr, p.col as i64 + dc);
            if r >= 0 && c >= 0 && r < h && c < w {
                mask.set(r as usize, c as usize, true);
            }
        }
    }
    Ok(mask)
}
