//! Closed hyperrectangles and finite unions of them.
//!
//! Every predicate the verifier manipulates (initial set, safe set, candidate
//! invariant, decomposition regions and action postconditions) is either a
//! single [`HyperBox`] or a [`BoxUnion`]. Containment and disjointness are
//! decided exactly on double-precision endpoints; there is no sampling and no
//! directed rounding.
//!
//! Guards and controller table cells need strict inequalities, so the module
//! also carries [`MixedInterval`] / [`MixedBox`], which track open and closed
//! endpoints independently and may be unbounded. Subset checks on closed boxes
//! are routed through the same exact subtraction procedure.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A closed interval `[lo, hi]` with `lo <= hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        // also rejects NaN
        if lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn point(x: f64) -> Self {
        Self { lo: x, hi: x }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn midpoint(&self) -> f64 {
        if self.lo == self.hi {
            self.lo
        } else {
            0.5 * (self.lo + self.hi)
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    /// Closed-set intersection test; touching endpoints count.
    pub fn intersects(&self, other: &Interval) -> bool {
        self.lo.max(other.lo) <= self.hi.min(other.hi)
    }

    pub fn intersection(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(Interval { lo, hi })
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    pub fn widen(&self, eps: f64) -> Interval {
        Interval {
            lo: self.lo - eps,
            hi: self.hi + eps,
        }
    }

    pub fn add(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo + other.lo,
            hi: self.hi + other.hi,
        }
    }

    /// Interval product: the hull of the four corner products.
    pub fn mul(&self, other: &Interval) -> Interval {
        let corners = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = corners.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = corners.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval { lo, hi }
    }

    /// Product with a scalar.
    pub fn scale(&self, c: f64) -> Interval {
        if c >= 0.0 {
            Interval {
                lo: c * self.lo,
                hi: c * self.hi,
            }
        } else {
            Interval {
                lo: c * self.hi,
                hi: c * self.lo,
            }
        }
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from(v: [f64; 2]) -> Result<Self> {
        Interval::new(v[0], v[1])
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

/// A closed axis-aligned hyperrectangle `∏ [lo_k, hi_k]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct HyperBox {
    intervals: Vec<Interval>,
}

impl HyperBox {
    pub fn new(intervals: Vec<Interval>) -> Result<Self> {
        if intervals.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self { intervals })
    }

    /// Builds a box from `(lo, hi)` pairs.
    pub fn from_bounds(bounds: &[(f64, f64)]) -> Result<Self> {
        let intervals = bounds
            .iter()
            .map(|&(lo, hi)| Interval::new(lo, hi))
            .collect::<Result<Vec<_>>>()?;
        Self::new(intervals)
    }

    pub fn point(x: &[f64]) -> Result<Self> {
        Self::new(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn interval(&self, k: usize) -> Interval {
        self.intervals[k]
    }

    pub fn lo(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::lo).collect()
    }

    pub fn hi(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::hi).collect()
    }

    pub fn midpoint(&self) -> Vec<f64> {
        self.intervals.iter().map(Interval::midpoint).collect()
    }

    pub fn volume(&self) -> f64 {
        self.intervals.iter().map(Interval::width).product()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && self.intervals.iter().zip(x).all(|(i, &v)| i.contains(v))
    }

    pub fn is_subset_of(&self, other: &HyperBox) -> bool {
        self.dims() == other.dims()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.is_subset_of(b))
    }

    pub fn intersects(&self, other: &HyperBox) -> bool {
        self.dims() == other.dims()
            && self
                .intervals
                .iter()
                .zip(&other.intervals)
                .all(|(a, b)| a.intersects(b))
    }

    pub fn intersection(&self, other: &HyperBox) -> Option<HyperBox> {
        if self.dims() != other.dims() {
            return None;
        }
        let intervals = self
            .intervals
            .iter()
            .zip(&other.intervals)
            .map(|(a, b)| a.intersection(b))
            .collect::<Option<Vec<_>>>()?;
        Some(HyperBox { intervals })
    }

    pub fn hull(&self, other: &HyperBox) -> Result<HyperBox> {
        check_dims(self.dims(), other.dims())?;
        Ok(HyperBox {
            intervals: self
                .intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| a.hull(b))
                .collect(),
        })
    }

    pub fn widen(&self, eps: f64) -> HyperBox {
        if eps == 0.0 {
            return self.clone();
        }
        HyperBox {
            intervals: self.intervals.iter().map(|i| i.widen(eps)).collect(),
        }
    }

    /// Cartesian product `self × other`, with `self`'s coordinates first.
    pub fn product(&self, other: &HyperBox) -> HyperBox {
        let mut intervals = self.intervals.clone();
        intervals.extend_from_slice(&other.intervals);
        HyperBox { intervals }
    }

    /// Coordinates `range` of this box as a new box.
    pub fn project(&self, range: std::ops::Range<usize>) -> Result<HyperBox> {
        HyperBox::new(self.intervals[range].to_vec())
    }

    pub fn to_mixed(&self) -> MixedBox {
        MixedBox::new(self.intervals.iter().map(|&i| i.into()).collect())
    }
}

impl TryFrom<Vec<Interval>> for HyperBox {
    type Error = Error;

    fn try_from(v: Vec<Interval>) -> Result<Self> {
        HyperBox::new(v)
    }
}

impl From<HyperBox> for Vec<Interval> {
    fn from(b: HyperBox) -> Self {
        b.intervals
    }
}

/// A finite union of closed boxes sharing one dimension. The empty list
/// denotes the empty set.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoxUnion {
    dims: usize,
    boxes: Vec<HyperBox>,
}

impl BoxUnion {
    pub fn new(dims: usize, boxes: Vec<HyperBox>) -> Result<Self> {
        for b in &boxes {
            check_dims(dims, b.dims())?;
        }
        Ok(Self { dims, boxes })
    }

    pub fn empty(dims: usize) -> Self {
        Self {
            dims,
            boxes: Vec::new(),
        }
    }

    pub fn single(b: HyperBox) -> Self {
        Self {
            dims: b.dims(),
            boxes: vec![b],
        }
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn boxes(&self) -> &[HyperBox] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        self.boxes.iter().any(|b| b.contains_point(x))
    }
}

/// One endpoint-aware interval. Endpoints may be infinite, in which case the
/// corresponding side is unbounded and its openness flag is ignored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedInterval {
    pub lo: f64,
    pub hi: f64,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

impl MixedInterval {
    pub const UNBOUNDED: MixedInterval = MixedInterval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
        lo_open: true,
        hi_open: true,
    };

    pub fn closed(lo: f64, hi: f64) -> Self {
        Self {
            lo,
            hi,
            lo_open: false,
            hi_open: false,
        }
    }

    pub fn new(lo: f64, hi: f64, lo_open: bool, hi_open: bool) -> Self {
        Self {
            lo,
            hi,
            lo_open: lo_open || lo == f64::NEG_INFINITY,
            hi_open: hi_open || hi == f64::INFINITY,
        }
    }

    /// `x >= bound` (or `x > bound` when `strict`).
    pub fn at_least(bound: f64, strict: bool) -> Self {
        Self::new(bound, f64::INFINITY, strict, true)
    }

    /// `x <= bound` (or `x < bound` when `strict`).
    pub fn at_most(bound: f64, strict: bool) -> Self {
        Self::new(f64::NEG_INFINITY, bound, true, strict)
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_nan()
            || self.hi.is_nan()
            || self.lo > self.hi
            || (self.lo == self.hi && (self.lo_open || self.hi_open))
    }

    pub fn is_unbounded(&self) -> bool {
        self.lo == f64::NEG_INFINITY && self.hi == f64::INFINITY
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open {
            x > self.lo
        } else {
            x >= self.lo
        };
        let below = if self.hi_open {
            x < self.hi
        } else {
            x <= self.hi
        };
        above && below
    }

    pub fn intersect(&self, other: &MixedInterval) -> MixedInterval {
        let (lo, lo_open) = if self.lo > other.lo {
            (self.lo, self.lo_open)
        } else if self.lo < other.lo {
            (other.lo, other.lo_open)
        } else {
            (self.lo, self.lo_open || other.lo_open)
        };
        let (hi, hi_open) = if self.hi < other.hi {
            (self.hi, self.hi_open)
        } else if self.hi > other.hi {
            (other.hi, other.hi_open)
        } else {
            (self.hi, self.hi_open || other.hi_open)
        };
        MixedInterval {
            lo,
            hi,
            lo_open,
            hi_open,
        }
    }

    pub fn closure(&self) -> MixedInterval {
        MixedInterval::new(self.lo, self.hi, false, false)
    }

    /// Parts of `self` strictly below and strictly above `other`.
    fn outside_parts(&self, other: &MixedInterval) -> [Option<MixedInterval>; 2] {
        let below = (other.lo > f64::NEG_INFINITY)
            .then(|| self.intersect(&MixedInterval::at_most(other.lo, !other.lo_open)))
            .filter(|i| !i.is_empty());
        let above = (other.hi < f64::INFINITY)
            .then(|| self.intersect(&MixedInterval::at_least(other.hi, !other.hi_open)))
            .filter(|i| !i.is_empty());
        [below, above]
    }
}

impl From<Interval> for MixedInterval {
    fn from(i: Interval) -> Self {
        MixedInterval::closed(i.lo, i.hi)
    }
}

/// A product of [`MixedInterval`]s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MixedBox {
    intervals: Vec<MixedInterval>,
}

impl MixedBox {
    pub fn new(intervals: Vec<MixedInterval>) -> Self {
        Self { intervals }
    }

    pub fn unbounded(dims: usize) -> Self {
        Self::new(vec![MixedInterval::UNBOUNDED; dims])
    }

    pub fn dims(&self) -> usize {
        self.intervals.len()
    }

    pub fn intervals(&self) -> &[MixedInterval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().any(MixedInterval::is_empty)
    }

    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.len() == self.dims() && self.intervals.iter().zip(x).all(|(i, &v)| i.contains(v))
    }

    pub fn intersect(&self, other: &MixedBox) -> MixedBox {
        MixedBox::new(
            self.intervals
                .iter()
                .zip(&other.intervals)
                .map(|(a, b)| a.intersect(b))
                .collect(),
        )
    }

    pub fn closure(&self) -> MixedBox {
        MixedBox::new(self.intervals.iter().map(MixedInterval::closure).collect())
    }

    /// The closed box spanned by this region. Fails on unbounded or empty
    /// regions.
    pub fn to_closed(&self) -> Result<HyperBox> {
        let intervals = self
            .intervals
            .iter()
            .map(|i| {
                if i.lo.is_finite() && i.hi.is_finite() {
                    Interval::new(i.lo, i.hi)
                } else {
                    Err(Error::InvalidInterval { lo: i.lo, hi: i.hi })
                }
            })
            .collect::<Result<Vec<_>>>()?;
        HyperBox::new(intervals)
    }

    /// Appends the pieces of `self \ other` to `out`. At most `2 · dims`
    /// pieces are produced, all nonempty and pairwise disjoint.
    fn subtract_into(&self, other: &MixedBox, out: &mut Vec<MixedBox>) {
        if self.intersect(other).is_empty() {
            out.push(self.clone());
            return;
        }
        let mut core = self.intervals.clone();
        for k in 0..core.len() {
            for part in core[k]
                .outside_parts(&other.intervals[k])
                .into_iter()
                .flatten()
            {
                let mut piece = core.clone();
                piece[k] = part;
                out.push(MixedBox::new(piece));
            }
            core[k] = core[k].intersect(&other.intervals[k]);
        }
    }
}

/// Exact test of `region ⊆ ⋃ cover`, by subtracting cover members from the
/// region in list order until nothing is left.
pub fn mixed_subset_of_union(region: &MixedBox, cover: &[MixedBox]) -> bool {
    if region.is_empty() {
        return true;
    }
    let mut remainder = vec![region.clone()];
    for c in cover {
        let mut next = Vec::with_capacity(remainder.len());
        for piece in &remainder {
            piece.subtract_into(c, &mut next);
        }
        remainder = next;
        if remainder.is_empty() {
            return true;
        }
    }
    false
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitKind {
    AllDims,
    LongestDim,
}

/// How Line-15 style splitting refines a region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitStrategy {
    pub kind: SplitKind,
    /// Dimensions no wider than this are never split.
    pub min_width: f64,
}

impl SplitStrategy {
    pub const DEFAULT_MIN_WIDTH: f64 = 1e-6;

    pub fn new(kind: SplitKind, min_width: f64) -> Result<Self> {
        if min_width.is_nan() || min_width < 0.0 {
            return Err(Error::Config(format!(
                "min_width must be nonnegative, got {min_width}"
            )));
        }
        Ok(Self { kind, min_width })
    }
}

impl Default for SplitStrategy {
    fn default() -> Self {
        Self {
            kind: SplitKind::AllDims,
            min_width: Self::DEFAULT_MIN_WIDTH,
        }
    }
}

/// Bisects `b` at midpoints.
///
/// `AllDims` halves every dimension wider than `min_width` (`2^m` children);
/// `LongestDim` halves only the widest such dimension, lowest index on ties.
/// Children share faces, so their union is exactly `b`. Children are listed
/// lower-half first, with dimension 0 varying slowest.
pub fn split_box(b: &HyperBox, strategy: &SplitStrategy) -> Result<Vec<HyperBox>> {
    let splittable: Vec<usize> = (0..b.dims())
        .filter(|&k| b.interval(k).width() > strategy.min_width)
        .collect();
    if splittable.is_empty() {
        return Err(Error::NoSplittableDimension);
    }
    let chosen = match strategy.kind {
        SplitKind::AllDims => splittable,
        SplitKind::LongestDim => {
            let mut best = splittable[0];
            for &k in &splittable[1..] {
                if b.interval(k).width() > b.interval(best).width() {
                    best = k;
                }
            }
            vec![best]
        }
    };
    let halves: Vec<[Interval; 2]> = chosen
        .iter()
        .map(|&k| {
            let i = b.interval(k);
            let mid = i.midpoint();
            [
                Interval { lo: i.lo, hi: mid },
                Interval { lo: mid, hi: i.hi },
            ]
        })
        .collect();
    let m = chosen.len();
    let children = (0..1usize << m)
        .map(|code| {
            let mut intervals = b.intervals.clone();
            for (j, &k) in chosen.iter().enumerate() {
                let bit = (code >> (m - 1 - j)) & 1;
                intervals[k] = halves[j][bit];
            }
            HyperBox { intervals }
        })
        .collect();
    Ok(children)
}

/// Exact closed-set containment `b ⊆ ⋃ u`.
pub fn box_subset_of_union(b: &HyperBox, u: &BoxUnion) -> Result<bool> {
    check_dims(u.dims(), b.dims())?;
    // fast path for the common single-target case
    if u.boxes().iter().any(|c| b.is_subset_of(c)) {
        return Ok(true);
    }
    let cover: Vec<MixedBox> = u
        .boxes()
        .iter()
        .filter(|c| c.intersects(b))
        .map(HyperBox::to_mixed)
        .collect();
    Ok(mixed_subset_of_union(&b.to_mixed(), &cover))
}

/// Closed-set disjointness `b ∩ ⋃ u = ∅`; touching faces intersect.
pub fn box_disjoint_from_union(b: &HyperBox, u: &BoxUnion) -> Result<bool> {
    check_dims(u.dims(), b.dims())?;
    Ok(!u.boxes().iter().any(|c| c.intersects(b)))
}

/// Range of `Σ cᵢ·vᵢ + offset` with every coefficient, variable and the
/// offset ranging independently over its interval.
pub fn interval_affine_eval(terms: &[(Interval, Interval)], offset: Interval) -> Interval {
    terms
        .iter()
        .fold(offset, |acc, (coeff, var)| acc.add(&coeff.mul(var)))
}

pub(crate) fn check_dims(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
