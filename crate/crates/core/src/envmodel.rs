//! Environment transition relation as a finite set of guarded modes.
//!
//! Each [`Mode`] has an axis-aligned guard over the joint (state, action)
//! vector and, per next-state coordinate, an affine update whose coefficients
//! and offset are intervals. The relation is the nondeterministic union of all
//! enabled modes, with every interval coefficient chosen freely.
//!
//! Because each input variable occurs at most once per updated coordinate,
//! the interval image of a box under a mode is exact per coordinate, which
//! makes the implication and refutation checks decidable on boxes.

use crate::error::{Error, Result};
use crate::geometry::{
    box_disjoint_from_union, box_subset_of_union, check_dims, interval_affine_eval,
    mixed_subset_of_union, BoxUnion, HyperBox, Interval, MixedBox,
};
use rand::Rng;
use serde::Serialize;

/// `coeff · v[var]`, where `var` indexes the joint (state, action) vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub coeff: Interval,
    pub var: usize,
}

/// One next-state coordinate: `Σ terms + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineUpdate {
    pub terms: Vec<Term>,
    pub offset: Interval,
}

impl AffineUpdate {
    pub fn new(terms: Vec<Term>, offset: Interval) -> Self {
        Self { terms, offset }
    }

    fn range(&self, region: &HyperBox) -> Interval {
        let terms: Vec<(Interval, Interval)> = self
            .terms
            .iter()
            .map(|t| (t.coeff, region.interval(t.var)))
            .collect();
        interval_affine_eval(&terms, self.offset)
    }

    /// Evaluates with coefficients picked by `pick` from their intervals.
    fn eval_with(&self, joint: &[f64], mut pick: impl FnMut(&Interval) -> f64) -> f64 {
        self.terms.iter().fold(pick(&self.offset), |acc, t| {
            acc + pick(&t.coeff) * joint[t.var]
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    /// Constraint over the joint (state, action) vector.
    pub guard: MixedBox,
    /// One entry per state coordinate.
    pub update: Vec<AffineUpdate>,
}

impl Mode {
    /// Exact test whether the guard admits `(s, a)`.
    pub fn admits(&self, joint: &[f64]) -> bool {
        self.guard.contains_point(joint)
    }

    /// Box hull of the one-step image of `region` (a box over the joint
    /// vector). Exact per coordinate.
    pub fn image(&self, region: &HyperBox) -> HyperBox {
        HyperBox::new(self.update.iter().map(|u| u.range(region)).collect())
            .expect("update is nonempty")
    }

    /// Successor with every interval coefficient at its midpoint.
    pub fn midpoint_successor(&self, joint: &[f64]) -> Vec<f64> {
        self.update
            .iter()
            .map(|u| u.eval_with(joint, Interval::midpoint))
            .collect()
    }

    /// Successor with coefficients drawn uniformly from their intervals.
    pub fn sample_successor<R: Rng + ?Sized>(&self, joint: &[f64], rng: &mut R) -> Vec<f64> {
        self.update
            .iter()
            .map(|u| u.eval_with(joint, |i| sample_in(i, rng)))
            .collect()
    }
}

fn sample_in<R: Rng + ?Sized>(i: &Interval, rng: &mut R) -> f64 {
    if i.lo() == i.hi() {
        i.lo()
    } else {
        rng.random_range(i.lo()..=i.hi())
    }
}

/// Outcome of the per-region implication check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum CheckResult {
    Holds,
    Fails { mode: usize, image: HyperBox },
}

impl CheckResult {
    pub fn holds(&self) -> bool {
        matches!(self, CheckResult::Holds)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvModel {
    state_dim: usize,
    action_dim: usize,
    modes: Vec<Mode>,
}

impl EnvModel {
    pub fn new(state_dim: usize, action_dim: usize, modes: Vec<Mode>) -> Result<Self> {
        if state_dim == 0 || action_dim == 0 {
            return Err(Error::InvalidEnv("dimensions must be positive".into()));
        }
        if modes.is_empty() {
            return Err(Error::InvalidEnv("no modes".into()));
        }
        let joint = state_dim + action_dim;
        for (m, mode) in modes.iter().enumerate() {
            if mode.guard.dims() != joint {
                return Err(Error::InvalidEnv(format!(
                    "mode {m}: guard has {} constraints, expected {joint}",
                    mode.guard.dims()
                )));
            }
            if mode.update.len() != state_dim {
                return Err(Error::InvalidEnv(format!(
                    "mode {m}: {} update rows for {state_dim} state variables",
                    mode.update.len()
                )));
            }
            for (i, u) in mode.update.iter().enumerate() {
                let mut seen = vec![false; joint];
                for t in &u.terms {
                    if t.var >= joint {
                        return Err(Error::InvalidEnv(format!(
                            "mode {m}, coordinate {i}: variable index {} out of range",
                            t.var
                        )));
                    }
                    if std::mem::replace(&mut seen[t.var], true) {
                        return Err(Error::InvalidEnv(format!(
                            "mode {m}, coordinate {i}: variable {} appears twice",
                            t.var
                        )));
                    }
                }
            }
        }
        Ok(Self {
            state_dim,
            action_dim,
            modes,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    fn joint_region(&self, p: &HyperBox, psi: &HyperBox) -> Result<HyperBox> {
        check_dims(self.state_dim, p.dims())?;
        check_dims(self.action_dim, psi.dims())?;
        Ok(p.product(psi))
    }

    /// Modes whose guard meets `p × ψ`, each with the closure of that
    /// intersection.
    pub fn enabled_modes(&self, p: &HyperBox, psi: &HyperBox) -> Result<Vec<(usize, HyperBox)>> {
        let region = self.joint_region(p, psi)?.to_mixed();
        Ok(self
            .modes
            .iter()
            .enumerate()
            .filter_map(|(m, mode)| {
                let clipped = region.intersect(&mode.guard);
                if clipped.is_empty() {
                    None
                } else {
                    let closed = clipped.closure().to_closed().expect("bounded by region");
                    Some((m, closed))
                }
            })
            .collect())
    }

    /// One-step image of `region` (over the joint vector) under `mode`.
    pub fn env_image(&self, mode: &Mode, region: &HyperBox) -> Result<HyperBox> {
        check_dims(self.state_dim + self.action_dim, region.dims())?;
        Ok(mode.image(region))
    }

    /// Whether every successor of `p ∧ ψ` lies in `target`. Images are widened
    /// outward by `epsilon` first.
    pub fn check_env_implication(
        &self,
        p: &HyperBox,
        psi: &HyperBox,
        target: &BoxUnion,
        epsilon: f64,
    ) -> Result<CheckResult> {
        check_dims(self.state_dim, target.dims())?;
        for (m, region) in self.enabled_modes(p, psi)? {
            let image = self.modes[m].image(&region).widen(epsilon);
            if !box_subset_of_union(&image, target)? {
                return Ok(CheckResult::Fails { mode: m, image });
            }
        }
        Ok(CheckResult::Holds)
    }

    /// Whether every successor of `p ∧ ψ` lies outside `target` and every
    /// point of `p × ψ` has at least one successor.
    pub fn check_env_refutation(
        &self,
        p: &HyperBox,
        psi: &HyperBox,
        target: &BoxUnion,
        epsilon: f64,
    ) -> Result<bool> {
        check_dims(self.state_dim, target.dims())?;
        let joint = self.joint_region(p, psi)?;
        for (m, region) in self.enabled_modes(p, psi)? {
            let image = self.modes[m].image(&region).widen(epsilon);
            if !box_disjoint_from_union(&image, target)? {
                return Ok(false);
            }
        }
        Ok(self.check_totality(&joint))
    }

    /// True iff every point of `region` satisfies some mode guard. Strict
    /// guard endpoints are respected.
    pub fn check_totality(&self, region: &HyperBox) -> bool {
        if region.dims() != self.state_dim + self.action_dim {
            return false;
        }
        let guards: Vec<MixedBox> = self.modes.iter().map(|m| m.guard.clone()).collect();
        mixed_subset_of_union(&region.to_mixed(), &guards)
    }

    fn joint(&self, s: &[f64], a: &[f64]) -> Result<Vec<f64>> {
        check_dims(self.state_dim, s.len())?;
        check_dims(self.action_dim, a.len())?;
        Ok(s.iter().chain(a).copied().collect())
    }

    /// The first mode admitting `(s, a)` and its successor with midpoint
    /// coefficients.
    pub fn midpoint_successor(&self, s: &[f64], a: &[f64]) -> Result<Option<(usize, Vec<f64>)>> {
        let joint = self.joint(s, a)?;
        Ok(self
            .modes
            .iter()
            .position(|m| m.admits(&joint))
            .map(|m| (m, self.modes[m].midpoint_successor(&joint))))
    }

    /// A random successor of `(s, a)`: uniform choice among admitting modes,
    /// then uniform coefficients. `None` if no mode admits `(s, a)`.
    pub fn sample_successor<R: Rng + ?Sized>(
        &self,
        s: &[f64],
        a: &[f64],
        rng: &mut R,
    ) -> Result<Option<(usize, Vec<f64>)>> {
        let joint = self.joint(s, a)?;
        let admitting: Vec<usize> = (0..self.modes.len())
            .filter(|&m| self.modes[m].admits(&joint))
            .collect();
        if admitting.is_empty() {
            return Ok(None);
        }
        let m = admitting[rng.random_range(0..admitting.len())];
        Ok(Some((m, self.modes[m].sample_successor(&joint, rng))))
    }
}
