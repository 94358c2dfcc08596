//! Compositional inductiveness checking.
//!
//! The worklist starts from the boxes of the candidate invariant. Each
//! dequeued region `p` gets an action box `ψ` from the controller, then:
//!
//! 1. if every environment successor of `p ∧ ψ` stays in the candidate, the
//!    clause `(p, ψ)` joins the bridge predicate;
//! 2. else if every successor leaves the candidate, `p` and `ψ` falsify
//!    inductiveness and a concrete witness is extracted;
//! 3. otherwise `p` is split and its children are queued.
//!
//! An empty queue means the bridge covers the candidate and inductiveness
//! holds. Splitting may not terminate in general, so a split budget and a
//! minimum region width turn runaway refinement into an `Unknown` verdict.

use crate::envmodel::EnvModel;
use crate::error::{Error, Result};
use crate::geometry::{
    box_subset_of_union, check_dims, split_box, BoxUnion, HyperBox, SplitStrategy,
};
use crate::nn::BoundMethod;
use crate::postcond::PostconditionProvider;
use crate::smtlib::Polarity;
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::time::Instant;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub split: SplitStrategy,
    pub bound_method: BoundMethod,
    /// Number of splits allowed before giving up. Zero forbids splitting.
    pub max_splits: u64,
    /// Outward widening applied to environment images before they are
    /// compared against the candidate.
    pub outward_epsilon: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            split: SplitStrategy::default(),
            bound_method: BoundMethod::default(),
            max_splits: 100_000,
            outward_epsilon: 0.0,
        }
    }
}

/// A closed-loop system together with the candidate invariant to check.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub init: BoxUnion,
    pub safe: BoxUnion,
    pub candidate: BoxUnion,
    pub provider: PostconditionProvider,
    pub env: EnvModel,
    pub options: VerifyOptions,
}

impl SystemSpec {
    pub fn new(
        init: BoxUnion,
        safe: BoxUnion,
        candidate: BoxUnion,
        provider: PostconditionProvider,
        env: EnvModel,
        options: VerifyOptions,
    ) -> Result<Self> {
        let config = |e: Error| Error::Config(e.to_string());
        let n = env.state_dim();
        check_dims(n, provider.state_dim())
            .map_err(|e| Error::Config(format!("controller input: {e}")))?;
        check_dims(env.action_dim(), provider.action_dim())
            .map_err(|e| Error::Config(format!("controller output: {e}")))?;
        check_dims(n, init.dims()).map_err(config)?;
        check_dims(n, safe.dims()).map_err(config)?;
        check_dims(n, candidate.dims()).map_err(config)?;
        if candidate.is_empty() {
            return Err(Error::Config("candidate invariant is empty".into()));
        }
        if options.outward_epsilon.is_nan() || options.outward_epsilon < 0.0 {
            return Err(Error::Config("outward epsilon must be nonnegative".into()));
        }
        Ok(Self {
            init,
            safe,
            candidate,
            provider,
            env,
            options,
        })
    }

    pub fn state_dim(&self) -> usize {
        self.env.state_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.env.action_dim()
    }
}

/// One bridge clause `p ∧ ψ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "(HyperBox, HyperBox)", from = "(HyperBox, HyperBox)")]
pub struct Clause {
    pub region: HyperBox,
    pub actions: HyperBox,
}

impl From<Clause> for (HyperBox, HyperBox) {
    fn from(c: Clause) -> Self {
        (c.region, c.actions)
    }
}

impl From<(HyperBox, HyperBox)> for Clause {
    fn from((region, actions): (HyperBox, HyperBox)) -> Self {
        Clause { region, actions }
    }
}

/// Disjunction of clauses, in insertion order.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BridgePredicate {
    pub clauses: Vec<Clause>,
}

impl BridgePredicate {
    pub fn len(&self) -> usize {
        self.clauses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clauses.is_empty()
    }

    pub fn regions(&self) -> Vec<HyperBox> {
        self.clauses.iter().map(|c| c.region.clone()).collect()
    }
}

/// A concrete transition from inside the candidate to outside it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    pub mode: usize,
    pub next: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "lowercase")]
pub enum Verdict {
    Proved {
        bridge: BridgePredicate,
    },
    Falsified {
        fstate: HyperBox,
        fpred: HyperBox,
        witness: Option<Witness>,
        #[serde(skip_serializing_if = "Option::is_none", default)]
        note: Option<String>,
    },
    Unknown {
        reason: String,
    },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub splits: u64,
    /// Environment checks performed (implication plus refutation).
    pub smt_queries: u64,
    /// Postcondition computations, one per dequeued region.
    pub nnv_queries: u64,
    pub wall_time_s: f64,
}

impl Stats {
    /// Refutation checks that did not lead to a split: the falsifying region, or
    /// the region that exhausted the budget.
    pub fn expected_smt_queries(&self, verdict: &Verdict) -> u64 {
        let extra = match verdict {
            Verdict::Proved { .. } => 0,
            Verdict::Falsified { .. } | Verdict::Unknown { .. } => 1,
        };
        self.nnv_queries + self.splits + extra
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    #[serde(flatten)]
    pub verdict: Verdict,
    pub stats: Stats,
}

impl Outcome {
    pub fn is_proved(&self) -> bool {
        matches!(self.verdict, Verdict::Proved { .. })
    }

    pub fn is_falsified(&self) -> bool {
        matches!(self.verdict, Verdict::Falsified { .. })
    }

    /// The counter relation every run satisfies.
    pub fn counters_consistent(&self) -> bool {
        self.stats.smt_queries == self.stats.expected_smt_queries(&self.verdict)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("outcome is always serializable")
    }
}

/// Receives every environment check as it is issued.
pub trait QueryObserver {
    fn on_query(&mut self, seq: u64, polarity: Polarity, p: &HyperBox, psi: &HyperBox);
}

impl QueryObserver for () {
    fn on_query(&mut self, _: u64, _: Polarity, _: &HyperBox, _: &HyperBox) {}
}

/// Every initial state lies in the candidate.
pub fn check_init_condition(sys: &SystemSpec) -> Result<bool> {
    all_within(&sys.init, &sys.candidate)
}

/// Every candidate state is safe.
pub fn check_safety_condition(sys: &SystemSpec) -> Result<bool> {
    all_within(&sys.candidate, &sys.safe)
}

fn all_within(inner: &BoxUnion, outer: &BoxUnion) -> Result<bool> {
    for b in inner.boxes() {
        if !box_subset_of_union(b, outer)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Whether the clause regions and the candidate denote the same set.
pub fn bridge_covers_candidate(bridge: &BridgePredicate, candidate: &BoxUnion) -> Result<bool> {
    let regions = BoxUnion::new(candidate.dims(), bridge.regions())?;
    Ok(all_within(candidate, &regions)? && all_within(&regions, candidate)?)
}

pub fn check_inductiveness(sys: &SystemSpec) -> Result<Outcome> {
    check_inductiveness_observed(sys, &mut ())
}

pub fn check_inductiveness_observed(
    sys: &SystemSpec,
    observer: &mut dyn QueryObserver,
) -> Result<Outcome> {
    let start = Instant::now();
    let opts = &sys.options;
    let provider = sys.provider.with_method(opts.bound_method);
    let mut stats = Stats::default();
    let mut bridge = BridgePredicate::default();
    let mut queue: VecDeque<HyperBox> = sys.candidate.boxes().iter().cloned().collect();

    let finish = |verdict: Verdict, mut stats: Stats| {
        stats.wall_time_s = start.elapsed().as_secs_f64();
        Ok(Outcome { verdict, stats })
    };

    while let Some(p) = queue.pop_front() {
        let psi = provider.post(&p)?;
        stats.nnv_queries += 1;

        stats.smt_queries += 1;
        observer.on_query(stats.smt_queries, Polarity::Implication, &p, &psi);
        if sys
            .env
            .check_env_implication(&p, &psi, &sys.candidate, opts.outward_epsilon)?
            .holds()
        {
            bridge.clauses.push(Clause {
                region: p,
                actions: psi,
            });
            continue;
        }

        stats.smt_queries += 1;
        observer.on_query(stats.smt_queries, Polarity::Refutation, &p, &psi);
        if sys
            .env
            .check_env_refutation(&p, &psi, &sys.candidate, opts.outward_epsilon)?
        {
            let (witness, note) = match concretize_counterexample(&p, &psi, sys)? {
                Concretization::Witness(w) => (Some(w), None),
                Concretization::Failed(why) => (None, Some(why)),
            };
            let verdict = Verdict::Falsified {
                fstate: p,
                fpred: psi,
                witness,
                note,
            };
            return finish(verdict, stats);
        }

        if stats.splits >= opts.max_splits {
            let reason = format!("split budget of {} exhausted", opts.max_splits);
            return finish(Verdict::Unknown { reason }, stats);
        }
        match split_box(&p, &opts.split) {
            Ok(children) => {
                stats.splits += 1;
                queue.extend(children);
            }
            Err(Error::NoSplittableDimension) => {
                let reason = format!(
                    "region {:?} is no wider than the minimum split width {}",
                    p.intervals(),
                    opts.split.min_width
                );
                return finish(Verdict::Unknown { reason }, stats);
            }
            Err(e) => return Err(e),
        }
    }
    finish(Verdict::Proved { bridge }, stats)
}

#[derive(Debug, Clone, PartialEq)]
pub enum Concretization {
    Witness(Witness),
    /// No witness at the region midpoint; the region-level refutation still
    /// stands.
    Failed(String),
}

/// Picks a concrete violating transition inside a refuted region: the
/// midpoint of `p`, the controller's action there, the first mode admitting
/// them, and midpoint coefficients.
pub fn concretize_counterexample(
    p: &HyperBox,
    psi: &HyperBox,
    sys: &SystemSpec,
) -> Result<Concretization> {
    let state = p.midpoint();
    let Some(action) = sys.provider.action(&state)? else {
        return Ok(Concretization::Failed(format!(
            "controller has no action at {state:?}"
        )));
    };
    if !psi.contains_point(&action) {
        return Ok(Concretization::Failed(format!(
            "action {action:?} at {state:?} lies outside the postcondition"
        )));
    }
    let Some((mode, next)) = sys.env.midpoint_successor(&state, &action)? else {
        return Ok(Concretization::Failed(format!(
            "no environment mode admits state {state:?} with action {action:?}"
        )));
    };
    if sys.candidate.contains_point(&next) {
        return Ok(Concretization::Failed(format!(
            "midpoint successor {next:?} stays inside the candidate"
        )));
    }
    Ok(Concretization::Witness(Witness {
        state,
        action,
        mode,
        next,
    }))
}
