//! Inductive-invariant checking for neural-network-controlled systems.
//!
//! A closed loop consists of a controller (a ReLU network or a
//! piecewise-constant table) and an environment of guarded affine modes. Given
//! a candidate invariant as a union of boxes, [`driver::check_inductiveness`]
//! searches for a bridge predicate `(p₁ ∧ ψ₁) ∨ … ∨ (pₙ ∧ ψₙ)` relating
//! regions of the candidate to sound bounds on the controller's actions there.
//! Once every clause maps into the candidate under the environment, the
//! candidate is inductive. A region whose successors all leave the candidate
//! refutes it instead.

pub mod driver;
pub mod envmodel;
pub mod error;
pub mod geometry;
pub mod nn;
pub mod postcond;
pub mod smtlib;

pub use driver::{
    bridge_covers_candidate, check_inductiveness, check_inductiveness_observed,
    check_init_condition, check_safety_condition, concretize_counterexample, BridgePredicate,
    Clause, Concretization, Outcome, QueryObserver, Stats, SystemSpec, Verdict, VerifyOptions,
    Witness,
};
pub use envmodel::{AffineUpdate, CheckResult, EnvModel, Mode, Term};
pub use error::{Error, Result};
pub use geometry::{
    box_disjoint_from_union, box_subset_of_union, interval_affine_eval, mixed_subset_of_union,
    split_box, BoxUnion, HyperBox, Interval, MixedBox, MixedInterval, SplitKind, SplitStrategy,
};
pub use nn::{
    load_network, Activation, BoundMethod, Layer, LayerDocument, ModelDocument, NeuralNet,
};
pub use postcond::{check_table_coverage, Cell, PostconditionProvider, TableController};
pub use smtlib::{emit_smtlib, Polarity, VarNames};
