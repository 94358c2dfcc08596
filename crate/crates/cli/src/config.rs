//! System configuration documents.
//!
//! A config names the state and action variables, lists the init, safe and
//! candidate boxes as `[[lo, hi], ...]` in variable order, and describes the
//! controller and environment modes by variable name:
//!
//! ```json
//! {
//!   "name": "maze",
//!   "state_vars": ["x", "y"],
//!   "action_vars": ["a", "b"],
//!   "init": [[[0.3, 0.4], [0.6, 0.7]]],
//!   "safe": [[[0.22, 0.98], [0.54, 0.98]]],
//!   "candidate": [[[0.25, 0.95], [0.55, 0.95]]],
//!   "controller": { "model": "models/affine.json" },
//!   "env": { "modes": [ { "guard": {}, "update": {
//!       "x": { "terms": [ { "var": "x", "coeff": 1 }, { "var": "a", "coeff": 0.1 } ] },
//!       "y": { "terms": [ { "var": "y", "coeff": 1 }, { "var": "b", "coeff": 0.1 } ] } } } ] },
//!   "options": { "bound_method": "crown", "split": "all-dims" }
//! }
//! ```

use crate::CliError;
use bridgecheck_core::{
    AffineUpdate, BoundMethod, BoxUnion, Cell, EnvModel, HyperBox, Interval, MixedBox,
    MixedInterval, Mode, ModelDocument, NeuralNet, PostconditionProvider, SplitKind, SplitStrategy,
    SystemSpec, TableController, Term, VarNames, VerifyOptions,
};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

/// A box as `[[lo, hi], ...]`, kept raw so errors can name the field.
pub type BoxDoc = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub state_vars: Vec<String>,
    pub action_vars: Vec<String>,
    pub init: Vec<BoxDoc>,
    pub safe: Vec<BoxDoc>,
    pub candidate: Vec<BoxDoc>,
    pub controller: ControllerConfig,
    pub env: EnvConfig,
    #[serde(default)]
    pub options: OptionsConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ControllerConfig {
    /// Path to a model document, relative to the config file.
    Model(PathBuf),
    Network(ModelDocument),
    Table(TableConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableConfig {
    pub domain: BoxDoc,
    pub cells: Vec<CellConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub region: Vec<BoundConfig>,
    pub action: BoxDoc,
}

/// An interval with optional, independently open or closed ends. A missing
/// end is unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default)]
    pub lo_open: bool,
    #[serde(default)]
    pub hi_open: bool,
}

impl BoundConfig {
    fn to_mixed(self) -> MixedInterval {
        MixedInterval::new(
            self.lo.unwrap_or(f64::NEG_INFINITY),
            self.hi.unwrap_or(f64::INFINITY),
            self.lo_open,
            self.hi_open,
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvConfig {
    pub modes: Vec<ModeConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    /// Constraints keyed by state or action variable; absent means free.
    #[serde(default)]
    pub guard: BTreeMap<String, BoundConfig>,
    /// One entry per state variable.
    pub update: BTreeMap<String, UpdateConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UpdateConfig {
    #[serde(default)]
    pub terms: Vec<TermConfig>,
    #[serde(default = "Scalar::zero")]
    pub offset: Scalar,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermConfig {
    pub var: String,
    pub coeff: Scalar,
}

/// A fixed value or a `[lo, hi]` range of nondeterministic values.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Scalar {
    Fixed(f64),
    Range([f64; 2]),
}

impl Scalar {
    fn zero() -> Self {
        Scalar::Fixed(0.0)
    }

    fn to_interval(self, field: &str) -> Result<Interval, CliError> {
        match self {
            Scalar::Fixed(v) => Ok(Interval::point(v)),
            Scalar::Range([lo, hi]) => Interval::new(lo, hi).map_err(|e| config_err(field, e)),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptionsConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound_method: Option<BoundMethod>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<SplitKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_splits: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub min_width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

fn config_err(field: &str, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {e}"))
}

impl SystemConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config is always serializable")
    }

    pub fn var_names(&self) -> VarNames {
        VarNames {
            state: self.state_vars.clone(),
            action: self.action_vars.clone(),
        }
    }

    pub fn verify_options(&self) -> Result<VerifyOptions, CliError> {
        let defaults = VerifyOptions::default();
        let o = &self.options;
        let split = SplitStrategy::new(
            o.split.unwrap_or(defaults.split.kind),
            o.min_width.unwrap_or(defaults.split.min_width),
        )
        .map_err(|e| config_err("options.min_width", e))?;
        Ok(VerifyOptions {
            split,
            bound_method: o.bound_method.unwrap_or(defaults.bound_method),
            max_splits: o.max_splits.unwrap_or(defaults.max_splits),
            outward_epsilon: o.epsilon.unwrap_or(defaults.outward_epsilon),
        })
    }

    /// Builds the verifier's system. Model paths resolve against `base_dir`.
    pub fn to_spec(&self, base_dir: &Path) -> Result<SystemSpec, CliError> {
        let n = self.state_vars.len();
        let m = self.action_vars.len();
        if n == 0 {
            return Err(config_err("state_vars", "must not be empty"));
        }
        if m == 0 {
            return Err(config_err("action_vars", "must not be empty"));
        }
        let all_vars: Vec<&String> = self.state_vars.iter().chain(&self.action_vars).collect();
        for (i, v) in all_vars.iter().enumerate() {
            if all_vars[..i].contains(v) {
                return Err(config_err(
                    "state_vars/action_vars",
                    format!("duplicate name `{v}`"),
                ));
            }
        }

        let init = union("init", &self.init, n)?;
        let safe = union("safe", &self.safe, n)?;
        let candidate = union("candidate", &self.candidate, n)?;
        let options = self.verify_options()?;
        let provider = self.provider(base_dir, options.bound_method)?;
        let env = self.env_model()?;
        SystemSpec::new(init, safe, candidate, provider, env, options)
            .map_err(|e| CliError::Config(e.to_string()))
    }

    fn provider(
        &self,
        base_dir: &Path,
        method: BoundMethod,
    ) -> Result<PostconditionProvider, CliError> {
        let network = |net: NeuralNet| PostconditionProvider::Network { net, method };
        match &self.controller {
            ControllerConfig::Model(path) => {
                let path = base_dir.join(path);
                let bytes = std::fs::read(&path).map_err(|e| CliError::io(&path, e))?;
                let net = bridgecheck_core::load_network(&bytes).map_err(|e| {
                    config_err(&format!("controller.model ({})", path.display()), e)
                })?;
                Ok(network(net))
            }
            ControllerConfig::Network(doc) => NeuralNet::from_document(doc)
                .map(network)
                .map_err(|e| config_err("controller.network", e)),
            ControllerConfig::Table(t) => {
                let domain = to_box("controller.table.domain", &t.domain, self.state_vars.len())?;
                let cells = t
                    .cells
                    .iter()
                    .enumerate()
                    .map(|(i, c)| {
                        let field = format!("controller.table.cells[{i}]");
                        if c.region.len() != self.state_vars.len() {
                            return Err(config_err(
                                &field,
                                format!(
                                    "region has {} bounds, expected {}",
                                    c.region.len(),
                                    self.state_vars.len()
                                ),
                            ));
                        }
                        Ok(Cell {
                            region: MixedBox::new(c.region.iter().map(|b| b.to_mixed()).collect()),
                            action: to_box(
                                &format!("{field}.action"),
                                &c.action,
                                self.action_vars.len(),
                            )?,
                        })
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                TableController::new(domain, cells)
                    .map(PostconditionProvider::Table)
                    .map_err(|e| config_err("controller.table", e))
            }
        }
    }

    fn var_index(&self, field: &str, name: &str) -> Result<usize, CliError> {
        self.state_vars
            .iter()
            .chain(&self.action_vars)
            .position(|v| v == name)
            .ok_or_else(|| config_err(field, format!("unknown variable `{name}`")))
    }

    fn env_model(&self) -> Result<EnvModel, CliError> {
        let n = self.state_vars.len();
        let m = self.action_vars.len();
        let mut modes = Vec::with_capacity(self.env.modes.len());
        for (k, mode) in self.env.modes.iter().enumerate() {
            let field = format!("env.modes[{k}]");
            let mut guard = vec![MixedInterval::UNBOUNDED; n + m];
            for (var, bound) in &mode.guard {
                let idx = self.var_index(&format!("{field}.guard"), var)?;
                guard[idx] = bound.to_mixed();
            }
            for var in mode.update.keys() {
                if !self.state_vars.contains(var) {
                    return Err(config_err(
                        &format!("{field}.update"),
                        format!("`{var}` is not a state variable"),
                    ));
                }
            }
            let update = self
                .state_vars
                .iter()
                .map(|var| {
                    let ufield = format!("{field}.update.{var}");
                    let u = mode
                        .update
                        .get(var)
                        .ok_or_else(|| config_err(&ufield, "missing update"))?;
                    let terms = u
                        .terms
                        .iter()
                        .map(|t| {
                            Ok(Term {
                                coeff: t.coeff.to_interval(&ufield)?,
                                var: self.var_index(&ufield, &t.var)?,
                            })
                        })
                        .collect::<Result<Vec<_>, CliError>>()?;
                    Ok(AffineUpdate::new(
                        terms,
                        u.offset.to_interval(&format!("{ufield}.offset"))?,
                    ))
                })
                .collect::<Result<Vec<_>, CliError>>()?;
            modes.push(Mode {
                guard: MixedBox::new(guard),
                update,
            });
        }
        EnvModel::new(n, m, modes).map_err(|e| config_err("env", e))
    }
}

fn to_box(field: &str, doc: &BoxDoc, dims: usize) -> Result<HyperBox, CliError> {
    if doc.len() != dims {
        return Err(config_err(
            field,
            format!("box has {} intervals, expected {dims}", doc.len()),
        ));
    }
    let intervals = doc
        .iter()
        .map(|&[lo, hi]| Interval::new(lo, hi))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| config_err(field, e))?;
    HyperBox::new(intervals).map_err(|e| config_err(field, e))
}

fn union(field: &str, docs: &[BoxDoc], dims: usize) -> Result<BoxUnion, CliError> {
    let boxes = docs
        .iter()
        .enumerate()
        .map(|(i, d)| to_box(&format!("{field}[{i}]"), d, dims))
        .collect::<Result<Vec<_>, _>>()?;
    BoxUnion::new(dims, boxes).map_err(|e| config_err(field, e))
}
