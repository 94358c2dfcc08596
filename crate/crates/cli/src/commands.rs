//! The `verify`, `bench` and `sample-check` commands.

use crate::config::SystemConfig;
use crate::CliError;
use bridgecheck_core::{
    check_inductiveness_observed, check_init_condition, check_safety_condition, emit_smtlib,
    BoundMethod, HyperBox, Outcome, Polarity, QueryObserver, SplitKind, SplitStrategy, SystemSpec,
    VarNames, Verdict,
};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const EXIT_PROVED: i32 = 0;
pub const EXIT_REFUTED: i32 = 1;
pub const EXIT_UNKNOWN: i32 = 2;
pub const EXIT_ERROR: i32 = 3;

/// Command-line overrides of a config's options.
#[derive(Debug, Clone, Default)]
pub struct VerifyFlags {
    pub bound_method: Option<BoundMethod>,
    pub split: Option<SplitKind>,
    pub max_splits: Option<u64>,
    pub min_width: Option<f64>,
    pub epsilon: Option<f64>,
    pub emit_smtlib: Option<PathBuf>,
    pub skip_init_safe: bool,
}

/// A parsed config with its spec, ready to run.
#[derive(Debug, Clone)]
pub struct LoadedSystem {
    pub name: String,
    pub names: VarNames,
    pub spec: SystemSpec,
}

impl LoadedSystem {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let config = SystemConfig::load(path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let spec = config.to_spec(base)?;
        let name = config.name.clone().unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default()
        });
        Ok(Self {
            name,
            names: config.var_names(),
            spec,
        })
    }

    pub fn apply(&mut self, flags: &VerifyFlags) -> Result<(), CliError> {
        let opts = &mut self.spec.options;
        if let Some(m) = flags.bound_method {
            opts.bound_method = m;
        }
        if flags.split.is_some() || flags.min_width.is_some() {
            opts.split = SplitStrategy::new(
                flags.split.unwrap_or(opts.split.kind),
                flags.min_width.unwrap_or(opts.split.min_width),
            )
            .map_err(|e| CliError::Config(format!("--min-width: {e}")))?;
        }
        if let Some(n) = flags.max_splits {
            opts.max_splits = n;
        }
        if let Some(e) = flags.epsilon {
            if e.is_nan() || e < 0.0 {
                return Err(CliError::Config(format!(
                    "--epsilon: must be nonnegative, got {e}"
                )));
            }
            opts.outward_epsilon = e;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub system: String,
    /// `None` when skipped.
    pub init_condition: Option<bool>,
    pub safety_condition: Option<bool>,
    pub outcome: Outcome,
}

impl VerifyReport {
    pub fn exit_code(&self) -> i32 {
        let conditions_fail =
            self.init_condition == Some(false) || self.safety_condition == Some(false);
        match self.outcome.verdict {
            Verdict::Falsified { .. } => EXIT_REFUTED,
            _ if conditions_fail => EXIT_REFUTED,
            Verdict::Unknown { .. } => EXIT_UNKNOWN,
            Verdict::Proved { .. } => EXIT_PROVED,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn to_table(&self) -> String {
        let cond = |c: Option<bool>| match c {
            Some(true) => "holds",
            Some(false) => "FAILS",
            None => "skipped",
        };
        let s = &self.outcome.stats;
        let mut out = format!(
            "system          {}\ninit ⊆ cand     {}\ncand ⊆ safe     {}\n",
            self.system,
            cond(self.init_condition),
            cond(self.safety_condition)
        );
        match &self.outcome.verdict {
            Verdict::Proved { bridge } => {
                out += &format!("inductiveness   PROVED ({} bridge clauses)\n", bridge.len());
            }
            Verdict::Falsified {
                fstate,
                fpred,
                witness,
                note,
            } => {
                out += "inductiveness   FALSIFIED\n";
                out += &format!("  region        {}\n", fmt_box(fstate));
                out += &format!("  actions       {}\n", fmt_box(fpred));
                match witness {
                    Some(w) => {
                        out += &format!(
                            "  witness       s = {:?}, a = {:?}, mode {}, s' = {:?}\n",
                            w.state, w.action, w.mode, w.next
                        );
                    }
                    None => {
                        out +=
                            &format!("  witness       none ({})\n", note.as_deref().unwrap_or(""))
                    }
                }
            }
            Verdict::Unknown { reason } => out += &format!("inductiveness   UNKNOWN ({reason})\n"),
        }
        out += &format!(
            "splits {}  smt_queries {}  nnv_queries {}  wall_time_s {:.6}\n",
            s.splits, s.smt_queries, s.nnv_queries, s.wall_time_s
        );
        out
    }
}

fn fmt_box(b: &HyperBox) -> String {
    let parts: Vec<String> = b
        .intervals()
        .iter()
        .map(|i| format!("[{}, {}]", i.lo(), i.hi()))
        .collect();
    parts.join(" × ")
}

/// Writes one SMT-LIB script per environment check.
struct SmtlibWriter<'a> {
    dir: &'a Path,
    sys: &'a LoadedSystem,
    error: Option<CliError>,
}

impl QueryObserver for SmtlibWriter<'_> {
    fn on_query(&mut self, seq: u64, polarity: Polarity, p: &HyperBox, psi: &HyperBox) {
        if self.error.is_some() {
            return;
        }
        let tag = match polarity {
            Polarity::Implication => "line8",
            Polarity::Refutation => "line11",
        };
        let path = self.dir.join(format!("query_{seq}_{tag}.smt2"));
        let spec = &self.sys.spec;
        let result = emit_smtlib(
            p,
            psi,
            &spec.env,
            &spec.candidate,
            polarity,
            &self.sys.names,
        )
        .map_err(CliError::from)
        .and_then(|script| std::fs::write(&path, script).map_err(|e| CliError::io(&path, e)));
        if let Err(e) = result {
            self.error = Some(e);
        }
    }
}

pub fn verify_system(sys: &LoadedSystem, flags: &VerifyFlags) -> Result<VerifyReport, CliError> {
    let (init, safe) = if flags.skip_init_safe {
        (None, None)
    } else {
        (
            Some(check_init_condition(&sys.spec)?),
            Some(check_safety_condition(&sys.spec)?),
        )
    };
    let outcome = match &flags.emit_smtlib {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
            let mut writer = SmtlibWriter {
                dir,
                sys,
                error: None,
            };
            let outcome = check_inductiveness_observed(&sys.spec, &mut writer)?;
            if let Some(e) = writer.error {
                return Err(e);
            }
            outcome
        }
        None => check_inductiveness_observed(&sys.spec, &mut ())?,
    };
    Ok(VerifyReport {
        system: sys.name.clone(),
        init_condition: init,
        safety_condition: safe,
        outcome,
    })
}

pub fn cmd_verify(path: &Path, flags: &VerifyFlags) -> Result<VerifyReport, CliError> {
    let mut sys = LoadedSystem::load(path)?;
    sys.apply(flags)?;
    verify_system(&sys, flags)
}

/// A manifest entry: a config path, optionally with a display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ManifestEntry {
    Path(PathBuf),
    Named { name: String, config: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub systems: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub name: String,
    pub config: PathBuf,
    /// `T`, `F`, `U`, or `error`.
    pub verified: String,
    pub wall_time_s: f64,
    pub splits: u64,
    pub smt_queries: u64,
    pub nnv_queries: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub rows: Vec<BenchRow>,
}

impl BenchmarkReport {
    pub fn has_errors(&self) -> bool {
        self.rows.iter().any(|r| r.error.is_some())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn to_table(&self) -> String {
        let width = self
            .rows
            .iter()
            .map(|r| r.name.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut out = format!(
            "{:<width$}  {:>8}  {:>10}  {:>8}  {:>8}  {:>8}\n",
            "system", "verified", "time (s)", "#splits", "#smt", "#nnv"
        );
        for r in &self.rows {
            if let Some(e) = &r.error {
                out += &format!("{:<width$}  {:>8}  {e}\n", r.name, r.verified);
            } else {
                out += &format!(
                    "{:<width$}  {:>8}  {:>10.4}  {:>8}  {:>8}  {:>8}\n",
                    r.name, r.verified, r.wall_time_s, r.splits, r.smt_queries, r.nnv_queries
                );
            }
        }
        out
    }
}

pub fn cmd_bench(manifest_path: &Path) -> Result<BenchmarkReport, CliError> {
    let text =
        std::fs::read_to_string(manifest_path).map_err(|e| CliError::io(manifest_path, e))?;
    let manifest: Manifest =
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    let base = manifest_path.parent().unwrap_or(Path::new("."));
    let rows = manifest
        .systems
        .iter()
        .map(|entry| {
            let (name, rel) = match entry {
                ManifestEntry::Path(p) => (None, p),
                ManifestEntry::Named { name, config } => (Some(name.clone()), config),
            };
            let path = base.join(rel);
            let result = LoadedSystem::load(&path).and_then(|sys| {
                let report = verify_system(&sys, &VerifyFlags::default())?;
                Ok((sys.name, report))
            });
            match result {
                Ok((sys_name, report)) => {
                    let s = report.outcome.stats;
                    BenchRow {
                        name: name.unwrap_or(sys_name),
                        config: rel.clone(),
                        verified: match report.exit_code() {
                            EXIT_PROVED => "T",
                            EXIT_REFUTED => "F",
                            _ => "U",
                        }
                        .to_string(),
                        wall_time_s: s.wall_time_s,
                        splits: s.splits,
                        smt_queries: s.smt_queries,
                        nnv_queries: s.nnv_queries,
                        error: None,
                    }
                }
                Err(e) => BenchRow {
                    name: name.unwrap_or_else(|| rel.display().to_string()),
                    config: rel.clone(),
                    verified: "error".to_string(),
                    wall_time_s: 0.0,
                    splits: 0,
                    smt_queries: 0,
                    nnv_queries: 0,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect();
    Ok(BenchmarkReport { rows })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub state: Vec<f64>,
    pub action: Vec<f64>,
    /// `None` when no mode admits the pair.
    pub mode: Option<usize>,
    pub next: Option<Vec<f64>>,
    pub violation: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleReport {
    pub system: String,
    pub seed: u64,
    pub samples: usize,
    pub violations: usize,
    /// Samples with no admitting mode (no successor, so no violation).
    pub stuck: usize,
    pub rows: Vec<SampleRow>,
}

impl SampleReport {
    pub fn violation_rows(&self) -> impl Iterator<Item = &SampleRow> {
        self.rows.iter().filter(|r| r.violation)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report is always serializable")
    }

    pub fn to_table(&self, max_rows: usize) -> String {
        let mut out = format!(
            "system {}  seed {}  samples {}  violations {}  stuck {}\n",
            self.system, self.seed, self.samples, self.violations, self.stuck
        );
        for r in self.violation_rows().take(max_rows) {
            out += &format!(
                "violation  s = {:?}, a = {:?}, mode {}, s' = {:?}\n",
                r.state,
                r.action,
                r.mode.map_or("-".into(), |m| m.to_string()),
                r.next.as_deref().unwrap_or(&[])
            );
        }
        if self.violations > max_rows {
            out += &format!("... {} more\n", self.violations - max_rows);
        }
        out
    }
}

fn sample_in<R: Rng>(b: &HyperBox, rng: &mut R) -> Vec<f64> {
    b.intervals()
        .iter()
        .map(|i| rng.random_range(i.lo()..=i.hi()))
        .collect()
}

/// Draws `n` states from the candidate (boxes weighted by volume), takes the
/// controller's action and one random environment successor for each, and
/// records successors that leave the candidate.
pub fn sample_check(sys: &LoadedSystem, n: usize, seed: u64) -> Result<SampleReport, CliError> {
    if n == 0 {
        return Err(CliError::Config("sample count must be at least 1".into()));
    }
    let spec = &sys.spec;
    let boxes = spec.candidate.boxes();
    let volumes: Vec<f64> = boxes.iter().map(|b| b.volume()).collect();
    let chooser = WeightedIndex::new(&volumes).ok();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    let (mut violations, mut stuck) = (0, 0);
    for _ in 0..n {
        let k = match &chooser {
            Some(w) => w.sample(&mut rng),
            None => rng.random_range(0..boxes.len()),
        };
        let state = sample_in(&boxes[k], &mut rng);
        let action_box = spec
            .provider
            .action_set(&state)?
            .ok_or_else(|| CliError::Config(format!("controller has no action at {state:?}")))?;
        let action = sample_in(&action_box, &mut rng);
        let row = match spec.env.sample_successor(&state, &action, &mut rng)? {
            Some((mode, next)) => {
                let violation = !spec.candidate.contains_point(&next);
                violations += usize::from(violation);
                SampleRow {
                    state,
                    action,
                    mode: Some(mode),
                    next: Some(next),
                    violation,
                }
            }
            None => {
                stuck += 1;
                SampleRow {
                    state,
                    action,
                    mode: None,
                    next: None,
                    violation: false,
                }
            }
        };
        rows.push(row);
    }
    Ok(SampleReport {
        system: sys.name.clone(),
        seed,
        samples: n,
        violations,
        stuck,
        rows,
    })
}

pub fn cmd_sample_check(path: &Path, n: usize, seed: u64) -> Result<SampleReport, CliError> {
    sample_check(&LoadedSystem::load(path)?, n, seed)
}
