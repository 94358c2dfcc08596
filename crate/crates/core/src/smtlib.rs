//! SMT-LIB2 export of the per-region environment checks.
//!
//! Each script asserts the negation of one check, so `unsat` means the check
//! is valid. Interval coefficients multiply variables, which is not linear;
//! the product `c·v` with `c ∈ [lo, hi]` is therefore encoded by a fresh
//! variable `t` constrained to lie between `lo·v` and `hi·v`, which is exactly
//! the set of values `c·v` can take and keeps the script in QF_LRA.

use crate::envmodel::EnvModel;
use crate::error::Result;
use crate::geometry::{check_dims, BoxUnion, HyperBox, Interval, MixedInterval};
use std::fmt::Write;

/// Which check the script encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Every successor lies in the target. Script is unsat iff this holds.
    Implication,
    /// Every successor lies outside the target. Script is unsat iff this holds.
    Refutation,
}

/// Variable names used in exported scripts.
#[derive(Debug, Clone, PartialEq)]
pub struct VarNames {
    pub state: Vec<String>,
    pub action: Vec<String>,
}

impl VarNames {
    /// `s0, s1, …` and `a0, a1, …`.
    pub fn generic(state_dim: usize, action_dim: usize) -> Self {
        Self {
            state: (0..state_dim).map(|i| format!("s{i}")).collect(),
            action: (0..action_dim).map(|i| format!("a{i}")).collect(),
        }
    }
}

fn symbol(name: &str) -> String {
    let simple = !name.is_empty()
        && !name.starts_with(|c: char| c.is_ascii_digit())
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || "~!@$%^&*_-+=<>.?/".contains(c));
    if simple {
        name.to_string()
    } else {
        format!("|{}|", name.replace(['|', '\\'], "_"))
    }
}

fn num(x: f64) -> String {
    let mag = format!("{}", x.abs());
    let mag = if mag.contains('.') {
        mag
    } else {
        format!("{mag}.0")
    };
    if x < 0.0 {
        format!("(- {mag})")
    } else {
        mag
    }
}

fn conj(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "true".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(and {})", parts.join(" ")),
    }
}

fn disj(parts: Vec<String>) -> String {
    match parts.len() {
        0 => "false".to_string(),
        1 => parts.into_iter().next().unwrap(),
        _ => format!("(or {})", parts.join(" ")),
    }
}

fn closed_bounds(var: &str, i: &Interval) -> Vec<String> {
    if i.lo() == i.hi() {
        vec![format!("(= {var} {})", num(i.lo()))]
    } else {
        vec![
            format!("(<= {} {var})", num(i.lo())),
            format!("(<= {var} {})", num(i.hi())),
        ]
    }
}

fn mixed_bounds(var: &str, i: &MixedInterval) -> Vec<String> {
    let mut out = Vec::new();
    if i.lo.is_finite() {
        let op = if i.lo_open { "<" } else { "<=" };
        out.push(format!("({op} {} {var})", num(i.lo)));
    }
    if i.hi.is_finite() {
        let op = if i.hi_open { "<" } else { "<=" };
        out.push(format!("({op} {var} {})", num(i.hi)));
    }
    out
}

fn box_membership(vars: &[String], b: &HyperBox) -> String {
    conj(
        vars.iter()
            .zip(b.intervals())
            .flat_map(|(v, i)| closed_bounds(v, i))
            .collect(),
    )
}

/// Renders the implication or refutation query for region `p`, action box
/// `psi` and candidate `target` as an SMT-LIB2 script.
pub fn emit_smtlib(
    p: &HyperBox,
    psi: &HyperBox,
    env: &EnvModel,
    target: &BoxUnion,
    polarity: Polarity,
    names: &VarNames,
) -> Result<String> {
    check_dims(env.state_dim(), p.dims())?;
    check_dims(env.action_dim(), psi.dims())?;
    check_dims(env.state_dim(), target.dims())?;
    check_dims(env.state_dim(), names.state.len())?;
    check_dims(env.action_dim(), names.action.len())?;

    let state: Vec<String> = names.state.iter().map(|n| symbol(n)).collect();
    let action: Vec<String> = names.action.iter().map(|n| symbol(n)).collect();
    let next: Vec<String> = names
        .state
        .iter()
        .map(|n| symbol(&format!("{n}_next")))
        .collect();
    let joint: Vec<&String> = state.iter().chain(&action).collect();

    let mut fresh = Vec::new();
    let mut modes = Vec::new();
    for (m, mode) in env.modes().iter().enumerate() {
        let mut parts: Vec<String> = joint
            .iter()
            .zip(mode.guard.intervals())
            .flat_map(|(v, i)| mixed_bounds(v, i))
            .collect();
        for (i, update) in mode.update.iter().enumerate() {
            let mut summands = Vec::new();
            for (k, term) in update.terms.iter().enumerate() {
                let v = joint[term.var];
                let (lo, hi) = (term.coeff.lo(), term.coeff.hi());
                if lo == hi {
                    summands.push(format!("(* {} {v})", num(lo)));
                } else {
                    let t = format!("nd_m{m}_x{i}_t{k}");
                    let (l, h) = (
                        format!("(* {} {v})", num(lo)),
                        format!("(* {} {v})", num(hi)),
                    );
                    parts.push(format!(
                        "(or (and (<= {l} {t}) (<= {t} {h})) (and (<= {h} {t}) (<= {t} {l})))"
                    ));
                    summands.push(t.clone());
                    fresh.push(t);
                }
            }
            if update.offset.lo() == update.offset.hi() {
                summands.push(num(update.offset.lo()));
            } else {
                let o = format!("nd_m{m}_x{i}_off");
                parts.extend(closed_bounds(&o, &update.offset));
                summands.push(o.clone());
                fresh.push(o);
            }
            let rhs = if summands.len() == 1 {
                summands.pop().unwrap()
            } else {
                format!("(+ {})", summands.join(" "))
            };
            parts.push(format!("(= {} {rhs})", next[i]));
        }
        modes.push(conj(parts));
    }

    let in_target = disj(
        target
            .boxes()
            .iter()
            .map(|b| box_membership(&next, b))
            .collect(),
    );
    let (label, goal) = match polarity {
        Polarity::Implication => ("implication", format!("(not {in_target})")),
        Polarity::Refutation => ("refutation", in_target),
    };

    let mut out = String::new();
    let _ = writeln!(out, "; {label} check: unsat iff it is valid");
    let _ = writeln!(out, "(set-logic QF_LRA)");
    for v in state.iter().chain(&action).chain(&next).chain(&fresh) {
        let _ = writeln!(out, "(declare-const {v} Real)");
    }
    let _ = writeln!(out, "(assert {})", box_membership(&state, p));
    let _ = writeln!(out, "(assert {})", box_membership(&action, psi));
    let _ = writeln!(out, "(assert {})", disj(modes));
    let _ = writeln!(out, "(assert {goal})");
    let _ = writeln!(out, "(check-sat)");
    let _ = writeln!(out, "(exit)");
    Ok(out)
}
