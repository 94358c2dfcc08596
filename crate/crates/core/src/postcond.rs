//! Postcondition providers: given a state box `p`, return a box `ψ` that
//! contains every action the controller can produce from a state in `p`.

use crate::error::{Error, Result};
use crate::geometry::{check_dims, mixed_subset_of_union, HyperBox, MixedBox};
use crate::nn::{BoundMethod, NeuralNet};

/// One piece of a piecewise-constant controller: every state in `region`
/// maps to an action in `action`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub region: MixedBox,
    pub action: HyperBox,
}

/// A piecewise-constant controller whose cells partition `domain`.
#[derive(Debug, Clone, PartialEq)]
pub struct TableController {
    domain: HyperBox,
    cells: Vec<Cell>,
    action_dim: usize,
}

impl TableController {
    pub fn new(domain: HyperBox, cells: Vec<Cell>) -> Result<Self> {
        let Some(first) = cells.first() else {
            return Err(Error::InvalidTable("no cells".into()));
        };
        let action_dim = first.action.dims();
        for (i, cell) in cells.iter().enumerate() {
            check_dims(domain.dims(), cell.region.dims())?;
            check_dims(action_dim, cell.action.dims())?;
            if cell.region.is_empty() {
                return Err(Error::InvalidTable(format!("cell {i} has an empty region")));
            }
        }
        if !check_table_coverage(&cells, &domain) {
            return Err(Error::InvalidTable(
                "cells do not partition the state domain".into(),
            ));
        }
        Ok(Self {
            domain,
            cells,
            action_dim,
        })
    }

    pub fn domain(&self) -> &HyperBox {
        &self.domain
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    /// The cell containing `s`, respecting open endpoints.
    pub fn lookup(&self, s: &[f64]) -> Option<&Cell> {
        if !self.domain.contains_point(s) {
            return None;
        }
        self.cells.iter().find(|c| c.region.contains_point(s))
    }

    fn post(&self, p: &HyperBox) -> Result<HyperBox> {
        check_dims(self.domain.dims(), p.dims())?;
        if !p.is_subset_of(&self.domain) {
            return Err(Error::OutsideTableDomain);
        }
        let region = p.to_mixed();
        self.cells
            .iter()
            .filter(|c| !c.region.intersect(&region).is_empty())
            .map(|c| c.action.clone())
            .reduce(|acc, a| {
                acc.hull(&a)
                    .expect("cell action dims checked at construction")
            })
            .ok_or(Error::OutsideTableDomain)
    }
}

/// True iff every point of `domain` lies in exactly one cell region.
pub fn check_table_coverage(cells: &[Cell], domain: &HyperBox) -> bool {
    let domain = domain.to_mixed();
    if cells.iter().any(|c| c.region.dims() != domain.dims()) {
        return false;
    }
    let regions: Vec<MixedBox> = cells.iter().map(|c| c.region.intersect(&domain)).collect();
    for (i, a) in regions.iter().enumerate() {
        for b in &regions[i + 1..] {
            if !a.intersect(b).is_empty() {
                return false;
            }
        }
    }
    mixed_subset_of_union(&domain, &regions)
}

/// The controller as seen by the verifier: something that yields sound action
/// boxes for state boxes, and concrete actions for concrete states.
#[derive(Debug, Clone, PartialEq)]
pub enum PostconditionProvider {
    Network { net: NeuralNet, method: BoundMethod },
    Table(TableController),
}

impl PostconditionProvider {
    pub fn state_dim(&self) -> usize {
        match self {
            Self::Network { net, .. } => net.input_dim(),
            Self::Table(t) => t.domain.dims(),
        }
    }

    pub fn action_dim(&self) -> usize {
        match self {
            Self::Network { net, .. } => net.output_dim(),
            Self::Table(t) => t.action_dim,
        }
    }

    /// Returns a copy using `method` for network bounds. Tables are unchanged.
    pub fn with_method(&self, method: BoundMethod) -> Self {
        match self {
            Self::Network { net, .. } => Self::Network {
                net: net.clone(),
                method,
            },
            Self::Table(t) => Self::Table(t.clone()),
        }
    }

    pub fn post(&self, p: &HyperBox) -> Result<HyperBox> {
        match self {
            Self::Network { net, method } => net.post(p, *method),
            Self::Table(t) => t.post(p),
        }
    }

    /// Every action the controller may take at `s`. `None` when `s` is
    /// outside a table's domain.
    pub fn action_set(&self, s: &[f64]) -> Result<Option<HyperBox>> {
        check_dims(self.state_dim(), s.len())?;
        match self {
            Self::Network { net, .. } => Ok(Some(HyperBox::point(&net.eval(s)?)?)),
            Self::Table(t) => Ok(t.lookup(s).map(|c| c.action.clone())),
        }
    }

    /// A concrete action at `s`: the network output, or the midpoint of the
    /// table cell's action box.
    pub fn action(&self, s: &[f64]) -> Result<Option<Vec<f64>>> {
        match self {
            Self::Network { net, .. } => net.eval(s).map(Some),
            Self::Table(_) => Ok(self.action_set(s)?.map(|a| a.midpoint())),
        }
    }
}
