//! Parameterised networks: factorised joint probability and exact
//! inference by enumeration.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NetworkStructure;

/// Conditional probability table `P(child | parent configuration)`.
/// Rows follow the structure's parent-configuration indexing.
#[derive(Debug, Clone, PartialEq)]
pub struct Cpt {
    pub rows: Vec<Vec<f64>>,
}

impl Cpt {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        Self { rows }
    }

    pub fn uniform(rows: usize, arity: usize) -> Self {
        Self { rows: vec![vec![1.0 / arity as f64; arity]; rows] }
    }

    /// Root table for a binary variable with `P(T) = p`.
    pub fn bernoulli(p: f64) -> Self {
        Self { rows: vec![vec![p, 1.0 - p]] }
    }
}

/// Tolerance on CPT row sums accepted by [`GeneratingNetwork::new`]; rows
/// are renormalised afterwards.
pub const ROW_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratingNetwork {
    structure: NetworkStructure,
    cpts: Vec<Cpt>,
}

impl GeneratingNetwork {
    pub fn new(structure: NetworkStructure, cpts: Vec<Cpt>) -> Result<Self> {
        if cpts.len() != structure.len() {
            return Err(Error::InvalidStructure("one CPT per variable is required".into()));
        }
        let mut cpts = cpts;
        for (i, cpt) in cpts.iter_mut().enumerate() {
            let bad = |reason: &str| Error::InvalidDistribution {
                variable: structure.name(i).to_string(),
                reason: reason.to_string(),
            };
            if cpt.rows.len() != structure.parent_configs(i) {
                return Err(bad("row count does not match parent configurations"));
            }
            for row in &mut cpt.rows {
                if row.len() != structure.arity(i) {
                    return Err(bad("row length does not match arity"));
                }
                if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return Err(bad("probabilities must be finite and nonnegative"));
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > ROW_SUM_TOLERANCE {
                    return Err(bad("row does not sum to 1"));
                }
                for p in row.iter_mut() {
                    *p /= sum;
                }
            }
        }
        Ok(Self { structure, cpts })
    }

    /// Every row uniform.
    pub fn uniform(structure: NetworkStructure) -> Self {
        let cpts = (0..structure.len()).map(|i| Cpt::uniform(structure.parent_configs(i), structure.arity(i))).collect();
        Self { structure, cpts }
    }

    pub fn structure(&self) -> &NetworkStructure {
        &self.structure
    }

    pub fn cpts(&self) -> &[Cpt] {
        &self.cpts
    }

    pub fn cpt(&self, i: usize) -> &Cpt {
        &self.cpts[i]
    }

    /// `P(X_i = state | parents as in `states`)`.
    pub fn conditional(&self, i: usize, states: &[usize]) -> f64 {
        self.cpts[i].rows[self.structure.row_index(i, states)][states[i]]
    }

    /// Product over variables of `P(x_i | pi_i)`.
    pub fn joint_probability(&self, case: &CaseAssignment) -> Result<f64> {
        if case.states.len() != self.structure.len() {
            return Err(Error::InvalidDataset("case does not cover the network's variables".into()));
        }
        for (i, &s) in case.states.iter().enumerate() {
            if s >= self.structure.arity(i) {
                return Err(Error::UnknownState {
                    variable: self.structure.name(i).to_string(),
                    state: s.to_string(),
                });
            }
        }
        Ok(self.joint_unchecked(&case.states))
    }

    pub(crate) fn joint_unchecked(&self, states: &[usize]) -> f64 {
        (0..self.structure.len()).map(|i| self.conditional(i, states)).product()
    }

    /// Visits every complete assignment consistent with `fixed` in
    /// lexicographic order (last free variable fastest).
    pub fn for_each_completion<F: FnMut(&[usize], f64)>(
        &self,
        fixed: &[Option<usize>],
        cap: u64,
        mut visit: F,
    ) -> Result<()> {
        let n = self.structure.len();
        let free: Vec<usize> = (0..n).filter(|&i| fixed[i].is_none()).collect();
        let states: u128 = free.iter().map(|&i| self.structure.arity(i) as u128).product();
        if states > cap as u128 {
            return Err(Error::EnumerationTooLarge { states, cap });
        }
        let mut cur: Vec<usize> = fixed.iter().map(|s| s.unwrap_or(0)).collect();
        loop {
            visit(&cur, self.joint_unchecked(&cur));
            let mut k = free.len();
            loop {
                if k == 0 {
                    return Ok(());
                }
                k -= 1;
                let v = free[k];
                cur[v] += 1;
                if cur[v] < self.structure.arity(v) {
                    break;
                }
                cur[v] = 0;
            }
        }
    }

    /// Exact posterior of `query` given `evidence` by full enumeration.
    pub fn infer_conditional(&self, evidence: &[(usize, usize)], query: usize, cap: u64) -> Result<Vec<f64>> {
        let n = self.structure.len();
        if query >= n {
            return Err(Error::InvalidStructure("query index out of range".into()));
        }
        let mut fixed = vec![None; n];
        for &(v, s) in evidence {
            if v >= n {
                return Err(Error::InvalidStructure("evidence index out of range".into()));
            }
            if s >= self.structure.arity(v) {
                return Err(Error::UnknownState { variable: self.structure.name(v).to_string(), state: s.to_string() });
            }
            if v == query {
                return Err(Error::InvalidStructure("query variable cannot be in the evidence".into()));
            }
            fixed[v] = Some(s);
        }
        let mut dist = vec![0.0; self.structure.arity(query)];
        self.for_each_completion(&fixed, cap, |states, p| dist[states[query]] += p)?;
        let total: f64 = dist.iter().sum();
        if total <= 0.0 {
            return Err(Error::ImpossibleEvidence);
        }
        for p in &mut dist {
            *p /= total;
        }
        Ok(dist)
    }

    /// Marginal over `vars` (ascending joint index, last variable fastest).
    pub fn marginal(&self, vars: &[usize], cap: u64) -> Result<Vec<f64>> {
        let size: usize = vars.iter().map(|&v| self.structure.arity(v)).product();
        let mut out = vec![0.0; size];
        let fixed = vec![None; self.structure.len()];
        self.for_each_completion(&fixed, cap, |states, p| {
            let mut idx = 0;
            for &v in vars {
                idx = idx * self.structure.arity(v) + states[v];
            }
            out[idx] += p;
        })?;
        Ok(out)
    }
}

/// One state per variable of a structure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaseAssignment {
    pub states: Vec<usize>,
}

impl CaseAssignment {
    pub fn new(states: Vec<usize>) -> Self {
        Self { states }
    }

    /// Builds a complete assignment from `(variable, state)` labels.
    pub fn from_labels(structure: &NetworkStructure, labels: &[(&str, &str)]) -> Result<Self> {
        let mut states = vec![None; structure.len()];
        for &(v, s) in labels {
            let i = structure.require(v)?;
            states[i] = Some(structure.variable(i).require_state(s)?);
        }
        let states = states
            .into_iter()
            .enumerate()
            .map(|(i, s)| {
                s.ok_or_else(|| Error::InvalidDataset(alloc::format!("case is missing `{}`", structure.name(i))))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { states })
    }
}
