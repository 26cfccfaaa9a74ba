//! Sampled cases and the description of the unsampled remainder of the
//! population.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{NetworkStructure, Role, VariableSpec};

/// Cases over a fixed variable list; `None` is MISSING.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    variables: Arc<Vec<VariableSpec>>,
    cases: Vec<Vec<Option<usize>>>,
}

impl Dataset {
    /// Validates state indices and that the selection variable, when
    /// declared, is present in every case.
    pub fn new(structure: &NetworkStructure, cases: Vec<Vec<Option<usize>>>) -> Result<Self> {
        let vars = structure.variables();
        let s = structure.selection();
        for (c, case) in cases.iter().enumerate() {
            if case.len() != vars.len() {
                return Err(Error::InvalidDataset(format!("case {c} has {} values, expected {}", case.len(), vars.len())));
            }
            for (i, v) in case.iter().enumerate() {
                if let Some(k) = *v {
                    if k >= vars[i].arity() {
                        return Err(Error::InvalidDataset(format!(
                            "case {c}: state index {k} out of range for `{}`",
                            vars[i].name
                        )));
                    }
                }
            }
            if let Some(s) = s {
                if case[s].is_none() {
                    return Err(Error::InvalidDataset(format!("case {c}: S never has a missing value")));
                }
            }
        }
        Ok(Self { variables: structure.shared_variables(), cases })
    }

    pub fn empty(structure: &NetworkStructure) -> Self {
        Self { variables: structure.shared_variables(), cases: Vec::new() }
    }

    /// Builds cases from state labels, `?` meaning MISSING. Columns follow
    /// declaration order.
    pub fn from_labels(structure: &NetworkStructure, rows: &[&[&str]]) -> Result<Self> {
        let vars = structure.variables();
        let mut cases = Vec::with_capacity(rows.len());
        for (c, row) in rows.iter().enumerate() {
            if row.len() != vars.len() {
                return Err(Error::InvalidDataset(format!("row {c} has {} values, expected {}", row.len(), vars.len())));
            }
            let case = row
                .iter()
                .zip(vars)
                .map(|(&l, v)| if l == "?" { Ok(None) } else { v.require_state(l).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            cases.push(case);
        }
        Self::new(structure, cases)
    }

    pub fn variables(&self) -> &[VariableSpec] {
        &self.variables
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn cases(&self) -> &[Vec<Option<usize>>] {
        &self.cases
    }

    pub fn case(&self, c: usize) -> &[Option<usize>] {
        &self.cases[c]
    }

    pub fn push(&mut self, case: Vec<Option<usize>>) -> Result<()> {
        if case.len() != self.variables.len() {
            return Err(Error::InvalidDataset("case width does not match variables".into()));
        }
        self.cases.push(case);
        Ok(())
    }

    /// Same variables (by name, states and order) as `structure`.
    pub fn matches(&self, structure: &NetworkStructure) -> bool {
        let a = self.variables.as_slice();
        let b = structure.variables();
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.name == y.name && x.states == y.states)
    }

    /// Splits off explicit unsampled rows, returning the sampled cases and
    /// the number removed. Unsampled rows may carry only `S` and
    /// manipulation values; the latter are discarded.
    pub fn split_unsampled(&self, structure: &NetworkStructure) -> Result<(Dataset, u64)> {
        let s = structure.require_selection()?;
        let unsampled = structure.unsampled_state().ok_or(Error::NoSelectionVariable)?;
        let mut kept = Vec::new();
        let mut removed = 0u64;
        for (c, case) in self.cases.iter().enumerate() {
            if case[s] == Some(unsampled) {
                for (i, v) in case.iter().enumerate() {
                    if i != s && v.is_some() && structure.variable(i).role == Role::Domain {
                        return Err(Error::InvalidDataset(format!(
                            "case {c}: unsampled case has a value for `{}`",
                            structure.name(i)
                        )));
                    }
                }
                removed += 1;
            } else {
                kept.push(case.clone());
            }
        }
        Ok((Dataset { variables: self.variables.clone(), cases: kept }, removed))
    }

    /// Cases restricted to those with `S` equal to `state`.
    pub fn filter_state(&self, var: usize, state: usize) -> Dataset {
        let cases = self.cases.iter().filter(|c| c[var] == Some(state)).cloned().collect();
        Dataset { variables: self.variables.clone(), cases }
    }
}

/// Prior over the number of unsampled cases.
#[derive(Debug, Clone, PartialEq)]
pub enum MfPrior {
    Point(u64),
    /// `(value, probability)` with distinct values in ascending order.
    Categorical(Vec<(u64, f64)>),
}

impl MfPrior {
    pub fn categorical(entries: Vec<(u64, f64)>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (v, p) in entries {
            if !(p.is_finite() && p >= 0.0) {
                return Err(Error::InvalidPrior(format!("m_F probability for {v} is invalid")));
            }
            if map.insert(v, p).is_some() {
                return Err(Error::InvalidPrior(format!("m_F value {v} listed twice")));
            }
        }
        if map.is_empty() {
            return Err(Error::InvalidPrior("m_F prior has no values".into()));
        }
        let total: f64 = map.values().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidPrior(format!("m_F probabilities sum to {total}")));
        }
        Ok(MfPrior::Categorical(map.into_iter().collect()))
    }

    /// Support with log-probabilities, zero-probability values dropped.
    pub fn support(&self) -> Vec<(u64, f64)> {
        match self {
            MfPrior::Point(m) => alloc::vec![(*m, 0.0)],
            MfPrior::Categorical(e) => e.iter().filter(|(_, p)| *p > 0.0).map(|&(v, p)| (v, crate::math::ln(p))).collect(),
        }
    }

    pub fn point(&self) -> Option<u64> {
        match self {
            MfPrior::Point(m) => Some(*m),
            MfPrior::Categorical(e) if e.len() == 1 => Some(e[0].0),
            MfPrior::Categorical(_) => None,
        }
    }

    pub fn max(&self) -> u64 {
        match self {
            MfPrior::Point(m) => *m,
            MfPrior::Categorical(e) => e.iter().map(|e| e.0).max().unwrap_or(0),
        }
    }

    /// Shifts every value by `k` explicit unsampled rows.
    pub fn shifted(&self, k: u64) -> Self {
        match self {
            MfPrior::Point(m) => MfPrior::Point(m + k),
            MfPrior::Categorical(e) => MfPrior::Categorical(e.iter().map(|&(v, p)| (v + k, p)).collect()),
        }
    }
}

/// Unsampled cases of the population of interest. `m_T` is the number of
/// sampled cases and is not stored.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationSpec {
    pub m_f: MfPrior,
    /// Structure-specific m_F priors keyed by canonical encoding.
    pub per_structure: BTreeMap<String, MfPrior>,
}

impl PopulationSpec {
    pub fn point(m_f: u64) -> Self {
        Self { m_f: MfPrior::Point(m_f), per_structure: BTreeMap::new() }
    }

    pub fn new(m_f: MfPrior) -> Self {
        Self { m_f, per_structure: BTreeMap::new() }
    }

    pub fn prior_for(&self, structure: &NetworkStructure) -> &MfPrior {
        self.per_structure.get(&structure.canonical_encoding()).unwrap_or(&self.m_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::structure;
    use alloc::string::ToString;
    use alloc::vec;

    fn five_var_sample() -> (NetworkStructure, Dataset) {
        let s = structure(&["X1", "X2", "X3", "X4", "X5", "S"], &[("X4", "S")]);
        let rows: &[&[&str]] = &[
            &["T", "F", "T", "T", "T", "T"],
            &["F", "T", "F", "T", "F", "T"],
            &["T", "F", "F", "T", "F", "T"],
            &["?", "?", "?", "?", "?", "F"],
            &["?", "?", "?", "?", "?", "F"],
            &["?", "?", "?", "?", "?", "F"],
            &["?", "?", "?", "?", "?", "F"],
        ];
        let d = Dataset::from_labels(&s, rows).unwrap();
        (s, d)
    }

    #[test]
    fn splits_sampled_and_unsampled() {
        let (s, d) = five_var_sample();
        let (sampled, m_f) = d.split_unsampled(&s).unwrap();
        assert_eq!(sampled.len(), 3);
        assert_eq!(m_f, 4);
    }

    #[test]
    fn rejects_missing_selection() {
        let s = structure(&["X", "S"], &[]);
        let err = Dataset::from_labels(&s, &[&["T", "?"]]).unwrap_err();
        assert!(err.to_string().contains("S never has a missing value"));
        assert!(Dataset::from_labels(&s, &[&["Q", "T"]]).is_err());
    }

    #[test]
    fn unsampled_rows_cannot_hold_domain_values() {
        let s = structure(&["X", "S"], &[]);
        let d = Dataset::from_labels(&s, &[&["T", "F"]]).unwrap();
        assert!(d.split_unsampled(&s).is_err());
    }

    #[test]
    fn mf_prior_validation() {
        assert!(MfPrior::categorical(vec![(1, 0.5), (2, 0.5)]).is_ok());
        assert!(MfPrior::categorical(vec![(1, 0.5), (2, 0.4)]).is_err());
        assert!(MfPrior::categorical(vec![(1, 0.5), (1, 0.5)]).is_err());
        let p = MfPrior::categorical(vec![(2, 0.25), (0, 0.75)]).unwrap();
        assert_eq!(p.support()[0].0, 0);
        assert_eq!(p.shifted(3).max(), 5);
        assert_eq!(MfPrior::Point(4).point(), Some(4));
    }
}
