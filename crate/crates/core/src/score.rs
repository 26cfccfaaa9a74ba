//! Closed-form Dirichlet-multinomial marginal likelihood in log space.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::NetworkStructure;
use crate::math::ln_gamma;
use crate::prior::{FamilyPrior, FamilyTable};

/// Which computation produced a score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// Closed form on ancestrally closed data, no unsampled cases.
    Complete,
    /// `S` is a root: unsampled cases contribute only S-family factors.
    Direct,
    Tree,
    Collapsed,
    Ancestral,
    Full,
    Latent,
    Bic,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Complete => "complete",
            Method::Direct => "direct",
            Method::Tree => "tree",
            Method::Collapsed => "collapsed",
            Method::Ancestral => "ancestral",
            Method::Full => "full",
            Method::Latent => "latent",
            Method::Bic => "bic",
        }
    }
}

impl core::fmt::Display for Method {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Natural-log score; `-inf` for probability 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogScore {
    pub value: f64,
    pub method: Method,
}

/// `N_ijk` per variable, shaped like the family tables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SufficientCounts {
    pub tables: Vec<Vec<Vec<u64>>>,
}

impl SufficientCounts {
    pub fn zeros(structure: &NetworkStructure) -> Self {
        let tables = (0..structure.len()).map(|i| vec![vec![0; structure.arity(i)]; structure.parent_configs(i)]).collect();
        Self { tables }
    }

    /// Adds one case's contribution to each family of `scope` it fully
    /// observes.
    pub fn add_case(&mut self, structure: &NetworkStructure, case: &[Option<usize>], scope: &[usize], weight: u64) {
        for &i in scope {
            if let (Some(k), Some(j)) = (case[i], structure.row_index_partial(i, case)) {
                self.tables[i][j][k] += weight;
            }
        }
    }
}

/// Counts over `scope`; cases missing any family member contribute nothing
/// to that family. Families outside `scope` stay zero.
pub fn tally_counts(structure: &NetworkStructure, dataset: &Dataset, scope: &[usize]) -> SufficientCounts {
    let mut counts = SufficientCounts::zeros(structure);
    for case in dataset.cases() {
        counts.add_case(structure, case, scope, 1);
    }
    counts
}

/// One row: `lnG(a_j) - lnG(a_j + N_j) + sum_k lnG(a_jk + N_jk) - lnG(a_jk)`.
pub(crate) fn row_log_score(alpha: &[f64], counts: &[u64]) -> f64 {
    let mut a = 0.0;
    let mut n = 0u64;
    let mut s = 0.0;
    for (&ak, &nk) in alpha.iter().zip(counts) {
        a += ak;
        n += nk;
        if nk > 0 {
            s += ln_gamma(ak + nk as f64) - ln_gamma(ak);
        }
    }
    if n == 0 {
        return 0.0;
    }
    s + ln_gamma(a) - ln_gamma(a + n as f64)
}

fn check_table(i: usize, table: &FamilyTable, counts: &[Vec<u64>]) -> Result<()> {
    if table.rows.len() != counts.len() || table.rows.iter().zip(counts).any(|(a, n)| a.len() != n.len()) {
        return Err(Error::InvalidPrior(format!("prior table {i} does not match count shape")));
    }
    if table.rows.iter().flatten().any(|&a| !(a > 0.0 && a.is_finite())) {
        return Err(Error::InvalidPrior(format!("prior table {i} has a nonpositive or non-finite alpha")));
    }
    Ok(())
}

/// Score of one family's counts.
pub fn family_log_score(i: usize, table: &FamilyTable, counts: &[Vec<u64>]) -> Result<f64> {
    check_table(i, table, counts)?;
    Ok(table.rows.iter().zip(counts).map(|(a, n)| row_log_score(a, n)).sum())
}

/// Dirichlet-multinomial (uniform or BDe) log marginal likelihood of `counts`.
pub fn log_ch_score(counts: &SufficientCounts, prior: &FamilyPrior) -> Result<LogScore> {
    if counts.tables.len() != prior.tables.len() {
        return Err(Error::InvalidPrior("prior and counts cover different variables".into()));
    }
    let mut value = 0.0;
    for (i, (t, n)) in prior.tables.iter().zip(&counts.tables).enumerate() {
        value += family_log_score(i, t, n)?;
    }
    Ok(LogScore { value, method: Method::Complete })
}

/// Marginal likelihood of data whose observed set in each case is
/// ancestrally closed; unobserved downstream families integrate out.
pub fn score_ancestral(structure: &NetworkStructure, prior: &FamilyPrior, dataset: &Dataset) -> Result<LogScore> {
    check_dataset(structure, dataset)?;
    for (c, case) in dataset.cases().iter().enumerate() {
        structure.check_closed(c, case)?;
    }
    let all: Vec<usize> = (0..structure.len()).collect();
    log_ch_score(&tally_counts(structure, dataset, &all), prior)
}

pub(crate) fn check_dataset(structure: &NetworkStructure, dataset: &Dataset) -> Result<()> {
    if dataset.matches(structure) {
        Ok(())
    } else {
        Err(Error::InvalidDataset("dataset variables do not match the structure".into()))
    }
}
