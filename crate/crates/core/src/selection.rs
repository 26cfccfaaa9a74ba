//! Marginal likelihood of sampled data under selection: sums over the
//! unknown values of the unsampled cases, exact shortcuts, and a dispatcher.

use alloc::format;
use alloc::string::ToString;
use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::{Dataset, PopulationSpec};
use crate::engine::{check_budget, composition_count, next_odometer, saturating_pow, Coupled};
use crate::error::{Error, Result};
use crate::graph::NetworkStructure;
use crate::math::LogSumExp;
use crate::prior::{FamilyPrior, PriorModel};
use crate::score::{check_dataset, family_log_score, tally_counts, LogScore, Method, SufficientCounts};

/// Cap on the number of summation terms one score may visit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationBudget {
    pub max_terms: u64,
}

impl EnumerationBudget {
    pub fn new(max_terms: u64) -> Result<Self> {
        if max_terms == 0 {
            return Err(Error::InvalidPrior("budget must be at least 1".into()));
        }
        Ok(Self { max_terms })
    }
}

impl Default for EnumerationBudget {
    fn default() -> Self {
        Self { max_terms: crate::DEFAULT_BUDGET }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Auto,
    Full,
    Ancestral,
    Collapsed,
    Tree,
    Bic,
}

impl Strategy {
    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::Auto => "auto",
            Strategy::Full => "full",
            Strategy::Ancestral => "ancestral",
            Strategy::Collapsed => "collapsed",
            Strategy::Tree => "tree",
            Strategy::Bic => "bic",
        }
    }
}

impl core::str::FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "auto" => Strategy::Auto,
            "full" => Strategy::Full,
            "ancestral" => Strategy::Ancestral,
            "collapsed" => Strategy::Collapsed,
            "tree" => Strategy::Tree,
            "bic" => Strategy::Bic,
            other => return Err(Error::InvalidPrior(format!("unknown strategy `{other}`"))),
        })
    }
}

/// Which variables an ordered term count ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TermMode {
    /// Every non-selection variable of every unsampled case.
    Full,
    /// Ancestors of `S` only.
    Ancestral,
}

/// Structure, priors, sampled cases and the implied unsampled cases.
#[derive(Debug, Clone)]
pub struct SelectionProblem {
    pub structure: NetworkStructure,
    pub prior: Arc<PriorModel>,
    pub data: Arc<Dataset>,
    pub population: Arc<PopulationSpec>,
}

impl SelectionProblem {
    pub fn new(structure: NetworkStructure, prior: PriorModel, data: Dataset, population: PopulationSpec) -> Result<Self> {
        Self::shared(structure, Arc::new(prior), Arc::new(data), Arc::new(population))
    }

    pub fn shared(
        structure: NetworkStructure,
        prior: Arc<PriorModel>,
        data: Arc<Dataset>,
        population: Arc<PopulationSpec>,
    ) -> Result<Self> {
        let s = structure.require_selection()?;
        let unsampled = structure.unsampled_state().ok_or(Error::NoSelectionVariable)?;
        check_dataset(&structure, &data)?;
        for (c, case) in data.cases().iter().enumerate() {
            if case[s] == Some(unsampled) {
                return Err(Error::InvalidDataset(format!(
                    "case {c} is unsampled; unsampled cases are described by the population, not the data"
                )));
            }
        }
        for l in structure.latent_variables() {
            if data.cases().iter().any(|c| c[l].is_some()) {
                return Err(Error::LatentHasData(structure.name(l).to_string()));
            }
        }
        Ok(Self { structure, prior, data, population })
    }

    /// Same data, priors and population over another structure.
    pub fn with_structure(&self, structure: NetworkStructure) -> Result<Self> {
        Self::shared(structure, self.prior.clone(), self.data.clone(), self.population.clone())
    }

    pub fn selection(&self) -> usize {
        self.structure.selection().expect("validated")
    }

    pub fn unsampled(&self) -> usize {
        self.structure.unsampled_state().expect("validated")
    }

    pub fn m_t(&self) -> usize {
        self.data.len()
    }

    /// `{S}` plus the ancestors of `S`, ascending.
    pub fn ancestral_set(&self) -> Vec<usize> {
        let s = self.selection();
        let mut a = self.structure.ancestors(s);
        a.push(s);
        a.sort_unstable();
        a
    }

    /// `(m_F, ln P(m_F))` over the population prior for this structure.
    pub fn m_f_support(&self) -> Vec<(u64, f64)> {
        self.population.prior_for(&self.structure).support()
    }

    pub fn point_m_f(&self) -> Option<u64> {
        self.population.prior_for(&self.structure).point()
    }

    fn ancestors_of_s(&self) -> Vec<usize> {
        self.structure.ancestors(self.selection())
    }

    fn non_selection(&self) -> Vec<usize> {
        let s = self.selection();
        (0..self.structure.len()).filter(|&i| i != s).collect()
    }

    fn configs(&self, vars: &[usize]) -> u128 {
        vars.iter().fold(1u128, |acc, &v| acc.saturating_mul(self.structure.arity(v) as u128))
    }

    fn check_closed(&self) -> Result<()> {
        for (c, case) in self.data.cases().iter().enumerate() {
            self.structure.check_closed(c, case)?;
        }
        Ok(())
    }

    pub(crate) fn is_closed(&self) -> bool {
        self.check_closed().is_ok()
    }

    fn base_counts(&self) -> SufficientCounts {
        let all: Vec<usize> = (0..self.structure.len()).collect();
        tally_counts(&self.structure, &self.data, &all)
    }
}

/// Ordered completion count for one `m_F`, saturating.
pub fn term_count(problem: &SelectionProblem, mode: TermMode, m_f: u64) -> u128 {
    let vars = match mode {
        TermMode::Full => problem.non_selection(),
        TermMode::Ancestral => problem.ancestors_of_s(),
    };
    saturating_pow(problem.configs(&vars), m_f)
}

/// Number of count vectors the collapsed sum visits for one `m_F`.
pub fn collapsed_term_count(problem: &SelectionProblem, m_f: u64) -> u128 {
    composition_count(m_f, problem.configs(&problem.ancestors_of_s()))
}

fn untouched_score(problem: &SelectionProblem, prior: &FamilyPrior, counts: &SufficientCounts, touched: &[usize]) -> Result<f64> {
    let mut v = 0.0;
    for i in 0..problem.structure.len() {
        if touched.binary_search(&i).is_err() {
            v += family_log_score(i, &prior.tables[i], &counts.tables[i])?;
        }
    }
    Ok(v)
}

/// `(untouched families, log-sum over unsampled completions of the touched ones)`.
fn enumerate_at(
    problem: &SelectionProblem,
    m_f: u64,
    vars: &[usize],
    touched: &[usize],
    ordered: bool,
) -> Result<(f64, f64)> {
    problem.check_closed()?;
    let prior = problem.prior.family_prior(&problem.structure, m_f)?;
    let counts = problem.base_counts();
    let coupled = enumerate_touched(problem, &prior, &counts, m_f, vars, touched, ordered)?;
    Ok((untouched_score(problem, &prior, &counts, touched)?, coupled))
}

fn enumerate_touched(
    problem: &SelectionProblem,
    prior: &FamilyPrior,
    counts: &SufficientCounts,
    m_f: u64,
    vars: &[usize],
    touched: &[usize],
    ordered: bool,
) -> Result<f64> {
    if m_f > u32::MAX as u64 {
        return Err(Error::BudgetExceeded { terms: u128::MAX, budget: 0 });
    }
    let c = Coupled::new(&problem.structure, prior, counts, vars, touched, problem.selection(), problem.unsampled(), m_f)?;
    Ok(if ordered { c.sum_ordered(m_f) } else { c.sum_collapsed(m_f) })
}

/// Sum over every completion of every non-selection variable in the
/// unsampled cases, in lexicographic completion order.
pub fn score_full_enumeration(problem: &SelectionProblem, m_f: u64, budget: EnumerationBudget) -> Result<LogScore> {
    check_budget(term_count(problem, TermMode::Full, m_f), budget.max_terms)?;
    let vars = problem.non_selection();
    let touched: Vec<usize> = (0..problem.structure.len()).collect();
    let (u, c) = enumerate_at(problem, m_f, &vars, &touched, true)?;
    Ok(LogScore { value: u + c, method: Method::Full })
}

/// Sum over completions of the ancestors of `S` only.
pub fn score_ancestral_enumeration(problem: &SelectionProblem, m_f: u64, budget: EnumerationBudget) -> Result<LogScore> {
    check_budget(term_count(problem, TermMode::Ancestral, m_f), budget.max_terms)?;
    let (u, c) = enumerate_at(problem, m_f, &problem.ancestors_of_s(), &problem.ancestral_set(), true)?;
    Ok(LogScore { value: u + c, method: Method::Ancestral })
}

/// Ancestral sum regrouped by how many unsampled cases take each
/// configuration of the ancestors, weighted by multinomial coefficients.
pub fn score_count_collapsed(problem: &SelectionProblem, m_f: u64, budget: EnumerationBudget) -> Result<LogScore> {
    check_budget(collapsed_term_count(problem, m_f), budget.max_terms)?;
    let (u, c) = enumerate_at(problem, m_f, &problem.ancestors_of_s(), &problem.ancestral_set(), false)?;
    Ok(LogScore { value: u + c, method: Method::Collapsed })
}

/// Sums over latent values in every sampled case (ordered) and over
/// ancestor configurations of the unsampled cases (collapsed).
pub fn score_with_latents(
    problem: &SelectionProblem,
    latent_vars: &[usize],
    m_f: u64,
    budget: EnumerationBudget,
) -> Result<LogScore> {
    let s = &problem.structure;
    let mut latent: Vec<usize> = latent_vars.to_vec();
    latent.sort_unstable();
    latent.dedup();
    for &l in &latent {
        if l >= s.len() || !s.variable(l).latent {
            return Err(Error::InvalidStructure(format!("variable {} is not declared latent", l)));
        }
        if problem.data.cases().iter().any(|c| c[l].is_some()) {
            return Err(Error::LatentHasData(s.name(l).to_string()));
        }
    }
    let per_case = problem.configs(&latent);
    let outer = saturating_pow(per_case, problem.m_t() as u64);
    let inner = collapsed_term_count(problem, m_f);
    check_budget(outer.saturating_mul(inner), budget.max_terms)?;

    let prior = problem.prior.family_prior(s, m_f)?;
    let vars = problem.ancestors_of_s();
    let touched = problem.ancestral_set();
    let radix: Vec<usize> = (0..problem.m_t()).flat_map(|_| latent.iter().map(|&l| s.arity(l))).collect();
    let mut digits = vec![0usize; radix.len()];
    let mut cases = problem.data.cases().to_vec();
    let all: Vec<usize> = (0..s.len()).collect();
    let mut acc = LogSumExp::new();
    loop {
        for (c, case) in cases.iter_mut().enumerate() {
            for (k, &l) in latent.iter().enumerate() {
                case[l] = Some(digits[c * latent.len() + k]);
            }
        }
        let mut counts = SufficientCounts::zeros(s);
        for (c, case) in cases.iter().enumerate() {
            s.check_closed(c, case)?;
            counts.add_case(s, case, &all, 1);
        }
        let coupled = enumerate_touched(problem, &prior, &counts, m_f, &vars, &touched, false)?;
        acc.push(untouched_score(problem, &prior, &counts, &touched)? + coupled);
        if !next_odometer(&mut digits, &radix) {
            break;
        }
    }
    Ok(LogScore { value: acc.value(), method: Method::Latent })
}

/// Latent variables that cannot simply be integrated out because an
/// observed variable depends on them.
fn blocking_latents(problem: &SelectionProblem) -> Vec<usize> {
    if problem.is_closed() {
        return Vec::new();
    }
    problem.structure.latent_variables()
}

fn tree_applicable(problem: &SelectionProblem) -> bool {
    if !problem.prior.is_likelihood_equivalent() || !crate::transform::tree_valid(&problem.structure) {
        return false;
    }
    let a = problem.ancestral_set();
    problem.data.cases().iter().all(|c| a.iter().all(|&v| c[v].is_some()))
}

/// The exact method `auto` picks for the largest `m_F` in the support.
pub fn plan_method(problem: &SelectionProblem, budget: EnumerationBudget) -> Result<Method> {
    let m = problem.m_f_support().iter().map(|e| e.0).max().unwrap_or(0);
    let b = budget.max_terms as u128;
    let latents = blocking_latents(problem);
    if !latents.is_empty() {
        let outer = saturating_pow(problem.configs(&latents), problem.m_t() as u64);
        if outer.saturating_mul(collapsed_term_count(problem, m)) <= b {
            return Ok(Method::Latent);
        }
        return Err(Error::NoExactMethod { budget: budget.max_terms });
    }
    if problem.structure.parents(problem.selection()).is_empty() {
        return Ok(Method::Direct);
    }
    if tree_applicable(problem) {
        return Ok(Method::Tree);
    }
    if collapsed_term_count(problem, m) <= b {
        return Ok(Method::Collapsed);
    }
    if term_count(problem, TermMode::Ancestral, m) <= b {
        return Ok(Method::Ancestral);
    }
    if term_count(problem, TermMode::Full, m) <= b {
        return Ok(Method::Full);
    }
    Err(Error::NoExactMethod { budget: budget.max_terms })
}

fn score_at(problem: &SelectionProblem, method: Method, m_f: u64, budget: EnumerationBudget) -> Result<f64> {
    Ok(match method {
        Method::Full => score_full_enumeration(problem, m_f, budget)?.value,
        Method::Ancestral => score_ancestral_enumeration(problem, m_f, budget)?.value,
        Method::Collapsed | Method::Direct | Method::Complete => score_count_collapsed(problem, m_f, budget)?.value,
        Method::Tree => crate::transform::tree_score_at(problem, m_f)?,
        Method::Latent => score_with_latents(problem, &problem.structure.latent_variables(), m_f, budget)?.value,
        Method::Bic => crate::transform::bic_heuristic_score(problem, m_f)?.bic,
    })
}

fn mixture(problem: &SelectionProblem, mut at: impl FnMut(u64) -> Result<f64>) -> Result<f64> {
    let mut acc = LogSumExp::new();
    for (m, lp) in problem.m_f_support() {
        acc.push(lp + at(m)?);
    }
    Ok(acc.value())
}

/// Mixture over the m_F prior, each component scored by `auto`.
pub fn score_population_mixture(problem: &SelectionProblem, budget: EnumerationBudget) -> Result<LogScore> {
    marginal_likelihood(problem, Strategy::Auto, budget)
}

/// Top-level score: the m_F mixture with each component computed by the
/// method `strategy` selects.
pub fn marginal_likelihood(problem: &SelectionProblem, strategy: Strategy, budget: EnumerationBudget) -> Result<LogScore> {
    let method = match strategy {
        Strategy::Auto => plan_method(problem, budget)?,
        Strategy::Full => Method::Full,
        Strategy::Ancestral => Method::Ancestral,
        Strategy::Collapsed => Method::Collapsed,
        Strategy::Tree => Method::Tree,
        Strategy::Bic => {
            let m = problem.point_m_f().ok_or_else(|| {
                Error::InvalidPrior("the bic strategy needs a point-mass m_F prior".into())
            })?;
            return Ok(LogScore { value: score_at(problem, Method::Bic, m, budget)?, method: Method::Bic });
        }
    };
    if method == Method::Tree {
        crate::transform::check_tree(problem)?;
    }
    let value = mixture(problem, |m| score_at(problem, method, m, budget))?;
    Ok(LogScore { value, method })
}

/// The part of a score not owned by families outside `{S} ∪ ancestors(S)`.
pub(crate) struct Split {
    pub method: Method,
    pub coupled: f64,
}

/// Families outside `A` never see unsampled cases, and `S` is in `A`, so
/// their scores do not depend on m_F.
pub(crate) fn outside_family(problem: &SelectionProblem, i: usize) -> Result<f64> {
    let st = &problem.structure;
    let m = problem.m_f_support().first().map(|e| e.0).unwrap_or(0);
    let table = problem.prior.family_table(st, i, m)?;
    let mut counts = vec![vec![0u64; st.arity(i)]; st.parent_configs(i)];
    for case in problem.data.cases() {
        if let (Some(k), Some(j)) = (case[i], st.row_index_partial(i, case)) {
            counts[j][k] += 1;
        }
    }
    family_log_score(i, &table, &counts)
}

/// `None` when the split does not apply (blocking latents, forced
/// ordered enumeration).
pub(crate) fn coupled_term(problem: &SelectionProblem, budget: EnumerationBudget) -> Result<Option<Split>> {
    let method = plan_method(problem, budget)?;
    if !matches!(method, Method::Direct | Method::Collapsed | Method::Tree) {
        return Ok(None);
    }
    problem.check_closed()?;
    let a = problem.ancestral_set();
    let outside: Vec<usize> = (0..problem.structure.len()).filter(|i| a.binary_search(i).is_err()).collect();
    let coupled = match method {
        Method::Tree => {
            let mut out = 0.0;
            for &i in &outside {
                out += outside_family(problem, i)?;
            }
            mixture(problem, |m| crate::transform::tree_score_at(problem, m))? - out
        }
        _ => {
            let vars = problem.ancestors_of_s();
            let counts = problem.base_counts();
            check_budget(
                problem.m_f_support().iter().map(|e| collapsed_term_count(problem, e.0)).max().unwrap_or(1),
                budget.max_terms,
            )?;
            mixture(problem, |m| {
                let prior = problem.prior.family_prior(&problem.structure, m)?;
                enumerate_touched(problem, &prior, &counts, m, &vars, &a, false)
            })?
        }
    };
    Ok(Some(Split { method, coupled }))
}

pub(crate) fn direct_at(problem: &SelectionProblem, m_f: u64) -> Result<f64> {
    let s = problem.selection();
    if !problem.structure.parents(s).is_empty() {
        return Err(Error::InvalidStructure("S is not a root".into()));
    }
    let (u, c) = enumerate_at(problem, m_f, &[], &[s], false)?;
    Ok(u + c)
}
