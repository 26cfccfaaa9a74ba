//! Arc reversal, the S-as-root fast path for chain-shaped ancestor sets
//! under BDe priors, and the BIC heuristic for everything else.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NetworkStructure;
use crate::math::ln;
use crate::score::{LogScore, Method};
use crate::selection::{marginal_likelihood, EnumerationBudget, SelectionProblem, Strategy};

/// Reverses `parent -> child`. The child inherits the parent's parents and
/// the parent inherits the child's other parents.
pub fn reverse_arc(structure: &NetworkStructure, parent: usize, child: usize) -> Result<NetworkStructure> {
    if !structure.has_edge(parent, child) {
        return Err(Error::MissingEdge(structure.name(parent).to_string(), structure.name(child).to_string()));
    }
    let mut without = structure.clone().without_manipulation_constraint();
    without.remove_edge(parent, child);
    if let Some(path) = without.directed_path(parent, child) {
        return Err(Error::ReversalCycle {
            parent: structure.name(parent).to_string(),
            child: structure.name(child).to_string(),
            path: path.iter().map(|&v| structure.name(v).to_string()).collect(),
        });
    }
    let mut parents = structure.parent_sets().to_vec();
    let pu = parents[parent].clone();
    let pv: Vec<usize> = parents[child].iter().copied().filter(|&p| p != parent).collect();
    parents[child] = merge(&pv, &pu);
    let mut pu_new = merge(&pu, &pv);
    pu_new.push(child);
    parents[parent] = pu_new;
    without.with_parents(parents)
}

fn merge(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Arc reversals that make `S` a root.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversalPlan {
    /// `(parent, child)` in the orientation each arc had when reversed.
    pub reversed: Vec<(usize, usize)>,
    pub result: NetworkStructure,
    /// `S` and its ancestors formed a chain (every member has at most one
    /// parent), so the reversal adds no parents.
    pub tree_valid: bool,
}

impl ReversalPlan {
    /// Replays the plan on `original`.
    pub fn apply(&self, original: &NetworkStructure) -> Result<NetworkStructure> {
        let mut s = original.clone();
        for &(p, c) in &self.reversed {
            s = reverse_arc(&s, p, c)?;
        }
        Ok(s)
    }

    pub fn reversed_names(&self) -> Vec<(String, String)> {
        self.reversed.iter().map(|&(p, c)| (self.result.name(p).to_string(), self.result.name(c).to_string())).collect()
    }
}

/// Every member of `{S} ∪ ancestors(S)` has at most one parent.
pub fn tree_valid(structure: &NetworkStructure) -> bool {
    let Some(s) = structure.selection() else { return false };
    let mut a = structure.ancestors(s);
    a.push(s);
    a.iter().all(|&v| structure.parents(v).len() <= 1)
}

/// Takes the topological order of `{S} ∪ ancestors(S)` and reverses it by
/// adjacent transpositions (first element bubbled to the end, then the
/// next, ...), reversing the arc between the swapped pair whenever there is
/// one. Adjacent members of a topological order never have another path
/// between them, so every reversal is acyclic.
pub fn make_s_root(structure: &NetworkStructure) -> Result<ReversalPlan> {
    let s = structure.require_selection()?;
    let tree = tree_valid(structure);
    let mut members = structure.ancestors(s);
    members.push(s);
    let order = structure.topological_order()?;
    let mut list: Vec<usize> = order.into_iter().filter(|v| members.binary_search(v).is_ok() || *v == s).collect();
    let mut current = structure.clone();
    let mut reversed = Vec::new();
    let k = list.len();
    for pass in 0..k.saturating_sub(1) {
        for j in 0..k - 1 - pass {
            let (u, v) = (list[j], list[j + 1]);
            if current.has_edge(u, v) {
                current = reverse_arc(&current, u, v)?;
                reversed.push((u, v));
            }
            list.swap(j, j + 1);
        }
    }
    Ok(ReversalPlan { reversed, result: current, tree_valid: tree })
}

pub(crate) fn check_tree(problem: &SelectionProblem) -> Result<()> {
    if !problem.prior.is_likelihood_equivalent() {
        return Err(Error::FastPathRequiresBde);
    }
    if !tree_valid(&problem.structure) {
        return Err(Error::FastPathNotTree);
    }
    Ok(())
}

pub(crate) fn tree_score_at(problem: &SelectionProblem, m_f: u64) -> Result<f64> {
    check_tree(problem)?;
    let plan = make_s_root(&problem.structure)?;
    let reversed = problem.with_structure(plan.result)?;
    crate::selection::direct_at(&reversed, m_f)
}

/// Scores the S-root reversal of a chain-shaped ancestor set with BDe
/// priors rebuilt for the reversed structure.
pub fn tree_fastpath_score(problem: &SelectionProblem, budget: EnumerationBudget) -> Result<LogScore> {
    marginal_likelihood(problem, Strategy::Tree, budget)
}

/// Result of the BIC heuristic.
#[derive(Debug, Clone, PartialEq)]
pub struct BicRecord {
    pub log_likelihood: f64,
    /// Parameters of the original structure.
    pub param_count: u64,
    pub bic: f64,
    /// Sample size used in the penalty: `m_T + m_F`.
    pub sample_size: u64,
    /// `(variable, row)` of parent configurations never observed in the
    /// fitted structure.
    pub empty_rows: Vec<(String, usize)>,
    pub plan: ReversalPlan,
}

/// Fits maximum-likelihood parameters to the S-root reversal and
/// penalises with the original structure's parameter count.
pub fn bic_heuristic_score(problem: &SelectionProblem, m_f: u64) -> Result<BicRecord> {
    let plan = make_s_root(&problem.structure)?;
    let m2 = &plan.result;
    let s = problem.selection();
    let mut counts: Vec<Vec<Vec<u64>>> = (0..m2.len()).map(|i| vec![vec![0; m2.arity(i)]; m2.parent_configs(i)]).collect();
    for (c, case) in problem.data.cases().iter().enumerate() {
        m2.check_closed(c, case)?;
        for i in 0..m2.len() {
            if let (Some(k), Some(j)) = (case[i], m2.row_index_partial(i, case)) {
                counts[i][j][k] += 1;
            }
        }
    }
    counts[s][0][problem.unsampled()] += m_f;
    let mut ll = 0.0;
    let mut empty_rows = Vec::new();
    for (i, table) in counts.iter().enumerate() {
        for (j, row) in table.iter().enumerate() {
            let n: u64 = row.iter().sum();
            if n == 0 {
                empty_rows.push((m2.name(i).to_string(), j));
                continue;
            }
            for &nk in row {
                if nk > 0 {
                    ll += nk as f64 * ln(nk as f64 / n as f64);
                }
            }
        }
    }
    let param_count = problem.structure.parameter_count();
    let sample_size = problem.m_t() as u64 + m_f;
    let penalty = if sample_size > 0 { 0.5 * param_count as f64 * ln(sample_size as f64) } else { 0.0 };
    Ok(BicRecord { log_likelihood: ll, param_count, bic: ll - penalty, sample_size, empty_rows, plan })
}

/// [`bic_heuristic_score`] as a [`LogScore`].
pub fn bic_log_score(problem: &SelectionProblem, m_f: u64) -> Result<LogScore> {
    Ok(LogScore { value: bic_heuristic_score(problem, m_f)?.bic, method: Method::Bic })
}
