//! Structure priors, exhaustive posteriors over small DAG spaces and greedy
//! hill climbing, on top of the selection-aware score.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::graph::{NetworkStructure, Role};
use crate::math::{exp, ln, LogSumExp};
use crate::score::{LogScore, Method};
use crate::selection::{coupled_term, marginal_likelihood, outside_family, EnumerationBudget, SelectionProblem, Strategy};

/// Default maximum number of parents per node.
pub const DEFAULT_MAX_PARENTS: usize = 3;
/// Default number of greedy restarts.
pub const DEFAULT_RESTARTS: usize = 10;
/// Largest number of domain variables exhaustive search accepts.
pub const MAX_EXHAUSTIVE_DOMAIN: usize = 4;

/// Restrictions on admissible structures.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConstraints {
    pub required: BTreeSet<(usize, usize)>,
    pub forbidden: BTreeSet<(usize, usize)>,
    /// Frozen parent set of `S`, when set.
    pub fixed_s_parents: Option<Vec<usize>>,
    /// Whether `S` may have children.
    pub allow_selection_children: bool,
    pub max_parents: usize,
}

impl SearchConstraints {
    /// No required or forbidden edges, `S` may take any parents and no
    /// children.
    pub fn unconstrained() -> Self {
        Self {
            required: BTreeSet::new(),
            forbidden: BTreeSet::new(),
            fixed_s_parents: None,
            allow_selection_children: false,
            max_parents: DEFAULT_MAX_PARENTS,
        }
    }

    /// Freezes the parents `S` has in `structure`.
    pub fn freeze_selection(mut self, structure: &NetworkStructure) -> Self {
        self.fixed_s_parents = structure.selection().map(|s| structure.parents(s).to_vec());
        self
    }

    /// Edge names resolved against `structure`.
    pub fn require_named(mut self, structure: &NetworkStructure, edges: &[(&str, &str)]) -> Result<Self> {
        for &(p, c) in edges {
            self.required.insert((structure.require(p)?, structure.require(c)?));
        }
        Ok(self)
    }

    pub fn forbid_named(mut self, structure: &NetworkStructure, edges: &[(&str, &str)]) -> Result<Self> {
        for &(p, c) in edges {
            self.forbidden.insert((structure.require(p)?, structure.require(c)?));
        }
        Ok(self)
    }

    /// Whether the edge `p -> c` may appear at all.
    pub fn pair_allowed(&self, structure: &NetworkStructure, p: usize, c: usize) -> bool {
        if p == c || self.forbidden.contains(&(p, c)) {
            return false;
        }
        let (vp, vc) = (structure.variable(p), structure.variable(c));
        if vc.role == Role::Manipulation {
            return false;
        }
        if vp.role == Role::Manipulation {
            return vp.target.as_deref() == Some(vc.name.as_str());
        }
        if vc.role == Role::Selection {
            if let Some(fixed) = &self.fixed_s_parents {
                return fixed.contains(&p);
            }
        }
        if vp.role == Role::Selection {
            return self.allow_selection_children;
        }
        true
    }

    /// Edges every admissible structure contains: required edges,
    /// manipulation edges and a frozen parent set of `S`.
    pub fn mandatory(&self, structure: &NetworkStructure) -> BTreeSet<(usize, usize)> {
        let mut out = self.required.clone();
        for (q, v) in structure.variables().iter().enumerate() {
            if v.role == Role::Manipulation {
                if let Some(t) = v.target.as_deref().and_then(|t| structure.index_of(t)) {
                    out.insert((q, t));
                }
            }
        }
        if let (Some(s), Some(fixed)) = (structure.selection(), &self.fixed_s_parents) {
            for &p in fixed {
                out.insert((p, s));
            }
        }
        out
    }

    fn parent_limit(&self, structure: &NetworkStructure, c: usize) -> usize {
        if structure.selection() == Some(c) {
            if let Some(fixed) = &self.fixed_s_parents {
                return fixed.len();
            }
        }
        self.max_parents
    }

    pub fn validate(&self, structure: &NetworkStructure) -> Result<()> {
        let n = structure.len();
        let in_range = |&(p, c): &(usize, usize)| p < n && c < n;
        if !self.required.iter().all(in_range) || !self.forbidden.iter().all(in_range) {
            return Err(Error::InvalidConstraints("edge endpoint out of range".into()));
        }
        if let Some(e) = self.required.intersection(&self.forbidden).next() {
            return Err(Error::InvalidConstraints(format!(
                "edge {} -> {} is both required and forbidden",
                structure.name(e.0),
                structure.name(e.1)
            )));
        }
        if let Some(fixed) = &self.fixed_s_parents {
            if structure.selection().is_none() || fixed.iter().any(|&p| p >= n) {
                return Err(Error::InvalidConstraints("fixed S parents need a selection variable".into()));
            }
        }
        for &(p, c) in &self.mandatory(structure) {
            if !self.pair_allowed(structure, p, c) {
                return Err(Error::InvalidConstraints(format!(
                    "required edge {} -> {} is not allowed",
                    structure.name(p),
                    structure.name(c)
                )));
            }
        }
        let minimal = self.minimal_structure(structure);
        if minimal.is_err() {
            return Err(Error::InvalidConstraints("required edges form a cycle".into()));
        }
        Ok(())
    }

    /// The structure with exactly the mandatory edges.
    pub fn minimal_structure(&self, structure: &NetworkStructure) -> Result<NetworkStructure> {
        let mut parents = vec![Vec::new(); structure.len()];
        for &(p, c) in &self.mandatory(structure) {
            parents[c].push(p);
        }
        structure.empty_like().with_parents(parents)
    }

    pub fn admissible(&self, structure: &NetworkStructure) -> bool {
        for c in 0..structure.len() {
            if structure.parents(c).len() > self.parent_limit(structure, c) {
                return false;
            }
            if structure.parents(c).iter().any(|&p| !self.pair_allowed(structure, p, c)) {
                return false;
            }
        }
        self.mandatory(structure).iter().all(|&(p, c)| structure.has_edge(p, c))
    }

    /// Every ordered pair that may carry an edge, in index order.
    pub fn candidate_edges(&self, structure: &NetworkStructure) -> Vec<(usize, usize)> {
        let n = structure.len();
        (0..n).flat_map(|p| (0..n).map(move |c| (p, c))).filter(|&(p, c)| self.pair_allowed(structure, p, c)).collect()
    }
}

/// `P(M)` up to a constant.
#[derive(Debug, Clone, PartialEq)]
pub enum StructurePrior {
    Uniform,
    /// Independent edge presence; pairs not listed use `default`.
    PerEdge { default: f64, edges: BTreeMap<(usize, usize), f64> },
}

impl StructurePrior {
    pub fn per_edge(default: f64, edges: BTreeMap<(usize, usize), f64>) -> Result<Self> {
        let ok = |p: f64| p > 0.0 && p < 1.0;
        if !ok(default) || !edges.values().all(|&p| ok(p)) {
            return Err(Error::InvalidPrior("edge probabilities must lie in (0, 1)".into()));
        }
        Ok(StructurePrior::PerEdge { default, edges })
    }
}

/// Log structure prior; `-inf` for inadmissible structures.
pub fn log_structure_prior(structure: &NetworkStructure, prior: &StructurePrior, constraints: &SearchConstraints) -> f64 {
    if !constraints.admissible(structure) {
        return f64::NEG_INFINITY;
    }
    match prior {
        StructurePrior::Uniform => 0.0,
        StructurePrior::PerEdge { default, edges } => constraints
            .candidate_edges(structure)
            .into_iter()
            .map(|e| {
                let p = edges.get(&e).copied().unwrap_or(*default);
                if structure.has_edge(e.0, e.1) { ln(p) } else { ln(1.0 - p) }
            })
            .sum(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoredStructure {
    pub structure: NetworkStructure,
    pub log_marginal_likelihood: f64,
    pub log_structure_prior: f64,
    pub log_unnormalized_posterior: f64,
    pub method: Method,
    /// Normalised posterior, when the whole space was enumerated.
    pub posterior: Option<f64>,
}

impl ScoredStructure {
    fn new(structure: NetworkStructure, ml: LogScore, log_prior: f64) -> Self {
        Self {
            structure,
            log_marginal_likelihood: ml.value,
            log_structure_prior: log_prior,
            log_unnormalized_posterior: ml.value + log_prior,
            method: ml.method,
            posterior: None,
        }
    }
}

/// Scores structures over one problem's data, reusing family scores for
/// variables outside `{S} ∪ ancestors(S)` and the coupled term for repeated
/// ancestor subgraphs.
pub struct CachedScorer<'a> {
    base: &'a SelectionProblem,
    strategy: Strategy,
    budget: EnumerationBudget,
    families: BTreeMap<(usize, Vec<usize>), f64>,
    coupled: BTreeMap<(Vec<(usize, Vec<usize>)>, String), Option<(f64, Method)>>,
    hits: u64,
    misses: u64,
}

impl<'a> CachedScorer<'a> {
    pub fn new(base: &'a SelectionProblem, strategy: Strategy, budget: EnumerationBudget) -> Self {
        Self { base, strategy, budget, families: BTreeMap::new(), coupled: BTreeMap::new(), hits: 0, misses: 0 }
    }

    pub fn cache_stats(&self) -> (u64, u64) {
        (self.hits, self.misses)
    }

    /// Direct score with no reuse.
    pub fn score_uncached(&self, structure: &NetworkStructure) -> Result<LogScore> {
        marginal_likelihood(&self.base.with_structure(structure.clone())?, self.strategy, self.budget)
    }

    pub fn score(&mut self, structure: &NetworkStructure) -> Result<LogScore> {
        if self.strategy != Strategy::Auto {
            return self.score_uncached(structure);
        }
        let problem = self.base.with_structure(structure.clone())?;
        let a = problem.ancestral_set();
        let key_struct = if problem.population.per_structure.is_empty() {
            String::new()
        } else {
            structure.canonical_encoding()
        };
        let key = (a.iter().map(|&v| (v, structure.parents(v).to_vec())).collect::<Vec<_>>(), key_struct);
        let coupled = match self.coupled.get(&key) {
            Some(v) => {
                self.hits += 1;
                *v
            }
            None => {
                self.misses += 1;
                let v = coupled_term(&problem, self.budget)?.map(|s| (s.coupled, s.method));
                self.coupled.insert(key, v);
                v
            }
        };
        let Some((coupled, method)) = coupled else {
            return marginal_likelihood(&problem, self.strategy, self.budget);
        };
        let mut value = coupled;
        for i in (0..structure.len()).filter(|i| a.binary_search(i).is_err()) {
            let key = (i, structure.parents(i).to_vec());
            value += match self.families.get(&key) {
                Some(&v) => {
                    self.hits += 1;
                    v
                }
                None => {
                    self.misses += 1;
                    let v = outside_family(&problem, i)?;
                    self.families.insert(key, v);
                    v
                }
            };
        }
        Ok(LogScore { value, method })
    }
}

/// Exhaustive search output.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTable {
    /// Sorted by posterior descending, ties by canonical encoding.
    pub structures: Vec<ScoredStructure>,
    /// `((parent, child), probability)` over every ordered pair.
    pub edge_posteriors: Vec<((String, String), f64)>,
}

fn domain_count(structure: &NetworkStructure) -> usize {
    structure.variables().iter().filter(|v| v.role == Role::Domain).count()
}

/// Every admissible DAG, in a fixed order.
pub fn enumerate_admissible(structure: &NetworkStructure, constraints: &SearchConstraints) -> Result<Vec<NetworkStructure>> {
    constraints.validate(structure)?;
    let n = structure.len();
    let mandatory = constraints.mandatory(structure);
    let mut options: Vec<Vec<Vec<usize>>> = Vec::with_capacity(n);
    for c in 0..n {
        let must: Vec<usize> = mandatory.iter().filter(|e| e.1 == c).map(|e| e.0).collect();
        let free: Vec<usize> =
            (0..n).filter(|&p| constraints.pair_allowed(structure, p, c) && !must.contains(&p)).collect();
        let limit = constraints.parent_limit(structure, c);
        let mut sets = Vec::new();
        for mask in 0u32..(1u32 << free.len()) {
            if must.len() + mask.count_ones() as usize > limit {
                continue;
            }
            let mut set = must.clone();
            set.extend(free.iter().enumerate().filter(|(b, _)| mask >> b & 1 == 1).map(|(_, &p)| p));
            set.sort_unstable();
            sets.push(set);
        }
        options.push(sets);
    }
    let radix: Vec<usize> = options.iter().map(Vec::len).collect();
    if radix.contains(&0) {
        return Ok(Vec::new());
    }
    let mut digits = vec![0usize; n];
    let mut out = Vec::new();
    let empty = structure.empty_like();
    loop {
        let parents: Vec<Vec<usize>> = (0..n).map(|c| options[c][digits[c]].clone()).collect();
        if let Ok(s) = empty.with_parents(parents) {
            out.push(s);
        }
        if !crate::engine::next_odometer(&mut digits, &radix) {
            break;
        }
    }
    Ok(out)
}

/// Posterior over every admissible structure.
pub fn exhaustive_posterior(
    problem: &SelectionProblem,
    prior: &StructurePrior,
    constraints: &SearchConstraints,
    strategy: Strategy,
    budget: EnumerationBudget,
) -> Result<PosteriorTable> {
    let st = &problem.structure;
    let d = domain_count(st);
    if d > MAX_EXHAUSTIVE_DOMAIN {
        return Err(Error::TooManyForExhaustive(d));
    }
    let candidates = enumerate_admissible(st, constraints)?;
    if candidates.is_empty() {
        return Err(Error::NoAdmissibleStart);
    }
    let mut scorer = CachedScorer::new(problem, strategy, budget);
    let mut scored = Vec::with_capacity(candidates.len());
    for s in candidates {
        let ml = scorer.score(&s)?;
        let lp = log_structure_prior(&s, prior, constraints);
        scored.push(ScoredStructure::new(s, ml, lp));
    }
    let mut lse = LogSumExp::new();
    for s in &scored {
        lse.push(s.log_unnormalized_posterior);
    }
    let z = lse.value();
    for s in &mut scored {
        s.posterior = Some(exp(s.log_unnormalized_posterior - z));
    }
    let mut keyed: Vec<(String, ScoredStructure)> = scored.into_iter().map(|s| (s.structure.canonical_encoding(), s)).collect();
    keyed.sort_by(|a, b| {
        b.1.log_unnormalized_posterior.total_cmp(&a.1.log_unnormalized_posterior).then_with(|| a.0.cmp(&b.0))
    });
    let structures: Vec<ScoredStructure> = keyed.into_iter().map(|k| k.1).collect();
    let mandatory = constraints.mandatory(st);
    let mut edge_posteriors = Vec::new();
    for p in 0..st.len() {
        for c in 0..st.len() {
            if p == c {
                continue;
            }
            let prob = if mandatory.contains(&(p, c)) {
                1.0
            } else if !constraints.pair_allowed(st, p, c) {
                0.0
            } else {
                let mut acc = 0.0;
                for s in structures.iter().filter(|s| s.structure.has_edge(p, c)) {
                    acc += s.posterior.unwrap_or(0.0);
                }
                acc.min(1.0)
            };
            edge_posteriors.push(((st.name(p).to_string(), st.name(c).to_string()), prob));
        }
    }
    Ok(PosteriorTable { structures, edge_posteriors })
}

/// One hill-climbing operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Start,
    Add(usize, usize),
    Delete(usize, usize),
    Reverse(usize, usize),
}

/// An accepted move and the score it reached.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceStep {
    pub restart: usize,
    pub step: usize,
    pub operator: Move,
    pub log_unnormalized_posterior: f64,
    pub encoding: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GreedyResult {
    pub best: ScoredStructure,
    pub trace: Vec<TraceStep>,
    pub evaluations: u64,
}

fn apply_move(s: &NetworkStructure, m: Move) -> Option<NetworkStructure> {
    let mut out = s.clone();
    match m {
        Move::Start => {}
        Move::Add(p, c) => out.add_edge(p, c).ok()?,
        Move::Delete(p, c) => {
            out.remove_edge(p, c);
        }
        Move::Reverse(p, c) => {
            out.remove_edge(p, c);
            out.add_edge(c, p).ok()?;
        }
    }
    Some(out)
}

fn neighbours(s: &NetworkStructure, constraints: &SearchConstraints, candidates: &[(usize, usize)]) -> Vec<(Move, NetworkStructure)> {
    let mandatory = constraints.mandatory(s);
    let mut out = Vec::new();
    for &(p, c) in candidates {
        let moves: &[Move] = if s.has_edge(p, c) {
            if mandatory.contains(&(p, c)) { &[] } else { &[Move::Delete(p, c), Move::Reverse(p, c)] }
        } else if s.has_edge(c, p) {
            &[]
        } else {
            &[Move::Add(p, c)]
        };
        for &m in moves {
            if let Some(n) = apply_move(s, m) {
                if constraints.admissible(&n) {
                    out.push((m, n));
                }
            }
        }
    }
    out
}

fn random_start(base: &NetworkStructure, constraints: &SearchConstraints, candidates: &[(usize, usize)], rng: &mut ChaCha8Rng) -> NetworkStructure {
    let mut s = base.clone();
    let mut order = candidates.to_vec();
    order.shuffle(rng);
    for (p, c) in order {
        if rng.random_bool(0.5) {
            if let Some(n) = apply_move(&s, Move::Add(p, c)) {
                if constraints.admissible(&n) {
                    s = n;
                }
            }
        }
    }
    s
}

/// Best-improvement hill climbing over add, delete and reverse moves.
/// Restart 0 starts from the mandatory edges alone; later restarts from
/// seeded random admissible structures.
pub fn greedy_search(
    problem: &SelectionProblem,
    prior: &StructurePrior,
    constraints: &SearchConstraints,
    restarts: usize,
    seed: u64,
    strategy: Strategy,
    budget: EnumerationBudget,
) -> Result<GreedyResult> {
    if restarts == 0 {
        return Err(Error::InvalidConstraints("restarts must be at least 1".into()));
    }
    let st = &problem.structure;
    constraints.validate(st)?;
    let minimal = constraints.minimal_structure(st).map_err(|_| Error::NoAdmissibleStart)?;
    if !constraints.admissible(&minimal) {
        return Err(Error::NoAdmissibleStart);
    }
    let candidates = constraints.candidate_edges(st);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scorer = CachedScorer::new(problem, strategy, budget);
    let mut evaluations = 0u64;
    let mut trace = Vec::new();
    let mut best: Option<(String, ScoredStructure)> = None;
    let evaluate = |s: &NetworkStructure, scorer: &mut CachedScorer, evaluations: &mut u64| -> Result<ScoredStructure> {
        *evaluations += 1;
        let ml = scorer.score(s)?;
        Ok(ScoredStructure::new(s.clone(), ml, log_structure_prior(s, prior, constraints)))
    };
    for restart in 0..restarts {
        let start = if restart == 0 { minimal.clone() } else { random_start(&minimal, constraints, &candidates, &mut rng) };
        let mut current = evaluate(&start, &mut scorer, &mut evaluations)?;
        trace.push(TraceStep {
            restart,
            step: 0,
            operator: Move::Start,
            log_unnormalized_posterior: current.log_unnormalized_posterior,
            encoding: start.canonical_encoding(),
        });
        let mut step = 0;
        loop {
            let mut improved: Option<(Move, ScoredStructure)> = None;
            for (m, n) in neighbours(&current.structure, constraints, &candidates) {
                let cand = evaluate(&n, &mut scorer, &mut evaluations)?;
                let bar = improved.as_ref().map_or(current.log_unnormalized_posterior, |b| b.1.log_unnormalized_posterior);
                if cand.log_unnormalized_posterior > bar {
                    improved = Some((m, cand));
                }
            }
            let Some((m, next)) = improved else { break };
            step += 1;
            trace.push(TraceStep {
                restart,
                step,
                operator: m,
                log_unnormalized_posterior: next.log_unnormalized_posterior,
                encoding: next.structure.canonical_encoding(),
            });
            current = next;
        }
        let enc = current.structure.canonical_encoding();
        let better = match &best {
            None => true,
            Some((be, b)) => {
                current.log_unnormalized_posterior > b.log_unnormalized_posterior
                    || (current.log_unnormalized_posterior == b.log_unnormalized_posterior && enc < *be)
            }
        };
        if better {
            best = Some((enc, current));
        }
    }
    let best = best.map(|b| b.1).ok_or(Error::NoAdmissibleStart)?;
    Ok(GreedyResult { best, trace, evaluations })
}
