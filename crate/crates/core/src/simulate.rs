//! Synthetic populations: forward sampling, selection mechanisms,
//! manipulation assignment and projection into observed data.
//!
//! Every random draw comes from `ChaCha8Rng::seed_from_u64(seed)`; output
//! depends only on the inputs and the seed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::{Dataset, PopulationSpec};
use crate::error::{Error, Result};
use crate::graph::{NetworkStructure, Role, NOT_EXPERIMENTAL};
use crate::network::GeneratingNetwork;

/// Complete cases over every declared variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    structure: NetworkStructure,
    cases: Vec<Vec<usize>>,
}

impl Population {
    pub fn new(structure: NetworkStructure, cases: Vec<Vec<usize>>) -> Result<Self> {
        for (c, case) in cases.iter().enumerate() {
            if case.len() != structure.len() || case.iter().enumerate().any(|(i, &k)| k >= structure.arity(i)) {
                return Err(Error::InvalidDataset(format!("population case {c} is malformed")));
            }
        }
        Ok(Self { structure, cases })
    }

    pub fn structure(&self) -> &NetworkStructure {
        &self.structure
    }

    pub fn cases(&self) -> &[Vec<usize>] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    /// Number of cases with `var` in `state`.
    pub fn count(&self, var: usize, state: usize) -> usize {
        self.cases.iter().filter(|c| c[var] == state).count()
    }

    /// Cases with `var` in `state`.
    pub fn filter(&self, var: usize, state: usize) -> Population {
        let cases = self.cases.iter().filter(|c| c[var] == state).cloned().collect();
        Population { structure: self.structure.clone(), cases }
    }
}

fn draw(rng: &mut ChaCha8Rng, dist: &[f64]) -> usize {
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (k, &p) in dist.iter().enumerate() {
        acc += p;
        if u < acc {
            return k;
        }
    }
    // Rounding slack goes to the last state with positive mass.
    dist.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// `n` independent complete cases, each sampled in topological order.
pub fn forward_sample(network: &GeneratingNetwork, n: usize, seed: u64) -> Result<Population> {
    let s = network.structure();
    let order = s.topological_order()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = Vec::with_capacity(n);
    for _ in 0..n {
        let mut states = vec![0usize; s.len()];
        for &v in &order {
            states[v] = draw(&mut rng, &network.cpt(v).rows[s.row_index(v, &states)]);
        }
        cases.push(states);
    }
    Ok(Population { structure: s.clone(), cases })
}

/// Boolean condition over a case's values.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Always,
    /// `variable == state`.
    Equals(usize, usize),
    Not(alloc::boxed::Box<Predicate>),
    All(Vec<Predicate>),
    Any(Vec<Predicate>),
}

impl Predicate {
    pub fn holds(&self, case: &[usize]) -> bool {
        match self {
            Predicate::Always => true,
            Predicate::Equals(v, k) => case[*v] == *k,
            Predicate::Not(p) => !p.holds(case),
            Predicate::All(ps) => ps.iter().all(|p| p.holds(case)),
            Predicate::Any(ps) => ps.iter().any(|p| p.holds(case)),
        }
    }

    fn check(&self, structure: &NetworkStructure) -> Result<()> {
        match self {
            Predicate::Always => Ok(()),
            Predicate::Equals(v, k) => {
                if *v < structure.len() && *k < structure.arity(*v) {
                    Ok(())
                } else {
                    Err(Error::InvalidSimulation("predicate references an undeclared variable or state".into()))
                }
            }
            Predicate::Not(p) => p.check(structure),
            Predicate::All(ps) | Predicate::Any(ps) => ps.iter().try_for_each(|p| p.check(structure)),
        }
    }
}

/// Exactly `count` eligible cases receive `S = state`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quota {
    pub state: usize,
    pub count: usize,
    pub predicate: Predicate,
}

/// Cases chosen by every part in `parts` receive `state`.
#[derive(Debug, Clone, PartialEq)]
pub struct CombinedState {
    pub parts: Vec<usize>,
    pub state: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SelectionMechanism {
    /// `S` drawn from its CPT given its parents.
    Mechanistic,
    /// Quotas filled in order; a case takes at most one quota.
    Quota(Vec<Quota>),
    /// Parts applied in order. With no combined states, a case keeps the
    /// first sampled state it is given and later parts only see unassigned
    /// cases. Otherwise every part sees the whole population and a case
    /// chosen by all parts of a combined entry takes its state.
    Composite { parts: Vec<SelectionMechanism>, combined: Vec<CombinedState> },
}

impl SelectionMechanism {
    pub fn describe(&self) -> String {
        match self {
            SelectionMechanism::Mechanistic => "mechanistic".to_string(),
            SelectionMechanism::Quota(q) => {
                let parts: Vec<String> = q.iter().map(|q| format!("{}:{}", q.state, q.count)).collect();
                format!("quota({})", parts.join(","))
            }
            SelectionMechanism::Composite { parts, combined } => {
                let inner: Vec<String> = parts.iter().map(|p| p.describe()).collect();
                format!("composite[{}]{}", inner.join(";"), if combined.is_empty() { "" } else { "+combined" })
            }
        }
    }
}

/// Labels per case, `None` for unassigned.
fn select_into(
    network: &GeneratingNetwork,
    cases: &[Vec<usize>],
    mechanism: &SelectionMechanism,
    open: &[bool],
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Option<usize>>> {
    let st = network.structure();
    let s = st.require_selection()?;
    let unsampled = st.unsampled_state().ok_or(Error::NoSelectionVariable)?;
    let mut out = vec![None; cases.len()];
    match mechanism {
        SelectionMechanism::Mechanistic => {
            for (c, case) in cases.iter().enumerate() {
                if !open[c] {
                    continue;
                }
                let k = draw(rng, &network.cpt(s).rows[st.row_index(s, case)]);
                if k != unsampled {
                    out[c] = Some(k);
                }
            }
        }
        SelectionMechanism::Quota(quotas) => {
            let mut taken = open.iter().map(|o| !o).collect::<Vec<_>>();
            for q in quotas {
                if q.state >= st.arity(s) || q.state == unsampled {
                    return Err(Error::InvalidSimulation(format!("quota state {} is not a sampled state of S", q.state)));
                }
                q.predicate.check(st)?;
                let mut eligible: Vec<usize> =
                    (0..cases.len()).filter(|&c| !taken[c] && q.predicate.holds(&cases[c])).collect();
                if eligible.len() < q.count {
                    return Err(Error::QuotaInfeasible {
                        state: st.variable(s).states[q.state].clone(),
                        needed: q.count,
                        available: eligible.len(),
                    });
                }
                let (chosen, _) = eligible.partial_shuffle(rng, q.count);
                for &c in chosen.iter() {
                    taken[c] = true;
                    out[c] = Some(q.state);
                }
            }
        }
        SelectionMechanism::Composite { parts, combined } => {
            if combined.is_empty() {
                let mut open = open.to_vec();
                for part in parts {
                    let labels = select_into(network, cases, part, &open, rng)?;
                    for (c, l) in labels.into_iter().enumerate() {
                        if let Some(k) = l {
                            out[c] = Some(k);
                            open[c] = false;
                        }
                    }
                }
            } else {
                for c in combined {
                    if c.parts.iter().any(|&p| p >= parts.len()) || c.state >= st.arity(s) || c.state == unsampled {
                        return Err(Error::InvalidSimulation("combined state refers to an unknown part or state".into()));
                    }
                }
                let labels = parts
                    .iter()
                    .map(|p| select_into(network, cases, p, open, rng))
                    .collect::<Result<Vec<_>>>()?;
                for c in 0..cases.len() {
                    let chosen: Vec<usize> = (0..parts.len()).filter(|&p| labels[p][c].is_some()).collect();
                    out[c] = combined
                        .iter()
                        .find(|cs| cs.parts.len() > 1 && cs.parts.iter().all(|p| chosen.contains(p)))
                        .map(|cs| cs.state)
                        .or_else(|| chosen.first().and_then(|&p| labels[p][c]));
                }
            }
        }
    }
    Ok(out)
}

/// Reassigns `S` in every case; unselected cases get the unsampled state.
pub fn apply_selection(
    network: &GeneratingNetwork,
    population: &Population,
    mechanism: &SelectionMechanism,
    seed: u64,
) -> Result<Population> {
    let st = network.structure();
    let s = st.require_selection()?;
    let unsampled = st.unsampled_state().ok_or(Error::NoSelectionVariable)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let open = vec![true; population.len()];
    let labels = select_into(network, &population.cases, mechanism, &open, &mut rng)?;
    let mut cases = population.cases.clone();
    for (case, l) in cases.iter_mut().zip(labels) {
        case[s] = l.unwrap_or(unsampled);
    }
    Ok(Population { structure: population.structure.clone(), cases })
}

/// One experimental arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ManipulationArm {
    /// Index of the manipulation variable.
    pub variable: usize,
    /// Share of the population enrolled; exactly `round(fraction * n)`
    /// cases are enrolled.
    pub fraction: f64,
    /// Distribution over the target's states.
    pub assignment: Vec<f64>,
    /// Probability that an enrolled target takes its assigned value; the
    /// rest keep a natural draw.
    pub compliance: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ManipulationDesign {
    pub arms: Vec<ManipulationArm>,
}

impl ManipulationDesign {
    pub fn validate(&self, structure: &NetworkStructure) -> Result<()> {
        for arm in &self.arms {
            let bad = |m: &str| Err(Error::InvalidSimulation(m.to_string()));
            if arm.variable >= structure.len() || structure.variable(arm.variable).role != Role::Manipulation {
                return bad("manipulation arm does not name a manipulation variable");
            }
            if !(0.0..=1.0).contains(&arm.fraction) || !(0.0..=1.0).contains(&arm.compliance) {
                return bad("fraction and compliance must lie in [0, 1]");
            }
            let arity = structure.arity(arm.variable) - 1;
            let sum: f64 = arm.assignment.iter().sum();
            if arm.assignment.len() != arity || arm.assignment.iter().any(|p| !(*p >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
                return bad("assignment must be a distribution over the target states");
            }
        }
        Ok(())
    }
}

/// Assigns every manipulation variable in `design`. The target of an
/// enrolled case is set or redrawn from its `ne` row, then its descendants
/// are redrawn in topological order.
pub fn apply_manipulation(
    network: &GeneratingNetwork,
    population: &Population,
    design: &ManipulationDesign,
    seed: u64,
) -> Result<Population> {
    let st = network.structure();
    design.validate(st)?;
    let order = st.topological_order()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cases = population.cases.clone();
    let n = cases.len();
    for arm in &design.arms {
        let q = arm.variable;
        let target = st.require(st.variable(q).target.as_deref().unwrap_or_default())?;
        let ne = st.variable(q).state_index(NOT_EXPERIMENTAL).unwrap_or(st.arity(q) - 1);
        let enrolled_n = ((arm.fraction * n as f64).round() as usize).min(n);
        let mut idx: Vec<usize> = (0..n).collect();
        let (chosen, _) = idx.partial_shuffle(&mut rng, enrolled_n);
        let mut enrolled = vec![false; n];
        for &c in chosen.iter() {
            enrolled[c] = true;
        }
        let below: Vec<usize> = order.iter().copied().filter(|&v| st.directed_path(target, v).is_some() && v != target).collect();
        for (c, case) in cases.iter_mut().enumerate() {
            if !enrolled[c] {
                case[q] = ne;
                continue;
            }
            let assigned = draw(&mut rng, &arm.assignment);
            case[q] = assigned;
            let complies = rng.random_bool(arm.compliance);
            case[target] = if complies {
                assigned
            } else {
                let mut natural = case.clone();
                natural[q] = ne;
                draw(&mut rng, &network.cpt(target).rows[st.row_index(target, &natural)])
            };
            for &v in &below {
                if st.variable(v).role != Role::Manipulation {
                    case[v] = draw(&mut rng, &network.cpt(v).rows[st.row_index(v, case)]);
                }
            }
        }
    }
    Ok(Population { structure: population.structure.clone(), cases })
}

/// Observed view of a population plus everything it hides.
#[derive(Debug, Clone, PartialEq)]
pub struct Projection {
    /// Sampled cases with latent variables blanked.
    pub dataset: Dataset,
    /// Point mass at the number of unsampled cases.
    pub population: PopulationSpec,
    /// The full population.
    pub archive: Population,
}

pub fn project(population: &Population) -> Result<Projection> {
    let st = &population.structure;
    let s = st.require_selection()?;
    let unsampled = st.unsampled_state().ok_or(Error::NoSelectionVariable)?;
    let latent = st.latent_variables();
    let mut rows = Vec::new();
    let mut m_f = 0u64;
    for case in &population.cases {
        if case[s] == unsampled {
            m_f += 1;
            continue;
        }
        let mut row: Vec<Option<usize>> = case.iter().copied().map(Some).collect();
        for &l in &latent {
            row[l] = None;
        }
        rows.push(row);
    }
    Ok(Projection { dataset: Dataset::new(st, rows)?, population: PopulationSpec::point(m_f), archive: population.clone() })
}

/// Rebuilds the population from a dataset and its archive, checking that
/// every observed value agrees with the archive.
pub fn reattach(dataset: &Dataset, archive: &Population) -> Result<Population> {
    let st = &archive.structure;
    let s = st.require_selection()?;
    let unsampled = st.unsampled_state().ok_or(Error::NoSelectionVariable)?;
    let mut observed = dataset.cases().iter();
    let mut cases = Vec::with_capacity(archive.len());
    for (c, full) in archive.cases.iter().enumerate() {
        if full[s] == unsampled {
            cases.push(full.clone());
            continue;
        }
        let row = observed
            .next()
            .ok_or_else(|| Error::InvalidDataset("dataset has fewer sampled cases than the archive".into()))?;
        let mut merged = full.clone();
        for (i, v) in row.iter().enumerate() {
            if let Some(k) = *v {
                if k != full[i] {
                    return Err(Error::InvalidDataset(format!("archive case {c} disagrees on `{}`", st.name(i))));
                }
                merged[i] = k;
            }
        }
        cases.push(merged);
    }
    if observed.next().is_some() {
        return Err(Error::InvalidDataset("dataset has more sampled cases than the archive".into()));
    }
    Ok(Population { structure: st.clone(), cases })
}

/// Pearson correlation between the state indices of two variables.
pub fn correlation(population: &Population, x: usize, y: usize) -> f64 {
    let n = population.len() as f64;
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for c in &population.cases {
        let (a, b) = (c[x] as f64, c[y] as f64);
        sx += a;
        sy += b;
        sxx += a * a;
        syy += b * b;
        sxy += a * b;
    }
    let cov = sxy - sx * sy / n;
    let den = libm::sqrt((sxx - sx * sx / n) * (syy - sy * sy / n));
    if den > 0.0 { cov / den } else { 0.0 }
}

/// Likelihood-ratio test of independence between two variables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GTest {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

pub fn g_test(population: &Population, x: usize, y: usize) -> GTest {
    let st = &population.structure;
    let (rx, ry) = (st.arity(x), st.arity(y));
    let mut table = vec![vec![0f64; ry]; rx];
    for c in &population.cases {
        table[c[x]][c[y]] += 1.0;
    }
    let n: f64 = population.len() as f64;
    let row: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let col: Vec<f64> = (0..ry).map(|j| table.iter().map(|r| r[j]).sum()).collect();
    let mut g = 0.0;
    for i in 0..rx {
        for j in 0..ry {
            let o = table[i][j];
            if o > 0.0 {
                g += o * libm::log(o * n / (row[i] * col[j]));
            }
        }
    }
    let g = 2.0 * g;
    let nz_r = row.iter().filter(|&&v| v > 0.0).count();
    let nz_c = col.iter().filter(|&&v| v > 0.0).count();
    let df = nz_r.saturating_sub(1) * nz_c.saturating_sub(1);
    GTest { statistic: g, df, p_value: chi_square_sf(g, df) }
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, df: usize) -> f64 {
    if df == 0 {
        return 1.0;
    }
    if x <= 0.0 {
        return 1.0;
    }
    upper_regularized_gamma(df as f64 / 2.0, x / 2.0)
}

fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    let ln_pre = a * libm::log(x) - x - libm::lgamma(a);
    if x < a + 1.0 {
        let (mut term, mut sum, mut ap) = (1.0 / a, 1.0 / a, a);
        for _ in 0..10_000 {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if term.abs() < sum.abs() * 1e-16 {
                break;
            }
        }
        (1.0 - sum * libm::exp(ln_pre)).max(0.0)
    } else {
        // Lentz continued fraction.
        let tiny = 1e-300;
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / tiny;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..10_000 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < tiny {
                d = tiny;
            }
            c = b + an / c;
            if c.abs() < tiny {
                c = tiny;
            }
            d = 1.0 / d;
            let delta = d * c;
            h *= delta;
            if (delta - 1.0).abs() < 1e-16 {
                break;
            }
        }
        libm::exp(ln_pre) * h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::VariableSpec;
    use crate::network::Cpt;
    use crate::testutil::structure;

    fn selection_bias_network() -> GeneratingNetwork {
        let s = structure(&["X2", "X3", "X4", "S"], &[("X2", "X4"), ("X3", "X4"), ("X4", "S")]);
        GeneratingNetwork::new(
            s,
            vec![
                Cpt::bernoulli(0.5),
                Cpt::bernoulli(0.5),
                Cpt::new(vec![vec![0.9, 0.1], vec![0.5, 0.5], vec![0.5, 0.5], vec![0.1, 0.9]]),
                Cpt::new(vec![vec![0.8, 0.2], vec![0.1, 0.9]]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn forward_sample_basics() {
        let net = GeneratingNetwork::new(structure(&["X"], &[]), vec![Cpt::bernoulli(1.0)]).unwrap();
        assert!(forward_sample(&net, 0, 1).unwrap().is_empty());
        let p = forward_sample(&net, 50, 1).unwrap();
        assert_eq!(p.count(0, 0), 50);
        let net = GeneratingNetwork::new(structure(&["X"], &[]), vec![Cpt::bernoulli(0.3)]).unwrap();
        let p = forward_sample(&net, 10_000, 5).unwrap();
        assert!((p.count(0, 0) as f64 / 10_000.0 - 0.3).abs() < 0.02);
        assert_eq!(p, forward_sample(&net, 10_000, 5).unwrap());
        assert_ne!(p, forward_sample(&net, 10_000, 6).unwrap());
    }

    #[test]
    fn quota_selection_is_exact() {
        let vars = vec![VariableSpec::binary("X4"), VariableSpec::selection("S", &["case", "control", "us"], "us")];
        let st = NetworkStructure::new(vars).unwrap();
        let net = GeneratingNetwork::new(st, vec![Cpt::bernoulli(0.2), Cpt::new(vec![vec![0.0, 0.0, 1.0]])]).unwrap();
        let pop = forward_sample(&net, 1000, 3).unwrap();
        let quotas = SelectionMechanism::Quota(vec![
            Quota { state: 0, count: 50, predicate: Predicate::Equals(0, 0) },
            Quota { state: 1, count: 50, predicate: Predicate::Equals(0, 1) },
        ]);
        let sel = apply_selection(&net, &pop, &quotas, 9).unwrap();
        assert_eq!(sel.count(1, 0), 50);
        assert_eq!(sel.count(1, 1), 50);
        assert!(sel.filter(1, 0).cases().iter().all(|c| c[0] == 0));
        let proj = project(&sel).unwrap();
        assert_eq!(proj.population.m_f.point(), Some(900));
        assert_eq!(proj.dataset.len(), 100);

        let too_many = SelectionMechanism::Quota(vec![Quota { state: 0, count: 990, predicate: Predicate::Equals(0, 0) }]);
        assert!(matches!(apply_selection(&net, &pop, &too_many, 9), Err(Error::QuotaInfeasible { needed: 990, .. })));
    }

    #[test]
    fn composite_selection_counts() {
        let vars = vec![VariableSpec::binary("X1"), VariableSpec::selection("S", &["fc", "sc", "us"], "us")];
        let st = NetworkStructure::new(vars).unwrap();
        let net = GeneratingNetwork::new(st, vec![Cpt::bernoulli(0.5), Cpt::new(vec![vec![0.0, 0.0, 1.0]])]).unwrap();
        let pop = forward_sample(&net, 7, 1).unwrap();
        let m = SelectionMechanism::Quota(vec![
            Quota { state: 0, count: 3, predicate: Predicate::Always },
            Quota { state: 1, count: 2, predicate: Predicate::Always },
        ]);
        let sel = apply_selection(&net, &pop, &m, 2).unwrap();
        assert_eq!((sel.count(1, 0), sel.count(1, 1), sel.count(1, 2)), (3, 2, 2));
    }

    #[test]
    fn mechanistic_limit_and_composite() {
        let st = structure(&["X", "S"], &[("X", "S")]);
        let all = GeneratingNetwork::new(st.clone(), vec![Cpt::bernoulli(0.5), Cpt::new(vec![vec![1.0, 0.0], vec![1.0, 0.0]])]).unwrap();
        let pop = forward_sample(&all, 100, 4).unwrap();
        let sel = apply_selection(&all, &pop, &SelectionMechanism::Mechanistic, 1).unwrap();
        assert_eq!(sel.count(1, 0), 100);

        let vars = vec![VariableSpec::binary("X"), VariableSpec::selection("S", &["a", "b", "ab", "us"], "us")];
        let st = NetworkStructure::new(vars).unwrap();
        let net = GeneratingNetwork::new(st, vec![Cpt::bernoulli(0.5), Cpt::new(vec![vec![0.0, 0.0, 0.0, 1.0]])]).unwrap();
        let pop = forward_sample(&net, 40, 2).unwrap();
        let parts = vec![
            SelectionMechanism::Quota(vec![Quota { state: 0, count: 10, predicate: Predicate::Always }]),
            SelectionMechanism::Quota(vec![Quota { state: 1, count: 10, predicate: Predicate::Always }]),
        ];
        let first = SelectionMechanism::Composite { parts: parts.clone(), combined: vec![] };
        let sel = apply_selection(&net, &pop, &first, 3).unwrap();
        assert_eq!((sel.count(1, 0), sel.count(1, 1), sel.count(1, 2)), (10, 10, 0));
        let both = SelectionMechanism::Composite { parts, combined: vec![CombinedState { parts: vec![0, 1], state: 2 }] };
        let sel = apply_selection(&net, &pop, &both, 3).unwrap();
        let ab = sel.count(1, 2);
        assert_eq!(sel.count(1, 0) + ab, 10);
        assert_eq!(sel.count(1, 1) + ab, 10);
    }

    fn manipulated_network() -> GeneratingNetwork {
        let x1 = VariableSpec::binary("X1");
        let x2 = VariableSpec::binary("X2");
        let vars = vec![VariableSpec::manipulation("Q", &x2), x1, x2, VariableSpec::binary("X3"), VariableSpec::selection("S", &["T", "F"], "F")];
        let st = NetworkStructure::with_edges(vars, &[("Q", "X2"), ("X1", "X2"), ("X2", "X3")]).unwrap();
        let x2_rows = vec![
            vec![1.0, 0.0],
            vec![1.0, 0.0],
            vec![0.0, 1.0],
            vec![0.0, 1.0],
            vec![0.7, 0.3],
            vec![0.2, 0.8],
        ];
        GeneratingNetwork::new(
            st,
            vec![
                Cpt::new(vec![vec![0.0, 0.0, 1.0]]),
                Cpt::bernoulli(0.5),
                Cpt::new(x2_rows),
                Cpt::new(vec![vec![0.9, 0.1], vec![0.1, 0.9]]),
                Cpt::bernoulli(1.0),
            ],
        )
        .unwrap()
    }

    #[test]
    fn manipulation_examples() {
        let net = manipulated_network();
        let pop = forward_sample(&net, 9, 1).unwrap();
        let arm = |fraction: f64, assignment: Vec<f64>| ManipulationDesign {
            arms: vec![ManipulationArm { variable: 0, fraction, assignment, compliance: 1.0 }],
        };
        let none = apply_manipulation(&net, &pop, &arm(0.0, vec![0.5, 0.5]), 2).unwrap();
        assert_eq!(none, pop);
        let t4 = apply_manipulation(&net, &pop, &arm(2.0 / 9.0, vec![0.5, 0.5]), 2).unwrap();
        assert_eq!(t4.count(0, 2), 7);
        let forced = apply_manipulation(&net, &pop, &arm(1.0, vec![1.0, 0.0]), 2).unwrap();
        assert!(forced.cases().iter().all(|c| c[0] == 0 && c[2] == 0));
        let bad = ManipulationDesign { arms: vec![ManipulationArm { variable: 1, fraction: 0.5, assignment: vec![1.0, 0.0], compliance: 1.0 }] };
        assert!(apply_manipulation(&net, &pop, &bad, 2).is_err());
    }

    #[test]
    fn project_and_reattach() {
        let s = NetworkStructure::with_edges(
            vec![VariableSpec::binary("X1").latent(), VariableSpec::binary("X2"), VariableSpec::selection("S", &["T", "F"], "F")],
            &[("X1", "X2"), ("X2", "S")],
        )
        .unwrap();
        let net = GeneratingNetwork::new(
            s,
            vec![Cpt::bernoulli(0.4), Cpt::new(vec![vec![0.8, 0.2], vec![0.3, 0.7]]), Cpt::new(vec![vec![0.6, 0.4], vec![0.2, 0.8]])],
        )
        .unwrap();
        let pop = forward_sample(&net, 200, 8).unwrap();
        let proj = project(&pop).unwrap();
        assert_eq!(proj.dataset.len() as u64 + proj.population.m_f.point().unwrap(), 200);
        assert!(proj.dataset.cases().iter().all(|c| c[0].is_none()));
        assert_eq!(reattach(&proj.dataset, &proj.archive).unwrap(), pop);

        let all = apply_selection(&net, &pop, &SelectionMechanism::Quota(vec![Quota { state: 0, count: 200, predicate: Predicate::Always }]), 1).unwrap();
        assert_eq!(project(&all).unwrap().population.m_f.point(), Some(0));
    }

    #[test]
    fn selection_induces_dependence() {
        let net = selection_bias_network();
        let mut passes = 0;
        for seed in 0..10 {
            let pop = forward_sample(&net, 20_000, seed).unwrap();
            let sel = pop.filter(3, 0);
            if correlation(&pop, 0, 1).abs() < 0.03 && g_test(&sel, 0, 1).p_value < 0.01 {
                passes += 1;
            }
        }
        assert!(passes >= 9, "{passes}");
    }

    #[test]
    fn chi_square_tail_values() {
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-10);
        for x in [0.5, 2.0, 7.0, 30.0] {
            assert!((chi_square_sf(x, 2) - libm::exp(-x / 2.0)).abs() < 1e-13);
        }
        assert!((chi_square_sf(1.0, 1) - libm::erfc(libm::sqrt(0.5))).abs() < 1e-13);
        assert_eq!(chi_square_sf(4.0, 0), 1.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(48))]
        #[test]
        fn quota_and_round_trip(seed in 0u64..10_000, n in 0usize..300, a in 0usize..40, b in 0usize..40) {
            let net = selection_bias_network();
            let pop = forward_sample(&net, n, seed).unwrap();
            proptest::prop_assert_eq!(&pop, &forward_sample(&net, n, seed).unwrap());
            let eligible_t = pop.count(2, 0);
            let m = SelectionMechanism::Quota(vec![
                Quota { state: 0, count: a.min(eligible_t), predicate: Predicate::Equals(2, 0) },
                Quota { state: 0, count: b.min(n - eligible_t), predicate: Predicate::Equals(2, 1) },
            ]);
            let sel = apply_selection(&net, &pop, &m, seed ^ 1).unwrap();
            proptest::prop_assert_eq!(sel.count(3, 0), a.min(eligible_t) + b.min(n - eligible_t));
            let proj = project(&sel).unwrap();
            proptest::prop_assert_eq!(reattach(&proj.dataset, &proj.archive).unwrap(), sel);
        }
    }
}
