//! Dirichlet family priors: explicit tables, K2-style constants, BDe from a
//! prior network plus equivalent sample size, and selection-family tables
//! indexed by the number of unsampled cases.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::NetworkStructure;
use crate::network::GeneratingNetwork;

/// One family's table, `rows[j][k]` for parent configuration `j` and
/// child state `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyTable {
    pub rows: Vec<Vec<f64>>,
}

impl FamilyTable {
    pub fn filled(rows: usize, arity: usize, value: f64) -> Self {
        Self { rows: vec![vec![value; arity]; rows] }
    }

    pub fn total(&self) -> f64 {
        self.rows.iter().flatten().sum()
    }
}

/// Dirichlet hyperparameters for every family of one structure.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyPrior {
    pub tables: Vec<FamilyTable>,
}

impl FamilyPrior {
    /// `alpha` in every cell (K2-style when `alpha == 1`).
    pub fn constant(structure: &NetworkStructure, alpha: f64) -> Self {
        let tables =
            (0..structure.len()).map(|i| FamilyTable::filled(structure.parent_configs(i), structure.arity(i), alpha)).collect();
        Self { tables }
    }

    pub fn table(&self, i: usize) -> &FamilyTable {
        &self.tables[i]
    }
}

/// A problem found by [`validate_prior`].
#[derive(Debug, Clone, PartialEq)]
pub struct PriorDiagnostic {
    pub variable: String,
    pub row: Option<usize>,
    pub state: Option<usize>,
    pub message: String,
}

/// Checks positivity, finiteness and shape. Reports every violating cell.
pub fn validate_prior(prior: &FamilyPrior, structure: &NetworkStructure) -> core::result::Result<(), Vec<PriorDiagnostic>> {
    let mut out = Vec::new();
    let diag = |variable: &str, row, state, message: &str| PriorDiagnostic {
        variable: variable.to_string(),
        row,
        state,
        message: message.to_string(),
    };
    if prior.tables.len() != structure.len() {
        out.push(diag("*", None, None, "table count does not match variable count"));
        return Err(out);
    }
    for (i, table) in prior.tables.iter().enumerate() {
        let name = structure.name(i);
        let rows = structure.parent_configs(i);
        if table.rows.len() != rows {
            out.push(diag(
                name,
                None,
                None,
                &format!("expected {rows} parent-configuration rows, found {}", table.rows.len()),
            ));
        }
        for (j, row) in table.rows.iter().enumerate() {
            if row.len() != structure.arity(i) {
                out.push(diag(name, Some(j), None, &format!("expected {} states, found {}", structure.arity(i), row.len())));
            }
            for (k, &a) in row.iter().enumerate() {
                if !a.is_finite() {
                    out.push(diag(name, Some(j), Some(k), "alpha is not finite"));
                } else if a <= 0.0 {
                    out.push(diag(name, Some(j), Some(k), "alpha must be strictly positive"));
                }
            }
        }
    }
    if out.is_empty() { Ok(()) } else { Err(out) }
}

/// Equivalent sample size plus prior network `P0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BdeSpec {
    pub ess: f64,
    pub prior_joint: GeneratingNetwork,
}

impl BdeSpec {
    pub fn new(ess: f64, prior_joint: GeneratingNetwork) -> Result<Self> {
        if !(ess > 0.0 && ess.is_finite()) {
            return Err(Error::InvalidPrior("equivalent sample size must be positive".into()));
        }
        Ok(Self { ess, prior_joint })
    }

    /// Uniform `P0` over `structure`'s variables.
    pub fn uniform(ess: f64, structure: &NetworkStructure) -> Result<Self> {
        Self::new(ess, GeneratingNetwork::uniform(structure.empty_like()))
    }
}

/// A [`BdeSpec`] with the `P0` joint table materialised once, so building
/// priors for many candidate structures is cheap.
#[derive(Debug, Clone, PartialEq)]
pub struct BdePrior {
    spec: BdeSpec,
    arities: Vec<usize>,
    joint: Vec<f64>,
}

impl BdePrior {
    pub fn new(spec: BdeSpec, cap: u64) -> Result<Self> {
        let s = spec.prior_joint.structure();
        let all: Vec<usize> = (0..s.len()).collect();
        let joint = spec.prior_joint.marginal(&all, cap)?;
        let arities = (0..s.len()).map(|i| s.arity(i)).collect();
        Ok(Self { spec, arities, joint })
    }

    pub fn spec(&self) -> &BdeSpec {
        &self.spec
    }

    pub fn ess(&self) -> f64 {
        self.spec.ess
    }

    fn check_variables(&self, structure: &NetworkStructure) -> Result<()> {
        let p0 = self.spec.prior_joint.structure();
        let same = p0.len() == structure.len()
            && (0..p0.len()).all(|i| p0.name(i) == structure.name(i) && p0.arity(i) == structure.arity(i));
        if same {
            Ok(())
        } else {
            Err(Error::InvalidPrior("BDe prior network must declare the model's variables in the same order".into()))
        }
    }

    /// `P0` marginal over `vars` (first variable most significant).
    fn marginal(&self, vars: &[usize]) -> Vec<f64> {
        let size: usize = vars.iter().map(|&v| self.arities[v]).product();
        let mut out = vec![0.0; size];
        let n = self.arities.len();
        let mut states = vec![0usize; n];
        for &p in &self.joint {
            let mut idx = 0;
            for &v in vars {
                idx = idx * self.arities[v] + states[v];
            }
            out[idx] += p;
            for k in (0..n).rev() {
                states[k] += 1;
                if states[k] < self.arities[k] {
                    break;
                }
                states[k] = 0;
            }
        }
        out
    }

    /// `alpha_ijk = ess * P0(X_i = k, parents = j)`.
    pub fn family_table(&self, structure: &NetworkStructure, i: usize) -> Result<FamilyTable> {
        let mut vars: Vec<usize> = structure.parents(i).to_vec();
        vars.push(i);
        let marg = self.marginal(&vars);
        let arity = structure.arity(i);
        let rows: Vec<Vec<f64>> = marg.chunks(arity).map(|r| r.iter().map(|p| self.spec.ess * p).collect()).collect();
        for (j, row) in rows.iter().enumerate() {
            if row.iter().sum::<f64>() <= 0.0 {
                return Err(Error::BdeImpossibleConfiguration { variable: structure.name(i).to_string(), row: j });
            }
        }
        Ok(FamilyTable { rows })
    }

    pub fn build(&self, structure: &NetworkStructure) -> Result<FamilyPrior> {
        self.check_variables(structure)?;
        let tables = (0..structure.len()).map(|i| self.family_table(structure, i)).collect::<Result<Vec<_>>>()?;
        Ok(FamilyPrior { tables })
    }
}

/// BDe family prior for `structure`.
pub fn build_bde_prior(structure: &NetworkStructure, spec: &BdeSpec, cap: u64) -> Result<FamilyPrior> {
    BdePrior::new(spec.clone(), cap)?.build(structure)
}

/// Mean selection probabilities for one parent configuration of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub means: Vec<f64>,
    pub ess: f64,
}

/// S-family prior tables keyed by candidate `m_F`.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPriorSpec {
    /// Parents of `S` the rows are written for, in declaration order.
    pub parents: Vec<String>,
    pub per_m_f: BTreeMap<u64, Vec<SelectionRow>>,
}

impl SelectionPriorSpec {
    pub fn new(parents: Vec<String>, per_m_f: BTreeMap<u64, Vec<SelectionRow>>) -> Result<Self> {
        for (m, rows) in &per_m_f {
            for row in rows {
                if !(row.ess > 0.0 && row.ess.is_finite()) {
                    return Err(Error::InvalidPrior(format!("selection prior for m_F = {m}: ESS must be positive")));
                }
                if row.means.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
                    return Err(Error::InvalidPrior(format!("selection prior for m_F = {m}: invalid mean")));
                }
                let sum: f64 = row.means.iter().sum();
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidPrior(format!("selection prior for m_F = {m}: means sum to {sum}")));
                }
            }
        }
        Ok(Self { parents, per_m_f })
    }

    pub fn covered(&self) -> Vec<u64> {
        self.per_m_f.keys().copied().collect()
    }
}

/// S-family table for `m_f`: each row is `row.ess * row.means`.
pub fn build_selection_prior(structure: &NetworkStructure, spec: &SelectionPriorSpec, m_f: u64) -> Result<FamilyTable> {
    let s = structure.require_selection()?;
    let rows = spec.per_m_f.get(&m_f).ok_or_else(|| Error::UncoveredMf { requested: m_f, covered: spec.covered() })?;
    let actual: Vec<&str> = structure.parents(s).iter().map(|&p| structure.name(p)).collect();
    if actual.len() != spec.parents.len() || actual.iter().zip(&spec.parents).any(|(a, b)| *a != b.as_str()) {
        return Err(Error::InvalidPrior(format!(
            "selection prior is written for parents {:?} but `{}` has parents {:?}",
            spec.parents,
            structure.name(s),
            actual
        )));
    }
    if rows.len() != structure.parent_configs(s) {
        return Err(Error::InvalidPrior(format!(
            "selection prior for m_F = {m_f} has {} rows, expected {}",
            rows.len(),
            structure.parent_configs(s)
        )));
    }
    let rows = rows
        .iter()
        .map(|r| {
            if r.means.len() != structure.arity(s) {
                return Err(Error::InvalidPrior(format!("selection prior row needs {} means", structure.arity(s))));
            }
            Ok(r.means.iter().map(|m| m * r.ess).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FamilyTable { rows })
}

/// How the family prior for a given structure is produced.
#[derive(Debug, Clone, PartialEq)]
pub enum BasePrior {
    Bde(BdePrior),
    /// Same `alpha` in every cell.
    Constant(f64),
    /// Tables written for one structure; `parents` records which.
    Explicit { parents: Vec<Vec<usize>>, prior: FamilyPrior },
}

/// How P(m_F | M) is tied to structure.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorModel {
    pub base: BasePrior,
    /// Overrides the S family when present.
    pub selection: Option<SelectionPriorSpec>,
}

impl PriorModel {
    pub fn bde(prior: BdePrior) -> Self {
        Self { base: BasePrior::Bde(prior), selection: None }
    }

    /// BDe with uniform `P0` and `ess = 1`.
    pub fn default_for(structure: &NetworkStructure) -> Result<Self> {
        let spec = BdeSpec::uniform(1.0, structure)?;
        Ok(Self::bde(BdePrior::new(spec, crate::DEFAULT_JOINT_CAP)?))
    }

    pub fn constant(alpha: f64) -> Self {
        Self { base: BasePrior::Constant(alpha), selection: None }
    }

    pub fn explicit(structure: &NetworkStructure, prior: FamilyPrior) -> Result<Self> {
        validate_prior(&prior, structure).map_err(|d| {
            let first = &d[0];
            Error::InvalidPrior(format!("{} ({} problems; first: {} {})", "explicit prior invalid", d.len(), first.variable, first.message))
        })?;
        Ok(Self { base: BasePrior::Explicit { parents: structure.parent_sets().to_vec(), prior }, selection: None })
    }

    pub fn with_selection(mut self, selection: SelectionPriorSpec) -> Self {
        self.selection = Some(selection);
        self
    }

    pub fn bde_prior(&self) -> Option<&BdePrior> {
        match &self.base {
            BasePrior::Bde(b) => Some(b),
            _ => None,
        }
    }

    /// BDe with no selection-family override: Markov-equivalent structures
    /// get equal complete-data scores.
    pub fn is_likelihood_equivalent(&self) -> bool {
        matches!(self.base, BasePrior::Bde(_)) && self.selection.is_none()
    }

    /// Whether the S family depends on `m_F`.
    pub fn depends_on_m_f(&self) -> bool {
        self.selection.is_some()
    }

    /// Table for family `i` of `structure`; the S family is taken for `m_f`.
    pub fn family_table(&self, structure: &NetworkStructure, i: usize, m_f: u64) -> Result<FamilyTable> {
        if let Some(sel) = &self.selection {
            if structure.selection() == Some(i) {
                return build_selection_prior(structure, sel, m_f);
            }
        }
        match &self.base {
            BasePrior::Bde(b) => {
                b.check_variables(structure)?;
                b.family_table(structure, i)
            }
            BasePrior::Constant(alpha) => {
                if !(*alpha > 0.0 && alpha.is_finite()) {
                    return Err(Error::InvalidPrior("constant alpha must be positive".into()));
                }
                Ok(FamilyTable::filled(structure.parent_configs(i), structure.arity(i), *alpha))
            }
            BasePrior::Explicit { parents, prior } => {
                if parents.len() != structure.len() || parents[i] != structure.parents(i) {
                    return Err(Error::InvalidPrior("explicit prior tables were written for a different structure".into()));
                }
                Ok(prior.tables[i].clone())
            }
        }
    }

    /// Family prior for `structure` with the S family taken for `m_f`.
    pub fn family_prior(&self, structure: &NetworkStructure, m_f: u64) -> Result<FamilyPrior> {
        if let BasePrior::Explicit { parents, .. } = &self.base {
            if parents.as_slice() != structure.parent_sets() {
                return Err(Error::InvalidPrior("explicit prior tables were written for a different structure".into()));
            }
        }
        let tables = (0..structure.len()).map(|i| self.family_table(structure, i, m_f)).collect::<Result<Vec<_>>>()?;
        Ok(FamilyPrior { tables })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::Cpt;
    use crate::testutil::structure;
    use proptest::prelude::*;

    #[test]
    fn bde_uniform_examples() {
        let s = structure(&["X"], &[]);
        let p = build_bde_prior(&s, &BdeSpec::uniform(1.0, &s).unwrap(), 1 << 22).unwrap();
        assert_eq!(p.tables[0].rows, vec![vec![0.5, 0.5]]);

        let s = structure(&["X", "Y"], &[("X", "Y")]);
        let p = build_bde_prior(&s, &BdeSpec::uniform(4.0, &s).unwrap(), 1 << 22).unwrap();
        for row in &p.tables[1].rows {
            for &a in row {
                assert!((a - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn bde_from_chain_prior_network() {
        let s = structure(&["X", "Y"], &[("X", "Y")]);
        let p0 = GeneratingNetwork::new(s.clone(), vec![Cpt::bernoulli(0.2), Cpt::new(vec![vec![0.9, 0.1], vec![0.5, 0.5]])])
            .unwrap();
        let spec = BdeSpec::new(10.0, p0).unwrap();
        let p = build_bde_prior(&s, &spec, 1 << 22).unwrap();
        // ess * P0(X = T, Y = k) = 10 * 0.2 * (0.9, 0.1)
        assert!((p.tables[1].rows[0][0] - 1.8).abs() < 1e-12);
        assert!((p.tables[1].rows[0][1] - 0.2).abs() < 1e-12);
        // Reversed structure: alpha for X given Y = T is 10 * (0.18, 0.4).
        let r = structure(&["X", "Y"], &[("Y", "X")]);
        let p = build_bde_prior(&r, &spec, 1 << 22).unwrap();
        assert!((p.tables[0].rows[0][0] - 1.8).abs() < 1e-12);
        assert!((p.tables[0].rows[0][1] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn bde_rejects_impossible_configuration() {
        let s = structure(&["X", "Y"], &[("X", "Y")]);
        let p0 = GeneratingNetwork::new(s.empty_like(), vec![Cpt::bernoulli(1.0), Cpt::bernoulli(0.5)]).unwrap();
        let err = build_bde_prior(&s, &BdeSpec::new(1.0, p0).unwrap(), 1 << 22).unwrap_err();
        assert!(matches!(err, Error::BdeImpossibleConfiguration { row: 1, .. }));
        assert!(BdeSpec::uniform(0.0, &s).is_err());
        assert!(matches!(
            BdePrior::new(BdeSpec::uniform(1.0, &s).unwrap(), 2),
            Err(Error::EnumerationTooLarge { .. })
        ));
    }

    fn example_selection_prior() -> SelectionPriorSpec {
        let mut per = BTreeMap::new();
        per.insert(
            4,
            vec![
                SelectionRow { means: vec![0.9, 0.1], ess: 1.0 },
                SelectionRow { means: vec![0.01, 0.99], ess: 1.0 },
            ],
        );
        SelectionPriorSpec::new(vec!["X4".into()], per).unwrap()
    }

    #[test]
    fn selection_prior_examples() {
        let s = structure(&["X4", "S"], &[("X4", "S")]);
        let t = build_selection_prior(&s, &example_selection_prior(), 4).unwrap();
        assert_eq!(t.rows, vec![vec![0.9, 0.1], vec![0.01, 0.99]]);
        assert_eq!(build_selection_prior(&s, &example_selection_prior(), 4).unwrap(), t);
        assert_eq!(
            build_selection_prior(&s, &example_selection_prior(), 3).unwrap_err(),
            Error::UncoveredMf { requested: 3, covered: vec![4] }
        );

        let mut per = BTreeMap::new();
        per.insert(7, vec![SelectionRow { means: vec![0.5, 0.5], ess: 2.0 }; 2]);
        let uniform = SelectionPriorSpec::new(vec!["X4".into()], per).unwrap();
        let t = build_selection_prior(&s, &uniform, 7).unwrap();
        assert!(t.rows.iter().flatten().all(|&a| a == 1.0));

        let mut per = BTreeMap::new();
        per.insert(0, vec![SelectionRow { means: vec![1.0, 0.0], ess: 1.0 }; 2]);
        let degenerate = SelectionPriorSpec::new(vec!["X4".into()], per).unwrap();
        let t = build_selection_prior(&s, &degenerate, 0).unwrap();
        assert!(t.rows.iter().all(|r| r[0] == 1.0 && r[1] == 0.0));

        let wrong_parents = structure(&["X4", "X5", "S"], &[("X5", "S")]);
        assert!(build_selection_prior(&wrong_parents, &example_selection_prior(), 4).is_err());

        let mut per = BTreeMap::new();
        per.insert(1, vec![SelectionRow { means: vec![0.5, 0.6], ess: 1.0 }]);
        assert!(SelectionPriorSpec::new(vec![], per).is_err());
    }

    #[test]
    fn validate_prior_examples() {
        let s = structure(&["X", "Y"], &[("X", "Y")]);
        assert!(validate_prior(&FamilyPrior::constant(&s, 1.0), &s).is_ok());

        let mut p = FamilyPrior::constant(&s, 1.0);
        p.tables[1].rows[1][0] = 0.0;
        let d = validate_prior(&p, &s).unwrap_err();
        assert_eq!(d.len(), 1);
        assert_eq!((d[0].variable.as_str(), d[0].row, d[0].state), ("Y", Some(1), Some(0)));

        let mut p = FamilyPrior::constant(&s, 1.0);
        p.tables[1].rows.pop();
        let d = validate_prior(&p, &s).unwrap_err();
        assert!(d[0].message.contains("rows"));
    }

    #[test]
    fn model_with_selection_override() {
        let s = structure(&["X4", "S"], &[("X4", "S")]);
        let model = PriorModel::default_for(&s).unwrap().with_selection(example_selection_prior());
        assert!(!model.is_likelihood_equivalent());
        let p = model.family_prior(&s, 4).unwrap();
        assert_eq!(p.tables[1].rows, vec![vec![0.9, 0.1], vec![0.01, 0.99]]);
        assert_eq!(p.tables[0].rows, vec![vec![0.5, 0.5]]);
        let explicit = PriorModel::explicit(&s, FamilyPrior::constant(&s, 1.0)).unwrap();
        assert!(explicit.family_prior(&s.empty_like(), 0).is_err());
    }

    proptest! {
        #[test]
        fn bde_conserves_mass(n in 2usize..=5, seed in any::<u64>(), ess in 0.1f64..20.0) {
            let p0 = crate::testutil::random_network(n, seed);
            let target = crate::testutil::random_network(n, seed ^ 0xABCD).structure().clone();
            let prior = build_bde_prior(&target, &BdeSpec::new(ess, p0).unwrap(), 1 << 22).unwrap();
            for t in &prior.tables {
                prop_assert!((t.total() - ess).abs() < 1e-9);
                prop_assert!(t.rows.iter().flatten().all(|&a| a > 0.0));
            }
        }
    }
}
