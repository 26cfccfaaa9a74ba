use proptest::prelude::*;

use selbayes_core::search::{exhaustive_posterior, SearchConstraints, StructurePrior};
use selbayes_core::selection::marginal_likelihood;
use selbayes_core::transform::{make_s_root, tree_valid};
use selbayes_core::{
    Dataset, EnumerationBudget, NetworkStructure, PopulationSpec, PriorModel, SelectionProblem, Strategy as Method, VariableSpec,
};

const BUDGET: EnumerationBudget = EnumerationBudget { max_terms: 1 << 22 };

/// `n` binary domain variables plus `S`, with arcs drawn from `bits` over
/// the order `order`.
fn structure(n: usize, order: &[usize], bits: &[bool]) -> NetworkStructure {
    let mut vars: Vec<VariableSpec> = (0..n).map(|i| VariableSpec::binary(format!("X{}", i + 1))).collect();
    vars.push(VariableSpec::selection("S", &["T", "F"], "F"));
    let base = NetworkStructure::new(vars).unwrap();
    let mut parents = vec![Vec::new(); n + 1];
    let mut b = bits.iter().cycle();
    for (a, &p) in order.iter().enumerate() {
        for &c in &order[a + 1..] {
            if *b.next().unwrap() {
                parents[c].push(p);
            }
        }
    }
    base.with_parents(parents).unwrap()
}

fn arb_structure() -> impl Strategy<Value = NetworkStructure> {
    (1usize..=4)
        .prop_flat_map(|n| (Just(n), Just((0..=n).collect::<Vec<_>>()).prop_shuffle(), prop::collection::vec(any::<bool>(), 10)))
        .prop_map(|(n, order, bits)| structure(n, &order, &bits))
}

fn cases(st: &NetworkStructure, raw: &[u8], m_t: usize) -> Vec<Vec<Option<usize>>> {
    let s = st.selection().unwrap();
    (0..m_t)
        .map(|c| (0..st.len()).map(|i| Some(if i == s { 0 } else { usize::from(raw[(c * 7 + i) % raw.len()] & 1 == 1) })).collect())
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn score_ignores_case_order(st in arb_structure(), raw in prop::collection::vec(any::<u8>(), 16), m_t in 0usize..5, m_f in 0u64..3) {
        let mut rows = cases(&st, &raw, m_t);
        let prior = PriorModel::default_for(&st).unwrap();
        let score = |rows: Vec<Vec<Option<usize>>>| {
            let data = Dataset::new(&st, rows).unwrap();
            let p = SelectionProblem::new(st.clone(), prior.clone(), data, PopulationSpec::point(m_f)).unwrap();
            marginal_likelihood(&p, Method::Auto, BUDGET).unwrap().value
        };
        let a = score(rows.clone());
        rows.reverse();
        prop_assert!((a - score(rows)).abs() < 1e-9);
    }

    #[test]
    fn s_root_plan_is_a_valid_root(st in arb_structure()) {
        let plan = make_s_root(&st).unwrap();
        let s = st.selection().unwrap();
        prop_assert!(plan.result.parents(s).is_empty());
        prop_assert!(plan.result.topological_order().is_ok());
        prop_assert_eq!(plan.apply(&st).unwrap(), plan.result.clone());
        prop_assert_eq!(plan.tree_valid, tree_valid(&st));
        if plan.tree_valid {
            prop_assert_eq!(plan.result.parameter_count(), st.parameter_count());
        }
        // Arcs outside S's ancestral set are left alone.
        let mut members = st.ancestors(s);
        members.push(s);
        for v in 0..st.len() {
            if !members.contains(&v) {
                prop_assert_eq!(plan.result.parents(v), st.parents(v));
            }
        }
    }

    #[test]
    fn exhaustive_posterior_is_normalised(raw in prop::collection::vec(any::<u8>(), 16), m_t in 0usize..6, m_f in 0u64..3) {
        let st = structure(2, &[0, 1, 2], &[true, false, true]);
        let data = Dataset::new(&st, cases(&st, &raw, m_t)).unwrap();
        let p = SelectionProblem::new(st.clone(), PriorModel::default_for(&st).unwrap(), data, PopulationSpec::point(m_f)).unwrap();
        let c = SearchConstraints::unconstrained().freeze_selection(&st);
        let table = exhaustive_posterior(&p, &StructurePrior::Uniform, &c, Method::Auto, BUDGET).unwrap();
        let total: f64 = table.structures.iter().map(|s| s.posterior.unwrap()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12);
        for w in table.structures.windows(2) {
            prop_assert!(w[0].posterior >= w[1].posterior);
        }
        for (_, e) in &table.edge_posteriors {
            prop_assert!((0.0..=1.0 + 1e-12).contains(e));
        }
    }
}
