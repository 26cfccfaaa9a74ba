//! JSON network specification files.
//!
//! ```json
//! {
//!   "variables": [
//!     {"name": "X1", "states": ["T", "F"]},
//!     {"name": "S", "role": "selection", "states": ["T", "F"], "unsampled": "F"}
//!   ],
//!   "edges": [["X1", "S"]],
//!   "cpts": {"X1": [[0.5, 0.5]], "S": [[0.9, 0.1], [0.2, 0.8]]},
//!   "priors": {"mode": "bde", "ess": 1.0},
//!   "selection_prior": {"parents": ["X1"], "per_mF": {"4": [{"means": [0.9, 0.1], "ess": 1.0}]}},
//!   "population": {"m_F": 4}
//! }
//! ```
//!
//! CPT and prior-table rows are indexed by parent configuration with
//! parents in declaration order, the last parent varying fastest.

use std::collections::BTreeMap;
use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use selbayes_core::prior::{validate_prior, BdePrior, SelectionRow};
use selbayes_core::{
    BdeSpec, Cpt, FamilyPrior, FamilyTable, GeneratingNetwork, MfPrior, NetworkStructure, PopulationSpec, PriorModel,
    SelectionPriorSpec, VariableSpec, DEFAULT_JOINT_CAP,
};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    variables: Vec<VariableEntry>,
    #[serde(default)]
    edges: Vec<(String, String)>,
    #[serde(default)]
    cpts: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(default)]
    priors: Option<PriorsEntry>,
    #[serde(default)]
    selection_prior: Option<SelectionPriorEntry>,
    #[serde(default)]
    population: Option<PopulationEntry>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq, Default)]
#[serde(rename_all = "lowercase")]
enum RoleEntry {
    #[default]
    Domain,
    Selection,
    Manipulation,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct VariableEntry {
    name: String,
    #[serde(default)]
    states: Option<Vec<String>>,
    #[serde(default)]
    role: RoleEntry,
    #[serde(default)]
    latent: bool,
    #[serde(default)]
    unsampled: Option<String>,
    #[serde(default)]
    target: Option<String>,
}

#[derive(Debug, Deserialize, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum PriorMode {
    Bde,
    Explicit,
    Constant,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorsEntry {
    mode: PriorMode,
    #[serde(default)]
    ess: Option<f64>,
    #[serde(default)]
    prior_network: Option<PriorNetworkEntry>,
    #[serde(default)]
    tables: Option<BTreeMap<String, Vec<Vec<f64>>>>,
    #[serde(default)]
    alpha: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PriorNetworkEntry {
    #[serde(default)]
    edges: Vec<(String, String)>,
    cpts: BTreeMap<String, Vec<Vec<f64>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionPriorEntry {
    parents: Vec<String>,
    #[serde(rename = "per_mF")]
    per_m_f: BTreeMap<String, Vec<SelectionRowEntry>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SelectionRowEntry {
    means: Vec<f64>,
    ess: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum MfEntry {
    Point(u64),
    Categorical(BTreeMap<String, f64>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct PopulationEntry {
    #[serde(rename = "m_F", default)]
    m_f: Option<MfEntry>,
    #[serde(default)]
    per_structure: BTreeMap<String, MfEntry>,
}

/// Everything a network file declares.
#[derive(Debug, Clone)]
pub struct NetworkSpec {
    pub structure: NetworkStructure,
    /// Present when the file has CPTs for every variable.
    pub network: Option<GeneratingNetwork>,
    pub prior: PriorModel,
    pub population: PopulationSpec,
    /// No `priors` section: BDe over a uniform prior network, ess 1.
    pub default_prior: bool,
    /// SHA-256 of the file contents, lowercase hex.
    pub digest: String,
}

impl NetworkSpec {
    pub fn require_network(&self) -> CliResult<&GeneratingNetwork> {
        self.network.as_ref().ok_or_else(|| CliError::Usage("the network file has no `cpts` section".into()))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn load_network_spec(path: &Path) -> CliResult<NetworkSpec> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    parse_network_spec(&text, path)
}

pub fn parse_network_spec(text: &str, path: &Path) -> CliResult<NetworkSpec> {
    let file: NetworkFile = serde_json::from_str(text).map_err(|e| CliError::invalid(path, format!("schema: {e}")))?;
    let mut errors = Vec::new();
    let structure = match build_structure(&file, &mut errors) {
        Some(s) => s,
        None => return Err(CliError::Invalid { path: path.into(), errors }),
    };
    let network = file.cpts.as_ref().and_then(|c| build_network(&structure, c, "cpts", &mut errors));
    let mut prior = build_prior(&structure, file.priors.as_ref(), &mut errors);
    if let Some(sel) = &file.selection_prior {
        if let (Some(p), Some(sp)) = (prior.take(), build_selection_prior(&structure, sel, &mut errors)) {
            prior = Some(p.with_selection(sp));
        }
    }
    let population = build_population(file.population.as_ref(), &mut errors);
    if !errors.is_empty() {
        return Err(CliError::Invalid { path: path.into(), errors });
    }
    Ok(NetworkSpec {
        structure,
        network,
        prior: prior.expect("prior present when no errors"),
        population: population.expect("population present when no errors"),
        default_prior: file.priors.is_none(),
        digest: sha256_hex(text.as_bytes()),
    })
}

fn build_structure(file: &NetworkFile, errors: &mut Vec<String>) -> Option<NetworkStructure> {
    let mut vars = Vec::with_capacity(file.variables.len());
    for (i, v) in file.variables.iter().enumerate() {
        let at = format!("variables[{i}] (`{}`)", v.name);
        let states: Vec<&str> = v.states.iter().flatten().map(String::as_str).collect();
        let spec = match v.role {
            RoleEntry::Domain => {
                if v.states.is_none() {
                    errors.push(format!("{at}: states missing"));
                    continue;
                }
                VariableSpec::domain(v.name.clone(), &states)
            }
            RoleEntry::Selection => {
                let Some(u) = &v.unsampled else {
                    errors.push(format!("{at}: selection variable needs `unsampled`"));
                    continue;
                };
                if v.states.is_none() {
                    errors.push(format!("{at}: states missing"));
                    continue;
                }
                VariableSpec::selection(v.name.clone(), &states, u)
            }
            RoleEntry::Manipulation => {
                let Some(t) = &v.target else {
                    errors.push(format!("{at}: manipulation variable needs `target`"));
                    continue;
                };
                let Some(target) = file.variables.iter().find(|w| &w.name == t && w.role == RoleEntry::Domain) else {
                    errors.push(format!("{at}: target `{t}` is not a declared domain variable"));
                    continue;
                };
                let tv = VariableSpec::domain(t.clone(), &target.states.iter().flatten().map(String::as_str).collect::<Vec<_>>());
                let q = VariableSpec::manipulation(v.name.clone(), &tv);
                if v.states.as_ref().is_some_and(|s| *s != q.states) {
                    errors.push(format!("{at}: states must be the target's states followed by `ne`"));
                    continue;
                }
                q
            }
        };
        if v.role != RoleEntry::Selection && v.unsampled.is_some() {
            errors.push(format!("{at}: `unsampled` is only valid on the selection variable"));
        }
        vars.push(if v.latent { spec.latent() } else { spec });
    }
    if !errors.is_empty() {
        return None;
    }
    let base = match NetworkStructure::new(vars.clone()) {
        Ok(s) => s,
        Err(e) => {
            errors.push(format!("variables: {e}"));
            return None;
        }
    };
    let edges = resolve_edges(&base, &file.edges, "edges", errors);
    let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
    if edges.len() != file.edges.len() {
        return None;
    }
    match NetworkStructure::with_edges(vars, &refs).and_then(|s| s.enforce_manipulation_constraint()) {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(format!("edges: {e}"));
            None
        }
    }
}

fn resolve_edges(base: &NetworkStructure, edges: &[(String, String)], at: &str, errors: &mut Vec<String>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for (j, (p, c)) in edges.iter().enumerate() {
        let mut ok = true;
        for end in [p, c] {
            if base.index_of(end).is_none() {
                errors.push(format!("{at}[{j}]: unknown variable `{end}`"));
                ok = false;
            }
        }
        if ok {
            out.push((p.clone(), c.clone()));
        }
    }
    out
}

fn build_network(
    structure: &NetworkStructure,
    tables: &BTreeMap<String, Vec<Vec<f64>>>,
    at: &str,
    errors: &mut Vec<String>,
) -> Option<GeneratingNetwork> {
    let before = errors.len();
    for name in tables.keys() {
        if structure.index_of(name).is_none() {
            errors.push(format!("{at}: unknown variable `{name}`"));
        }
    }
    let mut cpts = Vec::with_capacity(structure.len());
    for v in structure.variables() {
        match tables.get(&v.name) {
            Some(rows) => cpts.push(Cpt::new(rows.clone())),
            None => errors.push(format!("{at}: no table for `{}`", v.name)),
        }
    }
    if errors.len() > before {
        return None;
    }
    match GeneratingNetwork::new(structure.clone(), cpts) {
        Ok(n) => Some(n),
        Err(e) => {
            errors.push(format!("{at}: {e}"));
            None
        }
    }
}

fn build_prior(structure: &NetworkStructure, entry: Option<&PriorsEntry>, errors: &mut Vec<String>) -> Option<PriorModel> {
    let Some(entry) = entry else {
        return match PriorModel::default_for(structure) {
            Ok(p) => Some(p),
            Err(e) => {
                errors.push(format!("priors: {e}"));
                None
            }
        };
    };
    let unused = |name: &str, present: bool, errors: &mut Vec<String>| {
        if present {
            errors.push(format!("priors: `{name}` does not apply to mode {:?}", entry.mode));
        }
    };
    match entry.mode {
        PriorMode::Bde => {
            unused("tables", entry.tables.is_some(), errors);
            unused("alpha", entry.alpha.is_some(), errors);
            let ess = entry.ess.unwrap_or(1.0);
            let joint = match &entry.prior_network {
                None => GeneratingNetwork::uniform(structure.empty_like()),
                Some(pn) => {
                    let edges = resolve_edges(structure, &pn.edges, "priors.prior_network.edges", errors);
                    if edges.len() != pn.edges.len() {
                        return None;
                    }
                    let refs: Vec<(&str, &str)> = edges.iter().map(|(a, b)| (a.as_str(), b.as_str())).collect();
                    let s = match NetworkStructure::with_edges(structure.variables().to_vec(), &refs) {
                        Ok(s) => s,
                        Err(e) => {
                            errors.push(format!("priors.prior_network.edges: {e}"));
                            return None;
                        }
                    };
                    build_network(&s, &pn.cpts, "priors.prior_network.cpts", errors)?
                }
            };
            match BdeSpec::new(ess, joint).and_then(|spec| BdePrior::new(spec, DEFAULT_JOINT_CAP)) {
                Ok(b) => Some(PriorModel::bde(b)),
                Err(e) => {
                    errors.push(format!("priors: {e}"));
                    None
                }
            }
        }
        PriorMode::Constant => {
            unused("ess", entry.ess.is_some(), errors);
            unused("tables", entry.tables.is_some(), errors);
            unused("prior_network", entry.prior_network.is_some(), errors);
            match entry.alpha {
                Some(a) if a > 0.0 && a.is_finite() => Some(PriorModel::constant(a)),
                _ => {
                    errors.push("priors: constant mode needs a positive `alpha`".into());
                    None
                }
            }
        }
        PriorMode::Explicit => {
            unused("ess", entry.ess.is_some(), errors);
            unused("alpha", entry.alpha.is_some(), errors);
            unused("prior_network", entry.prior_network.is_some(), errors);
            let Some(tables) = &entry.tables else {
                errors.push("priors: explicit mode needs `tables`".into());
                return None;
            };
            let before = errors.len();
            for name in tables.keys() {
                if structure.index_of(name).is_none() {
                    errors.push(format!("priors.tables: unknown variable `{name}`"));
                }
            }
            let mut out = Vec::new();
            for v in structure.variables() {
                match tables.get(&v.name) {
                    Some(rows) => out.push(FamilyTable { rows: rows.clone() }),
                    None => errors.push(format!("priors.tables: no table for `{}`", v.name)),
                }
            }
            if errors.len() > before {
                return None;
            }
            let prior = FamilyPrior { tables: out };
            if let Err(diags) = validate_prior(&prior, structure) {
                for d in diags {
                    let row = d.row.map(|r| format!(" row {r}")).unwrap_or_default();
                    errors.push(format!("priors.tables.{}{row}: {}", d.variable, d.message));
                }
                return None;
            }
            match PriorModel::explicit(structure, prior) {
                Ok(p) => Some(p),
                Err(e) => {
                    errors.push(format!("priors: {e}"));
                    None
                }
            }
        }
    }
}

fn build_selection_prior(
    structure: &NetworkStructure,
    entry: &SelectionPriorEntry,
    errors: &mut Vec<String>,
) -> Option<SelectionPriorSpec> {
    let Some(s) = structure.selection() else {
        errors.push("selection_prior: the network has no selection variable".into());
        return None;
    };
    let declared: Vec<String> = structure.parents(s).iter().map(|&p| structure.name(p).to_string()).collect();
    if entry.parents != declared {
        errors.push(format!(
            "selection_prior.parents: {:?} do not match the parents of `{}` {:?}",
            entry.parents,
            structure.name(s),
            declared
        ));
    }
    let mut per = BTreeMap::new();
    let rows_needed = structure.parent_configs(s);
    for (k, rows) in &entry.per_m_f {
        let Ok(m) = k.parse::<u64>() else {
            errors.push(format!("selection_prior.per_mF: key `{k}` is not a nonnegative integer"));
            continue;
        };
        if rows.len() != rows_needed {
            errors.push(format!("selection_prior.per_mF.{k}: {} rows given, {rows_needed} expected", rows.len()));
        }
        for (j, r) in rows.iter().enumerate() {
            if r.means.len() != structure.arity(s) {
                errors.push(format!("selection_prior.per_mF.{k}[{j}]: means must have {} entries", structure.arity(s)));
            }
        }
        per.insert(m, rows.iter().map(|r| SelectionRow { means: r.means.clone(), ess: r.ess }).collect());
    }
    match SelectionPriorSpec::new(entry.parents.clone(), per) {
        Ok(s) => Some(s),
        Err(e) => {
            errors.push(format!("selection_prior: {e}"));
            None
        }
    }
}

fn mf_prior(entry: &MfEntry, at: &str, errors: &mut Vec<String>) -> Option<MfPrior> {
    match entry {
        MfEntry::Point(m) => Some(MfPrior::Point(*m)),
        MfEntry::Categorical(map) => {
            let mut values = Vec::new();
            for (k, &p) in map {
                match k.parse::<u64>() {
                    Ok(v) => values.push((v, p)),
                    Err(_) => errors.push(format!("{at}: key `{k}` is not a nonnegative integer")),
                }
            }
            match MfPrior::categorical(values) {
                Ok(p) => Some(p),
                Err(e) => {
                    errors.push(format!("{at}: {e}"));
                    None
                }
            }
        }
    }
}

fn build_population(entry: Option<&PopulationEntry>, errors: &mut Vec<String>) -> Option<PopulationSpec> {
    let Some(entry) = entry else {
        return Some(PopulationSpec::point(0));
    };
    let m_f = match &entry.m_f {
        Some(m) => mf_prior(m, "population.m_F", errors)?,
        None => MfPrior::Point(0),
    };
    let mut spec = PopulationSpec::new(m_f);
    for (enc, m) in &entry.per_structure {
        if let Some(p) = mf_prior(m, &format!("population.per_structure.{enc}"), errors) {
            spec.per_structure.insert(enc.clone(), p);
        }
    }
    Some(spec)
}
