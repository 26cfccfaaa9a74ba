//! Constraint, selection-mechanism and manipulation-design files (JSON).

use std::collections::BTreeMap;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Deserialize;

use selbayes_core::search::SearchConstraints;
use selbayes_core::simulate::{CombinedState, ManipulationArm, ManipulationDesign, Predicate, Quota, SelectionMechanism};
use selbayes_core::NetworkStructure;

use crate::error::{CliError, CliResult};
use crate::spec::sha256_hex;

/// Parsed file contents plus their digest.
pub struct Loaded<T> {
    pub value: T,
    pub digest: String,
}

fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<(T, String)> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let value = serde_json::from_str(&text).map_err(|e| CliError::invalid(path, format!("schema: {e}")))?;
    Ok((value, sha256_hex(text.as_bytes())))
}

fn index(structure: &NetworkStructure, name: &str, at: &str, errors: &mut Vec<String>) -> Option<usize> {
    let i = structure.index_of(name);
    if i.is_none() {
        errors.push(format!("{at}: unknown variable `{name}`"));
    }
    i
}

fn state(structure: &NetworkStructure, var: usize, label: &str, at: &str, errors: &mut Vec<String>) -> Option<usize> {
    let k = structure.variable(var).state_index(label);
    if k.is_none() {
        errors.push(format!("{at}: `{}` has no state `{label}`", structure.name(var)));
    }
    k
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConstraintFile {
    #[serde(default)]
    required: Vec<(String, String)>,
    #[serde(default)]
    forbidden: Vec<(String, String)>,
    #[serde(default = "yes")]
    fixed_selection_parents: bool,
    #[serde(default)]
    allow_selection_children: bool,
    #[serde(default)]
    max_parents: Option<usize>,
}

fn yes() -> bool {
    true
}

/// Defaults used when no constraint file is given: `S` keeps the parents
/// declared in the network file and has no children.
pub fn default_constraints(structure: &NetworkStructure) -> SearchConstraints {
    SearchConstraints::unconstrained().freeze_selection(structure)
}

pub fn load_constraints(path: &Path, structure: &NetworkStructure) -> CliResult<Loaded<SearchConstraints>> {
    let (file, digest): (ConstraintFile, _) = read_json(path)?;
    let mut errors = Vec::new();
    let mut c = SearchConstraints::unconstrained();
    if file.fixed_selection_parents {
        c = c.freeze_selection(structure);
    }
    c.allow_selection_children = file.allow_selection_children;
    if let Some(m) = file.max_parents {
        c.max_parents = m;
    }
    for (list, out, at) in [(&file.required, &mut c.required, "required"), (&file.forbidden, &mut c.forbidden, "forbidden")] {
        for (j, (p, ch)) in list.iter().enumerate() {
            let at = format!("{at}[{j}]");
            if let (Some(a), Some(b)) = (index(structure, p, &at, &mut errors), index(structure, ch, &at, &mut errors)) {
                out.insert((a, b));
            }
        }
    }
    if errors.is_empty() {
        if let Err(e) = c.validate(structure) {
            errors.push(e.to_string());
        }
    }
    if errors.is_empty() { Ok(Loaded { value: c, digest }) } else { Err(CliError::Invalid { path: path.into(), errors }) }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum PredicateEntry {
    Is {
        var: String,
        is: String,
    },
    All {
        all: Vec<PredicateEntry>,
    },
    Any {
        any: Vec<PredicateEntry>,
    },
    Not {
        not: Box<PredicateEntry>,
    },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct QuotaEntry {
    state: String,
    count: usize,
    #[serde(default)]
    when: Option<PredicateEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CombinedEntry {
    parts: Vec<usize>,
    state: String,
}

#[derive(Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
enum SelectionEntry {
    Mechanistic,
    Quota {
        quotas: Vec<QuotaEntry>,
    },
    Composite {
        parts: Vec<SelectionEntry>,
        #[serde(default)]
        combined: Vec<CombinedEntry>,
    },
}

fn predicate(structure: &NetworkStructure, p: &PredicateEntry, at: &str, errors: &mut Vec<String>) -> Predicate {
    match p {
        PredicateEntry::Is { var, is } => match index(structure, var, at, errors) {
            Some(v) => match state(structure, v, is, at, errors) {
                Some(k) => Predicate::Equals(v, k),
                None => Predicate::Always,
            },
            None => Predicate::Always,
        },
        PredicateEntry::All { all } => Predicate::All(all.iter().map(|q| predicate(structure, q, at, errors)).collect()),
        PredicateEntry::Any { any } => Predicate::Any(any.iter().map(|q| predicate(structure, q, at, errors)).collect()),
        PredicateEntry::Not { not } => Predicate::Not(Box::new(predicate(structure, not, at, errors))),
    }
}

fn selection(structure: &NetworkStructure, e: &SelectionEntry, at: &str, errors: &mut Vec<String>) -> SelectionMechanism {
    let Some(s) = structure.selection() else {
        errors.push(format!("{at}: the network has no selection variable"));
        return SelectionMechanism::Mechanistic;
    };
    match e {
        SelectionEntry::Mechanistic => SelectionMechanism::Mechanistic,
        SelectionEntry::Quota { quotas } => SelectionMechanism::Quota(
            quotas
                .iter()
                .enumerate()
                .map(|(j, q)| {
                    let at = format!("{at}.quotas[{j}]");
                    Quota {
                        state: state(structure, s, &q.state, &at, errors).unwrap_or(0),
                        count: q.count,
                        predicate: q.when.as_ref().map_or(Predicate::Always, |p| predicate(structure, p, &at, errors)),
                    }
                })
                .collect(),
        ),
        SelectionEntry::Composite { parts, combined } => SelectionMechanism::Composite {
            parts: parts
                .iter()
                .enumerate()
                .map(|(j, p)| selection(structure, p, &format!("{at}.parts[{j}]"), errors))
                .collect(),
            combined: combined
                .iter()
                .enumerate()
                .map(|(j, c)| CombinedState {
                    parts: c.parts.clone(),
                    state: state(structure, s, &c.state, &format!("{at}.combined[{j}]"), errors).unwrap_or(0),
                })
                .collect(),
        },
    }
}

pub fn load_selection(path: &Path, structure: &NetworkStructure) -> CliResult<Loaded<SelectionMechanism>> {
    let (file, digest): (SelectionEntry, _) = read_json(path)?;
    let mut errors = Vec::new();
    let value = selection(structure, &file, "selection", &mut errors);
    if errors.is_empty() { Ok(Loaded { value, digest }) } else { Err(CliError::Invalid { path: path.into(), errors }) }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ArmEntry {
    variable: String,
    fraction: f64,
    assignment: BTreeMap<String, f64>,
    #[serde(default = "one")]
    compliance: f64,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ManipulationFile {
    arms: Vec<ArmEntry>,
}

pub fn load_manipulation(path: &Path, structure: &NetworkStructure) -> CliResult<Loaded<ManipulationDesign>> {
    let (file, digest): (ManipulationFile, _) = read_json(path)?;
    let mut errors = Vec::new();
    let mut arms = Vec::new();
    for (j, a) in file.arms.iter().enumerate() {
        let at = format!("arms[{j}]");
        let Some(q) = index(structure, &a.variable, &at, &mut errors) else { continue };
        let arity = structure.arity(q) - 1;
        let mut assignment = vec![0.0; arity];
        for (label, &p) in &a.assignment {
            match structure.variable(q).state_index(label) {
                Some(k) if k < arity => assignment[k] = p,
                _ => errors.push(format!("{at}: `{label}` is not an assignable state of `{}`", a.variable)),
            }
        }
        arms.push(ManipulationArm { variable: q, fraction: a.fraction, assignment, compliance: a.compliance });
    }
    let design = ManipulationDesign { arms };
    if errors.is_empty() {
        if let Err(e) = design.validate(structure) {
            errors.push(e.to_string());
        }
    }
    if errors.is_empty() { Ok(Loaded { value: design, digest }) } else { Err(CliError::Invalid { path: path.into(), errors }) }
}
