//! Delimited case files: datasets (`?` marks MISSING) and population files
//! (complete, with `#` comment header lines).

use std::collections::BTreeMap;
use std::path::Path;

use selbayes_core::simulate::Population;
use selbayes_core::{Dataset, NetworkStructure};

use crate::error::{CliError, CliResult};
use crate::spec::sha256_hex;

pub const MISSING: &str = "?";
/// Suffix for the archived ground truth written next to a projected dataset.
pub const TRUTH_SUFFIX: &str = ".truth";

struct RawTable {
    comments: Vec<String>,
    header: Vec<String>,
    rows: Vec<Vec<String>>,
    digest: String,
}

fn read_raw(path: &Path) -> CliResult<RawTable> {
    let bytes = std::fs::read(path).map_err(|source| CliError::Io { path: path.into(), source })?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| CliError::invalid(path, "file is not UTF-8"))?;
    let comments = text
        .lines()
        .take_while(|l| l.starts_with('#'))
        .map(|l| l.trim_start_matches('#').trim().to_string())
        .collect();
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| CliError::invalid(path, format!("header: {e}")))?
        .iter()
        .map(str::to_string)
        .collect();
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| CliError::invalid(path, format!("row {}: {e}", i + 1)))?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(RawTable { comments, header, rows, digest: sha256_hex(&bytes) })
}

/// Columns mapped onto structure indices; `None` for a column the file
/// lacks (only latent variables may be absent).
fn map_columns(path: &Path, header: &[String], structure: &NetworkStructure, complete: bool) -> CliResult<Vec<Option<usize>>> {
    let mut errors = Vec::new();
    let mut position = BTreeMap::new();
    for (j, h) in header.iter().enumerate() {
        if structure.index_of(h).is_none() {
            errors.push(format!("column {}: `{h}` is not a declared variable", j + 1));
        } else if position.insert(h.as_str(), j).is_some() {
            errors.push(format!("column {}: `{h}` appears twice", j + 1));
        }
    }
    let mut cols = Vec::with_capacity(structure.len());
    for v in structure.variables() {
        let j = position.get(v.name.as_str()).copied();
        if j.is_none() && (complete || !v.latent) {
            errors.push(format!("header: column for `{}` missing", v.name));
        }
        cols.push(j);
    }
    if errors.is_empty() { Ok(cols) } else { Err(CliError::Invalid { path: path.into(), errors }) }
}

/// A dataset file split into sampled cases and the count of explicit
/// unsampled rows.
#[derive(Debug, Clone)]
pub struct LoadedData {
    pub dataset: Dataset,
    pub explicit_unsampled: u64,
    pub digest: String,
}

pub fn load_dataset(path: &Path, structure: &NetworkStructure) -> CliResult<LoadedData> {
    let raw = read_raw(path)?;
    let cols = map_columns(path, &raw.header, structure, false)?;
    let s = structure.selection();
    let mut errors = Vec::new();
    let mut cases = Vec::with_capacity(raw.rows.len());
    for (r, row) in raw.rows.iter().enumerate() {
        let mut case = vec![None; structure.len()];
        for (i, v) in structure.variables().iter().enumerate() {
            let Some(j) = cols[i] else { continue };
            let label = row[j].as_str();
            if label == MISSING {
                if Some(i) == s {
                    errors.push(format!("row {}: S never has a missing value", r + 1));
                }
                continue;
            }
            match v.state_index(label) {
                Some(k) => case[i] = Some(k),
                None => errors.push(format!("row {}, column `{}`: unknown state `{label}`", r + 1, v.name)),
            }
        }
        cases.push(case);
    }
    if !errors.is_empty() {
        return Err(CliError::Invalid { path: path.into(), errors });
    }
    let all = Dataset::new(structure, cases)?;
    let (dataset, explicit_unsampled) = match s {
        Some(_) => all.split_unsampled(structure)?,
        None => (all, 0),
    };
    Ok(LoadedData { dataset, explicit_unsampled, digest: raw.digest })
}

fn write_rows(path: &Path, comments: &[(String, String)], header: Vec<&str>, rows: Vec<Vec<&str>>) -> CliResult<()> {
    let mut out = String::new();
    for (k, v) in comments {
        out.push_str(&format!("# {k}: {v}\n"));
    }
    let mut w = csv::WriterBuilder::new().from_writer(Vec::new());
    let io = |e: csv::Error| CliError::invalid(path, e.to_string());
    w.write_record(&header).map_err(io)?;
    for row in rows {
        w.write_record(&row).map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| CliError::invalid(path, e.to_string()))?;
    out.push_str(std::str::from_utf8(&body).expect("csv writes UTF-8"));
    std::fs::write(path, out).map_err(|source| CliError::Io { path: path.into(), source })
}

pub fn write_dataset(path: &Path, structure: &NetworkStructure, dataset: &Dataset) -> CliResult<()> {
    let vars = structure.variables();
    let rows = dataset
        .cases()
        .iter()
        .map(|c| c.iter().zip(vars).map(|(v, spec)| v.map_or(MISSING, |k| spec.states[k].as_str())).collect())
        .collect();
    write_rows(path, &[], vars.iter().map(|v| v.name.as_str()).collect(), rows)
}

/// Population file; `header` becomes `# key: value` comment lines.
pub fn write_population(path: &Path, population: &Population, header: &[(String, String)]) -> CliResult<()> {
    let vars = population.structure().variables();
    let rows = population
        .cases()
        .iter()
        .map(|c| c.iter().zip(vars).map(|(&k, spec)| spec.states[k].as_str()).collect())
        .collect();
    write_rows(path, header, vars.iter().map(|v| v.name.as_str()).collect(), rows)
}

#[derive(Debug, Clone)]
pub struct LoadedPopulation {
    pub population: Population,
    /// `(key, value)` pairs from the comment header.
    pub header: Vec<(String, String)>,
    pub digest: String,
}

pub fn load_population(path: &Path, structure: &NetworkStructure) -> CliResult<LoadedPopulation> {
    let raw = read_raw(path)?;
    let cols = map_columns(path, &raw.header, structure, true)?;
    let mut errors = Vec::new();
    let mut cases = Vec::with_capacity(raw.rows.len());
    for (r, row) in raw.rows.iter().enumerate() {
        let mut case = vec![0; structure.len()];
        for (i, v) in structure.variables().iter().enumerate() {
            let label = row[cols[i].expect("complete header checked")].as_str();
            match v.state_index(label) {
                Some(k) => case[i] = k,
                None if label == MISSING => errors.push(format!("row {}, column `{}`: population files have no missing values", r + 1, v.name)),
                None => errors.push(format!("row {}, column `{}`: unknown state `{label}`", r + 1, v.name)),
            }
        }
        cases.push(case);
    }
    if !errors.is_empty() {
        return Err(CliError::Invalid { path: path.into(), errors });
    }
    let header = raw
        .comments
        .iter()
        .filter_map(|c| c.split_once(':').map(|(k, v)| (k.trim().to_string(), v.trim().to_string())))
        .collect();
    Ok(LoadedPopulation { population: Population::new(structure.clone(), cases)?, header, digest: raw.digest })
}

/// Path of the archive written next to `out`.
pub fn truth_path(out: &Path) -> std::path::PathBuf {
    let mut s = out.as_os_str().to_owned();
    s.push(TRUTH_SUFFIX);
    s.into()
}

#[cfg(test)]
mod tests {
    use super::*;
    use selbayes_core::VariableSpec;

    fn structure() -> NetworkStructure {
        NetworkStructure::with_edges(
            vec![VariableSpec::binary("X"), VariableSpec::binary("Y").latent(), VariableSpec::selection("S", &["T", "F"], "F")],
            &[("X", "S")],
        )
        .unwrap()
    }

    #[test]
    fn dataset_round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("d.csv");
        std::fs::write(&p, "S,X\nT,T\nT,?\nF,?\n").unwrap();
        let d = load_dataset(&p, &structure()).unwrap();
        assert_eq!(d.dataset.len(), 2);
        assert_eq!(d.explicit_unsampled, 1);
        assert_eq!(d.dataset.case(1), &[None, None, Some(0)]);

        let q = dir.path().join("e.csv");
        write_dataset(&q, &structure(), &d.dataset).unwrap();
        assert_eq!(std::fs::read_to_string(&q).unwrap(), "X,Y,S\nT,?,T\n?,?,T\n");

        std::fs::write(&p, "X,S\nT,?\nmaybe,T\n").unwrap();
        let CliError::Invalid { errors, .. } = load_dataset(&p, &structure()).unwrap_err() else { panic!() };
        assert!(errors[0].contains("S never has a missing value"));
        assert!(errors[1].contains("row 2") && errors[1].contains("`maybe`"));

        std::fs::write(&p, "X\nT\n").unwrap();
        assert!(load_dataset(&p, &structure()).is_err());
        std::fs::write(&p, "X,S\n").unwrap();
        let d = load_dataset(&p, &structure()).unwrap();
        assert!(d.dataset.is_empty() && d.explicit_unsampled == 0);
    }

    #[test]
    fn population_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("pop.csv");
        let pop = Population::new(structure(), vec![vec![0, 1, 0], vec![1, 1, 1]]).unwrap();
        write_population(&p, &pop, &[("seed".into(), "7".into())]).unwrap();
        let back = load_population(&p, &structure()).unwrap();
        assert_eq!(back.population, pop);
        assert_eq!(back.header, vec![("seed".to_string(), "7".to_string())]);
        assert_eq!(truth_path(&p).file_name().unwrap(), "pop.csv.truth");
    }
}
