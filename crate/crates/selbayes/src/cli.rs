//! Command-line front end.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use selbayes_core::search::{
    exhaustive_posterior, greedy_search, log_structure_prior, Move, ScoredStructure, StructurePrior,
    DEFAULT_RESTARTS,
};
use selbayes_core::selection::marginal_likelihood;
use selbayes_core::simulate::{apply_manipulation, apply_selection, forward_sample, project};
use selbayes_core::transform::{bic_heuristic_score, make_s_root};
use selbayes_core::{
    EnumerationBudget, MfPrior, NetworkStructure, PopulationSpec, SelectionProblem, Strategy, DEFAULT_BUDGET,
    DEFAULT_JOINT_CAP,
};

use crate::error::{CliError, CliResult};
use crate::files::{default_constraints, load_constraints, load_manipulation, load_selection};
use crate::report::{num, RunReport};
use crate::spec::{load_network_spec, sha256_hex, NetworkSpec};
use crate::table::{load_dataset, load_population, truth_path, write_dataset, write_population};

#[derive(Debug, Parser)]
#[command(name = "selbayes", version, about = "Bayesian scoring and discovery of causal networks under selection bias")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Also write the report to this file.
    #[arg(long, global = true)]
    pub report: Option<PathBuf>,
    /// Record wall-clock time in the report.
    #[arg(long, global = true)]
    pub timing: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Marginal likelihood of the network file's structure.
    Score(ScoreArgs),
    /// Posterior of one variable given evidence, from the network's CPTs.
    Posterior(PosteriorArgs),
    /// Structure search.
    Search(SearchArgs),
    /// Sample a population file.
    Simulate(SimulateArgs),
    /// Turn a population file into an observed dataset plus archive.
    Project(ProjectArgs),
    /// Arc reversals that make S a root.
    Reverse(ReverseArgs),
    /// BIC heuristic score.
    Bic(BicArgs),
    /// d-separation query.
    Dsep(DsepArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StrategyArg {
    Auto,
    Full,
    Ancestral,
    Collapsed,
    Tree,
    Bic,
}

impl From<StrategyArg> for Strategy {
    fn from(s: StrategyArg) -> Self {
        match s {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Full => Strategy::Full,
            StrategyArg::Ancestral => Strategy::Ancestral,
            StrategyArg::Collapsed => Strategy::Collapsed,
            StrategyArg::Tree => Strategy::Tree,
            StrategyArg::Bic => Strategy::Bic,
        }
    }
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
}

#[derive(Debug, Args)]
pub struct PosteriorArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub query: String,
    /// Comma-separated `VAR=STATE` pairs.
    #[arg(long, value_delimiter = ',')]
    pub evidence: Vec<String>,
}

#[derive(Debug, Clone, Copy, ValueEnum, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Greedy,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub mode: SearchMode,
    #[arg(long, default_value_t = DEFAULT_RESTARTS)]
    pub restarts: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub constraints: Option<PathBuf>,
    /// Independent prior probability of each admissible edge; uniform over
    /// structures when absent.
    #[arg(long)]
    pub edge_prior: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    pub strategy: StrategyArg,
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub budget: u64,
    /// Report only the best `top` structures.
    #[arg(long)]
    pub top: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub selection: Option<PathBuf>,
    #[arg(long)]
    pub manipulation: Option<PathBuf>,
    #[arg(long)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub population: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReverseArgs {
    #[arg(long)]
    pub network: PathBuf,
}

#[derive(Debug, Args)]
pub struct BicArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
}

#[derive(Debug, Args)]
pub struct DsepArgs {
    #[arg(long)]
    pub network: PathBuf,
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long, value_delimiter = ',')]
    pub given: Vec<String>,
}

/// What a run printed and how it ended.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Parses and runs one command line (including the program name).
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args: Vec<std::ffi::OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let text = e.render().to_string();
            return if code == 0 {
                Outcome { code, stdout: text, stderr: String::new() }
            } else {
                Outcome { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let echo = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(&cli, echo) {
        Ok(report) => {
            let text = report.to_json();
            if let Some(path) = &cli.report {
                if let Err(e) = std::fs::write(path, &text) {
                    return Outcome { code: 3, stdout: text, stderr: format!("error[input]: {}: {e}\n", path.display()) };
                }
            }
            Outcome { code: 0, stdout: text, stderr: String::new() }
        }
        Err(e) => {
            let cat = e.category();
            let mut stderr = String::new();
            match &e {
                CliError::Invalid { path, errors } => {
                    for err in errors {
                        stderr.push_str(&format!("error[{}]: {}: {err}\n", cat.as_str(), path.display()));
                    }
                }
                other => stderr.push_str(&format!("error[{}]: {other}\n", cat.as_str())),
            }
            Outcome { code: cat.exit_code(), stdout: String::new(), stderr }
        }
    }
}

pub fn execute(cli: &Cli, echo: Vec<String>) -> CliResult<RunReport> {
    let start = Instant::now();
    let mut report = RunReport::new(echo);
    match &cli.command {
        Command::Score(a) => score(a, &mut report)?,
        Command::Posterior(a) => posterior(a, &mut report)?,
        Command::Search(a) => search(a, &mut report)?,
        Command::Simulate(a) => simulate(a, &mut report)?,
        Command::Project(a) => project_cmd(a, &mut report)?,
        Command::Reverse(a) => reverse(a, &mut report)?,
        Command::Bic(a) => bic(a, &mut report)?,
        Command::Dsep(a) => dsep(a, &mut report)?,
    }
    if cli.timing {
        report.wall_clock_seconds = Some(num(start.elapsed().as_secs_f64()));
    }
    Ok(report)
}

fn network(path: &Path, report: &mut RunReport) -> CliResult<NetworkSpec> {
    let spec = load_network_spec(path)?;
    report.input("network", path, &spec.digest);
    if spec.default_prior {
        report.diagnostics.push("no priors section: using BDe with a uniform prior network, ess 1".into());
    }
    log::debug!("loaded {} variables from {}", spec.structure.len(), path.display());
    Ok(spec)
}

fn budget(terms: u64) -> CliResult<EnumerationBudget> {
    Ok(EnumerationBudget::new(terms)?)
}

fn mf_value(m: &MfPrior) -> Value {
    match m {
        MfPrior::Point(v) => json!(v),
        MfPrior::Categorical(e) => {
            Value::Object(e.iter().map(|(v, p)| (v.to_string(), num(*p))).collect::<Map<String, Value>>())
        }
    }
}

/// Network file plus data file as a scoring problem. Explicit unsampled
/// rows in the data add to every m_F value.
fn problem(spec: &NetworkSpec, data: &Path, report: &mut RunReport) -> CliResult<SelectionProblem> {
    let loaded = load_dataset(data, &spec.structure)?;
    report.input("data", data, &loaded.digest);
    let k = loaded.explicit_unsampled;
    let mut population = PopulationSpec::new(spec.population.m_f.shifted(k));
    for (enc, m) in &spec.population.per_structure {
        population.per_structure.insert(enc.clone(), m.shifted(k));
    }
    if k > 0 {
        report.diagnostics.push(format!("{k} unsampled rows in the data file added to m_F"));
    }
    Ok(SelectionProblem::new(spec.structure.clone(), spec.prior.clone(), loaded.dataset, population)?)
}

fn score(a: &ScoreArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let p = problem(&spec, &a.data, report)?;
    let b = budget(a.budget)?;
    let strategy: Strategy = a.strategy.into();
    let s = marginal_likelihood(&p, strategy, b)?;
    let mut result = json!({
        "structure": p.structure.canonical_encoding(),
        "strategy": strategy.as_str(),
        "method": s.method.as_str(),
        "m_T": p.m_t(),
        "m_F": mf_value(p.population.prior_for(&p.structure)),
        "log_marginal_likelihood": num(s.value),
    });
    if strategy == Strategy::Bic {
        let m = p.point_m_f().expect("bic scoring checked the m_F prior");
        result["bic"] = bic_value(&p, m)?;
    }
    report.result = result;
    Ok(())
}

fn bic_value(p: &SelectionProblem, m_f: u64) -> CliResult<Value> {
    let r = bic_heuristic_score(p, m_f)?;
    let empty: Vec<Value> = r.empty_rows.iter().map(|(v, row)| json!({ "variable": v, "row": row })).collect();
    Ok(json!({
        "log_likelihood": num(r.log_likelihood),
        "param_count": r.param_count,
        "bic": num(r.bic),
        "sample_size": r.sample_size,
        "empty_rows": empty,
        "fitted_structure": r.plan.result.canonical_encoding(),
        "reversed": r.plan.reversed_names(),
    }))
}

fn bic(a: &BicArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let p = problem(&spec, &a.data, report)?;
    let m = p.point_m_f().ok_or_else(|| CliError::Usage("bic needs a point-mass m_F".into()))?;
    let mut result = bic_value(&p, m)?;
    result["m_T"] = json!(p.m_t());
    result["m_F"] = json!(m);
    report.result = result;
    Ok(())
}

fn parse_assignments(structure: &NetworkStructure, items: &[String]) -> CliResult<Vec<(usize, usize)>> {
    items
        .iter()
        .filter(|s| !s.is_empty())
        .map(|item| {
            let (v, s) = item.split_once('=').ok_or_else(|| CliError::Usage(format!("evidence `{item}` is not VAR=STATE")))?;
            let i = structure.require(v.trim())?;
            Ok((i, structure.variable(i).require_state(s.trim())?))
        })
        .collect()
}

fn posterior(a: &PosteriorArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let net = spec.require_network()?;
    let st = &spec.structure;
    let q = st.require(&a.query)?;
    let evidence = parse_assignments(st, &a.evidence)?;
    let dist = net.infer_conditional(&evidence, q, DEFAULT_JOINT_CAP)?;
    let ev: Map<String, Value> =
        evidence.iter().map(|&(v, k)| (st.name(v).to_string(), json!(st.variable(v).states[k]))).collect();
    let probs: Map<String, Value> =
        dist.iter().enumerate().map(|(k, &p)| (st.variable(q).states[k].clone(), num(p))).collect();
    report.result = json!({ "query": a.query, "evidence": ev, "distribution": probs });
    Ok(())
}

fn structure_value(s: &ScoredStructure, rank: usize) -> Value {
    let mut v = json!({
        "rank": rank,
        "structure": s.structure.canonical_encoding(),
        "method": s.method.as_str(),
        "log_marginal_likelihood": num(s.log_marginal_likelihood),
        "log_structure_prior": num(s.log_structure_prior),
        "log_unnormalized_posterior": num(s.log_unnormalized_posterior),
    });
    if let Some(p) = s.posterior {
        v["posterior"] = num(p);
    }
    v
}

fn move_value(m: Move, st: &NetworkStructure) -> Value {
    let (op, e) = match m {
        Move::Start => return json!("start"),
        Move::Add(p, c) => ("add", (p, c)),
        Move::Delete(p, c) => ("delete", (p, c)),
        Move::Reverse(p, c) => ("reverse", (p, c)),
    };
    json!(format!("{op} {}->{}", st.name(e.0), st.name(e.1)))
}

fn search(a: &SearchArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let p = problem(&spec, &a.data, report)?;
    let st = &spec.structure;
    let constraints = match &a.constraints {
        Some(path) => {
            let c = load_constraints(path, st)?;
            report.input("constraints", path, &c.digest);
            c.value
        }
        None => default_constraints(st),
    };
    let prior = match a.edge_prior {
        None => StructurePrior::Uniform,
        Some(q) => StructurePrior::per_edge(q, BTreeMap::new())?,
    };
    let b = budget(a.budget)?;
    let strategy: Strategy = a.strategy.into();
    let search_problem = p.with_structure(constraints.minimal_structure(st)?)?;
    match a.mode {
        SearchMode::Exhaustive => {
            let table = exhaustive_posterior(&search_problem, &prior, &constraints, strategy, b)?;
            let shown = a.top.unwrap_or(table.structures.len()).min(table.structures.len());
            let ranked: Vec<Value> = table.structures[..shown].iter().enumerate().map(|(i, s)| structure_value(s, i + 1)).collect();
            let edges: Vec<Value> = table
                .edge_posteriors
                .iter()
                .map(|((p, c), pr)| json!({ "parent": p, "child": c, "probability": num(*pr) }))
                .collect();
            report.result = json!({
                "mode": "exhaustive",
                "strategy": strategy.as_str(),
                "count": table.structures.len(),
                "structures": ranked,
                "edge_posteriors": edges,
            });
        }
        SearchMode::Greedy => {
            let seed = a.seed.ok_or_else(|| CliError::Usage("greedy search requires --seed".into()))?;
            report.seed = Some(seed);
            let g = greedy_search(&search_problem, &prior, &constraints, a.restarts, seed, strategy, b)?;
            let trace: Vec<Value> = g
                .trace
                .iter()
                .map(|t| {
                    json!({
                        "restart": t.restart,
                        "step": t.step,
                        "move": move_value(t.operator, st),
                        "structure": t.encoding,
                        "log_unnormalized_posterior": num(t.log_unnormalized_posterior),
                    })
                })
                .collect();
            report.result = json!({
                "mode": "greedy",
                "strategy": strategy.as_str(),
                "restarts": a.restarts,
                "best": structure_value(&g.best, 1),
                "evaluations": g.evaluations,
                "trace": trace,
            });
        }
    }
    // The declared structure's own score, for comparison.
    if let Ok(ml) = marginal_likelihood(&p, strategy, b) {
        report.result["declared"] = json!({
            "structure": st.canonical_encoding(),
            "log_unnormalized_posterior": num(ml.value + log_structure_prior(st, &prior, &constraints)),
        });
    }
    Ok(())
}

fn simulate(a: &SimulateArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let net = spec.require_network()?;
    let st = &spec.structure;
    report.seed = Some(a.seed);
    let mut pop = forward_sample(net, a.n, a.seed)?;
    let mut header = vec![("seed".to_string(), a.seed.to_string()), ("network".to_string(), spec.digest.clone())];
    if let Some(path) = &a.manipulation {
        let design = load_manipulation(path, st)?;
        report.input("manipulation", path, &design.digest);
        pop = apply_manipulation(net, &pop, &design.value, a.seed.wrapping_add(1))?;
        header.push(("manipulation".to_string(), design.digest));
    }
    let mechanism = match &a.selection {
        Some(path) => {
            let m = load_selection(path, st)?;
            report.input("selection", path, &m.digest);
            pop = apply_selection(net, &pop, &m.value, a.seed.wrapping_add(2))?;
            m.value.describe()
        }
        None => "forward".to_string(),
    };
    header.push(("mechanism".to_string(), mechanism.clone()));
    write_population(&a.out, &pop, &header)?;
    let bytes = std::fs::read(&a.out).map_err(|source| CliError::Io { path: a.out.clone(), source })?;
    let mut result = json!({
        "out": a.out.display().to_string(),
        "n": a.n,
        "mechanism": mechanism,
        "population_sha256": sha256_hex(&bytes),
    });
    if let Some(s) = st.selection() {
        let counts: Map<String, Value> =
            st.variable(s).states.iter().enumerate().map(|(k, l)| (l.clone(), json!(pop.count(s, k)))).collect();
        result["selection_counts"] = Value::Object(counts);
    }
    report.result = result;
    Ok(())
}

fn project_cmd(a: &ProjectArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let loaded = load_population(&a.population, &spec.structure)?;
    report.input("population", &a.population, &loaded.digest);
    let proj = project(&loaded.population)?;
    write_dataset(&a.out, &spec.structure, &proj.dataset)?;
    let truth = truth_path(&a.out);
    write_population(&truth, &proj.archive, &loaded.header)?;
    report.result = json!({
        "out": a.out.display().to_string(),
        "truth": truth.display().to_string(),
        "m_T": proj.dataset.len(),
        "m_F": mf_value(&proj.population.m_f),
        "latent": spec.structure.latent_variables().iter().map(|&l| spec.structure.name(l)).collect::<Vec<_>>(),
    });
    Ok(())
}

fn reverse(a: &ReverseArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let st = &spec.structure;
    let plan = make_s_root(st)?;
    report.result = json!({
        "original": st.canonical_encoding(),
        "result": plan.result.canonical_encoding(),
        "reversed": plan.reversed_names(),
        "tree_valid": plan.tree_valid,
        "parameter_count": { "original": st.parameter_count(), "result": plan.result.parameter_count() },
    });
    Ok(())
}

fn dsep(a: &DsepArgs, report: &mut RunReport) -> CliResult<()> {
    let spec = network(&a.network, report)?;
    let given: Vec<&str> = a.given.iter().map(String::as_str).filter(|s| !s.is_empty()).collect();
    let sep = spec.structure.d_separated_names(&a.x, &a.y, &given)?;
    report.result = json!({ "x": a.x, "y": a.y, "given": given, "d_separated": sep });
    Ok(())
}
