use alloc::string::String;
use alloc::vec::Vec;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("invalid variable `{name}`: {reason}")]
    InvalidVariable { name: String, reason: String },

    #[error("self-loop on `{0}`")]
    SelfLoop(String),

    #[error("graph contains a cycle: {}", .0.join(" -> "))]
    Cycle(Vec<String>),

    #[error("invalid structure: {0}")]
    InvalidStructure(String),

    #[error("variable `{variable}` has no state `{state}`")]
    UnknownState { variable: String, state: String },

    #[error("invalid distribution for `{variable}`: {reason}")]
    InvalidDistribution { variable: String, reason: String },

    #[error("impossible evidence")]
    ImpossibleEvidence,

    #[error("enumeration too large: {states} joint states exceeds cap {cap}")]
    EnumerationTooLarge { states: u128, cap: u64 },

    #[error("BDe prior undefined for impossible configuration of `{variable}` parents (row {row})")]
    BdeImpossibleConfiguration { variable: String, row: usize },

    #[error("m_F = {requested} not covered by the selection prior (covered: {covered:?})")]
    UncoveredMf { requested: u64, covered: Vec<u64> },

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("case {case} is not ancestrally closed: `{variable}` observed but parent `{parent}` missing")]
    NotAncestrallyClosed { case: usize, variable: String, parent: String },

    #[error("latent variable has data: `{0}`")]
    LatentHasData(String),

    #[error("{terms} summation terms exceeds budget {budget}")]
    BudgetExceeded { terms: u128, budget: u64 },

    #[error("no selection variable in structure")]
    NoSelectionVariable,

    #[error("fast path requires likelihood-equivalent priors")]
    FastPathRequiresBde,

    #[error("fast path requires S and its ancestors to form a tree")]
    FastPathNotTree,

    #[error("reversing `{parent}` -> `{child}` would create a cycle via {}", .path.join(" -> "))]
    ReversalCycle { parent: String, child: String, path: Vec<String> },

    #[error("no edge `{0}` -> `{1}`")]
    MissingEdge(String, String),

    #[error("no exact method within budget {budget}; use strategy bic")]
    NoExactMethod { budget: u64 },

    #[error("invalid constraints: {0}")]
    InvalidConstraints(String),

    #[error("too many variables for exhaustive search ({0} domain variables, max 4); use greedy mode")]
    TooManyForExhaustive(usize),

    #[error("no admissible starting structure")]
    NoAdmissibleStart,

    #[error("quota for `{state}` infeasible: {needed} requested but only {available} eligible cases")]
    QuotaInfeasible { state: String, needed: usize, available: usize },

    #[error("invalid simulation setup: {0}")]
    InvalidSimulation(String),
}
