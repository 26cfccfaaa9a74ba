//! Bayesian scoring and discovery of discrete causal networks from data
//! gathered under selection bias.
//!
//! Selection is modelled by an explicit variable `S` whose unsampled state
//! marks cases of the population of interest that never made it into the
//! dataset. The marginal likelihood of the sampled data is obtained by
//! summing complete-population marginal likelihoods over the unknown values
//! of the unsampled cases, with several exact shortcuts:
//!
//! * only ancestors of `S` need completing in unsampled cases,
//! * unsampled cases are exchangeable, so completions collapse to count
//!   vectors with multinomial weights,
//! * when `S` and its ancestors form a chain and priors are BDe, arcs can
//!   be reversed away from `S` and the score read off directly.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, reports and the
//! command-line interface live in the `selbayes` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod data;
mod engine;
pub mod error;
pub mod graph;
pub mod math;
pub mod network;
pub mod prior;
pub mod score;
pub mod search;
pub mod selection;
pub mod simulate;
pub mod transform;

#[cfg(test)]
pub(crate) mod testutil;

pub use data::{Dataset, MfPrior, PopulationSpec};
pub use error::{Error, Result};
pub use graph::{NetworkStructure, Role, VariableSpec};
pub use network::{CaseAssignment, Cpt, GeneratingNetwork};
pub use prior::{BdeSpec, FamilyPrior, FamilyTable, PriorModel, SelectionPriorSpec};
pub use score::{LogScore, Method, SufficientCounts};
pub use selection::{EnumerationBudget, SelectionProblem, Strategy};

/// Default cap on the number of joint states visited by exact enumeration
/// over a generating network.
pub const DEFAULT_JOINT_CAP: u64 = 1 << 22;

/// Default cap on the number of summation terms for a selection-aware score.
pub const DEFAULT_BUDGET: u64 = 1 << 20;
