//! File formats, run reports and the command-line front end for
//! `selbayes-core`.

pub mod cli;
pub mod error;
pub mod files;
pub mod report;
pub mod spec;
pub mod table;

pub use cli::{run, Outcome};
pub use error::{CliError, CliResult};
pub use spec::{load_network_spec, parse_network_spec, NetworkSpec};
