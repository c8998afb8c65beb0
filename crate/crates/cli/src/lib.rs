//! Scenario documents for `qhv-core`: parsing, validation, execution and
//! report rendering.

pub mod demos;
pub mod document;
pub mod error;
pub mod report;
pub mod runner;

pub use document::{parse_scenario, to_canonical_json, QuerySpec, ScenarioDocument};
pub use error::ScenarioError;
pub use report::{emit, fmt_g, Format, QueryResult, Report, Status};
pub use runner::{run, RunOptions, DEFAULT_TRIALS};

/// Environment variable overriding the atom cap of every document.
pub const ATOM_CAP_ENV: &str = "QHV_ATOM_CAP";

/// Reads the atom cap override, if set. An unparsable value is an error.
pub fn atom_cap_from_env() -> Result<Option<usize>, String> {
    match std::env::var(ATOM_CAP_ENV) {
        Ok(v) => v.trim().parse().map(Some).map_err(|_| format!("{ATOM_CAP_ENV} must be a non-negative integer, got {v:?}")),
        Err(std::env::VarError::NotPresent) => Ok(None),
        Err(e) => Err(format!("{ATOM_CAP_ENV}: {e}")),
    }
}
