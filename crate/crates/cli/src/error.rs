use thiserror::Error;

/// Why a scenario document was rejected.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("{entity}: {message}")]
    Semantic { entity: String, message: String },
}
