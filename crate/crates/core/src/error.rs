use alloc::string::String;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} is not Hermitian: ||A - A^dagger||_F = {norm:e}")]
    NotHermitian { what: String, norm: f64 },

    #[error("{what} contains a non-finite entry")]
    NonFinite { what: String },

    #[error("Jacobi eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("state has eigenvalue {value:e} below -{tolerance:e}")]
    NegativeEigenvalue { value: f64, tolerance: f64 },

    #[error("state trace {trace} deviates from 1 by more than {tolerance:e}")]
    TraceNotOne { trace: f64, tolerance: f64 },

    #[error("function is undefined at spectral point {point}")]
    FunctionUndefined { point: f64 },

    #[error("{what} index {index} out of range (length {len})")]
    IndexOutOfRange { what: &'static str, index: usize, len: usize },

    #[error("{value} is not a spectral point of {observable}")]
    NotASpectralPoint { value: f64, observable: String },

    #[error("resource limit: {what} requires {required}, limit is {limit}")]
    ResourceLimit { what: &'static str, required: usize, limit: usize },

    #[error("observables {first} and {second} do not commute")]
    NotCommuting { first: String, second: String },

    #[error("operands refer to different catalogs")]
    CatalogMismatch,

    #[error("catalog observables {first} and {second} coincide")]
    DuplicateObservable { first: String, second: String },

    #[error("catalog must contain at least one observable")]
    EmptyCatalog,

    #[error("duplicate index {index} in {what}")]
    DuplicateIndex { what: &'static str, index: usize },

    #[error("invalid mixture: {reason}")]
    InvalidMixture { reason: String },

    #[error("observable {label} is not dichotomic (spectrum must be {{-1, +1}})")]
    NotDichotomic { label: String },

    #[error("invalid functional representation: {reason}")]
    InvalidRepresentation { reason: String },

    #[error("invalid parameter: {reason}")]
    InvalidParameter { reason: String },
}
