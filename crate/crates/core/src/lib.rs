//! Quasi hidden variable (qHV) machinery for finite-dimensional quantum systems.
//!
//! The crate builds, for a finite catalog of Hermitian observables, the
//! symmetrized spectral-product measures, the operator-valued measure they
//! induce on the outcome lattice `Λ = sp X₁ × ⋯ × sp X_K`, and the signed
//! (quasi-)probability measures obtained by tracing that measure against a
//! density state. On top of that it offers verification routines for the
//! statistically noncontextual, context-invariant and local qHV representations.
//!
//! Module map:
//!
//! * [`linalg`]: dense complex matrices and a Jacobi Hermitian eigensolver.
//! * [`spectral`]: spectral decompositions, density states, functional calculus.
//! * [`symmetrized`]: the symmetrized product measures and their consistency.
//! * [`extension`]: the global operator-valued measure and induced signed measures.
//! * [`models`]: random variables on the atom lattice, noncontextual and
//!   context-invariant representations.
//! * [`multipartite`]: tensor-lifted scenarios, local qHV checks, CHSH and Werner scans.
//!
//! The crate is `no_std` and only needs `alloc`.
#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod error;
pub mod extension;
pub mod linalg;
pub mod models;
pub mod multipartite;
pub mod random;
pub mod report;
pub mod spectral;
pub mod subsets;
pub mod symmetrized;

pub use error::{Error, Result};
pub use extension::{
    build_global_measure, induce_signed_measure, measure_of_cylinder, mixture_measure,
    negativity_diagnostics, product_expectation_via_measure, verify_pushforward, AtomSet, Catalog,
    CylinderSet, NegativityDiagnostics, OperatorValuedMeasure, OutcomeAtom, SignedMeasure,
};
pub use linalg::{CMatrix, C64};
pub use models::{
    canonical_rv, compose_rv, find_functional_representations, qhv_average, rv_cylinder,
    rv_preimage, verify_context_invariance, verify_ks_average_relations,
    verify_noncontextual_joint, verify_representative_reconstruction, FunctionalRepresentation,
    KsCase, RandomVariable,
};
pub use multipartite::{
    build_scenario_catalog, chsh_value, verify_lqhv, werner_scan, werner_state, ChshSettings,
    ChshValue, LocalResponse, PartiteScenario, ScenarioCatalog, WernerRow,
};
pub use report::{CheckReport, Sampling};
pub use spectral::{
    apply_function, commute_check, eigendecompose, expectation, tensor_embed, validate_state,
    DensityState, HermitianObservable, SpectralPoint, SpectrumFunction, Tolerances,
};
pub use symmetrized::{
    joint_probability_commuting, product_measure_on_rectangle, sym_product,
    verify_marginal_consistency, verify_permutation_invariance, ProjectorSelection, Side,
};
