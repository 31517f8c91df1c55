//! Numerical laboratory for decoherence-free (DF) and
//! completely-decoherence-free (CDF) subspaces of collectively damped
//! qubit arrays.
//!
//! An array of N qubits coupled to a common Markovian bath evolves under
//!
//!   ρ̇ = −i[H, ρ] + κ (S_- ρ S_+ − ½{S_+ S_-, ρ}),
//!
//! with the collective lowering operator S_- = Σ_i S^i_- as the single
//! decay channel and the exchange Hamiltonian H = Σ_ij Δ_ij S^i_+ S^j_-
//! induced by the same coupling. States annihilated by S_- feel no decay
//! instantaneously, but H moves them; only states inside an H-invariant
//! subspace of ker S_- stay protected forever. This crate builds the
//! operators, computes those subspaces several independent ways, decides
//! existence through a polynomial resultant certificate, integrates the
//! master equation to measure fidelity decay, and samples coupling-matrix
//! ensembles to show how rare exact protection is.
//!
//! Modules:
//!
//! * [`operators`] — site and collective spin operators, the exchange
//!   Hamiltonian, excitation-number sectors.
//! * [`model`] — the [`model::LindbladModel`] bundle of (N, Δ, κ) and
//!   derived operators.
//! * [`subspace`] — DF kernels, maximal invariant (CDF) subspaces by two
//!   algorithms, robust subspaces of a given short-time order, degeneracy
//!   witness, control-compatibility checks.
//! * [`resultant`](mod@resultant) — the f/g polynomial pair and the
//!   resultant-based existence certificate in the single-excitation
//!   sector.
//! * [`dynamics`] — dense superoperator, matrix-exponential and adaptive
//!   ODE evolution, fidelity traces, perturbative-regime experiments.
//! * [`sampling`] — seeded coupling-matrix ensembles and rarity studies.
//! * [`io`] — coupling-matrix JSON, the state mini-language, report
//!   schemas.
//!
//! Every operation is a pure function of immutable inputs; there is no
//! shared mutable state, so independent sectors, trajectories or samples
//! may be evaluated concurrently by the caller.

pub mod dynamics;
pub mod error;
pub mod io;
pub mod linalg;
pub mod model;
pub mod operators;
pub mod resultant;
pub mod sampling;
pub mod subspace;
pub mod tol;

pub use dynamics::{
    dissipator, evolve, fidelity_trace, regime_experiment, robustness_order_check, superoperator,
    DensityMatrix, EvolveBackend, FidelityTrace, Regime, RegimeKind,
};
pub use error::{Error, Result};
pub use linalg::{CMatrix, CVector, C64};
pub use model::LindbladModel;
pub use operators::{
    collective_operators, hamiltonian, restrict, site_operator, weight_sector, Axis, DeltaMatrix,
    QubitCount, WeightSector, DEFAULT_N_MAX,
};
pub use resultant::{build_fg, cdfs_exists_v1, resultant, Decision, Polynomial, ResultantReport};
pub use sampling::{rarity_study, sample_delta, Detector, EnsembleKind, EnsembleSpec, RarityReport};
pub use subspace::{
    cdfs_commutator, cdfs_invariant, degeneracy_witness, dfs_basis, robust_subspace,
    verify_control_compatibility, DegeneracyReport, Subspace,
};
pub use tol::Tolerances;
