//! Truncated Fock-space simulation of heralded photon replacement, addition
//! and subtraction cascades acting on two-mode squeezed vacuum.
//!
//! States stay in Schmidt-diagonal form `sum_n c_n |n + a, n + b>` throughout,
//! so every heralded step is a diagonal multiplication plus an index shift.

pub mod closedform;
pub mod error;
pub mod fock_core;
pub mod measures;
pub mod protocols;
pub mod sweep;
pub mod validation;

pub use error::{Error, Result};
pub use fock_core::{
    apply_operator, bs_coefficient, build_heralded_operator, pr_coefficient, tmsv, BeamSplitter,
    DiagonalShiftOperator, Herald, Mode, SchmidtDiagonalState, TmsvParams, TruncationPolicy,
};
pub use measures::{
    covariance, entanglement_rate, log_negativity, log_negativity_tmsv, non_gaussianity,
    symplectic_eigenvalues, CovarianceMatrix, MeasureRecord,
};
pub use protocols::{
    asymmetric_arrangement, cascade, cascade_on_tmsv, cpr_coefficients, symmetric_arrangement,
    Arrangement, CascadeResult, ProtocolKind, Step,
};
pub use sweep::{ArrangementMode, Evaluator, ProtocolSetup, SweepRecord, TrendPoint};
