//! Two-mode Gaussian states: squeezed-form reduction, phase extraction and
//! free center-of-mass evolution.

pub use nalgebra;
pub use num_complex;

pub mod consistency;
pub mod dynamics;
pub mod error;
pub mod exec;
pub mod measures;
pub mod oracles;
pub mod solver;
pub mod state;
pub mod transform;

pub use consistency::{run_verify, CheckKind, CheckRecord, VerifyOptions, VerifyReport};
pub use dynamics::{propagate, trajectory, trajectory_with, EvolutionSpec, TimeSeries, TrajectoryRecord};
pub use error::{Error, Result};
pub use exec::Exec;
pub use measures::{entanglement, epr_dispersion, epr_dispersion_closed, validate, Tolerances, ValidationReport};
pub use oracles::{entropy_from_covariance, moments_by_quadrature, moments_by_quadrature_with, QuadratureGrid};
pub use solver::{solve_general, SolverOptions, TransformSolution};
pub use state::{
    coeffs_from_squeezed, covariance_from_coeffs, covariance_of_squeezed, wrap_angle, ComplexCoeffs,
    CovarianceMatrix, SqueezedParams,
};
pub use transform::{
    apply_local, associated_transform, phase, phase_extraction, solve_symmetric, squeezing_strength,
    LocalSymplectic, PhaseExtraction, SymmetricTransform,
};
