//! Sparse NARMAX identification.
//!
//! Models are linear combinations of monomials in lagged outputs, inputs and
//! one-step residuals. [`solver::fit_path`] computes the whole L1
//! regularization path with cyclical coordinate descent, rebuilding
//! residual-dependent regressor columns as it goes. [`models::select_lambda`]
//! picks a path entry by free-run validation error, and [`els`] provides the
//! extended least-squares baseline.

pub mod datagen;
pub mod dictionary;
pub mod els;
pub mod error;
pub mod io;
pub mod models;
pub mod solver;

pub use dictionary::{
    build_matrix, error_term_fraction, evaluate_column, generate_polynomial_dictionary, Dictionary, Factor,
    LagBounds, RegressorMatrix, RegressorTerm, Signal, TimeSeriesData,
};
pub use els::{extended_least_squares, ols_solve, ElsConfig, ElsFit, InitialResidual};
pub use error::{NarmaxError, Result};
pub use models::{mean_absolute_error, select_lambda, EstimatedModel, OneStepPrediction, Selection};
pub use solver::{fit_path, lambda_grid, lambda_max, soft_threshold, FitOutcome, LassoPath, PathConfig, PathEntry, SolverState};
