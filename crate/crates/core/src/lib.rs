//! Sparse multi-task kernel learning with ℓ¹-norm regularization.
//!
//! The crate covers separable multi-task kernels K(x,x′) = k(x,x′)·𝔸, their
//! block Gram matrices, Lebesgue-function diagnostics for the ℓ¹ representer
//! property, minimal-norm interpolation, and two regularization networks
//! (ℓ¹ via ADMM, kernel ridge in closed form).

pub mod cli;
pub mod data;
pub mod error;
pub mod interpolation;
pub mod kernels;
pub mod lebesgue;
pub mod linalg;
pub mod solvers;

pub use error::{Error, Result};
pub use interpolation::{
    extend_interpolant, min_norm_interpolant, representer_equivalence_oracle, BlockUpdate,
    CoefficientVector, OracleResult, RepresenterFunction, ScanSpec,
};
pub use kernels::{
    assemble_gram, kernel_column, CouplingMatrix, GramMatrix, KernelColumn, MultiTaskKernel,
    SampleSet, ScalarKernel,
};
pub use lebesgue::{
    check_admissibility, lebesgue_constant, lebesgue_function, scalar_matrix_equivalence,
    AdmissibilityReport, LebesgueReport,
};
pub use solvers::{fit_l1, fit_ridge, metrics, soft_threshold, AdmmParams, FitResult, Task};
