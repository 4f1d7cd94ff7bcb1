//! Lebesgue function t ↦ ‖K[x]⁻¹K_x(t)‖₁, grid estimates of the Lebesgue
//! constant, and admissibility diagnostics.
//!
//! The supremum over the input space is approximated by a finite grid, so a
//! reported `sup_value` is a lower bound on the true Lebesgue constant.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{
    assemble_gram, kernel_column, CouplingMatrix, GramMatrix, KernelColumn, MultiTaskKernel,
    SampleSet, ScalarKernel, A3_NOTE,
};
use crate::linalg::induced_norm1;

/// Absolute slack for `sup_value <= 1`.
pub const STRICT_TOLERANCE: f64 = 1e-9;

/// Pointwise agreement required by [`scalar_matrix_equivalence`].
pub const TRANSFER_TOLERANCE: f64 = 1e-9;

const GRID_NOTE: &str = "sup_value is the maximum over a finite grid and is a lower bound on the \
supremum over the whole input space";

/// K[x]⁻¹K_x(t), an md×d matrix.
pub fn lebesgue_solution(gram: &GramMatrix, col: &KernelColumn) -> Result<DMatrix<f64>> {
    if col.dense.nrows() != gram.size() || col.dense.ncols() != gram.outputs() {
        return Err(Error::DimensionMismatch {
            context: "kernel column rows",
            expected: gram.size(),
            found: col.dense.nrows(),
        });
    }
    gram.factorization().solve_mat(&col.dense)
}

/// ‖K[x]⁻¹K_x(t)‖₁ with the induced ℓ¹ norm.
pub fn lebesgue_function(gram: &GramMatrix, col: &KernelColumn) -> Result<f64> {
    Ok(induced_norm1(&lebesgue_solution(gram, col)?))
}

#[derive(Clone, Debug, Serialize)]
pub struct LebesgueReport {
    pub samples: SampleSet,
    pub grid: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    pub sup_value: f64,
    /// Grid index attaining `sup_value`.
    pub argmax: usize,
    /// Empirical relaxation constant max(1, sup_value).
    pub beta_m: f64,
    pub satisfies_strict: bool,
    pub sup_is_lower_bound: bool,
    pub note: &'static str,
}

/// Evaluates the Lebesgue function over `grid` and summarizes it.
pub fn lebesgue_constant(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    grid: &[Vec<f64>],
) -> Result<LebesgueReport> {
    if grid.is_empty() {
        return Err(Error::Empty("evaluation grid"));
    }
    let gram = assemble_gram(kernel, x)?;
    let values = grid_values(kernel, x, &gram, grid)?;
    let (argmax, sup_value) = values
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, v)| if v > bv { (i, v) } else { (bi, bv) });
    Ok(LebesgueReport {
        samples: x.clone(),
        grid: grid.to_vec(),
        values,
        sup_value,
        argmax,
        beta_m: sup_value.max(1.0),
        satisfies_strict: sup_value <= 1.0 + STRICT_TOLERANCE,
        sup_is_lower_bound: true,
        note: GRID_NOTE,
    })
}

fn grid_values(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    gram: &GramMatrix,
    grid: &[Vec<f64>],
) -> Result<Vec<f64>> {
    grid.par_iter()
        .map(|t| lebesgue_function(gram, &kernel_column(kernel, x, t)?))
        .collect()
}

/// Checks that the Lebesgue values of k·𝔸 and of k agree pointwise on `grid`.
pub fn scalar_matrix_equivalence(
    scalar: &ScalarKernel,
    coupling: &CouplingMatrix,
    x: &SampleSet,
    grid: &[Vec<f64>],
) -> Result<bool> {
    Ok(scalar_matrix_deviation(scalar, coupling, x, grid)? <= TRANSFER_TOLERANCE)
}

/// Largest pointwise gap between the scalar and matrix-valued Lebesgue values.
pub fn scalar_matrix_deviation(
    scalar: &ScalarKernel,
    coupling: &CouplingMatrix,
    x: &SampleSet,
    grid: &[Vec<f64>],
) -> Result<f64> {
    let single = MultiTaskKernel::single_task(*scalar);
    let multi = MultiTaskKernel::new(*scalar, coupling.clone());
    let gs = assemble_gram(&single, x)?;
    let gm = assemble_gram(&multi, x)?;
    let vs = grid_values(&single, x, &gs, grid)?;
    let vm = grid_values(&multi, x, &gm, grid)?;
    Ok(vs
        .iter()
        .zip(&vm)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, Serialize)]
pub struct ConfigurationCheck {
    pub a1_ok: bool,
    pub condition_estimate: Option<f64>,
    pub reason: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AdmissibilityReport {
    /// Non-singularity per configuration, in input order.
    pub a1_ok: Vec<bool>,
    pub a1_details: Vec<ConfigurationCheck>,
    /// max over grid pairs of ‖K(x,x′)‖₁.
    pub a2_bound: f64,
    pub a3_note: &'static str,
}

/// Records A1 per configuration and estimates the A2 bound over `grid`.
/// Failures are recorded in the report rather than returned.
pub fn check_admissibility(
    kernel: &MultiTaskKernel,
    configurations: &[Vec<Vec<f64>>],
    grid: &[Vec<f64>],
) -> AdmissibilityReport {
    let a1_details: Vec<ConfigurationCheck> = configurations
        .iter()
        .map(|pts| match SampleSet::new(pts.clone()).and_then(|x| assemble_gram(kernel, &x)) {
            Ok(g) => ConfigurationCheck {
                a1_ok: true,
                condition_estimate: Some(g.condition_estimate()),
                reason: None,
            },
            Err(e) => ConfigurationCheck {
                a1_ok: false,
                condition_estimate: None,
                reason: Some(e.to_string()),
            },
        })
        .collect();
    let a_norm = kernel.coupling.norm1();
    let mut a2_bound: f64 = 0.0;
    for (i, s) in grid.iter().enumerate() {
        for t in &grid[i..] {
            if let Ok(k) = kernel.scalar.eval(s, t) {
                a2_bound = a2_bound.max(k.abs() * a_norm);
            }
        }
    }
    AdmissibilityReport {
        a1_ok: a1_details.iter().map(|c| c.a1_ok).collect(),
        a1_details,
        a2_bound,
        a3_note: A3_NOTE,
    }
}
