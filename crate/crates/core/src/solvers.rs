//! Regularization networks over S^x with squared loss:
//!
//! * ℓ¹ model: min_c ‖K[x]c − y‖₂² + λ‖c‖₁, solved by ADMM.
//! * ridge model: min_c ‖K[x]c − y‖₂² + λcᵀK[x]c, closed form (K[x] + λI)⁻¹y.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::interpolation::{CoefficientVector, RepresenterFunction};
use crate::kernels::{gram_dense, MultiTaskKernel, SampleSet};
use crate::linalg::{l1_norm, nnz, Factorization};

/// Iterations between objective trace records.
pub const TRACE_INTERVAL: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdmmParams {
    pub rho: f64,
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    /// Residual-balancing ρ updates (off by default).
    pub adaptive_rho: bool,
}

impl Default for AdmmParams {
    fn default() -> Self {
        Self {
            rho: 1.0,
            max_iters: 10_000,
            eps_abs: 1e-6,
            eps_rel: 1e-4,
            adaptive_rho: false,
        }
    }
}

impl AdmmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho.is_finite()) {
            return Err(Error::InvalidParameter(format!("rho must be positive, got {}", self.rho)));
        }
        if !(self.eps_abs > 0.0 && self.eps_rel > 0.0) {
            return Err(Error::InvalidParameter("ADMM tolerances must be positive".into()));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        Ok(())
    }
}

/// Soft thresholding sign(v)·max(|v| − κ, 0), entrywise.
pub fn soft_threshold(v: &[f64], kappa: f64) -> Vec<f64> {
    v.iter().map(|&x| shrink(x, kappa)).collect()
}

#[inline]
fn shrink(x: f64, kappa: f64) -> f64 {
    if x > kappa {
        x - kappa
    } else if x < -kappa {
        x + kappa
    } else {
        0.0
    }
}

/// ‖Ac − y‖₂² + λ‖c‖₁.
pub fn l1_objective(a: &DMatrix<f64>, c: &[f64], y: &[f64], lambda: f64) -> f64 {
    let r = a * DVector::from_column_slice(c) - DVector::from_column_slice(y);
    r.norm_squared() + lambda * l1_norm(c)
}

/// ‖Kc − y‖₂² + λcᵀKc.
pub fn ridge_objective(k: &DMatrix<f64>, c: &[f64], y: &[f64], lambda: f64) -> f64 {
    let cv = DVector::from_column_slice(c);
    let kc = k * &cv;
    (&kc - DVector::from_column_slice(y)).norm_squared() + lambda * cv.dot(&kc)
}

/// Raw ADMM iterate for a general ℓ¹-penalized least squares problem.
#[derive(Clone, Debug)]
pub struct AdmmOutcome {
    pub z: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// (iteration, objective at z) every [`TRACE_INTERVAL`] iterations.
    pub trace: Vec<(usize, f64)>,
    pub final_rho: f64,
}

/// ADMM for min ‖Ac − y‖₂² + λ‖z‖₁ s.t. c = z, scaled dual u.
pub fn admm_lasso(
    a: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    params: &AdmmParams,
) -> Result<AdmmOutcome> {
    params.validate()?;
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if a.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            context: "ADMM targets",
            expected: a.nrows(),
            found: y.len(),
        });
    }
    let n = a.ncols();
    let yv = DVector::from_column_slice(y);
    let gram2 = a.tr_mul(a) * 2.0;
    let aty2 = a.tr_mul(&yv) * 2.0;
    let sqrt_n = (n as f64).sqrt();

    let mut rho = params.rho;
    let mut chol = factor_shifted(&gram2, rho)?;
    let mut z = DVector::<f64>::zeros(n);
    let mut u = DVector::<f64>::zeros(n);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=params.max_iters {
        iterations = it;
        let mut c = &aty2 + (&z - &u) * rho;
        chol.solve_mut(&mut c);

        let z_prev = std::mem::replace(&mut z, (&c + &u).map(|v| shrink(v, lambda / rho)));
        u += &c - &z;

        let primal = (&c - &z).norm();
        let dual = rho * (&z - &z_prev).norm();
        let eps_pri = sqrt_n * params.eps_abs + params.eps_rel * c.norm().max(z.norm());
        let eps_dual = sqrt_n * params.eps_abs + params.eps_rel * rho * u.norm();

        if it % TRACE_INTERVAL == 0 {
            trace.push((it, l1_objective(a, z.as_slice(), y, lambda)));
        }
        if primal <= eps_pri && dual <= eps_dual {
            converged = true;
            break;
        }
        if params.adaptive_rho && it % 10 == 0 {
            let new_rho = if primal > 10.0 * dual {
                rho * 2.0
            } else if dual > 10.0 * primal {
                rho / 2.0
            } else {
                rho
            };
            if new_rho != rho {
                u *= rho / new_rho;
                rho = new_rho;
                chol = factor_shifted(&gram2, rho)?;
            }
        }
    }
    Ok(AdmmOutcome {
        z: z.as_slice().to_vec(),
        iterations,
        converged,
        trace,
        final_rho: rho,
    })
}

fn factor_shifted(gram2: &DMatrix<f64>, rho: f64) -> Result<Cholesky<f64, Dyn>> {
    let mut m = gram2.clone();
    for i in 0..m.nrows() {
        m[(i, i)] += rho;
    }
    Cholesky::new(m).ok_or(Error::Singular("ADMM system 2AᵀA + ρI"))
}

#[derive(Clone, Debug)]
pub struct FitResult {
    pub model: RepresenterFunction,
    pub lambda: f64,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Number of nonzero coefficients.
    pub sparsity: usize,
    pub trace: Vec<(usize, f64)>,
}

fn check_targets(x: &SampleSet, kernel: &MultiTaskKernel, y: &[f64]) -> Result<()> {
    let md = x.len() * kernel.outputs();
    if y.len() != md {
        return Err(Error::DimensionMismatch {
            context: "target vector length (m*d)",
            expected: md,
            found: y.len(),
        });
    }
    Ok(())
}

/// ℓ¹ regularization network. Coefficients are the exactly sparse z iterate;
/// running out of iterations is reported through `converged`.
pub fn fit_l1(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    y: &[f64],
    lambda: f64,
    params: &AdmmParams,
) -> Result<FitResult> {
    check_targets(x, kernel, y)?;
    let k = gram_dense(kernel, x)?;
    fit_l1_dense(kernel, x, &k, y, lambda, params)
}

/// As [`fit_l1`] with a precomputed dense K[x].
pub fn fit_l1_dense(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    k: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
    params: &AdmmParams,
) -> Result<FitResult> {
    check_targets(x, kernel, y)?;
    let out = admm_lasso(k, y, lambda, params)?;
    let objective = l1_objective(k, &out.z, y, lambda);
    let sparsity = nnz(&out.z);
    let coefficients = CoefficientVector::new(out.z, kernel.outputs())?;
    Ok(FitResult {
        model: RepresenterFunction::new(kernel.clone(), x.clone(), coefficients)?,
        lambda,
        objective,
        iterations: out.iterations,
        converged: out.converged,
        sparsity,
        trace: out.trace,
    })
}

/// Kernel ridge regression h = (K[x] + λI)⁻¹y.
pub fn fit_ridge(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    y: &[f64],
    lambda: f64,
) -> Result<FitResult> {
    check_targets(x, kernel, y)?;
    let k = gram_dense(kernel, x)?;
    fit_ridge_dense(kernel, x, &k, y, lambda)
}

pub fn fit_ridge_dense(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    k: &DMatrix<f64>,
    y: &[f64],
    lambda: f64,
) -> Result<FitResult> {
    check_targets(x, kernel, y)?;
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be nonnegative, got {lambda}")));
    }
    let mut shifted = k.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += lambda;
    }
    let lu = Factorization::new(&shifted)?;
    let h = lu.solve_vec(&DVector::from_column_slice(y))?;
    let h = h.as_slice().to_vec();
    let objective = ridge_objective(k, &h, y, lambda);
    let sparsity = nnz(&h);
    Ok(FitResult {
        model: RepresenterFunction::new(
            kernel.clone(),
            x.clone(),
            CoefficientVector::new(h, kernel.outputs())?,
        )?,
        lambda,
        objective,
        iterations: 1,
        converged: true,
        sparsity,
        trace: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Regression,
    Classification,
}

impl FromStr for Task {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "regression" => Ok(Self::Regression),
            "classification" => Ok(Self::Classification),
            _ => Err(Error::Config(format!("unknown task `{s}`"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Regression => "regression",
            Self::Classification => "classification",
        })
    }
}

/// One misclassified test point, numbered from 1.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Misclassification {
    pub number: usize,
    pub true_label: String,
    pub predicted_label: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct MetricRecord {
    pub task: Task,
    pub points: usize,
    pub mse: f64,
    pub accuracy: Option<f64>,
    pub sparsity: usize,
    pub misclassified: Vec<Misclassification>,
}

/// Index of the largest entry, lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// MSE, and for classification the argmax accuracy and misclassification
/// listing. `class_names` labels the output coordinates; indices are used
/// when it is `None`.
pub fn metrics(
    model: &RepresenterFunction,
    test_x: &[Vec<f64>],
    test_y: &[f64],
    task: Task,
    class_names: Option<&[String]>,
) -> Result<MetricRecord> {
    let pred = model.evaluate_many(test_x)?;
    metrics_from_predictions(&pred, test_y, model.kernel.outputs(), task, class_names)
        .map(|mut r| {
            r.sparsity = model.coefficients.nnz();
            r
        })
}

pub fn metrics_from_predictions(
    pred: &[f64],
    test_y: &[f64],
    d: usize,
    task: Task,
    class_names: Option<&[String]>,
) -> Result<MetricRecord> {
    if pred.len() != test_y.len() {
        return Err(Error::DimensionMismatch {
            context: "test targets",
            expected: pred.len(),
            found: test_y.len(),
        });
    }
    if pred.is_empty() {
        return Err(Error::Empty("test set"));
    }
    let points = pred.len() / d;
    let mse = pred
        .iter()
        .zip(test_y)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / pred.len() as f64;
    let (accuracy, misclassified) = match task {
        Task::Regression => (None, Vec::new()),
        Task::Classification => {
            let name = |i: usize| match class_names {
                Some(n) if i < n.len() => n[i].clone(),
                _ => i.to_string(),
            };
            let mut wrong = Vec::new();
            for (j, (p, t)) in pred.chunks(d).zip(test_y.chunks(d)).enumerate() {
                let (pi, ti) = (argmax(p), argmax(t));
                if pi != ti {
                    wrong.push(Misclassification {
                        number: j + 1,
                        true_label: name(ti),
                        predicted_label: name(pi),
                    });
                }
            }
            (Some(1.0 - wrong.len() as f64 / points as f64), wrong)
        }
    };
    Ok(MetricRecord {
        task,
        points,
        mse,
        accuracy,
        sparsity: 0,
        misclassified,
    })
}
