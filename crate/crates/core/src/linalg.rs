//! Dense factorization helpers shared by the Gram, interpolation and solver code.

use nalgebra::{DMatrix, DVector, Dyn, LU};

use crate::error::{Error, Result};

/// Induced ℓ¹ matrix norm: maximum absolute column sum.
pub fn induced_norm1(m: &DMatrix<f64>) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Sum of absolute entries.
pub fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

/// Number of entries that are not exactly zero.
pub fn nnz(v: &[f64]) -> usize {
    v.iter().filter(|x| **x != 0.0).count()
}

/// LU factorization with partial pivoting of a square matrix, kept alive for
/// repeated solves.
#[derive(Clone, Debug)]
pub struct Factorization {
    lu: LU<f64, Dyn, Dyn>,
    l: DMatrix<f64>,
    u: DMatrix<f64>,
    norm1: f64,
}

impl Factorization {
    pub fn new(a: &DMatrix<f64>) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::DimensionMismatch {
                context: "factorization (square matrix)",
                expected: a.nrows(),
                found: a.ncols(),
            });
        }
        if a.nrows() == 0 {
            return Err(Error::Empty("matrix to factorize"));
        }
        let norm1 = induced_norm1(a);
        let lu = a.clone().lu();
        let u = lu.u();
        // Reject exact or relative-underflow pivots up front, solves would
        // otherwise return garbage rather than failing.
        let scale = u.diagonal().iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        let tiny = scale * f64::EPSILON * a.nrows() as f64;
        if u.diagonal().iter().any(|p| !p.is_finite() || p.abs() <= tiny) {
            return Err(Error::Singular("zero pivot in LU factorization"));
        }
        let l = lu.l();
        Ok(Self { lu, l, u, norm1 })
    }

    pub fn dim(&self) -> usize {
        self.u.nrows()
    }

    /// ‖A‖₁ of the factorized matrix.
    pub fn norm1(&self) -> f64 {
        self.norm1
    }

    /// Smallest absolute pivot of U.
    pub fn min_pivot(&self) -> f64 {
        self.u
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |acc, v| acc.min(v.abs()))
    }

    /// det A from the pivots and the permutation parity.
    pub fn determinant(&self) -> f64 {
        self.lu.determinant()
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(b.nrows())?;
        self.lu
            .solve(b)
            .ok_or(Error::Singular("LU solve"))
    }

    pub fn solve_mat(&self, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        self.check_rows(b.nrows())?;
        self.lu
            .solve(b)
            .ok_or(Error::Singular("LU solve"))
    }

    /// Solves Aᵀx = b using PA = LU, i.e. Aᵀ = UᵀLᵀP.
    pub fn solve_transpose_vec(&self, b: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_rows(b.nrows())?;
        let w = self
            .u
            .tr_solve_upper_triangular(b)
            .ok_or(Error::Singular("transposed triangular solve"))?;
        let mut v = self
            .l
            .tr_solve_lower_triangular(&w)
            .ok_or(Error::Singular("transposed triangular solve"))?;
        self.lu.p().inv_permute_rows(&mut v);
        Ok(v)
    }

    /// Estimate of ‖A⁻¹‖₁ by Hager's method with Higham's alternating-sign
    /// safeguard. Never exceeds the true value by more than rounding.
    pub fn inverse_norm1_estimate(&self) -> Result<f64> {
        let n = self.dim();
        let mut x = DVector::from_element(n, 1.0 / n as f64);
        let mut estimate = 0.0f64;
        let mut last_j = usize::MAX;
        for _ in 0..5 {
            let y = self.solve_vec(&x)?;
            estimate = estimate.max(y.iter().map(|v| v.abs()).sum());
            let xi = y.map(|v| if v >= 0.0 { 1.0 } else { -1.0 });
            let z = self.solve_transpose_vec(&xi)?;
            let (j, zmax) = z
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |(bj, bv), (i, v)| {
                    if v.abs() > bv {
                        (i, v.abs())
                    } else {
                        (bj, bv)
                    }
                });
            if zmax <= z.dot(&x) || j == last_j {
                break;
            }
            last_j = j;
            x.fill(0.0);
            x[j] = 1.0;
        }
        let alt = DVector::from_fn(n, |i, _| {
            let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
            let ramp = if n > 1 { i as f64 / (n - 1) as f64 } else { 0.0 };
            sign * (1.0 + ramp)
        });
        let y = self.solve_vec(&alt)?;
        let alt_estimate = 2.0 * y.iter().map(|v| v.abs()).sum::<f64>() / (3.0 * n as f64);
        Ok(estimate.max(alt_estimate))
    }

    /// 1-norm condition number estimate ‖A‖₁·est(‖A⁻¹‖₁).
    pub fn condition_estimate(&self) -> Result<f64> {
        Ok(self.norm1 * self.inverse_norm1_estimate()?)
    }

    fn check_rows(&self, rows: usize) -> Result<()> {
        if rows != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "right-hand side rows",
                expected: self.dim(),
                found: rows,
            });
        }
        Ok(())
    }
}
