//! Minimal-norm interpolation in the span S^x = {Σ_j K(x_j,·)c_j}.
//!
//! The interpolant in S^x is unique with c = K[x]⁻¹y, and its B_K norm is the
//! blockwise ℓ¹ norm of c. Adding a point is handled by the 2×2 block inverse
//! with Schur complement p = K(x̃,x̃) − K^x(x̃)K[x]⁻¹K_x(x̃).

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernels::{
    assemble_gram, gram_dense, kernel_column, GramMatrix, MultiTaskKernel, SampleSet,
};
use crate::linalg::{l1_norm, nnz, Factorization};

/// Blocked coefficient vector in ℝ^{md}, point-major.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CoefficientVector {
    values: Vec<f64>,
    outputs: usize,
}

impl CoefficientVector {
    pub fn new(values: Vec<f64>, outputs: usize) -> Result<Self> {
        if outputs == 0 || values.len() % outputs != 0 {
            return Err(Error::DimensionMismatch {
                context: "coefficient blocks",
                expected: outputs,
                found: values.len(),
            });
        }
        Ok(Self { values, outputs })
    }

    pub fn zeros(points: usize, outputs: usize) -> Self {
        Self {
            values: vec![0.0; points * outputs],
            outputs,
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn blocks(&self) -> std::slice::Chunks<'_, f64> {
        self.values.chunks(self.outputs)
    }

    /// Σ_j ‖c_j‖₁, the B_K norm of the represented function.
    pub fn bk_norm(&self) -> f64 {
        l1_norm(&self.values)
    }

    pub fn nnz(&self) -> usize {
        nnz(&self.values)
    }
}

/// f = Σ_j K(x_j,·)c_j.
#[derive(Clone, Debug)]
pub struct RepresenterFunction {
    pub kernel: MultiTaskKernel,
    pub samples: SampleSet,
    pub coefficients: CoefficientVector,
}

impl RepresenterFunction {
    pub fn new(
        kernel: MultiTaskKernel,
        samples: SampleSet,
        coefficients: CoefficientVector,
    ) -> Result<Self> {
        let d = kernel.outputs();
        if coefficients.outputs() != d || coefficients.values().len() != samples.len() * d {
            return Err(Error::DimensionMismatch {
                context: "representer coefficients",
                expected: samples.len() * d,
                found: coefficients.values().len(),
            });
        }
        Ok(Self {
            kernel,
            samples,
            coefficients,
        })
    }

    /// f(t) = Σ_j k(x_j,t)·𝔸c_j.
    pub fn evaluate(&self, t: &[f64]) -> Result<Vec<f64>> {
        if t.len() != self.samples.dim() {
            return Err(Error::DimensionMismatch {
                context: "evaluation point dimension",
                expected: self.samples.dim(),
                found: t.len(),
            });
        }
        self.kernel.scalar.check_domain(t)?;
        let d = self.kernel.outputs();
        let mut acc = DVector::zeros(d);
        for (p, c) in self.samples.points().iter().zip(self.coefficients.blocks()) {
            let k = self.kernel.scalar.eval(p, t)?;
            if k != 0.0 {
                acc += DVector::from_column_slice(c) * k;
            }
        }
        Ok((self.kernel.coupling.matrix() * acc).as_slice().to_vec())
    }

    /// Evaluates at every point, concatenated point-major.
    pub fn evaluate_many(&self, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(points.len() * self.kernel.outputs());
        for t in points {
            out.extend(self.evaluate(t)?);
        }
        Ok(out)
    }
}

fn check_len(y: &[f64], gram: &GramMatrix) -> Result<()> {
    if y.len() != gram.size() {
        return Err(Error::DimensionMismatch {
            context: "target vector length (m*d)",
            expected: gram.size(),
            found: y.len(),
        });
    }
    Ok(())
}

/// The unique interpolant in S^x, c = K[x]⁻¹y.
pub fn min_norm_interpolant(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    y: &[f64],
) -> Result<RepresenterFunction> {
    let gram = assemble_gram(kernel, x)?;
    interpolant_from_gram(kernel, x, &gram, y)
}

pub fn interpolant_from_gram(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    gram: &GramMatrix,
    y: &[f64],
) -> Result<RepresenterFunction> {
    check_len(y, gram)?;
    let c = gram
        .factorization()
        .solve_vec(&DVector::from_column_slice(y))?;
    RepresenterFunction::new(
        kernel.clone(),
        x.clone(),
        CoefficientVector::new(c.as_slice().to_vec(), kernel.outputs())?,
    )
}

/// Result of adding one interpolation point through the block inverse.
#[derive(Clone, Debug)]
pub struct BlockUpdate {
    /// Schur complement, d×d.
    pub p: DMatrix<f64>,
    /// K^x(x̃)K[x]⁻¹y − b.
    pub q: Vec<f64>,
    /// (K[x]⁻¹y + K[x]⁻¹K_x(x̃)p⁻¹q, −p⁻¹q), length (m+1)d.
    pub extended_solution: CoefficientVector,
}

/// Coefficients of the interpolant of (x, y) ∪ (x_new, b) from the factorized
/// K[x] and a d×d solve with the Schur complement.
pub fn extend_interpolant(
    kernel: &MultiTaskKernel,
    gram: &GramMatrix,
    x: &SampleSet,
    y: &[f64],
    x_new: &[f64],
    b: &[f64],
) -> Result<BlockUpdate> {
    check_len(y, gram)?;
    let d = kernel.outputs();
    if gram.outputs() != d || gram.points() != x.len() {
        return Err(Error::DimensionMismatch {
            context: "gram matrix vs sample set",
            expected: x.len() * d,
            found: gram.size(),
        });
    }
    if b.len() != d {
        return Err(Error::DimensionMismatch {
            context: "new value b",
            expected: d,
            found: b.len(),
        });
    }
    if let Some(j) = x.contains(x_new) {
        return Err(Error::DuplicatePoints {
            first: j,
            second: x.len(),
            distance: 0.0,
        });
    }
    let col = kernel_column(kernel, x, x_new)?.dense;
    let lu = gram.factorization();
    let c0 = lu.solve_vec(&DVector::from_column_slice(y))?;
    let w = lu.solve_mat(&col)?;
    let p = kernel.eval(x_new, x_new)? - col.transpose() * &w;
    let q = col.transpose() * &c0 - DVector::from_column_slice(b);
    let p_lu = Factorization::new(&p).map_err(|_| Error::Singular("Schur complement p"))?;
    let s = p_lu.solve_vec(&q)?;
    let head = c0 + &w * &s;
    let mut ext = head.as_slice().to_vec();
    ext.extend(s.iter().map(|v| -v));
    Ok(BlockUpdate {
        p,
        q: q.as_slice().to_vec(),
        extended_solution: CoefficientVector::new(ext, d)?,
    })
}

/// Grid for scanning the new value b in [`representer_equivalence_oracle`].
#[derive(Clone, Copy, Debug)]
pub struct ScanSpec {
    /// Half-width of the scanned box per coordinate; `None` uses
    /// 3·max|K[x]⁻¹y|.
    pub half_width: Option<f64>,
    pub step: f64,
    /// Upper bound on scanned b vectors.
    pub max_points: usize,
}

impl ScanSpec {
    pub fn for_outputs(d: usize) -> Self {
        let step = match d {
            1 => 1e-3,
            2 => 2e-2,
            _ => 1e-1,
        };
        Self {
            half_width: None,
            step,
            max_points: 4_000_000,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleResult {
    /// min over scanned b of ‖K[x̃]⁻¹(y, b)‖₁.
    pub min_extended: f64,
    /// ‖K[x]⁻¹y‖₁.
    pub min_restricted: f64,
    pub best_b: Vec<f64>,
    pub scanned: usize,
}

/// Brute-force comparison of the minimal B_K norm over S^x and S^{x ∪ {x_new}}
/// among interpolants of (x, y). Solves each scanned extended system directly
/// with a factorization of the full (m+1)d Gram matrix.
pub fn representer_equivalence_oracle(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    y: &[f64],
    x_new: &[f64],
    scan: ScanSpec,
) -> Result<OracleResult> {
    let d = kernel.outputs();
    let md = x.len() * d;
    if md > 12 {
        return Err(Error::InvalidParameter(format!(
            "oracle is limited to m*d <= 12, got {md}"
        )));
    }
    if !(scan.step > 0.0) {
        return Err(Error::InvalidParameter("scan step must be positive".into()));
    }
    let restricted = min_norm_interpolant(kernel, x, y)?;
    let min_restricted = restricted.coefficients.bk_norm();

    let xt = x.extended(x_new)?;
    let ext_lu = Factorization::new(&gram_dense(kernel, &xt)?)?;

    let half = scan.half_width.unwrap_or_else(|| {
        3.0 * restricted
            .coefficients
            .values()
            .iter()
            .fold(0.0f64, |a, v| a.max(v.abs()))
    });
    let per_dim = (2.0 * half / scan.step).floor() as usize + 1;
    let total = per_dim
        .checked_pow(d as u32)
        .filter(|t| *t <= scan.max_points)
        .ok_or_else(|| {
            Error::InvalidParameter(format!(
                "scan of {per_dim}^{d} points exceeds the limit of {}",
                scan.max_points
            ))
        })?;

    let mut rhs = DVector::zeros(md + d);
    rhs.rows_mut(0, md).copy_from_slice(y);
    let mut best = (f64::INFINITY, vec![0.0; d]);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        let b: Vec<f64> = idx.iter().map(|&i| -half + i as f64 * scan.step).collect();
        rhs.rows_mut(md, d).copy_from_slice(&b);
        let c = ext_lu.solve_vec(&rhs)?;
        let norm = l1_norm(c.as_slice());
        if norm < best.0 {
            best = (norm, b);
        }
        for slot in idx.iter_mut() {
            *slot += 1;
            if *slot < per_dim {
                break;
            }
            *slot = 0;
        }
    }
    Ok(OracleResult {
        min_extended: best.0,
        min_restricted,
        best_b: best.1,
        scanned: total,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{CouplingMatrix, ScalarKernel};

    fn bm() -> MultiTaskKernel {
        MultiTaskKernel::single_task(ScalarKernel::BrownianMotion)
    }

    #[test]
    fn single_point_interpolant() {
        let x = SampleSet::from_scalars(&[0.5]).unwrap();
        let f = min_norm_interpolant(&bm(), &x, &[1.0]).unwrap();
        assert!((f.coefficients.values()[0] - 2.0).abs() < 1e-15);
        assert!((f.evaluate(&[0.5]).unwrap()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn two_point_interpolant() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        let f = min_norm_interpolant(&bm(), &x, &[0.2, 0.5]).unwrap();
        let c = f.coefficients.values();
        assert!(c[0].abs() < 1e-14 && (c[1] - 1.0).abs() < 1e-14);
        assert!((f.evaluate(&[0.35]).unwrap()[0] - 0.35).abs() < 1e-14);
    }

    #[test]
    fn zero_data_gives_zero() {
        let k = MultiTaskKernel::new(
            ScalarKernel::exponential(1.0).unwrap(),
            CouplingMatrix::identity(2).unwrap(),
        );
        let x = SampleSet::new(vec![vec![0.0], vec![1.0]]).unwrap();
        let f = min_norm_interpolant(&k, &x, &[0.0; 4]).unwrap();
        assert_eq!(f.coefficients.bk_norm(), 0.0);
        assert_eq!(f.evaluate(&[0.3]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn wrong_target_length() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        assert!(matches!(
            min_norm_interpolant(&bm(), &x, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn consistent_extension_adds_nothing() {
        let x = SampleSet::from_scalars(&[0.2, 0.5, 0.8]).unwrap();
        let y = [0.3, -1.0, 0.4];
        let gram = assemble_gram(&bm(), &x).unwrap();
        let f = interpolant_from_gram(&bm(), &x, &gram, &y).unwrap();
        let b = f.evaluate(&[0.6]).unwrap();
        let u = extend_interpolant(&bm(), &gram, &x, &y, &[0.6], &b).unwrap();
        assert!(u.q[0].abs() < 1e-14);
        let e = u.extended_solution.values();
        for (a, c) in e.iter().zip(f.coefficients.values()) {
            assert!((a - c).abs() < 1e-12);
        }
        assert!(e[3].abs() < 1e-12);
    }

    #[test]
    fn extension_at_sample_point_is_rejected() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        let gram = assemble_gram(&bm(), &x).unwrap();
        assert!(matches!(
            extend_interpolant(&bm(), &gram, &x, &[1.0, 1.0], &[0.5], &[0.0]),
            Err(Error::DuplicatePoints { .. })
        ));
    }

    #[test]
    fn necessity_construction_gives_unit_block() {
        let a = CouplingMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap();
        let k = MultiTaskKernel::new(ScalarKernel::gaussian(1.0).unwrap(), a);
        let x = SampleSet::from_scalars(&[0.0, 0.5]).unwrap();
        let gram = assemble_gram(&k, &x).unwrap();
        let t = [1.0];
        let col = kernel_column(&k, &x, &t).unwrap().dense;
        for j in 0..2 {
            let y: Vec<f64> = col.column(j).iter().copied().collect();
            let c0 = gram.factorization().solve_vec(&DVector::from_column_slice(&y)).unwrap();
            let w = gram.factorization().solve_mat(&col).unwrap();
            let p = k.eval(&t, &t).unwrap() - col.transpose() * &w;
            let b = col.transpose() * c0 + p.column(j);
            let u = extend_interpolant(&k, &gram, &x, &y, &t, b.as_slice()).unwrap();
            let e = u.extended_solution.values();
            assert!(e[..4].iter().all(|v| v.abs() < 1e-10), "{e:?}");
            assert!((e[4 + j] - 1.0).abs() < 1e-10 && e[4 + 1 - j].abs() < 1e-10);
            assert!((u.extended_solution.bk_norm() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn oracle_zero_data() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        let r = representer_equivalence_oracle(&bm(), &x, &[0.0, 0.0], &[0.35], ScanSpec::for_outputs(1)).unwrap();
        assert_eq!(r.min_extended, 0.0);
        assert_eq!(r.min_restricted, 0.0);
    }

    #[test]
    fn oracle_rejects_large_instances() {
        let x = SampleSet::from_scalars(&[0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.75, 0.8, 0.85, 0.9, 0.95, 0.97]).unwrap();
        let y = vec![1.0; 13];
        assert!(representer_equivalence_oracle(&bm(), &x, &y, &[0.15], ScanSpec::for_outputs(1)).is_err());
    }
}
