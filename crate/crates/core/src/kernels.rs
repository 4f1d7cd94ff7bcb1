//! Scalar kernels, separable multi-task kernels K(x,x′) = k(x,x′)·𝔸 and
//! block Gram matrix assembly.
//!
//! Block layout is point-major and task-minor everywhere: block `(j, k)` of
//! the Gram matrix occupies rows `j·d..(j+1)·d` and columns `k·d..(k+1)·d`
//! and holds K(x_k, x_j). Coefficient and target vectors follow the same
//! layout.
//!
//! Independence of kernel sections (assumption A3 of the admissibility
//! definition) has no finite test. Among the built-in kernels, Brownian
//! motion, the Brownian bridge and the one-dimensional exponential kernel are
//! known admissible single-task kernels, and K = k·𝔸 is admissible exactly
//! when k is. See [`A3_NOTE`].

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{induced_norm1, Factorization};

/// Fixed documentation string for the independence assumption.
pub const A3_NOTE: &str = "A3 (independence of kernel sections) has no finite test and is not checked \
at runtime. Known admissible single-task kernels: brownian_motion and brownian_bridge on (0,1), \
exponential on the real line (n = 1). A separable kernel k*A with symmetric positive definite A is \
admissible if and only if k is.";

/// Minimum pairwise ℓ² distance for sample points to count as distinct.
pub const DISTINCTNESS_TOLERANCE: f64 = 1e-12;

/// Default bound on the 1-norm condition estimate of a Gram matrix.
pub const DEFAULT_CONDITION_THRESHOLD: f64 = 1e12;

/// A symmetric scalar kernel k: X×X → ℝ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ScalarKernel {
    /// e^{−‖x−x′‖₁/r}
    Exponential { width: f64 },
    /// e^{−‖x−x′‖₂²/γ}
    Gaussian { gamma: f64 },
    /// min{x, x′} on (0,1)
    BrownianMotion,
    /// min{x, x′} − x·x′ on (0,1)
    BrownianBridge,
}

impl ScalarKernel {
    pub fn exponential(width: f64) -> Result<Self> {
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "exponential width must be positive, got {width}"
            )));
        }
        Ok(Self::Exponential { width })
    }

    pub fn gaussian(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "gaussian gamma must be positive, got {gamma}"
            )));
        }
        Ok(Self::Gaussian { gamma })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Exponential { .. } => "exponential",
            Self::Gaussian { .. } => "gaussian",
            Self::BrownianMotion => "brownian_motion",
            Self::BrownianBridge => "brownian_bridge",
        }
    }

    /// Whether the kernel is restricted to the open unit interval.
    pub fn is_unit_interval(&self) -> bool {
        matches!(self, Self::BrownianMotion | Self::BrownianBridge)
    }

    /// Validates that `x` lies in the kernel's domain.
    pub fn check_domain(&self, x: &[f64]) -> Result<()> {
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coordinate".into()));
        }
        if self.is_unit_interval() {
            if x.len() != 1 {
                return Err(Error::DomainDimension {
                    kernel: self.name(),
                    dim: x.len(),
                });
            }
            if !(x[0] > 0.0 && x[0] < 1.0) {
                return Err(Error::DomainViolation {
                    kernel: self.name(),
                    value: x[0],
                });
            }
        }
        Ok(())
    }

    /// k(x, x′).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::DimensionMismatch {
                context: "kernel arguments",
                expected: x.len(),
                found: y.len(),
            });
        }
        self.check_domain(x)?;
        self.check_domain(y)?;
        Ok(self.eval_unchecked(x, y))
    }

    /// k(x, x′) without domain or dimension checks.
    pub(crate) fn eval_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        match *self {
            Self::Exponential { width } => {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b).abs()).sum();
                (-d / width).exp()
            }
            Self::Gaussian { gamma } => {
                let d: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                (-d / gamma).exp()
            }
            Self::BrownianMotion => x[0].min(y[0]),
            Self::BrownianBridge => x[0].min(y[0]) - x[0] * y[0],
        }
    }
}

impl fmt::Display for ScalarKernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Exponential { width } => write!(f, "exponential:r={width:?}"),
            Self::Gaussian { gamma } => write!(f, "gaussian:gamma={gamma:?}"),
            Self::BrownianMotion => f.write_str("brownian_motion"),
            Self::BrownianBridge => f.write_str("brownian_bridge"),
        }
    }
}

impl FromStr for ScalarKernel {
    type Err = Error;

    /// Parses `exponential:r=1.0`, `gaussian:gamma=1.0`, `brownian_motion`
    /// or `brownian_bridge`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Descriptor {
            descriptor: s.to_string(),
            reason: reason.to_string(),
        };
        let s_trim = s.trim();
        let (name, params) = match s_trim.split_once(':') {
            Some((n, p)) => (n.trim(), Some(p.trim())),
            None => (s_trim, None),
        };
        let param = |key: &str| -> Result<f64> {
            let p = params.ok_or_else(|| bad(&format!("missing parameter `{key}=`")))?;
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| bad(&format!("expected `{key}=<value>`")))?;
            if k.trim() != key {
                return Err(bad(&format!("unknown parameter `{}`", k.trim())));
            }
            v.trim()
                .parse::<f64>()
                .map_err(|_| bad(&format!("`{}` is not a number", v.trim())))
        };
        match name {
            "exponential" => Self::exponential(param("r")?),
            "gaussian" => Self::gaussian(param("gamma")?),
            "brownian_motion" | "brownian_bridge" => {
                if params.is_some_and(|p| !p.is_empty()) {
                    return Err(bad("this kernel takes no parameters"));
                }
                Ok(if name == "brownian_motion" {
                    Self::BrownianMotion
                } else {
                    Self::BrownianBridge
                })
            }
            _ => Err(bad("unknown kernel")),
        }
    }
}

impl Serialize for ScalarKernel {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ScalarKernel {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Symmetric strictly positive definite d×d task coupling matrix 𝔸.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingMatrix(DMatrix<f64>);

impl CouplingMatrix {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::InvalidCoupling("a nonempty square matrix"));
        }
        if a.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCoupling("finite"));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        let d = a.nrows();
        for i in 0..d {
            for j in 0..i {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidCoupling("symmetric"));
                }
            }
        }
        let sym = (&a + a.transpose()) * 0.5;
        if sym.clone().cholesky().is_none() {
            return Err(Error::InvalidCoupling("strictly positive definite"));
        }
        Ok(Self(sym))
    }

    pub fn identity(d: usize) -> Result<Self> {
        Self::new(DMatrix::identity(d, d))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidCoupling("a nonempty square matrix"));
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    /// Reads a d×d matrix from a headerless CSV file.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let rows = crate::data::read_csv_matrix(path, false)?;
        Self::from_rows(&rows)
    }

    /// Parses `identity:<d>` or treats the string as a CSV path.
    pub fn from_descriptor(desc: &str) -> Result<Self> {
        match desc.trim().strip_prefix("identity:") {
            Some(d) => {
                let d: usize = d.trim().parse().map_err(|_| Error::Descriptor {
                    descriptor: desc.to_string(),
                    reason: "expected identity:<d>".into(),
                })?;
                Self::identity(d)
            }
            None => Self::from_csv(Path::new(desc.trim())),
        }
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// ‖𝔸‖₁ (maximum absolute column sum).
    pub fn norm1(&self) -> f64 {
        induced_norm1(&self.0)
    }
}

/// Separable multi-task kernel K(x,x′) = k(x,x′)·𝔸.
#[derive(Clone, Debug, PartialEq)]
pub struct MultiTaskKernel {
    pub scalar: ScalarKernel,
    pub coupling: CouplingMatrix,
}

impl MultiTaskKernel {
    pub fn new(scalar: ScalarKernel, coupling: CouplingMatrix) -> Self {
        Self { scalar, coupling }
    }

    /// Single-task kernel (d = 1, 𝔸 = [1]).
    pub fn single_task(scalar: ScalarKernel) -> Self {
        Self::new(scalar, CouplingMatrix(DMatrix::identity(1, 1)))
    }

    pub fn outputs(&self) -> usize {
        self.coupling.dim()
    }

    /// K(x, x′) as a d×d matrix.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<DMatrix<f64>> {
        let k = self.scalar.eval(x, y)?;
        Ok(self.coupling.matrix() * k)
    }
}

/// Ordered set of m pairwise-distinct points in ℝⁿ.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampleSet {
    points: Vec<Vec<f64>>,
    dim: usize,
}

impl SampleSet {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let first = points.first().ok_or(Error::Empty("sample set"))?;
        let dim = first.len();
        if dim == 0 {
            return Err(Error::InvalidParameter("points must have dimension >= 1".into()));
        }
        for p in &points {
            if p.len() != dim {
                return Err(Error::DimensionMismatch {
                    context: "sample point dimension",
                    expected: dim,
                    found: p.len(),
                });
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidParameter("non-finite sample coordinate".into()));
            }
        }
        for i in 0..points.len() {
            for j in 0..i {
                let dist = euclidean(&points[i], &points[j]);
                if dist <= DISTINCTNESS_TOLERANCE {
                    return Err(Error::DuplicatePoints {
                        first: j,
                        second: i,
                        distance: dist,
                    });
                }
            }
        }
        Ok(Self { points, dim })
    }

    /// One-dimensional sample set from scalars.
    pub fn from_scalars(xs: &[f64]) -> Result<Self> {
        Self::new(xs.iter().map(|&x| vec![x]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn point(&self, j: usize) -> &[f64] {
        &self.points[j]
    }

    pub fn contains(&self, t: &[f64]) -> Option<usize> {
        self.points
            .iter()
            .position(|p| p.len() == t.len() && euclidean(p, t) <= DISTINCTNESS_TOLERANCE)
    }

    /// A new set with `t` appended.
    pub fn extended(&self, t: &[f64]) -> Result<Self> {
        let mut pts = self.points.clone();
        pts.push(t.to_vec());
        Self::new(pts)
    }
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Options for Gram assembly.
#[derive(Clone, Copy, Debug)]
pub struct GramOptions {
    pub condition_threshold: f64,
}

impl Default for GramOptions {
    fn default() -> Self {
        Self {
            condition_threshold: DEFAULT_CONDITION_THRESHOLD,
        }
    }
}

/// Block Gram matrix K[x] with its LU factorization.
#[derive(Clone, Debug)]
pub struct GramMatrix {
    dense: DMatrix<f64>,
    factorization: Factorization,
    condition_estimate: f64,
    points: usize,
    outputs: usize,
}

impl GramMatrix {
    /// Factorizes an already assembled md×md matrix.
    pub fn from_dense(
        dense: DMatrix<f64>,
        outputs: usize,
        options: GramOptions,
    ) -> Result<Self> {
        if outputs == 0 || dense.nrows() % outputs != 0 || !dense.is_square() {
            return Err(Error::DimensionMismatch {
                context: "gram matrix blocks",
                expected: outputs,
                found: dense.nrows(),
            });
        }
        let factorization = Factorization::new(&dense)?;
        let condition_estimate = factorization.condition_estimate()?;
        if !condition_estimate.is_finite() || condition_estimate > options.condition_threshold {
            return Err(Error::IllConditioned {
                estimate: condition_estimate,
                threshold: options.condition_threshold,
            });
        }
        let points = dense.nrows() / outputs;
        Ok(Self {
            dense,
            factorization,
            condition_estimate,
            points,
            outputs,
        })
    }

    pub fn dense(&self) -> &DMatrix<f64> {
        &self.dense
    }

    pub fn factorization(&self) -> &Factorization {
        &self.factorization
    }

    pub fn condition_estimate(&self) -> f64 {
        self.condition_estimate
    }

    /// Number of sample points m.
    pub fn points(&self) -> usize {
        self.points
    }

    /// Output dimension d.
    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn size(&self) -> usize {
        self.points * self.outputs
    }
}

/// Scalar Gram matrix [k(x_k, x_j)]_{j,k}.
pub fn scalar_gram(kernel: &ScalarKernel, x: &SampleSet) -> Result<DMatrix<f64>> {
    for p in x.points() {
        kernel.check_domain(p)?;
    }
    let m = x.len();
    let mut g = DMatrix::zeros(m, m);
    for j in 0..m {
        for k in 0..=j {
            let v = kernel.eval_unchecked(x.point(k), x.point(j));
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    Ok(g)
}

/// The md×md block matrix with block (j,k) = K(x_k, x_j), unfactorized.
pub fn gram_dense(kernel: &MultiTaskKernel, x: &SampleSet) -> Result<DMatrix<f64>> {
    let s = scalar_gram(&kernel.scalar, x)?;
    let a = kernel.coupling.matrix();
    let d = a.nrows();
    let m = x.len();
    let mut g = DMatrix::zeros(m * d, m * d);
    for j in 0..m {
        for k in 0..m {
            let kv = s[(j, k)];
            for r in 0..d {
                for c in 0..d {
                    g[(j * d + r, k * d + c)] = kv * a[(r, c)];
                }
            }
        }
    }
    Ok(g)
}

/// Assembles and factorizes K[x] with the default condition threshold.
pub fn assemble_gram(kernel: &MultiTaskKernel, x: &SampleSet) -> Result<GramMatrix> {
    assemble_gram_with(kernel, x, GramOptions::default())
}

pub fn assemble_gram_with(
    kernel: &MultiTaskKernel,
    x: &SampleSet,
    options: GramOptions,
) -> Result<GramMatrix> {
    let dense = gram_dense(kernel, x)?;
    GramMatrix::from_dense(dense, kernel.outputs(), options)
}

/// Stacked block column K_x(t), block j = k(t, x_j)·𝔸.
#[derive(Clone, Debug)]
pub struct KernelColumn {
    pub dense: DMatrix<f64>,
    pub t: Vec<f64>,
}

pub fn kernel_column(kernel: &MultiTaskKernel, x: &SampleSet, t: &[f64]) -> Result<KernelColumn> {
    if t.len() != x.dim() {
        return Err(Error::DimensionMismatch {
            context: "evaluation point dimension",
            expected: x.dim(),
            found: t.len(),
        });
    }
    kernel.scalar.check_domain(t)?;
    let a = kernel.coupling.matrix();
    let d = a.nrows();
    let m = x.len();
    let mut dense = DMatrix::zeros(m * d, d);
    for j in 0..m {
        let kv = kernel.scalar.eval(t, x.point(j))?;
        dense.view_mut((j * d, 0), (d, d)).copy_from(&(a * kv));
    }
    Ok(KernelColumn {
        dense,
        t: t.to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brownian() -> MultiTaskKernel {
        MultiTaskKernel::single_task(ScalarKernel::BrownianMotion)
    }

    #[test]
    fn scalar_examples() {
        let e = ScalarKernel::exponential(1.0).unwrap();
        assert_eq!(e.eval(&[0.3, -2.0], &[0.3, -2.0]).unwrap(), 1.0);
        assert_eq!(ScalarKernel::BrownianMotion.eval(&[0.3], &[0.7]).unwrap(), 0.3);
        let g = ScalarKernel::gaussian(1.0).unwrap();
        assert!((g.eval(&[0.0], &[1.0]).unwrap() - 0.367_879_441_171_442_3).abs() < 1e-15);
    }

    #[test]
    fn brownian_domain_is_open_interval() {
        let b = ScalarKernel::BrownianMotion;
        assert!(matches!(b.eval(&[0.0], &[0.5]), Err(Error::DomainViolation { .. })));
        assert!(matches!(b.eval(&[0.5], &[1.0]), Err(Error::DomainViolation { .. })));
        assert!(matches!(
            ScalarKernel::BrownianBridge.eval(&[0.5, 0.2], &[0.5, 0.2]),
            Err(Error::DomainDimension { .. })
        ));
        assert!(matches!(
            ScalarKernel::exponential(1.0).unwrap().eval(&[0.5], &[0.5, 0.1]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn bridge_values() {
        let v = ScalarKernel::BrownianBridge.eval(&[0.25], &[0.5]).unwrap();
        assert!((v - (0.25 - 0.125)).abs() < 1e-15);
    }

    #[test]
    fn multitask_examples() {
        let a = CouplingMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let k = MultiTaskKernel::new(ScalarKernel::exponential(1.0).unwrap(), a.clone());
        assert_eq!(k.eval(&[0.4, 0.1], &[0.4, 0.1]).unwrap(), *a.matrix());
        let v = k.eval(&[0.0, 0.0], &[1.0, 0.0]).unwrap();
        let e1 = (-1.0f64).exp();
        let expect = DMatrix::from_row_slice(2, 2, &[2.0 * e1, e1, e1, 2.0 * e1]);
        assert!((v - expect).amax() < 1e-15);

        let bm = MultiTaskKernel::new(ScalarKernel::BrownianMotion, CouplingMatrix::identity(3).unwrap());
        let v = bm.eval(&[0.3], &[0.7]).unwrap();
        assert_eq!(v, DMatrix::identity(3, 3) * 0.3);
    }

    #[test]
    fn gram_examples() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        let g = assemble_gram(&brownian(), &x).unwrap();
        assert_eq!(g.dense(), &DMatrix::from_row_slice(2, 2, &[0.2, 0.2, 0.2, 0.5]));

        let a = CouplingMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let k = MultiTaskKernel::new(ScalarKernel::gaussian(0.5).unwrap(), a.clone());
        let one = SampleSet::new(vec![vec![0.1, 0.9]]).unwrap();
        assert_eq!(assemble_gram(&k, &one).unwrap().dense(), a.matrix());
    }

    #[test]
    fn column_examples() {
        let x = SampleSet::from_scalars(&[0.2, 0.5]).unwrap();
        let col = kernel_column(&brownian(), &x, &[0.35]).unwrap();
        assert_eq!(col.dense.as_slice(), &[0.2, 0.35]);

        let x2 = SampleSet::new(vec![vec![0.0, 0.0], vec![0.5, 0.0], vec![0.0, 0.5]]).unwrap();
        let k = MultiTaskKernel::single_task(ScalarKernel::exponential(1.0).unwrap());
        let col = kernel_column(&k, &x2, &[0.5, 0.5]).unwrap();
        let (e1, eh) = ((-1.0f64).exp(), (-0.5f64).exp());
        let got = col.dense.as_slice();
        assert!((got[0] - e1).abs() < 1e-15 && (got[1] - eh).abs() < 1e-15 && (got[2] - eh).abs() < 1e-15);

        let a = CouplingMatrix::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap();
        let k = MultiTaskKernel::new(ScalarKernel::exponential(1.0).unwrap(), a.clone());
        let col = kernel_column(&k, &x2, &[0.5, 0.0]).unwrap();
        assert_eq!(col.dense.view((2, 0), (2, 2)), a.matrix().view((0, 0), (2, 2)));
    }

    #[test]
    fn duplicate_points_rejected() {
        let err = SampleSet::from_scalars(&[0.2, 0.5, 0.2]).unwrap_err();
        assert!(matches!(err, Error::DuplicatePoints { first: 0, second: 2, .. }));
    }

    #[test]
    fn coupling_validation() {
        assert!(matches!(
            CouplingMatrix::from_rows(&[vec![1.0, 2.0], vec![0.0, 1.0]]),
            Err(Error::InvalidCoupling("symmetric"))
        ));
        assert!(matches!(
            CouplingMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]),
            Err(Error::InvalidCoupling("strictly positive definite"))
        ));
        assert!(CouplingMatrix::from_descriptor("identity:3").unwrap().dim() == 3);
    }

    #[test]
    fn descriptor_round_trip() {
        for s in ["exponential:r=1.5", "gaussian:gamma=0.25", "brownian_motion", "brownian_bridge"] {
            let k: ScalarKernel = s.parse().unwrap();
            let back: ScalarKernel = k.to_string().parse().unwrap();
            assert_eq!(k, back);
        }
        assert!("exponential".parse::<ScalarKernel>().is_err());
        assert!("exponential:gamma=1".parse::<ScalarKernel>().is_err());
        assert!("gaussian:gamma=-1".parse::<ScalarKernel>().is_err());
        assert!("matern".parse::<ScalarKernel>().is_err());
        assert!("brownian_motion:r=1".parse::<ScalarKernel>().is_err());
    }

    #[test]
    fn ill_conditioned_gram_is_rejected() {
        let x = SampleSet::from_scalars(&[0.0, 1e-7]).unwrap();
        let k = MultiTaskKernel::single_task(ScalarKernel::gaussian(1.0).unwrap());
        assert!(matches!(assemble_gram(&k, &x), Err(Error::IllConditioned { .. }) | Err(Error::Singular(_))));
    }

    fn any_kernel() -> impl Strategy<Value = ScalarKernel> {
        prop_oneof![
            (0.1f64..5.0).prop_map(|r| ScalarKernel::Exponential { width: r }),
            (0.1f64..5.0).prop_map(|g| ScalarKernel::Gaussian { gamma: g }),
            Just(ScalarKernel::BrownianMotion),
            Just(ScalarKernel::BrownianBridge),
        ]
    }

    proptest! {
        #[test]
        fn kernels_are_exactly_symmetric(k in any_kernel(), a in 0.001f64..0.999, b in 0.001f64..0.999, c in -2.0f64..2.0) {
            let (x, y) = if k.is_unit_interval() { (vec![a], vec![b]) } else { (vec![a, c], vec![b, -c]) };
            prop_assert_eq!(k.eval(&x, &y).unwrap(), k.eval(&y, &x).unwrap());
            if !k.is_unit_interval() {
                let v = k.eval(&x, &y).unwrap();
                prop_assert!(v > 0.0 && v <= 1.0);
                prop_assert_eq!(k.eval(&x, &x).unwrap(), 1.0);
            }
            let mk = MultiTaskKernel::new(k, CouplingMatrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap());
            prop_assert_eq!(mk.eval(&x, &y).unwrap(), mk.eval(&y, &x).unwrap().transpose());
        }
    }
}
