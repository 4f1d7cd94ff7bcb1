//! C ABI over `mtkernel`.
//!
//! Objects are opaque handles created by `*_new` / `*_assemble` / `mtk_fit_*`
//! and released with the matching `*_free`. Every fallible call returns an
//! [`MtkStatus`]; the message of the last failure on the calling thread is
//! available from [`mtk_last_error_message`]. Point sets are row-major
//! `m × n` arrays, coefficient and target vectors are point-major of length
//! `m·d`.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use mtkernel::kernels::{assemble_gram, kernel_column, CouplingMatrix, GramMatrix, MultiTaskKernel, SampleSet};
use mtkernel::solvers::{fit_l1, fit_ridge, AdmmParams};
use mtkernel::{lebesgue, Error, RepresenterFunction};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MtkStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    DomainViolation = 4,
    DuplicatePoints = 5,
    Singular = 6,
    IllConditioned = 7,
    Io = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

/// Opaque multi-task kernel.
pub struct MtkKernel(MultiTaskKernel);

/// Opaque factorized Gram matrix, together with its kernel.
pub struct MtkGram {
    kernel: MultiTaskKernel,
    gram: GramMatrix,
    samples: SampleSet,
}

/// Opaque fitted model.
pub struct MtkModel {
    model: RepresenterFunction,
    objective: f64,
    iterations: usize,
    converged: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: String) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(e: &Error) -> MtkStatus {
    match e {
        Error::DimensionMismatch { .. } | Error::DomainDimension { .. } | Error::RowCountMismatch { .. } => {
            MtkStatus::DimensionMismatch
        }
        Error::DomainViolation { .. } => MtkStatus::DomainViolation,
        Error::DuplicatePoints { .. } => MtkStatus::DuplicatePoints,
        Error::Singular(_) => MtkStatus::Singular,
        Error::IllConditioned { .. } => MtkStatus::IllConditioned,
        Error::Io(_) | Error::EmptyFile(_) | Error::BadMagic { .. } | Error::Truncated { .. } => MtkStatus::Io,
        _ => MtkStatus::InvalidArgument,
    }
}

struct Fail(MtkStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(MtkStatus::NullPointer, format!("null pointer: {what}"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> MtkStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => MtkStatus::Ok,
        Ok(Err(Fail(s, msg))) => {
            set_error(msg);
            s
        }
        Err(_) => {
            set_error("internal panic".into());
            MtkStatus::Panic
        }
    }
}

unsafe fn input<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, len))
}

unsafe fn output<'a>(p: *mut f64, len: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, len))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn sample_set(points: *const f64, m: usize, n: usize) -> Result<SampleSet, Fail> {
    if n == 0 {
        return Err(Fail(MtkStatus::InvalidArgument, "point dimension must be positive".into()));
    }
    let flat = input(points, m * n, "points")?;
    Ok(SampleSet::new(flat.chunks(n).map(<[f64]>::to_vec).collect())?)
}

/// Copies the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`) and returns the full message length in bytes.
#[no_mangle]
pub unsafe extern "C" fn mtk_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Builds K = k·A from a scalar kernel descriptor (e.g. `"exponential:r=1.0"`,
/// `"brownian_motion"`) and a row-major `d × d` coupling matrix. A null
/// `coupling` with `d == 1` means A = [1].
#[no_mangle]
pub unsafe extern "C" fn mtk_kernel_new(
    descriptor: *const c_char,
    coupling: *const f64,
    d: usize,
    out: *mut *mut MtkKernel,
) -> MtkStatus {
    guard(|| {
        if descriptor.is_null() {
            return Err(null("descriptor"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let desc = CStr::from_ptr(descriptor)
            .to_str()
            .map_err(|_| Fail(MtkStatus::InvalidArgument, "descriptor is not UTF-8".into()))?;
        let scalar = desc.parse()?;
        let a = if coupling.is_null() && d == 1 {
            CouplingMatrix::identity(1)?
        } else {
            let flat = input(coupling, d * d, "coupling")?;
            let rows: Vec<Vec<f64>> = flat.chunks(d.max(1)).map(<[f64]>::to_vec).collect();
            CouplingMatrix::from_rows(&rows)?
        };
        *out = Box::into_raw(Box::new(MtkKernel(MultiTaskKernel::new(scalar, a))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtk_kernel_free(kernel: *mut MtkKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Output dimension d, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_kernel_outputs(kernel: *const MtkKernel) -> usize {
    kernel.as_ref().map_or(0, |k| k.0.outputs())
}

/// Writes the `d × d` block K(s, t) row-major into `out`.
#[no_mangle]
pub unsafe extern "C" fn mtk_kernel_eval(
    kernel: *const MtkKernel,
    s: *const f64,
    t: *const f64,
    n: usize,
    out: *mut f64,
) -> MtkStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        let d = k.outputs();
        let block = k.eval(input(s, n, "s")?, input(t, n, "t")?)?;
        let out = output(out, d * d, "out")?;
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = block[(i, j)];
            }
        }
        Ok(())
    })
}

/// Assembles and factorizes K[x] for `m` points of dimension `n`.
#[no_mangle]
pub unsafe extern "C" fn mtk_gram_assemble(
    kernel: *const MtkKernel,
    points: *const f64,
    m: usize,
    n: usize,
    out: *mut *mut MtkGram,
) -> MtkStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = sample_set(points, m, n)?;
        let gram = assemble_gram(k, &x)?;
        *out = Box::into_raw(Box::new(MtkGram {
            kernel: k.clone(),
            gram,
            samples: x,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtk_gram_free(gram: *mut MtkGram) {
    if !gram.is_null() {
        drop(Box::from_raw(gram));
    }
}

/// Side length m·d, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_gram_size(gram: *const MtkGram) -> usize {
    gram.as_ref().map_or(0, |g| g.gram.size())
}

/// 1-norm condition number estimate, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_gram_condition_estimate(gram: *const MtkGram) -> f64 {
    gram.as_ref().map_or(f64::NAN, |g| g.gram.condition_estimate())
}

/// Copies the dense symmetric Gram matrix (`size × size`) into `out`.
#[no_mangle]
pub unsafe extern "C" fn mtk_gram_copy(gram: *const MtkGram, out: *mut f64, len: usize) -> MtkStatus {
    guard(|| {
        let g = handle(gram, "gram")?;
        let src = g.gram.dense().as_slice();
        if len < src.len() {
            return Err(Fail(MtkStatus::BufferTooSmall, format!("need {} entries, got {len}", src.len())));
        }
        output(out, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Lebesgue function ‖K[x]⁻¹K_x(t)‖₁ at the point `t` of dimension `n`.
#[no_mangle]
pub unsafe extern "C" fn mtk_lebesgue_function(
    gram: *const MtkGram,
    t: *const f64,
    n: usize,
    out: *mut f64,
) -> MtkStatus {
    guard(|| {
        let g = handle(gram, "gram")?;
        if out.is_null() {
            return Err(null("out"));
        }
        let col = kernel_column(&g.kernel, &g.samples, input(t, n, "t")?)?;
        *out = lebesgue::lebesgue_function(&g.gram, &col)?;
        Ok(())
    })
}

/// ADMM settings for [`mtk_fit_l1`].
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct MtkAdmmParams {
    pub rho: f64,
    pub max_iters: usize,
    pub eps_abs: f64,
    pub eps_rel: f64,
    pub adaptive_rho: bool,
}

/// Library defaults.
#[no_mangle]
pub extern "C" fn mtk_admm_params_default() -> MtkAdmmParams {
    let p = AdmmParams::default();
    MtkAdmmParams {
        rho: p.rho,
        max_iters: p.max_iters,
        eps_abs: p.eps_abs,
        eps_rel: p.eps_rel,
        adaptive_rho: p.adaptive_rho,
    }
}

/// ℓ¹ regularization network on `m` points of dimension `n` with targets `y`
/// (length m·d). A null `params` uses the defaults.
#[no_mangle]
pub unsafe extern "C" fn mtk_fit_l1(
    kernel: *const MtkKernel,
    points: *const f64,
    m: usize,
    n: usize,
    y: *const f64,
    lambda: f64,
    params: *const MtkAdmmParams,
    out: *mut *mut MtkModel,
) -> MtkStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let p = params.as_ref().copied().unwrap_or_else(|| mtk_admm_params_default());
        let params = AdmmParams {
            rho: p.rho,
            max_iters: p.max_iters,
            eps_abs: p.eps_abs,
            eps_rel: p.eps_rel,
            adaptive_rho: p.adaptive_rho,
        };
        let x = sample_set(points, m, n)?;
        let y = input(y, m * k.outputs(), "y")?;
        let f = fit_l1(k, &x, y, lambda, &params)?;
        *out = Box::into_raw(Box::new(MtkModel {
            model: f.model,
            objective: f.objective,
            iterations: f.iterations,
            converged: f.converged,
        }));
        Ok(())
    })
}

/// Kernel ridge regression (K[x] + λI)⁻¹y.
#[no_mangle]
pub unsafe extern "C" fn mtk_fit_ridge(
    kernel: *const MtkKernel,
    points: *const f64,
    m: usize,
    n: usize,
    y: *const f64,
    lambda: f64,
    out: *mut *mut MtkModel,
) -> MtkStatus {
    guard(|| {
        let k = &handle(kernel, "kernel")?.0;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = sample_set(points, m, n)?;
        let y = input(y, m * k.outputs(), "y")?;
        let f = fit_ridge(k, &x, y, lambda)?;
        *out = Box::into_raw(Box::new(MtkModel {
            model: f.model,
            objective: f.objective,
            iterations: f.iterations,
            converged: f.converged,
        }));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtk_model_free(model: *mut MtkModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of coefficients m·d, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_model_len(model: *const MtkModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.coefficients.values().len())
}

/// Number of nonzero coefficients, or 0 for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_model_nnz(model: *const MtkModel) -> usize {
    model.as_ref().map_or(0, |m| m.model.coefficients.nnz())
}

/// Objective value at the returned coefficients, or NaN for a null handle.
#[no_mangle]
pub unsafe extern "C" fn mtk_model_objective(model: *const MtkModel) -> f64 {
    model.as_ref().map_or(f64::NAN, |m| m.objective)
}

/// Writes iteration count and convergence flag; either pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn mtk_model_status(
    model: *const MtkModel,
    iterations: *mut usize,
    converged: *mut bool,
) -> MtkStatus {
    guard(|| {
        let m = handle(model, "model")?;
        if let Some(i) = iterations.as_mut() {
            *i = m.iterations;
        }
        if let Some(c) = converged.as_mut() {
            *c = m.converged;
        }
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn mtk_model_coefficients(model: *const MtkModel, out: *mut f64, len: usize) -> MtkStatus {
    guard(|| {
        let src = handle(model, "model")?.model.coefficients.values();
        if len < src.len() {
            return Err(Fail(MtkStatus::BufferTooSmall, format!("need {} entries, got {len}", src.len())));
        }
        output(out, src.len(), "out")?.copy_from_slice(src);
        Ok(())
    })
}

/// Evaluates the model at `t` (dimension `n`), writing d values.
#[no_mangle]
pub unsafe extern "C" fn mtk_model_predict(
    model: *const MtkModel,
    t: *const f64,
    n: usize,
    out: *mut f64,
) -> MtkStatus {
    guard(|| {
        let m = &handle(model, "model")?.model;
        let v = m.evaluate(input(t, n, "t")?)?;
        output(out, v.len(), "out")?.copy_from_slice(&v);
        Ok(())
    })
}
