//! Independent oracles and fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use mtkernel::data::{write_idx_images, write_idx_labels};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

pub fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// B Bᵀ + ½I with B uniform in [−1,1].
pub fn random_spd(rng: &mut ChaCha20Rng, d: usize) -> Vec<Vec<f64>> {
    let b = DMatrix::from_fn(d, d, |_, _| rng.random_range(-1.0..1.0));
    let a = &b * b.transpose() + DMatrix::identity(d, d) * 0.5;
    (0..d).map(|i| (0..d).map(|j| a[(i, j)]).collect()).collect()
}

/// `m` points of dimension `n` in [lo, hi)^n with pairwise ℓ² gaps ≥ `gap`,
/// the gap shrunk as needed so that `m` points fit comfortably.
pub fn random_points(rng: &mut ChaCha20Rng, m: usize, n: usize, lo: f64, hi: f64, gap: f64) -> Vec<Vec<f64>> {
    let gap = gap.min((hi - lo) / (3.0 * (m as f64).powf(1.0 / n as f64)));
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(m);
    while pts.len() < m {
        let p: Vec<f64> = (0..n).map(|_| rng.random_range(lo..hi)).collect();
        let ok = pts.iter().all(|q| {
            q.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt() >= gap
        });
        if ok {
            pts.push(p);
        }
    }
    pts
}

/// Determinant by Laplace expansion along the first row.
pub fn cofactor_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    if n == 1 {
        return a[0][0];
    }
    (0..n)
        .map(|j| {
            let minor: Vec<Vec<f64>> = a[1..]
                .iter()
                .map(|r| r.iter().enumerate().filter(|(k, _)| *k != j).map(|(_, v)| *v).collect())
                .collect();
            let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
            sign * a[0][j] * cofactor_det(&minor)
        })
        .sum()
}

/// K[x]⁻¹K_x(t) for the min kernel on sorted x, from the three closed-form cases.
pub fn brownian_case_solution(x: &[f64], t: f64) -> Vec<f64> {
    let m = x.len();
    let mut s = vec![0.0; m];
    if t < x[0] {
        s[0] = t / x[0];
    } else if t >= x[m - 1] {
        s[m - 1] = 1.0;
    } else {
        let j = x.iter().rposition(|&v| v <= t).unwrap();
        let h = x[j + 1] - x[j];
        s[j] = (x[j + 1] - t) / h;
        s[j + 1] = (t - x[j]) / h;
    }
    s
}

/// ‖Ac − y‖² + λ‖c‖₁.
pub fn lasso_objective(a: &DMatrix<f64>, c: &[f64], y: &[f64], lambda: f64) -> f64 {
    let r = a * DVector::from_column_slice(c) - DVector::from_column_slice(y);
    r.norm_squared() + lambda * c.iter().map(|v| v.abs()).sum::<f64>()
}

/// Exact lasso minimizer for nonsingular A by enumerating every support and
/// sign pattern: on support S with signs s the stationarity condition is
/// 2A_SᵀA_S c_S = 2A_Sᵀy − λs. Every sign-consistent candidate is feasible and
/// the optimum is one of them, so the smallest candidate objective is exact.
pub fn lasso_oracle(a: &DMatrix<f64>, y: &[f64], lambda: f64) -> (Vec<f64>, f64) {
    let n = a.ncols();
    let yv = DVector::from_column_slice(y);
    let mut best = (vec![0.0; n], lasso_objective(a, &vec![0.0; n], y, lambda));
    let patterns = 3usize.pow(n as u32);
    for code in 1..patterns {
        let mut signs = vec![0i8; n];
        let mut c = code;
        for s in signs.iter_mut() {
            *s = [0, 1, -1][c % 3];
            c /= 3;
        }
        let support: Vec<usize> = (0..n).filter(|&i| signs[i] != 0).collect();
        let as_ = a.select_columns(&support);
        let lhs = as_.transpose() * &as_ * 2.0;
        let s = DVector::from_iterator(support.len(), support.iter().map(|&i| signs[i] as f64));
        let rhs = as_.transpose() * &yv * 2.0 - s * lambda;
        let Some(cs) = lhs.lu().solve(&rhs) else { continue };
        if support
            .iter()
            .zip(cs.iter())
            .any(|(&i, &v)| v == 0.0 || v.signum() != signs[i] as f64)
        {
            continue;
        }
        let mut full = vec![0.0; n];
        for (&i, &v) in support.iter().zip(cs.iter()) {
            full[i] = v;
        }
        let obj = lasso_objective(a, &full, y, lambda);
        if obj < best.1 {
            best = (full, obj);
        }
    }
    best
}

// Strokes for 16×16 digit-like glyphs, as polylines in (col, row) pixel space.
fn arc(cx: f64, cy: f64, rx: f64, ry: f64, from: f64, to: f64) -> Vec<(f64, f64)> {
    (0..=40)
        .map(|i| {
            let a = from + (to - from) * i as f64 / 40.0;
            (cx + rx * a.cos(), cy + ry * a.sin())
        })
        .collect()
}

fn line(a: (f64, f64), b: (f64, f64)) -> Vec<(f64, f64)> {
    (0..=20)
        .map(|i| {
            let s = i as f64 / 20.0;
            (a.0 + (b.0 - a.0) * s, a.1 + (b.1 - a.1) * s)
        })
        .collect()
}

fn glyph(label: u8) -> Vec<(f64, f64)> {
    use std::f64::consts::PI;
    match label {
        0 => arc(7.5, 7.5, 4.0, 5.5, 0.0, 2.0 * PI),
        1 => line((8.0, 2.0), (8.0, 13.5)),
        6 => {
            let mut p = arc(7.5, 10.0, 3.5, 3.3, 0.0, 2.0 * PI);
            p.extend(arc(9.5, 9.0, 5.5, 7.5, PI, 1.45 * PI));
            p
        }
        8 => {
            let mut p = arc(7.5, 4.5, 3.0, 2.8, 0.0, 2.0 * PI);
            p.extend(arc(7.5, 10.6, 3.6, 3.2, 0.0, 2.0 * PI));
            p
        }
        9 => {
            let mut p = arc(7.5, 5.2, 3.5, 3.2, 0.0, 2.0 * PI);
            p.extend(line((11.0, 5.2), (9.5, 14.0)));
            p
        }
        _ => panic!("no glyph for {label}"),
    }
}

/// Renders a jittered, noisy 16×16 glyph as row-major bytes.
pub fn render_digit(rng: &mut ChaCha20Rng, label: u8) -> Vec<u8> {
    let (dx, dy) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
    let scale = rng.random_range(0.8..1.2);
    let shear = rng.random_range(-0.35..0.35);
    let width = rng.random_range(0.7..1.1);
    let pts: Vec<(f64, f64)> = glyph(label)
        .into_iter()
        .map(|(c, r)| {
            let (c, r) = (7.5 + (c - 7.5) * scale, 7.5 + (r - 7.5) * scale);
            (c + shear * (r - 7.5) + dx, r + dy)
        })
        .collect();
    let mut img = Vec::with_capacity(256);
    for r in 0..16 {
        for c in 0..16 {
            let d2 = pts
                .iter()
                .map(|&(pc, pr)| (pc - c as f64).powi(2) + (pr - r as f64).powi(2))
                .fold(f64::INFINITY, f64::min);
            let ink = 255.0 * (-d2 / (2.0 * width * width)).exp();
            let v = ink + rng.random_range(0.0..110.0);
            img.push(v.clamp(0.0, 255.0) as u8);
        }
    }
    img
}

pub struct DigitCorpus {
    pub train_images: PathBuf,
    pub train_labels: PathBuf,
    pub test_images: PathBuf,
    pub test_labels: PathBuf,
}

/// Writes train/test IDX files with `per_class_*` glyphs of each of 6, 8, 9
/// plus distractor 0s and 1s, in shuffled order.
pub fn write_digit_corpus(dir: &Path, per_class_train: usize, per_class_test: usize, seed: u64) -> DigitCorpus {
    let mut rng = rng(seed);
    let mut split = |n: usize, stem: &str| -> (PathBuf, PathBuf) {
        let mut labels: Vec<u8> = Vec::new();
        for l in [6u8, 8, 9] {
            labels.extend(std::iter::repeat_n(l, n));
        }
        labels.extend(std::iter::repeat_n(0u8, n / 4));
        labels.extend(std::iter::repeat_n(1u8, n / 4));
        for i in (1..labels.len()).rev() {
            let j = rng.random_range(0..=i);
            labels.swap(i, j);
        }
        let images: Vec<Vec<u8>> = labels.iter().map(|&l| render_digit(&mut rng, l)).collect();
        let (ip, lp) = (dir.join(format!("{stem}-images.idx")), dir.join(format!("{stem}-labels.idx")));
        write_idx_images(&ip, &images, 16, 16).unwrap();
        write_idx_labels(&lp, &labels).unwrap();
        (ip, lp)
    };
    let (train_images, train_labels) = split(per_class_train, "train");
    let (test_images, test_labels) = split(per_class_test, "test");
    DigitCorpus {
        train_images,
        train_labels,
        test_images,
        test_labels,
    }
}

/// Mean pairwise ℓ¹ distance over the first `k` rows.
pub fn mean_l1_distance(rows: &[Vec<f64>], k: usize) -> f64 {
    let k = k.min(rows.len());
    let mut sum = 0.0;
    let mut count = 0usize;
    for i in 0..k {
        for j in i + 1..k {
            sum += rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b).abs()).sum::<f64>();
            count += 1;
        }
    }
    sum / count.max(1) as f64
}
