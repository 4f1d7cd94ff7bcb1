//! Dataset ingestion (CSV, IDX), one-hot encoding, the synthetic two-input
//! three-task generator and train/test splitting.
//!
//! All randomness comes from `ChaCha20Rng::seed_from_u64(seed)`, which yields
//! the same stream on every platform. Noise is drawn point-major, task-minor.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use byteorder::{BigEndian, ByteOrder, WriteBytesExt};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal, Uniform};
use serde::Serialize;

use crate::error::{Error, Result};

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Dataset {
    pub features: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    /// Noise-free targets, known only for generated data.
    pub clean_targets: Option<Vec<Vec<f64>>>,
    /// Names of the one-hot classes, in output-coordinate order.
    pub class_names: Option<Vec<String>>,
    pub provenance: String,
}

impl Dataset {
    pub fn new(features: Vec<Vec<f64>>, targets: Vec<Vec<f64>>, provenance: String) -> Result<Self> {
        if features.len() != targets.len() {
            return Err(Error::RowCountMismatch {
                features: features.len(),
                targets: targets.len(),
            });
        }
        check_uniform(&features, "feature dimension")?;
        check_uniform(&targets, "target dimension")?;
        Ok(Self {
            features,
            targets,
            clean_targets: None,
            class_names: None,
            provenance,
        })
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn output_dim(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    /// Rows at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let pick = |v: &Vec<Vec<f64>>| indices.iter().map(|&i| v[i].clone()).collect::<Vec<_>>();
        Self {
            features: pick(&self.features),
            targets: pick(&self.targets),
            clean_targets: self.clean_targets.as_ref().map(pick),
            class_names: self.class_names.clone(),
            provenance: self.provenance.clone(),
        }
    }

    /// Seeded shuffle split; the first part holds `round(fraction·m)` rows.
    pub fn split(&self, fraction: f64, seed: u64) -> Result<(Self, Self)> {
        if !(0.0..=1.0).contains(&fraction) {
            return Err(Error::InvalidParameter(format!("split fraction {fraction} not in [0,1]")));
        }
        let mut idx: Vec<usize> = (0..self.len()).collect();
        idx.shuffle(&mut ChaCha20Rng::seed_from_u64(seed));
        let cut = (fraction * self.len() as f64).round() as usize;
        Ok((self.subset(&idx[..cut]), self.subset(&idx[cut..])))
    }
}

fn check_uniform(rows: &[Vec<f64>], context: &'static str) -> Result<()> {
    if let Some(first) = rows.first() {
        for r in rows {
            if r.len() != first.len() {
                return Err(Error::DimensionMismatch {
                    context,
                    expected: first.len(),
                    found: r.len(),
                });
            }
        }
    }
    Ok(())
}

/// Concatenates targets point-major: block j holds y_j.
pub fn flatten_targets(ds: &Dataset) -> Vec<f64> {
    flatten(&ds.targets)
}

pub fn flatten(rows: &[Vec<f64>]) -> Vec<f64> {
    rows.iter().flatten().copied().collect()
}

pub fn unflatten(v: &[f64], d: usize) -> Result<Vec<Vec<f64>>> {
    if d == 0 || v.len() % d != 0 {
        return Err(Error::DimensionMismatch {
            context: "flattened targets",
            expected: d,
            found: v.len(),
        });
    }
    Ok(v.chunks(d).map(<[f64]>::to_vec).collect())
}

/// Standard basis vector e_index in ℝ^classes.
pub fn one_hot(index: usize, classes: usize) -> Vec<f64> {
    let mut v = vec![0.0; classes];
    v[index] = 1.0;
    v
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    None,
    Gaussian,
    Uniform,
}

/// Additive noise: Gaussian with variance `scale` or uniform on
/// [−scale, scale].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub scale: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self {
            kind: NoiseKind::None,
            scale: 0.0,
            seed: 0,
        }
    }

    pub fn gaussian(variance: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Gaussian,
            scale: variance,
            seed,
        }
    }

    pub fn uniform(half_width: f64, seed: u64) -> Self {
        Self {
            kind: NoiseKind::Uniform,
            scale: half_width,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind != NoiseKind::None && !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "noise scale must be positive, got {}",
                self.scale
            )));
        }
        Ok(())
    }

    /// `count` noise draws from the seeded stream.
    pub fn sample(&self, count: usize) -> Result<Vec<f64>> {
        self.validate()?;
        let mut rng = ChaCha20Rng::seed_from_u64(self.seed);
        Ok(match self.kind {
            NoiseKind::None => vec![0.0; count],
            NoiseKind::Gaussian => {
                let dist = Normal::new(0.0, self.scale.sqrt())
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                (0..count).map(|_| dist.sample(&mut rng)).collect()
            }
            NoiseKind::Uniform => {
                let dist = Uniform::new_inclusive(-self.scale, self.scale)
                    .map_err(|e| Error::InvalidParameter(e.to_string()))?;
                (0..count).map(|_| dist.sample(&mut rng)).collect()
            }
        })
    }
}

/// Synthetic regression problem on a square grid in ℝ² with three outputs.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SynthSpec {
    pub step: f64,
    pub lo: f64,
    pub hi: f64,
    pub noise: NoiseSpec,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            step: 0.1,
            lo: -1.0,
            hi: 1.0,
            noise: NoiseSpec::gaussian(0.01, 42),
        }
    }
}

impl fmt::Display for SynthSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "synth:h={:?},lo={:?},hi={:?}", self.step, self.lo, self.hi)?;
        match self.noise.kind {
            NoiseKind::None => write!(f, ",noise=none"),
            NoiseKind::Gaussian => write!(f, ",noise=gaussian,var={:?}", self.noise.scale),
            NoiseKind::Uniform => write!(f, ",noise=uniform,width={:?}", self.noise.scale),
        }?;
        write!(f, ",seed={}", self.noise.seed)
    }
}

impl FromStr for SynthSpec {
    type Err = Error;

    /// Parses e.g. `synth:h=0.1,noise=gaussian,var=0.01,seed=42`. Unlisted
    /// keys keep their defaults; `noise=uniform` defaults to width 0.1.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: String| Error::Descriptor {
            descriptor: s.to_string(),
            reason,
        };
        let body = s
            .trim()
            .strip_prefix("synth")
            .ok_or_else(|| bad("expected `synth:` prefix".into()))?;
        let body = body.strip_prefix(':').unwrap_or(body);
        let mut spec = SynthSpec::default();
        let mut kind = NoiseKind::Gaussian;
        let (mut var, mut width) = (0.01, 0.1);
        for item in body.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got `{item}`")))?;
            let num = || {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| bad(format!("`{v}` is not a number")))
            };
            match k.trim() {
                "h" => spec.step = num()?,
                "lo" => spec.lo = num()?,
                "hi" => spec.hi = num()?,
                "var" => var = num()?,
                "width" => width = num()?,
                "seed" => {
                    spec.noise.seed = v
                        .trim()
                        .parse()
                        .map_err(|_| bad(format!("`{v}` is not an unsigned integer")))?
                }
                "noise" => {
                    kind = match v.trim() {
                        "gaussian" => NoiseKind::Gaussian,
                        "uniform" => NoiseKind::Uniform,
                        "none" => NoiseKind::None,
                        other => return Err(bad(format!("unknown noise kind `{other}`"))),
                    }
                }
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        spec.noise.kind = kind;
        spec.noise.scale = match kind {
            NoiseKind::Gaussian => var,
            NoiseKind::Uniform => width,
            NoiseKind::None => 0.0,
        };
        Ok(spec)
    }
}

/// Task coupling used by the synthetic target: 𝔸_ij = e^{−|i−j|}.
pub fn synth_coupling() -> DMatrix<f64> {
    DMatrix::from_fn(3, 3, |i, j| (-(i.abs_diff(j) as f64)).exp())
}

const SYNTH_CENTERS: [[f64; 2]; 5] = [[1.0, 1.0], [0.5, 0.5], [0.0, 0.0], [-0.8, -0.8], [-1.0, -1.0]];

/// Columns c₁..c₅ of the synthetic coefficient matrix.
const SYNTH_COEFFS: [[f64; 3]; 5] = [
    [1.0, 1.0, 0.5],
    [1.0, 0.5, 1.0],
    [1.0, 1.0, 1.0],
    [1.0, 0.5, 1.0],
    [1.0, 1.0, 0.5],
];

/// Noise-free synthetic target f(x) = 𝔸 Σ_l e^{−‖x−p_l‖₁} c_l.
pub fn synth_target(x: &[f64]) -> Vec<f64> {
    let mut s = DVector::<f64>::zeros(3);
    for (p, c) in SYNTH_CENTERS.iter().zip(SYNTH_COEFFS.iter()) {
        let w = (-((x[0] - p[0]).abs() + (x[1] - p[1]).abs())).exp();
        s += DVector::from_column_slice(c) * w;
    }
    (synth_coupling() * s).as_slice().to_vec()
}

/// Grid coordinates lo, lo+h, …, hi. When lo/h is an integer i₀ the nodes
/// are computed as (i₀+i)·h.
fn grid_axis(lo: f64, hi: f64, h: f64) -> Result<Vec<f64>> {
    if !(h > 0.0 && h.is_finite() && hi > lo && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "invalid grid: range [{lo}, {hi}], step {h}"
        )));
    }
    let steps = ((hi - lo) / h).round();
    if ((hi - lo) - steps * h).abs() > 1e-9 * (hi - lo).abs().max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "step {h} does not divide the range [{lo}, {hi}]"
        )));
    }
    let steps = steps as i64;
    let base = (lo / h).round();
    let exact = (lo - base * h).abs() <= 1e-12 * lo.abs().max(1.0);
    Ok((0..=steps)
        .map(|i| {
            if exact {
                (base as i64 + i) as f64 * h
            } else {
                lo + i as f64 * h
            }
        })
        .collect())
}

/// Synthetic dataset on the grid {(lo+ih, lo+jh)}, first coordinate outer.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Dataset> {
    let axis = grid_axis(spec.lo, spec.hi, spec.step)?;
    let features: Vec<Vec<f64>> = axis
        .iter()
        .flat_map(|&a| axis.iter().map(move |&b| vec![a, b]))
        .collect();
    let clean: Vec<Vec<f64>> = features.iter().map(|x| synth_target(x)).collect();
    let noise = spec.noise.sample(clean.len() * 3)?;
    let targets = clean
        .iter()
        .zip(noise.chunks(3))
        .map(|(c, e)| c.iter().zip(e).map(|(a, b)| a + b).collect())
        .collect();
    let mut ds = Dataset::new(features, targets, spec.to_string())?;
    ds.clean_targets = Some(clean);
    Ok(ds)
}

/// Reads a numeric CSV file into rows. Row numbers in errors are 1-based
/// file lines; columns are 1-based.
pub fn read_csv_matrix(path: &Path, header: bool) -> Result<Vec<Vec<f64>>> {
    let bytes = fs::read(path)?;
    if bytes.iter().all(u8::is_ascii_whitespace) {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(bytes.as_slice());
    let mut rows = Vec::new();
    let mut width = None;
    for rec in reader.records() {
        let rec = rec?;
        let line = rec.position().map_or(rows.len() + 1, |p| p.line() as usize);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let expected = *width.get_or_insert(rec.len());
        if rec.len() != expected {
            return Err(Error::CsvRagged {
                path: path.to_path_buf(),
                row: line,
                expected,
                found: rec.len(),
            });
        }
        let row = rec
            .iter()
            .enumerate()
            .map(|(c, cell)| {
                cell.parse::<f64>().map_err(|_| Error::CsvParse {
                    path: path.to_path_buf(),
                    row: line,
                    column: c + 1,
                    cell: cell.to_string(),
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::EmptyFile(path.to_path_buf()));
    }
    Ok(rows)
}

pub fn load_csv(features_path: &Path, targets_path: &Path, header: bool) -> Result<Dataset> {
    let features = read_csv_matrix(features_path, header)?;
    let targets = read_csv_matrix(targets_path, header)?;
    Dataset::new(
        features,
        targets,
        format!("csv:{},{}", features_path.display(), targets_path.display()),
    )
}

/// Writes rows as headerless CSV using shortest round-trip float formatting.
pub fn write_csv_matrix(path: &Path, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        let line: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn read_u32(bytes: &[u8], path: &Path, at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(BigEndian::read_u32)
        .ok_or_else(|| Error::Truncated {
            path: path.to_path_buf(),
            expected: at + 4,
            actual: bytes.len(),
        })
}

fn check_magic(bytes: &[u8], path: &Path, expected: u32) -> Result<()> {
    let found = read_u32(bytes, path, 0)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.to_path_buf(),
            expected,
            found,
        });
    }
    Ok(())
}

/// Loads an IDX image/label pair, keeps rows whose label is in `keep`
/// (all labels present when `None`), scales pixels to [0,1] and one-hot
/// encodes the kept labels in ascending order.
pub fn load_idx(images_path: &Path, labels_path: &Path, keep: Option<&[u8]>) -> Result<Dataset> {
    let img = fs::read(images_path)?;
    let lab = fs::read(labels_path)?;
    check_magic(&img, images_path, IDX_IMAGES_MAGIC)?;
    check_magic(&lab, labels_path, IDX_LABELS_MAGIC)?;
    let n_img = read_u32(&img, images_path, 4)? as usize;
    let rows = read_u32(&img, images_path, 8)? as usize;
    let cols = read_u32(&img, images_path, 12)? as usize;
    let n_lab = read_u32(&lab, labels_path, 4)? as usize;
    let pixels = rows * cols;
    let img_expected = 16 + n_img * pixels;
    if img.len() < img_expected {
        return Err(Error::Truncated {
            path: images_path.to_path_buf(),
            expected: img_expected,
            actual: img.len(),
        });
    }
    let lab_expected = 8 + n_lab;
    if lab.len() < lab_expected {
        return Err(Error::Truncated {
            path: labels_path.to_path_buf(),
            expected: lab_expected,
            actual: lab.len(),
        });
    }
    if n_img != n_lab {
        return Err(Error::CountMismatch {
            images: n_img,
            labels: n_lab,
        });
    }
    let labels = &lab[8..8 + n_lab];
    let mut kept: Vec<u8> = match keep {
        Some(k) => k.to_vec(),
        None => labels.to_vec(),
    };
    kept.sort_unstable();
    kept.dedup();
    if kept.is_empty() {
        return Err(Error::Empty("label set"));
    }
    let mut features = Vec::new();
    let mut targets = Vec::new();
    for (i, l) in labels.iter().enumerate() {
        if let Ok(class) = kept.binary_search(l) {
            let start = 16 + i * pixels;
            features.push(img[start..start + pixels].iter().map(|&p| p as f64 / 255.0).collect());
            targets.push(one_hot(class, kept.len()));
        }
    }
    let mut ds = Dataset::new(
        features,
        targets,
        format!("idx:{},{}", images_path.display(), labels_path.display()),
    )?;
    ds.class_names = Some(kept.iter().map(u8::to_string).collect());
    Ok(ds)
}

/// Writes an IDX image file (magic 0x803) of `rows×cols` u8 images.
pub fn write_idx_images(path: &Path, images: &[Vec<u8>], rows: usize, cols: usize) -> Result<()> {
    let mut out = Vec::with_capacity(16 + images.len() * rows * cols);
    out.write_u32::<BigEndian>(IDX_IMAGES_MAGIC)?;
    out.write_u32::<BigEndian>(images.len() as u32)?;
    out.write_u32::<BigEndian>(rows as u32)?;
    out.write_u32::<BigEndian>(cols as u32)?;
    for im in images {
        if im.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "IDX image size",
                expected: rows * cols,
                found: im.len(),
            });
        }
        out.write_all(im)?;
    }
    fs::write(path, out)?;
    Ok(())
}

/// Writes an IDX label file (magic 0x801).
pub fn write_idx_labels(path: &Path, labels: &[u8]) -> Result<()> {
    let mut out = Vec::with_capacity(8 + labels.len());
    out.write_u32::<BigEndian>(IDX_LABELS_MAGIC)?;
    out.write_u32::<BigEndian>(labels.len() as u32)?;
    out.write_all(labels)?;
    fs::write(path, out)?;
    Ok(())
}

/// Where a dataset comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    Csv { features: PathBuf, targets: PathBuf, header: bool },
    Idx { images: PathBuf, labels: PathBuf, keep: Option<Vec<u8>> },
    Synth(SynthSpec),
}

impl FromStr for DatasetSpec {
    type Err = Error;

    /// `csv:<features>,<targets>[,header]`, `idx:<images>,<labels>[,keep=6;8;9]`
    /// or a `synth:` generator string.
    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::Descriptor {
            descriptor: s.to_string(),
            reason: reason.to_string(),
        };
        let s = s.trim();
        if s.starts_with("synth") {
            return Ok(Self::Synth(s.parse()?));
        }
        if let Some(rest) = s.strip_prefix("csv:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            return match parts.as_slice() {
                [f, t] => Ok(Self::Csv { features: f.into(), targets: t.into(), header: false }),
                [f, t, "header"] => Ok(Self::Csv { features: f.into(), targets: t.into(), header: true }),
                _ => Err(bad("expected csv:<features>,<targets>[,header]")),
            };
        }
        if let Some(rest) = s.strip_prefix("idx:") {
            let parts: Vec<&str> = rest.split(',').map(str::trim).collect();
            let keep = |p: &str| -> Result<Vec<u8>> {
                p.strip_prefix("keep=")
                    .ok_or_else(|| bad("expected keep=<l1;l2;...>"))?
                    .split(';')
                    .map(|l| l.trim().parse::<u8>().map_err(|_| bad("labels must be integers 0-255")))
                    .collect()
            };
            return match parts.as_slice() {
                [i, l] => Ok(Self::Idx { images: i.into(), labels: l.into(), keep: None }),
                [i, l, k] => Ok(Self::Idx { images: i.into(), labels: l.into(), keep: Some(keep(k)?) }),
                _ => Err(bad("expected idx:<images>,<labels>[,keep=...]")),
            };
        }
        Err(bad("expected a csv:, idx: or synth: dataset spec"))
    }
}

impl DatasetSpec {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            Self::Csv { features, targets, header } => load_csv(features, targets, *header),
            Self::Idx { images, labels, keep } => load_idx(images, labels, keep.as_deref()),
            Self::Synth(spec) => generate_synthetic(spec),
        }
    }
}
