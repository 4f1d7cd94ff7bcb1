//! Batch front end: `lebesgue`, `admissibility`, `fit`, `predict`, `eval`
//! and `synth`.
//!
//! Every subcommand reads an optional JSON config (`--config`) whose fields
//! are overridden by flags. JSON reports are written with sorted keys.
//! Exit codes: 0 success, 1 error, 2 Lebesgue condition violated.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::data::{self, flatten, flatten_targets, synth_coupling, Dataset, DatasetSpec};
use crate::error::{Error, Result};
use crate::interpolation::{CoefficientVector, RepresenterFunction};
use crate::kernels::{gram_dense, CouplingMatrix, MultiTaskKernel, SampleSet, ScalarKernel};
use crate::lebesgue::{check_admissibility, lebesgue_constant};
use crate::solvers::{
    fit_l1_dense, fit_ridge_dense, metrics, metrics_from_predictions, AdmmParams, FitResult,
    MetricRecord, Task,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATED: i32 = 2;

/// λ grid {10^j : j = −5..1}.
pub fn default_lambda_grid() -> Vec<f64> {
    (-5..=1).map(|j| 10f64.powi(j)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverChoice {
    L1,
    Ridge,
    Both,
}

impl SolverChoice {
    fn names(self) -> &'static [&'static str] {
        match self {
            Self::L1 => &["l1"],
            Self::Ridge => &["ridge"],
            Self::Both => &["l1", "ridge"],
        }
    }
}

impl FromStr for SolverChoice {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l1" => Ok(Self::L1),
            "ridge" => Ok(Self::Ridge),
            "both" => Ok(Self::Both),
            _ => Err(Error::Config(format!("unknown solver `{s}` (l1|ridge|both)"))),
        }
    }
}

/// λ selection criterion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selection {
    /// Training-input MSE, against noise-free targets when the dataset
    /// carries them and against the observed targets otherwise.
    Train,
    /// Training MSE against the observed (possibly noisy) targets.
    Observed,
    /// Test-set MSE; requires `test_dataset`.
    Test,
    /// Training accuracy (classification only); ties go to the larger λ.
    Accuracy,
}

impl FromStr for Selection {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Self::Train),
            "observed" => Ok(Self::Observed),
            "test" => Ok(Self::Test),
            "accuracy" => Ok(Self::Accuracy),
            _ => Err(Error::Config(format!(
                "unknown selection `{s}` (train|observed|test|accuracy)"
            ))),
        }
    }
}

/// Points given inline or by a descriptor string (CSV path or
/// `uniform:<lo>,<hi>,<count>[;<lo>,<hi>,<count>...]`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PointsSource {
    Points(Vec<Vec<f64>>),
    Scalars(Vec<f64>),
    Spec(String),
}

impl PointsSource {
    pub fn resolve(&self) -> Result<Vec<Vec<f64>>> {
        match self {
            Self::Points(p) => Ok(p.clone()),
            Self::Scalars(s) => Ok(s.iter().map(|&v| vec![v]).collect()),
            Self::Spec(s) => match s.trim().strip_prefix("uniform:") {
                Some(body) => uniform_grid(body),
                None => data::read_csv_matrix(Path::new(s.trim()), false),
            },
        }
    }
}

/// Cartesian product of per-dimension linspaces, first dimension outermost.
pub fn uniform_grid(body: &str) -> Result<Vec<Vec<f64>>> {
    let bad = |r: &str| Error::Descriptor {
        descriptor: format!("uniform:{body}"),
        reason: r.to_string(),
    };
    let mut axes = Vec::new();
    for part in body.split(';') {
        let f: Vec<&str> = part.split(',').map(str::trim).collect();
        let [lo, hi, n] = f.as_slice() else {
            return Err(bad("expected <lo>,<hi>,<count> per dimension"));
        };
        let lo: f64 = lo.parse().map_err(|_| bad("lo is not a number"))?;
        let hi: f64 = hi.parse().map_err(|_| bad("hi is not a number"))?;
        let n: usize = n.parse().map_err(|_| bad("count is not an integer"))?;
        if n == 0 || !(hi >= lo) {
            return Err(bad("need count >= 1 and hi >= lo"));
        }
        let axis: Vec<f64> = if n == 1 {
            vec![lo]
        } else {
            (0..n)
                .map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64)
                .collect()
        };
        axes.push(axis);
    }
    let mut grid: Vec<Vec<f64>> = vec![Vec::new()];
    for axis in &axes {
        grid = grid
            .iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    Ok(grid)
}

/// Union of all subcommand settings; every field may come from JSON or flags.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kernel: Option<String>,
    /// `identity:<d>`, `synth`, or a CSV path.
    pub coupling: Option<String>,
    pub dataset: Option<String>,
    pub test_dataset: Option<String>,
    pub header: bool,
    pub task: Option<Task>,
    pub lambda_grid: Option<Vec<f64>>,
    pub solver: Option<SolverChoice>,
    pub select: Option<Selection>,
    pub admm: Option<AdmmParams>,
    pub seed: Option<u64>,
    pub points: Option<PointsSource>,
    pub configurations: Option<Vec<PointsSource>>,
    pub grid: Option<PointsSource>,
    pub model: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn require<'a, T>(field: &'a Option<T>, name: &str) -> Result<&'a T> {
        field
            .as_ref()
            .ok_or_else(|| Error::Config(format!("missing `{name}`")))
    }

    pub fn scalar_kernel(&self) -> Result<ScalarKernel> {
        self.kernel.as_deref().unwrap_or("exponential:r=1.0").parse()
    }

    /// Coupling matrix; defaults to the identity of size `d`.
    pub fn coupling_matrix(&self, d: usize) -> Result<CouplingMatrix> {
        let c = match self.coupling.as_deref() {
            None => CouplingMatrix::identity(d)?,
            Some("synth") => CouplingMatrix::new(synth_coupling())?,
            Some(desc) => CouplingMatrix::from_descriptor(desc)?,
        };
        if c.dim() != d {
            return Err(Error::DimensionMismatch {
                context: "coupling matrix size vs output dimension",
                expected: d,
                found: c.dim(),
            });
        }
        Ok(c)
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>> {
        let grid = self.lambda_grid.clone().unwrap_or_else(default_lambda_grid);
        if grid.is_empty() {
            return Err(Error::Config("lambda_grid is empty".into()));
        }
        if let Some(l) = grid.iter().find(|l| !(**l > 0.0 && l.is_finite())) {
            return Err(Error::Config(format!("lambda_grid entries must be positive, got {l}")));
        }
        Ok(grid)
    }

    fn dataset_spec(&self, raw: &str) -> Result<DatasetSpec> {
        let mut spec: DatasetSpec = raw.parse()?;
        match &mut spec {
            DatasetSpec::Synth(s) => {
                if let Some(seed) = self.seed {
                    s.noise.seed = seed;
                }
            }
            DatasetSpec::Csv { header, .. } => *header |= self.header,
            DatasetSpec::Idx { .. } => {}
        }
        Ok(spec)
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        let ds = self.dataset_spec(Self::require(&self.dataset, "dataset")?)?.load()?;
        if ds.is_empty() {
            return Err(Error::Empty("dataset"));
        }
        Ok(ds)
    }

    pub fn load_test_dataset(&self) -> Result<Option<Dataset>> {
        self.test_dataset
            .as_deref()
            .map(|s| {
                let ds = self.dataset_spec(s)?.load()?;
                if ds.is_empty() {
                    return Err(Error::Empty("test dataset"));
                }
                Ok(ds)
            })
            .transpose()
    }
}

#[derive(Debug, Parser)]
#[command(name = "mtkernel", version, about = "Sparse multi-task kernel learning toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lebesgue function over a grid; exit 2 if the strict condition fails.
    Lebesgue(CommonArgs),
    /// Non-singularity per configuration and the boundedness estimate.
    Admissibility(CommonArgs),
    /// Fit l1 / ridge models over the lambda grid.
    Fit(CommonArgs),
    /// Predict with a fitted model and report metrics.
    Predict(CommonArgs),
    /// Metrics of a fitted model on a dataset, without predictions.
    Eval(CommonArgs),
    /// Write the synthetic dataset as a features/targets CSV pair.
    Synth(CommonArgs),
}

#[derive(Debug, Args, Default)]
pub struct CommonArgs {
    /// JSON config file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// exponential:r=<r> | gaussian:gamma=<g> | brownian_motion | brownian_bridge.
    #[arg(long)]
    pub kernel: Option<String>,
    /// identity:<d> | synth | CSV path of the d×d coupling matrix.
    #[arg(long)]
    pub coupling: Option<String>,
    /// csv:<f>,<t>[,header] | idx:<images>,<labels>[,keep=6;8;9] | synth:...
    #[arg(long)]
    pub dataset: Option<String>,
    #[arg(long)]
    pub test_dataset: Option<String>,
    #[arg(long)]
    pub header: bool,
    /// regression | classification.
    #[arg(long)]
    pub task: Option<Task>,
    /// Repeat to build the lambda grid.
    #[arg(long = "lambda")]
    pub lambdas: Vec<f64>,
    /// l1 | ridge | both.
    #[arg(long)]
    pub solver: Option<SolverChoice>,
    /// train | observed | test | accuracy.
    #[arg(long)]
    pub select: Option<Selection>,
    #[arg(long)]
    pub rho: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub eps_abs: Option<f64>,
    #[arg(long)]
    pub eps_rel: Option<f64>,
    #[arg(long)]
    pub adaptive_rho: bool,
    /// Noise seed for synth: datasets.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Sample points: CSV path.
    #[arg(long)]
    pub points: Option<String>,
    /// Grid: CSV path or uniform:<lo>,<hi>,<count>[;...].
    #[arg(long)]
    pub grid: Option<String>,
    /// model_<solver>.json written by fit.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Output file (lebesgue, admissibility, eval) or directory.
    #[arg(long)]
    pub output: Option<PathBuf>,
}

impl CommonArgs {
    /// Loads `--config` (if any) and applies flag overrides.
    pub fn resolve(&self) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! over {
            ($($f:ident),*) => { $( if self.$f.is_some() { c.$f = self.$f.clone(); } )* };
        }
        over!(kernel, coupling, dataset, test_dataset, task, solver, select, seed, model, output);
        c.header |= self.header;
        if !self.lambdas.is_empty() {
            c.lambda_grid = Some(self.lambdas.clone());
        }
        if let Some(p) = &self.points {
            c.points = Some(PointsSource::Spec(p.clone()));
        }
        if let Some(g) = &self.grid {
            c.grid = Some(PointsSource::Spec(g.clone()));
        }
        if self.rho.is_some()
            || self.max_iters.is_some()
            || self.eps_abs.is_some()
            || self.eps_rel.is_some()
            || self.adaptive_rho
        {
            let mut a = c.admm.unwrap_or_default();
            if let Some(v) = self.rho {
                a.rho = v;
            }
            if let Some(v) = self.max_iters {
                a.max_iters = v;
            }
            if let Some(v) = self.eps_abs {
                a.eps_abs = v;
            }
            if let Some(v) = self.eps_rel {
                a.eps_rel = v;
            }
            a.adaptive_rho |= self.adaptive_rho;
            c.admm = Some(a);
        }
        Ok(c)
    }
}

/// Parses `args` (including the program name) and runs the subcommand.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Lebesgue(a) => a.resolve().and_then(|c| cmd_lebesgue(&c)),
        Command::Admissibility(a) => a.resolve().and_then(|c| cmd_admissibility(&c)),
        Command::Fit(a) => a.resolve().and_then(|c| cmd_fit(&c)),
        Command::Predict(a) => a.resolve().and_then(|c| cmd_predict(&c)),
        Command::Eval(a) => a.resolve().and_then(|c| cmd_eval(&c)),
        Command::Synth(a) => a.resolve().and_then(|c| cmd_synth(&c)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ERROR
        }
    }
}

/// Serializes with sorted object keys.
pub fn to_sorted_json<T: Serialize>(value: &T) -> Result<String> {
    let v: Value = serde_json::to_value(value)?;
    let mut s = serde_json::to_string_pretty(&v)?;
    s.push('\n');
    Ok(s)
}

fn emit_json<T: Serialize>(value: &T, output: Option<&Path>) -> Result<()> {
    let text = to_sorted_json(value)?;
    match output {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
                fs::create_dir_all(parent)?;
            }
            fs::write(p, text)?;
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn lebesgue_inputs(c: &ExperimentConfig) -> Result<(MultiTaskKernel, Vec<Vec<f64>>)> {
    let scalar = c.scalar_kernel()?;
    let d = match c.coupling.as_deref() {
        None => 1,
        Some("synth") => 3,
        Some(desc) => CouplingMatrix::from_descriptor(desc)?.dim(),
    };
    let kernel = MultiTaskKernel::new(scalar, c.coupling_matrix(d)?);
    let grid = ExperimentConfig::require(&c.grid, "grid")?.resolve()?;
    if grid.is_empty() {
        return Err(Error::Empty("evaluation grid"));
    }
    Ok((kernel, grid))
}

/// Writes a Lebesgue report; exit 0 when the strict condition holds on the
/// grid and 2 when it is violated.
pub fn cmd_lebesgue(c: &ExperimentConfig) -> Result<i32> {
    let (kernel, grid) = lebesgue_inputs(c)?;
    let points = ExperimentConfig::require(&c.points, "points")?.resolve()?;
    let x = SampleSet::new(points)?;
    let report = lebesgue_constant(&kernel, &x, &grid)?;
    emit_json(&report, c.output.as_deref())?;
    Ok(if report.satisfies_strict {
        EXIT_OK
    } else {
        EXIT_VIOLATED
    })
}

pub fn cmd_admissibility(c: &ExperimentConfig) -> Result<i32> {
    let (kernel, grid) = lebesgue_inputs(c)?;
    let configs = match (&c.configurations, &c.points) {
        (Some(list), _) => list.iter().map(PointsSource::resolve).collect::<Result<Vec<_>>>()?,
        (None, Some(p)) => vec![p.resolve()?],
        (None, None) => return Err(Error::Config("missing `configurations` or `points`".into())),
    };
    if configs.is_empty() {
        return Err(Error::Config("`configurations` is empty".into()));
    }
    let report = check_admissibility(&kernel, &configs, &grid);
    emit_json(&report, c.output.as_deref())?;
    Ok(EXIT_OK)
}

/// One fitted λ in the metrics report.
#[derive(Clone, Debug, Serialize)]
pub struct FitRecord {
    pub lambda: f64,
    pub objective: f64,
    pub train_mse: f64,
    pub train_mse_clean: Option<f64>,
    pub train_accuracy: Option<f64>,
    pub test_mse: Option<f64>,
    pub test_accuracy: Option<f64>,
    pub sparsity: usize,
    pub iterations: usize,
    pub converged: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct SolverReport {
    pub fits: Vec<FitRecord>,
    pub selected_lambda: f64,
    /// Selection criterion value at the chosen λ (MSE, or error rate for
    /// accuracy selection).
    pub selection_score: f64,
    pub model_file: String,
    pub test: Option<MetricRecord>,
}

#[derive(Clone, Debug, Serialize)]
pub struct FitReport {
    pub kernel: String,
    pub coupling: Vec<Vec<f64>>,
    pub dataset: String,
    pub test_dataset: Option<String>,
    pub task: Task,
    pub select: Selection,
    pub selection_targets: &'static str,
    pub points: usize,
    pub outputs: usize,
    pub lambda_grid: Vec<f64>,
    pub admm: AdmmParams,
    pub solvers: std::collections::BTreeMap<String, SolverReport>,
}

/// Everything needed to evaluate a fitted model; coefficients live in the
/// CSV named by `coefficients_csv` (relative to this file).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ModelFile {
    pub solver: String,
    pub lambda: f64,
    pub task: Task,
    pub kernel: String,
    pub coupling: Vec<Vec<f64>>,
    pub centers: Vec<Vec<f64>>,
    pub class_names: Option<Vec<String>>,
    pub coefficients_csv: String,
}

/// Coefficient CSV rows `block,task,value` (0-based indices, header line).
pub fn write_coefficients_csv(path: &Path, c: &CoefficientVector) -> Result<()> {
    let mut out = String::from("block,task,value\n");
    for (j, block) in c.blocks().enumerate() {
        for (t, v) in block.iter().enumerate() {
            out.push_str(&format!("{j},{t},{v:?}\n"));
        }
    }
    fs::write(path, out)?;
    Ok(())
}

pub fn read_coefficients_csv(path: &Path, points: usize, outputs: usize) -> Result<CoefficientVector> {
    let rows = data::read_csv_matrix(path, true)?;
    let mut values = vec![0.0; points * outputs];
    for (i, r) in rows.iter().enumerate() {
        let bad = || Error::Config(format!("{}: malformed coefficient row {}", path.display(), i + 2));
        let [j, t, v] = r.as_slice() else { return Err(bad()) };
        let (j, t) = (*j as usize, *t as usize);
        if j >= points || t >= outputs || j as f64 != r[0] || t as f64 != r[1] {
            return Err(bad());
        }
        values[j * outputs + t] = *v;
    }
    CoefficientVector::new(values, outputs)
}

impl ModelFile {
    pub fn load(path: &Path) -> Result<(Self, RepresenterFunction)> {
        let meta: ModelFile = serde_json::from_str(&fs::read_to_string(path)?)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let kernel = MultiTaskKernel::new(meta.kernel.parse()?, CouplingMatrix::from_rows(&meta.coupling)?);
        let x = SampleSet::new(meta.centers.clone())?;
        let csv = path
            .parent()
            .unwrap_or(Path::new("."))
            .join(&meta.coefficients_csv);
        let coeffs = read_coefficients_csv(&csv, x.len(), kernel.outputs())?;
        let f = RepresenterFunction::new(kernel, x, coeffs)?;
        Ok((meta, f))
    }
}

fn mse(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>() / a.len().max(1) as f64
}

/// Fits every requested solver over the λ grid, selects λ, and writes
/// `metrics.json` plus `model_<solver>.{csv,json}` into the output directory.
pub fn cmd_fit(c: &ExperimentConfig) -> Result<i32> {
    let out_dir = ExperimentConfig::require(&c.output, "output")?.clone();
    let train = c.load_dataset()?;
    let test = c.load_test_dataset()?;
    let task = c.task.unwrap_or(Task::Regression);
    let select = c.select.unwrap_or(match task {
        Task::Regression => Selection::Train,
        Task::Classification => Selection::Accuracy,
    });
    let solver = c.solver.unwrap_or(SolverChoice::Both);
    let lambdas = c.lambda_grid()?;
    let admm = c.admm.unwrap_or_default();
    admm.validate()?;
    let scalar = c.scalar_kernel()?;
    let d = train.output_dim();
    let kernel = MultiTaskKernel::new(scalar, c.coupling_matrix(d)?);
    if let Some(t) = &test {
        if t.input_dim() != train.input_dim() || t.output_dim() != d {
            return Err(Error::DimensionMismatch {
                context: "test dataset vs training dataset",
                expected: train.input_dim(),
                found: t.input_dim(),
            });
        }
    }
    if select == Selection::Test && test.is_none() {
        return Err(Error::Config("select=test requires `test_dataset`".into()));
    }
    if select == Selection::Accuracy && task != Task::Classification {
        return Err(Error::Config("select=accuracy requires task=classification".into()));
    }

    let x = SampleSet::new(train.features.clone())?;
    let y = flatten_targets(&train);
    let clean = train.clean_targets.as_deref().map(flatten);
    let k = gram_dense(&kernel, &x)?;
    let (selection_targets, sel_y): (&'static str, &[f64]) = match (select, &clean) {
        (Selection::Train, Some(cl)) => ("noise_free_train", cl),
        (Selection::Test, _) => ("test", &[]),
        (Selection::Accuracy, _) => ("train_accuracy", &[]),
        _ => ("observed_train", &y),
    };

    fs::create_dir_all(&out_dir)?;
    let mut solvers = std::collections::BTreeMap::new();
    for &name in solver.names() {
        let fits: Vec<FitResult> = lambdas
            .par_iter()
            .map(|&lam| match name {
                "l1" => fit_l1_dense(&kernel, &x, &k, &y, lam, &admm),
                _ => fit_ridge_dense(&kernel, &x, &k, &y, lam),
            })
            .collect::<Result<_>>()?;
        let mut records = Vec::with_capacity(fits.len());
        let mut scores = Vec::with_capacity(fits.len());
        for f in &fits {
            let pred = f.model.evaluate_many(&train.features)?;
            let train_m = metrics_from_predictions(&pred, &y, d, task, train.class_names.as_deref())?;
            let test_m = test
                .as_ref()
                .map(|t| metrics(&f.model, &t.features, &flatten_targets(t), task, t.class_names.as_deref()))
                .transpose()?;
            let score = match select {
                Selection::Test => test_m.as_ref().map_or(f64::INFINITY, |m| m.mse),
                Selection::Accuracy => 1.0 - train_m.accuracy.unwrap_or(0.0),
                _ => mse(&pred, sel_y),
            };
            scores.push(score);
            records.push(FitRecord {
                lambda: f.lambda,
                objective: f.objective,
                train_mse: train_m.mse,
                train_mse_clean: clean.as_ref().map(|cl| mse(&pred, cl)),
                train_accuracy: train_m.accuracy,
                test_mse: test_m.as_ref().map(|m| m.mse),
                test_accuracy: test_m.as_ref().and_then(|m| m.accuracy),
                sparsity: f.sparsity,
                iterations: f.iterations,
                converged: f.converged,
            });
        }
        let mut order: Vec<usize> = (0..fits.len()).collect();
        order.sort_by(|&a, &b| fits[a].lambda.total_cmp(&fits[b].lambda));
        // Lowest score wins; ties go to the smaller λ, or the larger one for
        // accuracy where whole plateaus tie.
        let candidates: Box<dyn Iterator<Item = usize>> = if select == Selection::Accuracy {
            Box::new(order.iter().rev().copied())
        } else {
            Box::new(order.iter().copied())
        };
        let best = candidates
            .min_by(|&a, &b| scores[a].total_cmp(&scores[b]))
            .expect("nonempty lambda grid");
        let chosen = &fits[best];
        let csv_name = format!("model_{name}.csv");
        write_coefficients_csv(&out_dir.join(&csv_name), &chosen.model.coefficients)?;
        let model_name = format!("model_{name}.json");
        let meta = ModelFile {
            solver: name.to_string(),
            lambda: chosen.lambda,
            task,
            kernel: kernel.scalar.to_string(),
            coupling: kernel.coupling.rows(),
            centers: train.features.clone(),
            class_names: train.class_names.clone(),
            coefficients_csv: csv_name,
        };
        emit_json(&meta, Some(&out_dir.join(&model_name)))?;
        let test_record = test
            .as_ref()
            .map(|t| metrics(&chosen.model, &t.features, &flatten_targets(t), task, t.class_names.as_deref()))
            .transpose()?;
        solvers.insert(
            name.to_string(),
            SolverReport {
                fits: order.iter().map(|&i| records[i].clone()).collect(),
                selected_lambda: chosen.lambda,
                selection_score: scores[best],
                model_file: model_name,
                test: test_record,
            },
        );
    }
    let report = FitReport {
        kernel: kernel.scalar.to_string(),
        coupling: kernel.coupling.rows(),
        dataset: train.provenance.clone(),
        test_dataset: test.as_ref().map(|t| t.provenance.clone()),
        task,
        select,
        selection_targets,
        points: train.len(),
        outputs: d,
        lambda_grid: lambdas,
        admm,
        solvers,
    };
    emit_json(&report, Some(&out_dir.join("metrics.json")))?;
    Ok(EXIT_OK)
}

fn model_and_dataset(c: &ExperimentConfig) -> Result<(ModelFile, RepresenterFunction, Dataset, Task)> {
    let model_path = ExperimentConfig::require(&c.model, "model")?;
    let (meta, f) = ModelFile::load(model_path)?;
    let ds = c.load_dataset()?;
    if ds.input_dim() != f.samples.dim() || ds.output_dim() != f.kernel.outputs() {
        return Err(Error::DimensionMismatch {
            context: "dataset vs model (inputs)",
            expected: f.samples.dim(),
            found: ds.input_dim(),
        });
    }
    let task = c.task.unwrap_or(meta.task);
    Ok((meta, f, ds, task))
}

fn dataset_metrics(meta: &ModelFile, f: &RepresenterFunction, ds: &Dataset, task: Task) -> Result<(Vec<f64>, MetricRecord)> {
    let pred = f.evaluate_many(&ds.features)?;
    let names = ds.class_names.as_deref().or(meta.class_names.as_deref());
    let mut m = metrics_from_predictions(&pred, &flatten_targets(ds), f.kernel.outputs(), task, names)?;
    m.sparsity = f.coefficients.nnz();
    Ok((pred, m))
}

/// Writes `predictions.csv`, `metrics.json` and, for classification,
/// `misclassified.csv` (number,true_label,predicted_label; numbers from 1).
pub fn cmd_predict(c: &ExperimentConfig) -> Result<i32> {
    let out_dir = ExperimentConfig::require(&c.output, "output")?.clone();
    let (meta, f, ds, task) = model_and_dataset(c)?;
    let (pred, m) = dataset_metrics(&meta, &f, &ds, task)?;
    fs::create_dir_all(&out_dir)?;
    data::write_csv_matrix(&out_dir.join("predictions.csv"), &data::unflatten(&pred, f.kernel.outputs())?)?;
    if task == Task::Classification {
        let mut s = String::from("number,true_label,predicted_label\n");
        for w in &m.misclassified {
            s.push_str(&format!("{},{},{}\n", w.number, w.true_label, w.predicted_label));
        }
        fs::write(out_dir.join("misclassified.csv"), s)?;
    }
    emit_json(&m, Some(&out_dir.join("metrics.json")))?;
    Ok(EXIT_OK)
}

pub fn cmd_eval(c: &ExperimentConfig) -> Result<i32> {
    let (meta, f, ds, task) = model_and_dataset(c)?;
    let (_, m) = dataset_metrics(&meta, &f, &ds, task)?;
    emit_json(&m, c.output.as_deref())?;
    Ok(EXIT_OK)
}

/// Writes `features.csv`, `targets.csv` and `clean_targets.csv`.
pub fn cmd_synth(c: &ExperimentConfig) -> Result<i32> {
    let out_dir = ExperimentConfig::require(&c.output, "output")?;
    let raw = c.dataset.as_deref().unwrap_or("synth:h=0.1,noise=gaussian,var=0.01,seed=42");
    let spec = match c.dataset_spec(raw)? {
        DatasetSpec::Synth(s) => s,
        _ => return Err(Error::Config("synth expects a synth: dataset spec".into())),
    };
    let ds = data::generate_synthetic(&spec)?;
    fs::create_dir_all(out_dir)?;
    data::write_csv_matrix(&out_dir.join("features.csv"), &ds.features)?;
    data::write_csv_matrix(&out_dir.join("targets.csv"), &ds.targets)?;
    if let Some(clean) = &ds.clean_targets {
        data::write_csv_matrix(&out_dir.join("clean_targets.csv"), clean)?;
    }
    Ok(EXIT_OK)
}
