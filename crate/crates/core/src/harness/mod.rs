//! Seeded training runs, replicate studies and one-axis sweeps.
//!
//! CSV schemas:
//!
//! * metrics: `step,train_loss,test_loss,train_acc,test_acc,ktemp1,ktemp2,wall_ms`
//! * replicate summary: `run,seed,final_test_acc,diverged`
//! * sweep table: `axis_value,mean_acc,var_acc,n_ok,n_diverged`
//!
//! A run directory holds `config.txt`, `metrics.csv`, `init.snap`,
//! `final.snap`, `run.txt` (grad-eval counts, divergence) and, when
//! `checkpoint_interval > 0`, `checkpoint_<step>.snap`.

mod config;

pub use config::{streams, DataConfig, DataKind, ExperimentConfig, InitKind, MnistPaths, ModelConfig};

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;

use crate::analysis::state_temperatures;
use crate::data::{Dataset, MinibatchSampler};
use crate::error::{Error, Result};
use crate::integrators::{step, DynamicsState};
use crate::model::{evaluate, init_params, neg_grad_into, posterior_mean_predict, write_snapshot, NetworkSpec, PartitionedParams};
use crate::prng::RngStream;

/// Largest parameter magnitude tolerated before a run is declared diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvalRow {
    pub step: u64,
    pub train_loss: f64,
    pub test_loss: f64,
    pub train_acc: f64,
    pub test_acc: f64,
    pub ktemp: [f64; 2],
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunMetrics {
    pub rows: Vec<EvalRow>,
    pub initial: PartitionedParams,
    pub final_params: PartitionedParams,
    pub checkpoints: Vec<(u64, PartitionedParams)>,
    /// Test accuracy of the posterior-mean predictor over parameters taken
    /// every `eval_interval` steps in the trailing `posterior_window` steps.
    pub posterior_test_acc: Option<f64>,
    /// Step at which the divergence guard fired.
    pub diverged_at: Option<u64>,
    pub grad_evals: u64,
    pub priming_evals: u64,
}

impl RunMetrics {
    pub fn diverged(&self) -> bool {
        self.diverged_at.is_some()
    }

    /// Test accuracy of the last evaluation row, NaN for diverged runs.
    pub fn final_test_acc(&self) -> f64 {
        if self.diverged() {
            return f64::NAN;
        }
        self.rows.last().map_or(f64::NAN, |r| r.test_acc)
    }

    pub fn metrics_csv(&self) -> String {
        let mut s = String::from("step,train_loss,test_loss,train_acc,test_acc,ktemp1,ktemp2,wall_ms\n");
        for r in &self.rows {
            writeln!(
                s,
                "{},{},{},{},{},{},{},{}",
                r.step, r.train_loss, r.test_loss, r.train_acc, r.test_acc, r.ktemp[0], r.ktemp[1], r.wall_ms
            )
            .unwrap();
        }
        s
    }

    fn run_txt(&self) -> String {
        let mut s = String::new();
        writeln!(s, "grad_evals = {}", self.grad_evals).unwrap();
        writeln!(s, "priming_evals = {}", self.priming_evals).unwrap();
        writeln!(s, "diverged = {}", self.diverged()).unwrap();
        if let Some(step) = self.diverged_at {
            writeln!(s, "diverged_at = {step}").unwrap();
        }
        if let Some(acc) = self.posterior_test_acc {
            writeln!(s, "posterior_test_acc = {acc}").unwrap();
        }
        s
    }

    pub fn write_to(&self, dir: &Path, config: &ExperimentConfig) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("config.txt"), config.to_text().as_bytes())?;
        write_file(&dir.join("metrics.csv"), self.metrics_csv().as_bytes())?;
        write_file(&dir.join("run.txt"), self.run_txt().as_bytes())?;
        write_snapshot(dir.join("init.snap"), &self.initial)?;
        write_snapshot(dir.join("final.snap"), &self.final_params)?;
        for (step, p) in &self.checkpoints {
            write_snapshot(dir.join(format!("checkpoint_{step}.snap")), p)?;
        }
        Ok(())
    }
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn eval_row(
    spec: &NetworkSpec,
    theta: &[f64],
    state: &DynamicsState,
    train: &Dataset,
    test: &Dataset,
    step: u64,
    clock: Option<&Instant>,
) -> EvalRow {
    let (train_loss, train_acc) = evaluate(spec, theta, train);
    let (test_loss, test_acc) = evaluate(spec, theta, test);
    EvalRow {
        step,
        train_loss,
        test_loss,
        train_acc,
        test_acc,
        ktemp: state_temperatures(state),
        wall_ms: clock.map_or(0.0, |c| c.elapsed().as_secs_f64() * 1e3),
    }
}

fn out_of_bounds(theta: &[f64]) -> bool {
    theta.iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT))
}

/// One training run on data generated from the config's seed.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunMetrics> {
    config.validate()?;
    let (train, test) = config.build_data()?;
    let metrics = run_on(config, &train, &test, None)?;
    if let Some(dir) = &config.out {
        metrics.write_to(dir, config)?;
    }
    Ok(metrics)
}

/// Training loop on given data. `initial` overrides the seeded
/// initialization.
pub fn run_on(
    config: &ExperimentConfig,
    train: &Dataset,
    test: &Dataset,
    initial: Option<&PartitionedParams>,
) -> Result<RunMetrics> {
    config.validate()?;
    let spec = config.network_spec();
    if train.dim() != spec.inputs || test.dim() != spec.inputs {
        return Err(Error::ShapeMismatch {
            expected: spec.inputs,
            actual: train.dim(),
        });
    }
    let root = RngStream::new(config.seed);
    let init = match initial {
        Some(p) => {
            if p.spec() != &spec {
                return Err(Error::Config("initial parameters do not match the network shape".into()));
            }
            p.clone()
        }
        None => init_params(spec, config.init_scheme(), &mut root.substream(streams::INIT))?,
    };
    let mut batch_stream = root.substream(streams::BATCHES);
    let mut noise = root.substream(streams::NOISE);
    let mut sampler = MinibatchSampler::new(train.len(), config.data.batch_fraction)?;
    let mut theta = init.as_slice().to_vec();
    let mut state = DynamicsState::new(spec.partitions());
    let clock = config.timing.then(Instant::now);

    let mut rows = vec![eval_row(&spec, &theta, &state, train, test, 0, clock.as_ref())];
    let mut checkpoints = Vec::new();
    let mut window = Vec::new();
    let window_start = config.n_steps.saturating_sub(config.posterior_window);
    let mut diverged_at = None;

    for n in 1..=config.n_steps {
        let batch = sampler.sample(&mut batch_stream);
        let mut grad = |t: &[f64], out: &mut [f64]| neg_grad_into(&spec, t, train, batch, out);
        step(&config.integrator, &mut theta, &mut state, &mut grad, &mut noise)?;

        if out_of_bounds(&theta) {
            diverged_at = Some(n);
            break;
        }
        if n % config.eval_interval == 0 || n == config.n_steps {
            let row = eval_row(&spec, &theta, &state, train, test, n, clock.as_ref());
            if !(row.train_loss.is_finite() && row.test_loss.is_finite()) {
                diverged_at = Some(n);
                break;
            }
            rows.push(row);
        }
        if config.checkpoint_interval > 0 && n % config.checkpoint_interval == 0 {
            checkpoints.push((n, PartitionedParams::from_flat(spec, theta.clone())?));
        }
        if config.posterior_window > 0 && n > window_start {
            if (n - window_start) % config.eval_interval == 0 {
                window.push(PartitionedParams::from_flat(spec, theta.clone())?);
            }
        }
    }

    let posterior_test_acc = if diverged_at.is_none() && !window.is_empty() {
        let mut correct = 0usize;
        for i in 0..test.len() {
            correct += usize::from(posterior_mean_predict(&window, test.input(i))?.class() == test.label(i));
        }
        Some(correct as f64 / test.len() as f64)
    } else {
        None
    };

    Ok(RunMetrics {
        rows,
        initial: init,
        final_params: PartitionedParams::from_flat(spec, theta)?,
        checkpoints,
        posterior_test_acc,
        diverged_at,
        grad_evals: state.grad_evals,
        priming_evals: state.priming_evals,
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunSummary {
    pub run: usize,
    pub seed: u64,
    pub final_test_acc: f64,
    pub diverged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicateSummary {
    pub runs: Vec<RunSummary>,
    /// Mean over non-diverged runs.
    pub mean: f64,
    /// Unbiased sample variance over non-diverged runs (NaN below 2).
    pub variance: f64,
    pub n_ok: usize,
    pub n_diverged: usize,
}

impl ReplicateSummary {
    pub fn from_runs(runs: Vec<RunSummary>) -> Self {
        let finals: Vec<f64> = runs.iter().filter(|r| !r.diverged).map(|r| r.final_test_acc).collect();
        let (mean, variance) = mean_and_variance(&finals);
        let n_ok = finals.len();
        Self {
            n_diverged: runs.len() - n_ok,
            runs,
            mean,
            variance,
            n_ok,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("run,seed,final_test_acc,diverged\n");
        for r in &self.runs {
            writeln!(s, "{},{},{},{}", r.run, r.seed, r.final_test_acc, r.diverged).unwrap();
        }
        s
    }
}

/// Sample mean and unbiased variance; NaN where undefined.
pub fn mean_and_variance(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var)
}

/// Runs `seed, seed+1, …, seed+n_runs−1`. Run failures count as diverged.
/// With `out` set, run `i` writes to `out/run_<i>` and the summary to
/// `out/summary.csv`.
pub fn replicate(config: &ExperimentConfig, n_runs: usize) -> Result<ReplicateSummary> {
    if n_runs < 2 {
        return Err(Error::Config(format!("replicate needs at least 2 runs, got {n_runs}")));
    }
    replicate_runs(config, n_runs)
}

fn replicate_runs(config: &ExperimentConfig, n_runs: usize) -> Result<ReplicateSummary> {
    config.validate()?;
    let one = |i: usize| {
        let mut c = config.clone();
        c.seed = config.seed.wrapping_add(i as u64);
        c.out = config.out.as_ref().map(|o| o.join(format!("run_{i}")));
        let result = run_experiment(&c);
        let (acc, diverged) = match &result {
            Ok(m) => (m.final_test_acc(), m.diverged()),
            Err(_) => (f64::NAN, true),
        };
        RunSummary {
            run: i,
            seed: c.seed,
            final_test_acc: acc,
            diverged,
        }
    };
    let runs: Vec<RunSummary> = if config.parallel {
        (0..n_runs).into_par_iter().map(one).collect()
    } else {
        (0..n_runs).map(one).collect()
    };
    let summary = ReplicateSummary::from_runs(runs);
    if let Some(dir) = &config.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("summary.csv"), summary.to_csv().as_bytes())?;
    }
    Ok(summary)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub axis: String,
    pub rows: Vec<(String, ReplicateSummary)>,
}

impl SweepTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("axis_value,mean_acc,var_acc,n_ok,n_diverged\n");
        for (v, r) in &self.rows {
            writeln!(s, "{v},{},{},{},{}", r.mean, r.variance, r.n_ok, r.n_diverged).unwrap();
        }
        s
    }
}

/// One replicate study (of `n_replicates` runs) per axis value. With `out`
/// set, value `k` writes under `out/value_<k>` and the table goes to
/// `out/sweep.csv`.
pub fn sweep(base: &ExperimentConfig, axis: &str, values: &[String]) -> Result<SweepTable> {
    if values.is_empty() {
        return Err(Error::Config("sweep needs at least one value".into()));
    }
    let mut configs = Vec::with_capacity(values.len());
    for (k, v) in values.iter().enumerate() {
        let mut c = base.clone();
        c.set(axis, v)?;
        c.out = base.out.as_ref().map(|o| o.join(format!("value_{k}")));
        c.validate()?;
        configs.push(c);
    }
    let mut rows = Vec::with_capacity(values.len());
    for (v, c) in values.iter().zip(&configs) {
        rows.push((v.clone(), replicate_runs(c, c.n_replicates)?));
    }
    let table = SweepTable {
        axis: axis.to_string(),
        rows,
    };
    if let Some(dir) = &base.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_file(&dir.join("sweep.csv"), table.to_csv().as_bytes())?;
    }
    Ok(table)
}
