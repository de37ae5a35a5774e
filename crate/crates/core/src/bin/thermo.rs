use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use thermo_core::analysis::{
    classifier_grid, interpolate_1d, surface_2d, Bounds, DEFAULT_CURVE_POINTS, DEFAULT_GRID_RESOLUTION,
    DEFAULT_SURFACE_POINTS,
};
use thermo_core::data::Dataset;
use thermo_core::harness::{replicate, run_experiment, sweep, ExperimentConfig};
use thermo_core::model::{loss, read_snapshot, PartitionedParams};
use thermo_core::Error;

/// Langevin-family training of single-hidden-layer networks.
#[derive(Parser)]
#[command(name = "thermo", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// `key=value` override, applied after the config file. Repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    sets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// One training run.
    Train,
    /// Runs seeds `seed … seed+runs-1` and summarizes final test accuracy.
    Replicate {
        /// Defaults to `n_replicates`.
        #[arg(long)]
        runs: Option<usize>,
    },
    /// One replicate study per value of a config key.
    Sweep {
        #[arg(long)]
        axis: String,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', required = true)]
        values: Vec<String>,
    },
    /// Loss along the segment between two snapshots.
    #[command(name = "probe-1d")]
    Probe1d {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CURVE_POINTS)]
        points: usize,
        #[command(flatten)]
        split: SplitArg,
    },
    /// Loss over the bilinear patch spanned by a start and two end snapshots.
    #[command(name = "probe-2d")]
    Probe2d {
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to1: PathBuf,
        #[arg(long)]
        to2: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
        alpha_points: usize,
        #[arg(long, default_value_t = DEFAULT_SURFACE_POINTS)]
        beta_points: usize,
        #[command(flatten)]
        split: SplitArg,
    },
    /// Class-1 probability over a planar grid.
    #[command(name = "classifier-grid")]
    ClassifierGrid {
        #[arg(long)]
        params: PathBuf,
        /// `x_min,x_max,y_min,y_max`; defaults to the training data extent plus 10%.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        bounds: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_GRID_RESOLUTION)]
        resolution: usize,
    },
    /// Writes the configured train and test sets as CSV.
    Datagen,
}

#[derive(Args)]
struct SplitArg {
    /// Dataset the probe loss is evaluated on.
    #[arg(long, value_enum, default_value_t = Split::Train)]
    split: Split,
}

#[derive(Clone, Copy, ValueEnum)]
enum Split {
    Train,
    Test,
}

fn load_config(cli: &Cli) -> thermo_core::Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(p) => ExperimentConfig::from_file(p)?,
        None => ExperimentConfig::default(),
    };
    for s in &cli.sets {
        cfg.apply_override(s)?;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = Some(out.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Writes `text` to `dir/name` when an output directory is set, otherwise to stdout.
fn emit(dir: Option<&Path>, name: &str, text: &str) -> anyhow::Result<()> {
    match dir {
        Some(d) => {
            std::fs::create_dir_all(d).with_context(|| format!("creating {}", d.display()))?;
            let path = d.join(name);
            std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn probe_data(cfg: &ExperimentConfig, split: Split) -> anyhow::Result<Dataset> {
    let (train, test) = cfg.build_data()?;
    Ok(match split {
        Split::Train => train,
        Split::Test => test,
    })
}

fn snapshot(path: &Path, cfg: &ExperimentConfig) -> anyhow::Result<PartitionedParams> {
    let p = read_snapshot(path)?;
    if p.spec().inputs != cfg.network_spec().inputs {
        bail!("{} does not match the configured network inputs", path.display());
    }
    Ok(p)
}

fn run(cli: &Cli, cfg: ExperimentConfig) -> anyhow::Result<()> {
    let out = cfg.out.clone();
    match &cli.command {
        Command::Train => {
            let m = run_experiment(&cfg)?;
            if out.is_none() {
                print!("{}", m.metrics_csv());
            }
            eprintln!(
                "final test acc {:.4}, grad evals {}, diverged {}",
                m.final_test_acc(),
                m.grad_evals,
                m.diverged()
            );
        }
        Command::Replicate { runs } => {
            let s = replicate(&cfg, runs.unwrap_or(cfg.n_replicates))?;
            if out.is_none() {
                print!("{}", s.to_csv());
            }
            eprintln!(
                "mean {:.4}, variance {:.3e}, ok {}, diverged {}",
                s.mean, s.variance, s.n_ok, s.n_diverged
            );
        }
        Command::Sweep { axis, values } => {
            let t = sweep(&cfg, axis, values)?;
            if out.is_none() {
                print!("{}", t.to_csv());
            }
        }
        Command::Probe1d { from, to, points, split } => {
            let data = probe_data(&cfg, split.split)?;
            let (a, b) = (snapshot(from, &cfg)?, snapshot(to, &cfg)?);
            let spec = *a.spec();
            let idx: Vec<usize> = (0..data.len()).collect();
            let curve = interpolate_1d(a.as_slice(), b.as_slice(), |t| loss(&spec, t, &data, &idx), *points)?;
            emit(out.as_deref(), "curve_1d.csv", &curve.to_csv())?;
            eprintln!("barrier {:.6}", curve.barrier());
        }
        Command::Probe2d {
            from,
            to1,
            to2,
            alpha_points,
            beta_points,
            split,
        } => {
            let data = probe_data(&cfg, split.split)?;
            let (a, b, c) = (snapshot(from, &cfg)?, snapshot(to1, &cfg)?, snapshot(to2, &cfg)?);
            let spec = *a.spec();
            let idx: Vec<usize> = (0..data.len()).collect();
            let s = surface_2d(
                a.as_slice(),
                b.as_slice(),
                c.as_slice(),
                |t| loss(&spec, t, &data, &idx),
                *alpha_points,
                *beta_points,
            )?;
            emit(out.as_deref(), "surface_2d.csv", &s.to_csv())?;
        }
        Command::ClassifierGrid {
            params,
            bounds,
            resolution,
        } => {
            let p = snapshot(params, &cfg)?;
            let bounds = match bounds {
                Some(b) if b.len() != 4 => bail!("--bounds takes x_min,x_max,y_min,y_max"),
                Some(b) => Bounds {
                    x_min: b[0],
                    x_max: b[1],
                    y_min: b[2],
                    y_max: b[3],
                },
                None => data_bounds(&cfg.build_data()?.0),
            };
            let grid = classifier_grid(&p, bounds, *resolution)?;
            emit(out.as_deref(), "grid.csv", &grid.to_csv())?;
            if let Some(d) = &out {
                let path = d.join("grid.pgm");
                std::fs::write(&path, grid.to_pgm()).with_context(|| format!("writing {}", path.display()))?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Datagen => {
            let Some(dir) = out.as_deref() else {
                bail!("datagen needs --out");
            };
            let (train, test) = cfg.build_data()?;
            emit(Some(dir), "train.csv", &train.to_csv())?;
            emit(Some(dir), "test.csv", &test.to_csv())?;
        }
    }
    Ok(())
}

fn data_bounds(d: &Dataset) -> Bounds {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for i in 0..d.len() {
        for (k, v) in d.input(i).iter().take(2).enumerate() {
            lo[k] = lo[k].min(*v);
            hi[k] = hi[k].max(*v);
        }
    }
    let pad = |k: usize| 0.1 * (hi[k] - lo[k]).max(1e-9);
    Bounds {
        x_min: lo[0] - pad(0),
        x_max: hi[0] + pad(0),
        y_min: lo[1] - pad(1),
        y_max: hi[1] + pad(1),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("config error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&cli, cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let config_error = matches!(
                e.downcast_ref::<Error>(),
                Some(Error::Config(_) | Error::UnknownKey(_) | Error::WrongMethod { .. })
            );
            eprintln!("error: {e:#}");
            ExitCode::from(if config_error { 2 } else { 1 })
        }
    }
}
