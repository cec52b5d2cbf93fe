//! Command-line front end: training runs, the verification suite, filter
//! fits, stability sweeps, and embedding probes.
//!
//! Exit codes: 0 on success, 1 when a verification assertion fails, 2 for
//! usage, IO, or schema errors.

use clap::{Parser, Subcommand};
use serde::Deserialize;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use wgdn::eval::{
    logistic_probe, run_verification, stability_sweep, CheckStatus, VerifyConfig, DEFAULT_SPLIT,
    SWEEP_MODES,
};
use wgdn::io::{
    load_dataset, read_features_csv, read_labels, write_checkpoint, write_features_csv,
    write_loss_history_csv, write_sweep_csv, write_verify_csv, Checkpoint, DatasetSpec,
    FeatureSpec,
};
use wgdn::kernels::KernelSpec;
use wgdn::model::{train, ModelConfig};
use wgdn::remez::{poly_eval, remez_fit, RemezPolynomial};
use wgdn::{Error, Result};

#[derive(Parser)]
#[command(name = "wgdn", version, about = "Graph spectral deconvolution toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the autoencoder; writes checkpoint.json, embeddings.csv and
    /// loss_history.csv to the output directory.
    Train {
        /// JSON run configuration.
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the numerical verification suite; writes verify_report.csv.
    Verify {
        /// Optional JSON verification configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit a minimax polynomial to a spectral filter; writes remez.csv.
    Remez {
        /// Kernel family: gcn, heat or ppr.
        #[arg(long)]
        kernel: String,
        /// Polynomial order (kernel default when omitted).
        #[arg(long)]
        order: Option<usize>,
        /// Heat diffusion time.
        #[arg(long)]
        t: Option<f64>,
        /// PPR teleport probability.
        #[arg(long)]
        alpha: Option<f64>,
        /// Fit the Wiener filter with this augmentation variance instead of
        /// the convolution kernel.
        #[arg(long)]
        sigma2: Option<f64>,
        /// Average spectral energy for the Wiener filter.
        #[arg(long, default_value_t = 1.0)]
        energy: f64,
        /// Energy multiplier for the Wiener filter.
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Grid resolution of the error report.
        #[arg(long, default_value_t = 1001)]
        grid: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train across augmentation magnitudes and decoder modes; writes
    /// sweep.csv.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Probe exported embeddings with the logistic classifier.
    Probe {
        /// Embeddings CSV (one row per node).
        #[arg(long)]
        embeddings: PathBuf,
        /// Label file (one integer per line).
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

/// Train / sweep run configuration.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    dataset: DatasetSpec,
    #[serde(default)]
    features: Option<FeatureSpec>,
    #[serde(default)]
    model: ModelConfig,
    /// Sweep only: augmentation magnitudes.
    #[serde(default)]
    betas: Option<Vec<f64>>,
    /// Sweep only: decoder modes (defaults to both).
    #[serde(default)]
    modes: Option<Vec<wgdn::model::DecoderMode>>,
    /// Overrides the model seed; itself overridden by --seed.
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Train { config, seed, out } => cmd_train(&config, seed, out),
        Command::Verify { config, seed, out } => cmd_verify(config.as_deref(), seed, out),
        Command::Remez {
            kernel,
            order,
            t,
            alpha,
            sigma2,
            energy,
            gamma,
            grid,
            out,
        } => cmd_remez(&kernel, order, t, alpha, sigma2, energy, gamma, grid, out),
        Command::Sweep { config, seed, out } => cmd_sweep(&config, seed, out),
        Command::Probe {
            embeddings,
            labels,
            seed,
        } => cmd_probe(&embeddings, &labels, seed),
    };
    match outcome {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(2)
        }
    }
}

fn read_run_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    serde_json::from_str(&text).map_err(Error::from)
}

fn resolve_run(
    config: &Path,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> Result<(RunConfig, ModelConfig, u64, PathBuf)> {
    let run = read_run_config(config)?;
    let seed = seed_flag.or(run.seed).unwrap_or(run.model.seed);
    let mut model = run.model.clone();
    model.seed = seed;
    let out_dir = out_flag
        .or_else(|| run.out_dir.clone())
        .ok_or_else(|| Error::InvalidInput("no output directory (out_dir or --out)".into()))?;
    std::fs::create_dir_all(&out_dir)?;
    Ok((run, model, seed, out_dir))
}

fn cmd_train(config: &Path, seed_flag: Option<u64>, out_flag: Option<PathBuf>) -> Result<ExitCode> {
    let (run, mut model, seed, out_dir) = resolve_run(config, seed_flag, out_flag)?;
    let dataset = load_dataset(&run.dataset, run.features.as_ref(), seed)?;
    if model.input_dim == 0 {
        model.input_dim = dataset.features.cols;
    }
    let result = train(model.clone(), &dataset.graph, &dataset.features)?;

    write_checkpoint(
        &out_dir.join("checkpoint.json"),
        &Checkpoint {
            config: model,
            params: result.params,
            adam_state: Some(result.adam),
        },
    )?;
    write_features_csv(&out_dir.join("embeddings.csv"), &result.embedding)?;
    write_loss_history_csv(&out_dir.join("loss_history.csv"), &result.history)?;
    if let Some(labels) = &dataset.labels {
        wgdn::io::write_labels(&out_dir.join("labels.txt"), labels)?;
    }

    let final_loss = result.history.last().copied().unwrap_or(f64::NAN);
    println!("final loss {final_loss}");
    Ok(ExitCode::SUCCESS)
}

fn cmd_verify(
    config: Option<&Path>,
    seed_flag: Option<u64>,
    out_flag: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut vcfg: VerifyConfig = match config {
        Some(path) => {
            let text = std::fs::read_to_string(path)?;
            serde_json::from_str(&text)?
        }
        None => VerifyConfig::default(),
    };
    if let Some(seed) = seed_flag {
        vcfg.seed = seed;
    }
    let rows = run_verification(&vcfg)?;

    let out_dir = out_flag.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    write_verify_csv(&out_dir.join("verify_report.csv"), &rows)?;

    let failures: Vec<_> = rows
        .iter()
        .filter(|r| r.status == CheckStatus::Fail)
        .collect();
    let skipped = rows.iter().filter(|r| r.status == CheckStatus::Skip).count();
    println!(
        "{} checks: {} passed, {} failed, {} skipped",
        rows.len(),
        rows.len() - failures.len() - skipped,
        failures.len(),
        skipped
    );
    for row in &failures {
        eprintln!("FAIL {} [{}]: {}", row.check, row.instance, row.detail);
    }
    Ok(if failures.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

#[allow(clippy::too_many_arguments)]
fn cmd_remez(
    kernel_name: &str,
    order: Option<usize>,
    t: Option<f64>,
    alpha: Option<f64>,
    sigma2: Option<f64>,
    energy: f64,
    gamma: f64,
    grid: usize,
    out_flag: Option<PathBuf>,
) -> Result<ExitCode> {
    let mut kernel = match kernel_name {
        "gcn" => KernelSpec::gcn(),
        "heat" => KernelSpec::heat(t.unwrap_or(1.0)),
        "ppr" => KernelSpec::ppr(alpha.unwrap_or(0.2)),
        other => {
            return Err(Error::InvalidInput(format!(
                "unknown kernel '{other}' (expected gcn, heat or ppr)"
            )))
        }
    };
    if let Some(t) = t {
        kernel.t = t;
    }
    if let Some(alpha) = alpha {
        kernel.alpha = alpha;
    }
    kernel.validate()?;
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be >= 1".into()));
    }

    let order = order.unwrap_or_else(|| kernel.default_order());
    let filter: Box<dyn Fn(f64) -> f64> = match sigma2 {
        Some(s2) => {
            if s2 < 0.0 {
                return Err(Error::InvalidInput("sigma2 must be >= 0".into()));
            }
            let spec = wgdn::kernels::WienerSpec::new(kernel, s2, energy, gamma);
            Box::new(move |lam| wgdn::kernels::eval_wiener(&spec, lam))
        }
        None => Box::new(move |lam| wgdn::kernels::eval_conv(&kernel, lam)),
    };

    let p = remez_fit(&*filter, order, 0.0, 2.0)?;
    let out_dir = out_flag.unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&out_dir)?;
    write_remez_csv(&out_dir.join("remez.csv"), &p, &*filter, grid)?;

    println!(
        "order {} coefficients {:?} leveled_error {}",
        p.degree(),
        p.coeffs,
        p.leveled_error
    );
    Ok(ExitCode::SUCCESS)
}

/// CSV with header `record,key,value`: coefficients, the leveled error, the
/// max grid error, then per-point absolute errors.
fn write_remez_csv(
    path: &Path,
    p: &RemezPolynomial,
    filter: &dyn Fn(f64) -> f64,
    grid: usize,
) -> Result<()> {
    use std::io::Write;
    let mut out = std::fs::File::create(path)?;
    writeln!(out, "record,key,value")?;
    for (k, c) in p.coeffs.iter().enumerate() {
        writeln!(out, "coeff,{k},{c}")?;
    }
    writeln!(out, "leveled_error,,{}", p.leveled_error)?;
    writeln!(out, "max_grid_error,,{}", p.max_grid_error(filter, grid))?;
    let (a, b) = p.domain;
    for i in 0..grid {
        let t = if grid == 1 {
            a
        } else {
            a + (b - a) * i as f64 / (grid - 1) as f64
        };
        writeln!(out, "grid_error,{t},{}", (filter(t) - poly_eval(p, t)).abs())?;
    }
    Ok(())
}

fn cmd_sweep(config: &Path, seed_flag: Option<u64>, out_flag: Option<PathBuf>) -> Result<ExitCode> {
    let (run, mut model, seed, out_dir) = resolve_run(config, seed_flag, out_flag)?;
    let betas = run
        .betas
        .clone()
        .ok_or_else(|| Error::InvalidInput("sweep config needs a betas list".into()))?;
    if betas.is_empty() {
        return Err(Error::InvalidInput("betas list is empty".into()));
    }
    let dataset = load_dataset(&run.dataset, run.features.as_ref(), seed)?;
    let labels = dataset
        .labels
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("sweep needs labels for the probe".into()))?;
    if model.input_dim == 0 {
        model.input_dim = dataset.features.cols;
    }
    let modes = run.modes.clone().unwrap_or_else(|| SWEEP_MODES.to_vec());
    if modes.is_empty() {
        return Err(Error::InvalidInput("modes list is empty".into()));
    }
    let rows = stability_sweep(&model, &betas, &modes, &dataset.graph, &dataset.features, labels)?;
    write_sweep_csv(&out_dir.join("sweep.csv"), &rows)?;
    println!("{} sweep rows written", rows.len());
    Ok(ExitCode::SUCCESS)
}

fn cmd_probe(embeddings: &Path, labels: &Path, seed: u64) -> Result<ExitCode> {
    let embeddings = read_features_csv(embeddings)?;
    let labels = read_labels(labels)?;
    let result = logistic_probe(&embeddings, &labels, DEFAULT_SPLIT, seed)?;
    println!("accuracy {}", result.accuracy);
    Ok(ExitCode::SUCCESS)
}
