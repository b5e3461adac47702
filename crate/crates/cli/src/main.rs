//! `lvae`: generate data, train, evaluate, sweep, traverse and ablate.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use log::info;

use lvae_core::checkpoint::{load_checkpoint, Checkpoint};
use lvae_core::data::{generate_minidsprites, save_fds, FactorDataset, FactorSpec, GeneratorConfig};
use lvae_core::harness::{self, ControllerOverrides, DataSource, RunConfig, SweepGrid};
use lvae_core::losses::{Regime, SigmaRegularizer};
use lvae_core::metrics::MetricConfig;
use lvae_core::nets::Arch;

#[derive(Parser, Debug)]
#[command(
    name = "lvae",
    version,
    about = "Variational auto-encoder laboratory with learned loss weights"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render the procedural factor dataset to an FDS file.
    GenData(GenDataArgs),
    /// Train one model.
    Train(RunArgs),
    /// Score a checkpoint on the test split and write metrics.csv.
    Evaluate(CheckpointRunArgs),
    /// Train a beta-vae grid and write sweep.csv.
    Sweep(SweepArgs),
    /// Decode sweeps of one latent coordinate into an image grid.
    Traverse(TraverseArgs),
    /// Retrain at an l-vae checkpoint's learned beta and compare.
    Ablate(CheckpointRunArgs),
}

#[derive(Args, Debug)]
struct GenDataArgs {
    /// Output FDS file.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 16)]
    image_size: usize,
    /// Cardinalities of shape, scale, orientation, posX, posY.
    #[arg(long, value_delimiter = ',', default_value = "3,4,8,8,8")]
    cardinalities: Vec<usize>,
    /// Draw this many random combinations instead of the full grid.
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long, default_value = "l-vae")]
    regime: Regime,
    /// KL weight for the beta-vae regime.
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value = "mlp")]
    arch: Arch,
    #[arg(long, default_value_t = 5)]
    latent: usize,
    /// Hidden width of the MLP layers.
    #[arg(long, default_value_t = 256)]
    hidden: usize,
    /// FDS dataset; the default 16x16 procedural set is generated when omitted.
    #[arg(long)]
    data: Option<PathBuf>,
    #[arg(long, default_value_t = 64)]
    batch: usize,
    #[arg(long, default_value_t = 20_000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Controller KL set point.
    #[arg(long, allow_negative_numbers = true)]
    kl_set: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    kp: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    ki: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    beta_init: Option<f64>,
    #[arg(long, default_value_t = 1e-5)]
    lr_start: f64,
    #[arg(long, default_value_t = 1e-4)]
    lr_peak: f64,
    #[arg(long, default_value_t = 1e-6)]
    lr_final: f64,
    /// Warm-up iterations; half of --iters when omitted.
    #[arg(long)]
    ramp_iters: Option<usize>,
    #[arg(long, default_value_t = 100)]
    log_interval: usize,
    #[arg(long, default_value_t = 1000)]
    eval_interval: usize,
    /// L-VAE weight regularizer: "squared" (σ₀² + σ₁²) or "log" (log σ₀ + log σ₁).
    #[arg(long, default_value = "squared", value_parser = ["squared", "log"])]
    regularizer: String,
    /// Training votes for the beta-vae and factorvae scores.
    #[arg(long, default_value_t = 800)]
    votes: usize,
    /// Held-out votes for the beta-vae and factorvae scores.
    #[arg(long, default_value_t = 400)]
    eval_votes: usize,
    /// Pairs (beta-vae) or rows (factorvae) per vote.
    #[arg(long, default_value_t = 64)]
    pairs: usize,
    /// Discretization bins for mig, sap and irs.
    #[arg(long, default_value_t = 20)]
    bins: usize,
    /// Keep only the best and final checkpoints.
    #[arg(long)]
    no_eval_checkpoints: bool,
}

impl RunArgs {
    fn config(&self) -> RunConfig {
        RunConfig {
            regime: self.regime,
            beta: self.beta,
            arch: self.arch,
            latent: self.latent,
            hidden: self.hidden,
            data: match &self.data {
                Some(p) => DataSource::Fds(p.clone()),
                None => DataSource::Generate(GeneratorConfig::default()),
            },
            batch: self.batch,
            iters: self.iters,
            lr_start: self.lr_start,
            lr_peak: self.lr_peak,
            lr_final: self.lr_final,
            ramp_iters: self.ramp_iters,
            controller: ControllerOverrides {
                kl_set: self.kl_set,
                k_p: self.kp,
                k_i: self.ki,
                beta_init: self.beta_init,
            },
            regularizer: if self.regularizer == "log" {
                SigmaRegularizer::Log
            } else {
                SigmaRegularizer::Squared
            },
            seed: self.seed,
            log_interval: self.log_interval,
            eval_interval: self.eval_interval,
            metrics: MetricConfig {
                seed: self.seed,
                betavae_train_votes: self.votes,
                betavae_eval_votes: self.eval_votes,
                betavae_batch: self.pairs,
                factorvae_train_votes: self.votes,
                factorvae_eval_votes: self.eval_votes,
                factorvae_batch: self.pairs,
                bins: self.bins,
                ..MetricConfig::default()
            },
            keep_eval_checkpoints: !self.no_eval_checkpoints,
            out_dir: Some(self.out.clone()),
            ..RunConfig::default()
        }
    }
}

#[derive(Args, Debug)]
struct CheckpointRunArgs {
    /// Checkpoint file (`ckpt_*.lvae`).
    #[arg(long)]
    ckpt: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "0.5,1,2,4")]
    betas: Vec<f64>,
    /// Batch sizes; --batch when omitted.
    #[arg(long, value_delimiter = ',')]
    batches: Option<Vec<usize>>,
    /// Peak learning rates; --lr-peak when omitted.
    #[arg(long, value_delimiter = ',')]
    lrs: Option<Vec<f64>>,
    /// Iteration budgets; --iters when omitted.
    #[arg(long, value_delimiter = ',')]
    iters_grid: Option<Vec<usize>>,
    /// Seeds; --seed when omitted.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Debug)]
struct TraverseArgs {
    #[arg(long)]
    ckpt: PathBuf,
    #[arg(long)]
    data: Option<PathBuf>,
    /// Dataset rows to traverse, one grid row each.
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3")]
    samples: Vec<usize>,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    lo: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    hi: f64,
    #[arg(long, default_value_t = 9)]
    steps: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

fn load_data(path: Option<&Path>) -> Result<FactorDataset> {
    match path {
        Some(p) => lvae_core::data::load_fds(p).with_context(|| format!("loading dataset {}", p.display())),
        None => Ok(generate_minidsprites(&GeneratorConfig::default())?),
    }
}

fn load_ckpt(path: &Path) -> Result<Checkpoint<f64>> {
    load_checkpoint(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn gen_data(a: &GenDataArgs) -> Result<()> {
    let mut spec = FactorSpec::minidsprites();
    if a.cardinalities.len() != spec.len() {
        bail!("expected {} cardinalities, got {}", spec.len(), a.cardinalities.len());
    }
    spec = FactorSpec::new(spec.names, a.cardinalities.clone())?;
    let cfg = GeneratorConfig {
        image_size: a.image_size,
        spec,
        samples: a.samples,
        seed: a.seed,
    };
    let ds = generate_minidsprites(&cfg)?;
    if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    save_fds(&ds, &a.out)?;
    info!("wrote {} images to {}", ds.len(), a.out.display());
    Ok(())
}

fn train(a: &RunArgs) -> Result<()> {
    let cfg = a.config();
    let out = harness::train(&cfg)?;
    let last = out.log.rows.last().expect("log has a final row");
    info!(
        "finished {} iterations: recon {:.4} kl {:.4} beta {:.4}; best validation beta-vae score {:.4} at iteration {}",
        cfg.iters, last.recon, last.kl, last.effective_beta, out.best.score, out.best.iteration
    );
    Ok(())
}

fn evaluate(a: &CheckpointRunArgs) -> Result<()> {
    let cfg = a.run.config();
    let ck = load_ckpt(&a.ckpt)?;
    let ds = load_data(a.run.data.as_deref())?;
    let label = a.ckpt.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
    let row = harness::evaluate(&ck, &ds, &cfg, label)?;
    std::fs::create_dir_all(&a.run.out)?;
    harness::write_rows(&[row], a.run.out.join("metrics.csv"))?;
    Ok(())
}

fn sweep(a: &SweepArgs) -> Result<()> {
    let base = a.run.config();
    let grid = SweepGrid {
        betas: a.betas.clone(),
        batches: a.batches.clone().unwrap_or_else(|| vec![base.batch]),
        lrs: a.lrs.clone().unwrap_or_else(|| vec![base.lr_peak]),
        iters: a.iters_grid.clone().unwrap_or_else(|| vec![base.iters]),
        seeds: a.seeds.clone().unwrap_or_else(|| vec![base.seed]),
    };
    let ds = load_data(a.run.data.as_deref())?;
    let rows = harness::sweep(&base, &grid, &ds)?;
    let failed = rows.iter().filter(|r| r.recon.is_nan()).count();
    info!("sweep finished: {} rows, {failed} failed", rows.len());
    Ok(())
}

fn traverse(a: &TraverseArgs) -> Result<()> {
    let ck = load_ckpt(&a.ckpt)?;
    let ds = load_data(a.data.as_deref())?;
    let grid = harness::traverse(&ck.model, &ds, &a.samples, a.dim, (a.lo, a.hi), a.steps)?;
    std::fs::create_dir_all(&a.out)?;
    let path = a.out.join(format!("traverse_dim{}.{}", a.dim, grid.extension()));
    grid.save(&path)?;
    info!("wrote {}", path.display());
    Ok(())
}

fn ablate(a: &CheckpointRunArgs) -> Result<()> {
    let cfg = a.run.config();
    let ck = load_ckpt(&a.ckpt)?;
    let ds = load_data(a.run.data.as_deref())?;
    let out = harness::ablation(&ck, &ds, &cfg)?;
    info!("ablation at beta_hat = {}", out.rows[1].beta);
    Ok(())
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::GenData(a) => gen_data(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Traverse(a) => traverse(a),
        Command::Ablate(a) => ablate(a),
    }
}
