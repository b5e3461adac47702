//! Test-split evaluation rows, the β sweep and the learned-β ablation.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{train_on, RunConfig, TrainOutcome};
use crate::checkpoint::Checkpoint;
use crate::data::FactorDataset;
use crate::error::{Error, Result};
use crate::losses::Regime;
use crate::metrics::{betavae_score, encode_dataset, evaluate_all, Encoder, MetricReport};

/// One model's scores plus the run columns it was produced under.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub model: String,
    pub regime: String,
    /// Effective β: the fixed β, the learned `σ₀²/σ₁²`, or the controller's
    /// last value.
    pub beta: f64,
    pub iteration: u64,
    pub seed: u64,
    pub iters: usize,
    pub batch: usize,
    pub latent: usize,
    pub recon: f64,
    pub betavae: f64,
    pub factorvae: f64,
    pub explicitness: f64,
    pub irs: f64,
    pub mig: f64,
    pub sap: f64,
}

impl EvalRow {
    pub fn report(&self) -> MetricReport {
        MetricReport {
            recon: self.recon,
            betavae: self.betavae,
            factorvae: self.factorvae,
            explicitness: self.explicitness,
            irs: self.irs,
            mig: self.mig,
            sap: self.sap,
        }
    }
}

/// Writes any serializable rows as CSV with a header.
pub fn write_rows<S: Serialize>(rows: &[S], path: impl AsRef<Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Scores `ck` on the test split defined by `cfg`.
pub fn evaluate(ck: &Checkpoint<f64>, ds: &FactorDataset, cfg: &RunConfig, label: &str) -> Result<EvalRow> {
    let splits = cfg.splits(ds)?;
    let m = evaluate_all(&ck.model, ds, &splits, &cfg.metrics)?;
    Ok(EvalRow {
        model: label.to_string(),
        regime: ck.weights.regime.name().to_string(),
        beta: ck.weights.effective_beta(),
        iteration: ck.iteration,
        seed: cfg.seed,
        iters: cfg.iters,
        batch: cfg.batch,
        latent: ck.model.latent,
        recon: m.recon,
        betavae: m.betavae,
        factorvae: m.factorvae,
        explicitness: m.explicitness,
        irs: m.irs,
        mig: m.mig,
        sap: m.sap,
    })
}

/// Hyperparameter grid of a β sweep. `lrs` are peak learning rates; the
/// warm-start and final rates keep their ratio to the base peak.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub betas: Vec<f64>,
    pub batches: Vec<usize>,
    pub lrs: Vec<f64>,
    pub iters: Vec<usize>,
    pub seeds: Vec<u64>,
}

/// One trained model of a sweep. `recon` and `betavae_score` are measured on
/// the test split with the final weights; both are NaN when the run failed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub beta: f64,
    pub batch: usize,
    pub lr: f64,
    pub iters: usize,
    pub seed: u64,
    pub recon: f64,
    pub betavae_score: f64,
}

fn sweep_point(cfg: &RunConfig, ds: &FactorDataset) -> Result<(f64, f64)> {
    let out = train_on(cfg, ds)?;
    let model = &out.final_checkpoint.model;
    let recon = model.reconstruction_error(ds, &out.splits.test)?;
    let score = betavae_score(&encode_dataset(model, ds, &out.splits.test)?, &cfg.metrics)?;
    Ok((recon, score))
}

/// Trains a `beta-vae` model at every grid point. A failed point yields a NaN
/// row and the sweep moves on. With an output directory, each run writes to
/// its own subdirectory and the rows go to `sweep.csv`.
pub fn sweep(base: &RunConfig, grid: &SweepGrid, ds: &FactorDataset) -> Result<Vec<SweepRow>> {
    if grid.betas.is_empty()
        || grid.batches.is_empty()
        || grid.lrs.is_empty()
        || grid.iters.is_empty()
        || grid.seeds.is_empty()
    {
        return Err(Error::Config("every sweep grid axis needs at least one value".into()));
    }
    let mut rows = Vec::new();
    for &beta in &grid.betas {
        for &batch in &grid.batches {
            for &lr in &grid.lrs {
                for &iters in &grid.iters {
                    for &seed in &grid.seeds {
                        let mut cfg = base.clone();
                        cfg.regime = Regime::BetaVae;
                        cfg.beta = beta;
                        cfg.batch = batch;
                        cfg.lr_start = base.lr_start / base.lr_peak * lr;
                        cfg.lr_final = base.lr_final / base.lr_peak * lr;
                        cfg.lr_peak = lr;
                        cfg.iters = iters;
                        cfg.ramp_iters = base.ramp_iters.filter(|&r| r <= iters);
                        cfg.seed = seed;
                        cfg.metrics.seed = seed;
                        cfg.out_dir = base
                            .out_dir
                            .as_ref()
                            .map(|d| d.join(format!("run_beta{beta}_batch{batch}_lr{lr}_iters{iters}_seed{seed}")));
                        let (recon, betavae_score) = match sweep_point(&cfg, ds) {
                            Ok(v) => v,
                            Err(e) => {
                                log::warn!("sweep point beta={beta} batch={batch} lr={lr} iters={iters} seed={seed} failed: {e}");
                                (f64::NAN, f64::NAN)
                            }
                        };
                        rows.push(SweepRow {
                            beta,
                            batch,
                            lr,
                            iters,
                            seed,
                            recon,
                            betavae_score,
                        });
                    }
                }
            }
        }
    }
    if let Some(dir) = &base.out_dir {
        std::fs::create_dir_all(dir)?;
        write_rows(&rows, dir.join("sweep.csv"))?;
    }
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct AblationOutcome {
    /// The l-vae model, then the fixed-β model trained at its learned β̂.
    pub rows: [EvalRow; 2],
    pub fixed_beta_run: TrainOutcome,
}

/// Reads β̂ = σ₀²/σ₁² from an l-vae checkpoint, trains a fresh `beta-vae`
/// run at β = β̂ under `cfg` (same seed and budget), and scores the given
/// checkpoint next to the fresh run's best-validation checkpoint.
pub fn ablation(lvae: &Checkpoint<f64>, ds: &FactorDataset, cfg: &RunConfig) -> Result<AblationOutcome> {
    if lvae.weights.regime != Regime::LVae {
        return Err(Error::Config(format!(
            "ablation needs an l-vae checkpoint, got {}",
            lvae.weights.regime
        )));
    }
    let beta_hat = lvae.weights.effective_beta();
    let mut fixed = cfg.clone();
    fixed.regime = Regime::BetaVae;
    fixed.beta = beta_hat;
    fixed.out_dir = cfg.out_dir.as_ref().map(|d| d.join("ablation_fixed_beta"));
    let run = train_on(&fixed, ds)?;
    let a = evaluate(lvae, ds, cfg, "l-vae")?;
    let b = evaluate(&run.best.checkpoint, ds, &fixed, "beta-vae@beta_hat")?;
    let rows = [a, b];
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
        write_rows(&rows, dir.join("ablation.csv"))?;
    }
    Ok(AblationOutcome {
        rows,
        fixed_beta_run: run,
    })
}
