//! Seeded training runs, evaluation, β sweeps, the learned-β ablation and
//! latent traversals.
//!
//! Everything here runs in 64-bit floats. One run is a single unit of mutable
//! state (model, weights, optimizer, random streams); runs never share state.

mod report;
mod train_log;
mod traverse;

pub use report::{ablation, evaluate, sweep, write_rows, AblationOutcome, EvalRow, SweepGrid, SweepRow};
pub use train_log::{LogRow, TrainLog};
pub use traverse::{traverse, ImageGrid};

use std::path::PathBuf;

use rand::seq::SliceRandom;

use crate::autodiff::Tape;
use crate::checkpoint::{save_checkpoint, Checkpoint};
use crate::data::{generate_minidsprites, load_fds, split, FactorDataset, GeneratorConfig, SplitIndices};
use crate::error::{Error, Result};
use crate::losses::{
    beta_vae_loss, kl_gauss, lvae_loss, recon_mse, sigma_vae_loss, ControllerState, LossWeights, Regime,
    SigmaRegularizer,
};
use crate::metrics::{betavae_score, encode_dataset, MetricConfig};
use crate::nets::{reparameterize, Arch, ImageDims, VaeModel};
use crate::optim::{AdamState, LrSchedule};
use crate::seed::{self, Rng, Stream};
use crate::tensor::Tensor;

/// Where a run's images come from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    Generate(GeneratorConfig),
    Fds(PathBuf),
}

impl DataSource {
    pub fn load(&self) -> Result<FactorDataset> {
        match self {
            DataSource::Generate(cfg) => generate_minidsprites(cfg),
            DataSource::Fds(path) => load_fds(path),
        }
    }
}

/// Per-field overrides of the regime's default controller constants.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ControllerOverrides {
    pub kl_set: Option<f64>,
    pub k_p: Option<f64>,
    pub k_i: Option<f64>,
    pub beta_init: Option<f64>,
}

/// Everything that determines a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub regime: Regime,
    /// KL weight for `beta-vae`; ignored by the other regimes.
    pub beta: f64,
    pub arch: Arch,
    pub latent: usize,
    /// Hidden width of the MLP layers.
    pub hidden: usize,
    pub data: DataSource,
    pub split_ratios: (f64, f64, f64),
    pub batch: usize,
    pub iters: usize,
    pub lr_start: f64,
    pub lr_peak: f64,
    pub lr_final: f64,
    /// Warm-up length; half of `iters` when unset.
    pub ramp_iters: Option<usize>,
    pub controller: ControllerOverrides,
    pub regularizer: SigmaRegularizer,
    pub seed: u64,
    pub log_interval: usize,
    pub eval_interval: usize,
    pub metrics: MetricConfig,
    /// Write every evaluation checkpoint, not only best and final.
    pub keep_eval_checkpoints: bool,
    pub out_dir: Option<PathBuf>,
}

/// Batch sizes of the default hyperparameter grid.
pub const BATCH_GRID: [usize; 4] = [32, 64, 128, 256];

impl Default for RunConfig {
    fn default() -> Self {
        let desk = LrSchedule::desk(20_000);
        Self {
            regime: Regime::LVae,
            beta: 1.0,
            arch: Arch::Mlp,
            latent: 5,
            hidden: 256,
            data: DataSource::Generate(GeneratorConfig::default()),
            split_ratios: (0.85, 0.075, 0.075),
            batch: 64,
            iters: 20_000,
            lr_start: desk.warm_start_lr,
            lr_peak: desk.peak_lr,
            lr_final: desk.final_lr,
            ramp_iters: None,
            controller: ControllerOverrides::default(),
            regularizer: SigmaRegularizer::Squared,
            seed: 0,
            log_interval: 100,
            eval_interval: 1000,
            metrics: MetricConfig::default(),
            keep_eval_checkpoints: true,
            out_dir: None,
        }
    }
}

impl RunConfig {
    pub fn schedule(&self) -> LrSchedule {
        LrSchedule {
            warm_start_lr: self.lr_start,
            peak_lr: self.lr_peak,
            final_lr: self.lr_final,
            ramp_iters: self.ramp_iters.unwrap_or(self.iters / 2),
            total_iters: self.iters,
        }
    }

    pub fn controller_state(&self) -> ControllerState {
        let base = match self.regime {
            Regime::DynamicVae => ControllerState::dynamic_vae(),
            _ => ControllerState::control_vae(),
        };
        let o = &self.controller;
        ControllerState::new(
            o.kl_set.unwrap_or(base.kl_set),
            o.k_p.unwrap_or(base.k_p),
            o.k_i.unwrap_or(base.k_i),
            o.beta_init.unwrap_or(base.beta_floor),
        )
    }

    pub fn loss_weights(&self) -> Result<LossWeights<f64>> {
        let mut w = match self.regime {
            Regime::Vae => LossWeights::vae(),
            Regime::BetaVae => LossWeights::beta_vae(self.beta)?,
            Regime::LVae => LossWeights::l_vae(),
            Regime::SigmaVae => LossWeights::sigma_vae(),
            Regime::ControlVae | Regime::DynamicVae => LossWeights::controlled(self.regime, self.controller_state()),
        };
        w.regularizer = self.regularizer;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        if self.latent == 0 || self.batch == 0 {
            return Err(Error::Config("latent and batch must be positive".into()));
        }
        if self.arch == Arch::Mlp && self.hidden == 0 {
            return Err(Error::Config("hidden width must be positive".into()));
        }
        if self.log_interval == 0 || self.eval_interval == 0 {
            return Err(Error::Config("log and eval intervals must be positive".into()));
        }
        if !BATCH_GRID.contains(&self.batch) {
            log::info!("batch size {} is outside the default grid {BATCH_GRID:?}", self.batch);
        }
        self.schedule().validate()?;
        self.metrics.validate()
    }

    pub fn build_model(&self, dims: ImageDims) -> Result<VaeModel<f64>> {
        let mut rng = seed::rng(self.seed, Stream::Init);
        match self.arch {
            Arch::Mlp => VaeModel::build_mlp(self.latent, dims, self.hidden, &mut rng),
            Arch::Cnn => VaeModel::build_cnn(self.latent, dims, &mut rng),
        }
    }

    pub fn splits(&self, ds: &FactorDataset) -> Result<SplitIndices> {
        split(ds.len(), self.split_ratios, &mut seed::rng(self.seed, Stream::Split))
    }
}

/// A checkpoint chosen by validation β-VAE score.
#[derive(Debug, Clone)]
pub struct BestCheckpoint {
    pub iteration: usize,
    pub score: f64,
    pub checkpoint: Checkpoint<f64>,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub log: TrainLog,
    pub splits: SplitIndices,
    /// State after all `iters` updates.
    pub final_checkpoint: Checkpoint<f64>,
    /// Highest validation score; ties keep the earliest iteration.
    pub best: BestCheckpoint,
}

/// Shuffled passes over the training rows, reshuffled each epoch. A trailing
/// partial batch is dropped.
struct Batcher {
    rows: Vec<usize>,
    pos: usize,
    batch: usize,
    rng: Rng,
}

impl Batcher {
    fn new(rows: &[usize], batch: usize, rng: Rng) -> Result<Self> {
        if rows.len() < batch {
            return Err(Error::Config(format!(
                "batch size {batch} exceeds the {} training rows",
                rows.len()
            )));
        }
        let mut b = Self {
            rows: rows.to_vec(),
            pos: 0,
            batch,
            rng,
        };
        b.rows.shuffle(&mut b.rng);
        Ok(b)
    }

    fn next(&mut self) -> &[usize] {
        if self.pos + self.batch > self.rows.len() {
            self.rows.shuffle(&mut self.rng);
            self.pos = 0;
        }
        self.pos += self.batch;
        &self.rows[self.pos - self.batch..self.pos]
    }
}

struct StepResult {
    recon: f64,
    kl: f64,
    total: f64,
    effective_beta: f64,
    grads: Option<Vec<Vec<f64>>>,
}

fn describe_weights(w: &LossWeights<f64>) -> String {
    format!(
        "s0={} s1={} sigma0={} sigma1={} log_decoder_sigma={} beta={}",
        w.s0,
        w.s1,
        w.sigma0(),
        w.sigma1(),
        w.log_decoder_sigma,
        w.effective_beta()
    )
}

/// One forward pass of the regime objective on `x`; gradients for the model
/// parameters followed by the learnable weights when `train` is set. The
/// controller only advances on training steps.
fn run_step(
    model: &VaeModel<f64>,
    weights: &mut LossWeights<f64>,
    x: Tensor<f64>,
    noise: &mut Rng,
    train: bool,
) -> Result<StepResult> {
    let tape = Tape::new();
    let p = if train {
        model.bind(&tape)
    } else {
        model.bind_frozen(&tape)
    };
    let bw = weights.bind(&tape);
    let xv = tape.constant(x);
    let enc = model.encode(&p, xv)?;
    let lat = reparameterize(&enc, noise)?;
    let xbar = model.decode(&p, lat.z)?;
    let kl = kl_gauss(enc.mu, enc.logvar)?;
    let report = match weights.regime {
        Regime::Vae => beta_vae_loss(recon_mse(xv, xbar)?, kl, 1.0)?,
        Regime::BetaVae => beta_vae_loss(recon_mse(xv, xbar)?, kl, weights.beta)?,
        Regime::LVae => lvae_loss(recon_mse(xv, xbar)?, kl, weights, &bw)?,
        Regime::SigmaVae => sigma_vae_loss(xv, xbar, kl, weights, &bw)?,
        Regime::ControlVae | Regime::DynamicVae => {
            let ctrl = weights
                .controller
                .as_mut()
                .expect("controlled regime carries a controller");
            let beta = if train {
                ctrl.step(kl.item())?
            } else {
                ctrl.beta_current
            };
            weights.beta = beta;
            beta_vae_loss(recon_mse(xv, xbar)?, kl, beta)?
        }
    };
    let total = report.total.item();
    let grads = if train && total.is_finite() {
        let mut g = tape.backward(report.total)?;
        let mut out: Vec<Vec<f64>> = p.vars.iter().map(|v| g.take(*v).into_data()).collect();
        let extra: Vec<f64> = bw.vars().iter().map(|v| g.take(*v).item()).collect();
        if !extra.is_empty() {
            out.push(extra);
        }
        Some(out)
    } else {
        None
    };
    Ok(StepResult {
        recon: report.recon,
        kl: report.kl,
        total,
        effective_beta: report.effective_beta,
        grads,
    })
}

fn validation_score(model: &VaeModel<f64>, ds: &FactorDataset, rows: &[usize], cfg: &MetricConfig) -> Result<f64> {
    betavae_score(&encode_dataset(model, ds, rows)?, cfg)
}

/// Loads or generates the dataset, then trains.
pub fn train(cfg: &RunConfig) -> Result<TrainOutcome> {
    let ds = cfg.data.load()?;
    train_on(cfg, &ds)
}

/// Trains on an already loaded dataset.
///
/// Row `t` of the log describes the model after `t` Adam updates: the loss of
/// the `t`-th batch, the learning rate applied to it, and (at evaluation
/// points) the validation β-VAE score. Rows are written every
/// `log_interval` and `eval_interval` iterations and at `t = iters`, where
/// only a measurement is taken. Evaluation points also write a checkpoint.
pub fn train_on(cfg: &RunConfig, ds: &FactorDataset) -> Result<TrainOutcome> {
    cfg.validate()?;
    let splits = cfg.splits(ds)?;
    let mut model = cfg.build_model(ds.dims)?;
    let mut weights = cfg.loss_weights()?;
    let schedule = cfg.schedule();
    let mut sizes: Vec<usize> = model.params().iter().map(Tensor::numel).collect();
    if weights.learnable_len() > 0 {
        sizes.push(weights.learnable_len());
    }
    let mut adam = AdamState::<f64>::new(&sizes);
    let mut batcher = Batcher::new(&splits.train, cfg.batch, seed::rng(cfg.seed, Stream::Batching))?;
    let mut noise = seed::rng(cfg.seed, Stream::Noise);
    if let Some(dir) = &cfg.out_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut log = TrainLog::new(cfg.regime);
    let mut best: Option<BestCheckpoint> = None;
    for t in 0..=cfg.iters {
        let training = t < cfg.iters;
        let rows = batcher.next().to_vec();
        let lr = if training {
            schedule.lr_at(t)?
        } else {
            schedule.final_lr
        };
        let sigmas = (weights.regime == Regime::LVae).then(|| (weights.sigma0(), weights.sigma1()));
        let step = run_step(&model, &mut weights, ds.batch(&rows), &mut noise, training)?;
        if !step.total.is_finite() {
            return Err(Error::NonFinite {
                iteration: t,
                batch: rows,
                weights: describe_weights(&weights),
            });
        }
        let evaluate = t == cfg.iters || (t > 0 && t % cfg.eval_interval == 0);
        let mut val = None;
        if evaluate {
            let score = validation_score(&model, ds, &splits.val, &cfg.metrics)?;
            val = Some(score);
            let ck = Checkpoint {
                model: model.clone(),
                weights: weights.clone(),
                iteration: t as u64,
            };
            if let Some(dir) = &cfg.out_dir {
                if cfg.keep_eval_checkpoints {
                    save_checkpoint(&ck, dir.join(format!("ckpt_{t:07}.lvae")))?;
                }
            }
            if best.as_ref().is_none_or(|b| score > b.score) {
                best = Some(BestCheckpoint {
                    iteration: t,
                    score,
                    checkpoint: ck,
                });
            }
        }
        if evaluate || t % cfg.log_interval == 0 {
            log.rows.push(LogRow {
                iteration: t,
                lr,
                recon: step.recon,
                kl: step.kl,
                total: step.total,
                sigmas,
                effective_beta: step.effective_beta,
                val_betavae: val,
            });
        }
        if let Some(grads) = step.grads {
            let mut learn = weights.learnable();
            {
                let mut slots: Vec<&mut [f64]> = model.params_mut().iter_mut().map(Tensor::data_mut).collect();
                if !learn.is_empty() {
                    slots.push(&mut learn);
                }
                let g: Vec<&[f64]> = grads.iter().map(Vec::as_slice).collect();
                adam.step(&mut slots, &g, lr)?;
            }
            if !learn.is_empty() {
                weights.set_learnable(&learn);
            }
        }
    }

    let final_checkpoint = Checkpoint {
        model,
        weights,
        iteration: cfg.iters as u64,
    };
    let best = best.expect("the final iteration is always evaluated");
    if let Some(dir) = &cfg.out_dir {
        log.save(dir.join("train_log.csv"))?;
        save_checkpoint(&final_checkpoint, dir.join("ckpt_final.lvae"))?;
        save_checkpoint(&best.checkpoint, dir.join("ckpt_best.lvae"))?;
    }
    Ok(TrainOutcome {
        log,
        splits,
        final_checkpoint,
        best,
    })
}
