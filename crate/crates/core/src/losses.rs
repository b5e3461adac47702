//! Training objectives: plain and fixed-β VAE, the learnable-weight L-VAE,
//! σ-VAE with a learned decoder variance, and PI-controlled β.
//!
//! Reconstruction error is the per-sample sum of squared pixel errors,
//! averaged over the batch. The KL term uses the same reduction.

use std::fmt;
use std::str::FromStr;

use crate::autodiff::{Tape, Var};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{Tensor, TensorError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Regime {
    Vae,
    BetaVae,
    LVae,
    SigmaVae,
    ControlVae,
    DynamicVae,
}

impl Regime {
    pub const ALL: [Regime; 6] = [
        Regime::Vae,
        Regime::BetaVae,
        Regime::LVae,
        Regime::SigmaVae,
        Regime::ControlVae,
        Regime::DynamicVae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::Vae => "vae",
            Regime::BetaVae => "beta-vae",
            Regime::LVae => "l-vae",
            Regime::SigmaVae => "sigma-vae",
            Regime::ControlVae => "control-vae",
            Regime::DynamicVae => "dynamic-vae",
        }
    }

    pub fn tag(self) -> u32 {
        Self::ALL.iter().position(|&r| r == self).unwrap() as u32
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Self::ALL.get(tag as usize).copied()
    }

    pub fn is_controlled(self) -> bool {
        matches!(self, Regime::ControlVae | Regime::DynamicVae)
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Regime {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown regime {s:?}")))
    }
}

/// Regularizer applied to the learned L-VAE weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SigmaRegularizer {
    /// `σ₀² + σ₁²`, the form L-VAE trains with.
    #[default]
    Squared,
    /// `log σ₀ + log σ₁`, the multi-task uncertainty form; ablation only.
    Log,
}

/// PI controller state for the ControlVAE / DynamicVAE β schedules.
///
/// Each step computes `e = kl_set - kl`, accumulates `integral += e`, and sets
/// `β = k_p / (1 + exp(e)) + k_i * integral + beta_floor`, clamped to
/// `[beta_min, beta_max]`. With the negative `k_i` these regimes use, a KL
/// below target lowers β.
#[derive(Debug, Clone, PartialEq)]
pub struct ControllerState {
    pub kl_set: f64,
    pub k_p: f64,
    pub k_i: f64,
    pub integral: f64,
    pub beta_min: f64,
    pub beta_max: f64,
    pub beta_floor: f64,
    pub beta_current: f64,
}

impl ControllerState {
    pub fn new(kl_set: f64, k_p: f64, k_i: f64, beta_init: f64) -> Self {
        let (beta_min, beta_max) = (0.0, 200.0);
        Self {
            kl_set,
            k_p,
            k_i,
            integral: 0.0,
            beta_min,
            beta_max,
            beta_floor: beta_init,
            beta_current: beta_init.clamp(beta_min, beta_max),
        }
    }

    pub fn control_vae() -> Self {
        Self::new(18.0, 0.01, -0.001, 0.0)
    }

    pub fn dynamic_vae() -> Self {
        Self::new(18.0, 0.01, -0.005, 150.0)
    }

    pub fn step(&mut self, kl_observed: f64) -> Result<f64> {
        if !kl_observed.is_finite() {
            return Err(Error::Config(format!(
                "controller received non-finite KL {kl_observed}"
            )));
        }
        let e = self.kl_set - kl_observed;
        self.integral += e;
        let p = self.k_p / (1.0 + e.exp());
        let beta = p + self.k_i * self.integral + self.beta_floor;
        self.beta_current = beta.clamp(self.beta_min, self.beta_max);
        Ok(self.beta_current)
    }
}

/// Regime selector plus whatever weighting state the regime owns.
///
/// `s0`, `s1` hold `log σ₀`, `log σ₁` and `log_decoder_sigma` holds `log σ_d`,
/// so every σ is positive by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LossWeights<T: Scalar = f64> {
    pub regime: Regime,
    pub beta: f64,
    pub s0: T,
    pub s1: T,
    pub log_decoder_sigma: T,
    pub controller: Option<ControllerState>,
    pub regularizer: SigmaRegularizer,
}

impl<T: Scalar> LossWeights<T> {
    fn base(regime: Regime) -> Self {
        Self {
            regime,
            beta: 1.0,
            s0: T::zero(),
            s1: T::zero(),
            log_decoder_sigma: T::zero(),
            controller: None,
            regularizer: SigmaRegularizer::Squared,
        }
    }

    pub fn vae() -> Self {
        Self::base(Regime::Vae)
    }

    pub fn beta_vae(beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
        }
        Ok(Self {
            beta,
            ..Self::base(Regime::BetaVae)
        })
    }

    /// σ₀ = σ₁ = 1 at start.
    pub fn l_vae() -> Self {
        Self::base(Regime::LVae)
    }

    pub fn sigma_vae() -> Self {
        Self::base(Regime::SigmaVae)
    }

    pub fn controlled(regime: Regime, controller: ControllerState) -> Self {
        assert!(regime.is_controlled());
        Self {
            beta: controller.beta_current,
            controller: Some(controller),
            ..Self::base(regime)
        }
    }

    pub fn sigma0(&self) -> T {
        self.s0.exp()
    }

    pub fn sigma1(&self) -> T {
        self.s1.exp()
    }

    pub fn decoder_sigma(&self) -> T {
        self.log_decoder_sigma.exp()
    }

    /// Number of scalars the optimizer updates for this regime.
    pub fn learnable_len(&self) -> usize {
        match self.regime {
            Regime::LVae => 2,
            Regime::SigmaVae => 1,
            _ => 0,
        }
    }

    pub fn learnable(&self) -> Vec<T> {
        match self.regime {
            Regime::LVae => vec![self.s0, self.s1],
            Regime::SigmaVae => vec![self.log_decoder_sigma],
            _ => Vec::new(),
        }
    }

    pub fn set_learnable(&mut self, values: &[T]) {
        assert_eq!(values.len(), self.learnable_len());
        match self.regime {
            Regime::LVae => {
                self.s0 = values[0];
                self.s1 = values[1];
            }
            Regime::SigmaVae => self.log_decoder_sigma = values[0],
            _ => {}
        }
    }

    /// Places the learnable scalars on `tape` as tracked leaves.
    pub fn bind<'t>(&self, tape: &'t Tape<T>) -> BoundWeights<'t, T> {
        let leaf = |v: T| Some(tape.param(Tensor::scalar(v)));
        match self.regime {
            Regime::LVae => BoundWeights {
                s0: leaf(self.s0),
                s1: leaf(self.s1),
                log_decoder_sigma: None,
            },
            Regime::SigmaVae => BoundWeights {
                s0: None,
                s1: None,
                log_decoder_sigma: leaf(self.log_decoder_sigma),
            },
            _ => BoundWeights::default(),
        }
    }

    /// β implied by the current weights: 1 for vae, the fixed or controller
    /// β where one exists, `σ₀²/σ₁²` for l-vae, and `2σ_d²` for σ-VAE (the KL
    /// weight relative to a unit-weight squared error).
    pub fn effective_beta(&self) -> f64 {
        match self.regime {
            Regime::Vae => 1.0,
            Regime::BetaVae => self.beta,
            Regime::LVae => (T::lit(2.0) * (self.s0 - self.s1)).exp().as_f64(),
            Regime::SigmaVae => 2.0 * (T::lit(2.0) * self.log_decoder_sigma).exp().as_f64(),
            Regime::ControlVae | Regime::DynamicVae => self.controller.as_ref().map_or(self.beta, |c| c.beta_current),
        }
    }
}

/// Learnable weights on a tape. Unused slots are `None`.
#[derive(Debug, Clone, Copy, Default)]
pub struct BoundWeights<'t, T: Scalar = f64> {
    pub s0: Option<Var<'t, T>>,
    pub s1: Option<Var<'t, T>>,
    pub log_decoder_sigma: Option<Var<'t, T>>,
}

impl<'t, T: Scalar> BoundWeights<'t, T> {
    /// Tracked leaves in the same order as [`LossWeights::learnable`].
    pub fn vars(&self) -> Vec<Var<'t, T>> {
        [self.s0, self.s1, self.log_decoder_sigma]
            .into_iter()
            .flatten()
            .collect()
    }
}

/// One evaluated objective.
#[derive(Debug, Clone, Copy)]
pub struct LossReport<'t, T: Scalar = f64> {
    pub total: Var<'t, T>,
    pub recon: T,
    pub kl: T,
    pub effective_beta: f64,
    pub regularizer: T,
}

fn batch_of(v: &Var<'_, impl Scalar>) -> f64 {
    v.shape().first().copied().unwrap_or(1) as f64
}

/// Sum of squared errors per sample, averaged over the batch.
pub fn recon_mse<'t, T: Scalar>(x: Var<'t, T>, xbar: Var<'t, T>) -> Result<Var<'t, T>> {
    let (xs, ys) = (x.shape(), xbar.shape());
    if xs != ys {
        return Err(TensorError::ShapeMismatch {
            op: "recon_mse",
            lhs: xs,
            rhs: ys,
        }
        .into());
    }
    Ok(x.sub(xbar)?.square()?.sum()?.scale(1.0 / batch_of(&x))?)
}

/// `0.5 * Σ(mu² + exp(logvar) - 1 - logvar)` per sample, averaged over the batch.
pub fn kl_gauss<'t, T: Scalar>(mu: Var<'t, T>, logvar: Var<'t, T>) -> Result<Var<'t, T>> {
    let (ms, ls) = (mu.shape(), logvar.shape());
    if ms != ls {
        return Err(TensorError::ShapeMismatch {
            op: "kl_gauss",
            lhs: ms,
            rhs: ls,
        }
        .into());
    }
    let inner = mu.square()?.add(logvar.exp()?)?.sub(logvar)?.shift(-1.0)?;
    Ok(inner.sum()?.scale(0.5 / batch_of(&mu))?)
}

/// `recon + β·kl`.
pub fn beta_vae_loss<'t, T: Scalar>(recon: Var<'t, T>, kl: Var<'t, T>, beta: f64) -> Result<LossReport<'t, T>> {
    if !(beta >= 0.0) {
        return Err(Error::Config(format!("beta must be >= 0, got {beta}")));
    }
    let total = recon.add(kl.scale(beta)?)?;
    Ok(LossReport {
        total,
        recon: recon.item(),
        kl: kl.item(),
        effective_beta: beta,
        regularizer: T::zero(),
    })
}

/// `recon/σ₀² + kl/σ₁² + σ₀² + σ₁²` with `σᵢ = exp(sᵢ)`.
pub fn lvae_loss<'t, T: Scalar>(
    recon: Var<'t, T>,
    kl: Var<'t, T>,
    w: &LossWeights<T>,
    bound: &BoundWeights<'t, T>,
) -> Result<LossReport<'t, T>> {
    if w.regime != Regime::LVae {
        return Err(Error::Config(format!("lvae_loss called with regime {}", w.regime)));
    }
    let (s0, s1) = match (bound.s0, bound.s1) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Config("l-vae weights not bound".into())),
    };
    // 1/σ² = exp(-2s), σ² = exp(2s)
    let inv0 = s0.scale(-2.0)?.exp()?;
    let inv1 = s1.scale(-2.0)?.exp()?;
    let weighted = recon.mul(inv0)?.add(kl.mul(inv1)?)?;
    let reg = match w.regularizer {
        SigmaRegularizer::Squared => s0.scale(2.0)?.exp()?.add(s1.scale(2.0)?.exp()?)?,
        SigmaRegularizer::Log => s0.add(s1)?,
    };
    let total = weighted.add(reg)?;
    Ok(LossReport {
        total,
        recon: recon.item(),
        kl: kl.item(),
        effective_beta: (T::lit(2.0) * (s0.item() - s1.item())).exp().as_f64(),
        regularizer: reg.item(),
    })
}

/// `SSE/(2σ_d²) + D·log σ_d + kl`, SSE batch-averaged, `D` pixels per sample.
pub fn sigma_vae_loss<'t, T: Scalar>(
    x: Var<'t, T>,
    xbar: Var<'t, T>,
    kl: Var<'t, T>,
    w: &LossWeights<T>,
    bound: &BoundWeights<'t, T>,
) -> Result<LossReport<'t, T>> {
    if w.regime != Regime::SigmaVae {
        return Err(Error::Config(format!("sigma_vae_loss called with regime {}", w.regime)));
    }
    let ls = bound
        .log_decoder_sigma
        .ok_or_else(|| Error::Config("sigma-vae weight not bound".into()))?;
    let sse = recon_mse(x, xbar)?;
    let d = x.shape().iter().skip(1).product::<usize>() as f64;
    let nll = sse.mul(ls.scale(-2.0)?.exp()?)?.scale(0.5)?;
    let log_term = ls.scale(d)?;
    let total = nll.add(log_term)?.add(kl)?;
    Ok(LossReport {
        total,
        recon: sse.item(),
        kl: kl.item(),
        effective_beta: 2.0 * (T::lit(2.0) * ls.item()).exp().as_f64(),
        regularizer: log_term.item(),
    })
}
