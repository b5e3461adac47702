use lvae_core::autodiff::Tape;
use lvae_core::losses::{
    beta_vae_loss, kl_gauss, lvae_loss, recon_mse, sigma_vae_loss, ControllerState, LossWeights, Regime,
    SigmaRegularizer,
};
use lvae_core::tensor::Tensor;
use proptest::prelude::*;

/// Total l-vae loss and its gradient w.r.t. (s0, s1) for frozen terms.
fn lvae_at(recon: f64, kl: f64, s: (f64, f64), reg: SigmaRegularizer) -> (f64, f64, f64) {
    let mut w = LossWeights::<f64>::l_vae();
    w.regularizer = reg;
    w.set_learnable(&[s.0, s.1]);
    let tape = Tape::new();
    let bw = w.bind(&tape);
    let r = lvae_loss(
        tape.constant(Tensor::scalar(recon)),
        tape.constant(Tensor::scalar(kl)),
        &w,
        &bw,
    )
    .unwrap();
    let g = tape.backward(r.total).unwrap();
    (
        r.total.item(),
        g.wrt(bw.s0.unwrap()).item(),
        g.wrt(bw.s1.unwrap()).item(),
    )
}

proptest! {
    #[test]
    fn lvae_total_matches_closed_form(recon in 0.0f64..100.0, kl in 0.0f64..50.0, s0 in -2.0f64..2.0, s1 in -2.0f64..2.0) {
        let (total, _, _) = lvae_at(recon, kl, (s0, s1), SigmaRegularizer::Squared);
        let expect = recon * (-2.0 * s0).exp() + kl * (-2.0 * s1).exp() + (2.0 * s0).exp() + (2.0 * s1).exp();
        prop_assert!((total - expect).abs() <= 1e-12 * expect.max(1.0));
    }

    #[test]
    fn squared_regularizer_stationary_point(recon in 0.01f64..200.0, kl in 0.01f64..50.0) {
        // σᵢ² = sqrt(term) zeroes both partial derivatives
        let s = (0.25 * recon.ln(), 0.25 * kl.ln());
        let (_, g0, g1) = lvae_at(recon, kl, s, SigmaRegularizer::Squared);
        prop_assert!(g0.abs() < 1e-9 * recon.sqrt().max(1.0) && g1.abs() < 1e-9 * kl.sqrt().max(1.0));
        let mut w = LossWeights::<f64>::l_vae();
        w.set_learnable(&[s.0, s.1]);
        prop_assert!((w.effective_beta() - (recon / kl).sqrt()).abs() < 1e-9 * (recon / kl).sqrt());
    }

    #[test]
    fn log_regularizer_stationary_point(recon in 0.01f64..200.0, kl in 0.01f64..50.0) {
        // σᵢ² = 2·term
        let s = (0.5 * (2.0 * recon).ln(), 0.5 * (2.0 * kl).ln());
        let (_, g0, g1) = lvae_at(recon, kl, s, SigmaRegularizer::Log);
        prop_assert!(g0.abs() < 1e-9 && g1.abs() < 1e-9);
    }

    #[test]
    fn lvae_argmin_matches_rescaled_beta_vae(recon in 0.1f64..100.0, kl in 0.1f64..50.0) {
        // at the optimal σ the network sees recon/σ₀² + kl/σ₁², i.e. σ₀⁻²·(recon + β̂·kl)
        let s = (0.25 * recon.ln(), 0.25 * kl.ln());
        let mut w = LossWeights::<f64>::l_vae();
        w.set_learnable(&[s.0, s.1]);
        let beta_hat = w.effective_beta();
        let weighted = recon * (-2.0 * s.0).exp() + kl * (-2.0 * s.1).exp();
        let rescaled = (-2.0 * s.0).exp() * (recon + beta_hat * kl);
        prop_assert!((weighted - rescaled).abs() <= 1e-10 * weighted);
    }

    #[test]
    fn kl_is_non_negative_and_zero_at_prior(mu in prop::collection::vec(-3.0f64..3.0, 6), lv in prop::collection::vec(-4.0f64..4.0, 6)) {
        let tape = Tape::<f64>::new();
        let kl = kl_gauss(tape.constant(Tensor::new([2, 3], mu).unwrap()), tape.constant(Tensor::new([2, 3], lv).unwrap())).unwrap().item();
        prop_assert!(kl >= 0.0);
        let zero = kl_gauss(tape.constant(Tensor::zeros([2, 3])), tape.constant(Tensor::zeros([2, 3]))).unwrap().item();
        prop_assert_eq!(zero, 0.0);
    }

    #[test]
    fn controller_stays_clamped(kls in prop::collection::vec(0.0f64..1000.0, 1..400), dynamic in any::<bool>()) {
        let mut c = if dynamic { ControllerState::dynamic_vae() } else { ControllerState::control_vae() };
        for kl in kls {
            let b = c.step(kl).unwrap();
            prop_assert!((c.beta_min..=c.beta_max).contains(&b));
        }
    }
}

#[test]
fn controller_integral_holds_at_setpoint() {
    let mut c = ControllerState::control_vae();
    for _ in 0..1000 {
        let b = c.step(c.kl_set).unwrap();
        assert_eq!(c.integral, 0.0);
        // half the proportional gain at zero error, on top of the floor
        assert!((b - 0.005).abs() < 1e-15);
    }
    assert!(c.step(f64::NAN).is_err());
}

#[test]
fn sigma_vae_optimal_scale_is_rmse() {
    let x = Tensor::from_fn([4, 16], |i| (i % 5) as f64 / 4.0);
    let xbar = Tensor::from_fn([4, 16], |i| (i % 3) as f64 / 3.0);
    let sse = {
        let tape = Tape::<f64>::new();
        recon_mse(tape.constant(x.clone()), tape.constant(xbar.clone()))
            .unwrap()
            .item()
    };
    // optimum of SSE/(2σ²) + D·log σ is σ² = SSE/D
    let ls = 0.5 * (sse / 16.0).ln();
    let mut w = LossWeights::<f64>::sigma_vae();
    w.set_learnable(&[ls]);
    let tape = Tape::new();
    let bw = w.bind(&tape);
    let kl = tape.constant(Tensor::scalar(1.5));
    let r = sigma_vae_loss(tape.constant(x), tape.constant(xbar), kl, &w, &bw).unwrap();
    let g = tape
        .backward(r.total)
        .unwrap()
        .wrt(bw.log_decoder_sigma.unwrap())
        .item();
    assert!(g.abs() < 1e-9, "{g}");
    assert!((r.effective_beta - 2.0 * sse / 16.0).abs() < 1e-12);
    assert!((w.effective_beta() - r.effective_beta).abs() < 1e-12);
}

#[test]
fn regimes_reject_mismatched_weights() {
    let tape = Tape::<f64>::new();
    let one = || tape.constant(Tensor::scalar(1.0));
    let vae = LossWeights::<f64>::vae();
    assert!(lvae_loss(one(), one(), &vae, &vae.bind(&tape)).is_err());
    assert!(beta_vae_loss(one(), one(), -1.0).is_err());
    assert!(LossWeights::<f64>::beta_vae(-0.5).is_err());
    let l = LossWeights::<f64>::l_vae();
    assert_eq!(l.regime, Regime::LVae);
    assert_eq!((l.sigma0(), l.sigma1(), l.effective_beta()), (1.0, 1.0, 1.0));
}
