use lvae_core::autodiff::Tape;
use lvae_core::nets::{reparameterize, reparameterize_with, Arch, ImageDims, VaeModel, LOGVAR_MAX, LOGVAR_MIN};
use lvae_core::seed::{self, Stream};
use lvae_core::tensor::Tensor;

fn model(arch: Arch, dims: ImageDims, latent: usize, seed: u64) -> VaeModel<f64> {
    let mut rng = seed::rng(seed, Stream::Init);
    match arch {
        Arch::Mlp => VaeModel::build_mlp(latent, dims, 32, &mut rng).unwrap(),
        Arch::Cnn => VaeModel::build_cnn(latent, dims, &mut rng).unwrap(),
    }
}

#[test]
fn shapes_and_ranges_for_both_architectures() {
    for (arch, dims) in [
        (Arch::Mlp, ImageDims::new(16, 16, 1)),
        (Arch::Cnn, ImageDims::new(64, 64, 3)),
    ] {
        let m = model(arch, dims, 6, 3);
        let x = Tensor::from_fn([3, dims.pixels()], |i| ((i * 37) % 11) as f64 / 10.0);
        let tape = Tape::new();
        let p = m.bind(&tape);
        let enc = m.encode(&p, tape.constant(x)).unwrap();
        assert_eq!(enc.mu.shape(), vec![3, 6]);
        assert_eq!(enc.logvar.shape(), vec![3, 6]);
        let lat = reparameterize(&enc, &mut seed::rng(3, Stream::Noise)).unwrap();
        let xbar = m.decode(&p, lat.z).unwrap().value();
        assert_eq!(xbar.shape(), &[3, dims.pixels()]);
        assert!(
            xbar.data().iter().all(|v| *v > 0.0 && *v < 1.0),
            "{arch:?} outputs must be sigmoid"
        );
        assert_eq!(m.params().len(), p.vars.len());
    }
}

#[test]
fn initialization_is_seeded() {
    let dims = ImageDims::new(16, 16, 1);
    let a = model(Arch::Mlp, dims, 5, 1);
    assert_eq!(a, model(Arch::Mlp, dims, 5, 1));
    assert_ne!(a, model(Arch::Mlp, dims, 5, 2));
}

#[test]
fn reparameterization_uses_given_noise() {
    let m = model(Arch::Mlp, ImageDims::new(8, 8, 1), 3, 0);
    let tape = Tape::new();
    let p = m.bind_frozen(&tape);
    let x = Tensor::from_fn([2, 64], |i| (i % 2) as f64);
    let enc = m.encode(&p, tape.constant(x)).unwrap();
    let eps = Tensor::from_fn([2, 3], |i| i as f64 - 2.5);
    let lat = reparameterize_with(&enc, eps.clone()).unwrap();
    let (mu, lv, z) = (enc.mu.value(), enc.logvar.value(), lat.z.value());
    for i in 0..6 {
        let expect = mu.data()[i] + (0.5 * lv.data()[i]).exp() * eps.data()[i];
        assert!((z.data()[i] - expect).abs() < 1e-12);
        assert!(lv.data()[i] >= LOGVAR_MIN && lv.data()[i] <= LOGVAR_MAX);
    }
    assert!(reparameterize_with(&enc, Tensor::zeros([2, 4])).is_err());
}

#[test]
fn value_paths_match_the_tape() {
    let m = model(Arch::Mlp, ImageDims::new(8, 8, 1), 4, 9);
    let x = Tensor::from_fn([5, 64], |i| ((i * 13) % 7) as f64 / 6.0);
    let tape = Tape::new();
    let p = m.bind_frozen(&tape);
    let mu = m.encode(&p, tape.constant(x.clone())).unwrap().mu.value();
    assert_eq!(mu, m.encode_mean(&x).unwrap());
    let xbar = m.decode(&p, tape.constant(mu.clone())).unwrap().value();
    assert_eq!(xbar, m.decode_values(&mu).unwrap());
}

#[test]
fn from_parts_rebuilds_and_validates() {
    let m = model(Arch::Mlp, ImageDims::new(8, 8, 1), 4, 2);
    let rebuilt = VaeModel::from_parts(Arch::Mlp, 4, m.dims, m.hidden, m.params().to_vec()).unwrap();
    assert_eq!(rebuilt, m);
    let mut bad = m.params().to_vec();
    bad.pop();
    assert!(VaeModel::from_parts(Arch::Mlp, 4, m.dims, m.hidden, bad).is_err());
}

#[test]
fn cnn_rejects_unsupported_sizes() {
    assert!(VaeModel::<f64>::build_cnn(5, ImageDims::new(16, 16, 1), &mut seed::rng(0, Stream::Init)).is_err());
}

#[test]
fn f32_model_tracks_f64_model() {
    let m64 = model(Arch::Mlp, ImageDims::new(8, 8, 1), 3, 4);
    let params32: Vec<Tensor<f32>> = m64.params().iter().map(|p| p.cast()).collect();
    let m32 = VaeModel::<f32>::from_parts(Arch::Mlp, 3, m64.dims, m64.hidden, params32).unwrap();
    let x = Tensor::from_fn([2, 64], |i| (i % 3) as f64 / 2.0);
    let a = m64.encode_mean(&x).unwrap();
    let b = m32.encode_mean(&x.cast()).unwrap();
    for (u, v) in a.data().iter().zip(b.data()) {
        assert!((u - *v as f64).abs() < 1e-4);
    }
}
