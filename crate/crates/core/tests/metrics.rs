use lvae_core::data::{generate_minidsprites, split, FactorDataset, FactorSpec, FactorTable, GeneratorConfig};
use lvae_core::error::Result;
use lvae_core::metrics::{
    betavae_score, evaluate_all, evaluate_table, explicitness, factorvae_score, irs, mig, sap, Encoder, MetricConfig,
    RepresentationTable,
};
use lvae_core::nets::VaeModel;
use lvae_core::seed::{self, Stream};
use proptest::prelude::*;

fn grid_factors(cards: Vec<usize>) -> FactorTable {
    let spec = FactorSpec::new((0..cards.len()).map(|k| format!("f{k}")).collect(), cards.clone()).unwrap();
    let values = (0..spec.combinations()).flat_map(|i| spec.combination(i)).collect();
    FactorTable::new(cards, values).unwrap()
}

fn quick() -> MetricConfig {
    MetricConfig {
        betavae_train_votes: 120,
        betavae_eval_votes: 60,
        betavae_batch: 16,
        factorvae_train_votes: 120,
        factorvae_eval_votes: 60,
        factorvae_batch: 16,
        bins: 10,
        probe_max_iters: 300,
        ..MetricConfig::default()
    }
}

fn all_scores(t: &RepresentationTable, cfg: &MetricConfig) -> [f64; 6] {
    [
        betavae_score(t, cfg).unwrap(),
        factorvae_score(t, cfg).unwrap(),
        mig(t, cfg.bins).unwrap(),
        sap(t, cfg).unwrap(),
        explicitness(t, cfg).unwrap(),
        irs(t, cfg.bins).unwrap(),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn scores_lie_in_unit_interval(seed in any::<u64>(), latent in 1usize..6, mix in 0.0f64..1.0) {
        let factors = grid_factors(vec![3, 4, 2, 5]);
        let noise = RepresentationTable::noise(factors.clone(), latent, &mut seed::rng(seed, Stream::Noise)).unwrap();
        let ident = RepresentationTable::identity(factors.clone());
        // blend a signal into the noise so the whole range gets exercised
        let codes: Vec<f64> = (0..factors.rows())
            .flat_map(|r| (0..latent).map(move |j| (r, j)))
            .map(|(r, j)| mix * ident.code(r)[j % 4] + (1.0 - mix) * noise.code(r)[j])
            .collect();
        let t = RepresentationTable::new(codes, latent, factors).unwrap();
        let cfg = MetricConfig { seed, ..quick() };
        for s in all_scores(&t, &cfg) {
            prop_assert!((0.0..=1.0).contains(&s), "{s}");
        }
    }

    #[test]
    fn dimension_permutation_invariance(seed in any::<u64>()) {
        let factors = grid_factors(vec![3, 4, 5]);
        let ident = RepresentationTable::identity(factors.clone());
        let noise = RepresentationTable::noise(factors.clone(), 2, &mut seed::rng(seed, Stream::Noise)).unwrap();
        let codes: Vec<f64> = (0..factors.rows())
            .flat_map(|r| ident.code(r).iter().map(|v| v + 0.3 * noise.code(r)[0]).chain([noise.code(r)[1]]).collect::<Vec<_>>())
            .collect();
        let t = RepresentationTable::new(codes, 4, factors).unwrap();
        let p = t.permute_dims(&[2, 0, 3, 1]).unwrap();
        let cfg = quick();
        prop_assert_eq!(mig(&t, cfg.bins).unwrap(), mig(&p, cfg.bins).unwrap());
        prop_assert_eq!(sap(&t, &cfg).unwrap(), sap(&p, &cfg).unwrap());
        prop_assert_eq!(factorvae_score(&t, &cfg).unwrap(), factorvae_score(&p, &cfg).unwrap());
        prop_assert!((irs(&t, cfg.bins).unwrap() - irs(&p, cfg.bins).unwrap()).abs() < 1e-12);
        prop_assert!((betavae_score(&t, &cfg).unwrap() - betavae_score(&p, &cfg).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn positive_rescaling_invariance(scale in prop::collection::vec(0.01f64..100.0, 3)) {
        let factors = grid_factors(vec![3, 4, 5]);
        let noise = RepresentationTable::noise(factors.clone(), 3, &mut seed::rng(1, Stream::Noise)).unwrap();
        let ident = RepresentationTable::identity(factors.clone());
        let codes: Vec<f64> = (0..factors.rows() * 3).map(|i| ident.codes()[i] + 0.2 * noise.codes()[i]).collect();
        let t = RepresentationTable::new(codes, 3, factors).unwrap();
        let s = t.rescale_dims(&scale).unwrap();
        let cfg = quick();
        prop_assert_eq!(mig(&t, cfg.bins).unwrap(), mig(&s, cfg.bins).unwrap());
        prop_assert_eq!(sap(&t, &cfg).unwrap(), sap(&s, &cfg).unwrap());
        prop_assert!((factorvae_score(&t, &cfg).unwrap() - factorvae_score(&s, &cfg).unwrap()).abs() < 1e-12);
        // irs weights dimensions by their spread, so only a common scale leaves it unchanged
        let u = t.rescale_dims(&[scale[0]; 3]).unwrap();
        prop_assert!((irs(&t, cfg.bins).unwrap() - irs(&u, cfg.bins).unwrap()).abs() < 1e-9);
    }
}

#[test]
fn mixing_dimensions_lowers_irs_and_mig() {
    let factors = grid_factors(vec![6, 6, 6]);
    let ident = RepresentationTable::identity(factors.clone());
    let (c, s) = (std::f64::consts::FRAC_1_SQRT_2, std::f64::consts::FRAC_1_SQRT_2);
    let codes: Vec<f64> = (0..factors.rows())
        .flat_map(|r| {
            let z = ident.code(r);
            [c * z[0] + s * z[1], -s * z[0] + c * z[1], z[2]]
        })
        .collect();
    let mixed = RepresentationTable::new(codes, 3, factors).unwrap();
    let cfg = quick();
    let (i0, i1) = (irs(&ident, cfg.bins).unwrap(), irs(&mixed, cfg.bins).unwrap());
    assert!(i0 > 0.99 && i1 < i0 - 0.2, "identity {i0} mixed {i1}");
    assert!(mig(&mixed, cfg.bins).unwrap() < mig(&ident, cfg.bins).unwrap() - 0.2);
}

#[test]
fn collapsed_dimensions_are_ignored() {
    let factors = grid_factors(vec![4, 5]);
    let ident = RepresentationTable::identity(factors.clone());
    let codes: Vec<f64> = (0..factors.rows())
        .flat_map(|r| [ident.code(r)[0], 0.25, ident.code(r)[1]])
        .collect();
    let t = RepresentationTable::new(codes, 3, factors).unwrap();
    let cfg = quick();
    assert!(factorvae_score(&t, &cfg).unwrap() > 0.99);
    assert!(mig(&t, cfg.bins).unwrap() > 0.99);
    assert!(irs(&t, cfg.bins).unwrap() > 0.99);
}

#[test]
fn non_finite_codes_are_rejected() {
    let factors = grid_factors(vec![2, 2]);
    assert!(RepresentationTable::new(vec![f64::NAN; 4], 1, factors).is_err());
}

/// Encodes every row to its normalized factor values.
struct FactorOracle;

impl Encoder for FactorOracle {
    fn latent_dim(&self) -> usize {
        5
    }

    fn encode_rows(&self, ds: &FactorDataset, indices: &[usize]) -> Result<Vec<f64>> {
        Ok(RepresentationTable::identity(ds.factors().select(indices))
            .codes()
            .to_vec())
    }

    fn reconstruction_error(&self, _: &FactorDataset, _: &[usize]) -> Result<f64> {
        Ok(0.0)
    }
}

#[test]
fn oracle_encoder_scores_near_one_through_evaluate_all() {
    let ds = generate_minidsprites(&GeneratorConfig::default()).unwrap();
    let splits = split(ds.len(), (0.5, 0.0, 0.5), &mut seed::rng(0, Stream::Split)).unwrap();
    let r = evaluate_all(&FactorOracle, &ds, &splits, &MetricConfig::default()).unwrap();
    assert_eq!(r.recon, 0.0);
    for s in r.scores() {
        assert!(s > 0.9, "{r:?}");
    }
}

#[test]
fn untrained_model_evaluation_is_bounded_and_deterministic() {
    let ds = generate_minidsprites(&GeneratorConfig::default()).unwrap();
    let splits = split(ds.len(), (0.85, 0.075, 0.075), &mut seed::rng(0, Stream::Split)).unwrap();
    let model = VaeModel::<f64>::build_mlp(5, ds.dims, 64, &mut seed::rng(0, Stream::Init)).unwrap();
    let cfg = quick();
    let a = evaluate_all(&model, &ds, &splits, &cfg).unwrap();
    let b = evaluate_all(&model, &ds, &splits, &cfg).unwrap();
    assert_eq!(a, b);
    assert!(a.recon.is_finite() && a.recon > 0.0);
    assert!(a.scores().iter().all(|s| (0.0..=1.0).contains(s)), "{a:?}");
    let capped = evaluate_all(
        &model,
        &ds,
        &splits,
        &MetricConfig {
            max_rows: Some(200),
            ..cfg.clone()
        },
    )
    .unwrap();
    assert!(capped.scores().iter().all(|s| (0.0..=1.0).contains(s)));
}

#[test]
fn evaluate_table_passes_recon_through() {
    let t = RepresentationTable::identity(grid_factors(vec![3, 3, 4]));
    let r = evaluate_table(&t, 7.5, &quick()).unwrap();
    assert_eq!(r.recon, 7.5);
    assert!(r.scores().iter().all(|s| *s > 0.9), "{r:?}");
}
