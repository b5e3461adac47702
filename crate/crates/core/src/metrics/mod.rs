//! The six disentanglement measures over a [`RepresentationTable`]:
//! β-VAE score, FactorVAE score, MIG, SAP, explicitness and IRS.
//!
//! All randomness (vote sampling, probe splits) comes from sub-streams of
//! [`MetricConfig::seed`], so every score is a deterministic function of the
//! table and the config.

mod info;
mod probe;

pub use info::{discretize, entropy, equal_occupancy_edges, mutual_information};
pub use probe::{balanced_accuracy, roc_auc, SoftmaxProbe};

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::{sample_fixed_factor_batch, FactorDataset, FactorIndex, FactorTable, SplitIndices};
use crate::error::{Error, Result};
use crate::nets::VaeModel;
use crate::scalar::Scalar;
use crate::seed::{self, Stream};
use crate::tensor::Tensor;

/// Dimensions whose empirical std falls below this are treated as collapsed.
pub const COLLAPSED_STD: f64 = 1e-6;

/// Sample budgets and probe settings for every protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricConfig {
    pub seed: u64,
    pub betavae_train_votes: usize,
    pub betavae_eval_votes: usize,
    /// Pairs averaged into one β-VAE feature vector.
    pub betavae_batch: usize,
    pub factorvae_train_votes: usize,
    pub factorvae_eval_votes: usize,
    /// Rows per FactorVAE vote.
    pub factorvae_batch: usize,
    /// Equal-occupancy bins for MIG, SAP and IRS.
    pub bins: usize,
    /// Fraction of rows used to fit the SAP and explicitness probes.
    pub probe_train_fraction: f64,
    pub probe_max_iters: usize,
    pub probe_tol: f64,
    /// Upper bound on rows fed to [`evaluate_all`].
    pub max_rows: Option<usize>,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            betavae_train_votes: 800,
            betavae_eval_votes: 400,
            betavae_batch: 64,
            factorvae_train_votes: 800,
            factorvae_eval_votes: 400,
            factorvae_batch: 64,
            bins: 20,
            probe_train_fraction: 2.0 / 3.0,
            probe_max_iters: 2000,
            probe_tol: 1e-5,
            max_rows: None,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("betavae_train_votes", self.betavae_train_votes),
            ("betavae_eval_votes", self.betavae_eval_votes),
            ("betavae_batch", self.betavae_batch),
            ("factorvae_train_votes", self.factorvae_train_votes),
            ("factorvae_eval_votes", self.factorvae_eval_votes),
            ("factorvae_batch", self.factorvae_batch),
        ];
        for (name, v) in counts {
            if v == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.bins < 2 {
            return Err(Error::Config(format!("bins must be >= 2, got {}", self.bins)));
        }
        if !(self.probe_train_fraction > 0.0 && self.probe_train_fraction < 1.0) {
            return Err(Error::Config("probe_train_fraction must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

/// `N x L` codes aligned with `N x K` factor labels.
#[derive(Debug, Clone, PartialEq)]
pub struct RepresentationTable {
    codes: Vec<f64>,
    latent: usize,
    factors: FactorTable,
    std: Vec<f64>,
}

impl RepresentationTable {
    pub fn new(codes: Vec<f64>, latent: usize, factors: FactorTable) -> Result<Self> {
        if latent == 0 || codes.len() != latent * factors.rows() {
            return Err(Error::Metric(format!(
                "{} code values do not form {} rows of width {latent}",
                codes.len(),
                factors.rows()
            )));
        }
        if codes.iter().any(|v| !v.is_finite()) {
            return Err(Error::Metric("codes contain non-finite values".into()));
        }
        let n = factors.rows().max(1) as f64;
        let std = (0..latent)
            .map(|j| {
                let col = codes.iter().skip(j).step_by(latent);
                let mean = col.clone().sum::<f64>() / n;
                (col.map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
            })
            .collect();
        Ok(Self {
            codes,
            latent,
            factors,
            std,
        })
    }

    /// One code per factor holding `value / (cardinality - 1)`.
    pub fn identity(factors: FactorTable) -> Self {
        let cards = factors.cardinalities().to_vec();
        let codes = factors
            .values()
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let c = cards[i % cards.len()];
                if c > 1 {
                    v as f64 / (c - 1) as f64
                } else {
                    0.0
                }
            })
            .collect();
        let k = factors.num_factors();
        Self::new(codes, k, factors).expect("identity codes are well formed")
    }

    /// `latent` standard-normal codes independent of the factors.
    pub fn noise(factors: FactorTable, latent: usize, rng: &mut impl Rng) -> Result<Self> {
        let codes = (0..factors.rows() * latent)
            .map(|_| StandardNormal.sample(rng))
            .collect();
        Self::new(codes, latent, factors)
    }

    pub fn rows(&self) -> usize {
        self.factors.rows()
    }

    pub fn latent(&self) -> usize {
        self.latent
    }

    pub fn codes(&self) -> &[f64] {
        &self.codes
    }

    pub fn code(&self, row: usize) -> &[f64] {
        &self.codes[row * self.latent..(row + 1) * self.latent]
    }

    pub fn column(&self, dim: usize) -> Vec<f64> {
        self.codes.iter().skip(dim).step_by(self.latent).copied().collect()
    }

    pub fn factors(&self) -> &FactorTable {
        &self.factors
    }

    /// Per-dimension population standard deviation.
    pub fn std(&self) -> &[f64] {
        &self.std
    }

    /// Reorders dimensions so that new dimension `j` is old `perm[j]`.
    pub fn permute_dims(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.latent];
        if perm.len() != self.latent
            || perm
                .iter()
                .any(|&p| p >= self.latent || std::mem::replace(&mut seen[p], true))
        {
            return Err(Error::Metric(format!(
                "{perm:?} is not a permutation of 0..{}",
                self.latent
            )));
        }
        let codes = (0..self.rows())
            .flat_map(|r| perm.iter().map(move |&p| self.codes[r * self.latent + p]))
            .collect();
        Self::new(codes, self.latent, self.factors.clone())
    }

    /// Multiplies dimension `j` by `scale[j]`.
    pub fn rescale_dims(&self, scale: &[f64]) -> Result<Self> {
        if scale.len() != self.latent {
            return Err(Error::Metric("one scale per dimension required".into()));
        }
        let codes = self
            .codes
            .iter()
            .enumerate()
            .map(|(i, v)| v * scale[i % self.latent])
            .collect();
        Self::new(codes, self.latent, self.factors.clone())
    }
}

/// One row of scores. Serializes in the column order
/// `recon,betavae,factorvae,explicitness,irs,mig,sap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub recon: f64,
    pub betavae: f64,
    pub factorvae: f64,
    pub explicitness: f64,
    pub irs: f64,
    pub mig: f64,
    pub sap: f64,
}

impl MetricReport {
    pub const HEADER: [&'static str; 7] = ["recon", "betavae", "factorvae", "explicitness", "irs", "mig", "sap"];

    pub fn scores(&self) -> [f64; 6] {
        [
            self.betavae,
            self.factorvae,
            self.explicitness,
            self.irs,
            self.mig,
            self.sap,
        ]
    }
}

/// Anything that maps dataset rows to codes: trained models, or oracle stubs.
pub trait Encoder {
    fn latent_dim(&self) -> usize;
    /// Row-major `indices.len() x latent_dim()` codes.
    fn encode_rows(&self, ds: &FactorDataset, indices: &[usize]) -> Result<Vec<f64>>;
    /// Mean over rows of the per-image squared reconstruction error.
    fn reconstruction_error(&self, ds: &FactorDataset, indices: &[usize]) -> Result<f64>;
}

const ENCODE_CHUNK: usize = 256;

impl<T: Scalar> VaeModel<T> {
    fn check_dataset(&self, ds: &FactorDataset) -> Result<()> {
        if ds.dims != self.dims {
            return Err(Error::Data(format!(
                "model expects {:?} images, dataset has {:?}",
                self.dims, ds.dims
            )));
        }
        Ok(())
    }
}

impl<T: Scalar> Encoder for VaeModel<T> {
    fn latent_dim(&self) -> usize {
        self.latent
    }

    fn encode_rows(&self, ds: &FactorDataset, indices: &[usize]) -> Result<Vec<f64>> {
        self.check_dataset(ds)?;
        let mut out = Vec::with_capacity(indices.len() * self.latent);
        for chunk in indices.chunks(ENCODE_CHUNK) {
            let mu = self.encode_mean(&ds.batch::<T>(chunk))?;
            out.extend(mu.data().iter().map(|v| v.as_f64()));
        }
        Ok(out)
    }

    fn reconstruction_error(&self, ds: &FactorDataset, indices: &[usize]) -> Result<f64> {
        self.check_dataset(ds)?;
        if indices.is_empty() {
            return Ok(0.0);
        }
        let mut sse = 0.0;
        for chunk in indices.chunks(ENCODE_CHUNK) {
            let x: Tensor<T> = ds.batch(chunk);
            let xbar = self.decode_values(&self.encode_mean(&x)?)?;
            sse += x
                .data()
                .iter()
                .zip(xbar.data())
                .map(|(a, b)| (*a - *b).as_f64().powi(2))
                .sum::<f64>();
        }
        Ok(sse / indices.len() as f64)
    }
}

/// Encoder means for `indices`, aligned with their factor rows.
pub fn encode_dataset(enc: &impl Encoder, ds: &FactorDataset, indices: &[usize]) -> Result<RepresentationTable> {
    let codes = enc.encode_rows(ds, indices)?;
    RepresentationTable::new(codes, enc.latent_dim(), ds.factors().select(indices))
}

/// Factors with at least two populated values.
fn varying_factors(index: &FactorIndex) -> Vec<usize> {
    (0..index.num_factors())
        .filter(|&k| index.populated_values(k, 1).len() >= 2)
        .collect()
}

/// Higgins et al. protocol: each vote fixes a random factor, averages
/// `|z_i - z_j|` over `betavae_batch` pairs sharing it, and labels the
/// resulting vector with that factor. A softmax probe fit on the training
/// votes is scored on held-out votes.
pub fn betavae_score(table: &RepresentationTable, cfg: &MetricConfig) -> Result<f64> {
    let index = table.factors().index();
    let usable = varying_factors(&index);
    if usable.is_empty() {
        return Err(Error::Metric("no factor takes more than one value".into()));
    }
    let l = table.latent();
    let mut rng = seed::child(cfg.seed, Stream::MetricVotes, 0);
    let total = cfg.betavae_train_votes + cfg.betavae_eval_votes;
    let mut features = Vec::with_capacity(total * l);
    let mut labels = Vec::with_capacity(total);
    for _ in 0..total {
        let class = rng.random_range(0..usable.len());
        let pairs = sample_fixed_factor_batch(table.factors(), &index, usable[class], cfg.betavae_batch, &mut rng)?;
        let mut f = vec![0.0; l];
        for (i, j) in pairs {
            for (d, (a, b)) in f.iter_mut().zip(table.code(i).iter().zip(table.code(j))) {
                *d += (a - b).abs();
            }
        }
        features.extend(f.iter().map(|v| v / cfg.betavae_batch as f64));
        labels.push(class);
    }
    let split = cfg.betavae_train_votes;
    let probe = SoftmaxProbe::fit(
        &features[..split * l],
        l,
        &labels[..split],
        usable.len(),
        cfg.probe_max_iters,
        cfg.probe_tol,
    );
    let correct = (split..total)
        .filter(|&v| probe.predict(&features[v * l..(v + 1) * l]) == labels[v])
        .count();
    Ok(correct as f64 / cfg.betavae_eval_votes as f64)
}

/// Kim and Mnih protocol: each vote fixes a factor value, takes the
/// dimension of least within-batch variance after dividing codes by their
/// table std, and a majority-vote table from dimension to factor is scored on
/// held-out votes. Collapsed dimensions never win the argmin.
pub fn factorvae_score(table: &RepresentationTable, cfg: &MetricConfig) -> Result<f64> {
    let index = table.factors().index();
    let usable = varying_factors(&index);
    if usable.is_empty() {
        return Err(Error::Metric("no factor takes more than one value".into()));
    }
    let active: Vec<usize> = (0..table.latent())
        .filter(|&d| table.std()[d] >= COLLAPSED_STD)
        .collect();
    if active.is_empty() {
        return Err(Error::Metric("every latent dimension is collapsed".into()));
    }
    let mut rng = seed::child(cfg.seed, Stream::MetricVotes, 1);
    let total = cfg.factorvae_train_votes + cfg.factorvae_eval_votes;
    let b = cfg.factorvae_batch;
    let mut votes = Vec::with_capacity(total);
    let mut batch = vec![0.0; b];
    for _ in 0..total {
        let class = rng.random_range(0..usable.len());
        let k = usable[class];
        let anchor = rng.random_range(0..table.rows());
        let rows = index.rows_with(k, table.factors().get(anchor, k));
        let picks: Vec<usize> = (0..b).map(|_| rows[rng.random_range(0..rows.len())]).collect();
        let mut best = (f64::INFINITY, 0);
        for (pos, &d) in active.iter().enumerate() {
            let s = table.std()[d];
            for (slot, &r) in batch.iter_mut().zip(&picks) {
                *slot = table.code(r)[d] / s;
            }
            let mean = batch.iter().sum::<f64>() / b as f64;
            let var = batch.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / b as f64;
            if var < best.0 {
                best = (var, pos);
            }
        }
        votes.push((best.1, class));
    }
    let (train, eval) = votes.split_at(cfg.factorvae_train_votes);
    let mut counts = vec![vec![0usize; usable.len()]; active.len()];
    for &(d, c) in train {
        counts[d][c] += 1;
    }
    let majority: Vec<Option<usize>> = counts
        .iter()
        .map(|row| {
            let best = (0..row.len()).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            (row[best] > 0).then_some(best)
        })
        .collect();
    let correct = eval.iter().filter(|&&(d, c)| majority[d] == Some(c)).count();
    Ok(correct as f64 / eval.len() as f64)
}

fn discretized_codes(table: &RepresentationTable, bins: usize) -> Vec<(Vec<usize>, usize)> {
    (0..table.latent())
        .map(|j| discretize(&table.column(j), bins))
        .collect()
}

fn factor_columns(table: &RepresentationTable) -> Vec<(Vec<usize>, usize)> {
    let f = table.factors();
    (0..f.num_factors())
        .map(|k| {
            (
                f.column(k).into_iter().map(|v| v as usize).collect(),
                f.cardinalities()[k],
            )
        })
        .collect()
}

/// Mutual information gap over `bins` equal-occupancy bins per dimension,
/// normalized by factor entropy and averaged over factors of positive entropy.
pub fn mig(table: &RepresentationTable, bins: usize) -> Result<f64> {
    let codes = discretized_codes(table, bins);
    let mut gaps = Vec::new();
    for (v, card) in factor_columns(table) {
        let h = entropy(&v, card);
        if h <= 1e-12 {
            continue;
        }
        let mut mi: Vec<f64> = codes.iter().map(|(c, n)| mutual_information(c, *n, &v, card)).collect();
        mi.sort_by(|a, b| b.total_cmp(a));
        let second = mi.get(1).copied().unwrap_or(0.0);
        gaps.push(((mi[0] - second) / h).clamp(0.0, 1.0));
    }
    if gaps.is_empty() {
        return Err(Error::Metric("every factor has zero entropy".into()));
    }
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Seeded train/test partition of the table rows for probe fitting.
fn probe_split(n: usize, cfg: &MetricConfig, sub: u32) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seed::child(cfg.seed, Stream::MetricVotes, sub));
    let cut = ((n as f64 * cfg.probe_train_fraction) as usize).clamp(1.min(n), n.saturating_sub(1));
    let test = order.split_off(cut);
    (order, test)
}

/// Predictability of factor `labels` from one code column: equal-occupancy
/// bins fit on the training rows, each bin predicting its majority class.
/// Returns chance-normalized balanced accuracy on the test rows.
fn binned_probe_score(
    col: &[f64],
    labels: &[usize],
    classes: usize,
    train: &[usize],
    test: &[usize],
    bins: usize,
) -> f64 {
    let train_vals: Vec<f64> = train.iter().map(|&i| col[i]).collect();
    let edges = equal_occupancy_edges(&train_vals, bins);
    let nb = edges.len() + 1;
    let mut counts = vec![vec![0usize; classes]; nb];
    let mut overall = vec![0usize; classes];
    for &i in train {
        counts[info::bin_of(&edges, col[i])][labels[i]] += 1;
        overall[labels[i]] += 1;
    }
    let pick = |row: &[usize]| (0..classes).fold(0, |b, c| if row[c] > row[b] { c } else { b });
    let fallback = pick(&overall);
    let rule: Vec<usize> = counts
        .iter()
        .map(|row| {
            if row.iter().any(|&c| c > 0) {
                pick(row)
            } else {
                fallback
            }
        })
        .collect();
    let pred: Vec<usize> = test.iter().map(|&i| rule[info::bin_of(&edges, col[i])]).collect();
    let truth: Vec<usize> = test.iter().map(|&i| labels[i]).collect();
    let present = {
        let mut seen = vec![false; classes];
        truth.iter().for_each(|&t| seen[t] = true);
        seen.iter().filter(|&&s| s).count()
    };
    if present < 2 {
        return 0.0;
    }
    let chance = 1.0 / present as f64;
    ((balanced_accuracy(&pred, &truth, classes) - chance) / (1.0 - chance)).max(0.0)
}

/// Separated attribute predictability: for each factor, the gap between the
/// two most predictive single dimensions, averaged over factors.
pub fn sap(table: &RepresentationTable, cfg: &MetricConfig) -> Result<f64> {
    let (train, test) = probe_split(table.rows(), cfg, 2);
    let cols: Vec<Vec<f64>> = (0..table.latent()).map(|j| table.column(j)).collect();
    let mut gaps = Vec::new();
    for (labels, card) in factor_columns(table) {
        let mut distinct = vec![false; card];
        train.iter().for_each(|&i| distinct[labels[i]] = true);
        if distinct.iter().filter(|&&d| d).count() < 2 {
            continue;
        }
        let mut s: Vec<f64> = cols
            .iter()
            .map(|c| binned_probe_score(c, &labels, card, &train, &test, cfg.bins))
            .collect();
        s.sort_by(|a, b| b.total_cmp(a));
        gaps.push(s[0] - s.get(1).copied().unwrap_or(0.0));
    }
    if gaps.is_empty() {
        return Err(Error::Metric("every factor is constant".into()));
    }
    Ok(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Explicitness: per factor, a softmax probe on the full code vector; each
/// class's one-vs-rest ROC-AUC on held-out rows is rescaled from [0.5, 1] to
/// [0, 1] and the results are averaged over classes and factors.
pub fn explicitness(table: &RepresentationTable, cfg: &MetricConfig) -> Result<f64> {
    let (train, test) = probe_split(table.rows(), cfg, 3);
    let l = table.latent();
    let xtrain: Vec<f64> = train.iter().flat_map(|&i| table.code(i).iter().copied()).collect();
    let mut per_factor = Vec::new();
    for (k, (labels, card)) in factor_columns(table).into_iter().enumerate() {
        let mut compact = vec![usize::MAX; card];
        let mut classes = Vec::new();
        for &i in &train {
            if compact[labels[i]] == usize::MAX {
                compact[labels[i]] = 0;
                classes.push(labels[i]);
            }
        }
        if classes.len() < 2 {
            log::warn!("explicitness: factor {k} has a single class in the probe split; skipped");
            continue;
        }
        classes.sort_unstable();
        for (c, &v) in classes.iter().enumerate() {
            compact[v] = c;
        }
        let y: Vec<usize> = train.iter().map(|&i| compact[labels[i]]).collect();
        let probe = SoftmaxProbe::fit(&xtrain, l, &y, classes.len(), cfg.probe_max_iters, cfg.probe_tol);
        let proba: Vec<Vec<f64>> = test.iter().map(|&i| probe.predict_proba(table.code(i))).collect();
        let mut scores = Vec::new();
        for (c, &v) in classes.iter().enumerate() {
            let s: Vec<f64> = proba.iter().map(|p| p[c]).collect();
            let pos: Vec<bool> = test.iter().map(|&i| labels[i] == v).collect();
            if let Some(auc) = roc_auc(&s, &pos) {
                scores.push(((auc - 0.5) / 0.5).clamp(0.0, 1.0));
            }
        }
        if !scores.is_empty() {
            per_factor.push(scores.iter().sum::<f64>() / scores.len() as f64);
        }
    }
    if per_factor.is_empty() {
        return Err(Error::Metric("no factor has two classes to probe".into()));
    }
    Ok(per_factor.iter().sum::<f64>() / per_factor.len() as f64)
}

/// Interventional robustness. Each live dimension is attributed to the factor
/// it shares most information with. For every value `v` of that factor, the
/// deviation is the largest shift of the dimension's conditional mean when one
/// other factor is additionally held at any value; deviations are averaged
/// over `v` by frequency and divided by the dimension's largest deviation from
/// its mean. The score is one minus that, averaged over dimensions with
/// weights equal to their largest deviation. A table with no live dimension
/// scores 0.
pub fn irs(table: &RepresentationTable, bins: usize) -> Result<f64> {
    let factors = factor_columns(table);
    if factors.iter().all(|(v, c)| entropy(v, *c) <= 1e-12) {
        return Err(Error::Metric("every factor has zero entropy".into()));
    }
    let n = table.rows();
    let codes = discretized_codes(table, bins);
    let (mut num, mut den) = (0.0, 0.0);
    for (j, (cj, nj)) in codes.iter().enumerate() {
        let z = table.column(j);
        let mean = z.iter().sum::<f64>() / n as f64;
        let max_dev = z.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max);
        if max_dev <= 1e-12 {
            continue;
        }
        let a = (0..factors.len())
            .map(|k| (k, mutual_information(cj, *nj, &factors[k].0, factors[k].1)))
            .fold(
                (0, f64::NEG_INFINITY),
                |best, (k, mi)| if mi > best.1 { (k, mi) } else { best },
            );
        let a = a.0;
        let (va, ca) = &factors[a];
        let mut sum_a = vec![0.0; *ca];
        let mut cnt_a = vec![0usize; *ca];
        for (r, &v) in va.iter().enumerate() {
            sum_a[v] += z[r];
            cnt_a[v] += 1;
        }
        let mut dev = vec![0.0f64; *ca];
        for (b, (vb, cb)) in factors.iter().enumerate() {
            if b == a {
                continue;
            }
            let mut sum = vec![0.0; ca * cb];
            let mut cnt = vec![0usize; ca * cb];
            for r in 0..n {
                sum[va[r] * cb + vb[r]] += z[r];
                cnt[va[r] * cb + vb[r]] += 1;
            }
            for v in 0..*ca {
                if cnt_a[v] == 0 {
                    continue;
                }
                let base = sum_a[v] / cnt_a[v] as f64;
                for u in 0..*cb {
                    let c = cnt[v * cb + u];
                    if c > 0 {
                        dev[v] = dev[v].max((sum[v * cb + u] / c as f64 - base).abs());
                    }
                }
            }
        }
        let avg = (0..*ca).map(|v| cnt_a[v] as f64 * dev[v]).sum::<f64>() / n as f64;
        let score = (1.0 - avg / max_dev).clamp(0.0, 1.0);
        num += max_dev * score;
        den += max_dev;
    }
    Ok(if den > 0.0 { num / den } else { 0.0 })
}

/// All six scores on a table, with `recon` passed through.
pub fn evaluate_table(table: &RepresentationTable, recon: f64, cfg: &MetricConfig) -> Result<MetricReport> {
    cfg.validate()?;
    Ok(MetricReport {
        recon,
        betavae: betavae_score(table, cfg)?,
        factorvae: factorvae_score(table, cfg)?,
        explicitness: explicitness(table, cfg)?,
        irs: irs(table, cfg.bins)?,
        mig: mig(table, cfg.bins)?,
        sap: sap(table, cfg)?,
    })
}

/// Test-split reconstruction error and the six scores on the test split,
/// truncated to `cfg.max_rows` rows.
pub fn evaluate_all(
    enc: &impl Encoder,
    ds: &FactorDataset,
    splits: &SplitIndices,
    cfg: &MetricConfig,
) -> Result<MetricReport> {
    let rows = &splits.test[..cfg.max_rows.map_or(splits.test.len(), |m| m.min(splits.test.len()))];
    let recon = enc.reconstruction_error(ds, rows)?;
    let table = encode_dataset(enc, ds, rows)?;
    evaluate_table(&table, recon, cfg)
}
