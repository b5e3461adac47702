//! Small deterministic classifiers used by the metric protocols.

/// Multinomial logistic regression on standardized features, fit by
/// full-batch gradient descent until the largest gradient entry falls below
/// `tol` or `max_iters` is reached.
#[derive(Debug, Clone)]
pub struct SoftmaxProbe {
    dim: usize,
    classes: usize,
    mean: Vec<f64>,
    scale: Vec<f64>,
    /// `classes x (dim + 1)`, bias last.
    weights: Vec<f64>,
}

impl SoftmaxProbe {
    pub fn fit(x: &[f64], dim: usize, labels: &[usize], classes: usize, max_iters: usize, tol: f64) -> Self {
        let n = labels.len();
        assert_eq!(x.len(), n * dim);
        let mut mean = vec![0.0; dim];
        let mut scale = vec![1.0; dim];
        if n > 0 {
            for j in 0..dim {
                let m = (0..n).map(|i| x[i * dim + j]).sum::<f64>() / n as f64;
                let var = (0..n).map(|i| (x[i * dim + j] - m).powi(2)).sum::<f64>() / n as f64;
                mean[j] = m;
                scale[j] = if var.sqrt() > 1e-12 { 1.0 / var.sqrt() } else { 0.0 };
            }
        }
        let width = dim + 1;
        let xs: Vec<f64> = (0..n)
            .flat_map(|i| {
                let row = &x[i * dim..(i + 1) * dim];
                let (mean, scale) = (&mean, &scale);
                (0..dim)
                    .map(move |j| (row[j] - mean[j]) * scale[j])
                    .chain(std::iter::once(1.0))
            })
            .collect();
        let mut probe = Self {
            dim,
            classes,
            mean,
            scale,
            weights: vec![0.0; classes * width],
        };
        if n == 0 {
            return probe;
        }
        // Standardized rows have squared norm about dim + 1 on average, which
        // bounds the curvature of the mean cross-entropy by (dim + 1) / 2.
        let lr = 2.0 / width as f64;
        let mut grad = vec![0.0; classes * width];
        let mut p = vec![0.0; classes];
        for _ in 0..max_iters {
            grad.iter_mut().for_each(|g| *g = 0.0);
            for i in 0..n {
                let row = &xs[i * width..(i + 1) * width];
                probe.logits_into(row, &mut p);
                softmax_in_place(&mut p);
                p[labels[i]] -= 1.0;
                for c in 0..classes {
                    let g = &mut grad[c * width..(c + 1) * width];
                    for (gj, rj) in g.iter_mut().zip(row) {
                        *gj += p[c] * rj;
                    }
                }
            }
            let inv = 1.0 / n as f64;
            let mut worst = 0.0f64;
            for (w, g) in probe.weights.iter_mut().zip(&grad) {
                let g = g * inv;
                worst = worst.max(g.abs());
                *w -= lr * g;
            }
            if worst < tol {
                break;
            }
        }
        probe
    }

    fn logits_into(&self, row: &[f64], out: &mut [f64]) {
        let width = self.dim + 1;
        for (c, o) in out.iter_mut().enumerate() {
            *o = self.weights[c * width..(c + 1) * width]
                .iter()
                .zip(row)
                .map(|(w, x)| w * x)
                .sum();
        }
    }

    /// Class probabilities for one raw (unstandardized) feature row.
    pub fn predict_proba(&self, raw: &[f64]) -> Vec<f64> {
        let row: Vec<f64> = (0..self.dim)
            .map(|j| (raw[j] - self.mean[j]) * self.scale[j])
            .chain(std::iter::once(1.0))
            .collect();
        let mut p = vec![0.0; self.classes];
        self.logits_into(&row, &mut p);
        softmax_in_place(&mut p);
        p
    }

    /// Most probable class; ties go to the lowest index.
    pub fn predict(&self, raw: &[f64]) -> usize {
        argmax(&self.predict_proba(raw))
    }
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut s = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        s += *x;
    }
    for x in v.iter_mut() {
        *x /= s;
    }
}

pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Area under the ROC curve via the rank-sum statistic, ties averaged.
/// `None` when either class is absent.
pub fn roc_auc(scores: &[f64], positive: &[bool]) -> Option<f64> {
    let n_pos = positive.iter().filter(|&&p| p).count();
    let n_neg = positive.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return None;
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if positive[k] {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let np = n_pos as f64;
    Some((rank_sum - np * (np + 1.0) / 2.0) / (np * n_neg as f64))
}

/// Mean per-class recall over the classes present in `truth`.
pub fn balanced_accuracy(pred: &[usize], truth: &[usize], classes: usize) -> f64 {
    let mut hit = vec![0usize; classes];
    let mut total = vec![0usize; classes];
    for (&p, &t) in pred.iter().zip(truth) {
        total[t] += 1;
        if p == t {
            hit[t] += 1;
        }
    }
    let present: Vec<f64> = (0..classes)
        .filter(|&c| total[c] > 0)
        .map(|c| hit[c] as f64 / total[c] as f64)
        .collect();
    if present.is_empty() {
        0.0
    } else {
        present.iter().sum::<f64>() / present.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auc_cases() {
        assert_eq!(roc_auc(&[0.1, 0.2, 0.8, 0.9], &[false, false, true, true]), Some(1.0));
        assert_eq!(roc_auc(&[0.9, 0.8, 0.2, 0.1], &[false, false, true, true]), Some(0.0));
        assert_eq!(roc_auc(&[0.5; 4], &[false, true, false, true]), Some(0.5));
        assert_eq!(roc_auc(&[0.5; 2], &[true, true]), None);
    }

    #[test]
    fn balanced_accuracy_weights_classes_equally() {
        // 3 of class 0 all right, 1 of class 1 wrong
        assert_eq!(balanced_accuracy(&[0, 0, 0, 0], &[0, 0, 0, 1], 2), 0.5);
    }

    #[test]
    fn softmax_probe_separates_ordered_classes_on_a_line() {
        let x: Vec<f64> = (0..400).map(|i| (i % 5) as f64 * 3.0 + 10.0).collect();
        let y: Vec<usize> = (0..400).map(|i| i % 5).collect();
        let p = SoftmaxProbe::fit(&x, 1, &y, 5, 3000, 1e-6);
        for c in 0..5 {
            assert_eq!(p.predict(&[c as f64 * 3.0 + 10.0]), c);
        }
    }
}
