//! Equal-occupancy discretization and plug-in information estimates (nats).

/// Bin edges at the order statistics `sorted[floor(j * n / bins)]`,
/// `j = 1..bins`, with duplicates removed. Equal values always share a bin.
pub fn equal_occupancy_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    let mut edges: Vec<f64> = (1..bins).map(|j| sorted[j * n / bins]).collect();
    edges.dedup();
    edges
}

/// Bin index of `x`: the number of edges `<= x`.
pub fn bin_of(edges: &[f64], x: f64) -> usize {
    edges.partition_point(|&e| e <= x)
}

/// Discretizes `values` into at most `bins` equal-occupancy bins.
pub fn discretize(values: &[f64], bins: usize) -> (Vec<usize>, usize) {
    if values.is_empty() {
        return (Vec::new(), 1);
    }
    let edges = equal_occupancy_edges(values, bins);
    (values.iter().map(|&x| bin_of(&edges, x)).collect(), edges.len() + 1)
}

pub fn entropy(labels: &[usize], classes: usize) -> f64 {
    let mut counts = vec![0usize; classes];
    for &l in labels {
        counts[l] += 1;
    }
    let n = labels.len() as f64;
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn mutual_information(a: &[usize], na: usize, b: &[usize], nb: usize) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let n = a.len() as f64;
    let mut joint = vec![0usize; na * nb];
    let mut ca = vec![0usize; na];
    let mut cb = vec![0usize; nb];
    for (&x, &y) in a.iter().zip(b) {
        joint[x * nb + y] += 1;
        ca[x] += 1;
        cb[y] += 1;
    }
    let mut mi = 0.0;
    for x in 0..na {
        for y in 0..nb {
            let c = joint[x * nb + y];
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (ca[x] as f64 * cb[y] as f64)).ln();
            }
        }
    }
    mi.max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_share_a_bin() {
        let v = [3.0, 1.0, 1.0, 1.0, 2.0, 2.0];
        let (b, n) = discretize(&v, 20);
        assert_eq!(b[1], b[2]);
        assert_eq!(b[4], b[5]);
        assert!(b[1] < b[4] && b[4] < b[0]);
        assert!(n <= 4);
    }

    #[test]
    fn continuous_values_fill_bins_evenly() {
        let v: Vec<f64> = (0..1000).map(|i| (i as f64 * 0.618).fract()).collect();
        let (b, n) = discretize(&v, 10);
        assert_eq!(n, 10);
        let mut counts = vec![0; n];
        for x in b {
            counts[x] += 1;
        }
        assert!(counts.iter().all(|&c| c == 100), "{counts:?}");
    }

    #[test]
    fn mi_of_copy_is_entropy_and_independent_is_zero() {
        let a: Vec<usize> = (0..64).map(|i| i % 4).collect();
        let b: Vec<usize> = (0..64).map(|i| (i / 4) % 4).collect();
        let h = entropy(&a, 4);
        assert!((h - 4f64.ln()).abs() < 1e-12);
        assert!((mutual_information(&a, 4, &a, 4) - h).abs() < 1e-12);
        assert!(mutual_information(&a, 4, &b, 4).abs() < 1e-12);
    }
}
