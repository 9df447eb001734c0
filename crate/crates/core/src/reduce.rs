//! Fixed-shape pairwise reductions.
//!
//! The tree shape depends only on the number of items, never on how work was
//! scheduled, so sums over per-replica results are bit-identical for any
//! worker count.

/// Pairwise sum of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n => {
            let (l, r) = xs.split_at(n / 2);
            pairwise_sum(l) + pairwise_sum(r)
        }
    }
}

/// Pairwise element-wise sum of equal-length vectors.
pub fn pairwise_sum_vecs(xs: &[Vec<f64>]) -> Vec<f64> {
    match xs.len() {
        0 => Vec::new(),
        1 => xs[0].clone(),
        n => {
            let (l, r) = xs.split_at(n / 2);
            let mut a = pairwise_sum_vecs(l);
            let b = pairwise_sum_vecs(r);
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        }
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    pairwise_sum(xs) / xs.len() as f64
}

/// Mean and standard error of the mean.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = mean(xs);
    let dev: Vec<f64> = xs.iter().map(|x| (x - m) * (x - m)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0).max(1.0);
    (m, (var / n).sqrt())
}
