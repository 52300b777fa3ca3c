//! Oracles and generators shared by the integration and acceptance suites.
#![allow(dead_code)]

use qtc_core::model::{gradients, mean_loss, SoftmaxHead};
use qtc_core::rng::SeedStream;
use qtc_core::{EmbeddingSequence, FilterBank};

pub const FD_STEP: f64 = 1e-5;

/// Head with entries drawn from `Normal(0, scale²)`.
pub fn random_head(
    stream: &mut SeedStream,
    classes: usize,
    features: usize,
    scale: f64,
) -> SoftmaxHead {
    let w = (0..classes * features)
        .map(|_| stream.normal() * scale)
        .collect();
    let b = (0..classes).map(|_| stream.normal() * scale).collect();
    SoftmaxHead::from_parts(classes, features, w, b).unwrap()
}

pub fn random_batch(
    stream: &mut SeedStream,
    size: usize,
    classes: usize,
    features: usize,
) -> Vec<(Vec<f64>, usize)> {
    (0..size)
        .map(|_| {
            let x = (0..features).map(|_| stream.normal()).collect();
            (x, (stream.next_u64() % classes as u64) as usize)
        })
        .collect()
}

/// Central differences of the mean loss with respect to every weight and
/// bias entry, in the order `W` (row-major) then `b`.
pub fn finite_difference_gradient(
    head: &SoftmaxHead,
    batch: &[(Vec<f64>, usize)],
    step: f64,
) -> Vec<f64> {
    let (c, f) = (head.classes(), head.features());
    let n_w = c * f;
    (0..n_w + c)
        .map(|i| {
            let shifted = |delta: f64| {
                let mut w = head.weights().to_vec();
                let mut b = head.bias().to_vec();
                if i < n_w {
                    w[i] += delta;
                } else {
                    b[i - n_w] += delta;
                }
                let h = SoftmaxHead::from_parts(c, f, w, b).unwrap();
                mean_loss(&h, batch).unwrap()
            };
            (shifted(step) - shifted(-step)) / (2.0 * step)
        })
        .collect()
}

/// `‖analytic − numeric‖ / max(‖analytic‖, ‖numeric‖)`, or the absolute
/// difference norm when both vanish.
pub fn gradient_relative_error(head: &SoftmaxHead, batch: &[(Vec<f64>, usize)]) -> f64 {
    let g = gradients(head, batch).unwrap();
    let analytic: Vec<f64> = g.weights.iter().chain(&g.bias).copied().collect();
    let numeric = finite_difference_gradient(head, batch, FD_STEP);
    let norm = |v: &mut dyn Iterator<Item = f64>| v.map(|x| x * x).sum::<f64>().sqrt();
    let diff = norm(&mut analytic.iter().zip(&numeric).map(|(a, n)| a - n));
    let scale = norm(&mut analytic.iter().copied()).max(norm(&mut numeric.iter().copied()));
    if scale < 1e-12 {
        diff
    } else {
        diff / scale
    }
}

/// Two classes with means `±2` on every axis and isotropic noise `σ = 0.1`.
pub fn separable_two_class(
    stream: &mut SeedStream,
    n: usize,
    dim: usize,
) -> Vec<(Vec<f64>, usize)> {
    (0..n)
        .map(|i| {
            let label = i % 2;
            let mu = if label == 0 { -2.0 } else { 2.0 };
            let x = (0..dim).map(|_| mu + 0.1 * stream.normal()).collect();
            (x, label)
        })
        .collect()
}

/// `n` all-zero feature vectors, the first `n · share` labelled 0.
pub fn constant_features(n: usize, dim: usize, share: f64) -> Vec<(Vec<f64>, usize)> {
    let zeros = (n as f64 * share).round() as usize;
    (0..n)
        .map(|i| (vec![0.0; dim], usize::from(i >= zeros)))
        .collect()
}

pub fn random_sequence(
    stream: &mut SeedStream,
    len: usize,
    dim: usize,
    scale: f64,
) -> EmbeddingSequence {
    let values = (0..len * dim)
        .map(|_| (stream.normal() * scale) as f32)
        .collect();
    EmbeddingSequence::new("s", "l", dim, values).unwrap()
}

/// Max over the un-pooled window outputs, laid out filter-major like the
/// bank's features.
pub fn pool_by_hand(bank: &FilterBank, seq: &EmbeddingSequence, max_len: usize) -> Vec<f64> {
    let windows = bank.window_outputs(seq, max_len).unwrap();
    let mut out = Vec::new();
    for per_filter in windows {
        for ch in 0..bank.kernel() {
            out.push(
                per_filter
                    .iter()
                    .map(|w| w[ch])
                    .fold(f64::NEG_INFINITY, f64::max),
            );
        }
    }
    out
}

/// Same sequence with `extra` random tokens appended.
pub fn with_tail(
    stream: &mut SeedStream,
    seq: &EmbeddingSequence,
    extra: usize,
) -> EmbeddingSequence {
    let mut values = seq.values().to_vec();
    values.extend((0..extra * seq.dim()).map(|_| stream.normal() as f32));
    EmbeddingSequence::new(seq.id(), seq.label(), seq.dim(), values).unwrap()
}

pub fn bits(xs: &[f64]) -> Vec<u64> {
    xs.iter().map(|x| x.to_bits()).collect()
}
