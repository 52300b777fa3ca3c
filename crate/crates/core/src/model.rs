//! Softmax intent head trained with cross-entropy.
//!
//! The encoders are frozen, so fitting the head is plain multinomial
//! logistic regression: a convex problem in `(W, b)`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{QtcError, Result};
use crate::rng::SeedStream;

/// Lower clamp on the probability inside `-ln p`.
pub const PROB_FLOOR: f64 = 1e-12;

/// `softmax(W x + b)` over `C` classes and `F` features.
///
/// The JSON form is `{"C", "F", "W" (row-major), "b"}`, plus an optional
/// `labels` list naming the classes in index order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftmaxHead {
    #[serde(rename = "C")]
    classes: usize,
    #[serde(rename = "F")]
    features: usize,
    #[serde(rename = "W")]
    weights: Vec<f64>,
    #[serde(rename = "b")]
    bias: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    labels: Vec<String>,
}

impl SoftmaxHead {
    pub fn zeros(classes: usize, features: usize) -> Result<Self> {
        Self::from_parts(
            classes,
            features,
            vec![0.0; classes * features],
            vec![0.0; classes],
        )
    }

    pub fn from_parts(
        classes: usize,
        features: usize,
        weights: Vec<f64>,
        bias: Vec<f64>,
    ) -> Result<Self> {
        let head = Self {
            classes,
            features,
            weights,
            bias,
            labels: Vec::new(),
        };
        head.validate()?;
        Ok(head)
    }

    fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(QtcError::config(format!(
                "softmax head needs at least 2 classes (got {})",
                self.classes
            )));
        }
        if self.features == 0 {
            return Err(QtcError::config("softmax head needs at least 1 feature"));
        }
        if self.weights.len() != self.classes * self.features {
            return Err(QtcError::shape(
                "head weights",
                self.classes * self.features,
                self.weights.len(),
            ));
        }
        if self.bias.len() != self.classes {
            return Err(QtcError::shape("head bias", self.classes, self.bias.len()));
        }
        if self
            .weights
            .iter()
            .chain(&self.bias)
            .any(|v| !v.is_finite())
        {
            return Err(QtcError::Data("head parameters must be finite".into()));
        }
        if !self.labels.is_empty() && self.labels.len() != self.classes {
            return Err(QtcError::shape(
                "head labels",
                self.classes,
                self.labels.len(),
            ));
        }
        Ok(())
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        self.labels = labels;
        self.validate()?;
        Ok(self)
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn features(&self) -> usize {
        self.features
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn logits(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.features {
            return Err(QtcError::shape("head input", self.features, x.len()));
        }
        Ok(self
            .weights
            .chunks_exact(self.features)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + b)
            .collect())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(softmax(&self.logits(x)?))
    }

    /// Index of the largest logit (first on ties).
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(&self.logits(x)?))
    }

    pub fn save_json(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let head: Self = serde_json::from_str(&fs::read_to_string(path)?)?;
        head.validate()?;
        Ok(head)
    }
}

pub fn argmax(xs: &[f64]) -> usize {
    xs.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &v)| {
            if v > best.1 {
                (i, v)
            } else {
                best
            }
        })
        .0
}

/// Max-subtracted softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - m).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

pub fn predict(head: &SoftmaxHead, features: &[f64]) -> Result<Vec<f64>> {
    head.predict(features)
}

/// `-ln max(probs[label], 1e-12)`.
pub fn cross_entropy(probs: &[f64], label: usize) -> Result<f64> {
    let p = probs.get(label).ok_or(QtcError::Label {
        label,
        classes: probs.len(),
    })?;
    Ok(-p.max(PROB_FLOOR).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    /// Row-major `C × F`.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

fn check_label(head: &SoftmaxHead, label: usize) -> Result<()> {
    if label >= head.classes {
        return Err(QtcError::Label {
            label,
            classes: head.classes,
        });
    }
    Ok(())
}

/// Mean cross-entropy of `head` over `batch`.
pub fn mean_loss<X: AsRef<[f64]>>(head: &SoftmaxHead, batch: &[(X, usize)]) -> Result<f64> {
    if batch.is_empty() {
        return Err(QtcError::Argument("loss of an empty batch".into()));
    }
    let mut total = 0.0;
    for (x, label) in batch {
        check_label(head, *label)?;
        total += cross_entropy(&head.predict(x.as_ref())?, *label)?;
    }
    Ok(total / batch.len() as f64)
}

/// Gradient of the mean cross-entropy: the batch mean of
/// `(p − onehot) ⊗ x` for `W` and `(p − onehot)` for `b`.
pub fn gradients<X: AsRef<[f64]>>(head: &SoftmaxHead, batch: &[(X, usize)]) -> Result<Gradients> {
    if batch.is_empty() {
        return Err(QtcError::Argument("gradient of an empty batch".into()));
    }
    let f = head.features;
    let mut g = Gradients {
        weights: vec![0.0; head.weights.len()],
        bias: vec![0.0; head.classes],
    };
    for (x, label) in batch {
        let x = x.as_ref();
        check_label(head, *label)?;
        let mut delta = head.predict(x)?;
        delta[*label] -= 1.0;
        for (c, d) in delta.iter().enumerate() {
            g.bias[c] += d;
            for (gw, v) in g.weights[c * f..(c + 1) * f].iter_mut().zip(x) {
                *gw += d * v;
            }
        }
    }
    let scale = 1.0 / batch.len() as f64;
    g.weights.iter_mut().for_each(|v| *v *= scale);
    g.bias.iter_mut().for_each(|v| *v *= scale);
    Ok(g)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Optimizer {
    Adam {
        beta1: f64,
        beta2: f64,
        epsilon: f64,
    },
    Sgd,
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer: Optimizer,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            epochs: 200,
            batch_size: 32,
            optimizer: Optimizer::default(),
            shuffle_seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(QtcError::config(format!(
                "learning rate must be positive (got {})",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(QtcError::config("epochs must be at least 1"));
        }
        if self.batch_size == 0 {
            return Err(QtcError::config("batch size must be at least 1"));
        }
        Ok(())
    }
}

struct AdamState {
    step: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

/// Fits a zero-initialized head with shuffled mini-batches.
pub fn train<X: AsRef<[f64]>>(
    data: &[(X, usize)],
    classes: usize,
    config: &TrainConfig,
) -> Result<SoftmaxHead> {
    train_observed(data, classes, config, |_, _| {})
}

/// [`train`] that calls `observe(epoch, head)` after every epoch.
pub fn train_observed<X: AsRef<[f64]>>(
    data: &[(X, usize)],
    classes: usize,
    config: &TrainConfig,
    mut observe: impl FnMut(usize, &SoftmaxHead),
) -> Result<SoftmaxHead> {
    config.validate()?;
    let first = data
        .first()
        .ok_or_else(|| QtcError::Argument("cannot train on an empty dataset".into()))?;
    let features = first.0.as_ref().len();
    let mut head = SoftmaxHead::zeros(classes, features)?;
    for (x, label) in data {
        let x = x.as_ref();
        if x.len() != features {
            return Err(QtcError::shape("training features", features, x.len()));
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(QtcError::Data("training features must be finite".into()));
        }
        check_label(&head, *label)?;
    }

    let n_params = head.weights.len() + head.bias.len();
    let mut adam = AdamState {
        step: 0,
        m: vec![0.0; n_params],
        v: vec![0.0; n_params],
    };
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut shuffler = SeedStream::new(config.shuffle_seed);
    let mut batch: Vec<(&[f64], usize)> = Vec::with_capacity(config.batch_size);

    for epoch in 0..config.epochs {
        shuffler.shuffle(&mut order);
        for chunk in order.chunks(config.batch_size) {
            batch.clear();
            batch.extend(chunk.iter().map(|&i| (data[i].0.as_ref(), data[i].1)));
            let g = gradients(&head, &batch)?;
            apply_update(&mut head, &g, config, &mut adam);
        }
        observe(epoch, &head);
    }
    Ok(head)
}

fn apply_update(head: &mut SoftmaxHead, g: &Gradients, config: &TrainConfig, adam: &mut AdamState) {
    let lr = config.learning_rate;
    let params = head.weights.iter_mut().chain(head.bias.iter_mut());
    let grads = g.weights.iter().chain(&g.bias);
    match config.optimizer {
        Optimizer::Sgd => {
            for (p, gi) in params.zip(grads) {
                *p -= lr * gi;
            }
        }
        Optimizer::Adam {
            beta1,
            beta2,
            epsilon,
        } => {
            adam.step += 1;
            let c1 = 1.0 - beta1.powi(adam.step);
            let c2 = 1.0 - beta2.powi(adam.step);
            for (((p, gi), m), v) in params.zip(grads).zip(&mut adam.m).zip(&mut adam.v) {
                *m = beta1 * *m + (1.0 - beta1) * gi;
                *v = beta2 * *v + (1.0 - beta2) * gi * gi;
                let m_hat = *m / c1;
                let v_hat = *v / c2;
                *p -= lr * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
    }
}

/// Fraction of samples whose argmax prediction equals the label.
pub fn accuracy<X: AsRef<[f64]>>(head: &SoftmaxHead, data: &[(X, usize)]) -> Result<f64> {
    if data.is_empty() {
        return Err(QtcError::Argument("accuracy of an empty dataset".into()));
    }
    let mut correct = 0usize;
    for (x, label) in data {
        if head.predict_class(x.as_ref())? == *label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_head_is_uniform() {
        let head = SoftmaxHead::zeros(7, 3).unwrap();
        let p = head.predict(&[0.4, -1.0, 2.0]).unwrap();
        assert!(p.iter().all(|v| (v - 1.0 / 7.0).abs() < 1e-15));
    }

    #[test]
    fn bias_dominated_two_class() {
        let head = SoftmaxHead::from_parts(2, 1, vec![0.0, 0.0], vec![10.0, 0.0]).unwrap();
        let p = head.predict(&[3.0]).unwrap();
        assert!((p[0] - 0.9999546021312976).abs() < 1e-12);
        assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = softmax(&[1000.0, 999.0, -1000.0]);
        assert!(p.iter().all(|v| v.is_finite()));
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let uniform = vec![1.0 / 7.0; 7];
        assert!((cross_entropy(&uniform, 3).unwrap() - 1.9459101490553132).abs() < 1e-12);
        assert_eq!(cross_entropy(&[0.0, 1.0], 1).unwrap(), 0.0);
        assert!((cross_entropy(&[1.0, 0.0], 1).unwrap() - 27.631021115928547).abs() < 1e-9);
        assert!(matches!(
            cross_entropy(&[0.5, 0.5], 2),
            Err(QtcError::Label { .. })
        ));
    }

    #[test]
    fn single_sample_gradient_by_hand() {
        // label 1 is correct, class 0 wrong; p = (0.5, 0.5)
        let head = SoftmaxHead::zeros(2, 1).unwrap();
        let g = gradients(&head, &[(vec![1.0], 1)]).unwrap();
        assert_eq!(g.weights, vec![0.5, -0.5]);
        assert_eq!(g.bias, vec![0.5, -0.5]);
    }

    #[test]
    fn confident_correct_predictions_have_zero_gradient() {
        let head = SoftmaxHead::from_parts(2, 1, vec![0.0, 0.0], vec![800.0, -800.0]).unwrap();
        let g = gradients(&head, &[(vec![1.0], 0), (vec![-2.0], 0)]).unwrap();
        assert!(g.weights.iter().chain(&g.bias).all(|v| *v == 0.0));
    }

    #[test]
    fn empty_batches_are_errors() {
        let head = SoftmaxHead::zeros(2, 1).unwrap();
        let empty: Vec<(Vec<f64>, usize)> = vec![];
        assert!(matches!(
            gradients(&head, &empty),
            Err(QtcError::Argument(_))
        ));
        assert!(train(&empty, 2, &TrainConfig::default()).is_err());
    }

    #[test]
    fn head_validation() {
        assert!(SoftmaxHead::zeros(1, 3).is_err());
        assert!(SoftmaxHead::zeros(2, 0).is_err());
        assert!(SoftmaxHead::from_parts(2, 2, vec![0.0; 3], vec![0.0; 2]).is_err());
        let head = SoftmaxHead::zeros(2, 2).unwrap();
        assert!(head.predict(&[1.0]).is_err());
        assert!(head.clone().with_labels(vec!["a".into()]).is_err());
    }

    #[test]
    fn head_json_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("head.json");
        let head = SoftmaxHead::from_parts(2, 2, vec![0.5, -1.0, 2.0, 0.25], vec![0.1, -0.1])
            .unwrap()
            .with_labels(vec!["A".into(), "B".into()])
            .unwrap();
        head.save_json(&p).unwrap();
        assert_eq!(SoftmaxHead::load_json(&p).unwrap(), head);
        let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p).unwrap()).unwrap();
        assert_eq!(v["C"], 2);
        assert_eq!(v["F"], 2);
        assert_eq!(v["W"][1], -1.0);
    }

    #[test]
    fn argmax_survives_logit_shift() {
        let head =
            SoftmaxHead::from_parts(3, 1, vec![1.0, -1.0, 0.5], vec![0.0, 0.2, 0.1]).unwrap();
        let shifted =
            SoftmaxHead::from_parts(3, 1, vec![1.0, -1.0, 0.5], vec![5.0, 5.2, 5.1]).unwrap();
        for x in [-3.0, -0.1, 0.0, 0.7, 4.0] {
            assert_eq!(
                head.predict_class(&[x]).unwrap(),
                shifted.predict_class(&[x]).unwrap()
            );
        }
    }

    #[test]
    fn train_rejects_bad_config() {
        let data = vec![(vec![1.0], 0), (vec![-1.0], 1)];
        let cfg = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(train(&data, 2, &cfg).is_err());
        assert!(train(&data, 1, &TrainConfig::default()).is_err());
        assert!(train(&[(vec![1.0], 3)], 2, &TrainConfig::default()).is_err());
    }
}
