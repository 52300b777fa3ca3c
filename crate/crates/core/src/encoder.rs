//! Temporal convolution encoders over token-embedding sequences.
//!
//! Both encoders share the same windowing: the sequence is cut to
//! `max_len` tokens, right-padded with zero vectors up to the kernel size
//! `k`, and every length-`k` window at stride 1 is mapped to `k` channel
//! values. Each filter is then globally max-pooled per channel, giving
//! `n · k` features for a bank of `n` filters.
//!
//! Inside a window every token first becomes one angle,
//! `π · tanh(p · h / √D)`, through the filter's frozen projection `p`.
//! A QTC filter feeds the `k` angles to its frozen circuit and reads the
//! per-qubit `⟨Z⟩`; a TCN filter computes `tanh(M · s)` with a frozen
//! random `k × k` mixing matrix `M`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::EmbeddingSequence;
use crate::error::{QtcError, Result};
use crate::qsim::MAX_QUBITS;
use crate::rng::SeedStream;
use crate::vqc::CircuitSpec;

pub const DEFAULT_MAX_LEN: usize = 50;
pub const MAX_FILTERS: usize = 4;
pub const MIN_KERNEL: usize = 2;
pub const MAX_KERNEL: usize = MAX_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EncoderKind {
    Qtc,
    Tcn,
}

impl fmt::Display for EncoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EncoderKind::Qtc => "qtc",
            EncoderKind::Tcn => "tcn",
        })
    }
}

impl FromStr for EncoderKind {
    type Err = QtcError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qtc" => Ok(EncoderKind::Qtc),
            "tcn" => Ok(EncoderKind::Tcn),
            other => Err(QtcError::config(format!(
                "unknown encoder {other:?} (expected qtc or tcn)"
            ))),
        }
    }
}

/// `π · tanh(projection · token / √D)`, always inside `(−π, π)`.
pub fn project_token(projection: &[f64], token: &[f32]) -> Result<f64> {
    if projection.len() != token.len() {
        return Err(QtcError::shape(
            "token projection",
            projection.len(),
            token.len(),
        ));
    }
    let dot: f64 = projection
        .iter()
        .zip(token)
        .map(|(p, &h)| p * f64::from(h))
        .sum();
    Ok(PI * (dot / (projection.len() as f64).sqrt()).tanh())
}

#[derive(Debug, Clone, PartialEq)]
pub struct QtcFilter {
    projection: Vec<f64>,
    circuit: CircuitSpec,
}

impl QtcFilter {
    pub fn new(projection: Vec<f64>, circuit: CircuitSpec) -> Result<Self> {
        check_projection(&projection)?;
        Ok(Self {
            projection,
            circuit,
        })
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn circuit(&self) -> &CircuitSpec {
        &self.circuit
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TcnFilter {
    projection: Vec<f64>,
    kernel: usize,
    /// Row-major `kernel × kernel`.
    mixing: Vec<f64>,
}

impl TcnFilter {
    pub fn new(projection: Vec<f64>, kernel: usize, mixing: Vec<f64>) -> Result<Self> {
        check_projection(&projection)?;
        if mixing.len() != kernel * kernel {
            return Err(QtcError::shape(
                "TCN mixing matrix",
                kernel * kernel,
                mixing.len(),
            ));
        }
        if mixing.iter().any(|m| !m.is_finite()) {
            return Err(QtcError::Argument(
                "TCN mixing matrix must be finite".into(),
            ));
        }
        Ok(Self {
            projection,
            kernel,
            mixing,
        })
    }

    pub fn projection(&self) -> &[f64] {
        &self.projection
    }

    pub fn mixing(&self) -> &[f64] {
        &self.mixing
    }

    fn apply(&self, window: &[f64], out: &mut [f64]) {
        for (row, o) in self.mixing.chunks_exact(self.kernel).zip(out.iter_mut()) {
            let z: f64 = row.iter().zip(window).map(|(m, s)| m * s).sum();
            *o = z.tanh();
        }
    }
}

fn check_projection(projection: &[f64]) -> Result<()> {
    if projection.is_empty() {
        return Err(QtcError::config("projection needs at least one entry"));
    }
    if projection.iter().any(|p| !p.is_finite()) {
        return Err(QtcError::Argument("projection must be finite".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub enum Filter {
    Qtc(QtcFilter),
    Tcn(TcnFilter),
}

impl Filter {
    pub fn kind(&self) -> EncoderKind {
        match self {
            Filter::Qtc(_) => EncoderKind::Qtc,
            Filter::Tcn(_) => EncoderKind::Tcn,
        }
    }

    pub fn projection(&self) -> &[f64] {
        match self {
            Filter::Qtc(f) => f.projection(),
            Filter::Tcn(f) => f.projection(),
        }
    }

    fn kernel(&self) -> usize {
        match self {
            Filter::Qtc(f) => f.circuit.num_qubits(),
            Filter::Tcn(f) => f.kernel,
        }
    }

    pub fn project(&self, token: &[f32]) -> Result<f64> {
        project_token(self.projection(), token)
    }

    fn window(&self, angles: &[f64], out: &mut [f64]) -> Result<()> {
        match self {
            Filter::Qtc(f) => {
                let z = f.circuit.run(angles)?;
                out.copy_from_slice(&z);
            }
            Filter::Tcn(f) => f.apply(angles, out),
        }
        Ok(())
    }
}

/// `n · k` pooled features, filter-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub kind: EncoderKind,
}

impl FeatureVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

impl AsRef<[f64]> for FeatureVector {
    fn as_ref(&self) -> &[f64] {
        &self.values
    }
}

/// `n` frozen filters sharing kernel size and embedding dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterBank {
    kind: EncoderKind,
    kernel: usize,
    dim: usize,
    seed: u64,
    filters: Vec<Filter>,
}

fn check_bank_shape(n: usize, k: usize, dim: usize) -> Result<()> {
    if !(1..=MAX_FILTERS).contains(&n) {
        return Err(QtcError::config(format!(
            "filter count must be in 1..={MAX_FILTERS} (got {n})"
        )));
    }
    if !(MIN_KERNEL..=MAX_KERNEL).contains(&k) {
        return Err(QtcError::config(format!(
            "kernel size must be in {MIN_KERNEL}..={MAX_KERNEL} (got {k})"
        )));
    }
    if dim == 0 {
        return Err(QtcError::config("embedding dimension must be at least 1"));
    }
    Ok(())
}

/// Draws a bank of `n` filters. Filter `i` is generated from the `i`-th
/// output of the bank's seed stream: first its `D` projection entries
/// (standard normal), then either a circuit seed (QTC) or the `k × k`
/// mixing entries (TCN, normal with variance `1/k`).
pub fn init_filter_bank(
    kind: EncoderKind,
    n: usize,
    k: usize,
    dim: usize,
    seed: u64,
) -> Result<FilterBank> {
    check_bank_shape(n, k, dim)?;
    let mut master = SeedStream::new(seed);
    let mut filters = Vec::with_capacity(n);
    for _ in 0..n {
        let mut stream = SeedStream::new(master.next_u64());
        let projection: Vec<f64> = (0..dim).map(|_| stream.normal()).collect();
        let filter = match kind {
            EncoderKind::Qtc => {
                let circuit = CircuitSpec::random(k, 1, stream.next_u64())?;
                Filter::Qtc(QtcFilter::new(projection, circuit)?)
            }
            EncoderKind::Tcn => {
                let scale = 1.0 / (k as f64).sqrt();
                let mixing = (0..k * k).map(|_| stream.normal() * scale).collect();
                Filter::Tcn(TcnFilter::new(projection, k, mixing)?)
            }
        };
        filters.push(filter);
    }
    Ok(FilterBank {
        kind,
        kernel: k,
        dim,
        seed,
        filters,
    })
}

impl FilterBank {
    /// Assembles a bank from explicit filters, e.g. with hand-set circuits.
    pub fn from_filters(filters: Vec<Filter>, seed: u64) -> Result<Self> {
        let first = filters
            .first()
            .ok_or_else(|| QtcError::config("filter bank needs at least one filter"))?;
        let (kind, kernel, dim) = (first.kind(), first.kernel(), first.projection().len());
        check_bank_shape(filters.len(), kernel, dim)?;
        for f in &filters {
            if f.kind() != kind || f.kernel() != kernel || f.projection().len() != dim {
                return Err(QtcError::config(
                    "all filters in a bank must share kind, kernel size and dimension",
                ));
            }
        }
        Ok(Self {
            kind,
            kernel,
            dim,
            seed,
            filters,
        })
    }

    pub fn kind(&self) -> EncoderKind {
        self.kind
    }

    pub fn num_filters(&self) -> usize {
        self.filters.len()
    }

    pub fn kernel(&self) -> usize {
        self.kernel
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn filters(&self) -> &[Filter] {
        &self.filters
    }

    pub fn feature_len(&self) -> usize {
        self.filters.len() * self.kernel
    }

    /// Per-filter angle sequences after truncation and padding.
    fn angle_tracks(&self, seq: &EmbeddingSequence, max_len: usize) -> Result<Vec<Vec<f64>>> {
        if seq.dim() != self.dim {
            return Err(QtcError::shape("embedding dimension", self.dim, seq.dim()));
        }
        let used = seq.len().min(max_len);
        let padded = used.max(self.kernel);
        self.filters
            .iter()
            .map(|f| {
                let mut track = Vec::with_capacity(padded);
                for t in 0..used {
                    track.push(f.project(seq.row(t))?);
                }
                // zero tokens project to exactly 0
                track.resize(padded, 0.0);
                Ok(track)
            })
            .collect()
    }

    /// Un-pooled outputs: `[filter][window][channel]`.
    pub fn window_outputs(
        &self,
        seq: &EmbeddingSequence,
        max_len: usize,
    ) -> Result<Vec<Vec<Vec<f64>>>> {
        let k = self.kernel;
        let tracks = self.angle_tracks(seq, max_len)?;
        self.filters
            .iter()
            .zip(&tracks)
            .map(|(f, track)| {
                track
                    .windows(k)
                    .map(|w| {
                        let mut out = vec![0.0; k];
                        f.window(w, &mut out)?;
                        Ok(out)
                    })
                    .collect()
            })
            .collect()
    }

    /// Globally max-pooled features for one sequence.
    pub fn features(&self, seq: &EmbeddingSequence, max_len: usize) -> Result<FeatureVector> {
        let k = self.kernel;
        let tracks = self.angle_tracks(seq, max_len)?;
        let mut values = vec![f64::NEG_INFINITY; self.feature_len()];
        let mut scratch = vec![0.0; k];
        for ((f, track), pooled) in self
            .filters
            .iter()
            .zip(&tracks)
            .zip(values.chunks_exact_mut(k))
        {
            for w in track.windows(k) {
                f.window(w, &mut scratch)?;
                for (p, &v) in pooled.iter_mut().zip(&scratch) {
                    *p = p.max(v);
                }
            }
        }
        Ok(FeatureVector {
            values,
            kind: self.kind,
        })
    }
}

fn expect_kind(bank: &FilterBank, kind: EncoderKind) -> Result<()> {
    if bank.kind != kind {
        return Err(QtcError::config(format!(
            "expected a {kind} filter bank, got {}",
            bank.kind
        )));
    }
    Ok(())
}

pub fn qtc_features(
    bank: &FilterBank,
    seq: &EmbeddingSequence,
    max_len: usize,
) -> Result<FeatureVector> {
    expect_kind(bank, EncoderKind::Qtc)?;
    bank.features(seq, max_len)
}

pub fn tcn_features(
    bank: &FilterBank,
    seq: &EmbeddingSequence,
    max_len: usize,
) -> Result<FeatureVector> {
    expect_kind(bank, EncoderKind::Tcn)?;
    bank.features(seq, max_len)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seq(t: usize, d: usize, fill: impl Fn(usize, usize) -> f32) -> EmbeddingSequence {
        let values = (0..t * d).map(|i| fill(i / d, i % d)).collect();
        EmbeddingSequence::new("s", "L", d, values).unwrap()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_token(&[0.3, -0.2], &[0.0, 0.0]).unwrap(), 0.0);
        let v = project_token(&[1.0; 4], &[1.0; 4]).unwrap();
        assert!((v - 3.0285819634241324).abs() < 1e-12, "{v}");
        let huge = project_token(&[1.0], &[1e30]).unwrap();
        assert!(huge <= PI && huge > PI - 1e-6);
        assert!(project_token(&[1.0; 3], &[1.0; 2]).is_err());
    }

    #[test]
    fn bank_is_deterministic() {
        let a = init_filter_bank(EncoderKind::Qtc, 2, 4, 64, 7).unwrap();
        let b = init_filter_bank(EncoderKind::Qtc, 2, 4, 64, 7).unwrap();
        assert_eq!(a, b);
        let c = init_filter_bank(EncoderKind::Qtc, 2, 4, 64, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bank_bounds() {
        for (n, k) in [(0, 4), (5, 4), (2, 1), (2, 17)] {
            assert!(matches!(
                init_filter_bank(EncoderKind::Qtc, n, k, 64, 7),
                Err(QtcError::Config(_))
            ));
        }
        assert!(init_filter_bank(EncoderKind::Tcn, 1, 2, 0, 7).is_err());
    }

    #[test]
    fn tcn_bank_shapes() {
        let bank = init_filter_bank(EncoderKind::Tcn, 2, 3, 64, 7).unwrap();
        assert_eq!(bank.num_filters(), 2);
        for f in bank.filters() {
            let Filter::Tcn(t) = f else {
                panic!("expected TCN")
            };
            assert_eq!(t.projection().len(), 64);
            assert_eq!(t.mixing().len(), 9);
        }
    }

    #[test]
    fn window_count_follows_length() {
        let bank = init_filter_bank(EncoderKind::Qtc, 2, 4, 3, 1).unwrap();
        let out = bank
            .window_outputs(&seq(5, 3, |t, d| (t + d) as f32 * 0.1), 50)
            .unwrap();
        assert!(out.iter().all(|f| f.len() == 2));
        let out = bank.window_outputs(&seq(3, 3, |_, _| 0.5), 50).unwrap();
        assert!(out.iter().all(|f| f.len() == 1));
        let fv = bank.features(&seq(3, 3, |_, _| 0.5), 50).unwrap();
        assert_eq!(fv.len(), 8);
    }

    #[test]
    fn zeroed_circuits_on_zero_embeddings_give_ones() {
        let filters = (0..2)
            .map(|_| {
                Filter::Qtc(
                    QtcFilter::new(vec![1.0, -1.0, 0.5], CircuitSpec::zeroed(4, 1).unwrap())
                        .unwrap(),
                )
            })
            .collect();
        let bank = FilterBank::from_filters(filters, 0).unwrap();
        for t in [4, 7, 60] {
            let fv = qtc_features(&bank, &seq(t, 3, |_, _| 0.0), 50).unwrap();
            assert_eq!(fv.values, vec![1.0; 8]);
        }
    }

    #[test]
    fn tcn_zero_embeddings_give_zeros() {
        let bank = init_filter_bank(EncoderKind::Tcn, 2, 4, 6, 3).unwrap();
        let fv = tcn_features(&bank, &seq(5, 6, |_, _| 0.0), 50).unwrap();
        assert_eq!(fv.values, vec![0.0; 8]);
    }

    #[test]
    fn tcn_identity_mixing_is_tanh_of_angles() {
        let proj = vec![1.0, 2.0];
        let mut eye = vec![0.0; 9];
        eye[0] = 1.0;
        eye[4] = 1.0;
        eye[8] = 1.0;
        let f = TcnFilter::new(proj.clone(), 3, eye).unwrap();
        let bank = FilterBank::from_filters(vec![Filter::Tcn(f)], 0).unwrap();
        let s = seq(3, 2, |t, d| (t as f32 - 1.0) * (d as f32 + 0.5));
        let fv = bank.features(&s, 50).unwrap();
        for t in 0..3 {
            let expect = project_token(&proj, s.row(t)).unwrap().tanh();
            assert!((fv.values[t] - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn empty_sequence_is_padded() {
        let bank = init_filter_bank(EncoderKind::Qtc, 1, 4, 5, 2).unwrap();
        let empty = EmbeddingSequence::new("e", "L", 5, vec![]).unwrap();
        let fv = bank.features(&empty, 50).unwrap();
        let Filter::Qtc(f) = &bank.filters()[0] else {
            unreachable!()
        };
        assert_eq!(fv.values, f.circuit().run(&[0.0; 4]).unwrap());
    }

    #[test]
    fn kind_mismatch_and_dim_mismatch() {
        let bank = init_filter_bank(EncoderKind::Qtc, 1, 2, 5, 2).unwrap();
        let s = seq(3, 5, |_, _| 0.1);
        assert!(tcn_features(&bank, &s, 50).is_err());
        assert!(matches!(
            bank.features(&seq(3, 4, |_, _| 0.1), 50),
            Err(QtcError::Shape { .. })
        ));
    }

    #[test]
    fn from_filters_rejects_mixed_banks() {
        let q = Filter::Qtc(QtcFilter::new(vec![1.0], CircuitSpec::zeroed(2, 1).unwrap()).unwrap());
        let t = Filter::Tcn(TcnFilter::new(vec![1.0], 2, vec![0.0; 4]).unwrap());
        assert!(FilterBank::from_filters(vec![q, t], 0).is_err());
        assert!(FilterBank::from_filters(vec![], 0).is_err());
    }

    #[test]
    fn encoder_kind_parses() {
        assert_eq!("QTC".parse::<EncoderKind>().unwrap(), EncoderKind::Qtc);
        assert_eq!("tcn".parse::<EncoderKind>().unwrap(), EncoderKind::Tcn);
        assert!("cnn".parse::<EncoderKind>().is_err());
        assert_eq!(serde_json::to_string(&EncoderKind::Qtc).unwrap(), "\"qtc\"");
    }
}
