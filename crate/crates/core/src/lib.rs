//! Quantum temporal convolution (QTC) for intent classification.
//!
//! A frozen, randomly drawn variational circuit slides over a sequence of
//! token embeddings like a 1-D convolution filter; its per-qubit Pauli-Z
//! readouts are globally max-pooled and fed to a softmax head that is the
//! only trained component. A classical random temporal convolution with the
//! same shapes serves as the baseline.
//!
//! Modules, bottom up:
//! - [`qsim`]: dense statevector simulator plus a dense-unitary oracle
//! - [`vqc`]: the frozen circuit (angle encoding, `Rot` layer, CNOT ring)
//! - [`encoder`]: QTC and TCN filter banks with windowing and pooling
//! - [`model`]: softmax head, cross-entropy and its optimizers
//! - [`data`]: TSV corpora, top-k filtering, k-fold splits, embeddings
//! - [`harness`]: seeded experiment runs, grids and reports

pub mod data;
pub mod encoder;
pub mod error;
pub mod harness;
pub mod model;
pub mod qsim;
pub mod rng;
pub mod vqc;

pub use data::{DatasetSplit, EmbeddingSequence, LabeledUtterance};
pub use encoder::{init_filter_bank, EncoderKind, FeatureVector, FilterBank};
pub use error::{QtcError, Result};
pub use harness::{ExperimentConfig, MetricsReport};
pub use model::{SoftmaxHead, TrainConfig};
pub use qsim::StateVector;
pub use vqc::{init_circuit, run_circuit, CircuitSpec};
