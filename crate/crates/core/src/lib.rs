//! Classify fragments of arbitrary files as x86 machine code or not, and
//! render whole files as images that localize embedded code.
//!
//! Three classifiers are provided: a byte-entropy range test, a
//! multi-layer perceptron over raw 256-byte blocks, and a 1-D CNN whose
//! first layer reads one zero-padded instruction per receptive field.

pub mod classifiers;
pub mod dataset;
pub mod error;
pub mod nn;
pub mod visualize;
pub mod x86;


pub use dataset::{Label, Sample};
pub use error::{Error, Result};
pub use nn::Network;
pub use classifiers::{Classifier, EntropyRange, Method, Metrics, TrainConfig};
pub use visualize::{Decision, Image, ScanReport};


/// Seed used when the caller does not supply one.
pub const DEFAULT_SEED: u64 = 20_180_417;
