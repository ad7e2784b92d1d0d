//! The two network architectures and the bit encoding they share.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::entropy::EntropyRange;
use super::kfold::Method;
use crate::dataset::{Label, Sample, SAMPLE_BITS, SAMPLE_BYTES};
use crate::error::{Error, Result};
use crate::nn::{BatchNorm, Conv1d, Dense, Layer, Network};
use crate::x86::FIXED_INSTRUCTION_LEN;

/// Bits per instruction slot; the first convolution's kernel and stride.
pub const SLOT_BITS: usize = FIXED_INSTRUCTION_LEN * 8;
pub const CONV1_FILTERS: usize = 96;
pub const CONV2_FILTERS: usize = 256;
pub const CONV2_KERNEL: usize = 2;
pub const HIDDEN: usize = 400;
pub const CLASSES: usize = 2;

/// Instruction-aligned 1-D CNN:
///
/// ```text
/// conv(K=128, S=128, 96) -> ReLU -> conv(K=2, S=1, 256) -> ReLU
///   -> BN -> fc(3840, 400) -> ReLU -> BN -> fc(400, 400) -> ReLU
///   -> fc(400, 2) -> softmax
/// ```
pub fn build_cnn(seed: u64) -> Network {
    let conv1 = Conv1d::new(SAMPLE_BITS, 1, SLOT_BITS, SLOT_BITS, CONV1_FILTERS).expect("conv1");
    let slots = conv1.out_width();
    let conv2 = Conv1d::new(slots, CONV1_FILTERS, CONV2_KERNEL, 1, CONV2_FILTERS).expect("conv2");
    let flat = conv2.out_len();
    let c1 = conv1.out_len();
    let mut net = Network::new(vec![
        Layer::Conv1d(conv1),
        Layer::Relu(c1),
        Layer::Conv1d(conv2),
        Layer::Relu(flat),
        Layer::BatchNorm(BatchNorm::new(flat).expect("bn1")),
        Layer::Dense(Dense::new(flat, HIDDEN).expect("fc1")),
        Layer::Relu(HIDDEN),
        Layer::BatchNorm(BatchNorm::new(HIDDEN).expect("bn2")),
        Layer::Dense(Dense::new(HIDDEN, HIDDEN).expect("fc2")),
        Layer::Relu(HIDDEN),
        Layer::Dense(Dense::new(HIDDEN, CLASSES).expect("fc3")),
        Layer::Softmax(CLASSES),
    ])
    .expect("cnn stack is consistent");
    net.init_weights(&mut ChaCha8Rng::seed_from_u64(seed));
    net
}

/// The CNN's fully connected head applied directly to the 2048 input bits.
pub fn build_mlp(seed: u64) -> Network {
    let mut net = Network::new(vec![
        Layer::BatchNorm(BatchNorm::new(SAMPLE_BITS).expect("bn1")),
        Layer::Dense(Dense::new(SAMPLE_BITS, HIDDEN).expect("fc1")),
        Layer::Relu(HIDDEN),
        Layer::BatchNorm(BatchNorm::new(HIDDEN).expect("bn2")),
        Layer::Dense(Dense::new(HIDDEN, HIDDEN).expect("fc2")),
        Layer::Relu(HIDDEN),
        Layer::Dense(Dense::new(HIDDEN, CLASSES).expect("fc3")),
        Layer::Softmax(CLASSES),
    ])
    .expect("mlp stack is consistent");
    net.init_weights(&mut ChaCha8Rng::seed_from_u64(seed));
    net
}

/// Expands bytes to 0/1 values, most significant bit first.
pub fn encode_bits(bytes: &[u8; SAMPLE_BYTES], out: &mut [f32]) {
    for (byte, bits) in bytes.iter().zip(out.chunks_exact_mut(8)) {
        for (i, bit) in bits.iter_mut().enumerate() {
            *bit = f32::from((byte >> (7 - i)) & 1);
        }
    }
}

/// Encodes samples into a `[n x 2048]` input matrix.
pub fn encode_batch<'a, I>(samples: I) -> Vec<f32>
where
    I: IntoIterator<Item = &'a [u8; SAMPLE_BYTES]>,
{
    let mut out = Vec::new();
    for s in samples {
        let start = out.len();
        out.resize(start + SAMPLE_BITS, 0.0);
        encode_bits(s, &mut out[start..]);
    }
    out
}

/// `Program` only when its probability strictly exceeds `Others`.
pub fn decide(probs: &[f32]) -> Label {
    if probs[1] > probs[0] {
        Label::Program
    } else {
        Label::Others
    }
}

/// Rows per inference batch.
pub const INFER_BATCH: usize = 256;

/// Classifies 256-byte inputs with a trained network (inference mode).
pub fn predict_bytes(net: &Network, inputs: &[[u8; SAMPLE_BYTES]], parallel: bool) -> Result<Vec<Label>> {
    let run = |chunk: &[[u8; SAMPLE_BYTES]]| -> Result<Vec<Label>> {
        let x = encode_batch(chunk);
        let probs = net.forward(&x, chunk.len())?;
        Ok(probs.chunks_exact(CLASSES).map(decide).collect())
    };
    let parts: Vec<Result<Vec<Label>>> = if parallel {
        inputs.par_chunks(INFER_BATCH).map(run).collect()
    } else {
        inputs.chunks(INFER_BATCH).map(run).collect()
    };
    let mut out = Vec::with_capacity(inputs.len());
    for p in parts {
        out.extend(p?);
    }
    Ok(out)
}

pub fn predict(net: &Network, samples: &[Sample], parallel: bool) -> Result<Vec<Label>> {
    let inputs: Vec<[u8; SAMPLE_BYTES]> = samples.iter().map(|s| s.bytes).collect();
    predict_bytes(net, &inputs, parallel)
}

/// A trained classifier of any of the three kinds.
#[derive(Clone, Debug, PartialEq)]
pub enum Classifier {
    Entropy(EntropyRange),
    Mlp(Network),
    Cnn(Network),
}

impl Classifier {
    pub fn method(&self) -> Method {
        match self {
            Classifier::Entropy(_) => Method::Entropy,
            Classifier::Mlp(_) => Method::Mlp,
            Classifier::Cnn(_) => Method::Cnn,
        }
    }

    /// Wraps a loaded network; a leading convolution marks the CNN.
    pub fn from_network(net: Network) -> Result<Self> {
        if net.input_len() != SAMPLE_BITS || net.output_len() != CLASSES {
            return Err(Error::Shape {
                op: "classifier",
                expected: vec![SAMPLE_BITS, CLASSES],
                actual: vec![net.input_len(), net.output_len()],
            });
        }
        Ok(match net.layers().first() {
            Some(Layer::Conv1d(_)) => Classifier::Cnn(net),
            _ => Classifier::Mlp(net),
        })
    }

    /// Classifies 256-byte inputs: raw blocks for the entropy and MLP
    /// kinds, packed instruction samples for the CNN.
    pub fn classify(&self, inputs: &[[u8; SAMPLE_BYTES]], parallel: bool) -> Result<Vec<Label>> {
        match self {
            Classifier::Entropy(r) => Ok(inputs.iter().map(|b| r.classify(b)).collect()),
            Classifier::Mlp(net) | Classifier::Cnn(net) => predict_bytes(net, inputs, parallel),
        }
    }
}
