//! A small neural-network engine: 1-D convolution, fully connected and
//! batch-normalization layers, ReLU, softmax with a two-term cross-entropy
//! loss, backpropagation and plain mini-batch SGD.

pub mod layers;
pub mod loss;
pub mod model_io;
pub mod network;
mod scalar;
mod tensor;

pub use layers::{
    batch_norm_forward, conv1d_forward, conv_output_width, fc_forward, relu, BatchNorm, Conv1d,
    Dense, Mode,
};
pub use loss::{cross_entropy, softmax};
pub use model_io::{load_model, save_model};
pub use network::{one_hot, Gradients, Layer, Network, Trace};
pub use scalar::Scalar;
pub use tensor::Tensor;
