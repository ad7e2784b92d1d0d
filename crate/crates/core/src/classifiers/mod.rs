//! Entropy-range, MLP and CNN block classifiers with their training and
//! cross-validation harness.

pub mod entropy;
pub mod kfold;
pub mod metrics;
pub mod models;
pub mod report;
pub mod train;

pub use entropy::{entropy_rate, fit_entropy_range, EntropyRange};
pub use kfold::{kfold_cv, stratified_folds, CvReport, Envelope, FoldResult, Method};
pub use metrics::{evaluate, mean_metrics, Metrics};
pub use models::{build_cnn, build_mlp, decide, Classifier, encode_bits, predict, predict_bytes};
pub use report::{format_curve, format_report, parse_curve, parse_report};
pub use train::{train, LearningCurve, TrainConfig};
