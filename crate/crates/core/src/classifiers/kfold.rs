//! Stratified k-fold cross-validation.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::entropy::{fit_entropy_range_on, EntropyRange};
use super::metrics::{evaluate, mean_metrics, Metrics};
use super::models::{build_cnn, build_mlp, predict};
use super::train::{train, LearningCurve, TrainConfig};
use crate::dataset::corpus::derive_seed;
use crate::dataset::{Label, Sample};
use crate::error::{Error, Result};

/// Which classifier to train or apply.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Entropy,
    Mlp,
    Cnn,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Entropy => "entropy",
            Method::Mlp => "mlp",
            Method::Cnn => "cnn",
        }
    }

    /// Freshly initialized network for the neural methods.
    pub fn build(self, seed: u64) -> Option<crate::nn::Network> {
        match self {
            Method::Entropy => None,
            Method::Mlp => Some(build_mlp(seed)),
            Method::Cnn => Some(build_cnn(seed)),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "entropy" => Ok(Method::Entropy),
            "mlp" => Ok(Method::Mlp),
            "cnn" | "1d-cnn" => Ok(Method::Cnn),
            _ => Err(Error::Config(format!("unknown method {s:?}"))),
        }
    }
}

/// Fold index of every sample. Each label's indices are shuffled, then
/// `Program` indices followed by `Others` indices are dealt round-robin, so
/// fold sizes differ by at most one and each fold gets its share of both.
pub fn stratified_folds(labels: &[Label], k: usize, seed: u64) -> Result<Vec<usize>> {
    let n = labels.len();
    if k == 0 || k > n {
        return Err(Error::Folds { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut program: Vec<usize> = (0..n).filter(|&i| labels[i].is_program()).collect();
    let mut others: Vec<usize> = (0..n).filter(|&i| !labels[i].is_program()).collect();
    program.shuffle(&mut rng);
    others.shuffle(&mut rng);
    let mut fold = vec![0; n];
    for (pos, &i) in program.iter().chain(&others).enumerate() {
        fold[i] = pos % k;
    }
    Ok(fold)
}

/// Outcome of one held-out fold.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldResult {
    pub metrics: Metrics,
    pub curve: LearningCurve,
    /// Fitted range, for the entropy method.
    pub range: Option<EntropyRange>,
}

/// Per-epoch minimum, mean and maximum across folds.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Envelope {
    pub min: Vec<f64>,
    pub mean: Vec<f64>,
    pub max: Vec<f64>,
}

impl Envelope {
    pub fn of(series: &[&[f64]]) -> Self {
        let len = series.iter().map(|s| s.len()).min().unwrap_or(0);
        let mut env = Envelope::default();
        for e in 0..len {
            let vals = series.iter().map(|s| s[e]);
            env.min.push(vals.clone().fold(f64::INFINITY, f64::min));
            env.max.push(vals.clone().fold(f64::NEG_INFINITY, f64::max));
            env.mean.push(vals.sum::<f64>() / series.len() as f64);
        }
        env
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CvReport {
    pub method: Method,
    pub folds: Vec<FoldResult>,
}

impl CvReport {
    pub fn mean(&self) -> Metrics {
        let m: Vec<Metrics> = self.folds.iter().map(|f| f.metrics).collect();
        mean_metrics(&m)
    }

    pub fn train_envelope(&self) -> Envelope {
        let s: Vec<&[f64]> = self.folds.iter().map(|f| f.curve.train.as_slice()).collect();
        Envelope::of(&s)
    }

    pub fn test_envelope(&self) -> Envelope {
        let s: Vec<&[f64]> = self.folds.iter().map(|f| f.curve.test.as_slice()).collect();
        Envelope::of(&s)
    }
}

const FOLD_STREAM: u64 = 0x464F_4C44;

/// Seed for fold `i`'s network initialization and shuffling.
pub fn fold_seed(master: u64, i: usize) -> u64 {
    derive_seed(master, &format!("fold{i}"), FOLD_STREAM)
}

fn run_fold(
    data: &[Sample],
    folds: &[usize],
    i: usize,
    method: Method,
    cfg: &TrainConfig,
) -> Result<FoldResult> {
    let mut test = Vec::new();
    let mut training = Vec::new();
    for (s, &f) in data.iter().zip(folds) {
        if f == i {
            test.push(s.clone());
        } else {
            training.push(s.clone());
        }
    }
    let truths: Vec<Label> = test.iter().map(|s| s.label).collect();
    let seed = fold_seed(cfg.seed, i);
    match method.build(seed) {
        None => {
            let range = fit_entropy_range_on(&training)?;
            let preds: Vec<Label> = test.iter().map(|s| range.classify(&s.bytes)).collect();
            Ok(FoldResult {
                metrics: evaluate(&preds, &truths)?,
                curve: LearningCurve::default(),
                range: Some(range),
            })
        }
        Some(mut net) => {
            let fold_cfg = TrainConfig { seed, ..*cfg };
            let curve = train(&mut net, &training, Some(&test), &fold_cfg)?;
            let preds = predict(&net, &test, false)?;
            log::info!("{method} fold {i}: done");
            Ok(FoldResult {
                metrics: evaluate(&preds, &truths)?,
                curve,
                range: None,
            })
        }
    }
}

/// Runs `k`-fold cross-validation. Folds are independent and run on the
/// rayon pool when `parallel` is set; results do not depend on it.
pub fn kfold_cv(
    data: &[Sample],
    k: usize,
    method: Method,
    cfg: &TrainConfig,
    parallel: bool,
) -> Result<CvReport> {
    cfg.validate()?;
    let labels: Vec<Label> = data.iter().map(|s| s.label).collect();
    let folds = stratified_folds(&labels, k, cfg.seed)?;
    let results: Vec<Result<FoldResult>> = if parallel {
        (0..k)
            .into_par_iter()
            .map(|i| run_fold(data, &folds, i, method, cfg))
            .collect()
    } else {
        (0..k).map(|i| run_fold(data, &folds, i, method, cfg)).collect()
    };
    Ok(CvReport {
        method,
        folds: results.into_iter().collect::<Result<_>>()?,
    })
}
