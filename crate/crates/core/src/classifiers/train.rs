//! Mini-batch SGD training loop.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::models::{encode_batch, CLASSES, INFER_BATCH};
use crate::dataset::Sample;
use crate::error::{Error, Result};
use crate::nn::{one_hot, Layer, Network};

/// Hyperparameters of one training run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f32,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 100,
            epochs: 200,
            seed: crate::DEFAULT_SEED,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch size must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-epoch errors of one run. `test` is empty when no test set was given.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LearningCurve {
    pub train: Vec<f64>,
    pub test: Vec<f64>,
}

impl LearningCurve {
    pub fn epochs(&self) -> usize {
        self.train.len()
    }
}

fn has_batch_norm(net: &Network) -> bool {
    net.layers().iter().any(|l| matches!(l, Layer::BatchNorm(_)))
}

/// Splits `0..n` into consecutive batches. With batch norm in the network a
/// trailing singleton batch is merged into the one before it.
pub fn batch_bounds(n: usize, batch_size: usize, merge_singleton: bool) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = (0..n)
        .step_by(batch_size.max(1))
        .map(|s| (s, (s + batch_size).min(n)))
        .collect();
    if merge_singleton && out.len() > 1 {
        if let Some(&(s, e)) = out.last() {
            if e - s == 1 {
                out.pop();
                out.last_mut().unwrap().1 = e;
            }
        }
    }
    out
}

/// Mean per-sample loss in inference mode.
pub fn evaluate_loss(net: &Network, samples: &[Sample]) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("evaluate_loss"));
    }
    let mut total = 0.0;
    for chunk in samples.chunks(INFER_BATCH) {
        let x = encode_batch(chunk.iter().map(|s| &s.bytes));
        let y = net.forward(&x, chunk.len())?;
        let t: Vec<f32> = one_hot(chunk.iter().map(|s| s.label));
        for (yr, tr) in y.chunks_exact(CLASSES).zip(t.chunks_exact(CLASSES)) {
            total += crate::nn::cross_entropy(yr, tr)?;
        }
    }
    Ok(total / samples.len() as f64)
}

/// Trains `net` in place. Each epoch reshuffles with a generator seeded
/// from `cfg.seed`, runs one SGD step per mini-batch and records the
/// sample-weighted mean training loss, plus the inference-mode loss on
/// `test` when given.
pub fn train(
    net: &mut Network,
    data: &[Sample],
    test: Option<&[Sample]>,
    cfg: &TrainConfig,
) -> Result<LearningCurve> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if net.output_len() != CLASSES {
        return Err(Error::Shape {
            op: "train",
            expected: vec![CLASSES],
            actual: vec![net.output_len()],
        });
    }
    let bn = has_batch_norm(net);
    if bn && data.len() < 2 {
        return Err(Error::BatchTooSmall(data.len()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let bounds = batch_bounds(data.len(), cfg.batch_size, bn);
    let mut curve = LearningCurve::default();

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut sum = 0.0;
        for (b, &(s, e)) in bounds.iter().enumerate() {
            let idx = &order[s..e];
            let x = encode_batch(idx.iter().map(|&i| &data[i].bytes));
            let t: Vec<f32> = one_hot(idx.iter().map(|&i| data[i].label));
            let diverged = |loss: f64| Error::Diverged {
                epoch,
                batch: b,
                loss,
            };
            let trace = net.forward_train(&x, idx.len()).map_err(|err| match err {
                Error::NonFinite(_) => diverged(f64::NAN),
                other => other,
            })?;
            let grads = net.backward(&trace, &t)?;
            if !grads.loss.is_finite() {
                return Err(diverged(grads.loss));
            }
            net.sgd_step(&grads, cfg.learning_rate);
            sum += grads.loss * idx.len() as f64;
        }
        let train_err = sum / data.len() as f64;
        let test_err = match test {
            Some(t) if !t.is_empty() => Some(evaluate_loss(net, t)?),
            _ => None,
        };
        log::debug!("epoch {epoch}: train {train_err:.6} test {test_err:?}");
        curve.train.push(train_err);
        if let Some(e) = test_err {
            curve.test.push(e);
        }
    }
    Ok(curve)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::models::build_mlp;
    use crate::dataset::Label;

    fn toy() -> Vec<Sample> {
        (0..8u8)
            .map(|i| {
                let label = if i % 2 == 0 { Label::Program } else { Label::Others };
                let mut bytes = [0u8; 256];
                if label.is_program() {
                    bytes[..128].fill(0xFF);
                } else {
                    bytes[128..].fill(0xFF);
                }
                bytes[200] = i;
                Sample::new(label, bytes)
            })
            .collect()
    }

    #[test]
    fn evaluate_loss_is_per_sample_mean() {
        let net = build_mlp(3);
        let data: Vec<Sample> = toy().into_iter().cycle().take(300).collect();
        let mut want = 0.0;
        for s in &data {
            let y = net.forward(&encode_batch([&s.bytes]), 1).unwrap();
            want += crate::nn::cross_entropy(&y, &one_hot::<f32>([s.label])).unwrap();
        }
        want /= data.len() as f64;
        let got = evaluate_loss(&net, &data).unwrap();
        assert!((got - want).abs() < 1e-9 * want.max(1.0), "{got} vs {want}");
    }

    #[test]
    fn bounds_cover_disjointly() {
        assert_eq!(batch_bounds(250, 100, false), vec![(0, 100), (100, 200), (200, 250)]);
        assert_eq!(batch_bounds(201, 100, true), vec![(0, 100), (100, 201)]);
        assert_eq!(batch_bounds(201, 100, false).len(), 3);
        assert_eq!(batch_bounds(1, 100, true), vec![(0, 1)]);
    }

    #[test]
    fn zero_epochs_leaves_net_unchanged() {
        let mut net = build_mlp(5);
        let before = net.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..Default::default()
        };
        let curve = train(&mut net, &toy(), None, &cfg).unwrap();
        assert_eq!(curve.epochs(), 0);
        assert_eq!(net, before);
    }

    #[test]
    fn separable_toy_converges() {
        let data = toy();
        let mut net = build_mlp(5);
        let cfg = TrainConfig {
            epochs: 200,
            batch_size: 4,
            learning_rate: 0.01,
            seed: 9,
        };
        let curve = train(&mut net, &data, Some(&data), &cfg).unwrap();
        assert_eq!(curve.train.len(), 200);
        assert_eq!(curve.test.len(), 200);
        assert!(*curve.train.last().unwrap() < 0.01, "{:?}", curve.train.last());
        let preds = crate::classifiers::models::predict(&net, &data, false).unwrap();
        assert!(preds.iter().zip(&data).all(|(p, s)| *p == s.label));
    }

    #[test]
    fn rejects_bad_config() {
        let mut net = build_mlp(1);
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(matches!(train(&mut net, &toy(), None, &bad), Err(Error::Config(_))));
        assert!(train(&mut net, &[], None, &TrainConfig::default()).is_err());
        assert!(matches!(
            train(&mut net, &toy()[..1], None, &TrainConfig::default()),
            Err(Error::BatchTooSmall(1))
        ));
    }

    #[test]
    fn huge_learning_rate_diverges_with_diagnostic() {
        let mut net = build_mlp(1);
        let cfg = TrainConfig {
            learning_rate: 1e30,
            batch_size: 4,
            epochs: 50,
            seed: 1,
        };
        match train(&mut net, &toy(), None, &cfg) {
            Err(Error::Diverged { .. }) => {}
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 3,
            learning_rate: 0.01,
            seed: 4,
        };
        let mut a = build_mlp(2);
        let mut b = build_mlp(2);
        let ca = train(&mut a, &toy(), None, &cfg).unwrap();
        let cb = train(&mut b, &toy(), None, &cfg).unwrap();
        assert_eq!(ca, cb);
        assert_eq!(a, b);
    }
}
