use rand::Rng;

use super::layers::{relu_backward, relu_in_place, BatchNorm, BatchNormCache, Conv1d, Dense};
use super::loss::{batch_loss, loss_grad, softmax_rows};
use super::tensor::check_finite;
use super::Scalar;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum Layer<T = f32> {
    Conv1d(Conv1d<T>),
    Dense(Dense<T>),
    BatchNorm(BatchNorm<T>),
    /// Elementwise `max(u, 0)` over `n` values.
    Relu(usize),
    /// Row softmax over `k` classes; only valid as the last layer.
    Softmax(usize),
}

impl<T: Scalar> Layer<T> {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Conv1d(_) => "conv1d",
            Layer::Dense(_) => "fully_connected",
            Layer::BatchNorm(_) => "batch_norm",
            Layer::Relu(_) => "relu",
            Layer::Softmax(_) => "softmax",
        }
    }

    pub fn in_len(&self) -> usize {
        match self {
            Layer::Conv1d(c) => c.in_len(),
            Layer::Dense(d) => d.inputs,
            Layer::BatchNorm(b) => b.features,
            Layer::Relu(n) | Layer::Softmax(n) => *n,
        }
    }

    pub fn out_len(&self) -> usize {
        match self {
            Layer::Conv1d(c) => c.out_len(),
            Layer::Dense(d) => d.outputs,
            Layer::BatchNorm(b) => b.features,
            Layer::Relu(n) | Layer::Softmax(n) => *n,
        }
    }

    /// Per-sample output shape; convolutions report `[width, depth]`.
    pub fn out_shape(&self) -> Vec<usize> {
        match self {
            Layer::Conv1d(c) => vec![c.out_width(), c.out_depth],
            other => vec![other.out_len()],
        }
    }

    fn params(&self) -> Vec<&[T]> {
        match self {
            Layer::Conv1d(c) => vec![&c.weight, &c.bias],
            Layer::Dense(d) => vec![&d.weight, &d.bias],
            Layer::BatchNorm(b) => vec![&b.scale, &b.shift],
            Layer::Relu(_) | Layer::Softmax(_) => vec![],
        }
    }

    fn params_mut(&mut self) -> Vec<&mut [T]> {
        match self {
            Layer::Conv1d(c) => vec![&mut c.weight, &mut c.bias],
            Layer::Dense(d) => vec![&mut d.weight, &mut d.bias],
            Layer::BatchNorm(b) => vec![&mut b.scale, &mut b.shift],
            Layer::Relu(_) | Layer::Softmax(_) => vec![],
        }
    }

    fn cast<U: Scalar>(&self) -> Layer<U> {
        fn c<T: Scalar, U: Scalar>(v: &[T]) -> Vec<U> {
            v.iter().map(|x| U::from_f64(x.to_f64())).collect()
        }
        match self {
            Layer::Conv1d(l) => Layer::Conv1d(Conv1d {
                in_width: l.in_width,
                in_depth: l.in_depth,
                kernel: l.kernel,
                stride: l.stride,
                out_depth: l.out_depth,
                weight: c(&l.weight),
                bias: c(&l.bias),
            }),
            Layer::Dense(l) => Layer::Dense(Dense {
                inputs: l.inputs,
                outputs: l.outputs,
                weight: c(&l.weight),
                bias: c(&l.bias),
            }),
            Layer::BatchNorm(l) => Layer::BatchNorm(BatchNorm {
                features: l.features,
                scale: c(&l.scale),
                shift: c(&l.shift),
                running_mean: c(&l.running_mean),
                running_var: c(&l.running_var),
                epsilon: U::from_f64(l.epsilon.to_f64()),
                momentum: U::from_f64(l.momentum.to_f64()),
            }),
            Layer::Relu(n) => Layer::Relu(*n),
            Layer::Softmax(n) => Layer::Softmax(*n),
        }
    }
}

/// A feed-forward stack ending in a softmax.
#[derive(Clone, Debug, PartialEq)]
pub struct Network<T = f32> {
    layers: Vec<Layer<T>>,
}

/// Activations recorded by a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct Trace<T> {
    batch: usize,
    /// `acts[i]` is the input of layer `i`; the last entry is the output.
    acts: Vec<Vec<T>>,
    bn: Vec<Option<BatchNormCache<T>>>,
}

impl<T: Scalar> Trace<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    /// Softmax outputs, `[batch x k]`.
    pub fn output(&self) -> &[T] {
        self.acts.last().expect("trace has an output")
    }

    /// Input of layer `i` (or the network output for `i == layers`).
    pub fn activation(&self, i: usize) -> &[T] {
        &self.acts[i]
    }
}

/// Parameter gradients in [`Network::params`] order, plus the loss they
/// were taken from.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients<T> {
    pub values: Vec<Vec<T>>,
    pub loss: f64,
}

impl<T: Scalar> Network<T> {
    /// Checks that consecutive layers agree on sizes and that exactly the
    /// last layer is a softmax.
    pub fn new(layers: Vec<Layer<T>>) -> Result<Self> {
        let Some(Layer::Softmax(_)) = layers.last() else {
            return Err(Error::Config("network must end in a softmax".into()));
        };
        for (i, pair) in layers.windows(2).enumerate() {
            if matches!(pair[0], Layer::Softmax(_)) {
                return Err(Error::Config(format!("softmax at position {i} is not last")));
            }
            if pair[0].out_len() != pair[1].in_len() {
                return Err(Error::Shape {
                    op: pair[1].name(),
                    expected: vec![pair[1].in_len()],
                    actual: vec![pair[0].out_len()],
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer<T>] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer<T>] {
        &mut self.layers
    }

    pub fn input_len(&self) -> usize {
        self.layers[0].in_len()
    }

    pub fn output_len(&self) -> usize {
        self.layers.last().map_or(0, Layer::out_len)
    }

    /// Per-sample output shape of every layer, in order.
    pub fn shapes(&self) -> Vec<Vec<usize>> {
        self.layers.iter().map(Layer::out_shape).collect()
    }

    pub fn params(&self) -> Vec<&[T]> {
        self.layers.iter().flat_map(Layer::params).collect()
    }

    pub fn params_mut(&mut self) -> Vec<&mut [T]> {
        self.layers.iter_mut().flat_map(Layer::params_mut).collect()
    }

    pub fn param_count(&self) -> usize {
        self.params().iter().map(|p| p.len()).sum()
    }

    /// Converts every value to another element type.
    pub fn cast<U: Scalar>(&self) -> Network<U> {
        Network {
            layers: self.layers.iter().map(Layer::cast).collect(),
        }
    }

    /// Draws weights uniformly from `[-a, a]` with `a = sqrt(6 / fan_in)`;
    /// biases and batch-norm parameters keep their neutral values.
    pub fn init_weights<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        for layer in &mut self.layers {
            let (weight, fan_in) = match layer {
                Layer::Conv1d(c) => (&mut c.weight, c.kernel * c.in_depth),
                Layer::Dense(d) => (&mut d.weight, d.inputs),
                _ => continue,
            };
            let a = (6.0 / fan_in as f64).sqrt();
            for w in weight.iter_mut() {
                *w = T::from_f64(rng.gen_range(-a..a));
            }
        }
    }

    fn check_input(&self, x: &[T], batch: usize) -> Result<()> {
        if batch == 0 || x.len() != batch * self.input_len() {
            return Err(Error::Shape {
                op: "network input",
                expected: vec![batch, self.input_len()],
                actual: vec![x.len()],
            });
        }
        check_finite(x, "network input")
    }

    /// Inference-mode forward pass (batch norm uses running statistics).
    /// Returns `[batch x k]` probabilities.
    pub fn forward(&self, x: &[T], batch: usize) -> Result<Vec<T>> {
        self.check_input(x, batch)?;
        let mut cur = x.to_vec();
        for layer in &self.layers {
            let mut out = vec![T::ZERO; batch * layer.out_len()];
            match layer {
                Layer::Conv1d(c) => c.forward(&cur, batch, &mut out),
                Layer::Dense(d) => d.forward(&cur, batch, &mut out),
                Layer::BatchNorm(b) => b.forward_infer(&cur, &mut out),
                Layer::Relu(_) => {
                    out.copy_from_slice(&cur);
                    relu_in_place(&mut out);
                }
                Layer::Softmax(k) => softmax_rows(&cur, *k, &mut out),
            }
            check_finite(&out, layer.name())?;
            cur = out;
        }
        Ok(cur)
    }

    /// Training-mode forward pass. Updates batch-norm running statistics and
    /// records what [`Network::backward`] needs.
    pub fn forward_train(&mut self, x: &[T], batch: usize) -> Result<Trace<T>> {
        self.check_input(x, batch)?;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        let mut bn = Vec::with_capacity(self.layers.len());
        acts.push(x.to_vec());
        for layer in &mut self.layers {
            let cur = acts.last().unwrap();
            let mut out = vec![T::ZERO; batch * layer.out_len()];
            let mut cache = None;
            match layer {
                Layer::Conv1d(c) => c.forward(cur, batch, &mut out),
                Layer::Dense(d) => d.forward(cur, batch, &mut out),
                Layer::BatchNorm(b) => cache = Some(b.forward_train(cur, batch, &mut out)?),
                Layer::Relu(_) => {
                    out.copy_from_slice(cur);
                    relu_in_place(&mut out);
                }
                Layer::Softmax(k) => softmax_rows(cur, *k, &mut out),
            }
            check_finite(&out, layer.name())?;
            acts.push(out);
            bn.push(cache);
        }
        Ok(Trace { batch, acts, bn })
    }

    /// Gradients of the mean batch loss against one-hot `targets`
    /// (`[batch x k]`) for every parameter.
    pub fn backward(&self, trace: &Trace<T>, targets: &[T]) -> Result<Gradients<T>> {
        let batch = trace.batch;
        let k = self.output_len();
        if targets.len() != batch * k {
            return Err(Error::Shape {
                op: "targets",
                expected: vec![batch, k],
                actual: vec![targets.len()],
            });
        }
        let probs = trace.output();
        let loss = batch_loss(probs, targets, k);

        let mut grads: Vec<Vec<Vec<T>>> = self
            .layers
            .iter()
            .map(|l| l.params().iter().map(|p| vec![T::ZERO; p.len()]).collect())
            .collect();

        let mut g = vec![T::ZERO; probs.len()];
        loss_grad(probs, targets, k, &mut g);

        // The softmax is folded into the loss gradient above.
        let last = self.layers.len() - 1;
        for i in (0..last).rev() {
            let x = &trace.acts[i];
            let want_dx = i > 0;
            let mut dx = if want_dx {
                vec![T::ZERO; x.len()]
            } else {
                Vec::new()
            };
            let dx_opt = want_dx.then_some(dx.as_mut_slice());
            match &self.layers[i] {
                Layer::Conv1d(c) => {
                    let (dw, db) = split2(&mut grads[i]);
                    c.backward(x, &g, batch, dw, db, dx_opt);
                }
                Layer::Dense(d) => {
                    let (dw, db) = split2(&mut grads[i]);
                    d.backward(x, &g, batch, dw, db, dx_opt);
                }
                Layer::BatchNorm(b) => {
                    let cache = trace.bn[i].as_ref().expect("batch norm cache");
                    let (ds, dsh) = split2(&mut grads[i]);
                    b.backward(cache, &g, batch, ds, dsh, dx_opt);
                }
                Layer::Relu(_) => {
                    if let Some(dx) = dx_opt {
                        dx.copy_from_slice(&g);
                        relu_backward(&trace.acts[i + 1], dx);
                    }
                }
                Layer::Softmax(_) => unreachable!("softmax is always last"),
            }
            if want_dx {
                g = dx;
            }
        }

        Ok(Gradients {
            values: grads.into_iter().flatten().collect(),
            loss,
        })
    }

    /// Plain gradient descent: `w <- w - lr * g` for every parameter.
    pub fn sgd_step(&mut self, grads: &Gradients<T>, lr: T) {
        for (p, g) in self.params_mut().into_iter().zip(&grads.values) {
            for (w, d) in p.iter_mut().zip(g) {
                *w -= lr * *d;
            }
        }
    }

    /// Mean batch loss at the current parameters, training-mode statistics.
    pub fn train_loss(&mut self, x: &[T], targets: &[T], batch: usize) -> Result<f64> {
        let trace = self.forward_train(x, batch)?;
        Ok(batch_loss(trace.output(), targets, self.output_len()))
    }
}

fn split2<T>(v: &mut [Vec<T>]) -> (&mut [T], &mut [T]) {
    let (a, b) = v.split_at_mut(1);
    (&mut a[0], &mut b[0])
}

/// One-hot `[n x 2]` targets, column 1 for `Program`.
pub fn one_hot<T: Scalar>(labels: impl IntoIterator<Item = crate::dataset::Label>) -> Vec<T> {
    labels
        .into_iter()
        .flat_map(|l| {
            if l.is_program() {
                [T::ZERO, T::ONE]
            } else {
                [T::ONE, T::ZERO]
            }
        })
        .collect()
}
