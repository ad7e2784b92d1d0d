//! Layer kernels. All batch buffers are row-major with the sample index
//! outermost; convolution activations are `[width x depth]` per sample.

use super::scalar::{gemm, MatRef};
use super::{Scalar, Tensor};
use crate::error::{Error, Result};

/// Output width of a valid (unpadded) 1-D convolution: `(W - K) / S + 1`.
/// Fails unless that is a positive integer.
pub fn conv_output_width(width: usize, kernel: usize, stride: usize) -> Result<usize> {
    if kernel == 0 || stride == 0 || kernel > width || !(width - kernel).is_multiple_of(stride) {
        return Err(Error::Config(format!(
            "convolution geometry W={width} K={kernel} S={stride} does not tile"
        )));
    }
    Ok((width - kernel) / stride + 1)
}

/// One-dimensional convolution with `out_depth` kernels shared across
/// every position.
#[derive(Clone, Debug, PartialEq)]
pub struct Conv1d<T = f32> {
    pub in_width: usize,
    pub in_depth: usize,
    pub kernel: usize,
    pub stride: usize,
    pub out_depth: usize,
    /// `[out_depth x (kernel * in_depth)]`; a row matches the layout of an
    /// input patch (position-major, channel-minor).
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Conv1d<T> {
    pub fn new(
        in_width: usize,
        in_depth: usize,
        kernel: usize,
        stride: usize,
        out_depth: usize,
    ) -> Result<Self> {
        conv_output_width(in_width, kernel, stride)?;
        if in_depth == 0 || out_depth == 0 {
            return Err(Error::Config("convolution depth must be positive".into()));
        }
        Ok(Self {
            in_width,
            in_depth,
            kernel,
            stride,
            out_depth,
            weight: vec![T::ZERO; out_depth * kernel * in_depth],
            bias: vec![T::ZERO; out_depth],
        })
    }

    pub fn out_width(&self) -> usize {
        (self.in_width - self.kernel) / self.stride + 1
    }

    pub fn in_len(&self) -> usize {
        self.in_width * self.in_depth
    }

    pub fn out_len(&self) -> usize {
        self.out_width() * self.out_depth
    }

    fn patch_len(&self) -> usize {
        self.kernel * self.in_depth
    }

    /// Non-overlapping kernels tile the input; the whole batch is then one
    /// patch matrix.
    fn tiles(&self) -> bool {
        self.kernel == self.stride
    }

    pub(crate) fn forward(&self, x: &[T], batch: usize, y: &mut [T]) {
        let (ow, pl, od) = (self.out_width(), self.patch_len(), self.out_depth);
        let w = MatRef::new(&self.weight, od, pl).t();
        if self.tiles() {
            let rows = batch * ow;
            let patches = MatRef::new(&x[..rows * pl], rows, pl);
            fill_rows(y, &self.bias);
            gemm(patches, w, T::ONE, y, od);
        } else {
            let step = self.stride * self.in_depth;
            for s in 0..batch {
                let xs = &x[s * self.in_len()..(s + 1) * self.in_len()];
                let ys = &mut y[s * self.out_len()..(s + 1) * self.out_len()];
                fill_rows(ys, &self.bias);
                gemm(MatRef::strided(xs, ow, pl, step), w, T::ONE, ys, od);
            }
        }
    }

    /// Accumulates parameter gradients into `dw`/`db` and, if requested,
    /// writes the input gradient into `dx` (overwritten).
    pub(crate) fn backward(
        &self,
        x: &[T],
        dy: &[T],
        batch: usize,
        dw: &mut [T],
        db: &mut [T],
        dx: Option<&mut [T]>,
    ) {
        let (ow, pl, od) = (self.out_width(), self.patch_len(), self.out_depth);
        column_sums(dy, od, db);
        let w = MatRef::new(&self.weight, od, pl);
        if self.tiles() {
            let rows = batch * ow;
            let patches = MatRef::new(&x[..rows * pl], rows, pl);
            let g = MatRef::new(dy, rows, od);
            gemm(g.t(), patches, T::ONE, dw, pl);
            if let Some(dx) = dx {
                gemm(g, w, T::ZERO, &mut dx[..rows * pl], pl);
            }
        } else {
            let step = self.stride * self.in_depth;
            let mut dpatch = vec![T::ZERO; ow * pl];
            let mut dx = dx;
            for s in 0..batch {
                let xs = &x[s * self.in_len()..(s + 1) * self.in_len()];
                let g = MatRef::new(&dy[s * self.out_len()..(s + 1) * self.out_len()], ow, od);
                gemm(g.t(), MatRef::strided(xs, ow, pl, step), T::ONE, dw, pl);
                if let Some(dx) = dx.as_deref_mut() {
                    gemm(g, w, T::ZERO, &mut dpatch, pl);
                    let dxs = &mut dx[s * self.in_len()..(s + 1) * self.in_len()];
                    dxs.fill(T::ZERO);
                    for (j, row) in dpatch.chunks_exact(pl).enumerate() {
                        for (d, v) in dxs[j * step..j * step + pl].iter_mut().zip(row) {
                            *d += *v;
                        }
                    }
                }
            }
        }
    }
}

/// Fully connected layer `y = W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dense<T = f32> {
    pub inputs: usize,
    pub outputs: usize,
    /// `[outputs x inputs]`
    pub weight: Vec<T>,
    pub bias: Vec<T>,
}

impl<T: Scalar> Dense<T> {
    pub fn new(inputs: usize, outputs: usize) -> Result<Self> {
        if inputs == 0 || outputs == 0 {
            return Err(Error::Config("dense layer dimensions must be positive".into()));
        }
        Ok(Self {
            inputs,
            outputs,
            weight: vec![T::ZERO; inputs * outputs],
            bias: vec![T::ZERO; outputs],
        })
    }

    pub(crate) fn forward(&self, x: &[T], batch: usize, y: &mut [T]) {
        fill_rows(y, &self.bias);
        gemm(
            MatRef::new(x, batch, self.inputs),
            MatRef::new(&self.weight, self.outputs, self.inputs).t(),
            T::ONE,
            y,
            self.outputs,
        );
    }

    pub(crate) fn backward(
        &self,
        x: &[T],
        dy: &[T],
        batch: usize,
        dw: &mut [T],
        db: &mut [T],
        dx: Option<&mut [T]>,
    ) {
        column_sums(dy, self.outputs, db);
        let g = MatRef::new(dy, batch, self.outputs);
        gemm(g.t(), MatRef::new(x, batch, self.inputs), T::ONE, dw, self.inputs);
        if let Some(dx) = dx {
            gemm(
                g,
                MatRef::new(&self.weight, self.outputs, self.inputs),
                T::ZERO,
                dx,
                self.inputs,
            );
        }
    }
}

pub const BATCH_NORM_EPSILON: f64 = 1e-5;
pub const BATCH_NORM_MOMENTUM: f64 = 0.9;

/// Per-feature batch normalization with learned scale and shift.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchNorm<T = f32> {
    pub features: usize,
    pub scale: Vec<T>,
    pub shift: Vec<T>,
    pub running_mean: Vec<T>,
    pub running_var: Vec<T>,
    pub epsilon: T,
    /// Weight of the old running statistic in each update.
    pub momentum: T,
}

/// Values saved by a training-mode forward pass.
#[derive(Clone, Debug)]
pub(crate) struct BatchNormCache<T> {
    pub normalized: Vec<T>,
    pub inv_std: Vec<T>,
}

impl<T: Scalar> BatchNorm<T> {
    pub fn new(features: usize) -> Result<Self> {
        if features == 0 {
            return Err(Error::Config("batch norm needs at least one feature".into()));
        }
        Ok(Self {
            features,
            scale: vec![T::ONE; features],
            shift: vec![T::ZERO; features],
            running_mean: vec![T::ZERO; features],
            running_var: vec![T::ONE; features],
            epsilon: T::from_f64(BATCH_NORM_EPSILON),
            momentum: T::from_f64(BATCH_NORM_MOMENTUM),
        })
    }

    pub(crate) fn forward_train(
        &mut self,
        x: &[T],
        batch: usize,
        y: &mut [T],
    ) -> Result<BatchNormCache<T>> {
        if batch < 2 {
            return Err(Error::BatchTooSmall(batch));
        }
        let f = self.features;
        let n = T::from_f64(batch as f64);
        let mut mean = vec![T::ZERO; f];
        for row in x.chunks_exact(f) {
            for (m, v) in mean.iter_mut().zip(row) {
                *m += *v;
            }
        }
        mean.iter_mut().for_each(|m| *m = *m / n);
        let mut var = vec![T::ZERO; f];
        for row in x.chunks_exact(f) {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                let d = *v - *m;
                *s += d * d;
            }
        }
        var.iter_mut().for_each(|v| *v = *v / n);
        let inv_std: Vec<T> = var
            .iter()
            .map(|v| T::ONE / (*v + self.epsilon).sqrt())
            .collect();

        let mut normalized = vec![T::ZERO; x.len()];
        for ((xr, nr), yr) in x
            .chunks_exact(f)
            .zip(normalized.chunks_exact_mut(f))
            .zip(y.chunks_exact_mut(f))
        {
            for j in 0..f {
                let h = (xr[j] - mean[j]) * inv_std[j];
                nr[j] = h;
                yr[j] = self.scale[j] * h + self.shift[j];
            }
        }

        let keep = self.momentum;
        let take = T::ONE - keep;
        let unbias = n / (n - T::ONE);
        for j in 0..f {
            self.running_mean[j] = keep * self.running_mean[j] + take * mean[j];
            self.running_var[j] = keep * self.running_var[j] + take * var[j] * unbias;
        }
        Ok(BatchNormCache {
            normalized,
            inv_std,
        })
    }

    pub(crate) fn forward_infer(&self, x: &[T], y: &mut [T]) {
        let f = self.features;
        let coef: Vec<T> = (0..f)
            .map(|j| self.scale[j] / (self.running_var[j] + self.epsilon).sqrt())
            .collect();
        for (xr, yr) in x.chunks_exact(f).zip(y.chunks_exact_mut(f)) {
            for j in 0..f {
                yr[j] = coef[j] * (xr[j] - self.running_mean[j]) + self.shift[j];
            }
        }
    }

    pub(crate) fn backward(
        &self,
        cache: &BatchNormCache<T>,
        dy: &[T],
        batch: usize,
        dscale: &mut [T],
        dshift: &mut [T],
        dx: Option<&mut [T]>,
    ) {
        let f = self.features;
        let mut sum_g = vec![T::ZERO; f];
        let mut sum_gh = vec![T::ZERO; f];
        for (gr, hr) in dy.chunks_exact(f).zip(cache.normalized.chunks_exact(f)) {
            for j in 0..f {
                sum_g[j] += gr[j];
                sum_gh[j] += gr[j] * hr[j];
            }
        }
        for j in 0..f {
            dshift[j] += sum_g[j];
            dscale[j] += sum_gh[j];
        }
        if let Some(dx) = dx {
            let n = T::from_f64(batch as f64);
            for ((gr, hr), dr) in dy
                .chunks_exact(f)
                .zip(cache.normalized.chunks_exact(f))
                .zip(dx.chunks_exact_mut(f))
            {
                for j in 0..f {
                    dr[j] = self.scale[j] * cache.inv_std[j] / n
                        * (n * gr[j] - sum_g[j] - hr[j] * sum_gh[j]);
                }
            }
        }
    }
}

pub(crate) fn relu_in_place<T: Scalar>(v: &mut [T]) {
    for x in v {
        // NaN maps to zero too
        if (*x).partial_cmp(&T::ZERO) != Some(std::cmp::Ordering::Greater) {
            *x = T::ZERO;
        }
    }
}

/// Masks `grad` where the ReLU output was zero.
pub(crate) fn relu_backward<T: Scalar>(output: &[T], grad: &mut [T]) {
    for (g, y) in grad.iter_mut().zip(output) {
        if y.partial_cmp(&T::ZERO) != Some(std::cmp::Ordering::Greater) {
            *g = T::ZERO;
        }
    }
}

fn fill_rows<T: Scalar>(y: &mut [T], row: &[T]) {
    for chunk in y.chunks_exact_mut(row.len()) {
        chunk.copy_from_slice(row);
    }
}

fn column_sums<T: Scalar>(m: &[T], cols: usize, acc: &mut [T]) {
    for row in m.chunks_exact(cols) {
        for (a, v) in acc.iter_mut().zip(row) {
            *a += *v;
        }
    }
}

fn shape_err(op: &'static str, expected: Vec<usize>, actual: &[usize]) -> Error {
    Error::Shape {
        op,
        expected,
        actual: actual.to_vec(),
    }
}

/// Single-sample convolution of a `[width x depth]` tensor.
pub fn conv1d_forward<T: Scalar>(input: &Tensor<T>, layer: &Conv1d<T>) -> Result<Tensor<T>> {
    let want = vec![layer.in_width, layer.in_depth];
    if input.shape() != want.as_slice() {
        return Err(shape_err("conv1d", want, input.shape()));
    }
    let mut out = vec![T::ZERO; layer.out_len()];
    layer.forward(input.data(), 1, &mut out);
    Tensor::new(vec![layer.out_width(), layer.out_depth], out)
}

/// Single-sample fully connected layer on a `[n]` tensor.
pub fn fc_forward<T: Scalar>(input: &Tensor<T>, layer: &Dense<T>) -> Result<Tensor<T>> {
    if input.shape() != [layer.inputs] {
        return Err(shape_err("fc", vec![layer.inputs], input.shape()));
    }
    let mut out = vec![T::ZERO; layer.outputs];
    layer.forward(input.data(), 1, &mut out);
    Tensor::new(vec![layer.outputs], out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

/// Normalizes a `[batch x features]` tensor. Training mode updates the
/// running statistics and needs at least two rows.
pub fn batch_norm_forward<T: Scalar>(
    input: &Tensor<T>,
    layer: &mut BatchNorm<T>,
    mode: Mode,
) -> Result<Tensor<T>> {
    let [batch, features] = *input.shape() else {
        return Err(shape_err("batch_norm", vec![0, layer.features], input.shape()));
    };
    if features != layer.features {
        return Err(shape_err("batch_norm", vec![batch, layer.features], input.shape()));
    }
    let mut out = vec![T::ZERO; input.len()];
    match mode {
        Mode::Train => {
            layer.forward_train(input.data(), batch, &mut out)?;
        }
        Mode::Infer => layer.forward_infer(input.data(), &mut out),
    }
    Tensor::new(input.shape().to_vec(), out)
}

pub fn relu<T: Scalar>(t: &Tensor<T>) -> Tensor<T> {
    let mut data = t.data().to_vec();
    relu_in_place(&mut data);
    Tensor::new(t.shape().to_vec(), data).expect("relu preserves shape and finiteness")
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn random(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    #[test]
    fn output_width_formula() {
        assert_eq!(conv_output_width(2048, 128, 128).unwrap(), 16);
        assert_eq!(conv_output_width(16, 2, 1).unwrap(), 15);
        assert!(conv_output_width(10, 3, 2).is_err());
        assert!(conv_output_width(2, 3, 1).is_err());
        assert!(conv_output_width(4, 2, 0).is_err());
    }

    #[test]
    fn conv_zero_input_gives_zero_output() {
        let conv = Conv1d::<f32>::new(2048, 1, 128, 128, 96).unwrap();
        let out = conv1d_forward(&Tensor::zeros(vec![2048, 1]), &conv).unwrap();
        assert_eq!(out.shape(), &[16, 96]);
        assert!(out.data().iter().all(|&v| v == 0.0));
    }

    /// Direct definition: out[j][d] = sum_k sum_c w[d][k][c] x[jS+k][c] + b[d].
    fn naive_conv(c: &Conv1d<f64>, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; c.out_len()];
        for j in 0..c.out_width() {
            for d in 0..c.out_depth {
                let mut acc = c.bias[d];
                for k in 0..c.kernel {
                    for ch in 0..c.in_depth {
                        acc += c.weight[d * c.kernel * c.in_depth + k * c.in_depth + ch]
                            * x[(j * c.stride + k) * c.in_depth + ch];
                    }
                }
                out[j * c.out_depth + d] = acc;
            }
        }
        out
    }

    #[test]
    fn conv_matches_direct_sum_for_strided_and_tiled_kernels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for &(w, depth, k, s, d) in &[(16, 3, 2, 1, 4), (12, 2, 4, 4, 3), (9, 1, 3, 2, 2)] {
            let mut c = Conv1d::<f64>::new(w, depth, k, s, d).unwrap();
            c.weight = random(&mut rng, c.weight.len());
            c.bias = random(&mut rng, d);
            let batch = 3;
            let x = random(&mut rng, batch * c.in_len());
            let mut y = vec![0.0; batch * c.out_len()];
            c.forward(&x, batch, &mut y);
            for b in 0..batch {
                let want = naive_conv(&c, &x[b * c.in_len()..(b + 1) * c.in_len()]);
                for (got, want) in y[b * c.out_len()..].iter().zip(&want) {
                    assert!((got - want).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn fc_identity_and_bias() {
        let mut fc = Dense::<f32>::new(3, 3).unwrap();
        fc.weight = vec![1., 0., 0., 0., 1., 0., 0., 0., 1.];
        let x = Tensor::new(vec![3], vec![1.5, -2.0, 3.0]).unwrap();
        assert_eq!(fc_forward(&x, &fc).unwrap().data(), x.data());

        let mut fc = Dense::<f32>::new(3, 2).unwrap();
        fc.bias = vec![0.25, -4.0];
        assert_eq!(fc_forward(&x, &fc).unwrap().data(), &[0.25, -4.0]);

        assert!(matches!(
            fc_forward(&Tensor::<f32>::zeros(vec![4]), &fc),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn fc_matches_dot_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut fc = Dense::<f64>::new(7, 5).unwrap();
        fc.weight = random(&mut rng, 35);
        fc.bias = random(&mut rng, 5);
        let x = random(&mut rng, 7);
        let y = fc_forward(&Tensor::new(vec![7], x.clone()).unwrap(), &fc).unwrap();
        for i in 0..5 {
            let want: f64 = fc.bias[i] + (0..7).map(|j| fc.weight[i * 7 + j] * x[j]).sum::<f64>();
            assert!((y.data()[i] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn batch_norm_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (b, f) = (64, 10);
        let x: Vec<f64> = (0..b * f).map(|_| rng.gen_range(-3.0..7.0)).collect();
        let mut bn = BatchNorm::<f64>::new(f).unwrap();
        let y = batch_norm_forward(&Tensor::new(vec![b, f], x).unwrap(), &mut bn, Mode::Train)
            .unwrap();
        for j in 0..f {
            let col: Vec<f64> = (0..b).map(|i| y.data()[i * f + j]).collect();
            let mean = col.iter().sum::<f64>() / b as f64;
            let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / b as f64;
            assert!(mean.abs() < 1e-5);
            assert!((var - 1.0).abs() < 1e-3);
        }
        // running stats moved away from their initial values
        assert!(bn.running_mean.iter().all(|m| *m != 0.0));
    }

    #[test]
    fn batch_norm_edge_cases() {
        let mut bn = BatchNorm::<f32>::new(2).unwrap();
        // Already standardized: output ~ input.
        let x = Tensor::new(vec![2, 2], vec![-1.0, 1.0, 1.0, -1.0]).unwrap();
        let y = batch_norm_forward(&x, &mut bn, Mode::Train).unwrap();
        for (a, b) in x.data().iter().zip(y.data()) {
            assert!((a - b).abs() < 1e-4);
        }
        // Constant feature normalizes to zero, then shift.
        bn.shift = vec![0.5, 0.5];
        let x = Tensor::new(vec![3, 2], vec![4.0, 1.0, 4.0, 2.0, 4.0, 3.0]).unwrap();
        let y = batch_norm_forward(&x, &mut bn, Mode::Train).unwrap();
        for i in 0..3 {
            assert!((y.data()[i * 2] - 0.5).abs() < 1e-6);
        }
        // A single row cannot be normalized in training mode.
        let one = Tensor::new(vec![1, 2], vec![1.0, 2.0]).unwrap();
        assert!(matches!(
            batch_norm_forward(&one, &mut bn, Mode::Train),
            Err(Error::BatchTooSmall(1))
        ));
        assert!(batch_norm_forward(&one, &mut bn, Mode::Infer).is_ok());
    }

    #[test]
    fn relu_cases() {
        let t = Tensor::new(vec![3], vec![-1.0f32, 0.0, 2.0]).unwrap();
        assert_eq!(relu(&t).data(), &[0.0, 0.0, 2.0]);
        let neg = Tensor::new(vec![2], vec![-1.0f32, -5.0]).unwrap();
        assert_eq!(relu(&neg).data(), &[0.0, 0.0]);
        let pos = Tensor::new(vec![2], vec![1.0f32, 5.0]).unwrap();
        assert_eq!(relu(&pos).data(), pos.data());
    }
}
