//! Fully connected ReLU networks over a flat parameter vector.
//!
//! Layer `l` maps `layer_sizes[l]` inputs to `layer_sizes[l + 1]` outputs. Its
//! weights are stored input-major (`w[i * out + j]` connects input `i` to
//! output `j`) and are followed by the `out` biases. Batched inputs and outputs
//! are row-major `batch x dim` slices.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{dim_mismatch, Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Identity,
    Tanh,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MlpShape {
    layer_sizes: Vec<usize>,
    output: OutputActivation,
}

/// Location of one layer inside [`ParamSet::flat`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerView {
    pub rows: usize,
    pub cols: usize,
    pub offset: usize,
}

impl LayerView {
    pub fn weights(&self) -> std::ops::Range<usize> {
        self.offset..self.offset + self.rows * self.cols
    }

    pub fn biases(&self) -> std::ops::Range<usize> {
        let start = self.offset + self.rows * self.cols;
        start..start + self.cols
    }

    pub fn len(&self) -> usize {
        (self.rows + 1) * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl MlpShape {
    pub fn new(layer_sizes: Vec<usize>, output: OutputActivation) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::Config(format!(
                "an MLP needs at least 2 layer sizes, got {layer_sizes:?}"
            )));
        }
        if layer_sizes.contains(&0) {
            return Err(Error::Config(format!("layer sizes must be positive, got {layer_sizes:?}")));
        }
        Ok(Self { layer_sizes, output })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn output(&self) -> OutputActivation {
        self.output
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn num_layers(&self) -> usize {
        self.layer_sizes.len() - 1
    }

    pub fn views(&self) -> Vec<LayerView> {
        let mut offset = 0;
        self.layer_sizes
            .windows(2)
            .map(|w| {
                let view = LayerView { rows: w[0], cols: w[1], offset };
                offset += view.len();
                view
            })
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet<T> {
    pub flat: Vec<T>,
    views: Vec<LayerView>,
}

impl<T: Real> ParamSet<T> {
    pub fn zeros(shape: &MlpShape) -> Self {
        Self { flat: vec![T::zero(); shape.num_params()], views: shape.views() }
    }

    pub fn from_flat(shape: &MlpShape, flat: Vec<T>) -> Result<Self> {
        if flat.len() != shape.num_params() {
            return Err(dim_mismatch("parameter vector", shape.num_params(), flat.len()));
        }
        Ok(Self { flat, views: shape.views() })
    }

    pub fn views(&self) -> &[LayerView] {
        &self.views
    }

    pub fn len(&self) -> usize {
        self.flat.len()
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }
}

/// Uniform fan-in initialization: weights in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, zero biases.
pub fn init_mlp<T: Real>(shape: &MlpShape, seed: u64) -> ParamSet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = ParamSet::zeros(shape);
    for view in shape.views() {
        let bound = 1.0 / (view.rows as f64).sqrt();
        let dist = Uniform::new_inclusive(-bound, bound).expect("finite bound");
        for w in &mut params.flat[view.weights()] {
            *w = T::of(dist.sample(&mut rng));
        }
    }
    params
}

/// Post-activation values of every layer for one batch, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct Trace<T> {
    batch: usize,
    activations: Vec<Vec<T>>,
}

impl<T: Real> Trace<T> {
    pub fn batch(&self) -> usize {
        self.batch
    }

    pub fn input(&self) -> &[T] {
        &self.activations[0]
    }

    pub fn output(&self) -> &[T] {
        self.activations.last().unwrap()
    }
}

fn check_params<T: Real>(params: &ParamSet<T>, shape: &MlpShape) -> Result<()> {
    if params.len() != shape.num_params() {
        return Err(dim_mismatch("parameter vector", shape.num_params(), params.len()));
    }
    Ok(())
}

/// Forward pass over a row-major batch of inputs.
pub fn forward_batch<T: Real>(
    params: &ParamSet<T>,
    shape: &MlpShape,
    inputs: &[T],
    batch: usize,
) -> Result<Trace<T>> {
    check_params(params, shape)?;
    if inputs.len() != batch * shape.input_dim() {
        return Err(dim_mismatch("network input", batch * shape.input_dim(), inputs.len()));
    }
    let views = shape.views();
    let last = views.len() - 1;
    let mut activations = Vec::with_capacity(views.len() + 1);
    activations.push(inputs.to_vec());
    for (l, view) in views.iter().enumerate() {
        let w = &params.flat[view.weights()];
        let bias = &params.flat[view.biases()];
        let input = &activations[l];
        let mut out = Vec::with_capacity(batch * view.cols);
        for row in input.chunks_exact(view.rows) {
            let start = out.len();
            out.extend_from_slice(bias);
            let acc = &mut out[start..];
            for (i, &x) in row.iter().enumerate() {
                if x == T::zero() {
                    continue;
                }
                let w_row = &w[i * view.cols..(i + 1) * view.cols];
                for (a, &wij) in acc.iter_mut().zip(w_row) {
                    *a += x * wij;
                }
            }
        }
        if l < last {
            for v in &mut out {
                if *v < T::zero() {
                    *v = T::zero();
                }
            }
        } else if shape.output() == OutputActivation::Tanh {
            for v in &mut out {
                *v = v.tanh();
            }
        }
        activations.push(out);
    }
    Ok(Trace { batch, activations })
}

/// Reverse pass for the scalar `sum_b <output_b, output_grad_b>`.
///
/// Parameter gradients, when requested, are accumulated into `param_grads`
/// (summed over the batch). Returns the input gradient when `want_input_grad`
/// is set.
pub fn backward_batch<T: Real>(
    params: &ParamSet<T>,
    shape: &MlpShape,
    trace: &Trace<T>,
    output_grad: &[T],
    mut param_grads: Option<&mut [T]>,
    want_input_grad: bool,
) -> Result<Option<Vec<T>>> {
    check_params(params, shape)?;
    let batch = trace.batch;
    if output_grad.len() != batch * shape.output_dim() {
        return Err(dim_mismatch("output gradient", batch * shape.output_dim(), output_grad.len()));
    }
    if let Some(g) = param_grads.as_deref() {
        if g.len() != params.len() {
            return Err(dim_mismatch("parameter gradient", params.len(), g.len()));
        }
    }
    let views = shape.views();
    let last = views.len() - 1;

    let mut delta = output_grad.to_vec();
    if shape.output() == OutputActivation::Tanh {
        for (d, &y) in delta.iter_mut().zip(trace.output()) {
            *d *= T::one() - y * y;
        }
    }

    for l in (0..=last).rev() {
        let view = views[l];
        let input = &trace.activations[l];
        let w = &params.flat[view.weights()];

        if let Some(param_grads) = param_grads.as_deref_mut() {
            let (gw, gb) = param_grads[view.offset..view.offset + view.len()]
                .split_at_mut(view.rows * view.cols);
            for (x_row, d_row) in input.chunks_exact(view.rows).zip(delta.chunks_exact(view.cols)) {
                for (g, &d) in gb.iter_mut().zip(d_row) {
                    *g += d;
                }
                for (i, &x) in x_row.iter().enumerate() {
                    if x == T::zero() {
                        continue;
                    }
                    let g_row = &mut gw[i * view.cols..(i + 1) * view.cols];
                    for (g, &d) in g_row.iter_mut().zip(d_row) {
                        *g += x * d;
                    }
                }
            }
        }

        if l == 0 && !want_input_grad {
            return Ok(None);
        }

        let mut prev = vec![T::zero(); batch * view.rows];
        for (p_row, d_row) in prev.chunks_exact_mut(view.rows).zip(delta.chunks_exact(view.cols)) {
            for (i, p) in p_row.iter_mut().enumerate() {
                let w_row = &w[i * view.cols..(i + 1) * view.cols];
                *p = w_row.iter().zip(d_row).map(|(&a, &b)| a * b).sum();
            }
        }
        if l == 0 {
            return Ok(Some(prev));
        }
        // ReLU derivative from the stored post-activation.
        for (p, &a) in prev.iter_mut().zip(input) {
            if a <= T::zero() {
                *p = T::zero();
            }
        }
        delta = prev;
    }
    unreachable!("loop returns at layer 0")
}

/// Single-input forward pass.
pub fn forward<T: Real>(params: &ParamSet<T>, shape: &MlpShape, input: &[T]) -> Result<Vec<T>> {
    let mut trace = forward_batch(params, shape, input, 1)?;
    Ok(trace.activations.pop().expect("at least one layer"))
}

/// Single-input backward pass: gradients of `<output, output_grad>` with respect
/// to the parameters and the input.
pub fn backward<T: Real>(
    params: &ParamSet<T>,
    shape: &MlpShape,
    input: &[T],
    output_grad: &[T],
) -> Result<(Vec<T>, Vec<T>)> {
    let trace = forward_batch(params, shape, input, 1)?;
    let mut grads = vec![T::zero(); params.len()];
    let input_grad = backward_batch(params, shape, &trace, output_grad, Some(&mut grads), true)?
        .expect("input gradient requested");
    Ok((grads, input_grad))
}

/// A network shape bundled with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp<T> {
    pub shape: MlpShape,
    pub params: ParamSet<T>,
}

impl<T: Real> Mlp<T> {
    pub fn new(shape: MlpShape, seed: u64) -> Self {
        let params = init_mlp(&shape, seed);
        Self { shape, params }
    }

    pub fn forward_batch(&self, inputs: &[T], batch: usize) -> Result<Trace<T>> {
        forward_batch(&self.params, &self.shape, inputs, batch)
    }

    pub fn backward_batch(
        &self,
        trace: &Trace<T>,
        output_grad: &[T],
        param_grads: Option<&mut [T]>,
        want_input_grad: bool,
    ) -> Result<Option<Vec<T>>> {
        backward_batch(&self.params, &self.shape, trace, output_grad, param_grads, want_input_grad)
    }

    pub fn forward(&self, input: &[T]) -> Result<Vec<T>> {
        forward(&self.params, &self.shape, input)
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }
}
