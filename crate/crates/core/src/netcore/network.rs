use ndarray::{concatenate, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;

use super::{ActivationSpec, WidthVector};
use crate::{Error, Result};

/// Weights `θ = (a^L, w^{L-1}, ..., w^1)` of a finite L-layer network.
///
/// `layers[0]` is `w^1` with shape `m_1 × (d+1)`, `layers[l]` is `w^{l+1}`
/// with shape `m_{l+1} × m_l`, and the last entry is the output row `a^L`
/// with shape `1 × m_{L-1}`. The same type doubles as a gradient container.
#[derive(Clone, Debug, PartialEq)]
pub struct NetParams {
    input_dim: usize,
    layers: Vec<Array2<f64>>,
}

impl NetParams {
    pub fn new(input_dim: usize, layers: Vec<Array2<f64>>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::Shape("input dimension must be at least 1".into()));
        }
        if layers.len() < 2 {
            return Err(Error::Shape(format!("depth {} < 2", layers.len())));
        }
        let mut cols = input_dim + 1;
        for (i, w) in layers.iter().enumerate() {
            if w.ncols() != cols {
                return Err(Error::Shape(format!(
                    "layer {} has {} columns, expected {cols}",
                    i + 1,
                    w.ncols()
                )));
            }
            if w.nrows() == 0 {
                return Err(Error::Shape(format!("layer {} has no rows", i + 1)));
            }
            if w.iter().any(|v| !v.is_finite()) {
                return Err(Error::Domain(format!("layer {} has non-finite weights", i + 1)));
            }
            cols = w.nrows();
        }
        if cols != 1 {
            return Err(Error::Shape(format!("output layer has {cols} rows, expected 1")));
        }
        Ok(Self { input_dim, layers })
    }

    pub fn zeros(input_dim: usize, widths: &WidthVector) -> Self {
        let mut layers = Vec::with_capacity(widths.depth());
        let mut cols = input_dim + 1;
        for &m in widths.as_slice() {
            layers.push(Array2::zeros((m, cols)));
            cols = m;
        }
        layers.push(Array2::zeros((1, cols)));
        Self { input_dim, layers }
    }

    /// iid `uniform(-s, s)` weights with `s = 1/sqrt(fan_in)` per layer.
    pub fn random_uniform<R: Rng + ?Sized>(input_dim: usize, widths: &WidthVector, rng: &mut R) -> Self {
        let mut p = Self::zeros(input_dim, widths);
        for w in &mut p.layers {
            let s = 1.0 / (w.ncols() as f64).sqrt();
            w.mapv_inplace(|_| rng.random_range(-s..s));
        }
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self {
            input_dim: self.input_dim,
            layers: self.layers.iter().map(|w| Array2::zeros(w.raw_dim())).collect(),
        }
    }

    /// Depth `L`.
    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    /// Raw input dimension `d` (inputs carry `d + 1` coordinates).
    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn widths(&self) -> WidthVector {
        WidthVector::new(self.layers[..self.layers.len() - 1].iter().map(|w| w.nrows()).collect())
            .expect("validated on construction")
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    /// Mutable access to the weights. Callers must keep shapes intact.
    pub fn layers_mut(&mut self) -> &mut [Array2<f64>] {
        &mut self.layers
    }

    pub fn first_layer(&self) -> &Array2<f64> {
        &self.layers[0]
    }

    /// `a^L` as a vector of length `m_{L-1}`.
    pub fn output_weights(&self) -> ArrayView1<'_, f64> {
        self.layers[self.layers.len() - 1].row(0)
    }

    pub fn num_weights(&self) -> usize {
        self.layers.iter().map(|w| w.len()).sum()
    }

    pub fn iter_weights(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|w| w.iter())
    }

    pub fn is_finite(&self) -> bool {
        self.iter_weights().all(|v| v.is_finite())
    }

    /// `self += alpha * other`.
    pub fn add_scaled(&mut self, other: &NetParams, alpha: f64) {
        for (w, g) in self.layers.iter_mut().zip(&other.layers) {
            w.scaled_add(alpha, g);
        }
    }

    pub fn scale(&mut self, c: f64) {
        for w in &mut self.layers {
            *w *= c;
        }
    }

    pub fn dot(&self, other: &NetParams) -> f64 {
        self.layers.iter().zip(&other.layers).map(|(a, b)| (a * b).sum()).sum()
    }

    /// Sum of squares of all weights.
    pub fn norm_sq(&self) -> f64 {
        self.iter_weights().map(|v| v * v).sum()
    }

    pub fn max_abs_diff(&self, other: &NetParams) -> f64 {
        self.iter_weights()
            .zip(other.iter_weights())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// Append a column of ones to raw inputs, `x ↦ (x, 1)`.
pub fn with_bias_column(raw: ArrayView2<'_, f64>) -> Array2<f64> {
    concatenate![Axis(1), raw, Array2::ones((raw.nrows(), 1))]
}

fn check_inputs(params: &NetParams, inputs: &ArrayView2<'_, f64>) -> Result<()> {
    if inputs.ncols() != params.input_dim + 1 {
        return Err(Error::Shape(format!(
            "inputs have {} columns, network expects {} (d + 1)",
            inputs.ncols(),
            params.input_dim + 1
        )));
    }
    Ok(())
}

/// Per-layer preactivations `z_l` and activations `h_l` for a batch.
struct Trace {
    pre: Vec<Array2<f64>>,
    post: Vec<Array2<f64>>,
}

fn run(params: &NetParams, act: &ActivationSpec, inputs: ArrayView2<'_, f64>) -> (Trace, Array1<f64>) {
    let hidden = params.depth() - 1;
    let mut pre = Vec::with_capacity(hidden);
    let mut post: Vec<Array2<f64>> = Vec::with_capacity(hidden);
    for w in &params.layers[..hidden] {
        let z = match post.last() {
            Some(h) => h.dot(&w.t()),
            None => inputs.dot(&w.t()),
        };
        let h = z.mapv(|v| act.eval(v));
        pre.push(z);
        post.push(h);
    }
    let out = post.last().expect("depth >= 2").dot(&params.output_weights());
    (Trace { pre, post }, out)
}

/// `f(x̃_i; θ)` for every row of `inputs` (shape `n × (d+1)`).
pub fn forward(params: &NetParams, act: &ActivationSpec, inputs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
    check_inputs(params, &inputs)?;
    Ok(run(params, act, inputs).1)
}

/// Gradient of `Σ_i upstream_i · f(x̃_i; θ)` with respect to every weight.
pub fn backprop(
    params: &NetParams,
    act: &ActivationSpec,
    inputs: ArrayView2<'_, f64>,
    upstream: ArrayView1<'_, f64>,
) -> Result<NetParams> {
    let up = upstream.to_owned();
    forward_backward(params, act, inputs, |_| up).map(|(_, g)| g)
}

/// Forward pass followed by a backward pass whose upstream weights are
/// computed from the outputs. Returns the outputs and the gradient of
/// `Σ_i upstream_i · f(x̃_i; θ)`.
pub fn forward_backward(
    params: &NetParams,
    act: &ActivationSpec,
    inputs: ArrayView2<'_, f64>,
    upstream: impl FnOnce(&Array1<f64>) -> Array1<f64>,
) -> Result<(Array1<f64>, NetParams)> {
    check_inputs(params, &inputs)?;
    if !act.is_differentiable() {
        return Err(Error::Unsupported(format!(
            "activation '{}' exposes no derivative",
            act.name()
        )));
    }
    let (trace, out) = run(params, act, inputs);
    let upstream = upstream(&out);
    if upstream.len() != inputs.nrows() {
        return Err(Error::Shape(format!(
            "{} upstream values for {} inputs",
            upstream.len(),
            inputs.nrows()
        )));
    }
    let hidden = params.depth() - 1;
    let mut grads: Vec<Array2<f64>> = Vec::with_capacity(params.depth());

    let last_h = &trace.post[hidden - 1];
    grads.push(upstream.dot(last_h).insert_axis(Axis(0)));

    // delta for the last hidden layer: upstream ⊗ a ⊙ σ'(z)
    let a = params.output_weights();
    let mut delta = Array2::from_shape_fn(last_h.raw_dim(), |(i, j)| upstream[i] * a[j]);
    for l in (0..hidden).rev() {
        let d_act = trace.pre[l].mapv(|v| act.derivative(v).expect("checked above"));
        delta *= &d_act;
        let below = if l == 0 { inputs } else { trace.post[l - 1].view() };
        grads.push(delta.t().dot(&below));
        if l > 0 {
            delta = delta.dot(&params.layers[l]);
        }
    }
    grads.reverse();
    Ok((
        out,
        NetParams {
            input_dim: params.input_dim,
            layers: grads,
        },
    ))
}
