//! Function-preserving rewrites of a network into the bias-free,
//! `σ(0) = 0` form the norms and bounds are stated for.

use ndarray::{s, Array1, Array2, ArrayView2};

use super::{ActivationSpec, NetParams};
use crate::{Error, Result};

/// A conventional network with explicit per-layer biases, acting on raw
/// `d`-dimensional inputs:
/// `f(x) = a · σ(W_{L-1} σ(... σ(W_1 x + b_1) ...) + b_{L-1}) + c`.
#[derive(Clone, Debug, PartialEq)]
pub struct StandardNet {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub output: Array1<f64>,
    pub output_bias: f64,
}

impl StandardNet {
    pub fn input_dim(&self) -> usize {
        self.weights[0].ncols()
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.biases.len() {
            return Err(Error::Shape("one bias vector per hidden layer is required".into()));
        }
        let mut cols = self.weights[0].ncols();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            if w.ncols() != cols || b.len() != w.nrows() {
                return Err(Error::Shape(format!("hidden layer {} has inconsistent shape", l + 1)));
            }
            cols = w.nrows();
        }
        if self.output.len() != cols {
            return Err(Error::Shape("output weights do not match last hidden width".into()));
        }
        Ok(())
    }

    /// Evaluate on raw inputs (shape `n × d`).
    pub fn forward(&self, act: &ActivationSpec, raw: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        self.validate()?;
        if raw.ncols() != self.input_dim() {
            return Err(Error::Shape(format!(
                "inputs have {} columns, expected {}",
                raw.ncols(),
                self.input_dim()
            )));
        }
        let mut h = raw.to_owned();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            h = (h.dot(&w.t()) + b).mapv(|v| act.eval(v));
        }
        Ok(h.dot(&self.output) + self.output_bias)
    }
}

/// Preactivation `t` with `σ(t) ≠ 0`, preferring `t = 1`.
fn nonzero_point(act: &ActivationSpec) -> Result<(f64, f64)> {
    [1.0, -1.0, 2.0, -2.0, 0.5, -0.5, 4.0, -4.0]
        .into_iter()
        .map(|t| (t, act.eval(t)))
        .find(|(_, v)| *v != 0.0 && v.is_finite())
        .ok_or_else(|| Error::Unsupported("activation vanishes on every probe point".into()))
}

/// Rewrite a network with biases as a bias-free network over `x̃ = (x, 1)`.
///
/// Each hidden layer gains one pass-through unit with constant value
/// `s = σ(t)`; the next layer reads its bias through that unit with weight
/// `b / s`. The output bias becomes the output weight of the last
/// pass-through unit. Widths grow by one in every hidden layer.
pub fn absorb_bias(net: &StandardNet, act: &ActivationSpec) -> Result<NetParams> {
    net.validate()?;
    let (t, s) = nonzero_point(act)?;
    let d = net.input_dim();
    let mut layers = Vec::with_capacity(net.weights.len() + 1);
    for (l, (w, b)) in net.weights.iter().zip(&net.biases).enumerate() {
        let (rows, cols) = w.dim();
        let mut out = Array2::zeros((rows + 1, cols + 1));
        out.slice_mut(s![..rows, ..cols]).assign(w);
        if l == 0 {
            // bias column reads the constant input coordinate directly
            out.slice_mut(s![..rows, cols]).assign(b);
            out[[rows, cols]] = t;
        } else {
            out.slice_mut(s![..rows, cols]).assign(&(b / s));
            out[[rows, cols]] = t / s;
        }
        layers.push(out);
    }
    let m = net.output.len();
    let mut a = Array2::zeros((1, m + 1));
    a.slice_mut(s![0, ..m]).assign(&net.output);
    a[[0, m]] = net.output_bias / s;
    layers.push(a);
    debug_assert_eq!(layers[0].ncols(), d + 1);
    NetParams::new(d, layers)
}

/// Rewrite a network whose activation has `σ(0) ≠ 0` into one using
/// `σ* = σ - σ(0)`.
///
/// Every hidden layer gains one unit holding a constant `k = σ*(t)`; the
/// next layer absorbs the offset `σ(0)` through that unit with weights
/// `σ(0) (W·1) / k`. Networks with `σ(0) = 0` are returned unchanged.
pub fn normalize_activation(params: &NetParams, act: &ActivationSpec) -> Result<(NetParams, ActivationSpec)> {
    let s0 = act.value_at_zero();
    if s0 == 0.0 {
        return Ok((params.clone(), act.clone()));
    }
    let star = act.clone().with_offset(act.offset - s0);
    let (t, k) = nonzero_point(&star)?;
    let src = params.layers();
    let mut layers = Vec::with_capacity(src.len());

    let w1 = &src[0];
    let (m1, cols) = w1.dim();
    let mut first = Array2::zeros((m1 + 1, cols));
    first.slice_mut(s![..m1, ..]).assign(w1);
    first[[m1, cols - 1]] = t;
    layers.push(first);

    let last = src.len() - 1;
    for (l, w) in src.iter().enumerate().skip(1) {
        let (rows, cols) = w.dim();
        let extra_row = usize::from(l != last);
        let mut out = Array2::zeros((rows + extra_row, cols + 1));
        out.slice_mut(s![..rows, ..cols]).assign(w);
        let row_sums = w.sum_axis(ndarray::Axis(1));
        out.slice_mut(s![..rows, cols]).assign(&(row_sums * (s0 / k)));
        if l != last {
            out[[rows, cols]] = t / k;
        }
        layers.push(out);
    }
    Ok((NetParams::new(params.input_dim(), layers)?, star))
}
