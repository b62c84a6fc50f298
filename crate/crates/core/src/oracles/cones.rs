use std::collections::HashMap;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::netcore::{ActivationSpec, NetParams};
use crate::norms::pesv_norm;
use crate::{Error, Result};

fn require_relu(act: &ActivationSpec) -> Result<()> {
    if act.is_relu() {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "cone analysis needs relu, got '{}'",
            act.name()
        )))
    }
}

fn sign(v: f64) -> i8 {
    if v > 0.0 {
        1
    } else if v < 0.0 {
        -1
    } else {
        0
    }
}

/// Preactivations of every hidden layer on `x` (rows include the bias).
fn preactivations(params: &NetParams, act: &ActivationSpec, x: ArrayView2<'_, f64>) -> Result<Vec<Array2<f64>>> {
    if x.ncols() != params.input_dim() + 1 {
        return Err(Error::Shape(format!(
            "inputs have {} columns, expected {}",
            x.ncols(),
            params.input_dim() + 1
        )));
    }
    let hidden = params.depth() - 1;
    let mut out: Vec<Array2<f64>> = Vec::with_capacity(hidden);
    let mut h = x.to_owned();
    for w in &params.layers()[..hidden] {
        let z = h.dot(&w.t());
        h = z.mapv(|v| act.eval(v));
        out.push(z);
    }
    Ok(out)
}

/// Signed downstream products `a^L w^{L-1} ... w^{l+2}` for every hidden
/// layer `l`.
fn downstream(params: &NetParams) -> Vec<Array1<f64>> {
    let layers = params.layers();
    let hidden = layers.len() - 1;
    let mut out = vec![Array1::zeros(0); hidden];
    let mut v = params.output_weights().to_owned();
    for l in (0..hidden).rev() {
        out[l] = v.clone();
        if l > 0 {
            v = v.dot(&layers[l]);
        }
    }
    out
}

/// Absolute downstream path mass for every hidden layer.
fn downstream_abs(params: &NetParams) -> Vec<Array1<f64>> {
    let layers = params.layers();
    let hidden = layers.len() - 1;
    let mut out = vec![Array1::zeros(0); hidden];
    let mut v = params.output_weights().mapv(f64::abs);
    for l in (0..hidden).rev() {
        out[l] = v.clone();
        if l > 0 {
            v = v.dot(&layers[l].mapv(f64::abs));
        }
    }
    out
}

/// Group labels per hidden layer: neurons share a label when their
/// preactivation signs agree on every row of `x` and their signed
/// downstream products have the same sign. Labels count up in order of
/// first appearance.
pub fn sign_pattern_groups(
    params: &NetParams,
    act: &ActivationSpec,
    x: ArrayView2<'_, f64>,
) -> Result<Vec<Vec<usize>>> {
    require_relu(act)?;
    let pre = preactivations(params, act, x)?;
    let down = downstream(params);
    Ok(pre
        .iter()
        .zip(down.iter())
        .map(|(z, s)| {
            let mut seen: HashMap<Vec<i8>, usize> = HashMap::new();
            (0..z.ncols())
                .map(|j| {
                    let mut key: Vec<i8> = z.column(j).iter().map(|&v| sign(v)).collect();
                    key.push(sign(s[j]));
                    let next = seen.len();
                    *seen.entry(key).or_insert(next)
                })
                .collect()
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollinearityOptions {
    /// Neurons with some `|preactivation|` at or below this are on a cone
    /// boundary and excluded.
    pub boundary_tol: f64,
    /// Neurons whose path mass is at most this fraction of `ν(θ)` are
    /// inactive and excluded.
    pub mass_tol: f64,
}

impl Default for CollinearityOptions {
    fn default() -> Self {
        Self {
            boundary_tol: 1e-6,
            mass_tol: 1e-4,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupCosine {
    pub label: usize,
    pub members: Vec<usize>,
    pub min_abs_cosine: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollinearityReport {
    pub groups: Vec<GroupCosine>,
    pub global_min: f64,
    pub excluded_boundary: Vec<usize>,
    pub excluded_inactive: Vec<usize>,
}

fn abs_cosine(a: ndarray::ArrayView1<'_, f64>, b: ndarray::ArrayView1<'_, f64>) -> f64 {
    let (na, nb) = (a.dot(&a), b.dot(&b));
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (a.dot(&b).abs() / (na * nb).sqrt()).min(1.0)
}

/// Smallest pairwise `|cos|` between first-layer rows (bias included)
/// within each first-layer cone group, after dropping boundary and
/// inactive neurons. Singleton groups report 1.
pub fn collinearity_report(
    params: &NetParams,
    act: &ActivationSpec,
    x: ArrayView2<'_, f64>,
    opts: &CollinearityOptions,
) -> Result<CollinearityReport> {
    let labels = sign_pattern_groups(params, act, x)?.swap_remove(0);
    let z = preactivations(params, act, x)?.swap_remove(0);
    let w1 = params.first_layer();
    let back = downstream_abs(params).swap_remove(0);
    let nu = pesv_norm(params);
    let mut excluded_boundary = Vec::new();
    let mut excluded_inactive = Vec::new();
    let mut members: Vec<(usize, Vec<usize>)> = Vec::new();
    for j in 0..labels.len() {
        let mass = w1.row(j).dot(&w1.row(j)).sqrt() * back[j];
        if mass <= opts.mass_tol * nu {
            excluded_inactive.push(j);
            continue;
        }
        if z.column(j).iter().any(|v| v.abs() <= opts.boundary_tol) {
            excluded_boundary.push(j);
            continue;
        }
        match members.iter_mut().find(|(l, _)| *l == labels[j]) {
            Some((_, m)) => m.push(j),
            None => members.push((labels[j], vec![j])),
        }
    }
    let groups: Vec<GroupCosine> = members
        .into_iter()
        .map(|(label, m)| {
            let mut min = 1.0f64;
            for (a, &i) in m.iter().enumerate() {
                for &k in &m[a + 1..] {
                    min = min.min(abs_cosine(w1.row(i), w1.row(k)));
                }
            }
            GroupCosine {
                label,
                members: m,
                min_abs_cosine: min,
            }
        })
        .collect();
    let global_min = groups.iter().map(|g| g.min_abs_cosine).fold(1.0, f64::min);
    Ok(CollinearityReport {
        groups,
        global_min,
        excluded_boundary,
        excluded_inactive,
    })
}
