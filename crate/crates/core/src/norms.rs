//! Regularizers over network weights and the rescalings that leave
//! network outputs unchanged.
//!
//! The PeSV norm `ν(θ)` sums, over every input-to-output path, the absolute
//! product of the weights along the path, with the first-layer factor
//! replaced by the ℓ2 norm of the whole first-layer row (bias included).
//! It is evaluated as the nonnegative chain `|a^L| |w^{L-1}| ... |w^2| v`
//! where `v_k = ‖w^1_k‖_2`.

use ndarray::{Array1, Array2, Axis};

use crate::netcore::{ActivationSpec, NetParams};
use crate::{Error, Result};

fn row_norms(w: &Array2<f64>) -> Array1<f64> {
    w.map_axis(Axis(1), |r| r.dot(&r).sqrt())
}

fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Forward chain values `v_1 = ‖w^1_k‖`, `v_l = |w^l| v_{l-1}` for every
/// hidden layer.
fn path_mass_forward(params: &NetParams) -> Vec<Array1<f64>> {
    let layers = params.layers();
    let hidden = layers.len() - 1;
    let mut out = Vec::with_capacity(hidden);
    out.push(row_norms(&layers[0]));
    for w in &layers[1..hidden] {
        let prev = out.last().expect("nonempty");
        out.push(w.mapv(f64::abs).dot(prev));
    }
    out
}

/// PeSV norm `ν(θ)`.
pub fn pesv_norm(params: &NetParams) -> f64 {
    let v = path_mass_forward(params);
    params.output_weights().mapv(f64::abs).dot(v.last().expect("nonempty"))
}

/// `Σ_k |W_k| ‖w^1_k‖` with `W = a^L w^{L-1} ... w^2` the signed product.
/// Never exceeds [`pesv_norm`]; differs from it when path signs cancel.
pub fn pesv_matrixproduct_variant(params: &NetParams) -> f64 {
    let layers = params.layers();
    let hidden = layers.len() - 1;
    let mut prod = params.output_weights().to_owned();
    for w in layers[1..hidden].iter().rev() {
        prod = prod.dot(w);
    }
    prod.mapv(f64::abs).dot(&row_norms(&layers[0]))
}

/// A subgradient of [`pesv_norm`]. Components at zero weights, and whole
/// first-layer rows with zero norm, are set to 0.
pub fn pesv_subgradient(params: &NetParams) -> NetParams {
    let layers = params.layers();
    let hidden = layers.len() - 1;
    let fwd = path_mass_forward(params);
    let abs: Vec<Array2<f64>> = layers.iter().map(|w| w.mapv(f64::abs)).collect();
    let mut grad = params.zeros_like();

    // back_l: total downstream absolute mass reaching each unit of hidden layer l
    let mut back = abs[hidden].row(0).to_owned();
    {
        let a = params.output_weights();
        let g = &mut grad.layers_mut()[hidden];
        for (j, (&aj, &fj)) in a.iter().zip(fwd[hidden - 1].iter()).enumerate() {
            g[[0, j]] = sign(aj) * fj;
        }
    }
    for l in (1..hidden).rev() {
        let w = &layers[l];
        let g = &mut grad.layers_mut()[l];
        for ((i, j), gv) in g.indexed_iter_mut() {
            *gv = sign(w[[i, j]]) * back[i] * fwd[l - 1][j];
        }
        back = abs[l].t().dot(&back);
    }
    let w1 = &layers[0];
    let norms = &fwd[0];
    let g = &mut grad.layers_mut()[0];
    for (k, mut row) in g.rows_mut().into_iter().enumerate() {
        if norms[k] > 0.0 {
            let c = back[k] / norms[k];
            row.assign(&w1.row(k).mapv(|v| v * c));
        }
    }
    grad
}

/// `‖θ‖_2^2`, the sum of squares of every weight.
pub fn weight_decay_norm(params: &NetParams) -> f64 {
    params.norm_sq()
}

pub fn weight_decay_gradient(params: &NetParams) -> NetParams {
    let mut g = params.clone();
    g.scale(2.0);
    g
}

fn lp_norm(row: ndarray::ArrayView1<'_, f64>, p: f64) -> f64 {
    if p == 1.0 {
        row.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        row.dot(&row).sqrt()
    } else {
        row.iter().map(|v| v.abs().powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn check_exponents(p: f64, q: f64) -> Result<()> {
    if !(p >= 1.0 && p.is_finite() && q >= 1.0 && q.is_finite()) {
        return Err(Error::Domain(format!(
            "mixed max norm needs p, q in [1, ∞), got p={p}, q={q}"
        )));
    }
    Ok(())
}

/// Location of the unit attaining the maximum in [`mixed_max_norm`].
fn mixed_max_argmax(params: &NetParams, p: f64, q: f64) -> (f64, usize, usize) {
    let mut best = (0.0, 0, 0);
    for (l, w) in params.layers().iter().enumerate() {
        let exp = if l == 0 { q } else { p };
        for (i, row) in w.rows().into_iter().enumerate() {
            let v = lp_norm(row, exp);
            if v > best.0 {
                best = (v, l, i);
            }
        }
    }
    best
}

/// Mixed per-unit max norm `μ_{p,q,∞}`: the largest ℓp norm of the incoming
/// weights of any unit above the first layer (the output unit included),
/// joined by max with the largest ℓq norm of a first-layer row.
pub fn mixed_max_norm(params: &NetParams, p: f64, q: f64) -> Result<f64> {
    check_exponents(p, q)?;
    Ok(mixed_max_argmax(params, p, q).0)
}

/// A subgradient of [`mixed_max_norm`]: the gradient of the norm of the
/// first maximizing row, zero elsewhere and zero at the origin.
pub fn mixed_max_subgradient(params: &NetParams, p: f64, q: f64) -> Result<NetParams> {
    check_exponents(p, q)?;
    let (v, l, i) = mixed_max_argmax(params, p, q);
    let mut g = params.zeros_like();
    if v == 0.0 {
        return Ok(g);
    }
    let exp = if l == 0 { q } else { p };
    let row = params.layers()[l].row(i);
    let mut grow = g.layers_mut()[l].row_mut(i);
    for (gv, &w) in grow.iter_mut().zip(row.iter()) {
        *gv = if exp == 1.0 {
            sign(w)
        } else {
            sign(w) * (w.abs() / v).powf(exp - 1.0)
        };
    }
    Ok(g)
}

/// Multiply the incoming weights of hidden unit `j` of layer `layer`
/// (1-based, `1 ≤ layer ≤ L-1`) by `c` and its outgoing weights by `1/c`.
pub fn rescale_neuron(params: &NetParams, layer: usize, unit: usize, c: f64) -> Result<NetParams> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::Domain(format!(
            "rescaling factor must be positive and finite, got {c}"
        )));
    }
    if layer == 0 || layer >= params.depth() {
        return Err(Error::Shape(format!("layer {layer} is not a hidden layer")));
    }
    if unit >= params.layers()[layer - 1].nrows() {
        return Err(Error::Shape(format!("layer {layer} has no unit {unit}")));
    }
    let mut out = params.clone();
    let layers = out.layers_mut();
    layers[layer - 1].row_mut(unit).mapv_inplace(|v| v * c);
    layers[layer].column_mut(unit).mapv_inplace(|v| v / c);
    Ok(out)
}

/// Sweep statistics from [`balance_relu`].
#[derive(Clone, Debug, PartialEq)]
pub struct BalanceOutcome {
    pub params: NetParams,
    pub sweeps: usize,
    /// Weight-decay value after every sweep, starting with the input.
    pub history: Vec<f64>,
}

const BALANCE_TOL: f64 = 1e-10;
const BALANCE_MAX_SWEEPS: usize = 10_000;

/// Output-preserving per-unit rescaling that drives the weight-decay
/// penalty to stationarity under per-unit rescalings.
///
/// Each sweep visits every hidden unit and applies the factor
/// `c = (‖outgoing‖ / ‖incoming‖)^{1/2}` that minimizes
/// `c²‖incoming‖² + c⁻²‖outgoing‖²`. Sweeps stop when the relative
/// decrease falls below `1e-10` or after `10⁴` sweeps. Units with a zero
/// incoming or outgoing vector are left alone.
pub fn balance_relu(params: &NetParams, act: &ActivationSpec) -> Result<BalanceOutcome> {
    if !act.is_positively_homogeneous() {
        return Err(Error::Unsupported(format!(
            "balancing needs a positively homogeneous activation, got '{}'",
            act.name()
        )));
    }
    let mut cur = params.clone();
    let mut history = vec![weight_decay_norm(&cur)];
    let hidden = cur.depth() - 1;
    let mut sweeps = 0;
    while sweeps < BALANCE_MAX_SWEEPS {
        for l in 0..hidden {
            for j in 0..cur.layers()[l].nrows() {
                let inc = cur.layers()[l].row(j).mapv(|v| v * v).sum();
                let out = cur.layers()[l + 1].column(j).mapv(|v| v * v).sum();
                if inc == 0.0 || out == 0.0 {
                    continue;
                }
                let c = (out / inc).sqrt().sqrt();
                let layers = cur.layers_mut();
                layers[l].row_mut(j).mapv_inplace(|v| v * c);
                layers[l + 1].column_mut(j).mapv_inplace(|v| v / c);
            }
        }
        sweeps += 1;
        let prev = *history.last().expect("nonempty");
        let now = weight_decay_norm(&cur);
        history.push(now);
        if prev - now <= BALANCE_TOL * prev.max(f64::MIN_POSITIVE) {
            break;
        }
    }
    Ok(BalanceOutcome {
        params: cur,
        sweeps,
        history,
    })
}

/// Rescaling after which every hidden unit with nonzero incoming weights
/// has incoming ℓ2 norm 1 (first layer) or ℓ1 norm 1 (deeper layers), all
/// scale pushed into the output row. Then `‖a^L‖_1 = ν(θ)`.
pub fn max_norm_canonical(params: &NetParams) -> NetParams {
    let mut cur = params.clone();
    let hidden = cur.depth() - 1;
    for l in 0..hidden {
        for j in 0..cur.layers()[l].nrows() {
            let row = cur.layers()[l].row(j);
            let norm = if l == 0 { lp_norm(row, 2.0) } else { lp_norm(row, 1.0) };
            if norm > 0.0 {
                let layers = cur.layers_mut();
                layers[l].row_mut(j).mapv_inplace(|v| v / norm);
                layers[l + 1].column_mut(j).mapv_inplace(|v| v * norm);
            }
        }
    }
    cur
}

/// Rescaling of [`max_norm_canonical`] that spreads the scale evenly over
/// the `L` layers, so that `μ_{1,2,∞}` equals `ν(θ)^{1/L}` whenever every
/// hidden unit carries path mass.
pub fn max_norm_balanced(params: &NetParams) -> NetParams {
    let mut cur = max_norm_canonical(params);
    let nu = pesv_norm(&cur);
    if nu == 0.0 {
        return cur;
    }
    let depth = cur.depth();
    let per_layer = nu.powf(1.0 / depth as f64);
    // the row-normalized hidden layers are scaled by per_layer each, which
    // multiplies every path by per_layer^{L-1}; the output row absorbs the rest
    let layers = cur.layers_mut();
    for w in layers[..depth - 1].iter_mut() {
        *w *= per_layer;
    }
    layers[depth - 1] /= per_layer.powi(depth as i32 - 1);
    cur
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netcore::{forward, with_bias_column, WidthVector};
    use ndarray::array;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn net(d: usize, layers: Vec<Array2<f64>>) -> NetParams {
        NetParams::new(d, layers).unwrap()
    }

    /// Explicit enumeration of every path, independent of the matrix chain.
    fn pesv_by_paths(p: &NetParams) -> f64 {
        let layers = p.layers();
        let hidden = layers.len() - 1;
        let norms: Vec<f64> = layers[0].rows().into_iter().map(|r| r.dot(&r).sqrt()).collect();
        fn walk(layers: &[Array2<f64>], norms: &[f64], l: usize, unit: usize, acc: f64) -> f64 {
            if l == 0 {
                return acc * norms[unit];
            }
            (0..layers[l].ncols())
                .map(|j| walk(layers, norms, l - 1, j, acc * layers[l][[unit, j]].abs()))
                .sum()
        }
        (0..layers[hidden].ncols())
            .map(|i| walk(layers, &norms, hidden - 1, i, layers[hidden][[0, i]].abs()))
            .sum()
    }

    fn random_net(rng: &mut ChaCha8Rng, d: usize, widths: Vec<usize>) -> NetParams {
        NetParams::random_uniform(d, &WidthVector::new(widths).unwrap(), rng)
    }

    #[test]
    fn pesv_examples() {
        let zero = NetParams::zeros(2, &WidthVector::new(vec![3, 2]).unwrap());
        assert_eq!(pesv_norm(&zero), 0.0);
        let p = net(1, vec![array![[3.0, 4.0], [0.0, 5.0]], array![[2.0, -3.0]]]);
        assert_eq!(pesv_norm(&p), 25.0);
        let p = net(1, vec![array![[0.6, 0.8]], array![[1.0]], array![[1.0]]]);
        assert!((pesv_norm(&p) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn pesv_matches_path_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for widths in [vec![3], vec![2, 4], vec![3, 1, 2], vec![2, 2, 2, 2]] {
            let p = random_net(&mut rng, 2, widths);
            let (a, b) = (pesv_norm(&p), pesv_by_paths(&p));
            assert!((a - b).abs() <= 1e-12 * b, "{a} vs {b}");
        }
    }

    #[test]
    fn matrixproduct_variant_examples() {
        let p = net(1, vec![array![[1.0, 0.0]], array![[1.0], [-1.0]], array![[1.0, 1.0]]]);
        assert_eq!(pesv_matrixproduct_variant(&p), 0.0);
        assert_eq!(pesv_norm(&p), 2.0);
        let zero = NetParams::zeros(1, &WidthVector::new(vec![2, 2]).unwrap());
        assert_eq!(pesv_matrixproduct_variant(&zero), 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut pos = random_net(&mut rng, 2, vec![3, 3]);
        for w in pos.layers_mut()[1..].iter_mut() {
            w.mapv_inplace(f64::abs);
        }
        assert!((pesv_matrixproduct_variant(&pos) - pesv_norm(&pos)).abs() <= 1e-12 * pesv_norm(&pos));
    }

    #[test]
    fn subgradient_examples() {
        let p = net(1, vec![array![[3.0, 4.0]], array![[2.0]]]);
        let g = pesv_subgradient(&p);
        assert_eq!(g.layers()[1], array![[5.0]]);
        assert!((&g.layers()[0] - &array![[1.2, 1.6]]).iter().all(|v| v.abs() < 1e-15));
        let zero = NetParams::zeros(2, &WidthVector::new(vec![3, 2]).unwrap());
        assert!(pesv_subgradient(&zero).iter_weights().all(|&v| v == 0.0));
    }

    #[test]
    fn subgradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let h = 1e-6;
        for widths in [vec![3], vec![3, 2], vec![2, 3, 2]] {
            let mut p = random_net(&mut rng, 2, widths);
            for w in p.layers_mut() {
                w.mapv_inplace(|v| v.abs() + 0.05);
            }
            let g = pesv_subgradient(&p);
            for l in 0..p.depth() {
                let cols = p.layers()[l].ncols();
                for idx in 0..p.layers()[l].len() {
                    let (r, c) = (idx / cols, idx % cols);
                    let mut plus = p.clone();
                    plus.layers_mut()[l][[r, c]] += h;
                    let mut minus = p.clone();
                    minus.layers_mut()[l][[r, c]] -= h;
                    let fd = (pesv_norm(&plus) - pesv_norm(&minus)) / (2.0 * h);
                    let an = g.layers()[l][[r, c]];
                    assert!(
                        (fd - an).abs() <= 1e-5 * an.abs().max(1e-3),
                        "{l} ({r},{c}): {fd} vs {an}"
                    );
                }
            }
        }
    }

    #[test]
    fn weight_decay_examples() {
        let p = net(1, vec![array![[3.0, 4.0]], array![[2.0]]]);
        assert_eq!(weight_decay_norm(&p), 29.0);
        let mut q = p.clone();
        q.scale(2.0);
        assert_eq!(weight_decay_norm(&q), 4.0 * 29.0);
        assert_eq!(weight_decay_norm(&p.zeros_like()), 0.0);
    }

    #[test]
    fn mixed_max_examples() {
        let p = net(1, vec![array![[3.0, 4.0], [1.0, 0.0]], array![[1.0, -2.0]]]);
        assert_eq!(mixed_max_norm(&p, 1.0, 2.0).unwrap(), 5.0);
        assert_eq!(mixed_max_norm(&p.zeros_like(), 1.0, 2.0).unwrap(), 0.0);
        let mut single = NetParams::zeros(2, &WidthVector::new(vec![2, 3]).unwrap());
        single.layers_mut()[1][[2, 1]] = -7.0;
        assert_eq!(mixed_max_norm(&single, 1.0, 2.0).unwrap(), 7.0);
        assert!(mixed_max_norm(&p, 0.5, 2.0).is_err());
        // output row dominates: ℓ1 of (3, -4) is 7
        let p = net(1, vec![array![[0.1, 0.0], [0.0, 0.1]], array![[3.0, -4.0]]]);
        assert_eq!(mixed_max_norm(&p, 1.0, 2.0).unwrap(), 7.0);
        let g = mixed_max_subgradient(&p, 1.0, 2.0).unwrap();
        assert_eq!(g.layers()[1], array![[1.0, -1.0]]);
    }

    #[test]
    fn rescale_neuron_behaviour() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = random_net(&mut rng, 2, vec![4, 3]);
        assert_eq!(rescale_neuron(&p, 1, 2, 1.0).unwrap(), p);
        assert!(matches!(rescale_neuron(&p, 1, 0, 0.0), Err(Error::Domain(_))));
        assert!(matches!(rescale_neuron(&p, 1, 0, -1.0), Err(Error::Domain(_))));
        assert!(rescale_neuron(&p, 3, 0, 2.0).is_err());
        assert!(rescale_neuron(&p, 2, 3, 2.0).is_err());

        let x = with_bias_column(Array2::from_shape_fn((100, 2), |_| rng.random_range(-0.7..0.7)).view());
        let relu = ActivationSpec::relu();
        let q = rescale_neuron(&p, 1, 1, 2.0).unwrap();
        let (y0, y1) = (
            forward(&p, &relu, x.view()).unwrap(),
            forward(&q, &relu, x.view()).unwrap(),
        );
        for (a, b) in y0.iter().zip(y1.iter()) {
            assert!((a - b).abs() <= 1e-10 * a.abs().max(1e-12));
        }
        assert!((pesv_norm(&q) - pesv_norm(&p)).abs() <= 1e-12 * pesv_norm(&p));
    }

    #[test]
    fn balance_two_layer_closed_form() {
        let p = net(1, vec![array![[0.3, 0.4]], array![[4.0]]]);
        let out = balance_relu(&p, &ActivationSpec::relu()).unwrap();
        let b = &out.params;
        let a = b.output_weights()[0];
        let wn = b.first_layer().row(0).dot(&b.first_layer().row(0)).sqrt();
        assert!((a - 2f64.sqrt()).abs() < 1e-12 && (wn - 2f64.sqrt()).abs() < 1e-12);
        assert!((weight_decay_norm(b) - 4.0).abs() < 1e-12);
        assert!((weight_decay_norm(b) - 2.0 * pesv_norm(b)).abs() < 1e-12);
    }

    #[test]
    fn balance_fixed_point_and_errors() {
        let p = net(1, vec![array![[1.0, 0.0]], array![[-1.0]]]);
        let out = balance_relu(&p, &ActivationSpec::relu()).unwrap();
        assert!(out.params.max_abs_diff(&p) <= 1e-12);
        let tab = ActivationSpec::tabulated(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert!(matches!(balance_relu(&p, &tab), Err(Error::Unsupported(_))));
        assert!(balance_relu(&p, &ActivationSpec::relu().with_offset(0.1)).is_err());
    }

    #[test]
    fn balance_deep_net_preserves_outputs_and_decreases_decay() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let relu = ActivationSpec::relu();
        for _ in 0..20 {
            let p = random_net(&mut rng, 2, vec![4, 5]);
            let mut skewed = p.clone();
            for l in 0..2 {
                for j in 0..skewed.layers()[l].nrows() {
                    skewed = rescale_neuron(&skewed, l + 1, j, rng.random_range(0.1..10.0)).unwrap();
                }
            }
            let out = balance_relu(&skewed, &relu).unwrap();
            assert!(out.history.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-14)));
            assert!(out.history.last().unwrap() <= &weight_decay_norm(&skewed));
            let x = with_bias_column(Array2::from_shape_fn((50, 2), |_| rng.random_range(-0.7..0.7)).view());
            let y0 = forward(&skewed, &relu, x.view()).unwrap();
            let y1 = forward(&out.params, &relu, x.view()).unwrap();
            for (a, b) in y0.iter().zip(y1.iter()) {
                assert!((a - b).abs() <= 1e-9 * a.abs().max(1e-9));
            }
        }
    }

    #[test]
    fn balance_minimizes_over_sampled_rescalings() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let relu = ActivationSpec::relu();
        for _ in 0..10 {
            let p = random_net(&mut rng, 2, vec![3, 3]);
            let balanced = balance_relu(&p, &relu).unwrap().params;
            let target = weight_decay_norm(&balanced);
            for _ in 0..200 {
                let mut q = balanced.clone();
                for l in 0..2 {
                    for j in 0..3 {
                        q = rescale_neuron(&q, l + 1, j, rng.random_range(0.5..2.0)).unwrap();
                    }
                }
                assert!(weight_decay_norm(&q) >= target - 1e-9);
            }
        }
    }

    #[test]
    fn max_norm_canonical_forms() {
        let p = net(1, vec![array![[3.0, 4.0], [0.0, 2.0]], array![[1.0, -1.0]]]);
        let c = max_norm_canonical(&p);
        assert!((c.output_weights().mapv(f64::abs).sum() - pesv_norm(&p)).abs() < 1e-12);
        assert!((mixed_max_norm(&c, 1.0, 2.0).unwrap() - 7.0).abs() < 1e-12);
        let b = max_norm_balanced(&p);
        assert!((mixed_max_norm(&b, 1.0, 2.0).unwrap() - 7f64.sqrt()).abs() < 1e-12);

        let p = net(1, vec![array![[3.0, 4.0]], array![[2.0], [-1.0]], array![[0.5, 3.0]]]);
        let nu = pesv_norm(&p);
        assert_eq!(nu, 5.0 * (2.0 * 0.5 + 1.0 * 3.0));
        let c = max_norm_canonical(&p);
        assert!((c.output_weights().mapv(f64::abs).sum() - nu).abs() < 1e-12);
        let b = max_norm_balanced(&p);
        assert!((mixed_max_norm(&b, 1.0, 2.0).unwrap() - nu.powf(1.0 / 3.0)).abs() < 1e-12);
        let relu = ActivationSpec::relu();
        let x = array![[0.3, 1.0], [-0.9, 1.0], [0.0, 1.0]];
        let (y0, y1) = (
            forward(&p, &relu, x.view()).unwrap(),
            forward(&b, &relu, x.view()).unwrap(),
        );
        for (a, b) in y0.iter().zip(y1.iter()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn pesv_rescaling_invariance(seed in any::<u64>(), layer in 1usize..3, unit in 0usize..3, c in 0.01f64..100.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_net(&mut rng, 2, vec![3, 3]);
            let q = rescale_neuron(&p, layer, unit, c).unwrap();
            let (a, b) = (pesv_norm(&p), pesv_norm(&q));
            prop_assert!((a - b).abs() <= 1e-10 * a);
        }

        #[test]
        fn matrixproduct_never_exceeds_pesv(seed in any::<u64>(), depth in 2usize..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_net(&mut rng, 2, vec![3; depth - 1]);
            prop_assert!(pesv_matrixproduct_variant(&p) <= pesv_norm(&p) * (1.0 + 1e-12));
        }

        #[test]
        fn pesv_output_homogeneity(seed in any::<u64>(), c in 0.0f64..50.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_net(&mut rng, 3, vec![2, 4]);
            let mut q = p.clone();
            q.layers_mut()[2] *= c;
            prop_assert!((pesv_norm(&q) - c * pesv_norm(&p)).abs() <= 1e-12 * (1.0 + c * pesv_norm(&p)));
        }

        #[test]
        fn two_layer_balance_identity(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = random_net(&mut rng, 2, vec![5]);
            let b = balance_relu(&p, &ActivationSpec::relu()).unwrap().params;
            let (wd, nu) = (weight_decay_norm(&b), pesv_norm(&b));
            prop_assert!((wd - 2.0 * nu).abs() <= 1e-9 * wd);
        }
    }
}
