use ndarray::{Array1, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::netcore::{forward_backward, with_bias_column, ActivationSpec, NetParams, WidthVector};
use crate::norms::pesv_norm;
use crate::theory::rademacher_bound;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherConfig {
    pub trials: usize,
    pub starts: usize,
    pub inner_iters: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RademacherEstimate {
    /// Mean over trials of the best `|Σ ρ_i f(x_i)|` found; a lower bound
    /// on the expected supremum up to Monte Carlo error.
    pub mean: f64,
    pub std_error: f64,
    /// Formula value with `c = 1`.
    pub bound: f64,
    pub ratio: f64,
    /// Empirical constant `mean / (2^{L-1} L_σ^{L-1} F √(dn))`.
    pub c_hat: f64,
    pub per_trial: Vec<f64>,
}

fn retract(theta: &mut NetParams) -> bool {
    let nu = pesv_norm(theta);
    if !(nu > 0.0 && nu.is_finite()) {
        return false;
    }
    let last = theta.depth() - 1;
    theta.layers_mut()[last] /= nu;
    true
}

/// Best `|Σ ρ_i f(x̃_i)|` over the unit PeSV sphere found by normalized
/// gradient ascent from several random starts. Steps grow by 1.5 after an
/// improvement and halve otherwise.
fn unit_sup(
    widths: &WidthVector,
    act: &ActivationSpec,
    x: ArrayView2<'_, f64>,
    rho: &Array1<f64>,
    starts: usize,
    iters: usize,
    rng: &mut ChaCha8Rng,
) -> Result<f64> {
    let d = x.ncols() - 1;
    let eval = |theta: &NetParams, sign: f64| -> Result<(f64, NetParams)> {
        let (f, g) = forward_backward(theta, act, x, |_| rho.mapv(|r| r * sign))?;
        Ok((sign * rho.dot(&f), g))
    };
    let mut best: f64 = 0.0;
    for _ in 0..starts {
        let mut theta = NetParams::random_uniform(d, widths, rng);
        if !retract(&mut theta) {
            continue;
        }
        let sign = if eval(&theta, 1.0)?.0 >= 0.0 { 1.0 } else { -1.0 };
        let (mut val, mut g) = eval(&theta, sign)?;
        let mut step = 0.5;
        for _ in 0..iters {
            let gnorm = g.norm_sq().sqrt();
            if gnorm == 0.0 || step < 1e-12 {
                break;
            }
            let mut cand = theta.clone();
            cand.add_scaled(&g, step * theta.norm_sq().sqrt() / gnorm);
            if !retract(&mut cand) {
                step *= 0.5;
                continue;
            }
            let (cv, cg) = eval(&cand, sign)?;
            if cv > val {
                (theta, val, g) = (cand, cv, cg);
                step *= 1.5;
            } else {
                step *= 0.5;
            }
        }
        best = best.max(val.abs());
    }
    Ok(best)
}

/// Monte Carlo estimate of `E_ρ sup_{ν(θ) ≤ F} |Σ ρ_i f(x_i; θ)|` on raw
/// inputs `x` in the unit ball. The supremum is computed on the unit ball
/// and scaled by `F`, so estimates at different radii share randomness.
pub fn rademacher_mc(
    widths: &WidthVector,
    radius: f64,
    x: ArrayView2<'_, f64>,
    act: &ActivationSpec,
    cfg: &RademacherConfig,
) -> Result<RademacherEstimate> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(Error::Domain(format!("radius must be nonnegative, got {radius}")));
    }
    if cfg.trials == 0 || cfg.starts == 0 {
        return Err(Error::Domain("trials and starts must be positive".into()));
    }
    if let Some(i) = x.rows().into_iter().position(|r| r.dot(&r) > 1.0 + 1e-12) {
        return Err(Error::Domain(format!("input {i} lies outside the unit ball")));
    }
    let n = x.nrows();
    let xt = with_bias_column(x);
    let per_unit = (0..cfg.trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(t as u64);
            let rho: Array1<f64> = (0..n).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
            unit_sup(widths, act, xt.view(), &rho, cfg.starts, cfg.inner_iters, &mut rng)
        })
        .collect::<Result<Vec<f64>>>()?;
    let per_trial: Vec<f64> = per_unit.iter().map(|v| radius * v).collect();
    let k = cfg.trials as f64;
    let unit_mean = per_unit.iter().sum::<f64>() / k;
    let unit_var = if cfg.trials > 1 {
        per_unit.iter().map(|v| (v - unit_mean).powi(2)).sum::<f64>() / (k - 1.0)
    } else {
        0.0
    };
    let mean = radius * unit_mean;
    let d = x.ncols();
    let lip = act.lipschitz_constant();
    let bound = rademacher_bound(widths, radius, d, n as f64, lip, 1.0)?;
    let scale = rademacher_bound(widths, 1.0, d, n as f64, lip, 1.0)?;
    Ok(RademacherEstimate {
        mean,
        std_error: radius * (unit_var / k).sqrt(),
        bound,
        ratio: if bound > 0.0 { mean / bound } else { 0.0 },
        c_hat: unit_mean / scale,
        per_trial,
    })
}
