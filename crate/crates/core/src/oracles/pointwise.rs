use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::erm::sample_unit_ball;
use crate::netcore::{forward, ActivationSpec, NetParams};
use crate::norms::pesv_norm;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PointwiseResult {
    pub probes: usize,
    pub max_ratio: f64,
    pub pass: bool,
}

/// Pass threshold on the ratio.
pub const POINTWISE_TOL: f64 = 1e-9;

/// Largest `|f(x̃)| / (L_σ^{L-1} ‖x̃‖ ν(θ))` over probes `x̃` uniform in the
/// unit ball of `R^{d+1}`.
pub fn pointwise_norm_check(
    params: &NetParams,
    act: &ActivationSpec,
    probes: usize,
    seed: u64,
) -> Result<PointwiseResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x: Array2<f64> = sample_unit_ball(probes, params.input_dim() + 1, &mut rng);
    let f = forward(params, act, x.view())?;
    let nu = pesv_norm(params);
    let scale = act.lipschitz_constant().powi(params.depth() as i32 - 1) * nu;
    let mut max_ratio: f64 = 0.0;
    for (row, &v) in x.rows().into_iter().zip(f.iter()) {
        if v == 0.0 {
            continue;
        }
        if nu == 0.0 {
            return Err(Error::Inconsistent(format!("zero PeSV norm with nonzero output {v}")));
        }
        let r = row.dot(&row).sqrt();
        if r > 0.0 {
            max_ratio = max_ratio.max(v.abs() / (scale * r));
        }
    }
    Ok(PointwiseResult {
        probes,
        max_ratio,
        pass: max_ratio <= 1.0 + POINTWISE_TOL,
    })
}
