use ndarray::{Array1, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::netcore::{forward, with_bias_column, ActivationSpec, NetParams, WidthVector};
use crate::norms::pesv_norm;
use crate::theory::metric_entropy_bound;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoveringResult {
    pub delta: f64,
    pub samples: usize,
    pub grid_points: usize,
    pub grid_spacing: f64,
    /// Greedy packing size at separation `δ`.
    pub packing: usize,
    /// Entropy formula at scale `δ/2`.
    pub entropy_bound: f64,
    pub pass: bool,
}

/// Points of the cubic grid with spacing `h` that lie in the unit ball.
pub fn ball_grid(d: usize, h: f64) -> Array2<f64> {
    let k = (1.0 / h).floor() as i64;
    let axis: Vec<f64> = (-k..=k).map(|i| i as f64 * h).collect();
    let mut pts = Vec::new();
    let mut idx = vec![0usize; d];
    loop {
        let p: Vec<f64> = idx.iter().map(|&i| axis[i]).collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= 1.0 + 1e-12 {
            pts.extend(p);
        }
        let mut j = 0;
        while j < d {
            idx[j] += 1;
            if idx[j] < axis.len() {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == d {
            break;
        }
    }
    let rows = pts.len() / d;
    Array2::from_shape_vec((rows, d), pts).expect("consistent shape")
}

fn sup_dist(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Greedy `δ`-packing of random networks on the unit PeSV sphere, with sup
/// distances taken over grid points inside the ball. Grid distances never
/// exceed true sup distances, so the packing size lower-bounds the `δ/2`
/// covering number; it passes when `ln P` is at most the entropy formula
/// at `δ/2`.
pub fn covering_packing_lower_bound(
    widths: &WidthVector,
    d: usize,
    delta: f64,
    act: &ActivationSpec,
    samples: usize,
    seed: u64,
) -> Result<CoveringResult> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("separation must be positive, got {delta}")));
    }
    let lip = act.lipschitz_constant().powi(widths.depth() as i32 - 1);
    let h = delta / (5.0 * lip);
    let grid = with_bias_column(ball_grid(d, h).view());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers: Vec<Array1<f64>> = Vec::new();
    for _ in 0..samples {
        let mut p = NetParams::random_uniform(d, widths, &mut rng);
        let nu = pesv_norm(&p);
        if nu == 0.0 {
            continue;
        }
        let last = p.depth() - 1;
        p.layers_mut()[last] /= nu;
        let v = forward(&p, act, grid.view())?;
        if centers.iter().all(|c| sup_dist(c, &v) > delta) {
            centers.push(v);
        }
    }
    let entropy_bound = metric_entropy_bound(delta / 2.0, widths, d, act.lipschitz_constant())?;
    let packing = centers.len();
    Ok(CoveringResult {
        delta,
        samples,
        grid_points: grid.nrows(),
        grid_spacing: h,
        packing,
        entropy_bound,
        pass: (packing as f64).ln() <= entropy_bound,
    })
}
