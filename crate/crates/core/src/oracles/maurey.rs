use ndarray::{Array1, Array2};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaureyResult {
    pub m: usize,
    pub trials: usize,
    /// Largest atom norm `R`.
    pub radius: f64,
    pub mean_sq_error: f64,
    pub std_error: f64,
    /// `R²/m`.
    pub bound: f64,
    pub pass: bool,
}

/// Empirical mean of `‖f* - (1/m) Σ_j g_{i_j}‖²` for `f* = Σ γ_i g_i` with
/// `i_j` drawn iid from `γ`. Rows of `atoms` are the `g_i`. Passes when the
/// mean is at most `R²/m (1 + 3/√trials)`.
pub fn maurey_sampling_check(
    atoms: &Array2<f64>,
    weights: &[f64],
    m: usize,
    trials: usize,
    seed: u64,
) -> Result<MaureyResult> {
    if weights.len() != atoms.nrows() || atoms.nrows() == 0 {
        return Err(Error::Shape(format!(
            "{} weights for {} atoms",
            weights.len(),
            atoms.nrows()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0)) || (weights.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
        return Err(Error::Domain("weights must be nonnegative and sum to 1".into()));
    }
    if m == 0 || trials == 0 {
        return Err(Error::Domain("m and trials must be positive".into()));
    }
    let target: Array1<f64> = atoms.t().dot(&Array1::from(weights.to_vec()));
    let radius = atoms.rows().into_iter().map(|r| r.dot(&r).sqrt()).fold(0.0, f64::max);
    let index = WeightedIndex::new(weights).map_err(|e| Error::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut errors = Vec::with_capacity(trials);
    for _ in 0..trials {
        let mut avg = Array1::zeros(atoms.ncols());
        for _ in 0..m {
            avg += &atoms.row(index.sample(&mut rng));
        }
        avg /= m as f64;
        let diff = &avg - &target;
        errors.push(diff.dot(&diff));
    }
    let mean = errors.iter().sum::<f64>() / trials as f64;
    let var = if trials > 1 {
        errors.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (trials - 1) as f64
    } else {
        0.0
    };
    let bound = radius * radius / m as f64;
    Ok(MaureyResult {
        m,
        trials,
        radius,
        mean_sq_error: mean,
        std_error: (var / trials as f64).sqrt(),
        bound,
        pass: mean <= bound * (1.0 + 3.0 / (trials as f64).sqrt()),
    })
}
