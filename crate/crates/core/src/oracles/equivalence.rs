use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::erm::{objective, train, Dataset, LossSpec, OptimizerConfig, Regularizer};
use crate::netcore::{ActivationSpec, NetParams, WidthVector};
use crate::norms::{balance_relu, max_norm_balanced, pesv_norm};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceRow {
    pub seed: u64,
    /// Best objective of each direct run under its own regularizer.
    pub pesv_direct: f64,
    pub weight_decay_direct: f64,
    pub mixed_max_direct: f64,
    /// PeSV objective of the balanced weight-decay minimizer.
    pub pesv_of_weight_decay: f64,
    /// PeSV objective of the mixed-max minimizer.
    pub pesv_of_mixed_max: f64,
    /// Weight-decay objective of the balanced PeSV minimizer.
    pub weight_decay_of_pesv: f64,
    /// Mixed-max objective of the max-norm balanced PeSV minimizer.
    pub mixed_max_of_pesv: f64,
    /// `|pesv_of_weight_decay - pesv_direct| / pesv_direct`.
    pub gap_weight_decay: f64,
    pub gap_mixed_max: f64,
    pub lambda_mixed_max: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub lambda: f64,
    pub lambda_weight_decay: f64,
    pub rows: Vec<EquivalenceRow>,
    pub median_gap_weight_decay: f64,
    pub median_gap_mixed_max: f64,
    pub pass: bool,
}

/// Pass threshold on the median weight-decay gap.
pub const EQUIVALENCE_TOL: f64 = 0.05;

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let k = v.len();
    if k % 2 == 1 {
        v[k / 2]
    } else {
        0.5 * (v[k / 2 - 1] + v[k / 2])
    }
}

fn rel_gap(a: f64, reference: f64) -> f64 {
    let diff = (a - reference).abs();
    if diff == 0.0 {
        0.0
    } else {
        diff / reference.abs().max(f64::MIN_POSITIVE)
    }
}

/// Trains the PeSV, weight-decay (`λ/2`) and mixed max-norm (`2λ√ν̂`,
/// `ν̂` the PeSV minimizer's norm) problems from a shared initialization
/// per seed and cross-evaluates the minimizers after rescaling.
pub fn equivalence_check_relu(
    dataset: &Dataset,
    lambda: f64,
    widths: &WidthVector,
    seeds: &[u64],
    opt: &OptimizerConfig,
) -> Result<EquivalenceReport> {
    if seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    let act = ActivationSpec::relu();
    let loss = LossSpec::mse();
    let lambda_wd = lambda / 2.0;
    let rows = seeds
        .par_iter()
        .map(|&seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = NetParams::random_uniform(dataset.input_dim(), widths, &mut rng);
            let opt = OptimizerConfig { seed, ..*opt };
            let pesv = train(&init, &act, dataset, lambda, &loss, Regularizer::Pesv, &opt)?;
            let wd = train(&init, &act, dataset, lambda_wd, &loss, Regularizer::WeightDecay, &opt)?;
            let lambda_mm = 2.0 * lambda * pesv_norm(&pesv.params).sqrt();
            let mm_reg = Regularizer::MixedMax { p: 1.0, q: 2.0 };
            let mm = train(&init, &act, dataset, lambda_mm, &loss, mm_reg, &opt)?;

            let wd_balanced = balance_relu(&wd.params, &act)?.params;
            let pesv_balanced = balance_relu(&pesv.params, &act)?.params;
            let pesv_of_weight_decay = objective(&wd_balanced, &act, dataset, lambda, &loss, Regularizer::Pesv)?;
            let pesv_of_mixed_max = objective(&mm.params, &act, dataset, lambda, &loss, Regularizer::Pesv)?;
            let weight_decay_of_pesv = objective(
                &pesv_balanced,
                &act,
                dataset,
                lambda_wd,
                &loss,
                Regularizer::WeightDecay,
            )?;
            let mixed_max_of_pesv = objective(
                &max_norm_balanced(&pesv.params),
                &act,
                dataset,
                lambda_mm,
                &loss,
                mm_reg,
            )?;
            Ok(EquivalenceRow {
                seed,
                pesv_direct: pesv.objective,
                weight_decay_direct: wd.objective,
                mixed_max_direct: mm.objective,
                pesv_of_weight_decay,
                pesv_of_mixed_max,
                weight_decay_of_pesv,
                mixed_max_of_pesv,
                gap_weight_decay: rel_gap(pesv_of_weight_decay, pesv.objective),
                gap_mixed_max: rel_gap(pesv_of_mixed_max, pesv.objective),
                lambda_mixed_max: lambda_mm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let median_gap_weight_decay = median(&mut rows.iter().map(|r| r.gap_weight_decay).collect::<Vec<_>>());
    let median_gap_mixed_max = median(&mut rows.iter().map(|r| r.gap_mixed_max).collect::<Vec<_>>());
    Ok(EquivalenceReport {
        lambda,
        lambda_weight_decay: lambda_wd,
        rows,
        median_gap_weight_decay,
        median_gap_mixed_max,
        pass: median_gap_weight_decay <= EQUIVALENCE_TOL,
    })
}
