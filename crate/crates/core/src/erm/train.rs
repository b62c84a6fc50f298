use std::fmt::Write as _;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::{sample_unit_ball, Dataset, TeacherSpec};
use super::loss::LossSpec;
use crate::netcore::{forward, forward_backward, with_bias_column, ActivationSpec, NetParams};
use crate::norms::{
    mixed_max_norm, mixed_max_subgradient, pesv_norm, pesv_subgradient, weight_decay_gradient, weight_decay_norm,
};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    Pesv,
    WeightDecay,
    MixedMax { p: f64, q: f64 },
}

impl Regularizer {
    pub fn value(&self, params: &NetParams) -> Result<f64> {
        Ok(match *self {
            Regularizer::Pesv => pesv_norm(params),
            Regularizer::WeightDecay => weight_decay_norm(params),
            Regularizer::MixedMax { p, q } => mixed_max_norm(params, p, q)?,
        })
    }

    pub fn subgradient(&self, params: &NetParams) -> Result<NetParams> {
        Ok(match *self {
            Regularizer::Pesv => pesv_subgradient(params),
            Regularizer::WeightDecay => weight_decay_gradient(params),
            Regularizer::MixedMax { p, q } => mixed_max_subgradient(params, p, q)?,
        })
    }

    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Pesv => "pesv",
            Regularizer::WeightDecay => "weight_decay",
            Regularizer::MixedMax { .. } => "mixed_max",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StepSchedule {
    /// `η_t = η₀ / √(1 + t/τ)`
    InverseSqrt {
        eta0: f64,
        tau: f64,
    },
    Constant {
        eta: f64,
    },
}

impl StepSchedule {
    pub fn step(&self, t: usize) -> f64 {
        match *self {
            StepSchedule::InverseSqrt { eta0, tau } => eta0 / (1.0 + t as f64 / tau).sqrt(),
            StepSchedule::Constant { eta } => eta,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            StepSchedule::InverseSqrt { eta0, tau } => eta0 > 0.0 && eta0.is_finite() && tau > 0.0 && tau.is_finite(),
            StepSchedule::Constant { eta } => eta > 0.0 && eta.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "step sizes must be positive and finite: {self:?}"
            )))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub schedule: StepSchedule,
    pub max_iters: usize,
    /// Stop once `‖g‖ ≤ tol (1 + ‖θ‖)`; 0 disables the test.
    pub tolerance: f64,
    /// Seed for the initialization drawn by callers.
    pub seed: u64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub objective: f64,
    pub empirical_mse: f64,
    pub nu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainOutcome {
    /// Iterate with the smallest objective seen.
    pub params: NetParams,
    pub objective: f64,
    pub best_iteration: usize,
    pub trace: Vec<TraceRow>,
    pub converged: bool,
}

fn check_dims(params: &NetParams, dataset: &Dataset, lambda: f64) -> Result<()> {
    if params.input_dim() != dataset.input_dim() {
        return Err(Error::Shape(format!(
            "network input dimension {} does not match data dimension {}",
            params.input_dim(),
            dataset.input_dim()
        )));
    }
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::Domain(format!(
            "regularization strength must be nonnegative, got {lambda}"
        )));
    }
    Ok(())
}

fn mean_loss(loss: &LossSpec, f: &Array1<f64>, y: &Array1<f64>) -> f64 {
    f.iter().zip(y.iter()).map(|(&f, &y)| loss.value(f, y)).sum::<f64>() / f.len() as f64
}

fn mean_sq(a: &Array1<f64>, b: &Array1<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len() as f64
}

/// `(1/n) Σ 𝓛(g(x_i; θ), y_i) + λ R(θ)`. For the squared loss this is
/// `(1/2n) Σ (y_i - g(x_i; θ))² + λ R(θ)`.
pub fn objective(
    params: &NetParams,
    act: &ActivationSpec,
    dataset: &Dataset,
    lambda: f64,
    loss: &LossSpec,
    reg: Regularizer,
) -> Result<f64> {
    check_dims(params, dataset, lambda)?;
    let f = forward(params, act, dataset.inputs.view())?;
    Ok(mean_loss(loss, &f, &dataset.targets) + lambda * reg.value(params)?)
}

/// Subgradient descent on [`objective`] from `init`, returning the best
/// iterate. The trace has one row per evaluated iterate.
pub fn train(
    init: &NetParams,
    act: &ActivationSpec,
    dataset: &Dataset,
    lambda: f64,
    loss: &LossSpec,
    reg: Regularizer,
    opt: &OptimizerConfig,
) -> Result<TrainOutcome> {
    check_dims(init, dataset, lambda)?;
    opt.schedule.validate()?;
    if opt.max_iters == 0 {
        return Err(Error::Domain("max_iters must be at least 1".into()));
    }
    let n = dataset.len() as f64;
    let y = &dataset.targets;
    let mut theta = init.clone();
    let mut last_finite = init.clone();
    let mut best = (f64::INFINITY, init.clone(), 0);
    let mut trace = Vec::with_capacity(opt.max_iters + 1);
    let mut converged = false;
    for t in 0..=opt.max_iters {
        let (f, mut grad) = forward_backward(&theta, act, dataset.inputs.view(), |f| {
            f.iter()
                .zip(y.iter())
                .map(|(&f, &y)| loss.derivative(f, y) / n)
                .collect()
        })?;
        let reg_value = reg.value(&theta)?;
        let obj = mean_loss(loss, &f, y) + lambda * reg_value;
        if !obj.is_finite() || !theta.is_finite() {
            return Err(Error::Diverged {
                iteration: t,
                last_finite: Box::new(last_finite),
            });
        }
        trace.push(TraceRow {
            iteration: t,
            objective: obj,
            empirical_mse: mean_sq(&f, y),
            nu: pesv_norm(&theta),
        });
        if obj < best.0 {
            best = (obj, theta.clone(), t);
        }
        if t == opt.max_iters {
            break;
        }
        if lambda > 0.0 {
            grad.add_scaled(&reg.subgradient(&theta)?, lambda);
        }
        if opt.tolerance > 0.0 && grad.norm_sq().sqrt() <= opt.tolerance * (1.0 + theta.norm_sq().sqrt()) {
            converged = true;
            break;
        }
        last_finite.clone_from(&theta);
        theta.add_scaled(&grad, -opt.schedule.step(t));
    }
    let (objective, params, best_iteration) = best;
    Ok(TrainOutcome {
        params,
        objective,
        best_iteration,
        trace,
        converged,
    })
}

/// `‖g(·; θ) - f*‖²_n` over the training inputs.
pub fn empirical_error(
    params: &NetParams,
    act: &ActivationSpec,
    teacher: &TeacherSpec,
    dataset: &Dataset,
) -> Result<f64> {
    let g = forward(params, act, dataset.inputs.view())?;
    let f = teacher.eval(dataset.inputs.view())?;
    Ok(mean_sq(&g, &f))
}

/// Monte Carlo estimate of `‖g - f*‖²₂` under the uniform ball input law,
/// with its standard error.
pub fn generalization_error_mc(
    params: &NetParams,
    act: &ActivationSpec,
    teacher: &TeacherSpec,
    n_test: usize,
    seed: u64,
) -> Result<(f64, f64)> {
    if n_test < 2 {
        return Err(Error::Domain(format!("need at least 2 test points, got {n_test}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = with_bias_column(sample_unit_ball(n_test, params.input_dim(), &mut rng).view());
    let diff = forward(params, act, x.view())? - teacher.eval(x.view())?;
    let sq = diff.mapv(|v| v * v);
    let mean = sq.mean().expect("nonempty");
    let var = sq.mapv(|v| (v - mean).powi(2)).sum() / (n_test - 1) as f64;
    Ok((mean, (var / n_test as f64).sqrt()))
}

/// Trace as CSV with header `iteration,objective,empirical_mse,nu`.
pub fn trace_to_csv(trace: &[TraceRow]) -> String {
    let mut s = String::from("iteration,objective,empirical_mse,nu\n");
    for r in trace {
        writeln!(s, "{},{},{},{}", r.iteration, r.objective, r.empirical_mse, r.nu).expect("write to string");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::erm::data::{sample_dataset, InputDistribution};
    use crate::netcore::WidthVector;
    use crate::norms::rescale_neuron;
    use ndarray::array;

    fn relu() -> ActivationSpec {
        ActivationSpec::relu()
    }

    fn point(x: f64, y: f64) -> Dataset {
        Dataset {
            inputs: array![[x, 1.0]],
            targets: array![y],
            noise_std: 0.0,
            seed: 0,
            teacher_hash: String::new(),
        }
    }

    fn opt(eta: f64, iters: usize) -> OptimizerConfig {
        OptimizerConfig {
            schedule: StepSchedule::Constant { eta },
            max_iters: iters,
            tolerance: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn objective_examples() {
        let w = WidthVector::new(vec![2]).unwrap();
        let zero = NetParams::zeros(1, &w);
        let mse = LossSpec::mse();
        assert_eq!(
            objective(&zero, &relu(), &point(0.3, 1.0), 0.0, &mse, Regularizer::Pesv).unwrap(),
            0.5
        );
        assert_eq!(
            objective(&zero, &relu(), &point(0.3, 2.0), 1.0, &mse, Regularizer::Pesv).unwrap(),
            2.0
        );
        let t = TeacherSpec::random(2, &WidthVector::new(vec![3]).unwrap(), relu(), 1.0, 1).unwrap();
        let ds = sample_dataset(&t, 30, 0.0, &InputDistribution::UniformBall, 2).unwrap();
        assert_eq!(
            objective(&t.params, &relu(), &ds, 0.0, &mse, Regularizer::Pesv).unwrap(),
            0.0
        );
        assert!(objective(&zero, &relu(), &ds, 0.0, &mse, Regularizer::Pesv).is_err());
        assert!(objective(&zero, &relu(), &point(0.3, 1.0), -1.0, &mse, Regularizer::Pesv).is_err());
    }

    #[test]
    fn objective_invariant_under_rescaling() {
        let t = TeacherSpec::random(2, &WidthVector::new(vec![4, 3]).unwrap(), relu(), 1.0, 7).unwrap();
        let ds = sample_dataset(&t, 20, 0.1, &InputDistribution::UniformBall, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = NetParams::random_uniform(2, &WidthVector::new(vec![4, 3]).unwrap(), &mut rng);
        let q = rescale_neuron(&rescale_neuron(&p, 1, 2, 3.5).unwrap(), 2, 0, 0.2).unwrap();
        let mse = LossSpec::mse();
        let (a, b) = (
            objective(&p, &relu(), &ds, 0.1, &mse, Regularizer::Pesv).unwrap(),
            objective(&q, &relu(), &ds, 0.1, &mse, Regularizer::Pesv).unwrap(),
        );
        assert!((a - b).abs() <= 1e-12 * a);
    }

    #[test]
    fn zero_targets_shrink_norm() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = WidthVector::new(vec![5]).unwrap();
        let init = NetParams::random_uniform(2, &w, &mut rng);
        let t = TeacherSpec::new(NetParams::zeros(2, &w), relu());
        let ds = sample_dataset(&t, 20, 0.0, &InputDistribution::UniformBall, 0).unwrap();
        let out = train(
            &init,
            &relu(),
            &ds,
            0.1,
            &LossSpec::mse(),
            Regularizer::Pesv,
            &opt(0.05, 500),
        )
        .unwrap();
        assert!(pesv_norm(&out.params) < pesv_norm(&init));
        assert!(out.objective <= out.trace[0].objective);
        assert_eq!(
            out.objective,
            out.trace.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min)
        );
        assert_eq!(out.trace.len(), 501);
    }

    #[test]
    fn single_point_interpolation() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let init = NetParams::random_uniform(1, &WidthVector::new(vec![4]).unwrap(), &mut rng);
        let ds = point(0.5, 1.0);
        let out = train(
            &init,
            &relu(),
            &ds,
            0.0,
            &LossSpec::mse(),
            Regularizer::Pesv,
            &opt(0.1, 10_000),
        )
        .unwrap();
        let f = forward(&out.params, &relu(), ds.inputs.view()).unwrap();
        assert!((f[0] - 1.0).powi(2) < 1e-4);
        let mut best = f64::INFINITY;
        for r in &out.trace {
            best = best.min(r.empirical_mse);
        }
        assert!(best < 1e-4);
    }

    #[test]
    fn huge_lambda_collapses_network() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = WidthVector::new(vec![4]).unwrap();
        let t = TeacherSpec::random(2, &w, relu(), 1.0, 9).unwrap();
        let ds = sample_dataset(&t, 20, 0.0, &InputDistribution::UniformBall, 1).unwrap();
        let init = NetParams::random_uniform(2, &w, &mut rng);
        let schedule = StepSchedule::InverseSqrt { eta0: 1e-4, tau: 100.0 };
        let o = OptimizerConfig {
            schedule,
            max_iters: 5000,
            tolerance: 0.0,
            seed: 0,
        };
        let out = train(&init, &relu(), &ds, 1e3, &LossSpec::mse(), Regularizer::Pesv, &o).unwrap();
        assert!(pesv_norm(&out.params) < 1e-3, "{}", pesv_norm(&out.params));
    }

    #[test]
    fn divergence_carries_last_finite_iterate() {
        let w = WidthVector::new(vec![2]).unwrap();
        let init = NetParams::random_uniform(1, &w, &mut ChaCha8Rng::seed_from_u64(4));
        let ds = point(1.0, 1e3);
        let err = train(
            &init,
            &ActivationSpec::identity(),
            &ds,
            0.0,
            &LossSpec::mse(),
            Regularizer::WeightDecay,
            &opt(1e6, 1000),
        )
        .unwrap_err();
        match err {
            Error::Diverged { iteration, last_finite } => {
                assert!(iteration > 0);
                assert!(last_finite.is_finite());
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn tolerance_stops_early_and_bad_configs_rejected() {
        let w = WidthVector::new(vec![2]).unwrap();
        let zero = NetParams::zeros(1, &w);
        let ds = point(0.5, 0.0);
        let o = OptimizerConfig {
            tolerance: 1e-8,
            ..opt(0.1, 100)
        };
        let out = train(&zero, &relu(), &ds, 0.1, &LossSpec::mse(), Regularizer::WeightDecay, &o).unwrap();
        assert!(out.converged && out.trace.len() == 1);
        assert!(train(
            &zero,
            &relu(),
            &ds,
            0.1,
            &LossSpec::mse(),
            Regularizer::Pesv,
            &opt(0.0, 10)
        )
        .is_err());
        assert!(train(
            &zero,
            &relu(),
            &ds,
            0.1,
            &LossSpec::mse(),
            Regularizer::Pesv,
            &opt(0.1, 0)
        )
        .is_err());
    }

    #[test]
    fn error_measures() {
        let w = WidthVector::new(vec![3]).unwrap();
        let t = TeacherSpec::random(2, &w, relu(), 1.0, 11).unwrap();
        let ds = sample_dataset(&t, 50, 0.2, &InputDistribution::UniformBall, 5).unwrap();
        assert_eq!(empirical_error(&t.params, &relu(), &t, &ds).unwrap(), 0.0);
        let zero = NetParams::zeros(2, &w);
        assert!(empirical_error(&zero, &relu(), &t, &ds).unwrap() <= 2.0);
        assert_eq!(
            generalization_error_mc(&t.params, &relu(), &t, 100, 1).unwrap(),
            (0.0, 0.0)
        );
        let a = generalization_error_mc(&zero, &relu(), &t, 2000, 3).unwrap();
        assert_eq!(a, generalization_error_mc(&zero, &relu(), &t, 2000, 3).unwrap());
        let big = generalization_error_mc(&zero, &relu(), &t, 20_000, 4).unwrap();
        assert!((a.0 - big.0).abs() <= 3.0 * a.1.hypot(big.1));
        assert!(generalization_error_mc(&zero, &relu(), &t, 1, 3).is_err());

        let one = Dataset {
            inputs: array![[0.0, 1.0]],
            targets: array![0.0],
            noise_std: 0.0,
            seed: 0,
            teacher_hash: String::new(),
        };
        let mut g = NetParams::zeros(1, &WidthVector::new(vec![1]).unwrap());
        g.layers_mut()[0][[0, 1]] = 1.0;
        g.layers_mut()[1][[0, 0]] = 1.0;
        let zt = TeacherSpec::new(NetParams::zeros(1, &WidthVector::new(vec![1]).unwrap()), relu());
        assert_eq!(empirical_error(&g, &relu(), &zt, &one).unwrap(), 1.0);
    }

    #[test]
    fn trace_csv_format() {
        let rows = [TraceRow {
            iteration: 0,
            objective: 0.5,
            empirical_mse: 1.0,
            nu: 0.25,
        }];
        assert_eq!(
            trace_to_csv(&rows),
            "iteration,objective,empirical_mse,nu\n0,0.5,1,0.25\n"
        );
    }
}
