//! Verification suites run by `pesvlab verify`. Every suite has defaults
//! that reproduce the documented configurations.

use clap::ValueEnum;
use ndarray::Array2;
use pesvlab_core::erm::sample_unit_ball;
use pesvlab_core::erm::{
    sample_dataset, train, InputDistribution, LossSpec, OptimizerConfig, Regularizer, StepSchedule, TeacherSpec,
};
use pesvlab_core::netcore::{ActivationSpec, NetParams, WidthVector};
use pesvlab_core::oracles::{
    collinearity_report, covering_packing_lower_bound, equivalence_check_relu, lemma1_exact, lemma2_exact,
    maurey_sampling_check, pointwise_norm_check, rademacher_mc, CollinearityOptions, OracleReport, RademacherConfig,
    EQUIVALENCE_TOL, POINTWISE_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Lemmas,
    Maurey,
    Rademacher,
    Entropy,
    Pointwise,
    Collinearity,
    Equivalence,
    All,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifySection {
    #[serde(default)]
    pub lemmas: LemmaSuite,
    #[serde(default)]
    pub maurey: MaureySuite,
    #[serde(default)]
    pub rademacher: RademacherSuite,
    #[serde(default)]
    pub entropy: EntropySuite,
    #[serde(default)]
    pub pointwise: PointwiseSuite,
    #[serde(default)]
    pub collinearity: CollinearitySuite,
    #[serde(default)]
    pub equivalence: EquivalenceSuite,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LemmaSuite {
    pub lemma1_max_n: usize,
    pub lemma2_max_n: usize,
}

impl Default for LemmaSuite {
    fn default() -> Self {
        Self {
            lemma1_max_n: 40,
            lemma2_max_n: 12,
        }
    }
}

pub fn run_lemmas(s: &LemmaSuite) -> Result<Vec<OracleReport>, CliError> {
    let pairs = |max_n: usize| {
        (2..=max_n)
            .flat_map(|n| (2..=n).map(move |m| (m, n)))
            .collect::<Vec<_>>()
    };
    let l1 = pairs(s.lemma1_max_n)
        .into_par_iter()
        .map(|(m, n)| lemma1_exact(m, n))
        .collect::<Result<Vec<_>, _>>()?;
    let worst1 = l1.iter().map(|r| r.lhs1.max(r.lhs2) / r.bound).fold(0.0, f64::max);
    let fails_lhs1: Vec<(usize, usize)> = l1.iter().filter(|r| !r.pass_lhs1).map(|r| (r.m, r.n)).collect();
    let fails_lhs2: Vec<(usize, usize)> = l1.iter().filter(|r| !r.pass_lhs2).map(|r| (r.m, r.n)).collect();
    let l2 = pairs(s.lemma2_max_n)
        .into_par_iter()
        .map(|(m, n)| lemma2_exact(m, n))
        .collect::<Result<Vec<_>, _>>()?;
    let worst2 = l2.iter().map(|r| r.lhs_reduction / r.bound).fold(0.0, f64::max);
    let max_gap = l2.iter().map(|r| r.path_gap).fold(0.0, f64::max);
    let enumerated = l2.iter().filter(|r| r.lhs_enumeration.is_some()).count();
    let fails2: Vec<(usize, usize)> = l2.iter().filter(|r| !r.pass).map(|r| (r.m, r.n)).collect();
    Ok(vec![
        OracleReport::new(
            "lemma1_exact",
            json!({ "m_min": 2, "n_max": s.lemma1_max_n }),
            json!({
                "cases": l1.len(),
                "worst_ratio_to_bound": worst1,
                "lhs1_failures": fails_lhs1,
                "lhs2_failures": fails_lhs2,
            }),
            l1.iter().all(|r| r.pass),
            json!({ "bound": "5/n", "arithmetic": "exact rational" }),
        ),
        OracleReport::new(
            "lemma2_exact",
            json!({ "m_min": 2, "n_max": s.lemma2_max_n }),
            json!({
                "cases": l2.len(),
                "enumerated_cases": enumerated,
                "worst_ratio_to_bound": worst2,
                "max_path_gap": max_gap,
                "failures": fails2,
            }),
            fails2.is_empty(),
            json!({ "bound": "5m/n", "path_gap_rel": 1e-12 }),
        ),
    ])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaureySuite {
    pub trials: usize,
    pub atoms: usize,
    pub dim: usize,
    pub ms: Vec<usize>,
    pub seed: u64,
}

impl Default for MaureySuite {
    fn default() -> Self {
        Self {
            trials: 10_000,
            atoms: 10,
            dim: 10,
            ms: vec![1, 4, 16],
            seed: 0,
        }
    }
}

/// Random convex instance: `atoms` vectors uniform in `[-1, 1]^dim` with
/// weights from normalized uniforms.
pub fn random_maurey_instance(atoms: usize, dim: usize, seed: u64) -> (Array2<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let g = Array2::from_shape_fn((atoms, dim), |_| rng.random_range(-1.0..1.0));
    let mut w: Vec<f64> = (0..atoms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    let s: f64 = w.iter().sum();
    w[0] += 1.0 - s;
    (g, w)
}

pub fn run_maurey(s: &MaureySuite) -> Result<Vec<OracleReport>, CliError> {
    let pair = ndarray::array![[1.0, 0.0], [0.0, 1.0]];
    let r = maurey_sampling_check(&pair, &[0.5, 0.5], 1, s.trials, s.seed)?;
    let mut out = vec![OracleReport::new(
        "maurey_orthogonal_pair",
        json!({ "atoms": 2, "m": 1, "trials": s.trials }),
        serde_json::to_value(&r).expect("serializable"),
        (r.mean_sq_error - 0.5).abs() <= 0.02,
        json!({ "expected": 0.5, "abs_tol": 0.02 }),
    )];
    let (g, w) = random_maurey_instance(s.atoms, s.dim, s.seed);
    let runs =
        s.ms.iter()
            .map(|&m| maurey_sampling_check(&g, &w, m, s.trials, s.seed + m as u64))
            .collect::<Result<Vec<_>, _>>()?;
    let pass = runs.iter().all(|r| r.mean_sq_error <= r.bound * 1.1);
    out.push(OracleReport::new(
        "maurey_random_instance",
        json!({ "atoms": s.atoms, "dim": s.dim, "ms": s.ms, "trials": s.trials }),
        serde_json::to_value(&runs).expect("serializable"),
        pass,
        json!({ "bound": "R^2/m * 1.1" }),
    ));
    Ok(out)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RademacherSuite {
    pub widths: Vec<usize>,
    pub d: usize,
    pub n: usize,
    pub radius: f64,
    pub trials: usize,
    pub starts: usize,
    pub inner_iters: usize,
    pub seed: u64,
}

impl Default for RademacherSuite {
    fn default() -> Self {
        Self {
            widths: vec![8],
            d: 2,
            n: 64,
            radius: 1.0,
            trials: 200,
            starts: 16,
            inner_iters: 200,
            seed: 0,
        }
    }
}

pub fn run_rademacher(s: &RademacherSuite) -> Result<Vec<OracleReport>, CliError> {
    let widths = WidthVector::new(s.widths.clone())?;
    let x = sample_unit_ball(s.n, s.d, &mut ChaCha8Rng::seed_from_u64(s.seed));
    let cfg = RademacherConfig {
        trials: s.trials,
        starts: s.starts,
        inner_iters: s.inner_iters,
        seed: s.seed,
    };
    let relu = ActivationSpec::relu();
    let one = rademacher_mc(&widths, s.radius, x.view(), &relu, &cfg)?;
    let two = rademacher_mc(&widths, 2.0 * s.radius, x.view(), &relu, &cfg)?;
    let doubling = (two.mean - 2.0 * one.mean).abs() / (2.0 * one.mean).max(f64::MIN_POSITIVE);
    let inputs =
        json!({ "widths": s.widths, "d": s.d, "n": s.n, "F": s.radius, "trials": s.trials, "starts": s.starts });
    Ok(vec![
        OracleReport::new(
            "rademacher_below_bound",
            inputs.clone(),
            json!({ "mean": one.mean, "std_error": one.std_error, "bound": one.bound, "ratio": one.ratio, "c_hat": one.c_hat }),
            one.mean <= one.bound,
            json!({ "c": 1.0 }),
        ),
        OracleReport::new(
            "rademacher_homogeneity",
            inputs,
            json!({ "mean_F": one.mean, "mean_2F": two.mean, "rel_diff": doubling }),
            doubling <= 1e-9,
            json!({ "rel": 1e-9 }),
        ),
    ])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EntropySuite {
    pub widths: Vec<Vec<usize>>,
    pub d: usize,
    pub deltas: Vec<f64>,
    pub seeds: u64,
    pub samples: usize,
}

impl Default for EntropySuite {
    fn default() -> Self {
        Self {
            widths: vec![vec![1], vec![2]],
            d: 1,
            deltas: vec![0.5, 0.25],
            seeds: 20,
            samples: 2000,
        }
    }
}

pub fn run_entropy(s: &EntropySuite) -> Result<Vec<OracleReport>, CliError> {
    let mut jobs = Vec::new();
    for w in &s.widths {
        for &delta in &s.deltas {
            for seed in 0..s.seeds {
                jobs.push((w.clone(), delta, seed));
            }
        }
    }
    let relu = ActivationSpec::relu();
    let runs = jobs
        .par_iter()
        .map(|(w, delta, seed)| {
            let widths = WidthVector::new(w.clone())?;
            Ok((
                w.clone(),
                covering_packing_lower_bound(&widths, s.d, *delta, &relu, s.samples, *seed)?,
            ))
        })
        .collect::<Result<Vec<_>, pesvlab_core::Error>>()?;
    let max_packing = runs.iter().map(|(_, r)| r.packing).max().unwrap_or(0);
    let worst = runs
        .iter()
        .map(|(_, r)| (r.packing as f64).ln() - r.entropy_bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let fails: Vec<_> = runs
        .iter()
        .filter(|(_, r)| !r.pass)
        .map(|(w, r)| json!({ "widths": w, "delta": r.delta }))
        .collect();
    Ok(vec![OracleReport::new(
        "metric_entropy_packing",
        json!({ "widths": s.widths, "d": s.d, "deltas": s.deltas, "seeds": s.seeds, "samples": s.samples }),
        json!({ "runs": runs.len(), "max_packing": max_packing, "worst_log_packing_minus_bound": worst, "failures": fails }),
        fails.is_empty(),
        json!({ "pass": "ln P <= entropy bound at delta/2" }),
    )])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PointwiseSuite {
    pub nets: usize,
    pub probes: usize,
    pub max_width: usize,
    pub max_d: usize,
    pub seed: u64,
}

impl Default for PointwiseSuite {
    fn default() -> Self {
        Self {
            nets: 1000,
            probes: 100,
            max_width: 8,
            max_d: 4,
            seed: 0,
        }
    }
}

/// Random network for audits: depth in {2, 3, 4}, widths and input
/// dimension uniform, activation relu or leaky relu(0.1) alternately.
pub fn audit_network(index: usize, max_width: usize, max_d: usize, seed: u64) -> (NetParams, ActivationSpec) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    let depth = rng.random_range(2..=4);
    let d = rng.random_range(1..=max_d);
    let widths: Vec<usize> = (0..depth - 1).map(|_| rng.random_range(1..=max_width)).collect();
    let p = NetParams::random_uniform(d, &WidthVector::new(widths).expect("positive widths"), &mut rng);
    let act = if index.is_multiple_of(2) {
        ActivationSpec::relu()
    } else {
        ActivationSpec::leaky_relu(0.1).expect("valid slope")
    };
    (p, act)
}

pub fn run_pointwise(s: &PointwiseSuite) -> Result<Vec<OracleReport>, CliError> {
    let results = (0..s.nets)
        .into_par_iter()
        .map(|i| {
            let (p, act) = audit_network(i, s.max_width, s.max_d, s.seed);
            pointwise_norm_check(&p, &act, s.probes, s.seed.wrapping_add(i as u64))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let max_ratio = results.iter().map(|r| r.max_ratio).fold(0.0, f64::max);
    Ok(vec![OracleReport::new(
        "pointwise_norm_bound",
        json!({ "nets": s.nets, "probes": s.probes, "max_width": s.max_width, "depths": [2, 3, 4] }),
        json!({ "max_ratio": max_ratio, "failures": results.iter().filter(|r| !r.pass).count() }),
        results.iter().all(|r| r.pass),
        json!({ "ratio_max": 1.0 + POINTWISE_TOL }),
    )])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CollinearitySuite {
    pub d: usize,
    pub n: usize,
    pub widths: Vec<usize>,
    pub lambda: f64,
    pub iters: usize,
    pub eta0: f64,
    pub tau: f64,
    pub seeds: u64,
    pub sigma_eps: f64,
    pub teacher_widths: Vec<usize>,
    pub teacher_seed: u64,
    pub data_seed: u64,
    pub cosine_min: f64,
    pub required_seeds: u64,
}

impl Default for CollinearitySuite {
    fn default() -> Self {
        Self {
            d: 2,
            n: 16,
            widths: vec![8],
            lambda: 0.05,
            iters: 200_000,
            eta0: 0.1,
            tau: 1000.0,
            seeds: 5,
            sigma_eps: 0.1,
            teacher_widths: vec![4],
            teacher_seed: 2024,
            data_seed: 7,
            cosine_min: 0.99,
            required_seeds: 4,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CollinearityOutcome {
    pub per_seed_min: Vec<f64>,
    pub passing_seeds: u64,
    pub excluded_inactive: Vec<usize>,
    pub excluded_boundary: Vec<usize>,
    pub pass: bool,
}

pub fn collinearity_experiment(s: &CollinearitySuite) -> Result<CollinearityOutcome, CliError> {
    let relu = ActivationSpec::relu();
    let teacher = TeacherSpec::random(
        s.d,
        &WidthVector::new(s.teacher_widths.clone())?,
        relu.clone(),
        1.0,
        s.teacher_seed,
    )?;
    let ds = sample_dataset(&teacher, s.n, s.sigma_eps, &InputDistribution::UniformBall, s.data_seed)?;
    let widths = WidthVector::new(s.widths.clone())?;
    let reports = (0..s.seeds)
        .into_par_iter()
        .map(|seed| {
            let init = NetParams::random_uniform(s.d, &widths, &mut ChaCha8Rng::seed_from_u64(seed));
            let opt = OptimizerConfig {
                schedule: StepSchedule::InverseSqrt {
                    eta0: s.eta0,
                    tau: s.tau,
                },
                max_iters: s.iters,
                tolerance: 0.0,
                seed,
            };
            let out = train(&init, &relu, &ds, s.lambda, &LossSpec::mse(), Regularizer::Pesv, &opt)?;
            collinearity_report(&out.params, &relu, ds.inputs.view(), &CollinearityOptions::default())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let per_seed_min: Vec<f64> = reports.iter().map(|r| r.global_min).collect();
    let passing_seeds = per_seed_min.iter().filter(|&&c| c >= s.cosine_min).count() as u64;
    Ok(CollinearityOutcome {
        per_seed_min,
        passing_seeds,
        excluded_inactive: reports.iter().map(|r| r.excluded_inactive.len()).collect(),
        excluded_boundary: reports.iter().map(|r| r.excluded_boundary.len()).collect(),
        pass: passing_seeds >= s.required_seeds,
    })
}

pub fn run_collinearity(s: &CollinearitySuite) -> Result<Vec<OracleReport>, CliError> {
    let out = collinearity_experiment(s)?;
    Ok(vec![OracleReport::new(
        "collinearity",
        serde_json::to_value(s).expect("serializable"),
        serde_json::to_value(&out).expect("serializable"),
        out.pass,
        json!({
            "abs_cosine_min": s.cosine_min,
            "required_seeds": s.required_seeds,
            "note": "optimizer reaches a stationary point, not necessarily a global minimum",
        }),
    )
    .soft()])
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EquivalenceSuite {
    pub d: usize,
    pub n: usize,
    pub widths: Vec<usize>,
    pub lambda: f64,
    pub iters: usize,
    pub eta0: f64,
    pub tau: f64,
    pub seeds: Vec<u64>,
    pub sigma_eps: f64,
    pub teacher_widths: Vec<usize>,
    pub teacher_seed: u64,
    pub data_seed: u64,
}

impl Default for EquivalenceSuite {
    fn default() -> Self {
        Self {
            d: 2,
            n: 32,
            widths: vec![16],
            lambda: 0.01,
            iters: 100_000,
            eta0: 0.1,
            tau: 1000.0,
            seeds: vec![1, 2, 3, 4, 5],
            sigma_eps: 0.1,
            teacher_widths: vec![4],
            teacher_seed: 2024,
            data_seed: 11,
        }
    }
}

pub fn equivalence_experiment(s: &EquivalenceSuite) -> Result<pesvlab_core::oracles::EquivalenceReport, CliError> {
    let relu = ActivationSpec::relu();
    let teacher = TeacherSpec::random(
        s.d,
        &WidthVector::new(s.teacher_widths.clone())?,
        relu,
        1.0,
        s.teacher_seed,
    )?;
    let ds = sample_dataset(&teacher, s.n, s.sigma_eps, &InputDistribution::UniformBall, s.data_seed)?;
    let opt = OptimizerConfig {
        schedule: StepSchedule::InverseSqrt {
            eta0: s.eta0,
            tau: s.tau,
        },
        max_iters: s.iters,
        tolerance: 0.0,
        seed: 0,
    };
    Ok(equivalence_check_relu(
        &ds,
        s.lambda,
        &WidthVector::new(s.widths.clone())?,
        &s.seeds,
        &opt,
    )?)
}

pub fn run_equivalence(s: &EquivalenceSuite) -> Result<Vec<OracleReport>, CliError> {
    let r = equivalence_experiment(s)?;
    let pass = r.pass;
    Ok(vec![OracleReport::new(
        "equivalence",
        serde_json::to_value(s).expect("serializable"),
        serde_json::to_value(&r).expect("serializable"),
        pass,
        json!({ "median_gap_max": EQUIVALENCE_TOL, "weight_decay_lambda": "lambda/2", "mixed_max_lambda": "2 lambda sqrt(nu_pesv)" }),
    )
    .soft()])
}

pub fn run_suite(suite: Suite, v: &VerifySection) -> Result<Vec<OracleReport>, CliError> {
    Ok(match suite {
        Suite::Lemmas => run_lemmas(&v.lemmas)?,
        Suite::Maurey => run_maurey(&v.maurey)?,
        Suite::Rademacher => run_rademacher(&v.rademacher)?,
        Suite::Entropy => run_entropy(&v.entropy)?,
        Suite::Pointwise => run_pointwise(&v.pointwise)?,
        Suite::Collinearity => run_collinearity(&v.collinearity)?,
        Suite::Equivalence => run_equivalence(&v.equivalence)?,
        Suite::All => {
            let mut all = Vec::new();
            for s in [
                Suite::Lemmas,
                Suite::Maurey,
                Suite::Rademacher,
                Suite::Entropy,
                Suite::Pointwise,
                Suite::Collinearity,
                Suite::Equivalence,
            ] {
                all.extend(run_suite(s, v)?);
            }
            all
        }
    })
}
