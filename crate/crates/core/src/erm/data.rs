use std::fmt::Write as _;

use ndarray::{s, Array1, Array2, ArrayView2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use sha2::{Digest, Sha256};

use crate::netcore::{forward, network_to_json, with_bias_column, ActivationSpec, NetParams, WidthVector};
use crate::norms::pesv_norm;
use crate::{Error, Result};

/// Target network `f*` with its PeSV norm, used as the target norm proxy.
#[derive(Clone, Debug, PartialEq)]
pub struct TeacherSpec {
    pub params: NetParams,
    pub activation: ActivationSpec,
    pub nu: f64,
}

impl TeacherSpec {
    pub fn new(params: NetParams, activation: ActivationSpec) -> Self {
        let nu = pesv_norm(&params);
        Self { params, activation, nu }
    }

    /// Random teacher rescaled through its output row to `ν = target_nu`.
    pub fn random(
        d: usize,
        widths: &WidthVector,
        activation: ActivationSpec,
        target_nu: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(target_nu >= 0.0 && target_nu.is_finite()) {
            return Err(Error::Domain(format!(
                "teacher norm must be nonnegative, got {target_nu}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = NetParams::random_uniform(d, widths, &mut rng);
        let nu = pesv_norm(&params);
        if nu > 0.0 {
            let last = params.depth() - 1;
            params.layers_mut()[last] *= target_nu / nu;
        }
        Ok(Self::new(params, activation))
    }

    pub fn eval(&self, inputs: ArrayView2<'_, f64>) -> Result<Array1<f64>> {
        forward(&self.params, &self.activation, inputs)
    }

    /// SHA-256 of the serialized teacher, hex encoded.
    pub fn hash(&self) -> String {
        hex::encode(Sha256::digest(
            network_to_json(&self.params, &self.activation).as_bytes(),
        ))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum InputDistribution {
    /// Uniform on the closed unit ball of `R^d`.
    UniformBall,
    /// Fixed raw inputs, one row per point, each of norm at most 1.
    Given(Array2<f64>),
}

/// `n` samples `x̃_i = (x_i, 1)` with `y_i = f*(x_i) + ε_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub inputs: Array2<f64>,
    pub targets: Array1<f64>,
    pub noise_std: f64,
    pub seed: u64,
    pub teacher_hash: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs.ncols() - 1
    }

    /// CSV with a `#` comment line carrying seed, noise level and teacher
    /// hash, then columns `x_1..x_d,bias,y`.
    pub fn to_csv(&self) -> String {
        let d = self.input_dim();
        let mut out = format!(
            "# seed={} sigma_eps={} teacher_sha256={}\n",
            self.seed, self.noise_std, self.teacher_hash
        );
        for j in 1..=d {
            write!(out, "x_{j},").expect("write to string");
        }
        out.push_str("bias,y\n");
        for (row, y) in self.inputs.rows().into_iter().zip(self.targets.iter()) {
            for v in row {
                write!(out, "{v},").expect("write to string");
            }
            writeln!(out, "{y}").expect("write to string");
        }
        out
    }
}

/// `n` points uniform on the unit ball of `R^d`: Gaussian direction,
/// radius `U^{1/d}`.
pub fn sample_unit_ball<R: Rng + ?Sized>(n: usize, d: usize, rng: &mut R) -> Array2<f64> {
    let mut x = Array2::zeros((n, d));
    for mut row in x.rows_mut() {
        loop {
            row.mapv_inplace(|_| -> f64 { StandardNormal.sample(rng) });
            let norm = row.dot(&row).sqrt();
            if norm > 0.0 {
                let r: f64 = rng.random::<f64>().powf(1.0 / d as f64);
                row.mapv_inplace(|v| (v / norm * r).clamp(-1.0, 1.0));
                break;
            }
        }
    }
    x
}

pub fn sample_dataset(
    teacher: &TeacherSpec,
    n: usize,
    noise_std: f64,
    distribution: &InputDistribution,
    seed: u64,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::Domain("sample size must be at least 1".into()));
    }
    if !(noise_std >= 0.0 && noise_std.is_finite()) {
        return Err(Error::Domain(format!(
            "noise level must be nonnegative, got {noise_std}"
        )));
    }
    let d = teacher.params.input_dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = match distribution {
        InputDistribution::UniformBall => sample_unit_ball(n, d, &mut rng),
        InputDistribution::Given(x) => {
            if x.nrows() != n || x.ncols() != d {
                return Err(Error::Shape(format!(
                    "given inputs are {}×{}, expected {n}×{d}",
                    x.nrows(),
                    x.ncols()
                )));
            }
            if let Some(i) = x.rows().into_iter().position(|r| r.dot(&r) > 1.0 + 1e-12) {
                return Err(Error::Domain(format!("given input {i} lies outside the unit ball")));
            }
            x.clone()
        }
    };
    let inputs = with_bias_column(raw.view());
    let mut targets = teacher.eval(inputs.view())?;
    if noise_std > 0.0 {
        let noise = Normal::new(0.0, noise_std).expect("valid std");
        targets.mapv_inplace(|v| v + noise.sample(&mut rng));
    }
    Ok(Dataset {
        inputs,
        targets,
        noise_std,
        seed,
        teacher_hash: teacher.hash(),
    })
}

/// Raw inputs (without the bias column) of a dataset.
pub fn raw_inputs(dataset: &Dataset) -> Array2<f64> {
    dataset.inputs.slice(s![.., ..dataset.input_dim()]).to_owned()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn teacher() -> TeacherSpec {
        TeacherSpec::random(
            3,
            &WidthVector::new(vec![4, 3]).unwrap(),
            ActivationSpec::relu(),
            1.0,
            5,
        )
        .unwrap()
    }

    #[test]
    fn teacher_norm_matches() {
        let t = teacher();
        assert_eq!(t.nu, pesv_norm(&t.params));
        assert!((t.nu - 1.0).abs() < 1e-12);
        assert_eq!(t.hash().len(), 64);
    }

    #[test]
    fn zero_teacher_gives_zero_targets() {
        let w = WidthVector::new(vec![3]).unwrap();
        let t = TeacherSpec::new(NetParams::zeros(2, &w), ActivationSpec::relu());
        let ds = sample_dataset(&t, 50, 0.0, &InputDistribution::UniformBall, 1).unwrap();
        assert!(ds.targets.iter().all(|&y| y == 0.0));
    }

    #[test]
    fn noiseless_targets_are_teacher_outputs() {
        let t = teacher();
        let ds = sample_dataset(&t, 100, 0.0, &InputDistribution::UniformBall, 2).unwrap();
        assert_eq!(ds.targets, t.eval(ds.inputs.view()).unwrap());
        assert!(ds
            .inputs
            .rows()
            .into_iter()
            .all(|r| r.slice(s![..3]).dot(&r.slice(s![..3])) <= 1.0));
        assert!(ds.inputs.column(3).iter().all(|&b| b == 1.0));
    }

    #[test]
    fn seeded_sampling_is_reproducible() {
        let t = teacher();
        let a = sample_dataset(&t, 40, 0.3, &InputDistribution::UniformBall, 9).unwrap();
        let b = sample_dataset(&t, 40, 0.3, &InputDistribution::UniformBall, 9).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        let c = sample_dataset(&t, 40, 0.3, &InputDistribution::UniformBall, 10).unwrap();
        assert_ne!(a.to_csv(), c.to_csv());
        let csv = a.to_csv();
        let mut lines = csv.lines();
        assert!(lines
            .next()
            .unwrap()
            .starts_with("# seed=9 sigma_eps=0.3 teacher_sha256="));
        assert_eq!(lines.next().unwrap(), "x_1,x_2,x_3,bias,y");
        assert_eq!(csv.lines().count(), 42);
    }

    #[test]
    fn noise_statistics() {
        let t = teacher();
        let ds = sample_dataset(&t, 20_000, 0.5, &InputDistribution::UniformBall, 4).unwrap();
        let eps = &ds.targets - &t.eval(ds.inputs.view()).unwrap();
        let mean = eps.mean().unwrap();
        let var = eps.mapv(|e| (e - mean).powi(2)).mean().unwrap();
        assert!(mean.abs() < 0.02 && (var.sqrt() - 0.5).abs() < 0.02);
    }

    #[test]
    fn ball_radius_distribution() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let x = sample_unit_ball(20_000, 2, &mut rng);
        // P(‖x‖ ≤ 1/2) = 1/4 in two dimensions
        let inner = x.rows().into_iter().filter(|r| r.dot(r) <= 0.25).count() as f64 / 20_000.0;
        assert!((inner - 0.25).abs() < 0.015);
    }

    #[test]
    fn given_inputs_validated() {
        let t = teacher();
        let bad = Array2::from_elem((2, 3), 0.9);
        assert!(sample_dataset(&t, 2, 0.0, &InputDistribution::Given(bad), 0).is_err());
        let ok = Array2::from_elem((2, 3), 0.1);
        let ds = sample_dataset(&t, 2, 0.0, &InputDistribution::Given(ok.clone()), 0).unwrap();
        assert_eq!(raw_inputs(&ds), ok);
        assert!(sample_dataset(&t, 3, 0.0, &InputDistribution::Given(ok), 0).is_err());
        assert!(sample_dataset(&t, 0, 0.0, &InputDistribution::UniformBall, 0).is_err());
    }
}
