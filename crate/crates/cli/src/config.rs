use std::path::{Path, PathBuf};

use pesvlab_core::erm::{LossKind, Regularizer, StepSchedule};
use pesvlab_core::netcore::{ActivationSpec, WidthVector};
use serde::Deserialize;

use crate::error::CliError;
use crate::suites::VerifySection;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub problem: Option<ProblemSection>,
    pub network: Option<NetworkSection>,
    #[serde(default)]
    pub loss: LossSection,
    #[serde(default)]
    pub optimizer: OptimizerSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub verify: VerifySection,
    #[serde(default)]
    pub sweep: SweepSection,
    /// Directory of the config file; relative paths resolve against it.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub d: usize,
    pub n: usize,
    #[serde(default)]
    pub sigma_eps: f64,
    #[serde(default)]
    pub data_seed: u64,
    /// Saved teacher network; a random teacher is drawn when absent.
    pub teacher: Option<PathBuf>,
    #[serde(default = "default_teacher_widths")]
    pub teacher_widths: Vec<usize>,
    #[serde(default = "one")]
    pub teacher_norm: f64,
    #[serde(default)]
    pub teacher_seed: u64,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActivationName {
    Relu,
    Identity,
    LeakyRelu,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum WidthsSpec {
    List(Vec<usize>),
    Text(String),
}

impl WidthsSpec {
    /// `"a..b"` (inclusive), `"a,b,c"` or an explicit list.
    pub fn resolve(&self) -> Result<Vec<usize>, CliError> {
        let v = match self {
            WidthsSpec::List(v) => v.clone(),
            WidthsSpec::Text(s) => parse_widths(s)?,
        };
        if v.is_empty() {
            return Err(CliError::Usage("width list is empty".into()));
        }
        if v.contains(&0) {
            return Err(CliError::Usage("widths must be positive".into()));
        }
        if v.windows(2).any(|w| w[0] >= w[1]) {
            return Err(CliError::Usage("widths must be strictly ascending".into()));
        }
        Ok(v)
    }
}

pub fn parse_widths(s: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::Usage(format!("cannot parse width list '{s}'; use 'a..b' or 'a,b,c'"));
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((a, b)) = s.split_once("..") {
        let a: usize = a.trim().parse().map_err(|_| bad())?;
        let b: usize = b.trim().parse().map_err(|_| bad())?;
        return Ok((a..=b).collect());
    }
    s.split(',').map(|t| t.trim().parse().map_err(|_| bad())).collect()
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkSection {
    /// Student hidden widths for `train`.
    pub widths: Option<Vec<usize>>,
    #[serde(default = "default_activation")]
    pub activation: ActivationName,
    pub alpha: Option<f64>,
    /// Width grid for `bound` and `sweep`.
    pub sweep_widths: Option<WidthsSpec>,
    /// Shape multiplied by each swept width; defaults to `[1]`.
    pub pattern: Option<Vec<usize>>,
}

impl NetworkSection {
    pub fn activation(&self) -> Result<ActivationSpec, CliError> {
        match (self.activation, self.alpha) {
            (ActivationName::Relu, None) => Ok(ActivationSpec::relu()),
            (ActivationName::Identity, None) => Ok(ActivationSpec::identity()),
            (ActivationName::LeakyRelu, Some(a)) => Ok(ActivationSpec::leaky_relu(a)?),
            (ActivationName::LeakyRelu, None) => {
                Err(CliError::Config("network.alpha is required for leaky_relu".into()))
            }
            (_, Some(_)) => Err(CliError::Config("network.alpha only applies to leaky_relu".into())),
        }
    }

    pub fn widths(&self) -> Result<WidthVector, CliError> {
        let w = self
            .widths
            .clone()
            .ok_or_else(|| CliError::Config("network.widths is required".into()))?;
        Ok(WidthVector::new(w)?)
    }

    pub fn pattern(&self) -> Result<WidthVector, CliError> {
        Ok(WidthVector::new(self.pattern.clone().unwrap_or_else(|| vec![1]))?)
    }

    pub fn sweep_widths(&self) -> Result<Vec<usize>, CliError> {
        self.sweep_widths
            .as_ref()
            .ok_or_else(|| CliError::Config("network.sweep_widths is required".into()))?
            .resolve()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossName {
    Mse,
    Logistic,
    Huber,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LossSection {
    #[serde(default = "default_loss")]
    pub kind: LossName,
    pub delta: Option<f64>,
}

impl Default for LossSection {
    fn default() -> Self {
        Self {
            kind: LossName::Mse,
            delta: None,
        }
    }
}

impl LossSection {
    pub fn kind(&self) -> Result<LossKind, CliError> {
        match (self.kind, self.delta) {
            (LossName::Mse, None) => Ok(LossKind::Mse),
            (LossName::Logistic, None) => Ok(LossKind::Logistic),
            (LossName::Huber, Some(delta)) => Ok(LossKind::Huber { delta }),
            (LossName::Huber, None) => Err(CliError::Config("loss.delta is required for huber".into())),
            (_, Some(_)) => Err(CliError::Config("loss.delta only applies to huber".into())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizerName {
    Pesv,
    WeightDecay,
    MixedMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleName {
    InverseSqrt,
    Constant,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerSection {
    #[serde(default = "default_regularizer")]
    pub regularizer: RegularizerName,
    #[serde(default)]
    pub lambda: f64,
    #[serde(default = "one")]
    pub p: f64,
    #[serde(default = "two")]
    pub q: f64,
    #[serde(default = "default_schedule")]
    pub schedule: ScheduleName,
    #[serde(default = "default_eta")]
    pub eta0: f64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_iters")]
    pub max_iters: usize,
    #[serde(default)]
    pub tolerance: f64,
    #[serde(default)]
    pub init_seed: u64,
}

impl Default for OptimizerSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

impl OptimizerSection {
    pub fn regularizer(&self) -> Regularizer {
        match self.regularizer {
            RegularizerName::Pesv => Regularizer::Pesv,
            RegularizerName::WeightDecay => Regularizer::WeightDecay,
            RegularizerName::MixedMax => Regularizer::MixedMax { p: self.p, q: self.q },
        }
    }

    pub fn schedule(&self) -> StepSchedule {
        match self.schedule {
            ScheduleName::InverseSqrt => StepSchedule::InverseSqrt {
                eta0: self.eta0,
                tau: self.tau,
            },
            ScheduleName::Constant => StepSchedule::Constant { eta: self.eta0 },
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    #[serde(default = "one")]
    pub c: f64,
    #[serde(default = "one", rename = "C")]
    pub big_c: f64,
    #[serde(default = "one", rename = "C1")]
    pub c1: f64,
    /// Target norm; the teacher's PeSV norm when absent.
    pub target_norm: Option<f64>,
}

impl Default for BoundsSection {
    fn default() -> Self {
        toml::from_str("").expect("defaults")
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    #[serde(default = "one_usize")]
    pub trials: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { trials: 1 }
    }
}

fn one() -> f64 {
    1.0
}
fn two() -> f64 {
    2.0
}
fn one_usize() -> usize {
    1
}
fn default_teacher_widths() -> Vec<usize> {
    vec![4]
}
fn default_n_test() -> usize {
    10_000
}
fn default_activation() -> ActivationName {
    ActivationName::Relu
}
fn default_loss() -> LossName {
    LossName::Mse
}
fn default_regularizer() -> RegularizerName {
    RegularizerName::Pesv
}
fn default_schedule() -> ScheduleName {
    ScheduleName::InverseSqrt
}
fn default_eta() -> f64 {
    0.1
}
fn default_tau() -> f64 {
    1000.0
}
fn default_iters() -> usize {
    10_000
}

impl Config {
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, CliError> {
        let mut cfg: Config = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read config '{}': {e}", path.display())))?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    pub fn problem(&self) -> Result<&ProblemSection, CliError> {
        self.problem
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [problem] section".into()))
    }

    pub fn network(&self) -> Result<&NetworkSection, CliError> {
        self.network
            .as_ref()
            .ok_or_else(|| CliError::Config("missing [network] section".into()))
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}
