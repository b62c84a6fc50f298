//! Closed-form approximation, complexity and generalization bounds, and the
//! double-descent curve of the encompassing bound in width.
//!
//! Logarithms are natural throughout. Universal constants (`c`, `C`, `C₁`)
//! are parameters with default 1 and are echoed in every report.

use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::netcore::{max_nondecreasing_component, WidthVector};
use crate::{Error, Result};

/// Problem and constant settings shared by every bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConfig {
    pub n: f64,
    pub d: usize,
    pub depth: usize,
    pub lipschitz: f64,
    pub sigma_eps: f64,
    /// Target norm; the teacher's PeSV norm stands in for it.
    pub target_norm: f64,
    pub c: f64,
    pub big_c: f64,
    pub c1: f64,
}

impl Default for BoundConfig {
    fn default() -> Self {
        Self {
            n: 1e4,
            d: 1,
            depth: 2,
            lipschitz: 1.0,
            sigma_eps: 0.1,
            target_norm: 1.0,
            c: 1.0,
            big_c: 1.0,
            c1: 1.0,
        }
    }
}

impl BoundConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.n >= 2.0 && self.n.is_finite()) {
            return Err(Error::Domain(format!("n must be at least 2, got {}", self.n)));
        }
        if self.d == 0 || self.depth < 2 {
            return Err(Error::Domain(format!(
                "need d ≥ 1 and depth ≥ 2, got d={} depth={}",
                self.d, self.depth
            )));
        }
        if !(self.lipschitz > 0.0 && self.lipschitz.is_finite()) {
            return Err(Error::Domain(format!(
                "activation Lipschitz constant must be positive, got {}",
                self.lipschitz
            )));
        }
        for (name, v) in [
            ("sigma_eps", self.sigma_eps),
            ("target_norm", self.target_norm),
            ("c", self.c),
            ("C", self.big_c),
            ("C1", self.c1),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!("{name} must be finite and nonnegative, got {v}")));
            }
        }
        Ok(())
    }

    /// `D_σ = L_σ^L`.
    pub fn d_sigma(&self) -> f64 {
        self.lipschitz.powi(self.depth as i32)
    }

    fn rate(&self) -> f64 {
        (self.n.ln() / self.n).sqrt()
    }

    fn check_widths(&self, widths: &WidthVector) -> Result<()> {
        self.validate()?;
        if widths.depth() != self.depth {
            return Err(Error::Inconsistent(format!(
                "width vector of depth {} used with configured depth {}",
                widths.depth(),
                self.depth
            )));
        }
        Ok(())
    }

    /// `max{6 D_σ, 2^L c L_σ^{L-1} √d}`.
    fn lambda_envelope(&self) -> f64 {
        let l = self.depth as i32;
        (6.0 * self.d_sigma()).max(2f64.powi(l) * self.c * self.lipschitz.powi(l - 1) * (self.d as f64).sqrt())
    }

    /// `max{12 D_σ, 2^{L+1} c L_σ^{L-1} √d}`.
    fn variance_envelope(&self) -> f64 {
        2.0 * self.lambda_envelope()
    }

    fn noise_plus_signal(&self) -> f64 {
        self.sigma_eps * self.sigma_eps + self.target_norm * self.target_norm
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Over,
    Under,
    Encompassing,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Over => "over",
            Regime::Under => "under",
            Regime::Encompassing => "encompassing",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bias_term: f64,
    pub variance_term: f64,
    pub regime: Regime,
    pub lambda_used: f64,
    pub total: f64,
    pub widths: Vec<usize>,
    /// For the overparametrized bound, whether its width condition on
    /// `H(m̄)` holds.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regime_condition: Option<bool>,
    pub config: BoundConfig,
}

impl BoundReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("serializable")
    }
}

/// Constants describing a loss for [`gen_bound_general_loss`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossConstants {
    pub l0: f64,
    pub l1y: f64,
    pub b: f64,
    pub gamma: f64,
}

/// `H(m̄) = Σ_{i=1}^{L-1} (√5 L_σ)^{L-1-i} / √(m̄↑_i)`.
pub fn h_of_m(widths: &WidthVector, lipschitz: f64) -> f64 {
    let up = max_nondecreasing_component(widths);
    let k = up.as_slice().len();
    let base = 5f64.sqrt() * lipschitz;
    up.as_slice()
        .iter()
        .enumerate()
        .map(|(i, &m)| base.powi((k - 1 - i) as i32) / (m as f64).sqrt())
        .sum()
}

/// L² approximation error bound `H(m̄)(R+2)M` for inputs of radius `R`.
pub fn approx_bound_l2(widths: &WidthVector, lipschitz: f64, radius: f64, target_norm: f64) -> Result<f64> {
    if !(radius > 0.0) {
        return Err(Error::Domain(format!("support radius must be positive, got {radius}")));
    }
    Ok(h_of_m(widths, lipschitz) * (radius + 2.0) * target_norm)
}

/// Sup-norm approximation bound for deep relu networks of depth `L > 20`
/// and width `M > 162`.
pub fn approx_bound_inf_relu(depth: usize, width: usize, d: usize, target_norm: f64, c_d: f64) -> Result<f64> {
    if depth <= 20 || width <= 162 || d == 0 {
        return Err(Error::Domain(format!(
            "need depth > 20, width > 162, d ≥ 1; got {depth}, {width}, {d}"
        )));
    }
    let l = (depth - 20) as f64;
    let m = width as f64;
    let k = (m - 162.0).powi(2) * l * l * (m.ln() / 3f64.ln() - 4.0);
    Ok(c_d * target_norm * k.powf(-1.0 / d as f64))
}

/// Sup-norm metric entropy bound of the unit-PeSV-ball class at scale `δ`:
/// `(d m₁ + Π m_i) ln(1 + 4 Π_{i≤L-2} m_i L_σ^{L-1} / δ)`.
pub fn metric_entropy_bound(delta: f64, widths: &WidthVector, d: usize, lipschitz: f64) -> Result<f64> {
    if !(delta > 0.0) {
        return Err(Error::Domain(format!("scale must be positive, got {delta}")));
    }
    let m = widths.as_slice();
    let params = (d * m[0]) as f64 + widths.product();
    let lead = widths.product_without_last() * lipschitz.powi(m.len() as i32);
    Ok(params * (4.0 * lead / delta).ln_1p())
}

/// `2^{L-1} c L_σ^{L-1} F √(d n)`, bounding the unnormalized Rademacher
/// sum of the PeSV ball of radius `F` over `n` points in the unit ball.
pub fn rademacher_bound(widths: &WidthVector, radius: f64, d: usize, n: f64, lipschitz: f64, c: f64) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::Domain(format!("radius must be nonnegative, got {radius}")));
    }
    let k = (widths.depth() - 1) as i32;
    Ok(2f64.powi(k) * c * lipschitz.powi(k) * radius * (d as f64 * n).sqrt())
}

/// `δ_n = (2L_σ)^{L-1} (Π m_i) d ln n / n`.
pub fn delta_n(n: f64, d: usize, widths: &WidthVector, lipschitz: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::Domain(format!("n must be at least 2, got {n}")));
    }
    let k = (widths.depth() - 1) as i32;
    Ok((2.0 * lipschitz).powi(k) * widths.product() * d as f64 * n.ln() / n)
}

/// `λ₁ = max{6D_σ, 2^L c L_σ^{L-1} √d} σ_ε √(ln n / n)`.
pub fn lambda_overparam(cfg: &BoundConfig) -> Result<f64> {
    cfg.validate()?;
    Ok(cfg.lambda_envelope() * cfg.sigma_eps * cfg.rate())
}

/// `λ₂ = C₁ σ_ε max{δ_n, H(m̄)²}`.
pub fn lambda_underparam(cfg: &BoundConfig, widths: &WidthVector) -> Result<f64> {
    cfg.check_widths(widths)?;
    let h = h_of_m(widths, cfg.lipschitz);
    Ok(cfg.c1 * cfg.sigma_eps * delta_n(cfg.n, cfg.d, widths, cfg.lipschitz)?.max(h * h))
}

fn over_variance(cfg: &BoundConfig) -> f64 {
    cfg.variance_envelope() * cfg.rate()
}

fn under_variance(cfg: &BoundConfig, widths: &WidthVector) -> f64 {
    widths.product() * cfg.d as f64 * cfg.n.ln() / cfg.n
}

fn report(
    cfg: &BoundConfig,
    widths: &WidthVector,
    bias_term: f64,
    variance_term: f64,
    regime: Regime,
    lambda_used: f64,
) -> BoundReport {
    BoundReport {
        bias_term,
        variance_term,
        regime,
        lambda_used,
        total: cfg.big_c * (bias_term + variance_term),
        widths: widths.as_slice().to_vec(),
        regime_condition: None,
        config: cfg.clone(),
    }
}

/// Overparametrized generalization bound with `λ = λ₁`.
pub fn gen_bound_over(cfg: &BoundConfig, widths: &WidthVector) -> Result<BoundReport> {
    cfg.check_widths(widths)?;
    let h = h_of_m(widths, cfg.lipschitz);
    let m2 = cfg.target_norm * cfg.target_norm;
    let mut r = report(
        cfg,
        widths,
        h * h * m2,
        over_variance(cfg) * cfg.noise_plus_signal(),
        Regime::Over,
        lambda_overparam(cfg)?,
    );
    r.regime_condition = Some(cfg.c1 > 0.0 && h <= (cfg.lambda_envelope() / cfg.c1).sqrt());
    Ok(r)
}

/// Underparametrized generalization bound with `λ = λ₂`.
pub fn gen_bound_under(cfg: &BoundConfig, widths: &WidthVector) -> Result<BoundReport> {
    cfg.check_widths(widths)?;
    let h = h_of_m(widths, cfg.lipschitz);
    let m2 = cfg.target_norm * cfg.target_norm;
    Ok(report(
        cfg,
        widths,
        h * h * m2,
        cfg.noise_plus_signal() * under_variance(cfg, widths),
        Regime::Under,
        lambda_underparam(cfg, widths)?,
    ))
}

/// Bound valid for every width vector, taking the smaller of the two
/// variance branches; `regime` names the branch that is active.
pub fn gen_bound_encompassing(cfg: &BoundConfig, widths: &WidthVector) -> Result<BoundReport> {
    let over = gen_bound_over(cfg, widths)?;
    let under = gen_bound_under(cfg, widths)?;
    let lambda = over.lambda_used.max(under.lambda_used);
    let mut pick = if under.total <= over.total { under } else { over };
    pick.lambda_used = lambda;
    pick.regime_condition = None;
    Ok(pick)
}

/// Encompassing bound for a general loss with horizon `T`. The bias term
/// is first order in `H(m̄) M`.
pub fn gen_bound_general_loss(
    cfg: &BoundConfig,
    loss: &LossConstants,
    widths: &WidthVector,
    horizon: f64,
) -> Result<BoundReport> {
    cfg.check_widths(widths)?;
    if !(horizon > 0.0) {
        return Err(Error::Domain(format!("horizon must be positive, got {horizon}")));
    }
    let l = cfg.depth as i32;
    let h = h_of_m(widths, cfg.lipschitz);
    let env = (12.0 * loss.l1y * cfg.d_sigma())
        .max(2f64.powi(l + 2) * cfg.c * loss.l1y * cfg.lipschitz.powi(l - 1) * (cfg.d as f64).sqrt());
    let over = env * cfg.rate();
    let under = under_variance(cfg, widths);
    let regime = if under <= over { Regime::Under } else { Regime::Over };
    let lambda = lambda_overparam(cfg)?.max(lambda_underparam(cfg, widths)?);
    Ok(report(
        cfg,
        widths,
        loss.l0 * h * cfg.target_norm + 2.0 * loss.b * horizon,
        cfg.noise_plus_signal() * over.min(under),
        regime,
        lambda,
    ))
}

/// Minimax lower bound shape `C / √(n ln n)`.
pub fn lower_bound_shape(n: f64, big_c: f64) -> Result<f64> {
    if !(n >= 2.0) {
        return Err(Error::Domain(format!("n must be at least 2, got {n}")));
    }
    Ok(big_c / (n * n.ln()).sqrt())
}

/// Relu specialization of the encompassing bound with every constant
/// collapsed: `C(H(m̄)² M² + (σ_ε² + M²) min(√(ln n/n), Π m_i d ln n / n))`.
pub fn gen_bound_relu_simplified(cfg: &BoundConfig, widths: &WidthVector) -> Result<f64> {
    cfg.check_widths(widths)?;
    let h = h_of_m(widths, 1.0);
    let m2 = cfg.target_norm * cfg.target_norm;
    Ok(cfg.big_c * (h * h * m2 + cfg.noise_plus_signal() * cfg.rate().min(under_variance(cfg, widths))))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtremumKind {
    Min,
    Max,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extremum {
    pub kind: ExtremumKind,
    pub width: usize,
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub curve: Vec<(usize, BoundReport)>,
    /// Smallest swept width at which the overparametrized branch is active.
    pub saturation_width: Option<usize>,
    pub extrema: Vec<Extremum>,
}

/// Interior local extrema of `values` from sign changes of the nonzero
/// finite differences. Flat stretches are skipped; an extremum reached
/// through a plateau is placed at the plateau's last point.
pub fn local_extrema(values: &[f64]) -> Vec<(usize, ExtremumKind)> {
    let mut out = Vec::new();
    let mut last_sign = 0.0;
    for i in 0..values.len().saturating_sub(1) {
        let diff = values[i + 1] - values[i];
        if diff == 0.0 || diff.is_nan() {
            continue;
        }
        let s = diff.signum();
        if last_sign != 0.0 && s != last_sign {
            out.push((i, if s > 0.0 { ExtremumKind::Min } else { ExtremumKind::Max }));
        }
        last_sign = s;
    }
    out
}

/// Evaluates [`gen_bound_encompassing`] at `m̄ = m · pattern` for every `m`
/// in `widths` (ascending). Points are computed in parallel and returned in
/// width order.
pub fn double_descent_sweep(cfg: &BoundConfig, widths: &[usize], pattern: &WidthVector) -> Result<SweepResult> {
    if widths.is_empty() {
        return Err(Error::Domain("width list is empty".into()));
    }
    if widths.windows(2).any(|w| w[0] >= w[1]) || widths[0] == 0 {
        return Err(Error::Domain("widths must be positive and strictly ascending".into()));
    }
    cfg.check_widths(pattern)?;
    let curve = widths
        .par_iter()
        .map(|&m| Ok((m, gen_bound_encompassing(cfg, &pattern.scaled(m)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let totals: Vec<f64> = curve.iter().map(|(_, r)| r.total).collect();
    let extrema = local_extrema(&totals)
        .into_iter()
        .map(|(i, kind)| Extremum {
            kind,
            width: widths[i],
            total: totals[i],
        })
        .collect();
    let saturation_width = curve.iter().find(|(_, r)| r.regime == Regime::Over).map(|(m, _)| *m);
    Ok(SweepResult {
        curve,
        saturation_width,
        extrema,
    })
}

/// Curve as CSV with header `m,bias,variance,total,regime,lambda`.
pub fn sweep_to_csv(sweep: &SweepResult) -> String {
    let mut s = String::from("m,bias,variance,total,regime,lambda\n");
    for (m, r) in &sweep.curve {
        writeln!(
            s,
            "{m},{},{},{},{},{}",
            r.bias_term,
            r.variance_term,
            r.total,
            r.regime.as_str(),
            r.lambda_used
        )
        .expect("write to string");
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn w(v: &[usize]) -> WidthVector {
        WidthVector::new(v.to_vec()).unwrap()
    }

    fn relu_cfg() -> BoundConfig {
        BoundConfig::default()
    }

    #[test]
    fn h_of_m_examples() {
        assert_eq!(h_of_m(&w(&[4]), 1.0), 0.5);
        assert_relative_eq!(
            h_of_m(&w(&[4, 9]), 1.0),
            5f64.sqrt() / 2.0 + 1.0 / 3.0,
            max_relative = 1e-15
        );
        assert_relative_eq!(h_of_m(&w(&[9, 4]), 1.0), 1.618034, epsilon = 1e-6);
    }

    #[test]
    fn approximation_bounds() {
        assert_eq!(approx_bound_l2(&w(&[4]), 1.0, 1.0, 1.0).unwrap(), 1.5);
        assert_eq!(approx_bound_l2(&w(&[4]), 1.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(approx_bound_l2(&w(&[4]), 1.0, 1.0, 2.0).unwrap(), 3.0);
        assert!(approx_bound_l2(&w(&[4]), 1.0, 0.0, 1.0).is_err());
        let v = approx_bound_inf_relu(21, 165, 1, 1.0, 1.0).unwrap();
        assert_relative_eq!(v, 1.0 / (9.0 * (165f64.ln() / 3f64.ln() - 4.0)), max_relative = 1e-14);
        assert_relative_eq!(v, 0.171565, epsilon = 1e-6);
        assert_eq!(approx_bound_inf_relu(21, 165, 1, 0.0, 1.0).unwrap(), 0.0);
        assert!(approx_bound_inf_relu(22, 165, 1, 1.0, 1.0).unwrap() < v);
        assert!(approx_bound_inf_relu(20, 165, 1, 1.0, 1.0).is_err());
        assert!(approx_bound_inf_relu(21, 162, 1, 1.0, 1.0).is_err());
    }

    #[test]
    fn entropy_rademacher_delta() {
        assert_relative_eq!(
            metric_entropy_bound(1.0, &w(&[2]), 2, 1.0).unwrap(),
            6.0 * 5f64.ln(),
            max_relative = 1e-15
        );
        assert!(metric_entropy_bound(1e300, &w(&[2]), 2, 1.0).unwrap() < 1e-290);
        assert!(
            metric_entropy_bound(0.5, &w(&[2]), 2, 1.0).unwrap() > metric_entropy_bound(1.0, &w(&[2]), 2, 1.0).unwrap()
        );
        assert!(metric_entropy_bound(0.0, &w(&[2]), 2, 1.0).is_err());
        assert_eq!(rademacher_bound(&w(&[3]), 1.0, 4, 100.0, 1.0, 1.0).unwrap(), 40.0);
        assert_eq!(rademacher_bound(&w(&[3]), 0.0, 4, 100.0, 1.0, 1.0).unwrap(), 0.0);
        assert_eq!(rademacher_bound(&w(&[3]), 2.0, 4, 100.0, 1.0, 1.0).unwrap(), 80.0);
        assert_relative_eq!(delta_n(1000.0, 2, &w(&[3, 3]), 1.0).unwrap(), 0.49736, epsilon = 1e-5);
        let e2 = 1f64.exp().powi(2);
        assert_relative_eq!(delta_n(e2, 1, &w(&[1]), 0.5).unwrap(), 0.27067, epsilon = 1e-5);
        assert_relative_eq!(
            delta_n(1000.0, 4, &w(&[3, 3]), 1.0).unwrap(),
            2.0 * delta_n(1000.0, 2, &w(&[3, 3]), 1.0).unwrap(),
            max_relative = 1e-15
        );
    }

    #[test]
    fn lambdas() {
        let cfg = BoundConfig {
            n: 1f64.exp(),
            sigma_eps: 1.0,
            ..relu_cfg()
        };
        assert_relative_eq!(
            lambda_overparam(&cfg).unwrap(),
            6.0 / 1f64.exp().sqrt(),
            max_relative = 1e-14
        );
        assert_eq!(
            lambda_overparam(&BoundConfig {
                sigma_eps: 0.0,
                ..cfg.clone()
            })
            .unwrap(),
            0.0
        );
        let wide = BoundConfig {
            d: 100,
            sigma_eps: 1.0,
            n: 1f64.exp(),
            ..relu_cfg()
        };
        assert_relative_eq!(
            lambda_overparam(&wide).unwrap(),
            40.0 * (1.0 / 1f64.exp()).sqrt(),
            max_relative = 1e-14
        );

        let cfg = BoundConfig {
            n: 1e6,
            sigma_eps: 1.0,
            ..relu_cfg()
        };
        assert_eq!(lambda_underparam(&cfg, &w(&[1])).unwrap(), 1.0);
        assert_eq!(
            lambda_underparam(&BoundConfig { sigma_eps: 0.0, ..cfg }, &w(&[1])).unwrap(),
            0.0
        );
        let cfg = BoundConfig {
            n: 1000.0,
            d: 10,
            sigma_eps: 1.0,
            ..relu_cfg()
        };
        assert_relative_eq!(lambda_underparam(&cfg, &w(&[100])).unwrap(), 13.8155, epsilon = 1e-4);
    }

    #[test]
    fn over_and_under_examples() {
        let cfg = BoundConfig {
            sigma_eps: 0.0,
            ..relu_cfg()
        };
        let over = gen_bound_over(&cfg, &w(&[4])).unwrap();
        assert_relative_eq!(over.total, 0.61419, epsilon = 1e-5);
        assert_eq!(over.regime, Regime::Over);
        assert_eq!(over.regime_condition, Some(true));
        let under = gen_bound_under(&cfg, &w(&[4])).unwrap();
        assert_relative_eq!(under.total, 0.25368, epsilon = 1e-5);
        let zero = BoundConfig {
            target_norm: 0.0,
            ..cfg.clone()
        };
        assert_eq!(gen_bound_over(&zero, &w(&[4])).unwrap().total, 0.0);
        assert_eq!(gen_bound_under(&zero, &w(&[4])).unwrap().total, 0.0);
        let wider = gen_bound_over(&cfg, &w(&[8])).unwrap();
        assert!(wider.bias_term <= over.bias_term && wider.variance_term == over.variance_term);
        assert!(gen_bound_over(&cfg, &w(&[4, 4])).is_err());
    }

    #[test]
    fn encompassing_examples() {
        let cfg = relu_cfg();
        let r = gen_bound_encompassing(&cfg, &w(&[33])).unwrap();
        assert_relative_eq!(r.total, 0.061001, epsilon = 1e-6);
        assert_eq!(r.regime, Regime::Under);
        let r = gen_bound_encompassing(&cfg, &w(&[400])).unwrap();
        assert_relative_eq!(r.total, 0.37033, epsilon = 1e-5);
        assert_eq!(r.regime, Regime::Over);
        let far = gen_bound_encompassing(&cfg, &w(&[100_000_000])).unwrap();
        assert!(far.total > 1.01 * over_variance(&cfg) && far.total - 0.36783 < 1e-4);
        assert!(r.lambda_used >= lambda_overparam(&cfg).unwrap());
    }

    #[test]
    fn general_loss_examples() {
        let cfg = relu_cfg();
        let loss = LossConstants {
            l0: 1.0,
            l1y: 1.0,
            b: 0.0,
            gamma: 1.0,
        };
        let r = gen_bound_general_loss(&cfg, &loss, &w(&[4]), 3.0).unwrap();
        assert_relative_eq!(r.total, 0.50372, epsilon = 1e-5);
        let zero = BoundConfig {
            target_norm: 0.0,
            sigma_eps: 0.0,
            ..cfg.clone()
        };
        assert_eq!(gen_bound_general_loss(&zero, &loss, &w(&[4]), 3.0).unwrap().total, 0.0);
        let bumped = LossConstants { b: 0.25, ..loss };
        let r2 = gen_bound_general_loss(&cfg, &bumped, &w(&[4]), 3.0).unwrap();
        assert_relative_eq!(r2.total - r.total, 2.0 * 3.0 * 0.25, max_relative = 1e-12);
        assert!(gen_bound_general_loss(&cfg, &loss, &w(&[4]), 0.0).is_err());
    }

    #[test]
    fn lower_bound_examples() {
        assert_relative_eq!(lower_bound_shape(1f64.exp(), 1.0).unwrap(), 0.60653, epsilon = 1e-5);
        assert_eq!(lower_bound_shape(10.0, 0.0).unwrap(), 0.0);
        assert!(lower_bound_shape(100.0, 1.0).unwrap() < lower_bound_shape(10.0, 1.0).unwrap());
        assert!(lower_bound_shape(1.5, 1.0).is_err());
    }

    #[test]
    fn simplified_relu_bound_tracks_encompassing_shape() {
        let cfg = relu_cfg();
        let a = gen_bound_relu_simplified(&cfg, &w(&[4])).unwrap();
        assert_relative_eq!(a, 0.25 + 1.01 * (4.0 * 1e4f64.ln() / 1e4), max_relative = 1e-12);
    }

    #[test]
    fn sweep_documented_config() {
        let widths: Vec<usize> = (1..=1000).collect();
        let s = double_descent_sweep(&relu_cfg(), &widths, &w(&[1])).unwrap();
        assert_eq!(s.extrema.len(), 2);
        assert_eq!((s.extrema[0].kind, s.extrema[0].width), (ExtremumKind::Min, 33));
        assert_relative_eq!(s.extrema[0].total, 0.0610, epsilon = 5e-4);
        assert_eq!((s.extrema[1].kind, s.extrema[1].width), (ExtremumKind::Max, 396));
        assert_eq!(s.saturation_width, Some(396));
        let totals: Vec<f64> = s.curve.iter().map(|(_, r)| r.total).collect();
        assert!(totals[395..].windows(2).all(|p| p[1] <= p[0]));
        let csv = sweep_to_csv(&s);
        assert!(csv.starts_with("m,bias,variance,total,regime,lambda\n1,"));
        assert_eq!(csv.lines().count(), 1001);
    }

    #[test]
    fn sweep_degenerate_and_monotone_configs() {
        let widths: Vec<usize> = (1..=200).collect();
        let flat = BoundConfig {
            sigma_eps: 0.0,
            target_norm: 0.0,
            ..relu_cfg()
        };
        let s = double_descent_sweep(&flat, &widths, &w(&[1])).unwrap();
        assert!(s.extrema.is_empty() && s.curve.iter().all(|(_, r)| r.total == 0.0));
        // the overparametrized cap is active from the first width
        let mono = BoundConfig {
            n: 50.0,
            d: 1000,
            ..relu_cfg()
        };
        let s = double_descent_sweep(&mono, &widths, &w(&[1])).unwrap();
        assert!(s.extrema.iter().all(|e| e.kind != ExtremumKind::Max));
        assert_eq!(s.saturation_width, Some(1));
        assert!(double_descent_sweep(&relu_cfg(), &[], &w(&[1])).is_err());
        assert!(double_descent_sweep(&relu_cfg(), &[3, 2], &w(&[1])).is_err());
    }

    #[test]
    fn sweep_matches_direct_evaluation() {
        let cfg = BoundConfig {
            depth: 3,
            d: 2,
            ..relu_cfg()
        };
        let pattern = w(&[2, 1]);
        let s = double_descent_sweep(&cfg, &[1, 2, 5, 9], &pattern).unwrap();
        for (m, r) in &s.curve {
            assert_eq!(r, &gen_bound_encompassing(&cfg, &pattern.scaled(*m).unwrap()).unwrap());
        }
    }

    #[test]
    fn extrema_skip_plateaus() {
        let v = [3.0, 2.0, 2.0, 2.0, 4.0, 4.0, 1.0];
        assert_eq!(local_extrema(&v), vec![(3, ExtremumKind::Min), (5, ExtremumKind::Max)]);
        assert!(local_extrema(&[1.0, 1.0, 1.0]).is_empty());
    }

    fn arb_widths() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(1usize..50, 1..4)
    }

    proptest! {
        #[test]
        fn h_is_antitone(a in arb_widths(), bump in prop::collection::vec(0usize..20, 3)) {
            let b: Vec<usize> = a.iter().zip(bump.iter()).map(|(x, y)| x + y).collect();
            prop_assert!(h_of_m(&w(&a), 1.3) >= h_of_m(&w(&b), 1.3) * (1.0 - 1e-14));
        }

        #[test]
        fn encompassing_is_min_of_branches(a in arb_widths(), n in 2.0f64..1e7, d in 1usize..50, s in 0.0f64..2.0, m in 0.0f64..3.0) {
            let cfg = BoundConfig { n, d, depth: a.len() + 1, sigma_eps: s, target_norm: m, ..relu_cfg() };
            let wv = w(&a);
            let e = gen_bound_encompassing(&cfg, &wv).unwrap();
            let o = gen_bound_over(&cfg, &wv).unwrap();
            let u = gen_bound_under(&cfg, &wv).unwrap();
            prop_assert_eq!(e.total.to_bits(), o.total.min(u.total).to_bits());
            for r in [&e, &o, &u] {
                prop_assert!(r.total.is_finite() && r.total >= 0.0 && r.bias_term >= 0.0 && r.variance_term >= 0.0);
            }
        }

        #[test]
        fn under_variance_linear(a in arb_widths(), d in 1usize..20, k in 1usize..5) {
            let cfg = BoundConfig { d, depth: a.len() + 1, ..relu_cfg() };
            let base = gen_bound_under(&cfg, &w(&a)).unwrap().variance_term;
            let cfg_k = BoundConfig { d: d * k, ..cfg.clone() };
            prop_assert!((gen_bound_under(&cfg_k, &w(&a)).unwrap().variance_term - k as f64 * base).abs() <= 1e-12 * k as f64 * base);
            let mut a2 = a.clone();
            a2[0] *= k;
            prop_assert!((gen_bound_under(&cfg, &w(&a2)).unwrap().variance_term - k as f64 * base).abs() <= 1e-12 * k as f64 * base);
        }
    }
}
