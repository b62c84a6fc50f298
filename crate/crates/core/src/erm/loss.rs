use serde::{Deserialize, Serialize};

use crate::theory::LossConstants;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LossKind {
    /// `½ (f - y)²`
    Mse,
    /// `ln(1 + e^{-yf}) - ln(1 + e^{-y²})`
    Logistic,
    /// Huber penalty of `f - y` with threshold `delta`.
    Huber { delta: f64 },
}

/// A loss `𝓛(f, y)` with `𝓛(y, y) = 0` and its regularity constants on the
/// working range `|f|, |y| ≤ R`.
///
/// `l0` is the Lipschitz constant of `𝓛` and `l1y` that of `∂𝓛/∂y`, both
/// jointly in `(f, y)`; `b` bounds `|∂²𝓛/∂y²|`; `gamma` is the strong
/// convexity constant in `f` (0 when none holds on the whole range).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossSpec {
    pub kind: LossKind,
    pub range: f64,
    pub l0: f64,
    pub l1y: f64,
    pub b: f64,
    pub gamma: f64,
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^t)` without overflow.
fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// Bound on `|f|` and `|y|`: `L_σ^{L-1} √2 ν` for predictors on the unit
/// ball (the bias coordinate makes `‖x̃‖ ≤ √2`), plus `6σ_ε` for noise.
pub fn working_range(nu: f64, lipschitz: f64, depth: usize, sigma_eps: f64) -> f64 {
    lipschitz.powi(depth as i32 - 1) * std::f64::consts::SQRT_2 * nu + 6.0 * sigma_eps
}

impl LossSpec {
    pub fn new(kind: LossKind, range: f64) -> Result<Self> {
        if !(range > 0.0 && range.is_finite()) {
            return Err(Error::Domain(format!("working range must be positive, got {range}")));
        }
        let sqrt2 = std::f64::consts::SQRT_2;
        let r = range;
        let (l0, l1y, b, gamma) = match kind {
            LossKind::Mse => (2.0 * sqrt2 * r, sqrt2, 1.0, 1.0),
            LossKind::Logistic => {
                let b = 1.0 + 1.25 * r * r;
                let cross = 1.0 + 0.25 * r * r;
                (5f64.sqrt() * r, cross.hypot(b), b, 0.0)
            }
            LossKind::Huber { delta } => {
                if !(delta > 0.0 && delta.is_finite()) {
                    return Err(Error::Domain(format!("huber threshold must be positive, got {delta}")));
                }
                let gamma = if 2.0 * r <= delta { 1.0 } else { 0.0 };
                (sqrt2 * delta.min(2.0 * r), sqrt2, 1.0, gamma)
            }
        };
        Ok(Self {
            kind,
            range,
            l0,
            l1y,
            b,
            gamma,
        })
    }

    pub fn mse() -> Self {
        Self::new(LossKind::Mse, 1.0).expect("valid")
    }

    pub fn constants(&self) -> LossConstants {
        LossConstants {
            l0: self.l0,
            l1y: self.l1y,
            b: self.b,
            gamma: self.gamma,
        }
    }

    pub fn value(&self, f: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Mse => 0.5 * (f - y) * (f - y),
            LossKind::Logistic => softplus(-y * f) - softplus(-y * y),
            LossKind::Huber { delta } => {
                let r = (f - y).abs();
                if r <= delta {
                    0.5 * r * r
                } else {
                    delta * (r - 0.5 * delta)
                }
            }
        }
    }

    /// `∂𝓛/∂f`.
    pub fn derivative(&self, f: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Mse => f - y,
            LossKind::Logistic => -y * sigmoid(-y * f),
            LossKind::Huber { delta } => (f - y).clamp(-delta, delta),
        }
    }

    /// `∂𝓛/∂y`.
    pub fn derivative_y(&self, f: f64, y: f64) -> f64 {
        match self.kind {
            LossKind::Mse => y - f,
            LossKind::Logistic => -f * sigmoid(-y * f) + 2.0 * y * sigmoid(-y * y),
            LossKind::Huber { delta } => (y - f).clamp(-delta, delta),
        }
    }
}
