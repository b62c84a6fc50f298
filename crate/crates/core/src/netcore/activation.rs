use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Base shape of an activation, before the constant offset is added.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ActivationKind {
    Relu,
    Identity,
    LeakyRelu {
        alpha: f64,
    },
    /// Piecewise-linear interpolation through `(knots[i], values[i])`,
    /// extended linearly beyond the end knots. When `differentiable` is
    /// false the slopes are not exposed and backprop refuses the
    /// activation.
    Tabulated {
        knots: Vec<f64>,
        values: Vec<f64>,
        differentiable: bool,
    },
}

/// A Lipschitz activation `σ(x) = base(x) + offset`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationSpec {
    pub kind: ActivationKind,
    #[serde(default)]
    pub offset: f64,
}

impl ActivationSpec {
    pub fn relu() -> Self {
        Self {
            kind: ActivationKind::Relu,
            offset: 0.0,
        }
    }

    pub fn identity() -> Self {
        Self {
            kind: ActivationKind::Identity,
            offset: 0.0,
        }
    }

    pub fn leaky_relu(alpha: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(Error::Domain(format!("leaky relu slope {alpha} is not finite")));
        }
        Ok(Self {
            kind: ActivationKind::LeakyRelu { alpha },
            offset: 0.0,
        })
    }

    pub fn tabulated(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::tabulated_impl(knots, values, true)
    }

    /// A tabulated activation that does not expose derivatives.
    pub fn tabulated_without_derivative(knots: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::tabulated_impl(knots, values, false)
    }

    fn tabulated_impl(knots: Vec<f64>, values: Vec<f64>, differentiable: bool) -> Result<Self> {
        if knots.len() < 2 || knots.len() != values.len() {
            return Err(Error::Domain(
                "tabulated activation needs at least two knots and one value per knot".into(),
            ));
        }
        if knots.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::Domain("tabulated activation has non-finite entries".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Domain("tabulated knots must be strictly increasing".into()));
        }
        Ok(Self {
            kind: ActivationKind::Tabulated {
                knots,
                values,
                differentiable,
            },
            offset: 0.0,
        })
    }

    /// Same activation shifted by a constant.
    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    fn base(&self, x: f64) -> f64 {
        match &self.kind {
            ActivationKind::Relu => x.max(0.0),
            ActivationKind::Identity => x,
            ActivationKind::LeakyRelu { alpha } => {
                if x > 0.0 {
                    x
                } else {
                    alpha * x
                }
            }
            ActivationKind::Tabulated { knots, values, .. } => {
                let seg = segment(knots, x);
                let slope = (values[seg + 1] - values[seg]) / (knots[seg + 1] - knots[seg]);
                values[seg] + slope * (x - knots[seg])
            }
        }
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.base(x) + self.offset
    }

    /// Almost-everywhere derivative, `None` when the activation does not
    /// expose one. Relu uses 0 at 0; tabulated uses the left segment at an
    /// interior knot.
    #[inline]
    pub fn derivative(&self, x: f64) -> Option<f64> {
        match &self.kind {
            ActivationKind::Relu => Some(if x > 0.0 { 1.0 } else { 0.0 }),
            ActivationKind::Identity => Some(1.0),
            ActivationKind::LeakyRelu { alpha } => Some(if x > 0.0 { 1.0 } else { *alpha }),
            ActivationKind::Tabulated {
                knots,
                values,
                differentiable,
            } => {
                if !differentiable {
                    return None;
                }
                let seg = segment(knots, x);
                Some((values[seg + 1] - values[seg]) / (knots[seg + 1] - knots[seg]))
            }
        }
    }

    pub fn is_differentiable(&self) -> bool {
        !matches!(
            self.kind,
            ActivationKind::Tabulated {
                differentiable: false,
                ..
            }
        )
    }

    /// Lipschitz constant `L_σ`.
    pub fn lipschitz_constant(&self) -> f64 {
        match &self.kind {
            ActivationKind::Relu | ActivationKind::Identity => 1.0,
            ActivationKind::LeakyRelu { alpha } => alpha.abs().max(1.0),
            ActivationKind::Tabulated { knots, values, .. } => knots
                .windows(2)
                .zip(values.windows(2))
                .map(|(k, v)| ((v[1] - v[0]) / (k[1] - k[0])).abs())
                .fold(0.0, f64::max),
        }
    }

    /// `σ(0)`.
    pub fn value_at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    /// True iff `σ(0) = 0`.
    pub fn is_normalized(&self) -> bool {
        self.value_at_zero() == 0.0
    }

    /// `σ(cx) = cσ(x)` for every `c > 0`.
    pub fn is_positively_homogeneous(&self) -> bool {
        self.offset == 0.0
            && matches!(
                self.kind,
                ActivationKind::Relu | ActivationKind::Identity | ActivationKind::LeakyRelu { .. }
            )
    }

    pub fn is_relu(&self) -> bool {
        self.offset == 0.0 && self.kind == ActivationKind::Relu
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            ActivationKind::Relu => "relu",
            ActivationKind::Identity => "identity",
            ActivationKind::LeakyRelu { .. } => "leaky_relu",
            ActivationKind::Tabulated { .. } => "tabulated",
        }
    }
}

/// Index `i` of the segment `[knots[i], knots[i+1]]` used for `x`; the end
/// segments extend to infinity.
fn segment(knots: &[f64], x: f64) -> usize {
    let last = knots.len() - 2;
    // first knot index with knots[i] >= x, minus one
    let p = knots.partition_point(|&k| k < x);
    p.saturating_sub(1).min(last)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn all_kinds() -> Vec<ActivationSpec> {
        vec![
            ActivationSpec::relu(),
            ActivationSpec::identity(),
            ActivationSpec::leaky_relu(0.1).unwrap(),
            ActivationSpec::leaky_relu(-2.0).unwrap(),
            ActivationSpec::tabulated(vec![-1.0, 0.0, 0.5, 2.0], vec![-0.5, 0.2, 1.7, 1.0]).unwrap(),
            ActivationSpec::relu().with_offset(0.5),
        ]
    }

    #[test]
    fn relu_and_identity_constants() {
        for a in [ActivationSpec::relu(), ActivationSpec::identity()] {
            assert_eq!(a.lipschitz_constant(), 1.0);
            assert_eq!(a.value_at_zero(), 0.0);
            assert!(a.is_normalized());
        }
        assert_eq!(ActivationSpec::relu().derivative(0.0), Some(0.0));
    }

    #[test]
    fn value_at_zero_is_exact() {
        let t = ActivationSpec::tabulated(vec![-1.0, 0.0, 1.0], vec![3.0, 0.25, 1.0]).unwrap();
        assert_eq!(t.eval(0.0), 0.25);
        assert_eq!(t.value_at_zero(), 0.25);
        assert!(!t.is_normalized());
        assert_eq!(ActivationSpec::relu().with_offset(0.5).value_at_zero(), 0.5);
    }

    #[test]
    fn tabulated_interpolates_and_extrapolates() {
        let t = ActivationSpec::tabulated(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(t.eval(0.5), 1.0);
        assert_eq!(t.eval(2.0), 2.5);
        assert_eq!(t.eval(-1.0), -2.0);
        assert_eq!(t.eval(5.0), 4.0);
        assert_eq!(t.lipschitz_constant(), 2.0);
        assert_eq!(t.derivative(2.0), Some(0.5));
        let opaque = ActivationSpec::tabulated_without_derivative(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(opaque.derivative(0.3), None);
    }

    #[test]
    fn tabulated_rejects_bad_tables() {
        assert!(ActivationSpec::tabulated(vec![0.0], vec![0.0]).is_err());
        assert!(ActivationSpec::tabulated(vec![1.0, 0.0], vec![0.0, 1.0]).is_err());
        assert!(ActivationSpec::tabulated(vec![0.0, 1.0], vec![0.0]).is_err());
    }

    #[test]
    fn sampled_lipschitz_bound_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for act in all_kinds() {
            let l = act.lipschitz_constant();
            for _ in 0..10_000 {
                let x: f64 = rng.random_range(-5.0..5.0);
                let y: f64 = rng.random_range(-5.0..5.0);
                let lhs = (act.eval(x) - act.eval(y)).abs();
                assert!(lhs <= l * (x - y).abs() * (1.0 + 1e-12) + 1e-15, "{act:?} at {x},{y}");
            }
        }
    }
}
