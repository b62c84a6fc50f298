use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Hidden-layer widths `(m_1, ..., m_{L-1})` of a depth-`L` network.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct WidthVector(Vec<usize>);

impl WidthVector {
    pub fn new(widths: Vec<usize>) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::Domain("width vector must have at least one entry".into()));
        }
        if let Some(pos) = widths.iter().position(|&w| w == 0) {
            return Err(Error::Domain(format!("width at position {pos} is zero")));
        }
        Ok(Self(widths))
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    /// Network depth `L` (number of weight matrices).
    pub fn depth(&self) -> usize {
        self.0.len() + 1
    }

    /// The width `m`: largest hidden layer.
    pub fn width(&self) -> usize {
        *self.0.iter().max().expect("nonempty")
    }

    /// The bottleneck `b`: smallest hidden layer.
    pub fn bottleneck(&self) -> usize {
        *self.0.iter().min().expect("nonempty")
    }

    /// `m_1 m_2 ... m_{L-1}` as a float (may exceed `usize` for wide sweeps).
    pub fn product(&self) -> f64 {
        self.0.iter().map(|&m| m as f64).product()
    }

    /// Product of all widths but the last, `m_1 ... m_{L-2}` (1 when `L = 2`).
    pub fn product_without_last(&self) -> f64 {
        self.0[..self.0.len() - 1].iter().map(|&m| m as f64).product()
    }

    /// Every width multiplied by `k`.
    pub fn scaled(&self, k: usize) -> Result<Self> {
        Self::new(self.0.iter().map(|&m| m * k).collect())
    }

    pub fn plus_one(&self) -> Self {
        Self(self.0.iter().map(|&m| m + 1).collect())
    }
}

impl TryFrom<Vec<usize>> for WidthVector {
    type Error = Error;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<WidthVector> for Vec<usize> {
    fn from(w: WidthVector) -> Self {
        w.0
    }
}

/// Largest elementwise nondecreasing minorant of `widths`.
///
/// Repeatedly take the minimum of the remaining suffix (the last index
/// among ties) and fill every position up to it with that value.
pub fn max_nondecreasing_component(widths: &WidthVector) -> WidthVector {
    let src = widths.as_slice();
    let mut out = Vec::with_capacity(src.len());
    let mut start = 0;
    while start < src.len() {
        let mut idx = start;
        for (i, &m) in src.iter().enumerate().skip(start) {
            if m <= src[idx] {
                idx = i;
            }
        }
        out.extend(std::iter::repeat_n(src[idx], idx + 1 - start));
        start = idx + 1;
    }
    WidthVector(out)
}
