use std::fs;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{ActivationKind, ActivationSpec, NetParams};
use crate::{Error, Result};

/// Activation block of a saved network. `L_sigma` and `sigma0` are
/// informational and are checked against the reconstructed activation on
/// load.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActivationDocument {
    #[serde(flatten)]
    pub kind: ActivationKind,
    #[serde(default)]
    pub offset: f64,
    #[serde(rename = "L_sigma")]
    pub lipschitz: f64,
    pub sigma0: f64,
}

/// On-disk form of a network: one row-major array per layer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub depth: usize,
    pub input_dim: usize,
    pub widths: Vec<usize>,
    pub activation: ActivationDocument,
    pub layers: Vec<Vec<f64>>,
}

impl NetworkDocument {
    pub fn from_network(params: &NetParams, act: &ActivationSpec) -> Self {
        Self {
            depth: params.depth(),
            input_dim: params.input_dim(),
            widths: params.widths().into(),
            activation: ActivationDocument {
                kind: act.kind.clone(),
                offset: act.offset,
                lipschitz: act.lipschitz_constant(),
                sigma0: act.value_at_zero(),
            },
            layers: params.layers().iter().map(|w| w.iter().copied().collect()).collect(),
        }
    }

    pub fn into_network(self) -> Result<(NetParams, ActivationSpec)> {
        if self.widths.len() + 1 != self.depth || self.layers.len() != self.depth {
            return Err(Error::Parse(format!(
                "depth {} inconsistent with {} widths and {} layers",
                self.depth,
                self.widths.len(),
                self.layers.len()
            )));
        }
        let mut shapes = Vec::with_capacity(self.depth);
        let mut cols = self.input_dim + 1;
        for &m in &self.widths {
            shapes.push((m, cols));
            cols = m;
        }
        shapes.push((1, cols));
        let layers = self
            .layers
            .into_iter()
            .zip(shapes)
            .enumerate()
            .map(|(i, (data, shape))| {
                Array2::from_shape_vec(shape, data).map_err(|e| Error::Parse(format!("layer {}: {e}", i + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        let params = NetParams::new(self.input_dim, layers)?;
        let act = ActivationSpec {
            kind: self.activation.kind,
            offset: self.activation.offset,
        };
        if act.lipschitz_constant() != self.activation.lipschitz || act.value_at_zero() != self.activation.sigma0 {
            return Err(Error::Parse(format!(
                "activation constants (L_sigma={}, sigma0={}) do not match the stored activation",
                self.activation.lipschitz, self.activation.sigma0
            )));
        }
        Ok((params, act))
    }
}

pub fn network_to_json(params: &NetParams, act: &ActivationSpec) -> String {
    serde_json::to_string_pretty(&NetworkDocument::from_network(params, act)).expect("serializable")
}

pub fn network_from_json(text: &str) -> Result<(NetParams, ActivationSpec)> {
    serde_json::from_str::<NetworkDocument>(text)?.into_network()
}

pub fn save_network(path: &Path, params: &NetParams, act: &ActivationSpec) -> Result<()> {
    fs::write(path, network_to_json(params, act) + "\n")?;
    Ok(())
}

pub fn load_network(path: &Path) -> Result<(NetParams, ActivationSpec)> {
    network_from_json(&fs::read_to_string(path)?)
}
