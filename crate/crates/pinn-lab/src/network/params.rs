//! Flat parameter vector with a layer layout, plus the checkpoint format:
//! a binary array of little-endian f64 next to a JSON sidecar.

use std::ops::Range;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// All weights and biases of one network as a flat array.
///
/// Layout per layer: the weight matrix row-major (fan_out × fan_in), then
/// the biases. Layers in order from input to output.
#[derive(Clone, Debug, PartialEq)]
pub struct ParameterVector {
    dims: Vec<usize>,
    data: Vec<f64>,
}

impl ParameterVector {
    pub(crate) fn new(dims: Vec<usize>, data: Vec<f64>) -> Self {
        let expect: usize = dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
        assert_eq!(data.len(), expect, "parameter data does not match layout");
        Self { dims, data }
    }

    /// All-zero parameters for the given layer widths.
    pub fn zeros(dims: Vec<usize>) -> Self {
        let n: usize = dims.windows(2).map(|w| (w[0] + 1) * w[1]).sum();
        Self::new(dims, vec![0.0; n])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn layer_count(&self) -> usize {
        self.dims.len() - 1
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Replace the data, keeping the layout.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        Self::new(self.dims.clone(), data)
    }

    fn layer_offset(&self, layer: usize) -> usize {
        self.dims[..layer]
            .windows(2)
            .map(|w| (w[0] + 1) * w[1])
            .sum::<usize>()
            + if layer > 0 {
                (self.dims[layer - 1] + 1) * self.dims[layer]
            } else {
                0
            }
    }

    /// Index range of layer `l`'s weight matrix within the flat array.
    pub fn weight_range(&self, layer: usize) -> Range<usize> {
        let start = self.layer_offset(layer);
        start..start + self.dims[layer] * self.dims[layer + 1]
    }

    /// Index range of layer `l`'s biases within the flat array.
    pub fn bias_range(&self, layer: usize) -> Range<usize> {
        let w = self.weight_range(layer);
        w.end..w.end + self.dims[layer + 1]
    }

    /// Write as raw little-endian f64 with a JSON sidecar describing the
    /// layout. `path` gets the binary; `path` with extension `.json` the
    /// sidecar.
    pub fn save(&self, path: &Path, sidecar_extra: &serde_json::Value) -> Result<()> {
        let mut bytes = Vec::with_capacity(self.data.len() * 8);
        for v in &self.data {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes)?;
        let sidecar = CheckpointSidecar {
            dims: self.dims.clone(),
            param_count: self.data.len(),
            extra: sidecar_extra.clone(),
        };
        let json_path = path.with_extension("json");
        std::fs::write(json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    /// Read back a checkpoint written by [`ParameterVector::save`].
    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: CheckpointSidecar =
            serde_json::from_str(&std::fs::read_to_string(path.with_extension("json"))?)?;
        let bytes = std::fs::read(path)?;
        if bytes.len() != sidecar.param_count * 8 {
            return Err(Error::Config(format!(
                "checkpoint {} has {} bytes, sidecar says {} parameters",
                path.display(),
                bytes.len(),
                sidecar.param_count
            )));
        }
        let data: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(Self::new(sidecar.dims, data))
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointSidecar {
    dims: Vec<usize>,
    param_count: usize,
    #[serde(default)]
    extra: serde_json::Value,
}
