//! Dense feed-forward classifiers loaded from a JSON weights document:
//!
//! ```json
//! {"input_shape":[C,H,W],"num_classes":N,
//!  "layers":[{"weights":[[...]],"bias":[...],"activation":"relu"}]}
//! ```
//!
//! `weights` is row-major `out × in`. Inputs are the image flattened in
//! `C, H, W` order.

use serde::{Deserialize, Serialize};

use super::{Oracle, ScoreVector};
use crate::error::{Result, StbaError};
use crate::imagecore::{Image, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
    Softmax,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DenseLayer {
    inputs: usize,
    outputs: usize,
    /// Row-major `outputs × inputs`.
    weights: Vec<f64>,
    bias: Vec<f64>,
    activation: Activation,
}

impl DenseLayer {
    /// `weights` is one row per output unit. Row lengths must agree.
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        Self::from_rows(weights, bias, activation, 0)
    }

    fn from_rows(
        rows: Vec<Vec<f64>>,
        bias: Vec<f64>,
        activation: Activation,
        layer: usize,
    ) -> Result<Self> {
        let dim_err = |message: String| StbaError::ModelDimension { layer, message };
        let outputs = rows.len();
        if outputs == 0 {
            return Err(dim_err("layer has no output units".into()));
        }
        let inputs = rows[0].len();
        if inputs == 0 {
            return Err(dim_err("layer has no inputs".into()));
        }
        if let Some(r) = rows.iter().position(|r| r.len() != inputs) {
            return Err(dim_err(format!(
                "weight row {r} has {} columns, row 0 has {inputs}",
                rows[r].len()
            )));
        }
        if bias.len() != outputs {
            return Err(dim_err(format!(
                "bias has {} entries for {outputs} output units",
                bias.len()
            )));
        }
        let weights: Vec<f64> = rows.into_iter().flatten().collect();
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(StbaError::ModelValidation(format!(
                "layer {layer} has non-finite parameters"
            )));
        }
        Ok(DenseLayer {
            inputs,
            outputs,
            weights,
            bias,
            activation,
        })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn weight(&self, out: usize, inp: usize) -> f64 {
        self.weights[out * self.inputs + inp]
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        let mut y: Vec<f64> = self
            .weights
            .chunks_exact(self.inputs)
            .zip(&self.bias)
            .map(|(row, b)| b + row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>())
            .collect();
        match self.activation {
            Activation::Identity => {}
            Activation::Relu => y.iter_mut().for_each(|v| *v = v.max(0.0)),
            Activation::Softmax => {
                let max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                y.iter_mut().for_each(|v| *v = (*v - max).exp());
                let total: f64 = y.iter().sum();
                y.iter_mut().for_each(|v| *v /= total);
            }
        }
        y
    }
}

/// A validated dense network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    input_shape: Shape,
    num_classes: usize,
    layers: Vec<DenseLayer>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLayer {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpec {
    input_shape: [usize; 3],
    num_classes: usize,
    layers: Vec<RawLayer>,
}

impl ModelSpec {
    pub fn new(input_shape: Shape, num_classes: usize, layers: Vec<DenseLayer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(StbaError::ModelValidation("model has no layers".into()));
        }
        if num_classes < 2 {
            return Err(StbaError::ModelValidation(format!(
                "num_classes must be at least 2, got {num_classes}"
            )));
        }
        let mut expected = input_shape.len();
        for (i, layer) in layers.iter().enumerate() {
            let n = i + 1;
            if layer.inputs != expected {
                return Err(StbaError::ModelDimension {
                    layer: n,
                    message: format!("expects {} inputs but receives {expected}", layer.inputs),
                });
            }
            if layer.activation == Activation::Softmax && n != layers.len() {
                return Err(StbaError::ModelValidation(format!(
                    "softmax is only allowed on the final layer (found on layer {n})"
                )));
            }
            expected = layer.outputs;
        }
        if expected != num_classes {
            return Err(StbaError::ModelDimension {
                layer: layers.len(),
                message: format!("final layer has {expected} outputs for {num_classes} classes"),
            });
        }
        Ok(ModelSpec {
            input_shape,
            num_classes,
            layers,
        })
    }

    pub fn input_shape(&self) -> Shape {
        self.input_shape
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    /// Forward pass over a flattened `C·H·W` input.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        assert_eq!(input.len(), self.input_shape.len());
        let mut x = input.to_vec();
        for layer in &self.layers {
            x = layer.forward(&x);
        }
        x
    }

    pub fn to_json(&self) -> String {
        let raw = RawSpec {
            input_shape: self.input_shape.into(),
            num_classes: self.num_classes,
            layers: self
                .layers
                .iter()
                .map(|l| RawLayer {
                    weights: l.weights.chunks(l.inputs).map(<[f64]>::to_vec).collect(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        };
        serde_json::to_string(&raw).expect("model spec serializes")
    }
}

/// Parses and validates a weights document. Schema violations carry the JSON
/// path of the offending value; dimension errors name the 1-based layer.
pub fn load_model_spec(bytes: &[u8]) -> Result<ModelSpec> {
    let de = &mut serde_json::Deserializer::from_slice(bytes);
    let raw: RawSpec = serde_path_to_error::deserialize(de).map_err(|e| StbaError::ModelParse {
        path: e.path().to_string(),
        message: e.inner().to_string(),
    })?;
    let layers = raw
        .layers
        .into_iter()
        .enumerate()
        .map(|(i, l)| DenseLayer::from_rows(l.weights, l.bias, l.activation, i + 1))
        .collect::<Result<Vec<_>>>()?;
    ModelSpec::new(raw.input_shape.into(), raw.num_classes, layers)
}

/// In-process oracle over a [`ModelSpec`]. Immutable, so safe to share.
#[derive(Clone, Debug)]
pub struct MlpOracle {
    spec: ModelSpec,
}

impl MlpOracle {
    pub fn new(spec: ModelSpec) -> Self {
        MlpOracle { spec }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        load_model_spec(bytes).map(MlpOracle::new)
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }
}

impl Oracle for MlpOracle {
    fn input_shape(&self) -> Shape {
        self.spec.input_shape
    }

    fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    fn scores(&self, img: &Image) -> Result<ScoreVector> {
        if img.shape() != self.spec.input_shape {
            return Err(StbaError::shape(self.spec.input_shape, img.shape()));
        }
        ScoreVector::new(self.spec.forward(img.data()))
    }
}
