//! Feed-forward policies built from an encoder, a torso and a head.
//!
//! Parameters are stored flat. Layers are laid out in order; within a layer
//! the `out x in` weight matrix comes first in row-major order, followed by
//! the `out` biases. Every member of a population is one such vector.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::ParameterVector;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Encoder {
    /// Single input passed through unchanged.
    #[default]
    Identity,
    /// Several inputs (e.g. observation and action) joined end to end.
    Concat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    #[default]
    Linear,
    /// Outputs squashed into (-1, 1).
    TanhBounded,
    /// One-hot vector selecting the largest logit.
    ArgmaxDiscrete,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    #[serde(default)]
    pub encoder: Encoder,
    #[serde(default)]
    pub torso: Vec<usize>,
    #[serde(default)]
    pub head: Head,
    #[serde(default)]
    pub activation: Activation,
    pub input_dim: usize,
    pub output_dim: usize,
}

impl NetworkSpec {
    pub fn new(input_dim: usize, torso: Vec<usize>, output_dim: usize) -> Self {
        Self {
            encoder: Encoder::default(),
            torso,
            head: Head::default(),
            activation: Activation::default(),
            input_dim,
            output_dim,
        }
    }

    pub fn with_head(mut self, head: Head) -> Self {
        self.head = head;
        self
    }

    pub fn with_activation(mut self, activation: Activation) -> Self {
        self.activation = activation;
        self
    }

    pub fn with_encoder(mut self, encoder: Encoder) -> Self {
        self.encoder = encoder;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.output_dim == 0 {
            return Err(Error::invalid("network input and output dims must be positive"));
        }
        if self.torso.contains(&0) {
            return Err(Error::invalid("hidden layer widths must be positive"));
        }
        Ok(())
    }

    /// `(inputs, outputs)` for each dense layer, in order.
    fn layer_shapes(&self) -> Vec<(usize, usize)> {
        let mut widths = Vec::with_capacity(self.torso.len() + 2);
        widths.push(self.input_dim);
        widths.extend(&self.torso);
        widths.push(self.output_dim);
        widths.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// What a population member parameterizes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Model {
    /// No structure: the parameters are the solution itself.
    Dummy {
        dim: usize,
    },
    Network(NetworkSpec),
}

impl Model {
    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Dummy { dim: 0 } => Err(Error::invalid("dummy model dimension must be positive")),
            Model::Dummy { .. } => Ok(()),
            Model::Network(spec) => spec.validate(),
        }
    }
}

pub fn param_count(model: &Model) -> usize {
    match model {
        Model::Dummy { dim } => *dim,
        Model::Network(spec) => spec.layer_shapes().iter().map(|(i, o)| i * o + o).sum(),
    }
}

/// Evaluate `model` at `params` on a single input vector.
///
/// The dummy model ignores its input and returns the parameters.
pub fn forward(model: &Model, params: &ParameterVector, input: &[f64]) -> Result<Vec<f64>> {
    forward_parts(model, params, &[input])
}

/// Like [`forward`], with the input supplied in parts for the encoder to
/// combine. The identity encoder accepts exactly one part.
pub fn forward_parts(model: &Model, params: &ParameterVector, parts: &[&[f64]]) -> Result<Vec<f64>> {
    let expected = param_count(model);
    if params.len() != expected {
        return Err(Error::invalid(format!(
            "model expects {expected} parameters, got {}",
            params.len()
        )));
    }
    match model {
        Model::Dummy { .. } => Ok(params.as_slice().to_vec()),
        Model::Network(spec) => Network::from_params(spec, params)?.forward_parts(parts),
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Dense {
    weights: Array2<f64>,
    bias: Array1<f64>,
}

/// A network with materialized weight matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    spec: NetworkSpec,
    layers: Vec<Dense>,
}

impl Network {
    pub fn from_params(spec: &NetworkSpec, params: &ParameterVector) -> Result<Self> {
        spec.validate()?;
        let expected = param_count(&Model::Network(spec.clone()));
        if params.len() != expected {
            return Err(Error::invalid(format!(
                "network expects {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut rest = params.as_slice();
        let mut layers = Vec::new();
        for (inputs, outputs) in spec.layer_shapes() {
            let (w, tail) = rest.split_at(inputs * outputs);
            let (b, tail) = tail.split_at(outputs);
            rest = tail;
            layers.push(Dense {
                weights: Array2::from_shape_vec((outputs, inputs), w.to_vec())
                    .expect("slice length matches layer shape"),
                bias: Array1::from(b.to_vec()),
            });
        }
        Ok(Self {
            spec: spec.clone(),
            layers,
        })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn to_params(&self) -> ParameterVector {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.weights.iter());
            out.extend(layer.bias.iter());
        }
        ParameterVector::new(out).expect("network weights are finite")
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward_parts(&[input])
    }

    pub fn forward_parts(&self, parts: &[&[f64]]) -> Result<Vec<f64>> {
        let encoded: Vec<f64> = match self.spec.encoder {
            Encoder::Identity if parts.len() != 1 => {
                return Err(Error::invalid(format!(
                    "identity encoder takes one input, got {}",
                    parts.len()
                )))
            }
            _ => parts.concat(),
        };
        if encoded.len() != self.spec.input_dim {
            return Err(Error::invalid(format!(
                "network expects input of length {}, got {}",
                self.spec.input_dim,
                encoded.len()
            )));
        }
        let mut x = Array1::from(encoded);
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            x = layer.weights.dot(&x) + &layer.bias;
            if i < last {
                x.mapv_inplace(|v| self.spec.activation.apply(v));
            }
        }
        Ok(apply_head(self.spec.head, x.view()))
    }
}

fn apply_head(head: Head, logits: ArrayView1<'_, f64>) -> Vec<f64> {
    match head {
        Head::Linear => logits.to_vec(),
        Head::TanhBounded => logits.iter().map(|v| v.tanh()).collect(),
        Head::ArgmaxDiscrete => {
            // First index wins ties.
            let best = logits
                .iter()
                .enumerate()
                .fold(0, |best, (i, v)| if *v > logits[best] { i } else { best });
            (0..logits.len()).map(|i| if i == best { 1.0 } else { 0.0 }).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: Vec<f64>) -> ParameterVector {
        ParameterVector::new(v).unwrap()
    }

    #[test]
    fn param_counts() {
        assert_eq!(param_count(&Model::Network(NetworkSpec::new(2, vec![], 1))), 3);
        assert_eq!(param_count(&Model::Network(NetworkSpec::new(4, vec![8], 2))), 58);
        assert_eq!(param_count(&Model::Dummy { dim: 7 }), 7);
    }

    #[test]
    fn single_linear_layer_by_hand() {
        let model = Model::Network(NetworkSpec::new(2, vec![], 1));
        let out = forward(&model, &pv(vec![1.0, 2.0, 3.0]), &[4.0, 5.0]).unwrap();
        assert_eq!(out, vec![17.0]);
    }

    #[test]
    fn zero_network_outputs_zero() {
        let model = Model::Network(NetworkSpec::new(3, vec![4, 4], 2));
        let n = param_count(&model);
        let out = forward(&model, &ParameterVector::zeros(n), &[1.0, -2.0, 0.5]).unwrap();
        assert_eq!(out, vec![0.0, 0.0]);
    }

    #[test]
    fn dummy_returns_params() {
        let model = Model::Dummy { dim: 2 };
        let p = pv(vec![0.5, -0.5]);
        assert_eq!(forward(&model, &p, &[9.0, 9.0, 9.0]).unwrap(), vec![0.5, -0.5]);
        assert_eq!(forward(&model, &p, &[]).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn length_mismatches_are_rejected() {
        let model = Model::Network(NetworkSpec::new(2, vec![], 1));
        assert!(forward(&model, &pv(vec![1.0, 2.0]), &[1.0, 1.0]).is_err());
        assert!(forward(&model, &pv(vec![1.0, 2.0, 3.0]), &[1.0]).is_err());
    }

    #[test]
    fn hidden_layer_activation_and_heads() {
        // 1 -> [1] -> 1, all weights one, biases zero.
        let p = pv(vec![1.0, 0.0, 1.0, 0.0]);
        let tanh = Model::Network(NetworkSpec::new(1, vec![1], 1));
        assert!((forward(&tanh, &p, &[0.5]).unwrap()[0] - 0.5f64.tanh()).abs() < 1e-15);
        let relu = Model::Network(NetworkSpec::new(1, vec![1], 1).with_activation(Activation::Relu));
        assert_eq!(forward(&relu, &p, &[-0.5]).unwrap(), vec![0.0]);
        let bounded = Model::Network(NetworkSpec::new(1, vec![], 1).with_head(Head::TanhBounded));
        let y = forward(&bounded, &pv(vec![100.0, 0.0]), &[1.0]).unwrap()[0];
        assert!(y > 0.99 && y < 1.0 + 1e-15);
    }

    #[test]
    fn argmax_head_is_one_hot() {
        let model = Model::Network(NetworkSpec::new(1, vec![], 3).with_head(Head::ArgmaxDiscrete));
        // logits = [1, 3, 2] for input 1
        let p = pv(vec![1.0, 3.0, 2.0, 0.0, 0.0, 0.0]);
        assert_eq!(forward(&model, &p, &[1.0]).unwrap(), vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn concat_encoder_joins_inputs() {
        let model = Model::Network(NetworkSpec::new(3, vec![], 1).with_encoder(Encoder::Concat));
        let p = pv(vec![1.0, 1.0, 1.0, 0.0]);
        assert_eq!(forward_parts(&model, &p, &[&[1.0, 2.0], &[3.0]]).unwrap(), vec![6.0]);
        let ident = Model::Network(NetworkSpec::new(3, vec![], 1));
        assert!(forward_parts(&ident, &p, &[&[1.0, 2.0], &[3.0]]).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(Model::Network(NetworkSpec::new(0, vec![], 1)).validate().is_err());
        assert!(Model::Network(NetworkSpec::new(2, vec![0], 1)).validate().is_err());
        assert!(Model::Dummy { dim: 0 }.validate().is_err());
    }
}
