use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::rng;
use crate::tensor::Tensor;

use super::layer::{Conv2d, Dense, Layer};

/// Parameter-free description of one layer, as used in architecture strings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerSpec {
    Dense { outputs: usize },
    Conv2d { out_channels: usize, kernel: usize },
    Relu,
    Flatten,
}

/// Layer list plus input shape and bias regime, enough to build a fresh network.
///
/// The textual form is a comma-separated list of `dense:N`, `conv:C:K`,
/// `relu` and `flatten`, e.g. `flatten,dense:64,relu,dense:10`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Architecture {
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
    pub bias_enabled: bool,
}

impl FromStr for LayerSpec {
    type Err = Error;

    fn from_str(token: &str) -> Result<Self> {
        let parts: Vec<&str> = token.trim().split(':').collect();
        let num = |s: &str| -> Result<usize> {
            match s.parse::<usize>() {
                Ok(n) if n > 0 => Ok(n),
                _ => Err(Error::InvalidArgument(format!("bad size '{s}' in layer '{token}'"))),
            }
        };
        match parts.as_slice() {
            ["dense", n] => Ok(LayerSpec::Dense { outputs: num(n)? }),
            ["conv", c, k] => Ok(LayerSpec::Conv2d {
                out_channels: num(c)?,
                kernel: num(k)?,
            }),
            ["relu"] => Ok(LayerSpec::Relu),
            ["flatten"] => Ok(LayerSpec::Flatten),
            _ => Err(Error::InvalidArgument(format!("unknown layer '{token}'"))),
        }
    }
}

impl fmt::Display for LayerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LayerSpec::Dense { outputs } => write!(f, "dense:{outputs}"),
            LayerSpec::Conv2d { out_channels, kernel } => write!(f, "conv:{out_channels}:{kernel}"),
            LayerSpec::Relu => f.write_str("relu"),
            LayerSpec::Flatten => f.write_str("flatten"),
        }
    }
}

impl Architecture {
    pub fn parse(layers: &str, input_shape: Vec<usize>, bias_enabled: bool) -> Result<Self> {
        let layers = layers
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(str::parse)
            .collect::<Result<Vec<_>>>()?;
        if layers.is_empty() {
            return Err(Error::InvalidArgument("architecture has no layers".into()));
        }
        Ok(Self {
            input_shape,
            layers,
            bias_enabled,
        })
    }

    pub fn layers_string(&self) -> String {
        self.layers.iter().map(ToString::to_string).collect::<Vec<_>>().join(",")
    }
}

/// Per-layer activations of one forward pass; `activations[i]` is the input
/// of layer `i` and `activations[i + 1]` its output.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    activations: Vec<Vec<f64>>,
}

impl ForwardTrace {
    /// Number of layers traced.
    pub fn len(&self) -> usize {
        self.activations.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn layer_input(&self, layer: usize) -> &[f64] {
        &self.activations[layer]
    }

    pub fn layer_output(&self, layer: usize) -> &[f64] {
        &self.activations[layer + 1]
    }

    pub fn logits(&self) -> &[f64] {
        self.activations.last().expect("trace holds at least the input")
    }
}

/// Feedforward network computing logits `S : R^d -> R^C` (no softmax stored).
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    /// `shapes[i]` is the input shape of layer `i`; the last entry is `[C]`.
    shapes: Vec<Vec<usize>>,
}

impl Network {
    pub fn new(input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        if input_shape.is_empty() || input_shape.contains(&0) {
            return Err(Error::InvalidNetwork(format!("bad input shape {input_shape:?}")));
        }
        let mut shapes = vec![input_shape.clone()];
        for (i, layer) in layers.iter().enumerate() {
            layer.validate().map_err(|e| Error::InvalidNetwork(format!("layer {i}: {e}")))?;
            let next = layer.output_shape(shapes.last().unwrap()).map_err(|e| match e {
                Error::ShapeMismatch {
                    context,
                    expected,
                    actual,
                } => Error::ShapeMismatch {
                    context: format!("layer {i} ({context})"),
                    expected,
                    actual,
                },
                other => other,
            })?;
            shapes.push(next);
        }
        if shapes.last().unwrap().len() != 1 {
            return Err(Error::InvalidNetwork(format!(
                "final output must be a vector of logits, got shape {:?}",
                shapes.last().unwrap()
            )));
        }
        Ok(Self {
            input_shape,
            layers,
            shapes,
        })
    }

    /// Builds and initializes a network. Parameterized layer `i` draws from
    /// the stream `derive_seed(seed, i)`, the same stream used by
    /// [`randomize_layer`](super::randomize_layer).
    pub fn init(arch: &Architecture, seed: u64) -> Result<Self> {
        let mut shape = arch.input_shape.clone();
        let mut layers = Vec::with_capacity(arch.layers.len());
        for (i, spec) in arch.layers.iter().enumerate() {
            let mut layer = match *spec {
                LayerSpec::Dense { outputs } => {
                    if shape.len() != 1 {
                        return Err(Error::ShapeMismatch {
                            context: format!("layer {i} (dense needs a flat input; add flatten)"),
                            expected: vec![shape.iter().product()],
                            actual: shape,
                        });
                    }
                    Layer::Dense(Dense::zeroed(shape[0], outputs, arch.bias_enabled))
                }
                LayerSpec::Conv2d { out_channels, kernel } => {
                    if shape.len() != 3 {
                        return Err(Error::ShapeMismatch {
                            context: format!("layer {i} (conv needs [channels, h, w])"),
                            expected: vec![1, kernel, kernel],
                            actual: shape,
                        });
                    }
                    Layer::Conv2d(Conv2d::zeroed(shape[0], out_channels, kernel, kernel, arch.bias_enabled))
                }
                LayerSpec::Relu => Layer::Relu,
                LayerSpec::Flatten => Layer::Flatten,
            };
            layer.reinitialize(&mut rng::stream(seed, i as u64));
            shape = layer.output_shape(&shape).map_err(|e| match e {
                Error::ShapeMismatch {
                    context,
                    expected,
                    actual,
                } => Error::ShapeMismatch {
                    context: format!("layer {i} ({context})"),
                    expected,
                    actual,
                },
                other => other,
            })?;
            layers.push(layer);
        }
        Self::new(arch.input_shape.clone(), layers)
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn input_len(&self) -> usize {
        self.input_shape.iter().product()
    }

    pub fn num_classes(&self) -> usize {
        self.shapes.last().unwrap()[0]
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    /// Mutable access for in-place surgery; callers must keep shapes intact.
    pub(crate) fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn layer_input_shape(&self, layer: usize) -> &[usize] {
        &self.shapes[layer]
    }

    /// Indices of Dense/Conv2d layers, input side first.
    pub fn parameterized_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.is_parameterized())
            .map(|(i, _)| i)
            .collect()
    }

    pub fn bias_free(&self) -> bool {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .all(|(_, b)| b.iter().all(|&v| v == 0.0))
    }

    /// Wraps flat data (e.g. one dataset image) into this network's input shape.
    pub fn input_tensor(&self, data: &[f64]) -> Result<Tensor> {
        if data.len() != self.input_len() {
            return Err(Error::ShapeMismatch {
                context: "network input".into(),
                expected: self.input_shape.clone(),
                actual: vec![data.len()],
            });
        }
        Tensor::new(self.input_shape.clone(), data.to_vec())
    }

    fn check_input(&self, x: &Tensor) -> Result<()> {
        if x.shape() != self.input_shape.as_slice() {
            return Err(Error::ShapeMismatch {
                context: "layer 0 input".into(),
                expected: self.input_shape.clone(),
                actual: x.shape().to_vec(),
            });
        }
        Ok(())
    }

    pub fn trace(&self, x: &Tensor) -> Result<ForwardTrace> {
        self.check_input(x)?;
        Ok(self.trace_flat(x.data()))
    }

    pub(crate) fn trace_flat(&self, x: &[f64]) -> ForwardTrace {
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let out = layer.forward(&activations[i], &self.shapes[i]);
            activations.push(out);
        }
        ForwardTrace { activations }
    }

    pub fn forward(&self, x: &Tensor) -> Result<Vec<f64>> {
        let logits = self.trace(x)?.activations.pop().unwrap();
        if logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork("forward pass produced non-finite logits".into()));
        }
        Ok(logits)
    }

    /// Backpropagates `grad_logits` through a trace, returning d(grad_logits . S)/dx.
    pub fn backward_input(&self, trace: &ForwardTrace, grad_logits: &[f64]) -> Vec<f64> {
        let mut grad = grad_logits.to_vec();
        for (i, layer) in self.layers.iter().enumerate().rev() {
            grad = layer.backward_input(trace.layer_input(i), &self.shapes[i], &grad);
        }
        grad
    }

    /// Jacobian of the logits with respect to the input, shape `[C, d]`;
    /// row `i` is dS[i]/dx. One backward pass per logit over a shared trace.
    pub fn logit_gradients(&self, x: &Tensor) -> Result<Tensor> {
        let trace = self.trace(x)?;
        Ok(self.logit_gradients_from_trace(&trace))
    }

    pub(crate) fn logit_gradients_from_trace(&self, trace: &ForwardTrace) -> Tensor {
        let c = self.num_classes();
        let d = self.input_len();
        let mut data = Vec::with_capacity(c * d);
        let mut seed = vec![0.0; c];
        for i in 0..c {
            seed[i] = 1.0;
            data.extend(self.backward_input(trace, &seed));
            seed[i] = 0.0;
        }
        Tensor::new(vec![c, d], data).expect("jacobian of finite network is finite")
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(self.trace_flat(x).logits())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single_dense(rows: &[Vec<f64>]) -> Network {
        let d = Dense::from_rows(rows, None).unwrap();
        Network::new(vec![d.inputs], vec![Layer::Dense(d)]).unwrap()
    }

    #[test]
    fn dense_forward_hand_multiply() {
        let net = single_dense(&[vec![1.0, 2.0], vec![3.0, 4.0]]);
        let x = Tensor::from_vec(vec![1.0, 1.0]).unwrap();
        assert_eq!(net.forward(&x).unwrap(), vec![3.0, 7.0]);
    }

    #[test]
    fn relu_clamps_negative_logit() {
        let d = Dense::from_rows(&[vec![-1.0]], None).unwrap();
        let net = Network::new(vec![1], vec![Layer::Dense(d), Layer::Relu]).unwrap();
        assert_eq!(net.forward(&Tensor::from_vec(vec![5.0]).unwrap()).unwrap(), vec![0.0]);
    }

    #[test]
    fn zero_input_zero_bias_gives_zero_logits() {
        let arch = Architecture::parse("conv:2:3,relu,flatten,dense:5,relu,dense:3", vec![1, 6, 6], false)
            .unwrap();
        let net = Network::init(&arch, 11).unwrap();
        let logits = net.forward(&Tensor::zeros(vec![1, 6, 6])).unwrap();
        assert!(logits.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn linear_net_gradient_is_weight_matrix() {
        let rows = vec![vec![1.0, -2.0, 0.5], vec![3.0, 4.0, -1.0]];
        let net = single_dense(&rows);
        let g = net.logit_gradients(&Tensor::from_vec(vec![0.3, -0.7, 2.0]).unwrap()).unwrap();
        assert_eq!(g.shape(), &[2, 3]);
        assert_eq!(g.data(), rows.concat().as_slice());
    }

    #[test]
    fn shape_mismatch_names_layer() {
        let arch = Architecture::parse("flatten,dense:4,relu,dense:2", vec![2, 3], true).unwrap();
        let net = Network::init(&arch, 0).unwrap();
        let err = net.forward(&Tensor::zeros(vec![6])).unwrap_err();
        assert!(err.to_string().contains("layer 0"), "{err}");

        let bad = Network::new(
            vec![4],
            vec![
                Layer::Dense(Dense::zeroed(4, 3, false)),
                Layer::Dense(Dense::zeroed(5, 2, false)),
            ],
        )
        .unwrap_err();
        assert!(bad.to_string().contains("layer 1"), "{bad}");
    }

    #[test]
    fn architecture_round_trips_through_text() {
        let arch = Architecture::parse("conv:4:3, relu,flatten,dense:10", vec![1, 8, 8], true).unwrap();
        assert_eq!(arch.layers_string(), "conv:4:3,relu,flatten,dense:10");
        assert!(Architecture::parse("dense:0", vec![3], true).is_err());
        assert!(Architecture::parse("pool:2", vec![3], true).is_err());
        assert!(Architecture::parse("dense:3", vec![1, 3], true)
            .and_then(|a| Network::init(&a, 0))
            .is_err());
    }
}
