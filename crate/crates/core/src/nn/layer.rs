use rand::Rng as _;

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Fully connected layer, `weights` stored row-major as `outputs × inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub bias_enabled: bool,
}

/// 2-D convolution over `[channels, height, width]` inputs, valid padding, stride 1.
/// `kernels` is laid out as `out_channels × in_channels × kernel_h × kernel_w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conv2d {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub kernels: Vec<f64>,
    pub bias: Vec<f64>,
    pub bias_enabled: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    Dense(Dense),
    Conv2d(Conv2d),
    Relu,
    Flatten,
}

/// Gradient buffers for one layer's parameters (empty for parameter-free layers).
#[derive(Debug, Clone, Default)]
pub struct ParamGrads {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    pub fn zeroed(inputs: usize, outputs: usize, bias_enabled: bool) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
            bias_enabled,
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], bias: Option<Vec<f64>>) -> Result<Self> {
        let outputs = rows.len();
        let inputs = rows.first().map_or(0, Vec::len);
        if outputs == 0 || inputs == 0 || rows.iter().any(|r| r.len() != inputs) {
            return Err(Error::InvalidNetwork("dense rows must be non-empty and rectangular".into()));
        }
        let bias_enabled = bias.is_some();
        let bias = bias.unwrap_or_else(|| vec![0.0; outputs]);
        if bias.len() != outputs {
            return Err(Error::InvalidNetwork(format!(
                "dense bias has {} entries for {outputs} rows",
                bias.len()
            )));
        }
        Ok(Self {
            inputs,
            outputs,
            weights: rows.concat(),
            bias,
            bias_enabled,
        })
    }

    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }
}

impl Conv2d {
    pub fn zeroed(
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        bias_enabled: bool,
    ) -> Self {
        Self {
            in_channels,
            out_channels,
            kernel_h,
            kernel_w,
            kernels: vec![0.0; out_channels * in_channels * kernel_h * kernel_w],
            bias: vec![0.0; out_channels],
            bias_enabled,
        }
    }

    fn fan_in(&self) -> usize {
        self.in_channels * self.kernel_h * self.kernel_w
    }

    fn out_hw(&self, in_shape: &[usize]) -> (usize, usize) {
        (in_shape[1] - self.kernel_h + 1, in_shape[2] - self.kernel_w + 1)
    }

    fn kernel_index(&self, o: usize, c: usize, dy: usize, dx: usize) -> usize {
        ((o * self.in_channels + c) * self.kernel_h + dy) * self.kernel_w + dx
    }
}

impl Layer {
    pub fn name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv2d(_) => "conv2d",
            Layer::Relu => "relu",
            Layer::Flatten => "flatten",
        }
    }

    pub fn is_parameterized(&self) -> bool {
        matches!(self, Layer::Dense(_) | Layer::Conv2d(_))
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match self {
            Layer::Dense(d) => {
                if input != [d.inputs] {
                    return Err(Error::ShapeMismatch {
                        context: "dense input".into(),
                        expected: vec![d.inputs],
                        actual: input.to_vec(),
                    });
                }
                Ok(vec![d.outputs])
            }
            Layer::Conv2d(c) => {
                if input.len() != 3
                    || input[0] != c.in_channels
                    || input[1] < c.kernel_h
                    || input[2] < c.kernel_w
                {
                    return Err(Error::ShapeMismatch {
                        context: format!(
                            "conv2d input ({} channels, {}x{} kernel)",
                            c.in_channels, c.kernel_h, c.kernel_w
                        ),
                        expected: vec![c.in_channels, c.kernel_h, c.kernel_w],
                        actual: input.to_vec(),
                    });
                }
                let (oh, ow) = c.out_hw(input);
                Ok(vec![c.out_channels, oh, ow])
            }
            Layer::Relu => Ok(input.to_vec()),
            Layer::Flatten => Ok(vec![input.iter().product()]),
        }
    }

    /// Checks the internal parameter invariants (sizes, zero bias when disabled).
    pub fn validate(&self) -> Result<()> {
        let (weights, expected_w, bias, expected_b, enabled) = match self {
            Layer::Dense(d) => (&d.weights, d.inputs * d.outputs, &d.bias, d.outputs, d.bias_enabled),
            Layer::Conv2d(c) => (
                &c.kernels,
                c.out_channels * c.fan_in(),
                &c.bias,
                c.out_channels,
                c.bias_enabled,
            ),
            Layer::Relu | Layer::Flatten => return Ok(()),
        };
        if expected_w == 0 || weights.len() != expected_w || bias.len() != expected_b {
            return Err(Error::InvalidNetwork(format!(
                "{} parameters have inconsistent sizes",
                self.name()
            )));
        }
        if !enabled && bias.iter().any(|&b| b != 0.0) {
            return Err(Error::InvalidNetwork(format!(
                "{} has bias disabled but nonzero bias entries",
                self.name()
            )));
        }
        if weights.iter().chain(bias).any(|v| !v.is_finite()) {
            return Err(Error::InvalidNetwork(format!("{} has non-finite parameters", self.name())));
        }
        Ok(())
    }

    /// Re-draws weights from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and zeroes the bias.
    pub fn reinitialize(&mut self, rng: &mut Rng) {
        let (weights, bias, fan_in) = match self {
            Layer::Dense(d) => (&mut d.weights, &mut d.bias, d.inputs),
            Layer::Conv2d(c) => {
                let fan_in = c.fan_in();
                (&mut c.kernels, &mut c.bias, fan_in)
            }
            Layer::Relu | Layer::Flatten => return,
        };
        let bound = 1.0 / (fan_in as f64).sqrt();
        for w in weights.iter_mut() {
            *w = rng.random_range(-bound..bound);
        }
        bias.iter_mut().for_each(|b| *b = 0.0);
    }

    pub fn forward(&self, input: &[f64], in_shape: &[usize]) -> Vec<f64> {
        match self {
            Layer::Dense(d) => (0..d.outputs)
                .map(|o| dot(d.row(o), input) + d.bias[o])
                .collect(),
            Layer::Conv2d(c) => {
                let (h, w) = (in_shape[1], in_shape[2]);
                let (oh, ow) = c.out_hw(in_shape);
                let mut out = vec![0.0; c.out_channels * oh * ow];
                for o in 0..c.out_channels {
                    for y in 0..oh {
                        for x in 0..ow {
                            let mut acc = c.bias[o];
                            for ch in 0..c.in_channels {
                                for dy in 0..c.kernel_h {
                                    let row = (ch * h + y + dy) * w + x;
                                    let k = c.kernel_index(o, ch, dy, 0);
                                    acc += dot(&c.kernels[k..k + c.kernel_w], &input[row..row + c.kernel_w]);
                                }
                            }
                            out[(o * oh + y) * ow + x] = acc;
                        }
                    }
                }
                out
            }
            Layer::Relu => input.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect(),
            Layer::Flatten => input.to_vec(),
        }
    }

    /// Vector-Jacobian product with respect to the layer input.
    ///
    /// The ReLU derivative at exactly 0 is taken to be 0.
    pub fn backward_input(&self, input: &[f64], in_shape: &[usize], grad_out: &[f64]) -> Vec<f64> {
        match self {
            Layer::Dense(d) => {
                let mut grad_in = vec![0.0; d.inputs];
                for (o, &g) in grad_out.iter().enumerate() {
                    if g != 0.0 {
                        axpy(g, d.row(o), &mut grad_in);
                    }
                }
                grad_in
            }
            Layer::Conv2d(c) => {
                let (h, w) = (in_shape[1], in_shape[2]);
                let (oh, ow) = c.out_hw(in_shape);
                let mut grad_in = vec![0.0; input.len()];
                for o in 0..c.out_channels {
                    for y in 0..oh {
                        for x in 0..ow {
                            let g = grad_out[(o * oh + y) * ow + x];
                            if g == 0.0 {
                                continue;
                            }
                            for ch in 0..c.in_channels {
                                for dy in 0..c.kernel_h {
                                    let row = (ch * h + y + dy) * w + x;
                                    let k = c.kernel_index(o, ch, dy, 0);
                                    axpy(g, &c.kernels[k..k + c.kernel_w], &mut grad_in[row..row + c.kernel_w]);
                                }
                            }
                        }
                    }
                }
                grad_in
            }
            Layer::Relu => input
                .iter()
                .zip(grad_out)
                .map(|(&a, &g)| if a > 0.0 { g } else { 0.0 })
                .collect(),
            Layer::Flatten => grad_out.to_vec(),
        }
    }

    pub fn zero_grads(&self) -> ParamGrads {
        match self {
            Layer::Dense(d) => ParamGrads {
                weights: vec![0.0; d.weights.len()],
                bias: vec![0.0; d.bias.len()],
            },
            Layer::Conv2d(c) => ParamGrads {
                weights: vec![0.0; c.kernels.len()],
                bias: vec![0.0; c.bias.len()],
            },
            Layer::Relu | Layer::Flatten => ParamGrads::default(),
        }
    }

    pub fn accumulate_param_grads(
        &self,
        input: &[f64],
        in_shape: &[usize],
        grad_out: &[f64],
        grads: &mut ParamGrads,
    ) {
        match self {
            Layer::Dense(d) => {
                for (o, &g) in grad_out.iter().enumerate() {
                    if g == 0.0 {
                        continue;
                    }
                    axpy(g, input, &mut grads.weights[o * d.inputs..(o + 1) * d.inputs]);
                    grads.bias[o] += g;
                }
            }
            Layer::Conv2d(c) => {
                let (h, w) = (in_shape[1], in_shape[2]);
                let (oh, ow) = c.out_hw(in_shape);
                for o in 0..c.out_channels {
                    for y in 0..oh {
                        for x in 0..ow {
                            let g = grad_out[(o * oh + y) * ow + x];
                            if g == 0.0 {
                                continue;
                            }
                            grads.bias[o] += g;
                            for ch in 0..c.in_channels {
                                for dy in 0..c.kernel_h {
                                    let row = (ch * h + y + dy) * w + x;
                                    let k = c.kernel_index(o, ch, dy, 0);
                                    axpy(g, &input[row..row + c.kernel_w], &mut grads.weights[k..k + c.kernel_w]);
                                }
                            }
                        }
                    }
                }
            }
            Layer::Relu | Layer::Flatten => {}
        }
    }

    pub fn apply_sgd(&mut self, grads: &ParamGrads, step: f64) {
        let (weights, bias, bias_enabled) = match self {
            Layer::Dense(d) => (&mut d.weights, &mut d.bias, d.bias_enabled),
            Layer::Conv2d(c) => (&mut c.kernels, &mut c.bias, c.bias_enabled),
            Layer::Relu | Layer::Flatten => return,
        };
        axpy(-step, &grads.weights, weights);
        if bias_enabled {
            axpy(-step, &grads.bias, bias);
        }
    }

    pub fn params(&self) -> Option<(&[f64], &[f64])> {
        match self {
            Layer::Dense(d) => Some((&d.weights, &d.bias)),
            Layer::Conv2d(c) => Some((&c.kernels, &c.bias)),
            Layer::Relu | Layer::Flatten => None,
        }
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}
