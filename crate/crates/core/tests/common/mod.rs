#![allow(dead_code)]

use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};
use saliency_lab::nn::{Architecture, Network};
use saliency_lab::rng::{self, Rng};
use saliency_lab::Tensor;

/// Random dense ReLU net with 1..=`max_layers` dense layers, input width
/// up to `max_dim`, and 2..=6 outputs.
pub fn random_mlp(rng: &mut Rng, max_layers: usize, max_dim: usize, bias: bool) -> Network {
    let depth = rng.random_range(1..=max_layers);
    let d = rng.random_range(2..=max_dim);
    let mut spec = Vec::new();
    for _ in 0..depth - 1 {
        spec.push(format!("dense:{}", rng.random_range(2..=max_dim)));
        spec.push("relu".to_string());
    }
    spec.push(format!("dense:{}", rng.random_range(2..=6)));
    let arch = Architecture::parse(&spec.join(","), vec![d], bias).unwrap();
    let mut net = Network::init(&arch, rng.random()).unwrap();
    if bias {
        perturb_biases(&mut net, rng);
    }
    net
}

/// Small conv net on a `[c, h, w]` input.
pub fn random_convnet(rng: &mut Rng, bias: bool) -> Network {
    let c = rng.random_range(1..=2);
    let side = rng.random_range(4..=6);
    let filters = rng.random_range(1..=3);
    let k = rng.random_range(2..=3);
    let layers = format!("conv:{filters}:{k},relu,flatten,dense:{}", rng.random_range(2..=5));
    let arch = Architecture::parse(&layers, vec![c, side, side], bias).unwrap();
    let mut net = Network::init(&arch, rng.random()).unwrap();
    if bias {
        perturb_biases(&mut net, rng);
    }
    net
}

// Fresh biases are zero; give them values so bias paths are exercised.
fn perturb_biases(net: &mut Network, rng: &mut Rng) {
    use saliency_lab::nn::Layer;
    let mut layers: Vec<Layer> = net.layers().to_vec();
    for layer in &mut layers {
        match layer {
            Layer::Dense(d) => d.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3)),
            Layer::Conv2d(c) => c.bias.iter_mut().for_each(|b| *b = rng.random_range(-0.3..0.3)),
            _ => {}
        }
    }
    *net = Network::new(net.input_shape().to_vec(), layers).unwrap();
}

pub fn random_input(net: &Network, rng: &mut Rng) -> Tensor {
    let data: Vec<f64> = (0..net.input_len()).map(|_| StandardNormal.sample(rng)).collect();
    net.input_tensor(&data).unwrap()
}

pub fn seeded(seed: u64) -> Rng {
    rng::seeded(seed)
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 && nb == 0.0 {
        return 1.0;
    }
    dot / (na * nb)
}

/// Max over entries of |analytic - numeric| / max(|analytic|, |numeric|, 1e-6),
/// with central differences of step `h`.
pub fn max_fd_relative_error(net: &Network, x: &Tensor, h: f64) -> f64 {
    let grads = net.logit_gradients(x).unwrap();
    let d = net.input_len();
    let c = net.num_classes();
    let mut worst: f64 = 0.0;
    for j in 0..d {
        let mut plus = x.data().to_vec();
        let mut minus = x.data().to_vec();
        plus[j] += h;
        minus[j] -= h;
        let fp = net.forward(&net.input_tensor(&plus).unwrap()).unwrap();
        let fm = net.forward(&net.input_tensor(&minus).unwrap()).unwrap();
        for i in 0..c {
            let numeric = (fp[i] - fm[i]) / (2.0 * h);
            let analytic = grads.data()[i * d + j];
            let denom = analytic.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
    }
    worst
}
