//! Epsilon-rule layer-wise relevance propagation.
//!
//! For a linear layer (dense or unrolled conv) with pre-activations
//! `z_k = sum_j a_j w_jk + b_k`, relevance flows back as
//! `R_j = a_j * sum_k w_jk R_k / (z_k + eps * sign(z_k))`, with sign(0) = +1.
//! ReLU and flatten pass relevance through unchanged. The bias share of the
//! relevance is absorbed, so conservation is exact only for bias-free nets.

use crate::error::{Error, Result};
use crate::nn::{ForwardTrace, Network};
use crate::tensor::Tensor;

use super::map::{MapStack, Method, SaliencyMap};

pub const DEFAULT_EPSILON: f64 = 1e-6;

fn stabilize(z: f64, eps: f64) -> f64 {
    if z >= 0.0 {
        z + eps
    } else {
        z - eps
    }
}

/// Relevance at every activation level for output node `node`, starting
/// from the logit itself. Entry `i` is the relevance on the input of layer
/// `i`; the last entry is the seeded output relevance.
pub fn lrp_relevances(net: &Network, trace: &ForwardTrace, node: usize, epsilon: f64) -> Vec<Vec<f64>> {
    let layers = net.layers();
    let mut levels = vec![Vec::new(); layers.len() + 1];
    let mut relevance = vec![0.0; net.num_classes()];
    relevance[node] = trace.logits()[node];
    levels[layers.len()] = relevance.clone();
    for (i, layer) in layers.iter().enumerate().rev() {
        if layer.is_parameterized() {
            let z = trace.layer_output(i);
            let ratio: Vec<f64> = relevance
                .iter()
                .zip(z)
                .map(|(&r, &zk)| r / stabilize(zk, epsilon))
                .collect();
            let a = trace.layer_input(i);
            let c = layer.backward_input(a, net.layer_input_shape(i), &ratio);
            relevance = a.iter().zip(&c).map(|(aj, cj)| aj * cj).collect();
        }
        levels[i] = relevance.clone();
    }
    levels
}

/// LRP maps for every output node; `chosen` defaults to the predicted label.
pub fn lrp_stack(net: &Network, x: &Tensor, epsilon: f64) -> Result<MapStack> {
    if !(epsilon > 0.0 && epsilon.is_finite()) {
        return Err(Error::InvalidArgument(format!("lrp epsilon must be > 0, got {epsilon}")));
    }
    let trace = net.trace(x)?;
    let maps = (0..net.num_classes())
        .map(|node| {
            let scores = lrp_relevances(net, &trace, node, epsilon).swap_remove(0);
            Tensor::new(x.shape().to_vec(), scores)
                .map(|t| SaliencyMap::new(t, Method::Lrp, node))
                .map_err(|_| Error::InvalidArgument(format!("lrp relevance for node {node} is not finite")))
        })
        .collect::<Result<Vec<_>>>()?;
    MapStack::new(maps, crate::nn::network_argmax(trace.logits()))
}
