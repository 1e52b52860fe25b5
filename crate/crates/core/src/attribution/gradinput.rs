use crate::error::Result;
use crate::nn::Network;
use crate::tensor::Tensor;

use super::map::{MapStack, Method, SaliencyMap};

/// Gradient x Input for every output node. `chosen` defaults to the
/// predicted label; use [`MapStack::with_chosen`] to explain another one.
pub fn grad_input_stack(net: &Network, x: &Tensor) -> Result<MapStack> {
    let trace = net.trace(x)?;
    let jacobian = net.logit_gradients_from_trace(&trace);
    let d = x.len();
    let maps = jacobian
        .data()
        .chunks_exact(d)
        .enumerate()
        .map(|(node, row)| {
            let scores: Vec<f64> = row.iter().zip(x.data()).map(|(g, xi)| g * xi).collect();
            SaliencyMap::new(
                Tensor::new(x.shape().to_vec(), scores).expect("finite gradient times finite input"),
                Method::GradInput,
                node,
            )
        })
        .collect();
    MapStack::new(maps, crate::nn::network_argmax(trace.logits()))
}
