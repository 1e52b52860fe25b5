use crate::error::{Error, Result};
use crate::rng;

use super::network::Network;

/// Returns a copy of `net` with layer `layer_index` re-drawn from the
/// initialization distribution (stream `derive_seed(seed, layer_index)`).
pub fn randomize_layer(net: &Network, layer_index: usize, seed: u64) -> Result<Network> {
    let layer = net.layers().get(layer_index).ok_or_else(|| Error::InvalidLayer {
        index: layer_index,
        reason: format!("network has {} layers", net.layers().len()),
    })?;
    if !layer.is_parameterized() {
        return Err(Error::InvalidLayer {
            index: layer_index,
            reason: format!("{} has no parameters", layer.name()),
        });
    }
    let mut out = net.clone();
    out.layers_mut()[layer_index].reinitialize(&mut rng::stream(seed, layer_index as u64));
    Ok(out)
}

/// Re-initializes the `top_k` parameterized layers nearest the output,
/// working from the output toward the input.
pub fn cascading_randomize(net: &Network, top_k: usize, seed: u64) -> Result<Network> {
    let params = net.parameterized_layers();
    if top_k == 0 || top_k > params.len() {
        return Err(Error::InvalidArgument(format!(
            "top_k must be in 1..={}, got {top_k}",
            params.len()
        )));
    }
    let mut out = net.clone();
    for &idx in params.iter().rev().take(top_k) {
        out.layers_mut()[idx].reinitialize(&mut rng::stream(seed, idx as u64));
    }
    Ok(out)
}
