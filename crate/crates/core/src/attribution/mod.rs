//! Per-logit saliency maps (Gradient x Input, epsilon-LRP), completeness
//! checks, and competitive selection (CGI, CLRP).
//!
//! Competition works per scalar input element; channel reduction for
//! display is left to [`crate::render`].

mod compete;
mod completeness;
mod gradinput;
mod io;
mod lrp;
mod map;
mod sparsity;

pub use compete::{cgi, clrp, compete};
pub use completeness::{completeness_report, linear_fit, CompletenessReport, FitOutcome, LinearFit};
pub use gradinput::grad_input_stack;
pub use io::{
    decode_map, decode_stack, encode_map, encode_stack, load_map, load_stack, save_map, save_stack,
};
pub use lrp::{lrp_relevances, lrp_stack, DEFAULT_EPSILON};
pub use map::{nonzero_fraction, MapStack, Method, SaliencyMap, NONZERO_THRESHOLD};
pub use sparsity::{sparsity_diagnostic, SparsityDiagnostic};

use crate::error::Result;
use crate::nn::Network;
use crate::tensor::Tensor;

/// Computes the map for `method` explaining node `chosen` (or the
/// predicted label when `None`). LRP-based methods use `epsilon`.
pub fn attribute(
    net: &Network,
    x: &Tensor,
    method: Method,
    chosen: Option<usize>,
    epsilon: f64,
) -> Result<SaliencyMap> {
    let stack = match method.base() {
        Method::Lrp => lrp_stack(net, x, epsilon)?,
        _ => grad_input_stack(net, x)?,
    };
    let stack = match chosen {
        Some(c) => stack.with_chosen(c)?,
        None => stack,
    };
    Ok(if method.is_competitive() {
        compete(&stack)
    } else {
        stack.chosen_map().clone()
    })
}
