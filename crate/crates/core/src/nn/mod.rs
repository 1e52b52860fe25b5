//! Minimal feedforward network: dense, conv2d (valid, stride 1), ReLU and
//! flatten layers over `f64`, with exact input gradients for every logit,
//! SGD training and weight-randomization surgery.
//!
//! Weights are initialized from U(-1/sqrt(fan_in), 1/sqrt(fan_in)) and
//! biases start at zero; randomization tests re-draw from the same law.

mod io;
mod layer;
mod network;
mod randomize;
mod train;

pub use io::{decode as decode_network, encode as encode_network, load as load_network, save as save_network};
pub use layer::{Conv2d, Dense, Layer, ParamGrads};
pub use network::{Architecture, ForwardTrace, LayerSpec, Network};
pub use randomize::{cascading_randomize, randomize_layer};
pub use train::{accuracy, train, TrainConfig, TrainReport};
pub(crate) use network::argmax as network_argmax;
