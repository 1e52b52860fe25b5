//! `SFN1` network container.
//!
//! All integers are little-endian `u32`, all parameters little-endian `f64`:
//!
//! ```text
//! "SFN1"
//! input_rank, input_dims[input_rank]
//! layer_count
//! per layer:
//!   kind          0 = dense, 1 = conv2d, 2 = relu, 3 = flatten
//!   dense:  bias_enabled (0|1), inputs, outputs, weights[out*in], bias[out]
//!   conv2d: bias_enabled (0|1), in_ch, out_ch, kernel_h, kernel_w,
//!           kernels[out*in*kh*kw], bias[out]
//! ```

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::layer::{Conv2d, Dense, Layer};
use super::network::Network;

pub const MAGIC: &[u8; 4] = b"SFN1";

pub fn encode(net: &Network) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    put_u32(&mut out, net.input_shape().len());
    for &d in net.input_shape() {
        put_u32(&mut out, d);
    }
    put_u32(&mut out, net.layers().len());
    for layer in net.layers() {
        match layer {
            Layer::Dense(d) => {
                put_u32(&mut out, 0);
                put_u32(&mut out, d.bias_enabled as usize);
                put_u32(&mut out, d.inputs);
                put_u32(&mut out, d.outputs);
                put_f64s(&mut out, &d.weights);
                put_f64s(&mut out, &d.bias);
            }
            Layer::Conv2d(c) => {
                put_u32(&mut out, 1);
                put_u32(&mut out, c.bias_enabled as usize);
                for v in [c.in_channels, c.out_channels, c.kernel_h, c.kernel_w] {
                    put_u32(&mut out, v);
                }
                put_f64s(&mut out, &c.kernels);
                put_f64s(&mut out, &c.bias);
            }
            Layer::Relu => put_u32(&mut out, 2),
            Layer::Flatten => put_u32(&mut out, 3),
        }
    }
    out
}

pub fn decode(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(Error::BadMagic {
            what: "network file",
            expected: u32::from_be_bytes(*MAGIC),
            found: u32::from_be_bytes(magic.try_into().unwrap()),
        });
    }
    let rank = r.u32()?;
    let input_shape = (0..rank).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let count = r.u32()?;
    let mut layers = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let layer = match r.u32()? {
            0 => {
                let bias_enabled = r.flag()?;
                let (inputs, outputs) = (r.u32()?, r.u32()?);
                let weights = r.f64s(inputs.checked_mul(outputs).ok_or_else(overflow)?)?;
                let bias = r.f64s(outputs)?;
                Layer::Dense(Dense {
                    inputs,
                    outputs,
                    weights,
                    bias,
                    bias_enabled,
                })
            }
            1 => {
                let bias_enabled = r.flag()?;
                let (in_channels, out_channels, kernel_h, kernel_w) = (r.u32()?, r.u32()?, r.u32()?, r.u32()?);
                let n = [in_channels, kernel_h, kernel_w]
                    .iter()
                    .try_fold(out_channels, |acc, &v| acc.checked_mul(v))
                    .ok_or_else(overflow)?;
                let kernels = r.f64s(n)?;
                let bias = r.f64s(out_channels)?;
                Layer::Conv2d(Conv2d {
                    in_channels,
                    out_channels,
                    kernel_h,
                    kernel_w,
                    kernels,
                    bias,
                    bias_enabled,
                })
            }
            2 => Layer::Relu,
            3 => Layer::Flatten,
            tag => {
                return Err(Error::Malformed {
                    what: "network file",
                    reason: format!("unknown layer kind {tag}"),
                })
            }
        };
        layers.push(layer);
    }
    if r.pos != bytes.len() {
        return Err(Error::Malformed {
            what: "network file",
            reason: format!("{} trailing bytes", bytes.len() - r.pos),
        });
    }
    Network::new(input_shape, layers)
}

pub fn save(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode(net)).map_err(|e| Error::io(path, e))
}

pub fn load(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    decode(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

fn overflow() -> Error {
    Error::Malformed {
        what: "network file",
        reason: "parameter count overflows".into(),
    }
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("dimension fits in u32").to_le_bytes());
}

fn put_f64s(out: &mut Vec<u8>, vs: &[f64]) {
    for v in vs {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                what: "network file",
                needed: self.pos.saturating_add(n),
                found: self.bytes.len(),
            }),
        }
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn flag(&mut self) -> Result<bool> {
        match self.u32()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Malformed {
                what: "network file",
                reason: format!("bias flag {v}"),
            }),
        }
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(overflow)?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;
    use proptest::prelude::*;

    #[test]
    fn rejects_garbage() {
        assert!(matches!(decode(b"SFN2...."), Err(Error::BadMagic { .. })));
        assert!(matches!(decode(b"SF"), Err(Error::Truncated { .. })));
        let arch = Architecture::parse("dense:2", vec![3], true).unwrap();
        let mut bytes = encode(&Network::init(&arch, 0).unwrap());
        bytes.push(0);
        assert!(matches!(decode(&bytes), Err(Error::Malformed { .. })));
        bytes.truncate(bytes.len() - 9);
        assert!(matches!(decode(&bytes), Err(Error::Truncated { .. })));
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed in any::<u64>(), conv in any::<bool>(), bias in any::<bool>()) {
            let layers = if conv { "conv:2:2,relu,flatten,dense:3" } else { "flatten,dense:4,relu,dense:3" };
            let arch = Architecture::parse(layers, vec![1, 4, 4], bias).unwrap();
            let net = Network::init(&arch, seed).unwrap();
            let bytes = encode(&net);
            let back = decode(&bytes).unwrap();
            prop_assert_eq!(&back, &net);
            prop_assert_eq!(encode(&back), bytes);
        }
    }
}
