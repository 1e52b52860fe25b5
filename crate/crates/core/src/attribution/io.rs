//! Flat little-endian containers for maps.
//!
//! ```text
//! map   "SFM1" method:u32 node:u32   rank:u32 dims:u32[rank] scores:f64[prod(dims)]
//! stack "SFS1" method:u32 chosen:u32 count:u32 rank:u32 dims:u32[rank] scores:f64[count*prod(dims)]
//! ```
//! Method tags: 0 gradinput, 1 cgi, 2 lrp, 3 clrp.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::map::{MapStack, Method, SaliencyMap};

pub const MAP_MAGIC: &[u8; 4] = b"SFM1";
pub const STACK_MAGIC: &[u8; 4] = b"SFS1";

fn put(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("fits in u32").to_le_bytes());
}

fn put_shape(out: &mut Vec<u8>, shape: &[usize]) {
    put(out, shape.len());
    for &d in shape {
        put(out, d);
    }
}

fn put_scores(out: &mut Vec<u8>, v: &[f64]) {
    for x in v {
        out.extend_from_slice(&x.to_le_bytes());
    }
}

pub fn encode_map(map: &SaliencyMap) -> Vec<u8> {
    let mut out = MAP_MAGIC.to_vec();
    put(&mut out, map.method.tag() as usize);
    put(&mut out, map.node);
    put_shape(&mut out, map.shape());
    put_scores(&mut out, map.values());
    out
}

pub fn encode_stack(stack: &MapStack) -> Vec<u8> {
    let mut out = STACK_MAGIC.to_vec();
    put(&mut out, stack.method().tag() as usize);
    put(&mut out, stack.chosen());
    put(&mut out, stack.num_nodes());
    put_shape(&mut out, stack.chosen_map().shape());
    for m in stack.maps() {
        put_scores(&mut out, m.values());
    }
    out
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    what: &'static str,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        match self.pos.checked_add(n).filter(|&e| e <= self.bytes.len()) {
            Some(end) => {
                let s = &self.bytes[self.pos..end];
                self.pos = end;
                Ok(s)
            }
            None => Err(Error::Truncated {
                what: self.what,
                needed: self.pos.saturating_add(n),
                found: self.bytes.len(),
            }),
        }
    }

    fn magic(&mut self, expected: &[u8; 4]) -> Result<()> {
        let m = self.take(4)?;
        if m != expected {
            return Err(Error::BadMagic {
                what: self.what,
                expected: u32::from_be_bytes(*expected),
                found: u32::from_be_bytes(m.try_into().unwrap()),
            });
        }
        Ok(())
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn method(&mut self) -> Result<Method> {
        let tag = self.u32()? as u32;
        Method::from_tag(tag).ok_or_else(|| Error::Malformed {
            what: self.what,
            reason: format!("unknown method tag {tag}"),
        })
    }

    fn shape(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()?;
        (0..rank).map(|_| self.u32()).collect()
    }

    fn tensor(&mut self, shape: &[usize]) -> Result<Tensor> {
        let n = shape.iter().product::<usize>();
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Malformed {
            what: self.what,
            reason: "size overflow".into(),
        })?)?;
        let data = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(shape.to_vec(), data).map_err(|e| Error::Malformed {
            what: self.what,
            reason: e.to_string(),
        })
    }

    fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Malformed {
                what: self.what,
                reason: format!("{} trailing bytes", self.bytes.len() - self.pos),
            });
        }
        Ok(())
    }
}

pub fn decode_map(bytes: &[u8]) -> Result<SaliencyMap> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        what: "map file",
    };
    c.magic(MAP_MAGIC)?;
    let method = c.method()?;
    let node = c.u32()?;
    let shape = c.shape()?;
    let scores = c.tensor(&shape)?;
    c.finish()?;
    Ok(SaliencyMap::new(scores, method, node))
}

pub fn decode_stack(bytes: &[u8]) -> Result<MapStack> {
    let mut c = Cursor {
        bytes,
        pos: 0,
        what: "map stack file",
    };
    c.magic(STACK_MAGIC)?;
    let method = c.method()?;
    let chosen = c.u32()?;
    let count = c.u32()?;
    let shape = c.shape()?;
    let maps = (0..count)
        .map(|node| Ok(SaliencyMap::new(c.tensor(&shape)?, method, node)))
        .collect::<Result<Vec<_>>>()?;
    c.finish()?;
    MapStack::new(maps, chosen)
}

pub fn save_map(map: &SaliencyMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_map(map)).map_err(|e| Error::io(path, e))
}

pub fn load_map(path: impl AsRef<Path>) -> Result<SaliencyMap> {
    let path = path.as_ref();
    decode_map(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

pub fn save_stack(stack: &MapStack, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_stack(stack)).map_err(|e| Error::io(path, e))
}

pub fn load_stack(path: impl AsRef<Path>) -> Result<MapStack> {
    let path = path.as_ref();
    decode_stack(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
