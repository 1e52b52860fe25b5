use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    GradInput,
    Cgi,
    Lrp,
    Clrp,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::GradInput, Method::Cgi, Method::Lrp, Method::Clrp];

    pub fn tag(self) -> u32 {
        match self {
            Method::GradInput => 0,
            Method::Cgi => 1,
            Method::Lrp => 2,
            Method::Clrp => 3,
        }
    }

    pub fn from_tag(tag: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.tag() == tag)
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::GradInput => "gradinput",
            Method::Cgi => "cgi",
            Method::Lrp => "lrp",
            Method::Clrp => "clrp",
        }
    }

    /// The per-node method a competitive method is built from.
    pub fn base(self) -> Method {
        match self {
            Method::GradInput | Method::Cgi => Method::GradInput,
            Method::Lrp | Method::Clrp => Method::Lrp,
        }
    }

    pub fn is_competitive(self) -> bool {
        matches!(self, Method::Cgi | Method::Clrp)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s.trim())
            .ok_or_else(|| Error::InvalidArgument(format!("unknown method '{s}' (gradinput|cgi|lrp|clrp)")))
    }
}

/// Per-input-element scores explaining output node `node`.
#[derive(Debug, Clone, PartialEq)]
pub struct SaliencyMap {
    pub scores: Tensor,
    pub method: Method,
    pub node: usize,
}

impl SaliencyMap {
    pub fn new(scores: Tensor, method: Method, node: usize) -> Self {
        Self { scores, method, node }
    }

    pub fn values(&self) -> &[f64] {
        self.scores.data()
    }

    pub fn shape(&self) -> &[usize] {
        self.scores.shape()
    }

    pub fn sum(&self) -> f64 {
        self.values().iter().sum()
    }

    pub fn nonzero_fraction(&self) -> f64 {
        nonzero_fraction(self.values())
    }
}

/// Threshold below which a score counts as blank.
pub const NONZERO_THRESHOLD: f64 = 1e-12;

pub fn nonzero_fraction(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().filter(|v| v.abs() > NONZERO_THRESHOLD).count() as f64 / values.len() as f64
}

/// One map per output node, plus the label whose map competes.
#[derive(Debug, Clone, PartialEq)]
pub struct MapStack {
    maps: Vec<SaliencyMap>,
    chosen: usize,
}

impl MapStack {
    pub fn new(maps: Vec<SaliencyMap>, chosen: usize) -> Result<Self> {
        let first = maps.first().ok_or_else(|| Error::Empty("map stack".into()))?;
        let (method, shape) = (first.method, first.shape().to_vec());
        for (i, m) in maps.iter().enumerate() {
            if m.node != i || m.method != method {
                return Err(Error::InvalidArgument(format!(
                    "map {i} has node {} / method {}, expected node {i} / method {method}",
                    m.node, m.method
                )));
            }
            if m.shape() != shape.as_slice() {
                return Err(Error::ShapeMismatch {
                    context: format!("map stack entry {i}"),
                    expected: shape,
                    actual: m.shape().to_vec(),
                });
            }
        }
        if chosen >= maps.len() {
            return Err(Error::InvalidArgument(format!(
                "chosen label {chosen} outside [0, {})",
                maps.len()
            )));
        }
        Ok(Self { maps, chosen })
    }

    pub fn maps(&self) -> &[SaliencyMap] {
        &self.maps
    }

    pub fn chosen(&self) -> usize {
        self.chosen
    }

    pub fn chosen_map(&self) -> &SaliencyMap {
        &self.maps[self.chosen]
    }

    pub fn method(&self) -> Method {
        self.maps[0].method
    }

    pub fn num_nodes(&self) -> usize {
        self.maps.len()
    }

    pub fn with_chosen(mut self, chosen: usize) -> Result<Self> {
        if chosen >= self.maps.len() {
            return Err(Error::InvalidArgument(format!(
                "chosen label {chosen} outside [0, {})",
                self.maps.len()
            )));
        }
        self.chosen = chosen;
        Ok(self)
    }
}
