use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

/// `N` images of a common shape with pixel values in `[0, 1]`, plus one label each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    image_shape: Vec<usize>,
    pixels: Vec<f64>,
    labels: Vec<u8>,
}

impl LabeledDataset {
    pub fn new(image_shape: Vec<usize>, pixels: Vec<f64>, labels: Vec<u8>) -> Result<Self> {
        let per: usize = image_shape.iter().product();
        if image_shape.is_empty() || per == 0 {
            return Err(Error::InvalidArgument(format!("bad image shape {image_shape:?}")));
        }
        if pixels.len() != per * labels.len() {
            return Err(Error::CountMismatch {
                images: pixels.len() / per,
                labels: labels.len(),
            });
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("pixel value {v} outside [0, 1]")));
        }
        Ok(Self {
            image_shape,
            pixels,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn image_shape(&self) -> &[usize] {
        &self.image_shape
    }

    pub fn image_len(&self) -> usize {
        self.image_shape.iter().product()
    }

    pub fn image(&self, i: usize) -> &[f64] {
        let d = self.image_len();
        &self.pixels[i * d..(i + 1) * d]
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn num_classes(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    /// Copies the samples at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        let mut pixels = Vec::with_capacity(indices.len() * self.image_len());
        for &i in indices {
            pixels.extend_from_slice(self.image(i));
        }
        Self {
            image_shape: self.image_shape.clone(),
            pixels,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    /// Splits into the first `n` samples and the rest.
    pub fn split_at(&self, n: usize) -> (Self, Self) {
        let n = n.min(self.len());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.len()).collect();
        (self.select(&head), self.select(&tail))
    }

    pub fn with_labels(&self, labels: Vec<u8>) -> Result<Self> {
        Self::new(self.image_shape.clone(), self.pixels.clone(), labels)
    }

    pub fn label_histogram(&self) -> Vec<usize> {
        let mut hist = vec![0; self.num_classes()];
        for &l in &self.labels {
            hist[l as usize] += 1;
        }
        hist
    }
}

/// Replaces the labels by a uniformly random permutation of themselves.
/// Images are untouched and the label multiset is preserved.
pub fn permute_labels(ds: &LabeledDataset, seed: u64) -> LabeledDataset {
    let mut labels = ds.labels.clone();
    labels.shuffle(&mut rng::seeded(seed));
    LabeledDataset {
        image_shape: ds.image_shape.clone(),
        pixels: ds.pixels.clone(),
        labels,
    }
}

/// Writes label columns side by side as CSV with an `index` column first.
pub fn write_labels_csv(path: impl AsRef<Path>, columns: &[(&str, &[u8])]) -> Result<()> {
    let path = path.as_ref();
    let rows = columns.first().map_or(0, |(_, c)| c.len());
    if columns.iter().any(|(_, c)| c.len() != rows) {
        return Err(Error::InvalidArgument("label columns differ in length".into()));
    }
    let mut out = String::from("index");
    for (name, _) in columns {
        write!(out, ",{name}").unwrap();
    }
    out.push('\n');
    for r in 0..rows {
        write!(out, "{r}").unwrap();
        for (_, col) in columns {
            write!(out, ",{}", col[r]).unwrap();
        }
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
