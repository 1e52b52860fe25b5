//! Datasets: IDX ingestion, a procedural digit generator for offline runs,
//! and label permutation for the data-randomization test.

mod dataset;
mod idx;
mod synthetic;

pub use dataset::{permute_labels, write_labels_csv, LabeledDataset};
pub use idx::{
    decode_idx_images, decode_idx_labels, encode_idx_images, encode_idx_labels, load_idx, load_idx_images,
    write_idx, IDX_IMAGES_MAGIC, IDX_LABELS_MAGIC,
};
pub use synthetic::{synthetic_digits, SYNTHETIC_CLASSES, SYNTHETIC_SIDE};
