//! Sanity checks for saliency methods: model-parameter randomization
//! (layerwise and cascading) and data randomization (permuted labels).
//!
//! Maps are compared numerically. "Almost blank" is measured as the
//! fraction of elements with |score| > 1e-12; structural similarity as the
//! Spearman correlation of absolute scores, against the reference model's
//! map and against the absolute input.

mod harness;
mod similarity;

pub use harness::{
    run_data_randomization, run_parameter_randomization, DataRandomizationConfig, HarnessOptions,
    RandomizationMode, RandomizationPlan, SanityReport, SanityRow,
};
pub use similarity::{average_ranks, map_similarity, spearman, spearman_abs, MapSimilarity};
