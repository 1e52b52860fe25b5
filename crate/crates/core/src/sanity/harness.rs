use std::fmt::{self, Write as _};
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use crate::attribution::{compete, grad_input_stack, lrp_stack, nonzero_fraction, MapStack, Method, DEFAULT_EPSILON};
use crate::data::{permute_labels, LabeledDataset};
use crate::error::{Error, Result};
use crate::nn::{cascading_randomize, randomize_layer, train, Architecture, Network, TrainConfig};
use crate::render::{write_heatmap, HeatmapStyle};
use crate::tensor::Tensor;

use super::similarity::spearman_abs;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomizationMode {
    /// Re-initialize one layer at a time; targets are layer indices.
    Layerwise,
    /// Re-initialize the top `k` parameterized layers; targets are depths `k`.
    Cascading,
}

impl FromStr for RandomizationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layerwise" => Ok(Self::Layerwise),
            "cascading" => Ok(Self::Cascading),
            other => Err(Error::InvalidArgument(format!(
                "unknown randomization mode '{other}' (layerwise|cascading)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomizationPlan {
    pub mode: RandomizationMode,
    pub targets: Vec<usize>,
    pub seed: u64,
}

impl RandomizationPlan {
    /// Every parameterized layer, output side first.
    pub fn layerwise(net: &Network, seed: u64) -> Self {
        let mut targets = net.parameterized_layers();
        targets.reverse();
        Self {
            mode: RandomizationMode::Layerwise,
            targets,
            seed,
        }
    }

    /// Depths 1..=L, i.e. the full cascade from the output layer down.
    pub fn cascading(net: &Network, seed: u64) -> Self {
        Self {
            mode: RandomizationMode::Cascading,
            targets: (1..=net.parameterized_layers().len()).collect(),
            seed,
        }
    }

    pub fn for_mode(mode: RandomizationMode, net: &Network, seed: u64) -> Self {
        match mode {
            RandomizationMode::Layerwise => Self::layerwise(net, seed),
            RandomizationMode::Cascading => Self::cascading(net, seed),
        }
    }

    fn conditions(&self, net: &Network) -> Result<Vec<(String, Network)>> {
        if self.targets.is_empty() {
            return Err(Error::InvalidArgument("randomization plan has no targets".into()));
        }
        self.targets
            .iter()
            .map(|&t| match self.mode {
                RandomizationMode::Layerwise => {
                    let name = net.layers().get(t).map_or("?", |l| l.name());
                    Ok((format!("layer{t}-{name}"), randomize_layer(net, t, self.seed)?))
                }
                RandomizationMode::Cascading => Ok((format!("cascade-top{t}"), cascading_randomize(net, t, self.seed)?)),
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarnessOptions {
    pub epsilon: f64,
    /// Only the first `eval_images` images are evaluated.
    pub eval_images: usize,
    pub heatmap_dir: Option<PathBuf>,
    pub heatmap_images: usize,
}

impl Default for HarnessOptions {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            eval_images: 64,
            heatmap_dir: None,
            heatmap_images: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SanityRow {
    pub condition: String,
    pub method: Method,
    pub nonzero_fraction: f64,
    /// Spearman of |map| against the same method's map on the reference model.
    pub spearman_vs_trained: f64,
    /// Spearman of |map| against |input|.
    pub spearman_abs_vs_input: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SanityReport {
    pub rows: Vec<SanityRow>,
    pub images: usize,
    pub train_accuracy_true: Option<f64>,
    pub train_accuracy_permuted: Option<f64>,
}

impl SanityReport {
    pub fn row(&self, condition: &str, method: Method) -> Option<&SanityRow> {
        self.rows.iter().find(|r| r.condition == condition && r.method == method)
    }

    pub fn conditions(&self) -> Vec<&str> {
        let mut out: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !out.contains(&r.condition.as_str()) {
                out.push(&r.condition);
            }
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("condition,method,nonzero_fraction,spearman_vs_trained,spearman_abs_vs_input\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                r.condition, r.method, r.nonzero_fraction, r.spearman_vs_trained, r.spearman_abs_vs_input
            )
            .unwrap();
        }
        out
    }
}

impl fmt::Display for SanityReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "sanity report over {} images", self.images)?;
        if let Some(a) = self.train_accuracy_true {
            writeln!(f, "train accuracy (true labels):     {a:.4}")?;
        }
        if let Some(a) = self.train_accuracy_permuted {
            writeln!(f, "train accuracy (permuted labels): {a:.4}")?;
        }
        writeln!(
            f,
            "{:<22} {:<10} {:>9} {:>12} {:>12}",
            "condition", "method", "nonzero", "rho_trained", "rho_input"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<22} {:<10} {:>9.4} {:>12.4} {:>12.4}",
                r.condition, r.method, r.nonzero_fraction, r.spearman_vs_trained, r.spearman_abs_vs_input
            )?;
        }
        Ok(())
    }
}

/// Maps for one image under one model, one entry per requested method.
fn image_maps(net: &Network, x: &Tensor, chosen: usize, methods: &[Method], epsilon: f64) -> Result<Vec<Vec<f64>>> {
    let needs = |base: Method| methods.iter().any(|m| m.base() == base);
    let gi: Option<MapStack> = if needs(Method::GradInput) {
        Some(grad_input_stack(net, x)?.with_chosen(chosen)?)
    } else {
        None
    };
    let lrp: Option<MapStack> = if needs(Method::Lrp) {
        Some(lrp_stack(net, x, epsilon)?.with_chosen(chosen)?)
    } else {
        None
    };
    Ok(methods
        .iter()
        .map(|&m| {
            let stack = if m.base() == Method::Lrp { lrp.as_ref() } else { gi.as_ref() }.unwrap();
            if m.is_competitive() {
                compete(stack).scores.into_data()
            } else {
                stack.chosen_map().values().to_vec()
            }
        })
        .collect())
}

/// Per-image maps for every image, computed in parallel, returned in image order.
fn condition_maps(
    net: &Network,
    inputs: &[Tensor],
    chosen: &[usize],
    methods: &[Method],
    epsilon: f64,
) -> Result<Vec<Vec<Vec<f64>>>> {
    inputs
        .par_iter()
        .zip(chosen.par_iter())
        .map(|(x, &c)| image_maps(net, x, c, methods, epsilon))
        .collect()
}

struct Evaluation<'a> {
    inputs: Vec<Tensor>,
    chosen: Vec<usize>,
    methods: &'a [Method],
    opts: &'a HarnessOptions,
    reference: Vec<Vec<Vec<f64>>>,
    rows: Vec<SanityRow>,
}

impl<'a> Evaluation<'a> {
    fn new(
        reference_net: &Network,
        images: &LabeledDataset,
        methods: &'a [Method],
        opts: &'a HarnessOptions,
    ) -> Result<Self> {
        if images.is_empty() || opts.eval_images == 0 {
            return Err(Error::Empty("evaluation image set".into()));
        }
        if methods.is_empty() {
            return Err(Error::InvalidArgument("no attribution methods requested".into()));
        }
        let count = images.len().min(opts.eval_images);
        let inputs = (0..count)
            .map(|i| reference_net.input_tensor(images.image(i)))
            .collect::<Result<Vec<_>>>()?;
        let chosen = inputs.iter().map(|x| reference_net.predict(x.data())).collect();
        let mut eval = Self {
            inputs,
            chosen,
            methods,
            opts,
            reference: Vec::new(),
            rows: Vec::new(),
        };
        eval.reference = condition_maps(reference_net, &eval.inputs, &eval.chosen, methods, opts.epsilon)?;
        Ok(eval)
    }

    fn add_condition(&mut self, label: &str, net: &Network) -> Result<()> {
        let maps = condition_maps(net, &self.inputs, &self.chosen, self.methods, self.opts.epsilon)?;
        let n = self.inputs.len() as f64;
        for (mi, &method) in self.methods.iter().enumerate() {
            let (mut nz, mut vs_ref, mut vs_in) = (0.0, 0.0, 0.0);
            for (img, x) in self.inputs.iter().enumerate() {
                let map = &maps[img][mi];
                nz += nonzero_fraction(map);
                vs_ref += spearman_abs(map, &self.reference[img][mi]);
                vs_in += spearman_abs(map, x.data());
            }
            self.rows.push(SanityRow {
                condition: label.to_string(),
                method,
                nonzero_fraction: nz / n,
                spearman_vs_trained: vs_ref / n,
                spearman_abs_vs_input: vs_in / n,
            });
        }
        if let Some(dir) = &self.opts.heatmap_dir {
            fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            for (img, x) in self.inputs.iter().enumerate().take(self.opts.heatmap_images) {
                for (mi, method) in self.methods.iter().enumerate() {
                    let scores = Tensor::new(x.shape().to_vec(), maps[img][mi].clone())?;
                    let path = dir.join(format!("{label}_{method}_img{img}.ppm"));
                    write_heatmap(&scores, HeatmapStyle::Diverging, &path)?;
                }
            }
        }
        Ok(())
    }

    fn finish(self) -> SanityReport {
        SanityReport {
            images: self.inputs.len(),
            rows: self.rows,
            train_accuracy_true: None,
            train_accuracy_permuted: None,
        }
    }
}

/// Compares maps of the trained `net` with maps after each randomization
/// in `plan`. The explained label for each image is the trained model's
/// prediction, held fixed across conditions.
pub fn run_parameter_randomization(
    net: &Network,
    images: &LabeledDataset,
    plan: &RandomizationPlan,
    methods: &[Method],
    opts: &HarnessOptions,
) -> Result<SanityReport> {
    let conditions = plan.conditions(net)?;
    let mut eval = Evaluation::new(net, images, methods, opts)?;
    eval.add_condition("original", net)?;
    for (label, randomized) in &conditions {
        eval.add_condition(label, randomized)?;
    }
    Ok(eval.finish())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DataRandomizationConfig {
    pub train: TrainConfig,
    /// Network initialization seed, shared by both models.
    pub init_seed: u64,
    pub permutation_seed: u64,
}

/// Trains `arch` twice from the same initialization, once on `train_set`
/// and once on a label-permuted copy, then compares maps on `eval_set`.
/// Rows are labelled `true-labels` and `permuted-labels`; the reference
/// model for `spearman_vs_trained` and the explained label is the
/// true-label model.
pub fn run_data_randomization(
    arch: &Architecture,
    train_set: &LabeledDataset,
    eval_set: &LabeledDataset,
    cfg: &DataRandomizationConfig,
    methods: &[Method],
    opts: &HarnessOptions,
) -> Result<SanityReport> {
    if eval_set.is_empty() {
        return Err(Error::Empty("evaluation image set".into()));
    }
    let init = Network::init(arch, cfg.init_seed)?;
    let mut true_net = init.clone();
    let true_report = train(&mut true_net, train_set, &cfg.train)?;
    let mut permuted_net = init;
    let permuted = permute_labels(train_set, cfg.permutation_seed);
    let permuted_report = train(&mut permuted_net, &permuted, &cfg.train)?;

    let mut eval = Evaluation::new(&true_net, eval_set, methods, opts)?;
    eval.add_condition("true-labels", &true_net)?;
    eval.add_condition("permuted-labels", &permuted_net)?;
    let mut report = eval.finish();
    report.train_accuracy_true = true_report.train_accuracy;
    report.train_accuracy_permuted = permuted_report.train_accuracy;
    Ok(report)
}
