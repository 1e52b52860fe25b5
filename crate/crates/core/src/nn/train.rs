use rand::seq::SliceRandom;

use crate::data::LabeledDataset;
use crate::error::{Error, Result};
use crate::rng;

use super::network::{argmax, Network};

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 20,
            batch_size: 32,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainReport {
    /// Mean cross-entropy over each epoch's mini-batches.
    pub epoch_losses: Vec<f64>,
    /// Accuracy on the training set after the last epoch; `None` if no epoch ran.
    pub train_accuracy: Option<f64>,
}

/// Mini-batch SGD on softmax cross-entropy. Shuffling is driven by
/// `cfg.seed`, so the result is a pure function of (net, data, cfg).
pub fn train(net: &mut Network, data: &LabeledDataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if data.is_empty() {
        return Err(Error::Empty("training set".into()));
    }
    if data.image_len() != net.input_len() {
        return Err(Error::ShapeMismatch {
            context: "training images".into(),
            expected: net.input_shape().to_vec(),
            actual: data.image_shape().to_vec(),
        });
    }
    let classes = net.num_classes();
    if let Some(&bad) = data.labels().iter().find(|&&l| l as usize >= classes) {
        return Err(Error::InvalidArgument(format!("label {bad} outside [0, {classes})")));
    }
    if cfg.batch_size == 0 || !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(Error::InvalidArgument("batch size and learning rate must be positive".into()));
    }

    let mut report = TrainReport::default();
    if cfg.epochs == 0 {
        return Ok(report);
    }

    let mut rng = rng::seeded(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            loss_sum += sgd_step(net, data, batch, cfg.learning_rate);
            batches += 1;
        }
        let loss = loss_sum / batches as f64;
        if !loss.is_finite() || net.layers().iter().filter_map(|l| l.params()).any(|(w, b)| {
            w.iter().chain(b).any(|v| !v.is_finite())
        }) {
            return Err(Error::Diverged { epoch, loss });
        }
        report.epoch_losses.push(loss);
    }
    report.train_accuracy = Some(accuracy(net, data));
    Ok(report)
}

fn sgd_step(net: &mut Network, data: &LabeledDataset, batch: &[usize], lr: f64) -> f64 {
    let mut grads: Vec<_> = net.layers().iter().map(|l| l.zero_grads()).collect();
    let mut loss = 0.0;
    for &idx in batch {
        let trace = net.trace_flat(data.image(idx));
        let (sample_loss, mut grad) = softmax_xent(trace.logits(), data.labels()[idx] as usize);
        loss += sample_loss;
        for (i, layer) in net.layers().iter().enumerate().rev() {
            let shape = net.layer_input_shape(i);
            layer.accumulate_param_grads(trace.layer_input(i), shape, &grad, &mut grads[i]);
            if i > 0 {
                grad = layer.backward_input(trace.layer_input(i), shape, &grad);
            }
        }
    }
    let step = lr / batch.len() as f64;
    for (layer, g) in net.layers_mut().iter_mut().zip(&grads) {
        layer.apply_sgd(g, step);
    }
    loss / batch.len() as f64
}

/// Returns the loss and its gradient with respect to the logits.
fn softmax_xent(logits: &[f64], label: usize) -> (f64, Vec<f64>) {
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&z| (z - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let loss = total.ln() - (logits[label] - max);
    let mut grad: Vec<f64> = exps.iter().map(|e| e / total).collect();
    grad[label] -= 1.0;
    (loss, grad)
}

pub fn accuracy(net: &Network, data: &LabeledDataset) -> f64 {
    if data.is_empty() {
        return 0.0;
    }
    let correct = (0..data.len())
        .filter(|&i| argmax(net.trace_flat(data.image(i)).logits()) == data.labels()[i] as usize)
        .count();
    correct as f64 / data.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::Architecture;
    use rand_distr::{Distribution, Normal};

    fn blobs(n: usize, seed: u64) -> LabeledDataset {
        let mut rng = rng::seeded(seed);
        let noise = Normal::new(0.0, 0.3).unwrap();
        let mut pixels = Vec::with_capacity(2 * n);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let label = (i % 2) as u8;
            let center = if label == 0 { [0.25, 0.25] } else { [0.75, 0.75] };
            for c in center {
                let v: f64 = c + 0.2 * noise.sample(&mut rng);
                pixels.push(v.clamp(0.0, 1.0));
            }
            labels.push(label);
        }
        LabeledDataset::new(vec![2], pixels, labels).unwrap()
    }

    #[test]
    fn separable_blobs_are_learned() {
        let data = blobs(200, 1);
        let arch = Architecture::parse("dense:8,relu,dense:2", vec![2], true).unwrap();
        let mut net = Network::init(&arch, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 10,
            learning_rate: 0.5,
            seed: 5,
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(report.epoch_losses.len(), 50);
        assert!(report.train_accuracy.unwrap() >= 0.99, "{report:?}");
    }

    #[test]
    fn zero_epochs_leaves_weights_alone() {
        let data = blobs(20, 1);
        let arch = Architecture::parse("dense:2", vec![2], true).unwrap();
        let mut net = Network::init(&arch, 3).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        assert_eq!(net, before);
        assert_eq!(report, TrainReport::default());
    }

    #[test]
    fn huge_learning_rate_is_reported_as_divergence() {
        let data = blobs(40, 2);
        let arch = Architecture::parse("dense:16,relu,dense:16,relu,dense:2", vec![2], true).unwrap();
        let mut net = Network::init(&arch, 3).unwrap();
        let cfg = TrainConfig {
            epochs: 50,
            batch_size: 4,
            learning_rate: 1e200,
            seed: 0,
        };
        assert!(matches!(train(&mut net, &data, &cfg), Err(Error::Diverged { .. })));
    }

    #[test]
    fn bias_stays_zero_when_disabled() {
        let data = blobs(40, 2);
        let arch = Architecture::parse("dense:4,relu,dense:2", vec![2], false).unwrap();
        let mut net = Network::init(&arch, 3).unwrap();
        train(&mut net, &data, &TrainConfig::default()).unwrap();
        assert!(net.bias_free());
    }

    #[test]
    fn rejects_out_of_range_labels() {
        let data = LabeledDataset::new(vec![2], vec![0.0; 2], vec![5]).unwrap();
        let arch = Architecture::parse("dense:2", vec![2], true).unwrap();
        let mut net = Network::init(&arch, 0).unwrap();
        assert!(train(&mut net, &data, &TrainConfig::default()).is_err());
    }
}
