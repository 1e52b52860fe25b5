use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::nn::Network;
use crate::tensor::Tensor;

use super::map::MapStack;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    /// Score sum ~ slope * logit + intercept.
    pub slope: f64,
    pub intercept: f64,
    /// `None` when the score sums are constant.
    pub pearson_r: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FitOutcome {
    Fit(LinearFit),
    /// Fewer than two output nodes.
    TooFewNodes,
    /// All logits equal; the slope is undefined.
    ConstantLogits,
}

/// How well each node's map sums to its logit.
#[derive(Debug, Clone, PartialEq)]
pub struct CompletenessReport {
    pub logits: Vec<f64>,
    pub score_sums: Vec<f64>,
    /// `logit - score_sum` per node.
    pub residuals: Vec<f64>,
    pub fit: FitOutcome,
}

impl CompletenessReport {
    pub fn max_abs_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("node,logit,score_sum,residual,slope,intercept,pearson_r\n");
        let (slope, intercept, r) = match self.fit {
            FitOutcome::Fit(f) => (
                format!("{}", f.slope),
                format!("{}", f.intercept),
                f.pearson_r.map(|r| r.to_string()).unwrap_or_default(),
            ),
            _ => Default::default(),
        };
        for i in 0..self.logits.len() {
            writeln!(
                out,
                "{i},{},{},{},{slope},{intercept},{r}",
                self.logits[i], self.score_sums[i], self.residuals[i]
            )
            .unwrap();
        }
        out
    }
}

pub fn completeness_report(net: &Network, x: &Tensor, stack: &MapStack) -> Result<CompletenessReport> {
    let logits = net.forward(x)?;
    if logits.len() != stack.num_nodes() {
        return Err(Error::InvalidArgument(format!(
            "stack has {} maps for {} logits",
            stack.num_nodes(),
            logits.len()
        )));
    }
    let score_sums: Vec<f64> = stack.maps().iter().map(|m| m.sum()).collect();
    let residuals = logits.iter().zip(&score_sums).map(|(l, s)| l - s).collect();
    let fit = linear_fit(&logits, &score_sums);
    Ok(CompletenessReport {
        logits,
        score_sums,
        residuals,
        fit,
    })
}

/// Least squares of `y` on `x` plus Pearson correlation.
pub fn linear_fit(x: &[f64], y: &[f64]) -> FitOutcome {
    let n = x.len();
    if n < 2 {
        return FitOutcome::TooFewNodes;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
        sxy += (a - mx) * (b - my);
    }
    if sxx == 0.0 {
        return FitOutcome::ConstantLogits;
    }
    let slope = sxy / sxx;
    let pearson_r = (syy > 0.0).then(|| (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0));
    FitOutcome::Fit(LinearFit {
        slope,
        intercept: my - slope * mx,
        pearson_r,
    })
}
