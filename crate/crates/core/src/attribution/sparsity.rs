//! How concentrated each label's votes are, and how often two labels
//! actually contend for the same elements. Diagnostic only.

use super::map::MapStack;

#[derive(Debug, Clone, PartialEq)]
pub struct SparsityDiagnostic {
    /// Per node: smallest fraction of elements carrying `mass` of its |score| total.
    pub rho: Vec<f64>,
    /// Mean over node pairs of the fraction of elements in both top sets.
    pub pairwise_overlap: f64,
    /// Mean of `rho_i * rho_j` over the same pairs, the independent-placement baseline.
    pub independent_overlap: f64,
}

fn top_set(values: &[f64], mass: f64) -> Vec<bool> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    let total: f64 = values.iter().map(|v| v.abs()).sum();
    let mut member = vec![false; values.len()];
    if total == 0.0 {
        return member;
    }
    let mut acc = 0.0;
    for idx in order {
        if acc >= mass * total {
            break;
        }
        acc += values[idx].abs();
        member[idx] = true;
    }
    member
}

pub fn sparsity_diagnostic(stack: &MapStack, mass: f64) -> SparsityDiagnostic {
    let sets: Vec<Vec<bool>> = stack.maps().iter().map(|m| top_set(m.values(), mass)).collect();
    let d = stack.chosen_map().values().len() as f64;
    let rho: Vec<f64> = sets.iter().map(|s| s.iter().filter(|&&b| b).count() as f64 / d).collect();
    let (mut overlap, mut baseline, mut pairs) = (0.0, 0.0, 0usize);
    for i in 0..sets.len() {
        for j in i + 1..sets.len() {
            let both = sets[i].iter().zip(&sets[j]).filter(|(a, b)| **a && **b).count();
            overlap += both as f64 / d;
            baseline += rho[i] * rho[j];
            pairs += 1;
        }
    }
    let pairs = pairs.max(1) as f64;
    SparsityDiagnostic {
        rho,
        pairwise_overlap: overlap / pairs,
        independent_overlap: baseline / pairs,
    }
}
