//! Numeric proxies for "do these two maps look alike".

use crate::attribution::{nonzero_fraction, SaliencyMap};
use crate::error::{Error, Result};

/// Ranks starting at 1, tied values sharing the mean of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = rank;
        }
        start = end;
    }
    ranks
}

fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    (saa > 0.0 && sbb > 0.0).then(|| (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation with average-rank ties.
///
/// A constant input has no ranking; the result is then 1 if both inputs
/// are identical and 0 otherwise.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman inputs differ in length");
    if a.is_empty() {
        return 0.0;
    }
    pearson(&average_ranks(a), &average_ranks(b)).unwrap_or(if a == b { 1.0 } else { 0.0 })
}

/// Spearman correlation of `|a|` and `|b|`.
pub fn spearman_abs(a: &[f64], b: &[f64]) -> f64 {
    let abs = |v: &[f64]| v.iter().map(|x| x.abs()).collect::<Vec<_>>();
    spearman(&abs(a), &abs(b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapSimilarity {
    pub spearman_abs: f64,
    pub nonzero_a: f64,
    pub nonzero_b: f64,
}

pub fn map_similarity(a: &SaliencyMap, b: &SaliencyMap) -> Result<MapSimilarity> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch {
            context: "map similarity".into(),
            expected: a.shape().to_vec(),
            actual: b.shape().to_vec(),
        });
    }
    Ok(MapSimilarity {
        spearman_abs: spearman_abs(a.values(), b.values()),
        nonzero_a: nonzero_fraction(a.values()),
        nonzero_b: nonzero_fraction(b.values()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::Method;
    use crate::rng;
    use crate::tensor::Tensor;
    use proptest::prelude::*;

    fn map(v: Vec<f64>) -> SaliencyMap {
        SaliencyMap::new(Tensor::from_vec(v).unwrap(), Method::GradInput, 0)
    }

    #[test]
    fn ranks_with_ties() {
        assert_eq!(average_ranks(&[3.0, 1.0, 3.0, 2.0]), vec![3.5, 1.0, 3.5, 2.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn textbook_value_with_ties() {
        // ranks a = [1, 2.5, 2.5, 4], b = [1, 2, 3, 4]; pearson of ranks = 0.9486833
        let rho = spearman(&[1.0, 2.0, 2.0, 3.0], &[10.0, 20.0, 30.0, 40.0]);
        assert!((rho - 0.948_683_298_050_513_8).abs() < 1e-12, "{rho}");
    }

    #[test]
    fn self_and_negation() {
        let m = map(vec![0.5, -2.0, 0.0, 1.25, -0.1]);
        let neg = map(m.values().iter().map(|v| -v).collect());
        let s = map_similarity(&m, &m).unwrap();
        assert_eq!(s.spearman_abs, 1.0);
        assert_eq!(s.nonzero_a, 0.8);
        assert_eq!(map_similarity(&m, &neg).unwrap().spearman_abs, 1.0);
        assert!(map_similarity(&m, &map(vec![1.0])).is_err());
    }

    #[test]
    fn constant_maps() {
        assert_eq!(spearman(&[0.0; 4], &[0.0; 4]), 1.0);
        assert_eq!(spearman(&[0.0; 4], &[1.0, 2.0, 3.0, 4.0]), 0.0);
    }

    #[test]
    fn independent_maps_are_uncorrelated() {
        let mut r = rng::seeded(12);
        let a = rng::gaussian_vec(&mut r, 10_000, 1.0);
        let b = rng::gaussian_vec(&mut r, 10_000, 1.0);
        let s = map_similarity(&map(a), &map(b)).unwrap().spearman_abs;
        assert!(s.abs() <= 0.05, "{s}");
    }

    proptest! {
        #[test]
        fn invariant_under_joint_permutation_and_monotone_rescaling(
            pairs in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..40),
            shift in 1usize..100,
        ) {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            let base = spearman_abs(&a, &b);
            let n = a.len();
            let perm: Vec<usize> = (0..n).map(|i| (i * (2 * shift + 1) + shift) % n).collect();
            let is_perm = { let mut p = perm.clone(); p.sort_unstable(); p == (0..n).collect::<Vec<_>>() };
            if is_perm {
                let pa: Vec<f64> = perm.iter().map(|&i| a[i]).collect();
                let pb: Vec<f64> = perm.iter().map(|&i| b[i]).collect();
                prop_assert!((spearman_abs(&pa, &pb) - base).abs() < 1e-12);
            }
            // |v| -> |v|^3 + 2|v| is strictly increasing on [0, inf)
            let warped: Vec<f64> = a.iter().map(|v| v.abs().powi(3) + 2.0 * v.abs()).collect();
            prop_assert!((spearman_abs(&warped, &b) - base).abs() < 1e-12);
            prop_assert!((-1.0..=1.0).contains(&base));
        }
    }
}
