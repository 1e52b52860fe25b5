//! Competitive selection: the chosen label keeps an element's score only if
//! it out-votes every other label there. Positive scores must be the
//! maximum and negative scores the minimum across all labels; comparisons
//! are non-strict, so exact ties go to the chosen label. Zero scores stay 0.

use crate::error::{Error, Result};
use crate::tensor::Tensor;

use super::map::{MapStack, Method, SaliencyMap};

/// Element-wise competition over a stack of any base method.
pub fn compete(stack: &MapStack) -> SaliencyMap {
    let chosen = stack.chosen();
    let own = stack.chosen_map().values();
    let scores: Vec<f64> = own
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let others = stack
                .maps()
                .iter()
                .filter(|m| m.node != chosen)
                .map(|m| m.values()[j]);
            let wins = if s > 0.0 {
                others.into_iter().all(|t| s >= t)
            } else if s < 0.0 {
                others.into_iter().all(|t| s <= t)
            } else {
                false
            };
            if wins {
                s
            } else {
                0.0
            }
        })
        .collect();
    let method = match stack.method() {
        Method::Lrp => Method::Clrp,
        _ => Method::Cgi,
    };
    SaliencyMap::new(
        Tensor::new(stack.chosen_map().shape().to_vec(), scores).expect("subset of finite scores"),
        method,
        chosen,
    )
}

/// Competitive Gradient x Input. Also accepts an LRP stack, in which case
/// the result is tagged CLRP.
pub fn cgi(stack: &MapStack) -> Result<SaliencyMap> {
    match stack.method() {
        Method::GradInput | Method::Lrp => Ok(compete(stack)),
        other => Err(Error::InvalidArgument(format!(
            "competition needs a per-node stack, got {other}"
        ))),
    }
}

/// Competitive LRP: the same selection rule applied to an LRP stack.
pub fn clrp(stack: &MapStack) -> Result<SaliencyMap> {
    match stack.method() {
        Method::Lrp => Ok(compete(stack)),
        other => Err(Error::InvalidArgument(format!("clrp needs an lrp stack, got {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn stack(rows: &[Vec<f64>], method: Method, chosen: usize) -> MapStack {
        let maps = rows
            .iter()
            .enumerate()
            .map(|(i, r)| SaliencyMap::new(Tensor::from_vec(r.clone()).unwrap(), method, i))
            .collect();
        MapStack::new(maps, chosen).unwrap()
    }

    #[test]
    fn hand_trace() {
        // pixel 0: 2 >= 1 wins; pixel 1: -1 > -2 loses; pixel 2: 0.5 < 0.7 loses
        let rows = [vec![2.0, -1.0, 0.5], vec![1.0, -2.0, 0.7]];
        let out = cgi(&stack(&rows, Method::GradInput, 0)).unwrap();
        assert_eq!(out.values(), &[2.0, 0.0, 0.0]);
        assert_eq!(out.method, Method::Cgi);
        let out = clrp(&stack(&rows, Method::Lrp, 0)).unwrap();
        assert_eq!(out.values(), &[2.0, 0.0, 0.0]);
        assert_eq!(out.method, Method::Clrp);
    }

    #[test]
    fn chosen_one_sees_the_mirror_pattern() {
        let rows = [vec![2.0, -1.0, 0.5], vec![1.0, -2.0, 0.7]];
        let out = cgi(&stack(&rows, Method::GradInput, 1)).unwrap();
        assert_eq!(out.values(), &[0.0, -2.0, 0.7]);
    }

    #[test]
    fn identical_maps_keep_everything() {
        let row = vec![0.3, -0.2, 0.0, 5.0];
        let rows = vec![row.clone(); 3];
        assert_eq!(clrp(&stack(&rows, Method::Lrp, 2)).unwrap().values(), row.as_slice());
        assert_eq!(cgi(&stack(&rows, Method::GradInput, 0)).unwrap().values(), row.as_slice());
    }

    #[test]
    fn single_node_is_identity() {
        let row = vec![0.3, -0.2, 0.0];
        let out = cgi(&stack(std::slice::from_ref(&row), Method::GradInput, 0)).unwrap();
        assert_eq!(out.values(), row.as_slice());
    }

    #[test]
    fn wrong_methods_rejected() {
        let s = stack(&[vec![1.0]], Method::Cgi, 0);
        assert!(cgi(&s).is_err());
        assert!(clrp(&stack(&[vec![1.0]], Method::GradInput, 0)).is_err());
    }

    proptest! {
        #[test]
        fn survivors_are_unchanged_subset(
            rows in prop::collection::vec(prop::collection::vec(-3i32..4, 6), 1..5),
            chosen_seed in any::<usize>(),
        ) {
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
            let chosen = chosen_seed % rows.len();
            let s = stack(&rows, Method::GradInput, chosen);
            let out = compete(&s);
            for (j, &v) in out.values().iter().enumerate() {
                prop_assert!(v == 0.0 || v == rows[chosen][j]);
            }
            // idempotent: competing the survivors against the same rivals changes nothing
            let mut again = rows.clone();
            again[chosen] = out.values().to_vec();
            let second = compete(&stack(&again, Method::GradInput, chosen));
            prop_assert_eq!(second.values(), out.values());
        }
    }
}
