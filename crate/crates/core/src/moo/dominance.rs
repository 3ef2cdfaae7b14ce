//! Pareto ordering and non-dominance filtering.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `x ≨ y`: componentwise `<=` and not equal.
pub fn dominates_strictly(x: &[f64], y: &[f64]) -> bool {
    debug_assert_eq!(x.len(), y.len());
    let mut less = false;
    for (a, b) in x.iter().zip(y) {
        if a > b {
            return false;
        }
        if a < b {
            less = true;
        }
    }
    less
}

/// `x < y` in every component.
pub fn dominates_weakly(x: &[f64], y: &[f64]) -> bool {
    debug_assert_eq!(x.len(), y.len());
    x.iter().zip(y).all(|(a, b)| a < b)
}

/// Objective values together with the objective indices they refer to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub index_set: Vec<usize>,
    pub values: Vec<f64>,
}

impl ObjectiveVector {
    pub fn new(index_set: Vec<usize>, values: Vec<f64>) -> Result<Self> {
        if index_set.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: index_set.len(), actual: values.len() });
        }
        if index_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidInput(format!("index set {index_set:?} must be strictly increasing")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("objective values must be finite".into()));
        }
        Ok(Self { index_set, values })
    }

    fn check(&self, other: &Self) -> Result<()> {
        if self.index_set != other.index_set {
            return Err(Error::InvalidInput(format!(
                "index sets differ: {:?} vs {:?}",
                self.index_set, other.index_set
            )));
        }
        Ok(())
    }

    pub fn dominates_strictly(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        Ok(dominates_strictly(&self.values, &other.values))
    }

    pub fn dominates_weakly(&self, other: &Self) -> Result<bool> {
        self.check(other)?;
        Ok(dominates_weakly(&self.values, &other.values))
    }
}

/// Indices of the points not strictly dominated by any other point, in input order.
pub fn non_dominated(points: &[Vec<f64>]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let sa: f64 = points[a].iter().sum();
        let sb: f64 = points[b].iter().sum();
        sa.total_cmp(&sb).then(a.cmp(&b))
    });
    // a dominating point has a strictly smaller sum, so checking against the
    // kept points in sum order suffices
    let mut kept: Vec<usize> = Vec::new();
    let mut keep = vec![false; points.len()];
    for &i in &order {
        if !kept.iter().any(|&j| dominates_strictly(&points[j], &points[i])) {
            kept.push(i);
            keep[i] = true;
        }
    }
    (0..points.len()).filter(|&i| keep[i]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn brute(points: &[Vec<f64>]) -> Vec<usize> {
        (0..points.len())
            .filter(|&i| !(0..points.len()).any(|j| j != i && dominates_strictly(&points[j], &points[i])))
            .collect()
    }

    #[test]
    fn dominance_examples() {
        assert!(!dominates_strictly(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]));
        assert!(!dominates_weakly(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]));
        assert!(dominates_strictly(&[0.0, 1.0], &[1.0, 1.0]));
        assert!(!dominates_weakly(&[0.0, 1.0], &[1.0, 1.0]));
        assert!(dominates_strictly(&[0.0, 0.0], &[1.0, 1.0]));
        assert!(dominates_weakly(&[0.0, 0.0], &[1.0, 1.0]));
    }

    #[test]
    fn filter_examples() {
        let pts = vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![2.0, 2.0]];
        assert_eq!(non_dominated(&pts), vec![0, 1]);
        let same = vec![vec![1.0, 1.0]; 4];
        assert_eq!(non_dominated(&same), vec![0, 1, 2, 3]);
    }

    #[test]
    fn mismatched_index_sets_are_rejected() {
        let a = ObjectiveVector::new(vec![0, 1], vec![1.0, 2.0]).unwrap();
        let b = ObjectiveVector::new(vec![0, 2], vec![1.0, 2.0]).unwrap();
        assert!(a.dominates_strictly(&b).is_err());
        assert!(ObjectiveVector::new(vec![1, 0], vec![1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn filter_matches_pairwise_oracle(pts in prop::collection::vec(prop::collection::vec(0..6i32, 3), 0..200)) {
            let pts: Vec<Vec<f64>> = pts.into_iter().map(|p| p.into_iter().map(f64::from).collect()).collect();
            let nd = non_dominated(&pts);
            prop_assert_eq!(&nd, &brute(&pts));
            let sub: Vec<Vec<f64>> = nd.iter().map(|&i| pts[i].clone()).collect();
            prop_assert_eq!(non_dominated(&sub), (0..sub.len()).collect::<Vec<_>>());
        }

        #[test]
        fn strict_dominance_is_a_strict_partial_order(
            a in prop::collection::vec(0..4i32, 3),
            b in prop::collection::vec(0..4i32, 3),
            c in prop::collection::vec(0..4i32, 3),
        ) {
            let f = |v: Vec<i32>| v.into_iter().map(f64::from).collect::<Vec<_>>();
            let (a, b, c) = (f(a), f(b), f(c));
            prop_assert!(!dominates_strictly(&a, &a));
            if dominates_strictly(&a, &b) && dominates_strictly(&b, &c) {
                prop_assert!(dominates_strictly(&a, &c));
            }
            if dominates_strictly(&a, &b) {
                prop_assert!(!dominates_strictly(&b, &a));
            }
        }
    }
}
