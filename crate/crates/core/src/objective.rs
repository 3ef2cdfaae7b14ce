//! The interface the optimizers see: a vector of smooth objectives over a box.

use nalgebra::DVector;

use crate::bounds::BoxBounds;
use crate::error::{check_len, Error, Result};

/// `k` twice differentiable objectives on an admissible box. All methods take
/// an index set so callers only pay for the objectives they use.
pub trait MultiObjective: Send + Sync {
    fn n_objectives(&self) -> usize;

    fn bounds(&self) -> &BoxBounds;

    fn values(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<f64>>;

    fn gradients(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<DVector<f64>>>;

    fn hess_vecs(&self, u: &DVector<f64>, idx: &[usize], h: &DVector<f64>) -> Result<Vec<DVector<f64>>>;

    /// An upper bound of objective `i` over the box.
    fn value_bound(&self, i: usize) -> f64;

    /// Number of expensive linear solves performed so far.
    fn full_solves(&self) -> usize {
        0
    }
}

/// `J_i(u) = w_i / 2 * ||u - c_i||^2`: a cheap analytic test problem whose
/// Pareto set is the convex hull of the centers (for two objectives, the
/// segment between them).
#[derive(Clone, Debug)]
pub struct QuadraticObjectives {
    bounds: BoxBounds,
    centers: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl QuadraticObjectives {
    pub fn new(bounds: BoxBounds, centers: Vec<DVector<f64>>, weights: Vec<f64>) -> Result<Self> {
        check_len(centers.len(), weights.len())?;
        for c in &centers {
            check_len(bounds.dim(), c.len())?;
        }
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::InvalidInput("quadratic weights must be positive".into()));
        }
        Ok(Self { bounds, centers, weights })
    }

    pub fn centers(&self) -> &[DVector<f64>] {
        &self.centers
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

impl MultiObjective for QuadraticObjectives {
    fn n_objectives(&self) -> usize {
        self.centers.len()
    }

    fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    fn values(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<f64>> {
        check_len(self.bounds.dim(), u.len())?;
        Ok(idx.iter().map(|&i| 0.5 * self.weights[i] * (u - &self.centers[i]).norm_squared()).collect())
    }

    fn gradients(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<DVector<f64>>> {
        check_len(self.bounds.dim(), u.len())?;
        Ok(idx.iter().map(|&i| (u - &self.centers[i]) * self.weights[i]).collect())
    }

    fn hess_vecs(&self, u: &DVector<f64>, idx: &[usize], h: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        check_len(self.bounds.dim(), u.len())?;
        Ok(idx.iter().map(|&i| h * self.weights[i]).collect())
    }

    fn value_bound(&self, i: usize) -> f64 {
        self.bounds
            .corners()
            .iter()
            .map(|c| 0.5 * self.weights[i] * (c - &self.centers[i]).norm_squared())
            .fold(0.0, f64::max)
    }
}
