//! Axis-aligned boxes and the projection onto them.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// A closed box `[lower, upper]` in `R^n`. Coordinates with `lower == upper`
/// are fixed and drop out of every optimization automatically.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoxBounds {
    lower: DVector<f64>,
    upper: DVector<f64>,
}

impl BoxBounds {
    pub fn new(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_len(lower.len(), upper.len())?;
        for (i, (lo, hi)) in lower.iter().zip(upper.iter()).enumerate() {
            if !(lo <= hi) {
                return Err(Error::InvalidInput(format!(
                    "box coordinate {i}: lower bound {lo} exceeds upper bound {hi}"
                )));
            }
        }
        Ok(Self { lower, upper })
    }

    pub fn from_slices(lower: &[f64], upper: &[f64]) -> Result<Self> {
        Self::new(
            DVector::from_column_slice(lower),
            DVector::from_column_slice(upper),
        )
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &DVector<f64> {
        &self.lower
    }

    pub fn upper(&self) -> &DVector<f64> {
        &self.upper
    }

    pub fn is_fixed(&self, i: usize) -> bool {
        self.lower[i] == self.upper[i]
    }

    /// Indices of coordinates with positive width.
    pub fn free_coordinates(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&i| !self.is_fixed(i)).collect()
    }

    pub fn contains(&self, x: &DVector<f64>) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .enumerate()
                .all(|(i, v)| *v >= self.lower[i] && *v <= self.upper[i])
    }

    pub fn project(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.dim(), |i, _| {
            x[i].max(self.lower[i]).min(self.upper[i])
        })
    }

    pub fn project_mut(&self, x: &mut DVector<f64>) {
        for i in 0..self.dim() {
            x[i] = x[i].max(self.lower[i]).min(self.upper[i]);
        }
    }

    /// `|| x - P(x - g) ||`, the first-order criticality measure over the box.
    pub fn projected_gradient_norm(&self, x: &DVector<f64>, g: &DVector<f64>) -> f64 {
        let step = self.project(&(x - g));
        (x - step).norm()
    }

    /// Product of this box with another one, `self x other`.
    pub fn product(&self, other: &BoxBounds) -> BoxBounds {
        let n = self.dim() + other.dim();
        let lower = DVector::from_fn(n, |i, _| {
            if i < self.dim() {
                self.lower[i]
            } else {
                other.lower[i - self.dim()]
            }
        });
        let upper = DVector::from_fn(n, |i, _| {
            if i < self.dim() {
                self.upper[i]
            } else {
                other.upper[i - self.dim()]
            }
        });
        BoxBounds { lower, upper }
    }

    /// Corners of the box restricted to its free coordinates (fixed
    /// coordinates keep their single value). `2^free` points.
    pub fn corners(&self) -> Vec<DVector<f64>> {
        let free = self.free_coordinates();
        let mut out = Vec::with_capacity(1 << free.len());
        for mask in 0..(1usize << free.len()) {
            let mut x = self.lower.clone();
            for (b, &i) in free.iter().enumerate() {
                if mask & (1 << b) != 0 {
                    x[i] = self.upper[i];
                }
            }
            out.push(x);
        }
        out
    }

    pub fn midpoint(&self) -> DVector<f64> {
        (&self.lower + &self.upper) * 0.5
    }
}
