//! Orthonormal coordinates for Riesz representatives of residual pieces.
//!
//! Every functional `f` that appears in a residual is represented by
//! coordinates `c` with `G^{-1} f = sum_j c_j q_j` for an H1-orthonormal
//! family `q_j`. The dual norm of any linear combination of functionals is
//! then the Euclidean norm of the same combination of coordinates, which
//! avoids the cancellation of a Gram-matrix quadratic form.

use nalgebra::DVector;

use crate::fem::FullOrderModel;

/// Remainders below this fraction of the representative's norm are roundoff.
const DROP_TOL: f64 = 1e-14;

#[derive(Clone, Debug, Default)]
pub struct RieszBasis {
    q: Vec<DVector<f64>>,
    gq: Vec<DVector<f64>>,
}

impl RieszBasis {
    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    /// Coordinates of the representative `w = G^{-1} f`, extending the family
    /// when `w` has a new direction.
    pub fn add(&mut self, fom: &FullOrderModel, w: &DVector<f64>) -> Vec<f64> {
        let norm0 = fom.v_norm(w);
        let mut rem = w.clone();
        let mut coords = vec![0.0; self.q.len()];
        if norm0 == 0.0 {
            return coords;
        }
        for _ in 0..2 {
            for (j, (q, gq)) in self.q.iter().zip(&self.gq).enumerate() {
                let c = gq.dot(&rem);
                coords[j] += c;
                rem.axpy(-c, q, 1.0);
            }
        }
        let g_rem = fom.gram_apply(&rem);
        let r = rem.dot(&g_rem).max(0.0).sqrt();
        if r > DROP_TOL * norm0 {
            self.q.push(rem / r);
            self.gq.push(g_rem / r);
            coords.push(r);
        }
        coords
    }
}

/// `acc += a * c` with `c` zero-padded to the length of `acc`.
pub fn axpy_padded(acc: &mut [f64], a: f64, c: &[f64]) {
    if a == 0.0 {
        return;
    }
    for (x, y) in acc.iter_mut().zip(c) {
        *x += a * y;
    }
}

pub fn norm(c: &[f64]) -> f64 {
    c.iter().map(|x| x * x).sum::<f64>().sqrt()
}
