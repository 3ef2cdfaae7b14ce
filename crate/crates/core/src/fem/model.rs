//! The full-order model: assembled components plus sparse Cholesky solves.

use nalgebra::{DMatrix, DVector};
use nalgebra_sparse::factorization::{CscCholesky, CscSymbolicCholesky};

use super::assembly::{assemble_components, FomComponents, ModelData};
use super::mesh::Mesh;
use crate::error::{check_len, Error, Result};

/// A factorized system matrix `A(u)`, reused for state and adjoint solves.
pub struct Factor {
    chol: CscCholesky<f64>,
    n: usize,
}

impl Factor {
    pub fn solve(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let b = DMatrix::from_column_slice(self.n, 1, rhs.as_slice());
        let x = self.chol.solve(&b);
        DVector::from_column_slice(x.as_slice())
    }
}

pub struct FullOrderModel {
    mesh: Mesh,
    components: FomComponents,
    symbolic: CscSymbolicCholesky,
    gram: Factor,
}

impl FullOrderModel {
    pub fn new(mesh: Mesh, data: &ModelData) -> Result<Self> {
        let components = assemble_components(&mesh, data)?;
        Self::from_components(mesh, components)
    }

    pub fn from_components(mesh: Mesh, components: FomComponents) -> Result<Self> {
        check_len(mesh.n_nodes(), components.pattern.n)?;
        check_len(mesh.n_subdomains, components.diffusion.len())?;
        let symbolic = CscSymbolicCholesky::factor(components.pattern.sparsity());
        let chol = CscCholesky::factor_numerical(symbolic.clone(), &components.h1_gram)
            .map_err(|e| Error::Factorization(format!("H1 Gram matrix: {e}")))?;
        let gram = Factor { chol, n: mesh.n_nodes() };
        Ok(Self { mesh, components, symbolic, gram })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn components(&self) -> &FomComponents {
        &self.components
    }

    pub fn n_dofs(&self) -> usize {
        self.mesh.n_nodes()
    }

    pub fn n_subdomains(&self) -> usize {
        self.components.diffusion.len()
    }

    /// Parameter dimension: one diffusion coefficient per subdomain plus the
    /// reaction parameter.
    pub fn n_params(&self) -> usize {
        self.n_subdomains() + 1
    }

    pub fn check_parameter(&self, u: &DVector<f64>) -> Result<()> {
        check_len(self.n_params(), u.len())?;
        if u.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "all coefficients must be finite and positive, got {:?}",
                u.as_slice()
            )));
        }
        Ok(())
    }

    /// Coercivity constant of `a(u; ., .)` with respect to the H1 norm.
    pub fn coercivity_constant(&self, u: &DVector<f64>) -> Result<f64> {
        self.check_parameter(u)?;
        let m = self.n_subdomains();
        let kappa = u.rows(0, m).min();
        Ok(kappa.min(u[m] * self.components.reaction_range.0))
    }

    /// Bound on `|| d_u a(u; ., .) ||` from `V x V` into the parameter space.
    pub fn parameter_derivative_norm(&self) -> f64 {
        self.components.reaction_range.1.max(1.0)
    }

    fn component(&self, q: usize) -> &[f64] {
        let m = self.n_subdomains();
        if q < m {
            &self.components.diffusion[q]
        } else {
            &self.components.reaction
        }
    }

    pub fn system_values(&self, u: &DVector<f64>) -> Vec<f64> {
        let mut vals = self.components.robin.clone();
        for q in 0..self.n_params() {
            for (v, c) in vals.iter_mut().zip(self.component(q)) {
                *v += u[q] * c;
            }
        }
        vals
    }

    pub fn factorize(&self, u: &DVector<f64>) -> Result<Factor> {
        self.check_parameter(u)?;
        let vals = self.system_values(u);
        let chol = CscCholesky::factor_numerical(self.symbolic.clone(), &vals)
            .map_err(|e| Error::Factorization(format!("system matrix at u = {:?}: {e}", u.as_slice())))?;
        Ok(Factor { chol, n: self.n_dofs() })
    }

    /// `A_q x` for the parameter component `q` (diffusion blocks, then reaction).
    pub fn apply_component(&self, q: usize, x: &DVector<f64>) -> DVector<f64> {
        self.components.pattern.matvec(self.component(q), x)
    }

    /// `(sum_q h_q A_q) x`, the derivative of `A(u)` in direction `h`.
    pub fn apply_derivative(&self, h: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.n_dofs());
        for q in 0..self.n_params() {
            if h[q] != 0.0 {
                out.axpy(h[q], &self.apply_component(q, x), 1.0);
            }
        }
        out
    }

    pub fn apply_system(&self, u: &DVector<f64>, x: &DVector<f64>) -> DVector<f64> {
        let mut out = self.components.pattern.matvec(&self.components.robin, x);
        out += self.apply_derivative(u, x);
        out
    }

    /// `(y^T A_q p)_q`, the Riesz representative of `d_u a(u; y, p)`.
    pub fn partial_u_a(&self, y: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n_params(), |q, _| self.components.pattern.bilinear(self.component(q), y, p))
    }

    /// `a(u; y, p)`.
    pub fn bilinear(&self, u: &DVector<f64>, y: &DVector<f64>, p: &DVector<f64>) -> f64 {
        self.components.pattern.bilinear(&self.components.robin, y, p) + u.dot(&self.partial_u_a(y, p))
    }

    pub fn load(&self) -> &DVector<f64> {
        &self.components.load
    }

    pub fn mass_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.components.pattern.matvec(&self.components.mass, x)
    }

    pub fn gram_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.components.pattern.matvec(&self.components.h1_gram, x)
    }

    pub fn robin_apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.components.pattern.matvec(&self.components.robin, x)
    }

    pub fn has_robin(&self) -> bool {
        self.components.alpha > 0.0
    }

    pub fn v_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.components.pattern.bilinear(&self.components.h1_gram, x, y)
    }

    pub fn v_norm(&self, x: &DVector<f64>) -> f64 {
        self.v_inner(x, x).max(0.0).sqrt()
    }

    pub fn h_inner(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        self.components.pattern.bilinear(&self.components.mass, x, y)
    }

    /// Riesz representative in V of the functional with coefficient vector `f`.
    pub fn riesz(&self, f: &DVector<f64>) -> DVector<f64> {
        self.gram.solve(f)
    }

    /// Dual norm of a functional, `sqrt(f^T G^{-1} f)`.
    pub fn dual_norm(&self, f: &DVector<f64>) -> f64 {
        f.dot(&self.riesz(f)).max(0.0).sqrt()
    }
}
