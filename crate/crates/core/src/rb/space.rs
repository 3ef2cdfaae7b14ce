//! Reduced basis spaces: Galerkin projection of the state and adjoint
//! equations onto an H1-orthonormal snapshot basis, reduced costs and
//! derivatives, and residual-based error estimators.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use super::riesz::{axpy_padded, norm, RieszBasis};
use crate::error::{check_len, Error, Result};
use crate::fem::PdeProblem;

/// Snapshots whose remainder after orthogonalization falls below this
/// fraction of their norm are considered already represented.
pub const GS_TOL: f64 = 1e-10;

/// Per-basis-function Riesz coordinates of `A_q psi_n`, the Robin part and `M psi_n`.
#[derive(Clone, Debug)]
struct BasisCoords {
    comps: Vec<Vec<f64>>,
    robin: Vec<f64>,
    mass: Vec<f64>,
}

#[derive(Clone)]
pub struct RbSpace {
    problem: Arc<PdeProblem>,
    basis: Vec<DVector<f64>>,
    gram_basis: Vec<DVector<f64>>,
    ids: Vec<u64>,
    next_id: u64,
    comps: Vec<DMatrix<f64>>,
    robin: DMatrix<f64>,
    mass: DMatrix<f64>,
    load: DVector<f64>,
    desired: Vec<DVector<f64>>,
    riesz: RieszBasis,
    load_coords: Vec<f64>,
    desired_coords: Vec<Vec<f64>>,
    coords: Vec<BasisCoords>,
    provenance: Vec<DVector<f64>>,
    snapshot_coeffs: Vec<Vec<f64>>,
    /// Ids of the basis functions added by the latest enrichment.
    latest: Vec<u64>,
}

/// What one enrichment did.
#[derive(Clone, Debug, PartialEq)]
pub struct EnrichReport {
    pub snapshots: usize,
    pub added: usize,
    pub dropped: usize,
}

/// Reduced state and adjoints at one parameter.
pub struct ReducedPoint {
    pub u: DVector<f64>,
    chol: Option<Cholesky<f64, Dyn>>,
    pub state: DVector<f64>,
    pub adjoints: Vec<DVector<f64>>,
    coercivity: f64,
}

/// Error bounds at one parameter; per-objective vectors are indexed by objective.
#[derive(Clone, Debug, PartialEq)]
pub struct Estimates {
    pub state: f64,
    pub adjoint: Vec<f64>,
    pub cost: Vec<f64>,
    pub gradient: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RbCheckpoint {
    pub n_dofs: usize,
    pub basis: Vec<Vec<f64>>,
    pub provenance: Vec<Vec<f64>>,
}

fn grow(m: &DMatrix<f64>, col: &[f64]) -> DMatrix<f64> {
    let l = m.nrows();
    let mut out = DMatrix::zeros(l + 1, l + 1);
    out.view_mut((0, 0), (l, l)).copy_from(m);
    for (i, v) in col.iter().enumerate() {
        out[(i, l)] = *v;
        out[(l, i)] = *v;
    }
    out
}

impl RbSpace {
    pub fn new(problem: Arc<PdeProblem>) -> Self {
        let fom = problem.fom();
        let p = fom.n_params();
        let k = problem.cost().objectives.len();
        let mut riesz = RieszBasis::default();
        let load_coords = riesz.add(fom, &problem.riesz(fom.load()));
        let desired_coords = (0..k)
            .map(|i| {
                if problem.objective(i).sigma_omega == 0.0 {
                    Vec::new()
                } else {
                    riesz.add(fom, &problem.riesz(problem.desired_functional(i)))
                }
            })
            .collect();
        Self {
            basis: Vec::new(),
            gram_basis: Vec::new(),
            ids: Vec::new(),
            next_id: 0,
            comps: vec![DMatrix::zeros(0, 0); p],
            robin: DMatrix::zeros(0, 0),
            mass: DMatrix::zeros(0, 0),
            load: DVector::zeros(0),
            desired: vec![DVector::zeros(0); k],
            riesz,
            load_coords,
            desired_coords,
            coords: Vec::new(),
            provenance: Vec::new(),
            snapshot_coeffs: Vec::new(),
            latest: Vec::new(),
            problem,
        }
    }

    pub fn problem(&self) -> &Arc<PdeProblem> {
        &self.problem
    }

    /// Swaps in another problem over the same full-order model, e.g. a fork
    /// with its own solve counters.
    pub fn set_problem(&mut self, problem: Arc<PdeProblem>) -> Result<()> {
        if !Arc::ptr_eq(self.problem.fom_arc(), problem.fom_arc()) || self.problem.cost() != problem.cost() {
            return Err(Error::InvalidInput("replacement problem must share the model and the costs".into()));
        }
        self.problem = problem;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[DVector<f64>] {
        &self.basis
    }

    pub fn basis_ids(&self) -> &[u64] {
        &self.ids
    }

    /// Parameters at which snapshots were taken, in order.
    pub fn provenance(&self) -> &[DVector<f64>] {
        &self.provenance
    }

    /// Appends `v` after orthogonalization; returns whether the basis grew.
    fn push_vector(&mut self, v: &DVector<f64>) -> bool {
        let fom = self.problem.fom();
        let norm0 = fom.v_norm(v);
        if !(norm0 > 0.0) {
            return false;
        }
        let mut rem = v.clone();
        for _ in 0..2 {
            for (psi, gpsi) in self.basis.iter().zip(&self.gram_basis) {
                let c = gpsi.dot(&rem);
                rem.axpy(-c, psi, 1.0);
            }
        }
        let r = fom.v_norm(&rem);
        if !(r > GS_TOL * norm0) {
            return false;
        }
        let psi = rem / r;
        let gpsi = fom.gram_apply(&psi);

        let mut comp_coords = Vec::with_capacity(self.comps.len());
        for q in 0..self.comps.len() {
            let a_psi = fom.apply_component(q, &psi);
            let mut col: Vec<f64> = self.basis.iter().map(|b| b.dot(&a_psi)).collect();
            col.push(psi.dot(&a_psi));
            self.comps[q] = grow(&self.comps[q], &col);
            comp_coords.push(self.riesz.add(fom, &self.problem.riesz(&a_psi)));
        }
        let robin_coords = if fom.has_robin() {
            let r_psi = fom.robin_apply(&psi);
            let mut col: Vec<f64> = self.basis.iter().map(|b| b.dot(&r_psi)).collect();
            col.push(psi.dot(&r_psi));
            self.robin = grow(&self.robin, &col);
            self.riesz.add(fom, &self.problem.riesz(&r_psi))
        } else {
            self.robin = DMatrix::zeros(self.basis.len() + 1, self.basis.len() + 1);
            Vec::new()
        };
        let m_psi = fom.mass_apply(&psi);
        let mut col: Vec<f64> = self.basis.iter().map(|b| b.dot(&m_psi)).collect();
        col.push(psi.dot(&m_psi));
        self.mass = grow(&self.mass, &col);
        let mass_coords = self.riesz.add(fom, &self.problem.riesz(&m_psi));

        self.load = self.load.push(psi.dot(fom.load()));
        for i in 0..self.desired.len() {
            let b = psi.dot(self.problem.desired_functional(i));
            self.desired[i] = self.desired[i].push(b);
        }
        self.coords.push(BasisCoords { comps: comp_coords, robin: robin_coords, mass: mass_coords });
        self.basis.push(psi);
        self.gram_basis.push(gpsi);
        self.ids.push(self.next_id);
        self.next_id += 1;
        true
    }

    /// Adds the state and the adjoints of `objectives` at `u`.
    pub fn enrich(&mut self, u: &DVector<f64>, objectives: &[usize]) -> Result<EnrichReport> {
        let problem = self.problem.clone();
        let sol = problem.solution(u)?;
        let mut snaps = vec![sol.state.clone()];
        for &i in objectives {
            if problem.objective(i).sigma_omega != 0.0 {
                snaps.push((*problem.adjoint(&sol, i)).clone());
            }
        }
        let mut added = 0;
        let first_new = self.next_id;
        for s in &snaps {
            if self.push_vector(s) {
                added += 1;
            }
        }
        self.provenance.push(u.clone());
        self.snapshot_coeffs = snaps
            .iter()
            .map(|s| self.gram_basis.iter().map(|g| g.dot(s)).collect())
            .collect();
        self.latest = (first_new..self.next_id).collect();
        Ok(EnrichReport { snapshots: snaps.len(), added, dropped: snaps.len() - added })
    }

    /// Fourier coefficients `(v, psi_n)_V` of the most recent snapshots.
    pub fn snapshot_coefficients(&self) -> &[Vec<f64>] {
        &self.snapshot_coeffs
    }

    /// Importance of each basis function for the latest snapshots: the
    /// largest share `c_n^2 / sum_m c_m^2` over those snapshots, with `m`
    /// running over the functions that existed before the latest enrichment.
    /// Functions added by that enrichment score infinity.
    pub fn zeta_scores(&self) -> Vec<f64> {
        let old: Vec<bool> = self.ids.iter().map(|id| !self.latest.contains(id)).collect();
        let mut z: Vec<f64> = old.iter().map(|&o| if o { 0.0 } else { f64::INFINITY }).collect();
        for c in &self.snapshot_coeffs {
            let total: f64 = c.iter().zip(&old).filter(|(_, &o)| o).map(|(x, _)| x * x).sum();
            if total > 0.0 {
                for ((zn, cn), &o) in z.iter_mut().zip(c).zip(&old) {
                    if o {
                        *zn = f64::max(*zn, cn * cn / total);
                    }
                }
            }
        }
        z
    }

    /// Largest relative projection error of the latest snapshots onto the space
    /// when the basis functions in `removed` are dropped.
    pub fn snapshot_loss(&self, removed: &[usize]) -> f64 {
        let mut worst: f64 = 0.0;
        for c in &self.snapshot_coeffs {
            let total: f64 = c.iter().map(|x| x * x).sum();
            if total > 0.0 {
                let lost: f64 = removed.iter().map(|&n| c[n] * c[n]).sum();
                worst = worst.max((lost / total).sqrt());
            }
        }
        worst
    }

    pub fn remove_basis(&mut self, n: usize) -> Result<()> {
        if n >= self.dim() {
            return Err(Error::InvalidInput(format!("basis index {n} out of range {}", self.dim())));
        }
        let keep: Vec<usize> = (0..self.dim()).filter(|&m| m != n).collect();
        let sub = |m: &DMatrix<f64>| m.select_rows(&keep).select_columns(&keep);
        for c in self.comps.iter_mut() {
            *c = sub(c);
        }
        self.robin = sub(&self.robin);
        self.mass = sub(&self.mass);
        self.load = self.load.select_rows(&keep);
        for d in self.desired.iter_mut() {
            *d = d.select_rows(&keep);
        }
        self.basis.remove(n);
        self.gram_basis.remove(n);
        self.ids.remove(n);
        self.coords.remove(n);
        for c in self.snapshot_coeffs.iter_mut() {
            c.remove(n);
        }
        Ok(())
    }

    /// Removes several basis functions given by index.
    pub fn remove_many(&mut self, indices: &[usize]) -> Result<()> {
        let mut idx = indices.to_vec();
        idx.sort_unstable();
        idx.dedup();
        for &n in idx.iter().rev() {
            self.remove_basis(n)?;
        }
        Ok(())
    }

    pub fn lift(&self, coeffs: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.problem.fom().n_dofs());
        for (c, psi) in coeffs.iter().zip(&self.basis) {
            out.axpy(*c, psi, 1.0);
        }
        out
    }

    /// Best-approximation error `||v - P v||_V / ||v||_V`.
    pub fn projection_error(&self, v: &DVector<f64>) -> f64 {
        let fom = self.problem.fom();
        let n0 = fom.v_norm(v);
        if n0 == 0.0 {
            return 0.0;
        }
        let c = DVector::from_iterator(self.dim(), self.gram_basis.iter().map(|g| g.dot(v)));
        fom.v_norm(&(v - self.lift(&c))) / n0
    }

    fn system(&self, u: &DVector<f64>) -> DMatrix<f64> {
        let mut a = self.robin.clone();
        for (q, c) in self.comps.iter().enumerate() {
            a += c * u[q];
        }
        a
    }

    fn solve(chol: &Option<Cholesky<f64, Dyn>>, rhs: &DVector<f64>) -> DVector<f64> {
        match chol {
            Some(c) => c.solve(rhs),
            None => DVector::zeros(rhs.len()),
        }
    }

    fn derivative(&self, h: &DVector<f64>) -> DMatrix<f64> {
        let l = self.dim();
        let mut d = DMatrix::zeros(l, l);
        for (q, c) in self.comps.iter().enumerate() {
            if h[q] != 0.0 {
                d += c * h[q];
            }
        }
        d
    }

    /// Reduced state and all adjoints at `u`.
    pub fn reduce(&self, u: &DVector<f64>) -> Result<ReducedPoint> {
        let fom = self.problem.fom();
        let coercivity = fom.coercivity_constant(u)?;
        let chol = if self.dim() == 0 {
            None
        } else {
            Some(self.system(u).cholesky().ok_or_else(|| {
                Error::Factorization(format!("reduced system at u = {:?}", u.as_slice()))
            })?)
        };
        let state = Self::solve(&chol, &self.load);
        let adjoints = (0..self.desired.len())
            .map(|i| {
                let s = self.problem.objective(i).sigma_omega;
                if s == 0.0 {
                    DVector::zeros(self.dim())
                } else {
                    Self::solve(&chol, &((&self.mass * &state - &self.desired[i]) * s))
                }
            })
            .collect();
        Ok(ReducedPoint { u: u.clone(), chol, state, adjoints, coercivity })
    }

    fn parameter_term(&self, i: usize, u: &DVector<f64>) -> (f64, DVector<f64>) {
        let o = self.problem.objective(i);
        let d = u - DVector::from_column_slice(&o.u_d);
        (0.5 * o.sigma_u * d.norm_squared(), d * o.sigma_u)
    }

    pub fn value(&self, rp: &ReducedPoint, i: usize) -> f64 {
        let o = self.problem.objective(i);
        let (par, _) = self.parameter_term(i, &rp.u);
        if o.sigma_omega == 0.0 {
            return par;
        }
        let y = &rp.state;
        let misfit = (y.dot(&(&self.mass * y)) - 2.0 * self.desired[i].dot(y) + self.problem.desired_sq(i)).max(0.0);
        0.5 * o.sigma_omega * misfit + par
    }

    fn partial_u_a(&self, y: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.comps.len(), self.comps.iter().map(|c| y.dot(&(c * p))))
    }

    pub fn gradient(&self, rp: &ReducedPoint, i: usize) -> DVector<f64> {
        let (_, g) = self.parameter_term(i, &rp.u);
        if self.problem.objective(i).sigma_omega == 0.0 {
            return g;
        }
        g - self.partial_u_a(&rp.state, &rp.adjoints[i])
    }

    /// Hessian-vector products of several objectives, sharing the state sensitivity.
    pub fn hess_vecs(&self, rp: &ReducedPoint, idx: &[usize], h: &DVector<f64>) -> Vec<DVector<f64>> {
        let dh = self.derivative(h);
        let yh = -Self::solve(&rp.chol, &(&dh * &rp.state));
        idx.iter()
            .map(|&i| {
                let o = self.problem.objective(i);
                let mut v = h * o.sigma_u;
                if o.sigma_omega != 0.0 {
                    let p = &rp.adjoints[i];
                    let ph = Self::solve(&rp.chol, &(&self.mass * &yh * o.sigma_omega - &dh * p));
                    v -= self.partial_u_a(&yh, p) + self.partial_u_a(&rp.state, &ph);
                }
                v
            })
            .collect()
    }

    /// Riesz coordinates of `A(u) v` for `v` in reduced coordinates.
    fn operator_coords(&self, u: &DVector<f64>, v: &DVector<f64>) -> Vec<f64> {
        let mut acc = vec![0.0; self.riesz.len()];
        for (n, bc) in self.coords.iter().enumerate() {
            if v[n] == 0.0 {
                continue;
            }
            axpy_padded(&mut acc, v[n], &bc.robin);
            for (q, c) in bc.comps.iter().enumerate() {
                axpy_padded(&mut acc, v[n] * u[q], c);
            }
        }
        acc
    }

    pub fn state_residual_norm(&self, rp: &ReducedPoint) -> f64 {
        let mut r = self.operator_coords(&rp.u, &rp.state);
        for x in r.iter_mut() {
            *x = -*x;
        }
        axpy_padded(&mut r, 1.0, &self.load_coords);
        norm(&r)
    }

    pub fn adjoint_residual_norm(&self, rp: &ReducedPoint, i: usize) -> f64 {
        let s = self.problem.objective(i).sigma_omega;
        if s == 0.0 {
            return 0.0;
        }
        let mut r = self.operator_coords(&rp.u, &rp.adjoints[i]);
        for x in r.iter_mut() {
            *x = -*x;
        }
        for (n, bc) in self.coords.iter().enumerate() {
            axpy_padded(&mut r, s * rp.state[n], &bc.mass);
        }
        axpy_padded(&mut r, -s, &self.desired_coords[i]);
        norm(&r)
    }

    pub fn estimates(&self, rp: &ReducedPoint) -> Estimates {
        let k = self.desired.len();
        let alpha = rp.coercivity;
        let rst = self.state_residual_norm(rp);
        let d_st = rst / alpha;
        let gamma = self.problem.fom().parameter_derivative_norm();
        let y_norm = rp.state.norm();
        let mut est = Estimates { state: d_st, adjoint: vec![0.0; k], cost: vec![0.0; k], gradient: vec![0.0; k] };
        for i in 0..k {
            let s = self.problem.objective(i).sigma_omega;
            if s == 0.0 {
                continue;
            }
            let radj = self.adjoint_residual_norm(rp, i);
            let d_adj = (radj + s * d_st) / alpha;
            est.adjoint[i] = d_adj;
            est.cost[i] = d_st * radj + s * d_st * d_st;
            est.gradient[i] = gamma * (y_norm * d_adj + d_st * d_adj + d_st * rp.adjoints[i].norm());
        }
        est
    }

    pub fn checkpoint(&self) -> RbCheckpoint {
        RbCheckpoint {
            n_dofs: self.problem.fom().n_dofs(),
            basis: self.basis.iter().map(|b| b.as_slice().to_vec()).collect(),
            provenance: self.provenance.iter().map(|u| u.as_slice().to_vec()).collect(),
        }
    }

    pub fn from_checkpoint(problem: Arc<PdeProblem>, ck: &RbCheckpoint) -> Result<Self> {
        check_len(problem.fom().n_dofs(), ck.n_dofs)?;
        let mut space = Self::new(problem);
        for b in &ck.basis {
            check_len(ck.n_dofs, b.len())?;
            space.push_vector(&DVector::from_column_slice(b));
        }
        space.provenance = ck.provenance.iter().map(|u| DVector::from_column_slice(u)).collect();
        Ok(space)
    }
}

impl std::fmt::Debug for RbSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RbSpace").field("dim", &self.dim()).field("ids", &self.ids).finish()
    }
}
