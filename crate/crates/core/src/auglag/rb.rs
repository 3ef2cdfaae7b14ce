//! The augmented Lagrangian on top of a reduced basis space, as a model for
//! the trust-region solver.

use std::cell::RefCell;

use nalgebra::DVector;

use super::{AlParams, InnerOutcome, InnerSolver, PsProblem, Subproblem};
use crate::bounds::BoxBounds;
use crate::error::Result;
use crate::objective::MultiObjective;
use crate::rb::{Estimates, RbSpace};
use crate::trrb::{optimize, PostEnrichment, RemovalSummary, TrConfig, TrModel};

struct Eval {
    u: DVector<f64>,
    values: Vec<f64>,
    grads: Vec<DVector<f64>>,
    est: Estimates,
    rp: crate::rb::ReducedPoint,
}

/// `L_A^l + (1 - C)` with `J_i` replaced by reduced costs, its error bound
/// and the shifted full-order `L_A + (1 - C)`.
pub struct RbLagrangian {
    space: RbSpace,
    ps: PsProblem,
    al: AlParams,
    bounds: BoxBounds,
    shift: f64,
    cache: RefCell<Option<Eval>>,
}

impl Clone for RbLagrangian {
    fn clone(&self) -> Self {
        Self {
            space: self.space.clone(),
            ps: self.ps.clone(),
            al: self.al.clone(),
            bounds: self.bounds.clone(),
            shift: self.shift,
            cache: RefCell::new(None),
        }
    }
}

impl RbLagrangian {
    pub fn new(space: RbSpace, ps: PsProblem) -> Self {
        let al = AlParams { lambda: vec![0.0; ps.len()], mu: 1.0 };
        let bounds = ps.admissible_box(space.problem().bounds(), &al);
        let shift = ps.positivity_shift(&al);
        Self { space, ps, al, bounds, shift, cache: RefCell::new(None) }
    }

    pub fn set_multipliers(&mut self, al: &AlParams, bounds: &BoxBounds) {
        self.al = al.clone();
        self.bounds = bounds.clone();
        self.shift = self.ps.positivity_shift(al);
    }

    pub fn space(&self) -> &RbSpace {
        &self.space
    }

    /// Mutable access to the space; invalidates cached reduced evaluations.
    pub fn space_mut(&mut self) -> &mut RbSpace {
        self.cache.replace(None);
        &mut self.space
    }

    pub fn into_space(self) -> RbSpace {
        self.space
    }

    pub fn ps(&self) -> &PsProblem {
        &self.ps
    }

    pub fn params(&self) -> &AlParams {
        &self.al
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }

    fn with_eval<T>(&self, x: &DVector<f64>, f: impl FnOnce(&Eval) -> T) -> Result<T> {
        let (u, _, _) = self.ps.split(x);
        let hit = matches!(&*self.cache.borrow(), Some(e) if e.u == u);
        if !hit {
            let rp = self.space.reduce(&u)?;
            let idx = &self.ps.index_set;
            let values = idx.iter().map(|&i| self.space.value(&rp, i)).collect();
            let grads = idx.iter().map(|&i| self.space.gradient(&rp, i)).collect();
            let est = self.space.estimates(&rp);
            self.cache.replace(Some(Eval { u, values, grads, est, rp }));
        }
        let c = self.cache.borrow();
        Ok(f(c.as_ref().expect("cache filled above")))
    }

    /// Reduced objective values on the index set.
    pub fn reduced_objectives(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.with_eval(x, |e| e.values.clone())
    }

    /// Error bounds `Delta_J` of the reduced objectives on the index set.
    pub fn objective_estimates(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        self.with_eval(x, |e| self.ps.index_set.iter().map(|&i| e.est.cost[i]).collect())
    }

    /// Bound on `||grad L_A - grad L_A^l||` from the objective error bounds.
    pub fn gradient_estimate(&self, x: &DVector<f64>) -> Result<f64> {
        let (_, t, s) = self.ps.split(x);
        self.with_eval(x, |e| {
            let c = self.ps.constraints(&e.values, t, &s);
            let mut du = 0.0;
            let mut dt = 0.0;
            let mut ds = 0.0;
            for (n, &i) in self.ps.index_set.iter().enumerate() {
                let (dj, dg) = (e.est.cost[i], e.est.gradient[i]);
                du += (self.al.lambda[n] + self.al.mu * c[n]).abs() * dg + self.al.mu * dj * (e.grads[n].norm() + dg);
                dt += self.al.mu * self.ps.r[n] * dj;
                ds += (self.al.mu * dj).powi(2);
            }
            (du * du + dt * dt + ds).sqrt()
        })
    }

    /// Full objective values on the index set.
    pub fn full_objectives(&self, x: &DVector<f64>) -> Result<Vec<f64>> {
        let (u, _, _) = self.ps.split(x);
        self.space.problem().values(&u, &self.ps.index_set)
    }

    /// Relative projection error of the current space for the state and
    /// index-set adjoints at `u` (full solves).
    pub fn snapshot_error(&self, u: &DVector<f64>) -> Result<f64> {
        let problem = self.space.problem().clone();
        let sol = problem.solution(u)?;
        let mut worst = self.space.projection_error(&sol.state);
        for &i in &self.ps.index_set {
            if problem.objective(i).sigma_omega != 0.0 {
                worst = worst.max(self.space.projection_error(&problem.adjoint(&sol, i)));
            }
        }
        Ok(worst)
    }
}

impl TrModel for RbLagrangian {
    fn bounds(&self) -> &BoxBounds {
        &self.bounds
    }

    fn reduced_value(&self, x: &DVector<f64>) -> Result<f64> {
        self.with_eval(x, |e| self.ps.lagrangian(&self.al, &e.values, x) + self.shift)
    }

    fn reduced_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.with_eval(x, |e| self.ps.lagrangian_gradient(&self.al, &e.values, &e.grads, x))
    }

    fn reduced_hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        let (hu, _, _) = self.ps.split(h);
        self.with_eval(x, |e| {
            let hv = self.space.hess_vecs(&e.rp, &self.ps.index_set, &hu);
            self.ps.lagrangian_hess_vec(&self.al, &e.values, &e.grads, &hv, x, h)
        })
    }

    /// `sum_i (lambda_i + mu |c_i^l|) Delta_i + sum_i mu / 2 Delta_i^2`.
    fn estimate(&self, x: &DVector<f64>) -> Result<f64> {
        let (_, t, s) = self.ps.split(x);
        self.with_eval(x, |e| {
            let c = self.ps.constraints(&e.values, t, &s);
            self.ps
                .index_set
                .iter()
                .enumerate()
                .map(|(n, &i)| {
                    let d = e.est.cost[i];
                    (self.al.lambda[n] + self.al.mu * c[n].abs()) * d + 0.5 * self.al.mu * d * d
                })
                .sum()
        })
    }

    fn full_value(&self, x: &DVector<f64>) -> Result<f64> {
        let jv = self.full_objectives(x)?;
        Ok(self.ps.lagrangian(&self.al, &jv, x) + self.shift)
    }

    fn full_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (u, _, _) = self.ps.split(x);
        let problem = self.space.problem();
        let jv = problem.values(&u, &self.ps.index_set)?;
        let g = problem.gradients(&u, &self.ps.index_set)?;
        Ok(self.ps.lagrangian_gradient(&self.al, &jv, &g, x))
    }

    fn enrich(&mut self, x: &DVector<f64>) -> Result<()> {
        let (u, _, _) = self.ps.split(x);
        let idx = self.ps.index_set.clone();
        self.space_mut().enrich(&u, &idx)?;
        Ok(())
    }

    fn basis_size(&self) -> usize {
        self.space.dim()
    }
}

pub type RemovalHook = Box<dyn FnMut(&mut RbLagrangian, &PostEnrichment) -> Result<Option<RemovalSummary>> + Send>;

/// Trust-region reduced basis inner solver.
pub struct RbSolver {
    model: RbLagrangian,
    pub tr: TrConfig,
    hook: Option<RemovalHook>,
}

impl RbSolver {
    pub fn new(space: RbSpace, ps: PsProblem, tr: TrConfig, hook: Option<RemovalHook>) -> Self {
        Self { model: RbLagrangian::new(space, ps), tr, hook }
    }

    pub fn model(&self) -> &RbLagrangian {
        &self.model
    }

    pub fn into_space(self) -> RbSpace {
        self.model.into_space()
    }
}

impl InnerSolver for RbSolver {
    fn objectives(&self) -> &dyn MultiObjective {
        &**self.model.space.problem()
    }

    fn solve(&mut self, sub: &Subproblem, x0: &DVector<f64>) -> Result<InnerOutcome> {
        self.model.set_multipliers(sub.al, sub.bounds);
        let cfg = TrConfig { tau_foc: sub.tol, tau_sub: self.tr.tau_sub.min(0.1 * sub.tol), ..self.tr.clone() };
        if self.model.basis_size() == 0 || self.model.q(x0)? > cfg.beta_q * cfg.delta0 {
            self.model.enrich(x0)?;
        }
        let hook = &mut self.hook;
        let res = optimize(&mut self.model, x0, &cfg, |m, ctx| match hook {
            Some(h) => h(m, ctx),
            None => Ok(None),
        })?;
        Ok(InnerOutcome {
            x: res.x,
            iterations: res.stats.iterations,
            converged: res.converged,
            tr: Some((res.stats, res.trace)),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auglag::{outer_loop, AlConfig, DirectSolver};
    use crate::fem::{CostSpec, Field, FullOrderModel, Mesh, ModelData, PdeProblem, TrackingCost};
    use std::sync::Arc;

    fn problem(n: usize) -> Arc<PdeProblem> {
        let mesh = Mesh::unit_square(n, &[0.5]).unwrap();
        let data = ModelData {
            reaction: Field::Constant(1.0),
            source: Field::PerSubdomain(vec![2.76, -0.96, 0.51, -1.66]),
            ambient: Field::Constant(0.0),
            alpha: 0.0,
        };
        let fom = Arc::new(FullOrderModel::new(mesh, &data).unwrap());
        let bounds = BoxBounds::from_slices(&[2.0, 0.1, 0.1, 0.1, 0.3], &[2.0, 4.0, 4.0, 4.0, 0.3]).unwrap();
        let ud = vec![2.0, 0.0, 0.0, 0.0, 0.3];
        let cost = CostSpec {
            objectives: vec![
                TrackingCost { sigma_omega: 1.0, sigma_u: 0.002, y_omega: Field::PerSubdomain(vec![1.0, 1.0, 0.0, 0.0]), u_d: ud.clone() },
                TrackingCost { sigma_omega: 1.0, sigma_u: 0.002, y_omega: Field::PerSubdomain(vec![0.0, 0.0, 1.0, 1.0]), u_d: ud },
                TrackingCost { sigma_omega: 0.0, sigma_u: 0.05, y_omega: Field::Constant(0.0), u_d: vec![2.0, 1.0, 1.0, 1.0, 0.3] },
            ],
            bounds,
        };
        Arc::new(PdeProblem::new(fom, cost).unwrap())
    }

    fn setup() -> (Arc<PdeProblem>, PsProblem, RbLagrangian) {
        let p = problem(8);
        let idx = vec![0, 1, 2];
        let lower = vec![0.0; 3];
        let upper: Vec<f64> = idx.iter().map(|&i| p.value_bound(i)).collect();
        let ps = PsProblem::with_value_bounds(idx, vec![0.05, 0.05, 0.0], vec![1.0; 3], &lower, &upper).unwrap();
        let mut m = RbLagrangian::new(RbSpace::new(p.clone()), ps.clone());
        let al = AlParams { lambda: vec![0.3, 0.1, 0.2], mu: 10.0 };
        let bx = ps.admissible_box(p.bounds(), &al);
        m.set_multipliers(&al, &bx);
        (p, ps, m)
    }

    fn x_at(ps: &PsProblem, u: &[f64], t: f64) -> DVector<f64> {
        PsProblem::join(&DVector::from_column_slice(u), t, &DVector::from_element(ps.len(), 0.01))
    }

    #[test]
    fn lagrangian_estimate_bounds_the_true_error_and_vanishes_at_snapshots() {
        let (_, ps, mut m) = setup();
        let x0 = x_at(&ps, &[2.0, 1.0, 1.5, 0.5, 0.3], 0.2);
        m.enrich(&x0).unwrap();
        assert!(m.estimate(&x0).unwrap() <= 1e-8);
        for u in [[2.0, 3.0, 0.2, 2.0, 0.3], [2.0, 0.1, 4.0, 4.0, 0.3], [2.0, 1.2, 1.4, 0.6, 0.3]] {
            let x = x_at(&ps, &u, 0.1);
            let err = (m.full_value(&x).unwrap() - m.reduced_value(&x).unwrap()).abs();
            assert!(err <= m.estimate(&x).unwrap() + 1e-12);
            let gerr = (m.full_gradient(&x).unwrap() - m.reduced_gradient(&x).unwrap()).norm();
            assert!(gerr <= m.gradient_estimate(&x).unwrap() + 1e-12);
            assert!(m.reduced_value(&x).unwrap() >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn reduced_hessian_matches_gradient_differences() {
        let (_, ps, mut m) = setup();
        m.enrich(&x_at(&ps, &[2.0, 1.0, 1.5, 0.5, 0.3], 0.2)).unwrap();
        m.enrich(&x_at(&ps, &[2.0, 3.0, 0.5, 2.5, 0.3], 0.2)).unwrap();
        let x = x_at(&ps, &[2.0, 2.0, 1.0, 1.0, 0.3], 0.15);
        let h = DVector::from_column_slice(&[0.0, 0.3, -0.2, 0.5, 0.0, 0.1, 0.2, -0.1, 0.3]);
        let hv = m.reduced_hess_vec(&x, &h).unwrap();
        let e = 1e-6;
        let fd = (m.reduced_gradient(&(&x + &h * e)).unwrap() - m.reduced_gradient(&(&x - &h * e)).unwrap()) / (2.0 * e);
        assert!((&fd - &hv).norm() <= 1e-5 * (1.0 + hv.norm()));
    }

    #[test]
    fn rb_and_direct_solutions_agree() {
        let p = problem(8);
        let idx = vec![0, 1];
        let upper: Vec<f64> = idx.iter().map(|&i| p.value_bound(i)).collect();
        let ps = PsProblem::with_value_bounds(idx, vec![0.06, 0.06], vec![1.0; 2], &[0.0; 2], &upper).unwrap();
        let u0 = DVector::from_column_slice(&[2.0, 1.0, 1.0, 1.0, 0.3]);
        let cfg = AlConfig::default();
        let fe = outer_loop(&ps, &mut DirectSolver::new(&*p), &u0, &cfg).unwrap();
        let p_rb = Arc::new(p.fork());
        let mut solver = RbSolver::new(RbSpace::new(p_rb.clone()), ps.clone(), TrConfig::default(), None);
        let rb = outer_loop(&ps, &mut solver, &u0, &cfg).unwrap();
        assert!(fe.converged && rb.converged);
        for (a, b) in fe.values.iter().zip(&rb.values) {
            assert!((a - b).abs() < 1e-5, "{:?} vs {:?}", fe.values, rb.values);
        }
        let dim = solver.model().basis_size();
        assert!(dim > 0 && dim < 60);
        assert!(p_rb.counters().full_solves() < p.counters().full_solves());
    }
}
