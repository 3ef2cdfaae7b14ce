//! Tracking-type costs on top of the full-order model: states, adjoints,
//! gradients and Hessian-vector products.

use std::collections::VecDeque;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::assembly::{assemble_functional, integrate_square, Field};
use super::model::{Factor, FullOrderModel};
use crate::bounds::BoxBounds;
use crate::error::{check_len, Error, Result};
use crate::objective::MultiObjective;

/// `J(u) = sigma_omega / 2 ||S(u) - y_omega||_H^2 + sigma_u / 2 ||u - u_d||^2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackingCost {
    pub sigma_omega: f64,
    pub sigma_u: f64,
    pub y_omega: Field,
    pub u_d: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CostSpec {
    pub objectives: Vec<TrackingCost>,
    pub bounds: BoxBounds,
}

/// Linear solve statistics of one problem instance.
#[derive(Debug, Default)]
pub struct SolveCounters {
    pub factorizations: AtomicUsize,
    pub state_solves: AtomicUsize,
    pub adjoint_solves: AtomicUsize,
    pub sensitivity_solves: AtomicUsize,
    pub riesz_solves: AtomicUsize,
}

impl SolveCounters {
    fn bump(c: &AtomicUsize, n: usize) {
        c.fetch_add(n, Ordering::Relaxed);
    }

    /// Solves with the parameter-dependent system matrix.
    pub fn full_solves(&self) -> usize {
        self.state_solves.load(Ordering::Relaxed)
            + self.adjoint_solves.load(Ordering::Relaxed)
            + self.sensitivity_solves.load(Ordering::Relaxed)
    }

    pub fn riesz(&self) -> usize {
        self.riesz_solves.load(Ordering::Relaxed)
    }
}

/// State, factorization and lazily computed adjoints at one parameter.
pub struct FullSolution {
    pub u: DVector<f64>,
    factor: Factor,
    pub state: DVector<f64>,
    adjoints: Mutex<Vec<Option<Arc<DVector<f64>>>>>,
}

impl FullSolution {
    pub fn factor(&self) -> &Factor {
        &self.factor
    }
}

const CACHE_SIZE: usize = 4;

pub struct PdeProblem {
    fom: Arc<FullOrderModel>,
    cost: CostSpec,
    /// `int y_omega phi` per objective.
    desired: Vec<DVector<f64>>,
    /// `int y_omega^2` per objective.
    desired_sq: Vec<f64>,
    value_bounds: Vec<f64>,
    cache: Mutex<VecDeque<Arc<FullSolution>>>,
    counters: SolveCounters,
}

impl PdeProblem {
    pub fn new(fom: Arc<FullOrderModel>, cost: CostSpec) -> Result<Self> {
        let p = fom.n_params();
        check_len(p, cost.bounds.dim())?;
        if cost.objectives.is_empty() {
            return Err(Error::InvalidInput("at least one objective is required".into()));
        }
        for (i, o) in cost.objectives.iter().enumerate() {
            check_len(p, o.u_d.len())?;
            if !(o.sigma_omega >= 0.0 && o.sigma_u >= 0.0) {
                return Err(Error::InvalidInput(format!("objective {i}: weights must be nonnegative")));
            }
        }
        // the admissible box must lie in the coercive parameter set
        fom.check_parameter(cost.bounds.lower())
            .map_err(|e| Error::InvalidInput(format!("lower parameter bound not admissible: {e}")))?;

        let mut desired = Vec::new();
        let mut desired_sq = Vec::new();
        for o in &cost.objectives {
            desired.push(assemble_functional(fom.mesh(), &o.y_omega)?);
            desired_sq.push(integrate_square(fom.mesh(), &o.y_omega)?);
        }
        let alpha_min = fom.coercivity_constant(cost.bounds.lower())?;
        let state_bound = fom.dual_norm(fom.load()) / alpha_min;
        let corners = cost.bounds.corners();
        let value_bounds = cost
            .objectives
            .iter()
            .zip(&desired_sq)
            .map(|(o, sq)| {
                let ud = DVector::from_column_slice(&o.u_d);
                let par = corners.iter().map(|c| (c - &ud).norm_squared()).fold(0.0, f64::max);
                0.5 * o.sigma_omega * (state_bound + sq.sqrt()).powi(2) + 0.5 * o.sigma_u * par
            })
            .collect();
        Ok(Self {
            fom,
            cost,
            desired,
            desired_sq,
            value_bounds,
            cache: Mutex::new(VecDeque::new()),
            counters: SolveCounters::default(),
        })
    }

    /// Fresh instance sharing the model but with its own cache and counters.
    pub fn fork(&self) -> Self {
        Self {
            fom: self.fom.clone(),
            cost: self.cost.clone(),
            desired: self.desired.clone(),
            desired_sq: self.desired_sq.clone(),
            value_bounds: self.value_bounds.clone(),
            cache: Mutex::new(VecDeque::new()),
            counters: SolveCounters::default(),
        }
    }

    pub fn fom(&self) -> &FullOrderModel {
        &self.fom
    }

    pub fn fom_arc(&self) -> &Arc<FullOrderModel> {
        &self.fom
    }

    pub fn cost(&self) -> &CostSpec {
        &self.cost
    }

    pub fn objective(&self, i: usize) -> &TrackingCost {
        &self.cost.objectives[i]
    }

    pub fn desired_functional(&self, i: usize) -> &DVector<f64> {
        &self.desired[i]
    }

    pub fn desired_sq(&self, i: usize) -> f64 {
        self.desired_sq[i]
    }

    pub fn counters(&self) -> &SolveCounters {
        &self.counters
    }

    /// Riesz representative, counted separately from system solves.
    pub fn riesz(&self, f: &DVector<f64>) -> DVector<f64> {
        SolveCounters::bump(&self.counters.riesz_solves, 1);
        self.fom.riesz(f)
    }

    fn check_admissible(&self, u: &DVector<f64>) -> Result<()> {
        self.fom.check_parameter(u)
    }

    /// Full solution at `u`, from the cache when available.
    pub fn solution(&self, u: &DVector<f64>) -> Result<Arc<FullSolution>> {
        self.check_admissible(u)?;
        {
            let cache = self.cache.lock().expect("cache lock");
            if let Some(s) = cache.iter().find(|s| s.u == *u) {
                return Ok(s.clone());
            }
        }
        let factor = self.fom.factorize(u)?;
        SolveCounters::bump(&self.counters.factorizations, 1);
        let state = factor.solve(self.fom.load());
        SolveCounters::bump(&self.counters.state_solves, 1);
        let sol = Arc::new(FullSolution {
            u: u.clone(),
            factor,
            state,
            adjoints: Mutex::new(vec![None; self.cost.objectives.len()]),
        });
        let mut cache = self.cache.lock().expect("cache lock");
        cache.push_front(sol.clone());
        cache.truncate(CACHE_SIZE);
        Ok(sol)
    }

    pub fn solve_state(&self, u: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.solution(u)?.state.clone())
    }

    /// Right-hand side `sigma_omega (M y - int y_omega phi)` of adjoint `i`.
    pub fn adjoint_rhs(&self, i: usize, y: &DVector<f64>) -> DVector<f64> {
        let s = self.cost.objectives[i].sigma_omega;
        (self.fom.mass_apply(y) - &self.desired[i]) * s
    }

    pub fn adjoint(&self, sol: &FullSolution, i: usize) -> Arc<DVector<f64>> {
        let mut adj = sol.adjoints.lock().expect("adjoint lock");
        if let Some(p) = &adj[i] {
            return p.clone();
        }
        let p = if self.cost.objectives[i].sigma_omega == 0.0 {
            DVector::zeros(self.fom.n_dofs())
        } else {
            SolveCounters::bump(&self.counters.adjoint_solves, 1);
            sol.factor.solve(&self.adjoint_rhs(i, &sol.state))
        };
        let p = Arc::new(p);
        adj[i] = Some(p.clone());
        p
    }

    pub fn solve_adjoint(&self, u: &DVector<f64>, i: usize) -> Result<DVector<f64>> {
        let sol = self.solution(u)?;
        Ok((*self.adjoint(&sol, i)).clone())
    }

    /// `||y - y_omega||_H^2` computed from the preassembled terms.
    pub fn state_misfit_sq(&self, i: usize, y: &DVector<f64>) -> f64 {
        let my = self.fom.mass_apply(y);
        (y.dot(&my) - 2.0 * self.desired[i].dot(y) + self.desired_sq[i]).max(0.0)
    }

    fn parameter_term(&self, i: usize, u: &DVector<f64>) -> f64 {
        let o = &self.cost.objectives[i];
        let ud = DVector::from_column_slice(&o.u_d);
        0.5 * o.sigma_u * (u - ud).norm_squared()
    }

    pub fn cost_from_state(&self, i: usize, u: &DVector<f64>, y: &DVector<f64>) -> f64 {
        let o = &self.cost.objectives[i];
        let track = if o.sigma_omega == 0.0 { 0.0 } else { 0.5 * o.sigma_omega * self.state_misfit_sq(i, y) };
        track + self.parameter_term(i, u)
    }

    pub fn eval_cost(&self, u: &DVector<f64>, i: usize) -> Result<f64> {
        let o = &self.cost.objectives[i];
        if o.sigma_omega == 0.0 {
            check_len(self.fom.n_params(), u.len())?;
            return Ok(self.parameter_term(i, u));
        }
        let sol = self.solution(u)?;
        Ok(self.cost_from_state(i, u, &sol.state))
    }

    pub fn gradient_from(&self, i: usize, u: &DVector<f64>, y: &DVector<f64>, p: &DVector<f64>) -> DVector<f64> {
        let o = &self.cost.objectives[i];
        let ud = DVector::from_column_slice(&o.u_d);
        (u - ud) * o.sigma_u - self.fom.partial_u_a(y, p)
    }

    pub fn eval_gradient(&self, u: &DVector<f64>, i: usize) -> Result<DVector<f64>> {
        let o = &self.cost.objectives[i];
        if o.sigma_omega == 0.0 {
            check_len(self.fom.n_params(), u.len())?;
            return Ok((u - DVector::from_column_slice(&o.u_d)) * o.sigma_u);
        }
        let sol = self.solution(u)?;
        let p = self.adjoint(&sol, i);
        Ok(self.gradient_from(i, u, &sol.state, &p))
    }

    /// `S'(u) h`.
    pub fn state_sensitivity(&self, u: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        let sol = self.solution(u)?;
        Ok(self.sensitivity_with(&sol, h))
    }

    fn sensitivity_with(&self, sol: &FullSolution, h: &DVector<f64>) -> DVector<f64> {
        if h.iter().all(|v| *v == 0.0) {
            return DVector::zeros(self.fom.n_dofs());
        }
        SolveCounters::bump(&self.counters.sensitivity_solves, 1);
        -sol.factor.solve(&self.fom.apply_derivative(h, &sol.state))
    }

    /// `S''(u)(h1, h2)`.
    pub fn second_state_sensitivity(&self, u: &DVector<f64>, h1: &DVector<f64>, h2: &DVector<f64>) -> Result<DVector<f64>> {
        let sol = self.solution(u)?;
        let y1 = self.sensitivity_with(&sol, h1);
        let y2 = self.sensitivity_with(&sol, h2);
        let rhs = self.fom.apply_derivative(h2, &y1) + self.fom.apply_derivative(h1, &y2);
        SolveCounters::bump(&self.counters.sensitivity_solves, 1);
        Ok(-sol.factor.solve(&rhs))
    }

    pub fn eval_hessian_vec(&self, u: &DVector<f64>, i: usize, h: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.hess_vecs_impl(u, &[i], h)?.remove(0))
    }

    fn hess_vecs_impl(&self, u: &DVector<f64>, idx: &[usize], h: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        check_len(self.fom.n_params(), h.len())?;
        let needs_state = idx.iter().any(|&i| self.cost.objectives[i].sigma_omega != 0.0);
        if !needs_state {
            check_len(self.fom.n_params(), u.len())?;
            return Ok(idx.iter().map(|&i| h * self.cost.objectives[i].sigma_u).collect());
        }
        let sol = self.solution(u)?;
        let yh = self.sensitivity_with(&sol, h);
        let mut out = Vec::with_capacity(idx.len());
        for &i in idx {
            let o = &self.cost.objectives[i];
            if o.sigma_omega == 0.0 {
                out.push(h * o.sigma_u);
                continue;
            }
            let p = self.adjoint(&sol, i);
            let rhs = self.fom.mass_apply(&yh) * o.sigma_omega - self.fom.apply_derivative(h, &p);
            SolveCounters::bump(&self.counters.sensitivity_solves, 1);
            let ph = sol.factor.solve(&rhs);
            let v = h * o.sigma_u - self.fom.partial_u_a(&yh, &p) - self.fom.partial_u_a(&sol.state, &ph);
            out.push(v);
        }
        Ok(out)
    }
}

impl MultiObjective for PdeProblem {
    fn n_objectives(&self) -> usize {
        self.cost.objectives.len()
    }

    fn bounds(&self) -> &BoxBounds {
        &self.cost.bounds
    }

    fn values(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<f64>> {
        idx.iter().map(|&i| self.eval_cost(u, i)).collect()
    }

    fn gradients(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<DVector<f64>>> {
        idx.iter().map(|&i| self.eval_gradient(u, i)).collect()
    }

    fn hess_vecs(&self, u: &DVector<f64>, idx: &[usize], h: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
        self.hess_vecs_impl(u, idx, h)
    }

    fn value_bound(&self, i: usize) -> f64 {
        self.value_bounds[i]
    }

    fn full_solves(&self) -> usize {
        self.counters.full_solves()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::ModelData;
    use crate::fem::mesh::Mesh;
    use approx::assert_relative_eq;

    fn benchmark(n: usize) -> PdeProblem {
        let mesh = Mesh::unit_square(n, &[0.5]).unwrap();
        let data = ModelData {
            reaction: Field::Constant(1.0),
            source: Field::PerSubdomain(vec![2.76, -0.96, 0.51, -1.66]),
            ambient: Field::Constant(0.0),
            alpha: 0.0,
        };
        let fom = Arc::new(FullOrderModel::new(mesh, &data).unwrap());
        let eps = 0.002;
        let cost = CostSpec {
            objectives: vec![
                TrackingCost { sigma_omega: 1.0, sigma_u: eps, y_omega: Field::PerSubdomain(vec![1.0, 1.0, 0.0, 0.0]), u_d: vec![2.0, 0.0, 0.0, 0.0, 0.3] },
                TrackingCost { sigma_omega: 1.0, sigma_u: eps, y_omega: Field::PerSubdomain(vec![0.0, 0.0, 1.0, 1.0]), u_d: vec![2.0, 0.0, 0.0, 0.0, 0.3] },
                TrackingCost { sigma_omega: 0.0, sigma_u: 0.05, y_omega: Field::Constant(0.0), u_d: vec![2.0, 1.0, 1.0, 1.0, 0.3] },
            ],
            bounds: BoxBounds::from_slices(&[2.0, 0.1, 0.1, 0.1, 0.3], &[2.0, 4.0, 4.0, 4.0, 0.3]).unwrap(),
        };
        PdeProblem::new(fom, cost).unwrap()
    }

    #[test]
    fn parameter_only_objective() {
        let p = benchmark(4);
        let ud3 = DVector::from_column_slice(&[2.0, 1.0, 1.0, 1.0, 0.3]);
        assert_eq!(p.eval_cost(&ud3, 2).unwrap(), 0.0);
        let u = DVector::from_column_slice(&[2.0, 0.0, 0.0, 0.0, 0.3]);
        assert_relative_eq!(p.eval_cost(&u, 2).unwrap(), 0.075, epsilon = 1e-15);
        // zero diffusion is outside the coercive set
        assert!(p.eval_cost(&u, 0).is_err());
        let v = DVector::from_column_slice(&[2.0, 2.0, 0.5, 1.0, 0.3]);
        let g = p.eval_gradient(&v, 2).unwrap();
        assert_relative_eq!(g, (&v - &ud3) * 0.05, epsilon = 1e-15);
        assert_eq!(p.counters().full_solves(), 0);
    }

    #[test]
    fn adjoint_satisfies_its_equation() {
        let p = benchmark(6);
        let u = DVector::from_column_slice(&[2.0, 1.3, 0.4, 2.2, 0.3]);
        let y = p.solve_state(&u).unwrap();
        let adj = p.solve_adjoint(&u, 0).unwrap();
        let res = p.fom().apply_system(&u, &adj) - p.adjoint_rhs(0, &y);
        assert!(res.amax() < 1e-12);
        assert!(p.solve_adjoint(&u, 2).unwrap().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn cache_avoids_repeated_solves() {
        let p = benchmark(4);
        let u = DVector::from_column_slice(&[2.0, 1.0, 1.0, 1.0, 0.3]);
        p.eval_cost(&u, 0).unwrap();
        p.eval_gradient(&u, 0).unwrap();
        p.eval_gradient(&u, 0).unwrap();
        assert_eq!(p.counters().full_solves(), 2);
    }

    #[test]
    fn value_bound_dominates_samples() {
        let p = benchmark(4);
        for u in p.bounds().corners() {
            for i in 0..3 {
                assert!(p.eval_cost(&u, i).unwrap() <= p.value_bound(i));
            }
        }
    }
}
