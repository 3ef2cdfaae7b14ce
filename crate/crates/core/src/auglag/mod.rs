//! Augmented Lagrangian treatment of the Pascoletti-Serafini problem
//!
//! `min t  s.t.  J_i(u) - z_i <= t r_i,  i in I`
//!
//! over `x = (u, t, s)` with slacks `s >= 0` turning the inequalities into
//! `c_i(x) = J_i(u) - z_i - t r_i + s_i = 0`. Each outer iteration minimizes
//!
//! `L_A(x; lambda, mu) = t + sum_i lambda_i c_i + mu / 2 sum_i c_i^2`
//!
//! over the box `X_ad = U_ad x [t_min, t_max] x [0, s_max]` and then updates
//! the multipliers.

pub mod rb;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::BoxBounds;
use crate::error::{check_len, Error, Result};
use crate::objective::MultiObjective;
use crate::trrb::{criticality, projected_newton, NewtonConfig, NewtonStop, SmoothProblem, TrStats, TraceEntry};

pub use rb::{RbLagrangian, RbSolver};

/// One scalarized subproblem: reference point `z` and direction `r`
/// restricted to the objectives in `index_set`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PsProblem {
    pub index_set: Vec<usize>,
    pub z: Vec<f64>,
    pub r: Vec<f64>,
    pub t_min: f64,
    pub t_max: f64,
}

/// Multiplier estimate and penalty.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlParams {
    pub lambda: Vec<f64>,
    pub mu: f64,
}

impl PsProblem {
    pub fn new(index_set: Vec<usize>, z: Vec<f64>, r: Vec<f64>, t_min: f64, t_max: f64) -> Result<Self> {
        check_len(index_set.len(), z.len())?;
        check_len(index_set.len(), r.len())?;
        if index_set.is_empty() {
            return Err(Error::InvalidInput("empty index set".into()));
        }
        if r.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::InvalidInput("direction entries must be positive".into()));
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("reference point must be finite".into()));
        }
        if !(t_min < t_max) {
            return Err(Error::InvalidInput(format!("need t_min < t_max, got [{t_min}, {t_max}]")));
        }
        Ok(Self { index_set, z, r, t_min, t_max })
    }

    /// `t_min = min_i (y_i - z_i) / r_i - 1` from lower bounds `y` (the
    /// ideal point) and `t_max = max_i (C_i - z_i) / r_i + 1` from upper
    /// bounds `C` of the objectives over the box; all restricted to `I`.
    pub fn with_value_bounds(index_set: Vec<usize>, z: Vec<f64>, r: Vec<f64>, lower: &[f64], upper: &[f64]) -> Result<Self> {
        check_len(index_set.len(), lower.len())?;
        check_len(index_set.len(), upper.len())?;
        let t_min = (0..z.len()).map(|i| (lower[i] - z[i]) / r[i]).fold(f64::INFINITY, f64::min) - 1.0;
        let t_max = (0..z.len()).map(|i| (upper[i] - z[i]) / r[i]).fold(f64::NEG_INFINITY, f64::max) + 1.0;
        Self::new(index_set, z, r, t_min, t_max)
    }

    pub fn len(&self) -> usize {
        self.index_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.index_set.is_empty()
    }

    pub fn x_dim(&self, n_params: usize) -> usize {
        n_params + 1 + self.len()
    }

    pub fn split(&self, x: &DVector<f64>) -> (DVector<f64>, f64, DVector<f64>) {
        let p = x.len() - 1 - self.len();
        (x.rows(0, p).into_owned(), x[p], x.rows(p + 1, self.len()).into_owned())
    }

    pub fn join(u: &DVector<f64>, t: f64, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(u.len() + 1 + s.len(), u.iter().copied().chain(std::iter::once(t)).chain(s.iter().copied()))
    }

    /// `c_i = J_i - z_i - t r_i + s_i` for the objective values `jv` on `I`.
    pub fn constraints(&self, jv: &[f64], t: f64, s: &DVector<f64>) -> Vec<f64> {
        (0..self.len()).map(|i| jv[i] - self.z[i] - t * self.r[i] + s[i]).collect()
    }

    /// Slack bounds `max(0, -lambda_i / mu + z_i + t_max r_i)`.
    pub fn s_max(&self, al: &AlParams) -> Vec<f64> {
        (0..self.len())
            .map(|i| (-al.lambda[i] / al.mu + self.z[i] + self.t_max * self.r[i]).max(0.0))
            .collect()
    }

    pub fn admissible_box(&self, u_bounds: &BoxBounds, al: &AlParams) -> BoxBounds {
        let lo = DVector::from_iterator(
            self.x_dim(u_bounds.dim()),
            u_bounds.lower().iter().copied().chain(std::iter::once(self.t_min)).chain(std::iter::repeat_n(0.0, self.len())),
        );
        let hi = DVector::from_iterator(
            self.x_dim(u_bounds.dim()),
            u_bounds.upper().iter().copied().chain(std::iter::once(self.t_max)).chain(self.s_max(al)),
        );
        BoxBounds::new(lo, hi).expect("admissible box is well ordered")
    }

    /// `C = t_min - sum_i lambda_i^2 / (2 mu)`, a lower bound of `L_A` on `X_ad`.
    pub fn lower_bound(&self, al: &AlParams) -> f64 {
        self.t_min - al.lambda.iter().map(|l| l * l).sum::<f64>() / (2.0 * al.mu)
    }

    /// `1 - C`: adding it makes `L_A >= 1` on `X_ad`.
    pub fn positivity_shift(&self, al: &AlParams) -> f64 {
        1.0 - self.lower_bound(al)
    }

    pub fn lagrangian(&self, al: &AlParams, jv: &[f64], x: &DVector<f64>) -> f64 {
        let (_, t, s) = self.split(x);
        let c = self.constraints(jv, t, &s);
        t + c.iter().zip(&al.lambda).map(|(ci, li)| li * ci + 0.5 * al.mu * ci * ci).sum::<f64>()
    }

    /// `(sum_i w_i grad J_i, 1 - sum_i w_i r_i, w)` with `w_i = lambda_i + mu c_i`.
    pub fn lagrangian_gradient(&self, al: &AlParams, jv: &[f64], grads: &[DVector<f64>], x: &DVector<f64>) -> DVector<f64> {
        let (u, t, s) = self.split(x);
        let c = self.constraints(jv, t, &s);
        let w: Vec<f64> = (0..self.len()).map(|i| al.lambda[i] + al.mu * c[i]).collect();
        let mut gu = DVector::zeros(u.len());
        for (wi, g) in w.iter().zip(grads) {
            gu.axpy(*wi, g, 1.0);
        }
        let gt = 1.0 - w.iter().zip(&self.r).map(|(wi, ri)| wi * ri).sum::<f64>();
        Self::join(&gu, gt, &DVector::from_vec(w))
    }

    /// Hessian of `L_A` applied to `h`, given the objective Hessian-vector
    /// products `hvs_i = Hess J_i h^u`.
    pub fn lagrangian_hess_vec(
        &self,
        al: &AlParams,
        jv: &[f64],
        grads: &[DVector<f64>],
        hvs: &[DVector<f64>],
        x: &DVector<f64>,
        h: &DVector<f64>,
    ) -> DVector<f64> {
        let (u, t, s) = self.split(x);
        let (hu, ht, hs) = self.split(h);
        let c = self.constraints(jv, t, &s);
        let mut ru = DVector::zeros(u.len());
        let mut rt = 0.0;
        let mut rs = DVector::zeros(self.len());
        for i in 0..self.len() {
            let dc = grads[i].dot(&hu) - self.r[i] * ht + hs[i];
            ru.axpy(al.lambda[i] + al.mu * c[i], &hvs[i], 1.0);
            ru.axpy(al.mu * dc, &grads[i], 1.0);
            rt -= al.mu * self.r[i] * dc;
            rs[i] = al.mu * dc;
        }
        Self::join(&ru, rt, &rs)
    }

    /// Start with the smallest feasible `t` for `u0` and slacks that close
    /// the constraints, projected onto `X_ad`.
    pub fn initial_point(&self, u0: &DVector<f64>, jv0: &[f64], bx: &BoxBounds) -> DVector<f64> {
        let t = (0..self.len()).map(|i| (jv0[i] - self.z[i]) / self.r[i]).fold(f64::NEG_INFINITY, f64::max);
        let t = t.clamp(self.t_min, self.t_max);
        let s = DVector::from_iterator(self.len(), (0..self.len()).map(|i| self.z[i] + t * self.r[i] - jv0[i]));
        bx.project(&Self::join(u0, t, &s))
    }

    /// `max_i (J_i - z_i) / r_i`, the scalarization at `jv`.
    pub fn scalarized(&self, jv: &[f64]) -> f64 {
        (0..self.len()).map(|i| (jv[i] - self.z[i]) / self.r[i]).fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AlConfig {
    pub tau_ec: f64,
    pub tau_foc: f64,
    pub mu0: f64,
    pub mu_growth: f64,
    pub mu_max: f64,
    pub lambda0: f64,
    /// `mu` grows unless `||c||` fell below this fraction of its last value.
    pub feasibility_decrease: f64,
    pub max_outer: usize,
    pub inner_tol0: f64,
    pub inner_tol_factor: f64,
}

impl Default for AlConfig {
    fn default() -> Self {
        Self {
            tau_ec: 1e-6,
            tau_foc: 1e-6,
            mu0: 10.0,
            mu_growth: 10.0,
            mu_max: 1e10,
            lambda0: 0.0,
            feasibility_decrease: 0.25,
            max_outer: 30,
            inner_tol0: 1e-3,
            inner_tol_factor: 0.1,
        }
    }
}

impl AlConfig {
    pub fn inner_tolerance(&self, outer: usize) -> f64 {
        (self.inner_tol0 * self.inner_tol_factor.powi(outer as i32)).max(self.tau_foc / 10.0)
    }
}

/// A box-constrained minimization of `L_A` for fixed multipliers.
pub struct Subproblem<'a> {
    pub ps: &'a PsProblem,
    pub al: &'a AlParams,
    pub bounds: &'a BoxBounds,
    pub tol: f64,
}

#[derive(Clone, Debug)]
pub struct InnerOutcome {
    pub x: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Populated by trust-region solvers.
    pub tr: Option<(TrStats, Vec<TraceEntry>)>,
}

/// Minimizes `L_A` for fixed multipliers from a start point.
pub trait InnerSolver {
    fn objectives(&self) -> &dyn MultiObjective;
    fn solve(&mut self, sub: &Subproblem, x0: &DVector<f64>) -> Result<InnerOutcome>;
}

/// `L_A` on top of full objective evaluations.
pub struct FullLagrangian<'a> {
    pub obj: &'a dyn MultiObjective,
    pub ps: &'a PsProblem,
    pub al: &'a AlParams,
    pub bounds: &'a BoxBounds,
    pub shift: f64,
}

impl SmoothProblem for FullLagrangian<'_> {
    fn bounds(&self) -> &BoxBounds {
        self.bounds
    }

    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        let (u, _, _) = self.ps.split(x);
        let jv = self.obj.values(&u, &self.ps.index_set)?;
        Ok(self.ps.lagrangian(self.al, &jv, x) + self.shift)
    }

    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        let (u, _, _) = self.ps.split(x);
        let jv = self.obj.values(&u, &self.ps.index_set)?;
        let g = self.obj.gradients(&u, &self.ps.index_set)?;
        Ok(self.ps.lagrangian_gradient(self.al, &jv, &g, x))
    }

    fn hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        let (u, _, _) = self.ps.split(x);
        let (hu, _, _) = self.ps.split(h);
        let jv = self.obj.values(&u, &self.ps.index_set)?;
        let g = self.obj.gradients(&u, &self.ps.index_set)?;
        let hv = self.obj.hess_vecs(&u, &self.ps.index_set, &hu)?;
        Ok(self.ps.lagrangian_hess_vec(self.al, &jv, &g, &hv, x, h))
    }
}

/// Projected Newton-CG on the full Lagrangian.
pub struct DirectSolver<'a> {
    pub obj: &'a dyn MultiObjective,
    pub newton: NewtonConfig,
}

impl<'a> DirectSolver<'a> {
    pub fn new(obj: &'a dyn MultiObjective) -> Self {
        Self { obj, newton: NewtonConfig::default() }
    }
}

impl InnerSolver for DirectSolver<'_> {
    fn objectives(&self) -> &dyn MultiObjective {
        self.obj
    }

    fn solve(&mut self, sub: &Subproblem, x0: &DVector<f64>) -> Result<InnerOutcome> {
        let f = FullLagrangian { obj: self.obj, ps: sub.ps, al: sub.al, bounds: sub.bounds, shift: sub.ps.positivity_shift(sub.al) };
        let cfg = NewtonConfig { tol: sub.tol, ..self.newton };
        let out = projected_newton(&f, x0, &cfg, None)?;
        Ok(InnerOutcome {
            x: out.x,
            iterations: out.iterations,
            converged: out.stop == NewtonStop::Converged,
            tr: None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OuterRecord {
    pub mu: f64,
    pub inner_tol: f64,
    pub inner_iterations: usize,
    pub inner_converged: bool,
    pub feasibility: f64,
    pub criticality: f64,
}

#[derive(Clone, Debug)]
pub struct AlResult {
    pub u: DVector<f64>,
    pub t: f64,
    pub s: DVector<f64>,
    pub al: AlParams,
    /// Full objective values on the index set at `u`.
    pub values: Vec<f64>,
    pub converged: bool,
    pub history: Vec<OuterRecord>,
    /// Trust-region statistics and traces of the inner solves, if any.
    pub inner: Vec<(TrStats, Vec<TraceEntry>)>,
}

impl AlResult {
    pub fn outer_iterations(&self) -> usize {
        self.history.len()
    }
}

/// Runs the multiplier method from `u0`.
pub fn outer_loop<S: InnerSolver + ?Sized>(ps: &PsProblem, solver: &mut S, u0: &DVector<f64>, cfg: &AlConfig) -> Result<AlResult> {
    let u_bounds = solver.objectives().bounds().clone();
    check_len(u_bounds.dim(), u0.len())?;
    let mut al = AlParams { lambda: vec![cfg.lambda0.max(0.0); ps.len()], mu: cfg.mu0 };
    let jv0 = solver.objectives().values(&u_bounds.project(u0), &ps.index_set)?;
    let mut x = ps.initial_point(&u_bounds.project(u0), &jv0, &ps.admissible_box(&u_bounds, &al));
    let mut history = Vec::new();
    let mut inner_traces = Vec::new();
    let mut last_feas = f64::INFINITY;
    let mut converged = false;
    let mut values = jv0;

    for outer in 0..cfg.max_outer {
        let bx = ps.admissible_box(&u_bounds, &al);
        x = bx.project(&x);
        let tol = cfg.inner_tolerance(outer);
        let inner = solver.solve(&Subproblem { ps, al: &al, bounds: &bx, tol }, &x)?;
        x = inner.x;
        let (u, t, s) = ps.split(&x);
        let obj = solver.objectives();
        values = obj.values(&u, &ps.index_set)?;
        let grads = obj.gradients(&u, &ps.index_set)?;
        let c = ps.constraints(&values, t, &s);
        let feas = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let crit = criticality(&bx, &x, &ps.lagrangian_gradient(&al, &values, &grads, &x));
        history.push(OuterRecord {
            mu: al.mu,
            inner_tol: tol,
            inner_iterations: inner.iterations,
            inner_converged: inner.converged,
            feasibility: feas,
            criticality: crit,
        });
        if let Some(tr) = inner.tr {
            inner_traces.push(tr);
        }
        log::debug!("outer {outer}: mu = {:.1e}, ||c|| = {feas:.3e}, crit = {crit:.3e}", al.mu);
        if feas < cfg.tau_ec && crit < cfg.tau_foc {
            converged = true;
            break;
        }
        for (l, ci) in al.lambda.iter_mut().zip(&c) {
            *l = (*l + al.mu * ci).max(0.0);
        }
        if feas > cfg.feasibility_decrease * last_feas {
            al.mu = (al.mu * cfg.mu_growth).min(cfg.mu_max);
        }
        last_feas = feas;
    }
    let (u, t, s) = ps.split(&x);
    Ok(AlResult { u, t, s, al, values, converged, history, inner: inner_traces })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::QuadraticObjectives;
    use proptest::prelude::*;

    /// Two smooth non-quadratic objectives on a 2-D box, for derivative checks.
    struct Wavy {
        b: BoxBounds,
    }

    impl MultiObjective for Wavy {
        fn n_objectives(&self) -> usize {
            2
        }
        fn bounds(&self) -> &BoxBounds {
            &self.b
        }
        fn values(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<f64>> {
            Ok(idx
                .iter()
                .map(|&i| if i == 0 { u[0].sin() + u[1] * u[1] + 2.0 } else { (u[0] * u[1]).cos() + 0.5 * u[0] * u[0] + 2.0 })
                .collect())
        }
        fn gradients(&self, u: &DVector<f64>, idx: &[usize]) -> Result<Vec<DVector<f64>>> {
            Ok(idx
                .iter()
                .map(|&i| {
                    if i == 0 {
                        DVector::from_column_slice(&[u[0].cos(), 2.0 * u[1]])
                    } else {
                        let s = (u[0] * u[1]).sin();
                        DVector::from_column_slice(&[-s * u[1] + u[0], -s * u[0]])
                    }
                })
                .collect())
        }
        fn hess_vecs(&self, u: &DVector<f64>, idx: &[usize], h: &DVector<f64>) -> Result<Vec<DVector<f64>>> {
            Ok(idx
                .iter()
                .map(|&i| {
                    if i == 0 {
                        DVector::from_column_slice(&[-u[0].sin() * h[0], 2.0 * h[1]])
                    } else {
                        let (p, s, c) = (u[0] * u[1], (u[0] * u[1]).sin(), (u[0] * u[1]).cos());
                        let h00 = -c * u[1] * u[1] + 1.0;
                        let h01 = -c * u[0] * u[1] - s;
                        let h11 = -c * u[0] * u[0];
                        let _ = p;
                        DVector::from_column_slice(&[h00 * h[0] + h01 * h[1], h01 * h[0] + h11 * h[1]])
                    }
                })
                .collect())
        }
        fn value_bound(&self, _: usize) -> f64 {
            10.0
        }
    }

    fn wavy() -> Wavy {
        Wavy { b: BoxBounds::from_slices(&[-2.0, -2.0], &[2.0, 2.0]).unwrap() }
    }

    fn ps2() -> PsProblem {
        PsProblem::new(vec![0, 1], vec![1.5, 1.8], vec![1.0, 1.0], -5.0, 10.0).unwrap()
    }

    #[test]
    fn constraint_examples() {
        let ps = PsProblem::new(vec![0], vec![2.0], vec![1.0], -1.0, 1.0).unwrap();
        assert_eq!(ps.constraints(&[2.0], 0.0, &DVector::zeros(1)), vec![0.0]);
        let t = 0.4;
        let s = DVector::from_element(1, t + 2.0 - 1.7);
        assert!(ps.constraints(&[1.7], t, &s)[0].abs() < 1e-15);
        // dc/dt = -r exactly
        let c0 = ps.constraints(&[1.0], 0.3, &DVector::zeros(1))[0];
        let c1 = ps.constraints(&[1.0], 0.8, &DVector::zeros(1))[0];
        assert!(((c1 - c0) / 0.5 + 1.0).abs() < 1e-14);
    }

    #[test]
    fn lagrangian_identities() {
        let ps = ps2();
        let al = AlParams { lambda: vec![0.0; 2], mu: 7.0 };
        // slacks that close both constraints
        let jv = [1.0, 2.0];
        let t = 0.3;
        let x = PsProblem::join(&DVector::zeros(2), t, &DVector::from_column_slice(&[1.5 + t - 1.0, 1.8 + t - 2.0]));
        let (_, _, s) = ps.split(&x);
        assert!(ps.constraints(&jv, t, &s).iter().all(|v| v.abs() < 1e-15));
        assert!((ps.lagrangian(&al, &jv, &x) - t).abs() < 1e-15);
        assert_eq!(ps.positivity_shift(&al), 1.0 - ps.t_min);
    }

    #[test]
    fn slack_partial_is_the_shifted_multiplier() {
        let ps = ps2();
        let al = AlParams { lambda: vec![0.4, 1.1], mu: 3.0 };
        let x = PsProblem::join(&DVector::from_column_slice(&[0.3, -0.2]), 0.5, &DVector::from_column_slice(&[0.2, 0.7]));
        let (u, t, s) = ps.split(&x);
        let obj = wavy();
        let jv = obj.values(&u, &[0, 1]).unwrap();
        let g = ps.lagrangian_gradient(&al, &jv, &obj.gradients(&u, &[0, 1]).unwrap(), &x);
        let c = ps.constraints(&jv, t, &s);
        for i in 0..2 {
            assert!((g[3 + i] - (al.lambda[i] + al.mu * c[i])).abs() < 1e-14);
        }
    }

    fn rand_x(seed: &[f64]) -> DVector<f64> {
        PsProblem::join(
            &DVector::from_column_slice(&[seed[0] * 1.8, seed[1] * 1.8]),
            seed[2] * 3.0,
            &DVector::from_column_slice(&[seed[3].abs() * 2.0, seed[4].abs() * 2.0]),
        )
    }

    proptest! {
        #[test]
        fn gradient_matches_finite_differences(seed in prop::collection::vec(-1.0..1.0f64, 7)) {
            let (obj, ps) = (wavy(), ps2());
            let al = AlParams { lambda: vec![seed[5].abs(), seed[6].abs()], mu: 5.0 };
            let bx = ps.admissible_box(obj.bounds(), &al);
            let f = FullLagrangian { obj: &obj, ps: &ps, al: &al, bounds: &bx, shift: 0.0 };
            let x = rand_x(&seed);
            let g = f.gradient(&x).unwrap();
            for j in 0..x.len() {
                let e = 1e-6;
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += e;
                xm[j] -= e;
                let fd = (f.value(&xp).unwrap() - f.value(&xm).unwrap()) / (2.0 * e);
                prop_assert!((fd - g[j]).abs() <= 1e-5 * (1.0 + g[j].abs()), "component {j}: fd {fd} vs {}", g[j]);
            }
        }

        #[test]
        fn hessian_is_symmetric_and_matches_gradient_differences(
            seed in prop::collection::vec(-1.0..1.0f64, 7),
            a in prop::collection::vec(-1.0..1.0f64, 5),
            b in prop::collection::vec(-1.0..1.0f64, 5),
        ) {
            let (obj, ps) = (wavy(), ps2());
            let al = AlParams { lambda: vec![seed[5].abs(), seed[6].abs()], mu: 5.0 };
            let bx = ps.admissible_box(obj.bounds(), &al);
            let f = FullLagrangian { obj: &obj, ps: &ps, al: &al, bounds: &bx, shift: 0.0 };
            let x = rand_x(&seed);
            let (a, b) = (DVector::from_vec(a), DVector::from_vec(b));
            let ha = f.hess_vec(&x, &a).unwrap();
            let hb = f.hess_vec(&x, &b).unwrap();
            prop_assert!((b.dot(&ha) - a.dot(&hb)).abs() <= 1e-10 * (1.0 + ha.norm() * b.norm()));
            let e = 1e-6;
            let fd = (f.gradient(&(&x + &a * e)).unwrap() - f.gradient(&(&x - &a * e)).unwrap()) / (2.0 * e);
            prop_assert!((&fd - &ha).norm() <= 1e-5 * (1.0 + ha.norm()));
        }

        #[test]
        fn lagrangian_is_bounded_below_and_completes_the_square(seed in prop::collection::vec(-1.0..1.0f64, 7)) {
            let (obj, ps) = (wavy(), ps2());
            let al = AlParams { lambda: vec![3.0 * seed[5].abs(), 3.0 * seed[6].abs()], mu: 0.5 + seed[0].abs() };
            let bx = ps.admissible_box(obj.bounds(), &al);
            let x = bx.project(&rand_x(&seed));
            let (u, t, s) = ps.split(&x);
            let jv = obj.values(&u, &[0, 1]).unwrap();
            let l = ps.lagrangian(&al, &jv, &x);
            prop_assert!(l >= ps.lower_bound(&al) - 1e-12);
            prop_assert!(l + ps.positivity_shift(&al) >= 1.0 - 1e-12);
            let c = ps.constraints(&jv, t, &s);
            let square = t + c.iter().zip(&al.lambda).map(|(ci, li)| 0.5 * al.mu * (ci + li / al.mu).powi(2) - li * li / (2.0 * al.mu)).sum::<f64>();
            prop_assert!((l - square).abs() < 1e-10 * (1.0 + l.abs()));
        }
    }

    #[test]
    fn single_objective_recovers_the_box_minimizer() {
        let b = BoxBounds::from_slices(&[-1.0, -1.0], &[1.0, 0.5]).unwrap();
        let obj = QuadraticObjectives::new(b, vec![DVector::from_column_slice(&[0.3, 0.9])], vec![2.0]).unwrap();
        let z = 0.05;
        let ps = PsProblem::with_value_bounds(vec![0], vec![z], vec![1.0], &[0.0], &[obj.value_bound(0)]).unwrap();
        let mut solver = DirectSolver::new(&obj);
        let res = outer_loop(&ps, &mut solver, &DVector::from_column_slice(&[-0.8, -0.8]), &AlConfig::default()).unwrap();
        assert!(res.converged, "{:?}", res.history);
        // direct box-constrained minimizer of J_1: clip the center
        assert!((res.u[0] - 0.3).abs() < 1e-5 && (res.u[1] - 0.5).abs() < 1e-5, "{}", res.u);
        let j = obj.values(&res.u, &[0]).unwrap()[0];
        assert!((j - 0.16).abs() < 1e-6);
        assert!((res.t - (j - z)).abs() < 1e-5);
        assert!(res.history.iter().all(|h| h.mu <= 1e10));
    }

    #[test]
    fn known_pareto_point_is_reproduced() {
        // on the segment between the two centers the weighted quadratics are
        // Pareto optimal; aim at one of those points from below
        let b = BoxBounds::from_slices(&[-2.0, -2.0], &[2.0, 2.0]).unwrap();
        let c0 = DVector::from_column_slice(&[-1.0, 0.0]);
        let c1 = DVector::from_column_slice(&[1.0, 0.5]);
        let obj = QuadraticObjectives::new(b, vec![c0.clone(), c1.clone()], vec![1.0, 1.0]).unwrap();
        let ubar = &c0 * 0.35 + &c1 * 0.65;
        let jbar = obj.values(&ubar, &[0, 1]).unwrap();
        let tbar = 0.2;
        let z = vec![jbar[0] - tbar, jbar[1] - tbar];
        let ps = PsProblem::with_value_bounds(vec![0, 1], z, vec![1.0, 1.0], &[0.0, 0.0], &[obj.value_bound(0), obj.value_bound(1)]).unwrap();
        let mut solver = DirectSolver::new(&obj);
        let res = outer_loop(&ps, &mut solver, &DVector::zeros(2), &AlConfig::default()).unwrap();
        assert!(res.converged);
        assert!((res.values[0] - jbar[0]).abs() < 1e-5 && (res.values[1] - jbar[1]).abs() < 1e-5, "{:?} vs {:?}", res.values, jbar);
        assert!((ps.scalarized(&res.values) - res.t).abs() <= 1e-6);
        assert!(res.s.iter().zip(ps.s_max(&res.al)).all(|(s, m)| *s >= 0.0 && *s <= m));
    }

    #[test]
    fn feasibility_decreases_from_an_infeasible_start() {
        let obj = wavy();
        let ps = ps2();
        let res = outer_loop(&ps, &mut DirectSolver::new(&obj), &DVector::from_column_slice(&[2.0, 2.0]), &AlConfig::default()).unwrap();
        assert!(res.converged);
        let f: Vec<f64> = res.history.iter().map(|h| h.feasibility).collect();
        assert!(f.last().unwrap() < &1e-6);
        assert!(f.first().unwrap() >= f.last().unwrap());
    }

    #[test]
    fn inner_tolerance_schedule() {
        let cfg = AlConfig::default();
        assert_eq!(cfg.inner_tolerance(0), 1e-3);
        assert!((cfg.inner_tolerance(2) - 1e-5).abs() < 1e-20);
        assert_eq!(cfg.inner_tolerance(10), 1e-7);
    }
}
