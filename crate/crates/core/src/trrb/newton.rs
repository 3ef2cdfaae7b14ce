//! Projected Newton-CG for smooth functions on a box, optionally confined to
//! a trust region `{x : q(x) <= delta}`.

use nalgebra::DVector;

use crate::bounds::BoxBounds;
use crate::error::Result;

/// A twice differentiable function on a box.
pub trait SmoothProblem {
    fn bounds(&self) -> &BoxBounds;
    fn value(&self, x: &DVector<f64>) -> Result<f64>;
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>>;
}

/// Trust region given by a nonnegative indicator `q`.
pub trait Region {
    fn q(&self, x: &DVector<f64>) -> Result<f64>;
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(default)]
pub struct NewtonConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub armijo: f64,
    pub max_backtracks: usize,
    /// Width of the band around bounds treated as active.
    pub active_eps: f64,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: 1e-8, max_iter: 200, armijo: 1e-4, max_backtracks: 40, active_eps: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NewtonStop {
    Converged,
    Boundary,
    MaxIter,
    Stalled,
}

#[derive(Clone, Debug)]
pub struct NewtonOutcome {
    pub x: DVector<f64>,
    pub value: f64,
    pub criticality: f64,
    pub iterations: usize,
    pub hess_vecs: usize,
    pub stop: NewtonStop,
}

/// `||x - P(x - grad)||`.
pub fn criticality(bounds: &BoxBounds, x: &DVector<f64>, grad: &DVector<f64>) -> f64 {
    bounds.projected_gradient_norm(x, grad)
}

/// Steihaug CG for `H p = -g` restricted to `free`.
fn truncated_cg<P: SmoothProblem>(
    p: &P,
    x: &DVector<f64>,
    grad: &DVector<f64>,
    free: &[usize],
    hv_count: &mut usize,
) -> Result<DVector<f64>> {
    let n = x.len();
    let embed = |v: &DVector<f64>| {
        let mut full = DVector::zeros(n);
        for (a, &i) in free.iter().enumerate() {
            full[i] = v[a];
        }
        full
    };
    let g = DVector::from_iterator(free.len(), free.iter().map(|&i| grad[i]));
    let gnorm = g.norm();
    let mut sol = DVector::zeros(free.len());
    if gnorm == 0.0 {
        return Ok(embed(&sol));
    }
    let tol = gnorm * gnorm.sqrt().min(0.5);
    let mut r = -&g;
    let mut d = r.clone();
    let mut rr = r.norm_squared();
    for it in 0..(2 * free.len() + 5) {
        let hd_full = p.hess_vec(x, &embed(&d))?;
        *hv_count += 1;
        let hd = DVector::from_iterator(free.len(), free.iter().map(|&i| hd_full[i]));
        let curv = d.dot(&hd);
        if curv <= 1e-14 * d.norm_squared() {
            if it == 0 {
                sol = -&g;
            }
            break;
        }
        let a = rr / curv;
        sol.axpy(a, &d, 1.0);
        r.axpy(-a, &hd, 1.0);
        let rr_new = r.norm_squared();
        if rr_new.sqrt() <= tol {
            break;
        }
        d = &r + &d * (rr_new / rr);
        rr = rr_new;
    }
    Ok(embed(&sol))
}

/// Minimizes `p` over its box starting from `x0`. With a region, every
/// iterate keeps `q <= delta` and the method stops early once
/// `beta_bound delta <= q`.
pub fn projected_newton<P: SmoothProblem>(
    p: &P,
    x0: &DVector<f64>,
    cfg: &NewtonConfig,
    region: Option<(&dyn Region, f64, f64)>,
) -> Result<NewtonOutcome> {
    let bounds = p.bounds();
    let mut x = bounds.project(x0);
    let mut f = p.value(&x)?;
    let mut hess_vecs = 0;
    let inside = |y: &DVector<f64>| -> Result<(bool, bool)> {
        match region {
            None => Ok((true, false)),
            Some((r, delta, beta)) => {
                let q = r.q(y)?;
                Ok((q <= delta, q >= beta * delta && q <= delta))
            }
        }
    };
    for it in 0..cfg.max_iter {
        let grad = p.gradient(&x)?;
        let crit = criticality(bounds, &x, &grad);
        let done = |stop, hess_vecs| NewtonOutcome {
            x: x.clone(),
            value: f,
            criticality: crit,
            iterations: it,
            hess_vecs,
            stop,
        };
        if crit <= cfg.tol {
            return Ok(done(NewtonStop::Converged, hess_vecs));
        }
        if it > 0 && inside(&x)?.1 {
            return Ok(done(NewtonStop::Boundary, hess_vecs));
        }
        let eps = cfg.active_eps.min(crit);
        let lo = bounds.lower();
        let hi = bounds.upper();
        let free: Vec<usize> = (0..x.len())
            .filter(|&i| {
                let fixed = bounds.is_fixed(i);
                let at_lo = x[i] <= lo[i] + eps && grad[i] > 0.0;
                let at_hi = x[i] >= hi[i] - eps && grad[i] < 0.0;
                !(fixed || at_lo || at_hi)
            })
            .collect();
        let mut dir = truncated_cg(p, &x, &grad, &free, &mut hess_vecs)?;
        for i in 0..x.len() {
            if !free.contains(&i) {
                dir[i] = if bounds.is_fixed(i) { 0.0 } else { -grad[i] };
            }
        }
        let mut accepted = None;
        for attempt in 0..2 {
            if attempt == 1 {
                dir = -&grad;
            }
            let mut step = 1.0;
            for _ in 0..cfg.max_backtracks {
                let trial = bounds.project(&(&x + &dir * step));
                let slope = grad.dot(&(&trial - &x));
                if slope >= 0.0 {
                    if attempt == 0 && step == 1.0 {
                        break;
                    }
                    step *= 0.5;
                    continue;
                }
                let ft = p.value(&trial)?;
                if ft <= f + cfg.armijo * slope && inside(&trial)?.0 {
                    accepted = Some((trial, ft));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
        }
        match accepted {
            Some((xn, fnew)) => {
                x = xn;
                f = fnew;
            }
            None => return Ok(done(NewtonStop::Stalled, hess_vecs)),
        }
    }
    let grad = p.gradient(&x)?;
    Ok(NewtonOutcome {
        criticality: criticality(bounds, &x, &grad),
        x,
        value: f,
        iterations: cfg.max_iter,
        hess_vecs,
        stop: NewtonStop::MaxIter,
    })
}
