//! Trust-region reduced basis optimization of a scalar cost over a box.
//!
//! The trust region is `{x : q(x) <= delta}` with `q = Delta / J^l`, the
//! relative a posteriori error of the reduced cost. Candidates come from a
//! projected Newton-CG solve warm-started at an approximate generalized
//! Cauchy (AGC) point, and are accepted by cheap sufficient/necessary tests on
//! the reduced model before falling back to full-order evaluations.

pub mod newton;

use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::bounds::BoxBounds;
use crate::error::Result;
pub use newton::{criticality, projected_newton, NewtonConfig, NewtonOutcome, NewtonStop, Region, SmoothProblem};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrConfig {
    pub delta0: f64,
    pub beta1: f64,
    pub eta_rho: f64,
    pub beta_bound: f64,
    pub tau_sub: f64,
    pub tau_foc: f64,
    pub kappa: f64,
    pub kappa_arm: f64,
    pub beta_q: f64,
    pub beta_grad: f64,
    pub tau_g: f64,
    pub tau_grad: f64,
    pub delta_min: f64,
    pub ell_max: usize,
    pub max_outer: usize,
    pub max_inner: usize,
    pub max_agc: usize,
}

impl Default for TrConfig {
    fn default() -> Self {
        Self {
            delta0: 0.1,
            beta1: 0.5,
            eta_rho: 0.75,
            beta_bound: 0.95,
            tau_sub: 1e-7,
            tau_foc: 1e-6,
            kappa: 0.5,
            kappa_arm: 1e-4,
            beta_q: 0.1,
            beta_grad: 0.5,
            tau_g: 0.1,
            tau_grad: 0.1,
            delta_min: 1e-6,
            ell_max: 100,
            max_outer: 100,
            max_inner: 200,
            max_agc: 60,
        }
    }
}

/// A full-order cost with a reduced surrogate that can be enriched.
pub trait TrModel {
    fn bounds(&self) -> &BoxBounds;
    fn reduced_value(&self, x: &DVector<f64>) -> Result<f64>;
    fn reduced_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn reduced_hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>>;
    /// Bound on `|J(x) - J^l(x)|`.
    fn estimate(&self, x: &DVector<f64>) -> Result<f64>;
    fn full_value(&self, x: &DVector<f64>) -> Result<f64>;
    fn full_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>>;
    fn enrich(&mut self, x: &DVector<f64>) -> Result<()>;
    fn basis_size(&self) -> usize;

    fn q(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(q_ratio(self.estimate(x)?, self.reduced_value(x)?))
    }
}

pub fn q_ratio(estimate: f64, value: f64) -> f64 {
    if estimate == 0.0 {
        0.0
    } else if value > 0.0 {
        estimate / value
    } else {
        f64::INFINITY
    }
}

/// `|a - b| / |b|` with `0/0 = 0`.
pub fn relative(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else if den == 0.0 {
        f64::INFINITY
    } else {
        num / den.abs()
    }
}

/// Actual over predicted decrease, with `rho = 1` for two vanishing
/// decreases and a clamp to `{0, 2}` for a vanishing prediction.
pub fn rho_ratio(full_old: f64, full_new: f64, red_old: f64, red_new: f64) -> f64 {
    let num = full_old - full_new;
    let den = red_old - red_new;
    if den.abs() < 1e-14 {
        if num.abs() < 1e-14 {
            1.0
        } else if num * den.signum() > 0.0 {
            2.0
        } else {
            0.0
        }
    } else {
        num / den
    }
}

struct ReducedView<'a, M: ?Sized>(&'a M);

impl<M: TrModel + ?Sized> SmoothProblem for ReducedView<'_, M> {
    fn bounds(&self) -> &BoxBounds {
        self.0.bounds()
    }
    fn value(&self, x: &DVector<f64>) -> Result<f64> {
        self.0.reduced_value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        self.0.reduced_gradient(x)
    }
    fn hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
        self.0.reduced_hess_vec(x, h)
    }
}

impl<M: TrModel + ?Sized> Region for ReducedView<'_, M> {
    fn q(&self, x: &DVector<f64>) -> Result<f64> {
        self.0.q(x)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AgcPoint {
    pub x: DVector<f64>,
    pub value: f64,
    pub alpha: usize,
}

/// `P(x - kappa^alpha d)` for the smallest `alpha` giving Armijo decrease
/// and `q <= delta`; `None` when no `alpha <= max_agc` qualifies.
pub fn agc_point<M: TrModel + ?Sized>(model: &M, x: &DVector<f64>, delta: f64, cfg: &TrConfig) -> Result<Option<AgcPoint>> {
    let bounds = model.bounds();
    let f0 = model.reduced_value(x)?;
    let d = model.reduced_gradient(x)?;
    let mut step = 1.0;
    for alpha in 0..=cfg.max_agc {
        let cand = bounds.project(&(x - &d * step));
        let value = model.reduced_value(&cand)?;
        let dist = (&cand - x).norm_squared();
        if value - f0 <= -cfg.kappa_arm / step * dist && model.q(&cand)? <= delta {
            return Ok(Some(AgcPoint { x: cand, value, alpha }));
        }
        step *= cfg.kappa;
    }
    Ok(None)
}

/// Whether an accepted step may skip enrichment, evaluated on the current model.
pub fn skip_enrichment_flag<M: TrModel + ?Sized>(
    model: &M,
    x: &DVector<f64>,
    delta_next: f64,
    full_gradient: &DVector<f64>,
    cfg: &TrConfig,
) -> Result<bool> {
    if model.q(x)? > cfg.beta_q * delta_next {
        return Ok(false);
    }
    let bounds = model.bounds();
    let red_grad = model.reduced_gradient(x)?;
    let g = criticality(bounds, x, full_gradient);
    let gl = criticality(bounds, x, &red_grad);
    if relative((g - gl).abs(), gl) > cfg.tau_g {
        return Ok(false);
    }
    let ratio = relative((&red_grad - full_gradient).norm(), red_grad.norm());
    Ok(ratio <= cfg.tau_grad.min(cfg.beta_grad * delta_next))
}

/// What a post-enrichment hook sees: the accepted iterate and the
/// quantities that justified its acceptance.
pub struct PostEnrichment<'a> {
    pub x: &'a DVector<f64>,
    pub delta: f64,
    pub agc_value_before: f64,
    pub full_value: f64,
    pub full_gradient: &'a DVector<f64>,
    pub cfg: &'a TrConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalSummary {
    pub strategy: String,
    pub examined: usize,
    pub removed: usize,
    pub readded: bool,
    pub trigger: Option<String>,
    pub dim_before: usize,
    pub dim_after: usize,
    pub audit: Option<RemovalAudit>,
}

/// Independent re-check of a removal: conditions holding on the returned
/// space and the projection error of the latest snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalAudit {
    pub violations: Vec<String>,
    pub snapshot_error: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Sufficient,
    Necessary,
    Full,
    AgcFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub iter: usize,
    pub delta: f64,
    pub branch: Branch,
    pub accepted: bool,
    pub enriched: bool,
    pub skipped: bool,
    pub q: f64,
    pub rho: Option<f64>,
    pub g: Option<f64>,
    pub dim: usize,
    pub agc_alpha: Option<usize>,
    pub newton: Option<NewtonStop>,
    pub reduced_value: f64,
    pub agc_value: f64,
    pub estimate: f64,
    pub full_value: Option<f64>,
    pub removal: Option<RemovalSummary>,
    /// Seconds since the start of the solve.
    pub elapsed_s: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrStats {
    pub iterations: usize,
    pub accepted: usize,
    pub rejected: usize,
    pub enrichments: usize,
    pub skips: usize,
    pub removed: usize,
    pub final_dim: usize,
}

#[derive(Clone, Debug)]
pub struct TrResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub criticality: Option<f64>,
    pub converged: bool,
    pub stats: TrStats,
    pub trace: Vec<TraceEntry>,
}

/// Runs the TR-RB iteration from `x0`. The model must already be initialized
/// at `x0`. `hook` runs after every enrichment at an accepted iterate and may
/// shrink the model.
pub fn optimize<M, H>(model: &mut M, x0: &DVector<f64>, cfg: &TrConfig, mut hook: H) -> Result<TrResult>
where
    M: TrModel,
    H: FnMut(&mut M, &PostEnrichment) -> Result<Option<RemovalSummary>>,
{
    let start = Instant::now();
    let mut x = model.bounds().project(x0);
    let mut delta = cfg.delta0;
    let mut skip_prev = false;
    let mut full_x = model.full_value(&x)?;
    let mut stats = TrStats::default();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut last_g = None;
    let newton_cfg = NewtonConfig { tol: cfg.tau_sub, max_iter: cfg.max_inner, ..NewtonConfig::default() };
    let mut agc_retry = false;

    for iter in 0..cfg.max_outer {
        stats.iterations = iter + 1;
        let red_x = model.reduced_value(&x)?;
        let agc = match agc_point(model, &x, delta, cfg)? {
            Some(a) => a,
            None => {
                trace.push(TraceEntry {
                    iter,
                    delta,
                    branch: Branch::AgcFailure,
                    accepted: false,
                    enriched: !agc_retry,
                    skipped: false,
                    q: model.q(&x)?,
                    rho: None,
                    g: None,
                    dim: model.basis_size(),
                    agc_alpha: None,
                    newton: None,
                    reduced_value: red_x,
                    agc_value: red_x,
                    estimate: model.estimate(&x)?,
                    full_value: None,
                    removal: None,
                    elapsed_s: start.elapsed().as_secs_f64(),
                });
                if agc_retry {
                    log::warn!("no AGC point found after enrichment at the current iterate");
                    break;
                }
                model.enrich(&x)?;
                stats.enrichments += 1;
                agc_retry = true;
                continue;
            }
        };
        agc_retry = false;
        let out = {
            let view = ReducedView(&*model);
            projected_newton(&view, &agc.x, &newton_cfg, Some((&view, delta, cfg.beta_bound)))?
        };
        let x_new = out.x.clone();
        let red_new = out.value;
        let est = model.estimate(&x_new)?;
        let mut entry = TraceEntry {
            iter,
            delta,
            branch: Branch::Full,
            accepted: false,
            enriched: false,
            skipped: false,
            q: q_ratio(est, red_new),
            rho: None,
            g: None,
            dim: model.basis_size(),
            agc_alpha: Some(agc.alpha),
            newton: Some(out.stop),
            reduced_value: red_new,
            agc_value: agc.value,
            estimate: est,
            full_value: None,
            removal: None,
            elapsed_s: start.elapsed().as_secs_f64(),
        };
        let forced = |delta: f64, skip_prev: bool| cfg.beta1 * delta <= cfg.delta_min || skip_prev;

        if red_new + est < agc.value {
            entry.branch = Branch::Sufficient;
            let full_new = model.full_value(&x_new)?;
            let grad_new = model.full_gradient(&x_new)?;
            let g = criticality(model.bounds(), &x_new, &grad_new);
            let rho = rho_ratio(full_x, full_new, red_x, red_new);
            entry.rho = Some(rho);
            entry.g = Some(g);
            entry.full_value = Some(full_new);
            entry.accepted = true;
            stats.accepted += 1;
            last_g = Some(g);
            if g <= cfg.tau_foc {
                x = x_new;
                full_x = full_new;
                converged = true;
                trace.push(entry);
                break;
            }
            if rho >= cfg.eta_rho {
                delta /= cfg.beta1;
            }
            let skip = skip_enrichment_flag(model, &x_new, delta, &grad_new, cfg)?;
            x = x_new;
            full_x = full_new;
            if skip {
                stats.skips += 1;
                entry.skipped = true;
            } else {
                model.enrich(&x)?;
                stats.enrichments += 1;
                entry.enriched = true;
                let ctx = PostEnrichment {
                    x: &x,
                    delta,
                    agc_value_before: agc.value,
                    full_value: full_x,
                    full_gradient: &grad_new,
                    cfg,
                };
                entry.removal = hook(model, &ctx)?;
            }
            skip_prev = skip;
        } else if red_new - est > agc.value {
            entry.branch = Branch::Necessary;
            if forced(delta, skip_prev) {
                model.enrich(&x_new)?;
                stats.enrichments += 1;
                entry.enriched = true;
                skip_prev = false;
            }
            stats.rejected += 1;
            delta *= cfg.beta1;
        } else {
            entry.branch = Branch::Full;
            let full_new = model.full_value(&x_new)?;
            let grad_new = model.full_gradient(&x_new)?;
            let g = criticality(model.bounds(), &x_new, &grad_new);
            let rho = rho_ratio(full_x, full_new, red_x, red_new);
            entry.rho = Some(rho);
            entry.g = Some(g);
            entry.full_value = Some(full_new);
            let delta_next = delta / cfg.beta1;
            if g <= cfg.tau_foc {
                entry.accepted = true;
                stats.accepted += 1;
                last_g = Some(g);
                x = x_new;
                full_x = full_new;
                converged = true;
                trace.push(entry);
                break;
            }
            let skip = skip_enrichment_flag(model, &x_new, delta_next, &grad_new, cfg)?;
            if skip && rho >= cfg.eta_rho {
                entry.accepted = true;
                entry.skipped = true;
                stats.accepted += 1;
                stats.skips += 1;
                last_g = Some(g);
                x = x_new;
                full_x = full_new;
                delta = delta_next;
                skip_prev = true;
            } else if full_new <= agc.value {
                entry.accepted = true;
                stats.accepted += 1;
                last_g = Some(g);
                x = x_new;
                full_x = full_new;
                if rho >= cfg.eta_rho {
                    delta = delta_next;
                }
                model.enrich(&x)?;
                stats.enrichments += 1;
                entry.enriched = true;
                let ctx = PostEnrichment {
                    x: &x,
                    delta,
                    agc_value_before: agc.value,
                    full_value: full_x,
                    full_gradient: &grad_new,
                    cfg,
                };
                entry.removal = hook(model, &ctx)?;
                skip_prev = false;
            } else {
                if forced(delta, skip_prev) {
                    model.enrich(&x_new)?;
                    stats.enrichments += 1;
                    entry.enriched = true;
                    skip_prev = false;
                }
                stats.rejected += 1;
                delta *= cfg.beta1;
            }
        }
        if let Some(r) = &entry.removal {
            stats.removed += r.removed;
        }
        entry.dim = model.basis_size();
        trace.push(entry);
    }
    stats.final_dim = model.basis_size();
    Ok(TrResult { x, value: full_x, criticality: last_g, converged, stats, trace })
}

/// A hook that never changes the model.
pub fn no_removal<M>(_: &mut M, _: &PostEnrichment) -> Result<Option<RemovalSummary>> {
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DMatrix;

    /// Exact model of a convex quadratic: the reduced and full costs agree.
    struct Exact {
        a: DMatrix<f64>,
        b: DVector<f64>,
        c: f64,
        bounds: BoxBounds,
        enrichments: usize,
    }

    impl TrModel for Exact {
        fn bounds(&self) -> &BoxBounds {
            &self.bounds
        }
        fn reduced_value(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(0.5 * x.dot(&(&self.a * x)) - self.b.dot(x) + self.c)
        }
        fn reduced_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(&self.a * x - &self.b)
        }
        fn reduced_hess_vec(&self, _: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(&self.a * h)
        }
        fn estimate(&self, _: &DVector<f64>) -> Result<f64> {
            Ok(0.0)
        }
        fn full_value(&self, x: &DVector<f64>) -> Result<f64> {
            self.reduced_value(x)
        }
        fn full_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            self.reduced_gradient(x)
        }
        fn enrich(&mut self, _: &DVector<f64>) -> Result<()> {
            self.enrichments += 1;
            Ok(())
        }
        fn basis_size(&self) -> usize {
            self.enrichments
        }
    }

    /// A scalar model `x^2 + 1` whose surrogate adds `e (x - x_k)^2` around the
    /// last enrichment point, with the matching estimator.
    struct Perturbed {
        bounds: BoxBounds,
        center: f64,
        e: f64,
        dim: usize,
    }

    impl TrModel for Perturbed {
        fn bounds(&self) -> &BoxBounds {
            &self.bounds
        }
        fn reduced_value(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(x[0] * x[0] + 1.0 + self.e * (x[0] - self.center).powi(2) * (x[0] - 3.0).powi(2) / 9.0)
        }
        fn reduced_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            let (a, b) = (x[0] - self.center, x[0] - 3.0);
            Ok(DVector::from_element(1, 2.0 * x[0] + self.e * (2.0 * a * b * b + 2.0 * a * a * b) / 9.0))
        }
        fn reduced_hess_vec(&self, x: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
            let eps = 1e-6;
            let gp = self.reduced_gradient(&DVector::from_element(1, x[0] + eps))?;
            let gm = self.reduced_gradient(&DVector::from_element(1, x[0] - eps))?;
            Ok((gp - gm) / (2.0 * eps) * h[0])
        }
        fn estimate(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(1.01 * self.e * (x[0] - self.center).powi(2) * (x[0] - 3.0).powi(2) / 9.0)
        }
        fn full_value(&self, x: &DVector<f64>) -> Result<f64> {
            Ok(x[0] * x[0] + 1.0)
        }
        fn full_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
            Ok(DVector::from_element(1, 2.0 * x[0]))
        }
        fn enrich(&mut self, x: &DVector<f64>) -> Result<()> {
            self.center = x[0];
            self.e *= 0.1;
            self.dim += 1;
            Ok(())
        }
        fn basis_size(&self) -> usize {
            self.dim
        }
    }

    #[test]
    fn exact_convex_model_converges_without_rejections() {
        let a = DMatrix::from_row_slice(3, 3, &[4.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 2.0]);
        let mut m = Exact {
            a,
            b: DVector::from_column_slice(&[1.0, -8.0, 3.0]),
            c: 20.0,
            bounds: BoxBounds::from_slices(&[-1.0, -1.0, -1.0], &[1.0, 1.0, 1.0]).unwrap(),
            enrichments: 1,
        };
        let res = optimize(&mut m, &DVector::from_column_slice(&[0.9, 0.9, -0.9]), &TrConfig::default(), no_removal).unwrap();
        assert!(res.converged);
        assert_eq!(res.stats.rejected, 0);
        let g = criticality(&m.bounds, &res.x, &m.full_gradient(&res.x).unwrap());
        assert!(g <= 1e-6);
    }

    #[test]
    fn inexact_model_converges_and_keeps_invariants() {
        let mut m = Perturbed { bounds: BoxBounds::from_slices(&[-4.0], &[4.0]).unwrap(), center: 3.5, e: 5.0, dim: 1 };
        let cfg = TrConfig::default();
        let res = optimize(&mut m, &DVector::from_element(1, 3.5), &cfg, no_removal).unwrap();
        assert!(res.converged, "{:?}", res.trace);
        assert!(res.x[0].abs() < 1e-5);
        let mut delta = cfg.delta0;
        for e in &res.trace {
            assert!((e.delta - delta).abs() < 1e-15 * delta);
            assert!(e.q <= e.delta * (1.0 + 1e-12) || e.branch == Branch::AgcFailure);
            let f = [delta, delta * cfg.beta1, delta / cfg.beta1];
            let next = res.trace.get(e.iter + 1).map(|n| n.delta);
            if let Some(n) = next {
                assert!(f.iter().any(|v| (v - n).abs() < 1e-15 * n), "radius jump {delta} -> {n}");
                delta = n;
            }
            if e.branch == Branch::Sufficient {
                // the acceptance chain J <= J^l + Delta < J^l(x_AGC)
                assert!(e.full_value.unwrap() <= e.reduced_value + e.estimate + 1e-14);
                assert!(e.reduced_value + e.estimate < e.agc_value);
            }
        }
    }

    #[test]
    fn agc_examples() {
        struct Sq {
            b: BoxBounds,
        }
        impl TrModel for Sq {
            fn bounds(&self) -> &BoxBounds {
                &self.b
            }
            fn reduced_value(&self, x: &DVector<f64>) -> Result<f64> {
                Ok(x[0] * x[0])
            }
            fn reduced_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(x * 2.0)
            }
            fn reduced_hess_vec(&self, _: &DVector<f64>, h: &DVector<f64>) -> Result<DVector<f64>> {
                Ok(h * 2.0)
            }
            fn estimate(&self, _: &DVector<f64>) -> Result<f64> {
                Ok(0.0)
            }
            fn full_value(&self, x: &DVector<f64>) -> Result<f64> {
                self.reduced_value(x)
            }
            fn full_gradient(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
                self.reduced_gradient(x)
            }
            fn enrich(&mut self, _: &DVector<f64>) -> Result<()> {
                Ok(())
            }
            fn basis_size(&self) -> usize {
                0
            }
        }
        let m = Sq { b: BoxBounds::from_slices(&[-10.0], &[10.0]).unwrap() };
        let cfg = TrConfig::default();
        // exhaustive oracle over alpha on the two printed inequalities
        let x = DVector::from_element(1, 1.0);
        let oracle = (0..=60usize)
            .find(|&a| {
                let s = 0.5f64.powi(a as i32);
                let c = (1.0 - s * 2.0f64).clamp(-10.0, 10.0);
                c * c - 1.0 <= -1e-4 / s * (c - 1.0).powi(2)
            })
            .unwrap();
        let agc = agc_point(&m, &x, 0.1, &cfg).unwrap().unwrap();
        assert_eq!(agc.alpha, oracle);
        assert!(agc.value <= 1.0);
        let zero = agc_point(&m, &DVector::zeros(1), 0.1, &cfg).unwrap().unwrap();
        assert_eq!(zero.alpha, 0);
        assert_eq!(zero.x[0], 0.0);
    }

    #[test]
    fn rho_conventions() {
        assert_eq!(rho_ratio(2.0, 1.0, 2.0, 1.0), 1.0);
        assert_eq!(rho_ratio(1.0, 1.0, 1.0, 1.0), 1.0);
        assert_eq!(rho_ratio(2.0, 1.0, 1.0, 1.0), 2.0);
        assert_eq!(rho_ratio(1.0, 2.0, 1.0, 1.0), 0.0);
        assert!((rho_ratio(3.0, 2.0, 3.0, 1.0) - 0.5).abs() < 1e-15);
    }
}
