//! Shrinking the reduced basis right after an enrichment.
//!
//! Every basis function that predates the latest enrichment gets a score
//! `zeta_n`, the largest share `c_n^2 / sum_m c_m^2` it has in the Fourier
//! expansion of the newest snapshots; the functions that enrichment added are
//! never removed. `T1` drops everything scoring below a tolerance. The guarded
//! variants drop functions in ascending `zeta` order for as long as none of the
//! six conditions below holds on the reduced model without them, and keep the
//! function whose removal first triggers one:
//!
//! - (a) `q(x_prov) > beta_q delta`
//! - (b) relative gradient error at `x_prov` above `min(tau_grad, beta_grad delta)`
//! - (c) relative difference of reduced and full gradient at `x+` above the same
//! - (d) relative difference of `g` and `g^l` at `x+` above `tau_g`
//! - (e) `J^l(x+)` above the reduced value at the previous AGC point
//! - (f) `J^l(x_prov) - J(x+) > -kappa_arm ||x_prov - x+||^2`
//!
//! where `x_prov` is the AGC point at `x+` of the freshly enriched model. The
//! variants differ in the numerator of (b): the error estimator (`T2`), the
//! true error from full solves at `x_prov` (`T2a`), or the difference to the
//! enriched model (`T2b`). `T3` evaluates the conditions with their right-hand
//! sides lowered by fixed margins.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::auglag::RbLagrangian;
use crate::error::{Error, Result};
use crate::trrb::{agc_point, criticality, relative, PostEnrichment, RemovalAudit, RemovalSummary, TrModel};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    #[default]
    None,
    T1,
    T2,
    T2a,
    T2b,
    T3,
}

impl Strategy {
    pub const ALL: [Strategy; 6] = [Strategy::None, Strategy::T1, Strategy::T2, Strategy::T2a, Strategy::T2b, Strategy::T3];

    pub fn as_str(self) -> &'static str {
        match self {
            Strategy::None => "none",
            Strategy::T1 => "t1",
            Strategy::T2 => "t2",
            Strategy::T2a => "t2a",
            Strategy::T2b => "t2b",
            Strategy::T3 => "t3",
        }
    }

    pub fn is_guarded(self) -> bool {
        matches!(self, Strategy::T2 | Strategy::T2a | Strategy::T2b | Strategy::T3)
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|v| v.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown removal strategy '{s}'")))
    }
}

/// Which quantity measures the gradient error at `x_prov` in condition (b).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GradientCheck {
    Estimator,
    TrueError,
    Surrogate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemovalConfig {
    pub strategy: Strategy,
    pub fourier_tol: f64,
    /// Amounts subtracted from the right-hand sides of (a)-(f) under T3.
    pub t3_margins: [f64; 6],
    pub t3_gradient: GradientCheck,
    /// Re-check every guarded removal on the returned space.
    pub audit: bool,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::None,
            fourier_tol: 1e-6,
            t3_margins: [1e-6; 6],
            t3_gradient: GradientCheck::Surrogate,
            audit: false,
        }
    }
}

impl RemovalConfig {
    pub fn with_strategy(strategy: Strategy) -> Self {
        Self { strategy, ..Self::default() }
    }

    pub fn gradient_check(&self) -> GradientCheck {
        match self.strategy {
            Strategy::T2a => GradientCheck::TrueError,
            Strategy::T2b => GradientCheck::Surrogate,
            Strategy::T3 => self.t3_gradient,
            _ => GradientCheck::Estimator,
        }
    }

    pub fn margins(&self) -> [f64; 6] {
        if self.strategy == Strategy::T3 {
            self.t3_margins
        } else {
            [0.0; 6]
        }
    }
}

pub const CONDITION_NAMES: [&str; 6] = ["a", "b", "c", "d", "e", "f"];

/// Left- and right-hand sides of the six conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Conditions {
    pub lhs: [f64; 6],
    pub rhs: [f64; 6],
}

impl Conditions {
    /// Indices of the conditions that hold once `margins` are subtracted
    /// from the right-hand sides.
    pub fn holding(&self, margins: &[f64; 6]) -> Vec<usize> {
        (0..6).filter(|&i| !(self.lhs[i] <= self.rhs[i] - margins[i])).collect()
    }
}

/// Quantities fixed during one removal call.
pub struct Reference {
    pub x: DVector<f64>,
    pub prov: DVector<f64>,
    pub delta: f64,
    pub agc_value_before: f64,
    pub full_value: f64,
    pub full_gradient: DVector<f64>,
    pub beta_q: f64,
    pub tau_grad: f64,
    pub beta_grad: f64,
    pub tau_g: f64,
    pub kappa_arm: f64,
    /// Gradient that (b) compares against: full at `x_prov` for the true
    /// error, the enriched model's for the surrogate.
    pub prov_gradient: Option<DVector<f64>>,
}

impl Reference {
    /// Builds the reference at an accepted, just enriched iterate; `None`
    /// when the enriched model has no AGC point there.
    pub fn new(model: &RbLagrangian, ctx: &PostEnrichment, check: GradientCheck) -> Result<Option<Self>> {
        let prov = match agc_point(model, ctx.x, ctx.delta, ctx.cfg)? {
            Some(a) => a.x,
            None => return Ok(None),
        };
        let prov_gradient = match check {
            GradientCheck::Estimator => None,
            GradientCheck::TrueError => Some(model.full_gradient(&prov)?),
            GradientCheck::Surrogate => Some(model.reduced_gradient(&prov)?),
        };
        Ok(Some(Self {
            x: ctx.x.clone(),
            prov,
            delta: ctx.delta,
            agc_value_before: ctx.agc_value_before,
            full_value: ctx.full_value,
            full_gradient: ctx.full_gradient.clone(),
            beta_q: ctx.cfg.beta_q,
            tau_grad: ctx.cfg.tau_grad,
            beta_grad: ctx.cfg.beta_grad,
            tau_g: ctx.cfg.tau_g,
            kappa_arm: ctx.cfg.kappa_arm,
            prov_gradient,
        }))
    }

    pub fn evaluate(&self, model: &RbLagrangian) -> Result<Conditions> {
        let grad_tol = self.tau_grad.min(self.beta_grad * self.delta);
        let g_prov = model.reduced_gradient(&self.prov)?;
        let b_num = match &self.prov_gradient {
            None => model.gradient_estimate(&self.prov)?,
            Some(g) => (&g_prov - g).norm(),
        };
        let g_x = model.reduced_gradient(&self.x)?;
        let bounds = model.bounds();
        let crit_full = criticality(bounds, &self.x, &self.full_gradient);
        let crit_red = criticality(bounds, &self.x, &g_x);
        let step = (&self.prov - &self.x).norm_squared();
        Ok(Conditions {
            lhs: [
                model.q(&self.prov)?,
                relative(b_num, g_prov.norm()),
                relative((&g_x - &self.full_gradient).norm(), g_x.norm()),
                relative((crit_full - crit_red).abs(), crit_red),
                model.reduced_value(&self.x)?,
                model.reduced_value(&self.prov)? - self.full_value,
            ],
            rhs: [
                self.beta_q * self.delta,
                grad_tol,
                grad_tol,
                self.tau_g,
                self.agc_value_before,
                -self.kappa_arm * step,
            ],
        })
    }
}

/// Basis indices in removal order: ascending score, ties by index.
pub fn removal_order(zeta: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..zeta.len()).collect();
    order.sort_by(|&a, &b| zeta[a].total_cmp(&zeta[b]).then(a.cmp(&b)));
    order
}

/// Indices with `zeta < tol`.
pub fn t1_candidates(zeta: &[f64], tol: f64) -> Vec<usize> {
    (0..zeta.len()).filter(|&n| zeta[n] < tol).collect()
}

fn pruned(model: &RbLagrangian, removed: &[usize]) -> Result<RbLagrangian> {
    let mut m = model.clone();
    m.space_mut().remove_many(removed)?;
    Ok(m)
}

/// Applies the configured strategy after an enrichment at `ctx.x`.
pub fn apply(model: &mut RbLagrangian, ctx: &PostEnrichment, cfg: &RemovalConfig) -> Result<Option<RemovalSummary>> {
    let dim_before = model.basis_size();
    let zeta = model.space().zeta_scores();
    let mut summary = RemovalSummary {
        strategy: cfg.strategy.to_string(),
        examined: 0,
        removed: 0,
        readded: false,
        trigger: None,
        dim_before,
        dim_after: dim_before,
        audit: None,
    };
    let removed = match cfg.strategy {
        Strategy::None => return Ok(None),
        Strategy::T1 => {
            let c = t1_candidates(&zeta, cfg.fourier_tol);
            summary.examined = zeta.len();
            c
        }
        _ => {
            let Some(reference) = Reference::new(model, ctx, cfg.gradient_check())? else {
                summary.trigger = Some("agc".into());
                return Ok(Some(summary));
            };
            let margins = cfg.margins();
            let mut removed: Vec<usize> = Vec::new();
            for n in removal_order(&zeta).into_iter().filter(|&n| zeta[n].is_finite()) {
                summary.examined += 1;
                let mut trial = removed.clone();
                trial.push(n);
                let holding = reference.evaluate(&pruned(model, &trial)?)?.holding(&margins);
                if let Some(&first) = holding.first() {
                    summary.readded = true;
                    summary.trigger = Some(CONDITION_NAMES[first].into());
                    break;
                }
                removed = trial;
            }
            if cfg.audit {
                let returned = pruned(model, &removed)?;
                let violations = if removed.is_empty() {
                    Vec::new()
                } else {
                    reference.evaluate(&returned)?.holding(&margins).into_iter().map(|i| CONDITION_NAMES[i].to_string()).collect()
                };
                let (u, _, _) = returned.ps().split(ctx.x);
                summary.audit = Some(RemovalAudit { violations, snapshot_error: returned.snapshot_error(&u)? });
            }
            removed
        }
    };
    if !removed.is_empty() {
        model.space_mut().remove_many(&removed)?;
    }
    summary.removed = removed.len();
    summary.dim_after = model.basis_size();
    Ok(Some(summary))
}

/// A boxed hook for the inner solver running `apply` with `cfg`.
pub fn hook(cfg: RemovalConfig) -> Option<crate::auglag::rb::RemovalHook> {
    if cfg.strategy == Strategy::None {
        return None;
    }
    Some(Box::new(move |m: &mut RbLagrangian, ctx: &PostEnrichment| apply(m, ctx, &cfg)))
}
