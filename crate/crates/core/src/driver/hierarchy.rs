//! The hierarchical scalarization loop: individual minimizations first, then
//! every index set by increasing cardinality, each on a face-aligned grid of
//! reference points thinned by the redundancy filters.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Instant;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::config::{Backend, ExperimentConfig, PsmConfig};
use crate::auglag::rb::{RbLagrangian, RbSolver};
use crate::auglag::{outer_loop, AlConfig, AlParams, AlResult, DirectSolver, PsProblem};
use crate::error::{Error, Result};
use crate::fem::PdeProblem;
use crate::moo::{build_grid, ideal_point, interval_removal, is_redundant, non_dominated, shifted_ideal, GridPoint, UtzRecord};
use crate::objective::MultiObjective;
use crate::rb::{RbCheckpoint, RbSpace};
use crate::removal::{self, RemovalConfig, Strategy};
use crate::trrb::{NewtonConfig, RemovalSummary, TraceEntry, TrConfig, TrModel, TrStats};

/// What the scalarized problems are posed on.
#[derive(Clone)]
pub enum Model {
    Pde(Arc<PdeProblem>),
    /// Closed-form objectives; only the `fe` backend applies.
    Analytic(Arc<dyn MultiObjective>),
}

impl Model {
    pub fn objectives(&self) -> &dyn MultiObjective {
        match self {
            Model::Pde(p) => &**p,
            Model::Analytic(o) => &**o,
        }
    }

    pub fn k(&self) -> usize {
        self.objectives().n_objectives()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSettings {
    pub backend: Backend,
    pub psm: PsmConfig,
    pub removal: RemovalConfig,
    pub tr: TrConfig,
    pub al: AlConfig,
    pub newton: NewtonConfig,
    pub jobs: usize,
}

impl From<&ExperimentConfig> for RunSettings {
    fn from(c: &ExperimentConfig) -> Self {
        Self {
            backend: c.backend,
            psm: c.psm.clone(),
            removal: c.removal.clone(),
            tr: c.tr.clone(),
            al: c.al.clone(),
            newton: c.newton,
            jobs: c.jobs,
        }
    }
}

/// One scalarized problem and what it cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PspRecord {
    pub index_set: Vec<usize>,
    pub z: Vec<f64>,
    /// Face of the grid point, `None` for individual minimizations.
    pub face: Option<usize>,
    pub u: Vec<f64>,
    pub t: f64,
    /// All objectives at `u`.
    pub objectives: Vec<f64>,
    pub converged: bool,
    pub outer_iterations: usize,
    pub inner_iterations: usize,
    pub feasibility: f64,
    pub criticality: f64,
    /// Criticality at the end of the last trust-region solve.
    pub tr_criticality: Option<f64>,
    pub tr_converged: bool,
    pub full_solves: usize,
    pub enrichments: usize,
    pub skips: usize,
    pub removed: usize,
    pub basis_initial: usize,
    pub basis_final: usize,
    pub space_created: bool,
    pub pool_size: usize,
    pub removals: Vec<RemovalSummary>,
    pub wall_time_s: f64,
    #[serde(skip)]
    pub traces: Vec<(TrStats, Vec<TraceEntry>)>,
}

/// A point of the front approximation and the problem that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub psp: usize,
    pub index_set: Vec<usize>,
    pub z: Vec<f64>,
    pub t: f64,
    pub u: Vec<f64>,
    pub objectives: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndexSetRecord {
    pub index_set: Vec<usize>,
    pub nadir: Vec<f64>,
    pub grid_points: usize,
    pub redundant: usize,
    pub solved: usize,
    pub interval_removed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub index_set: Vec<usize>,
    pub z: Vec<f64>,
    pub error: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Totals {
    pub wall_time_s: f64,
    pub psps: usize,
    pub converged: usize,
    pub full_solves: usize,
    pub enrichments: usize,
    pub removed: usize,
    pub removal_calls: usize,
    pub average_final_dim: f64,
    pub max_final_dim: usize,
}

impl Totals {
    pub fn from_psps(psps: &[PspRecord], wall_time_s: f64) -> Self {
        let n = psps.len();
        Self {
            wall_time_s,
            psps: n,
            converged: psps.iter().filter(|p| p.converged).count(),
            full_solves: psps.iter().map(|p| p.full_solves).sum(),
            enrichments: psps.iter().map(|p| p.enrichments).sum(),
            removed: psps.iter().map(|p| p.removed).sum(),
            removal_calls: psps.iter().map(|p| p.removals.len()).sum(),
            average_final_dim: if n == 0 { 0.0 } else { psps.iter().map(|p| p.basis_final as f64).sum::<f64>() / n as f64 },
            max_final_dim: psps.iter().map(|p| p.basis_final).max().unwrap_or(0),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub backend: Backend,
    pub removal: Strategy,
    pub k: usize,
    pub h: f64,
    pub ideal: Vec<f64>,
    pub shifted_ideal: Vec<f64>,
    /// Individual minimizers, one per objective.
    pub minimizers: Vec<Vec<f64>>,
    pub psps: Vec<PspRecord>,
    /// The front approximation, filtered when requested.
    pub archive: Vec<ArchiveEntry>,
    pub unfiltered: usize,
    pub utz: Vec<UtzRecord>,
    pub index_sets: Vec<IndexSetRecord>,
    pub failures: Vec<Failure>,
    pub n_spaces: usize,
    /// Final reduced spaces of the pool, for checkpointing.
    #[serde(skip)]
    pub spaces: Vec<RbCheckpoint>,
    pub totals: Totals,
}

impl RunReport {
    pub fn front(&self) -> Vec<Vec<f64>> {
        self.archive.iter().map(|e| e.objectives.clone()).collect()
    }
}

/// A reduced space with a stable identity inside its pool.
#[derive(Clone)]
pub struct PoolSpace {
    pub id: usize,
    pub space: RbSpace,
}

#[derive(Clone, Default)]
pub struct Pool {
    pub spaces: Vec<PoolSpace>,
    next_id: usize,
}

impl Pool {
    fn push(&mut self, space: RbSpace) -> usize {
        let id = self.next_id;
        self.next_id += 1;
        self.spaces.push(PoolSpace { id, space });
        self.spaces.len() - 1
    }

    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.spaces.is_empty()
    }

    /// Folds the pools that independent tasks grew from `self`, in task
    /// order: the first task to change a space replaces it, later changes
    /// and new spaces are appended.
    fn merge(&self, results: Vec<Pool>) -> Pool {
        let mut out = self.clone();
        let mut replaced = vec![false; self.spaces.len()];
        for pool in results {
            for ps in pool.spaces {
                match self.spaces.iter().position(|b| b.id == ps.id) {
                    Some(pos) if same_space(&self.spaces[pos].space, &ps.space) => {}
                    Some(pos) if !replaced[pos] => {
                        replaced[pos] = true;
                        out.spaces[pos].space = ps.space;
                    }
                    _ => {
                        out.push(ps.space);
                    }
                }
            }
        }
        out
    }
}

fn same_space(a: &RbSpace, b: &RbSpace) -> bool {
    a.basis_ids() == b.basis_ids() && a.provenance().len() == b.provenance().len()
}

/// Picks the pool space with the smallest relative error estimate at the
/// start point among those with `q < beta_q delta0` and at most `ell_max`
/// basis functions; ties go to the older space. `None` if no space qualifies.
pub fn select_space<S>(
    pool: &[S],
    dim: impl Fn(&S) -> usize,
    q_at: impl Fn(&S) -> Result<f64>,
    tr: &TrConfig,
) -> Result<Option<usize>> {
    let mut best: Option<(usize, f64)> = None;
    for (i, s) in pool.iter().enumerate() {
        if dim(s) > tr.ell_max || dim(s) == 0 {
            continue;
        }
        let q = q_at(s)?;
        if !(q < tr.beta_q * tr.delta0) {
            continue;
        }
        if best.is_none_or(|(_, bq)| q < bq) {
            best = Some((i, q));
        }
    }
    Ok(best.map(|(i, _)| i))
}

struct Ctx<'a> {
    model: &'a Model,
    set: &'a RunSettings,
    k: usize,
}

struct PspInput {
    index_set: Vec<usize>,
    z: Vec<f64>,
    face: Option<usize>,
    lower: Vec<f64>,
    u0: DVector<f64>,
}

fn last_g(traces: &[(TrStats, Vec<TraceEntry>)]) -> Option<f64> {
    traces.last().and_then(|(_, tr)| tr.iter().rev().find_map(|e| e.g))
}

fn solve_psp(ctx: &Ctx, pool: &mut Pool, inp: PspInput) -> Result<PspRecord> {
    let start = Instant::now();
    let obj = ctx.model.objectives();
    let all: Vec<usize> = (0..ctx.k).collect();
    let upper: Vec<f64> = inp.index_set.iter().map(|&i| obj.value_bound(i)).collect();
    let r: Vec<f64> = inp.index_set.iter().map(|&i| ctx.set.psm.r[i]).collect();
    let ps = PsProblem::with_value_bounds(inp.index_set.clone(), inp.z.clone(), r, &inp.lower, &upper)?;
    let u0 = obj.bounds().project(&inp.u0);

    let (res, objectives, full_solves, basis, created, pool_size): (AlResult, Vec<f64>, usize, (usize, usize), bool, usize) =
        match (ctx.set.backend, ctx.model) {
            (Backend::Fe, Model::Pde(p)) => {
                let fork = p.fork();
                let mut solver = DirectSolver { obj: &fork, newton: ctx.set.newton };
                let res = outer_loop(&ps, &mut solver, &u0, &ctx.set.al)?;
                let jv = fork.values(&res.u, &all)?;
                (res, jv, fork.counters().full_solves(), (0, 0), false, 0)
            }
            (Backend::Fe, Model::Analytic(o)) => {
                let mut solver = DirectSolver { obj: &**o, newton: ctx.set.newton };
                let res = outer_loop(&ps, &mut solver, &u0, &ctx.set.al)?;
                let jv = o.values(&res.u, &all)?;
                (res, jv, 0, (0, 0), false, 0)
            }
            (_, Model::Analytic(_)) => {
                return Err(Error::InvalidInput("reduced-basis backends need a PDE model".into()));
            }
            (backend, Model::Pde(p)) => {
                let prob = Arc::new(p.fork());
                let al0 = AlParams { lambda: vec![ctx.set.al.lambda0.max(0.0); ps.len()], mu: ctx.set.al.mu0 };
                let bx0 = ps.admissible_box(prob.bounds(), &al0);
                let jv0 = prob.values(&u0, &ps.index_set)?;
                let x0 = ps.initial_point(&u0, &jv0, &bx0);
                let chosen = match backend {
                    Backend::RbCommon => (!pool.is_empty()).then_some(0),
                    _ => select_space(
                        &pool.spaces,
                        |s| s.space.dim(),
                        |s| {
                            let mut m = RbLagrangian::new(s.space.clone(), ps.clone());
                            m.set_multipliers(&al0, &bx0);
                            m.q(&x0)
                        },
                        &ctx.set.tr,
                    )?,
                };
                let created = chosen.is_none();
                let slot = match chosen {
                    Some(i) => i,
                    None => {
                        let mut s = RbSpace::new(prob.clone());
                        s.enrich(&u0, &all)?;
                        pool.push(s)
                    }
                };
                let mut space = std::mem::replace(&mut pool.spaces[slot].space, RbSpace::new(prob.clone()));
                space.set_problem(prob.clone())?;
                let dim0 = space.dim();
                let mut solver = RbSolver::new(space, ps.clone(), ctx.set.tr.clone(), removal::hook(ctx.set.removal.clone()));
                let res = outer_loop(&ps, &mut solver, &u0, &ctx.set.al);
                let space = solver.into_space();
                let dim1 = space.dim();
                pool.spaces[slot].space = space;
                let res = res?;
                let jv = prob.values(&res.u, &all)?;
                (res, jv, prob.counters().full_solves(), (dim0, dim1), created, pool.len())
            }
        };

    let removals: Vec<RemovalSummary> =
        res.inner.iter().flat_map(|(_, tr)| tr.iter().filter_map(|e| e.removal.clone())).collect();
    let last = res.history.last();
    Ok(PspRecord {
        index_set: inp.index_set,
        z: inp.z,
        face: inp.face,
        u: res.u.iter().copied().collect(),
        t: res.t,
        objectives,
        converged: res.converged,
        outer_iterations: res.history.len(),
        inner_iterations: res.history.iter().map(|h| h.inner_iterations).sum(),
        feasibility: last.map_or(f64::NAN, |h| h.feasibility),
        criticality: last.map_or(f64::NAN, |h| h.criticality),
        tr_criticality: last_g(&res.inner),
        tr_converged: last.is_some_and(|h| h.inner_converged),
        full_solves,
        enrichments: res.inner.iter().map(|(s, _)| s.enrichments).sum(),
        skips: res.inner.iter().map(|(s, _)| s.skips).sum(),
        removed: res.inner.iter().map(|(s, _)| s.removed).sum(),
        basis_initial: basis.0,
        basis_final: basis.1,
        space_created: created,
        pool_size,
        removals,
        wall_time_s: start.elapsed().as_secs_f64(),
        traces: res.inner,
    })
}

/// Runs `f` on every item with at most `jobs` threads; results keep item order.
fn run_tasks<T: Send, R: Send>(jobs: usize, items: Vec<T>, f: impl Fn(T) -> R + Sync) -> Vec<R> {
    if jobs <= 1 || items.len() <= 1 {
        return items.into_iter().map(f).collect();
    }
    let n = items.len();
    let slots: Vec<Mutex<Option<T>>> = items.into_iter().map(|t| Mutex::new(Some(t))).collect();
    let out: Vec<Mutex<Option<R>>> = (0..n).map(|_| Mutex::new(None)).collect();
    let next = AtomicUsize::new(0);
    std::thread::scope(|s| {
        for _ in 0..jobs.min(n) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= n {
                    break;
                }
                let item = slots[i].lock().expect("task slot").take().expect("task taken once");
                let r = f(item);
                *out[i].lock().expect("result slot") = Some(r);
            });
        }
    });
    out.into_iter().map(|m| m.into_inner().expect("result slot").expect("task ran")).collect()
}

/// All subsets of `0..k` with `size` elements, lexicographically.
pub fn index_sets(k: usize, size: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, k: usize, size: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == size {
            out.push(cur.clone());
            return;
        }
        for i in start..k {
            cur.push(i);
            rec(i + 1, k, size, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, k, size, &mut Vec::new(), &mut out);
    out
}

fn is_proper_subset(a: &[usize], b: &[usize]) -> bool {
    a.len() < b.len() && a.iter().all(|i| b.contains(i))
}

fn lex_cmp(a: &GridPoint, b: &GridPoint) -> std::cmp::Ordering {
    a.face.cmp(&b.face).then_with(|| {
        a.z.iter().zip(&b.z).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    })
}

struct TaskOut {
    psps: Vec<PspRecord>,
    utz: Vec<UtzRecord>,
    record: IndexSetRecord,
    failures: Vec<Failure>,
}

/// Everything an index-set task reads from the finished lower levels.
struct Lower<'a> {
    utz: &'a [UtzRecord],
    psps: &'a [PspRecord],
    archives: &'a BTreeMap<Vec<usize>, Vec<usize>>,
    minimizers: &'a [DVector<f64>],
    shifted: &'a [f64],
}

fn run_index_set(ctx: &Ctx, lower: &Lower, pool: &mut Pool, set: &[usize]) -> TaskOut {
    let psm = &ctx.set.psm;
    let members: Vec<usize> = {
        let mut v: Vec<usize> = lower
            .archives
            .iter()
            .filter(|(k, _)| is_proper_subset(k, set))
            .flat_map(|(_, ids)| ids.iter().copied())
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    };
    let nadir: Vec<f64> = set
        .iter()
        .map(|&i| members.iter().map(|&p| lower.psps[p].objectives[i]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let sh: Vec<f64> = set.iter().map(|&i| lower.shifted[i]).collect();
    let r: Vec<f64> = set.iter().map(|&i| psm.r[i]).collect();
    let tb: Vec<f64> = set.iter().map(|&i| psm.t_bar[i]).collect();
    let mut record = IndexSetRecord {
        index_set: set.to_vec(),
        nadir: nadir.clone(),
        grid_points: 0,
        redundant: 0,
        solved: 0,
        interval_removed: 0,
        failed: 0,
    };
    let mut out = TaskOut { psps: Vec::new(), utz: Vec::new(), record: record.clone(), failures: Vec::new() };
    let grid = match build_grid(psm.h, &sh, &nadir, &tb, &r) {
        Ok(g) => g,
        Err(e) => {
            out.failures.push(Failure { index_set: set.to_vec(), z: Vec::new(), error: e.to_string() });
            return out;
        }
    };
    record.grid_points = grid.len();
    let mut remaining: Vec<GridPoint> = grid.into_iter().filter(|p| !is_redundant(set, &p.z, &r, lower.utz)).collect();
    record.redundant = record.grid_points - remaining.len();
    remaining.sort_by(lex_cmp);
    log::info!("index set {set:?}: {} grid points, {} after redundancy filter", record.grid_points, remaining.len());

    while !remaining.is_empty() {
        let p = remaining.remove(0);
        let inp = PspInput {
            index_set: set.to_vec(),
            z: p.z.clone(),
            face: Some(p.face),
            lower: sh.clone(),
            u0: lower.minimizers[set[p.face]].clone(),
        };
        match solve_psp(ctx, pool, inp) {
            Ok(rec) if rec.converged => {
                let utz = UtzRecord {
                    index_set: set.to_vec(),
                    u: DVector::from_column_slice(&rec.u),
                    t: rec.t,
                    z: rec.z.clone(),
                    objectives: rec.objectives.clone(),
                };
                let implied = interval_removal(&mut remaining, &utz, &r);
                record.interval_removed += implied.len();
                record.solved += 1;
                out.utz.push(utz);
                out.utz.extend(implied);
                out.psps.push(rec);
            }
            Ok(rec) => {
                log::warn!("index set {set:?}, z = {:?}: not converged, point skipped", rec.z);
                record.failed += 1;
                out.failures.push(Failure { index_set: set.to_vec(), z: rec.z.clone(), error: "not converged".into() });
                out.psps.push(rec);
            }
            Err(e) => {
                log::warn!("index set {set:?}, z = {:?}: {e}", p.z);
                record.failed += 1;
                out.failures.push(Failure { index_set: set.to_vec(), z: p.z, error: e.to_string() });
            }
        }
    }
    out.record = record;
    out
}

/// Runs one level of independent tasks, threading or cloning the space pool
/// according to the backend.
fn run_level<T: Send>(
    ctx: &Ctx,
    pool: &mut Pool,
    items: Vec<T>,
    f: impl Fn(&mut Pool, T) -> TaskOut + Sync,
) -> Vec<TaskOut> {
    match ctx.set.backend {
        Backend::RbCommon => items.into_iter().map(|it| f(pool, it)).collect(),
        Backend::Fe => run_tasks(ctx.set.jobs, items, |it| f(&mut Pool::default(), it)),
        Backend::RbLocal => {
            let base = pool.clone();
            let res = run_tasks(ctx.set.jobs, items, |it| {
                let mut local = base.clone();
                let out = f(&mut local, it);
                (out, local)
            });
            let (outs, pools): (Vec<TaskOut>, Vec<Pool>) = res.into_iter().unzip();
            *pool = base.merge(pools);
            outs
        }
    }
}

/// The hierarchical method on `model` with the given settings.
pub fn run_hierarchy_on(model: &Model, set: &RunSettings) -> Result<RunReport> {
    let start = Instant::now();
    let k = model.k();
    for (name, len) in [("d_tilde", set.psm.d_tilde.len()), ("r", set.psm.r.len()), ("t_bar", set.psm.t_bar.len())] {
        if len != k {
            return Err(Error::Config(format!("{name} has {len} entries for {k} objectives")));
        }
    }
    if set.backend.is_rb() && matches!(model, Model::Analytic(_)) {
        return Err(Error::InvalidInput("reduced-basis backends need a PDE model".into()));
    }
    let ctx = Ctx { model, set, k };
    let bounds = model.objectives().bounds().clone();
    let mut pool = Pool::default();

    // individual minimizations as one-objective scalarizations with z = 0
    let mut starts = vec![bounds.midpoint()];
    if set.psm.corner_starts {
        starts.extend(bounds.corners());
    }
    let singles = run_level(&ctx, &mut pool, (0..k).collect(), |pool, j| {
        let mut out = TaskOut {
            record: IndexSetRecord {
                index_set: vec![j],
                nadir: Vec::new(),
                grid_points: 0,
                redundant: 0,
                solved: 0,
                interval_removed: 0,
                failed: 0,
            },
            psps: Vec::new(),
            utz: Vec::new(),
            failures: Vec::new(),
        };
        for u0 in &starts {
            let inp = PspInput { index_set: vec![j], z: vec![0.0], face: None, lower: vec![0.0], u0: u0.clone() };
            match solve_psp(&ctx, pool, inp) {
                Ok(rec) => {
                    if rec.converged {
                        out.record.solved += 1;
                    } else {
                        out.record.failed += 1;
                    }
                    out.psps.push(rec);
                }
                Err(e) => {
                    out.record.failed += 1;
                    out.failures.push(Failure { index_set: vec![j], z: vec![0.0], error: e.to_string() });
                }
            }
        }
        // best converged start first, falling back to the best unconverged one
        let key = |r: &PspRecord| (!r.converged, r.objectives[j]);
        if let Some(best) = (0..out.psps.len()).min_by(|&a, &b| key(&out.psps[a]).partial_cmp(&key(&out.psps[b])).expect("finite objectives")) {
            let rec = out.psps.remove(best);
            out.record.nadir = vec![rec.objectives[j]];
            out.psps.insert(0, rec);
        }
        out
    });
    let mut psps: Vec<PspRecord> = Vec::new();
    let mut failures = Vec::new();
    let mut index_set_records = Vec::new();
    let mut archives: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    let mut minimizers = Vec::new();
    let mut others = Vec::new();
    for (j, out) in singles.into_iter().enumerate() {
        let mut recs = out.psps.into_iter();
        let Some(rec) = recs.next() else {
            let msg = out.failures.first().map_or(String::new(), |f| f.error.clone());
            return Err(Error::InvalidInput(format!("minimization of objective {} failed: {msg}", j + 1)));
        };
        if !rec.converged {
            log::warn!("minimization of objective {} did not converge; using its last iterate", j + 1);
        }
        minimizers.push(DVector::from_column_slice(&rec.u));
        archives.insert(vec![j], vec![psps.len()]);
        psps.push(rec);
        others.extend(recs);
        failures.extend(out.failures);
        index_set_records.push(out.record);
    }
    let values: Vec<Vec<f64>> = psps.iter().map(|p| p.objectives.clone()).collect();
    let ideal = ideal_point(&values)?;
    psps.extend(others);
    let shifted = shifted_ideal(&ideal, &set.psm.d_tilde)?;
    let mut utz: Vec<UtzRecord> = (0..k)
        .map(|j| UtzRecord {
            index_set: vec![j],
            u: minimizers[j].clone(),
            t: set.psm.d_tilde[j],
            z: vec![shifted[j]],
            objectives: psps[j].objectives.clone(),
        })
        .collect();
    log::info!("ideal point {ideal:?}");

    for size in 2..=k {
        let sets = index_sets(k, size);
        let outs = {
            let lower = Lower { utz: &utz, psps: &psps, archives: &archives, minimizers: &minimizers, shifted: &shifted };
            run_level(&ctx, &mut pool, sets.clone(), |pool, s: Vec<usize>| run_index_set(&ctx, &lower, pool, &s))
        };
        for (s, out) in sets.into_iter().zip(outs) {
            let mut ids: Vec<usize> = archives
                .iter()
                .filter(|(key, _)| is_proper_subset(key, &s))
                .flat_map(|(_, v)| v.iter().copied())
                .collect();
            for rec in out.psps {
                if rec.converged {
                    ids.push(psps.len());
                }
                psps.push(rec);
            }
            ids.sort_unstable();
            ids.dedup();
            archives.insert(s, ids);
            utz.extend(out.utz);
            failures.extend(out.failures);
            index_set_records.push(out.record);
        }
    }

    let full: Vec<usize> = (0..k).collect();
    let members = archives.get(&full).cloned().unwrap_or_default();
    let mut archive: Vec<ArchiveEntry> = members
        .iter()
        .map(|&p| ArchiveEntry {
            psp: p,
            index_set: psps[p].index_set.clone(),
            z: psps[p].z.clone(),
            t: psps[p].t,
            u: psps[p].u.clone(),
            objectives: psps[p].objectives.clone(),
        })
        .collect();
    let unfiltered = archive.len();
    if set.psm.compute_pareto_front {
        let pts: Vec<Vec<f64>> = archive.iter().map(|e| e.objectives.clone()).collect();
        let keep = non_dominated(&pts);
        archive = keep.into_iter().map(|i| archive[i].clone()).collect();
    }
    let totals = Totals::from_psps(&psps, start.elapsed().as_secs_f64());
    log::info!(
        "{} problems, {} archive points, {} full solves, {:.1}s",
        totals.psps,
        archive.len(),
        totals.full_solves,
        totals.wall_time_s
    );
    Ok(RunReport {
        backend: set.backend,
        removal: set.removal.strategy,
        k,
        h: set.psm.h,
        ideal,
        shifted_ideal: shifted,
        minimizers: minimizers.iter().map(|m| m.iter().copied().collect()).collect(),
        psps,
        archive,
        unfiltered,
        utz,
        index_sets: index_set_records,
        failures,
        n_spaces: pool.len(),
        spaces: pool.spaces.iter().map(|s| s.space.checkpoint()).collect(),
        totals,
    })
}

/// Builds the benchmark problem of `cfg` and runs the hierarchy on it.
pub fn run_hierarchy(cfg: &ExperimentConfig) -> Result<RunReport> {
    let problem = cfg.build_problem()?;
    run_hierarchy_on(&Model::Pde(problem), &RunSettings::from(cfg))
}
