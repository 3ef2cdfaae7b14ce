//! One Pascoletti-Serafini problem of the benchmark solved twice: with full
//! finite-element solves and with the trust-region reduced-basis inner
//! solver. Prints the solutions, the solve counts and the inner trace.

use std::sync::Arc;

use pareto_trrb::auglag::rb::RbSolver;
use pareto_trrb::auglag::{outer_loop, DirectSolver, PsProblem};
use pareto_trrb::driver::ExperimentConfig;
use pareto_trrb::rb::RbSpace;
use pareto_trrb::MultiObjective;

fn main() -> pareto_trrb::Result<()> {
    let cfg = ExperimentConfig::reduced_benchmark(24, 0.05);
    let p = cfg.build_problem()?;
    let u0 = p.bounds().midpoint();
    let upper: Vec<f64> = (0..2).map(|i| p.value_bound(i)).collect();
    // the point of the (J1, J2) front closest to the origin along (1, 1)
    let ps = PsProblem::with_value_bounds(vec![0, 1], vec![0.0, 0.0], vec![1.0, 1.0], &[0.0, 0.0], &upper)?;

    let fe = p.fork();
    let mut direct = DirectSolver { obj: &fe, newton: cfg.newton };
    let a = outer_loop(&ps, &mut direct, &u0, &cfg.al)?;
    println!("fe     t = {:.8} u = {:.5?} full solves {}", a.t, a.u.as_slice(), fe.counters().full_solves());

    let rb = Arc::new(p.fork());
    let mut space = RbSpace::new(rb.clone());
    space.enrich(&u0, &[0, 1, 2])?;
    let mut solver = RbSolver::new(space, ps.clone(), cfg.tr.clone(), None);
    let b = outer_loop(&ps, &mut solver, &u0, &cfg.al)?;
    println!(
        "trrb   t = {:.8} u = {:.5?} full solves {} basis {}",
        b.t,
        b.u.as_slice(),
        rb.counters().full_solves(),
        solver.model().space().dim()
    );
    println!("|t_fe - t_rb| = {:.2e}", (a.t - b.t).abs());

    for (k, (stats, trace)) in b.inner.iter().enumerate() {
        println!("outer {k}: {} iterations, {} accepted, {} enrichments", stats.iterations, stats.accepted, stats.enrichments);
        for e in trace {
            let g = e.g.map_or("-".to_string(), |g| format!("{g:.1e}"));
            println!("   delta {:.2e} dim {:>2} accepted {:<5} reduced {:+.6e} g {g}", e.delta, e.dim, e.accepted, e.reduced_value);
        }
    }
    Ok(())
}
