//! Basis-removal strategies on the reduced benchmark with one shared reduced
//! space and with locally selected spaces. Prints the average final basis
//! size, full solves and the front coverage against the full-order front.

use pareto_trrb::driver::{run_hierarchy, Backend, ExperimentConfig};
use pareto_trrb::moo::coverage;
use pareto_trrb::removal::{RemovalConfig, Strategy};

fn main() -> pareto_trrb::Result<()> {
    let base = ExperimentConfig::reduced_benchmark(12, 0.05);
    let mut fe = base.clone();
    fe.backend = Backend::Fe;
    let reference = run_hierarchy(&fe)?.front();
    println!("{:<10} {:<6} {:>8} {:>8} {:>8} {:>10}", "backend", "rule", "basis", "solves", "removed", "coverage");
    for backend in [Backend::RbCommon, Backend::RbLocal] {
        for s in [Strategy::None, Strategy::T1, Strategy::T2, Strategy::T2a, Strategy::T2b, Strategy::T3] {
            if backend == Backend::RbLocal && s == Strategy::T1 {
                continue;
            }
            let mut c = base.clone();
            c.backend = backend;
            c.removal = RemovalConfig::with_strategy(s);
            let r = run_hierarchy(&c)?;
            let t = &r.totals;
            println!(
                "{:<10} {:<6} {:>8.1} {:>8} {:>8} {:>10.2e}",
                backend.as_str(),
                s.as_str(),
                t.average_final_dim,
                t.full_solves,
                t.removed,
                coverage(&r.front(), &reference)?
            );
        }
    }
    Ok(())
}
