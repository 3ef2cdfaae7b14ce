//! Brute-force front on a parameter lattice compared with the hierarchical
//! front in both directions.

use pareto_trrb::driver::{brute_force_front, run_hierarchy, Backend, ExperimentConfig};
use pareto_trrb::moo::coverage;
use pareto_trrb::removal::{RemovalConfig, Strategy};

fn main() -> pareto_trrb::Result<()> {
    let mut cfg = ExperimentConfig::reduced_benchmark(12, 0.04);
    let p = cfg.build_problem()?;
    let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
    let oracle = brute_force_front(&*p, 12, jobs)?;
    println!("oracle: {} of {} lattice points non-dominated", oracle.points.len(), oracle.evaluated);
    cfg.backend = Backend::RbLocal;
    cfg.removal = RemovalConfig::with_strategy(Strategy::T3);
    let front = run_hierarchy(&cfg)?.front();
    println!("hierarchy: {} points", front.len());
    println!("cov(hierarchy covers oracle) = {:.4}", coverage(&front, &oracle.points)?);
    println!("cov(oracle covers hierarchy) = {:.4}", coverage(&oracle.points, &front)?);
    Ok(())
}
