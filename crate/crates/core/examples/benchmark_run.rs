//! The hierarchical method on the benchmark with the shipped configuration
//! at a coarser mesh and grid. Writes the archive, report and traces to
//! `target/benchmark-run`.

use std::path::Path;

use pareto_trrb::driver::{export, run_hierarchy, ExperimentConfig};

fn main() -> pareto_trrb::Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.config");
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.mesh.n_per_side = 16;
    cfg.psm.h = 0.04;
    let report = run_hierarchy(&cfg)?;
    println!("ideal point {:.6?}", report.ideal);
    for p in report.psps.iter().take(12) {
        println!(
            "{:?} z = {:.4?} t = {:+.5} solves {:>3} basis {:>2} {}",
            p.index_set,
            p.z,
            p.t,
            p.full_solves,
            p.basis_final,
            if p.converged { "" } else { "not converged" }
        );
    }
    let t = &report.totals;
    println!(
        "{} problems, {} archive points, {} full solves, average basis {:.1}, {:.1}s",
        t.psps,
        report.archive.len(),
        t.full_solves,
        t.average_final_dim,
        t.wall_time_s
    );
    let out = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../target/benchmark-run");
    let files = export(&report, &out, true)?;
    println!("wrote {} files to {}", files.len(), out.display());
    Ok(())
}
