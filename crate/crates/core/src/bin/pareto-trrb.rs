use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use pareto_trrb::driver::{self, Backend, ExperimentConfig};
use pareto_trrb::fem::io::FomFile;
use pareto_trrb::moo::coverage;
use pareto_trrb::removal::Strategy;
use pareto_trrb::Result;

#[derive(Parser)]
#[command(name = "pareto-trrb", version, about = "Pareto fronts of PDE-constrained multi-objective problems")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the hierarchical method and write archive, report and traces.
    Run {
        #[arg(long, default_value = "configs/benchmark.config")]
        config: PathBuf,
        #[arg(long)]
        backend: Option<Backend>,
        #[arg(long)]
        removal: Option<Strategy>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Override the mesh resolution.
        #[arg(long)]
        n: Option<usize>,
        /// Override the reference grid spacing.
        #[arg(long)]
        h: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        traces: bool,
        /// Write the final reduced spaces as JSON.
        #[arg(long)]
        rb_checkpoint: Option<PathBuf>,
    },
    /// Evaluate all objectives on a parameter lattice and keep the non-dominated points.
    Oracle {
        #[arg(long, default_value = "configs/benchmark.config")]
        config: PathBuf,
        /// Lattice intervals per free parameter.
        #[arg(long)]
        density: usize,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value = "oracle.csv")]
        out: PathBuf,
    },
    /// Coverage of two fronts against each other.
    Compare {
        #[arg(long, num_args = 1)]
        front: Vec<PathBuf>,
    },
    /// Assemble the full-order model and write it as JSON.
    BuildFom {
        #[arg(long, default_value = "configs/benchmark.config")]
        config: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value = "fom.json")]
        out: PathBuf,
    },
}

fn load(path: &Path, n: Option<usize>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(n) = n {
        cfg.mesh.n_per_side = n;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run { config, backend, removal, jobs, n, h, out, traces, rb_checkpoint } => {
            let mut cfg = load(&config, n)?;
            if let Some(b) = backend {
                cfg.backend = b;
            }
            if let Some(r) = removal {
                cfg.removal.strategy = r;
            }
            if let Some(j) = jobs {
                cfg.jobs = j;
            }
            if let Some(h) = h {
                cfg.psm.h = h;
            }
            cfg.validate()?;
            let report = driver::run_hierarchy(&cfg)?;
            let t = &report.totals;
            println!(
                "{} points ({} problems, {} converged), {} full solves, average basis {:.1}, {:.1}s",
                report.archive.len(),
                t.psps,
                t.converged,
                t.full_solves,
                t.average_final_dim,
                t.wall_time_s
            );
            let dir = out.or(cfg.output.dir.clone().map(PathBuf::from));
            if let Some(dir) = dir {
                let files = driver::export(&report, &dir, traces || cfg.output.traces)?;
                cfg.save(&dir.join("config.toml"))?;
                println!("wrote {} files to {}", files.len() + 1, dir.display());
            }
            if let Some(path) = rb_checkpoint {
                driver::export::write_json(&report.spaces, &path)?;
                println!("wrote {} reduced spaces to {}", report.spaces.len(), path.display());
            }
        }
        Cmd::Oracle { config, density, n, jobs, out } => {
            let cfg = load(&config, n)?;
            let problem = cfg.build_problem()?;
            let front = driver::brute_force_front(&*problem, density, jobs)?;
            driver::write_oracle_csv(&front, &out)?;
            println!("{} of {} lattice points non-dominated, wrote {}", front.points.len(), front.evaluated, out.display());
        }
        Cmd::Compare { front } => {
            let [a, b] = front.as_slice() else {
                return Err(pareto_trrb::Error::InvalidInput("compare needs exactly two --front files".into()));
            };
            let fa = driver::read_front(a)?;
            let fb = driver::read_front(b)?;
            println!("cov(A covers B) = {:.6e}", coverage(&fa, &fb)?);
            println!("cov(B covers A) = {:.6e}", coverage(&fb, &fa)?);
        }
        Cmd::BuildFom { config, n, out } => {
            let cfg = load(&config, n)?;
            let fom = cfg.build_fom()?;
            FomFile::new(fom.mesh(), fom.components()).write(&out)?;
            println!("{} dofs, wrote {}", fom.n_dofs(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
