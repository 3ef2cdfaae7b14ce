use std::path::{Path, PathBuf};
use std::process::Command;

use pareto_trrb::driver::{read_front, ExperimentConfig};
use pareto_trrb::fem::io::FomFile;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_pareto-trrb"))
}

fn config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/benchmark.config")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("pareto-trrb-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn run(cmd: &mut Command) -> String {
    let out = cmd.output().unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn run_oracle_and_compare() {
    let dir = scratch("run");
    let out = dir.join("run");
    let s = run(bin().args(["run", "--n", "8", "--h", "0.1", "--backend", "rb-local", "--removal", "t3", "--traces"]).arg("--config").arg(config()).arg("--out").arg(&out).arg("--rb-checkpoint").arg(dir.join("spaces.json")));
    assert!(s.contains("converged"), "{s}");
    let front = read_front(&out.join("archive.csv")).unwrap();
    assert!(front.len() >= 3 && front.iter().all(|y| y.len() == 3));
    // the saved configuration reproduces the overrides
    let saved = ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(saved.mesh.n_per_side, 8);
    assert_eq!(saved.psm.h, 0.1);
    let traces: Vec<_> = std::fs::read_dir(out.join("traces")).unwrap().collect();
    assert!(!traces.is_empty());
    let first = std::fs::read_to_string(traces[0].as_ref().unwrap().path()).unwrap();
    for line in first.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v.get("delta").is_some() && v.get("elapsed_s").is_some());
    }
    let spaces: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.join("spaces.json")).unwrap()).unwrap();
    assert!(!spaces.as_array().unwrap().is_empty());

    let oracle = dir.join("oracle.csv");
    let s = run(bin().args(["oracle", "--density", "4", "--n", "8"]).arg("--config").arg(config()).arg("--out").arg(&oracle));
    assert!(s.contains("of 125 lattice points"), "{s}");
    let s = run(bin().arg("compare").arg("--front").arg(out.join("archive.csv")).arg("--front").arg(&oracle));
    assert_eq!(s.lines().filter(|l| l.starts_with("cov(")).count(), 2);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn build_fom_writes_a_readable_model() {
    let dir = scratch("fom");
    let path = dir.join("fom.json");
    let s = run(bin().args(["build-fom", "--n", "6"]).arg("--config").arg(config()).arg("--out").arg(&path));
    assert!(s.starts_with("49 dofs"), "{s}");
    let (mesh, comps) = FomFile::read(&path).unwrap().into_parts().unwrap();
    assert_eq!(mesh.n_nodes(), 49);
    assert_eq!(comps.diffusion.len(), 4);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_input_is_reported() {
    let out = bin().args(["run", "--backend", "nonsense"]).output().unwrap();
    assert!(!out.status.success());
    let out = bin().arg("compare").arg("--front").arg("/nonexistent.csv").output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
}
