//! Experiment configuration, read from and written to TOML.

use std::fmt;
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::auglag::AlConfig;
use crate::bounds::BoxBounds;
use crate::error::{check_len, Error, Result};
use crate::fem::{CostSpec, Field, FullOrderModel, Mesh, ModelData, PdeProblem, TrackingCost};
use crate::removal::RemovalConfig;
use crate::trrb::{NewtonConfig, TrConfig};

/// How each scalarized problem is solved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Backend {
    /// Projected Newton on full-order evaluations.
    #[default]
    Fe,
    /// TR-RB with one space shared by every problem.
    RbCommon,
    /// TR-RB with a pool of spaces selected per problem.
    RbLocal,
}

impl Backend {
    pub const ALL: [Backend; 3] = [Backend::Fe, Backend::RbCommon, Backend::RbLocal];

    pub fn as_str(self) -> &'static str {
        match self {
            Backend::Fe => "fe",
            Backend::RbCommon => "rb-common",
            Backend::RbLocal => "rb-local",
        }
    }

    pub fn is_rb(self) -> bool {
        self != Backend::Fe
    }
}

impl fmt::Display for Backend {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Backend {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Backend::ALL
            .into_iter()
            .find(|b| b.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidInput(format!("unknown backend '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub n_per_side: usize,
    /// Interface coordinates on both axes.
    pub splits: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsmConfig {
    /// Reference grid spacing.
    pub h: f64,
    /// Shift of the ideal point, one entry per objective.
    pub d_tilde: Vec<f64>,
    /// Target direction, one entry per objective.
    pub r: Vec<f64>,
    /// Per-objective face offsets truncating the grid.
    pub t_bar: Vec<f64>,
    /// Drop dominated points from the final archive.
    pub compute_pareto_front: bool,
    /// Also start every individual minimization from each corner of the free
    /// box and keep the best result.
    #[serde(default)]
    pub corner_starts: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    /// Write one JSON trace per scalarized problem.
    pub traces: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mesh: MeshConfig,
    pub model: ModelData,
    pub objectives: Vec<TrackingCost>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub psm: PsmConfig,
    #[serde(default)]
    pub backend: Backend,
    #[serde(default)]
    pub removal: RemovalConfig,
    #[serde(default)]
    pub tr: TrConfig,
    #[serde(default)]
    pub al: AlConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    /// Seed for sampled parameters in diagnostics.
    #[serde(default)]
    pub seed: u64,
    /// Worker threads; 1 runs everything on the calling thread.
    #[serde(default = "one")]
    pub jobs: usize,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> usize {
    1
}

impl ExperimentConfig {
    /// The three-objective benchmark on the unit square with four subdomains.
    pub fn benchmark() -> Self {
        let ud = vec![2.0, 0.0, 0.0, 0.0, 0.3];
        let eps = 0.002;
        Self {
            mesh: MeshConfig { n_per_side: 36, splits: vec![0.5] },
            model: ModelData {
                reaction: Field::Constant(1.0),
                source: Field::PerSubdomain(vec![2.76, -0.96, 0.51, -1.66]),
                ambient: Field::Constant(0.0),
                alpha: 0.0,
            },
            objectives: vec![
                TrackingCost { sigma_omega: 1.0, sigma_u: eps, y_omega: Field::PerSubdomain(vec![1.0, 1.0, 0.0, 0.0]), u_d: ud.clone() },
                TrackingCost { sigma_omega: 1.0, sigma_u: eps, y_omega: Field::PerSubdomain(vec![0.0, 0.0, 1.0, 1.0]), u_d: ud },
                TrackingCost { sigma_omega: 0.0, sigma_u: 0.05, y_omega: Field::Constant(0.0), u_d: vec![2.0, 1.0, 1.0, 1.0, 0.3] },
            ],
            lower: vec![2.0, 0.1, 0.1, 0.1, 0.3],
            upper: vec![2.0, 4.0, 4.0, 4.0, 0.3],
            psm: PsmConfig {
                h: 0.003,
                d_tilde: vec![0.001; 3],
                r: vec![1.0; 3],
                t_bar: vec![0.0; 3],
                compute_pareto_front: true,
                corner_starts: true,
            },
            backend: Backend::RbLocal,
            removal: RemovalConfig::with_strategy(crate::removal::Strategy::T3),
            tr: TrConfig::default(),
            al: AlConfig::default(),
            newton: NewtonConfig::default(),
            seed: 0,
            jobs: 1,
            output: OutputConfig::default(),
        }
    }

    /// The benchmark on a coarser mesh and grid.
    pub fn reduced_benchmark(n_per_side: usize, h: f64) -> Self {
        let mut c = Self::benchmark();
        c.mesh.n_per_side = n_per_side;
        c.psm.h = h;
        c
    }

    pub fn k(&self) -> usize {
        self.objectives.len()
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if k == 0 {
            return Err(Error::Config("no objectives".into()));
        }
        check_len(k, self.psm.d_tilde.len())?;
        check_len(k, self.psm.r.len())?;
        check_len(k, self.psm.t_bar.len())?;
        check_len(self.lower.len(), self.upper.len())?;
        if !(self.psm.h > 0.0) {
            return Err(Error::Config(format!("grid size {} must be positive", self.psm.h)));
        }
        if self.psm.d_tilde.iter().chain(&self.psm.r).any(|v| !(*v > 0.0)) {
            return Err(Error::Config("d_tilde and r must be positive".into()));
        }
        if self.jobs == 0 {
            return Err(Error::Config("jobs must be at least 1".into()));
        }
        Ok(())
    }

    pub fn bounds(&self) -> Result<BoxBounds> {
        BoxBounds::from_slices(&self.lower, &self.upper)
    }

    pub fn build_fom(&self) -> Result<FullOrderModel> {
        let mesh = Mesh::unit_square(self.mesh.n_per_side, &self.mesh.splits)?;
        FullOrderModel::new(mesh, &self.model)
    }

    pub fn build_problem(&self) -> Result<Arc<PdeProblem>> {
        self.validate()?;
        self.problem_on(Arc::new(self.build_fom()?))
    }

    /// The costs of this configuration on an already assembled model.
    pub fn problem_on(&self, fom: Arc<FullOrderModel>) -> Result<Arc<PdeProblem>> {
        let cost = CostSpec { objectives: self.objectives.clone(), bounds: self.bounds()? };
        Ok(Arc::new(PdeProblem::new(fom, cost)?))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_toml(s: &str) -> Result<Self> {
        let c: Self = toml::from_str(s).map_err(|e| Error::Config(e.to_string()))?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()?)?;
        Ok(())
    }
}
