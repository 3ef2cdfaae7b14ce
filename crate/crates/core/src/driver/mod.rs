//! End-to-end runs: configuration, the hierarchical loop over index sets,
//! reference fronts and output files.

pub mod config;
pub mod export;
pub mod hierarchy;
pub mod oracle;

pub use config::{Backend, ExperimentConfig, MeshConfig, OutputConfig, PsmConfig};
pub use export::{export, read_front, write_archive_csv, write_oracle_csv};
pub use hierarchy::{
    index_sets, run_hierarchy, run_hierarchy_on, select_space, ArchiveEntry, Failure, IndexSetRecord, Model, PspRecord,
    RunReport, RunSettings, Totals,
};
pub use oracle::{brute_force_front, lattice, OracleFront};
