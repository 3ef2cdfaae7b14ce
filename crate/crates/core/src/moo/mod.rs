//! Multi-objective building blocks: dominance, reference points and front metrics.

pub mod dominance;
pub mod metrics;
pub mod reference;

pub use dominance::{dominates_strictly, dominates_weakly, non_dominated, ObjectiveVector};
pub use metrics::coverage;
pub use reference::{
    build_grid, ideal_point, interval_removal, is_redundant, lattice_count, project_to_d, scalarize, shifted_ideal, t_d,
    GridPoint, UtzRecord,
};
