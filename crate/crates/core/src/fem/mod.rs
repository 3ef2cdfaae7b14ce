//! P1 finite elements for the parametric diffusion-reaction equation.

pub mod assembly;
pub mod io;
pub mod mesh;
pub mod model;
pub mod problem;

pub use assembly::{assemble_components, Field, FomComponents, ModelData, SymPattern};
pub use mesh::{BoundaryEdge, Mesh};
pub use model::{Factor, FullOrderModel};
pub use problem::{CostSpec, FullSolution, PdeProblem, SolveCounters, TrackingCost};
