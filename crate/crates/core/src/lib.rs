pub mod auglag;
pub mod bounds;
pub mod driver;
pub mod error;
pub mod fem;
pub mod moo;
pub mod objective;
pub mod rb;
pub mod removal;
pub mod trrb;

pub use bounds::BoxBounds;
pub use error::{Error, Result};
pub use objective::{MultiObjective, QuadraticObjectives};
