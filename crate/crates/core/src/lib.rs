pub mod error;
pub mod flow;
pub mod io;
pub mod model;
pub mod pf;
pub mod mechanism;
pub mod rational;
pub mod sdm;
pub mod sw;
pub mod two_item;
pub mod verify;

pub use error::{Error, Result};
pub use mechanism::{Mechanism, MechanismKind};
pub use model::{Allocation, Instance, MechanismResult};
pub use pf::PfSolution;
pub use rational::Rational;
