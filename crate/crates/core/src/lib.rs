pub mod analysis;
pub mod dispersion;
pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod scenarios;
pub mod spa;

pub use error::{Error, Result};
