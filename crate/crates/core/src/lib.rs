//! Paramagnetic current-density functionals on uniform grids.
//!
//! The crate validates density/current pairs, builds the determinantal
//! orbitals that reproduce a curl-free pair, evaluates the kinetic-energy,
//! Hartree and exchange functionals together with the inequalities that bound
//! them, solves one-particle magnetic lattice Hamiltonians, and samples the
//! Legendre transform over finite potential families.
//!
//! Units: the one-body Hamiltonian is `(i grad - A)^2 + v`, without a factor 1/2.

pub mod basis;
pub mod cli;
pub mod convex;
pub mod density;
pub mod det;
pub mod error;
pub mod fixtures;
pub mod functionals;
pub mod grid;
pub mod io;
pub mod plot;
pub mod solver;
pub mod value;

pub use error::{Error, Result};
pub use value::{Extended, InequalityAudit};
