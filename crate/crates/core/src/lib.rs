//! Spin-wave analysis of the quantum Heisenberg ferromagnet.
//!
//! The crate evaluates the free-energy upper bound of the Holstein–Primakoff
//! magnon gas together with its first-order interaction correction, and checks
//! every ingredient against brute-force oracles: truncated Fock spaces, exact
//! diagonalization of the spin Hamiltonian and Wick contractions.

pub mod diagrams;
pub mod dispersion;
pub mod error;
pub mod fock;
pub mod format;
pub mod lattice;
pub mod linalg;
pub mod quadrature;
pub mod spin_ed;
pub mod spinwave;
pub mod sum;
pub mod tensor;
pub mod wick;

pub use error::{Error, Result};
pub use lattice::{Boundary, LatticeSpec, Momentum, Site};

/// Version string embedded in every exported file.
pub fn version() -> String {
    match option_env!("MAGNON_GIT_REV") {
        Some(rev) => format!("magnon {} ({rev})", env!("CARGO_PKG_VERSION")),
        None => format!("magnon {}", env!("CARGO_PKG_VERSION")),
    }
}
