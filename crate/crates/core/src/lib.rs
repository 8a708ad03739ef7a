//! Exact diagonalization of the extended Bose-Hubbard model and the
//! collective-entanglement witness built from the momentum-mode occupation
//! R = b_q† b_q.
//!
//! The pipeline is: [`fock`] enumerates the fixed-N basis, [`model`] assembles
//! the Hamiltonian, [`solver`] finds the ground state, [`obs`] evaluates
//! observables on it, and [`sweep`] drives parameter scans and writes tables.

pub mod error;
pub mod fock;
pub mod model;
pub mod obs;
pub mod par;
pub mod solver;
pub mod sweep;

pub use error::{Error, Result};
pub use fock::{enumerate_basis, BasisTable, OccupationVector};
pub use model::{build_hamiltonian, Boundary, ModelParams, SparseHermitian};
pub use solver::{ground_state, lowest_k, solve, GroundState, SolverOptions};
