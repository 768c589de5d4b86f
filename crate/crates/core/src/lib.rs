//! Spin-phonon models of trapped-ion chains: phonon modes, effective Ising
//! couplings, classical ground states, mean-field annealing and exact
//! diagonalization of the coupled spin-boson Hamiltonian.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod annealing;
pub mod classical;
pub mod couplings;
pub mod error;
pub mod expparams;
pub mod lattice;
pub mod ode;
pub mod quantum;
pub mod special;

pub use error::{Error, Result};
