//! Simulation of quantum-state and entanglement transfer across a chain of
//! dipolar-coupled electron spins with two register qubits at its ends.

pub mod error;
pub mod hamiltonian;
pub mod lindblad;
pub mod observables;
pub mod ode;
pub mod protocols;
pub mod qstate;
pub mod spectral;

pub use error::{Error, Result};
