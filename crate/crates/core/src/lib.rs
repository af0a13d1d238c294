//! Exact-diagonalization engine for a rotation sensor built from a few
//! interacting bosons in a rotating, weakly anisotropic 2D harmonic trap.
//!
//! Units: energies in ħω⊥, lengths in √(ħ/Mω⊥), frequencies in ω⊥, time in
//! 1/ω⊥, angular momentum in ħ.

pub mod basis;
pub mod cache;
pub mod cli;
pub mod config;
pub mod dynamics;
pub mod eigensolver;
pub mod error;
pub mod hamiltonian;
pub mod linalg;
pub mod metrology;
pub mod output;
pub mod quadrature;
pub mod selftest;
pub mod sparse;
pub mod spectrum;
pub mod states;

pub use error::{Error, Result};
