//! Simulation and analysis of quenched, periodically driven, disordered Ising
//! chains used as analog Born machines.
//!
//! The crate is organised bottom-up:
//!
//! - [`spin_model`]: chain parameters, the static Hamiltonian, the drive operator
//!   and disorder sampling.
//! - [`propagator`]: single-period Floquet evolution (split-step or exact) and
//!   quasi-energy extraction.
//! - [`spectral`]: level-spacing ratios, surmise densities, eigenvector
//!   component statistics and histogram KL divergences.
//! - [`quench`]: multi-layer quench sequences, Porter-Thomas convergence,
//!   anti-concentration and temporal memory.
//! - [`generative`]: Boltzmann-machine targets, exact enumeration and datasets.
//! - [`trainer`]: sequential best-of-D training in Hilbert space.
//!
//! Basis convention used everywhere: bit `b_i = 0` is the `Z_i = +1` eigenstate
//! and the basis index is the big-endian integer `b_1 b_2 ... b_L`, so spin 1
//! is the most significant bit.

pub mod error;
pub mod generative;
pub mod propagator;
pub mod quench;
pub mod seed;
pub mod spectral;
pub mod spin_model;
pub mod trainer;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
