//! Finite-dimensional operator-algebra workbench.
//!
//! Everything here works with dense complex matrices: von Neumann algebras
//! are `*`-closed unital subspaces of `M_d(ℂ)`, groups are finite abelian,
//! and Hilbert spaces are `ℂ^n`. The crate is `no_std` (it needs `alloc`);
//! file formats and the command-line front end live in the `sectorlab`
//! crate.
//!
//! Module map:
//! - [`groups`]: finite abelian groups, characters, Fourier transform.
//! - [`vna`]: commutants, generated algebras, centers, sectors, MASAs.
//! - [`kt`]: multiplicative unitaries `V`, `V′`, `W` and spectral couplings.
//! - [`measure`]: instruments, post-measurement states, perfect correlation.
//! - [`crossed`]: crossed products, dual actions, duality checks.
//! - [`dynsys`]: abelian dynamical systems, freeness, ergodicity, types.
//! - [`modular`]: standard forms, modular operators, Connes cocycles.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod crossed;
pub mod dynsys;
mod error;
pub mod groups;
pub mod kt;
pub mod linalg;
pub mod measure;
pub mod modular;
pub mod vna;

pub use error::{Error, ErrorKind, Result};

/// Numerical tolerance and RNG seed threaded through every computation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Config {
    /// Relative tolerance for rank, nullspace and membership decisions.
    pub tol: f64,
    /// Seed for generic elements and random sampling.
    pub seed: u64,
}

impl Default for Config {
    fn default() -> Self {
        Self { tol: 1e-9, seed: 0 }
    }
}

impl Config {
    pub fn with_tol(tol: f64) -> Self {
        Self { tol, ..Self::default() }
    }
}
