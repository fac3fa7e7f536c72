//! Numerical laboratory for the t-W scheme of the spin-1/2 XXX chain.
//!
//! The crate builds the transfer matrices and fused transfer matrices of the
//! periodic and open chains, extracts their eigenvalue polynomials from exact
//! diagonalisation, solves the zero-root Bethe-ansatz equations and compares
//! finite chains against thermodynamic-limit closed forms.

pub mod baes;
pub mod chainops;
pub mod densecore;
pub mod error;
pub mod spectra;
pub mod thermo;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;

/// Shorthand for a complex literal.
#[inline]
pub fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Crate version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
