//! Heisenberg, oscillator and extended oscillator dictionaries over prime
//! fields, together with the Monte Carlo and exact combinatorial machinery used
//! to check their statistical restricted isometry and semicircle behaviour.
//!
//! Module map:
//!
//! - [`ffield`]: exact `F_p` / `F_{p²}` arithmetic and the character `ψ`.
//! - [`linalg`]: dense complex matrices, Jacobi eigensolver, Gram matrices.
//! - [`repn`]: Heisenberg, Weil and Heisenberg-Weil operators as `p x p` unitaries.
//! - [`dictionaries`]: the three dictionaries, coherence checks, binary file format.
//! - [`spectra`]: random supports, Gram spectra, tail and moment estimators.
//! - [`paths`]: closed-path classes, Dyck words and exact expectations.

pub mod dictionaries;
pub mod error;
pub mod ffield;
pub mod linalg;
pub mod paths;
pub mod repn;
pub mod spectra;

pub use error::{Error, Result};

/// Crate version, embedded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
