//! Balanced-heterodyne detection of squeezed light.
//!
//! The crate computes floor-normalised photocurrent noise spectra of a
//! dual-local-oscillator heterodyne receiver analytically, checks them
//! against an independent stochastic time-domain simulation, and models the
//! coherent-modulation phase lock that holds the measured quadrature.

pub mod correlation;
pub mod error;
pub mod field;
pub mod lock;
pub mod report;
pub mod spectral;
pub mod stochastic;

pub use error::{Error, Result};
pub use num_complex::Complex64;
