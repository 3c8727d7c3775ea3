//! Input-power sensitivity of NV-diamond broadband RF detectors.
//!
//! The crate is organised along the computation chain:
//!
//! * [`model`]: protocol, noise, optics and NV-ensemble parameters and the
//!   sensitivity formula chain (single NV, ensemble, figures of merit).
//! * [`concentrators`]: field-to-power ratios for coplanar waveguides and
//!   loop antennas, both as reference values and as sampled field maps.
//! * [`probe`]: probe-volume integration and grid-search optimisation.
//! * [`scaling`]: sweeps, asymptotic exponent fits and scaling-law tables.
//! * [`config`] and [`report`]: flat-file configuration and report bundles.
//!
//! All quantities are strict SI.

pub mod concentrators;
pub mod config;
mod error;
pub mod fmt;
pub mod model;
mod par;
pub mod probe;
pub mod report;
pub mod scaling;

pub use error::{NvError, Result};

/// Vacuum permeability, H/m.
pub const MU_0: f64 = 4.0e-7 * std::f64::consts::PI;

/// Electron gyromagnetic ratio, Hz/T.
pub const GAMMA_E: f64 = 28.0e9;
