//! Geometry-based stochastic channel simulator for vehicular visible-light
//! links with two headlamps and one photodetector.
//!
//! The crate is organised bottom-up:
//!
//! * [`geometry`]: path lengths and departure/arrival coupling for the
//!   Tx-sphere, Rx-sphere and elliptic-cylinder scatterer surfaces, with a
//!   closed-form backend and an exact Cartesian backend.
//! * [`optics`]: Lambertian source, illuminance, effective area, lens gain.
//! * [`scatterfield`]: von Mises-Fisher scatterer density, equal-volume
//!   discretisation and sampling.
//! * [`cir`]: impulse-response components, DC gains and received power.
//! * [`noise_snr`]: receiver noise budget and SNR.
//! * [`scenario_io`]: scenario files, presets, sweeps and CSV output.
//! * [`oracle`]: brute-force verifiers (Monte Carlo, adaptive quadrature,
//!   geometry surveys).

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cir;
pub mod error;
pub mod geometry;
pub mod noise_snr;
pub mod optics;
pub mod oracle;
pub mod scatterfield;
pub mod scenario_io;

pub use error::{Error, Result};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;
