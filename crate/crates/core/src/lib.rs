//! Design and simulation toolkit for SNAIL-based 3-wave-mixing parametric
//! amplifiers.
//!
//! The crate maps a physical device description (junction inductances, SNAIL
//! count, asymmetry, embedding resonator) to the phenomenological mode
//! parameters of a degenerate parametric amplifier (resonant frequency,
//! damping, third- and fourth-order nonlinearities, Stark shift per photon),
//! and predicts amplifier behavior under drive: small-signal gain, gain
//! compression, and intermodulation distortion.
//!
//! Organization:
//!
//! - [`snail`] — the flux-biased SNAIL element: potential, minima tracking,
//!   Taylor coefficients, linear inductance.
//! - [`circuit`] — embedding-circuit models (lumped series LC and distributed
//!   transmission line) producing [`circuit::ModeParameters`].
//! - [`hb`] — semiclassical harmonic-balance solver for pump/signal/idler
//!   amplitudes, gain, and pump calibration.
//! - [`duffing`] — single-tone driven steady states of the anharmonic mode
//!   and weak-probe linear response (used by the Stark-shift experiment).
//! - [`experiments`] — emulated measurement protocols: 1-dB compression,
//!   third-order intercept, Stark-shift spectroscopy, validity checks.
//! - [`design`] — constrained search over constitutive parameters against
//!   amplifier targets.
//!
//! All quantities are SI internally: frequencies and rates in rad/s, powers
//! in watts, inductances in henries. Conversions to the conventional /2π
//! units (GHz, MHz, dBm) belong to the caller.
//!
//! The crate is `no_std` compatible (with `alloc`); the default `std` feature
//! only switches the float math backend.
//!
//! # Quickstart
//!
//! ```
//! use snailamp_core::circuit::{self, DeviceSpec, ModelTag};
//! use snailamp_core::experiments::p1db;
//! use snailamp_core::hb::{calibrate_pump, HbOptions};
//! use core::f64::consts::PI;
//!
//! // A 20-SNAIL array in a λ/2 line, with a measured damping rate.
//! let mut spec = DeviceSpec::new(
//!     47e-12,              // L_J [H]
//!     20,                  // M
//!     0.09,                // α
//!     0.068e-12,           // C_c [F]
//!     2.0 * PI * 17.9e9,   // ω₀ [rad/s]
//!     45.0,                // Z_c [Ω]
//! ).unwrap();
//! spec.kappa_override = Some(vec![(0.0, 2.0 * PI * 105e6), (0.5, 2.0 * PI * 105e6)]);
//!
//! // Mode parameters at a flux bias, then a 20 dB operating point and
//! // its compression figure.
//! let mode = circuit::distributed_nonlinearities(&spec, 0.25).unwrap();
//! let op = calibrate_pump(&mode, 100.0, 1, &HbOptions::default()).unwrap();
//! let compression = p1db(&op, 1).unwrap();
//! let p1 = compression.p1db_dbm.unwrap();
//! assert!(p1 > -125.0 && p1 < -105.0, "P-1dB = {p1} dBm");
//! ```

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod circuit;
pub mod consts;
pub mod design;
pub mod duffing;
pub mod error;
pub mod experiments;
pub mod hb;
mod linalg;
pub mod roots;
pub mod snail;

pub use circuit::{DeviceSpec, LumpedEmbedding, ModeParameters, ModelTag};
pub use error::{Error, Result};
pub use snail::{SnailCoefficients, SnailParams};
