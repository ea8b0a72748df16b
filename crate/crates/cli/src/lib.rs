//! File formats, reference devices, and orchestration behind the
//! `snailamp` command-line tool.
//!
//! The core crate works in SI units (rad/s, watts, henries); everything
//! user-facing here speaks the conventional units of the field instead
//! (GHz and MHz for ω/2π, pH, pF, dBm). The conversion boundary lives in
//! this crate only.

pub mod device;
pub mod grid;
pub mod manifest;
pub mod presets;
pub mod runner;

pub use device::{parse_device, parse_device_str, DeviceFile};
pub use grid::FluxGrid;
pub use manifest::RunManifest;
