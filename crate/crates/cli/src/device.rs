//! Device description files.
//!
//! JSON with unit-suffixed keys, so a file is unambiguous about what it
//! states:
//!
//! ```json
//! {
//!   "schema_version": "1",
//!   "device": {
//!     "L_J_pH": 47.0,
//!     "M": 20,
//!     "alpha": 0.09,
//!     "C_c_pF": 0.068,
//!     "omega0_GHz": 17.9,
//!     "Z_c_ohm": 45.0
//!   },
//!   "kappa_table": [[0.0, 105.0], [0.5, 105.0]],
//!   "metadata": { "label": "example" }
//! }
//! ```
//!
//! `kappa_table` rows are (Φ/Φ₀, κ/2π in MHz). Unknown fields are
//! rejected; known quantities spelled without their unit suffix are
//! rejected with a dedicated unit error rather than a generic one.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};
use snailamp_core::DeviceSpec;
use thiserror::Error;

/// Current schema version string.
pub const SCHEMA_VERSION: &str = "1";

/// Errors produced while reading a device file.
#[derive(Debug, Error)]
pub enum DeviceFileError {
    /// I/O failure.
    #[error("cannot read {path}: {source}")]
    Io {
        /// Offending path.
        path: String,
        /// Underlying error.
        source: std::io::Error,
    },
    /// Structural/JSON problem, with the field path when known.
    #[error("schema error at {path}: {detail}")]
    Schema {
        /// JSON pointer-ish location.
        path: String,
        /// What was wrong.
        detail: String,
    },
    /// A known quantity was written without its unit suffix.
    #[error("unit error: field '{found}' must be written as '{expected}' (value carries units)")]
    Unit {
        /// Key as found in the file.
        found: String,
        /// Key with the required unit suffix.
        expected: String,
    },
    /// The parsed values fail device validation.
    #[error("invalid device: {0}")]
    Invalid(#[from] snailamp_core::Error),
}

/// In-memory form of a device file (external units).
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DeviceFile {
    /// File format version.
    pub schema_version: String,
    /// Constitutive parameters with units as written.
    pub device: DeviceFields,
    /// Optional measured κ table as (Φ/Φ₀, κ/2π MHz) rows.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kappa_table: Option<Vec<(f64, f64)>>,
    /// Free-form labels.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// The `device` object, unit-suffixed.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[allow(non_snake_case)]
pub struct DeviceFields {
    /// Large-junction inductance [pH].
    pub L_J_pH: f64,
    /// SNAIL count.
    pub M: u32,
    /// Junction inductance ratio.
    pub alpha: f64,
    /// Coupling capacitance [pF].
    pub C_c_pF: f64,
    /// Bare λ/2 resonance, ω₀/2π [GHz].
    pub omega0_GHz: f64,
    /// Line characteristic impedance [Ω]; defaults to 45.
    #[serde(default = "default_z_c")]
    pub Z_c_ohm: f64,
    /// External impedance [Ω]; defaults to 50.
    #[serde(default = "default_z_0")]
    pub Z0_ohm: f64,
    /// g₃ calibration factor; defaults to 1.
    #[serde(default = "default_unity")]
    pub g3_scale: f64,
    /// Allow α > 1/3 despite hysteresis.
    #[serde(default)]
    pub allow_hysteretic: bool,
}

fn default_z_c() -> f64 {
    45.0
}

fn default_z_0() -> f64 {
    50.0
}

fn default_unity() -> f64 {
    1.0
}

/// (key with suffix, bare stem) pairs for unit-suffix checking.
const SUFFIXED_FIELDS: &[(&str, &str)] = &[
    ("L_J_pH", "L_J"),
    ("C_c_pF", "C_c"),
    ("omega0_GHz", "omega0"),
    ("Z_c_ohm", "Z_c"),
    ("Z0_ohm", "Z0"),
];

const UNSUFFIXED_FIELDS: &[&str] = &["M", "alpha", "g3_scale", "allow_hysteretic"];

fn check_device_keys(
    device: &serde_json::Map<String, serde_json::Value>,
) -> Result<(), DeviceFileError> {
    for key in device.keys() {
        if SUFFIXED_FIELDS.iter().any(|(full, _)| full == key)
            || UNSUFFIXED_FIELDS.contains(&key.as_str())
        {
            continue;
        }
        // A recognizable stem without (or with the wrong) unit suffix is a
        // unit error, not merely an unknown field.
        if let Some((full, _)) = SUFFIXED_FIELDS
            .iter()
            .find(|(full, stem)| key == stem || (key.starts_with(stem) && key != full))
        {
            return Err(DeviceFileError::Unit {
                found: key.clone(),
                expected: full.to_string(),
            });
        }
        return Err(DeviceFileError::Schema {
            path: format!("device.{key}"),
            detail: "unknown field".into(),
        });
    }
    Ok(())
}

/// Parse a device file from a string.
pub fn parse_device_str(text: &str) -> Result<(DeviceSpec, DeviceFile), DeviceFileError> {
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| DeviceFileError::Schema {
            path: "(document)".into(),
            detail: e.to_string(),
        })?;
    let object = value.as_object().ok_or_else(|| DeviceFileError::Schema {
        path: "(document)".into(),
        detail: "top level must be an object".into(),
    })?;
    for key in object.keys() {
        if !matches!(
            key.as_str(),
            "schema_version" | "device" | "kappa_table" | "metadata"
        ) {
            return Err(DeviceFileError::Schema {
                path: key.clone(),
                detail: "unknown field".into(),
            });
        }
    }
    let device_value = object
        .get("device")
        .ok_or_else(|| DeviceFileError::Schema {
            path: "device".into(),
            detail: "missing required object".into(),
        })?;
    let device_map = device_value
        .as_object()
        .ok_or_else(|| DeviceFileError::Schema {
            path: "device".into(),
            detail: "must be an object".into(),
        })?;
    check_device_keys(device_map)?;

    let file: DeviceFile =
        serde_json::from_value(value.clone()).map_err(|e| DeviceFileError::Schema {
            path: "(document)".into(),
            detail: e.to_string(),
        })?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(DeviceFileError::Schema {
            path: "schema_version".into(),
            detail: format!(
                "unsupported version '{}', expected '{SCHEMA_VERSION}'",
                file.schema_version
            ),
        });
    }
    let spec = file.to_spec()?;
    Ok((spec, file))
}

/// Parse a device file from disk.
pub fn parse_device(path: &Path) -> Result<(DeviceSpec, DeviceFile), DeviceFileError> {
    let text = std::fs::read_to_string(path).map_err(|source| DeviceFileError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_device_str(&text)
}

impl DeviceFile {
    /// SI-converted device spec.
    pub fn to_spec(&self) -> Result<DeviceSpec, snailamp_core::Error> {
        let d = &self.device;
        let mut spec = DeviceSpec::new(
            d.L_J_pH * 1e-12,
            d.M,
            d.alpha,
            d.C_c_pF * 1e-12,
            2.0 * PI * d.omega0_GHz * 1e9,
            d.Z_c_ohm,
        )?;
        spec.z_0 = d.Z0_ohm;
        spec.g3_scale = d.g3_scale;
        spec.allow_hysteretic = d.allow_hysteretic;
        if let Some(table) = &self.kappa_table {
            let mut converted: Vec<(f64, f64)> = table
                .iter()
                .map(|&(flux, mhz)| (flux, 2.0 * PI * mhz * 1e6))
                .collect();
            converted.sort_by(|a, b| a.0.total_cmp(&b.0));
            spec.kappa_override = Some(converted);
        }
        Ok(spec)
    }

    /// External-unit view of an SI spec (for serialization).
    pub fn from_spec(spec: &DeviceSpec, metadata: BTreeMap<String, String>) -> Self {
        Self {
            schema_version: SCHEMA_VERSION.into(),
            device: DeviceFields {
                L_J_pH: spec.l_j * 1e12,
                M: spec.m,
                alpha: spec.alpha,
                C_c_pF: spec.c_c * 1e12,
                omega0_GHz: spec.omega_0 / (2.0 * PI) / 1e9,
                Z_c_ohm: spec.z_c,
                Z0_ohm: spec.z_0,
                g3_scale: spec.g3_scale,
                allow_hysteretic: spec.allow_hysteretic,
            },
            kappa_table: spec.kappa_override.as_ref().map(|table| {
                table
                    .iter()
                    .map(|&(flux, kappa)| (flux, kappa / (2.0 * PI) / 1e6))
                    .collect()
            }),
            metadata,
        }
    }
}
