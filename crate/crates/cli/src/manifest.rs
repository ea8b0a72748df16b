//! Run manifests: every result file is written alongside a manifest that
//! records the tool version, input digests, solver constants, and
//! per-point status, so any CSV row is traceable to exactly one run.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Manifest written next to each output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Tool name.
    pub tool: String,
    /// Crate version.
    pub version: String,
    /// Subcommand that produced the outputs.
    pub command: String,
    /// UTC timestamp (the only field allowed to differ between reruns).
    pub timestamp_utc: String,
    /// Input files and their SHA-256 digests.
    pub inputs: Vec<InputDigest>,
    /// Output files this manifest covers.
    pub outputs: Vec<String>,
    /// Flat parameter map (flux grid, order, targets, model, jobs, ...).
    pub parameters: BTreeMap<String, String>,
    /// Solver tolerances and schedule constants in effect.
    pub tolerances: BTreeMap<String, String>,
    /// Per-point status: "ok" or the error text.
    pub points: Vec<PointStatus>,
}

/// One input file digest.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputDigest {
    /// Path as given on the command line.
    pub path: String,
    /// SHA-256 of the raw bytes, hex.
    pub sha256: String,
}

/// Status of one evaluated point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PointStatus {
    /// Flux bias Φ/Φ₀.
    pub flux: f64,
    /// "ok" or an error description.
    pub status: String,
}

impl RunManifest {
    /// Fresh manifest for a subcommand run.
    pub fn new(command: &str) -> Self {
        Self {
            tool: "snailamp".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            timestamp_utc: chrono::Utc::now().to_rfc3339(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            parameters: BTreeMap::new(),
            tolerances: default_tolerances(),
            points: Vec::new(),
        }
    }

    /// Record an input file and its digest.
    pub fn add_input(&mut self, path: &Path) -> std::io::Result<()> {
        let bytes = std::fs::read(path)?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex_string(&digest),
        });
        Ok(())
    }

    /// Record a parameter.
    pub fn set_param(&mut self, key: &str, value: impl ToString) {
        self.parameters.insert(key.into(), value.to_string());
    }

    /// Record a per-point outcome.
    pub fn push_point(&mut self, flux: f64, status: String) {
        self.points.push(PointStatus { flux, status });
    }

    /// True when any point failed.
    pub fn has_failures(&self) -> bool {
        self.points.iter().any(|p| p.status != "ok")
    }

    /// Write the manifest as pretty JSON.
    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        let mut file = std::fs::File::create(path)?;
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        file.write_all(text.as_bytes())?;
        file.write_all(b"\n")
    }
}

fn hex_string(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

/// Solver constants recorded in every manifest. These mirror the defaults
/// in the core crate; command-line `--tol-*` overrides replace entries.
pub fn default_tolerances() -> BTreeMap<String, String> {
    let mut map = BTreeMap::new();
    map.insert("hb_residual_rel".into(), "1e-12".into());
    map.insert("hb_max_ramp_steps".into(), "50".into());
    map.insert("hb_max_newton_iter".into(), "100".into());
    map.insert("calibration_gain_tol_db".into(), "0.01".into());
    map.insert("probe_power_dbm".into(), "-170".into());
    map.insert("probe_offset_hz".into(), "1".into());
    map.insert("compression_step_db".into(), "0.5".into());
    map.insert("compression_ceiling_dbm".into(), "-80".into());
    map.insert("frequency_bisection_iters".into(), "60".into());
    map.insert("kerr_free_flux_tol".into(), "1e-6".into());
    map.insert("minimum_scan_points".into(), "1000".into());
    map.insert("iip3_fit_compression_db".into(), "0.1".into());
    map
}
