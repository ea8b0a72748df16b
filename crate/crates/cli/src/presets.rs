//! Reference devices: the five measured amplifiers the models are checked
//! against, with their constitutive parameters and measured κ midpoints.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use snailamp_core::DeviceSpec;

use crate::device::DeviceFile;

/// One reference device with its measured comparison data.
#[derive(Debug, Clone)]
pub struct ReferenceDevice {
    /// Single-letter name.
    pub name: &'static str,
    /// Large-junction inductance [pH].
    pub l_j_ph: f64,
    /// SNAIL count.
    pub m: u32,
    /// Junction inductance ratio.
    pub alpha: f64,
    /// Coupling capacitance [pF].
    pub c_c_pf: f64,
    /// Bare λ/2 resonance ω₀/2π [GHz].
    pub omega0_ghz: f64,
    /// Measured tunability range ω_a/2π [GHz]; the lower endpoint is
    /// `None` when only an upper bound was reported.
    pub measured_band_ghz: (Option<f64>, f64),
    /// Measured κ/2π range [MHz].
    pub measured_kappa_mhz: (f64, f64),
    /// Measured |g₃|/2π range [MHz].
    pub measured_g3_mhz: (f64, f64),
    /// Measured |g₄|/2π [MHz] (range for the tunable devices, a single
    /// representative value for the flat ones).
    pub measured_g4_mhz: (f64, f64),
}

/// The five reference devices.
pub fn reference_devices() -> Vec<ReferenceDevice> {
    vec![
        ReferenceDevice {
            name: "A",
            l_j_ph: 60.0,
            m: 1,
            alpha: 0.29,
            c_c_pf: 0.048,
            omega0_ghz: 8.4,
            measured_band_ghz: (None, 7.84),
            measured_kappa_mhz: (35.0, 55.0),
            measured_g3_mhz: (0.3, 30.0),
            measured_g4_mhz: (0.001, 4.9),
        },
        ReferenceDevice {
            name: "B",
            l_j_ph: 67.0,
            m: 10,
            alpha: 0.29,
            c_c_pf: 0.039,
            omega0_ghz: 11.4,
            measured_band_ghz: (None, 7.51),
            measured_kappa_mhz: (30.0, 35.0),
            measured_g3_mhz: (0.5, 60.0),
            measured_g4_mhz: (0.006, 0.5),
        },
        ReferenceDevice {
            name: "C",
            l_j_ph: 47.0,
            m: 20,
            alpha: 0.09,
            c_c_pf: 0.068,
            omega0_ghz: 17.9,
            measured_band_ghz: (Some(5.99), 7.24),
            measured_kappa_mhz: (90.0, 120.0),
            measured_g3_mhz: (0.4, 1.5),
            measured_g4_mhz: (0.004, 0.004),
        },
        ReferenceDevice {
            name: "D",
            l_j_ph: 44.0,
            m: 20,
            alpha: 0.09,
            c_c_pf: 0.075,
            omega0_ghz: 23.5,
            measured_band_ghz: (Some(7.09), 8.37),
            measured_kappa_mhz: (180.0, 250.0),
            measured_g3_mhz: (0.5, 1.8),
            measured_g4_mhz: (0.003, 0.003),
        },
        ReferenceDevice {
            name: "E",
            l_j_ph: 34.0,
            m: 20,
            alpha: 0.09,
            c_c_pf: 0.088,
            omega0_ghz: 23.4,
            measured_band_ghz: (Some(7.76), 9.24),
            measured_kappa_mhz: (270.0, 440.0),
            measured_g3_mhz: (0.7, 2.0),
            measured_g4_mhz: (0.004, 0.004),
        },
    ]
}

impl ReferenceDevice {
    /// Midpoint of the measured κ range [MHz].
    pub fn kappa_midpoint_mhz(&self) -> f64 {
        0.5 * (self.measured_kappa_mhz.0 + self.measured_kappa_mhz.1)
    }

    /// Bare spec with the single-pole κ estimate.
    pub fn spec(&self) -> DeviceSpec {
        DeviceSpec::new(
            self.l_j_ph * 1e-12,
            self.m,
            self.alpha,
            self.c_c_pf * 1e-12,
            2.0 * PI * self.omega0_ghz * 1e9,
            45.0,
        )
        .expect("reference devices are valid")
    }

    /// Spec with the measured-κ midpoint installed as a flat override.
    pub fn spec_with_measured_kappa(&self) -> DeviceSpec {
        let mut spec = self.spec();
        let kappa = 2.0 * PI * self.kappa_midpoint_mhz() * 1e6;
        spec.kappa_override = Some(vec![(0.0, kappa), (0.5, kappa)]);
        spec
    }

    /// Device file with the measured-κ midpoint table.
    pub fn device_file(&self) -> DeviceFile {
        let mut metadata = BTreeMap::new();
        metadata.insert("label".into(), format!("reference device {}", self.name));
        let mut file = DeviceFile::from_spec(&self.spec_with_measured_kappa(), metadata);
        let mid = self.kappa_midpoint_mhz();
        file.kappa_table = Some(vec![(0.0, mid), (0.5, mid)]);
        file
    }
}

/// Look up one reference device by name (case-insensitive).
pub fn reference_device(name: &str) -> Option<ReferenceDevice> {
    reference_devices()
        .into_iter()
        .find(|d| d.name.eq_ignore_ascii_case(name))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::device::parse_device_str;

    #[test]
    fn reference_files_round_trip_through_the_parser() {
        for device in reference_devices() {
            let file = device.device_file();
            let text = serde_json::to_string_pretty(&file).unwrap();
            let (spec, _) = parse_device_str(&text).unwrap();
            assert_eq!(spec.m, device.m);
            assert!((spec.l_j - device.l_j_ph * 1e-12).abs() < 1e-24);
            let table = spec.kappa_override.expect("kappa table present");
            assert!((table[0].1 / (2.0 * PI) / 1e6 - device.kappa_midpoint_mhz()).abs() < 1e-9);
        }
    }
}
