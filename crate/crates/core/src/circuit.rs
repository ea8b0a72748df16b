//! Embedding-circuit models: from SNAIL Taylor coefficients to the
//! phenomenological mode parameters (ω_a, κ, g₃, g₄, K, p).
//!
//! Two models are provided.
//!
//! **Lumped**: the resonator is a series L–C in line with the M-SNAIL array.
//! Eliminating the array phase through the full nonlinear current
//! conservation gives effective coefficients
//!
//! ```text
//! c̃₂ = (p/M) c₂          c̃₃ = (p³/M²) c₃
//! c̃₄ = (p⁴/M³) (c₄ − 3c₃²(1−p)/c₂)        p = Mξ_J/(c₂ + Mξ_J)
//! ```
//!
//! with ξ_J = L_J/L, and after quantization
//!
//! ```text
//! ħg₃ = (1/6)(p²/M)(c₃/c₂)√(E_C ħω_a)
//! ħg₄ = (1/12)(p³/M²)(c₄ − 3c₃²(1−p)/c₂)(1/c₂) E_C
//! ħK  = (p³/M²)(c₄ − 3c₃²(1−p)/c₂ − (5/3)(c₃²/c₂)p)(1/c₂) E_C
//! ```
//!
//! The c₃² renormalization inside c̃₄ comes from the nonlinear constraint
//! and survives even at vanishing participation; dropping it (the "linear
//! participation" shortcut) mispredicts K by orders of magnitude at some
//! fluxes. [`lumped_mode_parameters_linear_participation`] exists to
//! quantify exactly that.
//!
//! **Distributed**: the array interrupts a λ/2 transmission-line resonator
//! of characteristic impedance Z_c whose bare (array-shorted) resonance is
//! ω₀. The dressed frequency is the smallest root of
//!
//! ```text
//! ω_a tan((π/2)(ω_a/ω₀)) = 2Z_c / (M L_s(φ_ext))
//! ```
//!
//! and g₃, K follow from the eigenmode envelope (see
//! [`distributed_nonlinearities`]). g₄ is recovered from K and g₃ through
//! K = 12(g₄ − 5g₃²/ω_a), which therefore holds identically on every
//! emitted point of either model.

#[allow(unused_imports)]
use num_traits::Float as _;

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::consts::{E_CHARGE, HBAR, R_QUANTUM};
use crate::error::{Error, Result};
use crate::roots::{bisect, newton_scalar};
use crate::snail::{
    self, snail_potential, taylor_coefficients_seeded, SnailCoefficients, SnailParams,
};

/// Which circuit model produced a set of mode parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelTag {
    /// Series-LC lumped embedding.
    Lumped,
    /// λ/2 transmission-line embedding.
    Distributed,
}

impl ModelTag {
    /// Stable lowercase name, used in file output.
    pub fn as_str(&self) -> &'static str {
        match self {
            ModelTag::Lumped => "lumped",
            ModelTag::Distributed => "distributed",
        }
    }
}

/// Constitutive description of one device (the fabrication-level knobs).
#[derive(Debug, Clone, PartialEq)]
pub struct DeviceSpec {
    /// Josephson inductance of one large junction [H].
    pub l_j: f64,
    /// Number of SNAILs in the array.
    pub m: u32,
    /// Junction inductance ratio α.
    pub alpha: f64,
    /// Coupling capacitance to the output line [F].
    pub c_c: f64,
    /// Bare λ/2 resonance with the array shorted [rad/s].
    pub omega_0: f64,
    /// Characteristic impedance of the embedding line [Ω].
    pub z_c: f64,
    /// External line impedance [Ω], conventionally 50.
    pub z_0: f64,
    /// Measured κ values as (Φ/Φ₀, κ [rad/s]) pairs, ascending in flux.
    /// When present this table overrides the single-pole estimate.
    pub kappa_override: Option<Vec<(f64, f64)>>,
    /// Calibration factor multiplying the emitted g₃ (default 1).
    pub g3_scale: f64,
    /// Scale on the single-pole κ estimate (design-search knob, default 1).
    pub kappa_scale: f64,
    /// Permit α > 1/3 devices despite their hysteretic flux response.
    pub allow_hysteretic: bool,
}

impl DeviceSpec {
    /// Validated constructor; optional fields take their defaults.
    pub fn new(l_j: f64, m: u32, alpha: f64, c_c: f64, omega_0: f64, z_c: f64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidParameter("m must be >= 1"));
        }
        if !omega_0.is_finite() || omega_0 <= 0.0 {
            return Err(Error::InvalidParameter("omega_0 must be positive"));
        }
        if !z_c.is_finite() || z_c <= 0.0 {
            return Err(Error::InvalidParameter("z_c must be positive"));
        }
        if !c_c.is_finite() || c_c < 0.0 {
            return Err(Error::InvalidParameter("c_c must be non-negative"));
        }
        // Delegate α and L_J checks.
        SnailParams::new(alpha, 0.0, l_j)?;
        Ok(Self {
            l_j,
            m,
            alpha,
            c_c,
            omega_0,
            z_c,
            z_0: 50.0,
            kappa_override: None,
            g3_scale: 1.0,
            kappa_scale: 1.0,
            allow_hysteretic: false,
        })
    }

    /// SNAIL parameters at a flux bias Φ/Φ₀.
    pub fn snail_at(&self, flux: f64) -> SnailParams {
        SnailParams {
            alpha: self.alpha,
            n_large: 3,
            phi_ext: 2.0 * PI * flux,
            l_j: self.l_j,
        }
    }

    /// Reject hysteretic devices unless the override flag is set.
    pub fn check_hysteresis(&self) -> Result<()> {
        if self.alpha > 1.0 / 3.0 && !self.allow_hysteretic {
            return Err(Error::HystereticDevice { alpha: self.alpha });
        }
        Ok(())
    }
}

/// Series L–C embedding of the lumped model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LumpedEmbedding {
    /// Series inductance [H].
    pub l: f64,
    /// Series capacitance [F].
    pub c: f64,
}

impl LumpedEmbedding {
    /// Validated constructor.
    pub fn new(l: f64, c: f64) -> Result<Self> {
        if !(l > 0.0 && c > 0.0) {
            return Err(Error::InvalidParameter(
                "embedding L and C must be positive",
            ));
        }
        Ok(Self { l, c })
    }

    /// Series equivalent of a distributed spec: L = Z_c/ω₀ and C chosen so
    /// that 1/√(LC) reproduces the bare frequency ω₀.
    pub fn from_spec(spec: &DeviceSpec) -> Self {
        let l = spec.z_c / spec.omega_0;
        Self {
            l,
            c: 1.0 / (spec.omega_0 * spec.omega_0 * l),
        }
    }

    /// Embedding rescaled so the lumped dressed frequency at `flux` equals
    /// `omega_target` (used to put the two models on common footing in
    /// cross-model comparisons). The bare frequency stays at ω₀.
    pub fn matched_to_frequency(spec: &DeviceSpec, flux: f64, omega_target: f64) -> Result<Self> {
        if !(omega_target > 0.0 && omega_target < spec.omega_0) {
            return Err(Error::InvalidParameter(
                "omega_target must lie in (0, omega_0)",
            ));
        }
        let l_s = snail::snail_inductance(&spec.snail_at(flux))?;
        let ratio = spec.omega_0 / omega_target;
        let l = spec.m as f64 * l_s / (ratio * ratio - 1.0);
        Self::new(l, 1.0 / (spec.omega_0 * spec.omega_0 * l))
    }

    /// Charging energy E_C = e²/2C [J].
    pub fn e_c(&self) -> f64 {
        E_CHARGE * E_CHARGE / (2.0 * self.c)
    }

    /// Inductive energy E_L = φ₀²/L [J].
    pub fn e_l(&self) -> f64 {
        let phi0 = crate::consts::REDUCED_FLUX_QUANTUM;
        phi0 * phi0 / self.l
    }

    /// Bare resonance 1/√(LC) [rad/s].
    pub fn omega_0(&self) -> f64 {
        1.0 / (self.l * self.c).sqrt()
    }

    /// Inductance ratio ξ_J = L_J/L.
    pub fn xi_j(&self, l_j: f64) -> f64 {
        l_j / self.l
    }
}

/// Phenomenological mode parameters at one flux point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeParameters {
    /// Dressed resonance [rad/s].
    pub omega_a: f64,
    /// Coupling rate to the line [rad/s].
    pub kappa: f64,
    /// Third-order nonlinearity g₃ [rad/s].
    pub g3: f64,
    /// Fourth-order nonlinearity g₄ [rad/s].
    pub g4: f64,
    /// Stark shift per photon K = 12(g₄ − 5g₃²/ω_a) [rad/s].
    pub kerr: f64,
    /// Inductive participation ratio of the array.
    pub p: f64,
    /// Flux bias Φ/Φ₀ at which these were evaluated.
    pub flux: f64,
    /// Producing model.
    pub model: ModelTag,
    /// Charging energy of the (equivalent) embedding [J]; used for phase
    /// zero-point estimates in validity checks.
    pub e_c: f64,
    /// True when κ is the single-pole estimate rather than a measured value.
    pub kappa_estimated: bool,
}

impl ModeParameters {
    /// Relative residual of K = 12(g₄ − 5g₃²/ω_a).
    pub fn kerr_identity_residual(&self) -> f64 {
        let rhs = 12.0 * (self.g4 - 5.0 * self.g3 * self.g3 / self.omega_a);
        let scale = self.kerr.abs().max(12.0 * self.g4.abs()).max(1e-30);
        (self.kerr - rhs).abs() / scale
    }

    /// Zero-point phase spread of the mode coordinate, 2√(E_C/ħω_a).
    pub fn phi_zpf(&self) -> f64 {
        2.0 * (self.e_c / (HBAR * self.omega_a)).sqrt()
    }
}

/// Effective Taylor coefficients of the single remaining mode coordinate.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveCoefficients {
    /// c̃₂ (units of E_J).
    pub c2: f64,
    /// c̃₃ (units of E_J).
    pub c3: f64,
    /// c̃₄ (units of E_J).
    pub c4: f64,
    /// Array linear participation ratio p = Mξ_J/(c₂ + Mξ_J).
    pub p: f64,
}

/// Solve the nonlinear current-conservation condition
/// α sin(φ_s) + sin((φ_s − φ_ext)/3) + ξ_J(Mφ_s − φ) = 0
/// for the per-SNAIL phase φ_s at mode coordinate `phi`.
///
/// The returned branch is the one continuously connected to
/// φ_s(φ̄_min) = φ_min, reached by walking `phi` from M·φ_min.
pub fn solve_constraint(
    phi: f64,
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    coeffs: &SnailCoefficients,
) -> Result<f64> {
    spec.check_hysteresis()?;
    let xi_j = embedding.xi_j(spec.l_j);
    let m = spec.m as f64;
    let phi_ext = coeffs.phi_ext;
    let alpha = spec.alpha;

    let residual = |phi_s: f64, phi_mode: f64| {
        alpha * phi_s.sin() + ((phi_s - phi_ext) / 3.0).sin() + xi_j * (m * phi_s - phi_mode)
    };
    let slope = |phi_s: f64| alpha * phi_s.cos() + ((phi_s - phi_ext) / 3.0).cos() / 3.0 + xi_j * m;

    // Residuals scale with the constraint stiffness; tolerances must too,
    // or stiff inductors (ξ_J ≫ 1) can never "converge".
    let scale = 1.0 + xi_j * m;

    // Walk the mode coordinate from the anchor in bounded increments so the
    // Newton seed always starts near the branch.
    let anchor = m * coeffs.phi_min;
    let total = phi - anchor;
    let steps = (total.abs() / 0.5).ceil().max(1.0) as usize;
    let mut phi_s = coeffs.phi_min;
    let mut last_residual = 0.0;
    for k in 1..=steps {
        let phi_mode = anchor + total * k as f64 / steps as f64;
        match newton_scalar(
            |x| residual(x, phi_mode),
            slope,
            phi_s,
            1e-14 * scale,
            1e-15,
            100,
        ) {
            Some(root) => phi_s = root,
            None => {
                // Bisection fallback: expand a bracket around the seed.
                let mut half_width = 0.25f64;
                let mut bracket = None;
                for _ in 0..40 {
                    let lo = phi_s - half_width;
                    let hi = phi_s + half_width;
                    if residual(lo, phi_mode).signum() != residual(hi, phi_mode).signum() {
                        bracket = Some((lo, hi));
                        break;
                    }
                    half_width *= 2.0;
                }
                let (lo, hi) = bracket.ok_or(Error::ConstraintNoConvergence {
                    residual: residual(phi_s, phi_mode),
                })?;
                phi_s = bisect(|x| residual(x, phi_mode), lo, hi, 100)?;
            }
        }
        last_residual = residual(phi_s, phi_mode);
    }
    if last_residual.abs() > 1e-10 * scale {
        return Err(Error::ConstraintNoConvergence {
            residual: last_residual,
        });
    }
    Ok(phi_s)
}

/// Potential energy of the single mode coordinate, in units of E_J:
/// U(φ)/E_J = M·u_SNAIL(φ_s[φ]) + (ξ_J/2)(φ − Mφ_s[φ])².
///
/// This is the quantity whose numerical derivatives the closed-form
/// effective coefficients must reproduce.
pub fn eliminated_potential(
    phi: f64,
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    coeffs: &SnailCoefficients,
) -> Result<f64> {
    let phi_s = solve_constraint(phi, spec, embedding, coeffs)?;
    let snail = spec.snail_at(coeffs.phi_ext / (2.0 * PI));
    let xi_j = embedding.xi_j(spec.l_j);
    let m = spec.m as f64;
    let spring = phi - m * phi_s;
    Ok(m * snail_potential(phi_s, &snail) + 0.5 * xi_j * spring * spring)
}

/// Closed-form effective coefficients (c̃₂, c̃₃, c̃₄, p) at one flux bias.
pub fn effective_coefficients(
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    flux: f64,
) -> Result<EffectiveCoefficients> {
    let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, None)?;
    Ok(effective_from(&coeffs, spec, embedding))
}

fn effective_from(
    coeffs: &SnailCoefficients,
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
) -> EffectiveCoefficients {
    let m = spec.m as f64;
    let xi_j = embedding.xi_j(spec.l_j);
    let (c2, c3, c4) = (coeffs.c(2), coeffs.c(3), coeffs.c(4));
    let p = m * xi_j / (c2 + m * xi_j);
    EffectiveCoefficients {
        c2: p / m * c2,
        c3: p.powi(3) / (m * m) * c3,
        c4: p.powi(4) / m.powi(3) * (c4 - 3.0 * c3 * c3 / c2 * (1.0 - p)),
        p,
    }
}

/// Lumped-model mode parameters at one flux bias.
pub fn lumped_mode_parameters(
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    flux: f64,
) -> Result<ModeParameters> {
    lumped_with_options(spec, embedding, flux, true, None)
}

/// Lumped model with the c₃² constraint renormalization of c̃₄ deleted,
/// i.e. the naive "nonlinearity dilutes as pⁿ" picture. Kept for
/// quantifying how badly that shortcut misses K; not a production path.
pub fn lumped_mode_parameters_linear_participation(
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    flux: f64,
) -> Result<ModeParameters> {
    lumped_with_options(spec, embedding, flux, false, None)
}

pub(crate) fn lumped_with_options(
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    flux: f64,
    c3_renormalization: bool,
    seed_minimum: Option<f64>,
) -> Result<ModeParameters> {
    spec.check_hysteresis()?;
    let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, seed_minimum)?;
    let (c2, c3, c4) = (coeffs.c(2), coeffs.c(3), coeffs.c(4));
    if c2 <= crate::snail::C2_DIVERGENCE_FLOOR {
        return Err(Error::DivergentInductance);
    }
    let m = spec.m as f64;
    let xi_j = embedding.xi_j(spec.l_j);
    let p = m * xi_j / (c2 + m * xi_j);
    let omega_0 = embedding.omega_0();
    let omega_a = omega_0 / (1.0 + m * xi_j / c2).sqrt();
    let e_c = embedding.e_c();

    let renorm = if c3_renormalization {
        3.0 * c3 * c3 / c2 * (1.0 - p)
    } else {
        0.0
    };
    let g3 = (1.0 / 6.0) * (p * p / m) * (c3 / c2) * (e_c * HBAR * omega_a).sqrt() / HBAR
        * spec.g3_scale;
    let kerr =
        p.powi(3) / (m * m) * (c4 - renorm - (5.0 / 3.0) * (c3 * c3 / c2) * p) * (1.0 / c2) * e_c
            / HBAR;
    // Emit g₄ through the Stark-shift relation so the triple stays exactly
    // consistent; at unit g3_scale this equals the direct closed form.
    let g4 = kerr / 12.0 + 5.0 * g3 * g3 / omega_a;

    let (kappa, kappa_estimated) = coupling_kappa(spec, omega_a, flux);
    Ok(ModeParameters {
        omega_a,
        kappa,
        g3,
        g4,
        kerr,
        p,
        flux,
        model: ModelTag::Lumped,
        e_c,
        kappa_estimated,
    })
}

/// Direct closed form for ħg₄ in the lumped model (test hook; the emitted
/// g₄ is derived from K and g₃ and equals this at unit g3_scale).
pub fn lumped_g4_closed_form(
    spec: &DeviceSpec,
    embedding: &LumpedEmbedding,
    flux: f64,
) -> Result<f64> {
    let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, None)?;
    let (c2, c3, c4) = (coeffs.c(2), coeffs.c(3), coeffs.c(4));
    let m = spec.m as f64;
    let xi_j = embedding.xi_j(spec.l_j);
    let p = m * xi_j / (c2 + m * xi_j);
    Ok(
        (1.0 / 12.0) * p.powi(3) / (m * m) * (c4 - 3.0 * c3 * c3 / c2 * (1.0 - p)) / c2
            * embedding.e_c()
            / HBAR,
    )
}

/// Dressed resonance of the distributed model: smallest ω_a ∈ (0, ω₀) with
/// ω_a tan((π/2)(ω_a/ω₀)) = 2Z_c/(M L_s(φ_ext)). Solved by bisection; the
/// bracket (0, ω₀(1−1e-12)) always contains exactly one root for finite
/// positive L_s because the left side grows monotonically from 0 to +∞.
pub fn distributed_frequency(spec: &DeviceSpec, flux: f64) -> Result<f64> {
    distributed_frequency_seeded(spec, flux, None)
}

/// As [`distributed_frequency`], with a continuation seed for the SNAIL
/// minimum.
pub fn distributed_frequency_seeded(
    spec: &DeviceSpec,
    flux: f64,
    seed_minimum: Option<f64>,
) -> Result<f64> {
    let l_s = snail::snail_inductance_seeded(&spec.snail_at(flux), seed_minimum)?;
    distributed_frequency_from_inductance(spec, l_s)
}

fn distributed_frequency_from_inductance(spec: &DeviceSpec, l_s: f64) -> Result<f64> {
    if !l_s.is_finite() || l_s <= 0.0 {
        return Err(Error::RootNotBracketed);
    }
    let omega_0 = spec.omega_0;
    let rhs = 2.0 * spec.z_c / (spec.m as f64 * l_s);
    let f = |omega: f64| omega * ((PI / 2.0) * (omega / omega_0)).tan() - rhs;
    bisect(f, omega_0 * 1e-15, omega_0 * (1.0 - 1e-12), 60)
}

/// Distributed-model mode parameters at one flux bias.
///
/// Implements the eigenmode-envelope expressions with
/// x = ω_a M L_s/(2Z_c) and u = ω_a/ω₀:
///
/// ```text
/// g₃ = (4Z_c c₃ / 3M²L_J) √(Z_c/R_Q) [cos²(πu/2) / (πu + sin(πu))]^{3/2}
/// K  = ω_a sin²(πu) cot(πu/2) / (c₂ M² [πu + sin(πu)]²) · (Z_c/R_Q)
///      · [c₄ − (c₃²/c₂)(3 + 5x²)/(1 + 3x²)]
/// ```
///
/// g₄ is back-filled as K/12 + 5g₃²/ω_a. The participation ratio is the
/// lumped-style proxy p = x²/(1 + x²), which reproduces the small- and
/// large-participation limits of the model; it is a proxy, not an energy
/// integral.
pub fn distributed_nonlinearities(spec: &DeviceSpec, flux: f64) -> Result<ModeParameters> {
    distributed_with_seed(spec, flux, None)
}

pub(crate) fn distributed_with_seed(
    spec: &DeviceSpec,
    flux: f64,
    seed_minimum: Option<f64>,
) -> Result<ModeParameters> {
    spec.check_hysteresis()?;
    let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, seed_minimum)?;
    let (c2, c3, c4) = (coeffs.c(2), coeffs.c(3), coeffs.c(4));
    if c2 <= crate::snail::C2_DIVERGENCE_FLOOR {
        return Err(Error::DivergentInductance);
    }
    let m = spec.m as f64;
    let l_s = spec.l_j / c2;
    let omega_a = distributed_frequency_from_inductance(spec, l_s)?;
    let u = omega_a / spec.omega_0;
    let x = omega_a * m * l_s / (2.0 * spec.z_c);

    let envelope = ((PI / 2.0) * u).cos().powi(2) / (PI * u + (PI * u).sin());
    let g3 = (4.0 * spec.z_c * c3) / (3.0 * m * m * spec.l_j)
        * (spec.z_c / R_QUANTUM).sqrt()
        * envelope.powf(1.5)
        * spec.g3_scale;

    let bracket = c4 - (c3 * c3 / c2) * (3.0 + 5.0 * x * x) / (1.0 + 3.0 * x * x);
    let kerr = omega_a * (PI * u).sin().powi(2)
        / ((PI / 2.0) * u).tan()
        / (c2 * m * m * (PI * u + (PI * u).sin()).powi(2))
        * (spec.z_c / R_QUANTUM)
        * bracket;
    let g4 = kerr / 12.0 + 5.0 * g3 * g3 / omega_a;

    let p = x * x / (1.0 + x * x);
    // Equivalent charging energy of the mode: total inductance ML_s/p at
    // resonance fixes C_eff = p/(ω_a² M L_s).
    let c_eff = p / (omega_a * omega_a * m * l_s);
    let e_c = E_CHARGE * E_CHARGE / (2.0 * c_eff);

    let (kappa, kappa_estimated) = coupling_kappa(spec, omega_a, flux);
    Ok(ModeParameters {
        omega_a,
        kappa,
        g3,
        g4,
        kerr,
        p,
        flux,
        model: ModelTag::Distributed,
        e_c,
        kappa_estimated,
    })
}

/// Coupling rate κ at one flux point, with a flag marking estimated values.
///
/// A measured override table wins when present (linear interpolation in
/// flux, clamped at the table ends). Otherwise the single-pole estimate
/// κ = Z₀ C_c² ω_a³ (2Z_c/π) is used — an order-of-magnitude stand-in for a
/// quantity the device description does not determine precisely.
pub fn coupling_kappa(spec: &DeviceSpec, omega_a: f64, flux: f64) -> (f64, bool) {
    if let Some(table) = &spec.kappa_override {
        if !table.is_empty() {
            return (interpolate_kappa(table, flux), false);
        }
    }
    let estimate =
        spec.z_0 * spec.c_c * spec.c_c * omega_a.powi(3) * (2.0 * spec.z_c / PI) * spec.kappa_scale;
    (estimate, true)
}

fn interpolate_kappa(table: &[(f64, f64)], flux: f64) -> f64 {
    let flux = flux.abs();
    if flux <= table[0].0 {
        return table[0].1;
    }
    if let Some(last) = table.last() {
        if flux >= last.0 {
            return last.1;
        }
    }
    for window in table.windows(2) {
        let (x0, y0) = window[0];
        let (x1, y1) = window[1];
        if flux >= x0 && flux <= x1 {
            if x1 == x0 {
                return y0;
            }
            return y0 + (y1 - y0) * (flux - x0) / (x1 - x0);
        }
    }
    table.last().map(|&(_, y)| y).unwrap_or(0.0)
}

/// Flux bias in (0, 0.5) at which K changes sign, located by bisection to
/// 1e-6 in flux. Scans a 101-point grid for the first sign change;
/// [`Error::NoSignChange`] when K is single-signed (a valid outcome for
/// some α).
pub fn kerr_free_flux(spec: &DeviceSpec, model: ModelTag) -> Result<f64> {
    let kerr_at = |flux: f64| -> Result<f64> {
        let mode = match model {
            ModelTag::Lumped => {
                lumped_mode_parameters(spec, &LumpedEmbedding::from_spec(spec), flux)?
            }
            ModelTag::Distributed => distributed_nonlinearities(spec, flux)?,
        };
        Ok(mode.kerr)
    };
    let n = 100usize;
    let mut prev_flux = 1e-4;
    let mut prev_k = kerr_at(prev_flux)?;
    for i in 1..=n {
        let flux = 1e-4 + (0.5 - 2e-4) * i as f64 / n as f64;
        let k = kerr_at(flux)?;
        if prev_k == 0.0 {
            return Ok(prev_flux);
        }
        if prev_k.signum() != k.signum() {
            let (mut lo, mut hi) = (prev_flux, flux);
            let sign_lo = prev_k.signum();
            while hi - lo > 1e-6 {
                let mid = 0.5 * (lo + hi);
                let km = kerr_at(mid)?;
                if km == 0.0 {
                    return Ok(mid);
                }
                if km.signum() == sign_lo {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            return Ok(0.5 * (lo + hi));
        }
        prev_flux = flux;
        prev_k = k;
    }
    Err(Error::NoSignChange)
}

/// Evaluate mode parameters on a flux grid with branch continuation.
///
/// Points are processed in ascending flux order from a seeded branch point;
/// per-point failures are collected and the sweep continues. The result
/// preserves the input ordering.
pub fn flux_sweep(
    spec: &DeviceSpec,
    fluxes: &[f64],
    model: ModelTag,
) -> Vec<(f64, Result<ModeParameters>)> {
    let embedding = LumpedEmbedding::from_spec(spec);
    let mut order: Vec<usize> = (0..fluxes.len()).collect();
    order.sort_by(|&a, &b| {
        fluxes[a]
            .partial_cmp(&fluxes[b])
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut results: Vec<Option<(f64, Result<ModeParameters>)>> = alloc::vec![None; fluxes.len()];
    let mut seed: Option<f64> = None;
    for &idx in &order {
        let flux = fluxes[idx];
        let point = match model {
            ModelTag::Lumped => lumped_with_options(spec, &embedding, flux, true, seed),
            ModelTag::Distributed => distributed_with_seed(spec, flux, seed),
        };
        if point.is_ok() {
            if let Ok(c) = taylor_coefficients_seeded(&spec.snail_at(flux), 2, seed) {
                seed = Some(c.phi_min);
            }
        }
        results[idx] = Some((flux, point));
    }
    results
        .into_iter()
        .map(|entry| entry.expect("every index visited"))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn device_c() -> DeviceSpec {
        DeviceSpec::new(47e-12, 20, 0.09, 0.068e-12, 2.0 * PI * 17.9e9, 45.0).unwrap()
    }

    fn device_a() -> DeviceSpec {
        DeviceSpec::new(60e-12, 1, 0.29, 0.048e-12, 2.0 * PI * 8.4e9, 45.0).unwrap()
    }

    #[test]
    fn constraint_fixed_point_at_the_minimum() {
        let spec = device_c();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(0.3), 4, None).unwrap();
        let phi_bar_min = spec.m as f64 * coeffs.phi_min;
        let phi_s = solve_constraint(phi_bar_min, &spec, &embedding, &coeffs).unwrap();
        assert!((phi_s - coeffs.phi_min).abs() < 1e-12);
    }

    #[test]
    fn constraint_reduces_to_rigid_divider_for_stiff_inductor() {
        // ξ_J → ∞ (L → 0): the inductor pins Mφ_s = φ.
        let spec = device_c();
        let embedding = LumpedEmbedding::new(1e-18, 1.0e-12).unwrap();
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(0.2), 4, None).unwrap();
        let phi = spec.m as f64 * coeffs.phi_min + 0.8;
        let phi_s = solve_constraint(phi, &spec, &embedding, &coeffs).unwrap();
        assert!((phi_s - phi / spec.m as f64).abs() < 1e-6);
    }

    #[test]
    fn constraint_root_has_tiny_residual() {
        let mut spec = device_c();
        spec.alpha = 0.09;
        let embedding = LumpedEmbedding::new(spec.l_j / 0.5, 1e-13).unwrap(); // ξ_J = 0.5
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(0.27), 4, None).unwrap();
        let phi = spec.m as f64 * coeffs.phi_min + 0.3;
        let phi_s = solve_constraint(phi, &spec, &embedding, &coeffs).unwrap();
        let xi = embedding.xi_j(spec.l_j);
        let residual = spec.alpha * phi_s.sin()
            + ((phi_s - coeffs.phi_ext) / 3.0).sin()
            + xi * (spec.m as f64 * phi_s - phi);
        assert!(residual.abs() < 1e-12, "residual {residual:e}");
    }

    #[test]
    fn effective_c4_unrenormalized_in_full_participation_limit() {
        // Single SNAIL, L → 0 ⇒ p → 1 ⇒ c̃₄ → c₄.
        let mut spec = device_a();
        spec.m = 1;
        let embedding = LumpedEmbedding::new(1e-16, 1e-12).unwrap();
        let flux = 0.21;
        let eff = effective_coefficients(&spec, &embedding, flux).unwrap();
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, None).unwrap();
        assert!(eff.p > 0.999_999);
        assert!((eff.c4 - coeffs.c(4)).abs() < 1e-5 * coeffs.c(4).abs());
    }

    #[test]
    fn effective_c4_has_no_correction_where_c3_vanishes() {
        let spec = device_c();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let eff = effective_coefficients(&spec, &embedding, 0.0).unwrap();
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(0.0), 4, None).unwrap();
        let m = spec.m as f64;
        let expected = eff.p.powi(4) / m.powi(3) * coeffs.c(4);
        assert!((eff.c4 - expected).abs() <= 1e-15 * expected.abs());
    }

    /// Numerical-differentiation oracle for the effective coefficients:
    /// central stencils on the eliminated potential with one Richardson
    /// step. The potential is stationary in φ_s at the constraint solution,
    /// so evaluation noise stays at rounding level.
    fn oracle_effective(
        spec: &DeviceSpec,
        embedding: &LumpedEmbedding,
        flux: f64,
    ) -> (f64, f64, f64) {
        let coeffs = taylor_coefficients_seeded(&spec.snail_at(flux), 4, None).unwrap();
        let center = spec.m as f64 * coeffs.phi_min;
        let u = |phi: f64| eliminated_potential(phi, spec, embedding, &coeffs).unwrap();
        let d_n = |n: usize, h: f64| -> f64 {
            let f = |k: f64| u(center + k * h);
            match n {
                2 => {
                    (-f(-2.0) + 16.0 * f(-1.0) - 30.0 * f(0.0) + 16.0 * f(1.0) - f(2.0))
                        / (12.0 * h * h)
                }
                3 => {
                    (f(-3.0) - 8.0 * f(-2.0) + 13.0 * f(-1.0) - 13.0 * f(1.0) + 8.0 * f(2.0)
                        - f(3.0))
                        / (8.0 * h.powi(3))
                }
                4 => {
                    (-f(-3.0) + 12.0 * f(-2.0) - 39.0 * f(-1.0) + 56.0 * f(0.0) - 39.0 * f(1.0)
                        + 12.0 * f(2.0)
                        - f(3.0))
                        / (6.0 * h.powi(4))
                }
                _ => unreachable!(),
            }
        };
        // The mode coordinate stretches by ~M/p relative to the SNAIL phase.
        let h = 0.05 * spec.m as f64;
        let richardson = |n: usize| (16.0 * d_n(n, h / 2.0) - d_n(n, h)) / 15.0;
        (richardson(2), richardson(3), richardson(4))
    }

    #[test]
    fn effective_coefficients_match_numerical_differentiation() {
        let mut spec = device_c();
        spec.m = 20;
        let embedding = LumpedEmbedding::new(spec.l_j / 0.5, 1e-13).unwrap();
        let flux = 0.23;
        let eff = effective_coefficients(&spec, &embedding, flux).unwrap();
        let (d2, d3, d4) = oracle_effective(&spec, &embedding, flux);
        assert!(
            (eff.c2 - d2).abs() <= 1e-6 * d2.abs(),
            "c2: {} vs {d2}",
            eff.c2
        );
        assert!(
            (eff.c3 - d3).abs() <= 1e-6 * d3.abs(),
            "c3: {} vs {d3}",
            eff.c3
        );
        assert!(
            (eff.c4 - d4).abs() <= 1e-6 * d4.abs(),
            "c4: {} vs {d4}",
            eff.c4
        );
    }

    #[test]
    fn lumped_zero_flux_has_no_three_wave_term() {
        let spec = device_a();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let mode = lumped_mode_parameters(&spec, &embedding, 0.0).unwrap();
        let reference = lumped_mode_parameters(&spec, &embedding, 0.25).unwrap();
        assert!(mode.g3.abs() < 1e-12 * reference.g3.abs());
        assert!((mode.kerr - 12.0 * mode.g4).abs() <= 1e-10 * mode.kerr.abs());
    }

    #[test]
    fn lumped_kerr_identity_and_closed_form_g4_agree() {
        let spec = device_a();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let mode = lumped_mode_parameters(&spec, &embedding, 0.25).unwrap();
        assert!(mode.kerr_identity_residual() < 1e-10);
        let g4_direct = lumped_g4_closed_form(&spec, &embedding, 0.25).unwrap();
        assert!(
            (mode.g4 - g4_direct).abs() <= 1e-12 * g4_direct.abs(),
            "emitted {} vs closed form {}",
            mode.g4,
            g4_direct
        );
    }

    #[test]
    fn deleting_constraint_renormalization_wrecks_kerr() {
        let spec = device_a();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let mut max_ratio = 0.0f64;
        for k in 1..=40 {
            let flux = 0.5 * k as f64 / 41.0;
            let full = lumped_mode_parameters(&spec, &embedding, flux).unwrap();
            let naive =
                lumped_mode_parameters_linear_participation(&spec, &embedding, flux).unwrap();
            if full.kerr != 0.0 && naive.kerr != 0.0 {
                let (hi, lo) = if full.kerr.abs() > naive.kerr.abs() {
                    (full.kerr.abs(), naive.kerr.abs())
                } else {
                    (naive.kerr.abs(), full.kerr.abs())
                };
                max_ratio = max_ratio.max(hi / lo);
            }
        }
        assert!(max_ratio >= 10.0, "max K change factor = {max_ratio}");
    }

    #[test]
    fn distributed_frequency_limits() {
        // M·L_s → 0 pushes the root to the bare resonance; the deviation
        // scales as ω₀ M L_s/(π Z_c), so this inductance keeps it below 1e-9.
        let mut spec = device_c();
        spec.l_j = 1e-21;
        let omega = distributed_frequency(&spec, 0.0).unwrap();
        assert!((omega - spec.omega_0).abs() < 1e-9 * spec.omega_0);

        // M·L_s → ∞ pushes it to zero.
        let mut spec = device_c();
        spec.l_j = 1.0;
        let omega = distributed_frequency(&spec, 0.0).unwrap();
        assert!(omega < 1e-3 * spec.omega_0);
    }

    #[test]
    fn distributed_frequency_decreases_toward_half_flux() {
        let spec = device_c();
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let flux = 0.5 * k as f64 / 20.0;
            let omega = distributed_frequency(&spec, flux).unwrap();
            assert!(omega < prev, "omega_a not monotone at flux {flux}");
            prev = omega;
        }
    }

    #[test]
    fn distributed_three_wave_vanishes_at_symmetry_points() {
        let spec = device_c();
        for &flux in &[0.0, 0.5] {
            let mode = distributed_nonlinearities(&spec, flux).unwrap();
            assert!(mode.g3.abs() < 1e-3, "g3 = {} at flux {flux}", mode.g3);
        }
    }

    #[test]
    fn distributed_kerr_identity_holds_by_construction() {
        let spec = device_c();
        for k in 0..=10 {
            let flux = 0.45 * k as f64 / 10.0;
            let mode = distributed_nonlinearities(&spec, flux).unwrap();
            assert!(mode.kerr_identity_residual() < 1e-12);
            assert!(mode.p > 0.0 && mode.p < 1.0);
        }
    }

    #[test]
    fn small_participation_kerr_correction_matches_lumped() {
        // Small x: the distributed c₃² bracket tends to 3c₃²/c₂, the same
        // correction the lumped c̃₄ carries at p → 0. Compare the bracket
        // contents through K on a matched embedding.
        let mut spec = device_c();
        spec.m = 2;
        spec.l_j = 5e-12; // tiny array inductance ⇒ small participation
        let flux = 0.22;
        let dist = distributed_nonlinearities(&spec, flux).unwrap();
        assert!(dist.p < 0.15, "p = {}", dist.p);
        let embedding = LumpedEmbedding::matched_to_frequency(&spec, flux, dist.omega_a).unwrap();
        let lump = lumped_mode_parameters(&spec, &embedding, flux).unwrap();
        let ratio = dist.g3 / lump.g3;
        assert!((ratio - 1.0).abs() < 0.2, "g3 ratio {ratio}");
    }

    #[test]
    fn cross_model_g3_agrees_within_twenty_percent_at_small_participation() {
        // 21-point flux grid, distributed device matched per point to an
        // equivalent lumped embedding while participation stays below 0.15.
        let mut spec = device_c();
        spec.m = 2;
        spec.l_j = 5e-12;
        for k in 0..21 {
            let flux = 0.05 + 0.40 * k as f64 / 20.0;
            let dist = distributed_nonlinearities(&spec, flux).unwrap();
            assert!(dist.p < 0.15, "flux {flux}: p = {}", dist.p);
            let embedding =
                LumpedEmbedding::matched_to_frequency(&spec, flux, dist.omega_a).unwrap();
            let lump = lumped_mode_parameters(&spec, &embedding, flux).unwrap();
            let ratio = dist.g3 / lump.g3;
            assert!(
                (ratio - 1.0).abs() < 0.2,
                "flux {flux}: g3 ratio {ratio} (dist {} vs lumped {})",
                dist.g3,
                lump.g3
            );
        }
    }

    #[test]
    fn cross_model_kerr_agrees_at_vanishing_participation() {
        // At p → 0 the two models' Kerr expressions must coincide
        // (including the c₃² correction); a prefactor slip in either
        // formula would show up here immediately.
        let spec = DeviceSpec::new(5e-12, 2, 0.09, 0.0, 2.0 * PI * 17.9e9, 45.0).unwrap();
        for flux in [0.1, 0.2, 0.3] {
            let dist = distributed_nonlinearities(&spec, flux).unwrap();
            assert!(dist.p < 0.01, "p = {}", dist.p);
            let embedding =
                LumpedEmbedding::matched_to_frequency(&spec, flux, dist.omega_a).unwrap();
            let lump = lumped_mode_parameters(&spec, &embedding, flux).unwrap();
            let ratio = dist.kerr / lump.kerr;
            assert!((ratio - 1.0).abs() < 0.1, "flux {flux}: K ratio {ratio}");
        }
    }

    #[test]
    fn lumped_frequency_also_decreases_toward_half_flux() {
        let spec = device_c();
        let embedding = LumpedEmbedding::from_spec(&spec);
        let mut prev = f64::INFINITY;
        for k in 0..=20 {
            let flux = 0.5 * k as f64 / 20.0;
            let mode = lumped_mode_parameters(&spec, &embedding, flux).unwrap();
            assert!(mode.omega_a < prev, "omega_a not monotone at flux {flux}");
            prev = mode.omega_a;
        }
    }

    #[test]
    fn kerr_free_crossings_of_the_two_models_sit_at_nearby_fluxes() {
        // Cross-model check of the Kerr profile: both models predict a
        // sign change of K for the low-asymmetry array, at comparable
        // flux, when put on common footing through a matched embedding.
        let spec = device_c();
        let dist_root = kerr_free_flux(&spec, ModelTag::Distributed).unwrap();
        let lumped_root = kerr_free_flux(&spec, ModelTag::Lumped).unwrap();
        assert!(
            (dist_root - lumped_root).abs() < 0.1,
            "distributed root {dist_root} vs lumped root {lumped_root}"
        );
    }

    #[test]
    fn kappa_override_interpolates_linearly() {
        let mut spec = device_c();
        spec.kappa_override = Some(alloc::vec![
            (0.0, 2.0 * PI * 90.0e6),
            (0.5, 2.0 * PI * 120.0e6)
        ]);
        let (kappa, estimated) = coupling_kappa(&spec, 2.0 * PI * 7e9, 0.25);
        assert!(!estimated);
        assert!((kappa - 2.0 * PI * 105.0e6).abs() < 1.0);
    }

    #[test]
    fn kappa_is_zero_without_coupling_capacitor() {
        let mut spec = device_c();
        spec.c_c = 0.0;
        let (kappa, estimated) = coupling_kappa(&spec, 2.0 * PI * 7e9, 0.1);
        assert!(estimated);
        assert_eq!(kappa, 0.0);
    }

    #[test]
    fn kappa_estimate_is_right_order_of_magnitude_for_real_coupler() {
        let spec = device_c();
        let omega_a = distributed_frequency(&spec, 0.25).unwrap();
        let (kappa, estimated) = coupling_kappa(&spec, omega_a, 0.25);
        assert!(estimated);
        let khz = kappa / (2.0 * PI) / 1e6;
        assert!(khz > 10.0 && khz < 1200.0, "kappa/2pi = {khz} MHz");
    }

    #[test]
    fn kerr_free_flux_found_for_low_asymmetry_array() {
        let spec = device_c();
        let root = kerr_free_flux(&spec, ModelTag::Distributed).unwrap();
        assert!(root > 0.3 && root < 0.5, "root at {root}");
        let below = distributed_nonlinearities(&spec, root - 0.01).unwrap();
        let above = distributed_nonlinearities(&spec, root + 0.01).unwrap();
        assert!(below.kerr.signum() != above.kerr.signum());
    }

    #[test]
    fn kerr_free_crossing_is_steeper_for_high_asymmetry() {
        let steep = device_a();
        let shallow = device_c();
        let slope = |spec: &DeviceSpec| -> f64 {
            let root = kerr_free_flux(spec, ModelTag::Distributed).unwrap();
            let h = 5e-4;
            let lo = distributed_nonlinearities(spec, root - h).unwrap().kerr;
            let hi = distributed_nonlinearities(spec, root + h).unwrap().kerr;
            ((hi - lo) / (2.0 * h)).abs()
        };
        let ratio = slope(&steep) / slope(&shallow);
        assert!(ratio >= 10.0, "slope ratio {ratio}");
    }

    #[test]
    fn kerr_is_even_in_flux() {
        let spec = device_c();
        for k in 1..=8 {
            let flux = 0.45 * k as f64 / 8.0;
            let plus = distributed_nonlinearities(&spec, flux).unwrap();
            let minus = distributed_nonlinearities(&spec, -flux).unwrap();
            assert!((plus.kerr - minus.kerr).abs() <= 1e-9 * plus.kerr.abs().max(1.0));
            assert!((plus.g3 + minus.g3).abs() <= 1e-9 * plus.g3.abs().max(1.0));
        }
    }

    #[test]
    fn flux_sweep_is_deterministic_and_respects_symmetry_zeros() {
        let spec = device_c();
        let grid: Vec<f64> = (0..=20).map(|k| 0.5 * k as f64 / 20.0).collect();
        let a = flux_sweep(&spec, &grid, ModelTag::Distributed);
        let b = flux_sweep(&spec, &grid, ModelTag::Distributed);
        for (pa, pb) in a.iter().zip(&b) {
            let (ma, mb) = (pa.1.as_ref().unwrap(), pb.1.as_ref().unwrap());
            assert_eq!(ma.omega_a.to_bits(), mb.omega_a.to_bits());
            assert_eq!(ma.g3.to_bits(), mb.g3.to_bits());
        }
        let first = a.first().unwrap().1.as_ref().unwrap();
        let last = a.last().unwrap().1.as_ref().unwrap();
        let peak = a
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok().map(|m| m.g3.abs()))
            .fold(0.0f64, f64::max);
        assert!(first.g3.abs() < 1e-10 * peak);
        assert!(last.g3.abs() < 1e-10 * peak);
    }

    #[test]
    fn device_b_three_wave_span_covers_two_orders_of_magnitude() {
        let spec = DeviceSpec::new(67e-12, 10, 0.29, 0.039e-12, 2.0 * PI * 11.4e9, 45.0).unwrap();
        let grid: Vec<f64> = (1..50).map(|k| 0.5 * k as f64 / 50.0).collect();
        let sweep = flux_sweep(&spec, &grid, ModelTag::Distributed);
        let magnitudes: Vec<f64> = sweep
            .iter()
            .filter_map(|(_, r)| r.as_ref().ok().map(|m| m.g3.abs()))
            .collect();
        let max = magnitudes.iter().cloned().fold(0.0f64, f64::max);
        let min = magnitudes.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min >= 100.0, "span {max}/{min}");
    }

    #[test]
    fn hysteretic_device_is_refused_without_override() {
        let mut spec = device_a();
        spec.alpha = 0.4;
        assert!(matches!(
            distributed_nonlinearities(&spec, 0.1),
            Err(Error::HystereticDevice { .. })
        ));
        spec.allow_hysteretic = true;
        assert!(distributed_nonlinearities(&spec, 0.1).is_ok());
    }
}
