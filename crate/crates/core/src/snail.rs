//! The flux-biased SNAIL element.
//!
//! A SNAIL is a superconducting loop of three identical large Josephson
//! junctions (inductance `L_J` each) in one arm and a single smaller junction
//! (inductance `L_J/α`) in the other. With a reduced external flux
//! φ_ext = 2πΦ/Φ₀ threading the loop, the element contributes the 6π-periodic
//! potential (in units of the large-junction Josephson energy E_J)
//!
//! ```text
//! u(φ_s) = −α cos(φ_s) − 3 cos((φ_ext − φ_s)/3)
//! ```
//!
//! where φ_s is the phase across the small junction. Everything downstream
//! is driven by the Taylor coefficients cₙ = dⁿu/dφ_sⁿ evaluated at the
//! working minimum: c₂ sets the linear inductance, c₃ the 3-wave mixing,
//! c₄ the Kerr nonlinearity.
//!
//! The working minimum is tracked by continuation in flux from the φ_ext = 0
//! minimum (which sits at φ_s = 0). For α > 1/3 the potential develops
//! multiple inequivalent minima; such elements are flagged hysteretic and the
//! continuation reports a lost branch instead of silently hopping.

#[allow(unused_imports)]
use num_traits::Float as _;

use core::f64::consts::PI;

use crate::consts::REDUCED_FLUX_QUANTUM;
use crate::error::{Error, Result};
use crate::roots::newton_scalar;

/// Number of grid points in the initial minimum scan over [−3π, 3π].
const GRID_POINTS: usize = 1000;
/// Largest flux step [rad] taken by the minimum continuation.
const MAX_FLUX_STEP: f64 = 0.05;
/// c₂ at or below this value is treated as a diverging inductance.
///
/// The ideal symmetric point (α = 1/3, half flux) has c₂ = 0 exactly, but
/// rounding the half-flux bias to f64 splits the degenerate minimum and
/// leaves c₂ ~ 1e-11 at the tracked root, so the floor sits above that.
/// It still only fires within |α − 1/3| ≲ 1e-9 of perfect symmetry.
pub(crate) const C2_DIVERGENCE_FLOOR: f64 = 1e-9;

/// Physical description of one SNAIL at a given flux bias.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnailParams {
    /// Junction inductance ratio α (small-junction inductance is L_J/α).
    pub alpha: f64,
    /// Number of large junctions in the loop. The quoted coefficient
    /// formulas assume 3; other values are untested territory.
    pub n_large: u32,
    /// Reduced external flux φ_ext = 2πΦ/Φ₀ [rad].
    pub phi_ext: f64,
    /// Josephson inductance of one large junction [H].
    pub l_j: f64,
}

impl SnailParams {
    /// Validated constructor with the standard 3 large junctions.
    pub fn new(alpha: f64, phi_ext: f64, l_j: f64) -> Result<Self> {
        if alpha.is_nan() || alpha <= 0.0 || alpha >= 1.0 {
            return Err(Error::InvalidParameter("alpha must satisfy 0 < alpha < 1"));
        }
        if !l_j.is_finite() || l_j <= 0.0 {
            return Err(Error::InvalidParameter("l_j must be positive and finite"));
        }
        if !phi_ext.is_finite() {
            return Err(Error::InvalidParameter("phi_ext must be finite"));
        }
        Ok(Self {
            alpha,
            n_large: 3,
            phi_ext,
            l_j,
        })
    }

    /// Same element at a different flux bias.
    pub fn at_flux(&self, phi_ext: f64) -> Self {
        Self { phi_ext, ..*self }
    }

    /// Josephson energy of one large junction, E_J = φ₀²/L_J [J].
    pub fn e_j(&self) -> f64 {
        REDUCED_FLUX_QUANTUM * REDUCED_FLUX_QUANTUM / self.l_j
    }

    /// True when α > 1/3 and the potential has multiple inequivalent minima.
    pub fn hysteretic(&self) -> bool {
        self.alpha > 1.0 / 3.0
    }
}

/// Taylor expansion of the SNAIL potential about the tracked minimum.
///
/// Coefficients are dimensionless (units of E_J); index 1 is the first
/// derivative. Orders above the requested `max_order` are `NaN`.
#[derive(Debug, Clone, Copy)]
pub struct SnailCoefficients {
    /// Location of the tracked minimum [rad].
    pub phi_min: f64,
    /// Reduced external flux at which the expansion was taken [rad].
    pub phi_ext: f64,
    /// Highest order populated in `c`.
    pub max_order: usize,
    c: [f64; 6],
}

impl SnailCoefficients {
    /// Coefficient cₙ for n in 1..=max_order.
    pub fn c(&self, n: usize) -> f64 {
        debug_assert!(n >= 1 && n <= self.max_order);
        self.c[n - 1]
    }
}

/// SNAIL potential in units of E_J: −α cos(φ_s) − 3 cos((φ_ext − φ_s)/3).
pub fn snail_potential(phi_s: f64, params: &SnailParams) -> f64 {
    -params.alpha * phi_s.cos() - 3.0 * ((params.phi_ext - phi_s) / 3.0).cos()
}

/// n-th derivative of the potential with respect to φ_s (n ≥ 1), analytic.
///
/// Uses dⁿ/dφⁿ cos(aφ + b) = aⁿ cos(aφ + b + nπ/2), with the quarter-turn
/// applied exactly via the n mod 4 branch.
pub fn potential_derivative(n: u32, phi_s: f64, params: &SnailParams) -> f64 {
    debug_assert!(n >= 1);
    // cos(x + nπ/2) without floating-point phase shifts.
    fn cos_shifted(x: f64, n: u32) -> f64 {
        match n % 4 {
            0 => x.cos(),
            1 => -x.sin(),
            2 => -x.cos(),
            _ => x.sin(),
        }
    }
    let u = (phi_s - params.phi_ext) / 3.0;
    // Large-junction arm: φ argument has unit coefficient.
    let large = -3.0 * (1.0f64 / 3.0).powi(n as i32) * cos_shifted(u, n);
    let small = -params.alpha * cos_shifted(phi_s, n);
    small + large
}

/// First derivative c₁(φ_s) = α sin φ_s + sin((φ_s − φ_ext)/3); zero at
/// extrema of the potential.
fn c1(phi_s: f64, params: &SnailParams) -> f64 {
    potential_derivative(1, phi_s, params)
}

/// Second derivative c₂(φ_s); positive at minima.
fn c2(phi_s: f64, params: &SnailParams) -> f64 {
    potential_derivative(2, phi_s, params)
}

fn refine_minimum(params: &SnailParams, seed: f64) -> Option<f64> {
    let phi = newton_scalar(
        |phi| c1(phi, params),
        |phi| c2(phi, params),
        seed,
        1e-18,
        1e-13,
        120,
    )?;
    // Reject saddle points and maxima (degenerate c₂ ≈ 0 is allowed; the
    // inductance check downstream handles it).
    if c2(phi, params) < -1e-9 {
        return None;
    }
    Some(phi)
}

/// Locate the working minimum of the SNAIL potential.
///
/// With `previous` given (a minimum at a nearby flux), the result is the
/// Newton refinement of that seed and must stay within π of it; a larger
/// move means the continuation hopped branches and is reported as
/// [`Error::HystereticBranchLost`].
///
/// Without a seed, the branch continuously connected to the φ_ext = 0
/// minimum is constructed internally: a dense 1000-point scan over
/// [−3π, 3π] at zero flux brackets the starting minimum, then the flux is
/// walked to `params.phi_ext` in steps of at most 0.05 rad with Newton
/// refinement and step halving.
pub fn find_minimum(params: &SnailParams, previous: Option<f64>) -> Result<f64> {
    if let Some(seed) = previous {
        let phi = refine_minimum(params, seed).ok_or(Error::HystereticBranchLost {
            phi_ext: params.phi_ext,
        })?;
        if (phi - seed).abs() > PI {
            return Err(Error::HystereticBranchLost {
                phi_ext: params.phi_ext,
            });
        }
        return Ok(phi);
    }

    // Stage 1: dense grid scan at φ_ext = 0 for a c₁ sign change with c₂ > 0,
    // taking the bracket closest to the origin.
    let zero_flux = params.at_flux(0.0);
    let span = 6.0 * PI;
    let step = span / GRID_POINTS as f64;
    let mut best_seed: Option<f64> = None;
    let mut prev_phi = -3.0 * PI;
    let mut prev_c1 = c1(prev_phi, &zero_flux);
    for k in 1..=GRID_POINTS {
        let phi = -3.0 * PI + k as f64 * step;
        let val = c1(phi, &zero_flux);
        if prev_c1 == 0.0 || prev_c1.signum() != val.signum() {
            let mid = 0.5 * (prev_phi + phi);
            if c2(mid, &zero_flux) > 0.0 {
                let better = match best_seed {
                    Some(current) => mid.abs() < current.abs(),
                    None => true,
                };
                if better {
                    best_seed = Some(mid);
                }
            }
        }
        prev_phi = phi;
        prev_c1 = val;
    }
    let seed = best_seed.ok_or(Error::NoMinimumBracketed)?;
    let mut phi_min = refine_minimum(&zero_flux, seed).ok_or(Error::NoMinimumBracketed)?;

    // Stage 2: Newton continuation in flux with step halving.
    let target = params.phi_ext;
    let mut current = 0.0f64;
    let mut step = MAX_FLUX_STEP * (target - current).signum();
    while (target - current).abs() > 0.0 {
        if (target - current).abs() <= step.abs() {
            step = target - current;
        }
        let next = current + step;
        let trial = params.at_flux(next);
        match refine_minimum(&trial, phi_min) {
            Some(phi) if (phi - phi_min).abs() <= PI => {
                current = next;
                phi_min = phi;
                step = MAX_FLUX_STEP * (target - current).signum().max(-1.0);
                if target == current {
                    break;
                }
            }
            _ => {
                step *= 0.5;
                if step.abs() < 1e-9 {
                    return Err(Error::HystereticBranchLost { phi_ext: next });
                }
            }
        }
    }
    Ok(phi_min)
}

/// Taylor coefficients c₁..c_max_order of the potential at the tracked
/// minimum, computed from the analytic derivatives.
pub fn taylor_coefficients(params: &SnailParams, max_order: usize) -> Result<SnailCoefficients> {
    taylor_coefficients_seeded(params, max_order, None)
}

/// As [`taylor_coefficients`], with an optional continuation seed for the
/// minimum (used by flux sweeps to stay on one branch cheaply).
pub fn taylor_coefficients_seeded(
    params: &SnailParams,
    max_order: usize,
    previous_minimum: Option<f64>,
) -> Result<SnailCoefficients> {
    if !(2..=6).contains(&max_order) {
        return Err(Error::InvalidParameter("max_order must be in 2..=6"));
    }
    let phi_min = find_minimum(params, previous_minimum)?;
    let mut c = [f64::NAN; 6];
    for (idx, slot) in c.iter_mut().enumerate().take(max_order) {
        *slot = potential_derivative(idx as u32 + 1, phi_min, params);
    }
    Ok(SnailCoefficients {
        phi_min,
        phi_ext: params.phi_ext,
        max_order,
        c,
    })
}

/// Linear inductance of the SNAIL, L_s = L_J/c₂(φ_ext) [H].
///
/// Fails with [`Error::DivergentInductance`] when c₂ ≤ 1e-12 (α → 1/3 at
/// half flux drives the inductance to infinity).
pub fn snail_inductance(params: &SnailParams) -> Result<f64> {
    snail_inductance_seeded(params, None)
}

/// As [`snail_inductance`], with a continuation seed for the minimum.
pub fn snail_inductance_seeded(params: &SnailParams, previous_minimum: Option<f64>) -> Result<f64> {
    let coeffs = taylor_coefficients_seeded(params, 2, previous_minimum)?;
    let c2 = coeffs.c(2);
    if c2 <= C2_DIVERGENCE_FLOOR {
        return Err(Error::DivergentInductance);
    }
    Ok(params.l_j / c2)
}
