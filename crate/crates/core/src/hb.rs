//! Semiclassical harmonic-balance solver for the driven SPA mode.
//!
//! The mode is pumped near twice its resonance and probed near resonance;
//! retaining the pump, signal, and idler harmonics (ω_i = ω_p − ω_s) in the
//! equations of motion gives a self-consistent system for the intracavity
//! amplitudes (order 1):
//!
//! ```text
//! (ω_p − ω_a + i(2/3)κ − g₄[(32/9)n_p + 16n_s + 16n_i]) α_p = u_p + 6g₃ α_i α_s
//! (ω_s − ω_a + i(κ/2)  − g₄[(32/3)n_p + 12n_s + 12n_i]) α_s = u_s + 4g₃ α_p α_i*
//! (ω_i − ω_a + i(κ/2)  − g₄[(32/3)n_p + 12n_i + 12n_s]) α_i = u_i + 4g₃ α_p α_s*
//! ```
//!
//! with n_k = |α_k|². Order 2 folds the next ring of harmonics (2ω_p, 2ω_s,
//! 2ω_i, ω_p ± ω_s, ω_s − ω_i, dc) back onto the same three amplitudes,
//! adding cascaded-three-wave Stark terms to the diagonals:
//!
//! ```text
//! pump   diagonal += (g₃²/ω_c)[(928/45)n_p + 42n_s + 42n_i]
//! signal diagonal += 4(g₃²/ω_c)[7n_p + 15n_s + 36n_i]
//! idler  diagonal += 4(g₃²/ω_c)[7n_p + 36n_s + 15n_i]
//! ```
//!
//! ω_c is the cascade frequency, taken equal to ω_a unless overridden.
//! These coefficient sets are implemented verbatim — no re-derivation.
//!
//! The system is solved by Newton iteration on the six real unknowns with
//! an analytic Jacobian, with deterministic drive-ramp continuation (pump
//! first, then signal), step-halving on failure, and no randomized starts:
//! identical inputs produce bitwise-identical solutions.
//!
//! Reflection gain follows from the solved amplitudes:
//!
//! ```text
//! G = 1 + 4κ²|g_eff|² / ((Δ_eff² − ω² + κ²/4 − 4|g_eff|²)² + (κω)²)
//! ```
//!
//! with g_eff = 2g₃α_p, ω = ω_s − ω_p/2, and Δ_eff the signal-equation
//! effective detuning evaluated at the solution. The parametric instability
//! sits where the first denominator term reaches zero at the small-signal
//! fixed point; drives beyond it are refused rather than solved.

#[allow(unused_imports)]
use num_traits::Float as _;

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::circuit::ModeParameters;
use crate::consts::{HBAR, MILLIWATT};
use crate::error::{Error, Result};
use crate::linalg::solve_real;

/// Input power [W] → dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * (watts / MILLIWATT).log10()
}

/// dBm → power [W].
pub fn dbm_to_watts(dbm: f64) -> f64 {
    MILLIWATT * 10.0_f64.powf(dbm / 10.0)
}

/// Classical drive amplitudes [rad/s] applied at the pump, signal, and
/// idler frequencies.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveSet {
    /// Pump drive at ω_p.
    pub u_p: Complex64,
    /// Signal drive at ω_s.
    pub u_s: Complex64,
    /// Idler drive at ω_i = ω_p − ω_s (zero in the standard experiment).
    pub u_i: Complex64,
    /// Pump frequency [rad/s].
    pub omega_p: f64,
    /// Signal frequency [rad/s].
    pub omega_s: f64,
}

impl DriveSet {
    /// Validated constructor; requires ω_p, ω_s and ω_i = ω_p − ω_s > 0.
    pub fn new(
        u_p: Complex64,
        u_s: Complex64,
        u_i: Complex64,
        omega_p: f64,
        omega_s: f64,
    ) -> Result<Self> {
        if !(omega_p > 0.0 && omega_s > 0.0 && omega_p - omega_s > 0.0) {
            return Err(Error::InvalidParameter(
                "drive frequencies must satisfy omega_p > omega_s > 0 and omega_i > 0",
            ));
        }
        Ok(Self {
            u_p,
            u_s,
            u_i,
            omega_p,
            omega_s,
        })
    }

    /// Idler frequency ω_i = ω_p − ω_s [rad/s].
    pub fn omega_i(&self) -> f64 {
        self.omega_p - self.omega_s
    }

    /// Signal detuning ω = ω_s − ω_p/2 [rad/s].
    pub fn omega_offset(&self) -> f64 {
        self.omega_s - 0.5 * self.omega_p
    }
}

/// Solver schedule and model options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbOptions {
    /// Continuation budget per drive ramp.
    pub max_ramp_steps: usize,
    /// Newton iterations per continuation step.
    pub max_newton_iter: usize,
    /// Residual tolerance, relative to max(|u|, κ).
    pub tol: f64,
    /// Pump-calibration gain tolerance [dB].
    pub calibration_tol_db: f64,
    /// Cascade frequency ω_c for the order-2 terms; `None` means ω_a.
    pub omega_c: Option<f64>,
    /// Multiplier on the order-2 g₃²/ω_c brackets (1 = physical; 0 turns
    /// order 2 into order 1 exactly).
    pub cascade_scale: f64,
    /// Freeze the pump at its signal-free value (stiff-pump approximation).
    pub stiff_pump: bool,
}

impl Default for HbOptions {
    fn default() -> Self {
        Self {
            max_ramp_steps: 50,
            max_newton_iter: 100,
            tol: 1e-12,
            calibration_tol_db: 0.01,
            omega_c: None,
            cascade_scale: 1.0,
            stiff_pump: false,
        }
    }
}

/// Converged intracavity amplitudes and derived effective quantities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HbSolution {
    /// Signal amplitude (dimensionless).
    pub alpha_s: Complex64,
    /// Idler amplitude.
    pub alpha_i: Complex64,
    /// Pump amplitude.
    pub alpha_p: Complex64,
    /// Harmonic-balance truncation order (1 or 2).
    pub order: u32,
    /// Final residual 2-norm [rad/s].
    pub residual_norm: f64,
    /// Effective pump detuning Δ_eff at the solution [rad/s].
    pub delta_eff: f64,
    /// Effective parametric coupling g_eff = 2g₃α_p [rad/s].
    pub g_eff: Complex64,
    /// True when the residual met tolerance.
    pub converged: bool,
}

/// A calibrated amplification bias point.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatingPoint {
    /// Mode parameters the calibration was run against.
    pub mode: ModeParameters,
    /// Pump frequency [rad/s] (2ω_a for Δ = 0 operation).
    pub omega_p: f64,
    /// Calibrated pump drive amplitude [rad/s], real-positive phase.
    pub u_p: Complex64,
    /// Small-signal power gain achieved at calibration.
    pub g0: f64,
    /// Pump power referred to the input port [dBm].
    pub pump_power_dbm: f64,
    /// Truncation order used during calibration.
    pub order: u32,
    /// Solver options used during calibration.
    pub options: HbOptions,
}

impl OperatingPoint {
    /// Pump detuning Δ = ω_a − ω_p/2 [rad/s].
    pub fn delta(&self) -> f64 {
        self.mode.omega_a - 0.5 * self.omega_p
    }
}

/// Invert P = (ħω_a/κ)|u|²(ω_a/ω)² for the drive amplitude [rad/s].
pub fn drive_from_power(power_watts: f64, omega: f64, mode: &ModeParameters) -> f64 {
    debug_assert!(power_watts >= 0.0);
    (power_watts * mode.kappa / (HBAR * mode.omega_a)).sqrt() * (omega / mode.omega_a)
}

/// Input (or output) power [W] carried by a drive amplitude at `omega`.
pub fn power_from_drive(u: f64, omega: f64, mode: &ModeParameters) -> f64 {
    (HBAR * mode.omega_a / mode.kappa) * u * u * (mode.omega_a / omega).powi(2)
}

/// Photon-number Stark coefficients of one equation's diagonal.
struct Diagonal {
    base: Complex64,
    dn_p: f64,
    dn_s: f64,
    dn_i: f64,
}

impl Diagonal {
    fn value(&self, n_p: f64, n_s: f64, n_i: f64) -> Complex64 {
        self.base + Complex64::new(self.dn_p * n_p + self.dn_s * n_s + self.dn_i * n_i, 0.0)
    }
}

struct System {
    pump: Diagonal,
    signal: Diagonal,
    idler: Diagonal,
    g3: f64,
    u_p: Complex64,
    u_s: Complex64,
    u_i: Complex64,
    stiff_pump: Option<Complex64>,
}

impl System {
    fn build(mode: &ModeParameters, drives: &DriveSet, order: u32, opts: &HbOptions) -> Self {
        let omega_i = drives.omega_i();
        let kappa = mode.kappa;
        let g4 = mode.g4;
        let cascade = if order >= 2 {
            let omega_c = opts.omega_c.unwrap_or(mode.omega_a);
            opts.cascade_scale * mode.g3 * mode.g3 / omega_c
        } else {
            0.0
        };
        let pump = Diagonal {
            base: Complex64::new(drives.omega_p - mode.omega_a, 2.0 / 3.0 * kappa),
            dn_p: -g4 * 32.0 / 9.0 + cascade * 928.0 / 45.0,
            dn_s: -g4 * 16.0 + cascade * 42.0,
            dn_i: -g4 * 16.0 + cascade * 42.0,
        };
        let signal = Diagonal {
            base: Complex64::new(drives.omega_s - mode.omega_a, 0.5 * kappa),
            dn_p: -g4 * 32.0 / 3.0 + cascade * 28.0,
            dn_s: -g4 * 12.0 + cascade * 60.0,
            dn_i: -g4 * 12.0 + cascade * 144.0,
        };
        let idler = Diagonal {
            base: Complex64::new(omega_i - mode.omega_a, 0.5 * kappa),
            dn_p: -g4 * 32.0 / 3.0 + cascade * 28.0,
            dn_s: -g4 * 12.0 + cascade * 144.0,
            dn_i: -g4 * 12.0 + cascade * 60.0,
        };
        Self {
            pump,
            signal,
            idler,
            g3: mode.g3,
            u_p: drives.u_p,
            u_s: drives.u_s,
            u_i: drives.u_i,
            stiff_pump: None,
        }
    }

    fn residual(&self, a: &[Complex64; 3]) -> [Complex64; 3] {
        let (ap, as_, ai) = (a[0], a[1], a[2]);
        let (n_p, n_s, n_i) = (ap.norm_sqr(), as_.norm_sqr(), ai.norm_sqr());
        let g3 = self.g3;
        let f_p = self.pump.value(n_p, n_s, n_i) * ap - self.u_p - 6.0 * g3 * ai * as_;
        let f_s = self.signal.value(n_p, n_s, n_i) * as_ - self.u_s - 4.0 * g3 * ap * ai.conj();
        let f_i = self.idler.value(n_p, n_s, n_i) * ai - self.u_i - 4.0 * g3 * ap * as_.conj();
        [f_p, f_s, f_i]
    }

    /// Residual norm over the equations Newton actually solves. With a
    /// pinned pump the pump equation is excluded: its imbalance is the
    /// stiff-pump approximation itself, not a convergence failure.
    fn residual_norm(&self, a: &[Complex64; 3]) -> f64 {
        let f = self.residual(a);
        let pump_part = if self.stiff_pump.is_some() {
            0.0
        } else {
            f[0].norm_sqr()
        };
        (pump_part + f[1].norm_sqr() + f[2].norm_sqr()).sqrt()
    }

    /// Wirtinger Jacobian blocks (∂F_k/∂α_j, ∂F_k/∂α_j*).
    fn jacobian(&self, a: &[Complex64; 3]) -> [[(Complex64, Complex64); 3]; 3] {
        let (ap, as_, ai) = (a[0], a[1], a[2]);
        let (n_p, n_s, n_i) = (ap.norm_sqr(), as_.norm_sqr(), ai.norm_sqr());
        let g3 = self.g3;
        let rows = [&self.pump, &self.signal, &self.idler];
        let amps = [ap, as_, ai];
        let zero = Complex64::new(0.0, 0.0);
        let mut out = [[(zero, zero); 3]; 3];
        for (r, diag) in rows.iter().enumerate() {
            let dn = [diag.dn_p, diag.dn_s, diag.dn_i];
            for c in 0..3 {
                // Diagonal-operator contribution: D(n)·α_r differentiated
                // through both D and α_r.
                let mut da = amps[r] * dn[c] * amps[c].conj();
                let dconj = amps[r] * dn[c] * amps[c];
                if r == c {
                    da += diag.value(n_p, n_s, n_i);
                }
                out[r][c] = (da, dconj);
            }
        }
        // Three-wave couplings.
        out[0][1].0 -= 6.0 * g3 * ai; // ∂F_p/∂α_s
        out[0][2].0 -= 6.0 * g3 * as_; // ∂F_p/∂α_i
        out[1][0].0 -= 4.0 * g3 * ai.conj(); // ∂F_s/∂α_p
        out[1][2].1 -= 4.0 * g3 * ap; // ∂F_s/∂α_i*
        out[2][0].0 -= 4.0 * g3 * as_.conj(); // ∂F_i/∂α_p
        out[2][1].1 -= 4.0 * g3 * ap; // ∂F_i/∂α_s*
        out
    }

    /// One Newton solve from `seed`. Free pump solves all six real
    /// components; stiff pump freezes α_p and solves the remaining four.
    fn newton(
        &self,
        seed: [Complex64; 3],
        tol_abs: f64,
        max_iter: usize,
    ) -> Option<[Complex64; 3]> {
        let mut a = seed;
        if let Some(pinned) = self.stiff_pump {
            a[0] = pinned;
        }
        let free: &[usize] = if self.stiff_pump.is_some() {
            &[1, 2]
        } else {
            &[0, 1, 2]
        };
        let n = 2 * free.len();
        for _ in 0..max_iter {
            let f = self.residual(&a);
            let norm = self.residual_norm(&a);
            if norm <= tol_abs {
                return Some(a);
            }
            let jac = self.jacobian(&a);
            let mut matrix = alloc::vec![0.0; n * n];
            let mut rhs = alloc::vec![0.0; n];
            for (ri, &r) in free.iter().enumerate() {
                rhs[2 * ri] = -f[r].re;
                rhs[2 * ri + 1] = -f[r].im;
                for (ci, &c) in free.iter().enumerate() {
                    let (da, dconj) = jac[r][c];
                    // α = x + iy: ∂F/∂x = da + dconj, ∂F/∂y = i(da − dconj).
                    let dx = da + dconj;
                    let dy = Complex64::new(0.0, 1.0) * (da - dconj);
                    matrix[(2 * ri) * n + 2 * ci] = dx.re;
                    matrix[(2 * ri) * n + 2 * ci + 1] = dy.re;
                    matrix[(2 * ri + 1) * n + 2 * ci] = dx.im;
                    matrix[(2 * ri + 1) * n + 2 * ci + 1] = dy.im;
                }
            }
            let step = solve_real(&mut matrix, &mut rhs)?;
            // Damped update: halve the step while the residual grows.
            let mut lambda = 1.0f64;
            let mut improved = false;
            for _ in 0..25 {
                let mut trial = a;
                for (ri, &r) in free.iter().enumerate() {
                    trial[r] =
                        a[r] + Complex64::new(lambda * step[2 * ri], lambda * step[2 * ri + 1]);
                }
                let trial_norm = self.residual_norm(&trial);
                if trial_norm < norm {
                    a = trial;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                return None;
            }
        }
        if self.residual_norm(&a) <= tol_abs {
            Some(a)
        } else {
            None
        }
    }
}

fn tolerance_scale(mode: &ModeParameters, drives: &DriveSet) -> f64 {
    drives
        .u_p
        .norm()
        .max(drives.u_s.norm())
        .max(drives.u_i.norm())
        .max(mode.kappa)
}

/// Signal-equation effective detuning at given amplitudes (order-aware).
fn effective_detuning(
    mode: &ModeParameters,
    drives: &DriveSet,
    a: &[Complex64; 3],
    order: u32,
    opts: &HbOptions,
) -> f64 {
    let delta = mode.omega_a - 0.5 * drives.omega_p;
    let (n_p, n_s, n_i) = (a[0].norm_sqr(), a[1].norm_sqr(), a[2].norm_sqr());
    let mut d = delta + mode.g4 * (32.0 / 3.0 * n_p + 12.0 * n_s + 12.0 * n_i);
    if order >= 2 {
        let omega_c = opts.omega_c.unwrap_or(mode.omega_a);
        d -= opts.cascade_scale * 4.0 * mode.g3 * mode.g3 / omega_c
            * (7.0 * n_p + 15.0 * n_s + 36.0 * n_i);
    }
    d
}

fn solution_from(
    mode: &ModeParameters,
    drives: &DriveSet,
    a: [Complex64; 3],
    order: u32,
    opts: &HbOptions,
    system: &System,
    tol_abs: f64,
) -> HbSolution {
    let residual_norm = system.residual_norm(&a);
    HbSolution {
        alpha_p: a[0],
        alpha_s: a[1],
        alpha_i: a[2],
        order,
        residual_norm,
        delta_eff: effective_detuning(mode, drives, &a, order, opts),
        g_eff: 2.0 * mode.g3 * a[0],
        converged: residual_norm <= tol_abs,
    }
}

/// Pump-only fixed point (α_s = α_i = 0 solves the signal and idler
/// equations exactly when their drives vanish).
fn solve_pump_only(
    mode: &ModeParameters,
    drives: &DriveSet,
    order: u32,
    opts: &HbOptions,
) -> Result<Complex64> {
    let zero = Complex64::new(0.0, 0.0);
    let bare = DriveSet {
        u_s: zero,
        u_i: zero,
        ..*drives
    };
    let tol_abs = opts.tol * tolerance_scale(mode, &bare);
    let mut alpha_p = zero;
    let mut fraction = 0.0f64;
    let mut step = 1.0f64;
    let mut advances = 0usize;
    while fraction < 1.0 {
        // The budget counts completed continuation steps; halvings retry
        // the same increment and only the minimum step size bounds them.
        if advances >= opts.max_ramp_steps.max(1) {
            let system = System {
                u_p: drives.u_p * fraction,
                ..System::build(mode, &bare, order, opts)
            };
            return Err(Error::NonConvergence {
                residual: system.residual_norm(&[alpha_p, zero, zero]),
                steps: advances,
            });
        }
        let target = (fraction + step).min(1.0);
        let partial = System {
            u_p: drives.u_p * target,
            ..System::build(mode, &bare, order, opts)
        };
        match partial.newton([alpha_p, zero, zero], tol_abs, opts.max_newton_iter) {
            Some(sol) => {
                alpha_p = sol[0];
                fraction = target;
                step = (step * 2.0).min(1.0);
                advances += 1;
            }
            None => {
                step *= 0.5;
                if step < 1e-9 {
                    return Err(Error::NonConvergence {
                        residual: f64::NAN,
                        steps: advances,
                    });
                }
            }
        }
    }
    Ok(alpha_p)
}

/// Instability margin at the signal-free fixed point:
/// Δ_eff² + κ²/4 − 4|g_eff|².
fn instability_margin(
    mode: &ModeParameters,
    drives: &DriveSet,
    alpha_p: Complex64,
    order: u32,
    opts: &HbOptions,
) -> f64 {
    let zero = Complex64::new(0.0, 0.0);
    let a = [alpha_p, zero, zero];
    let delta_eff = effective_detuning(mode, drives, &a, order, opts);
    let g_eff = 2.0 * mode.g3 * alpha_p;
    delta_eff * delta_eff + 0.25 * mode.kappa * mode.kappa - 4.0 * g_eff.norm_sqr()
}

/// Solve the coupled pump/signal/idler system at truncation `order` (1 | 2).
///
/// Continuation ramps the pump drive from zero first (≤ `max_ramp_steps`
/// steps with halving), checks the parametric-instability margin at the
/// signal-free fixed point, then ramps the signal and idler drives.
pub fn hb_solve(
    mode: &ModeParameters,
    drives: &DriveSet,
    order: u32,
    opts: &HbOptions,
) -> Result<HbSolution> {
    hb_solve_inner(mode, drives, order, opts, None)
}

/// As [`hb_solve`], warm-starting Newton from a previous solution (used by
/// power sweeps); falls back to the full continuation if the warm start
/// fails. The warm-start chain is an explicit input, never hidden state.
pub fn hb_solve_warm(
    mode: &ModeParameters,
    drives: &DriveSet,
    order: u32,
    opts: &HbOptions,
    previous: &HbSolution,
) -> Result<HbSolution> {
    hb_solve_inner(
        mode,
        drives,
        order,
        opts,
        Some([previous.alpha_p, previous.alpha_s, previous.alpha_i]),
    )
}

fn hb_solve_inner(
    mode: &ModeParameters,
    drives: &DriveSet,
    order: u32,
    opts: &HbOptions,
    warm: Option<[Complex64; 3]>,
) -> Result<HbSolution> {
    if order != 1 && order != 2 {
        return Err(Error::InvalidParameter("order must be 1 or 2"));
    }
    let zero = Complex64::new(0.0, 0.0);
    let tol_abs = opts.tol * tolerance_scale(mode, drives);

    // Warm start: try the full system directly.
    if let Some(seed) = warm {
        let mut system = System::build(mode, drives, order, opts);
        if opts.stiff_pump {
            system.stiff_pump = Some(solve_pump_only(mode, drives, order, opts)?);
        }
        if let Some(a) = system.newton(seed, tol_abs, opts.max_newton_iter) {
            return Ok(solution_from(
                mode, drives, a, order, opts, &system, tol_abs,
            ));
        }
    }

    // Stage 1: pump ramp.
    let alpha_p = solve_pump_only(mode, drives, order, opts)?;

    // Instability gate at the small-signal fixed point.
    if instability_margin(mode, drives, alpha_p, order, opts) <= 0.0 {
        return Err(Error::AboveInstability);
    }

    // Stage 2: signal/idler ramp.
    let mut system = System::build(mode, drives, order, opts);
    if opts.stiff_pump {
        system.stiff_pump = Some(alpha_p);
    }
    let mut a = [alpha_p, zero, zero];
    let mut fraction = 0.0f64;
    let mut step = 1.0f64;
    let mut advances = 0usize;
    while fraction < 1.0 {
        if advances >= opts.max_ramp_steps.max(1) {
            return Err(Error::NonConvergence {
                residual: system.residual_norm(&a),
                steps: advances,
            });
        }
        let target = (fraction + step).min(1.0);
        let mut partial = System {
            u_s: drives.u_s * target,
            u_i: drives.u_i * target,
            ..System::build(mode, drives, order, opts)
        };
        partial.stiff_pump = system.stiff_pump;
        match partial.newton(a, tol_abs, opts.max_newton_iter) {
            Some(sol) => {
                let amp = sol[1].norm().max(sol[2].norm());
                if !amp.is_finite() {
                    return Err(Error::AboveInstability);
                }
                a = sol;
                fraction = target;
                step = (step * 2.0).min(1.0);
                advances += 1;
            }
            None => {
                step *= 0.5;
                if step < 1e-9 {
                    return Err(Error::NonConvergence {
                        residual: system.residual_norm(&a),
                        steps: advances,
                    });
                }
            }
        }
    }
    Ok(solution_from(
        mode, drives, a, order, opts, &system, tol_abs,
    ))
}

/// Stiff-pump linear response: hold α_p fixed and scatter (u_s, u_i*)
/// through the 2×2 susceptibility
///
/// ```text
/// (α_s, α_i*) = (1/𝒟) [ −ω − Δ_eff − iκ/2    2g_eff            ] (u_s )
///                      [ 2g_eff*             ω − Δ_eff + iκ/2  ] (u_i*)
/// 𝒟 = Δ_eff² − ω² + κ²/4 − 4|g_eff|² − iκω
/// ```
///
/// Returns (α_s, α_i*). Fails when |𝒟| < 1e-15·κ² (at threshold).
pub fn linear_response(
    mode: &ModeParameters,
    omega_p: f64,
    alpha_p: Complex64,
    u_s: Complex64,
    u_i: Complex64,
    omega: f64,
) -> Result<(Complex64, Complex64)> {
    let kappa = mode.kappa;
    let delta = mode.omega_a - 0.5 * omega_p;
    let delta_eff = delta + mode.g4 * (32.0 / 3.0) * alpha_p.norm_sqr();
    let g_eff = 2.0 * mode.g3 * alpha_p;
    let denom = Complex64::new(
        delta_eff * delta_eff - omega * omega + 0.25 * kappa * kappa - 4.0 * g_eff.norm_sqr(),
        -kappa * omega,
    );
    if denom.norm() < 1e-15 * kappa * kappa {
        return Err(Error::SingularDenominator);
    }
    let m00 = Complex64::new(-omega - delta_eff, -0.5 * kappa);
    let m11 = Complex64::new(omega - delta_eff, 0.5 * kappa);
    let alpha_s = (m00 * u_s + 2.0 * g_eff * u_i.conj()) / denom;
    let alpha_i_conj = (2.0 * g_eff.conj() * u_s + m11 * u_i.conj()) / denom;
    Ok((alpha_s, alpha_i_conj))
}

/// Reflection power gain at signal detuning ω = ω_s − ω_p/2, from the
/// effective quantities of a converged solution.
pub fn gain(mode: &ModeParameters, sol: &HbSolution, omega: f64) -> f64 {
    let kappa = mode.kappa;
    let b = 4.0 * sol.g_eff.norm_sqr();
    let core = sol.delta_eff * sol.delta_eff - omega * omega + 0.25 * kappa * kappa - b;
    1.0 + kappa * kappa * b / (core * core + kappa * kappa * omega * omega)
}

/// Closed-form small-signal gain: the pump is solved alone (so
/// Δ_p = Δ + (32/3)g₄|α_p|², g = 2g₃α_p) and the signal never back-acts.
/// This is the stiff-pump, zero-signal limit the full solver must
/// reproduce at vanishing input power.
pub fn closed_form_gain(
    mode: &ModeParameters,
    omega_p: f64,
    u_p: Complex64,
    omega: f64,
    opts: &HbOptions,
) -> Result<f64> {
    let zero = Complex64::new(0.0, 0.0);
    let drives = DriveSet::new(u_p, zero, zero, omega_p, 0.5 * omega_p - 1.0)?;
    let alpha_p = solve_pump_only(mode, &drives, 1, opts)?;
    let delta = mode.omega_a - 0.5 * omega_p;
    let delta_p = delta + mode.g4 * (32.0 / 3.0) * alpha_p.norm_sqr();
    let g = 2.0 * mode.g3 * alpha_p;
    let kappa = mode.kappa;
    let b = 4.0 * g.norm_sqr();
    let core = delta_p * delta_p - omega * omega + 0.25 * kappa * kappa - b;
    Ok(1.0 + kappa * kappa * b / (core * core + kappa * kappa * omega * omega))
}

/// Probe power used to measure small-signal gain [dBm].
pub const SMALL_SIGNAL_PROBE_DBM: f64 = -170.0;
/// Probe offset from ω_p/2 [rad/s]; 1 Hz keeps signal and idler distinct.
pub const SMALL_SIGNAL_PROBE_OFFSET: f64 = 2.0 * PI;

/// Small-signal gain of a pump bias, measured the way the experiments do:
/// a −170 dBm probe 1 Hz above ω_p/2.
pub fn small_signal_gain(
    mode: &ModeParameters,
    omega_p: f64,
    u_p: Complex64,
    order: u32,
    opts: &HbOptions,
) -> Result<f64> {
    let omega_s = 0.5 * omega_p + SMALL_SIGNAL_PROBE_OFFSET;
    let u_s = drive_from_power(dbm_to_watts(SMALL_SIGNAL_PROBE_DBM), omega_s, mode);
    let zero = Complex64::new(0.0, 0.0);
    let drives = DriveSet::new(u_p, Complex64::new(u_s, 0.0), zero, omega_p, omega_s)?;
    let sol = hb_solve(mode, &drives, order, opts)?;
    Ok(gain(mode, &sol, SMALL_SIGNAL_PROBE_OFFSET))
}

/// Find the pump drive delivering `target_g0` of small-signal gain at
/// Δ = 0 (ω_p = 2ω_a), by bisection on log|u_p| to 0.01 dB.
pub fn calibrate_pump(
    mode: &ModeParameters,
    target_g0: f64,
    order: u32,
    opts: &HbOptions,
) -> Result<OperatingPoint> {
    if target_g0.is_nan() || target_g0 < 1.0 {
        return Err(Error::InvalidParameter("target_g0 must be >= 1"));
    }
    let omega_p = 2.0 * mode.omega_a;
    let zero = Complex64::new(0.0, 0.0);
    if target_g0 == 1.0 {
        return Ok(OperatingPoint {
            mode: *mode,
            omega_p,
            u_p: zero,
            g0: 1.0,
            pump_power_dbm: f64::NEG_INFINITY,
            order,
            options: *opts,
        });
    }
    if mode.g3 == 0.0 {
        return Err(Error::TargetUnreachable { best_gain: 1.0 });
    }
    let target_db = 10.0 * target_g0.log10();

    // Scale from the instability condition: |g_eff| = κ/4 at threshold with
    // Δ_eff = 0, and u_p ≈ |α_p|·ω_a for the off-resonant pump response.
    let u_threshold = mode.kappa / 4.0 / (2.0 * mode.g3.abs()) * mode.omega_a;
    let mut lo = 0.01 * u_threshold;
    let mut gain_lo = small_signal_gain(mode, omega_p, Complex64::new(lo, 0.0), order, opts)?;
    let mut best_gain = gain_lo;
    // Shrink until the low bracket is genuinely below target.
    while gain_lo >= target_g0 {
        lo *= 0.25;
        gain_lo = small_signal_gain(mode, omega_p, Complex64::new(lo, 0.0), order, opts)?;
        if lo < 1e-12 * u_threshold {
            break;
        }
    }
    // Grow the high bracket until gain crosses the target or the drive hits
    // the instability. With enough Kerr the pump Stark shift detunes the
    // amplifier faster than |g_eff| grows and the gain has an interior
    // maximum below target; a falling gain far from it means unreachable.
    let mut hi = lo;
    let mut hi_unstable = false;
    loop {
        let trial = hi * 2.0;
        match small_signal_gain(mode, omega_p, Complex64::new(trial, 0.0), order, opts) {
            Ok(g) => {
                hi = trial;
                best_gain = best_gain.max(g);
                if g >= target_g0 {
                    break;
                }
                if g < 0.5 * best_gain || trial > 1e6 * u_threshold {
                    return Err(Error::TargetUnreachable { best_gain });
                }
            }
            Err(Error::AboveInstability) => {
                hi = trial;
                hi_unstable = true;
                break;
            }
            Err(Error::NonConvergence { .. }) => {
                // Deep past the usable regime; treat like an unusable edge.
                return Err(Error::TargetUnreachable { best_gain });
            }
            Err(e) => return Err(e),
        }
    }

    // Bisect on log u_p; unstable trials tighten the upper edge.
    let mut ln_lo = lo.ln();
    let mut ln_hi = hi.ln();
    for _ in 0..200 {
        let mid = ((ln_lo + ln_hi) * 0.5).exp();
        match small_signal_gain(mode, omega_p, Complex64::new(mid, 0.0), order, opts) {
            Ok(g) => {
                best_gain = best_gain.max(g);
                let g_db = 10.0 * g.log10();
                if (g_db - target_db).abs() <= opts.calibration_tol_db {
                    return Ok(OperatingPoint {
                        mode: *mode,
                        omega_p,
                        u_p: Complex64::new(mid, 0.0),
                        g0: g,
                        pump_power_dbm: watts_to_dbm(power_from_drive(mid, omega_p, mode)),
                        order,
                        options: *opts,
                    });
                }
                if g < target_g0 {
                    ln_lo = mid.ln();
                } else {
                    ln_hi = mid.ln();
                }
            }
            Err(Error::AboveInstability) => {
                ln_hi = mid.ln();
                hi_unstable = true;
            }
            Err(e) => return Err(e),
        }
        if ln_hi - ln_lo < 1e-14 {
            break;
        }
    }
    if hi_unstable {
        return Err(Error::TargetUnreachable { best_gain });
    }
    Err(Error::NonConvergence {
        residual: f64::NAN,
        steps: 200,
    })
}

/// Gain versus signal detuning at a fixed calibrated pump, plus the full
/// width of the 3 dB band around the peak [rad/s].
pub fn gain_profile(op: &OperatingPoint, omegas: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
    let mode = &op.mode;
    let zero = Complex64::new(0.0, 0.0);
    let mut points = Vec::with_capacity(omegas.len());
    for &omega in omegas {
        let omega_s = 0.5 * op.omega_p + omega;
        let u_s = drive_from_power(dbm_to_watts(SMALL_SIGNAL_PROBE_DBM), omega_s, mode);
        let drives = DriveSet::new(op.u_p, Complex64::new(u_s, 0.0), zero, op.omega_p, omega_s)?;
        let sol = hb_solve(mode, &drives, op.order, &op.options)?;
        points.push((omega, gain(mode, &sol, omega)));
    }
    // 3 dB width about the peak, by linear interpolation on the gain grid.
    let peak = points.iter().map(|&(_, g)| g).fold(f64::MIN, f64::max);
    let half = peak / 2.0;
    let mut left = f64::NAN;
    let mut right = f64::NAN;
    for w in points.windows(2) {
        let ((w0, g0), (w1, g1)) = (w[0], w[1]);
        if (g0 - half) * (g1 - half) <= 0.0 && g1 != g0 {
            let x = w0 + (half - g0) * (w1 - w0) / (g1 - g0);
            if x <= 0.0 && (left.is_nan() || x > left) {
                left = x;
            }
            if x >= 0.0 && right.is_nan() {
                right = x;
            }
        }
    }
    let width = if left.is_finite() && right.is_finite() {
        right - left
    } else {
        f64::NAN
    };
    Ok((points, width))
}
