//! Single-tone driven steady states of the anharmonic mode and weak-probe
//! linear response about them.
//!
//! The classical limit of the quartic-truncated mode Hamiltonian with
//! damping κ is, in the dimensionless quadrature x = a + a*,
//!
//! ```text
//! ẍ + κẋ + ω_a²x + 6ω_a g₃ x² + 8ω_a g₄ x³ = F cos(ω_d t)
//! ```
//!
//! The periodic steady state is found by real Fourier harmonic balance:
//! x(t) = p₀ + Σ_k [p_k cos(kω_d t) + q_k sin(kω_d t)] up to a fixed
//! harmonic count, solved by Newton with an analytic Jacobian. Retaining
//! the dc offset and second harmonic is what lets the cubic term feed back
//! on the fundamental, so the effective Kerr that emerges from these orbits
//! carries the g₃² reduction without it being put in by hand.
//!
//! A weak probe at ω_pr scatters off the orbit through the linearized
//! equation with time-periodic stiffness; its response lives on the
//! frequency comb ω_pr + kω_d and is obtained from one complex linear
//! solve per probe frequency. The probe resonance is wherever that
//! response peaks.

#[allow(unused_imports)]
use num_traits::Float as _;

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;

use crate::circuit::ModeParameters;
use crate::error::{Error, Result};
use crate::linalg::{solve_complex, solve_real};
use crate::roots::golden_section_min;

/// Harmonics retained in the steady-state orbit (and probe comb).
pub const ORBIT_HARMONICS: usize = 6;

/// Periodic steady state of the driven mode.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenOrbit {
    /// Drive frequency [rad/s].
    pub omega_d: f64,
    /// Drive force amplitude F [rad²/s²].
    pub force: f64,
    /// Coefficients [p₀, p₁..p_K, q₁..q_K].
    pub coeffs: Vec<f64>,
    /// Harmonic count K.
    pub harmonics: usize,
}

impl DrivenOrbit {
    fn p(&self, k: usize) -> f64 {
        self.coeffs[k]
    }

    fn q(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        self.coeffs[self.harmonics + k]
    }

    /// Complex Fourier coefficient X_k of x(t) = Σ X_k e^{−ikω_d t}.
    pub fn fourier(&self, k: usize) -> Complex64 {
        if k == 0 {
            Complex64::new(self.p(0), 0.0)
        } else {
            Complex64::new(0.5 * self.p(k), 0.5 * self.q(k))
        }
    }

    /// Mean photon number of the fundamental, n̄ = |X₁|².
    pub fn nbar(&self) -> f64 {
        self.fourier(1).norm_sqr()
    }
}

/// Convert a drive amplitude u [rad/s] (same normalization as the
/// harmonic-balance module) into the force F of the real-coordinate
/// equation; F = 4ω_a u reproduces the linear-resonator response.
pub fn force_from_drive(u: f64, mode: &ModeParameters) -> f64 {
    4.0 * mode.omega_a * u
}

struct OrbitProblem<'a> {
    mode: &'a ModeParameters,
    omega_d: f64,
    force: f64,
    harmonics: usize,
    samples: usize,
}

impl OrbitProblem<'_> {
    fn unknowns(&self) -> usize {
        2 * self.harmonics + 1
    }

    fn sample_orbit(&self, coeffs: &[f64], theta: f64) -> f64 {
        let k_max = self.harmonics;
        let mut x = coeffs[0];
        for k in 1..=k_max {
            x +=
                coeffs[k] * (k as f64 * theta).cos() + coeffs[k_max + k] * (k as f64 * theta).sin();
        }
        x
    }

    /// Residual projected onto the basis [1, cos kθ, sin kθ].
    fn residual(&self, coeffs: &[f64]) -> Vec<f64> {
        let k_max = self.harmonics;
        let n = self.samples;
        let (omega_a, kappa) = (self.mode.omega_a, self.mode.kappa);
        let omega_d = self.omega_d;
        let mut res = alloc::vec![0.0; self.unknowns()];

        // Linear operator, exact in coefficient space.
        res[0] = omega_a * omega_a * coeffs[0];
        for k in 1..=k_max {
            let (p, q) = (coeffs[k], coeffs[k_max + k]);
            let stiff = omega_a * omega_a - (k as f64 * omega_d).powi(2);
            res[k] = stiff * p + kappa * k as f64 * omega_d * q;
            res[k_max + k] = stiff * q - kappa * k as f64 * omega_d * p;
        }
        res[1] -= self.force;

        // Nonlinear terms, projected by uniform quadrature (exact for the
        // cubic's bandwidth at this oversampling).
        let (g3, g4) = (self.mode.g3, self.mode.g4);
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let x = self.sample_orbit(coeffs, theta);
            let nl = 6.0 * omega_a * g3 * x * x + 8.0 * omega_a * g4 * x * x * x;
            res[0] += nl / n as f64;
            for k in 1..=k_max {
                res[k] += 2.0 * nl * (k as f64 * theta).cos() / n as f64;
                res[k_max + k] += 2.0 * nl * (k as f64 * theta).sin() / n as f64;
            }
        }
        res
    }

    fn jacobian(&self, coeffs: &[f64]) -> Vec<f64> {
        let k_max = self.harmonics;
        let dim = self.unknowns();
        let n = self.samples;
        let (omega_a, kappa) = (self.mode.omega_a, self.mode.kappa);
        let omega_d = self.omega_d;
        let mut jac = alloc::vec![0.0; dim * dim];

        for k in 1..=k_max {
            let stiff = omega_a * omega_a - (k as f64 * omega_d).powi(2);
            jac[k * dim + k] = stiff;
            jac[k * dim + k_max + k] = kappa * k as f64 * omega_d;
            jac[(k_max + k) * dim + k_max + k] = stiff;
            jac[(k_max + k) * dim + k] = -kappa * k as f64 * omega_d;
        }
        jac[0] = omega_a * omega_a;

        let (g3, g4) = (self.mode.g3, self.mode.g4);
        for j in 0..n {
            let theta = 2.0 * PI * j as f64 / n as f64;
            let x = self.sample_orbit(coeffs, theta);
            // d(nonlinear)/dx at the sample.
            let w = 12.0 * omega_a * g3 * x + 24.0 * omega_a * g4 * x * x;
            for c in 0..dim {
                let basis_c = if c == 0 {
                    1.0
                } else if c <= k_max {
                    (c as f64 * theta).cos()
                } else {
                    ((c - k_max) as f64 * theta).sin()
                };
                let wb = w * basis_c;
                jac[c] += wb / n as f64;
                for r in 1..=k_max {
                    jac[r * dim + c] += 2.0 * wb * (r as f64 * theta).cos() / n as f64;
                    jac[(k_max + r) * dim + c] += 2.0 * wb * (r as f64 * theta).sin() / n as f64;
                }
            }
        }
        jac
    }

    fn newton(&self, start: &[f64], tol: f64) -> Option<Vec<f64>> {
        let mut coeffs = start.to_vec();
        for _ in 0..60 {
            let res = self.residual(&coeffs);
            let norm = res.iter().map(|r| r * r).sum::<f64>().sqrt();
            if norm <= tol {
                return Some(coeffs);
            }
            let mut jac = self.jacobian(&coeffs);
            let mut rhs: Vec<f64> = res.iter().map(|r| -r).collect();
            let step = solve_real(&mut jac, &mut rhs)?;
            let mut lambda = 1.0;
            let mut improved = false;
            for _ in 0..20 {
                let trial: Vec<f64> = coeffs
                    .iter()
                    .zip(&step)
                    .map(|(c, s)| c + lambda * s)
                    .collect();
                let trial_res = self.residual(&trial);
                let trial_norm = trial_res.iter().map(|r| r * r).sum::<f64>().sqrt();
                if trial_norm < norm {
                    coeffs = trial;
                    improved = true;
                    break;
                }
                lambda *= 0.5;
            }
            if !improved {
                return None;
            }
        }
        let res = self.residual(&coeffs);
        let norm = res.iter().map(|r| r * r).sum::<f64>().sqrt();
        if norm <= tol {
            Some(coeffs)
        } else {
            None
        }
    }
}

/// Solve for the periodic steady state at drive `force`, warm-starting
/// from `previous` when given (the low-power branch is tracked by sweeping
/// force upward). Drive ramping with halving handles cold starts.
pub fn driven_steady_state(
    mode: &ModeParameters,
    omega_d: f64,
    force: f64,
    previous: Option<&DrivenOrbit>,
) -> Result<DrivenOrbit> {
    let harmonics = ORBIT_HARMONICS;
    let samples = 8 * (harmonics + 1);
    let dim = 2 * harmonics + 1;

    let seed = match previous {
        Some(orbit) if orbit.harmonics == harmonics => orbit.coeffs.clone(),
        _ => alloc::vec![0.0; dim],
    };
    let tol = 1e-12 * force.abs().max(1e-12 * mode.omega_a * mode.omega_a);

    let mut coeffs = seed;
    let mut fraction = 0.0f64;
    let mut step = 1.0f64;
    let mut budget = 200usize;
    while fraction < 1.0 {
        if budget == 0 {
            return Err(Error::NonConvergence {
                residual: f64::NAN,
                steps: 200,
            });
        }
        budget -= 1;
        let target = (fraction + step).min(1.0);
        let partial = OrbitProblem {
            mode,
            omega_d,
            force: force * target,
            harmonics,
            samples,
        };
        match partial.newton(&coeffs, tol) {
            Some(next) => {
                coeffs = next;
                fraction = target;
                step = (step * 2.0).min(1.0);
            }
            None => {
                step *= 0.5;
                if step < 1e-8 {
                    return Err(Error::NonConvergence {
                        residual: f64::NAN,
                        steps: 200,
                    });
                }
            }
        }
    }
    Ok(DrivenOrbit {
        omega_d,
        force,
        coeffs,
        harmonics,
    })
}

/// Whether a second, distinct steady-state branch coexists at this drive:
/// re-solves from a deliberately inflated seed and compares fundamentals.
/// Used to flag bistable bias points.
pub fn second_branch_exists(mode: &ModeParameters, orbit: &DrivenOrbit) -> bool {
    let problem = OrbitProblem {
        mode,
        omega_d: orbit.omega_d,
        force: orbit.force,
        harmonics: orbit.harmonics,
        samples: 8 * (orbit.harmonics + 1),
    };
    let tol = 1e-10 * orbit.force.abs().max(1e-10 * mode.omega_a * mode.omega_a);
    // Candidate amplitudes come from the single-harmonic cubic
    // (F/2)² = n[(ω_a² − ω_d² + 24ω_a g₄ n)² + κ²ω_d²]; each distinct root
    // seeds a Newton refinement of the full orbit.
    let s0 = mode.omega_a * mode.omega_a - orbit.omega_d * orbit.omega_d;
    let beta = 24.0 * mode.omega_a * mode.g4;
    let damp = (mode.kappa * orbit.omega_d).powi(2);
    let drive_sq = (0.5 * orbit.force).powi(2);
    let cubic = |n: f64| n * ((s0 + beta * n).powi(2) + damp) - drive_sq;
    let n_ceiling = 4.0 * drive_sq / damp.max(1e-300) + 4.0 * orbit.nbar() + 1.0;
    let scan = 400usize;
    let mut roots: Vec<f64> = Vec::new();
    let mut prev_n = 0.0f64;
    let mut prev_f = cubic(prev_n);
    for j in 1..=scan {
        let n = n_ceiling * j as f64 / scan as f64;
        let f = cubic(n);
        if prev_f.signum() != f.signum() {
            if let Ok(root) = crate::roots::bisect(cubic, prev_n, n, 80) {
                roots.push(root);
            }
        }
        prev_n = n;
        prev_f = f;
    }
    for n_root in roots {
        if (n_root - orbit.nbar()).abs() <= 1e-3 * n_root.max(orbit.nbar()) {
            continue;
        }
        // Seed with the single-harmonic amplitude and phase at this root.
        let x1 = Complex64::new(0.5 * orbit.force, 0.0)
            / Complex64::new(s0 + beta * n_root, -mode.kappa * orbit.omega_d);
        let mut seed = alloc::vec![0.0; 2 * orbit.harmonics + 1];
        seed[1] = 2.0 * x1.re;
        seed[orbit.harmonics + 1] = 2.0 * x1.im;
        if let Some(coeffs) = problem.newton(&seed, tol) {
            let alt = DrivenOrbit {
                omega_d: orbit.omega_d,
                force: orbit.force,
                coeffs,
                harmonics: orbit.harmonics,
            };
            let (n_a, n_b) = (orbit.nbar(), alt.nbar());
            if (n_a - n_b).abs() > 1e-3 * n_a.max(n_b) {
                return true;
            }
        }
    }
    false
}

/// Magnitude of the weak-probe response |δx(ω_pr)| about a driven orbit,
/// from the linearized comb system on ω_pr + kω_d.
pub fn probe_response(mode: &ModeParameters, orbit: &DrivenOrbit, omega_probe: f64) -> Result<f64> {
    let k_max = orbit.harmonics as i64;
    let dim = (2 * k_max + 1) as usize;
    let n = 8 * (orbit.harmonics + 1);
    let (omega_a, kappa) = (mode.omega_a, mode.kappa);
    let zero = Complex64::new(0.0, 0.0);

    // Fourier coefficients V_m of the periodic stiffness modulation.
    let half_span = 2 * k_max;
    let mut v = alloc::vec![zero; (2 * half_span + 1) as usize];
    for j in 0..n {
        let theta = 2.0 * PI * j as f64 / n as f64;
        let mut x = orbit.coeffs[0];
        for k in 1..=orbit.harmonics {
            x += orbit.coeffs[k] * (k as f64 * theta).cos()
                + orbit.coeffs[orbit.harmonics + k] * (k as f64 * theta).sin();
        }
        let w = 12.0 * omega_a * mode.g3 * x + 24.0 * omega_a * mode.g4 * x * x;
        for m in -half_span..=half_span {
            let phase = Complex64::from_polar(1.0, m as f64 * theta);
            v[(m + half_span) as usize] += w * phase / n as f64;
        }
    }
    let v_at = |m: i64| -> Complex64 {
        if m.abs() > half_span {
            zero
        } else {
            v[(m + half_span) as usize]
        }
    };

    let mut matrix = alloc::vec![zero; dim * dim];
    let mut rhs = alloc::vec![zero; dim];
    for row in 0..dim {
        let k = row as i64 - k_max;
        let nu = omega_probe + k as f64 * orbit.omega_d;
        matrix[row * dim + row] += Complex64::new(omega_a * omega_a - nu * nu, -kappa * nu);
        for col in 0..dim {
            let m = col as i64 - k_max;
            matrix[row * dim + col] += v_at(k - m);
        }
    }
    rhs[k_max as usize] = Complex64::new(0.5, 0.0); // unit-force probe
    let y = solve_complex(&mut matrix, &mut rhs).ok_or(Error::SingularDenominator)?;
    Ok(y[k_max as usize].norm())
}

/// Probe frequency [rad/s] at which the weak-probe response peaks,
/// located by a coarse scan plus golden-section refinement inside
/// `center ± half_window`.
pub fn probe_resonance(
    mode: &ModeParameters,
    orbit: &DrivenOrbit,
    center: f64,
    half_window: f64,
) -> Result<f64> {
    let scan = 48usize;
    let mut best = center;
    let mut best_mag = -1.0f64;
    for j in 0..=scan {
        let omega = center - half_window + 2.0 * half_window * j as f64 / scan as f64;
        let mag = probe_response(mode, orbit, omega)?;
        if mag > best_mag {
            best_mag = mag;
            best = omega;
        }
    }
    let step = 2.0 * half_window / scan as f64;
    let refined = golden_section_min(
        |omega| -probe_response(mode, orbit, omega).unwrap_or(0.0),
        best - step,
        best + step,
        1e-3,
    );
    Ok(refined)
}
