//! Constrained search over constitutive device parameters against
//! amplifier targets: operating band, saturation power, Kerr-free
//! placement, pump budget, and the pQ validity floor.
//!
//! The objective follows the optimization recipe the solvers expose:
//! weaker nonlinearities and stronger output coupling buy compression
//! headroom, paid for in pump power and pQ margin. Candidates are scored
//! by weighted constraint shortfalls (score 0 = feasible, more negative =
//! worse); the continuous knobs (L_J, α, κ-scale, ω₀) are searched by a
//! bounded Nelder–Mead simplex nested inside an integer sweep over the
//! SNAIL count M, since the objective is non-smooth in M.
//!
//! The default scoring tier uses the closed-form compression and pump
//! estimates (fast, order-of-magnitude); the full harmonic-balance tier
//! re-evaluates survivors with the actual solver stack.

#[allow(unused_imports)]
use num_traits::Float as _;

use alloc::vec::Vec;

use crate::circuit::{self, DeviceSpec, LumpedEmbedding, ModeParameters, ModelTag};
use crate::consts::HBAR;
use crate::error::{Error, Result};
use crate::experiments::{p1db, p1db_estimates};
use crate::hb::{calibrate_pump, watts_to_dbm, HbOptions};

/// Amplifier requirements a candidate must meet.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignTarget {
    /// Required ω_a tunability coverage [rad/s], (low, high).
    pub band: (f64, f64),
    /// Minimum acceptable worst-flux compression point [dBm].
    pub min_p1db_dbm: f64,
    /// Small-signal power gain the device is biased to.
    pub g0: f64,
    /// Demand a Kerr-free flux inside (0, 0.5).
    pub require_kerr_free: bool,
    /// Pump budget at the device port [dBm].
    pub max_pump_power_dbm: f64,
    /// Participation–quality floor (practically 15).
    pub min_pq: f64,
}

impl DesignTarget {
    /// Validated constructor.
    pub fn new(band: (f64, f64), min_p1db_dbm: f64, g0: f64) -> Result<Self> {
        if band.0.is_nan() || band.1.is_nan() || band.0 >= band.1 || band.0 <= 0.0 {
            return Err(Error::InvalidParameter("band must satisfy 0 < low < high"));
        }
        if g0.is_nan() || g0 <= 1.0 {
            return Err(Error::InvalidParameter("g0 must exceed 1"));
        }
        Ok(Self {
            band,
            min_p1db_dbm,
            g0,
            require_kerr_free: false,
            max_pump_power_dbm: -40.0,
            min_pq: 15.0,
        })
    }
}

/// Penalty weights for the shortfall score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoreWeights {
    /// Per GHz of uncovered band.
    pub band_per_ghz: f64,
    /// Per dB of compression shortfall.
    pub p1db_per_db: f64,
    /// Per unit of pQ below the floor.
    pub pq_per_unit: f64,
    /// Per dB of pump overrun.
    pub pump_per_db: f64,
    /// Missing Kerr-free point.
    pub kerr_free: f64,
    /// Per failed flux point.
    pub failed_point: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self {
            band_per_ghz: 10.0,
            p1db_per_db: 1.0,
            pq_per_unit: 2.0,
            pump_per_db: 0.5,
            kerr_free: 20.0,
            failed_point: 5.0,
        }
    }
}

/// Which solver tier backs the per-flux figures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EvaluationTier {
    /// Closed-form compression/pump estimates (default; fast).
    Estimate,
    /// Full harmonic-balance calibration and compression sweep.
    FullHb,
}

/// Per-constraint shortfall decomposition (each ≥ 0; 0 means satisfied).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ScoreBreakdown {
    /// Uncovered band [GHz].
    pub band_ghz: f64,
    /// Worst-flux compression shortfall [dB].
    pub p1db_db: f64,
    /// pQ shortfall below the floor.
    pub pq: f64,
    /// Pump overrun [dB].
    pub pump_db: f64,
    /// 1 when a required Kerr-free point is absent.
    pub kerr_free: f64,
    /// Number of flux points that failed to evaluate.
    pub failed_points: f64,
}

/// Aggregate predictions behind a candidate's score.
#[derive(Debug, Clone)]
pub struct PredictedSummary {
    /// Achieved tunability range [rad/s].
    pub band: (f64, f64),
    /// Worst (lowest) compression point across the grid [dBm].
    pub worst_p1db_dbm: f64,
    /// Smallest pQ across the grid.
    pub min_pq: f64,
    /// Largest pump power across the grid [dBm].
    pub max_pump_dbm: f64,
    /// Kerr-free flux, when one exists.
    pub kerr_free_flux: Option<f64>,
    /// Mode parameters at the grid points that evaluated.
    pub modes: Vec<ModeParameters>,
}

/// One scored design.
#[derive(Debug, Clone)]
pub struct DesignCandidate {
    /// The constitutive description.
    pub spec: DeviceSpec,
    /// Weighted score: 0 = all constraints met, negative = shortfall.
    pub score: f64,
    /// Shortfall decomposition.
    pub breakdown: ScoreBreakdown,
    /// Aggregates behind the score.
    pub predicted: PredictedSummary,
    /// All constraints satisfied.
    pub feasible: bool,
    /// α > 1/3; returned only when the bounds force it.
    pub hysteretic: bool,
    /// Tier that produced the figures.
    pub tier: EvaluationTier,
}

/// Flux grid used by the evaluator: 11 points clear of the symmetry zeros
/// (no 3-wave mixing exists at Φ/Φ₀ = 0 or 0.5).
pub fn evaluation_flux_grid() -> Vec<f64> {
    (1..=11).map(|k| 0.04 * k as f64).collect()
}

/// Analytic pump-power estimate [dBm] to reach gain `g0` at Δ = 0:
/// |g_eff| from the gain identity, α_p from the off-resonant pump
/// response, power from the port relation.
pub fn pump_power_estimate_dbm(mode: &ModeParameters, g0: f64) -> f64 {
    if mode.g3 == 0.0 {
        return f64::INFINITY;
    }
    let sqrt_g = g0.sqrt();
    let b = 0.25 * (sqrt_g - 1.0) / (sqrt_g + 1.0); // 4|g_eff|²/κ²
    let g_eff = b.sqrt() * mode.kappa / 2.0;
    let alpha_p = g_eff / (2.0 * mode.g3.abs());
    let pump_base = (mode.omega_a * mode.omega_a + (2.0 / 3.0 * mode.kappa).powi(2)).sqrt();
    let u_p = alpha_p * pump_base;
    // P = (ħω_a/κ)|u_p|²(ω_a/ω_p)² with ω_p = 2ω_a.
    watts_to_dbm(HBAR * mode.omega_a / mode.kappa * u_p * u_p / 4.0)
}

/// Score one candidate against the target.
///
/// Runs the flux sweep, the compression figure at each point (estimate or
/// full tier), the pump estimate, and the Kerr-free scan; failures at
/// single flux points add penalty instead of aborting.
pub fn evaluate(
    spec: &DeviceSpec,
    target: &DesignTarget,
    weights: &ScoreWeights,
    tier: EvaluationTier,
) -> Result<DesignCandidate> {
    spec.check_hysteresis()?;
    let embedding = LumpedEmbedding::from_spec(spec);
    let grid = evaluation_flux_grid();

    let mut modes: Vec<ModeParameters> = Vec::new();
    let mut failed_points = 0usize;
    for (_, point) in circuit::flux_sweep(spec, &grid, ModelTag::Lumped) {
        match point {
            Ok(mode) => modes.push(mode),
            Err(_) => failed_points += 1,
        }
    }

    // Tunability endpoints from the flux extremes.
    let band_hi = circuit::lumped_mode_parameters(spec, &embedding, 0.0)
        .map(|m| m.omega_a)
        .unwrap_or(f64::NAN);
    let band_lo = circuit::lumped_mode_parameters(spec, &embedding, 0.5)
        .map(|m| m.omega_a)
        .unwrap_or(f64::NAN);

    let mut worst_p1db = f64::INFINITY;
    let mut min_pq = f64::INFINITY;
    let mut max_pump = f64::NEG_INFINITY;
    for mode in &modes {
        let pq = mode.p * mode.omega_a / mode.kappa;
        min_pq = min_pq.min(pq);
        match tier {
            EvaluationTier::Estimate => {
                let fake_op = crate::hb::OperatingPoint {
                    mode: *mode,
                    omega_p: 2.0 * mode.omega_a,
                    u_p: num_complex::Complex64::new(0.0, 0.0),
                    g0: target.g0,
                    pump_power_dbm: f64::NAN,
                    order: 1,
                    options: HbOptions::default(),
                };
                let (stark, pump_dep) = p1db_estimates(&fake_op);
                worst_p1db = worst_p1db.min(stark.min(pump_dep));
                max_pump = max_pump.max(pump_power_estimate_dbm(mode, target.g0));
            }
            EvaluationTier::FullHb => {
                match calibrate_pump(mode, target.g0, 1, &HbOptions::default()) {
                    Ok(op) => {
                        max_pump = max_pump.max(op.pump_power_dbm);
                        match p1db(&op, 1) {
                            Ok(res) => match res.p1db_dbm {
                                Some(p) => worst_p1db = worst_p1db.min(p),
                                None => worst_p1db = worst_p1db.min(res.ceiling_dbm),
                            },
                            Err(_) => failed_points += 1,
                        }
                    }
                    Err(_) => failed_points += 1,
                }
            }
        }
    }

    let kerr_free_flux = circuit::kerr_free_flux(spec, ModelTag::Lumped).ok();

    let mut breakdown = ScoreBreakdown {
        failed_points: failed_points as f64,
        ..ScoreBreakdown::default()
    };
    if band_lo.is_finite() && band_hi.is_finite() {
        // Uncovered stretch of the target band on either side, in GHz:
        // the achieved range must contain [target.lo, target.hi].
        breakdown.band_ghz = ((band_lo - target.band.0).max(0.0)
            + (target.band.1 - band_hi).max(0.0))
            / (2.0 * core::f64::consts::PI * 1e9);
    } else {
        breakdown.band_ghz = (target.band.1 - target.band.0) / (2.0 * core::f64::consts::PI * 1e9);
    }
    if worst_p1db.is_finite() {
        breakdown.p1db_db = (target.min_p1db_dbm - worst_p1db).max(0.0);
    } else if modes.is_empty() {
        breakdown.p1db_db = 60.0; // nothing evaluated at all
    }
    if min_pq.is_finite() {
        breakdown.pq = (target.min_pq - min_pq).max(0.0);
    }
    if max_pump.is_finite() {
        breakdown.pump_db = (max_pump - target.max_pump_power_dbm).max(0.0);
    }
    if target.require_kerr_free && kerr_free_flux.is_none() {
        breakdown.kerr_free = 1.0;
    }

    let score = -(weights.band_per_ghz * breakdown.band_ghz
        + weights.p1db_per_db * breakdown.p1db_db
        + weights.pq_per_unit * breakdown.pq
        + weights.pump_per_db * breakdown.pump_db
        + weights.kerr_free * breakdown.kerr_free
        + weights.failed_point * breakdown.failed_points);

    Ok(DesignCandidate {
        spec: spec.clone(),
        score,
        breakdown,
        feasible: score == 0.0,
        hysteretic: spec.alpha > 1.0 / 3.0,
        predicted: PredictedSummary {
            band: (band_lo, band_hi),
            worst_p1db_dbm: worst_p1db,
            min_pq,
            max_pump_dbm: max_pump,
            kerr_free_flux,
            modes,
        },
        tier,
    })
}

/// Box bounds for the continuous knobs and the SNAIL-count range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignBounds {
    /// Large-junction inductance [H].
    pub l_j: (f64, f64),
    /// Junction inductance ratio α.
    pub alpha: (f64, f64),
    /// Scale on the single-pole κ estimate.
    pub kappa_scale: (f64, f64),
    /// Bare embedding resonance [rad/s].
    pub omega_0: (f64, f64),
    /// SNAIL count range (inclusive).
    pub m: (u32, u32),
    /// Coupling capacitance used for every candidate [F].
    pub c_c: f64,
    /// Line impedance used for every candidate [Ω].
    pub z_c: f64,
}

/// Search outcome: ranked candidates plus budget accounting.
#[derive(Debug, Clone)]
pub struct SearchOutcome {
    /// Best candidates, highest score first (at most 10).
    pub candidates: Vec<DesignCandidate>,
    /// Objective evaluations spent.
    pub evaluations: usize,
    /// True when the budget ran out before the simplices converged.
    pub budget_exhausted: bool,
}

/// SplitMix64: tiny deterministic generator for simplex jitter.
struct SplitMix64(u64);

impl SplitMix64 {
    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }

    fn unit(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 / (1u64 << 53) as f64
    }
}

fn spec_from_point(x: &[f64; 4], m: u32, bounds: &DesignBounds) -> Result<DeviceSpec> {
    let lerp = |t: f64, (lo, hi): (f64, f64)| lo + t.clamp(0.0, 1.0) * (hi - lo);
    let mut spec = DeviceSpec::new(
        lerp(x[0], bounds.l_j),
        m,
        lerp(x[1], bounds.alpha),
        bounds.c_c,
        lerp(x[3], bounds.omega_0),
        bounds.z_c,
    )?;
    spec.kappa_scale = lerp(x[2], bounds.kappa_scale);
    spec.allow_hysteretic = true; // bounds may force α > 1/3; flagged downstream
    Ok(spec)
}

/// Nelder–Mead over (L_J, α, κ-scale, ω₀) inside an integer sweep over M.
/// `budget` caps the total number of candidate evaluations; the best 10
/// candidates found are returned in score order. Reproducible for a fixed
/// `seed` (simplex initialization is the only randomized ingredient).
pub fn search(
    target: &DesignTarget,
    bounds: &DesignBounds,
    budget: usize,
    seed: u64,
) -> Result<SearchOutcome> {
    if budget < 1 {
        return Err(Error::InvalidParameter("budget must be >= 1"));
    }
    let weights = ScoreWeights::default();
    let mut rng = SplitMix64(seed);
    let mut evaluations = 0usize;
    let mut pool: Vec<DesignCandidate> = Vec::new();
    let mut exhausted = false;

    let m_range = bounds.m.0..=bounds.m.1.max(bounds.m.0);
    'outer: for m in m_range {
        // Seeded starting point, jittered around the box center.
        let mut x0 = [0.5f64; 4];
        for slot in &mut x0 {
            *slot = (0.35 + 0.3 * rng.unit()).clamp(0.0, 1.0);
        }
        // Initial simplex: the seed plus one displaced vertex per axis.
        let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
        let eval_point = |x: &[f64; 4],
                          evaluations: &mut usize,
                          pool: &mut Vec<DesignCandidate>|
         -> Option<f64> {
            if *evaluations >= budget {
                return None;
            }
            *evaluations += 1;
            // None means the budget ran out; anything else (including an
            // unbuildable spec) is just a very bad objective value.
            let Ok(spec) = spec_from_point(x, m, bounds) else {
                return Some(f64::NEG_INFINITY);
            };
            match evaluate(&spec, target, &weights, EvaluationTier::Estimate) {
                Ok(candidate) => {
                    let score = candidate.score;
                    pool.push(candidate);
                    Some(score)
                }
                Err(_) => Some(f64::NEG_INFINITY),
            }
        };

        match eval_point(&x0, &mut evaluations, &mut pool) {
            Some(score) => simplex.push((x0, score)),
            None => {
                exhausted = true;
                break 'outer;
            }
        }
        for axis in 0..4 {
            let mut x = x0;
            x[axis] = (x[axis] + 0.25).clamp(0.0, 1.0);
            if (x[axis] - x0[axis]).abs() < 1e-6 {
                x[axis] = (x0[axis] - 0.25).clamp(0.0, 1.0);
            }
            match eval_point(&x, &mut evaluations, &mut pool) {
                Some(score) => simplex.push((x, score)),
                None => {
                    exhausted = true;
                    break 'outer;
                }
            }
        }

        // Standard Nelder–Mead (maximizing score).
        let max_iters = 200usize;
        for _ in 0..max_iters {
            simplex.sort_by(|a, b| b.1.total_cmp(&a.1));
            let spread = simplex[0].1 - simplex[4].1;
            if spread.abs() < 1e-9 {
                break;
            }
            let mut centroid = [0.0f64; 4];
            for vertex in simplex.iter().take(4) {
                for (c, v) in centroid.iter_mut().zip(&vertex.0) {
                    *c += v / 4.0;
                }
            }
            let worst = simplex[4];
            let blend = |a: &[f64; 4], b: &[f64; 4], t: f64| -> [f64; 4] {
                let mut out = [0.0f64; 4];
                for k in 0..4 {
                    out[k] = (a[k] + t * (a[k] - b[k])).clamp(0.0, 1.0);
                }
                out
            };
            let reflected = blend(&centroid, &worst.0, 1.0);
            let Some(f_reflected) = eval_point(&reflected, &mut evaluations, &mut pool) else {
                exhausted = true;
                break 'outer;
            };
            if f_reflected > simplex[0].1 {
                // Try expanding further along the same direction.
                let expanded = blend(&centroid, &worst.0, 2.0);
                let Some(f_expanded) = eval_point(&expanded, &mut evaluations, &mut pool) else {
                    exhausted = true;
                    break 'outer;
                };
                simplex[4] = if f_expanded > f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
                continue;
            }
            if f_reflected > simplex[3].1 {
                simplex[4] = (reflected, f_reflected);
                continue;
            }
            let contracted = blend(&centroid, &worst.0, -0.5);
            let Some(f_contracted) = eval_point(&contracted, &mut evaluations, &mut pool) else {
                exhausted = true;
                break 'outer;
            };
            if f_contracted > worst.1 {
                simplex[4] = (contracted, f_contracted);
                continue;
            }
            // Shrink toward the best vertex.
            let best = simplex[0];
            for vertex in simplex.iter_mut().skip(1) {
                let mut x = [0.0f64; 4];
                for (slot, (b, v)) in x.iter_mut().zip(best.0.iter().zip(&vertex.0)) {
                    *slot = b + 0.5 * (v - b);
                }
                let Some(f) = eval_point(&x, &mut evaluations, &mut pool) else {
                    exhausted = true;
                    break 'outer;
                };
                *vertex = (x, f);
            }
        }
    }

    // Rank, preferring non-hysteretic candidates at equal score.
    pool.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.hysteretic.cmp(&b.hysteretic))
    });
    pool.truncate(10);
    Ok(SearchOutcome {
        candidates: pool,
        evaluations,
        budget_exhausted: exhausted,
    })
}
