//! `snailamp` — design and simulation CLI for SNAIL-based 3-wave-mixing
//! parametric amplifiers.
//!
//! Subcommands map physical device descriptions to mode parameters and
//! amplifier figures of merit. Results land as CSV files (one header row,
//! fixed column order; see README) plus a JSON manifest per run that
//! records tool version, input digests, solver constants, and per-point
//! status. Exit codes: 0 full success, 2 partial per-point failures,
//! 1 fatal error.

use std::f64::consts::PI;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use snailamp_cli::device::parse_device;
use snailamp_cli::grid::FluxGrid;
use snailamp_cli::manifest::RunManifest;
use snailamp_cli::presets::{reference_device, reference_devices};
use snailamp_cli::runner::{default_jobs, run_points};

use snailamp_core::circuit::{self, LumpedEmbedding, ModeParameters, ModelTag};
use snailamp_core::design::{self, DesignBounds, DesignTarget, EvaluationTier, ScoreWeights};
use snailamp_core::experiments::{
    self, iip3_analytic, iip3_simulated, p1db, p1db_estimates, stark_drive_powers,
    stark_shift_experiment, validity_check,
};
use snailamp_core::hb::{calibrate_pump, HbOptions};
use snailamp_core::snail::{snail_inductance, taylor_coefficients};
use snailamp_core::DeviceSpec;

const GHZ: f64 = 1e9;
const MHZ: f64 = 1e6;

#[derive(Parser)]
#[command(
    name = "snailamp",
    version,
    about = "SNAIL parametric amplifier design and simulation toolkit"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Device description file (JSON).
    #[arg(long)]
    device: PathBuf,
    /// Flux bias: a single value or start:stop:step in units of Φ/Φ₀.
    #[arg(long)]
    flux: FluxGrid,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Circuit model producing the mode parameters.
    #[arg(long, default_value = "distributed", value_parser = parse_model)]
    model: ModelTag,
    /// Harmonic-balance truncation order.
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..=2))]
    order: u32,
    /// Small-signal gain target [dB].
    #[arg(long, default_value_t = 20.0)]
    gain_db: f64,
    /// Worker count (default: SNAILAMP_JOBS or 1).
    #[arg(long)]
    jobs: Option<usize>,
    /// Harmonic-balance residual tolerance (relative).
    #[arg(long, default_value_t = 1e-12)]
    tol_hb_residual: f64,
    /// Pump-calibration gain tolerance [dB].
    #[arg(long, default_value_t = 0.01)]
    tol_gain_db: f64,
}

impl CommonArgs {
    fn hb_options(&self) -> HbOptions {
        HbOptions {
            tol: self.tol_hb_residual,
            calibration_tol_db: self.tol_gain_db,
            ..HbOptions::default()
        }
    }

    fn jobs(&self) -> usize {
        self.jobs.unwrap_or_else(default_jobs)
    }

    fn record(&self, manifest: &mut RunManifest) -> anyhow::Result<()> {
        manifest
            .add_input(&self.device)
            .with_context(|| "hashing device file")?;
        manifest.set_param("flux", flux_param(&self.flux));
        manifest.set_param("model", model_name(self.model));
        manifest.set_param("order", self.order);
        manifest.set_param("gain_db", self.gain_db);
        manifest.set_param("jobs", self.jobs());
        manifest.tolerances.insert(
            "hb_residual_rel".into(),
            format!("{}", self.tol_hb_residual),
        );
        manifest.tolerances.insert(
            "calibration_gain_tol_db".into(),
            format!("{}", self.tol_gain_db),
        );
        Ok(())
    }
}

fn parse_model(s: &str) -> Result<ModelTag, String> {
    match s {
        "lumped" => Ok(ModelTag::Lumped),
        "distributed" => Ok(ModelTag::Distributed),
        other => Err(format!("unknown model '{other}' (lumped|distributed)")),
    }
}

fn model_name(model: ModelTag) -> &'static str {
    model.as_str()
}

fn flux_param(grid: &FluxGrid) -> String {
    if grid.len() == 1 {
        format!("{}", grid.points[0])
    } else {
        format!(
            "{}..{} ({} points)",
            grid.points[0],
            grid.points.last().unwrap(),
            grid.len()
        )
    }
}

#[derive(Subcommand)]
enum Command {
    /// SNAIL Taylor coefficients and linear inductance versus flux.
    Coeffs(CommonArgs),
    /// Mode parameters (ω_a, κ, g₃, g₄, K, p) versus flux.
    Sweep(CommonArgs),
    /// Pump calibration to the gain target at each flux point.
    Calibrate(CommonArgs),
    /// 1 dB compression point at each flux point.
    P1db(CommonArgs),
    /// Third-order intercept (analytic and simulated) at each flux point.
    Iip3 {
        #[command(flatten)]
        common: CommonArgs,
        /// Two-tone relative detuning δ/2π [kHz].
        #[arg(long, default_value_t = 100.0)]
        delta_khz: f64,
        /// Tone-pair center offset from ω_p/2 [kHz].
        #[arg(long, default_value_t = 500.0)]
        offset_khz: f64,
    },
    /// Stark-shift spectroscopy (fitted K, K′) at each flux point.
    Stark {
        #[command(flatten)]
        common: CommonArgs,
        /// Drive detuning from ω_a [MHz].
        #[arg(long, default_value_t = 500.0)]
        detune_mhz: f64,
        /// Largest target photon number of the sweep.
        #[arg(long, default_value_t = 20.0)]
        nbar_max: f64,
        /// Number of drive powers.
        #[arg(long, default_value_t = 6)]
        points: usize,
    },
    /// Search constitutive parameters against a target file.
    Design {
        /// Design target + bounds JSON.
        #[arg(long)]
        target: PathBuf,
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Regenerate the reference-device curve data (resonance, g₃, |K|,
    /// compression, intercept) from built-in device descriptions.
    Reproduce {
        /// Output directory.
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Worker count (default: SNAILAMP_JOBS or 1).
        #[arg(long)]
        jobs: Option<usize>,
        /// Flux step for the compression/intercept sweeps.
        #[arg(long, default_value_t = 0.025)]
        flux_step: f64,
        /// Restrict to a subset of device names (e.g. "C,E").
        #[arg(long)]
        devices: Option<String>,
    },
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<i32> {
    match cli.command {
        Command::Coeffs(common) => cmd_coeffs(&common),
        Command::Sweep(common) => cmd_sweep(&common),
        Command::Calibrate(common) => cmd_calibrate(&common),
        Command::P1db(common) => cmd_p1db(&common),
        Command::Iip3 {
            common,
            delta_khz,
            offset_khz,
        } => cmd_iip3(&common, delta_khz, offset_khz),
        Command::Stark {
            common,
            detune_mhz,
            nbar_max,
            points,
        } => cmd_stark(&common, detune_mhz, nbar_max, points),
        Command::Design { target, out } => cmd_design(&target, &out),
        Command::Reproduce {
            out,
            jobs,
            flux_step,
            devices,
        } => cmd_reproduce(
            &out,
            jobs.unwrap_or_else(default_jobs),
            flux_step,
            devices.as_deref(),
        ),
    }
}

fn write_csv(path: &Path, header: &str, rows: &[String]) -> anyhow::Result<()> {
    let mut file =
        std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "{header}")?;
    for row in rows {
        writeln!(file, "{row}")?;
    }
    Ok(())
}

fn finish(
    out_dir: &Path,
    stem: &str,
    header: &str,
    rows: Vec<(f64, Result<String, String>)>,
    manifest: &mut RunManifest,
) -> anyhow::Result<i32> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    let csv_path = out_dir.join(format!("{stem}.csv"));
    let manifest_path = out_dir.join(format!("{stem}.manifest.json"));

    let mut csv_rows = Vec::new();
    for (flux, outcome) in rows {
        match outcome {
            Ok(row) => {
                manifest.push_point(flux, "ok".into());
                csv_rows.push(row);
            }
            Err(message) => manifest.push_point(flux, format!("error: {message}")),
        }
    }
    write_csv(&csv_path, header, &csv_rows)?;
    manifest.outputs.push(csv_path.display().to_string());
    manifest.write(&manifest_path)?;
    println!(
        "wrote {} ({} rows) and {}",
        csv_path.display(),
        csv_rows.len(),
        manifest_path.display()
    );
    Ok(if manifest.has_failures() { 2 } else { 0 })
}

/// Mode parameters at one flux under the chosen model.
fn mode_at(spec: &DeviceSpec, model: ModelTag, flux: f64) -> Result<ModeParameters, String> {
    let result = match model {
        ModelTag::Lumped => {
            circuit::lumped_mode_parameters(spec, &LumpedEmbedding::from_spec(spec), flux)
        }
        ModelTag::Distributed => circuit::distributed_nonlinearities(spec, flux),
    };
    result.map_err(|e| e.to_string())
}

fn cmd_coeffs(common: &CommonArgs) -> anyhow::Result<i32> {
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("coeffs");
    common.record(&mut manifest)?;

    let e_j_mhz = spec.snail_at(0.0).e_j() / snailamp_core::consts::H_PLANCK / MHZ;
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        let snail = spec.snail_at(flux);
        let coeffs = taylor_coefficients(&snail, 6).map_err(|e| e.to_string())?;
        let l_s = snail_inductance(&snail).map_err(|e| e.to_string())?;
        let c_mhz: Vec<f64> = (1..=6).map(|n| coeffs.c(n) * e_j_mhz).collect();
        Ok(format!(
            "{},{},{},{},{},{},{},{},{}",
            flux,
            coeffs.phi_min,
            c_mhz[0],
            c_mhz[1],
            c_mhz[2],
            c_mhz[3],
            c_mhz[4],
            c_mhz[5],
            l_s * 1e12
        ))
    });
    finish(
        &common.out,
        "coeffs",
        "flux,phi_min_rad,c1_MHz,c2_MHz,c3_MHz,c4_MHz,c5_MHz,c6_MHz,L_s_pH",
        rows,
        &mut manifest,
    )
}

fn sweep_row(mode: &ModeParameters) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{}",
        mode.flux,
        mode.omega_a / (2.0 * PI) / GHZ,
        mode.kappa / (2.0 * PI) / MHZ,
        mode.g3 / (2.0 * PI) / MHZ,
        mode.g4 / (2.0 * PI) / MHZ,
        mode.kerr / (2.0 * PI) / MHZ,
        mode.p,
        mode.model.as_str(),
        if mode.kappa_estimated {
            "estimate"
        } else {
            "measured"
        }
    )
}

const SWEEP_HEADER: &str =
    "flux,omega_a_GHz,kappa_MHz,g3_MHz,g4_MHz,K_MHz,p,model_tag,kappa_source";

fn cmd_sweep(common: &CommonArgs) -> anyhow::Result<i32> {
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("sweep");
    common.record(&mut manifest)?;
    manifest.set_param("g3_scale", spec.g3_scale);

    let model = common.model;
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        mode_at(&spec, model, flux).map(|mode| sweep_row(&mode))
    });
    finish(&common.out, "sweep", SWEEP_HEADER, rows, &mut manifest)
}

fn cmd_calibrate(common: &CommonArgs) -> anyhow::Result<i32> {
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("calibrate");
    common.record(&mut manifest)?;

    let model = common.model;
    let order = common.order;
    let opts = common.hb_options();
    let target_g0 = 10f64.powf(common.gain_db / 10.0);
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        let mode = mode_at(&spec, model, flux)?;
        let op = calibrate_pump(&mode, target_g0, order, &opts).map_err(|e| e.to_string())?;
        let validity = validity_check(&op, mode.p, spec.m).map_err(|e| e.to_string())?;
        Ok(format!(
            "{},{},{},{},{},{},{},{}",
            flux,
            mode.omega_a / (2.0 * PI) / GHZ,
            10.0 * op.g0.log10(),
            op.pump_power_dbm,
            op.u_p.re,
            validity.p_q,
            if validity.p_q_ok { "ok" } else { "flagged" },
            mode.model.as_str()
        ))
    });
    finish(
        &common.out,
        "calibrate",
        "flux,omega_a_GHz,g0_dB,pump_power_dbm,u_p_rad_s,pQ,pQ_check,model_tag",
        rows,
        &mut manifest,
    )
}

fn cmd_p1db(common: &CommonArgs) -> anyhow::Result<i32> {
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("p1db");
    common.record(&mut manifest)?;

    let model = common.model;
    let order = common.order;
    let opts = common.hb_options();
    let target_g0 = 10f64.powf(common.gain_db / 10.0);
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        let mode = mode_at(&spec, model, flux)?;
        let op = calibrate_pump(&mode, target_g0, order, &opts).map_err(|e| e.to_string())?;
        let compression = p1db(&op, order).map_err(|e| e.to_string())?;
        let (stark_est, pumpdep_est) = p1db_estimates(&op);
        let p1 = compression
            .p1db_dbm
            .map(|v| format!("{v}"))
            .unwrap_or_else(|| "above_ceiling".into());
        Ok(format!(
            "{},{},{},{},{},{},{},{}",
            flux,
            p1,
            compression.g0_db,
            method_name(compression.method),
            stark_est,
            pumpdep_est,
            op.pump_power_dbm,
            mode.model.as_str()
        ))
    });
    finish(
        &common.out,
        "p1db",
        "flux,p1db_dbm,g0_dB,method,stark_estimate_dbm,pumpdep_estimate_dbm,pump_power_dbm,model_tag",
        rows,
        &mut manifest,
    )
}

fn method_name(method: experiments::CompressionMethod) -> &'static str {
    match method {
        experiments::CompressionMethod::Hb1 => "hb1",
        experiments::CompressionMethod::Hb2 => "hb2",
        experiments::CompressionMethod::StiffPump => "stiff_pump",
        experiments::CompressionMethod::StarkEstimate => "stark_estimate",
        experiments::CompressionMethod::PumpDepletionEstimate => "pumpdep_estimate",
    }
}

fn cmd_iip3(common: &CommonArgs, delta_khz: f64, offset_khz: f64) -> anyhow::Result<i32> {
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("iip3");
    common.record(&mut manifest)?;
    manifest.set_param("delta_khz", delta_khz);
    manifest.set_param("offset_khz", offset_khz);

    let model = common.model;
    let order = common.order;
    let opts = common.hb_options();
    let target_g0 = 10f64.powf(common.gain_db / 10.0);
    let delta = 2.0 * PI * delta_khz * 1e3;
    let offset = 2.0 * PI * offset_khz * 1e3;
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        let mode = mode_at(&spec, model, flux)?;
        let op = calibrate_pump(&mode, target_g0, order, &opts).map_err(|e| e.to_string())?;
        let simulated = iip3_simulated(&op, delta, offset, order).map_err(|e| e.to_string())?;
        let analytic = iip3_analytic(&mode, op.g0);
        Ok(format!(
            "{},{},{},{},{},{},{},{}",
            flux,
            simulated.iip3_dbm,
            analytic.iip3_dbm,
            simulated.asymptote_slopes.0,
            simulated.asymptote_slopes.1,
            simulated.g4_inferred / (2.0 * PI) / MHZ,
            mode.g4.abs() / (2.0 * PI) / MHZ,
            mode.model.as_str()
        ))
    });
    finish(
        &common.out,
        "iip3",
        "flux,iip3_sim_dbm,iip3_analytic_dbm,slope_main,slope_sideband,g4_inferred_MHz,g4_model_MHz,model_tag",
        rows,
        &mut manifest,
    )
}

fn cmd_stark(
    common: &CommonArgs,
    detune_mhz: f64,
    nbar_max: f64,
    points: usize,
) -> anyhow::Result<i32> {
    if points < 2 {
        bail!("stark sweep needs at least 2 points");
    }
    let (spec, _) = parse_device(&common.device)?;
    let mut manifest = RunManifest::new("stark");
    common.record(&mut manifest)?;
    manifest.set_param("detune_mhz", detune_mhz);
    manifest.set_param("nbar_max", nbar_max);
    manifest.set_param("points", points);

    let model = common.model;
    let rows = run_points(&common.flux.points, common.jobs(), |flux| {
        let mode = mode_at(&spec, model, flux)?;
        let omega_d = mode.omega_a + 2.0 * PI * detune_mhz * MHZ;
        let targets: Vec<f64> = (1..=points)
            .map(|k| nbar_max * k as f64 / points as f64)
            .collect();
        let powers = stark_drive_powers(&mode, omega_d, &targets);
        let fit = stark_shift_experiment(&mode, omega_d, &powers).map_err(|e| e.to_string())?;
        Ok(format!(
            "{},{},{},{},{},{},{},{}",
            flux,
            fit.k / (2.0 * PI) / MHZ,
            mode.kerr / (2.0 * PI) / MHZ,
            fit.k_prime / (2.0 * PI) / MHZ,
            fit.fit_rms / (2.0 * PI) / MHZ,
            fit.nbar_grid.last().copied().unwrap_or(f64::NAN),
            if fit.bistable { "bistable" } else { "single" },
            mode.model.as_str()
        ))
    });
    finish(
        &common.out,
        "stark",
        "flux,K_fit_MHz,K_model_MHz,K_prime_MHz,fit_rms_MHz,nbar_max,branch,model_tag",
        rows,
        &mut manifest,
    )
}

/// Design target + bounds file.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct DesignConfig {
    band_GHz: (f64, f64),
    min_p1db_dbm: f64,
    gain_db: f64,
    #[serde(default)]
    require_kerr_free: bool,
    #[serde(default = "default_pump_budget")]
    max_pump_power_dbm: f64,
    #[serde(default = "default_min_pq")]
    min_pq: f64,
    bounds: BoundsConfig,
    #[serde(default = "default_budget")]
    budget: usize,
    #[serde(default)]
    seed: u64,
    /// Re-evaluate the ranked survivors with the full solver stack.
    #[serde(default)]
    full_hb_top: bool,
}

fn default_pump_budget() -> f64 {
    -40.0
}

fn default_min_pq() -> f64 {
    15.0
}

fn default_budget() -> usize {
    500
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
#[allow(non_snake_case)]
struct BoundsConfig {
    L_J_pH: (f64, f64),
    alpha: (f64, f64),
    kappa_scale: (f64, f64),
    omega0_GHz: (f64, f64),
    M: (u32, u32),
    #[serde(default = "default_c_c_pf")]
    C_c_pF: f64,
    #[serde(default = "default_z_c_ohm")]
    Z_c_ohm: f64,
}

fn default_c_c_pf() -> f64 {
    0.08
}

fn default_z_c_ohm() -> f64 {
    45.0
}

fn candidate_json(candidate: &design::DesignCandidate) -> serde_json::Value {
    let spec = &candidate.spec;
    serde_json::json!({
        "score": candidate.score,
        "feasible": candidate.feasible,
        "hysteretic": candidate.hysteretic,
        "tier": match candidate.tier {
            EvaluationTier::Estimate => "estimate",
            EvaluationTier::FullHb => "full_hb",
        },
        "device": {
            "L_J_pH": spec.l_j * 1e12,
            "M": spec.m,
            "alpha": spec.alpha,
            "C_c_pF": spec.c_c * 1e12,
            "omega0_GHz": spec.omega_0 / (2.0 * PI) / GHZ,
            "Z_c_ohm": spec.z_c,
            "kappa_scale": spec.kappa_scale,
        },
        "breakdown": {
            "band_ghz": candidate.breakdown.band_ghz,
            "p1db_db": candidate.breakdown.p1db_db,
            "pq": candidate.breakdown.pq,
            "pump_db": candidate.breakdown.pump_db,
            "kerr_free": candidate.breakdown.kerr_free,
            "failed_points": candidate.breakdown.failed_points,
        },
        "predicted": {
            "band_GHz": [
                candidate.predicted.band.0 / (2.0 * PI) / GHZ,
                candidate.predicted.band.1 / (2.0 * PI) / GHZ,
            ],
            "worst_p1db_dbm": candidate.predicted.worst_p1db_dbm,
            "min_pQ": candidate.predicted.min_pq,
            "max_pump_dbm": candidate.predicted.max_pump_dbm,
            "kerr_free_flux": candidate.predicted.kerr_free_flux,
        },
    })
}

fn cmd_design(target_path: &Path, out_dir: &Path) -> anyhow::Result<i32> {
    let text = std::fs::read_to_string(target_path)
        .with_context(|| format!("reading {}", target_path.display()))?;
    let config: DesignConfig = serde_json::from_str(&text)
        .with_context(|| format!("parsing {}", target_path.display()))?;

    let mut target = DesignTarget::new(
        (
            2.0 * PI * config.band_GHz.0 * GHZ,
            2.0 * PI * config.band_GHz.1 * GHZ,
        ),
        config.min_p1db_dbm,
        10f64.powf(config.gain_db / 10.0),
    )
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    target.require_kerr_free = config.require_kerr_free;
    target.max_pump_power_dbm = config.max_pump_power_dbm;
    target.min_pq = config.min_pq;

    let bounds = DesignBounds {
        l_j: (
            config.bounds.L_J_pH.0 * 1e-12,
            config.bounds.L_J_pH.1 * 1e-12,
        ),
        alpha: config.bounds.alpha,
        kappa_scale: config.bounds.kappa_scale,
        omega_0: (
            2.0 * PI * config.bounds.omega0_GHz.0 * GHZ,
            2.0 * PI * config.bounds.omega0_GHz.1 * GHZ,
        ),
        m: config.bounds.M,
        c_c: config.bounds.C_c_pF * 1e-12,
        z_c: config.bounds.Z_c_ohm,
    };

    let outcome = design::search(&target, &bounds, config.budget, config.seed)
        .map_err(|e| anyhow::anyhow!("{e}"))?;

    let mut manifest = RunManifest::new("design");
    manifest.add_input(target_path)?;
    manifest.set_param("budget", config.budget);
    manifest.set_param("seed", config.seed);
    manifest.set_param("evaluations", outcome.evaluations);
    manifest.set_param("budget_exhausted", outcome.budget_exhausted);
    manifest.set_param("full_hb_top", config.full_hb_top);

    let mut ranked: Vec<serde_json::Value> = Vec::new();
    for candidate in &outcome.candidates {
        // Optional full-solver verification pass over the survivors.
        if config.full_hb_top {
            match design::evaluate(
                &candidate.spec,
                &target,
                &ScoreWeights::default(),
                EvaluationTier::FullHb,
            ) {
                Ok(full) => ranked.push(candidate_json(&full)),
                Err(_) => ranked.push(candidate_json(candidate)),
            }
        } else {
            ranked.push(candidate_json(candidate));
        }
    }

    std::fs::create_dir_all(out_dir)?;
    let out_path = out_dir.join("design_candidates.json");
    let body = serde_json::json!({
        "evaluations": outcome.evaluations,
        "budget_exhausted": outcome.budget_exhausted,
        "candidates": ranked,
    });
    std::fs::write(&out_path, serde_json::to_string_pretty(&body)?)?;
    manifest.outputs.push(out_path.display().to_string());
    manifest.write(&out_dir.join("design.manifest.json"))?;
    println!(
        "wrote {} ({} candidates, {} evaluations)",
        out_path.display(),
        outcome.candidates.len(),
        outcome.evaluations
    );
    Ok(0)
}

fn cmd_reproduce(
    out_dir: &Path,
    jobs: usize,
    flux_step: f64,
    devices: Option<&str>,
) -> anyhow::Result<i32> {
    std::fs::create_dir_all(out_dir)?;
    let selected: Vec<String> = match devices {
        Some(names) => names.split(',').map(|s| s.trim().to_uppercase()).collect(),
        None => reference_devices()
            .iter()
            .map(|d| d.name.to_string())
            .collect(),
    };

    let mut manifest = RunManifest::new("reproduce");
    manifest.set_param("jobs", jobs);
    manifest.set_param("flux_step", flux_step);
    manifest.set_param("devices", selected.join(","));
    manifest.set_param(
        "g3_scale_note",
        "sweeps emitted at g3_scale = 1 (no calibration factor)",
    );
    let mut exit = 0;

    for name in &selected {
        let Some(device) = reference_device(name) else {
            bail!("unknown reference device '{name}'");
        };
        // Device description file, usable with every other subcommand.
        let file = device.device_file();
        let device_path = out_dir.join(format!("device_{name}.json"));
        std::fs::write(&device_path, serde_json::to_string_pretty(&file)?)?;
        manifest.outputs.push(device_path.display().to_string());

        let spec = device.spec_with_measured_kappa();

        // Mode-parameter sweep (dense grid, both models' resonance).
        let grid: Vec<f64> = (0..=100).map(|k| 0.005 * k as f64).collect();
        let rows = run_points(&grid, jobs, |flux| {
            let dist = mode_at(&spec, ModelTag::Distributed, flux)?;
            let lumped = mode_at(&spec, ModelTag::Lumped, flux)?;
            Ok(format!(
                "{},{},{}",
                sweep_row(&dist),
                lumped.omega_a / (2.0 * PI) / GHZ,
                lumped.kerr / (2.0 * PI) / MHZ
            ))
        });
        let csv = out_dir.join(format!("sweep_{name}.csv"));
        let mut ok_rows = Vec::new();
        for (flux, outcome) in rows {
            match outcome {
                Ok(row) => {
                    ok_rows.push(row);
                    manifest.push_point(flux, "ok".into());
                }
                Err(e) => {
                    manifest.push_point(flux, format!("error: {e}"));
                    exit = 2;
                }
            }
        }
        write_csv(
            &csv,
            &format!("{SWEEP_HEADER},omega_a_lumped_GHz,K_lumped_MHz"),
            &ok_rows,
        )?;
        manifest.outputs.push(csv.display().to_string());

        // Compression + intercept versus flux at 20 dB for the SNAIL-array
        // devices (single-SNAIL device A compresses the same way; skipping
        // it matches the reference data layout, which only tabulates B–E).
        if device.m > 1 {
            let count = (0.42 / flux_step).floor() as usize;
            let comp_grid: Vec<f64> = (0..=count)
                .map(|k| 0.04 + k as f64 * flux_step)
                .filter(|&f| f <= 0.46)
                .collect();
            let opts = HbOptions::default();
            let rows = run_points(&comp_grid, jobs, |flux| {
                let mode = mode_at(&spec, ModelTag::Distributed, flux)?;
                let op = calibrate_pump(&mode, 100.0, 1, &opts).map_err(|e| e.to_string())?;
                let compression = p1db(&op, 1).map_err(|e| e.to_string())?;
                let p1 = compression
                    .p1db_dbm
                    .map(|v| format!("{v}"))
                    .unwrap_or_else(|| "above_ceiling".into());
                let intercept = iip3_analytic(&mode, op.g0);
                Ok(format!(
                    "{},{},{},{},{}",
                    flux,
                    0.5 * op.omega_p / (2.0 * PI) / GHZ,
                    p1,
                    intercept.iip3_dbm,
                    op.pump_power_dbm
                ))
            });
            let csv = out_dir.join(format!("compression_{name}.csv"));
            let mut ok_rows = Vec::new();
            for (flux, outcome) in rows {
                match outcome {
                    Ok(row) => {
                        ok_rows.push(row);
                        manifest.push_point(flux, "ok".into());
                    }
                    Err(e) => {
                        manifest.push_point(flux, format!("error: {e}"));
                        exit = 2;
                    }
                }
            }
            write_csv(
                &csv,
                "flux,center_frequency_GHz,p1db_dbm,iip3_analytic_dbm,pump_power_dbm",
                &ok_rows,
            )?;
            manifest.outputs.push(csv.display().to_string());
        }
    }

    manifest.write(&out_dir.join("reproduce.manifest.json"))?;
    println!("reproduce: outputs in {}", out_dir.display());
    Ok(exit)
}
