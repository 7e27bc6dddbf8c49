//! Experiment drivers. Each `run_*` is pure computation returning a result
//! value; `write_*` persists it under an output directory.

use std::path::Path;

use nls_core::data::{perturbation, rough_field, DataError};
use nls_core::functionals::{sobolev_norm, EquationParams, Sign};
use nls_core::ground_state::{shoot, GroundStateError, GroundStateProfile};
use nls_core::integrator::{
    evolve, AbortReason, ConfigError as SolverError, DiagnosticsRecord, EvolveError, Probe,
    SolverConfig, Trajectory,
};
use nls_core::orbital::{Cylinder, OrbitalError};
use nls_core::spectral::{DerivativeKind, MultiplierSpec, SpectralError, SpectralField};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::config::ExperimentConfig;
use crate::fit::{fit_loglog, FitError, LogLogFit};
use crate::output::{write_diagnostics_csv, write_summary, Manifest, OutputError};
use crate::scaling::{choose_parameters, rescale, ParameterChoice, ScalingError};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    GroundState(#[from] GroundStateError),
    #[error(transparent)]
    Orbital(#[from] OrbitalError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Scaling(#[from] ScalingError),
    #[error(transparent)]
    Output(#[from] OutputError),
    #[error("{0}")]
    Precondition(String),
}

/// Rough data keep their spectrum below this share of the largest
/// resolved frequency, under the solver's `2/3` tail threshold.
pub const ROUGH_CUTOFF_FRACTION: f64 = 0.6;
/// Stability perturbations live on `|ξ| ≤ ξ_max / 4`.
pub const PERTURBATION_BAND_FRACTION: f64 = 0.25;
/// Bisection tolerance on `Q(0)`.
pub const SHOOTING_TOLERANCE: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Abort {
    pub reason: &'static str,
    pub t: f64,
}

fn reason_label(reason: AbortReason) -> &'static str {
    match reason {
        AbortReason::UnderResolved => "under-resolved",
        AbortReason::BoxTooSmall => "box-too-small",
        AbortReason::NonFinite => "non-finite",
    }
}

/// Runs the solver, turning a guard abort into its partial trajectory.
fn run_guarded(
    field: &SpectralField,
    params: &EquationParams,
    solver: &SolverConfig,
    probes: &[Probe],
) -> Result<(Trajectory, Option<Abort>), ExperimentError> {
    match evolve(field, params, solver, probes, &mut []) {
        Ok(t) => Ok((t, None)),
        Err(EvolveError::Aborted { reason, t, partial }) => {
            Ok((*partial, Some(Abort { reason: reason_label(reason), t })))
        }
        Err(EvolveError::Config(e)) => Err(e.into()),
    }
}

fn relative_mass_drift(records: &[DiagnosticsRecord]) -> f64 {
    let Some(first) = records.first() else { return 0.0 };
    let m0 = first.mass;
    records.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max) / m0.abs().max(f64::MIN_POSITIVE)
}

fn sup_drift(records: &[DiagnosticsRecord], f: impl Fn(&DiagnosticsRecord) -> f64) -> f64 {
    let Some(first) = records.first() else { return 0.0 };
    let v0 = f(first);
    records.iter().map(|r| (f(r) - v0).abs()).fold(0.0, f64::max)
}

fn fit_note(result: Result<LogLogFit, FitError>) -> (Option<LogLogFit>, Option<String>) {
    match result {
        Ok(fit) => (Some(fit), None),
        Err(e) => (None, Some(e.to_string())),
    }
}

/// The seeded rough field of `H^s` size `sigma_list[0]` used by the drift
/// and growth experiments.
pub fn rough_data(config: &ExperimentConfig) -> Result<SpectralField, ExperimentError> {
    let cutoff = ROUGH_CUTOFF_FRACTION * config.grid.max_frequency();
    Ok(rough_field(config.seed, config.grid, config.s, cutoff, config.sigma_list[0])?)
}

fn multiplier_probes(config: &ExperimentConfig) -> Result<Vec<Probe>, ExperimentError> {
    config
        .n_list
        .iter()
        .map(|&n| Ok(Probe::with_multiplier(config.s, MultiplierSpec::new(config.s, n)?, true)))
        .collect()
}

// ---------------------------------------------------------------- drift vs N

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftRow {
    pub n: f64,
    /// `sup_t |H(I_N u(t)) - H(I_N u(0))|`.
    pub drift_hamiltonian: f64,
    /// `sup_t |L(I_N u(t)) - L(I_N u(0))|`.
    pub drift_lyapunov: f64,
    /// `sup_t ‖I_N F(u) - F(I_N u)‖₂`.
    pub max_commutator: f64,
    pub initial_modified_hamiltonian: f64,
}

#[derive(Clone, Debug)]
pub struct AlmostConservation {
    pub rows: Vec<DriftRow>,
    pub hamiltonian_fit: Result<LogLogFit, FitError>,
    pub lyapunov_fit: Result<LogLogFit, FitError>,
    pub commutator_fit: Result<LogLogFit, FitError>,
    /// One record series per entry of `N_list`, all from one trajectory.
    pub series: Vec<Vec<DiagnosticsRecord>>,
    pub mass_drift: f64,
    /// Ordinary Hamiltonian drift relative to `|H(u(0))|`.
    pub hamiltonian_drift: f64,
    pub aborted: Option<Abort>,
}

impl AlmostConservation {
    /// Fit of the functional that applies to the sign: `H` when defocusing,
    /// `L` when focusing.
    pub fn primary_fit(&self, sign: Sign) -> &Result<LogLogFit, FitError> {
        match sign {
            Sign::Defocusing => &self.hamiltonian_fit,
            Sign::Focusing => &self.lyapunov_fit,
        }
    }
}

/// Evolves the rough data once and reads the modified energies for every
/// `N` off the same trajectory.
pub fn run_almost_conservation(
    config: &ExperimentConfig,
) -> Result<AlmostConservation, ExperimentError> {
    let params = config.params;
    if params.sign() == Sign::Focusing && !params.is_l2_subcritical() {
        return Err(ExperimentError::Precondition(
            "focusing drift runs need an L2-subcritical power".into(),
        ));
    }
    let u0 = rough_data(config)?;
    run_almost_conservation_from(config, &u0)
}

/// [`run_almost_conservation`] with caller-supplied initial data.
pub fn run_almost_conservation_from(
    config: &ExperimentConfig,
    u0: &SpectralField,
) -> Result<AlmostConservation, ExperimentError> {
    let solver = config.solver.with_localization_min(0.0);
    let probes = multiplier_probes(config)?;
    let (trajectory, aborted) = run_guarded(u0, &config.params, &solver, &probes)?;
    let series = trajectory.series;
    let rows: Vec<DriftRow> = config
        .n_list
        .iter()
        .zip(&series)
        .map(|(&n, records)| DriftRow {
            n,
            drift_hamiltonian: sup_drift(records, |r| r.modified_hamiltonian),
            drift_lyapunov: sup_drift(records, |r| r.modified_lyapunov),
            max_commutator: records.iter().filter_map(|r| r.commutator).fold(0.0, f64::max),
            initial_modified_hamiltonian: records.first().map_or(f64::NAN, |r| r.modified_hamiltonian),
        })
        .collect();
    let points = |f: fn(&DriftRow) -> f64| rows.iter().map(|r| (r.n, f(r))).collect::<Vec<_>>();
    let first = &series[0];
    let h0 = first.first().map_or(0.0, |r| r.hamiltonian);
    Ok(AlmostConservation {
        hamiltonian_fit: fit_loglog(&points(|r| r.drift_hamiltonian)),
        lyapunov_fit: fit_loglog(&points(|r| r.drift_lyapunov)),
        commutator_fit: fit_loglog(&points(|r| r.max_commutator)),
        mass_drift: relative_mass_drift(first),
        hamiltonian_drift: sup_drift(first, |r| r.hamiltonian) / h0.abs().max(f64::MIN_POSITIVE),
        rows,
        series,
        aborted,
    })
}

#[derive(Serialize)]
struct FitLine<'a> {
    kind: &'a str,
    fit: Option<LogLogFit>,
    error: Option<String>,
}

pub fn write_almost_conservation(
    dir: &Path,
    config: &ExperimentConfig,
    result: &AlmostConservation,
) -> Result<(), ExperimentError> {
    let base = Manifest::for_run("almost-conservation", config);
    for (n, records) in config.n_list.iter().zip(&result.series) {
        let manifest = base.clone().with("N", n);
        write_diagnostics_csv(&dir.join(format!("almost_conservation_N{n}.csv")), &manifest, records)?;
    }
    let mut lines: Vec<serde_json::Value> =
        result.rows.iter().map(serde_json::to_value).collect::<Result<_, _>>().map_err(OutputError::from)?;
    for (kind, fit) in [
        ("drift_hamiltonian", &result.hamiltonian_fit),
        ("drift_lyapunov", &result.lyapunov_fit),
        ("max_commutator", &result.commutator_fit),
    ] {
        let (fit, error) = fit_note(fit.clone());
        lines.push(serde_json::to_value(FitLine { kind, fit, error }).map_err(OutputError::from)?);
    }
    lines.push(serde_json::json!({
        "mass_drift": result.mass_drift,
        "hamiltonian_drift": result.hamiltonian_drift,
        "aborted": result.aborted,
    }));
    write_summary(&dir.join("almost_conservation_summary.jsonl"), &base, &lines)?;
    Ok(())
}

// ------------------------------------------------------- orbital stability

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StabilityRow {
    pub sigma: f64,
    /// `N = σ^{-a}` used for the modified Lyapunov column; absent at `σ = 0`.
    pub n_cutoff: Option<f64>,
    pub radius: f64,
    pub initial_norm: f64,
    /// First sample time with `‖u(t)‖_{H^s} > radius`; `None` means no exit
    /// before the end of the run.
    pub exit_time: Option<f64>,
    pub initial_distance: f64,
    pub max_distance: f64,
    pub max_norm_ratio: f64,
    pub mass_drift: f64,
    pub aborted: Option<Abort>,
}

#[derive(Clone, Debug)]
pub struct Stability {
    pub rows: Vec<StabilityRow>,
    /// Unperturbed soliton run.
    pub control: StabilityRow,
    /// Fit of `t*` against `1/σ` over the rows with a finite exit time.
    pub exit_fit: Result<LogLogFit, FitError>,
    /// Exit times never decrease as `σ` decreases (no exit counts as `+∞`).
    pub monotone: bool,
    pub series: Vec<Vec<DiagnosticsRecord>>,
    pub control_series: Vec<DiagnosticsRecord>,
}

fn stability_job(
    config: &ExperimentConfig,
    q: &SpectralField,
    cylinder: &Cylinder,
    sigma: f64,
    index: u64,
) -> Result<(StabilityRow, Vec<DiagnosticsRecord>), ExperimentError> {
    let grid = config.grid;
    let s = config.s;
    let u0 = if sigma > 0.0 {
        let band = [0.0, PERTURBATION_BAND_FRACTION * grid.max_frequency()];
        let seed = config.seed.wrapping_add(index);
        let v = perturbation(seed, band, s, sigma, grid)?;
        q.add_scaled(&v, 1.0)?
    } else {
        q.clone()
    };
    let n_cutoff = (sigma > 0.0).then(|| sigma.powf(-config.a));
    let probe = Probe {
        s,
        multiplier: n_cutoff.map(|n| MultiplierSpec::new(s, n)).transpose()?,
        cylinder: Some(cylinder.clone()),
        commutator: false,
    };
    let (trajectory, aborted) = run_guarded(&u0, &config.params, &config.solver, &[probe])?;
    let records = trajectory.series.into_iter().next().unwrap_or_default();
    let initial_norm = sobolev_norm(&u0, s, DerivativeKind::Inhomogeneous);
    let radius = config.radius_r.unwrap_or(2.0 * initial_norm);
    let exit_time = records.iter().find(|r| r.sobolev_norm > radius).map(|r| r.t);
    let distances: Vec<f64> = records.iter().filter_map(|r| r.distance).collect();
    let row = StabilityRow {
        sigma,
        n_cutoff,
        radius,
        initial_norm,
        exit_time,
        initial_distance: distances.first().copied().unwrap_or(f64::NAN),
        max_distance: distances.iter().copied().fold(0.0, f64::max),
        max_norm_ratio: records.iter().map(|r| r.sobolev_norm / initial_norm).fold(0.0, f64::max),
        mass_drift: relative_mass_drift(&records),
        aborted,
    };
    Ok((row, records))
}

/// Perturbed soliton sweep over `sigma_list`, plus the `σ = 0` control.
/// Sweep points run concurrently and are merged in input order.
pub fn run_stability(config: &ExperimentConfig) -> Result<Stability, ExperimentError> {
    let params = config.params;
    if params.sign() != Sign::Focusing || !params.is_l2_subcritical() {
        return Err(ExperimentError::Precondition(
            "stability runs need a focusing L2-subcritical power".into(),
        ));
    }
    let profile = shoot(&params, SHOOTING_TOLERANCE)?;
    run_stability_with(config, &profile)
}

/// [`run_stability`] with a precomputed ground state.
pub fn run_stability_with(
    config: &ExperimentConfig,
    profile: &GroundStateProfile,
) -> Result<Stability, ExperimentError> {
    let dim = config.grid.dim();
    let q = profile.embed(config.grid, 0.0, &vec![0.0; dim])?;
    let cylinder = Cylinder::from_field(&q, config.s);
    let mut sigmas = vec![0.0];
    sigmas.extend(config.sigma_list.iter().copied());
    let mut results: Vec<(StabilityRow, Vec<DiagnosticsRecord>)> = sigmas
        .par_iter()
        .enumerate()
        .map(|(i, &sigma)| stability_job(config, &q, &cylinder, sigma, i as u64))
        .collect::<Result<_, _>>()?;
    let (control, control_series) = results.remove(0);
    let (rows, series): (Vec<_>, Vec<_>) = results.into_iter().unzip();

    let mut order: Vec<usize> = (0..rows.len()).collect();
    order.sort_by(|&a, &b| rows[b].sigma.total_cmp(&rows[a].sigma));
    let as_time = |r: &StabilityRow| r.exit_time.unwrap_or(f64::INFINITY);
    let monotone = order.windows(2).all(|w| as_time(&rows[w[1]]) >= as_time(&rows[w[0]]));
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter_map(|r| r.exit_time.map(|t| (1.0 / r.sigma, t)))
        .collect();
    let exit_fit = if points.len() < rows.len() {
        Err(FitError::NonPositive(
            rows.iter()
                .enumerate()
                .filter(|(_, r)| r.exit_time.is_none())
                .map(|(i, r)| (i, 1.0 / r.sigma, f64::INFINITY))
                .collect(),
        ))
    } else {
        fit_loglog(&points)
    };
    Ok(Stability { rows, control, exit_fit, monotone, series, control_series })
}

pub fn write_stability(
    dir: &Path,
    config: &ExperimentConfig,
    result: &Stability,
) -> Result<(), ExperimentError> {
    let base = Manifest::for_run("stability", config);
    write_diagnostics_csv(
        &dir.join("stability_sigma0.csv"),
        &base.clone().with("sigma", 0.0).with("radius_R_used", result.control.radius),
        &result.control_series,
    )?;
    for (row, records) in result.rows.iter().zip(&result.series) {
        let manifest = base
            .clone()
            .with("sigma", row.sigma)
            .with("radius_R_used", row.radius)
            .with("N", row.n_cutoff.map_or("none".to_string(), |n| n.to_string()));
        write_diagnostics_csv(&dir.join(format!("stability_sigma{}.csv", row.sigma)), &manifest, records)?;
    }
    let mut lines: Vec<serde_json::Value> = std::iter::once(&result.control)
        .chain(&result.rows)
        .map(serde_json::to_value)
        .collect::<Result<_, _>>()
        .map_err(OutputError::from)?;
    let (fit, error) = fit_note(result.exit_fit.clone());
    lines.push(serde_json::to_value(FitLine { kind: "exit_time_vs_inverse_sigma", fit, error }).map_err(OutputError::from)?);
    lines.push(serde_json::json!({ "monotone": result.monotone }));
    write_summary(&dir.join("stability_summary.jsonl"), &base, &lines)?;
    Ok(())
}

// ---------------------------------------------------------------- growth

#[derive(Clone, Debug)]
pub struct Growth {
    pub records: Vec<DiagnosticsRecord>,
    /// Log-log fit of the running maximum of `‖u(t)‖_{H^s}` against `t > 0`.
    pub running_max_fit: Result<LogLogFit, FitError>,
    pub max_norm_ratio: f64,
    pub mass_drift: f64,
    pub aborted: Option<Abort>,
}

pub fn run_growth(config: &ExperimentConfig) -> Result<Growth, ExperimentError> {
    if config.params.sign() != Sign::Defocusing {
        return Err(ExperimentError::Precondition("growth runs are defocusing".into()));
    }
    let u0 = rough_data(config)?;
    run_growth_from(config, &u0)
}

pub fn run_growth_from(config: &ExperimentConfig, u0: &SpectralField) -> Result<Growth, ExperimentError> {
    let solver = config.solver.with_localization_min(0.0);
    let (trajectory, aborted) = run_guarded(u0, &config.params, &solver, &[Probe::plain(config.s)])?;
    let records = trajectory.series.into_iter().next().unwrap_or_default();
    let norm0 = records.first().map_or(f64::NAN, |r| r.sobolev_norm);
    let mut running = 0.0f64;
    let points: Vec<(f64, f64)> = records
        .iter()
        .map(|r| {
            running = running.max(r.sobolev_norm);
            (r.t.abs(), running)
        })
        .filter(|(t, _)| *t > 0.0)
        .collect();
    Ok(Growth {
        running_max_fit: fit_loglog(&points),
        max_norm_ratio: running / norm0,
        mass_drift: relative_mass_drift(&records),
        records,
        aborted,
    })
}

pub fn write_growth(dir: &Path, config: &ExperimentConfig, result: &Growth) -> Result<(), ExperimentError> {
    let base = Manifest::for_run("growth", config);
    write_diagnostics_csv(&dir.join("growth.csv"), &base, &result.records)?;
    let (fit, error) = fit_note(result.running_max_fit.clone());
    let lines = vec![
        serde_json::to_value(FitLine { kind: "running_max_sobolev_norm", fit, error })
            .map_err(OutputError::from)?,
        serde_json::json!({
            "max_norm_ratio": result.max_norm_ratio,
            "mass_drift": result.mass_drift,
            "aborted": result.aborted,
        }),
    ];
    write_summary(&dir.join("growth_summary.jsonl"), &base, &lines)?;
    Ok(())
}

// ---------------------------------------------------------------- rescaling

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Rescaling {
    pub lambda: f64,
    pub s_c: f64,
    /// `‖u_λ‖_{Ḣ^s} / ‖u‖_{Ḣ^s}` measured and predicted `λ^{s_c - s}`.
    pub homogeneous_ratio: f64,
    pub homogeneous_predicted: f64,
    /// `‖u_λ‖₂ / ‖u‖₂` measured and predicted `λ^{s_c}`, the `s = 0` case
    /// of the homogeneous law.
    pub l2_ratio: f64,
    pub l2_predicted: f64,
    pub alpha_fit: f64,
    pub t_target: f64,
    pub choice: ParameterChoice,
}

/// Checks the scaling laws on seeded band-limited data and picks `(N, λ)`
/// for a run of length `t_end` given a fitted decay exponent.
pub fn run_rescaling(config: &ExperimentConfig, alpha_fit: f64) -> Result<Rescaling, ExperimentError> {
    let grid = config.grid;
    let band = [0.0, 0.125 * grid.max_frequency()];
    let u = perturbation(config.seed, band, config.s, config.sigma_list[0], grid)?;
    let params = config.params;
    let lambda = config.lambda;
    let ul = rescale(&u, lambda, &params)?;
    let s_c = params.critical_regularity();
    let hom = |f: &SpectralField| sobolev_norm(f, config.s, DerivativeKind::Homogeneous);
    let l2 = |f: &SpectralField| sobolev_norm(f, 0.0, DerivativeKind::Inhomogeneous);
    Ok(Rescaling {
        lambda,
        s_c,
        homogeneous_ratio: hom(&ul) / hom(&u),
        homogeneous_predicted: lambda.powf(s_c - config.s),
        l2_ratio: l2(&ul) / l2(&u),
        l2_predicted: lambda.powf(s_c),
        alpha_fit,
        t_target: config.solver.t_end,
        choice: choose_parameters(config.solver.t_end, config.s, &params, alpha_fit),
    })
}

pub fn write_rescaling(dir: &Path, config: &ExperimentConfig, result: &Rescaling) -> Result<(), ExperimentError> {
    let base = Manifest::for_run("rescaling", config);
    write_summary(&dir.join("rescaling_summary.jsonl"), &base, &[result])?;
    Ok(())
}

/// Reads the decay exponent `α = -slope` from an almost-conservation summary.
pub fn alpha_from_summary(path: &Path) -> Result<f64, ExperimentError> {
    let lines = crate::output::read_summary(path)?;
    let manifest = lines.first().and_then(|l| l.get("manifest")).cloned().unwrap_or_default();
    let kind = match manifest.get("sign").and_then(|v| v.as_str()) {
        Some("focusing") => "drift_lyapunov",
        _ => "drift_hamiltonian",
    };
    lines
        .iter()
        .find(|l| l.get("kind").and_then(|k| k.as_str()) == Some(kind))
        .and_then(|l| l.get("fit")?.get("slope")?.as_f64())
        .map(|slope| -slope)
        .ok_or_else(|| ExperimentError::Precondition(format!("no fitted {kind} slope in {}", path.display())))
}

// ---------------------------------------------------------------- simulate

#[derive(Clone, Debug)]
pub struct Simulation {
    pub series: Vec<Vec<DiagnosticsRecord>>,
    pub mass_drift: f64,
    pub aborted: Option<Abort>,
}

/// One evolution with a probe per `N`. Focusing L2-subcritical runs start
/// from the ground state plus a perturbation of size `sigma_list[0]` and
/// also record the distance to the cylinder; other runs start from rough
/// data of that size.
pub fn simulate(config: &ExperimentConfig) -> Result<Simulation, ExperimentError> {
    let params = config.params;
    let mut probes = multiplier_probes(config)?;
    let soliton = params.sign() == Sign::Focusing && params.is_l2_subcritical();
    let (u0, solver) = if soliton {
        let profile = shoot(&params, SHOOTING_TOLERANCE)?;
        let q = profile.embed(config.grid, 0.0, &vec![0.0; config.grid.dim()])?;
        let band = [0.0, PERTURBATION_BAND_FRACTION * config.grid.max_frequency()];
        let v = perturbation(config.seed, band, config.s, config.sigma_list[0], config.grid)?;
        probes[0].cylinder = Some(Cylinder::from_field(&q, config.s));
        (q.add_scaled(&v, 1.0)?, config.solver)
    } else {
        (rough_data(config)?, config.solver.with_localization_min(0.0))
    };
    let (trajectory, aborted) = run_guarded(&u0, &params, &solver, &probes)?;
    Ok(Simulation {
        mass_drift: relative_mass_drift(&trajectory.series[0]),
        series: trajectory.series,
        aborted,
    })
}

pub fn write_simulation(dir: &Path, config: &ExperimentConfig, result: &Simulation) -> Result<(), ExperimentError> {
    let base = Manifest::for_run("simulate", config);
    for (n, records) in config.n_list.iter().zip(&result.series) {
        write_diagnostics_csv(&dir.join(format!("simulate_N{n}.csv")), &base.clone().with("N", n), records)?;
    }
    let lines = vec![serde_json::json!({ "mass_drift": result.mass_drift, "aborted": result.aborted })];
    write_summary(&dir.join("simulate_summary.jsonl"), &base, &lines)?;
    Ok(())
}
