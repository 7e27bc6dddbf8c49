//! Strang split-step integration of `i u_t + Δu = F(u)` with sampled
//! diagnostics and resolution guards.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{
    abs_pow, commutator_residual_with, hamiltonian, lyapunov, mass, sobolev_norm, EquationParams,
    Sign,
};
use crate::orbital::Cylinder;
use crate::spectral::{BoxGrid, DerivativeKind, GridFft, MultiplierSpec, SpectralField, SymbolTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("invalid solver setting: {0}")]
    Invalid(String),
    #[error("linear phase per step {phase} exceeds π at dt = {dt}")]
    StepTooLarge { dt: f64, phase: f64 },
    #[error("focusing run with s_c = {critical} >= 0 needs an explicit override")]
    SupercriticalFocusing { critical: f64 },
    #[error("probe does not match the field grid")]
    ProbeGridMismatch,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AbortReason {
    UnderResolved,
    BoxTooSmall,
    NonFinite,
}

impl fmt::Display for AbortReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AbortReason::UnderResolved => "under-resolved",
            AbortReason::BoxTooSmall => "box too small",
            AbortReason::NonFinite => "non-finite sample",
        })
    }
}

#[derive(Debug, Error)]
pub enum EvolveError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("run aborted at t = {t}: {reason}")]
    Aborted {
        reason: AbortReason,
        t: f64,
        partial: Box<Trajectory>,
    },
}

/// Time stepping and guard settings.
///
/// `dt` may be negative to run backwards; `t_end` is the length of the
/// interval and the run takes `round(t_end / |dt|)` steps.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub sample_every: usize,
    /// Largest admissible share of mass in `|ξ| ≥ (2/3) ξ_max`.
    pub tail_fraction_max: f64,
    /// Smallest admissible share of mass in the central half of the box;
    /// zero disables the check.
    pub localization_min: f64,
    pub allow_supercritical_focusing: bool,
}

impl SolverConfig {
    pub fn new(dt: f64, t_end: f64, sample_every: usize) -> Self {
        Self {
            dt,
            t_end,
            sample_every,
            tail_fraction_max: 1e-8,
            localization_min: 0.99,
            allow_supercritical_focusing: false,
        }
    }

    pub fn with_tail_fraction_max(mut self, value: f64) -> Self {
        self.tail_fraction_max = value;
        self
    }

    pub fn with_localization_min(mut self, value: f64) -> Self {
        self.localization_min = value;
        self
    }

    pub fn allowing_supercritical_focusing(mut self) -> Self {
        self.allow_supercritical_focusing = true;
        self
    }

    pub fn steps(&self) -> usize {
        (self.t_end / self.dt.abs()).round() as usize
    }

    /// Checks the settings and the linear phase bound `|dt|(2π ξ_max)² ≤ π`.
    pub fn validate(&self, grid: &BoxGrid) -> Result<(), ConfigError> {
        if !(self.dt.is_finite() && self.dt != 0.0) {
            return Err(ConfigError::Invalid(format!("dt = {}", self.dt)));
        }
        if !(self.t_end.is_finite() && self.t_end >= 0.0) {
            return Err(ConfigError::Invalid(format!("t_end = {}", self.t_end)));
        }
        if self.sample_every == 0 {
            return Err(ConfigError::Invalid("sample_every must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.tail_fraction_max) {
            return Err(ConfigError::Invalid(format!(
                "tail_fraction_max = {} not in [0, 1)",
                self.tail_fraction_max
            )));
        }
        if !(0.0..=1.0).contains(&self.localization_min) {
            return Err(ConfigError::Invalid(format!(
                "localization_min = {} not in [0, 1]",
                self.localization_min
            )));
        }
        let phase = self.dt.abs() * (2.0 * PI * grid.max_frequency()).powi(2);
        if phase > PI {
            return Err(ConfigError::StepTooLarge { dt: self.dt, phase });
        }
        Ok(())
    }
}

/// What to record at each sample.
#[derive(Clone, Debug)]
pub struct Probe {
    /// Regularity of the Sobolev norm column.
    pub s: f64,
    /// `I_N` for the modified energies; `None` means the identity.
    pub multiplier: Option<MultiplierSpec>,
    /// Cylinder for the distance column.
    pub cylinder: Option<Cylinder>,
    /// Record `‖I F(u) - F(I u)‖₂` (requires a multiplier).
    pub commutator: bool,
}

impl Probe {
    pub fn plain(s: f64) -> Self {
        Self { s, multiplier: None, cylinder: None, commutator: false }
    }

    pub fn with_multiplier(s: f64, spec: MultiplierSpec, commutator: bool) -> Self {
        Self { s, multiplier: Some(spec), cylinder: None, commutator }
    }

    pub fn with_cylinder(s: f64, cylinder: Cylinder) -> Self {
        Self { s, multiplier: None, cylinder: Some(cylinder), commutator: false }
    }
}

/// One sampled row.
#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub mass: f64,
    pub hamiltonian: f64,
    pub lyapunov: f64,
    pub modified_hamiltonian: f64,
    pub modified_lyapunov: f64,
    pub sobolev_norm: f64,
    pub distance: Option<f64>,
    pub commutator: Option<f64>,
    pub tail_fraction: f64,
}

impl DiagnosticsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.t,
            self.mass,
            self.hamiltonian,
            self.lyapunov,
            self.modified_hamiltonian,
            self.modified_lyapunov,
            self.sobolev_norm,
            self.tail_fraction,
        ]
        .iter()
        .chain(self.distance.iter())
        .chain(self.commutator.iter())
        .all(|v| v.is_finite())
    }
}

/// Final state plus one record series per probe.
#[derive(Clone)]
pub struct Trajectory {
    pub field: SpectralField,
    pub t: f64,
    pub steps: usize,
    pub series: Vec<Vec<DiagnosticsRecord>>,
    /// Smallest localization seen at the sample times.
    pub min_localization: f64,
    /// Largest tail fraction seen at the sample times.
    pub max_tail_fraction: f64,
}

impl fmt::Debug for Trajectory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Trajectory")
            .field("t", &self.t)
            .field("steps", &self.steps)
            .field("samples", &self.series.iter().map(Vec::len).collect::<Vec<_>>())
            .field("min_localization", &self.min_localization)
            .field("max_tail_fraction", &self.max_tail_fraction)
            .finish_non_exhaustive()
    }
}

/// Coefficient at `ξ` multiplied by `exp(-4π²i|ξ|² dt)`.
pub fn linear_substep(field: &SpectralField, dt: f64) -> SpectralField {
    let grid = *field.grid();
    let table = propagator(&grid, dt);
    let mut hat = field.to_frequency().into_values();
    hat.iter_mut().zip(&table).for_each(|(c, p)| *c *= p);
    SpectralField::from_spectrum(grid, hat).expect("grid length").to_physical()
}

/// Exact flow of `i u_t = F(u)`: `u · exp(-i·sign·|u|^{p-1} dt)`.
pub fn nonlinear_substep(field: &SpectralField, dt: f64, params: &EquationParams) -> SpectralField {
    let mut out = field.to_physical();
    nonlinear_in_place(out.values_mut(), dt, params);
    out
}

/// `N(dt/2) ∘ L(dt) ∘ N(dt/2)`.
pub fn strang_step(field: &SpectralField, dt: f64, params: &EquationParams) -> SpectralField {
    let half = nonlinear_substep(field, 0.5 * dt, params);
    nonlinear_substep(&linear_substep(&half, dt), 0.5 * dt, params)
}

fn propagator(grid: &BoxGrid, dt: f64) -> Vec<Complex64> {
    grid.frequency_norms()
        .into_iter()
        .map(|r| Complex64::from_polar(1.0, -4.0 * PI * PI * r * r * dt))
        .collect()
}

fn nonlinear_in_place(values: &mut [Complex64], dt: f64, params: &EquationParams) {
    let sign = params.sign().factor();
    let e = params.power() - 1.0;
    for v in values.iter_mut() {
        let amp = abs_pow(v.norm(), e);
        if amp != 0.0 {
            *v *= Complex64::from_polar(1.0, -sign * amp * dt);
        }
    }
}

/// Reusable Strang stepper holding the transform plan and propagator.
#[derive(Clone, Debug)]
pub struct SplitStepper {
    fft: GridFft,
    propagator: Vec<Complex64>,
    params: EquationParams,
    dt: f64,
}

impl SplitStepper {
    pub fn new(grid: BoxGrid, params: EquationParams, dt: f64) -> Self {
        Self { fft: GridFft::new(grid), propagator: propagator(&grid, dt), params, dt }
    }

    /// Advances physical samples by one step in place.
    pub fn step(&self, values: &mut [Complex64]) {
        nonlinear_in_place(values, 0.5 * self.dt, &self.params);
        self.fft.forward(values);
        values.iter_mut().zip(&self.propagator).for_each(|(c, p)| *c *= p);
        self.fft.inverse(values);
        nonlinear_in_place(values, 0.5 * self.dt, &self.params);
    }
}

/// Share of spectral mass at `|ξ| ≥ (2/3) ξ_max`.
pub fn tail_fraction(field: &SpectralField) -> f64 {
    let hat = field.to_frequency();
    let grid = hat.grid();
    let threshold = 2.0 / 3.0 * grid.max_frequency();
    let (mut tail, mut total) = (0.0, 0.0);
    for (v, r) in hat.values().iter().zip(grid.frequency_norms()) {
        let w = v.norm_sqr();
        total += w;
        if r >= threshold {
            tail += w;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Share of mass with every coordinate inside `(-L/4, L/4)`.
pub fn localization(field: &SpectralField) -> f64 {
    let phys = field.to_physical();
    let grid = phys.grid();
    let quarter = 0.25 * grid.box_length();
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, v) in phys.values().iter().enumerate() {
        let w = v.norm_sqr();
        total += w;
        let x = grid.position(i);
        if x[..grid.dim()].iter().all(|c| c.abs() < quarter) {
            inside += w;
        }
    }
    if total == 0.0 {
        1.0
    } else {
        inside / total
    }
}

struct PreparedProbe<'a> {
    probe: &'a Probe,
    table: Option<SymbolTable>,
}

impl PreparedProbe<'_> {
    fn record(&self, u: &SpectralField, t: f64, params: &EquationParams, tail: f64) -> DiagnosticsRecord {
        let m = mass(u);
        let h = hamiltonian(u, params);
        let (mh, ml) = match &self.table {
            Some(table) => {
                let iu = table.apply_or_identity(u);
                (hamiltonian(&iu, params), lyapunov(&iu, params))
            }
            None => (h, 2.0 * h + m),
        };
        DiagnosticsRecord {
            t,
            mass: m,
            hamiltonian: h,
            lyapunov: 2.0 * h + m,
            modified_hamiltonian: mh,
            modified_lyapunov: ml,
            sobolev_norm: sobolev_norm(u, self.probe.s, DerivativeKind::Inhomogeneous),
            distance: self
                .probe
                .cylinder
                .as_ref()
                .map(|c| c.fit(u).expect("grid checked").distance),
            commutator: match (&self.table, self.probe.commutator) {
                (Some(table), true) => Some(commutator_residual_with(u, table, params)),
                _ => None,
            },
            tail_fraction: tail,
        }
    }
}

/// Observer callback: `(t, field)` at every sample.
pub type Observer<'a> = dyn FnMut(f64, &SpectralField) + 'a;

/// Evolves `field` over `config.t_end`, sampling every `config.sample_every`
/// steps and at the final step.
pub fn evolve(
    field: &SpectralField,
    params: &EquationParams,
    config: &SolverConfig,
    probes: &[Probe],
    observers: &mut [&mut Observer<'_>],
) -> Result<Trajectory, EvolveError> {
    let grid = *field.grid();
    config.validate(&grid)?;
    if params.sign() == Sign::Focusing
        && params.critical_regularity() >= 0.0
        && !config.allow_supercritical_focusing
    {
        return Err(ConfigError::SupercriticalFocusing { critical: params.critical_regularity() }.into());
    }
    for probe in probes {
        if probe.cylinder.as_ref().is_some_and(|c| c.grid() != &grid) {
            return Err(ConfigError::ProbeGridMismatch.into());
        }
    }
    let prepared: Vec<PreparedProbe> = probes
        .iter()
        .map(|probe| PreparedProbe {
            probe,
            table: probe.multiplier.map(|spec| SymbolTable::multiplier(grid, &spec)),
        })
        .collect();

    let stepper = SplitStepper::new(grid, *params, config.dt);
    let steps = config.steps();
    let mut current = field.to_physical();
    let mut trajectory = Trajectory {
        field: current.clone(),
        t: 0.0,
        steps: 0,
        series: vec![Vec::new(); probes.len()],
        min_localization: 1.0,
        max_tail_fraction: 0.0,
    };

    let mut step = 0usize;
    loop {
        let t = step as f64 * config.dt;
        let guard = sample(&current, t, params, config, &prepared, &mut trajectory);
        for observer in observers.iter_mut() {
            observer(t, &current);
        }
        if let Err(reason) = guard {
            trajectory.field = current;
            trajectory.t = t;
            trajectory.steps = step;
            return Err(EvolveError::Aborted { reason, t, partial: Box::new(trajectory) });
        }
        if step == steps {
            break;
        }
        let next_sample = (step + config.sample_every).min(steps);
        while step < next_sample {
            stepper.step(current.values_mut());
            step += 1;
        }
    }
    trajectory.t = steps as f64 * config.dt;
    trajectory.steps = steps;
    trajectory.field = current;
    Ok(trajectory)
}

fn sample(
    u: &SpectralField,
    t: f64,
    params: &EquationParams,
    config: &SolverConfig,
    probes: &[PreparedProbe],
    trajectory: &mut Trajectory,
) -> Result<(), AbortReason> {
    if !u.is_finite() {
        return Err(AbortReason::NonFinite);
    }
    let tail = tail_fraction(u);
    let local = localization(u);
    trajectory.max_tail_fraction = trajectory.max_tail_fraction.max(tail);
    trajectory.min_localization = trajectory.min_localization.min(local);
    for (series, probe) in trajectory.series.iter_mut().zip(probes) {
        let record = probe.record(u, t, params, tail);
        if !record.is_finite() {
            return Err(AbortReason::NonFinite);
        }
        series.push(record);
    }
    if tail > config.tail_fraction_max {
        return Err(AbortReason::UnderResolved);
    }
    if local < config.localization_min {
        return Err(AbortReason::BoxTooSmall);
    }
    Ok(())
}
