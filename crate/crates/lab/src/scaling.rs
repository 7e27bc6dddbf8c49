//! Scaling symmetry `u_λ(x) = λ^{-2/(p-1)} u(x/λ)` and the choice of
//! `(N, λ)` for a rescaled I-method run.

use nls_core::functionals::EquationParams;
use nls_core::spectral::{BoxGrid, SpectralError, SpectralField};
use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalingError {
    #[error("scaling parameter {0} must be finite and at least 1")]
    InvalidLambda(f64),
    #[error("in-box rescaling needs an integer λ, got {0}")]
    NonIntegerLambda(f64),
    #[error("{fraction:.3e} of the mass lies outside the central 1/λ box")]
    SupportOverflow { fraction: f64 },
    #[error(transparent)]
    Grid(#[from] SpectralError),
}

/// Mass share outside the box allowed by [`rescale_in_box`].
pub const SUPPORT_TOLERANCE: f64 = 1e-12;

fn check_lambda(lambda: f64) -> Result<(), ScalingError> {
    if lambda.is_finite() && lambda >= 1.0 {
        Ok(())
    } else {
        Err(ScalingError::InvalidLambda(lambda))
    }
}

/// Amplitude factor `λ^{-2/(p-1)}`.
pub fn amplitude(lambda: f64, params: &EquationParams) -> f64 {
    lambda.powf(-2.0 / (params.power() - 1.0))
}

/// `u_λ` sampled on the grid whose box is `λ` times larger: the sample at
/// `λ x_j` is `λ^{-2/(p-1)} u(x_j)`, so no interpolation is involved.
pub fn rescale(
    field: &SpectralField,
    lambda: f64,
    params: &EquationParams,
) -> Result<SpectralField, ScalingError> {
    check_lambda(lambda)?;
    let grid = field.grid().scaled(lambda)?;
    let amp = Complex64::new(amplitude(lambda, params), 0.0);
    let values = field.to_physical().into_values().into_iter().map(|v| v * amp).collect();
    Ok(SpectralField::from_physical(grid, values)?)
}

/// `u_λ` on the same grid, for integer `λ`. The input must live in the
/// central `1/λ` part of the box; values at `x_j / λ` come from exact
/// trigonometric interpolation on a `λ`-times finer grid.
pub fn rescale_in_box(
    field: &SpectralField,
    lambda: f64,
    params: &EquationParams,
) -> Result<SpectralField, ScalingError> {
    check_lambda(lambda)?;
    if lambda.fract() != 0.0 {
        return Err(ScalingError::NonIntegerLambda(lambda));
    }
    let factor = lambda as usize;
    if factor == 1 {
        return Ok(field.to_physical());
    }
    let grid = *field.grid();
    let dim = grid.dim();
    let u = field.to_physical();
    let half = 0.5 * grid.box_length() / lambda;
    let (mut inside, mut total) = (0.0, 0.0);
    for (i, v) in u.values().iter().enumerate() {
        let x = grid.position(i);
        let w = v.norm_sqr();
        total += w;
        if x[..dim].iter().all(|c| c.abs() <= half) {
            inside += w;
        }
    }
    if total > 0.0 && (total - inside) / total > SUPPORT_TOLERANCE {
        return Err(ScalingError::SupportOverflow { fraction: (total - inside) / total });
    }

    let m = grid.points_per_axis();
    let fine_grid = BoxGrid::new(dim, grid.box_length(), m * factor)?;
    let fine_m = fine_grid.points_per_axis() as i64;
    let coarse = u.to_frequency();
    let mut spectrum = vec![Complex64::new(0.0, 0.0); fine_grid.len()];
    let wrap = |k: i64| k.rem_euclid(fine_m) as usize;
    for (i, v) in coarse.values().iter().enumerate() {
        let idx = grid.unflatten(i);
        let fine_idx: Vec<usize> = (0..dim).map(|a| wrap(grid.wavenumber(idx[a]))).collect();
        spectrum[fine_grid.flatten(&fine_idx)] = *v;
    }
    let fine = SpectralField::from_spectrum(fine_grid, spectrum)?.to_physical();
    let amp = amplitude(lambda, params);
    let values = (0..grid.len())
        .map(|i| {
            let idx = grid.unflatten(i);
            let fine_idx: Vec<usize> = (0..dim).map(|a| wrap(grid.wavenumber(idx[a]))).collect();
            fine.values()[fine_grid.flatten(&fine_idx)] * amp
        })
        .collect();
    Ok(SpectralField::from_physical(grid, values)?)
}

/// Menu depth for both `N = 8·2^i` and `λ = 2^j`.
pub const MENU_DEPTH: u32 = 40;
/// Upper bound on `N^{2(1-s)} λ^{2(s_c - s)}`.
pub const SMALLNESS_BOUND: f64 = 0.1;
/// Required factor in `N^α / λ² ≥ 10·T`.
pub const WINDOW_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum ParameterChoice {
    Feasible {
        n: f64,
        lambda: f64,
        /// `N^{2(1-s)} λ^{2(s_c - s)}`.
        smallness: f64,
        /// `N^α / λ²`.
        window: f64,
    },
    Infeasible {
        reason: String,
        candidates_tried: usize,
    },
}

/// Smallest `(N, λ)` on the menu `N = 8·2^i`, `λ = 2^j` (`i ≥ 0`, `j ≥ 1`),
/// ordered by `N` first, with `N^{2(1-s)} λ^{2(s_c - s)} ≤ 0.1` and
/// `N^{α_fit} / λ² ≥ 10·T_target`.
pub fn choose_parameters(
    t_target: f64,
    s: f64,
    params: &EquationParams,
    alpha_fit: f64,
) -> ParameterChoice {
    let s_c = params.critical_regularity();
    let infeasible = |reason: String, tried| ParameterChoice::Infeasible { reason, candidates_tried: tried };
    if !(t_target.is_finite() && t_target >= 0.0) {
        return infeasible(format!("target time {t_target} is not a non-negative number"), 0);
    }
    if !(s > 0.0 && s <= 1.0) {
        return infeasible(format!("regularity {s} not in (0, 1]"), 0);
    }
    if s_c >= s {
        return infeasible(format!("s = {s} does not exceed s_c = {s_c}"), 0);
    }
    if !(alpha_fit.is_finite() && alpha_fit > 0.0) {
        return infeasible(
            format!("fitted decay exponent {alpha_fit} is not positive, so N^α/λ² cannot grow"),
            0,
        );
    }
    let mut tried = 0;
    for i in 0..=MENU_DEPTH {
        let n = 8.0 * 2f64.powi(i as i32);
        for j in 1..=MENU_DEPTH {
            let lambda = 2f64.powi(j as i32);
            tried += 1;
            let smallness = n.powf(2.0 * (1.0 - s)) * lambda.powf(2.0 * (s_c - s));
            let window = n.powf(alpha_fit) / (lambda * lambda);
            if smallness > SMALLNESS_BOUND {
                continue;
            }
            if window >= WINDOW_FACTOR * t_target {
                return ParameterChoice::Feasible { n, lambda, smallness, window };
            }
            // larger λ only shrinks the window at this N
            break;
        }
    }
    infeasible(format!("menu exhausted for T = {t_target}, s = {s}, α = {alpha_fit}"), tried)
}
