//! Distance from a field to the ground-state cylinder `{e^{iθ} Q(· - x0)}`
//! in `H^s`, with recovery of the optimal phase and shift.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{gradient, lyapunov, sobolev_weight};
use crate::ground_state::{GroundStateError, GroundStateProfile};
use crate::spectral::{BoxGrid, DerivativeKind, GridFft, SpectralField};

/// Relative size of `|⟨u, v⟩|` below which the phase is undetermined.
const DEGENERACY_LEVEL: f64 = 1e-13;

/// Refinement stops once every coordinate update is below this fraction of
/// the grid spacing.
const REFINE_TOLERANCE: f64 = 1e-4;

const MAX_REFINE_ROUNDS: usize = 60;

/// Upper end of the small-distance regime for the Lyapunov comparison.
pub const TRUST_RADIUS: f64 = 0.5;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OrbitalError {
    #[error(transparent)]
    Profile(#[from] GroundStateError),
    #[error("field grid does not match the cylinder grid")]
    GridMismatch,
    #[error("outside small-distance regime: distance {distance} not in (0, {TRUST_RADIUS})")]
    OutsideTrustRegion { distance: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhaseFit {
    /// Minimizing phase in `[0, 2π)`.
    pub theta: f64,
    /// Set when `⟨u, v⟩_{H^s}` vanishes and every phase is optimal.
    pub degenerate: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModulationFit {
    pub distance: f64,
    pub theta: f64,
    pub x0: Vec<f64>,
    pub converged: bool,
    pub evaluations: usize,
    pub degenerate: bool,
}

fn weights(grid: &BoxGrid, s: f64) -> Vec<f64> {
    grid.frequency_norms()
        .into_iter()
        .map(|r| sobolev_weight(r, s, DerivativeKind::Inhomogeneous))
        .collect()
}

fn phase_of(inner: Complex64, scale: f64) -> PhaseFit {
    if inner.norm() <= DEGENERACY_LEVEL * scale {
        return PhaseFit { theta: 0.0, degenerate: true };
    }
    PhaseFit { theta: inner.arg().rem_euclid(2.0 * PI), degenerate: false }
}

/// `θ* = arg ⟨u, v⟩_{H^s}`, the exact minimizer of `‖u - e^{iθ} v‖_{H^s}`.
pub fn optimal_phase(u: &SpectralField, v: &SpectralField, s: f64) -> PhaseFit {
    let grid = u.grid();
    let w = weights(grid, s);
    let (a, b) = (u.to_frequency(), v.to_frequency());
    let mut inner = Complex64::new(0.0, 0.0);
    let (mut na, mut nb) = (0.0, 0.0);
    for ((x, y), &wk) in a.values().iter().zip(b.values()).zip(&w) {
        inner += x * y.conj() * wk;
        na += x.norm_sqr() * wk;
        nb += y.norm_sqr() * wk;
    }
    phase_of(inner, (na * nb).sqrt())
}

/// The cylinder through a ground state on a fixed grid, with the transform
/// of `Q` and the `H^s` weights precomputed.
#[derive(Clone, Debug)]
pub struct Cylinder {
    grid: BoxGrid,
    s: f64,
    weights: Vec<f64>,
    q_hat: Vec<Complex64>,
    q_norm_sq: f64,
    frequencies: Vec<[f64; 3]>,
    fft: GridFft,
}

impl Cylinder {
    pub fn new(profile: &GroundStateProfile, grid: BoxGrid, s: f64) -> Result<Self, OrbitalError> {
        let q = profile.embed(grid, 0.0, &vec![0.0; grid.dim()])?;
        Ok(Self::from_field(&q, s))
    }

    /// Cylinder through an arbitrary template field centred at the origin.
    pub fn from_field(template: &SpectralField, s: f64) -> Self {
        let grid = *template.grid();
        let weights = weights(&grid, s);
        let q_hat = template.to_frequency().into_values();
        let q_norm_sq = q_hat
            .iter()
            .zip(&weights)
            .map(|(q, w)| q.norm_sqr() * w)
            .sum::<f64>()
            / grid.volume();
        let frequencies = (0..grid.len()).map(|i| grid.frequency(i)).collect();
        Self { grid, s, weights, q_hat, q_norm_sq, frequencies, fft: GridFft::new(grid) }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// `e^{iθ} Q(· - x0)` via a Fourier phase ramp.
    pub fn member(&self, theta: f64, x0: &[f64]) -> SpectralField {
        let phase = Complex64::from_polar(1.0, theta);
        let data = self
            .q_hat
            .iter()
            .zip(&self.frequencies)
            .map(|(q, xi)| q * phase * ramp(xi, x0, -1.0))
            .collect();
        SpectralField::from_spectrum(self.grid, data).expect("grid length").to_physical()
    }

    /// `‖u - e^{iθ} Q(· - x0)‖_{H^s}` evaluated directly.
    pub fn distance_at(&self, u: &SpectralField, theta: f64, x0: &[f64]) -> f64 {
        let u_hat = u.to_frequency();
        self.direct_distance(u_hat.values(), theta, x0)
    }

    fn direct_distance(&self, u_hat: &[Complex64], theta: f64, x0: &[f64]) -> f64 {
        let phase = Complex64::from_polar(1.0, theta);
        let sum: f64 = u_hat
            .iter()
            .zip(&self.q_hat)
            .zip(&self.frequencies)
            .zip(&self.weights)
            .map(|(((u, q), xi), w)| (u - q * phase * ramp(xi, x0, -1.0)).norm_sqr() * w)
            .sum();
        (sum / self.grid.volume()).sqrt()
    }

    /// `⟨u, Q(· - x0)⟩_{H^s}` by direct summation.
    fn correlation(&self, cross: &[Complex64], x0: &[f64]) -> Complex64 {
        let sum: Complex64 = cross
            .iter()
            .zip(&self.frequencies)
            .map(|(c, xi)| c * ramp(xi, x0, 1.0))
            .sum();
        sum / self.grid.volume()
    }

    /// The correlation and its first two derivatives along `axis`.
    fn correlation_derivatives(
        &self,
        cross: &[Complex64],
        x0: &[f64],
        axis: usize,
    ) -> (Complex64, Complex64, Complex64) {
        let mut sums = [Complex64::new(0.0, 0.0); 3];
        for (c, xi) in cross.iter().zip(&self.frequencies) {
            let term = c * ramp(xi, x0, 1.0);
            let k = Complex64::new(0.0, 2.0 * PI * xi[axis]);
            sums[0] += term;
            sums[1] += term * k;
            sums[2] += term * k * k;
        }
        let v = self.grid.volume();
        (sums[0] / v, sums[1] / v, sums[2] / v)
    }

    /// Minimizes `‖u - e^{iθ} Q(· - x0)‖_{H^s}` over `θ` (in closed form) and
    /// `x0` (global lattice search, then sub-lattice refinement).
    pub fn fit(&self, u: &SpectralField) -> Result<ModulationFit, OrbitalError> {
        if u.grid() != &self.grid {
            return Err(OrbitalError::GridMismatch);
        }
        let u_hat = u.to_frequency().into_values();
        let u_norm_sq = u_hat
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v.norm_sqr() * w)
            .sum::<f64>()
            / self.grid.volume();
        let scale = (u_norm_sq * self.q_norm_sq).sqrt();
        let cross: Vec<Complex64> = u_hat
            .iter()
            .zip(&self.q_hat)
            .zip(&self.weights)
            .map(|((u, q), w)| u * q.conj() * w)
            .collect();

        // coarse: correlation at every lattice shift from one inverse transform
        let mut lattice = cross.clone();
        self.fft.inverse(&mut lattice);
        let mut best = 0usize;
        let mut best_x = self.wrapped_position(0);
        for (i, c) in lattice.iter().enumerate().skip(1) {
            let top = lattice[best].norm();
            let value = c.norm();
            if (value - top).abs() <= 1e-12 * top {
                let x = self.wrapped_position(i);
                if closer(&x, &best_x) {
                    best = i;
                    best_x = x;
                }
            } else if value > top {
                best = i;
                best_x = self.wrapped_position(i);
            }
        }
        let coarse_x0 = self.wrapped_position(best);
        let coarse_phase = phase_of(lattice[best], scale);
        let coarse_distance = self.direct_distance(&u_hat, coarse_phase.theta, &coarse_x0);
        let mut evaluations = self.grid.len();

        // refine: coordinate-wise parabolic steps on f = |⟨u, Q(· - x0)⟩|², with
        // slope and curvature from differentiated phase ramps
        let dx = self.grid.spacing();
        let mut x0 = coarse_x0.clone();
        let mut h = 0.5 * dx;
        let mut converged = false;
        let mut settled_rounds = 0;
        for _ in 0..MAX_REFINE_ROUNDS {
            let mut largest_move: f64 = 0.0;
            for axis in 0..self.grid.dim() {
                let (c, c1, c2) = self.correlation_derivatives(&cross, &x0, axis);
                evaluations += 1;
                let slope = 2.0 * (c.conj() * c1).re;
                let curvature = 2.0 * (c1.norm_sqr() + (c.conj() * c2).re);
                let step = if curvature < 0.0 {
                    (-slope / curvature).clamp(-h, h)
                } else if slope > 0.0 {
                    h
                } else if slope < 0.0 {
                    -h
                } else {
                    0.0
                };
                x0[axis] += step;
                largest_move = largest_move.max(step.abs());
            }
            if largest_move < REFINE_TOLERANCE * dx {
                settled_rounds += 1;
                if settled_rounds == 2 {
                    converged = true;
                    break;
                }
            } else {
                settled_rounds = 0;
            }
            h = (2.0 * largest_move).clamp(REFINE_TOLERANCE * dx, h);
        }

        let inner = self.correlation(&cross, &x0);
        let phase = phase_of(inner, scale);
        let x0 = self.wrap(&x0);
        let distance = self.direct_distance(&u_hat, phase.theta, &x0);
        evaluations += 1;
        if distance <= coarse_distance {
            Ok(ModulationFit {
                distance,
                theta: phase.theta,
                x0,
                converged,
                evaluations,
                degenerate: phase.degenerate,
            })
        } else {
            Ok(ModulationFit {
                distance: coarse_distance,
                theta: coarse_phase.theta,
                x0: coarse_x0,
                converged: false,
                evaluations,
                degenerate: coarse_phase.degenerate,
            })
        }
    }

    fn wrapped_position(&self, index: usize) -> Vec<f64> {
        let idx = self.grid.unflatten(index);
        let m = self.grid.points_per_axis();
        (0..self.grid.dim())
            .map(|axis| {
                let j = idx[axis] as i64;
                let j = if j >= (m / 2) as i64 { j - m as i64 } else { j };
                j as f64 * self.grid.spacing()
            })
            .collect()
    }

    fn wrap(&self, x0: &[f64]) -> Vec<f64> {
        let l = self.grid.box_length();
        x0.iter().map(|v| v - l * (v / l).round()).collect()
    }
}

/// Orders shifts by length, then lexicographically.
fn closer(a: &[f64], b: &[f64]) -> bool {
    let len = |x: &[f64]| x.iter().map(|v| v * v).sum::<f64>();
    match len(a).partial_cmp(&len(b)) {
        Some(std::cmp::Ordering::Less) => true,
        Some(std::cmp::Ordering::Equal) => a.iter().zip(b).find(|(x, y)| x != y).is_some_and(|(x, y)| x < y),
        _ => false,
    }
}

/// `e^{± 2πi ξ·x0}`.
fn ramp(xi: &[f64; 3], x0: &[f64], sign: f64) -> Complex64 {
    let dot: f64 = x0.iter().zip(xi).map(|(a, b)| a * b).sum();
    Complex64::from_polar(1.0, sign * 2.0 * PI * dot)
}

pub fn dist_to_cylinder(
    u: &SpectralField,
    profile: &GroundStateProfile,
    s: f64,
    grid: BoxGrid,
) -> Result<ModulationFit, OrbitalError> {
    Cylinder::new(profile, grid, s)?.fit(u)
}

/// Real `L²` inner product `Re ∫ u v̄`.
fn real_inner(u: &SpectralField, v: &SpectralField) -> f64 {
    let (a, b) = (u.to_physical(), v.to_physical());
    let sum: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x * y.conj()).re).sum();
    sum * u.grid().cell_volume()
}

/// Removes from `v` its components, in the real `L²` inner product, along
/// `q`, `iq` and each `∂_j q`: the mass direction and the tangent directions
/// of the cylinder at `q`.
pub fn project_out_symmetries(v: &SpectralField, q: &SpectralField) -> SpectralField {
    let mut basis: Vec<SpectralField> = vec![q.to_physical(), q.scaled(Complex64::new(0.0, 1.0))];
    basis.extend(gradient(q));
    let mut orthonormal: Vec<SpectralField> = Vec::new();
    for b in basis {
        let mut e = b;
        for o in &orthonormal {
            e = e.add_scaled(o, -real_inner(&e, o)).expect("same grid");
        }
        let norm = real_inner(&e, &e).sqrt();
        if norm > 0.0 {
            orthonormal.push(e.scaled(Complex64::new(1.0 / norm, 0.0)));
        }
    }
    let mut out = v.to_physical();
    for o in &orthonormal {
        out = out.add_scaled(o, -real_inner(&out, o)).expect("same grid");
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeinsteinRatio {
    /// `(L(u) - L(Q)) / dist_{H¹}(u, Σ)²`.
    pub ratio: f64,
    pub distance: f64,
    /// Set when the distance lies in the outer half of the trust region.
    pub near_edge: bool,
}

pub fn weinstein_ratio(
    u: &SpectralField,
    profile: &GroundStateProfile,
    grid: BoxGrid,
) -> Result<WeinsteinRatio, OrbitalError> {
    let cylinder = Cylinder::new(profile, grid, 1.0)?;
    let fit = cylinder.fit(u)?;
    let distance = fit.distance;
    let scale = cylinder.q_norm_sq.sqrt();
    if !(distance > 1e-12 * scale && distance < TRUST_RADIUS) {
        return Err(OrbitalError::OutsideTrustRegion { distance });
    }
    let q = profile.embed(grid, 0.0, &vec![0.0; grid.dim()])?;
    let params = profile.params();
    let ratio = (lyapunov(u, params) - lyapunov(&q, params)) / (distance * distance);
    Ok(WeinsteinRatio { ratio, distance, near_edge: distance > 0.5 * TRUST_RADIUS })
}
