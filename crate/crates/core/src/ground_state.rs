//! The radial ground state `Q`: positive decaying solution of
//! `Q'' + ((n-1)/r) Q' - Q + Q^p = 0`, found by shooting on `a = Q(0)`.

use num_complex::Complex64;
use thiserror::Error;

use crate::functionals::{abs_pow, EquationParams, Sign};
use crate::spectral::{BoxGrid, SpectralField};

/// Radial mesh step used for shooting and for the stored samples.
pub const MESH_STEP: f64 = 1e-3;

/// Trajectories still unclassified at this radius stop the bisection.
const CLASSIFY_RADIUS: f64 = 50.0;

/// The outward solution is trusted until `Q` drops to this fraction of `Q(0)`.
const MATCH_LEVEL: f64 = 1e-2;

/// The stored profile ends once the tail falls to this fraction of `Q(0)`.
const TRUNCATION_LEVEL: f64 = 1e-9;

/// Trajectories start from the power series of `Q` in `r²` on `[0, 0.1]`;
/// RK4 takes over there, away from the `1/r` coefficient.
const SERIES_STEPS: usize = 100;
const SERIES_TERMS: usize = 40;

/// Finite-difference stride (in mesh steps) of the residual check.
const RESIDUAL_STRIDE: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GroundStateError {
    #[error("ground state needs focusing, L2-subcritical parameters (s_c = {critical})")]
    UnsupportedParams { critical: f64 },
    #[error("no ground state bracket in [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },
    #[error("tail matching failed: {0}")]
    TailMatch(String),
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("profile radius {r_max} exceeds half the box {half_box}")]
    TooWide { r_max: f64, half_box: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shot {
    Over,
    Under,
    Unresolved,
}

/// Radial samples of `Q` on the uniform mesh `r_i = i·step`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundStateProfile {
    params: EquationParams,
    step: f64,
    samples: Vec<f64>,
    residual: f64,
}

impl GroundStateProfile {
    /// Wraps externally computed samples; the residual is evaluated here.
    pub fn from_samples(
        params: EquationParams,
        step: f64,
        samples: Vec<f64>,
    ) -> Result<Self, GroundStateError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(GroundStateError::InvalidProfile(format!("mesh step {step}")));
        }
        if samples.len() < 8 * RESIDUAL_STRIDE {
            return Err(GroundStateError::InvalidProfile(format!("only {} samples", samples.len())));
        }
        if let Some(i) = samples.iter().position(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(GroundStateError::InvalidProfile(format!(
                "sample {i} is not positive: {}",
                samples[i]
            )));
        }
        let residual = mesh_residual(&params, step, &samples);
        Ok(Self { params, step, samples, residual })
    }

    pub fn params(&self) -> &EquationParams {
        &self.params
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn q0(&self) -> f64 {
        self.samples[0]
    }

    pub fn r_max(&self) -> f64 {
        (self.samples.len() - 1) as f64 * self.step
    }

    /// Sup-norm ODE residual on the mesh.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Cubic interpolant of the samples; beyond `r_max` the linear decay
    /// law continues the last sample.
    pub fn value(&self, r: f64) -> f64 {
        let r = r.abs();
        let last = self.samples.len() - 1;
        let r_max = self.r_max();
        if r >= r_max {
            let n = self.params.dim();
            return self.samples[last] * tail_shape(n, r).0 / tail_shape(n, r_max).0;
        }
        let pos = r / self.step;
        let i = (pos.floor() as usize).min(last - 1);
        // four-point stencil, shifted inward at the ends; even in r near 0
        let base = i as i64 - 1;
        let base = base.min(last as i64 - 3);
        let t = pos - base as f64;
        let node = |k: i64| self.samples[(base + k).unsigned_abs() as usize];
        let (y0, y1, y2, y3) = (node(0), node(1), node(2), node(3));
        let (a, b, c, d) = (t, t - 1.0, t - 2.0, t - 3.0);
        -y0 * b * c * d / 6.0 + y1 * a * c * d / 2.0 - y2 * a * b * d / 2.0 + y3 * a * b * c / 6.0
    }

    /// `e^{iθ} Q(|x - x0|)` on the grid with periodic minimal-image distance.
    pub fn embed(
        &self,
        grid: BoxGrid,
        theta: f64,
        x0: &[f64],
    ) -> Result<SpectralField, GroundStateError> {
        let half_box = 0.5 * grid.box_length();
        if self.r_max() > half_box {
            return Err(GroundStateError::TooWide { r_max: self.r_max(), half_box });
        }
        let phase = Complex64::from_polar(1.0, theta);
        let dim = grid.dim();
        Ok(SpectralField::from_fn(grid, |x| {
            let d = grid.minimal_image(x, x0);
            let r = d[..dim].iter().map(|v| v * v).sum::<f64>().sqrt();
            phase * self.value(r)
        }))
    }
}

/// Free-function form of [`GroundStateProfile::embed`].
pub fn embed(
    profile: &GroundStateProfile,
    grid: BoxGrid,
    theta: f64,
    x0: &[f64],
) -> Result<SpectralField, GroundStateError> {
    profile.embed(grid, theta, x0)
}

pub fn ode_residual(profile: &GroundStateProfile) -> f64 {
    profile.residual()
}

/// `r^{-(n-1)/2} e^{-r} Σ a_k r^{-k}` (the large-`r` expansion of the decaying
/// solution of `Q'' + ((n-1)/r)Q' = Q`) and its derivative.
fn tail_shape(dim: usize, r: f64) -> (f64, f64) {
    let nu = (dim as f64 - 2.0) / 2.0;
    let m = (dim as f64 - 1.0) / 2.0;
    let mut coeff = 1.0;
    let mut series = 1.0;
    let mut dseries = 0.0;
    for k in 1..=6 {
        let j = (2 * k - 1) as f64;
        coeff *= (4.0 * nu * nu - j * j) / (k as f64 * 8.0);
        series += coeff * r.powi(-k);
        dseries -= k as f64 * coeff * r.powi(-k - 1);
    }
    let envelope = r.powf(-m) * (-r).exp();
    let value = envelope * series;
    (value, value * (-m / r - 1.0) + envelope * dseries)
}

struct RadialOde {
    dim: f64,
    power: f64,
}

impl RadialOde {
    fn new(params: &EquationParams) -> Self {
        Self { dim: params.dim() as f64, power: params.power() }
    }

    /// `(Q', Q'')` at radius `r`; the `r = 0` limit uses `Q''(0) = (Q - Q^p)/n`.
    fn rhs(&self, r: f64, q: f64, dq: f64) -> (f64, f64) {
        let source = q - q.signum() * abs_pow(q.abs(), self.power);
        if r == 0.0 {
            (dq, source / self.dim)
        } else {
            (dq, source - (self.dim - 1.0) / r * dq)
        }
    }

    fn rk4(&self, r: f64, q: f64, dq: f64, h: f64) -> (f64, f64) {
        let (k1q, k1d) = self.rhs(r, q, dq);
        let (k2q, k2d) = self.rhs(r + 0.5 * h, q + 0.5 * h * k1q, dq + 0.5 * h * k1d);
        let (k3q, k3d) = self.rhs(r + 0.5 * h, q + 0.5 * h * k2q, dq + 0.5 * h * k2d);
        let (k4q, k4d) = self.rhs(r + h, q + h * k3q, dq + h * k3d);
        (
            q + h / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q),
            dq + h / 6.0 * (k1d + 2.0 * k2d + 2.0 * k3d + k4d),
        )
    }

    /// Coefficients `c_k` of `Q(r) = Σ c_k r^{2k}` with `Q(0) = a`, from
    /// `2(k+1)(2k+n) c_{k+1} = c_k - [Q^p]_k` and the power-series
    /// recurrence for `Q^p`.
    fn series(&self, a: f64) -> Vec<f64> {
        let p = self.power;
        let mut c = vec![a];
        let mut g = vec![abs_pow(a, p)];
        for k in 0..SERIES_TERMS {
            let next = (c[k] - g[k]) / (2.0 * (k + 1) as f64 * (2.0 * k as f64 + self.dim));
            c.push(next);
            let m = k + 1;
            let sum: f64 = (1..=m)
                .map(|j| ((p + 1.0) * j as f64 - m as f64) * c[j] * g[m - j])
                .sum();
            g.push(sum / (m as f64 * a));
        }
        c
    }

    fn series_eval(coeffs: &[f64], r: f64) -> (f64, f64) {
        let x = r * r;
        let mut q = 0.0;
        let mut dq = 0.0;
        for (k, &c) in coeffs.iter().enumerate().rev() {
            q = q * x + c;
            if k > 0 {
                dq = dq * x + 2.0 * k as f64 * c;
            }
        }
        (q, dq * r)
    }

    /// Walks outward from `Q(0) = a`, calling `visit(i, Q, Q')` at every mesh
    /// index up to `last` until it returns `false`.
    fn walk(&self, a: f64, last: usize, mut visit: impl FnMut(usize, f64, f64) -> bool) {
        let coeffs = self.series(a);
        let mut state = (a, 0.0);
        for i in 0..=last {
            if i <= SERIES_STEPS {
                state = Self::series_eval(&coeffs, i as f64 * MESH_STEP);
            } else {
                state = self.rk4((i - 1) as f64 * MESH_STEP, state.0, state.1, MESH_STEP);
            }
            if !visit(i, state.0, state.1) {
                return;
            }
        }
    }

    fn classify(&self, a: f64) -> (Shot, usize) {
        let steps = (CLASSIFY_RADIUS / MESH_STEP) as usize;
        let mut result = (Shot::Unresolved, steps);
        self.walk(a, steps, |i, q, dq| {
            if i == 0 {
                return true;
            }
            if q <= 0.0 {
                result = (Shot::Over, i);
                false
            } else if dq >= 0.0 {
                result = (Shot::Under, i);
                false
            } else {
                true
            }
        });
        result
    }

    /// Outward samples from `Q(0) = a`, stopping at mesh index `last`.
    fn outward(&self, a: f64, last: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(last + 1);
        self.walk(a, last, |_, q, _| {
            out.push(q);
            true
        });
        out
    }

    /// Inward samples from `r_max` seeded with `c` times the tail shape,
    /// returned in increasing-`r` order from mesh index `first`.
    fn inward(&self, c: f64, first: usize, last: usize) -> Vec<f64> {
        let r_max = last as f64 * MESH_STEP;
        let (t, dt) = tail_shape(self.dim as usize, r_max);
        let (mut q, mut dq) = (c * t, c * dt);
        let mut out = vec![0.0; last - first + 1];
        out[last - first] = q;
        for i in (first..last).rev() {
            (q, dq) = self.rk4((i + 1) as f64 * MESH_STEP, q, dq, -MESH_STEP);
            out[i - first] = q;
        }
        out
    }
}

fn check_params(params: &EquationParams) -> Result<(), GroundStateError> {
    if params.sign() != Sign::Focusing || !params.is_l2_subcritical() {
        return Err(GroundStateError::UnsupportedParams {
            critical: params.critical_regularity(),
        });
    }
    Ok(())
}

/// Shooting with the default bracket search: `ε = 1e-3` below, doubling
/// upward from 2.
pub fn shoot(params: &EquationParams, tolerance: f64) -> Result<GroundStateProfile, GroundStateError> {
    check_params(params)?;
    let ode = RadialOde::new(params);
    let lo = 1e-3;
    let mut hi = 2.0;
    while ode.classify(hi).0 != Shot::Over {
        hi *= 2.0;
        if hi > 1e4 {
            return Err(GroundStateError::NoBracket { lo, hi });
        }
    }
    shoot_in(params, lo, hi, tolerance)
}

/// Shooting by bisection inside a caller-supplied bracket `[lo, hi]`, which
/// must classify as under- and overshooting respectively.
pub fn shoot_in(
    params: &EquationParams,
    lo: f64,
    hi: f64,
    tolerance: f64,
) -> Result<GroundStateProfile, GroundStateError> {
    check_params(params)?;
    let ode = RadialOde::new(params);
    if !(lo > 0.0 && hi > lo)
        || ode.classify(lo).0 != Shot::Under
        || ode.classify(hi).0 != Shot::Over
    {
        return Err(GroundStateError::NoBracket { lo, hi });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut event = 0;
    while hi - lo > tolerance {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let (shot, at) = ode.classify(mid);
        match shot {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Unresolved => break,
        }
        event = at;
    }
    let a = 0.5 * (lo + hi);
    if event == 0 {
        event = ode.classify(a).1;
    }
    let samples = match_tail(&ode, a, event)?;
    GroundStateProfile::from_samples(*params, MESH_STEP, samples)
}

fn match_tail(ode: &RadialOde, a: f64, event: usize) -> Result<Vec<f64>, GroundStateError> {
    let outward = ode.outward(a, event);
    let join = outward
        .iter()
        .position(|&q| q <= MATCH_LEVEL * a)
        .unwrap_or((0.7 * event as f64) as usize);
    if join < 16 {
        return Err(GroundStateError::TailMatch(format!("matching radius index {join} too small")));
    }
    let target = outward[join];
    let n = ode.dim as usize;
    let r_join = join as f64 * MESH_STEP;
    let c0 = target / tail_shape(n, r_join).0;

    let mut last = join;
    while c0 * tail_shape(n, last as f64 * MESH_STEP).0 > TRUNCATION_LEVEL * a {
        last += 1;
    }

    let mismatch = |c: f64| ode.inward(c, join, last)[0] - target;
    let (mut c_prev, mut c) = (c0, 1.01 * c0);
    let (mut f_prev, mut f) = (mismatch(c_prev), mismatch(c));
    for _ in 0..50 {
        if f.abs() <= 1e-15 * a || f == f_prev {
            break;
        }
        let next = c - f * (c - c_prev) / (f - f_prev);
        (c_prev, f_prev) = (c, f);
        c = next;
        f = mismatch(c);
    }
    if f.is_nan() || f.abs() > 1e-12 * a {
        return Err(GroundStateError::TailMatch(format!("secant stalled with mismatch {f}")));
    }
    let mut samples = outward;
    samples.truncate(join);
    samples.extend(ode.inward(c, join, last));
    Ok(samples)
}

/// Sup of `|Q'' + ((n-1)/r)Q' - Q + Q^p|` from sixth-order central differences
/// with stride [`RESIDUAL_STRIDE`], reflecting evenly through `r = 0`.
fn mesh_residual(params: &EquationParams, step: f64, samples: &[f64]) -> f64 {
    let n = params.dim() as f64;
    let p = params.power();
    let h = step * RESIDUAL_STRIDE as f64;
    let at = |i: i64| samples[(i.unsigned_abs()) as usize];
    let d1 = [0.0, 3.0 / 4.0, -3.0 / 20.0, 1.0 / 60.0];
    let d2 = [-49.0 / 18.0, 3.0 / 2.0, -3.0 / 20.0, 1.0 / 90.0];
    let last = samples.len() as i64 - 1;
    let s = RESIDUAL_STRIDE as i64;
    let mut worst: f64 = 0.0;
    let mut i = 0i64;
    while i + 3 * s <= last {
        let q = at(i);
        let mut first = 0.0;
        let mut second = d2[0] * q;
        for k in 1..4 {
            let (plus, minus) = (at(i + k as i64 * s), at(i - k as i64 * s));
            first += d1[k] * (plus - minus);
            second += d2[k] * (plus + minus);
        }
        first /= h;
        second /= h * h;
        let laplacian = if i == 0 {
            n * second
        } else {
            second + (n - 1.0) / (i as f64 * step) * first
        };
        worst = worst.max((laplacian - q + abs_pow(q, p)).abs());
        i += s;
    }
    worst
}
