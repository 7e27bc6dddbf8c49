//! Mass, Hamiltonian, Lyapunov functional, norms, and the power
//! nonlinearity `F(u) = ±|u|^{p-1} u` with its derivatives.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use thiserror::Error;

use crate::spectral::{DerivativeKind, MultiplierSpec, SpectralField, SymbolTable};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FunctionalError {
    #[error("invalid equation parameters: {0}")]
    InvalidParams(String),
    #[error("Gagliardo-Nirenberg exponent needs s_c < 0, got s_c = {critical}")]
    NotL2Subcritical { critical: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    /// `F(u) = -|u|^{p-1} u`
    Focusing,
    /// `F(u) = +|u|^{p-1} u`
    Defocusing,
}

impl Sign {
    pub fn factor(&self) -> f64 {
        match self {
            Sign::Focusing => -1.0,
            Sign::Defocusing => 1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Focusing => "focusing",
            Sign::Defocusing => "defocusing",
        })
    }
}

impl FromStr for Sign {
    type Err = FunctionalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "focusing" | "-" => Ok(Sign::Focusing),
            "defocusing" | "+" => Ok(Sign::Defocusing),
            other => Err(FunctionalError::InvalidParams(format!("unknown sign '{other}'"))),
        }
    }
}

/// Dimension, power and sign of the equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquationParams {
    dim: usize,
    power: f64,
    sign: Sign,
}

impl EquationParams {
    pub fn new(dim: usize, power: f64, sign: Sign) -> Result<Self, FunctionalError> {
        if !(1..=3).contains(&dim) {
            return Err(FunctionalError::InvalidParams(format!("dimension {dim} not in 1..=3")));
        }
        if !(power.is_finite() && power > 1.0) {
            return Err(FunctionalError::InvalidParams(format!("power {power} must exceed 1")));
        }
        Ok(Self { dim, power, sign })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn sign(&self) -> Sign {
        self.sign
    }

    /// `s_c = n/2 - 2/(p-1)`.
    pub fn critical_regularity(&self) -> f64 {
        self.dim as f64 / 2.0 - 2.0 / (self.power - 1.0)
    }

    pub fn is_l2_subcritical(&self) -> bool {
        self.critical_regularity() < 0.0
    }

    /// `1/(p-1) > (n-2)/4`.
    pub fn is_h1_subcritical(&self) -> bool {
        1.0 / (self.power - 1.0) > (self.dim as f64 - 2.0) / 4.0
    }
}

/// `r^e` for `r ≥ 0`, `e > 0`, with `0^e = 0`.
pub(crate) fn abs_pow(r: f64, e: f64) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    if e == e.trunc() && e.abs() <= 8.0 {
        return r.powi(e as i32);
    }
    (e * r.ln()).exp()
}

/// Pointwise `F(z)`.
pub fn nonlinearity_value(z: Complex64, params: &EquationParams) -> Complex64 {
    z * (params.sign.factor() * abs_pow(z.norm(), params.power - 1.0))
}

/// `F(u)` applied pointwise (physical output).
pub fn nonlinearity(field: &SpectralField, params: &EquationParams) -> SpectralField {
    field.to_physical().map(|z| nonlinearity_value(z, params))
}

/// The Wirtinger derivatives `(F_z, F_z̄)` at `z`; both vanish at `z = 0`.
pub fn nonlinearity_derivatives(z: Complex64, params: &EquationParams) -> (Complex64, Complex64) {
    let r = z.norm();
    if r == 0.0 {
        return (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    }
    let p = params.power;
    let amp = params.sign.factor() * abs_pow(r, p - 1.0);
    let phase = z / r;
    (
        Complex64::new(0.5 * (p + 1.0) * amp, 0.0),
        phase * phase * (0.5 * (p - 1.0) * amp),
    )
}

/// `w·F'(z) = w F_z(z) + w̄ F_z̄(z)`.
pub fn nonlinearity_gradient(z: Complex64, w: Complex64, params: &EquationParams) -> Complex64 {
    let (f_z, f_zbar) = nonlinearity_derivatives(z, params);
    w * f_z + w.conj() * f_zbar
}

/// `∫ |u|²`.
pub fn mass(field: &SpectralField) -> f64 {
    let phys = field.to_physical();
    phys.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * phys.grid().cell_volume()
}

/// `½ ∫ |∇u|²`, computed spectrally.
pub fn kinetic_energy(field: &SpectralField) -> f64 {
    let hat = field.to_frequency();
    let grid = hat.grid();
    let norms = grid.frequency_norms();
    let sum: f64 = hat
        .values()
        .iter()
        .zip(&norms)
        .map(|(v, &r)| (2.0 * PI * r).powi(2) * v.norm_sqr())
        .sum();
    0.5 * sum / grid.volume()
}

/// Spectral gradient `(∂_1 u, …, ∂_n u)`, physical output.
pub fn gradient(field: &SpectralField) -> Vec<SpectralField> {
    let hat = field.to_frequency();
    let grid = *hat.grid();
    (0..grid.dim())
        .map(|axis| {
            let data = hat
                .values()
                .iter()
                .enumerate()
                .map(|(i, v)| v * Complex64::new(0.0, 2.0 * PI * grid.frequency(i)[axis]))
                .collect();
            SpectralField::from_spectrum(grid, data)
                .expect("grid length")
                .to_physical()
        })
        .collect()
}

/// `(1/(p+1)) ∫ |u|^{p+1}`, unsigned.
pub fn potential_energy(field: &SpectralField, params: &EquationParams) -> f64 {
    let phys = field.to_physical();
    let q = params.power + 1.0;
    phys.values().iter().map(|v| abs_pow(v.norm(), q)).sum::<f64>() * phys.grid().cell_volume() / q
}

/// `H(u) = ∫ ½|∇u|² ± |u|^{p+1}/(p+1)`.
pub fn hamiltonian(field: &SpectralField, params: &EquationParams) -> f64 {
    kinetic_energy(field) + params.sign.factor() * potential_energy(field, params)
}

/// `L(u) = 2H(u) + ∫|u|²`.
pub fn lyapunov(field: &SpectralField, params: &EquationParams) -> f64 {
    2.0 * hamiltonian(field, params) + mass(field)
}

/// Squared Sobolev weight at `|ξ|`: `(2π|ξ|)^{2s}` or `⟨2πξ⟩^{2s}`.
pub fn sobolev_weight(xi_norm: f64, s: f64, kind: DerivativeKind) -> f64 {
    let k = 2.0 * PI * xi_norm;
    match kind {
        DerivativeKind::Homogeneous => {
            if s == 0.0 {
                1.0
            } else if xi_norm == 0.0 {
                0.0
            } else {
                k.powf(2.0 * s)
            }
        }
        DerivativeKind::Inhomogeneous => (1.0 + k * k).powf(s),
    }
}

pub fn sobolev_norm(field: &SpectralField, s: f64, kind: DerivativeKind) -> f64 {
    let hat = field.to_frequency();
    let grid = hat.grid();
    let norms = grid.frequency_norms();
    let sum: f64 = hat
        .values()
        .iter()
        .zip(&norms)
        .map(|(v, &r)| sobolev_weight(r, s, kind) * v.norm_sqr())
        .sum();
    (sum / grid.volume()).sqrt()
}

/// `(∫ |u|^q)^{1/q}` for `q ≥ 1`.
pub fn lebesgue_norm(field: &SpectralField, q: f64) -> f64 {
    assert!(q >= 1.0, "Lebesgue exponent {q} must be >= 1");
    let phys = field.to_physical();
    let sum = phys.values().iter().map(|v| abs_pow(v.norm(), q)).sum::<f64>();
    (sum * phys.grid().cell_volume()).powf(1.0 / q)
}

/// `‖I F(u) − F(I u)‖₂`.
pub fn commutator_residual(
    field: &SpectralField,
    spec: &MultiplierSpec,
    params: &EquationParams,
) -> f64 {
    let table = SymbolTable::multiplier(*field.grid(), spec);
    commutator_residual_with(field, &table, params)
}

/// [`commutator_residual`] with a prebuilt multiplier table.
pub fn commutator_residual_with(
    field: &SpectralField,
    table: &SymbolTable,
    params: &EquationParams,
) -> f64 {
    let i_of_f = table.apply(&nonlinearity(field, params));
    let f_of_i = nonlinearity(&table.apply(field), params);
    let diff = i_of_f.add_scaled(&f_of_i, -1.0).expect("same grid");
    mass(&diff).sqrt()
}

/// `θ = 2 - n(p-1)/2`, defined in the L²-subcritical range.
pub fn gn_exponent(params: &EquationParams) -> Result<f64, FunctionalError> {
    if !params.is_l2_subcritical() {
        return Err(FunctionalError::NotL2Subcritical {
            critical: params.critical_regularity(),
        });
    }
    Ok(2.0 - params.dim as f64 * (params.power - 1.0) / 2.0)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::spectral::BoxGrid;

    fn cubic(sign: Sign) -> EquationParams {
        EquationParams::new(1, 3.0, sign).unwrap()
    }

    fn sech_soliton(grid: BoxGrid) -> SpectralField {
        SpectralField::from_fn(grid, |x| Complex64::new(2f64.sqrt() / x[0].cosh(), 0.0))
    }

    fn random_field(grid: BoxGrid, seed: u64) -> SpectralField {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..grid.len())
            .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        SpectralField::from_physical(grid, data).unwrap()
    }

    fn random_z(rng: &mut ChaCha8Rng, radius: f64) -> Complex64 {
        Complex64::from_polar(radius * rng.random::<f64>(), 2.0 * PI * rng.random::<f64>())
    }

    #[test]
    fn params_flags() {
        let p = EquationParams::new(3, 3.0, Sign::Defocusing).unwrap();
        assert_eq!(p.critical_regularity(), 0.5);
        assert!(p.is_h1_subcritical() && !p.is_l2_subcritical());
        let p = EquationParams::new(1, 3.0, Sign::Focusing).unwrap();
        assert_eq!(p.critical_regularity(), -0.5);
        assert!(p.is_l2_subcritical());
        assert!(!EquationParams::new(3, 5.0, Sign::Focusing).unwrap().is_h1_subcritical());
        assert!(EquationParams::new(1, 1.0, Sign::Focusing).is_err());
        assert_eq!("focusing".parse::<Sign>().unwrap(), Sign::Focusing);
    }

    #[test]
    fn zero_and_constant_fields() {
        let grid = BoxGrid::new(1, 3.0, 32).unwrap();
        let zero = SpectralField::zeros(grid);
        let params = cubic(Sign::Defocusing);
        assert_eq!(mass(&zero), 0.0);
        assert_eq!(hamiltonian(&zero, &params), 0.0);
        assert_eq!(lyapunov(&zero, &params), 0.0);

        let cst = SpectralField::from_fn(grid, |_| Complex64::new(0.0, 2.0));
        assert!((mass(&cst) - 12.0).abs() < 1e-12);
        assert!((hamiltonian(&cst, &params) - 3.0 * 16.0 / 4.0).abs() < 1e-12);
        assert!((lebesgue_norm(&cst, 3.0) - 2.0 * 3f64.powf(1.0 / 3.0)).abs() < 1e-12);
        let f = nonlinearity(&cst, &params);
        assert!(f.values().iter().all(|v| (v - Complex64::new(0.0, 8.0)).norm() < 1e-12));
        assert!(nonlinearity(&zero, &params).values().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn soliton_functionals_match_closed_form_quadrature() {
        // closed forms: ∫2sech² = 4, ½∫Q'² = 2/3, ∫Q⁴ = 16/3
        let grid = BoxGrid::new(1, 60.0, 1024).unwrap();
        let q = sech_soliton(grid);
        let params = cubic(Sign::Focusing);
        assert!((mass(&q) - 4.0).abs() < 1e-10);
        assert!((hamiltonian(&q, &params) + 2.0 / 3.0).abs() < 1e-10);
        assert!((lyapunov(&q, &params) - 8.0 / 3.0).abs() < 1e-10);
        assert!((lebesgue_norm(&q, 4.0).powi(4) - 16.0 / 3.0).abs() < 1e-10);
    }

    #[test]
    fn lyapunov_identity_on_random_fields() {
        let grid = BoxGrid::new(2, 2.0, 16).unwrap();
        for sign in [Sign::Focusing, Sign::Defocusing] {
            let params = EquationParams::new(2, 2.5, sign).unwrap();
            for seed in 0..5 {
                let u = random_field(grid, seed);
                let l = lyapunov(&u, &params);
                let rhs = 2.0 * hamiltonian(&u, &params) + mass(&u);
                assert!((l - rhs).abs() <= 1e-12 * l.abs().max(1.0));
            }
        }
    }

    #[test]
    fn sobolev_norm_cases() {
        let grid = BoxGrid::new(1, 4.0, 64).unwrap();
        let u = random_field(grid, 2);
        let s0 = sobolev_norm(&u, 0.0, DerivativeKind::Inhomogeneous);
        assert!((s0 - mass(&u).sqrt()).abs() < 1e-12 * s0);

        let (a, k) = (0.7, 3i64);
        let wave = SpectralField::from_fn(grid, |x| {
            Complex64::from_polar(a, 2.0 * PI * k as f64 * x[0] / 4.0)
        });
        let s = 0.6;
        let expected = a * (1.0 + (2.0 * PI * k as f64 / 4.0).powi(2)).powf(0.5 * s) * 2.0;
        assert!((sobolev_norm(&wave, s, DerivativeKind::Inhomogeneous) - expected).abs() < 1e-12);

        let mut prev = 0.0;
        for s in [0.0, 0.25, 0.5, 0.9, 1.0, 1.5] {
            let v = sobolev_norm(&u, s, DerivativeKind::Inhomogeneous);
            assert!(v >= prev);
            prev = v;
        }
        assert!((lebesgue_norm(&u, 2.0) - s0).abs() < 1e-12 * s0);
    }

    #[test]
    fn fractional_power_matches_sqrt_path() {
        // independent path: |z|^{3/2} = |z|·sqrt(|z|) with correctly rounded sqrt
        let params = EquationParams::new(1, 2.5, Sign::Defocusing).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let z = random_z(&mut rng, 5.0);
            let r = z.norm();
            let oracle = z * (r * r.sqrt());
            let got = nonlinearity_value(z, &params);
            assert!((got - oracle).norm() <= 1e-14 * oracle.norm().max(1e-300));
        }
    }

    #[test]
    fn gradient_special_cases() {
        let params = cubic(Sign::Defocusing);
        let z = Complex64::new(1.3, 0.0);
        assert_eq!(nonlinearity_gradient(z, Complex64::new(0.0, 0.0), &params), Complex64::new(0.0, 0.0));
        let w = Complex64::new(0.4, 0.0);
        let g = nonlinearity_gradient(z, w, &params);
        assert!((g - Complex64::new(3.0 * 1.3 * 1.3 * 0.4, 0.0)).norm() < 1e-14);
        let p_small = EquationParams::new(1, 1.5, Sign::Focusing).unwrap();
        assert_eq!(
            nonlinearity_gradient(Complex64::new(0.0, 0.0), w, &p_small),
            Complex64::new(0.0, 0.0)
        );
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in [1.5, 2.0, 2.5, 3.0, 4.2] {
            for sign in [Sign::Focusing, Sign::Defocusing] {
                let params = EquationParams::new(1, p, sign).unwrap();
                for _ in 0..50 {
                    let z = random_z(&mut rng, 3.0) + Complex64::new(0.5, 0.0);
                    let w = random_z(&mut rng, 1.0);
                    let err = |h: f64| {
                        let lhs = nonlinearity_value(z + w * h, &params) - nonlinearity_value(z, &params);
                        (lhs - nonlinearity_gradient(z, w, &params) * h).norm() / h
                    };
                    let (e3, e5) = (err(1e-3), err(1e-5));
                    assert!(e5 < 0.05 * e3 + 1e-9, "p={p} z={z} e3={e3} e5={e5}");
                    assert!(err(1e-4) < 0.5 * e3 + 1e-9);
                }
            }
        }
    }

    #[test]
    fn holder_and_expansion_constants_are_finite() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for p in [1.3, 2.0, 3.0, 4.5] {
            let params = EquationParams::new(1, p, Sign::Defocusing).unwrap();
            let theta = (p - 1.0).min(1.0);
            let mut holder: f64 = 0.0;
            let mut expansion: f64 = 0.0;
            for _ in 0..100_000 {
                let z = random_z(&mut rng, 10.0);
                let w = random_z(&mut rng, 10.0);
                let (az, bz) = nonlinearity_derivatives(z, &params);
                let (aw, bw) = nonlinearity_derivatives(w, &params);
                let lhs = (az - aw).norm() + (bz - bw).norm();
                let denom = (z - w).norm().powf(theta)
                    * (abs_pow(z.norm(), p - 1.0 - theta) + abs_pow(w.norm(), p - 1.0 - theta));
                if denom > 0.0 {
                    holder = holder.max(lhs / denom);
                }
                let diff = (nonlinearity_value(z + w, &params) - nonlinearity_value(z, &params)).norm();
                let bound = w.norm() * abs_pow(z.norm(), p - 1.0) + abs_pow(w.norm(), p);
                if bound > 0.0 {
                    expansion = expansion.max(diff / bound);
                }
            }
            assert!(holder.is_finite() && holder < 1e3, "p={p} holder={holder}");
            assert!(expansion.is_finite() && expansion < 1e3, "p={p} expansion={expansion}");
        }
    }

    #[test]
    fn chain_rule_holds_spectrally() {
        let grid = BoxGrid::new(1, 20.0, 256).unwrap();
        let u = SpectralField::from_fn(grid, |x| {
            Complex64::from_polar((-x[0] * x[0] / 2.0).exp(), 0.8 * x[0])
        });
        for p in [3.0, 2.5] {
            let params = EquationParams::new(1, p, Sign::Defocusing).unwrap();
            let lhs = &gradient(&nonlinearity(&u, &params))[0];
            let du = &gradient(&u)[0];
            let rhs: Vec<Complex64> = u
                .values()
                .iter()
                .zip(du.values())
                .map(|(&z, &w)| nonlinearity_gradient(z, w, &params))
                .collect();
            let rhs = SpectralField::from_physical(grid, rhs).unwrap();
            let scale = rhs.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(lhs.max_abs_diff(&rhs) <= 1e-6 * scale, "p={p}");
        }
    }

    #[test]
    fn commutator_vanishes_for_band_limited_cubic() {
        let grid = BoxGrid::new(1, 1.0, 128).unwrap();
        let n_cut = 30.0;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let norms = grid.frequency_norms();
        let data = norms
            .iter()
            .map(|&r| {
                if r <= n_cut / 3.0 {
                    Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
                } else {
                    Complex64::new(0.0, 0.0)
                }
            })
            .collect();
        let u = SpectralField::from_spectrum(grid, data).unwrap().to_physical();
        let spec = MultiplierSpec::new(0.9, n_cut).unwrap();
        let params = cubic(Sign::Defocusing);
        assert!(commutator_residual(&u, &spec, &params) <= 1e-10);

        // u = I u: residual reduces to ‖(1 - I) F(u)‖
        let params = EquationParams::new(1, 2.5, Sign::Focusing).unwrap();
        let f = nonlinearity(&u, &params);
        let expected = mass(&f.add_scaled(&crate::spectral::i_operator(&f, &spec), -1.0).unwrap()).sqrt();
        let got = commutator_residual(&u, &spec, &params);
        assert!((got - expected).abs() <= 1e-12 * expected.max(1e-300));
    }

    #[test]
    fn commutator_decays_with_cutoff() {
        let grid = BoxGrid::new(1, 1.0, 512).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let norms = grid.frequency_norms();
        let data = norms
            .iter()
            .map(|&r| {
                let amp = (1.0 + (2.0 * PI * r).powi(2)).powf(-0.7);
                Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * amp * 50.0
            })
            .collect();
        let u = SpectralField::from_spectrum(grid, data).unwrap().to_physical();
        let params = cubic(Sign::Defocusing);
        let values: Vec<f64> = [8.0, 16.0, 32.0, 64.0]
            .iter()
            .map(|&n| commutator_residual(&u, &MultiplierSpec::new(0.9, n).unwrap(), &params))
            .collect();
        assert!(values.windows(2).all(|w| w[1] < w[0]), "{values:?}");
    }

    #[test]
    fn gn_exponent_cases() {
        let p = EquationParams::new(1, 3.0, Sign::Focusing).unwrap();
        assert_eq!(gn_exponent(&p).unwrap(), 1.0);
        let p = EquationParams::new(2, 2.5, Sign::Focusing).unwrap();
        assert_eq!(gn_exponent(&p).unwrap(), 0.5);
        let p = EquationParams::new(2, 2.0, Sign::Focusing).unwrap();
        assert_eq!(gn_exponent(&p).unwrap(), 1.0);
        let p = EquationParams::new(1, 5.0, Sign::Focusing).unwrap();
        assert!(matches!(gn_exponent(&p), Err(FunctionalError::NotL2Subcritical { .. })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn invariant_under_phase_and_lattice_shift(seed in 0u64..1000, phase in 0.0..(2.0 * PI), shift in -20i64..20) {
            let grid = BoxGrid::new(1, 3.0, 64).unwrap();
            let u = random_field(grid, seed);
            let v = u.lattice_shift(&[shift]).scaled(Complex64::from_polar(1.0, phase));
            let params = EquationParams::new(1, 2.7, Sign::Focusing).unwrap();
            let close = |a: f64, b: f64| (a - b).abs() <= 1e-11 * a.abs().max(1.0);
            prop_assert!(close(mass(&u), mass(&v)));
            prop_assert!(close(hamiltonian(&u, &params), hamiltonian(&v, &params)));
            prop_assert!(close(lyapunov(&u, &params), lyapunov(&v, &params)));
            prop_assert!(close(
                sobolev_norm(&u, 0.9, DerivativeKind::Inhomogeneous),
                sobolev_norm(&v, 0.9, DerivativeKind::Inhomogeneous)
            ));
            prop_assert!(close(lebesgue_norm(&u, 3.5), lebesgue_norm(&v, 3.5)));
            let spec = MultiplierSpec::new(0.8, 2.0).unwrap();
            prop_assert!(close(
                commutator_residual(&u, &spec, &params),
                commutator_residual(&v, &spec, &params)
            ));
        }
    }
}
