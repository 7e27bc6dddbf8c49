use std::f64::consts::PI;

use nls_core::data::perturbation;
use nls_core::functionals::{mass, sobolev_norm, EquationParams, Sign};
use nls_core::spectral::{BoxGrid, DerivativeKind, SpectralField};
use nls_lab::scaling::{
    choose_parameters, rescale, rescale_in_box, ParameterChoice, ScalingError, SMALLNESS_BOUND,
    WINDOW_FACTOR,
};
use num_complex::Complex64;

fn params(dim: usize, p: f64, sign: Sign) -> EquationParams {
    EquationParams::new(dim, p, sign).unwrap()
}

fn gaussian(grid: BoxGrid) -> SpectralField {
    SpectralField::from_fn(grid, |x| Complex64::new((-x.iter().map(|v| v * v).sum::<f64>()).exp(), 0.0))
}

#[test]
fn gaussian_mass_against_closed_form() {
    // ∫ e^{-2x²} dx = √(π/2); u_λ = λ^{-1} e^{-(x/λ)²} for p = 3.
    let grid = BoxGrid::new(1, 16.0, 256).unwrap();
    let p = params(1, 3.0, Sign::Defocusing);
    let u = gaussian(grid);
    let base = (PI / 2.0).sqrt();
    assert!((mass(&u) - base).abs() < 1e-12);
    for lambda in [2.0, 4.0, 8.0] {
        let ul = rescale(&u, lambda, &p).unwrap();
        let expected = lambda.powi(-2) * lambda * base;
        assert!((mass(&ul) - expected).abs() < 1e-12 * expected, "λ = {lambda}");
        // the mass factor is λ^{2 s_c} with s_c = -1/2
        assert!((mass(&ul) / mass(&u) - lambda.powf(2.0 * p.critical_regularity())).abs() < 1e-12);
    }
}

#[test]
fn homogeneous_norm_law_on_band_limited_data() {
    for (dim, m, p) in [(1, 256, 3.0), (2, 64, 2.0), (1, 128, 5.0)] {
        let grid = BoxGrid::new(dim, 10.0, m).unwrap();
        let eq = params(dim, p, Sign::Defocusing);
        let u = perturbation(5, [0.0, 2.0], 0.9, 1.0, grid).unwrap();
        for s in [0.0, 0.5, 0.9, 1.0] {
            for lambda in [2.0, 4.0, 8.0] {
                let ul = rescale(&u, lambda, &eq).unwrap();
                let ratio = sobolev_norm(&ul, s, DerivativeKind::Homogeneous)
                    / sobolev_norm(&u, s, DerivativeKind::Homogeneous);
                let predicted = lambda.powf(eq.critical_regularity() - s);
                assert!(
                    (ratio / predicted - 1.0).abs() < 1e-6,
                    "n={dim} p={p} s={s} λ={lambda}: {ratio} vs {predicted}"
                );
            }
        }
    }
}

#[test]
fn in_box_matches_closed_form() {
    let grid = BoxGrid::new(1, 40.0, 256).unwrap();
    let p = params(1, 3.0, Sign::Defocusing);
    let u = gaussian(grid);
    for lambda in [2.0, 3.0] {
        let ul = rescale_in_box(&u, lambda, &p).unwrap();
        let exact = SpectralField::from_fn(grid, |x| {
            Complex64::new((-(x[0] / lambda).powi(2)).exp() / lambda, 0.0)
        });
        assert!(ul.max_abs_diff(&exact) < 1e-12, "λ = {lambda}");
    }
}

#[test]
fn in_box_two_dimensional() {
    let grid = BoxGrid::new(2, 24.0, 128).unwrap();
    let p = params(2, 3.0, Sign::Focusing);
    let ul = rescale_in_box(&gaussian(grid), 2.0, &p).unwrap();
    let exact = SpectralField::from_fn(grid, |x| {
        Complex64::new((-(x[0] * x[0] + x[1] * x[1]) / 4.0).exp() / 2.0, 0.0)
    });
    assert!(ul.max_abs_diff(&exact) < 1e-10);
}

#[test]
fn in_box_rejects_wide_support() {
    let grid = BoxGrid::new(1, 8.0, 128).unwrap();
    let p = params(1, 3.0, Sign::Defocusing);
    assert!(matches!(
        rescale_in_box(&gaussian(grid), 4.0, &p),
        Err(ScalingError::SupportOverflow { .. })
    ));
}

fn check_feasible(choice: &ParameterChoice, s: f64, eq: &EquationParams, alpha: f64, t: f64) -> (f64, f64) {
    match choice {
        ParameterChoice::Feasible { n, lambda, smallness, window } => {
            let s_c = eq.critical_regularity();
            let direct = n.powf(2.0 * (1.0 - s)) * lambda.powf(2.0 * (s_c - s));
            assert!((direct - smallness).abs() <= 1e-12 * direct);
            assert!(direct <= SMALLNESS_BOUND);
            assert!(n.powf(alpha) / (lambda * lambda) >= WINDOW_FACTOR * t);
            assert!((window - n.powf(alpha) / (lambda * lambda)).abs() <= 1e-12 * window);
            (*n, *lambda)
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn minimal_menu_entry() {
    let eq = params(1, 2.0, Sign::Focusing);
    for t in [0.0, 0.5, 1.0] {
        let choice = choose_parameters(t, 0.9, &eq, 2.0);
        assert_eq!(check_feasible(&choice, 0.9, &eq, 2.0, t), (8.0, 2.0));
    }
}

#[test]
fn chosen_entry_is_minimal_on_the_menu() {
    let eq = params(1, 3.0, Sign::Defocusing);
    let (s, alpha, t) = (0.9, 2.0, 50.0);
    let (n, lambda) = check_feasible(&choose_parameters(t, s, &eq, alpha), s, &eq, alpha, t);
    let s_c = eq.critical_regularity();
    let ok = |n: f64, l: f64| {
        n.powf(2.0 * (1.0 - s)) * l.powf(2.0 * (s_c - s)) <= SMALLNESS_BOUND
            && n.powf(alpha) / (l * l) >= WINDOW_FACTOR * t
    };
    let mut smaller = 8.0;
    while smaller < n {
        for j in 1..=40 {
            assert!(!ok(smaller, 2f64.powi(j)), "N = {smaller} was feasible");
        }
        smaller *= 2.0;
    }
    let mut l = 2.0;
    while l < lambda {
        assert!(!ok(n, l));
        l *= 2.0;
    }
}

#[test]
fn feasible_set_grows_with_s() {
    let eq = params(1, 3.0, Sign::Defocusing);
    let mut previous_n = f64::INFINITY;
    for s in [0.6, 0.7, 0.8, 0.9, 0.95, 1.0] {
        let choice = choose_parameters(20.0, s, &eq, 1.5);
        let (n, _) = check_feasible(&choice, s, &eq, 1.5, 20.0);
        assert!(n <= previous_n, "s = {s}");
        previous_n = n;
    }
}

#[test]
fn zero_alpha_is_infeasible() {
    let eq = params(1, 3.0, Sign::Defocusing);
    for t in [1e-6, 1.0, 100.0] {
        assert!(matches!(
            choose_parameters(t, 0.9, &eq, 0.0),
            ParameterChoice::Infeasible { .. }
        ));
    }
    assert!(matches!(
        choose_parameters(1e12, 0.9, &eq, 0.01),
        ParameterChoice::Infeasible { candidates_tried, .. } if candidates_tried > 0
    ));
}
