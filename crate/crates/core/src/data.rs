//! Seeded random initial data.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::functionals::{sobolev_norm, sobolev_weight};
use crate::spectral::{BoxGrid, DerivativeKind, SpectralField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DataError {
    #[error("no lattice frequency in band [{lo}, {hi}]")]
    EmptyBand { lo: f64, hi: f64 },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

/// Complex Gaussian coefficients on `lo ≤ |ξ| ≤ hi` scaled by `shape(|ξ|)`,
/// drawn in lattice order from a ChaCha8 stream.
fn seeded_spectrum(
    seed: u64,
    grid: BoxGrid,
    band: [f64; 2],
    shape: impl Fn(f64) -> f64,
) -> Result<SpectralField, DataError> {
    let [lo, hi] = band;
    if !(lo >= 0.0 && hi >= lo) {
        return Err(DataError::InvalidArgument(format!("band [{lo}, {hi}]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut any = false;
    let data = grid
        .frequency_norms()
        .into_iter()
        .map(|r| {
            if r < lo || r > hi {
                return Complex64::new(0.0, 0.0);
            }
            any = true;
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) * shape(r)
        })
        .collect();
    if !any {
        return Err(DataError::EmptyBand { lo, hi });
    }
    Ok(SpectralField::from_spectrum(grid, data).expect("grid length"))
}

fn normalized(field: SpectralField, s: f64, size: f64) -> Result<SpectralField, DataError> {
    if !(size.is_finite() && size >= 0.0) {
        return Err(DataError::InvalidArgument(format!("target norm {size}")));
    }
    let norm = sobolev_norm(&field, s, DerivativeKind::Inhomogeneous);
    Ok(field.scaled(Complex64::new(size / norm, 0.0)).to_physical())
}

/// Gaussian field on the band `lo ≤ |ξ| ≤ hi` with `‖·‖_{H^s} = sigma`.
pub fn perturbation(
    seed: u64,
    band: [f64; 2],
    s: f64,
    sigma: f64,
    grid: BoxGrid,
) -> Result<SpectralField, DataError> {
    normalized(seeded_spectrum(seed, grid, band, |_| 1.0)?, s, sigma)
}

/// Random field with coefficients decaying like `⟨2πξ⟩^{-(s + n/2)}` up to
/// `cutoff`: each dyadic shell carries a comparable share of the `H^s` norm.
/// Scaled so that `‖·‖_{H^s} = size`.
pub fn rough_field(
    seed: u64,
    grid: BoxGrid,
    s: f64,
    cutoff: f64,
    size: f64,
) -> Result<SpectralField, DataError> {
    let decay = -(s + grid.dim() as f64 / 2.0);
    let field = seeded_spectrum(seed, grid, [0.0, cutoff], |r| {
        sobolev_weight(r, 0.5 * decay, DerivativeKind::Inhomogeneous)
    })?;
    normalized(field, s, size)
}
