use std::f64::consts::PI;

use num_complex::Complex64;

use super::{
    low_pass_symbol, BoxGrid, GridFft, MultiplierSpec, Representation, SpectralError,
    SpectralField,
};

/// Coefficient changes below this fraction of the largest coefficient are
/// treated as FFT round-off by [`i_operator`].
const IDENTITY_NOISE_FLOOR: f64 = 1e-13;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DerivativeKind {
    /// `|∇|^α`, symbol `(2π|ξ|)^α`.
    Homogeneous,
    /// `⟨∇⟩^α`, symbol `(1 + (2π|ξ|)²)^{α/2}`.
    Inhomogeneous,
}

impl DerivativeKind {
    pub fn symbol(&self, xi_norm: f64, alpha: f64) -> f64 {
        let k = 2.0 * PI * xi_norm;
        match self {
            DerivativeKind::Homogeneous => {
                if alpha == 0.0 {
                    1.0
                } else if xi_norm == 0.0 {
                    0.0
                } else {
                    k.powf(alpha)
                }
            }
            DerivativeKind::Inhomogeneous => (1.0 + k * k).powf(0.5 * alpha),
        }
    }
}

/// Real radial symbol tabulated on a grid's frequency lattice.
///
/// Tables are immutable once built and may be shared between threads.
#[derive(Clone, Debug)]
pub struct SymbolTable {
    fft: GridFft,
    values: Vec<f64>,
}

impl SymbolTable {
    pub fn radial(grid: BoxGrid, symbol: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        let norms = grid.frequency_norms();
        let mut values = Vec::with_capacity(norms.len());
        for (i, &r) in norms.iter().enumerate() {
            let v = symbol(r);
            if !v.is_finite() {
                let xi = grid.frequency(i);
                return Err(SpectralError::NonFiniteSymbol {
                    xi: xi[..grid.dim()].to_vec(),
                    value: v,
                });
            }
            values.push(v);
        }
        Ok(Self { fft: GridFft::new(grid), values })
    }

    pub fn multiplier(grid: BoxGrid, spec: &MultiplierSpec) -> Self {
        Self::radial(grid, |r| spec.symbol(r)).expect("multiplier symbol is finite")
    }

    pub fn grid(&self) -> &BoxGrid {
        self.fft.grid()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_identity(&self) -> bool {
        self.values.iter().all(|&v| v == 1.0)
    }

    /// Multiplies transform coefficients in place.
    pub fn apply_to_spectrum(&self, spectrum: &mut [Complex64]) {
        spectrum
            .iter_mut()
            .zip(&self.values)
            .for_each(|(c, &m)| *c *= m);
    }

    /// Applies the symbol and returns the physical-space result.
    pub fn apply(&self, field: &SpectralField) -> SpectralField {
        let mut spectrum = self.spectrum_of(field);
        self.apply_to_spectrum(&mut spectrum);
        self.fft.inverse(&mut spectrum);
        SpectralField::from_physical(*field.grid(), spectrum).expect("grid length")
    }

    fn spectrum_of(&self, field: &SpectralField) -> Vec<Complex64> {
        assert_eq!(field.grid(), self.grid(), "symbol table built for a different grid");
        let mut data = field.values().to_vec();
        if field.representation() == Representation::Physical {
            self.fft.forward(&mut data);
        }
        data
    }

    /// Like [`apply`](Self::apply), but returns the input unchanged when every
    /// coefficient the symbol would alter is at round-off level.
    pub fn apply_or_identity(&self, field: &SpectralField) -> SpectralField {
        if self.is_identity() {
            return field.to_physical();
        }
        let mut spectrum = self.spectrum_of(field);
        let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let change = spectrum
            .iter()
            .zip(&self.values)
            .map(|(c, &m)| c.norm() * (1.0 - m).abs())
            .fold(0.0, f64::max);
        if change <= IDENTITY_NOISE_FLOOR * peak {
            return field.to_physical();
        }
        self.apply_to_spectrum(&mut spectrum);
        self.fft.inverse(&mut spectrum);
        SpectralField::from_physical(*field.grid(), spectrum).expect("grid length")
    }
}

/// Multiplies every coefficient by `symbol(|ξ|)`; physical output.
pub fn apply_symbol(
    field: &SpectralField,
    symbol: impl Fn(f64) -> f64,
) -> Result<SpectralField, SpectralError> {
    Ok(SymbolTable::radial(*field.grid(), symbol)?.apply(field))
}

/// The smoothing operator `I_N`.
pub fn i_operator(field: &SpectralField, spec: &MultiplierSpec) -> SpectralField {
    SymbolTable::multiplier(*field.grid(), spec).apply_or_identity(field)
}

pub fn fractional_derivative(
    field: &SpectralField,
    alpha: f64,
    kind: DerivativeKind,
) -> Result<SpectralField, SpectralError> {
    if !alpha.is_finite() {
        return Err(SpectralError::InvalidArgument(format!("order {alpha} is not finite")));
    }
    if kind == DerivativeKind::Homogeneous && alpha < 0.0 {
        let spectrum = field.to_frequency();
        let values = spectrum.values();
        let peak = values.iter().map(|c| c.norm()).fold(0.0, f64::max);
        let mean = values[0].norm();
        if mean > 1e-12 * peak {
            return Err(SpectralError::NonzeroMean { mean_coefficient: mean });
        }
    }
    apply_symbol(field, |r| kind.symbol(r, alpha))
}

/// Smooth split into low (`|ξ| ≤ cutoff/2`) and high (`|ξ| ≥ cutoff`) parts
/// with `low + high = field`.
pub fn frequency_split(
    field: &SpectralField,
    cutoff: f64,
) -> Result<(SpectralField, SpectralField), SpectralError> {
    if !(cutoff.is_finite() && cutoff > 0.0) {
        return Err(SpectralError::InvalidArgument(format!("split cutoff {cutoff} must be positive")));
    }
    let low = apply_symbol(field, |r| low_pass_symbol(r, cutoff))?;
    let high = field.add_scaled(&low, -1.0)?;
    Ok((low, high))
}
