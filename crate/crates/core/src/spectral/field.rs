use num_complex::Complex64;

use super::{BoxGrid, GridFft, SpectralError};

/// Which space a [`SpectralField`]'s samples live in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Representation {
    Physical,
    Frequency,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Complex samples of a field on a periodic box.
///
/// In the frequency representation the coefficient at `ξ` approximates the
/// continuous transform `û(ξ)`, so `∫|u|² = L^{-n} Σ |û|²` holds exactly.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    grid: BoxGrid,
    data: Vec<Complex64>,
    repr: Representation,
}

impl SpectralField {
    pub fn zeros(grid: BoxGrid) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
            repr: Representation::Physical,
        }
    }

    pub fn from_physical(grid: BoxGrid, data: Vec<Complex64>) -> Result<Self, SpectralError> {
        Self::from_parts(grid, data, Representation::Physical)
    }

    pub fn from_spectrum(grid: BoxGrid, data: Vec<Complex64>) -> Result<Self, SpectralError> {
        Self::from_parts(grid, data, Representation::Frequency)
    }

    pub fn from_parts(
        grid: BoxGrid,
        data: Vec<Complex64>,
        repr: Representation,
    ) -> Result<Self, SpectralError> {
        if data.len() != grid.len() {
            return Err(SpectralError::LengthMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, data, repr })
    }

    /// Samples `f(x)` at every grid point (physical representation).
    pub fn from_fn(grid: BoxGrid, f: impl Fn(&[f64]) -> Complex64) -> Self {
        let dim = grid.dim();
        let data = (0..grid.len())
            .map(|i| {
                let x = grid.position(i);
                f(&x[..dim])
            })
            .collect();
        Self { grid, data, repr: Representation::Physical }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    pub fn values(&self) -> &[Complex64] {
        &self.data
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.data
    }

    /// Transform in the given direction; the field must currently be in the
    /// direction's source representation.
    pub fn transform(&self, direction: Direction) -> Result<Self, SpectralError> {
        let expected = match direction {
            Direction::Forward => Representation::Physical,
            Direction::Inverse => Representation::Frequency,
        };
        if self.repr != expected {
            return Err(SpectralError::RepresentationMismatch {
                expected,
                found: self.repr,
            });
        }
        let mut out = self.clone();
        let fft = GridFft::new(self.grid);
        match direction {
            Direction::Forward => {
                fft.forward(&mut out.data);
                out.repr = Representation::Frequency;
            }
            Direction::Inverse => {
                fft.inverse(&mut out.data);
                out.repr = Representation::Physical;
            }
        }
        Ok(out)
    }

    pub fn to_physical(&self) -> Self {
        match self.repr {
            Representation::Physical => self.clone(),
            Representation::Frequency => self
                .transform(Direction::Inverse)
                .expect("representation checked"),
        }
    }

    pub fn to_frequency(&self) -> Self {
        match self.repr {
            Representation::Frequency => self.clone(),
            Representation::Physical => self
                .transform(Direction::Forward)
                .expect("representation checked"),
        }
    }

    /// Pointwise map in the current representation.
    pub fn map(&self, f: impl Fn(Complex64) -> Complex64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
            repr: self.repr,
        }
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        self.map(|v| v * factor)
    }

    /// `self + factor·other`, both brought to the physical representation.
    pub fn add_scaled(&self, other: &Self, factor: f64) -> Result<Self, SpectralError> {
        if self.grid != other.grid {
            return Err(SpectralError::GridMismatch);
        }
        let a = self.to_physical();
        let b = other.to_physical();
        let data = a
            .data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| x + y * factor)
            .collect();
        Ok(Self { grid: self.grid, data, repr: Representation::Physical })
    }

    /// Cyclic shift by whole lattice steps per axis: `u(x - shift·dx)`.
    pub fn lattice_shift(&self, shift: &[i64]) -> Self {
        let phys = self.to_physical();
        let m = self.grid.points_per_axis() as i64;
        let mut data = vec![Complex64::new(0.0, 0.0); phys.data.len()];
        for (i, value) in phys.data.iter().enumerate() {
            let idx = self.grid.unflatten(i);
            let mut target = [0usize; 3];
            for axis in 0..self.grid.dim() {
                let s = shift.get(axis).copied().unwrap_or(0);
                target[axis] = (idx[axis] as i64 + s).rem_euclid(m) as usize;
            }
            data[self.grid.flatten(&target)] = *value;
        }
        Self { grid: self.grid, data, repr: Representation::Physical }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Largest pointwise difference against another field on the same grid,
    /// compared in the physical representation.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let a = self.to_physical();
        let b = other.to_physical();
        a.data
            .iter()
            .zip(&b.data)
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }
}

/// Free-function form of [`SpectralField::transform`].
pub fn transform(field: &SpectralField, direction: Direction) -> Result<SpectralField, SpectralError> {
    field.transform(direction)
}
