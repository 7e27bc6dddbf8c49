use super::SpectralError;

/// Uniform periodic box `[-L/2, L/2)^n` sampled with `M` points per axis.
///
/// Samples are stored in FFT order: index `j` on an axis sits at the
/// coordinate `k(j)·L/M` with `k(j) = j` for `j < M/2` and `j - M` otherwise,
/// so the origin is the first sample. The matching frequency lattice is
/// `ξ = k/L` for the transform `∫ e^{-2πi x·ξ} f(x) dx`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoxGrid {
    dim: usize,
    box_length: f64,
    points: usize,
}

impl BoxGrid {
    pub fn new(dim: usize, box_length: f64, points: usize) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if !(box_length.is_finite() && box_length > 0.0) {
            return Err(SpectralError::InvalidGrid(format!(
                "box length {box_length} must be positive and finite"
            )));
        }
        if points < 8 || !points.is_multiple_of(2) {
            return Err(SpectralError::InvalidGrid(format!(
                "points per axis {points} must be even and at least 8"
            )));
        }
        Ok(Self { dim, box_length, points })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    /// Total number of samples, `M^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.points as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Volume of the box, `L^n`.
    pub fn volume(&self) -> f64 {
        self.box_length.powi(self.dim as i32)
    }

    /// Largest representable per-axis frequency, `M/(2L)`.
    pub fn max_frequency(&self) -> f64 {
        self.points as f64 / (2.0 * self.box_length)
    }

    /// Signed lattice index for axis position `j`.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn axis_coordinate(&self, j: usize) -> f64 {
        self.wavenumber(j) as f64 * self.spacing()
    }

    pub fn axis_frequency(&self, j: usize) -> f64 {
        self.wavenumber(j) as f64 / self.box_length
    }

    /// Per-axis indices of flat sample `index` (unused trailing axes are zero).
    pub fn unflatten(&self, index: usize) -> [usize; 3] {
        let m = self.points;
        let mut out = [0usize; 3];
        let mut rest = index;
        for axis in (0..self.dim).rev() {
            out[axis] = rest % m;
            rest /= m;
        }
        out
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.dim).fold(0, |acc, &j| acc * self.points + j)
    }

    pub fn position(&self, index: usize) -> [f64; 3] {
        let idx = self.unflatten(index);
        let mut x = [0.0; 3];
        for axis in 0..self.dim {
            x[axis] = self.axis_coordinate(idx[axis]);
        }
        x
    }

    pub fn frequency(&self, index: usize) -> [f64; 3] {
        let idx = self.unflatten(index);
        let mut xi = [0.0; 3];
        for axis in 0..self.dim {
            xi[axis] = self.axis_frequency(idx[axis]);
        }
        xi
    }

    /// `|ξ|` at every lattice point, in flat order.
    pub fn frequency_norms(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| {
                let xi = self.frequency(i);
                xi.iter().map(|v| v * v).sum::<f64>().sqrt()
            })
            .collect()
    }

    /// Periodic minimal-image separation `x - x0` per axis.
    pub fn minimal_image(&self, x: &[f64], x0: &[f64]) -> [f64; 3] {
        let l = self.box_length;
        let mut d = [0.0; 3];
        for axis in 0..self.dim {
            let shift = x0.get(axis).copied().unwrap_or(0.0);
            let mut v = x[axis] - shift;
            v -= l * (v / l).round();
            d[axis] = v;
        }
        d
    }

    /// Same grid with every length scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self, SpectralError> {
        Self::new(self.dim, self.box_length * factor, self.points)
    }
}
