use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::BoxGrid;

fn planner() -> &'static Mutex<FftPlanner<f64>> {
    static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();
    PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()))
}

/// Axis-by-axis FFT over a [`BoxGrid`], scaled so that the forward pass
/// approximates the continuous transform `∫ e^{-2πi x·ξ} f(x) dx`.
#[derive(Clone)]
pub struct GridFft {
    grid: BoxGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridFft {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridFft").field("grid", &self.grid).finish()
    }
}

impl GridFft {
    pub fn new(grid: BoxGrid) -> Self {
        let m = grid.points_per_axis();
        let mut planner = planner().lock().unwrap_or_else(|e| e.into_inner());
        let forward = planner.plan_fft_forward(m);
        let inverse = planner.plan_fft_inverse(m);
        Self { grid, forward, inverse }
    }

    pub fn grid(&self) -> &BoxGrid {
        &self.grid
    }

    /// Physical samples to transform coefficients, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.process(&*self.forward, data);
        let scale = self.grid.cell_volume();
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Transform coefficients to physical samples, in place.
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.process(&*self.inverse, data);
        let scale = 1.0 / self.grid.volume();
        data.iter_mut().for_each(|v| *v *= scale);
    }

    fn process(&self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let m = self.grid.points_per_axis();
        let dim = self.grid.dim();
        assert_eq!(data.len(), self.grid.len(), "buffer does not match grid");
        let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
        // last axis is contiguous
        fft.process_with_scratch(data, &mut scratch);
        if dim == 1 {
            return;
        }
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        for axis in 0..dim - 1 {
            let stride = m.pow((dim - 1 - axis) as u32);
            let block = stride * m;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (j, slot) in line.iter_mut().enumerate() {
                        *slot = data[start + j * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (j, value) in line.iter().enumerate() {
                        data[start + j * stride] = *value;
                    }
                }
            }
        }
    }
}
