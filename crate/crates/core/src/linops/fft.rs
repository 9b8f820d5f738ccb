use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// 2D FFT plans for a fixed row-major `height x width` grid. Immutable after
/// construction, so one plan can be shared across threads.
#[derive(Clone)]
pub struct Fft2 {
    height: usize,
    width: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Fft2")
            .field("height", &self.height)
            .field("width", &self.width)
            .finish()
    }
}

impl Fft2 {
    pub fn new(height: usize, width: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            height,
            width,
            row_fwd: planner.plan_fft_forward(width),
            row_inv: planner.plan_fft_inverse(width),
            col_fwd: planner.plan_fft_forward(height),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.transform(buf, &self.row_fwd, &self.col_fwd);
    }

    /// Inverse transform keeping the real part, normalized by `1/(h w)`.
    pub fn inverse_real(&self, mut buf: Vec<Complex64>) -> Vec<f64> {
        self.transform(&mut buf, &self.row_inv, &self.col_inv);
        let scale = 1.0 / (self.height * self.width) as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    fn transform(&self, buf: &mut [Complex64], rows: &Arc<dyn Fft<f64>>, cols: &Arc<dyn Fft<f64>>) {
        let (h, w) = (self.height, self.width);
        assert_eq!(buf.len(), h * w, "buffer does not match FFT grid");
        if w > 1 {
            rows.process(buf);
        }
        if h > 1 {
            let mut t = vec![Complex64::new(0.0, 0.0); h * w];
            for i in 0..h {
                for j in 0..w {
                    t[j * h + i] = buf[i * w + j];
                }
            }
            cols.process(&mut t);
            for i in 0..h {
                for j in 0..w {
                    buf[i * w + j] = t[j * h + i];
                }
            }
        }
    }
}
