use std::f64::consts::PI;

use num_complex::Complex64;

use super::conv::CircularConv;
use super::grid::{BlurKernel, ImageGrid};
use crate::error::{Error, Result};

/// Eigenvalue floor below which the structured system is treated as singular.
const MIN_EIGENVALUE: f64 = 1e-12;

/// FFT-diagonalized solver for `(beta D^T D + mu K^T K) x = rhs` with periodic
/// differences `D` and periodic convolution `K`.
#[derive(Debug, Clone)]
pub struct TvSystem {
    conv: CircularConv,
    eigenvalues: Vec<f64>,
}

impl TvSystem {
    pub fn new(height: usize, width: usize, beta: f64, mu: f64, kernel: &BlurKernel) -> Result<Self> {
        if !(beta > 0.0) || !(mu > 0.0) {
            return Err(Error::invalid(format!(
                "system weights must be positive, got beta={beta}, mu={mu}"
            )));
        }
        let conv = CircularConv::new(height, width);
        let k_hat = conv.kernel_spectrum(kernel)?;
        let eigenvalues = spectrum(height, width, beta, mu, &k_hat);
        let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
        if min <= MIN_EIGENVALUE {
            return Err(Error::IllPosed { min_eigenvalue: min });
        }
        Ok(Self { conv, eigenvalues })
    }

    /// Eigenvalues of the system matrix, one per frequency.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn solve(&self, rhs: &ImageGrid) -> Result<ImageGrid> {
        if rhs.shape() != self.conv.shape() {
            return Err(Error::invalid("right-hand side does not match system grid"));
        }
        let fft = self.conv.fft();
        let mut r = fft.forward_real(rhs.as_slice());
        for (v, &e) in r.iter_mut().zip(&self.eigenvalues) {
            *v /= e;
        }
        Ok(rhs.with_data(fft.inverse_real(r)))
    }
}

/// Symbol of `D^T D` is `4 sin^2(pi k / h) + 4 sin^2(pi l / w)`; that of
/// `K^T K` is `|K_hat|^2`.
fn spectrum(h: usize, w: usize, beta: f64, mu: f64, k_hat: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(h * w);
    for k in 0..h {
        let sk = (PI * k as f64 / h as f64).sin();
        for l in 0..w {
            let sl = (PI * l as f64 / w as f64).sin();
            let dtd = 4.0 * sk * sk + 4.0 * sl * sl;
            out.push(beta * dtd + mu * k_hat[k * w + l].norm_sqr());
        }
    }
    out
}

/// One-shot solve of `(beta D^T D + mu K^T K) x = rhs`.
pub fn solve_tv_x_system(
    beta: f64,
    mu: f64,
    kernel: &BlurKernel,
    rhs: &ImageGrid,
) -> Result<ImageGrid> {
    TvSystem::new(rhs.height(), rhs.width(), beta, mu, kernel)?.solve(rhs)
}
