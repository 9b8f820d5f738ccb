use nalgebra::DMatrix;

use super::{default_caps, mask_matrix, rpca_defaults, RpcaSpec};
use crate::error::{Error, Result};
use crate::linops::SamplingMask;
use crate::rng::SeededRng;

/// Seeded low-rank plus sparse test matrix and its noisy, partial observation.
#[derive(Debug, Clone)]
pub struct SyntheticRpcaInstance {
    pub x_star: DMatrix<f64>,
    pub y_star: DMatrix<f64>,
    pub noise: DMatrix<f64>,
    pub mask: SamplingMask,
    /// `P(X* + Y* + E)`.
    pub b: DMatrix<f64>,
    pub sample_rate: f64,
    pub delta: f64,
    pub seed: u64,
}

/// `X* = Q R^T` with `n x r` standard Gaussian factors; `Y*` has
/// `round(sparse_frac n^2)` nonzeros uniform on `[-10, 10]` at distinct
/// random positions; `E` is Gaussian with standard deviation `delta`; the
/// mask is Bernoulli(`sr`). Draw order: `Q`, `R`, positions, values, noise,
/// mask.
pub fn synth_gen(
    n: usize,
    r: usize,
    sparse_frac: f64,
    sr: f64,
    delta: f64,
    seed: u64,
) -> Result<SyntheticRpcaInstance> {
    if r > n {
        return Err(Error::invalid(format!("rank {r} exceeds dimension {n}")));
    }
    if !(0.0..=1.0).contains(&sparse_frac) {
        return Err(Error::invalid(format!("sparse fraction must lie in [0, 1], got {sparse_frac}")));
    }
    if !(sr > 0.0 && sr <= 1.0) || !(delta >= 0.0) {
        return Err(Error::invalid(format!("need sr in (0, 1] and delta >= 0, got {sr}, {delta}")));
    }
    let mut rng = SeededRng::new(seed);
    let q = DMatrix::from_vec(n, r, rng.gaussian_vec(n * r));
    let rf = DMatrix::from_vec(n, r, rng.gaussian_vec(n * r));
    let x_star = &q * rf.transpose();

    let count = (sparse_frac * (n * n) as f64).round() as usize;
    let positions = rng.sample_indices(n * n, count);
    let values = rng.uniform_vec(count, -10.0, 10.0);
    let mut y_star = DMatrix::zeros(n, n);
    for (&p, &v) in positions.iter().zip(&values) {
        y_star.as_mut_slice()[p] = v;
    }

    let noise = DMatrix::from_vec(n, n, rng.gaussian_vec(n * n)) * delta;
    let mask = if sr == 1.0 {
        SamplingMask::full(n, n)
    } else {
        SamplingMask::bernoulli(n, n, sr, &mut rng)?
    };
    let w = mask_matrix(&mask, n, n)?;
    let b = (&x_star + &y_star + &noise).component_mul(&w);
    Ok(SyntheticRpcaInstance {
        x_star,
        y_star,
        noise,
        mask,
        b,
        sample_rate: sr,
        delta,
        seed,
    })
}

impl SyntheticRpcaInstance {
    /// Default model: synthetic weights, default caps, `mu = nu = 1.01`.
    pub fn default_spec(&self) -> Result<RpcaSpec> {
        let (m, n) = self.b.shape();
        let (tau, lambda) = rpca_defaults(m, n, self.sample_rate, self.delta, false)?;
        Ok(RpcaSpec {
            b: self.b.clone(),
            mask: self.mask.clone(),
            tau,
            lambda,
            caps: default_caps(&self.b, &self.mask)?,
            mu: 1.01,
            nu: 1.01,
        })
    }
}
