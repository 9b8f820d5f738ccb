use super::{BidSpec, KernelMode};
use crate::error::Result;
use crate::linops::{BlurKernel, CircularConv, ImageGrid};
use crate::rng::SeededRng;
use crate::tv::phantom;

/// A seeded blind deconvolution case.
#[derive(Debug, Clone)]
pub struct BidInstance {
    pub truth: ImageGrid,
    pub kernel: BlurKernel,
    /// `K(y) x + delta n`, not clamped.
    pub b: ImageGrid,
    pub delta: f64,
    pub seed: u64,
}

impl BidInstance {
    pub fn synthetic(truth: ImageGrid, kernel: BlurKernel, delta: f64, seed: u64) -> Result<Self> {
        let (h, w) = truth.shape();
        let blurred = CircularConv::new(h, w).apply(&truth, &kernel)?;
        let noise = SeededRng::new(seed).gaussian_vec(h * w);
        let b = blurred.with_data(
            blurred
                .as_slice()
                .iter()
                .zip(&noise)
                .map(|(v, n)| v + delta * n)
                .collect(),
        );
        Ok(Self {
            truth,
            kernel,
            b,
            delta,
            seed,
        })
    }

    /// 64x64 phantom, 7x7 Gaussian kernel (sigma 1.5), `delta = 1e-3`.
    pub fn desk(seed: u64) -> Result<Self> {
        Self::synthetic(phantom(64, 64), BlurKernel::gaussian(7, 1.5)?, 1e-3, seed)
    }

    pub fn spec(&self, mode: KernelMode) -> BidSpec {
        BidSpec::with_defaults(self.b.clone(), (self.kernel.height(), self.kernel.width()), mode)
    }
}
