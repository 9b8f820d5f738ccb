use crate::error::{Error, Result};
use crate::linops::{BlurKernel, CircularConv, ImageGrid, SamplingMask};
use crate::rng::SeededRng;

use super::TvSpec;

/// Piecewise-constant test image in `[0, 1]`: a dark background with a
/// bright rectangle, a mid-gray disk, a small white square and a thin bar.
pub fn phantom(height: usize, width: usize) -> ImageGrid {
    let (h, w) = (height as f64, width as f64);
    ImageGrid::from_fn(height, width, |i, j| {
        let (y, x) = ((i as f64 + 0.5) / h, (j as f64 + 0.5) / w);
        let mut v = 0.1;
        if (0.15..0.55).contains(&y) && (0.1..0.45).contains(&x) {
            v = 0.8;
        }
        if (y - 0.65).powi(2) + (x - 0.65).powi(2) < 0.22f64.powi(2) {
            v = 0.5;
        }
        if (0.58..0.72).contains(&y) && (0.58..0.72).contains(&x) {
            v = 1.0;
        }
        if (0.78..0.84).contains(&y) && (0.08..0.4).contains(&x) {
            v = 0.65;
        }
        v
    })
}

/// A seeded TV test case: ground truth and the degraded observation.
#[derive(Debug, Clone)]
pub struct TvInstance {
    pub truth: ImageGrid,
    pub spec: TvSpec,
    pub seed: u64,
}

impl TvInstance {
    /// `b = S (K x + delta n)` with `n` standard Gaussian and `S` a Bernoulli
    /// mask of the given sample rate, default model weights.
    pub fn synthetic(
        truth: ImageGrid,
        kernel: BlurKernel,
        delta: f64,
        sample_rate: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(sample_rate > 0.0 && sample_rate <= 1.0) {
            return Err(Error::invalid(format!("sample rate must lie in (0, 1], got {sample_rate}")));
        }
        let (h, w) = truth.shape();
        let mut rng = SeededRng::new(seed);
        let mask = if sample_rate == 1.0 {
            SamplingMask::full(h, w)
        } else {
            SamplingMask::bernoulli(h, w, sample_rate, &mut rng)?
        };
        let blurred = if kernel.is_delta() {
            truth.clone()
        } else {
            CircularConv::new(h, w).apply(&truth, &kernel)?
        };
        let noise = rng.gaussian_vec(h * w);
        let mut b = blurred.with_data(
            blurred
                .as_slice()
                .iter()
                .zip(&noise)
                .map(|(v, n)| v + delta * n)
                .collect(),
        );
        mask.apply_in_place(b.as_mut_slice());
        let spec = TvSpec::with_defaults(b, mask, kernel, delta)?;
        Ok(Self { truth, spec, seed })
    }

    /// The desk inpainting case: 64x64 phantom, `delta = 0.1`, half the
    /// pixels observed, no blur.
    pub fn desk_inpainting(seed: u64) -> Result<Self> {
        Self::synthetic(phantom(64, 64), BlurKernel::delta(1, 1)?, 0.1, 0.5, seed)
    }
}
