use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Real 2D image stored row-major. Intensities are nominally in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageGrid {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl ImageGrid {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if data.len() != height * width {
            return Err(Error::invalid(format!(
                "image data length {} != {height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("image contains non-finite values".into()));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize) -> Self {
        Self::filled(height, width, 0.0)
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        assert!(height > 0 && width > 0, "image dimensions must be positive");
        Self {
            height,
            width,
            data: vec![value; height * width],
        }
    }

    pub fn from_fn(height: usize, width: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(height * width);
        for i in 0..height {
            for j in 0..width {
                data.push(f(i, j));
            }
        }
        Self {
            height,
            width,
            data,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.width + j] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    /// Same shape, new data. Panics on a length mismatch.
    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }
}

/// Paired (horizontal, vertical) gradient field: one pair per pixel.
/// Stored as the horizontal channel followed by the vertical channel.
#[derive(Debug, Clone, PartialEq)]
pub struct GradField {
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl GradField {
    pub fn zeros(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; 2 * height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 2 * height * width {
            return Err(Error::invalid("gradient field length mismatch"));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> (&[f64], &[f64]) {
        self.data.split_at(self.height * self.width)
    }

    pub fn channels_mut(&mut self) -> (&mut [f64], &mut [f64]) {
        let m = self.height * self.width;
        self.data.split_at_mut(m)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        Self {
            height: self.height,
            width: self.width,
            data,
        }
    }
}

/// Convolution kernel with odd dimensions. The center tap is the zero shift.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurKernel {
    height: usize,
    width: usize,
    weights: Vec<f64>,
}

impl BlurKernel {
    pub fn new(height: usize, width: usize, weights: Vec<f64>) -> Result<Self> {
        if height % 2 == 0 || width % 2 == 0 {
            return Err(Error::invalid(format!(
                "kernel dimensions must be odd, got {height}x{width}"
            )));
        }
        if weights.len() != height * width {
            return Err(Error::invalid("kernel weight count mismatch"));
        }
        if weights.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("kernel contains non-finite weights".into()));
        }
        Ok(Self {
            height,
            width,
            weights,
        })
    }

    /// The identity kernel.
    pub fn delta(height: usize, width: usize) -> Result<Self> {
        let mut w = vec![0.0; height * width];
        if !w.is_empty() {
            w[(height / 2) * width + width / 2] = 1.0;
        }
        Self::new(height, width, w)
    }

    /// Average filter, `1/n` everywhere.
    pub fn uniform(height: usize, width: usize) -> Result<Self> {
        let n = (height * width) as f64;
        Self::new(height, width, vec![1.0 / n; height * width])
    }

    /// Disk of the given radius on a `(2r+1)^2` support, each tap weighted by
    /// the fraction of its pixel square covered by the disk (estimated on a
    /// 32x32 subpixel lattice), normalized to sum 1.
    pub fn disk(radius: usize) -> Result<Self> {
        const SUB: usize = 32;
        let size = 2 * radius + 1;
        let r = if radius == 0 { 0.5 } else { radius as f64 };
        let c = radius as f64;
        let mut w = vec![0.0; size * size];
        for i in 0..size {
            for j in 0..size {
                let mut inside = 0usize;
                for a in 0..SUB {
                    for b in 0..SUB {
                        let y = i as f64 - 0.5 + (a as f64 + 0.5) / SUB as f64 - c;
                        let x = j as f64 - 0.5 + (b as f64 + 0.5) / SUB as f64 - c;
                        if x * x + y * y <= r * r {
                            inside += 1;
                        }
                    }
                }
                w[i * size + j] = inside as f64 / (SUB * SUB) as f64;
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        Self::new(size, size, w)
    }

    /// Sampled isotropic Gaussian, normalized to sum 1.
    pub fn gaussian(size: usize, sigma: f64) -> Result<Self> {
        let c = (size / 2) as f64;
        let mut w = Vec::with_capacity(size * size);
        for i in 0..size {
            for j in 0..size {
                let d2 = (i as f64 - c).powi(2) + (j as f64 - c).powi(2);
                w.push((-d2 / (2.0 * sigma * sigma)).exp());
            }
        }
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|v| *v /= s);
        Self::new(size, size, w)
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn with_weights(&self, weights: Vec<f64>) -> Self {
        assert_eq!(weights.len(), self.weights.len());
        Self {
            height: self.height,
            width: self.width,
            weights,
        }
    }

    /// Tap at signed offset `(s, t)` from the center.
    pub fn tap(&self, s: isize, t: isize) -> f64 {
        let i = (s + (self.height / 2) as isize) as usize;
        let j = (t + (self.width / 2) as isize) as usize;
        self.weights[i * self.width + j]
    }

    pub fn is_delta(&self) -> bool {
        let center = (self.height / 2) * self.width + self.width / 2;
        self.weights
            .iter()
            .enumerate()
            .all(|(k, &v)| if k == center { v == 1.0 } else { v == 0.0 })
    }
}

/// Observation pattern: `true` marks an observed entry.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingMask {
    height: usize,
    width: usize,
    observed: Vec<bool>,
}

impl SamplingMask {
    pub fn new(height: usize, width: usize, observed: Vec<bool>) -> Result<Self> {
        if observed.len() != height * width {
            return Err(Error::invalid("mask length mismatch"));
        }
        Ok(Self {
            height,
            width,
            observed,
        })
    }

    pub fn full(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            observed: vec![true; height * width],
        }
    }

    pub fn empty(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            observed: vec![false; height * width],
        }
    }

    /// Independent Bernoulli(`rate`) draw per entry.
    pub fn bernoulli(height: usize, width: usize, rate: f64, rng: &mut SeededRng) -> Result<Self> {
        if !(rate > 0.0 && rate <= 1.0) {
            return Err(Error::invalid(format!("sample rate must be in (0, 1], got {rate}")));
        }
        let observed = (0..height * width).map(|_| rng.bernoulli(rate)).collect();
        Ok(Self {
            height,
            width,
            observed,
        })
    }

    /// Mask from an image: pixels above one half are observed.
    pub fn from_image(img: &ImageGrid) -> Self {
        Self {
            height: img.height(),
            width: img.width(),
            observed: img.as_slice().iter().map(|&v| v > 0.5).collect(),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn observed(&self) -> &[bool] {
        &self.observed
    }

    pub fn count(&self) -> usize {
        self.observed.iter().filter(|&&b| b).count()
    }

    pub fn sample_rate(&self) -> f64 {
        self.count() as f64 / self.observed.len() as f64
    }

    pub fn is_full(&self) -> bool {
        self.observed.iter().all(|&b| b)
    }

    /// Zero the unobserved entries. Idempotent and self-adjoint.
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.observed.len() {
            return Err(Error::invalid(format!(
                "mask of {} entries applied to {} entries",
                self.observed.len(),
                x.len()
            )));
        }
        Ok(x.iter()
            .zip(&self.observed)
            .map(|(&v, &o)| if o { v } else { 0.0 })
            .collect())
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        debug_assert_eq!(x.len(), self.observed.len());
        for (v, &o) in x.iter_mut().zip(&self.observed) {
            if !o {
                *v = 0.0;
            }
        }
    }

    pub fn to_image(&self) -> ImageGrid {
        ImageGrid::from_fn(self.height, self.width, |i, j| {
            if self.observed[i * self.width + j] {
                1.0
            } else {
                0.0
            }
        })
    }
}
