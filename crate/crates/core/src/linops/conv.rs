use num_complex::Complex64;

use super::fft::Fft2;
use super::grid::{BlurKernel, ImageGrid};
use crate::error::{Error, Result};

/// Circular (modulo image size) 2D convolution evaluated with the FFT.
///
/// `(K(y) x)[i, j] = sum_{s, t} y[s, t] x[(i - s) mod h, (j - t) mod w]`,
/// where `(s, t)` range over signed offsets from the kernel's center tap.
/// The kernel is zero-padded to the image size with its center at index
/// `(0, 0)` before transforming.
#[derive(Debug, Clone)]
pub struct CircularConv {
    fft: Fft2,
}

impl CircularConv {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            fft: Fft2::new(height, width),
        }
    }

    pub fn shape(&self) -> (usize, usize) {
        self.fft.shape()
    }

    pub fn fft(&self) -> &Fft2 {
        &self.fft
    }

    fn check_image(&self, x: &ImageGrid) -> Result<()> {
        if x.shape() != self.shape() {
            return Err(Error::invalid(format!(
                "image {:?} does not match convolution grid {:?}",
                x.shape(),
                self.shape()
            )));
        }
        Ok(())
    }

    fn check_kernel(&self, kh: usize, kw: usize) -> Result<()> {
        let (h, w) = self.shape();
        if kh > h || kw > w {
            return Err(Error::invalid(format!(
                "kernel {kh}x{kw} larger than image {h}x{w}"
            )));
        }
        Ok(())
    }

    /// Zero-padded, center-at-origin kernel on the image grid.
    pub fn pad_kernel(&self, k: &BlurKernel) -> Result<Vec<f64>> {
        self.check_kernel(k.height(), k.width())?;
        let (h, w) = self.shape();
        let (rh, rw) = ((k.height() / 2) as isize, (k.width() / 2) as isize);
        let mut padded = vec![0.0; h * w];
        for s in -rh..=rh {
            for t in -rw..=rw {
                let i = s.rem_euclid(h as isize) as usize;
                let j = t.rem_euclid(w as isize) as usize;
                padded[i * w + j] += k.tap(s, t);
            }
        }
        Ok(padded)
    }

    /// Frequency response of `k` on this grid.
    pub fn kernel_spectrum(&self, k: &BlurKernel) -> Result<Vec<Complex64>> {
        Ok(self.fft.forward_real(&self.pad_kernel(k)?))
    }

    /// `K(y) x`.
    pub fn apply(&self, x: &ImageGrid, k: &BlurKernel) -> Result<ImageGrid> {
        self.check_image(x)?;
        let spec = self.kernel_spectrum(k)?;
        Ok(self.apply_spectrum(x, &spec))
    }

    /// `K(y)^T r`: convolution with the flipped kernel.
    pub fn adjoint_image(&self, r: &ImageGrid, k: &BlurKernel) -> Result<ImageGrid> {
        self.check_image(r)?;
        let spec = self.kernel_spectrum(k)?;
        Ok(self.adjoint_spectrum(r, &spec))
    }

    /// `K(x)^T r` as a kernel of shape `kh x kw`: the circular
    /// cross-correlation of `r` with `x`, read at the kernel's offsets.
    pub fn adjoint_kernel(
        &self,
        r: &ImageGrid,
        x: &ImageGrid,
        kh: usize,
        kw: usize,
    ) -> Result<BlurKernel> {
        self.check_image(r)?;
        self.check_image(x)?;
        self.check_kernel(kh, kw)?;
        let xh = self.fft.forward_real(x.as_slice());
        Ok(self.adjoint_kernel_with(r, &xh, kh, kw))
    }

    /// [`Self::adjoint_kernel`] with a precomputed image spectrum.
    pub fn adjoint_kernel_with(
        &self,
        r: &ImageGrid,
        x_hat: &[Complex64],
        kh: usize,
        kw: usize,
    ) -> BlurKernel {
        let (h, w) = self.shape();
        let mut rh = self.fft.forward_real(r.as_slice());
        for (a, b) in rh.iter_mut().zip(x_hat) {
            *a *= b.conj();
        }
        let corr = self.fft.inverse_real(rh);
        let (ch, cw) = ((kh / 2) as isize, (kw / 2) as isize);
        let mut weights = Vec::with_capacity(kh * kw);
        for s in -ch..=ch {
            for t in -cw..=cw {
                let i = s.rem_euclid(h as isize) as usize;
                let j = t.rem_euclid(w as isize) as usize;
                weights.push(corr[i * w + j]);
            }
        }
        BlurKernel::new(kh, kw, weights).expect("odd shape checked by caller")
    }

    pub fn apply_spectrum(&self, x: &ImageGrid, spec: &[Complex64]) -> ImageGrid {
        let mut xh = self.fft.forward_real(x.as_slice());
        for (a, b) in xh.iter_mut().zip(spec) {
            *a *= b;
        }
        x.with_data(self.fft.inverse_real(xh))
    }

    pub fn adjoint_spectrum(&self, r: &ImageGrid, spec: &[Complex64]) -> ImageGrid {
        let mut rh = self.fft.forward_real(r.as_slice());
        for (a, b) in rh.iter_mut().zip(spec) {
            *a *= b.conj();
        }
        r.with_data(self.fft.inverse_real(rh))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn direct(x: &ImageGrid, k: &BlurKernel) -> ImageGrid {
        let (h, w) = x.shape();
        let (rh, rw) = ((k.height() / 2) as isize, (k.width() / 2) as isize);
        ImageGrid::from_fn(h, w, |i, j| {
            let mut acc = 0.0;
            for s in -rh..=rh {
                for t in -rw..=rw {
                    let ii = (i as isize - s).rem_euclid(h as isize) as usize;
                    let jj = (j as isize - t).rem_euclid(w as isize) as usize;
                    acc += k.tap(s, t) * x.get(ii, jj);
                }
            }
            acc
        })
    }

    fn random_image(rng: &mut SeededRng, h: usize, w: usize) -> ImageGrid {
        ImageGrid::new(h, w, rng.gaussian_vec(h * w)).unwrap()
    }

    #[test]
    fn delta_kernel_is_identity() {
        let mut rng = SeededRng::new(1);
        let x = random_image(&mut rng, 6, 5);
        let conv = CircularConv::new(6, 5);
        let out = conv.apply(&x, &BlurKernel::delta(3, 3).unwrap()).unwrap();
        for (a, b) in out.as_slice().iter().zip(x.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn fft_matches_direct_sum() {
        let mut rng = SeededRng::new(2);
        let x = random_image(&mut rng, 5, 5);
        let k = BlurKernel::new(3, 3, rng.gaussian_vec(9)).unwrap();
        let conv = CircularConv::new(5, 5);
        let fast = conv.apply(&x, &k).unwrap();
        let slow = direct(&x, &k);
        for (a, b) in fast.as_slice().iter().zip(slow.as_slice()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn image_and_kernel_roles_commute() {
        // K(y)x == K(x)y: the kernel-adjoint route must see the same bilinear form
        let mut rng = SeededRng::new(3);
        let (h, w) = (7, 6);
        let x = random_image(&mut rng, h, w);
        let k = BlurKernel::new(3, 5, rng.gaussian_vec(15)).unwrap();
        let r = random_image(&mut rng, h, w);
        let conv = CircularConv::new(h, w);
        let kx = conv.apply(&x, &k).unwrap();
        let lhs: f64 = kx.as_slice().iter().zip(r.as_slice()).map(|(a, b)| a * b).sum();
        let kt = conv.adjoint_kernel(&r, &x, 3, 5).unwrap();
        let rhs: f64 = kt.weights().iter().zip(k.weights()).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10 * lhs.abs().max(1.0));
    }

    #[test]
    fn oversized_kernel_rejected() {
        let conv = CircularConv::new(3, 3);
        let x = ImageGrid::zeros(3, 3);
        assert!(conv.apply(&x, &BlurKernel::uniform(5, 1).unwrap()).is_err());
    }
}
