//! Image and matrix quality measures.

use crate::error::{Error, Result};
use crate::linops::ImageGrid;

/// SSIM window: 11x11 Gaussian, standard deviation 1.5.
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
/// Stability constants for dynamic range 1.
pub const SSIM_C1: f64 = 0.01 * 0.01;
pub const SSIM_C2: f64 = 0.03 * 0.03;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn diff_norm(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `20 log10(|x| / |x_est - x|)` in dB; `+inf` for an exact match.
pub fn snr_slices(reference: &[f64], estimate: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid("snr operands differ in length"));
    }
    let r = norm(reference);
    if r == 0.0 {
        return Err(Error::invalid("snr needs a nonzero reference"));
    }
    let e = diff_norm(reference, estimate);
    if e == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(20.0 * (r / e).log10())
}

pub fn snr(reference: &ImageGrid, estimate: &ImageGrid) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::invalid("snr operands differ in shape"));
    }
    snr_slices(reference.as_slice(), estimate.as_slice())
}

/// `|a - b| / |b|`.
pub fn relative_error(estimate: &[f64], reference: &[f64]) -> Result<f64> {
    if reference.len() != estimate.len() {
        return Err(Error::invalid("relative error operands differ in length"));
    }
    let r = norm(reference);
    if r == 0.0 {
        return Err(Error::invalid("relative error needs a nonzero reference"));
    }
    Ok(diff_norm(estimate, reference) / r)
}

/// Mean structural similarity with the standard Gaussian window. Near the
/// border the window is truncated to the image and renormalized, so every
/// pixel contributes and images smaller than the window are accepted.
pub fn ssim(reference: &ImageGrid, estimate: &ImageGrid) -> Result<f64> {
    if reference.shape() != estimate.shape() {
        return Err(Error::invalid(format!(
            "ssim shape mismatch: {:?} vs {:?}",
            reference.shape(),
            estimate.shape()
        )));
    }
    let (h, w) = reference.shape();
    if h == 0 || w == 0 {
        return Err(Error::invalid("ssim of an empty image"));
    }
    let r = (SSIM_WINDOW / 2) as isize;
    let g: Vec<f64> = (-r..=r)
        .map(|d| (-(d * d) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let (x, y) = (reference.as_slice(), estimate.as_slice());

    let mut total = 0.0;
    for i in 0..h as isize {
        for j in 0..w as isize {
            let (mut sw, mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
            for s in -r..=r {
                let ii = i + s;
                if ii < 0 || ii >= h as isize {
                    continue;
                }
                for t in -r..=r {
                    let jj = j + t;
                    if jj < 0 || jj >= w as isize {
                        continue;
                    }
                    let wt = g[(s + r) as usize] * g[(t + r) as usize];
                    let k = ii as usize * w + jj as usize;
                    sw += wt;
                    mx += wt * x[k];
                    my += wt * y[k];
                    xx += wt * x[k] * x[k];
                    yy += wt * y[k] * y[k];
                    xy += wt * x[k] * y[k];
                }
            }
            mx /= sw;
            my /= sw;
            let vx = xx / sw - mx * mx;
            let vy = yy / sw - my * my;
            let cxy = xy / sw - mx * my;
            total += ((2.0 * mx * my + SSIM_C1) * (2.0 * cxy + SSIM_C2))
                / ((mx * mx + my * my + SSIM_C1) * (vx + vy + SSIM_C2));
        }
    }
    Ok(total / (h * w) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snr_examples() {
        assert!((snr_slices(&[3.0, 4.0], &[3.0, 4.5]).unwrap() - 20.0).abs() < 1e-12);
        assert!(snr_slices(&[1.0, 0.0], &[0.0, 0.0]).unwrap().abs() < 1e-12);
        assert_eq!(snr_slices(&[1.0, 2.0], &[1.0, 2.0]).unwrap(), f64::INFINITY);
        assert!(snr_slices(&[0.0, 0.0], &[1.0, 0.0]).is_err());
    }

    #[test]
    fn relative_error_scaling() {
        let x = [1.0, -2.0, 0.5];
        let twice: Vec<f64> = x.iter().map(|v| 2.0 * v).collect();
        assert!((relative_error(&twice, &x).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(relative_error(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn ssim_identical_and_negative() {
        let x = ImageGrid::from_fn(16, 16, |i, j| if (i / 4 + j / 4) % 2 == 0 { 0.9 } else { 0.1 });
        assert!((ssim(&x, &x).unwrap() - 1.0).abs() < 1e-12);
        let neg = x.map(|v| 1.0 - v);
        assert!(ssim(&x, &neg).unwrap() < 0.0);
    }

    #[test]
    fn ssim_constants_closed_form() {
        let a = ImageGrid::filled(12, 12, 0.2);
        let b = ImageGrid::filled(12, 12, 0.6);
        let lum = (2.0 * 0.2 * 0.6 + SSIM_C1) / (0.04 + 0.36 + SSIM_C1);
        let got = ssim(&a, &b).unwrap();
        assert!((got - lum).abs() < 1e-12, "{got} vs {lum}");
        assert!(got < 1.0);
    }

    #[test]
    fn ssim_shape_mismatch() {
        assert!(ssim(&ImageGrid::zeros(3, 3), &ImageGrid::zeros(3, 4)).is_err());
    }
}
