use super::grid::{GradField, ImageGrid};

/// Periodic forward differences: horizontal `x[i, j+1] - x[i, j]` and
/// vertical `x[i+1, j] - x[i, j]`, indices taken modulo the image size.
pub fn diff_forward(x: &ImageGrid) -> GradField {
    let (h, w) = x.shape();
    let mut out = GradField::zeros(h, w);
    let src = x.as_slice();
    let (dh, dv) = out.channels_mut();
    for i in 0..h {
        let down = ((i + 1) % h) * w;
        for j in 0..w {
            let k = i * w + j;
            dh[k] = src[i * w + (j + 1) % w] - src[k];
            dv[k] = src[down + j] - src[k];
        }
    }
    out
}

/// Adjoint of [`diff_forward`].
pub fn diff_adjoint(field: &GradField) -> ImageGrid {
    let (h, w) = (field.height(), field.width());
    let (ph, pv) = field.channels();
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        let up = ((i + h - 1) % h) * w;
        for j in 0..w {
            let k = i * w + j;
            out[k] = ph[i * w + (j + w - 1) % w] - ph[k] + pv[up + j] - pv[k];
        }
    }
    ImageGrid::new(h, w, out).expect("finite input yields finite output")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn dense_matrix(h: usize, w: usize) -> Vec<Vec<f64>> {
        // rows: 2*h*w outputs, cols: h*w inputs; built column by column from impulses
        let n = h * w;
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut e = vec![0.0; n];
            e[k] = 1.0;
            let img = ImageGrid::new(h, w, e).unwrap();
            cols.push(diff_forward(&img).as_slice().to_vec());
        }
        cols
    }

    #[test]
    fn constant_image_has_zero_gradient() {
        let x = ImageGrid::filled(5, 7, 0.3);
        assert!(diff_forward(&x).as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn impulse_response() {
        let mut x = ImageGrid::zeros(4, 4);
        x.set(1, 1, 1.0);
        let g = diff_forward(&x);
        let (dh, dv) = g.channels();
        assert_eq!(dh[4 + 1], -1.0);
        assert_eq!(dh[4], 1.0);
        assert_eq!(dv[4 + 1], -1.0);
        assert_eq!(dv[1], 1.0);
        assert_eq!(dh.iter().filter(|v| **v != 0.0).count(), 2);
        assert_eq!(dv.iter().filter(|v| **v != 0.0).count(), 2);
    }

    #[test]
    fn adjoint_matches_dense_transpose() {
        let (h, w) = (4, 4);
        let cols = dense_matrix(h, w);
        let mut rng = SeededRng::new(17);
        let p = GradField::from_vec(h, w, rng.gaussian_vec(2 * h * w)).unwrap();
        let got = diff_adjoint(&p);
        for (k, col) in cols.iter().enumerate() {
            let expect: f64 = col.iter().zip(p.as_slice()).map(|(a, b)| a * b).sum();
            assert!((got.as_slice()[k] - expect).abs() < 1e-12);
        }
    }
}
