use super::grid::ImageGrid;

/// Offsets `(di, dj)` and scale of the eight directional differences
/// `(x[i+di, j+dj] - x[i, j]) / scale`.
pub const DIRECTIONS: [(isize, isize, f64); 8] = [
    (1, 0, 1.0),
    (0, 1, 1.0),
    (1, 1, std::f64::consts::SQRT_2),
    (1, -1, std::f64::consts::SQRT_2),
    (2, 1, 2.236_067_977_499_79),
    (2, -1, 2.236_067_977_499_79),
    (1, 2, 2.236_067_977_499_79),
    (-1, 2, 2.236_067_977_499_79),
];

#[inline]
fn neighbor(i: usize, j: usize, di: isize, dj: isize, h: usize, w: usize) -> Option<usize> {
    let ii = i as isize + di;
    let jj = j as isize + dj;
    if ii < 0 || jj < 0 || ii >= h as isize || jj >= w as isize {
        None
    } else {
        Some(ii as usize * w + jj as usize)
    }
}

/// Directional difference `p` (0-based) with zero output wherever the
/// stencil leaves the image.
pub fn directional_channel(x: &ImageGrid, p: usize) -> ImageGrid {
    let (di, dj, scale) = DIRECTIONS[p];
    let (h, w) = x.shape();
    let src = x.as_slice();
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            if let Some(n) = neighbor(i, j, di, dj, h, w) {
                let k = i * w + j;
                out[k] = (src[n] - src[k]) / scale;
            }
        }
    }
    x.with_data(out)
}

/// All eight channels.
pub fn directional_grads(x: &ImageGrid) -> [ImageGrid; 8] {
    std::array::from_fn(|p| directional_channel(x, p))
}

/// Adjoint of channel `p`.
pub fn directional_adjoint(g: &ImageGrid, p: usize) -> ImageGrid {
    let mut out = vec![0.0; g.len()];
    accumulate_adjoint(g, p, &mut out);
    g.with_data(out)
}

/// `sum_p adjoint_p(g[p])`.
pub fn directional_adjoint_all(g: &[ImageGrid; 8]) -> ImageGrid {
    let mut out = vec![0.0; g[0].len()];
    for (p, gp) in g.iter().enumerate() {
        accumulate_adjoint(gp, p, &mut out);
    }
    g[0].with_data(out)
}

fn accumulate_adjoint(g: &ImageGrid, p: usize, out: &mut [f64]) {
    let (di, dj, scale) = DIRECTIONS[p];
    let (h, w) = g.shape();
    let src = g.as_slice();
    for i in 0..h {
        for j in 0..w {
            if let Some(n) = neighbor(i, j, di, dj, h, w) {
                let k = i * w + j;
                let v = src[k] / scale;
                out[n] += v;
                out[k] -= v;
            }
        }
    }
}
