//! Closed-form proximal maps, projections and subgradient selectors.
//!
//! Every function here is pure: inputs are borrowed, outputs freshly allocated.

mod bregman;
mod capped;

pub use bregman::{BregmanKernel, LinearOperator};
pub use capped::{
    capped_l1_excess, capped_trace_excess, nuclear_norm, singular_values, subgrad_capped_l1,
    subgrad_capped_trace, CappedNormParams, ThinSvd,
};

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linops::GradField;

/// Soft-thresholding of a single value.
#[inline]
pub fn shrink_scalar(a: f64, t: f64) -> f64 {
    let m = a.abs() - t;
    if m > 0.0 {
        m.copysign(a)
    } else {
        0.0
    }
}

/// Componentwise `sign(a) * max(|a| - t, 0)`, the proximal map of `t * ||.||_1`.
pub fn shrink(a: &[f64], t: f64) -> Result<Vec<f64>> {
    check_threshold(t)?;
    Ok(a.iter().map(|&v| shrink_scalar(v, t)).collect())
}

/// In-place variant of [`shrink`] used on hot paths.
pub fn shrink_in_place(a: &mut [f64], t: f64) -> Result<()> {
    check_threshold(t)?;
    for v in a.iter_mut() {
        *v = shrink_scalar(*v, t);
    }
    Ok(())
}

fn check_threshold(t: f64) -> Result<()> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(Error::invalid(format!(
            "threshold must be finite and nonnegative, got {t}"
        )));
    }
    Ok(())
}

/// Singular value thresholding: `U shrink(S, t) V^T`, the proximal map of `t * ||.||_*`.
pub fn svt(a: &DMatrix<f64>, t: f64) -> Result<DMatrix<f64>> {
    Ok(svt_factors(a, t)?.reconstruct())
}

/// [`svt`] returning the result in factored form (only the nonzero triples).
pub fn svt_factors(a: &DMatrix<f64>, t: f64) -> Result<ThinSvd> {
    check_threshold(t)?;
    let full = ThinSvd::of(a)?;
    let keep = full.s.iter().take_while(|&&s| shrink_scalar(s, t) > 0.0).count();
    Ok(ThinSvd {
        u: full.u.columns(0, keep).into_owned(),
        s: full.s[..keep].iter().map(|&s| shrink_scalar(s, t)).collect(),
        v_t: full.v_t.rows(0, keep).into_owned(),
    })
}

/// Componentwise clamp onto `[lo, hi]`.
pub fn proj_box(x: &[f64], lo: f64, hi: f64) -> Result<Vec<f64>> {
    if !(lo <= hi) {
        return Err(Error::invalid(format!("box bounds reversed: lo={lo} > hi={hi}")));
    }
    Ok(x.iter().map(|&v| v.min(hi).max(lo)).collect())
}

/// Euclidean projection onto the unit simplex `{z >= 0, sum z = 1}`.
///
/// Sort-based threshold search: find the largest `rho` with
/// `u_rho - (sum_{j<=rho} u_j - 1) / rho > 0` over the descending sort `u`,
/// then clip `v - theta` at zero. `O(n log n)`.
pub fn proj_simplex(v: &[f64]) -> Result<Vec<f64>> {
    if v.is_empty() {
        return Err(Error::invalid("simplex projection of an empty vector"));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::Numeric("non-finite entry in simplex projection".into()));
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let candidate = (cumsum - 1.0) / (i + 1) as f64;
        if ui - candidate > 0.0 {
            theta = candidate;
        }
    }
    Ok(v.iter().map(|&x| (x - theta).max(0.0)).collect())
}

/// Per-pixel unit direction of a paired gradient field, `(0, 0)` where the pair vanishes.
///
/// This selects an element of the subdifferential of the grouped `l_{2,1}` norm.
pub fn subgrad_iso_tv(field: &GradField) -> GradField {
    let mut out = GradField::zeros(field.height(), field.width());
    let (h_in, v_in) = field.channels();
    let (h_out, v_out) = out.channels_mut();
    for i in 0..h_in.len() {
        let (a, b) = (h_in[i], v_in[i]);
        let norm = a.hypot(b);
        if norm > 0.0 {
            h_out[i] = a / norm;
            v_out[i] = b / norm;
        }
    }
    out
}

/// `sum_pixels sqrt(h^2 + v^2)`.
pub fn group_l21_norm(field: &GradField) -> f64 {
    let (h, v) = field.channels();
    h.iter().zip(v).map(|(a, b)| a.hypot(*b)).sum()
}

pub fn l1_norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v.abs()).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn grid_argmin(f: impl Fn(f64) -> f64, lo: f64, hi: f64, step: f64) -> f64 {
        let n = ((hi - lo) / step).round() as usize;
        let mut best = (f64::INFINITY, lo);
        for k in 0..=n {
            let x = lo + k as f64 * step;
            let val = f(x);
            if val < best.0 {
                best = (val, x);
            }
        }
        best.1
    }

    #[test]
    fn shrink_examples() {
        assert_eq!(shrink(&[3.0, -1.0, 0.5], 1.0).unwrap(), vec![2.0, 0.0, 0.0]);
        let a = [1.5, -2.0, 0.0, 7.25];
        assert_eq!(shrink(&a, 0.0).unwrap(), a.to_vec());
        assert!(matches!(shrink(&a, -0.1), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn shrink_matches_grid_minimizer() {
        assert_eq!(shrink(&[2.5], 1.0).unwrap(), vec![1.5]);
        let xstar = grid_argmin(|x| x.abs() + 0.5 * (x - 2.5).powi(2), -5.0, 5.0, 1e-4);
        assert!((xstar - 1.5).abs() < 1e-4);

        let mut rng = SeededRng::new(11);
        for _ in 0..200 {
            let a = rng.uniform_in(-4.0, 4.0);
            let t = rng.uniform_in(0.0, 2.0);
            let oracle = grid_argmin(|x| t * x.abs() + 0.5 * (x - a).powi(2), -5.0, 5.0, 1e-4);
            let got = shrink(&[a], t).unwrap()[0];
            assert!((got - oracle).abs() <= 1e-4, "a={a} t={t} got={got} oracle={oracle}");
        }
    }

    #[test]
    fn svt_diagonal_and_identity() {
        let a = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![3.0, 1.0]));
        let out = svt(&a, 2.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((out - expected).norm() < 1e-12);

        let mut rng = SeededRng::new(5);
        let b = DMatrix::from_fn(4, 3, |_, _| rng.gaussian());
        assert!((svt(&b, 0.0).unwrap() - &b).norm() < 1e-10);
    }

    #[test]
    fn svt_rejects_non_finite() {
        let mut a = DMatrix::<f64>::zeros(2, 2);
        a[(0, 1)] = f64::NAN;
        assert!(matches!(svt(&a, 1.0), Err(Error::Numeric(_))));
    }

    #[test]
    fn proj_box_examples() {
        assert_eq!(proj_box(&[-0.5, 0.3, 2.0], 0.0, 1.0).unwrap(), vec![0.0, 0.3, 1.0]);
        assert_eq!(proj_box(&[0.1, 0.9], 0.0, 1.0).unwrap(), vec![0.1, 0.9]);
        assert!(proj_box(&[0.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn proj_simplex_examples() {
        let out = proj_simplex(&[0.2, 0.8]).unwrap();
        assert!((out[0] - 0.2).abs() < 1e-15 && (out[1] - 0.8).abs() < 1e-15);
        assert_eq!(proj_simplex(&[2.0, 0.0]).unwrap(), vec![1.0, 0.0]);
        let third = proj_simplex(&[0.5, 0.5, 0.5]).unwrap();
        for v in third {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(proj_simplex(&[]).is_err());
    }

    #[test]
    fn iso_tv_subgradient_examples() {
        let mut f = GradField::zeros(1, 2);
        {
            let (h, v) = f.channels_mut();
            h[0] = 3.0;
            v[0] = 4.0;
        }
        let s = subgrad_iso_tv(&f);
        let (h, v) = s.channels();
        assert!((h[0] - 0.6).abs() < 1e-15 && (v[0] - 0.8).abs() < 1e-15);
        assert_eq!((h[1], v[1]), (0.0, 0.0));
    }
}
