use nalgebra::{DMatrix, SVD};

use crate::error::{Error, Result};

/// Caps of the capped trace norm (`kappa1`, on singular values) and the
/// capped l1 norm (`kappa2`, on entries).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CappedNormParams {
    pub kappa1: f64,
    pub kappa2: f64,
}

impl CappedNormParams {
    pub fn new(kappa1: f64, kappa2: f64) -> Result<Self> {
        // +inf is allowed: the cap is then never active.
        if !(kappa1 > 0.0) || !(kappa2 > 0.0) {
            return Err(Error::invalid(format!(
                "caps must be positive, got kappa1={kappa1}, kappa2={kappa2}"
            )));
        }
        Ok(Self { kappa1, kappa2 })
    }
}

/// Full thin SVD with singular values in descending order.
pub(crate) fn checked_svd(a: &DMatrix<f64>) -> Result<SVD<f64, nalgebra::Dyn, nalgebra::Dyn>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("SVD of a matrix with non-finite entries".into()));
    }
    let mut svd = a
        .clone()
        .try_svd(true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?;
    svd.sort_by_singular_values();
    Ok(svd)
}

/// Singular triples with `s` in descending order; `u` is `m x r`, `v_t` is
/// `r x n`. Built either from a full decomposition or as the exact factors
/// of a thresholded matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ThinSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v_t: DMatrix<f64>,
}

impl ThinSvd {
    pub fn of(a: &DMatrix<f64>) -> Result<Self> {
        let svd = checked_svd(a)?;
        Ok(Self {
            u: svd.u.expect("left vectors requested"),
            s: svd.singular_values.iter().copied().collect(),
            v_t: svd.v_t.expect("right vectors requested"),
        })
    }

    pub fn nuclear_norm(&self) -> f64 {
        self.s.iter().sum()
    }

    pub fn capped_excess(&self, kappa1: f64) -> f64 {
        self.s.iter().map(|s| (s - kappa1).max(0.0)).sum()
    }

    /// `U diag(w) V^T` with `w_i = 1` where `sigma_i >= kappa1`.
    pub fn capped_subgradient(&self, kappa1: f64) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.u.nrows(), self.v_t.ncols());
        for (i, &s) in self.s.iter().enumerate() {
            // sorted descending: the active set is a prefix
            if s < kappa1 {
                break;
            }
            out.ger(1.0, &self.u.column(i), &self.v_t.row(i).transpose(), 1.0);
        }
        out
    }

    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.u.nrows(), self.v_t.ncols());
        for (i, &s) in self.s.iter().enumerate() {
            out.ger(s, &self.u.column(i), &self.v_t.row(i).transpose(), 1.0);
        }
        out
    }
}

pub fn singular_values(a: &DMatrix<f64>) -> Result<Vec<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("SVD of a matrix with non-finite entries".into()));
    }
    let mut s: Vec<f64> = a
        .clone()
        .try_svd_unordered(false, false, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numeric("SVD did not converge".into()))?
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_unstable_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub fn nuclear_norm(a: &DMatrix<f64>) -> Result<f64> {
    Ok(singular_values(a)?.iter().sum())
}

/// `g1(X; kappa1) = sum_i max(sigma_i(X) - kappa1, 0)`.
pub fn capped_trace_excess(a: &DMatrix<f64>, kappa1: f64) -> Result<f64> {
    Ok(singular_values(a)?.iter().map(|s| (s - kappa1).max(0.0)).sum())
}

/// `g2(Y; kappa2) = sum_ij max(|Y_ij| - kappa2, 0)`.
pub fn capped_l1_excess(a: &[f64], kappa2: f64) -> f64 {
    a.iter().map(|v| (v.abs() - kappa2).max(0.0)).sum()
}

/// Element of the subdifferential of the capped trace excess:
/// `U diag(w) V^T` with `w_i = 1` where `sigma_i >= kappa1`, else `0`.
pub fn subgrad_capped_trace(a: &DMatrix<f64>, kappa1: f64) -> Result<DMatrix<f64>> {
    Ok(ThinSvd::of(a)?.capped_subgradient(kappa1))
}

/// Element of the subdifferential of the capped l1 excess, entrywise:
/// `sign(Y_ij)` where `|Y_ij| >= kappa2`, else `0`.
pub fn subgrad_capped_l1(a: &[f64], kappa2: f64) -> Result<Vec<f64>> {
    if a.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite entry in capped-l1 subgradient".into()));
    }
    Ok(a.iter()
        .map(|&v| if v.abs() >= kappa2 { v.signum() } else { 0.0 })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use nalgebra::DVector;

    #[test]
    fn capped_trace_examples() {
        let x = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 0.5]));
        let xi = subgrad_capped_trace(&x, 1.0).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        assert!((xi - expected).norm() < 1e-12);

        let zero = DMatrix::<f64>::zeros(3, 2);
        assert_eq!(subgrad_capped_trace(&zero, 1.0).unwrap(), zero);
    }

    #[test]
    fn capped_trace_matches_independent_case_split() {
        let mut rng = SeededRng::new(3);
        let a = DMatrix::from_fn(3, 3, |_, _| rng.gaussian());
        let svd = a.clone().svd(true, true);
        let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        let kappa = 0.5 * (s[0] + s[1]);
        // oracle: the top singular triple only
        let idx = svd
            .singular_values
            .iter()
            .position(|&v| v == s[0])
            .unwrap();
        let u = svd.u.unwrap();
        let vt = svd.v_t.unwrap();
        let oracle = u.column(idx) * vt.row(idx);
        let got = subgrad_capped_trace(&a, kappa).unwrap();
        assert!((got - oracle).norm() < 1e-10);
    }

    #[test]
    fn capped_l1_cases_and_ties() {
        let y = [5.0, -0.5, -5.0, 1.0, -1.0];
        assert_eq!(subgrad_capped_l1(&y, 1.0).unwrap(), vec![1.0, 0.0, -1.0, 1.0, -1.0]);
        assert!((capped_l1_excess(&y, 1.0) - 8.0).abs() < 1e-15);
    }

    #[test]
    fn infinite_caps_are_inactive() {
        let mut rng = SeededRng::new(9);
        let a = DMatrix::from_fn(4, 4, |_, _| rng.gaussian());
        assert_eq!(subgrad_capped_trace(&a, f64::INFINITY).unwrap(), DMatrix::zeros(4, 4));
        assert_eq!(capped_trace_excess(&a, f64::INFINITY).unwrap(), 0.0);
        assert!(CappedNormParams::new(f64::INFINITY, f64::INFINITY).is_ok());
        assert!(CappedNormParams::new(0.0, 1.0).is_err());
    }
}
