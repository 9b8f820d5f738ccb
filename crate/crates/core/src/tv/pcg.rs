use crate::error::{Error, Result};

/// Outcome of a conjugate-gradient solve. Hitting the iteration cap is not an
/// error here; callers decide.
#[derive(Debug, Clone)]
pub struct PcgOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// `|b - A x| / |b|`, or 0 for `b = 0`.
    pub rel_residual: f64,
    pub converged: bool,
}

/// Conjugate gradients for `A x = b` from a zero start, no preconditioner.
pub fn pcg(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    maxit: usize,
) -> Result<PcgOutcome> {
    pcg_with(apply_a, b, None, None, tol, maxit)
}

/// Preconditioned conjugate gradients with an optional warm start and an
/// optional diagonal (Jacobi) preconditioner given by its inverse.
///
/// Fails on non-positive curvature `<p, A p> <= 0`, which a symmetric
/// positive definite `A` never produces.
pub fn pcg_with(
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    x0: Option<&[f64]>,
    inv_diag: Option<&[f64]>,
    tol: f64,
    maxit: usize,
) -> Result<PcgOutcome> {
    let n = b.len();
    if !(tol > 0.0) {
        return Err(Error::invalid(format!("pcg tolerance must be positive, got {tol}")));
    }
    if x0.is_some_and(|x| x.len() != n) || inv_diag.is_some_and(|d| d.len() != n) {
        return Err(Error::invalid("pcg operand lengths differ"));
    }
    let b_norm = norm(b);
    if b_norm == 0.0 {
        return Ok(PcgOutcome {
            x: vec![0.0; n],
            iterations: 0,
            rel_residual: 0.0,
            converged: true,
        });
    }

    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    let mut r: Vec<f64> = if x0.is_some() {
        let ax = apply_a(&x);
        b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
    } else {
        b.to_vec()
    };
    let precondition = |r: &[f64]| -> Vec<f64> {
        match inv_diag {
            Some(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            None => r.to_vec(),
        }
    };

    let mut rel = norm(&r) / b_norm;
    if rel <= tol {
        return Ok(PcgOutcome {
            x,
            iterations: 0,
            rel_residual: rel,
            converged: true,
        });
    }
    let mut z = precondition(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);

    for it in 1..=maxit {
        let ap = apply_a(&p);
        let curv = dot(&p, &ap);
        if !(curv > 0.0) {
            return Err(Error::Numeric(format!(
                "pcg met non-positive curvature {curv:e} at iteration {it}; operator is not SPD"
            )));
        }
        let alpha = rz / curv;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        rel = norm(&r) / b_norm;
        if rel <= tol {
            return Ok(PcgOutcome {
                x,
                iterations: it,
                rel_residual: rel,
                converged: true,
            });
        }
        z = precondition(&r);
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(PcgOutcome {
        x,
        iterations: maxit,
        rel_residual: rel,
        converged: false,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn identity_in_one_iteration() {
        let b = vec![1.0, -2.0, 3.5];
        let out = pcg(|v| v.to_vec(), &b, 1e-12, 10).unwrap();
        assert_eq!(out.iterations, 1);
        assert!(out.x.iter().zip(&b).all(|(a, b)| (a - b).abs() < 1e-15));
    }

    #[test]
    fn zero_rhs() {
        let out = pcg(|v| v.iter().map(|x| 2.0 * x).collect(), &[0.0; 4], 1e-8, 10).unwrap();
        assert_eq!(out.x, vec![0.0; 4]);
        assert_eq!(out.iterations, 0);
    }

    #[test]
    fn dense_spd_matches_direct_solve() {
        let mut rng = SeededRng::new(50);
        let n = 50;
        let g = DMatrix::from_fn(n, n, |_, _| rng.gaussian());
        let a = &g * g.transpose() + DMatrix::identity(n, n) * (n as f64);
        let b = DVector::from_vec(rng.gaussian_vec(n));
        let direct = a.clone().cholesky().unwrap().solve(&b);
        let tol = 1e-8;
        let diag: Vec<f64> = (0..n).map(|i| 1.0 / a[(i, i)]).collect();
        for inv in [None, Some(diag.as_slice())] {
            let out = pcg_with(
                |v| (&a * DVector::from_column_slice(v)).as_slice().to_vec(),
                b.as_slice(),
                None,
                inv,
                tol,
                500,
            )
            .unwrap();
            assert!(out.converged);
            let err = (DVector::from_vec(out.x) - &direct).norm() / direct.norm();
            assert!(err <= 10.0 * tol, "err {err}");
        }
    }

    #[test]
    fn indefinite_operator_rejected() {
        let b = vec![1.0, 1.0];
        let res = pcg(|v| vec![v[0], -v[1]], &b, 1e-10, 10);
        assert!(matches!(res, Err(Error::Numeric(_))));
    }

    #[test]
    fn cap_is_reported() {
        let d: Vec<f64> = (1..=30).map(|i| i as f64 * i as f64).collect();
        let b = vec![1.0; 30];
        let out = pcg(|v| v.iter().zip(&d).map(|(a, b)| a * b).collect(), &b, 1e-14, 2).unwrap();
        assert!(!out.converged);
        assert_eq!(out.iterations, 2);
    }
}
