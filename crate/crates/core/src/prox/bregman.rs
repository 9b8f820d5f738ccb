use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// A symmetric linear map on flat arrays, applied matrix-free.
#[derive(Clone)]
pub struct LinearOperator {
    dim: usize,
    apply: Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>,
}

impl LinearOperator {
    pub fn new(dim: usize, apply: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            apply: Arc::new(apply),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (self.apply)(x)
    }

    /// Probabilistic positive-definiteness check: `<Mv, v> > 0` on `trials`
    /// seeded Gaussian vectors.
    pub fn is_positive_definite(&self, seed: u64, trials: usize) -> bool {
        let mut rng = SeededRng::new(seed);
        (0..trials).all(|_| {
            let v = rng.gaussian_vec(self.dim);
            let mv = self.apply(&v);
            dot(&mv, &v) > 0.0
        })
    }
}

impl fmt::Debug for LinearOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LinearOperator").field("dim", &self.dim).finish_non_exhaustive()
    }
}

/// Strongly convex kernel generating a Bregman proximal term.
#[derive(Debug, Clone)]
pub enum BregmanKernel {
    /// `psi(x) = (weight/2) ||x||^2`.
    Quadratic { weight: f64 },
    /// `psi(x) = (1/2) <Mx, x>` with `M` symmetric positive definite and
    /// `modulus` a lower bound on its spectrum.
    OperatorQuadratic { op: LinearOperator, modulus: f64 },
    /// `psi(x) = weight * sum x_i log x_i` on the positive orthant.
    Entropy { weight: f64 },
}

impl BregmanKernel {
    pub fn quadratic(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(BregmanKernel::Quadratic { weight })
    }

    pub fn entropy(weight: f64) -> Result<Self> {
        check_weight(weight)?;
        Ok(BregmanKernel::Entropy { weight })
    }

    pub fn operator(op: LinearOperator, modulus: f64) -> Result<Self> {
        check_weight(modulus)?;
        Ok(BregmanKernel::OperatorQuadratic { op, modulus })
    }

    /// Declared strong-convexity modulus. For the entropy kind this is the
    /// modulus on the unit simplex / unit box, where `1/x_i >= 1`.
    pub fn modulus(&self) -> f64 {
        match self {
            BregmanKernel::Quadratic { weight } | BregmanKernel::Entropy { weight } => *weight,
            BregmanKernel::OperatorQuadratic { modulus, .. } => *modulus,
        }
    }

    /// `psi(x) - psi(y) - <grad psi(y), x - y>` in closed form.
    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        if x.len() != y.len() {
            return Err(Error::invalid(format!(
                "shape mismatch in Bregman distance: {} vs {}",
                x.len(),
                y.len()
            )));
        }
        match self {
            BregmanKernel::Quadratic { weight } => {
                let sq: f64 = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum();
                Ok(0.5 * weight * sq)
            }
            BregmanKernel::OperatorQuadratic { op, .. } => {
                if op.dim() != x.len() {
                    return Err(Error::invalid("operator dimension does not match input"));
                }
                let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
                let md = op.apply(&d);
                Ok(0.5 * dot(&md, &d))
            }
            BregmanKernel::Entropy { weight } => {
                let mut acc = 0.0;
                for (&xi, &yi) in x.iter().zip(y) {
                    if !(yi > 0.0) {
                        return Err(Error::Domain(format!(
                            "entropy kernel needs positive reference point, got {yi}"
                        )));
                    }
                    if xi < 0.0 {
                        return Err(Error::Domain(format!(
                            "entropy kernel needs nonnegative argument, got {xi}"
                        )));
                    }
                    // 0 log 0 = 0
                    let xlog = if xi > 0.0 { xi * (xi / yi).ln() } else { 0.0 };
                    acc += xlog - xi + yi;
                }
                Ok(weight * acc)
            }
        }
    }
}

fn check_weight(w: f64) -> Result<()> {
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::invalid(format!("kernel weight must be positive, got {w}")));
    }
    Ok(())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entropy_psi(x: &[f64]) -> f64 {
        x.iter().map(|&v| if v > 0.0 { v * v.ln() } else { 0.0 }).sum()
    }

    #[test]
    fn quadratic_example() {
        let k = BregmanKernel::quadratic(1.0).unwrap();
        assert!((k.distance(&[1.0, 2.0], &[0.0, 0.0]).unwrap() - 2.5).abs() < 1e-15);
        assert_eq!(k.distance(&[0.3, -1.0], &[0.3, -1.0]).unwrap(), 0.0);
    }

    #[test]
    fn entropy_example_matches_definition() {
        let k = BregmanKernel::entropy(1.0).unwrap();
        let (x, y) = ([0.5, 0.5], [0.25, 0.75]);
        let closed = k.distance(&x, &y).unwrap();
        // definitional form psi(x) - psi(y) - <log y + 1, x - y>
        let def = entropy_psi(&x)
            - entropy_psi(&y)
            - y.iter().zip(&x).map(|(yi, xi)| (yi.ln() + 1.0) * (xi - yi)).sum::<f64>();
        assert!((closed - def).abs() < 1e-14);
        assert!((closed - 0.143841).abs() < 1e-6, "{closed}");
        assert_eq!(k.distance(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn entropy_zero_argument_and_domain() {
        let k = BregmanKernel::entropy(2.0).unwrap();
        // 0 log 0 = 0 convention: distance reduces to weight * y_i on that coordinate
        let d = k.distance(&[0.0, 1.0], &[0.5, 1.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);
        assert!(matches!(k.distance(&[0.5], &[0.0]), Err(Error::Domain(_))));
        assert!(matches!(k.distance(&[0.5], &[-1.0]), Err(Error::Domain(_))));
    }

    #[test]
    fn operator_kernel_and_pd_check() {
        let op = LinearOperator::new(3, |v| v.iter().map(|x| 2.0 * x).collect());
        assert!(op.is_positive_definite(1, 20));
        let k = BregmanKernel::operator(op, 2.0).unwrap();
        let d = k.distance(&[1.0, 0.0, 0.0], &[0.0, 0.0, 0.0]).unwrap();
        assert!((d - 1.0).abs() < 1e-15);

        let indefinite = LinearOperator::new(2, |v| vec![v[0], -v[1]]);
        assert!(!indefinite.is_positive_definite(1, 50));
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(BregmanKernel::quadratic(0.0).is_err());
        assert!(BregmanKernel::entropy(-1.0).is_err());
    }
}
