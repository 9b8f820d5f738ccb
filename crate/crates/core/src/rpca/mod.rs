//! Capped-norm robust PCA,
//!
//! ```text
//! min_{X, Y}  |X|_* - g1(X; k1) + tau (|Y|_1 - g2(Y; k2)) + 1/(2 lambda) |P(X + Y - B)|_F^2
//! ```
//!
//! where `g1`, `g2` are the excesses of the singular values / entries above
//! their caps and `P` keeps the observed entries. [`RpcaProblem`] plugs the
//! model into the generic engine with kernels `(1/lambda)(mu I - P^T P)`
//! and `(1/lambda)(nu I - P^T P)`, which turns both block updates into
//! closed forms. [`adca_rpca_solve`] and [`dca_admm_solve`] are the
//! DCA-type baselines with inner ADMM solvers.

mod baselines;
mod data;

use std::sync::Mutex;

use nalgebra::DMatrix;

pub use baselines::{
    adca_rpca_solve, admm_x_block, admm_x_block_warm, dca_admm_solve, AdmmWarmStart, BaselineRun,
    InnerAdmmReport, INNER_ADMM_MAXIT,
};
pub use data::{synth_gen, SyntheticRpcaInstance};

use crate::error::{Error, Result};
use crate::linops::SamplingMask;
use crate::metrics::relative_error;
use crate::prox::{
    capped_l1_excess, l1_norm, shrink_in_place, singular_values, subgrad_capped_l1,
    svt_factors, BregmanKernel, CappedNormParams, LinearOperator, ThinSvd,
};
use crate::solver::{run, Block, DcProblem, SolveResult, SolverConfig};

/// Default regularization weights `(tau, lambda)`.
///
/// Synthetic: `tau = 1/sqrt(n)`, `lambda = sqrt(sr sqrt(8 n sr) delta)`.
/// Video: `tau = 1/sqrt(max(m, n))`, `lambda = (sqrt(m) + sqrt(n)) delta sqrt(sr)`.
pub fn rpca_defaults(m: usize, n: usize, sr: f64, delta: f64, video: bool) -> Result<(f64, f64)> {
    if !(sr > 0.0 && sr <= 1.0) {
        return Err(Error::invalid(format!("sample rate must lie in (0, 1], got {sr}")));
    }
    if !(delta >= 0.0) {
        return Err(Error::invalid(format!("noise level must be nonnegative, got {delta}")));
    }
    let (mf, nf) = (m as f64, n as f64);
    Ok(if video {
        (1.0 / mf.max(nf).sqrt(), (mf.sqrt() + nf.sqrt()) * delta * sr.sqrt())
    } else {
        (1.0 / nf.sqrt(), (sr * (8.0 * nf * sr).sqrt() * delta).sqrt())
    })
}

/// Default caps: `k1 = 1.5 median sigma(P(B))`, `k2 = 0.1 max |B|`.
pub fn default_caps(b: &DMatrix<f64>, mask: &SamplingMask) -> Result<CappedNormParams> {
    let pb = project(b, &mask_matrix(mask, b.nrows(), b.ncols())?);
    let s = singular_values(&pb)?;
    let median = if s.is_empty() {
        0.0
    } else if s.len() % 2 == 1 {
        s[s.len() / 2]
    } else {
        0.5 * (s[s.len() / 2 - 1] + s[s.len() / 2])
    };
    let max_abs = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    CappedNormParams::new(1.5 * median, 0.1 * max_abs)
}

/// 0/1 indicator of the mask as an `m x n` matrix; the mask is row-major.
pub fn mask_matrix(mask: &SamplingMask, m: usize, n: usize) -> Result<DMatrix<f64>> {
    if mask.shape() != (m, n) {
        return Err(Error::invalid(format!(
            "mask {:?} does not match matrix {m}x{n}",
            mask.shape()
        )));
    }
    let obs = mask.observed();
    Ok(DMatrix::from_fn(m, n, |i, j| if obs[i * n + j] { 1.0 } else { 0.0 }))
}

fn project(a: &DMatrix<f64>, w: &DMatrix<f64>) -> DMatrix<f64> {
    a.component_mul(w)
}

#[derive(Debug, Clone)]
pub struct RpcaSpec {
    /// Observation, zero off the mask.
    pub b: DMatrix<f64>,
    pub mask: SamplingMask,
    pub tau: f64,
    pub lambda: f64,
    pub caps: CappedNormParams,
    pub mu: f64,
    pub nu: f64,
}

impl RpcaSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0) || !(self.lambda > 0.0) {
            return Err(Error::invalid(format!(
                "need tau > 0 and lambda > 0, got tau={}, lambda={}",
                self.tau, self.lambda
            )));
        }
        if !(self.mu > 1.0) || !(self.nu > 1.0) {
            return Err(Error::invalid(format!(
                "need mu > 1 and nu > 1, got mu={}, nu={}",
                self.mu, self.nu
            )));
        }
        mask_matrix(&self.mask, self.b.nrows(), self.b.ncols())?;
        Ok(())
    }
}

/// The model as a two-block DC problem over `(X, Y)`.
#[derive(Debug)]
pub struct RpcaProblem {
    spec: RpcaSpec,
    /// Mask indicator.
    w: DMatrix<f64>,
    /// `P(B)`.
    pb: DMatrix<f64>,
    /// Factors of the last X seen. The SVT output is already factored, so
    /// the objective and the next subgradient need no further SVD.
    svd_cache: Mutex<Option<(DMatrix<f64>, ThinSvd)>>,
}

impl Clone for RpcaProblem {
    fn clone(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            w: self.w.clone(),
            pb: self.pb.clone(),
            svd_cache: Mutex::new(None),
        }
    }
}

impl RpcaProblem {
    pub fn new(spec: RpcaSpec) -> Result<Self> {
        spec.validate()?;
        let w = mask_matrix(&spec.mask, spec.b.nrows(), spec.b.ncols())?;
        let pb = project(&spec.b, &w);
        Ok(Self { spec, w, pb, svd_cache: Mutex::new(None) })
    }

    fn factors(&self, x: &DMatrix<f64>) -> Result<ThinSvd> {
        let mut cache = self.svd_cache.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((key, f)) = cache.as_ref() {
            if key == x {
                return Ok(f.clone());
            }
        }
        let f = ThinSvd::of(x)?;
        *cache = Some((x.clone(), f.clone()));
        Ok(f)
    }

    fn remember(&self, x: &DMatrix<f64>, f: ThinSvd) {
        let mut cache = self.svd_cache.lock().unwrap_or_else(|e| e.into_inner());
        *cache = Some((x.clone(), f));
    }

    pub fn spec(&self) -> &RpcaSpec {
        &self.spec
    }

    pub fn indicator(&self) -> &DMatrix<f64> {
        &self.w
    }

    /// `P(X + Y - B)`.
    pub fn residual(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        project(&(x + y), &self.w) - &self.pb
    }

    /// Kernels `(1/lambda)(mu I - P^T P)` and `(1/lambda)(nu I - P^T P)`.
    pub fn kernels(&self) -> Result<(BregmanKernel, BregmanKernel)> {
        let lam = self.spec.lambda;
        let make = |s: f64| -> Result<BregmanKernel> {
            let obs: Vec<f64> = self.w.as_slice().to_vec();
            let op = LinearOperator::new(obs.len(), move |d| {
                d.iter().zip(&obs).map(|(v, o)| (s - o) * v / lam).collect()
            });
            // the mask has eigenvalues 0 and 1
            BregmanKernel::operator(op, (s - 1.0) / lam)
        };
        Ok((make(self.spec.mu)?, make(self.spec.nu)?))
    }

    /// `X+ = SVT(X - (1/mu) P(X + Y - B) + (lambda/mu) u, lambda/mu)`.
    pub fn x_update(&self, x_k: &DMatrix<f64>, y_k: &DMatrix<f64>, u: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (lam, mu) = (self.spec.lambda, self.spec.mu);
        let r = self.residual(x_k, y_k);
        let arg = x_k - r / mu + u * (lam / mu);
        let f = svt_factors(&arg, lam / mu)?;
        let x = f.reconstruct();
        self.remember(&x, f);
        Ok(x)
    }

    /// `Y+ = shrink(Y - (1/nu) P(X + Y - B) + (lambda/nu) v, lambda tau/nu)`
    /// with `v` already carrying the factor `tau`.
    pub fn y_update(&self, x_next: &DMatrix<f64>, y_k: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let (lam, nu, tau) = (self.spec.lambda, self.spec.nu, self.spec.tau);
        let r = self.residual(x_next, y_k);
        let mut arg = y_k - r / nu + v * (lam / nu);
        shrink_in_place(arg.as_mut_slice(), lam * tau / nu)?;
        Ok(arg)
    }
}

impl DcProblem for RpcaProblem {
    type X = DMatrix<f64>;
    type Y = DMatrix<f64>;

    fn f1(&self, x: &DMatrix<f64>) -> f64 {
        self.factors(x).map(|f| f.nuclear_norm()).unwrap_or(f64::NAN)
    }

    fn g1(&self, x: &DMatrix<f64>) -> Result<f64> {
        Ok(self.factors(x)?.capped_excess(self.spec.caps.kappa1))
    }

    fn f2(&self, y: &DMatrix<f64>) -> f64 {
        self.spec.tau * l1_norm(y.as_slice())
    }

    fn g2(&self, y: &DMatrix<f64>) -> Result<f64> {
        Ok(self.spec.tau * capped_l1_excess(y.as_slice(), self.spec.caps.kappa2))
    }

    fn h_plus(&self, x: &DMatrix<f64>, y: &DMatrix<f64>) -> f64 {
        self.residual(x, y).norm_squared() / (2.0 * self.spec.lambda)
    }

    fn h_minus(&self, _x: &DMatrix<f64>, _y: &DMatrix<f64>) -> f64 {
        0.0
    }

    fn grad_x_h_minus(&self, x: &DMatrix<f64>, _y: &DMatrix<f64>) -> DMatrix<f64> {
        x.zeros_like()
    }

    fn grad_y_h_minus(&self, _x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
        y.zeros_like()
    }

    fn select_subgrad_g1(&self, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        Ok(self.factors(x)?.capped_subgradient(self.spec.caps.kappa1))
    }

    fn select_subgrad_g2(&self, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let s = subgrad_capped_l1(y.as_slice(), self.spec.caps.kappa2)?;
        Ok(DMatrix::from_vec(y.nrows(), y.ncols(), s) * self.spec.tau)
    }

    fn solve_x(
        &self,
        x_k: &DMatrix<f64>,
        y_k: &DMatrix<f64>,
        tilt: &DMatrix<f64>,
        _kernel: &BregmanKernel,
    ) -> Result<DMatrix<f64>> {
        self.x_update(x_k, y_k, tilt)
    }

    fn solve_y(
        &self,
        x_next: &DMatrix<f64>,
        y_k: &DMatrix<f64>,
        tilt: &DMatrix<f64>,
        _kernel: &BregmanKernel,
    ) -> Result<DMatrix<f64>> {
        self.y_update(x_next, y_k, tilt)
    }
}

/// One UBAMA sweep from `(X^k, Y^k)`.
pub fn ubama_rpca_step(
    problem: &RpcaProblem,
    x_k: &DMatrix<f64>,
    y_k: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let xi = problem.select_subgrad_g1(x_k)?;
    let eta = problem.select_subgrad_g2(y_k)?;
    let x = problem.x_update(x_k, y_k, &xi)?;
    let y = problem.y_update(&x, y_k, &eta)?;
    Ok((x, y))
}

/// Starting point of the RPCA solvers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RpcaStart {
    Zero,
    /// `X0` keeps the leading singular triples of `P(B)/sr` up to the largest
    /// ratio `sigma_k / sigma_{k+1}` (`k <= min(m, n)/2`); `Y0` keeps the
    /// observed residual entries above `k2`.
    #[default]
    Spectral,
}

pub fn initial_point(problem: &RpcaProblem, start: RpcaStart) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let (m, n) = problem.spec.b.shape();
    let zeros = (DMatrix::zeros(m, n), DMatrix::zeros(m, n));
    let observed = problem.w.sum();
    if start == RpcaStart::Zero || observed == 0.0 {
        return Ok(zeros);
    }
    let f = ThinSvd::of(&(&problem.pb * ((m * n) as f64 / observed)))?;
    let kmax = (m.min(n) / 2).max(1);
    let mut best: Option<(usize, f64)> = None;
    for k in 1..f.s.len().min(kmax + 1) {
        if f.s[k - 1] == 0.0 {
            break;
        }
        let ratio = f.s[k - 1] / f.s[k];
        if best.is_none_or(|(_, r)| ratio > r) {
            best = Some((k, ratio));
        }
    }
    let k = match (best, f.s.first()) {
        (Some((k, _)), _) => k,
        (None, Some(&s0)) if s0 > 0.0 => 1,
        _ => return Ok(zeros),
    };
    let x0 = ThinSvd {
        u: f.u.columns(0, k).into_owned(),
        s: f.s[..k].to_vec(),
        v_t: f.v_t.rows(0, k).into_owned(),
    }
    .reconstruct();
    let kappa2 = problem.spec.caps.kappa2;
    let y0 = (&problem.pb - project(&x0, &problem.w)).map(|v| if v.abs() > kappa2 { v } else { 0.0 });
    Ok((x0, y0))
}

/// Runs UBAMA from the given starting point.
pub fn ubama_rpca_solve(
    spec: &RpcaSpec,
    start: RpcaStart,
    eps: f64,
    maxit: usize,
) -> Result<SolveResult<DMatrix<f64>, DMatrix<f64>>> {
    let problem = RpcaProblem::new(spec.clone())?;
    let (psi, phi) = problem.kernels()?;
    let config = SolverConfig::constant(psi, phi, eps, maxit);
    let (x0, y0) = initial_point(&problem, start)?;
    run(&problem, &config, x0, y0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RpcaMetrics {
    pub rel_x: f64,
    pub rel_y: f64,
    pub rank: usize,
    pub nnz: usize,
    pub obj: f64,
}

/// Numerical rank: singular values above `1e-8 sigma_max`.
pub fn numerical_rank(x: &DMatrix<f64>) -> Result<usize> {
    let s = singular_values(x)?;
    let top = s.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return Ok(0);
    }
    Ok(s.iter().filter(|&&v| v > 1e-8 * top).count())
}

/// Entries with magnitude above `1e-8`.
pub fn count_nonzeros(y: &DMatrix<f64>) -> usize {
    y.iter().filter(|v| v.abs() > 1e-8).count()
}

/// Errors against the ground truth plus rank, sparsity and objective.
pub fn rpca_metrics(
    problem: &RpcaProblem,
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    instance: &SyntheticRpcaInstance,
) -> Result<RpcaMetrics> {
    Ok(RpcaMetrics {
        rel_x: relative_error(x.as_slice(), instance.x_star.as_slice())?,
        rel_y: relative_error(y.as_slice(), instance.y_star.as_slice())?,
        rank: numerical_rank(x)?,
        nnz: count_nonzeros(y),
        obj: crate::solver::evaluate_phi(problem, x, y)?,
    })
}

/// Fit on the observed entries, `|P(X + Y - A)| / |P(A)|`, for data without
/// a low-rank/sparse ground truth.
pub fn observed_fit_error(
    x: &DMatrix<f64>,
    y: &DMatrix<f64>,
    reference: &DMatrix<f64>,
    mask: &SamplingMask,
) -> Result<f64> {
    let w = mask_matrix(mask, reference.nrows(), reference.ncols())?;
    let fit = project(&(x + y), &w);
    relative_error(fit.as_slice(), project(reference, &w).as_slice())
}
