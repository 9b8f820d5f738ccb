//! Weighted anisotropic-minus-isotropic TV reconstruction,
//!
//! ```text
//! min_{x, y}  1/2 |S K x - b|^2 + tau |y|_1 - tau alpha |y|_{2,1} + beta/2 |D x - y|^2
//! ```
//!
//! with `S` a sampling mask, `K` a periodic blur (or the identity) and `D`
//! periodic forward differences. [`TvProblem::ubama`] solves the x-block with
//! the FFT by choosing the kernel `mu K^T K - K^T S^T S K`;
//! [`TvProblem::palm`] is the linearized baseline whose x-block is solved by
//! preconditioned conjugate gradients.

mod data;
mod pcg;

use std::sync::Arc;

use num_complex::Complex64;

pub use data::{phantom, TvInstance};
pub use pcg::{pcg, pcg_with, PcgOutcome};

use crate::error::{Error, Result};
use crate::linops::{
    diff_adjoint, diff_forward, BlurKernel, CircularConv, GradField, ImageGrid, SamplingMask,
    TvSystem,
};
use crate::metrics::snr;
use crate::prox::{group_l21_norm, l1_norm, shrink_in_place, subgrad_iso_tv, BregmanKernel};
use crate::prox::LinearOperator;
use crate::solver::{run_with_monitor, Block, DcProblem, SolveResult, SolverConfig};

/// PCG iteration cap inside one PALM x-step.
pub const PALM_PCG_MAXIT: usize = 1000;

/// Model weights `(tau, beta, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TvWeights {
    pub tau: f64,
    pub beta: f64,
    pub alpha: f64,
}

/// Default weights: `alpha = 0.1`; `(tau, beta) = (0.7 delta, 50 delta)` for
/// denoising/inpainting, `(4e-4, 2e-2)` for deblurring.
pub fn tv_defaults(delta: f64, deblur: bool) -> Result<TvWeights> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::invalid(format!("noise level must be nonnegative, got {delta}")));
    }
    if deblur {
        return Ok(TvWeights {
            tau: 4e-4,
            beta: 2e-2,
            alpha: 0.1,
        });
    }
    if delta == 0.0 {
        return Err(Error::invalid("zero noise level gives degenerate weights without blur"));
    }
    Ok(TvWeights {
        tau: 0.7 * delta,
        beta: 50.0 * delta,
        alpha: 0.1,
    })
}

#[derive(Debug, Clone)]
pub struct TvSpec {
    /// Observation, zero off the mask.
    pub b: ImageGrid,
    pub mask: SamplingMask,
    /// Blur; the delta kernel stands for `K = I`.
    pub kernel: BlurKernel,
    pub delta: f64,
    pub weights: TvWeights,
    /// x-kernel scale for the FFT step, `> 1`.
    pub mu: f64,
    /// y-proximal weight.
    pub nu: f64,
}

impl TvSpec {
    /// Spec with default weights, `mu = 1.01` and `nu = 0.1 beta`.
    pub fn with_defaults(
        b: ImageGrid,
        mask: SamplingMask,
        kernel: BlurKernel,
        delta: f64,
    ) -> Result<Self> {
        let weights = tv_defaults(delta, !kernel.is_delta())?;
        let spec = Self {
            b,
            mask,
            kernel,
            delta,
            weights,
            mu: 1.01,
            nu: 0.1 * weights.beta,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let TvWeights { tau, beta, alpha } = self.weights;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        if !(tau >= 0.0) || !(beta > 0.0) {
            return Err(Error::invalid(format!(
                "need tau >= 0 and beta > 0, got tau={tau}, beta={beta}"
            )));
        }
        if !(self.mu > 1.0) || !(self.nu > 0.0) {
            return Err(Error::invalid(format!(
                "need mu > 1 and nu > 0, got mu={}, nu={}",
                self.mu, self.nu
            )));
        }
        if self.mask.shape() != self.b.shape() {
            return Err(Error::invalid("mask and observation shapes differ"));
        }
        Ok(())
    }

    /// PALM constants `(c, nu)`: `c = 1.01 (|SK|^2 + 8 beta)` using
    /// `|D^T D| <= 8` and `|SK| <= max |K_hat|`; `nu = d - beta` with
    /// `d = 1.01 beta`.
    pub fn palm_constants(&self) -> Result<(f64, f64)> {
        let op = BlurOp::new(&self.kernel, &self.mask)?;
        let sk2 = if self.mask.count() == 0 { 0.0 } else { op.max_gain_sq() };
        let beta = self.weights.beta;
        Ok((1.01 * (sk2 + 8.0 * beta), 0.01 * beta))
    }
}

/// `x -> K x` and friends on one grid, shared with kernel closures.
#[derive(Debug, Clone)]
struct BlurOp {
    conv: CircularConv,
    /// `None` for the identity.
    spectrum: Option<Arc<Vec<Complex64>>>,
    mask: SamplingMask,
}

impl BlurOp {
    fn new(kernel: &BlurKernel, mask: &SamplingMask) -> Result<Self> {
        let (h, w) = mask.shape();
        let conv = CircularConv::new(h, w);
        let spectrum = if kernel.is_delta() {
            None
        } else {
            Some(Arc::new(conv.kernel_spectrum(kernel)?))
        };
        Ok(Self {
            conv,
            spectrum,
            mask: mask.clone(),
        })
    }

    fn blur(&self, x: &ImageGrid) -> ImageGrid {
        match &self.spectrum {
            Some(s) => self.conv.apply_spectrum(x, s),
            None => x.clone(),
        }
    }

    fn blur_t(&self, r: &ImageGrid) -> ImageGrid {
        match &self.spectrum {
            Some(s) => self.conv.adjoint_spectrum(r, s),
            None => r.clone(),
        }
    }

    /// `K^T S^T S K x`.
    fn normal(&self, x: &ImageGrid) -> ImageGrid {
        let mut kx = self.blur(x);
        self.mask.apply_in_place(kx.as_mut_slice());
        self.blur_t(&kx)
    }

    /// `K^T K x`.
    fn gram(&self, x: &ImageGrid) -> ImageGrid {
        self.blur_t(&self.blur(x))
    }

    fn min_gain_sq(&self) -> f64 {
        self.spectrum
            .as_ref()
            .map_or(1.0, |s| s.iter().map(|z| z.norm_sqr()).fold(f64::INFINITY, f64::min))
    }

    fn max_gain_sq(&self) -> f64 {
        self.spectrum
            .as_ref()
            .map_or(1.0, |s| s.iter().map(|z| z.norm_sqr()).fold(0.0, f64::max))
    }
}

#[derive(Debug, Clone)]
enum XSolver {
    Fft { system: TvSystem, mu: f64 },
    Pcg { c: f64, tol: f64, inv_diag: Vec<f64> },
}

/// The TV model as a two-block DC problem, `x` the image and `y` the
/// gradient field.
#[derive(Debug, Clone)]
pub struct TvProblem {
    spec: TvSpec,
    op: BlurOp,
    /// `K^T S^T b`.
    data_rhs: ImageGrid,
    x_solver: XSolver,
    nu: f64,
}

impl TvProblem {
    /// FFT x-step with kernel `mu K^T K - K^T S^T S K`, y-weight `spec.nu`.
    pub fn ubama(spec: TvSpec) -> Result<Self> {
        spec.validate()?;
        let (h, w) = spec.b.shape();
        let system = TvSystem::new(h, w, spec.weights.beta, spec.mu, &spec.kernel)?;
        let x_solver = XSolver::Fft {
            system,
            mu: spec.mu,
        };
        let nu = spec.nu;
        Self::build(spec, x_solver, nu)
    }

    /// Linearized baseline: x-kernel `c I - beta D^T D`, x-step by PCG to
    /// relative residual `pcg_tol`, y-weight `0.01 beta`.
    pub fn palm(spec: TvSpec, pcg_tol: f64) -> Result<Self> {
        spec.validate()?;
        if !(pcg_tol > 0.0) {
            return Err(Error::invalid(format!("pcg tolerance must be positive, got {pcg_tol}")));
        }
        let (c, nu) = spec.palm_constants()?;
        let inv_diag = normal_diagonal(&spec.kernel, &spec.mask)
            .into_iter()
            .map(|d| 1.0 / (d + c))
            .collect();
        Self::build(
            spec,
            XSolver::Pcg {
                c,
                tol: pcg_tol,
                inv_diag,
            },
            nu,
        )
    }

    fn build(spec: TvSpec, x_solver: XSolver, nu: f64) -> Result<Self> {
        let op = BlurOp::new(&spec.kernel, &spec.mask)?;
        let mut sb = spec.b.clone();
        spec.mask.apply_in_place(sb.as_mut_slice());
        let data_rhs = op.blur_t(&sb);
        Ok(Self {
            spec,
            op,
            data_rhs,
            x_solver,
            nu,
        })
    }

    pub fn spec(&self) -> &TvSpec {
        &self.spec
    }

    pub fn is_palm(&self) -> bool {
        matches!(self.x_solver, XSolver::Pcg { .. })
    }

    /// The `(psi, phi)` kernels that `solve_x` / `solve_y` assume.
    pub fn kernels(&self) -> Result<(BregmanKernel, BregmanKernel)> {
        let n = self.spec.b.len();
        let (h, w) = self.spec.b.shape();
        let psi = match &self.x_solver {
            XSolver::Fft { mu, .. } => {
                let op = self.op.clone();
                let mu = *mu;
                let modulus = (mu - 1.0) * op.min_gain_sq();
                if !(modulus > 0.0) {
                    return Err(Error::IllPosed {
                        min_eigenvalue: modulus,
                    });
                }
                let m = LinearOperator::new(n, move |d| {
                    let x = ImageGrid::new(h, w, d.to_vec()).expect("finite direction");
                    let g = op.gram(&x);
                    let s = op.normal(&x);
                    g.as_slice().iter().zip(s.as_slice()).map(|(a, b)| mu * a - b).collect()
                });
                BregmanKernel::operator(m, modulus)?
            }
            XSolver::Pcg { c, .. } => {
                let (c, beta) = (*c, self.spec.weights.beta);
                let m = LinearOperator::new(n, move |d| {
                    let x = ImageGrid::new(h, w, d.to_vec()).expect("finite direction");
                    let dtd = diff_adjoint(&diff_forward(&x));
                    d.iter().zip(dtd.as_slice()).map(|(a, b)| c * a - beta * b).collect()
                });
                BregmanKernel::operator(m, c - 8.0 * beta)?
            }
        };
        Ok((psi, BregmanKernel::quadratic(self.nu)?))
    }

    /// Residual `D x - y`.
    fn coupling_residual(&self, x: &ImageGrid, y: &GradField) -> GradField {
        let mut r = diff_forward(x);
        r.axpy(-1.0, y);
        r
    }

    /// `grad_x h+ = beta D^T (D x - y)`.
    pub fn coupling_grad_x(&self, x: &ImageGrid, y: &GradField) -> ImageGrid {
        let mut g = diff_adjoint(&self.coupling_residual(x, y));
        g.as_mut_slice().iter_mut().for_each(|v| *v *= self.spec.weights.beta);
        g
    }

    /// `grad_y h+ = -beta (D x - y)`.
    pub fn coupling_grad_y(&self, x: &ImageGrid, y: &GradField) -> GradField {
        let mut g = self.coupling_residual(x, y);
        g.as_mut_slice().iter_mut().for_each(|v| *v *= -self.spec.weights.beta);
        g
    }

    /// FFT x-step with linear tilt `u` (zero in the model itself).
    pub fn x_step_fft(&self, x_k: &ImageGrid, y_k: &GradField, u: &ImageGrid) -> Result<ImageGrid> {
        let XSolver::Fft { system, mu } = &self.x_solver else {
            return Err(Error::invalid("FFT x-step requested on a PALM problem"));
        };
        let beta = self.spec.weights.beta;
        let dty = diff_adjoint(y_k);
        let gram = self.op.gram(x_k);
        let normal = self.op.normal(x_k);
        let rhs: Vec<f64> = (0..x_k.len())
            .map(|i| {
                self.data_rhs.as_slice()[i] + beta * dty.as_slice()[i] + mu * gram.as_slice()[i]
                    - normal.as_slice()[i]
                    + u.as_slice()[i]
            })
            .collect();
        system.solve(&x_k.with_data(rhs))
    }

    /// PALM x-step: `(K^T S^T S K + c I) x = K^T S^T b + c x_k - beta D^T (D x_k - y_k) + u`
    /// by Jacobi-preconditioned CG warm-started at `x_k`.
    pub fn x_step_pcg(&self, x_k: &ImageGrid, y_k: &GradField, u: &ImageGrid) -> Result<ImageGrid> {
        let XSolver::Pcg { c, tol, inv_diag } = &self.x_solver else {
            return Err(Error::invalid("PCG x-step requested on an FFT problem"));
        };
        let c = *c;
        let grad = self.coupling_grad_x(x_k, y_k);
        let rhs: Vec<f64> = (0..x_k.len())
            .map(|i| {
                self.data_rhs.as_slice()[i] + c * x_k.as_slice()[i] - grad.as_slice()[i]
                    + u.as_slice()[i]
            })
            .collect();
        let out = pcg_with(
            |v| {
                let x = x_k.with_data(v.to_vec());
                let n = self.op.normal(&x);
                n.as_slice().iter().zip(v).map(|(a, b)| a + c * b).collect()
            },
            &rhs,
            Some(x_k.as_slice()),
            Some(inv_diag),
            *tol,
            PALM_PCG_MAXIT,
        )?;
        if !out.converged {
            return Err(Error::InnerSolver {
                solver: "pcg",
                iterations: out.iterations,
                residual: out.rel_residual,
            });
        }
        Ok(x_k.with_data(out.x))
    }

    /// y-step with tilt `v` and proximal weight `nu`.
    pub fn y_step(&self, x_next: &ImageGrid, y_k: &GradField, v: &GradField, nu: f64) -> Result<GradField> {
        y_update(&self.spec.weights, x_next, y_k, v, nu)
    }
}

/// `shrink((beta D x + nu y_k + v) / (beta + nu), tau / (beta + nu))`.
fn y_update(
    weights: &TvWeights,
    x_next: &ImageGrid,
    y_k: &GradField,
    v: &GradField,
    nu: f64,
) -> Result<GradField> {
    let TvWeights { tau, beta, .. } = *weights;
    let dx = diff_forward(x_next);
    let s = beta + nu;
    let mut out = y_k.clone();
    for (i, o) in out.as_mut_slice().iter_mut().enumerate() {
        *o = (beta * dx.as_slice()[i] + nu * y_k.as_slice()[i] + v.as_slice()[i]) / s;
    }
    shrink_in_place(out.as_mut_slice(), tau / s)?;
    Ok(out)
}

/// Diagonal of `K^T S^T S K`: `sum_taps S[p + shift] k[shift]^2`.
fn normal_diagonal(kernel: &BlurKernel, mask: &SamplingMask) -> Vec<f64> {
    let (h, w) = mask.shape();
    let obs = mask.observed();
    let (rh, rw) = ((kernel.height() / 2) as isize, (kernel.width() / 2) as isize);
    let mut out = vec![0.0; h * w];
    for i in 0..h {
        for j in 0..w {
            let mut acc = 0.0;
            for s in -rh..=rh {
                for t in -rw..=rw {
                    let q = (i as isize + s).rem_euclid(h as isize) as usize * w
                        + (j as isize + t).rem_euclid(w as isize) as usize;
                    if obs[q] {
                        acc += kernel.tap(s, t).powi(2);
                    }
                }
            }
            out[i * w + j] = acc;
        }
    }
    out
}

impl DcProblem for TvProblem {
    type X = ImageGrid;
    type Y = GradField;

    fn f1(&self, x: &ImageGrid) -> f64 {
        let mut r = self.op.blur(x);
        self.spec.mask.apply_in_place(r.as_mut_slice());
        0.5 * r.dist(&masked(&self.spec.b, &self.spec.mask)).powi(2)
    }

    fn g1(&self, _x: &ImageGrid) -> Result<f64> {
        Ok(0.0)
    }

    fn f2(&self, y: &GradField) -> f64 {
        self.spec.weights.tau * l1_norm(y.as_slice())
    }

    fn g2(&self, y: &GradField) -> Result<f64> {
        Ok(self.spec.weights.tau * self.spec.weights.alpha * group_l21_norm(y))
    }

    fn h_plus(&self, x: &ImageGrid, y: &GradField) -> f64 {
        0.5 * self.spec.weights.beta * self.coupling_residual(x, y).norm().powi(2)
    }

    fn h_minus(&self, _x: &ImageGrid, _y: &GradField) -> f64 {
        0.0
    }

    fn grad_x_h_minus(&self, x: &ImageGrid, _y: &GradField) -> ImageGrid {
        x.zeros_like()
    }

    fn grad_y_h_minus(&self, _x: &ImageGrid, y: &GradField) -> GradField {
        y.zeros_like()
    }

    fn select_subgrad_g1(&self, x: &ImageGrid) -> Result<ImageGrid> {
        Ok(x.zeros_like())
    }

    fn select_subgrad_g2(&self, y: &GradField) -> Result<GradField> {
        let mut eta = subgrad_iso_tv(y);
        let s = self.spec.weights.tau * self.spec.weights.alpha;
        eta.as_mut_slice().iter_mut().for_each(|v| *v *= s);
        Ok(eta)
    }

    fn solve_x(
        &self,
        x_k: &ImageGrid,
        y_k: &GradField,
        tilt: &ImageGrid,
        _kernel: &BregmanKernel,
    ) -> Result<ImageGrid> {
        match self.x_solver {
            XSolver::Fft { .. } => self.x_step_fft(x_k, y_k, tilt),
            XSolver::Pcg { .. } => self.x_step_pcg(x_k, y_k, tilt),
        }
    }

    fn solve_y(
        &self,
        x_next: &ImageGrid,
        y_k: &GradField,
        tilt: &GradField,
        kernel: &BregmanKernel,
    ) -> Result<GradField> {
        let BregmanKernel::Quadratic { weight } = kernel else {
            return Err(Error::invalid("TV y-step needs a quadratic kernel"));
        };
        self.y_step(x_next, y_k, tilt, *weight)
    }
}

fn masked(b: &ImageGrid, mask: &SamplingMask) -> ImageGrid {
    let mut out = b.clone();
    mask.apply_in_place(out.as_mut_slice());
    out
}

/// One UBAMA x-step with default tilt (the model has `g1 = 0`, `h- = 0`).
pub fn ubama_tv_x_step(spec: &TvSpec, x_k: &ImageGrid, y_k: &GradField) -> Result<ImageGrid> {
    TvProblem::ubama(spec.clone())?.x_step_fft(x_k, y_k, &x_k.zeros_like())
}

/// One UBAMA y-step given the selected `eta` in the subdifferential of the
/// unweighted `|.|_{2,1}` at `y_k`.
pub fn ubama_tv_y_step(
    spec: &TvSpec,
    x_next: &ImageGrid,
    y_k: &GradField,
    eta: &GradField,
) -> Result<GradField> {
    let s = spec.weights.tau * spec.weights.alpha;
    let mut v = eta.clone();
    v.as_mut_slice().iter_mut().for_each(|e| *e *= s);
    spec.validate()?;
    y_update(&spec.weights, x_next, y_k, &v, spec.nu)
}

/// One PALM x-step with proximal constant `c`.
pub fn palm_tv_x_step(
    spec: &TvSpec,
    x_k: &ImageGrid,
    y_k: &GradField,
    c: f64,
    pcg_tol: f64,
) -> Result<ImageGrid> {
    if !(c > 0.0) {
        return Err(Error::invalid(format!("proximal constant must be positive, got {c}")));
    }
    let mut p = TvProblem::palm(spec.clone(), pcg_tol)?;
    let inv_diag = normal_diagonal(&spec.kernel, &spec.mask)
        .into_iter()
        .map(|d| 1.0 / (d + c))
        .collect();
    p.x_solver = XSolver::Pcg {
        c,
        tol: pcg_tol,
        inv_diag,
    };
    p.x_step_pcg(x_k, y_k, &x_k.zeros_like())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TvMethod {
    Ubama,
    /// Linearized baseline with the inner CG tolerance.
    Palm { pcg_tol: f64 },
}

impl TvMethod {
    pub fn label(&self) -> String {
        match self {
            TvMethod::Ubama => "ubama".into(),
            TvMethod::Palm { pcg_tol } => format!("palm({pcg_tol:e})"),
        }
    }
}

/// Starting point: `x0 = b`, `y0 = D x0`.
pub fn tv_initial_point(spec: &TvSpec) -> (ImageGrid, GradField) {
    let x0 = spec.b.clone();
    let y0 = diff_forward(&x0);
    (x0, y0)
}

/// Runs the chosen method to relative change `eps` or `maxit` steps. With a
/// ground truth, each record carries the SNR of the current image.
pub fn tv_solve(
    spec: &TvSpec,
    method: TvMethod,
    eps: f64,
    maxit: usize,
    truth: Option<&ImageGrid>,
) -> Result<SolveResult<ImageGrid, GradField>> {
    let problem = match method {
        TvMethod::Ubama => TvProblem::ubama(spec.clone())?,
        TvMethod::Palm { pcg_tol } => TvProblem::palm(spec.clone(), pcg_tol)?,
    };
    let (psi, phi) = problem.kernels()?;
    let config = SolverConfig::constant(psi, phi, eps, maxit);
    let (x0, y0) = tv_initial_point(spec);
    run_with_monitor(&problem, &config, x0, y0, |x, _| {
        truth.and_then(|t| snr(t, x).ok())
    })
}

#[cfg(test)]
mod tests;
