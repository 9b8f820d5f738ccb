//! Blind deconvolution with a robust gradient prior,
//!
//! ```text
//! min_{x in [0,1]^m, y in simplex}  sum_p phi(grad_p x; tau) + lambda/2 |x * y - b|^2
//! ```
//!
//! written as `f1 + f2 - h-` with `f1`, `f2` the indicators of the box and
//! the simplex and `h-` minus the smooth part. Both blocks take a linearized
//! step: a box projection for `x`, and either a simplex projection
//! ([`KernelMode::Euclidean`]) or a multiplicative entropy update
//! ([`KernelMode::Entropy`]) for `y`. The step scalars come from
//! [`backtrack_step`].

mod data;

pub use data::BidInstance;

use std::time::Instant;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linops::{directional_adjoint_all, directional_grads, BlurKernel, CircularConv, ImageGrid};
use crate::metrics::snr;
use crate::prox::{proj_box, proj_simplex, BregmanKernel};
use crate::solver::{
    descent_audit, evaluate_phi, relative_change, Block, DcProblem, IterationRecord, SolveResult,
    Status, Trace,
};

pub const BID_LAMBDA: f64 = 5e5;
pub const BID_TAU: f64 = 1e4;
pub const BID_MAXIT: usize = 2000;

/// Absolute slack of the no-increase test.
pub const NO_INCREASE_TOL: f64 = 1e-12;

/// Simplex membership tolerance on the kernel sum.
pub const SIMPLEX_TOL: f64 = 1e-10;

/// `sum_i log(1 + tau x_i^2)`.
pub fn phi_robust(x: &[f64], tau: f64) -> f64 {
    x.iter().map(|v| (tau * v * v).ln_1p()).sum()
}

/// `2 tau x_i / (1 + tau x_i^2)`.
pub fn phi_robust_grad(x: &[f64], tau: f64) -> Vec<f64> {
    x.iter().map(|v| 2.0 * tau * v / (1.0 + tau * v * v)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum KernelMode {
    /// Quadratic proximal term, simplex projection.
    #[default]
    Euclidean,
    /// Entropy proximal term, multiplicative update.
    Entropy,
}

impl KernelMode {
    pub fn label(&self) -> &'static str {
        match self {
            KernelMode::Euclidean => "euclidean",
            KernelMode::Entropy => "entropy",
        }
    }
}

/// Acceptance test of a backtracking candidate `z+` from `z` with scalar `c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AcceptRule {
    /// `Phi(z+) <= Phi(z) + 1e-12`.
    NoIncrease,
    /// No increase, and the linearization of `-h-` plus the Bregman term
    /// majorizes `Phi` at `z+`:
    /// `Phi(z+) <= Phi(z) - <grad h-(z), z+ - z> + D(z+, z)`.
    #[default]
    Majorization,
}

/// Scalar search controls. Each search starts at `shrink` times the last
/// accepted scalar and multiplies by `grow` until acceptance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Backtracking {
    pub grow: f64,
    pub shrink: f64,
    pub max_doublings: usize,
    pub rule: AcceptRule,
}

impl Default for Backtracking {
    fn default() -> Self {
        Self {
            grow: 2.0,
            shrink: 0.5,
            max_doublings: 60,
            rule: AcceptRule::default(),
        }
    }
}

impl Backtracking {
    pub fn validate(&self) -> Result<()> {
        if !(self.grow > 1.0) || !(self.shrink > 0.0 && self.shrink <= 1.0) {
            return Err(Error::invalid(format!(
                "need grow > 1 and shrink in (0, 1], got grow={}, shrink={}",
                self.grow, self.shrink
            )));
        }
        Ok(())
    }
}

/// An accepted candidate and the number of growth steps it took.
#[derive(Debug, Clone)]
pub struct Accepted<T> {
    pub scalar: f64,
    pub value: T,
    pub doublings: usize,
}

/// Tries `candidate(s)` for `s = shrink * prev, grow * s, ...` until
/// `accept(s, &candidate)` holds, at most `max_doublings` growth steps.
/// `iteration` labels the failure.
pub fn backtrack_step<T>(
    prev: f64,
    factors: &Backtracking,
    iteration: usize,
    mut candidate: impl FnMut(f64) -> Result<T>,
    mut accept: impl FnMut(f64, &T) -> Result<bool>,
) -> Result<Accepted<T>> {
    factors.validate()?;
    if !(prev > 0.0) || !prev.is_finite() {
        return Err(Error::invalid(format!("step scalar must be positive, got {prev}")));
    }
    let mut s = prev * factors.shrink;
    for doublings in 0..=factors.max_doublings {
        let value = candidate(s)?;
        if accept(s, &value)? {
            return Ok(Accepted {
                scalar: s,
                value,
                doublings,
            });
        }
        s *= factors.grow;
    }
    Err(Error::LineSearch {
        iteration,
        doublings: factors.max_doublings,
    })
}

#[derive(Debug, Clone)]
pub struct BidSpec {
    pub b: ImageGrid,
    /// Odd kernel height and width.
    pub kernel_shape: (usize, usize),
    pub lambda: f64,
    pub tau: f64,
    pub mode: KernelMode,
    pub backtracking: Backtracking,
    /// Scalars the first searches start from (halved before the first try).
    pub c0: f64,
    pub d0: f64,
}

impl BidSpec {
    pub fn with_defaults(b: ImageGrid, kernel_shape: (usize, usize), mode: KernelMode) -> Self {
        Self {
            b,
            kernel_shape,
            lambda: BID_LAMBDA,
            tau: BID_TAU,
            mode,
            backtracking: Backtracking::default(),
            c0: 1.0,
            d0: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) || !(self.tau > 0.0) {
            return Err(Error::invalid(format!(
                "need lambda > 0 and tau > 0, got lambda={}, tau={}",
                self.lambda, self.tau
            )));
        }
        let (kh, kw) = self.kernel_shape;
        if kh % 2 == 0 || kw % 2 == 0 {
            return Err(Error::invalid(format!("kernel dimensions must be odd, got {kh}x{kw}")));
        }
        if kh > self.b.height() || kw > self.b.width() {
            return Err(Error::invalid("kernel larger than the image"));
        }
        if !(self.c0 > 0.0) || !(self.d0 > 0.0) {
            return Err(Error::invalid("initial step scalars must be positive"));
        }
        self.backtracking.validate()
    }
}

#[derive(Debug, Clone)]
pub struct BidProblem {
    spec: BidSpec,
    conv: CircularConv,
}

impl BidProblem {
    pub fn new(spec: BidSpec) -> Result<Self> {
        spec.validate()?;
        let conv = CircularConv::new(spec.b.height(), spec.b.width());
        Ok(Self { spec, conv })
    }

    pub fn spec(&self) -> &BidSpec {
        &self.spec
    }

    fn check_shapes(&self, x: &ImageGrid, y: &BlurKernel) {
        assert_eq!(x.shape(), self.spec.b.shape(), "image shape");
        assert_eq!((y.height(), y.width()), self.spec.kernel_shape, "kernel shape");
    }

    /// `K(y) x - b` and the kernel spectrum it used.
    fn residual(&self, x: &ImageGrid, y: &BlurKernel) -> (ImageGrid, Vec<Complex64>) {
        self.check_shapes(x, y);
        let spec = self.conv.kernel_spectrum(y).expect("kernel shape checked");
        let mut r = self.conv.apply_spectrum(x, &spec);
        for (v, b) in r.as_mut_slice().iter_mut().zip(self.spec.b.as_slice()) {
            *v -= b;
        }
        (r, spec)
    }

    /// `sum_p phi(grad_p x; tau)`.
    pub fn prior(&self, x: &ImageGrid) -> f64 {
        directional_grads(x)
            .iter()
            .map(|g| phi_robust(g.as_slice(), self.spec.tau))
            .sum()
    }

    /// `lambda/2 |K(y) x - b|^2`.
    pub fn data_term(&self, x: &ImageGrid, y: &BlurKernel) -> f64 {
        0.5 * self.spec.lambda * self.residual(x, y).0.norm().powi(2)
    }

    pub fn in_box(x: &ImageGrid) -> bool {
        x.as_slice().iter().all(|v| (0.0..=1.0).contains(v))
    }

    pub fn on_simplex(y: &BlurKernel) -> bool {
        let w = y.weights();
        w.iter().all(|&v| v >= 0.0) && (w.iter().sum::<f64>() - 1.0).abs() <= SIMPLEX_TOL
    }

    /// `grad_x h- = -sum_p grad_p^T phi'(grad_p x) - lambda K(y)^T (K(y) x - b)`.
    pub fn grad_x(&self, x: &ImageGrid, y: &BlurKernel) -> ImageGrid {
        let (r, spec) = self.residual(x, y);
        let grads = directional_grads(x);
        let weighted: [ImageGrid; 8] =
            std::array::from_fn(|p| grads[p].with_data(phi_robust_grad(grads[p].as_slice(), self.spec.tau)));
        let mut g = directional_adjoint_all(&weighted);
        let data = self.conv.adjoint_spectrum(&r, &spec);
        for (gv, dv) in g.as_mut_slice().iter_mut().zip(data.as_slice()) {
            *gv = -*gv - self.spec.lambda * dv;
        }
        g
    }

    /// `grad_y h- = -lambda K(x)^T (K(x) y - b)`.
    pub fn grad_y(&self, x: &ImageGrid, y: &BlurKernel) -> BlurKernel {
        let (r, _) = self.residual(x, y);
        let (kh, kw) = self.spec.kernel_shape;
        let mut g = self.conv.adjoint_kernel(&r, x, kh, kw).expect("shapes checked");
        g.weights_mut().iter_mut().for_each(|v| *v *= -self.spec.lambda);
        g
    }
}

impl DcProblem for BidProblem {
    type X = ImageGrid;
    type Y = BlurKernel;

    fn f1(&self, x: &ImageGrid) -> f64 {
        if Self::in_box(x) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn g1(&self, _x: &ImageGrid) -> Result<f64> {
        Ok(0.0)
    }

    fn f2(&self, y: &BlurKernel) -> f64 {
        if Self::on_simplex(y) {
            0.0
        } else {
            f64::INFINITY
        }
    }

    fn g2(&self, _y: &BlurKernel) -> Result<f64> {
        Ok(0.0)
    }

    fn h_plus(&self, _x: &ImageGrid, _y: &BlurKernel) -> f64 {
        0.0
    }

    fn h_minus(&self, x: &ImageGrid, y: &BlurKernel) -> f64 {
        -self.prior(x) - self.data_term(x, y)
    }

    fn grad_x_h_minus(&self, x: &ImageGrid, y: &BlurKernel) -> ImageGrid {
        self.grad_x(x, y)
    }

    fn grad_y_h_minus(&self, x: &ImageGrid, y: &BlurKernel) -> BlurKernel {
        self.grad_y(x, y)
    }

    fn select_subgrad_g1(&self, x: &ImageGrid) -> Result<ImageGrid> {
        Ok(x.zeros_like())
    }

    fn select_subgrad_g2(&self, y: &BlurKernel) -> Result<BlurKernel> {
        Ok(y.zeros_like())
    }

    fn solve_x(
        &self,
        x_k: &ImageGrid,
        _y_k: &BlurKernel,
        tilt: &ImageGrid,
        kernel: &BregmanKernel,
    ) -> Result<ImageGrid> {
        match kernel {
            BregmanKernel::Quadratic { weight } => Ok(box_step(x_k, tilt, *weight)),
            _ => Err(Error::invalid("the image block takes a quadratic kernel")),
        }
    }

    fn solve_y(
        &self,
        _x_next: &ImageGrid,
        y_k: &BlurKernel,
        tilt: &BlurKernel,
        kernel: &BregmanKernel,
    ) -> Result<BlurKernel> {
        match kernel {
            BregmanKernel::Quadratic { weight } => simplex_step(y_k, tilt, *weight),
            BregmanKernel::Entropy { weight } => entropy_step(y_k, tilt, *weight),
            _ => Err(Error::invalid("the kernel block takes a quadratic or entropy kernel")),
        }
    }
}

fn box_step(x_k: &ImageGrid, grad: &ImageGrid, c: f64) -> ImageGrid {
    let v: Vec<f64> = x_k
        .as_slice()
        .iter()
        .zip(grad.as_slice())
        .map(|(x, g)| x + g / c)
        .collect();
    x_k.with_data(proj_box(&v, 0.0, 1.0).expect("ordered bounds"))
}

fn simplex_step(y_k: &BlurKernel, grad: &BlurKernel, d: f64) -> Result<BlurKernel> {
    let v: Vec<f64> = y_k
        .weights()
        .iter()
        .zip(grad.weights())
        .map(|(y, g)| y + g / d)
        .collect();
    Ok(y_k.with_weights(proj_simplex(&v)?))
}

// Minimizer of -<y - y_k, grad> + d KL(y, y_k) over the simplex.
fn entropy_step(y_k: &BlurKernel, grad: &BlurKernel, d: f64) -> Result<BlurKernel> {
    entropy_candidate(y_k, grad, d)?
        .ok_or_else(|| Error::Domain("entropy update underflowed to 0".into()))
}

// `None` when some weight underflows; backtracking then grows `d`.
fn entropy_candidate(y_k: &BlurKernel, grad: &BlurKernel, d: f64) -> Result<Option<BlurKernel>> {
    if let Some(v) = y_k.weights().iter().find(|v| !(**v > 0.0)) {
        return Err(Error::Domain(format!(
            "entropy update needs a strictly positive kernel, found {v}"
        )));
    }
    let e: Vec<f64> = grad.weights().iter().map(|g| g / d).collect();
    let top = e.iter().fold(f64::NEG_INFINITY, |m, v| m.max(*v));
    let mut w: Vec<f64> = y_k
        .weights()
        .iter()
        .zip(&e)
        .map(|(y, e)| y * (e - top).exp())
        .collect();
    let s: f64 = w.iter().sum();
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::Numeric(format!("entropy update normalizer is {s}")));
    }
    w.iter_mut().for_each(|v| *v /= s);
    if w.iter().any(|v| !(*v > 0.0)) {
        return Ok(None);
    }
    Ok(Some(y_k.with_weights(w)))
}

/// `proj_box(x_k + grad_x h-(x_k, y_k) / c)`.
pub fn bid_x_update(problem: &BidProblem, x_k: &ImageGrid, y_k: &BlurKernel, c: f64) -> Result<ImageGrid> {
    check_scalar(c)?;
    Ok(box_step(x_k, &problem.grad_x(x_k, y_k), c))
}

/// `proj_simplex(y_k + grad_y h-(x_next, y_k) / d)`.
pub fn bid_y_update_euclidean(
    problem: &BidProblem,
    x_next: &ImageGrid,
    y_k: &BlurKernel,
    d: f64,
) -> Result<BlurKernel> {
    check_scalar(d)?;
    simplex_step(y_k, &problem.grad_y(x_next, y_k), d)
}

/// `y_k . exp(s / d) / sum_j y_k[j] exp(s[j] / d)` with `s = grad_y h-(x_next, y_k)`,
/// exponents shifted by their maximum.
pub fn bid_y_update_entropy(
    problem: &BidProblem,
    x_next: &ImageGrid,
    y_k: &BlurKernel,
    d: f64,
) -> Result<BlurKernel> {
    check_scalar(d)?;
    entropy_step(y_k, &problem.grad_y(x_next, y_k), d)
}

fn check_scalar(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!("step scalar must be positive, got {s}")))
    }
}

/// Outcome of [`bid_solve`]: the run plus the accepted step scalars.
#[derive(Debug, Clone)]
pub struct BidRun {
    pub solve: SolveResult<ImageGrid, BlurKernel>,
    /// `(c_k, d_k)` per iteration; `d_k` is NaN when the kernel is fixed.
    pub steps: Vec<(f64, f64)>,
}

/// Called with `(k, x^k, y^k)` after every accepted iteration.
pub type BidObserver<'a> = &'a dyn Fn(usize, &ImageGrid, &BlurKernel);

/// Options of [`bid_solve`].
#[derive(Clone, Default)]
pub struct BidOptions<'a> {
    /// Stop once the relative change drops to `eps`; `0` runs to the cap.
    pub eps: f64,
    pub maxit: usize,
    /// Ground truth for the SNR column.
    pub truth: Option<&'a ImageGrid>,
    /// Keep the kernel fixed at this value (non-blind deconvolution).
    pub fixed_kernel: Option<BlurKernel>,
    pub observer: Option<BidObserver<'a>>,
}

impl std::fmt::Debug for BidOptions<'_> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BidOptions")
            .field("eps", &self.eps)
            .field("maxit", &self.maxit)
            .field("truth", &self.truth.map(ImageGrid::shape))
            .field("fixed_kernel", &self.fixed_kernel)
            .field("observer", &self.observer.is_some())
            .finish()
    }
}

/// `x0 = clamp(b)`, `y0` = average filter.
pub fn bid_initial_point(spec: &BidSpec) -> Result<(ImageGrid, BlurKernel)> {
    let x0 = spec.b.map(|v| v.clamp(0.0, 1.0));
    let (kh, kw) = spec.kernel_shape;
    Ok((x0, BlurKernel::uniform(kh, kw)?))
}

fn accepts<T: Block>(
    rule: AcceptRule,
    phi_old: f64,
    phi_new: f64,
    old: &T,
    new: &T,
    grad: &T,
    kernel: &BregmanKernel,
) -> Result<bool> {
    if !(phi_new <= phi_old + NO_INCREASE_TOL) {
        return Ok(false);
    }
    match rule {
        AcceptRule::NoIncrease => Ok(true),
        AcceptRule::Majorization => {
            let mut step = new.clone();
            step.axpy(-1.0, old);
            let bound = phi_old - grad.dot(&step) + kernel.distance(new.as_slice(), old.as_slice())?;
            Ok(phi_new <= bound + NO_INCREASE_TOL * (1.0 + phi_old.abs()))
        }
    }
}

fn y_kernel(mode: KernelMode, d: f64) -> Result<BregmanKernel> {
    match mode {
        KernelMode::Euclidean => BregmanKernel::quadratic(d),
        KernelMode::Entropy => BregmanKernel::entropy(d),
    }
}

/// Alternating linearized steps with backtracking on `c_k` and `d_k`, from
/// [`bid_initial_point`] (or the fixed kernel).
pub fn bid_solve(problem: &BidProblem, opts: &BidOptions<'_>) -> Result<BidRun> {
    if !(opts.eps >= 0.0) || opts.maxit == 0 {
        return Err(Error::invalid("need eps >= 0 and maxit > 0"));
    }
    let spec = problem.spec();
    let (mut x, mut y) = bid_initial_point(spec)?;
    if let Some(k) = &opts.fixed_kernel {
        if (k.height(), k.width()) != spec.kernel_shape || !BidProblem::on_simplex(k) {
            return Err(Error::invalid("fixed kernel must match the kernel shape and lie on the simplex"));
        }
        y = k.clone();
    }
    let bt = spec.backtracking;
    let mut phi = evaluate_phi(problem, &x, &y)?;
    let mut trace = Trace {
        initial_phi: phi,
        records: Vec::new(),
    };
    let (mut c, mut d) = (spec.c0, spec.d0);
    let mut steps = Vec::new();
    let mut status = Status::MaxIterations;

    for k in 1..=opts.maxit {
        let started = Instant::now();
        let gx = problem.grad_x(&x, &y);
        let acc = backtrack_step(
            c,
            &bt,
            k,
            |s| {
                let cand = box_step(&x, &gx, s);
                let val = evaluate_phi(problem, &cand, &y)?;
                Ok((cand, val))
            },
            |s, (cand, val)| accepts(bt.rule, phi, *val, &x, cand, &gx, &BregmanKernel::quadratic(s)?),
        )?;
        c = acc.scalar;
        let (x_next, phi_mid) = acc.value;

        let (y_next, phi_next, d_used) = if opts.fixed_kernel.is_some() {
            (y.clone(), phi_mid, f64::NAN)
        } else {
            let gy = problem.grad_y(&x_next, &y);
            let acc = backtrack_step(
                d,
                &bt,
                k,
                |s| {
                    // huge steps can leave the simplex by rounding; reject those too
                    let cand = match spec.mode {
                        KernelMode::Euclidean => Some(simplex_step(&y, &gy, s)?),
                        KernelMode::Entropy => entropy_candidate(&y, &gy, s)?,
                    }
                    .filter(BidProblem::on_simplex);
                    cand.map(|c| Ok((evaluate_phi(problem, &x_next, &c)?, c))).transpose()
                },
                |s, cand| match cand {
                    Some((val, c)) => accepts(bt.rule, phi_mid, *val, &y, c, &gy, &y_kernel(spec.mode, s)?),
                    None => Ok(false),
                },
            )?;
            d = acc.scalar;
            let (val, cand) = acc.value.expect("accepted candidates exist");
            (cand, val, d)
        };

        let tol = relative_change(&x, &x_next, &y, &y_next);
        x = x_next;
        y = y_next;
        phi = phi_next;
        steps.push((c, d_used));
        trace.records.push(IterationRecord {
            iter: k,
            phi,
            // no concave part: the surrogate coincides with the objective
            psi: phi,
            tol,
            time_ms: started.elapsed().as_secs_f64() * 1e3,
            snr: opts.truth.map(|t| snr(t, &x)).transpose()?,
        });
        if let Some(observe) = opts.observer {
            observe(k, &x, &y);
        }
        if tol <= opts.eps {
            status = Status::Converged;
            break;
        }
    }

    let audit = Some(descent_audit(&trace));
    Ok(BidRun {
        solve: SolveResult {
            x,
            y,
            status,
            iterations: trace.records.len(),
            trace,
            audit,
        },
        steps,
    })
}

#[cfg(test)]
mod tests;
