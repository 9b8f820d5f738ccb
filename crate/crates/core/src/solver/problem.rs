use super::block::Block;
use crate::error::Result;
use crate::prox::BregmanKernel;

/// Objective `f1(x) - g1(x) + f2(y) - g2(y) + h+(x, y) - h-(x, y)` together
/// with the oracles the alternating scheme needs.
///
/// `g1`, `g2` must be convex and the selectors must return genuine
/// subgradients. `solve_x` / `solve_y` must return the exact minimizers of
///
/// ```text
/// f1(x) + h+(x, y_k) - <x - x_k, u> + B_psi(x, x_k)
/// f2(y) + h+(x_next, y) - <y - y_k, v> + B_phi(y, y_k)
/// ```
pub trait DcProblem {
    type X: Block;
    type Y: Block;

    fn f1(&self, x: &Self::X) -> f64;
    fn g1(&self, x: &Self::X) -> Result<f64>;
    fn f2(&self, y: &Self::Y) -> f64;
    fn g2(&self, y: &Self::Y) -> Result<f64>;
    fn h_plus(&self, x: &Self::X, y: &Self::Y) -> f64;
    fn h_minus(&self, x: &Self::X, y: &Self::Y) -> f64;

    fn grad_x_h_minus(&self, x: &Self::X, y: &Self::Y) -> Self::X;
    fn grad_y_h_minus(&self, x: &Self::X, y: &Self::Y) -> Self::Y;

    fn select_subgrad_g1(&self, x: &Self::X) -> Result<Self::X>;
    fn select_subgrad_g2(&self, y: &Self::Y) -> Result<Self::Y>;

    fn solve_x(
        &self,
        x_k: &Self::X,
        y_k: &Self::Y,
        tilt: &Self::X,
        kernel: &BregmanKernel,
    ) -> Result<Self::X>;

    fn solve_y(
        &self,
        x_next: &Self::X,
        y_k: &Self::Y,
        tilt: &Self::Y,
        kernel: &BregmanKernel,
    ) -> Result<Self::Y>;

    /// Upper bounds on the block Lipschitz moduli of `grad h-`. The kernels'
    /// strong-convexity moduli must exceed these.
    fn lipschitz_bounds(&self) -> (f64, f64) {
        (0.0, 0.0)
    }
}

/// `Phi(x, y)`.
pub fn evaluate_phi<P: DcProblem>(problem: &P, x: &P::X, y: &P::Y) -> Result<f64> {
    let val = problem.f1(x) - problem.g1(x)? + problem.f2(y) - problem.g2(y)?
        + problem.h_plus(x, y)
        - problem.h_minus(x, y);
    finite(val, "objective")
}

/// Subgradients selected at an anchor point together with the conjugate
/// values `g*(xi) = <anchor, xi> - g(anchor)`, exact whenever `xi` is a
/// subgradient at the anchor.
#[derive(Debug, Clone)]
pub struct Selection<X, Y> {
    pub xi: X,
    pub eta: Y,
    pub g1_conj: f64,
    pub g2_conj: f64,
}

impl<X: Block, Y: Block> Selection<X, Y> {
    pub fn select<P: DcProblem<X = X, Y = Y>>(problem: &P, x: &X, y: &Y) -> Result<Self> {
        let xi = problem.select_subgrad_g1(x)?;
        let eta = problem.select_subgrad_g2(y)?;
        let g1_conj = x.dot(&xi) - problem.g1(x)?;
        let g2_conj = y.dot(&eta) - problem.g2(y)?;
        Ok(Self {
            xi,
            eta,
            g1_conj,
            g2_conj,
        })
    }
}

/// Surrogate `Psi(x, xi, y, eta)` with conjugate terms taken from `sel`.
pub fn evaluate_psi<P: DcProblem>(
    problem: &P,
    x: &P::X,
    y: &P::Y,
    sel: &Selection<P::X, P::Y>,
) -> Result<f64> {
    let val = problem.f1(x) + sel.g1_conj - x.dot(&sel.xi) + problem.f2(y) + sel.g2_conj
        - y.dot(&sel.eta)
        + problem.h_plus(x, y)
        - problem.h_minus(x, y);
    finite(val, "surrogate")
}

fn finite(v: f64, what: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(crate::Error::Numeric(format!("{what} evaluated to {v}")))
    }
}

/// The x-subproblem objective, evaluated directly. Used to probe minimality.
pub fn x_step_objective<P: DcProblem>(
    problem: &P,
    x: &P::X,
    x_k: &P::X,
    y_k: &P::Y,
    tilt: &P::X,
    kernel: &BregmanKernel,
) -> Result<f64> {
    let mut d = x.clone();
    d.axpy(-1.0, x_k);
    Ok(problem.f1(x) + problem.h_plus(x, y_k) - d.dot(tilt)
        + kernel.distance(x.as_slice(), x_k.as_slice())?)
}

/// The y-subproblem objective, evaluated directly.
pub fn y_step_objective<P: DcProblem>(
    problem: &P,
    y: &P::Y,
    x_next: &P::X,
    y_k: &P::Y,
    tilt: &P::Y,
    kernel: &BregmanKernel,
) -> Result<f64> {
    let mut d = y.clone();
    d.axpy(-1.0, y_k);
    Ok(problem.f2(y) + problem.h_plus(x_next, y) - d.dot(tilt)
        + kernel.distance(y.as_slice(), y_k.as_slice())?)
}
