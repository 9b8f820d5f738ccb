use super::block::Block;
use super::problem::{DcProblem, Selection};
use crate::error::{BlockId, Error, Result};
use crate::prox::BregmanKernel;

/// Result of one alternating step, with the tilts kept for auditing.
#[derive(Debug, Clone)]
pub struct StepOutput<X, Y> {
    pub x: X,
    pub y: Y,
    pub selection: Selection<X, Y>,
    /// `xi + grad_x h-(x_k, y_k)`.
    pub u: X,
    /// `eta + grad_y h-(x_next, y_k)`.
    pub v: Y,
}

/// One sweep: select `xi in dg1(x_k)`, `eta in dg2(y_k)`, then solve the
/// x-subproblem with tilt `u` and the y-subproblem with tilt `v` at the new x.
pub fn ubama_step<P: DcProblem>(
    problem: &P,
    x_k: &P::X,
    y_k: &P::Y,
    psi: &BregmanKernel,
    phi: &BregmanKernel,
) -> Result<StepOutput<P::X, P::Y>> {
    let selection = Selection::select(problem, x_k, y_k)?;

    let mut u = problem.grad_x_h_minus(x_k, y_k);
    u.axpy(1.0, &selection.xi);
    let x = problem.solve_x(x_k, y_k, &u, psi).map_err(|e| step_error(BlockId::X, e))?;

    let mut v = problem.grad_y_h_minus(&x, y_k);
    v.axpy(1.0, &selection.eta);
    let y = problem.solve_y(&x, y_k, &v, phi).map_err(|e| step_error(BlockId::Y, e))?;

    Ok(StepOutput {
        x,
        y,
        selection,
        u,
        v,
    })
}

fn step_error(block: BlockId, source: Error) -> Error {
    Error::Step {
        block,
        source: Box::new(source),
    }
}
