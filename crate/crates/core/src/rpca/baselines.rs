use std::time::Instant;

use nalgebra::DMatrix;

use super::{initial_point, RpcaProblem, RpcaStart};
use crate::error::{Error, Result};
use crate::prox::{shrink_in_place, shrink_scalar, svt};
use crate::solver::{
    evaluate_phi, evaluate_psi, relative_change, IterationRecord, Selection, SolveResult, Status,
    Trace,
};

/// Iteration cap of every inner ADMM solve.
pub const INNER_ADMM_MAXIT: usize = 500;

/// Residuals at which an inner ADMM solve was accepted. Both are scaled:
/// primal by the size of the split variables, dual by the size of the
/// multiplier (each floored at 1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InnerAdmmReport {
    pub iterations: usize,
    pub primal: f64,
    pub dual: f64,
}

fn fro(a: &DMatrix<f64>) -> f64 {
    a.norm()
}

/// Residual balancing: keep the two residuals within a factor 10 of each
/// other by doubling or halving the penalty, rescaling the scaled multiplier.
fn rebalance(rho: &mut f64, u: &mut DMatrix<f64>, report: &InnerAdmmReport) {
    if report.primal > 10.0 * report.dual {
        *rho *= 2.0;
        *u /= 2.0;
    } else if report.dual > 10.0 * report.primal {
        *rho /= 2.0;
        *u *= 2.0;
    }
}

fn check_inner(report: InnerAdmmReport, tol: f64) -> Result<InnerAdmmReport> {
    if report.primal.max(report.dual) <= tol {
        Ok(report)
    } else {
        Err(Error::InnerSolver {
            solver: "admm",
            iterations: report.iterations,
            residual: report.primal.max(report.dual),
        })
    }
}

/// Penalty and scaled multiplier carried from one inner solve to the next.
#[derive(Debug, Clone)]
pub struct AdmmWarmStart {
    rho: f64,
    u: DMatrix<f64>,
}

impl AdmmWarmStart {
    /// Penalty `1/lambda`, zero multiplier.
    pub fn cold(problem: &RpcaProblem) -> Self {
        let (m, n) = problem.spec().b.shape();
        Self {
            rho: 1.0 / problem.spec().lambda,
            u: DMatrix::zeros(m, n),
        }
    }
}

/// Solves the X-block `min |X|_* - <xi, X> + 1/(2 lambda) |P(X + Y - B)|^2`
/// by ADMM on the split `X = Z` from `x_init`, cold-started.
pub fn admm_x_block(
    problem: &RpcaProblem,
    xi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    x_init: &DMatrix<f64>,
    inner_tol: f64,
) -> Result<(DMatrix<f64>, InnerAdmmReport)> {
    admm_x_block_warm(problem, xi, y, x_init, inner_tol, &mut AdmmWarmStart::cold(problem))
}

/// [`admm_x_block`] continuing from `warm`, which is updated on return.
pub fn admm_x_block_warm(
    problem: &RpcaProblem,
    xi: &DMatrix<f64>,
    y: &DMatrix<f64>,
    x_init: &DMatrix<f64>,
    inner_tol: f64,
    warm: &mut AdmmWarmStart,
) -> Result<(DMatrix<f64>, InnerAdmmReport)> {
    let lam = problem.spec().lambda;
    let w = problem.indicator();
    let target = &problem.spec().b - y;

    let mut rho = warm.rho;
    let mut u = warm.u.clone();
    let mut x = x_init.clone();
    let mut z = x_init.clone();
    let mut report = InnerAdmmReport {
        iterations: 0,
        primal: f64::INFINITY,
        dual: f64::INFINITY,
    };
    for it in 1..=INNER_ADMM_MAXIT {
        x = svt(&(&z - &u + xi / rho), 1.0 / rho)?;
        let z_prev = std::mem::replace(&mut z, x.clone());
        let xu = &x + &u;
        for k in 0..z.len() {
            z[k] = if w[k] > 0.0 {
                (rho * xu[k] + target[k] / lam) / (rho + 1.0 / lam)
            } else {
                xu[k]
            };
        }
        u += &x - &z;
        report = InnerAdmmReport {
            iterations: it,
            primal: fro(&(&x - &z)) / fro(&x).max(fro(&z)).max(1.0),
            dual: rho * fro(&(&z - &z_prev)) / (rho * fro(&u)).max(1.0),
        };
        if report.primal.max(report.dual) <= inner_tol {
            break;
        }
        rebalance(&mut rho, &mut u, &report);
    }
    *warm = AdmmWarmStart { rho, u };
    Ok((x, check_inner(report, inner_tol)?))
}

/// Jointly solves `min |X|_* - <xi, X> + tau |Y|_1 - <v, Y> + 1/(2 lambda) |P(W - B)|^2`
/// subject to `W = X + Y` by ADMM, penalty starting at `1/lambda`. `v`
/// carries the factor `tau`.
fn admm_joint(
    problem: &RpcaProblem,
    xi: &DMatrix<f64>,
    v: &DMatrix<f64>,
    x_init: &DMatrix<f64>,
    y_init: &DMatrix<f64>,
    inner_tol: f64,
    warm: &mut AdmmWarmStart,
) -> Result<(DMatrix<f64>, DMatrix<f64>, InnerAdmmReport)> {
    let spec = problem.spec();
    let (lam, tau) = (spec.lambda, spec.tau);
    let w = problem.indicator();

    let mut rho = warm.rho;
    let mut u = warm.u.clone();
    let mut x = x_init.clone();
    let mut y = y_init.clone();
    let mut wv = x_init + y_init;
    let mut report = InnerAdmmReport {
        iterations: 0,
        primal: f64::INFINITY,
        dual: f64::INFINITY,
    };
    for it in 1..=INNER_ADMM_MAXIT {
        x = svt(&(&wv - &y - &u + xi / rho), 1.0 / rho)?;
        y = &wv - &x - &u + v / rho;
        shrink_in_place(y.as_mut_slice(), tau / rho)?;
        let s = &x + &y;
        let su = &s + &u;
        let w_prev = wv.clone();
        for k in 0..wv.len() {
            wv[k] = if w[k] > 0.0 {
                (rho * su[k] + spec.b[k] / lam) / (rho + 1.0 / lam)
            } else {
                su[k]
            };
        }
        u += &s - &wv;
        report = InnerAdmmReport {
            iterations: it,
            primal: fro(&(&s - &wv)) / fro(&s).max(fro(&wv)).max(1.0),
            dual: rho * fro(&(&wv - &w_prev)) / (rho * fro(&u)).max(1.0),
        };
        if report.primal.max(report.dual) <= inner_tol {
            break;
        }
        rebalance(&mut rho, &mut u, &report);
    }
    *warm = AdmmWarmStart { rho, u };
    let report = check_inner(report, inner_tol)?;
    Ok((x, y, report))
}

/// Result of a DCA-type baseline: the outer run plus the inner solves.
#[derive(Debug, Clone)]
pub struct BaselineRun {
    pub solve: SolveResult<DMatrix<f64>, DMatrix<f64>>,
    pub inner: Vec<InnerAdmmReport>,
}

fn outer_loop(
    problem: &RpcaProblem,
    start: RpcaStart,
    eps: f64,
    maxit: usize,
    mut sweep: impl FnMut(
        &DMatrix<f64>,
        &DMatrix<f64>,
        &Selection<DMatrix<f64>, DMatrix<f64>>,
    ) -> Result<(DMatrix<f64>, DMatrix<f64>, InnerAdmmReport)>,
) -> Result<BaselineRun> {
    if !(eps > 0.0) || maxit == 0 {
        return Err(Error::invalid("need eps > 0 and maxit > 0"));
    }
    let (mut x, mut y) = initial_point(problem, start)?;
    let mut trace = Trace {
        initial_phi: evaluate_phi(problem, &x, &y)?,
        records: Vec::new(),
    };
    let mut inner = Vec::new();
    let mut status = Status::MaxIterations;
    for k in 0..maxit {
        let started = Instant::now();
        let sel = Selection::select(problem, &x, &y)?;
        let (xn, yn, rep) = sweep(&x, &y, &sel)?;
        inner.push(rep);
        let tol = relative_change(&x, &xn, &y, &yn);
        let time_ms = started.elapsed().as_secs_f64() * 1e3;
        let phi = evaluate_phi(problem, &xn, &yn)?;
        let psi = evaluate_psi(problem, &xn, &yn, &sel)?;
        x = xn;
        y = yn;
        trace.records.push(IterationRecord {
            iter: k + 1,
            phi,
            psi,
            tol,
            time_ms,
            snr: None,
        });
        if tol <= eps {
            status = Status::Converged;
            break;
        }
    }
    Ok(BaselineRun {
        solve: SolveResult {
            x,
            y,
            status,
            iterations: trace.records.len(),
            trace,
            audit: None,
        },
        inner,
    })
}

/// Alternating DCA: the X-block by inner ADMM to `inner_tol` (penalty and
/// multiplier carried across outer iterations), the Y-block in
/// closed form (shrink on the observed entries, zero elsewhere).
pub fn adca_rpca_solve(
    problem: &RpcaProblem,
    start: RpcaStart,
    eps: f64,
    maxit: usize,
    inner_tol: f64,
) -> Result<BaselineRun> {
    let spec = problem.spec();
    let (lam, tau) = (spec.lambda, spec.tau);
    let w = problem.indicator().clone();
    let mut warm = AdmmWarmStart::cold(problem);
    outer_loop(problem, start, eps, maxit, |x, y, sel| {
        let (xn, rep) = admm_x_block_warm(problem, &sel.xi, y, x, inner_tol, &mut warm)?;
        let mut yn = DMatrix::zeros(y.nrows(), y.ncols());
        for k in 0..yn.len() {
            if w[k] > 0.0 {
                yn[k] = shrink_scalar(spec.b[k] - xn[k] + lam * sel.eta[k], lam * tau);
            }
        }
        Ok((xn, yn, rep))
    })
}

/// DCA with the convexified subproblem in both blocks solved jointly by ADMM
/// on the split `W = X + Y`.
pub fn dca_admm_solve(
    problem: &RpcaProblem,
    start: RpcaStart,
    eps: f64,
    maxit: usize,
    inner_tol: f64,
) -> Result<BaselineRun> {
    let mut warm = AdmmWarmStart::cold(problem);
    outer_loop(problem, start, eps, maxit, |x, y, sel| {
        admm_joint(problem, &sel.xi, &sel.eta, x, y, inner_tol, &mut warm)
    })
}
