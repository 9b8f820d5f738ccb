use std::fmt;
use std::sync::Arc;
use std::time::Instant;

use super::audit::{descent_audit, AuditReport};
use super::block::Block;
use super::problem::{evaluate_phi, evaluate_psi, DcProblem};
use super::step::ubama_step;
use crate::error::{Error, Result};
use crate::prox::BregmanKernel;

/// Per-iteration bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub phi: f64,
    pub psi: f64,
    pub tol: f64,
    /// Wall time of this iteration, measured after the y-update.
    pub time_ms: f64,
    pub snr: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub initial_phi: f64,
    pub records: Vec<IterationRecord>,
}

impl Trace {
    pub fn last_phi(&self) -> f64 {
        self.records.last().map_or(self.initial_phi, |r| r.phi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIterations,
}

/// Kernel schedule `k -> (psi_k, phi_k)`.
pub type KernelSchedule = Arc<dyn Fn(usize) -> (BregmanKernel, BregmanKernel) + Send + Sync>;

#[derive(Clone)]
pub struct SolverConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub audit: bool,
    /// Reject kernels whose modulus does not exceed the problem's declared
    /// Lipschitz bounds. Disable only for negative-control experiments.
    pub enforce_margin: bool,
    pub kernels: KernelSchedule,
}

impl fmt::Debug for SolverConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolverConfig")
            .field("tol", &self.tol)
            .field("max_iter", &self.max_iter)
            .field("audit", &self.audit)
            .field("enforce_margin", &self.enforce_margin)
            .finish_non_exhaustive()
    }
}

impl SolverConfig {
    pub fn constant(psi: BregmanKernel, phi: BregmanKernel, tol: f64, max_iter: usize) -> Self {
        Self {
            tol,
            max_iter,
            audit: true,
            enforce_margin: true,
            kernels: Arc::new(move |_| (psi.clone(), phi.clone())),
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!("stopping tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("iteration cap must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult<X, Y> {
    pub x: X,
    pub y: Y,
    pub status: Status,
    pub iterations: usize,
    pub trace: Trace,
    pub audit: Option<AuditReport>,
}

/// `max(|x1 - x0| / max(1, |x0|), |y1 - y0| / max(1, |y0|))`.
pub fn relative_change<X: Block, Y: Block>(x0: &X, x1: &X, y0: &Y, y1: &Y) -> f64 {
    let rx = x1.dist(x0) / x0.norm().max(1.0);
    let ry = y1.dist(y0) / y0.norm().max(1.0);
    rx.max(ry)
}

pub fn run<P: DcProblem>(
    problem: &P,
    config: &SolverConfig,
    x0: P::X,
    y0: P::Y,
) -> Result<SolveResult<P::X, P::Y>> {
    run_with_monitor(problem, config, x0, y0, |_, _| None)
}

/// Iterates [`ubama_step`] until the relative change drops to `config.tol` or
/// the cap is hit. `monitor` may attach an application metric to each record.
pub fn run_with_monitor<P: DcProblem>(
    problem: &P,
    config: &SolverConfig,
    x0: P::X,
    y0: P::Y,
    mut monitor: impl FnMut(&P::X, &P::Y) -> Option<f64>,
) -> Result<SolveResult<P::X, P::Y>> {
    config.validate()?;
    let initial_phi = evaluate_phi(problem, &x0, &y0)?;
    let (lx, ly) = problem.lipschitz_bounds();

    let mut x = x0;
    let mut y = y0;
    let mut trace = Trace {
        initial_phi,
        records: Vec::new(),
    };
    let mut status = Status::MaxIterations;

    for k in 0..config.max_iter {
        let started = Instant::now();
        let (psi_k, phi_k) = (config.kernels)(k);
        if config.enforce_margin && (psi_k.modulus() <= lx || phi_k.modulus() <= ly) {
            return Err(Error::invalid(format!(
                "kernel moduli ({}, {}) must exceed Lipschitz bounds ({lx}, {ly})",
                psi_k.modulus(),
                phi_k.modulus()
            )));
        }
        let out = ubama_step(problem, &x, &y, &psi_k, &phi_k)?;
        let tol = relative_change(&x, &out.x, &y, &out.y);
        let time_ms = started.elapsed().as_secs_f64() * 1e3;

        let phi = evaluate_phi(problem, &out.x, &out.y)?;
        let psi = evaluate_psi(problem, &out.x, &out.y, &out.selection)?;
        x = out.x;
        y = out.y;
        trace.records.push(IterationRecord {
            iter: k + 1,
            phi,
            psi,
            tol,
            time_ms,
            snr: monitor(&x, &y),
        });
        if tol <= config.tol {
            status = Status::Converged;
            break;
        }
    }

    let audit = config.audit.then(|| descent_audit(&trace));
    Ok(SolveResult {
        x,
        y,
        status,
        iterations: trace.records.len(),
        trace,
        audit,
    })
}
