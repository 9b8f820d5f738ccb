//! Generic alternating Bregman-proximal scheme for two-block DC objectives.
//!
//! The concave parts `-g1`, `-g2` are majorized through subgradient
//! selections (the Fenchel-Young bound is tight at the selection point), the
//! smooth part `-h-` is linearized, and each block subproblem adds a Bregman
//! proximal term. Problems supply exact subproblem solvers through
//! [`DcProblem`].

mod audit;
mod block;
mod problem;
mod run;
mod step;

pub use audit::{descent_audit, AuditReport, Violation, ViolationKind, AUDIT_RELATIVE_TOL};
pub use block::Block;
pub use problem::{
    evaluate_phi, evaluate_psi, x_step_objective, y_step_objective, DcProblem, Selection,
};
pub use run::{
    relative_change, run, run_with_monitor, IterationRecord, KernelSchedule, SolveResult,
    SolverConfig, Status, Trace,
};
pub use step::{ubama_step, StepOutput};
