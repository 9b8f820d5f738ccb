use super::run::{IterationRecord, Trace};

/// Slack of every descent comparison: `1e-9 * (1 + |reference|)`.
pub const AUDIT_RELATIVE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ViolationKind {
    /// `Psi(w^k) < Phi(z^k)`.
    SurrogateBelowObjective,
    /// `Psi(w^{k+1}) > Phi(z^k)`.
    SurrogateAbovePreviousObjective,
    /// `Phi(z^{k+1}) > Phi(z^k)`.
    ObjectiveIncrease,
    /// `Psi(w^{k+1}) > Psi(w^k)`.
    SurrogateIncrease,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub iter: usize,
    pub kind: ViolationKind,
    /// Amount by which the inequality is broken, beyond its slack.
    pub excess: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AuditReport {
    pub checked: usize,
    pub violations: Vec<Violation>,
}

impl AuditReport {
    pub fn is_clean(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.violations.first()
    }
}

fn slack(reference: f64) -> f64 {
    AUDIT_RELATIVE_TOL * (1.0 + reference.abs())
}

/// Checks `Phi(z^{k+1}) <= Psi(w^{k+1}) <= Phi(z^k)` and the monotonicity of
/// both sequences along a trace. The initial surrogate equals the initial
/// objective.
pub fn descent_audit(trace: &Trace) -> AuditReport {
    let mut report = AuditReport::default();
    let mut prev_phi = trace.initial_phi;
    let mut prev_psi = trace.initial_phi;
    for rec in &trace.records {
        audit_record(rec, prev_phi, prev_psi, &mut report);
        prev_phi = rec.phi;
        prev_psi = rec.psi;
    }
    report
}

fn audit_record(rec: &IterationRecord, prev_phi: f64, prev_psi: f64, report: &mut AuditReport) {
    report.checked += 1;
    let mut flag = |kind, excess: f64| {
        if excess > 0.0 {
            report.violations.push(Violation {
                iter: rec.iter,
                kind,
                excess,
            });
        }
    };
    flag(
        ViolationKind::SurrogateBelowObjective,
        rec.phi - rec.psi - slack(rec.phi),
    );
    flag(
        ViolationKind::SurrogateAbovePreviousObjective,
        rec.psi - prev_phi - slack(prev_phi),
    );
    flag(ViolationKind::ObjectiveIncrease, rec.phi - prev_phi - slack(prev_phi));
    flag(ViolationKind::SurrogateIncrease, rec.psi - prev_psi - slack(prev_psi));
}
