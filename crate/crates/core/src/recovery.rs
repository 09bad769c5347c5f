//! Worst-case measure recovery from a solved dual.
//!
//! At the optimal multiplier `λ*` every plan supported on the argmin sets
//! `m(x_i) = argmin_j { f_j + λ* c_ij }` minimises the Lagrangian. Sending each
//! source to a single minimiser gives a deterministic coupling, but when
//! `λ* > 0` the budget must also bind. We take the cheapest and the costliest
//! minimiser per source and blend them with one global weight `t` so that the
//! expected cost is exactly `r`.

use crate::dual::{dual_objective, DualSolution, Multiplier};
use crate::error::{Error, Result};
use crate::lagrangian::lagrangian;
use crate::measure::{deterministic_coupling, ot_distance, plan_cost, Coupling, Measure};
use crate::primal::PrimalProblem;

/// Allowed slack of `r` outside `[C_lo, C_hi]` before recovery gives up.
pub const RECOVERY_TOL: f64 = 1e-8;
/// Per-clause tolerance of the certificate.
pub const CERTIFICATE_TOL: f64 = 1e-8;

/// Cheapest and costliest minimiser for every source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMap {
    pub low: Vec<usize>,
    pub high: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct WorstCaseResult {
    pub plan: Coupling,
    pub nu: Measure,
    pub blend_t: f64,
    /// `λ* (plan_cost - r)`; zero when complementary slackness holds.
    pub slack: f64,
}

/// Picks `j_low(i)` and `j_high(i)` from each argmin set by cost. Equal costs
/// go to the smallest index.
pub fn select_extremes(dual: &DualSolution, prob: &PrimalProblem) -> Result<SelectionMap> {
    if dual.argmin_sets.len() != prob.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} argmin sets for {} sources",
            dual.argmin_sets.len(),
            prob.len()
        )));
    }
    let mut low = Vec::with_capacity(prob.len());
    let mut high = Vec::with_capacity(prob.len());
    for (i, set) in dual.argmin_sets.iter().enumerate() {
        let row = prob.cost().row(i);
        let (&first, rest) = set.split_first().ok_or(Error::EmptyArgmin(i))?;
        let (mut lo, mut hi) = (first, first);
        for &j in rest {
            // sets are ascending, so strict comparisons keep the smallest index
            if row[j] < row[lo] || (row[j] == row[lo] && j < lo) {
                lo = j;
            }
            if row[j] > row[hi] || (row[j] == row[hi] && j < hi) {
                hi = j;
            }
        }
        low.push(lo);
        high.push(hi);
    }
    Ok(SelectionMap { low, high })
}

fn expected_selection_cost(sel: &[usize], prob: &PrimalProblem) -> f64 {
    prob.mu()
        .weights()
        .iter()
        .zip(sel)
        .enumerate()
        .map(|(i, (w, &j))| w * prob.cost().get(i, j))
        .sum()
}

/// Builds a primal-optimal plan `π*` and its second marginal `ν*`.
pub fn recover_worst_case(dual: &DualSolution, prob: &PrimalProblem) -> Result<WorstCaseResult> {
    let sel = select_extremes(dual, prob)?;
    let r = prob.r();
    let lambda = match dual.lambda_star {
        Multiplier::Unattained => {
            // zero radius: only zero-cost moves, i.e. the identity when all
            // off-diagonal costs are positive
            let plan = deterministic_coupling(prob.mu(), &sel.low)?;
            return Ok(finish(plan, 0.0, 0.0, prob));
        }
        Multiplier::Finite(l) => l,
    };
    let c_lo = expected_selection_cost(&sel.low, prob);
    if lambda == 0.0 {
        if c_lo > r + RECOVERY_TOL {
            return Err(Error::InfeasibleRecovery { r, c_lo, c_hi: c_lo });
        }
        let plan = deterministic_coupling(prob.mu(), &sel.low)?;
        return Ok(finish(plan, 0.0, 0.0, prob));
    }
    let c_hi = expected_selection_cost(&sel.high, prob);
    if r < c_lo - RECOVERY_TOL || r > c_hi + RECOVERY_TOL {
        return Err(Error::InfeasibleRecovery { r, c_lo, c_hi });
    }
    let t = if c_hi == c_lo {
        0.0
    } else {
        ((r - c_lo) / (c_hi - c_lo)).clamp(0.0, 1.0)
    };
    let n = prob.len();
    let pi = prob
        .mu()
        .weights()
        .iter()
        .enumerate()
        .map(|(i, &w)| {
            let mut row = vec![0.0; n];
            let (lo, hi) = (sel.low[i], sel.high[i]);
            if lo == hi {
                row[lo] = w;
            } else {
                row[lo] = (1.0 - t) * w;
                row[hi] = t * w;
            }
            row
        })
        .collect();
    Ok(finish(Coupling::from_raw(pi), t, lambda, prob))
}

fn finish(plan: Coupling, blend_t: f64, lambda: f64, prob: &PrimalProblem) -> WorstCaseResult {
    let cost = plan.integrate(|i, j| prob.cost().get(i, j));
    let slack = if lambda == 0.0 { 0.0 } else { lambda * (cost - prob.r()) };
    let nu = plan.second_marginal();
    WorstCaseResult {
        plan,
        nu,
        blend_t,
        slack,
    }
}

/// One checked equality or inequality of the optimality certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct CertificateClause {
    /// `a`..`d`.
    pub clause: char,
    pub description: &'static str,
    pub lhs: f64,
    pub rhs: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateReport {
    pub clauses: Vec<CertificateClause>,
}

impl CertificateReport {
    pub fn all_passed(&self) -> bool {
        self.clauses.iter().all(|c| c.passed)
    }

    pub fn first_failure(&self) -> Option<&CertificateClause> {
        self.clauses.iter().find(|c| !c.passed)
    }

    pub fn into_result(self) -> Result<Self> {
        match self.first_failure() {
            None => Ok(self),
            Some(c) => Err(Error::CertificateFailure {
                clause: c.clause.to_string(),
                detail: format!("{}: lhs = {}, rhs = {}", c.description, c.lhs, c.rhs),
            }),
        }
    }
}

/// Evaluates the four certificate clauses without failing on a violation:
///
/// - (a) `d_c(mu, nu*) <= r`
/// - (b) `E_{nu*} f = v_D`
/// - (c) `λ* (<c, π*> - r) = 0`
/// - (d) `L(π*, λ*) = g(λ*)`
///
/// For the zero-radius case the multiplier term is taken as zero.
pub fn certificate_report(result: &WorstCaseResult, dual: &DualSolution, prob: &PrimalProblem) -> Result<CertificateReport> {
    let r = prob.r();
    let ot = ot_distance(prob.mu(), &result.nu, prob.cost())?;
    let expectation = result.nu.expect(prob.f());
    let cost = plan_cost(&result.plan, prob.cost())?;
    let scale = 1.0 + dual.value.abs();

    let (slack, lag, g) = match dual.lambda_star {
        Multiplier::Finite(l) => (l * (cost - r), lagrangian(&result.plan, l, prob)?, dual_objective(l, prob)),
        Multiplier::Unattained => (0.0, expectation, dual.value),
    };

    let clauses = vec![
        CertificateClause {
            clause: 'a',
            description: "transport cost from mu to nu* within radius",
            lhs: ot.distance,
            rhs: r,
            passed: ot.distance <= r + CERTIFICATE_TOL,
        },
        CertificateClause {
            clause: 'b',
            description: "expectation under nu* equals dual value",
            lhs: expectation,
            rhs: dual.value,
            passed: (expectation - dual.value).abs() <= CERTIFICATE_TOL * scale,
        },
        CertificateClause {
            clause: 'c',
            description: "complementary slackness",
            lhs: slack,
            rhs: 0.0,
            passed: slack.abs() <= CERTIFICATE_TOL,
        },
        CertificateClause {
            clause: 'd',
            description: "Lagrangian at recovered plan equals dual objective",
            lhs: lag,
            rhs: g,
            passed: (lag - g).abs() <= CERTIFICATE_TOL * scale,
        },
    ];
    Ok(CertificateReport { clauses })
}

/// Like [`certificate_report`], but fails with the first violated clause.
pub fn verify_certificate(result: &WorstCaseResult, dual: &DualSolution, prob: &PrimalProblem) -> Result<CertificateReport> {
    certificate_report(result, dual, prob)?.into_result()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dual::solve_dual_min;
    use crate::space::{grid_space, CostMatrix};

    fn e1(r: f64) -> PrimalProblem {
        let (_, c) = grid_space(0.0, 1.0, 2, 1.0).unwrap();
        PrimalProblem::new(vec![0.0, 1.0], Measure::new(vec![0.0, 1.0]).unwrap(), c, r).unwrap()
    }

    #[test]
    fn extremes_at_the_kink() {
        let p = e1(0.4);
        let d = solve_dual_min(&p);
        let sel = select_extremes(&d, &p).unwrap();
        assert_eq!(sel.low[1], 1);
        assert_eq!(sel.high[1], 0);
    }

    #[test]
    fn extremes_tie_break() {
        let c = CostMatrix::new(vec![
            vec![0.0, 1.0, 2.0, 2.0],
            vec![1.0, 0.0, 1.0, 1.0],
            vec![2.0, 1.0, 0.0, 1.0],
            vec![2.0, 1.0, 1.0, 0.0],
        ])
        .unwrap();
        let p = PrimalProblem::new(vec![0.0; 4], Measure::new(vec![1.0, 0.0, 0.0, 0.0]).unwrap(), c, 1.0).unwrap();
        let mut d = solve_dual_min(&p);
        d.argmin_sets[0] = vec![2, 3];
        d.argmin_sets[1] = vec![3];
        let sel = select_extremes(&d, &p).unwrap();
        assert_eq!((sel.low[0], sel.high[0]), (2, 2));
        // unique argmin: low == high
        assert_eq!((sel.low[1], sel.high[1]), (3, 3));
        d.argmin_sets[2].clear();
        assert_eq!(select_extremes(&d, &p), Err(Error::EmptyArgmin(2)));
    }

    #[test]
    fn e1_recovery() {
        let p = e1(0.4);
        let d = solve_dual_min(&p);
        let w = recover_worst_case(&d, &p).unwrap();
        assert!((w.blend_t - 0.4).abs() < 1e-15);
        assert!((w.nu.weights()[0] - 0.4).abs() < 1e-15);
        assert!((w.nu.weights()[1] - 0.6).abs() < 1e-15);
        assert!((w.nu.expect(p.f()) - 0.6).abs() < 1e-15);
        let report = verify_certificate(&w, &d, &p).unwrap();
        assert_eq!(report.clauses.len(), 4);
    }

    #[test]
    fn slack_budget_recovery() {
        let p = e1(2.0);
        let d = solve_dual_min(&p);
        let w = recover_worst_case(&d, &p).unwrap();
        assert_eq!(w.nu.weights(), &[1.0, 0.0]);
        assert_eq!(w.nu.expect(p.f()), 0.0);
        verify_certificate(&w, &d, &p).unwrap();
    }

    #[test]
    fn zero_radius_recovery() {
        let p = e1(0.0);
        let d = solve_dual_min(&p);
        let w = recover_worst_case(&d, &p).unwrap();
        assert_eq!(w.nu.weights(), p.mu().weights());
        assert_eq!(w.slack, 0.0);
        assert!(verify_certificate(&w, &d, &p).unwrap().all_passed());
    }

    #[test]
    fn corrupted_measure_fails_clause_b() {
        let p = e1(0.4);
        let d = solve_dual_min(&p);
        let mut w = recover_worst_case(&d, &p).unwrap();
        // move mass off the argmin support, keeping the plan within budget
        w.plan = Coupling::new(vec![vec![0.0, 0.0], vec![0.1, 0.9]]).unwrap();
        w.nu = w.plan.second_marginal();
        match verify_certificate(&w, &d, &p) {
            Err(Error::CertificateFailure { clause, .. }) => assert_eq!(clause, "b"),
            other => panic!("expected clause b failure, got {other:?}"),
        }
    }

    #[test]
    fn inconsistent_dual_is_rejected() {
        let p = e1(0.4);
        let mut d = solve_dual_min(&p);
        // a multiplier whose argmin set cannot reach the budget
        d.lambda_star = Multiplier::Finite(2.0);
        d.argmin_sets[1] = vec![1];
        assert!(matches!(recover_worst_case(&d, &p), Err(Error::InfeasibleRecovery { .. })));
    }
}
