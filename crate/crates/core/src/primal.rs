//! The primal problem over transport plans:
//!
//! ```text
//! minimize    Σ_ij pi_ij f_j
//! subject to  Σ_j pi_ij = mu_i        for every source i
//!             Σ_ij pi_ij c_ij <= r
//!             pi >= 0
//! ```
//!
//! Minimising over plans with first marginal `mu` and cost at most `r` has the
//! same optimal value as minimising `E_nu f` over the ball `d_c(mu, nu) <= r`.

use crate::error::{Error, Result};
use crate::lp::{simplex_solve, LinearProgram};
use crate::measure::{plan_cost, Coupling, Measure};
use crate::space::CostMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalProblem {
    f: Vec<f64>,
    mu: Measure,
    cost: CostMatrix,
    r: f64,
}

impl PrimalProblem {
    pub fn new(f: Vec<f64>, mu: Measure, cost: CostMatrix, r: f64) -> Result<Self> {
        let n = f.len();
        if mu.len() != n || cost.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "f has {n} entries, mu {}, cost {}x{}",
                mu.len(),
                cost.len(),
                cost.len()
            )));
        }
        if let Some(j) = f.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidProblem(format!("f[{j}] is not finite")));
        }
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidProblem(format!("radius r = {r} must be finite and nonnegative")));
        }
        Ok(Self { f, mu, cost, r })
    }

    pub fn f(&self) -> &[f64] {
        &self.f
    }

    pub fn mu(&self) -> &Measure {
        &self.mu
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }

    /// Same instance with a different radius.
    pub fn with_radius(&self, r: f64) -> Result<Self> {
        Self::new(self.f.clone(), self.mu.clone(), self.cost.clone(), r)
    }

    /// Same instance with `f` replaced by `-f`.
    pub fn negated(&self) -> Self {
        Self {
            f: self.f.iter().map(|v| -v).collect(),
            ..self.clone()
        }
    }

    /// `E_mu f`.
    pub fn baseline_expectation(&self) -> f64 {
        self.mu.expect(&self.f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrimalStatus {
    Optimal,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrimalSolution {
    pub plan: Coupling,
    pub value: f64,
    pub cost_used: f64,
    pub status: PrimalStatus,
}

fn first_marginal_lp(mu: &Measure, objective: Vec<f64>) -> LinearProgram {
    let n = mu.len();
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let mut row = vec![0.0; n * n];
        row[i * n..(i + 1) * n].fill(1.0);
        lp = lp.eq(row, mu.weights()[i]);
    }
    lp
}

fn plan_from(x: &[f64], n: usize) -> Coupling {
    Coupling::from_raw(x.chunks(n).map(|r| r.to_vec()).collect())
}

/// Exact optimum of the primal problem.
pub fn solve_primal(prob: &PrimalProblem) -> Result<PrimalSolution> {
    let n = prob.len();
    let objective: Vec<f64> = (0..n).flat_map(|_| prob.f.iter().copied()).collect();
    let budget: Vec<f64> = prob.cost.rows().iter().flatten().copied().collect();
    let lp = first_marginal_lp(&prob.mu, objective).le(budget, prob.r);
    match simplex_solve(&lp) {
        Ok(sol) => {
            let plan = plan_from(&sol.x, n);
            let value = plan.integrate(|_, j| prob.f[j]);
            let cost_used = plan_cost(&plan, &prob.cost)?;
            Ok(PrimalSolution {
                plan,
                value,
                cost_used,
                status: PrimalStatus::Optimal,
            })
        }
        Err(Error::Infeasible) => Ok(PrimalSolution {
            plan: Coupling::identity(&prob.mu),
            value: f64::INFINITY,
            cost_used: 0.0,
            status: PrimalStatus::Infeasible,
        }),
        Err(e) => Err(e),
    }
}

/// `min Σ_ij pi_ij w_ij` over all plans with first marginal `mu` and no
/// budget, solved as a linear program. Returns the value and the plan.
pub fn minimize_over_plans_lp(mu: &Measure, weights: &[Vec<f64>]) -> Result<(f64, Coupling)> {
    let n = mu.len();
    if weights.len() != n || weights.iter().any(|r| r.len() != n) {
        return Err(Error::DimensionMismatch(format!("weights must be {n}x{n}")));
    }
    let objective: Vec<f64> = weights.iter().flatten().copied().collect();
    let sol = simplex_solve(&first_marginal_lp(mu, objective))?;
    Ok((sol.value, plan_from(&sol.x, n)))
}
