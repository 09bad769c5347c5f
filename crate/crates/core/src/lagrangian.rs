//! The Lagrangian `L(π, λ) = <f, π> + λ (<c, π> - r)` of the primal problem
//! and executable checks of the minimax conditions on finite instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dual::{phi, solve_dual_min};
use crate::error::{Error, Result};
use crate::measure::{deterministic_coupling, plan_cost, Coupling, Measure};
use crate::primal::{minimize_over_plans_lp, solve_primal, PrimalProblem};

/// Default number of randomised convex-combination trials.
pub const DEFAULT_TRIALS: usize = 100;
/// Upper end of the multipliers sampled by [`certify_minimax`].
const LAMBDA_SAMPLE_MAX: f64 = 10.0;

fn check_dims(pi: &Coupling, prob: &PrimalProblem) -> Result<()> {
    if pi.len() != prob.len() {
        return Err(Error::DimensionMismatch(format!(
            "plan on {} points, problem on {}",
            pi.len(),
            prob.len()
        )));
    }
    Ok(())
}

/// `Σ_ij π_ij (f_j + λ c_ij) - λ r`.
pub fn lagrangian(pi: &Coupling, lambda: f64, prob: &PrimalProblem) -> Result<f64> {
    check_dims(pi, prob)?;
    let f = prob.f();
    let c = prob.cost();
    Ok(pi.integrate(|i, j| f[j] + lambda * c.get(i, j)) - lambda * prob.r())
}

/// The same Lagrangian in split form `<f, π> + λ (<c, π> - r)`.
pub fn lagrangian_split(pi: &Coupling, lambda: f64, prob: &PrimalProblem) -> Result<f64> {
    check_dims(pi, prob)?;
    let f = prob.f();
    let objective = pi.integrate(|_, j| f[j]);
    Ok(objective + lambda * (plan_cost(pi, prob.cost())? - prob.r()))
}

/// Largest deviation from exact affinity of `L` over the samples:
///
/// - in the plan: `L(tπ1 + (1-t)π2, λ)` against `t L(π1, λ) + (1-t) L(π2, λ)`
///   for every sampled `λ`;
/// - in the multiplier: `L(π, tλ1 + (1-t)λ2)` against
///   `t L(π, λ1) + (1-t) L(π, λ2)` for every pair of samples and `π ∈ {π1, π2}`.
pub fn check_cc_like(pi1: &Coupling, pi2: &Coupling, t: f64, lambdas: &[f64], prob: &PrimalProblem) -> Result<f64> {
    let pi3 = pi1.mix(pi2, t)?;
    let mut worst = 0.0_f64;
    for &l in lambdas {
        let mixed = lagrangian(&pi3, l, prob)?;
        let combo = t * lagrangian(pi1, l, prob)? + (1.0 - t) * lagrangian(pi2, l, prob)?;
        worst = worst.max((mixed - combo).abs());
    }
    for &l1 in lambdas {
        for &l2 in lambdas {
            let l3 = t * l1 + (1.0 - t) * l2;
            for pi in [pi1, pi2] {
                let mixed = lagrangian(pi, l3, prob)?;
                let combo = t * lagrangian(pi, l1, prob)? + (1.0 - t) * lagrangian(pi, l2, prob)?;
                worst = worst.max((mixed - combo).abs());
            }
        }
    }
    Ok(worst)
}

/// `min_π L(π, λ)` over plans with first marginal `mu`, attained by the
/// deterministic coupling that sends each source to its smallest minimiser of
/// `f_j + λ c_ij`.
pub fn min_over_plans(lambda: f64, prob: &PrimalProblem) -> f64 {
    let map: Vec<usize> = (0..prob.len()).map(|i| phi(lambda, i, prob).argmin[0]).collect();
    let plan = deterministic_coupling(prob.mu(), &map).expect("argmin indices are in range");
    lagrangian(&plan, lambda, prob).expect("plan built on the problem's space")
}

/// `min_π L(π, λ)` computed by the simplex instead of the closed form.
pub fn min_over_plans_lp(lambda: f64, prob: &PrimalProblem) -> Result<f64> {
    let f = prob.f();
    let weights: Vec<Vec<f64>> = prob
        .cost()
        .rows()
        .iter()
        .map(|row| row.iter().zip(f).map(|(c, fj)| fj + lambda * c).collect())
        .collect();
    let (value, _) = minimize_over_plans_lp(prob.mu(), &weights)?;
    Ok(value - lambda * prob.r())
}

/// `sup_{λ >= 0} L(π, λ)`: the objective when the budget holds, otherwise
/// unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupValue {
    Finite(f64),
    Infinite,
}

impl SupValue {
    pub fn finite(self) -> Option<f64> {
        match self {
            SupValue::Finite(v) => Some(v),
            SupValue::Infinite => None,
        }
    }
}

pub fn sup_over_lambda(pi: &Coupling, prob: &PrimalProblem) -> Result<SupValue> {
    check_dims(pi, prob)?;
    if plan_cost(pi, prob.cost())? <= prob.r() + 1e-12 {
        let f = prob.f();
        Ok(SupValue::Finite(pi.integrate(|_, j| f[j])))
    } else {
        Ok(SupValue::Infinite)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MinimaxReport {
    /// `min_π sup_λ L`, i.e. the primal optimum.
    pub min_sup: f64,
    /// `sup_λ min_π L`, i.e. the dual optimum.
    pub sup_min: f64,
    pub gap: f64,
    pub cc_like_max_violation: f64,
    /// Lower semicontinuity in the plan holds automatically on a finite space.
    pub lsc_checked: bool,
    /// Largest `|closed form - LP|` for `min_π L(π, λ)` over the sampled `λ`.
    pub inner_min_discrepancy: f64,
    /// Largest `min_π L(·, λ) - L(π, λ)` over sampled plans; should be <= 0.
    pub inner_min_excess: f64,
    pub trials: usize,
}

impl MinimaxReport {
    pub fn certified(&self, tol: f64) -> bool {
        self.gap.abs() <= tol * (1.0 + self.min_sup.abs())
    }
}

/// A random plan with first marginal `mu`.
pub fn random_plan(mu: &Measure, rng: &mut impl Rng) -> Coupling {
    let n = mu.len();
    let pi = mu
        .weights()
        .iter()
        .map(|&w| {
            let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|v| w * v / s).collect()
        })
        .collect();
    Coupling::from_raw(pi)
}

/// Solves both sides of the minimax equality and checks convex-concave
/// likeness on `trials` random `(π1, π2, t, λ)` tuples. Trial `k` draws from
/// its own ChaCha stream seeded by `seed`, so results do not depend on the
/// order in which trials run.
pub fn certify_minimax(prob: &PrimalProblem, trials: usize, seed: u64) -> Result<MinimaxReport> {
    let primal = solve_primal(prob)?;
    let dual = solve_dual_min(prob);
    let min_sup = primal.value;
    let sup_min = dual.value;

    let mut cc = 0.0_f64;
    let mut discrepancy = 0.0_f64;
    let mut excess = f64::NEG_INFINITY;
    for k in 0..trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k as u64);
        let pi1 = random_plan(prob.mu(), &mut rng);
        let pi2 = random_plan(prob.mu(), &mut rng);
        let t: f64 = rng.gen();
        let lambdas = [0.0, rng.gen_range(0.0..LAMBDA_SAMPLE_MAX), rng.gen_range(0.0..LAMBDA_SAMPLE_MAX)];
        cc = cc.max(check_cc_like(&pi1, &pi2, t, &lambdas, prob)?);

        let l = lambdas[1];
        let closed = min_over_plans(l, prob);
        discrepancy = discrepancy.max((closed - min_over_plans_lp(l, prob)?).abs());
        for pi in [&pi1, &pi2] {
            excess = excess.max(closed - lagrangian(pi, l, prob)?);
        }
    }
    Ok(MinimaxReport {
        min_sup,
        sup_min,
        gap: min_sup - sup_min,
        cc_like_max_violation: cc,
        lsc_checked: true,
        inner_min_discrepancy: discrepancy,
        inner_min_excess: if trials == 0 { 0.0 } else { excess },
        trials,
    })
}
