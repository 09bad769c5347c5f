//! One-dimensional Lagrangian dual of the primal problem.
//!
//! For a multiplier `λ >= 0` the inner value at source `x_i` is
//!
//! ```text
//! φ_λ(x_i) = min_j { f_j + λ c_ij }
//! ```
//!
//! and the dual objective is `g(λ) = Σ_i mu_i φ_λ(x_i) - λ r`. Each `φ_λ` is
//! a minimum of affine functions of `λ`, so `g` is concave and piecewise
//! linear; its kinks sit where two targets tie for some source. The solver
//! enumerates every such crossing and evaluates `g` exactly at each one.

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::primal::PrimalProblem;

/// Absolute tolerance used to decide which targets tie for the minimum.
pub const ARGMIN_TOL: f64 = 1e-10;

/// Value of `φ_λ(x_i)` with every target attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct PhiValue {
    pub value: f64,
    /// Minimising target indices, ascending.
    pub argmin: Vec<usize>,
}

/// The optimal multiplier, or the marker that the supremum is approached
/// only as `λ → ∞` (zero radius).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Multiplier {
    Finite(f64),
    Unattained,
}

impl Multiplier {
    pub fn finite(self) -> Option<f64> {
        match self {
            Multiplier::Finite(l) => Some(l),
            Multiplier::Unattained => None,
        }
    }

    pub fn is_attained(self) -> bool {
        matches!(self, Multiplier::Finite(_))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub lambda_star: Multiplier,
    pub value: f64,
    /// `argmin_sets[i]`: targets minimising `f_j + λ* c_ij`, ascending.
    pub argmin_sets: Vec<Vec<usize>>,
    /// `[lo, hi]`, the supergradient of `g` at `λ*`.
    pub supergradient: (f64, f64),
}

impl DualSolution {
    pub fn attained(&self) -> bool {
        self.lambda_star.is_attained()
    }
}

pub fn phi(lambda: f64, i: usize, prob: &PrimalProblem) -> PhiValue {
    let f = prob.f();
    let row = prob.cost().row(i);
    let value = f
        .iter()
        .zip(row)
        .map(|(fj, cij)| fj + lambda * cij)
        .fold(f64::INFINITY, f64::min);
    let argmin = f
        .iter()
        .zip(row)
        .enumerate()
        .filter(|(_, (fj, cij))| *fj + lambda * *cij <= value + ARGMIN_TOL)
        .map(|(j, _)| j)
        .collect();
    PhiValue { value, argmin }
}

fn phi_value(lambda: f64, i: usize, prob: &PrimalProblem) -> f64 {
    prob.f()
        .iter()
        .zip(prob.cost().row(i))
        .map(|(fj, cij)| fj + lambda * cij)
        .fold(f64::INFINITY, f64::min)
}

/// `Σ_i mu_i φ_λ(x_i)`, the part of `g` that does not depend on `r`.
fn inner_value(lambda: f64, prob: &PrimalProblem) -> f64 {
    prob.mu()
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| w * phi_value(lambda, i, prob))
        .sum()
}

/// `g(λ) = Σ_i mu_i φ_λ(x_i) - λ r`.
pub fn dual_objective(lambda: f64, prob: &PrimalProblem) -> f64 {
    inner_value(lambda, prob) - lambda * prob.r()
}

/// The dual objective of the maximisation problem written directly:
/// `λ r + Σ_i mu_i max_j { f_j - λ c_ij }`. Minimising this over `λ >= 0`
/// gives the worst-case (largest) expectation.
pub fn max_form_objective(lambda: f64, prob: &PrimalProblem) -> f64 {
    let inner: f64 = prob
        .mu()
        .weights()
        .iter()
        .enumerate()
        .map(|(i, w)| {
            let best = prob
                .f()
                .iter()
                .zip(prob.cost().row(i))
                .map(|(fj, cij)| fj - lambda * cij)
                .fold(f64::NEG_INFINITY, f64::max);
            w * best
        })
        .sum();
    lambda * prob.r() + inner
}

fn cost_range(sets: &[Vec<usize>], prob: &PrimalProblem) -> (f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    for (i, (set, w)) in sets.iter().zip(prob.mu().weights()).enumerate() {
        let row = prob.cost().row(i);
        let (cmin, cmax) = set
            .iter()
            .map(|&j| row[j])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), c| (a.min(c), b.max(c)));
        lo += w * cmin;
        hi += w * cmax;
    }
    (lo, hi)
}

/// Supergradient `[lo, hi]` of `g` at `λ`: expected cost of the cheapest and
/// costliest minimising selections, minus `r`.
pub fn supergradient(lambda: f64, prob: &PrimalProblem) -> (f64, f64) {
    let sets: Vec<Vec<usize>> = (0..prob.len()).map(|i| phi(lambda, i, prob).argmin).collect();
    let (lo, hi) = cost_range(&sets, prob);
    (lo - prob.r(), hi - prob.r())
}

/// `g` together with the candidate multipliers at which it can kink.
#[derive(Debug, Clone)]
pub struct DualObjective<'a> {
    prob: &'a PrimalProblem,
    breakpoints: Vec<f64>,
    inner: Vec<f64>,
}

impl<'a> DualObjective<'a> {
    pub fn new(prob: &'a PrimalProblem) -> Self {
        let breakpoints = candidate_breakpoints(prob);
        let inner = breakpoints.iter().map(|&l| inner_value(l, prob)).collect();
        Self {
            prob,
            breakpoints,
            inner,
        }
    }

    /// Sorted, deduplicated candidates, starting with `0`.
    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn value(&self, lambda: f64) -> f64 {
        dual_objective(lambda, self.prob)
    }

    /// Maximises `g` for radius `r` (which may differ from the problem's own).
    /// The candidate values are shared across radii, so repeated calls give
    /// exactly what a fresh solve at that radius would.
    pub fn solve(&self, r: f64) -> DualSolution {
        let prob = self.prob;
        if r == 0.0 {
            return zero_radius_solution(prob);
        }
        let mut best: Option<(usize, f64)> = None;
        for (k, (&l, &h)) in self.breakpoints.iter().zip(&self.inner).enumerate() {
            let g = h - l * r;
            // strict improvement only: ties keep the smaller multiplier
            if best.is_none_or(|(_, b)| g > b) {
                best = Some((k, g));
            }
        }
        let (k, value) = best.expect("breakpoints always contain 0");
        let lambda = self.breakpoints[k];
        let argmin_sets: Vec<Vec<usize>> = (0..prob.len()).map(|i| phi(lambda, i, prob).argmin).collect();
        let (lo, hi) = cost_range(&argmin_sets, prob);
        DualSolution {
            lambda_star: Multiplier::Finite(lambda),
            value,
            argmin_sets,
            supergradient: (lo - r, hi - r),
        }
    }
}

/// Multipliers `λ = (f_j - f_k) / (c_ik - c_ij) >= 0` at which targets `j`
/// and `k` tie for source `i`, plus `λ = 0`. Sources without mass cannot
/// move `g` and are skipped.
fn candidate_breakpoints(prob: &PrimalProblem) -> Vec<f64> {
    let n = prob.len();
    let f = prob.f();
    let mut out = vec![0.0];
    for (i, &w) in prob.mu().weights().iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let row = prob.cost().row(i);
        for j in 0..n {
            for k in (j + 1)..n {
                let dc = row[k] - row[j];
                if dc == 0.0 {
                    continue;
                }
                let l = (f[j] - f[k]) / dc;
                if l.is_finite() && l > 0.0 {
                    out.push(l);
                }
            }
        }
    }
    out.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    out.dedup();
    out
}

/// `r = 0`: the ball only reaches targets at zero cost, so
/// `g(λ) ↑ Σ_i mu_i min{f_j : c_ij = 0}` as `λ → ∞` without attaining it
/// unless the budget is slack from the start. With positive off-diagonal
/// costs this is exactly `E_mu f`.
fn zero_radius_solution(prob: &PrimalProblem) -> DualSolution {
    let f = prob.f();
    let mut mins = Vec::with_capacity(prob.len());
    let mut argmin_sets = Vec::with_capacity(prob.len());
    for i in 0..prob.len() {
        let row = prob.cost().row(i);
        let reachable = || (0..prob.len()).filter(|&j| row[j] == 0.0);
        let m = reachable().map(|j| f[j]).fold(f64::INFINITY, f64::min);
        argmin_sets.push(reachable().filter(|&j| f[j] <= m + ARGMIN_TOL).collect());
        mins.push(m);
    }
    let value = prob.mu().expect(&mins);
    DualSolution {
        lambda_star: Multiplier::Unattained,
        value,
        argmin_sets,
        supergradient: (0.0, 0.0),
    }
}

/// Maximises `g` over `λ >= 0`. The value equals the primal minimum.
pub fn solve_dual_min(prob: &PrimalProblem) -> DualSolution {
    DualObjective::new(prob).solve(prob.r())
}

/// Worst case of the maximisation problem `sup { E_nu f : d_c(mu, nu) <= r }`,
/// solved as the minimisation problem for `-f`. `λ*` is unchanged and the
/// argmin sets become argmax sets.
pub fn solve_max(prob: &PrimalProblem) -> DualSolution {
    let mut sol = solve_dual_min(&prob.negated());
    sol.value = -sol.value;
    sol
}

/// Dual solutions for several radii, sharing one breakpoint enumeration.
/// Each entry is identical to `solve_dual_min(prob.with_radius(r))`.
pub fn solve_dual_sweep(prob: &PrimalProblem, radii: &[f64]) -> Result<Vec<DualSolution>> {
    if let Some(r) = radii.iter().find(|r| !r.is_finite() || **r < 0.0) {
        return Err(Error::InvalidProblem(format!("radius {r} must be finite and nonnegative")));
    }
    let obj = DualObjective::new(prob);
    Ok(radii.iter().map(|&r| obj.solve(r)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::Measure;
    use crate::space::grid_space;

    fn e1(r: f64) -> PrimalProblem {
        let (_, c) = grid_space(0.0, 1.0, 2, 1.0).unwrap();
        PrimalProblem::new(vec![0.0, 1.0], Measure::new(vec![0.0, 1.0]).unwrap(), c, r).unwrap()
    }

    #[test]
    fn phi_examples() {
        let p = e1(0.4);
        assert_eq!(phi(0.0, 1, &p), PhiValue { value: 0.0, argmin: vec![0] });
        assert_eq!(phi(1.0, 1, &p), PhiValue { value: 1.0, argmin: vec![0, 1] });
        assert_eq!(phi(2.0, 1, &p), PhiValue { value: 1.0, argmin: vec![1] });
    }

    #[test]
    fn dual_objective_examples() {
        let p = e1(0.4);
        assert_eq!(dual_objective(0.0, &p), 0.0);
        assert!((dual_objective(0.5, &p) - 0.3).abs() < 1e-15);
        assert!((dual_objective(1.0, &p) - 0.6).abs() < 1e-15);
    }

    #[test]
    fn solve_examples() {
        let s = solve_dual_min(&e1(0.4));
        assert_eq!(s.lambda_star, Multiplier::Finite(1.0));
        assert!((s.value - 0.6).abs() < 1e-15);
        assert_eq!(s.argmin_sets[1], vec![0, 1]);

        let s = solve_dual_min(&e1(2.0));
        assert_eq!(s.lambda_star, Multiplier::Finite(0.0));
        assert_eq!(s.value, 0.0);

        let s = solve_dual_min(&e1(0.0));
        assert_eq!(s.lambda_star, Multiplier::Unattained);
        assert_eq!(s.value, 1.0);
        assert!(!s.attained());
    }

    #[test]
    fn maximisation_examples() {
        let (_, c) = grid_space(0.0, 1.0, 2, 1.0).unwrap();
        let p = PrimalProblem::new(vec![0.0, 1.0], Measure::new(vec![1.0, 0.0]).unwrap(), c.clone(), 0.4).unwrap();
        let s = solve_max(&p);
        assert!((s.value - 0.4).abs() < 1e-15);
        assert_eq!(s.lambda_star, Multiplier::Finite(1.0));
        assert!((max_form_objective(1.0, &p) - 0.4).abs() < 1e-15);

        let s = solve_max(&p.with_radius(0.0).unwrap());
        assert_eq!(s.value, 0.0);
        assert!(!s.attained());

        let mu = Measure::new(vec![0.25, 0.75]).unwrap();
        let k = PrimalProblem::new(vec![2.5, 2.5], mu, c, 0.7).unwrap();
        let s = solve_max(&k);
        assert_eq!(s.value, 2.5);
        assert_eq!(s.lambda_star, Multiplier::Finite(0.0));
    }

    #[test]
    fn supergradient_examples() {
        let p = e1(0.4);
        let (lo, hi) = supergradient(1.0, &p);
        assert!((lo + 0.4).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
        let (lo, hi) = supergradient(0.5, &p);
        assert!((lo - 0.6).abs() < 1e-15 && (hi - 0.6).abs() < 1e-15);
        let (lo, hi) = supergradient(2.0, &p);
        assert!((lo + 0.4).abs() < 1e-15 && (hi + 0.4).abs() < 1e-15);
    }

    #[test]
    fn breakpoints_of_e1() {
        let p = e1(0.4);
        assert_eq!(DualObjective::new(&p).breakpoints(), &[0.0, 1.0]);
    }

    #[test]
    fn sweep_matches_fresh_solves() {
        let (_, c) = grid_space(-1.0, 2.0, 6, 2.0).unwrap();
        let mu = Measure::new(vec![0.1, 0.2, 0.3, 0.1, 0.2, 0.1]).unwrap();
        let p = PrimalProblem::new(vec![0.3, -0.2, 0.9, 0.1, 0.5, -0.4], mu, c, 0.3).unwrap();
        let radii = [0.0, 0.05, 0.3, 1.0, 4.0];
        let swept = solve_dual_sweep(&p, &radii).unwrap();
        for (r, s) in radii.iter().zip(swept) {
            assert_eq!(s, solve_dual_min(&p.with_radius(*r).unwrap()));
        }
        assert!(solve_dual_sweep(&p, &[-1.0]).is_err());
    }

    #[test]
    fn zero_radius_with_free_moves() {
        // off-diagonal zero cost between points 0 and 1: mass may move for free
        let c = crate::space::CostMatrix::new(vec![
            vec![0.0, 0.0, 1.0],
            vec![0.0, 0.0, 1.0],
            vec![1.0, 1.0, 0.0],
        ])
        .unwrap();
        let mu = Measure::new(vec![0.0, 0.5, 0.5]).unwrap();
        let p = PrimalProblem::new(vec![-1.0, 2.0, 3.0], mu, c, 0.0).unwrap();
        let s = solve_dual_min(&p);
        assert_eq!(s.value, -0.5 + 0.5 * 3.0);
        assert_eq!(s.argmin_sets[1], vec![0]);
    }
}
