//! Probability measures on a finite space, couplings, and transport costs.

use crate::error::{Error, Result};
use crate::lp::{simplex_solve, LinearProgram};
use crate::space::{CostMatrix, FiniteSpace};

/// Input weights may miss a total of 1 by at most this much.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// A probability vector `w` on `n` points.
#[derive(Debug, Clone, PartialEq)]
pub struct Measure {
    w: Vec<f64>,
    adjustment: f64,
}

impl Measure {
    /// Validates and renormalises `w`. The amount by which the input total
    /// missed 1 is kept in [`Measure::adjustment`].
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::InvalidMeasure("no weights".into()));
        }
        for (i, &v) in w.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidMeasure(format!("weight {i} = {v} is not a finite nonnegative number")));
            }
        }
        let total: f64 = w.iter().sum();
        let adjustment = total - 1.0;
        if adjustment.abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidMeasure(format!("weights sum to {total}, not 1")));
        }
        let w = if total == 1.0 { w } else { w.into_iter().map(|v| v / total).collect() };
        Ok(Self { w, adjustment })
    }

    /// Wraps weights produced by exact placement (marginals, images) without
    /// renormalising.
    pub(crate) fn from_raw(w: Vec<f64>) -> Self {
        Self { w, adjustment: 0.0 }
    }

    pub fn weights(&self) -> &[f64] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }

    /// `total_input - 1` as seen at construction.
    pub fn adjustment(&self) -> f64 {
        self.adjustment
    }

    /// `Σ_i w_i g_i`.
    pub fn expect(&self, g: &[f64]) -> f64 {
        self.w.iter().zip(g).map(|(w, v)| w * v).sum()
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.w
    }
}

/// Joint mass `pi[i][j]` moved from point `i` to point `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    pi: Vec<Vec<f64>>,
}

impl Coupling {
    pub fn new(pi: Vec<Vec<f64>>) -> Result<Self> {
        let n = pi.len();
        if n == 0 {
            return Err(Error::InvalidCoupling("empty plan".into()));
        }
        let mut total = 0.0;
        for (i, row) in pi.iter().enumerate() {
            if row.len() != n {
                return Err(Error::InvalidCoupling(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::InvalidCoupling(format!("pi[{i}][{j}] = {v} is negative or not finite")));
                }
                total += v;
            }
        }
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidCoupling(format!("total mass {total} is not 1")));
        }
        Ok(Self { pi })
    }

    pub(crate) fn from_raw(pi: Vec<Vec<f64>>) -> Self {
        Self { pi }
    }

    /// The plan that leaves every point where it is: `diag(mu)`.
    pub fn identity(mu: &Measure) -> Self {
        let n = mu.len();
        let pi = (0..n)
            .map(|i| {
                let mut row = vec![0.0; n];
                row[i] = mu.weights()[i];
                row
            })
            .collect();
        Self { pi }
    }

    /// Independent coupling `pi[i][j] = mu_i nu_j`.
    pub fn product(mu: &Measure, nu: &Measure) -> Self {
        let pi = mu
            .weights()
            .iter()
            .map(|&a| nu.weights().iter().map(|&b| a * b).collect())
            .collect();
        Self { pi }
    }

    /// `t·self + (1 - t)·other`.
    pub fn mix(&self, other: &Coupling, t: f64) -> Result<Coupling> {
        if self.len() != other.len() {
            return Err(Error::DimensionMismatch(format!(
                "mixing plans on {} and {} points",
                self.len(),
                other.len()
            )));
        }
        let pi = self
            .pi
            .iter()
            .zip(&other.pi)
            .map(|(a, b)| a.iter().zip(b).map(|(x, y)| t * x + (1.0 - t) * y).collect())
            .collect();
        Ok(Coupling { pi })
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.pi
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pi[i][j]
    }

    pub fn first_marginal(&self) -> Measure {
        Measure::from_raw(self.pi.iter().map(|row| row.iter().sum()).collect())
    }

    pub fn second_marginal(&self) -> Measure {
        let n = self.len();
        let mut w = vec![0.0; n];
        for row in &self.pi {
            for (acc, v) in w.iter_mut().zip(row) {
                *acc += v;
            }
        }
        Measure::from_raw(w)
    }

    /// Number of entries strictly above `threshold`.
    pub fn support_size(&self, threshold: f64) -> usize {
        self.pi.iter().flatten().filter(|&&v| v > threshold).count()
    }

    /// `Σ_ij pi_ij g(i, j)`.
    pub fn integrate(&self, g: impl Fn(usize, usize) -> f64) -> f64 {
        let mut s = 0.0;
        for (i, row) in self.pi.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                s += v * g(i, j);
            }
        }
        s
    }
}

/// Optimal transport cost together with a plan attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct OtResult {
    pub distance: f64,
    pub plan: Coupling,
}

pub fn dirac(space: &FiniteSpace, i: usize) -> Result<Measure> {
    let n = space.len();
    if i >= n {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let mut w = vec![0.0; n];
    w[i] = 1.0;
    Ok(Measure::from_raw(w))
}

/// First and second marginals `(proj1#pi, proj2#pi)`.
pub fn marginals(pi: &Coupling) -> (Measure, Measure) {
    (pi.first_marginal(), pi.second_marginal())
}

fn check_map(n: usize, map: &[usize]) -> Result<()> {
    if map.len() != n {
        return Err(Error::DimensionMismatch(format!("map has {} entries for {n} points", map.len())));
    }
    if let Some((from, &to)) = map.iter().enumerate().find(|(_, &t)| t >= n) {
        return Err(Error::BadMap { from, to, n });
    }
    Ok(())
}

/// Pushforward `T#mu`: `result[j] = Σ_{i : T(i) = j} mu_i`.
pub fn image_measure(mu: &Measure, map: &[usize]) -> Result<Measure> {
    let n = mu.len();
    check_map(n, map)?;
    let mut w = vec![0.0; n];
    for (i, &t) in map.iter().enumerate() {
        w[t] += mu.weights()[i];
    }
    Ok(Measure::from_raw(w))
}

/// The plan `(Id, T)#mu`, which sends all of `mu_i` to `T(i)`.
pub fn deterministic_coupling(mu: &Measure, map: &[usize]) -> Result<Coupling> {
    let n = mu.len();
    check_map(n, map)?;
    let pi = map
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mut row = vec![0.0; n];
            row[t] = mu.weights()[i];
            row
        })
        .collect();
    Ok(Coupling::from_raw(pi))
}

/// `Σ_ij pi_ij c_ij`.
pub fn plan_cost(pi: &Coupling, c: &CostMatrix) -> Result<f64> {
    if pi.len() != c.len() {
        return Err(Error::DimensionMismatch(format!(
            "plan on {} points, cost on {}",
            pi.len(),
            c.len()
        )));
    }
    Ok(pi.integrate(|i, j| c.get(i, j)))
}

/// Exact optimal transport cost `d_c(mu, nu)` by the simplex with both
/// marginals as equality constraints.
pub fn ot_distance(mu: &Measure, nu: &Measure, c: &CostMatrix) -> Result<OtResult> {
    let n = mu.len();
    if nu.len() != n || c.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "mu has {n} points, nu {}, cost {}",
            nu.len(),
            c.len()
        )));
    }
    if mu.weights() == nu.weights() {
        return Ok(OtResult {
            distance: 0.0,
            plan: Coupling::identity(mu),
        });
    }
    let objective: Vec<f64> = c.rows().iter().flatten().copied().collect();
    let mut lp = LinearProgram::new(objective);
    for i in 0..n {
        let mut row = vec![0.0; n * n];
        row[i * n..(i + 1) * n].fill(1.0);
        lp = lp.eq(row, mu.weights()[i]);
    }
    for j in 0..n {
        let mut row = vec![0.0; n * n];
        for i in 0..n {
            row[i * n + j] = 1.0;
        }
        lp = lp.eq(row, nu.weights()[j]);
    }
    let sol = simplex_solve(&lp)?;
    let pi: Vec<Vec<f64>> = sol.x.chunks(n).map(|r| r.to_vec()).collect();
    let plan = Coupling::from_raw(pi);
    let distance = plan_cost(&plan, c)?.max(0.0);
    Ok(OtResult { distance, plan })
}
