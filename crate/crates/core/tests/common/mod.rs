#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ot_ball::measure::Measure;
use ot_ball::primal::PrimalProblem;
use ot_ball::space::{build_space, cost_from_metric, CostMatrix, FiniteSpace, Metric};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform point on the probability simplex.
pub fn random_simplex(n: usize, rng: &mut impl Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -(1.0 - rng.gen::<f64>()).ln()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

pub fn random_measure(n: usize, rng: &mut impl Rng) -> Measure {
    Measure::new(random_simplex(n, rng)).unwrap()
}

/// `n` uniform points in the unit square.
pub fn random_space(n: usize, rng: &mut impl Rng) -> FiniteSpace {
    let pts = (0..n).map(|_| vec![rng.gen::<f64>(), rng.gen::<f64>()]).collect();
    build_space(pts, Metric::Euclidean).unwrap()
}

pub fn max_entry(c: &CostMatrix) -> f64 {
    c.rows().iter().flatten().cloned().fold(0.0, f64::max)
}

/// Random instance: `n` in `n_range` points in `[0,1]^2`, `p` in {1, 2},
/// `f` uniform in `[0,1]`, `mu` uniform on the simplex, `r` uniform in
/// `[0, max c]`.
pub fn random_problem(n_lo: usize, n_hi: usize, rng: &mut impl Rng) -> PrimalProblem {
    let n = rng.gen_range(n_lo..=n_hi);
    let space = random_space(n, rng);
    let p = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
    let cost = cost_from_metric(&space, p).unwrap();
    let f: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mu = random_measure(n, rng);
    let r = rng.gen::<f64>() * max_entry(&cost);
    PrimalProblem::new(f, mu, cost, r).unwrap()
}

/// Independent oracle for the primal optimum. Some optimal basic solution has
/// at most `n + 1` positive entries, so every source row sends its mass to a
/// single target except possibly one row split between two targets with the
/// budget binding. Enumerates all of them.
pub fn brute_force_primal(prob: &PrimalProblem) -> f64 {
    let n = prob.len();
    let mu = prob.mu().weights();
    let f = prob.f();
    let c = prob.cost();
    let r = prob.r();
    let mut best = f64::INFINITY;
    let mut map = vec![0usize; n];
    loop {
        let value: f64 = (0..n).map(|i| mu[i] * f[map[i]]).sum();
        let cost: f64 = (0..n).map(|i| mu[i] * c.get(i, map[i])).sum();
        if cost <= r + 1e-12 {
            best = best.min(value);
        }
        // split row s between map[s] and k
        for s in 0..n {
            let base_cost = cost - mu[s] * c.get(s, map[s]);
            let base_value = value - mu[s] * f[map[s]];
            for k in 0..n {
                let (c1, c2) = (c.get(s, map[s]), c.get(s, k));
                if c1 == c2 {
                    continue;
                }
                // mass fraction a on k so that the total cost equals r
                let a = ((r - base_cost) / mu[s] - c1) / (c2 - c1);
                if mu[s] > 0.0 && (0.0..=1.0).contains(&a) {
                    let v = base_value + mu[s] * ((1.0 - a) * f[map[s]] + a * f[k]);
                    best = best.min(v);
                }
            }
        }
        // next map in lexicographic order
        let mut pos = 0;
        loop {
            if pos == n {
                return best;
            }
            map[pos] += 1;
            if map[pos] < n {
                break;
            }
            map[pos] = 0;
            pos += 1;
        }
    }
}

/// Dense grid maximisation of `g` as an independent check of the dual; only a
/// lower bound on the true maximum, tight as the grid refines.
pub fn grid_dual_max(prob: &PrimalProblem, lambda_max: f64, points: usize) -> f64 {
    let n = prob.len();
    let g = |l: f64| -> f64 {
        let inner: f64 = (0..n)
            .map(|i| {
                let m = (0..n)
                    .map(|j| prob.f()[j] + l * prob.cost().get(i, j))
                    .fold(f64::INFINITY, f64::min);
                prob.mu().weights()[i] * m
            })
            .sum();
        inner - l * prob.r()
    };
    (0..points)
        .map(|k| g(lambda_max * k as f64 / (points - 1) as f64))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Tie-heavy instance: equally spaced grid, integer-valued `f`, some sources
/// without mass, and radii drawn from a small lattice.
pub fn degenerate_problem(n_lo: usize, n_hi: usize, rng: &mut impl Rng) -> PrimalProblem {
    let n = rng.gen_range(n_lo..=n_hi);
    let p = if rng.gen_bool(0.5) { 1.0 } else { 2.0 };
    let (_, cost) = ot_ball::space::grid_space(0.0, 1.0, n, p).unwrap();
    let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0..3) as f64).collect();
    let mut w: Vec<f64> = (0..n).map(|_| rng.gen_range(0..3) as f64).collect();
    if w.iter().all(|&v| v == 0.0) {
        w[0] = 1.0;
    }
    let s: f64 = w.iter().sum();
    let mu = Measure::new(w.into_iter().map(|v| v / s).collect()).unwrap();
    let r = rng.gen_range(0..8) as f64 / 8.0 * max_entry(&cost);
    PrimalProblem::new(f, mu, cost, r).unwrap()
}
