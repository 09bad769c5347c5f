//! Finite metric spaces and the transport costs derived from them.
//!
//! A [`FiniteSpace`] is the desk-scale stand-in for a compact metric space:
//! `n` labelled points with a validated distance matrix. A [`CostMatrix`]
//! holds the transport cost `c(x_i, x_j)`, typically `d(x_i, x_j)^p`.

use crate::error::{Error, Result};

/// Relative slack allowed on the triangle inequality.
pub const TRIANGLE_REL_TOL: f64 = 1e-12;

/// How distances between points are measured.
#[derive(Debug, Clone, PartialEq)]
pub enum Metric {
    Euclidean,
    Manhattan,
    /// A full distance matrix supplied by the caller.
    Explicit(Vec<Vec<f64>>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteSpace {
    labels: Vec<String>,
    coords: Option<Vec<Vec<f64>>>,
    dist: Vec<Vec<f64>>,
}

impl FiniteSpace {
    /// Builds a space from a distance matrix, checking every metric axiom.
    pub fn from_matrix(dist: Vec<Vec<f64>>) -> Result<Self> {
        validate_metric(&dist)?;
        let labels = default_labels(dist.len());
        Ok(Self {
            labels,
            coords: None,
            dist,
        })
    }

    /// Builds a space from a point cloud under the Euclidean or Manhattan metric.
    pub fn from_points(points: Vec<Vec<f64>>, metric: &Metric) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptySpace);
        }
        let dim = points[0].len();
        for (i, p) in points.iter().enumerate() {
            if p.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "point {i} has {} coordinates, expected {dim}",
                    p.len()
                )));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonMetric(format!("point {i} has a non-finite coordinate")));
            }
        }
        let n = points.len();
        let mut dist = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = match metric {
                    Metric::Euclidean => points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt(),
                    Metric::Manhattan => points[i]
                        .iter()
                        .zip(&points[j])
                        .map(|(a, b)| (a - b).abs())
                        .sum(),
                    Metric::Explicit(_) => unreachable!("explicit metric handled by build_space"),
                };
                dist[i][j] = d;
                dist[j][i] = d;
            }
        }
        validate_metric(&dist)?;
        Ok(Self {
            labels: default_labels(n),
            coords: Some(points),
            dist,
        })
    }

    /// Replaces the default `x0, x1, ...` labels.
    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                self.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.dist.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dist.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn coords(&self) -> Option<&[Vec<f64>]> {
        self.coords.as_deref()
    }

    pub fn dist(&self) -> &[Vec<f64>] {
        &self.dist
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.dist[i][j]
    }
}

fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("x{i}")).collect()
}

fn validate_metric(dist: &[Vec<f64>]) -> Result<()> {
    let n = dist.len();
    if n == 0 {
        return Err(Error::EmptySpace);
    }
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::NonMetric(format!(
                "row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        for (j, &d) in row.iter().enumerate() {
            if !d.is_finite() || d < 0.0 {
                return Err(Error::NonMetric(format!("dist[{i}][{j}] = {d} is not a finite nonnegative number")));
            }
        }
        if row[i] != 0.0 {
            return Err(Error::NonMetric(format!("dist[{i}][{i}] = {} is nonzero", row[i])));
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if dist[i][j] != dist[j][i] {
                return Err(Error::NonMetric(format!(
                    "asymmetric: dist[{i}][{j}] = {} but dist[{j}][{i}] = {}",
                    dist[i][j], dist[j][i]
                )));
            }
            if dist[i][j] == 0.0 {
                return Err(Error::NonMetric(format!("distinct points {i} and {j} are at distance 0")));
            }
        }
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let via = dist[i][k] + dist[k][j];
                if dist[i][j] > via * (1.0 + TRIANGLE_REL_TOL) {
                    return Err(Error::NonMetric(format!(
                        "triangle inequality fails: dist[{i}][{j}] = {} > dist[{i}][{k}] + dist[{k}][{j}] = {via}",
                        dist[i][j]
                    )));
                }
            }
        }
    }
    Ok(())
}

/// Builds a validated space. For [`Metric::Explicit`] the points are ignored
/// except as optional coordinates (they must match the matrix size if given).
pub fn build_space(points: Vec<Vec<f64>>, metric: Metric) -> Result<FiniteSpace> {
    match metric {
        Metric::Explicit(dist) => {
            let mut space = FiniteSpace::from_matrix(dist)?;
            if !points.is_empty() {
                if points.len() != space.len() {
                    return Err(Error::DimensionMismatch(format!(
                        "{} points for a {}x{} distance matrix",
                        points.len(),
                        space.len(),
                        space.len()
                    )));
                }
                space.coords = Some(points);
            }
            Ok(space)
        }
        other => FiniteSpace::from_points(points, &other),
    }
}

/// Transport cost `c(x_i, x_j)` on a finite space.
///
/// Entries are finite and nonnegative and the diagonal is zero. The matrix
/// need not be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    c: Vec<Vec<f64>>,
    exponent_p: Option<f64>,
}

impl CostMatrix {
    pub fn new(c: Vec<Vec<f64>>) -> Result<Self> {
        let n = c.len();
        if n == 0 {
            return Err(Error::EmptySpace);
        }
        for (i, row) in c.iter().enumerate() {
            if row.len() != n {
                return Err(Error::BadCost(format!("row {i} has {} entries, expected {n}", row.len())));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::BadCost(format!("c[{i}][{j}] = {v} is not a finite nonnegative number")));
                }
            }
            if row[i] != 0.0 {
                return Err(Error::BadCost(format!("c[{i}][{i}] = {} must be zero", row[i])));
            }
        }
        Ok(Self { c, exponent_p: None })
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        self.c.is_empty()
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.c
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.c[i]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.c[i][j]
    }

    /// `Some(p)` when the matrix was built as `d^p`.
    pub fn exponent_p(&self) -> Option<f64> {
        self.exponent_p
    }

    pub fn is_symmetric(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| (0..i).all(|j| self.c[i][j] == self.c[j][i]))
    }

    /// `Σ_i w_i · max_j c_ij`: the cost of sending every source to its
    /// farthest target. Any radius at least this large makes the budget slack.
    pub fn max_expected_row_cost(&self, weights: &[f64]) -> f64 {
        self.c
            .iter()
            .zip(weights)
            .map(|(row, w)| w * row.iter().cloned().fold(0.0, f64::max))
            .sum()
    }
}

/// `c[i][j] = dist[i][j]^p`.
pub fn cost_from_metric(space: &FiniteSpace, p: f64) -> Result<CostMatrix> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::BadExponent(p));
    }
    let c = space
        .dist()
        .iter()
        .map(|row| row.iter().map(|&d| if p == 1.0 { d } else { d.powf(p) }).collect())
        .collect();
    Ok(CostMatrix {
        c,
        exponent_p: Some(p),
    })
}

/// `n` equally spaced points on `[a, b]` with cost `|x - y|^p`.
pub fn grid_space(a: f64, b: f64, n: usize, p: f64) -> Result<(FiniteSpace, CostMatrix)> {
    if !(a.is_finite() && b.is_finite() && a < b) {
        return Err(Error::BadInterval { a, b });
    }
    if n < 2 {
        return Err(Error::BadCount(n));
    }
    let step = (b - a) / (n - 1) as f64;
    let points = (0..n)
        .map(|k| {
            // pin the last point to b exactly
            let x = if k == n - 1 { b } else { a + k as f64 * step };
            vec![x]
        })
        .collect();
    let space = FiniteSpace::from_points(points, &Metric::Euclidean)?;
    let cost = cost_from_metric(&space, p)?;
    Ok((space, cost))
}
