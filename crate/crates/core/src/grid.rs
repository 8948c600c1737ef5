//! Radial grids on [0, R] and quadrature for the measure r dr.
//!
//! Two weight sets live on a grid. `weights` integrate smooth f against r dr
//! with third-order accuracy in g = r·f (cell-averaged quadratic
//! interpolants, which reduce to Gregory end corrections on uniform grids).
//! `masses` are the lumped trapezoid weights r_i(h_{i-1} + h_i)/2 that the
//! discrete functionals are built on.

use serde::Serialize;

use crate::{Error, Result};

/// Smallest admissible number of intervals.
pub const MIN_INTERVALS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "grading", rename_all = "snake_case")]
pub enum Grading {
    Uniform,
    /// Consecutive spacings grow by `ratio`; ratio > 1 refines the core.
    Geometric { ratio: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialGrid {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    masses: Vec<f64>,
    grading: Grading,
}

/// Builds r₀ = 0 < r₁ < … < r_N = R with N = `intervals`.
pub fn make_grid(r_max: f64, intervals: usize, grading: Grading) -> Result<RadialGrid> {
    if !(r_max.is_finite() && r_max > 0.0) {
        return Err(Error::param("R", format!("must be positive and finite, got {r_max}")));
    }
    if intervals < MIN_INTERVALS {
        return Err(Error::GridTooSmall(format!(
            "need at least {MIN_INTERVALS} intervals, got {intervals}"
        )));
    }
    let nodes = match grading {
        Grading::Uniform => uniform_nodes(r_max, intervals),
        Grading::Geometric { ratio } => {
            if !(ratio.is_finite() && ratio > 0.0) {
                return Err(Error::param("ratio", format!("must be positive, got {ratio}")));
            }
            if (ratio - 1.0).abs() < 1e-14 {
                uniform_nodes(r_max, intervals)
            } else {
                geometric_nodes(r_max, intervals, ratio)
            }
        }
    };
    if nodes.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::GridTooSmall("grading produced non-increasing nodes".into()));
    }
    let weights = quadrature_weights(&nodes);
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::param("ratio", "grading too strong: quadrature weights turned negative"));
    }
    let masses = lumped_masses(&nodes);
    Ok(RadialGrid {
        nodes,
        weights,
        masses,
        grading,
    })
}

fn uniform_nodes(r_max: f64, intervals: usize) -> Vec<f64> {
    let h = r_max / intervals as f64;
    let mut nodes: Vec<f64> = (0..=intervals).map(|i| i as f64 * h).collect();
    nodes[intervals] = r_max;
    nodes
}

fn geometric_nodes(r_max: f64, intervals: usize, ratio: f64) -> Vec<f64> {
    // h_i = h₀ ratio^i with Σ h_i = R
    let h0 = r_max * (ratio - 1.0) / (ratio.powi(intervals as i32) - 1.0);
    let mut nodes = Vec::with_capacity(intervals + 1);
    let mut r = 0.0;
    let mut h = h0;
    nodes.push(0.0);
    for _ in 0..intervals {
        r += h;
        h *= ratio;
        nodes.push(r);
    }
    nodes[intervals] = r_max;
    nodes
}

/// ∫_a^b of the quadratic through (x0, x1, x2), as weights on the three values.
fn quadratic_cell_weights(x: [f64; 3], a: f64, b: f64) -> [f64; 3] {
    // Shift to a for conditioning.
    let x = [x[0] - a, x[1] - a, x[2] - a];
    let len = b - a;
    // ∫₀^len (t - p)(t - q) dt
    let prod = |p: f64, q: f64| len * len * len / 3.0 - (p + q) * len * len / 2.0 + p * q * len;
    [
        prod(x[1], x[2]) / ((x[0] - x[1]) * (x[0] - x[2])),
        prod(x[0], x[2]) / ((x[1] - x[0]) * (x[1] - x[2])),
        prod(x[0], x[1]) / ((x[2] - x[0]) * (x[2] - x[1])),
    ]
}

fn quadrature_weights(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len() - 1;
    let mut c = vec![0.0; n + 1];
    for i in 0..n {
        let (a, b) = (nodes[i], nodes[i + 1]);
        let mut add = |base: usize, scale: f64| {
            let w = quadratic_cell_weights([nodes[base], nodes[base + 1], nodes[base + 2]], a, b);
            for (j, wj) in w.iter().enumerate() {
                c[base + j] += scale * wj;
            }
        };
        match (i > 0, i + 2 <= n) {
            (true, true) => {
                add(i - 1, 0.5);
                add(i, 0.5);
            }
            (false, _) => add(i, 1.0),
            (true, false) => add(i - 1, 1.0),
        }
    }
    // weights for g = r f
    c.iter().zip(nodes).map(|(ci, ri)| ci * ri).collect()
}

fn lumped_masses(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len() - 1;
    let mut m = vec![0.0; n + 1];
    for i in 1..n {
        m[i] = nodes[i] * (nodes[i + 1] - nodes[i - 1]) / 2.0;
    }
    m[n] = nodes[n] * (nodes[n] - nodes[n - 1]) / 2.0;
    m
}

impl RadialGrid {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Trapezoid weights r_i(h_{i-1} + h_i)/2; m₀ = 0.
    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn grading(&self) -> Grading {
        self.grading
    }

    /// Number of nodes, N + 1.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals N.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn r_max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Width of interval i, r_{i+1} − r_i.
    pub fn h(&self, i: usize) -> f64 {
        self.nodes[i + 1] - self.nodes[i]
    }

    /// Index of the node closest to r.
    pub fn index_near(&self, r: f64) -> usize {
        let i = self.nodes.partition_point(|&x| x < r);
        if i == 0 {
            0
        } else if i >= self.nodes.len() {
            self.nodes.len() - 1
        } else if r - self.nodes[i - 1] <= self.nodes[i] - r {
            i - 1
        } else {
            i
        }
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len == self.len() {
            Ok(())
        } else {
            Err(Error::LengthMismatch {
                expected: self.len(),
                found: len,
            })
        }
    }
}

/// Σ w_i f_i ≈ ∫₀ᴿ f(r) r dr.
pub fn integrate(grid: &RadialGrid, samples: &[f64]) -> Result<f64> {
    grid.check_len(samples.len())?;
    Ok(grid.weights.iter().zip(samples).map(|(w, f)| w * f).sum())
}

/// Finite-difference weights for the `order`-th derivative at `at` from values
/// at `xs` (Fornberg's recursion).
pub(crate) fn fd_weights(xs: &[f64], at: f64, order: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; order + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - at;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - at;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[i][k] = c1 * (k as f64 * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                c[j][k] = (c4 * c[j][k] - k as f64 * c[j][k - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.into_iter().map(|row| row[order]).collect()
}

fn stencil(grid: &RadialGrid, start: usize, width: usize, at: usize, order: usize, u: &[f64]) -> f64 {
    let xs = &grid.nodes[start..start + width];
    fd_weights(xs, grid.nodes[at], order)
        .iter()
        .zip(&u[start..start + width])
        .map(|(w, v)| w * v)
        .sum()
}

/// Second-order u′: three-point central stencils inside, one-sided at the ends.
pub fn differentiate(grid: &RadialGrid, samples: &[f64]) -> Result<Vec<f64>> {
    grid.check_len(samples.len())?;
    let n = grid.len();
    if n < 3 {
        return Err(Error::GridTooSmall("differentiation needs at least 3 nodes".into()));
    }
    let mut out = Vec::with_capacity(n);
    out.push(stencil(grid, 0, 3, 0, 1, samples));
    for i in 1..n - 1 {
        out.push(stencil(grid, i - 1, 3, i, 1, samples));
    }
    out.push(stencil(grid, n - 3, 3, n - 1, 1, samples));
    Ok(out)
}

/// Second derivative at interior nodes: the derivative of [`differentiate`]'s
/// output (five-point wide stencil) away from the ends, four-point one-sided
/// stencils at nodes 1 and N−1. Entries 0 and N are 0.
pub(crate) fn second_derivative(grid: &RadialGrid, u: &[f64], du: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut out = vec![0.0; n];
    if n < 6 {
        return out;
    }
    for i in 2..n - 2 {
        out[i] = stencil(grid, i - 1, 3, i, 1, du);
    }
    out[1] = stencil(grid, 1, 4, 1, 2, u);
    out[n - 2] = stencil(grid, n - 5, 4, n - 2, 2, u);
    out
}
