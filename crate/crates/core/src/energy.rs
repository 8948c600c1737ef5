//! Discrete action functionals, their exact nodal derivatives, the pointwise
//! auxiliary functions and the plateau homogenization data.
//!
//! Every functional is assembled as
//! ½ Σ_cells r_{i+½} (u_{i+1} − u_i)²/h_i + Σ_i m_i V(r_i, u_i)
//! with lumped masses m_i, and `partials` is its exact derivative, so a
//! line-searched descent sees exactly the function it differentiates.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::grid::{self, RadialGrid};
use crate::model::{log_ratio, Nonlinearity, RegimeKind, VortexProblem};
use crate::{Error, Result};

/// Radial samples u(r_i) on a shared grid. u(0) = 0 always.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    grid: Arc<RadialGrid>,
    values: Vec<f64>,
}

impl Profile {
    pub fn new(grid: Arc<RadialGrid>, values: Vec<f64>) -> Result<Self> {
        grid.check_len(values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("profile values"));
        }
        if values[0] != 0.0 {
            return Err(Error::ProfileInvariant(format!(
                "u(0) must vanish, got {}",
                values[0]
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: Arc<RadialGrid>) -> Self {
        let values = vec![0.0; grid.len()];
        Self { grid, values }
    }

    /// Samples `f` at the nodes; the origin value is forced to 0.
    pub fn from_fn(grid: Arc<RadialGrid>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let mut values: Vec<f64> = grid.nodes().iter().map(|&r| f(r)).collect();
        values[0] = 0.0;
        Self::new(grid, values)
    }

    /// Same grid, new values.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(Arc::clone(&self.grid), values)
    }

    pub fn grid(&self) -> &RadialGrid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<RadialGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Index and value of the largest sample.
    pub fn argmax(&self) -> (usize, f64) {
        self.values
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best })
    }

    pub fn abs(&self) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v.abs()).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            grid: Arc::clone(&self.grid),
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

/// Cutoff φ and source η for u = v + φ in the plateau problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HomogenizationData {
    pub phi: Vec<f64>,
    pub eta: Vec<f64>,
    pub k: f64,
}

/// Quintic smoothstep S on [0, 1] with S′, S″.
fn smoothstep(x: f64) -> (f64, f64, f64) {
    let x = x.clamp(0.0, 1.0);
    let s = x * x * x * (10.0 - 15.0 * x + 6.0 * x * x);
    let ds = 30.0 * x * x * (1.0 - x) * (1.0 - x);
    let d2s = 60.0 * x * (1.0 - x) * (1.0 - 2.0 * x);
    (s, ds, d2s)
}

/// φ(r) = k S(r − 1), so φ = 0 on [0, 1] and φ = k on [2, ∞); η = φ″ + φ′/r − n²φ/r².
pub fn phi_eta(k: f64, n: i32, r: f64) -> (f64, f64) {
    let n2 = (n as f64) * (n as f64);
    let (s, ds, d2s) = smoothstep(r - 1.0);
    let phi = k * s;
    if r <= 1.0 {
        return (phi, 0.0);
    }
    (phi, k * (d2s + ds / r) - n2 * phi / (r * r))
}

pub fn make_homogenization(k: f64, n: i32, grid: &RadialGrid) -> Result<HomogenizationData> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::param("k", format!("must be positive, got {k}")));
    }
    if grid.r_max() <= 2.0 {
        return Err(Error::GridTooSmall(format!(
            "plateau cutoff needs R > 2, got R = {}",
            grid.r_max()
        )));
    }
    let (phi, eta) = grid.nodes().iter().map(|&r| phi_eta(k, n, r)).unzip();
    Ok(HomogenizationData { phi, eta, k })
}

/// P(s) = s⁴ ln(s²/β) − s⁴/2
pub fn p_log(s: f64, beta: f64) -> f64 {
    let s4 = s * s * s * s;
    s4 * log_ratio(s * s, beta) - 0.5 * s4
}

/// Q(s) = s²(2ω + αs² ln(s²/β) − (α/2)s²)
pub fn q_log(s: f64, omega: f64, alpha: f64, beta: f64) -> f64 {
    let s2 = s * s;
    s2 * (2.0 * omega + alpha * s2 * log_ratio(s2, beta) - 0.5 * alpha * s2)
}

/// g(t) = 2ωt + 2αt³ ln(t²/β) for t ≥ 0, 2ωt for t < 0.
pub fn g_piecewise(t: f64, omega: f64, alpha: f64, beta: f64) -> f64 {
    if t >= 0.0 {
        2.0 * omega * t + 2.0 * alpha * t * t * t * log_ratio(t * t, beta)
    } else {
        2.0 * omega * t
    }
}

/// Primitive of [`g_piecewise`] with G(0) = 0.
pub fn g_primitive(t: f64, omega: f64, alpha: f64, beta: f64) -> f64 {
    let t2 = t * t;
    if t >= 0.0 {
        omega * t2 + 0.5 * alpha * t2 * t2 * log_ratio(t2, beta) - 0.25 * alpha * t2 * t2
    } else {
        omega * t2
    }
}

/// q(t) = (1/(s²(γ−1)(γ−2)))(1 − (1+γst²)/(1+st²)^γ) − t⁴/((γ−2)(1+st²)^γ).
///
/// Evaluated as (1/s²)∫₀^{st²} y(1+y)^(−γ) dy, by its power series for small
/// arguments where the closed form cancels catastrophically.
pub fn q_sat(t: f64, s: f64, gamma: f64) -> f64 {
    let x = s * t * t;
    if x < 0.1 {
        // Σ_k C(−γ, k) x^{k+2}/(k+2)
        let mut coeff = 1.0;
        let mut pow = x * x;
        let mut sum = 0.0;
        for k in 0..200 {
            let term = coeff * pow / (k as f64 + 2.0);
            sum += term;
            if term.abs() <= 1e-17 * sum.abs() {
                break;
            }
            coeff *= -(gamma + k as f64) / (k as f64 + 1.0);
            pow *= x;
        }
        sum / (s * s)
    } else {
        let c = 1.0 / (s * s * (gamma - 1.0) * (gamma - 2.0));
        let denom = (1.0 + x).powf(gamma);
        let t4 = t * t * t * t;
        c * (1.0 - (1.0 + gamma * x) / denom) - t4 / ((gamma - 2.0) * denom)
    }
}

/// Which discrete functional to evaluate or differentiate.
#[derive(Debug, Clone, Copy)]
pub enum Functional<'a> {
    /// I(u), logarithmic zero–zero problem.
    Log,
    /// I₁(v), logarithmic plateau problem in the homogenized unknown v.
    Plateau(&'a HomogenizationData),
    /// J(u), saturable problem.
    Sat,
    /// P(u) = 2π∫u² r dr.
    BeamPower,
}

/// Pointwise density V(r_i, u_i) and the kinetic flag, resolved once.
#[derive(Debug, Clone)]
pub(crate) enum Density<'a> {
    Log {
        n2: f64,
        omega: f64,
        alpha: f64,
        beta: f64,
    },
    Plateau {
        n2: f64,
        omega: f64,
        alpha: f64,
        beta: f64,
        gk: f64,
        phi: &'a [f64],
        eta: Vec<f64>,
    },
    Sat {
        n2: f64,
        s: f64,
        gamma: f64,
    },
    Power,
}

impl<'a> Density<'a> {
    pub(crate) fn resolve(problem: &VortexProblem, functional: Functional<'a>, grid: &RadialGrid) -> Result<Self> {
        let n2 = problem.n2();
        let len = grid.len();
        match functional {
            Functional::Log => {
                problem.require(RegimeKind::ZeroZero)?;
                let (alpha, beta) = problem.log_params()?;
                let omega = omega_of(problem)?;
                Ok(Density::Log {
                    n2,
                    omega,
                    alpha,
                    beta,
                })
            }
            Functional::Plateau(hom) => {
                problem.require(RegimeKind::ZeroPlateau)?;
                let (alpha, beta) = problem.log_params()?;
                let omega = omega_of(problem)?;
                if hom.phi.len() != len || hom.eta.len() != len {
                    return Err(Error::LengthMismatch {
                        expected: len,
                        found: hom.phi.len(),
                    });
                }
                Ok(Density::Plateau {
                    n2,
                    omega,
                    alpha,
                    beta,
                    gk: g_primitive(hom.k, omega, alpha, beta),
                    phi: &hom.phi,
                    eta: discrete_source(grid, hom, n2),
                })
            }
            Functional::Sat => {
                problem.require(RegimeKind::PowerConstrained)?;
                let (s, gamma) = problem.sat_params()?;
                Ok(Density::Sat { n2, s, gamma })
            }
            Functional::BeamPower => Ok(Density::Power),
        }
    }

    #[inline]
    fn value(&self, i: usize, r: f64, u: f64) -> f64 {
        match *self {
            Density::Log {
                n2,
                omega,
                alpha,
                beta,
            } => 0.5 * ((n2 / (r * r) + 2.0 * omega) * u * u + alpha * p_log(u, beta)),
            Density::Plateau {
                n2,
                omega,
                alpha,
                beta,
                gk,
                phi,
                ref eta,
            } => {
                0.5 * n2 * u * u / (r * r) + g_primitive(u + phi[i], omega, alpha, beta) - gk - eta[i] * u
            }
            Density::Sat { n2, s, gamma } => 0.5 * n2 * u * u / (r * r) + q_sat(u, s, gamma),
            Density::Power => 2.0 * PI * u * u,
        }
    }

    #[inline]
    fn derivative(&self, i: usize, r: f64, u: f64) -> f64 {
        match *self {
            Density::Log {
                n2,
                omega,
                alpha,
                beta,
            } => (n2 / (r * r) + 2.0 * omega) * u + 2.0 * alpha * u * u * u * log_ratio(u * u, beta),
            Density::Plateau {
                n2,
                omega,
                alpha,
                beta,
                phi,
                ref eta,
                ..
            } => n2 * u / (r * r) + g_piecewise(u + phi[i], omega, alpha, beta) - eta[i],
            Density::Sat { n2, s, gamma } => {
                n2 * u / (r * r) + 2.0 * u * u * u / (1.0 + s * u * u).powf(gamma)
            }
            Density::Power => 4.0 * PI * u,
        }
    }

    fn has_kinetic(&self) -> bool {
        !matches!(self, Density::Power)
    }
}

/// η_h = −(Kφ)/m − n²φ/r², the plateau source built with the same stencil as
/// the kinetic term. It equals the closed-form η wherever the stencil does not
/// straddle a seam of φ (r = 1, 2), and differs by O(h²) elsewhere on the ramp;
/// sampling the closed form instead leaves O(h) residual spikes at the seams
/// because φ‴ jumps there.
pub(crate) fn discrete_source(grid: &RadialGrid, hom: &HomogenizationData, n2: f64) -> Vec<f64> {
    let r = grid.nodes();
    let m = grid.masses();
    let last = r.len() - 1;
    let mut k_phi = vec![0.0; r.len()];
    kinetic_partials(grid, &hom.phi, &mut k_phi);
    (0..r.len())
        .map(|i| {
            if i == 0 || i == last {
                hom.eta[i]
            } else {
                -k_phi[i] / m[i] - n2 * hom.phi[i] / (r[i] * r[i])
            }
        })
        .collect()
}

fn omega_of(problem: &VortexProblem) -> Result<f64> {
    problem.omega().ok_or(Error::RegimeMismatch {
        expected: "problem with given ω",
        found: "ω unknown",
    })
}

/// ½ Σ r_{i+½}(u_{i+1} − u_i)²/h_i
pub(crate) fn kinetic(grid: &RadialGrid, u: &[f64]) -> f64 {
    let r = grid.nodes();
    let mut sum = CompensatedSum::default();
    for i in 0..u.len() - 1 {
        let du = u[i + 1] - u[i];
        sum.add(0.5 * (r[i] + r[i + 1]) * du * du / (r[i + 1] - r[i]));
    }
    0.5 * sum.value()
}

/// Neumaier summation. Line searches near convergence compare energies whose
/// difference is far below the rounding of a naive running sum.
#[derive(Debug, Default, Clone, Copy)]
pub(crate) struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    #[inline]
    pub(crate) fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub(crate) fn value(self) -> f64 {
        self.sum + self.carry
    }
}

/// Adds ∂K/∂u_i to `out`.
fn kinetic_partials(grid: &RadialGrid, u: &[f64], out: &mut [f64]) {
    let r = grid.nodes();
    for i in 0..u.len() - 1 {
        let flux = 0.5 * (r[i] + r[i + 1]) * (u[i + 1] - u[i]) / (r[i + 1] - r[i]);
        out[i] -= flux;
        out[i + 1] += flux;
    }
}

pub(crate) fn discrete_value(grid: &RadialGrid, density: &Density<'_>, u: &[f64]) -> f64 {
    let r = grid.nodes();
    let m = grid.masses();
    let mut sum = CompensatedSum::default();
    if density.has_kinetic() {
        sum.add(kinetic(grid, u));
    }
    for i in 1..u.len() {
        sum.add(m[i] * density.value(i, r[i], u[i]));
    }
    sum.value()
}

/// Exact ∂F/∂u_i; entries at the pinned nodes 0 and N are zeroed.
pub(crate) fn discrete_partials(grid: &RadialGrid, density: &Density<'_>, u: &[f64]) -> Vec<f64> {
    let r = grid.nodes();
    let m = grid.masses();
    let mut out = vec![0.0; u.len()];
    if density.has_kinetic() {
        kinetic_partials(grid, u, &mut out);
    }
    for i in 1..u.len() {
        out[i] += m[i] * density.derivative(i, r[i], u[i]);
    }
    let last = out.len() - 1;
    out[0] = 0.0;
    out[last] = 0.0;
    out
}

fn checked<'a>(problem: &VortexProblem, functional: Functional<'a>, profile: &Profile) -> Result<Density<'a>> {
    profile.grid().check_len(profile.values().len())?;
    Density::resolve(problem, functional, profile.grid())
}

/// Discrete value of the selected functional.
pub fn evaluate(problem: &VortexProblem, functional: Functional<'_>, profile: &Profile) -> Result<f64> {
    let density = checked(problem, functional, profile)?;
    Ok(discrete_value(profile.grid(), &density, profile.values()))
}

/// Raw nodal partial derivatives ∂F/∂u_i (boundary entries 0).
pub fn partials(problem: &VortexProblem, functional: Functional<'_>, profile: &Profile) -> Result<Vec<f64>> {
    let density = checked(problem, functional, profile)?;
    Ok(discrete_partials(profile.grid(), &density, profile.values()))
}

/// Gradient in the discrete r dr inner product ⟨a, b⟩ = Σ m_i a_i b_i, i.e.
/// ∂F/∂u_i / m_i, with boundary entries 0.
pub fn gradient(problem: &VortexProblem, functional: Functional<'_>, profile: &Profile) -> Result<Vec<f64>> {
    let mut p = partials(problem, functional, profile)?;
    let m = profile.grid().masses();
    let last = p.len() - 1;
    for i in 1..last {
        p[i] /= m[i];
    }
    Ok(p)
}

/// ⟨a, b⟩ = Σ m_i a_i b_i, the lumped form of ∫ab r dr.
pub fn inner(grid: &RadialGrid, a: &[f64], b: &[f64]) -> f64 {
    grid.masses().iter().zip(a).zip(b).map(|((m, x), y)| m * x * y).sum()
}

/// ‖u‖ = (∫(u′² + (n²/r² + 2ω)u²) r dr)^(1/2) for the logarithmic zero–zero problem.
pub fn weighted_norm(problem: &VortexProblem, profile: &Profile) -> Result<f64> {
    problem.require(RegimeKind::ZeroZero)?;
    let omega = omega_of(problem)?;
    if omega <= 0.0 {
        return Err(Error::param("omega", "weighted norm needs ω > 0"));
    }
    let grid = profile.grid();
    let (r, m, u) = (grid.nodes(), grid.masses(), profile.values());
    let n2 = problem.n2();
    let mut sq = 2.0 * kinetic(grid, u);
    for i in 1..u.len() {
        sq += m[i] * (n2 / (r[i] * r[i]) + 2.0 * omega) * u[i] * u[i];
    }
    Ok(sq.sqrt())
}

/// I(u) = ½∫{u′² + (n²/r² + 2ω)u² + αu⁴ ln(u²/β) − (α/2)u⁴} r dr
pub fn action_log(problem: &VortexProblem, profile: &Profile) -> Result<f64> {
    evaluate(problem, Functional::Log, profile)
}

/// I₁(v) = ∫{½v′² + ½(n²/r²)v² + G(v+φ) − G(k) − ηv} r dr
pub fn action_plateau(problem: &VortexProblem, v: &Profile, hom: &HomogenizationData) -> Result<f64> {
    evaluate(problem, Functional::Plateau(hom), v)
}

/// J(u) = ½∫(u′² + (n²/r²)u²) r dr + ∫q(u) r dr
pub fn action_sat(problem: &VortexProblem, profile: &Profile) -> Result<f64> {
    evaluate(problem, Functional::Sat, profile)
}

/// P(u) = 2π∫u² r dr (lumped masses, matching the constraint the solver enforces).
pub fn beam_power(profile: &Profile) -> f64 {
    let u = profile.values();
    2.0 * PI * inner(profile.grid(), u, u)
}

/// u″ + u′/r − (n²/r²)u − 2ωu − 2ψ(u)u at interior nodes, from second-order
/// differences independent of the functional's stencil. End entries are 0.
pub fn el_residual(problem: &VortexProblem, profile: &Profile, omega: f64) -> Result<Vec<f64>> {
    el_residual_with(problem.nonlinearity(), problem.n2(), profile, omega)
}

pub(crate) fn el_residual_with(nl: &Nonlinearity, n2: f64, profile: &Profile, omega: f64) -> Result<Vec<f64>> {
    let grid = profile.grid();
    let u = profile.values();
    let du = grid::differentiate(grid, u)?;
    let d2u = grid::second_derivative(grid, u, &du);
    let r = grid.nodes();
    let mut res = vec![0.0; u.len()];
    for i in 1..u.len() - 1 {
        let psi = nl.psi_unchecked(u[i]);
        res[i] = d2u[i] + du[i] / r[i] - n2 * u[i] / (r[i] * r[i]) - 2.0 * omega * u[i] - 2.0 * psi * u[i];
    }
    Ok(res)
}

/// max_i (r_i/(1+r_i))|res_i| / max|u|; the weight damps the r⁻¹, r⁻² factors
/// at the core where u ~ r^|n| leaves only truncation error of lower order.
pub fn scaled_residual_norm(profile: &Profile, residual: &[f64]) -> f64 {
    scaled_sup(profile.grid(), profile.values(), residual)
}

pub(crate) fn scaled_sup(grid: &RadialGrid, u: &[f64], residual: &[f64]) -> f64 {
    let weighted = grid
        .nodes()
        .iter()
        .zip(residual)
        .map(|(&r, x)| r / (1.0 + r) * x.abs())
        .fold(0.0, f64::max);
    let scale = u.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
    if scale == 0.0 {
        weighted
    } else {
        weighted / scale
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{integrate, make_grid, Grading};
    use crate::model::k_plateau;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid(r: f64, n: usize) -> Arc<RadialGrid> {
        Arc::new(make_grid(r, n, Grading::Uniform).unwrap())
    }

    fn tent(grid: Arc<RadialGrid>) -> Profile {
        Profile::from_fn(grid, |r| if r <= 1.0 { r } else { (2.0 - r).max(0.0) }).unwrap()
    }

    fn log_problem() -> VortexProblem {
        VortexProblem::log_zero_zero(1, 1.0, 1.0, 0.2, 20.0).unwrap()
    }

    fn sat_problem() -> VortexProblem {
        VortexProblem::sat_constrained(1, 1.0, 3.0, 4.0 * PI / 3.0, 20.0).unwrap()
    }

    fn random_profile(grid: &Arc<RadialGrid>, rng: &mut ChaCha8Rng, signed: bool) -> Profile {
        let n = grid.len();
        let mut v: Vec<f64> = (0..n)
            .map(|_| if signed { rng.gen_range(-1.5..1.5) } else { rng.gen_range(0.0..1.5) })
            .collect();
        v[0] = 0.0;
        v[n - 1] = 0.0;
        Profile::new(Arc::clone(grid), v).unwrap()
    }

    #[test]
    fn profile_invariants() {
        let g = grid(1.0, 16);
        assert!(Profile::new(Arc::clone(&g), vec![0.0; 3]).is_err());
        let mut v = vec![0.0; 17];
        v[0] = 1.0;
        assert!(matches!(Profile::new(Arc::clone(&g), v), Err(Error::ProfileInvariant(_))));
        let mut v = vec![0.0; 17];
        v[4] = f64::NAN;
        assert!(Profile::new(g, v).is_err());
    }

    #[test]
    fn aux_examples() {
        let edge = 0.25f64.exp();
        assert!(p_log(edge, 1.0).abs() < 1e-14);
        assert!(p_log(edge * 1.001, 1.0) > 0.0 && p_log(edge * 0.999, 1.0) < 0.0);
        let b: f64 = 2.0;
        let edge_b = 0.25f64.exp() * b.sqrt();
        assert!(p_log(edge_b * 1.001, b) > 0.0 && p_log(edge_b * 0.999, b) < 0.0);
        assert_eq!(q_log(0.0, 0.2, 1.0, 1.0), 0.0);
        assert!((q_log(1.0, 0.2, 1.0, 1.0) + 0.1).abs() < 1e-15);
        assert_eq!(q_sat(0.0, 1.0, 3.0), 0.0);
        assert!((q_sat(1.0, 1.0, 3.0) - 0.125).abs() < 1e-15);
    }

    /// Direct transcription of the closed form for q.
    fn q_closed(t: f64, s: f64, gamma: f64) -> f64 {
        let c = 1.0 / (s * s * (gamma - 1.0) * (gamma - 2.0));
        let d = (1.0 + s * t * t).powf(gamma);
        c * (1.0 - (1.0 + gamma * s * t * t) / d) - t.powi(4) / ((gamma - 2.0) * d)
    }

    #[test]
    fn q_sat_series_agrees_with_closed_form() {
        for &(s, gamma) in &[(1.0f64, 3.0f64), (0.3, 2.2), (4.0, 7.5)] {
            for &x in &[0.02, 0.05, 0.0999, 0.1, 0.2] {
                let t: f64 = (x / s).sqrt();
                let (a, b) = (q_sat(t, s, gamma), q_closed(t, s, gamma));
                assert!((a - b).abs() <= 1e-9 * b.abs(), "{s} {gamma} {x}: {a} {b}");
            }
        }
    }

    #[test]
    fn q_sat_nonnegative_on_random_draws() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100_000 {
            let t = rng.gen_range(-10.0..10.0);
            let s = rng.gen_range(0.01..10.0);
            let gamma = rng.gen_range(2.0001..10.0);
            assert!(q_sat(t, s, gamma) >= 0.0);
        }
    }

    #[test]
    fn g_and_primitive() {
        let (alpha, beta, omega) = (1.0, 1.0, 0.1);
        let k = k_plateau(alpha, beta, omega).unwrap();
        assert!(g_piecewise(k, omega, alpha, beta).abs() < 1e-12);
        assert_eq!(g_piecewise(-1.0, omega, alpha, beta), -2.0 * omega);
        let h = 1e-5;
        for i in 0..=400 {
            let t = -2.0 + 4.0 * i as f64 / 400.0;
            let fd = (g_primitive(t + h, omega, alpha, beta) - g_primitive(t - h, omega, alpha, beta)) / (2.0 * h);
            assert!((fd - g_piecewise(t, omega, alpha, beta)).abs() < 1e-8, "t={t}");
        }
    }

    #[test]
    fn g_primitive_coercive_about_k() {
        let (alpha, beta, omega) = (1.0, 1.0, 0.2);
        let k = k_plateau(alpha, beta, omega).unwrap();
        let gk = g_primitive(k, omega, alpha, beta);
        let cbar = (0..=6000)
            .map(|i| -3.0 + 6.0 * i as f64 / 6000.0)
            .filter(|s| (s - k).abs() > 1e-3)
            .map(|s| (g_primitive(s, omega, alpha, beta) - gk) / ((s - k) * (s - k)))
            .fold(f64::INFINITY, f64::min);
        assert!(cbar > 0.0, "fitted c̄ = {cbar}");
    }

    #[test]
    fn homogenization_examples() {
        let g = make_grid(10.0, 1000, Grading::Uniform).unwrap();
        let hom = make_homogenization(1.0, 1, &g).unwrap();
        let at = |r: f64| g.index_near(r);
        assert_eq!(hom.phi[at(0.5)], 0.0);
        assert_eq!(hom.phi[at(3.0)], 1.0);
        assert!((hom.eta[at(5.0)] + 0.04).abs() < 1e-12);
        for (i, &r) in g.nodes().iter().enumerate() {
            if r <= 1.0 {
                assert_eq!(hom.eta[i], 0.0);
            }
            if r >= 2.0 {
                assert!((hom.eta[i] * r * r + 1.0).abs() < 1e-10);
            }
        }
        assert!(hom.phi.windows(2).all(|w| w[1] >= w[0]));
        let short = make_grid(2.0, 100, Grading::Uniform).unwrap();
        assert!(make_homogenization(1.0, 1, &short).is_err());
    }

    #[test]
    fn eta_matches_finite_differences_of_phi() {
        let (k, n) = (0.9, 2);
        let h = 1e-4;
        for i in 1..100 {
            let r = 1.0 + i as f64 / 100.0;
            let phi = |r| phi_eta(k, n, r).0;
            let d1 = (phi(r + h) - phi(r - h)) / (2.0 * h);
            let d2 = (phi(r + h) - 2.0 * phi(r) + phi(r - h)) / (h * h);
            let eta = d2 + d1 / r - 4.0 * phi(r) / (r * r);
            assert!((eta - phi_eta(k, n, r).1).abs() < 1e-5);
        }
    }

    #[test]
    fn zero_profile_is_critical() {
        let g = grid(20.0, 400);
        let z = Profile::zeros(Arc::clone(&g));
        assert_eq!(action_log(&log_problem(), &z).unwrap(), 0.0);
        assert_eq!(weighted_norm(&log_problem(), &z).unwrap(), 0.0);
        assert!(gradient(&log_problem(), Functional::Log, &z).unwrap().iter().all(|&x| x == 0.0));
        assert_eq!(action_sat(&sat_problem(), &z).unwrap(), 0.0);
        assert_eq!(beam_power(&z), 0.0);
        assert!(el_residual(&log_problem(), &z, 0.2).unwrap().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn weighted_norm_tent() {
        let problem = VortexProblem::log_zero_zero(1, 1.0, 1.0, 0.2, 2.0).unwrap();
        let g = grid(2.0, 4000);
        let u = tent(Arc::clone(&g));
        let norm = weighted_norm(&problem, &u).unwrap();
        // ∫u′² r dr = 2, ∫u²/r dr = 4 ln 2 − 2, 2ω∫u² r dr = 0.4·2/3
        let exact = (4.0 * 2f64.ln() + 0.4 * 2.0 / 3.0).sqrt();
        assert!((norm - exact).abs() < 1e-6 * exact, "{norm} {exact}");
        let doubled = u.scaled(2.0);
        assert!((weighted_norm(&problem, &doubled).unwrap() - 2.0 * norm).abs() < 1e-12 * norm);
    }

    #[test]
    fn sat_tent_values() {
        let g = grid(2.0, 4000);
        let u = tent(g);
        assert!((beam_power(&u) - 4.0 * PI / 3.0).abs() < 1e-6);
        let j = action_sat(&sat_problem(), &u).unwrap();
        assert!(j <= 1.0 + (2.0 * 2f64.ln() - 1.0) + 1.0);
        assert!(j > 0.0);
    }

    #[test]
    fn action_log_decomposition() {
        let problem = log_problem();
        let g = grid(20.0, 800);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_profile(&g, &mut rng, true);
            let i = action_log(&problem, &u).unwrap();
            let norm = weighted_norm(&problem, &u).unwrap();
            let p: f64 = g.masses().iter().zip(u.values()).map(|(m, &s)| m * p_log(s, 1.0)).sum();
            let rhs = 0.5 * norm * norm + 0.5 * p;
            assert!((i - rhs).abs() <= 1e-10 * i.abs().max(rhs.abs()));
        }
    }

    #[test]
    fn beam_power_gradient_is_linear() {
        let g = grid(5.0, 200);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = random_profile(&g, &mut rng, true);
        let grad = gradient(&sat_problem(), Functional::BeamPower, &u).unwrap();
        let n = g.len();
        for i in 1..n - 1 {
            assert!((grad[i] - 4.0 * PI * u.values()[i]).abs() < 1e-12);
        }
        assert_eq!(grad[0], 0.0);
        assert_eq!(grad[n - 1], 0.0);
    }

    fn fd_check(problem: &VortexProblem, f: Functional<'_>, g: &Arc<RadialGrid>, seed: u64, signed: bool) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let u = random_profile(g, &mut rng, signed);
            let h = random_profile(g, &mut rng, true);
            let grad = gradient(problem, f, &u).unwrap();
            let predicted = inner(g, &grad, h.values());
            let eps = 1e-5;
            let shift = |sign: f64| {
                let v = u.values().iter().zip(h.values()).map(|(a, b)| a + sign * eps * b).collect();
                evaluate(problem, f, &u.with_values(v).unwrap()).unwrap()
            };
            let fd = (shift(1.0) - shift(-1.0)) / (2.0 * eps);
            let rel = (fd - predicted).abs() / predicted.abs().max(1e-12);
            assert!(rel < 1e-5, "rel {rel}: fd {fd} vs {predicted}");
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        let g = grid(20.0, 300);
        fd_check(&log_problem(), Functional::Log, &g, 1, true);
        fd_check(&sat_problem(), Functional::Sat, &g, 2, true);
        fd_check(&sat_problem(), Functional::BeamPower, &g, 3, true);
        let plateau = VortexProblem::log_zero_plateau(1, 1.0, 1.0, 0.1, 20.0).unwrap();
        let hom = make_homogenization(plateau.plateau_k().unwrap(), 1, &g).unwrap();
        fd_check(&plateau, Functional::Plateau(&hom), &g, 4, true);
    }

    #[test]
    fn functional_must_match_regime() {
        let g = grid(20.0, 100);
        let z = Profile::zeros(g);
        assert!(matches!(action_log(&sat_problem(), &z), Err(Error::RegimeMismatch { .. })));
        assert!(matches!(action_sat(&log_problem(), &z), Err(Error::RegimeMismatch { .. })));
    }

    #[test]
    fn plateau_integrand_vanishes_on_plateau() {
        let plateau = VortexProblem::log_zero_plateau(1, 1.0, 1.0, 0.1, 10.0).unwrap();
        let k = plateau.plateau_k().unwrap();
        let short = grid(10.0, 1000);
        let long = grid(20.0, 2000);
        let v_short = Profile::zeros(Arc::clone(&short));
        let v_long = Profile::zeros(Arc::clone(&long));
        let hom_s = make_homogenization(k, 1, &short).unwrap();
        let hom_l = make_homogenization(k, 1, &long).unwrap();
        let a = action_plateau(&plateau, &v_short, &hom_s).unwrap();
        let b = action_plateau(&plateau, &v_long, &hom_l).unwrap();
        // v = 0 leaves ∫(G(φ) − G(k)) r dr, supported on [0, 2]
        assert!((a - b).abs() < 1e-6 * a.abs());
    }

    #[test]
    fn plateau_zero_v_matches_fine_quadrature() {
        let plateau = VortexProblem::log_zero_plateau(1, 1.0, 1.0, 0.1, 4.0).unwrap();
        let k = plateau.plateau_k().unwrap();
        let coarse = grid(4.0, 4000);
        let hom = make_homogenization(k, 1, &coarse).unwrap();
        let value = action_plateau(&plateau, &Profile::zeros(Arc::clone(&coarse)), &hom).unwrap();
        let fine = make_grid(4.0, 1_000_000, Grading::Uniform).unwrap();
        let gk = g_primitive(k, 0.1, 1.0, 1.0);
        let f: Vec<f64> = fine
            .nodes()
            .iter()
            .map(|&r| g_primitive(phi_eta(k, 1, r).0, 0.1, 1.0, 1.0) - gk)
            .collect();
        let reference = integrate(&fine, &f).unwrap();
        assert!((value - reference).abs() < 1e-6 * reference.abs(), "{value} {reference}");
    }

    #[test]
    fn residual_stencils_reproduce_radial_laplacian() {
        // u = r e^(−r) gives u″ + u′/r − u/r² = (r − 3)e^(−r).
        let g = grid(10.0, 2000);
        let u = Profile::from_fn(Arc::clone(&g), |r| r * (-r).exp()).unwrap();
        let du = grid::differentiate(&g, u.values()).unwrap();
        let d2 = grid::second_derivative(&g, u.values(), &du);
        for (i, &r) in g.nodes().iter().enumerate().skip(1).take(g.len() - 2) {
            let lhs = d2[i] + du[i] / r - u.values()[i] / (r * r);
            let err = (lhs - (r - 3.0) * (-r).exp()).abs();
            assert!(r / (1.0 + r) * err < 1e-4, "r={r}: {err}");
        }
    }

    proptest! {
        #[test]
        fn evenness_and_abs_projection(seed in 0u64..1000) {
            let g = grid(20.0, 200);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let u = random_profile(&g, &mut rng, true);
            let neg = u.scaled(-1.0);
            for (p, f) in [(log_problem(), Functional::Log), (sat_problem(), Functional::Sat), (sat_problem(), Functional::BeamPower)] {
                let a = evaluate(&p, f, &u).unwrap();
                prop_assert_eq!(a, evaluate(&p, f, &neg).unwrap());
                prop_assert!(evaluate(&p, f, &u.abs()).unwrap() <= a);
            }
        }

        #[test]
        fn q_sat_nonnegative(t in -50.0f64..50.0, s in 1e-3f64..50.0, gamma in 2.0001f64..20.0) {
            prop_assert!(q_sat(t, s, gamma) >= 0.0);
        }

        #[test]
        fn q_sat_derivative(t in 0.01f64..4.0, s in 0.1f64..5.0, gamma in 2.1f64..8.0) {
            let h = 1e-6 * t.max(1.0);
            let fd = (q_sat(t + h, s, gamma) - q_sat(t - h, s, gamma)) / (2.0 * h);
            let exact = 2.0 * t.powi(3) / (1.0 + s * t * t).powf(gamma);
            prop_assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1e-6));
        }
    }
}
