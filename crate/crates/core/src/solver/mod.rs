//! Minimization engines and the shooting oracle.
//!
//! Both descent solvers take steps along the gradient measured in the
//! problem's own weighted inner product (stiffness plus a positive diagonal
//! mass term), with Armijo backtracking on the discrete functional. The
//! constrained solver restricts the step to the tangent of the beam-power
//! sphere and rescales back onto it after every step.

mod shoot;

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{self, DecayFit};
use crate::energy::{
    self, beam_power, discrete_partials, discrete_value, make_homogenization, Density, Functional, Profile,
};
use crate::grid::{make_grid, Grading, RadialGrid};
use crate::model::{gprime_at_k, RegimeKind, VortexProblem};
use crate::tridiag::Tridiagonal;
use crate::{Error, Result};

pub use shoot::{shoot, shoot_match, ShootCandidate, ShootMatch, ShootSettings};

/// Smallest Armijo step tried before a line search counts as stalled.
const MIN_STEP: f64 = 1e-14;

/// Initial profile. For the plateau problem it describes v = u − φ.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Init {
    /// Trial v for zero–zero, v ≡ 0 for plateau, tent(R/2, 1) for saturable.
    Auto,
    Tent { a: f64, b: f64 },
    TrialV { k: f64, lambda: f64, radius: f64 },
    Random { seed: u64, amplitude: f64 },
    Given(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverConfig {
    /// Number of grid intervals N.
    pub intervals: usize,
    pub grading: Grading,
    pub max_iters: usize,
    /// Threshold on the scaled sup-norm of the discrete Euler–Lagrange residual.
    pub grad_tol: f64,
    pub armijo_c: f64,
    pub backtrack: f64,
    pub init: Init,
    pub nonneg_projection: bool,
    /// Constant c in the metric diag(m(n²/r² + c)); `None` picks 2ω, g′(k) or 0.1.
    pub metric_shift: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            intervals: 4000,
            grading: Grading::Uniform,
            max_iters: 20_000,
            grad_tol: 1e-8,
            armijo_c: 1e-4,
            backtrack: 0.5,
            init: Init::Auto,
            nonneg_projection: true,
            metric_shift: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::param("max_iters", "must be at least 1"));
        }
        if !(self.grad_tol.is_finite() && self.grad_tol > 0.0) {
            return Err(Error::param("grad_tol", "must be positive"));
        }
        if !(self.armijo_c > 0.0 && self.armijo_c < 1.0) {
            return Err(Error::param("armijo_c", "must lie in (0, 1)"));
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return Err(Error::param("backtrack", "must lie in (0, 1)"));
        }
        if let Some(c) = self.metric_shift {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::param("metric_shift", "must be positive"));
            }
        }
        Ok(())
    }

    fn seed(&self) -> Option<u64> {
        match self.init {
            Init::Random { seed, .. } => Some(seed),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveReport {
    /// Full amplitude u (for the plateau problem u = v + φ).
    pub profile: Profile,
    pub energy: f64,
    /// Given ω, or the extracted multiplier for the constrained problem.
    pub omega: f64,
    pub grad_norm: f64,
    pub el_residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    pub decay: Option<DecayFit>,
    pub power: Option<f64>,
    /// Functional value at the start and after every accepted step.
    pub energy_history: Vec<f64>,
    pub seed: Option<u64>,
}

/// Solves the logarithmic zero–zero or plateau problem.
pub fn minimize_unconstrained(problem: &VortexProblem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    let (alpha, beta) = problem.log_params()?;
    let omega = problem.omega().expect("logarithmic problems carry ω");
    let grid = Arc::new(make_grid(problem.r_max(), config.intervals, config.grading)?);

    let hom = match problem.kind() {
        RegimeKind::ZeroPlateau => Some(make_homogenization(
            problem.plateau_k().expect("plateau regime carries k"),
            problem.n(),
            &grid,
        )?),
        RegimeKind::ZeroZero => None,
        RegimeKind::PowerConstrained => unreachable!("log_params rejects saturable problems"),
    };
    let functional = match &hom {
        Some(h) => Functional::Plateau(h),
        None => Functional::Log,
    };
    let density = Density::resolve(problem, functional, &grid)?;
    let shift = config.metric_shift.unwrap_or_else(|| match &hom {
        Some(h) => gprime_at_k(alpha, beta, omega, h.k).unwrap_or(2.0 * omega),
        None => 2.0 * omega,
    });
    let metric = metric(&grid, problem.n2(), shift);
    let offset = hom.as_ref().map(|h| h.phi.as_slice());

    let mut u = initial_values(problem, config, &grid)?;
    pin(&mut u);
    let project = |v: &mut [f64]| {
        if config.nonneg_projection {
            match offset {
                Some(phi) => v.iter_mut().zip(phi).for_each(|(x, p)| *x = (*x + p).abs() - p),
                None => v.iter_mut().for_each(|x| *x = x.abs()),
            }
        }
        pin(v);
    };
    project(&mut u);

    let full = |v: &[f64]| -> Vec<f64> {
        match offset {
            Some(phi) => v.iter().zip(phi).map(|(a, b)| a + b).collect(),
            None => v.to_vec(),
        }
    };

    let mut f = discrete_value(&grid, &density, &u);
    let mut history = vec![f];
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let p = discrete_partials(&grid, &density, &u);
        let res = per_mass(&grid, &p);
        grad_norm = energy::scaled_sup(&grid, &full(&u), &res);
        if grad_norm <= config.grad_tol || iterations >= config.max_iters {
            break;
        }
        let d = precondition(&metric, &p);
        let slope = dot(&p, &d);
        if !(slope > 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t >= MIN_STEP {
            let mut cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - t * b).collect();
            project(&mut cand);
            let fc = discrete_value(&grid, &density, &cand);
            if fc <= f - config.armijo_c * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= config.backtrack;
        }
        let Some((cand, fc)) = accepted else { break };
        u = cand;
        f = fc;
        history.push(f);
        iterations += 1;
    }

    let profile = Profile::new(Arc::clone(&grid), full(&u))?;
    let residual = energy::el_residual(problem, &profile, omega)?;
    let el_residual_norm = energy::scaled_residual_norm(&profile, &residual);
    let decay = match problem.kind() {
        RegimeKind::ZeroZero => analysis::fit_decay(&profile, omega).ok(),
        _ => None,
    };
    Ok(SolveReport {
        profile,
        energy: f,
        omega,
        grad_norm,
        el_residual_norm,
        iterations,
        converged: grad_norm <= config.grad_tol,
        decay,
        power: None,
        energy_history: history,
        seed: config.seed(),
    })
}

/// Minimizes J on the sphere P(u) = P₀ and extracts ω.
pub fn minimize_constrained(problem: &VortexProblem, config: &SolverConfig) -> Result<SolveReport> {
    config.validate()?;
    problem.require(RegimeKind::PowerConstrained)?;
    problem.sat_params()?;
    let target = problem.beam_power_target().expect("constrained regime carries P₀");
    let grid = Arc::new(make_grid(problem.r_max(), config.intervals, config.grading)?);
    let density = Density::resolve(problem, Functional::Sat, &grid)?;
    let metric = metric(&grid, problem.n2(), config.metric_shift.unwrap_or(0.1));
    let masses = grid.masses().to_vec();

    let power_of = |v: &[f64]| 2.0 * std::f64::consts::PI * energy::inner(&grid, v, v);
    let project = |v: &mut Vec<f64>| -> Result<()> {
        if config.nonneg_projection {
            v.iter_mut().for_each(|x| *x = x.abs());
        }
        pin(v);
        let p = power_of(v);
        if !(p.is_finite() && p > f64::MIN_POSITIVE) {
            return Err(Error::ConstraintDegenerate { power: p });
        }
        let scale = (target / p).sqrt();
        v.iter_mut().for_each(|x| *x *= scale);
        Ok(())
    };

    let mut u = initial_values(problem, config, &grid)?;
    project(&mut u)?;
    let mut f = discrete_value(&grid, &density, &u);
    let mut history = vec![f];
    let mut iterations = 0;
    let mut grad_norm;
    loop {
        let p = discrete_partials(&grid, &density, &u);
        let mu_rhs: Vec<f64> = masses.iter().zip(&u).map(|(m, x)| m * x).collect();
        let mu = precondition(&metric, &mu_rhs);
        let lambda = dot(&p, &mu) / dot(&mu_rhs, &mu);
        let mut res = per_mass(&grid, &p);
        let last = res.len() - 1;
        for i in 1..last {
            res[i] -= lambda * u[i];
        }
        grad_norm = energy::scaled_sup(&grid, &u, &res);
        if grad_norm <= config.grad_tol || iterations >= config.max_iters {
            break;
        }
        let d: Vec<f64> = precondition(&metric, &p)
            .iter()
            .zip(&mu)
            .map(|(a, b)| a - lambda * b)
            .collect();
        let slope = dot(&p, &d);
        if !(slope > 0.0) {
            break;
        }
        let mut t = 1.0;
        let mut accepted = None;
        while t >= MIN_STEP {
            let mut cand: Vec<f64> = u.iter().zip(&d).map(|(a, b)| a - t * b).collect();
            project(&mut cand)?;
            let fc = discrete_value(&grid, &density, &cand);
            if fc <= f - config.armijo_c * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= config.backtrack;
        }
        let Some((cand, fc)) = accepted else { break };
        u = cand;
        f = fc;
        history.push(f);
        iterations += 1;
    }

    let profile = Profile::new(Arc::clone(&grid), u)?;
    let omega = multiplier(problem, &profile)?;
    let residual = energy::el_residual(problem, &profile, omega)?;
    Ok(SolveReport {
        el_residual_norm: energy::scaled_residual_norm(&profile, &residual),
        power: Some(beam_power(&profile)),
        profile,
        energy: f,
        omega,
        grad_norm,
        iterations,
        converged: grad_norm <= config.grad_tol,
        decay: None,
        energy_history: history,
        seed: config.seed(),
    })
}

/// ω = −[∫(u′² + (n²/r²)u² + 2u⁴/(1+su²)^γ) r dr] / (2∫u² r dr), in the
/// solver's discretization.
pub fn multiplier(problem: &VortexProblem, profile: &Profile) -> Result<f64> {
    let (s, gamma) = problem.sat_params()?;
    let grid = profile.grid();
    let u = profile.values();
    let (r, m) = (grid.nodes(), grid.masses());
    let n2 = problem.n2();
    let mut num = 2.0 * energy::kinetic(grid, u);
    let mut den = 0.0;
    for i in 1..u.len() {
        let u2 = u[i] * u[i];
        num += m[i] * (n2 * u2 / (r[i] * r[i]) + 2.0 * u2 * u2 / (1.0 + s * u2).powf(gamma));
        den += m[i] * u2;
    }
    if den <= 0.0 {
        return Err(Error::ConstraintDegenerate { power: 0.0 });
    }
    Ok(-num / (2.0 * den))
}

fn pin(u: &mut [f64]) {
    let last = u.len() - 1;
    u[0] = 0.0;
    u[last] = 0.0;
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn per_mass(grid: &RadialGrid, p: &[f64]) -> Vec<f64> {
    let m = grid.masses();
    let last = p.len() - 1;
    p.iter()
        .enumerate()
        .map(|(i, x)| if i == 0 || i == last { 0.0 } else { x / m[i] })
        .collect()
}

/// Stiffness + diag(m_i(n²/r_i² + shift)) on the interior nodes.
fn metric(grid: &RadialGrid, n2: f64, shift: f64) -> Tridiagonal {
    let r = grid.nodes();
    let m = grid.masses();
    let n = grid.intervals();
    let coupling: Vec<f64> = (0..n).map(|i| 0.5 * (r[i] + r[i + 1]) / (r[i + 1] - r[i])).collect();
    let diag: Vec<f64> = (1..n)
        .map(|i| coupling[i - 1] + coupling[i] + m[i] * (n2 / (r[i] * r[i]) + shift))
        .collect();
    let off: Vec<f64> = (1..n - 1).map(|i| -coupling[i]).collect();
    Tridiagonal::factor(&diag, &off)
}

fn precondition(metric: &Tridiagonal, p: &[f64]) -> Vec<f64> {
    let last = p.len() - 1;
    let mut out = vec![0.0; p.len()];
    out[1..last].copy_from_slice(&p[1..last]);
    metric.solve_in_place(&mut out[1..last]);
    out
}

fn initial_values(problem: &VortexProblem, config: &SolverConfig, grid: &Arc<RadialGrid>) -> Result<Vec<f64>> {
    let r_max = grid.r_max();
    let values = match &config.init {
        Init::Auto => match problem.kind() {
            RegimeKind::ZeroZero => {
                let (alpha, beta) = problem.log_params()?;
                let omega = problem.omega().expect("logarithmic problems carry ω");
                let k = analysis::default_trial_k(alpha, beta, omega)?;
                analysis::trial_v(k, (2.0 * omega).sqrt(), 0.5 * r_max, grid)?.into_values()
            }
            RegimeKind::ZeroPlateau => vec![0.0; grid.len()],
            RegimeKind::PowerConstrained => tent(grid, 0.5 * r_max, 1.0)?,
        },
        Init::Tent { a, b } => tent(grid, *a, *b)?,
        Init::TrialV { k, lambda, radius } => analysis::trial_v(*k, *lambda, *radius, grid)?.into_values(),
        Init::Random { seed, amplitude } => {
            if !(amplitude.is_finite() && *amplitude >= 0.0) {
                return Err(Error::param("amplitude", "must be nonnegative"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut v: Vec<f64> = (0..grid.len()).map(|_| amplitude * rng.gen::<f64>()).collect();
            pin(&mut v);
            let smoothed: Vec<f64> = (0..v.len())
                .map(|i| {
                    if i == 0 || i == v.len() - 1 {
                        0.0
                    } else {
                        0.25 * (v[i - 1] + 2.0 * v[i] + v[i + 1])
                    }
                })
                .collect();
            smoothed
        }
        Init::Given(values) => {
            grid.check_len(values.len())?;
            if values.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite("initial profile"));
            }
            values.clone()
        }
    };
    Ok(values)
}

/// (b/a)r on [0, a], (b/a)(2a − r) on (a, 2a], 0 beyond.
pub(crate) fn tent(grid: &RadialGrid, a: f64, b: f64) -> Result<Vec<f64>> {
    if !(a.is_finite() && a > 0.0 && b.is_finite()) {
        return Err(Error::param("a", format!("tent needs a > 0 and finite b, got a = {a}, b = {b}")));
    }
    Ok(grid
        .nodes()
        .iter()
        .map(|&r| {
            if r <= a {
                b / a * r
            } else if r <= 2.0 * a {
                b / a * (2.0 * a - r)
            } else {
                0.0
            }
        })
        .collect())
}
