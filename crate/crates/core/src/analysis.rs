//! Post-hoc checks: tail decay fits, the ω bound of the saturable problem,
//! trial-function certificates and the virial identity.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::{self, g_piecewise, q_log, q_sat, Profile};
use crate::grid::{self, make_grid, Grading, RadialGrid};
use crate::model::{RegimeKind, VortexProblem};
use crate::solver::SolveReport;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// −slope of ln u against r.
    pub rate: f64,
    pub window: (f64, f64),
    pub rsquared: f64,
    /// √(2ω)
    pub predicted_rate: f64,
    pub points: usize,
}

/// Least-squares fit of ln u on the tail window: beyond the maximum, where
/// 100·ε·max u < u < 0.1·max u, and short of the Dirichlet boundary layer
/// (r ≤ R − 3/√(2ω)).
pub fn fit_decay(profile: &Profile, omega: f64) -> Result<DecayFit> {
    let grid = profile.grid();
    let r = grid.nodes();
    let u = profile.values();
    let (imax, umax) = profile.argmax();
    let predicted_rate = (2.0 * omega).sqrt();
    let r_end = if predicted_rate > 0.0 {
        grid.r_max() - 3.0 / predicted_rate
    } else {
        grid.r_max()
    };
    let (lo, hi) = (100.0 * f64::EPSILON * umax, 0.1 * umax);
    let points: Vec<(f64, f64)> = (imax + 1..u.len())
        .filter(|&i| u[i] < hi && u[i] > lo && r[i] <= r_end)
        .map(|i| (r[i], u[i].ln()))
        .collect();
    if points.len() < 3 || !(umax > 0.0) {
        return Err(Error::EmptyFitWindow { r_max: grid.r_max() });
    }
    let (slope, rsquared) = linear_fit(&points);
    Ok(DecayFit {
        rate: -slope,
        window: (points[0].0, points[points.len() - 1].0),
        rsquared,
        predicted_rate,
        points: points.len(),
    })
}

/// Slope and coefficient of determination of y against x.
fn linear_fit(points: &[(f64, f64)]) -> (f64, f64) {
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let rsquared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    (slope, rsquared)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaBound {
    pub lower: f64,
    /// Exclusive.
    pub upper: f64,
    pub s: f64,
    pub gamma: f64,
    pub n: i32,
    pub power: f64,
}

impl OmegaBound {
    /// lower ≤ ω < 0
    pub fn contains(&self, omega: f64) -> bool {
        omega >= self.lower && omega < self.upper
    }
}

/// max over u > 0 of u²/(1+su²)^γ, attained at u² = 1/(s(γ−1)).
pub fn saturation_peak(s: f64, gamma: f64) -> f64 {
    (gamma - 1.0).powf(gamma - 1.0) / (s * gamma.powf(gamma))
}

/// 1 + n²(2 ln 2 − 1)
fn tent_gradient_factor(n: i32) -> f64 {
    let n = n as f64;
    1.0 + n * n * (2.0 * 2f64.ln() - 1.0)
}

/// lower = −(γ−1)^(γ−1)/(sγ^γ) − √(24π(1+n²(2ln2−1)) / (s²(γ−1)(γ−2)P₀)), upper = 0.
pub fn omega_bound(s: f64, gamma: f64, n: i32, power: f64) -> Result<OmegaBound> {
    // Reuse the problem constructor for parameter validation.
    VortexProblem::sat_constrained(n, s, gamma, power, 1.0)?;
    let d = s * s * (gamma - 1.0) * (gamma - 2.0);
    let lower = -saturation_peak(s, gamma) - (24.0 * PI * tent_gradient_factor(n) / (d * power)).sqrt();
    Ok(OmegaBound {
        lower,
        upper: 0.0,
        s,
        gamma,
        n,
        power,
    })
}

pub fn check_omega_in_bound(report: &SolveReport, bound: &OmegaBound) -> bool {
    bound.contains(report.omega)
}

/// Minimizer of Q over a log-spaced scan; errors if Q stays nonnegative.
pub fn default_trial_k(alpha: f64, beta: f64, omega: f64) -> Result<f64> {
    let root = beta.sqrt();
    let (k, q) = (0..=4000)
        .map(|i| root * 10f64.powf(-3.0 + 5.0 * i as f64 / 4000.0))
        .map(|s| (s, q_log(s, omega, alpha, beta)))
        .fold((f64::NAN, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    if !(q < 0.0) {
        return Err(Error::OmegaOutsideWindow {
            omega,
            bound: format!("Q(k) < 0 for some k, i.e. 0 < ω < ½e^(−1/2)αβ = {:.5}", 0.5 * (-0.5f64).exp() * alpha * beta),
        });
    }
    Ok(k)
}

/// v = kr on [0, 1), k on [1, R), k·e^(λ(R−r)) beyond R.
pub fn trial_v(k: f64, lambda: f64, radius: f64, grid: &Arc<RadialGrid>) -> Result<Profile> {
    if !(k.is_finite() && k > 0.0) {
        return Err(Error::param("k", "must be positive"));
    }
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param("lambda", "must be nonnegative"));
    }
    if !(radius.is_finite() && radius >= 1.0) {
        return Err(Error::param("R", "trial plateau radius must be at least 1"));
    }
    Profile::from_fn(Arc::clone(grid), |r| {
        if r < 1.0 {
            k * r
        } else if r < radius {
            k
        } else {
            k * (lambda * (radius - r)).exp()
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NegativeActionCertificate {
    pub success: bool,
    pub k: f64,
    pub lambda: f64,
    /// Plateau radius of the last trial evaluated.
    pub radius: f64,
    pub action: f64,
    /// ½Q(k)R²
    pub leading_term: f64,
    pub doublings: usize,
}

/// Spacing used for trial-function evaluations.
const TRIAL_SPACING: f64 = 0.01;

/// I(v) for the trial function on a grid extending 20/λ past the plateau.
pub fn trial_action(problem: &VortexProblem, k: f64, lambda: f64, radius: f64) -> Result<f64> {
    problem.require(RegimeKind::ZeroZero)?;
    let tail = if lambda > 0.0 { 20.0 / lambda } else { 1.0 };
    let r_end = radius + tail;
    let intervals = ((r_end / TRIAL_SPACING).ceil() as usize).max(grid::MIN_INTERVALS);
    let grid = Arc::new(make_grid(r_end, intervals, Grading::Uniform)?);
    let v = trial_v(k, lambda, radius, &grid)?;
    energy::action_log(problem, &v)
}

/// Doubles the plateau radius from 2 until I(v) < 0, at most 20 times.
pub fn certify_negative_action(problem: &VortexProblem) -> Result<NegativeActionCertificate> {
    problem.require(RegimeKind::ZeroZero)?;
    let (alpha, beta) = problem.log_params()?;
    let omega = problem.omega().expect("zero-zero regime carries ω");
    let k = default_trial_k(alpha, beta, omega)?;
    let lambda = (2.0 * omega).sqrt();
    let half_q = 0.5 * q_log(k, omega, alpha, beta);
    let mut radius = 2.0;
    let mut last = None;
    for doublings in 0..=20 {
        let action = trial_action(problem, k, lambda, radius)?;
        let cert = NegativeActionCertificate {
            success: action < 0.0,
            k,
            lambda,
            radius,
            action,
            leading_term: half_q * radius * radius,
            doublings,
        };
        if cert.success {
            return Ok(cert);
        }
        last = Some(cert);
        radius *= 2.0;
    }
    Ok(last.expect("at least one trial"))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioPoint {
    pub radius: f64,
    pub action: f64,
    /// I(v)/R²
    pub ratio: f64,
    /// ½Q(k)
    pub predicted: f64,
}

/// I(v)/R² against ½Q(k) for a sequence of plateau radii.
pub fn action_ratio_sequence(problem: &VortexProblem, k: f64, lambda: f64, radii: &[f64]) -> Result<Vec<RatioPoint>> {
    let (alpha, beta) = problem.log_params()?;
    let omega = problem.omega().expect("logarithmic problems carry ω");
    let predicted = 0.5 * q_log(k, omega, alpha, beta);
    radii
        .iter()
        .map(|&radius| {
            let action = trial_action(problem, k, lambda, radius)?;
            Ok(RatioPoint {
                radius,
                action,
                ratio: action / (radius * radius),
                predicted,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentIntegral {
    /// ∫₁ᴿ(v′² + (n²/r²)v²) r dr by composite Simpson on the trial function.
    pub quadrature: f64,
    /// (k²/2)(2R − 1) + n²k² ln R
    pub stated: f64,
    /// n²k² ln R
    pub plateau_only: f64,
}

/// The plateau segment of the trial function, integrated numerically and
/// compared with two closed forms.
pub fn plateau_segment_integral(k: f64, n: i32, radius: f64, panels: usize) -> SegmentIntegral {
    let n2 = (n as f64) * (n as f64);
    // v = k and v′ = 0 on [1, R)
    let f = |r: f64| n2 * k * k / (r * r) * r;
    let panels = panels.max(2) & !1;
    let h = (radius - 1.0) / panels as f64;
    let mut sum = f(1.0) + f(radius);
    for i in 1..panels {
        let r = 1.0 + i as f64 * h;
        sum += if i % 2 == 1 { 4.0 } else { 2.0 } * f(r);
    }
    let quadrature = sum * h / 3.0;
    let plateau_only = n2 * k * k * radius.ln();
    SegmentIntegral {
        quadrature,
        stated: 0.5 * k * k * (2.0 * radius - 1.0) + plateau_only,
        plateau_only,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TentCertificate {
    /// 2π∫u₀² r dr on the grid.
    pub power: f64,
    /// (4π/3)a²b²
    pub power_exact: f64,
    pub action: f64,
    /// b²(1+n²(2ln2−1)) + 2a²/(s²(γ−1)(γ−2))
    pub action_bound: f64,
    pub action_bound_holds: bool,
    /// √(6(1+n²(2ln2−1))P₀/(πs²(γ−1)(γ−2)))
    pub optimized_bound: f64,
    /// min over b′ of b′²(1+n²(2ln2−1)) + 3P₀/(2πb′²s²(γ−1)(γ−2)), numerically.
    pub optimized_bound_numeric: f64,
}

/// Tent trial u₀ on a grid with R = 2a.
pub fn tent_certificate(s: f64, gamma: f64, n: i32, a: f64, b: f64, grid: &Arc<RadialGrid>) -> Result<TentCertificate> {
    if (grid.r_max() - 2.0 * a).abs() > 1e-12 * a {
        return Err(Error::param("R", format!("tent certificate needs R = 2a = {}, got {}", 2.0 * a, grid.r_max())));
    }
    let power_exact = 4.0 * PI / 3.0 * a * a * b * b;
    let problem = VortexProblem::sat_constrained(n, s, gamma, power_exact, grid.r_max())?;
    let u = Profile::new(Arc::clone(grid), crate::solver::tent(grid, a, b)?)?;
    let u2: Vec<f64> = u.values().iter().map(|x| x * x).collect();
    let power = 2.0 * PI * grid::integrate(grid, &u2)?;
    let action = energy::action_sat(&problem, &u)?;
    let d = s * s * (gamma - 1.0) * (gamma - 2.0);
    let factor = tent_gradient_factor(n);
    let action_bound = b * b * factor + 2.0 * a * a / d;
    let rhs = |bb: f64| bb * bb * factor + 3.0 * power_exact / (2.0 * PI * bb * bb * d);
    Ok(TentCertificate {
        power,
        power_exact,
        action,
        action_bound,
        action_bound_holds: action <= action_bound,
        optimized_bound: (6.0 * factor * power_exact / (PI * d)).sqrt(),
        optimized_bound_numeric: golden_min(|x| rhs(x.exp()), -20.0, 20.0),
    })
}

/// Minimum value of a unimodal function on [lo, hi].
fn golden_min(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..200 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
    }
    f1.min(f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlateauCertificate {
    pub origin_zero: bool,
    /// max |u − k|/k over r ≥ 3R/4
    pub max_rel_deviation: f64,
    pub tail_ok: bool,
    /// sup |g(u)| over r ≥ 3R/4
    pub g_tail_sup: f64,
    /// Linearized tail n²/(g′(k) r²) at r = 3R/4, relative to k.
    pub predicted_deviation: f64,
    pub holds: bool,
}

/// u(0) = 0 and |u − k| ≤ 1e−4·k on the outer quarter.
pub fn plateau_certificate(problem: &VortexProblem, report: &SolveReport) -> Result<PlateauCertificate> {
    problem.require(RegimeKind::ZeroPlateau)?;
    let (alpha, beta) = problem.log_params()?;
    let omega = problem.omega().expect("plateau regime carries ω");
    let k = problem.plateau_k().expect("plateau regime carries k");
    let grid = report.profile.grid();
    let r = grid.nodes();
    let u = report.profile.values();
    let r_q = 0.75 * grid.r_max();
    let mut dev: f64 = 0.0;
    let mut g_sup: f64 = 0.0;
    for (ri, ui) in r.iter().zip(u) {
        if *ri >= r_q {
            dev = dev.max((ui - k).abs() / k);
            g_sup = g_sup.max(g_piecewise(*ui, omega, alpha, beta).abs());
        }
    }
    let gp = crate::model::gprime_at_k(alpha, beta, omega, k)?;
    let origin_zero = u[0] == 0.0;
    let tail_ok = dev <= 1e-4;
    Ok(PlateauCertificate {
        origin_zero,
        max_rel_deviation: dev,
        tail_ok,
        g_tail_sup: g_sup,
        predicted_deviation: problem.n2() / (gp * r_q * r_q),
        holds: origin_zero && tail_ok,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VirialCheck {
    /// −∫u′² r dr
    pub lhs: f64,
    /// ∫(n²/r² + 2ω + 2u²/(1+su²)^γ)u² r dr
    pub rhs: f64,
    pub rel_err: f64,
}

/// Both sides of the virial identity, by the grid quadrature and
/// finite-difference u′ (independent of the solver's discretization).
pub fn virial_check(problem: &VortexProblem, profile: &Profile, omega: f64) -> Result<VirialCheck> {
    let (s, gamma) = problem.sat_params()?;
    let grid = profile.grid();
    let u = profile.values();
    let du = grid::differentiate(grid, u)?;
    let du2: Vec<f64> = du.iter().map(|x| x * x).collect();
    let n2 = problem.n2();
    let f: Vec<f64> = grid
        .nodes()
        .iter()
        .zip(u)
        .map(|(&r, &x)| {
            if r == 0.0 {
                return 0.0;
            }
            let x2 = x * x;
            (n2 / (r * r) + 2.0 * omega + 2.0 * x2 / (1.0 + s * x2).powf(gamma)) * x2
        })
        .collect();
    let lhs = -grid::integrate(grid, &du2)?;
    let rhs = grid::integrate(grid, &f)?;
    Ok(VirialCheck {
        lhs,
        rhs,
        rel_err: (lhs - rhs).abs() / lhs.abs().max(rhs.abs()),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// Self-contained checks that need no solve: q ≥ 0 sampling, tent identities,
/// and the first term of the ω bound against a grid search.
pub fn verify_suite(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut checks = Vec::new();

    let mut min_q = f64::INFINITY;
    for _ in 0..100_000 {
        let t = rng.gen_range(-10.0..10.0);
        let s = rng.gen_range(0.01..10.0);
        let gamma = rng.gen_range(2.001..10.0);
        min_q = min_q.min(q_sat(t, s, gamma));
    }
    checks.push(Check::new("q_nonnegative", min_q >= 0.0, format!("min q over 1e5 draws = {min_q:e}")));

    let errs: Vec<f64> = [1000usize, 2000]
        .iter()
        .map(|&n| {
            let g = Arc::new(make_grid(2.0, n, Grading::Uniform)?);
            Ok((tent_certificate(1.0, 3.0, 1, 1.0, 1.0, &g)?.power - 4.0 * PI / 3.0).abs())
        })
        .collect::<Result<_>>()?;
    let order = (errs[0] / errs[1]).log2();
    checks.push(Check::new(
        "tent_power",
        errs[1] < 1e-5 && order >= 1.8,
        format!("|P − 4π/3| = {:e} at N=2000, observed order {order:.3}", errs[1]),
    ));

    let g = Arc::new(make_grid(2.0, 4000, Grading::Uniform)?);
    let tent = tent_certificate(1.0, 3.0, 1, 1.0, 1.0, &g)?;
    checks.push(Check::new(
        "tent_action_bound",
        tent.action_bound_holds,
        format!("J(u₀) = {:.8} ≤ {:.8}", tent.action, tent.action_bound),
    ));
    let gap = (tent.optimized_bound - tent.optimized_bound_numeric).abs() / tent.optimized_bound;
    checks.push(Check::new(
        "tent_optimized_bound",
        gap <= 1e-10,
        format!("closed form {:.12} vs numeric {:.12}", tent.optimized_bound, tent.optimized_bound_numeric),
    ));

    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let s = rng.gen_range(0.1..5.0);
        let gamma = rng.gen_range(2.05..8.0);
        let peak = saturation_peak(s, gamma);
        worst = worst.max((grid_search_peak(s, gamma) - peak).abs() / peak);
    }
    checks.push(Check::new(
        "bound_first_term",
        worst <= 1e-6,
        format!("max relative gap to grid search over 20 draws = {worst:e}"),
    ));
    Ok(checks)
}

/// max of u²/(1+su²)^γ by a coarse scan plus local refinement.
pub fn grid_search_peak(s: f64, gamma: f64) -> f64 {
    let f = |u: f64| u * u / (1.0 + s * u * u).powf(gamma);
    let hi = 10.0 / s.sqrt();
    let steps = 100_000;
    let (mut best_u, mut best) = (0.0, 0.0);
    for i in 0..=steps {
        let u = hi * i as f64 / steps as f64;
        let v = f(u);
        if v > best {
            best = v;
            best_u = u;
        }
    }
    let h = hi / steps as f64;
    let refined = golden_min(|u| -f(u), (best_u - h).max(0.0), best_u + h);
    best.max(-refined)
}
