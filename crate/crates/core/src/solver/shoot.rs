//! Shooting oracle: integrates the radial ODE outward from the indicial
//! start u ≈ c·r^|n| with an embedded Dormand–Prince 5(4) pair and bisects
//! on c for u(R) = 0.

use std::sync::Arc;

use crate::energy::{self, beam_power, Profile};
use crate::grid::RadialGrid;
use crate::model::{Nonlinearity, RegimeKind, VortexProblem};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootSettings {
    pub rtol: f64,
    /// Absolute tolerance as a multiple of |c|.
    pub atol_rel: f64,
    /// |u| above this counts as blow-up.
    pub blow_limit: f64,
    /// r_start = start_fraction · R (capped at half the first grid spacing).
    pub start_fraction: f64,
    /// First c of the doubling scan.
    pub c_start: f64,
    pub doublings: usize,
}

impl Default for ShootSettings {
    fn default() -> Self {
        Self {
            rtol: 1e-12,
            atol_rel: 1e-14,
            blow_limit: 1e6,
            start_fraction: 1e-6,
            c_start: 1e-6,
            doublings: 60,
        }
    }
}

/// One Dirichlet solution found between two bracketing shooting parameters.
#[derive(Debug, Clone)]
pub struct ShootCandidate {
    pub c: f64,
    pub profile: Profile,
    /// u(R) of the sampled trajectory.
    pub end_value: f64,
    /// Action of the trajectory with u(R) set to 0 (logarithmic problems).
    pub energy: Option<f64>,
    pub power: f64,
}

#[derive(Debug, Clone)]
pub struct ShootMatch {
    pub profile: Profile,
    pub c: f64,
    /// Every solution bracketed by the scan, in increasing c.
    pub candidates: Vec<ShootCandidate>,
}

#[derive(Debug, Clone, Copy)]
struct Ode {
    nl: Nonlinearity,
    n2: f64,
    omega: f64,
}

impl Ode {
    fn new(problem: &VortexProblem, omega: f64) -> Result<Self> {
        if !omega.is_finite() {
            return Err(Error::NonFinite("omega"));
        }
        match problem.kind() {
            RegimeKind::ZeroZero => {}
            RegimeKind::PowerConstrained => {
                if omega >= 0.0 {
                    return Err(Error::param("omega", format!("saturable shooting needs ω < 0, got {omega}")));
                }
            }
            RegimeKind::ZeroPlateau => {
                return Err(Error::RegimeMismatch {
                    expected: "zero-zero or power-constrained regime",
                    found: "zero-plateau",
                })
            }
        }
        Ok(Self {
            nl: *problem.nonlinearity(),
            n2: problem.n2(),
            omega,
        })
    }

    #[inline]
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        let u = y[0];
        let psi = self.nl.psi_unchecked(u);
        [y[1], -y[1] / r + (self.n2 / (r * r) + 2.0 * self.omega) * u + 2.0 * psi * u]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Outcome {
    Reached,
    HitZero,
    BlowUp(f64),
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

/// One trial step: fifth-order solution and error estimate.
fn dopri_step(ode: &Ode, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], [f64; 2]) {
    let mut k = [[0.0; 2]; 7];
    k[0] = ode.rhs(r, y);
    for s in 1..7 {
        let mut ys = y;
        for (j, kj) in k.iter().enumerate().take(s) {
            ys[0] += h * A[s][j] * kj[0];
            ys[1] += h * A[s][j] * kj[1];
        }
        k[s] = ode.rhs(r + C[s] * h, ys);
    }
    // row 6 of A holds the fifth-order weights
    let mut y5 = y;
    let mut err = [0.0; 2];
    for (j, kj) in k.iter().enumerate() {
        if j < 6 {
            y5[0] += h * A[6][j] * kj[0];
            y5[1] += h * A[6][j] * kj[1];
        }
        err[0] += h * E[j] * kj[0];
        err[1] += h * E[j] * kj[1];
    }
    (y5, err)
}

/// Integrates node to node; returns u at the nodes reached (NaN beyond).
fn integrate(
    ode: &Ode,
    c: f64,
    grid: &RadialGrid,
    n_abs: i32,
    settings: &ShootSettings,
    stop_at_zero: bool,
) -> Result<(Vec<f64>, Outcome)> {
    let nodes = grid.nodes();
    let mut values = vec![f64::NAN; nodes.len()];
    values[0] = 0.0;
    let mut r = (settings.start_fraction * grid.r_max()).min(0.5 * nodes[1]);
    let nf = n_abs as f64;
    let mut y = [c * r.powi(n_abs), c * nf * r.powi(n_abs - 1)];
    let atol = settings.atol_rel * c.abs().max(f64::MIN_POSITIVE);
    let mut h = 0.1 * (nodes[1] - r);
    for (j, &target) in nodes.iter().enumerate().skip(1) {
        while r < target {
            let step = h.min(target - r);
            if step < 1e-15 * target {
                return Err(Error::StepUnderflow { radius: r });
            }
            let (y5, e) = dopri_step(ode, r, y, step);
            let mut acc = 0.0;
            for i in 0..2 {
                let sc = atol + settings.rtol * y[i].abs().max(y5[i].abs());
                acc += (e[i] / sc) * (e[i] / sc);
            }
            let err = (0.5 * acc).sqrt();
            if !err.is_finite() {
                h = 0.2 * step;
                continue;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if err <= 1.0 {
                r = if target - (r + step) <= 1e-14 * target { target } else { r + step };
                y = y5;
                if !(y[0].is_finite() && y[1].is_finite()) || y[0].abs() > settings.blow_limit {
                    return Ok((values, Outcome::BlowUp(r)));
                }
                if stop_at_zero && y[0] * c.signum() < 0.0 {
                    return Ok((values, Outcome::HitZero));
                }
                h = if step < h { h.max(step * factor) } else { step * factor };
            } else {
                h = step * factor;
            }
        }
        values[j] = y[0];
    }
    Ok((values, Outcome::Reached))
}

fn n_abs(problem: &VortexProblem) -> i32 {
    problem.n().abs()
}

/// Trajectory with u ≈ c·r^|n| near the origin, sampled on the grid.
pub fn shoot(problem: &VortexProblem, omega: f64, c: f64, grid: &Arc<RadialGrid>) -> Result<Profile> {
    shoot_with(problem, omega, c, grid, &ShootSettings::default())
}

fn shoot_with(
    problem: &VortexProblem,
    omega: f64,
    c: f64,
    grid: &Arc<RadialGrid>,
    settings: &ShootSettings,
) -> Result<Profile> {
    let ode = Ode::new(problem, omega)?;
    if !c.is_finite() {
        return Err(Error::NonFinite("shooting parameter"));
    }
    if c == 0.0 {
        return Ok(Profile::zeros(Arc::clone(grid)));
    }
    let (values, outcome) = integrate(&ode, c, grid, n_abs(problem), settings, false)?;
    match outcome {
        Outcome::BlowUp(radius) => Err(Error::BlowUp { radius }),
        _ => Profile::new(Arc::clone(grid), values),
    }
}

/// Bisects on c for u(R) = 0 and selects one solution: the lowest action for
/// the logarithmic problem, the beam power closest to P₀ for the saturable one.
pub fn shoot_match(
    problem: &VortexProblem,
    omega: f64,
    grid: &Arc<RadialGrid>,
    settings: &ShootSettings,
) -> Result<ShootMatch> {
    let ode = Ode::new(problem, omega)?;
    let nn = n_abs(problem);
    let hits = |c: f64| -> Result<bool> {
        let (_, outcome) = integrate(&ode, c, grid, nn, settings, true)?;
        Ok(outcome == Outcome::HitZero)
    };

    let mut scan = Vec::with_capacity(settings.doublings + 1);
    let mut c = settings.c_start;
    for _ in 0..=settings.doublings {
        scan.push((c, hits(c)?));
        c *= 2.0;
    }

    let mut candidates = Vec::new();
    for pair in scan.windows(2) {
        let ((mut lo, p_lo), (mut hi, p_hi)) = (pair[0], pair[1]);
        if p_lo == p_hi {
            continue;
        }
        loop {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if hits(mid)? == p_lo {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let best = [lo, hi]
            .into_iter()
            .filter_map(|c| shoot_with(problem, omega, c, grid, settings).ok().map(|p| (c, p)))
            .min_by(|a, b| a.1.last().abs().total_cmp(&b.1.last().abs()));
        if let Some((c, profile)) = best {
            candidates.push(candidate(problem, c, profile)?);
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoBracket {
            doublings: settings.doublings,
        });
    }

    let chosen = match problem.kind() {
        RegimeKind::PowerConstrained => {
            let target = problem.beam_power_target().expect("constrained regime carries P₀");
            candidates
                .iter()
                .min_by(|a, b| (a.power - target).abs().total_cmp(&(b.power - target).abs()))
        }
        _ => candidates
            .iter()
            .min_by(|a, b| a.energy.unwrap_or(f64::INFINITY).total_cmp(&b.energy.unwrap_or(f64::INFINITY))),
    }
    .expect("nonempty");
    Ok(ShootMatch {
        profile: chosen.profile.clone(),
        c: chosen.c,
        candidates,
    })
}

fn candidate(problem: &VortexProblem, c: f64, profile: Profile) -> Result<ShootCandidate> {
    let end_value = profile.last();
    let energy = match problem.kind() {
        RegimeKind::ZeroZero => {
            let mut pinned = profile.values().to_vec();
            let last = pinned.len() - 1;
            pinned[last] = 0.0;
            Some(energy::action_log(problem, &profile.with_values(pinned)?)?)
        }
        _ => None,
    };
    Ok(ShootCandidate {
        c,
        power: beam_power(&profile),
        end_value,
        energy,
        profile,
    })
}
