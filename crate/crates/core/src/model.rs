//! Physical models, problem variants and the closed-form pointwise functions
//! of the two nonlinearities.

use std::f64::consts::E;
use std::fmt;

use serde::Serialize;

use crate::{Error, Result};

/// Lower clamp for the argument of `ln(u²/β)`; keeps `u⁴ ln u²` finite at u = 0.
pub const LN_FLOOR: f64 = 1e-300;

/// The two nonlinear responses ψ(u).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum Nonlinearity {
    /// ψ₁(u) = α u² ln(u²/β)
    Logarithmic { alpha: f64, beta: f64 },
    /// ψ₂(u) = u² / (1 + s u²)^γ
    Saturable { s: f64, gamma: f64 },
}

impl Nonlinearity {
    pub fn logarithmic(alpha: f64, beta: f64) -> Result<Self> {
        positive("alpha", alpha)?;
        positive("beta", beta)?;
        Ok(Nonlinearity::Logarithmic { alpha, beta })
    }

    pub fn saturable(s: f64, gamma: f64) -> Result<Self> {
        positive("s", s)?;
        if !(gamma.is_finite() && gamma > 2.0) {
            return Err(Error::param("gamma", format!("must satisfy γ > 2, got {gamma}")));
        }
        Ok(Nonlinearity::Saturable { s, gamma })
    }

    /// Pointwise ψ(u). The logarithmic branch is continued by 0 at u = 0.
    pub fn psi(&self, u: f64) -> Result<f64> {
        if !u.is_finite() {
            return Err(Error::NonFinite("psi argument"));
        }
        Ok(self.psi_unchecked(u))
    }

    pub(crate) fn psi_unchecked(&self, u: f64) -> f64 {
        let u2 = u * u;
        match *self {
            Nonlinearity::Logarithmic { alpha, beta } => alpha * u2 * log_ratio(u2, beta),
            Nonlinearity::Saturable { s, gamma } => u2 / (1.0 + s * u2).powf(gamma),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            Nonlinearity::Logarithmic { .. } => "logarithmic",
            Nonlinearity::Saturable { .. } => "saturable",
        }
    }
}

/// `ln(max(u², LN_FLOOR)/β)`
#[inline]
pub(crate) fn log_ratio(u2: f64, beta: f64) -> f64 {
    (u2.max(LN_FLOOR) / beta).ln()
}

fn positive(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() && x > 0.0 {
        Ok(())
    } else {
        Err(Error::param(name, format!("must be a positive finite number, got {x}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RegimeKind {
    ZeroZero,
    ZeroPlateau,
    PowerConstrained,
}

impl RegimeKind {
    pub fn label(self) -> &'static str {
        match self {
            RegimeKind::ZeroZero => "zero-zero",
            RegimeKind::ZeroPlateau => "zero-plateau",
            RegimeKind::PowerConstrained => "power-constrained",
        }
    }
}

/// Boundary conditions at the outer radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "regime", rename_all = "snake_case")]
pub enum BoundaryRegime {
    /// u(0) = u(R) = 0; `truncated` marks R as a stand-in for ∞.
    ZeroZero { r_max: f64, truncated: bool },
    /// u(0) = 0, u(R_trunc) = k with k the largest plateau root.
    ZeroPlateau { r_trunc: f64, k: f64 },
    /// u(0) = u(R) = 0 with beam power 2π∫u² r dr = P₀.
    PowerConstrained { r_max: f64, power: f64 },
}

impl BoundaryRegime {
    pub fn kind(&self) -> RegimeKind {
        match self {
            BoundaryRegime::ZeroZero { .. } => RegimeKind::ZeroZero,
            BoundaryRegime::ZeroPlateau { .. } => RegimeKind::ZeroPlateau,
            BoundaryRegime::PowerConstrained { .. } => RegimeKind::PowerConstrained,
        }
    }

    pub fn r_max(&self) -> f64 {
        match *self {
            BoundaryRegime::ZeroZero { r_max, .. } => r_max,
            BoundaryRegime::ZeroPlateau { r_trunc, .. } => r_trunc,
            BoundaryRegime::PowerConstrained { r_max, .. } => r_max,
        }
    }
}

/// Open interval of admissible ω for the logarithmic model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaWindow {
    pub lower: f64,
    pub upper: f64,
    pub kind: RegimeKind,
}

impl OmegaWindow {
    /// Strict on both ends.
    pub fn contains(&self, omega: f64) -> bool {
        omega > self.lower && omega < self.upper
    }
}

impl fmt::Display for OmegaWindow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let closed_form = match self.kind {
            RegimeKind::ZeroPlateau => "¾e^(−1)αβ",
            _ => "½e^(−1/2)αβ",
        };
        write!(f, "0 < ω < {closed_form} = {:.5}", self.upper)
    }
}

/// Existence window for ω: (0, ½e^(−1/2)αβ) with u(R) = 0 and
/// (0, ¾e^(−1)αβ) for the plateau condition. Both ends are open; the
/// homogeneous problem further needs ω ≥ μ for some μ > 0.
pub fn existence_window(nl: &Nonlinearity, kind: RegimeKind) -> Result<OmegaWindow> {
    let (alpha, beta) = match *nl {
        Nonlinearity::Logarithmic { alpha, beta } => (alpha, beta),
        Nonlinearity::Saturable { .. } => {
            return Err(Error::RegimeMismatch {
                expected: "logarithmic nonlinearity",
                found: "saturable (ω is an output there)",
            })
        }
    };
    let upper = match kind {
        RegimeKind::ZeroZero => 0.5 * (-0.5f64).exp() * alpha * beta,
        RegimeKind::ZeroPlateau => 0.75 * alpha * beta / E,
        RegimeKind::PowerConstrained => {
            return Err(Error::RegimeMismatch {
                expected: "zero-zero or zero-plateau regime",
                found: "power-constrained",
            })
        }
    };
    Ok(OmegaWindow {
        lower: 0.0,
        upper,
        kind,
    })
}

/// Largest k > 0 with ω + αk² ln(k²/β) = 0.
///
/// With t = k², t ln(t/β) is increasing on [β/e, β] and the larger root lies
/// there, so plain bisection on t brackets it.
pub fn k_plateau(alpha: f64, beta: f64, omega: f64) -> Result<f64> {
    let nl = Nonlinearity::logarithmic(alpha, beta)?;
    let window = existence_window(&nl, RegimeKind::ZeroPlateau)?;
    if !window.contains(omega) {
        return Err(Error::OmegaOutsideWindow {
            omega,
            bound: window.to_string(),
        });
    }
    let f = |t: f64| omega + alpha * t * (t / beta).ln();
    let (mut lo, mut hi) = (beta / E, beta);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= 1e-16 * hi {
            break;
        }
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let t = if f(lo).abs() <= f(hi).abs() { lo } else { hi };
    let k = t.sqrt();
    debug_assert!(k > (beta / E).sqrt());
    Ok(k)
}

/// g′(k) = 4αk²(ln(k²/β) + 1) at a plateau root k.
pub fn gprime_at_k(alpha: f64, beta: f64, omega: f64, k: f64) -> Result<f64> {
    positive("alpha", alpha)?;
    positive("beta", beta)?;
    positive("k", k)?;
    let k2 = k * k;
    let residual = omega + alpha * k2 * (k2 / beta).ln();
    if residual.abs() > 1e-8 * alpha * beta.max(1.0) {
        return Err(Error::NotARoot { k, residual });
    }
    Ok(4.0 * alpha * k2 * ((k2 / beta).ln() + 1.0))
}

/// A complete problem: winding number, nonlinearity, boundary regime and ω.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VortexProblem {
    n: i32,
    nonlinearity: Nonlinearity,
    regime: BoundaryRegime,
    omega: Option<f64>,
    mu: Option<f64>,
}

impl VortexProblem {
    /// Logarithmic model with u(0) = u(R) = 0 and μ = 1e-6·αβ.
    pub fn log_zero_zero(n: i32, alpha: f64, beta: f64, omega: f64, r_max: f64) -> Result<Self> {
        Self::log_zero_zero_with_floor(n, alpha, beta, omega, r_max, 1e-6 * alpha * beta)
    }

    /// As [`Self::log_zero_zero`] with an explicit floor μ in μ ≤ ω.
    pub fn log_zero_zero_with_floor(
        n: i32,
        alpha: f64,
        beta: f64,
        omega: f64,
        r_max: f64,
        mu: f64,
    ) -> Result<Self> {
        winding(n)?;
        let nl = Nonlinearity::logarithmic(alpha, beta)?;
        positive("R", r_max)?;
        positive("mu", mu)?;
        finite("omega", omega)?;
        let window = existence_window(&nl, RegimeKind::ZeroZero)?;
        if !(omega >= mu && omega < window.upper) {
            return Err(Error::OmegaOutsideWindow {
                omega,
                bound: format!("μ ≤ ω < ½e^(−1/2)αβ = {:.5} with μ = {mu:e}", window.upper),
            });
        }
        Ok(Self {
            n,
            nonlinearity: nl,
            regime: BoundaryRegime::ZeroZero {
                r_max,
                truncated: true,
            },
            omega: Some(omega),
            mu: Some(mu),
        })
    }

    /// Logarithmic model with u(0) = 0, u(R_trunc) = k.
    pub fn log_zero_plateau(n: i32, alpha: f64, beta: f64, omega: f64, r_trunc: f64) -> Result<Self> {
        winding(n)?;
        let nl = Nonlinearity::logarithmic(alpha, beta)?;
        positive("R", r_trunc)?;
        finite("omega", omega)?;
        let k = k_plateau(alpha, beta, omega)?;
        Ok(Self {
            n,
            nonlinearity: nl,
            regime: BoundaryRegime::ZeroPlateau { r_trunc, k },
            omega: Some(omega),
            mu: None,
        })
    }

    /// Saturable model at prescribed beam power; ω is left unknown.
    pub fn sat_constrained(n: i32, s: f64, gamma: f64, power: f64, r_max: f64) -> Result<Self> {
        winding(n)?;
        let nl = Nonlinearity::saturable(s, gamma)?;
        positive("R", r_max)?;
        positive("P0", power)?;
        Ok(Self {
            n,
            nonlinearity: nl,
            regime: BoundaryRegime::PowerConstrained { r_max, power },
            omega: None,
            mu: None,
        })
    }

    pub fn n(&self) -> i32 {
        self.n
    }

    /// n² as a float.
    pub fn n2(&self) -> f64 {
        let n = self.n as f64;
        n * n
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn regime(&self) -> &BoundaryRegime {
        &self.regime
    }

    pub fn kind(&self) -> RegimeKind {
        self.regime.kind()
    }

    pub fn omega(&self) -> Option<f64> {
        self.omega
    }

    pub fn mu(&self) -> Option<f64> {
        self.mu
    }

    pub fn r_max(&self) -> f64 {
        self.regime.r_max()
    }

    /// Plateau value k, for the plateau regime only.
    pub fn plateau_k(&self) -> Option<f64> {
        match self.regime {
            BoundaryRegime::ZeroPlateau { k, .. } => Some(k),
            _ => None,
        }
    }

    pub fn beam_power_target(&self) -> Option<f64> {
        match self.regime {
            BoundaryRegime::PowerConstrained { power, .. } => Some(power),
            _ => None,
        }
    }

    pub(crate) fn log_params(&self) -> Result<(f64, f64)> {
        match self.nonlinearity {
            Nonlinearity::Logarithmic { alpha, beta } => Ok((alpha, beta)),
            Nonlinearity::Saturable { .. } => Err(Error::RegimeMismatch {
                expected: "logarithmic nonlinearity",
                found: "saturable",
            }),
        }
    }

    pub(crate) fn sat_params(&self) -> Result<(f64, f64)> {
        match self.nonlinearity {
            Nonlinearity::Saturable { s, gamma } => Ok((s, gamma)),
            Nonlinearity::Logarithmic { .. } => Err(Error::RegimeMismatch {
                expected: "saturable nonlinearity",
                found: "logarithmic",
            }),
        }
    }

    pub(crate) fn require(&self, kind: RegimeKind) -> Result<()> {
        if self.kind() == kind {
            Ok(())
        } else {
            Err(Error::RegimeMismatch {
                expected: kind.label(),
                found: self.kind().label(),
            })
        }
    }
}

fn winding(n: i32) -> Result<()> {
    if n == 0 {
        Err(Error::param("n", "winding number must be nonzero"))
    } else {
        Ok(())
    }
}

fn finite(name: &'static str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(Error::param(name, "must be finite"))
    }
}
