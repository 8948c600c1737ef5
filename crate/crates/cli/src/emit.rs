//! Artifact emission: profile tables and result documents. Floats are written
//! as 17 significant digits so every value round-trips exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

use vortex_core::analysis::{check_omega_in_bound, omega_bound};
use vortex_core::energy;
use vortex_core::model::{Nonlinearity, VortexProblem};
use vortex_core::solver::SolveReport;

use crate::error::CliError;

/// `{:.16e}` text, or null when not finite.
pub fn float(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse::<Number>().expect("exponent notation is valid JSON"))
    } else {
        Value::Null
    }
}

fn opt_float(x: Option<f64>) -> Value {
    x.map(float).unwrap_or(Value::Null)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResultDoc {
    pub model: String,
    pub n: i32,
    pub omega: Value,
    pub energy: Value,
    pub power: Value,
    pub grad_norm: Value,
    pub el_residual_norm: Value,
    pub iterations: usize,
    pub converged: bool,
    pub decay_rate: Value,
    pub bound_lower: Value,
    pub bound_check: Option<bool>,
    pub seed: Option<u64>,
}

pub fn model_label(problem: &VortexProblem) -> String {
    format!("{}/{}", problem.nonlinearity().label(), problem.kind().label())
}

impl ResultDoc {
    pub fn new(problem: &VortexProblem, report: &SolveReport) -> Result<Self, CliError> {
        let (bound_lower, bound_check) = match (problem.nonlinearity(), problem.beam_power_target()) {
            (Nonlinearity::Saturable { s, gamma }, Some(power)) => {
                let bound = omega_bound(*s, *gamma, problem.n(), power)?;
                (float(bound.lower), Some(check_omega_in_bound(report, &bound)))
            }
            _ => (Value::Null, None),
        };
        Ok(Self {
            model: model_label(problem),
            n: problem.n(),
            omega: float(report.omega),
            energy: float(report.energy),
            power: opt_float(report.power),
            grad_norm: float(report.grad_norm),
            el_residual_norm: float(report.el_residual_norm),
            iterations: report.iterations,
            converged: report.converged,
            decay_rate: opt_float(report.decay.map(|d| d.rate)),
            bound_lower,
            bound_check,
            seed: report.seed,
        })
    }
}

/// `r,u,residual` with one row per node.
pub fn profile_table(problem: &VortexProblem, report: &SolveReport) -> Result<String, CliError> {
    let residual = energy::el_residual(problem, &report.profile, report.omega)?;
    let nodes = report.profile.grid().nodes();
    let mut out = String::with_capacity(64 * nodes.len());
    out.push_str("r,u,residual\n");
    for ((r, u), res) in nodes.iter().zip(report.profile.values()).zip(&residual) {
        writeln!(out, "{r:.16e},{u:.16e},{res:.16e}").expect("writing to a String");
    }
    Ok(out)
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("result documents serialize");
    text.push('\n');
    text
}

pub fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}
