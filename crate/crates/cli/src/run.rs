use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use vortex_core::analysis::{self, Check};
use vortex_core::model::{RegimeKind, VortexProblem};
use vortex_core::solver::{minimize_constrained, minimize_unconstrained, SolveReport};

use crate::emit::{self, float, ResultDoc};
use crate::error::CliError;
use crate::spec::{Command, RunSpec};

/// Runs a spec and returns the process exit status.
pub fn run(spec: &RunSpec) -> Result<i32, CliError> {
    match spec.command {
        Command::Verify => verify(spec),
        Command::Sweep => sweep(spec),
        _ => solve(spec),
    }
}

pub struct Solved {
    pub problem: VortexProblem,
    pub report: SolveReport,
    pub doc: ResultDoc,
}

pub fn solve_only(spec: &RunSpec) -> Result<Solved, CliError> {
    let problem = spec.problem()?;
    let config = spec.solver_config()?;
    let report = match problem.kind() {
        RegimeKind::PowerConstrained => minimize_constrained(&problem, &config)?,
        _ => minimize_unconstrained(&problem, &config)?,
    };
    let doc = ResultDoc::new(&problem, &report)?;
    Ok(Solved { problem, report, doc })
}

fn solve(spec: &RunSpec) -> Result<i32, CliError> {
    let solved = solve_only(spec)?;
    let table = emit::profile_table(&solved.problem, &solved.report)?;
    let (csv, json) = (spec.output_path("csv"), spec.output_path("json"));
    emit::write(&csv, &table)?;
    emit::write(&json, &emit::to_json(&solved.doc))?;
    let r = &solved.report;
    println!(
        "{}: converged={} iterations={} energy={:.10e} omega={:.10e} el_residual={:.3e}",
        solved.doc.model, r.converged, r.iterations, r.energy, r.omega, r.el_residual_norm
    );
    println!("wrote {} and {}", csv.display(), json.display());
    if !r.converged {
        eprintln!("warning: {}", failure_note(r));
        return Ok(3);
    }
    Ok(0)
}

fn failure_note(report: &SolveReport) -> String {
    let max = report.profile.max_abs();
    if max < 1e-12 {
        format!(
            "not converged: profile collapsed toward u = 0 (max |u| = {max:.3e}); try a larger R or another init"
        )
    } else {
        format!(
            "not converged after {} iterations (grad_norm {:.3e})",
            report.iterations, report.grad_norm
        )
    }
}

#[derive(Serialize)]
struct VerifyDoc {
    passed: bool,
    checks: Vec<Check>,
}

fn verify(spec: &RunSpec) -> Result<i32, CliError> {
    let checks = analysis::verify_suite(spec.seed()?.unwrap_or(0))?;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    let passed = checks.iter().all(|c| c.passed);
    let path = spec.output_path("json");
    emit::write(&path, &emit::to_json(&VerifyDoc { passed, checks }))?;
    Ok(if passed { 0 } else { 3 })
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub parameter: String,
    pub value: Value,
    #[serde(flatten)]
    pub result: ResultDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Best {
    pub value: Value,
    pub seed: Option<u64>,
    pub energy: Value,
}

#[derive(Serialize)]
struct SweepDoc<'a> {
    parameter: &'a str,
    rows: &'a [SweepRow],
    best: Vec<Best>,
}

fn failed_row(command: Command, n: i32, seed: Option<u64>) -> ResultDoc {
    let model = match command {
        Command::SolveLogZero => "logarithmic/zero-zero",
        Command::SolveLogPlateau => "logarithmic/zero-plateau",
        _ => "saturable/power-constrained",
    };
    ResultDoc {
        model: model.to_string(),
        n,
        omega: Value::Null,
        energy: Value::Null,
        power: Value::Null,
        grad_norm: Value::Null,
        el_residual_norm: Value::Null,
        iterations: 0,
        converged: false,
        decay_rate: Value::Null,
        bound_lower: Value::Null,
        bound_check: None,
        seed,
    }
}

/// Rows in parameter-major, seed-minor order. Rows run in parallel; a row
/// whose solve fails carries converged=false and the error as its note.
pub fn sweep_rows(spec: &RunSpec) -> Result<Vec<SweepRow>, CliError> {
    let key = spec.sweep_key()?;
    let model = spec.sweep_model()?;
    let values = spec.sweep_values()?;
    let seeds = spec.seeds()?;
    let seeds: Vec<Option<u64>> = if seeds.is_empty() {
        vec![spec.seed()?]
    } else {
        seeds.into_iter().map(Some).collect()
    };
    let base = spec.with_command(model);
    let tasks: Vec<(String, Option<u64>)> = values
        .iter()
        .flat_map(|v| seeds.iter().map(move |s| (v.clone(), *s)))
        .collect();

    Ok(tasks
        .par_iter()
        .map(|(value, seed)| {
            let mut row_spec = base.clone();
            row_spec.set(&key, value.clone());
            if let Some(s) = seed {
                row_spec.set("seed", s.to_string());
            }
            let shown = value.parse::<f64>().map(float).unwrap_or_else(|_| Value::String(value.clone()));
            let n = row_spec.get("n").and_then(|v| v.parse().ok()).unwrap_or(1);
            let (result, note) = match solve_only(&row_spec) {
                Ok(solved) => {
                    let note = (!solved.doc.converged).then(|| failure_note(&solved.report));
                    (solved.doc, note)
                }
                Err(e) => (failed_row(model, n, *seed), Some(e.to_string())),
            };
            SweepRow {
                parameter: key.clone(),
                value: shown,
                result,
                note,
            }
        })
        .collect())
}

/// Energy, seed and emitted energy of the best row so far.
type Winner = Option<(f64, Option<u64>, Value)>;

/// Lowest-energy converged row per parameter value, in sweep order.
pub fn best_rows(rows: &[SweepRow]) -> Vec<Best> {
    let mut best: Vec<Best> = Vec::new();
    let mut current: Option<(Value, Winner)> = None;
    let flush = |entry: (Value, Winner), best: &mut Vec<Best>| {
        let (value, winner) = entry;
        best.push(match winner {
            Some((_, seed, energy)) => Best { value, seed, energy },
            None => Best {
                value,
                seed: None,
                energy: Value::Null,
            },
        });
    };
    for row in rows {
        let energy = row.result.energy.as_f64().filter(|_| row.result.converged);
        match &mut current {
            Some((value, winner)) if *value == row.value => {
                if let Some(e) = energy {
                    if winner.as_ref().is_none_or(|w| e < w.0) {
                        *winner = Some((e, row.result.seed, row.result.energy.clone()));
                    }
                }
            }
            _ => {
                if let Some(done) = current.take() {
                    flush(done, &mut best);
                }
                let winner = energy.map(|e| (e, row.result.seed, row.result.energy.clone()));
                current = Some((row.value.clone(), winner));
            }
        }
    }
    if let Some(done) = current {
        flush(done, &mut best);
    }
    best
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn quoted(text: &str) -> String {
    if text.contains([',', '"', '\n']) {
        format!("\"{}\"", text.replace('"', "\"\""))
    } else {
        text.to_string()
    }
}

pub fn sweep_table(rows: &[SweepRow]) -> String {
    let mut out = String::from(
        "parameter,value,seed,model,n,omega,energy,power,grad_norm,el_residual_norm,iterations,converged,decay_rate,bound_lower,bound_check,note\n",
    );
    for row in rows {
        let r = &row.result;
        let fields = [
            row.parameter.clone(),
            cell(&row.value),
            r.seed.map(|s| s.to_string()).unwrap_or_default(),
            r.model.clone(),
            r.n.to_string(),
            cell(&r.omega),
            cell(&r.energy),
            cell(&r.power),
            cell(&r.grad_norm),
            cell(&r.el_residual_norm),
            r.iterations.to_string(),
            r.converged.to_string(),
            cell(&r.decay_rate),
            cell(&r.bound_lower),
            r.bound_check.map(|b| b.to_string()).unwrap_or_default(),
            row.note.clone().unwrap_or_default(),
        ];
        let line: Vec<String> = fields.iter().map(|f| quoted(f)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

fn sweep(spec: &RunSpec) -> Result<i32, CliError> {
    let rows = sweep_rows(spec)?;
    let best = best_rows(&rows);
    let key = spec.sweep_key()?;
    let (csv, json) = (spec.output_path("csv"), spec.output_path("json"));
    emit::write(&csv, &sweep_table(&rows))?;
    emit::write(
        &json,
        &emit::to_json(&SweepDoc {
            parameter: &key,
            rows: &rows,
            best: best.clone(),
        }),
    )?;
    for row in &rows {
        println!(
            "{}={} seed={:?} converged={} energy={} omega={}{}",
            row.parameter,
            cell(&row.value),
            row.result.seed,
            row.result.converged,
            cell(&row.result.energy),
            cell(&row.result.omega),
            row.note.as_ref().map(|n| format!(" note: {n}")).unwrap_or_default()
        );
    }
    for b in &best {
        println!("best {key}={}: seed={:?} energy={}", cell(&b.value), b.seed, cell(&b.energy));
    }
    println!("wrote {} and {}", csv.display(), json.display());
    Ok(if rows.iter().all(|r| r.result.converged) { 0 } else { 3 })
}
