//! Run specifications: `key=value` arguments, optionally layered over a flat
//! spec file with one `key = value` per line.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use vortex_core::grid::Grading;
use vortex_core::model::VortexProblem;
use vortex_core::solver::{Init, SolverConfig};

use crate::error::CliError;

/// Environment variable naming the default output directory.
pub const OUT_DIR_VAR: &str = "VORTEX_OUT_DIR";

const KEYS: &[&str] = &[
    "command",
    "model",
    "alpha",
    "beta",
    "s",
    "gamma",
    "n",
    "omega",
    "mu",
    "P0",
    "R",
    "N",
    "grading",
    "ratio",
    "max_iters",
    "grad_tol",
    "armijo_c",
    "backtrack",
    "init",
    "a",
    "b",
    "k",
    "lambda",
    "radius",
    "seed",
    "seeds",
    "amplitude",
    "projection",
    "metric_shift",
    "out",
    "name",
    "sweep",
    "values",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    SolveLogZero,
    SolveLogPlateau,
    SolveSatConstrained,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::SolveLogZero => "solve-log-zero",
            Command::SolveLogPlateau => "solve-log-plateau",
            Command::SolveSatConstrained => "solve-sat-constrained",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }

    pub fn is_solve(self) -> bool {
        matches!(
            self,
            Command::SolveLogZero | Command::SolveLogPlateau | Command::SolveSatConstrained
        )
    }
}

impl FromStr for Command {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "solve-log-zero" | "log-zero" => Command::SolveLogZero,
            "solve-log-plateau" | "log-plateau" => Command::SolveLogPlateau,
            "solve-sat-constrained" | "sat-constrained" => Command::SolveSatConstrained,
            "verify" => Command::Verify,
            "sweep" => Command::Sweep,
            other => return Err(CliError::usage(format!("unknown command {other:?}"))),
        })
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub command: Command,
    values: BTreeMap<String, String>,
}

fn canonical_key(key: &str) -> &str {
    match key {
        "p0" | "power" => "P0",
        "r" | "r_max" => "R",
        "intervals" => "N",
        "ω" => "omega",
        "α" => "alpha",
        "β" => "beta",
        "γ" => "gamma",
        other => other,
    }
}

fn split_pair(text: &str) -> Result<(String, String), CliError> {
    let (k, v) = text
        .split_once('=')
        .ok_or_else(|| CliError::usage(format!("expected key=value, got {text:?}")))?;
    let key = canonical_key(k.trim());
    if key != "spec" && !KEYS.contains(&key) {
        return Err(CliError::usage(format!("unknown key {:?}", k.trim())));
    }
    Ok((key.to_string(), v.trim().to_string()))
}

/// Lines of `key = value`; blank lines and `#` comments are skipped.
pub fn parse_spec_file(text: &str) -> Result<Vec<(String, String)>, CliError> {
    text.lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .filter(|l| !l.is_empty())
        .map(split_pair)
        .collect()
}

impl RunSpec {
    /// Parses command-line arguments (program name excluded). The command is
    /// the first bare word or the `command` key; `spec=PATH` (or `--spec PATH`)
    /// loads a spec file whose entries the remaining arguments override.
    pub fn from_args<I, S>(args: I) -> Result<Self, CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut command = None;
        let mut pairs = Vec::new();
        let mut spec_file = None;
        let mut it = args.into_iter();
        while let Some(arg) = it.next() {
            let arg = arg.as_ref();
            if arg == "--spec" {
                let path = it.next().ok_or_else(|| CliError::usage("--spec needs a path"))?;
                spec_file = Some(PathBuf::from(path.as_ref()));
            } else if arg.contains('=') {
                let (k, v) = split_pair(arg)?;
                if k == "spec" {
                    spec_file = Some(PathBuf::from(v));
                } else {
                    pairs.push((k, v));
                }
            } else if command.is_none() {
                command = Some(arg.parse::<Command>()?);
            } else {
                return Err(CliError::usage(format!("unexpected argument {arg:?}")));
            }
        }

        let mut values = BTreeMap::new();
        if let Some(path) = spec_file {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            for (k, v) in parse_spec_file(&text)? {
                if k == "spec" {
                    return Err(CliError::usage("spec files cannot include other spec files"));
                }
                values.insert(k, v);
            }
        }
        for (k, v) in pairs {
            values.insert(k, v);
        }
        let from_key = values.remove("command").map(|c| c.parse::<Command>()).transpose()?;
        let command = match (command, from_key) {
            (Some(a), Some(b)) if a != b => {
                return Err(CliError::usage(format!("conflicting commands {a} and {b}")))
            }
            (Some(a), _) | (None, Some(a)) => a,
            (None, None) => return Err(CliError::usage("no command given")),
        };
        Ok(Self { command, values })
    }

    pub fn set(&mut self, key: &str, value: impl Into<String>) {
        self.values.insert(canonical_key(key).to_string(), value.into());
    }

    pub fn with_command(&self, command: Command) -> Self {
        Self {
            command,
            values: self.values.clone(),
        }
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        self.get(key)
            .map(|v| {
                v.parse::<T>()
                    .map_err(|_| CliError::usage(format!("cannot parse {key}={v:?}")))
            })
            .transpose()
    }

    fn real(&self, key: &str, default: f64) -> Result<f64, CliError> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn required(&self, key: &str) -> Result<f64, CliError> {
        self.parsed(key)?
            .ok_or_else(|| CliError::usage(format!("{} needs {key}=…", self.command)))
    }

    pub fn seed(&self) -> Result<Option<u64>, CliError> {
        self.parsed("seed")
    }

    /// `seeds=1,2,3`; empty when absent.
    pub fn seeds(&self) -> Result<Vec<u64>, CliError> {
        list(self.get("seeds"), "seeds")
    }

    /// `values=0.05,0.1`, kept as text so each row parses exactly as a solve would.
    pub fn sweep_values(&self) -> Result<Vec<String>, CliError> {
        let raw = self
            .get("values")
            .ok_or_else(|| CliError::usage("sweep needs values=v1,v2,…"))?;
        let values: Vec<String> = raw
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(CliError::usage("sweep needs at least one value"));
        }
        Ok(values)
    }

    pub fn sweep_key(&self) -> Result<String, CliError> {
        let key = self
            .get("sweep")
            .ok_or_else(|| CliError::usage("sweep needs sweep=<parameter>"))?;
        let key = canonical_key(key);
        if !KEYS.contains(&key) || matches!(key, "command" | "sweep" | "values" | "seeds" | "out" | "name" | "model") {
            return Err(CliError::usage(format!("cannot sweep over {key:?}")));
        }
        Ok(key.to_string())
    }

    /// The solve command a sweep runs: `model=…`, or inferred from the swept key.
    pub fn sweep_model(&self) -> Result<Command, CliError> {
        if let Some(m) = self.get("model") {
            let c: Command = m.parse()?;
            if !c.is_solve() {
                return Err(CliError::usage(format!("model must name a solve command, got {m:?}")));
            }
            return Ok(c);
        }
        match self.sweep_key()?.as_str() {
            "P0" | "s" | "gamma" => Ok(Command::SolveSatConstrained),
            "omega" | "alpha" | "beta" | "mu" => Ok(Command::SolveLogZero),
            other => Err(CliError::usage(format!("sweep over {other} needs model=<solve command>"))),
        }
    }

    pub fn name(&self) -> String {
        self.get("name").unwrap_or(self.command.name()).to_string()
    }

    /// `out=`, else the environment default, else the working directory.
    pub fn out_dir(&self) -> PathBuf {
        match self.get("out") {
            Some(p) => PathBuf::from(p),
            None => std::env::var_os(OUT_DIR_VAR).map(PathBuf::from).unwrap_or_else(|| PathBuf::from(".")),
        }
    }

    pub fn output_path(&self, extension: &str) -> PathBuf {
        let dir = self.out_dir();
        Path::new(&dir).join(format!("{}.{extension}", self.name()))
    }

    fn winding(&self) -> Result<i32, CliError> {
        Ok(self.parsed("n")?.unwrap_or(1))
    }

    pub fn problem(&self) -> Result<VortexProblem, CliError> {
        let n = self.winding()?;
        let problem = match self.command {
            Command::SolveLogZero => {
                let (alpha, beta) = (self.real("alpha", 1.0)?, self.real("beta", 1.0)?);
                let omega = self.required("omega")?;
                let r = self.real("R", 20.0)?;
                match self.parsed::<f64>("mu")? {
                    Some(mu) => VortexProblem::log_zero_zero_with_floor(n, alpha, beta, omega, r, mu),
                    None => VortexProblem::log_zero_zero(n, alpha, beta, omega, r),
                }
            }
            Command::SolveLogPlateau => VortexProblem::log_zero_plateau(
                n,
                self.real("alpha", 1.0)?,
                self.real("beta", 1.0)?,
                self.required("omega")?,
                self.real("R", 40.0)?,
            ),
            Command::SolveSatConstrained => VortexProblem::sat_constrained(
                n,
                self.real("s", 1.0)?,
                self.real("gamma", 3.0)?,
                self.required("P0")?,
                self.real("R", 20.0)?,
            ),
            Command::Verify | Command::Sweep => {
                return Err(CliError::usage(format!("{} does not define a problem", self.command)))
            }
        };
        Ok(problem?)
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let d = SolverConfig::default();
        let grading = match self.get("grading").unwrap_or("uniform") {
            "uniform" => Grading::Uniform,
            "geometric" => Grading::Geometric {
                ratio: self.real("ratio", 1.001)?,
            },
            other => return Err(CliError::usage(format!("grading must be uniform or geometric, got {other:?}"))),
        };
        let seed = self.seed()?;
        let init = match self.get("init") {
            None if seed.is_some() => "random",
            None => "auto",
            Some(v) => v,
        };
        let init = match init {
            "auto" => Init::Auto,
            "tent" => Init::Tent {
                a: self.real("a", 0.5 * self.real("R", 20.0)?)?,
                b: self.real("b", 1.0)?,
            },
            "trial" => Init::TrialV {
                k: self.required("k")?,
                lambda: self.required("lambda")?,
                radius: self.required("radius")?,
            },
            "random" => Init::Random {
                seed: seed.unwrap_or(0),
                amplitude: self.real("amplitude", 1.0)?,
            },
            other => {
                return Err(CliError::usage(format!(
                    "init must be auto, tent, trial or random, got {other:?}"
                )))
            }
        };
        let config = SolverConfig {
            intervals: self.parsed("N")?.unwrap_or(d.intervals),
            grading,
            max_iters: self.parsed("max_iters")?.unwrap_or(d.max_iters),
            grad_tol: self.real("grad_tol", d.grad_tol)?,
            armijo_c: self.real("armijo_c", d.armijo_c)?,
            backtrack: self.real("backtrack", d.backtrack)?,
            init,
            nonneg_projection: self.parsed("projection")?.unwrap_or(d.nonneg_projection),
            metric_shift: self.parsed("metric_shift")?,
        };
        config.validate()?;
        Ok(config)
    }
}

fn list<T: FromStr>(raw: Option<&str>, key: &str) -> Result<Vec<T>, CliError> {
    let Some(raw) = raw else { return Ok(Vec::new()) };
    raw.split(',')
        .map(str::trim)
        .filter(|v| !v.is_empty())
        .map(|v| v.parse().map_err(|_| CliError::usage(format!("cannot parse {key} entry {v:?}"))))
        .collect()
}
