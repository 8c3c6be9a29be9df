//! Command-line front end: argument parsing and dispatch.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};

use crate::bench::{check_experiment, gradcheck, gradcheck_table, run_experiment, ExperimentResult, GRADCHECK_TARGETS};
use crate::config::Config;
use crate::envs::{
    rollout, zero_policy, BalloonLung, Cartpole, DisturbanceSpec, Env, LearnedLung, Lds, Pendulum, PlanarQuadrotor,
    Trajectory,
};
use crate::error::Error;

pub const SIM_ENVS: [&str; 6] = ["pendulum", "cartpole", "quadrotor", "lds", "balloon-lung", "learned-lung"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Command {
    /// Run a named experiment.
    Bench,
    /// Compare autodiff against finite differences.
    Gradcheck,
    /// Roll out the zero policy.
    Sim,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Parser)]
#[command(
    name = "diffctl",
    about = "Differentiable control experiments",
    after_help = "experiments: ilqr-oracle, pg-oracle, perturbation, adaptive-shock, vent-pipeline, throughput\n\
                  environments: pendulum, cartpole, quadrotor, lds, balloon-lung, learned-lung (gradcheck also takes agents)\n\
                  DIFFCTL_THREADS caps the worker threads"
)]
pub struct CliConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// Experiment or environment name.
    pub name: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Flat `section.key = value` file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// `section.key=value` override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Rollout length for `sim`.
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
}

#[derive(Debug)]
pub enum CliError {
    /// `--help` or `--version`: print and exit 0.
    Help(String),
    Usage(String),
    UnknownName { name: String, valid: Vec<String> },
    Runtime(Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Help(_) => 0,
            CliError::Usage(_) | CliError::UnknownName { .. } => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Help(text) | CliError::Usage(text) => write!(f, "{}", text.trim_end()),
            CliError::UnknownName { name, valid } => {
                write!(f, "error: unknown name `{name}`; valid names: {}", valid.join(", "))
            }
            CliError::Runtime(e) => write!(f, "error: {e}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::UnknownName { name, valid } => CliError::UnknownName { name, valid },
            other => CliError::Runtime(other),
        }
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// Parses the arguments after the program name. Unknown names and malformed
/// overrides are rejected here, before any computation.
pub fn parse_args<I, T>(argv: I) -> Result<CliConfig, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let args = std::iter::once(std::ffi::OsString::from("diffctl")).chain(argv.into_iter().map(Into::into));
    let cfg = CliConfig::try_parse_from(args).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Help(e.render().to_string()),
            _ => CliError::Usage(e.render().to_string()),
        }
    })?;
    match cfg.command {
        Command::Bench => check_experiment(&cfg.name)?,
        Command::Gradcheck if !GRADCHECK_TARGETS.contains(&cfg.name.as_str()) => {
            return Err(CliError::UnknownName {
                name: cfg.name.clone(),
                valid: names(&GRADCHECK_TARGETS),
            })
        }
        Command::Sim if !SIM_ENVS.contains(&cfg.name.as_str()) => {
            return Err(CliError::UnknownName {
                name: cfg.name.clone(),
                valid: names(&SIM_ENVS),
            })
        }
        _ => {}
    }
    let mut scratch = Config::new();
    for o in &cfg.overrides {
        scratch
            .apply_override(o)
            .map_err(|e| CliError::Usage(format!("error: invalid value for '--set': {e}")))?;
    }
    Ok(cfg)
}

impl CliConfig {
    /// Config file entries with `--set` overrides applied on top.
    pub fn load_config(&self) -> Result<Config, CliError> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::Runtime(Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))
                })?;
                Config::parse(&text)?
            }
            None => Config::new(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)
                .map_err(|e| CliError::Usage(format!("error: invalid value for '--set': {e}")))?;
        }
        Ok(cfg)
    }
}

fn trajectory_table(name: &str, env_state_dim: usize, traj: &Trajectory) -> Result<ExperimentResult, Error> {
    let mut columns = vec!["t".to_string()];
    columns.extend((0..env_state_dim).map(|i| format!("x{i}")));
    let cols: Vec<&str> = columns.iter().map(String::as_str).collect();
    let mut result = ExperimentResult::new(&format!("sim-{name}"), &cols);
    for (t, x) in traj.states.iter().enumerate() {
        let mut row = vec![t as f64];
        row.extend_from_slice(x);
        result.push_row(row)?;
    }
    result.set_meta("total_cost", traj.total_cost);
    result.set_meta("steps", traj.horizon());
    Ok(result)
}

fn simulate<E: Env>(name: &str, env: &E, steps: usize) -> Result<ExperimentResult, Error> {
    let m = env.spec().action_dim;
    let traj = rollout(env, zero_policy(m), &env.initial_state(), steps, &DisturbanceSpec::Zero)?;
    trajectory_table(name, env.spec().state_dim, &traj)
}

fn run_sim(name: &str, seed: u64, steps: usize, cfg: &Config) -> Result<ExperimentResult, Error> {
    match name {
        "pendulum" => simulate(name, &Pendulum::from_config(cfg)?, steps),
        "cartpole" => simulate(name, &Cartpole::from_config(cfg)?, steps),
        "quadrotor" => simulate(name, &PlanarQuadrotor::from_config(cfg)?, steps),
        "lds" => simulate(name, &Lds::double_integrator(), steps),
        "balloon-lung" => simulate(name, &BalloonLung::from_config(cfg)?, steps),
        _ => simulate(name, &LearnedLung::untrained(seed), steps),
    }
}

/// Writes `text` to `path` through a temporary file in the same directory,
/// so readers never observe a partial file.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Runs a parsed command; returns the exit code.
pub fn dispatch(cli: &CliConfig, stdout: &mut dyn Write) -> Result<i32, CliError> {
    let cfg = cli.load_config()?;
    let (mut result, code) = match cli.command {
        Command::Bench => (run_experiment(&cli.name, cli.seed, &cfg)?, 0),
        Command::Gradcheck => {
            let report = gradcheck(&cli.name, cli.seed, &cfg)?;
            let code = if report.passed() { 0 } else { 1 };
            (gradcheck_table(&report, cli.seed, &cfg)?, code)
        }
        Command::Sim => (run_sim(&cli.name, cli.seed, cli.steps, &cfg)?, 0),
    };
    for (k, v) in cfg.entries() {
        result.set_meta(&format!("set.{k}"), v);
    }
    result.set_meta("seed", cli.seed);
    result.set_meta("config_hash", cfg.hash_hex());
    let text = match cli.format {
        Format::Csv => result.to_csv(),
        Format::Json => result.to_json(),
    };
    match &cli.out {
        Some(path) => write_atomic(path, &text).map_err(|e| {
            CliError::Runtime(Error::InvalidArgument(format!("cannot write {}: {e}", path.display())))
        })?,
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Runtime(Error::InvalidArgument(format!("cannot write output: {e}"))))?,
    }
    Ok(code)
}

/// Full entry point: parse, dispatch, report. Returns the process exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let outcome = parse_args(argv).and_then(|cli| dispatch(&cli, stdout));
    match outcome {
        Ok(code) => code,
        Err(CliError::Help(text)) => {
            let _ = stdout.write_all(text.as_bytes());
            0
        }
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bench_with_seed() {
        let cli = parse_args(["bench", "ilqr-oracle", "--seed", "7"]).unwrap();
        assert_eq!(cli.command, Command::Bench);
        assert_eq!(cli.name, "ilqr-oracle");
        assert_eq!(cli.seed, 7);
        assert_eq!(cli.format, Format::Csv);
        assert!(cli.out.is_none());
    }

    #[test]
    fn unknown_bench_lists_experiments() {
        match parse_args(["bench", "nosuch"]) {
            Err(CliError::UnknownName { valid, .. }) => assert_eq!(
                valid,
                names(&["ilqr-oracle", "pg-oracle", "perturbation", "adaptive-shock", "vent-pipeline", "throughput"])
            ),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn repeated_overrides() {
        let cli = parse_args(["sim", "pendulum", "--set", "pendulum.torque_max=10", "--set", "pendulum.dt=0.01"]).unwrap();
        let cfg = cli.load_config().unwrap();
        assert_eq!(cfg.f64("pendulum.torque_max", 2.0).unwrap(), 10.0);
        assert_eq!(cfg.f64("pendulum.dt", 0.05).unwrap(), 0.01);
    }

    #[test]
    fn usage_errors_name_the_flag() {
        let e = parse_args(["bench", "ilqr-oracle", "--seed", "x"]).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        assert!(e.to_string().contains("--seed"), "{e}");
        let e = parse_args(["bench", "ilqr-oracle", "--set", "novalue"]).unwrap_err();
        assert!(e.to_string().contains("--set"), "{e}");
        assert_eq!(parse_args(["--help"]).unwrap_err().exit_code(), 0);
        assert_eq!(parse_args(Vec::<String>::new()).unwrap_err().exit_code(), 2);
    }

    #[test]
    fn sim_zero_steps_is_one_row() {
        let cli = parse_args(["sim", "lds", "--steps", "0"]).unwrap();
        let mut out = Vec::new();
        assert_eq!(dispatch(&cli, &mut out).unwrap(), 0);
        let table = ExperimentResult::from_csv(std::str::from_utf8(&out).unwrap()).unwrap();
        assert_eq!(table.rows, vec![vec![0.0, 0.0, 0.0]]);
    }
}
