//! `hydrofluct` command-line pipeline.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure, 4 failed gate.
//! Errors are printed to standard error as one line of JSON.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use hydrofluct::process::Route;
use hydrofluct::{Error, ErrorKind};

use hydrofluct_cli::artifacts::{sha256_hex, Manifest, OutDir, CONFIG_COPY, MANIFEST};
use hydrofluct_cli::config::{Config, SCHEMA_VERSION};
use hydrofluct_cli::stages;

#[derive(Parser)]
#[command(name = "hydrofluct", version, about = "Fluctuations around hydrodynamic steady states")]
struct Cli {
    #[command(subcommand)]
    verb: Verb,
    /// Run configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Overrides the simulation seed of the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Stationary covariance route; defaults to the configuration.
    #[arg(long, global = true, value_enum)]
    route: Option<RouteArg>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Verb {
    /// Steady state, generator, noise and local covariance.
    Steady,
    /// Stationary covariance of the fluctuations.
    Covariance,
    /// Ensemble simulation and statistical checks.
    Simulate,
    /// Fluctuation-dissipation residuals and long-range correlations.
    Analyze,
    /// Every stage in order.
    All,
}

#[derive(ValueEnum, Clone, Copy)]
enum RouteArg {
    Lyapunov,
    Integral,
    Both,
}

impl From<RouteArg> for Route {
    fn from(r: RouteArg) -> Route {
        match r {
            RouteArg::Lyapunov => Route::Lyapunov,
            RouteArg::Integral => Route::Integral,
            RouteArg::Both => Route::Both,
        }
    }
}

enum Failure {
    Error(Error),
    Gates(Vec<String>),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

fn route_name(r: Route) -> &'static str {
    match r {
        Route::Lyapunov => "lyapunov",
        Route::Integral => "integral",
        Route::Both => "both",
    }
}

fn load_manifest(path: &Path, fresh: &Manifest) -> Manifest {
    fs::read_to_string(path)
        .ok()
        .and_then(|t| serde_json::from_str::<Manifest>(&t).ok())
        .filter(|m| m.config_sha256 == fresh.config_sha256 && m.route == fresh.route)
        .unwrap_or_else(|| fresh.clone())
}

fn run(cli: &Cli) -> Result<(), Failure> {
    let path = cli.config.as_ref().ok_or_else(|| Error::Invalid("--config is required".into()))?;
    let text = fs::read_to_string(path).map_err(|e| Error::Invalid(format!("cannot read {}: {e}", path.display())))?;
    let cfg = Config::parse(&text)?;
    let route: Route = cli.route.map(Route::from).unwrap_or(cfg.solver.route);
    let seed = cli.seed.unwrap_or(cfg.process.seed);
    let mut out = OutDir::new(&cli.out)?;
    let fresh = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        library_version: hydrofluct::VERSION.into(),
        schema_version: SCHEMA_VERSION,
        config_file: CONFIG_COPY.into(),
        config_sha256: sha256_hex(text.as_bytes()),
        route: route_name(route).into(),
        stages: Default::default(),
    };
    let mut manifest = load_manifest(&out.path(MANIFEST), &fresh);
    hydrofluct::matrix_io::write_atomic(&out.path(CONFIG_COPY), text.as_bytes())?;

    let verbs: Vec<Verb> = match cli.verb {
        Verb::All => vec![Verb::Steady, Verb::Covariance, Verb::Simulate, Verb::Analyze],
        v => vec![v],
    };
    let mut failed = Vec::new();
    for v in verbs {
        let (name, result) = match v {
            Verb::Steady => ("steady", stages::steady(&cfg, &mut out)),
            Verb::Covariance => ("covariance", stages::covariance(&cfg, &mut out, route)),
            Verb::Simulate => ("simulate", stages::simulate_stage(&cfg, &mut out, seed)),
            Verb::Analyze => ("analyze", stages::analyze(&cfg, &mut out)),
            Verb::All => unreachable!("expanded above"),
        };
        let record = result?;
        failed.extend(record.gates.iter().filter(|g| !g.passed).map(|g| format!("{name}.{}", g.name)));
        manifest.stages.insert(name.into(), record);
        write_manifest(&out, &manifest)?;
        if !failed.is_empty() {
            break;
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Gates(failed))
    }
}

fn write_manifest(out: &OutDir, m: &Manifest) -> Result<(), Error> {
    let mut s = serde_json::to_string_pretty(m).map_err(|e| Error::Invalid(e.to_string()))?;
    s.push('\n');
    hydrofluct::matrix_io::write_atomic(&out.path(MANIFEST), s.as_bytes())
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Validation | ErrorKind::Io => 2,
        ErrorKind::Solver => 3,
        ErrorKind::Gate => 4,
    }
}

fn kind_name(kind: ErrorKind) -> &'static str {
    match kind {
        ErrorKind::Validation => "validation",
        ErrorKind::Io => "io",
        ErrorKind::Solver => "solver",
        ErrorKind::Gate => "gate",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments").trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "validation", "exit_code": 2, "message": first}));
            return ExitCode::from(2);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Error(e)) => {
            let code = exit_code(e.kind());
            eprintln!("{}", json!({"error": kind_name(e.kind()), "exit_code": code, "message": e.to_string()}));
            ExitCode::from(code)
        }
        Err(Failure::Gates(names)) => {
            eprintln!("{}", json!({"error": "gate", "exit_code": 4, "message": "gate failed", "gates": names}));
            ExitCode::from(4)
        }
    }
}
