//! `hnnwalk`: command-line driver for random walks on HNN extensions.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use hnn_walk::config::ExperimentConfig;
use hnn_walk::estimators::HorizonSchedule;
use hnn_walk::experiment::{
    parse_grid, run_clt, run_drift_with, run_sweep, run_xi, simulate, zcheck_simulate, zcheck_values, Report,
    SweepParam, ZCheckReport,
};
use hnn_walk::group::{catalog, validate_presentation};
use hnn_walk::Error;

#[derive(Parser)]
#[command(name = "hnnwalk", version, about = "Random walks on HNN extensions")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    steps: Option<u64>,
    #[arg(long)]
    replicas: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for output files; JSON goes to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Normalise words read from stdin, one per line.
    Nf {
        /// Defaults to the Klein four-group example.
        #[arg(long)]
        config: Option<PathBuf>,
    },
    /// Sample trajectories to CSV.
    Simulate {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        emit_cycles: bool,
        /// Record a CSV row every this many steps (default steps/100).
        #[arg(long)]
        record_every: Option<u64>,
    },
    /// Direct, regeneration and π-formula drift estimates.
    Drift {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Central-limit check of ℓ(X_n).
    Clt {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Escape probabilities ξ(t·b) and ξ(t⁻¹·a).
    Xi {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        horizon_schedule: Option<String>,
        /// Walks per start point (default: xi_trials from the config).
        #[arg(long)]
        trials: Option<u64>,
    },
    /// Generating functions of the ℤ-projection, optionally against simulation.
    Zcheck {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        p: Option<f64>,
        #[arg(long, default_value_t = 1.0)]
        z: f64,
        /// Number of Monte Carlo excursions.
        #[arg(long)]
        simulate: Option<u64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Drift over a parameter grid.
    Sweep {
        #[command(flatten)]
        run: RunArgs,
        /// p, alpha or mu0:NAME.
        #[arg(long)]
        param: String,
        /// LO:HI:STEP.
        #[arg(long)]
        grid: String,
    },
}

enum CliError {
    Core(Error),
    Io(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    fn report(&self) -> (&'static str, u8) {
        match self {
            CliError::Io(_) => ("IoError", 4),
            CliError::Core(e) => match e {
                Error::Config(_) | Error::Group(_) | Error::InvalidParams(_) => ("ConfigError", 2),
                Error::Grid(_) => ("GridError", 2),
                Error::Regime(_) => ("RegimeError", 3),
                Error::Domain(_) => ("DomainError", 2),
                _ => ("EstimationError", 1),
            },
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Io(m) => m.clone(),
            CliError::Core(e) => e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    Ok(ExperimentConfig::from_json(&text)?)
}

fn load_run(run: &RunArgs) -> CliResult<ExperimentConfig> {
    let mut cfg = load(&run.config)?;
    if let Some(s) = run.steps {
        cfg.steps = s;
    }
    if let Some(r) = run.replicas {
        cfg.replicas = r;
    }
    if let Some(s) = run.seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn out_dir(out: &Option<PathBuf>) -> CliResult<Option<&Path>> {
    match out {
        Some(d) => {
            fs::create_dir_all(d).map_err(|e| CliError::Io(format!("{}: {e}", d.display())))?;
            Ok(Some(d.as_path()))
        }
        None => Ok(None),
    }
}

fn emit_json(json: &str, out: Option<&Path>, name: &str) -> CliResult {
    match out {
        Some(d) => {
            let path = d.join(name);
            fs::write(&path, format!("{json}\n")).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        }
        None => println!("{json}"),
    }
    Ok(())
}

fn write_csv<T: serde::Serialize>(rows: &[T], w: impl Write) -> CliResult {
    let mut wr = csv::Writer::from_writer(w);
    for r in rows {
        wr.serialize(r)?;
    }
    wr.flush()?;
    Ok(())
}

fn csv_file<T: serde::Serialize>(rows: &[T], path: PathBuf) -> CliResult {
    let f = fs::File::create(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    write_csv(rows, io::BufWriter::new(f))
}

fn cmd_nf(config: Option<PathBuf>) -> CliResult {
    let pres = match config {
        Some(path) => {
            let cfg = load(&path)?;
            let gens: Vec<String> = cfg.mu0.keys().cloned().collect();
            validate_presentation(&cfg.group, &gens).map_err(Error::from)?
        }
        None => validate_presentation(&catalog::example_klein_four(), &["a".into(), "b".into()]).map_err(Error::from)?,
    };
    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        let nf = pres.normalize_str(line.trim()).map_err(Error::from)?;
        writeln!(out, "{}", pres.format(&nf))?;
    }
    Ok(())
}

fn cmd_simulate(run: &RunArgs, emit_cycles: bool, record_every: Option<u64>) -> CliResult {
    let cfg = load_run(run)?;
    let setup = cfg.build()?;
    let out = out_dir(&run.out)?;
    if emit_cycles && out.is_none() {
        return Err(Error::Config("--emit-cycles needs --out".into()).into());
    }
    let every = record_every.unwrap_or((cfg.steps / 100).max(1));
    let res = simulate(&setup, cfg.steps, cfg.replicas, cfg.seed, every, emit_cycles)?;
    match out {
        Some(d) => {
            csv_file(&res.paths, d.join("trajectories.csv"))?;
            if let Some(c) = &res.cycles {
                csv_file(c, d.join("cycles.csv"))?;
            }
            emit_json(&Report::new("simulate", &cfg, &res.summary).to_json(), out, "summary.json")
        }
        None => write_csv(&res.paths, io::stdout().lock()),
    }
}

fn cmd_drift(run: &RunArgs) -> CliResult {
    let cfg = load_run(run)?;
    let setup = cfg.build()?;
    let out = out_dir(&run.out)?;
    let (report, _) = run_drift_with(&setup, cfg.steps, cfg.replicas, cfg.seed)?;
    emit_json(&Report::new("drift", &cfg, report).to_json(), out, "drift.json")
}

fn cmd_clt(run: &RunArgs) -> CliResult {
    let cfg = load_run(run)?;
    let setup = cfg.build()?;
    let out = out_dir(&run.out)?;
    let report = run_clt(&setup, cfg.steps, cfg.replicas, cfg.seed)?;
    emit_json(&Report::new("clt", &cfg, report).to_json(), out, "clt.json")
}

fn cmd_xi(run: &RunArgs, schedule: Option<String>, trials: Option<u64>) -> CliResult {
    let mut cfg = load_run(run)?;
    if let Some(s) = schedule {
        cfg.horizon_schedule = s.parse::<HorizonSchedule>()?;
    }
    if let Some(t) = trials {
        cfg.xi_trials = t;
    }
    let setup = cfg.build()?;
    let out = out_dir(&run.out)?;
    let report = run_xi(&setup, cfg.horizon_schedule, cfg.xi_trials, cfg.seed)?;
    emit_json(&Report::new("xi", &cfg, report).to_json(), out, "xi.json")
}

#[allow(clippy::too_many_arguments)]
fn cmd_zcheck(
    config: Option<PathBuf>,
    alpha: Option<f64>,
    p: Option<f64>,
    z: f64,
    sims: Option<u64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> CliResult {
    let out = out_dir(&out)?;
    let cfg = match config {
        Some(path) => {
            let mut c = load(&path)?;
            if let Some(a) = alpha {
                c.alpha = a;
            }
            if let Some(pp) = p {
                c.p = pp;
            }
            c
        }
        None => {
            let (Some(a), Some(pp)) = (alpha, p) else {
                return Err(Error::Config("zcheck needs --config or both --alpha and --p".into()).into());
            };
            let mut v = serde_json::to_value(catalog::degenerate_klein_four()).expect("catalog serialises");
            let o = v.as_object_mut().expect("object");
            o.insert("mu0".into(), serde_json::json!({"a": 0.5, "b": 0.5}));
            o.insert("alpha".into(), a.into());
            o.insert("p".into(), pp.into());
            ExperimentConfig::from_json(&v.to_string())?
        }
    };
    let mut cfg = cfg;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    let mut report: ZCheckReport = zcheck_values(cfg.alpha, cfg.p, z)?;
    if let Some(n) = sims {
        let setup = cfg.build()?;
        report.simulation = Some(zcheck_simulate(&setup, n, cfg.seed)?);
    }
    emit_json(&Report::new("zcheck", &cfg, report).to_json(), out, "zcheck.json")
}

fn cmd_sweep(run: &RunArgs, param: &str, grid: &str) -> CliResult {
    let cfg = load_run(run)?;
    let param: SweepParam = param.parse()?;
    let grid = parse_grid(grid)?;
    let out = out_dir(&run.out)?;
    let report = run_sweep(&cfg, &param, &grid)?;
    if let Some(d) = out {
        #[derive(serde::Serialize)]
        struct Row {
            segment: u32,
            value: f64,
            lambda: f64,
            lambda_se: f64,
            sigma2: Option<f64>,
            sigma2_se: Option<f64>,
            second_difference: Option<f64>,
            second_difference_se: Option<f64>,
        }
        let rows: Vec<Row> = report
            .points
            .iter()
            .map(|p| Row {
                segment: p.segment,
                value: p.value,
                lambda: p.lambda.point,
                lambda_se: p.lambda.std_error,
                sigma2: p.sigma2.as_ref().map(|s| s.point),
                sigma2_se: p.sigma2.as_ref().map(|s| s.std_error),
                second_difference: p.second_difference.map(|d| d.0),
                second_difference_se: p.second_difference.map(|d| d.1),
            })
            .collect();
        csv_file(&rows, d.join("sweep.csv"))?;
    }
    emit_json(&Report::new("sweep", &cfg, report).to_json(), out, "sweep.json")
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Nf { config } => cmd_nf(config),
        Command::Simulate {
            run,
            emit_cycles,
            record_every,
        } => cmd_simulate(&run, emit_cycles, record_every),
        Command::Drift { run } => cmd_drift(&run),
        Command::Clt { run } => cmd_clt(&run),
        Command::Xi {
            run,
            horizon_schedule,
            trials,
        } => cmd_xi(&run, horizon_schedule, trials),
        Command::Zcheck {
            config,
            alpha,
            p,
            z,
            simulate,
            seed,
            out,
        } => cmd_zcheck(config, alpha, p, z, simulate, seed, out),
        Command::Sweep { run, param, grid } => cmd_sweep(&run, &param, &grid),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let (kind, code) = e.report();
            eprintln!("{kind}: {}", e.message());
            ExitCode::from(code)
        }
    }
}
