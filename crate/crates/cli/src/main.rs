//! `amblab`: batch front end for transforms, optimization runs and checks.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use amblab::functionals::{ObjectiveSpec, WindowSpec};
use amblab::optimize::{self, OptimizerConfig, Status};
use amblab::{io, rasterize_time, transform, verify, Error, Objective, TimeGrid, TimeSet};

/// Exit codes.
const EXIT_OK: u8 = 0;
const EXIT_CHECK_FAILED: u8 = 1;
const EXIT_IO: u8 = 2;
const EXIT_SCHEMA: u8 = 3;
const EXIT_DIVERGED: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "amblab", version, about = "Ambiguity-function concentration toolkit")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Global {
    /// Run configuration (JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed overriding the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory (or file, for single-array commands).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Number of grid samples.
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    /// Grid step.
    #[arg(long, global = true)]
    grid_dx: Option<f64>,
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Ambiguity function of a signal CSV.
    Ambiguity { signal: PathBuf },
    /// STFT of a signal CSV with a Gaussian or file window.
    Stft {
        signal: PathBuf,
        /// Window signal CSV; defaults to the standard Gaussian.
        #[arg(long)]
        window: Option<PathBuf>,
        /// Dilation of the Gaussian window.
        #[arg(long, default_value_t = 1.0)]
        lambda: f64,
    },
    /// Maximize the configured objective.
    Optimize,
    /// Run verification checks (`all` or names).
    Verify {
        #[arg(default_values_t = vec!["all".to_string()])]
        suites: Vec<String>,
    },
    /// Gaussian-family baseline for the configured objective.
    Scan,
    /// Time-correlation objective of a signal over `[a, b)`.
    Timecorr {
        signal: PathBuf,
        #[arg(long, num_args = 2, value_names = ["A", "B"], default_values_t = vec![0.0, 1.0])]
        support: Vec<f64>,
        #[arg(long, default_value_t = 1.0)]
        p: f64,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Outputs {
    dir: PathBuf,
    #[serde(default)]
    write_ambiguity: bool,
    #[serde(default = "yes")]
    write_report: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunConfig {
    grid: TimeGrid,
    objective: ObjectiveSpec,
    #[serde(default)]
    optimizer: OptimizerConfig,
    outputs: Outputs,
    #[serde(default)]
    seed: Option<u64>,
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_sha256: String,
    seed: Option<u64>,
    threads: usize,
    wall_time_seconds: f64,
}

/// Failure carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    msg: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::Io { .. } => EXIT_IO,
            Error::NonFiniteObjective | Error::NoConvergence { .. } | Error::RecenterDrift(_) => EXIT_DIVERGED,
            _ => EXIT_SCHEMA,
        };
        Failure {
            code,
            msg: e.to_string(),
        }
    }
}

type CmdResult = Result<u8, Failure>;

fn io_fail(path: &Path, e: std::io::Error) -> Failure {
    Error::Io {
        path: path.to_path_buf(),
        source: e,
    }
    .into()
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn write_text(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_fail(path, e))
}

fn write_manifest(dir: &Path, command: &str, config: &[u8], seed: Option<u64>, started: Instant) -> Result<(), Failure> {
    let m = Manifest {
        command,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config),
        seed,
        threads: rayon::current_num_threads(),
        wall_time_seconds: started.elapsed().as_secs_f64(),
    };
    let text = serde_json::to_string_pretty(&m).map_err(Error::from)? + "\n";
    write_text(&dir.join("manifest.json"), &text)
}

/// Directory holding a file output.
fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Rejects grid flags that disagree with the grid of an input file.
fn check_grid_flags(global: &Global, grid: &TimeGrid) -> Result<(), Failure> {
    let n_ok = global.grid_n.is_none_or(|n| n == grid.n());
    let dx_ok = global.grid_dx.is_none_or(|dx| TimeGrid::new(grid.n(), dx).is_ok_and(|g| g.matches(grid)));
    if n_ok && dx_ok {
        Ok(())
    } else {
        Err(Error::Schema(format!(
            "input grid (n = {}, dx = {}) disagrees with --grid-n/--grid-dx",
            grid.n(),
            grid.dx()
        ))
        .into())
    }
}

fn load_config(global: &Global) -> Result<(RunConfig, Vec<u8>), Failure> {
    let path = global
        .config
        .as_ref()
        .ok_or_else(|| Failure::from(Error::Schema("this command needs --config".into())))?;
    let bytes = fs::read(path).map_err(|e| io_fail(path, e))?;
    let mut cfg: RunConfig = serde_json::from_slice(&bytes).map_err(|e| {
        Failure::from(Error::Parse {
            path: path.clone(),
            line: e.line(),
            msg: e.to_string(),
        })
    })?;
    if global.grid_n.is_some() || global.grid_dx.is_some() {
        let n = global.grid_n.unwrap_or(cfg.grid.n());
        let dx = global.grid_dx.unwrap_or(cfg.grid.dx());
        cfg.grid = TimeGrid::new(n, dx)?;
    }
    if let Some(s) = global.seed.or(cfg.seed) {
        cfg.optimizer.seed = s;
    }
    if let Some(out) = &global.out {
        cfg.outputs.dir = out.clone();
    }
    cfg.optimizer.validate()?;
    Ok((cfg, bytes))
}

fn cmd_ambiguity(global: &Global, signal: &Path) -> CmdResult {
    let started = Instant::now();
    let f = io::read_signal(signal)?;
    check_grid_flags(global, f.grid())?;
    let out = global.out.clone().unwrap_or_else(|| PathBuf::from("ambiguity.csv"));
    let a = transform::ambiguity(&f)?;
    if let Some(d) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(d).map_err(|e| io_fail(d, e))?;
    }
    io::write_tfarray(&out, &a)?;
    write_manifest(&parent_dir(&out), "ambiguity", signal.to_string_lossy().as_bytes(), None, started)?;
    log::info!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn cmd_stft(global: &Global, signal: &Path, window: Option<&Path>, lambda: f64) -> CmdResult {
    let started = Instant::now();
    let f = io::read_signal(signal)?;
    check_grid_flags(global, f.grid())?;
    let spec = match window {
        Some(p) => WindowSpec::File { path: p.to_path_buf() },
        None => WindowSpec::Gaussian { lambda },
    };
    let g = spec.resolve(f.grid())?;
    let out = global.out.clone().unwrap_or_else(|| PathBuf::from("stft.csv"));
    if let Some(d) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(d).map_err(|e| io_fail(d, e))?;
    }
    io::write_tfarray(&out, &transform::stft(&f, &g)?)?;
    let key = format!("{}|{:?}", signal.display(), spec);
    write_manifest(&parent_dir(&out), "stft", key.as_bytes(), None, started)?;
    log::info!("wrote {}", out.display());
    Ok(EXIT_OK)
}

fn cmd_optimize(global: &Global) -> CmdResult {
    let started = Instant::now();
    let (cfg, bytes) = load_config(global)?;
    let report = optimize::optimize(&cfg.objective, &cfg.grid, &cfg.optimizer)?;
    let dir = &cfg.outputs.dir;
    fs::create_dir_all(dir).map_err(|e| io_fail(dir, e))?;
    if cfg.outputs.write_report {
        let text = serde_json::to_string_pretty(&report).map_err(Error::from)? + "\n";
        write_text(&dir.join("report.json"), &text)?;
    }
    io::write_signal(&dir.join("final_signal.csv"), &report.final_signal)?;
    if cfg.outputs.write_ambiguity {
        io::write_tfarray(&dir.join("ambiguity.csv"), &transform::ambiguity(&report.final_signal)?)?;
    }
    write_manifest(dir, "optimize", &bytes, Some(cfg.optimizer.seed), started)?;
    if report.status == Status::Stalled {
        log::warn!("line search stalled after {} iterations", report.iterations);
    }
    if !global.quiet {
        println!(
            "{:?}: objective {:.12} after {} iterations ({:?})",
            report.method, report.final_objective, report.iterations, report.status
        );
    }
    Ok(EXIT_OK)
}

fn cmd_scan(global: &Global) -> CmdResult {
    let started = Instant::now();
    let (cfg, bytes) = load_config(global)?;
    let obj = Objective::compile(&cfg.objective, &cfg.grid)?;
    let res = optimize::gaussian_family_scan(&obj, &cfg.optimizer.scan.lambdas, &cfg.optimizer.scan.centers)?;
    let dir = &cfg.outputs.dir;
    let text = serde_json::to_string_pretty(&res).map_err(Error::from)? + "\n";
    write_text(&dir.join("scan.json"), &text)?;
    write_manifest(dir, "scan", &bytes, None, started)?;
    if !global.quiet {
        println!(
            "best objective {:.12} at lambda = {}, center = ({}, {})",
            res.best_objective, res.lambda, res.center.x, res.center.omega
        );
    }
    Ok(EXIT_OK)
}

fn cmd_verify(global: &Global, suites: &[String]) -> CmdResult {
    let started = Instant::now();
    let seed = global.seed.unwrap_or(0);
    let reports = verify::run_suite(suites, seed)?;
    let json = serde_json::to_string_pretty(&reports).map_err(Error::from)? + "\n";
    let table = verify::summary_table(&reports);
    match &global.out {
        Some(dir) => {
            write_text(&dir.join("verify_report.json"), &json)?;
            write_manifest(dir, "verify", suites.join(",").as_bytes(), Some(seed), started)?;
            if !global.quiet {
                print!("{table}");
            }
        }
        None => {
            print!("{json}");
            if !global.quiet {
                eprint!("{table}");
            }
        }
    }
    Ok(if reports.iter().all(|r| r.passed) {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    })
}

fn cmd_timecorr(global: &Global, signal: &Path, support: &[f64], p: f64) -> CmdResult {
    let started = Instant::now();
    let f = io::read_signal(signal)?;
    check_grid_flags(global, f.grid())?;
    let set = TimeSet::interval(support[0], support[1]);
    let mask = rasterize_time(&set, f.grid())?;
    let obj = Objective::timecorr(mask, p)?;
    #[derive(Serialize)]
    struct Out {
        value: f64,
        bound: f64,
        p: f64,
        support: TimeSet,
    }
    let out = Out {
        value: obj.value(&f)?,
        bound: obj.upper_bound().unwrap_or(f64::NAN),
        p,
        support: set,
    };
    let text = serde_json::to_string_pretty(&out).map_err(Error::from)? + "\n";
    match &global.out {
        Some(dir) => {
            write_text(&dir.join("timecorr.json"), &text)?;
            write_manifest(dir, "timecorr", signal.to_string_lossy().as_bytes(), None, started)?;
        }
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("AMBLAB_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Failure::from(Error::Schema(format!("AMBLAB_THREADS must be an integer, got {v:?}"))))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::from(Error::InvalidParameter(e.to_string())))?;
    }
    Ok(())
}

fn run(cli: &Cli) -> CmdResult {
    configure_threads()?;
    let g = &cli.global;
    match &cli.command {
        Command::Ambiguity { signal } => cmd_ambiguity(g, signal),
        Command::Stft { signal, window, lambda } => cmd_stft(g, signal, window.as_deref(), *lambda),
        Command::Optimize => cmd_optimize(g),
        Command::Verify { suites } => cmd_verify(g, suites),
        Command::Scan => cmd_scan(g),
        Command::Timecorr { signal, support, p } => cmd_timecorr(g, signal, support, *p),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.global.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
