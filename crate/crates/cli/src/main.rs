//! `xxz-sim`: run simulator protocols from JSON configurations.

// `!(x > 0)` is the intended form: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod error;
mod run;
mod selftest;
mod sweep;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use config::RunConfig;
use error::CliError;
use run::{Outcome, Protocol};

#[derive(Parser)]
#[command(name = "xxz-sim", version, about = "Cavity-mediated XXZ spin simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON run configuration; defaults apply to every omitted field.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed, overriding `seed`.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Mean-field time evolution of a prepared state.
    Evolve(Common),
    /// Two-quench Hamiltonian tomography over field angles.
    Tomography(Common),
    /// Zero-field magnetic susceptibility from a longitudinal-field scan.
    Susceptibility(Common),
    /// Classical susceptibility map over the interaction plane.
    PhaseDiagram(Common),
    /// Phase winding and contrast after quenching the aligning field.
    Dephase(Common),
    /// Exact spectrum of a few spin-1 atoms; frequencies in Hz.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, allow_hyphen_values = true)]
        jxy: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        jz: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hx: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        hz: Option<f64>,
        /// Comma-separated coupling weights, one per atom.
        #[arg(long, value_delimiter = ',')]
        weights: Option<Vec<f64>>,
    },
    /// Quick invariant checks.
    Selftest,
    /// Repeat a protocol over values of one configuration field.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Protocol to run, overriding `protocol` in the configuration.
        #[arg(long)]
        protocol: Option<String>,
        /// Dotted path into the configuration, e.g. `dephase.interaction.value`.
        #[arg(long)]
        param: String,
        /// Comma-separated values; each is parsed as JSON.
        #[arg(long, default_value = "", allow_hyphen_values = true)]
        values: String,
    },
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
            RunConfig::parse(&text)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.output_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn check_protocol(cfg: &RunConfig, protocol: Protocol) -> Result<(), CliError> {
    match &cfg.protocol {
        Some(name) if name.parse::<Protocol>()? != protocol => Err(CliError::Config(format!(
            "configuration is for protocol '{name}' but '{protocol}' was requested"
        ))),
        _ => Ok(()),
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("XXZ_SIM_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("XXZ_SIM_THREADS must be a positive integer (got '{raw}')")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)]) -> Result<Vec<String>, CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut names = Vec::new();
    for (name, bytes) in files {
        let path = dir.join(name);
        fs::write(&path, bytes).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        names.push(name.clone());
    }
    Ok(names)
}

fn print_table(header: &[&str], rows: &[Vec<String>]) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{}", header.join(","));
    for row in rows {
        let _ = writeln!(out, "{}", row.join(","));
    }
}

fn manifest(command: &str, cfg: &RunConfig, outputs: Vec<String>, extra: Value, warnings: &[String], started: Instant) -> Value {
    json!({
        "tool": "xxz-sim",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": cfg,
        "resolved": extra,
        "outputs": outputs,
        "warnings": warnings,
        "threads": rayon::current_num_threads(),
        "wall_time_s": started.elapsed().as_secs_f64(),
    })
}

fn finish(dir: &Path, value: &Value) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(e.to_string()))? + "\n";
    let path = dir.join("manifest.json");
    fs::write(&path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn run_single(protocol: Protocol, cfg: RunConfig) -> Result<(), CliError> {
    check_protocol(&cfg, protocol)?;
    let started = Instant::now();
    let Outcome { files, summary, details, warnings } = protocol.run(&cfg)?;
    for w in &warnings {
        log::warn!("{w}");
    }
    let mut names = write_outputs(&cfg.output_dir, &files)?;
    names.push("manifest.json".into());
    let m = manifest(protocol.name(), &cfg, names, details, &warnings, started);
    finish(&cfg.output_dir, &m)?;
    print_table(protocol.summary_header(), &summary);
    Ok(())
}

fn run_sweep(common: &Common, protocol: Option<&str>, param: &str, values: &str) -> Result<(), CliError> {
    let cfg = load(common)?;
    let name = protocol
        .map(str::to_string)
        .or_else(|| cfg.protocol.clone())
        .ok_or_else(|| CliError::Config("sweep needs --protocol or a 'protocol' entry in the configuration".into()))?;
    let protocol: Protocol = name.parse()?;
    let values = sweep::parse_values(values);
    let started = Instant::now();
    let points = sweep::run_sweep(&cfg, protocol, param, &values)?;
    let failed: Vec<String> = points
        .iter()
        .filter_map(|p| p.result.as_ref().err().map(|e| e.to_string()))
        .collect();
    for f in &failed {
        log::warn!("{f}");
    }
    let csv = sweep::sweep_csv(protocol, &points)?;
    let names = write_outputs(&cfg.output_dir, &[("sweep.csv".into(), csv.clone())])?;
    let extra = json!({ "protocol": protocol.name(), "parameter": param, "values": values, "failed_points": failed.len() });
    let m = manifest("sweep", &cfg, names.into_iter().chain(["manifest.json".to_string()]).collect(), extra, &failed, started);
    finish(&cfg.output_dir, &m)?;
    std::io::stdout().lock().write_all(&csv)?;
    Ok(())
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    configure_threads()?;
    match cli.command {
        Command::Evolve(c) => run_single(Protocol::Evolve, load(&c)?),
        Command::Tomography(c) => run_single(Protocol::Tomography, load(&c)?),
        Command::Susceptibility(c) => run_single(Protocol::Susceptibility, load(&c)?),
        Command::PhaseDiagram(c) => run_single(Protocol::PhaseDiagram, load(&c)?),
        Command::Dephase(c) => run_single(Protocol::Dephase, load(&c)?),
        Command::Spectrum { common, n, jxy, jz, hx, hz, weights } => {
            let mut cfg = load(&common)?;
            let s = &mut cfg.spectrum;
            if let Some(n) = n {
                s.n = n;
                if weights.is_none() && s.weights.as_ref().is_some_and(|w| w.len() != n) {
                    s.weights = None;
                }
            }
            s.j_xy_hz = jxy.unwrap_or(s.j_xy_hz);
            s.j_z_hz = jz.unwrap_or(s.j_z_hz);
            s.h_x_hz = hx.unwrap_or(s.h_x_hz);
            s.h_z_hz = hz.unwrap_or(s.h_z_hz);
            if weights.is_some() {
                s.weights = weights;
            }
            run_single(Protocol::Spectrum, cfg)
        }
        Command::Selftest => match selftest::run() {
            0 => Ok(()),
            k => Err(CliError::Numerical(format!("{k} self-test check(s) failed"))),
        },
        Command::Sweep { common, protocol, param, values } => run_sweep(&common, protocol.as_deref(), &param, &values),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("xxz-sim: {e}");
            e.exit_code()
        }
    }
}
