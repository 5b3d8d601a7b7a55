//! Command-line front end: `synthesize`, `verify`, `simulate` and
//! `oracle-compare` over a JSON run configuration.

pub mod config;
pub mod report;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use qfec_core::trajectory::{Protocol, SimConfig};
use qfec_core::{build_code, master_equation_oracle, trace_distance, StabilizerCode};
use serde::Serialize;

pub use config::{canonical_config, config_digest, parse_config, ConfigError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "qfec",
    version,
    about = "Error correction for continuously detected errors"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the synthesized code and driving Hamiltonian.
    Synthesize(CommonArgs),
    /// Check correctability, anticommutation and no-jump invariance.
    Verify(CommonArgs),
    /// Run the trajectory ensemble and write the fidelity CSV.
    Simulate(CommonArgs),
    /// Compare the ensemble mean against the master-equation integrator.
    OracleCompare(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub trajectories: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub no_feedback: bool,
    #[arg(long)]
    pub no_driving: bool,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub config_digest: String,
    pub artifact_version: String,
    pub outputs: Vec<String>,
    pub wall_time: f64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Verification,
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e.to_string())
    }
}

impl From<qfec_core::Error> for Failure {
    fn from(e: qfec_core::Error) -> Self {
        Failure::Usage(describe(&e))
    }
}

/// `Name: message`, where `Name` is the error variant.
fn describe(e: &qfec_core::Error) -> String {
    let debug = format!("{e:?}");
    let name = debug
        .split(|c: char| !c.is_alphanumeric())
        .next()
        .unwrap_or_default();
    let text = e.to_string();
    if text.starts_with(name) {
        text
    } else {
        format!("{name}: {text}")
    }
}

fn io_failure(path: &Path, e: std::io::Error) -> Failure {
    Failure::Usage(format!("{}: {e}", path.display()))
}

impl CommonArgs {
    fn load(&self) -> Result<SimConfig, Failure> {
        let text = fs::read_to_string(&self.config).map_err(|e| io_failure(&self.config, e))?;
        let mut cfg = parse_config(&text)?;
        if let Some(t) = self.trajectories {
            cfg.trajectories = t;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(dt) = self.dt {
            cfg.dt = dt;
        }
        if self.no_feedback {
            cfg.feedback = false;
        }
        if self.no_driving {
            cfg.driving = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn code_for(cfg: &SimConfig) -> Result<StabilizerCode, Failure> {
    Ok(match &cfg.code {
        Some(gens) => StabilizerCode::from_generators(cfg.n, gens.clone())?,
        None => build_code(&cfg.channels, cfg.n)?,
    })
}

/// Writes every `(path, contents)` pair, refusing to replace existing files
/// unless `force` is set. Nothing is written if any target is blocked.
fn write_outputs(files: &[(PathBuf, String)], force: bool) -> Result<(), Failure> {
    if !force {
        if let Some((p, _)) = files.iter().find(|(p, _)| p.exists()) {
            return Err(Failure::Usage(format!(
                "{} exists; pass --force to overwrite",
                p.display()
            )));
        }
    }
    for (p, contents) in files {
        fs::write(p, contents).map_err(|e| io_failure(p, e))?;
    }
    Ok(())
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

/// Writes `output` plus its manifest.
fn emit_with_manifest(
    cfg: &SimConfig,
    output: &Path,
    contents: String,
    started: Instant,
    force: bool,
) -> Result<(), Failure> {
    let mpath = manifest_path(output);
    let manifest = RunManifest {
        config_digest: config_digest(cfg),
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: vec![output.display().to_string(), mpath.display().to_string()],
        wall_time: started.elapsed().as_secs_f64(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n";
    write_outputs(&[(output.to_path_buf(), contents), (mpath, json)], force)
}

/// 17 significant digits.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn fidelity_csv(record: &qfec_core::trajectory::FidelityRecord) -> String {
    let mut out = String::from("time,mean_fidelity,std_fidelity,cumulative_jumps\n");
    for k in 0..record.times.len() {
        let _ = writeln!(
            out,
            "{},{},{},{}",
            fmt_f64(record.times[k]),
            fmt_f64(record.mean_fidelity[k]),
            fmt_f64(record.std_fidelity[k]),
            record.jump_counts[k]
        );
    }
    out
}

fn report_json<T: Serialize>(
    report: &T,
    output: Option<&Path>,
    force: bool,
    stdout: &mut dyn std::io::Write,
) -> Result<(), Failure> {
    let json = serde_json::to_string_pretty(report).expect("report serializes") + "\n";
    match output {
        Some(p) => write_outputs(&[(p.to_path_buf(), json)], force),
        None => {
            let _ = stdout.write_all(json.as_bytes());
            Ok(())
        }
    }
}

fn synthesize(args: &CommonArgs, out: &mut dyn std::io::Write) -> Result<(), Failure> {
    let cfg = args.load()?;
    let code = code_for(&cfg)?;
    let rep = report::synthesis_report(&code, &cfg.channels);
    let _ = writeln!(
        out,
        "n = {}, {:?} code, logical qubits = {}",
        rep.n, rep.kind, rep.logical_count
    );
    for (g, (label, factors)) in rep.generator_labels.iter().zip(&rep.generators).enumerate() {
        let vs: Vec<String> = factors
            .iter()
            .map(|[x, y, z]| format!("({x:.6}, {y:.6}, {z:.6})"))
            .collect();
        let _ = writeln!(out, "generator {g}: {label}  {}", vs.join(" "));
    }
    match &rep.hamiltonian {
        Some(terms) => {
            let _ = writeln!(out, "driving Hamiltonian ({} Pauli terms):", terms.len());
            for t in terms {
                let _ = writeln!(out, "  {:+.12} {}", t.coefficient, t.pauli);
            }
        }
        None => {
            let _ = writeln!(out, "driving Hamiltonian: not available for this code");
        }
    }
    report_json(&rep, args.output.as_deref(), args.force, out)
}

fn verify(args: &CommonArgs, out: &mut dyn std::io::Write) -> Result<(), Failure> {
    let cfg = args.load()?;
    let code = code_for(&cfg)?;
    let rep = report::verify_report(&code, &cfg.channels, cfg.dt)?;
    let _ = writeln!(
        out,
        "n = {}, {:?} code, logical qubits = {}",
        rep.n, rep.kind, rep.logical_count
    );
    let _ = writeln!(
        out,
        "correctability: max residual {:.3e} ({})",
        rep.correctability.max_residual(),
        if rep.correctability.passed() {
            "ok"
        } else {
            "FAILED"
        }
    );
    let _ = writeln!(
        out,
        "anticommutation: max residual {:.3e}",
        rep.max_anticommutation
    );
    if let Some(nj) = &rep.nojump {
        let _ = writeln!(
            out,
            "no-jump invariance: a = {:.15}, expected {:.15}, residual {:.3e}",
            nj.a, nj.expected_a, nj.residual
        );
    }
    if let Some(f) = rep.worst_correction_fidelity {
        let _ = writeln!(out, "jump correction: worst fidelity {f:.15}");
    }
    for s in &rep.skipped {
        let _ = writeln!(out, "skipped {s}");
    }
    let _ = writeln!(out, "{}", if rep.passed { "PASSED" } else { "FAILED" });
    report_json(&rep, args.output.as_deref(), args.force, out)?;
    if rep.passed {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn simulate(args: &CommonArgs, out: &mut dyn std::io::Write) -> Result<(), Failure> {
    let started = Instant::now();
    let cfg = args.load()?;
    let protocol = Protocol::new(&cfg)?;
    if let Some(w) = &protocol.kraus.warning {
        log::warn!(
            "step load {:.3} exceeds {:.3}; consider a smaller dt",
            w.load,
            w.limit
        );
    }
    let ensemble = protocol.run_ensemble()?;
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("fidelity.csv"));
    emit_with_manifest(
        &cfg,
        &output,
        fidelity_csv(&ensemble.record),
        started,
        args.force,
    )?;
    let last = ensemble.record.mean_fidelity.len() - 1;
    let _ = writeln!(
        out,
        "{} trajectories, final mean fidelity {:.9}, {} jumps; wrote {}",
        cfg.trajectories,
        ensemble.record.mean_fidelity[last],
        ensemble.record.jump_counts[last],
        output.display()
    );
    Ok(())
}

fn oracle_compare(args: &CommonArgs, out: &mut dyn std::io::Write) -> Result<(), Failure> {
    let started = Instant::now();
    let cfg = args.load()?;
    if cfg.feedback {
        log::warn!("the master equation has no feedback; the comparison is only meaningful with --no-feedback");
    }
    let ensemble = Protocol::new(&cfg)?.run_ensemble()?;
    let oracle = master_equation_oracle(&cfg)?;
    let mut csv = String::from("time,trace_distance\n");
    let mut worst: f64 = 0.0;
    for ((t, rho), sigma) in oracle
        .times
        .iter()
        .zip(&oracle.states)
        .zip(&ensemble.mean_density)
    {
        let d = trace_distance(rho, sigma);
        worst = worst.max(d);
        let _ = writeln!(csv, "{},{}", fmt_f64(*t), fmt_f64(d));
    }
    let output = args
        .output
        .clone()
        .unwrap_or_else(|| PathBuf::from("oracle.csv"));
    emit_with_manifest(&cfg, &output, csv, started, args.force)?;
    let _ = writeln!(
        out,
        "max trace distance {worst:.6}; wrote {}",
        output.display()
    );
    Ok(())
}

/// Runs one invocation, writing human-readable output to `out` and
/// diagnostics to stderr. Returns the process exit code.
pub fn run_command_with<I, T>(argv: I, out: &mut dyn std::io::Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Synthesize(a) => synthesize(a, out),
        Command::Verify(a) => verify(a, out),
        Command::Simulate(a) => simulate(a, out),
        Command::OracleCompare(a) => oracle_compare(a, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Verification) => EXIT_VERIFY_FAILED,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            EXIT_USAGE
        }
    }
}

pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_command_with(argv, &mut std::io::stdout().lock())
}
