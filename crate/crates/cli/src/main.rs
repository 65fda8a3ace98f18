//! `fockgrad` command-line interface.
//!
//! Exit codes: 0 ok, 1 other failure, 2 a check exceeded its tolerance,
//! 3 invalid configuration or arguments, 4 element budget exceeded.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fockgrad::checks::{self, GateSpec};
use fockgrad::optimizer::RunConfig;
use fockgrad::timing;
use fockgrad::{BuildOptions, Error, C64};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "fockgrad", version, about = "Fock-basis tensors of quantum-optical gates and their gradients")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, validate or time a single gate tensor.
    Gate {
        #[command(subcommand)]
        action: GateAction,
    },
    /// Run a state-preparation experiment from a TOML or JSON config.
    Prepare(PrepareArgs),
}

#[derive(Subcommand)]
enum GateAction {
    /// Write the tensor as an FGT1 container and print its SHA-256.
    Dump {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long)]
        cutoff: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare the tensor and its gradients against independent oracles.
    Check {
        #[command(flatten)]
        gate: GateArgs,
        #[arg(long)]
        cutoff: usize,
        /// Also write the report as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time builds over several cutoffs and fit the log-log slope.
    Bench {
        #[command(flatten)]
        gate: GateArgs,
        /// Comma-separated cutoffs.
        #[arg(long, value_delimiter = ',', default_value = "20,40,80,160")]
        cutoff: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GateKind {
    Identity,
    Displacement,
    Squeezer,
    SingleMode,
    TwoModeSqueezer,
    Beamsplitter,
    Interferometer,
    Kerr,
    Cubic,
    Quartic,
}

#[derive(Args)]
struct GateArgs {
    /// Gate name; omit when passing --spec.
    #[arg(value_enum, required_unless_present = "spec")]
    kind: Option<GateKind>,
    /// JSON gate specification, e.g. {"gate":"beamsplitter","theta":0.3,"varphi":0}.
    #[arg(long, conflicts_with = "kind")]
    spec: Option<PathBuf>,
    /// Displacement `re[,im]`.
    #[arg(long, allow_hyphen_values = true, value_parser = parse_complex, default_value = "0")]
    gamma: C64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    phi: f64,
    /// Squeezing amplitude.
    #[arg(long, default_value_t = 0.0)]
    r: f64,
    /// Squeezing phase.
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    theta: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    varphi: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    kappa: f64,
    /// Phase-gate strength.
    #[arg(long, allow_hyphen_values = true, default_value_t = 2.0)]
    eta: f64,
    #[arg(long, default_value_t = checks::default_hbar())]
    hbar: f64,
    /// Modes of the identity or interferometer.
    #[arg(long, default_value_t = 1)]
    modes: usize,
    /// Seed of the random interferometer.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct PrepareArgs {
    config: PathBuf,
    /// Overrides the first seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the cutoff of the config.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Output directory for records and traces.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

fn parse_complex(s: &str) -> Result<C64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err("expected `re` or `re,im`".into()),
    }
}

impl GateArgs {
    fn spec(&self) -> Result<GateSpec, Error> {
        if let Some(path) = &self.spec {
            let text = fs::read_to_string(path)?;
            return serde_json::from_str(&text)
                .map_err(|e| Error::Config { line: Some(e.line()), message: format!("{}: {e}", path.display()) });
        }
        let (r, delta) = (self.r, self.delta);
        Ok(match self.kind.expect("clap requires a gate or --spec") {
            GateKind::Identity => GateSpec::Identity { modes: self.modes },
            GateKind::Displacement => GateSpec::Displacement { gamma: self.gamma },
            GateKind::Squeezer => GateSpec::Squeezer { r, delta },
            GateKind::SingleMode => GateSpec::SingleMode { gamma: self.gamma, phi: self.phi, r, delta },
            GateKind::TwoModeSqueezer => GateSpec::TwoModeSqueezer { r, delta },
            GateKind::Beamsplitter => GateSpec::Beamsplitter { theta: self.theta, varphi: self.varphi },
            GateKind::Interferometer => GateSpec::Interferometer { modes: self.modes, seed: self.seed },
            GateKind::Kerr => GateSpec::Kerr { kappa: self.kappa },
            GateKind::Cubic => GateSpec::Cubic { eta: self.eta, hbar: self.hbar },
            GateKind::Quartic => GateSpec::Quartic { eta: self.eta, hbar: self.hbar },
        })
    }
}

/// Failure of a command, carrying its exit code.
enum Failure {
    Tolerance(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Lib(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Lib(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BudgetExceeded { .. } => 4,
        Error::Config { .. } | Error::InvalidParameter { .. } | Error::NonFinite(_) | Error::NonUnitary { .. } => 3,
        _ => 1,
    }
}

fn write_parent(path: &Path, bytes: &[u8]) -> std::io::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, bytes)
}

fn dump(gate: &GateArgs, cutoff: usize, out: &Path) -> Result<(), Failure> {
    let spec = gate.spec()?;
    let t = spec.build(cutoff, &BuildOptions::default())?;
    let bytes = t.to_fgt1_bytes()?;
    write_parent(out, &bytes)?;
    println!(
        "{}: {} modes, cutoff {}, rule {:?}, {} bytes, sha256 {}",
        out.display(),
        t.modes(),
        t.cutoff(),
        t.selection_rule(),
        bytes.len(),
        hex::encode(Sha256::digest(&bytes))
    );
    Ok(())
}

fn check(gate: &GateArgs, cutoff: usize, out: Option<&Path>) -> Result<(), Failure> {
    let report = checks::check_gate(&gate.spec()?, cutoff)?;
    println!("{} at cutoff {}", report.gate.name(), cutoff);
    for line in &report.lines {
        println!(
            "  {} {}: {:.3e} (tolerance {:.0e})",
            if line.passed() { "ok  " } else { "FAIL" },
            line.oracle,
            line.deviation,
            line.tolerance
        );
    }
    if let Some(path) = out {
        write_parent(path, serde_json::to_string_pretty(&report)?.as_bytes())?;
    }
    let failed = report.lines.iter().filter(|l| !l.passed()).count();
    if failed > 0 {
        return Err(Failure::Tolerance(format!("{failed} of {} checks exceeded their tolerance", report.lines.len())));
    }
    Ok(())
}

fn bench(gate: &GateArgs, cutoffs: &[usize], repeats: usize, out: Option<&Path>) -> Result<(), Failure> {
    let spec = gate.spec()?;
    // builds are single-threaded; timing on a fresh thread keeps it off any shared pool
    let result = std::thread::scope(|s| s.spawn(|| timing::bench_gate(&spec, cutoffs, repeats)).join())
        .expect("bench thread panicked")?;
    let csv = result.to_csv();
    match out {
        Some(path) => {
            write_parent(path, csv.as_bytes())?;
            for (n, (m, sd)) in result.cutoffs.iter().zip(result.median.iter().zip(&result.stddev)) {
                println!("{} N={n}: median {m:.3e} s, stddev {sd:.1e} s", result.gate);
            }
            println!("{} log-log slope {:.3}", result.gate, result.slope);
        }
        None => {
            print!("{csv}");
            eprintln!("{} log-log slope {:.3}", result.gate, result.slope);
        }
    }
    Ok(())
}

fn prepare(args: &PrepareArgs) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(&args.config).map_err(|e| match e {
        Error::Config { line: Some(line), message } => {
            Error::Config { line: Some(line), message: format!("{}: {message}", args.config.display()) }
        }
        other => other,
    })?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(cutoff) = args.cutoff {
        if cutoff < 2 || cutoff < cfg.target.len() {
            return Err(Error::Config {
                line: None,
                message: format!("--cutoff {cutoff} must be at least 2 and hold {} target amplitudes", cfg.target.len()),
            }
            .into());
        }
        cfg.cutoff = cutoff;
    }
    let records = cfg.run()?;
    fs::create_dir_all(&args.out)?;
    for rec in &records {
        let json = args.out.join(format!("run_seed{}.json", rec.seed));
        let csv = args.out.join(format!("trace_seed{}.csv", rec.seed));
        fs::write(&json, serde_json::to_string_pretty(rec)?)?;
        fs::write(&csv, rec.trace_csv())?;
        println!(
            "seed {}: fidelity {:.6} after {} steps, {:.1} s -> {}",
            rec.seed,
            rec.final_fidelity,
            rec.losses.len(),
            rec.elapsed.last().copied().unwrap_or(0.0),
            json.display()
        );
    }
    let best = records.iter().max_by(|a, b| a.final_fidelity.total_cmp(&b.final_fidelity)).expect("at least one seed");
    println!("best: seed {} fidelity {:.6}", best.seed, best.final_fidelity);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match &cli.command {
        Command::Gate { action } => match action {
            GateAction::Dump { gate, cutoff, out } => dump(gate, *cutoff, out),
            GateAction::Check { gate, cutoff, out } => check(gate, *cutoff, out.as_deref()),
            GateAction::Bench { gate, cutoff, repeats, out } => bench(gate, cutoff, *repeats, out.as_deref()),
        },
        Command::Prepare(args) => prepare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Tolerance(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
