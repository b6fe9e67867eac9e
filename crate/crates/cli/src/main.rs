use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qudit_ns::channel::{make_code_with_cap, rate_table, simulate, NoiseKind, NoiseModel};
use qudit_ns::io::{read_encoder, to_json_pretty, write_rate_csv, EncoderJson};
use qudit_ns::schur::{
    build_encoder_with_cap, reference_encoder_d2, verify_haar_samples, EncoderSpec,
    DEFAULT_MEMORY_CAP,
};
use qudit_ns::Error;
use serde_json::json;

/// Overrides the largest dense size, in complex entries, a run may allocate.
const MEMORY_CAP_VAR: &str = "QUDIT_NS_MEMORY_CAP";

#[derive(Parser, Debug)]
#[command(
    name = "qudit-ns",
    version,
    about = "Collective-noise encoder construction and checks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build the d+1 qudit encoder and write it as JSON.
    BuildEncoder(BuildArgs),
    /// Check block structure of an encoder on Haar-random W.
    Verify(VerifyArgs),
    /// Run the recursive code under collective noise.
    Simulate(SimulateArgs),
    /// Print k/(kd+1) for k = 1..=kmax.
    RateTable(RateArgs),
    /// Write the hand-written d = 2 encoder.
    ExportReference(OutputArgs),
}

#[derive(Args, Debug)]
struct OutputArgs {
    /// Write here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct BuildArgs {
    #[arg(long, value_parser = parse_dim)]
    d: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, value_parser = parse_dim, required_unless_present = "encoder")]
    d: Option<usize>,
    /// Verify a stored encoder instead of building one.
    #[arg(long)]
    encoder: Option<PathBuf>,
    #[arg(long, default_value_t = 100, value_parser = parse_positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1e-10, value_parser = parse_tol)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long, value_parser = parse_dim)]
    d: usize,
    #[arg(long, value_parser = parse_positive)]
    k: usize,
    #[arg(long, value_enum, default_value_t = Noise::Su)]
    noise: Noise,
    #[arg(long, default_value_t = 100, value_parser = parse_positive)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Defaults to 1e-10 for su and 1e-8 for sl.
    #[arg(long, value_parser = parse_tol)]
    tol: Option<f64>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args, Debug)]
struct RateArgs {
    #[arg(long, value_parser = parse_dim)]
    d: usize,
    #[arg(long, value_parser = parse_positive)]
    kmax: usize,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Noise {
    Su,
    Sl,
}

fn parse_dim(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(d) if d >= 2 => Ok(d),
        Ok(_) => Err("d must be at least 2".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_positive(s: &str) -> Result<usize, String> {
    match s.parse::<usize>() {
        Ok(n) if n >= 1 => Ok(n),
        Ok(_) => Err("must be at least 1".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_tol(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(t) if t > 0.0 && t.is_finite() => Ok(t),
        Ok(_) => Err("tolerance must be positive and finite".into()),
        Err(e) => Err(e.to_string()),
    }
}

/// A run that could not be carried out, as opposed to one whose checks failed.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Run(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidDimension(_)
            | Error::InvalidShape(_)
            | Error::Domain(_)
            | Error::Resource { .. }
            | Error::Io(_)
            | Error::Json(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other),
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn memory_cap() -> Result<u128, Failure> {
    match std::env::var(MEMORY_CAP_VAR) {
        Ok(v) => v
            .trim()
            .parse::<u128>()
            .ok()
            .filter(|&c| c > 0)
            .ok_or_else(|| {
                Failure::Usage(format!("{MEMORY_CAP_VAR}={v:?} is not a positive integer"))
            }),
        Err(_) => Ok(DEFAULT_MEMORY_CAP),
    }
}

fn json_only(out: &OutputArgs, command: &str) -> Result<(), Failure> {
    if out.format == Format::Csv {
        return Err(Failure::Usage(format!("{command} only writes json")));
    }
    Ok(())
}

fn emit(out: &OutputArgs, text: &str) -> Result<(), Failure> {
    match &out.output {
        Some(path) => write_file(path, text),
        None => {
            io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn encoder_text(enc: &EncoderSpec) -> Result<String, Failure> {
    Ok(to_json_pretty(&EncoderJson::from_encoder(enc))?)
}

fn build(args: &BuildArgs) -> Result<bool, Failure> {
    json_only(&args.out, "build-encoder")?;
    let enc = build_encoder_with_cap(args.d, args.seed, memory_cap()?)?;
    emit(&args.out, &encoder_text(&enc)?)?;
    Ok(true)
}

fn export_reference(args: &OutputArgs) -> Result<bool, Failure> {
    json_only(args, "export-reference")?;
    emit(args, &encoder_text(&reference_encoder_d2())?)?;
    Ok(true)
}

fn verify(args: &VerifyArgs) -> Result<bool, Failure> {
    json_only(&args.out, "verify")?;
    let enc = match (&args.encoder, args.d) {
        (Some(path), d) => {
            let enc = read_encoder(path)?;
            if d.is_some_and(|d| d != enc.d) {
                return Err(Failure::Usage(format!(
                    "--d {} does not match the stored encoder (d = {})",
                    d.unwrap_or_default(),
                    enc.d
                )));
            }
            enc
        }
        (None, Some(d)) => build_encoder_with_cap(d, args.seed, memory_cap()?)?,
        (None, None) => return Err(Failure::Usage("verify needs --d or --encoder".into())),
    };
    let reports = verify_haar_samples(&enc, args.trials, args.seed, args.tol)?;

    let worst_ns = reports.iter().map(|r| r.residual_ns).fold(0.0, f64::max);
    let worst_offdiag = reports
        .iter()
        .map(|r| r.residual_offdiag)
        .fold(0.0, f64::max);
    let failed: Vec<usize> = (0..reports.len()).filter(|&t| !reports[t].passed).collect();
    let passed = failed.is_empty();

    let summary = json!({
        "d": enc.d,
        "generator": enc.generator,
        "trials": args.trials,
        "seed": args.seed,
        "tol": args.tol,
        "max_residual_ns": worst_ns,
        "max_residual_offdiag": worst_offdiag,
        "failed_trials": failed,
        "passed": passed,
        "reports": reports,
    });
    emit(&args.out, &to_json_pretty(&summary)?)?;

    if !passed {
        eprintln!(
            "verify failed: {} of {} trials above tol {:e}",
            failed.len(),
            args.trials,
            args.tol
        );
        eprintln!("  max residual_ns      = {worst_ns:e}");
        eprintln!("  max residual_offdiag = {worst_offdiag:e}");
        for &t in failed.iter().take(5) {
            eprintln!(
                "  trial {t}: residual_ns = {:e}, residual_offdiag = {:e}",
                reports[t].residual_ns, reports[t].residual_offdiag
            );
        }
    }
    Ok(passed)
}

fn run_simulation(args: &SimulateArgs) -> Result<bool, Failure> {
    json_only(&args.out, "simulate")?;
    let cap = memory_cap()?;
    let (kind, default_tol) = match args.noise {
        Noise::Su => (NoiseKind::HaarSu, 1e-10),
        Noise::Sl => (NoiseKind::Sl, 1e-8),
    };
    let tol = args.tol.unwrap_or(default_tol);
    let enc = build_encoder_with_cap(args.d, args.seed, cap)?;
    let code = make_code_with_cap(args.d, args.k, enc, cap)?;
    let report = simulate(
        &code,
        NoiseModel {
            kind,
            seed: args.seed,
        },
        args.trials,
    )?;
    emit(&args.out, &to_json_pretty(&report)?)?;

    let checks = [
        ("max infidelity", report.max_infidelity()),
        ("max state residual", report.max_state_residual),
        ("max carry residual", report.max_carry_residual),
    ];
    let passed = checks.iter().all(|&(_, v)| v < tol);
    if !passed {
        eprintln!("simulate failed at tol {tol:e}");
        for (name, v) in checks {
            eprintln!("  {name:<18} = {v:e}");
        }
        for (slot, v) in report.per_slot_worst_infidelity.iter().enumerate() {
            eprintln!("  slot {} worst infidelity = {v:e}", slot + 1);
        }
    }
    Ok(passed)
}

fn rates(args: &RateArgs) -> Result<bool, Failure> {
    let rows = rate_table(args.d, args.kmax)?;
    let text = match args.out.format {
        Format::Csv => {
            let mut buf = Vec::new();
            write_rate_csv(&rows, &mut buf)?;
            String::from_utf8(buf).expect("csv output is utf-8")
        }
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "d": r.d,
                        "k": r.k,
                        "n": r.n,
                        "rate": format!("{}/{}", r.rate.numer(), r.rate.denom()),
                    })
                })
                .collect();
            to_json_pretty(&rows)?
        }
    };
    emit(&args.out, &text)?;
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::BuildEncoder(a) => build(a),
        Command::Verify(a) => verify(a),
        Command::Simulate(a) => run_simulation(a),
        Command::RateTable(a) => rates(a),
        Command::ExportReference(a) => export_reference(a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
