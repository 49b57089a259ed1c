use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use wres_core::cocycle::{run_cocycle_trials, RandomTrigConfig};
use wres_core::direct::{crosscheck, direct_coefficients};
use wres_core::document::{render_latex, render_text, OutputDocument};
use wres_core::exterior::{trace_table, TraceRow};
use wres_core::rational::to_fraction_string;
use wres_core::sphere::omega_flat_coefficients;
use wres_core::{Partials, Rational, SphereConvention};

#[derive(Parser)]
#[command(name = "wres", version, about = "Exact residue pairings of the flat sign operator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient table of the flat bilinear form.
    Omega(OmegaArgs),
    /// Trace constants of the leading symbol, checked against brute force.
    Traces(TracesArgs),
    /// Compares the Taylor and direct-composition pipelines key by key.
    Crosscheck(CrosscheckArgs),
    /// Hochschild coboundary and symmetry checks on random torus functions.
    Cocycle(CocycleArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Latex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Pipeline {
    Taylor,
    Direct,
}

#[derive(Args)]
struct Output {
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_convention(s: &str) -> Result<SphereConvention, String> {
    s.parse().map_err(|e: wres_core::Error| e.to_string())
}

fn parse_partials(s: &str) -> Result<Partials, String> {
    s.parse().map_err(|e: wres_core::Error| e.to_string())
}

#[derive(Args)]
struct OmegaArgs {
    #[arg(long)]
    dim: usize,
    /// mass-one or surface
    #[arg(long, default_value = "mass-one", value_parser = parse_convention)]
    convention: SphereConvention,
    /// ordinary or D
    #[arg(long, default_value = "ordinary", value_parser = parse_partials)]
    partials: Partials,
    #[arg(long, value_enum, default_value = "taylor")]
    pipeline: Pipeline,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct TracesArgs {
    #[arg(long)]
    dim: usize,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CrosscheckArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value = "mass-one", value_parser = parse_convention)]
    convention: SphereConvention,
    /// Allow dimension 6, which takes several minutes.
    #[arg(long)]
    slow: bool,
    #[command(flatten)]
    output: Output,
}

#[derive(Args)]
struct CocycleArgs {
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Maximum number of Fourier modes per random function.
    #[arg(long, default_value_t = 3)]
    modes: usize,
    #[arg(long, default_value_t = 100)]
    trials: u64,
    /// Largest absolute frequency in each coordinate.
    #[arg(long, default_value_t = 2)]
    max_frequency: i64,
    #[arg(long, default_value = "mass-one", value_parser = parse_convention)]
    convention: SphereConvention,
    #[command(flatten)]
    output: Output,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<wres_core::Error> for Failure {
    fn from(e: wres_core::Error) -> Self {
        match e {
            wres_core::Error::OddDimension(n) => Failure::Usage(odd_dimension(n)),
            other => Failure::Check(other.to_string()),
        }
    }
}

fn odd_dimension(n: usize) -> String {
    format!("--dim {n}: the form exists only in even dimension n >= 2")
}

/// Text plus whether every check passed.
struct Report {
    text: String,
    passed: bool,
}

fn require_even(dim: usize) -> Result<(), Failure> {
    if dim < 2 || dim % 2 == 1 {
        return Err(Failure::Usage(odd_dimension(dim)));
    }
    Ok(())
}

fn omega(args: &OmegaArgs) -> Result<Report, Failure> {
    require_even(args.dim)?;
    if args.dim > 8 {
        eprintln!("warning: dimension {} is above 8; this may take a long time", args.dim);
    }
    let (form, name) = match args.pipeline {
        Pipeline::Taylor => (omega_flat_coefficients(args.dim, args.convention, args.partials)?, "taylor"),
        Pipeline::Direct => (direct_coefficients(args.dim, args.convention, args.partials)?, "direct"),
    };
    let text = match args.output.format {
        Format::Json => OutputDocument::from_coefficients(&form, name).to_json() + "\n",
        Format::Text => render_text(&form),
        Format::Latex => render_latex(&form) + "\n",
    };
    Ok(Report { text, passed: true })
}

fn frac(c: &Rational) -> String {
    to_fraction_string(c)
}

fn traces(args: &TracesArgs) -> Result<Report, Failure> {
    if args.dim == 0 {
        return Err(Failure::Usage("--dim must be at least 1".into()));
    }
    let rows: Vec<TraceRow> = trace_table(args.dim)?;
    let text = match args.output.format {
        Format::Json => {
            let rows: Vec<_> = rows
                .iter()
                .map(|r| {
                    json!({
                        "m": r.m,
                        "alternating": frac(&r.alternating),
                        "a": frac(&r.a),
                        "b": frac(&r.b),
                        "trace": frac(&r.sign_trace),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({ "dim": args.dim, "verified": true, "rows": rows })).unwrap()
                + "\n"
        }
        Format::Text => {
            let mut out = format!("# dim {}: every row verified against brute-force traces\n", args.dim);
            out.push_str("m\tA\ta\tb\ttr\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    r.m,
                    frac(&r.alternating),
                    frac(&r.a),
                    frac(&r.b),
                    frac(&r.sign_trace)
                );
            }
            out
        }
        Format::Latex => {
            let mut out = String::from("\\begin{tabular}{rrrrr}\n$m$ & $A_{n,m}$ & $a_{n,m}$ & $b_{n,m}$ & $\\operatorname{tr}$ \\\\\n\\hline\n");
            for r in &rows {
                let _ = writeln!(
                    out,
                    "{} & {} & {} & {} & {} \\\\",
                    r.m, r.alternating, r.a, r.b, r.sign_trace
                );
            }
            out.push_str("\\end{tabular}\n");
            out
        }
    };
    Ok(Report { text, passed: true })
}

fn crosscheck_cmd(args: &CrosscheckArgs) -> Result<Report, Failure> {
    require_even(args.dim)?;
    if args.dim > 6 {
        return Err(Failure::Usage(format!("--dim {}: crosscheck supports 2, 4 and 6", args.dim)));
    }
    if args.dim == 6 && !args.slow {
        return Err(Failure::Usage("--dim 6 takes several minutes; pass --slow to run it".into()));
    }
    let report = crosscheck(args.dim, args.convention)?;
    let passed = report.passed();
    let verdict = if passed { "PASS" } else { "FAIL" };
    let text = match args.output.format {
        Format::Json => {
            let entries: Vec<_> = report
                .entries
                .iter()
                .map(|e| {
                    json!({
                        "a": e.a.exponents(),
                        "b": e.b.exponents(),
                        "taylor": frac(&e.taylor),
                        "direct": frac(&e.direct),
                        "agrees": e.agrees(),
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "dim": report.n,
                "convention": report.convention.name(),
                "verdict": verdict,
                "keys": report.entries.len(),
                "nonzero_keys": report.nonzero_keys(),
                "mismatches": report.mismatches(),
                "taylor_ms": report.taylor_time.as_millis() as u64,
                "direct_ms": report.direct_time.as_millis() as u64,
                "entries": entries,
            }))
            .unwrap()
                + "\n"
        }
        Format::Text | Format::Latex => {
            let mut out = String::new();
            for e in &report.entries {
                if num_is_zero(&e.taylor) && e.agrees() {
                    continue;
                }
                let _ = writeln!(
                    out,
                    "{}\t{:?}\t{:?}\ttaylor {}\tdirect {}",
                    if e.agrees() { "PASS" } else { "FAIL" },
                    e.a.exponents(),
                    e.b.exponents(),
                    frac(&e.taylor),
                    frac(&e.direct)
                );
            }
            let _ = writeln!(
                out,
                "{verdict}: dim {}, {} keys ({} nonzero), {} mismatches; taylor {:.3}s, direct {:.3}s",
                report.n,
                report.entries.len(),
                report.nonzero_keys(),
                report.mismatches(),
                report.taylor_time.as_secs_f64(),
                report.direct_time.as_secs_f64()
            );
            out
        }
    };
    Ok(Report { text, passed })
}

fn num_is_zero(c: &Rational) -> bool {
    c.numer() == &0.into()
}

fn cocycle(args: &CocycleArgs) -> Result<Report, Failure> {
    require_even(args.dim)?;
    if args.modes == 0 {
        return Err(Failure::Usage("--modes must be at least 1".into()));
    }
    if args.max_frequency < 0 {
        return Err(Failure::Usage("--max-frequency must be non-negative".into()));
    }
    let omega = omega_flat_coefficients(args.dim, args.convention, Partials::Ordinary)?;
    let config = RandomTrigConfig {
        max_frequency: args.max_frequency,
        max_modes: args.modes,
        ..RandomTrigConfig::default()
    };
    let report = run_cocycle_trials(&omega, args.seed, args.trials, config)?;
    let passed = report.passed();
    let verdict = if passed { "PASS" } else { "FAIL" };
    let text = match args.output.format {
        Format::Json => {
            let trials: Vec<_> = report
                .trials
                .iter()
                .map(|t| {
                    json!({
                        "trial": t.trial,
                        "hochschild": [frac(&t.hochschild.re), frac(&t.hochschild.im)],
                        "symmetry": [frac(&t.symmetry.re), frac(&t.symmetry.im)],
                    })
                })
                .collect();
            serde_json::to_string_pretty(&json!({
                "dim": args.dim,
                "seed": args.seed,
                "modes": args.modes,
                "max_frequency": args.max_frequency,
                "verdict": verdict,
                "failures": report.failures(),
                "trials": trials,
            }))
            .unwrap()
                + "\n"
        }
        Format::Text | Format::Latex => {
            let mut out = format!(
                "# dim {}, seed {}, at most {} modes, |frequency| <= {}\n",
                args.dim, args.seed, args.modes, args.max_frequency
            );
            for t in &report.trials {
                let _ = writeln!(
                    out,
                    "trial {}\tb = {}\tsymmetry = {}",
                    t.trial, t.hochschild, t.symmetry
                );
            }
            let _ = writeln!(
                out,
                "{verdict}: {} of {} trials nonzero",
                report.failures(),
                report.trials.len()
            );
            out
        }
    };
    Ok(Report { text, passed })
}

fn emit(text: &str, out: Option<&PathBuf>) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| Failure::Check(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    let (report, out) = match &cli.command {
        Command::Omega(a) => (omega(a)?, a.output.out.as_ref()),
        Command::Traces(a) => (traces(a)?, a.output.out.as_ref()),
        Command::Crosscheck(a) => (crosscheck_cmd(a)?, a.output.out.as_ref()),
        Command::Cocycle(a) => (cocycle(a)?, a.output.out.as_ref()),
    };
    emit(&report.text, out)?;
    Ok(report.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
