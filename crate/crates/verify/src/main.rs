use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use entanglement_core::channels::{identity_channel, swap_channel, Channel, ChannelJson};
use entanglement_core::constructions::{k_ne_channel, ppt_preserving_negativity_channel, superactivation, SampleConfig};
use entanglement_core::linalg::io::{from_json, to_json};
use entanglement_core::par::Exec;
use entanglement_core::states::{ghz, isotropic, max_entangled, smolin, w_state, werner};
use entanglement_core::verify::{list_checks, run_all, run_check, Report, VerifyConfig};
use entanglement_core::{Error, Operator};
use serde_json::json;

/// Numerical checks for entanglement conversions under non-entangling channels.
#[derive(Parser)]
#[command(name = "verify", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List registered checks.
    List {
        #[arg(long)]
        json: bool,
    },
    /// Run one check or all of them and write a report.
    Run(RunArgs),
    /// Write a named state or channel in the matrix JSON format.
    Export {
        #[command(subcommand)]
        what: ExportKind,
    },
    /// Read a matrix JSON file and print a summary.
    Import {
        path: PathBuf,
    },
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("which").required(true))]
struct RunArgs {
    #[arg(long, group = "which")]
    all: bool,
    #[arg(long, group = "which", value_name = "ID")]
    check: Option<String>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Replace every comparison tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Disable data parallelism (results are identical).
    #[arg(long)]
    sequential: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum ExportKind {
    State {
        #[arg(value_enum)]
        name: StateName,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        /// β for Werner states, the noise weight for isotropic states.
        #[arg(long, default_value_t = 0.0)]
        param: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    Channel {
        #[arg(value_enum)]
        name: ChannelName,
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// β for the k-non-entangling channel.
        #[arg(long, default_value_t = 1.0)]
        param: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum StateName {
    Werner,
    Isotropic,
    MaxEntangled,
    Smolin,
    Ghz,
    W,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChannelName {
    Identity,
    Swap,
    KNonEntangling,
    Superactivation,
    PptPreserving,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::List { json } => list(json),
        Command::Run(args) => run(args),
        Command::Export { what } => export(what).map(|()| ExitCode::SUCCESS),
        Command::Import { path } => import(&path).map(|()| ExitCode::SUCCESS),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::UnknownCheck(_) | Error::InvalidParameter(_) | Error::Parse(_) | Error::Json(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn list(json: bool) -> Result<ExitCode, Error> {
    if json {
        let rows: Vec<_> = list_checks()
            .iter()
            .map(|c| json!({"check_id": c.id, "description": c.description, "paper_anchor": c.anchor}))
            .collect();
        print_stdout(&serde_json::to_string_pretty(&rows)?)?;
    } else {
        let lines: Vec<String> = list_checks().iter().map(|c| format!("{:<40} {}", c.id, c.description)).collect();
        print_stdout(&lines.join("\n"))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(args: RunArgs) -> Result<ExitCode, Error> {
    let cfg = VerifyConfig {
        seed: args.seed,
        tol: args.tol,
        samples: args.samples,
        dim: args.dim,
        k: args.k,
        beta: args.beta,
        alpha: args.alpha,
        exec: if args.sequential { Exec::Sequential } else { Exec::Parallel },
    };
    let report = match &args.check {
        Some(id) => Report::new(cfg.clone(), vec![run_check(id, &cfg)?]),
        None => run_all(&cfg),
    };
    for r in &report.results {
        let status = if r.pass { "PASS" } else { "FAIL" };
        match &r.error {
            Some(e) => eprintln!("{status} {} ({e})", r.check_id),
            None => eprintln!("{status} {}", r.check_id),
        }
    }
    eprintln!("{}/{} checks passed", report.summary.passed, report.summary.total);
    let body = match args.format {
        Format::Json => report.to_json()?,
        Format::Csv => report.to_csv(),
    };
    write_or_print(args.out.as_deref(), &body)?;
    Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn write_or_print(out: Option<&Path>, body: &str) -> Result<(), Error> {
    match out {
        Some(path) => fs::write(path, body)?,
        None => print_stdout(body)?,
    }
    Ok(())
}

/// Prints `body` and a newline; a closed pipe (`verify list | head`) is not an error.
fn print_stdout(body: &str) -> Result<(), Error> {
    match writeln!(io::stdout().lock(), "{body}") {
        Err(e) if e.kind() != io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn export(what: ExportKind) -> Result<(), Error> {
    match what {
        ExportKind::State { name, dim, param, out } => {
            let op = match name {
                StateName::Werner => werner(dim, param)?,
                StateName::Isotropic => isotropic(dim, param)?,
                StateName::MaxEntangled => max_entangled(dim)?.density(),
                StateName::Smolin => smolin(),
                StateName::Ghz => ghz(3, dim)?.density(),
                StateName::W => w_state().density(),
            };
            write_or_print(out.as_deref(), &to_json(&op)?)
        }
        ExportKind::Channel { name, dim, k, param, out } => {
            let cfg = SampleConfig::new(200, 0);
            let ch = match name {
                ChannelName::Identity => identity_channel(vec![dim, dim]),
                ChannelName::Swap => swap_channel(dim)?,
                ChannelName::KNonEntangling => k_ne_channel(dim, k, param)?.channel,
                ChannelName::Superactivation => superactivation(&cfg)?.channel,
                ChannelName::PptPreserving => ppt_preserving_negativity_channel(dim, &cfg)?.channel,
            };
            write_or_print(out.as_deref(), &serde_json::to_string_pretty(&ChannelJson::from(&ch))?)
        }
    }
}

fn operator_summary(op: &Operator) -> serde_json::Value {
    json!({
        "dims": op.dims(),
        "trace": op.trace_re(),
        "hermiticity_deviation": op.hermiticity_deviation(),
        "min_eigenvalue": op.min_eigenvalue(),
        "max_eigenvalue": op.max_eigenvalue(),
    })
}

fn import(path: &Path) -> Result<(), Error> {
    let text = fs::read_to_string(path)?;
    let value: serde_json::Value = serde_json::from_str(&text)?;
    let summary = if value.get("metadata").is_some() {
        let ch = Channel::try_from(serde_json::from_value::<ChannelJson>(value)?)?;
        json!({
            "kind": "channel",
            "in_dims": ch.in_dims(),
            "out_dims": ch.out_dims(),
            "choi": operator_summary(ch.choi()),
            "cptp": ch.is_cptp(),
            "choi_pt_min_eigenvalue": ch.choi_pt_min_eigenvalue()?,
            "ppt_map": ch.is_ppt_map(),
        })
    } else {
        let op = from_json(&text)?;
        json!({"kind": "operator", "operator": operator_summary(&op)})
    };
    print_stdout(&serde_json::to_string_pretty(&summary)?)
}
