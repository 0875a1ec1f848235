use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};
use toricmirror::fanfile::parse_fan_file;
use toricmirror::fixtures;
use toricmirror::pipeline::{run, Command, RunConfig, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "toricmirror", version, about = "Exact mirror-symmetry computations for toric weak Fano manifolds")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate smoothness, completeness and projectivity
    CheckFan(Args),
    /// Fano / weak Fano classification
    Classify(Args),
    /// Divisor sequence, charge matrix and Euler weights
    ExactSeq(Args),
    /// Primitive relations, Mori and nef cones, semigroup checks
    Mori(Args),
    /// Cohomology ring, multiplication table and pairing
    Cohomology(Args),
    /// GKZ operator families
    GkzOps(Args),
    /// Batyrev quantum ring
    Qring(Args),
    /// I-function and its twisted companion
    Ifunction(Args),
    /// Mirror map and its inverse
    MirrorMap(Args),
    /// Quantum connection matrices and their identity checks
    Connection(Args),
    /// Full verification pipeline
    Verify(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Fan file (.toml or .json), or a builtin name with --fixture
    #[arg(value_name = "INPUT")]
    input: String,
    /// q-order N
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    order: u32,
    /// Semigroup bound K
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u32).range(1..))]
    bound: u32,
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Treat INPUT as a builtin fixture name
    #[arg(long)]
    fixture: bool,
}

#[derive(ValueEnum, Clone, Copy, PartialEq, Eq)]
enum OutputFormat {
    Json,
    Text,
}

impl Cmd {
    fn split(self) -> (Command, Args) {
        match self {
            Cmd::CheckFan(a) => (Command::CheckFan, a),
            Cmd::Classify(a) => (Command::Classify, a),
            Cmd::ExactSeq(a) => (Command::ExactSeq, a),
            Cmd::Mori(a) => (Command::Mori, a),
            Cmd::Cohomology(a) => (Command::Cohomology, a),
            Cmd::GkzOps(a) => (Command::GkzOps, a),
            Cmd::Qring(a) => (Command::Qring, a),
            Cmd::Ifunction(a) => (Command::IFunction, a),
            Cmd::MirrorMap(a) => (Command::MirrorMap, a),
            Cmd::Connection(a) => (Command::Connection, a),
            Cmd::Verify(a) => (Command::Verify, a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.split();
    let cfg = RunConfig { input: args.input.clone(), command, order: args.order, bound: args.bound };

    let file = if args.fixture {
        match fixtures::load(&args.input) {
            Some(f) => Ok(f),
            None => Err(format!("unknown fixture {:?}; known: {}", args.input, fixtures::NAMES.join(", "))),
        }
    } else {
        parse_fan_file(&PathBuf::from(args.input)).map_err(|e| e.to_string())
    };
    let file = match file {
        Ok(f) => f,
        Err(msg) => {
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command.name(),
                "input": cfg.input,
                "error": {"kind": "input", "stage": "parse", "error": msg},
            });
            emit(&report, args.format);
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };

    match run(&cfg, &file) {
        Ok(report) => {
            emit(&report, args.format);
            ExitCode::SUCCESS
        }
        Err(e) => {
            let report = json!({
                "schema_version": SCHEMA_VERSION,
                "command": command.name(),
                "input": cfg.input,
                "order": cfg.order,
                "error": e.to_json(),
            });
            emit(&report, args.format);
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn emit(report: &Value, format: OutputFormat) {
    let out = match format {
        OutputFormat::Json => serde_json::to_string_pretty(report).expect("json") + "\n",
        OutputFormat::Text => {
            let mut out = String::new();
            render(report, 0, &mut out);
            out
        }
    };
    // a closed pipe is not an error worth reporting
    let _ = std::io::stdout().lock().write_all(out.as_bytes());
}

/// Indented plain-text rendering; short scalar arrays stay on one line.
fn render(v: &Value, indent: usize, out: &mut String) {
    let pad = "  ".repeat(indent);
    match v {
        Value::Object(map) => {
            for (k, x) in map {
                if is_inline(x) {
                    out.push_str(&format!("{pad}{k}: {}\n", inline(x)));
                } else {
                    out.push_str(&format!("{pad}{k}:\n"));
                    render(x, indent + 1, out);
                }
            }
        }
        Value::Array(items) => {
            for x in items {
                if is_inline(x) {
                    out.push_str(&format!("{pad}- {}\n", inline(x)));
                } else {
                    out.push_str(&format!("{pad}-\n"));
                    render(x, indent + 1, out);
                }
            }
        }
        other => out.push_str(&format!("{pad}{}\n", inline(other))),
    }
}

fn is_inline(v: &Value) -> bool {
    match v {
        Value::Object(m) => m.is_empty(),
        Value::Array(a) => a.iter().all(|x| !x.is_object() && (!x.is_array() || x.as_array().unwrap().iter().all(|y| !y.is_object() && !y.is_array()))),
        _ => true,
    }
}

fn inline(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Array(a) => format!("[{}]", a.iter().map(inline).collect::<Vec<_>>().join(", ")),
        Value::Object(_) => "{}".to_string(),
        other => other.to_string(),
    }
}
