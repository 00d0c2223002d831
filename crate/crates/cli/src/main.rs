//! `tailoredsec`: serve the HTTP API, print the replication report, score a
//! questionnaire, or export session data.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage or validation error.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use tailoredsec_api::{ApiConfig, ServeError};
use tailoredsec_core::analysis::{replicate_bundled, replicate_from_export, StatsReport};
use tailoredsec_core::bfi10::{Bfi10Responses, Trait};
use tailoredsec_core::routing::route_from_responses;
use tailoredsec_core::session::{AllocationMode, Condition};
use tailoredsec_core::store::{
    load_content_bank, read_csv, read_log, ContentBank, ExportFilter, MemoryLog, SessionStore,
};

#[derive(Debug, Parser)]
#[command(name = "tailoredsec", version, about = "Personality-conditional security awareness training engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the HTTP API until interrupted.
    Serve(ServeArgs),
    /// Print the two-group replication report from the bundled tables.
    Replicate {
        /// Emit the structured JSON document instead of text.
        #[arg(long)]
        json: bool,
        /// Analyse an exported CSV instead of the bundled tables.
        #[arg(long, value_name = "CSV")]
        from_csv: Option<PathBuf>,
    },
    /// Score ten comma-separated BFI-10 responses (1-5) and route them.
    ScoreBfi {
        /// e.g. 3,3,3,3,3,3,3,3,3,3
        responses: String,
        #[arg(long)]
        json: bool,
    },
    /// Write the analysis CSV for an event log.
    Export(ExportArgs),
}

#[derive(Debug, Args)]
struct ServeArgs {
    /// TOML config file; flags and TAILOREDSEC_* variables override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Content bank file (defaults to the bundled bank).
    #[arg(long)]
    content: Option<PathBuf>,
    /// Event log file.
    #[arg(long)]
    store: Option<PathBuf>,
    #[arg(long)]
    port: Option<u16>,
    /// fixed-quota:<n>, alternating, or manual:<t|p,...>
    #[arg(long, value_parser = parse_alloc)]
    alloc: Option<AllocationMode>,
    #[arg(long)]
    admin_secret: Option<String>,
}

#[derive(Debug, Args)]
#[command(group(clap::ArgGroup::new("target").required(true).args(["out", "stdout"])))]
struct ExportArgs {
    /// Event log file to read.
    #[arg(long)]
    store: PathBuf,
    /// Output CSV path.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the CSV to standard output.
    #[arg(long)]
    stdout: bool,
    /// Content bank the log was written against (defaults to the bundled bank).
    #[arg(long)]
    content: Option<PathBuf>,
    /// Only sessions in this condition (traditional, personality_conditional).
    #[arg(long, value_parser = parse_condition)]
    condition: Option<Condition>,
    /// Only sessions in this state (e.g. complete).
    #[arg(long)]
    state: Option<String>,
}

fn parse_alloc(s: &str) -> Result<AllocationMode, String> {
    s.parse()
}

fn parse_condition(s: &str) -> Result<Condition, String> {
    Condition::parse(s).ok_or_else(|| format!("unknown condition `{s}`"))
}

/// A failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn runtime(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Serve(args) => serve(args),
        Command::Replicate { json, from_csv } => replicate(json, from_csv.as_deref()),
        Command::ScoreBfi { responses, json } => score_bfi(&responses, json),
        Command::Export(args) => export(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn serve(args: ServeArgs) -> Result<(), Failure> {
    let mut config = match &args.config {
        Some(path) => ApiConfig::load(path).map_err(|e| Failure::usage(e.to_string()))?,
        None => ApiConfig::default(),
    };
    config.apply_process_env().map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(c) = args.content {
        config.content = Some(c);
    }
    if let Some(s) = args.store {
        config.store = s;
    }
    if let Some(p) = args.port {
        config.port = p;
    }
    if let Some(a) = args.alloc {
        config.alloc = a;
    }
    if let Some(s) = args.admin_secret {
        config.admin_secret = Some(s);
    }
    if let Some(path) = &config.content {
        load_content_bank(path).map_err(|e| Failure::usage(format!("content bank {}: {e}", path.display())))?;
    }

    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::runtime(e.to_string()))?;
    runtime.block_on(tailoredsec_api::serve(&config)).map_err(|e| match e {
        ServeError::Content(e) => Failure::usage(e.to_string()),
        other => Failure::runtime(other.to_string()),
    })
}

fn replicate(json: bool, from_csv: Option<&Path>) -> Result<(), Failure> {
    let report: StatsReport = match from_csv {
        None => replicate_bundled().map_err(|e| Failure::runtime(e.to_string()))?,
        Some(path) => {
            let file = File::open(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
            let rows = read_csv(file).map_err(|e| Failure::usage(format!("{}: {e}", path.display())))?;
            replicate_from_export(&rows).map_err(|e| Failure::usage(e.to_string()))?
        }
    };
    let mut out = io::stdout().lock();
    let written = if json {
        writeln!(out, "{}", report.to_json())
    } else {
        write!(out, "{report}")
    };
    written.map_err(|e| Failure::runtime(e.to_string()))
}

fn score_bfi(raw: &str, json: bool) -> Result<(), Failure> {
    let values = raw
        .split(',')
        .map(|v| v.trim().parse::<i64>().map_err(|_| Failure::usage(format!("`{}` is not an integer", v.trim()))))
        .collect::<Result<Vec<_>, _>>()?;
    let responses = Bfi10Responses::from_values(&values).map_err(|e| Failure::usage(e.to_string()))?;
    let decision = route_from_responses(&responses);
    if json {
        let doc = serde_json::json!({
            "profile": decision.profile,
            "dominant": decision.dominant,
            "module": decision.module,
        });
        println!("{doc}");
    } else {
        let order = [
            Trait::Extraversion,
            Trait::Agreeableness,
            Trait::Conscientiousness,
            Trait::Neuroticism,
            Trait::Openness,
        ];
        let scores: Vec<String> = order
            .iter()
            .map(|&t| format!("{}={}", t.code(), decision.profile.get(t)))
            .collect();
        println!("profile: {}", scores.join(" "));
        println!("dominant: {}", decision.dominant);
        println!("module: {}", decision.module);
    }
    Ok(())
}

fn export(args: ExportArgs) -> Result<(), Failure> {
    let bank = match &args.content {
        Some(path) => load_content_bank(path).map_err(|e| Failure::usage(format!("content bank {}: {e}", path.display())))?,
        None => ContentBank::bundled(),
    };
    std::fs::metadata(&args.store).map_err(|e| Failure::runtime(format!("{}: {e}", args.store.display())))?;
    let entries = read_log(&args.store).map_err(|e| Failure::runtime(format!("{}: {e}", args.store.display())))?;
    let log = MemoryLog::from_entries(entries).map_err(|e| Failure::runtime(e.to_string()))?;
    let store = SessionStore::open(Box::new(log), Arc::new(bank))
        .map_err(|e| Failure::runtime(format!("{}: {e}", args.store.display())))?;
    let filter = ExportFilter {
        condition: args.condition,
        state: args.state,
    };
    let written = match &args.out {
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::runtime(format!("{}: {e}", path.display())))?;
            let mut w = BufWriter::new(file);
            let n = store.export_csv(&filter, &mut w);
            w.flush().map_err(|e| Failure::runtime(e.to_string()))?;
            n
        }
        None => store.export_csv(&filter, io::stdout().lock()),
    };
    let rows = written.map_err(|e| Failure::runtime(e.to_string()))?;
    if args.out.is_some() {
        eprintln!("{rows} rows written");
    }
    Ok(())
}
