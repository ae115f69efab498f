use std::io::Read;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use ribbonchain::service::{self, BusyPolicy, ServiceConfig};
use ribbonchain::{parse_script, run_script, RunOptions, Session};
use ribbonchain_core::verify::{run_table_suite, sequence_sweep, xbulk_deviation_report, SequenceLength};

#[derive(Parser)]
#[command(name = "ribbonchain", version, about = "Cluster-chain measurement engine: symbolic rules, ribbon diagrams, statevector oracle")]
struct Cli {
    /// Run the statevector oracle alongside the symbolic engine.
    #[arg(long, global = true, value_enum, default_value_t = Toggle::On)]
    oracle: Toggle,
    /// Fall back to oracle-only steps when a composition is unsupported.
    #[arg(long, global = true)]
    hybrid: bool,
    /// Seed for sampled outcomes.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Largest register the oracle will allocate.
    #[arg(long, global = true, default_value_t = ribbonchain_core::statevector::DEFAULT_MAX_QUBITS)]
    max_qubits: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExportWhat {
    Diagram,
    Symbolic,
    State,
    Session,
}

#[derive(Subcommand)]
enum Command {
    /// Build |C_n> and print its initial views.
    Build { n: usize },
    /// Execute a measurement script ("-" reads stdin).
    Run { script: PathBuf },
    /// Grade every single-measurement case against the oracle.
    Verify {
        #[arg(long, default_value_t = 2)]
        n_min: usize,
        #[arg(long, default_value_t = 10)]
        n_max: usize,
        /// Require the literal table formula to match in every case, X bulk included.
        #[arg(long)]
        strict_literal: bool,
        /// Also run this many seeded random sequences.
        #[arg(long, default_value_t = 0)]
        sequences: u64,
        #[arg(long, default_value_t = 8)]
        sequence_n: usize,
        /// Include the X-bulk deviation table.
        #[arg(long)]
        deviation: bool,
    },
    /// Run the HTTP session service.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: SocketAddr,
        /// Seconds of inactivity before a session is dropped.
        #[arg(long, default_value_t = 1800)]
        idle_timeout: u64,
        #[arg(long, value_enum, default_value_t = BusyPolicy::Queue)]
        busy: BusyPolicy,
        /// Snapshot file written on shutdown and read on start.
        #[arg(long)]
        snapshot: Option<PathBuf>,
    },
    /// Run a script and print one of its final artifacts as JSON.
    Export {
        script: PathBuf,
        #[arg(long, value_enum, default_value_t = ExportWhat::Diagram)]
        what: ExportWhat,
    },
}

impl Cli {
    fn options(&self) -> RunOptions {
        RunOptions {
            oracle: matches!(self.oracle, Toggle::On),
            hybrid: self.hybrid,
            seed: self.seed,
            max_qubits: self.max_qubits,
        }
    }
}

fn fail(format: Format, code: &str, message: &str, step: Option<usize>) -> ExitCode {
    match format {
        Format::Json => {
            let mut body = serde_json::json!({ "code": code, "message": message });
            if let Some(step) = step {
                body["step"] = step.into();
            }
            println!("{body}");
        }
        Format::Text => eprintln!("error [{code}]: {message}"),
    }
    ExitCode::FAILURE
}

fn read_script(path: &PathBuf) -> std::io::Result<String> {
    if path.as_os_str() == "-" {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text)?;
        Ok(text)
    } else {
        std::fs::read_to_string(path)
    }
}

fn execute(cli: &Cli, path: &PathBuf) -> Result<(ribbonchain::RunRecord, Session), ExitCode> {
    let text = read_script(path).map_err(|e| fail(cli.format, "io", &e.to_string(), None))?;
    let script = parse_script(&text).map_err(|e| fail(cli.format, "parse_error", &e.to_string(), None))?;
    run_script(&script, cli.options()).map_err(|e| fail(cli.format, e.code(), &e.to_string(), Some(e.step)))
}

fn print_json<T: serde::Serialize>(value: &T) {
    println!("{}", serde_json::to_string_pretty(value).expect("serializable"));
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()))
        .with_writer(std::io::stderr)
        .init();

    match &cli.command {
        Command::Build { n } => {
            let session = match Session::new("build", *n, cli.options()) {
                Ok(s) => s,
                Err(e) => return fail(cli.format, e.code(), &e.to_string(), None),
            };
            let view = session.view();
            match cli.format {
                Format::Json => print_json(&view),
                Format::Text => {
                    println!("chain {}  oracle {}", view.n, if view.oracle { "on" } else { "off" });
                    if let Some(note) = &view.oracle_note {
                        println!("  ({note})");
                    }
                    let d = &view.diagram;
                    for c in &d.components {
                        let rings: Vec<String> = c.rings.iter().map(|r| r.id.to_string()).collect();
                        println!("rings {}  ribbons {}", rings.join("-"), c.ribbons.len());
                    }
                }
            }
            ExitCode::SUCCESS
        }
        Command::Run { script } => match execute(&cli, script) {
            Ok((record, _)) => {
                match cli.format {
                    Format::Json => print_json(&record),
                    Format::Text => print!("{}", record.to_text()),
                }
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Export { script, what } => match execute(&cli, script) {
            Ok((_, session)) => {
                match what {
                    ExportWhat::Diagram => print_json(&session.diagram()),
                    ExportWhat::Symbolic => print_json(&session.state().symbolic.to_json()),
                    ExportWhat::Session => print_json(&session),
                    ExportWhat::State => match &session.state().oracle {
                        Some(state) => print_json(&state.to_dump()),
                        None => return fail(Format::Json, "oracle_unavailable", "no oracle state to export", None),
                    },
                }
                ExitCode::SUCCESS
            }
            Err(code) => code,
        },
        Command::Verify { n_min, n_max, strict_literal, sequences, sequence_n, deviation } => {
            if *n_max > cli.max_qubits {
                return fail(cli.format, "size_limit", &format!("n_max {n_max} exceeds --max-qubits"), None);
            }
            let suite = match run_table_suite(*n_min, *n_max) {
                Ok(s) => s,
                Err(e) => return fail(cli.format, e.code(), &e.to_string(), None),
            };
            let deviation = if *deviation && *n_max >= 3 { xbulk_deviation_report(*n_max).ok() } else { None };
            let sweep = if *sequences > 0 {
                match sequence_sweep(*sequence_n, SequenceLength::UntilLive(2), 0..*sequences) {
                    Ok(s) => Some(s),
                    Err(e) => return fail(cli.format, e.code(), &e.to_string(), None),
                }
            } else {
                None
            };
            let passed = suite.all_required_met()
                && (!strict_literal || suite.all_literal())
                && sweep.as_ref().is_none_or(|s| s.passed());
            match cli.format {
                Format::Json => print_json(&serde_json::json!({
                    "suite": suite,
                    "deviation": deviation,
                    "sequences": sweep,
                    "strict_literal": strict_literal,
                    "passed": passed,
                })),
                Format::Text => {
                    print!("{}", suite.to_text());
                    if let Some(d) = &deviation {
                        println!();
                        print!("{}", d.to_text());
                    }
                    if let Some(s) = &sweep {
                        println!(
                            "sequences n={} runs {} steps {} failed {} min fidelity {:.12}",
                            s.n,
                            s.runs,
                            s.total_steps,
                            s.failed_seeds.len(),
                            s.min_fidelity
                        );
                    }
                    if *strict_literal && !suite.all_literal() {
                        println!("strict literal: some cases do not match the literal formula");
                    }
                    println!("verify: {}", if passed { "PASSED" } else { "FAILED" });
                }
            }
            if passed {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Serve { bind, idle_timeout, busy, snapshot } => {
            let config = ServiceConfig {
                idle_timeout: Duration::from_secs(*idle_timeout),
                busy_policy: *busy,
                snapshot_path: snapshot.clone(),
                session_defaults: cli.options(),
                ..ServiceConfig::default()
            };
            let runtime = match tokio::runtime::Runtime::new() {
                Ok(rt) => rt,
                Err(e) => return fail(cli.format, "io", &e.to_string(), None),
            };
            match runtime.block_on(service::serve(*bind, config)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => fail(cli.format, "io", &e.to_string(), None),
            }
        }
    }
}
