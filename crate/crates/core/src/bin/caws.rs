//! Command-line front end.
//!
//! Exit codes: 0 success, 1 bad scenario or arguments, 2 invariant
//! violation during a run, 3 I/O failure.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use caws::harness::{load_scenario, save_trace, MetricsReport, ScenarioError, Simulation};
use caws::rca::{keystream, BitVector, KeystreamParams, RcaCipher, TapPolicy, DEFAULT_RULE, DEFAULT_WARMUP};

#[derive(Parser)]
#[command(name = "caws", version, about = "Cellular-automata secure messaging simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario file.
    Run {
        scenario: PathBuf,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Write the JSON Lines trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the metrics report here instead of stdout.
        #[arg(long)]
        metrics: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        /// Save the central server's credential registry after the run.
        #[arg(long)]
        registry: Option<PathBuf>,
    },
    /// Print keystream bits as hex.
    Keystream {
        #[arg(long, default_value_t = DEFAULT_RULE)]
        rule: u8,
        #[arg(long)]
        seed_hex: String,
        #[arg(long)]
        bits: usize,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
    },
    /// Apply the keystream transform to a file. Applying it twice restores
    /// the input.
    Rca {
        #[arg(long, default_value_t = DEFAULT_RULE)]
        rule: u8,
        #[arg(long)]
        key_hex: String,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_WARMUP)]
        warmup: usize,
    },
}

enum Failure {
    Usage(anyhow::Error),
    Io(anyhow::Error),
    Violations(usize),
}

impl From<ScenarioError> for Failure {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::Io { .. } => Failure::Io(e.into()),
            other => Failure::Usage(other.into()),
        }
    }
}

fn params(rule: u8, warmup: usize) -> Result<KeystreamParams, Failure> {
    let p = KeystreamParams { rule, warmup_steps: warmup, tap: TapPolicy::Center };
    p.validate().map_err(|e| Failure::Usage(e.into()))?;
    Ok(p)
}

fn decode_hex(s: &str, what: &str) -> Result<Vec<u8>, Failure> {
    hex::decode(s).with_context(|| format!("invalid {what}")).map_err(Failure::Usage)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Run { scenario, seed, trace, metrics, format, registry } => {
            let mut config = load_scenario(&scenario)?;
            if let Some(s) = seed {
                config.seed = s;
            }
            let mut sim = Simulation::new(&config)?;
            sim.finish();
            if let Some(path) = &registry {
                sim.world()
                    .registry()
                    .save(path)
                    .map_err(|e| Failure::Io(e.into()))?;
            }
            let events = sim.into_trace();
            if let Some(path) = &trace {
                save_trace(path, &events)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Io)?;
            }
            let report = MetricsReport::from_trace(&events);
            let text = match format {
                Format::Text => report.to_text(),
                Format::Json => report.to_json() + "\n",
            };
            match &metrics {
                Some(path) => std::fs::write(path, text)
                    .with_context(|| format!("writing {}", path.display()))
                    .map_err(Failure::Io)?,
                None => print!("{text}"),
            }
            if !report.violations.is_empty() {
                return Err(Failure::Violations(report.violations.len()));
            }
            Ok(())
        }
        Command::Keystream { rule, seed_hex, bits, warmup } => {
            let seed = BitVector::from_bytes(&decode_hex(&seed_hex, "seed")?);
            let ks = keystream(&params(rule, warmup)?, &seed, bits).map_err(|e| Failure::Usage(e.into()))?;
            println!("{}", hex::encode(ks.to_bytes()));
            Ok(())
        }
        Command::Rca { rule, key_hex, input, out, warmup } => {
            let key = decode_hex(&key_hex, "key")?;
            let cipher = RcaCipher::new(params(rule, warmup)?).map_err(|e| Failure::Usage(e.into()))?;
            let data = std::fs::read(&input)
                .with_context(|| format!("reading {}", input.display()))
                .map_err(Failure::Io)?;
            let result = cipher.transform_bytes(&key, &data).map_err(|e| Failure::Usage(e.into()))?;
            std::fs::write(&out, result)
                .with_context(|| format!("writing {}", out.display()))
                .map_err(Failure::Io)?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(Failure::Violations(n)) => {
            eprintln!("error: {n} invariant violation(s)");
            ExitCode::from(2)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
