use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cipherlang::cipher::build_map;
use cipherlang::runner::{self, ExperimentConfig, PrepareOutcome, RunError, EXIT_OK};

#[derive(Parser)]
#[command(name = "cipherlang", version, about = "Ciphered-language translation and task experiments")]
struct Cli {
    /// Experiment config (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the config seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the backend: `live`, `replay`, or `mock[:policy]`.
    #[arg(long, global = true)]
    backend: Option<String>,
    /// Render and write prompts without calling a model.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the cipher map, or cipher TEXT (stdin when `-`).
    Cipher {
        #[arg(long)]
        language: Option<String>,
        #[arg(long)]
        decipher: bool,
        text: Option<String>,
    },
    /// Write ciphered materials and the map file.
    Prepare,
    /// Translate the test set under each configured strategy.
    RunMt,
    /// Solve the configured task items.
    RunTask,
    /// Ask the model to identify and undo the cipher.
    Probe,
    /// Attach external metric scores (TSV or JSONL) to the run's samples.
    Score { external: PathBuf },
    /// Re-aggregate the run's samples into a report.
    Report,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig, RunError> {
    let path = cli.config.as_ref().ok_or_else(|| RunError::Config("--config is required".into()))?;
    let mut cfg = ExperimentConfig::load(path)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(b) = &cli.backend {
        cfg.override_backend(b)?;
    }
    Ok(cfg)
}

fn cipher(cli: &Cli, language: Option<&str>, decipher: bool, text: Option<&str>) -> Result<i32, RunError> {
    let (language, seed) = match (language, cli.config.is_some()) {
        (Some(l), _) => (l.to_string(), cli.seed.unwrap_or(0)),
        (None, true) => {
            let cfg = load_config(cli)?;
            (cfg.language, cfg.seed)
        }
        (None, false) => return Err(RunError::Config("give --language or --config".into())),
    };
    let map = build_map(&language, seed, None)?;
    match text {
        None => print!("{}", map.to_text()),
        Some(t) => {
            let input = if t == "-" {
                let mut s = String::new();
                std::io::stdin().read_to_string(&mut s)?;
                s
            } else {
                t.to_string()
            };
            let normalized = cipherlang::text::normalize(&input);
            println!("{}", if decipher { map.invert(&normalized) } else { map.apply(&normalized) });
        }
    }
    Ok(EXIT_OK)
}

fn run(cli: &Cli) -> Result<i32, RunError> {
    if let Command::Cipher { language, decipher, text } = &cli.command {
        return cipher(cli, language.as_deref(), *decipher, text.as_deref());
    }
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Cipher { .. } => unreachable!(),
        Command::Prepare => {
            let outcome = runner::prepare_materials(&cfg)?;
            let state = match outcome {
                PrepareOutcome::Written(_) => "written",
                PrepareOutcome::UpToDate(_) => "up to date",
            };
            println!("materials {state}: {} files", outcome.manifest().files.len());
            Ok(EXIT_OK)
        }
        Command::RunMt => {
            let summary = runner::run_mt(&cfg, cli.dry_run)?;
            for f in &summary.files {
                println!("{}", f.display());
            }
            if let Some(r) = &summary.report {
                print!("{}", r.to_table());
            }
            if summary.failures > 0 {
                eprintln!("{} samples failed", summary.failures);
            }
            Ok(summary.exit_code())
        }
        Command::RunTask => {
            let run = runner::run_task(&cfg, cli.dry_run)?;
            for r in &run.reports {
                println!(
                    "{} {}: accuracy {:.3} ({}/{}), unparsable {}, calls/item {:.2}",
                    r.task, r.strategy, r.accuracy, r.correct, r.count, r.unparsable, r.calls_per_item
                );
            }
            Ok(run.summary.exit_code())
        }
        Command::Probe => {
            for r in runner::probe(&cfg)? {
                println!(
                    "{}\tlanguage={}\tdecipher_bleu={:.2}\tleaks={}",
                    r.sample_id,
                    if r.guessed_language.is_empty() { "-" } else { &r.guessed_language },
                    r.decipher_bleu,
                    r.leaks.len()
                );
            }
            Ok(EXIT_OK)
        }
        Command::Score { external } => {
            let r = runner::score(&cfg, external)?;
            println!("attached {}, unmatched {}, duplicates {}", r.attached, r.unmatched.len(), r.duplicates.len());
            Ok(EXIT_OK)
        }
        Command::Report => {
            print!("{}", runner::report(&cfg)?.to_table());
            Ok(EXIT_OK)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let code = match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    };
    ExitCode::from(code as u8)
}
