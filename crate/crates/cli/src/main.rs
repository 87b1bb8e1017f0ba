use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};

use contragen::baseline::{evolve_coverage, instrument_oracles, suite_verdicts};
use contragen::contract::{extract_program, Extraction, PatternTable};
use contragen::emit::{emit_suite, write_suite};
use contragen::harness::{baseline_budget, load_corpus, render_report, run_experiment, write_report};
use contragen::lang::{parse_program, SubjectProgram};
use contragen::search::{evolve_all, select_solutions, SearchConfig};

#[derive(Parser)]
#[command(name = "contragen", version, about = "Contract-guided test generation for .sub programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate tests for one program.
    Generate(GenerateArgs),
    /// Run both generators repeatedly over a corpus and compare them.
    Experiment(ExperimentArgs),
    /// Print the contracts extracted from a program as JSON.
    Extract {
        file: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Contract,
    Coverage,
}

#[derive(Args)]
struct SearchArgs {
    #[arg(long, env = "CONTRAGEN_SEED", default_value_t = 0)]
    seed: u64,
    /// Generations per contract in a batch (at least 200 per batch).
    #[arg(long, conflicts_with = "budget_seconds")]
    budget_generations: Option<u64>,
    /// Seconds per contract in a batch (at least 60 per batch).
    #[arg(long)]
    budget_seconds: Option<u64>,
    #[arg(long, default_value_t = 10)]
    batch_size: usize,
    #[arg(long, default_value_t = 50)]
    population: usize,
    /// Evaluation threads.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        let mut cfg = match self.budget_seconds {
            Some(_) => SearchConfig::seconds(),
            None => SearchConfig::default(),
        };
        if let Some(n) = self.budget_generations.or(self.budget_seconds) {
            cfg.unit_budget = n;
        }
        cfg.seed = self.seed;
        cfg.batch_size = self.batch_size;
        cfg.population = self.population;
        cfg.workers = self.workers;
        cfg
    }
}

#[derive(Args)]
struct GenerateArgs {
    file: PathBuf,
    #[arg(long, value_enum, default_value = "contract")]
    mode: Mode,
    #[command(flatten)]
    search: SearchArgs,
    /// Write preconditions and guard as assume lines.
    #[arg(long)]
    assume_oracles: bool,
    /// Output directory; tests go to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ExperimentArgs {
    corpus: PathBuf,
    #[arg(long, default_value_t = 10)]
    reps: usize,
    #[command(flatten)]
    search: SearchArgs,
    /// Directory for report.txt, report.json and report.csv.
    #[arg(long)]
    report: Option<PathBuf>,
}

/// Errors in the user's input (exit 2) as opposed to internal faults (exit 3).
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn load_program(path: &Path) -> anyhow::Result<SubjectProgram> {
    let src = fs::read_to_string(path).map_err(|e| InputError(format!("{}: {e}", path.display())))?;
    parse_program(&src).map_err(|e| InputError(format!("{}:{e}", path.display())).into())
}

fn extract(program: &SubjectProgram) -> Extraction {
    extract_program(program, PatternTable::builtin())
}

fn generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let program = load_program(&args.file)?;
    let ex = extract(&program);
    let config = args.search.config();
    config.validate().map_err(|e| InputError(e.to_string()))?;
    match args.mode {
        Mode::Contract => {
            if ex.postconditions().next().is_none() {
                return Err(InputError(format!("{}: no translatable postconditions", args.file.display())).into());
            }
            let archive = evolve_all(&program, &ex, &config)?;
            let selections = select_solutions(&program, &ex, &archive);
            let tests = emit_suite(&program, &ex, &selections, args.assume_oracles)?;
            match &args.out {
                Some(dir) => {
                    write_suite(&program, dir, &tests)?;
                    fs::write(dir.join("progress.jsonl"), archive.progress_jsonl())
                        .with_context(|| format!("writing {}", dir.display()))?;
                    println!(
                        "{} contract(s), {} test(s) written to {}",
                        archive.entries.len(),
                        tests.len(),
                        dir.display()
                    );
                }
                None => {
                    for t in &tests {
                        println!("// focal: {}", t.focal_contract);
                        for l in &t.body {
                            println!("{l}");
                        }
                        println!();
                    }
                }
            }
        }
        Mode::Coverage => {
            let budget = baseline_budget(&ex, &config).unwrap_or_else(|| config.budget_for(1));
            let run = evolve_coverage(&program, &config, budget, config.seed)?;
            let tests = instrument_oracles(&program, &ex, &run.suite);
            let rendered: Vec<serde_json::Value> = tests
                .iter()
                .map(|t| {
                    serde_json::json!({
                        "statements": t.test.render(&program),
                        "oracles": t.oracles,
                    })
                })
                .collect();
            let json = serde_json::json!({
                "objectives": run.objectives,
                "covered": run.covered,
                "generations": run.generations,
                "tests": rendered,
                "contracts": suite_verdicts(&ex, &tests),
            });
            let mut text = serde_json::to_string_pretty(&json)?;
            text.push('\n');
            match &args.out {
                Some(dir) => {
                    fs::create_dir_all(dir)?;
                    fs::write(dir.join("coverage_suite.json"), text)?;
                    println!("{} test(s) written to {}", tests.len(), dir.display());
                }
                None => print!("{text}"),
            }
        }
    }
    Ok(())
}

fn experiment(args: &ExperimentArgs) -> anyhow::Result<()> {
    let corpus = load_corpus(&args.corpus).map_err(|e| InputError(e.to_string()))?;
    let config = args.search.config();
    config.validate().map_err(|e| InputError(e.to_string()))?;
    if args.reps == 0 {
        return Err(InputError("--reps must be at least 1".into()).into());
    }
    let report = run_experiment(&corpus, &config, args.reps)?;
    let rendered = render_report(&report);
    print!("{}", rendered.text);
    if let Some(dir) = &args.report {
        write_report(dir, &rendered).with_context(|| format!("writing {}", dir.display()))?;
    }
    Ok(())
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Generate(args) => generate(&args),
        Command::Experiment(args) => experiment(&args),
        Command::Extract { file } => {
            let program = load_program(&file)?;
            let json = extract(&program).to_json(&program);
            println!("{}", serde_json::to_string_pretty(&json)?);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<InputError>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("internal error: {e:#}");
            ExitCode::from(3)
        }
    }
}
