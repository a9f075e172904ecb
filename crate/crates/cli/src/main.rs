//! `tuplesim`: build spaces, train, evaluate and generate question sets.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use config::RunConfig;

/// A failed command with its exit code: 1 usage, 2 data, 3 numerical.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 1,
            message: message.into(),
        }
    }

    pub fn data(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<tuplesim::Error> for Failure {
    fn from(e: tuplesim::Error) -> Self {
        Failure {
            code: if e.is_numerical() { 3 } else { 2 },
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::data(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "tuplesim", version, about = "Supervised similarity of word tuples")]
struct Cli {
    /// TOML run config; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More logging (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count contexts and build the raw PPMI, domain and function spaces.
    BuildSpaces(BuildArgs),
    /// Train a calibrated SVM on augmented question tuples.
    Train(TrainArgs),
    /// Answer questions, cross-validate, score prototypicality or run ablations.
    Evaluate(EvalArgs),
    /// Write holistic training questions or a synthetic benchmark.
    Generate(GenerateArgs),
}

#[derive(Args, Debug)]
struct BuildArgs {
    /// Corpus text; each line is an independent text.
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// Lexicon TSV (term, part of speech).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Output bundle directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    rank: Option<usize>,
    #[arg(long)]
    verb_window: Option<usize>,
}

#[derive(Args, Debug, Clone)]
pub struct ModelArgs {
    /// Feature blocks, e.g. "ppmi,dom,fun" or "all".
    #[arg(long)]
    features: Option<String>,
    /// SVM cost.
    #[arg(long)]
    c: Option<f64>,
    /// SMO stopping tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// "training" or "cv:K".
    #[arg(long)]
    calibration: Option<String>,
    /// Present five-choice analogies as ten-choice and seven-choice
    /// paraphrases as fourteen-choice.
    #[arg(long)]
    expand: bool,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long)]
    spaces: Option<PathBuf>,
    #[arg(long)]
    questions: Option<PathBuf>,
    /// Output model file.
    #[arg(long)]
    model: Option<PathBuf>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum EvalMode {
    Answer,
    Crossval,
    Prototypicality,
    Ablation,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long, value_enum)]
    mode: EvalMode,
    #[arg(long)]
    spaces: Option<PathBuf>,
    /// Question file; give it twice in ablation mode (analogies and paraphrases).
    #[arg(long)]
    questions: Vec<PathBuf>,
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long)]
    paradigms: Option<PathBuf>,
    /// CSV report; a JSON summary is written next to it.
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long)]
    folds: Option<usize>,
    #[command(flatten)]
    model_args: ModelArgs,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum GenerateMode {
    Holistic,
    Synthetic,
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_enum)]
    mode: GenerateMode,
    /// Lexicon with pseudo-unigrams (holistic mode).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Output JSONL (holistic) or directory (synthetic).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Number of holistic questions to generate at most.
    #[arg(long)]
    n: Option<usize>,
    /// Stems never to use: lines "a b", or question JSONL.
    #[arg(long)]
    exclude_stems: Option<PathBuf>,
}

fn set_some<T>(slot: &mut Option<T>, v: Option<T>) {
    if v.is_some() {
        *slot = v;
    }
}

fn apply_model_args(cfg: &mut RunConfig, a: &ModelArgs) -> Result<(), Failure> {
    if let Some(f) = &a.features {
        cfg.features.blocks = f.clone();
    }
    if let Some(c) = a.c {
        cfg.svm.c = c;
    }
    if let Some(t) = a.tol {
        cfg.svm.tol = t;
    }
    if let Some(cal) = &a.calibration {
        cfg.svm.calibration = commands::parse_calibration(cal)?;
    }
    cfg.eval.expand |= a.expand;
    cfg.blocks()?;
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    match cli.command {
        Command::BuildSpaces(a) => {
            set_some(&mut cfg.paths.corpus, a.corpus);
            set_some(&mut cfg.paths.lexicon, a.lexicon);
            set_some(&mut cfg.paths.out, a.out);
            set_some(&mut cfg.build.rank, a.rank);
            if let Some(w) = a.verb_window {
                cfg.build.verb_window = w;
            }
            commands::build_spaces(&cfg)
        }
        Command::Train(a) => {
            set_some(&mut cfg.paths.spaces, a.spaces);
            if let Some(q) = a.questions {
                cfg.paths.questions = vec![q];
            }
            set_some(&mut cfg.paths.model, a.model);
            apply_model_args(&mut cfg, &a.model_args)?;
            commands::train(&cfg)
        }
        Command::Evaluate(a) => {
            set_some(&mut cfg.paths.spaces, a.spaces);
            if !a.questions.is_empty() {
                cfg.paths.questions = a.questions;
            }
            set_some(&mut cfg.paths.model, a.model);
            set_some(&mut cfg.paths.paradigms, a.paradigms);
            set_some(&mut cfg.paths.report, a.report);
            if let Some(f) = a.folds {
                cfg.eval.folds = f;
            }
            apply_model_args(&mut cfg, &a.model_args)?;
            match a.mode {
                EvalMode::Answer => commands::evaluate_answer(&cfg),
                EvalMode::Crossval => commands::evaluate_crossval(&cfg),
                EvalMode::Prototypicality => commands::evaluate_prototypicality(&cfg),
                EvalMode::Ablation => commands::evaluate_ablation(&cfg),
            }
        }
        Command::Generate(a) => {
            set_some(&mut cfg.paths.lexicon, a.lexicon);
            set_some(&mut cfg.paths.out, a.out);
            set_some(&mut cfg.paths.exclude_stems, a.exclude_stems);
            if let Some(n) = a.n {
                cfg.generate.n_questions = n;
            }
            match a.mode {
                GenerateMode::Holistic => commands::generate_holistic(&cfg),
                GenerateMode::Synthetic => commands::generate_synthetic(&cfg),
            }
        }
    }
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("TUPLESIM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::usage(format!("TUPLESIM_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::usage(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match init_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
