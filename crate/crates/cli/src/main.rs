//! `moms`: mine motifs, build the motif graph, train, predict and evaluate.

mod commands;
mod config;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};
use moms_core::chem::{CorpusError, ParseError};
use moms_core::eval::EvalError;
use moms_core::model::{ConfigError, ModelError, Variant};
use moms_core::motif::{MiningError, VocabError};
use moms_core::spectra::MspError;

const EXIT_FAILURE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_MISMATCH: u8 = 3;

/// An error that already knows its exit code.
#[derive(Debug)]
pub struct Exit {
    code: u8,
    message: String,
}

impl Exit {
    pub fn input(message: impl Into<String>) -> Exit {
        Exit {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    pub fn mismatch(message: impl Into<String>) -> Exit {
        Exit {
            code: EXIT_MISMATCH,
            message: message.into(),
        }
    }
}

impl fmt::Display for Exit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for Exit {}

#[derive(Parser)]
#[command(name = "moms", version, about = "Motif-based mass spectrum prediction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mine a motif vocabulary from an `id<TAB>SMILES` corpus.
    Mine {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = moms_core::motif::DEFAULT_VOCAB_SIZE)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the molecule/motif graph and write edges, nodes and a manifest.
    BuildGraph {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        vocab: PathBuf,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Train from a JSON run config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the model variant from the config.
        #[arg(long)]
        model: Option<Variant>,
    },
    /// Predict spectra for an `id<TAB>SMILES` file and write MSP.
    Predict {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cosine similarity between predicted and reference MSP files.
    Eval {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        truth: PathBuf,
        #[arg(long, default_value_t = moms_core::spectra::M_MAX)]
        m_max: usize,
        /// Write the JSON report here.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Library search: rank each query's true match among the references.
    Rank {
        #[arg(long)]
        queries: PathBuf,
        #[arg(long)]
        refs: PathBuf,
        /// Percentage cutoff for the top-k% score.
        #[arg(long, default_value_t = 5)]
        k: u32,
        /// Only compare references within this many Da of the query precursor.
        #[arg(long)]
        precursor_window: Option<f64>,
        #[arg(long, default_value_t = moms_core::spectra::M_MAX)]
        m_max: usize,
        #[arg(long)]
        json: Option<PathBuf>,
        /// Write a rank histogram as SVG.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Exit>() {
            return e.code;
        }
        if let Some(e) = cause.downcast_ref::<ModelError>() {
            return match e {
                ModelError::DataMismatch(_) => EXIT_MISMATCH,
                ModelError::Config(_)
                | ModelError::Parse(_)
                | ModelError::Corpus(_)
                | ModelError::Vocab(_)
                | ModelError::Checkpoint(_)
                | ModelError::MotifSpectra(_)
                | ModelError::Split(_)
                | ModelError::Mining(_) => EXIT_INPUT,
                _ => EXIT_FAILURE,
            };
        }
        if let Some(e) = cause.downcast_ref::<EvalError>() {
            return match e {
                EvalError::LengthMismatch(..) | EvalError::MissingTrueMatch(_) | EvalError::DuplicateTrueMatch(_) => {
                    EXIT_MISMATCH
                }
                _ => EXIT_INPUT,
            };
        }
        if cause.is::<ConfigError>()
            || cause.is::<serde_json::Error>()
            || cause.is::<CorpusError>()
            || cause.is::<ParseError>()
            || cause.is::<MspError>()
            || cause.is::<VocabError>()
            || cause.is::<MiningError>()
        {
            return EXIT_INPUT;
        }
    }
    EXIT_FAILURE
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("MOMS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Exit::input(format!("MOMS_THREADS must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Mine { corpus, k, out } => commands::mine(&corpus, k, &out),
        Command::BuildGraph { corpus, vocab, out } => commands::build_graph_cmd(&corpus, &vocab, &out),
        Command::Train { config, model } => commands::train(&config, model),
        Command::Predict { checkpoint, input, out } => commands::predict(&checkpoint, &input, &out),
        Command::Eval {
            pred,
            truth,
            m_max,
            json,
        } => commands::eval(&pred, &truth, m_max, json.as_deref()),
        Command::Rank {
            queries,
            refs,
            k,
            precursor_window,
            m_max,
            json,
            svg,
        } => commands::rank(&commands::RankArgs {
            queries,
            refs,
            k,
            precursor_window,
            m_max,
            json,
            svg,
        }),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
