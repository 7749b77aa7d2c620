use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use escm_core::checkpoint::Checkpoint;
use escm_core::config::TrainConfig;
use escm_core::corpus::{load_corpus, load_parses, load_vectors, Dialogue, EmotionLexicon, ParseMap};
use escm_core::emotion::EMOTION_LABELS;
use escm_core::eval::{encode_split, evaluate, generate_responses};
use escm_core::miner::{mine, write_report};
use escm_core::train::{train, Control, TrainData};
use escm_core::{Error, Result};

#[derive(Parser)]
#[command(name = "escm", version, about = "Emotion-semantic correlation dialogue model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write checkpoints to a directory.
    Train {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Dialogue JSONL file, or a directory holding train.jsonl.
        #[arg(long)]
        corpus: PathBuf,
        /// CoNLL-U file, or a directory holding train.conllu.
        #[arg(long)]
        parses: PathBuf,
        /// Pretrained word vectors in text format.
        #[arg(long)]
        vectors: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Print a loss line every this many iterations.
        #[arg(long, default_value_t = 100)]
        log_every: usize,
    },
    /// Score a split and print a JSON report.
    Evaluate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        parses: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        /// Also write the report here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Decode responses greedily and write them as JSONL.
    Generate {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        parses: PathBuf,
        #[arg(long, default_value = "test")]
        split: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Mine correlation patterns and write CSV and markdown reports.
    Mine {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        parses: PathBuf,
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0.1)]
        fraction: f64,
        #[arg(long, default_value_t = 5)]
        top_k: usize,
        #[arg(long)]
        include_responses: bool,
    },
}

/// A directory argument resolves to `{split}.{ext}` inside it.
fn split_file(path: &Path, split: &str, ext: &str) -> PathBuf {
    if path.is_dir() {
        path.join(format!("{split}.{ext}"))
    } else {
        path.to_path_buf()
    }
}

fn load_split(corpus: &Path, parses: &Path, split: &str) -> Result<(Vec<Dialogue>, ParseMap)> {
    let dialogues = load_corpus(split_file(corpus, split, "jsonl"))?;
    let parses = load_parses(split_file(parses, split, "conllu"))?;
    Ok((dialogues, parses))
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            config,
            corpus,
            parses,
            vectors,
            out,
            log_every,
        } => {
            let config = match config {
                Some(p) => TrainConfig::load(p)?,
                None => TrainConfig::default(),
            };
            let (dialogues, parses) = load_split(&corpus, &parses, "train")?;
            let data = TrainData::prepare(&config, &dialogues, &parses)?;
            let vectors = match vectors {
                Some(p) => Some(load_vectors(p, |w| {
                    data.vocab.get(w).is_some() || EMOTION_LABELS.contains(&w)
                })?),
                None => None,
            };
            let max = config.max_iterations;
            let every = log_every.max(1);
            let outcome = train(config, data, vectors.as_ref(), Some(&out), |r, _| {
                if r.iteration % every == 0 || r.iteration + 1 == max {
                    println!(
                        "iter {} total {:.6} gen {:.6} ctx {:.6} cor {:.6}",
                        r.iteration, r.total, r.gen, r.ctx, r.cor
                    );
                }
                Control::Continue
            })?;
            for p in &outcome.checkpoints {
                println!("wrote {}", p.display());
            }
        }
        Command::Evaluate {
            checkpoint,
            corpus,
            parses,
            split,
            out,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let (dialogues, parses) = load_split(&corpus, &parses, &split)?;
            let report = evaluate(&ckpt, &checkpoint.display().to_string(), &split, &dialogues, &parses)?;
            let json = report.to_json()?;
            if let Some(p) = out {
                write_file(&p, &json)?;
            }
            print!("{json}");
        }
        Command::Generate {
            checkpoint,
            corpus,
            parses,
            split,
            out,
        } => {
            let ckpt = Checkpoint::load(&checkpoint)?;
            let (dialogues, parses) = load_split(&corpus, &parses, &split)?;
            let examples = encode_split(&ckpt, &dialogues, &parses)?;
            let mut text = String::new();
            for g in generate_responses(&ckpt, &examples)? {
                text.push_str(&serde_json::to_string(&g)?);
                text.push('\n');
            }
            write_file(&out, &text)?;
            println!("wrote {} responses to {}", examples.len(), out.display());
        }
        Command::Mine {
            corpus,
            parses,
            lexicon,
            out,
            fraction,
            top_k,
            include_responses,
        } => {
            let dialogues = load_corpus(&corpus)?;
            let parses = load_parses(&parses)?;
            let lexicon = EmotionLexicon::load(&lexicon)?;
            let result = mine(&dialogues, &parses, &lexicon, include_responses);
            write_report(&result, &out, fraction, top_k)?;
            println!(
                "{} patterns, {} uses, {} skipped sentences; report in {}",
                result.counts.num_patterns(),
                result.counts.total(),
                result.skipped,
                out.display()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let _ = writeln!(std::io::stderr(), "error: {e}");
            ExitCode::from(if e.is_validation() { 2 } else { 1 })
        }
    }
}
