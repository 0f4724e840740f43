//! `sector` command line: segment plain-text documents into topically
//! coherent sections and label them.
//!
//! Exit codes: 0 success, 1 usage/config error, 2 data error, 3 numeric
//! failure.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sector::eval::EvalTask;
use sector::segment::Strategy;
use sector::Error;

#[derive(Parser)]
#[command(
    name = "sector",
    version,
    about = "Topic segmentation and classification with latent topic embeddings"
)]
struct Cli {
    /// Worker threads for batch stages (1 keeps runs fully sequential).
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct SegmentFlags {
    /// Run configuration supplying segmentation defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Segmentation strategy: nl | max | emd | bemd (default bemd).
    #[arg(long)]
    strategy: Option<String>,
    /// PCA dimensionality for the deviation strategies (default 16).
    #[arg(long)]
    pca_dims: Option<usize>,
    /// Gaussian smoothing sigma (default 2.5).
    #[arg(long)]
    sigma: Option<f64>,
}

impl SegmentFlags {
    /// Flags override the config file; the config file overrides defaults.
    fn resolve(&self) -> Result<sector::segment::SegConfig, Error> {
        let mut seg = match &self.config {
            Some(path) => config::load_config(path)?.segment,
            None => sector::segment::SegConfig::default(),
        };
        if let Some(strategy) = parse_strategy(&self.strategy)? {
            seg.strategy = strategy;
        }
        if let Some(d) = self.pca_dims {
            seg.pca_dims = d;
        }
        if let Some(s) = self.sigma {
            seg.sigma = s;
        }
        Ok(seg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration file.
    Train {
        #[arg(long)]
        config: PathBuf,
    },
    /// Segment and classify documents with a trained model.
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// Input documents (WikiSection JSON).
        #[arg(long)]
        input: PathBuf,
        /// Predictions file; omitted writes to stdout.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        segment: SegmentFlags,
        #[arg(long, default_value_t = 512)]
        max_sentences: usize,
    },
    /// Score predictions against gold sections.
    Evaluate {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predictions: PathBuf,
        /// Report JSON output path.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Task: single | multi.
        #[arg(long, default_value = "single")]
        task: String,
        #[arg(long, default_value = "")]
        dataset: String,
        #[arg(long, default_value = "sector")]
        model_name: String,
        #[arg(long, default_value_t = 512)]
        max_sentences: usize,
    },
    /// Emit deviation and label-score CSV data for one document.
    PlotDeviation {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Document id (default: the first document).
        #[arg(long)]
        doc_id: Option<String>,
        #[arg(long, default_value = "plots")]
        output_dir: PathBuf,
        #[command(flatten)]
        segment: SegmentFlags,
        #[arg(long, default_value_t = 512)]
        max_sentences: usize,
    },
    /// Cluster raw headings into normalized topic labels.
    NormalizeHeadings {
        /// Headings TSV: heading \t count.
        #[arg(long, conflicts_with = "corpus")]
        headings: Option<PathBuf>,
        /// Count headings from a corpus file instead of a TSV.
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Lexicon TSV: lemma \t synset_id \t primary_lemma.
        #[arg(long)]
        lexicon: PathBuf,
        #[arg(long, default_value = "normalized")]
        output_dir: PathBuf,
    },
    /// Generate a synthetic corpus in the WikiSection JSON schema.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
}

fn parse_strategy(flag: &Option<String>) -> Result<Option<Strategy>, Error> {
    flag.as_deref().map(str::parse).transpose()
}

fn run(cli: Cli) -> Result<(), Error> {
    sector::par::configure_threads(cli.threads);
    match cli.command {
        Command::Train { config } => {
            let config = config::load_config(&config)?;
            commands::cmd_train(&config)
        }
        Command::Predict {
            model,
            input,
            output,
            segment,
            max_sentences,
        } => commands::cmd_predict(&commands::PredictArgs {
            model,
            input,
            output,
            segment: segment.resolve()?,
            max_sentences,
        }),
        Command::Evaluate {
            gold,
            predictions,
            output,
            task,
            dataset,
            model_name,
            max_sentences,
        } => {
            let task = match task.as_str() {
                "single" => EvalTask::Single,
                "multi" => EvalTask::Multi,
                other => {
                    return Err(Error::Config(format!(
                        "unknown task '{other}', expected single|multi"
                    )))
                }
            };
            commands::cmd_evaluate(&commands::EvaluateArgs {
                gold,
                predictions,
                output,
                task,
                dataset,
                model_name,
                max_sentences,
            })
            .map(|_| ())
        }
        Command::PlotDeviation {
            model,
            input,
            doc_id,
            output_dir,
            segment,
            max_sentences,
        } => commands::cmd_plot_deviation(&commands::PlotArgs {
            model,
            input,
            doc_id,
            output_dir,
            segment: segment.resolve()?,
            max_sentences,
        }),
        Command::NormalizeHeadings {
            headings,
            corpus,
            lexicon,
            output_dir,
        } => commands::cmd_normalize_headings(&commands::NormalizeArgs {
            headings,
            corpus,
            lexicon,
            output_dir,
        }),
        Command::Synth { config, output } => {
            let config = config::load_config(&config)?;
            commands::cmd_synth(&config, &output)
        }
    }
}

fn exit_code_for(error: &Error) -> u8 {
    match error {
        Error::Config(_) => 1,
        Error::Numeric(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // Help and version requests are successes; everything else is a
            // usage error.
            let code = if err.use_stderr() { 1 } else { 0 };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(exit_code_for(&error))
        }
    }
}
