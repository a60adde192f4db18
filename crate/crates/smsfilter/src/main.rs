use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use smsfilter::cli::{self, FigData, TopicsFormat};
use smsfilter::error::{Error, Result};
use smsfilter::lda::LdaConfig;
use smsfilter::pipeline::PipelineConfig;
use smsfilter::sda::SdaConfig;

#[derive(Parser)]
#[command(
    name = "smsfilter",
    about = "SMS spam filtering: topic features, autoencoder reconstruction error, Fisher threshold",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Training knobs shared by `train` and `cv`. Defaults: 60 topics,
/// 60-100-150 layer sizes, learning rate 0.1, 30% corruption, 100 epochs,
/// 10 folds.
#[derive(Args)]
struct ConfigArgs {
    /// Number of topics (the autoencoder input size)
    #[arg(long, default_value_t = 60)]
    topics: usize,

    /// Document-topic prior; defaults to 50/topics
    #[arg(long)]
    alpha: Option<f64>,

    /// Topic-word prior
    #[arg(long, default_value_t = 0.01)]
    beta: f64,

    /// Gibbs sweeps when fitting the topic model
    #[arg(long = "lda-iters", default_value_t = 1000)]
    lda_iters: usize,

    /// Gibbs sweeps when inferring a message's topic vector
    #[arg(long = "infer-iters", default_value_t = 100)]
    infer_iters: usize,

    /// Inference sweeps discarded before averaging
    #[arg(long = "infer-burn", default_value_t = 50)]
    infer_burn: usize,

    /// Autoencoder layer sizes, comma separated, input first; defaults to
    /// "<topics>,100,150"
    #[arg(long)]
    sizes: Option<SizesArg>,

    /// SGD learning rate
    #[arg(long = "lr", default_value_t = 0.1)]
    learning_rate: f64,

    /// Fraction of input units masked to zero during training
    #[arg(long, default_value_t = 0.3)]
    corruption: f64,

    /// Training epochs per autoencoder layer
    #[arg(long, default_value_t = 100)]
    epochs: usize,

    /// Samples per SGD step
    #[arg(long, default_value_t = 1)]
    minibatch: usize,

    /// Cross-validation folds
    #[arg(long, default_value_t = 10)]
    folds: usize,

    /// Master seed; every random choice derives from it
    #[arg(long, default_value_t = 42)]
    seed: u64,

    /// Train the autoencoder on ham-only topic vectors (ablation)
    #[arg(long = "sda-ham-only", default_value_t = false)]
    sda_ham_only: bool,
}

#[derive(Clone)]
struct SizesArg(Vec<usize>);

impl std::str::FromStr for SizesArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|part| {
                part.trim()
                    .parse::<usize>()
                    .map_err(|e| format!("bad layer size {part:?}: {e}"))
            })
            .collect::<std::result::Result<Vec<usize>, String>>()
            .map(SizesArg)
    }
}

impl ConfigArgs {
    fn to_config(&self) -> PipelineConfig {
        let mut lda = LdaConfig::with_topics(self.topics);
        if let Some(alpha) = self.alpha {
            lda.alpha = alpha;
        }
        lda.beta = self.beta;
        lda.train_iters = self.lda_iters;
        lda.infer_iters = self.infer_iters;
        lda.infer_burn = self.infer_burn;

        PipelineConfig {
            lda,
            sda: SdaConfig {
                learning_rate: self.learning_rate,
                corruption: self.corruption,
                epochs: self.epochs,
                minibatch: self.minibatch,
                ..SdaConfig::default()
            },
            sizes: self
                .sizes
                .clone()
                .map(|s| s.0)
                .unwrap_or_else(|| vec![self.topics, 100, 150]),
            folds: self.folds,
            seed: self.seed,
            sda_ham_only: self.sda_ham_only,
            fda_threshold: Default::default(),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Text,
    Svg,
}

#[derive(Clone, Copy, ValueEnum)]
enum WhichArg {
    #[value(name = "re-hist")]
    ReHist,
    #[value(name = "pca1")]
    Pca1,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a dataset and print class and token statistics
    Validate {
        /// Dataset file: one `label<TAB>text` message per line
        #[arg(long)]
        data: PathBuf,
        /// Stop-word list file, one word per line (defaults to the embedded list)
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Train on the whole dataset and write a model bundle
    Train {
        /// Dataset file: one `label<TAB>text` message per line
        #[arg(long)]
        data: PathBuf,
        /// Output bundle path
        #[arg(long)]
        out: PathBuf,
        /// Stop-word list file, one word per line (defaults to the embedded list)
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Stratified k-fold cross-validation with per-fold and summary metrics
    Cv {
        /// Dataset file: one `label<TAB>text` message per line
        #[arg(long)]
        data: PathBuf,
        /// Also write the full report as JSON
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for independent folds (results identical for any value)
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Stop-word list file, one word per line (defaults to the embedded list)
        #[arg(long)]
        stopwords: Option<PathBuf>,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Score one message or a file of messages against a trained bundle
    Score {
        /// Trained bundle to score with
        #[arg(long)]
        bundle: PathBuf,
        /// A single message text
        #[arg(long)]
        text: Option<String>,
        /// A file with one message per line
        #[arg(long)]
        file: Option<PathBuf>,
        /// Stop-word list file; must match the bundle's recorded hash
        #[arg(long)]
        stopwords: Option<PathBuf>,
    },
    /// Export a bundle's top topic words as a table or an SVG word cloud
    Topics {
        /// Trained bundle to read topics from
        #[arg(long)]
        bundle: PathBuf,
        /// Words per topic
        #[arg(long = "top-n", default_value_t = 10)]
        top_n: usize,
        #[arg(long, value_enum, default_value_t = FormatArg::Text)]
        format: FormatArg,
        /// Export a single topic instead of all of them
        #[arg(long)]
        topic: Option<usize>,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export figure data: reconstruction errors or first principal component
    Figdata {
        #[arg(long, value_enum)]
        which: WhichArg,
        /// Trained bundle to score with
        #[arg(long)]
        bundle: PathBuf,
        /// Dataset file: one `label<TAB>text` message per line
        #[arg(long)]
        data: PathBuf,
        /// Stop-word list file; must match the bundle's recorded hash
        #[arg(long)]
        stopwords: Option<PathBuf>,
        /// Write to a file instead of stdout
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Validate { data, stopwords } => cli::cmd_validate(&data, stopwords.as_deref()),
        Command::Train {
            data,
            out,
            stopwords,
            config,
        } => cli::cmd_train(&data, &out, &config.to_config(), stopwords.as_deref()),
        Command::Cv {
            data,
            out,
            jobs,
            stopwords,
            config,
        } => {
            if jobs == 0 {
                return Err(Error::Config("--jobs must be at least 1".into()));
            }
            cli::cmd_cv(&data, &config.to_config(), stopwords.as_deref(), jobs, out.as_deref())
        }
        Command::Score {
            bundle,
            text,
            file,
            stopwords,
        } => cli::cmd_score(&bundle, text.as_deref(), file.as_deref(), stopwords.as_deref()),
        Command::Topics {
            bundle,
            top_n,
            format,
            topic,
            out,
        } => {
            let format = match format {
                FormatArg::Text => TopicsFormat::Text,
                FormatArg::Svg => TopicsFormat::Svg,
            };
            cli::cmd_topics(&bundle, top_n, format, topic, out.as_deref())
        }
        Command::Figdata {
            which,
            bundle,
            data,
            stopwords,
            out,
        } => {
            let which = match which {
                WhichArg::ReHist => FigData::ReHist,
                WhichArg::Pca1 => FigData::Pca1,
            };
            cli::cmd_figdata(which, &bundle, &data, stopwords.as_deref(), out.as_ref())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
