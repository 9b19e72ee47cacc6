use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use lifetag_cli::{
    cmd_eval, cmd_gen, cmd_label, cmd_run_all, cmd_split, cmd_train, Profile, ResolvedConfig,
};

/// Weak-supervision pipeline for classifying lifestyle factors in
/// clinical-style sentences.
#[derive(Parser)]
#[command(name = "lifetag", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Pipeline config file (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Override the config's global seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default: runs/<config-stem>)
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// Learning-rate profile: paper (2e-5) or desk (1e-3)
    #[arg(long, default_value = "desk")]
    profile: Profile,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic training corpus and gold standard corpus
    Gen(Common),
    /// Assign weak labels with the rule-based labeler
    Label {
        #[command(flatten)]
        common: Common,
        /// Corpus to label (default: <out>/corpus/train_gold.tsv)
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Split the weak-labeled corpus into train and validation sets
    Split {
        #[command(flatten)]
        common: Common,
        /// Corpus to split (default: <out>/corpus/train_weak.tsv)
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Train the classifier on the weak-labeled training split
    Train {
        #[command(flatten)]
        common: Common,
        /// Training split (default: <out>/corpus/train_split.tsv)
        #[arg(long)]
        train: Option<PathBuf>,
        /// Validation split (default: <out>/corpus/valid_split.tsv)
        #[arg(long)]
        valid: Option<PathBuf>,
    },
    /// Evaluate a checkpoint on the gold standard corpus
    Eval {
        #[command(flatten)]
        common: Common,
        /// Checkpoint file (default: <out>/model.ckpt)
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// GSC file (default: <out>/corpus/gsc.tsv)
        #[arg(long)]
        gsc: Option<PathBuf>,
    },
    /// Run the whole pipeline: gen, label, split, train, eval
    RunAll(Common),
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Gen(c) | Command::RunAll(c) => c,
            Command::Label { common, .. }
            | Command::Split { common, .. }
            | Command::Train { common, .. }
            | Command::Eval { common, .. } => common,
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = cli.command.common();
    let config = match ResolvedConfig::load(
        &common.config,
        common.seed,
        common.out_dir.clone(),
        common.profile,
    ) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code() as u8);
        }
    };

    let result = match &cli.command {
        Command::Gen(_) => cmd_gen(&config),
        Command::Label { corpus, .. } => cmd_label(&config, corpus.as_deref()),
        Command::Split { corpus, .. } => cmd_split(&config, corpus.as_deref()),
        Command::Train { train, valid, .. } => {
            cmd_train(&config, train.as_deref(), valid.as_deref())
        }
        Command::Eval { checkpoint, gsc, .. } => {
            cmd_eval(&config, checkpoint.as_deref(), gsc.as_deref())
        }
        Command::RunAll(_) => cmd_run_all(&config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
