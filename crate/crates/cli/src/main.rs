//! `magnn`: batch command-line interface to the monotonic GNN toolkit.
//!
//! Exit codes: 0 on success, 1 when fuzzing finds violations, 2 on usage,
//! input or validation errors.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use magnn_core::Direction;

#[derive(Parser, Debug)]
#[command(name = "magnn", version, about = "Sound rules and explanations for monotonic mean-aggregation GNNs")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug)]
pub struct Global {
    /// Weight file (JSON).
    #[arg(long, global = true)]
    pub model: Option<PathBuf>,
    /// Signature file; when given, the model and inputs must agree with it.
    #[arg(long, global = true)]
    pub signature: Option<PathBuf>,
    /// Fact file.
    #[arg(long, global = true)]
    pub dataset: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads for extraction and fuzzing; output does not depend on it.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,
    #[arg(long, global = true, value_enum, default_value_t = Format::Plain)]
    pub format: Format,
    /// Override the aggregation direction stored in the model.
    #[arg(long, global = true, value_parser = parse_direction)]
    pub direction: Option<Direction>,
    /// Write to this file instead of standard output.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Add a generation time line to the output.
    #[arg(long, global = true)]
    pub timestamps: bool,
}

fn parse_direction(s: &str) -> Result<Direction, String> {
    s.parse()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Plain,
    Json,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Print the facts the model derives on the dataset.
    Infer,
    /// Enumerate the minimal sound restricted rules of the model.
    Extract {
        /// Largest rule body considered.
        #[arg(long, default_value_t = 3)]
        max_body_size: usize,
        /// Check every candidate instead of skipping subsumed ones.
        #[arg(long)]
        no_prune: bool,
    },
    /// Decide soundness of restricted or ELUQ rules.
    Check {
        /// Rule file, one rule per line.
        #[arg(long, required_unless_present = "rule")]
        rules: Option<PathBuf>,
        /// A single rule given inline.
        #[arg(long, conflicts_with = "rules")]
        rule: Option<String>,
    },
    /// Explain predictions with sound rules.
    Explain {
        /// The predicted fact to explain, e.g. `A(a)`.
        #[arg(long, required_unless_present = "all_true_positives")]
        fact: Option<String>,
        /// Explain every prediction that also appears in the target file.
        #[arg(long, requires = "targets", conflicts_with = "fact")]
        all_true_positives: bool,
        /// Target facts for `--all-true-positives`.
        #[arg(long)]
        targets: Option<PathBuf>,
        /// Try at most this many deletions to shrink full explanations.
        #[arg(long)]
        prune_budget: Option<usize>,
        /// Raise counting upper bounds by up to this many successors.
        #[arg(long, default_value_t = 0)]
        relax: u32,
    },
    /// Test rules against the model on random datasets.
    Fuzz {
        #[arg(long, required_unless_present = "rule")]
        rules: Option<PathBuf>,
        #[arg(long, conflicts_with = "rules")]
        rule: Option<String>,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, default_value_t = 6)]
        max_constants: usize,
        /// Fact density, repeatable; trials cycle through the values given.
        #[arg(long = "density")]
        densities: Vec<f64>,
        /// Violations listed per rule.
        #[arg(long, default_value_t = 5)]
        keep: usize,
        #[arg(long)]
        no_shrink: bool,
    },
    /// Encode a binary dataset over pairs of constants.
    LpEncode {
        /// Materialise every ordered pair of constants.
        #[arg(long)]
        all_pairs: bool,
        /// Also write the derived signature here.
        #[arg(long)]
        signature_out: Option<PathBuf>,
    },
    /// Unfold sound rules of a pair model into binary rules.
    LpUnfold {
        /// Restricted rules over the pair signature; extracted from the model when absent.
        #[arg(long)]
        rules: Option<PathBuf>,
        #[arg(long, default_value_t = 3)]
        max_body_size: usize,
    },
    /// Report invariant violations of a weight file.
    Validate,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
