//! Command-line surface. Kept separate from the command implementations so
//! integration tests can build argument structs directly.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "fred",
    version,
    about = "Privately measures how far a server-held embedding dataset is from a federated one"
)]
pub struct Cli {
    /// Worker threads for client-parallel rounds (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the two-round protocol once and report the distance.
    Compute(ComputeArgs),
    /// Rank candidate datasets against a saved private release.
    Rank(RankArgs),
    /// Synthetic mixture benchmark: distance versus mixture percentage.
    SynthBench(BenchArgs),
}

/// Flags shared by every command that can run the protocol.
#[derive(Debug, Clone, Default, Args)]
pub struct ProtocolFlags {
    /// TOML config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Total privacy budget ε (split evenly across the two rounds).
    #[arg(long)]
    pub epsilon: Option<f64>,

    /// Total privacy budget δ (split evenly across the two rounds).
    #[arg(long)]
    pub delta: Option<f64>,

    /// ℓ2 clipping bound applied to every client embedding.
    #[arg(long)]
    pub clip: Option<f64>,

    /// Noise mode: literal, calibrated or audit.
    #[arg(long)]
    pub mode: Option<String>,

    /// Run seed. Falls back to the config file, then $FRED_SEED, then 0.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Publicly known total sample count; omits the count round.
    #[arg(long)]
    pub declared_n2: Option<u64>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ComputeArgs {
    /// Server-held embedding file the federation is compared against.
    #[arg(long)]
    pub public: Option<PathBuf>,

    /// Client data: a directory of embedding files (one per client), a
    /// single file, or FILE@round_robin:K, FILE@dirichlet:K:ALPHA,
    /// FILE@by_label:LABELS_FILE.
    #[arg(long)]
    pub clients: Option<String>,

    /// Report output path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub protocol: ProtocolFlags,
}

#[derive(Debug, Clone, Default, Args)]
pub struct RankArgs {
    /// Candidate embedding files, comma-separated or repeated.
    #[arg(long, value_delimiter = ',')]
    pub candidates: Vec<PathBuf>,

    /// Release file. Reused if it exists; otherwise created from --clients
    /// and saved here, so reruns add candidates at zero extra spend.
    #[arg(long)]
    pub release: Option<PathBuf>,

    /// Client data, needed only when the release file does not exist yet.
    #[arg(long)]
    pub clients: Option<String>,

    /// Optional report output path.
    #[arg(long)]
    pub out: Option<PathBuf>,

    #[command(flatten)]
    pub protocol: ProtocolFlags,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Mixture percentages to sweep, comma-separated, each in [0, 100].
    #[arg(long, value_delimiter = ',', default_value = "0,25,50,75,95,99,100")]
    pub mix_steps: Vec<f64>,

    /// Private trials per mixture step.
    #[arg(long, default_value_t = 5)]
    pub trials: u32,

    /// Total privacy budget ε for the private trials.
    #[arg(long, default_value_t = 0.6)]
    pub epsilon: f64,

    /// Total privacy budget δ for the private trials.
    #[arg(long, default_value_t = 2.0e-6)]
    pub delta: f64,

    /// ℓ2 clipping bound.
    ///
    /// The default leaves typical rows of the unit-covariance source
    /// unclipped at the default dimension, so clipping does not distort
    /// the sweep; rows of the shifted source still get clipped.
    #[arg(long, default_value_t = 6.0)]
    pub clip: f64,

    /// Rows per dataset (target and each mixture).
    #[arg(long, default_value_t = 5000)]
    pub samples: usize,

    /// Embedding dimension.
    #[arg(long, default_value_t = 32)]
    pub dim: usize,

    /// Number of simulated clients (round-robin partition).
    #[arg(long, default_value_t = 10)]
    pub clients: usize,

    /// Distance between the two source means.
    #[arg(long, default_value_t = 5.0)]
    pub separation: f64,

    /// Base seed for pools and per-run streams.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Plot data output (tab-separated: Y, trial, distance, mode).
    #[arg(long, default_value = "fred-bench.tsv")]
    pub plot_out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn candidate_lists_split_on_commas() {
        let cli = Cli::parse_from([
            "fred", "rank", "--candidates", "a.femb,b.femb", "--candidates", "c.femb",
            "--release", "r.json",
        ]);
        match cli.command {
            Command::Rank(args) => {
                let names: Vec<_> = args
                    .candidates
                    .iter()
                    .map(|p| p.display().to_string())
                    .collect();
                assert_eq!(names, ["a.femb", "b.femb", "c.femb"]);
            }
            _ => panic!("expected rank"),
        }
    }

    #[test]
    fn bench_defaults_match_the_documented_run() {
        let cli = Cli::parse_from(["fred", "synth-bench"]);
        match cli.command {
            Command::SynthBench(args) => {
                assert_eq!(args.mix_steps, [0.0, 25.0, 50.0, 75.0, 95.0, 99.0, 100.0]);
                assert_eq!(args.trials, 5);
                assert_eq!(args.epsilon, 0.6);
                assert_eq!(args.delta, 2.0e-6);
                assert_eq!(args.clip, 6.0);
                assert_eq!(args.samples, 5000);
                assert_eq!(args.dim, 32);
                assert_eq!(args.clients, 10);
            }
            _ => panic!("expected synth-bench"),
        }
    }
}
