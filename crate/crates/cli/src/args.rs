use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use congestion_core::chain::ChainFormat;
use congestion_core::protocols::ProtocolSpec;
use congestion_core::AttackDirection;

use crate::values::ValueList;

pub const DEFAULT_P_UNCONGESTION: f64 = 0.85;
pub const DEFAULT_P_CONGESTION: f64 = 0.15;

#[derive(Debug, Parser)]
#[command(name = "congestion", version, about = "Congestion-aware deadline extension: bounds, simulation and deadline resolution")]
pub struct Cli {
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for simulation (default: all cores). Output does not
    /// depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sliding-window attack bounds as a function of the period length.
    Bounds(BoundsArgs),
    /// Exact consecutive-run attack probabilities.
    Markov(MarkovArgs),
    /// Monte Carlo attack success rates.
    Simulate(SimulateArgs),
    /// Recompute the published sliding-window table.
    ReproduceTable,
    /// Resolve a challenge deadline against a recorded chain.
    Deadline(DeadlineArgs),
    /// Find the sliding-window K that best defends both attacks.
    SearchK(SearchKArgs),
    /// Per-block congestion report for a recorded chain.
    Signal(SignalArgs),
}

/// Direction selection; `both` emits rows for each attack.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DirectionArg {
    Congestion,
    Uncongestion,
    Both,
}

impl DirectionArg {
    pub fn directions(self) -> Vec<AttackDirection> {
        match self {
            DirectionArg::Congestion => vec![AttackDirection::Congestion],
            DirectionArg::Uncongestion => vec![AttackDirection::Uncongestion],
            DirectionArg::Both => vec![AttackDirection::Uncongestion, AttackDirection::Congestion],
        }
    }
}

/// Honest congestion probability per direction.
#[derive(Debug, Clone, Args)]
pub struct CongestionProb {
    /// Probability an honest block is congested, for every direction.
    #[arg(long)]
    pub p: Option<f64>,
    /// `p` used for the uncongestion attack when `--p` is absent.
    #[arg(long, default_value_t = DEFAULT_P_UNCONGESTION)]
    pub p_uncongestion: f64,
    /// `p` used for the congestion attack when `--p` is absent.
    #[arg(long, default_value_t = DEFAULT_P_CONGESTION)]
    pub p_congestion: f64,
}

impl CongestionProb {
    pub fn for_direction(&self, direction: AttackDirection) -> f64 {
        self.p.unwrap_or(match direction {
            AttackDirection::Uncongestion => self.p_uncongestion,
            AttackDirection::Congestion => self.p_congestion,
        })
    }
}

#[derive(Debug, Clone, Args)]
pub struct BoundsArgs {
    /// Window length.
    #[arg(long = "N")]
    pub big_n: usize,
    /// Uncongested blocks required in some window.
    #[arg(long = "K")]
    pub k: usize,
    /// Period length(s), e.g. `90300` or `806-90300:806`.
    #[arg(long)]
    pub n: ValueList,
    /// Adversary's share of block production.
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub prob: CongestionProb,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
}

#[derive(Debug, Clone, Args)]
pub struct MarkovArgs {
    /// Run length(s), e.g. `1-200`.
    #[arg(long = "L")]
    pub l: ValueList,
    /// Period length.
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[command(flatten)]
    pub prob: CongestionProb,
    #[arg(long, value_enum, default_value_t = DirectionArg::Both)]
    pub direction: DirectionArg,
}

/// Scenario axes a simulation can sweep besides the period length.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepArg {
    /// Period length, same as a list passed to `--n`.
    N,
    /// Sliding-window length.
    Window,
    /// Sliding-window K.
    K,
    /// Consecutive-run L.
    L,
    /// Adversary share, same as a list passed to `--alpha`.
    Alpha,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// Protocol, e.g. `sw:N=144,K=89` or `lconsec:L=50`.
    #[arg(long)]
    pub spec: ProtocolSpec,
    #[arg(long, value_enum)]
    pub direction: AttackDirectionArg,
    /// Period length(s).
    #[arg(long)]
    pub n: ValueList,
    /// Adversary share(s).
    #[arg(long)]
    pub alpha: ValueList,
    /// Probability an honest block is congested (default 0.85 for the
    /// uncongestion attack, 0.15 for the congestion attack).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Sweep this axis over `--values`.
    #[arg(long, value_enum, requires = "values")]
    pub sweep: Option<SweepArg>,
    #[arg(long, requires = "sweep")]
    pub values: Option<ValueList>,
}

/// A single attack direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AttackDirectionArg {
    Congestion,
    Uncongestion,
}

impl From<AttackDirectionArg> for AttackDirection {
    fn from(d: AttackDirectionArg) -> Self {
        match d {
            AttackDirectionArg::Congestion => AttackDirection::Congestion,
            AttackDirectionArg::Uncongestion => AttackDirection::Uncongestion,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    TxList,
    BaseFee,
}

impl From<FormatArg> for ChainFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::TxList => ChainFormat::TxList,
            FormatArg::BaseFee => ChainFormat::BaseFee,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct ChainInput {
    /// JSON-Lines chain file.
    #[arg(long)]
    pub chain: PathBuf,
    /// Record format (default: detected from the first record).
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
}

#[derive(Debug, Clone, Args)]
pub struct DeadlineArgs {
    #[command(flatten)]
    pub input: ChainInput,
    /// Challenge JSON: `t_c`, `t_rd`, `m_hat`, `spec` and `signal`.
    #[arg(long)]
    pub challenge: PathBuf,
    /// Judge a response mined at this height instead of printing only the
    /// deadline.
    #[arg(long)]
    pub response: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SearchKArgs {
    #[arg(long = "N")]
    pub big_n: usize,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, default_value_t = DEFAULT_P_UNCONGESTION)]
    pub p_uncongestion: f64,
    #[arg(long, default_value_t = DEFAULT_P_CONGESTION)]
    pub p_congestion: f64,
    /// Extension cap; the uncongestion bound is taken over this many blocks.
    #[arg(long, default_value_t = 90_300)]
    pub m_hat: usize,
    #[arg(long, default_value_t = 0.01)]
    pub target: f64,
    /// Emit every K instead of only the best one.
    #[arg(long)]
    pub all: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SignalArgs {
    #[command(flatten)]
    pub input: ChainInput,
    /// Signal JSON, e.g. `{"kind":"weighted","theta":5,"gamma":0.5}`.
    #[arg(long, conflicts_with_all = ["theta", "gamma", "max_base_fee"])]
    pub signal: Option<String>,
    /// Fee-density threshold of the weighted signal.
    #[arg(long, requires = "gamma")]
    pub theta: Option<f64>,
    /// Capacity fraction of the weighted signal.
    #[arg(long, requires = "theta")]
    pub gamma: Option<f64>,
    /// Base fee above which a block counts as congested.
    #[arg(long, conflicts_with_all = ["theta", "gamma"])]
    pub max_base_fee: Option<f64>,
}
