use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "contest-entry", version, about = "Equilibria and reward design for rank-order contests with entry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

/// Instance definition and shared options. Flags override `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct Common {
    /// JSON instance file (see docs/instance-format.md).
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Number of agents.
    #[arg(long)]
    pub n: Option<usize>,
    /// Reward schedule a_1,...,a_n.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub rewards: Option<Vec<f64>>,
    /// Winner-take-all prize.
    #[arg(long)]
    pub wta: Option<f64>,
    /// Attention caps A_1,...,A_n.
    #[arg(long, value_delimiter = ',')]
    pub caps: Option<Vec<f64>>,
    /// Entry tax on ranks 2..n; needs --wta.
    #[arg(long)]
    pub tax: Option<f64>,
    /// Cost model, e.g. `linear:c0=0.25,slope=1`, `exp:k=1`, `quad:c0=0.3,a=1,b=2`.
    #[arg(long)]
    pub cost: Option<String>,
    #[arg(long)]
    pub arg_tol: Option<f64>,
    #[arg(long)]
    pub residual_tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Nodes of the cached CDF table (0 disables it).
    #[arg(long)]
    pub grid_nodes: Option<usize>,
    #[arg(long)]
    pub quad_tol: Option<f64>,
    #[arg(long)]
    pub quad_panels: Option<usize>,
    #[arg(long)]
    pub quad_order: Option<usize>,
    /// Finite-difference step relative to a_1.
    #[arg(long)]
    pub rel_step: Option<f64>,
    /// Budget-matching tolerance.
    #[arg(long)]
    pub budget_tol: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write the command's table as CSV.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Worker threads; defaults to $CONTEST_ENTRY_THREADS, then all cores.
    #[arg(long)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PerturbKind {
    /// Move a_s and re-solve a_1 to hold the expected payout.
    BudgetMatched,
    /// Move a_s alone and report d[p(1-G)]/da_s.
    Sensitivity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Identities,
    Golden,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for (p, G) and tabulate G on the support.
    Solve {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 11)]
        points: usize,
    },
    /// Expected payout, expected best and average quality, rank probabilities.
    Metrics {
        #[command(flatten)]
        common: Common,
    },
    /// Play the contest repeatedly and compare with the analytic values.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
    },
    /// Simulated payoff of a unilateral deviation to each grid quality.
    Deviate {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 100_000)]
        trials: usize,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Grid extends this far past the top of the support.
        #[arg(long, default_value_t = 0.2)]
        margin: f64,
    },
    /// Attention-capped schedule and its lattice certificate; needs --caps.
    DesignAttention {
        #[command(flatten)]
        common: Common,
    },
    /// Finite-difference response to moving one lower prize.
    Perturb {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        rank: usize,
        #[arg(long, value_enum, default_value_t = PerturbKind::BudgetMatched)]
        kind: PerturbKind,
    },
    /// Metrics of taxed winner-take-all at a fixed budget; needs --wta.
    TaxSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        taxes: Vec<f64>,
    },
    /// Sign of the budget-matched average-quality derivative at
    /// winner-take-all across budgets; exponential cost only.
    AvgSignSweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_delimiter = ',', required = true)]
        budgets: Vec<f64>,
        #[arg(long, default_value_t = 2)]
        rank: usize,
    },
    /// Compare winner-take-all with random budget-matched schedules.
    WtaTrial {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        budget: f64,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
    /// Run the built-in identity and regression suites.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long)]
        threads: Option<usize>,
    },
}
