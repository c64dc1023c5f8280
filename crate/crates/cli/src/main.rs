use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use locert::{ErrorKind, Tolerances};

mod commands;

/// Local certificates, Petz reconstruction and shield planning for
/// multipartite quantum states.
#[derive(Debug, Parser)]
#[command(name = "locert", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Seed for sampling commands; overrides any seed stored in input files.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Hermiticity and trace tolerance for input validation; the PSD tolerance is ten times this.
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Unit for the human-readable summary on stderr. JSON output is always in nats.
    #[arg(long, global = true, value_enum, default_value_t = Unit::Nats)]
    unit: Unit,

    /// Project invalid input states onto density matrices instead of rejecting them.
    #[arg(long, global = true)]
    repair: bool,

    /// Write the JSON result here instead of stdout.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Unit {
    Nats,
    Bits,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Entropies of regions and derived quantities of a state.
    ///
    /// Regions are comma-separated site indices, e.g. `0,2`; an empty string is the empty region.
    Entropy {
        state: PathBuf,
        /// Region whose entropy to report; repeatable. Defaults to all sites.
        #[arg(long = "region", short)]
        regions: Vec<String>,
        /// S(A|B); repeatable.
        #[arg(long, num_args = 2, value_names = ["A", "B"], action = clap::ArgAction::Append)]
        conditional: Vec<String>,
        /// I(A:B); repeatable.
        #[arg(long = "mi", num_args = 2, value_names = ["A", "B"], action = clap::ArgAction::Append)]
        mutual_information: Vec<String>,
        /// I(A:C|B), conditioned on the middle argument; repeatable.
        #[arg(long, num_args = 3, value_names = ["A", "B", "C"], action = clap::ArgAction::Append)]
        cmi: Vec<String>,
        /// S(A|B) + S(A|C); repeatable.
        #[arg(long = "wm", num_args = 3, value_names = ["A", "B", "C"], action = clap::ArgAction::Append)]
        weak_monotonicity: Vec<String>,
    },
    /// Trace-distance certificate from a marginal bundle and a shield plan.
    Certify {
        bundle: PathBuf,
        plan: PathBuf,
        /// Per-site marginal errors: a JSON array indexed by site or an object keyed by site.
        epsilons: Option<PathBuf>,
    },
    /// Rebuild a global state from marginals along a shield plan.
    Reconstruct {
        bundle: PathBuf,
        plan: PathBuf,
        /// Reference state to report per-step distances against.
        #[arg(long)]
        reference: Option<PathBuf>,
        /// Also write the reconstructed state here.
        #[arg(long)]
        state_output: Option<PathBuf>,
    },
    /// Generate a shield plan for a grid and predict its bound under the entropy model.
    Plan {
        grid_model: PathBuf,
        /// Shield radius; overrides the model file. Defaults to 1.
        #[arg(long)]
        radius: Option<usize>,
        /// Also write the bare plan here, ready for `certify` or `reconstruct`.
        #[arg(long)]
        plan_output: Option<PathBuf>,
    },
    /// Simulate Pauli tomography of a state and write the measured marginals.
    ///
    /// Regions come from a measurement-plan file, or from the windows of `--plan` with `--shots`.
    Simulate {
        state: PathBuf,
        measurement_plan: Option<PathBuf>,
        #[arg(long, conflicts_with = "measurement_plan", requires = "shots")]
        plan: Option<PathBuf>,
        #[arg(long, requires = "plan")]
        shots: Option<u64>,
    },
    /// Compare measured marginals against a target and certify closeness.
    Verify {
        measured: PathBuf,
        /// Target marginal bundle, or a full target state.
        target: PathBuf,
        plan: PathBuf,
    },
    /// Search for a global state matching every marginal in a bundle.
    Consistent {
        bundle: PathBuf,
        #[arg(long, default_value_t = 500)]
        max_iters: usize,
        /// Largest accepted trace distance between a marginal and the search state's.
        #[arg(long, default_value_t = 1e-8)]
        target: f64,
        #[arg(long, value_enum, default_value_t = Correction::Scaling)]
        correction: Correction,
        /// Also write the best state found here.
        #[arg(long)]
        state_output: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Correction {
    Scaling,
    Affine,
}

/// Everything a command needs besides its own arguments.
#[derive(Debug)]
pub struct RunConfig {
    pub command: Command,
    pub output: Option<PathBuf>,
    pub tolerances: Tolerances,
    pub repair: bool,
    pub seed: Option<u64>,
    pub unit: Unit,
}

impl RunConfig {
    fn from_cli(cli: Cli) -> Result<Self, String> {
        let tolerances = match cli.global.tol {
            None => Tolerances::default(),
            Some(t) if t.is_finite() && t > 0.0 => Tolerances { herm: t, trace: t, psd: 10.0 * t },
            Some(t) => return Err(format!("--tol must be positive and finite, got {t}")),
        };
        Ok(RunConfig {
            command: cli.command,
            output: cli.global.output,
            tolerances,
            repair: cli.global.repair,
            seed: cli.global.seed,
            unit: cli.global.unit,
        })
    }
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Input | ErrorKind::Io => 2,
        ErrorKind::Consistency => 3,
        ErrorKind::Numerical => 4,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let config = match RunConfig::from_cli(Cli::parse()) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    match commands::run(&config) {
        Ok(commands::Outcome::Done) => ExitCode::SUCCESS,
        Ok(commands::Outcome::NotConverged) => ExitCode::from(4),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
