use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand, ValueEnum};

use repgame::dpp::EngineKind;
use repgame::harness::{self, Context, DppOptions, HarnessError, OUT_DIR_ENV};
use repgame::static_eq::EquilibriumKind;

#[derive(Parser)]
#[command(name = "repgame", version, about = "Equilibria and online management of repeated stochastic games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Game file (TOML).
    game: PathBuf,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "out")]
    out: PathBuf,
    /// Fairness function, e.g. "10*log(1+u1)+log(1+u2)", "min(u1,u2,4)", "u1+u2".
    #[arg(long)]
    fairness: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Ne,
    Ce,
    Cce,
}

impl From<Kind> for EquilibriumKind {
    fn from(k: Kind) -> Self {
        match k {
            Kind::Ne => Self::Ne,
            Kind::Ce => Self::Ce,
            Kind::Cce => Self::Cce,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Engine {
    General,
    Special,
}

#[derive(Args)]
struct Online {
    #[arg(long = "T", default_value_t = 10_000)]
    horizon: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Independent runs with seeds seed, seed+1, …
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, value_enum, default_value = "general")]
    engine: Engine,
}

#[derive(Subcommand)]
enum Command {
    /// Parse and validate a game file.
    Validate {
        #[command(flatten)]
        common: Common,
    },
    /// Fairness-optimal CE or CCE of a static game.
    SolveStatic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cce")]
        kind: Kind,
    },
    /// Fairness-optimal stochastic CE or CCE policy.
    SolveStochastic {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cce")]
        kind: Kind,
    },
    /// Check a policy CSV against the equilibrium constraints.
    Certify {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cce")]
        kind: Kind,
        #[arg(long)]
        policy: PathBuf,
    },
    /// Support points of the two-player equilibrium utility region.
    Silhouette {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value = "cce")]
        kind: Kind,
        #[arg(long, default_value_t = 64)]
        directions: usize,
    },
    /// Run the online drift-plus-penalty manager.
    RunDpp {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        online: Online,
        #[arg(long = "V", default_value_t = 100.0)]
        v: f64,
    },
    /// Run the manager across a grid of V values.
    SweepV {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        online: Online,
        #[arg(long = "V", value_delimiter = ',', default_values_t = [50.0, 100.0, 200.0])]
        v: Vec<f64>,
    },
    /// Run the manager and certify the empirical policy it induces.
    ExtractPolicy {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        online: Online,
        #[arg(long = "V", default_value_t = 100.0)]
        v: f64,
        #[arg(long, value_enum, default_value = "cce")]
        kind: Kind,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Self::Validate { .. } => "validate",
            Self::SolveStatic { .. } => "solve-static",
            Self::SolveStochastic { .. } => "solve-stochastic",
            Self::Certify { .. } => "certify",
            Self::Silhouette { .. } => "silhouette",
            Self::RunDpp { .. } => "run-dpp",
            Self::SweepV { .. } => "sweep-v",
            Self::ExtractPolicy { .. } => "extract-policy",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Self::Validate { common }
            | Self::SolveStatic { common, .. }
            | Self::SolveStochastic { common, .. }
            | Self::Certify { common, .. }
            | Self::Silhouette { common, .. }
            | Self::RunDpp { common, .. }
            | Self::SweepV { common, .. }
            | Self::ExtractPolicy { common, .. } => common,
        }
    }
}

fn dpp_options(online: &Online, v: f64, fairness: &Option<String>) -> DppOptions {
    DppOptions {
        v,
        horizon: online.horizon,
        seed: online.seed,
        seeds: online.seeds,
        engine: match online.engine {
            Engine::General => EngineKind::General,
            Engine::Special => EngineKind::Special,
        },
        fairness: fairness.clone(),
    }
}

fn run(cli: Cli, echo: String) -> anyhow::Result<()> {
    let common = cli.command.common();
    let (game, file_fairness) = harness::parse_game_file(&common.game)?;
    let ctx = Context {
        command: echo,
        game,
        file_fairness,
        out: common.out.clone(),
    };
    let phi = common.fairness.as_deref();
    let report = match &cli.command {
        Command::Validate { .. } => harness::validate(&ctx)?,
        Command::SolveStatic { kind, .. } => harness::solve_static(&ctx, (*kind).into(), phi)?,
        Command::SolveStochastic { kind, .. } => harness::solve_stochastic(&ctx, (*kind).into(), phi)?,
        Command::Certify { kind, policy, .. } => harness::certify_policy(&ctx, (*kind).into(), policy)?,
        Command::Silhouette { kind, directions, .. } => harness::silhouette(&ctx, (*kind).into(), *directions)?,
        Command::RunDpp { online, v, .. } => harness::run_dpp(&ctx, &dpp_options(online, *v, &common.fairness))?,
        Command::SweepV { online, v, .. } => harness::sweep_v(&ctx, v, &dpp_options(online, 0.0, &common.fairness))?,
        Command::ExtractPolicy { online, v, kind, .. } => {
            harness::extract_policy(&ctx, &dpp_options(online, *v, &common.fairness), (*kind).into())?
        }
    };
    let path = ctx.out.join(format!("{}.json", cli.command.name()));
    report.write(&path).with_context(|| format!("writing {}", path.display()))?;
    print!("{}", report.to_json());
    Ok(())
}

fn main() -> ExitCode {
    let echo = std::env::args().skip(1).collect::<Vec<_>>().join(" ");
    let cli = Cli::parse();
    match run(cli, format!("repgame {echo}")) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            let harness = err.chain().find_map(|e| e.downcast_ref::<HarnessError>());
            let (code, category) = harness.map_or((1, "io"), |h| (h.exit_code(), h.category_name()));
            eprintln!("error[{category}]: {err:#}");
            ExitCode::from(code as u8)
        }
    }
}
