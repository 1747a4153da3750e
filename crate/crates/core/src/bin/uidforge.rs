use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use uidforge::cli;
use uidforge::config::{self, CommandKind, RunConfig, Settings};

/// Population projection and identity-card demand forecasting.
#[derive(Parser)]
#[command(name = "uidforge", version)]
struct Cli {
    /// Optional key=value settings file; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cohort-component projection of the population.
    Project(Common),
    /// Annual new-card and returned-card series.
    Demand(Common),
    /// Omission, unknown-age and houseless corrections.
    Coverage(Common),
    /// Posterior sampling for the demand rate.
    Estimate(Common),
}

// Every command takes the same flag set so values can equally come from the
// settings file; `RunConfig::resolve` checks which ones each command needs.
#[derive(Args)]
struct Common {
    #[arg(long)]
    population: Option<String>,
    #[arg(long)]
    survival: Option<String>,
    #[arg(long)]
    fertility: Option<String>,
    #[arg(long)]
    flows: Option<String>,
    /// at-birth, at-age-one or full
    #[arg(long)]
    policy: Option<String>,
    #[arg(long)]
    horizon: Option<String>,
    /// Census year of the population file.
    #[arg(long)]
    year: Option<String>,
    #[arg(long = "max-age")]
    max_age: Option<String>,
    /// Omission per 1000 of the true population.
    #[arg(long)]
    omission: Option<String>,
    #[arg(long = "unknown-age")]
    unknown_age: Option<String>,
    #[arg(long = "houseless-rural")]
    houseless_rural: Option<String>,
    #[arg(long = "houseless-urban")]
    houseless_urban: Option<String>,
    #[arg(long = "houseless-profile")]
    houseless_profile: Option<String>,
    #[arg(long)]
    observations: Option<String>,
    #[arg(long = "prior-shape")]
    prior_shape: Option<String>,
    #[arg(long = "prior-rate")]
    prior_rate: Option<String>,
    #[arg(long)]
    samples: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long = "proposal-scale")]
    proposal_scale: Option<String>,
    #[arg(long)]
    out: Option<String>,
}

impl Common {
    fn settings(self) -> Settings {
        [
            ("population", self.population),
            ("survival", self.survival),
            ("fertility", self.fertility),
            ("flows", self.flows),
            ("policy", self.policy),
            ("horizon", self.horizon),
            ("year", self.year),
            ("max-age", self.max_age),
            ("omission", self.omission),
            ("unknown-age", self.unknown_age),
            ("houseless-rural", self.houseless_rural),
            ("houseless-urban", self.houseless_urban),
            ("houseless-profile", self.houseless_profile),
            ("observations", self.observations),
            ("prior-shape", self.prior_shape),
            ("prior-rate", self.prior_rate),
            ("samples", self.samples),
            ("seed", self.seed),
            ("proposal-scale", self.proposal_scale),
            ("out", self.out),
        ]
        .into_iter()
        .filter_map(|(k, v)| v.map(|v| (k.to_string(), v)))
        .collect()
    }
}

fn main() -> ExitCode {
    let args = Cli::parse();
    let (kind, common) = match args.command {
        Command::Project(c) => (CommandKind::Project, c),
        Command::Demand(c) => (CommandKind::Demand, c),
        Command::Coverage(c) => (CommandKind::Coverage, c),
        Command::Estimate(c) => (CommandKind::Estimate, c),
    };
    let result = (|| {
        let file = match &args.config {
            Some(p) => config::load_settings(p)?,
            None => Settings::new(),
        };
        let env_seed = std::env::var(config::SEED_ENV).ok();
        let cfg = RunConfig::resolve(kind, &common.settings(), &file, env_seed.as_deref())?;
        cli::run(&cfg)
    })();
    match result {
        Ok(written) => {
            for p in written {
                eprintln!("wrote {}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("uidforge: {e}");
            ExitCode::FAILURE
        }
    }
}
