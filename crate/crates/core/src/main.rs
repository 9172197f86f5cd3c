use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use exec_tickets::harness::config::QuantityName;
use exec_tickets::harness::{
    config_echo_path, emit_report, exit_code, load_config, run_experiment, Experiment, ExperimentConfig, Overrides, ReportFormat, EXIT_CONFIG,
};

#[derive(Parser)]
#[command(name = "etsim", version, about = "Execution-ticket valuation and simulation harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment file; built-in defaults when omitted
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    trials: Option<u64>,
    /// Worker threads (0 = all cores); results do not depend on it
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Report path; standard output when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Fill the runtime_ms column
    #[arg(long, global = true)]
    timing: bool,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Closed-form valuations only
    Analytic,
    /// Closed forms against series oracles and Monte Carlo
    Verify,
    /// One Monte Carlo experiment
    Simulate {
        #[arg(long, value_enum)]
        quantity: Option<Quantity>,
    },
    /// One-parameter sweep
    Sweep,
    /// Protocol capture under a pricing policy
    Pricing,
    /// Payoff variance of pooled tickets
    Pool,
    /// Holder value with consecutive-slot bonuses
    Multiblock,
}

#[derive(ValueEnum, Clone, Copy)]
enum Format {
    Csv,
    #[value(alias = "jsonl")]
    JsonLines,
}

#[derive(ValueEnum, Clone, Copy)]
enum Quantity {
    TicketValue,
    TicketValueVariance,
    TimeToWin,
    HolderValue,
    RewardStreamNpv,
}

impl Command {
    fn experiment(self) -> Experiment {
        match self {
            Command::Analytic => Experiment::Analytic,
            Command::Verify => Experiment::Verify,
            Command::Simulate { .. } => Experiment::Simulate,
            Command::Sweep => Experiment::Sweep,
            Command::Pricing => Experiment::Pricing,
            Command::Pool => Experiment::Pool,
            Command::Multiblock => Experiment::Multiblock,
        }
    }
}

fn overrides(cli: &Cli) -> Overrides {
    let quantity = match cli.command {
        Command::Simulate { quantity } => quantity.map(|q| match q {
            Quantity::TicketValue => QuantityName::TicketValue,
            Quantity::TicketValueVariance => QuantityName::TicketValueVariance,
            Quantity::TimeToWin => QuantityName::TimeToWin,
            Quantity::HolderValue => QuantityName::HolderValue,
            Quantity::RewardStreamNpv => QuantityName::RewardStreamNpv,
        }),
        _ => None,
    };
    Overrides {
        seed: cli.seed,
        trials: cli.trials,
        workers: cli.workers,
        out: cli.out.clone(),
        format: cli.format.map(|f| match f {
            Format::Csv => ReportFormat::Csv,
            Format::JsonLines => ReportFormat::JsonLines,
        }),
        timing: cli.timing,
        quantity,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let experiment = cli.command.experiment();
    let overrides = overrides(&cli);
    let loaded = match &cli.config {
        Some(path) => load_config(path, experiment, &overrides),
        None => {
            let mut cfg = ExperimentConfig::default();
            cfg.apply(&overrides);
            cfg.validate(experiment).map(|()| cfg)
        }
    };
    let cfg = match loaded {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("etsim: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };

    let echo = cfg.resolved_toml();
    let out = cfg.output.path.clone();
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(config_echo_path(path), &echo) {
                eprintln!("etsim: {e}");
                return ExitCode::from(EXIT_CONFIG as u8);
            }
        }
        None => eprint!("{echo}"),
    }

    let rows = match run_experiment(experiment, &cfg) {
        Ok(rows) => rows,
        Err(e) => {
            eprintln!("etsim: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    };
    if let Err(e) = emit_report(&rows, cfg.output.format, out.as_deref()) {
        eprintln!("etsim: {e}");
        return ExitCode::from(EXIT_CONFIG as u8);
    }
    for r in rows.iter().filter(|r| !r.pass) {
        eprintln!("etsim: FAILED {}", r.label);
    }
    ExitCode::from(exit_code(&rows) as u8)
}
