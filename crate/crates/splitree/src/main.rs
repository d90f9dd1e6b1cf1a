use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context as _;
use clap::{Args, Parser, Subcommand};
use splitree::commands::{cmd_estimate, cmd_params, cmd_scale, cmd_simulate, cmd_validate};
use splitree::output::reports_json;
use splitree::{RunConfig, Suite};

/// Splitting trees with Poissonian immigration.
#[derive(Parser)]
#[command(name = "splitree", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Args)]
struct Opts {
    /// JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Draw a fresh seed (printed to stderr).
    #[arg(long, global = true, conflicts_with = "seed")]
    reseed: bool,
    #[arg(long, global = true)]
    replicates: Option<u64>,
    /// Observation time, or the horizon for `scale`.
    #[arg(long, global = true)]
    t: Option<f64>,
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output file; stdout by default.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Malthusian parameter, c, mean offspring and extinction probability (JSON).
    Params,
    /// Scale function table (CSV).
    Scale,
    /// One CSV row per family per replicate.
    Simulate,
    /// Run a validation suite; exits 1 if any check fails.
    Validate {
        #[arg(long, default_value = "all")]
        suite: String,
    },
    /// Estimate theta / b from Model I family sizes (JSON).
    Estimate {
        /// CSV written by `simulate`; simulates the configuration if absent.
        #[arg(long)]
        input: Option<PathBuf>,
    },
}

fn load(opts: &Opts) -> anyhow::Result<RunConfig> {
    let mut cfg = match &opts.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = opts.seed {
        cfg.run.seed = s;
    }
    if opts.reseed {
        cfg.run.seed = rand::random();
        eprintln!("seed: {}", cfg.run.seed);
    }
    if let Some(n) = opts.replicates {
        cfg.run.replicates = n;
    }
    if let Some(t) = opts.t {
        cfg.run.t = t;
    }
    if let Some(w) = opts.workers {
        cfg.run.workers = Some(w);
    }
    if let Some(o) = &opts.out {
        cfg.run.out = Some(o.clone());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn sink(cfg: &RunConfig) -> anyhow::Result<Box<dyn Write>> {
    Ok(match &cfg.run.out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    // Parse the suite before loading anything so a typo fails fast.
    let suite = match &cli.command {
        Command::Validate { suite } => Some(suite.parse::<Suite>()?),
        _ => None,
    };
    let cfg = load(&cli.opts)?;
    let mut out = sink(&cfg)?;
    let mut code = ExitCode::SUCCESS;
    match cli.command {
        Command::Params => writeln!(out, "{}", serde_json::to_string_pretty(&cmd_params(&cfg)?)?)?,
        Command::Scale => cmd_scale(&cfg, &mut out)?,
        Command::Simulate => cmd_simulate(&cfg, &mut out)?,
        Command::Validate { .. } => {
            let reports = cmd_validate(&cfg, suite.expect("parsed above"))?;
            writeln!(out, "{}", reports_json(&reports)?)?;
            for r in reports.iter().filter(|r| !r.passed) {
                eprintln!(
                    "FAILED {} (statistic {}, p {})",
                    r.name, r.statistic, r.p_value
                );
            }
            if reports.iter().any(|r| !r.passed) {
                code = ExitCode::from(1);
            }
        }
        Command::Estimate { input } => {
            let est = match input {
                Some(p) => cmd_estimate(
                    &cfg,
                    Some(File::open(&p).with_context(|| format!("opening {}", p.display()))?),
                )?,
                None => cmd_estimate::<File>(&cfg, None)?,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&est)?)?;
        }
    }
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
