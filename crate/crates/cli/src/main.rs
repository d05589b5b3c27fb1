//! `wavestat`: run one experiment from a config, or the whole acceptance suite.
//!
//! Exit status is 0 only when every verdict passes; 1 when a verdict fails; 2 on a
//! config, I/O or numerical error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use wavestat::config::{validate_config, ExperimentConfig, ExperimentKind};
use wavestat::experiment::{run_experiment, RunOptions};
use wavestat::verify::{self, Verdict};

#[derive(Parser)]
#[command(name = "wavestat", version, about = "Wave turbulence statistics experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Seed override; otherwise the config's `seed` (default 1).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for ensemble and grid loops. Results do not depend on this.
    #[arg(long)]
    workers: Option<usize>,
    /// Leave wall time out of the summary so every output file is byte-reproducible.
    #[arg(long)]
    reproducible: bool,
    /// Output directory, overriding `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RunArgs {
    /// TOML config. Without one the documented defaults for this experiment are used.
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo check of the three-wave kinetic rates.
    #[command(name = "mc-kinetic-3w")]
    McKinetic3w(RunArgs),
    /// Monte-Carlo check of the four-wave kinetic rates.
    #[command(name = "mc-kinetic-4w")]
    McKinetic4w(RunArgs),
    /// Residual of the second-order expansion against direct integration.
    PerturbationScaling(RunArgs),
    /// Finite-flux steady one-mode PDF with tails.
    OnemodePdf(RunArgs),
    /// Multi-mode PDF on one resonant triad.
    PbpTriad(RunArgs),
    /// Forced-dissipative kinetic run to a flux-carrying steady spectrum.
    KzFluxScan(RunArgs),
    /// Run the acceptance criteria.
    Verify {
        /// Criterion ids to run, e.g. `--only 1,4,11`. Default: all.
        #[arg(long, value_delimiter = ',')]
        only: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Parse and range-check a config, then print it with defaults filled in.
    Validate { config: PathBuf },
}

fn init_pool(workers: Option<usize>) -> anyhow::Result<()> {
    if let Some(n) = workers {
        if n == 0 {
            bail!("--workers must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("building the worker pool")?;
    }
    Ok(())
}

fn load(kind: ExperimentKind, path: Option<&PathBuf>) -> anyhow::Result<ExperimentConfig> {
    let Some(path) = path else {
        return Ok(ExperimentConfig::defaults(kind));
    };
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let cfg = validate_config(&text).with_context(|| format!("in {}", path.display()))?;
    if cfg.kind != kind {
        bail!(
            "{} describes a {} experiment, not {}",
            path.display(),
            cfg.kind.name(),
            kind.name()
        );
    }
    Ok(cfg)
}

fn print_verdicts(verdicts: &[Verdict]) {
    for v in verdicts {
        println!("{}", v.line());
    }
}

fn run(kind: ExperimentKind, args: RunArgs) -> anyhow::Result<bool> {
    init_pool(args.common.workers)?;
    let mut cfg = load(kind, args.config.as_ref())?;
    if let Some(seed) = args.common.seed {
        cfg.seed = seed;
    }
    let opts = RunOptions {
        reproducible: args.common.reproducible,
        out_dir: args.common.out,
    };
    log::info!("running {} with seed {}", kind.name(), cfg.seed);
    let report = run_experiment(&cfg, &opts)?;
    print_verdicts(&report.summary.verdicts);
    println!("results in {}", report.out_dir.display());
    Ok(report.passed())
}

fn verify_all(only: Vec<String>, common: Common) -> anyhow::Result<bool> {
    init_pool(common.workers)?;
    let seed = common.seed.unwrap_or(verify::DEFAULT_SEED);
    let verdicts = if only.is_empty() {
        verify::run_acceptance(seed)
    } else {
        if let Some(bad) = only.iter().find(|id| !verify::CRITERIA.contains(&id.as_str())) {
            bail!("unknown criterion {bad:?}; ids are 1 to 11");
        }
        let ids: Vec<&str> = only.iter().map(String::as_str).collect();
        verify::run_criteria(&ids, seed)
    };
    print_verdicts(&verdicts);
    if let Some(dir) = common.out {
        let mut manifest = Default::default();
        wavestat::output::write_json(&dir, "verdicts.json", &verdicts, &mut manifest)?;
    }
    let passed = verdicts.iter().filter(|v| v.passed).count();
    println!("{passed}/{} criteria passed", verdicts.len());
    Ok(passed == verdicts.len())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::McKinetic3w(a) => run(ExperimentKind::McKinetic3w, a),
        Command::McKinetic4w(a) => run(ExperimentKind::McKinetic4w, a),
        Command::PerturbationScaling(a) => run(ExperimentKind::PerturbationScaling, a),
        Command::OnemodePdf(a) => run(ExperimentKind::OnemodePdf, a),
        Command::PbpTriad(a) => run(ExperimentKind::PbpTriad, a),
        Command::KzFluxScan(a) => run(ExperimentKind::KzFluxScan, a),
        Command::Verify { only, common } => verify_all(only, common),
        Command::Validate { config } => std::fs::read_to_string(&config)
            .with_context(|| format!("reading {}", config.display()))
            .and_then(|text| Ok(validate_config(&text)?))
            .and_then(|cfg| {
                println!("{}", toml::to_string_pretty(&cfg)?);
                Ok(true)
            }),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
