mod config;

use std::fs::{self, File};
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use sconsim::large_scale::LosState;
use sconsim::pdp::read_pdp_csv;
use sconsim::sim::{
    analyze_pdp, run_drive, run_monte_carlo, validate_config, write_drive_artifacts, write_drive_log,
    write_monte_carlo_artifacts, AnalysisConfig, AnalysisReport, LocationAnalysis, RunConfig, ValidatedConfig,
    OUTPUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "sconsim",
    version,
    about = "Spatially consistent mmWave drive-route channel simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// TOML config file; omitted keys take their defaults.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config value, e.g. `--set scenario.lambda_c=0.5`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct OutputArgs {
    /// Output directory (falls back to `output_dir` in the config, then $SCONSIM_OUTPUT_DIR).
    #[arg(short, long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate one drive.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Run a Monte Carlo batch of independent drives.
    Mc {
        #[command(flatten)]
        config: ConfigArgs,
        #[command(flatten)]
        output: OutputArgs,
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Cluster counts and delay spreads of PDP CSV files, one file per location.
    Analyze {
        #[arg(required = true)]
        files: Vec<PathBuf>,
        #[arg(long, default_value_t = 20.0)]
        threshold_db: f64,
        #[arg(long, default_value_t = 25.0)]
        min_void_ns: f64,
        /// Spacing between consecutive locations, meters; enables route correlation distances.
        #[arg(long)]
        spacing: Option<f64>,
        /// Write the report here instead of stdout.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Check a config and list every problem.
    Validate {
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Print the fully resolved config as TOML.
    Config {
        #[command(flatten)]
        config: ConfigArgs,
    },
}

enum Failure {
    Config(anyhow::Error),
    Runtime(anyhow::Error),
}

impl Failure {
    fn runtime(e: impl Into<anyhow::Error>) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn resolve(args: &ConfigArgs) -> Result<RunConfig, Failure> {
    let mut cfg = config::load(args.config.as_deref(), &args.overrides).map_err(Failure::Config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn validated(cfg: RunConfig) -> Result<ValidatedConfig, Failure> {
    validate_config(&cfg).map_err(|issues| {
        let lines: Vec<String> = issues.iter().map(|i| format!("  {i}")).collect();
        Failure::Config(anyhow!("{} config problem(s):\n{}", issues.len(), lines.join("\n")))
    })
}

fn output_dir(flag: &Option<PathBuf>, cfg: &RunConfig) -> Option<PathBuf> {
    flag.clone()
        .or_else(|| cfg.output_dir.clone())
        .or_else(|| std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from))
}

fn cmd_run(config: &ConfigArgs, output: &OutputArgs) -> Outcome {
    let mut cfg = resolve(config)?;
    let dir = output_dir(&output.output_dir, &cfg);
    cfg.output_dir = dir.clone();
    let cfg = validated(cfg)?;
    let out = run_drive(&cfg).map_err(Failure::runtime)?;

    let Some(dir) = dir else {
        // no directory: stream the drive log
        let stdout = io::stdout();
        write_drive_log(stdout.lock(), &cfg, &out.log).map_err(Failure::runtime)?;
        return Ok(());
    };
    let written = write_drive_artifacts(&out, &cfg, &dir).map_err(Failure::runtime)?;
    let recs = &out.log.records;
    let los = recs.iter().filter(|r| r.los == LosState::Los).count();
    let events = recs.iter().filter(|r| r.event.is_some()).count();
    println!("ticks = {}", recs.len());
    println!("los_ticks = {los}");
    println!("cluster_events = {events}");
    if let (Some(a), Some(b)) = (recs.first(), recs.last()) {
        println!("path_loss_db.first = {:.3}", a.path_loss_db);
        println!("path_loss_db.last = {:.3}", b.path_loss_db);
    }
    println!("files_written = {}", written.len());
    println!("output_dir = {}", dir.display());
    Ok(())
}

fn cmd_mc(config: &ConfigArgs, output: &OutputArgs, replicates: Option<usize>) -> Outcome {
    let mut cfg = resolve(config)?;
    if let Some(n) = replicates {
        cfg.replicates = n;
    }
    let dir = output_dir(&output.output_dir, &cfg);
    cfg.output_dir = dir.clone();
    if dir.is_none() {
        // nothing would store per-replicate logs
        cfg.emit.drive_log = false;
    }
    let cfg = validated(cfg)?;
    if cfg.replicates < 2 {
        return Err(Failure::Config(anyhow!(
            "replicates: Monte Carlo needs at least 2, got {}",
            cfg.replicates
        )));
    }
    let run = run_monte_carlo(&cfg).map_err(Failure::runtime)?;
    match dir {
        Some(dir) => {
            let written = write_monte_carlo_artifacts(&run, &cfg, &dir).map_err(Failure::runtime)?;
            let s = &run.summary;
            println!("replicates = {}", s.replicates);
            println!(
                "event_rate = {:.6} ({} of {} draws)",
                s.event_rate, s.event_fires, s.event_draws
            );
            println!("files_written = {}", written.len());
            println!("output_dir = {}", dir.display());
        }
        None => {
            let body = serde_json::to_string_pretty(&run.summary).map_err(Failure::runtime)?;
            println!("{body}");
        }
    }
    Ok(())
}

fn cmd_analyze(
    files: &[PathBuf],
    threshold_db: f64,
    min_void_ns: f64,
    spacing: Option<f64>,
    report: Option<&Path>,
) -> Outcome {
    if threshold_db.is_nan() || threshold_db <= 0.0 || min_void_ns.is_nan() || min_void_ns < 0.0 {
        return Err(Failure::Config(anyhow!(
            "threshold-db must be positive and min-void-ns non-negative"
        )));
    }
    if let Some(s) = spacing {
        if s.is_nan() || s <= 0.0 {
            return Err(Failure::Config(anyhow!("spacing must be positive, got {s}")));
        }
    }
    let analysis = AnalysisConfig {
        threshold_db,
        min_void_s: min_void_ns * 1e-9,
        ..Default::default()
    };
    let mut locations = Vec::with_capacity(files.len());
    let mut lines = Vec::new();
    for (k, path) in files.iter().enumerate() {
        let f = File::open(path)
            .with_context(|| format!("opening {}", path.display()))
            .map_err(Failure::Runtime)?;
        let parsed = read_pdp_csv(BufReader::new(f))
            .with_context(|| format!("reading {}", path.display()))
            .map_err(Failure::Runtime)?;
        let pdp = parsed
            .location_pdp(threshold_db)
            .with_context(|| format!("combining PDPs of {}", path.display()))
            .map_err(Failure::Runtime)?;
        let (clusters, ds, _) = analyze_pdp(&pdp, &analysis).map_err(Failure::runtime)?;
        lines.push(format!("location.{k}.file = {}", path.display()));
        lines.push(format!("location.{k}.directional_pdps = {}", parsed.directional.len()));
        locations.push(LocationAnalysis {
            index: k,
            position: None,
            clusters,
            rms_delay_spread_s: ds,
        });
    }
    let mut text = lines.join("\n");
    text.push('\n');
    let report_obj = AnalysisReport::from_locations(locations, spacing.unwrap_or(f64::NAN));
    let mut body = report_obj.to_text(None);
    if spacing.is_none() {
        body = body
            .lines()
            .filter(|l| !l.starts_with("route."))
            .map(|l| format!("{l}\n"))
            .collect();
    }
    text.push_str(&body);
    match report {
        Some(p) => {
            if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(parent).map_err(Failure::runtime)?;
            }
            fs::write(p, text)
                .with_context(|| format!("writing {}", p.display()))
                .map_err(Failure::Runtime)
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(Failure::runtime),
    }
}

fn cmd_validate(config: &ConfigArgs) -> Outcome {
    let cfg = resolve(config)?;
    validated(cfg)?;
    println!("config ok");
    Ok(())
}

fn cmd_config(config: &ConfigArgs) -> Outcome {
    let cfg = resolve(config)?;
    let text = toml::to_string_pretty(&cfg).map_err(Failure::runtime)?;
    print!("{text}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run { config, output } => cmd_run(config, output),
        Command::Mc {
            config,
            output,
            replicates,
        } => cmd_mc(config, output, *replicates),
        Command::Analyze {
            files,
            threshold_db,
            min_void_ns,
            spacing,
            report,
        } => cmd_analyze(files, *threshold_db, *min_void_ns, *spacing, report.as_deref()),
        Command::Validate { config } => cmd_validate(config),
        Command::Config { config } => cmd_config(config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(e)) => {
            eprintln!("config error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
