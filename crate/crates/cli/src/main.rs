use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use founderlens::community::NetworkWindow;
use founderlens::config::PipelineConfig;
use founderlens::error::{Error, Result};
use founderlens::pipeline::{run_pipeline, Stage};
use founderlens::synth::{generate_synthetic, DatasetScenario};
use log::info;

#[derive(Parser)]
#[command(name = "founderlens", version, about = "Founder personality and community outcome analysis")]
struct Cli {
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tokenize calibration users and build the feature matrix.
    Featurize(StageArgs),
    /// Select features and train the trait models.
    Calibrate(StageArgs),
    /// Estimate founder traits for every community.
    Estimate(StageArgs),
    /// Compute community outcomes and interaction-network metrics.
    Analyze(StageArgs),
    /// Fit the outcome regressions.
    Regress(StageArgs),
    /// Render the regression report.
    Report(StageArgs),
    /// Run every stage.
    Run(StageArgs),
    /// Write a synthetic dataset with planted effects and a config for it.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct StageArgs {
    /// TOML config; relative paths inside it resolve against its directory.
    #[arg(long, short)]
    config: Option<PathBuf>,
    #[arg(long, short)]
    output: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    events: Option<PathBuf>,
    #[arg(long)]
    calibration: Option<PathBuf>,
    #[arg(long)]
    communities: Option<PathBuf>,
    /// Directory of `<category>.txt` word lists.
    #[arg(long)]
    lexicons: Option<PathBuf>,
    #[arg(long)]
    norms: Option<PathBuf>,
    #[arg(long)]
    scoring_key: Option<PathBuf>,
    #[arg(long)]
    min_words: Option<usize>,
    #[arg(long)]
    kfolds: Option<usize>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Window for the network metrics: year-mark or first-month.
    #[arg(long, value_parser = parse_window)]
    network_window: Option<NetworkWindow>,
    #[arg(long)]
    log_outcomes: bool,
    #[arg(long)]
    standardized: bool,
}

#[derive(Args)]
struct SimulateArgs {
    #[arg(long, short)]
    output: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    communities: Option<usize>,
    #[arg(long)]
    calibration_users: Option<usize>,
}

fn parse_window(s: &str) -> std::result::Result<NetworkWindow, String> {
    match s {
        "year-mark" | "year_mark" => Ok(NetworkWindow::YearMark),
        "first-month" | "first_month" => Ok(NetworkWindow::FirstMonth),
        _ => Err(format!("expected year-mark or first-month, got {s:?}")),
    }
}

impl StageArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        let set = |slot: &mut Option<PathBuf>, v: &Option<PathBuf>| {
            if v.is_some() {
                slot.clone_from(v);
            }
        };
        set(&mut cfg.paths.events, &self.events);
        set(&mut cfg.paths.calibration, &self.calibration);
        set(&mut cfg.paths.communities, &self.communities);
        set(&mut cfg.paths.lexicons, &self.lexicons);
        set(&mut cfg.paths.norms, &self.norms);
        set(&mut cfg.paths.scoring_key, &self.scoring_key);
        if let Some(o) = &self.output {
            cfg.output_dir.clone_from(o);
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        let t = &mut cfg.thresholds;
        t.min_words = self.min_words.unwrap_or(t.min_words);
        t.kfolds = self.kfolds.unwrap_or(t.kfolds);
        t.alpha = self.alpha.unwrap_or(t.alpha);
        if let Some(w) = self.network_window {
            cfg.analysis.network_window = w;
        }
        cfg.analysis.log_outcomes |= self.log_outcomes;
        cfg.analysis.standardized |= self.standardized;
        cfg.validate()?;
        Ok(cfg)
    }
}

fn simulate(args: &SimulateArgs) -> Result<()> {
    let mut scenario = DatasetScenario::default();
    if let Some(n) = args.communities {
        scenario.n_communities = n;
    }
    if let Some(n) = args.calibration_users {
        scenario.n_calibration_users = n;
    }
    let data = generate_synthetic(&scenario, args.seed)?;
    let paths = data.write_to_dir(&args.output)?;
    let mut cfg = PipelineConfig {
        seed: args.seed,
        ..PipelineConfig::default()
    };
    let name = |p: &PathBuf| p.file_name().map(PathBuf::from);
    cfg.paths.events = name(&paths.events);
    cfg.paths.calibration = name(&paths.calibration);
    cfg.paths.communities = name(&paths.communities);
    let cfg_path = args.output.join("config.toml");
    std::fs::write(&cfg_path, cfg.to_toml()).map_err(|e| Error::io(&cfg_path, e))?;
    println!("wrote synthetic dataset and {}", cfg_path.display());
    Ok(())
}

fn execute(cli: &Cli) -> Result<()> {
    let (args, stage) = match &cli.command {
        Command::Simulate(a) => return simulate(a),
        Command::Featurize(a) => (a, Stage::Featurize),
        Command::Calibrate(a) => (a, Stage::Calibrate),
        Command::Estimate(a) => (a, Stage::Estimate),
        Command::Analyze(a) => (a, Stage::Analyze),
        Command::Regress(a) => (a, Stage::Regress),
        Command::Report(a) => (a, Stage::Report),
        Command::Run(a) => (a, Stage::Report),
    };
    let cfg = args.resolve()?;
    let summary = run_pipeline(&cfg, stage)?;
    for hit in &summary.cache_hits {
        info!("{hit}: served from cache");
    }
    println!(
        "completed through {stage}; outputs in {}",
        cfg.output_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("FOUNDERLENS_LOG", "warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: cannot size the worker pool: {e}");
            return ExitCode::from(1);
        }
    }
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
