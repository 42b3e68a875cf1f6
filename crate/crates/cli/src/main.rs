use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sentivol::eval::Method;
use sentivol::io::LineError;
use sentivol::pipeline::{self, COMPARISON_FILE};
use sentivol::synth::{write_synthetic, SyntheticSpec};
use sentivol::{Error, PipelineConfig};

/// Forum-sentiment indicators and volatility-direction prediction.
#[derive(Debug, Parser)]
#[command(name = "sentivol", version)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Pipeline configuration file (TOML).
    #[arg(long, short, global = true)]
    config: Option<PathBuf>,
    /// Override a configuration key, e.g. `--set k=12`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Posts file (JSON Lines).
    #[arg(long, global = true)]
    posts: Option<PathBuf>,
    /// Closing-price file (CSV).
    #[arg(long, global = true)]
    prices: Option<PathBuf>,
    /// Directory for every output artifact.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the sentiment classifier and export its dictionary.
    TrainSentiment,
    /// Score every post with the trained classifier.
    ScorePosts,
    /// Daily bullishness and volume indicators.
    BuildIndicators,
    /// Volatility labels joined with the indicators.
    PrepareMarket,
    /// Train one predictor at the configured k and report test accuracy.
    TrainPredict,
    /// Seeded sweep over k, methods and replications.
    Sweep,
    /// Cross-stock comparison table from one or more summary files.
    Report {
        #[arg(required = true)]
        summaries: Vec<PathBuf>,
        /// Output CSV; defaults to `comparison.csv` in the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Every stage in order.
    Run,
    /// Write a synthetic posts and prices pair.
    Synth {
        /// Destination directory.
        dir: PathBuf,
        #[arg(long, default_value_t = SyntheticSpec::default().days)]
        days: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().posts_per_day)]
        posts_per_day: usize,
        #[arg(long, default_value_t = SyntheticSpec::default().coupling)]
        coupling: f64,
        #[arg(long, default_value_t = SyntheticSpec::default().noise)]
        noise: f64,
        #[arg(long, default_value_t = SyntheticSpec::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = SyntheticSpec::default().stock)]
        stock: String,
    },
    /// Print the effective configuration.
    ShowConfig,
}

fn load_config(global: &GlobalArgs) -> Result<PipelineConfig, Error> {
    let mut overrides = Vec::new();
    let paths = [("posts", &global.posts), ("prices", &global.prices), ("out_dir", &global.out_dir)];
    for (key, value) in paths {
        if let Some(path) = value {
            let quoted = toml::Value::String(path.display().to_string());
            overrides.push(format!("{key}={quoted}"));
        }
    }
    overrides.extend(global.overrides.iter().cloned());
    PipelineConfig::load_with_overrides(global.config.as_deref(), &overrides)
}

fn warn_skipped(skipped: &[LineError]) {
    for e in skipped {
        eprintln!("warning: skipped line {}: {}", e.line, e.message);
    }
}

fn print_table(rows: &[sentivol::eval::ComparisonRow]) {
    println!("{:<8} {:>10} {:>10} {:>7}", "method", "mean", "std", "stocks");
    for r in rows {
        println!("{:<8} {:>10.6} {:>10.6} {:>7}", r.method.to_string(), r.mean, r.std, r.stocks);
    }
}

fn run(cli: Cli) -> Result<(), Error> {
    if let Command::Synth { dir, days, posts_per_day, coupling, noise, seed, stock } = cli.command {
        let spec = SyntheticSpec { days, posts_per_day, coupling, noise, seed, stock, ..Default::default() };
        let (posts, prices) = write_synthetic(&spec, &dir)?;
        println!("wrote {} and {}", posts.display(), prices.display());
        return Ok(());
    }
    let cfg = load_config(&cli.global)?;
    match cli.command {
        Command::TrainSentiment => {
            let r = pipeline::train_sentiment(&cfg)?;
            warn_skipped(&r.skipped);
            println!(
                "trained on {} labeled posts, vocabulary {}, training accuracy {:.4}",
                r.labeled, r.vocabulary, r.train_accuracy
            );
        }
        Command::ScorePosts => {
            let r = pipeline::score_posts(&cfg)?;
            warn_skipped(&r.skipped);
            println!("scored {} posts, {} positive", r.scored, r.positive);
        }
        Command::BuildIndicators => {
            let series = pipeline::build_indicators(&cfg)?;
            println!("{} trading days of indicators", series.rows.len());
        }
        Command::PrepareMarket => {
            let rows = pipeline::prepare_market(&cfg)?;
            println!("{} aligned days", rows.len());
        }
        Command::TrainPredict => {
            let r = pipeline::train_predict(&cfg)?;
            println!(
                "{} at k = {}: test accuracy {:.4} ({} train, {} test windows)",
                r.method, cfg.k, r.accuracy, r.train_samples, r.test_samples
            );
        }
        Command::Sweep => {
            for row in pipeline::sweep(&cfg)? {
                println!("{} {}: best k {} mean {:.4} std {:.4}", row.stock, row.method, row.best_k, row.mean, row.std);
            }
        }
        Command::Report { summaries, out } => {
            let out = out.unwrap_or_else(|| cfg.out_dir.join(COMPARISON_FILE));
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::Io { path: parent.to_path_buf(), source: e })?;
            }
            let methods: Vec<Method> = cfg.methods.clone();
            print_table(&pipeline::report(&summaries, &methods, &out)?);
        }
        Command::Run => print_table(&pipeline::run_all(&cfg)?),
        Command::ShowConfig => print!("{}", cfg.to_toml_string()?),
        Command::Synth { .. } => unreachable!("handled above"),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 1 })
        }
    }
}
