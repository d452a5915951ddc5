use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use subevent::pipeline::{
    cmd_cluster, cmd_evaluate, cmd_extract, cmd_pipeline, cmd_rank, cmd_report, with_threads,
    PipelineConfig,
};
use subevent::Result;

#[derive(Parser)]
#[command(
    name = "subevent",
    version,
    about = "Extract, rank and cluster crisis sub-events from tweets"
)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON pipeline config.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (outputs do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every random choice; same as `--set cluster.seed=N`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Config override `group.key=value`, e.g. `--set cluster.k=50`. Repeatable. Any config key
    /// can also be given directly as a flag: `--cluster.k 50`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,
    /// Print the effective config before running.
    #[arg(long, global = true)]
    show_config: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Extract and filter candidates into candidates.csv.
    Extract,
    /// Rank candidates.csv into ranked.csv.
    Rank,
    /// Cluster the top of ranked.csv into clusters.json.
    Cluster,
    /// Score ranked.csv against the labeled corpus into metrics.csv.
    Evaluate,
    /// Plot metrics.csv into report.svg and report.txt.
    Report,
    /// Run every stage and write manifest.json.
    Pipeline,
}

fn effective_config(g: &Global) -> Result<PipelineConfig> {
    let cfg = match &g.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let mut overrides = g.overrides.clone();
    if let Some(seed) = g.seed {
        overrides.push(format!("cluster.seed={seed}"));
    }
    cfg.with_overrides(&overrides)
}

fn run(cli: Cli) -> Result<()> {
    let cfg = effective_config(&cli.global)?;
    if cli.global.show_config {
        eprintln!("{}", cfg.to_json());
    }
    with_threads(cli.global.threads, || -> Result<()> {
        match cli.command {
            Command::Extract => {
                let s = cmd_extract(&cfg)?;
                println!("{}", s.accounting);
                println!(
                    "tweets {} (parsed {}, lexicon {}, no source {})",
                    s.counts.tweets,
                    s.counts.parsed,
                    s.counts.lexicon_fallback,
                    s.counts.no_nv_source
                );
            }
            Command::Rank => {
                let ranked = cmd_rank(&cfg)?;
                println!("ranked {} candidates", ranked.len());
                for r in ranked.iter().take(10) {
                    println!(
                        "{:>4} {:<28} {:.4} {}",
                        r.rank,
                        r.candidate.text(),
                        r.score,
                        r.best_term.as_deref().unwrap_or("-")
                    );
                }
            }
            Command::Cluster => {
                let clusters = cmd_cluster(&cfg)?;
                println!("{} clusters", clusters.len());
                for c in &clusters {
                    println!(
                        "{:>3} {:>4} members, medoid {} {}",
                        c.cluster_id,
                        c.members.len(),
                        c.medoid.first,
                        c.medoid.second
                    );
                }
            }
            Command::Evaluate => {
                let metrics = cmd_evaluate(&cfg)?;
                println!("{} cut sizes evaluated", metrics.len());
            }
            Command::Report => print!("{}", cmd_report(&cfg)?),
            Command::Pipeline => {
                let m = cmd_pipeline(&cfg)?;
                for s in &m.stages {
                    println!("{:<9} {:<9} {:.3}s", s.name, s.status, s.seconds);
                }
                println!("wall time {:.3}s", m.wall_seconds);
            }
        }
        Ok(())
    })?
}

/// Pulls `--group.key=value` and `--group.key value` out of argv as config overrides.
fn split_dotted(args: impl Iterator<Item = String>) -> (Vec<String>, Vec<String>) {
    let mut rest = Vec::new();
    let mut dotted = Vec::new();
    let mut args = args;
    while let Some(arg) = args.next() {
        match arg.strip_prefix("--") {
            Some(flag) if flag.split('=').next().is_some_and(|k| k.contains('.')) => {
                if flag.contains('=') {
                    dotted.push(flag.to_string());
                } else if let Some(value) = args.next() {
                    dotted.push(format!("{flag}={value}"));
                } else {
                    dotted.push(flag.to_string());
                }
            }
            _ => rest.push(arg),
        }
    }
    (rest, dotted)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let (args, dotted) = split_dotted(std::env::args());
    let cli = match Cli::try_parse_from(args) {
        Ok(mut cli) => {
            cli.global.overrides.extend(dotted);
            cli
        }
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
