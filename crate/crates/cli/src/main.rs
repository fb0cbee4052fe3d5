use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use cgnn::config::{Config, KEYS};
use cgnn::harness::{run_ablation, run_case_study, run_experiment, run_scalability, ExperimentReport};
use cgnn::synth::write_synth;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cgnn", version, about = "Continual learning for graph neural networks on streaming graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the selected models over the stream and report per-step metrics.
    Run(Args),
    /// Track the accuracy and representations of fixed node cohorts.
    Casestudy(Args),
    /// Sweep one setting of the continual model.
    Ablate(Args),
    /// Time one training epoch and the detectors across graph sizes.
    Scale(Args),
    /// Write the synthetic stream to `--out`.
    Synthgen(Args),
}

#[derive(clap::Args)]
struct Args {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides such as `--lambda 0 --model online --accumulate-test`.
    /// Any configuration key is accepted, with `-` or `_`.
    #[arg(trailing_var_arg = true, allow_hyphen_values = true, value_name = "OVERRIDES")]
    overrides: Vec<String>,
}

fn overrides(tokens: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let Some(flag) = tokens[i].strip_prefix("--") else {
            bail!("unexpected argument `{}`", tokens[i]);
        };
        let (key, value) = match flag.split_once('=') {
            Some((k, v)) => (k.to_string(), v.to_string()),
            None => match tokens.get(i + 1).filter(|t| !t.starts_with("--")) {
                Some(v) => {
                    i += 1;
                    (flag.to_string(), v.clone())
                }
                None => (flag.to_string(), "true".to_string()),
            },
        };
        out.push((key.replace('-', "_"), value));
        i += 1;
    }
    Ok(out)
}

fn load(args: &Args, synthgen: bool) -> Result<Config> {
    let mut cfg = match &args.config {
        Some(path) => Config::from_file(path)?,
        None => Config::default(),
    };
    for (key, value) in overrides(&args.overrides)? {
        let key = if synthgen && key == "seed" { "synth_seed".to_string() } else { key };
        cfg.set(&key, &value)
            .with_context(|| format!("known keys: {}", KEYS.join(", ")))?;
    }
    if cfg.out.is_none() && !synthgen {
        cfg.out = Some(PathBuf::from("out").join(&cfg.name));
    }
    Ok(cfg)
}

fn print_summary(report: &ExperimentReport) {
    println!("{:<12} {:>9} {:>9} {:>12} {:>12}", "model", "macro_f1", "accuracy", "s/epoch", "detect_s");
    for s in &report.summary {
        println!(
            "{:<12} {:>9.4} {:>9.4} {:>12.6} {:>12.6}",
            s.model, s.macro_f1, s.accuracy, s.train_seconds_per_epoch, s.detect_seconds
        );
    }
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run(args) => {
            let cfg = load(&args, false)?;
            print_summary(&run_experiment(&cfg.experiment())?);
        }
        Command::Casestudy(args) => {
            let cfg = load(&args, false)?;
            let report = run_case_study(&cfg.experiment())?;
            print_summary(&report);
            for m in &cfg.models {
                for c in &cfg.cohorts {
                    let series: Vec<String> =
                        report.series(*m, &format!("V^{c}")).iter().map(|r| format!("{:.2}", r.accuracy)).collect();
                    println!("{m} V^{c}: {}", series.join(" "));
                }
            }
        }
        Command::Ablate(args) => {
            let cfg = load(&args, false)?;
            let grid = run_ablation(&cfg.experiment(), cfg.axis, &cfg.ablation_values())?;
            println!("{:<14} {:>9} {:>9}", "value", "macro_f1", "accuracy");
            for p in &grid {
                println!("{:<14} {:>9.4} {:>9.4}", p.value, p.summary.macro_f1, p.summary.accuracy);
            }
        }
        Command::Scale(args) => {
            let cfg = load(&args, false)?;
            let report = run_scalability(&cfg.synth, &cfg.train, cfg.scale_axis, &cfg.sizes, cfg.fixed, cfg.repeats)?;
            let dir = cfg.out.expect("set by load");
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("scale.json"), serde_json::to_string_pretty(&report)?)?;
            println!("{:>8} {:>8} {:>12} {:>12} {:>10} {:>10} {:>10}", "nodes", "delta", "continual", "retrained", "naive", "bfs", "approx");
            println!("{:>8} {:>8} {:>12} {:>12} {:>10} {:>10} {:>10}", "", "", "step s", "step s", "detect s", "", "");
            for p in &report.points {
                println!(
                    "{:>8} {:>8} {:>12.6} {:>12.6} {:>10.6} {:>10.6} {:>10.6}",
                    p.nodes,
                    p.delta_nodes,
                    p.step_seconds["continual"],
                    p.step_seconds["retrained"],
                    p.detect_seconds["naive"],
                    p.detect_seconds["bfs"],
                    p.detect_seconds["approx"]
                );
            }
        }
        Command::Synthgen(args) => {
            let cfg = load(&args, true)?;
            let Some(dir) = cfg.out else {
                bail!("synthgen needs --out DIR");
            };
            let manifest = write_synth(&cfg.synth, &dir)?;
            println!("wrote {} nodes and {} edges to {}", manifest.nodes, manifest.edges, dir.display());
        }
    }
    Ok(())
}
