use anyhow::Context;
use clap::{Parser, Subcommand};
use meshfl::harness::{
    compare, emit_metrics, presets, run_experiment, sweep, ExperimentConfig, HarnessError, MetricsLog,
};
use meshfl::routing::Protocol;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "meshfl", version, about = "Federated learning over a simulated wireless mesh")]
struct Cli {
    /// Overrides every seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario and write rounds.csv and flows.csv.
    Run {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        /// A preset variant such as `fig12_distributions/2-5-2/congested`.
        #[arg(long)]
        preset: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        protocol: Option<Protocol>,
    },
    /// Run scenarios that differ only in routing and compare time to a target loss.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        configs: Vec<PathBuf>,
        #[arg(long)]
        target_loss: f64,
        /// Run each config once per listed protocol instead of its own.
        #[arg(long, num_args = 1..)]
        protocols: Vec<Protocol>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run every variant of a preset under several protocols and replicates.
    Sweep {
        #[arg(long)]
        preset: String,
        #[arg(long, default_value_t = 5)]
        replicates: u32,
        #[arg(long, num_args = 1.., default_values_t = [Protocol::Baseline, Protocol::RlSoftmax])]
        protocols: Vec<Protocol>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print a preset (or one of its variants) as a config file, or list them.
    Preset { name: Option<String> },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match exec(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<HarnessError>().map_or(2, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn seeded(cfg: ExperimentConfig, seed: Option<u64>) -> ExperimentConfig {
    match seed {
        Some(s) => cfg.with_seed(s),
        None => cfg,
    }
}

fn exec(cli: Cli) -> anyhow::Result<()> {
    match cli.cmd {
        Cmd::Run {
            config,
            preset,
            out,
            protocol,
        } => {
            let cfg = match (config, preset) {
                (Some(path), _) => ExperimentConfig::load(&path)?,
                (None, Some(name)) => presets::variant(&name)?,
                (None, None) => unreachable!("clap enforces one of --config/--preset"),
            };
            let mut cfg = seeded(cfg, cli.seed);
            if let Some(p) = protocol {
                cfg = cfg.with_protocol(p);
            }
            let log = run_experiment(&cfg)?;
            write_run(&log, &out)?;
            summarize(&log, cfg.fl.target_loss);
        }
        Cmd::Compare {
            configs,
            target_loss,
            protocols,
            out,
        } => {
            let mut logs: BTreeMap<Protocol, MetricsLog> = BTreeMap::new();
            for path in &configs {
                let cfg = seeded(ExperimentConfig::load(path)?, cli.seed);
                let arms = if protocols.is_empty() {
                    vec![cfg.routing.protocol]
                } else {
                    protocols.clone()
                };
                for p in arms {
                    if logs.contains_key(&p) {
                        return Err(HarnessError::Config(format!("protocol {p} given more than once")).into());
                    }
                    let log = run_experiment(&cfg.with_protocol(p))?;
                    if let Some(dir) = &out {
                        write_run(&log, &dir.join(p.as_str()))?;
                    }
                    logs.insert(p, log);
                }
            }
            let baseline = if logs.contains_key(&Protocol::Baseline) {
                Protocol::Baseline
            } else {
                *logs.keys().next().expect("at least one config")
            };
            println!("{}", compare(&logs, baseline, target_loss)?);
        }
        Cmd::Sweep {
            preset,
            replicates,
            protocols,
            out,
        } => {
            let (rows, summary) = sweep(&preset, replicates, &protocols)?;
            if let Some(dir) = &out {
                std::fs::create_dir_all(dir)?;
                let mut w = csv::Writer::from_path(dir.join("sweep.csv"))?;
                w.write_record(["variant", "protocol", "replicate", "time_to_target_ms", "total_ms", "rounds", "final_loss"])?;
                for r in &rows {
                    w.write_record([
                        r.variant.clone(),
                        r.protocol.to_string(),
                        r.replicate.to_string(),
                        r.time_to_target.map(|t| t.as_ms().to_string()).unwrap_or_default(),
                        r.total_time.as_ms().to_string(),
                        r.rounds.to_string(),
                        r.final_loss.to_string(),
                    ])?;
                }
                w.flush()?;
            }
            println!("{:<44} {:<12} {:>14} {:>10} {:>8}", "variant", "protocol", "mean ms", "minutes", "reached");
            for s in &summary {
                let (ms, min) = match s.mean_time_ms {
                    Some(t) => (format!("{t:.1}"), format!("{:.2}", t / 60_000.0)),
                    None => ("-".into(), "-".into()),
                };
                println!(
                    "{:<44} {:<12} {:>14} {:>10} {:>5}/{}",
                    s.variant, s.protocol.as_str(), ms, min, s.reached, s.replicates
                );
            }
        }
        Cmd::Preset { name } => match name {
            None => {
                for n in presets::names() {
                    for (v, _) in presets::variants(n)? {
                        println!("{v}");
                    }
                }
            }
            Some(n) if n.contains('/') => print!("{}", seeded(presets::variant(&n)?, cli.seed).to_toml()),
            Some(n) => print!("{}", seeded(presets::load(&n)?, cli.seed).to_toml()),
        },
    }
    Ok(())
}

fn write_run(log: &MetricsLog, dir: &Path) -> anyhow::Result<()> {
    let (rounds, flows) = emit_metrics(log, dir)?;
    std::fs::write(dir.join("diagnostics.json"), serde_json::to_string_pretty(&log.diagnostics)?)
        .with_context(|| format!("writing diagnostics to {}", dir.display()))?;
    eprintln!("wrote {} and {}", rounds.display(), flows.display());
    Ok(())
}

fn summarize(log: &MetricsLog, target: Option<f64>) {
    let total = log.total_time();
    println!("{} [{}]: {} rounds, {:.1} ms ({:.2} min)", log.name, log.protocol, log.rounds.len(), total.as_ms(), total.as_minutes());
    if let Some(last) = log.rounds.last() {
        println!("final loss {:.5}, accuracy {:.4}", last.loss, last.accuracy);
    }
    if let Some(t) = target {
        match meshfl::harness::time_to_target(log, t) {
            Some(at) => println!("target {t} reached at {:.1} ms ({:.2} min)", at.as_ms(), at.as_minutes()),
            None => println!("target {t} not reached"),
        }
    }
}
