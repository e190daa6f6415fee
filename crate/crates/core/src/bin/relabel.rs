use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use relabel::envs::{generate_demos, Env};
use relabel::harness::{
    evaluate, load_checkpoint, run_matrix, run_training, save_checkpoint, sweep_b, RunConfig, SummaryRow,
    Variant, ALL_VARIANTS,
};
use relabel::transitions::codec::write_demo_set;

#[derive(Parser)]
#[command(name = "relabel", about = "Reward relabeling for sparse-reward continuous control")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct ConfigArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// `key=value` overrides applied after the file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            cfg.apply_lines(&text)?;
        }
        for o in &self.overrides {
            cfg.apply_assignment(o)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write scripted-expert demonstrations to a transition file.
    GenDemos {
        #[arg(long)]
        env: String,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one variant for one seed and write its metrics file.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Variant preset applied on top of the config; omit to use the config flags as given.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// Also save the final learner here.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
    /// Run variants × seeds and write metrics plus summary.jsonl into a directory.
    Matrix {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Comma-separated variant keys (default: all).
        #[arg(long, value_delimiter = ',')]
        variants: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run R2 for each bonus value and report steps to threshold per value.
    SweepB {
        #[arg(long, value_delimiter = ',', default_value = "0,1,3,5,7,10")]
        values: Vec<f64>,
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        out: PathBuf,
    },
    /// Deterministic evaluation of a saved learner.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 100)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_rows(rows: &[SummaryRow]) {
    for r in rows.iter().filter(|r| r.seed.is_none()) {
        let median = r.median_env_steps_to_threshold.map_or("never".to_string(), |m| format!("{m:.0}"));
        println!(
            "{:<28} threshold {:.2}: {}/{} crossed, median env steps {median}, final rolling success {:.3}",
            r.label,
            r.threshold,
            r.crossings,
            r.runs,
            r.final_rolling_success.unwrap_or(f64::NAN)
        );
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::GenDemos { env, count, seed, out } => {
            let mut e = Env::new(&env)?;
            let demos = generate_demos::<f64>(&mut e, count, seed)?;
            let mut w = BufWriter::new(File::create(&out)?);
            write_demo_set(&mut w, &env, e.spec().sparse_reward, &demos)?;
            w.flush()?;
            println!("{count} demonstrations, mean length {}, written to {}", demos.avg_length(), out.display());
        }
        Command::Train { cfg, variant, seed, out, checkpoint } => {
            let mut c = cfg.load()?;
            let name = match &variant {
                Some(v) => {
                    let v: Variant = v.parse()?;
                    c = v.apply(&c);
                    v.key().to_string()
                }
                None => "custom".to_string(),
            };
            let f = BufWriter::new(File::create(&out).with_context(|| format!("creating {}", out.display()))?);
            let (summary, trainer) = run_training::<f64, _>(&c, &name, seed, f)?;
            if let Some(path) = checkpoint {
                let mut w = BufWriter::new(File::create(&path)?);
                save_checkpoint(&mut w, &c, &trainer.learner)?;
                w.flush()?;
            }
            let k = &summary.counters;
            let last = summary.records.last().map_or(0.0, |r| r.rolling_success);
            println!(
                "{} episodes, {} env steps, {} training steps, final rolling success {last:.3}",
                k.episodes, k.env_steps, k.train_steps
            );
            if let Some(e) = summary.eval_success {
                println!("evaluation success {e:.3}");
            }
        }
        Command::Matrix { cfg, variants, out } => {
            let c = cfg.load()?;
            let vs: Vec<Variant> = if variants.is_empty() {
                ALL_VARIANTS.to_vec()
            } else {
                variants.iter().map(|v| v.parse()).collect::<relabel::error::Result<_>>()?
            };
            print_rows(&run_matrix(&c, &vs, &out)?);
        }
        Command::SweepB { values, cfg, out } => {
            if values.is_empty() {
                bail!("--values needs at least one bonus");
            }
            print_rows(&sweep_b(&cfg.load()?, &values, &out)?);
        }
        Command::Eval { checkpoint, episodes, seed } => {
            let mut r = BufReader::new(File::open(&checkpoint)?);
            let (cfg, learner) = load_checkpoint::<f64, _>(&mut r)?;
            let mut env = Env::new(&cfg.env)?;
            let rate = evaluate(&learner, &mut env, episodes, seed)?;
            println!("{episodes} episodes on {}, success rate {rate:.3}", cfg.env);
        }
    }
    Ok(())
}
