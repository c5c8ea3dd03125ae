//! Thin CLI over the diffnet library: experiment sweeps, aggregation, and
//! standalone network/cascade artifact generation.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use diffnet::cascade::{generate_cascade_set_seeded, write_cascade_times};
use diffnet::experiment::{
    aggregate, read_rows_csv, run_experiment, write_rows_csv, write_summary_csv, ExperimentConfig,
};

#[derive(Parser)]
#[command(name = "diffnet", version, about = "Diffusion-aware network sampling and estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment sweep described by a config file and write rows as CSV.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads (0 = library default).
        #[arg(long)]
        threads: Option<usize>,
        /// Master seed override.
        #[arg(long)]
        seed: Option<u64>,
        /// Record real per-run wallclock times (breaks byte-determinism).
        #[arg(long)]
        timings: bool,
    },
    /// Aggregate a rows CSV into per-grid-point statistics and DNS comparisons.
    Aggregate {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate (or load) the configured network and write it as an edge list.
    GenNetwork {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate cascades over the configured network and write infection times.
    GenCascades {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the realized network next to the cascades.
        #[arg(long)]
        network_out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn load_config(path: &PathBuf, seed: Option<u64>, threads: Option<u64>) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::from_file(path)
        .with_context(|| format!("loading config {}", path.display()))?;
    if let Some(seed) = seed {
        cfg.run.seed = seed;
    }
    if let Some(threads) = threads {
        cfg.run.threads = Some(threads as usize);
    }
    Ok(cfg)
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
            seed,
            timings,
        } => {
            let mut cfg = load_config(&config, seed, threads.map(|t| t as u64))?;
            if timings {
                cfg.run.record_timings = true;
            }
            let rows = run_experiment(&cfg)?;
            let failed = rows.iter().filter(|r| !r.error.is_empty()).count();
            write_rows_csv(&rows, &out)?;
            eprintln!(
                "wrote {} rows ({} failed) to {}",
                rows.len(),
                failed,
                out.display()
            );
        }
        Command::Aggregate { input, out } => {
            let rows = read_rows_csv(&input)?;
            let summary = aggregate(&rows)?;
            write_summary_csv(&summary, &out)?;
            eprintln!(
                "wrote {} grid stats and {} comparisons to {}",
                summary.grid_stats.len(),
                summary.diffs.len(),
                out.display()
            );
        }
        Command::GenNetwork { config, out, seed } => {
            let cfg = load_config(&config, seed, None)?;
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.run.seed);
            let g = cfg.network.realize(&mut rng)?;
            g.write_edge_list(&out)?;
            eprintln!(
                "wrote {} ({} nodes, {} edges)",
                out.display(),
                g.node_count(),
                g.edge_count()
            );
        }
        Command::GenCascades {
            config,
            out,
            network_out,
            seed,
        } => {
            let cfg = load_config(&config, seed, None)?;
            let mut rng = ChaCha12Rng::seed_from_u64(cfg.run.seed);
            let g = cfg.network.realize(&mut rng)?;
            let params = diffnet::DiffusionParams {
                alpha: cfg.diffusion.alpha,
                beta: cfg.diffusion.beta,
                delta_target: cfg.diffusion.delta,
                horizon: cfg.diffusion.horizon,
                max_cascades: cfg.diffusion.max_cascades.unwrap_or(100_000),
            };
            let choice = match cfg.diffusion.seed_node.as_deref() {
                None | Some("uniform") => diffnet::cascade::SeedChoice::Uniform,
                Some(label) => match g.node_by_label(label) {
                    Some(u) => diffnet::cascade::SeedChoice::Fixed(u),
                    None => bail!("seed_node {label:?} is not a node of the network"),
                },
            };
            let (cs, dn) = generate_cascade_set_seeded(&g, &params, choice, &mut rng)?;
            write_cascade_times(&g, &cs, &out)?;
            if let Some(net_path) = network_out {
                g.write_edge_list(&net_path)?;
                eprintln!("wrote network to {}", net_path.display());
            }
            eprintln!(
                "wrote {} cascades covering {:.3} of {} edges to {}",
                cs.len(),
                diffnet::cascade::diffusion_rate(&g, &dn),
                g.edge_count(),
                out.display()
            );
        }
    }
    Ok(())
}
