use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use doraemon::distributions::Family;
use doraemon::harness::{
    aggregate, global_success_rate, run_experiment, run_sweep, snapshot_runner,
    ExperimentConfig, GridQuantity, GridSpec, SnapshotFile, SweepAxis, SWEEP_SUMMARY_FILE,
};
use doraemon::{Error, Result};

#[derive(Parser)]
#[command(name = "doraemon", version, about = "Entropy-maximizing domain-randomization curricula")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every seed of an experiment config as parallel jobs.
    Run {
        /// Path to a JSON experiment config.
        #[arg(long)]
        config: PathBuf,
    },
    /// Re-run a config once per value of one swept setting.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// One of: alpha, epsilon, j_lb, family.
        #[arg(long)]
        axis: String,
        /// Comma-separated values for the axis.
        #[arg(long)]
        values: String,
    },
    /// Measure a saved snapshot's success rate over the whole benchmark box.
    Eval {
        #[arg(long)]
        snapshot: PathBuf,
        /// Number of evaluation episodes.
        #[arg(long, default_value_t = 500)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Evaluate a snapshot over a grid slice and write the CSVs.
    Grid {
        #[arg(long)]
        snapshot: PathBuf,
        /// One dimension index for a line, or two as d1,d2.
        #[arg(long)]
        dims: String,
        /// Points per varied axis.
        #[arg(long)]
        size: usize,
        /// Episodes per grid cell.
        #[arg(long, default_value_t = 5)]
        episodes: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory; defaults to the snapshot's directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() {
    if let Err(err) = dispatch(Cli::parse()) {
        eprintln!("error: {err}");
        std::process::exit(1);
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config } => cmd_run(&config),
        Command::Sweep { config, axis, values } => cmd_sweep(&config, &axis, &values),
        Command::Eval { snapshot, n, seed } => cmd_eval(&snapshot, n, seed),
        Command::Grid { snapshot, dims, size, episodes, seed, out } => {
            cmd_grid(&snapshot, &dims, size, episodes, seed, out)
        }
    }
}

fn cmd_run(config: &Path) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let results = run_experiment(&cfg)?;
    for r in &results {
        println!(
            "seed {:>4}  final entropy {:+.4}  best global success {:.3} (iteration {})",
            r.seed, r.summary.final_entropy, r.summary.best_global_success, r.summary.best_iteration
        );
    }
    let entropies: Vec<f64> = results.iter().map(|r| r.summary.final_entropy).collect();
    let agg = aggregate(&entropies);
    println!(
        "final entropy median {:+.4} (IQR {:+.4} .. {:+.4}) over {} seeds",
        agg.median,
        agg.q1,
        agg.q3,
        results.len()
    );
    println!("logs in {}", cfg.run_dir().display());
    Ok(())
}

fn cmd_sweep(config: &Path, axis: &str, values: &str) -> Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let axis = parse_axis(axis, values)?;
    let sweep = run_sweep(&cfg, &axis)?;
    for p in &sweep.points {
        println!(
            "{:<36} final entropy median {:+.4} (IQR {:+.4} .. {:+.4})  best success median {:.3}",
            p.label,
            p.final_entropy.median,
            p.final_entropy.q1,
            p.final_entropy.q3,
            p.best_global_success.median
        );
    }
    println!("sweep summary in {}", sweep.root.join(SWEEP_SUMMARY_FILE).display());
    Ok(())
}

fn parse_axis(name: &str, values: &str) -> Result<SweepAxis> {
    let floats = || -> Result<Vec<f64>> {
        values
            .split(',')
            .map(|v| {
                v.trim()
                    .parse::<f64>()
                    .map_err(|_| Error::InvalidConfig(format!("bad numeric sweep value {v:?}")))
            })
            .collect()
    };
    match name {
        "alpha" => Ok(SweepAxis::Alpha(floats()?)),
        "epsilon" => Ok(SweepAxis::Epsilon(floats()?)),
        "j_lb" => Ok(SweepAxis::JLb(floats()?)),
        "family" => Ok(SweepAxis::Family(
            values.split(',').map(parse_family).collect::<Result<_>>()?,
        )),
        other => Err(Error::InvalidConfig(format!(
            "unknown sweep axis {other:?}; expected alpha, epsilon, j_lb, or family"
        ))),
    }
}

fn parse_family(value: &str) -> Result<Family> {
    match value.trim().to_ascii_lowercase().as_str() {
        "beta" | "independent_beta" => Ok(Family::IndependentBeta),
        "gaussian" | "truncated_gaussian" | "independent_truncated_gaussian" => {
            Ok(Family::IndependentTruncatedGaussian)
        }
        other => Err(Error::InvalidConfig(format!("unknown family {other:?}"))),
    }
}

fn cmd_eval(snapshot: &Path, n: usize, seed: u64) -> Result<()> {
    let snap = SnapshotFile::load(snapshot)?;
    let support = snap.environment.support()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode = snapshot_runner(&snap);
    let g = global_success_rate(episode.as_mut(), &support, n, &mut rng)?;
    println!(
        "global success {:.4} +/- {:.4} over {} episodes (snapshot iteration {}, {} training episodes)",
        g.rate, g.half_width, g.episodes, snap.iteration, snap.training_episodes
    );
    Ok(())
}

fn cmd_grid(
    snapshot: &Path,
    dims: &str,
    size: usize,
    episodes: usize,
    seed: u64,
    out: Option<PathBuf>,
) -> Result<()> {
    let snap = SnapshotFile::load(snapshot)?;
    let support = snap.environment.support()?;
    let parsed: Vec<usize> = dims
        .split(',')
        .map(|d| {
            d.trim()
                .parse::<usize>()
                .map_err(|_| Error::InvalidConfig(format!("bad dimension index {d:?}")))
        })
        .collect::<Result<_>>()?;
    let spec = match parsed.as_slice() {
        [d] => {
            let mut spec = GridSpec::line(&support, *d, size);
            spec.episodes_per_cell = episodes;
            spec
        }
        [dx, dy] => GridSpec {
            dim_x: *dx,
            dim_y: Some(*dy),
            size_x: size,
            size_y: size,
            nominal: support.midpoint(),
            episodes_per_cell: episodes,
        },
        _ => {
            return Err(Error::InvalidConfig(
                "--dims takes one dimension index or two as d1,d2".into(),
            ))
        }
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut episode = snapshot_runner(&snap);
    let grid = doraemon::harness::evaluate_grid(episode.as_mut(), &support, &spec, &mut rng)?;
    let out = out.unwrap_or_else(|| {
        snapshot.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf)
    });
    std::fs::create_dir_all(&out)?;
    let stem = match spec.dim_y {
        Some(dy) => format!("grid_xi{}_xi{dy}", spec.dim_x),
        None => format!("grid_xi{}", spec.dim_x),
    };
    for quantity in [GridQuantity::MeanReturn, GridQuantity::Success] {
        let path = out.join(format!("{stem}_{}.csv", quantity.name()));
        std::fs::write(&path, grid.to_csv(quantity))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
