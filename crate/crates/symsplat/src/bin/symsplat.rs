use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use symsplat::bench::{
    eval_detection, gen_synthetic, sweep_csv, sweep_gamma_res, AttributeProfile, SyntheticSpec,
};
use symsplat::codec::{decode, encode, encoded_size, rcf, reconstruct};
use symsplat::compress::compress;
use symsplat::config::Config;
use symsplat::mirror::from_normal_offset;
use symsplat::ply::{load_ply, save_ply};
use symsplat::{math, Error, Mirror, Result, Scene};

#[derive(Parser)]
#[command(name = "symsplat", version, about = "Reflective-symmetry compression for gaussian splat scenes")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides [run].seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides [run].threads; 0 uses all cores.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compress a splat scene into a .symg container.
    Compress {
        input: PathBuf,
        output: PathBuf,
    },
    /// Reconstruct a .symg container back into a .ply scene.
    Decompress {
        input: PathBuf,
        output: PathBuf,
    },
    /// Detect mirror planes and print them as JSON.
    Detect { input: PathBuf },
    /// Print container statistics as JSON.
    Stats { input: PathBuf },
    /// Synthetic-scene benchmarking.
    #[command(subcommand)]
    Bench(BenchCommand),
}

#[derive(Subcommand)]
enum BenchCommand {
    /// Generate a synthetic scene with known mirrors.
    Gen(GenArgs),
    /// Score detection against ground truth.
    Eval(EvalArgs),
    /// Run the gamma_res ablation sweep and print CSV.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Output scene path (.ply).
    scene: PathBuf,
    /// Output ground-truth mirror list (.json).
    gt: PathBuf,
    #[arg(long, default_value_t = 1000)]
    base_count: usize,
    #[arg(long, default_value_t = 1)]
    mirrors: usize,
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Number of distinct colors; 0 means uniform attributes.
    #[arg(long, default_value_t = 0)]
    colors: usize,
}

#[derive(Args)]
struct EvalArgs {
    scene: PathBuf,
    gt: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    scene: PathBuf,
    gt: PathBuf,
    /// Comma-separated ascending gamma_res values.
    #[arg(long, value_delimiter = ',', default_values_t = [0.01, 0.05, 0.1])]
    values: Vec<f64>,
    /// Write CSV here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Serialize)]
struct DetectedMirror {
    alpha: f64,
    beta: f64,
    gamma: f64,
    votes: u32,
    level: usize,
}

#[derive(Serialize)]
struct ContainerStats {
    bytes: u64,
    levels: usize,
    retained_per_level: Vec<usize>,
    last_left: usize,
    last_out: usize,
    expanded_count: usize,
    extent: f64,
    rcf_vs_passthrough: f64,
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(path) => Config::load(path)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = threads;
    }
    Ok(cfg)
}

fn read_gt(path: &PathBuf) -> Result<Vec<Mirror>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn write_text(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.clone(),
        source: e,
    })
}

fn run(cli: &Cli) -> Result<u8> {
    let cfg = load_config(cli)?;
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    }

    match &cli.command {
        Command::Compress { input, output } => {
            let scene: Scene = load_ply(input)?;
            let (cs, stats) = compress(&scene, &cfg)?;
            let bytes = encode(&cs, output)?;
            let original = symsplat::bench::passthrough_bytes(&scene);
            eprintln!(
                "{} gaussians, {} levels, {} bytes ({:.2}x)",
                scene.len(),
                stats.len(),
                bytes,
                rcf(original, bytes)?
            );
            Ok(0)
        }
        Command::Decompress { input, output } => {
            let cs = decode::<f64>(input)?;
            let scene = reconstruct(&cs)?;
            save_ply(&scene, output)?;
            eprintln!("{} gaussians reconstructed", scene.len());
            Ok(0)
        }
        Command::Detect { input } => {
            let scene: Scene = load_ply(input)?;
            let (_, stats) = compress(&scene, &cfg)?;
            let mirrors: Vec<DetectedMirror> = stats
                .iter()
                .map(|s| DetectedMirror {
                    alpha: s.alpha,
                    beta: s.beta,
                    gamma: s.gamma,
                    votes: s.votes,
                    level: s.level,
                })
                .collect();
            println!("{}", serde_json::to_string_pretty(&mirrors).unwrap());
            Ok(if mirrors.is_empty() { 2 } else { 0 })
        }
        Command::Stats { input } => {
            let cs = decode::<f64>(input)?;
            let bytes = encoded_size(&cs) as u64;
            let reconstructed = reconstruct(&cs)?;
            let stats = ContainerStats {
                bytes,
                levels: cs.levels.len(),
                retained_per_level: cs.levels.iter().map(|l| l.retained_count()).collect(),
                last_left: cs.last_left.len(),
                last_out: cs.last_out.len(),
                expanded_count: cs.expanded_count(),
                extent: cs.extent,
                rcf_vs_passthrough: rcf(
                    symsplat::bench::passthrough_bytes(&reconstructed),
                    bytes,
                )?,
            };
            println!("{}", serde_json::to_string_pretty(&stats).unwrap());
            Ok(0)
        }
        Command::Bench(BenchCommand::Gen(args)) => {
            let spec = gen_spec(args, cfg.run.seed)?;
            let synthetic = gen_synthetic(&spec)?;
            save_ply(&synthetic.scene, &args.scene)?;
            write_text(
                &args.gt,
                &serde_json::to_string_pretty(&synthetic.mirrors).unwrap(),
            )?;
            eprintln!(
                "{} gaussians, groups {:?}",
                synthetic.scene.len(),
                synthetic.group_pairs
            );
            Ok(0)
        }
        Command::Bench(BenchCommand::Eval(args)) => {
            let scene: Scene = load_ply(&args.scene)?;
            let gt = read_gt(&args.gt)?;
            match eval_detection(&scene, &gt, &cfg)? {
                Some(report) => {
                    println!("{}", serde_json::to_string_pretty(&report).unwrap());
                    Ok(0)
                }
                None => {
                    eprintln!("no symmetry detected");
                    Ok(2)
                }
            }
        }
        Command::Bench(BenchCommand::Sweep(args)) => {
            let scene: Scene = load_ply(&args.scene)?;
            let gt = read_gt(&args.gt)?;
            let rows = sweep_gamma_res(&scene, &gt, &args.values, &cfg)?;
            let csv = sweep_csv(&rows);
            match &args.out {
                Some(path) => write_text(path, &csv)?,
                None => print!("{csv}"),
            }
            Ok(0)
        }
    }
}

/// Seeded random mirror specs: normals on the representable half-sphere,
/// coverages descending and summing to 0.9.
fn gen_spec(args: &GenArgs, seed: u64) -> Result<SyntheticSpec> {
    if args.mirrors == 0 {
        return Err(Error::Config("--mirrors must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5e_ed);
    let weight_sum: f64 = (1..=args.mirrors).map(|i| i as f64).sum();
    let mirror_specs = (0..args.mirrors)
        .map(|i| {
            // n_x stays clear of the parametrization's singular band at
            // alpha = pi/2, where voxels cannot identify a normal.
            let nx = rng.gen_range(0.15..1.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let n = math::normalize([nx, rng.gen_range(-1.0..1.0), rng.gen_range(0.3..1.0)]);
            let gamma = rng.gen_range(0.1..0.4);
            let coverage = 0.9 * (args.mirrors - i) as f64 / weight_sum;
            (from_normal_offset(n, gamma), coverage)
        })
        .collect();
    Ok(SyntheticSpec {
        base_count: args.base_count,
        mirror_specs,
        noise_sigma: args.noise,
        attribute_profile: if args.colors == 0 {
            AttributeProfile::Uniform
        } else {
            AttributeProfile::KColor(args.colors)
        },
        seed,
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            let code = match e {
                Error::Config(_) => 64,
                Error::Reconstruction { .. } => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
