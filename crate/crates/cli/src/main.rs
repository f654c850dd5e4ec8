use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use swathfill::fill::{FillPolicy, InitialRadius, NeighborConfig};
use swathfill::gapsim::{GapPosition, DEFAULT_AREA_FRACTION};
use swathfill::synth::DEFAULT_CLASSES;
use swathfill::SentinelColor;
use swathfill_cli::config::{DEFAULT_IMAGES_PER_CLASS, DEFAULT_SPLIT};
use swathfill_cli::{
    cmd_batch, cmd_detect, cmd_evaluate, cmd_fill, cmd_inject, cmd_simulate, cmd_synth, ClassFilter, CliError,
    EvaluateArgs, FillArgs, InjectArgs, MaskSource, PipelineConfig,
};

/// Simulate, detect, fill and score swath-gap no-data regions.
#[derive(Parser, Debug)]
#[command(name = "swathfill", version)]
struct Cli {
    /// Seed for every random choice; falls back to SWATHFILL_SEED, then 0.
    #[arg(long, global = true, env = "SWATHFILL_SEED", default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the five gap variants of each selected corpus image plus a JSONL manifest.
    Simulate(PipelineArgs),
    /// Simulate, fill with each policy, evaluate, and write a summary CSV and split listings.
    Batch(PipelineArgs),
    /// Inject a single corner gap into one image.
    Inject {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Also write the gap mask (255 valid, 0 gap).
        #[arg(long)]
        mask_out: Option<PathBuf>,
        #[arg(long, default_value = "ul", value_parser = parse_position)]
        position: GapPosition,
        #[arg(long, default_value_t = DEFAULT_AREA_FRACTION)]
        area_fraction: f64,
        #[arg(long, default_value = "0,0,0", value_parser = parse_sentinel)]
        sentinel: SentinelColor,
    },
    /// Fill the gap of one image.
    Fill {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value = "neighbor", value_parser = parse_policy)]
        policy: FillPolicy,
        #[command(flatten)]
        mask: MaskArgs,
        #[command(flatten)]
        neighbor: NeighborArgs,
        /// Fill report path (default: output with a .json extension).
        #[arg(long)]
        report: Option<PathBuf>,
        /// 16-bit PNG of final neighbor sampling radii.
        #[arg(long)]
        radii: Option<PathBuf>,
    },
    /// Print gap statistics of one image as JSON.
    Detect {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "0,0,0", value_parser = parse_sentinel)]
        sentinel: SentinelColor,
        /// Treat fully transparent pixels as gap.
        #[arg(long)]
        alpha: bool,
    },
    /// Print detectability metrics of a filled image as JSON.
    Evaluate {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        filled: PathBuf,
        #[command(flatten)]
        mask: MaskArgs,
        /// Image to scan for the sentinel (default: --original).
        #[arg(long)]
        gapped: Option<PathBuf>,
        /// Policy label recorded in the report.
        #[arg(long, value_parser = parse_policy)]
        policy: Option<FillPolicy>,
    },
    /// Write a seeded synthetic corpus (one directory per class).
    Synth {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = DEFAULT_IMAGES_PER_CLASS)]
        per_class: usize,
        #[arg(long, default_value_t = 256)]
        size: u32,
    },
}

#[derive(Args, Debug)]
struct PipelineArgs {
    /// Corpus root with one subdirectory per class.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_AREA_FRACTION)]
    area_fraction: f64,
    #[arg(long, default_value = "0,0,0", value_parser = parse_sentinel)]
    sentinel: SentinelColor,
    /// Comma-separated fill policies.
    #[arg(long, value_delimiter = ',', default_value = "random,pixel,neighbor", value_parser = parse_policy)]
    policy: Vec<FillPolicy>,
    /// Images sampled per class; 0 takes all.
    #[arg(long, default_value_t = DEFAULT_IMAGES_PER_CLASS)]
    images_per_class: usize,
    /// Training fraction of the variant split.
    #[arg(long, default_value_t = DEFAULT_SPLIT)]
    split: f64,
    /// Comma-separated class names, or "all".
    #[arg(long)]
    classes: Option<String>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    neighbor: NeighborArgs,
}

#[derive(Args, Debug)]
struct MaskArgs {
    /// Mask PNG (255 valid, 0 gap). Without it the sentinel is used.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value = "0,0,0", value_parser = parse_sentinel)]
    sentinel: SentinelColor,
    /// Treat fully transparent pixels as gap when scanning for the sentinel.
    #[arg(long)]
    alpha: bool,
}

impl MaskArgs {
    fn source(&self) -> MaskSource {
        match &self.mask {
            Some(p) => MaskSource::File(p.clone()),
            None => MaskSource::Sentinel {
                color: self.sentinel,
                use_alpha: self.alpha,
            },
        }
    }
}

#[derive(Args, Debug)]
struct NeighborArgs {
    /// Candidate draws per radius before the radius grows.
    #[arg(long, default_value_t = 3)]
    draws_per_radius: u32,
    #[arg(long, default_value_t = 2.0)]
    radius_growth: f64,
    /// Fixed starting radius; default is the distance to the nearest valid pixel.
    #[arg(long)]
    initial_radius: Option<u32>,
}

impl NeighborArgs {
    fn config(&self) -> NeighborConfig {
        NeighborConfig {
            draws_per_radius: self.draws_per_radius,
            radius_growth: self.radius_growth,
            initial_radius: match self.initial_radius {
                Some(r) => InitialRadius::Fixed(r),
                None => InitialRadius::DistanceTransform,
            },
        }
    }
}

fn parse_sentinel(s: &str) -> Result<SentinelColor, String> {
    s.parse()
}

fn parse_policy(s: &str) -> Result<FillPolicy, String> {
    s.parse()
}

fn parse_position(s: &str) -> Result<GapPosition, String> {
    s.parse()
}

fn pipeline_config(args: &PipelineArgs, seed: u64) -> PipelineConfig {
    let mut config = PipelineConfig::new(&args.input, &args.out);
    config.area_fraction = args.area_fraction;
    config.sentinel = args.sentinel;
    config.seed = seed;
    config.policies = args.policy.clone();
    config.images_per_class = (args.images_per_class > 0).then_some(args.images_per_class);
    config.split = args.split;
    if let Some(c) = &args.classes {
        config.classes = ClassFilter::parse(c);
    }
    config.jobs = args.jobs;
    config.neighbor = args.neighbor.config();
    config
}

fn print_json(value: &impl serde::Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string(value).map_err(|e| CliError::Io(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let seed = cli.seed;
    match cli.command {
        Command::Simulate(args) => {
            let out = cmd_simulate(&pipeline_config(&args, seed))?;
            eprintln!(
                "wrote {} variants; manifest {}",
                out.lines().len(),
                out.manifest_path.display()
            );
        }
        Command::Batch(args) => {
            let out = cmd_batch(&pipeline_config(&args, seed))?;
            eprintln!(
                "filled {} images; summary {}",
                out.rows.len(),
                out.summary_path.display()
            );
        }
        Command::Inject {
            input,
            out,
            mask_out,
            position,
            area_fraction,
            sentinel,
        } => {
            let stats = cmd_inject(&InjectArgs {
                input,
                output: out,
                mask_output: mask_out,
                position,
                area_fraction,
                sentinel,
            })?;
            print_json(&stats)?;
        }
        Command::Fill {
            input,
            out,
            policy,
            mask,
            neighbor,
            report,
            radii,
        } => {
            let rep = cmd_fill(&FillArgs {
                input,
                mask: mask.source(),
                policy,
                seed,
                neighbor: neighbor.config(),
                output: out,
                report,
                radii,
            })?;
            print_json(&rep)?;
        }
        Command::Detect {
            input,
            sentinel,
            alpha,
        } => print_json(&cmd_detect(&input, sentinel, alpha)?)?,
        Command::Evaluate {
            original,
            filled,
            mask,
            gapped,
            policy,
        } => {
            let rec = cmd_evaluate(&EvaluateArgs {
                original,
                filled,
                mask: mask.source(),
                gapped,
                policy,
                seed: policy.map(|_| seed),
            })?;
            print_json(&rec)?;
        }
        Command::Synth { out, per_class, size } => {
            let paths = cmd_synth(&out, &DEFAULT_CLASSES, per_class, size, seed)?;
            eprintln!("wrote {} images under {}", paths.len(), out.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.into()
        }
    }
}
