//! Single-image commands: inject, fill, detect, evaluate, synth.

use std::fs;
use std::path::{Path, PathBuf};

use swathfill::detect::detect;
use swathfill::fill::{fill, FillPolicy, FillReport, NeighborConfig};
use swathfill::gapsim::{inject_gap, GapPosition, GapSpec};
use swathfill::metrics::{evaluate, ReportRecord};
use swathfill::raster::{load_mask, load_source, save_mask, save_raster, GapMask, SourceImage};
use swathfill::synth::{synthetic_corpus, write_corpus};
use swathfill::{GapStats, SentinelColor};

use crate::error::{CliError, Result};

/// Where a gap mask comes from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum MaskSource {
    /// Scan an image for the sentinel color (and zero alpha when asked).
    Sentinel { color: SentinelColor, use_alpha: bool },
    /// Read a grayscale mask PNG (255 valid, 0 gap).
    File(PathBuf),
}

impl MaskSource {
    pub fn resolve(&self, image: &SourceImage) -> Result<GapMask> {
        let mask = match self {
            MaskSource::Sentinel { color, use_alpha } => detect(image, *color, *use_alpha).0,
            MaskSource::File(path) => load_mask(path)?,
        };
        if mask.dimensions() != image.raster.dimensions() {
            return Err(swathfill::Error::DimensionMismatch {
                expected: image.raster.dimensions(),
                actual: mask.dimensions(),
            }
            .into());
        }
        Ok(mask)
    }
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[derive(Clone, Debug)]
pub struct InjectArgs {
    pub input: PathBuf,
    pub output: PathBuf,
    pub mask_output: Option<PathBuf>,
    pub position: GapPosition,
    pub area_fraction: f64,
    pub sentinel: SentinelColor,
}

/// Injects one corner gap; returns the statistics of the written mask.
pub fn cmd_inject(args: &InjectArgs) -> Result<GapStats> {
    let source = load_source(&args.input)?;
    let spec = GapSpec::square(args.position, args.area_fraction, args.sentinel);
    let injected = inject_gap(&source.raster, &spec)?;
    if let Some(w) = injected.warning() {
        log::warn!("{}: {w}", args.input.display());
    }
    save_raster(&injected.raster, &args.output)?;
    if let Some(path) = &args.mask_output {
        save_mask(&injected.mask, path)?;
    }
    Ok(swathfill::gap_stats(&injected.mask))
}

#[derive(Clone, Debug)]
pub struct FillArgs {
    pub input: PathBuf,
    pub mask: MaskSource,
    pub policy: FillPolicy,
    pub seed: u64,
    pub neighbor: NeighborConfig,
    pub output: PathBuf,
    /// Defaults to the output path with a `.json` extension.
    pub report: Option<PathBuf>,
    /// Optional 16-bit PNG of final neighbor radii.
    pub radii: Option<PathBuf>,
}

pub fn cmd_fill(args: &FillArgs) -> Result<FillReport> {
    let source = load_source(&args.input)?;
    let mask = args.mask.resolve(&source)?;
    let (filled, report) = fill(&source.raster, &mask, args.policy, args.seed, &args.neighbor)?;
    save_raster(&filled, &args.output)?;
    let report_path = args
        .report
        .clone()
        .unwrap_or_else(|| args.output.with_extension("json"));
    write_json(&report_path, &report)?;
    if let Some(path) = &args.radii {
        match &report.neighbor_final_radii {
            Some(map) => map.save_png(path)?,
            None => log::warn!("--radii is only produced by the neighbor policy"),
        }
    }
    Ok(report)
}

pub fn cmd_detect(input: &Path, sentinel: SentinelColor, use_alpha: bool) -> Result<GapStats> {
    let source = load_source(input)?;
    Ok(detect(&source, sentinel, use_alpha).1)
}

#[derive(Clone, Debug)]
pub struct EvaluateArgs {
    pub original: PathBuf,
    pub filled: PathBuf,
    pub mask: MaskSource,
    /// Image scanned for the sentinel; defaults to `original`.
    pub gapped: Option<PathBuf>,
    pub policy: Option<FillPolicy>,
    pub seed: Option<u64>,
}

pub fn cmd_evaluate(args: &EvaluateArgs) -> Result<ReportRecord> {
    let original = load_source(&args.original)?;
    let filled = load_source(&args.filled)?;
    let mask = match (&args.mask, &args.gapped) {
        (MaskSource::Sentinel { .. }, Some(gapped)) => args.mask.resolve(&load_source(gapped)?)?,
        _ => args.mask.resolve(&original)?,
    };
    let report = evaluate(&original.raster, &filled.raster, &mask)?;
    Ok(ReportRecord {
        report,
        policy: args.policy,
        seed: args.seed,
    })
}

/// Writes a seeded synthetic corpus in class-per-directory layout.
pub fn cmd_synth(out: &Path, classes: &[&str], per_class: usize, size: u32, seed: u64) -> Result<Vec<PathBuf>> {
    if per_class == 0 || size < 8 {
        return Err(CliError::Config("synth needs --per-class >= 1 and --size >= 8".into()));
    }
    let corpus = synthetic_corpus(classes, per_class, size, size, seed);
    Ok(write_corpus(out, &corpus)?)
}
