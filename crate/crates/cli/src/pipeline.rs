//! Corpus-level pipelines: `simulate` and `batch`.
//!
//! Work is split per source image and may run on a bounded rayon pool, but
//! every result is collected back in input order before anything shared
//! (manifests, CSV, split listings) is written, so outputs do not depend on
//! `jobs`.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use swathfill::fill::{fill, FillPolicy};
use swathfill::gapsim::{make_variants, GapPosition, ManifestEntry, ManifestLine, Variant, VariantManifest};
use swathfill::metrics::evaluate;
use swathfill::raster::{load_raster, save_mask, save_raster, Raster};
use swathfill::rng::{derive_seed, stream};

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const FILLS_FILE: &str = "fills.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SPLIT_DIR: &str = "split";

const IMAGE_EXTENSIONS: [&str; 3] = ["png", "ppm", "pnm"];
const SPLIT_STREAM: u64 = 0x5_9117;

/// One selected corpus image.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceItem {
    pub class: String,
    pub path: PathBuf,
    pub stem: String,
}

/// FNV-1a; stable across runs and platforms.
fn stable_hash(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn is_image(path: &Path) -> bool {
    path.extension()
        .and_then(|e| e.to_str())
        .map(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
        .unwrap_or(false)
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut out: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| CliError::io(dir, err)))
        .collect::<Result<_>>()?;
    out.sort();
    Ok(out)
}

/// Lists the class subdirectories accepted by the filter and picks the
/// seeded image subset from each, sorted by class then path.
pub fn discover(config: &PipelineConfig) -> Result<Vec<SourceItem>> {
    if !config.input_dir.is_dir() {
        return Err(CliError::Config(format!(
            "input {} is not a directory",
            config.input_dir.display()
        )));
    }
    let mut items = Vec::new();
    for dir in sorted_entries(&config.input_dir)? {
        if !dir.is_dir() {
            continue;
        }
        let Some(class) = dir.file_name().and_then(|n| n.to_str()).map(String::from) else {
            continue;
        };
        if !config.classes.accepts(&class) {
            continue;
        }
        let files: Vec<PathBuf> = sorted_entries(&dir)?
            .into_iter()
            .filter(|p| p.is_file() && is_image(p))
            .collect();
        let chosen: Vec<PathBuf> = match config.images_per_class {
            Some(n) if n < files.len() => {
                let mut rng = stream(derive_seed(config.seed, stable_hash(&class)));
                let mut idx = rand::seq::index::sample(&mut rng, files.len(), n).into_vec();
                idx.sort_unstable();
                idx.into_iter().map(|i| files[i].clone()).collect()
            }
            Some(n) => {
                if files.len() < n {
                    log::warn!("class {class} has only {} image(s), wanted {n}", files.len());
                }
                files
            }
            None => files,
        };
        for path in chosen {
            let stem = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or("image")
                .to_string();
            items.push(SourceItem {
                class: class.clone(),
                path,
                stem,
            });
        }
    }
    if items.is_empty() {
        return Err(CliError::Config(format!(
            "no images found under {} for the selected classes",
            config.input_dir.display()
        )));
    }
    Ok(items)
}

pub fn variant_path(config: &PipelineConfig, item: &SourceItem, position: GapPosition) -> PathBuf {
    config
        .output_dir
        .join(&item.class)
        .join(format!("{}_{}.png", item.stem, position))
}

pub fn variant_mask_path(config: &PipelineConfig, item: &SourceItem, position: GapPosition) -> PathBuf {
    config
        .output_dir
        .join(&item.class)
        .join(format!("{}_{}_mask.png", item.stem, position))
}

pub fn filled_path(config: &PipelineConfig, item: &SourceItem, position: GapPosition, policy: FillPolicy) -> PathBuf {
    config
        .output_dir
        .join(format!("filled_{policy}"))
        .join(&item.class)
        .join(format!("{}_{}.png", item.stem, position))
}

fn item_seed(config: &PipelineConfig, item: &SourceItem) -> u64 {
    let name = item.path.file_name().and_then(|n| n.to_str()).unwrap_or(&item.stem);
    derive_seed(config.seed, stable_hash(&format!("{}/{}", item.class, name)))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

/// Writes the five variants and their masks for one source.
fn simulate_item(config: &PipelineConfig, item: &SourceItem) -> Result<(Raster, Vec<Variant>, VariantManifest)> {
    let source = load_raster(&item.path)?;
    let variants = make_variants(&source, config.sentinel, config.area_fraction, item_seed(config, item))?;
    create_dir(&config.output_dir.join(&item.class))?;
    let mut entries = Vec::with_capacity(variants.len());
    for v in &variants {
        let out = variant_path(config, item, v.position);
        let mask = variant_mask_path(config, item, v.position);
        save_raster(&v.raster, &out)?;
        save_mask(&v.mask, &mask)?;
        let warning = (v.preexisting_sentinel > 0).then(|| {
            format!(
                "{} source pixel(s) already equal the sentinel; use the mask file",
                v.preexisting_sentinel
            )
        });
        entries.push(ManifestEntry {
            position: v.position,
            output_path: out,
            seed: v.seed,
            mask_path: Some(mask),
            warning,
        });
    }
    let manifest = VariantManifest::new(item.path.clone(), item.class.clone(), entries)?;
    Ok((source, variants, manifest))
}

fn run_pool<T: Send>(jobs: usize, items: &[SourceItem], f: impl Fn(&SourceItem) -> T + Sync + Send) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::Config(format!("cannot build worker pool: {e}")))?;
    Ok(pool.install(|| items.par_iter().map(&f).collect()))
}

fn write_jsonl<T: Serialize>(path: &Path, lines: &[T]) -> Result<()> {
    let mut buf = Vec::new();
    for line in lines {
        serde_json::to_writer(&mut buf, line).map_err(|e| CliError::io(path, e))?;
        buf.push(b'\n');
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

#[derive(Clone, Debug)]
pub struct SimulateOutput {
    pub manifest_path: PathBuf,
    pub manifests: Vec<VariantManifest>,
}

impl SimulateOutput {
    pub fn lines(&self) -> Vec<ManifestLine> {
        self.manifests.iter().flat_map(|m| m.lines()).collect()
    }
}

/// Removes every file the simulate stage would have produced.
fn remove_simulate_outputs(config: &PipelineConfig, items: &[SourceItem]) {
    for item in items {
        for pos in GapPosition::ALL {
            let _ = fs::remove_file(variant_path(config, item, pos));
            let _ = fs::remove_file(variant_mask_path(config, item, pos));
        }
        let _ = fs::remove_dir(config.output_dir.join(&item.class));
    }
    let _ = fs::remove_file(config.output_dir.join(MANIFEST_FILE));
}

/// Writes five gap variants per selected image plus a JSONL manifest.
/// On failure every output of this run is removed again.
pub fn cmd_simulate(config: &PipelineConfig) -> Result<SimulateOutput> {
    config.validate()?;
    let items = discover(config)?;
    create_dir(&config.output_dir)?;
    let run = || -> Result<SimulateOutput> {
        let results = run_pool(config.jobs, &items, |item| simulate_item(config, item).map(|(_, _, m)| m))?;
        let manifests = results.into_iter().collect::<Result<Vec<_>>>()?;
        let out = SimulateOutput {
            manifest_path: config.output_dir.join(MANIFEST_FILE),
            manifests,
        };
        write_jsonl(&out.manifest_path, &out.lines())?;
        Ok(out)
    };
    run().inspect_err(|_| remove_simulate_outputs(config, &items))
}

/// One row of the batch summary CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub class: String,
    pub image: String,
    pub position: GapPosition,
    pub policy: FillPolicy,
    pub seed: u64,
    pub boundary_gradient_ratio: f64,
    pub histogram_divergence: f64,
}

/// Provenance of one filled image.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FillLine {
    pub class: String,
    pub variant: String,
    pub mask: String,
    pub position: GapPosition,
    pub policy: FillPolicy,
    pub seed: u64,
    pub pixels_filled: usize,
    pub output: String,
}

#[derive(Clone, Debug)]
pub struct BatchOutput {
    pub manifest_path: PathBuf,
    pub summary_path: PathBuf,
    pub fills_path: PathBuf,
    pub rows: Vec<SummaryRow>,
    pub fills: Vec<FillLine>,
    pub manifests: Vec<VariantManifest>,
    pub train: Vec<PathBuf>,
    pub val: Vec<PathBuf>,
}

struct ItemResult {
    manifest: VariantManifest,
    rows: Vec<SummaryRow>,
    fills: Vec<FillLine>,
}

fn batch_item(config: &PipelineConfig, item: &SourceItem, policies: &[FillPolicy]) -> Result<ItemResult> {
    let (source, variants, manifest) = simulate_item(config, item)?;
    let image = item
        .path
        .file_name()
        .and_then(|n| n.to_str())
        .unwrap_or(&item.stem)
        .to_string();
    let mut rows = Vec::new();
    let mut fills = Vec::new();
    for v in variants.iter().filter(|v| v.position != GapPosition::Absent) {
        for &policy in policies {
            let (filled, report) = fill(&v.raster, &v.mask, policy, v.seed, &config.neighbor)?;
            let out = filled_path(config, item, v.position, policy);
            if let Some(dir) = out.parent() {
                create_dir(dir)?;
            }
            save_raster(&filled, &out)?;
            let metrics = evaluate(&source, &filled, &v.mask)?;
            rows.push(SummaryRow {
                class: item.class.clone(),
                image: image.clone(),
                position: v.position,
                policy,
                seed: v.seed,
                boundary_gradient_ratio: metrics.boundary_gradient_ratio,
                histogram_divergence: metrics.histogram_divergence,
            });
            fills.push(FillLine {
                class: item.class.clone(),
                variant: variant_path(config, item, v.position).display().to_string(),
                mask: variant_mask_path(config, item, v.position).display().to_string(),
                position: v.position,
                policy,
                seed: v.seed,
                pixels_filled: report.pixels_filled,
                output: out.display().to_string(),
            });
        }
    }
    Ok(ItemResult { manifest, rows, fills })
}

fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::io(path, e))?;
    for row in rows {
        w.serialize(row).map_err(|e| CliError::io(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn write_listing(path: &Path, paths: &[PathBuf]) -> Result<()> {
    let mut buf = Vec::new();
    for p in paths {
        writeln!(buf, "{}", p.display()).expect("writing to a Vec cannot fail");
    }
    fs::write(path, buf).map_err(|e| CliError::io(path, e))
}

/// Seeded train/validation partition of `n` items; returns sorted index sets.
pub fn split_indices(n: usize, train_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut stream(derive_seed(seed, SPLIT_STREAM)));
    let mut n_train = (train_fraction * n as f64).round() as usize;
    if n >= 2 {
        n_train = n_train.clamp(1, n - 1);
    }
    let (train, val) = order.split_at(n_train.min(n));
    let (mut train, mut val) = (train.to_vec(), val.to_vec());
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// simulate, fill with every selected policy, evaluate, and write
/// `summary.csv`, `fills.jsonl` and the split listings.
///
/// On the first failing image (in input order) the rows of all earlier
/// images are written to `summary.csv.partial` and the error is returned.
pub fn cmd_batch(config: &PipelineConfig) -> Result<BatchOutput> {
    config.validate()?;
    let items = discover(config)?;
    create_dir(&config.output_dir)?;
    let policies = config.policies();
    if policies.is_empty() {
        return Err(CliError::Config("no fill policies selected".into()));
    }

    let results = run_pool(config.jobs, &items, |item| batch_item(config, item, &policies))?;

    let summary_path = config.output_dir.join(SUMMARY_FILE);
    let mut manifests = Vec::with_capacity(items.len());
    let mut rows = Vec::new();
    let mut fills = Vec::new();
    for result in results {
        match result {
            Ok(r) => {
                manifests.push(r.manifest);
                rows.extend(r.rows);
                fills.extend(r.fills);
            }
            Err(e) => {
                let partial = config.output_dir.join(format!("{SUMMARY_FILE}.partial"));
                write_summary(&partial, &rows)?;
                let _ = fs::remove_file(&summary_path);
                return Err(e);
            }
        }
    }

    let manifest_path = config.output_dir.join(MANIFEST_FILE);
    let lines: Vec<ManifestLine> = manifests.iter().flat_map(|m| m.lines()).collect();
    write_jsonl(&manifest_path, &lines)?;
    let fills_path = config.output_dir.join(FILLS_FILE);
    write_jsonl(&fills_path, &fills)?;
    write_summary(&summary_path, &rows)?;
    let _ = fs::remove_file(config.output_dir.join(format!("{SUMMARY_FILE}.partial")));

    // Split at variant granularity; every fill set reuses the same partition.
    let variants: Vec<(&VariantManifest, &ManifestEntry)> = manifests
        .iter()
        .flat_map(|m| m.entries().iter().map(move |e| (m, e)))
        .collect();
    let (train_idx, val_idx) = split_indices(variants.len(), config.split, config.seed);
    let split_dir = config.output_dir.join(SPLIT_DIR);
    create_dir(&split_dir)?;
    let pick = |idx: &[usize], policy: Option<FillPolicy>| -> Vec<PathBuf> {
        idx.iter()
            .map(|&i| {
                let (m, e) = variants[i];
                match policy {
                    Some(p) if e.position != GapPosition::Absent => {
                        let item = SourceItem {
                            class: m.class_label.clone(),
                            path: m.source_path.clone(),
                            stem: stem_of(&m.source_path),
                        };
                        filled_path(config, &item, e.position, p)
                    }
                    _ => e.output_path.clone(),
                }
            })
            .collect()
    };
    let train = pick(&train_idx, None);
    let val = pick(&val_idx, None);
    write_listing(&split_dir.join("train.txt"), &train)?;
    write_listing(&split_dir.join("val.txt"), &val)?;
    for &p in &policies {
        write_listing(&split_dir.join(format!("{p}_train.txt")), &pick(&train_idx, Some(p)))?;
        write_listing(&split_dir.join(format!("{p}_val.txt")), &pick(&val_idx, Some(p)))?;
    }

    Ok(BatchOutput {
        manifest_path,
        summary_path,
        fills_path,
        rows,
        fills,
        manifests,
        train,
        val,
    })
}

fn stem_of(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("image")
        .to_string()
}
