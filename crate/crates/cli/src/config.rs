use std::path::PathBuf;

use swathfill::gapsim::{validate_area_fraction, DEFAULT_AREA_FRACTION};
use swathfill::synth::DEFAULT_CLASSES;
use swathfill::{FillPolicy, NeighborConfig, SentinelColor};

use crate::error::{CliError, Result};

pub const DEFAULT_IMAGES_PER_CLASS: usize = 5;
pub const DEFAULT_SPLIT: f64 = 0.90;

/// Which class subdirectories of the input corpus take part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ClassFilter {
    All,
    Only(Vec<String>),
}

impl Default for ClassFilter {
    fn default() -> Self {
        ClassFilter::Only(DEFAULT_CLASSES.iter().map(|s| s.to_string()).collect())
    }
}

impl ClassFilter {
    pub fn parse(s: &str) -> Self {
        if s == "all" {
            ClassFilter::All
        } else {
            ClassFilter::Only(
                s.split(',')
                    .map(str::trim)
                    .filter(|c| !c.is_empty())
                    .map(String::from)
                    .collect(),
            )
        }
    }

    pub fn accepts(&self, class: &str) -> bool {
        match self {
            ClassFilter::All => true,
            ClassFilter::Only(list) => list.iter().any(|c| c == class),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineConfig {
    /// Corpus root with one subdirectory per class.
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    pub area_fraction: f64,
    pub sentinel: SentinelColor,
    pub seed: u64,
    pub policies: Vec<FillPolicy>,
    /// `None` takes every image of each class.
    pub images_per_class: Option<usize>,
    /// Training fraction of the variant split.
    pub split: f64,
    pub classes: ClassFilter,
    pub jobs: usize,
    pub neighbor: NeighborConfig,
}

impl PipelineConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        Self {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            area_fraction: DEFAULT_AREA_FRACTION,
            sentinel: SentinelColor::default(),
            seed: 0,
            policies: FillPolicy::ALL.to_vec(),
            images_per_class: Some(DEFAULT_IMAGES_PER_CLASS),
            split: DEFAULT_SPLIT,
            classes: ClassFilter::default(),
            jobs: 1,
            neighbor: NeighborConfig::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        validate_area_fraction(self.area_fraction).map_err(|e| CliError::Config(e.to_string()))?;
        if !(self.split > 0.0 && self.split < 1.0) {
            return Err(CliError::Config(format!(
                "split {} must lie strictly between 0 and 1",
                self.split
            )));
        }
        if self.images_per_class == Some(0) {
            return Err(CliError::Config("images per class must be at least 1".into()));
        }
        if self.jobs == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        if let ClassFilter::Only(list) = &self.classes {
            if list.is_empty() {
                return Err(CliError::Config("class filter is empty".into()));
            }
        }
        self.neighbor
            .validate()
            .map_err(|e| CliError::Config(e.to_string()))
    }

    /// Policies deduplicated, in canonical order.
    pub fn policies(&self) -> Vec<FillPolicy> {
        let mut p = self.policies.clone();
        p.sort();
        p.dedup();
        p
    }
}
