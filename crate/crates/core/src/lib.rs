//! Simulate, detect and fill swath-gap no-data regions in RGB rasters.
//!
//! The crate is organized bottom-up:
//!
//! * [`raster`]: pixel grids, validity masks, sentinel colors and PNG/PPM I/O.
//! * [`gapsim`]: corner-square and polygon gap injection, five-variant sets.
//! * [`detect`]: mask recovery, connected components and the usability rule.
//! * [`fill`]: the random, pixel and neighbor fill policies.
//! * [`metrics`]: boundary-gradient and histogram-divergence detectability.
//! * [`synth`]: seeded synthetic scenes for tests and demos.

pub mod detect;
pub mod distance;
pub mod error;
pub mod fill;
pub mod gapsim;
pub mod metrics;
pub mod raster;
pub mod rng;
pub mod synth;

pub use detect::{detect, gap_stats, GapStats};
pub use error::{Error, Result};
pub use fill::{fill, FillPolicy, FillReport, InitialRadius, NeighborConfig};
pub use gapsim::{inject_gap, make_variants, GapPosition, GapShape, GapSpec};
pub use metrics::{compare_policies, evaluate, DetectabilityReport};
pub use raster::{load_raster, save_raster, GapMask, Raster, Rgb, SentinelColor};
