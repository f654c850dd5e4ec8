//! Command implementations behind the `swathfill` binary.
//!
//! Exit codes: 0 success, 2 usage or configuration, 3 I/O, 4 degenerate data.

pub mod config;
pub mod error;
pub mod ops;
pub mod pipeline;

pub use config::{ClassFilter, PipelineConfig};
pub use error::{CliError, Result};
pub use ops::{cmd_detect, cmd_evaluate, cmd_fill, cmd_inject, cmd_synth, EvaluateArgs, FillArgs, InjectArgs, MaskSource};
pub use pipeline::{cmd_batch, cmd_simulate, BatchOutput, SimulateOutput, SummaryRow};
