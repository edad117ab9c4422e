//! File IO, configuration and the `enhance` / `benchmark` commands on top of
//! `retinex-core`.

pub mod benchmark;
pub mod config;
pub mod enhance;
pub mod error;
pub mod io;
pub mod manifest;

pub use benchmark::{cmd_benchmark, run_benchmark, BenchmarkReport, ReportRow};
pub use config::RunConfig;
pub use enhance::{cmd_enhance, enhance_image, EnhanceOutputs, Enhancement};
pub use error::{CliError, Phase};
pub use io::{load_image, save_image, save_plane, IoError};
pub use manifest::{DatasetManifest, ManifestEntry};
