//! Low-light image enhancement built on a staged Retinex decomposition.
//!
//! The pipeline splits an image into reflectance and illumination with an
//! alternating Newton-type solver ([`solver`]), brightens the illumination
//! and rebalances the reflectance ([`adjust`]), optionally tunes the
//! adjustment against a self-synthesized guide ([`finetune`]), and scores
//! the result ([`metrics`]).

pub mod adjust;
pub mod error;
pub mod finetune;
pub mod metrics;
pub mod plane;
pub mod solver;
pub mod synthetic;

pub use adjust::{AdjustmentParams, LbsMap};
pub use error::{Error, Result};
pub use finetune::{FinetuneResult, GuideConfig};
pub use metrics::{LossWeights, MetricsReport};
pub use plane::{Axis, ColorImage, DifferenceKernel, ImagePlane};
pub use solver::{DecompositionState, ProxChoice, SolverConfig};
