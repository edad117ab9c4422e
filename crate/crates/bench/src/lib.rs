//! Benchmark fixtures for the retinex pipeline.

use retinex_core::finetune::synthesize_guide;
use retinex_core::solver::decompose;
use retinex_core::synthetic::dark_pair;
use retinex_core::{ColorImage, DecompositionState, GuideConfig, SolverConfig};

/// Square dark input of side `n` and its normal-light reference.
pub fn dark_input(n: usize) -> (ColorImage, ColorImage) {
    dark_pair(n, n, 0.2, 0.01, 42)
}

/// Everything fine-tuning needs: input, final decomposition and guide.
pub fn finetune_fixture(n: usize) -> (ColorImage, DecompositionState, ColorImage) {
    let (low, _) = dark_input(n);
    let state = decompose(&low, &SolverConfig::default())
        .expect("valid fixture")
        .pop()
        .expect("non-empty trace");
    let guide = synthesize_guide(&low, &GuideConfig::default()).expect("valid guide config");
    (low, state, guide)
}
