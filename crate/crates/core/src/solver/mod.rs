//! Staged alternating solver for the Retinex decomposition `I = R * L`.
//!
//! Each stage updates the illumination with a Newton step on the data term,
//! then the reflectance with a quasi-Newton step on the data term plus the
//! structure-revealing prior
//!
//! ```text
//! f(R, L) = 1/2 ||I - R*L||^2 + gamma/4 * sum_{i=x,y} ||d_i R - G_i||^2
//! ```
//!
//! where `G_i` is the amplified gradient of the input. Both updates are
//! followed by an explicit proximal operator and an optional backtracking
//! safeguard that halves the step while the objective increases.

mod direction;
mod prox;

pub use direction::{amplified_gradient, newton_dir_l, newton_dir_r, AmplifiedGradient};
pub use prox::{apply_prox, apply_prox_color, gaussian_blur, EdgeWeights, ProxChoice};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::plane::{diff_conv, guarded_div, Axis, ColorImage, DifferenceKernel, ImagePlane};

/// Step-size halvings tried before a non-improving step is accepted anyway.
pub const MAX_HALVINGS: u32 = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Weight of the structure prior.
    pub gamma: f64,
    /// Amplification strength for weak gradients.
    pub lambda: f64,
    /// Gradient magnitude scale of the amplification falloff.
    pub sigma: f64,
    /// Illumination step size.
    pub eta1: f64,
    /// Reflectance step size.
    pub eta2: f64,
    pub stages: usize,
    pub eps_div: f64,
    pub prox_l: ProxChoice,
    pub prox_r: ProxChoice,
    pub safeguard: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            lambda: 10.0,
            sigma: 0.1,
            eta1: 1.0,
            eta2: 1.0,
            stages: 17,
            eps_div: crate::plane::DEFAULT_EPS_DIV,
            prox_l: ProxChoice::Identity,
            prox_r: ProxChoice::Identity,
            safeguard: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let non_negative = |name, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be >= 0, got {v}")))
            }
        };
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        };
        non_negative("gamma", self.gamma)?;
        non_negative("lambda", self.lambda)?;
        positive("sigma", self.sigma)?;
        positive("eta1", self.eta1)?;
        positive("eta2", self.eta2)?;
        positive("eps_div", self.eps_div)?;
        if self.stages == 0 {
            return Err(Error::param("stages", "must be >= 1"));
        }
        self.prox_l.validate()?;
        self.prox_r.validate()
    }
}

/// Backtracking record for one update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct StepReport {
    /// Number of times the step size was halved.
    pub halvings: u32,
    /// True when every trial increased the objective and the last one was
    /// accepted regardless.
    pub exhausted: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionState {
    pub stage: usize,
    pub illumination: ImagePlane,
    pub reflectance: ColorImage,
    pub objective: f64,
    pub l_step: StepReport,
    pub r_step: StepReport,
}

impl DecompositionState {
    /// `R * L` per channel.
    pub fn reconstruction(&self) -> ColorImage {
        self.reflectance
            .mul_plane(&self.illumination)
            .expect("state layers share dimensions")
    }
}

/// Explicit part of the objective, summed over channels.
pub fn objective(
    reflectance: &ColorImage,
    illumination: &ImagePlane,
    img: &ColorImage,
    grad: &AmplifiedGradient,
    gamma: f64,
) -> Result<f64> {
    reflectance.check_same(img)?;
    reflectance.check_plane(illumination)?;
    let mut data = 0.0;
    let mut prior = 0.0;
    for c in 0..3 {
        let r_ch = reflectance.channel(c);
        data += r_ch
            .as_slice()
            .iter()
            .zip(illumination.as_slice())
            .zip(img.channel(c).as_slice())
            .map(|((&r, &l), &i)| (i - r * l).powi(2))
            .sum::<f64>();
        if gamma > 0.0 {
            for axis in Axis::BOTH {
                let d = diff_conv(r_ch, DifferenceKernel::new(axis))?;
                prior += d
                    .as_slice()
                    .iter()
                    .zip(grad.along(axis).channel(c).as_slice())
                    .map(|(a, g)| (a - g).powi(2))
                    .sum::<f64>();
            }
        }
    }
    Ok(0.5 * data + 0.25 * gamma * prior)
}

/// Max-channel illumination and the matching guarded reflectance.
pub fn initialize(img: &ColorImage, eps_div: f64) -> (ImagePlane, ColorImage) {
    let l0 = img.max_channel();
    let r0 = img
        .map_channels(|_, ch| {
            ch.zip_map(&l0, |i, l| guarded_div(i, l, eps_div))
                .expect("same dimensions")
        })
        .expect("same dimensions");
    (l0, r0)
}

/// Runs `cfg.stages` stages and returns every state, initialization included.
pub fn decompose(img: &ColorImage, cfg: &SolverConfig) -> Result<Vec<DecompositionState>> {
    cfg.validate()?;
    let grad = amplified_gradient(img, cfg.lambda, cfg.sigma)?;
    let weights = EdgeWeights::from_image(img, cfg.sigma);

    let (mut l, mut r) = initialize(img, cfg.eps_div);
    let mut f = objective(&r, &l, img, &grad, cfg.gamma)?;
    if !f.is_finite() {
        return Err(Error::NonFiniteObjective { stage: 0 });
    }

    let mut trace = Vec::with_capacity(cfg.stages + 1);
    trace.push(DecompositionState {
        stage: 0,
        illumination: l.clone(),
        reflectance: r.clone(),
        objective: f,
        l_step: StepReport::default(),
        r_step: StepReport::default(),
    });

    for stage in 1..=cfg.stages {
        let d_l = newton_dir_l(&r, &l, img, cfg.eps_div)?;
        let (l_next, f_l, l_step) = line_search(cfg, f, cfg.eta1, stage, |t| {
            let trial = apply_prox(&l.zip_map(&d_l, |v, d| v - t * d)?, cfg.prox_l, &weights)?;
            let value = objective(&r, &trial, img, &grad, cfg.gamma)?;
            Ok((trial, value))
        })?;
        l = l_next;

        let d_r = newton_dir_r(&r, &l, img, &grad, cfg.gamma, cfg.eps_div)?;
        let (r_next, f_r, r_step) = line_search(cfg, f_l, cfg.eta2, stage, |t| {
            let stepped = r.try_map_channels(|c, ch| ch.zip_map(d_r.channel(c), |v, d| v - t * d))?;
            let trial = apply_prox_color(&stepped, cfg.prox_r, &weights)?;
            let value = objective(&trial, &l, img, &grad, cfg.gamma)?;
            Ok((trial, value))
        })?;
        r = r_next;
        f = f_r;

        trace.push(DecompositionState {
            stage,
            illumination: l.clone(),
            reflectance: r.clone(),
            objective: f,
            l_step,
            r_step,
        });
    }
    Ok(trace)
}

/// Tries `eta, eta/2, ...` until the objective does not increase, or accepts
/// the last trial after [`MAX_HALVINGS`] halvings. Without the safeguard the
/// first trial is taken.
fn line_search<T>(
    cfg: &SolverConfig,
    current: f64,
    eta: f64,
    stage: usize,
    mut trial: impl FnMut(f64) -> Result<(T, f64)>,
) -> Result<(T, f64, StepReport)> {
    let mut step = eta;
    let mut halvings = 0;
    loop {
        let (candidate, value) = trial(step)?;
        if !value.is_finite() {
            return Err(Error::NonFiniteObjective { stage });
        }
        if !cfg.safeguard || value <= current {
            return Ok((candidate, value, StepReport { halvings, exhausted: false }));
        }
        if halvings == MAX_HALVINGS {
            return Ok((candidate, value, StepReport { halvings, exhausted: true }));
        }
        step *= 0.5;
        halvings += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn textured(h: usize, w: usize) -> ColorImage {
        ColorImage::from_fn(h, w, |r, c| {
            let x = c as f64 / w as f64;
            let y = r as f64 / h as f64;
            let light = 0.15 + 0.5 * x * (1.0 - 0.5 * y);
            let albedo = if (r / 4 + c / 4) % 2 == 0 { 0.9 } else { 0.55 };
            [albedo * light, 0.8 * albedo * light, 0.6 * light]
        })
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = [
            SolverConfig { stages: 0, ..Default::default() },
            SolverConfig { gamma: -0.1, ..Default::default() },
            SolverConfig { sigma: 0.0, ..Default::default() },
            SolverConfig { eta1: 0.0, ..Default::default() },
            SolverConfig { eps_div: 0.0, ..Default::default() },
            SolverConfig { lambda: f64::NAN, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::InvalidParameter { .. })), "{cfg:?}");
        }
    }

    #[test]
    fn objective_examples() {
        let r = ColorImage::from_fn(3, 3, |r, c| [0.5 + 0.1 * r as f64, 0.7, 0.2 * c as f64]);
        let l = ImagePlane::from_fn(3, 3, |r, c| 0.3 + 0.05 * (r + c) as f64);
        let exact = r.mul_plane(&l).unwrap();
        let g = amplified_gradient(&exact, 10.0, 0.1).unwrap();
        assert_eq!(objective(&r, &l, &exact, &g, 0.0).unwrap(), 0.0);

        let zero = ColorImage::filled(1, 1, [0.0; 3]);
        let one = ColorImage::from_channels([
            ImagePlane::filled(1, 1, 1.0),
            ImagePlane::filled(1, 1, 0.0),
            ImagePlane::filled(1, 1, 0.0),
        ])
        .unwrap();
        let v = objective(&zero, &ImagePlane::filled(1, 1, 3.7), &one, &AmplifiedGradient::zeros(1, 1), 0.0)
            .unwrap();
        assert_eq!(v, 0.5);
    }

    #[test]
    fn objective_prior_matches_double_loop() {
        let r = ColorImage::from_fn(3, 3, |r, c| [(r * 3 + c) as f64 * 0.1, 0.5, ((r + c) % 2) as f64]);
        let l = ImagePlane::filled(3, 3, 1.0);
        let img = r.clone();
        let gx = ColorImage::from_fn(3, 3, |r, c| [0.01 * r as f64, -0.02 * c as f64, 0.03]);
        let gy = ColorImage::from_fn(3, 3, |r, c| [0.02, 0.01 * (r + c) as f64, -0.01]);
        let g = AmplifiedGradient { gx: gx.clone(), gy: gy.clone() };
        let gamma = 0.7;

        let mut naive = 0.0;
        for ch in 0..3 {
            let p = r.channel(ch);
            for y in 0..3usize {
                for x in 0..3usize {
                    let dx = p.get(y, x.saturating_sub(1)) - p.get(y, (x + 1).min(2));
                    let dy = p.get(y.saturating_sub(1), x) - p.get((y + 1).min(2), x);
                    naive += (dx - gx.channel(ch).get(y, x)).powi(2);
                    naive += (dy - gy.channel(ch).get(y, x)).powi(2);
                }
            }
        }
        naive *= gamma / 4.0;
        assert_abs_diff_eq!(objective(&r, &l, &img, &g, gamma).unwrap(), naive, epsilon = 1e-12);
    }

    #[test]
    fn one_stage_returns_two_states() {
        let cfg = SolverConfig { stages: 1, ..Default::default() };
        let trace = decompose(&textured(8, 8), &cfg).unwrap();
        assert_eq!(trace.len(), 2);
        assert_eq!(trace[0].stage, 0);
        assert_eq!(trace[1].stage, 1);
    }

    #[test]
    fn zero_stages_rejected() {
        let cfg = SolverConfig { stages: 0, ..Default::default() };
        assert!(decompose(&textured(8, 8), &cfg).is_err());
    }

    #[test]
    fn initialization_is_max_channel() {
        let img = textured(6, 6);
        let (l, r) = initialize(&img, 1e-4);
        assert_eq!(l, img.max_channel());
        let rebuilt = r.mul_plane(&l).unwrap();
        for c in 0..3 {
            for (a, b) in rebuilt.channel(c).as_slice().iter().zip(img.channel(c).as_slice()) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-15);
            }
        }
        assert!(r.max() <= 1.0 + 1e-15);
    }

    #[test]
    fn exact_factorization_is_a_fixed_point_without_prior() {
        let img = textured(8, 8);
        let cfg = SolverConfig { stages: 1, gamma: 0.0, ..Default::default() };
        let trace = decompose(&img, &cfg).unwrap();
        let (a, b) = (&trace[0], &trace[1]);
        for (x, y) in a.illumination.as_slice().iter().zip(b.illumination.as_slice()) {
            assert_abs_diff_eq!(x, y, epsilon = 1e-12);
        }
        for c in 0..3 {
            for (x, y) in a.reflectance.channel(c).as_slice().iter().zip(b.reflectance.channel(c).as_slice()) {
                assert_abs_diff_eq!(x, y, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn safeguarded_trace_is_monotone_and_non_negative() {
        let img = textured(16, 16);
        let trace = decompose(&img, &SolverConfig::default()).unwrap();
        assert_eq!(trace.len(), 18);
        for pair in trace.windows(2) {
            assert!(pair[1].objective <= pair[0].objective + 1e-12);
        }
        for s in &trace {
            assert!(s.illumination.min() >= 0.0);
            assert!(s.reflectance.min() >= 0.0);
            assert!(s.objective.is_finite());
        }
    }

    #[test]
    fn smoothing_proxes_keep_states_valid() {
        let img = textured(16, 16);
        for (pl, pr) in [
            (ProxChoice::GaussianSmooth { width: 1.0 }, ProxChoice::Identity),
            (ProxChoice::WeightedSmooth { strength: 0.5 }, ProxChoice::WeightedSmooth { strength: 0.2 }),
        ] {
            let cfg = SolverConfig { prox_l: pl, prox_r: pr, stages: 5, ..Default::default() };
            let trace = decompose(&img, &cfg).unwrap();
            for s in &trace {
                assert!(s.illumination.min() >= 0.0 && s.reflectance.min() >= 0.0);
                let accepted_without_exhaustion = !s.l_step.exhausted && !s.r_step.exhausted;
                if accepted_without_exhaustion && s.stage > 0 {
                    assert!(s.objective <= trace[s.stage - 1].objective);
                }
            }
        }
    }

    #[test]
    fn unsafeguarded_run_takes_full_steps() {
        let img = textured(12, 12);
        let cfg = SolverConfig { safeguard: false, stages: 3, ..Default::default() };
        for s in decompose(&img, &cfg).unwrap() {
            assert_eq!(s.l_step, StepReport::default());
            assert_eq!(s.r_step, StepReport::default());
        }
    }
}
