//! Empirical convergence rates of NEED-D against the predicted exponent.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{mean_se, FrameConfig, ModelChoice};
use crate::error::{Error, Result};
use crate::estimators::{make_threshold_plan, need_d, DEFAULT_KAPPA};
use crate::frame::NeedletFrame;
use crate::models::{derive_seed, sample_observation, SvdModel};

pub const MIN_RUNS: usize = 10;
pub const MIN_DECADES: f64 = 4.0;

/// Besov regularity of a target and the exponent it predicts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateTarget {
    pub s: f64,
    pub pi: f64,
    pub r: f64,
    pub nu: f64,
    /// `μ = s / (s + ν + 1/2)` for `π = 2`.
    pub mu: f64,
}

impl RateTarget {
    /// A target in `B^s_{2,r}` observed through a problem of ill-posedness `nu`.
    pub fn sobolev(s: f64, nu: f64) -> Result<Self> {
        if !(s > 0.0) || !(nu >= 0.0) {
            return Err(Error::Domain(format!(
                "need s > 0 and nu >= 0, got s = {s}, nu = {nu}"
            )));
        }
        Ok(Self {
            s,
            pi: 2.0,
            r: 2.0,
            nu,
            mu: s / (s + nu + 0.5),
        })
    }
}

/// `f_k = (1 + k)^{-(s + 1/2)} cos(1.3 k)` up to `cutoff`, zero above.
pub fn smooth_coeffs(s: f64, cutoff: usize, len: usize) -> Vec<f64> {
    (0..len)
        .map(|k| {
            if k > cutoff {
                0.0
            } else {
                (1.0 + k as f64).powf(-(s + 0.5)) * (1.3 * k as f64).cos()
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateStudy {
    pub model: String,
    pub target: RateTarget,
    pub epsilons: Vec<f64>,
    pub mean_error: Vec<f64>,
    pub se_error: Vec<f64>,
    /// Slope of `ln(error)` on `ln(ε)`.
    pub slope: f64,
    pub slope_se: f64,
    /// `|slope - μ|` in standard errors.
    pub gap: f64,
}

impl RateStudy {
    pub fn within(&self, sigmas: f64) -> bool {
        self.gap <= sigmas
    }
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let k = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if xs.len() < 3 || !(sxx > 0.0) || ys.iter().any(|y| !y.is_finite()) {
        return Err(Error::Degenerate(
            "rate fit needs three distinct finite points".into(),
        ));
    }
    let slope = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (x - mx) * (y - my))
        .sum::<f64>()
        / sxx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - my - slope * (x - mx)).powi(2))
        .sum();
    Ok((slope, (rss / (k - 2.0) / sxx).sqrt()))
}

/// Coefficient-space L2 error of NEED-D over `runs` replications per noise level.
#[allow(clippy::too_many_arguments)]
pub fn rate_study(
    model: &SvdModel,
    frame: &NeedletFrame,
    coeffs: &[f64],
    epsilons: &[f64],
    runs: usize,
    seed: u64,
    kappa: f64,
    target: RateTarget,
) -> Result<RateStudy> {
    if runs < MIN_RUNS {
        return Err(Error::Domain(format!(
            "a rate study needs at least {MIN_RUNS} runs"
        )));
    }
    let (lo, hi) = epsilons
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &e| {
            (lo.min(e), hi.max(e))
        });
    if !((hi / lo).log10() >= MIN_DECADES - 1e-9) {
        return Err(Error::Domain(format!(
            "noise levels span {:.2} decades, need {MIN_DECADES}",
            (hi / lo).log10()
        )));
    }
    let mut mean_error = Vec::with_capacity(epsilons.len());
    let mut se_error = Vec::with_capacity(epsilons.len());
    for (ei, &eps) in epsilons.iter().enumerate() {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidEpsilon(eps));
        }
        let plan = make_threshold_plan(frame, model, eps, kappa)?;
        let errors = (0..runs)
            .into_par_iter()
            .map(|r| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, r as u32, 0, ei as u16));
                let obs = sample_observation(model, coeffs, eps, &mut rng)?;
                let est = need_d(frame, model, &obs, &plan)?;
                let err2: f64 = (0..model.len())
                    .map(|k| {
                        let e = est.coeffs.get(k).copied().unwrap_or(0.0);
                        (e - coeffs.get(k).copied().unwrap_or(0.0)).powi(2)
                    })
                    .sum();
                Ok(err2.sqrt())
            })
            .collect::<Result<Vec<f64>>>()
            .map_err(|e| e.context(format!("{} at epsilon {eps}", model.name())))?;
        let (m, se) = mean_se(&errors);
        mean_error.push(m);
        se_error.push(se);
    }
    let xs: Vec<f64> = epsilons.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = mean_error.iter().map(|e| e.ln()).collect();
    let (slope, slope_se) = fit_slope(&xs, &ys)?;
    let gap = if slope_se > 0.0 {
        (slope - target.mu).abs() / slope_se
    } else if slope == target.mu {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(RateStudy {
        model: model.name().to_string(),
        target,
        epsilons: epsilons.to_vec(),
        mean_error,
        se_error,
        slope,
        slope_se,
        gap,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct RateConfig {
    pub models: Vec<ModelChoice>,
    pub s: f64,
    /// Last nonzero coefficient of the test signal.
    pub cutoff: usize,
    pub epsilons: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub kmax: usize,
    pub kappa: f64,
    pub frame: FrameConfig,
}

impl Default for RateConfig {
    fn default() -> Self {
        Self {
            models: vec![ModelChoice::Wicksell, ModelChoice::Direct],
            s: 2.0,
            cutoff: 256,
            epsilons: vec![1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4, 1e-4, 3e-5, 1e-5],
            runs: 20,
            seed: 7,
            kmax: 512,
            kappa: DEFAULT_KAPPA,
            frame: FrameConfig::default(),
        }
    }
}

pub fn run_rates(config: &RateConfig) -> Result<Vec<RateStudy>> {
    config
        .models
        .iter()
        .map(|m| {
            let model = m.build(config.kmax)?;
            let frame = config.frame.build_for(&model)?;
            let coeffs = smooth_coeffs(config.s, config.cutoff, model.len());
            let target = RateTarget::sobolev(config.s, model.nu)?;
            rate_study(
                &model,
                &frame,
                &coeffs,
                &config.epsilons,
                config.runs,
                config.seed,
                config.kappa,
                target,
            )
        })
        .collect()
}
