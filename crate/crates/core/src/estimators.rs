//! NEED-D needlet thresholding and the two SVD baselines.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{NeedletCoeffs, NeedletFrame};
use crate::models::{SequenceObservation, SvdModel};
use crate::simlab::loss::{weighted_loss, LossKind};

/// The experimental threshold constant `0.75 √2`.
pub const DEFAULT_KAPPA: f64 = 0.75 * std::f64::consts::SQRT_2;
pub const DEFAULT_GAMMA: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SigmaMode {
    /// One `σ_j` per level, the supremum over its needlets.
    #[default]
    Level,
    /// Each needlet's own standard deviation.
    Node,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdPlan {
    pub kappa: f64,
    pub epsilon: f64,
    pub t_eps: f64,
    /// Highest level kept; `-1..=jmax`.
    pub j_top: i32,
    /// `σ_j` for `j = -1..=jmax`.
    pub sigma: Vec<f64>,
    /// Per-needlet deviations, present in [`SigmaMode::Node`].
    pub node_sigma: Option<Vec<Vec<f64>>>,
}

impl ThresholdPlan {
    pub fn threshold(&self, j: i32, nu: usize) -> f64 {
        let slot = (j + 1) as usize;
        let s = match &self.node_sigma {
            Some(node) => node[slot][nu],
            None => self.sigma[slot],
        };
        self.kappa * self.t_eps * s
    }
}

/// `t_ε = ε sqrt(ln(1/ε))`.
pub fn t_eps(epsilon: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&epsilon) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    Ok(if epsilon == 0.0 {
        0.0
    } else {
        epsilon * (1.0 / epsilon).ln().sqrt()
    })
}

pub fn make_threshold_plan(
    frame: &NeedletFrame,
    model: &SvdModel,
    epsilon: f64,
    kappa: f64,
) -> Result<ThresholdPlan> {
    make_threshold_plan_with(frame, model, epsilon, kappa, SigmaMode::Level)
}

pub fn make_threshold_plan_with(
    frame: &NeedletFrame,
    model: &SvdModel,
    epsilon: f64,
    kappa: f64,
    mode: SigmaMode,
) -> Result<ThresholdPlan> {
    if !(kappa > 0.0) {
        return Err(Error::Domain(format!(
            "kappa must be positive, got {kappa}"
        )));
    }
    let t = t_eps(epsilon)?;
    let jmax = frame.jmax as i32;
    let j_top = if t == 0.0 {
        jmax
    } else {
        // 2^J ≤ t^{-2/(1+2ν)} < 2^{J+1}
        let top = (-2.0 / (1.0 + 2.0 * model.nu)) * t.log2();
        (top.floor() as i64).clamp(-1, jmax as i64) as i32
    };
    let node = frame.node_sigma(&model.singular_values)?;
    let sigma = node
        .iter()
        .map(|v| v.iter().copied().fold(0.0, f64::max))
        .collect();
    Ok(ThresholdPlan {
        kappa,
        epsilon,
        t_eps: t,
        j_top,
        sigma,
        node_sigma: (mode == SigmaMode::Node).then_some(node),
    })
}

/// `Ȳ_i = Y_i / b_i` over the frame's coefficient range.
fn inverted(frame: &NeedletFrame, model: &SvdModel, obs: &SequenceObservation) -> Result<Vec<f64>> {
    let n = frame.coeff_len();
    if obs.y.len() < n || model.singular_values.len() < n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: obs.y.len().min(model.singular_values.len()),
        });
    }
    Ok(obs.y[..n]
        .iter()
        .zip(&model.singular_values)
        .map(|(y, b)| y / b)
        .collect())
}

/// Unthresholded `β̂_{j,η} = Σ_i (Y_i / b_i) ψ^i_{j,η}`.
pub fn empirical_coeffs(
    frame: &NeedletFrame,
    model: &SvdModel,
    obs: &SequenceObservation,
) -> Result<NeedletCoeffs> {
    frame.analyze(&inverted(frame, model, obs)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeedDEstimate {
    /// Thresholded coefficients.
    pub beta: NeedletCoeffs,
    pub kept: Vec<Vec<bool>>,
    /// `f̂` in the SVD basis, same length as the observation.
    pub coeffs: Vec<f64>,
}

impl NeedDEstimate {
    pub fn kept_count(&self) -> usize {
        self.kept.iter().flatten().filter(|k| **k).count()
    }
}

pub fn need_d(
    frame: &NeedletFrame,
    model: &SvdModel,
    obs: &SequenceObservation,
    plan: &ThresholdPlan,
) -> Result<NeedDEstimate> {
    let mut beta = empirical_coeffs(frame, model, obs)?;
    let mut kept = Vec::with_capacity(beta.levels.len());
    for (slot, level) in beta.levels.iter_mut().enumerate() {
        let j = slot as i32 - 1;
        let mask: Vec<bool> = level
            .iter()
            .enumerate()
            .map(|(nu, b)| j <= plan.j_top && b.abs() >= plan.threshold(j, nu))
            .collect();
        for (b, k) in level.iter_mut().zip(&mask) {
            if !k {
                *b = 0.0;
            }
        }
        kept.push(mask);
    }
    let mut coeffs = frame.synthesize(&beta)?;
    coeffs.resize(obs.y.len(), 0.0);
    Ok(NeedDEstimate { beta, kept, coeffs })
}

/// `f̂_i = Y_i / b_i` for `i ≤ N`, zero above.
pub fn svd_projection(model: &SvdModel, obs: &SequenceObservation, n: usize) -> Result<Vec<f64>> {
    if n > obs.kmax || obs.y.len() > model.singular_values.len() {
        return Err(Error::Domain(format!(
            "projection cutoff {n} outside 0..={}",
            obs.kmax
        )));
    }
    Ok(obs
        .y
        .iter()
        .zip(&model.singular_values)
        .enumerate()
        .map(|(i, (y, b))| if i <= n { y / b } else { 0.0 })
        .collect())
}

/// Natural-domain grid used to score estimates: points and `e_k` values.
#[derive(Debug, Clone)]
pub struct EvalGrid {
    pub xs: Vec<f64>,
    /// Rows = points, columns = basis index.
    pub design: Array2<f64>,
}

impl EvalGrid {
    /// The grid `i/n`, `i = 1..=n`, with the first `count` basis functions.
    pub fn new(model: &SvdModel, n: usize, count: usize) -> Self {
        let xs = crate::models::grid(n);
        let design = model.design_matrix(&xs, count);
        Self { xs, design }
    }

    pub fn eval(&self, coeffs: &[f64]) -> Vec<f64> {
        let k = self.design.ncols().min(coeffs.len());
        let c = ndarray::ArrayView1::from(&coeffs[..k]);
        self.design.slice(ndarray::s![.., ..k]).dot(&c).to_vec()
    }
}

/// Weighted RMSE of the projection estimate for every cutoff `N = 0..=kmax/2`.
pub fn projection_sweep(
    model: &SvdModel,
    obs: &SequenceObservation,
    truth: &[f64],
    grid: &EvalGrid,
) -> Result<Vec<f64>> {
    let top = obs.kmax / 2;
    if grid.design.ncols() <= top {
        return Err(Error::LengthMismatch {
            expected: top + 1,
            got: grid.design.ncols(),
        });
    }
    let mut fhat = vec![0.0; grid.xs.len()];
    let mut out = Vec::with_capacity(top + 1);
    for n in 0..=top {
        let c = obs.y[n] / model.singular_values[n];
        for (v, e) in fhat.iter_mut().zip(grid.design.column(n)) {
            *v += c * e;
        }
        out.push(weighted_loss(truth, &fhat, LossKind::Rmse)?);
    }
    Ok(out)
}

/// Index of the smallest value, ties to the smaller index.
pub fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

/// Cutoff minimizing the weighted RMSE against the truth, ties to smaller `N`.
pub fn svd_projection_oracle(
    model: &SvdModel,
    obs: &SequenceObservation,
    truth: &[f64],
    grid: &EvalGrid,
) -> Result<(usize, Vec<f64>)> {
    let sweep = projection_sweep(model, obs, truth, grid)?;
    let n = argmin_first(&sweep);
    Ok((n, svd_projection(model, obs, n)?))
}

/// Cutoff minimizing the mean of several sweeps (one cutoff per setting).
pub fn common_cutoff(sweeps: &[Vec<f64>]) -> Result<usize> {
    let len = sweeps.first().map(Vec::len).unwrap_or(0);
    if len == 0 || sweeps.iter().any(|s| s.len() != len) {
        return Err(Error::Degenerate(
            "sweeps missing or of unequal length".into(),
        ));
    }
    let mean: Vec<f64> = (0..len)
        .map(|n| sweeps.iter().map(|s| s[n]).sum::<f64>() / sweeps.len() as f64)
        .collect();
    Ok(argmin_first(&mean))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LogBase {
    #[default]
    Natural,
    Ten,
}

impl LogBase {
    pub fn log(self, x: f64) -> f64 {
        match self {
            Self::Natural => x.ln(),
            Self::Ten => x.log10(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct AdaptiveSvdConfig {
    pub gamma: f64,
    #[serde(rename = "logbase")]
    pub log_base: LogBase,
}

impl Default for AdaptiveSvdConfig {
    fn default() -> Self {
        Self {
            gamma: DEFAULT_GAMMA,
            log_base: LogBase::Natural,
        }
    }
}

/// Block layout of the adaptive SVD filter, in 1-based coefficient indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPlan {
    /// `κ_0 = 1 < κ_1 < … < κ_J`; block `j` is `κ_{j-1} ..= κ_j - 1`.
    pub boundaries: Vec<usize>,
    /// Coefficients with 1-based index above `n0` get weight zero.
    pub n0: usize,
    pub nu_eps: f64,
    pub rho_eps: f64,
    /// Largest `m` with `Σ_{i≤m} b_i^{-2} ≤ ε^{-2} ρ^{-3}`.
    pub m_star: usize,
}

impl BlockPlan {
    /// 0-based index ranges of the blocks, clipped to `len` coefficients.
    pub fn blocks(&self, len: usize) -> Vec<std::ops::Range<usize>> {
        self.boundaries
            .windows(2)
            .map(|w| (w[0] - 1).min(len)..(w[1] - 1).min(len))
            .collect()
    }

    /// Noise-free layout: one block per coefficient up to `min(n/2, len)`.
    pub fn noise_free(len: usize, n: usize) -> Self {
        Self {
            boundaries: (1..=len + 1).collect(),
            n0: (n / 2).min(len),
            nu_eps: f64::INFINITY,
            rho_eps: 0.0,
            m_star: len,
        }
    }
}

pub fn make_blocks(
    epsilon: f64,
    model: &SvdModel,
    n: usize,
    log_base: LogBase,
) -> Result<BlockPlan> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let nu_eps = log_base.log(log_base.log(1.0 / epsilon)).max(5.0);
    let rho = 1.0 / log_base.log(nu_eps);
    let budget = epsilon.powi(-2) * rho.powi(-3);
    let mut m_star = 0;
    let mut acc = 0.0;
    for b in &model.singular_values {
        acc += b.powi(-2);
        if acc > budget {
            break;
        }
        m_star += 1;
    }
    let mut boundaries = vec![1usize];
    let mut j = 1;
    while *boundaries.last().expect("nonempty") <= m_star {
        let next = if j == 1 {
            nu_eps.ceil() as usize
        } else {
            let step = (nu_eps * rho * (1.0 + rho).powi(j as i32 - 1)).floor() as usize;
            boundaries[j - 1] + step.max(1)
        };
        boundaries.push(next);
        j += 1;
    }
    let total = *boundaries.last().expect("nonempty") - 1;
    Ok(BlockPlan {
        boundaries,
        n0: (n / 2).min(total),
        nu_eps,
        rho_eps: rho,
        m_star,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaptiveEstimate {
    pub coeffs: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Block-shrinkage SVD filter
/// `λ_i = (1 - σ_j² (1 + Δ_j^γ) / ‖Ȳ‖²_{(j)})_+` on block `j`, zero above `N_0`.
pub fn svd_adaptive(
    model: &SvdModel,
    obs: &SequenceObservation,
    epsilon: f64,
    blocks: &BlockPlan,
    config: &AdaptiveSvdConfig,
) -> Result<AdaptiveEstimate> {
    if !(config.gamma > 0.0 && config.gamma < 0.5) {
        return Err(Error::Domain(format!(
            "gamma must lie in (0, 1/2), got {}",
            config.gamma
        )));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::InvalidEpsilon(epsilon));
    }
    let len = obs.y.len();
    if model.singular_values.len() < len {
        return Err(Error::LengthMismatch {
            expected: len,
            got: model.singular_values.len(),
        });
    }
    let ybar: Vec<f64> = obs
        .y
        .iter()
        .zip(&model.singular_values)
        .map(|(y, b)| y / b)
        .collect();
    let mut weights = vec![0.0; len];
    let n0 = blocks.n0.min(len);
    for block in blocks.blocks(len) {
        if block.start >= n0 {
            break;
        }
        if block.is_empty() {
            return Err(Error::Degenerate(format!(
                "empty block at {}",
                block.start + 1
            )));
        }
        // statistics are taken over the part of the block below the truncation
        let range = block.start..block.end.min(n0);
        let inv: Vec<f64> = model.singular_values[range.clone()]
            .iter()
            .map(|b| b.powi(-2))
            .collect();
        let inv_sum: f64 = inv.iter().sum();
        let sigma2 = epsilon * epsilon * inv_sum;
        let delta = inv.iter().copied().fold(0.0, f64::max) / inv_sum;
        let energy: f64 = ybar[range.clone()].iter().map(|v| v * v).sum();
        let lambda = if sigma2 == 0.0 {
            1.0
        } else if energy == 0.0 {
            0.0
        } else {
            (1.0 - sigma2 * (1.0 + delta.powf(config.gamma)) / energy).max(0.0)
        };
        weights[range].fill(lambda);
    }
    let coeffs = ybar.iter().zip(&weights).map(|(y, w)| y * w).collect();
    Ok(AdaptiveEstimate { coeffs, weights })
}
