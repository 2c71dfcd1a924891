//! Monte-Carlo comparison of NEED-D with the SVD baselines on the Wicksell
//! problem, rate studies and report output.

pub mod loss;
pub mod rates;
pub mod report;
pub mod targets;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    common_cutoff, make_blocks, make_threshold_plan_with, need_d, projection_sweep, svd_adaptive,
    svd_projection, AdaptiveSvdConfig, BlockPlan, EvalGrid, SigmaMode, DEFAULT_KAPPA,
};
use crate::filter::{make_profile, Filter, ProfileKind};
use crate::frame::{BasisFamily, NeedletFrame, NodesPerLevel};
use crate::models::{
    calibrate_epsilon, default_order, derive_seed, direct_model, project_function,
    sample_observation, wicksell_model, Spread, SvdModel,
};

pub use loss::{weighted_loss, LossKind};
pub use rates::{rate_study, run_rates, RateConfig, RateStudy, RateTarget};
pub use report::{emit_report, load_report, write_csv, ReportFormat};
pub use targets::{target_function, Target, TargetName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorName {
    SvdProj,
    SvdAdapt,
    Needd,
}

impl EstimatorName {
    pub const ALL: [EstimatorName; 3] = [Self::SvdProj, Self::SvdAdapt, Self::Needd];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::SvdProj => "svd-proj",
            Self::SvdAdapt => "svd-adapt",
            Self::Needd => "needd",
        }
    }
}

impl std::str::FromStr for EstimatorName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnknownName(format!("estimator {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelChoice {
    #[default]
    Wicksell,
    Direct,
}

impl ModelChoice {
    pub fn build(self, kmax: usize) -> Result<SvdModel> {
        match self {
            Self::Wicksell => wicksell_model(kmax),
            Self::Direct => direct_model(kmax),
        }
    }
}

/// How the projection estimator's cutoff is tuned against the truth.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutoffRule {
    /// One cutoff per (target, noise) minimizing the mean RMSE over runs.
    #[default]
    PerSetting,
    /// A fresh cutoff for every run.
    PerRun,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct FrameConfig {
    pub alpha: f64,
    pub beta: f64,
    pub jmax: u32,
    pub m: u32,
    pub profile: ProfileKind,
    pub nodes_per_level: NodesPerLevel,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            jmax: 8,
            m: 2,
            profile: ProfileKind::PolynomialShape,
            nodes_per_level: NodesPerLevel::Exact,
        }
    }
}

impl FrameConfig {
    pub fn filter(&self) -> Result<Filter> {
        Ok(Filter::new(make_profile(self.profile, self.m)?))
    }

    /// Builds the frame over the model's basis; the configured exponents must
    /// match that basis.
    pub fn build_for(&self, model: &SvdModel) -> Result<NeedletFrame> {
        let basis = model.frame_basis();
        if let BasisFamily::Jacobi(p) = basis {
            if p.alpha != self.alpha || p.beta != self.beta {
                return Err(Error::Domain(format!(
                    "{} model needs a Jacobi({}, {}) frame, config asks for ({}, {})",
                    model.name(),
                    p.alpha,
                    p.beta,
                    self.alpha,
                    self.beta
                )));
            }
        }
        let frame = NeedletFrame::build(basis, self.filter()?, self.jmax, self.nodes_per_level)?;
        if frame.coeff_len() > model.len() {
            return Err(Error::Domain(format!(
                "jmax {} needs {} coefficients, model has {}",
                self.jmax,
                frame.coeff_len(),
                model.len()
            )));
        }
        Ok(frame)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct NeedDConfig {
    pub kappa: f64,
    pub sigma: SigmaMode,
}

impl Default for NeedDConfig {
    fn default() -> Self {
        Self {
            kappa: DEFAULT_KAPPA,
            sigma: SigmaMode::Level,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default, deny_unknown_fields)]
pub struct SimulationConfig {
    pub targets: Vec<TargetName>,
    pub rsnr: Vec<f64>,
    pub n: usize,
    pub runs: usize,
    pub estimators: Vec<EstimatorName>,
    pub seed: u64,
    pub kmax: usize,
    pub model: ModelChoice,
    pub frame: FrameConfig,
    pub adaptive: AdaptiveSvdConfig,
    pub needd: NeedDConfig,
    pub projection: CutoffRule,
    pub spread: Spread,
    /// Overrides the calibrated noise level for every setting.
    pub epsilon: Option<f64>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            targets: TargetName::ALL.to_vec(),
            rsnr: vec![3.0, 5.0, 7.0],
            n: 1024,
            runs: 20,
            estimators: EstimatorName::ALL.to_vec(),
            seed: 1,
            kmax: 512,
            model: ModelChoice::Wicksell,
            frame: FrameConfig::default(),
            adaptive: AdaptiveSvdConfig::default(),
            needd: NeedDConfig::default(),
            projection: CutoffRule::PerSetting,
            spread: Spread::Sd,
            epsilon: None,
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.runs < 1 {
            return Err(Error::Domain("runs must be at least 1".into()));
        }
        if self.n < 64 {
            return Err(Error::Domain(format!(
                "grid size n = {} is below 64",
                self.n
            )));
        }
        if let Some(r) = self.rsnr.iter().find(|r| !(**r > 0.0)) {
            return Err(Error::Domain(format!("rsnr must be positive, got {r}")));
        }
        if let Some(e) = self.epsilon {
            if !(0.0..1.0).contains(&e) {
                return Err(Error::InvalidEpsilon(e));
            }
        }
        if self.runs > u32::MAX as usize
            || self.targets.len() > 1 << 16
            || self.rsnr.len() > 1 << 16
        {
            return Err(Error::Domain(
                "too many runs or settings for the seed layout".into(),
            ));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Monte-Carlo results of one estimator on one (target, noise) setting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellReport {
    pub target: String,
    pub rsnr: f64,
    pub epsilon: f64,
    pub estimator: EstimatorName,
    /// Projection cutoff used, per run.
    pub cutoffs: Option<Vec<usize>>,
    pub seeds: Vec<u64>,
    pub l1: Vec<f64>,
    pub rmse: Vec<f64>,
    pub mean_l1: f64,
    pub mean_rmse: f64,
    pub se_l1: f64,
    pub se_rmse: f64,
}

impl CellReport {
    fn new(
        base: (&str, f64, f64, EstimatorName),
        seeds: Vec<u64>,
        losses: Vec<(f64, f64)>,
        cutoffs: Option<Vec<usize>>,
    ) -> Self {
        let (l1, rmse): (Vec<f64>, Vec<f64>) = losses.into_iter().unzip();
        let (mean_l1, se_l1) = mean_se(&l1);
        let (mean_rmse, se_rmse) = mean_se(&rmse);
        Self {
            target: base.0.to_string(),
            rsnr: base.1,
            epsilon: base.2,
            estimator: base.3,
            cutoffs,
            seeds,
            l1,
            rmse,
            mean_l1,
            mean_rmse,
            se_l1,
            se_rmse,
        }
    }

    pub fn mean(&self, kind: LossKind) -> f64 {
        match kind {
            LossKind::L1 => self.mean_l1,
            LossKind::Rmse => self.mean_rmse,
        }
    }

    /// Whether the stored means are exactly the averages of the per-run values.
    pub fn is_consistent(&self) -> bool {
        mean_se(&self.l1).0 == self.mean_l1 && mean_se(&self.rmse).0 == self.mean_rmse
    }
}

pub(crate) fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub cells: Vec<CellReport>,
}

impl SimulationReport {
    pub fn cell(&self, target: &str, rsnr: f64, estimator: EstimatorName) -> Option<&CellReport> {
        self.cells
            .iter()
            .find(|c| c.target == target && c.rsnr == rsnr && c.estimator == estimator)
    }
}

/// Everything shared by the settings of one experiment.
pub struct ExperimentContext {
    pub config: SimulationConfig,
    pub model: SvdModel,
    pub frame: NeedletFrame,
    pub grid: EvalGrid,
}

/// Signal under test: its values on the loss grid and its SVD coefficients.
#[derive(Debug, Clone)]
pub struct SettingInput {
    pub label: String,
    pub truth: Vec<f64>,
    pub coeffs: Vec<f64>,
}

impl ExperimentContext {
    pub fn new(config: SimulationConfig) -> Result<Self> {
        config.validate()?;
        let model = config.model.build(config.kmax)?;
        let frame = config.frame.build_for(&model)?;
        let grid = EvalGrid::new(&model, config.n, model.len());
        Ok(Self {
            config,
            model,
            frame,
            grid,
        })
    }

    /// Normalized target on the grid and its projection.
    pub fn target_input(&self, name: TargetName) -> Result<SettingInput> {
        let target = Target::normalized(name, self.config.n)?;
        let truth = self.grid.xs.iter().map(|&x| target.eval(x)).collect();
        let kmax = self.model.kmax;
        let coeffs =
            project_function(&self.model, &|x| target.eval(x), kmax, default_order(kmax))?.coeffs;
        Ok(SettingInput {
            label: name.to_string(),
            truth,
            coeffs,
        })
    }

    /// Runs all configured estimators on one (signal, noise) setting.
    pub fn run_setting(
        &self,
        input: &SettingInput,
        target_id: u16,
        rsnr: f64,
        noise_id: u16,
    ) -> Result<Vec<CellReport>> {
        let cfg = &self.config;
        let ctx = |e: Error| e.context(format!("target {}, rsnr {rsnr}", input.label));
        let epsilon = match cfg.epsilon {
            Some(e) => e,
            None => calibrate_epsilon(&self.model, &input.coeffs, rsnr, cfg.n, cfg.spread)
                .map_err(ctx)?,
        };
        let plan = make_threshold_plan_with(
            &self.frame,
            &self.model,
            epsilon,
            cfg.needd.kappa,
            cfg.needd.sigma,
        )
        .map_err(ctx)?;
        let blocks = if epsilon > 0.0 {
            make_blocks(epsilon, &self.model, cfg.n, cfg.adaptive.log_base).map_err(ctx)?
        } else {
            BlockPlan::noise_free(self.model.len(), cfg.n)
        };
        let wants = |e: EstimatorName| cfg.estimators.contains(&e);

        let seeds: Vec<u64> = (0..cfg.runs)
            .map(|r| derive_seed(cfg.seed, r as u32, target_id, noise_id))
            .collect();
        let runs = seeds
            .par_iter()
            .enumerate()
            .map(|(r, &seed)| -> Result<_> {
                let sample = || -> Result<_> {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    let obs = sample_observation(&self.model, &input.coeffs, epsilon, &mut rng)?;
                    let sweep = if wants(EstimatorName::SvdProj) {
                        Some(projection_sweep(
                            &self.model,
                            &obs,
                            &input.truth,
                            &self.grid,
                        )?)
                    } else {
                        None
                    };
                    Ok((obs, sweep))
                };
                sample().map_err(|e| e.context(format!("run {r}")))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(ctx)?;
        let common = match (wants(EstimatorName::SvdProj), cfg.projection) {
            (true, CutoffRule::PerSetting) => {
                let sweeps: Vec<Vec<f64>> = runs.iter().filter_map(|r| r.1.clone()).collect();
                Some(common_cutoff(&sweeps).map_err(ctx)?)
            }
            _ => None,
        };

        let mut cells = Vec::new();
        for &est in &cfg.estimators {
            let scored = runs
                .par_iter()
                .enumerate()
                .map(|(r, (obs, sweep))| {
                    let score = || -> Result<_> {
                        let (coeffs, cutoff) = match est {
                            EstimatorName::SvdProj => {
                                let sweep = sweep.as_ref().expect("sweep computed");
                                let n = common
                                    .unwrap_or_else(|| crate::estimators::argmin_first(sweep));
                                (svd_projection(&self.model, obs, n)?, Some(n))
                            }
                            EstimatorName::SvdAdapt => (
                                svd_adaptive(&self.model, obs, epsilon, &blocks, &cfg.adaptive)?
                                    .coeffs,
                                None,
                            ),
                            EstimatorName::Needd => {
                                (need_d(&self.frame, &self.model, obs, &plan)?.coeffs, None)
                            }
                        };
                        let fhat = self.grid.eval(&coeffs);
                        let l1 = weighted_loss(&input.truth, &fhat, LossKind::L1)?;
                        let rmse = weighted_loss(&input.truth, &fhat, LossKind::Rmse)?;
                        Ok(((l1, rmse), cutoff))
                    };
                    score().map_err(|e| e.context(format!("run {r}")))
                })
                .collect::<Result<Vec<_>>>()
                .map_err(|e| ctx(e.context(est.as_str())))?;
            let (losses, cutoffs): (Vec<_>, Vec<_>) = scored.into_iter().unzip();
            let cutoffs: Option<Vec<usize>> = cutoffs.into_iter().collect();
            cells.push(CellReport::new(
                (&input.label, rsnr, epsilon, est),
                seeds.clone(),
                losses,
                cutoffs,
            ));
        }
        Ok(cells)
    }
}

/// Runs every (target, noise) setting of the configuration.
pub fn run_experiment(config: &SimulationConfig) -> Result<SimulationReport> {
    let ctx = ExperimentContext::new(config.clone())?;
    let inputs = config
        .targets
        .par_iter()
        .map(|t| ctx.target_input(*t))
        .collect::<Result<Vec<_>>>()?;
    let settings: Vec<(usize, usize)> = (0..inputs.len())
        .flat_map(|t| (0..config.rsnr.len()).map(move |r| (t, r)))
        .collect();
    let cells = settings
        .par_iter()
        .map(|&(t, r)| ctx.run_setting(&inputs[t], t as u16, config.rsnr[r], r as u16))
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulationReport {
        config: config.clone(),
        cells: cells.into_iter().flatten().collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> SimulationConfig {
        SimulationConfig {
            targets: vec![TargetName::Heavisine],
            rsnr: vec![5.0],
            n: 256,
            runs: 3,
            kmax: 128,
            frame: FrameConfig {
                jmax: 6,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg = SimulationConfig::from_json("{}").unwrap();
        assert_eq!(cfg, SimulationConfig::default());
        let cfg = SimulationConfig::from_json(
            r#"{"targets": ["bumps"], "rsnr": [5], "frame": {"jmax": 7, "nodes-per-level": "paper"},
                "adaptive": {"gamma": 0.2, "logbase": "ten"}, "needd": {"kappa": 2.0}}"#,
        )
        .unwrap();
        assert_eq!(cfg.frame.nodes_per_level, NodesPerLevel::Paper);
        assert_eq!(cfg.needd.kappa, 2.0);
        assert!(SimulationConfig::from_json(r#"{"runs": 0}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"n": 10}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"rsnr": [0]}"#).is_err());
        assert!(SimulationConfig::from_json(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn small_experiment_is_consistent() {
        let report = run_experiment(&small_config()).unwrap();
        assert_eq!(report.cells.len(), 3);
        for c in &report.cells {
            assert!(c.is_consistent());
            assert_eq!(c.l1.len(), 3);
            assert!(c.mean_rmse > 0.0 && c.mean_rmse.is_finite());
        }
        let again = run_experiment(&small_config()).unwrap();
        assert_eq!(report, again);
    }

    #[test]
    fn mismatched_frame_exponents_are_refused() {
        let mut cfg = small_config();
        cfg.frame.alpha = 1.0;
        assert!(run_experiment(&cfg).is_err());
    }
}
