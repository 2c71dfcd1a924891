//! `needd`: quadrature, filter and frame inspection, NEED-D estimation and the
//! Wicksell simulation study.
//!
//! Exit status: 0 on success, 2 when an invariant suite fails, 1 on I/O or
//! configuration errors.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use needd_core::estimators::{
    make_blocks, make_threshold_plan_with, need_d, svd_adaptive, svd_projection, AdaptiveSvdConfig,
    BlockPlan, SigmaMode, DEFAULT_KAPPA,
};
use needd_core::filter::{make_profile, Filter, ProfileKind};
use needd_core::frame::io::{load_frame, save_frame};
use needd_core::frame::{check_frame, needlet_values, BasisFamily, NeedletFrame, NodesPerLevel};
use needd_core::jacobi::{gauss_jacobi_rule, JacobiParams};
use needd_core::models::{function_from_coeffs, SequenceObservation, SvdModel};
use needd_core::simlab::{
    emit_report, run_experiment, run_rates, ModelChoice, RateConfig, ReportFormat, SimulationConfig,
};

#[derive(Parser)]
#[command(
    name = "needd",
    version,
    about = "Needlet frames and NEED-D estimation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Gauss-Jacobi rules.
    Quad {
        #[command(subcommand)]
        action: QuadCmd,
    },
    /// Littlewood-Paley filters.
    Filter {
        #[command(subcommand)]
        action: FilterCmd,
    },
    /// Needlet frames.
    Frame {
        #[command(subcommand)]
        action: FrameCmd,
    },
    /// Inverse-problem models.
    Model {
        #[command(subcommand)]
        action: ModelCmd,
    },
    /// Estimates a signal from observed SVD coefficients.
    Estimate(EstimateArgs),
    /// Runs the Monte-Carlo estimator comparison.
    Simulate {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also writes the full report, per-run losses included, as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Fits NEED-D convergence rates.
    Rates {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum QuadCmd {
    /// Prints nodes and weights as CSV (index, node, weight).
    Dump {
        #[arg(long, default_value_t = 0.0)]
        alpha: f64,
        #[arg(long, default_value_t = 0.0)]
        beta: f64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum FilterCmd {
    /// Prints (xi, a(xi)) over [0, 2.5] as CSV.
    Plot {
        #[arg(long, default_value_t = 2)]
        m: u32,
        #[arg(long, default_value_t = 501)]
        points: usize,
        #[arg(long, value_enum, default_value_t = Profile::Polynomial)]
        profile: Profile,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Profile {
    Polynomial,
    Exponential,
}

impl From<Profile> for ProfileKind {
    fn from(p: Profile) -> Self {
        match p {
            Profile::Polynomial => ProfileKind::PolynomialShape,
            Profile::Exponential => ProfileKind::SmoothExponential,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Jacobi,
    Fourier,
}

#[derive(Clone, Copy, ValueEnum)]
enum Layout {
    Exact,
    Paper,
}

#[derive(clap::Args)]
struct FrameSpec {
    #[arg(long, value_enum, default_value_t = Basis::Jacobi)]
    basis: Basis,
    #[arg(long, default_value_t = 0.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1.0)]
    beta: f64,
    #[arg(long, default_value_t = 2)]
    m: u32,
    #[arg(long, value_enum, default_value_t = Profile::Polynomial)]
    profile: Profile,
    #[arg(long = "nodes-per-level", value_enum, default_value_t = Layout::Exact)]
    layout: Layout,
}

impl FrameSpec {
    fn build(&self, jmax: u32) -> Result<NeedletFrame> {
        let basis = match self.basis {
            Basis::Jacobi => BasisFamily::jacobi(self.alpha, self.beta)?,
            Basis::Fourier => BasisFamily::FourierPeriodic,
        };
        let layout = match self.layout {
            Layout::Exact => NodesPerLevel::Exact,
            Layout::Paper => NodesPerLevel::Paper,
        };
        let filter = Filter::new(make_profile(self.profile.into(), self.m)?);
        Ok(NeedletFrame::build(basis, filter, jmax, layout)?)
    }
}

#[derive(Subcommand)]
enum FrameCmd {
    /// Builds a frame and writes the binary container.
    Build {
        #[command(flatten)]
        spec: FrameSpec,
        #[arg(long, default_value_t = 8)]
        jmax: u32,
        #[arg(long)]
        out: PathBuf,
    },
    /// Runs the invariant suite on a stored frame.
    Check {
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        probes: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Prints (x, psi(x)) for one needlet as CSV.
    Render {
        /// Stored frame; without it a frame is built from the options below.
        #[arg(long)]
        frame: Option<PathBuf>,
        #[command(flatten)]
        spec: FrameSpec,
        #[arg(long, allow_negative_numbers = true)]
        j: i32,
        #[arg(long)]
        nu: usize,
        #[arg(long, default_value_t = 1001)]
        points: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand)]
enum ModelCmd {
    /// Prints (k, b_k) as CSV.
    Dump {
        #[arg(long, value_enum, default_value_t = ModelArg::Wicksell)]
        kind: ModelArg,
        #[arg(long, default_value_t = 512)]
        kmax: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Wicksell,
    Direct,
}

impl ModelArg {
    fn build(self, kmax: usize) -> Result<SvdModel> {
        let choice = match self {
            ModelArg::Wicksell => ModelChoice::Wicksell,
            ModelArg::Direct => ModelChoice::Direct,
        };
        Ok(choice.build(kmax)?)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Needd,
    SvdProj,
    SvdAdapt,
}

#[derive(clap::Args)]
struct EstimateArgs {
    #[arg(long, value_enum, default_value_t = ModelArg::Wicksell)]
    model: ModelArg,
    /// Stored frame, required for `needd`.
    #[arg(long)]
    frame: Option<PathBuf>,
    /// CSV with columns (i, Y_i).
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Needd)]
    method: Method,
    /// Noise level of the observations.
    #[arg(long)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_KAPPA)]
    kappa: f64,
    /// Number of leading coefficients kept by `svd-proj`.
    #[arg(long)]
    cutoff: Option<usize>,
    /// Sample size behind the adaptive block layout.
    #[arg(long, default_value_t = 1024)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Writes (x, fhat(x)) on `points` equispaced points of the natural domain.
    #[arg(long)]
    render: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    points: usize,
}

/// Failure of an invariant suite, reported with exit status 2.
#[derive(Debug)]
struct InvariantFailure;

impl std::fmt::Display for InvariantFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("invariant suite failed")
    }
}

impl std::error::Error for InvariantFailure {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<InvariantFailure>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_rows<I, R>(out: Option<&Path>, header: &[&str], rows: I) -> Result<()>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(sink(out)?);
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    match path {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))
        }
        None => Ok(T::default()),
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Quad {
            action:
                QuadCmd::Dump {
                    alpha,
                    beta,
                    n,
                    out,
                },
        } => {
            let rule = gauss_jacobi_rule(&JacobiParams::new(alpha, beta)?, n)?;
            let rows = rule
                .nodes
                .iter()
                .zip(&rule.weights)
                .enumerate()
                .map(|(i, (x, w))| [i.to_string(), x.to_string(), w.to_string()]);
            write_rows(out.as_deref(), &["index", "node", "weight"], rows)
        }
        Command::Filter {
            action:
                FilterCmd::Plot {
                    m,
                    points,
                    profile,
                    out,
                },
        } => {
            if points < 2 {
                bail!("need at least 2 points");
            }
            let filter = Filter::new(make_profile(profile.into(), m)?);
            let mut rows = Vec::with_capacity(points);
            for k in 0..points {
                let xi = 2.5 * k as f64 / (points - 1) as f64;
                rows.push([xi.to_string(), filter.a(xi)?.to_string()]);
            }
            write_rows(out.as_deref(), &["xi", "a"], rows)
        }
        Command::Frame { action } => frame_command(action),
        Command::Model {
            action: ModelCmd::Dump { kind, kmax, out },
        } => {
            let model = kind.build(kmax)?;
            let rows = model
                .singular_values
                .iter()
                .enumerate()
                .map(|(k, b)| [k.to_string(), b.to_string()]);
            write_rows(out.as_deref(), &["k", "b_k"], rows)
        }
        Command::Estimate(args) => estimate(args),
        Command::Simulate { config, out, json } => {
            let cfg: SimulationConfig = read_json(config.as_deref())?;
            cfg.validate().context("invalid simulation config")?;
            let report = run_experiment(&cfg)?;
            emit_report(&report, ReportFormat::Csv, &out)
                .with_context(|| format!("writing {}", out.display()))?;
            if let Some(path) = json {
                emit_report(&report, ReportFormat::Json, &path)
                    .with_context(|| format!("writing {}", path.display()))?;
            }
            Ok(())
        }
        Command::Rates { config, out } => {
            let cfg: RateConfig = read_json(config.as_deref())?;
            let studies = run_rates(&cfg)?;
            let rows = studies.iter().map(|s| {
                [
                    s.model.clone(),
                    s.slope.to_string(),
                    s.slope_se.to_string(),
                    s.target.mu.to_string(),
                    s.gap.to_string(),
                ]
            });
            write_rows(
                out.as_deref(),
                &["model", "slope", "slope_se", "mu", "gap_se"],
                rows,
            )
        }
    }
}

fn frame_command(action: FrameCmd) -> Result<()> {
    match action {
        FrameCmd::Build { spec, jmax, out } => {
            let frame = spec.build(jmax)?;
            save_frame(&frame, &out).with_context(|| format!("writing {}", out.display()))?;
            Ok(())
        }
        FrameCmd::Check { path, probes, seed } => {
            let frame = load_frame(&path).with_context(|| format!("loading {}", path.display()))?;
            let report = check_frame(&frame, probes, seed)?;
            print!("{report}");
            if report.passed() {
                Ok(())
            } else {
                Err(InvariantFailure.into())
            }
        }
        FrameCmd::Render {
            frame,
            spec,
            j,
            nu,
            points,
            out,
        } => {
            let frame = match frame {
                Some(p) => load_frame(&p).with_context(|| format!("loading {}", p.display()))?,
                None => spec.build(j.max(0) as u32)?,
            };
            if points < 2 {
                bail!("need at least 2 points");
            }
            let (lo, hi) = frame.basis.domain();
            let xs: Vec<f64> = (0..points)
                .map(|k| lo + (hi - lo) * k as f64 / (points - 1) as f64)
                .collect();
            let ys = needlet_values(&frame, j, nu, &xs)?;
            let rows = xs
                .iter()
                .zip(&ys)
                .map(|(x, y)| [x.to_string(), y.to_string()]);
            write_rows(out.as_deref(), &["x", "psi"], rows)
        }
    }
}

fn read_observation(path: &Path) -> Result<Vec<f64>> {
    let mut rdr =
        csv::Reader::from_path(path).with_context(|| format!("opening {}", path.display()))?;
    let mut y = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            bail!(
                "{}: row {} has {} columns, expected (i, Y_i)",
                path.display(),
                row + 1,
                rec.len()
            );
        }
        let i: usize = rec[0]
            .trim()
            .parse()
            .with_context(|| format!("row {}: index", row + 1))?;
        if i != row {
            bail!("{}: row {} carries index {i}", path.display(), row + 1);
        }
        y.push(
            rec[1]
                .trim()
                .parse::<f64>()
                .with_context(|| format!("row {}: value", row + 1))?,
        );
    }
    if y.is_empty() {
        bail!("{} holds no observations", path.display());
    }
    Ok(y)
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let y = read_observation(&args.input)?;
    let model = args.model.build(y.len() - 1)?;
    let obs = SequenceObservation::new(y, args.epsilon)?;
    let coeffs = match args.method {
        Method::Needd => {
            let Some(path) = &args.frame else {
                bail!("--frame is required for needd");
            };
            let frame = load_frame(path).with_context(|| format!("loading {}", path.display()))?;
            if frame.basis != model.frame_basis() {
                bail!("frame basis does not match the {} model", model.name());
            }
            let plan = make_threshold_plan_with(
                &frame,
                &model,
                args.epsilon,
                args.kappa,
                SigmaMode::Level,
            )?;
            need_d(&frame, &model, &obs, &plan)?.coeffs
        }
        Method::SvdProj => {
            let Some(n) = args.cutoff else {
                bail!("--cutoff is required for svd-proj");
            };
            svd_projection(&model, &obs, n)?
        }
        Method::SvdAdapt => {
            let blocks = if args.epsilon > 0.0 {
                make_blocks(args.epsilon, &model, args.n, Default::default())?
            } else {
                BlockPlan::noise_free(model.len(), args.n)
            };
            svd_adaptive(
                &model,
                &obs,
                args.epsilon,
                &blocks,
                &AdaptiveSvdConfig::default(),
            )?
            .coeffs
        }
    };
    let rows = coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| [i.to_string(), c.to_string()]);
    write_rows(Some(&args.out), &["i", "fhat"], rows)?;
    if let Some(path) = &args.render {
        let (lo, hi) = model.domain();
        let xs: Vec<f64> = (1..=args.points)
            .map(|k| lo + (hi - lo) * k as f64 / args.points as f64)
            .collect();
        let fx = function_from_coeffs(&model, &coeffs, &xs);
        let rows = xs
            .iter()
            .zip(&fx)
            .map(|(x, v)| [x.to_string(), v.to_string()]);
        write_rows(Some(path), &["x", "fhat"], rows)?;
    }
    Ok(())
}
