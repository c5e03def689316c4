//! Command-line interface.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use epshoot_core::analysis::{
    cluster_test, exact_vs_inexact, predict, shape_distance, triangle_audit, ClusterCriteria, DistanceMeasure,
    InexactCase, Preprocess, SweepGrid,
};
use epshoot_core::integrator::{evolve, EvolveConfig};
use epshoot_core::particles::{conserved_quantities, SystemSpec};
use epshoot_core::shapes::{self, HalfSampling};
use epshoot_core::shooting::{contraction_diagnostics, contraction_tail, MatchResult};
use epshoot_core::{
    match_templates, newton_match, KernelFamily, KernelSpec, LandmarkTemplate, ParticleState, ResidualNorm,
    ShootingConfig, StopRule, UpdateSpace, Vec2,
};
use log::{info, warn};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use crate::error::{CliError, CliResult};
use crate::formats::{
    read_match, read_template, write_comparison_csv, write_json, write_residuals_csv, write_sweep_csv, write_template,
    write_text, write_trajectory_csv, ClusterDoc, ConfigEcho, DistanceDoc, DistancesDoc, MatchDoc, SCHEMA_VERSION,
};
use crate::manifest::{manifest_path_beside, manifest_path_in, ManifestBuilder};
use crate::svg::{plot_templates, sweep_heat_map, Layer, Mark};
use crate::sweep::parallel_sweep;

#[derive(Debug, Parser)]
#[command(name = "epshoot", version, about = "Diffeomorphic landmark matching by geodesic shooting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a parametric landmark template.
    Shapes(ShapesArgs),
    /// Match a reference template to a target.
    Match(MatchArgs),
    /// Integrate the particle system from given or random momenta.
    Evolve(EvolveArgs),
    /// Fit momenta to an intermediate shape and extrapolate the geodesic.
    Predict(PredictArgs),
    /// Hamiltonian distances from one reference to several targets.
    Distance(DistanceArgs),
    /// Decide whether two shapes belong to the same cluster.
    Cluster(ClusterArgs),
    /// Iteration counts over an alpha^2 x h grid.
    Sweep(SweepArgs),
    /// Exact against inexact matching for several sigma^2.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Conical,
    Gaussian,
    Bessel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum StopArg {
    Residual,
    MomentumDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UpdateArg {
    Velocity,
    Momentum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormArg {
    Max,
    L2,
}

#[derive(Debug, Clone, Args)]
pub struct KernelOpts {
    #[arg(long, value_enum, default_value = "conical")]
    pub kernel: KernelArg,
    /// Sobolev order for the Bessel kernel (must exceed 1).
    #[arg(long, default_value_t = 2.0)]
    pub nu: f64,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Scale the kernel so that G(0) = 1.
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub normalized: bool,
}

impl KernelOpts {
    pub fn family(&self) -> KernelFamily {
        match self.kernel {
            KernelArg::Conical => KernelFamily::Conical,
            KernelArg::Gaussian => KernelFamily::Gaussian,
            KernelArg::Bessel => KernelFamily::BesselGeneral,
        }
    }

    pub fn spec(&self) -> CliResult<KernelSpec> {
        let k = KernelSpec::new(self.family(), self.nu, self.alpha, self.normalized)?;
        if k.needs_mollification() {
            warn!("nu = {} < 3/2: the kernel derivative is unbounded at the origin", self.nu);
        }
        Ok(k)
    }
}

#[derive(Debug, Clone, Args)]
pub struct IntegratorOpts {
    /// RK4 steps over [0, t-final].
    #[arg(long, default_value_t = 100)]
    pub steps: usize,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    /// Inexactness weight; 0 is exact matching.
    #[arg(long, default_value_t = 0.0)]
    pub sigma2: f64,
}

#[derive(Debug, Clone, Args)]
pub struct ShootingOpts {
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub integrator: IntegratorOpts,
    /// Search length of the feedback update.
    #[arg(long, default_value_t = 0.3)]
    pub h: f64,
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    /// Stopping rule; defaults to momentum-delta when sigma2 > 0.
    #[arg(long, value_enum)]
    pub stop: Option<StopArg>,
    #[arg(long, value_enum, default_value = "velocity")]
    pub update: UpdateArg,
    #[arg(long, value_enum, default_value = "max")]
    pub norm: NormArg,
}

impl ShootingOpts {
    pub fn config(&self) -> CliResult<ShootingConfig> {
        let sigma2 = self.integrator.sigma2;
        let stop_rule = match self.stop {
            Some(StopArg::Residual) => StopRule::TargetResidual,
            Some(StopArg::MomentumDelta) => StopRule::MomentumDelta,
            None if sigma2 > 0.0 => {
                info!("sigma2 > 0: stopping on the momentum delta");
                StopRule::MomentumDelta
            }
            None => StopRule::TargetResidual,
        };
        let cfg = ShootingConfig {
            h: self.h,
            epsilon: self.eps,
            max_iter: self.max_iter,
            update_space: match self.update {
                UpdateArg::Velocity => UpdateSpace::Velocity,
                UpdateArg::Momentum => UpdateSpace::Momentum,
            },
            stop_rule,
            norm: match self.norm {
                NormArg::Max => ResidualNorm::MaxAbs,
                NormArg::L2 => ResidualNorm::L2,
            },
            evolve: EvolveConfig::new(self.integrator.t_final, self.integrator.steps)?,
            system: SystemSpec { kernel: self.kernel.spec()?, sigma2 },
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ShapeName {
    Circle,
    Ellipse,
    /// The sheared tilted ellipse x = a cos(phi) cos(t) + b sin(phi) sin(t) + sx,
    /// y = b cos(phi) sin(t) - a sin(phi) + sy.
    EllipseRotShift,
    /// (a cos t, b sin t) rotated by the angle, then shifted.
    RotatedEllipse,
    Heart4,
    Square,
    /// Upper half circle of radius r, lower half ellipse (a, b).
    Hybrid,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ShapesArgs {
    #[arg(value_enum)]
    pub name: ShapeName,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0.0)]
    pub cx: f64,
    #[arg(long, default_value_t = 0.0)]
    pub cy: f64,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// Hybrid upper-half radius.
    #[arg(long, default_value_t = 1.0)]
    pub r: f64,
    /// Rotation angle in radians.
    #[arg(long, default_value_t = 0.0)]
    pub angle: f64,
    #[arg(long, default_value_t = 0.0)]
    pub shift_x: f64,
    #[arg(long, default_value_t = 0.0)]
    pub shift_y: f64,
    #[arg(long, default_value_t = 4.0)]
    pub side: f64,
    /// Space hybrid landmarks uniformly in arc length within each half.
    #[arg(long)]
    pub arc_length: bool,
    #[arg(long)]
    pub label: Option<String>,
    /// Output file; printed to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct MatchArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    #[command(flatten)]
    pub shooting: ShootingOpts,
    /// Use the finite-difference Newton iteration instead of feedback.
    #[arg(long)]
    pub newton: bool,
    /// Also write the converged trajectory, a frame every this many steps.
    #[arg(long)]
    pub frames: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct EvolveArgs {
    /// Initial positions.
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Take initial momenta from a match result.
    #[arg(long, conflicts_with = "seed")]
    pub momenta: Option<PathBuf>,
    /// Draw random initial momenta with |p| <= p-max.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub p_max: f64,
    #[command(flatten)]
    pub kernel: KernelOpts,
    #[command(flatten)]
    pub integrator: IntegratorOpts,
    #[arg(long, default_value_t = 1)]
    pub capture_every: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct PredictArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Shape observed at t-match.
    #[arg(long)]
    pub observed: PathBuf,
    #[arg(long)]
    pub t_match: f64,
    #[arg(long)]
    pub t_predict: f64,
    /// Actual shape at t-predict, for reporting the prediction error.
    #[arg(long)]
    pub compare: Option<PathBuf>,
    #[command(flatten)]
    pub shooting: ShootingOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct DistanceArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    pub target: Vec<PathBuf>,
    #[command(flatten)]
    pub shooting: ShootingOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MeasureArg {
    /// H.
    Hamiltonian,
    /// 2H.
    Energy,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct ClusterArgs {
    #[arg(long)]
    pub a: PathBuf,
    #[arg(long)]
    pub b: PathBuf,
    #[arg(long = "refs", required = true, num_args = 2..)]
    pub refs: Vec<PathBuf>,
    /// Largest admissible distance between the two shapes.
    #[arg(long)]
    pub pair: f64,
    /// Largest admissible difference of their distances to any reference.
    #[arg(long)]
    pub ref_diff: f64,
    #[arg(long, value_enum, default_value = "hamiltonian")]
    pub measure: MeasureArg,
    /// Move every centroid to the origin first.
    #[arg(long)]
    pub center: bool,
    #[command(flatten)]
    pub shooting: ShootingOpts,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct SweepArgs {
    /// Reference template; the radius-2 circle with --n landmarks by default.
    #[arg(long = "ref")]
    pub reference: Option<PathBuf>,
    /// Target template; the heart curve with --n landmarks by default.
    #[arg(long)]
    pub target: Option<PathBuf>,
    #[arg(long, default_value_t = 16)]
    pub n: usize,
    #[arg(long, value_enum, default_value = "conical")]
    pub kernel: KernelArg,
    #[arg(long, default_value_t = 2.0)]
    pub nu: f64,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    pub normalized: bool,
    #[arg(long, value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
    pub alpha2: Vec<f64>,
    #[arg(long = "hs", value_delimiter = ',', default_value = "0.2,0.4,0.6,0.8,1.0")]
    pub h_values: Vec<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, default_value_t = 500)]
    pub max_iter: usize,
    #[command(flatten)]
    pub integrator: IntegratorOpts,
    #[arg(long, value_enum, default_value = "max")]
    pub norm: NormArg,
    #[arg(long, value_enum, default_value = "velocity")]
    pub update: UpdateArg,
    /// Worker threads; all cores by default.
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Args)]
#[command(allow_negative_numbers = true)]
pub struct CompareArgs {
    #[arg(long = "ref")]
    pub reference: PathBuf,
    #[arg(long)]
    pub target: PathBuf,
    /// `sigma2:h` pairs; sigma2 = 0 is the exact run.
    #[arg(long = "case", required = true, num_args = 1.., value_parser = parse_case)]
    pub cases: Vec<InexactCase>,
    #[command(flatten)]
    pub shooting: ShootingOpts,
    #[arg(long)]
    pub out: PathBuf,
}

fn parse_case(s: &str) -> Result<InexactCase, String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected sigma2:h, got {s}"))?;
    let sigma2 = a.trim().parse::<f64>().map_err(|e| format!("sigma2: {e}"))?;
    let h = b.trim().parse::<f64>().map_err(|e| format!("h: {e}"))?;
    Ok(InexactCase { sigma2, h })
}

/// What a command achieved, mapped to the exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    /// Ran to completion but did not converge.
    NotConverged,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Success => 0,
            Outcome::NotConverged => 1,
        }
    }
}

pub fn run(cli: Cli, argv: Vec<String>) -> CliResult<Outcome> {
    match cli.command {
        Command::Shapes(a) => cmd_shapes(&a, argv),
        Command::Match(a) => cmd_match(&a, argv),
        Command::Evolve(a) => cmd_evolve(&a, argv),
        Command::Predict(a) => cmd_predict(&a, argv),
        Command::Distance(a) => cmd_distance(&a, argv),
        Command::Cluster(a) => cmd_cluster(&a, argv),
        Command::Sweep(a) => cmd_sweep(&a, argv),
        Command::Compare(a) => cmd_compare(&a, argv),
    }
}

fn out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))
}

fn load(path: &Path, m: &mut ManifestBuilder) -> CliResult<LandmarkTemplate> {
    let t = read_template(path)?;
    m.input(path)?;
    Ok(t)
}

fn check_sizes(a: &LandmarkTemplate, b: &LandmarkTemplate) -> CliResult<()> {
    if a.len() != b.len() {
        return Err(CliError::Usage(format!(
            "templates '{}' ({} landmarks) and '{}' ({} landmarks) differ in size",
            a.label(),
            a.len(),
            b.label(),
            b.len()
        )));
    }
    Ok(())
}

fn log_warnings(r: &MatchResult) {
    for w in &r.warnings {
        warn!("{w}");
    }
}

pub fn build_shape(a: &ShapesArgs) -> CliResult<LandmarkTemplate> {
    let shift = Vec2::new(a.shift_x, a.shift_y);
    let t = match a.name {
        ShapeName::Circle => shapes::circle(a.radius, Vec2::new(a.cx, a.cy), a.n)?,
        ShapeName::Ellipse => shapes::ellipse(a.a, a.b, Vec2::new(a.cx, a.cy), a.n)?,
        ShapeName::EllipseRotShift => shapes::ellipse_rot_shift(a.a, a.b, a.angle, shift, a.n)?,
        ShapeName::RotatedEllipse => shapes::standard_rotated_ellipse(a.a, a.b, a.angle, shift, a.n)?,
        ShapeName::Heart4 => shapes::heart4(a.n)?,
        ShapeName::Square => shapes::square(a.side, a.n)?,
        ShapeName::Hybrid => {
            let sampling = if a.arc_length { HalfSampling::ArcLength } else { HalfSampling::Parameter };
            shapes::circle_ellipse_hybrid(a.r, a.a, a.b, a.n, sampling)?
        }
    };
    Ok(match &a.label {
        Some(l) => t.relabeled(l.clone()),
        None => t,
    })
}

fn cmd_shapes(a: &ShapesArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("shapes", argv);
    let t = build_shape(a)?;
    match &a.out {
        None => {
            let doc = crate::formats::TemplateDoc::from(&t);
            let text = serde_json::to_string_pretty(&doc).expect("templates serialize");
            // a closed pipe (e.g. `| head`) is not an error
            let _ = writeln!(std::io::stdout(), "{text}");
        }
        Some(path) => {
            if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                out_dir(dir)?;
            }
            write_template(path, &t)?;
            m.output(path);
            m.note("parametrization", t.label());
            m.finish(format!("{} landmarks", t.len()), &manifest_path_beside(path))?;
        }
    }
    Ok(Outcome::Success)
}

fn cmd_match(a: &MatchArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("match", argv);
    let cfg = a.shooting.config()?;
    m.config(ConfigEcho::from(&cfg));
    let reference = load(&a.reference, &mut m)?;
    let target = load(&a.target, &mut m)?;
    check_sizes(&reference, &target)?;
    out_dir(&a.out)?;

    let (method, r) = if a.newton {
        ("newton", newton_match(&reference, &target, &cfg)?)
    } else {
        ("feedback", match_templates(&reference, &target, &cfg)?)
    };
    log_warnings(&r);
    let ratios = contraction_diagnostics(&r);
    let tail_max = contraction_tail(&ratios).iter().copied().fold(f64::NAN, f64::max);

    let result_path = a.out.join("result.json");
    write_json(&result_path, &MatchDoc::new(&reference, &target, method, &r, &cfg))?;
    m.output(&result_path);
    let residual_path = a.out.join("residuals.csv");
    write_residuals_csv(&residual_path, &r)?;
    m.output(&residual_path);

    let trajectory = match a.frames {
        Some(every) if r.p0.iter().all(|p| p.is_finite()) => {
            let s0 = ParticleState::new(reference.points().to_vec(), r.p0.clone())?;
            let tr = evolve(&cfg.system, &s0, &cfg.evolve.capturing(every.max(1)))?;
            let path = a.out.join("trajectory.csv");
            write_trajectory_csv(&path, &tr)?;
            m.output(&path);
            Some(tr)
        }
        _ => None,
    };
    let svg = plot_templates(
        &[
            Layer { label: reference.label(), points: reference.points(), color: "#1f5fbf", mark: Mark::Outline },
            Layer { label: target.label(), points: target.points(), color: "#c0392b", mark: Mark::Dots },
            Layer { label: "evolved", points: r.final_template.points(), color: "black", mark: Mark::Outline },
        ],
        trajectory.as_ref(),
    );
    let svg_path = a.out.join("match.svg");
    write_text(&svg_path, &svg)?;
    m.output(&svg_path);

    let outcome = format!(
        "{}; iterations = {}; H = {:.6}; 2H = {:.6}; residual = {:.3e}; max tail contraction ratio = {tail_max:.4}",
        r.termination,
        r.iterations,
        r.hamiltonian,
        r.energy(),
        r.target_residual
    );
    eprintln!("{outcome}");
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(if r.converged { Outcome::Success } else { Outcome::NotConverged })
}

fn random_momenta(n: usize, p_max: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = p_max * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn cmd_evolve(a: &EvolveArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("evolve", argv);
    let reference = load(&a.reference, &mut m)?;
    let p0 = match (&a.momenta, a.seed) {
        (Some(path), _) => {
            let doc = read_match(path)?;
            m.input(path)?;
            doc.momenta()
        }
        (None, Some(seed)) => {
            m.note("momenta", format!("uniform in the disc |p| <= {}, seed {seed}", a.p_max));
            random_momenta(reference.len(), a.p_max, seed)
        }
        (None, None) => return Err(CliError::Usage("evolve needs --momenta or --seed".into())),
    };
    if p0.len() != reference.len() {
        return Err(CliError::Usage(format!("{} momenta for {} landmarks", p0.len(), reference.len())));
    }
    let spec = SystemSpec::inexact(a.kernel.spec()?, a.integrator.sigma2)?;
    let cfg = EvolveConfig::new(a.integrator.t_final, a.integrator.steps)?.capturing(a.capture_every);
    out_dir(&a.out)?;
    let s0 = ParticleState::new(reference.points().to_vec(), p0)?;
    let tr = evolve(&spec, &s0, &cfg)?;

    let path = a.out.join("trajectory.csv");
    write_trajectory_csv(&path, &tr)?;
    m.output(&path);

    let mut conserved = csv::Writer::from_writer(Vec::new());
    conserved.write_record(["t", "H", "Px", "Py", "L"]).expect("in-memory CSV");
    for f in &tr.frames {
        let c = conserved_quantities(&spec, &f.state);
        conserved
            .serialize((f.t, c.hamiltonian, c.linear_momentum.x, c.linear_momentum.y, c.angular_momentum))
            .expect("in-memory CSV");
    }
    let path = a.out.join("conserved.csv");
    write_text(&path, &String::from_utf8(conserved.into_inner().expect("in-memory CSV")).expect("CSV is UTF-8"))?;
    m.output(&path);

    let last = tr.final_state();
    let label = format!("{}@t={}", reference.label(), a.integrator.t_final);
    let final_template = LandmarkTemplate::new(label, last.q.clone())?;
    let path = a.out.join("final.json");
    write_template(&path, &final_template)?;
    m.output(&path);

    let svg = plot_templates(
        &[
            Layer { label: reference.label(), points: reference.points(), color: "#1f5fbf", mark: Mark::Outline },
            Layer {
                label: final_template.label(),
                points: final_template.points(),
                color: "black",
                mark: Mark::Outline,
            },
        ],
        Some(&tr),
    );
    let path = a.out.join("frames.svg");
    write_text(&path, &svg)?;
    m.output(&path);

    let c0 = conserved_quantities(&spec, &s0);
    let c1 = conserved_quantities(&spec, last);
    let outcome = format!(
        "H(0) = {:.9}, H(T) = {:.9}, |dP| = {:.3e}, |dL| = {:.3e}",
        c0.hamiltonian,
        c1.hamiltonian,
        (c1.linear_momentum - c0.linear_momentum).norm(),
        (c1.angular_momentum - c0.angular_momentum).abs()
    );
    eprintln!("{outcome}");
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(Outcome::Success)
}

fn cmd_predict(a: &PredictArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("predict", argv);
    let cfg = a.shooting.config()?;
    m.config(ConfigEcho::from(&cfg));
    let reference = load(&a.reference, &mut m)?;
    let observed = load(&a.observed, &mut m)?;
    check_sizes(&reference, &observed)?;
    let actual = a.compare.as_ref().map(|p| load(p, &mut m)).transpose()?;
    if let Some(t) = &actual {
        check_sizes(&reference, t)?;
    }
    out_dir(&a.out)?;
    let p = predict(&reference, &observed, a.t_match, a.t_predict, &cfg)?;
    log_warnings(&p.fit);

    let path = a.out.join("predicted.json");
    write_template(&path, &p.predicted)?;
    m.output(&path);
    let path = a.out.join("fit.json");
    write_json(&path, &MatchDoc::new(&reference, &observed, "feedback", &p.fit, &cfg))?;
    m.output(&path);
    let path = a.out.join("trajectory.csv");
    write_trajectory_csv(&path, &p.trajectory)?;
    m.output(&path);

    let mut layers = vec![
        Layer { label: reference.label(), points: reference.points(), color: "#1f5fbf", mark: Mark::Outline },
        Layer { label: observed.label(), points: observed.points(), color: "#7f8c8d", mark: Mark::Outline },
        Layer { label: "prediction", points: p.predicted.points(), color: "black", mark: Mark::Dots },
    ];
    if let Some(t) = &actual {
        layers.push(Layer { label: t.label(), points: t.points(), color: "#c0392b", mark: Mark::Outline });
    }
    let path = a.out.join("predict.svg");
    write_text(&path, &plot_templates(&layers, None))?;
    m.output(&path);

    let mut outcome = format!("fit converged in {} iterations, H = {:.6}", p.fit.iterations, p.fit.hamiltonian);
    if let Some(t) = &actual {
        let err = p.predicted.max_distance(t);
        outcome.push_str(&format!("; max landmark distance to '{}' = {err:.3e}", t.label()));
    }
    eprintln!("{outcome}");
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(Outcome::Success)
}

fn cmd_distance(a: &DistanceArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("distance", argv);
    let cfg = a.shooting.config()?;
    m.config(ConfigEcho::from(&cfg));
    let reference = load(&a.reference, &mut m)?;
    let targets = a.target.iter().map(|p| load(p, &mut m)).collect::<CliResult<Vec<_>>>()?;
    for t in &targets {
        check_sizes(&reference, t)?;
    }
    out_dir(&a.out)?;
    let records = targets.iter().map(|t| shape_distance(&reference, t, &cfg)).collect::<Result<Vec<_>, _>>()?;
    let all_converged = records.iter().all(|r| r.converged);
    for r in &records {
        eprintln!(
            "H({} -> {}) = {:.6} (2H = {:.6}, {} iterations{})",
            r.reference_label,
            r.target_label,
            r.hamiltonian,
            r.energy,
            r.iterations,
            if r.converged { "" } else { ", NOT CONVERGED" }
        );
    }
    let path = a.out.join("distances.json");
    write_json(
        &path,
        &DistancesDoc {
            version: SCHEMA_VERSION,
            records: records.iter().map(DistanceDoc::from).collect(),
            config: (&cfg).into(),
        },
    )?;
    m.output(&path);
    let outcome = format!(
        "{} distances, {}",
        records.len(),
        if all_converged { "all converged" } else { "some did not converge" }
    );
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(if all_converged { Outcome::Success } else { Outcome::NotConverged })
}

fn cmd_cluster(a: &ClusterArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("cluster", argv);
    let cfg = a.shooting.config()?;
    m.config(ConfigEcho::from(&cfg));
    let ta = load(&a.a, &mut m)?;
    let tb = load(&a.b, &mut m)?;
    check_sizes(&ta, &tb)?;
    let refs = a.refs.iter().map(|p| load(p, &mut m)).collect::<CliResult<Vec<_>>>()?;
    for r in &refs {
        check_sizes(&ta, r)?;
    }
    out_dir(&a.out)?;
    let (measure, measure_name) = match a.measure {
        MeasureArg::Hamiltonian => (DistanceMeasure::Hamiltonian, "hamiltonian"),
        MeasureArg::Energy => (DistanceMeasure::Energy, "energy"),
    };
    let criteria = ClusterCriteria {
        pair: a.pair,
        ref_diff: a.ref_diff,
        measure,
        preprocess: if a.center { Preprocess::Center } else { Preprocess::None },
    };
    let v = cluster_test(&ta, &tb, &refs, &criteria, &cfg)?;
    let audit = triangle_audit(&v.evidence);
    for t in audit.iter().filter(|t| !t.holds) {
        warn!("triangle inequality fails: H({}, {}) = {} > {} via {}", t.from, t.to, t.direct, t.detour, t.via);
    }
    let path = a.out.join("cluster.json");
    write_json(&path, &ClusterDoc::new(&v, measure_name, a.pair, a.ref_diff, &audit, &cfg))?;
    m.output(&path);
    let outcome = format!(
        "same cluster: {}{}; pair distance {:.6}; reference differences {:?}",
        v.same_cluster,
        if v.conclusive { "" } else { " (inconclusive: a match did not converge)" },
        v.pair_distance,
        v.ref_differences
    );
    eprintln!("{outcome}");
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(if v.conclusive { Outcome::Success } else { Outcome::NotConverged })
}

fn cmd_sweep(a: &SweepArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("sweep", argv);
    let reference = match &a.reference {
        Some(p) => load(p, &mut m)?,
        None => shapes::circle(2.0, Vec2::ZERO, a.n)?,
    };
    let target = match &a.target {
        Some(p) => load(p, &mut m)?,
        None => shapes::heart4(a.n)?,
    };
    check_sizes(&reference, &target)?;
    let family = KernelOpts { kernel: a.kernel, nu: a.nu, alpha: 1.0, normalized: a.normalized }.family();
    let grid = SweepGrid {
        alpha2_values: a.alpha2.clone(),
        h_values: a.h_values.clone(),
        n_landmarks: reference.len(),
        kernel_family: family,
        nu: a.nu,
        tolerance: a.tol,
        max_iter: a.max_iter,
    };
    let base = ShootingConfig {
        update_space: match a.update {
            UpdateArg::Velocity => UpdateSpace::Velocity,
            UpdateArg::Momentum => UpdateSpace::Momentum,
        },
        norm: match a.norm {
            NormArg::Max => ResidualNorm::MaxAbs,
            NormArg::L2 => ResidualNorm::L2,
        },
        evolve: EvolveConfig::new(a.integrator.t_final, a.integrator.steps)?,
        system: SystemSpec { kernel: KernelSpec::new(family, a.nu, 1.0, a.normalized)?, sigma2: a.integrator.sigma2 },
        stop_rule: if a.integrator.sigma2 > 0.0 { StopRule::MomentumDelta } else { StopRule::TargetResidual },
        ..ShootingConfig::default()
    };
    m.config(ConfigEcho::from(&grid.cell_config(&base, a.alpha2[0], a.h_values[0])?));
    m.note("alpha2", format!("{:?}", a.alpha2));
    m.note("h", format!("{:?}", a.h_values));
    m.note("templates", format!("{} -> {}", reference.label(), target.label()));
    out_dir(&a.out)?;
    let table = parallel_sweep(&reference, &target, &grid, &base, a.threads)?;

    let path = a.out.join("sweep.csv");
    write_sweep_csv(&path, &table)?;
    m.output(&path);
    let title =
        format!("{} kernel, N = {}, tolerance {:e}", crate::formats::family_name(family), reference.len(), a.tol);
    let path = a.out.join("sweep.svg");
    write_text(&path, &sweep_heat_map(&table, &title))?;
    m.output(&path);

    let mut summary = String::new();
    for (r, a2) in table.alpha2_values.iter().enumerate() {
        let row: Vec<String> = table
            .row(r)
            .iter()
            .map(|c| if c.converged { format!("{:>5}", c.iterations) } else { "    x".into() })
            .collect();
        summary.push_str(&format!("alpha2 = {a2:<5} {}\n", row.join(" ")));
    }
    eprint!("{summary}");
    let outcome = format!("{} of {} cells failed", table.failures(), table.cells.len());
    m.finish(outcome, &manifest_path_in(&a.out))?;
    Ok(Outcome::Success)
}

fn cmd_compare(a: &CompareArgs, argv: Vec<String>) -> CliResult<Outcome> {
    let mut m = ManifestBuilder::start("compare", argv);
    let cfg = a.shooting.config()?;
    m.config(ConfigEcho::from(&cfg));
    let reference = load(&a.reference, &mut m)?;
    let target = load(&a.target, &mut m)?;
    check_sizes(&reference, &target)?;
    out_dir(&a.out)?;
    let rows = exact_vs_inexact(&reference, &target, &a.cases, &cfg)?;
    for r in &rows {
        eprintln!(
            "sigma2 = {:<5} h = {:<5} H = {:.6} 2H = {:.6} residual = {:.4e} iterations = {}{}",
            r.sigma2,
            r.h,
            r.hamiltonian,
            r.energy,
            r.target_residual,
            r.iterations,
            if r.converged { "" } else { " NOT CONVERGED" }
        );
    }
    let path = a.out.join("comparison.csv");
    write_comparison_csv(&path, &rows)?;
    m.output(&path);
    let ok = rows.iter().all(|r| r.converged);
    m.finish(
        format!("{} cases, {}", rows.len(), if ok { "all converged" } else { "some did not converge" }),
        &manifest_path_in(&a.out),
    )?;
    Ok(if ok { Outcome::Success } else { Outcome::NotConverged })
}
