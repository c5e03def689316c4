//! Experiments built on the shooting solver: Hamiltonian shape distances,
//! isometry invariance, clustering, convergence sweeps over `(α², h)`,
//! deformation prediction and exact-vs-inexact comparisons.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::geometry::Isometry;
use crate::integrator::{evolve, EvolveConfig, Trajectory};
use crate::kernels::{KernelFamily, KernelSpec};
use crate::particles::{ParticleState, SystemSpec};
use crate::shapes::LandmarkTemplate;
use crate::shooting::{match_templates, MatchResult, ShootingConfig, StopRule, Termination, UpdateSpace};

/// The `α² × h` grid of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepGrid {
    pub alpha2_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub n_landmarks: usize,
    pub kernel_family: KernelFamily,
    /// Order for [`KernelFamily::BesselGeneral`]; ignored otherwise.
    pub nu: f64,
    pub tolerance: f64,
    pub max_iter: usize,
}

impl SweepGrid {
    pub fn new(alpha2_values: Vec<f64>, h_values: Vec<f64>, n_landmarks: usize, kernel_family: KernelFamily) -> Self {
        SweepGrid { alpha2_values, h_values, n_landmarks, kernel_family, nu: 1.5, tolerance: 1e-6, max_iter: 500 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.alpha2_values.is_empty() || self.h_values.is_empty() {
            return Err(config("sweep axes must be non-empty"));
        }
        if let Some(a) = self.alpha2_values.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
            return Err(config(format!("alpha^2 values must be positive, got {a}")));
        }
        if let Some(h) = self.h_values.iter().find(|h| !(**h > 0.0 && h.is_finite())) {
            return Err(config(format!("h values must be positive, got {h}")));
        }
        if !(self.tolerance > 0.0) {
            return Err(config("sweep tolerance must be positive"));
        }
        if self.max_iter == 0 {
            return Err(config("sweep max_iter must be at least 1"));
        }
        Ok(())
    }

    /// Shooting configuration of one cell, taking everything else from `base`.
    pub fn cell_config(&self, base: &ShootingConfig, alpha2: f64, h: f64) -> Result<ShootingConfig> {
        let kernel =
            KernelSpec::new(self.kernel_family, self.nu, libm::sqrt(alpha2), base.system.kernel.is_normalized())?;
        Ok(ShootingConfig {
            h,
            epsilon: self.tolerance,
            max_iter: self.max_iter,
            system: SystemSpec { kernel, ..base.system },
            ..*base
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepCell {
    pub alpha2: f64,
    pub h: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

/// Sweep results in row-major order: one row per `α²`, one column per `h`.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable {
    pub alpha2_values: Vec<f64>,
    pub h_values: Vec<f64>,
    pub cells: Vec<SweepCell>,
}

impl SweepTable {
    pub fn get(&self, row: usize, col: usize) -> &SweepCell {
        &self.cells[row * self.h_values.len() + col]
    }

    pub fn column(&self, col: usize) -> impl Iterator<Item = &SweepCell> {
        self.cells.iter().skip(col).step_by(self.h_values.len())
    }

    pub fn row(&self, row: usize) -> &[SweepCell] {
        let w = self.h_values.len();
        &self.cells[row * w..(row + 1) * w]
    }

    /// Cells that diverged or hit the iteration cap.
    pub fn failures(&self) -> usize {
        self.cells.iter().filter(|c| !c.converged).count()
    }
}

/// Validates the grid and that both templates have `grid.n_landmarks` points.
pub fn check_sweep_inputs(reference: &LandmarkTemplate, target: &LandmarkTemplate, grid: &SweepGrid) -> Result<()> {
    grid.validate()?;
    if reference.len() != grid.n_landmarks || target.len() != grid.n_landmarks {
        return Err(config(format!(
            "sweep grid expects {} landmarks, templates have {} and {}",
            grid.n_landmarks,
            reference.len(),
            target.len()
        )));
    }
    Ok(())
}

/// One sweep cell. Exposed so callers can schedule cells themselves.
pub fn run_sweep_cell(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    grid: &SweepGrid,
    base: &ShootingConfig,
    alpha2: f64,
    h: f64,
) -> Result<SweepCell> {
    let cfg = grid.cell_config(base, alpha2, h)?;
    let r = match match_templates(reference, target, &cfg) {
        Ok(r) => r,
        Err(Error::Degenerate(_)) if cfg.update_space == UpdateSpace::Velocity => {
            return Ok(SweepCell {
                alpha2,
                h,
                iterations: 0,
                converged: false,
                termination: Termination::IndefiniteGram,
            })
        }
        Err(e) => return Err(e),
    };
    Ok(SweepCell { alpha2, h, iterations: r.iterations, converged: r.converged, termination: r.termination })
}

/// Runs every grid cell in row-major order. A cell that blows up, needs
/// more than `max_iter` iterations or whose Gram matrix cannot be factored
/// is recorded as not converged.
pub fn convergence_sweep(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    grid: &SweepGrid,
    base: &ShootingConfig,
) -> Result<SweepTable> {
    check_sweep_inputs(reference, target, grid)?;
    let mut cells = Vec::with_capacity(grid.alpha2_values.len() * grid.h_values.len());
    for &a2 in &grid.alpha2_values {
        for &h in &grid.h_values {
            cells.push(run_sweep_cell(reference, target, grid, base, a2, h)?);
        }
    }
    Ok(SweepTable { alpha2_values: grid.alpha2_values.clone(), h_values: grid.h_values.clone(), cells })
}

/// Hamiltonian distance from one template to another.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceRecord {
    pub reference_label: String,
    pub target_label: String,
    /// `H` of the matching geodesic.
    pub hamiltonian: f64,
    /// `2H`, the squared geodesic length.
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl DistanceRecord {
    fn from_result(reference: &LandmarkTemplate, target: &LandmarkTemplate, r: &MatchResult) -> Self {
        DistanceRecord {
            reference_label: reference.label().to_string(),
            target_label: target.label().to_string(),
            hamiltonian: r.hamiltonian,
            energy: r.energy(),
            iterations: r.iterations,
            converged: r.converged,
        }
    }
}

/// Matches `reference` to `target` and reports the Hamiltonian. A run that
/// does not converge still yields a record, flagged `converged = false`.
pub fn shape_distance(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    cfg: &ShootingConfig,
) -> Result<DistanceRecord> {
    let r = match_templates(reference, target, cfg)?;
    Ok(DistanceRecord::from_result(reference, target, &r))
}

fn converged_distance(a: &LandmarkTemplate, b: &LandmarkTemplate, cfg: &ShootingConfig) -> Result<DistanceRecord> {
    let d = shape_distance(a, b, cfg)?;
    if !d.converged {
        return Err(Error::NotConverged { reference: d.reference_label, target: d.target_label });
    }
    Ok(d)
}

/// `H(g(A), g(B)) − H(A, B)`.
///
/// Every stage of the pipeline is equivariant, but the max-norm stopping
/// test is not invariant under rotations, so a rotated run can stop one
/// iteration earlier or later. Use [`ResidualNorm::L2`] to compare runs
/// iteration for iteration.
///
/// [`ResidualNorm::L2`]: crate::shooting::ResidualNorm::L2
pub fn iso_invariance_check(
    a: &LandmarkTemplate,
    b: &LandmarkTemplate,
    g: &Isometry,
    cfg: &ShootingConfig,
) -> Result<f64> {
    let before = converged_distance(a, b, cfg)?;
    let after = converged_distance(&a.transformed(g), &b.transformed(g), cfg)?;
    Ok(after.hamiltonian - before.hamiltonian)
}

/// Which number the clustering thresholds are compared with.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DistanceMeasure {
    #[default]
    Hamiltonian,
    /// `2H`.
    Energy,
}

impl DistanceMeasure {
    pub fn of(self, d: &DistanceRecord) -> f64 {
        match self {
            DistanceMeasure::Hamiltonian => d.hamiltonian,
            DistanceMeasure::Energy => d.energy,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Preprocess {
    #[default]
    None,
    /// Translate every template so its centroid is at the origin.
    Center,
}

/// Thresholds of the two-shape cluster test. There are no defaults: the
/// verdict depends on them.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterCriteria {
    /// Upper bound on the distance between the two candidates.
    pub pair: f64,
    /// Upper bound on `|d(ref, A) − d(ref, B)|` for every reference.
    pub ref_diff: f64,
    pub measure: DistanceMeasure,
    pub preprocess: Preprocess,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClusterVerdict {
    pub same_cluster: bool,
    /// False when any match failed to converge; the verdict is then
    /// computed from unconverged values and should not be trusted.
    pub conclusive: bool,
    /// `d(A, B)` in the chosen measure.
    pub pair_distance: f64,
    /// `|d(ref, A) − d(ref, B)|` per reference, in order.
    pub ref_differences: Vec<f64>,
    /// `(ref, A)`, `(ref, B)` for each reference, then `(A, B)`.
    pub evidence: Vec<DistanceRecord>,
}

/// Decides whether `a` and `b` belong to the same cluster by comparing their
/// distances to each other and to well-separated references.
pub fn cluster_test(
    a: &LandmarkTemplate,
    b: &LandmarkTemplate,
    refs: &[LandmarkTemplate],
    criteria: &ClusterCriteria,
    cfg: &ShootingConfig,
) -> Result<ClusterVerdict> {
    if refs.len() < 2 {
        return Err(config("the cluster test needs at least two references"));
    }
    let prep = |t: &LandmarkTemplate| match criteria.preprocess {
        Preprocess::None => t.clone(),
        Preprocess::Center => t.centered(),
    };
    let (a, b) = (prep(a), prep(b));
    let m = criteria.measure;
    let mut evidence = Vec::with_capacity(2 * refs.len() + 1);
    let mut ref_differences = Vec::with_capacity(refs.len());
    for r in refs {
        let r = prep(r);
        let ra = shape_distance(&r, &a, cfg)?;
        let rb = shape_distance(&r, &b, cfg)?;
        ref_differences.push(libm::fabs(m.of(&ra) - m.of(&rb)));
        evidence.push(ra);
        evidence.push(rb);
    }
    let ab = shape_distance(&a, &b, cfg)?;
    let pair_distance = m.of(&ab);
    evidence.push(ab);
    let same_cluster = pair_distance <= criteria.pair && ref_differences.iter().all(|d| *d <= criteria.ref_diff);
    Ok(ClusterVerdict {
        same_cluster,
        conclusive: evidence.iter().all(|d| d.converged),
        pair_distance,
        ref_differences,
        evidence,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TriangleCheck {
    pub from: String,
    pub to: String,
    pub via: String,
    /// `H(from, to)`.
    pub direct: f64,
    /// `H(from, via) + H(via, to)`.
    pub detour: f64,
    pub holds: bool,
}

/// Checks `H(x, y) ≤ H(x, z) + H(z, y)` for every triple of labels whose
/// three distances are present in `records`.
///
/// `H` is not symmetric; a missing direction is filled in from the reverse
/// record. This is an audit: nothing guarantees the inequality.
pub fn triangle_audit(records: &[DistanceRecord]) -> Vec<TriangleCheck> {
    let lookup = |x: &str, y: &str| {
        records
            .iter()
            .find(|d| d.reference_label == x && d.target_label == y)
            .or_else(|| records.iter().find(|d| d.reference_label == y && d.target_label == x))
            .map(|d| d.hamiltonian)
    };
    let mut labels: Vec<&str> = Vec::new();
    for d in records {
        for l in [d.reference_label.as_str(), d.target_label.as_str()] {
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
    }
    let mut out = Vec::new();
    for &x in &labels {
        for &y in &labels {
            if x == y {
                continue;
            }
            let Some(direct) = lookup(x, y) else { continue };
            for &z in &labels {
                if z == x || z == y {
                    continue;
                }
                if let (Some(xz), Some(zy)) = (lookup(x, z), lookup(z, y)) {
                    let detour = xz + zy;
                    out.push(TriangleCheck {
                        from: x.to_string(),
                        to: y.to_string(),
                        via: z.to_string(),
                        direct,
                        detour,
                        holds: direct <= detour,
                    });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    /// Reference evolved to `t_predict`.
    pub predicted: LandmarkTemplate,
    /// The fit over `[0, t_match]`.
    pub fit: MatchResult,
    /// Trajectory over `[0, t_predict]` from the fitted momenta.
    pub trajectory: Trajectory,
}

fn steps_for(t: f64, dt: f64) -> usize {
    libm::round(t / dt).max(1.0) as usize
}

/// Fits initial momenta that carry `reference` to `observed` at `t_match`,
/// then continues the geodesic to `t_predict`.
///
/// The integrator step `cfg.evolve.t_final / cfg.evolve.steps` is kept for
/// both legs.
pub fn predict(
    reference: &LandmarkTemplate,
    observed: &LandmarkTemplate,
    t_match: f64,
    t_predict: f64,
    cfg: &ShootingConfig,
) -> Result<Prediction> {
    if !(t_match > 0.0 && t_match.is_finite()) {
        return Err(config(format!("t_match must be positive, got {t_match}")));
    }
    if !(t_predict >= t_match && t_predict.is_finite()) {
        return Err(config(format!("t_predict ({t_predict}) must not precede t_match ({t_match})")));
    }
    cfg.validate()?;
    let dt = cfg.evolve.dt();
    let fit_cfg = ShootingConfig { evolve: EvolveConfig::new(t_match, steps_for(t_match, dt))?, ..*cfg };
    let fit = match_templates(reference, observed, &fit_cfg)?;
    if !fit.converged {
        return Err(Error::NotConverged {
            reference: reference.label().to_string(),
            target: observed.label().to_string(),
        });
    }
    let start = ParticleState::new(reference.points().to_vec(), fit.p0.clone())?;
    let leg = EvolveConfig {
        capture_every: cfg.evolve.capture_every,
        ..EvolveConfig::new(t_predict, steps_for(t_predict, dt))?
    };
    let trajectory = evolve(&cfg.system, &start, &leg)?;
    let predicted = LandmarkTemplate::from_raw(
        format!("{}@t={}", reference.label(), t_predict),
        trajectory.final_state().q.clone(),
    );
    Ok(Prediction { predicted, fit, trajectory })
}

/// One matching variant of an exact-vs-inexact comparison.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InexactCase {
    /// 0 selects exact matching.
    pub sigma2: f64,
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonRow {
    pub sigma2: f64,
    pub h: f64,
    pub hamiltonian: f64,
    pub energy: f64,
    /// `½σ² Σ|p_i|²` of the converged momenta.
    pub penalty: f64,
    /// `‖I₁ − I₁⁽ᵏ⁾‖∞` at termination.
    pub target_residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub stop_rule: StopRule,
}

/// Runs each case with the kernel, tolerance and integrator of `cfg`.
///
/// `σ² = 0` cases keep `cfg.stop_rule`; inexact cases stop on the momentum
/// delta.
pub fn exact_vs_inexact(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    cases: &[InexactCase],
    cfg: &ShootingConfig,
) -> Result<Vec<ComparisonRow>> {
    cases
        .iter()
        .map(|case| {
            let stop_rule = if case.sigma2 > 0.0 { StopRule::MomentumDelta } else { cfg.stop_rule };
            let run = ShootingConfig {
                h: case.h,
                stop_rule,
                system: SystemSpec::inexact(cfg.system.kernel, case.sigma2)?,
                ..*cfg
            };
            let r = match_templates(reference, target, &run)?;
            let penalty = 0.5 * case.sigma2 * r.p0.iter().map(|p| p.norm_sq()).sum::<f64>();
            Ok(ComparisonRow {
                sigma2: case.sigma2,
                h: case.h,
                hamiltonian: r.hamiltonian,
                energy: r.energy(),
                penalty,
                target_residual: r.target_residual,
                iterations: r.iterations,
                converged: r.converged,
                stop_rule,
            })
        })
        .collect()
}
