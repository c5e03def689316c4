//! JSON and CSV documents read and written by the tool.
//!
//! Every JSON document carries a `version` field; readers reject versions
//! they do not know. Template files may omit it, since hand-written landmark
//! lists are a common input.

use std::fs;
use std::io::Write;
use std::path::Path;

use epshoot_core::analysis::{ClusterVerdict, ComparisonRow, DistanceRecord, SweepTable, TriangleCheck};
use epshoot_core::integrator::Trajectory;
use epshoot_core::kernels::KernelFamily;
use epshoot_core::shooting::{MatchResult, ResidualNorm, StopRule, UpdateSpace};
use epshoot_core::{LandmarkTemplate, ShootingConfig, Vec2};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const SCHEMA_VERSION: u32 = 1;

fn check_version(path: &Path, version: Option<u32>) -> CliResult<()> {
    match version {
        None | Some(SCHEMA_VERSION) => Ok(()),
        Some(v) => Err(CliError::format(
            path,
            format!("unsupported schema version {v} (this build reads version {SCHEMA_VERSION})"),
        )),
    }
}

pub fn points_to_json(points: &[Vec2]) -> Vec<[f64; 2]> {
    points.iter().map(|&p| p.into()).collect()
}

fn points_from_json(points: &[[f64; 2]]) -> Vec<Vec2> {
    points.iter().map(|&p| p.into()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<u32>,
    pub label: String,
    pub points: Vec<[f64; 2]>,
}

impl From<&LandmarkTemplate> for TemplateDoc {
    fn from(t: &LandmarkTemplate) -> Self {
        TemplateDoc { version: Some(SCHEMA_VERSION), label: t.label().to_string(), points: points_to_json(t.points()) }
    }
}

pub fn template_from_str(path: &Path, text: &str) -> CliResult<LandmarkTemplate> {
    let doc: TemplateDoc = serde_json::from_str(text).map_err(|e| CliError::format(path, e.to_string()))?;
    check_version(path, doc.version)?;
    LandmarkTemplate::new(doc.label, points_from_json(&doc.points)).map_err(|e| CliError::format(path, e.to_string()))
}

pub fn read_template(path: &Path) -> CliResult<LandmarkTemplate> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    template_from_str(path, &text)
}

pub fn write_template(path: &Path, t: &LandmarkTemplate) -> CliResult<()> {
    write_json(path, &TemplateDoc::from(t))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::format(path, e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEcho {
    pub family: String,
    pub nu: Option<f64>,
    pub alpha: f64,
    pub normalized: bool,
}

/// Every setting that influences a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigEcho {
    pub kernel: KernelEcho,
    pub sigma2: f64,
    pub h: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub update: String,
    pub stop: String,
    pub norm: String,
    pub t_final: f64,
    pub steps: usize,
}

pub fn family_name(f: KernelFamily) -> &'static str {
    match f {
        KernelFamily::Conical => "conical",
        KernelFamily::Gaussian => "gaussian",
        KernelFamily::BesselGeneral => "bessel",
    }
}

impl From<&ShootingConfig> for ConfigEcho {
    fn from(c: &ShootingConfig) -> Self {
        let k = &c.system.kernel;
        ConfigEcho {
            kernel: KernelEcho {
                family: family_name(k.family()).to_string(),
                nu: k.nu().is_finite().then_some(k.nu()),
                alpha: k.alpha(),
                normalized: k.is_normalized(),
            },
            sigma2: c.system.sigma2,
            h: c.h,
            epsilon: c.epsilon,
            max_iter: c.max_iter,
            update: match c.update_space {
                UpdateSpace::Velocity => "velocity",
                UpdateSpace::Momentum => "momentum",
            }
            .to_string(),
            stop: match c.stop_rule {
                StopRule::TargetResidual => "residual",
                StopRule::MomentumDelta => "momentum-delta",
            }
            .to_string(),
            norm: match c.norm {
                ResidualNorm::MaxAbs => "max",
                ResidualNorm::L2 => "l2",
            }
            .to_string(),
            t_final: c.evolve.t_final,
            steps: c.evolve.steps,
        }
    }
}

/// Serialized [`MatchResult`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatchDoc {
    pub version: u32,
    pub reference: String,
    pub target: String,
    pub method: String,
    pub p0: Vec<[f64; 2]>,
    /// Hamiltonian `½ Σ (p_i·p_j) G` of the initial state.
    #[serde(rename = "H")]
    pub hamiltonian: f64,
    /// `2H`.
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: String,
    pub residual_history: Vec<f64>,
    pub residual_l2_history: Vec<f64>,
    pub initial_residual: f64,
    pub target_residual: f64,
    pub evolves: usize,
    pub final_points: Vec<[f64; 2]>,
    pub warnings: Vec<String>,
    pub config: ConfigEcho,
}

impl MatchDoc {
    pub fn new(
        reference: &LandmarkTemplate,
        target: &LandmarkTemplate,
        method: &str,
        r: &MatchResult,
        cfg: &ShootingConfig,
    ) -> Self {
        MatchDoc {
            version: SCHEMA_VERSION,
            reference: reference.label().to_string(),
            target: target.label().to_string(),
            method: method.to_string(),
            p0: points_to_json(&r.p0),
            hamiltonian: r.hamiltonian,
            energy: r.energy(),
            iterations: r.iterations,
            converged: r.converged,
            termination: r.termination.to_string(),
            residual_history: r.residual_history.clone(),
            residual_l2_history: r.residual_l2_history.clone(),
            initial_residual: r.initial_residual,
            target_residual: r.target_residual,
            evolves: r.evolves,
            final_points: points_to_json(r.final_template.points()),
            warnings: r.warnings.iter().map(|w| w.to_string()).collect(),
            config: cfg.into(),
        }
    }

    pub fn momenta(&self) -> Vec<Vec2> {
        points_from_json(&self.p0)
    }
}

pub fn read_match(path: &Path) -> CliResult<MatchDoc> {
    #[derive(Deserialize)]
    struct Probe {
        version: Option<u32>,
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let probe: Probe = serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))?;
    match probe.version {
        Some(_) => check_version(path, probe.version)?,
        None => return Err(CliError::format(path, "match result has no version field")),
    }
    serde_json::from_str(&text).map_err(|e| CliError::format(path, e.to_string()))
}

fn csv_writer(path: &Path) -> CliResult<csv::Writer<fs::File>> {
    csv::Writer::from_path(path).map_err(|e| csv_error(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> CliError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => CliError::io(path, io),
        other => CliError::format(path, format!("{other:?}")),
    }
}

/// `t,i,qx,qy,px,py`, one row per particle per frame.
pub fn write_trajectory_csv(path: &Path, tr: &Trajectory) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    w.write_record(["t", "i", "qx", "qy", "px", "py"]).map_err(err)?;
    for f in &tr.frames {
        for (i, (q, p)) in f.state.q.iter().zip(&f.state.p).enumerate() {
            w.serialize((f.t, i, q.x, q.y, p.x, p.y)).map_err(err)?;
        }
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// `iteration,residual,residual_l2`; iteration 0 is the initial guess.
pub fn write_residuals_csv(path: &Path, r: &MatchResult) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    let err = |e| csv_error(path, e);
    w.write_record(["iteration", "residual", "residual_l2"]).map_err(err)?;
    w.serialize((0usize, r.initial_residual, r.initial_residual_l2)).map_err(err)?;
    for (k, (a, b)) in r.residual_history.iter().zip(&r.residual_l2_history).enumerate() {
        w.serialize((k + 1, a, b)).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha2: f64,
    pub h: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// `alpha2,h,iterations,converged` in row-major grid order.
pub fn write_sweep_csv(path: &Path, table: &SweepTable) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    for c in &table.cells {
        w.serialize(SweepRow { alpha2: c.alpha2, h: c.h, iterations: c.iterations, converged: c.converged })
            .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn read_sweep_csv(path: &Path) -> CliResult<Vec<SweepRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().map(|row| row.map_err(|e| csv_error(path, e))).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceDoc {
    pub reference: String,
    pub target: String,
    #[serde(rename = "H")]
    pub hamiltonian: f64,
    pub energy: f64,
    pub iterations: usize,
    pub converged: bool,
}

impl From<&DistanceRecord> for DistanceDoc {
    fn from(d: &DistanceRecord) -> Self {
        DistanceDoc {
            reference: d.reference_label.clone(),
            target: d.target_label.clone(),
            hamiltonian: d.hamiltonian,
            energy: d.energy,
            iterations: d.iterations,
            converged: d.converged,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistancesDoc {
    pub version: u32,
    pub records: Vec<DistanceDoc>,
    pub config: ConfigEcho,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TriangleDoc {
    pub from: String,
    pub to: String,
    pub via: String,
    pub direct: f64,
    pub detour: f64,
    pub holds: bool,
}

impl From<&TriangleCheck> for TriangleDoc {
    fn from(t: &TriangleCheck) -> Self {
        TriangleDoc {
            from: t.from.clone(),
            to: t.to.clone(),
            via: t.via.clone(),
            direct: t.direct,
            detour: t.detour,
            holds: t.holds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClusterDoc {
    pub version: u32,
    pub same_cluster: bool,
    pub conclusive: bool,
    pub measure: String,
    pub pair_threshold: f64,
    pub ref_diff_threshold: f64,
    pub pair_distance: f64,
    pub ref_differences: Vec<f64>,
    pub records: Vec<DistanceDoc>,
    pub triangle_audit: Vec<TriangleDoc>,
    pub config: ConfigEcho,
}

impl ClusterDoc {
    pub fn new(
        v: &ClusterVerdict,
        measure: &str,
        pair: f64,
        ref_diff: f64,
        audit: &[TriangleCheck],
        cfg: &ShootingConfig,
    ) -> Self {
        ClusterDoc {
            version: SCHEMA_VERSION,
            same_cluster: v.same_cluster,
            conclusive: v.conclusive,
            measure: measure.to_string(),
            pair_threshold: pair,
            ref_diff_threshold: ref_diff,
            pair_distance: v.pair_distance,
            ref_differences: v.ref_differences.clone(),
            records: v.evidence.iter().map(DistanceDoc::from).collect(),
            triangle_audit: audit.iter().map(TriangleDoc::from).collect(),
            config: cfg.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonCsvRow {
    pub sigma2: f64,
    pub h: f64,
    #[serde(rename = "H")]
    pub hamiltonian: f64,
    pub energy: f64,
    pub penalty: f64,
    pub target_residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn write_comparison_csv(path: &Path, rows: &[ComparisonRow]) -> CliResult<()> {
    let mut w = csv_writer(path)?;
    for r in rows {
        w.serialize(ComparisonCsvRow {
            sigma2: r.sigma2,
            h: r.h,
            hamiltonian: r.hamiltonian,
            energy: r.energy,
            penalty: r.penalty,
            target_residual: r.target_residual,
            iterations: r.iterations,
            converged: r.converged,
        })
        .map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

/// Writes `text` to `path`, creating parent directories.
pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut f = fs::File::create(path).map_err(|e| CliError::io(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| CliError::io(path, e))
}
