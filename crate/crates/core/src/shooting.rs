//! Geodesic shooting: find initial momenta that carry a reference template
//! onto a target.
//!
//! [`match_templates`] is the feedback iteration
//!
//! ```text
//! r⁽ᵏ⁾    = I₁ − I₁⁽ᵏ⁾              (shooting error at t = T)
//! u⁽ᵏ⁺¹⁾  = u⁽ᵏ⁾ + h r⁽ᵏ⁾            (velocity at the initial landmarks)
//! p⁽ᵏ⁺¹⁾  = (K ⊗ I₂)⁻¹ u⁽ᵏ⁺¹⁾
//! ```
//!
//! started from `u⁽⁰⁾ = 0`. [`newton_match`] replaces `h·I` by the damped
//! inverse of a finite-difference Jacobian and serves as a baseline.
//!
//! Residuals are stacked as `(q₁x, q₁y, q₂x, q₂y, …)`. One *iteration* is one
//! update of the momenta followed by the shoot that evaluates it, so
//! `residual_history[k − 1]` belongs to `p⁽ᵏ⁾`.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{config, Error, Result};
use crate::geometry::{l2_norm, max_abs, Vec2};
use crate::integrator::{shoot_into, EvolveConfig, Rk4};
use crate::kernels::{gram_matrix, KernelSpec};
use crate::linalg::{spd_condition_estimate, Cholesky, Lu, SquareMatrix};
use crate::particles::{hamiltonian_of, SystemSpec};
use crate::shapes::LandmarkTemplate;

/// Gram matrices with a condition estimate above this get a warning.
pub const ILL_CONDITIONED: f64 = 1e12;

/// A run is declared diverged once its residual exceeds this multiple of the
/// initial residual.
pub const BLOW_UP_FACTOR: f64 = 1e6;

/// Where the feedback correction `h·r` is added.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum UpdateSpace {
    /// To the velocity at the initial landmarks, converted to momenta with
    /// the Gram system.
    #[default]
    Velocity,
    /// Directly to the momenta.
    Momentum,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRule {
    /// `‖I₁ − I₁⁽ᵏ⁾‖ < ε`; exact matching.
    #[default]
    TargetResidual,
    /// `‖u⁽ᵏ⁾ − u⁽ᵏ⁻¹⁾‖ < ε` (the change in the updated variable);
    /// required for inexact matching, whose target residual need not vanish.
    MomentumDelta,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ResidualNorm {
    /// Largest absolute coordinate of the stacked `2N` vector.
    #[default]
    MaxAbs,
    /// Euclidean norm of the stacked vector. Unlike `MaxAbs` this is
    /// invariant under rotations.
    L2,
}

impl ResidualNorm {
    pub fn of(self, v: &[Vec2]) -> f64 {
        match self {
            ResidualNorm::MaxAbs => max_abs(v),
            ResidualNorm::L2 => l2_norm(v),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ShootingConfig {
    /// Search length; the update gain is `h·I`.
    pub h: f64,
    pub epsilon: f64,
    pub max_iter: usize,
    pub update_space: UpdateSpace,
    pub stop_rule: StopRule,
    pub norm: ResidualNorm,
    pub evolve: EvolveConfig,
    pub system: SystemSpec,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            h: 0.3,
            epsilon: 1e-3,
            max_iter: 500,
            update_space: UpdateSpace::Velocity,
            stop_rule: StopRule::TargetResidual,
            norm: ResidualNorm::MaxAbs,
            evolve: EvolveConfig::default(),
            system: SystemSpec::exact(KernelSpec::conical(1.0).expect("unit conical kernel is valid")),
        }
    }
}

impl ShootingConfig {
    pub fn with_kernel(kernel: KernelSpec) -> Self {
        ShootingConfig { system: SystemSpec::exact(kernel), ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(config(format!("search length h must be positive, got {}", self.h)));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(config(format!("tolerance must be positive, got {}", self.epsilon)));
        }
        if self.max_iter == 0 {
            return Err(config("max_iter must be at least 1"));
        }
        self.evolve.validate()?;
        self.system.validate()?;
        if !self.system.is_exact() && self.stop_rule != StopRule::MomentumDelta {
            return Err(config(
                "inexact matching (sigma2 > 0) must stop on the momentum delta; \
                 its target residual does not vanish",
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Divergence {
    NonFinite { step: usize, time: f64 },
    ResidualBlowUp { residual: f64 },
    Coincident { i: usize, j: usize },
}

impl fmt::Display for Divergence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("step too large: ")?;
        match self {
            Divergence::NonFinite { step, time } => {
                write!(f, "state became non-finite at integrator step {step} (t = {time})")
            }
            Divergence::ResidualBlowUp { residual } => {
                write!(f, "residual grew to {residual:e}, over {BLOW_UP_FACTOR:e} times its initial value")
            }
            Divergence::Coincident { i, j } => write!(f, "particles {i} and {j} collided"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Termination {
    Converged,
    MaxIterations,
    Diverged(Divergence),
    /// The reference Gram matrix is numerically not positive definite, so no
    /// iteration was run. Only produced by sweeps; a single match reports it
    /// as an error.
    IndefiniteGram,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Termination::Converged => f.write_str("converged"),
            Termination::MaxIterations => f.write_str("iteration cap reached"),
            Termination::Diverged(d) => write!(f, "diverged ({d})"),
            Termination::IndefiniteGram => f.write_str("Gram matrix not positive definite"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MatchWarning {
    IllConditionedGram {
        condition: f64,
    },
    /// Bessel order in `(1, 3/2)`: bounded kernel with a singular derivative.
    UnmollifiedKernel {
        nu: f64,
    },
}

impl fmt::Display for MatchWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MatchWarning::IllConditionedGram { condition } => {
                write!(f, "Gram matrix is ill-conditioned (condition ~ {condition:.3e})")
            }
            MatchWarning::UnmollifiedKernel { nu } => {
                write!(f, "kernel order nu = {nu} has an unbounded derivative at the origin and is used unmollified")
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatchResult {
    /// Initial momenta of the last accepted iterate.
    pub p0: Vec<Vec2>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    /// Stopping-rule value after each iteration.
    pub residual_history: Vec<f64>,
    /// `‖I₁ − I₁⁽ᵏ⁾‖₂` after each iteration, whatever the stopping rule.
    pub residual_l2_history: Vec<f64>,
    /// `‖I₁ − I₁⁽⁰⁾‖` in the configured norm.
    pub initial_residual: f64,
    pub initial_residual_l2: f64,
    /// `‖I₁ − I₁⁽ᵏ⁾‖∞` at termination.
    pub target_residual: f64,
    /// `½ Σ (p_i·p_j) G(|q_i − q_j|)` at `t = 0`.
    pub hamiltonian: f64,
    /// Evolved reference at `t = T` for `p0`.
    pub final_template: LandmarkTemplate,
    /// Number of full trajectory integrations performed.
    pub evolves: usize,
    pub warnings: Vec<MatchWarning>,
}

impl MatchResult {
    /// `2H`, the squared length of the geodesic.
    pub fn energy(&self) -> f64 {
        2.0 * self.hamiltonian
    }
}

/// The Gram matrix over the initial landmarks with its factorization.
#[derive(Clone, Debug)]
pub struct GramSystem {
    matrix: SquareMatrix,
    chol: Cholesky,
    condition: f64,
}

impl GramSystem {
    pub fn new(kernel: &KernelSpec, q0: &[Vec2]) -> Result<Self> {
        let matrix = gram_matrix(kernel, q0)?;
        let chol = Cholesky::new(&matrix)?;
        let condition = spd_condition_estimate(&matrix, &chol);
        Ok(GramSystem { matrix, chol, condition })
    }

    pub fn matrix(&self) -> &SquareMatrix {
        &self.matrix
    }

    /// 2-norm condition estimate.
    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// `p` with `(K ⊗ I₂) p = u`.
    pub fn momenta(&self, u: &[Vec2]) -> Vec<Vec2> {
        let mut x: Vec<f64> = u.iter().map(|v| v.x).collect();
        let mut y: Vec<f64> = u.iter().map(|v| v.y).collect();
        self.chol.solve_in_place(&mut x);
        self.chol.solve_in_place(&mut y);
        x.into_iter().zip(y).map(|(x, y)| Vec2::new(x, y)).collect()
    }

    /// `(K ⊗ I₂) p`.
    pub fn velocities(&self, p: &[Vec2]) -> Vec<Vec2> {
        let n = self.matrix.dim();
        (0..n).map(|i| self.matrix.row(i).iter().zip(p).fold(Vec2::ZERO, |acc, (k, v)| acc + *v * *k)).collect()
    }
}

/// Inverts `u_i = Σ_j G(|q_i − q_j|) p_j` at the landmarks `q0`.
pub fn momenta_from_velocity(kernel: &KernelSpec, q0: &[Vec2], u0: &[Vec2]) -> Result<Vec<Vec2>> {
    if q0.len() != u0.len() {
        return Err(config(format!("{} landmarks but {} velocities", q0.len(), u0.len())));
    }
    Ok(GramSystem::new(kernel, q0)?.momenta(u0))
}

/// Per-iteration ratios `‖r⁽ᵏ⁺¹⁾‖₂ / ‖r⁽ᵏ⁾‖₂`, starting from the initial
/// residual; empty for runs shorter than 3 iterations.
///
/// The Euclidean norm is used because max-norm ratios of a contracting
/// iteration can oscillate above 1 as the largest coordinate moves between
/// landmarks.
pub fn contraction_diagnostics(result: &MatchResult) -> Vec<f64> {
    if result.iterations < 3 {
        return Vec::new();
    }
    let mut prev = result.initial_residual_l2;
    result
        .residual_l2_history
        .iter()
        .map(|&r| {
            let ratio = r / prev;
            prev = r;
            ratio
        })
        .collect()
}

/// The last half (rounded up) of a ratio list.
pub fn contraction_tail(ratios: &[f64]) -> &[f64] {
    &ratios[ratios.len() / 2..]
}

fn kernel_warnings(cfg: &ShootingConfig) -> Vec<MatchWarning> {
    let k = &cfg.system.kernel;
    if k.needs_mollification() {
        vec![MatchWarning::UnmollifiedKernel { nu: k.nu() }]
    } else {
        Vec::new()
    }
}

fn check_pair(reference: &LandmarkTemplate, target: &LandmarkTemplate) -> Result<()> {
    if reference.len() != target.len() {
        return Err(Error::SizeMismatch { reference: reference.len(), target: target.len() });
    }
    Ok(())
}

/// Integrations from the fixed reference with reused buffers.
struct Shooter<'a> {
    cfg: &'a ShootingConfig,
    q0: &'a [Vec2],
    target: &'a [Vec2],
    rk: Rk4,
    q: Vec<Vec2>,
    p: Vec<Vec2>,
    last_q: Vec<Vec2>,
    evolves: usize,
}

impl<'a> Shooter<'a> {
    fn new(cfg: &'a ShootingConfig, q0: &'a [Vec2], target: &'a [Vec2]) -> Self {
        Shooter {
            cfg,
            q0,
            target,
            rk: Rk4::new(q0.len()),
            q: Vec::with_capacity(q0.len()),
            p: Vec::with_capacity(q0.len()),
            last_q: q0.to_vec(),
            evolves: 0,
        }
    }

    /// Residual `target − q(T)` for initial momenta `p0`. `accept` records
    /// `q(T)` as the current final template.
    fn shoot(&mut self, p0: &[Vec2], accept: bool) -> Result<Vec<Vec2>> {
        self.evolves += 1;
        shoot_into(&self.cfg.system, self.q0, p0, &self.cfg.evolve, &mut self.rk, &mut self.q, &mut self.p)?;
        if accept {
            self.last_q.clone_from(&self.q);
        }
        Ok(self.target.iter().zip(&self.q).map(|(t, q)| *t - *q).collect())
    }
}

/// Iteration bookkeeping shared by both solvers.
struct Trace {
    iterations: usize,
    history: Vec<f64>,
    l2_history: Vec<f64>,
    initial: f64,
    initial_l2: f64,
    termination: Option<Termination>,
}

impl Trace {
    fn start(r0: &[Vec2], cfg: &ShootingConfig) -> Self {
        let initial = cfg.norm.of(r0);
        let done = max_abs(r0) == 0.0 || (cfg.stop_rule == StopRule::TargetResidual && initial < cfg.epsilon);
        Trace {
            iterations: 0,
            history: Vec::new(),
            l2_history: Vec::new(),
            initial,
            initial_l2: l2_norm(r0),
            termination: done.then_some(Termination::Converged),
        }
    }

    fn running(&self, cfg: &ShootingConfig) -> bool {
        self.termination.is_none() && self.iterations < cfg.max_iter
    }

    /// Books an accepted iterate with residual `r` reached by an update of
    /// size `delta`.
    fn record(&mut self, r: &[Vec2], delta: f64, cfg: &ShootingConfig) {
        self.iterations += 1;
        let rn = cfg.norm.of(r);
        let value = match cfg.stop_rule {
            StopRule::TargetResidual => rn,
            StopRule::MomentumDelta => delta,
        };
        self.history.push(value);
        self.l2_history.push(l2_norm(r));
        if !rn.is_finite() || rn > BLOW_UP_FACTOR * self.initial {
            self.termination = Some(Termination::Diverged(Divergence::ResidualBlowUp { residual: rn }));
        } else if value < cfg.epsilon {
            self.termination = Some(Termination::Converged);
        }
    }

    /// Integration failures of a trial iterate end the run; anything else is
    /// a genuine error.
    fn fail(&mut self, e: Error) -> Result<()> {
        let d = match e {
            Error::NonFinite { step, time } => Divergence::NonFinite { step, time },
            Error::Coincident { i, j, .. } => Divergence::Coincident { i, j },
            other => return Err(other),
        };
        self.termination = Some(Termination::Diverged(d));
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        cfg: &ShootingConfig,
        reference: &LandmarkTemplate,
        p0: Vec<Vec2>,
        last_r: &[Vec2],
        shooter: Shooter<'_>,
        warnings: Vec<MatchWarning>,
    ) -> MatchResult {
        let termination = self.termination.unwrap_or(Termination::MaxIterations);
        let hamiltonian = hamiltonian_of(&cfg.system.kernel, reference.points(), &p0);
        let label = format!("{}@t={}", reference.label(), cfg.evolve.t_final);
        MatchResult {
            p0,
            iterations: self.iterations,
            converged: termination == Termination::Converged,
            termination,
            residual_history: self.history,
            residual_l2_history: self.l2_history,
            initial_residual: self.initial,
            initial_residual_l2: self.initial_l2,
            target_residual: max_abs(last_r),
            hamiltonian,
            final_template: LandmarkTemplate::from_raw(label, shooter.last_q),
            evolves: shooter.evolves,
            warnings,
        }
    }
}

fn setup(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    cfg: &ShootingConfig,
    need_gram: bool,
) -> Result<(Option<GramSystem>, Vec<MatchWarning>)> {
    cfg.validate()?;
    check_pair(reference, target)?;
    let mut warnings = kernel_warnings(cfg);
    let gram = if need_gram {
        let g = GramSystem::new(&cfg.system.kernel, reference.points())?;
        if g.condition() > ILL_CONDITIONED {
            warnings.push(MatchWarning::IllConditionedGram { condition: g.condition() });
        }
        Some(g)
    } else {
        None
    };
    Ok((gram, warnings))
}

/// Feedback shooting from `reference` to `target`.
///
/// Divergence and the iteration cap are reported through
/// [`MatchResult::termination`]; errors are reserved for invalid input
/// (mismatched sizes, coincident reference landmarks, bad configuration).
pub fn match_templates(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    cfg: &ShootingConfig,
) -> Result<MatchResult> {
    let (gram, warnings) = setup(reference, target, cfg, cfg.update_space == UpdateSpace::Velocity)?;
    let n = reference.len();
    let mut shooter = Shooter::new(cfg, reference.points(), target.points());
    let mut p = vec![Vec2::ZERO; n];
    let mut u = vec![Vec2::ZERO; n];
    let mut r = shooter.shoot(&p, true)?;
    let mut trace = Trace::start(&r, cfg);

    while trace.running(cfg) {
        let step: Vec<Vec2> = r.iter().map(|v| *v * cfg.h).collect();
        let next = match &gram {
            Some(g) => {
                for (ui, si) in u.iter_mut().zip(&step) {
                    *ui += *si;
                }
                g.momenta(&u)
            }
            None => p.iter().zip(&step).map(|(a, b)| *a + *b).collect(),
        };
        match shooter.shoot(&next, true) {
            Ok(rn) => {
                p = next;
                r = rn;
                trace.record(&r, cfg.norm.of(&step), cfg);
            }
            Err(e) => trace.fail(e)?,
        }
    }
    Ok(trace.finish(cfg, reference, p, &r, shooter, warnings))
}

/// Damped Newton iteration `p ← p + h J⁻¹ r` with `J = ∂q(T)/∂p(0)` built
/// by forward differences, one extra shoot per coordinate.
///
/// Newton iterates do not depend on whether the unknown is `u` or `p`
/// (they are linearly related), so the Jacobian is taken in momentum space.
/// If `J` is singular or a perturbed shoot fails, the iteration falls back
/// to one feedback update in the configured space.
pub fn newton_match(
    reference: &LandmarkTemplate,
    target: &LandmarkTemplate,
    cfg: &ShootingConfig,
) -> Result<MatchResult> {
    let (gram, warnings) = setup(reference, target, cfg, cfg.update_space == UpdateSpace::Velocity)?;
    let n = reference.len();
    let mut shooter = Shooter::new(cfg, reference.points(), target.points());
    let mut p = vec![Vec2::ZERO; n];
    let mut r = shooter.shoot(&p, true)?;
    let mut trace = Trace::start(&r, cfg);

    while trace.running(cfg) {
        let newton =
            jacobian(&mut shooter, &p, &r).and_then(|j| Lu::new(&j).ok()).map(|lu| unflatten(&lu.solve(&flatten(&r))));
        let dp: Vec<Vec2> = match (newton, &gram) {
            (Some(d), _) => d.into_iter().map(|v| v * cfg.h).collect(),
            (None, Some(g)) => g.momenta(&r).into_iter().map(|v| v * cfg.h).collect(),
            (None, None) => r.iter().map(|v| *v * cfg.h).collect(),
        };
        let delta = match &gram {
            Some(g) => cfg.norm.of(&g.velocities(&dp)),
            None => cfg.norm.of(&dp),
        };
        let next: Vec<Vec2> = p.iter().zip(&dp).map(|(a, b)| *a + *b).collect();
        match shooter.shoot(&next, true) {
            Ok(rn) => {
                p = next;
                r = rn;
                trace.record(&r, delta, cfg);
            }
            Err(e) => trace.fail(e)?,
        }
    }
    Ok(trace.finish(cfg, reference, p, &r, shooter, warnings))
}

/// `∂q(T)/∂p(0)` in stacked coordinates, or `None` if a perturbed shoot
/// fails.
fn jacobian(shooter: &mut Shooter<'_>, p: &[Vec2], r: &[Vec2]) -> Option<SquareMatrix> {
    let m = 2 * p.len();
    let step = 1e-7 * libm::fmax(1.0, max_abs(p));
    let base = flatten(r);
    let mut jac = SquareMatrix::zeros(m);
    let mut trial = p.to_vec();
    for c in 0..m {
        let (k, axis) = (c / 2, c % 2);
        let saved = trial[k];
        if axis == 0 {
            trial[k].x += step;
        } else {
            trial[k].y += step;
        }
        let rc = flatten(&shooter.shoot(&trial, false).ok()?);
        trial[k] = saved;
        // q(T) = target − r
        for (row, (b, v)) in base.iter().zip(&rc).enumerate() {
            jac[(row, c)] = (b - v) / step;
        }
    }
    Some(jac)
}

fn flatten(v: &[Vec2]) -> Vec<f64> {
    v.iter().flat_map(|p| [p.x, p.y]).collect()
}

fn unflatten(v: &[f64]) -> Vec<Vec2> {
    v.chunks_exact(2).map(|c| Vec2::new(c[0], c[1])).collect()
}
