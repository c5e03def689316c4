//! Right-hand side, Hamiltonian and diagnostics of the N-particle system.
//!
//! Pairwise sums are direct `O(N²)` loops over `i < j`; each pair's kernel
//! value and derivative are evaluated once and scattered to both particles,
//! which keeps `Σ_i dp_i/dt` antisymmetric to the last bit.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::geometry::{Isometry, Vec2};
use crate::kernels::KernelSpec;

/// Positions and momenta of `N ≥ 1` particles.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleState {
    pub q: Vec<Vec2>,
    pub p: Vec<Vec2>,
}

impl ParticleState {
    pub fn new(q: Vec<Vec2>, p: Vec<Vec2>) -> Result<Self> {
        if q.is_empty() {
            return Err(config("a particle state needs at least one particle"));
        }
        if q.len() != p.len() {
            return Err(config(format!("{} positions but {} momenta", q.len(), p.len())));
        }
        let state = ParticleState { q, p };
        if !state.is_finite() {
            return Err(config("particle state has non-finite entries"));
        }
        Ok(state)
    }

    /// Particles at `q` at rest.
    pub fn at_rest(q: Vec<Vec2>) -> Result<Self> {
        let p = vec![Vec2::ZERO; q.len()];
        Self::new(q, p)
    }

    pub fn len(&self) -> usize {
        self.q.len()
    }

    pub fn is_empty(&self) -> bool {
        self.q.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(&self.p).all(|v| v.is_finite())
    }

    /// Positions move as points, momenta as vectors.
    pub fn transformed(&self, g: &Isometry) -> ParticleState {
        ParticleState {
            q: self.q.iter().map(|&x| g.apply_point(x)).collect(),
            p: self.p.iter().map(|&v| g.apply_vector(v)).collect(),
        }
    }
}

/// Kernel plus the inexactness weight `σ²` (0 selects exact matching).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemSpec {
    pub kernel: KernelSpec,
    pub sigma2: f64,
}

impl SystemSpec {
    pub fn exact(kernel: KernelSpec) -> Self {
        SystemSpec { kernel, sigma2: 0.0 }
    }

    pub fn inexact(kernel: KernelSpec, sigma2: f64) -> Result<Self> {
        let s = SystemSpec { kernel, sigma2 };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma2 >= 0.0 && self.sigma2.is_finite()) {
            return Err(config(format!("sigma2 must be a finite value >= 0, got {}", self.sigma2)));
        }
        Ok(())
    }

    pub fn is_exact(&self) -> bool {
        self.sigma2 == 0.0
    }
}

/// Time derivative of a [`ParticleState`].
#[derive(Clone, Debug, PartialEq)]
pub struct Derivative {
    pub dq: Vec<Vec2>,
    pub dp: Vec<Vec2>,
}

/// `(dq/dt, dp/dt)`.
///
/// Coincident particles are only an error when their momenta interact
/// (`p_i·p_j ≠ 0`), since the derivative term is otherwise multiplied by 0.
pub fn rhs(spec: &SystemSpec, state: &ParticleState) -> Result<Derivative> {
    let n = state.len();
    let mut dq = vec![Vec2::ZERO; n];
    let mut dp = vec![Vec2::ZERO; n];
    rhs_into(spec, &state.q, &state.p, &mut dq, &mut dp)?;
    Ok(Derivative { dq, dp })
}

pub(crate) fn rhs_into(spec: &SystemSpec, q: &[Vec2], p: &[Vec2], dq: &mut [Vec2], dp: &mut [Vec2]) -> Result<()> {
    let n = q.len();
    let kernel = &spec.kernel;
    let self_weight = kernel.value_at_origin() + spec.sigma2;
    for i in 0..n {
        dq[i] = p[i] * self_weight;
        dp[i] = Vec2::ZERO;
    }
    for i in 0..n {
        let (qi, pi) = (q[i], p[i]);
        for j in i + 1..n {
            let d = qi - q[j];
            let r = d.norm();
            let pij = pi.dot(p[j]);
            if r == 0.0 {
                if pij != 0.0 {
                    return Err(Error::Coincident { i, j, at: None });
                }
                let g0 = kernel.value_at_origin();
                dq[i] += p[j] * g0;
                dq[j] += pi * g0;
                continue;
            }
            let (g, dg) = kernel.value_and_derivative(r);
            dq[i] += p[j] * g;
            dq[j] += pi * g;
            let f = d * (-pij * dg / r);
            dp[i] += f;
            dp[j] -= f;
        }
    }
    Ok(())
}

/// `H = ½ Σ_i Σ_j (p_i·p_j) G(|q_i − q_j|)`.
///
/// This is the exact-system Hamiltonian for every `σ²`; the inexact penalty
/// is reported separately by [`inexact_penalty`].
pub fn hamiltonian(spec: &SystemSpec, state: &ParticleState) -> f64 {
    hamiltonian_of(&spec.kernel, &state.q, &state.p)
}

pub(crate) fn hamiltonian_of(kernel: &KernelSpec, q: &[Vec2], p: &[Vec2]) -> f64 {
    let n = q.len();
    let diag: f64 = p.iter().map(|v| v.norm_sq()).sum::<f64>() * kernel.value_at_origin();
    let mut off = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            off += p[i].dot(p[j]) * kernel.value(q[i].distance(q[j]));
        }
    }
    0.5 * diag + off
}

/// Kinetic energy `E = pᵀ(K ⊗ I₂)p = 2H`, the squared length of the geodesic.
pub fn energy(spec: &SystemSpec, state: &ParticleState) -> f64 {
    2.0 * hamiltonian(spec, state)
}

/// `½ σ² Σ |p_i|²`, the extra term an inexact system would add.
pub fn inexact_penalty(spec: &SystemSpec, state: &ParticleState) -> f64 {
    0.5 * spec.sigma2 * state.p.iter().map(|v| v.norm_sq()).sum::<f64>()
}

/// `u(x) = Σ_j G(|x − q_j|) p_j`.
pub fn velocity_field(spec: &SystemSpec, state: &ParticleState, x: Vec2) -> Vec2 {
    let kernel = &spec.kernel;
    state.q.iter().zip(&state.p).fold(Vec2::ZERO, |acc, (&qj, &pj)| acc + pj * kernel.value(x.distance(qj)))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Conserved {
    pub hamiltonian: f64,
    /// `Σ p_i`.
    pub linear_momentum: Vec2,
    /// `Σ q_i × p_i`.
    pub angular_momentum: f64,
}

pub fn conserved_quantities(spec: &SystemSpec, state: &ParticleState) -> Conserved {
    let linear_momentum = state.p.iter().fold(Vec2::ZERO, |a, &v| a + v);
    let angular_momentum = state.q.iter().zip(&state.p).map(|(q, p)| q.cross(*p)).sum();
    Conserved { hamiltonian: hamiltonian(spec, state), linear_momentum, angular_momentum }
}
