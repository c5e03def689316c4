//! Fixed-step classical Runge–Kutta integration of the particle system.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{config, Error, Result};
use crate::geometry::Vec2;
use crate::particles::{rhs_into, ParticleState, SystemSpec};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveConfig {
    pub t_final: f64,
    pub steps: usize,
    /// Store a frame every `capture_every` steps; 0 keeps only the endpoints.
    pub capture_every: usize,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig { t_final: 1.0, steps: 100, capture_every: 0 }
    }
}

impl EvolveConfig {
    pub fn new(t_final: f64, steps: usize) -> Result<Self> {
        let cfg = EvolveConfig { t_final, steps, capture_every: 0 };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn capturing(self, every: usize) -> Self {
        EvolveConfig { capture_every: every, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(config("steps must be at least 1"));
        }
        if !(self.t_final > 0.0 && self.t_final.is_finite()) {
            return Err(config(format!("t_final must be positive, got {}", self.t_final)));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        self.t_final / self.steps as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Frame {
    pub t: f64,
    pub state: ParticleState,
}

/// Captured frames; the first is `t = 0`, the last is `t = T`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub frames: Vec<Frame>,
}

impl Trajectory {
    pub fn final_state(&self) -> &ParticleState {
        &self.frames.last().expect("a trajectory always has endpoints").state
    }

    pub fn into_final(mut self) -> ParticleState {
        self.frames.pop().expect("a trajectory always has endpoints").state
    }
}

/// Integrates from `initial` over `[0, cfg.t_final]`.
pub fn evolve(spec: &SystemSpec, initial: &ParticleState, cfg: &EvolveConfig) -> Result<Trajectory> {
    cfg.validate()?;
    spec.validate()?;
    let n = initial.len();
    if initial.p.len() != n {
        return Err(config("positions and momenta differ in length"));
    }
    let dt = cfg.dt();
    let mut rk = Rk4::new(n);
    let mut q = initial.q.clone();
    let mut p = initial.p.clone();
    let mut frames = vec![Frame { t: 0.0, state: initial.clone() }];
    for step in 0..cfg.steps {
        rk.step(spec, &mut q, &mut p, dt, step)?;
        let done = step + 1;
        let capture = done == cfg.steps || (cfg.capture_every > 0 && done % cfg.capture_every == 0);
        if capture {
            frames.push(Frame {
                t: if done == cfg.steps { cfg.t_final } else { done as f64 * dt },
                state: ParticleState { q: q.clone(), p: p.clone() },
            });
        }
    }
    Ok(Trajectory { frames })
}

/// Final positions only, reusing `rk` scratch space; the shooting loop calls
/// this hundreds of times.
pub(crate) fn shoot_into(
    spec: &SystemSpec,
    q0: &[Vec2],
    p0: &[Vec2],
    cfg: &EvolveConfig,
    rk: &mut Rk4,
    q: &mut Vec<Vec2>,
    p: &mut Vec<Vec2>,
) -> Result<()> {
    q.clear();
    q.extend_from_slice(q0);
    p.clear();
    p.extend_from_slice(p0);
    let dt = cfg.dt();
    for step in 0..cfg.steps {
        rk.step(spec, q, p, dt, step)?;
    }
    Ok(())
}

/// Stage buffers for one RK4 step.
#[derive(Debug, Default)]
pub(crate) struct Rk4 {
    kq: [Vec<Vec2>; 4],
    kp: [Vec<Vec2>; 4],
    tq: Vec<Vec2>,
    tp: Vec<Vec2>,
}

impl Rk4 {
    pub(crate) fn new(n: usize) -> Self {
        let z = || vec![Vec2::ZERO; n];
        Rk4 { kq: [z(), z(), z(), z()], kp: [z(), z(), z(), z()], tq: z(), tp: z() }
    }

    fn resize(&mut self, n: usize) {
        for v in self.kq.iter_mut().chain(self.kp.iter_mut()) {
            v.resize(n, Vec2::ZERO);
        }
        self.tq.resize(n, Vec2::ZERO);
        self.tp.resize(n, Vec2::ZERO);
    }

    pub(crate) fn step(
        &mut self,
        spec: &SystemSpec,
        q: &mut [Vec2],
        p: &mut [Vec2],
        dt: f64,
        step: usize,
    ) -> Result<()> {
        let n = q.len();
        if self.tq.len() != n {
            self.resize(n);
        }
        let t = step as f64 * dt;
        let tag = |e: Error| match e {
            Error::Coincident { i, j, .. } => Error::Coincident { i, j, at: Some((step, t)) },
            other => other,
        };
        let weights = [0.5 * dt, 0.5 * dt, dt];
        rhs_into(spec, q, p, &mut self.kq[0], &mut self.kp[0]).map_err(tag)?;
        for s in 0..3 {
            let w = weights[s];
            for i in 0..n {
                self.tq[i] = q[i] + self.kq[s][i] * w;
                self.tp[i] = p[i] + self.kp[s][i] * w;
            }
            let (_, rest_q) = self.kq.split_at_mut(s + 1);
            let (_, rest_p) = self.kp.split_at_mut(s + 1);
            rhs_into(spec, &self.tq, &self.tp, &mut rest_q[0], &mut rest_p[0]).map_err(tag)?;
        }
        let c = dt / 6.0;
        let [k1q, k2q, k3q, k4q] = &self.kq;
        let [k1p, k2p, k3p, k4p] = &self.kp;
        let mut finite = true;
        for i in 0..n {
            q[i] += (k1q[i] + (k2q[i] + k3q[i]) * 2.0 + k4q[i]) * c;
            p[i] += (k1p[i] + (k2p[i] + k3p[i]) * 2.0 + k4p[i]) * c;
            finite &= q[i].is_finite() && p[i].is_finite();
        }
        if !finite {
            return Err(Error::NonFinite { step, time: t + dt });
        }
        Ok(())
    }
}
