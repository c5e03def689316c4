//! Diffeomorphic landmark matching by geodesic shooting.
//!
//! Landmarks on a planar contour are treated as particles of the
//! Euler–Poincaré N-particle system
//!
//! ```text
//! dq_i/dt =  Σ_j G(|q_i − q_j|) p_j  (+ σ² p_i for inexact matching)
//! dp_i/dt = −Σ_{j≠i} (p_i·p_j) G'(|q_i − q_j|) (q_i − q_j)/|q_i − q_j|
//! ```
//!
//! where `G` is the Green's function of the Yukawa-type operator
//! `(1 − α²∇²)^ν`. Matching a reference template to a target is solved as an
//! initial value problem: the initial velocity field sampled at the reference
//! landmarks is corrected by the shooting error until the evolved reference
//! lands on the target ([`shooting::match_templates`]).
//!
//! The crate is `no_std` and only needs `alloc`. File formats, the command
//! line tool and parallel sweeps live in the `epshoot` crate.

#![no_std]
#![warn(missing_debug_implementations)]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod analysis;
pub mod bessel;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod kernels;
pub mod linalg;
pub mod particles;
pub mod shapes;
pub mod shooting;

pub use error::{Error, Result};
pub use geometry::{Isometry, Vec2};
pub use integrator::{evolve, EvolveConfig, Frame, Trajectory};
pub use kernels::{KernelFamily, KernelSpec};
pub use particles::{ParticleState, SystemSpec};
pub use shapes::LandmarkTemplate;
pub use shooting::{
    match_templates, newton_match, MatchResult, ResidualNorm, ShootingConfig, StopRule, Termination, UpdateSpace,
};
