//! Green's functions of `L^ν = (1 − α²∇²)^ν` in the plane.
//!
//! In two dimensions the scalar Green's function is
//!
//! ```text
//! G(r) = 2^{1−ν} / (2π α^{1+ν} Γ(ν)) · r^{ν−1} K_{ν−1}(r/α)
//! ```
//!
//! which is bounded for `ν > 1` with `G(0) = 1 / (4π α² (ν − 1))`.
//! `ν = 3/2` is the conical kernel `e^{−r/α} / (2π α²)`. The Gaussian is the
//! smooth `ν → ∞` member, `e^{−r²/2α²}`. A normalized kernel is rescaled so
//! that `G(0) = 1`.

use alloc::format;
use core::f64::consts::PI;

use crate::bessel::{bessel_k_scaled, gamma};
use crate::error::{config, Error, Result};
use crate::geometry::Vec2;
use crate::linalg::SquareMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum KernelFamily {
    /// `ν = 3/2`.
    Conical,
    /// Smooth limit `ν → ∞`.
    Gaussian,
    /// Any `ν > 1` through the modified Bessel function `K_{ν−1}`.
    BesselGeneral,
}

/// A validated kernel. Construct with [`KernelSpec::new`] or the family
/// shorthands; evaluation never fails afterwards.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KernelSpec {
    family: KernelFamily,
    nu: f64,
    alpha: f64,
    normalized: bool,
    /// `G(0)` of the unnormalized kernel, or 1 when normalized.
    scale: f64,
    /// `1 / (2^{μ−1} Γ(μ))` with `μ = ν − 1`; Bessel family only.
    bessel_norm: f64,
}

impl KernelSpec {
    pub fn new(family: KernelFamily, nu: f64, alpha: f64, normalized: bool) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(config(format!("kernel length scale alpha must be positive, got {alpha}")));
        }
        let nu = match family {
            KernelFamily::Conical => 1.5,
            KernelFamily::Gaussian => f64::INFINITY,
            KernelFamily::BesselGeneral => {
                if !(nu > 1.0 && nu.is_finite()) {
                    return Err(config(format!("Bessel kernel needs a finite order nu > 1 to be bounded, got {nu}")));
                }
                nu
            }
        };
        let mut spec = KernelSpec { family, nu, alpha, normalized, scale: 1.0, bessel_norm: 0.0 };
        if family == KernelFamily::BesselGeneral {
            let mu = nu - 1.0;
            spec.bessel_norm = 1.0 / (libm::pow(2.0, mu - 1.0) * gamma(mu));
        }
        if !normalized {
            spec.scale = spec.unnormalized_origin_value();
        }
        Ok(spec)
    }

    /// Normalized conical kernel `e^{−r/α}`.
    pub fn conical(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::Conical, 1.5, alpha, true)
    }

    /// Normalized Gaussian `e^{−r²/2α²}`.
    pub fn gaussian(alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::Gaussian, f64::INFINITY, alpha, true)
    }

    /// Normalized general-order kernel.
    pub fn bessel(nu: f64, alpha: f64) -> Result<Self> {
        Self::new(KernelFamily::BesselGeneral, nu, alpha, true)
    }

    /// The same kernel with the other normalization convention.
    pub fn with_normalized(self, normalized: bool) -> Self {
        Self::new(self.family, self.nu, self.alpha, normalized).expect("re-normalizing a valid kernel cannot fail")
    }

    pub fn family(&self) -> KernelFamily {
        self.family
    }

    /// Sobolev order; 3/2 for the conical kernel and `+∞` for the Gaussian.
    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// True for orders in `(1, 3/2)`, where the kernel is bounded but its
    /// radial derivative is infinite at the origin. Such kernels are
    /// evaluated as-is; callers may want to warn.
    pub fn needs_mollification(&self) -> bool {
        self.family == KernelFamily::BesselGeneral && self.nu < 1.5
    }

    fn unnormalized_origin_value(&self) -> f64 {
        let a2 = self.alpha * self.alpha;
        match self.family {
            KernelFamily::Conical | KernelFamily::Gaussian => 1.0 / (2.0 * PI * a2),
            KernelFamily::BesselGeneral => 1.0 / (4.0 * PI * a2 * (self.nu - 1.0)),
        }
    }

    /// `G(0)`.
    pub fn value_at_origin(&self) -> f64 {
        self.scale
    }

    /// `G(r)` for `r ≥ 0`.
    pub fn value(&self, r: f64) -> f64 {
        debug_assert!(r >= 0.0, "kernel radius must be nonnegative");
        let a = self.alpha;
        let shape = match self.family {
            KernelFamily::Conical => libm::exp(-r / a),
            KernelFamily::Gaussian => libm::exp(-r * r / (2.0 * a * a)),
            KernelFamily::BesselGeneral => self.bessel_shape(r),
        };
        self.scale * shape
    }

    /// `dG/dr` for `r > 0`.
    ///
    /// The conical kernel has a derivative jump at the origin, so `r = 0` is
    /// outside the contract; pairwise sums must skip coincident particles.
    pub fn derivative(&self, r: f64) -> f64 {
        debug_assert!(r > 0.0, "kernel derivative is undefined at r = 0");
        self.value_and_derivative(r).1
    }

    /// `(G(r), G'(r))` sharing the exponential where possible. `r > 0`.
    #[inline]
    pub fn value_and_derivative(&self, r: f64) -> (f64, f64) {
        let a = self.alpha;
        match self.family {
            KernelFamily::Conical => {
                let e = self.scale * libm::exp(-r / a);
                (e, -e / a)
            }
            KernelFamily::Gaussian => {
                let e = self.scale * libm::exp(-r * r / (2.0 * a * a));
                (e, -e * r / (a * a))
            }
            KernelFamily::BesselGeneral => {
                let z = r / a;
                let mu = self.nu - 1.0;
                let zmu = libm::pow(z, mu) * libm::exp(-z);
                // d/dz [z^μ K_μ(z)] = −z^μ K_{μ−1}(z)
                let value = self.bessel_shape(r);
                let slope = -zmu * bessel_k_scaled(mu - 1.0, z) * self.bessel_norm / a;
                (self.scale * value, self.scale * slope)
            }
        }
    }

    /// `z^μ K_μ(z) / (2^{μ−1} Γ(μ))`, which is 1 at the origin.
    fn bessel_shape(&self, r: f64) -> f64 {
        let z = r / self.alpha;
        let mu = self.nu - 1.0;
        // Below this the product under/overflows for large μ while already
        // equal to its limit to double precision.
        if r == 0.0 || (mu > 1.0 && z < 1e-50) {
            return 1.0;
        }
        libm::pow(z, mu) * libm::exp(-z) * bessel_k_scaled(mu, z) * self.bessel_norm
    }
}

/// `G(r)`.
pub fn kernel_value(spec: &KernelSpec, r: f64) -> f64 {
    spec.value(r)
}

/// `G'(r)`, `r > 0`.
pub fn kernel_derivative(spec: &KernelSpec, r: f64) -> f64 {
    spec.derivative(r)
}

/// Gram matrix `K_ij = G(|x_i − x_j|)` over pairwise-distinct sites.
pub fn gram_matrix(spec: &KernelSpec, points: &[Vec2]) -> Result<SquareMatrix> {
    let n = points.len();
    let mut k = SquareMatrix::zeros(n);
    let g0 = spec.value_at_origin();
    for i in 0..n {
        k[(i, i)] = g0;
        for j in 0..i {
            let r = points[i].distance(points[j]);
            if r == 0.0 {
                return Err(Error::Degenerate(format!("landmarks {j} and {i} coincide; the Gram matrix is singular")));
            }
            let g = spec.value(r);
            k[(i, j)] = g;
            k[(j, i)] = g;
        }
    }
    Ok(k)
}
