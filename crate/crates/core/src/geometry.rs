//! Planar vectors and isometries.

use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Vec2 = Vec2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Vec2 { x, y }
    }

    #[inline]
    pub fn dot(self, other: Vec2) -> f64 {
        self.x * other.x + self.y * other.y
    }

    /// z-component of the 3-D cross product.
    #[inline]
    pub fn cross(self, other: Vec2) -> f64 {
        self.x * other.y - self.y * other.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        libm::sqrt(self.norm_sq())
    }

    #[inline]
    pub fn distance(self, other: Vec2) -> f64 {
        (self - other).norm()
    }

    #[inline]
    pub fn max_abs(self) -> f64 {
        libm::fmax(libm::fabs(self.x), libm::fabs(self.y))
    }

    #[inline]
    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Vec2;
    #[inline]
    fn add(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Vec2 {
    type Output = Vec2;
    #[inline]
    fn sub(self, rhs: Vec2) -> Vec2 {
        Vec2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Neg for Vec2 {
    type Output = Vec2;
    #[inline]
    fn neg(self) -> Vec2 {
        Vec2::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn mul(self, s: f64) -> Vec2 {
        Vec2::new(self.x * s, self.y * s)
    }
}

impl Mul<Vec2> for f64 {
    type Output = Vec2;
    #[inline]
    fn mul(self, v: Vec2) -> Vec2 {
        v * self
    }
}

impl Div<f64> for Vec2 {
    type Output = Vec2;
    #[inline]
    fn div(self, s: f64) -> Vec2 {
        Vec2::new(self.x / s, self.y / s)
    }
}

impl AddAssign for Vec2 {
    #[inline]
    fn add_assign(&mut self, rhs: Vec2) {
        self.x += rhs.x;
        self.y += rhs.y;
    }
}

impl SubAssign for Vec2 {
    #[inline]
    fn sub_assign(&mut self, rhs: Vec2) {
        self.x -= rhs.x;
        self.y -= rhs.y;
    }
}

impl MulAssign<f64> for Vec2 {
    #[inline]
    fn mul_assign(&mut self, s: f64) {
        self.x *= s;
        self.y *= s;
    }
}

impl From<[f64; 2]> for Vec2 {
    fn from([x, y]: [f64; 2]) -> Self {
        Vec2::new(x, y)
    }
}

impl From<(f64, f64)> for Vec2 {
    fn from((x, y): (f64, f64)) -> Self {
        Vec2::new(x, y)
    }
}

impl From<Vec2> for [f64; 2] {
    fn from(v: Vec2) -> Self {
        [v.x, v.y]
    }
}

/// Max-norm over a stacked list of vectors.
pub fn max_abs(vs: &[Vec2]) -> f64 {
    vs.iter().fold(0.0, |m, v| libm::fmax(m, v.max_abs()))
}

/// Euclidean norm of the stacked `2N` vector `(x₁, y₁, x₂, y₂, …)`.
pub fn l2_norm(vs: &[Vec2]) -> f64 {
    libm::sqrt(vs.iter().map(|v| v.norm_sq()).sum::<f64>())
}

/// A rigid motion of the plane, `x ↦ A x + b` with `A` orthogonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Isometry {
    /// Row-major 2×2 orthogonal matrix.
    pub linear: [[f64; 2]; 2],
    pub offset: Vec2,
}

impl Isometry {
    pub const IDENTITY: Isometry = Isometry { linear: [[1.0, 0.0], [0.0, 1.0]], offset: Vec2::ZERO };

    /// Counterclockwise rotation about the origin.
    pub fn rotation(angle: f64) -> Self {
        let (s, c) = libm::sincos(angle);
        Isometry { linear: [[c, -s], [s, c]], offset: Vec2::ZERO }
    }

    pub fn translation(offset: Vec2) -> Self {
        Isometry { offset, ..Isometry::IDENTITY }
    }

    /// Reflection `(x, y) ↦ (x, −y)`.
    pub fn reflection_x() -> Self {
        Isometry { linear: [[1.0, 0.0], [0.0, -1.0]], offset: Vec2::ZERO }
    }

    /// Reflection across the line through the origin at `angle` from the x-axis.
    pub fn reflection(angle: f64) -> Self {
        let (s, c) = libm::sincos(2.0 * angle);
        Isometry { linear: [[c, s], [s, -c]], offset: Vec2::ZERO }
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Isometry) -> Isometry {
        let a = &self.linear;
        let b = &other.linear;
        let linear = [
            [a[0][0] * b[0][0] + a[0][1] * b[1][0], a[0][0] * b[0][1] + a[0][1] * b[1][1]],
            [a[1][0] * b[0][0] + a[1][1] * b[1][0], a[1][0] * b[0][1] + a[1][1] * b[1][1]],
        ];
        Isometry { linear, offset: self.apply_point(other.offset) }
    }

    #[inline]
    pub fn apply_vector(&self, v: Vec2) -> Vec2 {
        let a = &self.linear;
        Vec2::new(a[0][0] * v.x + a[0][1] * v.y, a[1][0] * v.x + a[1][1] * v.y)
    }

    #[inline]
    pub fn apply_point(&self, p: Vec2) -> Vec2 {
        self.apply_vector(p) + self.offset
    }

    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let a = &self.linear;
        let c0 = Vec2::new(a[0][0], a[1][0]);
        let c1 = Vec2::new(a[0][1], a[1][1]);
        libm::fabs(c0.norm_sq() - 1.0) <= tol && libm::fabs(c1.norm_sq() - 1.0) <= tol && libm::fabs(c0.dot(c1)) <= tol
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use core::f64::consts::FRAC_PI_2;

    #[test]
    fn rotation_quarter_turn() {
        let g = Isometry::rotation(FRAC_PI_2);
        let v = g.apply_vector(Vec2::new(1.0, 0.0));
        assert!((v - Vec2::new(0.0, 1.0)).norm() < 1e-15);
    }

    #[test]
    fn reflection_at_zero_is_reflection_x() {
        assert_eq!(Isometry::reflection(0.0), Isometry::reflection_x());
    }

    #[test]
    fn compose_applies_right_first() {
        let t = Isometry::translation(Vec2::new(1.0, 0.0));
        let r = Isometry::rotation(FRAC_PI_2);
        let p = r.compose(&t).apply_point(Vec2::ZERO);
        assert!((p - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        assert!(r.compose(&t).is_orthogonal(1e-15));
    }

    #[test]
    fn stacked_norms() {
        let v = [Vec2::new(3.0, -4.0), Vec2::new(0.0, 1.0)];
        assert_eq!(max_abs(&v), 4.0);
        assert!((l2_norm(&v) - 26f64.sqrt()).abs() < 1e-15);
    }
}
