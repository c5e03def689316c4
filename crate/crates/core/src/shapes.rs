//! Parametric landmark templates.
//!
//! Unless stated otherwise, landmarks sit at uniform parameter angles
//! `θ_k = 2πk/n`, counterclockwise from `θ = 0`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::f64::consts::{PI, TAU};

use crate::error::{config, Error, Result};
use crate::geometry::{Isometry, Vec2};

/// An ordered, labeled set of distinct planar landmarks.
///
/// Index `k` of one template corresponds to index `k` of any other template
/// it is matched against.
#[derive(Clone, Debug, PartialEq)]
pub struct LandmarkTemplate {
    label: String,
    points: Vec<Vec2>,
}

impl LandmarkTemplate {
    pub fn new(label: impl Into<String>, points: Vec<Vec2>) -> Result<Self> {
        if points.is_empty() {
            return Err(config("a template needs at least one landmark"));
        }
        if let Some(k) = points.iter().position(|v| !v.is_finite()) {
            return Err(config(format!("landmark {k} is not finite")));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                if points[i] == points[j] {
                    return Err(Error::Degenerate(format!(
                        "landmarks {i} and {j} coincide at ({}, {})",
                        points[i].x, points[i].y
                    )));
                }
            }
        }
        Ok(LandmarkTemplate { label: label.into(), points })
    }

    /// Skips validation; used for evolved templates, which may be degenerate
    /// when a run diverges.
    pub(crate) fn from_raw(label: String, points: Vec<Vec2>) -> Self {
        LandmarkTemplate { label, points }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Vec2> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn relabeled(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Applies `g` to every landmark. Isometries keep points distinct.
    pub fn transformed(&self, g: &Isometry) -> LandmarkTemplate {
        LandmarkTemplate { label: self.label.clone(), points: self.points.iter().map(|&x| g.apply_point(x)).collect() }
    }

    pub fn centroid(&self) -> Vec2 {
        let sum = self.points.iter().fold(Vec2::ZERO, |a, &v| a + v);
        sum / self.points.len() as f64
    }

    /// Translated so the centroid is at the origin.
    pub fn centered(&self) -> LandmarkTemplate {
        self.transformed(&Isometry::translation(-self.centroid()))
    }

    /// Largest Euclidean distance between corresponding landmarks.
    pub fn max_distance(&self, other: &LandmarkTemplate) -> f64 {
        self.points.iter().zip(&other.points).fold(0.0, |m, (a, b)| libm::fmax(m, a.distance(*b)))
    }
}

fn check_n(n: usize, min: usize, what: &str) -> Result<()> {
    if n < min {
        return Err(config(format!("{what} needs at least {min} landmarks, got {n}")));
    }
    Ok(())
}

fn check_positive(v: f64, name: &str) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(config(format!("{name} must be positive, got {v}")));
    }
    Ok(())
}

fn theta(k: usize, n: usize) -> f64 {
    TAU * k as f64 / n as f64
}

fn sample(label: String, n: usize, f: impl Fn(f64) -> Vec2) -> Result<LandmarkTemplate> {
    LandmarkTemplate::new(label, (0..n).map(|k| f(theta(k, n))).collect())
}

pub fn circle(radius: f64, center: Vec2, n: usize) -> Result<LandmarkTemplate> {
    check_n(n, 3, "circle")?;
    check_positive(radius, "radius")?;
    sample(format!("circle(r={radius})"), n, |t| {
        let (s, c) = libm::sincos(t);
        Vec2::new(radius * c + center.x, radius * s + center.y)
    })
}

/// Axis-aligned ellipse with semi-axes `a` (x) and `b` (y).
pub fn ellipse(a: f64, b: f64, center: Vec2, n: usize) -> Result<LandmarkTemplate> {
    check_n(n, 3, "ellipse")?;
    check_positive(a, "a")?;
    check_positive(b, "b")?;
    sample(format!("ellipse(a={a},b={b})"), n, |t| {
        let (s, c) = libm::sincos(t);
        Vec2::new(a * c + center.x, b * s + center.y)
    })
}

/// The tilted ellipse written as
///
/// ```text
/// x = a cos φ cos θ + b sin φ sin θ + s_x
/// y = b cos φ sin θ − a sin φ       + s_y
/// ```
///
/// This is not a rigid rotation of an ellipse: the `y` offset `−a sin φ` does
/// not vary with `θ`, so the curve is a sheared ellipse. With `φ = 0` and
/// `a = b` it reduces to a circle. See [`standard_rotated_ellipse`].
pub fn ellipse_rot_shift(a: f64, b: f64, angle: f64, shift: Vec2, n: usize) -> Result<LandmarkTemplate> {
    check_n(n, 3, "ellipse")?;
    check_positive(a, "a")?;
    check_positive(b, "b")?;
    let (sp, cp) = libm::sincos(angle);
    sample(format!("ellipse_rot_shift(a={a},b={b},angle={angle})"), n, |t| {
        let (s, c) = libm::sincos(t);
        Vec2::new(a * cp * c + b * sp * s + shift.x, b * cp * s - a * sp + shift.y)
    })
}

/// `(a cos θ, b sin θ)` rotated counterclockwise by `angle`, then shifted.
pub fn standard_rotated_ellipse(a: f64, b: f64, angle: f64, shift: Vec2, n: usize) -> Result<LandmarkTemplate> {
    check_n(n, 3, "ellipse")?;
    check_positive(a, "a")?;
    check_positive(b, "b")?;
    let g = Isometry::translation(shift).compose(&Isometry::rotation(angle));
    sample(format!("rotated_ellipse(a={a},b={b},angle={angle})"), n, |t| {
        let (s, c) = libm::sincos(t);
        g.apply_point(Vec2::new(a * c, b * s))
    })
}

/// Fourth-order heart curve
/// `x = (13 cos θ − 5 cos 2θ − 2 cos 3θ − cos 4θ)/5`, `y = 16 sin³θ / 5`.
pub fn heart4(n: usize) -> Result<LandmarkTemplate> {
    check_n(n, 3, "heart4")?;
    sample("heart4".to_string(), n, heart4_point)
}

pub fn heart4_point(t: f64) -> Vec2 {
    let c = |k: f64| libm::cos(k * t);
    let s = libm::sin(t);
    Vec2::new((13.0 * c(1.0) - 5.0 * c(2.0) - 2.0 * c(3.0) - c(4.0)) / 5.0, 16.0 * s * s * s / 5.0)
}

/// Square of the given side centered at the origin, landmarks equally spaced
/// along the perimeter counterclockwise from the right edge midpoint
/// `(side/2, 0)`.
///
/// With `n` a multiple of 8 the four corners are landmarks; `n = 4` gives the
/// four edge midpoints.
pub fn square(side: f64, n: usize) -> Result<LandmarkTemplate> {
    check_positive(side, "side")?;
    if n == 0 || !n.is_multiple_of(4) {
        return Err(config(format!("square needs a positive multiple of 4 landmarks, got {n}")));
    }
    let h = side / 2.0;
    let perimeter = 4.0 * side;
    let points = (0..n)
        .map(|k| {
            let d = perimeter * k as f64 / n as f64;
            if d < h {
                Vec2::new(h, d)
            } else if d < h + side {
                Vec2::new(h - (d - h), h)
            } else if d < h + 2.0 * side {
                Vec2::new(-h, h - (d - h - side))
            } else if d < h + 3.0 * side {
                Vec2::new(-h + (d - h - 2.0 * side), -h)
            } else {
                Vec2::new(h, -h + (d - h - 3.0 * side))
            }
        })
        .collect();
    LandmarkTemplate::new(format!("square(side={side})"), points)
}

/// How landmarks are spread over each half of [`circle_ellipse_hybrid`].
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum HalfSampling {
    /// Uniform parameter angle over the whole curve.
    #[default]
    Parameter,
    /// `n/2` landmarks per half, uniform in arc length within each half.
    ArcLength,
}

/// Closed curve whose upper half (`y ≥ 0`) is the circle of radius `r` and
/// whose lower half is the ellipse with semi-axes `a`, `b`.
///
/// The halves join continuously when `a = r`.
pub fn circle_ellipse_hybrid(r: f64, a: f64, b: f64, n: usize, sampling: HalfSampling) -> Result<LandmarkTemplate> {
    check_positive(r, "r")?;
    check_positive(a, "a")?;
    check_positive(b, "b")?;
    if n < 4 || !n.is_multiple_of(2) {
        return Err(config(format!("hybrid curve needs an even number >= 4 of landmarks, got {n}")));
    }
    let point = |t: f64| {
        let (s, c) = libm::sincos(t);
        if t <= PI {
            Vec2::new(r * c, r * s)
        } else {
            Vec2::new(a * c, b * s)
        }
    };
    let label = format!("hybrid(r={r},a={a},b={b})");
    match sampling {
        HalfSampling::Parameter => sample(label, n, point),
        HalfSampling::ArcLength => {
            let m = n / 2;
            let upper = (0..m).map(|k| PI * k as f64 / m as f64);
            let lower = ArcTable::new(a, b, PI, TAU);
            let lower = (0..m).map(move |k| lower.angle_at(k as f64 / m as f64));
            LandmarkTemplate::new(label, upper.chain(lower).map(point).collect())
        }
    }
}

/// Inverse arc-length lookup for `(a cos θ, b sin θ)` on `[t0, t1]`.
struct ArcTable {
    t0: f64,
    dt: f64,
    cumulative: Vec<f64>,
}

impl ArcTable {
    const SEGMENTS: usize = 8192;

    fn new(a: f64, b: f64, t0: f64, t1: f64) -> Self {
        let dt = (t1 - t0) / Self::SEGMENTS as f64;
        let speed = |t: f64| {
            let (s, c) = libm::sincos(t);
            libm::hypot(a * s, b * c)
        };
        let mut cumulative = Vec::with_capacity(Self::SEGMENTS + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for i in 0..Self::SEGMENTS {
            let lo = t0 + i as f64 * dt;
            // Simpson on each segment
            acc += dt / 6.0 * (speed(lo) + 4.0 * speed(lo + 0.5 * dt) + speed(lo + dt));
            cumulative.push(acc);
        }
        ArcTable { t0, dt, cumulative }
    }

    /// Parameter at which the fraction `f ∈ [0, 1)` of the arc is covered.
    fn angle_at(&self, f: f64) -> f64 {
        let target = f * self.cumulative[Self::SEGMENTS];
        let i = self.cumulative.partition_point(|&c| c <= target).clamp(1, Self::SEGMENTS) - 1;
        let (c0, c1) = (self.cumulative[i], self.cumulative[i + 1]);
        let frac = if c1 > c0 { (target - c0) / (c1 - c0) } else { 0.0 };
        self.t0 + (i as f64 + frac) * self.dt
    }
}
