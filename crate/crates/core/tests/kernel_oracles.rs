use epshoot_core::kernels::{gram_matrix, kernel_derivative, kernel_value, KernelSpec};
use epshoot_core::shapes::{
    circle, circle_ellipse_hybrid, ellipse, ellipse_rot_shift, heart4, square, standard_rotated_ellipse, HalfSampling,
};
use epshoot_core::{LandmarkTemplate, Vec2};
use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_4;

fn families() -> Vec<(&'static str, KernelSpec)> {
    vec![
        ("conical", KernelSpec::conical(1.0).unwrap()),
        ("conical-unnormalized", KernelSpec::conical(0.7).unwrap().with_normalized(false)),
        ("gaussian", KernelSpec::gaussian(1.0).unwrap()),
        ("gaussian-unnormalized", KernelSpec::gaussian(1.3).unwrap().with_normalized(false)),
        ("bessel-1.25", KernelSpec::bessel(1.25, 1.0).unwrap()),
        ("bessel-2", KernelSpec::bessel(2.0, 1.0).unwrap()),
        ("bessel-2.5", KernelSpec::bessel(2.5, 0.8).unwrap()),
        ("bessel-4.3", KernelSpec::bessel(4.3, 1.5).unwrap().with_normalized(false)),
    ]
}

/// Geometric grid over `[0.01, 20]`.
fn radii() -> Vec<f64> {
    let m = 400;
    (0..=m).map(|i| 0.01 * (2000f64).powf(i as f64 / m as f64)).collect()
}

#[test]
fn derivative_matches_central_differences() {
    let h = 1e-6;
    for (name, k) in families() {
        for r in radii() {
            let fd = (kernel_value(&k, r + h) - kernel_value(&k, r - h)) / (2.0 * h);
            let d = kernel_derivative(&k, r);
            // Far out the Gaussian underflows and both sides are zero.
            if d == 0.0 {
                assert!(fd.abs() < 1e-300, "{name} r={r}");
                continue;
            }
            let rel = (d - fd).abs() / d.abs();
            // Rounding of the two kernel values (a few ulps each) alone limits
            // the quotient to about ε·G/(h·|G'|), which exceeds 1e-8 wherever
            // G is flat: the Gaussian and high-order Bessel kernels near 0.
            let floor = 8.0 * f64::EPSILON * kernel_value(&k, r) / (2.0 * h * d.abs());
            assert!(rel <= 1e-8 + floor, "{name}: r={r} derivative={d:e} fd={fd:e} rel={rel:e}");
        }
    }
}

#[test]
fn values_are_monotone_and_decay() {
    for (name, k) in families() {
        let mut prev = kernel_value(&k, 0.0);
        for r in radii() {
            let v = kernel_value(&k, r);
            assert!(v <= prev, "{name} increases at r={r}");
            prev = v;
        }
        assert!(kernel_value(&k, 200.0) < 1e-40 * kernel_value(&k, 0.0), "{name}");
    }
}

#[test]
fn normalization_is_a_constant_factor() {
    for (name, k) in families() {
        let n = k.with_normalized(true);
        let u = k.with_normalized(false);
        let c = u.value_at_origin();
        for r in [0.0, 0.05, 0.7, 3.0, 9.0] {
            let a = kernel_value(&n, r);
            let b = kernel_value(&u, r) / c;
            assert!((a - b).abs() <= 1e-14 * a.max(1e-300), "{name} r={r}");
        }
    }
}

#[test]
fn bessel_three_halves_is_conical() {
    let b = KernelSpec::bessel(1.5, 0.9).unwrap();
    let c = KernelSpec::conical(0.9).unwrap();
    for r in radii() {
        let (vb, vc) = (kernel_value(&b, r), kernel_value(&c, r));
        assert!((vb - vc).abs() <= 1e-13 * vc, "r={r}");
        let (db, dc) = (kernel_derivative(&b, r), kernel_derivative(&c, r));
        assert!((db - dc).abs() <= 1e-12 * dc.abs(), "r={r}");
    }
}

fn min_eigenvalue(k: &KernelSpec, points: &[Vec2]) -> (f64, bool) {
    let g = gram_matrix(k, points).unwrap();
    let n = g.dim();
    let m = DMatrix::from_row_slice(n, n, g.as_slice());
    let symmetric = (&m - m.transpose()).abs().max() == 0.0;
    let eig = SymmetricEigen::new(m).eigenvalues;
    (eig.min(), symmetric)
}

#[test]
fn unit_circle_gram_is_positive_definite() {
    let pts = circle(1.0, Vec2::ZERO, 8).unwrap();
    let (lo, sym) = min_eigenvalue(&KernelSpec::conical(1.0).unwrap(), pts.points());
    assert!(sym);
    assert!(lo > 0.0, "{lo}");
}

fn matched_shapes() -> Vec<LandmarkTemplate> {
    let n = 64;
    vec![
        circle(2.0, Vec2::ZERO, n).unwrap(),
        circle(1.0, Vec2::ZERO, n).unwrap(),
        circle(3.0, Vec2::ZERO, n).unwrap(),
        ellipse(1.0, 4.0, Vec2::ZERO, n).unwrap(),
        ellipse(4.0, 1.0, Vec2::ZERO, n).unwrap(),
        ellipse(4.0, 1.05, Vec2::ZERO, n).unwrap(),
        circle_ellipse_hybrid(3.0, 3.0, 1.0, n, HalfSampling::Parameter).unwrap(),
        square(4.0, n).unwrap(),
        heart4(n).unwrap(),
        ellipse_rot_shift(4.0, 1.0, FRAC_PI_4, Vec2::new(1.0, 0.0), n).unwrap(),
        standard_rotated_ellipse(4.0, 1.0, FRAC_PI_4, Vec2::new(1.0, 0.0), n).unwrap(),
        circle(2.0, Vec2::ZERO, 16).unwrap(),
        heart4(16).unwrap(),
    ]
}

#[test]
fn template_grams_are_positive_definite() {
    for alpha2 in [0.2, 1.0] {
        let k = KernelSpec::conical(f64::sqrt(alpha2)).unwrap();
        for t in matched_shapes() {
            let (lo, sym) = min_eigenvalue(&k, t.points());
            assert!(sym, "{}", t.label());
            assert!(lo > 0.0, "{} alpha2={alpha2}: {lo}", t.label());
        }
    }
}

/// The Gaussian Gram over 64 landmarks on the radius-2 circle has a smallest
/// eigenvalue below double-precision resolution, so only the 16- and
/// 32-landmark sets of the convergence study are checked.
#[test]
fn gaussian_grams_of_sweep_sets_are_positive_definite() {
    for n in [16, 32] {
        for alpha2 in [0.2, 0.4, 0.6, 0.8, 1.0] {
            let k = KernelSpec::gaussian(f64::sqrt(alpha2)).unwrap();
            for t in [circle(2.0, Vec2::ZERO, n).unwrap(), heart4(n).unwrap()] {
                let (lo, _) = min_eigenvalue(&k, t.points());
                assert!(lo > 0.0, "{} alpha2={alpha2}: {lo}", t.label());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn conical_gram_is_positive_definite(
        pts in prop::collection::vec((-4.0f64..4.0, -4.0f64..4.0), 1..=64),
        alpha in 0.2f64..3.0,
    ) {
        let pts: Vec<Vec2> = pts.into_iter().map(Vec2::from).collect();
        let distinct = pts.iter().enumerate().all(|(i, a)| pts[..i].iter().all(|b| a.distance(*b) > 1e-2));
        prop_assume!(distinct);
        let (lo, sym) = min_eigenvalue(&KernelSpec::conical(alpha).unwrap(), &pts);
        prop_assert!(sym);
        prop_assert!(lo > 0.0, "{}", lo);
    }
}
