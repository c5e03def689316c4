use epshoot_core::integrator::{evolve, EvolveConfig};
use epshoot_core::kernels::KernelSpec;
use epshoot_core::particles::conserved_quantities;
use epshoot_core::shapes::circle;
use epshoot_core::{ParticleState, SystemSpec, Vec2};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

fn random_momenta(n: usize, max: f64, seed: u64) -> Vec<Vec2> {
    let mut rng = StdRng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let r = max * rng.gen::<f64>().sqrt();
            let a = rng.gen_range(0.0..std::f64::consts::TAU);
            Vec2::new(r * a.cos(), r * a.sin())
        })
        .collect()
}

fn circle_state(n: usize, seed: u64) -> ParticleState {
    let q = circle(2.0, Vec2::ZERO, n).unwrap().into_points();
    ParticleState::new(q, random_momenta(n, 1.0, seed)).unwrap()
}

fn final_state(spec: &SystemSpec, s: &ParticleState, steps: usize) -> ParticleState {
    evolve(spec, s, &EvolveConfig::new(1.0, steps).unwrap()).unwrap().into_final()
}

fn max_dev(a: &ParticleState, b: &ParticleState) -> f64 {
    a.q.iter().zip(&b.q).chain(a.p.iter().zip(&b.p)).map(|(x, y)| (*x - *y).max_abs()).fold(0.0, f64::max)
}

#[test]
fn conservation_along_trajectories() {
    let kernels =
        [KernelSpec::conical(1.0).unwrap(), KernelSpec::gaussian(1.0).unwrap(), KernelSpec::bessel(2.5, 1.0).unwrap()];
    for (seed, k) in kernels.iter().enumerate() {
        for n in [8, 32, 64] {
            let spec = SystemSpec::exact(*k);
            let s0 = circle_state(n, seed as u64 * 100 + n as u64);
            let tr = evolve(&spec, &s0, &EvolveConfig::new(1.0, 200).unwrap().capturing(1)).unwrap();
            let c0 = conserved_quantities(&spec, &s0);
            for f in &tr.frames {
                let c = conserved_quantities(&spec, &f.state);
                let dh = ((c.hamiltonian - c0.hamiltonian) / c0.hamiltonian).abs();
                let dp = (c.linear_momentum - c0.linear_momentum).norm();
                let dl = (c.angular_momentum - c0.angular_momentum).abs();
                assert!(dh <= 1e-7, "{:?} n={n} t={}: dH={dh:e}", k.family(), f.t);
                assert!(dp <= 1e-10, "{:?} n={n}: dP={dp:e}", k.family());
                assert!(dl <= 1e-8, "{:?} n={n}: dL={dl:e}", k.family());
            }
        }
    }
}

/// Smooth (Gaussian) 8-particle trajectory with enough momentum to bend.
fn smooth_problem() -> (SystemSpec, ParticleState) {
    let spec = SystemSpec::exact(KernelSpec::gaussian(1.0).unwrap());
    let q = circle(1.0, Vec2::ZERO, 8).unwrap().into_points();
    (spec, ParticleState::new(q, random_momenta(8, 2.0, 7)).unwrap())
}

#[test]
fn richardson_ratio_is_sixteen() {
    let (spec, s0) = smooth_problem();
    let a = final_state(&spec, &s0, 25);
    let b = final_state(&spec, &s0, 50);
    let c = final_state(&spec, &s0, 100);
    let ratio = max_dev(&a, &b) / max_dev(&b, &c);
    assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn error_decays_at_fourth_order() {
    let (spec, s0) = smooth_problem();
    let reference = final_state(&spec, &s0, 4096);
    let errors: Vec<f64> =
        [16, 32, 64, 128].iter().map(|&n| max_dev(&final_state(&spec, &s0, n), &reference)).collect();
    for w in errors.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!((3.5..=4.5).contains(&order), "{errors:?}");
    }
}

#[test]
fn hamiltonian_drift_shrinks_with_refinement() {
    let spec = SystemSpec::exact(KernelSpec::conical(1.0).unwrap());
    let s0 = circle_state(64, 3);
    let h0 = conserved_quantities(&spec, &s0).hamiltonian;
    let drift = |steps| {
        let f = final_state(&spec, &s0, steps);
        ((conserved_quantities(&spec, &f).hamiltonian - h0) / h0).abs()
    };
    let (coarse, fine) = (drift(100), drift(200));
    assert!(fine <= 1e-7, "{fine:e}");
    assert!(fine < coarse, "{coarse:e} -> {fine:e}");
}

#[test]
fn evolution_is_deterministic() {
    let spec = SystemSpec::exact(KernelSpec::conical(1.0).unwrap());
    let s0 = circle_state(32, 11);
    let a = final_state(&spec, &s0, 100);
    let b = final_state(&spec, &s0, 100);
    assert_eq!(a, b);
}
