use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use fluidbound_core::euler::*;
use fluidbound_core::fields::{inner_product, Grid2D, SpectralField2D};
use fluidbound_core::stability::*;

fn random_vorticity(rng: &mut ChaCha8Rng, g: Grid2D, band: i64, amp: f64) -> SpectralField2D {
    let mut w = SpectralField2D::zeros(g);
    for jx in 0..=band {
        for jy in -band..=band {
            if (jx == 0 && jy <= 0) || jx * jx + jy * jy > band * band {
                continue;
            }
            let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            w.set_mode(jx, jy, c * amp / (1.0 + (jx * jx + jy * jy) as f64));
        }
    }
    w
}

fn random_state(rng: &mut ChaCha8Rng, g: Grid2D) -> EulerState {
    let band = rng.random_range(1..=8);
    let amp = 10f64.powf(rng.random_range(-2.0..1.0));
    let mean = [rng.random_range(-0.5..0.5), rng.random_range(-0.5..0.5)];
    EulerState::new(random_vorticity(rng, g, band, amp), mean, 0.0)
}

#[test]
fn invariants_over_a_thousand_steps() {
    let g = Grid2D::square(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let start = EulerState::new(random_vorticity(&mut rng, g, 3, 0.3), [0.1, 0.0], 0.0);
    let mut solver = EulerSolver::new(g);
    let mut s = start.clone();
    for _ in 0..1000 {
        s = solver.step(&s, 2e-3).unwrap();
    }
    let de = (s.energy() / start.energy() - 1.0).abs();
    let dw = (s.enstrophy_l4() / start.enstrophy_l4() - 1.0).abs();
    assert!(de <= 1e-8, "energy drift {de:e}");
    assert!(dw <= 1e-5, "L4 drift {dw:e}");
    assert!(s.velocity().divergence_defect() < 1e-12);
}

#[test]
fn pressure_obeys_its_bounds() {
    let g = Grid2D::square(64).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..100 {
        let s = random_state(&mut rng, g);
        let gauge = rng.random_range(0.0..2.0);
        let p = recover_pressure(&s, gauge).unwrap();
        assert!((p.mean() - gauge).abs() < 1e-13);
        let (lo, hi) = pressure_bound_interval(gauge, s.enstrophy_l4());
        let norm = p.l2_norm();
        assert!(norm >= lo * (1.0 - 1e-14) && norm <= hi, "{lo} <= {norm} <= {hi}");
    }
}

#[test]
fn stacked_overlap() {
    let g = Grid2D::square(32).unwrap();
    let e = EquilibriumParams::normalized(2).unwrap();
    let eq = EulerState::equilibrium(&e, g);
    assert!((direct_sum_overlap(&eq, &e, 0.7).unwrap() - 1.0).abs() < 1e-14);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let s = random_state(&mut rng, g);
        let gauge = 0.3;
        let o = direct_sum_overlap(&s, &e, gauge).unwrap();
        let u = s.velocity();
        let u0 = e.velocity(g);
        let p = recover_pressure(&s, gauge).unwrap();
        let area = 4.0 * PI * PI;
        let num = inner_product(&u0, &u).unwrap() + area * gauge * gauge;
        let den = (u.l2_norm().powi(2) + p.l2_norm().powi(2)).sqrt() * (u0.l2_norm().powi(2) + area * gauge * gauge).sqrt();
        assert!((o - num / den).abs() < 1e-13);
        assert!((-1.0..=1.0).contains(&o));
    }
}

fn small_run(eps: f64, t_max: f64) -> Vec<DiagnosticsRecord> {
    let e = EquilibriumParams::normalized(2).unwrap();
    let mode = build_eigenmode(&e, 1, 64, e.l2_norm()).unwrap();
    let config = SeparationConfig {
        grid: Grid2D::new(16, 256).unwrap(),
        eps,
        t_max,
        dt: 0.01,
        sample_every: 10,
        gauge: 1.0,
    };
    run_separation_experiment(&e, &mode, &config).unwrap()
}

#[test]
fn unperturbed_run_stays_at_equilibrium() {
    for r in small_run(0.0, 0.5) {
        assert!((r.overlap_nonlinear - 1.0).abs() < 1e-14);
        assert!(r.eta_l2 < 1e-14);
    }
}

#[test]
fn perturbed_run_starts_at_the_expected_overlap() {
    let eps = 1e-3;
    let recs = small_run(eps, 0.25);
    assert!((recs[0].overlap_nonlinear - (1.0 - eps * eps).sqrt()).abs() < 1e-10);
    assert!((recs.last().unwrap().t - 0.25).abs() < 1e-15);
    assert_eq!(recs.len(), 4);
}

#[test]
fn amplitude_and_normalization_are_checked() {
    let e = EquilibriumParams::normalized(2).unwrap();
    let mode = build_eigenmode(&e, 1, 64, 2.0).unwrap();
    let config = SeparationConfig {
        grid: Grid2D::new(16, 256).unwrap(),
        eps: 1e-3,
        t_max: 0.1,
        dt: 0.01,
        sample_every: 1,
        gauge: 0.0,
    };
    assert!(matches!(
        run_separation_experiment(&e, &mode, &config),
        Err(EulerError::NormalizationMismatch { .. })
    ));
    let mode = build_eigenmode(&e, 1, 64, e.l2_norm()).unwrap();
    let big = SeparationConfig { eps: 1.5, ..config };
    assert!(matches!(run_separation_experiment(&e, &mode, &big), Err(EulerError::InvalidAmplitude { .. })));
}
