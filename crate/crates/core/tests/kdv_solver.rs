use std::time::Instant;

use fluidbound_core::fields::Grid1D;
use fluidbound_core::kdv::*;

fn l2_error(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    l2_inner(&d, &d, dx).sqrt()
}

#[test]
fn single_soliton_translates() {
    let w = Grid1D::new(-50.0, 50.0, 1024).unwrap();
    let s = SolitonParams::new(1.0, 0.0).unwrap();
    let start = KdvState::soliton(w, s, -5.0);
    let mut solver = KdvSolver::new(w);
    let t0 = Instant::now();
    let end = solver.evolve(&start, 1e-3, 10_000).unwrap();
    eprintln!("10k steps in {:?}", t0.elapsed());
    let exact = KdvState::soliton(w, s, end.t);
    let err = l2_error(&end.phi, &exact.phi, w.dx());
    let drift = (end.l2_norm() / start.l2_norm() - 1.0).abs();
    eprintln!("err {err:e} drift {drift:e}");
    assert!(err <= 1e-6);
    assert!(drift <= 1e-8);
}

fn evolve_to(window: Grid1D, s: SolitonParams, t_final: f64) -> KdvState {
    let start = KdvState::soliton(window, s, 0.0);
    let mut solver = KdvSolver::new(window);
    let limit = solver.step_limit(&start.phi);
    let steps = (t_final / limit).ceil() as usize;
    solver.evolve(&start, t_final / steps as f64, steps).unwrap()
}

#[test]
fn pair_overlap_matches_travelling_waves() {
    let (delta, t_final) = (0.05, 40.0);
    let w = pair_window(delta, t_final, 0.1).unwrap();
    let a = evolve_to(w, SolitonParams::new(1.0, 0.0).unwrap(), t_final);
    let b = evolve_to(w, SolitonParams::new(1.0 + delta, 0.0).unwrap(), t_final);
    let numeric = normalized_overlap(&a.phi, &b.phi, w.dx());
    let analytic = soliton_pair_overlap(delta, t_final, &w).unwrap();
    assert!((numeric - analytic).abs() <= 1e-3, "{numeric} vs {analytic}");
    for (s, c) in [(&a, 1.0), (&b, 1.0 + delta)] {
        let drift = (s.l2_norm().powi(2) / SolitonParams::new(c, 0.0).unwrap().norm_squared() - 1.0).abs();
        assert!(drift <= 1e-7, "norm drift {drift:e}");
    }
}

#[test]
fn initial_distance_is_linear_in_delta() {
    let ratios: Vec<f64> = [0.16, 0.08, 0.04, 0.02]
        .iter()
        .map(|&d| {
            let w = pair_window(d, 0.0, 0.05).unwrap();
            soliton_pair_distance(d, 0.0, &w).unwrap() / d
        })
        .collect();
    let hi = ratios.iter().cloned().fold(f64::MIN, f64::max);
    let lo = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(hi / lo <= 2.0, "{ratios:?}");
}

#[test]
fn pair_separates_by_unit_order() {
    let delta = 0.05;
    let t = 2.0 / delta;
    let w = pair_window(delta, t, 0.05).unwrap();
    assert!(soliton_pair_overlap(delta, t, &w).unwrap() <= 0.95);
    assert!(soliton_pair_overlap(delta, 0.0, &pair_window(delta, 0.0, 0.05).unwrap()).unwrap() > 0.99);
}

#[test]
fn copy_bound_grows_quadratically() {
    for t in [10.0, 20.0, 40.0] {
        let ratio = kdv_copy_lower_bound(2.0 * t, 2.0).unwrap() / kdv_copy_lower_bound(t, 2.0).unwrap();
        assert!((ratio - 4.0).abs() <= 1.0, "T = {t}: ratio {ratio}");
    }
}
