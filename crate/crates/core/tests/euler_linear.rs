use fluidbound_core::euler::*;
use fluidbound_core::fields::Grid2D;
use fluidbound_core::stability::*;

#[test]
fn eigenpair_under_linear_operator() {
    let e = EquilibriumParams::normalized(2).unwrap();
    let mode = build_eigenmode(&e, 1, 64, e.l2_norm()).unwrap();
    let g = Grid2D::square(256).unwrap();
    let (v, p) = mode.synthesize(g, 0.0, 1e-3).unwrap();
    let (r, pr) = linear_rhs(&v, &e);
    let diff = r.sub(&v.scale(mode.gamma())).unwrap();
    let scale = v.ux.max_abs_coeff().max(v.uy.max_abs_coeff()) * mode.gamma();
    let rel = diff.ux.max_abs_coeff().max(diff.uy.max_abs_coeff()) / scale;
    let prel = pr.sub(&p).unwrap().max_abs_coeff() / p.max_abs_coeff();
    eprintln!("eigen rel {rel:e} pressure rel {prel:e}");
    assert!(rel <= 1e-8);
}

#[test]
fn linear_growth_at_the_mode_rate() {
    let e = EquilibriumParams::normalized(2).unwrap();
    let b = growth_bounds(&e, 1).unwrap();
    let mode = build_eigenmode(&e, 1, 64, e.l2_norm()).unwrap();
    let g = Grid2D::new(16, 256).unwrap();
    let eps = 1e-3;
    let (v, _) = mode.synthesize(g, 0.0, eps).unwrap();
    let u0 = e.velocity(g);
    let base = u0.scale((1.0 - eps * eps).sqrt());
    let mut s = LinearState::new(v, 0.0);
    let n0 = s.vtilde.l2_norm();
    for _ in 0..200 {
        s = linear_step(&s, &e, 0.01).unwrap();
        let o = fluidbound_core::fields::inner_product_normalized(&u0, &base.add(&s.vtilde).unwrap()).unwrap();
        let (f, gl) = fluidbound_core::bounds::curves_f_g(eps, b.gamma_l, b.gamma_u, s.t);
        assert!(gl <= o && o <= f, "t {}: {gl} <= {o} <= {f}", s.t);
    }
    let slope = (s.vtilde.l2_norm() / n0).ln() / s.t;
    assert!((slope / mode.gamma() - 1.0).abs() <= 1e-4, "slope {slope} vs {}", mode.gamma());
}
