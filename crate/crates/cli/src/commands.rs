use std::path::PathBuf;

use fluidbound_core::bounds::{
    copy_lower_bound, curve_big_h, curve_h, curve_h_tilde, curves_f_g, estimate_envelope_constants,
    history_state_bound, minimum_time_tstar, scaling_study, window_end, BoundCurveParams, EnvelopeConstants,
};
use fluidbound_core::euler::{pressure_bound_interval, run_separation_experiment, SeparationConfig};
use fluidbound_core::fields::Grid2D;
use fluidbound_core::kdv::{
    normalized_overlap, pair_window_with_margin, soliton_pair_overlap, KdvSolver, KdvState, SolitonParams,
};
use fluidbound_core::stability::{
    build_eigenmode, build_eigenmode_adaptive, growth_bounds as closed_bounds, growth_table, EquilibriumParams,
};

use crate::error::{usage, CliResult};
use crate::output::{num, opt_num, Run};

pub struct Context {
    pub out: PathBuf,
    pub seed: u64,
    pub threads: Option<usize>,
}

impl Context {
    fn start(&self, command: &str) -> CliResult<Run> {
        let mut run = Run::new(&self.out, command)?;
        run.param("seed", self.seed);
        run.param("threads", self.threads);
        Ok(run)
    }
}

const ROOT_TOLERANCE: f64 = 1e-13;

pub fn growth_bounds(ctx: &Context, m: u32, u0: f64, k_min: Option<u32>, k_max: Option<u32>) -> CliResult<()> {
    let params = EquilibriumParams::new(m, u0)?;
    if m < 2 {
        return Err(usage("m must be at least 2"));
    }
    let (lo, hi) = (k_min.unwrap_or(1), k_max.unwrap_or(m - 1));
    if !(1 <= lo && lo <= hi && hi < m) {
        return Err(usage(format!("need 1 <= k_min <= k_max <= m - 1 (got {lo}, {hi}, m = {m})")));
    }
    let mut run = ctx.start("growth-bounds")?;
    run.param("m", m);
    run.param("u0", u0);
    run.param("k_min", lo);
    run.param("k_max", hi);
    run.param("root_tolerance", ROOT_TOLERANCE);

    let table = growth_table(&params, lo, hi, ROOT_TOLERANCE)?;
    let rows: Vec<Vec<String>> = table
        .iter()
        .map(|r| {
            vec![
                m.to_string(),
                r.k.to_string(),
                num(u0),
                num(r.bounds.gamma_l),
                num(r.bounds.gamma_u),
                opt_num(r.gamma_root),
                r.bounds.provably_unstable().to_string(),
            ]
        })
        .collect();
    let unstable = table.iter().filter(|r| r.bounds.provably_unstable()).count();
    run.result("k_cutoff", table[0].bounds.k_cutoff);
    run.result("unstable_rows", unstable);
    run.write_csv(
        "growth_bounds.csv",
        &["m", "k", "u0", "gamma_l", "gamma_u", "gamma_root", "unstable"],
        &rows,
    )?;
    run.finish("growth_bounds")?;
    println!("k_cutoff = {}; {unstable} of {} rows provably unstable", table[0].bounds.k_cutoff, table.len());
    Ok(())
}

/// Where the bound-curve constants come from.
pub struct CurveSetup {
    pub m: u32,
    pub k: u32,
    pub kappa: Option<f64>,
    pub k_exp: Option<f64>,
}

fn envelope_for(m: u32, k: u32) -> CliResult<(EquilibriumParams, EnvelopeConstants)> {
    let equil = EquilibriumParams::normalized(m)?;
    let mode = build_eigenmode_adaptive(&equil, k, equil.l2_norm())?;
    Ok((equil, estimate_envelope_constants(&mode, &equil)?))
}

fn curve_params(setup: &CurveSetup, eps: f64, run: &mut Run) -> CliResult<BoundCurveParams> {
    let equil = EquilibriumParams::normalized(setup.m)?;
    let b = closed_bounds(&equil, setup.k)?;
    if !b.provably_unstable() {
        return Err(usage(format!("k = {} is not provably unstable for m = {}", setup.k, setup.m)));
    }
    run.param("m", setup.m);
    run.param("k", setup.k);
    run.result("gamma_l", b.gamma_l);
    run.result("gamma_u", b.gamma_u);
    let params = match (setup.kappa, setup.k_exp) {
        (Some(kappa), Some(k_exp)) => {
            run.param("kappa_source", "override");
            run.param("exponent_source", "override");
            BoundCurveParams::from_exponent(eps, kappa, k_exp, b.gamma_l, b.gamma_u)?
        }
        (kappa, k_exp) => {
            let (_, c) = envelope_for(setup.m, setup.k)?;
            run.param("kappa_source", if kappa.is_some() { "override" } else { "envelope" });
            run.param("exponent_source", if k_exp.is_some() { "override" } else { "envelope" });
            run.result("envelope_alpha", c.alpha);
            run.result("envelope_beta", c.beta);
            run.result("envelope_kappa", c.kappa);
            let kappa = kappa.unwrap_or(c.kappa);
            match k_exp {
                Some(k_exp) => BoundCurveParams::from_exponent(eps, kappa, k_exp, b.gamma_l, b.gamma_u)?,
                None => BoundCurveParams::new(eps, kappa, c.alpha, c.beta, b.gamma_l, b.gamma_u)?,
            }
        }
    };
    run.param("kappa", params.kappa());
    run.param("k_exp", params.k_exp());
    run.param("alpha", params.alpha());
    run.param("beta", params.beta());
    Ok(params)
}

const MIN_CURVE_SAMPLES: usize = 16;

pub fn bound_curves(ctx: &Context, setup: &CurveSetup, eps: f64, n_samples: usize) -> CliResult<()> {
    if n_samples < MIN_CURVE_SAMPLES {
        return Err(usage(format!("n_samples = {n_samples}; at least {MIN_CURVE_SAMPLES} are needed")));
    }
    let mut run = ctx.start("bound-curves")?;
    run.param("eps", eps);
    run.param("n_samples", n_samples);
    let params = curve_params(setup, eps, &mut run)?;
    let t_star = minimum_time_tstar(&params)?;
    let tf = params.window_end();
    let mut rows = Vec::with_capacity(n_samples);
    let mut tilde = Vec::with_capacity(n_samples);
    for i in 0..n_samples {
        let t = if i + 1 == n_samples { tf } else { tf * i as f64 / (n_samples - 1) as f64 };
        let (f, g) = curves_f_g(eps, params.gamma_l(), params.gamma_u(), t);
        let ht = curve_h_tilde(&params, t)?;
        tilde.push(ht);
        rows.push(vec![
            num(t),
            num(f),
            num(g),
            num(curve_h(&params, t)?),
            num(ht),
            num(curve_big_h(&params, t)?),
        ]);
    }
    let (imin, vmin) = tilde
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
    let interior = imin > 0 && imin + 1 < n_samples && vmin < tilde[0] && vmin < tilde[n_samples - 1];
    run.result("t_star", t_star);
    run.result("window_end", tf);
    run.result("interior_minimum", interior);
    run.result("min_H_tilde", vmin);
    run.write_csv("bound_curves.csv", &["t", "f", "g", "h", "H_tilde", "H"], &rows)?;
    run.finish("bound_curves")?;
    println!("t* = {t_star}; interior minimum of H_tilde: {interior}");
    Ok(())
}

pub fn scaling(ctx: &Context, setup: &CurveSetup, eps_list: &[f64]) -> CliResult<()> {
    let first = *eps_list.first().ok_or_else(|| usage("eps_list is empty"))?;
    let mut run = ctx.start("scaling")?;
    run.param("eps_list", eps_list);
    let base = curve_params(setup, first, &mut run)?;
    let table = scaling_study(&base, eps_list)?;
    let slope = opt_num(table.fitted_slope);
    let rows: Vec<Vec<String>> = table
        .rows
        .iter()
        .map(|r| vec![num(r.eps), num(r.max_one_minus_h_tilde), num(r.t_star), slope.clone()])
        .collect();
    run.result("fitted_slope", table.fitted_slope);
    run.write_csv("scaling.csv", &["eps", "max_one_minus_H_tilde", "t_star", "fitted_slope"], &rows)?;
    run.finish("scaling")?;
    match table.fitted_slope {
        Some(s) => println!("fitted slope = {s}"),
        None => println!("fitted slope: not enough points"),
    }
    Ok(())
}

pub struct KdvSettings {
    pub delta: f64,
    pub t_final: f64,
    pub resolution: f64,
    pub margin: f64,
    pub numeric: bool,
    pub analytic: bool,
    pub samples: usize,
}

const KDV_STEP_FRACTION: f64 = 0.95;

pub fn kdv(ctx: &Context, s: &KdvSettings) -> CliResult<()> {
    if !(s.t_final.is_finite() && s.t_final > 0.0) {
        return Err(usage(format!("t_final = {} must be positive", s.t_final)));
    }
    if s.samples == 0 {
        return Err(usage("samples must be positive"));
    }
    let mut run = ctx.start("kdv")?;
    run.param("delta", s.delta);
    run.param("t_final", s.t_final);
    run.param("resolution", s.resolution);
    run.param("window", s.margin);
    run.param(
        "mode",
        match (s.analytic, s.numeric) {
            (true, true) => "both",
            (true, false) => "analytic",
            _ => "numeric",
        },
    );
    run.param("samples", s.samples);

    let window = pair_window_with_margin(s.delta, s.t_final, s.resolution, s.margin)?;
    let dx = window.dx();
    let slow = SolitonParams::new(1.0, 0.0)?;
    let fast = SolitonParams::new(1.0 + s.delta, 0.0)?;
    let mut states = [KdvState::soliton(window, slow, 0.0), KdvState::soliton(window, fast, 0.0)];
    let norms0 = [states[0].l2_norm(), states[1].l2_norm()];
    let mut solvers = [KdvSolver::new(window), KdvSolver::new(window)];
    // The analytic overlap also validates that the window holds both solitons.
    soliton_pair_overlap(s.delta, s.t_final, &window)?;

    let mut rows = Vec::with_capacity(s.samples + 1);
    let (mut max_dev, mut max_drift) = (0.0_f64, 0.0_f64);
    for i in 0..=s.samples {
        let t = s.t_final * i as f64 / s.samples as f64;
        if s.numeric && i > 0 {
            let span = t - states[0].t;
            let limit = solvers[0].step_limit(&states[0].phi).min(solvers[1].step_limit(&states[1].phi));
            let steps = (span / (KDV_STEP_FRACTION * limit)).ceil().max(1.0) as usize;
            for (st, sv) in states.iter_mut().zip(solvers.iter_mut()) {
                *st = sv.evolve(st, span / steps as f64, steps)?;
                st.t = t;
            }
        }
        let analytic = if s.analytic { Some(soliton_pair_overlap(s.delta, t, &window)?) } else { None };
        let (numeric, drift) = if s.numeric {
            let o = normalized_overlap(&states[0].phi, &states[1].phi, dx);
            let d = (0..2)
                .map(|j| (states[j].l2_norm() / norms0[j] - 1.0).abs())
                .fold(0.0, f64::max);
            (Some(o), Some(d))
        } else {
            (None, None)
        };
        let deviation = match (analytic, numeric) {
            (Some(a), Some(n)) => Some((a - n).abs()),
            _ => None,
        };
        max_dev = max_dev.max(deviation.unwrap_or(0.0));
        max_drift = max_drift.max(drift.unwrap_or(0.0));
        rows.push(vec![num(t), opt_num(analytic), opt_num(numeric), opt_num(deviation), opt_num(drift)]);
    }
    if s.analytic && s.numeric {
        run.result("max_deviation", max_dev);
    }
    if s.numeric {
        run.result("max_norm_drift", max_drift);
    }
    run.result("grid_points", window.n());
    run.write_csv(
        "kdv.csv",
        &["t", "overlap_analytic", "overlap_numeric", "deviation", "norm_drift"],
        &rows,
    )?;
    run.finish("kdv")?;
    if s.analytic && s.numeric {
        println!("max analytic-vs-numeric deviation = {max_dev}");
    }
    Ok(())
}

pub struct EulerSettings {
    pub m: u32,
    pub k: u32,
    pub eps: f64,
    pub grid_n: usize,
    pub dt: f64,
    pub t_max: Option<f64>,
    pub gauge: f64,
    pub sample_every: usize,
}

/// Allowance for comparisons that are tight at `t = 0`, where the measured
/// values and the bounds coincide up to rounding.
pub const ROUNDING: f64 = 1e-15;

pub fn euler_sim(ctx: &Context, s: &EulerSettings) -> CliResult<()> {
    let grid = Grid2D::square(s.grid_n)?;
    let mut run = ctx.start("euler-sim")?;
    for (key, v) in [("eps", s.eps), ("dt", s.dt), ("gauge", s.gauge)] {
        run.param(key, v);
    }
    run.param("m", s.m);
    run.param("k", s.k);
    run.param("grid_n", s.grid_n);
    run.param("sample_every", s.sample_every);

    let (equil, consts) = envelope_for(s.m, s.k)?;
    let mode = build_eigenmode_adaptive(&equil, s.k, equil.l2_norm())?;
    let b = mode.bounds();
    let window = if s.eps > 0.0 { Some(window_end(s.eps, b.gamma_u)) } else { None };
    let t_max = s
        .t_max
        .or(window)
        .ok_or_else(|| usage("t_max is required when eps = 0"))?;
    run.param("t_max", t_max);
    run.param("kappa_source", "envelope");
    run.result("alpha", consts.alpha);
    run.result("beta", consts.beta);
    run.result("b1", consts.b1);
    run.result("b2", consts.b2);
    run.result("kappa", consts.kappa);
    run.result("gamma", mode.gamma());
    run.result("window_end", window);

    let config = SeparationConfig {
        grid,
        eps: s.eps,
        t_max,
        dt: s.dt,
        sample_every: s.sample_every,
        gauge: s.gauge,
    };
    let records = run_separation_experiment(&equil, &mode, &config)?;
    let curves = if s.eps > 0.0 {
        Some(BoundCurveParams::from_envelope(s.eps, &consts, b.gamma_l, b.gamma_u)?)
    } else {
        None
    };
    let ab = consts.alpha * consts.beta;
    let (e0, w0) = (records[0].energy, records[0].enstrophy_l4);
    let mut overlap_ok = true;
    let mut eta_ok = true;
    let mut pressure_ok = true;
    let (mut de_max, mut dw_max) = (0.0_f64, 0.0_f64);
    let mut rows = Vec::with_capacity(records.len());
    for r in &records {
        let (f, g) = curves_f_g(s.eps, b.gamma_l, b.gamma_u, r.t);
        let in_window = window.is_some_and(|w| r.t <= w * (1.0 + 1e-12));
        let h_tilde = match (&curves, in_window) {
            (Some(p), true) => Some(curve_h_tilde(p, r.t)?),
            _ => None,
        };
        let eta_bound = s.eps * s.eps * consts.kappa * (ab * r.t).exp_m1();
        let (p_lo, p_hi) = pressure_bound_interval(s.gauge, r.enstrophy_l4);
        let de = (r.energy / e0 - 1.0).abs();
        let dw = (r.enstrophy_l4 / w0 - 1.0).abs();
        de_max = de_max.max(de);
        dw_max = dw_max.max(dw);
        if let Some(h) = h_tilde {
            overlap_ok &= r.overlap_nonlinear <= h + ROUNDING;
        }
        if in_window || s.eps == 0.0 {
            eta_ok &= r.eta_l2 <= eta_bound + ROUNDING * equil.l2_norm();
        }
        pressure_ok &= r.pressure_l2 >= p_lo * (1.0 - 1e-12) && r.pressure_l2 <= p_hi;
        rows.push(vec![
            num(r.t),
            num(r.energy),
            num(de),
            num(r.enstrophy_l4),
            num(dw),
            num(r.overlap_nonlinear),
            num(r.overlap_linear),
            num(f),
            num(g),
            opt_num(h_tilde),
            num(r.eta_l2),
            num(eta_bound),
            num(r.pressure_l2),
            num(p_lo),
            num(p_hi),
        ]);
    }
    run.result("overlap_below_H_tilde", overlap_ok);
    run.result("eta_below_bound", eta_ok);
    run.result("pressure_within_bounds", pressure_ok);
    run.result("max_energy_drift", de_max);
    run.result("max_enstrophy_l4_drift", dw_max);
    run.write_csv(
        "overlap.csv",
        &[
            "t",
            "energy",
            "energy_drift",
            "enstrophy_l4",
            "enstrophy_l4_drift",
            "overlap_nonlinear",
            "overlap_linear",
            "f",
            "g",
            "H_tilde",
            "eta_l2",
            "eta_bound",
            "pressure_l2",
            "pressure_lower",
            "pressure_upper",
        ],
        &rows,
    )?;
    run.finish("euler_sim")?;
    println!(
        "overlap <= H_tilde: {overlap_ok}; eta <= bound: {eta_ok}; energy drift {de_max:e}; L4 drift {dw_max:e}"
    );
    Ok(())
}

pub fn copy_bound(ctx: &Context, eps0: f64, epsf: f64, delta: f64, horizon: Option<f64>, history: bool) -> CliResult<()> {
    let mut run = ctx.start("copy-bound")?;
    run.param("eps0", eps0);
    run.param("epsf", epsf);
    run.param("delta", delta);
    run.param("T", horizon);
    run.param("kind", if history { "history" } else { "final" });
    let final_bound = copy_lower_bound(eps0, epsf, delta)?;
    let value = if history {
        let t = horizon.ok_or_else(|| usage("the history bound needs --T"))?;
        history_state_bound(final_bound, t)?
    } else {
        final_bound
    };
    run.result("value", value);
    run.finish("copy_bound")?;
    println!("{value}");
    Ok(())
}

pub fn eigenmode(ctx: &Context, m: u32, u0: f64, k: u32, j_max: Option<i64>, aleph: Option<f64>) -> CliResult<()> {
    let equil = EquilibriumParams::new(m, u0)?;
    let aleph = aleph.unwrap_or(equil.l2_norm());
    let mut run = ctx.start("eigenmode")?;
    run.param("m", m);
    run.param("u0", u0);
    run.param("k", k);
    run.param("j_max", j_max);
    run.param("aleph", aleph);
    let mode = match j_max {
        Some(j) => build_eigenmode(&equil, k, j, aleph)?,
        None => build_eigenmode_adaptive(&equil, k, aleph)?,
    };
    let rows: Vec<Vec<String>> = mode
        .support()
        .into_iter()
        .map(|j| {
            let (c, b) = (mode.c(j), mode.b(j));
            vec![j.to_string(), num(c.re), num(c.im), num(b.re), num(b.im)]
        })
        .collect();
    run.result("gamma", mode.gamma());
    run.result("q", mode.q());
    run.result("j_max", mode.j_max());
    run.result("recurrence_residual", mode.recurrence_residual());
    run.write_csv("eigenmode.csv", &["j", "re_c", "im_c", "re_b", "im_b"], &rows)?;
    run.finish("eigenmode")?;
    println!("gamma = {}; q = {}", mode.gamma(), mode.q());
    Ok(())
}
