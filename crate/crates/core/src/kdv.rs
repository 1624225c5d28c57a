//! KdV solitons `phi_t + phi_xxx - 6 phi phi_x = 0` on a periodic window of the
//! real line: analytic single solitons, pair distances and overlaps, and an
//! integrating-factor RK4 integrator with two-thirds dealiasing.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

use crate::fields::{FieldError, Grid1D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KdvError {
    #[error("soliton speed c = {0} must be positive and finite")]
    InvalidSpeed(f64),
    #[error("speed offset delta = {0} outside the allowed range")]
    InvalidDelta(f64),
    #[error("window too small: soliton tail {tail:e} at the boundary exceeds 1e-12")]
    WindowTooSmall { tail: f64 },
    #[error("time step {dt} exceeds the nonlinear stability limit {limit}")]
    StepTooLarge { dt: f64, limit: f64 },
    #[error("non-finite value in the solution at t = {t}")]
    NonFinite { t: f64 },
    #[error("degenerate soliton pair: initial distance is zero")]
    DegeneratePair,
    #[error("time {0} must be positive and finite")]
    InvalidTime(f64),
    #[error("sample count {got} does not match window size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type Result<T> = std::result::Result<T, KdvError>;

/// Single soliton `-(c/2) sech^2((sqrt(c)/2)(x - c t + a))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolitonParams {
    c: f64,
    a: f64,
}

impl SolitonParams {
    pub fn new(c: f64, a: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0) {
            return Err(KdvError::InvalidSpeed(c));
        }
        Ok(Self { c, a })
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    /// `int phi^2 dx = (2/3) c^{3/2}`.
    pub fn norm_squared(&self) -> f64 {
        2.0 / 3.0 * self.c.powf(1.5)
    }
}

pub fn soliton_eval(params: SolitonParams, x: f64, t: f64) -> f64 {
    let s = 1.0 / (0.5 * params.c.sqrt() * (x - params.c * t + params.a)).cosh();
    -0.5 * params.c * s * s
}

#[derive(Clone, Debug, PartialEq)]
pub struct KdvState {
    pub grid: Grid1D,
    pub phi: Vec<f64>,
    pub t: f64,
}

impl KdvState {
    pub fn new(grid: Grid1D, phi: Vec<f64>, t: f64) -> Result<Self> {
        if phi.len() != grid.n() {
            return Err(KdvError::DimensionMismatch {
                expected: grid.n(),
                got: phi.len(),
            });
        }
        Ok(Self { grid, phi, t })
    }

    pub fn soliton(grid: Grid1D, params: SolitonParams, t: f64) -> Self {
        let phi = grid.points().iter().map(|&x| soliton_eval(params, x, t)).collect();
        Self { grid, phi, t }
    }

    pub fn l2_norm(&self) -> f64 {
        l2_inner(&self.phi, &self.phi, self.grid.dx()).sqrt()
    }
}

/// Trapezoidal `int a b dx` on a periodic window.
pub fn l2_inner(a: &[f64], b: &[f64], dx: f64) -> f64 {
    dx * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
}

const DISPERSIVE_STEP_CONSTANT: f64 = 8.0;

/// Integrating-factor RK4 stepper; the dispersion `e^{i k^3 t}` is applied exactly.
pub struct KdvSolver {
    grid: Grid1D,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    k: Vec<f64>,
    keep: Vec<bool>,
    k_dealias: f64,
    cached_dt: f64,
    e_half: Vec<Complex64>,
    e_full: Vec<Complex64>,
    scratch: Vec<Complex64>,
    work: Vec<Complex64>,
}

impl KdvSolver {
    pub fn new(grid: Grid1D) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scratch_len = fwd.get_inplace_scratch_len().max(inv.get_inplace_scratch_len());
        let k: Vec<f64> = (0..n).map(|i| grid.wavenumber(i)).collect();
        let cutoff = (n / 3) as i64;
        let keep = (0..n)
            .map(|i| {
                let j = if 2 * i >= n { i as i64 - n as i64 } else { i as i64 };
                j.abs() <= cutoff
            })
            .collect();
        Self {
            grid,
            fwd,
            inv,
            k,
            keep,
            k_dealias: grid.wavenumber(1) * cutoff as f64,
            cached_dt: f64::NAN,
            e_half: vec![Complex64::new(1.0, 0.0); n],
            e_full: vec![Complex64::new(1.0, 0.0); n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            work: vec![Complex64::new(0.0, 0.0); n],
        }
    }

    /// Largest admissible step: the RK4 stability region for the advection
    /// term, and a `1 / k^2` limit beyond which the rotating dispersive phases
    /// of interacting modes destabilize the integrating-factor scheme.
    pub fn step_limit(&self, phi: &[f64]) -> f64 {
        let amp = phi.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let dispersive = DISPERSIVE_STEP_CONSTANT / (self.k_dealias * self.k_dealias);
        if amp == 0.0 {
            dispersive
        } else {
            dispersive.min(2.5 / (6.0 * amp * self.k_dealias))
        }
    }

    fn set_dt(&mut self, dt: f64) {
        if self.cached_dt == dt {
            return;
        }
        for (i, &k) in self.k.iter().enumerate() {
            let w = k * k * k;
            self.e_half[i] = Complex64::from_polar(1.0, w * 0.5 * dt);
            self.e_full[i] = Complex64::from_polar(1.0, w * dt);
        }
        self.cached_dt = dt;
    }

    /// `3 i k (phi^2)^`, dealiased, for unnormalized spectra.
    fn nonlinear(&mut self, spec: &[Complex64], out: &mut [Complex64]) {
        let n = spec.len() as f64;
        self.work.copy_from_slice(spec);
        self.inv.process_with_scratch(&mut self.work, &mut self.scratch);
        for v in self.work.iter_mut() {
            let re = v.re / n;
            *v = Complex64::new(re * re, 0.0);
        }
        self.fwd.process_with_scratch(&mut self.work, &mut self.scratch);
        for i in 0..out.len() {
            out[i] = if self.keep[i] {
                self.work[i] * Complex64::new(0.0, 3.0 * self.k[i])
            } else {
                Complex64::new(0.0, 0.0)
            };
        }
    }

    pub fn step(&mut self, state: &KdvState, dt: f64) -> Result<KdvState> {
        if state.grid != self.grid || state.phi.len() != self.grid.n() {
            return Err(KdvError::DimensionMismatch {
                expected: self.grid.n(),
                got: state.phi.len(),
            });
        }
        let limit = self.step_limit(&state.phi);
        if !(dt > 0.0 && dt <= limit) {
            return Err(KdvError::StepTooLarge { dt, limit });
        }
        self.set_dt(dt);
        let n = self.grid.n();
        let mut v: Vec<Complex64> = state.phi.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        self.fwd.process_with_scratch(&mut v, &mut self.scratch);

        let zero = Complex64::new(0.0, 0.0);
        let (mut k1, mut k2, mut k3, mut k4) = (vec![zero; n], vec![zero; n], vec![zero; n], vec![zero; n]);
        let mut tmp = vec![zero; n];
        self.nonlinear(&v, &mut k1);
        for i in 0..n {
            tmp[i] = self.e_half[i] * (v[i] + 0.5 * dt * k1[i]);
        }
        self.nonlinear(&tmp, &mut k2);
        for i in 0..n {
            tmp[i] = self.e_half[i] * v[i] + 0.5 * dt * k2[i];
        }
        self.nonlinear(&tmp, &mut k3);
        for i in 0..n {
            tmp[i] = self.e_full[i] * v[i] + dt * self.e_half[i] * k3[i];
        }
        self.nonlinear(&tmp, &mut k4);
        for i in 0..n {
            v[i] = self.e_full[i] * v[i]
                + dt / 6.0 * (self.e_full[i] * k1[i] + 2.0 * self.e_half[i] * (k2[i] + k3[i]) + k4[i]);
        }
        self.inv.process_with_scratch(&mut v, &mut self.scratch);
        let scale = 1.0 / n as f64;
        let phi: Vec<f64> = v.iter().map(|c| c.re * scale).collect();
        let t = state.t + dt;
        if phi.iter().any(|x| !x.is_finite()) {
            return Err(KdvError::NonFinite { t });
        }
        Ok(KdvState { grid: self.grid, phi, t })
    }

    /// `steps` fixed steps of size `dt`.
    pub fn evolve(&mut self, state: &KdvState, dt: f64, steps: usize) -> Result<KdvState> {
        let mut s = state.clone();
        for _ in 0..steps {
            s = self.step(&s, dt)?;
        }
        Ok(s)
    }
}

/// One step with a freshly planned solver.
pub fn kdv_step(state: &KdvState, dt: f64) -> Result<KdvState> {
    KdvSolver::new(state.grid).step(state, dt)
}

/// Margin beyond each soliton so that sech² tails fall below 1e-12.
pub const WINDOW_MARGIN: f64 = 40.0;

/// Window `[-margin, (1 + delta) t + margin]` with spacing at most `max_dx`
/// and a power-of-two sample count.
pub fn pair_window(delta: f64, t: f64, max_dx: f64) -> Result<Grid1D> {
    pair_window_with_margin(delta, t, max_dx, WINDOW_MARGIN)
}

pub fn pair_window_with_margin(delta: f64, t: f64, max_dx: f64, margin: f64) -> Result<Grid1D> {
    if !(max_dx > 0.0 && margin > 0.0) {
        return Err(FieldError::InvalidWindow(format!("max_dx = {max_dx}, margin = {margin}")).into());
    }
    let x_min = -margin;
    let x_max = (1.0 + delta) * t.max(0.0) + margin;
    let n = (((x_max - x_min) / max_dx).ceil() as usize).next_power_of_two().max(64);
    Ok(Grid1D::new(x_min, x_max, n)?)
}

fn pair(delta: f64) -> Result<(SolitonParams, SolitonParams)> {
    if !(delta.is_finite() && (0.0..1.0).contains(&delta)) {
        return Err(KdvError::InvalidDelta(delta));
    }
    Ok((SolitonParams::new(1.0, 0.0)?, SolitonParams::new(1.0 + delta, 0.0)?))
}

fn sampled_pair(delta: f64, t: f64, window: &Grid1D) -> Result<(Vec<f64>, Vec<f64>)> {
    let (p, q) = pair(delta)?;
    let mut tail = 0.0_f64;
    for s in [p, q] {
        for x in [window.x_min(), window.x_max()] {
            tail = tail.max(soliton_eval(s, x, t).abs());
        }
    }
    if tail > 1e-12 {
        return Err(KdvError::WindowTooSmall { tail });
    }
    let xs = window.points();
    Ok((
        xs.iter().map(|&x| soliton_eval(p, x, t)).collect(),
        xs.iter().map(|&x| soliton_eval(q, x, t)).collect(),
    ))
}

/// Distance between two real fields minimized over the sign `z = +-1`.
pub fn sign_min_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let aa = l2_inner(a, a, dx);
    let bb = l2_inner(b, b, dx);
    let ab = l2_inner(a, b, dx);
    (aa + bb - 2.0 * ab.abs()).max(0.0).sqrt()
}

/// `int a b / (|a| |b|)`.
pub fn normalized_overlap(a: &[f64], b: &[f64], dx: f64) -> f64 {
    let den = (l2_inner(a, a, dx) * l2_inner(b, b, dx)).sqrt();
    if den == 0.0 {
        return 1.0;
    }
    l2_inner(a, b, dx) / den
}

/// `min_z |phi - z phi'|` for solitons of speed 1 and `1 + delta` at time `t`.
pub fn soliton_pair_distance(delta: f64, t: f64, window: &Grid1D) -> Result<f64> {
    let (a, b) = sampled_pair(delta, t, window)?;
    Ok(sign_min_distance(&a, &b, window.dx()))
}

pub fn soliton_pair_overlap(delta: f64, t: f64, window: &Grid1D) -> Result<f64> {
    let (a, b) = sampled_pair(delta, t, window)?;
    Ok(normalized_overlap(&a, &b, window.dx()))
}

fn integrate_line(f: impl Fn(f64) -> f64 + Copy, cuts: &[f64]) -> f64 {
    cuts.windows(2)
        .map(|w| quadrature::double_exponential::integrate(f, w[0], w[1], 1e-15).integral)
        .sum()
}

const LINE_CUTS: [f64; 9] = [-90.0, -30.0, -8.0, -1.0, 0.0, 1.0, 8.0, 30.0, 90.0];

/// Overlap of the two centred solitons,
/// `int (3 (1+delta)^{1/4} / 8) sech^2((x+1)/2) sech^2(sqrt(1+delta)(x-1)/2) dx`.
pub fn overlap_integral_i(delta: f64) -> Result<f64> {
    if !(delta.is_finite() && (0.0..0.5).contains(&delta)) {
        return Err(KdvError::InvalidDelta(delta));
    }
    Ok(integrate_line(overlap_integrand(delta), &LINE_CUTS))
}

pub fn overlap_integrand(delta: f64) -> impl Fn(f64) -> f64 + Copy {
    let s = (1.0 + delta).sqrt();
    let pre = 3.0 * (1.0 + delta).powf(0.25) / 8.0;
    move |x: f64| {
        let a = 1.0 / (0.5 * (x + 1.0)).cosh();
        let b = 1.0 / (0.5 * s * (x - 1.0)).cosh();
        pre * a * a * b * b
    }
}

/// `(d(T) / d(0))^2`.
pub fn copy_bound_from_distances(d0: f64, d_t: f64) -> Result<f64> {
    if d0 == 0.0 {
        return Err(KdvError::DegeneratePair);
    }
    Ok((d_t / d0).powi(2))
}

/// Copy lower bound at horizon `T` for the pair with `delta = delta_map / T`.
pub fn kdv_copy_lower_bound(t_final: f64, delta_map: f64) -> Result<f64> {
    if !(t_final.is_finite() && t_final > 0.0) {
        return Err(KdvError::InvalidTime(t_final));
    }
    let delta = delta_map / t_final;
    if delta == 0.0 {
        return Err(KdvError::DegeneratePair);
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(KdvError::InvalidDelta(delta));
    }
    let w0 = pair_window(delta, 0.0, 0.05)?;
    let wt = pair_window(delta, t_final, 0.05)?;
    let d0 = soliton_pair_distance(delta, 0.0, &w0)?;
    let dt = soliton_pair_distance(delta, t_final, &wt)?;
    copy_bound_from_distances(d0, dt)
}
