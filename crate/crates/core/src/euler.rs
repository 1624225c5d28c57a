//! Incompressible 2D Euler on the torus in vorticity form, the equations
//! linearized about the shear flow, pressure recovery and the separation
//! experiment that runs both side by side.

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

use crate::fields::{
    inner_product, inner_product_normalized, lp_norm_samples, poisson_solve, FieldError, Fft2d, Grid2D, Norm,
    SpectralField2D, VectorField2D,
};
use crate::stability::{EigenMode, EquilibriumParams, StabilityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EulerError {
    #[error("CFL violation: dt = {dt} exceeds {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("time step {0} must be positive and finite")]
    InvalidStep(f64),
    #[error("non-finite value in the solution at t = {t}")]
    NonFinite { t: f64 },
    #[error("perturbation amplitude eps = {eps} outside [0, {max})")]
    InvalidAmplitude { eps: f64, max: f64 },
    #[error("mode normalization {aleph} does not match the equilibrium norm {norm}")]
    NormalizationMismatch { aleph: f64, norm: f64 },
    #[error("mode belongs to a different equilibrium")]
    EquilibriumMismatch,
    #[error("run length t_max = {0} must be positive and finite")]
    InvalidDuration(f64),
    #[error("state lives on a different grid than the solver")]
    GridMismatch,
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

pub type Result<T> = std::result::Result<T, EulerError>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq)]
pub struct EulerState {
    pub grid: Grid2D,
    pub omega: SpectralField2D,
    pub mean_flow: [f64; 2],
    pub t: f64,
}

impl EulerState {
    pub fn new(omega: SpectralField2D, mean_flow: [f64; 2], t: f64) -> Self {
        Self {
            grid: omega.grid(),
            omega,
            mean_flow,
            t,
        }
    }

    /// State whose velocity is `v`; the divergent part of `v` is discarded.
    pub fn from_velocity(v: &VectorField2D, t: f64) -> Result<Self> {
        let omega = v.uy.ddx().sub(&v.ux.ddy())?;
        let mean = [v.ux.coeffs()[0].re, v.uy.coeffs()[0].re];
        Ok(Self::new(omega, mean, t))
    }

    pub fn equilibrium(equil: &EquilibriumParams, grid: Grid2D) -> Self {
        Self::new(equil.vorticity(grid), [0.0, 0.0], 0.0)
    }

    pub fn velocity(&self) -> VectorField2D {
        velocity_from_vorticity(&self.omega, self.mean_flow)
    }

    /// `|u|_{L2}` from the vorticity spectrum.
    pub fn energy(&self) -> f64 {
        let g = self.grid;
        let mut s = self.mean_flow[0].powi(2) + self.mean_flow[1].powi(2);
        for iy in 0..g.ny() {
            let jy = g.wavenumber_y(iy) as f64;
            for ix in 0..g.nx() {
                if g.is_nyquist_x(ix) || g.is_nyquist_y(iy) {
                    continue;
                }
                let jx = g.wavenumber_x(ix) as f64;
                let k2 = jx * jx + jy * jy;
                if k2 > 0.0 {
                    s += self.omega.coeffs()[iy * g.nx() + ix].norm_sqr() / k2;
                }
            }
        }
        2.0 * PI * s.sqrt()
    }

    pub fn enstrophy_l4(&self) -> f64 {
        lp_norm_samples(&self.omega.to_physical(), self.grid, Norm::L4)
    }
}

fn velocity_coeffs(g: Grid2D, ix: usize, iy: usize, w: Complex64) -> (Complex64, Complex64) {
    if g.is_nyquist_x(ix) || g.is_nyquist_y(iy) {
        return (ZERO, ZERO);
    }
    let jx = g.wavenumber_x(ix) as f64;
    let jy = g.wavenumber_y(iy) as f64;
    let k2 = jx * jx + jy * jy;
    if k2 == 0.0 {
        return (ZERO, ZERO);
    }
    (I * jy * w / k2, -I * jx * w / k2)
}

/// `u = (-psi_y, psi_x) + mean` with `lap psi = omega`.
pub fn velocity_from_vorticity(omega: &SpectralField2D, mean_flow: [f64; 2]) -> VectorField2D {
    let g = omega.grid();
    let mut ux = SpectralField2D::zeros(g);
    let mut uy = SpectralField2D::zeros(g);
    for iy in 0..g.ny() {
        for ix in 0..g.nx() {
            let s = iy * g.nx() + ix;
            let (a, b) = velocity_coeffs(g, ix, iy, omega.coeffs()[s]);
            ux.coeffs_mut()[s] = a;
            uy.coeffs_mut()[s] = b;
        }
    }
    ux.coeffs_mut()[0] = Complex64::new(mean_flow[0], 0.0);
    uy.coeffs_mut()[0] = Complex64::new(mean_flow[1], 0.0);
    VectorField2D { ux, uy }
}

/// Dealiased RK4 integrator for `omega_t + u . grad omega = 0`.
pub struct EulerSolver {
    grid: Grid2D,
    fft: Fft2d,
    keep: Vec<bool>,
    vel: Vec<Complex64>,
    grad: Vec<Complex64>,
    prod: Vec<Complex64>,
}

impl EulerSolver {
    pub fn new(grid: Grid2D) -> Self {
        let n = grid.len();
        Self {
            grid,
            fft: Fft2d::new(grid),
            keep: grid.dealias_mask(),
            vel: vec![ZERO; n],
            grad: vec![ZERO; n],
            prod: vec![ZERO; n],
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    /// Largest wavenumber entering the CFL number.
    pub fn k_max(&self) -> f64 {
        (self.grid.nx().max(self.grid.ny()) / 2) as f64
    }

    /// Writes `-(u . grad omega)` into `out`; returns `max |u|`.
    fn rhs(&mut self, omega: &[Complex64], mean: [f64; 2], out: &mut [Complex64]) -> f64 {
        let g = self.grid;
        for iy in 0..g.ny() {
            let jy = g.wavenumber_y(iy) as f64;
            for ix in 0..g.nx() {
                let s = iy * g.nx() + ix;
                let w = omega[s];
                let (a, b) = velocity_coeffs(g, ix, iy, w);
                self.vel[s] = a + I * b;
                if g.is_nyquist_x(ix) || g.is_nyquist_y(iy) {
                    self.grad[s] = ZERO;
                } else {
                    let jx = g.wavenumber_x(ix) as f64;
                    self.grad[s] = I * jx * w + I * (I * jy * w);
                }
            }
        }
        self.vel[0] = Complex64::new(mean[0], mean[1]);
        self.fft.inverse(&mut self.vel);
        self.fft.inverse(&mut self.grad);
        let mut speed2 = 0.0_f64;
        for s in 0..g.len() {
            let (u, w) = (self.vel[s], self.grad[s]);
            speed2 = speed2.max(u.norm_sqr());
            self.prod[s] = Complex64::new(u.re * w.re + u.im * w.im, 0.0);
        }
        self.fft.forward(&mut self.prod);
        for s in 0..g.len() {
            out[s] = if self.keep[s] { -self.prod[s] } else { ZERO };
        }
        speed2.sqrt()
    }

    pub fn step(&mut self, state: &EulerState, dt: f64) -> Result<EulerState> {
        if state.grid != self.grid {
            return Err(EulerError::GridMismatch);
        }
        if !(dt.is_finite() && dt > 0.0) {
            return Err(EulerError::InvalidStep(dt));
        }
        let n = self.grid.len();
        let w0 = state.omega.coeffs();
        let mean = state.mean_flow;
        let (mut k1, mut k2, mut k3, mut k4) = (vec![ZERO; n], vec![ZERO; n], vec![ZERO; n], vec![ZERO; n]);
        let mut tmp = vec![ZERO; n];

        let speed = self.rhs(w0, mean, &mut k1);
        let limit = 0.5 / (speed * self.k_max());
        if dt > limit {
            return Err(EulerError::Cfl { dt, limit });
        }
        for s in 0..n {
            tmp[s] = w0[s] + 0.5 * dt * k1[s];
        }
        self.rhs(&tmp, mean, &mut k2);
        for s in 0..n {
            tmp[s] = w0[s] + 0.5 * dt * k2[s];
        }
        self.rhs(&tmp, mean, &mut k3);
        for s in 0..n {
            tmp[s] = w0[s] + dt * k3[s];
        }
        self.rhs(&tmp, mean, &mut k4);
        for s in 0..n {
            tmp[s] = w0[s] + dt / 6.0 * (k1[s] + 2.0 * (k2[s] + k3[s]) + k4[s]);
        }
        let mut omega = SpectralField2D::from_coeffs(self.grid, tmp)?;
        omega.symmetrize();
        let t = state.t + dt;
        if !omega.is_finite() {
            return Err(EulerError::NonFinite { t });
        }
        Ok(EulerState {
            grid: self.grid,
            omega,
            mean_flow: mean,
            t,
        })
    }

    /// Pressure with mean `gauge` solving `lap P = -div((u . grad) u)`.
    pub fn pressure(&mut self, state: &EulerState, gauge: f64) -> Result<SpectralField2D> {
        let g = self.grid;
        let u = state.velocity();
        let mut ux = u.ux.coeffs().to_vec();
        let mut uy = u.uy.coeffs().to_vec();
        self.fft.inverse(&mut ux);
        self.fft.inverse(&mut uy);
        let mut xx: Vec<Complex64> = ux.iter().map(|a| Complex64::new(a.re * a.re, 0.0)).collect();
        let mut xy: Vec<Complex64> = ux.iter().zip(&uy).map(|(a, b)| Complex64::new(a.re * b.re, 0.0)).collect();
        let mut yy: Vec<Complex64> = uy.iter().map(|b| Complex64::new(b.re * b.re, 0.0)).collect();
        self.fft.forward(&mut xx);
        self.fft.forward(&mut xy);
        self.fft.forward(&mut yy);
        let mut rhs = SpectralField2D::zeros(g);
        for iy in 0..g.ny() {
            let jy = g.wavenumber_y(iy) as f64;
            for ix in 0..g.nx() {
                let s = iy * g.nx() + ix;
                if !self.keep[s] {
                    continue;
                }
                let jx = g.wavenumber_x(ix) as f64;
                rhs.coeffs_mut()[s] = jx * jx * xx[s] + 2.0 * jx * jy * xy[s] + jy * jy * yy[s];
            }
        }
        rhs.coeffs_mut()[0] = ZERO;
        rhs.symmetrize();
        Ok(poisson_solve(&rhs, gauge)?)
    }
}

/// Constant in `|P|_{L2} <= 2 pi gauge + C |omega|_{L4}^2`, fitted once on
/// random band-limited states (largest observed ratio 1/3).
pub const PRESSURE_BOUND_C: f64 = 0.5;

/// `(2 pi gauge, 2 pi gauge + C |omega|_{L4}^2)`.
pub fn pressure_bound_interval(gauge: f64, omega_l4: f64) -> (f64, f64) {
    let lo = 2.0 * PI * gauge;
    (lo, lo + PRESSURE_BOUND_C * omega_l4 * omega_l4)
}

/// One RK4 step with a freshly planned solver.
pub fn nonlinear_step(state: &EulerState, dt: f64) -> Result<EulerState> {
    EulerSolver::new(state.grid).step(state, dt)
}

pub fn recover_pressure(state: &EulerState, gauge: f64) -> Result<SpectralField2D> {
    EulerSolver::new(state.grid).pressure(state, gauge)
}

/// Overlap of the stacked `(u, P)` with the equilibrium stack `(u0, gauge)`.
pub fn direct_sum_overlap(state: &EulerState, equil: &EquilibriumParams, gauge: f64) -> Result<f64> {
    let u = state.velocity();
    let p = recover_pressure(state, gauge)?;
    let u0 = equil.velocity(state.grid);
    let area = 4.0 * PI * PI;
    let dot = inner_product(&u0, &u)? + area * gauge * p.mean();
    let n_w = (u.l2_norm().powi(2) + p.l2_norm().powi(2)).sqrt();
    let n_w0 = (u0.l2_norm().powi(2) + area * gauge * gauge).sqrt();
    if n_w == 0.0 || n_w0 == 0.0 {
        return Err(EulerError::Field(FieldError::ZeroNorm));
    }
    Ok((dot / (n_w * n_w0)).clamp(-1.0, 1.0))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinearState {
    pub grid: Grid2D,
    pub vtilde: VectorField2D,
    pub t: f64,
}

impl LinearState {
    pub fn new(vtilde: VectorField2D, t: f64) -> Self {
        Self {
            grid: vtilde.grid(),
            vtilde,
            t,
        }
    }

    /// Pressure of the linearized flow.
    pub fn pressure(&self, equil: &EquilibriumParams) -> SpectralField2D {
        linear_rhs(&self.vtilde, equil).1
    }
}

/// `-(u0 . grad) v - (v . grad) u0 - grad p` and the pressure `p`, with the
/// products by `sin(m y)` and `cos(m y)` applied as exact index shifts.
pub fn linear_rhs(v: &VectorField2D, equil: &EquilibriumParams) -> (VectorField2D, SpectralField2D) {
    let g = v.grid();
    let (nx, ny) = (g.nx(), g.ny());
    let m = equil.m() as i64;
    let u0 = equil.u0();
    let mf = m as f64;
    let dvx = v.ux.ddx();
    let dvy = v.uy.ddx();
    let zero_row = vec![ZERO; nx];
    let jx: Vec<f64> = (0..nx).map(|ix| g.wavenumber_x(ix) as f64).collect();
    let mut rx = vec![ZERO; g.len()];
    let mut ry = vec![ZERO; g.len()];
    let mut p = vec![ZERO; g.len()];
    for iy in 0..ny {
        if g.is_nyquist_y(iy) {
            continue;
        }
        let jy = g.wavenumber_y(iy);
        let fy = jy as f64;
        let get = |f: &'_ SpectralField2D, j: i64| -> Vec<Complex64> {
            g.slot(0, j).map_or_else(|| zero_row.clone(), |s| f.coeffs()[s..s + nx].to_vec())
        };
        let (ax_lo, ax_hi) = (get(&dvx, jy - m), get(&dvx, jy + m));
        let (ay_lo, ay_hi) = (get(&dvy, jy - m), get(&dvy, jy + m));
        let (vy_lo, vy_hi) = (get(&v.uy, jy - m), get(&v.uy, jy + m));
        let base = iy * nx;
        for ix in 0..nx {
            if g.is_nyquist_x(ix) {
                continue;
            }
            let sx = ax_lo[ix] - ax_hi[ix];
            let sy = ay_lo[ix] - ay_hi[ix];
            // (f(jy - m) - f(jy + m)) / (2i) = -i (f(jy - m) - f(jy + m)) / 2
            let nx_term = Complex64::new(sx.im, -sx.re) * (0.5 * u0) + (vy_lo[ix] + vy_hi[ix]) * (0.5 * u0 * mf);
            let ny_term = Complex64::new(sy.im, -sy.re) * (0.5 * u0);
            let fx = jx[ix];
            let k2 = fx * fx + fy * fy;
            let s = base + ix;
            if k2 == 0.0 {
                rx[s] = -nx_term;
                ry[s] = -ny_term;
                continue;
            }
            let jn = (nx_term * fx + ny_term * fy) / k2;
            rx[s] = jn * fx - nx_term;
            ry[s] = jn * fy - ny_term;
            p[s] = Complex64::new(-jn.im, jn.re);
        }
    }
    let field = |c| SpectralField2D::from_coeffs(g, c).expect("grid-sized buffer");
    (VectorField2D { ux: field(rx), uy: field(ry) }, field(p))
}

/// Max `|u0|` in the linear CFL number.
fn linear_cfl_limit(grid: Grid2D, equil: &EquilibriumParams) -> f64 {
    0.5 / (equil.u0() * (grid.nx().max(grid.ny()) / 2) as f64)
}

pub fn linear_step(state: &LinearState, equil: &EquilibriumParams, dt: f64) -> Result<LinearState> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(EulerError::InvalidStep(dt));
    }
    let limit = linear_cfl_limit(state.grid, equil);
    if dt > limit {
        return Err(EulerError::Cfl { dt, limit });
    }
    let v0 = &state.vtilde;
    let (k1, _) = linear_rhs(v0, equil);
    let (k2, _) = linear_rhs(&v0.add(&k1.scale(0.5 * dt))?, equil);
    let (k3, _) = linear_rhs(&v0.add(&k2.scale(0.5 * dt))?, equil);
    let (k4, _) = linear_rhs(&v0.add(&k3.scale(dt))?, equil);
    let incr = k1.add(&k2.scale(2.0))?.add(&k3.scale(2.0))?.add(&k4)?.scale(dt / 6.0);
    let vtilde = v0.add(&incr)?;
    let t = state.t + dt;
    if !(vtilde.ux.is_finite() && vtilde.uy.is_finite()) {
        return Err(EulerError::NonFinite { t });
    }
    Ok(LinearState::new(vtilde, t))
}

/// Settings of a nonlinear-versus-linear run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeparationConfig {
    pub grid: Grid2D,
    pub eps: f64,
    pub t_max: f64,
    pub dt: f64,
    pub sample_every: usize,
    pub gauge: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub energy: f64,
    pub enstrophy_l4: f64,
    pub overlap_nonlinear: f64,
    pub overlap_linear: f64,
    pub eta_l2: f64,
    pub pressure_l2: f64,
    /// `|u - u_eps|` with `u_eps` the rescaled background.
    pub perturbation_l2: f64,
    /// `|u~ - u_eps|` for the linear solution.
    pub linear_perturbation_l2: f64,
}

/// Evolves `u_eps + eps v(0)` with both solvers in lockstep, where
/// `u_eps = sqrt(1 - eps^2) u0` keeps the initial state at the norm of `u0`.
pub fn run_separation_experiment(
    equil: &EquilibriumParams,
    mode: &EigenMode,
    config: &SeparationConfig,
) -> Result<Vec<DiagnosticsRecord>> {
    let grid = config.grid;
    let norm = equil.l2_norm();
    if mode.params().m() != equil.m() || mode.params().u0() != equil.u0() {
        return Err(EulerError::EquilibriumMismatch);
    }
    if (mode.aleph() - norm).abs() > 1e-9 * norm {
        return Err(EulerError::NormalizationMismatch { aleph: mode.aleph(), norm });
    }
    let eps_max = if mode.q() > 0.0 { (1.0 / mode.q()).min(1.0) } else { 1.0 };
    if !(config.eps >= 0.0 && config.eps < eps_max) {
        return Err(EulerError::InvalidAmplitude { eps: config.eps, max: eps_max });
    }
    if !(config.t_max.is_finite() && config.t_max > 0.0) {
        return Err(EulerError::InvalidDuration(config.t_max));
    }
    if !(config.dt.is_finite() && config.dt > 0.0) {
        return Err(EulerError::InvalidStep(config.dt));
    }
    let sample_every = config.sample_every.max(1);

    let u0 = equil.velocity(grid);
    let base = u0.scale((1.0 - config.eps * config.eps).sqrt());
    let (pert, _) = mode.synthesize(grid, 0.0, config.eps)?;
    let mut nonlinear = EulerState::from_velocity(&base.add(&pert)?, 0.0)?;
    let mut linear = LinearState::new(pert, 0.0);
    let mut solver = EulerSolver::new(grid);

    let steps = ((config.t_max / config.dt) - 1e-9).ceil().max(1.0) as usize;
    let mut records = Vec::with_capacity(steps / sample_every + 2);
    let record = |solver: &mut EulerSolver, nl: &EulerState, lin: &LinearState| -> Result<DiagnosticsRecord> {
        let u = nl.velocity();
        let u_lin = base.add(&lin.vtilde)?;
        let pressure = solver.pressure(nl, config.gauge)?;
        Ok(DiagnosticsRecord {
            t: nl.t,
            energy: u.l2_norm(),
            enstrophy_l4: nl.enstrophy_l4(),
            overlap_nonlinear: inner_product_normalized(&u0, &u)?,
            overlap_linear: inner_product_normalized(&u0, &u_lin)?,
            eta_l2: u.sub(&u_lin)?.l2_norm(),
            pressure_l2: pressure.l2_norm(),
            perturbation_l2: u.sub(&base)?.l2_norm(),
            linear_perturbation_l2: lin.vtilde.l2_norm(),
        })
    };
    records.push(record(&mut solver, &nonlinear, &linear)?);
    for step in 1..=steps {
        let dt = if step == steps {
            config.t_max - config.dt * (steps - 1) as f64
        } else {
            config.dt
        };
        nonlinear = solver.step(&nonlinear, dt)?;
        linear = linear_step(&linear, equil, dt)?;
        if step == steps {
            nonlinear.t = config.t_max;
            linear.t = config.t_max;
        }
        if step % sample_every == 0 || step == steps {
            records.push(record(&mut solver, &nonlinear, &linear)?);
        }
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::transform_forward;

    #[test]
    fn equilibrium_velocity() {
        let g = Grid2D::square(32).unwrap();
        let e = EquilibriumParams::new(3, 0.7).unwrap();
        let u = velocity_from_vorticity(&e.vorticity(g), [0.0, 0.0]);
        let expected = e.velocity(g);
        assert!(u.sub(&expected).unwrap().l2_norm() < 1e-15);
    }

    #[test]
    fn uniform_flow() {
        let g = Grid2D::square(16).unwrap();
        let u = velocity_from_vorticity(&SpectralField2D::zeros(g), [1.0, 0.0]);
        let ux = u.ux.to_physical();
        assert!(ux.iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(u.uy.to_physical().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = Grid2D::square(64).unwrap();
        let e = EquilibriumParams::normalized(2).unwrap();
        let s0 = EulerState::equilibrium(&e, g);
        let s1 = nonlinear_step(&s0, 0.01).unwrap();
        assert!(s1.omega.sub(&s0.omega).unwrap().max_abs_coeff() < 1e-12 * s0.omega.max_abs_coeff());
    }

    #[test]
    fn equilibrium_pressure_is_constant() {
        let g = Grid2D::square(32).unwrap();
        let e = EquilibriumParams::new(2, 1.0).unwrap();
        let p = recover_pressure(&EulerState::equilibrium(&e, g), 0.3).unwrap();
        assert!((p.mean() - 0.3).abs() < 1e-15);
        let zero_mean = p.sub(&SpectralField2D::constant(g, 0.3)).unwrap();
        assert!(zero_mean.max_abs_coeff() <= 1e-12);
    }

    #[test]
    fn zero_perturbation_stays_zero() {
        let g = Grid2D::square(32).unwrap();
        let e = EquilibriumParams::normalized(2).unwrap();
        let s = LinearState::new(VectorField2D::zeros(g), 0.0);
        let next = linear_step(&s, &e, 0.01).unwrap();
        assert_eq!(next.vtilde.l2_norm(), 0.0);
    }

    #[test]
    fn cfl_is_enforced() {
        let g = Grid2D::square(64).unwrap();
        let e = EquilibriumParams::new(2, 1.0).unwrap();
        let s0 = EulerState::equilibrium(&e, g);
        assert!(matches!(nonlinear_step(&s0, 0.1), Err(EulerError::Cfl { .. })));
        let l0 = LinearState::new(VectorField2D::zeros(g), 0.0);
        assert!(matches!(linear_step(&l0, &e, 0.1), Err(EulerError::Cfl { .. })));
    }

    #[test]
    fn velocity_from_random_vorticity_is_solenoidal() {
        let g = Grid2D::square(32).unwrap();
        let samples = g.sample(|x, y| (x + 2.0 * y).sin() * (3.0 * x).cos() + (y * 5.0).sin());
        let w = transform_forward(&samples, g).unwrap();
        let u = velocity_from_vorticity(&w, [0.2, -0.1]);
        assert!(u.divergence_defect() < 1e-13);
    }
}
