//! Linear stability of the sinusoidal shear flow `u0 = (U0 sin(m y), 0)`.
//!
//! A perturbation `psi = e^{gamma t + i k x} chi(y)` with `chi = sum c_j e^{i j y}`
//! supported on `j in m Z` solves the linearized equations when the rescaled
//! coefficients `d_j = c_j (j^2 + k^2 - m^2)` obey the three-term recurrence
//! `d_{j+m} = a_j d_j + d_{j-m}`. Ratios of successive `d_j` are continued
//! fractions in the `a_j`, and the growth rate solves `2 rho_m(gamma) = a_0(gamma)`.

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::fields::{FieldError, Grid2D, SpectralField2D, VectorField2D};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StabilityError {
    #[error("equilibrium wavenumber m = {0} must be at least 2")]
    InvalidWavenumber(u32),
    #[error("amplitude U0 = {0} must be positive and finite")]
    InvalidAmplitude(f64),
    #[error("perturbation wavenumber k = {k} outside 1..={max}")]
    KOutOfRange { k: u32, max: u32 },
    #[error("growth rate gamma = {0} must be positive and finite")]
    InvalidGrowthRate(f64),
    #[error("continued-fraction depth {0} is below 8")]
    DepthTooSmall(usize),
    #[error("vanishing denominator j^2 + k^2 - m^2 at j = {0}")]
    VanishingDenominator(i64),
    #[error("continued fraction did not converge at gamma = {gamma} (last change {change:e} at depth {depth})")]
    NonConvergence { gamma: f64, depth: usize, change: f64 },
    #[error("k = {k} is not below the cutoff {cutoff}; no bracket for the growth rate")]
    NotProvablyUnstable { k: u32, cutoff: f64 },
    #[error("no sign change of the dispersion residual on [{lo}, {hi}] (values {r_lo:e}, {r_hi:e})")]
    NoSignChange { lo: f64, hi: f64, r_lo: f64, r_hi: f64 },
    #[error("dispersion residual changes sign {0} times in the bracket")]
    MultipleRoots(usize),
    #[error("bisection stalled with residual {0:e} above tolerance")]
    ToleranceNotMet(f64),
    #[error("truncation J = {j_max} too small: |c_J| / max|c| = {ratio:e}")]
    TruncationTooSmall { j_max: i64, ratio: f64 },
    #[error("truncation J = {j_max} must be a positive multiple of m no smaller than 16 m")]
    InvalidTruncation { j_max: i64 },
    #[error("normalization aleph = {0} must be nonnegative and finite")]
    InvalidNormalization(f64),
    #[error("grid {nx}x{ny} does not resolve the mode (needs nx >= {need_x}, ny >= {need_y})")]
    UnderResolved { nx: usize, ny: usize, need_x: usize, need_y: usize },
    #[error(transparent)]
    Field(#[from] FieldError),
}

pub type Result<T> = std::result::Result<T, StabilityError>;

/// Sinusoidal shear equilibrium `(U0 sin(m y), 0)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquilibriumParams {
    m: u32,
    u0: f64,
    lattice_condition: bool,
}

impl EquilibriumParams {
    pub fn new(m: u32, u0: f64) -> Result<Self> {
        if m < 2 {
            return Err(StabilityError::InvalidWavenumber(m));
        }
        if !(u0.is_finite() && u0 > 0.0) {
            return Err(StabilityError::InvalidAmplitude(u0));
        }
        Ok(Self {
            m,
            u0,
            lattice_condition: !is_sum_of_two_squares(m),
        })
    }

    /// Amplitude chosen so that the flow has unit L² norm.
    pub fn normalized(m: u32) -> Result<Self> {
        Self::new(m, unit_amplitude())
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    /// True when `m^2` is not a sum of two nonzero squares.
    pub fn satisfies_lattice_condition(&self) -> bool {
        self.lattice_condition
    }

    pub fn with_amplitude(&self, u0: f64) -> Result<Self> {
        Self::new(self.m, u0)
    }

    pub fn l2_norm(&self) -> f64 {
        PI * 2f64.sqrt() * self.u0
    }

    pub fn velocity(&self, grid: Grid2D) -> VectorField2D {
        let mut ux = SpectralField2D::zeros(grid);
        ux.set_mode(0, self.m as i64, Complex64::new(0.0, -0.5 * self.u0));
        VectorField2D {
            ux,
            uy: SpectralField2D::zeros(grid),
        }
    }

    /// Vorticity `-U0 m cos(m y)`.
    pub fn vorticity(&self, grid: Grid2D) -> SpectralField2D {
        let mut w = SpectralField2D::zeros(grid);
        w.set_mode(0, self.m as i64, Complex64::new(-0.5 * self.u0 * self.m as f64, 0.0));
        w
    }
}

/// `(2 pi^2)^{-1/2}`, the amplitude giving a unit-norm shear flow.
pub fn unit_amplitude() -> f64 {
    1.0 / (2.0 * PI * PI).sqrt()
}

fn is_sum_of_two_squares(m: u32) -> bool {
    let m2 = (m as u64) * (m as u64);
    (1..m as u64).any(|a| {
        let b2 = m2 - a * a;
        let b = (b2 as f64).sqrt().round() as u64;
        b > 0 && b * b == b2
    })
}

/// `k_cutoff / m`.
pub fn k_cutoff_ratio() -> f64 {
    ((177f64.sqrt() - 9.0) / 6.0).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthBounds {
    pub gamma_l: f64,
    pub gamma_u: f64,
    pub k_cutoff: f64,
}

impl GrowthBounds {
    pub fn provably_unstable(&self) -> bool {
        self.gamma_l > 0.0
    }
}

fn check_k(params: &EquilibriumParams, k: u32) -> Result<()> {
    if k == 0 || k >= params.m {
        return Err(StabilityError::KOutOfRange { k, max: params.m - 1 });
    }
    Ok(())
}

/// Closed-form lower and upper growth-rate bounds.
pub fn growth_bounds(params: &EquilibriumParams, k: u32) -> Result<GrowthBounds> {
    check_k(params, k)?;
    Ok(closed_form_bounds(params, k as f64))
}

/// The bound formulas at a real wavenumber `k`; the lower bound is clamped to zero
/// once its radicand stops being positive.
pub fn closed_form_bounds(params: &EquilibriumParams, k: f64) -> GrowthBounds {
    let m2 = (params.m as f64).powi(2);
    let k2 = k * k;
    let uk = params.u0 * k;
    let gamma_u = uk * (0.5 * (m2 - k2) / (m2 + k2)).sqrt();
    let numerator = 8.0 * m2 * m2 - 9.0 * m2 * k2 - 3.0 * k2 * k2;
    let gamma_l = if numerator > 1e-13 * m2 * m2 {
        uk * (0.5 * numerator / ((m2 + k2) * (8.0 * m2 + 2.0 * k2))).sqrt()
    } else {
        0.0
    };
    GrowthBounds {
        gamma_l,
        gamma_u,
        k_cutoff: k_cutoff_ratio() * params.m as f64,
    }
}

/// Recurrence coefficient `a_j = (2 gamma / (k U0)) (j^2 + k^2) / (j^2 + k^2 - m^2)`.
pub fn coeff_a(j: i64, gamma: f64, params: &EquilibriumParams, k: u32) -> Result<f64> {
    let j2 = (j as f64).powi(2);
    let k2 = (k as f64).powi(2);
    let den = j2 + k2 - (params.m as f64).powi(2);
    if den == 0.0 {
        return Err(StabilityError::VanishingDenominator(j));
    }
    Ok(2.0 * gamma / (k as f64 * params.u0) * (j2 + k2) / den)
}

/// Limit of `rho_{pm}` as `p` grows: the root of `rho^2 - a rho - 1 = 0` in `(-1, 0)`.
pub fn rho_infinity(gamma: f64, params: &EquilibriumParams, k: u32) -> f64 {
    let s = gamma / (k as f64 * params.u0);
    // Written as -1 / (s + sqrt(1 + s^2)) to avoid cancellation for large s.
    -1.0 / (s + (1.0 + s * s).sqrt())
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(StabilityError::InvalidGrowthRate(gamma));
    }
    Ok(())
}

/// `rho_{pm} = d_{pm} / d_{(p-1)m}`, truncated after `depth` levels and closed with `tail`.
pub fn continued_fraction_rho(
    p: u32,
    gamma: f64,
    params: &EquilibriumParams,
    k: u32,
    depth: usize,
    tail: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    if depth < 8 {
        return Err(StabilityError::DepthTooSmall(depth));
    }
    let m = params.m as i64;
    let mut r = tail;
    for level in (p as i64..p as i64 + depth as i64).rev() {
        r = -1.0 / (coeff_a(level * m, gamma, params, k)? - r);
    }
    Ok(r)
}

/// `rho~_{-pm} = d_{-(p+1)m} / d_{-pm}`, evaluated along the negative indices and
/// closed with the tail `-rho_inf`.
pub fn continued_fraction_rho_tilde(
    p: u32,
    gamma: f64,
    params: &EquilibriumParams,
    k: u32,
    depth: usize,
    tail: f64,
) -> Result<f64> {
    check_gamma(gamma)?;
    if depth < 8 {
        return Err(StabilityError::DepthTooSmall(depth));
    }
    let m = params.m as i64;
    let mut r = tail;
    for level in (p as i64 + 1..p as i64 + 1 + depth as i64).rev() {
        r = 1.0 / (coeff_a(-level * m, gamma, params, k)? + r);
    }
    Ok(r)
}

const BASE_DEPTH: usize = 64;
const MAX_DEPTH: usize = 1 << 17;
const CF_TOL: f64 = 1e-15;

fn converge(gamma: f64, mut eval: impl FnMut(usize) -> Result<f64>) -> Result<f64> {
    let mut depth = BASE_DEPTH;
    let mut prev = eval(depth)?;
    let mut prev_change = f64::INFINITY;
    loop {
        depth *= 2;
        let next = eval(depth)?;
        let change = (next - prev).abs();
        if change <= CF_TOL {
            return Ok(next);
        }
        if depth >= MAX_DEPTH || change >= prev_change {
            return Err(StabilityError::NonConvergence { gamma, depth, change });
        }
        prev = next;
        prev_change = change;
    }
}

/// `rho_{pm}` with depth doubled from 64 until successive values agree to 1e-15.
pub fn converged_rho(p: u32, gamma: f64, params: &EquilibriumParams, k: u32) -> Result<f64> {
    let tail = rho_infinity(gamma, params, k);
    converge(gamma, |d| continued_fraction_rho(p, gamma, params, k, d, tail))
}

pub fn converged_rho_tilde(p: u32, gamma: f64, params: &EquilibriumParams, k: u32) -> Result<f64> {
    let tail = -rho_infinity(gamma, params, k);
    converge(gamma, |d| continued_fraction_rho_tilde(p, gamma, params, k, d, tail))
}

/// Dispersion residual `-rho_m(gamma) + a_0(gamma) / 2`; positive below the root.
pub fn fixed_point_residual(gamma: f64, params: &EquilibriumParams, k: u32) -> Result<f64> {
    let rho_m = converged_rho(1, gamma, params, k)?;
    Ok(-rho_m + 0.5 * coeff_a(0, gamma, params, k)?)
}

/// The `j = 0` relation `rho_m - a_0 - rho~_0` with both branches evaluated independently.
pub fn two_branch_residual(gamma: f64, params: &EquilibriumParams, k: u32) -> Result<f64> {
    let rho_m = converged_rho(1, gamma, params, k)?;
    let rho_t0 = converged_rho_tilde(0, gamma, params, k)?;
    Ok(rho_m - coeff_a(0, gamma, params, k)? - rho_t0)
}

const BISECTION_CAP: usize = 200;
const SCAN_POINTS: usize = 32;

fn count_sign_changes(values: &[f64]) -> usize {
    values.windows(2).filter(|w| (w[0] > 0.0) != (w[1] > 0.0)).count()
}

fn bisect(params: &EquilibriumParams, k: u32, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64> {
    let mut best = (f64::INFINITY, 0.5 * (lo + hi));
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        let r = fixed_point_residual(mid, params, k)?;
        if r.abs() < best.0 {
            best = (r.abs(), mid);
        }
        if r == 0.0 || (r.abs() <= tol && hi - lo <= 4.0 * f64::EPSILON * mid) {
            return Ok(mid);
        }
        if r > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 2.0 * f64::EPSILON * mid {
            break;
        }
    }
    if best.0 <= tol {
        Ok(best.1)
    } else {
        Err(StabilityError::ToleranceNotMet(best.0))
    }
}

fn scan_bracket(params: &EquilibriumParams, k: u32, lo: f64, hi: f64) -> Result<Vec<f64>> {
    (0..=SCAN_POINTS)
        .map(|i| {
            let g = lo + (hi - lo) * i as f64 / SCAN_POINTS as f64;
            fixed_point_residual(g, params, k)
        })
        .collect()
}

/// Growth rate by bisection on `[gamma_l (1 - 1e-6), gamma_u (1 + 1e-6)]`.
pub fn solve_growth_rate(params: &EquilibriumParams, k: u32, tol: f64) -> Result<f64> {
    let b = growth_bounds(params, k)?;
    if !b.provably_unstable() {
        return Err(StabilityError::NotProvablyUnstable { k, cutoff: b.k_cutoff });
    }
    let lo = b.gamma_l * (1.0 - 1e-6);
    let hi = b.gamma_u * (1.0 + 1e-6);
    let scan = scan_bracket(params, k, lo, hi)?;
    let (r_lo, r_hi) = (scan[0], scan[SCAN_POINTS]);
    if !(r_lo > 0.0 && r_hi < 0.0) {
        return Err(StabilityError::NoSignChange { lo, hi, r_lo, r_hi });
    }
    let changes = count_sign_changes(&scan);
    if changes != 1 {
        return Err(StabilityError::MultipleRoots(changes));
    }
    bisect(params, k, lo, hi, tol)
}

/// Searches `(0, gamma_u]` for a root of the dispersion residual for any `k`,
/// including those with no provable bracket. Returns `None` when the residual
/// keeps one sign on the scan.
pub fn search_growth_rate(params: &EquilibriumParams, k: u32, tol: f64) -> Result<Option<f64>> {
    let b = growth_bounds(params, k)?;
    if b.provably_unstable() {
        return solve_growth_rate(params, k, tol).map(Some);
    }
    let hi = b.gamma_u * (1.0 + 1e-6);
    let lo = hi / SCAN_POINTS as f64;
    let scan = scan_bracket(params, k, lo, hi)?;
    match count_sign_changes(&scan) {
        0 => Ok(None),
        1 => {
            let i = scan.windows(2).position(|w| (w[0] > 0.0) != (w[1] > 0.0)).unwrap_or(0);
            let step = (hi - lo) / SCAN_POINTS as f64;
            let (a, c) = (lo + step * i as f64, lo + step * (i + 1) as f64);
            if scan[i] > 0.0 {
                bisect(params, k, a, c, tol).map(Some)
            } else {
                Err(StabilityError::NoSignChange { lo: a, hi: c, r_lo: scan[i], r_hi: scan[i + 1] })
            }
        }
        n => Err(StabilityError::MultipleRoots(n)),
    }
}

/// One row of a growth-rate table.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GrowthRow {
    pub k: u32,
    pub bounds: GrowthBounds,
    pub gamma_root: Option<f64>,
}

/// Bounds and roots for `k_min..=k_max`, computed in parallel.
pub fn growth_table(params: &EquilibriumParams, k_min: u32, k_max: u32, tol: f64) -> Result<Vec<GrowthRow>> {
    check_k(params, k_min)?;
    check_k(params, k_max)?;
    (k_min..=k_max)
        .into_par_iter()
        .map(|k| {
            Ok(GrowthRow {
                k,
                bounds: growth_bounds(params, k)?,
                gamma_root: search_growth_rate(params, k, tol)?,
            })
        })
        .collect()
}

/// Unstable mode of the shear flow: coefficients on `j in m Z`, `|j| <= J`.
#[derive(Clone, Debug, PartialEq)]
pub struct EigenMode {
    params: EquilibriumParams,
    k: u32,
    gamma: f64,
    bounds: GrowthBounds,
    j_max: i64,
    c: Vec<f64>,
    b: Vec<f64>,
    aleph: f64,
    q: f64,
}

impl EigenMode {
    pub fn params(&self) -> &EquilibriumParams {
        &self.params
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn bounds(&self) -> GrowthBounds {
        self.bounds
    }

    pub fn j_max(&self) -> i64 {
        self.j_max
    }

    pub fn aleph(&self) -> f64 {
        self.aleph
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    fn levels(&self) -> i64 {
        self.j_max / self.params.m as i64
    }

    fn slot(&self, j: i64) -> Option<usize> {
        let m = self.params.m as i64;
        if j % m != 0 || j.abs() > self.j_max {
            return None;
        }
        Some((j / m + self.levels()) as usize)
    }

    /// Wavenumbers carrying coefficients, ascending.
    pub fn support(&self) -> Vec<i64> {
        let m = self.params.m as i64;
        (-self.levels()..=self.levels()).map(|p| p * m).collect()
    }

    pub fn c(&self, j: i64) -> Complex64 {
        Complex64::new(self.slot(j).map_or(0.0, |s| self.c[s]), 0.0)
    }

    pub fn b(&self, j: i64) -> Complex64 {
        Complex64::new(self.slot(j).map_or(0.0, |s| self.b[s]), 0.0)
    }

    /// Largest interior residual of
    /// `(2 gamma / (k U0)) (j^2+k^2) c_j + (k^2-m^2+(j-m)^2) c_{j-m} - (k^2-m^2+(j+m)^2) c_{j+m}`,
    /// relative to `max |c|`.
    pub fn recurrence_residual(&self) -> f64 {
        let m = self.params.m as i64;
        let k2 = (self.k as f64).powi(2);
        let m2 = (m as f64).powi(2);
        let s = 2.0 * self.gamma / (self.k as f64 * self.params.u0);
        let cmax = self.c.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if cmax == 0.0 {
            return 0.0;
        }
        let c = |j: i64| self.c(j).re;
        let mut worst = 0.0_f64;
        for j in self.support() {
            if j.abs() >= self.j_max {
                continue;
            }
            let jf = j as f64;
            let r = s * (jf * jf + k2) * c(j) + (k2 - m2 + (jf - m as f64).powi(2)) * c(j - m)
                - (k2 - m2 + (jf + m as f64).powi(2)) * c(j + m);
            worst = worst.max(r.abs());
        }
        worst / cmax
    }

    /// Successive ratios `|c_{(p+1)m} / c_{pm}|` for `p >= 0`.
    pub fn decay_ratios(&self) -> Vec<f64> {
        let m = self.params.m as i64;
        (0..self.levels())
            .map(|p| (self.c((p + 1) * m).re / self.c(p * m).re).abs())
            .collect()
    }

    /// Copy with every coefficient multiplied by `factor`, so `aleph` scales too.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.c.iter_mut().for_each(|v| *v *= factor);
        out.b.iter_mut().for_each(|v| *v *= factor);
        out.aleph *= factor.abs();
        out
    }

    fn check_grid(&self, grid: Grid2D) -> Result<()> {
        let need_x = 4 * self.k as usize;
        let need_y = 4 * self.j_max as usize;
        if grid.nx() < need_x || grid.ny() < need_y {
            return Err(StabilityError::UnderResolved {
                nx: grid.nx(),
                ny: grid.ny(),
                need_x,
                need_y,
            });
        }
        Ok(())
    }

    /// Real velocity and pressure of `eps * Re(mode)` at time `t`.
    pub fn synthesize(&self, grid: Grid2D, t: f64, eps: f64) -> Result<(VectorField2D, SpectralField2D)> {
        self.check_grid(grid)?;
        let growth = eps * (self.gamma * t).exp();
        let kx = self.k as i64;
        let kf = self.k as f64;
        let mut ux = SpectralField2D::zeros(grid);
        let mut uy = SpectralField2D::zeros(grid);
        let mut p = SpectralField2D::zeros(grid);
        for j in self.support() {
            let c = 0.5 * growth * self.c(j).re;
            let b = 0.5 * growth * self.b(j).re;
            ux.set_mode(kx, j, Complex64::new(0.0, -(j as f64) * c));
            uy.set_mode(kx, j, Complex64::new(0.0, kf * c));
            p.set_mode(kx, j, Complex64::new(b, 0.0));
        }
        Ok((VectorField2D { ux, uy }, p))
    }
}

/// L² norms of the real velocity and pressure built from unscaled `c`, `b`.
fn real_field_norms(k: u32, support: &[i64], c: &[f64], b: &[f64]) -> (f64, f64) {
    let k2 = (k as f64).powi(2);
    let mut v = 0.0;
    let mut p = 0.0;
    for ((j, cj), bj) in support.iter().zip(c).zip(b) {
        v += 0.5 * ((*j as f64).powi(2) + k2) * cj * cj;
        p += 0.5 * bj * bj;
    }
    (2.0 * PI * v.sqrt(), 2.0 * PI * p.sqrt())
}

/// Pressure coefficients `b_j = -U0 m k^2 / (j^2 + k^2) (c_{j-m} + c_{j+m})`.
fn pressure_coefficients(params: &EquilibriumParams, k: u32, support: &[i64], c: &[f64]) -> Vec<f64> {
    let m = params.m as f64;
    let k2 = (k as f64).powi(2);
    let n = c.len();
    (0..n)
        .map(|i| {
            let lower = if i > 0 { c[i - 1] } else { 0.0 };
            let upper = if i + 1 < n { c[i + 1] } else { 0.0 };
            let j = support[i] as f64;
            -params.u0 * m * k2 / (j * j + k2) * (lower + upper)
        })
        .collect()
}

/// Builds the normalized eigenmode at the root of the dispersion relation.
pub fn build_eigenmode(params: &EquilibriumParams, k: u32, j_max: i64, aleph: f64) -> Result<EigenMode> {
    let m = params.m as i64;
    if j_max <= 0 || j_max % m != 0 || j_max < 16 * m {
        return Err(StabilityError::InvalidTruncation { j_max });
    }
    if !(aleph.is_finite() && aleph >= 0.0) {
        return Err(StabilityError::InvalidNormalization(aleph));
    }
    let bounds = growth_bounds(params, k)?;
    let gamma = solve_growth_rate(params, k, 1e-13)?;
    let levels = (j_max / m) as usize;

    let mut d_pos = vec![1.0; levels + 1];
    for p in 1..=levels {
        d_pos[p] = d_pos[p - 1] * converged_rho(p as u32, gamma, params, k)?;
    }
    let mut d_neg = vec![1.0; levels + 1];
    for p in 1..=levels {
        d_neg[p] = d_neg[p - 1] * converged_rho_tilde((p - 1) as u32, gamma, params, k)?;
    }

    let support: Vec<i64> = (-(levels as i64)..=levels as i64).map(|p| p * m).collect();
    let k2 = (k as f64).powi(2);
    let m2 = (m as f64).powi(2);
    let c_raw: Vec<f64> = support
        .iter()
        .map(|&j| {
            let p = (j / m).unsigned_abs() as usize;
            let d = if j >= 0 { d_pos[p] } else { d_neg[p] };
            d / ((j as f64).powi(2) + k2 - m2)
        })
        .collect();

    let cmax = c_raw.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let edge = c_raw[0].abs().max(c_raw[c_raw.len() - 1].abs());
    if edge / cmax > 1e-10 {
        return Err(StabilityError::TruncationTooSmall { j_max, ratio: edge / cmax });
    }

    let b_raw = pressure_coefficients(params, k, &support, &c_raw);
    let (v_norm, p_norm) = real_field_norms(k, &support, &c_raw, &b_raw);
    let q = p_norm / v_norm;
    let scale = aleph / v_norm;
    Ok(EigenMode {
        params: *params,
        k,
        gamma,
        bounds,
        j_max,
        c: c_raw.iter().map(|v| v * scale).collect(),
        b: b_raw.iter().map(|v| v * scale).collect(),
        aleph,
        q,
    })
}

/// Doubles `J` from `32 m` until the truncation check passes.
pub fn build_eigenmode_adaptive(params: &EquilibriumParams, k: u32, aleph: f64) -> Result<EigenMode> {
    let mut j_max = 32 * params.m as i64;
    loop {
        match build_eigenmode(params, k, j_max, aleph) {
            Err(StabilityError::TruncationTooSmall { .. }) if j_max < 4096 * params.m as i64 => j_max *= 2,
            other => return other,
        }
    }
}

/// `eps * Re(mode)` sampled at time `t`.
pub fn synthesize_perturbation(
    mode: &EigenMode,
    grid: Grid2D,
    t: f64,
    eps: f64,
) -> Result<(VectorField2D, SpectralField2D)> {
    mode.synthesize(grid, t, eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(m: u32, u0: f64) -> EquilibriumParams {
        EquilibriumParams::new(m, u0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert!(EquilibriumParams::new(1, 1.0).is_err());
        assert!(EquilibriumParams::new(2, 0.0).is_err());
        assert!(EquilibriumParams::new(2, f64::NAN).is_err());
        assert!(p(2, 1.0).satisfies_lattice_condition());
        assert!(!p(5, 1.0).satisfies_lattice_condition());
        assert!(!p(10, 1.0).satisfies_lattice_condition());
        assert!(p(7, 1.0).satisfies_lattice_condition());
    }

    #[test]
    fn a_coefficient_values() {
        let e = p(2, 1.0);
        assert!((coeff_a(2, 0.5, &e, 1).unwrap() - 5.0).abs() < 1e-15);
        assert_eq!(coeff_a(2, 0.5, &e, 1).unwrap(), coeff_a(-2, 0.5, &e, 1).unwrap());
        for j in [-6, -2, 0, 4] {
            assert_eq!(coeff_a(j, 0.0, &e, 1).unwrap(), 0.0);
        }
        let e3 = p(5, 1.0);
        assert_eq!(coeff_a(3, 1.0, &e3, 4), Err(StabilityError::VanishingDenominator(3)));
    }

    #[test]
    fn closed_form_values() {
        let b = growth_bounds(&p(2, 1.0), 1).unwrap();
        assert!((b.gamma_u - 0.3f64.sqrt()).abs() < 1e-15);
        assert!((b.gamma_l - (89.0f64 / 340.0).sqrt()).abs() < 1e-15);
        let b81 = growth_bounds(&p(81, 1.0), 1).unwrap();
        assert!((b81.k_cutoff - 68.6).abs() < 0.1);
        assert!(growth_bounds(&p(2, 1.0), 2).is_err());
        assert!(growth_bounds(&p(2, 1.0), 0).is_err());
    }

    #[test]
    fn lower_bound_vanishes_at_cutoff() {
        let e = p(81, 1.0);
        let at_cutoff = closed_form_bounds(&e, k_cutoff_ratio() * 81.0);
        assert_eq!(at_cutoff.gamma_l, 0.0);
        assert!(at_cutoff.gamma_u > 0.0);
        assert!(growth_bounds(&e, 68).unwrap().gamma_l > 0.0);
        assert_eq!(growth_bounds(&e, 69).unwrap().gamma_l, 0.0);
    }

    #[test]
    fn rho_in_unit_interval() {
        let e = p(3, 1.0);
        for &g in &[1e-3, 0.1, 0.7, 3.0, 40.0] {
            for k in 1..3 {
                let r = converged_rho(1, g, &e, k).unwrap();
                assert!(r > -1.0 && r < 0.0, "rho = {r} at gamma = {g}");
                let ri = rho_infinity(g, &e, k);
                assert!(ri > -1.0 && ri < 0.0);
            }
        }
    }

    #[test]
    fn tail_is_fixed_point_of_limit_recursion() {
        let e = p(2, 1.0);
        let g = 0.4;
        let ri = rho_infinity(g, &e, 1);
        let a_inf = 2.0 * g;
        assert!((ri - (-1.0 / (a_inf - ri))).abs() < 1e-15);
    }

    #[test]
    fn depth_validation() {
        let e = p(2, 1.0);
        assert_eq!(
            continued_fraction_rho(1, 0.5, &e, 1, 4, -0.5),
            Err(StabilityError::DepthTooSmall(4))
        );
        assert!(continued_fraction_rho(1, 0.0, &e, 1, 16, -0.5).is_err());
    }

    #[test]
    fn branches_are_mirror_images() {
        let e = p(3, 1.3);
        for &g in &[0.2, 0.8] {
            for q in 0..5 {
                let t = converged_rho_tilde(q, g, &e, 2).unwrap();
                let r = converged_rho(q + 1, g, &e, 2).unwrap();
                assert!((t + r).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn residual_signs_bracket_the_root() {
        let e = p(2, 1.0);
        let b = growth_bounds(&e, 1).unwrap();
        assert!(fixed_point_residual(b.gamma_l, &e, 1).unwrap() > 0.0);
        assert!(fixed_point_residual(b.gamma_u, &e, 1).unwrap() < 0.0);
    }

    #[test]
    fn root_for_m2_k1() {
        let e = p(2, 1.0);
        let g = solve_growth_rate(&e, 1, 1e-12).unwrap();
        assert!((g - 0.5223).abs() < 1e-3);
        assert!(fixed_point_residual(g, &e, 1).unwrap().abs() <= 1e-12);
        assert!(two_branch_residual(g, &e, 1).unwrap().abs() <= 1e-11);
    }

    #[test]
    fn stable_k_is_rejected_by_bracketed_solver() {
        let e = p(7, 1.0);
        assert!(matches!(
            solve_growth_rate(&e, 6, 1e-12),
            Err(StabilityError::NotProvablyUnstable { .. })
        ));
        let g = search_growth_rate(&e, 6, 1e-12).unwrap().unwrap();
        assert!((g - 1.245).abs() < 1e-2);
    }

    #[test]
    fn eigenmode_basic_properties() {
        let e = p(2, 1.0);
        let mode = build_eigenmode(&e, 1, 64, 1.0).unwrap();
        assert!(mode.recurrence_residual() <= 1e-10);
        assert!(mode.decay_ratios().iter().all(|&r| r > 0.0 && r < 1.0));
        assert_eq!(mode.c(1), Complex64::new(0.0, 0.0));
        assert_eq!(mode.c(66), Complex64::new(0.0, 0.0));
        for j in [2, 4, 10] {
            let s = if (j / 2) % 2 == 0 { 1.0 } else { -1.0 };
            assert!((mode.c(-j).re - s * mode.c(j).re).abs() < 1e-14 * mode.c(0).re.abs());
        }
        assert!(mode.q() > 0.0);
        assert!(matches!(
            build_eigenmode(&e, 1, 64, -1.0),
            Err(StabilityError::InvalidNormalization(_))
        ));
        assert!(matches!(build_eigenmode(&e, 1, 30, 1.0), Err(StabilityError::InvalidTruncation { .. })));
    }

    #[test]
    fn synthesized_norm_matches_aleph() {
        let e = p(2, unit_amplitude());
        let mode = build_eigenmode(&e, 1, 64, 1.0).unwrap();
        let g = Grid2D::new(16, 256).unwrap();
        let (v, pr) = mode.synthesize(g, 0.0, 1.0).unwrap();
        assert!((v.l2_norm() - 1.0).abs() < 1e-12);
        assert!((pr.l2_norm() - mode.q()).abs() < 1e-12 * mode.q());
        assert!(v.divergence_defect() <= 1e-15);
        let (v1, _) = mode.synthesize(g, 1.5, 1.0).unwrap();
        let ratio = v1.l2_norm() / v.l2_norm();
        assert!((ratio / (1.5 * mode.gamma()).exp() - 1.0).abs() < 1e-12);
        let (z, zp) = mode.synthesize(g, 0.7, 0.0).unwrap();
        assert_eq!(z.l2_norm(), 0.0);
        assert_eq!(zp.l2_norm(), 0.0);
        assert!(mode.synthesize(Grid2D::new(16, 128).unwrap(), 0.0, 1.0).is_err());
    }
}
