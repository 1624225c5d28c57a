//! Closed-form bound machinery: distances between pure states, copy-count
//! lower bounds, the overlap curves `f`, `g`, `h`, `H~`, `H`, the minimum
//! time `t*`, envelope constants for the linearization error, the
//! comparison-ODE check and history-state bounds.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::fields::{lp_norm_samples, Grid2D, Norm, SpectralField2D, VectorField2D};
use crate::stability::{growth_bounds, EigenMode, EquilibriumParams, StabilityError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("state vectors have different dimensions ({0} vs {1})")]
    DimensionMismatch(usize, usize),
    #[error("state vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("copy bound is vacuous: delta = {delta} must be below epsf / 2 = {half}")]
    VacuousCopyBound { delta: f64, half: f64 },
    #[error("eps0 = {0} must be positive")]
    InvalidInitialDistance(f64),
    #[error("eps = {0} must lie in (0, 1)")]
    InvalidEps(f64),
    #[error("invalid curve parameters: {0}")]
    InvalidParams(String),
    #[error("t = {t} outside the window [0, {t_max}]")]
    OutsideWindow { t: f64, t_max: f64 },
    #[error("eps = {eps} violates the minimum-time condition eps < {limit:e}")]
    ValidityViolated { eps: f64, limit: f64 },
    #[error("minimum time t* = {t_star} does not precede the window end {t_max}")]
    MinimumOutsideWindow { t_star: f64, t_max: f64 },
    #[error("time horizon T = {0} must be positive")]
    InvalidHorizon(f64),
    #[error("degenerate mode: {0}")]
    DegenerateMode(String),
    #[error(transparent)]
    Stability(#[from] StabilityError),
}

pub type Result<T> = std::result::Result<T, BoundsError>;

/// Two unit vectors of the same dimension.
#[derive(Clone, Debug, PartialEq)]
pub struct PureStatePair {
    psi: Vec<Complex64>,
    phi: Vec<Complex64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

impl PureStatePair {
    pub fn new(psi: Vec<Complex64>, phi: Vec<Complex64>) -> Result<Self> {
        if psi.len() != phi.len() {
            return Err(BoundsError::DimensionMismatch(psi.len(), phi.len()));
        }
        for v in [&psi, &phi] {
            let n = norm(v);
            if (n - 1.0).abs() > 1e-12 {
                return Err(BoundsError::NotNormalized(n));
            }
        }
        Ok(Self { psi, phi })
    }

    /// Independent Gaussian real and imaginary parts, normalized.
    pub fn random<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Self {
        let mut draw = || -> Vec<Complex64> {
            let v: Vec<Complex64> = (0..dim)
                .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
                .collect();
            let n = norm(&v);
            v.into_iter().map(|c| c / n).collect()
        };
        let psi = draw();
        let phi = draw();
        Self { psi, phi }
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    /// `<psi|phi>`.
    pub fn inner(&self) -> Complex64 {
        self.psi.iter().zip(&self.phi).map(|(a, b)| a.conj() * b).sum()
    }

    /// `|<psi|phi>|`, clamped to `[0, 1]`.
    pub fn overlap(&self) -> f64 {
        self.inner().norm().min(1.0)
    }
}

/// `min_{|z|=1} |psi - z phi| = sqrt(2 - 2 |<psi|phi>|)`.
pub fn euclidean_distance(pair: &PureStatePair) -> f64 {
    (2.0 - 2.0 * pair.overlap()).max(0.0).sqrt()
}

/// `sqrt(1 - |<psi|phi>|^2)`.
pub fn trace_distance(pair: &PureStatePair) -> f64 {
    (1.0 - pair.overlap().powi(2)).max(0.0).sqrt()
}

/// Trace distance between `k`-fold tensor powers, `sqrt(1 - |<psi|phi>|^{2k})`.
pub fn k_copy_trace_distance(pair: &PureStatePair, k: u32) -> f64 {
    (1.0 - pair.overlap().powi(2 * k as i32)).max(0.0).sqrt()
}

/// `((epsf - 2 delta) / eps0)^2`.
pub fn copy_lower_bound(eps0: f64, epsf: f64, delta: f64) -> Result<f64> {
    if !(eps0 > 0.0) {
        return Err(BoundsError::InvalidInitialDistance(eps0));
    }
    if !(delta <= 0.5 * epsf) {
        return Err(BoundsError::VacuousCopyBound { delta, half: 0.5 * epsf });
    }
    Ok(((epsf - 2.0 * delta) / eps0).powi(2))
}

/// Final-state bound divided by the horizon.
pub fn history_state_bound(final_bound: f64, horizon: f64) -> Result<f64> {
    if !(horizon > 0.0) {
        return Err(BoundsError::InvalidHorizon(horizon));
    }
    Ok(final_bound / horizon)
}

fn overlap_curve(eps: f64, gamma: f64, t: f64) -> f64 {
    let e2 = eps * eps;
    ((1.0 - e2) / (1.0 + e2 * (2.0 * gamma * t).exp_m1())).sqrt()
}

/// `(f(t), g(t))`, the linear-overlap curves at rates `gamma_l` and `gamma_u`.
pub fn curves_f_g(eps: f64, gamma_l: f64, gamma_u: f64, t: f64) -> (f64, f64) {
    (overlap_curve(eps, gamma_l, t), overlap_curve(eps, gamma_u, t))
}

/// End of the window on which the error envelope is proven, `ln(1/eps) / gamma_u`.
pub fn window_end(eps: f64, gamma_u: f64) -> f64 {
    (1.0 / eps).ln() / gamma_u
}

/// Parameters of the overlap bound curves.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCurveParams {
    eps: f64,
    kappa: f64,
    alpha: f64,
    beta: f64,
    gamma_l: f64,
    gamma_u: f64,
    k_exp: f64,
}

impl BoundCurveParams {
    pub fn new(eps: f64, kappa: f64, alpha: f64, beta: f64, gamma_l: f64, gamma_u: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(BoundsError::InvalidEps(eps));
        }
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(BoundsError::InvalidParams(format!("kappa = {kappa} must be nonnegative")));
        }
        if !(alpha > 0.0 && beta > 0.0) {
            return Err(BoundsError::InvalidParams("alpha and beta must be positive".into()));
        }
        if !(gamma_l > 0.0 && gamma_u > gamma_l) {
            return Err(BoundsError::InvalidParams(format!(
                "need 0 < gamma_l < gamma_u (got {gamma_l}, {gamma_u})"
            )));
        }
        if !(alpha * beta > 2.0 * gamma_u) {
            return Err(BoundsError::InvalidParams(format!(
                "alpha beta = {} must exceed 2 gamma_u = {}",
                alpha * beta,
                2.0 * gamma_u
            )));
        }
        let k_exp = (alpha * beta + gamma_u) / (2.0 * gamma_l);
        if !(k_exp > 1.5) {
            return Err(BoundsError::InvalidParams(format!("K = {k_exp} must exceed 3/2")));
        }
        Ok(Self {
            eps,
            kappa,
            alpha,
            beta,
            gamma_l,
            gamma_u,
            k_exp,
        })
    }

    /// Parameters with a prescribed exponent `K`, taking `alpha = beta`.
    pub fn from_exponent(eps: f64, kappa: f64, k_exp: f64, gamma_l: f64, gamma_u: f64) -> Result<Self> {
        let ab = 2.0 * gamma_l * k_exp - gamma_u;
        if !(ab > 0.0) {
            return Err(BoundsError::InvalidParams(format!("K = {k_exp} gives alpha beta = {ab}")));
        }
        let mut p = Self::new(eps, kappa, ab.sqrt(), ab.sqrt(), gamma_l, gamma_u)?;
        p.k_exp = k_exp;
        Ok(p)
    }

    pub fn from_envelope(eps: f64, consts: &EnvelopeConstants, gamma_l: f64, gamma_u: f64) -> Result<Self> {
        Self::new(eps, consts.kappa, consts.alpha, consts.beta, gamma_l, gamma_u)
    }

    pub fn with_eps(&self, eps: f64) -> Result<Self> {
        let mut p = Self::new(eps, self.kappa, self.alpha, self.beta, self.gamma_l, self.gamma_u)?;
        p.k_exp = self.k_exp;
        Ok(p)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn gamma_l(&self) -> f64 {
        self.gamma_l
    }

    pub fn gamma_u(&self) -> f64 {
        self.gamma_u
    }

    /// `K = (alpha beta + gamma_u) / (2 gamma_l)`.
    pub fn k_exp(&self) -> f64 {
        self.k_exp
    }

    fn alpha_beta(&self) -> f64 {
        2.0 * self.gamma_l * self.k_exp - self.gamma_u
    }

    pub fn window_end(&self) -> f64 {
        window_end(self.eps, self.gamma_u)
    }

    fn check_window(&self, t: f64) -> Result<()> {
        let t_max = self.window_end();
        if !(t >= 0.0 && t <= t_max * (1.0 + 1e-12)) {
            return Err(BoundsError::OutsideWindow { t, t_max });
        }
        Ok(())
    }

    /// Error envelope `eps^2 kappa (e^{alpha beta t} - 1)`.
    pub fn eta_envelope(&self, t: f64) -> f64 {
        self.eps * self.eps * self.kappa * (self.alpha_beta() * t).exp_m1()
    }
}

/// `h(t) = 2 eps^2 kappa (e^{alpha beta t} - 1) / sqrt(1 + eps^2 (e^{2 gamma_l t} - 1))`.
pub fn curve_h(params: &BoundCurveParams, t: f64) -> Result<f64> {
    params.check_window(t)?;
    let e2 = params.eps * params.eps;
    Ok(2.0 * params.eta_envelope(t) / (1.0 + e2 * (2.0 * params.gamma_l * t).exp_m1()).sqrt())
}

/// `H~(t) = f(t) + sqrt(2) eps h(t) e^{gamma_u t}`.
pub fn curve_h_tilde(params: &BoundCurveParams, t: f64) -> Result<f64> {
    let h = curve_h(params, t)?;
    let (f, _) = curves_f_g(params.eps, params.gamma_l, params.gamma_u, t);
    Ok(f + 2f64.sqrt() * params.eps * h * (params.gamma_u * t).exp())
}

/// `1 - H~(t)`, evaluated without cancelling against 1 so that it stays
/// accurate when it is far below machine epsilon.
pub fn one_minus_h_tilde(params: &BoundCurveParams, t: f64) -> Result<f64> {
    let h = curve_h(params, t)?;
    let e2 = params.eps * params.eps;
    let x = e2 * (2.0 * params.gamma_l * t).exp_m1();
    let f = overlap_curve(params.eps, params.gamma_l, t);
    let one_minus_f = (e2 + x) / ((1.0 + x) * (1.0 + f));
    Ok(one_minus_f - 2f64.sqrt() * params.eps * h * (params.gamma_u * t).exp())
}

/// `H(t) = 1 - (eps^2/2)(e^{2 gamma_l t} - 1) + (3 eps^4/8) e^{4 gamma_l t}
/// + 2 sqrt(2) eps^3 kappa e^{(alpha beta + gamma_u) t}`.
pub fn curve_big_h(params: &BoundCurveParams, t: f64) -> Result<f64> {
    params.check_window(t)?;
    let eps = params.eps;
    let gl = params.gamma_l;
    Ok(1.0 - 0.5 * eps * eps * (2.0 * gl * t).exp_m1()
        + 3.0 / 8.0 * eps.powi(4) * (4.0 * gl * t).exp()
        + 2.0 * 2f64.sqrt() * eps.powi(3) * params.kappa * ((params.alpha_beta() + params.gamma_u) * t).exp())
}

/// Largest `eps` for which the minimum time lies inside the window,
/// `(4 sqrt(2) kappa K)^{gamma_u / (2 gamma_l (K - 1) - gamma_u)}`.
pub fn tstar_eps_limit(params: &BoundCurveParams) -> f64 {
    let k = params.k_exp;
    let den = 2.0 * params.gamma_l * (k - 1.0) - params.gamma_u;
    if den <= 0.0 || params.kappa == 0.0 {
        return 0.0;
    }
    (4.0 * 2f64.sqrt() * params.kappa * k).powf(params.gamma_u / den)
}

/// Closed-form minimum time, ignoring the validity condition.
pub fn tstar_unchecked(params: &BoundCurveParams) -> f64 {
    let k = params.k_exp;
    (1.0 / (4.0 * 2f64.sqrt() * params.eps * params.kappa * k)).ln() / (2.0 * params.gamma_l * (k - 1.0))
}

/// `t* = ln(1 / (4 sqrt(2) eps kappa K)) / (2 gamma_l (K - 1))`.
pub fn minimum_time_tstar(params: &BoundCurveParams) -> Result<f64> {
    let limit = tstar_eps_limit(params);
    if !(params.eps < limit) {
        return Err(BoundsError::ValidityViolated { eps: params.eps, limit });
    }
    let t_star = tstar_unchecked(params);
    let t_max = params.window_end();
    if !(t_star < t_max) {
        return Err(BoundsError::MinimumOutsideWindow { t_star, t_max });
    }
    Ok(t_star)
}

const GOLDEN_ITERS: usize = 200;
const SEED_SAMPLES: usize = 4096;

/// Maximum of `1 - H~` over the window: a uniform scan including `t*` seeds a
/// golden-section refinement around the best sample.
pub fn max_one_minus_h_tilde(params: &BoundCurveParams) -> Result<(f64, f64)> {
    let t_max = params.window_end();
    let objective = |t: f64| one_minus_h_tilde(params, t.clamp(0.0, t_max));
    let step = t_max / SEED_SAMPLES as f64;
    let mut best = (objective(0.0)?, 0.0);
    for i in 1..=SEED_SAMPLES {
        let t = step * i as f64;
        let v = objective(t)?;
        if v > best.0 {
            best = (v, t);
        }
    }
    let seed = tstar_unchecked(params);
    if seed.is_finite() && (0.0..=t_max).contains(&seed) {
        let v = objective(seed)?;
        if v > best.0 {
            best = (v, seed);
        }
    }
    let (mut a, mut b) = ((best.1 - step).max(0.0), (best.1 + step).min(t_max));
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (objective(c)?, objective(d)?);
    for _ in 0..GOLDEN_ITERS {
        if (b - a).abs() <= 1e-14 * t_max {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = objective(d)?;
        }
    }
    let t = 0.5 * (a + b);
    let v = objective(t)?;
    Ok(if v >= best.0 { (v, t) } else { (best.0, best.1) })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|v| (v - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingRow {
    pub eps: f64,
    pub max_one_minus_h_tilde: f64,
    pub t_at_max: f64,
    pub t_star: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScalingTable {
    pub rows: Vec<ScalingRow>,
    /// Slope of `max(1 - H~)` against `1/eps`; the largest `eps` is left out
    /// when at least three points are available.
    pub fitted_slope: Option<f64>,
}

/// Fitted slope over the rows, leaving out the largest `eps` when there are three or more.
pub fn fit_scaling_slope(rows: &[ScalingRow]) -> Option<f64> {
    let mut sorted: Vec<&ScalingRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.eps.total_cmp(&a.eps));
    let used = if sorted.len() >= 3 { &sorted[1..] } else { &sorted[..] };
    let x: Vec<f64> = used.iter().map(|r| 1.0 / r.eps).collect();
    let y: Vec<f64> = used.iter().map(|r| r.max_one_minus_h_tilde).collect();
    log_log_slope(&x, &y)
}

/// `max(1 - H~)` for each `eps`, with every `eps` required to satisfy the
/// minimum-time condition.
pub fn scaling_study(base: &BoundCurveParams, eps_list: &[f64]) -> Result<ScalingTable> {
    let mut rows = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let p = base.with_eps(eps)?;
        let t_star = minimum_time_tstar(&p)?;
        let (value, t_at_max) = max_one_minus_h_tilde(&p)?;
        rows.push(ScalingRow {
            eps,
            max_one_minus_h_tilde: value,
            t_at_max,
            t_star,
        });
    }
    let fitted_slope = fit_scaling_slope(&rows);
    Ok(ScalingTable { rows, fitted_slope })
}

/// Constants of the linearization-error envelope.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvelopeConstants {
    pub alpha: f64,
    pub beta: f64,
    pub b1: f64,
    pub b2: f64,
    pub kappa: f64,
}

impl EnvelopeConstants {
    /// `alpha^2 = max(a2, 2 gamma_u)(1 + margin)`, likewise for `beta`, and
    /// `kappa = (b1 + alpha b2 / (2 beta)) / (alpha beta - 2 gamma_u)`.
    pub fn from_estimates(a2: f64, b2_sq: f64, b1: f64, b2: f64, gamma_u: f64) -> Self {
        let alpha = (a2.max(2.0 * gamma_u) * (1.0 + ENVELOPE_MARGIN)).sqrt();
        let beta = (b2_sq.max(2.0 * gamma_u) * (1.0 + ENVELOPE_MARGIN)).sqrt();
        let kappa = (b1 + alpha * b2 / (2.0 * beta)) / (alpha * beta - 2.0 * gamma_u);
        Self { alpha, beta, b1, b2, kappa }
    }
}

pub const ENVELOPE_MARGIN: f64 = 0.01;

fn next_pow2_at_least(n: usize) -> usize {
    n.max(16).next_power_of_two()
}

/// Grid on which products of mode fields are integrated exactly.
pub fn envelope_grid(mode: &EigenMode) -> Grid2D {
    let nx = next_pow2_at_least(8 * mode.k() as usize);
    let ny = next_pow2_at_least(8 * (mode.j_max() + mode.params().m() as i64) as usize);
    Grid2D::new(nx, ny).expect("power-of-two grid")
}

fn physical(v: &VectorField2D) -> (Vec<f64>, Vec<f64>) {
    (v.ux.to_physical(), v.uy.to_physical())
}

fn grad(f: &SpectralField2D) -> (Vec<f64>, Vec<f64>) {
    (f.ddx().to_physical(), f.ddy().to_physical())
}

/// Envelope constants of the mode at `t = 0`, by quadrature on a grid that
/// resolves all products exactly.
pub fn estimate_envelope_constants(mode: &EigenMode, equil: &EquilibriumParams) -> Result<EnvelopeConstants> {
    if mode.params().m() != equil.m() || mode.params().u0() != equil.u0() {
        return Err(BoundsError::DegenerateMode("mode belongs to a different equilibrium".into()));
    }
    if !mode.aleph().is_finite() {
        return Err(BoundsError::DegenerateMode("non-finite normalization".into()));
    }
    let gamma_u = growth_bounds(equil, mode.k())?.gamma_u;
    let grid = envelope_grid(mode);
    let (v, _) = mode.synthesize(grid, 0.0, 1.0)?;
    let omega = v.uy.ddx().sub(&v.ux.ddy()).map_err(StabilityError::from)?;

    let (vx, vy) = physical(&v);
    let (vxx, vxy) = grad(&v.ux);
    let (vyx, vyy) = grad(&v.uy);
    let (wx, wy) = grad(&omega);

    let n = grid.len();
    let mut adv_x = Vec::with_capacity(n);
    let mut adv_y = Vec::with_capacity(n);
    let mut adv_w = Vec::with_capacity(n);
    let mut speed = Vec::with_capacity(n);
    let mut grad_w = Vec::with_capacity(n);
    for i in 0..n {
        adv_x.push(vx[i] * vxx[i] + vy[i] * vxy[i]);
        adv_y.push(vx[i] * vyx[i] + vy[i] * vyy[i]);
        adv_w.push(vx[i] * wx[i] + vy[i] * wy[i]);
        speed.push(vx[i].hypot(vy[i]));
        grad_w.push(wx[i].hypot(wy[i]));
    }
    let l2 = |f: &[f64]| lp_norm_samples(f, grid, Norm::L2);
    let b1 = l2(&adv_x).hypot(l2(&adv_y));
    let b2 = l2(&adv_w);
    let v_inf = lp_norm_samples(&speed, grid, Norm::Inf);
    let grad_w_inf = lp_norm_samples(&grad_w, grid, Norm::Inf);
    let grad_w0_inf = equil.u0() * (equil.m() as f64).powi(2);

    let consts = EnvelopeConstants::from_estimates(equil.u0() + v_inf, grad_w0_inf + grad_w_inf, b1, b2, gamma_u);
    if !(consts.kappa.is_finite() && consts.kappa >= 0.0) {
        return Err(BoundsError::DegenerateMode(format!("kappa = {}", consts.kappa)));
    }
    Ok(consts)
}

/// Outcome of integrating the comparison system, in units of `eps^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct ComparisonReport {
    pub times: Vec<f64>,
    pub y1: Vec<f64>,
    pub envelope: Vec<f64>,
    pub steps: usize,
    /// Smallest `envelope / y1` over samples with `y1 > 0`.
    pub min_ratio: f64,
    pub dominated: bool,
}

fn integrate_comparison(consts: &EnvelopeConstants, gamma_u: f64, t_max: f64, steps: usize, samples: usize) -> Vec<f64> {
    let a2 = consts.alpha * consts.alpha;
    let b2 = consts.beta * consts.beta;
    let f = |t: f64, y: [f64; 2]| {
        let s = (2.0 * gamma_u * t).exp();
        [a2 * y[1] + s * consts.b1, b2 * y[0] + s * consts.b2]
    };
    let dt = t_max / steps as f64;
    let every = steps / samples;
    let mut y = [0.0, 0.0];
    let mut out = Vec::with_capacity(samples + 1);
    out.push(0.0);
    for i in 0..steps {
        let t = dt * i as f64;
        let k1 = f(t, y);
        let k2 = f(t + 0.5 * dt, [y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = f(t + 0.5 * dt, [y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = f(t + dt, [y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for c in 0..2 {
            y[c] += dt / 6.0 * (k1[c] + 2.0 * (k2[c] + k3[c]) + k4[c]);
        }
        if (i + 1) % every == 0 {
            out.push(y[0]);
        }
    }
    out
}

const COMPARISON_SAMPLES: usize = 256;

/// Integrates `y' = [[0, alpha^2], [beta^2, 0]] y + e^{2 gamma_u t} (b1, b2)`,
/// `y(0) = 0`, halving the step until the samples change by less than 1e-8
/// relative, and compares `y1` with `kappa (e^{alpha beta t} - 1)`.
pub fn comparison_ode_check(consts: &EnvelopeConstants, gamma_u: f64, t_max: f64) -> Result<ComparisonReport> {
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(BoundsError::InvalidHorizon(t_max));
    }
    if !(consts.alpha * consts.beta > 2.0 * gamma_u) {
        return Err(BoundsError::InvalidParams("alpha beta must exceed 2 gamma_u".into()));
    }
    let mut steps = COMPARISON_SAMPLES * 4;
    let mut y1 = integrate_comparison(consts, gamma_u, t_max, steps, COMPARISON_SAMPLES);
    loop {
        let refined = integrate_comparison(consts, gamma_u, t_max, steps * 2, COMPARISON_SAMPLES);
        steps *= 2;
        let change = y1
            .iter()
            .zip(&refined)
            .map(|(a, b)| if *b == 0.0 { (a - b).abs() } else { ((a - b) / b).abs() })
            .fold(0.0, f64::max);
        y1 = refined;
        if change < 1e-8 || steps >= 1 << 24 {
            break;
        }
    }
    let ab = consts.alpha * consts.beta;
    let times: Vec<f64> = (0..=COMPARISON_SAMPLES)
        .map(|i| t_max * i as f64 / COMPARISON_SAMPLES as f64)
        .collect();
    let envelope: Vec<f64> = times.iter().map(|t| consts.kappa * (ab * t).exp_m1()).collect();
    let mut min_ratio = f64::INFINITY;
    let mut dominated = true;
    for (e, y) in envelope.iter().zip(&y1) {
        if *y > 0.0 {
            min_ratio = min_ratio.min(e / y);
        }
        if e < y {
            dominated = false;
        }
    }
    Ok(ComparisonReport {
        times,
        y1,
        envelope,
        steps,
        min_ratio,
        dominated,
    })
}
