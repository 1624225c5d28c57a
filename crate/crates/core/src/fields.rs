//! Grids on the 2-torus and the real line, spectral transforms, norms and the
//! spectral Poisson solve.
//!
//! Fields are stored row-major with `y` as the slow index: sample `(ix, iy)`
//! lives at `iy * nx + ix`, and the Fourier coefficient of wavenumber
//! `(jx, jy)` lives at the same slot after wrapping negative wavenumbers.
//! Coefficients are normalized so that `f(x, y) = sum c(jx, jy) e^{i(jx x + jy y)}`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("grid size {0} must be a power of two and at least 16")]
    InvalidGrid(usize),
    #[error("sample count {got} does not match grid size {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("field has zero norm")]
    ZeroNorm,
    #[error("right-hand side has nonzero mean {0:e}")]
    NonzeroMean(f64),
    #[error("invalid 1D window: {0}")]
    InvalidWindow(String),
}

pub type Result<T> = std::result::Result<T, FieldError>;

/// Uniform periodic grid on `[0, 2pi) x [0, 2pi)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid2D {
    nx: usize,
    ny: usize,
}

impl Grid2D {
    pub fn new(nx: usize, ny: usize) -> Result<Self> {
        for n in [nx, ny] {
            if n < 16 || !n.is_power_of_two() {
                return Err(FieldError::InvalidGrid(n));
            }
        }
        Ok(Self { nx, ny })
    }

    pub fn square(n: usize) -> Result<Self> {
        Self::new(n, n)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.nx as f64
    }

    pub fn dy(&self) -> f64 {
        2.0 * PI / self.ny as f64
    }

    pub fn x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx()
    }

    pub fn y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy()
    }

    /// Signed wavenumber stored in column `ix`; the Nyquist column reports `-nx/2`.
    pub fn wavenumber_x(&self, ix: usize) -> i64 {
        signed_index(ix, self.nx)
    }

    pub fn wavenumber_y(&self, iy: usize) -> i64 {
        signed_index(iy, self.ny)
    }

    pub fn is_nyquist_x(&self, ix: usize) -> bool {
        2 * ix == self.nx
    }

    pub fn is_nyquist_y(&self, iy: usize) -> bool {
        2 * iy == self.ny
    }

    /// Storage slot of wavenumber `(jx, jy)`, or `None` outside `|jx| <= nx/2, |jy| <= ny/2`.
    pub fn slot(&self, jx: i64, jy: i64) -> Option<usize> {
        let ix = wrap_index(jx, self.nx)?;
        let iy = wrap_index(jy, self.ny)?;
        Some(iy * self.nx + ix)
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn sample(&self, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            let y = self.y(iy);
            for ix in 0..self.nx {
                out.push(f(self.x(ix), y));
            }
        }
        out
    }

    /// Mask for the two-thirds dealiasing rule: keeps `|jx| <= nx/3` and `|jy| <= ny/3`.
    pub fn dealias_mask(&self) -> Vec<bool> {
        let cx = (self.nx / 3) as i64;
        let cy = (self.ny / 3) as i64;
        let mut mask = Vec::with_capacity(self.len());
        for iy in 0..self.ny {
            let jy = self.wavenumber_y(iy);
            for ix in 0..self.nx {
                let jx = self.wavenumber_x(ix);
                mask.push(jx.abs() <= cx && jy.abs() <= cy);
            }
        }
        mask
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if 2 * i >= n {
        i as i64 - n as i64
    } else {
        i as i64
    }
}

fn wrap_index(j: i64, n: usize) -> Option<usize> {
    let half = (n / 2) as i64;
    if j.abs() > half {
        return None;
    }
    Some(j.rem_euclid(n as i64) as usize)
}

/// Planned 2D complex transforms with their scratch buffers.
pub struct Fft2d {
    grid: Grid2D,
    fwd_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    transposed: Vec<Complex64>,
}

impl Fft2d {
    pub fn new(grid: Grid2D) -> Self {
        let mut planner = FftPlanner::new();
        let fwd_x = planner.plan_fft_forward(grid.nx);
        let fwd_y = planner.plan_fft_forward(grid.ny);
        let inv_x = planner.plan_fft_inverse(grid.nx);
        let inv_y = planner.plan_fft_inverse(grid.ny);
        let scratch_len = [&fwd_x, &fwd_y, &inv_x, &inv_y]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        Self {
            grid,
            fwd_x,
            fwd_y,
            inv_x,
            inv_y,
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            transposed: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    /// Samples to normalized coefficients, in place.
    pub fn forward(&mut self, data: &mut [Complex64]) {
        let (x, y) = (self.fwd_x.clone(), self.fwd_y.clone());
        self.process(data, x.as_ref(), y.as_ref());
        let norm = 1.0 / self.grid.len() as f64;
        for v in data.iter_mut() {
            *v *= norm;
        }
    }

    /// Coefficients to samples, in place.
    pub fn inverse(&mut self, data: &mut [Complex64]) {
        let (x, y) = (self.inv_x.clone(), self.inv_y.clone());
        self.process(data, x.as_ref(), y.as_ref());
    }

    fn process(&mut self, data: &mut [Complex64], fx: &dyn Fft<f64>, fy: &dyn Fft<f64>) {
        let (nx, ny) = (self.grid.nx, self.grid.ny);
        assert_eq!(data.len(), nx * ny);
        fx.process_with_scratch(data, &mut self.scratch);
        for iy in 0..ny {
            for ix in 0..nx {
                self.transposed[ix * ny + iy] = data[iy * nx + ix];
            }
        }
        fy.process_with_scratch(&mut self.transposed, &mut self.scratch);
        for ix in 0..nx {
            for iy in 0..ny {
                data[iy * nx + ix] = self.transposed[ix * ny + iy];
            }
        }
    }
}

/// Fourier coefficients of a real scalar field on the 2-torus.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField2D {
    grid: Grid2D,
    coeffs: Vec<Complex64>,
}

impl SpectralField2D {
    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            grid,
            coeffs: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    pub fn constant(grid: Grid2D, value: f64) -> Self {
        let mut f = Self::zeros(grid);
        f.coeffs[0] = Complex64::new(value, 0.0);
        f
    }

    pub fn from_coeffs(grid: Grid2D, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(FieldError::DimensionMismatch {
                expected: grid.len(),
                got: coeffs.len(),
            });
        }
        Ok(Self { grid, coeffs })
    }

    pub fn grid(&self) -> Grid2D {
        self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    /// Coefficient of wavenumber `(jx, jy)`; zero outside the stored band.
    pub fn coeff(&self, jx: i64, jy: i64) -> Complex64 {
        match self.grid.slot(jx, jy) {
            Some(s) => self.coeffs[s],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Sets `(jx, jy)` to `value` and `(-jx, -jy)` to its conjugate.
    pub fn set_mode(&mut self, jx: i64, jy: i64, value: Complex64) {
        if let Some(s) = self.grid.slot(jx, jy) {
            self.coeffs[s] = value;
        }
        if let Some(s) = self.grid.slot(-jx, -jy) {
            self.coeffs[s] = value.conj();
        }
    }

    pub fn mean(&self) -> f64 {
        self.coeffs[0].re
    }

    /// L² norm by Parseval.
    pub fn l2_norm(&self) -> f64 {
        2.0 * PI * self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// Largest `|c(j) - conj c(-j)|` over all stored modes.
    pub fn hermitian_defect(&self) -> f64 {
        let g = self.grid;
        let mut worst = 0.0_f64;
        for iy in 0..g.ny {
            let ny_partner = (g.ny - iy) % g.ny;
            for ix in 0..g.nx {
                let nx_partner = (g.nx - ix) % g.nx;
                let a = self.coeffs[iy * g.nx + ix];
                let b = self.coeffs[ny_partner * g.nx + nx_partner];
                worst = worst.max((a - b.conj()).norm());
            }
        }
        worst
    }

    /// Projects onto Hermitian-symmetric coefficients.
    pub fn symmetrize(&mut self) {
        symmetrize_coeffs(self.grid, &mut self.coeffs);
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip(other, |a, b| a - b)
    }

    fn zip(&self, other: &Self, op: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self {
            grid: self.grid,
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| op(*a, *b))
                .collect(),
        })
    }

    /// Spectral `d/dx`; the Nyquist column is zeroed.
    pub fn ddx(&self) -> Self {
        self.map_modes(|g, ix, _, c| {
            if g.is_nyquist_x(ix) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, g.wavenumber_x(ix) as f64)
            }
        })
    }

    /// Spectral `d/dy`; the Nyquist row is zeroed.
    pub fn ddy(&self) -> Self {
        self.map_modes(|g, _, iy, c| {
            if g.is_nyquist_y(iy) {
                Complex64::new(0.0, 0.0)
            } else {
                c * Complex64::new(0.0, g.wavenumber_y(iy) as f64)
            }
        })
    }

    pub fn laplacian(&self) -> Self {
        self.map_modes(|g, ix, iy, c| {
            let jx = g.wavenumber_x(ix) as f64;
            let jy = g.wavenumber_y(iy) as f64;
            c * -(jx * jx + jy * jy)
        })
    }

    /// Zeroes every mode outside the two-thirds band.
    pub fn dealiased(&self) -> Self {
        let cx = (self.grid.nx / 3) as i64;
        let cy = (self.grid.ny / 3) as i64;
        self.map_modes(|g, ix, iy, c| {
            if g.wavenumber_x(ix).abs() <= cx && g.wavenumber_y(iy).abs() <= cy {
                c
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    pub fn map_modes(&self, f: impl Fn(Grid2D, usize, usize, Complex64) -> Complex64) -> Self {
        let g = self.grid;
        let mut coeffs = Vec::with_capacity(g.len());
        for iy in 0..g.ny {
            for ix in 0..g.nx {
                coeffs.push(f(g, ix, iy, self.coeffs[iy * g.nx + ix]));
            }
        }
        Self { grid: g, coeffs }
    }

    pub fn to_physical(&self) -> Vec<f64> {
        transform_inverse(self)
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

pub(crate) fn symmetrize_coeffs(g: Grid2D, coeffs: &mut [Complex64]) {
    for iy in 0..g.ny {
        let py = (g.ny - iy) % g.ny;
        for ix in 0..g.nx {
            let px = (g.nx - ix) % g.nx;
            let a = iy * g.nx + ix;
            let b = py * g.nx + px;
            if a < b {
                let avg = 0.5 * (coeffs[a] + coeffs[b].conj());
                coeffs[a] = avg;
                coeffs[b] = avg.conj();
            } else if a == b {
                coeffs[a].im = 0.0;
            }
        }
    }
}

/// Physical samples to Hermitian-symmetric coefficients.
pub fn transform_forward(samples: &[f64], grid: Grid2D) -> Result<SpectralField2D> {
    if samples.len() != grid.len() {
        return Err(FieldError::DimensionMismatch {
            expected: grid.len(),
            got: samples.len(),
        });
    }
    let mut data: Vec<Complex64> = samples.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    Fft2d::new(grid).forward(&mut data);
    symmetrize_coeffs(grid, &mut data);
    Ok(SpectralField2D { grid, coeffs: data })
}

pub fn transform_inverse(field: &SpectralField2D) -> Vec<f64> {
    let mut data = field.coeffs.clone();
    Fft2d::new(field.grid).inverse(&mut data);
    data.into_iter().map(|c| c.re).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
    L4,
    Inf,
}

/// L^p norm of a spectral field; `L2` uses Parseval, the others collocation.
pub fn lp_norm(field: &SpectralField2D, p: Norm) -> f64 {
    match p {
        Norm::L2 => field.l2_norm(),
        _ => lp_norm_samples(&field.to_physical(), field.grid, p),
    }
}

/// L^p norm of physical samples by trapezoidal quadrature.
pub fn lp_norm_samples(samples: &[f64], grid: Grid2D, p: Norm) -> f64 {
    let area = grid.dx() * grid.dy();
    match p {
        Norm::L1 => area * samples.iter().map(|v| v.abs()).sum::<f64>(),
        Norm::L2 => (area * samples.iter().map(|v| v * v).sum::<f64>()).sqrt(),
        Norm::L4 => (area * samples.iter().map(|v| (v * v) * (v * v)).sum::<f64>()).powf(0.25),
        Norm::Inf => samples.iter().map(|v| v.abs()).fold(0.0, f64::max),
    }
}

/// A pair of scalar fields interpreted as a planar vector field.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField2D {
    pub ux: SpectralField2D,
    pub uy: SpectralField2D,
}

impl VectorField2D {
    pub fn new(ux: SpectralField2D, uy: SpectralField2D) -> Result<Self> {
        if ux.grid != uy.grid {
            return Err(FieldError::GridMismatch);
        }
        Ok(Self { ux, uy })
    }

    pub fn zeros(grid: Grid2D) -> Self {
        Self {
            ux: SpectralField2D::zeros(grid),
            uy: SpectralField2D::zeros(grid),
        }
    }

    pub fn grid(&self) -> Grid2D {
        self.ux.grid
    }

    pub fn l2_norm(&self) -> f64 {
        let s: f64 = self
            .ux
            .coeffs
            .iter()
            .chain(&self.uy.coeffs)
            .map(|c| c.norm_sqr())
            .sum();
        2.0 * PI * s.sqrt()
    }

    /// `max_j |jx ux + jy uy|` divided by the largest coefficient magnitude.
    pub fn divergence_defect(&self) -> f64 {
        let g = self.grid();
        let scale = self.ux.max_abs_coeff().max(self.uy.max_abs_coeff());
        if scale == 0.0 {
            return 0.0;
        }
        let mut worst = 0.0_f64;
        for iy in 0..g.ny {
            let jy = g.wavenumber_y(iy) as f64;
            for ix in 0..g.nx {
                let jx = g.wavenumber_x(ix) as f64;
                let s = iy * g.nx + ix;
                worst = worst.max((self.ux.coeffs[s] * jx + self.uy.coeffs[s] * jy).norm());
            }
        }
        worst / scale
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            ux: self.ux.scale(s),
            uy: self.uy.scale(s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            ux: self.ux.add(&other.ux)?,
            uy: self.uy.add(&other.uy)?,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        Ok(Self {
            ux: self.ux.sub(&other.ux)?,
            uy: self.uy.sub(&other.uy)?,
        })
    }

    /// Pointwise speed samples `|u|`.
    pub fn speed_samples(&self) -> Vec<f64> {
        let ux = self.ux.to_physical();
        let uy = self.uy.to_physical();
        ux.iter().zip(&uy).map(|(a, b)| a.hypot(*b)).collect()
    }
}

/// `int a . b` over the torus, by Parseval.
pub fn inner_product(a: &VectorField2D, b: &VectorField2D) -> Result<f64> {
    if a.grid() != b.grid() {
        return Err(FieldError::GridMismatch);
    }
    let dot = |p: &SpectralField2D, q: &SpectralField2D| -> f64 {
        p.coeffs.iter().zip(&q.coeffs).map(|(x, y)| (x * y.conj()).re).sum()
    };
    Ok(4.0 * PI * PI * (dot(&a.ux, &b.ux) + dot(&a.uy, &b.uy)))
}

/// Normalized inner product `int a . b / (|a| |b|)`.
pub fn inner_product_normalized(a: &VectorField2D, b: &VectorField2D) -> Result<f64> {
    let na = a.l2_norm();
    let nb = b.l2_norm();
    if na == 0.0 || nb == 0.0 {
        return Err(FieldError::ZeroNorm);
    }
    Ok((inner_product(a, b)? / (na * nb)).clamp(-1.0, 1.0))
}

/// Solves `lap phi = rhs` with the mean value of `phi` set to `gauge`.
pub fn poisson_solve(rhs: &SpectralField2D, gauge: f64) -> Result<SpectralField2D> {
    let c0 = rhs.coeffs[0];
    let tol = 1e-12 * rhs.max_abs_coeff().max(1.0);
    if c0.norm() > tol {
        return Err(FieldError::NonzeroMean(c0.re));
    }
    let mut out = rhs.map_modes(|g, ix, iy, c| {
        let jx = g.wavenumber_x(ix) as f64;
        let jy = g.wavenumber_y(iy) as f64;
        let k2 = jx * jx + jy * jy;
        if k2 == 0.0 {
            Complex64::new(0.0, 0.0)
        } else {
            -c / k2
        }
    });
    out.coeffs[0] = Complex64::new(gauge, 0.0);
    Ok(out)
}

/// Uniform periodic window on the real line, `x_i = x_min + i (x_max - x_min) / n`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(FieldError::InvalidWindow(format!(
                "x_max must exceed x_min (got [{x_min}, {x_max}])"
            )));
        }
        if n < 64 {
            return Err(FieldError::InvalidWindow(format!("n = {n} is below 64")));
        }
        Ok(Self { x_min, x_max, n })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn dx(&self) -> f64 {
        self.length() / self.n as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.x(i)).collect()
    }

    /// Angular wavenumber of FFT bin `i`.
    pub fn wavenumber(&self, i: usize) -> f64 {
        2.0 * PI / self.length() * signed_index(i, self.n) as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sin_y(grid: Grid2D, m: f64) -> Vec<f64> {
        grid.sample(|_, y| (m * y).sin())
    }

    #[test]
    fn grid_rejects_bad_sizes() {
        assert!(Grid2D::new(8, 16).is_err());
        assert!(Grid2D::new(48, 64).is_err());
        assert!(Grid2D::new(16, 32).is_ok());
    }

    #[test]
    fn constant_field_is_dc() {
        let g = Grid2D::square(16).unwrap();
        let f = transform_forward(&vec![1.0; g.len()], g).unwrap();
        assert!((f.coeff(0, 0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let rest: f64 = f.coeffs()[1..].iter().map(|c| c.norm()).fold(0.0, f64::max);
        assert!(rest < 1e-15);
    }

    #[test]
    fn single_sine_mode() {
        let g = Grid2D::square(64).unwrap();
        let f = transform_forward(&sin_y(g, 2.0), g).unwrap();
        assert!((f.coeff(0, 2) - Complex64::new(0.0, -0.5)).norm() < 1e-13);
        assert!((f.coeff(0, -2) - Complex64::new(0.0, 0.5)).norm() < 1e-13);
        for jy in -32i64..32 {
            for jx in -32..32 {
                if jx == 0 && jy.abs() == 2 {
                    continue;
                }
                assert!(f.coeff(jx, jy).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn unit_shear_flow_norm() {
        let g = Grid2D::square(32).unwrap();
        let u0 = 1.0 / (2.0 * PI * PI).sqrt();
        let f = transform_forward(&g.sample(|_, y| u0 * (2.0 * y).sin()), g).unwrap();
        assert!((lp_norm(&f, Norm::L2) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn sine_l4_norm() {
        let g = Grid2D::square(32).unwrap();
        let f = transform_forward(&sin_y(g, 1.0), g).unwrap();
        let expected = (1.5 * PI * PI).powf(0.25);
        assert!((lp_norm(&f, Norm::L4) - expected).abs() < 1e-13);
        let l1 = 4.0 * 2.0 * PI;
        assert!((lp_norm(&f, Norm::L1) - l1).abs() < 1e-2 * l1);
        assert!((lp_norm(&f, Norm::Inf) - 1.0).abs() < 1e-2);
    }

    #[test]
    fn zero_field_norms() {
        let g = Grid2D::square(16).unwrap();
        let z = SpectralField2D::zeros(g);
        for p in [Norm::L1, Norm::L2, Norm::L4, Norm::Inf] {
            assert_eq!(lp_norm(&z, p), 0.0);
        }
    }

    #[test]
    fn orthogonal_components() {
        let g = Grid2D::square(16).unwrap();
        let s = transform_forward(&sin_y(g, 1.0), g).unwrap();
        let z = SpectralField2D::zeros(g);
        let a = VectorField2D::new(s.clone(), z.clone()).unwrap();
        let b = VectorField2D::new(z, s).unwrap();
        assert!(inner_product_normalized(&a, &b).unwrap().abs() < 1e-15);
        assert!((inner_product_normalized(&a, &a).unwrap() - 1.0).abs() < 1e-15);
        let zero = VectorField2D::zeros(g);
        assert_eq!(inner_product_normalized(&a, &zero), Err(FieldError::ZeroNorm));
    }

    #[test]
    fn poisson_single_mode_and_gauge() {
        let g = Grid2D::square(32).unwrap();
        let rhs = transform_forward(&sin_y(g, 1.0), g).unwrap().scale(-1.0);
        let phi = poisson_solve(&rhs, 0.0).unwrap();
        let expected = transform_forward(&sin_y(g, 1.0), g).unwrap();
        assert!(phi.sub(&expected).unwrap().max_abs_coeff() < 1e-15);

        let c = poisson_solve(&SpectralField2D::zeros(g), 0.75).unwrap();
        assert!((c.l2_norm() - 2.0 * PI * 0.75).abs() < 1e-14);

        let bad = SpectralField2D::constant(g, 1e-3);
        assert!(matches!(poisson_solve(&bad, 0.0), Err(FieldError::NonzeroMean(_))));
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g = Grid2D::square(16).unwrap();
        assert_eq!(
            transform_forward(&[0.0; 10], g),
            Err(FieldError::DimensionMismatch { expected: 256, got: 10 })
        );
    }

    #[test]
    fn derivatives_of_single_mode() {
        let g = Grid2D::new(16, 32).unwrap();
        let f = transform_forward(&g.sample(|x, y| (3.0 * x + 2.0 * y).sin()), g).unwrap();
        let fx = f.ddx().to_physical();
        let fy = f.ddy().to_physical();
        let ex = g.sample(|x, y| 3.0 * (3.0 * x + 2.0 * y).cos());
        let ey = g.sample(|x, y| 2.0 * (3.0 * x + 2.0 * y).cos());
        for i in 0..g.len() {
            assert!((fx[i] - ex[i]).abs() < 1e-12);
            assert!((fy[i] - ey[i]).abs() < 1e-12);
        }
        assert!(f.ddx().hermitian_defect() < 1e-15);
        assert!(f.laplacian().laplacian().hermitian_defect() < 1e-15);
    }

    #[test]
    fn grid1d_validation() {
        assert!(Grid1D::new(1.0, 1.0, 128).is_err());
        assert!(Grid1D::new(0.0, 1.0, 32).is_err());
        let w = Grid1D::new(-50.0, 50.0, 1024).unwrap();
        assert!((w.dx() - 100.0 / 1024.0).abs() < 1e-15);
        assert!((w.wavenumber(1) - 2.0 * PI / 100.0).abs() < 1e-15);
        assert!(w.wavenumber(1023) < 0.0);
    }
}
