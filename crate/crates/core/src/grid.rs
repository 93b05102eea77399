//! Uniform periodic 2D mesh and the pseudospectral operators built on it.
//!
//! Grid values live in real space, node `(ix, iy)` sits at `(ix*dx, iy*dy)`
//! and is stored at `ix * ny + iy`. Each operator transforms internally.
//!
//! First derivatives use a wavenumber table with the Nyquist entry zeroed, so
//! the derivative matrix is real and antisymmetric. That gives the discrete
//! integration-by-parts and curl identities exactly. The Laplacian and the
//! binomial filter use the full signed table, so the second identity
//! (`sum grad f . grad g = -sum f lap g`) only holds on Nyquist-free data,
//! which is what the filter produces.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

struct Plans {
    fwd_x: Arc<dyn Fft<f64>>,
    inv_x: Arc<dyn Fft<f64>>,
    fwd_y: Arc<dyn Fft<f64>>,
    inv_y: Arc<dyn Fft<f64>>,
}

/// Periodic `nx x ny` mesh over `[0, lx) x [0, ly)`.
#[derive(Clone)]
pub struct Grid {
    nx: usize,
    ny: usize,
    lx: f64,
    ly: f64,
    dx: f64,
    dy: f64,
    kx: Vec<f64>,
    ky: Vec<f64>,
    kx_deriv: Vec<f64>,
    ky_deriv: Vec<f64>,
    plans: Arc<Plans>,
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .field("lx", &self.lx)
            .field("ly", &self.ly)
            .finish()
    }
}

fn check_count(name: &str, n: usize) -> Result<()> {
    // A single cell collapses that direction (1D runs on a 2D code path).
    if n == 1 || (n >= 4 && n.is_multiple_of(2)) {
        Ok(())
    } else {
        Err(Error::InvalidGrid(format!(
            "{name} = {n}: cell counts must be 1 or an even number >= 4"
        )))
    }
}

/// Signed wavenumbers `2*pi*m/len`; the Nyquist entry (index `n/2`) is negative.
fn wavenumbers(n: usize, len: f64) -> Vec<f64> {
    (0..n)
        .map(|m| {
            let signed = if 2 * m >= n {
                m as f64 - n as f64
            } else {
                m as f64
            };
            2.0 * PI * signed / len
        })
        .collect()
}

impl Grid {
    pub fn new(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        check_count("nx", nx)?;
        check_count("ny", ny)?;
        for (name, len) in [("lx", lx), ("ly", ly)] {
            if !(len.is_finite() && len > 0.0) {
                return Err(Error::InvalidGrid(format!(
                    "{name} = {len} must be positive"
                )));
            }
        }
        let kx = wavenumbers(nx, lx);
        let ky = wavenumbers(ny, ly);
        let mut kx_deriv = kx.clone();
        let mut ky_deriv = ky.clone();
        if nx > 1 {
            kx_deriv[nx / 2] = 0.0;
        }
        if ny > 1 {
            ky_deriv[ny / 2] = 0.0;
        }
        let mut planner = FftPlanner::new();
        let plans = Plans {
            fwd_x: planner.plan_fft_forward(nx),
            inv_x: planner.plan_fft_inverse(nx),
            fwd_y: planner.plan_fft_forward(ny),
            inv_y: planner.plan_fft_inverse(ny),
        };
        Ok(Self {
            nx,
            ny,
            lx,
            ly,
            dx: lx / nx as f64,
            dy: ly / ny as f64,
            kx,
            ky,
            kx_deriv,
            ky_deriv,
            plans: Arc::new(plans),
        })
    }

    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn lx(&self) -> f64 {
        self.lx
    }
    pub fn ly(&self) -> f64 {
        self.ly
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dy(&self) -> f64 {
        self.dy
    }
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn len(&self) -> usize {
        self.nx * self.ny
    }
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
    /// Cell volume `|h| = dx * dy`.
    pub fn cell_volume(&self) -> f64 {
        self.dx * self.dy
    }
    /// Signed x wavenumber table (Nyquist entry kept).
    pub fn kx(&self) -> &[f64] {
        &self.kx
    }
    pub fn ky(&self) -> &[f64] {
        &self.ky
    }
    /// Wavenumbers used by first derivatives (Nyquist entry zeroed).
    pub fn kx_deriv(&self) -> &[f64] {
        &self.kx_deriv
    }
    pub fn ky_deriv(&self) -> &[f64] {
        &self.ky_deriv
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        ix as f64 * self.dx
    }
    pub fn node_y(&self, iy: usize) -> f64 {
        iy as f64 * self.dy
    }

    pub(crate) fn check(&self, f: &ScalarGrid) -> Result<()> {
        if f.shape() == self.shape() {
            Ok(())
        } else {
            Err(Error::ShapeMismatch {
                expected: self.shape(),
                found: f.shape(),
            })
        }
    }

    /// Unnormalized forward 2D DFT of a real grid.
    pub fn forward(&self, f: &ScalarGrid) -> Result<Vec<Complex64>> {
        self.check(f)?;
        let mut data: Vec<Complex64> = f.values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.transform(&mut data, false);
        Ok(data)
    }

    /// Inverse of [`Grid::forward`]; keeps the real part.
    pub fn inverse(&self, mut spectrum: Vec<Complex64>) -> ScalarGrid {
        assert_eq!(spectrum.len(), self.len(), "spectrum length");
        self.transform(&mut spectrum, true);
        let norm = 1.0 / self.len() as f64;
        ScalarGrid {
            nx: self.nx,
            ny: self.ny,
            values: spectrum.iter().map(|c| c.re * norm).collect(),
        }
    }

    fn transform(&self, data: &mut [Complex64], inverse: bool) {
        let (nx, ny) = (self.nx, self.ny);
        let (px, py) = if inverse {
            (&self.plans.inv_x, &self.plans.inv_y)
        } else {
            (&self.plans.fwd_x, &self.plans.fwd_y)
        };
        if ny > 1 {
            py.process(data);
        }
        if nx > 1 {
            let mut cols = vec![Complex64::new(0.0, 0.0); nx * ny];
            for ix in 0..nx {
                for iy in 0..ny {
                    cols[iy * nx + ix] = data[ix * ny + iy];
                }
            }
            px.process(&mut cols);
            for ix in 0..nx {
                for iy in 0..ny {
                    data[ix * ny + iy] = cols[iy * nx + ix];
                }
            }
        }
    }

    /// Applies `mult(kx_index, ky_index)` to every mode and transforms back.
    fn apply_multiplier(
        &self,
        f: &ScalarGrid,
        mult: impl Fn(usize, usize) -> Complex64,
    ) -> Result<ScalarGrid> {
        let mut spec = self.forward(f)?;
        for mx in 0..self.nx {
            for my in 0..self.ny {
                spec[mx * self.ny + my] *= mult(mx, my);
            }
        }
        Ok(self.inverse(spec))
    }

    pub fn d_dx(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        self.apply_multiplier(f, |mx, _| Complex64::new(0.0, self.kx_deriv[mx]))
    }

    pub fn d_dy(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        self.apply_multiplier(f, |_, my| Complex64::new(0.0, self.ky_deriv[my]))
    }

    pub fn gradient(&self, f: &ScalarGrid) -> Result<VectorGrid> {
        let spec = self.forward(f)?;
        let mut sx = spec.clone();
        let mut sy = spec;
        for mx in 0..self.nx {
            for my in 0..self.ny {
                let i = mx * self.ny + my;
                sx[i] *= Complex64::new(0.0, self.kx_deriv[mx]);
                sy[i] *= Complex64::new(0.0, self.ky_deriv[my]);
            }
        }
        Ok(VectorGrid {
            x: self.inverse(sx),
            y: self.inverse(sy),
        })
    }

    pub fn divergence(&self, v: &VectorGrid) -> Result<ScalarGrid> {
        let sx = self.forward(&v.x)?;
        let sy = self.forward(&v.y)?;
        Ok(self.inverse(self.combine(&sx, &sy, 1.0)))
    }

    /// `i kx a + sign * i ky b` per mode.
    fn combine(&self, a: &[Complex64], b: &[Complex64], sign: f64) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.len()];
        for mx in 0..self.nx {
            for my in 0..self.ny {
                let i = mx * self.ny + my;
                out[i] =
                    Complex64::i() * (a[i] * self.kx_deriv[mx] + sign * b[i] * self.ky_deriv[my]);
            }
        }
        out
    }

    /// Out-of-plane curl of an in-plane field: `dEy/dx - dEx/dy`.
    pub fn curl_e(&self, e: &VectorGrid) -> Result<ScalarGrid> {
        let sx = self.forward(&e.x)?;
        let sy = self.forward(&e.y)?;
        // i kx Ey - i ky Ex
        Ok(self.inverse(self.combine(&sy, &sx, -1.0)))
    }

    /// In-plane curl of an out-of-plane field: `(dBz/dy, -dBz/dx)`.
    pub fn curl_b(&self, bz: &ScalarGrid) -> Result<VectorGrid> {
        let dy = self.d_dy(bz)?;
        let mut dx = self.d_dx(bz)?;
        dx.scale(-1.0);
        Ok(VectorGrid { x: dy, y: dx })
    }

    /// Spectral Laplacian `-(kx^2 + ky^2)` on the full wavenumber table.
    pub fn laplacian(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        self.apply_multiplier(f, |mx, my| {
            Complex64::new(-(self.kx[mx].powi(2) + self.ky[my].powi(2)), 0.0)
        })
    }

    /// Solves `lap u = f` up to the mean of `f`; the output has zero mean.
    pub fn inverse_laplacian(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        self.apply_multiplier(f, |mx, my| {
            if mx == 0 && my == 0 {
                Complex64::new(0.0, 0.0)
            } else {
                Complex64::new(-1.0 / (self.kx[mx].powi(2) + self.ky[my].powi(2)), 0.0)
            }
        })
    }

    /// One pass of the periodic (1/4, 1/2, 1/4) stencil in each direction.
    ///
    /// Transfer function `cos^2(kx dx/2) cos^2(ky dy/2)`; Nyquist content is
    /// removed exactly. Directions with a single cell are left untouched.
    pub fn binomial_filter(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        self.check(f)?;
        let (nx, ny) = (self.nx, self.ny);
        let mut tmp = f.values.clone();
        if nx > 1 {
            for ix in 0..nx {
                let l = (ix + nx - 1) % nx;
                let r = (ix + 1) % nx;
                for iy in 0..ny {
                    tmp[ix * ny + iy] = 0.25 * f.values[l * ny + iy]
                        + 0.5 * f.values[ix * ny + iy]
                        + 0.25 * f.values[r * ny + iy];
                }
            }
        }
        let mut out = tmp.clone();
        if ny > 1 {
            for ix in 0..nx {
                let row = &tmp[ix * ny..(ix + 1) * ny];
                for iy in 0..ny {
                    out[ix * ny + iy] =
                        0.25 * row[(iy + ny - 1) % ny] + 0.5 * row[iy] + 0.25 * row[(iy + 1) % ny];
                }
            }
        }
        Ok(ScalarGrid {
            nx,
            ny,
            values: out,
        })
    }

    pub fn filter_vector(&self, v: &VectorGrid) -> Result<VectorGrid> {
        Ok(VectorGrid {
            x: self.binomial_filter(&v.x)?,
            y: self.binomial_filter(&v.y)?,
        })
    }
}

/// Real scalar values on the nodes of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct ScalarGrid {
    nx: usize,
    ny: usize,
    values: Vec<f64>,
}

impl ScalarGrid {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![0.0; grid.len()],
        }
    }

    pub fn constant(grid: &Grid, value: f64) -> Self {
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values: vec![value; grid.len()],
        }
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: &Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut values = Vec::with_capacity(grid.len());
        for ix in 0..grid.nx {
            for iy in 0..grid.ny {
                values.push(f(grid.node_x(ix), grid.node_y(iy)));
            }
        }
        Self {
            nx: grid.nx,
            ny: grid.ny,
            values,
        }
    }

    pub fn from_values(grid: &Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "expected {} values, found {}",
                grid.len(),
                values.len()
            )));
        }
        Ok(Self {
            nx: grid.nx,
            ny: grid.ny,
            values,
        })
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }
    pub fn values(&self) -> &[f64] {
        &self.values
    }
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[ix * self.ny + iy]
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
    pub fn mean(&self) -> f64 {
        self.sum() / self.values.len() as f64
    }
    pub fn dot(&self, other: &Self) -> f64 {
        debug_assert_eq!(self.shape(), other.shape());
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum()
    }
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scale(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v *= a);
    }
    pub fn add_scalar(&mut self, a: f64) {
        self.values.iter_mut().for_each(|v| *v += a);
    }
    /// `self += a * other`
    pub fn axpy(&mut self, a: f64, other: &Self) {
        debug_assert_eq!(self.shape(), other.shape());
        for (s, o) in self.values.iter_mut().zip(&other.values) {
            *s += a * o;
        }
    }
    /// Pointwise mean of two grids.
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        debug_assert_eq!(a.shape(), b.shape());
        Self {
            nx: a.nx,
            ny: a.ny,
            values: a
                .values
                .iter()
                .zip(&b.values)
                .map(|(p, q)| 0.5 * (p + q))
                .collect(),
        }
    }
}

/// In-plane vector field: two [`ScalarGrid`] components.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorGrid {
    pub x: ScalarGrid,
    pub y: ScalarGrid,
}

impl VectorGrid {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            x: ScalarGrid::zeros(grid),
            y: ScalarGrid::zeros(grid),
        }
    }
    pub fn dot(&self, other: &Self) -> f64 {
        self.x.dot(&other.x) + self.y.dot(&other.y)
    }
    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }
    pub fn scale(&mut self, a: f64) {
        self.x.scale(a);
        self.y.scale(a);
    }
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.x.axpy(a, &other.x);
        self.y.axpy(a, &other.y);
    }
    pub fn midpoint(a: &Self, b: &Self) -> Self {
        Self {
            x: ScalarGrid::midpoint(&a.x, &b.x),
            y: ScalarGrid::midpoint(&a.y, &b.y),
        }
    }
    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}
