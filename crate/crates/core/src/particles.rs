//! Particle storage plus tent-function deposition and gather.
//!
//! Deposition and gather share the same first-order tent, so for any field
//! `E_h`, positions and velocities,
//! `sum_p w v_p . E(x_p) == |h| sum_h E_h . j_h`. The energy theorem of the
//! conserving schemes depends on that adjointness.

use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::grid::{Grid, ScalarGrid, VectorGrid};

/// Minimum particles per rayon task in gathers and pushes.
pub(crate) const PAR_MIN_LEN: usize = 2048;

/// Macro-particles in structure-of-arrays layout with one shared weight.
#[derive(Clone, Debug, PartialEq)]
pub struct ParticleSet {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub vx: Vec<f64>,
    pub vy: Vec<f64>,
    weight: f64,
}

impl ParticleSet {
    /// Builds a set normalized to unit mean density: `w * N = lx * ly`.
    pub fn new(grid: &Grid, x: Vec<f64>, y: Vec<f64>, vx: Vec<f64>, vy: Vec<f64>) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(invalid("particles", "at least one particle is required"));
        }
        let w = grid.lx() * grid.ly() / n as f64;
        Self::with_weight(grid, x, y, vx, vy, w)
    }

    /// Builds a set with an explicit weight. `w = 0` gives test particles
    /// that feel the fields without sourcing them.
    pub fn with_weight(
        grid: &Grid,
        x: Vec<f64>,
        y: Vec<f64>,
        vx: Vec<f64>,
        vy: Vec<f64>,
        weight: f64,
    ) -> Result<Self> {
        let n = x.len();
        if n == 0 {
            return Err(invalid("particles", "at least one particle is required"));
        }
        if y.len() != n || vx.len() != n || vy.len() != n {
            return Err(invalid(
                "particles",
                "position and velocity arrays differ in length",
            ));
        }
        if !(weight.is_finite() && weight >= 0.0) {
            return Err(invalid(
                "weight",
                format!("{weight} must be finite and non-negative"),
            ));
        }
        let mut set = Self {
            x,
            y,
            vx,
            vy,
            weight,
        };
        set.wrap(grid);
        Ok(set)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }
    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Maps every position back into the periodic box.
    pub fn wrap(&mut self, grid: &Grid) {
        let (lx, ly) = (grid.lx(), grid.ly());
        self.x.iter_mut().for_each(|x| *x = wrap(*x, lx));
        self.y.iter_mut().for_each(|y| *y = wrap(*y, ly));
    }
}

/// Periodic wrap into `[0, len)`.
#[inline]
pub fn wrap(v: f64, len: f64) -> f64 {
    let r = v.rem_euclid(len);
    // rem_euclid can round up to `len` for tiny negative inputs
    if r >= len {
        0.0
    } else {
        r
    }
}

/// First-order tent `max(0, 1 - |z|/h)`.
#[inline]
pub fn shape_tent(z: f64, h: f64) -> f64 {
    (1.0 - z.abs() / h).max(0.0)
}

/// Nodes and tent weights touched by one particle.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Stencil {
    pub ix: [usize; 2],
    pub wx: [f64; 2],
    pub iy: [usize; 2],
    pub wy: [f64; 2],
}

impl Stencil {
    #[inline]
    pub fn new(grid: &Grid, x: f64, y: f64) -> Self {
        let (ix, wx) = axis(x / grid.dx(), grid.nx());
        let (iy, wy) = axis(y / grid.dy(), grid.ny());
        Self { ix, wx, iy, wy }
    }

    #[inline]
    pub fn interpolate(&self, values: &[f64], ny: usize) -> f64 {
        let mut acc = 0.0;
        for a in 0..2 {
            let row = self.ix[a] * ny;
            acc += self.wx[a]
                * (self.wy[0] * values[row + self.iy[0]] + self.wy[1] * values[row + self.iy[1]]);
        }
        acc
    }

    #[inline]
    pub fn scatter(&self, values: &mut [f64], ny: usize, amount: f64) {
        for a in 0..2 {
            let row = self.ix[a] * ny;
            let wa = amount * self.wx[a];
            values[row + self.iy[0]] += wa * self.wy[0];
            values[row + self.iy[1]] += wa * self.wy[1];
        }
    }
}

#[inline]
fn axis(s: f64, n: usize) -> ([usize; 2], [f64; 2]) {
    let base = s.floor();
    let frac = s - base;
    let i0 = (base as i64).rem_euclid(n as i64) as usize;
    let i1 = if i0 + 1 == n { 0 } else { i0 + 1 };
    ([i0, i1], [1.0 - frac, frac])
}

fn chunk_len(n: usize, workers: usize) -> usize {
    n.div_ceil(workers.max(1)).max(1)
}

/// Sums per-chunk buffers in chunk order so results only depend on `workers`.
fn reduce_in_order(parts: Vec<Vec<f64>>, len: usize) -> Vec<f64> {
    let mut total = vec![0.0; len];
    for part in parts {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    total
}

/// `rho_h = (w / |h|) sum_p S(x_h - x_p)`.
///
/// `workers == 1` accumulates sequentially in particle order; larger values
/// split the particles into that many contiguous chunks, deposit them in
/// parallel and add the chunk buffers in order.
pub fn deposit_charge(
    grid: &Grid,
    xs: &[f64],
    ys: &[f64],
    weight: f64,
    workers: usize,
) -> ScalarGrid {
    assert_eq!(xs.len(), ys.len());
    let ny = grid.ny();
    let amount = weight / grid.cell_volume();
    let run = |range: std::ops::Range<usize>| {
        let mut acc = vec![0.0; grid.len()];
        for p in range {
            Stencil::new(grid, xs[p], ys[p]).scatter(&mut acc, ny, amount);
        }
        acc
    };
    let n = xs.len();
    let values = if workers <= 1 {
        run(0..n)
    } else {
        let step = chunk_len(n, workers);
        let parts: Vec<Vec<f64>> = (0..n)
            .step_by(step)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| run(start..(start + step).min(n)))
            .collect();
        reduce_in_order(parts, grid.len())
    };
    ScalarGrid::from_values(grid, values).expect("deposit buffer sized from grid")
}

/// `j_h = (w / |h|) sum_p v_p S(x_h - x_p)` for the given position/velocity pairing.
pub fn deposit_current(
    grid: &Grid,
    xs: &[f64],
    ys: &[f64],
    vxs: &[f64],
    vys: &[f64],
    weight: f64,
    workers: usize,
) -> VectorGrid {
    let n = xs.len();
    assert!(ys.len() == n && vxs.len() == n && vys.len() == n);
    let ny = grid.ny();
    let len = grid.len();
    let amount = weight / grid.cell_volume();
    let run = |range: std::ops::Range<usize>| {
        let mut acc = vec![0.0; 2 * len];
        let (ax, ay) = acc.split_at_mut(len);
        for p in range {
            let s = Stencil::new(grid, xs[p], ys[p]);
            s.scatter(ax, ny, amount * vxs[p]);
            s.scatter(ay, ny, amount * vys[p]);
        }
        acc
    };
    let mut values = if workers <= 1 {
        run(0..n)
    } else {
        let step = chunk_len(n, workers);
        let parts: Vec<Vec<f64>> = (0..n)
            .step_by(step)
            .collect::<Vec<_>>()
            .into_par_iter()
            .map(|start| run(start..(start + step).min(n)))
            .collect();
        reduce_in_order(parts, 2 * len)
    };
    let jy = values.split_off(len);
    VectorGrid {
        x: ScalarGrid::from_values(grid, values).expect("sized from grid"),
        y: ScalarGrid::from_values(grid, jy).expect("sized from grid"),
    }
}

/// Interpolates a scalar grid field to the particle positions.
pub fn gather(grid: &Grid, field: &ScalarGrid, xs: &[f64], ys: &[f64]) -> Result<Vec<f64>> {
    grid.check(field)?;
    let ny = grid.ny();
    let values = field.values();
    Ok(xs
        .par_iter()
        .zip(ys.par_iter())
        .with_min_len(PAR_MIN_LEN)
        .map(|(&x, &y)| Stencil::new(grid, x, y).interpolate(values, ny))
        .collect())
}

/// Gathered in-plane field components, one entry per particle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParticleField {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

/// Interpolates both components of a vector field with one stencil per particle.
pub fn gather_vector(
    grid: &Grid,
    field: &VectorGrid,
    xs: &[f64],
    ys: &[f64],
) -> Result<ParticleField> {
    grid.check(&field.x)?;
    grid.check(&field.y)?;
    let ny = grid.ny();
    let (fx, fy) = (field.x.values(), field.y.values());
    let (x, y): (Vec<f64>, Vec<f64>) = xs
        .par_iter()
        .zip(ys.par_iter())
        .with_min_len(PAR_MIN_LEN)
        .map(|(&px, &py)| {
            let s = Stencil::new(grid, px, py);
            (s.interpolate(fx, ny), s.interpolate(fy, ny))
        })
        .unzip();
    Ok(ParticleField { x, y })
}
