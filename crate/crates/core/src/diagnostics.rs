//! Energy accounting and conservation metrics.

use crate::error::{Error, Result};
use crate::fields::{faraday_update, FieldState};
use crate::grid::{Grid, ScalarGrid, VectorGrid};
use crate::integrator::SchemeKind;
use crate::particles::ParticleSet;

/// One row of `diagnostics.csv`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DiagnosticsRecord {
    pub step: usize,
    pub t: f64,
    pub ke: f64,
    pub ee: f64,
    /// `x` part of `ee`.
    pub ee_x: f64,
    /// `y` part of `ee`.
    pub ee_y: f64,
    pub be: f64,
    pub te: f64,
    pub delta: f64,
    pub n_fallback: usize,
    pub gauss_residual: f64,
    pub max_gamma_dev: f64,
}

/// `1/2 w sum_p |v_p|^2`.
pub fn kinetic_energy(particles: &ParticleSet) -> f64 {
    let sum: f64 = particles
        .vx
        .iter()
        .zip(&particles.vy)
        .map(|(vx, vy)| vx * vx + vy * vy)
        .sum();
    0.5 * particles.weight() * sum
}

/// Electric energy split by component, `1/2 |h| sum E_i^2`.
pub fn electric_energy(grid: &Grid, e: &VectorGrid) -> (f64, f64) {
    let h = grid.cell_volume();
    (0.5 * h * e.x.norm_sq(), 0.5 * h * e.y.norm_sq())
}

/// Leapfrog magnetic energy `c^2/2 |h| sum B^{n-1/2} B^{n+1/2}`.
pub fn leapfrog_magnetic_energy(
    grid: &Grid,
    b_prev: &ScalarGrid,
    b_next: &ScalarGrid,
    c: f64,
) -> f64 {
    0.5 * c * c * grid.cell_volume() * b_prev.dot(b_next)
}

/// `(EE, BE)` at the current time level. For the leapfrog scheme `fields.bz`
/// holds `B^{n-1/2}`; `B^{n+1/2}` is recovered with one Faraday step.
pub fn field_energy(
    grid: &Grid,
    fields: &FieldState,
    scheme: SchemeKind,
    dt: f64,
    c: f64,
) -> Result<(f64, f64)> {
    let (ex, ey) = electric_energy(grid, &fields.e);
    let be = match scheme {
        SchemeKind::BorisEs | SchemeKind::Esec1 | SchemeKind::Esec2 => 0.0,
        SchemeKind::EmecCn | SchemeKind::EmecPsatd => {
            0.5 * c * c * grid.cell_volume() * fields.bz.norm_sq()
        }
        SchemeKind::EmecLf => {
            let b_next = faraday_update(grid, &fields.bz, &fields.e, dt)?;
            leapfrog_magnetic_energy(grid, &fields.bz, &b_next, c)
        }
    };
    Ok((ex + ey, be))
}

/// `delta^n = (TE^n - min_k TE^k) / TE^0` with the minimum over the whole history.
pub fn fractional_delta(te: &[f64]) -> Result<Vec<f64>> {
    let Some(&te0) = te.first() else {
        return Ok(Vec::new());
    };
    if te0 == 0.0 {
        return Err(Error::ZeroInitialEnergy);
    }
    let min = te.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(te.iter().map(|t| (t - min) / te0).collect())
}

/// `||div E - (rho - 1)||_2 / ||rho||_2`.
pub fn gauss_residual(grid: &Grid, e: &VectorGrid, rho: &ScalarGrid) -> Result<f64> {
    let mut r = grid.divergence(e)?;
    r.axpy(-1.0, rho);
    r.add_scalar(1.0);
    let norm = rho.norm_sq().sqrt();
    Ok(if norm > 0.0 {
        r.norm_sq().sqrt() / norm
    } else {
        r.norm_sq().sqrt()
    })
}

/// Fills `te`-derived `delta` in place. Records must start at the initial state.
pub fn fill_delta(records: &mut [DiagnosticsRecord]) -> Result<()> {
    let te: Vec<f64> = records.iter().map(|r| r.te).collect();
    for (r, d) in records.iter_mut().zip(fractional_delta(&te)?) {
        r.delta = d;
    }
    Ok(())
}
