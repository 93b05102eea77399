//! Spectral field updates.
//!
//! Electromagnetic solvers work per Fourier mode in the basis
//! `k_hat = k/|k|`, `t_hat = (k_hat_y, -k_hat_x)`. The longitudinal part of
//! `E` only sees the current (`dE_L/dt = -j_L`); the transverse part and
//! `Bz` form the 2x2 system
//!
//! ```text
//! dE_T/dt = i c^2 k Bz - j_T
//! dBz/dt  = i k E_T
//! ```
//!
//! Wavenumbers are the derivative table, so every solver is consistent with
//! [`Grid::curl_e`] and [`Grid::curl_b`]. Modes with zero derivative
//! wavenumber take the `k -> 0` limit.

use num_complex::Complex64;

use crate::error::{invalid, Result};
use crate::grid::{Grid, ScalarGrid, VectorGrid};

/// Grid fields of a run. ES schemes use `phi` (with `e = -grad phi`);
/// EM schemes use `e` and `bz`.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    pub e: VectorGrid,
    pub bz: ScalarGrid,
    pub phi: ScalarGrid,
}

impl FieldState {
    pub fn zeros(grid: &Grid) -> Self {
        Self {
            e: VectorGrid::zeros(grid),
            bz: ScalarGrid::zeros(grid),
            phi: ScalarGrid::zeros(grid),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e.is_finite() && self.bz.is_finite() && self.phi.is_finite()
    }
}

/// `E = -grad phi`.
pub fn electric_field(grid: &Grid, phi: &ScalarGrid) -> Result<VectorGrid> {
    let mut e = grid.gradient(phi)?;
    e.scale(-1.0);
    Ok(e)
}

/// Solves `-lap phi = rho - 1` in the zero-mean gauge.
pub fn poisson_solve(grid: &Grid, rho: &ScalarGrid) -> Result<ScalarGrid> {
    // The uniform background only touches the (0,0) mode, which the gauge drops.
    let mut phi = grid.inverse_laplacian(rho)?;
    phi.scale(-1.0);
    Ok(phi)
}

/// Ampere-form potential update: `lap phi' = lap phi + dt div j`.
pub fn ampere_update(grid: &Grid, phi: &ScalarGrid, j: &VectorGrid, dt: f64) -> Result<ScalarGrid> {
    let increment = grid.inverse_laplacian(&grid.divergence(j)?)?;
    let mut out = phi.clone();
    out.axpy(dt, &increment);
    Ok(out)
}

/// `B - dt curl E`.
pub fn faraday_update(grid: &Grid, bz: &ScalarGrid, e: &VectorGrid, dt: f64) -> Result<ScalarGrid> {
    let mut out = bz.clone();
    out.axpy(-dt, &grid.curl_e(e)?);
    Ok(out)
}

/// `E + dt (c^2 curl B - j)`.
pub fn ampere_maxwell_update(
    grid: &Grid,
    e: &VectorGrid,
    bz: &ScalarGrid,
    j: &VectorGrid,
    dt: f64,
    c: f64,
) -> Result<VectorGrid> {
    let mut out = e.clone();
    out.axpy(dt * c * c, &grid.curl_b(bz)?);
    out.axpy(-dt, j);
    Ok(out)
}

/// Forward-Euler field predictor from time level `n` over `dt`:
/// `E + dt (c^2 curl B - j)`, `B - dt curl E`. The conserving schemes call it
/// with `dt/2` to build the half-step fields.
pub fn explicit_field_step(
    grid: &Grid,
    fields: &FieldState,
    j: &VectorGrid,
    dt: f64,
    c: f64,
) -> Result<FieldState> {
    Ok(FieldState {
        e: ampere_maxwell_update(grid, &fields.e, &fields.bz, j, dt, c)?,
        bz: faraday_update(grid, &fields.bz, &fields.e, dt)?,
        phi: fields.phi.clone(),
    })
}

/// Leapfrog Maxwell step. Takes `B^{n-1/2}` and `E^n`, returns
/// `(B^{n+1/2}, E^{n+1})`.
pub fn leapfrog_maxwell_step(
    grid: &Grid,
    bz_half: &ScalarGrid,
    e: &VectorGrid,
    j: &VectorGrid,
    dt: f64,
    c: f64,
) -> Result<(ScalarGrid, VectorGrid)> {
    let b_next = faraday_update(grid, bz_half, e, dt)?;
    let e_next = ampere_maxwell_update(grid, e, &b_next, j, dt, c)?;
    Ok((b_next, e_next))
}

/// Fields of one Fourier mode.
#[derive(Clone, Copy, Debug)]
struct Mode {
    ex: Complex64,
    ey: Complex64,
    bz: Complex64,
}

struct Spectra {
    ex: Vec<Complex64>,
    ey: Vec<Complex64>,
    bz: Vec<Complex64>,
    jx: Vec<Complex64>,
    jy: Vec<Complex64>,
}

/// Splits `(ax, ay)` into `(longitudinal, transverse)` components.
#[inline]
fn split(khat: (f64, f64), ax: Complex64, ay: Complex64) -> (Complex64, Complex64) {
    (ax * khat.0 + ay * khat.1, ax * khat.1 - ay * khat.0)
}

/// Rebuilds `(ax, ay)` from longitudinal and transverse parts.
#[inline]
fn join(khat: (f64, f64), l: Complex64, t: Complex64) -> (Complex64, Complex64) {
    (l * khat.0 + t * khat.1, l * khat.1 - t * khat.0)
}

/// Runs `update(k, khat, mode, jx, jy)` on every mode and transforms back.
/// `k == 0` marks a mode where the curl vanishes.
fn per_mode(
    grid: &Grid,
    fields: &FieldState,
    j: &VectorGrid,
    update: impl Fn(f64, (f64, f64), Mode, Complex64, Complex64) -> Mode,
) -> Result<(VectorGrid, ScalarGrid)> {
    let mut s = Spectra {
        ex: grid.forward(&fields.e.x)?,
        ey: grid.forward(&fields.e.y)?,
        bz: grid.forward(&fields.bz)?,
        jx: grid.forward(&j.x)?,
        jy: grid.forward(&j.y)?,
    };
    let ny = grid.ny();
    for (mx, &kx) in grid.kx_deriv().iter().enumerate() {
        for (my, &ky) in grid.ky_deriv().iter().enumerate() {
            let i = mx * ny + my;
            let k = kx.hypot(ky);
            let khat = if k > 0.0 {
                (kx / k, ky / k)
            } else {
                (0.0, 0.0)
            };
            let mode = Mode {
                ex: s.ex[i],
                ey: s.ey[i],
                bz: s.bz[i],
            };
            let out = update(k, khat, mode, s.jx[i], s.jy[i]);
            s.ex[i] = out.ex;
            s.ey[i] = out.ey;
            s.bz[i] = out.bz;
        }
    }
    Ok((
        VectorGrid {
            x: grid.inverse(s.ex),
            y: grid.inverse(s.ey),
        },
        grid.inverse(s.bz),
    ))
}

fn check_step(dt: f64, c: f64) -> Result<()> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(invalid("dt", format!("{dt} must be positive")));
    }
    if !(c.is_finite() && c > 0.0) {
        return Err(invalid("c", format!("{c} must be positive")));
    }
    Ok(())
}

/// Crank-Nicolson Maxwell step with frozen current:
/// `E' = E + dt (c^2 curl B_mid - j)`, `B' = B - dt curl E_mid`, where the
/// midpoint fields are exact averages. Solved exactly per mode.
pub fn cn_maxwell_step(
    grid: &Grid,
    fields: &FieldState,
    j: &VectorGrid,
    dt: f64,
    c: f64,
) -> Result<FieldState> {
    check_step(dt, c)?;
    let h = 0.5 * dt;
    let i = Complex64::i();
    let (e, bz) = per_mode(grid, fields, j, |k, khat, m, jx, jy| {
        if k == 0.0 {
            return Mode {
                ex: m.ex - jx * dt,
                ey: m.ey - jy * dt,
                bz: m.bz,
            };
        }
        let (el, et) = split(khat, m.ex, m.ey);
        let (jl, jt) = split(khat, jx, jy);
        let det = 1.0 + (h * c * k).powi(2);
        let r1 = et + i * (h * c * c * k) * m.bz - jt * dt;
        let r2 = m.bz + i * (h * k) * et;
        let et_new = (r1 + i * (h * c * c * k) * r2) / det;
        let b_new = (i * (h * k) * r1 + r2) / det;
        let (ex, ey) = join(khat, el - jl * dt, et_new);
        Mode { ex, ey, bz: b_new }
    })?;
    Ok(FieldState {
        e,
        bz,
        phi: fields.phi.clone(),
    })
}

/// Per-mode PSATD propagator coefficients for one interval `tau`.
#[derive(Clone, Debug)]
pub struct PsatdCoefficients {
    /// `cos(k c tau)` per mode.
    pub cos: Vec<f64>,
    /// `sin(k c tau)` per mode.
    pub sin: Vec<f64>,
    /// Modes where the derivative wavenumber vanishes and the limit branch applies.
    pub zero_mode: Vec<bool>,
}

impl PsatdCoefficients {
    pub fn new(grid: &Grid, tau: f64, c: f64) -> Self {
        let mut cos = Vec::with_capacity(grid.len());
        let mut sin = Vec::with_capacity(grid.len());
        let mut zero_mode = Vec::with_capacity(grid.len());
        for &kx in grid.kx_deriv() {
            for &ky in grid.ky_deriv() {
                let theta = kx.hypot(ky) * c * tau;
                cos.push(theta.cos());
                sin.push(theta.sin());
                zero_mode.push(kx == 0.0 && ky == 0.0);
            }
        }
        Self {
            cos,
            sin,
            zero_mode,
        }
    }
}

/// Exact vacuum propagation over `tau` with the current held fixed.
pub fn psatd_step(
    grid: &Grid,
    fields: &FieldState,
    j: &VectorGrid,
    tau: f64,
    c: f64,
) -> Result<FieldState> {
    check_step(tau, c)?;
    let i = Complex64::i();
    let (e, bz) = per_mode(grid, fields, j, |k, khat, m, jx, jy| {
        if k == 0.0 {
            return Mode {
                ex: m.ex - jx * tau,
                ey: m.ey - jy * tau,
                bz: m.bz,
            };
        }
        let theta = k * c * tau;
        let (s, co) = theta.sin_cos();
        // 1 - cos without cancellation at small theta
        let omc = 2.0 * (0.5 * theta).sin().powi(2);
        let (el, et) = split(khat, m.ex, m.ey);
        let (jl, jt) = split(khat, jx, jy);
        let et_new = et * co + i * (s * c) * m.bz - jt * (s / (k * c));
        let b_new = m.bz * co + i * (s / c) * et - i * (omc / (k * c * c)) * jt;
        let (ex, ey) = join(khat, el - jl * tau, et_new);
        Mode { ex, ey, bz: b_new }
    })?;
    Ok(FieldState {
        e,
        bz,
        phi: fields.phi.clone(),
    })
}

/// Time average `(1/dt) int_0^dt E(t) dt` of the PSATD solution.
pub fn psatd_time_averaged_e(
    grid: &Grid,
    fields: &FieldState,
    j: &VectorGrid,
    dt: f64,
    c: f64,
) -> Result<VectorGrid> {
    check_step(dt, c)?;
    let i = Complex64::i();
    let (e, _) = per_mode(grid, fields, j, |k, khat, m, jx, jy| {
        if k == 0.0 {
            return Mode {
                ex: m.ex - jx * (0.5 * dt),
                ey: m.ey - jy * (0.5 * dt),
                bz: m.bz,
            };
        }
        let theta = k * c * dt;
        let s = theta.sin();
        let omc = 2.0 * (0.5 * theta).sin().powi(2);
        let (el, et) = split(khat, m.ex, m.ey);
        let (jl, jt) = split(khat, jx, jy);
        let et_avg =
            et * (s / theta) + i * (omc / (k * dt)) * m.bz - jt * (omc / (k * k * c * c * dt));
        let (ex, ey) = join(khat, el - jl * (0.5 * dt), et_avg);
        Mode { ex, ey, bz: m.bz }
    })?;
    Ok(e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn grid() -> Grid {
        Grid::new(8, 8, 2.0 * PI, 3.0).unwrap()
    }

    fn random(g: &Grid, rng: &mut ChaCha8Rng) -> ScalarGrid {
        let raw =
            ScalarGrid::from_values(g, (0..g.len()).map(|_| rng.random::<f64>() - 0.5).collect())
                .unwrap();
        // Nyquist-free so grid-space identities hold exactly
        g.binomial_filter(&raw).unwrap()
    }

    fn random_fields(g: &Grid, rng: &mut ChaCha8Rng) -> (FieldState, VectorGrid) {
        let f = FieldState {
            e: VectorGrid {
                x: random(g, rng),
                y: random(g, rng),
            },
            bz: random(g, rng),
            phi: ScalarGrid::zeros(g),
        };
        let j = VectorGrid {
            x: random(g, rng),
            y: random(g, rng),
        };
        (f, j)
    }

    fn em_energy(f: &FieldState, c: f64) -> f64 {
        0.5 * (f.e.norm_sq() + c * c * f.bz.norm_sq())
    }

    fn max_diff(a: &ScalarGrid, b: &ScalarGrid) -> f64 {
        a.values()
            .iter()
            .zip(b.values())
            .fold(0.0, |m, (p, q)| m.max((p - q).abs()))
    }

    fn transverse_mode(g: &Grid) -> FieldState {
        // Ey(x) and Bz(x) for kx = 1: a pure transverse wave
        let mut f = FieldState::zeros(g);
        f.e.y = ScalarGrid::from_fn(g, |x, _| x.cos());
        f.bz = ScalarGrid::from_fn(g, |x, _| 0.3 * x.sin());
        f
    }

    #[test]
    fn poisson_cases() {
        let g = grid();
        assert!(
            poisson_solve(&g, &ScalarGrid::constant(&g, 1.0))
                .unwrap()
                .max_abs()
                < 1e-15
        );
        let (alpha, k) = (0.05, 1.0);
        let rho = ScalarGrid::from_fn(&g, |x, _| 1.0 + alpha * (k * x).cos());
        let phi = poisson_solve(&g, &rho).unwrap();
        let expected = ScalarGrid::from_fn(&g, |x, _| alpha / (k * k) * (k * x).cos());
        assert!(max_diff(&phi, &expected) < 1e-15);
        assert!(phi.mean().abs() < 1e-16);
    }

    #[test]
    fn ampere_update_cases() {
        let g = grid();
        let phi = ScalarGrid::from_fn(&g, |x, y| (x + y).sin());
        assert_eq!(
            ampere_update(&g, &phi, &VectorGrid::zeros(&g), 0.1).unwrap(),
            phi
        );

        let psi = ScalarGrid::from_fn(&g, |_, y| (2.0 * PI * y / 3.0).cos());
        let j = g.gradient(&psi).unwrap();
        let next = ampere_update(&g, &phi, &j, 0.1).unwrap();
        let mut expected = phi.clone();
        expected.axpy(0.1, &psi);
        assert!(max_diff(&next, &expected) < 1e-14);

        let solenoidal = g
            .curl_b(&ScalarGrid::from_fn(&g, |x, y| {
                x.sin() * (2.0 * PI * y / 3.0).cos()
            }))
            .unwrap();
        assert!(max_diff(&ampere_update(&g, &phi, &solenoidal, 0.1).unwrap(), &phi) < 1e-14);
    }

    #[test]
    fn cn_vacuum_cases() {
        let g = grid();
        let zero = FieldState::zeros(&g);
        let j0 = VectorGrid::zeros(&g);
        assert_eq!(
            cn_maxwell_step(&g, &zero, &j0, 0.1, 1.0)
                .unwrap()
                .e
                .norm_sq(),
            0.0
        );

        let f = transverse_mode(&g);
        let next = cn_maxwell_step(&g, &f, &j0, 0.3, 2.0).unwrap();
        assert_relative_eq!(
            em_energy(&next, 2.0),
            em_energy(&f, 2.0),
            max_relative = 1e-13
        );

        let mut longitudinal = FieldState::zeros(&g);
        longitudinal.e.x = ScalarGrid::from_fn(&g, |x, _| x.sin());
        let same = cn_maxwell_step(&g, &longitudinal, &j0, 0.3, 2.0).unwrap();
        assert!(max_diff(&same.e.x, &longitudinal.e.x) < 1e-14);
        assert!(same.bz.max_abs() < 1e-14);
    }

    #[test]
    fn cn_matches_its_defining_equations() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let (f, j) = random_fields(&g, &mut rng);
        let (dt, c) = (0.2, 1.5);
        let next = cn_maxwell_step(&g, &f, &j, dt, c).unwrap();
        let e_mid = VectorGrid::midpoint(&f.e, &next.e);
        let b_mid = ScalarGrid::midpoint(&f.bz, &next.bz);
        let e_check = ampere_maxwell_update(&g, &f.e, &b_mid, &j, dt, c).unwrap();
        let b_check = faraday_update(&g, &f.bz, &e_mid, dt).unwrap();
        assert!(max_diff(&e_check.x, &next.e.x) < 1e-14);
        assert!(max_diff(&e_check.y, &next.e.y) < 1e-14);
        assert!(max_diff(&b_check, &next.bz) < 1e-14);
    }

    #[test]
    fn leapfrog_cases() {
        let g = grid();
        let b = ScalarGrid::from_fn(&g, |x, y| x.cos() * y);
        let (b1, _) = leapfrog_maxwell_step(
            &g,
            &b,
            &VectorGrid::zeros(&g),
            &VectorGrid::zeros(&g),
            0.1,
            1.0,
        )
        .unwrap();
        assert_eq!(b1, b);
    }

    #[test]
    fn leapfrog_nonstandard_energy_is_invariant() {
        let g = grid();
        let (dt, c) = (0.1, 1.0);
        let f = transverse_mode(&g);
        let j0 = VectorGrid::zeros(&g);
        let mut b_prev = f.bz.clone();
        let mut e = f.e.clone();
        let w = |e: &VectorGrid, b_prev: &ScalarGrid| {
            let b_next = faraday_update(&g, b_prev, e, dt).unwrap();
            0.5 * e.norm_sq() + 0.5 * c * c * b_prev.dot(&b_next)
        };
        let w0 = w(&e, &b_prev);
        for _ in 0..20 {
            let (b, e1) = leapfrog_maxwell_step(&g, &b_prev, &e, &j0, dt, c).unwrap();
            b_prev = b;
            e = e1;
            assert_relative_eq!(w(&e, &b_prev), w0, max_relative = 1e-13);
        }
    }

    #[test]
    fn leapfrog_agrees_with_cn_to_third_order() {
        // One step from the same (E^n, B^n): leapfrog with B^{-1/2} from a
        // backward half step versus CN. Local error must shrink like dt^3.
        let g = grid();
        let c = 1.0;
        let f = transverse_mode(&g);
        let j0 = VectorGrid::zeros(&g);
        let diff = |dt: f64| {
            let cn = cn_maxwell_step(&g, &f, &j0, dt, c).unwrap();
            let b_minus = faraday_update(&g, &f.bz, &f.e, -0.5 * dt).unwrap();
            let (_, e_lf) = leapfrog_maxwell_step(&g, &b_minus, &f.e, &j0, dt, c).unwrap();
            max_diff(&cn.e.y, &e_lf.y)
        };
        let (d1, d2) = (diff(2e-3), diff(1e-3));
        let order = (d1 / d2).log2();
        assert!(order > 2.7, "observed order {order}");
    }

    #[test]
    fn psatd_vacuum_cases() {
        let g = grid();
        let j0 = VectorGrid::zeros(&g);
        let mut longitudinal = FieldState::zeros(&g);
        longitudinal.e.x = ScalarGrid::from_fn(&g, |x, _| x.sin());
        let out = psatd_step(&g, &longitudinal, &j0, 0.7, 1.0).unwrap();
        assert!(max_diff(&out.e.x, &longitudinal.e.x) < 1e-14);

        let f = transverse_mode(&g);
        let (tau, c) = (0.4, 1.3);
        let out = psatd_step(&g, &f, &j0, tau, c).unwrap();
        assert_relative_eq!(em_energy(&out, c), em_energy(&f, c), max_relative = 1e-13);
        // Analytic: Ey = cos(x)cos(w t) + ..., with w = c for kx = 1.
        let w = c;
        let ey = ScalarGrid::from_fn(&g, |x, _| {
            x.cos() * (w * tau).cos() - 0.3 * c * x.cos() * (w * tau).sin()
        });
        assert!(max_diff(&out.e.y, &ey) < 1e-13);
    }

    #[test]
    fn psatd_zero_mode_limit() {
        let g = grid();
        let mut f = FieldState::zeros(&g);
        f.e.x = ScalarGrid::constant(&g, 0.2);
        f.bz = ScalarGrid::constant(&g, 0.5);
        let j = VectorGrid {
            x: ScalarGrid::constant(&g, 1.5),
            y: ScalarGrid::zeros(&g),
        };
        let out = psatd_step(&g, &f, &j, 0.3, 1.0).unwrap();
        assert!(out
            .e
            .x
            .values()
            .iter()
            .all(|v| (v - (0.2 - 0.3 * 1.5)).abs() < 1e-15));
        assert!(out.bz.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
    }

    #[test]
    fn psatd_semigroup() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (f, j) = random_fields(&g, &mut rng);
        let (dt, c) = (0.3, 1.2);
        let once = psatd_step(&g, &f, &j, dt, c).unwrap();
        let half = psatd_step(&g, &f, &j, 0.5 * dt, c).unwrap();
        let twice = psatd_step(&g, &half, &j, 0.5 * dt, c).unwrap();
        assert!(max_diff(&once.e.x, &twice.e.x) < 1e-14);
        assert!(max_diff(&once.e.y, &twice.e.y) < 1e-14);
        assert!(max_diff(&once.bz, &twice.bz) < 1e-14);
    }

    #[test]
    fn psatd_coefficients_unit_circle() {
        let g = grid();
        let coeffs = PsatdCoefficients::new(&g, 0.37, 1.4);
        for (c, s) in coeffs.cos.iter().zip(&coeffs.sin) {
            assert_relative_eq!(c * c + s * s, 1.0, max_relative = 1e-15);
        }
        assert!(coeffs.zero_mode[0]);
    }

    #[test]
    fn time_average_static_and_quadrature() {
        let g = grid();
        let j0 = VectorGrid::zeros(&g);
        let mut uniform = FieldState::zeros(&g);
        uniform.e.x = ScalarGrid::constant(&g, 0.7);
        let avg = psatd_time_averaged_e(&g, &uniform, &j0, 0.2, 1.0).unwrap();
        assert!(max_diff(&avg.x, &uniform.e.x) < 1e-15);

        // Composite Simpson over 10^4 sub-intervals of the propagator.
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let (f, j) = random_fields(&g, &mut rng);
        let (dt, c) = (0.25, 1.0);
        let avg = psatd_time_averaged_e(&g, &f, &j, dt, c).unwrap();
        let n = 10_000;
        let h = dt / n as f64;
        let mut acc = VectorGrid::zeros(&g);
        for s in 0..=n {
            let weight = if s == 0 || s == n {
                1.0
            } else if s % 2 == 1 {
                4.0
            } else {
                2.0
            };
            let e = if s == 0 {
                f.e.clone()
            } else {
                psatd_step(&g, &f, &j, s as f64 * h, c).unwrap().e
            };
            acc.axpy(weight * h / 3.0 / dt, &e);
        }
        assert!(max_diff(&avg.x, &acc.x) < 1e-10);
        assert!(max_diff(&avg.y, &acc.y) < 1e-10);
    }

    #[test]
    fn psatd_energy_identity() {
        let g = grid();
        for seed in 0..5 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, j) = random_fields(&g, &mut rng);
            let (dt, c) = (0.1 + 0.1 * seed as f64, 1.0 + 0.2 * seed as f64);
            let next = psatd_step(&g, &f, &j, dt, c).unwrap();
            let avg = psatd_time_averaged_e(&g, &f, &j, dt, c).unwrap();
            let work = dt * avg.dot(&j);
            let change = em_energy(&next, c) - em_energy(&f, c);
            assert!(
                (work + change).abs() < 1e-12 * em_energy(&f, c),
                "seed {seed}"
            );
        }
    }

    #[test]
    fn cn_energy_identity() {
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let (f, j) = random_fields(&g, &mut rng);
        let (dt, c) = (0.15, 1.3);
        let next = cn_maxwell_step(&g, &f, &j, dt, c).unwrap();
        let e_mid = VectorGrid::midpoint(&f.e, &next.e);
        let work = dt * e_mid.dot(&j);
        let change = em_energy(&next, c) - em_energy(&f, c);
        assert!((work + change).abs() < 1e-12 * em_energy(&f, c));
    }
}
