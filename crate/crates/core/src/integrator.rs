//! Time stepping for the energy-conserving schemes and the Boris reference.
//!
//! Every conserving step follows the same pipeline:
//!
//! 1. half drift `x* = x^n + dt/2 v^n`;
//! 2. provisional velocity `v*` from fields gathered at `x*`;
//! 3. `x^{n+1} = x^n + dt v*` and the literal midpoint `x^{n+1/2}`;
//! 4. deposit `j` from `(x^{n+1/2}, v*)` and advance the fields;
//! 5. `v_dagger = v^n + dt (E + v* x B)` at `x^{n+1/2}`, then `v^{n+1} = Gamma v_dagger`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{self, DiagnosticsRecord};
use crate::error::{invalid, Error, Result};
use crate::fields::{
    ampere_maxwell_update, ampere_update, cn_maxwell_step, electric_field, explicit_field_step,
    faraday_update, poisson_solve, psatd_step, psatd_time_averaged_e, FieldState,
};
use crate::grid::{Grid, ScalarGrid, VectorGrid};
use crate::particles::{
    deposit_charge, deposit_current, gather, gather_vector, wrap, ParticleField, ParticleSet,
    PAR_MIN_LEN,
};
use crate::pushers::{boris_step, gamma_factor, implicit_magnetic_half_velocity, Vec2};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    BorisEs,
    Esec1,
    Esec2,
    EmecCn,
    EmecLf,
    EmecPsatd,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 6] = [
        Self::BorisEs,
        Self::Esec1,
        Self::Esec2,
        Self::EmecCn,
        Self::EmecLf,
        Self::EmecPsatd,
    ];

    pub fn is_electromagnetic(self) -> bool {
        matches!(self, Self::EmecCn | Self::EmecLf | Self::EmecPsatd)
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::BorisEs => "boris_es",
            Self::Esec1 => "esec1",
            Self::Esec2 => "esec2",
            Self::EmecCn => "emec_cn",
            Self::EmecLf => "emec_lf",
            Self::EmecPsatd => "emec_psatd",
        }
    }
}

impl std::fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for SchemeKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let key = s.to_ascii_lowercase().replace('-', "_");
        Self::ALL
            .into_iter()
            .find(|k| k.name() == key || (key == "boris" && *k == Self::BorisEs))
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

/// Numerical parameters shared by all schemes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SchemeParams {
    pub dt: f64,
    /// Speed of light; ignored by the electrostatic schemes.
    pub c: f64,
    /// Binomial filter on deposited sources and gathered fields.
    pub filter: bool,
    /// Uniform external `Bz` felt by particles in the electrostatic schemes.
    pub b_ext: f64,
    /// Deposition chunks; 1 deposits sequentially.
    pub workers: usize,
}

impl SchemeParams {
    pub fn new(dt: f64) -> Self {
        Self {
            dt,
            c: 1.0,
            filter: true,
            b_ext: 0.0,
            workers: 1,
        }
    }
}

/// Per-step push statistics.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct StepReport {
    /// Particles whose Gamma radicand was negative.
    pub n_fallback: usize,
    /// `max_p |Gamma_p - 1|` over particles that did not fall back.
    pub max_gamma_dev: f64,
}

/// Kinetic, electric and magnetic energy at one time level.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Energies {
    pub ke: f64,
    pub ee_x: f64,
    pub ee_y: f64,
    pub be: f64,
}

impl Energies {
    pub fn ee(&self) -> f64 {
        self.ee_x + self.ee_y
    }
    pub fn total(&self) -> f64 {
        self.ke + self.ee() + self.be
    }
}

/// Particles plus fields advanced by one scheme.
///
/// Electrostatic schemes keep `fields.phi` and `fields.e = -grad phi`.
/// `EmecLf` stores `B^{n-1/2}` in `fields.bz`; the others store `B^n`.
#[derive(Clone, Debug)]
pub struct Simulation {
    grid: Grid,
    scheme: SchemeKind,
    params: SchemeParams,
    particles: ParticleSet,
    fields: FieldState,
    step: usize,
}

type Positions = (Vec<f64>, Vec<f64>);

struct Velocities {
    x: Vec<f64>,
    y: Vec<f64>,
}

impl Simulation {
    /// For electrostatic schemes `fields.phi` is taken as given and `fields.e`
    /// is recomputed from it. For `EmecLf`, `fields.bz` is `B^0` and is
    /// shifted back to `B^{-1/2} = B^0 + dt/2 curl E^0`.
    pub fn new(
        scheme: SchemeKind,
        grid: Grid,
        particles: ParticleSet,
        mut fields: FieldState,
        params: SchemeParams,
    ) -> Result<Self> {
        if !(params.dt.is_finite() && params.dt > 0.0) {
            return Err(invalid("dt", format!("{} must be positive", params.dt)));
        }
        if scheme.is_electromagnetic() && !(params.c.is_finite() && params.c > 0.0) {
            return Err(invalid("c", format!("{} must be positive", params.c)));
        }
        if params.workers == 0 {
            return Err(invalid("workers", "must be at least 1"));
        }
        grid.check(&fields.phi)?;
        grid.check(&fields.bz)?;
        grid.check(&fields.e.x)?;
        grid.check(&fields.e.y)?;
        if scheme.is_electromagnetic() {
            if scheme == SchemeKind::EmecLf {
                fields.bz = faraday_update(&grid, &fields.bz, &fields.e, -0.5 * params.dt)?;
            }
        } else {
            fields.e = electric_field(&grid, &fields.phi)?;
        }
        Ok(Self {
            grid,
            scheme,
            params,
            particles,
            fields,
            step: 0,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }
    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }
    pub fn params(&self) -> &SchemeParams {
        &self.params
    }
    pub fn particles(&self) -> &ParticleSet {
        &self.particles
    }
    pub fn fields(&self) -> &FieldState {
        &self.fields
    }
    pub fn step_index(&self) -> usize {
        self.step
    }
    pub fn time(&self) -> f64 {
        self.step as f64 * self.params.dt
    }

    pub fn energies(&self) -> Result<Energies> {
        let (ee_x, ee_y) = diagnostics::electric_energy(&self.grid, &self.fields.e);
        let (_, be) = diagnostics::field_energy(
            &self.grid,
            &self.fields,
            self.scheme,
            self.params.dt,
            self.params.c,
        )?;
        Ok(Energies {
            ke: diagnostics::kinetic_energy(&self.particles),
            ee_x,
            ee_y,
            be,
        })
    }

    /// Charge density at the current positions, filtered when enabled.
    pub fn charge_density(&self) -> Result<ScalarGrid> {
        let p = &self.particles;
        let rho = deposit_charge(&self.grid, &p.x, &p.y, p.weight(), self.params.workers);
        if self.params.filter {
            self.grid.binomial_filter(&rho)
        } else {
            Ok(rho)
        }
    }

    /// Diagnostics row for the current state. `delta` is left at zero.
    pub fn record(&self, report: StepReport) -> Result<DiagnosticsRecord> {
        let en = self.energies()?;
        let gauss = if self.scheme.is_electromagnetic() {
            0.0
        } else {
            diagnostics::gauss_residual(&self.grid, &self.fields.e, &self.charge_density()?)?
        };
        let rec = DiagnosticsRecord {
            step: self.step,
            t: self.time(),
            ke: en.ke,
            ee: en.ee(),
            ee_x: en.ee_x,
            ee_y: en.ee_y,
            be: en.be,
            te: en.total(),
            delta: 0.0,
            n_fallback: report.n_fallback,
            gauss_residual: gauss,
            max_gamma_dev: report.max_gamma_dev,
        };
        if !rec.te.is_finite() {
            return Err(Error::NonFinite {
                step: self.step,
                what: format!("ke={} ee={} be={}", rec.ke, rec.ee, rec.be),
            });
        }
        Ok(rec)
    }

    pub fn step(&mut self) -> Result<StepReport> {
        let report = match self.scheme {
            SchemeKind::BorisEs => self.step_boris_reference()?,
            SchemeKind::Esec1 => self.step_electrostatic(false)?,
            SchemeKind::Esec2 => self.step_electrostatic(true)?,
            SchemeKind::EmecCn | SchemeKind::EmecLf | SchemeKind::EmecPsatd => {
                self.step_electromagnetic()?
            }
        };
        self.step += 1;
        Ok(report)
    }

    fn filtered(&self, f: &ScalarGrid) -> Result<ScalarGrid> {
        if self.params.filter {
            self.grid.binomial_filter(f)
        } else {
            Ok(f.clone())
        }
    }

    fn filtered_vector(&self, v: &VectorGrid) -> Result<VectorGrid> {
        if self.params.filter {
            self.grid.filter_vector(v)
        } else {
            Ok(v.clone())
        }
    }

    fn current(&self, xs: &[f64], ys: &[f64], vxs: &[f64], vys: &[f64]) -> Result<VectorGrid> {
        let j = deposit_current(
            &self.grid,
            xs,
            ys,
            vxs,
            vys,
            self.particles.weight(),
            self.params.workers,
        );
        self.filtered_vector(&j)
    }

    /// Gathers `E` and `Bz` at the given positions. Electrostatic schemes
    /// pass `None` and see the uniform external field.
    fn gather_fields(
        &self,
        e: &VectorGrid,
        bz: Option<&ScalarGrid>,
        xs: &[f64],
        ys: &[f64],
    ) -> Result<(ParticleField, Vec<f64>)> {
        let ep = gather_vector(&self.grid, &self.filtered_vector(e)?, xs, ys)?;
        let bp = match bz {
            Some(b) => gather(&self.grid, &self.filtered(b)?, xs, ys)?,
            None => vec![self.params.b_ext; xs.len()],
        };
        Ok((ep, bp))
    }

    fn half_drift_positions(&self) -> (Vec<f64>, Vec<f64>) {
        let p = &self.particles;
        let h = 0.5 * self.params.dt;
        let (lx, ly) = (self.grid.lx(), self.grid.ly());
        let xs =
            p.x.iter()
                .zip(&p.vx)
                .map(|(x, v)| wrap(x + h * v, lx))
                .collect();
        let ys =
            p.y.iter()
                .zip(&p.vy)
                .map(|(y, v)| wrap(y + h * v, ly))
                .collect();
        (xs, ys)
    }

    fn provisional_velocities(&self, e: &ParticleField, bz: &[f64]) -> Velocities {
        let p = &self.particles;
        let dt = self.params.dt;
        let (x, y) = (0..p.len())
            .into_par_iter()
            .with_min_len(PAR_MIN_LEN)
            .map(|i| {
                let v = implicit_magnetic_half_velocity(
                    Vec2::new(p.vx[i], p.vy[i]),
                    Vec2::new(e.x[i], e.y[i]),
                    bz[i],
                    dt,
                );
                (v.x, v.y)
            })
            .unzip();
        Velocities { x, y }
    }

    /// Returns wrapped `(x^{n+1}, x^{n+1/2})` from `x^{n+1} = x^n + dt v*`.
    fn advance_positions(&self, v: &Velocities) -> (Positions, Positions) {
        let p = &self.particles;
        let dt = self.params.dt;
        let axis = |x: &[f64], v: &[f64], len: f64| -> (Vec<f64>, Vec<f64>) {
            x.iter()
                .zip(v)
                .map(|(&x0, &v)| {
                    let x1 = x0 + dt * v;
                    (wrap(x1, len), wrap(0.5 * (x0 + x1), len))
                })
                .unzip()
        };
        let (x1, xh) = axis(&p.x, &v.x, self.grid.lx());
        let (y1, yh) = axis(&p.y, &v.y, self.grid.ly());
        ((x1, y1), (xh, yh))
    }

    /// `v_dagger = v^n + dt (E + v* x B)` followed by the Gamma rescaling.
    fn finish_velocities(
        &mut self,
        v_star: &Velocities,
        e: &ParticleField,
        bz: &[f64],
    ) -> StepReport {
        let dt = self.params.dt;
        let p = &mut self.particles;
        let (fallbacks, dev) =
            p.vx.par_iter_mut()
                .zip(p.vy.par_iter_mut())
                .enumerate()
                .with_min_len(PAR_MIN_LEN)
                .map(|(i, (vx, vy))| {
                    let vn = Vec2::new(*vx, *vy);
                    let vs = Vec2::new(v_star.x[i], v_star.y[i]);
                    let force = Vec2::new(e.x[i], e.y[i]) + vs.cross_z(bz[i]);
                    let vd = vn + force.scale(dt);
                    let g = gamma_factor(vn, vs, vd);
                    let out = vd.scale(g.gamma);
                    *vx = out.x;
                    *vy = out.y;
                    if g.fallback {
                        (1usize, 0.0)
                    } else {
                        (0, (g.gamma - 1.0).abs())
                    }
                })
                .reduce(|| (0, 0.0), |a, b| (a.0 + b.0, a.1.max(b.1)));
        StepReport {
            n_fallback: fallbacks,
            max_gamma_dev: dev,
        }
    }

    fn step_electrostatic(&mut self, second_order: bool) -> Result<StepReport> {
        let dt = self.params.dt;
        let (xs, ys) = self.half_drift_positions();
        let e_star = if second_order {
            let p = &self.particles;
            let j0 = self.current(&xs, &ys, &p.vx, &p.vy)?;
            electric_field(
                &self.grid,
                &ampere_update(&self.grid, &self.fields.phi, &j0, 0.5 * dt)?,
            )?
        } else {
            self.fields.e.clone()
        };
        let (ep, bp) = self.gather_fields(&e_star, None, &xs, &ys)?;
        let v_star = self.provisional_velocities(&ep, &bp);
        let ((x1, y1), (xh, yh)) = self.advance_positions(&v_star);

        let j = self.current(&xh, &yh, &v_star.x, &v_star.y)?;
        let phi_new = ampere_update(&self.grid, &self.fields.phi, &j, dt)?;
        let e_half = electric_field(
            &self.grid,
            &ScalarGrid::midpoint(&self.fields.phi, &phi_new),
        )?;
        let (ep, bp) = self.gather_fields(&e_half, None, &xh, &yh)?;
        let report = self.finish_velocities(&v_star, &ep, &bp);

        self.particles.x = x1;
        self.particles.y = y1;
        self.fields.e = electric_field(&self.grid, &phi_new)?;
        self.fields.phi = phi_new;
        Ok(report)
    }

    fn step_electromagnetic(&mut self) -> Result<StepReport> {
        let (dt, c) = (self.params.dt, self.params.c);
        let grid = self.grid.clone();
        let (xs, ys) = self.half_drift_positions();
        let j0 = {
            let p = &self.particles;
            self.current(&xs, &ys, &p.vx, &p.vy)?
        };

        // Fields seen by the provisional push. The leapfrog scheme also
        // produces B^{n+1/2}, reused for the full step.
        let (e_star, b_star) = match self.scheme {
            SchemeKind::EmecCn => {
                let half = explicit_field_step(&grid, &self.fields, &j0, 0.5 * dt, c)?;
                (half.e, half.bz)
            }
            SchemeKind::EmecLf => {
                let b_half = faraday_update(&grid, &self.fields.bz, &self.fields.e, dt)?;
                (
                    ampere_maxwell_update(&grid, &self.fields.e, &b_half, &j0, 0.5 * dt, c)?,
                    b_half,
                )
            }
            SchemeKind::EmecPsatd => {
                let half = psatd_step(&grid, &self.fields, &j0, 0.5 * dt, c)?;
                (half.e, half.bz)
            }
            _ => unreachable!("electrostatic scheme in the electromagnetic step"),
        };
        let (ep, bp) = self.gather_fields(&e_star, Some(&b_star), &xs, &ys)?;
        let v_star = self.provisional_velocities(&ep, &bp);
        let ((x1, y1), (xh, yh)) = self.advance_positions(&v_star);

        let j = self.current(&xh, &yh, &v_star.x, &v_star.y)?;
        let (next, e_push, b_push) = match self.scheme {
            SchemeKind::EmecCn => {
                let next = cn_maxwell_step(&grid, &self.fields, &j, dt, c)?;
                let e_mid = VectorGrid::midpoint(&self.fields.e, &next.e);
                let b_mid = ScalarGrid::midpoint(&self.fields.bz, &next.bz);
                (next, e_mid, b_mid)
            }
            SchemeKind::EmecLf => {
                let e_new = ampere_maxwell_update(&grid, &self.fields.e, &b_star, &j, dt, c)?;
                let e_mid = VectorGrid::midpoint(&self.fields.e, &e_new);
                let next = FieldState {
                    e: e_new,
                    bz: b_star.clone(),
                    phi: self.fields.phi.clone(),
                };
                (next, e_mid, b_star)
            }
            SchemeKind::EmecPsatd => {
                let next = psatd_step(&grid, &self.fields, &j, dt, c)?;
                let e_avg = psatd_time_averaged_e(&grid, &self.fields, &j, dt, c)?;
                let b_mid = ScalarGrid::midpoint(&self.fields.bz, &next.bz);
                (next, e_avg, b_mid)
            }
            _ => unreachable!("electrostatic scheme in the electromagnetic step"),
        };
        let (ep, bp) = self.gather_fields(&e_push, Some(&b_push), &xh, &yh)?;
        let report = self.finish_velocities(&v_star, &ep, &bp);

        self.particles.x = x1;
        self.particles.y = y1;
        self.fields = next;
        Ok(report)
    }

    /// Drift-kick-drift Boris step with a Poisson solve at `x*`.
    fn step_boris_reference(&mut self) -> Result<StepReport> {
        let dt = self.params.dt;
        let (xs, ys) = self.half_drift_positions();
        let p = &self.particles;
        let rho = self.filtered(&deposit_charge(
            &self.grid,
            &xs,
            &ys,
            p.weight(),
            self.params.workers,
        ))?;
        let e = electric_field(&self.grid, &poisson_solve(&self.grid, &rho)?)?;
        // rho is already smooth; the field is gathered as solved
        let ep = gather_vector(&self.grid, &e, &xs, &ys)?;
        let b = self.params.b_ext;
        let (lx, ly) = (self.grid.lx(), self.grid.ly());
        let p = &mut self.particles;
        p.x.par_iter_mut()
            .zip(p.y.par_iter_mut())
            .zip(p.vx.par_iter_mut().zip(p.vy.par_iter_mut()))
            .enumerate()
            .with_min_len(PAR_MIN_LEN)
            .for_each(|(i, ((x, y), (vx, vy)))| {
                let (x1, v1) = boris_step(
                    Vec2::new(*x, *y),
                    Vec2::new(*vx, *vy),
                    Vec2::new(ep.x[i], ep.y[i]),
                    b,
                    dt,
                );
                *x = wrap(x1.x, lx);
                *y = wrap(x1.y, ly);
                *vx = v1.x;
                *vy = v1.y;
            });
        // Potential at the new positions, for the energy diagnostics.
        self.fields.phi = poisson_solve(&self.grid, &self.charge_density()?)?;
        self.fields.e = electric_field(&self.grid, &self.fields.phi)?;
        Ok(StepReport::default())
    }
}
