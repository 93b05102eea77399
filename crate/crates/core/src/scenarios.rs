//! Initial conditions for the three test problems and their linear-theory rates.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::fields::{electric_field, poisson_solve, FieldState};
use crate::grid::{Grid, ScalarGrid};
use crate::particles::{deposit_charge, ParticleSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Landau,
    TwoStream,
    Weibel,
}

impl std::str::FromStr for ScenarioKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "landau" => Ok(Self::Landau),
            "two_stream" | "twostream" => Ok(Self::TwoStream),
            "weibel" => Ok(Self::Weibel),
            other => Err(format!("unknown scenario `{other}`")),
        }
    }
}

/// Box, resolution and physical parameters of one test problem.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSpec {
    pub kind: ScenarioKind,
    pub nx: usize,
    pub ny: usize,
    pub lx: f64,
    pub ly: f64,
    /// Particles per cell.
    pub n_c: usize,
    pub alpha_x: f64,
    pub alpha_y: f64,
    /// Beam speed (two-stream).
    pub v_b: f64,
    /// Weibel thermal parameter; per-component variance is `beta / 2`.
    pub beta: f64,
    /// Fraction of Weibel particles in the `+v01` beam.
    pub delta: f64,
    pub v01: f64,
    pub v02: f64,
    /// Weibel seed amplitude of `Bz = b sin(k0 y)`.
    pub b: f64,
    pub k0: f64,
    pub quiet_start: bool,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Landau damping: `L = 22`, 32x32 cells, 500 particles per cell, `alpha = 0.05`.
    pub fn landau() -> Self {
        Self {
            kind: ScenarioKind::Landau,
            nx: 32,
            ny: 32,
            lx: 22.0,
            ly: 22.0,
            n_c: 500,
            alpha_x: 0.05,
            alpha_y: 0.05,
            v_b: 0.0,
            beta: 0.0,
            delta: 0.0,
            v01: 0.0,
            v02: 0.0,
            b: 0.0,
            k0: 0.0,
            quiet_start: false,
            seed: 1,
        }
    }

    /// Two-stream: `L = 32`, `v_b = 3.5`, `alpha_x = 0.01`.
    pub fn two_stream() -> Self {
        Self {
            kind: ScenarioKind::TwoStream,
            lx: 32.0,
            ly: 32.0,
            alpha_x: 0.01,
            alpha_y: 0.0,
            v_b: 3.5,
            ..Self::landau()
        }
    }

    /// Weibel Run 1 on a single column of 32 cells with 3200 particles per cell.
    pub fn weibel() -> Self {
        let k0 = 0.2;
        let ny = 32;
        let ly = TAU / k0;
        Self {
            kind: ScenarioKind::Weibel,
            nx: 1,
            ny,
            lx: ly / ny as f64,
            ly,
            n_c: 3200,
            alpha_x: 0.0,
            alpha_y: 0.0,
            v_b: 0.0,
            beta: 0.01,
            delta: 0.5,
            v01: 0.3,
            v02: 0.3,
            b: 0.001,
            k0,
            quiet_start: true,
            seed: 1,
        }
    }

    pub fn defaults(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::Landau => Self::landau(),
            ScenarioKind::TwoStream => Self::two_stream(),
            ScenarioKind::Weibel => Self::weibel(),
        }
    }

    pub fn n_particles(&self) -> usize {
        self.n_c * self.nx * self.ny
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.nx, self.ny, self.lx, self.ly)
    }

    pub fn validate(&self) -> Result<()> {
        let non_negative = [
            ("alpha_x", self.alpha_x),
            ("alpha_y", self.alpha_y),
            ("v_b", self.v_b),
            ("beta", self.beta),
            ("v01", self.v01),
            ("v02", self.v02),
            ("b", self.b),
            ("k0", self.k0),
        ];
        for (name, v) in non_negative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(invalid(
                    name,
                    format!("{v} must be finite and non-negative"),
                ));
            }
        }
        if self.n_c == 0 {
            return Err(invalid("n_c", "at least one particle per cell is required"));
        }
        if self.alpha_x >= 1.0 || self.alpha_y >= 1.0 {
            return Err(invalid("alpha", "density perturbation must stay below 1"));
        }
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(invalid(
                "delta",
                format!("{} is not a probability", self.delta),
            ));
        }
        if self.kind == ScenarioKind::Weibel {
            if !self.quiet_start {
                return Err(invalid(
                    "quiet_start",
                    "the Weibel problem requires a quiet start",
                ));
            }
            if self.nx != 1 {
                return Err(invalid(
                    "nx",
                    "the Weibel problem runs on a single column (nx = 1)",
                ));
            }
        }
        self.grid().map(|_| ())
    }
}

/// Grid, particles and fields at `t = 0`.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub grid: Grid,
    pub particles: ParticleSet,
    pub fields: FieldState,
}

/// Builds the initial state for `spec`. When `filter` is set the charge
/// density is binomially filtered before the initial Poisson solve.
pub fn initialize(spec: &ScenarioSpec, filter: bool) -> Result<Scenario> {
    match spec.kind {
        ScenarioKind::Landau => init_landau(spec, filter),
        ScenarioKind::TwoStream => init_two_stream(spec, filter),
        ScenarioKind::Weibel => init_weibel(spec),
    }
}

/// Maxwellian velocities with `(1 + alpha_x cos(k_x x))(1 + alpha_y cos(k_y y))` density.
pub fn init_landau(spec: &ScenarioSpec, filter: bool) -> Result<Scenario> {
    spec.validate()?;
    sample_perturbed(spec, filter, |rng| {
        (rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Two warm beams at `+-v_b` in x with equal probability.
pub fn init_two_stream(spec: &ScenarioSpec, filter: bool) -> Result<Scenario> {
    spec.validate()?;
    let v_b = spec.v_b;
    sample_perturbed(spec, filter, move |rng| {
        let drift = if rng.random_bool(0.5) { v_b } else { -v_b };
        let vx: f64 = rng.sample(StandardNormal);
        (drift + vx, rng.sample(StandardNormal))
    })
}

/// Quiet-start lattice with bi-Maxwellian beams and a seeded `Bz = b sin(k0 y)`.
pub fn init_weibel(spec: &ScenarioSpec) -> Result<Scenario> {
    spec.validate()?;
    let grid = spec.grid()?;
    let n = spec.n_particles();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let sigma = (0.5 * spec.beta).sqrt();
    let (nx, ny, n_c) = (spec.nx, spec.ny, spec.n_c);
    let mut set = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for ix in 0..nx {
        for iy in 0..ny {
            for p in 0..n_c {
                let offset = (p as f64 + 0.5) / n_c as f64;
                set.0.push(grid.node_x(ix));
                set.1.push((iy as f64 + offset) * grid.dy());
                let drift = if rng.random_bool(spec.delta) {
                    spec.v01
                } else {
                    -spec.v02
                };
                let gx: f64 = rng.sample(StandardNormal);
                let gy: f64 = rng.sample(StandardNormal);
                set.2.push(drift + sigma * gx);
                set.3.push(sigma * gy);
            }
        }
    }
    let particles = ParticleSet::new(&grid, set.0, set.1, set.2, set.3)?;
    let mut fields = FieldState::zeros(&grid);
    fields.bz = ScalarGrid::from_fn(&grid, |_, y| spec.b * (spec.k0 * y).sin());
    Ok(Scenario {
        grid,
        particles,
        fields,
    })
}

/// Solves `x + a sin(2 pi x / l) = target` on `[0, l)`, `|a| < l / (2 pi)`.
fn invert_perturbed_cdf(target: f64, a: f64, l: f64) -> f64 {
    let k = TAU / l;
    let mut x = target;
    for _ in 0..100 {
        let f = x + a * (k * x).sin() - target;
        let step = f / (1.0 + a * k * (k * x).cos());
        x -= step;
        if step.abs() <= 1e-15 * l {
            break;
        }
    }
    x
}

fn sample_perturbed(
    spec: &ScenarioSpec,
    filter: bool,
    mut velocity: impl FnMut(&mut ChaCha8Rng) -> (f64, f64),
) -> Result<Scenario> {
    let grid = spec.grid()?;
    let n = spec.n_particles();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let (lx, ly) = (spec.lx, spec.ly);
    let (ax, ay) = (spec.alpha_x * lx / TAU, spec.alpha_y * ly / TAU);
    let mut set = (
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
        Vec::with_capacity(n),
    );
    for _ in 0..n {
        let ux: f64 = rng.random();
        let uy: f64 = rng.random();
        set.0.push(invert_perturbed_cdf(ux * lx, ax, lx));
        set.1.push(invert_perturbed_cdf(uy * ly, ay, ly));
        let (vx, vy) = velocity(&mut rng);
        set.2.push(vx);
        set.3.push(vy);
    }
    let particles = ParticleSet::new(&grid, set.0, set.1, set.2, set.3)?;
    let fields = electrostatic_fields(&grid, &particles, filter, 1)?;
    Ok(Scenario {
        grid,
        particles,
        fields,
    })
}

/// Potential and field from a Poisson solve of the deposited (optionally
/// filtered) charge density.
pub fn electrostatic_fields(
    grid: &Grid,
    particles: &ParticleSet,
    filter: bool,
    workers: usize,
) -> Result<FieldState> {
    let mut rho = deposit_charge(
        grid,
        &particles.x,
        &particles.y,
        particles.weight(),
        workers,
    );
    if filter {
        rho = grid.binomial_filter(&rho)?;
    }
    let phi = poisson_solve(grid, &rho)?;
    Ok(FieldState {
        e: electric_field(grid, &phi)?,
        bz: ScalarGrid::zeros(grid),
        phi,
    })
}

/// Bohm-Gross frequency and weak-damping Landau rate `(omega, gamma)`.
pub fn theory_landau_rate(k: f64) -> (f64, f64) {
    let w2 = 1.0 + 3.0 * k * k;
    let gamma = (PI / 2.0).sqrt() * w2 / (2.0 * k.powi(3)) * (-w2 / (2.0 * k * k)).exp();
    (w2.sqrt(), gamma)
}

/// Growth rate from `1/(w + k v_b)^2 + 1/(w - k v_b)^2 = 1`; zero when stable.
pub fn theory_two_stream_rate(k: f64, v_b: f64) -> f64 {
    let a2 = (k * v_b).powi(2);
    let u_minus = a2 + 1.0 - (4.0 * a2 + 1.0).sqrt();
    if u_minus < 0.0 {
        (-u_minus).sqrt()
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use num_complex::Complex64;

    fn small(kind: ScenarioKind) -> ScenarioSpec {
        ScenarioSpec {
            nx: if kind == ScenarioKind::Weibel { 1 } else { 8 },
            ny: 8,
            n_c: 40,
            ..ScenarioSpec::defaults(kind)
        }
    }

    #[test]
    fn landau_rate_reference() {
        let (w, g) = theory_landau_rate(TAU / 22.0);
        assert_relative_eq!(w, 1.11566, max_relative = 1e-5);
        assert_relative_eq!(g, 0.01626, max_relative = 1e-3);
        assert!(theory_landau_rate(0.05).1 < 1e-50);
        assert!(theory_landau_rate(0.3).1 > theory_landau_rate(0.2).1);
    }

    #[test]
    fn two_stream_rate_reference() {
        let (k, v_b) = (TAU / 32.0, 3.5);
        let g = theory_two_stream_rate(k, v_b);
        assert_relative_eq!(g, 0.47693, max_relative = 1e-5);
        let w = Complex64::new(0.0, g);
        let kv = k * v_b;
        let residual = 1.0 / (w + kv).powi(2) + 1.0 / (w - kv).powi(2) - 1.0;
        assert!(residual.norm() < 1e-12);
        assert_eq!(theory_two_stream_rate(k, 0.0), 0.0);
        // a^2 >= 2 leaves both roots non-negative
        assert_eq!(theory_two_stream_rate(1.0, 2.0), 0.0);
    }

    #[test]
    fn quartic_oracle_agrees() {
        // Numerator of the dispersion relation in u = w^2:
        // u^2 - 2(a^2+1)u + a^4 - 2a^2 = 0. Check the larger root too.
        let a: f64 = TAU / 32.0 * 3.5;
        let (p, q) = (-2.0 * (a * a + 1.0), a.powi(4) - 2.0 * a * a);
        let disc = (p * p - 4.0 * q).sqrt();
        let roots = [(-p - disc) / 2.0, (-p + disc) / 2.0];
        assert_relative_eq!(
            (-roots[0]).sqrt(),
            theory_two_stream_rate(TAU / 32.0, 3.5),
            max_relative = 1e-12
        );
        assert!(roots[1] > 0.0);
    }

    #[test]
    fn inverse_cdf_round_trip() {
        let (a, l) = (0.05 * 22.0 / TAU, 22.0);
        for i in 0..50 {
            let target = l * i as f64 / 50.0;
            let x = invert_perturbed_cdf(target, a, l);
            assert!((x + a * (TAU * x / l).sin() - target).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let spec = small(ScenarioKind::Landau);
        let a = init_landau(&spec, true).unwrap();
        let b = init_landau(&spec, true).unwrap();
        assert_eq!(a.particles, b.particles);
        let other = init_landau(&ScenarioSpec { seed: 2, ..spec }, true).unwrap();
        assert_ne!(a.particles.x, other.particles.x);
    }

    #[test]
    fn unperturbed_landau_is_nearly_uniform() {
        let spec = ScenarioSpec {
            alpha_x: 0.0,
            alpha_y: 0.0,
            n_c: 400,
            ..small(ScenarioKind::Landau)
        };
        let s = init_landau(&spec, false).unwrap();
        let rho = deposit_charge(
            &s.grid,
            &s.particles.x,
            &s.particles.y,
            s.particles.weight(),
            1,
        );
        assert_relative_eq!(rho.mean(), 1.0, max_relative = 1e-12);
        // Poisson noise per node is about 1/sqrt(n_c)
        assert!(rho
            .values()
            .iter()
            .all(|r| (r - 1.0).abs() < 5.0 / (400f64).sqrt()));
    }

    #[test]
    fn landau_potential_solves_poisson() {
        let s = init_landau(&small(ScenarioKind::Landau), true).unwrap();
        assert!(s.fields.phi.mean().abs() < 1e-14);
        assert_eq!(s.particles.len(), 8 * 8 * 40);
        assert_relative_eq!(
            s.particles.weight() * s.particles.len() as f64,
            22.0 * 22.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn two_stream_beams_are_symmetric() {
        let spec = ScenarioSpec {
            n_c: 200,
            ..small(ScenarioKind::TwoStream)
        };
        let s = init_two_stream(&spec, true).unwrap();
        let n = s.particles.len() as f64;
        let mean = s.particles.vx.iter().sum::<f64>() / n;
        let var = 1.0 + spec.v_b * spec.v_b;
        assert!(mean.abs() < 5.0 * (var / n).sqrt());
        let fast = s.particles.vx.iter().filter(|v| v.abs() > 1.0).count() as f64;
        assert!(fast / n > 0.9);
    }

    #[test]
    fn two_stream_without_beams_is_maxwellian() {
        let spec = ScenarioSpec {
            v_b: 0.0,
            n_c: 200,
            ..small(ScenarioKind::TwoStream)
        };
        let s = init_two_stream(&spec, false).unwrap();
        let n = s.particles.len() as f64;
        let var = s.particles.vx.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var - 1.0).abs() < 5.0 * (2.0 / n).sqrt());
    }

    #[test]
    fn weibel_quiet_start_density_is_exact() {
        let spec = small(ScenarioKind::Weibel);
        let s = init_weibel(&spec).unwrap();
        let rho = deposit_charge(
            &s.grid,
            &s.particles.x,
            &s.particles.y,
            s.particles.weight(),
            1,
        );
        assert!(rho.values().iter().all(|r| (r - 1.0).abs() < 1e-13));
        assert_eq!(s.fields.e.norm_sq(), 0.0);
        assert_relative_eq!(s.fields.bz.max_abs(), 0.001, max_relative = 0.1);
    }

    #[test]
    fn weibel_velocity_moments() {
        let spec = ScenarioSpec {
            n_c: 2000,
            ..small(ScenarioKind::Weibel)
        };
        let s = init_weibel(&spec).unwrap();
        let n = s.particles.len() as f64;
        let var_y = s.particles.vy.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var_y - 0.005).abs() < 5.0 * 0.005 * (2.0 / n).sqrt());
        let var_x = s.particles.vx.iter().map(|v| v * v).sum::<f64>() / n;
        assert!((var_x - (0.005 + 0.09)).abs() < 0.005);
    }

    #[test]
    fn validation() {
        assert!(ScenarioSpec {
            n_c: 0,
            ..ScenarioSpec::landau()
        }
        .validate()
        .is_err());
        assert!(ScenarioSpec {
            alpha_x: -0.1,
            ..ScenarioSpec::landau()
        }
        .validate()
        .is_err());
        assert!(ScenarioSpec {
            quiet_start: false,
            ..ScenarioSpec::weibel()
        }
        .validate()
        .is_err());
        assert!(ScenarioSpec::weibel().validate().is_ok());
        assert_eq!(
            "two-stream".parse::<ScenarioKind>().unwrap(),
            ScenarioKind::TwoStream
        );
    }
}
