//! Periodic 2D2V particle-in-cell simulation with explicit energy-conserving
//! time integration.
//!
//! The conserving schemes push particles with a half-step provisional
//! velocity and then rescale each velocity by a scalar `Gamma` so that the
//! particle kinetic energy change matches the work done by the field. Paired
//! with field updates whose energy identity uses the same current, the total
//! energy is conserved to round-off.
//!
//! | scheme        | fields                              |
//! |---------------|-------------------------------------|
//! | `esec1`       | Ampere-form potential update        |
//! | `esec2`       | as `esec1` with a half-step field predictor |
//! | `emec_cn`     | Crank-Nicolson Maxwell              |
//! | `emec_lf`     | leapfrog Maxwell                    |
//! | `emec_psatd`  | analytic (PSATD) Maxwell            |
//! | `boris_es`    | Poisson solve with a Boris push (reference) |

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod fields;
pub mod grid;
pub mod integrator;
pub mod particles;
pub mod pushers;
pub mod runner;
pub mod scenarios;

pub use config::{load_config, ConfigError, RunConfig};
pub use diagnostics::DiagnosticsRecord;
pub use error::{Error, Result};
pub use fields::FieldState;
pub use grid::{Grid, ScalarGrid, VectorGrid};
pub use integrator::{Energies, SchemeKind, SchemeParams, Simulation, StepReport};
pub use particles::ParticleSet;
pub use pushers::{GammaResult, Vec2};
pub use runner::{run, simulate, sweep_dt, RunSummary, SweepRow};
pub use scenarios::{ScenarioKind, ScenarioSpec};
