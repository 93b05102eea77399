//! Main time loop, CSV output and time-step sweeps.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::time::{Duration, Instant};

use crate::config::RunConfig;
use crate::diagnostics::{fill_delta, DiagnosticsRecord};
use crate::error::{invalid, Result};
use crate::grid::ScalarGrid;
use crate::integrator::{Simulation, StepReport};
use crate::scenarios::initialize;

pub const DIAGNOSTICS_HEADER: &str =
    "step,t,ke,ee,be,te,delta,n_fallback,gauss_residual,max_gamma_dev";
pub const SWEEP_HEADER: &str = "dt,max_delta,max_gamma_dev,total_fallbacks";

/// Outcome of one run. `records[0]` is the initial state.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub records: Vec<DiagnosticsRecord>,
    pub max_delta: f64,
    pub total_fallbacks: usize,
    pub max_step_fallbacks: usize,
    pub max_gamma_dev: f64,
    pub wall_time: Duration,
}

impl RunSummary {
    fn from_records(records: Vec<DiagnosticsRecord>, wall_time: Duration) -> Self {
        let steps = || records.iter().skip(1);
        Self {
            max_delta: records.iter().map(|r| r.delta).fold(0.0, f64::max),
            total_fallbacks: steps().map(|r| r.n_fallback).sum(),
            max_step_fallbacks: steps().map(|r| r.n_fallback).max().unwrap_or(0),
            max_gamma_dev: steps().map(|r| r.max_gamma_dev).fold(0.0, f64::max),
            wall_time,
            records,
        }
    }
}

/// Initial state of the configured scenario wrapped in a simulation.
pub fn build_simulation(config: &RunConfig) -> Result<Simulation> {
    config.validate()?;
    let s = initialize(&config.scenario, config.filter)?;
    Simulation::new(
        config.scheme,
        s.grid,
        s.particles,
        s.fields,
        config.params(),
    )
}

/// Runs `config.n_steps` steps. `observe` sees the simulation after each
/// step (and once before the first) together with its record.
pub fn simulate(
    config: &RunConfig,
    mut observe: impl FnMut(&Simulation, &DiagnosticsRecord) -> Result<()>,
) -> Result<RunSummary> {
    let start = Instant::now();
    let mut sim = build_simulation(config)?;
    let mut records = Vec::with_capacity(config.n_steps + 1);
    let first = sim.record(StepReport::default())?;
    observe(&sim, &first)?;
    records.push(first);
    for _ in 0..config.n_steps {
        let report = sim.step()?;
        let rec = sim.record(report)?;
        observe(&sim, &rec)?;
        records.push(rec);
    }
    fill_delta(&mut records)?;
    Ok(RunSummary::from_records(records, start.elapsed()))
}

/// Runs and, when `config.output_dir` is set, writes `diagnostics.csv` and
/// any requested field snapshots there.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let Some(dir) = config.output_dir.clone() else {
        return simulate(config, |_, _| Ok(()));
    };
    fs::create_dir_all(&dir)?;
    let stride = config.snapshot_stride;
    let summary = simulate(config, |sim, rec| {
        if stride > 0 && rec.step % stride == 0 {
            write_snapshot(&dir, sim)?;
        }
        Ok(())
    })?;
    write_diagnostics_csv(dir.join("diagnostics.csv"), &summary.records)?;
    Ok(summary)
}

fn write_snapshot(dir: &Path, sim: &Simulation) -> Result<()> {
    let step = sim.step_index();
    let f = sim.fields();
    write_grid_csv(dir.join(format!("Ex_{step}.csv")), &f.e.x)?;
    write_grid_csv(dir.join(format!("Ey_{step}.csv")), &f.e.y)?;
    if sim.scheme().is_electromagnetic() {
        write_grid_csv(dir.join(format!("Bz_{step}.csv")), &f.bz)?;
    } else {
        write_grid_csv(dir.join(format!("phi_{step}.csv")), &f.phi)?;
    }
    Ok(())
}

/// 17 significant digits, enough to round-trip an `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One line per `x` index, `ny` comma-separated values.
pub fn write_grid_csv(path: impl AsRef<Path>, f: &ScalarGrid) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    let (_, ny) = f.shape();
    for row in f.values().chunks(ny) {
        let line: Vec<String> = row.iter().map(|v| fmt_f64(*v)).collect();
        writeln!(w, "{}", line.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Writes one row per step (the initial state is omitted).
pub fn write_diagnostics_csv(path: impl AsRef<Path>, records: &[DiagnosticsRecord]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{DIAGNOSTICS_HEADER}")?;
    for r in records.iter().filter(|r| r.step > 0) {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.step,
            fmt_f64(r.t),
            fmt_f64(r.ke),
            fmt_f64(r.ee),
            fmt_f64(r.be),
            fmt_f64(r.te),
            fmt_f64(r.delta),
            r.n_fallback,
            fmt_f64(r.gauss_residual),
            fmt_f64(r.max_gamma_dev),
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepRow {
    pub dt: f64,
    pub max_delta: f64,
    pub max_gamma_dev: f64,
    pub total_fallbacks: usize,
}

/// Reruns `config` at each time step with the end time `n_steps * dt` held fixed.
pub fn sweep_dt(config: &RunConfig, dts: &[f64]) -> Result<Vec<SweepRow>> {
    if dts.len() < 2 {
        return Err(invalid("dt", "a sweep needs at least two time steps"));
    }
    let end = config.n_steps as f64 * config.dt;
    dts.iter()
        .map(|&dt| {
            let mut c = config.clone();
            c.dt = dt;
            c.n_steps = ((end / dt).round() as usize).max(1);
            c.output_dir = None;
            let s = simulate(&c, |_, _| Ok(()))?;
            Ok(SweepRow {
                dt,
                max_delta: s.max_delta,
                max_gamma_dev: s.max_gamma_dev,
                total_fallbacks: s.total_fallbacks,
            })
        })
        .collect()
}

pub fn write_sweep_csv(path: impl AsRef<Path>, rows: &[SweepRow]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "{SWEEP_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(r.dt),
            fmt_f64(r.max_delta),
            fmt_f64(r.max_gamma_dev),
            r.total_fallbacks
        )?;
    }
    w.flush()?;
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// `(slope, intercept)` of the least-squares line through the points.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
