//! Time integration with diagnostics.
//!
//! Implicit midpoint (fixed-point solve) is the default; it is symplectic
//! for the constant Darboux structures. Classical RK4 serves as a
//! non-symplectic reference.

use std::fmt;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::ModelKind;
use crate::models::HamiltonianModel;
use crate::{Error, Field, ModelState, Result, Spectral};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    ImplicitMidpoint,
    Rk4,
}

impl Method {
    pub fn id(self) -> &'static str {
        match self {
            Method::ImplicitMidpoint => "implicit_midpoint",
            Method::Rk4 => "rk4",
        }
    }

    pub fn from_id(s: &str) -> Option<Self> {
        match s {
            "implicit_midpoint" => Some(Method::ImplicitMidpoint),
            "rk4" => Some(Method::Rk4),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub t_end: f64,
    pub fp_tol: f64,
    pub fp_max_iters: usize,
    pub diag_every: usize,
    /// Steps between stored snapshots; `0` stores none.
    pub snapshot_every: usize,
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64, t_end: f64) -> Self {
        IntegratorConfig {
            method,
            dt,
            t_end,
            fp_tol: 1e-12,
            fp_max_iters: 100,
            diag_every: 1,
            snapshot_every: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name: &'static str, reason: &str| Err(Error::InvalidParameter { name, reason: reason.into() });
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt", "must be positive and finite");
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return bad("t_end", "must be non-negative and finite");
        }
        if !(self.fp_tol > 0.0) {
            return bad("fp_tol", "must be positive");
        }
        if self.fp_max_iters == 0 {
            return bad("fp_max_iters", "must be at least 1");
        }
        if self.diag_every == 0 {
            return bad("diag_every", "must be at least 1");
        }
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

fn max_abs_all(s: &[Field]) -> f64 {
    s.iter().map(|f| f.max_abs()).fold(0.0, f64::max)
}

fn combine(base: &[Field], a: f64, dir: &[Field]) -> Vec<Field> {
    base.iter().zip(dir).map(|(b, d)| b.axpy(a, d)).collect()
}

/// One implicit-midpoint step `s' = s + dt f((s + s') / 2)`, solved by
/// fixed-point iteration. Returns the new state and the iteration count.
pub fn step_implicit_midpoint<F>(state: &[Field], rhs: F, dt: f64, tol: f64, max_iters: usize) -> Result<(Vec<Field>, usize)>
where
    F: Fn(&[Field]) -> Result<Vec<Field>>,
{
    let scale = 1.0f64.max(max_abs_all(state));
    let mut next = combine(state, dt, &rhs(state)?);
    let mut increment = f64::INFINITY;
    for it in 1..=max_iters {
        let mid: Vec<Field> = state.iter().zip(&next).map(|(a, b)| (a + b) * 0.5).collect();
        let cand = combine(state, dt, &rhs(&mid)?);
        increment = cand.iter().zip(&next).map(|(a, b)| (a - b).max_abs()).fold(0.0, f64::max);
        next = cand;
        if increment <= tol * scale {
            return Ok((next, it));
        }
        if !increment.is_finite() {
            break;
        }
    }
    Err(Error::FixedPoint { iterations: max_iters, increment })
}

/// One classical fourth-order Runge–Kutta step.
pub fn step_rk4<F>(state: &[Field], rhs: F, dt: f64) -> Result<Vec<Field>>
where
    F: Fn(&[Field]) -> Result<Vec<Field>>,
{
    let k1 = rhs(state)?;
    let k2 = rhs(&combine(state, 0.5 * dt, &k1))?;
    let k3 = rhs(&combine(state, 0.5 * dt, &k2))?;
    let k4 = rhs(&combine(state, dt, &k3))?;
    Ok(state
        .iter()
        .enumerate()
        .map(|(i, s)| s + &((&k1[i] + &(&k2[i] * 2.0) + (&k3[i] * 2.0) + &k4[i]) * (dt / 6.0)))
        .collect())
}

/// One step of the configured method; `dt` may be negative for backward
/// integration.
pub fn step(model: &dyn HamiltonianModel, ops: &Spectral, state: &[Field], cfg: &IntegratorConfig, dt: f64) -> Result<(Vec<Field>, Option<usize>)> {
    let rhs = |s: &[Field]| model.rhs(ops, s);
    let out = match cfg.method {
        Method::ImplicitMidpoint => {
            let (s, it) = step_implicit_midpoint(state, rhs, dt, cfg.fp_tol, cfg.fp_max_iters)?;
            (s, Some(it))
        }
        Method::Rk4 => (step_rk4(state, rhs, dt)?, None),
    };
    model.check_admissible(&out.0)?;
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRecord {
    pub step: usize,
    pub time: f64,
    pub energy: f64,
    pub kinetic: f64,
    pub potential: f64,
    pub mass: f64,
    pub momentum: f64,
    pub phi2_residual: Option<f64>,
    pub fp_iters: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub records: Vec<DiagnosticRecord>,
}

pub const DIAGNOSTICS_HEADER: &str = "step,time,energy,kinetic,potential,mass,momentum,phi2_residual,fp_iters";

fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

impl Diagnostics {
    pub fn record(model: &dyn HamiltonianModel, ops: &Spectral, state: &[Field], step: usize, time: f64, fp_iters: Option<usize>) -> Result<DiagnosticRecord> {
        let e = model.energy(ops, state)?;
        Ok(DiagnosticRecord {
            step,
            time,
            energy: e.total,
            kinetic: e.kinetic,
            potential: e.potential,
            mass: model.mass(ops, state),
            momentum: model.momentum(ops, state),
            phi2_residual: model.constraint_residual(ops, state)?,
            fp_iters,
        })
    }

    pub fn first(&self) -> Option<&DiagnosticRecord> {
        self.records.first()
    }

    pub fn last(&self) -> Option<&DiagnosticRecord> {
        self.records.last()
    }

    /// `max |H - H0| / |H0|` (absolute when `H0 = 0`).
    pub fn relative_energy_drift(&self) -> f64 {
        let Some(h0) = self.first().map(|r| r.energy) else { return 0.0 };
        let scale = if h0 != 0.0 { h0.abs() } else { 1.0 };
        self.records.iter().map(|r| (r.energy - h0).abs() / scale).fold(0.0, f64::max)
    }

    pub fn max_mass_change(&self) -> f64 {
        let Some(m0) = self.first().map(|r| r.mass) else { return 0.0 };
        self.records.iter().map(|r| (r.mass - m0).abs()).fold(0.0, f64::max)
    }

    pub fn max_momentum_change(&self) -> f64 {
        let Some(m0) = self.first().map(|r| r.momentum) else { return 0.0 };
        self.records.iter().map(|r| (r.momentum - m0).abs()).fold(0.0, f64::max)
    }

    pub fn max_phi2(&self) -> Option<f64> {
        self.records.iter().filter_map(|r| r.phi2_residual).reduce(f64::max)
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{DIAGNOSTICS_HEADER}")?;
        for r in &self.records {
            let phi = r.phi2_residual.map(fmt_float).unwrap_or_default();
            let fp = r.fp_iters.map(|v| v.to_string()).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{}",
                r.step,
                fmt_float(r.time),
                fmt_float(r.energy),
                fmt_float(r.kinetic),
                fmt_float(r.potential),
                fmt_float(r.mass),
                fmt_float(r.momentum),
                phi,
                fp
            )?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub step: usize,
    pub time: f64,
    pub fields: Vec<Field>,
}

impl Snapshot {
    pub fn file_name(&self) -> String {
        format!("snap_{:08}.csv", self.step)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, ops: &Spectral, names: &[&str]) -> io::Result<()> {
        writeln!(w, "x,{}", names.join(","))?;
        for i in 0..ops.n() {
            let mut line = fmt_float(ops.grid().x(i));
            for f in &self.fields {
                line.push(',');
                line.push_str(&fmt_float(f[i]));
            }
            writeln!(w, "{line}")?;
        }
        Ok(())
    }

    /// Writes `snap_<step>.csv` into `dir`.
    pub fn write_to_dir(&self, dir: &Path, ops: &Spectral, names: &[&str]) -> io::Result<PathBuf> {
        let path = dir.join(self.file_name());
        let file = std::fs::File::create(&path)?;
        self.write_csv(io::BufWriter::new(file), ops, names)?;
        Ok(path)
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    pub final_state: ModelState,
    pub diagnostics: Diagnostics,
    pub snapshots: Vec<Snapshot>,
}

/// A failed run with the diagnostics gathered before the failure.
#[derive(Clone, Debug)]
pub struct RunError {
    pub error: Error,
    pub step: usize,
    pub partial: Diagnostics,
}

impl fmt::Display for RunError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "run failed at step {}: {}", self.step, self.error)
    }
}

impl std::error::Error for RunError {}

impl From<Error> for RunError {
    fn from(error: Error) -> Self {
        RunError { error, step: 0, partial: Diagnostics::default() }
    }
}

/// Checks that the model can be evolved from `state` on this grid.
pub fn check_runnable(model: &dyn HamiltonianModel, ops: &Spectral, state: &ModelState) -> Result<()> {
    if state.kind() != model.kind() {
        return Err(Error::StateMismatch {
            model: model.kind().id(),
            reason: format!("initial state is of kind `{}`", state.kind().id()),
        });
    }
    if model.kind() == ModelKind::CcFour {
        return Err(Error::InvalidParameter {
            name: "model",
            reason: "the four-field system is constrained; evolve the reduced two-layer model instead".into(),
        });
    }
    let comps: Vec<Field> = state.components().into_iter().cloned().collect();
    for c in &comps {
        ops.grid().check(c)?;
    }
    model.check_admissible(&comps)?;
    let kc = model.cutoff_wavenumber(&comps);
    let kn = ops.grid().nyquist_wavenumber();
    if kn >= kc {
        return Err(Error::InvalidParameter {
            name: "grid",
            reason: format!(
                "Nyquist wavenumber {kn:.4} exceeds the well-posedness cutoff {kc:.4}; use a longer domain or fewer nodes"
            ),
        });
    }
    Ok(())
}

/// Integrates `model` from `initial`, recording diagnostics every
/// `diag_every` steps and at the final step.
pub fn run(
    model: &dyn HamiltonianModel,
    ops: &Spectral,
    initial: &ModelState,
    cfg: &IntegratorConfig,
) -> std::result::Result<RunOutput, RunError> {
    cfg.validate()?;
    check_runnable(model, ops, initial)?;
    let steps = cfg.steps();
    let mut state: Vec<Field> = initial.components().into_iter().cloned().collect();
    let mut diagnostics = Diagnostics::default();
    let mut snapshots = Vec::new();
    let fail = |error: Error, step: usize, partial: &Diagnostics| RunError { error, step, partial: partial.clone() };

    let rec = Diagnostics::record(model, ops, &state, 0, 0.0, None).map_err(|e| fail(e, 0, &diagnostics))?;
    diagnostics.records.push(rec);
    if cfg.snapshot_every > 0 {
        snapshots.push(Snapshot { step: 0, time: 0.0, fields: state.clone() });
    }
    for k in 1..=steps {
        let (next, iters) = step(model, ops, &state, cfg, cfg.dt).map_err(|e| fail(e, k, &diagnostics))?;
        state = next;
        let t = k as f64 * cfg.dt;
        if k % cfg.diag_every == 0 || k == steps {
            let rec = Diagnostics::record(model, ops, &state, k, t, iters).map_err(|e| fail(e, k, &diagnostics))?;
            diagnostics.records.push(rec);
        }
        if cfg.snapshot_every > 0 && (k % cfg.snapshot_every == 0 || k == steps) {
            snapshots.push(Snapshot { step: k, time: t, fields: state.clone() });
        }
    }
    let final_state = ModelState::from_components(model.kind(), state).map_err(|e| fail(e, steps, &diagnostics))?;
    Ok(RunOutput { final_state, diagnostics, snapshots })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::TwoLayerModel;
    use crate::{Grid, PhysicalParams, ScalingRegime};

    fn zero_rhs(s: &[Field]) -> Result<Vec<Field>> {
        Ok(s.iter().map(|f| Field::zeros(f.len())).collect())
    }

    #[test]
    fn zero_rhs_leaves_state_unchanged() {
        let s = vec![Field::constant(8, 0.3), Field::constant(8, -1.0)];
        let (a, it) = step_implicit_midpoint(&s, zero_rhs, 0.1, 1e-12, 10).unwrap();
        assert_eq!(a, s);
        assert_eq!(it, 1);
        assert_eq!(step_rk4(&s, zero_rhs, 0.1).unwrap(), s);
    }

    #[test]
    fn harmonic_oscillator_orders() {
        // x' = y, y' = -x
        let rhs = |s: &[Field]| Ok(vec![s[1].clone(), -&s[0]]);
        let exact = |t: f64| (t.cos(), -t.sin());
        let err = |dt: f64, rk: bool| {
            let mut s = vec![Field::constant(1, 1.0), Field::constant(1, 0.0)];
            let n = (1.0 / dt).round() as usize;
            for _ in 0..n {
                s = if rk { step_rk4(&s, rhs, dt).unwrap() } else { step_implicit_midpoint(&s, rhs, dt, 1e-14, 200).unwrap().0 };
            }
            let (x, y) = exact(1.0);
            ((s[0][0] - x).powi(2) + (s[1][0] - y).powi(2)).sqrt()
        };
        let r_im = err(0.02, false) / err(0.01, false);
        assert!((r_im - 4.0).abs() < 0.2, "{r_im}");
        let r_rk = err(0.02, true) / err(0.01, true);
        assert!((r_rk - 16.0).abs() < 1.0, "{r_rk}");
        // midpoint preserves the quadratic invariant
        let mut s = vec![Field::constant(1, 1.0), Field::constant(1, 0.0)];
        for _ in 0..1000 {
            s = step_implicit_midpoint(&s, rhs, 0.1, 1e-15, 200).unwrap().0;
        }
        assert!((s[0][0].powi(2) + s[1][0].powi(2) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nonconvergence_is_reported() {
        let rhs = |s: &[Field]| Ok(vec![&s[0] * 100.0]);
        let e = step_implicit_midpoint(&[Field::constant(1, 1.0)], rhs, 1.0, 1e-12, 5).unwrap_err();
        assert!(matches!(e, Error::FixedPoint { iterations: 5, .. }));
    }

    #[test]
    fn config_validation_and_steps() {
        let mut c = IntegratorConfig::new(Method::Rk4, 1e-3, 10.0);
        assert_eq!(c.steps(), 10_000);
        c.validate().unwrap();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        assert_eq!(Method::from_id("rk4"), Some(Method::Rk4));
        assert_eq!(Method::from_id(Method::ImplicitMidpoint.id()), Some(Method::ImplicitMidpoint));
    }

    #[test]
    fn rest_run_is_flat_and_csv_has_schema() {
        let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 5.0).unwrap();
        let r = ScalingRegime::lower_layer(&p);
        let ops = Spectral::new(Grid::new(16, 16.0).unwrap());
        let m = TwoLayerModel::new(&p, &r).unwrap();
        let z = Field::zeros(16);
        let st = ModelState::two_layer(z.clone(), z, &p, &r).unwrap();
        let mut cfg = IntegratorConfig::new(Method::ImplicitMidpoint, 0.1, 1.0);
        cfg.diag_every = 5;
        cfg.snapshot_every = 5;
        let out = run(&m, &ops, &st, &cfg).unwrap();
        assert_eq!(out.final_state, st);
        assert_eq!(out.diagnostics.records.len(), 3);
        assert_eq!(out.snapshots.len(), 3);
        assert_eq!(out.diagnostics.relative_energy_drift(), 0.0);
        let mut buf = Vec::new();
        out.diagnostics.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), DIAGNOSTICS_HEADER);
        let first: Vec<&str> = lines.next().unwrap().split(',').collect();
        assert_eq!(first.len(), 9);
        assert_eq!(first[8], "");
        assert_eq!(out.snapshots[1].file_name(), "snap_00000005.csv");
    }

    #[test]
    fn under_resolved_grid_is_rejected() {
        let p = PhysicalParams::new(1.0, 1.5, 1.5, 1.0, 1.0, 5.0).unwrap();
        let r = ScalingRegime::lower_layer(&p);
        let ops = Spectral::new(Grid::new(256, 10.0).unwrap());
        let m = TwoLayerModel::new(&p, &r).unwrap();
        let z = Field::zeros(256);
        let st = ModelState::two_layer(z.clone(), z, &p, &r).unwrap();
        let e = run(&m, &ops, &st, &IntegratorConfig::new(Method::Rk4, 0.1, 1.0)).unwrap_err();
        assert!(matches!(e.error, Error::InvalidParameter { name: "grid", .. }));
    }
}
