use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use stratwave::domain::ModelKind;
use stratwave::timeloop::run;
use stratwave::verify::{self, model_gradient_mismatch, random_field, RatioStudy};
use stratwave::{Error, Field, ModelState, Spectral};

use crate::config::{GradientScope, InitialSpec, RunConfig, Setup};

/// Failure of a command, mapped to the process exit code.
#[derive(Debug)]
pub enum CommandError {
    /// A check ran and did not meet its threshold.
    CheckFailed(String),
    /// Bad input, I/O problem or a failed computation.
    Fatal(String),
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CommandError::CheckFailed(_) => 1,
            CommandError::Fatal(_) => 2,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CommandError::CheckFailed(m) => write!(f, "check failed: {m}"),
            CommandError::Fatal(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CommandError {
    fn from(e: Error) -> Self {
        CommandError::Fatal(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> CommandError + '_ {
    move |e| CommandError::Fatal(format!("{}: {e}", path.display()))
}

pub struct Context {
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub quiet: bool,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn out_dir(&self) -> Result<Option<&Path>, CommandError> {
        match &self.out {
            None => Ok(None),
            Some(p) => {
                fs::create_dir_all(p).map_err(io_err(p))?;
                Ok(Some(p.as_path()))
            }
        }
    }
}

/// Reads a snapshot-format CSV into a state of the configured model.
pub fn load_state(path: &Path, cfg: &RunConfig, ops: &Spectral) -> Result<ModelState, CommandError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let bad = |line: usize, msg: String| CommandError::Fatal(format!("{}:{line}: {msg}", path.display()));
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let expected: Vec<&str> = std::iter::once("x").chain(cfg.model.component_names().iter().copied()).collect();
    if names != expected {
        return Err(bad(1, format!("header `{header}` does not match `{}`", expected.join(","))));
    }
    let mut cols: Vec<Vec<f64>> = vec![Vec::new(); expected.len() - 1];
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != expected.len() {
            return Err(bad(i + 1, format!("expected {} columns, found {}", expected.len(), vals.len())));
        }
        for (c, v) in vals[1..].iter().enumerate() {
            let x: f64 = v.trim().parse().map_err(|_| bad(i + 1, format!("invalid number `{v}`")))?;
            cols[c].push(x);
        }
    }
    if cols[0].len() != ops.n() {
        return Err(bad(1, format!("{} rows, but the grid has {} nodes", cols[0].len(), ops.n())));
    }
    let comps: Vec<Field> = cols.into_iter().map(Field::new).collect();
    if cfg.model == ModelKind::TwoLayer {
        let mut it = comps.into_iter();
        let regime = cfg.regime()?;
        return Ok(ModelState::two_layer(it.next().unwrap(), it.next().unwrap(), &cfg.params, &regime)?);
    }
    Ok(ModelState::from_components(cfg.model, comps)?)
}

pub fn setup(cfg: &RunConfig, config_dir: &Path) -> Result<Setup, CommandError> {
    let state = match &cfg.initial {
        InitialSpec::File { path } => {
            let p = config_dir.join(path);
            Some(load_state(&p, cfg, &cfg.spectral()?)?)
        }
        _ => None,
    };
    Ok(cfg.setup(state)?)
}

pub fn cmd_run(cfg: &RunConfig, config_dir: &Path, ctx: &Context) -> Result<(), CommandError> {
    if cfg.model == ModelKind::CcFour {
        return Err(CommandError::Fatal(
            "the four-field system is constrained and cannot be evolved directly; run `two_layer` instead".into(),
        ));
    }
    let s = setup(cfg, config_dir)?;
    let out_dir = ctx.out.clone().unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&out_dir).map_err(io_err(&out_dir))?;
    let resolved = out_dir.join("run.conf");
    fs::write(&resolved, cfg.to_text()).map_err(io_err(&resolved))?;
    let diag_path = out_dir.join(&cfg.output.diagnostics);
    let write_diag = |d: &stratwave::timeloop::Diagnostics| -> Result<(), CommandError> {
        let f = fs::File::create(&diag_path).map_err(io_err(&diag_path))?;
        d.write_csv(io::BufWriter::new(f)).map_err(io_err(&diag_path))
    };
    let output = match run(s.model.as_ref(), &s.ops, &s.state, &cfg.integrator) {
        Ok(o) => o,
        Err(e) => {
            write_diag(&e.partial)?;
            return Err(CommandError::Fatal(format!("{e} (partial diagnostics in {})", diag_path.display())));
        }
    };
    write_diag(&output.diagnostics)?;
    if !output.snapshots.is_empty() {
        let dir = out_dir.join(&cfg.output.snapshots);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let names = cfg.model.component_names();
        for snap in &output.snapshots {
            snap.write_to_dir(&dir, &s.ops, names).map_err(io_err(&dir))?;
        }
    }
    let d = &output.diagnostics;
    let mut summary = format!(
        "{} steps of {} with {}: relative energy drift {:.3e}, mass change {:.3e}, momentum change {:.3e}",
        cfg.integrator.steps(),
        cfg.model.id(),
        cfg.integrator.method.id(),
        d.relative_energy_drift(),
        d.max_mass_change(),
        d.max_momentum_change()
    );
    if let Some(phi2) = d.max_phi2() {
        let _ = write!(summary, ", max constraint residual {phi2:.3e}");
    }
    ctx.say(summary);
    ctx.say(format!("diagnostics written to {}", diag_path.display()));
    Ok(())
}

fn random_state(cfg: &RunConfig, ops: &Spectral, seed: u64) -> Result<Vec<Field>, CommandError> {
    let regime = cfg.regime()?;
    let thin = match cfg.model {
        ModelKind::TwoLayer => {
            let (a1, a2) = regime.rest_thicknesses(&cfg.params);
            a1.min(a2)
        }
        _ => cfg.rest_levels()?.iter().filter(|(l, _)| *l > 0.0).map(|(l, _)| *l).fold(f64::INFINITY, f64::min),
    };
    Ok(cfg
        .rest_levels()?
        .into_iter()
        .enumerate()
        .map(|(i, (level, _))| {
            let amp = if i % 2 == 0 { 0.2 * thin } else { 0.5 };
            random_field(ops.grid(), seed.wrapping_mul(31).wrapping_add(i as u64), level, amp, 4)
        })
        .collect())
}

pub fn cmd_check_gradients(cfg: &RunConfig, ctx: &Context) -> Result<(), CommandError> {
    let states = cfg.checks.states;
    let (worst, lines) = match cfg.checks.gradients {
        GradientScope::All => {
            let r = verify::gradient_suite(ctx.seed, states)?;
            ctx.say(r.summary());
            let lines: Vec<String> =
                r.cases.iter().map(|c| format!("{},{},{},{:.16e}", c.functional, c.eps, c.seed, c.mismatch)).collect();
            (r.worst(), lines)
        }
        GradientScope::Model => {
            let ops = cfg.spectral()?;
            let model = cfg.build_model()?;
            let regime = cfg.regime()?;
            let mut lines = Vec::new();
            let mut worst: f64 = 0.0;
            for k in 0..states as u64 {
                let seed = ctx.seed.wrapping_add(k);
                let st = random_state(cfg, &ops, seed)?;
                let m = model_gradient_mismatch(model.as_ref(), &ops, &st)?;
                worst = worst.max(m);
                lines.push(format!("{},{},{},{:.16e}", cfg.model.id(), regime.epsilon, seed, m));
            }
            ctx.say(format!("{}: {states} random states, worst relative mismatch {worst:.3e}", cfg.model.id()));
            (worst, lines)
        }
    };
    if let Some(dir) = ctx.out_dir()? {
        let path = dir.join("gradients.csv");
        let mut text = String::from("functional,eps,seed,mismatch\n");
        for l in lines {
            text.push_str(&l);
            text.push('\n');
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    if worst > verify::GRADIENT_TOL {
        return Err(CommandError::CheckFailed(format!("gradient mismatch {worst:.3e} exceeds {:.0e}", verify::GRADIENT_TOL)));
    }
    Ok(())
}

struct Tally {
    failed: Vec<&'static str>,
    convergence: Vec<(String, f64, f64)>,
}

impl Tally {
    fn check(&mut self, ctx: &Context, name: &'static str, passed: bool, summary: String) {
        ctx.say(format!("{} {name}: {summary}", if passed { "PASS" } else { "FAIL" }));
        if !passed {
            self.failed.push(name);
        }
    }

    fn ratio(&mut self, ctx: &Context, name: &'static str, study: &RatioStudy) {
        for (p, r) in study.params.iter().zip(&study.residuals) {
            self.convergence.push((study.label.to_string(), *p, *r));
        }
        self.check(ctx, name, study.passed(), study.summary());
    }
}

pub fn cmd_check_equivalence(cfg: &RunConfig, ctx: &Context) -> Result<(), CommandError> {
    let c = &cfg.checks;
    let mut t = Tally { failed: Vec::new(), convergence: Vec::new() };
    if c.classical {
        t.ratio(ctx, "classical", &verify::classical_equivalence_study()?);
    }
    if c.boussinesq {
        let a = verify::dispersionless_check(ctx.seed)?;
        t.check(
            ctx,
            "dispersionless",
            a.passed(),
            format!("deep-water gap {:.3e}, two-layer gap {:.3e}", a.deep_water_gap, a.two_layer_gap),
        );
        let (x, f) = verify::boussinesq_residuals()?;
        t.ratio(ctx, "boussinesq_xxt", &x);
        t.ratio(ctx, "boussinesq_favored", &f);
    }
    if c.dirac {
        let r = verify::dirac_study(ctx.seed, 10)?;
        t.check(ctx, "dirac", r.passed(), r.summary());
    }
    if c.restricted {
        let r = verify::restricted_identity(ctx.seed, c.states, cfg.params.h2 / cfg.params.l)?;
        t.check(ctx, "restricted", r.passed(), r.summary());
    }
    if c.propagation {
        let r = verify::constraint_propagation(10.0, 0.01)?;
        for (p, v) in r.ratio.params.iter().zip(&r.ratio.residuals) {
            t.convergence.push((r.ratio.label.to_string(), *p, *v));
        }
        t.check(ctx, "propagation", r.passed(), r.summary());
    }
    if c.round_trips {
        let r = verify::round_trips(ctx.seed)?;
        for trip in &r.trips {
            for (p, v) in verify::EPS_LADDER.iter().zip(&trip.residuals) {
                t.convergence.push((trip.label.to_string(), *p, *v));
            }
        }
        t.check(ctx, "round_trips", r.passed(), r.summary());
    }
    if let Some(dir) = ctx.out_dir()? {
        let path = dir.join("convergence.csv");
        let mut text = String::from("study,eps,residual\n");
        for (s, p, r) in &t.convergence {
            let _ = writeln!(text, "{s},{p},{r:.16e}");
        }
        fs::write(&path, text).map_err(io_err(&path))?;
    }
    if t.failed.is_empty() {
        Ok(())
    } else {
        Err(CommandError::CheckFailed(t.failed.join(", ")))
    }
}

pub fn cmd_limit_study(cfg: &RunConfig, ctx: &Context) -> Result<(), CommandError> {
    let mut studies = vec![("limit_air_water.csv", verify::air_water_limit(ctx.seed, cfg.limit.eps, cfg.params.rho2)?)];
    if cfg.limit.deep_water {
        studies.push(("limit_deep_water.csv", verify::deep_water_limit(ctx.seed, cfg.limit.eps)?));
    }
    let dir = ctx.out_dir()?;
    let mut failed = Vec::new();
    for (file, s) in &studies {
        match dir {
            Some(d) => {
                let path = d.join(file);
                let f = fs::File::create(&path).map_err(io_err(&path))?;
                s.write_csv(io::BufWriter::new(f)).map_err(io_err(&path))?;
            }
            None => {
                let stdout = io::stdout();
                let mut lock = stdout.lock();
                let _ = writeln!(lock, "# {}", s.label);
                s.write_csv(&mut lock).map_err(|e| CommandError::Fatal(e.to_string()))?;
            }
        }
        ctx.say(format!("{} {}", if s.passed() { "PASS" } else { "FAIL" }, s.summary()));
        if !s.passed() {
            failed.push(s.label);
        }
    }
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CommandError::CheckFailed(failed.join(", ")))
    }
}
