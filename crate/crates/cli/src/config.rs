//! Sectioned `key = value` run configuration.
//!
//! ```text
//! # comment
//! [model]
//! kind = two_layer
//!
//! [params]
//! rho1 = 1.0
//! rho2 = 1.5
//! h1 = 1.5
//! h2 = 1.0
//! g = 1.0
//! length_scale = 5.0
//! ```
//!
//! Required keys: `model.kind` and every key of `[params]`. All other keys
//! are optional; their defaults are listed in the README and reproduced by
//! [`RunConfig::to_text`].

use std::collections::BTreeMap;
use std::fmt;

use stratwave::domain::ModelKind;
use stratwave::energetics::{CcParams, DeepWaterParams, SgnParams};
use stratwave::models::{build_model, HamiltonianModel};
use stratwave::timeloop::{check_runnable, IntegratorConfig, Method};
use stratwave::{Error, Field, Grid, ModelState, PhysicalParams, ScalingRegime, Spectral, VerticalScale};

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub line: Option<usize>,
    pub key: Option<String>,
    pub message: String,
}

impl ConfigError {
    fn at(line: usize, message: impl Into<String>) -> Self {
        ConfigError { line: Some(line), key: None, message: message.into() }
    }

    fn key(line: Option<usize>, key: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError { line, key: Some(key.into()), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(l) = self.line {
            write!(f, "line {l}: ")?;
        }
        if let Some(k) = &self.key {
            write!(f, "{k}: ")?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScalingSpec {
    pub vertical: VerticalScale,
    /// Deep-water exponent in `delta = eps^(2 - a)`.
    pub a: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridSpec {
    pub n: usize,
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum InitialSpec {
    Rest,
    Gaussian { amplitude: f64, width: f64, center: f64, momentum: f64 },
    Cosine { amplitude: f64, wavenumber: f64, momentum: f64 },
    /// Snapshot-format CSV (`x,<field names>`).
    File { path: String },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub diagnostics: String,
    pub snapshots: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GradientScope {
    /// The configured model only.
    Model,
    /// All five energy functionals over the standard dispersion ladder.
    All,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChecksSpec {
    pub states: usize,
    pub gradients: GradientScope,
    pub classical: bool,
    pub boussinesq: bool,
    pub dirac: bool,
    pub restricted: bool,
    pub propagation: bool,
    pub round_trips: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitSpec {
    pub eps: f64,
    pub deep_water: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub model: ModelKind,
    pub params: PhysicalParams,
    pub scaling: ScalingSpec,
    pub grid: GridSpec,
    pub initial: InitialSpec,
    pub integrator: IntegratorConfig,
    pub output: OutputSpec,
    pub checks: ChecksSpec,
    pub limit: LimitSpec,
}

/// Everything needed to start a simulation.
pub struct Setup {
    pub model: Box<dyn HamiltonianModel>,
    pub ops: Spectral,
    pub state: ModelState,
}

// ---------------------------------------------------------------------------
// tokenizer

#[derive(Debug)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

#[derive(Debug)]
struct Section {
    line: usize,
    entries: BTreeMap<String, Entry>,
}

const SECTIONS: [&str; 9] = ["model", "params", "scaling", "grid", "initial", "integrator", "output", "checks", "limit"];

fn strip_comment(line: &str) -> &str {
    let mut quoted = false;
    for (i, c) in line.char_indices() {
        match c {
            '"' => quoted = !quoted,
            '#' if !quoted => return &line[..i],
            _ => {}
        }
    }
    line
}

fn tokenize(text: &str) -> Result<BTreeMap<String, Section>, ConfigError> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError::at(lineno, "unterminated section header"))?
                .trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::at(lineno, format!("unknown section [{name}]")));
            }
            if let Some(prev) = sections.get(name) {
                return Err(ConfigError::at(lineno, format!("section [{name}] already opened on line {}", prev.line)));
            }
            sections.insert(name.to_string(), Section { line: lineno, entries: BTreeMap::new() });
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError::at(lineno, format!("expected `key = value`, found `{line}`")))?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || !key.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            return Err(ConfigError::at(lineno, format!("invalid key `{key}`")));
        }
        if value.is_empty() {
            return Err(ConfigError::at(lineno, format!("missing value for `{key}`")));
        }
        let value = match value.strip_prefix('"') {
            Some(v) => v
                .strip_suffix('"')
                .ok_or_else(|| ConfigError::at(lineno, "unterminated string"))?
                .to_string(),
            None => value.to_string(),
        };
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError::at(lineno, format!("key `{key}` appears before any section header")))?;
        let entries = &mut sections.get_mut(section).expect("section exists").entries;
        if let Some(prev) = entries.get(key) {
            return Err(ConfigError::at(lineno, format!("duplicate key `{key}` (first set on line {})", prev.line)));
        }
        entries.insert(key.to_string(), Entry { value, line: lineno, used: false });
    }
    Ok(sections)
}

// ---------------------------------------------------------------------------
// typed access

struct Reader {
    sections: BTreeMap<String, Section>,
}

impl Reader {
    fn raw(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.entries.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn line_of(&self, section: &str, key: &str) -> Option<usize> {
        self.sections.get(section)?.entries.get(key).map(|e| e.line)
    }

    fn parsed<T>(&mut self, section: &str, key: &str, what: &str, parse: impl Fn(&str) -> Option<T>) -> Result<Option<T>, ConfigError> {
        match self.raw(section, key) {
            None => Ok(None),
            Some((v, line)) => parse(&v)
                .map(Some)
                .ok_or_else(|| ConfigError::key(Some(line), format!("{section}.{key}"), format!("expected {what}, found `{v}`"))),
        }
    }

    fn number(&mut self, section: &str, key: &str) -> Result<Option<f64>, ConfigError> {
        self.parsed(section, key, "a number", parse_number)
    }

    fn integer(&mut self, section: &str, key: &str) -> Result<Option<usize>, ConfigError> {
        self.parsed(section, key, "a non-negative integer", |s| s.parse::<usize>().ok())
    }

    fn boolean(&mut self, section: &str, key: &str) -> Result<Option<bool>, ConfigError> {
        self.parsed(section, key, "`true` or `false`", |s| match s {
            "true" => Some(true),
            "false" => Some(false),
            _ => None,
        })
    }

    fn string(&mut self, section: &str, key: &str) -> Option<String> {
        self.raw(section, key).map(|(v, _)| v)
    }

    fn required<T>(&self, v: Option<T>, section: &str, key: &str) -> Result<T, ConfigError> {
        v.ok_or_else(|| {
            let line = self.sections.get(section).map(|s| s.line);
            ConfigError::key(line, format!("{section}.{key}"), "required key is missing")
        })
    }

    fn finish(&self) -> Result<(), ConfigError> {
        for (name, s) in &self.sections {
            if let Some((k, e)) = s.entries.iter().find(|(_, e)| !e.used) {
                return Err(ConfigError::at(e.line, format!("unknown key `{k}` in [{name}]")));
            }
        }
        Ok(())
    }
}

/// Decimal or scientific notation; rejects `inf`, `nan` and hex.
fn parse_number(s: &str) -> Option<f64> {
    let ok = !s.is_empty()
        && s.chars().all(|c| c.is_ascii_digit() || matches!(c, '+' | '-' | '.' | 'e' | 'E'))
        && s.chars().any(|c| c.is_ascii_digit());
    if !ok {
        return None;
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn core_key(name: &str) -> &str {
    match name {
        "L" => "length_scale",
        other => other,
    }
}

// ---------------------------------------------------------------------------
// parse

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut r = Reader { sections: tokenize(text)? };

    let kind_raw = r.raw("model", "kind");
    let model = match kind_raw {
        None => return Err(r.required::<()>(None, "model", "kind").unwrap_err()),
        Some((v, line)) => ModelKind::from_id(&v).ok_or_else(|| {
            let ids: Vec<&str> = ModelKind::ALL.iter().map(|k| k.id()).collect();
            ConfigError::key(Some(line), "model.kind", format!("unknown model `{v}` (expected one of {})", ids.join(", ")))
        })?,
    };

    let mut p = [0.0; 6];
    for (slot, key) in p.iter_mut().zip(["rho1", "rho2", "h1", "h2", "g", "length_scale"]) {
        let v = r.number("params", key)?;
        *slot = r.required(v, "params", key)?;
    }
    let params = PhysicalParams::new(p[0], p[1], p[2], p[3], p[4], p[5]).map_err(|e| core_error(&r, "params", e))?;

    let default_scale = if model == ModelKind::DeepWater { VerticalScale::UpperLayer } else { VerticalScale::LowerLayer };
    let vertical = match r.raw("scaling", "vertical") {
        None => default_scale,
        Some((v, line)) => match v.as_str() {
            "lower" => VerticalScale::LowerLayer,
            "upper" => VerticalScale::UpperLayer,
            _ => return Err(ConfigError::key(Some(line), "scaling.vertical", format!("expected `lower` or `upper`, found `{v}`"))),
        },
    };
    let scaling = ScalingSpec { vertical, a: r.number("scaling", "a")?.unwrap_or(1.0) };

    let grid = GridSpec {
        n: r.integer("grid", "n")?.unwrap_or(128),
        length: r.number("grid", "length")?.unwrap_or(64.0),
    };

    let initial = parse_initial(&mut r)?;

    let method = match r.raw("integrator", "method") {
        None => Method::ImplicitMidpoint,
        Some((v, line)) => Method::from_id(&v).ok_or_else(|| {
            ConfigError::key(Some(line), "integrator.method", format!("expected `implicit_midpoint` or `rk4`, found `{v}`"))
        })?,
    };
    let mut integrator = IntegratorConfig::new(method, 1e-3, 10.0);
    if let Some(v) = r.number("integrator", "dt")? {
        integrator.dt = v;
    }
    if let Some(v) = r.number("integrator", "t_end")? {
        integrator.t_end = v;
    }
    if let Some(v) = r.number("integrator", "fp_tol")? {
        integrator.fp_tol = v;
    }
    if let Some(v) = r.integer("integrator", "fp_max_iters")? {
        integrator.fp_max_iters = v;
    }
    if let Some(v) = r.integer("integrator", "diag_every")? {
        integrator.diag_every = v;
    }
    if let Some(v) = r.integer("integrator", "snapshot_every")? {
        integrator.snapshot_every = v;
    }

    let output = OutputSpec {
        diagnostics: r.string("output", "diagnostics").unwrap_or_else(|| "diagnostics.csv".into()),
        snapshots: r.string("output", "snapshots").unwrap_or_else(|| "snapshots".into()),
    };

    let gradients = match r.raw("checks", "gradients") {
        None => GradientScope::Model,
        Some((v, line)) => match v.as_str() {
            "model" => GradientScope::Model,
            "all" => GradientScope::All,
            _ => return Err(ConfigError::key(Some(line), "checks.gradients", format!("expected `model` or `all`, found `{v}`"))),
        },
    };
    let checks = ChecksSpec {
        states: r.integer("checks", "states")?.unwrap_or(20),
        gradients,
        classical: r.boolean("checks", "classical")?.unwrap_or(true),
        boussinesq: r.boolean("checks", "boussinesq")?.unwrap_or(true),
        dirac: r.boolean("checks", "dirac")?.unwrap_or(true),
        restricted: r.boolean("checks", "restricted")?.unwrap_or(true),
        propagation: r.boolean("checks", "propagation")?.unwrap_or(true),
        round_trips: r.boolean("checks", "round_trips")?.unwrap_or(true),
    };

    let limit = LimitSpec {
        eps: r.number("limit", "eps")?.unwrap_or(0.1),
        deep_water: r.boolean("limit", "deep_water")?.unwrap_or(true),
    };

    r.finish()?;
    let cfg = RunConfig { model, params, scaling, grid, initial, integrator, output, checks, limit };
    cfg.validate(&r)?;
    Ok(cfg)
}

fn parse_initial(r: &mut Reader) -> Result<InitialSpec, ConfigError> {
    let family = r.raw("initial", "family");
    let spec = match family.as_ref().map(|(v, l)| (v.as_str(), *l)) {
        None | Some(("rest", _)) => InitialSpec::Rest,
        Some(("gaussian", _)) => {
            let amplitude = r.number("initial", "amplitude")?;
            let width = r.number("initial", "width")?;
            let center = r.number("initial", "center")?;
            InitialSpec::Gaussian {
                amplitude: r.required(amplitude, "initial", "amplitude")?,
                width: r.required(width, "initial", "width")?,
                center: r.required(center, "initial", "center")?,
                momentum: r.number("initial", "momentum")?.unwrap_or(0.0),
            }
        }
        Some(("cosine", _)) => {
            let amplitude = r.number("initial", "amplitude")?;
            let wavenumber = r.number("initial", "wavenumber")?;
            InitialSpec::Cosine {
                amplitude: r.required(amplitude, "initial", "amplitude")?,
                wavenumber: r.required(wavenumber, "initial", "wavenumber")?,
                momentum: r.number("initial", "momentum")?.unwrap_or(0.0),
            }
        }
        Some(("file", _)) => {
            let path = r.string("initial", "path");
            InitialSpec::File { path: r.required(path, "initial", "path")? }
        }
        Some((other, line)) => {
            return Err(ConfigError::key(
                Some(line),
                "initial.family",
                format!("unknown family `{other}` (expected rest, gaussian, cosine or file)"),
            ))
        }
    };
    Ok(spec)
}

fn core_error(r: &Reader, section: &str, e: Error) -> ConfigError {
    match e {
        Error::InvalidParameter { name, reason } => {
            let key = core_key(name);
            if key == section {
                return ConfigError::key(r.sections.get(section).map(|s| s.line), section, reason);
            }
            ConfigError::key(r.line_of(section, key), format!("{section}.{key}"), reason)
        }
        other => ConfigError::key(r.sections.get(section).map(|s| s.line), section, other.to_string()),
    }
}

impl RunConfig {
    pub fn regime(&self) -> Result<ScalingRegime, Error> {
        ScalingRegime::new(&self.params, self.scaling.vertical, self.scaling.a)
    }

    pub fn spectral(&self) -> Result<Spectral, Error> {
        Ok(Spectral::new(Grid::new(self.grid.n, self.grid.length)?))
    }

    pub fn build_model(&self) -> Result<Box<dyn HamiltonianModel>, Error> {
        build_model(self.model, &self.params, &self.regime()?)
    }

    /// Rest values of the components and the sign with which the common
    /// displacement profile enters each of them.
    pub fn rest_levels(&self) -> Result<Vec<(f64, f64)>, Error> {
        Ok(match self.model {
            ModelKind::TwoLayer => vec![(0.0, 1.0), (0.0, 0.0)],
            ModelKind::SgnCanonical | ModelKind::SgnClassic => {
                vec![(SgnParams::from_physical(&self.params).depth, 1.0), (0.0, 0.0)]
            }
            ModelKind::DeepWater => {
                DeepWaterParams::new(&self.params, &self.regime()?)?;
                // eta1 = 1 - zeta
                vec![(1.0, -1.0), (0.0, 0.0)]
            }
            ModelKind::CcFour => {
                let cp = CcParams::from_physical(&self.params)?;
                vec![(cp.h1, -1.0), (0.0, 0.0), (cp.h2, 1.0), (0.0, 0.0)]
            }
        })
    }

    /// Builds the initial state for the analytic families.
    pub fn analytic_state(&self, ops: &Spectral) -> Result<ModelState, Error> {
        let grid = ops.grid();
        let n = grid.n();
        let (shape, momentum) = match &self.initial {
            InitialSpec::Rest => (Field::zeros(n), 0.0),
            InitialSpec::Gaussian { amplitude, width, center, momentum } => {
                if !(*width > 0.0) {
                    return Err(Error::InvalidParameter { name: "width", reason: "must be positive".into() });
                }
                (stratwave::verify::gaussian(grid, 1.0, *width, *center) * *amplitude, *momentum)
            }
            InitialSpec::Cosine { amplitude, wavenumber, momentum } => {
                let modes = wavenumber * grid.length() / (2.0 * std::f64::consts::PI);
                if (modes - modes.round()).abs() > 1e-9 * modes.abs().max(1.0) {
                    return Err(Error::InvalidParameter {
                        name: "wavenumber",
                        reason: format!("must be a multiple of 2 pi / length to be periodic (got {modes} periods)"),
                    });
                }
                (grid.sample(|x| (wavenumber * x).cos()) * *amplitude, *momentum)
            }
            InitialSpec::File { .. } => {
                return Err(Error::InvalidParameter { name: "family", reason: "file states are loaded separately".into() })
            }
        };
        let comps: Vec<Field> = self
            .rest_levels()?
            .into_iter()
            .enumerate()
            .map(|(i, (level, sign))| if i % 2 == 0 { &shape * sign + level } else { &shape * momentum })
            .collect();
        if self.model == ModelKind::TwoLayer {
            let regime = self.regime()?;
            let mut it = comps.into_iter();
            return ModelState::two_layer(it.next().unwrap(), it.next().unwrap(), &self.params, &regime);
        }
        ModelState::from_components(self.model, comps)
    }

    /// Model, grid and initial state, checked for admissibility and
    /// resolvability.
    pub fn setup(&self, state: Option<ModelState>) -> Result<Setup, Error> {
        let ops = self.spectral()?;
        let model = self.build_model()?;
        let state = match state {
            Some(s) => s,
            None => self.analytic_state(&ops)?,
        };
        if self.model != ModelKind::CcFour {
            check_runnable(model.as_ref(), &ops, &state)?;
        }
        Ok(Setup { model, ops, state })
    }

    fn validate(&self, r: &Reader) -> Result<(), ConfigError> {
        let section_of = |name: &str| -> &'static str {
            match name {
                "a" | "vertical_scale" => "scaling",
                "n" | "length" => "grid",
                "dt" | "t_end" | "fp_tol" | "fp_max_iters" | "diag_every" => "integrator",
                "width" | "wavenumber" | "family" => "initial",
                "rho1" | "rho2" | "h1" | "h2" | "g" | "L" => "params",
                "grid" => "grid",
                _ => "model",
            }
        };
        let wrap = |e: Error| match &e {
            Error::InvalidParameter { name, .. } => core_error(r, section_of(name), e.clone()),
            _ => ConfigError::key(r.sections.get("initial").map(|s| s.line), "initial", e.to_string()),
        };
        self.integrator.validate().map_err(wrap)?;
        if self.checks.states == 0 {
            return Err(ConfigError::key(r.line_of("checks", "states"), "checks.states", "must be at least 1"));
        }
        if !(self.limit.eps > 0.0 && self.limit.eps < 1.0) {
            return Err(ConfigError::key(r.line_of("limit", "eps"), "limit.eps", "must lie in (0, 1)"));
        }
        if matches!(self.initial, InitialSpec::File { .. }) {
            self.regime().map_err(wrap)?;
            self.spectral().map_err(wrap)?;
            self.build_model().map_err(wrap)?;
            self.rest_levels().map_err(wrap)?;
            return Ok(());
        }
        self.setup(None).map(|_| ()).map_err(wrap)
    }

    /// Canonical text form; every key is written explicitly.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut section = |name: &str, entries: Vec<(&str, String)>| {
            s.push_str(&format!("[{name}]\n"));
            for (k, v) in entries {
                s.push_str(&format!("{k} = {v}\n"));
            }
            s.push('\n');
        };
        let num = |v: f64| format!("{v:?}");
        let quoted = |v: &str| format!("\"{v}\"");
        let p = &self.params;
        section("model", vec![("kind", self.model.id().to_string())]);
        section(
            "params",
            vec![
                ("rho1", num(p.rho1)),
                ("rho2", num(p.rho2)),
                ("h1", num(p.h1)),
                ("h2", num(p.h2)),
                ("g", num(p.g)),
                ("length_scale", num(p.l)),
            ],
        );
        let vertical = match self.scaling.vertical {
            VerticalScale::LowerLayer => "lower",
            VerticalScale::UpperLayer => "upper",
        };
        section("scaling", vec![("vertical", vertical.into()), ("a", num(self.scaling.a))]);
        section("grid", vec![("n", self.grid.n.to_string()), ("length", num(self.grid.length))]);
        let initial = match &self.initial {
            InitialSpec::Rest => vec![("family", "rest".to_string())],
            InitialSpec::Gaussian { amplitude, width, center, momentum } => vec![
                ("family", "gaussian".into()),
                ("amplitude", num(*amplitude)),
                ("width", num(*width)),
                ("center", num(*center)),
                ("momentum", num(*momentum)),
            ],
            InitialSpec::Cosine { amplitude, wavenumber, momentum } => vec![
                ("family", "cosine".into()),
                ("amplitude", num(*amplitude)),
                ("wavenumber", num(*wavenumber)),
                ("momentum", num(*momentum)),
            ],
            InitialSpec::File { path } => vec![("family", "file".into()), ("path", quoted(path))],
        };
        section("initial", initial);
        let it = &self.integrator;
        section(
            "integrator",
            vec![
                ("method", it.method.id().into()),
                ("dt", num(it.dt)),
                ("t_end", num(it.t_end)),
                ("fp_tol", num(it.fp_tol)),
                ("fp_max_iters", it.fp_max_iters.to_string()),
                ("diag_every", it.diag_every.to_string()),
                ("snapshot_every", it.snapshot_every.to_string()),
            ],
        );
        section(
            "output",
            vec![("diagnostics", quoted(&self.output.diagnostics)), ("snapshots", quoted(&self.output.snapshots))],
        );
        let c = &self.checks;
        let scope = match c.gradients {
            GradientScope::Model => "model",
            GradientScope::All => "all",
        };
        section(
            "checks",
            vec![
                ("states", c.states.to_string()),
                ("gradients", scope.into()),
                ("classical", c.classical.to_string()),
                ("boussinesq", c.boussinesq.to_string()),
                ("dirac", c.dirac.to_string()),
                ("restricted", c.restricted.to_string()),
                ("propagation", c.propagation.to_string()),
                ("round_trips", c.round_trips.to_string()),
            ],
        );
        section("limit", vec![("eps", num(self.limit.eps)), ("deep_water", self.limit.deep_water.to_string())]);
        s.trim_end().to_string() + "\n"
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) const MINIMAL: &str = "\
[model]
kind = two_layer

[params]
rho1 = 1.0
rho2 = 1.5
h1 = 1.5
h2 = 1.0
g = 1.0
length_scale = 5.0
";

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config(MINIMAL).unwrap();
        assert_eq!(c.model, ModelKind::TwoLayer);
        assert_eq!(c.grid, GridSpec { n: 128, length: 64.0 });
        assert_eq!(c.initial, InitialSpec::Rest);
        assert_eq!(c.integrator, IntegratorConfig::new(Method::ImplicitMidpoint, 1e-3, 10.0));
        assert_eq!(c.scaling, ScalingSpec { vertical: VerticalScale::LowerLayer, a: 1.0 });
        assert_eq!(c.output.diagnostics, "diagnostics.csv");
        assert_eq!(c.checks.states, 20);
        assert_eq!(c.limit.eps, 0.1);
    }

    #[test]
    fn unstable_stratification_is_rejected() {
        let text = MINIMAL.replace("rho1 = 1.0", "rho1 = 2.0");
        let e = parse_config(&text).unwrap_err();
        assert!(e.to_string().contains("stable stratification"), "{e}");
        assert_eq!(e.key.as_deref(), Some("params.rho2"));
        assert_eq!(e.line, Some(6));
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        let e = parse_config(&format!("{MINIMAL}\n[grid]\nnn = 3\n")).unwrap_err();
        assert_eq!(e.line, Some(13));
        assert!(e.message.contains("unknown key `nn`"));
        let e = parse_config(&format!("{MINIMAL}\n[gird]\n")).unwrap_err();
        assert!(e.message.contains("unknown section"));
    }

    #[test]
    fn malformed_lines_report_their_number() {
        let e = parse_config("[model]\nkind two_layer\n").unwrap_err();
        assert_eq!(e.line, Some(2));
        let e = parse_config("kind = two_layer\n").unwrap_err();
        assert_eq!(e.line, Some(1));
        let e = parse_config(&MINIMAL.replace("g = 1.0", "g = 1.0\ng = 2.0")).unwrap_err();
        assert!(e.message.contains("duplicate"));
    }

    #[test]
    fn numbers_are_decimal_or_scientific() {
        assert_eq!(parse_number("1e-3"), Some(1e-3));
        assert_eq!(parse_number("-2.5E+2"), Some(-250.0));
        assert_eq!(parse_number(".5"), Some(0.5));
        for bad in ["inf", "NaN", "0x10", "1e999", "", "e", "1,0"] {
            assert_eq!(parse_number(bad), None, "{bad}");
        }
        let e = parse_config(&MINIMAL.replace("g = 1.0", "g = fast")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("params.g"));
    }

    #[test]
    fn missing_required_key_is_named() {
        let e = parse_config(&MINIMAL.replace("h2 = 1.0\n", "")).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("params.h2"));
        let e = parse_config("[params]\n").unwrap_err();
        assert_eq!(e.key.as_deref(), Some("model.kind"));
    }

    #[test]
    fn comments_are_ignored() {
        let text = MINIMAL.replace("kind = two_layer", "# leading\nkind = two_layer   # trailing");
        assert_eq!(parse_config(&text).unwrap().model, ModelKind::TwoLayer);
    }

    #[test]
    fn unresolvable_grid_is_rejected_at_parse_time() {
        let text = format!("{MINIMAL}\n[grid]\nn = 512\nlength = 10.0\n");
        let e = parse_config(&text).unwrap_err();
        assert!(e.message.contains("cutoff"), "{e}");
        assert_eq!((e.key.as_deref(), e.line), (Some("grid"), Some(12)));
    }

    #[test]
    fn inadmissible_initial_state_is_rejected() {
        let text = format!("{MINIMAL}\n[initial]\nfamily = gaussian\namplitude = 5.0\nwidth = 2.0\ncenter = 10.0\n");
        assert!(parse_config(&text).is_err());
    }

    #[test]
    fn non_periodic_cosine_is_rejected() {
        let text = format!("{MINIMAL}\n[initial]\nfamily = cosine\namplitude = 0.01\nwavenumber = 0.3\n");
        let e = parse_config(&text).unwrap_err();
        assert_eq!(e.key.as_deref(), Some("initial.wavenumber"));
    }

    #[test]
    fn deep_water_defaults_to_upper_scaling() {
        let text = MINIMAL.replace("two_layer", "deep_water") + "[grid]\nn = 64\nlength = 200\n";
        let c = parse_config(&text).unwrap();
        assert_eq!(c.scaling.vertical, VerticalScale::UpperLayer);
        let bad = format!("{text}[scaling]\nvertical = lower\n");
        assert!(parse_config(&bad).is_err());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = format!(
            "{MINIMAL}\n[initial]\nfamily = gaussian\namplitude = 0.01\nwidth = 4\ncenter = 32\nmomentum = 0.1\n\
             [integrator]\nmethod = rk4\ndt = 0.01\nt_end = 1\n[output]\nsnapshots = \"snaps # here\"\n"
        );
        let c = parse_config(&text).unwrap();
        assert_eq!(c.output.snapshots, "snaps # here");
        let again = parse_config(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.to_text(), c.to_text());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn serialize_parse_round_trip(
                rho1 in 0.0f64..1.0,
                extra in 0.01f64..2.0,
                h1 in 0.5f64..2.0,
                h2 in 0.5f64..2.0,
                l in 5.0f64..50.0,
                kind in 0usize..4,
                amp in 0.0f64..0.05,
                width in 1.0f64..6.0,
                dt in 1e-4f64..1e-1,
                every in 0usize..50,
                states in 1usize..30,
                flag in any::<bool>(),
            ) {
                let model = [ModelKind::TwoLayer, ModelKind::SgnCanonical, ModelKind::SgnClassic, ModelKind::DeepWater][kind];
                let rho1 = if model == ModelKind::DeepWater { rho1 + 0.1 } else { rho1 };
                let text = format!(
                    "[model]\nkind = {}\n[params]\nrho1 = {rho1:e}\nrho2 = {:e}\nh1 = {h1}\nh2 = {h2}\ng = 1\nlength_scale = {l}\n\
                     [grid]\nn = 64\nlength = 400\n\
                     [initial]\nfamily = gaussian\namplitude = {amp}\nwidth = {width}\ncenter = 50\n\
                     [integrator]\ndt = {dt}\nsnapshot_every = {every}\n[checks]\nstates = {states}\ndirac = {flag}\n",
                    model.id(), rho1 + extra,
                );
                let c = parse_config(&text).unwrap();
                let again = parse_config(&c.to_text()).unwrap();
                prop_assert_eq!(&again, &c);
            }
        }
    }
}
