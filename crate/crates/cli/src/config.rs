//! Flat `key = value` run configuration.
//!
//! Resolution order: preset, then config-file keys, then command-line flags,
//! then validation of the assembled parameters.

use std::fmt;
use std::path::PathBuf;

use gravcat_core::gravcat::attenuation_a_n;
use gravcat_core::{Error as CoreError, GravcatParams, UnitSystem};

use crate::format::fmt_num;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Location {
    Line(usize),
    Flag(String),
    Config,
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Location::Line(n) => write!(f, "line {n}"),
            Location::Flag(name) => write!(f, "flag {name}"),
            Location::Config => f.write_str("config"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{location}: {message}")]
pub struct ConfigError {
    pub location: Location,
    pub message: String,
}

impl ConfigError {
    fn new(location: &Location, message: impl Into<String>) -> Self {
        Self {
            location: location.clone(),
            message: message.into(),
        }
    }
}

type Result<T> = std::result::Result<T, ConfigError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Evolve,
    Sweep,
    Trajectories,
    Timescales,
    EnergyScale,
    Reproduce,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::Sweep => "sweep",
            Mode::Trajectories => "trajectories",
            Mode::Timescales => "timescales",
            Mode::EnergyScale => "energy_scale",
            Mode::Reproduce => "reproduce",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Solver {
    Rk4,
    /// Closed form of the deterministic model; requires t_QG = 0.
    Analytic,
    /// Closed form with the stochastic part dropped.
    Systematic,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Rk4 => "rk4",
            Solver::Analytic => "analytic",
            Solver::Systematic => "systematic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Mesoscopic,
    Fig2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Mesoscopic => "mesoscopic",
            Preset::Fig2 => "fig2",
        }
    }

    pub fn params(self) -> GravcatParams {
        match self {
            Preset::Mesoscopic => GravcatParams::mesoscopic(),
            Preset::Fig2 => GravcatParams::fig2(),
        }
    }
}

/// What a `sweep` run varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    /// Systematic attenuation, values in units of ε.
    Attenuation,
    /// Noise timescale t_QG, values in seconds (SI) or natural time.
    TQg,
}

impl SweepKind {
    pub fn name(self) -> &'static str {
        match self {
            SweepKind::Attenuation => "attenuation",
            SweepKind::TQg => "t_qg",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub params: GravcatParams,
    pub solver: Solver,
    pub n_traj: usize,
    pub base_seed: u64,
    /// Defaults depend on the mode and τ_E.
    pub t_max: Option<f64>,
    pub dt: Option<f64>,
    pub record_every: usize,
    pub output_path: Option<PathBuf>,
    pub preset: Option<Preset>,
    pub sweep: SweepKind,
    pub sweep_values: Vec<f64>,
    /// Target decoherence time for `energy_scale`.
    pub tau_target: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Unit {
    Kg,
    Meter,
    Second,
    Joule,
    Radian,
    /// `J^(1−n/2)`, checked once n is known.
    SigmaPower,
}

impl Unit {
    fn symbol(self) -> &'static str {
        match self {
            Unit::Kg => "kg",
            Unit::Meter => "m",
            Unit::Second => "s",
            Unit::Joule => "J",
            Unit::Radian => "rad",
            Unit::SigmaPower => "J^p",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Quantity(Unit),
    Number,
    Count,
    Word,
    List,
    Path,
}

/// Keys in canonical order.
const KEYS: &[(&str, Kind)] = &[
    ("preset", Kind::Word),
    ("mode", Kind::Word),
    ("solver", Kind::Word),
    ("units", Kind::Word),
    ("mass", Kind::Quantity(Unit::Kg)),
    ("d", Kind::Quantity(Unit::Meter)),
    ("d_prime", Kind::Quantity(Unit::Meter)),
    ("well_spacing", Kind::Quantity(Unit::Meter)),
    ("epsilon", Kind::Quantity(Unit::Joule)),
    ("e_ref", Kind::Quantity(Unit::Joule)),
    ("n", Kind::Count),
    ("t_qg", Kind::Quantity(Unit::Second)),
    ("theta", Kind::Quantity(Unit::Radian)),
    ("xi_mean", Kind::Number),
    ("sigma", Kind::Quantity(Unit::SigmaPower)),
    ("omega", Kind::Quantity(Unit::Joule)),
    ("gamma", Kind::Quantity(Unit::Joule)),
    ("n_traj", Kind::Count),
    ("base_seed", Kind::Count),
    ("t_max", Kind::Quantity(Unit::Second)),
    ("dt", Kind::Quantity(Unit::Second)),
    ("record_every", Kind::Count),
    ("output_path", Kind::Path),
    ("sweep", Kind::Word),
    ("sweep_values", Kind::List),
    ("tau_target", Kind::Quantity(Unit::Second)),
];

/// Keys that must be given when no preset supplies them.
const REQUIRED_WITHOUT_PRESET: &[&str] = &["units", "mass", "epsilon", "e_ref", "n", "t_qg"];

pub fn key_names() -> impl Iterator<Item = &'static str> {
    KEYS.iter().map(|(k, _)| *k)
}

fn canonical_key(key: &str) -> String {
    let k = key.trim().to_ascii_lowercase().replace('-', "_");
    match k.as_str() {
        "e_ref" | "eref" => "e_ref".into(),
        "seed" => "base_seed".into(),
        "output" => "output_path".into(),
        _ => k,
    }
}

fn kind_of(key: &str) -> Option<Kind> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, kind)| *kind)
}

/// One `key = value` assignment with its origin.
#[derive(Clone, Debug, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub location: Location,
}

impl Entry {
    pub fn flag(key: &str, value: &str) -> Self {
        Self {
            key: canonical_key(key),
            value: value.trim().to_string(),
            location: Location::Flag(format!("--{}", key.replace('_', "-"))),
        }
    }
}

/// Splits config text into entries. Unknown and repeated keys are errors.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut out: Vec<Entry> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let location = Location::Line(idx + 1);
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError::new(&location, format!("expected `key = value`, found `{line}`")));
        };
        let key = canonical_key(key);
        if kind_of(&key).is_none() {
            return Err(ConfigError::new(&location, format!("unknown key `{}`", key)));
        }
        if let Some(prev) = out.iter().find(|e| e.key == key) {
            return Err(ConfigError::new(
                &location,
                format!("key `{key}` already set at {}", prev.location),
            ));
        }
        let value = value.trim();
        if value.is_empty() {
            return Err(ConfigError::new(&location, format!("key `{key}` has no value")));
        }
        out.push(Entry {
            key,
            value: value.to_string(),
            location,
        });
    }
    Ok(out)
}

/// Parses a complete config file.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    build_config(parse_entries(text)?)
}

/// Replaces file entries by flag entries with the same key.
pub fn merge_entries(file: Vec<Entry>, flags: Vec<Entry>) -> Vec<Entry> {
    let mut out: Vec<Entry> = file
        .into_iter()
        .filter(|e| !flags.iter().any(|f| f.key == e.key))
        .collect();
    out.extend(flags);
    out
}

fn parse_number(s: &str, location: &Location, key: &str) -> Result<f64> {
    let v: f64 = s
        .parse()
        .map_err(|_| ConfigError::new(location, format!("`{key}`: `{s}` is not a number")))?;
    if !v.is_finite() {
        return Err(ConfigError::new(location, format!("`{key}` must be finite")));
    }
    Ok(v)
}

/// Splits `"<number> <unit>"`, enforcing the suffix rules of the unit system.
fn split_quantity<'a>(
    entry: &'a Entry,
    unit: Unit,
    units: UnitSystem,
) -> Result<(&'a str, Option<&'a str>)> {
    let mut tokens = entry.value.split_whitespace();
    let number = tokens.next().unwrap_or("");
    let suffix: Vec<&str> = tokens.collect();
    if suffix.len() > 1 {
        return Err(ConfigError::new(
            &entry.location,
            format!("`{}`: expected `<number> <unit>`, found `{}`", entry.key, entry.value),
        ));
    }
    let suffix = suffix.first().copied();
    match (units, suffix) {
        (UnitSystem::Natural, Some(s)) => Err(ConfigError::new(
            &entry.location,
            format!("`{}`: unit suffix `{s}` not allowed in natural units", entry.key),
        )),
        (UnitSystem::Si, None) => Err(ConfigError::new(
            &entry.location,
            format!("`{}`: missing unit suffix (expected {})", entry.key, unit.symbol()),
        )),
        (UnitSystem::Si, Some(s)) if unit != Unit::SigmaPower && s != unit.symbol() => Err(ConfigError::new(
            &entry.location,
            format!("`{}`: unit mismatch, expected {} but found {s}", entry.key, unit.symbol()),
        )),
        _ => Ok((number, suffix)),
    }
}

fn parse_count(entry: &Entry) -> Result<u64> {
    entry.value.parse().map_err(|_| {
        ConfigError::new(
            &entry.location,
            format!("`{}`: `{}` is not a non-negative integer", entry.key, entry.value),
        )
    })
}

fn parse_word<T: Copy>(entry: &Entry, options: &[(&str, T)]) -> Result<T> {
    let v = entry.value.to_ascii_lowercase().replace('-', "_");
    options.iter().find(|(name, _)| *name == v).map(|(_, t)| *t).ok_or_else(|| {
        let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
        ConfigError::new(
            &entry.location,
            format!("`{}`: `{}` is not one of {}", entry.key, entry.value, names.join(", ")),
        )
    })
}

const MODES: &[(&str, Mode)] = &[
    ("evolve", Mode::Evolve),
    ("sweep", Mode::Sweep),
    ("trajectories", Mode::Trajectories),
    ("timescales", Mode::Timescales),
    ("energy_scale", Mode::EnergyScale),
    ("reproduce", Mode::Reproduce),
];
const SOLVERS: &[(&str, Solver)] = &[
    ("rk4", Solver::Rk4),
    ("analytic", Solver::Analytic),
    ("systematic", Solver::Systematic),
];
const PRESETS: &[(&str, Preset)] = &[("mesoscopic", Preset::Mesoscopic), ("fig2", Preset::Fig2)];
const UNIT_SYSTEMS: &[(&str, UnitSystem)] = &[("si", UnitSystem::Si), ("natural", UnitSystem::Natural)];
const SWEEPS: &[(&str, SweepKind)] = &[("attenuation", SweepKind::Attenuation), ("t_qg", SweepKind::TQg)];

/// Assembles a validated [`RunConfig`] from ordered entries.
pub fn build_config(entries: Vec<Entry>) -> Result<RunConfig> {
    for e in &entries {
        if kind_of(&e.key).is_none() {
            return Err(ConfigError::new(&e.location, format!("unknown key `{}`", e.key)));
        }
    }
    let find = |key: &str| entries.iter().find(|e| e.key == key);

    let preset = find("preset").map(|e| parse_word(e, PRESETS)).transpose()?;
    let mut params = preset.map(Preset::params).unwrap_or_else(GravcatParams::fig2);
    if let Some(e) = find("units") {
        params.units = parse_word(e, UNIT_SYSTEMS)?;
    }
    if preset.is_none() {
        for key in REQUIRED_WITHOUT_PRESET {
            if find(key).is_none() {
                return Err(ConfigError::new(
                    &Location::Config,
                    format!("missing required key `{key}` (no preset given)"),
                ));
            }
        }
        if find("omega").is_none() && (find("d").is_none() || find("d_prime").is_none()) {
            return Err(ConfigError::new(
                &Location::Config,
                "missing required key `d`/`d_prime` (or give `omega`)",
            ));
        }
        // geometry and overrides come only from explicit keys
        params.sigma = None;
        params.omega = None;
        params.gamma = None;
        params.theta = 0.0;
        params.xi_mean = 1.0;
        params.well_spacing = 0.0;
    }
    let units = params.units;

    let mut cfg = RunConfig {
        mode: Mode::Evolve,
        params,
        solver: Solver::Rk4,
        n_traj: 1000,
        base_seed: 0,
        t_max: None,
        dt: None,
        record_every: 1,
        output_path: None,
        preset,
        sweep: SweepKind::Attenuation,
        sweep_values: vec![0.0, 0.5, 1.0, 2.0],
        tau_target: 1.0,
    };
    let mut sigma_suffix: Option<(&Entry, String)> = None;

    for e in &entries {
        let kind = kind_of(&e.key).expect("checked above");
        let quantity = |unit: Unit| -> Result<f64> {
            let (number, _) = split_quantity(e, unit, units)?;
            parse_number(number, &e.location, &e.key)
        };
        let p = &mut cfg.params;
        match (e.key.as_str(), kind) {
            ("preset", _) | ("units", _) | ("sweep_values", _) => {}
            ("mode", _) => cfg.mode = parse_word(e, MODES)?,
            ("solver", _) => cfg.solver = parse_word(e, SOLVERS)?,
            ("sweep", _) => cfg.sweep = parse_word(e, SWEEPS)?,
            ("mass", Kind::Quantity(u)) => p.mass = quantity(u)?,
            ("d", Kind::Quantity(u)) => p.d = quantity(u)?,
            ("d_prime", Kind::Quantity(u)) => p.d_prime = quantity(u)?,
            ("well_spacing", Kind::Quantity(u)) => p.well_spacing = quantity(u)?,
            ("epsilon", Kind::Quantity(u)) => p.epsilon = quantity(u)?,
            ("e_ref", Kind::Quantity(u)) => p.e_ref = quantity(u)?,
            ("t_qg", Kind::Quantity(u)) => p.t_qg = quantity(u)?,
            ("theta", Kind::Quantity(u)) => p.theta = quantity(u)?,
            ("omega", Kind::Quantity(u)) => p.omega = Some(quantity(u)?),
            ("gamma", Kind::Quantity(u)) => p.gamma = Some(quantity(u)?),
            ("sigma", Kind::Quantity(u)) => {
                let (number, suffix) = split_quantity(e, u, units)?;
                p.sigma = Some(parse_number(number, &e.location, &e.key)?);
                if let Some(s) = suffix {
                    sigma_suffix = Some((e, s.to_string()));
                }
            }
            ("xi_mean", _) => p.xi_mean = parse_number(&e.value, &e.location, &e.key)?,
            ("n", _) => {
                let n = parse_count(e)?;
                p.n = u32::try_from(n).map_err(|_| ConfigError::new(&e.location, "`n` too large"))?;
            }
            ("n_traj", _) => cfg.n_traj = parse_count(e)? as usize,
            ("base_seed", _) => cfg.base_seed = parse_count(e)?,
            ("record_every", _) => {
                cfg.record_every = parse_count(e)? as usize;
                if cfg.record_every == 0 {
                    return Err(ConfigError::new(&e.location, "`record_every` must be ≥ 1"));
                }
            }
            ("t_max", Kind::Quantity(u)) => {
                let v = quantity(u)?;
                if !(v > 0.0) {
                    return Err(ConfigError::new(&e.location, "`t_max` must be positive"));
                }
                cfg.t_max = Some(v);
            }
            ("dt", Kind::Quantity(u)) => {
                let v = quantity(u)?;
                if !(v > 0.0) {
                    return Err(ConfigError::new(&e.location, "`dt` must be positive"));
                }
                cfg.dt = Some(v);
            }
            ("tau_target", Kind::Quantity(u)) => {
                let v = quantity(u)?;
                if !(v > 0.0) {
                    return Err(ConfigError::new(&e.location, "`tau_target` must be positive"));
                }
                cfg.tau_target = v;
            }
            ("output_path", _) => cfg.output_path = Some(PathBuf::from(&e.value)),
            (key, _) => unreachable!("unhandled key {key}"),
        }
    }

    if let Some(e) = find("sweep_values") {
        cfg.sweep_values = parse_list(e, cfg.sweep, units)?;
    }
    if let Some((e, suffix)) = sigma_suffix {
        check_sigma_unit(e, &suffix, cfg.params.n)?;
    }
    validate(&cfg, &entries)?;
    Ok(cfg)
}

fn parse_list(e: &Entry, sweep: SweepKind, units: UnitSystem) -> Result<Vec<f64>> {
    let mut body = e.value.as_str();
    let mut suffix = None;
    if let Some((head, last)) = body.trim_end().rsplit_once(char::is_whitespace) {
        if last.parse::<f64>().is_err() && !last.ends_with(',') {
            suffix = Some(last);
            body = head;
        }
    }
    let needs_unit = sweep == SweepKind::TQg && units == UnitSystem::Si;
    match (needs_unit, suffix) {
        (true, None) => {
            return Err(ConfigError::new(&e.location, "`sweep_values`: missing unit suffix (expected s)"));
        }
        (true, Some(s)) if s != "s" => {
            return Err(ConfigError::new(
                &e.location,
                format!("`sweep_values`: unit mismatch, expected s but found {s}"),
            ));
        }
        (false, Some(s)) => {
            return Err(ConfigError::new(
                &e.location,
                format!("`sweep_values`: unit suffix `{s}` not allowed here"),
            ));
        }
        _ => {}
    }
    let values = body
        .split(',')
        .map(|s| parse_number(s.trim(), &e.location, &e.key))
        .collect::<Result<Vec<f64>>>()?;
    if values.is_empty() || values.iter().any(|v| *v < 0.0) {
        return Err(ConfigError::new(&e.location, "`sweep_values` must be non-negative numbers"));
    }
    Ok(values)
}

fn check_sigma_unit(e: &Entry, suffix: &str, n: u32) -> Result<()> {
    let want = 1.0 - f64::from(n) / 2.0;
    let got = suffix
        .strip_prefix("J^")
        .map(|p| p.trim_matches(|c| c == '(' || c == ')'))
        .and_then(|p| p.parse::<f64>().ok());
    match got {
        Some(g) if (g - want).abs() < 1e-12 => Ok(()),
        _ => Err(ConfigError::new(
            &e.location,
            format!("`sigma`: unit mismatch, expected J^{} for n = {n} but found {suffix}", fmt_num(want)),
        )),
    }
}

fn validate(cfg: &RunConfig, entries: &[Entry]) -> Result<()> {
    let last_of = |keys: &[&str]| {
        entries
            .iter()
            .filter(|e| keys.contains(&e.key.as_str()))
            .last()
            .map(|e| e.location.clone())
            .unwrap_or(Location::Config)
    };
    let p = &cfg.params;
    if let Err(err) = p.validate() {
        let location = match err {
            CoreError::KineticNotPositive => last_of(&["e_ref", "epsilon"]),
            _ => {
                let key = match &err {
                    CoreError::InvalidParameter(m) if m.starts_with("epsilon") => "epsilon",
                    CoreError::InvalidParameter(m) if m.starts_with("mass") => "mass",
                    CoreError::InvalidParameter(m) if m.starts_with("separations") => "d",
                    CoreError::InvalidParameter(m) if m.starts_with("n ") => "n",
                    CoreError::InvalidParameter(m) if m.starts_with("t_QG") => "t_qg",
                    CoreError::InvalidParameter(m) if m.starts_with("theta") => "theta",
                    _ => "",
                };
                last_of(&[key])
            }
        };
        return Err(ConfigError::new(&location, err.to_string()));
    }
    // the bracket (E−ε)^{n/2} − (E+ε)^{n/2} must be computable
    attenuation_a_n(p.e_ref, p.epsilon, p.n, 1.0)
        .map_err(|err| ConfigError::new(&last_of(&["e_ref", "epsilon"]), err.to_string()))?;
    if cfg.mode == Mode::Trajectories && cfg.n_traj < 2 {
        return Err(ConfigError::new(&last_of(&["n_traj"]), "`n_traj` must be ≥ 2"));
    }
    Ok(())
}

/// Fully expanded config text; parsing it reproduces `cfg`.
pub fn to_config_text(cfg: &RunConfig) -> String {
    let p = &cfg.params;
    let si = p.units == UnitSystem::Si;
    let q = |v: f64, unit: &str| {
        if si {
            format!("{} {unit}", fmt_num(v))
        } else {
            fmt_num(v)
        }
    };
    let mut lines: Vec<String> = Vec::new();
    let mut put = |k: &str, v: String| lines.push(format!("{k} = {v}"));
    if let Some(preset) = cfg.preset {
        put("preset", preset.name().into());
    }
    put("mode", cfg.mode.name().into());
    put("solver", cfg.solver.name().into());
    put("units", if si { "si".into() } else { "natural".into() });
    put("mass", q(p.mass, "kg"));
    put("d", q(p.d, "m"));
    put("d_prime", q(p.d_prime, "m"));
    put("well_spacing", q(p.well_spacing, "m"));
    put("epsilon", q(p.epsilon, "J"));
    put("e_ref", q(p.e_ref, "J"));
    put("n", p.n.to_string());
    put("t_qg", q(p.t_qg, "s"));
    put("theta", q(p.theta, "rad"));
    put("xi_mean", fmt_num(p.xi_mean));
    if let Some(s) = p.sigma {
        let unit = format!("J^{}", fmt_num(1.0 - f64::from(p.n) / 2.0));
        put("sigma", q(s, &unit));
    }
    if let Some(o) = p.omega {
        put("omega", q(o, "J"));
    }
    if let Some(g) = p.gamma {
        put("gamma", q(g, "J"));
    }
    put("n_traj", cfg.n_traj.to_string());
    put("base_seed", cfg.base_seed.to_string());
    if let Some(t) = cfg.t_max {
        put("t_max", q(t, "s"));
    }
    if let Some(dt) = cfg.dt {
        put("dt", q(dt, "s"));
    }
    put("record_every", cfg.record_every.to_string());
    if let Some(path) = &cfg.output_path {
        put("output_path", path.display().to_string());
    }
    put("sweep", cfg.sweep.name().into());
    let list: Vec<String> = cfg.sweep_values.iter().map(|v| fmt_num(*v)).collect();
    let mut list = list.join(", ");
    if si && cfg.sweep == SweepKind::TQg {
        list.push_str(" s");
    }
    put("sweep_values", list);
    put("tau_target", q(cfg.tau_target, "s"));
    let mut text = lines.join("\n");
    text.push('\n');
    text
}
