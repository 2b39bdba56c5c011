//! Experiment orchestration for each run mode.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::time::Instant;

use gravcat_core::dispersion::{critical_energy, free_decoherence_time, pi_decoherence_time};
use gravcat_core::evolve::{integrate_strided, step_count, systematic_liv_solution};
use gravcat_core::gravcat::{attenuation_a_n, entanglement_time, gravcat_decoherence_time, initial_state, make_generator};
use gravcat_core::observables::record;
use gravcat_core::stochastic::{ensemble_average_strided, RNG_ALGORITHM};
use gravcat_core::{
    ComplexMatrix, DensityMatrix, DriftCounters, Error as CoreError, GravcatParams, MdrParams, NoiseModel,
    PhysicalConstants, UnitSystem,
};
use serde::Serialize;

use crate::config::{to_config_text, ConfigError, Location, Mode, RunConfig, Solver, SweepKind};
use crate::format::{fmt_num, Csv};

/// Upper bound on integration steps for a single series.
pub const MAX_STEPS: usize = 100_000_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("numerical failure: {0}")]
    Numerical(CoreError),
    #[error("I/O error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    fn config(message: impl Into<String>) -> Self {
        CliError::Config(ConfigError {
            location: Location::Config,
            message: message.into(),
        })
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match e {
            CoreError::StepTooLarge { .. }
            | CoreError::InvalidParameter(_)
            | CoreError::KineticNotPositive
            | CoreError::DegenerateModel => CliError::config(e.to_string()),
            other => CliError::Numerical(other),
        }
    }
}

pub const CSV_COLUMNS: [&str; 11] = [
    "t",
    "rho11",
    "rho22",
    "rho33",
    "rho44",
    "re_rho14",
    "im_rho14",
    "re_rho23",
    "im_rho23",
    "concurrence",
    "purity",
];

pub const STDERR_COLUMNS: [&str; 8] = [
    "se_rho11",
    "se_rho22",
    "se_rho33",
    "se_rho44",
    "se_re_rho14",
    "se_im_rho14",
    "se_re_rho23",
    "se_im_rho23",
];

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct DriftSummary {
    pub steps: usize,
    pub renormalizations: usize,
    pub max_trace_drift: f64,
    pub max_hermiticity_drift: f64,
    pub min_eigenvalue: f64,
    pub max_purity_increase: f64,
    pub clamped_concurrences: usize,
}

impl DriftSummary {
    fn absorb(&mut self, d: &DriftCounters) {
        self.steps += d.steps;
        self.renormalizations += d.renormalizations;
        self.max_trace_drift = self.max_trace_drift.max(d.max_trace_drift);
        self.max_hermiticity_drift = self.max_hermiticity_drift.max(d.max_hermiticity_drift);
        self.min_eigenvalue = self.min_eigenvalue.min(d.min_eigenvalue);
        self.max_purity_increase = self.max_purity_increase.max(d.max_purity_increase);
    }
}

#[derive(Debug, Serialize)]
struct Sidecar<'a> {
    version: &'a str,
    mode: &'a str,
    solver: &'a str,
    output: String,
    config_echo: String,
    seed: u64,
    rng: &'a str,
    dt: Option<f64>,
    t_max: Option<f64>,
    record_every: usize,
    drift_counters: &'a DriftSummary,
    wall_time: f64,
}

/// Files written by a run.
#[derive(Debug, Default)]
pub struct RunSummary {
    pub outputs: Vec<PathBuf>,
}

struct Grid {
    t_max: f64,
    dt: f64,
}

/// Default output location for a mode.
pub fn default_output(mode: Mode) -> PathBuf {
    match mode {
        Mode::Reproduce => PathBuf::from("reproduce"),
        m => PathBuf::from(format!("{}.csv", m.name())),
    }
}

pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
    }
    std::fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Writer<'a> {
    cfg: &'a RunConfig,
    started: Instant,
    summary: RunSummary,
}

impl Writer<'_> {
    fn emit(&mut self, path: &Path, csv: &Csv, grid: Option<&Grid>, drift: &DriftSummary) -> Result<(), CliError> {
        write_file(path, csv.as_str())?;
        let sidecar = Sidecar {
            version: env!("CARGO_PKG_VERSION"),
            mode: self.cfg.mode.name(),
            solver: self.cfg.solver.name(),
            output: path.display().to_string(),
            config_echo: to_config_text(self.cfg),
            seed: self.cfg.base_seed,
            rng: RNG_ALGORITHM,
            dt: grid.map(|g| g.dt),
            t_max: grid.map(|g| g.t_max),
            record_every: self.cfg.record_every,
            drift_counters: drift,
            wall_time: self.started.elapsed().as_secs_f64(),
        };
        let json = serde_json::to_string_pretty(&sidecar).expect("sidecar serializes");
        let side = sidecar_path(path);
        write_file(&side, &(json + "\n"))?;
        self.summary.outputs.push(path.to_path_buf());
        self.summary.outputs.push(side);
        Ok(())
    }
}

pub fn run(cfg: &RunConfig) -> Result<RunSummary, CliError> {
    let mut w = Writer {
        cfg,
        started: Instant::now(),
        summary: RunSummary::default(),
    };
    let out = cfg.output_path.clone().unwrap_or_else(|| default_output(cfg.mode));
    match cfg.mode {
        Mode::Evolve => {
            let grid = time_grid(cfg, 20.0)?;
            let (csv, drift) = evolve_csv(cfg, &cfg.params, &grid, cfg.record_every)?;
            w.emit(&out, &csv, Some(&grid), &drift)?;
        }
        Mode::Trajectories => {
            let grid = time_grid(cfg, 20.0)?;
            let (csv, drift) = trajectories_csv(cfg, &grid)?;
            w.emit(&out, &csv, Some(&grid), &drift)?;
        }
        Mode::Sweep => {
            let (csv, grid, drift) = sweep_csv(cfg)?;
            w.emit(&out, &csv, Some(&grid), &drift)?;
        }
        Mode::Timescales => {
            let csv = timescales_csv(&cfg.params)?;
            w.emit(&out, &csv, None, &DriftSummary::default())?;
        }
        Mode::EnergyScale => {
            let csv = energy_scale_csv(&cfg.params, cfg.tau_target)?;
            w.emit(&out, &csv, None, &DriftSummary::default())?;
        }
        Mode::Reproduce => reproduce(cfg, &out, &mut w)?,
    }
    Ok(w.summary)
}

/// Resolves dt and t_max, defaulting to τ_E/1000 and `span_tau`·τ_E.
fn time_grid(cfg: &RunConfig, span_tau: f64) -> Result<Grid, CliError> {
    let p = &cfg.params;
    let k = p.constants();
    let tau = p.entanglement_time(&k)?;
    let grid = Grid {
        t_max: cfg.t_max.unwrap_or(span_tau * tau),
        dt: cfg.dt.unwrap_or(tau / 1000.0),
    };
    check_steps(&grid)?;
    Ok(grid)
}

fn check_steps(grid: &Grid) -> Result<(), CliError> {
    let steps = step_count(grid.t_max, grid.dt);
    if steps > MAX_STEPS {
        return Err(CliError::config(format!(
            "t_max/dt = {steps} steps exceeds the limit of {MAX_STEPS}"
        )));
    }
    Ok(())
}

fn recorded_steps(steps: usize, every: usize) -> Vec<usize> {
    let mut out = vec![0];
    out.extend((1..=steps).filter(|s| s % every == 0 || *s == steps));
    out
}

fn state_row(t: f64, rho: &DensityMatrix, drift: &mut DriftSummary) -> Result<Vec<f64>, CliError> {
    let rec = record(rho, t)?;
    drift.clamped_concurrences += usize::from(rec.clamped);
    let (r14, r23) = (rho.get(0, 3), rho.get(1, 2));
    Ok(vec![
        t,
        rec.rho11,
        rec.rho22,
        rec.rho33,
        rec.rho44,
        r14.re,
        r14.im,
        r23.re,
        r23.im,
        rec.concurrence,
        rec.purity,
    ])
}

/// Time series of the configured solver as (t, ρ) pairs.
fn solve(
    cfg: &RunConfig,
    p: &GravcatParams,
    grid: &Grid,
    every: usize,
    drift: &mut DriftSummary,
) -> Result<Vec<(f64, DensityMatrix)>, CliError> {
    let k = p.constants();
    match cfg.solver {
        Solver::Rk4 => {
            let g = make_generator(p, &k)?;
            let ts = integrate_strided(&g, &initial_state(p.theta), grid.t_max, grid.dt, every)?;
            drift.absorb(&ts.meta.drift);
            Ok(ts.times.into_iter().zip(ts.states).collect())
        }
        Solver::Analytic | Solver::Systematic => {
            if cfg.solver == Solver::Analytic && p.t_qg != 0.0 {
                return Err(CliError::config(
                    "solver = analytic needs t_qg = 0; use rk4 or systematic",
                ));
            }
            p.validate()?;
            let omega = p.couplings(&k).omega;
            let a = p.attenuation(&k)?;
            let steps = step_count(grid.t_max, grid.dt);
            Ok(recorded_steps(steps, every)
                .into_iter()
                .map(|s| {
                    let t = s as f64 * grid.dt;
                    let block = systematic_liv_solution(p.theta, omega, p.epsilon, a, t, &k);
                    (t, block.to_density())
                })
                .collect())
        }
    }
}

fn evolve_csv(cfg: &RunConfig, p: &GravcatParams, grid: &Grid, every: usize) -> Result<(Csv, DriftSummary), CliError> {
    let mut drift = DriftSummary::default();
    let series = solve(cfg, p, grid, every, &mut drift)?;
    let mut csv = Csv::new(&CSV_COLUMNS);
    for (t, rho) in &series {
        csv.row(&state_row(*t, rho, &mut drift)?);
    }
    Ok((csv, drift))
}

fn trajectories_csv(cfg: &RunConfig, grid: &Grid) -> Result<(Csv, DriftSummary), CliError> {
    let p = &cfg.params;
    let k = p.constants();
    let noise = NoiseModel::for_params(p, grid.dt)?;
    let ens = ensemble_average_strided(p, &noise, grid.t_max, cfg.n_traj, cfg.base_seed, cfg.record_every, &k)?;
    let mut drift = DriftSummary::default();
    drift.absorb(&ens.mean_states.meta.drift);
    let mut header: Vec<&str> = CSV_COLUMNS.to_vec();
    header.extend(STDERR_COLUMNS);
    let mut csv = Csv::new(&header);
    for ((t, rho), se) in ens.mean_states.iter().zip(&ens.std_err) {
        let mut row = state_row(t, rho, &mut drift)?;
        row.extend(stderr_cells(se));
        csv.row(&row);
    }
    Ok((csv, drift))
}

fn stderr_cells(se: &ComplexMatrix) -> [f64; 8] {
    [
        se[(0, 0)].re,
        se[(1, 1)].re,
        se[(2, 2)].re,
        se[(3, 3)].re,
        se[(0, 3)].re,
        se[(0, 3)].im,
        se[(1, 2)].re,
        se[(1, 2)].im,
    ]
}

/// Parameters realizing A_n = `a_n` in the systematic case (ξ̄ = −1, t_QG = 0).
fn with_attenuation(p: &GravcatParams, a_n: f64) -> Result<GravcatParams, CliError> {
    let bracket = attenuation_a_n(p.e_ref, p.epsilon, p.n, 1.0)?;
    if bracket == 0.0 {
        return Err(CliError::config("attenuation sweep needs a non-zero kinetic bracket"));
    }
    Ok(GravcatParams {
        xi_mean: -1.0,
        sigma: Some(a_n / bracket.abs()),
        t_qg: 0.0,
        ..p.clone()
    })
}

fn concurrence_series(
    cfg: &RunConfig,
    p: &GravcatParams,
    grid: &Grid,
    every: usize,
    drift: &mut DriftSummary,
) -> Result<Vec<(f64, f64)>, CliError> {
    solve(cfg, p, grid, every, drift)?
        .into_iter()
        .map(|(t, rho)| {
            let rec = record(&rho, t)?;
            drift.clamped_concurrences += usize::from(rec.clamped);
            Ok((t, rec.concurrence))
        })
        .collect()
}

fn sweep_csv(cfg: &RunConfig) -> Result<(Csv, Grid, DriftSummary), CliError> {
    let p = &cfg.params;
    let k = p.constants();
    let tau = p.entanglement_time(&k)?;
    let omega = p.couplings(&k).omega;
    if cfg.sweep == SweepKind::TQg && cfg.solver != Solver::Rk4 {
        return Err(CliError::config("a t_qg sweep needs solver = rk4"));
    }
    let variants: Vec<(f64, GravcatParams)> = cfg
        .sweep_values
        .iter()
        .map(|&v| match cfg.sweep {
            SweepKind::Attenuation => Ok((v * p.epsilon, with_attenuation(p, v * p.epsilon)?)),
            SweepKind::TQg => Ok((v, GravcatParams { t_qg: v, ..p.clone() })),
        })
        .collect::<Result<_, CliError>>()?;
    // resolve the shortest oscillation period in the sweep
    let mut tau_min = tau;
    for (_, q) in &variants {
        let a = q.attenuation(&k)?;
        tau_min = tau_min.min(entanglement_time(omega, q.epsilon + 0.5 * a, &k)?);
    }
    let grid = Grid {
        t_max: cfg.t_max.unwrap_or(4.0 * PI * tau),
        dt: cfg.dt.unwrap_or(tau_min / 1000.0),
    };
    check_steps(&grid)?;

    let mut drift = DriftSummary::default();
    let mut csv = Csv::new(&["parameter", "value", "a_n", "max_concurrence", "t_at_max"]);
    for (value, q) in &variants {
        let series = concurrence_series(cfg, q, &grid, 1, &mut drift)?;
        let (t_at, c_max) = series
            .iter()
            .fold((0.0, f64::NEG_INFINITY), |best, &(t, c)| if c > best.1 { (t, c) } else { best });
        let shown = match cfg.sweep {
            SweepKind::Attenuation => value / p.epsilon,
            SweepKind::TQg => *value,
        };
        csv.mixed_row(&[cfg.sweep.name()], &[shown, q.attenuation(&k)?, c_max, t_at]);
    }
    Ok((csv, grid, drift))
}

fn unit_label(p: &GravcatParams, si: &'static str) -> &'static str {
    match p.units {
        UnitSystem::Si => si,
        UnitSystem::Natural => "natural",
    }
}

/// Timescale table. τ_D,n uses (ΔE^{n/2})² = εⁿ, τ_D^PI uses ΔE² = ε².
pub fn timescales_csv(p: &GravcatParams) -> Result<Csv, CliError> {
    p.validate()?;
    let k = p.constants();
    let unit = unit_label(p, "s");
    let mut csv = Csv::new(&["quantity", "value", "unit"]);
    let mut put = |name: &str, v: f64| csv.text_row(&[name.to_string(), fmt_num(v), unit.to_string()]);
    put("tau_e", p.entanglement_time(&k)?);
    for n in 1..=3 {
        let mdr = MdrParams {
            n,
            mass: p.mass,
            xi_mean: p.xi_mean,
            t_qg: p.t_qg,
        };
        let tau = free_decoherence_time(&mdr, p.epsilon.powi(n as i32), &k);
        put(&format!("tau_d_{n}"), tau);
    }
    let pi = pi_decoherence_time(p.mass, p.epsilon * p.epsilon, &k);
    put("tau_d_pi", pi);
    put("tau_d_gravcat", gravcat_decoherence_time(p, &k)?);
    Ok(csv)
}

/// Critical energies E_n (n = 1, 2, 3) at which the decoherence time equals `tau`.
pub fn energy_scale_csv(p: &GravcatParams, tau: f64) -> Result<Csv, CliError> {
    let k = p.constants();
    let mut csv = Csv::new(&["n", "energy", "unit", "tau_target"]);
    for n in 1..=3 {
        let e = critical_energy(n, p.mass, tau, &k)?;
        csv.text_row(&[n.to_string(), fmt_num(e), unit_label(p, "J").to_string(), fmt_num(tau)]);
    }
    Ok(csv)
}

fn reproduce(cfg: &RunConfig, dir: &Path, w: &mut Writer<'_>) -> Result<(), CliError> {
    let p = &cfg.params;
    let k: PhysicalConstants = p.constants();
    let tau = p.entanglement_time(&k)?;
    let window = Grid {
        t_max: cfg.t_max.unwrap_or(4.0 * PI * tau),
        dt: cfg.dt.unwrap_or(tau / 1000.0),
    };
    check_steps(&window)?;
    let every = cfg.record_every;

    // (a) undeformed dynamics
    let plain = GravcatParams {
        sigma: Some(0.0),
        t_qg: 0.0,
        ..p.clone()
    };
    let (csv, drift) = evolve_csv(cfg, &plain, &window, every)?;
    w.emit(&dir.join("panel_a.csv"), &csv, Some(&window), &drift)?;

    // (b) systematic attenuation sweep
    let mut drift = DriftSummary::default();
    let mut columns: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut names = vec!["t".to_string()];
    let mut tau_min = tau;
    let variants: Vec<GravcatParams> = cfg
        .sweep_values
        .iter()
        .map(|v| with_attenuation(p, v * p.epsilon))
        .collect::<Result<_, _>>()?;
    for q in &variants {
        let a = q.attenuation(&k)?;
        tau_min = tau_min.min(entanglement_time(q.couplings(&k).omega, q.epsilon + 0.5 * a, &k)?);
    }
    let fine = Grid {
        t_max: window.t_max,
        dt: cfg.dt.unwrap_or(tau_min / 1000.0),
    };
    check_steps(&fine)?;
    for (v, q) in cfg.sweep_values.iter().zip(&variants) {
        names.push(format!("c_a{}", fmt_num(*v)));
        columns.push(concurrence_series(cfg, q, &fine, every, &mut drift)?);
    }
    w.emit(&dir.join("panel_b.csv"), &wide_csv(&names, &columns), Some(&fine), &drift)?;

    // (c) stochastic LIV against its systematic limit
    let mut drift = DriftSummary::default();
    let mut t_qgs = vec![0.0];
    if p.t_qg > 0.0 {
        t_qgs.push(p.t_qg);
    }
    let rk4 = RunConfig {
        solver: Solver::Rk4,
        ..cfg.clone()
    };
    let mut names = vec!["t".to_string()];
    let mut columns = Vec::new();
    for t_qg in t_qgs {
        let q = GravcatParams { t_qg, ..p.clone() };
        names.push(format!("c_tqg{}", fmt_num(t_qg)));
        columns.push(concurrence_series(&rk4, &q, &window, every, &mut drift)?);
    }
    w.emit(&dir.join("panel_c.csv"), &wide_csv(&names, &columns), Some(&window), &drift)?;

    // (d) populations under stochastic LIV, long enough to equilibrate
    let a = p.attenuation(&k)?;
    let rate = a * a * p.t_qg / (k.hbar * k.hbar);
    let t_eq = if rate > 0.0 { 12.0 / rate } else { 0.0 };
    let long = Grid {
        t_max: window.t_max.max(t_eq),
        dt: window.dt,
    };
    check_steps(&long)?;
    let stride = every.max(step_count(long.t_max, long.dt) / 4000);
    let (csv, drift) = evolve_csv(&rk4, p, &long, stride)?;
    w.emit(&dir.join("panel_d.csv"), &csv, Some(&long), &drift)?;
    Ok(())
}

fn wide_csv(names: &[String], columns: &[Vec<(f64, f64)>]) -> Csv {
    let header: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut csv = Csv::new(&header);
    let rows = columns.first().map_or(0, Vec::len);
    for r in 0..rows {
        let mut row = vec![columns[0][r].0];
        row.extend(columns.iter().map(|c| c[r].1));
        csv.row(&row);
    }
    csv
}
