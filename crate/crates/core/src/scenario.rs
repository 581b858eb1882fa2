//! Scenario configuration, the run pipeline, and CSV output.

use std::fmt::Write as _;
use std::io;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hydro::{self, VelocityVariances};
use crate::info::{InfoReport, DEFAULT_TOL_SLACK};
use crate::potential::Potential;
use crate::propagate::{self, evolve, Scheme, Trajectory};
use crate::states::StateSpec;
use crate::thermo::{
    self, FeedbackRow, ProductionProbe, ThermoLedger, ThermoParams, DEFAULT_TOL_RATE,
    DEFAULT_TOL_RATE2,
};
use crate::wave::{Units, WaveFunction};

/// Column order of the main CSV output.
pub const CSV_HEADER: [&str; 23] = [
    "t",
    "E",
    "S_q",
    "S_p",
    "fisher",
    "var_x",
    "var_p",
    "var_u",
    "var_v",
    "S_rate",
    "S_int_rate",
    "S_ext_rate",
    "U",
    "F",
    "W_rate",
    "Q_rate",
    "res_first_law",
    "res_extremum",
    "res_feedback",
    "slack_eq3",
    "slack_eq7a",
    "slack_eq7b",
    "slack_eq26",
];

/// Column order of the optional per-snapshot field dump.
pub const FIELDS_HEADER: [&str; 6] = ["t", "x", "rho", "u", "v", "Q"];

/// Bound on the per-snapshot identities (Fisher, variance partition, energy).
pub const TOL_IDENTITY: f64 = 1e-6;
/// Relative energy drift allowed for static potentials.
pub const TOL_ENERGY_DRIFT: f64 = 1e-6;
/// Entropy production may dip below zero by round-off only.
pub const TOL_PRODUCTION: f64 = 1e-10;

pub const BUILTIN_NAMES: [&str; 5] = [
    "stationary_ground",
    "coherent_oscillation",
    "free_spreading",
    "superposition_beat",
    "driven_oscillator",
];

const BUILTIN_SOURCES: [&str; 5] = [
    include_str!("../scenarios/stationary_ground.toml"),
    include_str!("../scenarios/coherent_oscillation.toml"),
    include_str!("../scenarios/free_spreading.toml"),
    include_str!("../scenarios/superposition_beat.toml"),
    include_str!("../scenarios/driven_oscillator.toml"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub x_min: f64,
    pub x_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UnitsConfig {
    #[serde(rename = "D", default = "default_d")]
    pub d: f64,
    #[serde(default = "one")]
    pub m: f64,
    #[serde(default = "one")]
    pub beta0: f64,
}

impl Default for UnitsConfig {
    fn default() -> Self {
        Self {
            d: default_d(),
            m: 1.0,
            beta0: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvolutionConfig {
    pub dt: f64,
    pub t_final: f64,
    pub snapshot_stride: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    #[serde(default)]
    pub fields_dump: bool,
    #[serde(default = "default_precision")]
    pub precision: usize,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            csv_path: None,
            fields_dump: false,
            precision: default_precision(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_tol_slack")]
    pub tol_slack: f64,
    #[serde(default = "default_tol_rate")]
    pub tol_rate: f64,
    #[serde(default = "default_tol_rate2")]
    pub tol_rate2: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            tol_slack: DEFAULT_TOL_SLACK,
            tol_rate: DEFAULT_TOL_RATE,
            tol_rate2: DEFAULT_TOL_RATE2,
        }
    }
}

fn default_d() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn default_precision() -> usize {
    12
}
fn default_tol_slack() -> f64 {
    DEFAULT_TOL_SLACK
}
fn default_tol_rate() -> f64 {
    DEFAULT_TOL_RATE
}
fn default_tol_rate2() -> f64 {
    DEFAULT_TOL_RATE2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub grid: GridConfig,
    #[serde(default)]
    pub units: UnitsConfig,
    pub initial_state: StateSpec,
    pub potential: Potential,
    pub evolution: EvolutionConfig,
    #[serde(default)]
    pub outputs: OutputConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn builtin(name: &str) -> Option<Self> {
        let i = BUILTIN_NAMES.iter().position(|n| *n == name)?;
        Some(Self::from_toml(BUILTIN_SOURCES[i]).expect("built-in scenarios parse"))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configs serialize")
    }

    /// Number of steps, checked to be a whole multiple of the stride.
    pub fn n_steps(&self) -> Result<usize> {
        let ev = &self.evolution;
        if !(ev.dt > 0.0 && ev.dt.is_finite()) {
            return Err(Error::Config(format!(
                "evolution.dt = {} must be > 0",
                ev.dt
            )));
        }
        if !(ev.t_final >= 0.0 && ev.t_final.is_finite()) {
            return Err(Error::Config(format!(
                "evolution.t_final = {} must be >= 0",
                ev.t_final
            )));
        }
        if ev.snapshot_stride == 0 {
            return Err(Error::Config(
                "evolution.snapshot_stride must be >= 1".into(),
            ));
        }
        let steps = (ev.t_final / ev.dt).round();
        if (steps * ev.dt - ev.t_final).abs() > 1e-9 * ev.t_final.max(1.0) {
            return Err(Error::Config(format!(
                "t_final = {} is not a whole number of steps dt = {}",
                ev.t_final, ev.dt
            )));
        }
        let steps = steps as usize;
        if steps % ev.snapshot_stride != 0 {
            return Err(Error::Config(format!(
                "{steps} steps are not a multiple of snapshot_stride = {}",
                ev.snapshot_stride
            )));
        }
        Ok(steps)
    }

    /// Validates the configuration and builds the initial state.
    pub fn prepare(&self) -> Result<Scenario> {
        let grid = Grid1D::new(self.grid.x_min, self.grid.x_max, self.grid.n)?;
        let units = Units::new(self.units.d, self.units.m)?;
        let params = ThermoParams::new(units, self.units.beta0)?;
        let n_steps = self.n_steps()?;
        self.potential.validate(&grid)?;
        let t = &self.tolerances;
        if [t.tol_slack, t.tol_rate, t.tol_rate2]
            .iter()
            .any(|v| v.is_nan() || *v < 0.0)
        {
            return Err(Error::Config("tolerances must be non-negative".into()));
        }
        if self.outputs.precision == 0 || self.outputs.precision > 17 {
            return Err(Error::Config(format!(
                "outputs.precision = {} must be in 1..=17",
                self.outputs.precision
            )));
        }
        let initial = self.initial_state.build(&grid, &units)?;
        Ok(Scenario {
            config: self.clone(),
            params,
            initial,
            n_steps,
        })
    }
}

/// A validated scenario, ready to run.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: ThermoParams,
    pub initial: WaveFunction,
    pub n_steps: usize,
}

/// One row of the main CSV.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub t: f64,
    pub energy: f64,
    pub info: InfoReport,
    pub var_p: f64,
    pub velocities: VelocityVariances,
    pub s_rate: f64,
    pub s_int_rate: f64,
    pub s_ext_rate: f64,
    pub internal_energy: Option<f64>,
    pub free_energy: Option<f64>,
    pub work_rate: f64,
    pub heat_rate: f64,
    pub res_first_law: Option<f64>,
    pub res_extremum: Option<f64>,
    pub res_feedback: Option<f64>,
    pub res_entropy_rate: Option<f64>,
    pub res_free_energy_speed: Option<f64>,
    pub res_production_speed: Option<f64>,
    pub res_partition: f64,
    pub res_fisher_identities: f64,
    pub res_energy: f64,
}

impl Row {
    fn values(&self) -> [Option<f64>; 23] {
        let s = &self.info.slacks;
        [
            Some(self.t),
            Some(self.energy),
            Some(self.info.s_q),
            Some(self.info.s_p),
            Some(self.info.fisher),
            Some(self.info.var_x),
            Some(self.var_p),
            Some(self.velocities.var_u),
            Some(self.velocities.var_v),
            Some(self.s_rate),
            Some(self.s_int_rate),
            Some(self.s_ext_rate),
            self.internal_energy,
            self.free_energy,
            Some(self.work_rate),
            Some(self.heat_rate),
            self.res_first_law,
            self.res_extremum,
            self.res_feedback,
            Some(s.entropic_uncertainty),
            Some(s.fisher_vs_entropy_power),
            Some(s.entropy_power_vs_variance),
            Some(s.momentum_variance_vs_fisher),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Bound {
    /// `|value| ≤ limit`
    Magnitude,
    /// `value ≥ −limit`
    NonNegative,
}

/// A hard invariant evaluated over the whole run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub bound: Bound,
    pub limit: f64,
    /// Worst value: largest magnitude, or smallest value for lower bounds.
    pub worst: f64,
    /// Time of the worst value.
    pub at: f64,
    /// How many rows contributed.
    pub samples: usize,
}

impl Check {
    fn over(
        name: &'static str,
        bound: Bound,
        limit: f64,
        rows: &[Row],
        pick: impl Fn(&Row) -> Option<f64>,
    ) -> Self {
        let mut worst = match bound {
            Bound::Magnitude => 0.0,
            Bound::NonNegative => f64::INFINITY,
        };
        let mut at = f64::NAN;
        let mut samples = 0;
        for r in rows {
            let Some(v) = pick(r) else { continue };
            if samples == 0 {
                at = r.t;
            }
            samples += 1;
            let worse = match bound {
                Bound::Magnitude => v.is_nan() || v.abs() > worst,
                Bound::NonNegative => v.is_nan() || v < worst,
            };
            if worse {
                worst = match bound {
                    Bound::Magnitude => v.abs(),
                    Bound::NonNegative => v,
                };
                at = r.t;
            }
        }
        Self {
            name,
            bound,
            limit,
            worst,
            at,
            samples,
        }
    }

    pub fn passed(&self) -> bool {
        match self.bound {
            Bound::Magnitude => self.worst <= self.limit,
            Bound::NonNegative => self.worst >= -self.limit,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub rows: Vec<Row>,
    pub checks: Vec<Check>,
    pub probe: ProductionProbe,
    pub trajectory: Trajectory,
    pub ledger: ThermoLedger,
    pub feedback: Vec<FeedbackRow>,
}

impl RunOutput {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(Check::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed())
    }

    /// Rows nearest to time `t`.
    pub fn row_at(&self, t: f64) -> &Row {
        self.rows
            .iter()
            .min_by(|a, b| (a.t - t).abs().total_cmp(&(b.t - t).abs()))
            .expect("runs have at least one row")
    }
}

struct Audit {
    info: InfoReport,
    velocities: VelocityVariances,
    var_p: f64,
    res_partition: f64,
    res_fisher: f64,
    res_energy: f64,
}

fn audit(wf: &WaveFunction, pot: &Potential, t: f64, units: &Units) -> Result<Audit> {
    let info = InfoReport::of(wf)?;
    let velocities = hydro::velocity_variances(&hydro::decompose(wf, units));
    let hbar = units.hbar();
    let var_p = hbar * hbar * info.var_p;
    let ids = hydro::fisher_identities(wf, units, f64::INFINITY)?;
    let res_fisher = ids.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    let (_, res_energy) = propagate::hydrodynamic_energy_residual(wf, pot, t, units);
    Ok(Audit {
        info,
        var_p,
        res_partition: velocities.momentum_variance(units) - var_p,
        velocities,
        res_fisher,
        res_energy,
    })
}

impl Scenario {
    pub fn run(&self) -> Result<RunOutput> {
        let cfg = &self.config;
        let units = self.params.units;
        let pot = &cfg.potential;
        log::info!(
            "evolving {} steps of dt = {} ({}), snapshot every {}",
            self.n_steps,
            cfg.evolution.dt,
            cfg.evolution.scheme,
            cfg.evolution.snapshot_stride
        );
        let trajectory = evolve(
            &self.initial,
            pot,
            cfg.evolution.dt,
            self.n_steps,
            cfg.evolution.snapshot_stride,
            cfg.evolution.scheme,
            &units,
        )?;
        log::info!("auditing {} snapshots", trajectory.len());
        let audits = trajectory
            .snapshots
            .par_iter()
            .zip(trajectory.times.par_iter())
            .map(|(wf, &t)| audit(wf, pot, t, &units))
            .collect::<Result<Vec<_>>>()?;
        let ledger = thermo::law_residuals(&trajectory, pot, &self.params)?;
        let feedback = if ledger.len() >= thermo::MIN_FEEDBACK_SNAPSHOTS {
            thermo::feedback_and_speeds(&ledger)?
        } else {
            Vec::new()
        };
        let probe = thermo::minimum_entropy_production_probe(&ledger);

        let rows: Vec<Row> = audits
            .into_iter()
            .zip(&ledger.rows)
            .enumerate()
            .map(|(i, (a, l))| {
                let fb = feedback.get(i);
                Row {
                    t: l.t,
                    energy: l.energy,
                    info: a.info,
                    var_p: a.var_p,
                    velocities: a.velocities,
                    s_rate: l.rates.total,
                    s_int_rate: l.rates.internal,
                    s_ext_rate: l.rates.external,
                    internal_energy: l.internal_energy,
                    free_energy: l.free_energy,
                    work_rate: l.work_rate,
                    heat_rate: l.heat_rate,
                    res_first_law: l.residual_first_law,
                    res_extremum: l.residual_extremum,
                    res_feedback: fb.and_then(|f| f.residual_feedback),
                    res_entropy_rate: l.residual_entropy_rate,
                    res_free_energy_speed: fb.and_then(|f| f.residual_free_energy_speed),
                    res_production_speed: fb.and_then(|f| f.residual_production_speed),
                    res_partition: a.res_partition,
                    res_fisher_identities: a.res_fisher,
                    res_energy: a.res_energy,
                }
            })
            .collect();

        let tol = cfg.tolerances;
        let e0 = rows[0].energy;
        let mut checks = vec![
            Check::over(
                "inequality slacks",
                Bound::NonNegative,
                tol.tol_slack,
                &rows,
                |r| Some(r.info.slacks.worst().1),
            ),
            Check::over(
                "Fisher identities",
                Bound::Magnitude,
                TOL_IDENTITY,
                &rows,
                |r| Some(r.res_fisher_identities),
            ),
            Check::over(
                "variance partition",
                Bound::Magnitude,
                TOL_IDENTITY,
                &rows,
                |r| Some(r.res_partition),
            ),
            Check::over(
                "hydrodynamic energy",
                Bound::Magnitude,
                TOL_IDENTITY,
                &rows,
                |r| Some(r.res_energy),
            ),
            Check::over(
                "entropy production",
                Bound::NonNegative,
                TOL_PRODUCTION,
                &rows,
                |r| Some(r.s_int_rate),
            ),
            Check::over("entropy rate", Bound::Magnitude, tol.tol_rate, &rows, |r| {
                r.res_entropy_rate
            }),
            Check::over("first law", Bound::Magnitude, tol.tol_rate, &rows, |r| {
                r.res_first_law
            }),
            Check::over(
                "extremum principle",
                Bound::Magnitude,
                tol.tol_rate,
                &rows,
                |r| r.res_extremum,
            ),
            Check::over(
                "feedback relation",
                Bound::Magnitude,
                tol.tol_rate2,
                &rows,
                |r| r.res_feedback,
            ),
            Check::over(
                "free-energy speed",
                Bound::Magnitude,
                tol.tol_rate2,
                &rows,
                |r| r.res_free_energy_speed,
            ),
            Check::over(
                "production speed",
                Bound::Magnitude,
                tol.tol_rate2,
                &rows,
                |r| r.res_production_speed,
            ),
        ];
        if pot.is_static() {
            let scale = e0.abs().max(f64::MIN_POSITIVE);
            checks.push(Check::over(
                "energy conservation",
                Bound::Magnitude,
                TOL_ENERGY_DRIFT,
                &rows,
                |r| Some((r.energy - e0) / scale),
            ));
        }
        Ok(RunOutput {
            rows,
            checks,
            probe,
            trajectory,
            ledger,
            feedback,
        })
    }
}

/// `precision` significant digits; fixed notation for moderate exponents,
/// scientific otherwise.
pub fn format_number(x: f64, precision: usize) -> String {
    let p = precision.max(1);
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..p as i32).contains(&exp) {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        // rounding can carry into a new leading digit; the value is still exact
        // to the requested digits, so only trim
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.*e}", p - 1)
    }
}

pub fn write_csv<W: io::Write>(rows: &[Row], precision: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    w.write_record(CSV_HEADER).map_err(io_err)?;
    for r in rows {
        let fields = r
            .values()
            .map(|v| v.map(|x| format_number(x, precision)).unwrap_or_default());
        w.write_record(&fields).map_err(io_err)?;
    }
    w.flush()
        .map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Long-format dump of `ρ, u, v, Q` at every grid point of every snapshot.
pub fn write_fields_csv<W: io::Write>(
    traj: &Trajectory,
    units: &Units,
    precision: usize,
    out: W,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io_err = |e: csv::Error| Error::Config(format!("writing CSV: {e}"));
    w.write_record(FIELDS_HEADER).map_err(io_err)?;
    for (wf, &t) in traj.snapshots.iter().zip(&traj.times) {
        let f = hydro::decompose(wf, units);
        let ts = format_number(t, precision);
        for (j, &x) in wf.grid().x_values().iter().enumerate() {
            w.write_record([
                ts.clone(),
                format_number(x, precision),
                format_number(f.rho[j], precision),
                format_number(f.u[j], precision),
                format_number(f.v[j], precision),
                format_number(f.q_pot[j], precision),
            ])
            .map_err(io_err)?;
        }
    }
    w.flush()
        .map_err(|e| Error::Config(format!("writing CSV: {e}")))?;
    Ok(())
}

/// Path of the field dump that accompanies `csv_path`.
pub fn fields_path(csv_path: &Path) -> PathBuf {
    let stem = csv_path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("scenario");
    csv_path.with_file_name(format!("{stem}_fields.csv"))
}

/// Human-readable run summary: residual ranges, hard checks, probe.
type Pick = fn(&Row) -> Option<f64>;

pub fn summary(out: &RunOutput) -> String {
    let mut s = String::new();
    let rows = &out.rows;
    let _ = writeln!(
        s,
        "snapshots: {}  t_final: {}",
        rows.len(),
        rows.last().map_or(0.0, |r| r.t)
    );
    let _ = writeln!(s, "{:<16} {:>14} {:>14}", "column", "min", "max");
    let columns: [(&str, Pick); 7] = [
        ("res_first_law", |r| r.res_first_law),
        ("res_extremum", |r| r.res_extremum),
        ("res_feedback", |r| r.res_feedback),
        ("slack_eq3", |r| Some(r.info.slacks.entropic_uncertainty)),
        ("slack_eq7a", |r| {
            Some(r.info.slacks.fisher_vs_entropy_power)
        }),
        ("slack_eq7b", |r| {
            Some(r.info.slacks.entropy_power_vs_variance)
        }),
        ("slack_eq26", |r| {
            Some(r.info.slacks.momentum_variance_vs_fisher)
        }),
    ];
    for (name, pick) in columns {
        let vals: Vec<f64> = rows.iter().filter_map(pick).collect();
        if vals.is_empty() {
            let _ = writeln!(s, "{name:<16} {:>14} {:>14}", "-", "-");
        } else {
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let _ = writeln!(s, "{name:<16} {lo:>14.6e} {hi:>14.6e}");
        }
    }
    for c in &out.checks {
        let verdict = if c.passed() { "ok" } else { "FAILED" };
        let rel = match c.bound {
            Bound::Magnitude => "|max| =",
            Bound::NonNegative => "min =",
        };
        if c.samples == 0 {
            let _ = writeln!(s, "[{verdict:>6}] {:<22} no samples", c.name);
        } else {
            let _ = writeln!(
                s,
                "[{verdict:>6}] {:<22} {rel} {:.3e} (limit {:.1e}, t = {})",
                c.name,
                c.worst,
                c.limit,
                format_number(c.at, 6)
            );
        }
    }
    let _ = writeln!(
        s,
        "entropy production trend: {} ({} sign changes)",
        out.probe.trend, out.probe.sign_changes
    );
    let _ = writeln!(s, "verdict: {}", if out.passed() { "PASS" } else { "FAIL" });
    s
}
