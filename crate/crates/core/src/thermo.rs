//! Thermodynamic analogs along a trajectory: entropy-rate split, Smoluchowski
//! potential, internal and free energy, work and heat rates, and the balance
//! relations between them.
//!
//! Units: `k_B = 1`, `T₀ = m D β₀`. Phase-dependent quantities (`U`, `F`) exist
//! only for nodeless snapshots; rates need only the velocity fields.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hydro::{self, HydroFields};
use crate::info;
use crate::potential::Potential;
use crate::propagate::{energy, Trajectory};
use crate::wave::{Units, WaveFunction};

/// Default bound on first-difference residuals at a snapshot interval of 1e-2.
pub const DEFAULT_TOL_RATE: f64 = 1e-3;
/// Default bound on second-difference residuals.
pub const DEFAULT_TOL_RATE2: f64 = 1e-2;
/// Agreement required between the two routes to `F`.
pub const HELMHOLTZ_TOL: f64 = 1e-6;
/// Minimum ledger length for the second-difference series.
pub const MIN_FEEDBACK_SNAPSHOTS: usize = 5;
/// Probability mass whose phase may land on a different branch than the rest
/// between consecutive snapshots before the phase counts as discontinuous.
pub const BRANCH_MASS_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThermoParams {
    pub units: Units,
    pub beta0: f64,
}

impl Default for ThermoParams {
    fn default() -> Self {
        Self {
            units: Units::default(),
            beta0: 1.0,
        }
    }
}

impl ThermoParams {
    pub fn new(units: Units, beta0: f64) -> Result<Self> {
        let p = Self { units, beta0 };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        self.units.validate()?;
        if !(self.beta0 > 0.0 && self.beta0.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "beta0 = {} must be > 0",
                self.beta0
            )));
        }
        Ok(())
    }

    /// `T₀ = m D β₀` (from `D = k_B T₀ / m β₀`).
    pub fn t0(&self) -> f64 {
        self.units.m * self.units.d * self.beta0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EntropyRates {
    /// `Ṡ = −⟨u v⟩/D`
    pub total: f64,
    /// `Ṡ_int = ⟨v²⟩/D`
    pub internal: f64,
    /// `Ṡ_ext = −⟨b v⟩/D`
    pub external: f64,
}

impl EntropyRates {
    pub fn from_fields(fields: &HydroFields) -> Self {
        let d = fields.diffusion();
        let internal = fields.mean_v2() / d;
        let external = -fields.mean_bv() / d;
        Self {
            total: internal + external,
            internal,
            external,
        }
    }
}

pub fn entropy_rates(wf: &WaveFunction, params: &ThermoParams) -> EntropyRates {
    EntropyRates::from_fields(&hydro::decompose(wf, &params.units))
}

/// `V_smol = −mβ₀(s + D ln ρ)` and `U = ⟨V_smol⟩`. The phase `s` carries the
/// gauge of the unwrapping, so `U` is defined up to a constant.
pub fn smoluchowski_potential(wf: &WaveFunction, params: &ThermoParams) -> Result<(Vec<f64>, f64)> {
    let fields = hydro::decompose(wf, &params.units);
    let s = fields.s_phase.as_ref().ok_or(Error::NodalState)?;
    let (m, d, b) = (params.units.m, params.units.d, params.beta0);
    let v_smol = s
        .iter()
        .zip(&fields.rho)
        .map(|(s, r)| -m * b * (s + d * r.max(f64::MIN_POSITIVE).ln()))
        .collect();
    let entropy = info::shannon_entropy(&fields.rho, wf.grid())?;
    let u = -m * b * fields.expect(s) + params.t0() * entropy;
    Ok((v_smol, u))
}

/// `F = U − T₀ S`, cross-checked against `−mβ₀⟨s⟩`.
pub fn helmholtz(wf: &WaveFunction, params: &ThermoParams) -> Result<f64> {
    let (v_smol, _) = smoluchowski_potential(wf, params)?;
    let rho = wf.density();
    // ⟨V_smol⟩ by direct quadrature; ρ ln ρ → 0 where ρ vanishes
    let u: f64 = rho
        .iter()
        .zip(&v_smol)
        .map(|(r, v)| if *r > 0.0 { r * v } else { 0.0 })
        .sum::<f64>()
        * wf.grid().dx();
    let f = u - params.t0() * info::shannon_entropy(&rho, wf.grid())?;
    let fields = hydro::decompose(wf, &params.units);
    let s = fields.s_phase.as_ref().ok_or(Error::NodalState)?;
    let cross = -params.units.m * params.beta0 * fields.expect(s);
    let residual = f - cross;
    if residual.abs() > HELMHOLTZ_TOL {
        return Err(Error::IdentityViolated {
            identity: "F = U - T0 S = -m beta0 <s>",
            residual,
            tol: HELMHOLTZ_TOL,
        });
    }
    Ok(f)
}

/// `(Ẇ, Q̇) = (β₀ E(t), T₀ Ṡ_ext)`.
pub fn work_and_heat_rates(
    wf: &WaveFunction,
    pot: &Potential,
    params: &ThermoParams,
    t: f64,
) -> (f64, f64) {
    let w = params.beta0 * energy(wf, pot, t, &params.units);
    let q = params.t0() * entropy_rates(wf, params).external;
    (w, q)
}

/// One snapshot of the ledger. `None` marks values that need the phase of a
/// nodal snapshot, or finite differences reaching past the ends of the series
/// or across such a snapshot.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerRow {
    pub t: f64,
    pub energy: f64,
    pub entropy: f64,
    pub rates: EntropyRates,
    pub internal_energy: Option<f64>,
    pub free_energy: Option<f64>,
    pub work_rate: f64,
    pub heat_rate: f64,
    pub mean_u2: f64,
    pub mean_v2: f64,
    pub mean_potential: f64,
    /// Index of the stretch of snapshots over which the phase is continuous
    /// in time; `None` for nodal snapshots. Finite differences of `U` and `F`
    /// are only taken inside one stretch.
    pub segment: Option<usize>,
    /// Centered difference of `S`.
    pub entropy_rate_fd: Option<f64>,
    pub free_energy_rate: Option<f64>,
    pub internal_energy_rate: Option<f64>,
    /// `dS/dt − Ṡ`
    pub residual_entropy_rate: Option<f64>,
    /// `U̇ − Ẇ − Q̇`
    pub residual_first_law: Option<f64>,
    /// `Ḟ − Ẇ + T₀ Ṡ_int`
    pub residual_extremum: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct ThermoLedger {
    pub params: ThermoParams,
    /// Snapshot spacing used for the finite differences.
    pub interval: f64,
    pub rows: Vec<LedgerRow>,
}

struct Local {
    energy: f64,
    entropy: f64,
    rates: EntropyRates,
    mean_u2: f64,
    mean_v2: f64,
    mean_potential: f64,
    rho: Vec<f64>,
    phase: Option<Vec<f64>>,
}

fn local(wf: &WaveFunction, pot: &Potential, t: f64, params: &ThermoParams) -> Result<Local> {
    let fields = hydro::decompose(wf, &params.units);
    let entropy = info::shannon_entropy(&fields.rho, wf.grid())?;
    Ok(Local {
        energy: energy(wf, pot, t, &params.units),
        entropy,
        rates: EntropyRates::from_fields(&fields),
        mean_u2: fields.mean_u2(),
        mean_v2: fields.mean_v2(),
        mean_potential: pot.expectation(&fields.rho, wf.grid(), t, &params.units),
        rho: fields.rho,
        phase: fields.s_phase,
    })
}

/// Whole-branch offset `k` with `s_cur − s_prev ≈ 2π·2D·k` over the common
/// support, or `None` if more than [`BRANCH_MASS_TOL`] of the mass disagrees
/// (a node passed between the two snapshots).
fn branch_step(prev: &Local, cur: &Local, branch: f64, dx: f64) -> Option<i64> {
    let (sp, sc) = (prev.phase.as_ref()?, cur.phase.as_ref()?);
    let tp = hydro::NODE_THRESHOLD * info::max_of(&prev.rho);
    let tc = hydro::NODE_THRESHOLD * info::max_of(&cur.rho);
    let mut mass: BTreeMap<i64, f64> = BTreeMap::new();
    for j in 0..sc.len() {
        if prev.rho[j] > tp && cur.rho[j] > tc {
            let k = ((sc[j] - sp[j]) / branch).round() as i64;
            *mass.entry(k).or_default() += cur.rho[j] * dx;
        }
    }
    let total: f64 = mass.values().sum();
    let (&k, &top) = mass.iter().max_by(|a, b| a.1.total_cmp(b.1))?;
    (total - top <= BRANCH_MASS_TOL).then_some(k)
}

/// Builds the ledger for a trajectory. The per-snapshot functionals are
/// evaluated in parallel; the phase branch and the finite differences are
/// then resolved in one sequential pass.
pub fn law_residuals(
    traj: &Trajectory,
    pot: &Potential,
    params: &ThermoParams,
) -> Result<ThermoLedger> {
    params.validate()?;
    let locals = traj
        .snapshots
        .par_iter()
        .zip(traj.times.par_iter())
        .map(|(wf, &t)| local(wf, pot, t, params))
        .collect::<Result<Vec<_>>>()?;

    let (m, d, beta0, t0) = (params.units.m, params.units.d, params.beta0, params.t0());
    // The unwrapped phase is anchored to a principal value, so consecutive
    // snapshots can differ by whole branches 2π·2D; those are removed. A node
    // passing between snapshots moves only part of the mass to another
    // branch, which makes ⟨s⟩ jump; a new segment starts there.
    let branch = TAU * 2.0 * d;
    let dx = traj.grid().dx();
    let mut mean_s: Vec<Option<f64>> = Vec::with_capacity(locals.len());
    let mut segment: Vec<Option<usize>> = Vec::with_capacity(locals.len());
    let mut shift = 0.0;
    let mut next_segment = 0;
    for i in 0..locals.len() {
        let cur = &locals[i];
        let Some(s) = cur.phase.as_ref() else {
            mean_s.push(None);
            segment.push(None);
            continue;
        };
        let step = i
            .checked_sub(1)
            .and_then(|j| branch_step(&locals[j], cur, branch, dx));
        let seg = match step {
            Some(k) => {
                shift -= k as f64 * branch;
                segment[i - 1].expect("a branch step implies a phase")
            }
            None => {
                shift = 0.0;
                next_segment += 1;
                next_segment - 1
            }
        };
        mean_s.push(Some(expect(&cur.rho, s, dx) + shift));
        segment.push(Some(seg));
    }

    let mut rows: Vec<LedgerRow> = locals
        .iter()
        .zip(&traj.times)
        .zip(mean_s.iter().zip(&segment))
        .map(|((l, &t), (s, &segment))| {
            let free_energy = s.map(|s| -m * beta0 * s);
            LedgerRow {
                t,
                energy: l.energy,
                entropy: l.entropy,
                rates: l.rates,
                internal_energy: free_energy.map(|f| f + t0 * l.entropy),
                free_energy,
                work_rate: beta0 * l.energy,
                heat_rate: t0 * l.rates.external,
                mean_u2: l.mean_u2,
                mean_v2: l.mean_v2,
                mean_potential: l.mean_potential,
                segment,
                entropy_rate_fd: None,
                free_energy_rate: None,
                internal_energy_rate: None,
                residual_entropy_rate: None,
                residual_first_law: None,
                residual_extremum: None,
            }
        })
        .collect();

    let h = traj.snapshot_interval();
    let n = rows.len();
    for i in 1..n.saturating_sub(1) {
        let (a, b) = (&rows[i - 1], &rows[i + 1]);
        let ds = (b.entropy - a.entropy) / (2.0 * h);
        let df = a
            .free_energy
            .zip(b.free_energy)
            .map(|(x, y)| (y - x) / (2.0 * h));
        let du = a
            .internal_energy
            .zip(b.internal_energy)
            .map(|(x, y)| (y - x) / (2.0 * h));
        let available = rows[i].segment.is_some()
            && rows[i - 1].segment == rows[i].segment
            && rows[i + 1].segment == rows[i].segment;
        let r = &mut rows[i];
        r.entropy_rate_fd = Some(ds);
        r.residual_entropy_rate = Some(ds - r.rates.total);
        r.free_energy_rate = df.filter(|_| available);
        r.internal_energy_rate = du.filter(|_| available);
        r.residual_first_law = r
            .internal_energy_rate
            .map(|du| du - r.work_rate - r.heat_rate);
        r.residual_extremum = r
            .free_energy_rate
            .map(|df| df - r.work_rate + t0 * r.rates.internal);
    }
    Ok(ThermoLedger {
        params: *params,
        interval: h,
        rows,
    })
}

impl ThermoLedger {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// Largest `|value|` over the rows where the value exists.
    pub fn max_abs(&self, pick: impl Fn(&LedgerRow) -> Option<f64>) -> Option<f64> {
        self.rows
            .iter()
            .filter_map(pick)
            .map(f64::abs)
            .reduce(f64::max)
    }
}

/// Second-difference series at one snapshot.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FeedbackRow {
    pub t: f64,
    /// `d/dt Ḟ`
    pub free_energy_accel: Option<f64>,
    /// `T₀ d/dt Ṡ_int`
    pub production_speed: Option<f64>,
    /// `dẆ/dt`, zero for static potentials.
    pub work_speed: Option<f64>,
    /// `d/dt Ḟ + T₀ d/dt Ṡ_int − dẆ/dt`
    pub residual_feedback: Option<f64>,
    /// `d/dt Ḟ − β₀ d/dt(m⟨u²⟩ + 2⟨𝒱⟩) + dẆ/dt`
    pub residual_free_energy_speed: Option<f64>,
    /// `T₀ d/dt Ṡ_int − mβ₀ d/dt⟨v²⟩`
    pub residual_production_speed: Option<f64>,
}

/// Negative-feedback relation between the free-energy and entropy-production
/// speeds, and the two speed formulas.
///
/// For a static potential the work rate is constant and the relations reduce
/// to `d/dt Ḟ = −T₀ d/dt Ṡ_int` and `d/dt Ḟ = β₀ d/dt(m⟨u²⟩ + 2⟨𝒱⟩)`. A driven
/// potential makes `Ẇ = β₀E(t)` vary, and both relations pick up `dẆ/dt`;
/// the residuals here include that term so that they vanish in both cases.
pub fn feedback_and_speeds(ledger: &ThermoLedger) -> Result<Vec<FeedbackRow>> {
    let n = ledger.len();
    if n < MIN_FEEDBACK_SNAPSHOTS {
        return Err(Error::TooFewSnapshots {
            needed: MIN_FEEDBACK_SNAPSHOTS,
            got: n,
        });
    }
    let p = &ledger.params;
    let (m, beta0, t0) = (p.units.m, p.beta0, p.t0());
    let h = ledger.interval;
    let rows = &ledger.rows;
    let centered =
        |f: &dyn Fn(&LedgerRow) -> f64, i: usize| (f(&rows[i + 1]) - f(&rows[i - 1])) / (2.0 * h);
    Ok((0..n)
        .map(|i| {
            let mut out = FeedbackRow {
                t: rows[i].t,
                free_energy_accel: None,
                production_speed: None,
                work_speed: None,
                residual_feedback: None,
                residual_free_energy_speed: None,
                residual_production_speed: None,
            };
            if i == 0 || i + 1 == n {
                return out;
            }
            let production = t0 * centered(&|r| r.rates.internal, i);
            let work = centered(&|r| r.work_rate, i);
            let hydro = beta0 * centered(&|r| m * r.mean_u2 + 2.0 * r.mean_potential, i);
            let v2 = m * beta0 * centered(&|r| r.mean_v2, i);
            let same = rows[i].segment.is_some()
                && rows[i - 1].segment == rows[i].segment
                && rows[i + 1].segment == rows[i].segment;
            let accel = match (
                rows[i - 1].free_energy,
                rows[i].free_energy,
                rows[i + 1].free_energy,
            ) {
                (Some(a), Some(b), Some(c)) if same => Some((c - 2.0 * b + a) / (h * h)),
                _ => None,
            };
            out.production_speed = Some(production);
            out.work_speed = Some(work);
            out.residual_production_speed = Some(production - v2);
            out.free_energy_accel = accel;
            out.residual_feedback = accel.map(|a| a + production - work);
            out.residual_free_energy_speed = accel.map(|a| a - hydro + work);
            out
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductionTrend {
    IdenticallyZero,
    MonotoneDecreasing,
    MonotoneIncreasing,
    Oscillatory,
    Other,
}

impl std::fmt::Display for ProductionTrend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ProductionTrend::IdenticallyZero => "identically zero",
            ProductionTrend::MonotoneDecreasing => "monotone decreasing",
            ProductionTrend::MonotoneIncreasing => "monotone increasing",
            ProductionTrend::Oscillatory => "oscillatory",
            ProductionTrend::Other => "other",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductionProbe {
    pub trend: ProductionTrend,
    pub sign_changes: usize,
    /// Largest `|d/dt Ṡ_int|` seen.
    pub max_speed: f64,
}

/// Derivative magnitudes at or below this count as zero in the sign pattern.
pub const PROBE_ZERO: f64 = 1e-9;

/// Sign pattern of `d/dt Ṡ_int`. Informational: the classical principle of
/// monotonically decaying entropy production need not hold here.
pub fn minimum_entropy_production_probe(ledger: &ThermoLedger) -> ProductionProbe {
    let h = ledger.interval;
    let speeds: Vec<f64> = ledger
        .rows
        .windows(3)
        .map(|w| (w[2].rates.internal - w[0].rates.internal) / (2.0 * h))
        .collect();
    let max_speed = speeds.iter().copied().map(f64::abs).fold(0.0, f64::max);
    let signs: Vec<f64> = speeds
        .iter()
        .filter(|s| s.abs() > PROBE_ZERO)
        .map(|s| s.signum())
        .collect();
    let sign_changes = signs.windows(2).filter(|w| w[0] != w[1]).count();
    let trend = if signs.is_empty() {
        ProductionTrend::IdenticallyZero
    } else if sign_changes >= 2 {
        ProductionTrend::Oscillatory
    } else if sign_changes == 1 {
        ProductionTrend::Other
    } else if signs[0] < 0.0 {
        ProductionTrend::MonotoneDecreasing
    } else {
        ProductionTrend::MonotoneIncreasing
    };
    ProductionProbe {
        trend,
        sign_changes,
        max_speed,
    }
}

fn expect(rho: &[f64], f: &[f64], dx: f64) -> f64 {
    rho.iter().zip(f).map(|(r, v)| r * v).sum::<f64>() * dx
}
