//! Time evolution under `i ∂_t ψ = −D Δψ + 𝒱 ψ / 2mD`.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hydro;
use crate::info;
use crate::potential::Potential;
use crate::states::EDGE_MASS_LIMIT;
use crate::wave::{Units, WaveFunction};

/// Norm drift that aborts an evolution.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;

/// Allowed mismatch between the hydrodynamic and operator energies.
pub const ENERGY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Strang splitting with spectral kinetic steps.
    #[default]
    SplitStep,
    /// Crank–Nicolson with a three-point Laplacian and Dirichlet walls.
    CrankNicolson,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SplitStep => "split_step",
            Scheme::CrankNicolson => "crank_nicolson",
        })
    }
}

/// Snapshots taken every `stride` steps, starting with the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub snapshots: Vec<WaveFunction>,
    pub dt: f64,
    pub stride: usize,
    pub scheme: Scheme,
}

impl Trajectory {
    /// Time between consecutive snapshots.
    pub fn snapshot_interval(&self) -> f64 {
        self.dt * self.stride as f64
    }

    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn grid(&self) -> &Grid1D {
        self.snapshots[0].grid()
    }
}

/// Single-scheme stepper holding precomputed factors.
pub struct Propagator {
    grid: Grid1D,
    potential: Potential,
    units: Units,
    dt: f64,
    scheme: Scheme,
    kin_half: Vec<Complex64>,
    kin_full: Vec<Complex64>,
    static_phase: Option<Vec<Complex64>>,
    scratch: Vec<Complex64>,
}

impl Propagator {
    pub fn new(
        grid: &Grid1D,
        potential: &Potential,
        units: &Units,
        dt: f64,
        scheme: Scheme,
    ) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt = {dt} must be > 0")));
        }
        units.validate()?;
        potential.validate(grid)?;
        let courant = dt * grid.k_max().powi(2) * units.d;
        if courant >= PI {
            log::warn!(
                "dt·k_max²·D = {courant:.3} ≥ π; the fastest grid modes wrap their phase within one step"
            );
        }
        let kin = |tau: f64| -> Vec<Complex64> {
            grid.k_values()
                .iter()
                .map(|k| Complex64::from_polar(1.0, -units.d * k * k * tau))
                .collect()
        };
        let mut p = Self {
            grid: grid.clone(),
            potential: potential.clone(),
            units: *units,
            dt,
            scheme,
            kin_half: kin(0.5 * dt),
            kin_full: kin(dt),
            static_phase: None,
            scratch: vec![Complex64::default(); grid.len()],
        };
        if potential.is_static() {
            p.static_phase = Some(p.potential_phase(0.0));
        }
        Ok(p)
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    fn potential_phase(&self, t: f64) -> Vec<Complex64> {
        let hbar = self.units.hbar();
        self.potential
            .sample(&self.grid, t, &self.units)
            .into_iter()
            .map(|v| Complex64::from_polar(1.0, -v * self.dt / hbar))
            .collect()
    }

    /// Advances `psi` from `t` by `steps` steps in place.
    pub fn advance(&mut self, psi: &mut [Complex64], t: f64, steps: usize) {
        if steps == 0 {
            return;
        }
        match self.scheme {
            Scheme::SplitStep => self.advance_split(psi, t, steps),
            Scheme::CrankNicolson => {
                for s in 0..steps {
                    self.step_cn(psi, t + (s as f64 + 0.5) * self.dt);
                }
            }
        }
    }

    // Adjacent kinetic half-steps are merged, so a block of `steps` costs one
    // forward and one inverse transform per step.
    fn advance_split(&mut self, psi: &mut [Complex64], t: f64, steps: usize) {
        let grid = self.grid.clone();
        grid.fft(psi);
        mul(psi, &self.kin_half);
        for s in 0..steps {
            grid.ifft(psi);
            match &self.static_phase {
                Some(ph) => mul(psi, ph),
                None => {
                    let ph = self.potential_phase(t + (s as f64 + 0.5) * self.dt);
                    mul(psi, &ph);
                }
            }
            grid.fft(psi);
            mul(
                psi,
                if s + 1 == steps {
                    &self.kin_half
                } else {
                    &self.kin_full
                },
            );
        }
        grid.ifft(psi);
    }

    fn step_cn(&mut self, psi: &mut [Complex64], t_mid: f64) {
        let n = psi.len();
        let hbar = self.units.hbar();
        let tau = 0.5 * self.dt;
        let lap = self.units.d / (self.grid.dx() * self.grid.dx());
        let v = self.potential.sample(&self.grid, t_mid, &self.units);
        let i = Complex64::i();
        let off = -i * tau * lap;
        // right-hand side (1 − iτH)ψ
        let rhs = &mut self.scratch;
        for j in 0..n {
            let left = if j > 0 {
                psi[j - 1]
            } else {
                Complex64::default()
            };
            let right = if j + 1 < n {
                psi[j + 1]
            } else {
                Complex64::default()
            };
            let h = -lap * (left + right - 2.0 * psi[j]) + psi[j] * (v[j] / hbar);
            rhs[j] = psi[j] - i * tau * h;
        }
        // Thomas algorithm for (1 + iτH)x = rhs
        let diag = |j: usize| Complex64::new(1.0, tau * (2.0 * lap + v[j] / hbar));
        let mut c_prime = vec![Complex64::default(); n];
        let mut beta = diag(0);
        c_prime[0] = off / beta;
        psi[0] = rhs[0] / beta;
        for j in 1..n {
            beta = diag(j) - off * c_prime[j - 1];
            c_prime[j] = off / beta;
            psi[j] = (rhs[j] - off * psi[j - 1]) / beta;
        }
        for j in (0..n - 1).rev() {
            let next = psi[j + 1];
            psi[j] -= c_prime[j] * next;
        }
    }
}

fn mul(a: &mut [Complex64], b: &[Complex64]) {
    a.iter_mut().zip(b).for_each(|(x, y)| *x *= y);
}

/// Evolves `wf0` for `n_steps` steps of size `dt`, keeping every `stride`-th
/// state. `n_steps` must be a multiple of `stride`.
pub fn evolve(
    wf0: &WaveFunction,
    pot: &Potential,
    dt: f64,
    n_steps: usize,
    stride: usize,
    scheme: Scheme,
    units: &Units,
) -> Result<Trajectory> {
    if stride == 0 || n_steps % stride != 0 {
        return Err(Error::InvalidParameter(format!(
            "n_steps = {n_steps} must be a positive multiple of stride = {stride}"
        )));
    }
    let norm = wf0.norm_sq();
    if (norm - 1.0).abs() > NORM_DRIFT_LIMIT {
        return Err(Error::NotNormalized { norm });
    }
    let grid = wf0.grid().clone();
    let mut prop = Propagator::new(&grid, pot, units, dt, scheme)?;
    let blocks = n_steps / stride;
    let mut times = Vec::with_capacity(blocks + 1);
    let mut snapshots = Vec::with_capacity(blocks + 1);
    times.push(0.0);
    snapshots.push(wf0.clone());
    let mut psi = wf0.psi().to_vec();
    for b in 0..blocks {
        let t0 = (b * stride) as f64 * dt;
        prop.advance(&mut psi, t0, stride);
        let t = ((b + 1) * stride) as f64 * dt;
        let wf = WaveFunction::from_parts(grid.clone(), psi.clone());
        monitor(&wf, t, norm)?;
        times.push(t);
        snapshots.push(wf);
    }
    Ok(Trajectory {
        times,
        snapshots,
        dt,
        stride,
        scheme,
    })
}

fn monitor(wf: &WaveFunction, t: f64, initial_norm: f64) -> Result<()> {
    let drift = (wf.norm_sq() - initial_norm).abs();
    if !drift.is_finite() || drift > NORM_DRIFT_LIMIT {
        return Err(Error::UnitarityLost { t, drift });
    }
    let edge_mass = wf.edge_mass();
    if edge_mass > EDGE_MASS_LIMIT {
        return Err(Error::BoxOverflow {
            edge_mass,
            limit: EDGE_MASS_LIMIT,
        });
    }
    Ok(())
}

/// `E = ⟨P²⟩/2m + ⟨𝒱(·, t)⟩`, kinetic part from the momentum density.
pub fn energy(wf: &WaveFunction, pot: &Potential, t: f64, units: &Units) -> f64 {
    let mo = info::moments(wf);
    let hbar = units.hbar();
    let p2 = hbar * hbar * (mo.var_p + mo.mean_p * mo.mean_p);
    p2 / (2.0 * units.m) + pot.expectation(&wf.density(), wf.grid(), t, units)
}

/// `½(⟨v²⟩ + ⟨u²⟩) + ⟨𝒱⟩/m`, checked against `energy / m`.
pub fn hydrodynamic_energy(
    wf: &WaveFunction,
    pot: &Potential,
    t: f64,
    units: &Units,
) -> Result<f64> {
    let (h, residual) = hydrodynamic_energy_residual(wf, pot, t, units);
    if residual.abs() > ENERGY_TOL {
        return Err(Error::IdentityViolated {
            identity: "hydrodynamic energy = E/m",
            residual,
            tol: ENERGY_TOL,
        });
    }
    Ok(h)
}

/// The hydrodynamic energy and its difference from `energy / m`, unchecked.
pub fn hydrodynamic_energy_residual(
    wf: &WaveFunction,
    pot: &Potential,
    t: f64,
    units: &Units,
) -> (f64, f64) {
    let f = hydro::decompose(wf, units);
    let h =
        0.5 * (f.mean_v2() + f.mean_u2()) + pot.expectation(&f.rho, wf.grid(), t, units) / units.m;
    (h, h - energy(wf, pot, t, units) / units.m)
}
