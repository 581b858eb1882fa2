//! Madelung decomposition `ψ = √ρ e^{is/2D}` and the velocity-field identities.
//!
//! Velocities come from ψ and its spectral derivatives, never from a wrapped
//! phase:
//!
//! ```text
//! u = D ρ'/ρ,   v = 2D Im(ψ̄ψ')/ρ,   Q = ½u² + D u',
//! ρ' = 2 Re(ψ̄ψ'),   ρ'' = 2 Re(ψ̄ψ'') + 2|ψ'|².
//! ```
//!
//! Below the density floor, and at grid points next to a node too narrow for
//! the grid to resolve, the pointwise fields are set to zero while the
//! weighted integrands (`ρu²`, `ρv²`, `ρu'`) switch to their finite limits at a
//! double zero of ρ, so nodes still contribute correctly.

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::info::{self, DENSITY_FLOOR};
use crate::wave::{Units, WaveFunction};

/// Relative density below which a state counts as nodal for phase unwrapping.
pub const NODE_THRESHOLD: f64 = 1e-10;

/// Largest phase step between neighbouring support points for which the
/// unwrapped phase is still considered resolved.
pub const MAX_PHASE_STEP: f64 = PI / 2.0;

/// Default tolerance for the Fisher and variance identities.
pub const DEFAULT_TOL_IDENTITY: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct HydroFields {
    grid: Grid1D,
    d: f64,
    pub rho: Vec<f64>,
    /// Osmotic velocity `u = D (ln ρ)'`.
    pub u: Vec<f64>,
    /// Current velocity `v = s'`.
    pub v: Vec<f64>,
    /// Quantum potential `Q = ½u² + D u'`.
    pub q_pot: Vec<f64>,
    /// Phase `s` (with `ψ = √ρ e^{is/2D}`), only for nodeless states.
    pub s_phase: Option<Vec<f64>>,
    /// Drift `b = u + v`.
    pub b_drift: Vec<f64>,
    current: Vec<f64>,
    rho_u2: Vec<f64>,
    rho_v2: Vec<f64>,
    rho_uv: Vec<f64>,
    rho_du: Vec<f64>,
}

pub fn decompose(wf: &WaveFunction, units: &Units) -> HydroFields {
    let grid = wf.grid().clone();
    let d = units.d;
    let psi = wf.psi();
    let d1 = wf.derivative(1);
    let d2 = wf.derivative(2);
    let rho = wf.density();
    let cutoff = DENSITY_FLOOR * info::max_of(&rho);
    let n = grid.len();

    let mut u = vec![0.0; n];
    let mut v = vec![0.0; n];
    let mut q_pot = vec![0.0; n];
    let mut current = vec![0.0; n];
    let mut rho_u2 = vec![0.0; n];
    let mut rho_v2 = vec![0.0; n];
    let mut rho_uv = vec![0.0; n];
    let mut rho_du = vec![0.0; n];

    for j in 0..n {
        let g = psi[j].conj() * d1[j];
        let r = rho[j];
        let r1 = 2.0 * g.re;
        let r2 = 2.0 * (psi[j].conj() * d2[j]).re + 2.0 * d1[j].norm_sqr();
        let jc = 2.0 * d * g.im;
        current[j] = jc;
        if !info::unresolved_node(r, r1, r2, cutoff, grid.dx()) {
            let uj = d * r1 / r;
            let vj = jc / r;
            let du = d * (r2 / r - (r1 / r).powi(2));
            u[j] = uj;
            v[j] = vj;
            q_pot[j] = 0.5 * uj * uj + d * du;
            rho_u2[j] = d * d * r1 * r1 / r;
            rho_v2[j] = jc * jc / r;
            rho_uv[j] = d * r1 * jc / r;
            rho_du[j] = d * (r2 - r1 * r1 / r);
        } else {
            rho_u2[j] = 2.0 * d * d * r2;
            rho_v2[j] = 4.0 * d * d * d1[j].norm_sqr() - 2.0 * d * d * r2;
            rho_du[j] = -d * r2;
        }
    }
    let b_drift = u.iter().zip(&v).map(|(a, b)| a + b).collect();
    let s_phase = unwrap_phase(wf, &rho, d);
    HydroFields {
        grid,
        d,
        rho,
        u,
        v,
        q_pot,
        s_phase,
        b_drift,
        current,
        rho_u2,
        rho_v2,
        rho_uv,
        rho_du,
    }
}

impl HydroFields {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn diffusion(&self) -> f64 {
        self.d
    }

    pub fn is_nodeless(&self) -> bool {
        self.s_phase.is_some()
    }

    /// Probability current `j = ρ v = 2D Im(ψ̄ψ')`.
    pub fn current(&self) -> &[f64] {
        &self.current
    }

    pub fn mean_u(&self) -> f64 {
        self.d
            * self
                .grid
                .integrate(&self.grid.derivative_real(&self.rho, 1))
    }

    pub fn mean_u2(&self) -> f64 {
        self.grid.integrate(&self.rho_u2)
    }

    pub fn mean_v(&self) -> f64 {
        self.grid.integrate(&self.current)
    }

    pub fn mean_v2(&self) -> f64 {
        self.grid.integrate(&self.rho_v2)
    }

    pub fn mean_uv(&self) -> f64 {
        self.grid.integrate(&self.rho_uv)
    }

    /// `⟨b·v⟩ = ⟨u v⟩ + ⟨v²⟩`.
    pub fn mean_bv(&self) -> f64 {
        self.mean_uv() + self.mean_v2()
    }

    /// `⟨∇·u⟩`.
    pub fn mean_du(&self) -> f64 {
        self.grid.integrate(&self.rho_du)
    }

    /// `⟨Q⟩ = ½⟨u²⟩ + D⟨∇·u⟩`.
    pub fn mean_q(&self) -> f64 {
        0.5 * self.mean_u2() + self.d * self.mean_du()
    }

    /// `⟨f⟩` for a field sampled on the grid.
    pub fn expect(&self, f: &[f64]) -> f64 {
        self.rho.iter().zip(f).map(|(r, v)| r * v).sum::<f64>() * self.grid.dx()
    }

    /// `−∂_x(ρ v)`: the right-hand side of the continuity equation.
    pub fn continuity_rhs(&self) -> Vec<f64> {
        self.grid
            .derivative_real(&self.current, 1)
            .into_iter()
            .map(|x| -x)
            .collect()
    }

    /// `D Δρ − ∂_x(b ρ)`: the Fokker–Planck right-hand side, built from the
    /// pointwise drift field.
    pub fn fokker_planck_rhs(&self) -> Vec<f64> {
        let flux: Vec<f64> = self
            .b_drift
            .iter()
            .zip(&self.rho)
            .map(|(b, r)| b * r)
            .collect();
        let dflux = self.grid.derivative_real(&flux, 1);
        let lap = self.grid.derivative_real(&self.rho, 2);
        lap.iter()
            .zip(&dflux)
            .map(|(l, f)| self.d * l - f)
            .collect()
    }
}

/// Cumulative phase unwrapping over the support `ρ > NODE_THRESHOLD · max ρ`.
/// Returns `None` when the support is split by a node or the phase is not
/// resolved by the grid. The phase is anchored at the left end of the support
/// and held constant beyond either end.
fn unwrap_phase(wf: &WaveFunction, rho: &[f64], d: f64) -> Option<Vec<f64>> {
    let threshold = NODE_THRESHOLD * info::max_of(rho);
    let first = rho.iter().position(|&r| r > threshold)?;
    let last = rho.iter().rposition(|&r| r > threshold)?;
    if rho[first..=last].iter().any(|&r| r <= threshold) {
        return None;
    }
    let psi = wf.psi();
    let n = psi.len();
    let mut s = vec![0.0; n];
    let mut acc = psi[first].arg();
    s[first] = acc;
    for j in first + 1..=last {
        let step = (psi[j] * psi[j - 1].conj()).arg();
        if step.abs() > MAX_PHASE_STEP {
            return None;
        }
        acc += step;
        s[j] = acc;
    }
    let (head, tail) = (s[first], s[last]);
    s[..first].iter_mut().for_each(|x| *x = head);
    s[last + 1..].iter_mut().for_each(|x| *x = tail);
    s.iter_mut().for_each(|x| *x *= 2.0 * d);
    Some(s)
}

/// Quantum potential from the amplitude form `2D² Δ√ρ / √ρ`, for nodeless
/// states. Entries where ρ is below `NODE_THRESHOLD · max ρ` are `None`.
pub fn quantum_potential_from_amplitude(wf: &WaveFunction, units: &Units) -> Vec<Option<f64>> {
    let rho = wf.density();
    let amp: Vec<f64> = rho.iter().map(|r| r.sqrt()).collect();
    let lap = wf.grid().derivative_real(&amp, 2);
    let threshold = NODE_THRESHOLD * info::max_of(&rho);
    amp.iter()
        .zip(&lap)
        .zip(&rho)
        .map(|((a, l), &r)| (r > threshold).then(|| 2.0 * units.d * units.d * l / a))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VelocityVariances {
    pub var_u: f64,
    pub var_v: f64,
    pub mean_v: f64,
    pub mean_u: f64,
}

impl VelocityVariances {
    /// `m²(σ_u² + σ_v²)`, which equals the momentum variance `σ̃²`.
    pub fn momentum_variance(&self, units: &Units) -> f64 {
        units.m * units.m * (self.var_u + self.var_v)
    }
}

pub fn velocity_variances(fields: &HydroFields) -> VelocityVariances {
    let mean_v = fields.mean_v();
    VelocityVariances {
        var_u: fields.mean_u2(),
        var_v: fields.mean_v2() - mean_v * mean_v,
        mean_v,
        mean_u: fields.mean_u(),
    }
}

/// `σ̃² = (ΔP)²` with `P = −i ħ d/dx`, `ħ = 2mD`, from the momentum density.
pub fn momentum_variance(wf: &WaveFunction, units: &Units) -> f64 {
    let hbar = units.hbar();
    hbar * hbar * info::moments(wf).var_p
}

/// Residual of `m²(σ_u² + σ_v²) = σ̃²`.
pub fn variance_partition_residual(wf: &WaveFunction, units: &Units) -> f64 {
    let vv = velocity_variances(&decompose(wf, units));
    vv.momentum_variance(units) - momentum_variance(wf, units)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FisherIdentities {
    pub fisher: f64,
    pub mean_u2: f64,
    pub mean_q: f64,
    pub mean_du: f64,
    /// `D²𝓕 − ⟨u²⟩`
    pub osmotic: f64,
    /// `(D²/2)𝓕 + ⟨Q⟩`
    pub quantum_potential: f64,
    /// `⟨u²⟩ + D⟨∇u⟩`
    pub divergence: f64,
    /// `(⟨P²⟩ − m²⟨v²⟩) − m²D²𝓕`
    pub momentum_deviation: f64,
}

impl FisherIdentities {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("D^2 F = <u^2>", self.osmotic),
            ("(D^2/2) F = -<Q>", self.quantum_potential),
            ("<u^2> = -D <grad u>", self.divergence),
            ("<(P - m v)^2> = m^2 D^2 F", self.momentum_deviation),
        ]
        .into_iter()
    }
}

/// Evaluates the Fisher-information identities and fails if any residual
/// exceeds `tol`. 𝓕 is taken from the density alone, ⟨P²⟩ from the
/// momentum density, and the velocity moments from the Madelung fields.
pub fn fisher_identities(wf: &WaveFunction, units: &Units, tol: f64) -> Result<FisherIdentities> {
    let fields = decompose(wf, units);
    let fisher = info::fisher_information(&fields.rho, wf.grid())?;
    let d = units.d;
    let m = units.m;
    let mean_u2 = fields.mean_u2();
    let mean_q = fields.mean_q();
    let mean_du = fields.mean_du();
    let mo = info::moments(wf);
    let hbar = units.hbar();
    let p2 = hbar * hbar * (mo.var_p + mo.mean_p * mo.mean_p);
    let ids = FisherIdentities {
        fisher,
        mean_u2,
        mean_q,
        mean_du,
        osmotic: d * d * fisher - mean_u2,
        quantum_potential: 0.5 * d * d * fisher + mean_q,
        divergence: mean_u2 + d * mean_du,
        momentum_deviation: (p2 - m * m * fields.mean_v2()) - m * m * d * d * fisher,
    };
    if let Some((identity, residual)) = ids.iter().find(|(_, r)| r.abs() > tol) {
        return Err(Error::IdentityViolated {
            identity,
            residual,
            tol,
        });
    }
    Ok(ids)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::states::{coherent_state, free_gaussian_at, gaussian_packet, ho_eigenstate};
    use num_complex::Complex64;

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 2048).unwrap()
    }

    // indices where the density is comfortably resolved
    fn core(rho: &[f64]) -> impl Iterator<Item = usize> + '_ {
        let m = info::max_of(rho);
        (0..rho.len()).filter(move |&j| rho[j] > 1e-8 * m)
    }

    #[test]
    fn ground_state_fields() {
        let g = grid();
        let u = Units::default();
        let f = decompose(&ho_eigenstate(0, 1.0, &g, &u).unwrap(), &u);
        for j in core(&f.rho) {
            let x = g.x_values()[j];
            assert!((f.u[j] + x).abs() < 1e-9, "u at {x}");
            assert!(f.v[j].abs() < 1e-9);
            assert!((f.q_pot[j] - (0.5 * x * x - 0.5)).abs() < 1e-8, "Q at {x}");
        }
        let s = f.s_phase.as_ref().expect("ground state is nodeless");
        assert!(s.iter().all(|&p| p.abs() < 1e-15));
        let vv = velocity_variances(&f);
        assert!((vv.var_u - 0.5).abs() < 1e-12 && vv.var_v.abs() < 1e-20);
        assert!(vv.mean_u.abs() < 1e-12);
    }

    #[test]
    fn boosted_gaussian_fields() {
        let g = grid();
        let units = Units::default();
        let (p0, var0) = (1.3, 0.8);
        let f = decompose(&gaussian_packet(0.0, p0, var0, &g).unwrap(), &units);
        for j in core(&f.rho) {
            let x = g.x_values()[j];
            assert!((f.v[j] - p0).abs() < 1e-9);
            assert!((f.u[j] + units.d * x / var0).abs() < 1e-9);
            assert!((f.b_drift[j] - f.u[j] - f.v[j]).abs() < 1e-15);
        }
        let vv = velocity_variances(&f);
        assert!(vv.var_v.abs() < 1e-12);
        assert!((vv.mean_v - p0).abs() < 1e-12);
    }

    #[test]
    fn real_states_have_no_current() {
        let g = grid();
        let u = Units::default();
        for n in [1u32, 4] {
            let f = decompose(&ho_eigenstate(n, 1.0, &g, &u).unwrap(), &u);
            assert!(f.current().iter().all(|j| j.abs() < 1e-14));
            assert!(f.s_phase.is_none(), "excited states have nodes");
        }
    }

    #[test]
    fn free_packet_variances() {
        let g = grid();
        let u = Units::default();
        let wf = free_gaussian_at(1.0, 0.0, 0.0, 0.5, &g, &u).unwrap();
        let vv = velocity_variances(&decompose(&wf, &u));
        assert!((vv.var_u - 0.25).abs() < 1e-10);
        assert!((vv.var_v - 0.25).abs() < 1e-10);
        assert!((vv.momentum_variance(&u) - 0.5).abs() < 1e-10);
        assert!(variance_partition_residual(&wf, &u).abs() < 1e-10);
    }

    #[test]
    fn ground_state_fisher_identities() {
        let g = grid();
        let u = Units::default();
        let ids = fisher_identities(&ho_eigenstate(0, 1.0, &g, &u).unwrap(), &u, 1e-8).unwrap();
        assert!((ids.mean_q + 0.25).abs() < 1e-10);
        assert!((0.5 * u.d * u.d * ids.fisher - 0.25).abs() < 1e-10);
    }

    #[test]
    fn gaussian_osmotic_identity() {
        let g = grid();
        let u = Units::default();
        let var0 = 0.8;
        let ids =
            fisher_identities(&gaussian_packet(1.0, 0.0, var0, &g).unwrap(), &u, 1e-8).unwrap();
        assert!((ids.mean_u2 - u.d * u.d / var0).abs() < 1e-10);
        assert!((u.d * u.d * ids.fisher - u.d * u.d / var0).abs() < 1e-10);
    }

    #[test]
    fn identities_hold_in_other_units() {
        let g = grid();
        let u = Units::new(0.8, 1.7).unwrap();
        let wf = coherent_state(Complex64::new(0.6, -0.9), 1.4, &g, &u).unwrap();
        fisher_identities(&wf, &u, 1e-8).unwrap();
        assert!(variance_partition_residual(&wf, &u).abs() < 1e-9);
        let nodal = ho_eigenstate(3, 0.9, &g, &u).unwrap();
        fisher_identities(&nodal, &u, 1e-8).unwrap();
    }

    #[test]
    fn amplitude_form_of_quantum_potential() {
        let g = grid();
        let u = Units::default();
        let wf = free_gaussian_at(0.6, 0.5, 1.0, 0.7, &g, &u).unwrap();
        let f = decompose(&wf, &u);
        let alt = quantum_potential_from_amplitude(&wf, &u);
        for j in core(&f.rho) {
            let a = alt[j].unwrap();
            assert!((a - f.q_pot[j]).abs() < 1e-7, "{a} vs {}", f.q_pot[j]);
        }
    }

    #[test]
    fn global_phase_only_shifts_s() {
        let g = grid();
        let u = Units::default();
        let wf = coherent_state(Complex64::new(0.7, 0.4), 1.0, &g, &u).unwrap();
        let theta = 0.9;
        let a = decompose(&wf, &u);
        let b = decompose(&wf.with_global_phase(theta), &u);
        let idx: Vec<usize> = core(&a.rho).collect();
        let close = |x: &[f64], y: &[f64]| idx.iter().all(|&j| (x[j] - y[j]).abs() < 1e-8);
        assert!(close(&a.rho, &b.rho));
        assert!(close(&a.u, &b.u));
        assert!(close(&a.v, &b.v));
        assert!(close(&a.q_pot, &b.q_pot));
        let (sa, sb) = (a.s_phase.unwrap(), b.s_phase.unwrap());
        let shift = sb[1024] - sa[1024];
        let wrapped = (shift / (2.0 * u.d) - theta).rem_euclid(2.0 * PI);
        assert!(wrapped.min(2.0 * PI - wrapped) < 1e-9);
        assert!(sa
            .iter()
            .zip(&sb)
            .all(|(p, q)| (q - p - shift).abs() < 1e-9));
    }

    #[test]
    fn phase_gradient_matches_current_velocity() {
        let g = grid();
        let u = Units::default();
        let wf = free_gaussian_at(1.5, -1.0, 0.8, 0.5, &g, &u).unwrap();
        let f = decompose(&wf, &u);
        let s = f.s_phase.as_ref().unwrap();
        // s is not periodic, so compare against centered differences
        let ds: Vec<f64> = (1..g.len() - 1)
            .map(|j| (s[j + 1] - s[j - 1]) / (2.0 * g.dx()))
            .collect();
        for j in core(&f.rho).filter(|&j| j > 0 && j < g.len() - 1) {
            assert!((ds[j - 1] - f.v[j]).abs() < 1e-3);
        }
    }

    #[test]
    fn fokker_planck_equals_continuity() {
        let g = grid();
        let u = Units::default();
        let wf = coherent_state(Complex64::new(0.5, 1.1), 1.0, &g, &u).unwrap();
        let f = decompose(&wf, &u);
        let a = f.continuity_rhs();
        let b = f.fokker_planck_rhs();
        let worst = a
            .iter()
            .zip(&b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-9, "{worst}");
    }
}
