//! Shannon entropies, Fisher information, variances and the inequality audit.
//!
//! Everything here uses the dimensionless convention `ħ ≡ 1`: momentum is the
//! wavenumber `k`, so `P = -i d/dx` and `ρ̃(k) = |𝓕ψ(k)|²`.

use std::f64::consts::{E, PI, TAU};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::hydro;
use crate::wave::{MomentumWave, Units, WaveFunction};

/// Relative density below which `ρ ln ρ` and velocity fields are treated as 0.
pub const DENSITY_FLOOR: f64 = 1e-30;

/// Relative density below which the density-only Fisher integrand switches
/// from `ρ'²/ρ` to its double-zero limit `2ρ''`. Spectral round-off in `ρ'`
/// (about 1e-14 absolute) would otherwise dominate `ρ'²/ρ` in the tails.
pub const GRADIENT_FLOOR: f64 = 1e-16;

/// A grid point with `ρ ≤ NODE_RESOLUTION · dx² · ρ''` lies within about half
/// a cell of a near-zero of ψ. If in addition `ρ'² < ρ ρ''` it sits inside the
/// core of that near-zero, a spike narrower than the grid can resolve, and the
/// weighted integrands take their double-zero limits instead of sampling the
/// spike of `ρ'²/ρ` or `j²/ρ`.
pub const NODE_RESOLUTION: f64 = 0.125;

/// Default tolerance on inequality slacks.
pub const DEFAULT_TOL_SLACK: f64 = 1e-7;

const NORMALIZATION_TOL: f64 = 1e-8;
const NEGATIVE_TOL: f64 = -1e-12;

/// `−∫ ρ ln ρ dx` for a density sampled on the grid.
pub fn shannon_entropy(density: &[f64], grid: &Grid1D) -> Result<f64> {
    check_density(density, grid.len(), grid.dx())?;
    Ok(entropy_sum(density) * grid.dx())
}

/// `−∫ ρ̃ ln ρ̃ dk` on the momentum lattice.
pub fn momentum_entropy(mw: &MomentumWave) -> Result<f64> {
    let rho = mw.density();
    check_density(&rho, mw.grid().len(), mw.grid().dk())?;
    Ok(entropy_sum(&rho) * mw.grid().dk())
}

/// `∫ (ρ')² / ρ dx` with `ρ'` from the spectral derivative.
pub fn fisher_information(density: &[f64], grid: &Grid1D) -> Result<f64> {
    check_density(density, grid.len(), grid.dx())?;
    let d1 = grid.derivative_real(density, 1);
    let d2 = grid.derivative_real(density, 2);
    let cutoff = GRADIENT_FLOOR * max_of(density);
    let sum: f64 = density
        .iter()
        .zip(d1.iter().zip(&d2))
        .map(|(&r, (&g, &h))| {
            if unresolved_node(r, g, h, cutoff, grid.dx()) {
                2.0 * h
            } else {
                g * g / r
            }
        })
        .sum();
    Ok(sum * grid.dx())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Moments {
    pub mean_x: f64,
    pub var_x: f64,
    pub mean_p: f64,
    pub var_p: f64,
}

/// Position moments against ρ, momentum moments against ρ̃ on the k lattice.
pub fn moments(wf: &WaveFunction) -> Moments {
    let g = wf.grid();
    let rho = wf.density();
    let (mean_x, var_x) = mean_var(&rho, g.x_values(), g.dx());
    let rho_k = wf.to_momentum().density();
    let (mean_p, var_p) = mean_var(&rho_k, g.k_values(), g.dk());
    Moments {
        mean_x,
        var_x,
        mean_p,
        var_p,
    }
}

/// `(⟨P⟩, (ΔP)²)` from `P = −i d/dx` applied in position space.
pub fn momentum_moments_operator(wf: &WaveFunction) -> (f64, f64) {
    let g = wf.grid();
    let d1 = wf.derivative(1);
    let mean: f64 = wf
        .psi()
        .iter()
        .zip(&d1)
        .map(|(z, dz)| (z.conj() * dz).im)
        .sum::<f64>()
        * g.dx();
    let p2: f64 = d1.iter().map(|dz| dz.norm_sqr()).sum::<f64>() * g.dx();
    (mean, p2 - mean * mean)
}

/// Variance of `p_cl = (arg ψ)'` under ρ, taken from the current velocity.
pub fn classical_momentum_variance(wf: &WaveFunction) -> f64 {
    // 2mD = 1 here, so p_cl = m v = v.
    let fields = hydro::decompose(wf, &Units::default());
    hydro::velocity_variances(&fields).var_v
}

/// Signed slack (`lhs − rhs ≥ 0`) of every inequality audited per state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Slacks {
    /// `S_q + S_p − (1 + ln π)`
    pub entropic_uncertainty: f64,
    /// `ΔX ΔP − e^{S_q+S_p}/(2πe)`
    pub product_vs_entropy_power: f64,
    /// `e^{S_q+S_p}/(2πe) − 1/2`
    pub entropy_power_vs_half: f64,
    /// `½ ln(2πe σ²) − S_q`
    pub gaussian_bound_position: f64,
    /// `½ ln(2πe σ̃²) − S_p`
    pub gaussian_bound_momentum: f64,
    /// `𝓕 − 2πe e^{−2S_q}`
    pub fisher_vs_entropy_power: f64,
    /// `2πe e^{−2S_q} − 1/σ²`
    pub entropy_power_vs_variance: f64,
    /// `4σ̃² − (2/eπ) e^{2S_p}`
    pub momentum_variance_vs_entropy: f64,
    /// `(2/eπ) e^{2S_p} − 2eπ e^{−2S_q}`
    pub momentum_vs_position_entropy: f64,
    /// `4σ̃² − 𝓕`, i.e. `4σ̃_cl²`
    pub momentum_variance_vs_fisher: f64,
}

impl Slacks {
    pub fn iter(&self) -> impl Iterator<Item = (&'static str, f64)> {
        [
            ("S_q + S_p >= 1 + ln(pi)", self.entropic_uncertainty),
            (
                "dX dP >= exp(S_q + S_p)/(2 pi e)",
                self.product_vs_entropy_power,
            ),
            ("exp(S_q + S_p)/(2 pi e) >= 1/2", self.entropy_power_vs_half),
            ("S_q <= ln(2 pi e var_x)/2", self.gaussian_bound_position),
            ("S_p <= ln(2 pi e var_p)/2", self.gaussian_bound_momentum),
            ("F >= 2 pi e exp(-2 S_q)", self.fisher_vs_entropy_power),
            (
                "2 pi e exp(-2 S_q) >= 1/var_x",
                self.entropy_power_vs_variance,
            ),
            (
                "4 var_p >= (2/(e pi)) exp(2 S_p)",
                self.momentum_variance_vs_entropy,
            ),
            (
                "(2/(e pi)) exp(2 S_p) >= 2 e pi exp(-2 S_q)",
                self.momentum_vs_position_entropy,
            ),
            ("4 var_p >= F", self.momentum_variance_vs_fisher),
        ]
        .into_iter()
    }

    /// The most negative slack and its relation.
    pub fn worst(&self) -> (&'static str, f64) {
        self.iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .expect("non-empty")
    }
}

/// All information functionals of one state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InfoReport {
    pub s_q: f64,
    pub s_p: f64,
    pub fisher: f64,
    pub var_x: f64,
    pub var_p: f64,
    pub var_p_cl: f64,
    pub mean_x: f64,
    pub mean_p: f64,
    /// `e^{S_q+S_p} / (2πe)`
    pub entropy_power_product: f64,
    pub slacks: Slacks,
    /// `𝓕 − 4(σ̃² − σ̃_cl²)`; vanishes identically.
    pub fisher_identity_residual: f64,
}

impl InfoReport {
    pub fn of(wf: &WaveFunction) -> Result<Self> {
        let g = wf.grid();
        let rho = wf.density();
        let s_q = shannon_entropy(&rho, g)?;
        let s_p = momentum_entropy(&wf.to_momentum())?;
        let fisher = fisher_information(&rho, g)?;
        let m = moments(wf);
        let var_p_cl = classical_momentum_variance(wf);

        let entropy_power_product = (s_q + s_p).exp() / (TAU * E);
        let ep_position = TAU * E * (-2.0 * s_q).exp();
        let ep_momentum = 2.0 / (E * PI) * (2.0 * s_p).exp();
        let slacks = Slacks {
            entropic_uncertainty: s_q + s_p - (1.0 + PI.ln()),
            product_vs_entropy_power: (m.var_x * m.var_p).sqrt() - entropy_power_product,
            entropy_power_vs_half: entropy_power_product - 0.5,
            gaussian_bound_position: 0.5 * (TAU * E * m.var_x).ln() - s_q,
            gaussian_bound_momentum: 0.5 * (TAU * E * m.var_p).ln() - s_p,
            fisher_vs_entropy_power: fisher - ep_position,
            entropy_power_vs_variance: ep_position - 1.0 / m.var_x,
            momentum_variance_vs_entropy: 4.0 * m.var_p - ep_momentum,
            momentum_vs_position_entropy: ep_momentum - ep_position,
            momentum_variance_vs_fisher: 4.0 * m.var_p - fisher,
        };
        Ok(Self {
            s_q,
            s_p,
            fisher,
            var_x: m.var_x,
            var_p: m.var_p,
            var_p_cl,
            mean_x: m.mean_x,
            mean_p: m.mean_p,
            entropy_power_product,
            slacks,
            fisher_identity_residual: fisher - 4.0 * (m.var_p - var_p_cl),
        })
    }
}

/// Computes the [`InfoReport`] and fails on the first slack below `−tol_slack`.
pub fn audit_inequalities(wf: &WaveFunction, tol_slack: f64) -> Result<InfoReport> {
    let report = InfoReport::of(wf)?;
    let (relation, slack) = report.slacks.worst();
    if slack < -tol_slack {
        return Err(Error::InequalityViolated {
            relation,
            slack,
            tol: tol_slack,
        });
    }
    Ok(report)
}

fn entropy_sum(rho: &[f64]) -> f64 {
    let cutoff = DENSITY_FLOOR * max_of(rho);
    -rho.iter()
        .filter(|&&r| r > cutoff)
        .map(|&r| r * r.ln())
        .sum::<f64>()
}

fn mean_var(weights: &[f64], at: &[f64], step: f64) -> (f64, f64) {
    let (m1, m2) = weights
        .iter()
        .zip(at)
        .fold((0.0, 0.0), |(a, b), (&w, &x)| (a + w * x, b + w * x * x));
    let (m1, m2) = (m1 * step, m2 * step);
    (m1, m2 - m1 * m1)
}

pub(crate) fn unresolved_node(rho: f64, rho1: f64, rho2: f64, cutoff: f64, dx: f64) -> bool {
    rho <= cutoff || (rho <= NODE_RESOLUTION * dx * dx * rho2 && rho1 * rho1 < rho * rho2)
}

pub(crate) fn max_of(v: &[f64]) -> f64 {
    v.iter().copied().fold(0.0, f64::max)
}

fn check_density(rho: &[f64], n: usize, step: f64) -> Result<()> {
    if rho.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            got: rho.len(),
        });
    }
    if rho.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("density"));
    }
    if let Some((index, &value)) = rho.iter().enumerate().find(|(_, &v)| v < NEGATIVE_TOL) {
        return Err(Error::NegativeDensity { index, value });
    }
    let total = rho.iter().sum::<f64>() * step;
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::InvalidParameter(format!(
            "density integrates to {total}, expected 1"
        )));
    }
    Ok(())
}
