//! Closed-form states: Gaussian packets, oscillator eigenstates, coherent
//! states, exact free-packet time slices and their superpositions.
//!
//! Momentum parameters (`p0`, and the imaginary part of a coherent-state
//! amplitude) are wavenumbers, so `⟨P⟩ = ħ p0`. With the default units
//! (`ħ = m = 1`) the two coincide.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::wave::{Units, WaveFunction};

/// Largest boundary (or spectral-boundary) mass tolerated in a prepared state.
pub const EDGE_MASS_LIMIT: f64 = 1e-6;

/// Serializable description of an initial state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StateSpec {
    Gaussian {
        x0: f64,
        p0: f64,
        var0: f64,
    },
    HoEigenstate {
        n: u32,
        omega: f64,
    },
    Coherent {
        alpha_re: f64,
        alpha_im: f64,
        omega: f64,
    },
    FreeGaussianAt {
        t: f64,
        x0: f64,
        p0: f64,
        var0: f64,
    },
    Superposition {
        components: Vec<StateSpec>,
        /// `[re, im]` pairs, one per component.
        coeffs: Vec<[f64; 2]>,
    },
}

impl StateSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            StateSpec::Gaussian { var0, .. } | StateSpec::FreeGaussianAt { var0, .. } => {
                positive("var0", *var0)
            }
            StateSpec::HoEigenstate { omega, .. } | StateSpec::Coherent { omega, .. } => {
                positive("omega", *omega)
            }
            StateSpec::Superposition { components, coeffs } => {
                if components.is_empty() {
                    return Err(Error::InvalidParameter(
                        "superposition needs at least one component".into(),
                    ));
                }
                if components.len() != coeffs.len() {
                    return Err(Error::InvalidParameter(format!(
                        "{} components but {} coefficients",
                        components.len(),
                        coeffs.len()
                    )));
                }
                let total: f64 = coeffs.iter().map(|[re, im]| re * re + im * im).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!(
                        "superposition coefficients must satisfy Σ|c|² = 1 (got {total})"
                    )));
                }
                components.iter().try_for_each(StateSpec::validate)
            }
        }
    }

    pub fn build(&self, grid: &Grid1D, units: &Units) -> Result<WaveFunction> {
        self.validate()?;
        match *self {
            StateSpec::Gaussian { x0, p0, var0 } => gaussian_packet(x0, p0, var0, grid),
            StateSpec::HoEigenstate { n, omega } => ho_eigenstate(n, omega, grid, units),
            StateSpec::Coherent {
                alpha_re,
                alpha_im,
                omega,
            } => coherent_state(Complex64::new(alpha_re, alpha_im), omega, grid, units),
            StateSpec::FreeGaussianAt { t, x0, p0, var0 } => {
                free_gaussian_at(t, x0, p0, var0, grid, units)
            }
            StateSpec::Superposition {
                ref components,
                ref coeffs,
            } => {
                let c: Vec<Complex64> = coeffs
                    .iter()
                    .map(|&[re, im]| Complex64::new(re, im))
                    .collect();
                superposition(components, &c, grid, units)
            }
        }
    }
}

/// `ψ(x) = (2π var0)^{-1/4} exp(-(x-x0)²/(4 var0) + i p0 x)`.
pub fn gaussian_packet(x0: f64, p0: f64, var0: f64, grid: &Grid1D) -> Result<WaveFunction> {
    positive("var0", var0)?;
    let amp = (TAU * var0).powf(-0.25);
    let psi = grid
        .x_values()
        .iter()
        .map(|&x| Complex64::from_polar(amp * (-(x - x0).powi(2) / (4.0 * var0)).exp(), p0 * x))
        .collect();
    finish(grid, psi, false)
}

/// Oscillator length `ℓ = sqrt(ħ/(mω))`.
pub fn oscillator_length(omega: f64, units: &Units) -> f64 {
    (units.hbar() / (units.m * omega)).sqrt()
}

/// `ħω(n + 1/2)`.
pub fn ho_energy(n: u32, omega: f64, units: &Units) -> f64 {
    units.hbar() * omega * (n as f64 + 0.5)
}

/// Eigenstate `n` of `𝒱 = ½ m ω² x²`, real valued.
pub fn ho_eigenstate(n: u32, omega: f64, grid: &Grid1D, units: &Units) -> Result<WaveFunction> {
    positive("omega", omega)?;
    units.validate()?;
    let ell = oscillator_length(omega, units);
    let norm = ell.sqrt().recip();
    let psi = grid
        .x_values()
        .iter()
        .map(|&x| Complex64::new(norm * hermite_function(n, x / ell), 0.0))
        .collect();
    finish(grid, psi, true)
}

/// Displaced ground state with `⟨X⟩ = √2 ℓ Re α` and wavenumber
/// `⟨K⟩ = √2 Im α / ℓ`.
pub fn coherent_state(
    alpha: Complex64,
    omega: f64,
    grid: &Grid1D,
    units: &Units,
) -> Result<WaveFunction> {
    positive("omega", omega)?;
    units.validate()?;
    let ell = oscillator_length(omega, units);
    let xc = std::f64::consts::SQRT_2 * ell * alpha.re;
    let kc = std::f64::consts::SQRT_2 * alpha.im / ell;
    let norm = ell.sqrt().recip();
    let psi = grid
        .x_values()
        .iter()
        .map(|&x| Complex64::from_polar(norm * hermite_function(0, (x - xc) / ell), kc * x))
        .collect();
    finish(grid, psi, false)
}

/// Exact free evolution (𝒱 = 0) of [`gaussian_packet`] to time `t`.
/// The position variance grows as `var0 + D² t² / var0`.
pub fn free_gaussian_at(
    t: f64,
    x0: f64,
    p0: f64,
    var0: f64,
    grid: &Grid1D,
    units: &Units,
) -> Result<WaveFunction> {
    positive("var0", var0)?;
    units.validate()?;
    let d = units.d;
    let a = Complex64::new(var0, d * t);
    let pre = (TAU * var0).powf(-0.25) * (Complex64::new(var0, 0.0) / a).sqrt();
    let center = x0 + 2.0 * d * p0 * t;
    let psi = grid
        .x_values()
        .iter()
        .map(|&x| {
            let y = x - center;
            let expo = -y * y / (4.0 * a) + Complex64::new(0.0, p0 * x - d * p0 * p0 * t);
            pre * expo.exp()
        })
        .collect();
    finish(grid, psi, false)
}

/// Normalized linear combination `Σ c_i ψ_i`.
pub fn superposition(
    specs: &[StateSpec],
    coeffs: &[Complex64],
    grid: &Grid1D,
    units: &Units,
) -> Result<WaveFunction> {
    if specs.is_empty() {
        return Err(Error::InvalidParameter(
            "superposition needs at least one component".into(),
        ));
    }
    if specs.len() != coeffs.len() {
        return Err(Error::InvalidParameter(format!(
            "{} components but {} coefficients",
            specs.len(),
            coeffs.len()
        )));
    }
    let mut psi = vec![Complex64::default(); grid.len()];
    for (spec, &c) in specs.iter().zip(coeffs) {
        let part = spec.build(grid, units)?;
        psi.iter_mut()
            .zip(part.psi())
            .for_each(|(acc, z)| *acc += c * z);
    }
    if psi.iter().all(|z| z.norm() < 1e-300) {
        return Err(Error::ZeroState);
    }
    WaveFunction::normalized(grid.clone(), psi)
}

/// Normalized Hermite function `h_n(ξ)` via the three-term recurrence on the
/// normalized functions themselves.
pub fn hermite_function(n: u32, xi: f64) -> f64 {
    let h0 = PI.powf(-0.25) * (-0.5 * xi * xi).exp();
    if n == 0 {
        return h0;
    }
    let mut prev = h0;
    let mut cur = std::f64::consts::SQRT_2 * xi * h0;
    for j in 2..=n {
        let j = j as f64;
        let next = (2.0 / j).sqrt() * xi * cur - ((j - 1.0) / j).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")))
    }
}

// Shared post-construction checks: edge mass in both spaces, then the norm.
fn finish(grid: &Grid1D, psi: Vec<Complex64>, eigenstate: bool) -> Result<WaveFunction> {
    let wf = crate::wave::WaveFunction::from_parts(grid.clone(), psi);
    let edge = wf.edge_mass();
    if edge > EDGE_MASS_LIMIT {
        return Err(if eigenstate {
            Error::UnderResolved(format!("boundary mass {edge:.3e}"))
        } else {
            Error::BoxOverflow {
                edge_mass: edge,
                limit: EDGE_MASS_LIMIT,
            }
        });
    }
    let spectral = grid.spectral_edge_mass(&wf.to_momentum().density());
    if spectral > EDGE_MASS_LIMIT {
        return Err(Error::UnderResolved(format!(
            "momentum mass {spectral:.3e} near the Nyquist wavenumber"
        )));
    }
    let norm = wf.norm_sq();
    WaveFunction::new(grid.clone(), wf.into_amplitudes())
        .map_err(|_| Error::UnderResolved(format!("sampled norm {norm:.12}")))
}
