//! Position- and momentum-space wavefunctions on a [`Grid1D`].

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;

/// Normalization tolerance enforced by [`WaveFunction::new`].
pub const NORM_TOL: f64 = 1e-10;

/// Unit system. `D = ħ/2m`; the defaults `D = 1/2`, `m = 1` mean `ħ = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Units {
    #[serde(rename = "D")]
    pub d: f64,
    pub m: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self { d: 0.5, m: 1.0 }
    }
}

impl Units {
    pub fn new(d: f64, m: f64) -> Result<Self> {
        let u = Self { d, m };
        u.validate()?;
        Ok(u)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d > 0.0 && self.d.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "D = {} must be > 0",
                self.d
            )));
        }
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "m = {} must be > 0",
                self.m
            )));
        }
        Ok(())
    }

    /// ħ = 2mD.
    pub fn hbar(&self) -> f64 {
        2.0 * self.m * self.d
    }
}

/// Unit-norm complex amplitudes on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    psi: Vec<Complex64>,
}

impl WaveFunction {
    /// Wraps amplitudes that must already satisfy `Σ|ψ|² dx = 1` to
    /// [`NORM_TOL`].
    pub fn new(grid: Grid1D, psi: Vec<Complex64>) -> Result<Self> {
        check_samples(&grid, &psi)?;
        let norm = norm_sq(&grid, &psi);
        if (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::NotNormalized { norm });
        }
        Ok(Self { grid, psi })
    }

    /// Rescales arbitrary non-zero amplitudes to unit norm.
    pub fn normalized(grid: Grid1D, mut psi: Vec<Complex64>) -> Result<Self> {
        check_samples(&grid, &psi)?;
        let norm = norm_sq(&grid, &psi);
        if norm <= f64::MIN_POSITIVE {
            return Err(Error::ZeroState);
        }
        let scale = norm.sqrt().recip();
        psi.iter_mut().for_each(|z| *z *= scale);
        Ok(Self { grid, psi })
    }

    /// Skips the norm check; used by the propagator, which monitors the norm
    /// separately.
    pub(crate) fn from_parts(grid: Grid1D, psi: Vec<Complex64>) -> Self {
        Self { grid, psi }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn psi(&self) -> &[Complex64] {
        &self.psi
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.psi
    }

    /// ρ = |ψ|².
    pub fn density(&self) -> Vec<f64> {
        self.psi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq(&self.grid, &self.psi)
    }

    pub fn edge_mass(&self) -> f64 {
        self.grid.edge_mass(&self.density())
    }

    /// Spectral derivative of ψ (order 1 or 2).
    pub fn derivative(&self, order: u32) -> Vec<Complex64> {
        self.grid.derivative(&self.psi, order)
    }

    /// ψ → e^{iθ} ψ.
    pub fn with_global_phase(&self, theta: f64) -> Self {
        let w = Complex64::from_polar(1.0, theta);
        Self {
            grid: self.grid.clone(),
            psi: self.psi.iter().map(|z| z * w).collect(),
        }
    }

    /// ⟨self|other⟩ = ∫ ψ̄ φ dx.
    pub fn overlap(&self, other: &WaveFunction) -> Complex64 {
        self.psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<Complex64>()
            * self.grid.dx()
    }

    /// Plain L² distance ‖ψ − φ‖.
    pub fn l2_distance(&self, other: &WaveFunction) -> f64 {
        let d: f64 = self
            .psi
            .iter()
            .zip(&other.psi)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        (d * self.grid.dx()).sqrt()
    }

    /// L² distance after removing the optimal global phase.
    pub fn distance_up_to_phase(&self, other: &WaveFunction) -> f64 {
        let ov = other.overlap(self);
        if ov.norm() == 0.0 {
            return self.l2_distance(other);
        }
        let aligned = other.with_global_phase(ov.arg());
        self.l2_distance(&aligned)
    }

    /// Unitary transform approximating `(2π)^{-1/2} ∫ ψ(x) e^{-ikx} dx` on the
    /// grid's `k_values`.
    pub fn to_momentum(&self) -> MomentumWave {
        let mut phi = self.psi.clone();
        self.grid.fft(&mut phi);
        let scale = self.grid.dx() / TAU.sqrt();
        let x0 = self.grid.x_min();
        for (z, &k) in phi.iter_mut().zip(self.grid.k_values()) {
            *z *= Complex64::from_polar(scale, -k * x0);
        }
        MomentumWave {
            grid: self.grid.clone(),
            phi,
        }
    }
}

/// Momentum amplitudes `(𝓕ψ)(k)` sampled on `k_values` (FFT order).
#[derive(Debug, Clone, PartialEq)]
pub struct MomentumWave {
    grid: Grid1D,
    phi: Vec<Complex64>,
}

impl MomentumWave {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn phi(&self) -> &[Complex64] {
        &self.phi
    }

    /// ρ̃ = |φ|².
    pub fn density(&self) -> Vec<f64> {
        self.phi.iter().map(|z| z.norm_sqr()).collect()
    }

    pub fn norm_sq(&self) -> f64 {
        self.grid.integrate_k(&self.density())
    }

    /// Inverse of [`WaveFunction::to_momentum`].
    pub fn to_position(&self) -> WaveFunction {
        let mut psi = self.phi.clone();
        let scale = TAU.sqrt() / self.grid.dx();
        let x0 = self.grid.x_min();
        for (z, &k) in psi.iter_mut().zip(self.grid.k_values()) {
            *z *= Complex64::from_polar(scale, k * x0);
        }
        self.grid.ifft(&mut psi);
        WaveFunction::from_parts(self.grid.clone(), psi)
    }
}

fn norm_sq(grid: &Grid1D, psi: &[Complex64]) -> f64 {
    psi.iter().map(|z| z.norm_sqr()).sum::<f64>() * grid.dx()
}

fn check_samples(grid: &Grid1D, psi: &[Complex64]) -> Result<()> {
    if psi.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: psi.len(),
        });
    }
    if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("wavefunction amplitudes"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn grid() -> Grid1D {
        Grid1D::new(-20.0, 20.0, 1024).unwrap()
    }

    fn gaussian(g: &Grid1D, x0: f64, k0: f64, var: f64) -> WaveFunction {
        let a = (TAU * var).powf(-0.25);
        let psi = g
            .x_values()
            .iter()
            .map(|&x| Complex64::from_polar(a * (-(x - x0).powi(2) / (4.0 * var)).exp(), k0 * x))
            .collect();
        WaveFunction::new(g.clone(), psi).unwrap()
    }

    #[test]
    fn rejects_unnormalized() {
        let g = grid();
        let psi = vec![Complex64::new(1.0, 0.0); g.len()];
        assert!(matches!(
            WaveFunction::new(g.clone(), psi.clone()),
            Err(Error::NotNormalized { .. })
        ));
        let wf = WaveFunction::normalized(g.clone(), psi).unwrap();
        assert!((wf.norm_sq() - 1.0).abs() < 1e-13);
        assert_eq!(
            WaveFunction::normalized(g.clone(), vec![Complex64::default(); g.len()]),
            Err(Error::ZeroState)
        );
    }

    #[test]
    fn gaussian_is_self_dual() {
        // ground-state Gaussian with variance 1/2: |φ(k)|² = π^{-1/2} e^{-k²}
        let g = grid();
        let wf = gaussian(&g, 0.0, 0.0, 0.5);
        let mw = wf.to_momentum();
        for (rho, &k) in mw.density().iter().zip(g.k_values()) {
            let exact = (-k * k).exp() / std::f64::consts::PI.sqrt();
            assert!((rho - exact).abs() < 1e-12, "k = {k}");
        }
        // and the phase is real: φ(k) itself equals π^{-1/4} e^{-k²/2}
        for (z, &k) in mw.phi().iter().zip(g.k_values()) {
            let exact = std::f64::consts::PI.powf(-0.25) * (-k * k / 2.0).exp();
            assert!((z - Complex64::new(exact, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn boost_shifts_momentum_density() {
        let g = grid();
        let shift = 16;
        let k0 = shift as f64 * g.dk();
        let a = gaussian(&g, 1.0, 0.0, 0.5).to_momentum().density();
        let b = gaussian(&g, 1.0, k0, 0.5).to_momentum().density();
        let n = g.len();
        for m in 0..n {
            assert!((b[(m + shift) % n] - a[m]).abs() < 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn parseval_and_round_trip(
            x0 in -3.0f64..3.0,
            k0 in -4.0f64..4.0,
            var in 0.2f64..2.0,
            c in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 3),
        ) {
            let g = grid();
            let parts = [gaussian(&g, x0, k0, var), gaussian(&g, -x0, 0.5 * k0, 0.7 * var), gaussian(&g, 0.3, -k0, 1.1)];
            let psi: Vec<Complex64> = (0..g.len())
                .map(|j| parts.iter().zip(&c).map(|(p, &(re, im))| p.psi()[j] * Complex64::new(re, im)).sum())
                .collect();
            prop_assume!(psi.iter().any(|z| z.norm() > 1e-6));
            let wf = WaveFunction::normalized(g.clone(), psi).unwrap();
            let mw = wf.to_momentum();
            prop_assert!((mw.norm_sq() - 1.0).abs() < 1e-10);
            let back = mw.to_position();
            let worst = back.psi().iter().zip(wf.psi()).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
            prop_assert!(worst < 1e-12);
        }

        #[test]
        fn derivative_is_linear(
            a in (-2.0f64..2.0, -2.0f64..2.0),
            b in (-2.0f64..2.0, -2.0f64..2.0),
            order in 1u32..=2,
        ) {
            let g = grid();
            let f = gaussian(&g, 0.5, 1.0, 0.6);
            let h = gaussian(&g, -1.0, -2.0, 0.9);
            let (a, b) = (Complex64::new(a.0, a.1), Complex64::new(b.0, b.1));
            let comb: Vec<Complex64> = f.psi().iter().zip(h.psi()).map(|(x, y)| a * x + b * y).collect();
            let lhs = crate::grid::spectral_derivative(&comb, &g, order).unwrap();
            let df = f.derivative(order);
            let dh = h.derivative(order);
            for j in 0..g.len() {
                prop_assert!((lhs[j] - (a * df[j] + b * dh[j])).norm() < 1e-11);
            }
        }
    }
}
