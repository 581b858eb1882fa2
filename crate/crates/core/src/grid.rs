//! Uniform periodic grid, rectangle-rule quadrature and FFT-backed spectral
//! differentiation.
//!
//! Samples sit at `x_j = x_min + j dx` for `j = 0..n`, with `x_max` excluded.
//! The conjugate lattice is kept in FFT order:
//! `k_m = 2π m / (n dx)` for `m = 0, 1, …, n/2-1, -n/2, …, -1`.

use std::f64::consts::TAU;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};

/// Smallest grid accepted by [`Grid1D::new`].
pub const MIN_POINTS: usize = 8;

/// Fraction of the box (on each side) treated as "boundary" by the edge-mass
/// monitor.
pub const EDGE_FRACTION: f64 = 1.0 / 32.0;

struct GridData {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    x: Vec<f64>,
    k: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

/// Immutable 1-D periodic lattice. Cloning is cheap (shared storage), and the
/// FFT plans inside are safe to use from any thread.
#[derive(Clone)]
pub struct Grid1D {
    inner: Arc<GridData>,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !x_min.is_finite() || !x_max.is_finite() {
            return Err(Error::InvalidGrid("box edges must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "extent must be positive (x_min = {x_min}, x_max = {x_max})"
            )));
        }
        if n < MIN_POINTS || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "n = {n} must be a power of two and at least {MIN_POINTS}"
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        let x = (0..n).map(|j| x_min + j as f64 * dx).collect();
        let dk = TAU / (n as f64 * dx);
        let half = (n / 2) as isize;
        let k = (0..n as isize)
            .map(|j| {
                let m = if j < half { j } else { j - n as isize };
                m as f64 * dk
            })
            .collect();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        Ok(Self {
            inner: Arc::new(GridData {
                x_min,
                x_max,
                n,
                dx,
                x,
                k,
                forward,
                inverse,
            }),
        })
    }

    pub fn x_min(&self) -> f64 {
        self.inner.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.inner.x_max
    }

    pub fn len(&self) -> usize {
        self.inner.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.inner.dx
    }

    /// Momentum-lattice spacing `2π / (n dx)`.
    pub fn dk(&self) -> f64 {
        TAU / (self.inner.n as f64 * self.inner.dx)
    }

    pub fn x_values(&self) -> &[f64] {
        &self.inner.x
    }

    /// Wavenumbers in FFT order.
    pub fn k_values(&self) -> &[f64] {
        &self.inner.k
    }

    /// Largest representable |k| (the Nyquist wavenumber).
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.inner.dx
    }

    /// Rectangle rule `Σ f_j dx` without validation. Exact for band-limited
    /// periodic integrands.
    pub fn integrate(&self, f: &[f64]) -> f64 {
        debug_assert_eq!(f.len(), self.inner.n);
        f.iter().sum::<f64>() * self.inner.dx
    }

    /// Rectangle rule over the momentum lattice, `Σ g_m dk`.
    pub fn integrate_k(&self, g: &[f64]) -> f64 {
        debug_assert_eq!(g.len(), self.inner.n);
        g.iter().sum::<f64>() * self.dk()
    }

    /// In-place unnormalized forward DFT.
    pub fn fft(&self, buf: &mut [Complex64]) {
        self.inner.forward.process(buf);
    }

    /// In-place inverse DFT including the `1/n` factor.
    pub fn ifft(&self, buf: &mut [Complex64]) {
        self.inner.inverse.process(buf);
        let scale = 1.0 / self.inner.n as f64;
        buf.iter_mut().for_each(|z| *z *= scale);
    }

    /// Probability in the outer `EDGE_FRACTION` of the box on either side.
    pub fn edge_mass(&self, density: &[f64]) -> f64 {
        let layer = ((self.inner.n as f64 * EDGE_FRACTION) as usize).max(1);
        let n = self.inner.n;
        let left: f64 = density[..layer].iter().sum();
        let right: f64 = density[n - layer..].iter().sum();
        (left + right) * self.inner.dx
    }

    /// Same as [`Grid1D::edge_mass`] but for a density sampled on the
    /// momentum lattice (FFT order, so the high-|k| band sits in the middle).
    pub fn spectral_edge_mass(&self, density_k: &[f64]) -> f64 {
        let n = self.inner.n;
        let layer = ((n as f64 * EDGE_FRACTION) as usize).max(1);
        let mid = n / 2;
        density_k[mid - layer..mid + layer].iter().sum::<f64>() * self.dk()
    }

    /// Derivative of order 1 or 2 without input validation. The Nyquist mode
    /// is dropped for odd orders.
    pub(crate) fn derivative(&self, f: &[Complex64], order: u32) -> Vec<Complex64> {
        let mut buf = f.to_vec();
        self.fft(&mut buf);
        let nyquist = self.inner.n / 2;
        for (j, (z, &k)) in buf.iter_mut().zip(self.k_values()).enumerate() {
            *z *= match order {
                1 if j == nyquist => Complex64::new(0.0, 0.0),
                1 => Complex64::new(0.0, k),
                _ => Complex64::new(-k * k, 0.0),
            };
        }
        self.ifft(&mut buf);
        buf
    }

    /// Spectral derivative of a real array; returns the real part.
    pub(crate) fn derivative_real(&self, f: &[f64], order: u32) -> Vec<f64> {
        let z: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.derivative(&z, order)
            .into_iter()
            .map(|z| z.re)
            .collect()
    }
}

impl PartialEq for Grid1D {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.n == other.inner.n
                && self.inner.x_min == other.inner.x_min
                && self.inner.x_max == other.inner.x_max)
    }
}

impl fmt::Debug for Grid1D {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid1D")
            .field("x_min", &self.inner.x_min)
            .field("x_max", &self.inner.x_max)
            .field("n", &self.inner.n)
            .field("dx", &self.inner.dx)
            .finish()
    }
}

/// Checked rectangle-rule quadrature.
pub fn quadrature(f: &[f64], grid: &Grid1D) -> Result<f64> {
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: f.len(),
        });
    }
    if f.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("quadrature integrand"));
    }
    Ok(grid.integrate(f))
}

/// Derivative via transform, multiplication by `(ik)^order`, and inverse
/// transform. Exact for band-limited periodic input.
pub fn spectral_derivative(f: &[Complex64], grid: &Grid1D, order: u32) -> Result<Vec<Complex64>> {
    if !(1..=2).contains(&order) {
        return Err(Error::UnsupportedOrder(order));
    }
    if f.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: f.len(),
        });
    }
    if f.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::NonFinite("spectral derivative input"));
    }
    Ok(grid.derivative(f, order))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn lattice_spacing() {
        let g = Grid1D::new(-10.0, 10.0, 8).unwrap();
        assert_eq!(g.dx(), 2.5);
        assert!((g.dk() - TAU / 20.0).abs() < 1e-15);
        assert!((g.dk() - 0.31416).abs() < 1e-5);
        assert_eq!(g.x_values()[0], -10.0);
        assert_eq!(g.x_values()[7], 7.5);
        let k: Vec<f64> = g.k_values().iter().map(|k| k / g.dk()).collect();
        assert_eq!(k, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);

        let g = Grid1D::new(-10.0, 10.0, 1024).unwrap();
        assert!((g.dx() - 0.01953125).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(matches!(
            Grid1D::new(0.0, 10.0, 7),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid1D::new(0.0, 10.0, 100),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid1D::new(0.0, 10.0, 4),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid1D::new(1.0, 1.0, 16),
            Err(Error::InvalidGrid(_))
        ));
        assert!(matches!(
            Grid1D::new(2.0, 1.0, 16),
            Err(Error::InvalidGrid(_))
        ));
    }

    #[test]
    fn quadrature_cases() {
        let g = Grid1D::new(-10.0, 10.0, 1024).unwrap();
        assert_eq!(quadrature(&vec![0.0; 1024], &g).unwrap(), 0.0);

        let normal: Vec<f64> = g
            .x_values()
            .iter()
            .map(|x| (-0.5 * x * x).exp() / TAU.sqrt())
            .collect();
        assert!((quadrature(&normal, &g).unwrap() - 1.0).abs() < 1e-12);

        let odd: Vec<f64> = g.x_values().iter().map(|x| x * (-x * x).exp()).collect();
        assert!(quadrature(&odd, &g).unwrap().abs() < 1e-12);

        let mut bad = normal.clone();
        bad[3] = f64::NAN;
        assert!(matches!(quadrature(&bad, &g), Err(Error::NonFinite(_))));
        assert!(matches!(
            quadrature(&normal[..10], &g),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn derivative_of_plane_wave() {
        let g = Grid1D::new(-10.0, 10.0, 256).unwrap();
        let k1 = 7.0 * g.dk();
        let f: Vec<Complex64> = g
            .x_values()
            .iter()
            .map(|&x| Complex64::from_polar(1.0, k1 * x))
            .collect();
        let df = spectral_derivative(&f, &g, 1).unwrap();
        for (d, z) in df.iter().zip(&f) {
            assert!((d - Complex64::new(0.0, k1) * z).norm() < 1e-10);
        }
    }

    #[test]
    fn derivative_of_constant_vanishes() {
        let g = Grid1D::new(-5.0, 5.0, 64).unwrap();
        let df = spectral_derivative(&vec![c(3.5); 64], &g, 1).unwrap();
        assert!(df.iter().all(|z| z.norm() < 1e-13));
    }

    #[test]
    fn second_derivative_of_gaussian() {
        let g = Grid1D::new(-10.0, 10.0, 512).unwrap();
        let f: Vec<Complex64> = g.x_values().iter().map(|x| c((-x * x).exp())).collect();
        let d2 = spectral_derivative(&f, &g, 2).unwrap();
        for (d, &x) in d2.iter().zip(g.x_values()) {
            let exact = (4.0 * x * x - 2.0) * (-x * x).exp();
            assert!((d.re - exact).abs() < 1e-8 && d.im.abs() < 1e-8);
        }
    }

    #[test]
    fn unsupported_order() {
        let g = Grid1D::new(-1.0, 1.0, 8).unwrap();
        assert_eq!(
            spectral_derivative(&[c(0.0); 8], &g, 3),
            Err(Error::UnsupportedOrder(3))
        );
        assert_eq!(
            spectral_derivative(&[c(0.0); 8], &g, 0),
            Err(Error::UnsupportedOrder(0))
        );
    }

    #[test]
    fn grids_compare_by_geometry() {
        let a = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let b = Grid1D::new(-1.0, 1.0, 16).unwrap();
        let c = Grid1D::new(-1.0, 1.0, 32).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
