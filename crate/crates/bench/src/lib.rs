//! Shared fixtures for the benchmarks.

use infodyn::states::{coherent_state, ho_eigenstate, superposition, StateSpec};
use infodyn::{evolve, Grid1D, Potential, Scheme, ThermoParams, Trajectory, Units, WaveFunction};
use num_complex::Complex64;

/// Default box with `n` points.
pub fn grid(n: usize) -> Grid1D {
    Grid1D::new(-20.0, 20.0, n).expect("power-of-two grid")
}

/// Displaced ground state, nodeless at all times.
pub fn coherent(n: usize) -> WaveFunction {
    coherent_state(Complex64::new(1.0, 0.5), 1.0, &grid(n), &Units::default())
        .expect("fits the box")
}

/// Mix of the three lowest levels with a complex phase.
pub fn mixed(n: usize) -> WaveFunction {
    let specs: Vec<StateSpec> = (0..3)
        .map(|n| StateSpec::HoEigenstate { n, omega: 1.0 })
        .collect();
    let coeffs = [
        Complex64::new(1.0, 0.0),
        Complex64::new(0.5, 0.5),
        Complex64::new(0.0, 0.3),
    ];
    superposition(&specs, &coeffs, &grid(n), &Units::default()).expect("fits the box")
}

pub fn ground(n: usize) -> WaveFunction {
    ho_eigenstate(0, 1.0, &grid(n), &Units::default()).expect("fits the box")
}

pub fn harmonic() -> Potential {
    Potential::Harmonic { omega: 1.0 }
}

/// Coherent-state trajectory with `snapshots + 1` snapshots spaced by 1e-2.
pub fn coherent_trajectory(n: usize, snapshots: usize) -> Trajectory {
    evolve(
        &coherent(n),
        &harmonic(),
        1e-3,
        10 * snapshots,
        10,
        Scheme::SplitStep,
        &Units::default(),
    )
    .expect("stable run")
}

pub fn params() -> ThermoParams {
    ThermoParams::default()
}
