//! Wave-packet simulation on a periodic 1-D grid, with information-theoretic
//! and hydrodynamic audits of the evolving state.

pub mod error;
pub mod grid;
pub mod hydro;
pub mod info;
pub mod potential;
pub mod propagate;
pub mod scenario;
pub mod states;
pub mod thermo;
pub mod wave;

pub use error::{Error, Result};
pub use grid::Grid1D;
pub use hydro::{HydroFields, VelocityVariances};
pub use info::{InfoReport, Slacks};
pub use potential::Potential;
pub use propagate::{evolve, Propagator, Scheme, Trajectory};
pub use scenario::{RunOutput, Scenario, ScenarioConfig};
pub use states::StateSpec;
pub use thermo::{ThermoLedger, ThermoParams};
pub use wave::{MomentumWave, Units, WaveFunction};
