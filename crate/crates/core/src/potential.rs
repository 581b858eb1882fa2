//! External potentials `𝒱(x, t)` in energy units.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::wave::Units;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    Free {},
    /// `½ m ω² x²`
    Harmonic {
        omega: f64,
    },
    /// `½ m ω(t)² x²` with `ω(t) = ω₀ (1 + a sin νt)`.
    TimeDependentHarmonic {
        omega0: f64,
        amplitude: f64,
        frequency: f64,
    },
    /// Values sampled on the simulation grid; static.
    Tabulated {
        values: Vec<f64>,
    },
}

impl Potential {
    pub fn validate(&self, grid: &Grid1D) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v} must be > 0")))
            }
        };
        match self {
            Potential::Free {} => Ok(()),
            Potential::Harmonic { omega } => positive("omega", *omega),
            Potential::TimeDependentHarmonic {
                omega0,
                amplitude,
                frequency,
            } => {
                positive("omega0", *omega0)?;
                if !amplitude.is_finite() || !frequency.is_finite() {
                    return Err(Error::NonFinite("drive parameters"));
                }
                Ok(())
            }
            Potential::Tabulated { values } => {
                if values.len() != grid.len() {
                    return Err(Error::LengthMismatch {
                        expected: grid.len(),
                        got: values.len(),
                    });
                }
                // finite samples are automatically bounded below on the grid
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::NonFinite("tabulated potential"));
                }
                Ok(())
            }
        }
    }

    pub fn is_static(&self) -> bool {
        !matches!(self, Potential::TimeDependentHarmonic { .. })
    }

    /// Instantaneous angular frequency for the harmonic kinds.
    pub fn omega_at(&self, t: f64) -> Option<f64> {
        match *self {
            Potential::Harmonic { omega } => Some(omega),
            Potential::TimeDependentHarmonic {
                omega0,
                amplitude,
                frequency,
            } => Some(omega0 * (1.0 + amplitude * (frequency * t).sin())),
            _ => None,
        }
    }

    /// `𝒱(x_j, t)` on every grid point.
    pub fn sample(&self, grid: &Grid1D, t: f64, units: &Units) -> Vec<f64> {
        match self {
            Potential::Free {} => vec![0.0; grid.len()],
            Potential::Tabulated { values } => values.clone(),
            _ => {
                let w = self.omega_at(t).unwrap_or(0.0);
                let c = 0.5 * units.m * w * w;
                grid.x_values().iter().map(|x| c * x * x).collect()
            }
        }
    }

    /// `⟨𝒱(·, t)⟩` under the density ρ.
    pub fn expectation(&self, density: &[f64], grid: &Grid1D, t: f64, units: &Units) -> f64 {
        match self {
            Potential::Free {} => 0.0,
            _ => {
                let v = self.sample(grid, t, units);
                density.iter().zip(&v).map(|(r, v)| r * v).sum::<f64>() * grid.dx()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_values() {
        let g = Grid1D::new(-4.0, 4.0, 16).unwrap();
        let u = Units::new(0.5, 2.0).unwrap();
        let v = Potential::Harmonic { omega: 3.0 }.sample(&g, 0.0, &u);
        for (x, v) in g.x_values().iter().zip(&v) {
            assert!((v - 9.0 * x * x).abs() < 1e-12);
        }
    }

    #[test]
    fn drive_modulates_frequency() {
        let p = Potential::TimeDependentHarmonic {
            omega0: 1.0,
            amplitude: 0.2,
            frequency: 2.0,
        };
        assert!(!p.is_static());
        let t = std::f64::consts::FRAC_PI_4;
        assert!((p.omega_at(t).unwrap() - 1.2).abs() < 1e-14);
        assert_eq!(p.omega_at(0.0), Some(1.0));
    }

    #[test]
    fn validation() {
        let g = Grid1D::new(-4.0, 4.0, 16).unwrap();
        assert!(Potential::Harmonic { omega: 0.0 }.validate(&g).is_err());
        assert!(matches!(
            Potential::Tabulated {
                values: vec![0.0; 8]
            }
            .validate(&g),
            Err(Error::LengthMismatch {
                expected: 16,
                got: 8
            })
        ));
        let mut values = vec![1.0; 16];
        values[3] = f64::NEG_INFINITY;
        assert!(matches!(
            Potential::Tabulated { values }.validate(&g),
            Err(Error::NonFinite(_))
        ));
    }

    #[test]
    fn parses_from_toml() {
        let p: Potential = toml::from_str("kind = \"harmonic\"\nomega = 2.0").unwrap();
        assert_eq!(p, Potential::Harmonic { omega: 2.0 });
        let p: Potential = toml::from_str(
            "kind = \"time_dependent_harmonic\"\nomega0 = 1.0\namplitude = 0.1\nfrequency = 2.0",
        )
        .unwrap();
        assert!(!p.is_static());
        assert!(toml::from_str::<Potential>("kind = \"free\"\nomega = 1.0").is_err());
    }
}
