use infodyn::states::{superposition, StateSpec};
use infodyn::{Grid1D, Units, WaveFunction};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const ENSEMBLE_SEED: u64 = 20_260_101;
pub const ENSEMBLE_SIZE: usize = 200;

pub fn default_grid() -> Grid1D {
    Grid1D::new(-20.0, 20.0, 2048).unwrap()
}

/// Normalized mix of `terms` distinct oscillator levels below `levels`, with
/// coefficients uniform in the unit square.
pub fn random_superposition(
    rng: &mut impl Rng,
    terms: usize,
    levels: usize,
    grid: &Grid1D,
) -> WaveFunction {
    let specs: Vec<StateSpec> = sample(rng, levels, terms)
        .into_iter()
        .map(|n| StateSpec::HoEigenstate {
            n: n as u32,
            omega: 1.0,
        })
        .collect();
    let coeffs: Vec<Complex64> = (0..terms)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    superposition(&specs, &coeffs, grid, &Units::default()).unwrap()
}

/// The seeded five-term ensemble over the ten lowest levels.
pub fn ensemble(grid: &Grid1D) -> Vec<WaveFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(ENSEMBLE_SEED);
    (0..ENSEMBLE_SIZE)
        .map(|_| random_superposition(&mut rng, 5, 10, grid))
        .collect()
}
