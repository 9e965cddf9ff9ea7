use nalgebra::Vector4;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{HourModel, SvarError, N_ENDOG};

pub const MIN_DRAWS: usize = 100;

/// Bootstrap fan for one (day, hour) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSet {
    pub y_point: [f64; N_ENDOG],
    /// One row per draw, (RES, L, DA, ID).
    pub y_draws: Vec<[f64; N_ENDOG]>,
    /// Expected utility generation in MWh, unfloored.
    pub g_hat: f64,
    /// Simulated utility generation in MWh, floored at zero.
    pub g_draws: Vec<f64>,
    pub seed: u64,
    pub rho: f64,
}

impl ScenarioSet {
    pub fn n_draws(&self) -> usize {
        self.y_draws.len()
    }

    /// Builds a scenario set from explicit draws; generation is derived
    /// from the RES coordinate.
    pub fn from_draws(y_point: [f64; N_ENDOG], y_draws: Vec<[f64; N_ENDOG]>, rho: f64, seed: u64) -> Self {
        let g_draws = y_draws.iter().map(|y| generation_mwh(rho, y[0].max(0.0))).collect();
        Self { g_hat: generation_mwh(rho, y_point[0]), y_point, y_draws, g_draws, seed, rho }
    }
}

/// Utility share of aggregate RES (GWh/h) in MWh.
pub fn generation_mwh(rho: f64, res_gwh: f64) -> f64 {
    rho * res_gwh * 1000.0
}

/// Resamples each structural shock coordinate independently from its own
/// history and maps the draw through `B`.
pub fn simulate_scenarios(
    model: &HourModel,
    y_point: [f64; N_ENDOG],
    n_draws: usize,
    seed: u64,
) -> Result<ScenarioSet, SvarError> {
    if n_draws < MIN_DRAWS {
        return Err(SvarError::TooFewDraws { n: n_draws, min: MIN_DRAWS });
    }
    let shocks = model.shocks();
    if shocks.is_empty() {
        return Err(SvarError::EmptyShockHistory);
    }
    let b = model.b();
    let point = Vector4::from(y_point);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = shocks.len();
    let y_draws = (0..n_draws)
        .map(|_| {
            let mut u = [0.0; N_ENDOG];
            for (k, uk) in u.iter_mut().enumerate() {
                *uk = shocks[rng.random_range(0..t)][k];
            }
            (point + b * Vector4::from(u)).into()
        })
        .collect();
    Ok(ScenarioSet::from_draws(y_point, y_draws, model.spec().rho(), seed))
}
