use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::error::Result;
use crate::geometry::{sample_ppp_disk, PlanarPoint};
use crate::model::path_gain_sq;

/// Monte Carlo estimate of E[exp(−s·I)] at the origin, where
/// I = Σ P·|h|²·d^(−α) over a PPP of the given density on a disk of radius
/// `field_radius_m` with every point active.
pub fn empirical_laplace_functional(
    density: f64,
    power_mw: f64,
    alpha: f64,
    field_radius_m: f64,
    s_values: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sums = vec![0.0; s_values.len()];
    for _ in 0..samples {
        let points = sample_ppp_disk(density, field_radius_m, &mut rng)?;
        let interference: f64 = points
            .iter()
            .map(|p| {
                let g: f64 = rng.sample(Exp1);
                power_mw * g * path_gain_sq(p.distance_sq(&PlanarPoint::ORIGIN), alpha)
            })
            .sum();
        for (acc, &s) in sums.iter_mut().zip(s_values) {
            *acc += (-s * interference).exp();
        }
    }
    Ok(sums.into_iter().map(|v| v / samples as f64).collect())
}
