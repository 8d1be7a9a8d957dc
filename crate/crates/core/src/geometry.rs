//! Point-process sampling on the cell disk and the distance law between
//! two uniform points of a disk.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PlanarPoint {
    pub x_m: f64,
    pub y_m: f64,
}

impl PlanarPoint {
    pub const ORIGIN: PlanarPoint = PlanarPoint { x_m: 0.0, y_m: 0.0 };

    pub fn new(x_m: f64, y_m: f64) -> Self {
        PlanarPoint { x_m, y_m }
    }

    pub fn norm(&self) -> f64 {
        self.x_m.hypot(self.y_m)
    }

    pub fn distance_sq(&self, other: &PlanarPoint) -> f64 {
        let dx = self.x_m - other.x_m;
        let dy = self.y_m - other.y_m;
        dx * dx + dy * dy
    }

    pub fn distance(&self, other: &PlanarPoint) -> f64 {
        self.distance_sq(other).sqrt()
    }
}

/// Uniform point in the disk of radius `radius_m` centred at the origin.
///
/// The radius is drawn as R·√(1 − U) with U ∈ [0, 1), so it is strictly
/// positive and no point lands on the BS.
pub fn uniform_in_disk<R: Rng + ?Sized>(radius_m: f64, rng: &mut R) -> PlanarPoint {
    let u: f64 = rng.random();
    let r = radius_m * (1.0 - u).sqrt();
    let theta = 2.0 * PI * rng.random::<f64>();
    PlanarPoint::new(r * theta.cos(), r * theta.sin())
}

/// Homogeneous PPP of the given intensity restricted to a disk: a Poisson
/// count followed by i.i.d. uniform placement.
pub fn sample_ppp_disk<R: Rng + ?Sized>(
    intensity: f64,
    radius_m: f64,
    rng: &mut R,
) -> Result<Vec<PlanarPoint>> {
    if !(intensity >= 0.0) || !intensity.is_finite() {
        return Err(Error::Domain(format!(
            "intensity must be >= 0, got {intensity}"
        )));
    }
    if !(radius_m > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {radius_m}"
        )));
    }
    let mean = intensity * PI * radius_m * radius_m;
    if mean == 0.0 {
        return Ok(Vec::new());
    }
    let count = Poisson::new(mean)
        .map_err(|e| Error::Domain(format!("poisson mean {mean}: {e}")))?
        .sample(rng) as usize;
    Ok((0..count).map(|_| uniform_in_disk(radius_m, rng)).collect())
}

/// Receiver at exactly `pair_distance_m` from `tx` in a uniform direction.
pub fn place_receiver<R: Rng + ?Sized>(
    tx: PlanarPoint,
    pair_distance_m: f64,
    rng: &mut R,
) -> PlanarPoint {
    let theta = 2.0 * PI * rng.random::<f64>();
    PlanarPoint::new(
        tx.x_m + pair_distance_m * theta.cos(),
        tx.y_m + pair_distance_m * theta.sin(),
    )
}

/// Density of the distance between two independent uniform points of a disk
/// of radius `radius_m`; zero outside [0, 2R].
pub fn disk_pair_distance_pdf(r_m: f64, radius_m: f64) -> Result<f64> {
    if r_m < 0.0 {
        return Err(Error::Domain(format!("distance must be >= 0, got {r_m}")));
    }
    if !(radius_m > 0.0) {
        return Err(Error::Domain(format!(
            "radius must be positive, got {radius_m}"
        )));
    }
    Ok(pair_distance_pdf_unchecked(r_m, radius_m))
}

pub(crate) fn pair_distance_pdf_unchecked(r: f64, radius: f64) -> f64 {
    if r > 2.0 * radius {
        return 0.0;
    }
    let q = (r / (2.0 * radius)).min(1.0);
    let root = (1.0 - q * q).max(0.0).sqrt();
    (2.0 * r / (radius * radius)) * ((2.0 / PI) * q.acos() - (r / (PI * radius)) * root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn empty_process() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_ppp_disk(0.0, 100.0, &mut rng).unwrap().is_empty());
        assert!(sample_ppp_disk(-1.0, 100.0, &mut rng).is_err());
        assert!(sample_ppp_disk(0.01, 0.0, &mut rng).is_err());
    }

    #[test]
    fn ppp_mean_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let draws = 10_000;
        let mean_expected = 0.01 * PI * 100.0 * 100.0;
        let mut total = 0usize;
        let mut sub = 0usize;
        for _ in 0..draws {
            let pts = sample_ppp_disk(0.01, 100.0, &mut rng).unwrap();
            for p in &pts {
                assert!(p.norm() <= 100.0);
            }
            total += pts.len();
            // sub-disk of radius 40 centred at (30, 0), fully inside the cell
            let c = PlanarPoint::new(30.0, 0.0);
            sub += pts.iter().filter(|p| p.distance(&c) < 40.0).count();
        }
        let mean = total as f64 / draws as f64;
        let sigma = (mean_expected / draws as f64).sqrt();
        assert!((mean - mean_expected).abs() < 3.0 * sigma, "mean {mean}");
        let sub_expected = 0.01 * PI * 1600.0;
        let sub_mean = sub as f64 / draws as f64;
        let sub_sigma = (sub_expected / draws as f64).sqrt();
        assert!(
            (sub_mean - sub_expected).abs() < 3.0 * sub_sigma,
            "sub {sub_mean}"
        );
    }

    #[test]
    fn receiver_distance_and_angle() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let tx = PlanarPoint::new(12.0, -7.0);
        let n = 100_000;
        let bins = 20;
        let mut hist = vec![0usize; bins];
        let (mut sx, mut sy) = (0.0, 0.0);
        for _ in 0..n {
            let rx = place_receiver(tx, 5.0, &mut rng);
            assert!((rx.distance(&tx) - 5.0).abs() < 1e-9);
            let angle = (rx.y_m - tx.y_m)
                .atan2(rx.x_m - tx.x_m)
                .rem_euclid(2.0 * PI);
            hist[((angle / (2.0 * PI)) * bins as f64) as usize % bins] += 1;
            sx += rx.x_m - tx.x_m;
            sy += rx.y_m - tx.y_m;
        }
        let expected = n as f64 / bins as f64;
        let chi2: f64 = hist
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // chi-square 99th percentile with 19 degrees of freedom
        assert!(chi2 < 36.19, "chi2 {chi2}");
        assert!((sx / n as f64).abs() < 0.05 && (sy / n as f64).abs() < 0.05);
    }

    #[test]
    fn pair_pdf_anchors() {
        assert_eq!(disk_pair_distance_pdf(0.0, 100.0).unwrap(), 0.0);
        assert!(disk_pair_distance_pdf(200.0, 100.0).unwrap().abs() < 1e-15);
        assert_eq!(disk_pair_distance_pdf(250.0, 100.0).unwrap(), 0.0);
        assert!(disk_pair_distance_pdf(-1.0, 100.0).is_err());
        // (2/100)·[(2/π)·arccos(1/2) − (1/π)·√(3/4)]
        let expected = 0.02 * ((2.0 / PI) * (PI / 3.0) - (0.75f64).sqrt() / PI);
        let v = disk_pair_distance_pdf(100.0, 100.0).unwrap();
        assert!((v - expected).abs() < 1e-15);
        assert!((v - 0.007820044379115).abs() < 1e-14);
    }

    #[test]
    fn pair_pdf_matches_histogram() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 1_000_000;
        let width = 5.0;
        let (lo, hi) = (97.5, 102.5);
        let mut hits = 0usize;
        for _ in 0..n {
            let d = uniform_in_disk(100.0, &mut rng).distance(&uniform_in_disk(100.0, &mut rng));
            if d >= lo && d < hi {
                hits += 1;
            }
        }
        let empirical = hits as f64 / (n as f64 * width);
        let sigma = (hits as f64).sqrt() / (n as f64 * width);
        let v = disk_pair_distance_pdf(100.0, 100.0).unwrap();
        assert!((empirical - v).abs() < 4.0 * sigma, "{empirical} vs {v}");
    }
}
