use std::f64::consts::TAU;
use std::sync::OnceLock;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use super::geometry::{geodesic_separates, hyp_dist, DiskPoint, Geodesic, Mobius};
use crate::error::{Error, Result};
use crate::percolation::SeedRecord;

/// Segment lengths used for calibration.
pub const CALIBRATION_LENGTHS: [f64; 4] = [0.5, 1.0, 2.0, 4.0];

/// Allowed relative spread of mass/length.
pub const LINEARITY_TOL: f64 = 0.005;

const THETA_NODES: usize = 4096;
const P_SCAN: usize = 512;
const BISECT_STEPS: usize = 60;

/// A segment start point and direction, in polar coordinates of the start.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub start_radius: f64,
    pub start_angle: f64,
    pub direction: f64,
}

pub const PLACEMENTS: [Placement; 4] = [
    Placement { start_radius: 0.0, start_angle: 0.0, direction: 0.0 },
    Placement { start_radius: 0.0, start_angle: 0.0, direction: 1.1 },
    Placement { start_radius: 1.0, start_angle: 0.7, direction: 2.3 },
    Placement { start_radius: 2.0, start_angle: 4.0, direction: 0.4 },
];

impl Placement {
    /// Endpoints of the geodesic segment of length `len`.
    pub fn segment(&self, len: f64) -> Result<(DiskPoint, DiskPoint)> {
        let z = DiskPoint::polar(self.start_radius, self.start_angle)?;
        let w0 = Complex64::from_polar((len / 2.0).tanh(), self.direction);
        let w = Mobius::translation_to(z.to_complex()).apply(w0);
        Ok((z, DiskPoint::from_complex(w)?))
    }
}

/// `∫∫ 1[G(p,θ) separates z,w] cosh p dp dθ`, by a midpoint rule in `θ`
/// and, for each `θ`, bisection of the separation predicate in `p`.
pub fn crossing_mass(z: DiskPoint, w: DiskPoint) -> f64 {
    let p_max = hyp_dist(DiskPoint::ORIGIN, z).max(hyp_dist(DiskPoint::ORIGIN, w)) + 1.0;
    let dtheta = TAU / THETA_NODES as f64;
    let sep = |p: f64, theta: f64| geodesic_separates(&Geodesic { p, theta }, z, w);
    let mut total = 0.0;
    for k in 0..THETA_NODES {
        let theta = (k as f64 + 0.5) * dtheta;
        let mut inner = 0.0;
        let mut prev_p = 0.0;
        let mut prev = sep(0.0, theta);
        let mut open_at = if prev { Some(0.0) } else { None };
        for i in 1..=P_SCAN {
            let p = p_max * i as f64 / P_SCAN as f64;
            let cur = sep(p, theta);
            if cur != prev {
                let (mut lo, mut hi) = (prev_p, p);
                for _ in 0..BISECT_STEPS {
                    let mid = 0.5 * (lo + hi);
                    if sep(mid, theta) == prev {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let edge = 0.5 * (lo + hi);
                match open_at.take() {
                    Some(start) => inner += edge.sinh() - f64::sinh(start),
                    None => open_at = Some(edge),
                }
            }
            prev = cur;
            prev_p = p;
        }
        if let Some(start) = open_at {
            inner += p_max.sinh() - f64::sinh(start);
        }
        total += inner * dtheta;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CroftonEntry {
    pub placement: usize,
    pub length: f64,
    pub mass: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CroftonReport {
    /// `c` such that `c·cosh p dp dθ` gives separating mass equal to distance.
    pub constant: f64,
    pub entries: Vec<CroftonEntry>,
    /// Largest `|ratio/mean − 1|` over all entries.
    pub max_relative_deviation: f64,
    pub pass: bool,
}

pub fn crofton_report() -> Result<CroftonReport> {
    let mut entries = Vec::new();
    for (i, pl) in PLACEMENTS.iter().enumerate() {
        for &len in &CALIBRATION_LENGTHS {
            let (z, w) = pl.segment(len)?;
            let mass = crossing_mass(z, w);
            entries.push(CroftonEntry {
                placement: i,
                length: len,
                mass,
                ratio: mass / len,
            });
        }
    }
    let mean = entries.iter().map(|e| e.ratio).sum::<f64>() / entries.len() as f64;
    let max_relative_deviation = entries.iter().map(|e| (e.ratio / mean - 1.0).abs()).fold(0.0, f64::max);
    Ok(CroftonReport {
        constant: 1.0 / mean,
        entries,
        max_relative_deviation,
        pass: max_relative_deviation <= LINEARITY_TOL,
    })
}

/// Calibration constant; fails if mass is not linear in length.
pub fn calibrate_crofton() -> Result<f64> {
    let r = crofton_report()?;
    if !r.pass {
        return Err(Error::Calibration(format!(
            "mass/length varies by {:.3}%",
            100.0 * r.max_relative_deviation
        )));
    }
    Ok(r.constant)
}

/// Process-wide calibrated constant, computed once.
pub fn crofton_constant() -> f64 {
    static C: OnceLock<f64> = OnceLock::new();
    *C.get_or_init(|| calibrate_crofton().expect("Crofton calibration"))
}

/// Mass of the base measure on geodesics meeting the disk of radius `r`.
pub fn restricted_mass(r: f64) -> f64 {
    TAU * r.sinh()
}

/// A Poisson process of geodesics meeting the disk of radius `r`, with
/// intensity `rate · c · cosh p dp dθ`.
pub fn sample_geodesics_with<R: Rng + ?Sized>(rng: &mut R, r: f64, rate: f64, c: f64) -> Result<Vec<Geodesic>> {
    if !(r > 0.0 && rate >= 0.0) {
        return Err(Error::InvalidParameter(format!("need R > 0 and rate ≥ 0 (got {r}, {rate})")));
    }
    let mean = rate * c * restricted_mass(r);
    let n = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::InvalidParameter(e.to_string()))?
            .sample(rng) as usize
    } else {
        0
    };
    let sinh_r = r.sinh();
    Ok((0..n)
        .map(|_| {
            let theta = rng.random::<f64>() * TAU;
            let p = (rng.random::<f64>() * sinh_r).asinh();
            Geodesic { p, theta }
        })
        .collect())
}

pub fn sample_geodesics(r: f64, rate: f64, seed: SeedRecord) -> Result<Vec<Geodesic>> {
    sample_geodesics_with(&mut seed.rng(), r, rate, crofton_constant())
}

/// Closed-form separating mass for `z = 0`, `w` at distance `len`:
/// `∫ sinh(p_w(θ)) dθ` with `tanh p_w = tanh(len)·cos θ`.
pub fn origin_segment_mass_closed_form(len: f64) -> f64 {
    let a = len.tanh();
    2.0 * (a / (1.0 - a * a).sqrt()).asinh()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperbolic::geometry::hyperboloid_far_side;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_length_has_no_mass() {
        let z = DiskPoint::polar(0.8, 1.0).unwrap();
        assert_eq!(crossing_mass(z, z), 0.0);
    }

    #[test]
    fn quadrature_matches_closed_form() {
        for &len in &[0.5, 2.0] {
            let (z, w) = PLACEMENTS[0].segment(len).unwrap();
            let m = crossing_mass(z, w);
            assert!((m / origin_segment_mass_closed_form(len) - 1.0).abs() < 1e-4, "{len}: {m}");
            assert!((origin_segment_mass_closed_form(len) - 2.0 * len).abs() < 1e-12);
        }
    }

    #[test]
    fn placements_have_the_requested_length() {
        for pl in &PLACEMENTS {
            let (z, w) = pl.segment(2.0).unwrap();
            assert!((hyp_dist(z, w) - 2.0).abs() < 1e-10);
        }
    }

    #[test]
    fn side_test_agrees_with_hyperboloid_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..1000 {
            let g = Geodesic {
                p: rng.random::<f64>() * 4.0,
                theta: rng.random::<f64>() * TAU,
            };
            let z = DiskPoint::polar(rng.random::<f64>() * 5.0, rng.random::<f64>() * TAU).unwrap();
            let w = DiskPoint::polar(rng.random::<f64>() * 5.0, rng.random::<f64>() * TAU).unwrap();
            let oracle = hyperboloid_far_side(&g, z) != hyperboloid_far_side(&g, w);
            assert_eq!(geodesic_separates(&g, z, w), oracle);
        }
    }

    #[test]
    fn empty_process_at_zero_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(sample_geodesics_with(&mut rng, 3.0, 0.0, 0.5).unwrap().is_empty());
        assert!(sample_geodesics_with(&mut rng, 0.0, 1.0, 0.5).is_err());
    }
}
