use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Points closer than this to the unit circle are rejected.
pub const DISK_MARGIN: f64 = 1e-12;

/// Side tests within this distance of zero go to the far side.
pub const SIDE_TOL: f64 = 1e-12;

/// Below this foot distance a geodesic is treated as a diameter.
pub const DIAMETER_TOL: f64 = 1e-9;

/// A point of the Poincaré disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiskPoint {
    pub x: f64,
    pub y: f64,
}

impl DiskPoint {
    pub const ORIGIN: DiskPoint = DiskPoint { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Result<Self> {
        let p = Self { x, y };
        if !(x.is_finite() && y.is_finite()) || p.norm() >= 1.0 - DISK_MARGIN {
            return Err(Error::InvalidParameter(format!("({x}, {y}) is not inside the disk")));
        }
        Ok(p)
    }

    /// The point at hyperbolic distance `r` from the origin in direction `angle`.
    pub fn polar(r: f64, angle: f64) -> Result<Self> {
        let t = (r / 2.0).tanh();
        Self::new(t * angle.cos(), t * angle.sin())
    }

    pub fn from_complex(z: Complex64) -> Result<Self> {
        Self::new(z.re, z.im)
    }

    pub fn to_complex(self) -> Complex64 {
        Complex64::new(self.x, self.y)
    }

    pub fn norm_sqr(self) -> f64 {
        self.x * self.x + self.y * self.y
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    /// Point on the hyperboloid model, `(x0, x1, x2)`.
    pub fn hyperboloid(self) -> [f64; 3] {
        let r2 = self.norm_sqr();
        let d = 1.0 - r2;
        [(1.0 + r2) / d, 2.0 * self.x / d, 2.0 * self.y / d]
    }
}

pub fn hyp_dist(z: DiskPoint, w: DiskPoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    let num = 2.0 * (dx * dx + dy * dy);
    let den = (1.0 - z.norm_sqr()) * (1.0 - w.norm_sqr());
    (1.0 + num / den).acosh()
}

/// Distance to the origin.
pub fn radius(z: DiskPoint) -> f64 {
    2.0 * z.norm().atanh()
}

/// A geodesic, given by the hyperbolic distance `p` from the origin to its
/// closest point and the direction `theta` of that point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geodesic {
    pub p: f64,
    pub theta: f64,
}

impl Geodesic {
    pub fn new(p: f64, theta: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite() && theta.is_finite()) {
            return Err(Error::InvalidParameter(format!("geodesic ({p}, {theta})")));
        }
        Ok(Self {
            p,
            theta: theta.rem_euclid(TAU),
        })
    }

    /// Signed side test. Positive on the half-plane away from the origin:
    /// inside the Euclidean circle with centre `(1+r₀²)/(2r₀)·u` and radius
    /// `(1−r₀²)/(2r₀)`, `r₀ = tanh(p/2)`; for diameters, the half-plane
    /// `z·u > 0`.
    pub fn side_value(&self, z: DiskPoint) -> f64 {
        let (s, c) = self.theta.sin_cos();
        let zu = z.x * c + z.y * s;
        if self.p < DIAMETER_TOL {
            return zu;
        }
        let r0 = (self.p / 2.0).tanh();
        zu * (1.0 + r0 * r0) - r0 * (1.0 + z.norm_sqr())
    }

    /// Far-side membership; degenerate points count as far.
    pub fn far_side(&self, z: DiskPoint) -> bool {
        self.side_value(z) >= -SIDE_TOL
    }
}

pub fn geodesic_separates(g: &Geodesic, z: DiskPoint, w: DiskPoint) -> bool {
    g.far_side(z) != g.far_side(w)
}

/// Side test in the hyperboloid model: sign of the Minkowski product with
/// the unit normal `(sinh p, cosh p·u)`.
pub fn hyperboloid_far_side(g: &Geodesic, z: DiskPoint) -> bool {
    let [x0, x1, x2] = z.hyperboloid();
    let (s, c) = g.theta.sin_cos();
    -x0 * g.p.sinh() + g.p.cosh() * (x1 * c + x2 * s) >= 0.0
}

/// Orientation-preserving isometry `z ↦ (a z + b)/(b̄ z + ā)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mobius {
    pub a: Complex64,
    pub b: Complex64,
}

impl Mobius {
    pub const IDENTITY: Mobius = Mobius {
        a: Complex64::new(1.0, 0.0),
        b: Complex64::new(0.0, 0.0),
    };

    pub fn rotation(angle: f64) -> Self {
        Self {
            a: Complex64::from_polar(1.0, angle / 2.0),
            b: Complex64::new(0.0, 0.0),
        }
    }

    /// The isometry taking 0 to `m` along the diameter through `m`.
    pub fn translation_to(m: Complex64) -> Self {
        let s = 1.0 / (1.0 - m.norm_sqr()).sqrt();
        Self {
            a: Complex64::new(s, 0.0),
            b: m * s,
        }
    }

    /// Half-turn about the point `m`.
    pub fn half_turn(m: Complex64) -> Self {
        let t = Self::translation_to(m);
        t.compose(&Self::rotation(std::f64::consts::PI)).compose(&t.inverse())
    }

    pub fn inverse(&self) -> Self {
        Self { a: self.a.conj(), b: -self.b }
    }

    /// `self ∘ other`, renormalised to unit determinant.
    pub fn compose(&self, other: &Mobius) -> Self {
        let a = self.a * other.a + self.b * other.b.conj();
        let b = self.a * other.b + self.b * other.a.conj();
        let det = (a.norm_sqr() - b.norm_sqr()).sqrt();
        Self { a: a / det, b: b / det }
    }

    pub fn apply(&self, z: Complex64) -> Complex64 {
        (self.a * z + self.b) / (self.b.conj() * z + self.a.conj())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distance_fixtures() {
        let z = DiskPoint::new(0.3, -0.2).unwrap();
        assert_eq!(hyp_dist(z, z), 0.0);
        let w = DiskPoint::new((0.5f64).tanh(), 0.0).unwrap();
        assert!((hyp_dist(DiskPoint::ORIGIN, w) - 1.0).abs() < 1e-14);
        assert_eq!(hyp_dist(z, w), hyp_dist(w, z));
        assert!(DiskPoint::new(1.0, 0.0).is_err());
    }

    #[test]
    fn diameter_separation() {
        let g = Geodesic::new(0.0, 0.0).unwrap();
        let z = DiskPoint::new(0.0, 0.5).unwrap();
        let w = DiskPoint::new(0.0, -0.5).unwrap();
        // the diameter through the origin with direction θ=0 is the y-axis
        assert!(!geodesic_separates(&g, z, w));
        let h = Geodesic::new(0.0, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(geodesic_separates(&h, z, w));
        assert!(!geodesic_separates(&h, z, z));
    }

    #[test]
    fn foot_point_is_on_the_geodesic() {
        for &(p, th) in &[(0.3, 0.0), (1.7, 2.0), (4.0, 5.5)] {
            let g = Geodesic::new(p, th).unwrap();
            let f = DiskPoint::polar(p, th).unwrap();
            assert!(g.side_value(f).abs() < 1e-12);
            let inner = DiskPoint::polar(p * 0.9, th).unwrap();
            let outer = DiskPoint::polar(p * 1.1, th).unwrap();
            assert!(!g.far_side(inner));
            assert!(g.far_side(outer));
        }
    }

    #[test]
    fn mobius_is_an_isometry() {
        let m = Mobius::translation_to(Complex64::new(0.2, 0.4)).compose(&Mobius::rotation(0.7));
        let z = DiskPoint::new(0.1, -0.5).unwrap();
        let w = DiskPoint::new(-0.6, 0.2).unwrap();
        let mz = DiskPoint::from_complex(m.apply(z.to_complex())).unwrap();
        let mw = DiskPoint::from_complex(m.apply(w.to_complex())).unwrap();
        assert!((hyp_dist(z, w) - hyp_dist(mz, mw)).abs() < 1e-12);
        let back = m.inverse().apply(m.apply(z.to_complex()));
        assert!((back - z.to_complex()).norm() < 1e-14);
    }

    #[test]
    fn half_turn_fixes_its_centre() {
        let m = Complex64::new(0.25, 0.1);
        let h = Mobius::half_turn(m);
        assert!((h.apply(m) - m).norm() < 1e-14);
        let z = Complex64::new(-0.3, 0.3);
        assert!((h.apply(h.apply(z)) - z).norm() < 1e-13);
    }
}
