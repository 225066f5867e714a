use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{hyp_dist, radius, DiskPoint, Mobius};
use crate::descriptor::Descriptor;
use crate::error::{descriptor_error, Error, Result};
use crate::groups::{CayleyWindow, Edge, Family, GroupElement};

/// Euclidean tolerance for identifying cell centres.
pub const DEDUP_TOL: f64 = 1e-9;

pub const DEFAULT_TILING_BUDGET: usize = 500_000;

/// `tiling:p=4,q=5,depth=6`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TilingSpec {
    pub p: u32,
    pub q: u32,
    pub depth: u32,
}

impl std::str::FromStr for TilingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s)?;
        if d.kind != "tiling" {
            return Err(descriptor_error(s, "expected `tiling:`"));
        }
        d.only(&["p", "q", "depth"])?;
        let spec = Self {
            p: d.get("p")?.unwrap_or(4),
            q: d.get("q")?.unwrap_or(5),
            depth: d.get("depth")?.unwrap_or(6),
        };
        Family::Tiling { p: spec.p, q: spec.q }.validate()?;
        Ok(spec)
    }
}

impl std::fmt::Display for TilingSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "tiling:p={},q={},depth={}", self.p, self.q, self.depth)
    }
}

/// Dual graph of a `{p,q}` tiling around a base cell: vertices are cell
/// centres, edges join cells sharing a side.
#[derive(Debug, Clone)]
pub struct TilingWindow {
    pub spec: TilingSpec,
    pub points: Vec<DiskPoint>,
    pub window: CayleyWindow,
}

impl TilingWindow {
    pub fn edge_length(&self, e: usize) -> f64 {
        let Edge { a, b, .. } = self.window.edge(e);
        hyp_dist(self.points[a as usize], self.points[b as usize])
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        (0..self.window.edge_count()).map(|e| self.edge_length(e)).collect()
    }

    /// Largest hyperbolic distance from the base cell centre.
    pub fn max_radius(&self) -> f64 {
        self.points.iter().map(|&z| radius(z)).fold(0.0, f64::max)
    }
}

/// Inradius `h` of the tile: `cosh h = cos(π/q)/sin(π/p)`.
pub fn inradius(p: u32, q: u32) -> f64 {
    ((PI / q as f64).cos() / (PI / p as f64).sin()).acosh()
}

/// Half-turns about the side midpoints of the base cell.
pub fn side_pairings(p: u32, q: u32) -> Vec<Mobius> {
    let mid = (inradius(p, q) / 2.0).tanh();
    (0..p)
        .map(|k| Mobius::half_turn(Complex64::from_polar(mid, 2.0 * PI * k as f64 / p as f64)))
        .collect()
}

#[derive(Default)]
struct CentreIndex {
    cells: HashMap<(i64, i64), Vec<u32>>,
}

impl CentreIndex {
    const CELL: f64 = 1e-6;

    fn key(z: Complex64) -> (i64, i64) {
        ((z.re / Self::CELL).floor() as i64, (z.im / Self::CELL).floor() as i64)
    }

    fn find(&self, z: Complex64, centres: &[Complex64]) -> Option<u32> {
        let (kx, ky) = Self::key(z);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.cells.get(&(kx + dx, ky + dy)) {
                    if let Some(&id) = ids.iter().find(|&&id| (centres[id as usize] - z).norm() < DEDUP_TOL) {
                        return Some(id);
                    }
                }
            }
        }
        None
    }

    fn insert(&mut self, z: Complex64, id: u32) {
        self.cells.entry(Self::key(z)).or_default().push(id);
    }
}

/// Breadth-first generation of the cells within `depth` steps of the base
/// cell. Cell `i` carries the isometry taking the base cell onto it; its
/// neighbours are the images of the base cell's neighbours.
pub fn tiling_graph(p: u32, q: u32, depth: u32) -> Result<TilingWindow> {
    tiling_graph_with_budget(p, q, depth, DEFAULT_TILING_BUDGET)
}

pub fn tiling_graph_with_budget(p: u32, q: u32, depth: u32, budget: usize) -> Result<TilingWindow> {
    let family = Family::Tiling { p, q };
    family.validate()?;
    let gens = side_pairings(p, q);
    let mut maps = vec![Mobius::IDENTITY];
    let mut centres = vec![Complex64::new(0.0, 0.0)];
    let mut level = vec![0u32];
    let mut index = CentreIndex::default();
    index.insert(centres[0], 0);
    let mut edges: Vec<Edge> = Vec::new();
    let mut seen_edges = std::collections::HashSet::new();
    let mut head = 0;
    while head < maps.len() {
        let g = maps[head];
        let expand = level[head] < depth;
        for (k, t) in gens.iter().enumerate() {
            let m = g.compose(t);
            let c = m.apply(Complex64::new(0.0, 0.0));
            let id = match index.find(c, &centres) {
                Some(id) => id,
                None if expand => {
                    if maps.len() >= budget {
                        return Err(Error::BudgetExceeded { budget });
                    }
                    let id = maps.len() as u32;
                    maps.push(m);
                    centres.push(c);
                    level.push(level[head] + 1);
                    index.insert(c, id);
                    id
                }
                None => continue,
            };
            let (a, b) = (head as u32, id);
            if a != b && seen_edges.insert((a.min(b), a.max(b))) {
                let (lo, hi, gen) = if a < b { (a, b, k) } else { (b, a, k) };
                edges.push(Edge {
                    a: lo,
                    b: hi,
                    generator: gen as u8,
                });
            }
        }
        head += 1;
    }
    let points = centres
        .iter()
        .map(|&c| DiskPoint::from_complex(c))
        .collect::<Result<Vec<_>>>()?;
    let vertices = (0..points.len() as u32).map(GroupElement::Tiling).collect();
    let window = CayleyWindow::from_graph(family, depth, vertices, edges, p as usize);
    Ok(TilingWindow {
        spec: TilingSpec { p, q, depth },
        points,
        window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_one() {
        let t = tiling_graph(4, 5, 1).unwrap();
        assert_eq!(t.window.vertex_count(), 5);
        assert_eq!(t.window.edge_count(), 4);
    }

    #[test]
    fn equal_edge_lengths_and_interior_degree() {
        let t = tiling_graph(4, 5, 4).unwrap();
        let h2 = 2.0 * inradius(4, 5);
        for len in t.edge_lengths() {
            assert!((len - h2).abs() < 1e-9, "{len} vs {h2}");
        }
        for v in 0..t.window.vertex_count() {
            if t.window.level(v) < 4 {
                assert_eq!(t.window.neighbors(v).len(), 4);
            }
            assert_eq!(t.window.level(v), t.window.level(v).min(4));
        }
    }

    #[test]
    fn rejects_euclidean_parameters() {
        assert!(tiling_graph(4, 4, 2).is_err());
        assert!(tiling_graph(3, 6, 2).is_err());
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            tiling_graph_with_budget(4, 5, 6, 50),
            Err(Error::BudgetExceeded { budget: 50 })
        ));
    }

    #[test]
    fn descriptor() {
        let s: TilingSpec = "tiling:p=4,q=5,depth=6".parse().unwrap();
        assert_eq!(s, TilingSpec { p: 4, q: 5, depth: 6 });
        assert_eq!(s.to_string(), "tiling:p=4,q=5,depth=6");
        assert!("tiling:p=4,q=4".parse::<TilingSpec>().is_err());
    }
}
