use rand::RngCore;

use super::crofton::{crofton_constant, sample_geodesics_with};
use super::geometry::{radius, Geodesic};
use super::tiling::TilingWindow;
use crate::error::{Error, Result};
use crate::percolation::{BondSampler, Configuration, SeedRecord};

/// Extra hyperbolic radius of the sampling disk beyond the window's reach.
pub const DISK_MARGIN: f64 = 0.5;

const REACH_SLACK: f64 = 1e-9;

/// Deletes every edge whose endpoints are separated by a geodesic of a
/// Poisson process with intensity `(1−p)·μ`, `μ` calibrated to `λ = 1`.
#[derive(Debug, Clone)]
pub struct HyperplaneSampler<'t> {
    tiling: &'t TilingWindow,
    p: f64,
    c: f64,
    disk_radius: f64,
    /// Vertices in decreasing distance from the origin.
    by_radius: Vec<(f64, u32)>,
    /// Edges in decreasing far-endpoint distance.
    edges_by_radius: Vec<(f64, u32)>,
}

impl<'t> HyperplaneSampler<'t> {
    pub fn new(tiling: &'t TilingWindow, p: f64) -> Result<Self> {
        Self::with_constant(tiling, p, crofton_constant())
    }

    pub fn with_constant(tiling: &'t TilingWindow, p: f64, c: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidParameter(format!("p = {p} must lie in (0, 1)")));
        }
        let radii: Vec<f64> = tiling.points.iter().map(|&z| radius(z)).collect();
        let mut by_radius: Vec<(f64, u32)> = radii.iter().enumerate().map(|(i, &r)| (r, i as u32)).collect();
        by_radius.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let w = &tiling.window;
        let mut edges_by_radius: Vec<(f64, u32)> = w
            .edges()
            .iter()
            .enumerate()
            .map(|(i, e)| (radii[e.a as usize].max(radii[e.b as usize]), i as u32))
            .collect();
        edges_by_radius.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        let max_edge = tiling.edge_lengths().into_iter().fold(0.0, f64::max);
        Ok(Self {
            tiling,
            p,
            c,
            disk_radius: tiling.max_radius() + max_edge + DISK_MARGIN,
            by_radius,
            edges_by_radius,
        })
    }

    pub fn disk_radius(&self) -> f64 {
        self.disk_radius
    }

    pub fn rate(&self) -> f64 {
        1.0 - self.p
    }

    pub fn geodesics(&self, seed: SeedRecord) -> Vec<Geodesic> {
        self.geodesics_from(&mut seed.rng())
    }

    fn geodesics_from(&self, rng: &mut dyn RngCore) -> Vec<Geodesic> {
        sample_geodesics_with(rng, self.disk_radius, self.rate(), self.c).expect("validated parameters")
    }

    /// Open flags after deleting every edge crossed by one of `geodesics`.
    pub fn apply(&self, geodesics: &[Geodesic], open: &mut [bool]) {
        let w = &self.tiling.window;
        let pts = &self.tiling.points;
        open.fill(true);
        let mut far = vec![false; w.vertex_count()];
        for g in geodesics {
            // the far half-plane lies beyond distance p from the origin
            let cut = g.p - REACH_SLACK;
            let reach = self.by_radius.partition_point(|&(r, _)| r >= cut);
            if reach == 0 {
                continue;
            }
            for &(_, v) in &self.by_radius[..reach] {
                far[v as usize] = g.far_side(pts[v as usize]);
            }
            let edge_reach = self.edges_by_radius.partition_point(|&(r, _)| r >= cut);
            for &(_, e) in &self.edges_by_radius[..edge_reach] {
                let edge = w.edge(e as usize);
                let (a, b) = (edge.a as usize, edge.b as usize);
                if far[a] != far[b] {
                    open[e as usize] = false;
                }
            }
            for &(_, v) in &self.by_radius[..reach] {
                far[v as usize] = false;
            }
        }
    }
}

impl BondSampler for HyperplaneSampler<'_> {
    fn edge_count(&self) -> usize {
        self.tiling.window.edge_count()
    }

    fn sample_into(&self, seed: SeedRecord, open: &mut [bool]) {
        let mut rng = seed.rng();
        let geodesics = self.geodesics_from(&mut rng);
        self.apply(&geodesics, open);
    }

    fn describe(&self) -> String {
        format!("hyperplane p={} R={:.6}", self.p, self.disk_radius)
    }
}

pub fn sample_hyperplane_percolation<'t>(t: &'t TilingWindow, p: f64, seed: SeedRecord) -> Result<Configuration<'t>> {
    Configuration::sample(&t.window, &HyperplaneSampler::new(t, p)?, seed)
}
