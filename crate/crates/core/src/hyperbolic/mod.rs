//! The Poincaré disk: geodesics and their invariant measure, Crofton
//! calibration, `{p,q}` tiling windows and hyperplane percolation.

mod crofton;
mod geometry;
mod sampler;
mod tiling;

pub use crofton::{
    calibrate_crofton, crofton_constant, crofton_report, crossing_mass, origin_segment_mass_closed_form,
    restricted_mass, sample_geodesics, sample_geodesics_with, CroftonEntry, CroftonReport, Placement,
    CALIBRATION_LENGTHS, LINEARITY_TOL, PLACEMENTS,
};
pub use geometry::{
    geodesic_separates, hyp_dist, hyperboloid_far_side, radius, DiskPoint, Geodesic, Mobius, DIAMETER_TOL,
    SIDE_TOL,
};
pub use sampler::{sample_hyperplane_percolation, HyperplaneSampler, DISK_MARGIN};
pub use tiling::{
    inradius, side_pairings, tiling_graph, tiling_graph_with_budget, TilingSpec, TilingWindow, DEDUP_TOL,
    DEFAULT_TILING_BUDGET,
};
