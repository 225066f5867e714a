//! Invariant bond percolation on Cayley graphs built from point processes on
//! spaces with walls.
//!
//! The pipeline is: build a finite [`groups::CayleyWindow`], enumerate the
//! walls cutting its edges ([`walls`]), sample configurations
//! ([`percolation`]), label clusters ([`clusters`]) and estimate two-point
//! functions and their decay ([`estimators`]). [`kernels`] checks the
//! positive/negative definiteness properties of the resulting kernels and
//! [`hyperbolic`] runs hyperplane percolation on `{p,q}` tilings.

pub mod clusters;
pub mod descriptor;
pub mod error;
pub mod estimators;
pub mod groups;
pub mod hyperbolic;
pub mod kernels;
pub mod percolation;
pub mod walls;

pub use error::{Error, Result};
