//! Stationary KdV profiles on star graphs with delta-type vertex coupling,
//! their linearization, and the spectral tools used to study stability.

pub mod error;
pub mod extension;
pub mod graph;
pub mod group;
pub mod instability;
pub mod linalg;
pub mod profiles;
pub mod resolvent;
pub mod schrodinger;
pub mod spline;

pub use error::{Error, Result};
pub use graph::{build_grid, GraphFunction, GraphGrid, Side, StarGraph};
pub use profiles::{make_balanced_profile, make_profile, stationary_profile, BalancedProfile, Profile};
