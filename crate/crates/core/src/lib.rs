//! Core algorithms for work-zone traffic safety analysis: trajectory data
//! model, oriented-box geometry, conflict probabilities and warning policy,
//! displacement-error metrics, a minimal lanelet map, reference trajectory
//! predictors, and a deterministic merging-traffic simulator.
//!
//! This crate is `no_std` (with `alloc`); all file formats and IO live in
//! the companion `wz-sentinel` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod conflict;
pub mod geometry;
pub mod map;
pub mod metrics;
pub mod predict;
pub mod sim;
pub mod traj;

pub use geometry::Point2;
