//! Simulation core for egocentric view-frame cockpits.
//!
//! Everything here is pure computation over in-memory data and builds
//! without the standard library (`alloc` only). File formats, the CLI and
//! thread pools live in the companion `vrcockpit` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod analysis;
pub mod arena;
pub mod cockpit;
pub mod games;
pub mod math;
pub mod metrics;
pub mod render;
pub mod rng;
pub mod scene;
pub mod track;
