//! Shared fixtures for the criterion benchmarks.

use thermotop_core::so3::{Rotation, Vec3};
use thermotop_core::systems::{HeavyTopParams, HeavyTopSystem, ReducedState};

/// The damped-top configuration every benchmark runs against.
pub fn bench_system() -> HeavyTopSystem {
    HeavyTopSystem::from_params(&HeavyTopParams::default()).unwrap()
}

/// Tilted spinning start, matching the default simulation setup.
pub fn bench_initial() -> (ReducedState, Rotation) {
    (
        ReducedState::new(Vec3::new(0.0, 1.0, 1.0), Vec3::new(0.0, 0.0, 1.0), 0.0),
        Rotation::identity(),
    )
}
