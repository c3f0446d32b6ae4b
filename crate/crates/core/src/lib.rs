//! Structure-preserving integrators for simple thermodynamic rigid-body
//! systems on the rotation group.
//!
//! The crate provides:
//!
//! - [`so3`]: the algebra kernel (hat/vee, adjoint actions, Cayley map and its
//!   trivialized tangents).
//! - [`systems`]: the reduced thermodynamic system abstraction and two
//!   concrete models (heavy top in Stokes flow, double-bracket dissipative
//!   rigid body).
//! - [`continuous`]: continuous reduced dynamics, Runge-Kutta reference
//!   steppers, and continuous diagnostics.
//! - [`integrator`]: the implicit variational integrator on the Lie algebra
//!   (closed-form heavy-top residual and a generic difference-map form) with a
//!   dense Newton solver.
//! - [`diagnostics`]: trajectory records, drift statistics, identity
//!   residuals, convergence-order estimation.
//! - [`sim`]: trajectory orchestration shared by the CLI and the test suites.
//! - [`checks`]: seeded, deterministic invariant suites.

pub mod checks;
pub mod continuous;
pub mod diagnostics;
pub mod integrator;
pub mod sim;
pub mod so3;
pub mod systems;

pub use so3::{Mat3, Rotation, Vec3};
pub use systems::ReducedState;
