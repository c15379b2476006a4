//! Event-driven dynamics for inelastic hard spheres with emission (IHSE).
//!
//! Identical unit-diameter spheres move freely in `R^d` and collide pairwise.
//! A collision whose squared relative speed exceeds `4 * epsilon0` radiates a
//! fixed kinetic-energy quantum `epsilon0`; slower collisions are elastic.
//!
//! The crate is organised as a small laboratory around that model:
//!
//! - [`system`]: configurations, phase-space validation, free transport.
//! - [`collision`]: discriminants, pair collision times, first collision and
//!   the analytic gradients of the collision time.
//! - [`scattering`]: the elastic and emission collision laws and their
//!   centre-of-mass polar/spherical forms.
//! - [`tct`]: single-collision (transport-collision-transport) flow, domain
//!   classification and the analytic flow Jacobian determinant.
//! - [`jacobian_lab`]: finite-difference oracles checking every determinant
//!   claim independently of the closed forms.
//! - [`simulator`]: multi-collision event loop with energy ledger and
//!   pathology detection.
//! - [`measure_mc`]: Monte Carlo measure of near-multiple-collision and
//!   near-critical sets, and composed volume evolution.
//! - [`cli`]: the `ihse` command-line frontend.

pub mod cli;
pub mod collision;
mod error;
pub mod io;
pub mod jacobian_lab;
pub mod measure_mc;
pub mod sampling;
pub mod scattering;
pub mod simulator;
pub mod system;
pub mod tct;
pub(crate) mod vecops;

pub use error::{Error, Result};
pub use system::{Configuration, DomainStatus, ModelParams, PairIndex, Tolerances};
