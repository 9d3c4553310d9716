//! Leader-guided crowd evacuation toolkit.
//!
//! Followers obey a second-order model with self-propulsion, metrical
//! repulsion and topological alignment; leaders are first-order agents that
//! only feel repulsion plus an external control. The crate provides
//!
//! * [`micro`]: the agent-based model and its forward Euler integrator,
//! * [`meso`]: the mean-field Monte-Carlo (random batch) approximation of the
//!   follower density, plus kernel density reconstruction,
//! * [`control`]: go-to-target and piecewise-constant leader controls,
//! * [`objective`]: evacuation functionals and congestion diagnostics,
//! * [`optimize`]: a randomized compass search over leader control points,
//! * [`scenario`] and [`output`]: scenario files and result files for the CLI.

// `!(x > 0.0)` rejects NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control;
pub mod env;
pub mod error;
pub mod meso;
pub mod micro;
pub mod objective;
pub mod optimize;
pub mod output;
pub mod rng;
pub mod scenario;
pub mod sim;

pub use error::{Error, Result};

/// Planar vector used for positions and velocities.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Build a [`Vec2`] from components.
#[inline]
pub fn vec2(x: f64, y: f64) -> Vec2 {
    Vec2::new(x, y)
}

/// Unit vector along `v`, or zero for the zero vector.
#[inline]
pub(crate) fn unit_or_zero(v: Vec2) -> Vec2 {
    let n = v.norm();
    if n > 0.0 {
        v / n
    } else {
        Vec2::zeros()
    }
}
