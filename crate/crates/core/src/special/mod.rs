//! Special functions needed by the mode solver and the closed-form potential.

mod bessel;
mod expint;

pub use bessel::{bessel_i, bessel_j, bessel_k};
pub use expint::{e1, ei};
