//! Laser-induced dipole-dipole interaction of atoms near a fiber Bragg
//! grating, and the mean-field rotor dynamics it produces.
//!
//! The modules follow the physical pipeline: [`fibermode`] solves the
//! guided HE11 mode, [`bandgap`] adds the grating band structure, [`liddi`]
//! builds the pair potential and the scattering-induced friction, and
//! [`hmf`] integrates the resulting Langevin dynamics.

pub mod bandgap;
pub mod constants;
pub mod error;
pub mod fibermode;
pub mod hmf;
pub mod liddi;
pub mod quad;
pub mod special;

pub use error::{Error, Result};
