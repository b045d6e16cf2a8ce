//! Physical constants (SI) and the cesium D1 data used by the default setup.
//!
//! Fundamental constants are CODATA 2018 exact or recommended values.

/// Reduced Planck constant [J s].
pub const HBAR: f64 = 1.054_571_817e-34;
/// Speed of light in vacuum [m/s].
pub const C: f64 = 299_792_458.0;
/// Vacuum permittivity [F/m].
pub const EPSILON_0: f64 = 8.854_187_812_8e-12;
/// Atomic mass unit [kg].
pub const AMU: f64 = 1.660_539_066_60e-27;
/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Cs-133 atomic mass [kg] (132.905 451 961 u).
pub const CS_MASS: f64 = 132.905_451_961 * AMU;
/// Cs D1 natural linewidth Gamma/2pi [Hz].
pub const CS_D1_LINEWIDTH_HZ: f64 = 4.56e6;
/// Cs D1 vacuum wavelength [m].
pub const CS_D1_WAVELENGTH: f64 = 894.592_959_86e-9;
/// Effective dipole moment of the driven Cs D1 Delta m = 0 transition [C m].
///
/// Chosen so that I = 1e4 W/m^2 at a detuning of -2pi x 0.65 GHz gives
/// Omega/delta = 0.08.
pub const CS_D1_DIPOLE: f64 = 1.775e-29;

/// First zero of J0, setting the LP11 cutoff.
pub const SINGLE_MODE_V: f64 = 2.405;
