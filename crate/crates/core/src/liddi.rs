//! Laser-induced dipole-dipole potential between atoms next to a grated
//! fiber, the free-space scattering that competes with it, and a direct
//! principal-value evaluation of the fiber-mediated exchange used to check
//! the closed form.

use std::f64::consts::PI;

use crate::bandgap::{in_gap, GratingBand, EDGE_GUARD};
use crate::constants::{C, EPSILON_0, HBAR};
use crate::error::{ensure, Error, Result};
use crate::fibermode::{
    cutoff_frequency, mode_profile_x, normalization, solve_he11, FiberSpec, ModePoint,
    Normalization,
};
use crate::quad::{self, Tolerance};
use crate::special::{e1, ei};

/// Driving laser, linearly polarised along x and propagating along the fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaserSpec {
    /// Vacuum wavelength [m].
    pub wavelength: f64,
    /// Intensity c eps0 E_L^2 [W/m^2].
    pub intensity: f64,
    /// Laser minus atomic angular frequency [rad/s].
    pub detuning: f64,
}

impl LaserSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(
            self.wavelength > 0.0 && self.wavelength.is_finite(),
            "wavelength",
            "must be positive",
        )?;
        ensure(
            self.intensity > 0.0 && self.intensity.is_finite(),
            "intensity",
            "must be positive",
        )?;
        ensure(self.detuning.is_finite(), "detuning", "must be finite")
    }

    pub fn omega(&self) -> f64 {
        2.0 * PI * C / self.wavelength
    }

    /// Field amplitude from I = c eps0 E^2 [V/m].
    pub fn field(&self) -> f64 {
        (self.intensity / (C * EPSILON_0)).sqrt()
    }

    /// Guided wavenumber `n_bar omega_L / c`.
    pub fn k_l(&self, n_bar: f64) -> f64 {
        n_bar * self.omega() / C
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomSpec {
    pub mass: f64,
    /// Transition dipole along the laser polarisation [C m].
    pub dipole: f64,
    pub transition_wavelength: f64,
    /// Free-space emission rate [1/s]; derived from the dipole when absent.
    pub linewidth: Option<f64>,
}

impl AtomSpec {
    pub fn validate(&self) -> Result<()> {
        ensure(self.mass > 0.0, "mass", "must be positive")?;
        ensure(self.dipole > 0.0, "dipole", "must be positive")?;
        ensure(
            self.transition_wavelength > 0.0,
            "transition_wavelength",
            "must be positive",
        )?;
        if let Some(g) = self.linewidth {
            ensure(g > 0.0 && g.is_finite(), "linewidth", "must be positive")?;
        }
        Ok(())
    }

    /// `d^2 omega^3 / (3 pi eps0 hbar c^3)` at angular frequency `omega`.
    pub fn dipole_linewidth(&self, omega: f64) -> f64 {
        self.dipole.powi(2) * omega.powi(3) / (3.0 * PI * EPSILON_0 * HBAR * C.powi(3))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rates {
    /// Rabi frequency E_L d / hbar [rad/s].
    pub rabi: f64,
    pub gamma_fs: f64,
    /// Free-space scattering rate |Omega|^2 Gamma_fs / (2 delta^2) [1/s].
    pub r_fs: f64,
}

/// Saturation parameter above which the perturbative rates are suspect.
pub const RABI_WARNING: f64 = 0.2;

pub fn rabi_and_rates(laser: &LaserSpec, atom: &AtomSpec) -> Result<Rates> {
    laser.validate()?;
    atom.validate()?;
    if laser.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    let rabi = laser.field() * atom.dipole / HBAR;
    if (rabi / laser.detuning).abs() > RABI_WARNING {
        log::warn!(
            "|Omega/delta| = {:.3} exceeds {RABI_WARNING}",
            (rabi / laser.detuning).abs()
        );
    }
    let gamma_fs = atom
        .linewidth
        .unwrap_or_else(|| atom.dipole_linewidth(laser.omega()));
    let r_fs = rabi * rabi / (2.0 * laser.detuning * laser.detuning) * gamma_fs;
    Ok(Rates {
        rabi,
        gamma_fs,
        r_fs,
    })
}

/// Transverse atom position; `phi` is measured from the polarisation axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transverse {
    pub r: f64,
    pub phi: f64,
}

impl Transverse {
    pub fn on_axis(r: f64) -> Self {
        Self { r, phi: 0.0 }
    }
}

/// `1 - omega_L/omega_u` for a laser inside the stop band.
pub fn edge_offset(band: &GratingBand, laser: &LaserSpec) -> Result<f64> {
    let omega = laser.omega();
    if !in_gap(band, omega) {
        return Err(Error::OutsideGap { omega });
    }
    let eps = 1.0 - omega / band.omega_u;
    if eps < EDGE_GUARD {
        return Err(Error::EdgeSingularity { omega });
    }
    if omega - band.omega_d < band.omega_u - omega {
        log::warn!("laser sits nearer the lower band edge; the upper-edge closed form is a poor approximation");
    }
    Ok(eps)
}

/// `Re[E_x(r1) E_x*(r2)] / A` for the mode at the laser frequency.
fn profile_product(
    mode: &ModePoint,
    r1: Transverse,
    r2: Transverse,
    convention: Normalization,
) -> Result<f64> {
    let a = normalization(mode, convention)?;
    let e1 = mode_profile_x(mode, r1.r, r1.phi);
    let e2 = mode_profile_x(mode, r2.r, r2.phi);
    Ok((e1 * e2.conj()).re / a)
}

/// Enhancement factor of the in-gap interaction over free-space scattering.
pub fn eta(
    mode: &ModePoint,
    band: &GratingBand,
    laser: &LaserSpec,
    r1: Transverse,
    r2: Transverse,
    convention: Normalization,
) -> Result<f64> {
    let eps = edge_offset(band, laser)?;
    let k0 = laser.omega() / C;
    Ok(band.coupling() / (2.0 * eps.sqrt()) * 3.0 * PI / (k0 * k0)
        * profile_product(mode, r1, r2, convention)?)
}

/// Enhancement factor of the ungrated fiber, whose constant DOS `n/c` turns
/// the exchange integral into `-pi sin(k_L |z|)`.
pub fn eta_no_grating(
    mode: &ModePoint,
    laser: &LaserSpec,
    r1: Transverse,
    r2: Transverse,
    convention: Normalization,
) -> Result<f64> {
    let k0 = laser.omega() / C;
    Ok(1.5 * PI * mode.n_eff / (k0 * k0) * profile_product(mode, r1, r2, convention)?)
}

/// Spatial factor of the ungrated potential, `-sin(k_L|z|) cos(k_L z)`.
pub fn free_profile(k_l: f64, z: f64) -> f64 {
    -(k_l * z.abs()).sin() * (k_l * z).cos()
}

/// Evanescent decay length of the in-gap interaction [m].
pub fn decay_length(band: &GratingBand, laser: &LaserSpec) -> Result<f64> {
    let eps = edge_offset(band, laser)?;
    Ok(1.0 / (eps.sqrt() * band.k_b * band.coupling()))
}

pub fn beat_length(k_l: f64, k_b: f64) -> f64 {
    2.0 * PI / (k_l - k_b).abs()
}

/// `exp(-t) Ei(t) - exp(t) Ei(-t)` for t > 0 without overflow.
fn ei_bracket(t: f64) -> f64 {
    if t > 40.0 {
        // odd terms of the two asymptotic series cancel
        let (mut term, mut sum, mut k) = (1.0, 1.0, 0.0);
        loop {
            let next = term * (k + 1.0) * (k + 2.0) / (t * t);
            if next > term || next < 1e-17 {
                break;
            }
            term = next;
            sum += term;
            k += 2.0;
        }
        return 2.0 / t * sum;
    }
    let up = ei(t).expect("t > 0") * (-t).exp();
    let down = e1(t).expect("t > 0") * t.exp();
    up + down
}

/// Closed-form spatial profile of the in-gap potential, even in `z`.
pub fn profile_f(k_l: f64, k_b: f64, l: f64, z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 0.5;
    }
    let t = z / l;
    let first = (k_b * z).cos() * 0.5 * (-t).exp();
    let second = (k_b * z).sin() / (2.0 * PI) * ei_bracket(t);
    (k_l * z).cos() * (first - second)
}

/// Magnitude of the Ei-bracket (second) term of `profile_f`, without the `cos(k_L z)` carrier.
pub fn profile_f_tail(k_b: f64, l: f64, z: f64) -> f64 {
    let z = z.abs();
    if z == 0.0 {
        return 0.0;
    }
    ((k_b * z).sin() / (2.0 * PI) * ei_bracket(z / l)).abs()
}

/// Pair potential `U(z) = -2 hbar eta R_fs F(z)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LiddiPotential {
    pub eta: f64,
    pub l: f64,
    pub k_l: f64,
    pub k_b: f64,
    pub r_fs: f64,
    /// `2 hbar eta R_fs` [J].
    pub prefactor: f64,
    pub lambda_l: f64,
}

impl LiddiPotential {
    pub fn new(eta: f64, l: f64, k_l: f64, k_b: f64, r_fs: f64, lambda_l: f64) -> Result<Self> {
        ensure(eta > 0.0 && eta.is_finite(), "eta", "must be positive")?;
        ensure(l > 0.0, "l", "must be positive")?;
        ensure(r_fs > 0.0, "r_fs", "must be positive")?;
        Ok(Self {
            eta,
            l,
            k_l,
            k_b,
            r_fs,
            prefactor: 2.0 * HBAR * eta * r_fs,
            lambda_l,
        })
    }

    /// Potential for atoms at a common radius on the polarisation axis.
    pub fn build(
        mode: &ModePoint,
        band: &GratingBand,
        laser: &LaserSpec,
        atom: &AtomSpec,
        r: f64,
        convention: Normalization,
    ) -> Result<Self> {
        let at = Transverse::on_axis(r);
        let eta = eta(mode, band, laser, at, at, convention)?;
        let l = decay_length(band, laser)?;
        let rates = rabi_and_rates(laser, atom)?;
        Self::new(
            eta,
            l,
            laser.k_l(band.n_bar),
            band.k_b,
            rates.r_fs,
            laser.wavelength,
        )
    }

    pub fn f(&self, z: f64) -> f64 {
        profile_f(self.k_l, self.k_b, self.l, z)
    }
}

pub fn potential_u(pot: &LiddiPotential, z: f64) -> f64 {
    -pot.prefactor * pot.f(z)
}

/// Which band edges contribute to the oracle integral.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Edges {
    #[default]
    Both,
    UpperOnly,
}

/// Treatment of `omega E_x E_x* / A` inside the exchange integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TransverseFactor {
    /// Frozen at the upper band edge.
    Frozen,
    /// Mode re-solved at every node within `window` (relative) of the gap;
    /// frozen outside it and above the single-mode cutoff.
    Resolved {
        fiber: FiberSpec,
        at: Transverse,
        convention: Normalization,
        window: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleOptions {
    /// Upper integration limit in units of omega_u.
    pub cutoff: f64,
    /// Second limit used to bound the truncation error.
    pub check_cutoff: f64,
    pub rel_tol: f64,
    /// Largest tolerated relative change between the two cutoffs.
    pub truncation_tol: f64,
    pub edges: Edges,
    pub transverse: TransverseFactor,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            cutoff: 10.0,
            check_cutoff: 20.0,
            rel_tol: 1e-8,
            truncation_tol: 1e-3,
            edges: Edges::Both,
            transverse: TransverseFactor::Frozen,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleValue {
    /// The principal-value integral `P int dw (dbeta/dw) cos(beta z) / (w - w_L) g(w)/g(w_u)` [1/m].
    pub integral: f64,
    /// Equivalent of the closed-form spatial factor, `cos(k_L z) Delta_12 / (eta Gamma_fs)`.
    pub f: f64,
    pub quad_error: f64,
    /// Change of the upper-band integral when the cutoff moves to
    /// `check_cutoff`, relative to its value at `z = 0`.
    pub truncation_change: f64,
}

impl OracleValue {
    /// Exchange frequency shift `Delta_12` [rad/s] for dipole `d` and the
    /// edge transverse factor `omega_u E_x E_x* / A` [1/(s m^2)].
    pub fn delta12(&self, dipole: f64, edge_factor: f64) -> f64 {
        dipole * dipole / (2.0 * PI * HBAR * EPSILON_0) * edge_factor * self.integral
    }
}

/// Direct evaluation of the grating-mediated exchange integral at separation `z`.
///
/// The pole at the laser frequency lies in the zero-DOS gap, so the integral
/// splits into two ordinary improper integrals over the pass bands. The upper
/// band uses `w = w_u (1 + x^2)` with `x = sqrt(eps) tan(theta)`, the lower
/// band `w = w_d (1 - y^2)`, which removes both the edge singularities and
/// the near-pole peak.
pub fn delta12_oracle(
    band: &GratingBand,
    laser: &LaserSpec,
    z: f64,
    opts: &OracleOptions,
) -> Result<OracleValue> {
    ensure(
        opts.cutoff > 1.0 && opts.check_cutoff > opts.cutoff,
        "cutoff",
        "need 1 < cutoff < check_cutoff",
    )?;
    let eps = edge_offset(band, laser)?;
    let omega_l = laser.omega();
    let z = z.abs();
    let kb = band.k_b;
    let sq = band.coupling();
    let (wu, wd) = (band.omega_u, band.omega_d);
    let g = (omega_l - wd) / wd;
    let root_eps = eps.sqrt();

    let ratio = transverse_ratio(band, &opts.transverse)?;
    let upper_core = |x: f64| (kb * (1.0 + sq * x) * z).cos() * ratio(wu * (1.0 + x * x));
    let upper_in_theta = |theta: f64| {
        let x = root_eps * theta.tan();
        upper_core(x) / root_eps
    };

    // abs tolerance scaled to the dominant near-edge contribution pi / (2 sqrt(eps))
    let scale = PI / (2.0 * root_eps);
    let tol = Tolerance {
        abs: opts.rel_tol * scale,
        rel: opts.rel_tol,
        max_intervals: 20_000,
    };
    let breaks = |theta_max: f64| -> Vec<f64> {
        // one breakpoint per oscillation of cos(k_B sqrt(n dn) x z) in x, capped
        let period = if z > 0.0 {
            2.0 * PI / (kb * sq * z)
        } else {
            f64::INFINITY
        };
        let x_max = root_eps * theta_max.tan();
        let count = ((x_max / period) as usize).min(2000);
        (1..=count)
            .map(|k| (k as f64 * period / root_eps).atan())
            .collect()
    };
    let upper = |cut: f64| -> Result<quad::Estimate> {
        let theta_max = ((cut - 1.0).sqrt() / root_eps).atan();
        quad::integrate(upper_in_theta, 0.0, theta_max, &breaks(theta_max), tol)
    };

    let main = upper(opts.cutoff)?;
    let check = upper(opts.check_cutoff)?;
    let (mut value, mut err) = (main.value, main.error);
    let truncation_change = ((check.value - main.value) / scale).abs();

    if opts.edges == Edges::Both {
        let lower =
            |y: f64| (kb * (1.0 - sq * y) * z).cos() / (y * y + g) * ratio(wd * (1.0 - y * y));
        let period = if z > 0.0 {
            2.0 * PI / (kb * sq * z)
        } else {
            f64::INFINITY
        };
        let count = ((1.0 / period) as usize).min(2000);
        let lb: Vec<f64> = (1..=count).map(|k| k as f64 * period).collect();
        let low = quad::integrate(lower, 0.0, 1.0, &lb, tol)?;
        value -= low.value;
        err += low.error;
    }
    if truncation_change > opts.truncation_tol {
        return Err(Error::QuadratureFailure {
            estimate: value,
            error: truncation_change,
        });
    }
    // P int dw DOS cos(beta z)/(w - w_L) = (sqrt(n dn)/c) [upper - lower]
    let integral = sq / C * value;
    let f = (laser.k_l(band.n_bar) * z).cos() * (wu / omega_l) * root_eps / PI * value;
    Ok(OracleValue {
        integral,
        f,
        quad_error: err * sq / C,
        truncation_change,
    })
}

type Ratio = Box<dyn Fn(f64) -> f64>;

fn transverse_ratio(band: &GratingBand, factor: &TransverseFactor) -> Result<Ratio> {
    match *factor {
        TransverseFactor::Frozen => Ok(Box::new(|_| 1.0)),
        TransverseFactor::Resolved {
            fiber,
            at,
            convention,
            window,
        } => {
            let weight = move |omega: f64| -> Result<f64> {
                let mode = solve_he11(&fiber, omega)?;
                let a = normalization(&mode, convention)?;
                Ok(omega * mode_profile_x(&mode, at.r, at.phi).norm_sqr() / a)
            };
            let edge = weight(band.omega_u)?;
            let lo = band.omega_d * (1.0 - window);
            let hi = (band.omega_u * (1.0 + window)).min(0.99 * cutoff_frequency(&fiber));
            Ok(Box::new(move |omega| {
                if omega < lo || omega > hi {
                    return 1.0;
                }
                weight(omega).map(|w| w / edge).unwrap_or(1.0)
            }))
        }
    }
}

/// Doppler friction and momentum diffusion from free-space scattering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrictionDiffusion {
    /// Damping rate [1/s].
    pub gamma: f64,
    /// Momentum diffusion [kg^2 m^2 / s^3].
    pub diffusion: f64,
}

pub fn friction_diffusion(
    laser: &LaserSpec,
    atom: &AtomSpec,
    r_fs: f64,
    k_l: f64,
) -> Result<FrictionDiffusion> {
    ensure(
        r_fs >= 0.0 && r_fs.is_finite(),
        "r_fs",
        "must be non-negative",
    )?;
    if laser.detuning == 0.0 {
        return Err(Error::ZeroDetuning);
    }
    if laser.detuning > 0.0 {
        return Err(Error::AntiDamping {
            detuning: laser.detuning,
        });
    }
    let gamma = -(HBAR * k_l * k_l / atom.mass) * (r_fs / laser.detuning);
    let diffusion = HBAR * HBAR * k_l * k_l * r_fs / 2.0;
    Ok(FrictionDiffusion { gamma, diffusion })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constants::{CS_D1_DIPOLE, CS_D1_LINEWIDTH_HZ, CS_D1_WAVELENGTH, CS_MASS};

    fn laser() -> LaserSpec {
        LaserSpec {
            wavelength: 894.594_69e-9,
            intensity: 1e4,
            detuning: -2.0 * PI * 0.65e9,
        }
    }

    fn atom() -> AtomSpec {
        AtomSpec {
            mass: CS_MASS,
            dipole: CS_D1_DIPOLE,
            transition_wavelength: CS_D1_WAVELENGTH,
            linewidth: Some(2.0 * PI * CS_D1_LINEWIDTH_HZ),
        }
    }

    fn band() -> GratingBand {
        GratingBand::from_upper_edge(&FiberSpec::cs_nanofiber(), 894.589_90e-9).unwrap()
    }

    #[test]
    fn rates_for_default_laser() {
        let r = rabi_and_rates(&laser(), &atom()).unwrap();
        assert!((r.rabi / laser().detuning.abs() - 0.08).abs() < 1e-3);
        // |Omega/delta|^2 Gamma / 2 with Omega/delta from the pinned dipole
        let expect = 0.5 * (r.rabi / laser().detuning).powi(2) * 2.0 * PI * 4.56e6;
        assert!((r.r_fs / expect - 1.0).abs() < 1e-14);
        assert!((r.r_fs / 9.2e4 - 1.0).abs() < 0.01, "{}", r.r_fs);
        let bright = LaserSpec {
            intensity: 4e4,
            ..laser()
        };
        let rb = rabi_and_rates(&bright, &atom()).unwrap();
        assert!((rb.rabi / r.rabi - 2.0).abs() < 1e-12);
        assert!((rb.r_fs / r.r_fs - 4.0).abs() < 1e-12);
        let zero = LaserSpec {
            detuning: 0.0,
            ..laser()
        };
        assert_eq!(rabi_and_rates(&zero, &atom()), Err(Error::ZeroDetuning));
    }

    #[test]
    fn derived_linewidth() {
        let a = AtomSpec {
            linewidth: None,
            ..atom()
        };
        let w = laser().omega();
        let expected = a.dipole.powi(2) * w.powi(3) / (3.0 * PI * EPSILON_0 * HBAR * C.powi(3));
        assert_eq!(rabi_and_rates(&laser(), &a).unwrap().gamma_fs, expected);
    }

    #[test]
    fn decay_length_and_beat() {
        let b = band();
        let l = decay_length(&b, &laser()).unwrap();
        assert!(
            (l / laser().wavelength / 403.369 - 1.0).abs() < 1e-4,
            "{}",
            l / laser().wavelength
        );
        let beat = beat_length(laser().k_l(b.n_bar), b.k_b) / laser().wavelength;
        assert!((beat / 100.94 - 1.0).abs() < 1e-3, "{beat}");
        let outside = LaserSpec {
            wavelength: 880e-9,
            ..laser()
        };
        assert!(matches!(
            decay_length(&b, &outside),
            Err(Error::OutsideGap { .. })
        ));
    }

    #[test]
    fn edge_offset_scalings() {
        // move the upper edge with the laser held fixed
        let b = band();
        let wl = laser().omega();
        let at = |eps: f64| GratingBand {
            omega_u: wl / (1.0 - eps),
            ..b
        };
        let l1 = decay_length(&at(4e-6), &laser()).unwrap();
        let l4 = decay_length(&at(1e-6), &laser()).unwrap();
        assert!((l4 / l1 - 2.0).abs() < 1e-9);
        let fiber = FiberSpec::cs_nanofiber();
        let mode = solve_he11(&fiber, wl).unwrap();
        let r = Transverse::on_axis(1.5 * fiber.radius);
        let eta_at = |eps| eta(&mode, &at(eps), &laser(), r, r, Normalization::Energy).unwrap();
        assert!((eta_at(1e-4) / eta_at(2e-4) - 2f64.sqrt()).abs() < 1e-10);
        let product = |eps| eta_at(eps) * decay_length(&at(eps), &laser()).unwrap();
        assert!((product(1e-4) / product(4e-4) - 4.0).abs() < 1e-10);
        assert!(decay_length(&at(1e-12), &laser()).unwrap() > 1e3 * l1);
    }

    #[test]
    fn eta_factorises_and_ignores_amplitude() {
        let fiber = FiberSpec::cs_nanofiber();
        let mode = solve_he11(&fiber, laser().omega()).unwrap();
        let b = band();
        let r1 = Transverse::on_axis(1.1 * fiber.radius);
        let r2 = Transverse::on_axis(2.0 * fiber.radius);
        let e = |m: &ModePoint, x, y| eta(m, &b, &laser(), x, y, Normalization::Energy).unwrap();
        let cross = e(&mode, r1, r2);
        assert!((cross * cross / (e(&mode, r1, r1) * e(&mode, r2, r2)) - 1.0).abs() < 1e-12);
        let scaled = mode.with_amplitude(7.5);
        assert!((e(&scaled, r1, r1) / e(&mode, r1, r1) - 1.0).abs() < 1e-12);
        let ratio = e(&mode, r2, r2)
            / eta_no_grating(&mode, &laser(), r2, r2, Normalization::Energy).unwrap();
        // sqrt(dn/n_band) / sqrt(eps) * n_band / n_eff
        let eps = edge_offset(&b, &laser()).unwrap();
        let expect = b.coupling() / (eps.sqrt() * mode.n_eff);
        assert!((ratio / expect - 1.0).abs() < 1e-12);
    }

    #[test]
    fn profile_limits_and_parity() {
        let b = band();
        let (kl, l) = (laser().k_l(b.n_bar), decay_length(&b, &laser()).unwrap());
        assert_eq!(profile_f(kl, b.k_b, l, 0.0), 0.5);
        assert!((profile_f(kl, b.k_b, l, 1e-14) - 0.5).abs() < 1e-9);
        for &z in &[0.3e-6, 7.1e-6, 120e-6, 0.9] {
            assert_eq!(profile_f(kl, b.k_b, l, z), profile_f(kl, b.k_b, l, -z));
        }
        assert!(profile_f(kl, b.k_b, l, 1e3 * l).abs() < 1e-3);
    }

    #[test]
    fn ei_bracket_branches_join() {
        // high-precision references either side of the switch
        for &(t, v) in &[
            (39.0, 5.135_002_621_491_845e-2),
            (41.0, 4.883_894_722_936_369e-2),
            (600.0, 3.333_351_852_469_187e-3),
        ] {
            assert!(((ei_bracket(t) - v) / v).abs() < 1e-12, "t={t}");
        }
    }

    #[test]
    fn tail_term_below_carrier_envelope_until_crossing() {
        // e^t [e^-t Ei(t) - e^t Ei(-t)] = pi at t = 0.8824124
        let b = band();
        let l = decay_length(&b, &laser()).unwrap();
        let bound = |z: f64| (ei_bracket(z / l) / (2.0 * PI)) / (0.5 * (-z / l).exp());
        assert!(bound(0.882_412_2 * l) < 1.0 && bound(0.882_412_6 * l) > 1.0);
        for i in 1..=400 {
            let z = 0.88 * l * i as f64 / 400.0;
            assert!(
                profile_f_tail(b.k_b, l, z) < 0.5 * (-z / l).exp(),
                "z/l = {}",
                z / l
            );
        }
    }

    #[test]
    fn potential_sign_and_origin() {
        let pot = LiddiPotential::new(2.0, 1e-4, 8e6, 7.9e6, 9e4, 894e-9).unwrap();
        assert!((potential_u(&pot, 0.0) + HBAR * 2.0 * 9e4).abs() < 1e-40);
        for &z in &[1e-7, 3e-6] {
            assert_eq!(potential_u(&pot, z), potential_u(&pot, -z));
            if pot.f(z) >= 0.0 {
                assert!(potential_u(&pot, z) <= 0.0);
            }
        }
    }

    #[test]
    fn oracle_at_origin_matches_closed_form_of_upper_edge() {
        let b = band();
        let opts = OracleOptions {
            edges: Edges::UpperOnly,
            ..OracleOptions::default()
        };
        let v = delta12_oracle(&b, &laser(), 0.0, &opts).unwrap();
        // int_0^X dx/(x^2+eps) = atan(X/sqrt eps)/sqrt eps; F -> 1/2 as X/sqrt(eps) -> inf
        let eps = edge_offset(&b, &laser()).unwrap();
        let expect = (3.0 / eps.sqrt()).atan() / PI * (b.omega_u / laser().omega());
        assert!((v.f / expect - 1.0).abs() < 1e-9, "{} {}", v.f, expect);
        assert!((v.f - 0.5).abs() < 1e-3);
    }

    #[test]
    fn oracle_lower_edge_enters_with_opposite_sign() {
        let b = band();
        let both = delta12_oracle(&b, &laser(), 0.0, &OracleOptions::default()).unwrap();
        let up = delta12_oracle(
            &b,
            &laser(),
            0.0,
            &OracleOptions {
                edges: Edges::UpperOnly,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(both.f < up.f);
        // lower contribution at z = 0 is atan(1/sqrt g)/sqrt g
        let g = (laser().omega() - b.omega_d) / b.omega_d;
        let eps = edge_offset(&b, &laser()).unwrap();
        let lower =
            (1.0 / g.sqrt()).atan() / g.sqrt() * eps.sqrt() / PI * (b.omega_u / laser().omega());
        assert!(((up.f - both.f) / lower - 1.0).abs() < 1e-9);
    }

    #[test]
    fn free_fiber_principal_value() {
        // P int cos(k_L z + a y)/y dy over |y| < W equals -2 sin(k_L z) Si(a W)
        let (kl, a, w) = (8.0e6, 3.8e-9, 2e16);
        for &z in &[0.37e-6, 2.2e-6, 9.1e-6] {
            let pv = |y: f64| ((kl * z + a * y * z).cos() - (kl * z - a * y * z).cos()) / y;
            let period = 2.0 * PI / (a * z);
            let bp: Vec<f64> = (1..((w / period) as usize).min(4000))
                .map(|k| k as f64 * period)
                .collect();
            let num = quad::integrate(
                pv,
                0.0,
                w,
                &bp,
                Tolerance {
                    abs: 1e-10,
                    rel: 1e-10,
                    max_intervals: 40_000,
                },
            )
            .unwrap()
            .value;
            let si = quad::integrate(
                |t: f64| if t == 0.0 { 1.0 } else { t.sin() / t },
                0.0,
                a * w * z,
                &[],
                Tolerance::relative(1e-12),
            )
            .unwrap()
            .value;
            assert!((num + 2.0 * (kl * z).sin() * si).abs() < 1e-7);
            // the window limit recovers the free profile sin -> -pi sin
            assert!((si - PI / 2.0).abs() < 0.1);
        }
    }

    #[test]
    fn friction_identity_and_sign() {
        let b = band();
        let rates = rabi_and_rates(&laser(), &atom()).unwrap();
        let kl = laser().k_l(b.n_bar);
        let fd = friction_diffusion(&laser(), &atom(), rates.r_fs, kl).unwrap();
        let ratio = fd.diffusion / (atom().mass * fd.gamma);
        assert!((ratio / (HBAR * laser().detuning.abs() / 2.0) - 1.0).abs() < 4.0 * f64::EPSILON);
        assert!((1.0 / fd.gamma - 1.46).abs() < 0.02, "{}", 1.0 / fd.gamma);
        let doubled = friction_diffusion(&laser(), &atom(), 2.0 * rates.r_fs, kl).unwrap();
        assert!((doubled.gamma / fd.gamma - 2.0).abs() < 1e-14);
        assert!((doubled.diffusion / fd.diffusion - 2.0).abs() < 1e-14);
        let blue = LaserSpec {
            detuning: 1e9,
            ..laser()
        };
        assert!(matches!(
            friction_diffusion(&blue, &atom(), rates.r_fs, kl),
            Err(Error::AntiDamping { .. })
        ));
    }
}
