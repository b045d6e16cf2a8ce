//! Fundamental HE11 mode of a step-index cylindrical fiber.
//!
//! Radii are handled internally in units of the core radius `a`, so the
//! interior and exterior transverse parameters `u = a sqrt(k^2 n1^2 - beta^2)`
//! and `q = a sqrt(beta^2 - k^2 n0^2)` are dimensionless and the exterior
//! fields are combinations of `K_m(q r / a)`.

use num_complex::Complex64;

use crate::constants::{C, SINGLE_MODE_V};
use crate::error::{ensure, Error, Result};
use crate::quad::{self, Tolerance};
use crate::special::{bessel_j, bessel_k};

/// Grated nanofiber geometry. Lengths in metres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberSpec {
    pub radius: f64,
    pub core_index: f64,
    pub clad_index: f64,
    /// Grating index modulation amplitude.
    pub delta_n: f64,
    /// Grating period.
    pub period: f64,
}

impl FiberSpec {
    pub fn new(
        radius: f64,
        core_index: f64,
        clad_index: f64,
        delta_n: f64,
        period: f64,
    ) -> Result<Self> {
        let spec = Self {
            radius,
            core_index,
            clad_index,
            delta_n,
            period,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Silica nanofiber in vacuum with a 396 nm grating, used throughout the examples.
    pub fn cs_nanofiber() -> Self {
        Self {
            radius: 250e-9,
            core_index: 1.452,
            clad_index: 1.0,
            delta_n: 0.02,
            period: 396e-9,
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.radius > 0.0, "radius", "must be positive")?;
        ensure(self.clad_index >= 1.0, "clad_index", "must be at least 1")?;
        ensure(
            self.core_index > self.clad_index,
            "core_index",
            "must exceed clad_index",
        )?;
        ensure(
            self.delta_n >= 0.0 && self.delta_n < 0.1 * self.core_index,
            "delta_n",
            "must be non-negative and small compared with core_index",
        )?;
        ensure(self.period > 0.0, "period", "must be positive")
    }

    /// Normalised frequency V = (omega a / c) sqrt(n1^2 - n0^2).
    pub fn v_number(&self, omega: f64) -> f64 {
        omega * self.radius / C * self.numerical_aperture()
    }

    fn numerical_aperture(&self) -> f64 {
        (self.core_index.powi(2) - self.clad_index.powi(2)).sqrt()
    }
}

/// Lowest higher-order-mode cutoff, 2.405 (c/a)/sqrt(n1^2 - n0^2).
pub fn cutoff_frequency(fiber: &FiberSpec) -> f64 {
    SINGLE_MODE_V * C / (fiber.radius * fiber.numerical_aperture())
}

/// Interior wavenumber and amplitude coefficients of a solved mode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoreParams {
    /// `u = a sqrt(k^2 n1^2 - beta^2)`.
    pub u: f64,
    /// Hybrid-mode ratio `s = (1/u^2 + 1/q^2) / (J1'/(u J1) + K1'/(q K1))`.
    pub s: f64,
    /// Scale of the longitudinal field `E_z = amplitude J1(u r / a)` in the core [V/m].
    pub amplitude: f64,
}

/// One solved HE11 dispersion point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModePoint {
    pub omega: f64,
    pub beta: f64,
    pub n_eff: f64,
    /// Exterior decay parameter, fields go as `K_m(q r / a)`.
    pub q: f64,
    pub core: CoreParams,
    /// Relative residual of the characteristic equation at the root.
    pub residual: f64,
    pub fiber: FiberSpec,
}

/// How the mode normalisation integral weights the field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Normalization {
    /// `A = int n^2 |E|^2 dA`.
    #[default]
    Energy,
    /// `A = int |E|^2 dA`.
    Unweighted,
}

/// Both sides of `(X + Y)(n1^2 X + n0^2 Y) = (beta/k)^2 (1/u^2 + 1/q^2)^2`
/// with `X = J1'(u)/(u J1(u))` and `Y = K1'(q)/(q K1(q))`.
fn characteristic_sides(fiber: &FiberSpec, u: f64, q: f64, n_eff: f64) -> (f64, f64) {
    let (x, y) = log_derivatives(u, q);
    let p = 1.0 / (u * u) + 1.0 / (q * q);
    let lhs = (x + y) * (fiber.core_index.powi(2) * x + fiber.clad_index.powi(2) * y);
    (lhs, (n_eff * p).powi(2))
}

fn log_derivatives(u: f64, q: f64) -> (f64, f64) {
    let (j0, j1) = (bessel_j(0, u), bessel_j(1, u));
    let (k0, k1) = (bessel_k(0, q), bessel_k(1, q));
    // J1' = J0 - J1/u, K1' = -K0 - K1/q
    let x = j0 / (u * j1) - 1.0 / (u * u);
    let y = -k0 / (q * k1) - 1.0 / (q * q);
    (x, y)
}

fn transverse_params(fiber: &FiberSpec, v_free: f64, n_eff: f64) -> (f64, f64) {
    // v_free = k a
    let u = v_free * (fiber.core_index.powi(2) - n_eff * n_eff).max(0.0).sqrt();
    let q = v_free * (n_eff * n_eff - fiber.clad_index.powi(2)).max(0.0).sqrt();
    (u, q)
}

/// HE branch of the quadratic in X; zero exactly on the HE11 dispersion curve.
fn he_branch(fiber: &FiberSpec, v_free: f64, n_eff: f64) -> f64 {
    let (u, q) = transverse_params(fiber, v_free, n_eff);
    let (n1s, n0s) = (fiber.core_index.powi(2), fiber.clad_index.powi(2));
    let (x, y) = log_derivatives(u, q);
    let p = 1.0 / (u * u) + 1.0 / (q * q);
    let r = (((n1s - n0s) / (2.0 * n1s) * y).powi(2) + (n_eff * p).powi(2) / n1s).sqrt();
    x + (n1s + n0s) / (2.0 * n1s) * y + r
}

/// Solves the HE11 eigenvalue equation at angular frequency `omega`.
pub fn solve_he11(fiber: &FiberSpec, omega: f64) -> Result<ModePoint> {
    fiber.validate()?;
    ensure(
        omega > 0.0 && omega.is_finite(),
        "omega",
        "must be positive",
    )?;
    let cutoff = cutoff_frequency(fiber);
    if omega >= cutoff {
        return Err(Error::MultimodeRegime { omega, cutoff });
    }
    let v_free = omega * fiber.radius / C;
    let (n0s, n1s) = (fiber.clad_index.powi(2), fiber.core_index.powi(2));
    // parametrise n_eff^2 = n0^2 + b (n1^2 - n0^2), b in (0, 1)
    let n_of = |b: f64| (n0s + b * (n1s - n0s)).sqrt();
    let g = |b: f64| he_branch(fiber, v_free, n_of(b));

    // the branch is positive next to b = 1; look for the last sign change below it
    let mut samples: Vec<f64> = (1..64).map(|i| i as f64 / 64.0).collect();
    samples.extend((1..=12).map(|k| 10f64.powi(-k - 1)));
    samples.sort_by(f64::total_cmp);
    let mut bracket = None;
    let mut hi = (1.0 - 1e-9, g(1.0 - 1e-9));
    for &b in samples.iter().rev() {
        let gb = g(b);
        if !gb.is_finite() {
            continue;
        }
        if gb.signum() != hi.1.signum() {
            bracket = Some(((b, gb), hi));
            break;
        }
        hi = (b, gb);
    }
    let ((mut b_lo, mut g_lo), (mut b_hi, mut g_hi)) =
        bracket.ok_or(Error::NoModeFound { omega })?;

    while b_hi - b_lo > 1e-9 * b_hi {
        let mid = 0.5 * (b_lo + b_hi);
        let gm = g(mid);
        if gm.signum() == g_lo.signum() {
            (b_lo, g_lo) = (mid, gm);
        } else {
            (b_hi, g_hi) = (mid, gm);
        }
    }
    // Illinois regula falsi polish
    let mut side = 0;
    for _ in 0..100 {
        let b = (b_lo * g_hi - b_hi * g_lo) / (g_hi - g_lo);
        let gb = g(b);
        if gb == 0.0 || (b_hi - b_lo).abs() < 4.0 * f64::EPSILON * b_hi {
            b_lo = b;
            b_hi = b;
            break;
        }
        if gb.signum() == g_lo.signum() {
            (b_lo, g_lo) = (b, gb);
            if side == -1 {
                g_hi *= 0.5;
            }
            side = -1;
        } else {
            (b_hi, g_hi) = (b, gb);
            if side == 1 {
                g_lo *= 0.5;
            }
            side = 1;
        }
    }
    let n_eff = n_of(0.5 * (b_lo + b_hi));
    let (u, q) = transverse_params(fiber, v_free, n_eff);
    let (lhs, rhs) = characteristic_sides(fiber, u, q, n_eff);
    let residual = ((lhs - rhs) / rhs).abs();
    if residual.is_nan()
        || residual > 1e-12
        || n_eff <= fiber.clad_index
        || n_eff >= fiber.core_index
    {
        return Err(Error::NoModeFound { omega });
    }
    let (x, y) = log_derivatives(u, q);
    let s = (1.0 / (u * u) + 1.0 / (q * q)) / (x + y);
    Ok(ModePoint {
        omega,
        beta: n_eff * omega / C,
        n_eff,
        q,
        core: CoreParams {
            u,
            s,
            amplitude: 1.0,
        },
        residual,
        fiber: *fiber,
    })
}

/// Group index `c dbeta/domega` from a central difference of the solver.
pub fn group_index(fiber: &FiberSpec, omega: f64) -> Result<f64> {
    let h = 1e-5 * omega;
    let up = solve_he11(fiber, omega + h)?;
    let down = solve_he11(fiber, omega - h)?;
    Ok(C * (up.beta - down.beta) / (2.0 * h))
}

/// Radial, azimuthal and axial amplitudes `(E_r, E_phi, E_z)` of the
/// circularly polarised HE11 mode, with the phase factors
/// `E_r = i e_r`, `E_phi = -e_phi` stripped.
fn circular_components(mode: &ModePoint, x: f64) -> (f64, f64, f64) {
    let CoreParams { u, s, amplitude } = mode.core;
    let q = mode.q;
    let ba = mode.beta * mode.fiber.radius;
    if x < 1.0 {
        let (j0, j1, j2) = (bessel_j(0, u * x), bessel_j(1, u * x), bessel_j(2, u * x));
        let c = amplitude * ba / (2.0 * u);
        (
            c * ((1.0 - s) * j0 - (1.0 + s) * j2),
            c * ((1.0 - s) * j0 + (1.0 + s) * j2),
            amplitude * j1,
        )
    } else {
        let wx = q * x;
        let (k0, k1, k2) = (bessel_k(0, wx), bessel_k(1, wx), bessel_k(2, wx));
        let join = amplitude * bessel_j(1, u) / bessel_k(1, q);
        let c = join * ba / (2.0 * q);
        (
            c * ((1.0 - s) * k0 + (1.0 + s) * k2),
            c * ((1.0 - s) * k0 - (1.0 + s) * k2),
            join * k1,
        )
    }
}

impl ModePoint {
    /// Same mode with the raw profile rescaled by `factor`.
    pub fn with_amplitude(mut self, factor: f64) -> Self {
        self.core.amplitude *= factor;
        self
    }

    /// Vacuum wavenumber times core radius.
    pub fn v_free(&self) -> f64 {
        self.omega * self.fiber.radius / C
    }

    /// Cylindrical components `(E_r, E_phi, E_z)` of the quasi-linearly
    /// x-polarised mode at radius `r` [m] and azimuth `phi`.
    pub fn field_cylindrical(&self, r: f64, phi: f64) -> [Complex64; 3] {
        let (er, ep, ez) = circular_components(self, r / self.fiber.radius);
        let (sin, cos) = phi.sin_cos();
        let root2 = std::f64::consts::SQRT_2;
        [
            Complex64::new(0.0, root2 * er * cos),
            Complex64::new(0.0, -root2 * ep * sin),
            Complex64::new(root2 * ez * cos, 0.0),
        ]
    }
}

/// x component `e_x . E` of the x-polarised HE11 profile at `(r, phi)`.
pub fn mode_profile_x(mode: &ModePoint, r: f64, phi: f64) -> Complex64 {
    let (er, ep, _) = circular_components(mode, r / mode.fiber.radius);
    let (sin, cos) = phi.sin_cos();
    Complex64::new(
        0.0,
        std::f64::consts::SQRT_2 * (er * cos * cos + ep * sin * sin),
    )
}

/// Cross-section integral of the (optionally index-weighted) intensity [V^2].
pub fn normalization(mode: &ModePoint, convention: Normalization) -> Result<f64> {
    let density = |x: f64| {
        let (er, ep, ez) = circular_components(mode, x);
        // azimuthal integral of |E_lin|^2 equals 2 pi (er^2 + ep^2 + ez^2)
        2.0 * std::f64::consts::PI * x * (er * er + ep * ep + ez * ez)
    };
    let tol = Tolerance::relative(1e-11);
    let inner = quad::integrate(density, 0.0, 1.0, &[], tol)?.value;
    let q = mode.q;
    let x_max = 1.0 + 27.0 / q;
    let outer = quad::integrate(density, 1.0, x_max, &[1.0 + 1.0 / q, 1.0 + 5.0 / q], tol)?.value;
    let (w_in, w_out) = match convention {
        Normalization::Energy => (mode.fiber.core_index.powi(2), mode.fiber.clad_index.powi(2)),
        Normalization::Unweighted => (1.0, 1.0),
    };
    let area = mode.fiber.radius.powi(2);
    let a = area * (w_in * inner + w_out * outer);
    if a > 0.0 && a.is_finite() {
        Ok(a)
    } else {
        Err(Error::QuadratureFailure {
            estimate: a,
            error: f64::NAN,
        })
    }
}
