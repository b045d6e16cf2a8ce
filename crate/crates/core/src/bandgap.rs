//! Bragg-grating band structure near the first stop band: band edges,
//! two-branch square-root dispersion and the edge-divergent density of states.

use crate::constants::C;
use crate::error::{ensure, Error, Result};
use crate::fibermode::FiberSpec;

/// Relative distance from an edge below which the DOS is treated as singular.
pub const EDGE_GUARD: f64 = 1e-15;

/// Stop band of a uniform grating on a single-mode fiber.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GratingBand {
    /// Bragg wavenumber pi / period [1/m].
    pub k_b: f64,
    pub omega_u: f64,
    pub omega_d: f64,
    /// Background effective index of the ungrated mode.
    pub n_bar: f64,
    pub delta_n: f64,
}

/// Edges `omega_{u/d} = (c/n) k_B (1 +- dn/(2n))` for background index `n_bar`.
pub fn band_edges(fiber: &FiberSpec, n_bar: f64) -> Result<GratingBand> {
    fiber.validate()?;
    ensure(
        n_bar > 0.0 && n_bar.is_finite(),
        "n_bar",
        "must be positive",
    )?;
    ensure(
        fiber.delta_n < 2.0 * n_bar,
        "delta_n",
        "must be small compared with n_bar",
    )?;
    let k_b = std::f64::consts::PI / fiber.period;
    let centre = C * k_b / n_bar;
    let half = 0.5 * fiber.delta_n / n_bar;
    Ok(GratingBand {
        k_b,
        omega_u: centre * (1.0 + half),
        omega_d: centre * (1.0 - half),
        n_bar,
        delta_n: fiber.delta_n,
    })
}

impl GratingBand {
    /// Band whose upper edge sits at vacuum wavelength `lambda_u`; the
    /// background index is the positive root of the edge formula.
    pub fn from_upper_edge(fiber: &FiberSpec, lambda_u: f64) -> Result<Self> {
        ensure(
            lambda_u > 0.0 && lambda_u.is_finite(),
            "upper_edge_wavelength",
            "must be positive",
        )?;
        let (l, p, dn) = (lambda_u, fiber.period, fiber.delta_n);
        let n_bar = (l + (l * l + 4.0 * p * l * dn).sqrt()) / (4.0 * p);
        band_edges(fiber, n_bar)
    }

    pub fn lambda_u(&self) -> f64 {
        2.0 * std::f64::consts::PI * C / self.omega_u
    }

    pub fn lambda_d(&self) -> f64 {
        2.0 * std::f64::consts::PI * C / self.omega_d
    }

    /// `sqrt(n_bar delta_n)`, the grating coupling strength.
    pub fn coupling(&self) -> f64 {
        (self.n_bar * self.delta_n).sqrt()
    }

    /// `(beta/k_B - 1)^2 (2 n_bar / delta_n)^2`; the square-root dispersion
    /// is only accurate while this is small.
    pub fn validity_ratio(&self, beta: f64) -> f64 {
        ((beta / self.k_b - 1.0) * 2.0 * self.n_bar / self.delta_n).powi(2)
    }
}

/// Strictly inside the stop band; the edges themselves count as outside.
pub fn in_gap(band: &GratingBand, omega: f64) -> bool {
    band.omega_d < omega && omega < band.omega_u
}

/// Grating dispersion `beta(omega)` on either pass band.
pub fn fbg_beta(band: &GratingBand, omega: f64) -> Result<f64> {
    if in_gap(band, omega) {
        return Err(Error::InsideGap { omega });
    }
    let scale = band.k_b * band.coupling();
    if omega >= band.omega_u {
        Ok(band.k_b + scale * (omega / band.omega_u - 1.0).sqrt())
    } else {
        Ok(band.k_b - scale * (1.0 - omega / band.omega_d).sqrt())
    }
}

/// Density of states `dbeta/domega` on either pass band.
pub fn fbg_dos(band: &GratingBand, omega: f64) -> Result<f64> {
    if in_gap(band, omega) {
        return Err(Error::InsideGap { omega });
    }
    let offset = if omega >= band.omega_u {
        omega / band.omega_u - 1.0
    } else {
        1.0 - omega / band.omega_d
    };
    if offset < EDGE_GUARD {
        return Err(Error::EdgeSingularity { omega });
    }
    Ok(band.coupling() / (2.0 * C) / offset.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn band() -> GratingBand {
        band_edges(&FiberSpec::cs_nanofiber(), 1.14).unwrap()
    }

    #[test]
    fn upper_edge_wavelength_for_rounded_index() {
        let b = band();
        assert!(
            (b.lambda_u() / 895.0e-9 - 1.0).abs() < 1e-3,
            "{}",
            b.lambda_u()
        );
        let half = 0.5 * b.delta_n / b.n_bar;
        assert!((b.omega_u / b.omega_d - (1.0 + half) / (1.0 - half)).abs() < 1e-14);
        let width = C * b.k_b * b.delta_n / (b.n_bar * b.n_bar);
        assert!(((b.omega_u - b.omega_d) / width - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pinned_upper_edge_round_trips() {
        let fiber = FiberSpec::cs_nanofiber();
        let b = GratingBand::from_upper_edge(&fiber, 894.589_90e-9).unwrap();
        assert!((b.lambda_u() / 894.589_90e-9 - 1.0).abs() < 1e-14);
        assert!((b.n_bar - 1.139_445_7).abs() < 1e-6, "{}", b.n_bar);
    }

    #[test]
    fn closed_gap() {
        let fiber = FiberSpec {
            delta_n: 0.0,
            ..FiberSpec::cs_nanofiber()
        };
        let b = band_edges(&fiber, 1.14).unwrap();
        assert_eq!(b.omega_u, b.omega_d);
        assert!(!in_gap(&b, b.omega_u));
    }

    #[test]
    fn edge_values_and_gap_membership() {
        let b = band();
        assert_eq!(fbg_beta(&b, b.omega_u).unwrap(), b.k_b);
        assert_eq!(fbg_beta(&b, b.omega_d).unwrap(), b.k_b);
        let mid = 0.5 * (b.omega_u + b.omega_d);
        assert!(in_gap(&b, mid));
        assert!(!in_gap(&b, 1.1 * b.omega_u));
        assert!(!in_gap(&b, b.omega_u));
        assert!(matches!(fbg_beta(&b, mid), Err(Error::InsideGap { .. })));
        assert!(matches!(fbg_dos(&b, mid), Err(Error::InsideGap { .. })));
        assert!(matches!(
            fbg_dos(&b, b.omega_u),
            Err(Error::EdgeSingularity { .. })
        ));
    }

    #[test]
    fn square_root_scalings() {
        let b = band();
        let eps = 1e-4;
        let d1 = fbg_beta(&b, b.omega_u * (1.0 + eps)).unwrap() - b.k_b;
        let d4 = fbg_beta(&b, b.omega_u * (1.0 + 4.0 * eps)).unwrap() - b.k_b;
        assert!((d4 / d1 - 2.0).abs() < 1e-9);
        let r = fbg_dos(&b, 1.01 * b.omega_u).unwrap() / fbg_dos(&b, 1.04 * b.omega_u).unwrap();
        assert!((r - 2.0).abs() < 1e-12);
        let mut last: Option<f64> = None;
        for k in 4..12 {
            let x = 10f64.powi(-k);
            let c = fbg_dos(&b, b.omega_u * (1.0 + x)).unwrap() * x.sqrt();
            if let Some(prev) = last {
                assert!(((c - prev) / c).abs() < 1e-6);
            }
            last = Some(c);
        }
    }

    #[test]
    fn dos_tracks_derivative_of_dispersion() {
        // the two branches are normalised differently: d(beta)/d(omega) carries
        // k_B / omega_edge where the DOS carries 1/c, a constant factor of about n_bar
        let b = band();
        for &omega in &[
            1.001 * b.omega_u,
            1.2 * b.omega_u,
            0.999 * b.omega_d,
            0.6 * b.omega_d,
        ] {
            let edge = if omega > b.omega_u {
                b.omega_u
            } else {
                b.omega_d
            };
            let h = 1e-8 * omega;
            let fd =
                (fbg_beta(&b, omega + h).unwrap() - fbg_beta(&b, omega - h).unwrap()) / (2.0 * h);
            let dos = fbg_dos(&b, omega).unwrap();
            let factor = C * b.k_b / edge;
            assert!(
                ((fd / factor - dos) / dos).abs() < 1e-6,
                "omega={omega:e}: {fd:e} {dos:e}"
            );
            assert!((factor / b.n_bar - 1.0).abs() < b.delta_n / b.n_bar);
            assert!(dos > 0.0);
        }
    }

    #[test]
    fn edges_symmetric_about_bragg_frequency() {
        let b = band();
        let centre = C * b.k_b / b.n_bar;
        assert!(((b.omega_u - centre) - (centre - b.omega_d)).abs() < 1e-12 * centre);
    }
}
