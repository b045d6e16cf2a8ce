//! Photonic quantities shared by the commands.

use liddi_core::bandgap::{band_edges, GratingBand};
use liddi_core::fibermode::{solve_he11, ModePoint, Normalization};
use liddi_core::liddi::{rabi_and_rates, LiddiPotential, Rates};

use crate::config::ExperimentConfig;
use crate::HarnessError;

pub struct Setup {
    /// HE11 mode at the laser frequency.
    pub mode: ModePoint,
    /// Band placed with the solved effective index.
    pub solver_band: GratingBand,
    /// Band used downstream: pinned to the configured upper edge if given.
    pub band: GratingBand,
    pub rates: Rates,
}

impl Setup {
    pub fn new(cfg: &ExperimentConfig) -> Result<Self, HarnessError> {
        let mode = solve_he11(&cfg.fiber, cfg.laser.omega())?;
        let solver_band = band_edges(&cfg.fiber, mode.n_eff)?;
        let band = match cfg.upper_edge_wavelength {
            Some(l) => GratingBand::from_upper_edge(&cfg.fiber, l)?,
            None => solver_band,
        };
        let rates = rabi_and_rates(&cfg.laser, &cfg.atom)?;
        Ok(Self {
            mode,
            solver_band,
            band,
            rates,
        })
    }

    pub fn k_l(&self, cfg: &ExperimentConfig) -> f64 {
        cfg.laser.k_l(self.band.n_bar)
    }

    /// Potential for atoms at `r_over_a` fiber radii on the polarisation axis.
    pub fn potential(
        &self,
        cfg: &ExperimentConfig,
        r_over_a: f64,
        convention: Normalization,
    ) -> Result<LiddiPotential, HarnessError> {
        let r = r_over_a * cfg.fiber.radius;
        Ok(LiddiPotential::build(
            &self.mode, &self.band, &cfg.laser, &cfg.atom, r, convention,
        )?)
    }
}
