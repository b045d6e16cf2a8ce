//! Experiment configuration: TOML file, defaults from the shipped file,
//! validation with field paths, and a provenance echo for output headers.

use std::path::{Path, PathBuf};

use liddi_core::constants::AMU;
use liddi_core::fibermode::{FiberSpec, Normalization};
use liddi_core::liddi::{AtomSpec, LaserSpec};
use serde::{Deserialize, Serialize};

/// The shipped default configuration.
pub const DEFAULT_CONFIG: &str = include_str!("../config/default.toml");

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid `{path}`: {reason}")]
    Validation { path: String, reason: String },
}

fn invalid(path: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Validation {
        path: path.to_string(),
        reason: reason.into(),
    }
}

/// File layout. Every field is optional so that a partial file can be
/// completed from the shipped defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RawConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radii: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub normalization: Option<String>,
    #[serde(default)]
    pub fiber: RawFiber,
    #[serde(default)]
    pub laser: RawLaser,
    #[serde(default)]
    pub atom: RawAtom,
    #[serde(default)]
    pub potential: RawPotential,
    #[serde(default)]
    pub dispersion: RawDispersion,
    #[serde(default)]
    pub fig2: RawFig2,
    #[serde(default)]
    pub sim: RawSim,
    #[serde(default)]
    pub output: RawOutput,
}

macro_rules! section {
    ($name:ident { $($field:ident : $ty:ty),* $(,)? }) => {
        #[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
        pub struct $name {
            $(
                #[serde(skip_serializing_if = "Option::is_none")]
                pub $field: Option<$ty>,
            )*
        }

        impl $name {
            fn fill(&mut self, base: &Self) {
                $(
                    if self.$field.is_none() {
                        self.$field = base.$field.clone();
                    }
                )*
            }
        }
    };
}

section!(RawFiber {
    radius: f64,
    core_index: f64,
    clad_index: f64,
    delta_n: f64,
    period: f64,
    upper_edge_wavelength: f64
});
section!(RawLaser {
    wavelength: f64,
    intensity: f64,
    detuning_hz: f64
});
section!(RawAtom {
    mass_amu: f64,
    dipole: f64,
    transition_wavelength: f64,
    linewidth_hz: f64
});
section!(RawPotential {
    z_max: f64,
    grid: usize,
    oracle_cutoff: f64,
    oracle_check_cutoff: f64
});
section!(RawDispersion {
    span: f64,
    grid: usize
});
section!(RawFig2 {
    n_min: f64,
    n_max: f64,
    points: usize
});
section!(RawSim {
    seed: u64,
    n: Vec<usize>,
    realizations: usize,
    dt: f64,
    horizon: f64,
    sample_every: f64,
    archive_every: f64,
    energy: f64,
    m0: f64,
    sigma: f64,
    dwell: f64,
    smoothing: f64,
    max_energy_error: f64,
    max_halvings: u32,
    bootstrap: usize,
    gamma_t: f64,
    temperature: f64,
});
section!(RawOutput {
    dir: String,
    format: String
});

#[derive(Debug, Clone, PartialEq)]
pub struct PotentialConfig {
    /// Largest separation in laser wavelengths.
    pub z_max: f64,
    pub grid: usize,
    pub oracle_cutoff: f64,
    pub oracle_check_cutoff: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DispersionConfig {
    pub span: f64,
    pub grid: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Fig2Config {
    pub n_min: f64,
    pub n_max: f64,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub seed: u64,
    pub n: Vec<usize>,
    pub realizations: usize,
    pub dt: f64,
    pub horizon: f64,
    pub sample_every: f64,
    pub archive_every: f64,
    /// Energy per rotor in the `K + (1 - M^2)/2` convention.
    pub energy: f64,
    pub m0: f64,
    pub sigma: f64,
    pub dwell: f64,
    pub smoothing: f64,
    pub max_energy_error: f64,
    pub max_halvings: u32,
    pub bootstrap: usize,
    pub gamma_t: Option<f64>,
    pub temperature: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub format: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub fiber: FiberSpec,
    pub upper_edge_wavelength: Option<f64>,
    pub laser: LaserSpec,
    pub atom: AtomSpec,
    pub radii: Vec<f64>,
    pub normalization: Normalization,
    pub potential: PotentialConfig,
    pub dispersion: DispersionConfig,
    pub fig2: Fig2Config,
    pub sim: SimConfig,
    pub output: OutputConfig,
    /// The fully resolved file, echoed into every output.
    pub resolved: RawConfig,
}

impl ExperimentConfig {
    /// TOML text of the resolved configuration.
    pub fn echo(&self) -> String {
        toml::to_string(&self.resolved).expect("resolved config serialises")
    }
}

/// Parses TOML text, collecting keys that the schema does not know.
pub fn parse_raw(text: &str) -> Result<(RawConfig, Vec<String>), ConfigError> {
    let de = toml::de::Deserializer::parse(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut unknown = Vec::new();
    let raw: RawConfig = serde_ignored::deserialize(de, |path| unknown.push(path.to_string()))
        .map_err(|e| ConfigError::Parse(e.to_string()))?;
    Ok((raw, unknown))
}

fn defaults() -> RawConfig {
    parse_raw(DEFAULT_CONFIG).expect("shipped config parses").0
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub z_max: Option<f64>,
    pub grid: Option<usize>,
}

impl Overrides {
    fn apply(&self, raw: &mut RawConfig) {
        if let Some(seed) = self.seed {
            raw.sim.seed = Some(seed);
        }
        if let Some(out) = &self.out {
            raw.output.dir = Some(out.display().to_string());
        }
        if let Some(z) = self.z_max {
            raw.potential.z_max = Some(z);
        }
        if let Some(g) = self.grid {
            raw.potential.grid = Some(g);
        }
    }
}

/// Reads, completes and validates a configuration file.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    load_config_with(Some(path), &Overrides::default())
}

pub fn load_config_str(text: &str) -> Result<ExperimentConfig, ConfigError> {
    load_config_str_with(text, &Overrides::default())
}

/// Loads `path`, or the shipped defaults when it is `None`, then applies
/// the overrides before validation.
pub fn load_config_with(
    path: Option<&Path>,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    match path {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
                path: path.to_path_buf(),
                source,
            })?;
            load_config_str_with(&text, overrides)
        }
        None => load_config_str_with(DEFAULT_CONFIG, overrides),
    }
}

pub fn load_config_str_with(
    text: &str,
    overrides: &Overrides,
) -> Result<ExperimentConfig, ConfigError> {
    let (mut raw, unknown) = parse_raw(text)?;
    for key in unknown {
        log::warn!("ignoring unknown configuration key `{key}`");
    }
    overrides.apply(&mut raw);
    resolve(raw)
}

/// Fills missing fields from the shipped defaults and validates. The seed
/// is never defaulted.
pub fn resolve(mut raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    if raw.sim.seed.is_none() {
        return Err(invalid(
            "sim.seed",
            "a seed is required for reproducibility",
        ));
    }
    let base = defaults();
    raw.radii = raw.radii.or(base.radii);
    raw.normalization = raw.normalization.or(base.normalization);
    raw.fiber.fill(&base.fiber);
    raw.laser.fill(&base.laser);
    raw.atom.fill(&base.atom);
    raw.potential.fill(&base.potential);
    raw.dispersion.fill(&base.dispersion);
    raw.fig2.fill(&base.fig2);
    raw.sim.fill(&base.sim);
    raw.output.fill(&base.output);
    build(raw)
}

fn need<T: Clone>(value: &Option<T>, path: &str) -> Result<T, ConfigError> {
    value.clone().ok_or_else(|| invalid(path, "missing"))
}

fn positive(value: f64, path: &str) -> Result<f64, ConfigError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(invalid(path, "must be positive and finite"))
    }
}

fn build(raw: RawConfig) -> Result<ExperimentConfig, ConfigError> {
    let f = &raw.fiber;
    let fiber = FiberSpec {
        radius: need(&f.radius, "fiber.radius")?,
        core_index: need(&f.core_index, "fiber.core_index")?,
        clad_index: need(&f.clad_index, "fiber.clad_index")?,
        delta_n: need(&f.delta_n, "fiber.delta_n")?,
        period: need(&f.period, "fiber.period")?,
    };
    fiber.validate().map_err(|e| core_invalid("fiber", e))?;
    // zero selects the band placed with the solved index
    let upper_edge_wavelength = match f.upper_edge_wavelength {
        Some(0.0) => None,
        Some(l) => Some(positive(l, "fiber.upper_edge_wavelength")?),
        None => None,
    };

    let l = &raw.laser;
    let laser = LaserSpec {
        wavelength: need(&l.wavelength, "laser.wavelength")?,
        intensity: need(&l.intensity, "laser.intensity")?,
        detuning: 2.0 * std::f64::consts::PI * need(&l.detuning_hz, "laser.detuning_hz")?,
    };
    laser.validate().map_err(|e| core_invalid("laser", e))?;
    if laser.detuning == 0.0 {
        return Err(invalid("laser.detuning_hz", "must be non-zero"));
    }

    let a = &raw.atom;
    let atom = AtomSpec {
        mass: need(&a.mass_amu, "atom.mass_amu")? * AMU,
        dipole: need(&a.dipole, "atom.dipole")?,
        transition_wavelength: need(&a.transition_wavelength, "atom.transition_wavelength")?,
        linewidth: a.linewidth_hz.map(|g| 2.0 * std::f64::consts::PI * g),
    };
    atom.validate().map_err(|e| core_invalid("atom", e))?;

    let radii = need(&raw.radii, "radii")?;
    if radii.is_empty() || radii.iter().any(|r| !(*r > 1.0 && r.is_finite())) {
        return Err(invalid(
            "radii",
            "need at least one radius, each outside the fiber (> 1)",
        ));
    }
    let normalization = match need(&raw.normalization, "normalization")?.as_str() {
        "energy" => Normalization::Energy,
        "unweighted" => Normalization::Unweighted,
        other => {
            return Err(invalid(
                "normalization",
                format!("unknown convention `{other}`"),
            ))
        }
    };

    let p = &raw.potential;
    let potential = PotentialConfig {
        z_max: positive(need(&p.z_max, "potential.z_max")?, "potential.z_max")?,
        grid: need(&p.grid, "potential.grid")?,
        oracle_cutoff: need(&p.oracle_cutoff, "potential.oracle_cutoff")?,
        oracle_check_cutoff: need(&p.oracle_check_cutoff, "potential.oracle_check_cutoff")?,
    };
    if potential.grid < 2 {
        return Err(invalid("potential.grid", "need at least two points"));
    }
    if !(potential.oracle_cutoff > 1.0 && potential.oracle_check_cutoff > potential.oracle_cutoff) {
        return Err(invalid(
            "potential.oracle_check_cutoff",
            "need 1 < oracle_cutoff < oracle_check_cutoff",
        ));
    }

    let d = &raw.dispersion;
    let dispersion = DispersionConfig {
        span: positive(need(&d.span, "dispersion.span")?, "dispersion.span")?,
        grid: need(&d.grid, "dispersion.grid")?,
    };
    if dispersion.grid < 2 {
        return Err(invalid("dispersion.grid", "need at least two points"));
    }

    let g = &raw.fig2;
    let fig2 = Fig2Config {
        n_min: positive(need(&g.n_min, "fig2.n_min")?, "fig2.n_min")?,
        n_max: need(&g.n_max, "fig2.n_max")?,
        points: need(&g.points, "fig2.points")?,
    };
    if fig2.n_max.is_nan() || fig2.n_max <= fig2.n_min || fig2.n_min < 2.0 {
        return Err(invalid("fig2.n_max", "need 2 <= n_min < n_max"));
    }
    if fig2.points < 2 {
        return Err(invalid("fig2.points", "need at least two points"));
    }

    let s = &raw.sim;
    let sim = SimConfig {
        seed: need(&s.seed, "sim.seed")?,
        n: need(&s.n, "sim.n")?,
        realizations: need(&s.realizations, "sim.realizations")?,
        dt: positive(need(&s.dt, "sim.dt")?, "sim.dt")?,
        horizon: positive(need(&s.horizon, "sim.horizon")?, "sim.horizon")?,
        sample_every: positive(
            need(&s.sample_every, "sim.sample_every")?,
            "sim.sample_every",
        )?,
        archive_every: positive(
            need(&s.archive_every, "sim.archive_every")?,
            "sim.archive_every",
        )?,
        energy: need(&s.energy, "sim.energy")?,
        m0: need(&s.m0, "sim.m0")?,
        sigma: positive(need(&s.sigma, "sim.sigma")?, "sim.sigma")?,
        dwell: need(&s.dwell, "sim.dwell")?,
        smoothing: need(&s.smoothing, "sim.smoothing")?,
        max_energy_error: positive(
            need(&s.max_energy_error, "sim.max_energy_error")?,
            "sim.max_energy_error",
        )?,
        max_halvings: need(&s.max_halvings, "sim.max_halvings")?,
        bootstrap: need(&s.bootstrap, "sim.bootstrap")?,
        gamma_t: s.gamma_t,
        temperature: s.temperature,
    };
    if sim.n.is_empty() || sim.n.iter().any(|&n| n < 2) {
        return Err(invalid("sim.n", "need at least one size, each >= 2"));
    }
    if sim.realizations < 10 {
        return Err(invalid("sim.realizations", "need at least 10 per size"));
    }
    if !(0.0..=1.0).contains(&sim.m0) {
        return Err(invalid("sim.m0", "must lie in [0, 1]"));
    }
    if sim.sample_every < sim.dt {
        return Err(invalid("sim.sample_every", "must be at least dt"));
    }
    if sim.dwell < 0.0 || sim.smoothing < 0.0 {
        return Err(invalid(
            "sim.dwell",
            "dwell and smoothing must be non-negative",
        ));
    }
    if let Some(g) = sim.gamma_t {
        if g < 0.0 {
            return Err(invalid("sim.gamma_t", "must be non-negative"));
        }
    }
    if let Some(t) = sim.temperature {
        if t < 0.0 {
            return Err(invalid("sim.temperature", "must be non-negative"));
        }
    }

    let o = &raw.output;
    let output = OutputConfig {
        dir: PathBuf::from(need(&o.dir, "output.dir")?),
        format: need(&o.format, "output.format")?,
    };
    if output.format != "csv" {
        return Err(invalid("output.format", "only `csv` is supported"));
    }

    Ok(ExperimentConfig {
        fiber,
        upper_edge_wavelength,
        laser,
        atom,
        radii,
        normalization,
        potential,
        dispersion,
        fig2,
        sim,
        output,
        resolved: raw,
    })
}

fn core_invalid(section: &str, e: liddi_core::Error) -> ConfigError {
    match e {
        liddi_core::Error::InvalidParameter { name, reason } => {
            invalid(&format!("{section}.{name}"), reason)
        }
        other => invalid(section, other.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_defaults_resolve() {
        let cfg = load_config_str(DEFAULT_CONFIG).unwrap();
        assert_eq!(cfg.fiber, FiberSpec::cs_nanofiber());
        assert_eq!(cfg.radii, vec![2.0, 1.5, 1.1]);
        assert!((cfg.laser.detuning + 2.0 * std::f64::consts::PI * 0.65e9).abs() < 1e-3);
        assert_eq!(cfg.sim.gamma_t, None);
    }

    #[test]
    fn partial_file_takes_defaults() {
        let cfg = load_config_str("[sim]\nseed = 5\nn = [100]\n").unwrap();
        assert_eq!(cfg.sim.seed, 5);
        assert_eq!(cfg.sim.n, vec![100]);
        assert_eq!(cfg.fiber.radius, 250e-9);
    }

    #[test]
    fn validation_reports_field_path() {
        match load_config_str("[sim]\nseed = 1\n[fiber]\nradius = -1.0\n") {
            Err(ConfigError::Validation { path, .. }) => assert_eq!(path, "fiber.radius"),
            other => panic!("{other:?}"),
        }
        match load_config_str("[sim]\nseed = 1\nrealizations = 3\n") {
            Err(ConfigError::Validation { path, .. }) => assert_eq!(path, "sim.realizations"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            load_config_str("radii = ["),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn overrides_win_and_supply_the_seed() {
        let ov = Overrides {
            seed: Some(9),
            out: Some(PathBuf::from("elsewhere")),
            z_max: Some(4.0),
            grid: Some(7),
        };
        let cfg = load_config_str_with("[potential]\nz_max = 20.0\n", &ov).unwrap();
        assert_eq!(cfg.sim.seed, 9);
        assert_eq!(cfg.potential.z_max, 4.0);
        assert_eq!(cfg.potential.grid, 7);
        assert_eq!(cfg.output.dir, PathBuf::from("elsewhere"));
        assert_eq!(cfg.resolved.sim.seed, Some(9));
        assert!(matches!(
            load_config_str("[fiber]\n"),
            Err(ConfigError::Validation { .. })
        ));
    }

    #[test]
    fn unknown_keys_are_collected() {
        let (_, unknown) =
            parse_raw("colour = 3\n[fiber]\nshape = \"round\"\n[sim]\nseed = 1\n").unwrap();
        assert_eq!(
            unknown,
            vec!["colour".to_string(), "fiber.shape".to_string()]
        );
        assert!(load_config_str("colour = 3\n[sim]\nseed = 1\n").is_ok());
    }
}
