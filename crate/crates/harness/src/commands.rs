//! The five table-producing commands. Each returns its table; `run` writes
//! it to `<output.dir>/<command>.csv`.

use std::f64::consts::PI;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::mpsc;

use liddi_core::bandgap::{fbg_beta, fbg_dos, in_gap};
use liddi_core::constants::C;
use liddi_core::fibermode::{solve_he11, Normalization};
use liddi_core::hmf::{
    equilibrium_magnetization, fit_power_law, init_waterbag, microcanonical_equilibrium, reduce,
    reduced_from_literature, relaxation_time, run_relaxation, trajectory_rng, EnsembleEstimate,
    PowerLaw, ReducedParams, RelaxationCriterion, RunRecord, RunSettings,
};
use liddi_core::liddi::{
    beat_length, delta12_oracle, edge_offset, eta, eta_no_grating, friction_diffusion, potential_u,
    Edges, OracleOptions, Transverse,
};
use rand::Rng;
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::output::{write_preamble, write_table, Table};
use crate::setup::Setup;
use crate::HarnessError;

/// Exponent of the literature relaxation law used for the Fig. 2 curves.
pub const LITERATURE_EXPONENT: f64 = 1.7;
/// Prefactor of `tau_muc = tau N^1.7 / 9`.
pub const LITERATURE_PREFACTOR: f64 = 1.0 / 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Dispersion,
    EtaTable,
    Potential,
    Fig2,
    Scaling,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Dispersion => "dispersion",
            Command::EtaTable => "eta-table",
            Command::Potential => "potential",
            Command::Fig2 => "fig2",
            Command::Scaling => "scaling",
        }
    }
}

/// Runs `command` and writes its CSV; returns the path written.
pub fn run(
    command: Command,
    cfg: &ExperimentConfig,
    workers: Option<usize>,
) -> Result<PathBuf, HarnessError> {
    fs::create_dir_all(&cfg.output.dir)?;
    let table = match command {
        Command::Dispersion => dispersion(cfg)?,
        Command::EtaTable => eta_table(cfg)?,
        Command::Potential => potential(cfg)?,
        Command::Fig2 => fig2(cfg)?,
        Command::Scaling => scaling(cfg, workers, Some(&cfg.output.dir))?.table,
    };
    let path = cfg.output.dir.join(format!("{}.csv", command.name()));
    write_table(&path, command.name(), cfg, &table)?;
    Ok(path)
}

fn fmt_r(r: f64) -> String {
    format!("{r}")
}

/// Columns: omega, wavelength, n_eff, beta_fiber, beta_grating, dos_grating, in_gap.
/// Grating columns are NaN inside the stop band.
pub fn dispersion(cfg: &ExperimentConfig) -> Result<Table, HarnessError> {
    let setup = Setup::new(cfg)?;
    let omega_l = cfg.laser.omega();
    let span = cfg.dispersion.span;
    let mut t = Table::new(&[
        "omega",
        "wavelength",
        "n_eff",
        "beta_fiber",
        "beta_grating",
        "dos_grating",
        "in_gap",
    ]);
    let (sb, b) = (setup.solver_band, setup.band);
    t.meta_num("n_bar_solver", setup.mode.n_eff);
    t.meta_num("lambda_u_solver", sb.lambda_u());
    t.meta_num("lambda_d_solver", sb.lambda_d());
    t.meta_num("gap_width_solver", sb.lambda_d() - sb.lambda_u());
    t.meta_num("n_bar_band", b.n_bar);
    t.meta_num("lambda_u_band", b.lambda_u());
    t.meta_num("lambda_d_band", b.lambda_d());
    t.meta_num("gap_width_band", b.lambda_d() - b.lambda_u());
    t.meta("laser_in_gap", in_gap(&b, omega_l));
    let n = cfg.dispersion.grid;
    for k in 0..n {
        let omega = omega_l * (1.0 - span + 2.0 * span * k as f64 / (n - 1) as f64);
        let mode = solve_he11(&cfg.fiber, omega)?;
        let inside = in_gap(&b, omega);
        let (bg, dos) = if inside {
            (f64::NAN, f64::NAN)
        } else {
            (
                fbg_beta(&b, omega)?,
                fbg_dos(&b, omega).unwrap_or(f64::INFINITY),
            )
        };
        t.push(vec![
            omega,
            2.0 * PI * C / omega,
            mode.n_eff,
            mode.beta,
            bg,
            dos,
            f64::from(u8::from(inside)),
        ]);
    }
    Ok(t)
}

/// Columns: r_over_a, then eta_free, eta_fbg and their ratio for the
/// index-weighted and the unweighted normalization.
pub fn eta_table(cfg: &ExperimentConfig) -> Result<Table, HarnessError> {
    let setup = Setup::new(cfg)?;
    let mut t = Table::new(&[
        "r_over_a",
        "eta_free_energy",
        "eta_fbg_energy",
        "ratio_energy",
        "eta_free_unweighted",
        "eta_fbg_unweighted",
        "ratio_unweighted",
    ]);
    t.meta_num("edge_offset", edge_offset(&setup.band, &cfg.laser)?);
    t.meta_num("n_bar_band", setup.band.n_bar);
    for &r in &cfg.radii {
        let at = Transverse::on_axis(r * cfg.fiber.radius);
        let mut row = vec![r];
        for conv in [Normalization::Energy, Normalization::Unweighted] {
            let free = eta_no_grating(&setup.mode, &cfg.laser, at, at, conv)?;
            let fbg = eta(&setup.mode, &setup.band, &cfg.laser, at, at, conv)?;
            row.extend([free, fbg, fbg / free]);
        }
        t.push(row);
    }
    Ok(t)
}

/// Columns: z_over_lambda, f_closed, f_oracle, f_oracle_upper, half_cos2,
/// then the potential U [J] for every configured radius.
pub fn potential(cfg: &ExperimentConfig) -> Result<Table, HarnessError> {
    let setup = Setup::new(cfg)?;
    let lambda = cfg.laser.wavelength;
    let pots = cfg
        .radii
        .iter()
        .map(|&r| setup.potential(cfg, r, cfg.normalization))
        .collect::<Result<Vec<_>, _>>()?;
    let first = pots[0];
    let k_l = first.k_l;
    let mut columns = vec![
        "z_over_lambda",
        "f_closed",
        "f_oracle",
        "f_oracle_upper",
        "half_cos2",
    ]
    .into_iter()
    .map(String::from)
    .collect::<Vec<_>>();
    columns.extend(cfg.radii.iter().map(|r| format!("u_r{}", fmt_r(*r))));
    let mut t = Table {
        columns,
        rows: Vec::new(),
        meta: Vec::new(),
    };

    let both = OracleOptions {
        cutoff: cfg.potential.oracle_cutoff,
        check_cutoff: cfg.potential.oracle_check_cutoff,
        ..OracleOptions::default()
    };
    let upper = OracleOptions {
        edges: Edges::UpperOnly,
        ..both
    };
    let n = cfg.potential.grid;
    let (mut dev_cos, mut dev_oracle, mut dev_upper) = (0.0f64, 0.0f64, 0.0f64);
    for k in 0..n {
        let zl = cfg.potential.z_max * k as f64 / (n - 1) as f64;
        let z = zl * lambda;
        let f = first.f(z);
        let fo = delta12_oracle(&setup.band, &cfg.laser, z, &both)?.f;
        let fu = delta12_oracle(&setup.band, &cfg.laser, z, &upper)?.f;
        let half = 0.5 * (k_l * z).cos().powi(2);
        if zl <= 8.0 {
            dev_cos = dev_cos.max((f - half).abs());
        }
        if (0.1..=50.0).contains(&zl) {
            dev_oracle = dev_oracle.max((f - fo).abs() / 0.5);
            dev_upper = dev_upper.max((f - fu).abs() / 0.5);
        }
        let mut row = vec![zl, f, fo, fu, half];
        row.extend(pots.iter().map(|p| potential_u(p, z)));
        t.push(row);
    }
    t.meta_num("l_over_lambda", first.l / lambda);
    t.meta_num("beat_over_lambda", beat_length(k_l, first.k_b) / lambda);
    t.meta_num("max_dev_half_cos2_z_le_8", dev_cos);
    t.meta_num("max_dev_oracle_rel_peak", dev_oracle);
    t.meta_num("max_dev_oracle_upper_rel_peak", dev_upper);
    for (r, p) in cfg.radii.iter().zip(&pots) {
        t.meta_num(&format!("eta_r{}", fmt_r(*r)), p.eta);
        t.meta_num(&format!("prefactor_r{}", fmt_r(*r)), p.prefactor);
    }
    Ok(t)
}

/// Columns: r_over_a, n, tau_unit, tau_muc, tau_c, temperature (all times in s).
pub fn fig2(cfg: &ExperimentConfig) -> Result<Table, HarnessError> {
    let setup = Setup::new(cfg)?;
    let bath = friction_diffusion(&cfg.laser, &cfg.atom, setup.rates.r_fs, setup.k_l(cfg))?;
    let tau_c = 1.0 / bath.gamma;
    let mut t = Table::new(&[
        "r_over_a",
        "n",
        "tau_unit",
        "tau_muc",
        "tau_c",
        "temperature",
    ]);
    t.meta_num("tau_c", tau_c);
    t.meta_num("exponent", LITERATURE_EXPONENT);
    let (lo, hi, points) = (cfg.fig2.n_min.ln(), cfg.fig2.n_max.ln(), cfg.fig2.points);
    for &r in &cfg.radii {
        let pot = setup.potential(cfg, r, cfg.normalization)?;
        // tau(N) = tau(2) sqrt(2/N), so tau_muc = tau1 N^(1.7 - 1/2) / 9
        let tau1 = reduce(&pot, &cfg.atom, bath, 2)?.tau * 2f64.sqrt();
        let power = LITERATURE_EXPONENT - 0.5;
        let n_star = (tau_c / (LITERATURE_PREFACTOR * tau1)).powf(1.0 / power);
        t.meta_num(&format!("n_star_r{}", fmt_r(r)), n_star);
        for k in 0..points {
            let n = (lo + (hi - lo) * k as f64 / (points - 1) as f64).exp();
            let tau = tau1 / n.sqrt();
            let tau_muc = LITERATURE_PREFACTOR * tau * n.powf(LITERATURE_EXPONENT);
            let temperature = reduce(&pot, &cfg.atom, bath, 2)?.temperature * 2.0 / n;
            t.push(vec![r, n, tau, tau_muc, tau_c, temperature]);
        }
    }
    Ok(t)
}

#[derive(Debug, Clone)]
pub struct SizeResult {
    pub n: usize,
    pub estimate: EnsembleEstimate,
    pub runs: Vec<Option<f64>>,
}

#[derive(Debug, Clone)]
pub struct ScalingReport {
    pub sizes: Vec<SizeResult>,
    pub fit: PowerLaw,
    /// Percentile-bootstrap 95 % interval of the exponent.
    pub exponent_ci: (f64, f64),
    pub m_eq: f64,
    /// Columns: n, median, ci_low, ci_high, relaxed, total, formula, ratio
    /// (times in units of tau; formula is N^1.7/9).
    pub table: Table,
}

enum Archive {
    Trajectory {
        n: usize,
        realization: usize,
        record: RunRecord,
    },
}

fn run_index(n: usize, realization: usize) -> u64 {
    ((n as u64) << 24) | realization as u64
}

/// Relaxation-time study across system sizes. Trajectories run on a pool of
/// `workers` threads; when `archive` is given, every trajectory is streamed
/// through a single writer into `trajectories.csv` and `runs.csv`.
pub fn scaling(
    cfg: &ExperimentConfig,
    workers: Option<usize>,
    archive: Option<&Path>,
) -> Result<ScalingReport, HarnessError> {
    let sim = &cfg.sim;
    let e = reduced_from_literature(sim.energy);
    let bath = match (sim.gamma_t, sim.temperature) {
        (Some(g), Some(t)) if g > 0.0 => Some((g, t)),
        _ => None,
    };
    let m_eq = match bath {
        Some((_, t)) => equilibrium_magnetization(t)?,
        None => microcanonical_equilibrium(e)?.1,
    };
    let criterion =
        RelaxationCriterion::below_equilibrium(m_eq, sim.sigma, sim.dwell, sim.smoothing);
    let settings = RunSettings {
        dt: sim.dt,
        horizon: sim.horizon,
        sample_every: sim.sample_every,
        criterion,
        max_energy_error: sim.max_energy_error,
        max_halvings: sim.max_halvings,
    };
    let jobs: Vec<(usize, usize)> = sim
        .n
        .iter()
        .flat_map(|&n| (0..sim.realizations).map(move |i| (n, i)))
        .collect();

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w.max(1));
    }
    let pool = builder
        .build()
        .map_err(|e| HarnessError::Pool(e.to_string()))?;

    let (tx, rx) = mpsc::channel::<Archive>();
    let writer = archive.map(|dir| {
        let dir = dir.to_path_buf();
        let cfg = cfg.clone();
        let stride = (sim.archive_every / sim.sample_every).round().max(1.0) as usize;
        std::thread::spawn(move || write_archive(&dir, &cfg, stride, rx))
    });

    let results: Vec<Result<Option<f64>, HarnessError>> = pool.install(|| {
        jobs.par_iter()
            .map_with(tx, |tx, &(n, i)| {
                let index = run_index(n, i);
                let mut init_rng = trajectory_rng(sim.seed, 2 * index);
                let initial = init_waterbag(n, sim.m0, e, &mut init_rng)?;
                let params = match bath {
                    Some((g, t)) => ReducedParams::with_bath(n, g, t)?,
                    None => ReducedParams::microcanonical(n),
                };
                let record = run_relaxation(&initial, &params, &settings, sim.seed, 2 * index + 1)?;
                let relaxed = record.relaxed_at;
                match relaxed {
                    Some(t) => log::info!("N={n} run {i}: relaxed at {t:.0}"),
                    None => log::warn!("N={n} run {i}: not relaxed by the horizon {}", sim.horizon),
                }
                if archive.is_some() {
                    let _ = tx.send(Archive::Trajectory {
                        n,
                        realization: i,
                        record,
                    });
                }
                Ok(relaxed)
            })
            .collect()
    });
    if let Some(handle) = writer {
        handle
            .join()
            .map_err(|_| HarnessError::Pool("archive writer panicked".into()))??;
    }

    let mut sizes = Vec::new();
    let mut boot_rng = trajectory_rng(sim.seed, u64::MAX);
    for (k, &n) in sim.n.iter().enumerate() {
        let runs = results[k * sim.realizations..(k + 1) * sim.realizations]
            .iter()
            .map(|r| r.as_ref().map(|v| *v).map_err(clone_err))
            .collect::<Result<Vec<_>, _>>()?;
        let estimate = relaxation_time(&runs, sim.horizon, sim.bootstrap, 0.95, &mut boot_rng)?;
        sizes.push(SizeResult { n, estimate, runs });
    }

    let ns: Vec<f64> = sizes.iter().map(|s| s.n as f64).collect();
    let medians: Vec<f64> = sizes.iter().map(|s| s.estimate.median).collect();
    let (fit, exponent_ci) = if ns.len() >= 2 && medians.iter().all(|m| *m > 0.0) {
        let fit = fit_power_law(&ns, &medians)?;
        (
            fit,
            exponent_interval(&sizes, &ns, sim.bootstrap, &mut boot_rng),
        )
    } else {
        log::warn!("a median relaxation time is zero or only one size was run; no fit");
        (
            PowerLaw {
                exponent: f64::NAN,
                prefactor: f64::NAN,
                exponent_stderr: f64::NAN,
            },
            (f64::NAN, f64::NAN),
        )
    };

    let mut table = Table::new(&[
        "n", "median", "ci_low", "ci_high", "relaxed", "total", "formula", "ratio",
    ]);
    table.meta_num("exponent", fit.exponent);
    table.meta_num("exponent_ci_low", exponent_ci.0);
    table.meta_num("exponent_ci_high", exponent_ci.1);
    table.meta_num("exponent_stderr", fit.exponent_stderr);
    table.meta_num("m_eq", m_eq);
    table.meta_num("threshold", criterion.threshold);
    table.meta_num("ceiling", criterion.ceiling);
    for s in &sizes {
        let formula = LITERATURE_PREFACTOR * (s.n as f64).powf(LITERATURE_EXPONENT);
        let est = s.estimate;
        table.push(vec![
            s.n as f64,
            est.median,
            est.ci_low,
            est.ci_high,
            est.relaxed as f64,
            est.total as f64,
            formula,
            est.median / formula,
        ]);
    }
    Ok(ScalingReport {
        sizes,
        fit,
        exponent_ci,
        m_eq,
        table,
    })
}

fn clone_err(e: &HarnessError) -> HarnessError {
    match e {
        HarnessError::Numerical(e) => HarnessError::Numerical(e.clone()),
        other => HarnessError::Pool(other.to_string()),
    }
}

/// Bootstrap of the fitted exponent, resampling trajectories within each size.
fn exponent_interval(
    sizes: &[SizeResult],
    ns: &[f64],
    resamples: usize,
    rng: &mut impl Rng,
) -> (f64, f64) {
    let mut exps = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let medians: Option<Vec<f64>> = sizes
            .iter()
            .map(|s| {
                let mut v: Vec<f64> = (0..s.runs.len())
                    .map(|_| s.runs[rng.random_range(0..s.runs.len())].unwrap_or(f64::INFINITY))
                    .collect();
                v.sort_by(f64::total_cmp);
                let k = v.len();
                let m = if k % 2 == 1 {
                    v[k / 2]
                } else {
                    0.5 * (v[k / 2 - 1] + v[k / 2])
                };
                (m.is_finite() && m > 0.0).then_some(m)
            })
            .collect();
        if let Some(m) = medians {
            if let Ok(fit) = fit_power_law(ns, &m) {
                exps.push(fit.exponent);
            }
        }
    }
    if exps.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    exps.sort_by(f64::total_cmp);
    let q = |p: f64| exps[((p * (exps.len() - 1) as f64).round() as usize).min(exps.len() - 1)];
    (q(0.025), q(0.975))
}

fn write_archive(
    dir: &Path,
    cfg: &ExperimentConfig,
    stride: usize,
    rx: mpsc::Receiver<Archive>,
) -> Result<(), HarnessError> {
    let mut traj = BufWriter::new(File::create(dir.join("trajectories.csv"))?);
    let mut runs = BufWriter::new(File::create(dir.join("runs.csv"))?);
    write_preamble(&mut traj, "scaling", cfg)?;
    write_preamble(&mut runs, "scaling", cfg)?;
    writeln!(traj, "n,realization,t,m")?;
    writeln!(runs, "n,realization,relaxed_at,dt_used,max_energy_error")?;
    for msg in rx {
        let Archive::Trajectory {
            n,
            realization,
            record,
        } = msg;
        for (t, m) in record.times.iter().zip(&record.m).step_by(stride) {
            writeln!(traj, "{n},{realization},{t},{m}")?;
        }
        let at = record.relaxed_at.unwrap_or(f64::NAN);
        writeln!(
            runs,
            "{n},{realization},{at},{},{}",
            record.dt_used, record.max_energy_error
        )?;
    }
    traj.flush()?;
    runs.flush()?;
    Ok(())
}
