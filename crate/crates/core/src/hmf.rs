//! Hamiltonian mean-field rotors with an optional Langevin bath, in reduced
//! units: angles `theta = 4 pi n z / lambda_L`, time in units of `tau`,
//! energies in units of `J`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{ensure, Error, Result};
use crate::liddi::{AtomSpec, FrictionDiffusion, LiddiPotential};
use crate::special::bessel_i;
use std::collections::VecDeque;
use std::f64::consts::PI;

/// Critical temperature of the mean-field rotor model in units of `J`.
pub const CRITICAL_TEMPERATURE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedParams {
    /// Total coupling `J = N eta hbar R_fs` [J].
    pub j: f64,
    /// Time unit `sqrt(m/J) lambda_L / (4 pi)` [s].
    pub tau: f64,
    pub gamma_t: f64,
    /// Bath temperature `D / (m gamma J)`; zero without a bath.
    pub temperature: f64,
    pub n: usize,
}

impl ReducedParams {
    /// Isolated system with `J = 1`, `tau = 1`.
    pub fn microcanonical(n: usize) -> Self {
        Self {
            j: 1.0,
            tau: 1.0,
            gamma_t: 0.0,
            temperature: 0.0,
            n,
        }
    }

    /// Bath-coupled system given directly in reduced units.
    pub fn with_bath(n: usize, gamma_t: f64, temperature: f64) -> Result<Self> {
        ensure(
            gamma_t >= 0.0 && gamma_t.is_finite(),
            "gamma_t",
            "must be non-negative",
        )?;
        ensure(
            temperature >= 0.0 && temperature.is_finite(),
            "temperature",
            "must be non-negative",
        )?;
        Ok(Self {
            j: 1.0,
            tau: 1.0,
            gamma_t,
            temperature,
            n,
        })
    }
}

/// Converts the physical potential and bath into reduced units for `n` atoms.
pub fn reduce(
    pot: &LiddiPotential,
    atom: &AtomSpec,
    bath: FrictionDiffusion,
    n: usize,
) -> Result<ReducedParams> {
    ensure(n >= 2, "n", "need at least two atoms")?;
    if bath.gamma < 0.0 {
        return Err(Error::NegativeFriction(bath.gamma));
    }
    let j = n as f64 * 0.5 * pot.prefactor;
    let tau = (atom.mass / j).sqrt() * pot.lambda_l / (4.0 * PI);
    let temperature = if bath.gamma == 0.0 {
        0.0
    } else {
        bath.diffusion / (atom.mass * bath.gamma * j)
    };
    Ok(ReducedParams {
        j,
        tau,
        gamma_t: tau * bath.gamma,
        temperature,
        n,
    })
}

/// Rotor angles (unwrapped) and reduced momenta at time `t` (units of tau).
#[derive(Debug, Clone, PartialEq)]
pub struct HmfState {
    pub theta: Vec<f64>,
    pub p: Vec<f64>,
    pub t: f64,
}

impl HmfState {
    pub fn new(theta: Vec<f64>, p: Vec<f64>) -> Result<Self> {
        ensure(theta.len() >= 2, "theta", "need at least two rotors")?;
        ensure(theta.len() == p.len(), "p", "must match theta in length")?;
        ensure(
            theta.iter().chain(&p).all(|x| x.is_finite()),
            "state",
            "entries must be finite",
        )?;
        Ok(Self { theta, p, t: 0.0 })
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn total_momentum(&self) -> f64 {
        self.p.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Magnetization {
    pub m: f64,
    pub phi: f64,
}

fn mean_phasor(theta: &[f64]) -> (f64, f64) {
    let (mut c, mut s) = (0.0, 0.0);
    for &t in theta {
        let (sin, cos) = t.sin_cos();
        c += cos;
        s += sin;
    }
    let n = theta.len() as f64;
    (c / n, s / n)
}

pub fn magnetization(state: &HmfState) -> Magnetization {
    let (c, s) = mean_phasor(&state.theta);
    Magnetization {
        m: c.hypot(s).min(1.0),
        phi: s.atan2(c),
    }
}

/// `a_i = -(1/N) sum_j sin(theta_i - theta_j) = -M sin(theta_i - phi)`,
/// expanded as `-(sin theta_i <cos> - cos theta_i <sin>)` so the cost is O(N).
pub fn mean_field_force(state: &HmfState) -> Vec<f64> {
    let mut out = vec![0.0; state.len()];
    let mut trig = vec![(0.0, 0.0); state.len()];
    force_into(&state.theta, &mut trig, &mut out);
    out
}

fn force_into(theta: &[f64], trig: &mut [(f64, f64)], out: &mut [f64]) -> f64 {
    let (mut c, mut s) = (0.0, 0.0);
    for (tr, &t) in trig.iter_mut().zip(theta) {
        *tr = t.sin_cos();
        c += tr.1;
        s += tr.0;
    }
    let n = theta.len() as f64;
    let (c, s) = (c / n, s / n);
    for (a, &(sin, cos)) in out.iter_mut().zip(trig.iter()) {
        *a = -(sin * c - cos * s);
    }
    c * c + s * s
}

/// Reduced energy per rotor, `(1/N) sum p^2/2 - (1 + M^2)/2`.
pub fn energy(state: &HmfState) -> f64 {
    let kinetic = state.p.iter().map(|p| p * p).sum::<f64>() / (2.0 * state.len() as f64);
    let m = magnetization(state).m;
    kinetic - 0.5 * (1.0 + m * m)
}

/// Energy per rotor in the convention `K + (1 - M^2)/2` common in the
/// mean-field literature, converted to the reduced convention above.
pub fn reduced_from_literature(u: f64) -> f64 {
    u - 1.0
}

/// Splitting integrator: half kick, half drift, exact Ornstein-Uhlenbeck
/// momentum update, half drift, half kick. With zero damping this is
/// velocity Verlet.
#[derive(Debug, Clone)]
pub struct Langevin {
    pub dt: f64,
    pub gamma_t: f64,
    pub temperature: f64,
    /// Multiplies the mean-field force; zero decouples the rotors.
    pub coupling: f64,
    force: Vec<f64>,
    trig: Vec<(f64, f64)>,
    m2: f64,
}

impl Langevin {
    pub fn new(params: &ReducedParams, dt: f64) -> Result<Self> {
        ensure(dt > 0.0 && dt.is_finite(), "dt", "must be positive")?;
        ensure(params.gamma_t >= 0.0, "gamma_t", "must be non-negative")?;
        ensure(
            params.temperature >= 0.0,
            "temperature",
            "must be non-negative",
        )?;
        Ok(Self {
            dt,
            gamma_t: params.gamma_t,
            temperature: params.temperature,
            coupling: 1.0,
            force: Vec::new(),
            trig: Vec::new(),
            m2: 0.0,
        })
    }

    pub fn with_coupling(mut self, coupling: f64) -> Self {
        self.coupling = coupling;
        self.force.clear();
        self
    }

    fn refresh(&mut self, theta: &[f64]) {
        self.force.resize(theta.len(), 0.0);
        self.trig.resize(theta.len(), (0.0, 0.0));
        self.m2 = force_into(theta, &mut self.trig, &mut self.force);
    }

    /// Squared magnetization at the current positions (valid after a step).
    pub fn last_m2(&self) -> f64 {
        self.m2
    }

    pub fn step<R: Rng + ?Sized>(&mut self, state: &mut HmfState, rng: &mut R) {
        if self.force.len() != state.len() {
            self.refresh(&state.theta);
        }
        let h = 0.5 * self.dt;
        let kick = h * self.coupling;
        for (p, a) in state.p.iter_mut().zip(&self.force) {
            *p += kick * a;
        }
        if self.gamma_t > 0.0 {
            for (t, p) in state.theta.iter_mut().zip(&state.p) {
                *t += h * p;
            }
            let c1 = (-self.gamma_t * self.dt).exp();
            let sigma = ((1.0 - c1 * c1) * self.temperature).sqrt();
            for p in state.p.iter_mut() {
                let xi: f64 = rng.sample(StandardNormal);
                *p = c1 * *p + sigma * xi;
            }
            for (t, p) in state.theta.iter_mut().zip(&state.p) {
                *t += h * p;
            }
        } else {
            for (t, p) in state.theta.iter_mut().zip(&state.p) {
                *t += self.dt * p;
            }
        }
        self.refresh(&state.theta);
        for (p, a) in state.p.iter_mut().zip(&self.force) {
            *p += kick * a;
        }
        state.t += self.dt;
    }
}

/// One integration step; allocates its own force cache.
pub fn step<R: Rng + ?Sized>(
    state: &mut HmfState,
    params: &ReducedParams,
    dt: f64,
    rng: &mut R,
) -> Result<()> {
    Langevin::new(params, dt)?.step(state, rng);
    Ok(())
}

/// Independent stream `index` of the generator family keyed by `seed`.
pub fn trajectory_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Solves `sin(x)/x = m` for the half-width of a uniform angle distribution.
fn half_width_for(m: f64) -> f64 {
    if m >= 1.0 {
        return 0.0;
    }
    if m <= 0.0 {
        return PI;
    }
    let (mut lo, mut hi) = (0.0_f64, PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid.sin() / mid > m {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Waterbag initial state: angles uniform in a window giving magnetization
/// `m0` (all zero for `m0 = 1`), momenta uniform and zero-mean, scaled so the
/// reduced energy per rotor equals `e`.
pub fn init_waterbag<R: Rng + ?Sized>(n: usize, m0: f64, e: f64, rng: &mut R) -> Result<HmfState> {
    ensure(n >= 2, "n", "need at least two rotors")?;
    ensure((0.0..=1.0).contains(&m0), "m0", "must lie in [0, 1]")?;
    let width = half_width_for(m0);
    let theta: Vec<f64> = (0..n)
        .map(|_| {
            if width == 0.0 {
                0.0
            } else {
                rng.random_range(-width..width)
            }
        })
        .collect();
    let (c, s) = mean_phasor(&theta);
    let m2 = c * c + s * s;
    let kinetic = e + 0.5 * (1.0 + m2);
    if kinetic < 0.0 {
        return Err(Error::InfeasibleEnergy { energy: e, m0 });
    }
    let dp = (6.0 * kinetic).sqrt();
    let mut p: Vec<f64> = (0..n)
        .map(|_| {
            if dp == 0.0 {
                0.0
            } else {
                rng.random_range(-dp..dp)
            }
        })
        .collect();
    let mean = p.iter().sum::<f64>() / n as f64;
    p.iter_mut().for_each(|x| *x -= mean);
    let actual = p.iter().map(|x| x * x).sum::<f64>() / (2.0 * n as f64);
    if actual > 0.0 {
        let scale = (kinetic / actual).sqrt();
        p.iter_mut().for_each(|x| *x *= scale);
    }
    HmfState::new(theta, p)
}

/// `<cos theta>` for a rotor in the field `x cos theta` (x = M/T), by the
/// periodic trapezoid rule, which converges geometrically here.
fn mean_cos(x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let nodes = (64.0 * x.sqrt()).clamp(256.0, 65536.0) as usize;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..nodes {
        let th = 2.0 * PI * k as f64 / nodes as f64;
        let cos = th.cos();
        let w = (x * (cos - 1.0)).exp();
        num += w * cos;
        den += w;
    }
    num / den
}

/// Canonical order parameter from the self-consistency `M = <cos theta>_{M/T}`.
pub fn equilibrium_magnetization(temperature: f64) -> Result<f64> {
    ensure(
        temperature > 0.0 && temperature.is_finite(),
        "temperature",
        "must be positive",
    )?;
    if temperature >= CRITICAL_TEMPERATURE {
        return Ok(0.0);
    }
    // with x = M/T the condition is I1(x)/I0(x) = T x, one root in (0, 1/T]
    let ratio = |x: f64| {
        if x < 1.0 {
            bessel_i(1, x) / bessel_i(0, x)
        } else {
            mean_cos(x)
        }
    };
    let h = |x: f64| ratio(x) - temperature * x;
    let (mut lo, mut hi) = (0.0, 1.0 / temperature);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        // near x = 0 the sign of h follows 1/2 - T - x^2/16
        let positive = if mid < 1e-4 {
            0.5 - temperature - mid * mid / 16.0 > 0.0
        } else {
            h(mid) > 0.0
        };
        if positive {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(temperature * 0.5 * (lo + hi))
}

/// Equilibrium temperature and magnetization at reduced energy `e`, using
/// the caloric curve `e = T/2 - (1 + M(T)^2)/2`.
pub fn microcanonical_equilibrium(e: f64) -> Result<(f64, f64)> {
    ensure(
        e > -1.0 && e.is_finite(),
        "energy",
        "must exceed the ground state -1",
    )?;
    let caloric = |t: f64| -> Result<f64> {
        let m = equilibrium_magnetization(t)?;
        Ok(0.5 * t - 0.5 * (1.0 + m * m) - e)
    };
    let (mut lo, mut hi) = (1e-6, 1.0);
    while caloric(hi)? < 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if caloric(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    Ok((t, equilibrium_magnetization(t)?))
}

/// Best-Fisher rejection sampler for the von Mises density `exp(kappa cos x)`.
fn von_mises<R: Rng + ?Sized>(kappa: f64, rng: &mut R) -> f64 {
    if kappa < 1e-8 {
        return rng.random_range(-PI..PI);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) > u2 || (c / u2).ln() + 1.0 >= c {
            let u3: f64 = rng.random();
            return if u3 > 0.5 { f.acos() } else { -f.acos() };
        }
    }
}

/// Draws a state from the mean-field canonical distribution at temperature `t`.
pub fn sample_canonical<R: Rng + ?Sized>(n: usize, t: f64, rng: &mut R) -> Result<HmfState> {
    ensure(n >= 2, "n", "need at least two rotors")?;
    let m = equilibrium_magnetization(t)?;
    let theta = (0..n).map(|_| von_mises(m / t, rng)).collect();
    let sd = t.sqrt();
    let p = (0..n)
        .map(|_| sd * rng.sample::<f64, _>(StandardNormal))
        .collect();
    HmfState::new(theta, p)
}

/// Sustained-crossing rule: relaxed at the first sample from which the
/// trailing mean of `M` over `smoothing` time units stays at or above
/// `threshold` for `dwell` time units. The clock is armed only once the
/// smoothed `M` has been at or below `ceiling`, so a state started above
/// equilibrium must first fall into the quasistationary regime.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RelaxationCriterion {
    pub threshold: f64,
    pub ceiling: f64,
    pub dwell: f64,
    pub smoothing: f64,
}

impl RelaxationCriterion {
    /// Threshold `sigma` below and ceiling `sigma` above the equilibrium
    /// magnetization.
    pub fn below_equilibrium(m_eq: f64, sigma: f64, dwell: f64, smoothing: f64) -> Self {
        Self {
            threshold: m_eq - sigma,
            ceiling: m_eq + sigma,
            dwell,
            smoothing,
        }
    }
}

/// Online detector for the sustained crossing.
#[derive(Debug, Clone)]
pub struct CrossingTracker {
    criterion: RelaxationCriterion,
    window: VecDeque<(f64, f64)>,
    sum: f64,
    armed: bool,
    candidate: Option<f64>,
}

impl CrossingTracker {
    pub fn new(criterion: RelaxationCriterion) -> Self {
        Self {
            criterion,
            window: VecDeque::new(),
            sum: 0.0,
            armed: false,
            candidate: None,
        }
    }

    /// Feeds one sample; returns the crossing time once the dwell is complete.
    pub fn push(&mut self, t: f64, m: f64) -> Option<f64> {
        self.window.push_back((t, m));
        self.sum += m;
        while let Some(&(t0, m0)) = self.window.front() {
            if t - t0 < self.criterion.smoothing || self.window.len() == 1 {
                break;
            }
            self.sum -= m0;
            self.window.pop_front();
        }
        let smooth = self.sum / self.window.len() as f64;
        if smooth <= self.criterion.ceiling {
            self.armed = true;
        }
        if self.armed && smooth >= self.criterion.threshold {
            let start = *self.candidate.get_or_insert(t);
            if t - start >= self.criterion.dwell {
                return Some(start);
            }
        } else {
            self.candidate = None;
        }
        None
    }
}

/// First sustained crossing in a recorded series.
pub fn first_sustained_crossing(
    times: &[f64],
    m: &[f64],
    criterion: RelaxationCriterion,
) -> Option<f64> {
    let mut tracker = CrossingTracker::new(criterion);
    times.iter().zip(m).find_map(|(&t, &x)| tracker.push(t, x))
}

/// Settings for one microcanonical relaxation run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunSettings {
    pub dt: f64,
    pub horizon: f64,
    /// Time between magnetization samples.
    pub sample_every: f64,
    pub criterion: RelaxationCriterion,
    /// Largest tolerated relative energy error before the step is halved
    /// (ignored with a bath).
    pub max_energy_error: f64,
    /// How many times `dt` may be halved.
    pub max_halvings: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    /// Crossing time, or `None` if the horizon was reached first.
    pub relaxed_at: Option<f64>,
    pub times: Vec<f64>,
    pub m: Vec<f64>,
    pub dt_used: f64,
    pub max_energy_error: f64,
}

impl RunRecord {
    pub fn relaxation_time(&self, horizon: f64) -> Result<f64> {
        self.relaxed_at.ok_or(Error::NotRelaxed { horizon })
    }
}

/// Integrates from `initial` until relaxation or the horizon, restarting with
/// half the step if the energy error grows past the tolerance.
pub fn run_relaxation(
    initial: &HmfState,
    params: &ReducedParams,
    settings: &RunSettings,
    seed: u64,
    index: u64,
) -> Result<RunRecord> {
    ensure(settings.horizon > 0.0, "horizon", "must be positive")?;
    ensure(
        settings.sample_every >= settings.dt,
        "sample_every",
        "must be at least dt",
    )?;
    let mut dt = settings.dt;
    for attempt in 0..=settings.max_halvings {
        let mut rng = trajectory_rng(seed, index);
        let record = integrate_once(initial, params, settings, dt, &mut rng)?;
        let bath = params.gamma_t > 0.0;
        if bath
            || record.max_energy_error <= settings.max_energy_error
            || attempt == settings.max_halvings
        {
            if !bath && record.max_energy_error > settings.max_energy_error {
                log::warn!(
                    "energy error {:.2e} after {} halvings",
                    record.max_energy_error,
                    attempt
                );
            }
            return Ok(record);
        }
        log::debug!(
            "energy error {:.2e} at dt {dt}; halving",
            record.max_energy_error
        );
        dt *= 0.5;
    }
    unreachable!("loop returns on the last attempt")
}

fn integrate_once(
    initial: &HmfState,
    params: &ReducedParams,
    settings: &RunSettings,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<RunRecord> {
    let mut state = initial.clone();
    let mut stepper = Langevin::new(params, dt)?;
    let e0 = energy(&state);
    let stride = (settings.sample_every / dt).round().max(1.0) as u64;
    let total = (settings.horizon / dt).ceil() as u64;
    let mut tracker = CrossingTracker::new(settings.criterion);
    let (mut times, mut ms) = (vec![0.0], vec![magnetization(&state).m]);
    tracker.push(0.0, ms[0]);
    let mut worst = 0.0_f64;
    let mut relaxed_at = None;
    for k in 1..=total {
        stepper.step(&mut state, rng);
        if k % stride == 0 {
            let m = stepper.last_m2().sqrt();
            let kinetic = state.p.iter().map(|p| p * p).sum::<f64>() / (2.0 * state.len() as f64);
            let e = kinetic - 0.5 * (1.0 + m * m);
            worst = worst.max(((e - e0) / e0).abs());
            let t = k as f64 * dt;
            times.push(t);
            ms.push(m);
            if let Some(t0) = tracker.push(t, m) {
                relaxed_at = Some(t0);
                break;
            }
        }
    }
    Ok(RunRecord {
        relaxed_at,
        times,
        m: ms,
        dt_used: dt,
        max_energy_error: worst,
    })
}

/// Median relaxation time of an ensemble with a bootstrap interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleEstimate {
    pub median: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub relaxed: usize,
    pub total: usize,
}

/// Median of a sample in which `None` marks a run censored at the horizon.
fn censored_median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Ensemble median and percentile-bootstrap interval (`level`, e.g. 0.95).
/// Unrelaxed runs count as infinitely slow, so the median exists only while
/// fewer than half of them are censored.
pub fn relaxation_time(
    runs: &[Option<f64>],
    horizon: f64,
    resamples: usize,
    level: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EnsembleEstimate> {
    ensure(
        runs.len() >= 10,
        "realizations",
        "need at least 10 trajectories",
    )?;
    ensure(level > 0.0 && level < 1.0, "level", "must lie in (0, 1)")?;
    let values: Vec<f64> = runs.iter().map(|r| r.unwrap_or(f64::INFINITY)).collect();
    let median = censored_median(&mut values.clone());
    if !median.is_finite() {
        return Err(Error::NotRelaxed { horizon });
    }
    let mut boot: Vec<f64> = (0..resamples.max(1))
        .map(|_| {
            let mut sample: Vec<f64> = (0..values.len())
                .map(|_| values[rng.random_range(0..values.len())])
                .collect();
            censored_median(&mut sample)
        })
        .collect();
    boot.sort_by(f64::total_cmp);
    let q = |p: f64| boot[((p * (boot.len() - 1) as f64).round() as usize).min(boot.len() - 1)];
    let alpha = 0.5 * (1.0 - level);
    Ok(EnsembleEstimate {
        median,
        ci_low: q(alpha),
        ci_high: q(1.0 - alpha),
        relaxed: runs.iter().filter(|r| r.is_some()).count(),
        total: runs.len(),
    })
}

/// Least-squares fit of `log y = log c + k log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLaw {
    pub exponent: f64,
    pub prefactor: f64,
    pub exponent_stderr: f64,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<PowerLaw> {
    ensure(
        x.len() == y.len() && x.len() >= 2,
        "fit",
        "need at least two matching points",
    )?;
    ensure(
        x.iter().chain(y).all(|v| *v > 0.0 && v.is_finite()),
        "fit",
        "values must be positive",
    )?;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    ensure(sxx > 0.0, "fit", "x values must differ")?;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let k = sxy / sxx;
    let intercept = my - k * mx;
    let stderr = if lx.len() > 2 {
        let rss: f64 = lx
            .iter()
            .zip(&ly)
            .map(|(a, b)| (b - intercept - k * a).powi(2))
            .sum();
        (rss / (n - 2.0) / sxx).sqrt()
    } else {
        f64::NAN
    };
    Ok(PowerLaw {
        exponent: k,
        prefactor: intercept.exp(),
        exponent_stderr: stderr,
    })
}

/// Interval where `M(t)` is flat (|dM/dt| below `max_slope` from a
/// least-squares slope over `window`) and below `ceiling`, lasting at least
/// `min_duration`. Returns the longest such interval and its mean level.
pub fn detect_plateau(
    times: &[f64],
    m: &[f64],
    window: f64,
    max_slope: f64,
    ceiling: f64,
    min_duration: f64,
) -> Option<(f64, f64, f64)> {
    if times.len() < 3 {
        return None;
    }
    let mut best: Option<(f64, f64, f64)> = None;
    let mut run_start: Option<usize> = None;
    let mut lo = 0;
    let mut hi = 0;
    let mut flat_until = 0;
    for i in 0..times.len() {
        // window [t_i, t_i + window]
        while lo < i {
            lo += 1;
        }
        while hi + 1 < times.len() && times[hi + 1] <= times[i] + window {
            hi += 1;
        }
        if times[hi] - times[i] < 0.5 * window {
            break;
        }
        let (xs, ys) = (&times[lo..=hi], &m[lo..=hi]);
        let n = xs.len() as f64;
        let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
        let sxx: f64 = xs.iter().map(|a| (a - mx).powi(2)).sum();
        let sxy: f64 = xs.iter().zip(ys).map(|(a, b)| (a - mx) * (b - my)).sum();
        let flat = sxx > 0.0 && (sxy / sxx).abs() < max_slope && my < ceiling;
        if flat {
            run_start.get_or_insert(i);
            flat_until = hi;
        } else if let Some(s) = run_start.take() {
            best = longer(best, times, m, s, flat_until);
        }
    }
    if let Some(s) = run_start {
        best = longer(best, times, m, s, flat_until);
    }
    best.filter(|(a, b, _)| b - a >= min_duration)
}

fn longer(
    best: Option<(f64, f64, f64)>,
    times: &[f64],
    m: &[f64],
    s: usize,
    e: usize,
) -> Option<(f64, f64, f64)> {
    let level = m[s..=e].iter().sum::<f64>() / (e - s + 1) as f64;
    let candidate = (times[s], times[e], level);
    match best {
        Some(b) if b.1 - b.0 >= candidate.1 - candidate.0 => Some(b),
        _ => Some(candidate),
    }
}
