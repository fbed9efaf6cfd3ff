//! Overdamped Langevin sampling, basin diagnostics and the hybrid scheme
//! that interleaves local Langevin steps with phase-estimation global moves.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::potential::{boltzmann_density, EffectiveKind, Potential, Temperature};
use crate::qpe::{default_time, Evolution, QpeEngine, SpectralQpe};
use crate::simulator::{Propagator, StateVector};
use crate::spectral::{build_effective_hamiltonian, fundamental_gap};

/// `10⁻³ · min(1, 1/s)` with `s` the largest curvature scale of the
/// potential (`h` for the double well, `k` for the harmonic well).
pub fn default_dt(p: &Potential) -> f64 {
    let stiffness = match p {
        Potential::DoubleWell { h, .. } => *h,
        Potential::Harmonic { k } => *k,
        Potential::Polynomial { .. } => {
            let (minima, _) = p.stationary_points();
            minima.iter().map(|&m| p.second_derivative(m)).fold(0.0, f64::max)
        }
    };
    1e-3 * if stiffness > 1.0 { 1.0 / stiffness } else { 1.0 }
}

/// Euler–Maruyama step `x + f(x) dt + sqrt(2T dt) ξ`.
pub fn langevin_step<R: Rng + ?Sized>(x: f64, p: &Potential, t: f64, dt: f64, rng: &mut R) -> f64 {
    let xi: f64 = rng.sample(StandardNormal);
    x + p.force(x) * dt + (2.0 * t * dt).sqrt() * xi
}

fn log_proposal(to: f64, from: f64, p: &Potential, t: f64, dt: f64) -> f64 {
    let mean = from + p.force(from) * dt;
    -(to - mean).powi(2) / (4.0 * t * dt)
}

/// Metropolis-adjusted Langevin step; returns the new position and whether
/// the proposal was accepted.
pub fn mala_step<R: Rng + ?Sized>(x: f64, p: &Potential, t: f64, dt: f64, rng: &mut R) -> (f64, bool) {
    let y = langevin_step(x, p, t, dt, rng);
    let log_a = -(p.value(y) - p.value(x)) / t + log_proposal(x, y, p, t, dt) - log_proposal(y, x, p, t, dt);
    let u: f64 = rng.random();
    if log_a >= 0.0 || u.ln() < log_a {
        (y, true)
    } else {
        (x, false)
    }
}

/// Basin bookkeeping for a potential: basin `b` lies between maxima
/// `b - 1` and `b`. A point exactly on a maximum belongs to the lower basin.
#[derive(Debug, Clone, PartialEq)]
pub struct Basins {
    minima: Vec<f64>,
    maxima: Vec<f64>,
}

impl Basins {
    pub fn new(p: &Potential) -> Self {
        let (minima, maxima) = p.stationary_points();
        Basins { minima, maxima }
    }

    pub fn count(&self) -> usize {
        self.maxima.len() + 1
    }

    pub fn minima(&self) -> &[f64] {
        &self.minima
    }

    pub fn basin_of(&self, x: f64) -> usize {
        self.maxima.partition_point(|&m| m < x)
    }

    /// Basin whose core contains `x`: within half the distance from the
    /// basin minimum to its nearest barrier. Used for hop counting with
    /// hysteresis, so barrier recrossings are not counted as hops.
    pub fn core_of(&self, x: f64) -> Option<usize> {
        let b = self.basin_of(x);
        let Some(&m) = self.minima.get(b) else {
            return Some(b);
        };
        let lo = if b > 0 { m - self.maxima[b - 1] } else { f64::INFINITY };
        let hi = self.maxima.get(b).map_or(f64::INFINITY, |&top| top - m);
        let radius = 0.5 * lo.min(hi);
        ((x - m).abs() < radius).then_some(b)
    }
}

/// Index of the basin containing `x` (0 for a single-well potential).
pub fn basin_of(x: f64, p: &Potential) -> usize {
    Basins::new(p).basin_of(x)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HopEvent {
    pub step: usize,
    pub from: usize,
    pub to: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalMoveRecord {
    pub epoch: usize,
    pub from_x: f64,
    pub to_x: f64,
    pub from_basin: usize,
    pub to_basin: usize,
    pub phase: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ChainRecord {
    /// Positions, one per recorded step.
    pub samples: Vec<f64>,
    /// `basin_of` of each sample.
    pub labels: Vec<usize>,
    /// Committed transitions between basin cores.
    pub hops: Vec<HopEvent>,
    pub proposed: u64,
    pub accepted: u64,
    pub global_moves: Vec<GlobalMoveRecord>,
    /// Integration time step used for the local dynamics.
    pub dt: f64,
}

impl ChainRecord {
    pub fn acceptance_rate(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    /// Committed hops per unit simulated time.
    pub fn hop_rate(&self) -> f64 {
        self.hops.len() as f64 / (self.samples.len() as f64 * self.dt)
    }

    /// Fraction of global moves that landed in a different basin.
    pub fn global_hop_frequency(&self) -> Option<f64> {
        if self.global_moves.is_empty() {
            return None;
        }
        let hops = self.global_moves.iter().filter(|g| g.from_basin != g.to_basin).count();
        Some(hops as f64 / self.global_moves.len() as f64)
    }
}

/// Appends samples and tracks core-to-core transitions.
struct Recorder<'a> {
    basins: &'a Basins,
    record: ChainRecord,
    committed: Option<usize>,
    step: usize,
}

impl<'a> Recorder<'a> {
    fn new(basins: &'a Basins, x0: f64, dt: f64) -> Self {
        Recorder {
            basins,
            record: ChainRecord {
                dt,
                ..Default::default()
            },
            committed: basins.core_of(x0).or(Some(basins.basin_of(x0))),
            step: 0,
        }
    }

    fn push(&mut self, x: f64) {
        self.record.samples.push(x);
        self.record.labels.push(self.basins.basin_of(x));
        if let Some(core) = self.basins.core_of(x) {
            if let Some(prev) = self.committed {
                if prev != core {
                    self.record.hops.push(HopEvent {
                        step: self.step,
                        from: prev,
                        to: core,
                    });
                }
            }
            self.committed = Some(core);
        }
        self.step += 1;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LangevinConfig {
    pub potential: Potential,
    pub temperature: Temperature,
    /// Time step; `None` uses [`default_dt`].
    #[serde(default)]
    pub dt: Option<f64>,
    pub n_steps: usize,
    #[serde(default)]
    pub x_init: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mh_correct: bool,
}

impl LangevinConfig {
    pub fn new(potential: Potential, temperature: Temperature, n_steps: usize) -> Self {
        LangevinConfig {
            potential,
            temperature,
            dt: None,
            n_steps,
            x_init: 0.0,
            seed: 0,
            mh_correct: false,
        }
    }

    pub fn time_step(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(&self.potential))
    }

    pub fn validate(&self) -> Result<()> {
        self.potential.validate()?;
        let dt = self.time_step();
        if !(dt.is_finite() && dt > 0.0) {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        if !self.x_init.is_finite() {
            return Err(invalid("initial position must be finite"));
        }
        Ok(())
    }
}

/// Local dynamics shared by the plain and hybrid chains.
struct Dynamics<'a> {
    p: &'a Potential,
    t: f64,
    dt: f64,
    mh: bool,
}

/// Advances `x` by `steps` local moves, recording every position.
fn local_steps(x: &mut f64, steps: usize, d: &Dynamics, rng: &mut ChaCha8Rng, rec: &mut Recorder) -> Result<()> {
    let Dynamics { p, t, dt, mh } = *d;
    for _ in 0..steps {
        if mh {
            let (y, acc) = mala_step(*x, p, t, dt, rng);
            rec.record.proposed += 1;
            rec.record.accepted += acc as u64;
            *x = y;
        } else {
            *x = langevin_step(*x, p, t, dt, rng);
        }
        if !x.is_finite() {
            return Err(Error::Numeric(format!("Langevin chain diverged; reduce dt (now {dt})")));
        }
        rec.push(*x);
    }
    Ok(())
}

pub fn run_langevin(cfg: &LangevinConfig) -> Result<ChainRecord> {
    cfg.validate()?;
    let basins = Basins::new(&cfg.potential);
    let dt = cfg.time_step();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(&basins, cfg.x_init, dt);
    rec.record.samples.reserve(cfg.n_steps);
    let mut x = cfg.x_init;
    let dynamics = Dynamics {
        p: &cfg.potential,
        t: cfg.temperature.value(),
        dt,
        mh: cfg.mh_correct,
    };
    local_steps(&mut x, cfg.n_steps, &dynamics, &mut rng, &mut rec)?;
    Ok(rec.record)
}

/// Gaussian amplitudes `exp(-(x_i - c)² / (4σ²))` on the grid, normalized.
/// `|ψ|²` then has standard deviation `σ`.
pub fn gaussian_state_with_width(g: &Grid, center: f64, sigma: f64) -> Result<StateVector> {
    if !g.contains(center) {
        return Err(Error::OutsideBox {
            x: center,
            lo: g.x_min(),
            hi: g.x_max(),
        });
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(invalid(format!("width must be positive, got {sigma}")));
    }
    let amps = g.discretize(|x| (-(x - center).powi(2) / (4.0 * sigma * sigma)).exp());
    StateVector::from_real(&amps)
}

/// Gaussian centered at `center` whose probability density has standard
/// deviation `sqrt(T)`.
pub fn gaussian_state(g: &Grid, center: f64, t: Temperature) -> Result<StateVector> {
    gaussian_state_with_width(g, center, t.value().sqrt())
}

/// Energy resolution of the phase estimation in a global move.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Resolution {
    /// Bins no wider than one energy unit: separates the low-lying
    /// manifold from the rest of the spectrum but not `E₀` from `E₁`.
    Coarse,
    /// Bins no wider than half the fundamental gap.
    Gap,
    /// Explicit counting qubits; `time: None` picks the alias-free default.
    Manual { n_eps: usize, time: Option<f64> },
}

/// How the phase-estimation shot is simulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpeBackend {
    /// Full register simulation with controlled powers.
    Circuit,
    /// Eigen-expansion sampler; same law, far cheaper for wide counters.
    Spectral,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GlobalMoveConfig {
    pub grid: Grid,
    pub resolution: Resolution,
    /// Standard deviation of `|ψ_x|²`; `None` means `sqrt(T)`.
    #[serde(default)]
    pub width: Option<f64>,
    pub backend: QpeBackend,
}

impl GlobalMoveConfig {
    pub fn new(grid: Grid, resolution: Resolution) -> Self {
        GlobalMoveConfig {
            grid,
            resolution,
            width: None,
            backend: QpeBackend::Spectral,
        }
    }
}

#[derive(Debug, Clone)]
enum Shooter {
    Circuit(Box<QpeEngine>),
    Spectral(SpectralQpe),
}

/// Prepared global-move machinery for one potential and temperature.
#[derive(Debug, Clone)]
pub struct GlobalMover {
    grid: Grid,
    width: f64,
    n_eps: usize,
    time: f64,
    shooter: Shooter,
}

/// One collapse: readout index, its position, and the phase readout.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlobalMove {
    pub index: usize,
    pub x: f64,
    pub phase: u64,
}

impl GlobalMover {
    pub fn new(p: &Potential, t: Temperature, cfg: &GlobalMoveConfig) -> Result<Self> {
        let h = build_effective_hamiltonian(p, t, &cfg.grid, EffectiveKind::Plain)?;
        let prop = Propagator::new(&h)?;
        let radius = prop.spectral_radius();
        let (n_eps, time) = match cfg.resolution {
            Resolution::Manual { n_eps, time } => (n_eps, time.unwrap_or_else(|| default_time(radius))),
            Resolution::Coarse => {
                let time = default_time(radius);
                (counting_qubits_for_bin(time, 1.0), time)
            }
            Resolution::Gap => {
                let time = default_time(radius);
                let gap = fundamental_gap(prop.spectrum())?;
                (counting_qubits_for_bin(time, 0.5 * gap), time)
            }
        };
        let width = cfg.width.unwrap_or_else(|| t.value().sqrt());
        if !(width.is_finite() && width > 0.0) {
            return Err(invalid(format!("width must be positive, got {width}")));
        }
        let shooter = match cfg.backend {
            QpeBackend::Circuit => Shooter::Circuit(Box::new(QpeEngine::new(
                &h,
                n_eps,
                Some(time),
                false,
                Evolution::Exact,
            )?)),
            QpeBackend::Spectral => Shooter::Spectral(SpectralQpe::new(&prop, n_eps, Some(time), false)?),
        };
        Ok(GlobalMover {
            grid: cfg.grid,
            width,
            n_eps,
            time,
            shooter,
        })
    }

    pub fn n_eps(&self) -> usize {
        self.n_eps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Total evolution time `t · 2^{n_eps}` of the deepest controlled power.
    pub fn total_time(&self) -> f64 {
        self.time * (1u64 << self.n_eps) as f64
    }

    pub fn propose<R: Rng + ?Sized>(&self, x: f64, rng: &mut R) -> Result<GlobalMove> {
        let psi = gaussian_state_with_width(&self.grid, x, self.width)?;
        let (phase, index) = match &self.shooter {
            Shooter::Spectral(s) => s.shot(&psi, rng)?,
            Shooter::Circuit(engine) => {
                let state = engine.final_state(&psi)?;
                let idx = state.sample(1, rng)[0];
                let n_sys = engine.n_sys();
                ((idx >> n_sys) as u64, idx & ((1 << n_sys) - 1))
            }
        };
        Ok(GlobalMove {
            index,
            x: self.grid.position(index)?,
            phase,
        })
    }
}

/// Smallest `n` with `2π / (t 2^n) ≤ bin`.
fn counting_qubits_for_bin(time: f64, bin: f64) -> usize {
    let n = (2.0 * PI / (time * bin)).log2().ceil();
    n.max(1.0) as usize
}

/// One global move from `x`; builds the phase-estimation machinery on
/// every call. Use [`GlobalMover`] for repeated moves.
pub fn global_move<R: Rng + ?Sized>(
    x: f64,
    p: &Potential,
    t: Temperature,
    cfg: &GlobalMoveConfig,
    rng: &mut R,
) -> Result<f64> {
    Ok(GlobalMover::new(p, t, cfg)?.propose(x, rng)?.x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HybridConfig {
    pub potential: Potential,
    pub temperature: Temperature,
    #[serde(default)]
    pub dt: Option<f64>,
    /// Local steps per epoch, followed by one global move.
    pub local_steps: usize,
    pub epochs: usize,
    #[serde(default)]
    pub x_init: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub mh_correct: bool,
    pub global: GlobalMoveConfig,
}

impl HybridConfig {
    pub fn time_step(&self) -> f64 {
        self.dt.unwrap_or_else(|| default_dt(&self.potential))
    }

    /// Local steps plus global moves: the step budget of the chain.
    pub fn step_budget(&self) -> usize {
        self.epochs * (self.local_steps + 1)
    }
}

/// Alternates `local_steps` Langevin steps with one global move per epoch.
/// The position after each global move is recorded as a sample.
pub fn hybrid_sample(cfg: &HybridConfig) -> Result<ChainRecord> {
    LangevinConfig {
        potential: cfg.potential.clone(),
        temperature: cfg.temperature,
        dt: cfg.dt,
        n_steps: 0,
        x_init: cfg.x_init,
        seed: cfg.seed,
        mh_correct: cfg.mh_correct,
    }
    .validate()?;
    let basins = Basins::new(&cfg.potential);
    let mover = GlobalMover::new(&cfg.potential, cfg.temperature, &cfg.global)?;
    let dt = cfg.time_step();
    let dynamics = Dynamics {
        p: &cfg.potential,
        t: cfg.temperature.value(),
        dt,
        mh: cfg.mh_correct,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rec = Recorder::new(&basins, cfg.x_init, dt);
    rec.record.samples.reserve(cfg.step_budget());
    let mut x = cfg.x_init;
    for epoch in 0..cfg.epochs {
        local_steps(&mut x, cfg.local_steps, &dynamics, &mut rng, &mut rec)?;
        let from = x;
        let mv = mover.propose(from, &mut rng)?;
        x = mv.x;
        rec.record.global_moves.push(GlobalMoveRecord {
            epoch,
            from_x: from,
            to_x: x,
            from_basin: basins.basin_of(from),
            to_basin: basins.basin_of(x),
            phase: mv.phase,
        });
        rec.push(x);
    }
    Ok(rec.record)
}

/// Minimum chain length for [`chain_statistics`].
pub const MIN_CHAIN: usize = 1000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    pub n_samples: usize,
    /// Sample counts per grid bin (nearest grid point).
    pub histogram: Vec<u64>,
    pub tv_distance: f64,
    pub hops: usize,
    /// Integrated autocorrelation time of the basin label, in samples.
    /// Infinite when the label never changes.
    pub autocorrelation_time: f64,
    pub occupancies: Vec<f64>,
}

pub fn chain_statistics(c: &ChainRecord, p: &Potential, t: Temperature, g: &Grid) -> Result<ChainReport> {
    let n = c.samples.len();
    if n < MIN_CHAIN {
        return Err(Error::ChainTooShort { len: n, min: MIN_CHAIN });
    }
    let histogram = histogram(&c.samples, g);
    let tv_distance = tv_distance(&histogram, &boltzmann_density(p, t, g));
    let basins = Basins::new(p).count();
    let mut occ = vec![0usize; basins.max(c.labels.iter().max().map_or(0, |m| m + 1))];
    for &l in &c.labels {
        occ[l] += 1;
    }
    let labels: Vec<f64> = c.labels.iter().map(|&l| l as f64).collect();
    Ok(ChainReport {
        n_samples: n,
        histogram,
        tv_distance,
        hops: c.hops.len(),
        autocorrelation_time: integrated_autocorrelation_time(&labels),
        occupancies: occ.iter().map(|&k| k as f64 / n as f64).collect(),
    })
}

/// Counts per grid point, assigning each sample to its nearest grid point.
pub fn histogram(samples: &[f64], g: &Grid) -> Vec<u64> {
    let mut h = vec![0u64; g.size()];
    for &x in samples {
        h[g.nearest_index(x)] += 1;
    }
    h
}

/// `½ Σ |counts/N - p|`.
pub fn tv_distance(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 1.0;
    }
    0.5 * counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| (c as f64 / total as f64 - p).abs())
        .sum::<f64>()
}

/// Normalized autocorrelation `ρ(τ)` for `τ < n`, via zero-padded FFT.
pub fn autocorrelation(series: &[f64]) -> Vec<f64> {
    let n = series.len();
    if n == 0 {
        return Vec::new();
    }
    let mean = series.iter().sum::<f64>() / n as f64;
    let size = (2 * n).next_power_of_two();
    let mut buf: Vec<Complex<f64>> = series.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();
    buf.resize(size, Complex::new(0.0, 0.0));
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(size).process(&mut buf);
    for z in buf.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    planner.plan_fft_inverse(size).process(&mut buf);
    let c0 = buf[0].re;
    if c0 <= 0.0 {
        return vec![1.0; n.min(1)];
    }
    buf[..n].iter().map(|z| z.re / c0).collect()
}

/// Window constant of the self-consistent truncation `W ≥ c τ(W)`.
const SOKAL_C: f64 = 5.0;

/// `τ_int = 1 + 2 Σ_{τ=1}^{W} ρ(τ)` with Sokal's automatic window.
/// A constant series has no decorrelation and returns infinity.
pub fn integrated_autocorrelation_time(series: &[f64]) -> f64 {
    let n = series.len();
    let mean = series.iter().sum::<f64>() / n.max(1) as f64;
    if n < 2 || series.iter().all(|&v| v == mean) {
        return f64::INFINITY;
    }
    let rho = autocorrelation(series);
    let mut tau = 1.0;
    for (w, r) in rho.iter().enumerate().skip(1) {
        tau += 2.0 * r;
        if w as f64 >= SOKAL_C * tau {
            return tau.max(1e-12);
        }
    }
    tau.max(1e-12)
}
