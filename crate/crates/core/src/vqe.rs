//! RY-CNOT variational eigensolver for grid Hamiltonians `H = K + diag(V)`.
//!
//! The energy is estimated from two measurement settings: the position
//! basis gives `E_V = Σ_j P(j) V_j`, and the momentum basis (after a
//! centered QFT) gives `E_K = Σ_j P(p_j) p_j² / (2m*)`.

use argmin::core::{CostFunction, Executor, Gradient, State};
use argmin::solver::linesearch::MoreThuenteLineSearch;
use argmin::solver::neldermead::NelderMead;
use argmin::solver::quasinewton::LBFGS;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;
use crate::potential::{effective_potential_of_kind, EffectiveKind, Potential, Temperature};
use crate::simulator::{Circuit, Gate, StateVector};
use crate::spectral::{build_effective_hamiltonian, build_kinetic, diagonalize, DenseHamiltonian};

/// Layered RY-CNOT circuit with linear connectivity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ansatz {
    pub n: usize,
    pub depth: usize,
    pub params: Vec<f64>,
}

impl Ansatz {
    pub fn param_count(n: usize, depth: usize) -> usize {
        n * (depth + 1)
    }

    pub fn circuit(&self) -> Result<Circuit> {
        build_ansatz(self.n, self.depth, &self.params)
    }

    pub fn state(&self) -> Result<StateVector> {
        let mut s = StateVector::zero(self.n);
        s.run(&self.circuit()?)?;
        Ok(s)
    }
}

/// An RY layer, then `depth` blocks of `[CNOT(q, q+1) chain, RY layer]`.
pub fn build_ansatz(n: usize, depth: usize, params: &[f64]) -> Result<Circuit> {
    if n == 0 {
        return Err(invalid("ansatz needs at least one qubit"));
    }
    let expected = Ansatz::param_count(n, depth);
    if params.len() != expected {
        return Err(Error::LengthMismatch {
            expected,
            found: params.len(),
        });
    }
    let mut circuit = Circuit::new(n);
    let mut angles = params.iter();
    for layer in 0..=depth {
        if layer > 0 {
            for q in 0..n - 1 {
                circuit.push(Gate::Cnot {
                    control: q,
                    target: q + 1,
                })?;
            }
        }
        for q in 0..n {
            circuit.push(Gate::Ry {
                theta: *angles.next().expect("length checked"),
                qubit: q,
            })?;
        }
    }
    Ok(circuit)
}

/// Number of measurements per basis, or exact probabilities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shots {
    Exact,
    Count(u64),
}

impl Shots {
    pub fn validate(self) -> Result<()> {
        match self {
            Shots::Count(0) => Err(invalid("shots must be at least 1")),
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate {
    pub total: f64,
    pub potential: f64,
    pub kinetic: f64,
}

/// `p_j² / (2m*)` in cQFT readout order.
pub fn kinetic_readout_energies(grid: &Grid, mass: f64) -> Vec<f64> {
    grid.momenta().iter().map(|p| p * p / (2.0 * mass)).collect()
}

/// Two-basis energy estimate of `s` for `H = K(mass) + diag(vdiag)`.
pub fn estimate_energy<R: Rng + ?Sized>(
    s: &StateVector,
    vdiag: &[f64],
    grid: &Grid,
    mass: f64,
    shots: Shots,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    if vdiag.len() != grid.size() || s.dim() != grid.size() {
        return Err(Error::LengthMismatch {
            expected: grid.size(),
            found: if vdiag.len() != grid.size() {
                vdiag.len()
            } else {
                s.dim()
            },
        });
    }
    if !(mass.is_finite() && mass > 0.0) {
        return Err(invalid(format!("mass must be positive, got {mass}")));
    }
    shots.validate()?;
    let kdiag = kinetic_readout_energies(grid, mass);
    two_basis_energy(s, vdiag, &kdiag, shots, rng)
}

fn two_basis_energy<R: Rng + ?Sized>(
    s: &StateVector,
    vdiag: &[f64],
    kdiag: &[f64],
    shots: Shots,
    rng: &mut R,
) -> Result<EnergyEstimate> {
    let n = s.n_qubits();
    let mut momentum = s.clone();
    momentum.apply(&Gate::Cqft {
        start: 0,
        len: n,
        inverse: false,
    })?;
    let (pos, mom) = match shots {
        Shots::Exact => (s.probabilities(), momentum.probabilities()),
        Shots::Count(k) => {
            let freq = |counts: Vec<u64>| counts.iter().map(|&c| c as f64 / k as f64).collect::<Vec<_>>();
            (freq(s.measure_all(k, rng)?), freq(momentum.measure_all(k, rng)?))
        }
    };
    let potential: f64 = pos.iter().zip(vdiag).map(|(p, v)| p * v).sum();
    let kinetic: f64 = mom.iter().zip(kdiag).map(|(p, e)| p * e).sum();
    Ok(EnergyEstimate {
        total: potential + kinetic,
        potential,
        kinetic,
    })
}

/// Grid Hamiltonian to minimize.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "snake_case", deny_unknown_fields)]
pub enum VqeTarget {
    /// `K + V` or `K + Vˢ` for a classical potential at temperature `T`.
    Effective {
        potential: Potential,
        temperature: Temperature,
        #[serde(default = "default_kind")]
        variant: EffectiveKind,
        grid: Grid,
    },
    /// `K(mass) + diag(diagonal)`.
    Diagonal { diagonal: Vec<f64>, grid: Grid, mass: f64 },
}

fn default_kind() -> EffectiveKind {
    EffectiveKind::Supersymmetric
}

impl VqeTarget {
    pub fn grid(&self) -> Grid {
        match self {
            VqeTarget::Effective { grid, .. } | VqeTarget::Diagonal { grid, .. } => *grid,
        }
    }

    pub fn mass(&self) -> f64 {
        match self {
            VqeTarget::Effective { temperature, .. } => temperature.effective_mass(),
            VqeTarget::Diagonal { mass, .. } => *mass,
        }
    }

    pub fn potential_diagonal(&self) -> Result<Vec<f64>> {
        match self {
            VqeTarget::Effective {
                potential,
                temperature,
                variant,
                grid,
            } => {
                potential.validate()?;
                Ok(grid.discretize(|x| effective_potential_of_kind(potential, *temperature, *variant, x)))
            }
            VqeTarget::Diagonal { diagonal, grid, mass } => {
                if diagonal.len() != grid.size() {
                    return Err(Error::LengthMismatch {
                        expected: grid.size(),
                        found: diagonal.len(),
                    });
                }
                if !(mass.is_finite() && *mass > 0.0) {
                    return Err(invalid(format!("mass must be positive, got {mass}")));
                }
                Ok(diagonal.clone())
            }
        }
    }

    /// Dense reference Hamiltonian.
    pub fn hamiltonian(&self) -> Result<DenseHamiltonian> {
        match self {
            VqeTarget::Effective {
                potential,
                temperature,
                variant,
                grid,
            } => build_effective_hamiltonian(potential, *temperature, grid, *variant),
            VqeTarget::Diagonal { grid, mass, .. } => {
                build_kinetic(grid, *mass)?.add_diagonal(&self.potential_diagonal()?)
            }
        }
    }
}

/// Local minimizer used in exact mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LocalMethod {
    /// L-BFGS on reverse-mode gradients.
    Lbfgs,
    /// Nelder-Mead simplex, derivative free.
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    /// Iteration budget of one local search (SPSA: iterations per restart).
    pub max_iters: u64,
    pub restarts: usize,
    /// Perturb-and-reminimize rounds per restart (exact mode).
    pub hops: usize,
    /// Half-width of the uniform angle kick between rounds.
    pub hop_step: f64,
    pub method: LocalMethod,
    /// Convergence threshold of a local search (gradient norm, or simplex
    /// cost spread).
    pub tolerance: f64,
    pub seed: u64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        OptimizerConfig {
            max_iters: 3000,
            restarts: 8,
            hops: 40,
            hop_step: 0.7,
            method: LocalMethod::Lbfgs,
            tolerance: 1e-12,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VqeConfig {
    pub target: VqeTarget,
    pub shots: Shots,
    #[serde(default)]
    pub optimizer: OptimizerConfig,
}

impl VqeConfig {
    pub fn validate(&self) -> Result<()> {
        self.shots.validate()?;
        self.target.potential_diagonal()?;
        if self.optimizer.restarts == 0 {
            return Err(invalid("need at least one restart"));
        }
        if self.optimizer.max_iters == 0 {
            return Err(invalid("max_iters must be positive"));
        }
        if !(self.optimizer.hop_step.is_finite() && self.optimizer.hop_step >= 0.0) {
            return Err(invalid("hop_step must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VqeResult {
    pub depth: usize,
    pub best_energy: f64,
    pub best_params: Vec<f64>,
    /// Best-so-far energy of the winning restart after each local search
    /// (exact mode) or SPSA iteration (shot mode).
    pub history: Vec<f64>,
    /// Best energy reached by each restart, in restart order.
    pub restart_energies: Vec<f64>,
    pub exact_energy: Option<f64>,
    /// `(E_vqe - E_exact) / E_exact`.
    pub relative_error: Option<f64>,
    /// Energy evaluations summed over restarts.
    pub evaluations: u64,
}

impl VqeResult {
    pub fn ansatz(&self, n: usize) -> Ansatz {
        Ansatz {
            n,
            depth: self.depth,
            params: self.best_params.clone(),
        }
    }
}

/// Energy landscape of one ansatz on one target.
///
/// RY and CNOT are real, so exact-mode energies and gradients run on real
/// amplitude vectors against the dense Hamiltonian. The quadratic form
/// equals the two-basis estimate with exact probabilities.
#[derive(Debug, Clone)]
pub struct EnergyLandscape {
    n: usize,
    depth: usize,
    vdiag: Vec<f64>,
    kdiag: Vec<f64>,
    dense: DMatrix<f64>,
}

impl EnergyLandscape {
    pub fn new(target: &VqeTarget, depth: usize) -> Result<Self> {
        let grid = target.grid();
        let h = target.hamiltonian()?;
        Ok(EnergyLandscape {
            n: grid.n_qubits(),
            depth,
            vdiag: target.potential_diagonal()?,
            kdiag: kinetic_readout_energies(&grid, target.mass()),
            dense: h.matrix().map(|z| z.re),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn param_count(&self) -> usize {
        Ansatz::param_count(self.n, self.depth)
    }

    /// Two-basis estimate through the gate-level simulator.
    pub fn energy<R: Rng + ?Sized>(&self, params: &[f64], shots: Shots, rng: &mut R) -> Result<f64> {
        let mut s = StateVector::zero(self.n);
        s.run(&build_ansatz(self.n, self.depth, params)?)?;
        Ok(two_basis_energy(&s, &self.vdiag, &self.kdiag, shots, rng)?.total)
    }

    fn check(&self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::LengthMismatch {
                expected: self.param_count(),
                found: params.len(),
            });
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(invalid("non-finite ansatz angle"));
        }
        Ok(())
    }

    /// Real amplitudes of the ansatz state.
    pub fn state(&self, params: &[f64]) -> Result<Vec<f64>> {
        self.check(params)?;
        let mut psi = vec![0.0; 1 << self.n];
        psi[0] = 1.0;
        for (layer, angles) in params.chunks(self.n).enumerate() {
            if layer > 0 {
                self.cnot_chain(&mut psi, false);
            }
            for (q, &theta) in angles.iter().enumerate() {
                real_ry(&mut psi, q, theta);
            }
        }
        Ok(psi)
    }

    fn cnot_chain(&self, psi: &mut [f64], reverse: bool) {
        let apply = |psi: &mut [f64], q: usize| {
            let (c, t) = (1usize << q, 1usize << (q + 1));
            for i in 0..psi.len() {
                if i & c != 0 && i & t == 0 {
                    psi.swap(i, i | t);
                }
            }
        };
        if reverse {
            (0..self.n - 1).rev().for_each(|q| apply(psi, q));
        } else {
            (0..self.n - 1).for_each(|q| apply(psi, q));
        }
    }

    pub fn exact_energy(&self, params: &[f64]) -> Result<f64> {
        let psi = DVector::from_vec(self.state(params)?);
        Ok(psi.dot(&(&self.dense * &psi)))
    }

    /// Energy and its gradient by reverse-mode sweep over the circuit.
    pub fn energy_and_gradient(&self, params: &[f64]) -> Result<(f64, Vec<f64>)> {
        let mut psi = DVector::from_vec(self.state(params)?);
        let mut lambda = &self.dense * &psi;
        let energy = psi.dot(&lambda);
        let mut grad = vec![0.0; params.len()];
        let layers = params.len() / self.n;
        for layer in (0..layers).rev() {
            for q in (0..self.n).rev() {
                let k = layer * self.n + q;
                let theta = params[k];
                real_ry(psi.as_mut_slice(), q, -theta);
                // dRY(θ)/dθ = RY(θ + π) / 2, and dE = 2 λᵀ dψ
                let mut d = psi.clone();
                real_ry(d.as_mut_slice(), q, theta + std::f64::consts::PI);
                grad[k] = lambda.dot(&d);
                real_ry(lambda.as_mut_slice(), q, -theta);
            }
            if layer > 0 {
                self.cnot_chain(psi.as_mut_slice(), true);
                self.cnot_chain(lambda.as_mut_slice(), true);
            }
        }
        Ok((energy, grad))
    }

    /// Parameter-shift gradient; exact for RY rotations.
    pub fn parameter_shift_gradient(&self, params: &[f64]) -> Result<Vec<f64>> {
        let shift = std::f64::consts::FRAC_PI_2;
        let mut p = params.to_vec();
        (0..params.len())
            .map(|i| {
                p[i] = params[i] + shift;
                let plus = self.exact_energy(&p)?;
                p[i] = params[i] - shift;
                let minus = self.exact_energy(&p)?;
                p[i] = params[i];
                Ok(0.5 * (plus - minus))
            })
            .collect()
    }
}

fn real_ry(psi: &mut [f64], q: usize, theta: f64) {
    let (c, s) = ((0.5 * theta).cos(), (0.5 * theta).sin());
    let stride = 1usize << q;
    for chunk in psi.chunks_mut(stride << 1) {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (a, b) in lo.iter_mut().zip(hi.iter_mut()) {
            let (x, y) = (*a, *b);
            *a = c * x - s * y;
            *b = s * x + c * y;
        }
    }
}

struct Objective<'a> {
    landscape: &'a EnergyLandscape,
}

impl CostFunction for Objective<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, p: &Vec<f64>) -> std::result::Result<f64, argmin::core::Error> {
        Ok(self.landscape.exact_energy(p)?)
    }
}

impl Gradient for Objective<'_> {
    type Param = Vec<f64>;
    type Gradient = Vec<f64>;

    fn gradient(&self, p: &Vec<f64>) -> std::result::Result<Vec<f64>, argmin::core::Error> {
        Ok(self.landscape.energy_and_gradient(p)?.1)
    }
}

struct RestartOutcome {
    energy: f64,
    params: Vec<f64>,
    history: Vec<f64>,
    evaluations: u64,
}

/// Initial simplex edge length.
const SIMPLEX_STEP: f64 = 0.4;

/// One local minimization from `start`; returns the best point and its
/// energy. Solver failures (line-search breakdown) keep the start point.
fn local_search(landscape: &EnergyLandscape, start: &[f64], cfg: &OptimizerConfig) -> Result<(f64, Vec<f64>, u64)> {
    let start_e = landscape.exact_energy(start)?;
    let problem = Objective { landscape };
    let run = match cfg.method {
        LocalMethod::Lbfgs => {
            let solver = LBFGS::new(MoreThuenteLineSearch::new(), 10)
                .with_tolerance_grad(cfg.tolerance)
                .and_then(|s| s.with_tolerance_cost(1e-16))
                .map_err(|e| Error::Numeric(e.to_string()))?;
            Executor::new(problem, solver)
                .configure(|s| s.param(start.to_vec()).max_iters(cfg.max_iters))
                .run()
                .map(|r| {
                    let st = r.state();
                    let evals = st.get_func_counts().values().sum::<u64>();
                    (st.get_best_cost(), st.get_best_param().cloned(), evals)
                })
        }
        LocalMethod::Simplex => {
            let mut simplex = vec![start.to_vec()];
            for i in 0..start.len() {
                let mut v = start.to_vec();
                v[i] += SIMPLEX_STEP;
                simplex.push(v);
            }
            let solver = NelderMead::new(simplex)
                .with_sd_tolerance(cfg.tolerance)
                .map_err(|e| Error::Numeric(e.to_string()))?;
            Executor::new(problem, solver)
                .configure(|s| s.max_iters(cfg.max_iters))
                .run()
                .map(|r| {
                    let st = r.state();
                    let evals = st.get_func_counts().values().sum::<u64>();
                    (st.get_best_cost(), st.get_best_param().cloned(), evals)
                })
        }
    };
    match run {
        Ok((e, Some(x), evals)) if e.is_finite() && e < start_e => Ok((e, x, evals + 1)),
        Ok((_, _, evals)) => Ok((start_e, start.to_vec(), evals + 1)),
        Err(_) => Ok((start_e, start.to_vec(), 1)),
    }
}

/// Basin hopping: minimize, kick the incumbent, re-minimize, keep improvements.
fn hopping_search(
    landscape: &EnergyLandscape,
    start: &[f64],
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RestartOutcome> {
    let (mut best_e, mut best, mut evaluations) = local_search(landscape, start, cfg)?;
    let mut history = vec![best_e];
    for _ in 0..cfg.hops {
        let kicked: Vec<f64> = best
            .iter()
            .map(|v| v + rng.random_range(-cfg.hop_step..=cfg.hop_step))
            .collect();
        let (e, x, evals) = local_search(landscape, &kicked, cfg)?;
        evaluations += evals;
        if e < best_e {
            best_e = e;
            best = x;
        }
        history.push(best_e);
    }
    Ok(RestartOutcome {
        energy: best_e,
        params: best,
        history,
        evaluations,
    })
}

/// Simultaneous-perturbation stochastic approximation on shot-noise estimates.
fn spsa_search(
    landscape: &EnergyLandscape,
    start: &[f64],
    shots: Shots,
    cfg: &OptimizerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<RestartOutcome> {
    let (a, c, alpha, gamma) = (0.2, 0.1, 0.602, 0.101);
    let stability = 0.1 * cfg.max_iters as f64;
    let mut theta = start.to_vec();
    let mut best = theta.clone();
    let mut best_e = landscape.energy(&theta, shots, rng)?;
    let mut history = vec![best_e];
    let mut evaluations = 1u64;
    for k in 0..cfg.max_iters {
        let ak = a / (k as f64 + 1.0 + stability).powf(alpha);
        let ck = c / (k as f64 + 1.0).powf(gamma);
        let delta: Vec<f64> = (0..theta.len())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let plus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t + ck * d).collect();
        let minus: Vec<f64> = theta.iter().zip(&delta).map(|(t, d)| t - ck * d).collect();
        let diff = landscape.energy(&plus, shots, rng)? - landscape.energy(&minus, shots, rng)?;
        for (t, d) in theta.iter_mut().zip(&delta) {
            *t -= ak * diff / (2.0 * ck * d);
        }
        let e = landscape.energy(&theta, shots, rng)?;
        evaluations += 3;
        if e < best_e {
            best_e = e;
            best = theta.clone();
        }
        history.push(best_e);
    }
    Ok(RestartOutcome {
        energy: best_e,
        params: best,
        history,
        evaluations,
    })
}

/// Starting angles for restart `r`: zeros for the first, small uniform
/// angles in `[-0.1, 0.1]` afterwards.
pub fn initial_params(count: usize, seed: u64, restart: usize) -> Vec<f64> {
    if restart == 0 {
        return vec![0.0; count];
    }
    let mut rng = restart_rng(seed, restart);
    (0..count).map(|_| rng.random_range(-0.1..=0.1)).collect()
}

fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64 + 1);
    rng
}

/// Parameters of a depth `d + 1` ansatz that reproduce a depth-`d` state:
/// a zero first layer leaves `|0…0⟩` untouched, and so does the CNOT chain.
pub fn deepen(params: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    out.extend_from_slice(params);
    out
}

/// Minimizes the ansatz energy with independent restarts run in parallel.
pub fn optimize(cfg: &VqeConfig, depth: usize) -> Result<VqeResult> {
    optimize_with_starts(cfg, depth, &[])
}

/// As [`optimize`], with extra starting points searched after the random
/// restarts.
pub fn optimize_with_starts(cfg: &VqeConfig, depth: usize, extra: &[Vec<f64>]) -> Result<VqeResult> {
    cfg.validate()?;
    let landscape = EnergyLandscape::new(&cfg.target, depth)?;
    let count = landscape.param_count();
    let mut starts: Vec<Vec<f64>> = (0..cfg.optimizer.restarts)
        .map(|r| initial_params(count, cfg.optimizer.seed, r))
        .collect();
    for x in extra {
        if x.len() != count {
            return Err(Error::LengthMismatch {
                expected: count,
                found: x.len(),
            });
        }
        starts.push(x.clone());
    }
    let outcomes: Vec<RestartOutcome> = starts
        .par_iter()
        .enumerate()
        .map(|(r, start)| {
            let mut rng = restart_rng(cfg.optimizer.seed ^ 0x5eed, r);
            match cfg.shots {
                Shots::Exact => hopping_search(&landscape, start, &cfg.optimizer, &mut rng),
                shots => spsa_search(&landscape, start, shots, &cfg.optimizer, &mut rng),
            }
        })
        .collect::<Result<_>>()?;
    let restart_energies: Vec<f64> = outcomes.iter().map(|o| o.energy).collect();
    let evaluations = outcomes.iter().map(|o| o.evaluations).sum();
    // first minimum wins, so ties resolve by restart order
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.energy < a.energy { b } else { a })
        .expect("at least one restart");
    let exact_energy = diagonalize(&cfg.target.hamiltonian()?)?.ground_energy();
    // in shot mode, report the noiseless energy of the best parameters
    let best_energy = match cfg.shots {
        Shots::Exact => best.energy,
        Shots::Count(_) => landscape.exact_energy(&best.params)?,
    };
    Ok(VqeResult {
        depth,
        best_energy,
        relative_error: Some((best_energy - exact_energy) / exact_energy),
        exact_energy: Some(exact_energy),
        best_params: best.params,
        history: best.history,
        restart_energies,
        evaluations,
    })
}

/// Optimizes each depth in increasing order, also starting every depth
/// from the previous depth's optimum, so the best energy cannot increase
/// with depth.
pub fn optimize_sweep(cfg: &VqeConfig, depths: &[usize]) -> Result<Vec<VqeResult>> {
    let n = cfg.target.grid().n_qubits();
    let mut sorted = depths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    let mut results: Vec<VqeResult> = Vec::with_capacity(sorted.len());
    for &depth in &sorted {
        let extra = match results.last() {
            Some(prev) => {
                let mut p = prev.best_params.clone();
                for _ in prev.depth..depth {
                    p = deepen(&p, n);
                }
                vec![p]
            }
            None => Vec::new(),
        };
        results.push(optimize_with_starts(cfg, depth, &extra)?);
    }
    Ok(results)
}
