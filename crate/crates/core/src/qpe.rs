//! Quantum phase estimation with exact controlled powers of `U = exp(iHt)`.
//!
//! Layout: the system register occupies qubits `[0, n_sys)`, the counting
//! register `[n_sys, n_sys + n_eps)`. Counting qubit `j` controls
//! `U^{2^j}`; an inverse QFT on the counting register then leaves the
//! readout `k ≈ E t 2^{n_eps} / 2π`.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::simulator::{trotter_evolution_ising, CdfSampler, Circuit, Gate, Propagator, StateVector};
use crate::spectral::DenseHamiltonian;
use crate::C64;

/// Counting qubits for `n_prec` bits at success probability `1 - eps`:
/// `n_prec + ceil(log₂(2 + 1/(2 eps)))`.
pub fn required_counting_qubits(eps: f64, n_prec: usize) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    Ok(n_prec + (2.0 + 1.0 / (2.0 * eps)).log2().ceil() as usize)
}

/// `E = 2πk / (2^{n_eps} t)`.
pub fn phase_to_energy(k: u64, n_eps: usize, t: f64) -> Result<f64> {
    let m = 1u64 << n_eps;
    if k >= m {
        return Err(Error::IndexOutOfRange {
            index: k as usize,
            size: m as usize,
        });
    }
    if !(t.is_finite() && t > 0.0) {
        return Err(invalid(format!("evolution time must be positive, got {t}")));
    }
    Ok(2.0 * PI * k as f64 / (m as f64 * t))
}

/// Base time `0.9 · 2π / max|E|`; 1 for a zero spectrum.
pub fn default_time(spectral_radius: f64) -> f64 {
    if spectral_radius > 0.0 {
        0.9 * 2.0 * PI / spectral_radius
    } else {
        1.0
    }
}

/// How the controlled powers are realized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Evolution {
    /// `exp(iHt 2^j)` from the eigendecomposition.
    Exact,
    /// `U` is `steps` first-order Trotter steps of the open Ising chain,
    /// raised to `2^j` by repeated squaring.
    TrotterIsing {
        n_sites: usize,
        coupling: f64,
        field: f64,
        steps: usize,
    },
}

#[derive(Debug, Clone)]
pub struct QpeConfig {
    pub hamiltonian: DenseHamiltonian,
    pub n_eps: usize,
    /// Base evolution time; `None` picks [`default_time`].
    pub time: Option<f64>,
    pub initial: StateVector,
    pub shots: usize,
    pub seed: u64,
    /// Permit `max|E| t ≥ 2π`; phases then wrap modulo `2π`.
    pub allow_aliasing: bool,
    pub evolution: Evolution,
}

impl QpeConfig {
    pub fn new(hamiltonian: DenseHamiltonian, initial: StateVector, n_eps: usize) -> Self {
        QpeConfig {
            hamiltonian,
            n_eps,
            time: None,
            initial,
            shots: 4096,
            seed: 0,
            allow_aliasing: false,
            evolution: Evolution::Exact,
        }
    }

    pub fn with_time(mut self, t: f64) -> Self {
        self.time = Some(t);
        self
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots = shots;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_aliasing(mut self, allow: bool) -> Self {
        self.allow_aliasing = allow;
        self
    }

    pub fn with_evolution(mut self, evolution: Evolution) -> Self {
        self.evolution = evolution;
        self
    }
}

/// Prepared phase-estimation circuit for one Hamiltonian, reusable across
/// initial states.
#[derive(Debug, Clone)]
pub struct QpeEngine {
    n_sys: usize,
    n_eps: usize,
    time: f64,
    spectral_radius: f64,
    circuit: Circuit,
}

/// Upper bound on `n_sys + n_eps`.
pub const MAX_TOTAL_QUBITS: usize = 22;

impl QpeEngine {
    pub fn new(
        hamiltonian: &DenseHamiltonian,
        n_eps: usize,
        time: Option<f64>,
        allow_aliasing: bool,
        evolution: Evolution,
    ) -> Result<Self> {
        if n_eps == 0 {
            return Err(invalid("need at least one counting qubit"));
        }
        let propagator = Propagator::new(hamiltonian)?;
        let n_sys = propagator.n_qubits();
        if n_sys + n_eps > MAX_TOTAL_QUBITS {
            return Err(Error::DimensionTooLarge {
                dim: 1 << (n_sys + n_eps),
                max: 1 << MAX_TOTAL_QUBITS,
            });
        }
        let radius = propagator.spectral_radius();
        let time = time.unwrap_or_else(|| default_time(radius));
        if !(time.is_finite() && time > 0.0) {
            return Err(invalid(format!("evolution time must be positive, got {time}")));
        }
        let phase = radius * time;
        if phase >= 2.0 * PI && !allow_aliasing {
            return Err(Error::Aliasing { phase });
        }

        let mut circuit = Circuit::new(n_sys + n_eps);
        for j in 0..n_eps {
            circuit.push(Gate::H { qubit: n_sys + j })?;
        }
        match evolution {
            Evolution::Exact => {
                for j in 0..n_eps {
                    circuit.push(Gate::controlled_power(n_sys + j, 0, &propagator, time, 1u64 << j))?;
                }
            }
            Evolution::TrotterIsing {
                n_sites,
                coupling,
                field,
                steps,
            } => {
                if n_sites != n_sys {
                    return Err(Error::LengthMismatch {
                        expected: n_sys,
                        found: n_sites,
                    });
                }
                let mut u = trotter_evolution_ising(n_sites, coupling, field, time, steps)?.unitary()?;
                for j in 0..n_eps {
                    circuit.push(Gate::controlled_matrix(n_sys + j, 0, u.clone(), 1u64 << j)?)?;
                    u = &u * &u;
                }
            }
        }
        circuit.push(Gate::Qft {
            start: n_sys,
            len: n_eps,
            inverse: true,
        })?;
        Ok(QpeEngine {
            n_sys,
            n_eps,
            time,
            spectral_radius: radius,
            circuit,
        })
    }

    pub fn from_config(cfg: &QpeConfig) -> Result<Self> {
        Self::new(&cfg.hamiltonian, cfg.n_eps, cfg.time, cfg.allow_aliasing, cfg.evolution)
    }

    pub fn n_sys(&self) -> usize {
        self.n_sys
    }

    pub fn n_eps(&self) -> usize {
        self.n_eps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn spectral_radius(&self) -> f64 {
        self.spectral_radius
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    /// Joint state after the circuit, counting register initialized to zero.
    pub fn final_state(&self, initial: &StateVector) -> Result<StateVector> {
        if initial.n_qubits() != self.n_sys {
            return Err(Error::LengthMismatch {
                expected: self.n_sys,
                found: initial.n_qubits(),
            });
        }
        let mut state = initial.tensor_above(&StateVector::zero(self.n_eps));
        state.run(&self.circuit)?;
        Ok(state)
    }

    /// Joint probabilities indexed `[phase][system]`.
    pub fn joint_probabilities(&self, initial: &StateVector) -> Result<Vec<Vec<f64>>> {
        let probs = self.final_state(initial)?.probabilities();
        Ok(probs.chunks(1 << self.n_sys).map(|c| c.to_vec()).collect())
    }

    pub fn run(&self, initial: &StateVector, shots: usize, seed: u64) -> Result<QpeOutcome> {
        if shots == 0 {
            return Err(invalid("need at least one shot"));
        }
        let state = self.final_state(initial)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mask = (1usize << self.n_sys) - 1;
        let records: Vec<(u64, usize)> = state
            .sample(shots, &mut rng)
            .into_iter()
            .map(|idx| ((idx >> self.n_sys) as u64, idx & mask))
            .collect();
        let mut histogram = BTreeMap::new();
        for &r in &records {
            *histogram.entry(r).or_insert(0u64) += 1;
        }
        Ok(QpeOutcome {
            n_sys: self.n_sys,
            n_eps: self.n_eps,
            time: self.time,
            records,
            histogram,
        })
    }
}

pub fn build_qpe_circuit(cfg: &QpeConfig) -> Result<Circuit> {
    Ok(QpeEngine::from_config(cfg)?.circuit)
}

pub fn run_qpe(cfg: &QpeConfig) -> Result<QpeOutcome> {
    QpeEngine::from_config(cfg)?.run(&cfg.initial, cfg.shots, cfg.seed)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QpeOutcome {
    pub n_sys: usize,
    pub n_eps: usize,
    pub time: f64,
    /// `(phase readout, system readout)` per shot.
    pub records: Vec<(u64, usize)>,
    /// Joint counts keyed by `(phase, system)`; derived from `records`.
    #[serde(skip)]
    pub histogram: BTreeMap<(u64, usize), u64>,
}

impl QpeOutcome {
    pub fn shots(&self) -> usize {
        self.records.len()
    }

    pub fn phase_histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; 1 << self.n_eps];
        for &(k, _) in &self.records {
            h[k as usize] += 1;
        }
        h
    }

    pub fn system_histogram(&self) -> Vec<u64> {
        let mut h = vec![0u64; 1 << self.n_sys];
        for &(_, s) in &self.records {
            h[s] += 1;
        }
        h
    }

    /// Most frequent phase readout; ties go to the smaller integer.
    pub fn modal_phase(&self) -> u64 {
        let h = self.phase_histogram();
        let mut best = 0;
        for (k, &c) in h.iter().enumerate() {
            if c > h[best] {
                best = k;
            }
        }
        best as u64
    }

    pub fn modal_energy(&self) -> f64 {
        phase_to_energy(self.modal_phase(), self.n_eps, self.time).expect("readout is in range")
    }
}

/// Fraction of shots whose system readout lies in `targets`.
pub fn hopping_probability(outcome: &QpeOutcome, targets: &[usize]) -> Result<f64> {
    if outcome.records.is_empty() {
        return Err(invalid("outcome has no shots"));
    }
    let hits = outcome.records.iter().filter(|(_, s)| targets.contains(s)).count();
    Ok(hits as f64 / outcome.records.len() as f64)
}

/// `|1…1⟩` of an `n`-qubit register.
pub fn all_ones(n: usize) -> usize {
    (1usize << n) - 1
}

/// Phase-estimation kernel `K(φ) = 2^{-N} Σ_y e^{iyφ}`, with `φ` the phase
/// offset from the readout bin.
pub fn qpe_kernel(phi: f64, n_eps: usize) -> C64 {
    let m = (1u64 << n_eps) as f64;
    let d = phi - 2.0 * PI * (phi / (2.0 * PI)).round();
    let half = 0.5 * d;
    if half.sin().abs() < 1e-14 {
        return C64::new(1.0, 0.0);
    }
    C64::from_polar((m * half).sin() / (m * half.sin()), (m - 1.0) * half)
}

/// Joint readout probabilities from the eigen-expansion of the input,
/// `P(k, x) = |Σ_n c_n ψ_n(x) K(E_n t - 2πk/2^N)|²`.
pub fn analytic_joint_probabilities(
    h: &DenseHamiltonian,
    initial: &StateVector,
    n_eps: usize,
    t: f64,
) -> Result<Vec<Vec<f64>>> {
    let prop = Propagator::new(h)?;
    let spec = prop.spectrum();
    let coeffs = spec.overlaps(initial.amplitudes());
    let m = 1usize << n_eps;
    let dim = h.dim();
    let vecs: &DMatrix<C64> = spec.eigenvectors();
    let mut out = vec![vec![0.0; dim]; m];
    for (k, row) in out.iter_mut().enumerate() {
        let kernels: Vec<C64> = spec
            .eigenvalues()
            .iter()
            .map(|&e| qpe_kernel(e * t - 2.0 * PI * k as f64 / m as f64, n_eps))
            .collect();
        for (x, p) in row.iter_mut().enumerate() {
            let amp: C64 = (0..dim).map(|n| coeffs[n] * vecs[(x, n)] * kernels[n]).sum();
            *p = amp.norm_sqr();
        }
    }
    Ok(out)
}

/// Draws single phase-estimation shots from the eigen-expansion of the
/// input instead of simulating the full register.
///
/// Summed over `x`, the joint law is the mixture `P(k) = Σ_n |c_n|² |K_n(k)|²`,
/// so a shot picks `n` with weight `|c_n|²`, then `k` from the Fejér law of
/// `E_n t`, then `x` from `|Σ_n c_n K_n(k) ψ_n(x)|²`. The cost per shot is
/// `O(2^{n_eps} + dim²)` rather than `O(2^{n_eps} dim²)`.
#[derive(Debug, Clone)]
pub struct SpectralQpe {
    spectrum: crate::spectral::SpectralResult,
    n_sys: usize,
    n_eps: usize,
    time: f64,
}

/// Largest counting register [`SpectralQpe`] accepts.
pub const MAX_SPECTRAL_COUNTING_QUBITS: usize = 24;

impl SpectralQpe {
    pub fn new(propagator: &Propagator, n_eps: usize, time: Option<f64>, allow_aliasing: bool) -> Result<Self> {
        if n_eps == 0 || n_eps > MAX_SPECTRAL_COUNTING_QUBITS {
            return Err(invalid(format!(
                "counting register must have 1..={MAX_SPECTRAL_COUNTING_QUBITS} qubits, got {n_eps}"
            )));
        }
        let radius = propagator.spectral_radius();
        let time = time.unwrap_or_else(|| default_time(radius));
        if !(time.is_finite() && time > 0.0) {
            return Err(invalid(format!("evolution time must be positive, got {time}")));
        }
        if radius * time >= 2.0 * PI && !allow_aliasing {
            return Err(Error::Aliasing { phase: radius * time });
        }
        Ok(SpectralQpe {
            spectrum: propagator.spectrum().clone(),
            n_sys: propagator.n_qubits(),
            n_eps,
            time,
        })
    }

    pub fn n_eps(&self) -> usize {
        self.n_eps
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn shot<R: rand::Rng + ?Sized>(&self, initial: &StateVector, rng: &mut R) -> Result<(u64, usize)> {
        if initial.n_qubits() != self.n_sys {
            return Err(Error::LengthMismatch {
                expected: self.n_sys,
                found: initial.n_qubits(),
            });
        }
        let coeffs = self.spectrum.overlaps(initial.amplitudes());
        let weights: Vec<f64> = coeffs.iter().map(|c| c.norm_sqr()).collect();
        let n = CdfSampler::new(&weights).draw(rng);

        let m = 1usize << self.n_eps;
        let k = draw_fejer(self.spectrum.eigenvalues()[n] * self.time, self.n_eps, rng);

        let kernels: Vec<C64> = self
            .spectrum
            .eigenvalues()
            .iter()
            .map(|&e| qpe_kernel(e * self.time - 2.0 * PI * k as f64 / m as f64, self.n_eps))
            .collect();
        let vecs = self.spectrum.eigenvectors();
        let dim = vecs.nrows();
        let probs: Vec<f64> = (0..dim)
            .map(|x| {
                (0..dim)
                    .map(|j| coeffs[j] * kernels[j] * vecs[(x, j)])
                    .sum::<C64>()
                    .norm_sqr()
            })
            .collect();
        let x = CdfSampler::new(&probs).draw(rng);
        Ok((k as u64, x))
    }

    pub fn run(&self, initial: &StateVector, shots: usize, seed: u64) -> Result<QpeOutcome> {
        if shots == 0 {
            return Err(invalid("need at least one shot"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let records = (0..shots)
            .map(|_| self.shot(initial, &mut rng))
            .collect::<Result<Vec<_>>>()?;
        let mut histogram = BTreeMap::new();
        for &r in &records {
            *histogram.entry(r).or_insert(0u64) += 1;
        }
        Ok(QpeOutcome {
            n_sys: self.n_sys,
            n_eps: self.n_eps,
            time: self.time,
            records,
            histogram,
        })
    }
}

/// Half-width of the readout window tabulated around the Fejér peak.
const FEJER_WINDOW: usize = 64;

/// Draws `k` with probability `|K(φ - 2πk/M)|²`. The kernel sums to one
/// over `k`, so the window around the peak is sampled directly and the
/// whole register is tabulated only when the draw lands in the tail
/// (probability below `1/(π² W)`).
fn draw_fejer<R: rand::Rng + ?Sized>(phase: f64, n_eps: usize, rng: &mut R) -> usize {
    let m = 1usize << n_eps;
    let law = |k: usize| qpe_kernel(phase - 2.0 * PI * k as f64 / m as f64, n_eps).norm_sqr();
    if 2 * FEJER_WINDOW + 1 >= m {
        let p: Vec<f64> = (0..m).map(law).collect();
        return CdfSampler::new(&p).draw(rng);
    }
    let center = (phase * m as f64 / (2.0 * PI)).round().rem_euclid(m as f64) as usize;
    let window: Vec<usize> = (0..=2 * FEJER_WINDOW)
        .map(|o| (center + m + o - FEJER_WINDOW) % m)
        .collect();
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for &k in &window {
        acc += law(k);
        if u < acc {
            return k;
        }
    }
    let mut tail: Vec<f64> = (0..m).map(law).collect();
    for &k in &window {
        tail[k] = 0.0;
    }
    CdfSampler::new(&tail).draw(rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{build_ising_hamiltonian, diagonalize, two_site_double_well};
    use nalgebra::DVector;
    use proptest::prelude::*;

    #[test]
    fn windowed_fejer_draw_matches_the_kernel() {
        use rand::SeedableRng;
        let n_eps = 8;
        let m = 1usize << n_eps;
        let phase = 2.0 * PI * 37.3 / m as f64;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let draws = 200_000;
        let mut counts = vec![0u64; m];
        for _ in 0..draws {
            counts[draw_fejer(phase, n_eps, &mut rng)] += 1;
        }
        let mut tail = 0u64;
        for (k, &c) in counts.iter().enumerate() {
            let p = qpe_kernel(phase - 2.0 * PI * k as f64 / m as f64, n_eps).norm_sqr();
            let sigma = (draws as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((c as f64 - draws as f64 * p).abs() < 5.0 * sigma, "k={k}");
            if (k as i64 - 37).abs() > FEJER_WINDOW as i64 {
                tail += c;
            }
        }
        assert!(tail > 0, "tail never sampled");
    }

    fn diag_h(values: &[f64]) -> DenseHamiltonian {
        DenseHamiltonian::from_real(&DMatrix::from_diagonal(&DVector::from_vec(values.to_vec()))).unwrap()
    }

    #[test]
    fn counting_qubit_formula() {
        assert_eq!(required_counting_qubits(0.5, 4).unwrap(), 6);
        assert_eq!(required_counting_qubits(0.25, 10).unwrap(), 12);
        let mut prev = 0;
        for eps in [0.9, 0.5, 0.1, 0.01, 1e-4, 1e-8] {
            let n = required_counting_qubits(eps, 3).unwrap();
            assert!(n >= prev);
            prev = n;
        }
        assert!(required_counting_qubits(1e-12, 0).unwrap() > 35);
        assert!(required_counting_qubits(0.0, 3).is_err());
        assert!(required_counting_qubits(1.0, 3).is_err());
    }

    #[test]
    fn phase_to_energy_examples() {
        assert_eq!(phase_to_energy(0, 5, 1.0).unwrap(), 0.0);
        assert!((phase_to_energy(1 << 9, 10, 1.0).unwrap() - PI).abs() < 1e-15);
        assert!(phase_to_energy(1 << 10, 10, 1.0).is_err());
    }

    #[test]
    fn half_phase_reads_one() {
        let h = diag_h(&[0.0, PI]);
        let cfg = QpeConfig::new(h, StateVector::basis(1, 1).unwrap(), 1)
            .with_time(1.0)
            .with_aliasing(false);
        // E t = π exactly at the anti-aliasing boundary's half
        let out = run_qpe(&cfg).unwrap();
        assert!(out.records.iter().all(|&(k, s)| k == 1 && s == 1));
    }

    #[test]
    fn representable_phase_is_read_exactly() {
        let n_eps = 5;
        for k in [0u64, 3, 17, 31] {
            let e = 2.0 * PI * k as f64 / 32.0;
            let h = diag_h(&[e, 0.1]);
            let cfg = QpeConfig::new(h, StateVector::basis(1, 0).unwrap(), n_eps)
                .with_time(1.0)
                .with_shots(200);
            let out = run_qpe(&cfg).unwrap();
            assert!(out.records.iter().all(|&(r, _)| r == k), "k={k}");
        }
    }

    #[test]
    fn eigenstate_is_a_fixed_point() {
        let h = build_ising_hamiltonian(3, 1.0, 0.1).unwrap();
        let spec = diagonalize(&h).unwrap();
        let psi0 = StateVector::from_amplitudes(spec.vector(0)).unwrap();
        let shots = 20_000;
        let cfg = QpeConfig::new(h, psi0.clone(), 6)
            .with_time(0.5)
            .with_shots(shots)
            .with_seed(3);
        let out = run_qpe(&cfg).unwrap();
        let hist = out.system_histogram();
        for (x, p) in psi0.probabilities().iter().enumerate() {
            let sigma = (shots as f64 * p * (1.0 - p)).sqrt().max(1.0);
            assert!((hist[x] as f64 - shots as f64 * p).abs() < 4.0 * sigma, "x={x}");
        }
        // the system register is left in ψ₀ for every phase branch
        let engine = QpeEngine::from_config(&cfg).unwrap();
        let joint = engine.joint_probabilities(&psi0).unwrap();
        for row in &joint {
            let w: f64 = row.iter().sum();
            if w > 1e-12 {
                for (x, p) in row.iter().enumerate() {
                    assert!((p / w - psi0.probabilities()[x]).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn circuit_matches_eigen_expansion() {
        let h = build_ising_hamiltonian(2, 1.0, 0.3).unwrap();
        let init = StateVector::from_real(&[0.8, 0.1, -0.3, 0.5]).unwrap();
        for n_eps in 1..=6 {
            let engine = QpeEngine::new(&h, n_eps, Some(0.7), false, Evolution::Exact).unwrap();
            let sim = engine.joint_probabilities(&init).unwrap();
            let oracle = analytic_joint_probabilities(&h, &init, n_eps, 0.7).unwrap();
            for (a, b) in sim.iter().flatten().zip(oracle.iter().flatten()) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn aliasing_is_rejected_unless_allowed() {
        let h = build_ising_hamiltonian(4, 1.0, 0.1).unwrap();
        assert!(matches!(
            QpeEngine::new(&h, 3, Some(1.0), false, Evolution::Exact),
            Err(Error::Aliasing { .. })
        ));
        assert!(QpeEngine::new(&h, 3, Some(1.0), true, Evolution::Exact).is_ok());
        let e = QpeEngine::new(&h, 3, None, false, Evolution::Exact).unwrap();
        assert!(e.spectral_radius() * e.time() < 2.0 * PI);
        assert!(QpeEngine::new(&h, 0, None, false, Evolution::Exact).is_err());
        assert!(e.final_state(&StateVector::zero(3)).is_err());
    }

    #[test]
    fn modal_energy_resolves_classical_ising() {
        // Γ = 0: eigenvalues {1, 3} for two sites
        let h = build_ising_hamiltonian(2, 1.0, 0.0).unwrap();
        let exact = diagonalize(&h).unwrap();
        for n_eps in [4, 6, 8] {
            for (input, _) in [(0usize, 0.0), (1, 2.0)] {
                let cfg = QpeConfig::new(h.clone(), StateVector::basis(2, input).unwrap(), n_eps)
                    .with_time(1.0)
                    .with_shots(500);
                let out = run_qpe(&cfg).unwrap();
                let e = out.modal_energy();
                let bin = 2.0 * PI / ((1u64 << n_eps) as f64);
                let nearest = exact
                    .eigenvalues()
                    .iter()
                    .map(|v| (v - e).abs())
                    .fold(f64::INFINITY, f64::min);
                assert!(nearest <= bin, "n_eps={n_eps}: {e}");
            }
        }
    }

    #[test]
    fn classical_ising_never_hops() {
        let h = build_ising_hamiltonian(3, 1.0, 0.0).unwrap();
        for n_eps in [2, 6, 10] {
            let cfg = QpeConfig::new(h.clone(), StateVector::zero(3), n_eps)
                .with_time(1.0)
                .with_shots(1000);
            let out = run_qpe(&cfg).unwrap();
            assert_eq!(hopping_probability(&out, &[all_ones(3)]).unwrap(), 0.0);
        }
    }

    #[test]
    fn outcome_bookkeeping() {
        let h = two_site_double_well(1.0).unwrap();
        let cfg = QpeConfig::new(h, StateVector::zero(2), 4)
            .with_time(1.0)
            .with_shots(4096)
            .with_seed(9);
        let out = run_qpe(&cfg).unwrap();
        assert_eq!(out.histogram.values().sum::<u64>(), 4096);
        assert_eq!(out.phase_histogram().iter().sum::<u64>(), 4096);
        assert_eq!(hopping_probability(&out, &[0, 1, 2, 3]).unwrap(), 1.0);
        assert_eq!(run_qpe(&cfg).unwrap(), out);
        let p = hopping_probability(&out, &[3]).unwrap();
        assert!((0.40..=0.60).contains(&p), "{p}");
    }

    #[test]
    fn trotterized_ladder_approaches_exact() {
        let h = build_ising_hamiltonian(2, 1.0, 0.1).unwrap();
        let init = StateVector::zero(2);
        let exact = QpeEngine::new(&h, 5, Some(1.0), false, Evolution::Exact).unwrap();
        let p_exact = exact.joint_probabilities(&init).unwrap();
        let dist = |steps| {
            let ev = Evolution::TrotterIsing {
                n_sites: 2,
                coupling: 1.0,
                field: 0.1,
                steps,
            };
            let trot = QpeEngine::new(&h, 5, Some(1.0), false, ev).unwrap();
            let p = trot.joint_probabilities(&init).unwrap();
            p.iter()
                .flatten()
                .zip(p_exact.iter().flatten())
                .map(|(a, b)| (a - b).abs())
                .sum::<f64>()
        };
        let coarse = dist(2);
        let fine = dist(64);
        assert!(fine < coarse && fine < 1e-2, "{coarse} {fine}");
    }

    #[test]
    fn kernel_closed_form_matches_sum() {
        for n_eps in [1usize, 3, 6] {
            let m = 1usize << n_eps;
            for phi in [0.0, 1e-9, 0.3, -2.0, 2.0 * PI, 7.1, 2.0 * PI * 3.0 / m as f64] {
                let sum = (0..m).map(|y| C64::from_polar(1.0, y as f64 * phi)).sum::<C64>() / m as f64;
                assert!((qpe_kernel(phi, n_eps) - sum).norm() < 1e-9, "n_eps={n_eps} phi={phi}");
            }
        }
    }

    #[test]
    fn spectral_sampler_matches_circuit_law() {
        let h = two_site_double_well(1.0).unwrap();
        let init = StateVector::from_real(&[0.9, 0.3, -0.2, 0.1]).unwrap();
        let n_eps = 4;
        let exact = QpeEngine::new(&h, n_eps, Some(1.0), false, Evolution::Exact)
            .unwrap()
            .joint_probabilities(&init)
            .unwrap();
        let prop = Propagator::new(&h).unwrap();
        let sampler = SpectralQpe::new(&prop, n_eps, Some(1.0), false).unwrap();
        let shots = 40_000;
        let out = sampler.run(&init, shots, 5).unwrap();
        for (k, row) in exact.iter().enumerate() {
            for (x, p) in row.iter().enumerate() {
                let count = *out.histogram.get(&(k as u64, x)).unwrap_or(&0) as f64;
                let sigma = (shots as f64 * p * (1.0 - p)).sqrt().max(1.0);
                assert!(
                    (count - shots as f64 * p).abs() < 4.5 * sigma,
                    "k={k} x={x}: {count} vs {}",
                    shots as f64 * p
                );
            }
        }
        assert_eq!(sampler.run(&init, 100, 5).unwrap(), sampler.run(&init, 100, 5).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn modal_readout_within_one_bin(e in 0.0f64..6.0, n_eps in 2usize..8) {
            let h = diag_h(&[e, 0.0]);
            let cfg = QpeConfig::new(h, StateVector::basis(1, 0).unwrap(), n_eps).with_time(1.0).with_shots(400);
            let out = run_qpe(&cfg).unwrap();
            let bin = 2.0 * PI / (1u64 << n_eps) as f64;
            let err = (out.modal_energy() - e).abs();
            // distance on the phase circle
            let wrapped = err.min(2.0 * PI - err);
            prop_assert!(wrapped <= bin + 1e-12, "{} vs {}", out.modal_energy(), e);
        }
    }
}
