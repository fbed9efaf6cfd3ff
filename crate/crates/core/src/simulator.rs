//! Dense statevector simulator.
//!
//! Qubit `q` is bit `q` of the basis index (little-endian). A register
//! `[start, start + len)` holds the integer `Σ_r bit(start + r) 2^r`.
//! Rotations follow `R_a(θ) = exp(-iθσ_a/2)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{invalid, Error, Result};
use crate::spectral::{diagonalize, DenseHamiltonian, SpectralResult};
use crate::C64;

/// States at or above this many amplitudes use the parallel kernels.
const PAR_THRESHOLD: usize = 1 << 14;

/// Largest dimension [`exact_unitary`] will exponentiate.
pub const MAX_UNITARY_DIM: usize = 1 << 12;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

type Mat2 = [[C64; 2]; 2];

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "gate", rename_all = "snake_case")]
pub enum Gate {
    Rx {
        theta: f64,
        qubit: usize,
    },
    Ry {
        theta: f64,
        qubit: usize,
    },
    Rz {
        theta: f64,
        qubit: usize,
    },
    X {
        qubit: usize,
    },
    H {
        qubit: usize,
    },
    Cnot {
        control: usize,
        target: usize,
    },
    /// `diag(1, 1, 1, e^{iθ})` on the pair.
    CPhase {
        theta: f64,
        control: usize,
        target: usize,
    },
    Swap {
        a: usize,
        b: usize,
    },
    /// `exp(iλ σᶻ_a σᶻ_b)`.
    Zz {
        lambda: f64,
        a: usize,
        b: usize,
    },
    /// `|y⟩ → 2^{-len/2} Σ_k e^{±2πi yk/2^len} |k⟩` on `[start, start+len)`.
    Qft {
        start: usize,
        len: usize,
        inverse: bool,
    },
    /// Centered QFT: the QFT followed by a cyclic half-shift (X on the top qubit).
    Cqft {
        start: usize,
        len: usize,
        inverse: bool,
    },
    /// Controlled `U^power` on the register `[start, start+len)`. The stored
    /// matrix is already the requested power.
    ControlledPower {
        control: usize,
        start: usize,
        len: usize,
        power: u64,
        #[serde(rename = "dim", serialize_with = "serialize_dim")]
        matrix: Arc<DMatrix<C64>>,
    },
}

fn serialize_dim<S: Serializer>(m: &Arc<DMatrix<C64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u64(m.nrows() as u64)
}

impl Gate {
    /// Controlled `exp(i H t·power)` on `[start, start + log₂ dim)`.
    pub fn controlled_power(control: usize, start: usize, propagator: &Propagator, base_time: f64, power: u64) -> Gate {
        let matrix = propagator.unitary(base_time * power as f64);
        Gate::ControlledPower {
            control,
            start,
            len: propagator.n_qubits(),
            power,
            matrix: Arc::new(matrix),
        }
    }

    /// Controlled application of an explicit unitary.
    pub fn controlled_matrix(control: usize, start: usize, matrix: DMatrix<C64>, power: u64) -> Result<Gate> {
        let dim = matrix.nrows();
        if dim != matrix.ncols() || !dim.is_power_of_two() {
            return Err(invalid("controlled matrix must be square with power-of-two size"));
        }
        Ok(Gate::ControlledPower {
            control,
            start,
            len: dim.trailing_zeros() as usize,
            power,
            matrix: Arc::new(matrix),
        })
    }

    /// Every qubit the gate touches.
    pub fn qubits(&self) -> Vec<usize> {
        match *self {
            Gate::Rx { qubit, .. }
            | Gate::Ry { qubit, .. }
            | Gate::Rz { qubit, .. }
            | Gate::X { qubit }
            | Gate::H { qubit } => {
                vec![qubit]
            }
            Gate::Cnot { control, target } | Gate::CPhase { control, target, .. } => vec![control, target],
            Gate::Swap { a, b } | Gate::Zz { a, b, .. } => vec![a, b],
            Gate::Qft { start, len, .. } | Gate::Cqft { start, len, .. } => (start..start + len).collect(),
            Gate::ControlledPower {
                control, start, len, ..
            } => {
                let mut q = vec![control];
                q.extend(start..start + len);
                q
            }
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx { theta, .. } | Gate::Ry { theta, .. } | Gate::Rz { theta, .. } | Gate::CPhase { theta, .. } => {
                Some(theta)
            }
            Gate::Zz { lambda, .. } => Some(lambda),
            _ => None,
        }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let qs = self.qubits();
        if let Some(&bad) = qs.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::IndexOutOfRange {
                index: bad,
                size: n_qubits,
            });
        }
        for (i, a) in qs.iter().enumerate() {
            if qs[i + 1..].contains(a) {
                return Err(invalid(format!("gate uses qubit {a} twice")));
            }
        }
        if let Some(angle) = self.angle() {
            if !angle.is_finite() {
                return Err(invalid(format!("non-finite rotation angle {angle}")));
            }
        }
        if let Gate::Qft { len: 0, .. } | Gate::Cqft { len: 0, .. } = self {
            return Err(invalid("QFT register must be non-empty"));
        }
        Ok(())
    }

    /// Decomposes composite gates into one- and two-qubit primitives.
    /// `Zz` becomes CNOT · Rz(-2λ) · CNOT; the QFT becomes H, controlled
    /// phases and a final qubit reversal.
    pub fn decompose(&self) -> Vec<Gate> {
        match *self {
            Gate::Zz { lambda, a, b } => vec![
                Gate::Cnot { control: a, target: b },
                Gate::Rz {
                    theta: -2.0 * lambda,
                    qubit: b,
                },
                Gate::Cnot { control: a, target: b },
            ],
            Gate::Qft { start, len, inverse } => qft_gates(start, len, inverse),
            Gate::Cqft { start, len, inverse } => {
                let top = Gate::X { qubit: start + len - 1 };
                let mut g = qft_gates(start, len, inverse);
                if inverse {
                    g.insert(0, top);
                } else {
                    g.push(top);
                }
                g
            }
            _ => vec![self.clone()],
        }
    }
}

fn qft_gates(start: usize, len: usize, inverse: bool) -> Vec<Gate> {
    let mut gates = Vec::with_capacity(len * (len + 1) / 2 + len / 2);
    for r in (0..len).rev() {
        gates.push(Gate::H { qubit: start + r });
        for lower in (0..r).rev() {
            let k = r - lower;
            gates.push(Gate::CPhase {
                theta: std::f64::consts::PI / (1u64 << k) as f64,
                control: start + lower,
                target: start + r,
            });
        }
    }
    for r in 0..len / 2 {
        gates.push(Gate::Swap {
            a: start + r,
            b: start + len - 1 - r,
        });
    }
    if inverse {
        gates.reverse();
        for g in gates.iter_mut() {
            if let Gate::CPhase { theta, .. } = g {
                *theta = -*theta;
            }
        }
    }
    gates
}

/// Ordered gate list on a fixed number of qubits, plus a global phase
/// `e^{iφ}` applied after the gates.
#[derive(Debug, Clone, Serialize)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<Gate>,
    global_phase: f64,
}

impl Circuit {
    pub fn new(n_qubits: usize) -> Self {
        Circuit {
            n_qubits,
            gates: Vec::new(),
            global_phase: 0.0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn global_phase(&self) -> f64 {
        self.global_phase
    }

    pub fn add_global_phase(&mut self, phi: f64) {
        self.global_phase += phi;
    }

    pub fn push(&mut self, gate: Gate) -> Result<&mut Self> {
        gate.validate(self.n_qubits)?;
        self.gates.push(gate);
        Ok(self)
    }

    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        if other.n_qubits > self.n_qubits {
            return Err(invalid("appended circuit is wider than the target"));
        }
        for g in &other.gates {
            self.push(g.clone())?;
        }
        self.global_phase += other.global_phase;
        Ok(())
    }

    /// Same circuit with composite gates expanded into primitives.
    pub fn decomposed(&self) -> Circuit {
        Circuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().flat_map(Gate::decompose).collect(),
            global_phase: self.global_phase,
        }
    }

    /// Dense unitary, column `k` being the circuit applied to `|k⟩`.
    pub fn unitary(&self) -> Result<DMatrix<C64>> {
        let dim = 1usize << self.n_qubits;
        if dim > MAX_UNITARY_DIM {
            return Err(Error::DimensionTooLarge {
                dim,
                max: MAX_UNITARY_DIM,
            });
        }
        let mut u = DMatrix::<C64>::zeros(dim, dim);
        for k in 0..dim {
            let mut s = StateVector::basis(self.n_qubits, k)?;
            s.run(self)?;
            u.set_column(k, &DVector::from_column_slice(s.amplitudes()));
        }
        Ok(u)
    }

    /// JSON gate list for inspection; controlled matrices are summarized by size.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("circuit serializes")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amps: Vec<C64>,
}

impl StateVector {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![C64::default(); 1 << n_qubits];
        amps[0] = c(1.0, 0.0);
        StateVector { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, size: dim });
        }
        let mut amps = vec![C64::default(); dim];
        amps[index] = c(1.0, 0.0);
        Ok(StateVector { n_qubits, amps })
    }

    /// Normalized copy of an arbitrary amplitude vector of power-of-two length.
    pub fn from_amplitudes(amps: Vec<C64>) -> Result<Self> {
        let dim = amps.len();
        if dim == 0 || !dim.is_power_of_two() {
            return Err(invalid(format!("state length must be a power of two, got {dim}")));
        }
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::ZeroNorm);
        }
        Ok(StateVector {
            n_qubits: dim.trailing_zeros() as usize,
            amps: amps.into_iter().map(|z| z / norm).collect(),
        })
    }

    pub fn from_real(values: &[f64]) -> Result<Self> {
        Self::from_amplitudes(values.iter().map(|&v| c(v, 0.0)).collect())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|z| z.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<C64> {
        if self.dim() != other.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }

    /// `other ⊗ self`: `self` keeps the low qubits, `other` is placed above.
    pub fn tensor_above(&self, other: &StateVector) -> StateVector {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for hi in &other.amps {
            amps.extend(self.amps.iter().map(|lo| lo * hi));
        }
        StateVector {
            n_qubits: self.n_qubits + other.n_qubits,
            amps,
        }
    }

    pub fn scale_phase(&mut self, phi: f64) {
        let p = C64::from_polar(1.0, phi);
        self.amps.iter_mut().for_each(|z| *z *= p);
    }

    pub fn apply(&mut self, gate: &Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        let a = &mut self.amps;
        match *gate {
            Gate::Rx { theta, qubit } => {
                let (co, si) = ((0.5 * theta).cos(), (0.5 * theta).sin());
                apply_1q(a, qubit, [[c(co, 0.0), c(0.0, -si)], [c(0.0, -si), c(co, 0.0)]]);
            }
            Gate::Ry { theta, qubit } => {
                let (co, si) = ((0.5 * theta).cos(), (0.5 * theta).sin());
                apply_1q(a, qubit, [[c(co, 0.0), c(-si, 0.0)], [c(si, 0.0), c(co, 0.0)]]);
            }
            Gate::Rz { theta, qubit } => {
                let lo = C64::from_polar(1.0, -0.5 * theta);
                let hi = C64::from_polar(1.0, 0.5 * theta);
                apply_diagonal(a, |i| if i >> qubit & 1 == 0 { lo } else { hi });
            }
            Gate::X { qubit } => {
                apply_1q(a, qubit, [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]]);
            }
            Gate::H { qubit } => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                apply_1q(a, qubit, [[c(s, 0.0), c(s, 0.0)], [c(s, 0.0), c(-s, 0.0)]]);
            }
            Gate::Cnot { control, target } => {
                apply_controlled_1q(
                    a,
                    control,
                    target,
                    [[c(0.0, 0.0), c(1.0, 0.0)], [c(1.0, 0.0), c(0.0, 0.0)]],
                );
            }
            Gate::CPhase { theta, control, target } => {
                let p = C64::from_polar(1.0, theta);
                let mask = (1 << control) | (1 << target);
                apply_diagonal(a, |i| if i & mask == mask { p } else { c(1.0, 0.0) });
            }
            Gate::Swap { a: qa, b: qb } => {
                let (ma, mb) = (1usize << qa, 1usize << qb);
                for i in 0..a.len() {
                    if i & ma != 0 && i & mb == 0 {
                        a.swap(i, i ^ ma ^ mb);
                    }
                }
            }
            Gate::Zz { lambda, a: qa, b: qb } => {
                let same = C64::from_polar(1.0, lambda);
                let diff = C64::from_polar(1.0, -lambda);
                apply_diagonal(a, |i| if (i >> qa & 1) == (i >> qb & 1) { same } else { diff });
            }
            Gate::Qft { .. } | Gate::Cqft { .. } => {
                for g in gate.decompose() {
                    self.apply(&g)?;
                }
            }
            Gate::ControlledPower {
                control,
                start,
                len,
                ref matrix,
                ..
            } => apply_controlled_register(a, control, start, len, matrix),
        }
        Ok(())
    }

    pub fn run(&mut self, circuit: &Circuit) -> Result<()> {
        if circuit.n_qubits != self.n_qubits {
            return Err(Error::LengthMismatch {
                expected: self.n_qubits,
                found: circuit.n_qubits,
            });
        }
        for g in &circuit.gates {
            self.apply(g)?;
        }
        if circuit.global_phase != 0.0 {
            self.scale_phase(circuit.global_phase);
        }
        Ok(())
    }

    /// Histogram of `shots` computational-basis readouts (multinomial).
    pub fn measure_all<R: Rng + ?Sized>(&self, shots: u64, rng: &mut R) -> Result<Vec<u64>> {
        multinomial(&self.probabilities(), shots, rng)
    }

    /// `shots` independent readouts, in shot order.
    pub fn sample<R: Rng + ?Sized>(&self, shots: usize, rng: &mut R) -> Vec<usize> {
        let sampler = CdfSampler::new(&self.probabilities());
        (0..shots).map(|_| sampler.draw(rng)).collect()
    }
}

/// Multinomial draw of `shots` counts from `probs` via conditional binomials.
pub fn multinomial<R: Rng + ?Sized>(probs: &[f64], shots: u64, rng: &mut R) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(invalid("need at least one shot"));
    }
    let total: f64 = probs.iter().sum();
    let mut counts = vec![0u64; probs.len()];
    let mut remaining = shots;
    let mut mass = total;
    for (i, &p) in probs.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i + 1 == probs.len() || mass <= 0.0 {
            counts[i] = remaining;
            break;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = Binomial::new(remaining, q)
            .map_err(|e| Error::Numeric(e.to_string()))?
            .sample(rng);
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    Ok(counts)
}

/// Inverse-CDF sampler over a discrete distribution.
#[derive(Debug, Clone)]
pub struct CdfSampler {
    cdf: Vec<f64>,
}

impl CdfSampler {
    pub fn new(probs: &[f64]) -> Self {
        let mut acc = 0.0;
        let cdf = probs
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        CdfSampler { cdf }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cdf.last().unwrap_or(&0.0);
        let u = rng.random::<f64>() * total;
        let idx = self.cdf.partition_point(|&c| c <= u);
        // skip zero-probability tail entries produced by round-off
        idx.min(self.cdf.len() - 1)
    }
}

fn apply_1q(amps: &mut [C64], qubit: usize, m: Mat2) {
    let stride = 1usize << qubit;
    let block = stride << 1;
    let pair = move |x: &mut C64, y: &mut C64| {
        let (a, b) = (*x, *y);
        *x = m[0][0] * a + m[0][1] * b;
        *y = m[1][0] * a + m[1][1] * b;
    };
    let kernel = |chunk: &mut [C64]| {
        let (lo, hi) = chunk.split_at_mut(stride);
        lo.iter_mut().zip(hi.iter_mut()).for_each(|(x, y)| pair(x, y));
    };
    if amps.len() < PAR_THRESHOLD {
        amps.chunks_mut(block).for_each(kernel);
    } else if amps.len() / block >= rayon::current_num_threads() {
        amps.par_chunks_mut(block).for_each(kernel);
    } else {
        for chunk in amps.chunks_mut(block) {
            let (lo, hi) = chunk.split_at_mut(stride);
            lo.par_iter_mut().zip(hi.par_iter_mut()).for_each(|(x, y)| pair(x, y));
        }
    }
}

fn apply_controlled_1q(amps: &mut [C64], control: usize, target: usize, m: Mat2) {
    let stride = 1usize << target;
    let block = stride << 1;
    let cmask = 1usize << control;
    let kernel = |(ci, chunk): (usize, &mut [C64])| {
        let base = ci * block;
        let (lo, hi) = chunk.split_at_mut(stride);
        for (off, (x, y)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if (base + off) & cmask != 0 {
                let (a, b) = (*x, *y);
                *x = m[0][0] * a + m[0][1] * b;
                *y = m[1][0] * a + m[1][1] * b;
            }
        }
    };
    if amps.len() >= PAR_THRESHOLD && amps.len() / block >= rayon::current_num_threads() {
        amps.par_chunks_mut(block).enumerate().for_each(kernel);
    } else {
        amps.chunks_mut(block).enumerate().for_each(kernel);
    }
}

fn apply_diagonal(amps: &mut [C64], phase: impl Fn(usize) -> C64 + Sync) {
    if amps.len() >= PAR_THRESHOLD {
        amps.par_iter_mut().enumerate().for_each(|(i, z)| *z *= phase(i));
    } else {
        amps.iter_mut().enumerate().for_each(|(i, z)| *z *= phase(i));
    }
}

fn apply_controlled_register(amps: &mut [C64], control: usize, start: usize, len: usize, u: &DMatrix<C64>) {
    let dim = 1usize << len;
    let reg_mask = (dim - 1) << start;
    let cmask = 1usize << control;
    let bases: Vec<usize> = (0..amps.len())
        .filter(|&i| i & reg_mask == 0 && i & cmask != 0)
        .collect();
    let transform = |base: usize, src: &[C64]| -> Vec<C64> {
        let v: Vec<C64> = (0..dim).map(|k| src[base | (k << start)]).collect();
        (0..dim).map(|r| (0..dim).map(|k| u[(r, k)] * v[k]).sum()).collect()
    };
    let results: Vec<Vec<C64>> = if amps.len() >= PAR_THRESHOLD {
        let src: &[C64] = amps;
        bases.par_iter().map(|&b| transform(b, src)).collect()
    } else {
        bases.iter().map(|&b| transform(b, amps)).collect()
    };
    for (base, w) in bases.iter().zip(results) {
        for (k, z) in w.into_iter().enumerate() {
            amps[base | (k << start)] = z;
        }
    }
}

/// Exact time evolution `exp(iHt)` from a cached eigendecomposition.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectrum: SpectralResult,
    n_qubits: usize,
}

impl Propagator {
    pub fn new(h: &DenseHamiltonian) -> Result<Self> {
        let n_qubits = h
            .n_qubits()
            .ok_or_else(|| invalid("propagator needs a power-of-two dimension"))?;
        if h.dim() > MAX_UNITARY_DIM {
            return Err(Error::DimensionTooLarge {
                dim: h.dim(),
                max: MAX_UNITARY_DIM,
            });
        }
        Ok(Propagator {
            spectrum: diagonalize(h)?,
            n_qubits,
        })
    }

    pub fn from_spectrum(spectrum: SpectralResult) -> Result<Self> {
        let dim = spectrum.len();
        if !dim.is_power_of_two() {
            return Err(invalid("propagator needs a power-of-two dimension"));
        }
        Ok(Propagator {
            spectrum,
            n_qubits: dim.trailing_zeros() as usize,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn spectrum(&self) -> &SpectralResult {
        &self.spectrum
    }

    /// `max_k |E_k|`.
    pub fn spectral_radius(&self) -> f64 {
        self.spectrum.eigenvalues().iter().fold(0.0_f64, |m, e| m.max(e.abs()))
    }

    /// `V diag(e^{iE_k t}) V†`.
    pub fn unitary(&self, t: f64) -> DMatrix<C64> {
        let v = self.spectrum.eigenvectors();
        let phases = DVector::from_iterator(
            v.ncols(),
            self.spectrum.eigenvalues().iter().map(|&e| C64::from_polar(1.0, e * t)),
        );
        let mut scaled = v.clone();
        for (mut col, p) in scaled.column_iter_mut().zip(phases.iter()) {
            col *= *p;
        }
        scaled * v.adjoint()
    }
}

/// `exp(iHt)` by eigendecomposition.
pub fn exact_unitary(h: &DenseHamiltonian, t: f64) -> Result<DMatrix<C64>> {
    Ok(Propagator::new(h)?.unitary(t))
}

/// One first-order Trotter step of `exp(iH dt)` for the open Ising chain
/// `H = -J Σ σᶻσᶻ - Γ Σ σˣ + J N_s`: a layer of `e^{-iJdt σᶻσᶻ}` bonds (each
/// CNOT · Rz · CNOT), then a layer of `Rx(2Γdt)`. The constant shift enters
/// as the global phase `J N_s dt`.
pub fn trotter_step_ising(n_sites: usize, coupling: f64, field: f64, dt: f64) -> Result<Circuit> {
    if n_sites < 2 {
        return Err(invalid("trotter step needs at least two sites"));
    }
    let mut circuit = Circuit::new(n_sites);
    if dt != 0.0 {
        for s in 0..n_sites - 1 {
            let zz = Gate::Zz {
                lambda: -coupling * dt,
                a: s,
                b: s + 1,
            };
            for g in zz.decompose() {
                circuit.push(g)?;
            }
        }
        for s in 0..n_sites {
            circuit.push(Gate::Rx {
                theta: 2.0 * field * dt,
                qubit: s,
            })?;
        }
    }
    circuit.add_global_phase(coupling * n_sites as f64 * dt);
    Ok(circuit)
}

/// `m` Trotter steps of size `t/m`.
pub fn trotter_evolution_ising(n_sites: usize, coupling: f64, field: f64, t: f64, steps: usize) -> Result<Circuit> {
    if steps == 0 {
        return Err(invalid("need at least one trotter step"));
    }
    let step = trotter_step_ising(n_sites, coupling, field, t / steps as f64)?;
    let mut circuit = Circuit::new(n_sites);
    for _ in 0..steps {
        circuit.append(&step)?;
    }
    Ok(circuit)
}

/// Largest `|U U† - I|` entry.
pub fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    let p = u * u.adjoint();
    let n = p.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((p[(i, j)] - c(target, 0.0)).norm());
        }
    }
    dev
}

/// Spectral norm of `a - b`.
pub fn operator_distance(a: &DMatrix<C64>, b: &DMatrix<C64>) -> f64 {
    (a - b).singular_values().iter().fold(0.0_f64, |m, s| m.max(*s))
}
