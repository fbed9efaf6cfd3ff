//! Dense Hamiltonians on the grid and on spin chains, with exact
//! diagonalization and the quantities derived from the spectrum.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::{Grid, MAX_QUBITS};
use crate::potential::{effective_potential_of_kind, EffectiveKind, Potential, Temperature};
use crate::C64;

/// Largest matrix dimension [`diagonalize`] accepts.
pub const MAX_DIM: usize = 1 << MAX_QUBITS;

/// Hermiticity tolerance relative to `max(1, max|M_ij|)`.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Where a dense Hamiltonian came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Kinetic operator alone.
    Kinetic,
    EffectiveH,
    SusyH,
    Ising,
    Custom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseHamiltonian {
    matrix: DMatrix<C64>,
    provenance: Provenance,
    mass: Option<f64>,
}

impl DenseHamiltonian {
    /// Wraps an arbitrary square matrix after checking Hermiticity.
    pub fn from_matrix(matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::LengthMismatch {
                expected: matrix.nrows(),
                found: matrix.ncols(),
            });
        }
        let deviation = hermitian_deviation(&matrix);
        if deviation > HERMITIAN_TOL * scale_of(&matrix) {
            return Err(Error::NonHermitian { deviation });
        }
        Ok(DenseHamiltonian {
            matrix,
            provenance: Provenance::Custom,
            mass: None,
        })
    }

    /// Real symmetric convenience constructor.
    pub fn from_real(matrix: &DMatrix<f64>) -> Result<Self> {
        Self::from_matrix(matrix.map(|v| C64::new(v, 0.0)))
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Register width `log₂(dim)`, if the dimension is a power of two.
    pub fn n_qubits(&self) -> Option<usize> {
        let d = self.dim();
        d.is_power_of_two().then(|| d.trailing_zeros() as usize)
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn mass(&self) -> Option<f64> {
        self.mass
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        hermitian_deviation(&self.matrix)
    }

    /// Largest imaginary part of any entry.
    pub fn max_imaginary(&self) -> f64 {
        self.matrix.iter().fold(0.0_f64, |m, z| m.max(z.im.abs()))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// `⟨ψ|H|ψ⟩` for a normalized state.
    pub fn expectation(&self, psi: &[C64]) -> f64 {
        let v = DVector::from_column_slice(psi);
        (v.adjoint() * &self.matrix * &v)[(0, 0)].re
    }

    /// `H + diag(values)`.
    pub fn add_diagonal(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            self.matrix[(i, i)].re += v;
        }
        Ok(self)
    }

    /// Replaces the diagonal, keeping off-diagonal elements.
    pub fn with_diagonal(mut self, values: &[f64]) -> Result<Self> {
        if values.len() != self.dim() {
            return Err(Error::LengthMismatch {
                expected: self.dim(),
                found: values.len(),
            });
        }
        for (i, v) in values.iter().enumerate() {
            self.matrix[(i, i)] = C64::new(*v, 0.0);
        }
        self.provenance = Provenance::Custom;
        Ok(self)
    }
}

fn hermitian_deviation(m: &DMatrix<C64>) -> f64 {
    let n = m.nrows();
    let mut dev = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

fn scale_of(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(1.0_f64, |s, z| s.max(z.norm()))
}

/// Kinetic energy per centered momentum mode, `p_j² / 2m*`.
pub fn kinetic_spectrum(grid: &Grid, mass: f64) -> Vec<f64> {
    grid.momenta().iter().map(|p| p * p / (2.0 * mass)).collect()
}

/// `K = F_c† diag(p_j² / 2m*) F_c` with `F_c` the centered DFT.
///
/// `K` is circulant: `K_ab = (1/N) Σ_j (p_j²/2m*) exp(i p_j (x_a - x_b))`,
/// evaluated here one offset at a time with exact phase reduction mod `N`.
pub fn build_kinetic(grid: &Grid, mass: f64) -> Result<DenseHamiltonian> {
    if !(mass.is_finite() && mass > 0.0) {
        return Err(invalid(format!("effective mass must be positive, got {mass}")));
    }
    let n = grid.size();
    let energies = kinetic_spectrum(grid, mass);
    let roots: Vec<C64> = (0..n)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / n as f64))
        .collect();
    let half = n / 2;
    let row: Vec<C64> = (0..n)
        .map(|d| {
            let sum: C64 = energies
                .iter()
                .enumerate()
                .map(|(j, &e)| {
                    // (j - N/2) * d mod N, kept non-negative
                    let m = (j + n - half) % n;
                    roots[(m * d) % n] * e
                })
                .sum();
            sum / n as f64
        })
        .collect();
    let matrix = DMatrix::from_fn(n, n, |a, b| row[(a + n - b) % n]);
    Ok(DenseHamiltonian {
        matrix,
        provenance: Provenance::Kinetic,
        mass: Some(mass),
    })
}

/// `H = K + V` (or `K + Vˢ`) on the grid, with kinetic prefactor `T`
/// (effective mass `1/(2T)`).
pub fn build_effective_hamiltonian(
    potential: &Potential,
    t: Temperature,
    grid: &Grid,
    kind: EffectiveKind,
) -> Result<DenseHamiltonian> {
    potential.validate()?;
    let diag = grid.discretize(|x| effective_potential_of_kind(potential, t, kind, x));
    let mut h = build_kinetic(grid, t.effective_mass())?.add_diagonal(&diag)?;
    h.provenance = match kind {
        EffectiveKind::Plain => Provenance::EffectiveH,
        EffectiveKind::Supersymmetric => Provenance::SusyH,
    };
    Ok(h)
}

/// Open-boundary transverse-field Ising chain
/// `-J Σ σᶻ_s σᶻ_{s+1} - Γ Σ σˣ_s + J N_s`.
///
/// Site `s` is bit `s` of the basis index; bit value 0 is `σᶻ = +1`.
pub fn build_ising_hamiltonian(n_sites: usize, coupling: f64, field: f64) -> Result<DenseHamiltonian> {
    if !(1..=MAX_QUBITS).contains(&n_sites) {
        return Err(invalid(format!(
            "ising chain needs 1..={MAX_QUBITS} sites, got {n_sites}"
        )));
    }
    if !(coupling.is_finite() && coupling > 0.0) {
        return Err(invalid(format!("ising coupling must be positive, got {coupling}")));
    }
    if !field.is_finite() {
        return Err(invalid("transverse field must be finite"));
    }
    let dim = 1usize << n_sites;
    let mut matrix = DMatrix::<C64>::zeros(dim, dim);
    for state in 0..dim {
        let mut diag = coupling * n_sites as f64;
        for s in 0..n_sites.saturating_sub(1) {
            let aligned = ((state >> s) & 1) == ((state >> (s + 1)) & 1);
            diag += if aligned { -coupling } else { coupling };
        }
        matrix[(state, state)] = C64::new(diag, 0.0);
        for s in 0..n_sites {
            matrix[(state ^ (1 << s), state)] -= C64::new(field, 0.0);
        }
    }
    Ok(DenseHamiltonian {
        matrix,
        provenance: Provenance::Ising,
        mass: None,
    })
}

/// The two-qubit real-space double well: diagonal `(J, 3J, 3J, J)` with the
/// hopping of `build_kinetic(n=2, L=10, m*=0.5)`, i.e. `t₁ ≈ 0.3948`,
/// `t₂ ≈ 0.1974`.
pub fn two_site_double_well(coupling: f64) -> Result<DenseHamiltonian> {
    let grid = Grid::new(2, 10.0)?;
    let mut h = build_kinetic(&grid, 0.5)?.with_diagonal(&[coupling, 3.0 * coupling, 3.0 * coupling, coupling])?;
    h.mass = Some(0.5);
    Ok(h)
}

/// Full eigendecomposition, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct SpectralResult {
    eigenvalues: Vec<f64>,
    eigenvectors: DMatrix<C64>,
}

impl SpectralResult {
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Columns are the phase-fixed eigenvectors.
    pub fn eigenvectors(&self) -> &DMatrix<C64> {
        &self.eigenvectors
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn ground_energy(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn vector(&self, k: usize) -> Vec<C64> {
        self.eigenvectors.column(k).iter().copied().collect()
    }

    /// Real parts of eigenvector `k`; exact for real symmetric inputs.
    pub fn real_vector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().map(|z| z.re).collect()
    }

    /// `|ψ_k[i]|²`, summing to one.
    pub fn probabilities(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k).iter().map(|z| z.norm_sqr()).collect()
    }

    /// `‖H v_k - λ_k v_k‖₂`.
    pub fn residual(&self, h: &DenseHamiltonian, k: usize) -> f64 {
        let v = self.eigenvectors.column(k);
        (h.matrix() * v - v * C64::new(self.eigenvalues[k], 0.0)).norm()
    }

    /// Components of `state` along each eigenvector, `⟨ψ_k|u⟩`.
    pub fn overlaps(&self, state: &[C64]) -> Vec<C64> {
        let u = DVector::from_column_slice(state);
        (self.eigenvectors.adjoint() * u).iter().copied().collect()
    }
}

/// Exact Hermitian eigendecomposition. Real-valued inputs go through the
/// real symmetric solver; eigenvectors are phase-fixed so their
/// largest-magnitude component is real and positive.
pub fn diagonalize(h: &DenseHamiltonian) -> Result<SpectralResult> {
    let dim = h.dim();
    if dim > MAX_DIM {
        return Err(Error::DimensionTooLarge { dim, max: MAX_DIM });
    }
    let scale = scale_of(h.matrix());
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NonHermitian { deviation });
    }

    let (values, vectors): (Vec<f64>, DMatrix<C64>) = if h.max_imaginary() <= 1e-14 * scale {
        let real = DMatrix::from_fn(dim, dim, |i, j| 0.5 * (h.matrix[(i, j)].re + h.matrix[(j, i)].re));
        let eig = SymmetricEigen::try_new(real, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("symmetric eigensolver did not converge".into()))?;
        (
            eig.eigenvalues.iter().copied().collect(),
            eig.eigenvectors.map(|v| C64::new(v, 0.0)),
        )
    } else {
        let herm = DMatrix::from_fn(dim, dim, |i, j| (h.matrix[(i, j)] + h.matrix[(j, i)].conj()) * 0.5);
        let eig = SymmetricEigen::try_new(herm, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numeric("hermitian eigensolver did not converge".into()))?;
        (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
    };

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));

    let eigenvalues = order.iter().map(|&i| values[i]).collect();
    let mut eigenvectors = DMatrix::<C64>::zeros(dim, dim);
    for (col, &src) in order.iter().enumerate() {
        let mut v: Vec<C64> = vectors.column(src).iter().copied().collect();
        fix_phase(&mut v);
        eigenvectors.set_column(col, &DVector::from_vec(v));
    }
    Ok(SpectralResult {
        eigenvalues,
        eigenvectors,
    })
}

/// Rotates `v` so that its largest-magnitude component is real positive.
/// Near-ties resolve to the lowest index.
fn fix_phase(v: &mut [C64]) {
    let peak = v.iter().fold(0.0_f64, |m, z| m.max(z.norm()));
    if peak == 0.0 {
        return;
    }
    let pivot = v.iter().position(|z| z.norm() >= peak * (1.0 - 1e-9)).unwrap_or(0);
    let phase = v[pivot].conj() / v[pivot].norm();
    for z in v.iter_mut() {
        *z *= phase;
    }
}

/// `Δ = E₁ - E₀`.
pub fn fundamental_gap(s: &SpectralResult) -> Result<f64> {
    if s.len() < 2 {
        return Err(invalid("the gap needs at least two eigenvalues"));
    }
    Ok(s.eigenvalues[1] - s.eigenvalues[0])
}

/// Reaction current `j = Ψ₀ ∘ Ψ₀ˢ`, elementwise.
pub fn reaction_current(psi0: &[f64], psi0_susy: &[f64]) -> Result<Vec<f64>> {
    if psi0.len() != psi0_susy.len() {
        return Err(Error::LengthMismatch {
            expected: psi0.len(),
            found: psi0_susy.len(),
        });
    }
    Ok(psi0.iter().zip(psi0_susy).map(|(a, b)| a * b).collect())
}
