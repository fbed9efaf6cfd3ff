//! Real-space grid of `2ⁿ` points on `[-L/2, L/2)` and its centered
//! momentum lattice.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest register the dense solvers accept.
pub const MAX_QUBITS: usize = 14;

/// Default threshold for the edge-decay diagnostic, relative to the peak amplitude.
pub const EDGE_THRESHOLD: f64 = 1e-6;

/// An `n`-qubit discretization of the periodic box `[-L/2, L/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    n_qubits: usize,
    length: f64,
}

/// Wire form of a [`Grid`] as it appears in run configs.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n_qubits: usize,
    pub box_length: f64,
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;
    fn try_from(s: GridSpec) -> Result<Self> {
        Grid::new(s.n_qubits, s.box_length)
    }
}

impl From<Grid> for GridSpec {
    fn from(g: Grid) -> Self {
        GridSpec {
            n_qubits: g.n_qubits,
            box_length: g.length,
        }
    }
}

impl Grid {
    pub fn new(n_qubits: usize, length: f64) -> Result<Self> {
        if !(1..=MAX_QUBITS).contains(&n_qubits) {
            return Err(invalid(format!("grid needs 1..={MAX_QUBITS} qubits, got {n_qubits}")));
        }
        if !(length.is_finite() && length > 0.0) {
            return Err(invalid(format!("box length must be positive, got {length}")));
        }
        Ok(Grid { n_qubits, length })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Number of grid points `N = 2ⁿ`.
    pub fn size(&self) -> usize {
        1 << self.n_qubits
    }

    /// `Δx = L / N`.
    pub fn dx(&self) -> f64 {
        self.length / self.size() as f64
    }

    /// `Δp = 2π / (N Δx) = 2π / L`.
    pub fn dp(&self) -> f64 {
        2.0 * PI / (self.size() as f64 * self.dx())
    }

    pub fn x_min(&self) -> f64 {
        -0.5 * self.length
    }

    /// Half-open upper edge of the box.
    pub fn x_max(&self) -> f64 {
        0.5 * self.length
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i < self.size() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange {
                index: i,
                size: self.size(),
            })
        }
    }

    /// `x_i = -L/2 + i Δx`.
    pub fn position(&self, i: usize) -> Result<f64> {
        self.check_index(i)?;
        Ok(self.position_unchecked(i))
    }

    pub(crate) fn position_unchecked(&self, i: usize) -> f64 {
        self.x_min() + i as f64 * self.dx()
    }

    /// Centered momentum `p_j = (j - N/2) Δp`, zero momentum at `j = N/2`.
    pub fn momentum_centered(&self, j: usize) -> Result<f64> {
        self.check_index(j)?;
        Ok(self.momentum_unchecked(j))
    }

    pub(crate) fn momentum_unchecked(&self, j: usize) -> f64 {
        (j as f64 - (self.size() / 2) as f64) * self.dp()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.size()).map(|i| self.position_unchecked(i)).collect()
    }

    pub fn momenta(&self) -> Vec<f64> {
        (0..self.size()).map(|j| self.momentum_unchecked(j)).collect()
    }

    /// Samples `f` at every grid point.
    pub fn discretize(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        (0..self.size()).map(|i| f(self.position_unchecked(i))).collect()
    }

    /// Index of the grid point closest to `x`, clamped to the box.
    pub fn nearest_index(&self, x: f64) -> usize {
        let r = ((x - self.x_min()) / self.dx()).round();
        r.clamp(0.0, (self.size() - 1) as f64) as usize
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_min() && x < self.x_max()
    }

    /// Grid-normalized probabilities (sum to one) to a continuum density
    /// (integrates to one), via the metric factor `N / L`.
    pub fn to_density(&self, probabilities: &[f64]) -> Vec<f64> {
        let f = 1.0 / self.dx();
        probabilities.iter().map(|p| p * f).collect()
    }

    /// Inverse of [`Grid::to_density`].
    pub fn from_density(&self, density: &[f64]) -> Vec<f64> {
        let f = self.dx();
        density.iter().map(|p| p * f).collect()
    }

    /// Ratio of the largest boundary amplitude to the peak amplitude. Values
    /// above [`EDGE_THRESHOLD`] mean the state feels the periodic wrap.
    pub fn edge_ratio(&self, amplitudes: &[f64]) -> f64 {
        let peak = amplitudes.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
        if peak == 0.0 {
            return 0.0;
        }
        let first = amplitudes.first().map_or(0.0, |a| a.abs());
        let last = amplitudes.last().map_or(0.0, |a| a.abs());
        first.max(last) / peak
    }

    pub fn decays_at_edges(&self, amplitudes: &[f64]) -> bool {
        self.edge_ratio(amplitudes) < EDGE_THRESHOLD
    }
}
