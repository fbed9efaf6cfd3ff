//! Reverse stochastic quantization toolkit.
//!
//! A classical potential `v(x)` at temperature `T` is mapped onto the
//! imaginary-time Schrödinger operator `H = -T d²/dx² + V(x)` with
//! `V = (v')²/(4T) - v''/2`. The ground state of `H` is `sqrt(exp(-v/T))`
//! with zero energy, and the ground energy of the supersymmetric partner
//! (`V + v''`) equals the relaxation rate of the Langevin dynamics.
//!
//! The crate solves that problem three ways:
//!
//! * [`spectral`]: dense exact diagonalization on an `n`-qubit grid,
//! * [`vqe`]: RY-CNOT variational eigensolver with a two-basis energy estimator,
//! * [`qpe`]: phase estimation over exact controlled unitaries, used for
//!   minima hopping,
//!
//! and benchmarks a hybrid classical/quantum sampler against plain
//! Langevin dynamics in [`sampler`].

pub mod error;
pub mod grid;
pub mod potential;
pub mod qpe;
pub mod sampler;
pub mod simulator;
pub mod spectral;
pub mod vqe;

pub use error::{Error, Result};
pub use grid::Grid;
pub use potential::{EffectiveKind, Potential, Temperature};
pub use simulator::{Circuit, Gate, StateVector};
pub use spectral::{DenseHamiltonian, Provenance, SpectralResult};

/// Complex amplitude type used throughout.
pub type C64 = nalgebra::Complex<f64>;
