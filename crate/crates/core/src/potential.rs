//! Classical potentials and the exact maps onto effective quantum potentials.
//!
//! Units: `k_B = 1` and unit friction, so the overdamped Langevin equation is
//! `dx = f(x) dt + sqrt(2 T dt) ξ` with `f = -v'`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::grid::Grid;

/// A one-dimensional classical potential with analytic derivatives.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Potential {
    /// `v(x) = h (x² - x0²)²`, minima at `±x0`, barrier top at 0.
    DoubleWell { h: f64, x0: f64 },
    /// `v(x) = k x² / 2`.
    Harmonic { k: f64 },
    /// `v(x) = Σ coeffs[i] xⁱ`.
    Polynomial { coeffs: Vec<f64> },
}

impl Potential {
    pub fn double_well(h: f64, x0: f64) -> Result<Self> {
        let p = Potential::DoubleWell { h, x0 };
        p.validate()?;
        Ok(p)
    }

    pub fn harmonic(k: f64) -> Result<Self> {
        let p = Potential::Harmonic { k };
        p.validate()?;
        Ok(p)
    }

    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        let p = Potential::Polynomial { coeffs };
        p.validate()?;
        Ok(p)
    }

    /// Checks the parameter invariants. Deserialized values bypass the
    /// constructors, so callers loading configs must run this.
    pub fn validate(&self) -> Result<()> {
        match self {
            Potential::DoubleWell { h, x0 } => {
                if !(h.is_finite() && *h > 0.0) {
                    return Err(invalid(format!("double well needs h > 0, got {h}")));
                }
                if !(x0.is_finite() && *x0 > 0.0) {
                    return Err(invalid(format!("double well needs x0 > 0, got {x0}")));
                }
            }
            Potential::Harmonic { k } => {
                if !k.is_finite() {
                    return Err(invalid(format!("harmonic curvature must be finite, got {k}")));
                }
            }
            Potential::Polynomial { coeffs } => {
                if coeffs.is_empty() {
                    return Err(invalid("polynomial needs at least one coefficient"));
                }
                if coeffs.iter().any(|c| !c.is_finite()) {
                    return Err(invalid("polynomial coefficients must be finite"));
                }
            }
        }
        Ok(())
    }

    /// `v(x)`.
    pub fn value(&self, x: f64) -> f64 {
        match self {
            Potential::DoubleWell { h, x0 } => {
                let s = x * x - x0 * x0;
                h * s * s
            }
            Potential::Harmonic { k } => 0.5 * k * x * x,
            Potential::Polynomial { coeffs } => horner(coeffs, x),
        }
    }

    /// `v'(x)`.
    pub fn derivative(&self, x: f64) -> f64 {
        match self {
            Potential::DoubleWell { h, x0 } => 4.0 * h * x * (x * x - x0 * x0),
            Potential::Harmonic { k } => k * x,
            Potential::Polynomial { coeffs } => horner(&differentiate(coeffs), x),
        }
    }

    /// `v''(x)`.
    pub fn second_derivative(&self, x: f64) -> f64 {
        match self {
            Potential::DoubleWell { h, x0 } => 4.0 * h * (3.0 * x * x - x0 * x0),
            Potential::Harmonic { k } => *k,
            Potential::Polynomial { coeffs } => horner(&differentiate(&differentiate(coeffs)), x),
        }
    }

    /// Classical force `f = -v'`.
    pub fn force(&self, x: f64) -> f64 {
        -self.derivative(x)
    }

    /// Stationary points sorted ascending, split into (minima, maxima).
    ///
    /// Degenerate stationary points (`v'' = 0`) are dropped.
    pub fn stationary_points(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Potential::DoubleWell { x0, .. } => (vec![-x0, *x0], vec![0.0]),
            Potential::Harmonic { k } => {
                if *k > 0.0 {
                    (vec![0.0], vec![])
                } else if *k < 0.0 {
                    (vec![], vec![0.0])
                } else {
                    (vec![], vec![])
                }
            }
            Potential::Polynomial { coeffs } => {
                let mut minima = Vec::new();
                let mut maxima = Vec::new();
                for r in real_roots(&differentiate(coeffs)) {
                    let curv = self.second_derivative(r);
                    if curv > 0.0 {
                        minima.push(r);
                    } else if curv < 0.0 {
                        maxima.push(r);
                    }
                }
                (minima, maxima)
            }
        }
    }
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

fn differentiate(coeffs: &[f64]) -> Vec<f64> {
    coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect()
}

/// Real roots of `Σ c_i xⁱ` from the companion matrix spectrum.
fn real_roots(coeffs: &[f64]) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    while c.last().is_some_and(|&v| v == 0.0) {
        c.pop();
    }
    let degree = match c.len() {
        0 | 1 => return Vec::new(),
        len => len - 1,
    };
    let lead = c[degree];
    let mut companion = DMatrix::<f64>::zeros(degree, degree);
    for i in 1..degree {
        companion[(i, i - 1)] = 1.0;
    }
    for i in 0..degree {
        companion[(i, degree - 1)] = -c[i] / lead;
    }
    let scale = c.iter().fold(0.0_f64, |m, v| m.max(v.abs())) / lead.abs();
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-9 * (1.0 + scale))
        .map(|z| polish_root(&c, z.re))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    roots
}

fn polish_root(coeffs: &[f64], mut x: f64) -> f64 {
    let d = differentiate(coeffs);
    for _ in 0..8 {
        let slope = horner(&d, x);
        if slope == 0.0 {
            break;
        }
        let step = horner(coeffs, x) / slope;
        x -= step;
        if step.abs() < 1e-15 * (1.0 + x.abs()) {
            break;
        }
    }
    x
}

/// Temperature in energy units (`k_B = 1`), strictly positive.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Temperature(f64);

impl Temperature {
    pub fn new(t: f64) -> Result<Self> {
        if t.is_finite() && t > 0.0 {
            Ok(Temperature(t))
        } else {
            Err(invalid(format!("temperature must be positive and finite, got {t}")))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }

    /// Effective mass of the kinetic term, `2 m* = 1/T`.
    pub fn effective_mass(self) -> f64 {
        0.5 / self.0
    }
}

impl TryFrom<f64> for Temperature {
    type Error = Error;
    fn try_from(t: f64) -> Result<Self> {
        Temperature::new(t)
    }
}

impl From<Temperature> for f64 {
    fn from(t: Temperature) -> f64 {
        t.0
    }
}

/// Which effective potential to build: `V` or its supersymmetric partner `V + v''`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectiveKind {
    Plain,
    Supersymmetric,
}

/// `V(x) = v'(x)² / (4T) - v''(x) / 2`.
pub fn effective_potential(p: &Potential, t: Temperature, x: f64) -> f64 {
    let d1 = p.derivative(x);
    d1 * d1 / (4.0 * t.value()) - 0.5 * p.second_derivative(x)
}

/// `Vˢ(x) = V(x) + v''(x)`.
pub fn susy_potential(p: &Potential, t: Temperature, x: f64) -> f64 {
    effective_potential(p, t, x) + p.second_derivative(x)
}

/// Dispatches on [`EffectiveKind`].
pub fn effective_potential_of_kind(p: &Potential, t: Temperature, kind: EffectiveKind, x: f64) -> f64 {
    match kind {
        EffectiveKind::Plain => effective_potential(p, t, x),
        EffectiveKind::Supersymmetric => susy_potential(p, t, x),
    }
}

/// Barrier height `v(0) - v(x0) = h x0⁴` of a double well.
pub fn barrier_height(p: &Potential) -> Result<f64> {
    match p {
        Potential::DoubleWell { .. } => Ok(p.value(0.0) - p.value(p.stationary_points().0[1])),
        _ => Err(Error::NotDoubleWell),
    }
}

/// Kramers escape rate `(ω_min ω_top / 2π) exp(-ΔE / T)` for a double well,
/// with `ω_min = sqrt(v''(x0))`, `ω_top = sqrt(|v''(0)|)` and `ΔE = h x0⁴`.
pub fn kramers_rate(p: &Potential, t: Temperature) -> Result<f64> {
    let Potential::DoubleWell { x0, .. } = p else {
        return Err(Error::NotDoubleWell);
    };
    let omega_min = p.second_derivative(*x0).sqrt();
    let omega_top = p.second_derivative(0.0).abs().sqrt();
    let barrier = barrier_height(p)?;
    Ok(omega_min * omega_top / (2.0 * PI) * (-barrier / t.value()).exp())
}

/// Boltzmann weights `exp(-v(x_i)/T)` on the grid, normalized to sum to one.
pub fn boltzmann_density(p: &Potential, t: Temperature, grid: &Grid) -> Vec<f64> {
    boltzmann_from_energies(&grid.discretize(|x| p.value(x)), t)
}

/// Normalized Boltzmann weights of an energy vector; the minimum is
/// subtracted before exponentiating.
pub fn boltzmann_from_energies(energies: &[f64], t: Temperature) -> Vec<f64> {
    let vmin = energies.iter().copied().fold(f64::INFINITY, f64::min);
    let mut w: Vec<f64> = energies.iter().map(|&v| (-(v - vmin) / t.value()).exp()).collect();
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    w
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn dw(h: f64, x0: f64) -> Potential {
        Potential::double_well(h, x0).unwrap()
    }

    fn temp(t: f64) -> Temperature {
        Temperature::new(t).unwrap()
    }

    #[test]
    fn double_well_values() {
        assert_eq!(dw(1.0, 1.0).value(0.0), 1.0);
        assert_eq!(dw(1.0, 1.0).value(1.0), 0.0);
        assert_eq!(dw(1.0, 1.0).value(-1.0), 0.0);
        assert_eq!(dw(2.0, 1.0).value(0.0), 2.0);
    }

    #[test]
    fn forces() {
        assert_eq!(dw(1.0, 1.0).force(0.0), 0.0);
        assert_eq!(dw(1.0, 1.0).force(1.0), 0.0);
        assert_eq!(Potential::harmonic(1.0).unwrap().force(2.0), -2.0);
    }

    #[test]
    fn effective_and_susy_examples() {
        let p = dw(1.0, 1.0);
        for t in [0.05, 0.2, 3.0] {
            assert_eq!(effective_potential(&p, temp(t), 0.0), 2.0);
            assert_eq!(effective_potential(&p, temp(t), 1.0), -4.0);
            assert_eq!(susy_potential(&p, temp(t), 1.0), 4.0);
            assert_eq!(susy_potential(&p, temp(t), 0.0), -2.0);
        }
        let harm = Potential::harmonic(1.0).unwrap();
        assert!((effective_potential(&harm, temp(0.5), 1.0)).abs() < 1e-15);
        assert!((susy_potential(&harm, temp(0.5), 0.0) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn kramers_examples() {
        let k = kramers_rate(&dw(1.0, 1.0), temp(0.2)).unwrap();
        let expected = 8f64.sqrt() * 2.0 / (2.0 * PI) * (-5f64).exp();
        assert!((k - expected).abs() < 1e-15);
        assert!((k - 6.07e-3).abs() < 1e-5);

        let hot = kramers_rate(&dw(1.0, 1.0), temp(1e12)).unwrap();
        assert!((hot - 0.900_316).abs() < 1e-5);

        let ratio = kramers_rate(&dw(2.0, 1.0), temp(0.2)).unwrap() / k;
        assert!((ratio - 2.0 * (-5f64).exp()).abs() < 1e-12);

        assert_eq!(
            kramers_rate(&Potential::harmonic(1.0).unwrap(), temp(0.2)),
            Err(Error::NotDoubleWell)
        );
    }

    #[test]
    fn kramers_uses_general_barrier() {
        let p = dw(1.0, 2.0);
        assert_eq!(barrier_height(&p).unwrap(), 16.0);
    }

    #[test]
    fn boltzmann_examples() {
        let flat = Potential::polynomial(vec![0.0]).unwrap();
        let g = Grid::new(2, 4.0).unwrap();
        assert_eq!(boltzmann_density(&flat, temp(1.0), &g), vec![0.25; 4]);

        // symmetric about x=0 once the unpaired left edge is dropped
        let g = Grid::new(6, 4.0).unwrap();
        let w = boltzmann_density(&dw(1.0, 1.0), temp(0.3), &g);
        for i in 1..g.size() {
            assert!((w[i] - w[g.size() - i]).abs() < 1e-15);
        }

        let g = Grid::new(7, 4.0).unwrap();
        let w = boltzmann_density(&dw(1.0, 1.0), temp(0.2), &g);
        let left = (0..64).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        let right = (64..128).max_by(|&a, &b| w[a].total_cmp(&w[b])).unwrap();
        assert_eq!(left, g.nearest_index(-1.0));
        assert_eq!(right, g.nearest_index(1.0));
    }

    #[test]
    fn parameter_validation() {
        assert!(Potential::double_well(0.0, 1.0).is_err());
        assert!(Potential::double_well(1.0, -1.0).is_err());
        assert!(Potential::polynomial(vec![]).is_err());
        assert!(Temperature::new(0.0).is_err());
        assert!(Temperature::new(f64::NAN).is_err());
    }

    #[test]
    fn config_keys() {
        let p: Potential = serde_json::from_str(r#"{"kind":"double_well","h":1.0,"x0":1.0}"#).unwrap();
        assert_eq!(p, dw(1.0, 1.0));
        let p: Potential = serde_json::from_str(r#"{"kind":"polynomial","coeffs":[0,0,1]}"#).unwrap();
        assert_eq!(p.value(3.0), 9.0);
        assert!(serde_json::from_str::<Potential>(r#"{"kind":"harmonic","k":1,"x0":2}"#).is_err());
        assert!(serde_json::from_str::<Temperature>("-1.0").is_err());
    }

    #[test]
    fn polynomial_stationary_points() {
        // same shape as the unit double well: x⁴ - 2x² + 1
        let p = Potential::polynomial(vec![1.0, 0.0, -2.0, 0.0, 1.0]).unwrap();
        let (minima, maxima) = p.stationary_points();
        assert_eq!(minima.len(), 2);
        assert!((minima[0] + 1.0).abs() < 1e-12 && (minima[1] - 1.0).abs() < 1e-12);
        assert_eq!(maxima.len(), 1);
        assert!(maxima[0].abs() < 1e-12);
    }

    fn central_d1(p: &Potential, x: f64, h: f64) -> f64 {
        (p.value(x + h) - p.value(x - h)) / (2.0 * h)
    }

    fn central_d2(p: &Potential, x: f64, h: f64) -> f64 {
        (p.value(x + h) - 2.0 * p.value(x) + p.value(x - h)) / (h * h)
    }

    fn arb_potential() -> impl Strategy<Value = Potential> {
        prop_oneof![
            (0.2f64..3.0, 0.5f64..2.0).prop_map(|(h, x0)| Potential::DoubleWell { h, x0 }),
            (0.1f64..5.0).prop_map(|k| Potential::Harmonic { k }),
            prop::collection::vec(-2.0f64..2.0, 1..6).prop_map(|coeffs| Potential::Polynomial { coeffs }),
        ]
    }

    proptest! {
        #[test]
        fn analytic_derivatives_match_finite_differences(p in arb_potential(), x in -2.0f64..2.0, t in 0.1f64..2.0) {
            let t = temp(t);
            // first derivative: step 1e-4, relative error well under 1e-5
            let h1 = 1e-4;
            let d1 = p.derivative(x);
            let fd1 = central_d1(&p, x, h1);
            if d1.abs() > 1e-2 {
                prop_assert!(((fd1 - d1) / d1).abs() < 1e-5);
            }
            // second derivative: larger step keeps cancellation below the O(h²) term
            let h2 = 1e-3;
            let d2 = p.second_derivative(x);
            let fd2 = central_d2(&p, x, h2);
            prop_assert!((fd2 - d2).abs() < 1e-4 * d2.abs().max(1.0));
            let numeric_v = fd1 * fd1 / (4.0 * t.value()) - 0.5 * fd2;
            let analytic_v = effective_potential(&p, t, x);
            if analytic_v.abs() > 1e-1 {
                prop_assert!(((numeric_v - analytic_v) / analytic_v).abs() < 1e-4);
            }
        }

        #[test]
        fn susy_minus_plain_is_curvature(p in arb_potential(), x in -3.0f64..3.0, t in 0.05f64..5.0) {
            let t = temp(t);
            let diff = susy_potential(&p, t, x) - effective_potential(&p, t, x);
            prop_assert!((diff - p.second_derivative(x)).abs() <= 1e-12 * (1.0 + diff.abs()));
        }

        #[test]
        fn boltzmann_normalized_and_shift_invariant(h in 0.2f64..3.0, t in 0.05f64..2.0, shift in -50.0f64..50.0) {
            let g = Grid::new(6, 4.0).unwrap();
            let t = temp(t);
            let p = dw(h, 1.0);
            let w = boltzmann_density(&p, t, &g);
            prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
            let shifted: Vec<f64> = g.discretize(|x| p.value(x) + shift);
            let w2 = boltzmann_from_energies(&shifted, t);
            for (a, b) in w.iter().zip(&w2) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn kramers_monotonicity(h in 0.5f64..3.0, t1 in 0.05f64..0.45, dt in 0.01f64..1.0, dh in 0.01f64..1.0) {
            // decreasing in h only holds in the activated regime h > T
            let k1 = kramers_rate(&dw(h, 1.0), temp(t1)).unwrap();
            let k_hot = kramers_rate(&dw(h, 1.0), temp(t1 + dt)).unwrap();
            prop_assert!(k_hot > k1);
            let k_high = kramers_rate(&dw(h + dh, 1.0), temp(t1)).unwrap();
            prop_assert!(k_high < k1);
        }
    }
}
