//! Entanglement and non-Gaussianity of Schmidt-diagonal pure states.
//!
//! Quadratures are `x = a + a^dag`, `p = i (a^dag - a)`, so the vacuum has unit
//! variance and unit symplectic eigenvalues. All logarithms are base 2.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fock_core::SchmidtDiagonalState;

const PHYSICALITY_TOL: f64 = 1e-9;
const ENTROPY_EDGE: f64 = 1e-12;

/// Covariance matrix `[[a1 I, g s], [g s, a2 I]]` with `I = diag(1, 1)` and
/// `s = diag(1, -1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceMatrix {
    pub alpha1: f64,
    pub alpha2: f64,
    pub gamma: f64,
}

impl CovarianceMatrix {
    /// Full 4x4 matrix in `(x1, p1, x2, p2)` ordering.
    pub fn to_matrix(&self) -> [[f64; 4]; 4] {
        let (a1, a2, g) = (self.alpha1, self.alpha2, self.gamma);
        [
            [a1, 0.0, g, 0.0],
            [0.0, a1, 0.0, -g],
            [g, 0.0, a2, 0.0],
            [0.0, -g, 0.0, a2],
        ]
    }

    pub fn determinant(&self) -> f64 {
        let d = self.alpha1 * self.alpha2 - self.gamma * self.gamma;
        d * d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureRecord {
    /// Logarithmic negativity in bits.
    pub log_negativity: f64,
    pub probability: f64,
    /// Relative-entropy non-Gaussianity in bits.
    pub non_gaussianity: f64,
    /// `log_negativity * probability`.
    pub rate: f64,
}

impl MeasureRecord {
    /// Evaluates every measure on `state`, which was heralded with
    /// `probability`.
    pub fn evaluate(state: &SchmidtDiagonalState, probability: f64) -> Result<Self> {
        let log_negativity = log_negativity(state);
        Ok(Self {
            log_negativity,
            probability,
            non_gaussianity: non_gaussianity(state)?,
            rate: entanglement_rate(log_negativity, probability),
        })
    }
}

/// `2 log2(sum |c_n|)` for the normalized coefficients.
pub fn log_negativity(state: &SchmidtDiagonalState) -> f64 {
    let c = state.coeffs();
    let l1: f64 = c.iter().map(|x| x.abs()).sum();
    let l2 = state.norm_sq().sqrt();
    (2.0 * (l1 / l2).log2()).max(0.0)
}

/// Closed form for the two-mode squeezed vacuum, `log2((1 + l) / (1 - l))`.
pub fn log_negativity_tmsv(lambda: f64) -> f64 {
    ((1.0 + lambda) / (1.0 - lambda)).log2()
}

pub fn covariance(state: &SchmidtDiagonalState) -> CovarianceMatrix {
    let c = state.coeffs();
    let (a, b) = (state.offset_a() as f64, state.offset_b() as f64);
    let norm = state.norm_sq();
    let mut occ1 = 0.0;
    let mut occ2 = 0.0;
    let mut cross = 0.0;
    for (n, &cn) in c.iter().enumerate() {
        let n = n as f64;
        occ1 += (n + a) * cn * cn;
        occ2 += (n + b) * cn * cn;
    }
    for (n, pair) in c.windows(2).enumerate() {
        let n = n as f64;
        cross += ((n + a + 1.0) * (n + b + 1.0)).sqrt() * pair[0] * pair[1];
    }
    CovarianceMatrix {
        alpha1: 1.0 + 2.0 * occ1 / norm,
        alpha2: 1.0 + 2.0 * occ2 / norm,
        gamma: 2.0 * cross / norm,
    }
}

/// Symplectic eigenvalues `(nu_plus, nu_minus)`, largest first.
pub fn symplectic_eigenvalues(v: &CovarianceMatrix) -> Result<(f64, f64)> {
    let (a1, a2, g) = (v.alpha1, v.alpha2, v.gamma);
    let (plus, minus) = if a1 == a2 {
        let nu_sq = a1 * a1 - g * g;
        if nu_sq < 0.0 {
            return Err(Error::NonPhysical(format!("alpha^2 - gamma^2 = {nu_sq:e}")));
        }
        (nu_sq.sqrt(), nu_sq.sqrt())
    } else {
        let delta = a1 * a1 + a2 * a2 - 2.0 * g * g;
        let disc = delta * delta - 4.0 * v.determinant();
        if disc < -PHYSICALITY_TOL {
            return Err(Error::NonPhysical(format!("negative discriminant {disc:e}")));
        }
        let root = disc.max(0.0).sqrt();
        (
            ((delta + root) / 2.0).max(0.0).sqrt(),
            ((delta - root) / 2.0).max(0.0).sqrt(),
        )
    };
    if minus < 1.0 - PHYSICALITY_TOL {
        return Err(Error::NonPhysical(format!(
            "symplectic eigenvalue {minus} below the vacuum value"
        )));
    }
    Ok((plus, minus))
}

/// Entropy of a thermal mode with symplectic eigenvalue `z`, continuously
/// extended to `g(1) = 0`.
pub fn entropy_g(z: f64) -> f64 {
    if z - 1.0 < ENTROPY_EDGE {
        return 0.0;
    }
    let up = (z + 1.0) / 2.0;
    let down = (z - 1.0) / 2.0;
    up * up.log2() - down * down.log2()
}

/// Entropy of the Gaussian state sharing the moments of `state` (the state
/// itself is pure).
pub fn non_gaussianity(state: &SchmidtDiagonalState) -> Result<f64> {
    let (plus, minus) = symplectic_eigenvalues(&covariance(state))?;
    Ok(entropy_g(plus) + entropy_g(minus))
}

pub fn entanglement_rate(log_negativity: f64, probability: f64) -> f64 {
    log_negativity * probability
}
