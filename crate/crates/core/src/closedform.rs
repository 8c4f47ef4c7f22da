//! Closed-form success probability and negativity of cascaded photon
//! replacement on a two-mode squeezed vacuum.
//!
//! Both series reduce to power moments `sum_n n^m z^n`, evaluated here through
//! Eulerian polynomials. The moments satisfy `a_{m+1} = z d a_m / dz`, which is
//! the transmissivity recursion once `z` is written as a power of `t`.

use std::sync::OnceLock;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};

use crate::error::{domain, Result};

/// Highest moment order supported by the Eulerian table.
pub const MAX_MOMENT_ORDER: usize = 40;

/// Rows `A(m, 0..m)` of the Eulerian triangle for `m <= MAX_MOMENT_ORDER`.
pub fn eulerian_numbers(m: usize) -> Result<&'static [BigUint]> {
    if m > MAX_MOMENT_ORDER {
        return domain(format!("moment order {m} exceeds {MAX_MOMENT_ORDER}"));
    }
    Ok(&eulerian_table()[m].0)
}

// Each row keeps the exact integers and their f64 images.
fn eulerian_table() -> &'static [(Vec<BigUint>, Vec<f64>)] {
    static TABLE: OnceLock<Vec<(Vec<BigUint>, Vec<f64>)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut rows: Vec<Vec<BigUint>> = vec![vec![BigUint::one()]];
        for m in 1..=MAX_MOMENT_ORDER {
            let prev = &rows[m - 1];
            let row = (0..m)
                .map(|j| {
                    let mut a = BigUint::zero();
                    if j < prev.len() {
                        a += &prev[j] * BigUint::from(j + 1);
                    }
                    if j >= 1 && j - 1 < prev.len() {
                        a += &prev[j - 1] * BigUint::from(m - j);
                    }
                    a
                })
                .collect();
            rows.push(row);
        }
        rows.into_iter()
            .map(|row| {
                let floats = row.iter().map(|a| a.to_f64().unwrap_or(f64::INFINITY)).collect();
                (row, floats)
            })
            .collect()
    })
}

/// `sum_{n >= 0} n^m z^n = z A_m(z) / (1 - z)^{m + 1}` for `m >= 1`, and
/// `1 / (1 - z)` for `m = 0`.
pub fn power_moment(m: usize, z: f64) -> Result<f64> {
    if !(z > 0.0 && z < 1.0) {
        return domain(format!("power moment argument must lie in (0, 1), got {z}"));
    }
    if m > MAX_MOMENT_ORDER {
        return domain(format!("moment order {m} exceeds {MAX_MOMENT_ORDER}"));
    }
    if m == 0 {
        return Ok(1.0 / (1.0 - z));
    }
    let coeffs = &eulerian_table()[m].1;
    let poly = coeffs.iter().rev().fold(0.0, |acc, a| acc * z + a);
    Ok(z * poly / (1.0 - z).powi(m as i32 + 1))
}

/// The double sum `a0^{m+1} sum_{i,j=0}^{m} i z^i (1 - z)^j` taken literally.
///
/// Kept only to document that it is not the moment series: at `m = 1` it
/// gives `z (2 - z) / (1 - z)^2` instead of `z / (1 - z)^2`, and at `m = 0`
/// the factor `i` makes it vanish instead of returning `1 / (1 - z)`.
pub fn printed_double_sum(m: usize, z: f64) -> f64 {
    let a0 = 1.0 / (1.0 - z);
    let mut s = 0.0;
    for i in 0..=m {
        for j in 0..=m {
            s += i as f64 * z.powi(i as i32) * (1.0 - z).powi(j as i32);
        }
    }
    a0.powi(m as i32 + 1) * s
}

/// Derived series arguments for `k` replacement steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentSeriesParams {
    pub k: usize,
    pub lambda: f64,
    pub t: f64,
    /// `lambda^2 t^{2k}`, argument of the probability moments.
    pub x: f64,
    /// `lambda t^k`, argument of the amplitude moments.
    pub y: f64,
}

impl MomentSeriesParams {
    pub fn new(k: usize, lambda: f64, t: f64) -> Result<Self> {
        if k == 0 {
            return domain("closed forms need k >= 1");
        }
        if 2 * k > MAX_MOMENT_ORDER {
            return domain(format!("k = {k} needs moments beyond order {MAX_MOMENT_ORDER}"));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return domain(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        if !(t > 0.0 && t <= 1.0) {
            return domain(format!("t must lie in (0, 1], got {t}"));
        }
        let y = lambda * t.powi(k as i32);
        let x = y * y;
        if !(x > 0.0) {
            return domain(format!("lambda t^k underflows at k = {k}, t = {t}"));
        }
        Ok(Self { k, lambda, t, x, y })
    }

    fn r_sq(&self) -> f64 {
        (1.0 - self.t) * (1.0 + self.t)
    }

    /// `sum_l C(order, l) t^{order - 2l} (-1)^l (1 - t^2)^l moment(l)`.
    fn binomial_series(&self, order: usize, z: f64) -> Result<f64> {
        let r_sq = self.r_sq();
        let mut binom = 1.0;
        let mut sum = 0.0;
        for l in 0..=order {
            if l > 0 {
                binom *= (order - l + 1) as f64 / l as f64;
            }
            let sign = if l % 2 == 0 { 1.0 } else { -1.0 };
            let term = binom
                * self.t.powi(order as i32 - 2 * l as i32)
                * sign
                * r_sq.powi(l as i32)
                * power_moment(l, z)?;
            sum += term;
        }
        Ok(sum)
    }
}

/// Success probability of `k` replacement steps, from the moment series.
pub fn success_probability_closed(k: usize, lambda: f64, t: f64) -> Result<f64> {
    let p = MomentSeriesParams::new(k, lambda, t)?;
    Ok((1.0 - lambda * lambda) * p.binomial_series(2 * k, p.x)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClosedNegativity {
    pub value: f64,
    /// False for odd `k`, where some amplitudes turn negative and the
    /// numerator no longer equals `(sum |c_n|)^2`.
    pub valid: bool,
}

/// Logarithmic negativity of `k` replacement steps, from the moment series.
pub fn log_negativity_closed(k: usize, lambda: f64, t: f64) -> Result<ClosedNegativity> {
    let p = MomentSeriesParams::new(k, lambda, t)?;
    let amplitude_sum = p.binomial_series(k, p.y)?;
    let norm = p.binomial_series(2 * k, p.x)?;
    Ok(ClosedNegativity {
        value: (amplitude_sum * amplitude_sum / norm).log2(),
        valid: k % 2 == 0,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneReport {
    pub holds: bool,
    /// `P_k` for `k = 1..=k_max`.
    pub probabilities: Vec<f64>,
    /// `P_k - P_{k+1}` for `k = 1..k_max`; nonnegative when monotone.
    pub margins: Vec<f64>,
}

/// Checks `P_{k+1} <= P_k + 1e-12` for `k < k_max`.
pub fn probability_monotone_check(k_max: usize, lambda: f64, t: f64) -> Result<MonotoneReport> {
    if k_max < 2 {
        return domain(format!("k_max must be at least 2, got {k_max}"));
    }
    let probabilities = (1..=k_max)
        .map(|k| success_probability_closed(k, lambda, t))
        .collect::<Result<Vec<_>>>()?;
    let margins: Vec<f64> = probabilities.windows(2).map(|w| w[0] - w[1]).collect();
    let holds = margins.iter().all(|m| *m >= -1e-12);
    Ok(MonotoneReport {
        holds,
        probabilities,
        margins,
    })
}
