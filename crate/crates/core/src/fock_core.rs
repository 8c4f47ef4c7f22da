//! Schmidt-diagonal two-mode states on a truncated Fock space, and the
//! single-mode effective operators produced by heralding one output port of
//! a lossless beam-splitter.
//!
//! Transmissivity is always the *amplitude* transmission coefficient `t`,
//! with reflectivity `r = sqrt(1 - t^2)`.

use std::fmt;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Hard cap on the Fock truncation index.
pub const MAX_TRUNCATION: usize = 400;

/// Default relative size below which the appended Schmidt amplitude ends the
/// truncation.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-16;

/// Squared norms below this are treated as an outcome that never occurs.
pub const IMPOSSIBLE_PROBABILITY: f64 = 1e-300;

const NORMALIZATION_TOL: f64 = 1e-12;

/// Schmidt parameter of a two-mode squeezed vacuum, `lambda = tanh(r)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmsvParams {
    lambda: f64,
}

impl TmsvParams {
    pub fn from_lambda(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return domain(format!("lambda must lie in (0, 1), got {lambda}"));
        }
        Ok(Self { lambda })
    }

    /// Builds the parameters from the squeezing parameter `r > 0`.
    pub fn from_squeezing(r: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return domain(format!("squeezing must be positive and finite, got {r}"));
        }
        Self::from_lambda(r.tanh())
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn squeezing(&self) -> f64 {
        self.lambda.atanh()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamSplitter {
    t: f64,
    r_amp: f64,
}

impl BeamSplitter {
    pub fn new(t: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&t) {
            return domain(format!("transmissivity must lie in [0, 1], got {t}"));
        }
        let r_amp = ((1.0 - t) * (1.0 + t)).sqrt();
        Ok(Self { t, r_amp })
    }

    /// Amplitude transmissivity.
    pub fn t(&self) -> f64 {
        self.t
    }

    /// Amplitude reflectivity.
    pub fn r(&self) -> f64 {
        self.r_amp
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Mode {
    One,
    Two,
}

impl Mode {
    pub fn from_index(index: u8) -> Result<Self> {
        match index {
            1 => Ok(Mode::One),
            2 => Ok(Mode::Two),
            other => domain(format!("mode must be 1 or 2, got {other}")),
        }
    }

    pub fn index(self) -> u8 {
        match self {
            Mode::One => 1,
            Mode::Two => 2,
        }
    }

    pub fn other(self) -> Self {
        match self {
            Mode::One => Mode::Two,
            Mode::Two => Mode::One,
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// Controls where Schmidt series are cut off.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationPolicy {
    /// Stop once the last appended amplitude `|c_N|` is below this fraction
    /// of the running `sum |c_n|`. The negativity sums amplitudes, so the
    /// bound is on amplitudes rather than their squares.
    pub tail_tolerance: f64,
    /// Largest admissible truncation index.
    pub max_n: usize,
    /// Never truncate below this index.
    pub min_n: usize,
}

impl Default for TruncationPolicy {
    fn default() -> Self {
        Self {
            tail_tolerance: DEFAULT_TAIL_TOLERANCE,
            max_n: MAX_TRUNCATION,
            min_n: 0,
        }
    }
}

impl TruncationPolicy {
    pub fn with_tail_tolerance(tail_tolerance: f64) -> Result<Self> {
        if !(tail_tolerance > 0.0 && tail_tolerance < 1.0) {
            return domain(format!("tail tolerance must lie in (0, 1), got {tail_tolerance}"));
        }
        Ok(Self {
            tail_tolerance,
            ..Self::default()
        })
    }
}

/// A normalized pure state `sum_n c_n |n + a, n + b>`.
///
/// Coefficients keep their signs; only the offsets distinguish states that
/// went through photon addition or subtraction.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtDiagonalState {
    offset_a: usize,
    offset_b: usize,
    coeffs: Vec<f64>,
}

impl SchmidtDiagonalState {
    /// Normalizes `coeffs` and wraps them with the given per-mode offsets.
    pub fn new(offset_a: usize, offset_b: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.is_empty() {
            return domain("a Schmidt state needs at least one coefficient");
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return domain("Schmidt coefficients must be finite");
        }
        let norm_sq: f64 = coeffs.iter().map(|c| c * c).sum();
        if norm_sq < IMPOSSIBLE_PROBABILITY {
            return domain("Schmidt coefficients have zero norm");
        }
        let scale = norm_sq.sqrt().recip();
        let coeffs = coeffs.into_iter().map(|c| c * scale).collect();
        Ok(Self {
            offset_a,
            offset_b,
            coeffs,
        })
    }

    /// The two-mode vacuum `|0, 0>`.
    pub fn vacuum() -> Self {
        Self::fock_product(0, 0)
    }

    /// The product Fock state `|a, b>`.
    pub fn fock_product(a: usize, b: usize) -> Self {
        Self {
            offset_a: a,
            offset_b: b,
            coeffs: vec![1.0],
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn offset_a(&self) -> usize {
        self.offset_a
    }

    pub fn offset_b(&self) -> usize {
        self.offset_b
    }

    pub fn offset(&self, mode: Mode) -> usize {
        match mode {
            Mode::One => self.offset_a,
            Mode::Two => self.offset_b,
        }
    }

    /// Truncation index `N` (the last stored Schmidt index).
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Squared weight of the last stored coefficient relative to the total.
    pub fn tail_weight(&self) -> f64 {
        let last = self.coeffs[self.coeffs.len() - 1];
        last * last / self.norm_sq()
    }

    /// Size of the last stored amplitude relative to `sum |c_n|`.
    pub fn tail_amplitude(&self) -> f64 {
        let l1: f64 = self.coeffs.iter().map(|c| c.abs()).sum();
        self.coeffs[self.coeffs.len() - 1].abs() / l1
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sq() - 1.0).abs() < NORMALIZATION_TOL
    }
}

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(4 * MAX_TRUNCATION + 1);
        let mut acc = 0.0;
        table.push(acc);
        for n in 1..=4 * MAX_TRUNCATION {
            acc += (n as f64).ln();
            table.push(acc);
        }
        table
    })
}

/// `ln(n!)`, accumulated so that no factorial is ever formed directly.
pub fn ln_factorial(n: usize) -> f64 {
    let table = ln_factorial_table();
    match table.get(n) {
        Some(v) => *v,
        None => {
            let start = table.len() - 1;
            table[start] + ((start + 1)..=n).map(|k| (k as f64).ln()).sum::<f64>()
        }
    }
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// Amplitude `b^{n1,n2}_{k1,k2}` of the beam-splitter path sending `k1` of the
/// `n1` photons in port 1 and `k2` of the `n2` photons in port 2 to output
/// port 1. The output state of that path is `|k1 + k2, n1 + n2 - k1 - k2>`.
pub fn bs_coefficient(n1: usize, n2: usize, k1: usize, k2: usize, bs: &BeamSplitter) -> Result<f64> {
    if k1 > n1 || k2 > n2 {
        return domain(format!(
            "path ({k1}, {k2}) out of range for input ({n1}, {n2})"
        ));
    }
    let out1 = k1 + k2;
    let out2 = n1 + n2 - out1;
    let mut log_mag = ln_binomial(n1, k1) + ln_binomial(n2, k2)
        + 0.5 * (ln_factorial(out1) + ln_factorial(out2) - ln_factorial(n1) - ln_factorial(n2));

    let t_power = n2 + k1 - k2;
    let r_power = k2 + (n1 - k1);
    for (base, power) in [(bs.t(), t_power), (bs.r(), r_power)] {
        if power == 0 {
            continue;
        }
        if base == 0.0 {
            return Ok(0.0);
        }
        log_mag += power as f64 * base.ln();
    }

    let sign = if (n1 - k1) % 2 == 0 { 1.0 } else { -1.0 };
    Ok(sign * log_mag.exp())
}

/// Ancilla preparation and detector outcome of one heralded step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Herald {
    pub ancilla_in: usize,
    pub detected: usize,
}

/// Single-mode operator `sum_n d_n |n + shift><n|`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalShiftOperator {
    shift: i64,
    coeffs: Vec<f64>,
    herald: Herald,
    bs: BeamSplitter,
}

impl DiagonalShiftOperator {
    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coefficient(&self, n: usize) -> Option<f64> {
        self.coeffs.get(n).copied()
    }

    pub fn herald(&self) -> Herald {
        self.herald
    }

    pub fn beam_splitter(&self) -> BeamSplitter {
        self.bs
    }

    /// Largest input Fock index covered by the coefficient table.
    pub fn n_max(&self) -> usize {
        self.coeffs.len() - 1
    }
}

/// Effective operator obtained by mixing the system mode with `ancilla_in`
/// photons and keeping the branch where the ancilla output port carries
/// exactly `detected` photons.
pub fn build_heralded_operator(
    ancilla_in: usize,
    detected: usize,
    bs: &BeamSplitter,
    n_max: usize,
) -> DiagonalShiftOperator {
    let coeffs = (0..=n_max)
        .map(|n| {
            let total = n + ancilla_in;
            if total < detected {
                return 0.0;
            }
            let out = total - detected;
            (0..=ancilla_in)
                .filter_map(|k2| {
                    let k1 = out.checked_sub(k2)?;
                    if k1 > n {
                        return None;
                    }
                    // indices are in range by construction
                    bs_coefficient(n, ancilla_in, k1, k2, bs).ok()
                })
                .sum()
        })
        .collect();

    DiagonalShiftOperator {
        shift: ancilla_in as i64 - detected as i64,
        coeffs,
        herald: Herald {
            ancilla_in,
            detected,
        },
        bs: *bs,
    }
}

/// Photon-replacement amplitude on `|n>`: `t^{n-1} [t^2 - n (1 - t^2)]`,
/// with the `n = 0` entry evaluated as `t`.
pub fn pr_coefficient(n: usize, t: f64) -> f64 {
    if n == 0 {
        return t;
    }
    let nf = n as f64;
    t.powi(n as i32 - 1) * (t * t - nf * (1.0 - t * t))
}

/// Two-mode squeezed vacuum truncated according to `policy`.
pub fn tmsv(params: &TmsvParams, policy: &TruncationPolicy) -> SchmidtDiagonalState {
    let lambda = params.lambda();
    let head = (1.0 - lambda * lambda).sqrt();
    let mut coeffs = vec![head];
    let mut running = head;
    for n in 1..=policy.max_n {
        let c = head * lambda.powi(n as i32);
        coeffs.push(c);
        running += c;
        if n >= policy.min_n && c < policy.tail_tolerance * running {
            break;
        }
    }
    let scale = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt().recip();
    coeffs.iter_mut().for_each(|c| *c *= scale);
    SchmidtDiagonalState {
        offset_a: 0,
        offset_b: 0,
        coeffs,
    }
}

/// Applies `op` to one mode of `state`, returning the renormalized state and
/// the probability of the heralding event.
///
/// When the target mode's offset would become negative, the annihilated
/// leading amplitudes are dropped and the remaining support is re-indexed,
/// which shifts the other mode's offset up by the same amount.
pub fn apply_operator(
    state: &SchmidtDiagonalState,
    op: &DiagonalShiftOperator,
    mode: Mode,
) -> Result<(SchmidtDiagonalState, f64)> {
    let offset = state.offset(mode);
    let needed = offset + state.n_max();
    if needed > op.n_max() {
        return domain(format!(
            "operator covers Fock indices up to {}, state reaches {needed}",
            op.n_max()
        ));
    }

    let mut coeffs: Vec<f64> = state
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, c)| op.coeffs[n + offset] * c)
        .collect();
    let probability: f64 = coeffs.iter().map(|c| c * c).sum();
    if !(probability >= IMPOSSIBLE_PROBABILITY) {
        return Err(Error::ImpossibleOutcome(format!(
            "herald ({} in, {} detected) at t = {} never fires on this state",
            op.herald.ancilla_in,
            op.herald.detected,
            op.bs.t()
        )));
    }

    let mut target = offset as i64 + op.shift;
    let mut other = state.offset(mode.other()) as i64;
    if target < 0 {
        let drop = (-target) as usize;
        coeffs.drain(..drop.min(coeffs.len()));
        other += drop as i64;
        target = 0;
    }
    if coeffs.is_empty() {
        return Err(Error::ImpossibleOutcome(
            "all surviving amplitudes were annihilated".into(),
        ));
    }

    let scale = probability.sqrt().recip();
    coeffs.iter_mut().for_each(|c| *c *= scale);
    let (offset_a, offset_b) = match mode {
        Mode::One => (target as usize, other as usize),
        Mode::Two => (other as usize, target as usize),
    };
    Ok((
        SchmidtDiagonalState {
            offset_a,
            offset_b,
            coeffs,
        },
        probability.min(1.0),
    ))
}
