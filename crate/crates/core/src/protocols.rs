//! Cascades of heralded single-mode operations on Schmidt-diagonal states.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fock_core::{
    apply_operator, build_heralded_operator, tmsv, BeamSplitter, DiagonalShiftOperator, Herald,
    Mode, SchmidtDiagonalState, TmsvParams, TruncationPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProtocolKind {
    /// Photon replacement: one photon in, one photon detected.
    Pr,
    /// Photon addition: one photon in, no click.
    Pa,
    /// Photon subtraction: vacuum in, one click.
    Ps,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 3] = [ProtocolKind::Pr, ProtocolKind::Pa, ProtocolKind::Ps];

    pub fn herald(self) -> Herald {
        let (ancilla_in, detected) = match self {
            ProtocolKind::Pr => (1, 1),
            ProtocolKind::Pa => (1, 0),
            ProtocolKind::Ps => (0, 1),
        };
        Herald {
            ancilla_in,
            detected,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            ProtocolKind::Pr => "pr",
            ProtocolKind::Pa => "pa",
            ProtocolKind::Ps => "ps",
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "pr" => Ok(ProtocolKind::Pr),
            "pa" => Ok(ProtocolKind::Pa),
            "ps" => Ok(ProtocolKind::Ps),
            other => domain(format!("unknown protocol '{other}' (expected pr, pa or ps)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Step {
    pub mode: Mode,
    pub kind: ProtocolKind,
}

/// Ordered, nonempty list of heralded steps.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Arrangement {
    steps: Vec<Step>,
}

impl Arrangement {
    pub fn new(steps: Vec<Step>) -> Result<Self> {
        if steps.is_empty() {
            return domain("an arrangement needs at least one step");
        }
        Ok(Self { steps })
    }

    pub fn steps(&self) -> &[Step] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Number of steps acting on `mode`.
    pub fn count_on(&self, mode: Mode) -> usize {
        self.steps.iter().filter(|s| s.mode == mode).count()
    }
}

/// `k/2` steps on each mode, alternating and starting with mode 1.
pub fn symmetric_arrangement(k: usize, kind: ProtocolKind) -> Result<Arrangement> {
    if k == 0 || k % 2 != 0 {
        return domain(format!("symmetric arrangement needs a positive even k, got {k}"));
    }
    let steps = (0..k)
        .map(|i| Step {
            mode: if i % 2 == 0 { Mode::One } else { Mode::Two },
            kind,
        })
        .collect();
    Arrangement::new(steps)
}

/// `k` identical steps on a single mode.
pub fn asymmetric_arrangement(k: usize, kind: ProtocolKind, mode: Mode) -> Result<Arrangement> {
    if k == 0 {
        return domain("asymmetric arrangement needs k >= 1");
    }
    Arrangement::new(vec![Step { mode, kind }; k])
}

/// `first` steps on mode 1 followed by `second` steps on mode 2.
pub fn split_arrangement(first: usize, second: usize, kind: ProtocolKind) -> Result<Arrangement> {
    let steps = std::iter::repeat_n(Step { mode: Mode::One, kind }, first)
        .chain(std::iter::repeat_n(Step { mode: Mode::Two, kind }, second))
    .collect();
    Arrangement::new(steps)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CascadeResult {
    pub state: SchmidtDiagonalState,
    pub step_probabilities: Vec<f64>,
    pub total_probability: f64,
}

/// Runs every step of `arrangement` with the same beam-splitter.
pub fn cascade(
    initial: &SchmidtDiagonalState,
    arrangement: &Arrangement,
    bs: &BeamSplitter,
) -> Result<CascadeResult> {
    let splitters = vec![*bs; arrangement.len()];
    cascade_with(initial, arrangement, &splitters)
}

/// Like [`cascade`], with one beam-splitter per step.
pub fn cascade_with(
    initial: &SchmidtDiagonalState,
    arrangement: &Arrangement,
    splitters: &[BeamSplitter],
) -> Result<CascadeResult> {
    if splitters.len() != arrangement.len() {
        return domain(format!(
            "{} beam-splitters given for {} steps",
            splitters.len(),
            arrangement.len()
        ));
    }

    // Offsets grow by at most one per step, so this bound covers every index
    // an operator can see during the cascade.
    let reach = initial.n_max()
        + initial.offset_a().max(initial.offset_b())
        + arrangement.len() * max_shift(arrangement);
    let mut operators: HashMap<(ProtocolKind, u64), DiagonalShiftOperator> = HashMap::new();

    let mut state = initial.clone();
    let mut step_probabilities = Vec::with_capacity(arrangement.len());
    for (step, bs) in arrangement.steps().iter().zip(splitters) {
        let herald = step.kind.herald();
        let op = operators
            .entry((step.kind, bs.t().to_bits()))
            .or_insert_with(|| build_heralded_operator(herald.ancilla_in, herald.detected, bs, reach));
        let (next, p) = apply_operator(&state, op, step.mode)?;
        state = next;
        step_probabilities.push(p);
    }
    let total_probability = step_probabilities.iter().product();
    Ok(CascadeResult {
        state,
        step_probabilities,
        total_probability,
    })
}

fn max_shift(arrangement: &Arrangement) -> usize {
    arrangement
        .steps()
        .iter()
        .map(|s| {
            let h = s.kind.herald();
            h.ancilla_in.max(h.detected)
        })
        .max()
        .unwrap_or(0)
}

/// Cascade on a freshly truncated TMSV. The truncation is doubled (up to the
/// policy cap) until the output tail is negligible, since the heralded
/// operators can amplify high-index amplitudes polynomially.
pub fn cascade_on_tmsv(
    params: &TmsvParams,
    arrangement: &Arrangement,
    bs: &BeamSplitter,
    policy: &TruncationPolicy,
) -> Result<CascadeResult> {
    let mut policy = *policy;
    loop {
        let initial = tmsv(params, &policy);
        let result = cascade(&initial, arrangement, bs)?;
        let n = initial.n_max();
        if n >= policy.max_n || output_tail(&result.state) < policy.tail_tolerance {
            return Ok(result);
        }
        policy.min_n = (2 * n).min(policy.max_n);
    }
}

fn output_tail(state: &SchmidtDiagonalState) -> f64 {
    let c = state.coeffs();
    let last_two: f64 = c.iter().rev().take(2).map(|x| x.abs()).sum();
    last_two / c.iter().map(|x| x.abs()).sum::<f64>()
}

/// Un-normalized coefficients `sqrt(1 - l^2) l^n t^{k(n-1)} [t^2 - n(1 - t^2)]^k`
/// of `k` replacement steps on a TMSV, evaluated term by term.
pub fn cpr_coefficients(k: usize, lambda: f64, t: f64, n_max: usize) -> Vec<f64> {
    let head = (1.0 - lambda * lambda).sqrt();
    let r_sq = 1.0 - t * t;
    (0..=n_max)
        .map(|n| {
            let filter = if n == 0 {
                t.powi(k as i32)
            } else {
                t.powi((k * (n - 1)) as i32) * (t * t - n as f64 * r_sq).powi(k as i32)
            };
            head * lambda.powi(n as i32) * filter
        })
        .collect()
}
