//! Self-consistency checks run by `cpr validate`.

use crate::closedform::{
    log_negativity_closed, power_moment, printed_double_sum, probability_monotone_check,
    success_probability_closed,
};
use crate::error::Result;
use crate::fock_core::{
    build_heralded_operator, pr_coefficient, tmsv, BeamSplitter, Mode, TmsvParams,
    TruncationPolicy,
};
use crate::measures::{log_negativity, log_negativity_tmsv};
use crate::protocols::{asymmetric_arrangement, cascade, cpr_coefficients, split_arrangement, ProtocolKind};

pub const GRID_LAMBDA: [f64; 4] = [0.1, 0.3, 0.5, 0.7];
pub const GRID_T: [f64; 4] = [0.2, 0.4, 0.6, 0.8];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn from_error(name: &'static str, worst: Result<f64>, bound: f64) -> Self {
        match worst {
            Ok(w) => Self {
                name,
                passed: w <= bound,
                detail: format!("worst deviation {w:.3e} (bound {bound:.0e})"),
            },
            Err(e) => Self {
                name,
                passed: false,
                detail: e.to_string(),
            },
        }
    }
}

/// Direct sum of squared un-normalized coefficients.
pub fn series_probability(k: usize, lambda: f64, t: f64) -> f64 {
    let n_max = series_length(lambda, t);
    cpr_coefficients(k, lambda, t, n_max).iter().map(|c| c * c).sum()
}

/// Logarithmic negativity from the un-normalized coefficients.
pub fn series_log_negativity(k: usize, lambda: f64, t: f64) -> f64 {
    let c = cpr_coefficients(k, lambda, t, series_length(lambda, t));
    let l1: f64 = c.iter().map(|x| x.abs()).sum();
    let l2: f64 = c.iter().map(|x| x * x).sum();
    (l1 * l1 / l2).log2()
}

fn series_length(lambda: f64, _t: f64) -> usize {
    // lambda^n alone bounds the tail well below 1e-20 here
    ((-50.0 / lambda.log10()).ceil() as usize).clamp(20, 400)
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    GRID_LAMBDA
        .iter()
        .flat_map(|&l| GRID_T.iter().map(move |&t| (l, t)))
}

fn max_of(mut values: impl Iterator<Item = Result<f64>>) -> Result<f64> {
    values.try_fold(0.0f64, |acc, v| Ok(acc.max(v?)))
}

pub fn check_tmsv_baseline() -> CheckOutcome {
    let worst = max_of((1..=9).map(|i| {
        let lambda = i as f64 / 10.0;
        let s = tmsv(&TmsvParams::from_lambda(lambda)?, &TruncationPolicy::default());
        Ok((log_negativity(&s) - log_negativity_tmsv(lambda)).abs())
    }));
    CheckOutcome::from_error("tmsv_baseline", worst, 1e-10)
}

pub fn check_operator_identity() -> CheckOutcome {
    let worst = max_of((1..=9).map(|i| {
        let t = i as f64 / 10.0;
        let op = build_heralded_operator(1, 1, &BeamSplitter::new(t)?, 60);
        Ok(op
            .coeffs()
            .iter()
            .enumerate()
            .map(|(n, d)| (d - pr_coefficient(n, t)).abs())
            .fold(0.0, f64::max))
    }));
    CheckOutcome::from_error("operator_identity", worst, 1e-12)
}

pub fn check_arrangement_invariance() -> CheckOutcome {
    let worst = max_of(grid().flat_map(|(lambda, t)| {
        (1..=6usize).map(move |k| {
            let s = tmsv(&TmsvParams::from_lambda(lambda)?, &TruncationPolicy::default());
            let bs = BeamSplitter::new(t)?;
            let reference = cascade(&s, &asymmetric_arrangement(k, ProtocolKind::Pr, Mode::One)?, &bs)?;
            let mut worst = 0.0f64;
            for l in 0..=k {
                let r = cascade(&s, &split_arrangement(l, k - l, ProtocolKind::Pr)?, &bs)?;
                let p = reference.total_probability;
                worst = worst.max((r.total_probability - p).abs() / p);
                for (x, y) in r.state.coeffs().iter().zip(reference.state.coeffs()) {
                    worst = worst.max((x - y).abs());
                }
            }
            Ok(worst)
        })
    }));
    CheckOutcome::from_error("arrangement_invariance", worst, 1e-11)
}

pub fn check_closed_probability() -> CheckOutcome {
    let worst = max_of(grid().flat_map(|(lambda, t)| {
        (1..=6usize).map(move |k| {
            let closed = success_probability_closed(k, lambda, t)?;
            let direct = series_probability(k, lambda, t);
            Ok((closed - direct).abs() / direct)
        })
    }));
    CheckOutcome::from_error("closed_form_probability", worst, 1e-9)
}

pub fn check_printed_double_sum() -> CheckOutcome {
    let worst = max_of([0.05, 0.3, 0.7].into_iter().map(|z| {
        let gap = (printed_double_sum(1, z) - power_moment(1, z)?).abs();
        let expected = z / (1.0 - z);
        Ok((gap - expected).abs())
    }));
    CheckOutcome {
        detail: format!(
            "double sum at m = 1 exceeds the moment by z/(1-z); {}",
            match &worst {
                Ok(w) => format!("residual {w:.3e}"),
                Err(e) => e.to_string(),
            }
        ),
        ..CheckOutcome::from_error("printed_double_sum_divergence", worst, 1e-12)
    }
}

pub fn check_closed_negativity() -> CheckOutcome {
    let worst = max_of(grid().flat_map(|(lambda, t)| {
        [2usize, 4, 6].into_iter().map(move |k| {
            let closed = log_negativity_closed(k, lambda, t)?;
            Ok((closed.value - series_log_negativity(k, lambda, t)).abs())
        })
    }));
    CheckOutcome::from_error("closed_form_negativity_even_k", worst, 1e-9)
}

pub fn check_probability_monotone() -> CheckOutcome {
    let mut violations = 0usize;
    let mut worst = f64::INFINITY;
    for (lambda, t) in grid() {
        match probability_monotone_check(9, lambda, t) {
            Ok(r) => {
                if !r.holds {
                    violations += 1;
                }
                worst = r.margins.iter().copied().fold(worst, f64::min);
            }
            Err(e) => {
                return CheckOutcome {
                    name: "probability_monotone",
                    passed: false,
                    detail: e.to_string(),
                }
            }
        }
    }
    CheckOutcome {
        name: "probability_monotone",
        passed: violations == 0,
        detail: format!("{violations} violations, smallest margin {worst:.3e}"),
    }
}

// The n = 0 term of sum n^m x^n is constant in t; dropping it keeps the
// central difference of a_0 = 1/(1 - x) from cancelling to nothing at tiny x.
fn moment_without_constant(m: usize, x: f64) -> Result<f64> {
    if m == 0 {
        power_moment(0, x).map(|a0| a0 * x)
    } else {
        power_moment(m, x)
    }
}

pub fn check_recursion_fidelity() -> CheckOutcome {
    let h = 1e-6;
    let worst = max_of(grid().flat_map(|(lambda, t)| {
        (1..=6usize).flat_map(move |k| {
            (0..=10usize).map(move |m| {
                let x = |t: f64| lambda * lambda * t.powi(2 * k as i32);
                let deriv = (moment_without_constant(m, x(t + h))? - moment_without_constant(m, x(t - h))?)
                    / (2.0 * h);
                let lhs = t / (2.0 * k as f64) * deriv;
                let rhs = power_moment(m + 1, x(t))?;
                Ok((lhs - rhs).abs() / rhs.abs())
            })
        })
    }));
    CheckOutcome::from_error("recursion_fidelity", worst, 1e-5)
}

pub fn check_composition() -> CheckOutcome {
    let worst = max_of(grid().flat_map(|(lambda, t)| {
        (1..=8usize).map(move |k| {
            let s = tmsv(&TmsvParams::from_lambda(lambda)?, &TruncationPolicy::default());
            let r = cascade(&s, &asymmetric_arrangement(k, ProtocolKind::Pr, Mode::One)?, &BeamSplitter::new(t)?)?;
            let raw = cpr_coefficients(k, lambda, t, s.n_max());
            let norm: f64 = raw.iter().map(|c| c * c).sum::<f64>().sqrt();
            Ok(r
                .state
                .coeffs()
                .iter()
                .zip(&raw)
                .map(|(x, y)| (x - y / norm).abs())
                .fold(0.0, f64::max))
        })
    }));
    CheckOutcome::from_error("composition_matches_series", worst, 1e-11)
}

/// Every check, in a fixed order.
pub fn run_checks() -> Vec<CheckOutcome> {
    vec![
        check_tmsv_baseline(),
        check_operator_identity(),
        check_arrangement_invariance(),
        check_composition(),
        check_closed_probability(),
        check_printed_double_sum(),
        check_closed_negativity(),
        check_probability_monotone(),
        check_recursion_fidelity(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_checks_pass() {
        for c in run_checks() {
            assert!(c.passed, "{}: {}", c.name, c.detail);
        }
    }
}
