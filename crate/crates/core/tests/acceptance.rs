//! Acceptance suite. Each criterion prints one `PASS`/`FAIL` line with its
//! measured value and runtime; the process exits non-zero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use cpr_core::closedform::{
    log_negativity_closed, power_moment, printed_double_sum, probability_monotone_check,
    success_probability_closed,
};
use cpr_core::protocols::split_arrangement;
use cpr_core::sweep::{SEARCH_INTERVAL, T_CLAMP};
use cpr_core::validation::{series_log_negativity, series_probability, GRID_LAMBDA, GRID_T};
use cpr_core::{
    asymmetric_arrangement, build_heralded_operator, cascade, log_negativity, log_negativity_tmsv,
    non_gaussianity, pr_coefficient, tmsv, BeamSplitter, Evaluator, Mode, ProtocolKind, ProtocolSetup,
    Result, TmsvParams, TruncationPolicy,
};

const LAMBDA_REF: f64 = 0.1;

/// Name, runtime budget in seconds, check.
type Criterion = (&'static str, u64, Box<dyn Fn() -> Result<Verdict>>);

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    GRID_LAMBDA
        .iter()
        .flat_map(|&l| GRID_T.iter().map(move |&t| (l, t)))
}

fn pr(k: usize) -> ProtocolSetup {
    ProtocolSetup::default_for(ProtocolKind::Pr, k)
}

fn tmsv_baseline() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let lambda = i as f64 / 10.0;
        let s = tmsv(&TmsvParams::from_lambda(lambda)?, &TruncationPolicy::default());
        let expected = ((1.0 + lambda) / (1.0 - lambda)).log2();
        worst = worst.max((log_negativity(&s) - expected).abs());
    }
    verdict(worst <= 1e-10, format!("max |E_N - log2((1+l)/(1-l))| = {worst:.3e}"))
}

fn operator_identity() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for i in 1..=9 {
        let t = i as f64 / 10.0;
        let op = build_heralded_operator(1, 1, &BeamSplitter::new(t)?, 60);
        for n in 0..=60 {
            let d = op.coefficient(n).unwrap_or(f64::NAN);
            let expected = t.powi(n as i32 - 1) * (t * t - n as f64 * (1.0 - t * t));
            worst = worst.max((d - expected).abs());
            worst = worst.max((d - pr_coefficient(n, t)).abs());
        }
    }
    verdict(!worst.is_nan() && worst <= 1e-12, format!("max entry error {worst:.3e}"))
}

fn arrangement_invariance() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for (lambda, t) in grid() {
        let s = tmsv(&TmsvParams::from_lambda(lambda)?, &TruncationPolicy::default());
        let bs = BeamSplitter::new(t)?;
        for k in 1..=6 {
            let reference = cascade(&s, &asymmetric_arrangement(k, ProtocolKind::Pr, Mode::One)?, &bs)?;
            for l in 0..=k {
                let r = cascade(&s, &split_arrangement(l, k - l, ProtocolKind::Pr)?, &bs)?;
                let p = reference.total_probability;
                worst = worst.max((r.total_probability - p).abs() / p);
                for (x, y) in r.state.coeffs().iter().zip(reference.state.coeffs()) {
                    worst = worst.max((x - y).abs());
                }
            }
        }
    }
    verdict(worst <= 1e-11, format!("max split disagreement {worst:.3e}"))
}

fn closed_probability() -> Result<Verdict> {
    let mut worst = 0.0f64;
    for (lambda, t) in grid() {
        for k in 1..=6 {
            let direct = series_probability(k, lambda, t);
            worst = worst.max((success_probability_closed(k, lambda, t)? - direct).abs() / direct);
        }
    }
    // the double-sum form must sit z/(1-z) above the moment at m = 1
    let mut regression = 0.0f64;
    for z in [0.05, 0.3, 0.7] {
        let gap = printed_double_sum(1, z) - power_moment(1, z)?;
        regression = regression.max((gap - z / (1.0 - z)).abs());
    }
    verdict(
        worst <= 1e-9 && regression <= 1e-12,
        format!("max relative error {worst:.3e}; double-sum gap residual {regression:.3e}"),
    )
}

fn closed_negativity() -> Result<Verdict> {
    let (mut even, mut odd) = (0.0f64, 0.0f64);
    for (lambda, t) in grid() {
        for k in 1..=6 {
            let closed = log_negativity_closed(k, lambda, t)?;
            let err = (closed.value - series_log_negativity(k, lambda, t)).abs();
            if k % 2 == 0 {
                even = even.max(err);
            } else {
                odd = odd.max(err);
            }
        }
    }
    verdict(even <= 1e-9, format!("even-k max error {even:.3e}; odd-k residual {odd:.3e} (reported only)"))
}

fn probability_monotone() -> Result<Verdict> {
    let mut smallest = f64::INFINITY;
    let mut holds = true;
    for (lambda, t) in grid() {
        let report = probability_monotone_check(9, lambda, t)?;
        holds &= report.holds;
        smallest = report.margins.iter().copied().fold(smallest, f64::min);
    }
    verdict(holds, format!("smallest margin P_k - P_(k+1) = {smallest:.3e}"))
}

fn entanglement_anchors(ev: &Evaluator) -> Result<Verdict> {
    let ks = [1usize, 3, 6];
    let mut notes = Vec::new();
    let mut passed = true;
    for &k in &ks {
        let at_one = ev.log_negativity(&pr(k), LAMBDA_REF, 1.0)?;
        let at_low = ev.log_negativity(&pr(k), LAMBDA_REF, 0.01)?;
        passed &= (at_one - 0.28951).abs() <= 1e-6 && at_low < 0.02;
        notes.push(format!("k={k}: E_N(1)={at_one:.6} E_N(0.01)={at_low:.3e}"));
    }
    let maxima = ks
        .iter()
        .map(|&k| ev.find_t_max(&pr(k), LAMBDA_REF, 1e-8).map(|p| p.e_max))
        .collect::<Result<Vec<_>>>()?;
    passed &= maxima.windows(2).all(|w| w[1] > w[0]);
    notes.push(format!("max E_N = {maxima:.5?}"));
    verdict(passed, notes.join("; "))
}

fn optimal_trend(ev: &Evaluator) -> Result<Verdict> {
    let trend = ev.trend(ProtocolKind::Pr, 10, LAMBDA_REF)?;
    let e: Vec<f64> = trend.points.iter().map(|p| p.e_max).collect();
    let inc: Vec<f64> = e.windows(2).map(|w| w[1] - w[0]).collect();
    let monotone = inc.iter().all(|d| *d > 0.0);
    let saturating = inc.windows(2).all(|w| w[1] < w[0]);
    let slope = trend.slope.unwrap_or(f64::NAN);
    let slope_ok = (slope + 2.0 / 3.0).abs() <= 0.15;
    verdict(
        monotone && saturating && slope_ok,
        format!(
            "monotone={monotone} decreasing_increments={saturating} increments={inc:.4?} slope={slope:.4}"
        ),
    )
}

fn non_gaussianity_criterion(ev: &Evaluator) -> Result<Verdict> {
    let mut tmsv_worst = 0.0f64;
    for i in 1..=9 {
        let s = tmsv(&TmsvParams::from_lambda(i as f64 / 10.0)?, &TruncationPolicy::default());
        tmsv_worst = tmsv_worst.max(non_gaussianity(&s)?);
    }

    let setup = pr(4);
    let baseline = log_negativity_tmsv(LAMBDA_REF);
    let (lo, hi) = SEARCH_INTERVAL;
    let n = 400;
    let ts: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
    let mut g = Vec::with_capacity(ts.len());
    let mut band: Option<(f64, f64)> = None;
    for &t in &ts {
        let m = ev.evaluate(&setup, LAMBDA_REF, t)?;
        g.push(m.non_gaussianity);
        if m.log_negativity > baseline {
            band = Some(band.map_or((t, t), |(a, _)| (a, t)));
        }
    }
    let (steep_t, _) = ts
        .windows(2)
        .zip(g.windows(2))
        .map(|(t, g)| (0.5 * (t[0] + t[1]), ((g[1] - g[0]) / (t[1] - t[0])).abs()))
        .fold((f64::NAN, f64::NEG_INFINITY), |best, c| if c.1 > best.1 { c } else { best });
    let near_one = *g.last().unwrap_or(&f64::NAN);
    let peak = g.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let inside = band.is_some_and(|(a, b)| (a..=b).contains(&steep_t));
    verdict(
        tmsv_worst < 1e-9 && near_one < 0.05 * peak && inside,
        format!(
            "G(TMSV)<={tmsv_worst:.1e}; G({hi})={near_one:.3e} vs peak {peak:.3}; steepest at t={steep_t:.4}, band {band:.4?}"
        ),
    )
}

fn addition_subtraction_properties(ev: &Evaluator) -> Result<Verdict> {
    let k = 4;
    let ts: Vec<f64> = (1..=999).map(|i| i as f64 / 1000.0).collect();
    let cmp = ev.compare_protocols(k, LAMBDA_REF, &ts)?;
    let en = |r: &cpr_core::SweepRecord| r.measures.map_or(f64::NAN, |m| m.log_negativity);

    let mut agree = 0.0f64;
    for (a, s) in cmp.pa.iter().zip(&cmp.ps) {
        agree = agree.max((en(a) - en(s)).abs());
    }

    let mut at_clamp = true;
    for kind in [ProtocolKind::Pa, ProtocolKind::Ps] {
        let setup = ProtocolSetup::default_for(kind, k);
        let top = ev.log_negativity(&setup, LAMBDA_REF, T_CLAMP.1)?;
        let series = if kind == ProtocolKind::Pa { &cmp.pa } else { &cmp.ps };
        at_clamp &= series.iter().all(|r| en(r) <= top);
    }

    let overtakes: Vec<f64> = cmp
        .pr
        .iter()
        .zip(&cmp.pa)
        .filter(|(p, a)| p.t > 0.9 && p.measures.map(|m| m.rate) > a.measures.map(|m| m.rate))
        .map(|(p, _)| p.t)
        .collect();
    let band = overtakes.first().zip(overtakes.last());
    verdict(
        agree <= 1e-9 && at_clamp && band.is_some(),
        format!("|E_PA - E_PS| <= {agree:.3e}; max at clamp={at_clamp}; rate(PR)>rate(PA) on t in {band:?}"),
    )
}

fn enhancement_threshold(ev: &Evaluator) -> Result<Verdict> {
    let mut values = Vec::new();
    for k in [1usize, 4] {
        values.push(ev.enhancement_threshold(ProtocolKind::Pr, k, 1e-4)?);
    }
    let passed = values.iter().all(|l| *l > 0.45 && *l < 0.75);
    verdict(passed, format!("lambda* for k=1,4 = {values:.4?}"))
}

fn main() -> ExitCode {
    let ev = Evaluator::default();
    let criteria: Vec<Criterion> = vec![
        ("tmsv_baseline", 1, Box::new(tmsv_baseline)),
        ("operator_identity", 1, Box::new(operator_identity)),
        ("arrangement_invariance", 5, Box::new(arrangement_invariance)),
        ("closed_form_probability", 10, Box::new(closed_probability)),
        ("closed_form_negativity", 10, Box::new(closed_negativity)),
        ("probability_monotone", 10, Box::new(probability_monotone)),
        ("entanglement_anchors", 30, Box::new(move || entanglement_anchors(&ev))),
        ("optimal_trend", 120, Box::new(move || optimal_trend(&ev))),
        ("non_gaussianity", 60, Box::new(move || non_gaussianity_criterion(&ev))),
        ("addition_subtraction_comparison", 60, Box::new(move || addition_subtraction_properties(&ev))),
        ("enhancement_threshold", 60, Box::new(move || enhancement_threshold(&ev))),
    ];

    let mut failures = 0;
    for (name, budget, check) in &criteria {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let in_time = elapsed <= Duration::from_secs(*budget);
        let (passed, detail) = match outcome {
            Ok(v) => (v.passed && in_time, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        if !passed {
            failures += 1;
        }
        let tag = if passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} {name}: {detail} [{:.2}s of {budget}s]",
            elapsed.as_secs_f64()
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
