//! Parameter sweeps and transmissivity optimization.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::fock_core::{
    tmsv, BeamSplitter, Mode, SchmidtDiagonalState, TmsvParams, TruncationPolicy,
};
use crate::measures::{log_negativity, log_negativity_tmsv, MeasureRecord};
use crate::protocols::{
    asymmetric_arrangement, cascade_on_tmsv, symmetric_arrangement, Arrangement, ProtocolKind,
};

/// Transmissivity domain of the optimization routines.
pub const T_CLAMP: (f64, f64) = (1e-6, 1.0 - 1e-9);

/// Interval scanned by [`Evaluator::find_t_max`].
pub const SEARCH_INTERVAL: (f64, f64) = (0.01, 0.999);

/// Coarse scan resolution before golden-section refinement.
pub const SCAN_POINTS: usize = 64;

/// Interval on which [`Evaluator::enhancement_threshold`] brackets its root.
pub const THRESHOLD_BRACKET: (f64, f64) = (0.05, 0.95);

const INNER_TOL: f64 = 1e-8;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ArrangementMode {
    Symmetric,
    Asymmetric(Mode),
}

/// Which cascade to run: kind, number of steps and their placement.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProtocolSetup {
    pub kind: ProtocolKind,
    pub k: usize,
    pub arrangement: ArrangementMode,
}

impl ProtocolSetup {
    pub fn new(kind: ProtocolKind, k: usize, arrangement: ArrangementMode) -> Self {
        Self {
            kind,
            k,
            arrangement,
        }
    }

    /// Replacement on mode 1 only; addition and subtraction split evenly over
    /// both modes when `k` is even.
    pub fn default_for(kind: ProtocolKind, k: usize) -> Self {
        let arrangement = match kind {
            ProtocolKind::Pa | ProtocolKind::Ps if k % 2 == 0 && k > 0 => ArrangementMode::Symmetric,
            _ => ArrangementMode::Asymmetric(Mode::One),
        };
        Self::new(kind, k, arrangement)
    }

    /// `None` when `k = 0`, i.e. the input state is passed through.
    pub fn arrangement(&self) -> Result<Option<Arrangement>> {
        if self.k == 0 {
            return Ok(None);
        }
        let a = match self.arrangement {
            ArrangementMode::Symmetric => symmetric_arrangement(self.k, self.kind)?,
            ArrangementMode::Asymmetric(mode) => asymmetric_arrangement(self.k, self.kind, mode)?,
        };
        Ok(Some(a))
    }
}

/// One grid point. `measures` is `None` when the herald can never fire there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub protocol: ProtocolKind,
    pub k: usize,
    pub lambda: f64,
    pub t: f64,
    pub measures: Option<MeasureRecord>,
}

impl SweepRecord {
    pub fn probability(&self) -> f64 {
        self.measures.map_or(0.0, |m| m.probability)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrendPoint {
    pub k: usize,
    /// Transmissivity maximizing the logarithmic negativity.
    pub t_max: f64,
    pub e_max: f64,
    pub p_at_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trend {
    pub points: Vec<TrendPoint>,
    /// Least-squares slope of `log10(p_at_max)` against `k`.
    pub slope: Option<f64>,
}

/// PR, PA and PS series over the same transmissivity grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    pub pr: Vec<SweepRecord>,
    pub pa: Vec<SweepRecord>,
    pub ps: Vec<SweepRecord>,
}

impl Comparison {
    pub fn series(&self) -> [(ProtocolKind, &[SweepRecord]); 3] {
        [
            (ProtocolKind::Pr, &self.pr),
            (ProtocolKind::Pa, &self.pa),
            (ProtocolKind::Ps, &self.ps),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Evaluator {
    pub policy: TruncationPolicy,
}

impl Evaluator {
    pub fn new(policy: TruncationPolicy) -> Self {
        Self { policy }
    }

    /// Output state and heralding probability at one parameter point.
    pub fn state(&self, setup: &ProtocolSetup, lambda: f64, t: f64) -> Result<(SchmidtDiagonalState, f64)> {
        let params = TmsvParams::from_lambda(lambda)?;
        let bs = BeamSplitter::new(t)?;
        match setup.arrangement()? {
            None => Ok((tmsv(&params, &self.policy), 1.0)),
            Some(a) => {
                let r = cascade_on_tmsv(&params, &a, &bs, &self.policy)?;
                Ok((r.state, r.total_probability))
            }
        }
    }

    pub fn evaluate(&self, setup: &ProtocolSetup, lambda: f64, t: f64) -> Result<MeasureRecord> {
        let (state, p) = self.state(setup, lambda, t)?;
        MeasureRecord::evaluate(&state, p)
    }

    pub fn log_negativity(&self, setup: &ProtocolSetup, lambda: f64, t: f64) -> Result<f64> {
        self.state(setup, lambda, t).map(|(s, _)| log_negativity(&s))
    }

    /// One record per `(lambda, t)` pair, lambda-major.
    pub fn grid_sweep(
        &self,
        setup: &ProtocolSetup,
        lambda_grid: &[f64],
        t_grid: &[f64],
    ) -> Result<Vec<SweepRecord>> {
        if let Some(l) = lambda_grid.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return domain(format!("lambda grid value {l} outside (0, 1)"));
        }
        if let Some(t) = t_grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return domain(format!("t grid value {t} outside [0, 1]"));
        }
        setup.arrangement()?;

        let points: Vec<(f64, f64)> = lambda_grid
            .iter()
            .flat_map(|&l| t_grid.iter().map(move |&t| (l, t)))
            .collect();
        points
            .par_iter()
            .map(|&(lambda, t)| {
                let measures = match self.evaluate(setup, lambda, t) {
                    Ok(m) => Some(m),
                    Err(Error::ImpossibleOutcome(_)) => None,
                    Err(e) => return Err(e),
                };
                Ok(SweepRecord {
                    protocol: setup.kind,
                    k: setup.k,
                    lambda,
                    t,
                    measures,
                })
            })
            .collect()
    }

    fn objective(&self, setup: &ProtocolSetup, lambda: f64, t: f64) -> Result<f64> {
        match self.log_negativity(setup, lambda, t) {
            Ok(e) => Ok(e),
            Err(Error::ImpossibleOutcome(_)) => Ok(f64::NEG_INFINITY),
            Err(e) => Err(e),
        }
    }

    /// Transmissivity maximizing the logarithmic negativity.
    ///
    /// The negativity can have several lobes in `t` (amplitudes change sign
    /// as `t` moves), so every local maximum of a coarse scan is refined by
    /// golden-section search and the best refinement wins.
    pub fn find_t_max(&self, setup: &ProtocolSetup, lambda: f64, tol: f64) -> Result<TrendPoint> {
        if !(tol >= 1e-8) {
            return domain(format!("tolerance must be at least 1e-8, got {tol}"));
        }
        let (lo, hi) = SEARCH_INTERVAL;
        let step = (hi - lo) / (SCAN_POINTS - 1) as f64;
        let grid: Vec<f64> = (0..SCAN_POINTS)
            .map(|i| if i == SCAN_POINTS - 1 { hi } else { lo + i as f64 * step })
            .collect();
        let values = grid
            .iter()
            .map(|&t| self.objective(setup, lambda, t))
            .collect::<Result<Vec<_>>>()?;

        let finite = values.iter().copied().filter(|v| v.is_finite());
        let (min, max) = finite.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        let variation = max - min;
        if !(variation >= tol) {
            return Err(Error::DegenerateObjective { variation, tol });
        }

        let mut best = (f64::NAN, f64::NEG_INFINITY);
        for i in 0..grid.len() {
            let left = if i > 0 { values[i - 1] } else { f64::NEG_INFINITY };
            let right = values.get(i + 1).copied().unwrap_or(f64::NEG_INFINITY);
            if !(values[i].is_finite() && values[i] >= left && values[i] >= right) {
                continue;
            }
            if values[i] > best.1 {
                best = (grid[i], values[i]);
            }
            let a = grid[i.saturating_sub(1)];
            let b = grid[(i + 1).min(grid.len() - 1)];
            let refined = golden_section_max(|t| self.objective(setup, lambda, t), a, b, tol)?;
            if refined.1 > best.1 {
                best = refined;
            }
        }

        let (t_max, e_max) = best;
        let (_, p_at_max) = self.state(setup, lambda, t_max)?;
        Ok(TrendPoint {
            k: setup.k,
            t_max,
            e_max,
            p_at_max,
        })
    }

    /// Optimal points for `k = 1..=k_max`.
    pub fn trend(&self, kind: ProtocolKind, k_max: usize, lambda: f64) -> Result<Trend> {
        if k_max == 0 || k_max > 20 {
            return domain(format!("k_max must lie in 1..=20, got {k_max}"));
        }
        let points = (1..=k_max)
            .into_par_iter()
            .map(|k| self.find_t_max(&ProtocolSetup::default_for(kind, k), lambda, INNER_TOL))
            .collect::<Result<Vec<_>>>()?;
        let slope = probability_slope(&points);
        Ok(Trend { points, slope })
    }

    /// Squeezing `lambda*` below which the best cascade beats the bare TMSV.
    pub fn enhancement_threshold(&self, kind: ProtocolKind, k: usize, tol: f64) -> Result<f64> {
        if !(tol >= 1e-6) {
            return domain(format!("tolerance must be at least 1e-6, got {tol}"));
        }
        if k == 0 {
            return Err(Error::NoThreshold("k = 0 leaves the state unchanged".into()));
        }
        let setup = ProtocolSetup::default_for(kind, k);
        let gain = |lambda: f64| -> Result<f64> {
            let best = self.find_t_max(&setup, lambda, INNER_TOL)?;
            Ok(best.e_max - log_negativity_tmsv(lambda))
        };

        let (mut a, mut b) = THRESHOLD_BRACKET;
        let (fa, fb) = (gain(a)?, gain(b)?);
        if !(fa * fb < 0.0) {
            return Err(Error::NoThreshold(format!(
                "gain does not change sign on [{a}, {b}] ({fa:e}, {fb:e})"
            )));
        }
        let positive_low = fa > 0.0;
        while b - a > tol {
            let mid = 0.5 * (a + b);
            if (gain(mid)? > 0.0) == positive_low {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }

    /// Symmetric PR, PA and PS cascades of `k` steps over `t_grid`.
    pub fn compare_protocols(&self, k: usize, lambda: f64, t_grid: &[f64]) -> Result<Comparison> {
        if k == 0 || k % 2 != 0 {
            return domain(format!("protocol comparison needs a positive even k, got {k}"));
        }
        let run = |kind| {
            let setup = ProtocolSetup::new(kind, k, ArrangementMode::Symmetric);
            self.grid_sweep(&setup, &[lambda], t_grid)
        };
        Ok(Comparison {
            pr: run(ProtocolKind::Pr)?,
            pa: run(ProtocolKind::Pa)?,
            ps: run(ProtocolKind::Ps)?,
        })
    }
}

/// Golden-section search for a maximum of `f` on `[a, b]`; returns the best
/// point evaluated.
pub fn golden_section_max<F>(mut f: F, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    let mut best = if fc >= fd { (c, fc) } else { (d, fd) };
    while (b - a).abs() > tol {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
            if fc > best.1 {
                best = (c, fc);
            }
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
            if fd > best.1 {
                best = (d, fd);
            }
        }
    }
    Ok(best)
}

/// Least-squares slope of `log10(p_at_max)` against `k`, skipping `k < 3`
/// when enough points remain.
pub fn probability_slope(points: &[TrendPoint]) -> Option<f64> {
    let usable: Vec<&TrendPoint> = if points.iter().filter(|p| p.k >= 3).count() >= 2 {
        points.iter().filter(|p| p.k >= 3).collect()
    } else {
        points.iter().collect()
    };
    if usable.len() < 2 {
        return None;
    }
    let xs: Vec<f64> = usable.iter().map(|p| p.k as f64).collect();
    let ys: Vec<f64> = usable.iter().map(|p| p.p_at_max.log10()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pr(k: usize) -> ProtocolSetup {
        ProtocolSetup::default_for(ProtocolKind::Pr, k)
    }

    #[test]
    fn golden_section_finds_parabola_peak() {
        let (x, y) = golden_section_max(|x| Ok(-(x - 0.3f64).powi(2) + 2.0), 0.0, 1.0, 1e-9).unwrap();
        assert!((x - 0.3).abs() < 1e-8);
        assert!((y - 2.0).abs() < 1e-15);
    }

    #[test]
    fn identity_point() {
        let e = Evaluator::default();
        let recs = e.grid_sweep(&pr(1), &[0.1], &[1.0]).unwrap();
        let m = recs[0].measures.unwrap();
        assert!((m.log_negativity - 0.289_506_617_194_984_9).abs() < 1e-12);
        assert!((m.probability - 1.0).abs() < 1e-12);
        assert!(m.non_gaussianity < 1e-9);
    }

    #[test]
    fn single_replacement_point() {
        let e = Evaluator::default();
        let m = e.evaluate(&pr(1), 0.1, 0.5).unwrap();
        // 40-digit direct summation of the truncated series
        assert!((m.log_negativity - 0.295_813_428_693_483_8).abs() < 1e-12);
        assert!((m.probability - 0.250_013_920_549_579_05).abs() < 1e-13);
        assert!((m.rate - 0.073_957_475_058_871_22).abs() < 1e-13);
    }

    #[test]
    fn grid_order_is_lambda_major() {
        let e = Evaluator::default();
        let recs = e.grid_sweep(&pr(2), &[0.2, 0.4], &[0.3, 0.6, 0.9]).unwrap();
        let keys: Vec<(f64, f64)> = recs.iter().map(|r| (r.lambda, r.t)).collect();
        assert_eq!(
            keys,
            [(0.2, 0.3), (0.2, 0.6), (0.2, 0.9), (0.4, 0.3), (0.4, 0.6), (0.4, 0.9)]
        );
        assert!(e.grid_sweep(&pr(2), &[1.2], &[0.5]).is_err());
        assert!(e.grid_sweep(&pr(2), &[0.2], &[1.5]).is_err());
    }

    #[test]
    fn impossible_points_are_recorded_as_absent() {
        let e = Evaluator::default();
        let setup = ProtocolSetup::default_for(ProtocolKind::Pa, 4);
        let recs = e.grid_sweep(&setup, &[0.3], &[0.5, 1.0]).unwrap();
        assert!(recs[0].measures.is_some());
        assert!(recs[1].measures.is_none());
        assert_eq!(recs[1].probability(), 0.0);
    }

    #[test]
    fn flat_objective_is_degenerate() {
        let e = Evaluator::default();
        assert!(matches!(
            e.find_t_max(&pr(0), 0.1, 1e-6),
            Err(Error::DegenerateObjective { .. })
        ));
        assert!(e.find_t_max(&pr(1), 0.1, 1e-10).is_err());
    }

    #[test]
    fn single_step_beats_tmsv() {
        let e = Evaluator::default();
        let p = e.find_t_max(&pr(1), 0.1, 1e-8).unwrap();
        assert!(p.e_max > log_negativity_tmsv(0.1));
        assert!(p.p_at_max > 0.0 && p.p_at_max < 1.0);
    }

    #[test]
    fn addition_peaks_at_the_upper_edge() {
        let e = Evaluator::default();
        let tol = 1e-6;
        let p = e.find_t_max(&ProtocolSetup::default_for(ProtocolKind::Pa, 4), 0.1, tol).unwrap();
        assert!(SEARCH_INTERVAL.1 - p.t_max <= tol, "t_max = {}", p.t_max);
    }

    #[test]
    fn threshold_errors() {
        let e = Evaluator::default();
        assert!(matches!(
            e.enhancement_threshold(ProtocolKind::Pr, 0, 1e-4),
            Err(Error::NoThreshold(_))
        ));
        assert!(e.enhancement_threshold(ProtocolKind::Pr, 1, 1e-9).is_err());
    }

    #[test]
    fn comparison_needs_even_k() {
        let e = Evaluator::default();
        assert!(e.compare_protocols(3, 0.1, &[0.5]).is_err());
        let c = e.compare_protocols(2, 0.1, &[0.5, 0.9]).unwrap();
        for (kind, series) in c.series() {
            assert_eq!(series.len(), 2);
            assert!(series.iter().all(|r| r.protocol == kind));
        }
    }

    #[test]
    fn slope_of_exact_exponential() {
        let points: Vec<TrendPoint> = (1..=8)
            .map(|k| TrendPoint {
                k,
                t_max: 0.5,
                e_max: 1.0,
                p_at_max: 10f64.powf(-0.5 * k as f64),
            })
            .collect();
        assert!((probability_slope(&points).unwrap() + 0.5).abs() < 1e-12);
        assert_eq!(probability_slope(&points[..1]), None);
    }

    #[test]
    fn sweeps_are_deterministic() {
        let e = Evaluator::default();
        let lam: Vec<f64> = (1..6).map(|i| i as f64 * 0.15).collect();
        let ts: Vec<f64> = (1..20).map(|i| i as f64 * 0.05).collect();
        let a = e.grid_sweep(&pr(3), &lam, &ts).unwrap();
        let b = e.grid_sweep(&pr(3), &lam, &ts).unwrap();
        assert_eq!(a, b);
    }
}
