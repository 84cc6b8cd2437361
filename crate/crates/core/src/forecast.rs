//! Demand forecasting: simple exponential smoothing, prediction
//! intervals and uniform discretization into integer demand
//! distributions.
//!
//! The smoothing recursion is `level_{t+1} = a*y_t + (1-a)*level_t` with
//! `level_1 = y_1`. The smoothing parameter is picked by a dense grid
//! search over [0, 1] in steps of 0.001, minimizing the RMSE of the
//! one-step-ahead errors from t = 2 onward (the t = 1 error is zero by
//! construction and would bias the search).

use serde::{Deserialize, Serialize};

use crate::domain::IntDist;
use crate::error::{Error, Result};

const GRID_STEPS: usize = 1000;

/// A fitted smoothing model: chosen parameter, next-day point forecast
/// and the RMSE standing in for the demand standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SesFit {
    pub smoothing: f64,
    pub point_forecast: f64,
    pub rmse: f64,
}

/// Prediction-interval confidence level and its normal multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PiLevel {
    Pi80,
    Pi90,
}

impl PiLevel {
    pub fn multiplier(self) -> f64 {
        match self {
            PiLevel::Pi80 => 1.28,
            PiLevel::Pi90 => 1.64,
        }
    }

    pub fn percent(self) -> u32 {
        match self {
            PiLevel::Pi80 => 80,
            PiLevel::Pi90 => 90,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub level: PiLevel,
}

impl PredictionInterval {
    /// Degenerate intervals (zero RMSE) collapse to a point; callers must
    /// handle them explicitly.
    pub fn is_degenerate(&self) -> bool {
        self.lower >= self.upper
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// One-step-ahead RMSE (errors from t = 2 on) and the forecast for
/// t = n + 1, for a fixed smoothing parameter.
fn ses_pass(series: &[u32], smoothing: f64) -> (f64, f64) {
    let mut level = f64::from(series[0]);
    let mut sse = 0.0;
    for &y in &series[1..] {
        let y = f64::from(y);
        let err = y - level;
        sse += err * err;
        level = smoothing * y + (1.0 - smoothing) * level;
    }
    let rmse = (sse / (series.len() - 1) as f64).sqrt();
    (rmse, level)
}

/// Fit simple exponential smoothing by grid search on the smoothing
/// parameter. Requires at least two observations.
pub fn fit_ses(series: &[u32]) -> Result<SesFit> {
    if series.len() < 2 {
        return Err(Error::Validation(
            "SES needs at least two observations".into(),
        ));
    }
    let mut best = SesFit {
        smoothing: 0.0,
        point_forecast: 0.0,
        rmse: f64::INFINITY,
    };
    for step in 0..=GRID_STEPS {
        let a = step as f64 / GRID_STEPS as f64;
        let (rmse, forecast) = ses_pass(series, a);
        if rmse < best.rmse {
            best = SesFit {
                smoothing: a,
                point_forecast: forecast,
                rmse,
            };
        }
    }
    Ok(best)
}

/// `point +- k * rmse` with k set by the confidence level.
pub fn prediction_interval(fit: &SesFit, level: PiLevel) -> PredictionInterval {
    let half_width = level.multiplier() * fit.rmse;
    PredictionInterval {
        lower: fit.point_forecast - half_width,
        upper: fit.point_forecast + half_width,
        level,
    }
}

/// Discretize a continuous uniform on the interval into integer demand.
///
/// Integer n >= 1 receives the mass of [n-0.5, n+0.5) under the uniform;
/// all mass below 0.5 (including the negative part) rounds to 0.
/// A degenerate interval becomes a point mass at the rounded, clipped
/// point forecast.
pub fn discretize_uniform(interval: &PredictionInterval) -> Result<IntDist> {
    if interval.is_degenerate() {
        let point = interval.lower.max(0.0).round() as u32;
        return Ok(IntDist::point_mass(point));
    }
    let (lo, hi) = (interval.lower, interval.upper);
    let width = hi - lo;
    let overlap = |bin_lo: f64, bin_hi: f64| -> f64 {
        (bin_hi.min(hi) - bin_lo.max(lo)).max(0.0) / width
    };
    let mut support = Vec::new();
    let zero_mass = overlap(f64::NEG_INFINITY, 0.5);
    if zero_mass > 0.0 {
        support.push((0, zero_mass));
    }
    let first = ((lo - 0.5).floor().max(1.0)) as u32;
    let last = (hi + 0.5).ceil().max(1.0) as u32;
    for n in first..=last {
        let mass = overlap(f64::from(n) - 0.5, f64::from(n) + 0.5);
        if mass > 0.0 {
            support.push((n, mass));
        }
    }
    // Guard against boundary rounding leaving the masses slightly off one.
    let total: f64 = support.iter().map(|&(_, m)| m).sum();
    for entry in &mut support {
        entry.1 /= total;
    }
    IntDist::new(support)
}

/// The chronic treatment regime: fixed cohort sizes on the
/// Monday-Wednesday-Friday and Tuesday-Thursday-Saturday patterns.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChronicRegime {
    pub mwf: u32,
    pub tts: u32,
}

impl ChronicRegime {
    pub fn case_defaults() -> ChronicRegime {
        ChronicRegime { mwf: 12, tts: 8 }
    }

    /// Known chronic demand for a working weekday (1 = Monday .. 6 =
    /// Saturday). Sundays are not planned.
    pub fn demand(&self, weekday: u8) -> Result<u32> {
        match weekday {
            1 | 3 | 5 => Ok(self.mwf),
            2 | 4 | 6 => Ok(self.tts),
            _ => Err(Error::Validation(format!(
                "weekday {weekday} is not a working day"
            ))),
        }
    }
}

/// Chronic demand under the case-study regime.
pub fn chronic_demand(weekday: u8) -> Result<u32> {
    ChronicRegime::case_defaults().demand(weekday)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_series_has_zero_rmse() {
        let fit = fit_ses(&[5, 5, 5, 5]).unwrap();
        assert_eq!(fit.point_forecast, 5.0);
        assert_eq!(fit.rmse, 0.0);
    }

    #[test]
    fn zero_smoothing_keeps_the_first_level() {
        let (_, forecast) = ses_pass(&[0, 10, 0, 10], 0.0);
        assert_eq!(forecast, 0.0);
    }

    #[test]
    fn too_short_series_errors() {
        assert!(fit_ses(&[3]).is_err());
        assert!(fit_ses(&[]).is_err());
    }

    #[test]
    fn case_week8_infected_interval() {
        // Weeks 1-7 of the infected series reproduce the week-8 80% PI
        // half-width of (5.17 - 1.87) / 2 = 1.65 within 0.15.
        let wd = crate::ingest::working_days(&crate::ingest::bundled_history());
        let series =
            crate::ingest::series_for_type(&wd, crate::domain::PatientType::Infected);
        let fit = fit_ses(&series[..42]).unwrap();
        let half_width = 1.28 * fit.rmse;
        assert!((half_width - 1.65).abs() <= 0.15, "half-width {half_width}");
    }

    #[test]
    fn interval_matches_reported_bounds() {
        let fit = SesFit {
            smoothing: 0.2,
            point_forecast: 3.52,
            rmse: 1.29,
        };
        let pi = prediction_interval(&fit, PiLevel::Pi80);
        assert!((pi.lower - 1.87).abs() < 0.01, "{}", pi.lower);
        assert!((pi.upper - 5.17).abs() < 0.01, "{}", pi.upper);

        let fit = SesFit {
            smoothing: 0.2,
            point_forecast: 0.08,
            rmse: 0.85,
        };
        let pi = prediction_interval(&fit, PiLevel::Pi90);
        assert!((pi.lower + 1.32).abs() < 0.015, "{}", pi.lower);
        assert!((pi.upper - 1.48).abs() < 0.015, "{}", pi.upper);
    }

    #[test]
    fn degenerate_interval_flags_and_discretizes() {
        let fit = SesFit {
            smoothing: 0.0,
            point_forecast: 3.0,
            rmse: 0.0,
        };
        let pi = prediction_interval(&fit, PiLevel::Pi80);
        assert!(pi.is_degenerate());
        assert_eq!(pi.lower, pi.upper);
        let dist = discretize_uniform(&pi).unwrap();
        assert_eq!(dist.support(), &[(3, 1.0)]);
    }

    #[test]
    fn discretization_matches_published_masses() {
        let pi = PredictionInterval {
            lower: 1.87,
            upper: 5.17,
            level: PiLevel::Pi80,
        };
        let dist = discretize_uniform(&pi).unwrap();
        let expected = [(2, 0.189), (3, 0.302), (4, 0.302), (5, 0.207)];
        assert_eq!(dist.support().len(), expected.len());
        for (&(v, m), &(ev, em)) in dist.support().iter().zip(&expected) {
            assert_eq!(v, ev);
            assert!((m - em).abs() <= 0.015, "mass {m} vs {em}");
        }

        let pi = PredictionInterval {
            lower: -1.01,
            upper: 1.17,
            level: PiLevel::Pi80,
        };
        let dist = discretize_uniform(&pi).unwrap();
        let expected = [(0, 0.688), (1, 0.312)];
        for (&(v, m), &(ev, em)) in dist.support().iter().zip(&expected) {
            assert_eq!(v, ev);
            assert!((m - em).abs() <= 0.015, "mass {m} vs {em}");
        }
    }

    #[test]
    fn interval_below_half_collapses_to_zero() {
        let pi = PredictionInterval {
            lower: 0.25,
            upper: 0.45,
            level: PiLevel::Pi80,
        };
        let dist = discretize_uniform(&pi).unwrap();
        assert_eq!(dist.support(), &[(0, 1.0)]);
    }

    #[test]
    fn chronic_regime_by_weekday() {
        assert_eq!(chronic_demand(1).unwrap(), 12);
        assert_eq!(chronic_demand(2).unwrap(), 8);
        assert_eq!(chronic_demand(5).unwrap(), 12);
        assert!(chronic_demand(7).is_err());
    }

    proptest! {
        #[test]
        fn masses_sum_to_one(lo in -5.0f64..20.0, width in 0.01f64..15.0) {
            let pi = PredictionInterval { lower: lo, upper: lo + width, level: PiLevel::Pi80 };
            let dist = discretize_uniform(&pi).unwrap();
            let total: f64 = dist.support().iter().map(|&(_, m)| m).sum();
            prop_assert!((total - 1.0).abs() < 1e-9);
        }

        #[test]
        fn rounding_moves_the_mean_at_most_half(lo in -5.0f64..20.0, width in 0.2f64..15.0) {
            let pi = PredictionInterval { lower: lo, upper: lo + width, level: PiLevel::Pi80 };
            let dist = discretize_uniform(&pi).unwrap();
            // Mean of the uniform clipped at zero.
            let (a, b) = (lo, lo + width);
            let clipped = if b <= 0.0 {
                0.0
            } else if a >= 0.0 {
                (a + b) / 2.0
            } else {
                (b / 2.0) * (b / (b - a))
            };
            prop_assert!(dist.mean() >= clipped - 0.5 - 1e-9);
            prop_assert!(dist.mean() <= clipped + 0.5 + 1e-9);
        }

        #[test]
        fn shifting_a_series_shifts_the_forecast(
            series in proptest::collection::vec(0u32..30, 5..30),
            shift in 1u32..20,
        ) {
            let base = fit_ses(&series).unwrap();
            let shifted: Vec<u32> = series.iter().map(|&y| y + shift).collect();
            let moved = fit_ses(&shifted).unwrap();
            prop_assert!((moved.point_forecast - base.point_forecast - f64::from(shift)).abs() < 1e-6);
            prop_assert!((moved.rmse - base.rmse).abs() < 1e-6);
        }

        #[test]
        fn wider_level_means_wider_interval(point in 0.0f64..20.0, rmse in 0.01f64..10.0) {
            let fit = SesFit { smoothing: 0.3, point_forecast: point, rmse };
            let p80 = prediction_interval(&fit, PiLevel::Pi80);
            let p90 = prediction_interval(&fit, PiLevel::Pi90);
            prop_assert!(p90.width() > p80.width());
        }
    }
}
