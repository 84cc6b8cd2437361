//! Weekly scenario construction: seeded sampling from forecast
//! distributions and degenerate realized-demand sets.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::domain::{DayDemand, IntDist, Scenario, ScenarioSet};
use crate::error::{Error, Result};
use crate::forecast::ChronicRegime;
use crate::ingest::DemandHistory;

/// Name of the generator recorded in run metadata so sampled sets can be
/// replayed bit-identically.
pub const GENERATOR: &str = "chacha8";

/// Forecast distributions for the three uncertain patient types.
#[derive(Debug, Clone)]
pub struct DemandDists {
    pub acute: IntDist,
    pub infected: IntDist,
    pub suspected: IntDist,
}

/// Sample `n` equiprobable scenarios of `days_per_week` days.
///
/// Types 1, 3 and 4 are drawn independently per day from their
/// distributions; chronic demand follows the fixed regime, weekday
/// `d + 1` for day index `d`. Identical seed and inputs give identical
/// output.
pub fn build_scenario_set(
    dists: &DemandDists,
    chronic: ChronicRegime,
    days_per_week: usize,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet> {
    if n < 1 {
        return Err(Error::Validation("need at least one scenario".into()));
    }
    if days_per_week < 1 || days_per_week > 6 {
        return Err(Error::Validation(
            "days_per_week must be in 1..=6 (Monday..Saturday)".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let probability = 1.0 / n as f64;
    let mut scenarios = Vec::with_capacity(n);
    for _ in 0..n {
        let mut days = Vec::with_capacity(days_per_week);
        for d in 0..days_per_week {
            let weekday = (d + 1) as u8;
            let mut draw = |dist: &IntDist| dist.quantile(rng.random::<f64>());
            let acute = draw(&dists.acute);
            let infected = draw(&dists.infected);
            let suspected = draw(&dists.suspected);
            days.push(DayDemand([
                acute,
                chronic.demand(weekday)?,
                infected,
                suspected,
            ]));
        }
        scenarios.push(Scenario { probability, days });
    }
    ScenarioSet::new(scenarios)
}

/// One week of realized demand as a single scenario with probability one.
pub fn realized_scenario(history: &DemandHistory, week: u32) -> Result<ScenarioSet> {
    let days = history.complete_week(week, 6)?;
    Ok(ScenarioSet::degenerate(days))
}

/// Audit serialization: `scenario,day,type1,type2,type3,type4,probability`.
pub fn scenario_set_to_csv(set: &ScenarioSet) -> String {
    let mut out = String::from("scenario,day,type1,type2,type3,type4,probability\n");
    for (k, scenario) in set.scenarios().iter().enumerate() {
        for (d, day) in scenario.days.iter().enumerate() {
            let x = day.0;
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                k + 1,
                d + 1,
                x[0],
                x[1],
                x[2],
                x[3],
                scenario.probability
            ));
        }
    }
    out
}

/// Replay metadata embedded in every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub generator: String,
    pub seed: Option<u64>,
    pub version: String,
}

impl RunMeta {
    pub fn seeded(seed: u64) -> RunMeta {
        RunMeta {
            generator: GENERATOR.to_string(),
            seed: Some(seed),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn deterministic() -> RunMeta {
        RunMeta {
            generator: "none".to_string(),
            seed: None,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}
