//! Case-study analyses: hospital-versus-optimal comparisons, cohorting
//! strategy comparisons, plan-then-realize evaluation of the stochastic
//! model, and unit utilization.

use serde::{Deserialize, Serialize};

use crate::capacity_opt::{evaluate_fixed, optimize, OptimizeOutcome};
use crate::domain::{
    Allocation, ClinicConfig, CohortPolicy, DayDemand, DaySchedule, OverlapTally, PatientType,
    PenaltyWeights, ScheduleCost,
};
use crate::error::{Error, Result};
use crate::forecast::{discretize_uniform, fit_ses, prediction_interval, PiLevel};
use crate::ingest::{series_for_type, working_days, DemandHistory};
use crate::scenario::{build_scenario_set, realized_scenario, DemandDists, RunMeta};
use crate::solver::DaySolver;

/// One week of the hospital-versus-optimal comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeekComparison {
    pub week: u32,
    pub hospital_overlaps: OverlapTally,
    pub hospital_cost: f64,
    pub optimal_allocation: Allocation,
    pub optimal_overlaps: OverlapTally,
    pub optimal_cost: f64,
    /// (hospital − optimal) / hospital, in [0, 1]; 0 for a zero-cost week.
    pub improvement: f64,
}

impl WeekComparison {
    /// Improvement as a rounded percentage, matching report presentation.
    pub fn improvement_pct(&self) -> i64 {
        (self.improvement * 100.0).round() as i64
    }
}

/// Totals across the compared weeks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonTotals {
    pub hospital_overlaps: OverlapTally,
    pub hospital_cost: f64,
    pub optimal_overlaps: OverlapTally,
    pub optimal_cost: f64,
    pub improvement: f64,
}

fn improvement(hospital: f64, optimal: f64) -> f64 {
    if hospital == 0.0 {
        0.0
    } else {
        (hospital - optimal) / hospital
    }
}

/// Per-week overlaps and cost under a fixed (hospital) allocation versus
/// the perfect-information optimum.
pub fn hospital_vs_optimal(
    history: &DemandHistory,
    weeks: &[u32],
    hospital: &Allocation,
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
) -> Result<(Vec<WeekComparison>, ComparisonTotals)> {
    let mut rows = Vec::with_capacity(weeks.len());
    for &week in weeks {
        let scenarios = realized_scenario(history, week)?;
        let fixed = evaluate_fixed(hospital, policy, config, weights, &scenarios)?;
        let best = optimize(policy, config, weights, &scenarios)?;
        let hospital_week = &fixed.per_scenario[0];
        let optimal_week = &best.evaluation.per_scenario[0];
        rows.push(WeekComparison {
            week,
            hospital_overlaps: hospital_week.overlaps,
            hospital_cost: hospital_week.total,
            optimal_allocation: best.allocation,
            optimal_overlaps: optimal_week.overlaps,
            optimal_cost: optimal_week.total,
            improvement: improvement(hospital_week.total, optimal_week.total),
        });
    }
    let mut totals = ComparisonTotals {
        hospital_overlaps: OverlapTally::default(),
        hospital_cost: 0.0,
        optimal_overlaps: OverlapTally::default(),
        optimal_cost: 0.0,
        improvement: 0.0,
    };
    for row in &rows {
        totals.hospital_overlaps.add(row.hospital_overlaps);
        totals.hospital_cost += row.hospital_cost;
        totals.optimal_overlaps.add(row.optimal_overlaps);
        totals.optimal_cost += row.optimal_cost;
    }
    totals.improvement = improvement(totals.hospital_cost, totals.optimal_cost);
    Ok((rows, totals))
}

/// Perfect-information weekly optima for one policy.
pub fn weekly_optima(
    history: &DemandHistory,
    weeks: &[u32],
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
) -> Result<Vec<(u32, OptimizeOutcome)>> {
    weeks
        .iter()
        .map(|&week| {
            let scenarios = realized_scenario(history, week)?;
            Ok((week, optimize(policy, config, weights, &scenarios)?))
        })
        .collect()
}

/// Forecast distributions for the uncertain patient types from the weeks
/// strictly before `target_week`.
pub fn forecast_demand_dists(
    history: &DemandHistory,
    target_week: u32,
    level: PiLevel,
) -> Result<DemandDists> {
    let training = working_days(history);
    let training = DemandHistory::new(
        training
            .records()
            .iter()
            .filter(|r| r.week < target_week)
            .copied()
            .collect(),
    )?;
    if training.is_empty() {
        return Err(Error::Validation(format!(
            "no training data before week {target_week}"
        )));
    }
    let dist_for = |t: PatientType| -> Result<_> {
        let fit = fit_ses(&series_for_type(&training, t))?;
        discretize_uniform(&prediction_interval(&fit, level))
    };
    Ok(DemandDists {
        acute: dist_for(PatientType::Acute)?,
        infected: dist_for(PatientType::Infected)?,
        suspected: dist_for(PatientType::Suspected)?,
    })
}

/// Stochastic plan for one week evaluated against its realized demand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRealizeReport {
    pub week: u32,
    pub level: PiLevel,
    pub n_scenarios: usize,
    /// Allocation chosen under uncertainty, with expected cost/overlaps.
    pub outcome: OptimizeOutcome,
    /// Weekly cost of that allocation under the realized demand.
    pub realized: ScheduleCost,
    pub meta: RunMeta,
}

/// Fit forecasts on the weeks before `target_week`, sample a scenario
/// set, optimize the allocation, then score it against the realized
/// week.
#[allow(clippy::too_many_arguments)]
pub fn plan_then_realize(
    history: &DemandHistory,
    target_week: u32,
    level: PiLevel,
    n_scenarios: usize,
    seed: u64,
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
) -> Result<PlanRealizeReport> {
    if target_week <= 1 {
        return Err(Error::Validation(
            "plan-then-realize needs at least one training week".into(),
        ));
    }
    let dists = forecast_demand_dists(history, target_week, level)?;
    let scenarios = build_scenario_set(
        &dists,
        crate::forecast::ChronicRegime::case_defaults(),
        config.days_per_week,
        n_scenarios,
        seed,
    )?;
    let outcome = optimize(policy, config, weights, &scenarios)?;
    let realized_set = realized_scenario(history, target_week)?;
    let realized =
        evaluate_fixed(&outcome.allocation, policy, config, weights, &realized_set)?
            .per_scenario[0];
    Ok(PlanRealizeReport {
        week: target_week,
        level,
        n_scenarios,
        outcome,
        realized,
        meta: RunMeta::seeded(seed),
    })
}

/// Optimal schedules for one week of known demand under a fixed
/// allocation, in day order.
pub fn weekly_schedules(
    alloc: &Allocation,
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
    days: &[DayDemand],
) -> Result<Vec<(DaySchedule, ScheduleCost)>> {
    let mut solver = DaySolver::new(policy, weights, config);
    days.iter().map(|d| solver.solve(alloc, d)).collect()
}

/// Weekly utilization per unit: patients treated over the week divided
/// by the unit's full slot capacity R_j × sessions × days, as a
/// percentage. Units with no machines report `None`.
pub fn utilization(
    alloc: &Allocation,
    schedules: &[DaySchedule],
    policy: CohortPolicy,
    config: &ClinicConfig,
) -> Vec<Option<f64>> {
    (0..policy.unit_count())
        .map(|j| {
            if alloc.unit(j) == 0 {
                return None;
            }
            let served: u32 = schedules.iter().map(|s| s.unit_served(policy, j)).sum();
            let slots = alloc.unit(j) as f64
                * config.sessions_per_day as f64
                * schedules.len() as f64;
            Some(100.0 * f64::from(served) / slots)
        })
        .collect()
}

fn fmt_tally(t: &OverlapTally, three_way: bool) -> String {
    if three_way {
        format!(
            "{},{},{}",
            t.uninfected_infected, t.uninfected_suspected, t.infected_suspected
        )
    } else {
        format!("{},{}", t.uninfected_infected, t.uninfected_suspected)
    }
}

fn fmt_alloc(alloc: &Allocation) -> String {
    alloc
        .machines()
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// CSV mirror of the hospital-versus-optimal table: one row per week
/// plus a totals row.
pub fn hospital_vs_optimal_csv(
    rows: &[WeekComparison],
    totals: &ComparisonTotals,
) -> String {
    let mut out = String::from(
        "week,hosp_o12x3,hosp_o12x4,hosp_o3x4,hosp_z,r1,r2,r3,\
         opt_o12x3,opt_o12x4,opt_o3x4,opt_z,improvement_pct\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.week,
            fmt_tally(&r.hospital_overlaps, true),
            r.hospital_cost,
            fmt_alloc(&r.optimal_allocation),
            fmt_tally(&r.optimal_overlaps, true),
            r.optimal_cost,
            r.improvement_pct()
        ));
    }
    out.push_str(&format!(
        "total,{},{},-,-,-,{},{},{}\n",
        fmt_tally(&totals.hospital_overlaps, true),
        totals.hospital_cost,
        fmt_tally(&totals.optimal_overlaps, true),
        totals.optimal_cost,
        (totals.improvement * 100.0).round() as i64
    ));
    out
}

/// CSV mirror of the cohorting-strategy comparison: per-week three-unit
/// and two-unit optima with the relative objective difference.
pub fn cohort_comparison_csv(
    three: &[(u32, OptimizeOutcome)],
    two: &[(u32, OptimizeOutcome)],
) -> String {
    let mut out = String::from(
        "week,r1_3u,r2_3u,r3_3u,o12x3_3u,o12x4_3u,o3x4_3u,z_3u,\
         r1_2u,r2_2u,o12x3_2u,o12x4_2u,z_2u,difference_pct\n",
    );
    let mut z3_total = 0.0;
    let mut z2_total = 0.0;
    let mut t3 = OverlapTally::default();
    let mut t2 = OverlapTally::default();
    for ((week, a), (_, b)) in three.iter().zip(two) {
        let za = a.evaluation.per_scenario[0].total;
        let zb = b.evaluation.per_scenario[0].total;
        z3_total += za;
        z2_total += zb;
        t3.add(a.evaluation.per_scenario[0].overlaps);
        t2.add(b.evaluation.per_scenario[0].overlaps);
        let diff = if za == 0.0 { 0.0 } else { (za - zb) / za };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            week,
            fmt_alloc(&a.allocation),
            fmt_tally(&a.evaluation.per_scenario[0].overlaps, true),
            za,
            fmt_alloc(&b.allocation),
            fmt_tally(&b.evaluation.per_scenario[0].overlaps, false),
            zb,
            (diff * 100.0).round() as i64
        ));
    }
    out.push_str(&format!(
        "total,-,-,-,{},{},-,-,{},{},-\n",
        fmt_tally(&t3, true),
        z3_total,
        fmt_tally(&t2, false),
        z2_total
    ));
    out
}

/// CSV mirror of the stochastic-model performance tables: expected
/// overlaps of the chosen allocation plus realized-demand overlaps.
pub fn stochastic_report_csv(reports: &[PlanRealizeReport]) -> String {
    let mut out = String::from(
        "week,pi,seed,allocation,e_o12x3,e_o12x4,e_o3x4,expected_z,\
         realized_o12x3,realized_o12x4,realized_o3x4,realized_z\n",
    );
    for r in reports {
        let e = r.outcome.evaluation.expected_overlaps;
        out.push_str(&format!(
            "{},{},{},\"{}\",{:.2},{:.2},{:.2},{:.1},{},{}\n",
            r.week,
            r.level.percent(),
            r.meta.seed.map_or_else(|| "-".into(), |s| s.to_string()),
            fmt_alloc(&r.outcome.allocation),
            e[0],
            e[1],
            e[2],
            r.outcome.evaluation.expected_cost,
            fmt_tally(&r.realized.overlaps, true),
            r.realized.total
        ));
    }
    out
}

/// One utilization series entry (e.g. one week under one policy label).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilizationRow {
    pub week: u32,
    pub label: String,
    pub per_unit: Vec<Option<f64>>,
}

/// CSV mirror of the utilization figure: `week,label,unit,utilization`
/// with `NA` for units holding no machines.
pub fn utilization_csv(rows: &[UtilizationRow]) -> String {
    let mut out = String::from("week,label,unit,utilization_pct\n");
    for row in rows {
        for (j, u) in row.per_unit.iter().enumerate() {
            let cell = u.map_or_else(|| "NA".into(), |u| format!("{:.1}", u));
            out.push_str(&format!("{},{},{},{}\n", row.week, row.label, j + 1, cell));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::bundled_history;

    fn case(policy: CohortPolicy) -> (ClinicConfig, PenaltyWeights) {
        (
            ClinicConfig::case_defaults(policy),
            PenaltyWeights::case_defaults(),
        )
    }

    #[test]
    fn hospital_comparison_reproduces_known_weeks() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let history = bundled_history();
        let hospital = Allocation::new(vec![7, 5, 2], policy, &config).unwrap();
        let (rows, totals) =
            hospital_vs_optimal(&history, &[2, 3, 7], &hospital, policy, &config, &weights)
                .unwrap();

        let w2 = &rows[0];
        assert_eq!(w2.hospital_cost, 17_360.0);
        assert_eq!(
            w2.hospital_overlaps,
            OverlapTally {
                uninfected_infected: 16,
                uninfected_suspected: 0,
                infected_suspected: 13
            }
        );
        assert_eq!(w2.optimal_cost, 350.0);
        assert_eq!(w2.improvement_pct(), 98);

        // Hospital allocation is optimal in week 3.
        let w3 = &rows[1];
        assert_eq!(w3.hospital_cost, w3.optimal_cost);
        assert_eq!(w3.improvement_pct(), 0);
        assert_eq!(w3.optimal_allocation.machines(), &[7, 5, 2]);

        let w7 = &rows[2];
        assert_eq!(w7.hospital_cost, 48.0);
        assert_eq!(w7.optimal_cost, 36.0);
        assert_eq!(w7.improvement_pct(), 25);

        assert_eq!(
            totals.hospital_cost,
            rows.iter().map(|r| r.hospital_cost).sum::<f64>()
        );
    }

    #[test]
    fn cohort_comparison_week_seven_is_a_tie() {
        let history = bundled_history();
        let (c3, weights) = case(CohortPolicy::ThreeUnit);
        let (c2, _) = case(CohortPolicy::TwoUnit);
        let three =
            weekly_optima(&history, &[7], CohortPolicy::ThreeUnit, &c3, &weights).unwrap();
        let two = weekly_optima(&history, &[7], CohortPolicy::TwoUnit, &c2, &weights).unwrap();
        assert_eq!(three[0].1.evaluation.expected_cost, 36.0);
        assert_eq!(two[0].1.evaluation.expected_cost, 36.0);
        let csv = cohort_comparison_csv(&three, &two);
        assert!(csv.lines().count() == 3);
        assert!(csv.contains("7,"));
    }

    #[test]
    fn plan_then_realize_is_seed_deterministic() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let history = bundled_history();
        let a = plan_then_realize(
            &history, 8, PiLevel::Pi80, 30, 1, policy, &config, &weights,
        )
        .unwrap();
        let b = plan_then_realize(
            &history, 8, PiLevel::Pi80, 30, 1, policy, &config, &weights,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_scenarios, 30);
        assert!(a.outcome.allocation.unit(0) >= 8);
        assert!(plan_then_realize(
            &history, 1, PiLevel::Pi80, 30, 1, policy, &config, &weights
        )
        .is_err());
    }

    #[test]
    fn utilization_uses_full_slot_capacity() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let history = bundled_history();
        let hospital = Allocation::new(vec![7, 5, 2], policy, &config).unwrap();
        let week3 = realized_scenario(&history, 3).unwrap();
        let schedules: Vec<DaySchedule> =
            weekly_schedules(&hospital, policy, &config, &weights, &week3.scenarios()[0].days)
                .unwrap()
                .into_iter()
                .map(|(s, _)| s)
                .collect();
        let util = utilization(&hospital, &schedules, policy, &config);
        assert_eq!(util[0].unwrap().round() as i64, 54);

        let idle = Allocation::new(vec![7, 5, 0], policy, &config).unwrap();
        let zero = vec![DaySchedule::empty(policy, &config); 6];
        let util = utilization(&idle, &zero, policy, &config);
        assert_eq!(util[0], Some(0.0));
        assert_eq!(util[2], None);
    }

    #[test]
    fn csv_emitters_have_stable_headers() {
        assert!(hospital_vs_optimal_csv(&[], &ComparisonTotals {
            hospital_overlaps: OverlapTally::default(),
            hospital_cost: 0.0,
            optimal_overlaps: OverlapTally::default(),
            optimal_cost: 0.0,
            improvement: 0.0,
        })
        .starts_with("week,hosp_o12x3"));
        assert!(stochastic_report_csv(&[]).starts_with("week,pi,seed"));
        assert!(utilization_csv(&[]).starts_with("week,label,unit"));
    }
}
