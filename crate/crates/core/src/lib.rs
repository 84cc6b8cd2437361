//! Capacity planning for a cohorted dialysis clinic.
//!
//! The library forecasts weekly demand from short daily histories, turns
//! prediction intervals into discrete scenario sets, and finds the
//! machine allocation across cohort units that minimizes expected
//! cross-infection and infeasibility penalties, solving each day's
//! session schedule exactly.

pub mod capacity_opt;
pub mod domain;
pub mod error;
pub mod evaluate;
pub mod forecast;
pub mod ingest;
pub mod render;
pub mod scenario;
pub mod solver;

pub use capacity_opt::{
    enumerate_allocations, evaluate_fixed, expected_overlaps, optimize, FixedEvaluation,
    OptimizeOutcome,
};
pub use domain::{
    Allocation, ClinicConfig, CohortPolicy, DayDemand, DaySchedule, IntDist, OverlapTally,
    PatientType, PenaltyWeights, Scenario, ScenarioSet, ScheduleCost,
};
pub use error::{Error, Result, ScheduleViolation};
pub use evaluate::{
    forecast_demand_dists, hospital_vs_optimal, plan_then_realize, utilization, weekly_optima,
    weekly_schedules, PlanRealizeReport, WeekComparison,
};
pub use forecast::{
    chronic_demand, discretize_uniform, fit_ses, prediction_interval, ChronicRegime, PiLevel,
    PredictionInterval, SesFit,
};
pub use ingest::{bundled_history, parse_demand_csv, working_days, DemandHistory, DemandRecord};
pub use render::{day_schedule_csv, render_day};
pub use scenario::{build_scenario_set, realized_scenario, DemandDists, RunMeta};
pub use solver::{brute_force_day, count_overlaps, day_cost, solve_day, DaySolver, MarkCombo};
