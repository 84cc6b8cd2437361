//! Python bindings: forecasting, exact day scheduling and weekly
//! capacity planning, mirroring the library's main operations.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use hemoplan_core::{
    bundled_history, parse_demand_csv, plan_then_realize, realized_scenario, solve_day,
    Allocation, ClinicConfig, CohortPolicy, DayDemand, DemandHistory, Error as CoreError,
    PenaltyWeights, PiLevel,
};
use hemoplan_core::evaluate::weekly_schedules;
use hemoplan_core::forecast::{discretize_uniform, fit_ses, prediction_interval, PredictionInterval};
use hemoplan_core::ingest::working_days;
use hemoplan_core::PatientType;

fn err(e: CoreError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_policy(policy: &str) -> PyResult<CohortPolicy> {
    match policy {
        "three-unit" => Ok(CohortPolicy::ThreeUnit),
        "two-unit" => Ok(CohortPolicy::TwoUnit),
        other => Err(PyValueError::new_err(format!(
            "policy must be 'three-unit' or 'two-unit', got '{other}'"
        ))),
    }
}

fn parse_level(percent: u32) -> PyResult<PiLevel> {
    match percent {
        80 => Ok(PiLevel::Pi80),
        90 => Ok(PiLevel::Pi90),
        other => Err(PyValueError::new_err(format!(
            "prediction-interval percent must be 80 or 90, got {other}"
        ))),
    }
}

fn history_from(csv: Option<&str>) -> PyResult<DemandHistory> {
    match csv {
        Some(text) => parse_demand_csv(text).map_err(err),
        None => Ok(bundled_history()),
    }
}

fn demand_from(demand: Vec<u32>) -> PyResult<DayDemand> {
    let arr: [u32; 4] = demand.try_into().map_err(|v: Vec<u32>| {
        PyValueError::new_err(format!(
            "demand needs 4 entries (acute, chronic, infected, suspected), got {}",
            v.len()
        ))
    })?;
    Ok(DayDemand(arr))
}

/// Simple-exponential-smoothing fit of one demand series.
#[pyclass(get_all, frozen)]
#[derive(Clone)]
struct SesFit {
    smoothing: f64,
    point_forecast: f64,
    rmse: f64,
}

#[pymethods]
impl SesFit {
    fn __repr__(&self) -> String {
        format!(
            "SesFit(smoothing={:.3}, point_forecast={:.3}, rmse={:.3})",
            self.smoothing, self.point_forecast, self.rmse
        )
    }
}

impl SesFit {
    fn inner(&self) -> hemoplan_core::SesFit {
        hemoplan_core::SesFit {
            smoothing: self.smoothing,
            point_forecast: self.point_forecast,
            rmse: self.rmse,
        }
    }
}

/// One day's exact optimal schedule.
#[pyclass(get_all, frozen)]
struct DaySolution {
    /// Total penalty for the day.
    cost: f64,
    /// (uninfected-infected, uninfected-suspected, infected-suspected).
    overlaps: (u32, u32, u32),
    /// Unserved patients per type (acute, chronic, infected, suspected).
    unserved: Vec<u32>,
    /// Marked sessions across units.
    sessions_used: u32,
    /// assigned[session][patient_type] counts.
    assigned: Vec<Vec<u32>>,
}

/// A weekly machine allocation with its evaluation.
#[pyclass(get_all, frozen)]
struct Plan {
    /// Machines per unit.
    machines: Vec<u32>,
    /// Expected weekly cost over the scenario set (stochastic mode).
    expected_cost: Option<f64>,
    /// Expected weekly overlap counts (stochastic mode).
    expected_overlaps: Option<(f64, f64, f64)>,
    /// Weekly cost against the realized demand.
    realized_cost: f64,
    realized_overlaps: (u32, u32, u32),
    seed: Option<u64>,
    generator: String,
}

#[pymethods]
impl Plan {
    fn __repr__(&self) -> String {
        format!(
            "Plan(machines={:?}, realized_cost={})",
            self.machines, self.realized_cost
        )
    }
}

/// The eight-week case dataset as CSV text.
#[pyfunction]
fn bundled_demand_csv() -> String {
    hemoplan_core::ingest::demand_to_csv(&bundled_history())
}

/// Daily demand series for one patient type (1-4), Sundays excluded,
/// restricted to weeks strictly before `before_week` when given.
#[pyfunction]
#[pyo3(signature = (patient_type, csv=None, before_week=None))]
fn demand_series(
    patient_type: usize,
    csv: Option<&str>,
    before_week: Option<u32>,
) -> PyResult<Vec<u32>> {
    let t = PatientType::from_ordinal(patient_type)
        .ok_or_else(|| PyValueError::new_err("patient type must be 1, 2, 3 or 4"))?;
    let history = working_days(&history_from(csv)?);
    Ok(history
        .records()
        .iter()
        .filter(|r| before_week.is_none_or(|w| r.week < w))
        .map(|r| r.demand.get(t))
        .collect())
}

/// Fit simple exponential smoothing to a daily count series.
#[pyfunction]
#[pyo3(name = "fit_ses")]
fn fit_ses_py(series: Vec<u32>) -> PyResult<SesFit> {
    let fit = fit_ses(&series).map_err(err)?;
    Ok(SesFit {
        smoothing: fit.smoothing,
        point_forecast: fit.point_forecast,
        rmse: fit.rmse,
    })
}

/// (lower, upper) prediction interval at 80% or 90%.
#[pyfunction]
#[pyo3(name = "prediction_interval")]
fn prediction_interval_py(fit: &SesFit, percent: u32) -> PyResult<(f64, f64)> {
    let interval = prediction_interval(&fit.inner(), parse_level(percent)?);
    Ok((interval.lower, interval.upper))
}

/// Discretize a prediction interval into integer demand levels with
/// probabilities, list of (value, probability).
#[pyfunction]
fn discretize(lower: f64, upper: f64, percent: u32) -> PyResult<Vec<(u32, f64)>> {
    let dist = discretize_uniform(&PredictionInterval {
        lower,
        upper,
        level: parse_level(percent)?,
    })
    .map_err(err)?;
    Ok(dist.support().to_vec())
}

/// Solve one day's schedule exactly for a fixed allocation.
#[pyfunction]
#[pyo3(name = "solve_day")]
fn solve_day_py(policy: &str, machines: Vec<u32>, demand: Vec<u32>) -> PyResult<DaySolution> {
    let policy = parse_policy(policy)?;
    let config = ClinicConfig::case_defaults(policy);
    let weights = PenaltyWeights::case_defaults();
    let alloc = Allocation::new(machines, policy, &config).map_err(err)?;
    let (schedule, cost) =
        solve_day(policy, &alloc, &demand_from(demand)?, &weights, &config).map_err(err)?;
    Ok(DaySolution {
        cost: cost.total,
        overlaps: (
            cost.overlaps.uninfected_infected,
            cost.overlaps.uninfected_suspected,
            cost.overlaps.infected_suspected,
        ),
        unserved: schedule.unserved.to_vec(),
        sessions_used: cost.sessions_used,
        assigned: schedule.assigned.iter().map(|row| row.to_vec()).collect(),
    })
}

/// Optimize the weekly allocation against known (realized) demand.
#[pyfunction]
#[pyo3(signature = (policy, week, csv=None))]
fn plan_realized(policy: &str, week: u32, csv: Option<&str>) -> PyResult<Plan> {
    let policy = parse_policy(policy)?;
    let config = ClinicConfig::case_defaults(policy);
    let weights = PenaltyWeights::case_defaults();
    let history = history_from(csv)?;
    let set = realized_scenario(&history, week).map_err(err)?;
    let outcome = hemoplan_core::optimize(policy, &config, &weights, &set).map_err(err)?;
    let week_cost = &outcome.evaluation.per_scenario[0];
    Ok(Plan {
        machines: outcome.allocation.machines().to_vec(),
        expected_cost: None,
        expected_overlaps: None,
        realized_cost: week_cost.total,
        realized_overlaps: (
            week_cost.overlaps.uninfected_infected,
            week_cost.overlaps.uninfected_suspected,
            week_cost.overlaps.infected_suspected,
        ),
        seed: None,
        generator: String::from("none"),
    })
}

/// Plan under forecast uncertainty, then score the chosen allocation
/// against the realized week.
#[pyfunction]
#[pyo3(signature = (policy, week, percent=80, scenarios=30, seed=1, csv=None))]
fn plan_stochastic(
    policy: &str,
    week: u32,
    percent: u32,
    scenarios: usize,
    seed: u64,
    csv: Option<&str>,
) -> PyResult<Plan> {
    let policy = parse_policy(policy)?;
    let config = ClinicConfig::case_defaults(policy);
    let weights = PenaltyWeights::case_defaults();
    let history = history_from(csv)?;
    let report = plan_then_realize(
        &history,
        week,
        parse_level(percent)?,
        scenarios,
        seed,
        policy,
        &config,
        &weights,
    )
    .map_err(err)?;
    let e = report.outcome.evaluation.expected_overlaps;
    Ok(Plan {
        machines: report.outcome.allocation.machines().to_vec(),
        expected_cost: Some(report.outcome.evaluation.expected_cost),
        expected_overlaps: Some((e[0], e[1], e[2])),
        realized_cost: report.realized.total,
        realized_overlaps: (
            report.realized.overlaps.uninfected_infected,
            report.realized.overlaps.uninfected_suspected,
            report.realized.overlaps.infected_suspected,
        ),
        seed: report.meta.seed,
        generator: report.meta.generator,
    })
}

/// Text grid of one day's optimal schedule under a fixed allocation.
#[pyfunction]
#[pyo3(name = "render_day", signature = (policy, machines, demand))]
fn render_day_py(policy: &str, machines: Vec<u32>, demand: Vec<u32>) -> PyResult<String> {
    let policy = parse_policy(policy)?;
    let config = ClinicConfig::case_defaults(policy);
    let weights = PenaltyWeights::case_defaults();
    let alloc = Allocation::new(machines, policy, &config).map_err(err)?;
    let (schedule, _) =
        solve_day(policy, &alloc, &demand_from(demand)?, &weights, &config).map_err(err)?;
    Ok(hemoplan_core::render_day(
        &schedule, &alloc, policy, &config, &weights,
    ))
}

/// Weekly per-unit utilization percentages for a fixed allocation on
/// realized demand; None for units holding no machines.
#[pyfunction]
#[pyo3(signature = (policy, week, machines, csv=None))]
fn weekly_utilization(
    policy: &str,
    week: u32,
    machines: Vec<u32>,
    csv: Option<&str>,
) -> PyResult<Vec<Option<f64>>> {
    let policy = parse_policy(policy)?;
    let config = ClinicConfig::case_defaults(policy);
    let weights = PenaltyWeights::case_defaults();
    let alloc = Allocation::new(machines, policy, &config).map_err(err)?;
    let history = history_from(csv)?;
    let set = realized_scenario(&history, week).map_err(err)?;
    let schedules: Vec<_> =
        weekly_schedules(&alloc, policy, &config, &weights, &set.scenarios()[0].days)
            .map_err(err)?
            .into_iter()
            .map(|(s, _)| s)
            .collect();
    Ok(hemoplan_core::utilization(
        &alloc, &schedules, policy, &config,
    ))
}

#[pymodule]
fn hemoplan(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<SesFit>()?;
    m.add_class::<DaySolution>()?;
    m.add_class::<Plan>()?;
    m.add_function(wrap_pyfunction!(bundled_demand_csv, m)?)?;
    m.add_function(wrap_pyfunction!(demand_series, m)?)?;
    m.add_function(wrap_pyfunction!(fit_ses_py, m)?)?;
    m.add_function(wrap_pyfunction!(prediction_interval_py, m)?)?;
    m.add_function(wrap_pyfunction!(discretize, m)?)?;
    m.add_function(wrap_pyfunction!(solve_day_py, m)?)?;
    m.add_function(wrap_pyfunction!(plan_realized, m)?)?;
    m.add_function(wrap_pyfunction!(plan_stochastic, m)?)?;
    m.add_function(wrap_pyfunction!(render_day_py, m)?)?;
    m.add_function(wrap_pyfunction!(weekly_utilization, m)?)?;
    Ok(())
}
