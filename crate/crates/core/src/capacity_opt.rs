//! First-stage optimizer: choose the machine allocation minimizing
//! expected weekly penalty over a scenario set.
//!
//! The feasible set is tiny (a few hundred allocations at case caps), so
//! the search is exhaustive. Each allocation's expected cost decomposes
//! into independent day subproblems solved exactly by [`solve_day`];
//! partial sums are abandoned once they exceed the incumbent. Pruned
//! allocations are strictly worse than the final minimum, so the argmin
//! — ties broken by lexicographically smallest allocation — is identical
//! under serial and parallel execution.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domain::{
    Allocation, ClinicConfig, CohortPolicy, PenaltyWeights, Scenario, ScenarioSet, ScheduleCost,
};
use crate::error::Result;
use crate::solver::DaySolver;

/// Every allocation with R_j within its cap and total within the machine
/// budget, in lexicographic (tie-break) order.
pub fn enumerate_allocations(
    policy: CohortPolicy,
    config: &ClinicConfig,
) -> Result<Vec<Allocation>> {
    config.validate(policy)?;
    let mut out = Vec::new();
    let mut machines = vec![0u32; policy.unit_count()];
    loop {
        if machines.iter().sum::<u32>() <= config.total_machines {
            out.push(Allocation::new(machines.clone(), policy, config)?);
        }
        // Odometer increment over the per-unit caps, last unit fastest.
        let mut j = machines.len();
        loop {
            if j == 0 {
                return Ok(out);
            }
            j -= 1;
            if machines[j] < config.unit_caps[j] {
                machines[j] += 1;
                break;
            }
            machines[j] = 0;
        }
    }
}

/// Weekly cost of one scenario under a fixed allocation: days decouple
/// once the allocation is fixed, so the week is the sum of day optima.
fn weekly_cost(solver: &mut DaySolver, alloc: &Allocation, scenario: &Scenario) -> Result<ScheduleCost> {
    let mut week = ScheduleCost::default();
    for day in &scenario.days {
        let (_, cost) = solver.solve(alloc, day)?;
        week.add(&cost);
    }
    Ok(week)
}

/// Expected cost of `alloc`, abandoned (returning `None`) once the
/// partial sum exceeds `bound`. Costs are non-negative, so an abandoned
/// allocation is strictly worse than the bound.
fn expected_cost_bounded(
    solver: &mut DaySolver,
    alloc: &Allocation,
    scenarios: &ScenarioSet,
    bound: f64,
) -> Result<Option<f64>> {
    let mut expected = 0.0;
    for scenario in scenarios.scenarios() {
        // Accumulate the week first so the final sum groups additions
        // exactly like `evaluate_fixed` does.
        let mut week = 0.0;
        for day in &scenario.days {
            let (_, cost) = solver.solve(alloc, day)?;
            week += cost.total;
            if expected + scenario.probability * week > bound {
                return Ok(None);
            }
        }
        expected += scenario.probability * week;
    }
    Ok(Some(expected))
}

/// Evaluation of one allocation against a scenario set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixedEvaluation {
    pub expected_cost: f64,
    /// Weekly cost per scenario, in scenario order.
    pub per_scenario: Vec<ScheduleCost>,
    /// Probability-weighted mean weekly overlap tallies
    /// (uninfected-infected, uninfected-suspected, infected-suspected).
    pub expected_overlaps: [f64; 3],
}

/// Expected cost and overlap breakdown with the first stage pinned.
pub fn evaluate_fixed(
    alloc: &Allocation,
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
    scenarios: &ScenarioSet,
) -> Result<FixedEvaluation> {
    let mut solver = DaySolver::new(policy, weights, config);
    let per_scenario: Vec<ScheduleCost> = scenarios
        .scenarios()
        .iter()
        .map(|s| weekly_cost(&mut solver, alloc, s))
        .collect::<Result<_>>()?;
    let expected_cost = per_scenario
        .iter()
        .zip(scenarios.scenarios())
        .map(|(c, s)| s.probability * c.total)
        .sum();
    Ok(FixedEvaluation {
        expected_cost,
        expected_overlaps: expected_overlaps(&per_scenario, scenarios),
        per_scenario,
    })
}

/// Probability-weighted mean of the weekly overlap tallies.
pub fn expected_overlaps(per_scenario: &[ScheduleCost], scenarios: &ScenarioSet) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (cost, scenario) in per_scenario.iter().zip(scenarios.scenarios()) {
        let t = cost.overlaps;
        out[0] += scenario.probability * f64::from(t.uninfected_infected);
        out[1] += scenario.probability * f64::from(t.uninfected_suspected);
        out[2] += scenario.probability * f64::from(t.infected_suspected);
    }
    out
}

/// The chosen allocation and its evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizeOutcome {
    pub allocation: Allocation,
    pub evaluation: FixedEvaluation,
}

/// Solve the two-stage problem: enumerate every feasible allocation,
/// price each against the scenario set, return the minimizer. Ties go to
/// the lexicographically smallest allocation vector. Never aborts on
/// infeasible demand — the infeasibility penalty prices it instead.
pub fn optimize(
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
    scenarios: &ScenarioSet,
) -> Result<OptimizeOutcome> {
    weights.validate()?;
    let allocations = enumerate_allocations(policy, config)?;

    // Incumbent expected cost as atomic bits; for non-negative floats the
    // integer order of the bit patterns matches the numeric order.
    let incumbent = AtomicU64::new(f64::INFINITY.to_bits());
    let costs: Vec<Option<f64>> = allocations
        .par_iter()
        .map(|alloc| {
            let bound = f64::from_bits(incumbent.load(Ordering::Relaxed));
            let mut solver = DaySolver::new(policy, weights, config);
            let cost = expected_cost_bounded(&mut solver, alloc, scenarios, bound)?;
            if let Some(c) = cost {
                incumbent.fetch_min(c.to_bits(), Ordering::Relaxed);
            }
            Ok(cost)
        })
        .collect::<Result<_>>()?;

    let best = costs
        .iter()
        .enumerate()
        .filter_map(|(i, c)| c.map(|c| (i, c)))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)))
        .expect("the all-zero allocation is always feasible");

    let allocation = allocations[best.0].clone();
    let evaluation = evaluate_fixed(&allocation, policy, config, weights, scenarios)?;
    debug_assert_eq!(evaluation.expected_cost, best.1);
    Ok(OptimizeOutcome {
        allocation,
        evaluation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DayDemand;
    use crate::ingest::bundled_history;
    use crate::scenario::realized_scenario;

    fn case(policy: CohortPolicy) -> (ClinicConfig, PenaltyWeights) {
        (ClinicConfig::case_defaults(policy), PenaltyWeights::case_defaults())
    }

    #[test]
    fn allocation_enumeration_is_lexicographic_and_complete() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, _) = case(policy);
        let allocs = enumerate_allocations(policy, &config).unwrap();
        let expected = (0..=11u32)
            .flat_map(|a| (0..=8u32).flat_map(move |b| (0..=5u32).map(move |c| (a, b, c))))
            .filter(|&(a, b, c)| a + b + c <= 14)
            .count();
        assert_eq!(allocs.len(), expected);
        assert_eq!(allocs[0].machines(), &[0, 0, 0]);
        let mut sorted = allocs.clone();
        sorted.sort_by(|a, b| a.machines().cmp(b.machines()));
        assert_eq!(allocs, sorted);
    }

    #[test]
    fn zero_demand_selects_the_empty_allocation() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let scenarios = ScenarioSet::degenerate(vec![DayDemand([0; 4]); 6]);
        let outcome = optimize(policy, &config, &weights, &scenarios).unwrap();
        assert_eq!(outcome.allocation.machines(), &[0, 0, 0]);
        assert_eq!(outcome.evaluation.expected_cost, 0.0);
    }

    #[test]
    fn realized_week_seven_costs_thirty_six() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let scenarios = realized_scenario(&bundled_history(), 7).unwrap();
        let outcome = optimize(policy, &config, &weights, &scenarios).unwrap();
        assert_eq!(outcome.evaluation.expected_cost, 36.0);
        assert_eq!(outcome.evaluation.expected_overlaps, [0.0; 3]);

        let fixed = Allocation::new(vec![7, 5, 2], policy, &config).unwrap();
        let eval = evaluate_fixed(&fixed, policy, &config, &weights, &scenarios).unwrap();
        assert_eq!(eval.expected_cost, 48.0);
        assert_eq!(eval.per_scenario.len(), 1);
    }

    #[test]
    fn optimum_lower_bounds_every_fixed_allocation() {
        let policy = CohortPolicy::ThreeUnit;
        let (config, weights) = case(policy);
        let scenarios = realized_scenario(&bundled_history(), 2).unwrap();
        let outcome = optimize(policy, &config, &weights, &scenarios).unwrap();
        for alloc in enumerate_allocations(policy, &config).unwrap().iter().step_by(17) {
            let eval = evaluate_fixed(alloc, policy, &config, &weights, &scenarios).unwrap();
            assert!(outcome.evaluation.expected_cost <= eval.expected_cost);
        }
    }

    #[test]
    fn expected_overlaps_are_probability_weighted_means() {
        let weights = PenaltyWeights::case_defaults();
        let mk = |w: u32| {
            let mut c = ScheduleCost::default();
            c.overlaps.infected_suspected = w;
            c.total = c.overlaps.weighted(&weights);
            c
        };
        let scenarios = ScenarioSet::new(vec![
            Scenario { probability: 0.5, days: vec![DayDemand([0; 4])] },
            Scenario { probability: 0.5, days: vec![DayDemand([0; 4])] },
        ])
        .unwrap();
        let e = expected_overlaps(&[mk(8), mk(10)], &scenarios);
        assert_eq!(e, [0.0, 0.0, 9.0]);
    }

    #[test]
    fn parallel_and_serial_runs_agree() {
        let policy = CohortPolicy::TwoUnit;
        let (config, weights) = case(policy);
        let scenarios = realized_scenario(&bundled_history(), 5).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let serial = pool.install(|| optimize(policy, &config, &weights, &scenarios)).unwrap();
        let parallel = optimize(policy, &config, &weights, &scenarios).unwrap();
        assert_eq!(serial, parallel);
    }
}
