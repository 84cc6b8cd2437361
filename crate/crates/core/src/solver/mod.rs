//! Exact second-stage solver: the minimum-penalty schedule for one day
//! under a fixed allocation.
//!
//! The search enumerates every feasible mark pattern (standard unit runs
//! a prefix of the day, every other unit one contiguous block, and under
//! two-unit cohorting a split of the shared block into a suspected part
//! followed by an infected part). Given the marks, every patient has a
//! fixed per-session penalty coefficient, so each unit fills its marked
//! sessions cheapest-first; a patient is only served while the marginal
//! session cost stays below the infeasibility penalty for their type.
//! The minimum over all mark patterns is the exact optimum of the day
//! subproblem.

mod brute_force;

pub use brute_force::brute_force_day;

use std::collections::HashMap;

use crate::domain::{
    validate_day_schedule, Allocation, ClinicConfig, CohortPolicy, DayDemand, DaySchedule,
    OverlapTally, PatientType, PenaltyWeights, ScheduleCost,
};
use crate::error::{Error, Result};

/// A candidate mark pattern.
///
/// `standard_prefix` is the number of leading sessions the standard unit
/// runs. `blocks[j]` is the inclusive zero-based session range run by
/// non-standard unit `j + 1`, or `None` when idle. Under two-unit
/// cohorting, the first `suspected_len` sessions of the shared block are
/// reserved for suspected patients and the remainder for infected ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MarkCombo {
    pub standard_prefix: usize,
    pub blocks: [Option<(usize, usize)>; 2],
    pub suspected_len: usize,
}

impl MarkCombo {
    fn block_len(block: Option<(usize, usize)>) -> usize {
        block.map_or(0, |(a, b)| b - a + 1)
    }

    fn sessions_marked(&self, policy: CohortPolicy) -> usize {
        let mut n = self.standard_prefix + Self::block_len(self.blocks[0]);
        if policy == CohortPolicy::ThreeUnit {
            n += Self::block_len(self.blocks[1]);
        }
        n
    }

    fn contains(block: Option<(usize, usize)>, s: usize) -> bool {
        block.is_some_and(|(a, b)| (a..=b).contains(&s))
    }
}

/// All contiguous blocks over `sessions` sessions, the empty block first,
/// then ordered by (start, end). Matching the deterministic tie-break:
/// the enumeration order is the preference order.
fn blocks(sessions: usize) -> Vec<Option<(usize, usize)>> {
    let mut out = vec![None];
    for a in 0..sessions {
        for b in a..sessions {
            out.push(Some((a, b)));
        }
    }
    out
}

fn combos(policy: CohortPolicy, sessions: usize) -> Vec<MarkCombo> {
    let blocks = blocks(sessions);
    let mut out = Vec::new();
    for prefix in 0..=sessions {
        for &isolated in &blocks {
            match policy {
                CohortPolicy::ThreeUnit => {
                    for &quarantine in &blocks {
                        out.push(MarkCombo {
                            standard_prefix: prefix,
                            blocks: [isolated, quarantine],
                            suspected_len: 0,
                        });
                    }
                }
                CohortPolicy::TwoUnit => {
                    for suspected_len in 0..=MarkCombo::block_len(isolated) {
                        out.push(MarkCombo {
                            standard_prefix: prefix,
                            blocks: [isolated, None],
                            suspected_len,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Patients competing for one unit's sessions.
#[derive(Clone, Copy)]
struct TypeDemand {
    patient: PatientType,
    count: u32,
    infeasibility: f64,
}

/// Fill marked sessions cheapest-first (ties: earliest session), serving
/// the patient type with the highest infeasibility penalty first (ties:
/// chronic before acute, so unserved counts are attributed to acute
/// patients first). Serves a patient only while the session coefficient
/// is strictly below the type's infeasibility penalty.
///
/// Returns the penalty contribution (assignment coefficients plus
/// infeasibility for the remainder) and invokes `record` per placement.
fn greedy_fill(
    sessions: &mut Vec<(f64, usize)>,
    capacity: u32,
    demands: &mut [TypeDemand],
    mut record: impl FnMut(usize, PatientType, u32),
) -> f64 {
    sessions.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut cost = 0.0;
    for &(coeff, s) in sessions.iter() {
        let mut free = capacity;
        while free > 0 {
            // Highest infeasibility penalty first; on ties the later
            // patient type (chronic over acute).
            let next = demands
                .iter_mut()
                .filter(|d| d.count > 0 && coeff < d.infeasibility)
                .max_by(|a, b| {
                    a.infeasibility
                        .partial_cmp(&b.infeasibility)
                        .unwrap()
                        .then(a.patient.index().cmp(&b.patient.index()))
                });
            let Some(d) = next else { break };
            let take = d.count.min(free);
            d.count -= take;
            free -= take;
            cost += coeff * f64::from(take);
            record(s, d.patient, take);
        }
    }
    for d in demands.iter() {
        cost += d.infeasibility * f64::from(d.count);
    }
    cost
}

/// Penalty of one mark pattern; when `schedule` is given, the fills are
/// recorded into it.
fn eval_combo(
    combo: &MarkCombo,
    policy: CohortPolicy,
    alloc: &Allocation,
    demand: &DayDemand,
    weights: &PenaltyWeights,
    scratch: &mut Vec<(f64, usize)>,
    mut schedule: Option<&mut DaySchedule>,
) -> f64 {
    let prefix = combo.standard_prefix;
    let standard_marked = |s: usize| s < prefix;
    let mut total = weights.epsilon * combo.sessions_marked(policy) as f64;

    let record = |s: usize, t: PatientType, n: u32, schedule: &mut Option<&mut DaySchedule>| {
        if let Some(sched) = schedule.as_deref_mut() {
            sched.assigned[s][t.index()] += n;
        }
    };

    // Standard unit: uninfected acute and chronic patients.
    scratch.clear();
    for s in 0..prefix {
        let coeff = match policy {
            CohortPolicy::ThreeUnit => {
                let mut c = 0.0;
                if MarkCombo::contains(combo.blocks[0], s) {
                    c += weights.alpha1;
                }
                if MarkCombo::contains(combo.blocks[1], s) {
                    c += weights.alpha2;
                }
                c
            }
            CohortPolicy::TwoUnit => match combo.blocks[0] {
                Some((a, _)) if MarkCombo::contains(combo.blocks[0], s) => {
                    if s < a + combo.suspected_len {
                        weights.alpha2
                    } else {
                        weights.alpha1
                    }
                }
                _ => 0.0,
            },
        };
        scratch.push((coeff, s));
    }
    let mut uninfected = [
        TypeDemand {
            patient: PatientType::Acute,
            count: demand.get(PatientType::Acute),
            infeasibility: weights.pi[PatientType::Acute.index()],
        },
        TypeDemand {
            patient: PatientType::Chronic,
            count: demand.get(PatientType::Chronic),
            infeasibility: weights.pi[PatientType::Chronic.index()],
        },
    ];
    total += greedy_fill(scratch, alloc.unit(0), &mut uninfected, |s, t, n| {
        record(s, t, n, &mut schedule)
    });
    let mut unserved = [0u32; 4];
    for d in uninfected {
        unserved[d.patient.index()] = d.count;
    }

    match policy {
        CohortPolicy::ThreeUnit => {
            // Isolated unit: infected patients.
            scratch.clear();
            if let Some((a, b)) = combo.blocks[0] {
                for s in a..=b {
                    let mut c = 0.0;
                    if standard_marked(s) {
                        c += weights.alpha1;
                    }
                    if MarkCombo::contains(combo.blocks[1], s) {
                        c += weights.alpha3;
                    }
                    scratch.push((c, s));
                }
            }
            let mut infected = [TypeDemand {
                patient: PatientType::Infected,
                count: demand.get(PatientType::Infected),
                infeasibility: weights.pi[PatientType::Infected.index()],
            }];
            total += greedy_fill(scratch, alloc.unit(1), &mut infected, |s, t, n| {
                record(s, t, n, &mut schedule)
            });
            unserved[PatientType::Infected.index()] = infected[0].count;

            // Quarantine unit: suspected patients.
            scratch.clear();
            if let Some((a, b)) = combo.blocks[1] {
                for s in a..=b {
                    let mut c = 0.0;
                    if standard_marked(s) {
                        c += weights.alpha2;
                    }
                    if MarkCombo::contains(combo.blocks[0], s) {
                        c += weights.alpha3;
                    }
                    scratch.push((c, s));
                }
            }
            let mut suspected = [TypeDemand {
                patient: PatientType::Suspected,
                count: demand.get(PatientType::Suspected),
                infeasibility: weights.pi[PatientType::Suspected.index()],
            }];
            total += greedy_fill(scratch, alloc.unit(2), &mut suspected, |s, t, n| {
                record(s, t, n, &mut schedule)
            });
            unserved[PatientType::Suspected.index()] = suspected[0].count;
        }
        CohortPolicy::TwoUnit => {
            // Shared isolated unit: suspected sessions precede infected.
            let (a, b) = combo.blocks[0].map_or((0, 0), |x| x);
            let split = a + combo.suspected_len; // first infected session
            scratch.clear();
            if combo.blocks[0].is_some() {
                for s in a..split {
                    let c = if standard_marked(s) { weights.alpha2 } else { 0.0 };
                    scratch.push((c, s));
                }
            }
            let mut suspected = [TypeDemand {
                patient: PatientType::Suspected,
                count: demand.get(PatientType::Suspected),
                infeasibility: weights.pi[PatientType::Suspected.index()],
            }];
            total += greedy_fill(scratch, alloc.unit(1), &mut suspected, |s, t, n| {
                record(s, t, n, &mut schedule)
            });
            unserved[PatientType::Suspected.index()] = suspected[0].count;

            scratch.clear();
            if combo.blocks[0].is_some() {
                for s in split..=b {
                    let c = if standard_marked(s) { weights.alpha1 } else { 0.0 };
                    scratch.push((c, s));
                }
            }
            let mut infected = [TypeDemand {
                patient: PatientType::Infected,
                count: demand.get(PatientType::Infected),
                infeasibility: weights.pi[PatientType::Infected.index()],
            }];
            total += greedy_fill(scratch, alloc.unit(1), &mut infected, |s, t, n| {
                record(s, t, n, &mut schedule)
            });
            unserved[PatientType::Infected.index()] = infected[0].count;
        }
    }

    if let Some(sched) = schedule {
        sched.unserved = unserved;
        for s in 0..prefix {
            sched.marks[0][s] = true;
        }
        if let Some((a, b)) = combo.blocks[0] {
            for s in a..=b {
                sched.marks[1][s] = true;
            }
        }
        if policy == CohortPolicy::ThreeUnit {
            if let Some((a, b)) = combo.blocks[1] {
                for s in a..=b {
                    sched.marks[2][s] = true;
                }
            }
        }
        if policy == CohortPolicy::TwoUnit {
            sched.type4_cutoff = sched
                .assigned
                .iter()
                .rposition(|x| x[PatientType::Suspected.index()] > 0)
                .map(|s| s + 1);
        }
    }

    total
}

fn validate_inputs(
    policy: CohortPolicy,
    alloc: &Allocation,
    weights: &PenaltyWeights,
    config: &ClinicConfig,
) -> Result<()> {
    config.validate(policy)?;
    weights.validate()?;
    if alloc.machines().len() != policy.unit_count() {
        return Err(Error::Validation(format!(
            "allocation {alloc} does not fit the {} policy",
            policy.label()
        )));
    }
    for (j, (&r, &cap)) in alloc.machines().iter().zip(&config.unit_caps).enumerate() {
        if r > cap {
            return Err(Error::Validation(format!(
                "unit {} allocation {r} exceeds its cap {cap}",
                j + 1
            )));
        }
    }
    if alloc.machines().iter().sum::<u32>() > config.total_machines {
        return Err(Error::Validation(
            "allocation exceeds available machines".into(),
        ));
    }
    Ok(())
}

/// Solve the day subproblem exactly.
///
/// The returned schedule satisfies every structural constraint and its
/// cost is the global minimum. Ties between mark patterns are broken by
/// enumeration order (smallest standard prefix, then block start/end,
/// then split), so identical inputs always return the identical schedule.
pub fn solve_day(
    policy: CohortPolicy,
    alloc: &Allocation,
    demand: &DayDemand,
    weights: &PenaltyWeights,
    config: &ClinicConfig,
) -> Result<(DaySchedule, ScheduleCost)> {
    validate_inputs(policy, alloc, weights, config)?;

    let mut scratch = Vec::with_capacity(config.sessions_per_day);
    let mut best: Option<(f64, MarkCombo)> = None;
    for combo in combos(policy, config.sessions_per_day) {
        let cost = eval_combo(&combo, policy, alloc, demand, weights, &mut scratch, None);
        if best.as_ref().is_none_or(|(c, _)| cost < *c) {
            best = Some((cost, combo));
        }
    }
    let (_, combo) = best.expect("at least the all-idle pattern exists");

    let mut schedule = DaySchedule::empty(policy, config);
    eval_combo(
        &combo,
        policy,
        alloc,
        demand,
        weights,
        &mut scratch,
        Some(&mut schedule),
    );
    debug_assert_eq!(
        validate_day_schedule(policy, config, alloc, demand, &schedule),
        Ok(())
    );
    let cost = day_cost(&schedule, policy, weights);
    Ok((schedule, cost))
}

/// Overlap tallies of a schedule.
///
/// Three-unit cohorting counts patients whenever two units are marked in
/// the same session, patients assigned or not, mirroring the mark-driven
/// overlap indicators. Two-unit cohorting attributes a co-marked shared
/// session by the cohort actually present: sessions carrying infected
/// patients count toward the uninfected-infected tally, sessions carrying
/// suspected patients toward the uninfected-suspected tally.
pub fn count_overlaps(schedule: &DaySchedule, policy: CohortPolicy) -> OverlapTally {
    let mut tally = OverlapTally::default();
    let uninfected = |x: &[u32; 4]| x[0] + x[1];
    for (s, x) in schedule.assigned.iter().enumerate() {
        let standard = schedule.marks[0][s];
        let isolated = schedule.marks[1][s];
        match policy {
            CohortPolicy::ThreeUnit => {
                let quarantine = schedule.marks[2][s];
                if standard && isolated {
                    tally.uninfected_infected += uninfected(x) + x[2];
                }
                if standard && quarantine {
                    tally.uninfected_suspected += uninfected(x) + x[3];
                }
                if isolated && quarantine {
                    tally.infected_suspected += x[2] + x[3];
                }
            }
            CohortPolicy::TwoUnit => {
                if standard && isolated {
                    if x[2] > 0 {
                        tally.uninfected_infected += uninfected(x) + x[2];
                    }
                    if x[3] > 0 {
                        tally.uninfected_suspected += uninfected(x) + x[3];
                    }
                }
            }
        }
    }
    tally
}

/// Cost breakdown of a schedule under the given weights.
pub fn day_cost(
    schedule: &DaySchedule,
    policy: CohortPolicy,
    weights: &PenaltyWeights,
) -> ScheduleCost {
    let unserved_penalty: f64 = schedule
        .unserved
        .iter()
        .zip(&weights.pi)
        .map(|(&f, &pi)| pi * f64::from(f))
        .sum();
    ScheduleCost::from_components(
        count_overlaps(schedule, policy),
        unserved_penalty,
        schedule.sessions_marked(),
        weights,
    )
}

/// Memoizing wrapper around [`solve_day`] for a fixed policy, weight set
/// and configuration. Scenario sets repeat daily demand vectors heavily,
/// so day subproblems are cached on (allocation, demand).
pub struct DaySolver<'a> {
    policy: CohortPolicy,
    weights: &'a PenaltyWeights,
    config: &'a ClinicConfig,
    cache: HashMap<(Vec<u32>, DayDemand), (DaySchedule, ScheduleCost)>,
}

impl<'a> DaySolver<'a> {
    pub fn new(
        policy: CohortPolicy,
        weights: &'a PenaltyWeights,
        config: &'a ClinicConfig,
    ) -> DaySolver<'a> {
        DaySolver {
            policy,
            weights,
            config,
            cache: HashMap::new(),
        }
    }

    pub fn solve(
        &mut self,
        alloc: &Allocation,
        demand: &DayDemand,
    ) -> Result<(DaySchedule, ScheduleCost)> {
        let key = (alloc.machines().to_vec(), *demand);
        if let Some(hit) = self.cache.get(&key) {
            return Ok(hit.clone());
        }
        let solved = solve_day(self.policy, alloc, demand, self.weights, self.config)?;
        self.cache.insert(key, solved.clone());
        Ok(solved)
    }
}
