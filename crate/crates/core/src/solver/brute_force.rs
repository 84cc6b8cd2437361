//! Independent reference solver for the day subproblem.
//!
//! Enumerates every feasible (marks, assignment) pair directly from the
//! structural constraints — no greedy fill, no block shortcuts — and
//! returns the minimum objective. Exponential in demand and sessions, so
//! inputs are capped; used only to cross-check the production solver.

use crate::domain::{
    Allocation, ClinicConfig, CohortPolicy, DayDemand, OverlapTally, PatientType, PenaltyWeights,
    ScheduleCost,
};
use crate::error::{Error, Result};

const MAX_DEMAND: u32 = 12;
const MAX_MACHINES: u32 = 4;
const MAX_SESSIONS: usize = 4;

/// Exhaustive minimum of the day subproblem. Rejects instances too large
/// to enumerate.
pub fn brute_force_day(
    policy: CohortPolicy,
    alloc: &Allocation,
    demand: &DayDemand,
    weights: &PenaltyWeights,
    config: &ClinicConfig,
) -> Result<ScheduleCost> {
    super::validate_inputs(policy, alloc, weights, config)?;
    if demand.total() > MAX_DEMAND {
        return Err(Error::TooLarge(format!(
            "reference solver handles at most {MAX_DEMAND} patients, got {}",
            demand.total()
        )));
    }
    if config.total_machines > MAX_MACHINES {
        return Err(Error::TooLarge(format!(
            "reference solver handles at most {MAX_MACHINES} machines, got {}",
            config.total_machines
        )));
    }
    if config.sessions_per_day > MAX_SESSIONS {
        return Err(Error::TooLarge(format!(
            "reference solver handles at most {MAX_SESSIONS} sessions, got {}",
            config.sessions_per_day
        )));
    }

    let sessions = config.sessions_per_day;
    let units = policy.unit_count();

    // Every assignable (unit, patient type, session) cell, unit-major.
    let mut cells = Vec::new();
    for j in 0..units {
        for t in policy.types_in_unit(j) {
            for s in 0..sessions {
                cells.push((j, t, s));
            }
        }
    }

    let mut search = Search {
        policy,
        weights,
        sessions,
        marks: vec![0u32; units],
        cells,
        x: vec![[0u32; 4]; sessions],
        cap_left: vec![vec![0u32; sessions]; units],
        remaining: demand.0,
        best: None,
    };

    // Standard unit runs a prefix of the day; every other unit one
    // contiguous block. Checked directly on the bitmask.
    let masks: Vec<Vec<u32>> = (0..units)
        .map(|j| {
            (0..1u32 << sessions)
                .filter(|&m| if j == 0 { is_prefix(m) } else { is_contiguous(m) })
                .collect()
        })
        .collect();
    let mut stack = vec![0usize; units];
    enumerate_marks(&mut search, &masks, &mut stack, 0, alloc, demand);

    search
        .best
        .ok_or_else(|| Error::Validation("no feasible schedule".into()))
}

fn is_prefix(mask: u32) -> bool {
    // Set bits are exactly the low `popcount` bits.
    mask == (1u32 << mask.count_ones()) - 1
}

fn is_contiguous(mask: u32) -> bool {
    mask == 0 || is_prefix(mask >> mask.trailing_zeros())
}

struct Search<'a> {
    policy: CohortPolicy,
    weights: &'a PenaltyWeights,
    sessions: usize,
    marks: Vec<u32>,
    cells: Vec<(usize, PatientType, usize)>,
    x: Vec<[u32; 4]>,
    cap_left: Vec<Vec<u32>>,
    remaining: [u32; 4],
    best: Option<ScheduleCost>,
}

fn enumerate_marks(
    search: &mut Search,
    masks: &[Vec<u32>],
    stack: &mut Vec<usize>,
    unit: usize,
    alloc: &Allocation,
    demand: &DayDemand,
) {
    if unit == masks.len() {
        for j in 0..masks.len() {
            search.marks[j] = masks[j][stack[j]];
            for s in 0..search.sessions {
                search.cap_left[j][s] = if search.marks[j] >> s & 1 == 1 {
                    alloc.unit(j)
                } else {
                    0
                };
            }
        }
        search.remaining = demand.0;
        enumerate_assignments(search, 0);
        return;
    }
    for i in 0..masks[unit].len() {
        stack[unit] = i;
        enumerate_marks(search, masks, stack, unit + 1, alloc, demand);
    }
}

fn enumerate_assignments(search: &mut Search, cell: usize) {
    if cell == search.cells.len() {
        evaluate_leaf(search);
        return;
    }
    let (j, t, s) = search.cells[cell];
    let hi = search.remaining[t.index()].min(search.cap_left[j][s]);
    for x in 0..=hi {
        search.x[s][t.index()] = x;
        search.remaining[t.index()] -= x;
        search.cap_left[j][s] -= x;
        enumerate_assignments(search, cell + 1);
        search.remaining[t.index()] += x;
        search.cap_left[j][s] += x;
        search.x[s][t.index()] = 0;
    }
}

fn evaluate_leaf(search: &mut Search) {
    let infected = PatientType::Infected.index();
    let suspected = PatientType::Suspected.index();

    // Two-unit sequencing: every served suspected patient strictly
    // precedes every served infected one, never sharing a session.
    if search.policy == CohortPolicy::TwoUnit {
        let last_suspected = search.x.iter().rposition(|x| x[suspected] > 0);
        let first_infected = search.x.iter().position(|x| x[infected] > 0);
        if let (Some(last), Some(first)) = (last_suspected, first_infected) {
            if first <= last {
                return;
            }
        }
    }

    let mut tally = OverlapTally::default();
    for s in 0..search.sessions {
        let x = &search.x[s];
        let standard = search.marks[0] >> s & 1 == 1;
        let isolated = search.marks[1] >> s & 1 == 1;
        let uninfected = x[0] + x[1];
        match search.policy {
            CohortPolicy::ThreeUnit => {
                let quarantine = search.marks[2] >> s & 1 == 1;
                if standard && isolated {
                    tally.uninfected_infected += uninfected + x[infected];
                }
                if standard && quarantine {
                    tally.uninfected_suspected += uninfected + x[suspected];
                }
                if isolated && quarantine {
                    tally.infected_suspected += x[infected] + x[suspected];
                }
            }
            CohortPolicy::TwoUnit => {
                if standard && isolated {
                    if x[infected] > 0 {
                        tally.uninfected_infected += uninfected + x[infected];
                    }
                    if x[suspected] > 0 {
                        tally.uninfected_suspected += uninfected + x[suspected];
                    }
                }
            }
        }
    }

    let unserved_penalty: f64 = search
        .remaining
        .iter()
        .zip(&search.weights.pi)
        .map(|(&f, &pi)| pi * f64::from(f))
        .sum();
    let sessions_used: u32 = search.marks.iter().map(|m| m.count_ones()).sum();
    let cost = ScheduleCost::from_components(
        tally,
        unserved_penalty,
        sessions_used,
        search.weights,
    );
    if search.best.as_ref().is_none_or(|b| cost.total < b.total) {
        search.best = Some(cost);
    }
}
