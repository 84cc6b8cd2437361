//! Human-readable schedule output: a sessions × machines text grid per
//! day, one column block per unit, plus a CSV cell dump.

use crate::domain::{Allocation, ClinicConfig, CohortPolicy, DaySchedule, PenaltyWeights};
use crate::solver::{count_overlaps, day_cost};

/// Integer with thousands separators, e.g. 14612 → "14,612".
pub fn with_thousands(value: f64) -> String {
    let negative = value < 0.0;
    let digits = format!("{:.0}", value.abs());
    let mut out = String::new();
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i) % 3 == 0 {
            out.push(',');
        }
        out.push(c);
    }
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

fn unit_names(policy: CohortPolicy) -> &'static [&'static str] {
    match policy {
        CohortPolicy::ThreeUnit => &["standard", "isolated", "quarantine"],
        CohortPolicy::TwoUnit => &["standard", "isolated"],
    }
}

/// Patient-type codes filling unit `j`'s machine slots in session `s`,
/// padded with "." for idle machines of a marked session and blanks for
/// an unmarked one.
fn unit_cells(
    schedule: &DaySchedule,
    policy: CohortPolicy,
    j: usize,
    s: usize,
    machines: u32,
) -> Vec<String> {
    let mut cells = Vec::with_capacity(machines as usize);
    for t in policy.types_in_unit(j) {
        for _ in 0..schedule.assigned[s][t.index()] {
            cells.push(t.ordinal().to_string());
        }
    }
    let idle = if schedule.marks[j][s] { "." } else { " " };
    while cells.len() < machines as usize {
        cells.push(idle.to_string());
    }
    cells
}

/// Sessions contributing to an overlap tally, by the same rules as
/// [`count_overlaps`].
fn overlapping_sessions(schedule: &DaySchedule, policy: CohortPolicy) -> Vec<bool> {
    (0..schedule.assigned.len())
        .map(|s| {
            let mut probe = schedule.clone();
            for (row, orig) in probe.marks.iter_mut().zip(&schedule.marks) {
                for (i, m) in row.iter_mut().enumerate() {
                    *m = orig[i] && i == s;
                }
            }
            for (i, x) in probe.assigned.iter_mut().enumerate() {
                if i != s {
                    *x = [0; 4];
                }
            }
            let t = count_overlaps(&probe, policy);
            t.uninfected_infected + t.uninfected_suspected + t.infected_suspected > 0
        })
        .collect()
}

/// Fixed-width grid: one row per session, machine columns grouped by
/// unit, patient-type codes in occupied slots, `*` on sessions where
/// conflicting cohorts overlap, and a penalty footer.
pub fn render_day(
    schedule: &DaySchedule,
    alloc: &Allocation,
    policy: CohortPolicy,
    config: &ClinicConfig,
    weights: &PenaltyWeights,
) -> String {
    let names = unit_names(policy);
    let mut out = String::new();

    out.push_str("session");
    for (j, name) in names.iter().enumerate() {
        let width = (3 * alloc.unit(j) as usize).max(name.len() + 1);
        out.push_str(" | ");
        out.push_str(&format!("{name:<width$}"));
    }
    out.push('\n');

    let flagged = overlapping_sessions(schedule, policy);
    for s in 0..config.sessions_per_day {
        out.push_str(&format!("{:>7}", s + 1));
        for (j, name) in names.iter().enumerate() {
            let width = (3 * alloc.unit(j) as usize).max(name.len() + 1);
            let cells = unit_cells(schedule, policy, j, s, alloc.unit(j));
            let row = cells
                .iter()
                .map(|c| format!("{c:>2}"))
                .collect::<Vec<_>>()
                .join(" ");
            out.push_str(" | ");
            out.push_str(&format!("{row:<width$}"));
        }
        if flagged[s] {
            out.push_str(" *");
        }
        out.push('\n');
    }

    let cost = day_cost(schedule, policy, weights);
    let unserved: u32 = schedule.unserved.iter().sum();
    if unserved > 0 {
        out.push_str(&format!("Unserved patients = {unserved}\n"));
    }
    out.push_str(&format!(
        "Overlaps: uninfected-infected {}, uninfected-suspected {}, infected-suspected {}\n",
        cost.overlaps.uninfected_infected,
        cost.overlaps.uninfected_suspected,
        cost.overlaps.infected_suspected
    ));
    out.push_str(&format!("Daily penalty = {}\n", with_thousands(cost.total)));
    out
}

/// CSV cell dump: `day,session,unit,machine_slot,patient_type`, one row
/// per occupied machine slot.
pub fn day_schedule_csv(
    day: usize,
    schedule: &DaySchedule,
    alloc: &Allocation,
    policy: CohortPolicy,
) -> String {
    let mut out = String::new();
    for s in 0..schedule.assigned.len() {
        for j in 0..policy.unit_count() {
            for (slot, cell) in unit_cells(schedule, policy, j, s, alloc.unit(j))
                .iter()
                .enumerate()
            {
                if cell != "." && cell != " " {
                    out.push_str(&format!("{day},{},{},{},{cell}\n", s + 1, j + 1, slot + 1));
                }
            }
        }
    }
    out
}

pub const SCHEDULE_CSV_HEADER: &str = "day,session,unit,machine_slot,patient_type\n";
