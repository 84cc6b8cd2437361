//! Core vocabulary shared by every module: patient types, cohorting
//! policies, clinic configuration, demand, allocations, schedules and
//! costs. All types are immutable values and freely shareable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, ScheduleViolation};

/// The four patient groups treated by the clinic.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PatientType {
    /// Uninfected inpatients with temporary dialysis needs (type 1).
    Acute,
    /// Uninfected patients on a fixed weekly regime (type 2).
    Chronic,
    /// Confirmed COVID-19 patients (type 3).
    Infected,
    /// Patients under suspicion of infection (type 4).
    Suspected,
}

impl PatientType {
    pub const ALL: [PatientType; 4] = [
        PatientType::Acute,
        PatientType::Chronic,
        PatientType::Infected,
        PatientType::Suspected,
    ];

    /// Zero-based index into demand/assignment arrays.
    pub fn index(self) -> usize {
        self as usize
    }

    /// One-based ordinal used in data files and reports.
    pub fn ordinal(self) -> usize {
        self as usize + 1
    }

    pub fn from_ordinal(ordinal: usize) -> Option<PatientType> {
        Self::ALL.get(ordinal.wrapping_sub(1)).copied()
    }
}

/// How the clinic is partitioned into units.
///
/// Three-unit cohorting runs standard, isolated and quarantine units;
/// two-unit cohorting merges isolated and quarantine, treating suspected
/// patients strictly before infected ones in the shared unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CohortPolicy {
    ThreeUnit,
    TwoUnit,
}

impl CohortPolicy {
    pub fn unit_count(self) -> usize {
        match self {
            CohortPolicy::ThreeUnit => 3,
            CohortPolicy::TwoUnit => 2,
        }
    }

    /// Zero-based unit a patient type is treated in.
    pub fn unit_of(self, t: PatientType) -> usize {
        match (self, t) {
            (_, PatientType::Acute | PatientType::Chronic) => 0,
            (CohortPolicy::ThreeUnit, PatientType::Infected) => 1,
            (CohortPolicy::ThreeUnit, PatientType::Suspected) => 2,
            (CohortPolicy::TwoUnit, _) => 1,
        }
    }

    /// Patient types assigned to a unit, in type order.
    pub fn types_in_unit(self, unit: usize) -> Vec<PatientType> {
        PatientType::ALL
            .into_iter()
            .filter(|&t| self.unit_of(t) == unit)
            .collect()
    }

    pub fn label(self) -> &'static str {
        match self {
            CohortPolicy::ThreeUnit => "three-unit",
            CohortPolicy::TwoUnit => "two-unit",
        }
    }
}

/// Physical configuration of the clinic.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClinicConfig {
    /// Total dialysis machines available for allocation.
    pub total_machines: u32,
    /// Per-unit ceiling on machines, imposed by the room layout.
    pub unit_caps: Vec<u32>,
    /// Sessions per day, all units in lockstep.
    pub sessions_per_day: usize,
    /// Working days in the planning week.
    pub days_per_week: usize,
}

impl ClinicConfig {
    /// Case-study configuration: 14 machines, caps (11, 8, 5) or (11, 8),
    /// four sessions over six working days.
    pub fn case_defaults(policy: CohortPolicy) -> ClinicConfig {
        let unit_caps = match policy {
            CohortPolicy::ThreeUnit => vec![11, 8, 5],
            CohortPolicy::TwoUnit => vec![11, 8],
        };
        ClinicConfig {
            total_machines: 14,
            unit_caps,
            sessions_per_day: 4,
            days_per_week: 6,
        }
    }

    pub fn validate(&self, policy: CohortPolicy) -> Result<()> {
        if self.total_machines < 1 {
            return Err(Error::Validation("total_machines must be >= 1".into()));
        }
        if self.unit_caps.len() != policy.unit_count() {
            return Err(Error::Validation(format!(
                "expected {} unit caps for the {} policy, got {}",
                policy.unit_count(),
                policy.label(),
                self.unit_caps.len()
            )));
        }
        if self.sessions_per_day < 1 || self.days_per_week < 1 {
            return Err(Error::Validation(
                "sessions_per_day and days_per_week must be >= 1".into(),
            ));
        }
        Ok(())
    }
}

/// Objective weights: per-patient overlap penalties, per-patient
/// infeasibility penalties and the per-session compactness penalty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PenaltyWeights {
    /// Per patient present when uninfected and infected cohorts overlap.
    pub alpha1: f64,
    /// Per patient present when uninfected and suspected cohorts overlap.
    pub alpha2: f64,
    /// Per patient present when infected and suspected cohorts overlap.
    pub alpha3: f64,
    /// Per unserved patient, by patient type.
    pub pi: [f64; 4],
    /// Per session a unit runs.
    pub epsilon: f64,
}

impl PenaltyWeights {
    /// Case-study weights.
    pub fn case_defaults() -> PenaltyWeights {
        PenaltyWeights {
            alpha1: 1000.0,
            alpha2: 1000.0,
            alpha3: 100.0,
            pi: [100_000.0; 4],
            epsilon: 2.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.alpha1, self.alpha2, self.alpha3, self.epsilon]
            .into_iter()
            .chain(self.pi);
        for w in all {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Validation("penalty weights must be >= 0".into()));
            }
        }
        Ok(())
    }

    pub fn scaled(&self, factor: f64) -> PenaltyWeights {
        PenaltyWeights {
            alpha1: self.alpha1 * factor,
            alpha2: self.alpha2 * factor,
            alpha3: self.alpha3 * factor,
            pi: self.pi.map(|p| p * factor),
            epsilon: self.epsilon * factor,
        }
    }
}

/// Patients needing dialysis on one day, per patient type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DayDemand(pub [u32; 4]);

impl DayDemand {
    pub fn get(&self, t: PatientType) -> u32 {
        self.0[t.index()]
    }

    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

/// One realization of a week of demand, with its probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub probability: f64,
    pub days: Vec<DayDemand>,
}

/// A non-empty scenario set whose probabilities sum to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSet {
    scenarios: Vec<Scenario>,
}

impl ScenarioSet {
    pub fn new(scenarios: Vec<Scenario>) -> Result<ScenarioSet> {
        if scenarios.is_empty() {
            return Err(Error::Validation("scenario set must be non-empty".into()));
        }
        let mass: f64 = scenarios.iter().map(|s| s.probability).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "scenario probabilities sum to {mass}, expected 1"
            )));
        }
        if scenarios.iter().any(|s| s.probability <= 0.0) {
            return Err(Error::Validation(
                "scenario probabilities must be positive".into(),
            ));
        }
        let days = scenarios[0].days.len();
        if scenarios.iter().any(|s| s.days.len() != days) {
            return Err(Error::Validation(
                "all scenarios must cover the same number of days".into(),
            ));
        }
        Ok(ScenarioSet { scenarios })
    }

    /// A single scenario with probability one.
    pub fn degenerate(days: Vec<DayDemand>) -> ScenarioSet {
        ScenarioSet {
            scenarios: vec![Scenario {
                probability: 1.0,
                days,
            }],
        }
    }

    pub fn scenarios(&self) -> &[Scenario] {
        &self.scenarios
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

/// First-stage decision: machines per unit for the coming week.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Allocation {
    machines: Vec<u32>,
}

impl Allocation {
    pub fn new(
        machines: Vec<u32>,
        policy: CohortPolicy,
        config: &ClinicConfig,
    ) -> Result<Allocation> {
        config.validate(policy)?;
        if machines.len() != policy.unit_count() {
            return Err(Error::Validation(format!(
                "allocation has {} units, the {} policy needs {}",
                machines.len(),
                policy.label(),
                policy.unit_count()
            )));
        }
        for (j, (&r, &cap)) in machines.iter().zip(&config.unit_caps).enumerate() {
            if r > cap {
                return Err(Error::Validation(format!(
                    "unit {} allocation {r} exceeds its cap {cap}",
                    j + 1
                )));
            }
        }
        let total: u32 = machines.iter().sum();
        if total > config.total_machines {
            return Err(Error::Validation(format!(
                "allocation total {total} exceeds the {} available machines",
                config.total_machines
            )));
        }
        Ok(Allocation { machines })
    }

    pub fn machines(&self) -> &[u32] {
        &self.machines
    }

    pub fn unit(&self, j: usize) -> u32 {
        self.machines[j]
    }
}

impl std::fmt::Display for Allocation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let parts: Vec<String> = self.machines.iter().map(u32::to_string).collect();
        write!(f, "({})", parts.join(", "))
    }
}

/// Second-stage outcome for a single day.
///
/// `assigned[s][i]` is the number of type-`i` patients treated in session
/// `s` (zero-based; reports print one-based session numbers). `marks[j][s]`
/// records whether unit `j` runs session `s`, whether or not patients are
/// assigned. `type4_cutoff` is the last one-based session carrying
/// suspected patients, used only under two-unit cohorting.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DaySchedule {
    pub assigned: Vec<[u32; 4]>,
    pub marks: Vec<Vec<bool>>,
    pub unserved: [u32; 4],
    pub type4_cutoff: Option<usize>,
}

impl DaySchedule {
    pub fn empty(policy: CohortPolicy, config: &ClinicConfig) -> DaySchedule {
        DaySchedule {
            assigned: vec![[0; 4]; config.sessions_per_day],
            marks: vec![vec![false; config.sessions_per_day]; policy.unit_count()],
            unserved: [0; 4],
            type4_cutoff: None,
        }
    }

    /// Patients of unit `j` present in session `s`.
    pub fn unit_load(&self, policy: CohortPolicy, j: usize, s: usize) -> u32 {
        policy
            .types_in_unit(j)
            .iter()
            .map(|&t| self.assigned[s][t.index()])
            .sum()
    }

    pub fn sessions_marked(&self) -> u32 {
        self.marks
            .iter()
            .map(|row| row.iter().filter(|&&m| m).count() as u32)
            .sum()
    }

    /// Patients served over the day for unit `j`.
    pub fn unit_served(&self, policy: CohortPolicy, j: usize) -> u32 {
        (0..self.assigned.len())
            .map(|s| self.unit_load(policy, j, s))
            .sum()
    }
}

/// Check a candidate schedule against every structural constraint,
/// reporting the first violation by name.
pub fn validate_day_schedule(
    policy: CohortPolicy,
    config: &ClinicConfig,
    alloc: &Allocation,
    demand: &DayDemand,
    schedule: &DaySchedule,
) -> std::result::Result<(), ScheduleViolation> {
    let sessions = config.sessions_per_day;
    if schedule.assigned.len() != sessions
        || schedule.marks.len() != policy.unit_count()
        || schedule.marks.iter().any(|row| row.len() != sessions)
    {
        return Err(ScheduleViolation::Shape);
    }

    // Demand balance: served plus unserved covers every patient type.
    for t in PatientType::ALL {
        let served: u32 = schedule.assigned.iter().map(|x| x[t.index()]).sum();
        if served + schedule.unserved[t.index()] != demand.get(t) {
            return Err(ScheduleViolation::DemandBalance(t.ordinal()));
        }
    }

    // Patients only in marked sessions.
    for t in PatientType::ALL {
        let j = policy.unit_of(t);
        for s in 0..sessions {
            if schedule.assigned[s][t.index()] > 0 && !schedule.marks[j][s] {
                return Err(ScheduleViolation::UnmarkedSession {
                    unit: j + 1,
                    session: s + 1,
                });
            }
        }
    }

    // Standard-unit marks form a prefix; other units one contiguous block.
    let standard = &schedule.marks[0];
    let prefix_len = standard.iter().take_while(|&&m| m).count();
    if standard[prefix_len..].iter().any(|&m| m) {
        return Err(ScheduleViolation::PrefixMarks);
    }
    for j in 1..policy.unit_count() {
        let row = &schedule.marks[j];
        let first = row.iter().position(|&m| m);
        if let Some(first) = first {
            let last = row.iter().rposition(|&m| m).unwrap();
            if row[first..=last].iter().any(|&m| !m) {
                return Err(ScheduleViolation::NonContiguousMarks(j + 1));
            }
        }
    }

    // Session loads within allocated machines.
    for j in 0..policy.unit_count() {
        for s in 0..sessions {
            let load = schedule.unit_load(policy, j, s);
            if load > alloc.unit(j) {
                return Err(ScheduleViolation::UnitCapacity {
                    unit: j + 1,
                    session: s + 1,
                    load,
                    machines: alloc.unit(j),
                });
            }
        }
    }

    // Two-unit sequencing: suspected strictly before infected, never mixed.
    if policy == CohortPolicy::TwoUnit {
        let infected = PatientType::Infected.index();
        let suspected = PatientType::Suspected.index();
        let last_suspected = schedule
            .assigned
            .iter()
            .rposition(|x| x[suspected] > 0);
        for s in 0..sessions {
            if schedule.assigned[s][infected] > 0 {
                if schedule.assigned[s][suspected] > 0 {
                    return Err(ScheduleViolation::MixedIsolatedSession(s + 1));
                }
                if let Some(last) = last_suspected {
                    if s <= last {
                        return Err(ScheduleViolation::InfectedBeforeSuspected(s + 1));
                    }
                }
            }
        }
    }

    Ok(())
}

/// Weekly or daily overlap tallies: patients present in sessions where
/// conflicting cohorts co-occur.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OverlapTally {
    /// Uninfected (types 1, 2) with infected (type 3).
    pub uninfected_infected: u32,
    /// Uninfected (types 1, 2) with suspected (type 4).
    pub uninfected_suspected: u32,
    /// Infected (type 3) with suspected (type 4); three-unit only.
    pub infected_suspected: u32,
}

impl OverlapTally {
    pub fn add(&mut self, other: OverlapTally) {
        self.uninfected_infected += other.uninfected_infected;
        self.uninfected_suspected += other.uninfected_suspected;
        self.infected_suspected += other.infected_suspected;
    }

    /// Overlap penalty under the given weights, excluding unserved and
    /// session terms.
    pub fn weighted(&self, weights: &PenaltyWeights) -> f64 {
        weights.alpha1 * f64::from(self.uninfected_infected)
            + weights.alpha2 * f64::from(self.uninfected_suspected)
            + weights.alpha3 * f64::from(self.infected_suspected)
    }
}

/// Objective breakdown for a day or a week.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ScheduleCost {
    pub overlaps: OverlapTally,
    pub unserved_penalty: f64,
    pub sessions_used: u32,
    pub total: f64,
}

impl ScheduleCost {
    /// Assemble a cost from its components; `total` is recomputed.
    pub fn from_components(
        overlaps: OverlapTally,
        unserved_penalty: f64,
        sessions_used: u32,
        weights: &PenaltyWeights,
    ) -> ScheduleCost {
        let total = overlaps.weighted(weights)
            + unserved_penalty
            + weights.epsilon * f64::from(sessions_used);
        ScheduleCost {
            overlaps,
            unserved_penalty,
            sessions_used,
            total,
        }
    }

    pub fn add(&mut self, other: &ScheduleCost) {
        self.overlaps.add(other.overlaps);
        self.unserved_penalty += other.unserved_penalty;
        self.sessions_used += other.sessions_used;
        self.total += other.total;
    }
}

/// A discrete demand distribution over non-negative integers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntDist {
    support: Vec<(u32, f64)>,
}

impl IntDist {
    pub fn new(support: Vec<(u32, f64)>) -> Result<IntDist> {
        if support.is_empty() {
            return Err(Error::Validation("distribution support is empty".into()));
        }
        if support.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::Validation(
                "support values must be strictly increasing".into(),
            ));
        }
        if support.iter().any(|&(_, m)| m <= 0.0) {
            return Err(Error::Validation("masses must be positive".into()));
        }
        let mass: f64 = support.iter().map(|&(_, m)| m).sum();
        if (mass - 1.0).abs() > 1e-9 {
            return Err(Error::Validation(format!(
                "masses sum to {mass}, expected 1"
            )));
        }
        Ok(IntDist { support })
    }

    pub fn point_mass(value: u32) -> IntDist {
        IntDist {
            support: vec![(value, 1.0)],
        }
    }

    pub fn support(&self) -> &[(u32, f64)] {
        &self.support
    }

    pub fn mean(&self) -> f64 {
        self.support
            .iter()
            .map(|&(v, m)| f64::from(v) * m)
            .sum()
    }

    /// Inverse-CDF draw from a uniform variate in [0, 1).
    pub fn quantile(&self, u: f64) -> u32 {
        let mut acc = 0.0;
        for &(v, m) in &self.support {
            acc += m;
            if u < acc {
                return v;
            }
        }
        self.support.last().unwrap().0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_unit() -> (CohortPolicy, ClinicConfig) {
        let policy = CohortPolicy::ThreeUnit;
        let config = ClinicConfig::case_defaults(policy);
        (policy, config)
    }

    #[test]
    fn patient_type_ordinals_match_data_indices() {
        assert_eq!(PatientType::Acute.ordinal(), 1);
        assert_eq!(PatientType::Suspected.ordinal(), 4);
        assert_eq!(PatientType::from_ordinal(3), Some(PatientType::Infected));
        assert_eq!(PatientType::from_ordinal(0), None);
        assert_eq!(PatientType::from_ordinal(5), None);
    }

    #[test]
    fn cohort_mapping_matches_policies() {
        let p3 = CohortPolicy::ThreeUnit;
        assert_eq!(p3.unit_of(PatientType::Acute), 0);
        assert_eq!(p3.unit_of(PatientType::Chronic), 0);
        assert_eq!(p3.unit_of(PatientType::Infected), 1);
        assert_eq!(p3.unit_of(PatientType::Suspected), 2);
        let p2 = CohortPolicy::TwoUnit;
        assert_eq!(p2.unit_of(PatientType::Infected), 1);
        assert_eq!(p2.unit_of(PatientType::Suspected), 1);
        assert_eq!(p2.unit_count(), 2);
    }

    #[test]
    fn allocation_enforces_caps_and_total() {
        let (policy, config) = three_unit();
        assert!(Allocation::new(vec![7, 5, 2], policy, &config).is_ok());
        // Per-unit cap.
        assert!(Allocation::new(vec![12, 1, 1], policy, &config).is_err());
        // Machine total.
        assert!(Allocation::new(vec![11, 8, 5], policy, &config).is_err());
        // Wrong arity.
        assert!(Allocation::new(vec![7, 5], policy, &config).is_err());
    }

    #[test]
    fn scenario_set_checks_probability_mass() {
        let day = DayDemand([1, 2, 3, 4]);
        let ok = ScenarioSet::new(vec![
            Scenario {
                probability: 0.5,
                days: vec![day],
            },
            Scenario {
                probability: 0.5,
                days: vec![day],
            },
        ]);
        assert!(ok.is_ok());
        let bad = ScenarioSet::new(vec![Scenario {
            probability: 0.9,
            days: vec![day],
        }]);
        assert!(bad.is_err());
    }

    #[test]
    fn schedule_validation_names_first_violation() {
        let (policy, config) = three_unit();
        let alloc = Allocation::new(vec![7, 5, 2], policy, &config).unwrap();
        let demand = DayDemand([3, 0, 2, 0]);

        let mut sched = DaySchedule::empty(policy, &config);
        sched.assigned[0] = [3, 0, 0, 0];
        sched.assigned[3] = [0, 0, 2, 0];
        sched.marks[0][0] = true;
        sched.marks[1][3] = true;
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &sched),
            Ok(())
        );

        // Break demand balance.
        let mut bad = sched.clone();
        bad.assigned[0][0] = 2;
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &bad),
            Err(ScheduleViolation::DemandBalance(1))
        );

        // Non-prefix standard marks.
        let mut bad = sched.clone();
        bad.marks[0] = vec![false, true, false, false];
        bad.assigned[0] = [0; 4];
        bad.assigned[1] = [3, 0, 0, 0];
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &bad),
            Err(ScheduleViolation::PrefixMarks)
        );

        // Split isolated block.
        let mut bad = sched.clone();
        bad.marks[1] = vec![true, false, false, true];
        bad.assigned[3][2] = 1;
        bad.assigned[0][2] = 1;
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &bad),
            Err(ScheduleViolation::NonContiguousMarks(2))
        );
    }

    #[test]
    fn two_unit_sequencing_is_checked() {
        let policy = CohortPolicy::TwoUnit;
        let config = ClinicConfig::case_defaults(policy);
        let alloc = Allocation::new(vec![11, 3], policy, &config).unwrap();
        let demand = DayDemand([0, 0, 1, 1]);

        let mut sched = DaySchedule::empty(policy, &config);
        sched.marks[1] = vec![false, false, true, true];
        sched.assigned[2][3] = 1; // suspected first
        sched.assigned[3][2] = 1; // infected after
        sched.type4_cutoff = Some(3);
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &sched),
            Ok(())
        );

        let mut bad = sched.clone();
        bad.assigned[2] = [0, 0, 1, 0];
        bad.assigned[3] = [0, 0, 0, 1];
        assert_eq!(
            validate_day_schedule(policy, &config, &alloc, &demand, &bad),
            Err(ScheduleViolation::InfectedBeforeSuspected(3))
        );
    }

    #[test]
    fn cost_total_recomputes_from_components() {
        let weights = PenaltyWeights::case_defaults();
        let tally = OverlapTally {
            uninfected_infected: 2,
            uninfected_suspected: 1,
            infected_suspected: 3,
        };
        let cost = ScheduleCost::from_components(tally, 100_000.0, 5, &weights);
        assert_eq!(cost.total, 2000.0 + 1000.0 + 300.0 + 100_000.0 + 10.0);
    }

    #[test]
    fn int_dist_validates_and_samples() {
        let d = IntDist::new(vec![(2, 0.5), (4, 0.5)]).unwrap();
        assert_eq!(d.mean(), 3.0);
        assert_eq!(d.quantile(0.0), 2);
        assert_eq!(d.quantile(0.499), 2);
        assert_eq!(d.quantile(0.5), 4);
        assert_eq!(d.quantile(0.999), 4);
        assert!(IntDist::new(vec![(2, 0.5), (2, 0.5)]).is_err());
        assert!(IntDist::new(vec![(2, 0.4)]).is_err());
    }
}
