//! Historical demand ingestion: CSV parsing, Sunday exclusion and
//! per-type series extraction.
//!
//! The canonical input is a plain CSV with header
//! `week,weekday,type1,type2,type3,type4`, weekday 1 = Monday through
//! 7 = Sunday. The clinic records demand by hand, so no richer source
//! is supported.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::domain::{DayDemand, PatientType};
use crate::error::{Error, Result};

pub const SUNDAY: u8 = 7;

/// One observed day of demand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DemandRecord {
    pub week: u32,
    /// 1 = Monday .. 7 = Sunday.
    pub weekday: u8,
    pub demand: DayDemand,
}

/// Chronologically ordered demand observations with unique
/// (week, weekday) keys.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct DemandHistory {
    records: Vec<DemandRecord>,
}

impl DemandHistory {
    pub fn new(records: Vec<DemandRecord>) -> Result<DemandHistory> {
        let mut seen = HashSet::new();
        for r in &records {
            if !(1..=7).contains(&r.weekday) {
                return Err(Error::Validation(format!(
                    "weekday {} out of range 1..7",
                    r.weekday
                )));
            }
            if !seen.insert((r.week, r.weekday)) {
                return Err(Error::Validation(format!(
                    "duplicate record for week {} weekday {}",
                    r.week, r.weekday
                )));
            }
        }
        Ok(DemandHistory { records })
    }

    pub fn records(&self) -> &[DemandRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn weeks(&self) -> Vec<u32> {
        let mut weeks: Vec<u32> = self.records.iter().map(|r| r.week).collect();
        weeks.sort_unstable();
        weeks.dedup();
        weeks
    }

    /// The six working days of one week, Monday through Saturday.
    /// Incomplete weeks are rejected.
    pub fn complete_week(&self, week: u32, days_per_week: usize) -> Result<Vec<DayDemand>> {
        let mut days: Vec<(u8, DayDemand)> = self
            .records
            .iter()
            .filter(|r| r.week == week && r.weekday != SUNDAY)
            .map(|r| (r.weekday, r.demand))
            .collect();
        days.sort_by_key(|&(d, _)| d);
        if days.len() != days_per_week {
            return Err(Error::Validation(format!(
                "week {week} has {} working days, expected {days_per_week}",
                days.len()
            )));
        }
        Ok(days.into_iter().map(|(_, d)| d).collect())
    }
}

/// Parse the demand CSV schema. Malformed rows report their line number;
/// an empty input yields an empty history.
pub fn parse_demand_csv(text: &str) -> Result<DemandHistory> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line() as usize),
            message: e.to_string(),
        })?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let parse_err = |message: String| Error::Parse { line, message };
        if row.len() != 6 {
            return Err(parse_err(format!("expected 6 fields, got {}", row.len())));
        }
        let field = |idx: usize| -> Result<u32> {
            let value = row[idx]
                .parse::<i64>()
                .map_err(|_| parse_err(format!("invalid count '{}'", &row[idx])))?;
            u32::try_from(value).map_err(|_| {
                Error::Validation(format!("negative count {value} at line {line}"))
            })
        };
        let week = field(0)?;
        let weekday = field(1)?;
        if !(1..=7).contains(&weekday) {
            return Err(parse_err(format!("weekday {weekday} out of range 1..7")));
        }
        let demand = DayDemand([field(2)?, field(3)?, field(4)?, field(5)?]);
        records.push(DemandRecord {
            week,
            weekday: weekday as u8,
            demand,
        });
    }
    DemandHistory::new(records)
}

/// Serialize back to the canonical CSV schema.
pub fn demand_to_csv(history: &DemandHistory) -> String {
    let mut out = String::from("week,weekday,type1,type2,type3,type4\n");
    for r in history.records() {
        let d = r.demand.0;
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.week, r.weekday, d[0], d[1], d[2], d[3]
        ));
    }
    out
}

/// Drop every Sunday record. Sundays serve only extreme emergencies and
/// are treated as outliers.
pub fn working_days(history: &DemandHistory) -> DemandHistory {
    DemandHistory {
        records: history
            .records
            .iter()
            .filter(|r| r.weekday != SUNDAY)
            .copied()
            .collect(),
    }
}

/// Chronological daily counts for one patient type.
pub fn series_for_type(history: &DemandHistory, t: PatientType) -> Vec<u32> {
    history.records.iter().map(|r| r.demand.get(t)).collect()
}

/// The eight-week case dataset shipped with the crate.
pub fn bundled_history() -> DemandHistory {
    parse_demand_csv(include_str!("../../../data/clinic_demand.csv"))
        .expect("bundled dataset is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_case_rows() {
        let h = parse_demand_csv(
            "week,weekday,type1,type2,type3,type4\n1,1,6,12,2,0\n8,6,9,8,2,0\n",
        )
        .unwrap();
        assert_eq!(h.records().len(), 2);
        assert_eq!(h.records()[0].week, 1);
        assert_eq!(h.records()[0].weekday, 1);
        assert_eq!(h.records()[0].demand, DayDemand([6, 12, 2, 0]));
        assert_eq!(h.records()[1].demand, DayDemand([9, 8, 2, 0]));
    }

    #[test]
    fn empty_input_is_empty_history() {
        let h = parse_demand_csv("week,weekday,type1,type2,type3,type4\n").unwrap();
        assert!(h.is_empty());
        assert!(parse_demand_csv("").unwrap().is_empty());
    }

    #[test]
    fn malformed_rows_carry_line_numbers() {
        let err = parse_demand_csv("week,weekday,type1,type2,type3,type4\n1,1,6,12,2\n")
            .unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = parse_demand_csv("week,weekday,type1,type2,type3,type4\n1,1,6,12,2,-1\n")
            .unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn sunday_exclusion_and_idempotence() {
        let h = bundled_history();
        assert_eq!(h.records().len(), 56);
        let wd = working_days(&h);
        assert_eq!(wd.records().len(), 48);
        assert!(wd.records().iter().all(|r| r.weekday != SUNDAY));
        assert_eq!(working_days(&wd), wd);
    }

    #[test]
    fn only_sundays_removes_everything() {
        let h = parse_demand_csv("week,weekday,type1,type2,type3,type4\n1,7,1,0,0,0\n").unwrap();
        assert!(working_days(&h).is_empty());
    }

    #[test]
    fn series_extraction_matches_case_data() {
        let wd = working_days(&bundled_history());
        let infected = series_for_type(&wd, PatientType::Infected);
        assert_eq!(&infected[..6], &[2, 2, 3, 2, 3, 5]);
        let chronic = series_for_type(&wd, PatientType::Chronic);
        assert!(chronic
            .chunks(6)
            .all(|w| w == [12, 8, 12, 8, 12, 8]));
        assert!(series_for_type(&DemandHistory::default(), PatientType::Acute).is_empty());
    }

    #[test]
    fn roundtrip_is_identity() {
        let h = bundled_history();
        assert_eq!(parse_demand_csv(&demand_to_csv(&h)).unwrap(), h);
    }

    #[test]
    fn incomplete_weeks_are_rejected() {
        let h = parse_demand_csv(
            "week,weekday,type1,type2,type3,type4\n1,1,6,12,2,0\n1,2,1,8,0,0\n",
        )
        .unwrap();
        assert!(h.complete_week(1, 6).is_err());
        assert!(h.complete_week(2, 6).is_err());
        let full = bundled_history();
        assert_eq!(full.complete_week(7, 6).unwrap().len(), 6);
    }
}
