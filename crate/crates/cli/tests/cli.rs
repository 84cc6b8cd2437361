//! End-to-end tests of the `hemoplan` binary.

use std::path::Path;
use std::process::{Command, Output};

fn hemoplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hemoplan"))
        .args(args)
        .env_remove("HEMOPLAN_DATA")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn realized_plan_week_seven_three_unit() {
    let out = hemoplan(&["plan", "--policy", "three-unit", "--mode", "realized", "--week", "7"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("realized cost = 36"), "{text}");
    assert!(text.contains("realized overlaps = (0, 0, 0)"), "{text}");
}

#[test]
fn realized_plan_week_one_two_unit() {
    let out = hemoplan(&["plan", "--policy", "two-unit", "--mode", "realized", "--week", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("allocation = (11, 3)"), "{text}");
    assert!(text.contains("realized cost = 4040"), "{text}");
}

#[test]
fn stochastic_plan_is_replayable_and_writes_json() {
    let dir = std::env::temp_dir().join("hemoplan-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let report = dir.join("plan.json");
    let args = [
        "plan",
        "--policy",
        "three-unit",
        "--mode",
        "stochastic",
        "--week",
        "6",
        "--pi",
        "80",
        "--seed",
        "1",
        "--out",
        report.to_str().unwrap(),
    ];
    let first = hemoplan(&args);
    let second = hemoplan(&args);
    assert!(first.status.success());
    assert_eq!(stdout(&first), stdout(&second));
    assert!(stdout(&first).contains("generator=chacha8 seed=1"));
    assert!(stdout(&first).contains("expected cost ="));

    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(json["meta"]["seed"], 1);
    assert_eq!(json["week"], 6);
    assert!(json["outcome"]["allocation"]["machines"][0].as_u64().unwrap() >= 8);
}

#[test]
fn reproduce_tables_four_and_six_pass() {
    let out = hemoplan(&["reproduce", "--table", "4"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("total,79,50,69,136336"), "{text}");
    assert!(text.contains(",45886,66"), "{text}");

    let out = hemoplan(&["reproduce", "--table", "6"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("62362"), "{text}");
}

#[test]
fn reproduce_rejects_unknown_table() {
    let out = hemoplan(&["reproduce", "--table", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reproduce_fails_on_altered_weights() {
    // Raising the session fee changes every objective, so the exact
    // checks must fail with exit code 1.
    let out = hemoplan(&["reproduce", "--table", "6", "--epsilon", "4"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("reproduction check failed"));
}

#[test]
fn forecast_emits_interval_rows() {
    let out = hemoplan(&["forecast", "--week", "8"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("patient_type,smoothing,point_forecast"), "{text}");
    // Three uncertain types at two interval levels.
    assert_eq!(text.lines().filter(|l| l.starts_with(['1', '3', '4'])).count(), 6);
}

#[test]
fn forecast_without_training_data_fails() {
    let out = hemoplan(&["forecast", "--week", "1"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_data_file_is_a_validation_error() {
    let out = hemoplan(&["--data", "/nonexistent.csv", "forecast", "--week", "8"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn render_prints_the_schedule_grid() {
    let out = hemoplan(&[
        "render",
        "--policy",
        "three-unit",
        "--week",
        "5",
        "--day",
        "1",
        "--alloc",
        "8,4,2",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("standard"), "{text}");
    assert!(text.contains("Daily penalty = 14,612"), "{text}");

    let out = hemoplan(&["render", "--policy", "three-unit", "--week", "5", "--day", "9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_and_flags_override_defaults() {
    let dir = std::env::temp_dir().join("hemoplan-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config: &Path = &dir.join("config.json");
    std::fs::write(config, r#"{ "epsilon": 0.0 }"#).unwrap();

    // Week 7's entire objective is session fees, so zeroing epsilon
    // zeroes the cost.
    let out = hemoplan(&[
        "--config",
        config.to_str().unwrap(),
        "plan",
        "--policy",
        "three-unit",
        "--mode",
        "realized",
        "--week",
        "7",
    ]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("realized cost = 0"), "{}", stdout(&out));

    // A flag wins over the file.
    let out = hemoplan(&[
        "--config",
        config.to_str().unwrap(),
        "--epsilon",
        "2",
        "plan",
        "--policy",
        "three-unit",
        "--mode",
        "realized",
        "--week",
        "7",
    ]);
    assert!(stdout(&out).contains("realized cost = 36"), "{}", stdout(&out));

    let bad = dir.join("bad.json");
    std::fs::write(&bad, r#"{ "unknown_field": 1 }"#).unwrap();
    let out = hemoplan(&[
        "--config",
        bad.to_str().unwrap(),
        "plan",
        "--policy",
        "three-unit",
        "--mode",
        "realized",
        "--week",
        "7",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn data_flag_reads_a_custom_history() {
    let dir = std::env::temp_dir().join("hemoplan-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let data = dir.join("tiny.csv");
    let mut csv = String::from("week,day,acute,chronic,infected,suspected\n");
    for day in 1..=6 {
        let chronic = if day % 2 == 1 { 12 } else { 8 };
        csv.push_str(&format!("1,{day},2,{chronic},1,0\n"));
    }
    std::fs::write(&data, csv).unwrap();
    let out = hemoplan(&[
        "--data",
        data.to_str().unwrap(),
        "plan",
        "--policy",
        "three-unit",
        "--mode",
        "realized",
        "--week",
        "1",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("allocation ="));
}
