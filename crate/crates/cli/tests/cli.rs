//! End-to-end tests of the `layercast` binary: exit codes, file outputs,
//! and the documented summary formats.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_layercast"))
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("layercast-cli-{tag}-{}", std::process::id()));
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_w1(dir: &Path) -> PathBuf {
    let path = dir.join("w1.json");
    fs::write(
        &path,
        r#"{
            "source_capacity": 2,
            "peers": [
                {"id": "p1", "capacity": 0, "max_layer": 2},
                {"id": "p2", "capacity": 0, "max_layer": 2},
                {"id": "p3", "capacity": 4, "max_layer": 1}
            ],
            "layer_rates": [1, 1]
        }"#,
    )
    .unwrap();
    path
}

fn write_w2(dir: &Path) -> PathBuf {
    let path = dir.join("w2.json");
    fs::write(
        &path,
        r#"{
            "source_capacity": 3,
            "peers": [
                {"id": "p1", "capacity": 0, "max_layer": 3},
                {"id": "p2", "capacity": 0, "max_layer": 3},
                {"id": "p3", "capacity": 3, "max_layer": 2},
                {"id": "p4", "capacity": 4, "max_layer": 1}
            ],
            "layer_rates": [1, 1, 1]
        }"#,
    )
    .unwrap();
    path
}

fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

#[test]
fn check_reports_boundary_feasibility() {
    let dir = temp_dir("check");
    let w1 = write_w1(&dir);
    let output = bin().arg("check").arg(&w1).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = stdout_of(&output);
    assert!(text.contains("\"feasible\": true"), "{text}");
    assert!(text.contains("\"slack\": \"0\""), "{text}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn check_reports_infeasibility_with_totals() {
    let dir = temp_dir("check-infeasible");
    let path = dir.join("weak.json");
    fs::write(
        &path,
        r#"{
            "source_capacity": 2,
            "peers": [
                {"id": "p1", "capacity": 0, "max_layer": 2},
                {"id": "p2", "capacity": 0, "max_layer": 2},
                {"id": "p3", "capacity": 3, "max_layer": 1}
            ],
            "layer_rates": [1, 1]
        }"#,
    )
    .unwrap();
    let output = bin().arg("check").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let text = stdout_of(&output);
    assert!(text.contains("\"required_total\": \"6\""), "{text}");
    assert!(text.contains("\"actual_total\": \"5\""), "{text}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn missing_file_is_an_error() {
    let output = bin().arg("check").arg("/no/such/file.json").output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_instance_is_an_error() {
    let dir = temp_dir("malformed");
    let path = dir.join("bad.json");
    fs::write(
        &path,
        r#"{"source_capacity": 1,
            "peers": [{"id": "p1", "capacity": 1, "max_layer": 3}],
            "layer_rates": [1]}"#,
    )
    .unwrap();
    let output = bin().arg("check").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn plan_then_verify_round_trips() {
    let dir = temp_dir("plan-verify");
    let w2 = write_w2(&dir);
    let plan_path = dir.join("w2-plan.json");
    let plan_out = bin()
        .arg("plan")
        .arg(&w2)
        .arg("--out")
        .arg(&plan_path)
        .output()
        .unwrap();
    assert_eq!(plan_out.status.code(), Some(0));
    let verify_out = bin().arg("verify").arg(&w2).arg(&plan_path).output().unwrap();
    assert_eq!(verify_out.status.code(), Some(0));
    let text = stdout_of(&verify_out);
    assert!(text.contains("\"ok\": true"), "{text}");
    assert!(text.contains("\"source\": \"3\""), "{text}");
    assert!(text.contains("\"p4\": \"4\""), "{text}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn plan_refuses_infeasible_instances() {
    let dir = temp_dir("plan-infeasible");
    let path = dir.join("starved.json");
    fs::write(
        &path,
        r#"{
            "source_capacity": 0,
            "peers": [{"id": "p1", "capacity": 5, "max_layer": 1}],
            "layer_rates": [1]
        }"#,
    )
    .unwrap();
    let output = bin().arg("plan").arg(&path).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout_of(&output).contains("\"feasible\": false"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn verify_rejects_a_tampered_plan() {
    let dir = temp_dir("verify-tampered");
    let w1 = write_w1(&dir);
    let plan_path = dir.join("w1-plan.json");
    bin()
        .arg("plan")
        .arg(&w1)
        .arg("--out")
        .arg(&plan_path)
        .output()
        .unwrap();
    let tampered = fs::read_to_string(&plan_path)
        .unwrap()
        .replacen("\"p2\"", "\"p1\"", 1);
    fs::write(&plan_path, tampered).unwrap();
    let output = bin().arg("verify").arg(&w1).arg(&plan_path).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn oracle_exit_codes_follow_the_verdict() {
    let dir = temp_dir("oracle");
    let w1 = write_w1(&dir);
    let output = bin().arg("oracle").arg(&w1).output().unwrap();
    assert_eq!(output.status.code(), Some(0));
    assert!(stdout_of(&output).contains("\"feasible\": true"));

    let starved = dir.join("starved.json");
    fs::write(
        &starved,
        r#"{
            "source_capacity": 2,
            "peers": [
                {"id": "p1", "capacity": 0, "max_layer": 2},
                {"id": "p2", "capacity": 0, "max_layer": 2},
                {"id": "p3", "capacity": 3, "max_layer": 1}
            ],
            "layer_rates": [1, 1]
        }"#,
    )
    .unwrap();
    let output = bin().arg("oracle").arg(&starved).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(stdout_of(&output).contains("\"feasible\": false"));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_agrees_on_two_hundred_seeded_instances() {
    let output = bin()
        .arg("compare")
        .arg("--seed")
        .arg("1")
        .arg("--count")
        .arg("200")
        .output()
        .unwrap();
    let text = stdout_of(&output);
    assert!(
        text.contains("200/200 agree, 0 plan failures"),
        "unexpected summary: {text}"
    );
    assert!(text.contains("seed: 1"), "{text}");
    assert_eq!(output.status.code(), Some(0));
}

#[test]
fn sweep_tabulates_the_w1_grid() {
    let dir = temp_dir("sweep");
    let w1 = write_w1(&dir);
    let out_path = dir.join("sweep.csv");
    let output = bin()
        .arg("sweep")
        .arg(&w1)
        .arg("--vary-a")
        .arg("1")
        .arg("--vary-b")
        .arg("2")
        .arg("--from")
        .arg("0")
        .arg("--to")
        .arg("2")
        .arg("--step")
        .arg("1/2")
        .arg("--out")
        .arg(&out_path)
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("L1,L2,feasible,required_total"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 25);
    assert!(rows.contains(&"1,1,true,6"), "rows: {rows:?}");
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn compare_output_is_reproducible() {
    let run = || {
        let output = bin()
            .arg("compare")
            .arg("--seed")
            .arg("7")
            .arg("--count")
            .arg("40")
            .arg("--max-denominator")
            .arg("2")
            .output()
            .unwrap();
        assert_eq!(output.status.code(), Some(0));
        stdout_of(&output)
    };
    assert_eq!(run(), run());
}

#[test]
fn sweep_emits_json_rows_on_request() {
    let dir = temp_dir("sweep-json");
    let w1 = write_w1(&dir);
    let output = bin()
        .arg("sweep")
        .arg(&w1)
        .arg("--vary-a")
        .arg("1")
        .arg("--vary-b")
        .arg("2")
        .arg("--from")
        .arg("0")
        .arg("--to")
        .arg("1")
        .arg("--step")
        .arg("1")
        .arg("--format")
        .arg("json")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout_of(&output)).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().any(|row| {
        row["rate_a"] == "1" && row["rate_b"] == "1" && row["feasible"] == true
    }));
    fs::remove_dir_all(&dir).ok();
}

#[test]
fn sweep_rejects_bad_layer_choices() {
    let dir = temp_dir("sweep-bad");
    let w1 = write_w1(&dir);
    let output = bin()
        .arg("sweep")
        .arg(&w1)
        .arg("--vary-a")
        .arg("1")
        .arg("--vary-b")
        .arg("1")
        .arg("--from")
        .arg("0")
        .arg("--to")
        .arg("1")
        .arg("--step")
        .arg("1")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    fs::remove_dir_all(&dir).ok();
}
