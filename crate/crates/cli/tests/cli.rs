use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
        .join(name)
}

fn awplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_awplan"))
        .args(args)
        .env("AWPLAN_NO_COLOR", "1")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn plan_rm_mi2(out: &Path, extra: &[&str]) -> Output {
    let (topo, demands, calib) = (
        fixture("garr.topo.json"),
        fixture("rm-mi2.demands.json"),
        fixture("table1.calib.json"),
    );
    let mut args = vec![
        "plan",
        "--topology",
        s(&topo),
        "--demands",
        s(&demands),
        "--calib",
        s(&calib),
        "--out",
        s(out),
    ];
    args.extend_from_slice(extra);
    awplan(&args)
}

#[test]
fn estimate_prints_value_and_class() {
    let calib = fixture("table1.calib.json");
    let o = awplan(&[
        "estimate",
        "--distance",
        "345",
        "--modulation",
        "qpsk",
        "--neighbors",
        "none",
        "--calib",
        s(&calib),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "13.77 Ok\n");

    let o = awplan(&[
        "estimate",
        "--distance",
        "345",
        "--modulation",
        "bpsk",
        "--neighbors",
        "2,3",
    ]);
    assert_eq!(stdout(&o), "16.15 Ok\n");
}

#[test]
fn plan_chooses_dedicated_qpsk_and_validates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("rm-mi2.plan.json");
    let o = plan_rm_mi2(&out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let plan: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let chosen = &plan[0]["chosen"];
    assert_eq!(chosen["strategy"], "DedicatedPartition");
    assert_eq!(chosen["capacity_gbps"], 450.0);
    assert_eq!(chosen["active_carriers"], 9);

    let v = awplan(&["validate", s(&out)]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
}

#[test]
fn bare_plan_uses_shipped_scenario() {
    let o = awplan(&["plan"]);
    assert_eq!(o.status.code(), Some(0));
    let plan: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(plan[0]["chosen"]["capacity_gbps"], 450.0);
    assert!(stderr(&o).contains("450 Gbps"));
}

#[test]
fn outputs_are_byte_reproducible() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (dir.path().join("a.plan.json"), dir.path().join("b.plan.json"));
    plan_rm_mi2(&a, &[]);
    plan_rm_mi2(&b, &[]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let x = awplan(&["export-plot", "--format", "json"]);
    let y = awplan(&["export-plot", "--format", "json"]);
    assert_eq!(x.stdout, y.stdout);
}

#[test]
fn stamped_output_still_validates() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("s.plan.json");
    let o = plan_rm_mi2(&out, &["--stamp"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"stamp\"") && text.contains("created_unix_s"));
    assert_eq!(awplan(&["validate", s(&out)]).status.code(), Some(0));
}

#[test]
fn missing_input_names_the_path() {
    let o = awplan(&["plan", "--topology", "nowhere/garr.topo.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere/garr.topo.json"));
    assert!(!stderr(&o).contains("panicked"));
}

#[test]
fn json_errors_are_machine_readable() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.topo.json");
    let text = std::fs::read_to_string(fixture("garr.topo.json")).unwrap();
    std::fs::write(&bad, &text[..300]).unwrap();
    let o = awplan(&["--json-errors", "validate", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let line: serde_json::Value = serde_json::from_str(stderr(&o).lines().next().unwrap()).unwrap();
    assert_eq!(line["level"], "error");
    assert!(line["location"]["line"].as_u64().unwrap() > 1);
}

#[test]
fn no_color_env_disables_escapes() {
    let o = awplan(&["plan", "--topology", "missing.topo.json"]);
    assert!(!stderr(&o).contains('\x1b'));
}

#[test]
fn unreachable_demand_exits_one_and_still_validates() {
    let dir = TempDir::new().unwrap();
    let topo = dir.path().join("long.topo.json");
    std::fs::write(
        &topo,
        r#"{"nodes": [{"id": "A", "name": "A", "has_roadm": true}, {"id": "B", "name": "B", "has_roadm": true}],
            "spans": [{"from": "A", "to": "B", "length_km": 5000, "attenuation_db": 1000, "amplifier": "EDFA",
                       "dcm_present": true, "has_inline_ola": false}]}"#,
    )
    .unwrap();
    let demands = dir.path().join("ab.demands.json");
    std::fs::write(&demands, r#"[{"path": ["A", "B"], "required_capacity_gbps": 100}]"#).unwrap();
    let out = dir.path().join("ab.plan.json");
    let o = awplan(&[
        "plan",
        "--topology",
        s(&topo),
        "--demands",
        s(&demands),
        "--out",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    assert!(stderr(&o).contains("no feasible option"));
    let v = awplan(&["validate", s(&out)]);
    assert_eq!(v.status.code(), Some(0), "{}", stderr(&v));
}

#[test]
fn threshold_overrides_are_recorded_and_validated() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("strict.plan.json");
    let o = plan_rm_mi2(&out, &["--design-min-db", "12"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("design threshold"));
    assert_eq!(awplan(&["validate", s(&out)]).status.code(), Some(0));
}

#[test]
fn out_of_bounds_override_is_rejected() {
    let dir = TempDir::new().unwrap();
    let o = plan_rm_mi2(&dir.path().join("x.plan.json"), &["--edge-carrier-sacrifice", "3"]);
    assert_eq!(o.status.code(), Some(2));
    let o = plan_rm_mi2(
        &dir.path().join("x.plan.json"),
        &["--hard-min-db", "9", "--design-min-db", "8"],
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn tampered_plan_fails_validation() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("t.plan.json");
    plan_rm_mi2(&out, &[]);
    let text = std::fs::read_to_string(&out)
        .unwrap()
        .replacen("\"value_db\": 11.44", "\"value_db\": 6.0", 1);
    std::fs::write(&out, text).unwrap();
    let v = awplan(&["validate", s(&out)]);
    assert_eq!(v.status.code(), Some(2));
    assert!(stderr(&v).contains("Q_BELOW_HARD_MIN"));
}

#[test]
fn calibrate_then_plot_from_model() {
    let dir = TempDir::new().unwrap();
    let model = dir.path().join("fit.model.json");
    assert_eq!(awplan(&["calibrate", "--out", s(&model)]).status.code(), Some(0));
    assert_eq!(awplan(&["validate", s(&model)]).status.code(), Some(0));
    let o = awplan(&["export-plot", "--model", s(&model), "--distances", "1131,345"]);
    assert_eq!(stdout(&o), "distance_km,q_db\n345.0000,13.7700\n1131.0000,11.4400\n");
}

#[test]
fn allocate_places_requests() {
    let dir = TempDir::new().unwrap();
    let requests = dir.path().join("r.requests.json");
    std::fs::write(
        &requests,
        r#"[{"id": "a", "kind": "native", "bitrate_gbps": 10},
            {"id": "s", "kind": "superchannel", "pair_modulations": ["QPSK","QPSK","QPSK","QPSK","QPSK"], "guard_band_slots": 2}]"#,
    )
    .unwrap();
    let grid = dir.path().join("empty.grid.json");
    std::fs::write(&grid, r#"{"band": {"slot_width_ghz": 25, "slot_count": 160, "native_channel_width_slots": 2, "superchannel_width_slots": 8},
            "natives": [], "superchannels": [], "partitions": []}"#)
        .unwrap();
    let o = awplan(&["allocate", "--grid", s(&grid), "--requests", s(&requests)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let alloc: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(alloc["assignments"][0]["start_slot"], 0);
    assert_eq!(alloc["assignments"][1]["start_slot"], 4);
}

#[test]
fn equalize_reports_failing_nodes() {
    let dir = TempDir::new().unwrap();
    let readings = dir.path().join("n.readings.json");
    std::fs::write(
        &readings,
        r#"[{"node": "BO1", "readings": [{"channel_ref": "h001", "power_dbm": -3.5}, {"channel_ref": "h002", "power_dbm": -3.9}]},
            {"node": "MI1", "readings": [{"channel_ref": "h001", "power_dbm": -10.0}]}]"#,
    )
    .unwrap();
    assert_eq!(awplan(&["validate", s(&readings)]).status.code(), Some(0));
    let o = awplan(&["equalize", "--readings", s(&readings), "--target-dbm", "-4"]);
    assert_eq!(o.status.code(), Some(1));
    let out: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(out["summary"]["failing_nodes"], serde_json::json!(["MI1"]));
    assert_eq!(out["results"][0]["result"]["settings"][0]["attenuation_db"], 0.5);
}
