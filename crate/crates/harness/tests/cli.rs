use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn stereotest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stereotest")).args(args).output().unwrap()
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/failed_subjects_subcohort.csv")
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

#[test]
fn levels_tables() {
    let out = stereotest(&["levels", "--ppi", "264", "--distance", "3.0", "--json"]);
    assert!(out.status.success());
    let rounded: Vec<u64> =
        json(&out)["levels"].as_array().unwrap().iter().map(|l| l["arcsec_rounded"].as_u64().unwrap()).collect();
    assert_eq!(rounded, [7, 13, 20, 26, 33, 40, 46, 53, 60, 66]);

    let out = stereotest(&["levels", "--profile", "ipad-mini-326", "--distance", "0.5", "--json"]);
    assert_eq!(json(&out)["levels"][0]["arcsec_rounded"], 32);

    let text = stereotest(&["levels", "--ppi", "264", "--distance", "0.5"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("397"));

    let bad = stereotest(&["levels", "--ppi", "0", "--distance", "0.5"]);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("invalid display profile"));
    assert_eq!(stereotest(&["levels", "--distance", "0.5"]).status.code(), Some(2));
    assert_eq!(stereotest(&["levels", "--ppi", "264"]).status.code(), Some(2));
}

#[test]
fn render_is_reproducible_and_decodes() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.png");
    let b = dir.path().join("b.png");
    let args = |out: &Path| {
        vec!["render", "--ppi", "264", "--distance", "3.0", "--level", "4", "--orientation", "down", "--seed", "9", "--out"]
            .into_iter()
            .map(String::from)
            .chain([out.to_string_lossy().into_owned()])
            .collect::<Vec<_>>()
    };
    for path in [&a, &b] {
        let args = args(path);
        let out = stereotest(&args.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let decoded = stereotest(&["decode", "--input", a.to_str().unwrap(), "--ppi", "264", "--distance", "3.0"]);
    assert!(decoded.status.success());
    let report = json(&decoded);
    assert_eq!(report["dominant_lag"], 4);
    assert_eq!(report["orientation"]["orientation"], "down");
    assert_eq!(report["dot_px"], 12);
    assert_eq!(report["arcsec"].as_f64().unwrap().round(), 26.0);
}

#[test]
fn render_rejects_bad_levels() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x.png");
    let run = |level: &str| {
        stereotest(&["render", "--ppi", "264", "--distance", "0.5", "--level", level, "--out", out.to_str().unwrap()])
    };
    assert_eq!(run("11").status.code(), Some(2));
    assert_eq!(run("0").status.code(), Some(2));
    assert!(!out.exists());
    let orientation = stereotest(&["render", "--ppi", "264", "--distance", "0.5", "--level", "1", "--orientation", "diagonal", "--out", "y.png"]);
    assert_eq!(orientation.status.code(), Some(2));
}

#[test]
fn simulate_reports_outcomes() {
    let out = stereotest(&["simulate", "--observer", "deterministic:100", "--ppi", "264", "--distance", "0.5", "--runs", "4"]);
    assert!(out.status.success());
    let report = json(&out);
    assert_eq!(report["summary"]["outcomes"]["119"], 4);
    for s in report["sessions"].as_array().unwrap() {
        assert_eq!(s["outcome"], 119.0);
    }

    let out = stereotest(&["simulate", "--observer", "psychometric:100,10,0.02", "--ppi", "264", "--distance", "0.5", "--runs", "30"]);
    let report = json(&out);
    let total: u64 = report["summary"]["outcomes"].as_object().unwrap().values().map(|v| v.as_u64().unwrap()).sum();
    assert_eq!(total, 30);
    assert!(report["summary"]["mean_trials"].as_f64().unwrap() >= 2.0);

    let zero = stereotest(&["simulate", "--observer", "deterministic:100", "--ppi", "264", "--distance", "0.5", "--runs", "0"]);
    assert_eq!(zero.status.code(), Some(2));
    let junk = stereotest(&["simulate", "--observer", "oracle:1", "--ppi", "264", "--distance", "0.5"]);
    assert_eq!(junk.status.code(), Some(2));
    let lapse = stereotest(&["simulate", "--observer", "psychometric:100,10,0.9", "--ppi", "264", "--distance", "0.5"]);
    assert_eq!(lapse.status.code(), Some(2));
}

#[test]
fn analyze_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let json_path = dir.path().join("report.json");
    let out = stereotest(&["analyze", "--input", fixture().to_str().unwrap(), "--json-out", json_path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("18.5 [8.75 to 25.75]"), "{text}");

    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(&json_path).unwrap()).unwrap();
    let hd1 = report["groups"].as_array().unwrap().iter().find(|g| g["test"] == "HD" && g["day"] == 1).unwrap();
    assert_eq!(hd1["summary"]["median"], 18.5);
    assert_eq!(report["n_subjects"], 12);

    let as_json = stereotest(&["analyze", "--input", fixture().to_str().unwrap(), "--format", "json"]);
    assert_eq!(json(&as_json), report);
}

#[test]
fn analyze_duplicated_days() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("dup.csv");
    let mut csv = String::from("subject_id,test,day,value\n");
    let values = [("a", 7, 15), ("b", 20, 60), ("c", 33, 119), ("d", 46, 240), ("e", 60, 480)];
    for (id, far, near) in values {
        for day in [1, 2] {
            csv += &format!("{id},HD,{day},{far}\n{id},ST_far,{day},{far}\n{id},ST_near,{day},{near}\n{id},TNO,{day},{near}\n");
        }
    }
    std::fs::write(&path, csv).unwrap();
    let out = stereotest(&["analyze", "--input", path.to_str().unwrap(), "--format", "json"]);
    // Identical days leave no differences for the signed-rank test, which is
    // reported as a warning.
    assert_eq!(out.status.code(), Some(1));
    let report = json(&out);
    let kappas: Vec<f64> = report["comparisons"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["kind"] == "between_days")
        .map(|c| c["kappa"]["kappa"].as_f64().unwrap())
        .collect();
    assert_eq!(kappas.len(), 4);
    assert!(kappas.iter().all(|k| (k - 1.0).abs() < 1e-12), "{kappas:?}");
}

#[test]
fn analyze_rejects_malformed_rows() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.csv");
    std::fs::write(&path, "subject_id,test,day,value\n1,HD,1,7\n1,HD,2,seven\n").unwrap();
    let out = stereotest(&["analyze", "--input", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"), "{}", String::from_utf8_lossy(&out.stderr));
    let missing = stereotest(&["analyze", "--input", dir.path().join("none.csv").to_str().unwrap()]);
    assert_eq!(missing.status.code(), Some(2));
}
