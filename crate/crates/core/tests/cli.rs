use std::fs;
use std::path::Path;

use wbshift::cli::{run, EXIT_INPUT, EXIT_IO, EXIT_OK};
use wbshift::report::parse_real;

fn run_to(dir: &Path, name: &str, args: &[&str]) -> (i32, String) {
    let out = dir.join(name);
    let mut argv = vec!["wbshift"];
    argv.extend_from_slice(args);
    argv.extend_from_slice(&["--out", out.to_str().unwrap()]);
    let code = run(argv);
    (code, fs::read_to_string(&out).unwrap_or_default())
}

#[test]
fn analyze_reports_supercyclic_witness() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "a.json", &["analyze", "--family", "beauzamy(1,2)", "--p", "2"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let witnessed: Vec<&str> = v["summary"]["witnessed"].as_array().unwrap().iter().map(|x| x.as_str().unwrap()).collect();
    assert!(witnessed.contains(&"salas_supercyclic"));
    let first = text.find("\"reports\"").unwrap();
    let positions: Vec<usize> = ["criterion", "verdict", "witness", "value_log", "tolerance_log", "horizon"]
        .iter()
        .map(|k| first + text[first..].find(&format!("\"{k}\"")).unwrap())
        .collect();
    assert!(positions.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn analyze_unweighted_on_l1_is_undetermined() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "a.json", &["analyze", "--family", "constant(1)", "--p", "1"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    for r in v["reports"].as_array().unwrap() {
        let c = r["criterion"].as_str().unwrap();
        if ["salas_hypercyclic", "salas_supercyclic", "shkarin_a123", "quasinilpotent_b123"].contains(&c) {
            assert_eq!(r["verdict"], "undetermined", "{c}");
        }
    }
}

#[test]
fn csv_and_json_carry_identical_values() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["analyze", "--family", "polydecay(1,2,0.75,2)", "--m-max", "8", "--format"];
    let (_, json) = run_to(dir.path(), "a.json", &[&args[..], &["json"]].concat());
    let (_, csv) = run_to(dir.path(), "a.csv", &[&args[..], &["csv"]].concat());
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    let reports = v["reports"].as_array().unwrap();
    let mut rows = csv::Reader::from_reader(csv.as_bytes());
    assert_eq!(
        rows.headers().unwrap().iter().collect::<Vec<_>>(),
        ["family", "p", "criterion", "verdict", "value_log", "witness_params", "horizon"]
    );
    let rows: Vec<csv::StringRecord> = rows.records().map(|r| r.unwrap()).filter(|r| &r[2] != "summary").collect();
    assert_eq!(rows.len(), reports.len());
    for (row, r) in rows.iter().zip(reports) {
        assert_eq!(&row[2], r["criterion"].as_str().unwrap());
        let from_json = match &r["value_log"] {
            serde_json::Value::String(s) => parse_real(s).unwrap(),
            x => x.as_f64().unwrap(),
        };
        assert_eq!(parse_real(&row[4]).unwrap().to_bits(), from_json.to_bits());
    }
}

#[test]
fn classify_output_is_independent_of_workers() {
    let dir = tempfile::tempdir().unwrap();
    let base = ["classify", "--family", "beauzamy(2,1)", "--m-max", "8", "--format", "csv", "--workers"];
    let (c1, one) = run_to(dir.path(), "1.csv", &[&base[..], &["1"]].concat());
    let (c8, eight) = run_to(dir.path(), "8.csv", &[&base[..], &["8"]].concat());
    assert_eq!((c1, c8), (EXIT_OK, EXIT_OK));
    assert!(!one.is_empty());
    assert_eq!(one, eight);
}

#[test]
fn approximate_paths() {
    let dir = tempfile::tempdir().unwrap();
    let (code, text) = run_to(dir.path(), "a.json", &["approximate", "--family", "supexp(1)", "--k", "1", "--n", "2", "--eps", "0.1"]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "found");
    assert_eq!((v["j"].as_i64(), v["m"].as_i64()), (Some(2), Some(13)));
    assert!(v["certificate"].as_object().unwrap().values().all(|b| b == true));

    let (_, text) = run_to(dir.path(), "b.json", &["approximate", "--family", "constant(1)", "--k", "1", "--n", "2", "--eps", "0.1"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["status"], "not_found");
    assert!(v["best_bound_log"].as_f64().unwrap() > 0.1f64.ln());

    let (_, text) = run_to(dir.path(), "c.json", &["approximate", "--family", "constant(1)", "--k", "2", "--n", "1", "--eps", "0.1"]);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["residual_direct_log"], "-inf");
    assert_eq!(v["poly"]["terms"][0][0], 1);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("bad.json");
    fs::write(&spec, r#"{"family":"beauzamy","a":1,"bb":2}"#).unwrap();
    let (code, _) = run_to(dir.path(), "x.json", &["analyze", "--spec-file", spec.to_str().unwrap()]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _) = run_to(dir.path(), "x.json", &["approximate", "--family", "supexp(1)", "--k", "0", "--n", "2", "--eps", "0.1"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _) = run_to(dir.path(), "x.json", &["approximate", "--family", "supexp(1)", "--k", "1", "--n", "2", "--eps=-1"]);
    assert_eq!(code, EXIT_INPUT);
    let (code, _) = run_to(dir.path(), "x.json", &["classify", "--family", "nonsense"]);
    assert_eq!(code, EXIT_INPUT);
    let missing = dir.path().join("missing").join("out.json");
    let code = run(["wbshift", "families", "--out", missing.to_str().unwrap()]);
    assert_eq!(code, EXIT_IO);
}

#[test]
fn spec_file_matches_inline_family() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("w.json");
    fs::write(&spec, r#"{"family":"beauzamy","a":1,"b":2}"#).unwrap();
    let (_, from_file) = run_to(dir.path(), "f.csv", &["classify", "--spec-file", spec.to_str().unwrap(), "--m-max", "4", "--format", "csv"]);
    let (_, inline) = run_to(dir.path(), "i.csv", &["classify", "--family", "beauzamy(1,2)", "--m-max", "4", "--format", "csv"]);
    assert_eq!(from_file, inline);
}
