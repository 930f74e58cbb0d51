use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use confex_core::acquire::{Binding, KgCache, DBPEDIA_RESOURCE};
use confex_core::synth::Planted;
use serde_json::Value;
use tempfile::TempDir;

const CODED: &str = "O,T,Z1,Z2,D1,D2,D3,D4,D5,D6";

fn confex(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_confex"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "exit {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr_error(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().expect("stderr has an error line");
    serde_json::from_str(line).expect("error is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Planted fixture plus a unique row id; in region `r3` the outcome copies
/// the exposure, so the confounders do not explain it there.
fn write_fixture(dir: &Path, stratified: bool) -> (PathBuf, PathBuf) {
    let table = Planted {
        n: 4000,
        seed: 11,
        ..Default::default()
    }
    .table();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap();
    let mut csv = format!("{header},RowId,Region\n");
    for (i, line) in lines.enumerate() {
        let region = i % 4;
        let mut cells: Vec<String> = line.split(',').map(str::to_owned).collect();
        if stratified && region == 3 {
            cells[0] = cells[1].clone();
        }
        csv.push_str(&format!("{},row{i:05},r{region}\n", cells.join(",")));
    }
    let data = dir.join("data.csv");
    fs::write(&data, csv).unwrap();
    let query = dir.join("query.json");
    fs::write(&query, r#"{"outcome":"O","exposure":"T","aggregate":"avg"}"#).unwrap();
    (data, query)
}

fn explain(data: &Path, query: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "explain",
        "--data",
        path(data),
        "--query",
        path(query),
        "--categorical",
        CODED,
        "--k",
        "3",
    ];
    args.extend_from_slice(extra);
    confex(&args)
}

fn selected(report: &Value) -> Vec<String> {
    let mut s: Vec<String> = report["explanation"]["selected"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_str().unwrap().to_owned())
        .collect();
    s.sort();
    s
}

#[test]
fn explain_planted_fixture_end_to_end() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let first = stdout_json(&explain(&data, &query, &[]));
    assert_eq!(selected(&first), ["Z1", "Z2"]);
    assert_eq!(first["header"]["tool"], "confex");
    assert_eq!(first["header"]["inputs"].as_array().unwrap().len(), 2);

    let mut second = stdout_json(&explain(&data, &query, &[]));
    second["header"]["generated_at_unix"] = first["header"]["generated_at_unix"].clone();
    assert_eq!(first, second);
}

#[test]
fn explain_writes_report_file_and_profile() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let out_path = dir.path().join("report.json");
    let out = explain(&data, &query, &["--out", path(&out_path), "--profile"]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let stderr = String::from_utf8_lossy(&out.stderr);
    for stage in ["ingest", "aggregate", "prune-offline", "prune-online", "mcimr", "total"] {
        assert!(stderr.contains(&format!("profile {stage}")), "{stderr}");
    }
    let report: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert!(report["profile"]["stages"].as_array().unwrap().len() >= 5);
}

#[test]
fn missing_data_file_is_io_error() {
    let dir = TempDir::new().unwrap();
    let (_, query) = write_fixture(dir.path(), false);
    let out = explain(&dir.path().join("absent.csv"), &query, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["kind"], "io");
}

#[test]
fn zero_k_is_config_error() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let out = confex(&["explain", "--data", path(&data), "--query", path(&query), "--k", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["kind"], "config");
}

#[test]
fn unknown_flag_is_usage_error() {
    let out = confex(&["explain", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
    let out = confex(&["acquire", "--data", "x.csv", "--key-column", "k", "--out", "y.csv", "--hops", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn prune_report_flags_row_id() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let report = stdout_json(&confex(&[
        "prune-report",
        "--data",
        path(&data),
        "--query",
        path(&query),
        "--categorical",
        CODED,
    ]));
    let dropped = report["dropped"].as_array().unwrap();
    let row_id = dropped
        .iter()
        .find(|p| p["column"] == "RowId")
        .expect("RowId is pruned");
    assert_eq!(row_id["rule"], "high-entropy");
    let kept: Vec<&str> = report["kept"].as_array().unwrap().iter().map(|v| v.as_str().unwrap()).collect();
    assert!(kept.contains(&"Z1") && kept.contains(&"Z2"), "{kept:?}");
}

fn subgroups(data: &Path, report: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        "subgroups",
        "--data",
        path(data),
        "--explanation",
        path(report),
        "--categorical",
        CODED,
    ];
    args.extend_from_slice(extra);
    confex(&args)
}

#[test]
fn subgroups_surface_planted_stratum() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), true);
    let report = dir.path().join("report.json");
    let out = explain(&data, &query, &["--out", path(&report)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let found = stdout_json(&subgroups(&data, &report, &["--refinable", "Region,D1,D2", "--k", "3"]));
    let top = &found.as_array().unwrap()[0];
    assert_eq!(top["predicates"][0]["attr"], "Region");
    assert_eq!(top["predicates"][0]["value"], "r3");
    assert_eq!(top["predicates"].as_array().unwrap().len(), 1);

    let none = stdout_json(&subgroups(&data, &report, &["--tau", "inf"]));
    assert_eq!(none, Value::Array(Vec::new()));
}

#[test]
fn subgroups_reject_report_from_other_data() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let report = dir.path().join("report.json");
    assert!(explain(&data, &query, &["--out", path(&report)]).status.success());

    let other = dir.path().join("other.csv");
    let mut text = fs::read_to_string(&data).unwrap();
    text.push_str("0,0,0,0,0,0,0,0,0,0,extra,r0\n");
    fs::write(&other, text).unwrap();
    let out = subgroups(&other, &report, &[]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_error(&out)["error"]["kind"], "data");
}

#[test]
fn acquire_from_cache_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let cache_dir = dir.path().join("cache");
    let cache = KgCache::new(&cache_dir);
    let iri = |s: &str| format!("{DBPEDIA_RESOURCE}{s}");
    let onto = |s: &str| format!("http://dbpedia.org/ontology/{s}");
    cache
        .store(
            &iri("Paris"),
            1,
            &[
                Binding::literal(onto("populationTotal"), "2100000"),
                Binding::iri(onto("country"), iri("France")),
            ],
        )
        .unwrap();
    cache
        .store(
            &iri("New_York_City"),
            1,
            &[
                Binding::literal(onto("populationTotal"), "8300000"),
                Binding::literal(onto("populationTotal"), "8400000"),
                Binding::iri(onto("country"), iri("United_States")),
            ],
        )
        .unwrap();
    cache
        .store(&iri("France"), 2, &[Binding::literal(onto("currency"), "Euro")])
        .unwrap();
    cache
        .store(&iri("United_States"), 2, &[Binding::literal(onto("currency"), "Dollar")])
        .unwrap();

    let data = dir.path().join("cities.csv");
    fs::write(&data, "city,delay\nParis,3\nNew York City,5\nParis,4\nAtlantis,1\n").unwrap();
    let run = |out: &Path, diag: &Path| {
        confex(&[
            "acquire",
            "--data",
            path(&data),
            "--key-column",
            "city",
            "--hops",
            "2",
            "--offline",
            "--cache",
            path(&cache_dir),
            "--agg-spec",
            r#"{"tags":{"populationTotal":"max"},"default":"first"}"#,
            "--diagnostics",
            path(diag),
            "--out",
            path(out),
        ])
    };
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let diag = dir.path().join("diag.json");
    for p in [&a, &b] {
        let out = run(p, &diag);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let first = fs::read_to_string(&a).unwrap();
    assert_eq!(first, fs::read_to_string(&b).unwrap());
    assert_eq!(
        first,
        "city,country,country.currency,populationTotal\n\
         New York City,United_States,Dollar,8400000\n\
         Paris,France,Euro,2100000\n"
    );
    let diags: Value = serde_json::from_str(&fs::read_to_string(&diag).unwrap()).unwrap();
    let atlantis = diags
        .as_array()
        .unwrap()
        .iter()
        .find(|d| d["label"] == "Atlantis")
        .unwrap();
    assert_eq!(atlantis["status"], "not-cached");
}

#[test]
fn acquired_attributes_join_into_explain() {
    let dir = TempDir::new().unwrap();
    let (data, query) = write_fixture(dir.path(), false);
    let attrs = dir.path().join("regions.csv");
    fs::write(&attrs, "Region,Climate\nr0,wet\nr1,dry\nr2,wet\nr3,dry\n").unwrap();
    let report = stdout_json(&explain(&data, &query, &["--attrs", path(&attrs)]));
    assert_eq!(selected(&report), ["Z1", "Z2"]);
    assert_eq!(report["header"]["inputs"].as_array().unwrap().len(), 3);
}
