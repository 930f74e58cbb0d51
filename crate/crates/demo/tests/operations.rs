use confex_demo::{bias_curve, bias_curve_json, explore, explore_json, subgroups, subgroups_json};
use serde_json::Value;

#[test]
fn explore_finds_planted_confounders() {
    let r = explore_json(r#"{"n": 4000, "seed": 3}"#).unwrap();
    let mut sel = r.selected.clone();
    sel.sort();
    assert_eq!(sel, ["Z1", "Z2"]);
    assert!(r.after < r.before);
    assert_eq!(r.groups.len(), 5);
    assert_eq!(r.groups.iter().map(|g| g.2).sum::<usize>(), 4000);
}

#[test]
fn explore_with_missing_values_weights_z2() {
    let r = explore_json(r#"{"n": 6000, "missing": 0.3, "seed": 5}"#).unwrap();
    assert!(r.selected.iter().any(|s| s == "Z2"));
}

#[test]
fn bias_curve_mm_is_closer_than_plugin() {
    let c = bias_curve_json(r#"{"symbols": 8, "sizes": [16, 64, 256], "trials": 100}"#).unwrap();
    assert_eq!(c.true_entropy, 3.0);
    for p in &c.points {
        assert!(p.plugin < c.true_entropy);
        assert!((c.true_entropy - p.miller_madow).abs() < c.true_entropy - p.plugin, "n={}", p.n);
    }
    let errs: Vec<f64> = c.points.iter().map(|p| c.true_entropy - p.plugin).collect();
    assert!(errs.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn subgroups_surface_rogue_region() {
    let r = subgroups_json(r#"{"rogue": 1}"#).unwrap();
    let top = &r.subgroups[0];
    assert_eq!(top.predicates.len(), 1);
    assert_eq!(top.predicates[0].attr, "Region");
    assert_eq!(top.predicates[0].value, "B");
    let none = subgroups_json(r#"{"tau": 1e9}"#).unwrap();
    assert!(none.subgroups.is_empty());
}

#[test]
fn string_bindings_report_errors_as_json() {
    for out in [
        explore("{\"n\": 0}"),
        explore("not json"),
        bias_curve("{\"symbols\": 1}"),
        subgroups("{\"rogue\": 9}"),
    ] {
        let v: Value = serde_json::from_str(&out).unwrap();
        assert!(v["error"].is_string(), "{out}");
    }
    let v: Value = serde_json::from_str(&explore("")).unwrap();
    assert!(v["selected"].is_array());
}
