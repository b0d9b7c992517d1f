//! The bindings are plain functions on native targets; exercise them
//! host-side so the demo surface stays correct without a browser.

use cqmorph_wasm::{
    counterexample_report, decide_instance, divergence_table, region_mask, scan_instance,
};

const INSTANCE: &str = r#"{
    "dim": 2,
    "p0": [0.7, 0.3],
    "p1": [0.5, 0.5],
    "sigma0": [[[0.7, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.3, 0.0]]],
    "sigma1": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]]
}"#;

#[test]
fn report_carries_the_separation_story() {
    let v: serde_json::Value =
        serde_json::from_str(&counterexample_report(0.1, 0.3)).unwrap();
    assert!(v.get("error").is_none(), "{v}");
    assert!(v["b_star"].as_f64().unwrap() > 0.6);
    assert_eq!(v["majorization"], "infeasible");
    assert_eq!(v["lp"], "infeasible");
    assert_eq!(v["scan_violations"], 0);
    assert_eq!(v["hexagon"].as_array().unwrap().len(), 6);
    assert!(v["curve"].as_array().unwrap().len() > 90);
    let sep = v["separating_point"]["b"].as_f64().unwrap();
    assert!(sep > 0.6 && sep < v["b_star"].as_f64().unwrap());
}

#[test]
fn report_rejects_invalid_triples() {
    let v: serde_json::Value = serde_json::from_str(&counterexample_report(0.4, 0.3)).unwrap();
    assert!(v["error"].as_str().unwrap().contains("triple"));
}

#[test]
fn mask_classes_partition_the_square() {
    let w = 64;
    let mask = region_mask(0.1, 0.3, w, w, 12);
    assert_eq!(mask.len(), (w * w) as usize);
    let count = |c: u8| mask.iter().filter(|&&v| v == c).count();
    // all four classes present for the default triple
    for class in 0..4 {
        assert!(count(class) > 0, "class {class} missing");
    }
    // top-right corner is outside the simplex
    assert_eq!(mask[(w - 1) as usize], 0);
    // the gap region sits above the hexagon: find any class-2 pixel and
    // check some class-3 pixel lies below it in the same column
    let gap_idx = mask.iter().position(|&v| v == 2).unwrap();
    let col = gap_idx % w as usize;
    let below = (gap_idx / w as usize..w as usize).any(|row| mask[row * w as usize + col] == 3);
    assert!(below);

    assert!(region_mask(0.5, 0.4, 8, 8, 4).is_empty());
}

#[test]
fn divergence_rows_match_the_hand_value() {
    let v: serde_json::Value =
        serde_json::from_str(&divergence_table(INSTANCE, "power:1,resolvent:1")).unwrap();
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0]["classical"], "-1");
    let q: f64 = rows[1]["quantum"].as_str().unwrap().parse().unwrap();
    assert!((q - 0.5208333333333334).abs() < 1e-12);

    let err: serde_json::Value =
        serde_json::from_str(&divergence_table(INSTANCE, "power4")).unwrap();
    assert!(err["error"].as_str().unwrap().contains("operator convex"));
}

#[test]
fn decide_and_scan_agree_with_the_cli_semantics() {
    let report: serde_json::Value = serde_json::from_str(&decide_instance(INSTANCE)).unwrap();
    assert_eq!(report["status"], "feasible");

    let scan: serde_json::Value = serde_json::from_str(&scan_instance(INSTANCE)).unwrap();
    assert_eq!(scan["violations"], 0);

    let bad: serde_json::Value = serde_json::from_str(&decide_instance("{ nope }")).unwrap();
    assert!(bad["error"].as_str().unwrap().contains("line"));
}
