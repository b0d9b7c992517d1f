//! Browser demo bindings.
//!
//! Three operations back the static page in `www/`:
//!
//! - [`counterexample_report`]: the full three-point sweep for a chosen
//!   triple, as JSON (hexagon, curve samples, infimum, separating point,
//!   oracle verdicts).
//! - [`region_mask`]: a rasterized classification of the `(a, b)` plane
//!   into outside-simplex / outside-C2 / the C2-minus-hexagon gap / the
//!   hexagon, for drawing the two regions.
//! - [`divergence_table`] and [`decide_instance`]: the divergence scan
//!   and the decision pipeline for a pasted instance file.
//!
//! Every export returns a JSON string; errors come back as
//! `{"error": "..."}` so the page can surface them without exceptions.

use wasm_bindgen::prelude::*;

use cqmorph::counterexample::{
    b_star, find_separating_point, g_t, hexagon_contains, CurveTag, TriplePoint,
};
use cqmorph::criteria::{decide, necessary_scan, DecisionConfig};
use cqmorph::divergence::{f_divergence, max_f_divergence};
use cqmorph::grids;
use cqmorph::instance::{parse_instance, report_to_json, scan_to_json, status_str};
use serde_json::json;

fn err_json(msg: impl std::fmt::Display) -> String {
    json!({ "error": msg.to_string() }).to_string()
}

fn triple_from(a0: f64, b0: f64) -> Result<TriplePoint, String> {
    TriplePoint::new(a0, b0, 1.0 - a0 - b0).map_err(|e| e.to_string())
}

/// Sweep report for the triple `(a0, b0, 1 - a0 - b0)`.
#[wasm_bindgen]
pub fn counterexample_report(a0: f64, b0: f64) -> String {
    let triple = match triple_from(a0, b0) {
        Ok(t) => t,
        Err(e) => return err_json(e),
    };
    let grid = grids::default_curve_t_grid();
    let sweep = match b_star(&triple, &grid) {
        Ok(s) => s,
        Err(e) => return err_json(e),
    };
    let report = match find_separating_point(&triple, &grid, 1e-10) {
        Ok(r) => r,
        Err(e) => return err_json(e),
    };
    let curve: Vec<serde_json::Value> = sweep
        .samples
        .iter()
        .map(|s| match s.tag {
            CurveTag::Resolvent(t) => json!({ "tag": "resolvent", "t": t, "b": s.b_t }),
            CurveTag::Square => json!({ "tag": "square", "b": s.b_t }),
        })
        .collect();
    json!({
        "triple": [triple.a0, triple.b0, triple.c0],
        "hexagon": triple.hexagon_vertices().iter().map(|&(a, b)| json!([a, b])).collect::<Vec<_>>(),
        "b_star": report.b_star,
        "b_infinity": report.b_infinity,
        "separating_point": { "a": report.point.0, "b": report.point.1 },
        "max_g_at_point": report.max_g,
        "majorization": status_str(report.majorization),
        "lp": status_str(report.lp),
        "scan_violations": report.scan_violations,
        "curve": curve,
    })
    .to_string()
}

/// Pixel classes over `[0, 1]^2` in row-major order with `b` decreasing
/// down the rows (canvas orientation): 0 outside the simplex, 1 inside
/// the simplex but outside `C2`, 2 in the gap `C2 \ C1`, 3 in the
/// hexagon `C1`.
#[wasm_bindgen]
pub fn region_mask(a0: f64, b0: f64, width: u32, height: u32, t_samples: u32) -> Vec<u8> {
    let Ok(triple) = triple_from(a0, b0) else {
        return Vec::new();
    };
    let mut tags = vec![CurveTag::Square, CurveTag::Resolvent(0.0)];
    for t in grids::log_grid(1e-3, 1e3, t_samples.max(2) as usize) {
        tags.push(CurveTag::Resolvent(t));
    }
    let (w, h) = (width as usize, height as usize);
    let mut mask = vec![0u8; w * h];
    for row in 0..h {
        let b = 1.0 - (row as f64 + 0.5) / h as f64;
        for col in 0..w {
            let a = (col as f64 + 0.5) / w as f64;
            let class = if a + b > 1.0 {
                0
            } else if hexagon_contains(a, b, &triple) {
                3
            } else if tags.iter().all(|&tag| g_t(a, b, tag, &triple) <= 0.0) {
                2
            } else {
                1
            };
            mask[row * w + col] = class;
        }
    }
    mask
}

/// Divergence rows for an instance against comma-separated function
/// specs; values render as strings when infinite.
#[wasm_bindgen]
pub fn divergence_table(instance_json: &str, fn_specs: &str) -> String {
    let inst = match parse_instance(instance_json) {
        Ok(i) => i,
        Err(e) => return err_json(e),
    };
    let mut rows = Vec::new();
    for spec in fn_specs.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let f = match cqmorph::convexfn::parse_fn_spec(spec) {
            Ok(f) => f,
            Err(e) => return err_json(e),
        };
        if !f.operator_convex() {
            return err_json(format!("`{spec}` is not operator convex"));
        }
        let classical = f_divergence(&f, &inst.classical);
        let quantum = match max_f_divergence(&f, &inst.quantum) {
            Ok(v) => v,
            Err(e) => return err_json(e),
        };
        rows.push(json!({
            "label": f.label(),
            "classical": cqmorph::ext::render(classical),
            "quantum": cqmorph::ext::render(quantum),
            "gap": cqmorph::ext::render(cqmorph::ext::gap(classical, quantum)),
        }));
    }
    json!({ "rows": rows }).to_string()
}

/// Runs the full decision pipeline on a pasted instance.
#[wasm_bindgen]
pub fn decide_instance(instance_json: &str) -> String {
    let inst = match parse_instance(instance_json) {
        Ok(i) => i,
        Err(e) => return err_json(e),
    };
    let config = DecisionConfig {
        tol: inst.config.tol,
        t_grid: inst.config.t_grid.clone(),
        s_grid: inst.config.s_grid.clone(),
        max_iter: inst.config.max_iter,
    };
    match decide(&inst.classical, &inst.quantum, &config) {
        Ok(report) => report_to_json(&report).to_string(),
        Err(e) => err_json(e),
    }
}

/// Runs only the necessary scan, returning per-function rows.
#[wasm_bindgen]
pub fn scan_instance(instance_json: &str) -> String {
    let inst = match parse_instance(instance_json) {
        Ok(i) => i,
        Err(e) => return err_json(e),
    };
    match necessary_scan(
        &inst.classical,
        &inst.quantum,
        &inst.config.t_grid,
        &inst.config.s_grid,
        1e-9,
    ) {
        Ok(scan) => scan_to_json(&scan).to_string(),
        Err(e) => err_json(e),
    }
}
