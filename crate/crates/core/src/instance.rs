//! Instance file ingestion and report emission.
//!
//! An instance is a JSON object with `dim`, weight lists `p0` / `p1`,
//! complex matrices `sigma0` / `sigma1` as nested arrays of `[re, im]`
//! pairs (row-major), and an optional `config` block. Reports and
//! witnesses are emitted as JSON with the same matrix encoding; floats
//! go through Rust's shortest round-trip formatting.

use serde::Deserialize;
use serde_json::{json, Value};

use crate::criteria::ScanResult;
use crate::divergence::{ClassicalPair, ProbVector, QuantumPair};
use crate::feasibility::{FeasibilityReport, FeasibilityStatus, Witness};
use crate::grids::GridSpec;
use crate::linalg::{CMat, DensityOp, HermitianOp, C64};
use crate::{Error, Result};

/// Parsed instance: the two pairs plus solver configuration.
#[derive(Clone, Debug)]
pub struct Instance {
    pub classical: ClassicalPair,
    pub quantum: QuantumPair,
    pub config: InstanceConfig,
}

/// Tolerances, grids and seed accepted in the `config` block; the file
/// may override any subset.
#[derive(Clone, Debug)]
pub struct InstanceConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub seed: u64,
    pub t_grid: Vec<f64>,
    pub s_grid: Vec<f64>,
}

impl Default for InstanceConfig {
    fn default() -> Self {
        InstanceConfig {
            tol: crate::feasibility::DEFAULT_TOL,
            max_iter: crate::feasibility::DEFAULT_MAX_ITER,
            seed: 0,
            t_grid: crate::grids::default_t_grid(),
            s_grid: crate::grids::default_s_grid(),
        }
    }
}

#[derive(Deserialize)]
struct RawInstance {
    dim: usize,
    p0: Vec<f64>,
    p1: Vec<f64>,
    sigma0: Vec<Vec<[f64; 2]>>,
    sigma1: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    config: Option<RawConfig>,
}

#[derive(Deserialize, Default)]
struct RawConfig {
    tol: Option<f64>,
    max_iter: Option<usize>,
    seed: Option<u64>,
    t_grid: Option<String>,
    s_grid: Option<String>,
}

fn matrix_from_json(rows: &[Vec<[f64; 2]>], dim: usize, field: &str) -> Result<CMat> {
    if rows.len() != dim {
        return Err(Error::Parse(format!(
            "field `{field}`: {} rows, expected {dim}",
            rows.len()
        )));
    }
    let mut m = CMat::zeros(dim);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Parse(format!(
                "field `{field}` row {i}: {} entries, expected {dim}",
                row.len()
            )));
        }
        for (j, &[re, im]) in row.iter().enumerate() {
            m[(i, j)] = C64::new(re, im);
        }
    }
    Ok(m)
}

/// Parses an instance from JSON text, with line/field diagnostics on
/// malformed input.
pub fn parse_instance(text: &str) -> Result<Instance> {
    let raw: RawInstance = serde_json::from_str(text)
        .map_err(|e| Error::Parse(format!("line {}, column {}: {e}", e.line(), e.column())))?;

    if raw.p0.len() != raw.p1.len() {
        return Err(Error::Parse(format!(
            "p0 has {} weights but p1 has {}",
            raw.p0.len(),
            raw.p1.len()
        )));
    }
    let p0 = ProbVector::new(raw.p0).map_err(|e| Error::Parse(format!("field `p0`: {e}")))?;
    let p1 = ProbVector::new(raw.p1).map_err(|e| Error::Parse(format!("field `p1`: {e}")))?;
    let classical = ClassicalPair::new(p0, p1)?;

    let m0 = matrix_from_json(&raw.sigma0, raw.dim, "sigma0")?;
    let m1 = matrix_from_json(&raw.sigma1, raw.dim, "sigma1")?;
    let s0 = DensityOp::new(HermitianOp::new(m0).map_err(|e| Error::Parse(format!("field `sigma0`: {e}")))?)
        .map_err(|e| Error::Parse(format!("field `sigma0`: {e}")))?;
    let s1 = DensityOp::new(HermitianOp::new(m1).map_err(|e| Error::Parse(format!("field `sigma1`: {e}")))?)
        .map_err(|e| Error::Parse(format!("field `sigma1`: {e}")))?;
    let quantum = QuantumPair::new(s0, s1)?;

    let mut config = InstanceConfig::default();
    if let Some(rc) = raw.config {
        if let Some(tol) = rc.tol {
            config.tol = tol;
        }
        if let Some(mi) = rc.max_iter {
            config.max_iter = mi;
        }
        if let Some(seed) = rc.seed {
            config.seed = seed;
        }
        if let Some(tg) = rc.t_grid {
            config.t_grid = GridSpec::parse(&tg)?.log_points();
        }
        if let Some(sg) = rc.s_grid {
            config.s_grid = GridSpec::parse(&sg)?.lin_points();
        }
    }

    Ok(Instance { classical, quantum, config })
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

/// Matrix as nested `[re, im]` arrays, row-major.
pub fn matrix_to_json(m: &CMat) -> Value {
    let d = m.dim();
    Value::Array(
        (0..d)
            .map(|i| {
                Value::Array(
                    (0..d)
                        .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                        .collect(),
                )
            })
            .collect(),
    )
}

pub fn status_str(s: FeasibilityStatus) -> &'static str {
    match s {
        FeasibilityStatus::Feasible => "feasible",
        FeasibilityStatus::Infeasible => "infeasible",
        FeasibilityStatus::Undetermined => "undetermined",
    }
}

/// Exit code convention shared by the CLI and the demo surfaces.
pub fn status_exit_code(s: FeasibilityStatus) -> i32 {
    match s {
        FeasibilityStatus::Feasible => 0,
        FeasibilityStatus::Infeasible => 1,
        FeasibilityStatus::Undetermined => 2,
    }
}

fn finite_or_string(v: f64) -> Value {
    if v.is_finite() {
        json!(v)
    } else {
        json!(crate::ext::render(v))
    }
}

/// Full report serialization: status, stage, residual, plus whatever
/// witness or violation the deciding route produced.
pub fn report_to_json(r: &FeasibilityReport) -> Value {
    let mut obj = serde_json::Map::new();
    obj.insert("status".into(), json!(status_str(r.status)));
    if !r.stage.is_empty() {
        obj.insert("stage".into(), json!(r.stage));
    }
    obj.insert("residual".into(), finite_or_string(r.residual));
    match &r.witness {
        Some(Witness::Channel(ch)) => {
            obj.insert(
                "channel".into(),
                Value::Array(ch.states().iter().map(|s| matrix_to_json(s.mat())).collect()),
            );
        }
        Some(Witness::Transition(t)) => {
            let rows: Vec<Value> = (0..t.rows())
                .map(|y| Value::Array((0..t.cols()).map(|x| json!(t.get(y, x))).collect()))
                .collect();
            obj.insert("transition".into(), Value::Array(rows));
        }
        None => {}
    }
    if let Some(v) = &r.violation {
        obj.insert(
            "violation".into(),
            json!({
                "label": v.label,
                "lhs": finite_or_string(v.lhs),
                "rhs": finite_or_string(v.rhs),
            }),
        );
    }
    Value::Object(obj)
}

/// Scan summary with per-entry rows mirroring the CSV dump.
pub fn scan_to_json(scan: &ScanResult) -> Value {
    json!({
        "violations": scan.violations(),
        "worst_gap": finite_or_string(scan.worst_gap),
        "entries": scan
            .entries
            .iter()
            .map(|e| {
                json!({
                    "label": e.label,
                    "lhs": finite_or_string(e.lhs),
                    "rhs": finite_or_string(e.rhs),
                    "violated": e.violated,
                })
            })
            .collect::<Vec<_>>(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"{
        "dim": 2,
        "p0": [0.7, 0.3],
        "p1": [0.5, 0.5],
        "sigma0": [[[0.7, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.3, 0.0]]],
        "sigma1": [[[0.5, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.5, 0.0]]],
        "config": {"tol": 1e-8, "t_grid": "1e-2:1e2:16"}
    }"#;

    #[test]
    fn parses_valid_instance() {
        let inst = parse_instance(SAMPLE).unwrap();
        assert_eq!(inst.classical.alphabet(), 2);
        assert_eq!(inst.quantum.dim(), 2);
        assert_eq!(inst.config.tol, 1e-8);
        assert_eq!(inst.config.t_grid.len(), 16);
        assert_eq!(inst.config.max_iter, crate::feasibility::DEFAULT_MAX_ITER);
    }

    #[test]
    fn rejects_malformed_with_location() {
        let err = parse_instance("{\n  \"dim\": 2,\n  oops\n}").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 3"), "{msg}");
    }

    #[test]
    fn rejects_wrong_shapes() {
        let bad = SAMPLE.replace("[[[0.7, 0.0], [0.0, 0.0]], [[0.0, 0.0], [0.3, 0.0]]]", "[[[0.7, 0.0]]]");
        let err = parse_instance(&bad).unwrap_err();
        assert!(err.to_string().contains("sigma0"));

        let bad_prob = SAMPLE.replace("[0.7, 0.3]", "[0.7, 0.7]");
        assert!(parse_instance(&bad_prob).is_err());
    }

    #[test]
    fn matrix_json_roundtrip() {
        let inst = parse_instance(SAMPLE).unwrap();
        let v = matrix_to_json(inst.quantum.sigma0.mat());
        let text = serde_json::to_string(&v).unwrap();
        let back: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text).unwrap();
        let m = matrix_from_json(&back, 2, "roundtrip").unwrap();
        assert!(m.sub(inst.quantum.sigma0.mat()).fro_norm() == 0.0);
    }

    #[test]
    fn report_json_shape() {
        let r = FeasibilityReport::undetermined(0.5).with_stage("oracle");
        let v = report_to_json(&r);
        assert_eq!(v["status"], "undetermined");
        assert_eq!(v["stage"], "oracle");
    }
}
