//! Scene files and artifact emission: scene JSON parsing, trace CSV,
//! SVG frames, run manifests and check-report JSON with its schema.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::InitialCurveSpec;
use crate::flow::{FlowConfig, FlowTrace, Snapshot};
use crate::verify::CheckReport;

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("parse error at line {line}, column {column}: {msg}")]
    Parse {
        line: usize,
        column: usize,
        msg: String,
    },
    #[error("unsupported scene version {0} (expected 1)")]
    Version(u32),
    #[error("invalid scene: {0}")]
    Invalid(String),
}

/// A named check request, optionally overriding the default tolerance.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckRequest {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub directory: Option<String>,
    /// Subset of {"csv", "svg", "json"}.
    #[serde(default = "default_formats")]
    pub formats: Vec<String>,
}

fn default_formats() -> Vec<String> {
    vec!["csv".into(), "json".into()]
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec {
            directory: None,
            formats: default_formats(),
        }
    }
}

/// Top-level scene: initial curve, flow configuration, requested checks
/// and output selection. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneFile {
    pub version: u32,
    pub initial: InitialCurveSpec,
    pub flow: FlowConfig,
    #[serde(default)]
    pub checks: Vec<CheckRequest>,
    #[serde(default)]
    pub outputs: OutputSpec,
}

pub fn parse_scene(text: &str) -> Result<SceneFile, SceneError> {
    let scene: SceneFile = serde_json::from_str(text).map_err(|e| SceneError::Parse {
        line: e.line(),
        column: e.column(),
        msg: e.to_string(),
    })?;
    if scene.version != 1 {
        return Err(SceneError::Version(scene.version));
    }
    scene
        .flow
        .validate()
        .map_err(|e| SceneError::Invalid(e.to_string()))?;
    Ok(scene)
}

pub fn load_scene(path: &Path) -> Result<SceneFile, SceneError> {
    let text = fs::read_to_string(path).map_err(|e| SceneError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_scene(&text)
}

/// One float with 17 significant digits: round-trip exact for f64.
fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes a trace as CSV with a mandatory header and rows sorted by
/// (t, node_index).
pub fn trace_csv(trace: &FlowTrace) -> String {
    let mut out = String::from("t,node_index,u,x,y,psi,kappa,s\n");
    for snap in &trace.snapshots {
        for i in 0..snap.curve.n() {
            let p = snap.curve.points[i];
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                fmt_f64(snap.t),
                i,
                fmt_f64(snap.curve.params[i]),
                fmt_f64(p.x),
                fmt_f64(p.y),
                fmt_f64(snap.lift.psi[i]),
                fmt_f64(snap.curv.kappa[i]),
                fmt_f64(snap.curv.arclengths[i]),
            );
        }
    }
    out
}

/// One SVG frame: the curve as a polyline and, when radial-end metadata is
/// present, the two end rays drawn from the origin.
pub fn svg_frame(snap: &Snapshot) -> String {
    let pts = &snap.curve.points;
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in pts {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    x0 = x0.min(0.0);
    y0 = y0.min(0.0);
    x1 = x1.max(0.0);
    y1 = y1.max(0.0);
    let margin = 0.05 * ((x1 - x0) + (y1 - y0)).max(1.0);
    let (w, h) = (x1 - x0 + 2.0 * margin, y1 - y0 + 2.0 * margin);
    let mut svg = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"{:.6} {:.6} {:.6} {:.6}\">\n\
         <g transform=\"scale(1,-1)\" stroke-linecap=\"round\">\n",
        x0 - margin,
        -(y1 + margin),
        w,
        h
    );
    let stroke = 0.004 * w.max(h);
    if let Some(meta) = snap.curve.end_meta {
        let r = meta.pin_radius * 1.2;
        for angle in [meta.angle_a, meta.angle_b] {
            let _ = writeln!(
                svg,
                "<line x1=\"0\" y1=\"0\" x2=\"{:.6}\" y2=\"{:.6}\" stroke=\"#999999\" \
                 stroke-width=\"{:.6}\" stroke-dasharray=\"{:.6}\"/>",
                r * angle.cos(),
                r * angle.sin(),
                0.5 * stroke,
                2.0 * stroke,
            );
        }
    }
    let mut path = String::new();
    for p in pts {
        let _ = write!(path, "{:.6},{:.6} ", p.x, p.y);
    }
    if snap.curve.closed {
        let _ = write!(path, "{:.6},{:.6}", pts[0].x, pts[0].y);
    }
    let _ = writeln!(
        svg,
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#c02020\" stroke-width=\"{:.6}\"/>",
        path.trim_end(),
        stroke,
    );
    svg.push_str("</g>\n</svg>\n");
    svg
}

/// 64-bit FNV-1a hash, used to fingerprint scene bytes in manifests.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Run manifest: scene fingerprint, seed, recorded times and the artifact
/// paths written alongside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub scene_hash: String,
    pub seed: Option<u64>,
    pub node_count: usize,
    pub record_times: Vec<f64>,
    pub outputs: Vec<String>,
}

pub fn manifest(scene_bytes: &[u8], seed: Option<u64>, trace: &FlowTrace, outputs: Vec<String>) -> Manifest {
    Manifest {
        scene_hash: format!("{:016x}", fnv1a64(scene_bytes)),
        seed,
        node_count: trace.snapshots.first().map(|s| s.curve.n()).unwrap_or(0),
        record_times: trace.snapshots.iter().map(|s| s.t).collect(),
        outputs,
    }
}

/// JSON schema for the report array; also checked in at
/// `schemas/report.schema.json`.
pub const REPORT_SCHEMA: &str = include_str!("../../../schemas/report.schema.json");

pub fn report_json(reports: &[CheckReport]) -> String {
    let mut s = serde_json::to_string_pretty(reports).expect("report serialization");
    s.push('\n');
    s
}

/// Structural validation of a report document against the checked-in
/// schema's constraints: an array of objects with the required fields,
/// correctly typed, and a status drawn from the allowed set.
pub fn validate_report(value: &serde_json::Value) -> Result<(), String> {
    let arr = value.as_array().ok_or("report must be a JSON array")?;
    for (i, item) in arr.iter().enumerate() {
        let obj = item
            .as_object()
            .ok_or(format!("entry {i} is not an object"))?;
        for key in ["check_id", "status", "max_violation", "tolerance", "notes"] {
            if !obj.contains_key(key) {
                return Err(format!("entry {i} missing required field '{key}'"));
            }
        }
        if !obj["check_id"].is_string() || !obj["notes"].is_string() {
            return Err(format!("entry {i}: check_id/notes must be strings"));
        }
        match obj["status"].as_str() {
            Some("pass") | Some("fail") | Some("inconclusive") => {}
            _ => return Err(format!("entry {i}: invalid status")),
        }
        if !obj["max_violation"].is_number() || !obj["tolerance"].is_number() {
            return Err(format!("entry {i}: violation/tolerance must be numbers"));
        }
        if let Some(w) = obj.get("witness") {
            if !w.is_null() && !w.is_object() {
                return Err(format!("entry {i}: witness must be null or an object"));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::build_initial_curve;
    use crate::flow::run;
    use std::f64::consts::PI;

    fn tiny_scene_json() -> String {
        r#"{
            "version": 1,
            "initial": {
                "kind": {"kind": "wedge"},
                "angle_a": 3.141592653589793,
                "angle_b": 1.5707963267948966,
                "n": 64,
                "extent": 4.0
            },
            "flow": {
                "dt": 0.001,
                "t_end": 0.01,
                "scheme": "semi_implicit",
                "resample_every": 0,
                "record_times": [0.0, 0.01]
            }
        }"#
        .to_string()
    }

    #[test]
    fn scene_roundtrip_and_unknown_key_rejection() {
        let scene = parse_scene(&tiny_scene_json()).unwrap();
        assert_eq!(scene.version, 1);
        assert!((scene.initial.angle_a - PI).abs() < 1e-15);
        let bad = tiny_scene_json().replace("\"version\": 1", "\"version\": 1, \"zzz\": 2");
        match parse_scene(&bad) {
            Err(SceneError::Parse { .. }) => {}
            other => panic!("expected parse error, got {other:?}"),
        }
        let v2 = tiny_scene_json().replace("\"version\": 1", "\"version\": 2");
        match parse_scene(&v2) {
            Err(SceneError::Version(2)) => {}
            other => panic!("expected version error, got {other:?}"),
        }
    }

    fn tiny_trace() -> FlowTrace {
        let scene = parse_scene(&tiny_scene_json()).unwrap();
        let initial = build_initial_curve(&scene.initial).unwrap();
        let (trace, err) = run(initial, scene.flow);
        assert!(err.is_none());
        trace
    }

    #[test]
    fn csv_is_sorted_and_roundtrip_exact() {
        let trace = tiny_trace();
        let csv = trace_csv(&trace);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "t,node_index,u,x,y,psi,kappa,s");
        let mut prev: Option<(f64, usize)> = None;
        for line in lines {
            let cols: Vec<&str> = line.split(',').collect();
            assert_eq!(cols.len(), 8);
            let t: f64 = cols[0].parse().unwrap();
            let i: usize = cols[1].parse().unwrap();
            if let Some((pt, pi)) = prev {
                assert!((t, i) > (pt, pi), "rows must be sorted by (t, node)");
            }
            prev = Some((t, i));
            let x: f64 = cols[3].parse().unwrap();
            assert_eq!(fmt_f64(x), cols[3], "17-digit round trip");
        }
    }

    #[test]
    fn svg_contains_polyline_and_rays() {
        let trace = tiny_trace();
        let svg = svg_frame(&trace.snapshots[0]);
        assert!(svg.contains("<polyline"));
        assert_eq!(svg.matches("<line").count(), 2);
    }

    #[test]
    fn fnv_vector() {
        // Standard FNV-1a test vectors.
        assert_eq!(fnv1a64(b""), 0xcbf29ce484222325);
        assert_eq!(fnv1a64(b"a"), 0xaf63dc4c8601ec8c);
    }

    #[test]
    fn report_schema_validation() {
        let trace = tiny_trace();
        let reports = vec![crate::verify::check_harnack_bounds(&trace)];
        let json = report_json(&reports);
        let value: serde_json::Value = serde_json::from_str(&json).unwrap();
        validate_report(&value).unwrap();
        // Schema file itself must parse as JSON.
        let _: serde_json::Value = serde_json::from_str(REPORT_SCHEMA).unwrap();
        // A malformed report is rejected.
        let bad: serde_json::Value = serde_json::json!([{"check_id": 3}]);
        assert!(validate_report(&bad).is_err());
    }
}
