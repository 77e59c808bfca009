//! Command-line front door: scene-driven simulation, verification,
//! oracle-table export and report inspection.
//!
//! Exit codes: 0 success / all checks pass, 1 check failure, 2 parse or
//! parameter error, 3 step failure (partial outputs written), 4 any
//! inconclusive check under --strict.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use csf::curve::{build_initial_curve, GeneratorKind};
use csf::exact;
use csf::flow::{fixed_label_window, run, FlowTrace};
use csf::scene::{
    fnv1a64, load_scene, manifest, report_json, svg_frame, trace_csv, validate_report, SceneError,
    SceneFile,
};
use csf::verify::{check_heat_residuals, run_trace_checks, CheckReport, CheckStatus};

#[derive(Parser)]
#[command(name = "csf", about = "Curve shortening flow laboratory", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scene's flow and write trace CSV / SVG frames / manifest.
    Simulate {
        #[arg(long)]
        scene: PathBuf,
        /// Output directory (overrides the scene's outputs.directory).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the seed of a random_wiggle generator.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scene's flow and the requested checks; write report JSON.
    Verify {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Exit 4 when any check is inconclusive.
        #[arg(long)]
        strict: bool,
        #[arg(long)]
        seed: Option<u64>,
        /// Refinement levels for the heat-residual study.
        #[arg(long, default_value_t = 2)]
        refine: usize,
    },
    /// Export an exact-solution table as CSV.
    Oracle {
        /// One of: oval, reaper, wedge, circle.
        kind: String,
        /// Oval parameter a.
        #[arg(long)]
        a: Option<f64>,
        /// Time parameter.
        #[arg(long)]
        t: Option<f64>,
        /// Wedge opening angle beta.
        #[arg(long)]
        beta: Option<f64>,
        /// Initial circle radius.
        #[arg(long)]
        r0: Option<f64>,
        /// Sample count.
        #[arg(long, default_value_t = 512)]
        n: usize,
        /// Output file (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Validate and summarize an existing report JSON.
    Report {
        path: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("CSF_THREADS") {
        if let Ok(k) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(k)
                .build_global();
        }
    }
    let cli = Cli::parse();
    let code = match cli.cmd {
        Cmd::Simulate { scene, out, seed } => cmd_simulate(&scene, out.as_deref(), seed),
        Cmd::Verify {
            scene,
            out,
            strict,
            seed,
            refine,
        } => cmd_verify(&scene, out.as_deref(), strict, seed, refine),
        Cmd::Oracle {
            kind,
            a,
            t,
            beta,
            r0,
            n,
            out,
        } => cmd_oracle(&kind, a, t, beta, r0, n, out.as_deref()),
        Cmd::Report { path, strict } => cmd_report(&path, strict),
    };
    ExitCode::from(code)
}

/// Loads a scene, applies the seed override and prepares the output dir.
fn setup(
    scene_path: &Path,
    out: Option<&Path>,
    seed: Option<u64>,
) -> Result<(SceneFile, Vec<u8>, PathBuf, Option<u64>), u8> {
    let mut scene = match load_scene(scene_path) {
        Ok(s) => s,
        Err(e @ SceneError::Io { .. }) => {
            eprintln!("error: {e}");
            return Err(2);
        }
        Err(e) => {
            eprintln!("error: {e}");
            return Err(2);
        }
    };
    let scene_bytes = fs::read(scene_path).unwrap_or_default();
    let mut effective_seed = None;
    if let GeneratorKind::RandomWiggle { seed: s } = &mut scene.initial.kind {
        if let Some(over) = seed {
            *s = over;
        }
        effective_seed = Some(*s);
    }
    let dir = out
        .map(Path::to_path_buf)
        .or_else(|| scene.outputs.directory.clone().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("."));
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create output directory {}: {e}", dir.display());
        return Err(2);
    }
    Ok((scene, scene_bytes, dir, effective_seed))
}

fn run_scene_flow(scene: &SceneFile) -> Result<(FlowTrace, bool), u8> {
    let initial = match build_initial_curve(&scene.initial) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid initial curve: {e}");
            return Err(2);
        }
    };
    let (trace, err) = run(initial, scene.flow.clone());
    if let Some(e) = &err {
        eprintln!("error: flow step failed: {e}");
    }
    Ok((trace, err.is_some()))
}

fn write_file(path: &Path, contents: &str) -> Result<(), u8> {
    fs::write(path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        2u8
    })
}

fn emit_artifacts(
    scene: &SceneFile,
    scene_bytes: &[u8],
    seed: Option<u64>,
    trace: &FlowTrace,
    dir: &Path,
) -> Result<Vec<String>, u8> {
    let mut outputs = Vec::new();
    if scene.outputs.formats.iter().any(|f| f == "csv") {
        let path = dir.join("trace.csv");
        write_file(&path, &trace_csv(trace))?;
        outputs.push("trace.csv".to_string());
    }
    if scene.outputs.formats.iter().any(|f| f == "svg") {
        for (i, snap) in trace.snapshots.iter().enumerate() {
            let name = format!("frame_{i:04}.svg");
            write_file(&dir.join(&name), &svg_frame(snap))?;
            outputs.push(name);
        }
    }
    let m = manifest(scene_bytes, seed, trace, outputs.clone());
    let mut mj = serde_json::to_string_pretty(&m).expect("manifest serialization");
    mj.push('\n');
    write_file(&dir.join("manifest.json"), &mj)?;
    outputs.push("manifest.json".to_string());
    Ok(outputs)
}

fn cmd_simulate(scene_path: &Path, out: Option<&Path>, seed: Option<u64>) -> u8 {
    let (scene, scene_bytes, dir, seed) = match setup(scene_path, out, seed) {
        Ok(v) => v,
        Err(c) => return c,
    };
    let (trace, failed) = match run_scene_flow(&scene) {
        Ok(v) => v,
        Err(c) => return c,
    };
    if let Err(c) = emit_artifacts(&scene, &scene_bytes, seed, &trace, &dir) {
        return c;
    }
    println!(
        "simulate: {} snapshots written to {} (hash {:016x})",
        trace.snapshots.len(),
        dir.display(),
        fnv1a64(&scene_bytes),
    );
    if failed {
        3
    } else {
        0
    }
}

/// Builds successively refined fixed-label windows from the final
/// snapshot for the heat-residual study.
fn heat_windows(trace: &FlowTrace, levels: usize) -> Result<Vec<FlowTrace>, String> {
    let last = trace.snapshots.last().ok_or("empty trace")?;
    let n = last.curve.n();
    let mut windows = Vec::new();
    for k in 0..levels {
        let target = (n >> (levels - 1 - k)).max(64);
        let curve = csf::curve::resample_arclength(&last.curve, target)
            .map_err(|e| format!("resample failed: {e}"))?;
        let snap = csf::flow::Snapshot::new(last.t, curve).map_err(|e| e.to_string())?;
        let h_min = snap
            .curve
            .points
            .windows(2)
            .map(|w| w[0].dist(w[1]))
            .fold(f64::INFINITY, f64::min);
        let dt = 0.1 * h_min * h_min;
        windows.push(fixed_label_window(&snap, dt, 16).map_err(|e| e.to_string())?);
    }
    Ok(windows)
}

fn apply_override(mut report: CheckReport, tolerance: Option<f64>) -> CheckReport {
    if let Some(tol) = tolerance {
        report.tolerance = tol;
        if report.status != CheckStatus::Inconclusive {
            report.status = if report.max_violation <= tol {
                CheckStatus::Pass
            } else {
                CheckStatus::Fail
            };
        }
    }
    report
}

fn cmd_verify(
    scene_path: &Path,
    out: Option<&Path>,
    strict: bool,
    seed: Option<u64>,
    refine: usize,
) -> u8 {
    let (scene, scene_bytes, dir, seed) = match setup(scene_path, out, seed) {
        Ok(v) => v,
        Err(c) => return c,
    };
    let (trace, failed) = match run_scene_flow(&scene) {
        Ok(v) => v,
        Err(c) => return c,
    };
    if let Err(c) = emit_artifacts(&scene, &scene_bytes, seed, &trace, &dir) {
        return c;
    }
    if failed {
        return 3;
    }
    let ids: Vec<String> = scene.checks.iter().map(|c| c.id.clone()).collect();
    let mut reports = run_trace_checks(&trace, &ids);
    if ids.is_empty() || ids.iter().any(|i| i == "heat_residuals") {
        let report = match heat_windows(&trace, refine.max(2)) {
            Ok(windows) => check_heat_residuals(&windows),
            Err(e) => CheckReport {
                check_id: "heat_residuals".into(),
                status: CheckStatus::Inconclusive,
                max_violation: 0.0,
                witness: None,
                tolerance: 0.0,
                notes: e,
            },
        };
        reports.push(report);
    }
    let reports: Vec<CheckReport> = reports
        .into_iter()
        .map(|r| {
            let over = scene
                .checks
                .iter()
                .find(|c| c.id == r.check_id)
                .and_then(|c| c.tolerance);
            apply_override(r, over)
        })
        .collect();
    let json = report_json(&reports);
    if write_file(&dir.join("report.json"), &json).is_err() {
        return 2;
    }
    summarize(&reports, strict)
}

fn summarize(reports: &[CheckReport], strict: bool) -> u8 {
    let mut any_fail = false;
    let mut any_inconclusive = false;
    for r in reports {
        let tag = match r.status {
            CheckStatus::Pass => "pass",
            CheckStatus::Fail => {
                any_fail = true;
                "FAIL"
            }
            CheckStatus::Inconclusive => {
                any_inconclusive = true;
                "inconclusive"
            }
        };
        println!(
            "{:<20} {:<12} violation {:.3e} (tol {:.3e})",
            r.check_id, tag, r.max_violation, r.tolerance
        );
    }
    if any_fail {
        1
    } else if any_inconclusive && strict {
        4
    } else {
        0
    }
}

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn cmd_oracle(
    kind: &str,
    a: Option<f64>,
    t: Option<f64>,
    beta: Option<f64>,
    r0: Option<f64>,
    n: usize,
    out: Option<&Path>,
) -> u8 {
    let table = match kind {
        "oval" => {
            let (a, t) = match (a, t) {
                (Some(a), Some(t)) => (a, t),
                _ => {
                    eprintln!("error: oracle oval requires --a and --t");
                    return 2;
                }
            };
            match exact::angenent_oval(a, t, n) {
                Ok(c) => {
                    let mut s = String::from("u,x,y\n");
                    for i in 0..c.n() {
                        let _ = writeln!(
                            s,
                            "{},{},{}",
                            fmt_f64(c.params[i]),
                            fmt_f64(c.points[i].x),
                            fmt_f64(c.points[i].y)
                        );
                    }
                    s
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        "reaper" => {
            let t = match t {
                Some(t) => t,
                None => {
                    eprintln!("error: oracle reaper requires --t");
                    return 2;
                }
            };
            match exact::grim_reaper(t, t + 10.0, n) {
                Ok(c) => {
                    let mut s = String::from("x,y\n");
                    for p in &c.points {
                        let _ = writeln!(s, "{},{}", fmt_f64(p.x), fmt_f64(p.y));
                    }
                    s
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        "wedge" => {
            let beta = beta.unwrap_or(PI / 2.0);
            match exact::wedge_profile(beta, 1e-9) {
                Ok(p) => {
                    let d = p.support();
                    let mut s = String::from("psi,kappa_beta,x,y,d_beta\n");
                    let stride = (p.psis.len() / n.max(1)).max(1);
                    for i in (0..p.psis.len()).step_by(stride) {
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{}",
                            fmt_f64(p.psis[i]),
                            fmt_f64(p.kappa[i]),
                            fmt_f64(p.gamma[i].x),
                            fmt_f64(p.gamma[i].y),
                            fmt_f64(d[i])
                        );
                    }
                    s
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        "circle" => {
            let (r0, t) = match (r0, t) {
                (Some(r), Some(t)) => (r, t),
                _ => {
                    eprintln!("error: oracle circle requires --r0 and --t");
                    return 2;
                }
            };
            match exact::shrinking_circle(r0, t, n) {
                Ok(c) => {
                    let mut s = String::from("u,x,y\n");
                    for i in 0..c.n() {
                        let _ = writeln!(
                            s,
                            "{},{},{}",
                            fmt_f64(c.params[i]),
                            fmt_f64(c.points[i].x),
                            fmt_f64(c.points[i].y)
                        );
                    }
                    s
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    return 2;
                }
            }
        }
        other => {
            eprintln!("error: unknown oracle kind '{other}' (expected oval|reaper|wedge|circle)");
            return 2;
        }
    };
    match out {
        Some(path) => {
            if write_file(path, &table).is_err() {
                return 2;
            }
        }
        None => print!("{table}"),
    }
    0
}

fn cmd_report(path: &Path, strict: bool) -> u8 {
    let text = match fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return 2;
        }
    };
    let value: serde_json::Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => {
            eprintln!(
                "error: parse error at line {}, column {}: {e}",
                e.line(),
                e.column()
            );
            return 2;
        }
    };
    if let Err(e) = validate_report(&value) {
        eprintln!("error: report does not match schema: {e}");
        return 2;
    }
    let reports: Vec<CheckReport> = serde_json::from_value(value).expect("validated report");
    summarize(&reports, strict)
}
