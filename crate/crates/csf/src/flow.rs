//! Time integration of curve shortening flow for radial-end polylines and
//! closed curves, plus graphicality and polar-sector detectors and
//! fixed-parametrization windows for residual studies.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::curve::{
    discrete_curvature, embeddedness_check, resample_arclength, tangent_lift, CurvatureField,
    CurveError, EmbedReport, PlanarCurve, TangentField,
};
use crate::geom::Vec2;
use crate::numerics::{solve_cyclic_tridiagonal, solve_tridiagonal, NumericsError};

/// Explicit scheme stability constant: dt <= EXPLICIT_CFL * h_min^2.
pub const EXPLICIT_CFL: f64 = 0.25;
/// Adjacent-direction jump (radians) above which the initial data counts
/// as cornered and gets one tiny explicit smoothing step.
pub const CORNER_JUMP: f64 = 0.1;

#[derive(Debug, Error)]
pub enum FlowError {
    #[error("node collision at t={t:.6}: segment {index} shorter than 1e-12; resampling needed")]
    NodeCollision { t: f64, index: usize },
    #[error("explicit step unstable at t={t:.6}: dt={dt:.3e} exceeds {limit:.3e}; use a smaller window")]
    Unstable { t: f64, dt: f64, limit: f64 },
    #[error("snapshot at t={t:.6} lost embeddedness (segments {seg_a}, {seg_b})")]
    LostEmbeddedness { t: f64, seg_a: usize, seg_b: usize },
    #[error("curve error at t={t:.6}: {source}")]
    Curve {
        t: f64,
        #[source]
        source: CurveError,
    },
    #[error("tridiagonal solve failed at t={t:.6}: {source}")]
    Solve {
        t: f64,
        #[source]
        source: NumericsError,
    },
    #[error("invalid flow config: {0}")]
    BadConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Explicit,
    SemiImplicit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    /// Steps between arclength resamplings; 0 disables resampling.
    pub resample_every: usize,
    /// Times at which snapshots are recorded (ascending, within [0, t_end]).
    pub record_times: Vec<f64>,
}

impl FlowConfig {
    pub fn validate(&self) -> Result<(), FlowError> {
        if !(self.dt > 0.0) {
            return Err(FlowError::BadConfig("dt must be positive".into()));
        }
        if self.t_end < 0.0 {
            return Err(FlowError::BadConfig("t_end must be nonnegative".into()));
        }
        let mut prev = -1.0;
        for &t in &self.record_times {
            if t < 0.0 || t > self.t_end + 1e-12 {
                return Err(FlowError::BadConfig(format!(
                    "record time {t} outside [0, t_end]"
                )));
            }
            if t <= prev {
                return Err(FlowError::BadConfig("record times must be ascending".into()));
            }
            prev = t;
        }
        Ok(())
    }
}

/// Immutable flow snapshot with derived fields.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub curve: PlanarCurve,
    pub lift: TangentField,
    pub curv: CurvatureField,
}

impl Snapshot {
    pub fn new(t: f64, curve: PlanarCurve) -> Result<Self, CurveError> {
        let lift = tangent_lift(&curve)?;
        let curv = discrete_curvature(&curve, &lift)?;
        Ok(Snapshot {
            t,
            curve,
            lift,
            curv,
        })
    }
}

#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub snapshots: Vec<Snapshot>,
    pub config: FlowConfig,
}

/// One-step Laplace-Beltrami coefficients at node i: the 3-point stencil
/// weights (lo, mid, hi) such that (L gamma)_i = lo*g[i-1] + mid*g[i] + hi*g[i+1].
fn stencil(h_lo: f64, h_hi: f64) -> (f64, f64, f64) {
    let inv = 2.0 / (h_lo + h_hi);
    let lo = inv / h_lo;
    let hi = inv / h_hi;
    (lo, -(lo + hi), hi)
}

fn segment_lengths(curve: &PlanarCurve) -> Result<Vec<f64>, FlowError> {
    let n = curve.n();
    let m = if curve.closed { n } else { n - 1 };
    let mut h = Vec::with_capacity(m);
    for j in 0..m {
        let a = curve.points[j];
        let b = curve.points[(j + 1) % n];
        let len = a.dist(b);
        if len < 1e-12 {
            return Err(FlowError::NodeCollision { t: f64::NAN, index: j });
        }
        h.push(len);
    }
    Ok(h)
}

/// Semi-implicit backward-Euler step: solve (I - dt*L) gamma_new = gamma_old
/// componentwise with Dirichlet end pins (open) or periodically (closed).
pub fn step_semi_implicit(curve: &PlanarCurve, dt: f64) -> Result<PlanarCurve, FlowError> {
    let n = curve.n();
    let h = segment_lengths(curve).map_err(|e| tag_time(e, f64::NAN))?;
    let mut sub = vec![0.0; n];
    let mut diag = vec![1.0; n];
    let mut sup = vec![0.0; n];
    let mut rhs_x = vec![0.0; n];
    let mut rhs_y = vec![0.0; n];
    for i in 0..n {
        rhs_x[i] = curve.points[i].x;
        rhs_y[i] = curve.points[i].y;
    }
    if curve.closed {
        let m = n;
        for i in 0..n {
            let h_lo = h[(i + m - 1) % m];
            let h_hi = h[i];
            let (lo, mid, hi) = stencil(h_lo, h_hi);
            sub[i] = -dt * lo;
            diag[i] = 1.0 - dt * mid;
            sup[i] = -dt * hi;
        }
        let corner_lo = sub[0];
        let corner_hi = sup[n - 1];
        let xs = solve_cyclic_tridiagonal(&sub, &diag, &sup, corner_lo, corner_hi, &rhs_x)
            .map_err(|e| FlowError::Solve { t: f64::NAN, source: e })?;
        let ys = solve_cyclic_tridiagonal(&sub, &diag, &sup, corner_lo, corner_hi, &rhs_y)
            .map_err(|e| FlowError::Solve { t: f64::NAN, source: e })?;
        let points = xs.iter().zip(&ys).map(|(&x, &y)| Vec2::new(x, y)).collect();
        return PlanarCurve::new(points, curve.params.clone(), true, None)
            .map_err(|e| FlowError::Curve { t: f64::NAN, source: e });
    }
    for i in 1..n - 1 {
        let (lo, mid, hi) = stencil(h[i - 1], h[i]);
        sub[i] = -dt * lo;
        diag[i] = 1.0 - dt * mid;
        sup[i] = -dt * hi;
    }
    let xs = solve_tridiagonal(&sub, &diag, &sup, &rhs_x)
        .map_err(|e| FlowError::Solve { t: f64::NAN, source: e })?;
    let ys = solve_tridiagonal(&sub, &diag, &sup, &rhs_y)
        .map_err(|e| FlowError::Solve { t: f64::NAN, source: e })?;
    let points = xs.iter().zip(&ys).map(|(&x, &y)| Vec2::new(x, y)).collect();
    PlanarCurve::new(points, curve.params.clone(), false, evolved_meta(curve))
        .map_err(|e| FlowError::Curve { t: f64::NAN, source: e })
}

/// Explicit Euler step (independent oracle); requires dt <= EXPLICIT_CFL * h_min^2.
pub fn step_explicit(curve: &PlanarCurve, dt: f64) -> Result<PlanarCurve, FlowError> {
    let n = curve.n();
    let h = segment_lengths(curve)?;
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = EXPLICIT_CFL * h_min * h_min;
    if dt > limit {
        return Err(FlowError::Unstable {
            t: f64::NAN,
            dt,
            limit,
        });
    }
    let mut points = curve.points.clone();
    let m = h.len();
    let range: Box<dyn Iterator<Item = usize>> = if curve.closed {
        Box::new(0..n)
    } else {
        Box::new(1..n - 1)
    };
    for i in range {
        let h_lo = h[(i + m - 1) % m];
        let h_hi = h[i % m];
        let (lo, mid, hi) = stencil(h_lo, h_hi);
        let prev = curve.points[(i + n - 1) % n];
        let next = curve.points[(i + 1) % n];
        let lap = prev * lo + curve.points[i] * mid + next * hi;
        points[i] = curve.points[i] + lap * dt;
    }
    PlanarCurve::new(points, curve.params.clone(), curve.closed, evolved_meta(curve))
        .map_err(|e| FlowError::Curve { t: f64::NAN, source: e })
}

/// After a step, only the pinned endpoints are still exactly on the rays;
/// relax the clamp indices accordingly.
fn evolved_meta(curve: &PlanarCurve) -> Option<crate::curve::RadialEndSpec> {
    curve.end_meta.map(|m| crate::curve::RadialEndSpec {
        clamp_lo: 0,
        clamp_hi: curve.n() - 1,
        ..m
    })
}

fn tag_time(e: FlowError, t: f64) -> FlowError {
    match e {
        FlowError::NodeCollision { index, .. } => FlowError::NodeCollision { t, index },
        FlowError::Unstable { dt, limit, .. } => FlowError::Unstable { t, dt, limit },
        FlowError::Curve { source, .. } => FlowError::Curve { t, source },
        FlowError::Solve { source, .. } => FlowError::Solve { t, source },
        other => other,
    }
}

fn max_direction_jump(curve: &PlanarCurve) -> f64 {
    let n = curve.n();
    let mut max_jump: f64 = 0.0;
    for i in 1..n - 1 {
        let d1 = (curve.points[i] - curve.points[i - 1]).normalized();
        let d2 = (curve.points[i + 1] - curve.points[i]).normalized();
        let jump = crate::geom::wrap_angle(d2.angle() - d1.angle()).abs();
        max_jump = max_jump.max(jump);
    }
    max_jump
}

/// Runs the flow to t_end, recording snapshots at the configured times.
/// On a step failure the partial trace collected so far is returned with
/// the error.
pub fn run(initial: PlanarCurve, config: FlowConfig) -> (FlowTrace, Option<FlowError>) {
    let mut trace = FlowTrace {
        snapshots: Vec::new(),
        config: config.clone(),
    };
    if let Err(e) = config.validate() {
        return (trace, Some(e));
    }
    let n = initial.n();
    let mut record_iter = config.record_times.clone();
    if record_iter.is_empty() {
        record_iter.push(config.t_end);
    }
    let mut curve = initial;
    let mut t = 0.0;
    let mut steps_since_resample = 0usize;
    let mut ridx = 0usize;
    // Record t=0 if requested.
    if ridx < record_iter.len() && record_iter[ridx] <= 1e-15 {
        match record_snapshot(&mut trace, 0.0, &curve) {
            Ok(()) => {}
            Err(e) => return (trace, Some(e)),
        }
        ridx += 1;
    }
    // Cornered initial data: one tiny explicit step to regularize.
    if config.t_end > 0.0 && max_direction_jump(&curve) > CORNER_JUMP {
        let h = match segment_lengths(&curve) {
            Ok(h) => h,
            Err(e) => return (trace, Some(tag_time(e, t))),
        };
        let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
        let dts = h_min * h_min / 8.0;
        match step_explicit(&curve, dts) {
            Ok(c) => {
                curve = c;
                t += dts;
            }
            Err(e) => return (trace, Some(tag_time(e, t))),
        }
    }
    while t < config.t_end - 1e-15 {
        let next_stop = if ridx < record_iter.len() {
            record_iter[ridx].min(config.t_end)
        } else {
            config.t_end
        };
        let dt = config.dt.min(next_stop - t).max(1e-15);
        let do_step = |c: &PlanarCurve| match config.scheme {
            Scheme::SemiImplicit => step_semi_implicit(c, dt),
            Scheme::Explicit => step_explicit(c, dt),
        };
        match do_step(&curve) {
            Ok(c) => {
                curve = c;
                t += dt;
            }
            Err(FlowError::NodeCollision { .. }) if config.resample_every > 0 => {
                // Tangential drift crowded the nodes; redistribute and retry.
                match resample_arclength(&curve, n).map_err(|e| FlowError::Curve { t, source: e })
                {
                    Ok(c) => curve = c,
                    Err(e) => return (trace, Some(e)),
                }
                steps_since_resample = 0;
                match do_step(&curve) {
                    Ok(c) => {
                        curve = c;
                        t += dt;
                    }
                    Err(e) => return (trace, Some(tag_time(e, t))),
                }
            }
            Err(e) => return (trace, Some(tag_time(e, t))),
        }
        steps_since_resample += 1;
        if config.resample_every > 0 && steps_since_resample >= config.resample_every {
            match resample_arclength(&curve, n) {
                Ok(c) => curve = c,
                Err(e) => return (trace, Some(FlowError::Curve { t, source: e })),
            }
            steps_since_resample = 0;
        }
        if ridx < record_iter.len() && t >= record_iter[ridx] - 1e-12 {
            if let Err(e) = record_snapshot(&mut trace, record_iter[ridx], &curve) {
                return (trace, Some(e));
            }
            ridx += 1;
        }
    }
    // Zero-duration runs (or a missing trailing record time).
    if trace.snapshots.is_empty() {
        if let Err(e) = record_snapshot(&mut trace, t, &curve) {
            return (trace, Some(e));
        }
    }
    (trace, None)
}

fn record_snapshot(trace: &mut FlowTrace, t: f64, curve: &PlanarCurve) -> Result<(), FlowError> {
    if let EmbedReport::Crossing { seg_a, seg_b } = embeddedness_check(curve) {
        return Err(FlowError::LostEmbeddedness { t, seg_a, seg_b });
    }
    let snap = Snapshot::new(t, curve.clone()).map_err(|e| FlowError::Curve { t, source: e })?;
    trace.snapshots.push(snap);
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    /// Ends rotated to pi/2 +- beta/2 (graph over the x-axis).
    Symmetric,
    /// Ends at pi and alpha.
    Canonical,
}

/// Earliest recorded positive time at which the snapshot is a global graph
/// in the requested frame: sup |psi - alpha/2| strictly below pi/2.
pub fn detect_graphical_time(trace: &FlowTrace, frame: Frame) -> Option<f64> {
    for snap in &trace.snapshots {
        if snap.t <= 0.0 {
            continue;
        }
        if is_graphical(snap, frame) {
            return Some(snap.t);
        }
    }
    None
}

pub fn is_graphical(snap: &Snapshot, frame: Frame) -> bool {
    let alpha = snap
        .curve
        .end_meta
        .map(|m| m.angle_b)
        .unwrap_or(0.0);
    let shift = match frame {
        Frame::Symmetric => alpha / 2.0,
        Frame::Canonical => 0.0,
    };
    snap.lift
        .psi
        .iter()
        .all(|&p| (p - shift).abs() <= PI / 2.0 - 1e-6)
}

/// Maximal interval of polar angles theta whose full line through the
/// origin meets the curve exactly once (transversally), sampled at 1e-3
/// rad; scanned strictly between the end-ray angles.
pub fn detect_polar_sector(snap: &Snapshot) -> Option<(f64, f64)> {
    let meta = snap.curve.end_meta?;
    let alpha = meta.angle_b;
    let lo = alpha + 1e-3;
    let hi = PI - 1e-3;
    if hi <= lo {
        return None;
    }
    let steps = ((hi - lo) / 1e-3).ceil() as usize;
    let mut best: Option<(f64, f64)> = None;
    let mut run_start: Option<f64> = None;
    for k in 0..=steps {
        let theta = lo + (hi - lo) * k as f64 / steps as f64;
        let good = line_crossings(&snap.curve, theta) == 1;
        match (good, run_start) {
            (true, None) => run_start = Some(theta),
            (false, Some(start)) => {
                let prev = lo + (hi - lo) * (k - 1) as f64 / steps as f64;
                if best.is_none() || prev - start > best.unwrap().1 - best.unwrap().0 {
                    best = Some((start, prev));
                }
                run_start = None;
            }
            _ => {}
        }
    }
    if let Some(start) = run_start {
        if best.is_none() || hi - start > best.unwrap().1 - best.unwrap().0 {
            best = Some((start, hi));
        }
    }
    best
}

fn line_crossings(curve: &PlanarCurve, theta: f64) -> usize {
    let u = Vec2::from_angle(theta);
    let mut count = 0;
    let mut prev = u.cross(curve.points[0]);
    for p in &curve.points[1..] {
        let cur = u.cross(*p);
        if prev == 0.0 {
            prev = cur;
            continue;
        }
        if cur != 0.0 && (cur > 0.0) != (prev > 0.0) {
            count += 1;
        }
        if cur != 0.0 {
            prev = cur;
        }
    }
    count
}

/// Evolves a snapshot with the explicit scheme, no resampling, recording
/// every step: a fixed-label window for residual studies.
pub fn fixed_label_window(
    start: &Snapshot,
    dt: f64,
    steps: usize,
) -> Result<FlowTrace, FlowError> {
    let h = segment_lengths(&start.curve).map_err(|e| tag_time(e, start.t))?;
    let h_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    let limit = EXPLICIT_CFL * h_min * h_min;
    if dt > limit {
        return Err(FlowError::Unstable {
            t: start.t,
            dt,
            limit,
        });
    }
    let config = FlowConfig {
        dt,
        t_end: start.t + dt * steps as f64,
        scheme: Scheme::Explicit,
        resample_every: 0,
        record_times: vec![],
    };
    let mut trace = FlowTrace {
        snapshots: vec![start.clone()],
        config,
    };
    let mut curve = start.curve.clone();
    for k in 1..=steps {
        curve = step_explicit(&curve, dt).map_err(|e| tag_time(e, start.t + dt * k as f64))?;
        let t = start.t + dt * k as f64;
        let snap = Snapshot::new(t, curve.clone()).map_err(|e| FlowError::Curve { t, source: e })?;
        trace.snapshots.push(snap);
    }
    Ok(trace)
}
