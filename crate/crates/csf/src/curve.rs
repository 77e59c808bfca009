//! Discrete oriented planar curves with radial ends: construction,
//! tangent-angle lifts, curvature fields, arclength resampling and
//! embeddedness checks.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::{segment_segment_distance, wrap_angle, Vec2};
use crate::numerics::MonotoneCubic;

/// Segments of non-adjacent index closer than this count as intersecting.
pub const EMBED_TOL: f64 = 1e-12;
/// Nodes within this distance of a ray count as lying on it.
pub const RAY_TOL: f64 = 1e-9;
/// Adjacent tangent-direction jumps must stay below pi minus this margin.
pub const UNWRAP_MARGIN: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum CurveError {
    #[error("curve needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("degenerate segment between nodes {0} and {1}")]
    DegenerateSegment(usize, usize),
    #[error("params not strictly increasing at index {0}")]
    NonMonotoneParams(usize),
    #[error("node {index} off the end ray by {dist:.3e}")]
    OffRay { index: usize, dist: f64 },
    #[error("self-intersection between segments {0} and {1}")]
    SelfIntersection(usize, usize),
    #[error("tangent unwrap failure at segment {index}: direction jump {jump:.4} rad")]
    UnwrapFailure { index: usize, jump: f64 },
    #[error("invalid generator parameters: {0}")]
    BadSpec(String),
    #[error(transparent)]
    Numerics(#[from] crate::numerics::NumericsError),
}

/// Radial-end metadata: end rays, clamp indices and the pin radius at
/// which the far endpoints are held during flow.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RadialEndSpec {
    pub angle_a: f64,
    pub angle_b: f64,
    pub clamp_lo: usize,
    pub clamp_hi: usize,
    pub pin_radius: f64,
}

/// Oriented sampled polyline, optionally closed, with optional radial-end
/// metadata. Immutable after construction.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlanarCurve {
    pub points: Vec<Vec2>,
    pub params: Vec<f64>,
    pub closed: bool,
    pub end_meta: Option<RadialEndSpec>,
}

/// Per-node continuous tangent-angle lift.
#[derive(Debug, Clone)]
pub struct TangentField {
    pub psi: Vec<f64>,
}

/// Per-node signed curvature and cumulative arclength.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub kappa: Vec<f64>,
    pub arclengths: Vec<f64>,
}

/// Named initial-curve generators. All open generators produce curves in
/// the canonical frame: incoming ray at angle pi, outgoing ray at angle
/// `alpha`, oriented from the incoming end.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GeneratorKind {
    Wedge,
    BentLine { round_radius: f64 },
    Spiral { turns: f64 },
    Zigzag { k: usize },
    RandomWiggle { seed: u64 },
    FromPoints { points: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialCurveSpec {
    pub kind: GeneratorKind,
    /// Angle of the incoming end ray (canonical generators expect pi).
    pub angle_a: f64,
    /// Angle of the outgoing end ray (alpha in the canonical frame).
    pub angle_b: f64,
    /// Total node count.
    pub n: usize,
    /// Radius out to which the radial tails extend.
    pub extent: f64,
}

impl PlanarCurve {
    pub fn new(
        points: Vec<Vec2>,
        params: Vec<f64>,
        closed: bool,
        end_meta: Option<RadialEndSpec>,
    ) -> Result<Self, CurveError> {
        let curve = PlanarCurve {
            points,
            params,
            closed,
            end_meta,
        };
        curve.validate()?;
        Ok(curve)
    }

    /// Convenience constructor with canonical params u_i = i/(n-1).
    pub fn from_points_open(
        points: Vec<Vec2>,
        end_meta: Option<RadialEndSpec>,
    ) -> Result<Self, CurveError> {
        let n = points.len();
        let params = (0..n).map(|i| i as f64 / (n - 1).max(1) as f64).collect();
        PlanarCurve::new(points, params, false, end_meta)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn validate(&self) -> Result<(), CurveError> {
        let n = self.points.len();
        if n < 3 {
            return Err(CurveError::TooFewPoints(n));
        }
        if self.params.len() != n {
            return Err(CurveError::BadSpec("params length mismatch".into()));
        }
        for i in 1..n {
            if self.params[i] <= self.params[i - 1] {
                return Err(CurveError::NonMonotoneParams(i));
            }
            if self.points[i].dist(self.points[i - 1]) == 0.0 {
                return Err(CurveError::DegenerateSegment(i - 1, i));
            }
        }
        if self.closed && self.points[0].dist(self.points[n - 1]) == 0.0 {
            return Err(CurveError::DegenerateSegment(n - 1, 0));
        }
        if let Some(meta) = &self.end_meta {
            for i in 0..=meta.clamp_lo {
                check_on_ray(self.points[i], meta.angle_a, i)?;
            }
            for i in meta.clamp_hi..n {
                check_on_ray(self.points[i], meta.angle_b, i)?;
            }
        }
        Ok(())
    }

    /// Per-node cumulative arclength.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.n());
        s.push(0.0);
        for i in 1..self.n() {
            s.push(s[i - 1] + self.points[i].dist(self.points[i - 1]));
        }
        s
    }

    pub fn total_length(&self) -> f64 {
        let mut len = *self.arclengths().last().unwrap();
        if self.closed {
            len += self.points[0].dist(*self.points.last().unwrap());
        }
        len
    }

    /// Reflect across the x-axis (negates all signed functionals).
    pub fn reflected_x(&self) -> PlanarCurve {
        let points = self.points.iter().map(|p| Vec2::new(p.x, -p.y)).collect();
        let end_meta = self.end_meta.map(|m| RadialEndSpec {
            angle_a: -m.angle_a,
            angle_b: -m.angle_b,
            ..m
        });
        PlanarCurve {
            points,
            params: self.params.clone(),
            closed: self.closed,
            end_meta,
        }
    }

    /// Reflect across the x-axis and reverse orientation; node i maps to
    /// n-1-i, so parameter pairs map (v,w) -> (1-w, 1-v).
    pub fn reflected_reversed(&self) -> PlanarCurve {
        let refl = self.reflected_x();
        let mut points = refl.points;
        points.reverse();
        let n = points.len();
        let last = *self.params.last().unwrap();
        let first = self.params[0];
        let params: Vec<f64> = self
            .params
            .iter()
            .rev()
            .map(|&u| first + last - u)
            .collect();
        let end_meta = refl.end_meta.map(|m| RadialEndSpec {
            angle_a: m.angle_b,
            angle_b: m.angle_a,
            clamp_lo: n - 1 - m.clamp_hi,
            clamp_hi: n - 1 - m.clamp_lo,
            pin_radius: m.pin_radius,
        });
        PlanarCurve {
            points,
            params,
            closed: self.closed,
            end_meta,
        }
    }

    /// Rotate about the origin (preserves all signed functionals).
    pub fn rotated(&self, theta: f64) -> PlanarCurve {
        let points = self.points.iter().map(|p| p.rotated(theta)).collect();
        let end_meta = self.end_meta.map(|m| RadialEndSpec {
            angle_a: wrap_angle(m.angle_a + theta),
            angle_b: wrap_angle(m.angle_b + theta),
            ..m
        });
        PlanarCurve {
            points,
            params: self.params.clone(),
            closed: self.closed,
            end_meta,
        }
    }
}

fn check_on_ray(p: Vec2, angle: f64, index: usize) -> Result<(), CurveError> {
    let dir = Vec2::from_angle(angle);
    // Distance to the ray: perpendicular offset, or distance to the tip
    // when the point projects behind the origin.
    let along = p.dot(dir);
    let dist = if along >= 0.0 {
        p.cross(dir).abs()
    } else {
        p.norm()
    };
    if dist > RAY_TOL {
        return Err(CurveError::OffRay { index, dist });
    }
    Ok(())
}

/// Build one of the named initial curves. All generated curves are
/// validated for embeddedness before being returned.
pub fn build_initial_curve(spec: &InitialCurveSpec) -> Result<PlanarCurve, CurveError> {
    if spec.n < 16 {
        return Err(CurveError::BadSpec(format!(
            "need n >= 16 nodes, got {}",
            spec.n
        )));
    }
    if spec.extent <= 2.0 {
        return Err(CurveError::BadSpec(format!(
            "extent must exceed 2, got {}",
            spec.extent
        )));
    }
    let curve = match &spec.kind {
        GeneratorKind::Wedge => gen_wedge(spec)?,
        GeneratorKind::BentLine { round_radius } => gen_bent_line(spec, *round_radius)?,
        GeneratorKind::Spiral { turns } => gen_spiral(spec, *turns)?,
        GeneratorKind::Zigzag { k } => gen_zigzag(spec, *k)?,
        GeneratorKind::RandomWiggle { seed } => gen_random_wiggle(spec, *seed)?,
        GeneratorKind::FromPoints { points } => gen_from_points(spec, points)?,
    };
    if let Some((i, j)) = first_crossing(&curve) {
        return Err(CurveError::SelfIntersection(i, j));
    }
    Ok(curve)
}

fn canonical_angles(spec: &InitialCurveSpec) -> Result<f64, CurveError> {
    if (spec.angle_a - PI).abs() > 1e-12 {
        return Err(CurveError::BadSpec(
            "canonical generators require angle_a = pi".into(),
        ));
    }
    let alpha = spec.angle_b;
    if !(0.0..PI).contains(&alpha) {
        return Err(CurveError::BadSpec(format!(
            "angle_b must lie in [0, pi), got {alpha}"
        )));
    }
    Ok(alpha)
}

/// Distribute `n` nodes along a vertex chain proportionally to arclength,
/// keeping every original vertex as a node (so straight tails stay exactly
/// on their rays).
fn densify(vertices: &[Vec2], n: usize) -> Vec<Vec2> {
    let m = vertices.len();
    assert!(m >= 2 && n >= m);
    let mut seg_len = Vec::with_capacity(m - 1);
    let mut total = 0.0;
    for i in 0..m - 1 {
        let l = vertices[i].dist(vertices[i + 1]);
        seg_len.push(l);
        total += l;
    }
    // Extra nodes per segment, largest-remainder apportionment.
    let extra = n - m;
    let quota: Vec<f64> = seg_len.iter().map(|l| l / total * extra as f64).collect();
    let mut counts: Vec<usize> = quota.iter().map(|q| q.floor() as usize).collect();
    let mut assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..m - 1).collect();
    order.sort_by(|&a, &b| {
        let ra = quota[a] - counts[a] as f64;
        let rb = quota[b] - counts[b] as f64;
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in &order {
        if assigned == extra {
            break;
        }
        counts[i] += 1;
        assigned += 1;
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..m - 1 {
        out.push(vertices[i]);
        let c = counts[i];
        for j in 1..=c {
            let t = j as f64 / (c + 1) as f64;
            out.push(vertices[i] + (vertices[i + 1] - vertices[i]) * t);
        }
    }
    out.push(vertices[m - 1]);
    out
}

/// Attach straight radial tails to a compact middle piece and package the
/// result as a canonical-frame curve. The middle chain must start on the
/// ray at angle pi and end on the ray at angle alpha.
fn assemble_with_tails(
    middle: &[Vec2],
    alpha: f64,
    extent: f64,
    n: usize,
) -> Result<PlanarCurve, CurveError> {
    let r_in = middle[0].norm();
    let r_out = middle.last().unwrap().norm();
    let dir_out = Vec2::from_angle(alpha);
    let mut chain = Vec::new();
    // A couple of intermediate tail vertices keep densify from starving
    // the tails of nodes on very long extents.
    for r in [extent, (extent + r_in) / 2.0] {
        chain.push(Vec2::new(-r, 0.0));
    }
    chain.extend_from_slice(middle);
    for r in [(extent + r_out) / 2.0, extent] {
        chain.push(dir_out * r);
    }
    let points = densify(&chain, n);
    let meta = clamp_indices_for(&points, PI, alpha, extent);
    PlanarCurve::from_points_open(points, Some(meta))
}

fn clamp_indices_for(points: &[Vec2], angle_a: f64, angle_b: f64, extent: f64) -> RadialEndSpec {
    let n = points.len();
    let mut clamp_lo = 0;
    while clamp_lo + 1 < n && check_on_ray(points[clamp_lo + 1], angle_a, 0).is_ok() {
        clamp_lo += 1;
    }
    let mut clamp_hi = n - 1;
    while clamp_hi > 0 && check_on_ray(points[clamp_hi - 1], angle_b, 0).is_ok() {
        clamp_hi -= 1;
    }
    RadialEndSpec {
        angle_a,
        angle_b,
        clamp_lo,
        clamp_hi,
        pin_radius: extent,
    }
}

fn gen_wedge(spec: &InitialCurveSpec) -> Result<PlanarCurve, CurveError> {
    let alpha = canonical_angles(spec)?;
    if alpha == 0.0 {
        // Degenerate wedge (beta = pi): straight line through the origin.
        let chain = [
            Vec2::new(-spec.extent, 0.0),
            Vec2::new(-spec.extent / 2.0, 0.0),
            Vec2::ZERO,
            Vec2::new(spec.extent / 2.0, 0.0),
            Vec2::new(spec.extent, 0.0),
        ];
        let points = densify(&chain, spec.n);
        let meta = clamp_indices_for(&points, PI, 0.0, spec.extent);
        return PlanarCurve::from_points_open(points, Some(meta));
    }
    let middle = [Vec2::new(-0.5, 0.0), Vec2::ZERO, Vec2::from_angle(alpha) * 0.5];
    assemble_with_tails(&middle, alpha, spec.extent, spec.n)
}

fn gen_bent_line(spec: &InitialCurveSpec, round_radius: f64) -> Result<PlanarCurve, CurveError> {
    let alpha = canonical_angles(spec)?;
    if round_radius <= 0.0 {
        return gen_wedge(spec);
    }
    if alpha == 0.0 {
        return gen_wedge(spec);
    }
    // Round the corner with a circular arc tangent to both rays: tangent
    // points at distance d = rho*tan(alpha/2) from the origin land exactly
    // on the rays.
    let rho = round_radius;
    let d = rho * (alpha / 2.0).tan();
    if d >= 0.4 * spec.extent {
        return Err(CurveError::BadSpec("round_radius too large for extent".into()));
    }
    let center = Vec2::new(-d, rho);
    let m = ((spec.n.saturating_sub(8)) / 2).clamp(16, 400);
    let mut middle = Vec::with_capacity(m + 2);
    middle.push(Vec2::new(-d.max(0.5), 0.0));
    for j in 0..=m {
        let phi = -PI / 2.0 + alpha * j as f64 / m as f64;
        middle.push(center + Vec2::from_angle(phi) * rho);
    }
    middle.push(Vec2::from_angle(alpha) * d.max(0.5));
    assemble_with_tails(&middle, alpha, spec.extent, spec.n)
}

fn gen_spiral(spec: &InitialCurveSpec, turns: f64) -> Result<PlanarCurve, CurveError> {
    let alpha = canonical_angles(spec)?;
    if turns <= 0.0 {
        return Err(CurveError::BadSpec("spiral needs turns > 0".into()));
    }
    // Angular position winds in by ~2*pi*turns and back out; radius dips
    // toward the origin mid-curve with a small asymmetry that keeps the
    // in-going and out-going arms radially separated.
    let m = ((spec.n.saturating_sub(8)) * 2 / 3).max(64);
    if spec.n < 128 {
        return Err(CurveError::BadSpec("spiral needs n >= 128".into()));
    }
    let mut middle = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let s = j as f64 / m as f64;
        let sp = (PI * s).sin();
        let theta = PI + (alpha - PI) * s + 2.0 * PI * turns * sp * sp;
        let r = 1.0 - 0.8 * sp * sp + 0.05 * (PI * s).cos();
        middle.push(Vec2::from_angle(theta) * r);
    }
    // Snap the end vertices exactly onto their rays.
    middle[0] = Vec2::new(-1.05, 0.0);
    let last = middle.len() - 1;
    middle[last] = Vec2::from_angle(alpha) * 0.95;
    assemble_with_tails(&middle, alpha, spec.extent, spec.n)
}

fn gen_zigzag(spec: &InitialCurveSpec, k: usize) -> Result<PlanarCurve, CurveError> {
    let alpha = canonical_angles(spec)?;
    if k == 0 || k > 50 {
        return Err(CurveError::BadSpec("zigzag needs 1 <= k <= 50 teeth".into()));
    }
    // Teeth dip into the lower half-plane, safely away from both end rays
    // (which live in the closed upper half-plane).
    let mut chain = vec![Vec2::new(-1.0, 0.0)];
    let x0 = -0.95;
    let x1 = 0.3;
    for j in 0..k {
        let xa = x0 + (x1 - x0) * (j as f64 + 0.5) / k as f64;
        let xb = x0 + (x1 - x0) * (j as f64 + 1.0) / k as f64;
        chain.push(Vec2::new(xa, -0.45));
        chain.push(Vec2::new(xb, 0.0));
    }
    chain.push(Vec2::from_angle(alpha) * 0.5);
    assemble_with_tails(&chain, alpha, spec.extent, spec.n)
}

fn gen_random_wiggle(spec: &InitialCurveSpec, seed: u64) -> Result<PlanarCurve, CurveError> {
    let alpha = canonical_angles(spec)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // Perturb the wedge path by a normal displacement field built from a
    // few random sine modes vanishing at the compact piece's ends.
    let modes: Vec<(f64, f64)> = (0..6)
        .map(|_| (rng.gen_range(-0.12..0.12), rng.gen_range(0.0..PI)))
        .collect();
    let m = ((spec.n.saturating_sub(8)) * 2 / 3).max(64);
    if spec.n < 128 {
        return Err(CurveError::BadSpec("random_wiggle needs n >= 128".into()));
    }
    let mut middle = Vec::with_capacity(m + 1);
    for j in 0..=m {
        let s = j as f64 / m as f64;
        // Base path: straight from (-1,0) to the corner, then out to the
        // ray at alpha, traced by s in [0,1].
        let base;
        let normal;
        if s < 0.5 {
            let t = s * 2.0;
            base = Vec2::new(-1.0 + t, 0.0);
            normal = Vec2::new(0.0, 1.0);
        } else {
            let t = (s - 0.5) * 2.0;
            base = Vec2::from_angle(alpha) * t;
            normal = Vec2::from_angle(alpha).rot90();
        }
        // Window vanishes at both ends and at the corner (s = 1/2) so the
        // two displaced halves cannot collide where the normals disagree.
        let window = (2.0 * PI * s).sin().powi(2);
        let mut disp = 0.0;
        for (idx, (amp, phase)) in modes.iter().enumerate() {
            disp += amp * ((idx as f64 + 1.0) * PI * s + phase).sin();
        }
        middle.push(base + normal * (disp * window));
    }
    middle[0] = Vec2::new(-1.0, 0.0);
    let last = middle.len() - 1;
    middle[last] = Vec2::from_angle(alpha);
    assemble_with_tails(&middle, alpha, spec.extent, spec.n)
}

fn gen_from_points(spec: &InitialCurveSpec, pts: &[(f64, f64)]) -> Result<PlanarCurve, CurveError> {
    if pts.len() < 3 {
        return Err(CurveError::BadSpec("from_points needs >= 3 points".into()));
    }
    let vertices: Vec<Vec2> = pts.iter().map(|&(x, y)| Vec2::new(x, y)).collect();
    let n = spec.n.max(vertices.len());
    let points = densify(&vertices, n);
    let meta = clamp_indices_for(&points, spec.angle_a, spec.angle_b, spec.extent);
    PlanarCurve::from_points_open(points, Some(meta))
}

/// Continuous tangent-angle lift. Node angles are averages of adjacent
/// segment directions; the lift is anchored so that in the canonical frame
/// (incoming ray at pi) the first node has psi = 0.
pub fn tangent_lift(curve: &PlanarCurve) -> Result<TangentField, CurveError> {
    let n = curve.n();
    let m = if curve.closed { n } else { n - 1 };
    let seg_dir = |j: usize| -> Vec2 {
        let a = curve.points[j % n];
        let b = curve.points[(j + 1) % n];
        (b - a).normalized()
    };
    // Unwrapped segment angles.
    let mut phi = Vec::with_capacity(m);
    phi.push(wrap_angle(seg_dir(0).angle()));
    for j in 1..m {
        let raw = seg_dir(j).angle();
        let prev = phi[j - 1];
        let jump = wrap_angle(raw - prev);
        if jump.abs() >= PI - UNWRAP_MARGIN {
            return Err(CurveError::UnwrapFailure {
                index: j,
                jump: jump.abs(),
            });
        }
        phi.push(prev + jump);
    }
    let mut psi = Vec::with_capacity(n);
    if curve.closed {
        for i in 0..n {
            // Anchor on the current segment so the lift starts near
            // phi[0] instead of picking up the loop's total turning.
            let cur = phi[i % m];
            let prev = phi[(i + m - 1) % m];
            let delta = wrap_angle(cur - prev);
            psi.push(cur - delta / 2.0);
        }
    } else {
        // Segment angles live at segment midpoints; extrapolate to the
        // end nodes so interior curvature stencils stay second order.
        psi.push(phi[0] - (phi[1] - phi[0]) / 2.0);
        for i in 1..n - 1 {
            psi.push((phi[i - 1] + phi[i]) / 2.0);
        }
        psi.push(phi[m - 1] + (phi[m - 1] - phi[m - 2]) / 2.0);
    }
    Ok(TangentField { psi })
}

/// Centered-difference curvature with one-sided endpoint stencils.
pub fn discrete_curvature(
    curve: &PlanarCurve,
    lift: &TangentField,
) -> Result<CurvatureField, CurveError> {
    let n = curve.n();
    let s = curve.arclengths();
    let psi = &lift.psi;
    let mut kappa = vec![0.0; n];
    for i in 1..n - 1 {
        let ds = s[i + 1] - s[i - 1];
        if ds == 0.0 {
            return Err(CurveError::DegenerateSegment(i - 1, i + 1));
        }
        kappa[i] = (psi[i + 1] - psi[i - 1]) / ds;
    }
    if curve.closed {
        let wrap = curve.points[0].dist(curve.points[n - 1]);
        let total = s[n - 1] + wrap;
        // Periodic stencils at the seam. The lift is continuous along
        // indices but jumps by the total turning across the seam; use
        // segment geometry directly instead.
        let dpsi0 = wrap_angle(psi[1] - psi[n - 1]);
        kappa[0] = dpsi0 / (s[1] + wrap);
        let dpsil = wrap_angle(psi[0] - psi[n - 2]);
        kappa[n - 1] = dpsil / (total - s[n - 2]);
    } else {
        kappa[0] = (psi[1] - psi[0]) / (s[1] - s[0]);
        kappa[n - 1] = (psi[n - 1] - psi[n - 2]) / (s[n - 1] - s[n - 2]);
    }
    Ok(CurvatureField {
        kappa,
        arclengths: s,
    })
}

/// Redistribute nodes at equal arclength spacing using shape-preserving
/// cubic interpolation of the coordinates. Clamp indices are recomputed
/// from actual ray membership.
pub fn resample_arclength(curve: &PlanarCurve, n: usize) -> Result<PlanarCurve, CurveError> {
    if n < 3 {
        return Err(CurveError::TooFewPoints(n));
    }
    let s = curve.arclengths();
    let xs: Vec<f64> = curve.points.iter().map(|p| p.x).collect();
    let ys: Vec<f64> = curve.points.iter().map(|p| p.y).collect();
    if curve.closed {
        // Periodic resampling: extend by the wrap segment on both sides.
        let total = curve.total_length();
        let n_old = curve.n();
        let mut se = Vec::with_capacity(n_old + 6);
        let mut xe = Vec::with_capacity(n_old + 6);
        let mut ye = Vec::with_capacity(n_old + 6);
        for k in 0..3 {
            let i = n_old - 3 + k;
            se.push(s[i] - total);
            xe.push(xs[i]);
            ye.push(ys[i]);
        }
        se.extend_from_slice(&s);
        xe.extend_from_slice(&xs);
        ye.extend_from_slice(&ys);
        for k in 0..3 {
            se.push(total + s[k]);
            xe.push(xs[k]);
            ye.push(ys[k]);
        }
        let fx = MonotoneCubic::new(se.clone(), xe)?;
        let fy = MonotoneCubic::new(se, ye)?;
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            let si = total * i as f64 / n as f64;
            points.push(Vec2::new(fx.eval(si), fy.eval(si)));
        }
        let params = (0..n).map(|i| i as f64 / n as f64).collect();
        return PlanarCurve::new(points, params, true, None);
    }
    let total = s[curve.n() - 1];
    let fx = MonotoneCubic::new(s.clone(), xs)?;
    let fy = MonotoneCubic::new(s, ys)?;
    let mut points = Vec::with_capacity(n);
    for i in 0..n {
        let si = total * i as f64 / (n - 1) as f64;
        points.push(Vec2::new(fx.eval(si), fy.eval(si)));
    }
    // Keep the endpoints bit-exact (pins must not drift).
    points[0] = curve.points[0];
    points[n - 1] = *curve.points.last().unwrap();
    let end_meta = curve.end_meta.map(|m| {
        let mut meta = clamp_indices_for(&points, m.angle_a, m.angle_b, m.pin_radius);
        // Stay conservative by one node: the interpolant's junction
        // interval mixes tail and interior data.
        meta.clamp_lo = meta.clamp_lo.saturating_sub(1);
        meta.clamp_hi = (meta.clamp_hi + 1).min(n - 1);
        meta
    });
    PlanarCurve::new(points, (0..n).map(|i| i as f64 / (n - 1) as f64).collect(), false, end_meta)
}

/// Report of an embeddedness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EmbedReport {
    Ok,
    Crossing { seg_a: usize, seg_b: usize },
}

/// Checks all non-adjacent segment pairs for intersections or near-contact
/// below `EMBED_TOL`.
pub fn embeddedness_check(curve: &PlanarCurve) -> EmbedReport {
    match first_crossing(curve) {
        None => EmbedReport::Ok,
        Some((i, j)) => EmbedReport::Crossing { seg_a: i, seg_b: j },
    }
}

fn first_crossing(curve: &PlanarCurve) -> Option<(usize, usize)> {
    let n = curve.n();
    let m = if curve.closed { n } else { n - 1 };
    let seg = |j: usize| (curve.points[j % n], curve.points[(j + 1) % n]);
    // Bounding boxes for cheap rejection.
    let boxes: Vec<(f64, f64, f64, f64)> = (0..m)
        .map(|j| {
            let (a, b) = seg(j);
            (a.x.min(b.x), a.x.max(b.x), a.y.min(b.y), a.y.max(b.y))
        })
        .collect();
    for i in 0..m {
        for j in (i + 2)..m {
            if curve.closed && i == 0 && j == m - 1 {
                continue; // adjacent across the seam
            }
            let (ix0, ix1, iy0, iy1) = boxes[i];
            let (jx0, jx1, jy0, jy1) = boxes[j];
            if jx0 > ix1 + EMBED_TOL
                || ix0 > jx1 + EMBED_TOL
                || jy0 > iy1 + EMBED_TOL
                || iy0 > jy1 + EMBED_TOL
            {
                continue;
            }
            let (a0, a1) = seg(i);
            let (b0, b1) = seg(j);
            if segment_segment_distance(a0, a1, b0, b1) <= EMBED_TOL {
                return Some((i, j));
            }
        }
    }
    None
}

/// Closed anticlockwise circle polyline (used by oracles and tests).
pub fn circle_curve(center: Vec2, radius: f64, n: usize) -> PlanarCurve {
    let points: Vec<Vec2> = (0..n)
        .map(|i| {
            let th = std::f64::consts::TAU * i as f64 / n as f64;
            center + Vec2::from_angle(th) * radius
        })
        .collect();
    let params = (0..n).map(|i| i as f64 / n as f64).collect();
    PlanarCurve::new(points, params, true, None).expect("circle is a valid curve")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(kind: GeneratorKind, alpha: f64, n: usize) -> InitialCurveSpec {
        InitialCurveSpec {
            kind,
            angle_a: PI,
            angle_b: alpha,
            n,
            extent: 8.0,
        }
    }

    #[test]
    fn wedge_is_radial_everywhere() {
        let c = build_initial_curve(&spec(GeneratorKind::Wedge, PI / 2.0, 1001)).unwrap();
        let meta = c.end_meta.unwrap();
        // For a wedge the clamp regions between them leave only the corner.
        assert!(meta.clamp_hi - meta.clamp_lo <= 2);
        assert_eq!(embeddedness_check(&c), EmbedReport::Ok);
    }

    #[test]
    fn circle_lift_and_curvature() {
        let c = circle_curve(Vec2::ZERO, 1.0, 720);
        let lift = tangent_lift(&c).unwrap();
        // Anticlockwise from (1,0): tangent starts near pi/2 and increases.
        for (i, &psi) in lift.psi.iter().enumerate() {
            let expected = PI / 2.0 + std::f64::consts::TAU * i as f64 / 720.0;
            assert!(
                (psi - expected).abs() < 1e-4,
                "node {i}: psi={psi}, expected {expected}"
            );
        }
        let curv = discrete_curvature(&c, &lift).unwrap();
        for &k in &curv.kappa {
            assert!((k - 1.0).abs() < 1e-4, "kappa={k}");
        }
    }

    #[test]
    fn radius_r_circle_curvature_scales() {
        let c = circle_curve(Vec2::new(3.0, -2.0), 2.5, 800);
        let lift = tangent_lift(&c).unwrap();
        let curv = discrete_curvature(&c, &lift).unwrap();
        for &k in &curv.kappa {
            assert!((k - 0.4).abs() < 1e-4);
        }
    }

    #[test]
    fn straight_segment_psi_zero() {
        let points: Vec<Vec2> = (0..10).map(|i| Vec2::new(i as f64, 0.0)).collect();
        let c = PlanarCurve::from_points_open(points, None).unwrap();
        let lift = tangent_lift(&c).unwrap();
        for &p in &lift.psi {
            assert_eq!(p, 0.0);
        }
    }

    #[test]
    fn spiral_turning_span_matches_exterior_angle_sum() {
        let c = build_initial_curve(&spec(GeneratorKind::Spiral { turns: 3.0 }, PI / 2.0, 3000))
            .unwrap();
        let lift = tangent_lift(&c).unwrap();
        // Independent oracle: angular position of nodes about the origin.
        let mut theta = c.points[0].angle();
        let mut max_theta = theta;
        for p in &c.points[1..] {
            let raw = p.angle();
            theta += wrap_angle(raw - theta);
            max_theta = max_theta.max(theta);
        }
        let span = max_theta - PI;
        // The linear drift toward the outgoing angle shaves up to alpha/2
        // off the peak of the winding bump.
        assert!(
            (span - 3.0 * std::f64::consts::TAU).abs() < 1.0,
            "winding span {span}"
        );
        // The tangent lift winds up and back down accordingly.
        let max_psi = lift.psi.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max_psi > 2.5 * std::f64::consts::TAU);
    }

    #[test]
    fn self_crossing_from_points_rejected() {
        let spec = InitialCurveSpec {
            kind: GeneratorKind::FromPoints {
                points: vec![(-3.0, 0.0), (1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0), (3.0, 0.0)],
            },
            angle_a: PI,
            angle_b: 0.0,
            n: 60,
            extent: 8.0,
        };
        match build_initial_curve(&spec) {
            Err(CurveError::SelfIntersection(_, _)) => {}
            other => panic!("expected self-intersection error, got {other:?}"),
        }
    }

    #[test]
    fn figure_eight_crossing_detected() {
        let mut points = Vec::new();
        for i in 0..40 {
            let t = std::f64::consts::TAU * i as f64 / 40.0;
            points.push(Vec2::new(t.sin(), (2.0 * t).sin()));
        }
        let params = (0..40).map(|i| i as f64 / 40.0).collect();
        let c = PlanarCurve::new(points, params, true, None).unwrap();
        assert!(matches!(
            embeddedness_check(&c),
            EmbedReport::Crossing { .. }
        ));
    }

    #[test]
    fn generators_embedded() {
        for kind in [
            GeneratorKind::BentLine { round_radius: 0.2 },
            GeneratorKind::Spiral { turns: 3.0 },
            GeneratorKind::Zigzag { k: 7 },
            GeneratorKind::RandomWiggle { seed: 42 },
        ] {
            for &alpha in &[PI / 4.0, PI / 2.0, 3.0 * PI / 4.0] {
                let c = build_initial_curve(&spec(kind.clone(), alpha, 1500)).unwrap();
                assert_eq!(embeddedness_check(&c), EmbedReport::Ok);
                let lift = tangent_lift(&c).unwrap();
                assert!(lift.psi[0].abs() < 1e-12, "canonical anchor");
            }
        }
    }

    #[test]
    fn resample_uniform_circle_fixed_point() {
        let c = circle_curve(Vec2::ZERO, 1.0, 400);
        let r = resample_arclength(&c, 400).unwrap();
        for i in 0..400 {
            assert!(c.points[i].dist(r.points[i]) < 1e-10);
        }
    }

    #[test]
    fn resample_preserves_turning() {
        let c = build_initial_curve(&spec(GeneratorKind::RandomWiggle { seed: 7 }, PI / 2.0, 2000))
            .unwrap();
        let lift = tangent_lift(&c).unwrap();
        let total = lift.psi[c.n() - 1] - lift.psi[0];
        let r = resample_arclength(&c, 2400).unwrap();
        let lift_r = tangent_lift(&r).unwrap();
        let total_r = lift_r.psi[r.n() - 1] - lift_r.psi[0];
        assert!((total - total_r).abs() < 1e-6, "{total} vs {total_r}");
    }

    #[test]
    fn grim_reaper_curvature_matches_analytic() {
        // Graph y = arcsin(e^{-x}) sampled finely; analytic kappa = e^{-x}.
        let n = 2000;
        let x0 = std::f64::consts::LN_2;
        let x1 = 6.0;
        let points: Vec<Vec2> = (0..n)
            .map(|i| {
                let x = x0 + (x1 - x0) * i as f64 / (n - 1) as f64;
                Vec2::new(x, (-x).exp().asin())
            })
            .collect();
        let c = PlanarCurve::from_points_open(points, None).unwrap();
        let lift = tangent_lift(&c).unwrap();
        let curv = discrete_curvature(&c, &lift).unwrap();
        // Nodes adjacent to the ends see the extrapolated endpoint psi and
        // are only first-order accurate; the interior is second order.
        for i in 2..n - 2 {
            let x = c.points[i].x;
            let expect = (-x).exp();
            assert!(
                (curv.kappa[i] - expect).abs() < 5e-5,
                "x={x}: kappa {} vs {expect}",
                curv.kappa[i]
            );
        }
        for i in [1, n - 2] {
            let expect = (-c.points[i].x).exp();
            assert!((curv.kappa[i] - expect).abs() < 5e-3);
        }
    }
}
