//! Geometric functionals on discrete curves: swept area with O(n) range
//! extrema, turning function, Harnack quantity, winding functions, support
//! function and polar-graph views.

use std::f64::consts::PI;

use thiserror::Error;

use crate::curve::{PlanarCurve, TangentField};
use crate::geom::wrap_angle;

#[derive(Debug, Error)]
pub enum FunctionalError {
    #[error("pair indices out of order: v={0} > w={1}")]
    PairOrder(usize, usize),
    #[error("node {0} coincides with the winding base")]
    CoincidentWithBase(usize),
    #[error("node {0} at the origin: polar angle undefined")]
    NodeAtOrigin(usize),
    #[error("winding unwrap failed at node {0}")]
    WindingUnwrap(usize),
}

/// Prefix integral of the swept-area form; A(v,w) = S(w) - S(v).
#[derive(Debug, Clone)]
pub struct SweptAreaPrefix {
    pub s: Vec<f64>,
}

/// Range extrema of the swept area with attaining index pairs.
#[derive(Debug, Clone, Copy)]
pub struct ExtremaBounds {
    pub a_minus: f64,
    pub a_plus: f64,
    pub witness_minus: (usize, usize),
    pub witness_plus: (usize, usize),
}

/// Continuous winding angle about a base node.
#[derive(Debug, Clone)]
pub struct WindingTrace {
    pub base: usize,
    pub theta: Vec<f64>,
}

/// Per-node signed distance from the origin to the tangent line.
#[derive(Debug, Clone)]
pub struct SupportField {
    pub d: Vec<f64>,
}

/// Curve re-read as a polar graph r(phi) with phi = pi - (polar angle).
#[derive(Debug, Clone)]
pub struct PolarGraphView {
    pub phis: Vec<f64>,
    pub rs: Vec<f64>,
    /// Prefix of the sector-area integral: v_prefix[i] = V(phis[0], phis[i]).
    pub v_prefix: Vec<f64>,
}

/// Exact per-segment prefix of the swept-area integrand: segment p -> q
/// contributes (q_x p_y - q_y p_x)/2.
pub fn swept_area_prefix(curve: &PlanarCurve) -> SweptAreaPrefix {
    let n = curve.n();
    let mut s = Vec::with_capacity(n);
    s.push(0.0);
    for i in 1..n {
        let p = curve.points[i - 1];
        let q = curve.points[i];
        s.push(s[i - 1] + 0.5 * (q.x * p.y - q.y * p.x));
    }
    SweptAreaPrefix { s }
}

impl SweptAreaPrefix {
    /// A(v,w) in O(1); exact prefix difference.
    pub fn area(&self, v: usize, w: usize) -> Result<f64, FunctionalError> {
        if v > w {
            return Err(FunctionalError::PairOrder(v, w));
        }
        Ok(self.s[w] - self.s[v])
    }

    /// Extra prefix entry for the closing segment of a closed curve.
    pub fn closing_term(curve: &PlanarCurve) -> f64 {
        let p = *curve.points.last().unwrap();
        let q = curve.points[0];
        0.5 * (q.x * p.y - q.y * p.x)
    }
}

/// Single O(n) scan: A+ = max_w (S(w) - min_{v<=w} S(v)), A- symmetric.
pub fn extrema_bounds(prefix: &SweptAreaPrefix) -> ExtremaBounds {
    let s = &prefix.s;
    let mut min_val = s[0];
    let mut min_idx = 0;
    let mut max_val = s[0];
    let mut max_idx = 0;
    let mut a_plus = 0.0;
    let mut witness_plus = (0, 0);
    let mut a_minus = 0.0;
    let mut witness_minus = (0, 0);
    for (w, &sw) in s.iter().enumerate() {
        if sw - min_val > a_plus {
            a_plus = sw - min_val;
            witness_plus = (min_idx, w);
        }
        if sw - max_val < a_minus {
            a_minus = sw - max_val;
            witness_minus = (max_idx, w);
        }
        if sw < min_val {
            min_val = sw;
            min_idx = w;
        }
        if sw > max_val {
            max_val = sw;
            max_idx = w;
        }
    }
    ExtremaBounds {
        a_minus,
        a_plus,
        witness_minus,
        witness_plus,
    }
}

/// Turning function Psi(v,w) = psi(w) - psi(v).
pub fn turning(lift: &TangentField, v: usize, w: usize) -> Result<f64, FunctionalError> {
    if v > w {
        return Err(FunctionalError::PairOrder(v, w));
    }
    Ok(lift.psi[w] - lift.psi[v])
}

/// Harnack quantity H(v,w,t) = A(v,w) - t*Psi(v,w).
pub fn harnack(
    prefix: &SweptAreaPrefix,
    lift: &TangentField,
    t: f64,
    v: usize,
    w: usize,
) -> Result<f64, FunctionalError> {
    Ok(prefix.area(v, w)? - t * turning(lift, v, w)?)
}

/// Continuous winding angle theta_base(u): the angle from T(base) to the
/// chord direction for u > base and to its negation for u < base, with
/// theta_base(base) = 0 from both sides.
pub fn winding_trace(
    curve: &PlanarCurve,
    lift: &TangentField,
    base: usize,
) -> Result<WindingTrace, FunctionalError> {
    let n = curve.n();
    let pv = curve.points[base];
    let psi_v = lift.psi[base];
    let half_seg = {
        let lo = if base > 0 {
            curve.points[base].dist(curve.points[base - 1])
        } else {
            f64::INFINITY
        };
        let hi = if base + 1 < n {
            curve.points[base].dist(curve.points[base + 1])
        } else {
            f64::INFINITY
        };
        0.5 * lo.min(hi)
    };
    let mut theta = vec![0.0; n];
    // Forward sweep: chord direction gamma(u) - gamma(base).
    let mut prev = 0.0;
    for u in base + 1..n {
        let chord = curve.points[u] - pv;
        let len = chord.norm();
        if len == 0.0 {
            return Err(FunctionalError::CoincidentWithBase(u));
        }
        let raw = if len < half_seg {
            // Too close to the base for a stable chord: tangent limit.
            prev
        } else {
            let jump = wrap_angle(chord.angle() - psi_v - prev);
            if jump.abs() >= PI - 1e-9 {
                return Err(FunctionalError::WindingUnwrap(u));
            }
            prev + jump
        };
        theta[u] = raw;
        prev = raw;
    }
    // Backward sweep: negated chord, i.e. direction gamma(base) - gamma(u).
    prev = 0.0;
    for u in (0..base).rev() {
        let chord = pv - curve.points[u];
        let len = chord.norm();
        if len == 0.0 {
            return Err(FunctionalError::CoincidentWithBase(u));
        }
        let raw = if len < half_seg {
            prev
        } else {
            let jump = wrap_angle(chord.angle() - psi_v - prev);
            if jump.abs() >= PI - 1e-9 {
                return Err(FunctionalError::WindingUnwrap(u));
            }
            prev + jump
        };
        theta[u] = raw;
        prev = raw;
    }
    Ok(WindingTrace { base, theta })
}

/// Residual of the identity Psi(c,d) = theta_c(d) - theta_d(c), computed
/// with two independent winding unwraps.
pub fn winding_identity_check(
    curve: &PlanarCurve,
    lift: &TangentField,
    c: usize,
    d: usize,
) -> Result<f64, FunctionalError> {
    if c >= d {
        return Err(FunctionalError::PairOrder(c, d));
    }
    let tc = winding_trace(curve, lift, c)?;
    let td = winding_trace(curve, lift, d)?;
    let psi_cd = turning(lift, c, d)?;
    Ok((psi_cd - (tc.theta[d] - td.theta[c])).abs())
}

/// Support function D = <gamma, -nu> with nu = -*T = (sin psi, -cos psi),
/// so D = -x sin(psi) + y cos(psi).
pub fn support_function(curve: &PlanarCurve, lift: &TangentField) -> SupportField {
    let d = curve
        .points
        .iter()
        .zip(&lift.psi)
        .map(|(p, &psi)| -p.x * psi.sin() + p.y * psi.cos())
        .collect();
    SupportField { d }
}

/// Result of attempting to read the curve as a polar graph.
pub enum PolarResult {
    Graph(PolarGraphView),
    /// First polar angle encountered twice.
    NotGraphical { witness_phi: f64 },
}

/// Reads the curve in polar coordinates phi = pi - theta(polar); succeeds
/// iff phi is non-decreasing along the curve. Exact ties are tolerated:
/// they arise when nodes hug an asymptotic ray so closely that the angular
/// increment falls below one ulp of phi.
pub fn polar_view(curve: &PlanarCurve) -> Result<PolarResult, FunctionalError> {
    let n = curve.n();
    let mut phis = Vec::with_capacity(n);
    let mut rs = Vec::with_capacity(n);
    let mut theta_prev = 0.0;
    for (i, p) in curve.points.iter().enumerate() {
        let r = p.norm();
        if r == 0.0 {
            return Err(FunctionalError::NodeAtOrigin(i));
        }
        let raw = p.angle();
        let theta = if i == 0 {
            raw
        } else {
            theta_prev + wrap_angle(raw - theta_prev)
        };
        theta_prev = theta;
        phis.push(PI - theta);
        rs.push(r);
    }
    for i in 1..n {
        let drop = phis[i - 1] - phis[i];
        if drop > 0.0 {
            // Round-off in atan2 jitters phi by an ulp or two where the
            // curve hugs a ray; clamp those, reject anything larger.
            if drop <= 1e-13 * phis[i - 1].abs().max(1.0) {
                phis[i] = phis[i - 1];
            } else {
                return Ok(PolarResult::NotGraphical {
                    witness_phi: phis[i],
                });
            }
        }
    }
    let mut v_prefix = Vec::with_capacity(n);
    v_prefix.push(0.0);
    for i in 1..n {
        let dphi = phis[i] - phis[i - 1];
        let avg_r2 = 0.5 * (rs[i] * rs[i] + rs[i - 1] * rs[i - 1]);
        v_prefix.push(v_prefix[i - 1] + 0.5 * avg_r2 * dphi);
    }
    Ok(PolarResult::Graph(PolarGraphView { phis, rs, v_prefix }))
}

impl PolarGraphView {
    /// Sector area V(phis[v], phis[w]).
    pub fn v(&self, v: usize, w: usize) -> Result<f64, FunctionalError> {
        if v > w {
            return Err(FunctionalError::PairOrder(v, w));
        }
        Ok(self.v_prefix[w] - self.v_prefix[v])
    }

    /// Linear interpolation of r at a polar parameter phi.
    pub fn r_at(&self, phi: f64) -> Option<f64> {
        let n = self.phis.len();
        if phi < self.phis[0] || phi > self.phis[n - 1] {
            return None;
        }
        let i = match self.phis.partition_point(|&p| p <= phi) {
            0 => 0,
            p => (p - 1).min(n - 2),
        };
        let width = self.phis[i + 1] - self.phis[i];
        if width == 0.0 {
            return Some(self.rs[i]);
        }
        let t = (phi - self.phis[i]) / width;
        Some(self.rs[i] * (1.0 - t) + self.rs[i + 1] * t)
    }

    /// Largest node index whose phi does not exceed the given value.
    pub fn node_at_phi(&self, phi: f64) -> usize {
        match self.phis.partition_point(|&p| p <= phi) {
            0 => 0,
            p => p - 1,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{
        build_initial_curve, circle_curve, tangent_lift, GeneratorKind, InitialCurveSpec,
        PlanarCurve,
    };
    use crate::geom::Vec2;
    use proptest::prelude::*;

    const FULL_CIRCLE_AREA_TOL: f64 = 1e-9;
    const WINDING_RESIDUAL_TOL: f64 = 1e-9;
    const CHORD_ANGLE_TOL: f64 = 1e-6;

    fn quarter_circle(n: usize) -> PlanarCurve {
        let points: Vec<Vec2> = (0..n)
            .map(|i| {
                let t = PI / 2.0 * i as f64 / (n - 1) as f64;
                Vec2::from_angle(t)
            })
            .collect();
        PlanarCurve::from_points_open(points, None).unwrap()
    }

    #[test]
    fn anticlockwise_circle_sweeps_minus_pi() {
        // Inscribed-polygon area error is ~2*pi^3/(3n^2); n = 2e5 puts it
        // below the 1e-9 target.
        let c = circle_curve(Vec2::ZERO, 1.0, 200_000);
        let prefix = swept_area_prefix(&c);
        let total = prefix.s.last().unwrap() + SweptAreaPrefix::closing_term(&c);
        assert!((total + PI).abs() < FULL_CIRCLE_AREA_TOL, "total={total}");
    }

    #[test]
    fn radial_polyline_prefix_vanishes() {
        let points: Vec<Vec2> = (1..20)
            .map(|i| Vec2::from_angle(0.7) * (i as f64 * 0.5))
            .collect();
        let c = PlanarCurve::from_points_open(points, None).unwrap();
        let prefix = swept_area_prefix(&c);
        // The cross products cancel to rounding error on oblique rays
        // (and exactly on the coordinate axes).
        for &s in &prefix.s {
            assert!(s.abs() < 1e-13);
        }
    }

    #[test]
    fn extrema_frozen_prefix_case() {
        let prefix = SweptAreaPrefix {
            s: vec![0.0, 1.0, -2.0, 3.0],
        };
        let e = extrema_bounds(&prefix);
        assert_eq!(e.a_plus, 5.0);
        assert_eq!(e.witness_plus, (2, 3));
        assert_eq!(e.a_minus, -3.0);
        assert_eq!(e.witness_minus, (1, 2));
    }

    #[test]
    fn turning_telescopes_exactly() {
        let c = quarter_circle(200);
        let lift = tangent_lift(&c).unwrap();
        let a = turning(&lift, 10, 60).unwrap();
        let b = turning(&lift, 60, 150).unwrap();
        let ab = turning(&lift, 10, 150).unwrap();
        assert_eq!(a + b, ab);
        let quarter = turning(&lift, 0, 199).unwrap();
        assert!((quarter - PI / 2.0).abs() < CHORD_ANGLE_TOL);
    }

    #[test]
    fn quarter_circle_winding_values() {
        let c = quarter_circle(800);
        let lift = tangent_lift(&c).unwrap();
        let n = c.n();
        let tc = winding_trace(&c, &lift, 0).unwrap();
        let td = winding_trace(&c, &lift, n - 1).unwrap();
        assert!((tc.theta[n - 1] - PI / 4.0).abs() < CHORD_ANGLE_TOL);
        assert!((td.theta[0] + PI / 4.0).abs() < CHORD_ANGLE_TOL);
        let res = winding_identity_check(&c, &lift, 0, n - 1).unwrap();
        assert!(res < WINDING_RESIDUAL_TOL, "residual {res}");
    }

    #[test]
    fn straight_segment_winding_zero() {
        let points: Vec<Vec2> = (0..50).map(|i| Vec2::new(i as f64 * 0.1, 2.0)).collect();
        let c = PlanarCurve::from_points_open(points, None).unwrap();
        let lift = tangent_lift(&c).unwrap();
        let t = winding_trace(&c, &lift, 25).unwrap();
        for &th in &t.theta {
            assert!(th.abs() < 1e-12);
        }
        assert!(winding_identity_check(&c, &lift, 3, 40).unwrap() < 1e-12);
    }

    #[test]
    fn support_of_horizontal_line() {
        let h = 1.7;
        let points: Vec<Vec2> = (0..50)
            .map(|i| Vec2::new(-2.0 + i as f64 * 0.1, h))
            .collect();
        let c = PlanarCurve::from_points_open(points, None).unwrap();
        let lift = tangent_lift(&c).unwrap();
        let d = support_function(&c, &lift);
        for &v in &d.d {
            assert!((v - h).abs() < 1e-12);
        }
    }

    #[test]
    fn harnack_at_time_zero_is_area() {
        let spec = InitialCurveSpec {
            kind: GeneratorKind::Zigzag { k: 5 },
            angle_a: PI,
            angle_b: PI / 3.0,
            n: 500,
            extent: 8.0,
        };
        let c = build_initial_curve(&spec).unwrap();
        let lift = tangent_lift(&c).unwrap();
        let prefix = swept_area_prefix(&c);
        let h = harnack(&prefix, &lift, 0.0, 40, 400).unwrap();
        assert_eq!(h, prefix.area(40, 400).unwrap());
    }

    #[test]
    fn spiral_not_polar_graphical() {
        let spec = InitialCurveSpec {
            kind: GeneratorKind::Spiral { turns: 3.0 },
            angle_a: PI,
            angle_b: PI / 2.0,
            n: 2000,
            extent: 8.0,
        };
        let c = build_initial_curve(&spec).unwrap();
        match polar_view(&c).unwrap() {
            PolarResult::NotGraphical { .. } => {}
            PolarResult::Graph(_) => panic!("spiral cannot be a polar graph"),
        }
    }

    #[test]
    fn reflection_negates_functionals_exactly() {
        let spec = InitialCurveSpec {
            kind: GeneratorKind::RandomWiggle { seed: 3 },
            angle_a: PI,
            angle_b: PI / 2.0,
            n: 600,
            extent: 8.0,
        };
        let c = build_initial_curve(&spec).unwrap();
        let r = c.reflected_x();
        let pc = swept_area_prefix(&c);
        let pr = swept_area_prefix(&r);
        for i in 0..c.n() {
            assert_eq!(pc.s[i], -pr.s[i]);
        }
        let lc = tangent_lift(&c).unwrap();
        let lr = tangent_lift(&r).unwrap();
        let tc = turning(&lc, 17, 580).unwrap();
        let tr = turning(&lr, 17, 580).unwrap();
        assert_eq!(tc, -tr);
    }

    #[test]
    fn reflect_reverse_remaps_prefix_differences() {
        let spec = InitialCurveSpec {
            kind: GeneratorKind::Zigzag { k: 4 },
            angle_a: PI,
            angle_b: 2.0 * PI / 3.0,
            n: 400,
            extent: 8.0,
        };
        let c = build_initial_curve(&spec).unwrap();
        let rr = c.reflected_reversed();
        let pc = swept_area_prefix(&c);
        let pr = swept_area_prefix(&rr);
        let n = c.n();
        // (v,w) on the original maps to (n-1-w, n-1-v) on the transform
        // with A invariant; the reversed prefix accumulates in the
        // opposite order, so only rounding noise separates the two.
        for &(v, w) in &[(0usize, n - 1), (10, 250), (33, 34), (100, 399 - 17)] {
            let a1 = pc.area(v, w).unwrap();
            let a2 = pr.area(n - 1 - w, n - 1 - v).unwrap();
            assert!((a1 - a2).abs() < 1e-12, "pair ({v},{w}): {a1} vs {a2}");
        }
    }

    proptest! {
        #[test]
        fn extrema_scan_matches_brute_force(vals in proptest::collection::vec(-100.0f64..100.0, 2..120)) {
            let mut s = vec![0.0];
            s.extend(vals.iter().cloned());
            let prefix = SweptAreaPrefix { s: s.clone() };
            let e = extrema_bounds(&prefix);
            let mut bf_plus = 0.0f64;
            let mut bf_minus = 0.0f64;
            for v in 0..s.len() {
                for w in v..s.len() {
                    bf_plus = bf_plus.max(s[w] - s[v]);
                    bf_minus = bf_minus.min(s[w] - s[v]);
                }
            }
            prop_assert_eq!(e.a_plus, bf_plus);
            prop_assert_eq!(e.a_minus, bf_minus);
            prop_assert_eq!(prefix.area(e.witness_plus.0, e.witness_plus.1).unwrap(), bf_plus);
            prop_assert_eq!(prefix.area(e.witness_minus.0, e.witness_minus.1).unwrap(), bf_minus);
        }

        #[test]
        fn winding_identity_on_random_subarcs(seed in 0u64..1000, c_frac in 0.05f64..0.45, d_frac in 0.55f64..0.95) {
            let spec = InitialCurveSpec {
                kind: GeneratorKind::RandomWiggle { seed },
                angle_a: PI,
                angle_b: PI / 2.0,
                n: 300,
                extent: 8.0,
            };
            let curve = build_initial_curve(&spec).unwrap();
            let lift = tangent_lift(&curve).unwrap();
            let c = (c_frac * 299.0) as usize;
            let d = (d_frac * 299.0) as usize;
            let res = winding_identity_check(&curve, &lift, c, d).unwrap();
            prop_assert!(res < WINDING_RESIDUAL_TOL, "residual {}", res);
        }
    }
}
