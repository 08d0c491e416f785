//! Path length in a norm and the intrinsic metric on its unit sphere.
//!
//! In the plane every path on `S_X` between two points covers one of the two
//! boundary arcs joining them, so the intrinsic distance is the shorter arc.
//! Arc lengths are suprema of inscribed polyline lengths; they are computed by
//! uniform dyadic refinement of the angular parameter (exactly, by a vertex
//! walk, for polygonal balls).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::norms::{polar_angle, NormSpec, PolygonBall};
use crate::vec2::Vec2;

/// Default relative stopping tolerance of the refinement.
pub const DEFAULT_TOL: f64 = 1e-8;
/// Largest partition the refinement may reach.
pub const SEGMENT_CAP: usize = 1 << 20;
/// Allowed deviation of `‖x‖_X` from 1 for points declared on the sphere.
pub const SPHERE_TOL: f64 = 1e-7;

const INITIAL_SEGMENTS_PER_TURN: usize = 64;

/// Ordered points with at least two entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolylinePath {
    points: Vec<Vec2>,
    on_sphere: bool,
}

impl PolylinePath {
    pub fn new(points: Vec<Vec2>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::InvalidArgument(format!(
                "a path needs at least 2 points, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidArgument("path points must be finite".into()));
        }
        Ok(PolylinePath {
            points,
            on_sphere: false,
        })
    }

    /// A path whose vertices all lie on the unit sphere of `spec`.
    pub fn on_sphere(spec: &NormSpec, points: Vec<Vec2>) -> Result<Self> {
        let mut path = PolylinePath::new(points)?;
        for p in &path.points {
            let n = spec.eval(*p);
            if (n - 1.0).abs() > SPHERE_TOL {
                return Err(Error::OffSphere { norm: n });
            }
        }
        path.on_sphere = true;
        Ok(path)
    }

    pub fn points(&self) -> &[Vec2] {
        &self.points
    }

    pub fn is_on_sphere(&self) -> bool {
        self.on_sphere
    }
}

/// `Σ ‖p_{j+1} − p_j‖_X`.
pub fn polyline_length(spec: &NormSpec, path: &PolylinePath) -> f64 {
    chain_length(spec, &path.points)
}

fn chain_length(spec: &NormSpec, pts: &[Vec2]) -> f64 {
    pts.windows(2).map(|w| spec.eval(w[1] - w[0])).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ArcChoice {
    Ccw,
    Cw,
}

/// An intrinsic distance or arc length with its bracket.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistanceResult {
    pub value: f64,
    /// Length of the final inscribed polyline.
    pub lower: f64,
    /// `lower` plus the increase observed at the last refinement.
    pub upper: f64,
    pub segments: usize,
    pub arc_choice: ArcChoice,
}

impl DistanceResult {
    fn zero() -> Self {
        DistanceResult {
            value: 0.0,
            lower: 0.0,
            upper: 0.0,
            segments: 0,
            arc_choice: ArcChoice::Ccw,
        }
    }

    fn exact(value: f64, segments: usize) -> Self {
        DistanceResult {
            value,
            lower: value,
            upper: value,
            segments,
            arc_choice: ArcChoice::Ccw,
        }
    }
}

fn check_arc_args(theta_a: f64, theta_b: f64, tol: f64) -> Result<()> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    if !theta_a.is_finite() || !theta_b.is_finite() {
        return Err(Error::InvalidArgument("arc endpoints must be finite".into()));
    }
    if theta_b < theta_a || theta_b - theta_a > 2.0 * PI * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "need θa ≤ θb ≤ θa + 2π, got [{theta_a}, {theta_b}]"
        )));
    }
    Ok(())
}

/// X-length of the sphere arc `θ ↦ sphere_point(θ)` over `[θa, θb]`.
///
/// Polygonal balls are measured exactly by walking the vertices inside the
/// interval; other norms go through [`arc_length_refined`].
pub fn arc_length(spec: &NormSpec, theta_a: f64, theta_b: f64, tol: f64) -> Result<DistanceResult> {
    check_arc_args(theta_a, theta_b, tol)?;
    if theta_a == theta_b {
        return Ok(DistanceResult::zero());
    }
    match spec.as_polygon() {
        Some(poly) => Ok(vertex_walk(spec, &poly, theta_a, theta_b)),
        None => arc_length_refined(spec, theta_a, theta_b, tol, SEGMENT_CAP),
    }
}

/// Exact arc length on a polygonal sphere: endpoints plus every vertex strictly
/// inside the angular interval.
pub fn vertex_walk(spec: &NormSpec, poly: &PolygonBall, theta_a: f64, theta_b: f64) -> DistanceResult {
    let mut inner: Vec<(f64, Vec2)> = poly
        .ordered_vertices()
        .zip(poly.vertex_angles())
        .filter_map(|(v, &phi)| {
            let t = theta_a + (phi - theta_a).rem_euclid(2.0 * PI);
            (t > theta_a + 1e-15 && t < theta_b - 1e-15).then_some((t, v))
        })
        .collect();
    inner.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut pts = Vec::with_capacity(inner.len() + 2);
    pts.push(spec.sphere_point(theta_a));
    pts.extend(inner.into_iter().map(|(_, v)| v));
    pts.push(spec.sphere_point(theta_b));
    let len = chain_length(spec, &pts);
    DistanceResult::exact(len, pts.len() - 1)
}

/// Dyadic refinement: the partition of `[θa, θb]` is doubled until the
/// relative increase of the inscribed length drops below `tol`. Each level
/// refines the previous one, so inscribed lengths never decrease and every
/// level is a lower bound.
///
/// The partition is uniform in θ unless the sphere has directions of unbounded
/// curvature (see [`NormSpec::singular_directions`]). Then the interval is cut
/// at those directions and each piece is parametrized by a smooth step that
/// clusters points at its ends, which restores second-order convergence.
pub fn arc_length_refined(
    spec: &NormSpec,
    theta_a: f64,
    theta_b: f64,
    tol: f64,
    segment_cap: usize,
) -> Result<DistanceResult> {
    check_arc_args(theta_a, theta_b, tol)?;
    let span = theta_b - theta_a;
    if span == 0.0 {
        return Ok(DistanceResult::zero());
    }
    let pieces = arc_pieces(spec, theta_a, theta_b);
    let graded = pieces.len() > 1 || !spec.singular_directions().is_empty();
    let per_piece: Vec<usize> = pieces
        .iter()
        .map(|(a, b)| {
            let share = ((b - a) / (2.0 * PI) * INITIAL_SEGMENTS_PER_TURN as f64).ceil() as usize;
            share.max(if graded { 2 } else { 4 })
        })
        .collect();
    let mut level = 0u32;
    let mut chain = Chain::new(spec, &pieces, &per_piece, graded);
    let mut prev = chain.length();
    loop {
        let n_next: usize = per_piece.iter().map(|n| n << (level + 1)).sum();
        if n_next > segment_cap {
            return Err(Error::NonConvergence {
                lower: prev,
                upper: f64::INFINITY,
                segments: per_piece.iter().map(|n| n << level).sum(),
            });
        }
        level += 1;
        chain.refine();
        let len = chain.length().max(prev);
        let increase = len - prev;
        if increase <= tol * len {
            return Ok(DistanceResult {
                value: len,
                lower: len,
                upper: len + increase,
                segments: n_next,
                arc_choice: ArcChoice::Ccw,
            });
        }
        prev = len;
    }
}

/// `[θa, θb]` cut at the singular directions strictly inside it.
fn arc_pieces(spec: &NormSpec, theta_a: f64, theta_b: f64) -> Vec<(f64, f64)> {
    let mut cuts: Vec<f64> = spec
        .singular_directions()
        .into_iter()
        .map(|d| theta_a + (polar_angle(d) - theta_a).rem_euclid(2.0 * PI))
        .filter(|&t| t > theta_a + 1e-9 && t < theta_b - 1e-9)
        .collect();
    cuts.sort_by(f64::total_cmp);
    let mut bounds = vec![theta_a];
    bounds.extend(cuts);
    bounds.push(theta_b);
    bounds.windows(2).map(|w| (w[0], w[1])).collect()
}

/// Smooth step on `[0, 1]` with vanishing first and second derivatives at
/// both ends.
fn grade(u: f64) -> f64 {
    let (a, b) = (u * u * u, (1.0 - u) * (1.0 - u) * (1.0 - u));
    a / (a + b)
}

/// Inscribed chains of every piece at the current refinement level. Levels
/// are nested, so refining only evaluates the new midpoints.
struct Chain<'a> {
    spec: &'a NormSpec,
    pieces: &'a [(f64, f64)],
    graded: bool,
    points: Vec<Vec<Vec2>>,
}

impl<'a> Chain<'a> {
    fn new(spec: &'a NormSpec, pieces: &'a [(f64, f64)], per_piece: &[usize], graded: bool) -> Self {
        let mut chain = Chain { spec, pieces, graded, points: Vec::with_capacity(pieces.len()) };
        for (i, &n) in per_piece.iter().enumerate() {
            let pts = (0..=n).map(|k| chain.point(i, k, n)).collect();
            chain.points.push(pts);
        }
        chain
    }

    /// Point `k` of `n` on piece `i`. Adjacent pieces share their endpoint exactly.
    fn point(&self, i: usize, k: usize, n: usize) -> Vec2 {
        let (a, b) = self.pieces[i];
        let theta = if k == 0 {
            a
        } else if k == n {
            b
        } else {
            let u = k as f64 / n as f64;
            a + (b - a) * if self.graded { grade(u) } else { u }
        };
        self.spec.sphere_point(theta)
    }

    fn refine(&mut self) {
        for i in 0..self.points.len() {
            let n = 2 * (self.points[i].len() - 1);
            let mut next = Vec::with_capacity(n + 1);
            for (j, &p) in self.points[i].iter().enumerate() {
                if j > 0 {
                    next.push(self.point(i, 2 * j - 1, n));
                }
                next.push(p);
            }
            self.points[i] = next;
        }
    }

    fn length(&self) -> f64 {
        self.points
            .iter()
            .flat_map(|pts| pts.windows(2))
            .map(|w| self.spec.eval(w[1] - w[0]))
            .sum()
    }
}

/// Length of the whole unit sphere measured in its own norm.
pub fn circumference(spec: &NormSpec, tol: f64) -> Result<DistanceResult> {
    arc_length(spec, 0.0, 2.0 * PI, tol)
}

fn check_on_sphere(spec: &NormSpec, p: Vec2) -> Result<()> {
    if !p.is_finite() {
        return Err(Error::InvalidArgument("points must be finite".into()));
    }
    let n = spec.eval(p);
    if (n - 1.0).abs() > SPHERE_TOL {
        return Err(Error::OffSphere { norm: n });
    }
    Ok(())
}

/// Intrinsic distance between `x, y ∈ S_X`: the shorter of the counterclockwise
/// and clockwise boundary arcs. Arcs equal within `tol` resolve to
/// counterclockwise.
pub fn intrinsic_distance(spec: &NormSpec, x: Vec2, y: Vec2, tol: f64) -> Result<DistanceResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    check_on_sphere(spec, x)?;
    check_on_sphere(spec, y)?;
    if x == y {
        return Ok(DistanceResult::zero());
    }
    let tx = polar_angle(x);
    let ty = polar_angle(y);
    let span = (ty - tx).rem_euclid(2.0 * PI);
    if span == 0.0 {
        return Ok(DistanceResult::zero());
    }
    let ccw = arc_length(spec, tx, tx + span, tol)?;
    let cw = arc_length(spec, ty, ty + (2.0 * PI - span), tol)?;
    let tie = tol * ccw.value.max(cw.value);
    if cw.value < ccw.value - tie {
        Ok(DistanceResult {
            arc_choice: ArcChoice::Cw,
            ..cw
        })
    } else {
        Ok(ccw)
    }
}

/// `d(x, y) / ‖x − y‖_X` for distinct sphere points.
pub fn distance_ratio(spec: &NormSpec, x: Vec2, y: Vec2, tol: f64) -> Result<f64> {
    if x == y {
        return Err(Error::CoincidentPoints("ratio needs distinct points"));
    }
    let d = intrinsic_distance(spec, x, y, tol)?;
    Ok(d.value / spec.eval(x - y))
}

/// Great-circle distance `2·arcsin(‖x − y‖_E / 2)` on the Euclidean unit circle.
pub fn euclidean_intrinsic_oracle(x: Vec2, y: Vec2) -> Result<f64> {
    for p in [x, y] {
        let n = p.norm();
        if !((n - 1.0).abs() <= 1e-9) {
            return Err(Error::OffCircle { norm: n });
        }
    }
    Ok(2.0 * ((x - y).norm() / 2.0).min(1.0).asin())
}

/// The θ in `[0, 2π)` with `radial_project(v) = (cos θ, sin θ)`.
pub fn angle_of(v: Vec2) -> Result<f64> {
    if v == Vec2::ZERO {
        return Err(Error::ZeroVector("v"));
    }
    if !v.is_finite() {
        return Err(Error::InvalidArgument("v must be finite".into()));
    }
    Ok(polar_angle(v))
}

/// Cumulative inscribed lengths of the sphere sampled at `n` equally spaced
/// angles, for cheap repeated arc queries. Queries are inscribed-polyline
/// lengths, so they never exceed the true arc length. Polygonal balls are
/// answered exactly by [`vertex_walk`].
#[derive(Debug, Clone)]
pub struct SphereArcTable {
    spec: NormSpec,
    polygon: Option<PolygonBall>,
    points: Vec<Vec2>,
    /// `cumulative[k]` is the length from angle 0 to grid point `k`; `cumulative[n]` is the total.
    cumulative: Vec<f64>,
}

impl SphereArcTable {
    pub fn new(spec: &NormSpec, n: usize) -> Self {
        let polygon = spec.as_polygon();
        let n = if polygon.is_some() { 4 } else { n.max(8) };
        let points: Vec<Vec2> = (0..n)
            .map(|k| spec.sphere_point(2.0 * PI * k as f64 / n as f64))
            .collect();
        let mut cumulative = Vec::with_capacity(n + 1);
        cumulative.push(0.0);
        let mut acc = 0.0;
        for k in 0..n {
            acc += spec.eval(points[(k + 1) % n] - points[k]);
            cumulative.push(acc);
        }
        SphereArcTable {
            spec: spec.clone(),
            polygon,
            points,
            cumulative,
        }
    }

    pub fn spec(&self) -> &NormSpec {
        &self.spec
    }

    pub fn total(&self) -> f64 {
        match &self.polygon {
            Some(poly) => vertex_walk(&self.spec, poly, 0.0, 2.0 * PI).value,
            None => self.cumulative[self.points.len()],
        }
    }

    fn unwrapped(&self, k: i64) -> (Vec2, f64) {
        let n = self.points.len() as i64;
        let turns = k.div_euclid(n);
        let idx = k.rem_euclid(n) as usize;
        (
            self.points[idx],
            turns as f64 * self.cumulative[n as usize] + self.cumulative[idx],
        )
    }

    /// Arc length over `[θa, θb]`, `θa ≤ θb ≤ θa + 2π`.
    pub fn arc(&self, theta_a: f64, theta_b: f64) -> f64 {
        if let Some(poly) = &self.polygon {
            return vertex_walk(&self.spec, poly, theta_a, theta_b).value;
        }
        let h = 2.0 * PI / self.points.len() as f64;
        let pa = self.spec.sphere_point(theta_a);
        let pb = self.spec.sphere_point(theta_b);
        let ka = (theta_a / h).ceil() as i64;
        let kb = (theta_b / h).floor() as i64;
        if ka > kb {
            return self.spec.eval(pb - pa);
        }
        let (ga, ca) = self.unwrapped(ka);
        let (gb, cb) = self.unwrapped(kb);
        self.spec.eval(ga - pa) + (cb - ca) + self.spec.eval(pb - gb)
    }

    /// Shorter of the two arcs between the sphere points at `θx` and `θy`.
    pub fn distance(&self, theta_x: f64, theta_y: f64) -> f64 {
        let span = (theta_y - theta_x).rem_euclid(2.0 * PI);
        if span == 0.0 {
            return 0.0;
        }
        let ccw = self.arc(theta_x, theta_x + span);
        let cw = self.arc(theta_y, theta_y + 2.0 * PI - span);
        ccw.min(cw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    #[test]
    fn polyline_examples() {
        let path = PolylinePath::new(vec![Vec2::new(1.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0)]).unwrap();
        assert_eq!(polyline_length(&NormSpec::linf(), &path), 3.0);
        let a = Vec2::new(0.3, 0.2);
        assert_eq!(polyline_length(&NormSpec::l1(), &PolylinePath::new(vec![a, a]).unwrap()), 0.0);
        let chord = PolylinePath::new(vec![Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]).unwrap();
        assert_eq!(polyline_length(&NormSpec::l2(), &chord), 2f64.sqrt());
        assert!(PolylinePath::new(vec![a]).is_err());
        assert!(PolylinePath::on_sphere(&NormSpec::l2(), vec![Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)]).is_err());
    }

    #[test]
    fn arc_examples() {
        let q = arc_length(&NormSpec::l2(), 0.0, FRAC_PI_2, 1e-8).unwrap();
        assert_abs_diff_eq!(q.value, FRAC_PI_2, epsilon = 1e-6);
        assert!(q.lower <= FRAC_PI_2 && FRAC_PI_2 <= q.upper + 1e-15);

        let q = arc_length(&NormSpec::linf(), 0.0, FRAC_PI_2, 1e-8).unwrap();
        assert_abs_diff_eq!(q.value, 2.0, epsilon = 1e-6);
        let z = arc_length(&NormSpec::lp(3.0).unwrap(), 1.0, 1.0, 1e-8).unwrap();
        assert_eq!(z.value, 0.0);
    }

    /// Brute force: a very fine inscribed polyline on the square's quarter arc.
    #[test]
    fn square_quarter_arc_brute_force() {
        let n = 200_000;
        let pts: Vec<Vec2> = (0..=n).map(|k| NormSpec::linf().sphere_point(FRAC_PI_2 * k as f64 / n as f64)).collect();
        let len = chain_length(&NormSpec::linf(), &pts);
        assert_abs_diff_eq!(len, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn arc_argument_errors() {
        assert!(arc_length(&NormSpec::l2(), 1.0, 0.5, 1e-8).is_err());
        assert!(arc_length(&NormSpec::l2(), 0.0, 7.0, 1e-8).is_err());
        assert!(arc_length(&NormSpec::l2(), 0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn non_convergence_reports_bracket() {
        let err = arc_length_refined(&NormSpec::l2(), 0.0, 3.0, 1e-30, 1 << 8).unwrap_err();
        let Error::NonConvergence { lower, segments, .. } = err else { panic!("{err}") };
        assert!(lower > 2.99 && lower < 3.0);
        // 31 initial segments for a 3 rad span, doubled up to the cap.
        assert_eq!(segments, 31 << 3);
    }

    #[test]
    fn exponent_near_one_converges() {
        let spec = NormSpec::lp(1.02).unwrap();
        let graded = arc_length(&spec, 0.0, PI / 2.0, 1e-10).unwrap();
        let n = 1 << 16;
        let uniform: Vec<Vec2> = (0..=n)
            .map(|k| spec.sphere_point(PI / 2.0 * k as f64 / n as f64))
            .collect();
        let floor = chain_length(&spec, &uniform);
        assert!(graded.value >= floor - 1e-12);
        assert!(graded.value - floor < 1e-3);
        assert!(graded.segments < 1 << 16);
        // Quarter arc of ℓ1 measured in ℓ1 has length 2.
        assert!((graded.value - 2.0).abs() < 0.05);
    }

    #[test]
    fn refinement_is_monotone() {
        let spec = NormSpec::lp(3.5).unwrap();
        let mut last = 0.0;
        for k in 4..16 {
            let tol = 2f64.powi(-(2 * k));
            let r = arc_length_refined(&spec, 0.2, 2.9, tol, SEGMENT_CAP).unwrap();
            assert!(r.lower >= last);
            assert!(r.lower <= r.upper);
            last = r.lower;
        }
    }

    #[test]
    fn distance_examples() {
        let d = intrinsic_distance(&NormSpec::l2(), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0), 1e-8).unwrap();
        assert_abs_diff_eq!(d.value, FRAC_PI_2, epsilon = 1e-7);
        assert_eq!(d.arc_choice, ArcChoice::Ccw);

        let d = intrinsic_distance(&NormSpec::linf(), Vec2::new(1.0, 0.01), Vec2::new(-1.0, 0.01), 1e-8).unwrap();
        assert_abs_diff_eq!(d.value, 3.98, epsilon = 1e-12);
        assert_eq!(d.arc_choice, ArcChoice::Ccw);

        let d = intrinsic_distance(&NormSpec::linf(), Vec2::new(1.0, 1.0), Vec2::new(-1.0, 1.0), 1e-8).unwrap();
        assert_abs_diff_eq!(d.value, 2.0, epsilon = 1e-12);

        let d = intrinsic_distance(&NormSpec::linf(), Vec2::new(1.0, -0.01), Vec2::new(-1.0, -0.01), 1e-8).unwrap();
        assert_eq!(d.arc_choice, ArcChoice::Cw);
        assert_abs_diff_eq!(d.value, 3.98, epsilon = 1e-12);

        let same = intrinsic_distance(&NormSpec::l1(), Vec2::new(0.5, 0.5), Vec2::new(0.5, 0.5), 1e-8).unwrap();
        assert_eq!(same.value, 0.0);

        assert!(matches!(
            intrinsic_distance(&NormSpec::l2(), Vec2::new(2.0, 0.0), Vec2::new(0.0, 1.0), 1e-8),
            Err(Error::OffSphere { .. })
        ));
    }

    #[test]
    fn antipodal_tie_resolves_ccw() {
        let d = intrinsic_distance(&NormSpec::l2(), Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), 1e-8).unwrap();
        assert_eq!(d.arc_choice, ArcChoice::Ccw);
        assert_abs_diff_eq!(d.value, PI, epsilon = 1e-7);
    }

    #[test]
    fn ratio_examples() {
        let r = distance_ratio(&NormSpec::l2(), Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0), 1e-9).unwrap();
        assert_abs_diff_eq!(r, FRAC_PI_2, epsilon = 1e-6);
        for eps in [0.2, 0.1, 0.01, 0.001] {
            let r = distance_ratio(&NormSpec::linf(), Vec2::new(1.0, eps), Vec2::new(-1.0, eps), 1e-9).unwrap();
            assert_abs_diff_eq!(r, (4.0 - 2.0 * eps) / 2.0, epsilon = 1e-12);
        }
        let r = distance_ratio(&NormSpec::linf(), Vec2::new(1.0, 0.2), Vec2::new(1.0, 0.25), 1e-9).unwrap();
        assert_abs_diff_eq!(r, 1.0, epsilon = 1e-12);
        assert!(distance_ratio(&NormSpec::l2(), Vec2::new(1.0, 0.0), Vec2::new(1.0, 0.0), 1e-9).is_err());
    }

    #[test]
    fn oracle_examples() {
        assert_abs_diff_eq!(euclidean_intrinsic_oracle(Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)).unwrap(), FRAC_PI_2, epsilon = 1e-15);
        assert_abs_diff_eq!(euclidean_intrinsic_oracle(Vec2::new(1.0, 0.0), Vec2::new(-1.0, 0.0)).unwrap(), PI, epsilon = 1e-15);
        let y = Vec2::unit(PI / 3.0);
        assert_abs_diff_eq!((Vec2::new(1.0, 0.0) - y).norm(), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(euclidean_intrinsic_oracle(Vec2::new(1.0, 0.0), y).unwrap(), PI / 3.0, epsilon = 1e-12);
        assert!(euclidean_intrinsic_oracle(Vec2::new(1.1, 0.0), y).is_err());
    }

    #[test]
    fn angle_of_examples() {
        assert_abs_diff_eq!(angle_of(Vec2::new(0.0, 5.0)).unwrap(), FRAC_PI_2);
        assert_abs_diff_eq!(angle_of(Vec2::new(1.0, 1.0)).unwrap(), FRAC_PI_4);
        assert_abs_diff_eq!(angle_of(Vec2::new(-1.0, 0.0)).unwrap(), PI);
        assert!(angle_of(Vec2::ZERO).is_err());
        let a = angle_of(Vec2::new(1.0, -1e-300)).unwrap();
        assert!((0.0..2.0 * PI).contains(&a));
    }

    #[test]
    fn circumference_values() {
        assert_abs_diff_eq!(circumference(&NormSpec::l2(), 1e-10).unwrap().value, 2.0 * PI, epsilon = 1e-6);
        assert_abs_diff_eq!(circumference(&NormSpec::linf(), 1e-10).unwrap().value, 8.0, epsilon = 1e-12);
        assert_abs_diff_eq!(circumference(&NormSpec::l1(), 1e-10).unwrap().value, 8.0, epsilon = 1e-12);
    }

    #[test]
    fn vertex_walk_matches_refinement_on_hexagon() {
        let hex: Vec<Vec2> = (0..6).map(|k| Vec2::unit(0.4 + k as f64 * PI / 3.0)).collect();
        let spec = NormSpec::polygon(hex).unwrap();
        let exact = arc_length(&spec, 0.1, 4.0, 1e-8).unwrap();
        let refined = arc_length_refined(&spec, 0.1, 4.0, 1e-7, SEGMENT_CAP).unwrap();
        assert!(refined.lower <= exact.value + 1e-12);
        assert_abs_diff_eq!(refined.lower, exact.value, epsilon = 1e-5);
    }

    #[test]
    fn arc_table_agrees_with_refinement() {
        for spec in [NormSpec::lp(3.0).unwrap(), NormSpec::ellipse(crate::vec2::Mat2::new(2.0, 0.4, 0.4, 0.7)).unwrap(), NormSpec::linf()] {
            let table = SphereArcTable::new(&spec, 8192);
            for (a, b) in [(0.1, 2.0), (5.9, 7.0), (1.0, 1.0 + 2.0 * PI), (0.3, 0.3001)] {
                let exact = arc_length(&spec, a, b, 1e-10).unwrap().value;
                let approx = table.arc(a, b);
                assert!(approx <= exact + 1e-12);
                assert_abs_diff_eq!(approx, exact, epsilon = 1e-6);
            }
            let x = spec.sphere_point(0.4);
            let y = spec.sphere_point(3.9);
            let d = intrinsic_distance(&spec, x, y, 1e-10).unwrap().value;
            assert_abs_diff_eq!(table.distance(0.4, 3.9), d, epsilon = 1e-6);
        }
    }

    #[test]
    fn distance_json_shape() {
        let d = DistanceResult::exact(2.0, 2);
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"value":2.0,"lower":2.0,"upper":2.0,"segments":2,"arc_choice":"ccw"}"#
        );
    }
}
