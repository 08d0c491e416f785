//! Euclidean plane constructions relating a unit sphere `S_X` to the unit
//! circle `S_E`: angles between rays, the radial projection `σ`, unit
//! perpendiculars, and the points where lines through `x` touch `S_E`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::golden_min;
use crate::norms::{polar_angle, NormSpec, PolygonBall};
use crate::vec2::Vec2;

/// Distance below which two points count as coincident for ray constructions.
pub const COINCIDENCE_TOL: f64 = 1e-12;
/// Determinant threshold for "general position" in [`ray_between`].
pub const GENERAL_POSITION_TOL: f64 = 1e-12;
/// Allowed shortfall of `‖x‖_E` below 1 in [`tangent_points`].
pub const TANGENT_TOL: f64 = 1e-9;

/// The ray `{(1 − t)·origin + t·through : t ≥ 0}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    origin: Vec2,
    through: Vec2,
}

impl Ray {
    pub fn new(origin: Vec2, through: Vec2) -> Result<Self> {
        if (through - origin).norm() <= COINCIDENCE_TOL {
            return Err(Error::CoincidentPoints("ray needs two distinct points"));
        }
        Ok(Ray { origin, through })
    }

    pub fn origin(&self) -> Vec2 {
        self.origin
    }

    pub fn direction(&self) -> Vec2 {
        let d = self.through - self.origin;
        d / d.norm()
    }

    pub fn at(&self, t: f64) -> Vec2 {
        self.origin.lerp(self.through, t)
    }
}

/// Size of the angle at `vertex` between the rays through `y` and `z`, in `[0, π]`.
///
/// Evaluated as `atan2(|u × w|, ⟨u, w⟩)`, which equals the clamped arccos of
/// the normalized inner product but keeps full precision near 0 and π.
pub fn angle_between(vertex: Vec2, y: Vec2, z: Vec2) -> Result<f64> {
    let u = y - vertex;
    let w = z - vertex;
    if u.norm() <= COINCIDENCE_TOL || w.norm() <= COINCIDENCE_TOL {
        return Err(Error::CoincidentPoints("angle endpoints must differ from the vertex"));
    }
    Ok(u.cross(w).abs().atan2(u.dot(w)))
}

/// Unit vector orthogonal to `x` with non-negative inner product with
/// `toward`; the counterclockwise choice on a tie.
pub fn perp(x: Vec2, toward: Vec2) -> Result<Vec2> {
    let n = x.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector("x"));
    }
    let ccw = x.rot90() / n;
    Ok(if ccw.dot(toward) < 0.0 { -ccw } else { ccw })
}

/// `σ(x) = x / ‖x‖_E`.
pub fn radial_project(x: Vec2) -> Result<Vec2> {
    let n = x.norm();
    if n == 0.0 {
        return Err(Error::ZeroVector("x"));
    }
    Ok(x / n)
}

/// The two points of `S_E` on lines through `x` tangent to `S_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangentData {
    pub x: Vec2,
    /// `x / ‖x‖_E²`, the foot of the chord of contact.
    pub a: Vec2,
    /// `√(1 − ‖x‖_E⁻²) · x^⊥`.
    pub b: Vec2,
    /// `a + b`, on the side of `x^⊥`.
    pub tau: Vec2,
    /// `a − b`, the reflection of `tau` across `span{x}`.
    pub tau2: Vec2,
}

/// Tangent points `τ(x) = a(x) + b(x)` and `a(x) − b(x)` for `‖x‖_E ≥ 1`, with
/// `x^⊥ = perp(x, orient_toward)`. When `‖x‖_E = 1` both equal `x`.
pub fn tangent_points(x: Vec2, orient_toward: Vec2) -> Result<TangentData> {
    let n2 = x.norm_sq();
    let n = n2.sqrt();
    if !(n >= 1.0 - TANGENT_TOL) {
        return Err(Error::InsideUnitCircle { norm: n });
    }
    let xp = perp(x, orient_toward)?;
    let a = x / n2;
    let b = xp * (1.0 - 1.0 / n2).max(0.0).sqrt();
    Ok(TangentData {
        x,
        a,
        b,
        tau: a + b,
        tau2: a - b,
    })
}

/// Whether the ray from `x` through `y` lies between the rays from `x` through
/// `v` and through `w`: with `v, w, x` in general position the ray must meet
/// the closed segment `[v, w]`; otherwise all three rays must coincide.
pub fn ray_between(x: Vec2, v: Vec2, w: Vec2, y: Vec2) -> bool {
    let dv = v - x;
    let dw = w - x;
    let dy = y - x;
    if dv.norm() <= COINCIDENCE_TOL || dw.norm() <= COINCIDENCE_TOL || dy.norm() <= COINCIDENCE_TOL {
        return false;
    }
    if dv.cross(dw).abs() < GENERAL_POSITION_TOL {
        let same = |a: Vec2, b: Vec2| {
            let (a, b) = (a / a.norm(), b / b.norm());
            (a - b).norm() <= 1e-9
        };
        return same(dy, dv) && same(dy, dw);
    }
    // x + s·dy = v + t·(w − v)  ⇔  s·dy − t·(w − v) = v − x.
    let seg = w - v;
    let det = dy.cross(-seg);
    if det.abs() < GENERAL_POSITION_TOL {
        return false;
    }
    let rhs = v - x;
    let s = rhs.cross(-seg) / det;
    let t = dy.cross(rhs) / det;
    let eps = 1e-12;
    s >= -eps && (-eps..=1.0 + eps).contains(&t)
}

/// Points of `S_X ∩ S_E`, in increasing θ.
///
/// Polygonal spheres are intersected with the circle edge by edge in closed
/// form. Otherwise sign changes of `‖sphere_point(θ)‖_E − 1` on a
/// `resolution`-point grid are bisected to `1e-12` in θ, and local minima that
/// touch 1 (tangential contact, the normalized case) are located by a
/// golden-section search followed by bisection on a central-difference
/// derivative. The function is flat at a tangency, so the search alone only
/// fixes θ to about `1e-8`.
pub fn sphere_circle_contacts(spec: &NormSpec, resolution: usize) -> Vec<Vec2> {
    if let Some(poly) = spec.as_polygon() {
        return polygon_circle_contacts(&poly);
    }
    let n = resolution.max(8);
    let step = 2.0 * PI / n as f64;
    let f = |t: f64| spec.sphere_point(t).norm() - 1.0;
    let vals: Vec<f64> = (0..n).map(|k| f(k as f64 * step)).collect();
    let mut thetas = Vec::new();
    for k in 0..n {
        let (t0, t1) = (k as f64 * step, (k + 1) as f64 * step);
        let (f0, f1) = (vals[k], vals[(k + 1) % n]);
        if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (t0, t1);
            while hi - lo > 1e-12 {
                let mid = 0.5 * (lo + hi);
                if f(mid) * f0 > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            thetas.push(0.5 * (lo + hi));
            continue;
        }
        let prev = vals[(k + n - 1) % n];
        if f0 >= 0.0 && f0 <= prev && f0 <= f1 && f0 <= 1e-3 {
            let (t, _) = golden_min(f, t0 - step, t0 + step, 1e-13, 200);
            let t = polish_tangency(&f, t);
            if f(t).abs() <= 1e-12 {
                thetas.push(t.rem_euclid(2.0 * PI));
            }
        }
    }
    thetas.sort_by(f64::total_cmp);
    thetas.dedup_by(|a, b| (*a - *b).abs() < 1e-9);
    if thetas.len() > 1 && thetas[0] + 2.0 * PI - thetas[thetas.len() - 1] < 1e-9 {
        thetas.pop();
    }
    thetas.into_iter().map(|t| spec.sphere_point(t)).collect()
}

/// Root of the central-difference derivative of `f` near a minimum `t`.
fn polish_tangency(f: &impl Fn(f64) -> f64, t: f64) -> f64 {
    const H: f64 = 1e-6;
    let slope = |u: f64| f(u + H) - f(u - H);
    let (mut lo, mut hi) = (t - 1e-6, t + 1e-6);
    if !(slope(lo) < 0.0 && slope(hi) > 0.0) {
        return t;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if f(mid) <= f(t) {
        mid
    } else {
        t
    }
}

/// Exact intersections of the unit circle with the edges of a polygon;
/// tangent edges contribute their foot point.
fn polygon_circle_contacts(poly: &PolygonBall) -> Vec<Vec2> {
    let verts: Vec<Vec2> = poly.ordered_vertices().collect();
    let m = verts.len();
    let mut pts = Vec::new();
    for i in 0..m {
        let (p, d) = (verts[i], verts[(i + 1) % m] - verts[i]);
        let a = d.norm_sq();
        let b = p.dot(d);
        let s_foot = -b / a;
        let foot = p + d * s_foot;
        let gap = foot.norm() - 1.0;
        if gap.abs() <= 1e-12 {
            if (0.0..1.0).contains(&s_foot) {
                pts.push(foot);
            }
            continue;
        }
        if gap > 0.0 {
            continue;
        }
        // |p + s d|² = 1  ⇔  a s² + 2 b s + (|p|² − 1) = 0.
        let half = (b * b - a * (p.norm_sq() - 1.0)).max(0.0).sqrt();
        for s in [(-b - half) / a, (-b + half) / a] {
            if (0.0..1.0).contains(&s) {
                pts.push(p + d * s);
            }
        }
    }
    pts.sort_by(|u, v| polar_angle(*u).total_cmp(&polar_angle(*v)));
    pts.dedup_by(|u, v| (*u - *v).norm() < 1e-12);
    pts
}
