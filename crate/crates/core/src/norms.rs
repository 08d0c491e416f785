//! Norms on the plane: representation, evaluation, validation, and the
//! Euclidean sandwich constants `r·B_E ⊆ B_X ⊆ R·B_E`.
//!
//! Every variant is validated when it is built (directly or from JSON), so
//! evaluation never fails. Planar norms can also be obtained by restricting an
//! n-dimensional norm to a two-dimensional subspace with [`section_norm`].

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::john::Ellipse;
use crate::optimize::{golden_max, golden_min};
use crate::sampling::trial_rng;
use crate::vec2::{Mat2, Vec2};
use crate::verify::{CheckReport, MarginTracker};

/// Grid resolution used when sandwich constants are needed implicitly.
pub const DEFAULT_RESOLUTION: usize = 4096;

/// Relative tolerance of the sampled norm-axiom checks.
pub const AXIOM_TOL: f64 = 1e-9;

const POLYGON_TOL: f64 = 1e-9;

/// Angle of `v` in `[0, 2π)`; `0` for the zero vector.
pub(crate) fn polar_angle(v: Vec2) -> f64 {
    let a = v.y.atan2(v.x);
    let a = if a < 0.0 { a + 2.0 * PI } else { a };
    // atan2 of a tiny negative y can round up to exactly 2π.
    if a >= 2.0 * PI {
        0.0
    } else {
        a
    }
}

/// Exponent of an ℓp norm; `p ∈ [1, ∞]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LpExponent {
    Finite(f64),
    Infinity,
}

impl LpExponent {
    pub fn new(p: f64) -> Result<Self> {
        if p.is_nan() || p < 1.0 {
            return Err(Error::InvalidNorm(format!("lp exponent must be >= 1, got {p}")));
        }
        if p.is_infinite() {
            Ok(LpExponent::Infinity)
        } else {
            Ok(LpExponent::Finite(p))
        }
    }

    pub fn value(self) -> f64 {
        match self {
            LpExponent::Finite(p) => p,
            LpExponent::Infinity => f64::INFINITY,
        }
    }

    fn eval2(self, x: f64, y: f64) -> f64 {
        let (ax, ay) = (x.abs(), y.abs());
        match self {
            LpExponent::Infinity => ax.max(ay),
            LpExponent::Finite(p) if p == 1.0 => ax + ay,
            LpExponent::Finite(p) if p == 2.0 => {
                // `hypot` only matters when the squares under- or overflow.
                let s = ax * ax + ay * ay;
                if s.is_normal() && s.is_finite() {
                    s.sqrt()
                } else {
                    ax.hypot(ay)
                }
            }
            LpExponent::Finite(p) => {
                let (hi, lo) = if ax >= ay { (ax, ay) } else { (ay, ax) };
                if hi == 0.0 {
                    return 0.0;
                }
                hi * (1.0 + (lo / hi).powf(p)).powf(1.0 / p)
            }
        }
    }

    fn eval_slice(self, xs: &[f64]) -> f64 {
        match self {
            LpExponent::Infinity => xs.iter().fold(0.0f64, |m, x| m.max(x.abs())),
            LpExponent::Finite(p) if p == 1.0 => xs.iter().map(|x| x.abs()).sum(),
            LpExponent::Finite(p) => {
                let hi = xs.iter().fold(0.0f64, |m, x| m.max(x.abs()));
                if hi == 0.0 {
                    return 0.0;
                }
                let s: f64 = xs.iter().map(|x| (x.abs() / hi).powf(p)).sum();
                hi * s.powf(1.0 / p)
            }
        }
    }
}

impl Serialize for LpExponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            LpExponent::Finite(p) => s.serialize_f64(*p),
            LpExponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for LpExponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        let p = match Raw::deserialize(d)? {
            Raw::Num(p) => p,
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => f64::INFINITY,
                other => {
                    return Err(serde::de::Error::custom(format!(
                        "expected a number or \"inf\", got {other:?}"
                    )))
                }
            },
        };
        LpExponent::new(p).map_err(serde::de::Error::custom)
    }
}

/// A centrally symmetric convex polygon given by its boundary vertices, used as
/// a unit ball.
#[derive(Debug, Clone, PartialEq)]
pub struct PolygonBall {
    /// As supplied (counterclockwise).
    vertices: Vec<Vec2>,
    /// Index into `vertices` of the vertex with the smallest polar angle.
    start: usize,
    /// Polar angles in ascending order, starting from `vertices[start]`.
    angles: Vec<f64>,
    /// `normals[k]` satisfies `⟨normals[k], p⟩ = 1` on the edge leaving the k-th
    /// vertex in angular order.
    normals: Vec<Vec2>,
}

impl PolygonBall {
    /// Validates a vertex list: finite, strictly counterclockwise, no three
    /// consecutive vertices collinear, origin strictly inside, and `−v` a vertex
    /// whenever `v` is.
    pub fn new(vertices: Vec<Vec2>) -> Result<Self> {
        let m = vertices.len();
        let bad = |msg: String| Err(Error::InvalidNorm(format!("polygon: {msg}")));
        if m < 4 {
            return bad(format!("need at least 4 vertices, got {m}"));
        }
        if let Some(i) = vertices.iter().position(|v| !v.is_finite()) {
            return bad(format!("vertex {i} is not finite"));
        }
        let scale = vertices.iter().fold(0.0f64, |s, v| s.max(v.norm()));
        if scale == 0.0 {
            return bad("all vertices are zero".into());
        }
        let mut winding = 0.0;
        for i in 0..m {
            let p = vertices[i];
            let q = vertices[(i + 1) % m];
            let r = vertices[(i + 2) % m];
            if p.cross(q) <= POLYGON_TOL * scale * scale {
                return bad(format!(
                    "origin is not strictly inside edge {i} (or vertices are not counterclockwise)"
                ));
            }
            if (q - p).cross(r - q) <= POLYGON_TOL * scale * scale {
                return bad(format!(
                    "vertices {i}, {}, {} are collinear or turn clockwise",
                    (i + 1) % m,
                    (i + 2) % m
                ));
            }
            winding += p.cross(q).atan2(p.dot(q));
        }
        if (winding - 2.0 * PI).abs() > 1e-6 {
            return bad("boundary does not wind exactly once around the origin".into());
        }
        if m % 2 != 0 {
            return bad("odd vertex count; the ball must be symmetric (v ∈ B ⇒ −v ∈ B)".into());
        }
        let half = m / 2;
        for i in 0..half {
            if (vertices[i] + vertices[i + half]).norm() > POLYGON_TOL * scale.max(1.0) {
                return bad(format!(
                    "not symmetric: vertex {} is not the negative of vertex {i}",
                    i + half
                ));
            }
        }

        let start = (0..m)
            .min_by(|&i, &j| polar_angle(vertices[i]).total_cmp(&polar_angle(vertices[j])))
            .unwrap_or(0);
        let ordered: Vec<Vec2> = (0..m).map(|k| vertices[(start + k) % m]).collect();
        let angles = ordered.iter().map(|v| polar_angle(*v)).collect();
        let normals = (0..m)
            .map(|k| {
                let p = ordered[k];
                let q = ordered[(k + 1) % m];
                Vec2::new(q.y - p.y, p.x - q.x) / p.cross(q)
            })
            .collect();
        Ok(PolygonBall {
            vertices,
            start,
            angles,
            normals,
        })
    }

    /// Builds a polygon from the vertices of a symmetric convex polygon given in
    /// any order.
    pub fn from_unordered(mut points: Vec<Vec2>) -> Result<Self> {
        points.sort_by(|a, b| polar_angle(*a).total_cmp(&polar_angle(*b)));
        PolygonBall::new(points)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Vertices as supplied.
    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    /// Vertices in ascending polar angle.
    pub fn ordered_vertices(&self) -> impl Iterator<Item = Vec2> + '_ {
        let m = self.len();
        (0..m).map(move |k| self.vertices[(self.start + k) % m])
    }

    /// Polar angles of [`Self::ordered_vertices`].
    pub fn vertex_angles(&self) -> &[f64] {
        &self.angles
    }

    /// Outward facet normals `a` with `⟨a, x⟩ ≤ 1` describing the ball.
    pub fn facet_normals(&self) -> &[Vec2] {
        &self.normals
    }

    /// Minkowski gauge via angular binary search for the edge crossed by the
    /// ray through `v`.
    pub fn gauge(&self, v: Vec2) -> f64 {
        if v == Vec2::ZERO {
            return 0.0;
        }
        let m = self.len();
        let phi = polar_angle(v);
        let k = self.angles.partition_point(|&a| a <= phi);
        let edge = (k + m - 1) % m;
        // Neighbouring facets guard against rounding at vertex angles; the
        // gauge is the maximum over all facets so this never overshoots.
        let prev = (edge + m - 1) % m;
        let next = (edge + 1) % m;
        self.normals[edge]
            .dot(v)
            .max(self.normals[prev].dot(v))
            .max(self.normals[next].dot(v))
    }

    /// Radius of the largest centred disk inside the polygon.
    pub fn inradius(&self) -> f64 {
        self.normals.iter().map(|n| 1.0 / n.norm()).fold(f64::INFINITY, f64::min)
    }

    /// Radius of the smallest centred disk containing the polygon.
    pub fn circumradius(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn mapped(&self, f: impl Fn(Vec2) -> Vec2) -> Result<PolygonBall> {
        PolygonBall::from_unordered(self.vertices.iter().map(|v| f(*v)).collect())
    }
}

/// Evaluation contract for a user-supplied n-dimensional norm.
pub type GaugeFn = dyn Fn(&[f64]) -> f64 + Send + Sync;

/// An n-dimensional norm supplied as a deterministic function object.
#[derive(Clone)]
pub struct CustomNorm {
    name: String,
    dim: usize,
    f: Arc<GaugeFn>,
}

impl CustomNorm {
    pub fn new(name: impl Into<String>, dim: usize, f: Arc<GaugeFn>) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidNorm(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(CustomNorm {
            name: name.into(),
            dim,
            f,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }
}

impl fmt::Debug for CustomNorm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomNorm")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .finish_non_exhaustive()
    }
}

/// A norm on ℝⁿ, n ≥ 2.
#[derive(Debug, Clone)]
pub enum NormSpecN {
    Lp { p: LpExponent, dim: usize },
    Custom(CustomNorm),
}

impl NormSpecN {
    pub fn lp(p: f64, dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidNorm(format!("dimension must be >= 2, got {dim}")));
        }
        Ok(NormSpecN::Lp {
            p: LpExponent::new(p)?,
            dim,
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            NormSpecN::Lp { dim, .. } => *dim,
            NormSpecN::Custom(c) => c.dim,
        }
    }

    pub fn eval(&self, v: &[f64]) -> f64 {
        match self {
            NormSpecN::Lp { p, .. } => p.eval_slice(v),
            NormSpecN::Custom(c) => (c.f)(v),
        }
    }

    fn is_euclidean(&self) -> bool {
        matches!(self, NormSpecN::Lp { p: LpExponent::Finite(p), .. } if *p == 2.0)
    }
}

/// Restriction of an n-dimensional norm to `span{u, v}` with `u, v`
/// Euclidean-orthonormal: `‖(a, b)‖ = ‖a·u + b·v‖_ambient`.
#[derive(Debug, Clone)]
pub struct SectionNorm {
    ambient: NormSpecN,
    x: Vec<f64>,
    y: Vec<f64>,
    u: Vec<f64>,
    v: Vec<f64>,
}

impl SectionNorm {
    pub fn ambient(&self) -> &NormSpecN {
        &self.ambient
    }

    /// Orthonormal basis `(u, v)` of the section plane.
    pub fn basis(&self) -> (&[f64], &[f64]) {
        (&self.u, &self.v)
    }

    /// Embeds plane coordinates into the ambient space.
    pub fn embed(&self, p: Vec2) -> Vec<f64> {
        self.u
            .iter()
            .zip(&self.v)
            .map(|(ui, vi)| p.x * ui + p.y * vi)
            .collect()
    }

    fn eval(&self, p: Vec2) -> f64 {
        match &self.ambient {
            NormSpecN::Lp { p: e, .. } => {
                // Streaming evaluation avoids allocating the embedded vector.
                let coords = self.u.iter().zip(&self.v).map(|(ui, vi)| p.x * ui + p.y * vi);
                match *e {
                    LpExponent::Infinity => coords.fold(0.0f64, |m, c| m.max(c.abs())),
                    LpExponent::Finite(q) if q == 1.0 => coords.map(f64::abs).sum(),
                    LpExponent::Finite(_) => e.eval_slice(&coords.collect::<Vec<_>>()),
                }
            }
            NormSpecN::Custom(c) => (c.f)(&self.embed(p)),
        }
    }
}

/// `‖v‖ = ‖v‖_inner / factor`: the unit ball is `factor · B_inner`.
#[derive(Debug, Clone)]
pub struct ScaledNorm {
    inner: Box<NormSpec>,
    factor: f64,
}

impl ScaledNorm {
    pub fn inner(&self) -> &NormSpec {
        &self.inner
    }

    pub fn factor(&self) -> f64 {
        self.factor
    }
}

/// `‖v‖ = ‖map · v‖_inner`: the unit ball is `map⁻¹(B_inner)`.
#[derive(Debug, Clone)]
pub struct LinearNorm {
    inner: Box<NormSpec>,
    map: Mat2,
    inverse: Mat2,
}

impl LinearNorm {
    pub fn inner(&self) -> &NormSpec {
        &self.inner
    }

    pub fn map(&self) -> Mat2 {
        self.map
    }
}

/// A norm on ℝ², described by its gauge.
#[derive(Debug, Clone)]
pub enum NormSpec {
    Lp(LpExponent),
    Polygon(PolygonBall),
    Ellipse(Ellipse),
    Section(SectionNorm),
    Scaled(ScaledNorm),
    Linear(LinearNorm),
}

impl NormSpec {
    pub fn lp(p: f64) -> Result<Self> {
        Ok(NormSpec::Lp(LpExponent::new(p)?))
    }

    pub fn l1() -> Self {
        NormSpec::Lp(LpExponent::Finite(1.0))
    }

    pub fn l2() -> Self {
        NormSpec::Lp(LpExponent::Finite(2.0))
    }

    pub fn linf() -> Self {
        NormSpec::Lp(LpExponent::Infinity)
    }

    pub fn polygon(vertices: Vec<Vec2>) -> Result<Self> {
        Ok(NormSpec::Polygon(PolygonBall::new(vertices)?))
    }

    pub fn ellipse(m: Mat2) -> Result<Self> {
        Ok(NormSpec::Ellipse(Ellipse::new(m)?))
    }

    pub fn scaled(inner: NormSpec, factor: f64) -> Result<Self> {
        if !(factor.is_finite() && factor > 0.0) {
            return Err(Error::InvalidNorm(format!(
                "scale factor must be finite and > 0, got {factor}"
            )));
        }
        Ok(match inner {
            NormSpec::Scaled(s) => NormSpec::Scaled(ScaledNorm {
                inner: s.inner,
                factor: s.factor * factor,
            }),
            other => NormSpec::Scaled(ScaledNorm {
                inner: Box::new(other),
                factor,
            }),
        })
    }

    /// The norm `v ↦ ‖map · v‖_inner`.
    pub fn linear(inner: NormSpec, map: Mat2) -> Result<Self> {
        let inverse = match map.inverse() {
            Some(inv) if map.is_finite() && map.det().abs() > 1e-12 && inv.is_finite() => inv,
            _ => {
                return Err(Error::InvalidNorm(format!(
                    "linear map must be invertible, det = {}",
                    map.det()
                )))
            }
        };
        Ok(NormSpec::Linear(LinearNorm {
            inner: Box::new(inner),
            map,
            inverse,
        }))
    }

    /// `‖v‖_X`.
    pub fn eval(&self, v: Vec2) -> f64 {
        match self {
            NormSpec::Lp(p) => p.eval2(v.x, v.y),
            NormSpec::Polygon(poly) => poly.gauge(v),
            NormSpec::Ellipse(e) => e.norm(v),
            NormSpec::Section(s) => s.eval(v),
            NormSpec::Scaled(s) => s.inner.eval(v) / s.factor,
            NormSpec::Linear(l) => l.inner.eval(l.map.apply(v)),
        }
    }

    /// `c(θ)/‖c(θ)‖_X` with `c(θ) = (cos θ, sin θ)`.
    pub fn sphere_point(&self, theta: f64) -> Vec2 {
        let c = Vec2::unit(theta);
        c / self.eval(c)
    }

    /// Directions in which the unit sphere may have unbounded curvature: the
    /// axes of ℓp for `1 < p < 2`, carried through scalings and linear maps.
    pub fn singular_directions(&self) -> Vec<Vec2> {
        match self {
            NormSpec::Lp(LpExponent::Finite(p)) if *p > 1.0 && *p < 2.0 => vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(0.0, -1.0),
            ],
            NormSpec::Scaled(s) => s.inner.singular_directions(),
            NormSpec::Linear(l) => l
                .inner
                .singular_directions()
                .into_iter()
                .map(|d| l.inverse.apply(d))
                .collect(),
            _ => Vec::new(),
        }
    }

    /// The unit ball as a polygon, when it is one and its vertices are known
    /// exactly.
    pub fn as_polygon(&self) -> Option<PolygonBall> {
        match self {
            NormSpec::Polygon(p) => Some(p.clone()),
            NormSpec::Lp(LpExponent::Infinity) => PolygonBall::new(vec![
                Vec2::new(1.0, 1.0),
                Vec2::new(-1.0, 1.0),
                Vec2::new(-1.0, -1.0),
                Vec2::new(1.0, -1.0),
            ])
            .ok(),
            NormSpec::Lp(LpExponent::Finite(p)) if *p == 1.0 => PolygonBall::new(vec![
                Vec2::new(1.0, 0.0),
                Vec2::new(0.0, 1.0),
                Vec2::new(-1.0, 0.0),
                Vec2::new(0.0, -1.0),
            ])
            .ok(),
            NormSpec::Scaled(s) => s.inner.as_polygon()?.mapped(|v| v * s.factor).ok(),
            NormSpec::Linear(l) => {
                let inv = l.inverse;
                l.inner.as_polygon()?.mapped(|v| inv.apply(v)).ok()
            }
            _ => None,
        }
    }

    /// Parses the JSON norm description; errors carry the JSON path.
    pub fn from_json(text: &str) -> Result<NormSpec> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "$".into(),
            reason: e.to_string(),
        })?;
        parse_value(value, "$")
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("norm specs serialize to JSON")
    }
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum NormJson {
    Lp {
        p: LpExponent,
    },
    Polygon {
        vertices: Vec<Vec2>,
    },
    Ellipse {
        m: Mat2,
    },
    Section {
        ambient: AmbientJson,
        x: Vec<f64>,
        y: Vec<f64>,
    },
    Scaled {
        factor: f64,
        inner: Box<NormJson>,
    },
    Linear {
        map: Mat2,
        inner: Box<NormJson>,
    },
}

#[derive(Serialize)]
#[serde(tag = "type", rename_all = "lowercase")]
enum AmbientJson {
    Lp {
        p: LpExponent,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        dim: Option<usize>,
    },
    Custom {
        name: String,
        dim: usize,
    },
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LpFields {
    p: ExponentJson,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PolygonFields {
    vertices: Vec<Vec2>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EllipseFields {
    m: Mat2,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SectionFields {
    ambient: serde_json::Value,
    x: Vec<f64>,
    y: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AmbientLpFields {
    p: ExponentJson,
    #[serde(default)]
    dim: Option<usize>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct AmbientCustomFields {
    name: String,
    #[allow(dead_code)]
    dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ScaledFields {
    factor: f64,
    inner: serde_json::Value,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearFields {
    map: Mat2,
    inner: serde_json::Value,
}

/// An ℓp exponent as written in JSON: a number or `"inf"`, validated later so
/// that range errors carry their path.
struct ExponentJson(f64);

impl<'de> Deserialize<'de> for ExponentJson {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(p) => Ok(ExponentJson(p)),
            Raw::Text(t) => match t.to_ascii_lowercase().as_str() {
                "inf" | "infinity" | "∞" => Ok(ExponentJson(f64::INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

fn join_path(base: &str, rel: &str) -> String {
    if rel.is_empty() || rel == "." {
        base.to_string()
    } else if rel.starts_with('[') {
        format!("{base}{rel}")
    } else {
        format!("{base}.{rel}")
    }
}

/// Removes and returns the `type` tag of a JSON object.
fn take_tag(value: serde_json::Value, path: &str) -> Result<(String, serde_json::Value)> {
    let serde_json::Value::Object(mut obj) = value else {
        return Err(Error::Parse {
            path: path.to_string(),
            reason: "expected a JSON object".into(),
        });
    };
    match obj.remove("type") {
        Some(serde_json::Value::String(tag)) => Ok((tag, serde_json::Value::Object(obj))),
        Some(_) => Err(Error::Parse {
            path: format!("{path}.type"),
            reason: "expected a string".into(),
        }),
        None => Err(Error::Parse {
            path: path.to_string(),
            reason: "missing field `type`".into(),
        }),
    }
}

fn fields<T: serde::de::DeserializeOwned>(value: serde_json::Value, path: &str) -> Result<T> {
    serde_path_to_error::deserialize(value).map_err(|e| Error::Parse {
        path: join_path(path, &e.path().to_string()),
        reason: e.inner().to_string(),
    })
}

fn exponent_at(p: ExponentJson, path: &str) -> Result<LpExponent> {
    LpExponent::new(p.0).map_err(|e| Error::Parse {
        path: format!("{path}.p"),
        reason: match e {
            Error::InvalidNorm(reason) => reason,
            other => other.to_string(),
        },
    })
}

fn parse_value(value: serde_json::Value, path: &str) -> Result<NormSpec> {
    let at = |e: Error| match e {
        Error::InvalidNorm(reason) => Error::Parse {
            path: path.to_string(),
            reason,
        },
        Error::DegenerateSection => Error::Parse {
            path: path.to_string(),
            reason: e.to_string(),
        },
        other => other,
    };
    let (tag, rest) = take_tag(value, path)?;
    match tag.as_str() {
        "lp" => {
            let f: LpFields = fields(rest, path)?;
            Ok(NormSpec::Lp(exponent_at(f.p, path)?))
        }
        "polygon" => {
            let f: PolygonFields = fields(rest, path)?;
            NormSpec::polygon(f.vertices).map_err(at)
        }
        "ellipse" => {
            let f: EllipseFields = fields(rest, path)?;
            NormSpec::ellipse(f.m).map_err(at)
        }
        "section" => {
            let f: SectionFields = fields(rest, path)?;
            let ambient_path = format!("{path}.ambient");
            let (kind, body) = take_tag(f.ambient, &ambient_path)?;
            let ambient = match kind.as_str() {
                "lp" => {
                    let a: AmbientLpFields = fields(body, &ambient_path)?;
                    let p = exponent_at(a.p, &ambient_path)?;
                    NormSpecN::lp(p.value(), a.dim.unwrap_or(f.x.len())).map_err(|e| match e {
                        Error::InvalidNorm(reason) => Error::Parse {
                            path: ambient_path.clone(),
                            reason,
                        },
                        other => other,
                    })?
                }
                "custom" => {
                    let a: AmbientCustomFields = fields(body, &ambient_path)?;
                    return Err(Error::Parse {
                        path: ambient_path,
                        reason: format!(
                            "custom norm {:?} has no JSON form; construct it through the library",
                            a.name
                        ),
                    });
                }
                other => {
                    return Err(Error::Parse {
                        path: format!("{ambient_path}.type"),
                        reason: format!("unknown ambient norm type {other:?} (expected lp or custom)"),
                    })
                }
            };
            section_norm(&ambient, &f.x, &f.y).map_err(at)
        }
        "scaled" => {
            let f: ScaledFields = fields(rest, path)?;
            let inner = parse_value(f.inner, &format!("{path}.inner"))?;
            NormSpec::scaled(inner, f.factor).map_err(at)
        }
        "linear" => {
            let f: LinearFields = fields(rest, path)?;
            let inner = parse_value(f.inner, &format!("{path}.inner"))?;
            NormSpec::linear(inner, f.map).map_err(at)
        }
        other => Err(Error::Parse {
            path: format!("{path}.type"),
            reason: format!(
                "unknown norm type {other:?} (expected lp, polygon, ellipse, section, scaled or linear)"
            ),
        }),
    }
}

impl NormJson {
    fn from_spec(spec: &NormSpec) -> NormJson {
        match spec {
            NormSpec::Lp(p) => NormJson::Lp { p: *p },
            NormSpec::Polygon(poly) => NormJson::Polygon {
                vertices: poly.vertices.clone(),
            },
            NormSpec::Ellipse(e) => NormJson::Ellipse { m: e.matrix() },
            NormSpec::Section(s) => NormJson::Section {
                ambient: match &s.ambient {
                    NormSpecN::Lp { p, dim } => AmbientJson::Lp {
                        p: *p,
                        dim: Some(*dim),
                    },
                    NormSpecN::Custom(c) => AmbientJson::Custom {
                        name: c.name.clone(),
                        dim: c.dim,
                    },
                },
                x: s.x.clone(),
                y: s.y.clone(),
            },
            NormSpec::Scaled(s) => NormJson::Scaled {
                factor: s.factor,
                inner: Box::new(NormJson::from_spec(&s.inner)),
            },
            NormSpec::Linear(l) => NormJson::Linear {
                map: l.map,
                inner: Box::new(NormJson::from_spec(&l.inner)),
            },
        }
    }
}

impl Serialize for NormSpec {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        NormJson::from_spec(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for NormSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(d)?;
        parse_value(value, "$").map_err(serde::de::Error::custom)
    }
}

/// `‖v‖_X`.
pub fn eval_norm(spec: &NormSpec, v: Vec2) -> f64 {
    spec.eval(v)
}

/// `c(θ)/‖c(θ)‖_X`.
pub fn sphere_point(spec: &NormSpec, theta: f64) -> Vec2 {
    spec.sphere_point(theta)
}

/// Sampled check of homogeneity, symmetry, positivity and the triangle
/// inequality. Failures are report content, never errors.
pub fn validate_norm(spec: &NormSpec, samples: usize, seed: u64) -> Result<CheckReport> {
    if samples == 0 {
        return Err(Error::InvalidArgument("samples must be >= 1".into()));
    }
    let random_vec = |rng: &mut rand_chacha::ChaCha8Rng| {
        let mag = (rng.gen_range(-2.0f64..2.0) * std::f64::consts::LN_10).exp();
        Vec2::unit(rng.gen_range(0.0..2.0 * PI)) * mag
    };
    let mut tracker = MarginTracker::new("norm-axioms", AXIOM_TOL);
    for i in 0..samples {
        let mut rng = trial_rng(seed, i as u64);
        let v = random_vec(&mut rng);
        let w = random_vec(&mut rng);
        let alpha = rng.gen_range(-10.0..10.0);
        let nv = spec.eval(v);
        let nw = spec.eval(w);
        tracker.trial();

        let positivity = if nv > 0.0 && nv.is_finite() { 0.0 } else { -1.0 };
        tracker.record(positivity, || witness("positivity", v, w, alpha, nv));

        let homog = -(spec.eval(v * alpha) - alpha.abs() * nv).abs() / (alpha.abs() * nv).max(f64::MIN_POSITIVE);
        tracker.record(homog, || witness("homogeneity", v, w, alpha, nv));

        let sym = -(spec.eval(-v) - nv).abs() / nv.max(f64::MIN_POSITIVE);
        tracker.record(sym, || witness("symmetry", v, w, alpha, nv));

        let tri = (nv + nw - spec.eval(v + w)) / (nv + nw).max(f64::MIN_POSITIVE);
        tracker.record(tri, || witness("triangle", v, w, alpha, nv));
    }
    Ok(tracker.finish())
}

fn witness(check: &str, v: Vec2, w: Vec2, alpha: f64, nv: f64) -> serde_json::Value {
    serde_json::json!({ "check": check, "v": v, "w": w, "alpha": alpha, "norm_v": nv })
}

/// Extremal scalars with `r·B_E ⊆ B_X ⊆ R·B_E`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SandwichConstants {
    /// Largest `r` with `r·B_E ⊆ B_X`.
    #[serde(rename = "r")]
    pub inradius: f64,
    /// Smallest `R` with `B_X ⊆ R·B_E`.
    #[serde(rename = "R")]
    pub circumradius: f64,
    /// `R / r`.
    #[serde(rename = "k")]
    pub ratio: f64,
}

impl SandwichConstants {
    fn new(r: f64, big_r: f64) -> Self {
        SandwichConstants {
            inradius: r,
            circumradius: big_r,
            ratio: big_r / r,
        }
    }
}

/// Extremes of `‖sphere_point(θ)‖_E`: exact for polygonal balls, ℓp and
/// ellipses; otherwise a `resolution`-point grid on a half turn plus
/// golden-section refinement around the extremal cells.
pub fn sandwich_constants(spec: &NormSpec, resolution: usize) -> Result<SandwichConstants> {
    if resolution < 8 {
        return Err(Error::InvalidArgument(format!(
            "resolution must be >= 8, got {resolution}"
        )));
    }
    if let Some(poly) = spec.as_polygon() {
        return Ok(SandwichConstants::new(poly.inradius(), poly.circumradius()));
    }
    match spec {
        NormSpec::Lp(LpExponent::Finite(p)) => {
            // ‖·‖_2 / ‖·‖_p ranges over [min(1, c), max(1, c)], c = 2^(1/2 − 1/p).
            let c = 2f64.powf(0.5 - 1.0 / p);
            Ok(SandwichConstants::new(c.min(1.0), c.max(1.0)))
        }
        NormSpec::Ellipse(e) => {
            let (lo, hi) = e.matrix().sym_eigenvalues();
            Ok(SandwichConstants::new(1.0 / hi.sqrt(), 1.0 / lo.sqrt()))
        }
        NormSpec::Scaled(s) => {
            let c = sandwich_constants(&s.inner, resolution)?;
            Ok(SandwichConstants::new(
                c.inradius * s.factor,
                c.circumradius * s.factor,
            ))
        }
        NormSpec::Section(s) if s.ambient.is_euclidean() => Ok(SandwichConstants::new(1.0, 1.0)),
        _ => Ok(sampled_sandwich(spec, resolution)),
    }
}

fn sampled_sandwich(spec: &NormSpec, resolution: usize) -> SandwichConstants {
    let step = PI / resolution as f64;
    let radius = |t: f64| spec.sphere_point(t).norm();
    let values: Vec<f64> = (0..resolution).map(|k| radius(k as f64 * step)).collect();
    let (kmin, _) = values
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("resolution >= 8");
    let (kmax, _) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("resolution >= 8");
    let centre = |k: usize| k as f64 * step;
    let (_, r) = golden_min(radius, centre(kmin) - step, centre(kmin) + step, 1e-13, 200);
    let (_, big_r) = golden_max(radius, centre(kmax) - step, centre(kmax) + step, 1e-13, 200);
    SandwichConstants::new(r.min(values[kmin]), big_r.max(values[kmax]))
}

/// Rescales the ball so that `B_E ⊆ B_X ⊆ K·B_E` with the inradius exactly 1,
/// returning the rescaled norm and `K`. Norms already normalized are returned
/// unchanged.
pub fn normalize_norm(spec: &NormSpec) -> Result<(NormSpec, f64)> {
    let c = sandwich_constants(spec, DEFAULT_RESOLUTION)?;
    if (c.inradius - 1.0).abs() <= 1e-12 {
        return Ok((spec.clone(), c.circumradius));
    }
    Ok((NormSpec::scaled(spec.clone(), 1.0 / c.inradius)?, c.ratio))
}

/// Restriction of `ambient` to the plane spanned by `x` and `y`, in the
/// Euclidean-orthonormal coordinates given by Gram–Schmidt on `(x, y)`.
pub fn section_norm(ambient: &NormSpecN, x: &[f64], y: &[f64]) -> Result<NormSpec> {
    let dim = ambient.dim();
    if x.len() != dim || y.len() != dim {
        return Err(Error::InvalidNorm(format!(
            "section vectors must have dimension {dim}, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    if x.iter().chain(y).any(|c| !c.is_finite()) {
        return Err(Error::InvalidNorm("section vectors must be finite".into()));
    }
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>();
    let nx = dot(x, x).sqrt();
    let ny = dot(y, y).sqrt();
    if nx == 0.0 || ny == 0.0 {
        return Err(Error::DegenerateSection);
    }
    let u: Vec<f64> = x.iter().map(|c| c / nx).collect();
    let proj = dot(y, &u);
    let resid: Vec<f64> = y.iter().zip(&u).map(|(yi, ui)| yi - proj * ui).collect();
    let nr = dot(&resid, &resid).sqrt();
    // nr / ny is the sine of the Euclidean angle between x and y.
    if nr / ny < 1e-8 {
        return Err(Error::DegenerateSection);
    }
    let v = resid.iter().map(|c| c / nr).collect();
    Ok(NormSpec::Section(SectionNorm {
        ambient: ambient.clone(),
        x: x.to_vec(),
        y: y.to_vec(),
        u,
        v,
    }))
}

/// `1/√2`, the inradius of the ℓ1 ball.
pub const L1_INRADIUS: f64 = FRAC_1_SQRT_2;
/// `√2`, the circumradius of the ℓ∞ ball.
pub const LINF_CIRCUMRADIUS: f64 = SQRT_2;
