//! Maximum-area centred ellipse inside a symmetric planar unit ball, and the
//! certificate that `E ⊆ B_X ⊆ √2·E`.
//!
//! The ellipse is written `E = L(B_E)` with `L` symmetric positive definite;
//! `E` lies in the half-plane `⟨a, x⟩ ≤ 1` iff `‖L a‖_E ≤ 1`. Maximizing
//! `log det L` over those constraints is a smooth concave program in the three
//! entries of `L`, solved here by a log-barrier Newton method.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::norms::{LpExponent, NormSpec};
use crate::optimize::golden_max;
use crate::vec2::{Mat2, Vec2};

/// Default number of supporting facets for non-polygonal balls.
pub const DEFAULT_FACETS: usize = 256;
/// Default duality-gap tolerance of the solver.
pub const DEFAULT_SOLVER_TOL: f64 = 1e-12;
/// Slack allowed by [`verify_john`].
pub const CERTIFICATE_TOL: f64 = 1e-6;

const MAX_NEWTON_STEPS: usize = 10_000;
const MAX_CENTERING_STEPS: usize = 100;

/// Centred ellipse `{x : xᵀ M x ≤ 1}`, `M` symmetric positive definite.
/// Doubles as the Euclidean norm `‖x‖ = √(xᵀ M x)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse {
    m: Mat2,
}

impl Ellipse {
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(Error::InvalidNorm("ellipse matrix must be finite".into()));
        }
        let scale = m.a.abs().max(m.d.abs()).max(m.b.abs()).max(1.0);
        if (m.b - m.c).abs() > 1e-12 * scale {
            return Err(Error::InvalidNorm(format!(
                "ellipse matrix must be symmetric, got off-diagonal {} and {}",
                m.b, m.c
            )));
        }
        let sym = Mat2::new(m.a, 0.5 * (m.b + m.c), 0.5 * (m.b + m.c), m.d);
        let (lo, _) = sym.sym_eigenvalues();
        if !(lo > 1e-12) {
            return Err(Error::InvalidNorm(format!(
                "ellipse matrix must be positive definite, smallest eigenvalue {lo}"
            )));
        }
        Ok(Ellipse { m: sym })
    }

    pub fn identity() -> Self {
        Ellipse { m: Mat2::IDENTITY }
    }

    /// The ellipse `L(B_E)` for symmetric positive-definite `L`.
    pub fn from_shape(l: Mat2) -> Result<Self> {
        let inv = l
            .inverse()
            .ok_or_else(|| Error::InvalidNorm("shape matrix is singular".into()))?;
        let m = inv.mul(&inv);
        Ellipse::new(Mat2::new(m.a, 0.5 * (m.b + m.c), 0.5 * (m.b + m.c), m.d))
    }

    pub fn matrix(&self) -> Mat2 {
        self.m
    }

    pub fn norm(&self, v: Vec2) -> f64 {
        self.m.quad(v).max(0.0).sqrt()
    }

    pub fn area(&self) -> f64 {
        PI / self.m.det().sqrt()
    }

    /// Symmetric `L = M^{-1/2}` with `E = L(B_E)`.
    pub fn shape(&self) -> Mat2 {
        self.m
            .sym_sqrt()
            .and_then(|r| r.inverse())
            .expect("validated ellipse matrix is positive definite")
    }

    /// Symmetric `T = M^{1/2}`: `‖x‖_M = ‖T x‖_E`, so `T(E)` is the unit disk.
    pub fn whitening(&self) -> Mat2 {
        self.m.sym_sqrt().expect("validated ellipse matrix is positive definite")
    }

    pub fn boundary_point(&self, phi: f64) -> Vec2 {
        self.shape().apply(Vec2::unit(phi))
    }

    /// Image under the linear map `t`: `{t x : x ∈ E}`.
    pub fn mapped(&self, t: Mat2) -> Result<Ellipse> {
        let inv = t
            .inverse()
            .ok_or_else(|| Error::InvalidArgument("linear map is singular".into()))?;
        let m = inv.transpose().mul(&self.m).mul(&inv);
        Ellipse::new(Mat2::new(m.a, 0.5 * (m.b + m.c), 0.5 * (m.b + m.c), m.d))
    }
}

#[derive(Serialize, Deserialize)]
struct EllipseJson {
    m: Mat2,
}

impl Serialize for Ellipse {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EllipseJson { m: self.m }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Ellipse {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = EllipseJson::deserialize(d)?;
        Ellipse::new(raw.m).map_err(serde::de::Error::custom)
    }
}

/// Result of the barrier solver on a facet list.
#[derive(Debug, Clone, Copy)]
pub struct JohnFit {
    /// Symmetric `L` with `E = L(B_E)`; rescaled so that the tightest facet is active.
    pub shape: Mat2,
    pub log_det: f64,
    pub newton_steps: usize,
}

impl JohnFit {
    pub fn ellipse(&self) -> Result<Ellipse> {
        Ellipse::from_shape(self.shape)
    }
}

fn sym(z: [f64; 3]) -> Mat2 {
    Mat2::new(z[0], z[1], z[1], z[2])
}

struct Barrier<'a> {
    normals: &'a [Vec2],
}

impl Barrier<'_> {
    fn feasible(&self, z: [f64; 3]) -> bool {
        let l = sym(z);
        z[0] > 0.0 && l.det() > 0.0 && self.normals.iter().all(|a| l.apply(*a).norm_sq() < 1.0)
    }

    /// `t·log det L + Σ log(1 − ‖L aᵢ‖²)`.
    fn value(&self, z: [f64; 3], t: f64) -> f64 {
        let l = sym(z);
        t * l.det().ln()
            + self
                .normals
                .iter()
                .map(|a| (1.0 - l.apply(*a).norm_sq()).ln())
                .sum::<f64>()
    }

    fn grad_hess(&self, z: [f64; 3], t: f64) -> ([f64; 3], [[f64; 3]; 3]) {
        let [p, q, r] = z;
        let det = p * r - q * q;
        let gl = [r / det, -2.0 * q / det, p / det];
        let mut g = gl.map(|x| t * x);
        let mut h = [[0.0; 3]; 3];
        let j = [[0.0, 0.0, 1.0], [0.0, -2.0, 0.0], [1.0, 0.0, 0.0]];
        for i in 0..3 {
            for k in 0..3 {
                h[i][k] = t * (j[i][k] / det - gl[i] * gl[k]);
            }
        }
        for a in self.normals {
            let w = sym(z).apply(*a);
            let slack = 1.0 - w.norm_sq();
            let dg = [2.0 * w.x * a.x, 2.0 * (w.x * a.y + w.y * a.x), 2.0 * w.y * a.y];
            let d2g = [
                [2.0 * a.x * a.x, 2.0 * a.x * a.y, 0.0],
                [2.0 * a.x * a.y, 2.0 * (a.x * a.x + a.y * a.y), 2.0 * a.x * a.y],
                [0.0, 2.0 * a.x * a.y, 2.0 * a.y * a.y],
            ];
            for i in 0..3 {
                g[i] -= dg[i] / slack;
                for k in 0..3 {
                    h[i][k] -= d2g[i][k] / slack + dg[i] * dg[k] / (slack * slack);
                }
            }
        }
        (g, h)
    }
}

/// Solves `a x = b` for symmetric positive-definite `a` by Cholesky.
fn solve_spd3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let mut l = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if !(d > 0.0) {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = [0.0; 3];
    for i in 0..3 {
        y[i] = (b[i] - (0..i).map(|k| l[i][k] * y[k]).sum::<f64>()) / l[i][i];
    }
    let mut x = [0.0; 3];
    for i in (0..3).rev() {
        x[i] = (y[i] - (i + 1..3).map(|k| l[k][i] * x[k]).sum::<f64>()) / l[i][i];
    }
    Some(x)
}

/// Maximizes `log det L` subject to `‖L aᵢ‖_E ≤ 1` for every facet normal.
///
/// The facets must describe a bounded body around the origin. `tol` bounds the
/// duality gap `m/t` of the barrier path.
pub fn solve_john_facets(normals: &[Vec2], tol: f64) -> Result<JohnFit> {
    if normals.len() < 2 || normals.iter().any(|a| !a.is_finite()) {
        return Err(Error::InvalidArgument(
            "need at least two finite facet normals".into(),
        ));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tol must be > 0, got {tol}")));
    }
    let barrier = Barrier { normals };
    let amax = normals.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let rho = 0.9 / amax;
    let mut z = [rho, 0.0, rho];
    let mut t = 1.0;
    let gap_target = tol.max(1e-15);
    let m = normals.len() as f64;
    let mut steps = 0;

    loop {
        // Centering. The decrement test is relative to `t` because the
        // objective scales with it; the per-round cap guards against
        // round-off stalls once Newton has converged.
        let mut round = 0;
        loop {
            round += 1;
            if round > MAX_CENTERING_STEPS {
                break;
            }
            if steps >= MAX_NEWTON_STEPS {
                let l = sym(z);
                return Err(Error::SolverNonConvergence {
                    iterations: steps,
                    best_log_det: l.det().ln(),
                    best_m: Ellipse::from_shape(l).map(|e| e.m.rows()).unwrap_or([[f64::NAN; 2]; 2]),
                });
            }
            steps += 1;
            let (g, h) = barrier.grad_hess(z, t);
            let neg_h = h.map(|row| row.map(|x| -x));
            let Some(dz) = solve_spd3(neg_h, g) else {
                break;
            };
            let decrement = g[0] * dz[0] + g[1] * dz[1] + g[2] * dz[2];
            if decrement / 2.0 <= 1e-14 * t.max(1.0) {
                break;
            }
            let f0 = barrier.value(z, t);
            let mut s = 1.0;
            let mut moved = false;
            while s > 1e-20 {
                let cand = [z[0] + s * dz[0], z[1] + s * dz[1], z[2] + s * dz[2]];
                if barrier.feasible(cand) && barrier.value(cand, t) >= f0 + 0.25 * s * decrement {
                    z = cand;
                    moved = true;
                    break;
                }
                s *= 0.5;
            }
            if !moved {
                break;
            }
        }
        if m / t <= gap_target {
            break;
        }
        t *= 8.0;
    }

    // Snap to the boundary: scale so the tightest facet is exactly active.
    let l = sym(z);
    let worst = normals.iter().map(|a| l.apply(*a).norm()).fold(0.0, f64::max);
    let shape = l.scale(1.0 / worst);
    Ok(JohnFit {
        shape,
        log_det: shape.det().ln(),
        newton_steps: steps,
    })
}

/// Facet normals of a polygon inscribed in the unit sphere through `facets`
/// equally spaced sphere points.
fn inscribed_facets(spec: &NormSpec, facets: usize) -> Vec<Vec2> {
    let n = facets + facets % 2;
    let pts: Vec<Vec2> = (0..n)
        .map(|k| spec.sphere_point(2.0 * PI * k as f64 / n as f64))
        .collect();
    (0..n)
        .map(|k| {
            let p = pts[k];
            let q = pts[(k + 1) % n];
            Vec2::new(q.y - p.y, p.x - q.x) / p.cross(q)
        })
        .collect()
}

/// Largest `‖e‖_X` over the ellipse boundary: dense grid plus golden refinement.
fn max_gauge_on_ellipse(spec: &NormSpec, shape: Mat2, resolution: usize) -> f64 {
    let f = |phi: f64| spec.eval(shape.apply(Vec2::unit(phi)));
    let step = PI / resolution as f64;
    let (k, best) = (0..resolution)
        .map(|k| (k, f(k as f64 * step)))
        .max_by(|a, b| a.1.total_cmp(&b.1))
        .expect("resolution > 0");
    let c = k as f64 * step;
    let (_, refined) = golden_max(f, c - step, c + step, 1e-13, 200);
    best.max(refined)
}

/// The maximum-area centred ellipse contained in the unit ball of `spec`.
///
/// Polygonal balls use their exact facets. Other balls use the facets of an
/// inscribed `facets`-gon, after which the ellipse is rescaled against the true
/// gauge so that it touches the sphere. Scaled and linearly mapped norms reduce
/// to their inner norm by equivariance; ellipses are their own answer.
pub fn inner_john_ellipse(spec: &NormSpec, facets: usize, tol: f64) -> Result<Ellipse> {
    match spec {
        NormSpec::Ellipse(e) => return Ok(*e),
        NormSpec::Lp(LpExponent::Finite(p)) if *p == 2.0 => return Ok(Ellipse::identity()),
        NormSpec::Scaled(s) => {
            let inner = inner_john_ellipse(s.inner(), facets, tol)?;
            return Ellipse::new(inner.matrix().scale(1.0 / (s.factor() * s.factor())));
        }
        NormSpec::Linear(l) => {
            let inner = inner_john_ellipse(l.inner(), facets, tol)?;
            let inv = l.map().inverse().expect("validated linear map is invertible");
            return inner.mapped(inv);
        }
        _ => {}
    }
    if let Some(poly) = spec.as_polygon() {
        return solve_john_facets(poly.facet_normals(), tol)?.ellipse();
    }
    if facets < 8 {
        return Err(Error::InvalidArgument(format!(
            "facets must be >= 8 for non-polygonal norms, got {facets}"
        )));
    }
    let fit = solve_john_facets(&inscribed_facets(spec, facets), tol)?;
    let s = max_gauge_on_ellipse(spec, fit.shape, 4096);
    Ellipse::from_shape(fit.shape.scale(1.0 / s))
}

/// Sampled certificate of `E ⊆ B_X` and `B_X ⊆ √2·E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JohnCertificate {
    pub ellipse: Ellipse,
    pub inner_ok: bool,
    pub outer_ok: bool,
    /// `min (1 − ‖e‖_X)` over sampled ellipse boundary points.
    pub worst_inner_margin: f64,
    /// `min (√2 − ‖s‖_E)` over sampled unit-sphere points, with `‖·‖_E` the ellipse norm.
    pub worst_outer_margin: f64,
    pub inner_witness: Vec2,
    pub outer_witness: Vec2,
    pub tolerance: f64,
}

impl JohnCertificate {
    pub fn passed(&self) -> bool {
        self.inner_ok && self.outer_ok
    }
}

/// Checks both inclusions on `samples` equally spaced boundary points of each
/// body. For polygonal balls the exact extremal points (facet contacts and
/// vertices) are included.
pub fn verify_john(spec: &NormSpec, ellipse: &Ellipse, samples: usize) -> Result<JohnCertificate> {
    if samples < 64 {
        return Err(Error::InvalidArgument(format!(
            "samples must be >= 64, got {samples}"
        )));
    }
    let shape = ellipse.shape();
    let mut inner = (f64::INFINITY, Vec2::ZERO);
    let mut outer = (f64::INFINITY, Vec2::ZERO);
    let take = |slot: &mut (f64, Vec2), margin: f64, p: Vec2| {
        if margin < slot.0 {
            *slot = (margin, p);
        }
    };
    for k in 0..samples {
        let phi = 2.0 * PI * k as f64 / samples as f64;
        let e = shape.apply(Vec2::unit(phi));
        take(&mut inner, 1.0 - spec.eval(e), e);
        let s = spec.sphere_point(phi);
        take(&mut outer, SQRT_2 - ellipse.norm(s), s);
    }
    if let Some(poly) = spec.as_polygon() {
        for a in poly.facet_normals() {
            // Point of E maximizing ⟨a, ·⟩.
            let la = shape.apply(*a);
            let e = shape.apply(la) / la.norm();
            take(&mut inner, 1.0 - spec.eval(e), e);
        }
        for v in poly.ordered_vertices() {
            take(&mut outer, SQRT_2 - ellipse.norm(v), v);
        }
    }
    Ok(JohnCertificate {
        ellipse: *ellipse,
        inner_ok: inner.0 >= -CERTIFICATE_TOL,
        outer_ok: outer.0 >= -CERTIFICATE_TOL,
        worst_inner_margin: inner.0,
        worst_outer_margin: outer.0,
        inner_witness: inner.1,
        outer_witness: outer.1,
        tolerance: CERTIFICATE_TOL,
    })
}

/// The Euclidean norm whose unit ball is the ellipse.
pub fn euclidean_from_ellipse(ellipse: &Ellipse) -> NormSpec {
    NormSpec::Ellipse(*ellipse)
}

/// Change of basis `T = M^{1/2}` taking the ellipse to the unit disk, and the
/// pushed-forward norm `v ↦ ‖T⁻¹ v‖_X`. `T` is an isometry from `X` onto the
/// returned norm; when the ellipse is the John ellipse the new ball satisfies
/// `B_E ⊆ B_X' ⊆ √2·B_E`.
pub fn change_of_basis(spec: &NormSpec, ellipse: &Ellipse) -> Result<(NormSpec, Mat2)> {
    let t = ellipse.whitening();
    let inv = t
        .inverse()
        .ok_or_else(|| Error::InvalidArgument("ellipse whitening is singular".into()))?;
    Ok((NormSpec::linear(spec.clone(), inv)?, t))
}
