//! Seeded randomness: per-trial generators and random norm families.
//!
//! Each trial draws from its own ChaCha stream keyed by `(seed, trial)`, so
//! results do not depend on evaluation order.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::norms::{NormSpec, PolygonBall};
use crate::vec2::{Mat2, Vec2};

pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Family of random norms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormFamily {
    Lp,
    Polygon,
    Ellipse,
    Mixed,
}

impl FromStr for NormFamily {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "lp" => Ok(NormFamily::Lp),
            "polygon" => Ok(NormFamily::Polygon),
            "ellipse" => Ok(NormFamily::Ellipse),
            "mixed" => Ok(NormFamily::Mixed),
            other => Err(format!(
                "unknown family {other:?} (expected lp, polygon, ellipse or mixed)"
            )),
        }
    }
}

impl fmt::Display for NormFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NormFamily::Lp => "lp",
            NormFamily::Polygon => "polygon",
            NormFamily::Ellipse => "ellipse",
            NormFamily::Mixed => "mixed",
        })
    }
}

/// ℓp with `p = ∞` and `p = 1` each drawn with probability 0.15, otherwise
/// `log p` uniform on `[0, log 30]`.
pub fn random_lp<R: Rng>(rng: &mut R) -> NormSpec {
    let u: f64 = rng.gen();
    if u < 0.15 {
        NormSpec::linf()
    } else if u < 0.30 {
        NormSpec::l1()
    } else {
        let p = rng.gen_range(0.0..30f64.ln()).exp();
        NormSpec::lp(p.max(1.0)).expect("p >= 1")
    }
}

/// Symmetrized convex hull of `m ∈ [2, 8]` points with uniform directions and
/// radii in `[1, 2]`.
pub fn random_polygon<R: Rng>(rng: &mut R) -> NormSpec {
    loop {
        let m = rng.gen_range(2..=8);
        let mut pts = Vec::with_capacity(2 * m);
        for _ in 0..m {
            let p = Vec2::unit(rng.gen_range(0.0..2.0 * PI)) * rng.gen_range(1.0..2.0);
            pts.push(p);
            pts.push(-p);
        }
        let hull = convex_hull(pts);
        if let Ok(poly) = PolygonBall::from_unordered(hull) {
            return NormSpec::Polygon(poly);
        }
    }
}

/// Random symmetric positive-definite `M` with condition number in `[1, 100]`.
pub fn random_ellipse<R: Rng>(rng: &mut R) -> NormSpec {
    let lo = rng.gen_range(0.25f64.ln()..4f64.ln()).exp();
    let cond = rng.gen_range(0.0..100f64.ln()).exp();
    let rot = Mat2::rotation(rng.gen_range(0.0..PI));
    let m = rot.mul(&Mat2::diag(lo, lo * cond)).mul(&rot.transpose());
    let m = Mat2::new(m.a, 0.5 * (m.b + m.c), 0.5 * (m.b + m.c), m.d);
    NormSpec::ellipse(m).expect("well-conditioned SPD matrix")
}

/// One draw from `family`; `Mixed` cycles lp, polygon, ellipse by `index`.
pub fn random_norm<R: Rng>(family: NormFamily, index: u64, rng: &mut R) -> NormSpec {
    match family {
        NormFamily::Lp => random_lp(rng),
        NormFamily::Polygon => random_polygon(rng),
        NormFamily::Ellipse => random_ellipse(rng),
        NormFamily::Mixed => match index % 3 {
            0 => random_polygon(rng),
            1 => random_ellipse(rng),
            _ => random_lp(rng),
        },
    }
}

/// Counterclockwise convex hull without collinear points (Andrew's monotone chain).
pub fn convex_hull(mut pts: Vec<Vec2>) -> Vec<Vec2> {
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: Vec2, a: Vec2, b: Vec2| (a - o).cross(b - o);
    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * pts.len());
    for &p in &pts {
        while hull.len() >= 2 && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-12 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower = hull.len() + 1;
    for &p in pts.iter().rev().skip(1) {
        while hull.len() >= lower && turn(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 1e-12 {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}
