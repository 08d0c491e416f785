//! Randomized property checks of the sphere-metric inequalities and a search
//! for the worst ratio `d(x, y) / ‖x − y‖_X`.
//!
//! Every check is deterministic in `(spec, trials, seed)`: trial `i` draws from
//! its own stream (see [`trial_rng`]). Margins are signed slacks, negative when
//! the inequality is violated, and a report passes when its worst margin is at
//! least `−tolerance`.

use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::geometry::{angle_between, perp, radial_project, sphere_circle_contacts, tangent_points};
use crate::john::{change_of_basis, inner_john_ellipse, DEFAULT_FACETS, DEFAULT_SOLVER_TOL};
use crate::metric::{distance_ratio, euclidean_intrinsic_oracle, intrinsic_distance, SphereArcTable};
use crate::norms::{normalize_norm, sandwich_constants, NormSpec, DEFAULT_RESOLUTION};
use crate::optimize::golden_max;
use crate::sampling::{random_norm, trial_rng, NormFamily};
use crate::vec2::Vec2;

/// Tolerance of purely geometric identities.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Arc-length tolerance used by the metric checks.
pub const ARC_TOL: f64 = 1e-8;
/// Tolerance of checks that compare arc lengths (10× [`ARC_TOL`]).
pub const ARC_CHECK_TOL: f64 = 1e-7;

/// Outcome of one property check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub passed: bool,
    pub trials: u64,
    /// Trials where the property holds vacuously (nothing to evaluate).
    pub skipped: u64,
    /// Smallest signed slack seen; `None` when nothing was evaluated.
    pub worst_margin: Option<f64>,
    pub tolerance: f64,
    /// Inputs of the tightest evaluation.
    pub witness: Value,
    /// Largest observed value of the checked ratio, where one exists.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub max_ratio: Option<f64>,
    /// Constant the ratio is checked against.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub bound: Option<f64>,
}

impl CheckReport {
    /// Combines reports of disjoint trial sets of the same check. The result
    /// does not depend on the order of merging.
    pub fn merge(&self, other: &CheckReport) -> CheckReport {
        let (worst_margin, witness) = match (self.worst_margin, other.worst_margin) {
            (None, None) => (None, Value::Null),
            (Some(m), None) => (Some(m), self.witness.clone()),
            (None, Some(m)) => (Some(m), other.witness.clone()),
            (Some(a), Some(b)) => {
                let take_self = match a.total_cmp(&b) {
                    std::cmp::Ordering::Less => true,
                    std::cmp::Ordering::Greater => false,
                    std::cmp::Ordering::Equal => self.witness.to_string() <= other.witness.to_string(),
                };
                if take_self {
                    (Some(a), self.witness.clone())
                } else {
                    (Some(b), other.witness.clone())
                }
            }
        };
        let max_opt = |a: Option<f64>, b: Option<f64>| match (a, b) {
            (Some(a), Some(b)) => Some(a.max(b)),
            (a, b) => a.or(b),
        };
        let tolerance = self.tolerance.min(other.tolerance);
        CheckReport {
            name: self.name.clone(),
            passed: worst_margin.map_or(true, |m| m >= -tolerance),
            trials: self.trials + other.trials,
            skipped: self.skipped + other.skipped,
            worst_margin,
            tolerance,
            witness,
            max_ratio: max_opt(self.max_ratio, other.max_ratio),
            bound: self.bound.or(other.bound),
        }
    }
}

/// Accumulates margins into a [`CheckReport`].
#[derive(Debug, Clone)]
pub struct MarginTracker {
    name: String,
    tolerance: f64,
    trials: u64,
    skipped: u64,
    worst: Option<(f64, Value)>,
    max_ratio: Option<f64>,
    bound: Option<f64>,
}

impl MarginTracker {
    pub fn new(name: impl Into<String>, tolerance: f64) -> Self {
        MarginTracker {
            name: name.into(),
            tolerance,
            trials: 0,
            skipped: 0,
            worst: None,
            max_ratio: None,
            bound: None,
        }
    }

    pub fn trial(&mut self) {
        self.trials += 1;
    }

    pub fn skip(&mut self) {
        self.skipped += 1;
    }

    /// Records one margin; the witness is only built when it is the new worst.
    /// NaN margins count as failures.
    pub fn record(&mut self, margin: f64, witness: impl FnOnce() -> Value) {
        let margin = if margin.is_nan() { f64::NEG_INFINITY } else { margin };
        if self.worst.as_ref().map_or(true, |(w, _)| margin < *w) {
            self.worst = Some((margin, witness()));
        }
    }

    pub fn ratio(&mut self, r: f64) {
        self.max_ratio = Some(self.max_ratio.map_or(r, |m| m.max(r)));
    }

    pub fn bound(&mut self, b: f64) {
        self.bound = Some(b);
    }

    pub fn finish(self) -> CheckReport {
        let (worst_margin, witness) = match self.worst {
            Some((m, w)) => (Some(m), w),
            None => (None, Value::Null),
        };
        CheckReport {
            name: self.name,
            passed: worst_margin.map_or(true, |m| m >= -self.tolerance),
            trials: self.trials,
            skipped: self.skipped,
            worst_margin,
            tolerance: self.tolerance,
            witness,
            max_ratio: self.max_ratio,
            bound: self.bound,
        }
    }
}

fn check_trials(trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(Error::InvalidArgument("trials must be >= 1".into()));
    }
    Ok(())
}

/// Circumradius of a norm whose inradius is 1, or an error when the Euclidean
/// disk is not contained in its ball.
fn require_normalized(spec: &NormSpec) -> Result<f64> {
    let c = sandwich_constants(spec, DEFAULT_RESOLUTION)?;
    if c.inradius < 1.0 - IDENTITY_TOL {
        return Err(Error::NotNormalized { inradius: c.inradius });
    }
    Ok(c.circumradius.max(1.0))
}

fn random_angle<R: Rng>(rng: &mut R) -> f64 {
    rng.gen_range(0.0..2.0 * PI)
}

/// On the Euclidean circle the sphere distance is `2·arcsin(‖x − y‖/2)`, and
/// `‖x − y‖ ≤ d ≤ (π/2)‖x − y‖`.
pub fn check_euclidean_arc(trials: u64, seed: u64) -> Result<CheckReport> {
    check_trials(trials)?;
    let spec = NormSpec::l2();
    let mut t = MarginTracker::new("euclidean-arc", ARC_CHECK_TOL);
    t.bound(PI / 2.0);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        let (tx, ty) = (random_angle(&mut rng), random_angle(&mut rng));
        let (x, y) = (Vec2::unit(tx), Vec2::unit(ty));
        t.trial();
        let chord = (x - y).norm();
        if chord < IDENTITY_TOL {
            t.skip();
            continue;
        }
        let d = intrinsic_distance(&spec, x, y, ARC_TOL)?.value;
        let oracle = euclidean_intrinsic_oracle(x, y)?;
        let w = || json!({ "theta_x": tx, "theta_y": ty, "d": d, "oracle": oracle });
        t.record(-(d - oracle).abs(), w);
        t.record(d - chord, w);
        t.record(PI / 2.0 * chord - d, w);
        t.ratio(d / chord);
    }
    Ok(t.finish())
}

/// For normalized `X` and `x ∈ S_X` with tangent point `τ`:
/// (1) `⟨tx + (1−t)τ, τ⟩ = 1` for all `t`,
/// (2) `‖tx + (1−t)τ‖_X ≤ 1` for `t ∈ [0, 1]`,
/// (3) `‖tx + (1−t)τ‖_X ≥ 1` for `t > 1`,
/// (4) `⟨x, y⟩ ≤ 1` when `x ∈ S_X ∩ S_E` and `y ∈ S_X`.
pub fn check_lemma_tangent_lines(spec: &NormSpec, trials: u64, seed: u64) -> Result<CheckReport> {
    check_trials(trials)?;
    require_normalized(spec)?;
    let contacts = sphere_circle_contacts(spec, DEFAULT_RESOLUTION);
    let mut t = MarginTracker::new("tangent-lines", IDENTITY_TOL);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        let tx = random_angle(&mut rng);
        let x = spec.sphere_point(tx);
        let toward = Vec2::unit(random_angle(&mut rng));
        t.trial();
        let td = tangent_points(x, toward)?;
        let tau = td.tau;
        let along = |s: f64| x * s + tau * (1.0 - s);

        let s1 = rng.gen_range(-10.0..10.0);
        t.record(-(along(s1).dot(tau) - 1.0).abs(), || {
            json!({ "item": 1, "theta_x": tx, "toward": toward, "t": s1, "tau": tau })
        });
        let s2 = rng.gen_range(0.0..=1.0);
        t.record(1.0 - spec.eval(along(s2)), || {
            json!({ "item": 2, "theta_x": tx, "toward": toward, "t": s2, "tau": tau })
        });
        let s3 = 1.0 + rng.gen_range(0.0..9.0) + f64::EPSILON;
        t.record(spec.eval(along(s3)) - 1.0, || {
            json!({ "item": 3, "theta_x": tx, "toward": toward, "t": s3, "tau": tau })
        });
        if contacts.is_empty() {
            t.skip();
        } else {
            let c = contacts[rng.gen_range(0..contacts.len())];
            let ty = random_angle(&mut rng);
            let y = spec.sphere_point(ty);
            t.record(1.0 - c.dot(y), || json!({ "item": 4, "contact": c, "theta_y": ty }));
        }
    }
    Ok(t.finish())
}

/// Window `[−β, β]` of angular offsets with `β = arccos(1/K)`; the whole
/// circle when `K = 1` (then `X` is Euclidean and the window is irrelevant
/// for the segment estimate).
fn angular_window(k: f64) -> f64 {
    (1.0 / k).min(1.0).acos()
}

/// For `x, y ∈ S_X` at most `β = arccos(1/K)` apart in angle, the angle at `x`
/// between the rays towards `v = x + x^⊥` and towards `y` is at most `β`.
pub fn check_lemma_angles(spec: &NormSpec, trials: u64, seed: u64) -> Result<CheckReport> {
    check_trials(trials)?;
    let k = require_normalized(spec)?;
    let beta = angular_window(k);
    let mut t = MarginTracker::new("angles", IDENTITY_TOL);
    t.bound(beta);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        t.trial();
        if beta < 1e-12 {
            t.skip();
            continue;
        }
        let tx = random_angle(&mut rng);
        let ty = tx + rng.gen_range(-beta..=beta);
        let (x, y) = (spec.sphere_point(tx), spec.sphere_point(ty));
        if (y - x).norm() < IDENTITY_TOL {
            t.skip();
            continue;
        }
        let v = x + perp(x, y)?;
        let alpha = angle_between(x, v, y)?;
        t.ratio(alpha);
        t.record(beta - alpha, || {
            json!({ "theta_x": tx, "theta_y": ty, "alpha": alpha, "beta": beta })
        });
    }
    Ok(t.finish())
}

/// On the angular window, `‖x − y‖_E ≤ K²‖σx − σy‖_E` with `σ` the radial
/// projection onto the Euclidean circle.
pub fn check_estimate_segment(spec: &NormSpec, trials: u64, seed: u64) -> Result<CheckReport> {
    check_trials(trials)?;
    let k = require_normalized(spec)?;
    let beta = angular_window(k);
    let window = if beta < 1e-12 { PI } else { beta };
    let mut t = MarginTracker::new("estimate-segment", IDENTITY_TOL);
    t.bound(k * k);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        t.trial();
        let tx = random_angle(&mut rng);
        let ty = tx + rng.gen_range(-window..=window);
        let (x, y) = (spec.sphere_point(tx), spec.sphere_point(ty));
        let lhs = (x - y).norm();
        let rhs = (radial_project(x)? - radial_project(y)?).norm();
        if rhs > 0.0 {
            t.ratio(lhs / rhs);
        }
        t.record(k * k * rhs - lhs, || {
            json!({ "theta_x": tx, "theta_y": ty, "segment": lhs, "projected": rhs })
        });
    }
    Ok(t.finish())
}

/// Radial projection onto the Euclidean circle does not increase Euclidean
/// distances between points of `S_X` when `B_E ⊆ B_X`.
pub fn check_norm_decreasing(spec: &NormSpec, trials: u64, seed: u64) -> Result<CheckReport> {
    check_trials(trials)?;
    require_normalized(spec)?;
    let mut t = MarginTracker::new("norm-decreasing", IDENTITY_TOL);
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        t.trial();
        let (tx, ty) = (random_angle(&mut rng), random_angle(&mut rng));
        let (x, y) = (spec.sphere_point(tx), spec.sphere_point(ty));
        let lhs = (radial_project(x)? - radial_project(y)?).norm();
        let rhs = (x - y).norm();
        t.record(rhs - lhs, || {
            json!({ "theta_x": tx, "theta_y": ty, "projected": lhs, "segment": rhs })
        });
    }
    Ok(t.finish())
}

/// `d(x, y) ≤ bound·‖x − y‖_X` on random pairs of `S_X`, and also
/// `‖x − y‖_X ≤ d(x, y)` when `lower` is set. The witness names the side.
#[allow(clippy::too_many_arguments)]
fn sandwich_trials(
    targets: &mut [SandwichTarget<'_>],
    spec: &NormSpec,
    trials: u64,
    seed: u64,
    arc_tol: f64,
    to_original: impl Fn(Vec2) -> Vec2,
) -> Result<()> {
    for i in 0..trials {
        let mut rng = trial_rng(seed, i);
        let (tx, ty) = (random_angle(&mut rng), random_angle(&mut rng));
        let (x, y) = (spec.sphere_point(tx), spec.sphere_point(ty));
        let chord = spec.eval(x - y);
        if chord < IDENTITY_TOL {
            for target in targets.iter_mut() {
                target.tracker.trial();
                target.tracker.skip();
            }
            continue;
        }
        let d = intrinsic_distance(spec, x, y, arc_tol)?.value;
        let w = |side: &str| {
            json!({
                "side": side,
                "x": to_original(x),
                "y": to_original(y),
                "d": d,
                "chord": chord,
                "ratio": d / chord,
            })
        };
        for target in targets.iter_mut() {
            let t = &mut *target.tracker;
            t.trial();
            t.ratio(d / chord);
            if target.lower {
                t.record(d - chord, || w("lower"));
            }
            t.record(target.bound * chord - d, || w("upper"));
        }
    }
    Ok(())
}

/// A tracker fed by [`sandwich_trials`]: `d ≤ bound·chord`, and `chord ≤ d`
/// when `lower` is set.
struct SandwichTarget<'a> {
    tracker: &'a mut MarginTracker,
    bound: f64,
    lower: bool,
}

/// `‖x − y‖_X ≤ d(x, y) ≤ K³(π/2)‖x − y‖_X` after normalizing `X`, where `K`
/// is its sandwich ratio. Witness points are on the normalized sphere.
pub fn check_theorem_k_bound(spec: &NormSpec, trials: u64, seed: u64) -> Result<CheckReport> {
    check_theorem_k_bound_with(spec, trials, seed, ARC_TOL)
}

/// [`check_theorem_k_bound`] with an explicit arc tolerance; the check
/// tolerance is ten times `arc_tol`.
pub fn check_theorem_k_bound_with(spec: &NormSpec, trials: u64, seed: u64, arc_tol: f64) -> Result<CheckReport> {
    check_trials(trials)?;
    let (norm, k) = normalize_norm(spec)?;
    let bound = k.powi(3) * PI / 2.0;
    let mut t = MarginTracker::new("k-cubed-bound", 10.0 * arc_tol);
    t.bound(bound);
    let mut targets = [SandwichTarget { tracker: &mut t, bound, lower: true }];
    sandwich_trials(&mut targets, &norm, trials, seed, arc_tol, |p| p)?;
    Ok(t.finish())
}

/// Reports of the two constants checked on the sphere after the John change of
/// basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MainTheoremReport {
    /// `d ≤ √2·π·‖x − y‖_X`.
    pub sqrt2_pi: CheckReport,
    /// The sharp constant, `d ≤ 2‖x − y‖_X`.
    pub constant_two: CheckReport,
    /// Sandwich ratio of the normalized John image, at most `√2`.
    pub k: f64,
}

impl MainTheoremReport {
    pub fn passed(&self) -> bool {
        self.sqrt2_pi.passed && self.constant_two.passed
    }

    pub fn reports(&self) -> [&CheckReport; 2] {
        [&self.sqrt2_pi, &self.constant_two]
    }
}

/// Maps `X` by the change of basis of its John ellipse, normalizes, and checks
/// `‖x − y‖_X ≤ d(x, y) ≤ √2π‖x − y‖_X` and, in a separate report, the sharp
/// `d ≤ 2‖x − y‖_X` on the same random pairs. Witness points are in the original coordinates of `spec`.
pub fn check_main_theorem(spec: &NormSpec, trials: u64, seed: u64) -> Result<MainTheoremReport> {
    check_main_theorem_with(spec, trials, seed, ARC_TOL)
}

/// [`check_main_theorem`] with an explicit arc tolerance; the check tolerance
/// is ten times `arc_tol`.
pub fn check_main_theorem_with(spec: &NormSpec, trials: u64, seed: u64, arc_tol: f64) -> Result<MainTheoremReport> {
    check_trials(trials)?;
    let ellipse = inner_john_ellipse(spec, DEFAULT_FACETS, DEFAULT_SOLVER_TOL)?;
    let (pushed, t_map) = change_of_basis(spec, &ellipse)?;
    let (norm, k) = normalize_norm(&pushed)?;
    let back = t_map
        .inverse()
        .ok_or_else(|| Error::InvalidArgument("singular change of basis".into()))?;
    // Points of the normalized sphere are a common multiple of points of the
    // pushed sphere; undo both to land on S_X.
    let to_original = |p: Vec2| {
        let q = back.apply(p);
        q / spec.eval(q)
    };
    let tol = 10.0 * arc_tol;
    let mut loose = MarginTracker::new("sqrt2-pi-bound", tol);
    loose.bound(SQRT_2 * PI);
    let mut sharp = MarginTracker::new("constant-two", tol);
    sharp.bound(2.0);
    let mut targets = [
        SandwichTarget { tracker: &mut loose, bound: SQRT_2 * PI, lower: true },
        SandwichTarget { tracker: &mut sharp, bound: 2.0, lower: false },
    ];
    sandwich_trials(&mut targets, &norm, trials, seed, arc_tol, to_original)?;
    Ok(MainTheoremReport {
        sqrt2_pi: loose.finish(),
        constant_two: sharp.finish(),
        k,
    })
}

/// Best ratio found by [`ratio_search`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RatioSearchResult {
    pub best_ratio: f64,
    pub norm: NormSpec,
    pub x: Vec2,
    pub y: Vec2,
    pub theta_x: f64,
    pub theta_y: f64,
    pub trials: u64,
}

/// Arc tolerance used to evaluate the ratio of each polished candidate.
pub const SEARCH_TOL: f64 = 1e-8;
const SEARCH_TABLE_POINTS: usize = 8192;
const POLISH_WIDTHS: [f64; 4] = [PI / 2.0, PI / 8.0, PI / 32.0, PI / 128.0];

/// Random restarts over norms of `family` and angle pairs, each polished by
/// coordinate-wise golden-section search on `(θx, θy)`. The polish runs on a
/// cached inscribed arc table; every polished candidate is then re-evaluated
/// with [`distance_ratio`], and the largest of those values is returned.
pub fn ratio_search(family: NormFamily, budget: u64, seed: u64) -> Result<RatioSearchResult> {
    if budget == 0 {
        return Err(Error::InvalidArgument("budget must be >= 1".into()));
    }
    let mut best: Option<RatioSearchResult> = None;
    for i in 0..budget {
        let mut rng = trial_rng(seed, i);
        let spec = random_norm(family, i, &mut rng);
        let table = SphereArcTable::new(&spec, SEARCH_TABLE_POINTS);
        let objective = |a: f64, b: f64| approximate_ratio(&table, a, b);
        let mut tx = random_angle(&mut rng);
        let mut ty = random_angle(&mut rng);
        let mut current = objective(tx, ty);
        for w in POLISH_WIDTHS {
            let (a, fa) = golden_max(|a| objective(a, ty), tx - w, tx + w, 1e-10, 60);
            if fa > current {
                tx = a;
                current = fa;
            }
            let (b, fb) = golden_max(|b| objective(tx, b), ty - w, ty + w, 1e-10, 60);
            if fb > current {
                ty = b;
                current = fb;
            }
        }
        let (tx, ty) = (tx.rem_euclid(2.0 * PI), ty.rem_euclid(2.0 * PI));
        let (x, y) = (spec.sphere_point(tx), spec.sphere_point(ty));
        let ratio = if x == y { 1.0 } else { distance_ratio(&spec, x, y, SEARCH_TOL)? };
        if best.as_ref().map_or(true, |b| ratio > b.best_ratio) {
            best = Some(RatioSearchResult {
                best_ratio: ratio,
                norm: spec,
                x,
                y,
                theta_x: tx,
                theta_y: ty,
                trials: budget,
            });
        }
    }
    Ok(best.expect("budget >= 1"))
}

fn approximate_ratio(table: &SphereArcTable, tx: f64, ty: f64) -> f64 {
    let spec = table.spec();
    let (tx, ty) = (tx.rem_euclid(2.0 * PI), ty.rem_euclid(2.0 * PI));
    let chord = spec.eval(spec.sphere_point(tx) - spec.sphere_point(ty));
    if chord < 1e-9 {
        return 1.0;
    }
    table.distance(tx, ty) / chord
}
