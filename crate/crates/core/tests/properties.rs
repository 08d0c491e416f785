use std::f64::consts::PI;

use approx::assert_abs_diff_eq;
use intrinsic_sphere::geometry::{sphere_circle_contacts, tangent_points};
use intrinsic_sphere::john::{inner_john_ellipse, solve_john_facets, verify_john, DEFAULT_FACETS, DEFAULT_SOLVER_TOL};
use intrinsic_sphere::metric::{angle_of, arc_length, euclidean_intrinsic_oracle};
use intrinsic_sphere::norms::{normalize_norm, sandwich_constants, section_norm, validate_norm, NormSpecN};
use intrinsic_sphere::sampling::{random_norm, random_polygon, trial_rng, NormFamily};
use intrinsic_sphere::verify::{check_theorem_k_bound, ratio_search, SEARCH_TOL};
use intrinsic_sphere::{distance_ratio, intrinsic_distance, Mat2, NormSpec, Vec2};
use proptest::prelude::*;
use rand::Rng;

const TOL: f64 = 1e-8;

fn any_norm() -> impl Strategy<Value = NormSpec> {
    (any::<u64>(), 0u64..3).prop_map(|(seed, idx)| random_norm(NormFamily::Mixed, idx, &mut trial_rng(seed, idx)))
}

fn angle() -> impl Strategy<Value = f64> {
    0.0..2.0 * PI
}

fn direction() -> impl Strategy<Value = Vec2> {
    (angle(), -3.0f64..3.0).prop_map(|(t, e)| Vec2::new(t.cos(), t.sin()) * 10f64.powf(e))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn normalizing_a_vector_lands_on_the_sphere(spec in any_norm(), v in direction()) {
        let n = spec.eval(v);
        prop_assert!((spec.eval(v / n) - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn sphere_point_keeps_its_angle(spec in any_norm(), t in angle()) {
        let back = angle_of(spec.sphere_point(t)).unwrap();
        let diff = (back - t).rem_euclid(2.0 * PI);
        prop_assert!(diff.min(2.0 * PI - diff) < 1e-12);
    }

    #[test]
    fn normalized_norm_is_sandwiched(spec in any_norm(), v in direction()) {
        let (norm, k) = normalize_norm(&spec).unwrap();
        let (nx, ne) = (norm.eval(v), v.norm());
        prop_assert!(nx <= ne * (1.0 + 1e-9));
        prop_assert!(ne <= k * nx * (1.0 + 1e-9));
        let c = sandwich_constants(&norm, 4096).unwrap();
        prop_assert!((c.inradius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn sections_are_norms(p in 1.0f64..8.0, seed in any::<u64>()) {
        let mut rng = trial_rng(seed, 0);
        let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let ambient = NormSpecN::lp(p, 4).unwrap();
        if let Ok(spec) = section_norm(&ambient, &x, &y) {
            let report = validate_norm(&spec, 200, seed).unwrap();
            prop_assert!(report.passed, "{:?}", report);
        }
    }

    #[test]
    fn tangent_point_is_tangent(spec in any_norm(), t in angle(), toward in angle()) {
        let (norm, _) = normalize_norm(&spec).unwrap();
        let x = norm.sphere_point(t);
        let td = tangent_points(x, Vec2::new(toward.cos(), toward.sin())).unwrap();
        prop_assert!((x - td.tau).dot(td.tau).abs() <= 1e-9);
        prop_assert!((td.tau.norm() - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn contact_points_bound_the_sphere(spec in any_norm(), t in angle()) {
        let (norm, _) = normalize_norm(&spec).unwrap();
        let y = norm.sphere_point(t);
        for c in sphere_circle_contacts(&norm, 1024) {
            prop_assert!(c.dot(y) <= 1.0 + 1e-9);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn distance_dominates_the_chord_and_is_symmetric(spec in any_norm(), a in angle(), b in angle()) {
        let (x, y) = (spec.sphere_point(a), spec.sphere_point(b));
        let dxy = intrinsic_distance(&spec, x, y, TOL).unwrap().value;
        let dyx = intrinsic_distance(&spec, y, x, TOL).unwrap().value;
        prop_assert!(spec.eval(x - y) <= dxy + 1e-9);
        prop_assert!((dxy - dyx).abs() <= 2.0 * TOL * dxy.max(1.0));
        prop_assert!(dxy <= 2.0 * spec.eval(x - y) + 10.0 * TOL);
    }

    #[test]
    fn triangle_inequality(spec in any_norm(), a in angle(), b in angle(), c in angle()) {
        let p = |t: f64| spec.sphere_point(t);
        let d = |u: f64, v: f64| intrinsic_distance(&spec, p(u), p(v), TOL).unwrap().value;
        prop_assert!(d(a, c) <= d(a, b) + d(b, c) + 3.0 * TOL * 8.0);
    }

    #[test]
    fn euclidean_distance_matches_great_circle(a in angle(), b in angle()) {
        let spec = NormSpec::l2();
        let (x, y) = (Vec2::new(a.cos(), a.sin()), Vec2::new(b.cos(), b.sin()));
        let d = intrinsic_distance(&spec, x, y, TOL).unwrap().value;
        let oracle = euclidean_intrinsic_oracle(x, y).unwrap();
        prop_assert!((d - oracle).abs() <= 10.0 * TOL);
        if x != y {
            prop_assert!(d / (x - y).norm() <= PI / 2.0 + 10.0 * TOL);
        }
    }

    /// Any path on the sphere that wanders back and forth between x and y is
    /// at least as long as the shorter arc.
    #[test]
    fn wandering_sphere_paths_are_not_shorter(
        spec in any_norm(),
        a in angle(),
        b in angle(),
        steps in prop::collection::vec(-3.0f64..3.0, 1..5),
        wrap in any::<bool>(),
    ) {
        let target = if wrap { b + 2.0 * PI } else { b };
        let mut waypoints = vec![a];
        waypoints.extend(steps.iter().scan(a, |s, d| { *s += d; Some(*s) }));
        waypoints.push(target);
        let mut length = 0.0;
        for w in waypoints.windows(2) {
            let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
            let mut start = lo;
            while start < hi {
                let end = (start + PI).min(hi);
                length += arc_length(&spec, start, end, TOL).unwrap().value;
                start = end;
            }
        }
        let d = intrinsic_distance(&spec, spec.sphere_point(a), spec.sphere_point(b), TOL).unwrap().value;
        prop_assert!(length >= d - 1e-7);
    }

    #[test]
    fn refinement_never_decreases(spec in any_norm(), a in angle(), span in 0.01f64..6.2) {
        let mut last = 0.0;
        for tol in [1e-3, 1e-5, 1e-7, 1e-9] {
            let r = arc_length(&spec, a, a + span, tol).unwrap();
            prop_assert!(r.lower >= last);
            prop_assert!(r.lower <= r.value && r.value <= r.upper);
            last = r.lower;
        }
    }

    #[test]
    fn ratio_is_within_the_sharp_constant(spec in any_norm(), a in angle(), b in angle()) {
        let (x, y) = (spec.sphere_point(a), spec.sphere_point(b));
        prop_assume!((x - y).norm() > 1e-9);
        let r = distance_ratio(&spec, x, y, TOL).unwrap();
        prop_assert!((1.0 - 1e-9..=2.0 + 10.0 * TOL).contains(&r), "ratio {r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn john_ellipse_is_optimal_and_touches(seed in any::<u64>(), perturb in any::<u64>()) {
        let spec = random_polygon(&mut trial_rng(seed, 0));
        let normals = spec.as_polygon().unwrap().facet_normals().to_vec();
        let fit = solve_john_facets(&normals, DEFAULT_SOLVER_TOL).unwrap();
        let l = fit.shape;
        let active = normals.iter().filter(|a| (l.apply(**a).norm() - 1.0).abs() <= 1e-6).count();
        prop_assert!(active >= 4, "only {active} active facets");

        let mut rng = trial_rng(perturb, 1);
        for _ in 0..20 {
            let (p, q, r): (f64, f64, f64) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let size = (p * p + 2.0 * q * q + r * r).sqrt();
            let d = Mat2::new(p, q, q, r).scale(1e-4 / size);
            let moved = Mat2::new(l.a + d.a, l.b + d.b, l.c + d.c, l.d + d.d);
            let worst = normals.iter().map(|a| moved.apply(*a).norm()).fold(0.0, f64::max);
            let feasible = moved.scale(1.0 / worst);
            prop_assert!(feasible.det().ln() <= l.det().ln() + 1e-6);
        }

        let cert = verify_john(&spec, &fit.ellipse().unwrap(), 1024).unwrap();
        prop_assert!(cert.passed(), "{:?}", cert);
    }

    #[test]
    fn john_ellipse_is_affine_equivariant(seed in any::<u64>(), angle1 in 0.0..PI, angle2 in 0.0..PI, s1 in 0.5f64..2.0, s2 in 0.5f64..2.0) {
        let spec = random_polygon(&mut trial_rng(seed, 0));
        let t = Mat2::rotation(angle1).mul(&Mat2::diag(s1, s2)).mul(&Mat2::rotation(angle2));
        let image = NormSpec::polygon(
            spec.as_polygon().unwrap().vertices().iter().map(|v| t.apply(*v)).collect(),
        ).unwrap();
        let direct = inner_john_ellipse(&image, DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap();
        let mapped = inner_john_ellipse(&spec, DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap().mapped(t).unwrap();
        prop_assert!(direct.matrix().max_abs_diff(&mapped.matrix()) <= 1e-6);
    }

    #[test]
    fn john_certificate_on_smooth_norms(seed in any::<u64>()) {
        let spec = random_norm(NormFamily::Lp, 0, &mut trial_rng(seed, 0));
        let e = inner_john_ellipse(&spec, DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap();
        let cert = verify_john(&spec, &e, 2048).unwrap();
        prop_assert!(cert.passed(), "{:?}", cert);
    }
}

#[test]
fn k_bound_witness_replays() {
    let spec = NormSpec::lp(6.0).unwrap();
    let report = check_theorem_k_bound(&spec, 100, 4).unwrap();
    assert!(report.passed);
    let (norm, _) = normalize_norm(&spec).unwrap();
    let w = &report.witness;
    let x: Vec2 = serde_json::from_value(w["x"].clone()).unwrap();
    let y: Vec2 = serde_json::from_value(w["y"].clone()).unwrap();
    let d = intrinsic_distance(&norm, x, y, 1e-8).unwrap().value;
    assert_abs_diff_eq!(d, w["d"].as_f64().unwrap(), epsilon = 1e-12);
}

#[test]
fn ellipse_search_finds_the_euclidean_constant() {
    let r = ratio_search(NormFamily::Ellipse, 60, 12).unwrap();
    assert_abs_diff_eq!(r.best_ratio, PI / 2.0, epsilon = 1e-3);
    assert_eq!(distance_ratio(&r.norm, r.x, r.y, SEARCH_TOL).unwrap(), r.best_ratio);
}

#[test]
fn lp_search_approaches_two() {
    let r = ratio_search(NormFamily::Lp, 1000, 1).unwrap();
    assert!((1.99..=2.0 + 10.0 * SEARCH_TOL).contains(&r.best_ratio), "{}", r.best_ratio);
}

