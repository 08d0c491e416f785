//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::process::Command;
use std::time::{Duration, Instant};

use intrinsic_sphere::john::{inner_john_ellipse, verify_john, DEFAULT_FACETS, DEFAULT_SOLVER_TOL};
use intrinsic_sphere::metric::{arc_length, arc_length_refined, circumference, vertex_walk, SEGMENT_CAP};
use intrinsic_sphere::norms::normalize_norm;
use intrinsic_sphere::sampling::{random_ellipse, random_norm, random_polygon, trial_rng, NormFamily};
use intrinsic_sphere::verify::{
    check_estimate_segment, check_lemma_angles, check_lemma_tangent_lines, check_main_theorem_with,
    check_norm_decreasing, check_theorem_k_bound_with,
};
use intrinsic_sphere::{distance_ratio, intrinsic_distance, Mat2, NormSpec, Vec2};
use rand::Rng;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.1}s]", o.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            o.passed = false;
            o.detail = format!("{} exceeds {}s limit", o.detail, limit.as_secs());
        }
    }
    o
}

/// Independent Euclidean great-circle oracle.
fn circle_oracle(x: Vec2, y: Vec2) -> f64 {
    let chord = (x.x - y.x).hypot(x.y - y.y);
    2.0 * (chord / 2.0).min(1.0).asin()
}

fn euclidean_oracle() -> Outcome {
    let spec = NormSpec::l2();
    let mut worst: f64 = 0.0;
    for i in 0..10_000u64 {
        let mut rng = trial_rng(101, i);
        let (a, b): (f64, f64) = (rng.gen_range(0.0..2.0 * PI), rng.gen_range(0.0..2.0 * PI));
        let (x, y) = (Vec2::new(a.cos(), a.sin()), Vec2::new(b.cos(), b.sin()));
        let d = intrinsic_distance(&spec, x, y, 1e-7).expect("distance").value;
        worst = worst.max((d - circle_oracle(x, y)).abs());
    }
    outcome(worst <= 1e-6, format!("10^4 pairs, max |d - oracle| = {worst:.2e}"))
}

fn antipodal_ratio() -> Outcome {
    let spec = NormSpec::l2();
    let mut worst: f64 = 0.0;
    for k in 0..16 {
        let a = 0.37 + k as f64 * PI / 8.0;
        let x = Vec2::new(a.cos(), a.sin());
        let r = distance_ratio(&spec, x, -x, 1e-10).expect("ratio");
        worst = worst.max((r - FRAC_PI_2).abs());
    }
    outcome(worst <= 1e-6, format!("16 antipodal pairs, max |ratio - pi/2| = {worst:.2e}"))
}

fn square_worst_case() -> Outcome {
    let spec = NormSpec::linf();
    let x = Vec2::new(1.0, 0.01);
    let y = Vec2::new(-1.0, 0.01);
    let d = intrinsic_distance(&spec, x, y, 1e-10).expect("distance").value;
    let r = distance_ratio(&spec, x, y, 1e-10).expect("ratio");
    let mut ok = (d - 3.98).abs() <= 1e-6 && (r - 1.99).abs() <= 1e-6;
    let mut last = 0.0;
    let mut sweep = Vec::new();
    for eps in [0.2, 0.1, 0.05, 0.01] {
        let r = distance_ratio(&spec, Vec2::new(1.0, eps), Vec2::new(-1.0, eps), 1e-10).expect("ratio");
        ok &= (r - (2.0 - eps)).abs() <= 1e-6 && r > last && r < 2.0;
        last = r;
        sweep.push(format!("{r:.6}"));
    }
    outcome(ok, format!("d = {d:.9}, ratio = {r:.9}, sweep 2-eps: {}", sweep.join(" < ")))
}

fn main_theorem() -> Outcome {
    let norms = 1002u64;
    let mut loose_violations = 0;
    let mut sharp_violations = 0;
    let mut max_ratio: f64 = 0.0;
    let mut max_k: f64 = 0.0;
    let mut errors = Vec::new();
    for i in 0..norms {
        let mut rng = trial_rng(2024, i);
        let spec = random_norm(NormFamily::Mixed, i, &mut rng);
        match check_main_theorem_with(&spec, 100, 7000 + i, 1e-7) {
            Ok(rep) => {
                loose_violations += usize::from(!rep.sqrt2_pi.passed);
                sharp_violations += usize::from(!rep.constant_two.passed);
                max_ratio = max_ratio.max(rep.constant_two.max_ratio.unwrap_or(1.0));
                max_k = max_k.max(rep.k);
            }
            Err(e) => errors.push(format!("norm {i}: {e}")),
        }
    }
    outcome(
        loose_violations == 0 && sharp_violations == 0 && errors.is_empty(),
        format!(
            "{norms} norms x 100 pairs, sqrt2*pi violations {loose_violations}, constant-2 violations \
             {sharp_violations}, errors {}, max ratio {max_ratio:.9}, max K {max_k:.9}{}",
            errors.len(),
            errors.first().map(|e| format!(", first error {e}")).unwrap_or_default()
        ),
    )
}

fn tested_norms() -> Vec<(String, NormSpec)> {
    let mut v = vec![
        ("linf".to_string(), NormSpec::linf()),
        ("l1".to_string(), NormSpec::l1()),
        ("l2".to_string(), NormSpec::l2()),
        ("l1.3".to_string(), NormSpec::lp(1.3).unwrap()),
        ("l3".to_string(), NormSpec::lp(3.0).unwrap()),
        ("l12".to_string(), NormSpec::lp(12.0).unwrap()),
    ];
    for i in 0..20 {
        v.push((format!("polygon#{i}"), random_polygon(&mut trial_rng(55, i))));
    }
    for i in 0..10 {
        v.push((format!("ellipse#{i}"), random_ellipse(&mut trial_rng(56, i))));
    }
    v
}

fn k_bound() -> Outcome {
    let mut failures = Vec::new();
    let mut tightest = f64::INFINITY;
    for (name, spec) in tested_norms() {
        let rep = check_theorem_k_bound_with(&spec, 200, 8, 1e-7).expect("k bound");
        let bound = rep.bound.unwrap();
        let max = rep.max_ratio.unwrap_or(1.0);
        tightest = tightest.min(bound - max);
        if !rep.passed || max > bound + 1e-6 {
            failures.push(name);
        }
    }
    outcome(
        failures.is_empty(),
        format!("36 norms, smallest slack K^3*pi/2 - max ratio = {tightest:.4}, failures {failures:?}"),
    )
}

fn lemma_suites() -> Outcome {
    let mut norms = vec![
        ("linf".to_string(), NormSpec::linf()),
        ("l1".to_string(), normalize_norm(&NormSpec::l1()).unwrap().0),
        ("l2".to_string(), NormSpec::l2()),
    ];
    for i in 0..50 {
        let p = random_polygon(&mut trial_rng(66, i));
        norms.push((format!("polygon#{i}"), normalize_norm(&p).unwrap().0));
    }
    let mut worst = f64::INFINITY;
    let mut failures = Vec::new();
    for (name, spec) in &norms {
        let reports = [
            check_lemma_tangent_lines(spec, 10_000, 1),
            check_lemma_angles(spec, 10_000, 2),
            check_estimate_segment(spec, 10_000, 3),
            check_norm_decreasing(spec, 10_000, 4),
        ];
        for r in reports {
            match r {
                Ok(r) => {
                    let m = r.worst_margin.unwrap_or(0.0);
                    worst = worst.min(m);
                    if !r.passed || m < -1e-9 {
                        failures.push(format!("{name}/{}", r.name));
                    }
                }
                Err(e) => failures.push(format!("{name}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{} norms x 4 checks x 10^4 trials, worst margin {worst:.2e}, failures {failures:?}", norms.len()),
    )
}

fn max_entry_diff(a: Mat2, b: Mat2) -> f64 {
    a.max_abs_diff(&b)
}

fn john() -> Outcome {
    let mut ok = true;
    let mut notes = Vec::new();

    let e = inner_john_ellipse(&NormSpec::linf(), DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap();
    let diff = max_entry_diff(e.matrix(), Mat2::IDENTITY);
    ok &= diff <= 1e-6;
    notes.push(format!("linf |M - I| = {diff:.1e}"));

    let cert = verify_john(&NormSpec::linf(), &e, 4096).unwrap();
    let corner = cert.outer_witness;
    let at_corner = (corner.x.abs() - 1.0).abs() < 1e-9 && (corner.y.abs() - 1.0).abs() < 1e-9;
    ok &= cert.passed() && cert.worst_outer_margin.abs() <= 1e-6 && at_corner;
    notes.push(format!(
        "certificate {} with outer contact at ({}, {})",
        if cert.passed() { "ok" } else { "FAILED" },
        corner.x,
        corner.y
    ));

    let rect = NormSpec::polygon(vec![
        Vec2::new(2.0, 1.0),
        Vec2::new(-2.0, 1.0),
        Vec2::new(-2.0, -1.0),
        Vec2::new(2.0, -1.0),
    ])
    .unwrap();
    let e = inner_john_ellipse(&rect, DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap();
    let diff = max_entry_diff(e.matrix(), Mat2::diag(0.25, 1.0));
    ok &= diff <= 1e-6;
    notes.push(format!("rectangle |M - diag(1/4,1)| = {diff:.1e}"));

    // Equivariance: the image polygon is built explicitly, so the solver runs
    // on it from scratch rather than through the linear-map reduction.
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let mut rng = trial_rng(77, i);
        let spec = random_polygon(&mut rng);
        let poly = spec.as_polygon().unwrap();
        let rot = Mat2::rotation(rng.gen_range(0.0..PI));
        let a = rot
            .mul(&Mat2::diag(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0)))
            .mul(&Mat2::rotation(rng.gen_range(0.0..PI)));
        let image = NormSpec::polygon(poly.vertices().iter().map(|v| a.apply(*v)).collect()).unwrap();
        let direct = inner_john_ellipse(&image, DEFAULT_FACETS, DEFAULT_SOLVER_TOL).unwrap();
        let mapped = inner_john_ellipse(&spec, DEFAULT_FACETS, DEFAULT_SOLVER_TOL)
            .unwrap()
            .mapped(a)
            .unwrap();
        let scale = direct.matrix().max_abs_diff(&Mat2::new(0.0, 0.0, 0.0, 0.0)).max(1.0);
        worst = worst.max(direct.matrix().max_abs_diff(&mapped.matrix()) / scale);
    }
    ok &= worst <= 1e-5;
    notes.push(format!("100 linear images, max relative entry difference {worst:.1e}"));
    outcome(ok, notes.join("; "))
}

fn arc_convergence() -> Outcome {
    let mut ok = true;
    let cases = [
        NormSpec::lp(3.0).unwrap(),
        NormSpec::lp(1.5).unwrap(),
        NormSpec::ellipse(Mat2::new(3.0, 1.0, 1.0, 0.5)).unwrap(),
    ];
    for spec in &cases {
        let mut last = 0.0;
        let mut tol = 1e-3;
        while tol >= 1e-11 {
            let r = arc_length(spec, 0.2, 2.9, tol).unwrap();
            ok &= r.lower >= last && r.lower <= r.value && r.value <= r.upper;
            last = r.lower;
            tol /= 2.0;
        }
    }
    let square = NormSpec::linf();
    let walk = vertex_walk(&square, &square.as_polygon().unwrap(), 0.0, FRAC_PI_2).value;
    let refined = arc_length_refined(&square, 0.0, FRAC_PI_2, 1e-12, SEGMENT_CAP).unwrap();
    ok &= (walk - 2.0).abs() <= 1e-9 && (refined.value - 2.0).abs() <= 1e-9 && (refined.upper - 2.0).abs() <= 1e-9;
    outcome(
        ok,
        format!(
            "lower brackets monotone over 28 tolerance halvings on 3 norms; linf quarter arc: walk {walk}, refinement [{}, {}]",
            refined.lower, refined.upper
        ),
    )
}

fn circumference_oracle() -> Outcome {
    let mut ok = true;
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for (_, spec) in tested_norms() {
        let c = circumference(&spec, 1e-9).unwrap().value;
        ok &= (6.0 - 1e-6..=8.0 + 1e-6).contains(&c);
        range = (range.0.min(c), range.1.max(c));
    }
    let l2 = circumference(&NormSpec::l2(), 1e-12).unwrap().value;
    let linf = circumference(&NormSpec::linf(), 1e-12).unwrap().value;
    let l1 = circumference(&NormSpec::l1(), 1e-12).unwrap().value;
    ok &= (l2 - 2.0 * PI).abs() <= 1e-6 && (linf - 8.0).abs() <= 1e-12 && (l1 - 8.0).abs() <= 1e-12;
    outcome(
        ok,
        format!(
            "external classical check (self-perimeter of a planar unit sphere lies in [6, 8]): \
             36 norms in [{:.6}, {:.6}], l2 {l2:.9}, linf {linf}, l1 {l1}",
            range.0, range.1
        ),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_intrinsic-sphere");
    let runs = [
        vec!["verify", "--norm", r#"{"type":"lp","p":"inf"}"#, "--trials", "300", "--seed", "5"],
        vec!["verify", "--norm", r#"{"type":"lp","p":3}"#, "--trials", "100", "--seed", "9"],
        vec!["search", "--family", "mixed", "--budget", "40", "--seed", "3"],
    ];
    let mut ok = true;
    for args in &runs {
        let first = Command::new(bin).args(args).output().expect("run binary");
        let second = Command::new(bin).args(args).output().expect("run binary");
        ok &= first.status.success() && first.stdout == second.stdout && !first.stdout.is_empty();
    }
    outcome(ok, "verify (2 norms) and search outputs byte-identical across two runs")
}

fn main() {
    let criteria: Vec<(&str, Box<dyn FnOnce() -> Outcome>)> = vec![
        ("euclidean oracle", Box::new(|| timed(Some(Duration::from_secs(10)), euclidean_oracle))),
        ("euclidean extremal ratio", Box::new(|| timed(None, antipodal_ratio))),
        ("square worst case", Box::new(|| timed(None, square_worst_case))),
        ("main theorem and constant 2", Box::new(|| timed(Some(Duration::from_secs(300)), main_theorem))),
        ("K^3 pi/2 bound", Box::new(|| timed(None, k_bound))),
        ("lemma suites", Box::new(|| timed(None, lemma_suites))),
        ("John ellipse", Box::new(|| timed(None, john))),
        ("arc-length convergence", Box::new(|| timed(None, arc_convergence))),
        ("circumference oracle", Box::new(|| timed(None, circumference_oracle))),
        ("determinism", Box::new(|| timed(None, determinism))),
    ];
    // Optional criterion numbers on the command line restrict the run.
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, run)) in criteria.into_iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let o = run();
        if !o.passed {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<28} {}  {}",
            i + 1,
            name,
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} of {ran} criteria passed", ran - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
