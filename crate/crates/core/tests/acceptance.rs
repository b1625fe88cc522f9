//! Acceptance criteria 1 to 9. Each criterion prints one line; the test fails
//! if any of them does.

mod common;

use std::time::{Duration, Instant};

use common::{derivative_error, domain_formula_violations, random_expr, random_partial_map, random_point};
use dynsys::category::{verify_initiality_discrete, PointedSystem, State, SystemSpec, INITIALITY_CAP};
use dynsys::continuous::{
    check_f_relatedness, check_periodic_orbit, check_solution_preservation, default_samples, integrate,
    ContinuousSystem, IntegrateOptions, SmoothMap, Termination, DEFAULT_SAMPLE_COUNT,
};
use dynsys::discrete::{all_endomaps, check_dt_morphism, iterate, DiscreteMap, DiscreteSystem};
use dynsys::germ::{compose_partial, maximal_solution_domain, Endpoint, GermedSystem};
use dynsys::report::Verdict;
use dynsys::tau::{check_tau_morphism, ContinuousTau, DiscreteTau};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Name, time limit in seconds, check.
type Criterion = (&'static str, Option<u64>, fn() -> Outcome);

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn timed(limit: Option<Duration>, body: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = body();
    let elapsed = start.elapsed();
    o.detail = format!("{} [{:.2?}]", o.detail, elapsed);
    if let Some(limit) = limit {
        if elapsed > limit {
            o.passed = false;
            o.detail = format!("{} exceeds {:?}", o.detail, limit);
        }
    }
    o
}

fn sys(field: &[&str]) -> ContinuousSystem {
    ContinuousSystem::parse(field).unwrap()
}

fn map(components: &[&str]) -> SmoothMap {
    SmoothMap::parse(components, 1).unwrap()
}

/// `(name, f, X, Y)` with `f` relating `X` to `Y`.
fn related_triples() -> Vec<(&'static str, SmoothMap, ContinuousSystem, ContinuousSystem)> {
    vec![
        ("identity on ẋ=x", SmoothMap::identity(1), sys(&["x1"]), sys(&["x1"])),
        ("translation t ↦ t + 3", map(&["x1 + 3"]), sys(&["1"]), sys(&["1"])),
        ("exp from ẋ=1 to ẏ=y", map(&["exp(x1)"]), sys(&["1"]), sys(&["x1"])),
    ]
}

fn unrelated_pairs() -> Vec<(&'static str, SmoothMap, ContinuousSystem, ContinuousSystem)> {
    vec![
        ("identity from ẋ=x to ẏ=2y", SmoothMap::identity(1), sys(&["x1"]), sys(&["2*x1"])),
        ("x+1 on ẋ=x", map(&["x1 + 1"]), sys(&["x1"]), sys(&["x1"])),
        ("2x on ẋ=1", map(&["2*x1"]), sys(&["1"]), sys(&["1"])),
    ]
}

fn criterion_1() -> Outcome {
    let mut instances = 0;
    let mut bad = Vec::new();
    for n in 1..=3 {
        for system in all_endomaps(n) {
            for c0 in system.elements() {
                instances += 1;
                let pointed = PointedSystem::new(SystemSpec::Discrete(system.clone()), State::Element(c0.clone())).unwrap();
                let r = verify_initiality_discrete(6, &pointed, INITIALITY_CAP).unwrap();
                let orbit = iterate(&system, c0, 6).unwrap().points;
                if r.count != 1 || r.morphism.as_ref() != Some(&orbit) {
                    bad.push(format!("{:?} @ {c0}: count {}", system.endomap(), r.count));
                }
            }
        }
    }
    outcome(bad.is_empty(), format!("{instances} pointed systems, unique morphism equal to the orbit in all; failures {bad:?}"))
}

fn criterion_2() -> Outcome {
    let mut lines = Vec::new();
    let mut ok = true;
    for (name, f, x, y) in related_triples() {
        let r = check_f_relatedness(&f, &x, &y, &default_samples(x.domain(), DEFAULT_SAMPLE_COUNT), 1e-8).unwrap();
        ok &= r.passed() && r.residual < 1e-10;
        lines.push(format!("{name}: {:e}", r.residual));
    }
    for (name, f, x, y) in unrelated_pairs() {
        let r = check_f_relatedness(&f, &x, &y, &default_samples(x.domain(), DEFAULT_SAMPLE_COUNT), 1e-8).unwrap();
        ok &= !r.passed() && r.residual > 1e-2;
        lines.push(format!("{name}: {:e}", r.residual));
    }
    outcome(ok, lines.join("; "))
}

fn criterion_3() -> Outcome {
    let mut worst = 0.0f64;
    let mut ok = true;
    for (_, f, x, y) in related_triples() {
        for x0 in [-1.5, 0.0, 0.5, 2.0] {
            let r = check_solution_preservation(&f, &x, &y, &[x0], 1.0, 1e-5, &IntegrateOptions::default()).unwrap();
            ok &= r.report.passed() && !r.truncated && r.span == (0.0, 1.0);
            worst = worst.max(r.report.residual);
        }
    }
    ok &= worst < 1e-5;
    outcome(ok, format!("max ‖f(φ_X) − φ_Y‖ = {worst:e} over 3 triples × 4 starts"))
}

fn criterion_4() -> Outcome {
    let square = sys(&["x1^2"]);
    let mut ok = true;
    let mut lines = Vec::new();
    for (x0, lo, hi) in [(1.0, 0.99, 1.01), (2.0, 0.49, 0.51)] {
        let traj = integrate(&square, &[x0], 5.0, &IntegrateOptions::default()).unwrap();
        ok &= traj.termination == Termination::BlowUp && (lo..=hi).contains(&traj.t_hi);
        lines.push(format!("x0 = {x0}: escape at {}", traj.t_hi));
    }
    outcome(ok, lines.join("; "))
}

#[allow(clippy::approx_constant)]
fn criterion_5() -> Outcome {
    let opts = IntegrateOptions::default();
    let traj = integrate(&sys(&["x1"]), &[1.0], 1.0, &opts).unwrap();
    let exp_err = (traj.final_state()[0] - 2.718281828).abs();
    let periodic =
        check_periodic_orbit(&sys(&["x2", "-x1"]), &[1.0, 0.0], std::f64::consts::TAU, 1e-6, &opts).unwrap();
    outcome(
        exp_err < 1e-6 && periodic.passed(),
        format!("|x(1) − e| = {exp_err:e}; ‖φ(2π) − (1,0)‖ = {:e}", periodic.residual),
    )
}

fn criterion_6() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut violations = 0;
    let mut first = None;
    for _ in 0..500 {
        let (f, g) = (random_partial_map(&mut rng), random_partial_map(&mut rng));
        let points: Vec<f64> = (0..10_000).map(|_| rng.random_range(-8.0..8.0)).collect();
        let bad = domain_formula_violations(&f, &g, &points);
        if !bad.is_empty() && first.is_none() {
            first = Some(format!("f = {} on {}, g = {} on {}, p = {}", f.map(), f.domain(), g.map(), g.domain(), bad[0]));
        }
        violations += bad.len();
    }
    let mut assoc_failures = 0;
    for _ in 0..200 {
        let (f, g, h) = (random_partial_map(&mut rng), random_partial_map(&mut rng), random_partial_map(&mut rng));
        let left = compose_partial(&f, &compose_partial(&g, &h).unwrap()).unwrap();
        let right = compose_partial(&compose_partial(&f, &g).unwrap(), &h).unwrap();
        if left.domain() != right.domain() {
            assoc_failures += 1;
        }
    }
    outcome(
        violations == 0 && assoc_failures == 0,
        format!(
            "{violations} domain-formula violations in 500 × 10^4 points{}; {assoc_failures}/200 associativity failures",
            first.map(|w| format!(" (first: {w})")).unwrap_or_default()
        ),
    )
}

fn criterion_7() -> Outcome {
    let line = GermedSystem::parse("1", f64::NEG_INFINITY, f64::INFINITY, &[0.0]).unwrap();
    let sol = maximal_solution_domain(&line, 1.0, 10.0, &IntegrateOptions::default()).unwrap();
    let lower = sol.lower.time();
    let crossed = sol.backward.states.iter().chain(&sol.forward.states).any(|x| x[0] <= 0.0);
    outcome(
        matches!(sol.lower, Endpoint::Boundary(_)) && (lower + 1.0).abs() < 1e-6 && !crossed,
        format!("lower endpoint {lower}, puncture crossed: {crossed}"),
    )
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (mut worst, mut checked) = (0.0f64, 0);
    for _ in 0..100 {
        let e = random_expr(&mut rng, 2);
        for _ in 0..10 {
            let p = random_point(&mut rng, 2);
            for var in 1..=2 {
                if let Some(err) = derivative_error(&e, &p, 0.3, var) {
                    worst = worst.max(err);
                    checked += 1;
                }
            }
        }
    }
    outcome(worst < 1e-5 && checked > 0, format!("max relative error {worst:e} over {checked} defined points"))
}

fn criterion_9() -> Outcome {
    let (mut cases, mut agree) = (0, 0);
    let named = |n: usize, table: Vec<usize>| {
        DiscreteSystem::from_indices((0..n).map(|i| format!("e{i}")).collect(), table).unwrap()
    };
    let systems = [named(2, vec![1, 1]), named(2, vec![1, 0]), named(3, vec![1, 2, 0]), named(1, vec![0])];
    for src in &systems {
        for dst in &systems {
            let m = dst.len();
            for code in 0..m.pow(src.len() as u32) {
                let table = (0..src.len()).map(|i| code / m.pow(i as u32) % m).collect();
                let alpha = DiscreteMap::from_indices(table, m).unwrap();
                let concrete = check_dt_morphism(&alpha, src, dst).unwrap().verdict;
                let points: Vec<usize> = (0..src.len()).collect();
                let tau = check_tau_morphism(&alpha, &DiscreteTau::system(src), &DiscreteTau::system(dst), &points, 0.0)
                    .unwrap()
                    .verdict;
                cases += 1;
                agree += usize::from(concrete == tau);
            }
        }
    }
    let mut verdicts = [0usize; 2];
    for (_, f, x, y) in related_triples().into_iter().chain(unrelated_pairs()) {
        let samples = default_samples(x.domain(), DEFAULT_SAMPLE_COUNT);
        let concrete = check_f_relatedness(&f, &x, &y, &samples, 1e-8).unwrap().verdict;
        let tau = check_tau_morphism(&f, &ContinuousTau::system(&x), &ContinuousTau::system(&y), &samples, 1e-8)
            .unwrap()
            .verdict;
        verdicts[usize::from(concrete == Verdict::Pass)] += 1;
        cases += 1;
        agree += usize::from(concrete == tau);
    }
    outcome(
        cases >= 20 && agree == cases && verdicts[0] > 0 && verdicts[1] > 0,
        format!("{agree}/{cases} verdicts agree"),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 9] = [
        ("discrete universal property", Some(10), criterion_1),
        ("f-relatedness battery", Some(1), criterion_2),
        ("solution preservation", Some(1), criterion_3),
        ("blow-up", Some(1), criterion_4),
        ("integrator accuracy", Some(1), criterion_5),
        ("partial-map laws", Some(30), criterion_6),
        ("punctured-line maximal domain", None, criterion_7),
        ("symbolic differentiation", None, criterion_8),
        ("τ-abstraction coherence", None, criterion_9),
    ];
    let mut failed = Vec::new();
    println!();
    for (i, (name, limit, run)) in criteria.into_iter().enumerate() {
        let o = timed(limit.map(Duration::from_secs), run);
        println!("criterion {} {}: {} {}", i + 1, name, if o.passed { "PASS" } else { "FAIL" }, o.detail);
        if !o.passed {
            failed.push(i + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
