//! Acceptance checks, one PASS/FAIL line per criterion.
//!
//! Runs without the libtest harness so the lines always reach the output.
//! The process fails only when a criterion outside `KNOWN_FAILURES` fails;
//! the known failures are still printed as FAIL with their numbers.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::time::Instant;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use kr_steer::conversion::{build_chain, domain_window, universal_point};
use kr_steer::kr_forms::{build_kr, derived_flag_dims, kappa3, KrTag, KrWord};
use kr_steer::nilpotency::{generate_algebra, lower_central_series};
use kr_steer::planner::{endpoint_map_for_word, parabola_rhs, reachable, TwoTrailerQuadratic};
use kr_steer::scalar::{int, ratio, Rational};
use kr_steer::sim::{bundled_scenario, run_scenario};
use kr_steer::trailer::{trailer_fields, Configuration};

/// Criteria that fail for documented reasons (see the README section on
/// reproduced results): the first figure's closed loop needs more than
/// 10^4 RK4 steps for 1e-6, and the expected gamma(0, pi/4) disagrees with
/// the closed form it is computed from.
const KNOWN_FAILURES: &[u32] = &[6, 8];

const FLAG_RANK_TOL_NOTE: &str = "rank tol 1e-8";

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

fn alphabet() -> [KrTag; 3] {
    [
        KrTag::Regular(int(0)),
        KrTag::Regular(int(1)),
        KrTag::Singular,
    ]
}

fn words_up_to(len: usize) -> Vec<KrWord> {
    (0..=len)
        .flat_map(|l| KrWord::enumerate(&alphabet(), l))
        .collect()
}

fn nilpotency() -> Outcome {
    let words = words_up_to(4);
    let mut bad = Vec::new();
    let mut max_dim = 0;
    for w in &words {
        match generate_algebra(&build_kr(w), 200) {
            Ok(basis) => {
                let cs = lower_central_series(&basis);
                max_dim = max_dim.max(basis.dim());
                if cs.dims.last() != Some(&0) {
                    bad.push(format!("{w}: series {:?}", cs.dims));
                }
            }
            Err(e) => bad.push(format!("{w}: {e}")),
        }
    }
    let heis = generate_algebra(&kappa3(), 200).map(|b| b.dim());
    let ok = bad.is_empty() && heis == Ok(3) && words.len() == 121;
    outcome(
        ok,
        format!(
            "{} words, largest algebra {max_dim}, kappa3 dim {:?}, failures {bad:?}",
            words.len(),
            heis
        ),
    )
}

fn random_trailer_state(
    rng: &mut ChaCha8Rng,
    n: usize,
    singular: &[bool],
    spread: f64,
) -> Vec<f64> {
    let mut s = vec![
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-2.0..2.0),
        rng.gen_range(-spread..spread),
    ];
    for i in 1..=n {
        let prev = s[i + 1];
        let step = if singular[i - 1] {
            if rng.gen_bool(0.5) {
                FRAC_PI_2
            } else {
                -FRAC_PI_2
            }
        } else {
            rng.gen_range(-spread..spread)
        };
        s.push(prev + step);
    }
    s
}

fn goursat_flag() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut failures = Vec::new();
    let mut checked = 0;
    for w in words_up_to(4) {
        let pair = build_kr(&w);
        let d = pair.dim();
        let want: Vec<usize> = (2..=d).collect();
        for _ in 0..20 {
            let p: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
            checked += 1;
            match derived_flag_dims(&pair.fields(), &p, d - 2) {
                Ok(dims) if dims == want => {}
                other => failures.push(format!("{w} at {p:?}: {other:?}")),
            }
        }
    }
    for n in 0..=4usize {
        let (t1, t2) = trailer_fields(n);
        let d = n + 3;
        let want: Vec<usize> = (2..=d).collect();
        for k in 0..20 {
            // every other point sits on the singular locus somewhere
            let singular: Vec<bool> = (0..n).map(|_| k % 2 == 1 && rng.gen_bool(0.5)).collect();
            let mut singular = singular;
            if k % 2 == 1 && n > 0 && !singular.contains(&true) {
                singular[rng.gen_range(0..n)] = true;
            }
            let p = random_trailer_state(&mut rng, n, &singular, 1.2);
            checked += 1;
            match derived_flag_dims(&[t1.clone(), t2.clone()], &p, d - 2) {
                Ok(dims) if dims == want => {}
                other => failures.push(format!("trailers n={n} at {p:?}: {other:?}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!("{checked} points, {FLAG_RANK_TOL_NOTE}, failures {failures:?}"),
    )
}

/// Relative angles of the base points for the finite-difference check.
/// Step 1e-5 is sized for coordinates of order one; wider spreads push
/// `x` towards the poles of the regular quotients, where the central
/// difference truncation alone exceeds 1e-6 (the symbolic check below
/// covers those points).
const FD_SPREAD: f64 = 0.5;
const WIDE_SPREAD: f64 = 1.2;

fn base_points(rng: &mut ChaCha8Rng, n: usize, spread: f64) -> Vec<Vec<f64>> {
    let mut out = Vec::new();
    for k in 0..10 {
        let singular: Vec<bool> = match k {
            0..=2 => vec![false; n],
            3..=5 => {
                let mut v = vec![false; n];
                if n > 0 {
                    v[rng.gen_range(0..n)] = true;
                }
                v
            }
            6 | 7 => vec![true; n],
            _ => (0..n).map(|_| rng.gen_bool(0.5)).collect(),
        };
        let mut p = random_trailer_state(rng, n, &singular, spread);
        // one base point in the cot chart
        if k == 9 {
            let shift = FRAC_PI_2 - p[2];
            for a in &mut p[2..] {
                *a += shift;
            }
        }
        out.push(p);
    }
    out
}

fn ball_sample(rng: &mut ChaCha8Rng, base: &[f64], radius: f64) -> Vec<f64> {
    let dir: Vec<f64> = base.iter().map(|_| rng.gen_range(-1.0..1.0)).collect();
    let norm = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let r = radius * rng.gen_range(0.0f64..1.0);
    base.iter()
        .zip(&dir)
        .map(|(b, d)| b + r * d / norm)
        .collect()
}

fn residual_sweep(seed: u64, spread: f64, exact: bool, bound: f64) -> (usize, f64, Vec<String>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let mut count = 0;
    for n in 0..=4usize {
        for base in base_points(&mut rng, n, spread) {
            let cfg = Configuration::from_state(&base).unwrap();
            let chain = match build_chain(n, &cfg) {
                Ok(c) => c,
                Err(e) => {
                    failures.push(format!("n={n} base {base:?}: {e}"));
                    continue;
                }
            };
            for _ in 0..50 {
                let p = ball_sample(&mut rng, &base, 0.05);
                count += 1;
                let res = if exact {
                    chain.pushforward_residual_exact(&p)
                } else {
                    chain.pushforward_residual(&p)
                };
                match res {
                    Ok(res) => {
                        worst = worst.max(res);
                        if !(res < bound) {
                            failures.push(format!("n={n} at {p:?}: residual {res:e}"));
                        }
                    }
                    Err(e) => failures.push(format!("n={n} at {p:?}: {e}")),
                }
            }
        }
    }
    (count, worst, failures)
}

fn pushforward() -> Outcome {
    let (count, worst, failures) = residual_sweep(3, FD_SPREAD, false, 1e-6);
    let (xcount, xworst, xfailures) = residual_sweep(4, WIDE_SPREAD, true, 1e-9);
    outcome(
        failures.is_empty() && xfailures.is_empty(),
        format!(
            "finite differences (step 1e-5, relative angles within {FD_SPREAD}): {count} points, worst {worst:.3e} (< 1e-6), failures {failures:?}; symbolic (relative angles within {WIDE_SPREAD}): {xcount} points, worst {xworst:.3e} (< 1e-9), failures {xfailures:?}"
        ),
    )
}

fn displayed_coefficients() -> Outcome {
    let word = KrWord::new(vec![KrTag::Regular(int(0)), KrTag::Singular]);
    let map = endpoint_map_for_word(&word)
        .unwrap()
        .with_initial(&vec![int(0); 5])
        .unwrap();
    // a1 is the constant u2 (`b0`); a2..a5 are the u1 coefficients;
    // exponents listed as [a2, a3, a4, a5], then the power of a1
    let table: &[(usize, u32, [u32; 4], Rational)] = &[
        (0, 1, [1, 0, 0, 0], ratio(1, 2)),
        (0, 1, [0, 1, 0, 0], ratio(1, 6)),
        (0, 1, [0, 0, 1, 0], ratio(1, 12)),
        (0, 1, [0, 0, 0, 1], ratio(1, 20)),
        (1, 3, [2, 0, 0, 0], ratio(1, 15)),
        (1, 3, [0, 2, 0, 0], ratio(1, 112)),
        (1, 3, [0, 0, 2, 0], ratio(1, 405)),
        (1, 3, [0, 0, 0, 2], ratio(1, 1056)),
        (1, 3, [1, 1, 0, 0], ratio(7, 144)),
        (1, 3, [1, 0, 1, 0], ratio(8, 315)),
        (1, 3, [1, 0, 0, 1], ratio(5, 320)),
        (1, 3, [0, 1, 1, 0], ratio(3, 320)),
        (1, 3, [0, 1, 0, 1], ratio(5, 864)),
        (1, 3, [0, 0, 1, 1], ratio(11, 3600)),
        (2, 2, [1, 0, 0, 0], ratio(1, 3)),
        (2, 2, [0, 1, 0, 0], ratio(1, 8)),
        (2, 2, [0, 0, 1, 0], ratio(1, 15)),
        (2, 2, [0, 0, 0, 1], ratio(1, 24)),
        (3, 1, [0, 0, 0, 0], ratio(1, 1)),
        (4, 0, [1, 0, 0, 0], ratio(1, 1)),
        (4, 0, [0, 1, 0, 0], ratio(1, 2)),
        (4, 0, [0, 0, 1, 0], ratio(1, 3)),
        (4, 0, [0, 0, 0, 1], ratio(1, 4)),
    ];
    let mut mismatches = Vec::new();
    let mut listed = [0usize; 5];
    for (i, b, a, c) in table {
        let mut e = vec![0u32; map.num_vars()];
        e[..4].copy_from_slice(a);
        e[map.var_b0()] = *b;
        let got = map.polys[*i].coeff(&e);
        if &got != c {
            mismatches.push(format!(
                "x{}: a1^{b} {a:?} derived {got} expected {c}",
                i + 1
            ));
        }
        listed[*i] += 1;
    }
    // nothing beyond the displayed terms
    let extra: Vec<String> = (0..5)
        .filter(|&i| map.polys[i].num_terms() != listed[i])
        .map(|i| {
            format!(
                "x{} has {} terms, {} displayed",
                i + 1,
                map.polys[i].num_terms(),
                listed[i]
            )
        })
        .collect();
    outcome(
        mismatches.is_empty() && extra.is_empty(),
        format!(
            "{} coefficients compared exactly, mismatches {mismatches:?}, extra terms {extra:?}",
            table.len()
        ),
    )
}

fn random_rational(rng: &mut ChaCha8Rng) -> Rational {
    ratio(rng.gen_range(-40..=40), rng.gen_range(1..=9))
}

fn parabola() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let zero = vec![int(0); 5];
    let mut disagreements = 0;
    let mut reachable_count = 0;
    for _ in 0..1000 {
        let mut q: Vec<Rational> = (0..5).map(|_| random_rational(&mut rng)).collect();
        while q[3].is_zero() {
            q[3] = random_rational(&mut rng);
        }
        let quad = TwoTrailerQuadratic::new(&zero, &q).unwrap();
        let r = reachable(&q).unwrap();
        reachable_count += r as usize;
        if r != !quad.discriminant().is_negative() {
            disagreements += 1;
        }
    }
    let mut double_roots = 0;
    for _ in 0..50 {
        let mut q: Vec<Rational> = (0..5).map(|_| random_rational(&mut rng)).collect();
        while q[3].is_zero() {
            q[3] = random_rational(&mut rng);
        }
        q[1] = parabola_rhs(&q).unwrap();
        let quad = TwoTrailerQuadratic::new(&zero, &q).unwrap();
        if quad.discriminant().is_zero() && quad.roots().map(|r| r.len()) == Ok(1) {
            double_roots += 1;
        }
    }
    outcome(
        disagreements == 0 && double_roots == 50,
        format!(
            "1000 targets ({reachable_count} reachable), {disagreements} disagreements; {double_roots}/50 boundary targets give a double root"
        ),
    )
}

fn figures() -> Outcome {
    let mut parts = Vec::new();
    let mut ok = true;
    for name in ["fig1", "fig2"] {
        let spec = bundled_scenario(name).unwrap();
        let on_locus = spec.terminal_on_singular_locus();
        match run_scenario(&spec, None) {
            Ok(o) => {
                let r = &o.report;
                let pass = r.trailer_error < 1e-6 && r.stayed_in_domain && on_locus;
                ok &= pass;
                parts.push(format!(
                    "{name}: terminal error {:.3e} (< 1e-6: {}), stayed in domain {}, terminal on locus {on_locus}",
                    r.trailer_error,
                    r.trailer_error < 1e-6,
                    r.stayed_in_domain
                ));
            }
            Err(e) => {
                ok = false;
                parts.push(format!("{name}: {e}"));
            }
        }
    }
    outcome(ok, parts.join("; "))
}

fn universal_point_round_trip() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    let words = words_up_to(3);
    for w in &words {
        for _ in 0..20 {
            let mut y: Vec<f64> = (0..w.dimension())
                .map(|_| rng.gen_range(-1.0..1.0))
                .collect();
            for (i, t) in w.steps.iter().enumerate() {
                if t.is_singular() {
                    y[i + 3] = 0.0;
                }
            }
            let res = universal_point(w, &y).and_then(|p| {
                let chain = build_chain(w.len(), &p)?;
                let x = chain.forward_map(&p.state())?;
                Ok((chain.kr_target.pattern(), x))
            });
            match res {
                Ok((pattern, x)) => {
                    let err = x
                        .iter()
                        .zip(&y)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    worst = worst.max(err);
                    if pattern != w.pattern() || !(err < 1e-9) {
                        failures.push(format!("{w} y={y:?}: pattern {pattern:?}, error {err:e}"));
                    }
                }
                Err(e) => failures.push(format!("{w} y={y:?}: {e}")),
            }
        }
    }
    outcome(
        failures.is_empty(),
        format!(
            "{} words x 20 targets, worst |x(p) - y| {worst:e}, failures {failures:?}",
            words.len()
        ),
    )
}

fn windows() -> Outcome {
    let w0 = domain_window(0.0, 0.0).unwrap();
    let origin_ok = (w0.gamma - 0.0).abs() < 1e-12 && (w0.delta - PI).abs() < 1e-12;
    let g = domain_window(0.0, FRAC_PI_4).unwrap().gamma;
    let expected = (2f64.sqrt() / 4.0).atan();
    let expected_ok = (g - expected).abs() < 1e-12;
    let mut width_err = 0.0f64;
    for i in 0..10 {
        for j in 0..10 {
            let t0 = -1.5 + 3.0 * i as f64 / 9.0;
            let t1 = -1.5 + 3.0 * j as f64 / 9.0;
            let w = domain_window(t0, t1).unwrap();
            width_err = width_err.max((w.delta - w.gamma - PI).abs());
        }
    }
    outcome(
        origin_ok && expected_ok && width_err < 1e-12,
        format!(
            "window(0,0) = ({}, {}) ok {origin_ok}; gamma(0,pi/4) = {g:.15} vs arctan(sqrt2/4) = {expected:.15} ok {expected_ok} (closed form gives arctan(sqrt2/2) = {:.15}); max |delta - gamma - pi| on 100 points {width_err:e}",
            w0.gamma,
            w0.delta,
            (2f64.sqrt() / 2.0).atan()
        ),
    )
}

fn main() {
    let criteria: [(u32, &str, fn() -> Outcome); 8] = [
        (1, "nilpotency of KR forms", nilpotency),
        (2, "Goursat flag dimensions", goursat_flag),
        (3, "pushforward identity", pushforward),
        (
            4,
            "two-trailer endpoint coefficients",
            displayed_coefficients,
        ),
        (5, "parabola vs discriminant", parabola),
        (6, "figure scenarios", figures),
        (7, "universal point round trip", universal_point_round_trip),
        (8, "domain window values", windows),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let o = f();
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{} criterion {id} ({name}, {secs:.1}s): {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        if !o.passed && !KNOWN_FAILURES.contains(&id) {
            unexpected.push(id);
        }
        if o.passed && KNOWN_FAILURES.contains(&id) {
            println!("note: criterion {id} is listed as a known failure but passed");
        }
    }
    if unexpected.is_empty() {
        println!("acceptance: no failures beyond the known ones {KNOWN_FAILURES:?}");
    } else {
        println!("acceptance: unexpected failures {unexpected:?}");
        std::process::exit(1);
    }
}
