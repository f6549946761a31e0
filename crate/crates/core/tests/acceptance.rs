//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use bannai_ito::bi_algebra::{
    build_leonard_pair, degenerate_coefficients, klein_images, leonard_triple_check, structure_constants,
    verify_aw_relations, verify_bi_algebra, BandTolerances, LeonardPair,
};
use bannai_ito::bi_polynomials::{
    eval_hypergeometric, eval_monic, make_family, orthogonality_residual, orthogonality_table, verify_roots,
    weight_signs,
};
use bannai_ito::racah::{exact_unitarity, max_abs_deviation, racah_table, verify_unitarity};
use bannai_ito::scalars::{Precision, Tolerance};
use bannai_ito::sl_rep_oracle::{cg_spectrum_check, identity_report, oracle_racah, positive_triple, ModuleParams};
use bannai_ito::{Float, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

const SEED: u64 = 0x5EED_0B17;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn precision() -> Precision {
    Precision::new(50).unwrap()
}

/// `|x| < 10^-digits`.
fn below(x: &Float, digits: i32) -> bool {
    Tolerance::power_of_ten(precision(), digits).accepts(x)
}

fn triples(values: &[Rational]) -> Vec<[Rational; 3]> {
    let mut out = Vec::new();
    for a in values {
        for b in values {
            for c in values {
                out.push([a.clone(), b.clone(), c.clone()]);
            }
        }
    }
    out
}

fn wide_grid() -> Vec<[Rational; 3]> {
    triples(&[q(0, 1), q(1, 2), q(1, 1), q(3, 2), q(2, 1)])
}

fn small_grid() -> Vec<[Rational; 3]> {
    triples(&[q(0, 1), q(1, 2), q(1, 1)])
}

fn pair(mus: &[Rational; 3], n: usize) -> LeonardPair {
    build_leonard_pair(mus[0].clone(), mus[1].clone(), mus[2].clone(), n).unwrap()
}

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome {
            passed,
            detail: detail.into(),
        }
    }
}

fn first_failure<T: Sync>(items: Vec<T>, check: impl Fn(&T) -> Option<String> + Sync + Send) -> Option<String> {
    items.par_iter().filter_map(check).min()
}

fn exact_algebra() -> Outcome {
    let start = Instant::now();
    let cases: Vec<_> = wide_grid()
        .into_iter()
        .flat_map(|m| (0..=8).map(move |n| (m.clone(), n)))
        .collect();
    let total = cases.len();
    let failure = first_failure(cases, |(m, n)| {
        let lp = pair(m, *n);
        let alg = verify_bi_algebra(&lp);
        let aw = verify_aw_relations(&lp);
        (!alg.all_zero() || !aw.all_zero()).then(|| format!("mu={m:?} N={n}: {alg:?} {aw:?}"))
    });
    let elapsed = start.elapsed();
    let fast = elapsed < Duration::from_secs(60);
    match failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(
            fast,
            format!("{total} cases exact, {:.1}s (target < 60s)", elapsed.as_secs_f64()),
        ),
    }
}

fn leonard_grid_checks() -> (Outcome, Outcome) {
    let prec = precision();
    let tol = BandTolerances {
        off_band: Tolerance::power_of_ten(prec, 30),
        band: Float::with_val(prec.bits(), 1e-10),
    };
    let cases: Vec<_> = wide_grid()
        .into_iter()
        .flat_map(|m| (0..=8).map(move |n| (m.clone(), n)))
        .collect();
    let results: Vec<_> = cases
        .par_iter()
        .map(|(m, n)| {
            let report = leonard_triple_check(&pair(m, *n), prec, &tol);
            (m.clone(), *n, report)
        })
        .collect();

    let mut worst_k2 = Float::new(prec.bits());
    let mut spectrum_failure = None;
    let mut triple_failure = None;
    let mut signs = BTreeMap::new();
    for (m, n, report) in &results {
        match report {
            Err(e) => {
                spectrum_failure.get_or_insert(format!("mu={m:?} N={n}: {e}"));
            }
            Ok(r) => {
                if r.k2_deviation > worst_k2 {
                    worst_k2 = r.k2_deviation.clone();
                }
                if !below(&r.k2_deviation, 30) {
                    spectrum_failure.get_or_insert(format!("mu={m:?} N={n}: K2 deviation {:.3e}", r.k2_deviation));
                }
                if *n <= 6 {
                    *signs.entry(r.k3_sign).or_insert(0) += 1;
                    if !r.passed() || !below(&r.k3_deviation, 30) {
                        triple_failure.get_or_insert(format!("mu={m:?} N={n}: bands or K3 spectrum"));
                    }
                }
            }
        }
    }
    let spectrum = match spectrum_failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(true, format!("{} cases, max deviation {:.3e}", results.len(), worst_k2)),
    };

    let twisted_cases: Vec<_> = small_grid()
        .into_iter()
        .flat_map(|m| (0..=4).map(move |n| (m.clone(), n)))
        .collect();
    let twisted_failure = first_failure(twisted_cases, |(m, n)| {
        let p = positive_triple(m).unwrap();
        match identity_report(&p, *n, prec) {
            Ok(r) if below(&r.twisted_plus_k3, 30) => None,
            Ok(r) => Some(format!("mu={m:?} N={n}: twisted residual {:.3e}", r.twisted_plus_k3)),
            Err(e) => Some(format!("mu={m:?} N={n}: {e}")),
        }
    });
    let triple = match triple_failure.or(twisted_failure) {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(
            true,
            format!("N <= 6 tridiagonal in all bases, K3 sign counts {signs:?}, twisted identity N <= 4"),
        ),
    };
    (spectrum, triple)
}

fn shapes() -> Vec<[Rational; 3]> {
    vec![
        [q(0, 1), q(0, 1), q(0, 1)],
        [q(1, 2), q(1, 2), q(1, 2)],
        [q(1, 1), q(1, 1), q(1, 1)],
        [q(1, 1), q(1, 2), q(3, 2)],
        [q(2, 1), q(0, 1), q(1, 3)],
        [q(1, 3), q(2, 5), q(7, 4)],
        [q(5, 2), q(3, 7), q(0, 1)],
    ]
}

fn orthogonality() -> Outcome {
    let cases: Vec<_> = shapes()
        .into_iter()
        .flat_map(|s| (0..=12).map(move |n| (s.clone(), n)))
        .collect();
    let total = cases.len();
    let failure = first_failure(cases, |(s, n)| {
        let run = || -> bannai_ito::Result<Option<String>> {
            let fam = make_family(s.clone(), *n)?;
            let table = orthogonality_table(&fam)?;
            let ortho = orthogonality_residual(&fam, &table)?;
            let roots = verify_roots(&fam)?;
            Ok((ortho.cmp0().is_ne() || roots.cmp0().is_ne()).then(|| format!("residual {ortho}, roots {roots}")))
        };
        match run() {
            Ok(None) => None,
            Ok(Some(f)) => Some(format!("shape={s:?} N={n}: {f}")),
            Err(e) => Some(format!("shape={s:?} N={n}: {e}")),
        }
    });
    match failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(true, format!("{total} families, even and odd N <= 12, exact")),
    }
}

fn representations() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut cases = Vec::new();
    for s in shapes() {
        for n in 0..=10 {
            let xs: Vec<Rational> = (0..20)
                .map(|_| q(rng.random_range(-60..=60), rng.random_range(1..=24)))
                .collect();
            cases.push((s.clone(), n, xs));
        }
    }
    let total = cases.len();
    let failure = first_failure(cases, |(s, big_n, xs)| {
        let fam = make_family(s.clone(), *big_n).unwrap();
        for x in xs {
            for n in 0..=*big_n {
                let a = eval_monic(fam.bi(), n, x).unwrap();
                match eval_hypergeometric(fam.bi(), n, x) {
                    Ok(b) if a == b => {}
                    Ok(b) => return Some(format!("shape={s:?} N={big_n} n={n} x={x}: {a} vs {b}")),
                    Err(e) => return Some(format!("shape={s:?} N={big_n} n={n} x={x}: {e}")),
                }
            }
        }
        None
    });
    match failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(true, format!("{total} families x 20 points, exact")),
    }
}

struct OracleRun {
    deviation: Float,
    formula_unitarity: Float,
    oracle_unitarity: Float,
    exact_zero: bool,
    weight_pattern: String,
    negative_ratio: bool,
}

fn oracle_and_signs() -> (Outcome, Outcome) {
    let prec = precision();
    let start = Instant::now();
    let cases: Vec<_> = small_grid()
        .into_iter()
        .flat_map(|m| (0..=4).map(move |n| (m.clone(), n)))
        .collect();
    let runs: Vec<_> = cases
        .par_iter()
        .map(|(m, n)| {
            let table = racah_table(m[0].clone(), m[1].clone(), m[2].clone(), *n, prec).map_err(|e| e.to_string())?;
            let oracle = oracle_racah(&positive_triple(m).unwrap(), *n, prec).map_err(|e| e.to_string())?;
            let signs = table.weight_signs();
            Ok::<_, String>(OracleRun {
                deviation: max_abs_deviation(&table, &oracle).map_err(|e| e.to_string())?,
                formula_unitarity: verify_unitarity(&table),
                oracle_unitarity: oracle.unitarity.clone(),
                exact_zero: exact_unitarity(&table).cmp0().is_eq(),
                weight_pattern: signs.pattern(),
                negative_ratio: table.has_negative_ratio(),
            })
        })
        .collect();
    let elapsed = start.elapsed();

    let mut worst = Float::new(prec.bits());
    let mut worst_unitarity = Float::new(prec.bits());
    let mut failure = None;
    let mut exact_ok = true;
    let mut negative_ratios = 0;
    for ((m, n), run) in cases.iter().zip(&runs) {
        match run {
            Err(e) => {
                failure.get_or_insert(format!("mu={m:?} N={n}: {e}"));
            }
            Ok(r) => {
                if r.deviation > worst {
                    worst = r.deviation.clone();
                }
                for x in [&r.formula_unitarity, &r.oracle_unitarity] {
                    if *x > worst_unitarity {
                        worst_unitarity = x.clone();
                    }
                }
                if !below(&r.deviation, 10) || !below(&r.formula_unitarity, 20) || !below(&r.oracle_unitarity, 20) {
                    failure.get_or_insert(format!("mu={m:?} N={n}: deviation {:.3e}", r.deviation));
                }
                exact_ok &= r.exact_zero;
                negative_ratios += usize::from(r.negative_ratio);
            }
        }
    }
    let fast = elapsed < Duration::from_secs(300);
    let oracle = match failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(
            fast,
            format!(
                "{} cases, max deviation {:.3e}, max unitarity {:.3e}, {:.1}s (target < 300s)",
                cases.len(),
                worst,
                worst_unitarity,
                elapsed.as_secs_f64()
            ),
        ),
    };

    // Sign patterns across every family the suite touches.
    let mut patterns: BTreeMap<String, usize> = BTreeMap::new();
    let mut families = 0;
    for s in shapes() {
        for n in 0..=12 {
            let fam = make_family(s.clone(), n).unwrap();
            let report = weight_signs(&orthogonality_table(&fam).unwrap());
            families += 1;
            if !report.all_positive {
                *patterns.entry(report.pattern()).or_insert(0) += 1;
            }
        }
    }
    for r in runs.iter().flatten() {
        families += 1;
        if r.weight_pattern.contains(|c| c != '+') {
            *patterns.entry(r.weight_pattern.clone()).or_insert(0) += 1;
        }
    }
    for (pattern, count) in &patterns {
        println!("  weight signs {pattern}: {count} families");
    }
    let signs = Outcome::new(
        exact_ok,
        format!(
            "{families} families, {} with a non-positive weight, {negative_ratios} Racah tables with a negative ratio, signed-product unitarity {}",
            patterns.values().sum::<usize>(),
            if exact_ok { "exact" } else { "violated" }
        ),
    );
    (oracle, signs)
}

fn cg_spectrum() -> Outcome {
    let prec = precision();
    let mus = [q(0, 1), q(1, 2), q(1, 1)];
    let mut cases = Vec::new();
    for m1 in &mus {
        for m2 in &mus {
            for e1 in [1i8, -1] {
                for e2 in [1i8, -1] {
                    cases.push((
                        ModuleParams::new(e1, m1.clone()).unwrap(),
                        ModuleParams::new(e2, m2.clone()).unwrap(),
                    ));
                }
            }
        }
    }
    let total = cases.len();
    let failure = first_failure(cases, |(p1, p2)| match cg_spectrum_check(p1, p2, 10, prec) {
        Ok(r) if below(&r.max_deviation(), 30) => None,
        Ok(r) => Some(format!("{p1:?} {p2:?}: deviation {:.3e}", r.max_deviation())),
        Err(e) => Some(format!("{p1:?} {p2:?}: {e}")),
    });
    match failure {
        Some(f) => Outcome::new(false, f),
        None => Outcome::new(true, format!("{total} module pairs, N <= 10")),
    }
}

/// At `μ = 0` the general coefficients must reduce to `b_{i≠0} = 0`,
/// `u_n = (n+N+1)(N+1−n)/4` and `b₀ = −(N+1)/2`. The last form contradicts
/// `tr K₂ = Σ_s θ*_s` for odd `N`, so `b₀` is checked against the trace for
/// every `N` and against `−(N+1)/2` for even `N`.
fn degenerate() -> Outcome {
    let mut odd_b0 = Vec::new();
    for n in 0..=12 {
        let lp = pair(&[q(0, 1), q(0, 1), q(0, 1)], n);
        let trace = (0..=n).fold(q(0, 1), |acc, s| acc + lp.theta_star(s));
        let u: Vec<Rational> = (0..=n)
            .map(|k| {
                if k == 0 {
                    q(0, 1)
                } else {
                    q(((k + n + 1) * (n + 1 - k)) as i64, 4)
                }
            })
            .collect();
        let rest_zero = lp.b[1..].iter().all(|b| b.cmp0().is_eq());
        let stated = q(-(n as i64 + 1), 2);
        let b0_ok = lp.b[0] == trace && (n % 2 == 1 || lp.b[0] == stated);
        if !rest_zero || lp.u != u || !b0_ok || degenerate_coefficients(n) != (lp.b.clone(), lp.u.clone()) {
            return Outcome::new(false, format!("N={n}: b={:?} u={:?}", lp.b, lp.u));
        }
        if n % 2 == 1 {
            odd_b0.push(format!("{}", lp.b[0]));
        }
    }
    println!(
        "  degenerate b0 for odd N = 1, 3, ..., 11: {} (= tr K2, i.e. +(N+1)/2)",
        odd_b0.join(", ")
    );
    Outcome::new(true, "N <= 12 exact; b0 = -(N+1)/2 for even N, b0 = tr K2 for all N")
}

fn klein() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 0x4B);
    for _ in 0..100 {
        let l: [Rational; 4] = std::array::from_fn(|_| q(rng.random_range(-40..=40), rng.random_range(1..=15)));
        let base = structure_constants(&l);
        let negated = structure_constants(&l.clone().map(|x| -x));
        let images = klein_images(&l).map(|im| structure_constants(&im));
        if negated != base || images.iter().any(|s| *s != base) {
            return Outcome::new(false, format!("lambda={l:?}"));
        }
    }
    Outcome::new(true, "100 quadruples, pi1 pi2 pi3 and global sign")
}

fn main() -> ExitCode {
    let bits = precision().bits();
    assert!(below(&Float::with_val(bits, 1e-31), 30) && !below(&Float::with_val(bits, 1e-29), 30));
    let (spectrum, triple) = leonard_grid_checks();
    let (oracle, signs) = oracle_and_signs();
    let outcomes = [
        ("1 exact algebra", exact_algebra()),
        ("2 K2 spectrum", spectrum),
        ("3 orthogonality and roots", orthogonality()),
        ("4 recurrence vs hypergeometric", representations()),
        ("5 oracle equivalence", oracle),
        ("6 CG spectrum", cg_spectrum()),
        ("7 degenerate reduction", degenerate()),
        ("8 Leonard triple", triple),
        ("9 Klein symmetry", klein()),
        ("10 weight signs", signs),
    ];
    let mut ok = true;
    for (name, o) in &outcomes {
        println!(
            "{} criterion {name}: {}",
            if o.passed { "PASS" } else { "FAIL" },
            o.detail
        );
        ok &= o.passed;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
