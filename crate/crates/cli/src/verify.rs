use std::collections::BTreeMap;
use std::fmt::Write as _;

use bannai_ito::bi_algebra::{
    build_leonard_pair, eigenvector_residual, extract_polynomials, klein_images, leonard_triple_check,
    structure_constants, verify_aw_relations, verify_bi_algebra, BandTolerances,
};
use bannai_ito::bi_polynomials::{
    eval_hypergeometric, eval_monic, make_family, orthogonality_residual, orthogonality_table, verify_roots,
    weight_signs,
};
use bannai_ito::racah::{compare_with_oracle, exact_unitarity, racah_table, verify_unitarity};
use bannai_ito::scalars::{encode_real, parse_rational};
use bannai_ito::sl_rep_oracle::{cg_spectrum_check, identity_report, positive_triple, ModuleParams};
use bannai_ito::{Float, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::config::{short, CliError, Format, RunConfig};
use crate::{Output, VerifyArgs};

const RANDOM_POINTS: usize = 10;
const KLEIN_SAMPLES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
enum Check {
    BiAlgebra,
    CasimirValue,
    AwRelations,
    K2Spectrum,
    LeonardTriple,
    Extraction,
    Orthogonality,
    Hypergeometric,
    Unitarity,
    OracleRacah,
    OracleIdentities,
    TwistedCoproduct,
    CgSpectrum,
    KleinSymmetry,
}

impl Check {
    const ALL: [Check; 14] = [
        Check::BiAlgebra,
        Check::CasimirValue,
        Check::AwRelations,
        Check::K2Spectrum,
        Check::LeonardTriple,
        Check::Extraction,
        Check::Orthogonality,
        Check::Hypergeometric,
        Check::Unitarity,
        Check::OracleRacah,
        Check::OracleIdentities,
        Check::TwistedCoproduct,
        Check::CgSpectrum,
        Check::KleinSymmetry,
    ];

    fn name(self) -> &'static str {
        match self {
            Check::BiAlgebra => "bi-algebra",
            Check::CasimirValue => "casimir-value",
            Check::AwRelations => "aw-relations",
            Check::K2Spectrum => "k2-spectrum",
            Check::LeonardTriple => "leonard-triple",
            Check::Extraction => "polynomial-extraction",
            Check::Orthogonality => "orthogonality",
            Check::Hypergeometric => "hypergeometric",
            Check::Unitarity => "unitarity",
            Check::OracleRacah => "oracle-racah",
            Check::OracleIdentities => "oracle-identities",
            Check::TwistedCoproduct => "twisted-coproduct",
            Check::CgSpectrum => "cg-spectrum",
            Check::KleinSymmetry => "klein-symmetry",
        }
    }
}

/// One evaluation of one check.
struct Case {
    check: Check,
    label: String,
    residual: Option<Float>,
    ok: bool,
    error: Option<String>,
}

struct Ctx<'a> {
    cfg: &'a RunConfig,
    bits: u32,
}

impl Ctx<'_> {
    fn exact(&self, check: Check, label: &str, r: bannai_ito::Result<Rational>) -> Case {
        match r {
            Ok(r) => Case {
                check,
                label: label.into(),
                residual: Some(Float::with_val(self.bits, &r)),
                ok: r.cmp0().is_eq(),
                error: None,
            },
            Err(e) => self.error(check, label, e.to_string()),
        }
    }

    fn real(&self, check: Check, label: &str, r: bannai_ito::Result<Float>) -> Case {
        match r {
            Ok(r) => Case {
                check,
                label: label.into(),
                ok: self.cfg.tolerance.accepts(&r),
                residual: Some(r),
                error: None,
            },
            Err(e) => self.error(check, label, e.to_string()),
        }
    }

    fn error(&self, check: Check, label: &str, error: String) -> Case {
        Case {
            check,
            label: label.into(),
            residual: None,
            ok: false,
            error: Some(error),
        }
    }
}

fn max_of(values: impl IntoIterator<Item = Rational>) -> Rational {
    values.into_iter().map(|r| r.abs()).max().unwrap_or_default()
}

fn label(mus: &[Rational; 3], n: usize) -> String {
    format!("mu=({},{},{}) N={n}", mus[0], mus[1], mus[2])
}

struct PairOutcome {
    cases: Vec<Case>,
    weight_pattern: Option<String>,
    negative_ratio: bool,
}

/// Every exact and closed-form check for one `(μ₁, μ₂, μ₃, N)`.
fn pair_cases(ctx: &Ctx, mus: &[Rational; 3], n: usize, index: usize, fault: bool) -> PairOutcome {
    let tag = label(mus, n);
    let prec = ctx.cfg.precision;
    let mut cases = Vec::new();

    match build_leonard_pair(mus[0].clone(), mus[1].clone(), mus[2].clone(), n) {
        Err(e) => {
            for c in [
                Check::BiAlgebra,
                Check::CasimirValue,
                Check::AwRelations,
                Check::K2Spectrum,
                Check::LeonardTriple,
                Check::Extraction,
            ] {
                cases.push(ctx.error(c, &tag, e.to_string()));
            }
        }
        Ok(mut lp) => {
            if fault && n >= 1 {
                lp.u[1] = -lp.u[1].clone();
            }
            let alg = verify_bi_algebra(&lp);
            cases.push(ctx.exact(
                Check::BiAlgebra,
                &tag,
                Ok(max_of([alg.anti_12, alg.anti_23, alg.anti_13])),
            ));
            cases.push(ctx.exact(Check::CasimirValue, &tag, Ok(alg.casimir.abs())));
            let aw = verify_aw_relations(&lp);
            cases.push(ctx.exact(Check::AwRelations, &tag, Ok(max_of([aw.first, aw.second]))));
            let bands = BandTolerances {
                off_band: ctx.cfg.tolerance.clone(),
                band: ctx.cfg.tolerance.sqrt().eps().clone(),
            };
            match leonard_triple_check(&lp, prec, &bands) {
                Ok(r) => {
                    cases.push(ctx.real(Check::K2Spectrum, &tag, Ok(r.k2_deviation.clone())));
                    let mut c = ctx.real(Check::LeonardTriple, &tag, Ok(r.k3_deviation.clone()));
                    if !r.passed() {
                        c.ok = false;
                        c.error = Some("not irreducible tridiagonal in every eigenbasis".into());
                    }
                    cases.push(c);
                }
                Err(e) => {
                    cases.push(ctx.error(Check::K2Spectrum, &tag, e.to_string()));
                    cases.push(ctx.error(Check::LeonardTriple, &tag, e.to_string()));
                }
            }
            let ext = extract_polynomials(&lp).and_then(|ext| eigenvector_residual(&lp, &ext));
            cases.push(ctx.exact(Check::Extraction, &tag, ext));
        }
    }

    let mut weight_pattern = None;
    let checked = make_family(mus.clone(), n).and_then(|fam| {
        let table = orthogonality_table(&fam)?;
        weight_pattern = Some(weight_signs(&table).pattern());
        let ortho = max_of([orthogonality_residual(&fam, &table)?, verify_roots(&fam)?]);
        let mut hyper = Rational::new();
        let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed.wrapping_add(index as u64));
        for _ in 0..RANDOM_POINTS {
            let x = Rational::from((rng.random_range(-60..=60), rng.random_range(1..=24)));
            for k in 0..=n {
                let gap = eval_monic(fam.bi(), k, &x)? - eval_hypergeometric(fam.bi(), k, &x)?;
                hyper = hyper.max(gap.abs());
            }
        }
        Ok((ortho, hyper))
    });
    match checked {
        Ok((ortho, hyper)) => {
            cases.push(ctx.exact(Check::Orthogonality, &tag, Ok(ortho)));
            cases.push(ctx.exact(Check::Hypergeometric, &tag, Ok(hyper)));
        }
        Err(e) => {
            cases.push(ctx.error(Check::Orthogonality, &tag, e.to_string()));
            cases.push(ctx.error(Check::Hypergeometric, &tag, e.to_string()));
        }
    }

    let mut negative_ratio = false;
    match racah_table(mus[0].clone(), mus[1].clone(), mus[2].clone(), n, prec) {
        Ok(t) => {
            negative_ratio = t.has_negative_ratio();
            let exact = exact_unitarity(&t);
            let mut c = ctx.real(Check::Unitarity, &tag, Ok(verify_unitarity(&t)));
            if exact.cmp0().is_ne() {
                c.ok = false;
                c.error = Some(format!("signed-product residual {exact}"));
            }
            cases.push(c);
        }
        Err(e) => cases.push(ctx.error(Check::Unitarity, &tag, e.to_string())),
    }
    PairOutcome {
        cases,
        weight_pattern,
        negative_ratio,
    }
}

fn oracle_cases(ctx: &Ctx, mus: &[Rational; 3], n: usize) -> Vec<Case> {
    let tag = label(mus, n);
    let prec = ctx.cfg.precision;
    let cmp = compare_with_oracle(mus[0].clone(), mus[1].clone(), mus[2].clone(), n, prec).map(|c| c.deviation);
    let mut cases = vec![ctx.real(Check::OracleRacah, &tag, cmp)];
    match positive_triple(mus).and_then(|p| identity_report(&p, n, prec)) {
        Ok(r) => {
            cases.push(ctx.real(Check::OracleIdentities, &tag, Ok(r.worst())));
            cases.push(ctx.real(Check::TwistedCoproduct, &tag, Ok(r.twisted_plus_k3)));
        }
        Err(e) => {
            cases.push(ctx.error(Check::OracleIdentities, &tag, e.to_string()));
            cases.push(ctx.error(Check::TwistedCoproduct, &tag, e.to_string()));
        }
    }
    cases
}

fn klein_cases(ctx: &Ctx) -> Vec<Case> {
    let mut rng = ChaCha8Rng::seed_from_u64(ctx.cfg.seed ^ 0x004b_4c45_494e);
    (0..KLEIN_SAMPLES)
        .map(|i| {
            let l: [Rational; 4] =
                std::array::from_fn(|_| Rational::from((rng.random_range(-40..=40), rng.random_range(1..=15))));
            let base = structure_constants(&l);
            let negated = structure_constants(&l.clone().map(|x| -x));
            let same = negated == base && klein_images(&l).iter().all(|im| structure_constants(im) == base);
            let tag = format!("sample {i}");
            if same {
                ctx.exact(Check::KleinSymmetry, &tag, Ok(Rational::new()))
            } else {
                ctx.error(Check::KleinSymmetry, &tag, "structure constants not invariant".into())
            }
        })
        .collect()
}

fn parse_grid(spec: &str) -> Result<Vec<Rational>, CliError> {
    let values = spec
        .strip_prefix("mu=")
        .ok_or_else(|| CliError::Usage(format!("--grid expects mu=v1,v2,..., got {spec:?}")))?;
    let values = values.split(',').map(parse_rational).collect::<Result<Vec<_>, _>>()?;
    if let Some(v) = values.iter().find(|v| v.cmp0().is_lt()) {
        return Err(CliError::Usage(format!("grid value {v} is negative")));
    }
    Ok(values)
}

struct Summary {
    check: Check,
    cases: usize,
    failures: usize,
    worst: Option<Float>,
    first_failure: Option<String>,
}

impl Summary {
    fn passed(&self) -> bool {
        self.failures == 0 && self.cases > 0
    }
}

fn summarize(cases: &[Case]) -> Vec<Summary> {
    Check::ALL
        .iter()
        .filter_map(|&check| {
            let mine: Vec<&Case> = cases.iter().filter(|c| c.check == check).collect();
            if mine.is_empty() {
                return None;
            }
            let worst = mine
                .iter()
                .filter_map(|c| c.residual.clone())
                .reduce(|a, b| if b > a { b } else { a });
            let first_failure = mine.iter().find(|c| !c.ok).map(|c| match (&c.error, &c.residual) {
                (Some(e), _) => format!("{}: {e}", c.label),
                (None, Some(r)) => format!("{}: residual {}", c.label, short(r)),
                (None, None) => c.label.clone(),
            });
            Some(Summary {
                check,
                cases: mine.len(),
                failures: mine.iter().filter(|c| !c.ok).count(),
                worst,
                first_failure,
            })
        })
        .collect()
}

pub fn run(cfg: &RunConfig, args: &VerifyArgs) -> Result<Output, CliError> {
    let values = parse_grid(&args.grid)?;
    let ctx = Ctx {
        cfg,
        bits: cfg.precision.bits(),
    };
    let mut triples = Vec::new();
    for a in &values {
        for b in &values {
            for c in &values {
                triples.push([a.clone(), b.clone(), c.clone()]);
            }
        }
    }
    let pair_inputs: Vec<_> = triples
        .iter()
        .flat_map(|m| (0..=args.nmax).map(move |n| (m, n)))
        .collect();
    let pairs: Vec<PairOutcome> = pair_inputs
        .par_iter()
        .enumerate()
        .map(|(i, (m, n))| pair_cases(&ctx, m, *n, i, args.inject_fault))
        .collect();
    let oracle_inputs: Vec<_> = triples
        .iter()
        .flat_map(|m| (0..=args.oracle_nmax.min(args.nmax)).map(move |n| (m, n)))
        .collect();
    let oracle: Vec<Vec<Case>> = oracle_inputs
        .par_iter()
        .map(|(m, n)| oracle_cases(&ctx, m, *n))
        .collect();

    let mut modules = Vec::new();
    for a in &values {
        for b in &values {
            for e1 in [1i8, -1] {
                for e2 in [1i8, -1] {
                    modules.push((ModuleParams::new(e1, a.clone())?, ModuleParams::new(e2, b.clone())?));
                }
            }
        }
    }
    let cg: Vec<Case> = modules
        .par_iter()
        .map(|(p1, p2)| {
            let tag = format!("mu=({},{}) eps=({},{})", p1.mu(), p2.mu(), p1.epsilon(), p2.epsilon());
            ctx.real(
                Check::CgSpectrum,
                &tag,
                cg_spectrum_check(p1, p2, args.nmax, cfg.precision).map(|r| r.max_deviation()),
            )
        })
        .collect();

    let mut patterns: BTreeMap<String, usize> = BTreeMap::new();
    let mut negative_ratios = 0;
    let mut cases = Vec::new();
    for p in pairs {
        if let Some(pattern) = p.weight_pattern {
            if pattern.contains(|c| c != '+') {
                *patterns.entry(pattern).or_insert(0) += 1;
            }
        }
        negative_ratios += usize::from(p.negative_ratio);
        cases.extend(p.cases);
    }
    cases.extend(oracle.into_iter().flatten());
    cases.extend(cg);
    cases.extend(klein_cases(&ctx));

    let summaries = summarize(&cases);
    let failed: Vec<&str> = summaries
        .iter()
        .filter(|s| !s.passed())
        .map(|s| s.check.name())
        .collect();
    let passed = failed.is_empty();
    let grid_text: Vec<String> = values.iter().map(|v| v.to_string()).collect();

    let stdout = match cfg.format {
        Format::Json => {
            let checks: Vec<_> = summaries
                .iter()
                .map(|s| {
                    json!({
                        "name": s.check.name(),
                        "cases": s.cases,
                        "failures": s.failures,
                        "max_residual": s.worst.as_ref().map(encode_real),
                        "passed": s.passed(),
                        "first_failure": s.first_failure,
                    })
                })
                .collect();
            let doc = json!({
                "config": {
                    "grid": grid_text,
                    "Nmax": args.nmax,
                    "oracle_Nmax": args.oracle_nmax.min(args.nmax),
                    "precision": cfg.precision.digits(),
                    "tolerance": cfg.tolerance.to_string(),
                    "seed": cfg.seed,
                    "fault_injected": args.inject_fault,
                },
                "checks": checks,
                "weight_signs": {"non_positive_patterns": patterns, "negative_ratio_tables": negative_ratios},
                "failed": failed,
                "passed": passed,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("check,cases,failures,max_residual,passed\n");
            for sm in &summaries {
                let worst = sm.worst.as_ref().map(short).unwrap_or_default();
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    sm.check.name(),
                    sm.cases,
                    sm.failures,
                    worst,
                    sm.passed()
                );
            }
            s
        }
        Format::Text => {
            let mut s = format!(
                "grid mu in {{{}}}, N <= {}, oracle N <= {}, precision {} digits, tolerance {}, seed {}{}\n",
                grid_text.join(", "),
                args.nmax,
                args.oracle_nmax.min(args.nmax),
                cfg.precision.digits(),
                cfg.tolerance,
                cfg.seed,
                if args.inject_fault { ", fault injected" } else { "" }
            );
            for sm in &summaries {
                let verdict = if sm.passed() { "PASS" } else { "FAIL" };
                let worst = sm.worst.as_ref().map(short).unwrap_or_else(|| "-".into());
                let _ = writeln!(
                    s,
                    "{verdict} {:<22} {:>5} cases  max residual {worst}",
                    sm.check.name(),
                    sm.cases
                );
                if let Some(f) = &sm.first_failure {
                    let _ = writeln!(s, "     {} failed, first: {f}", sm.failures);
                }
            }
            if patterns.is_empty() {
                s.push_str("weight signs: all positive\n");
            } else {
                for (p, count) in &patterns {
                    let _ = writeln!(s, "weight signs {p}: {count} families");
                }
            }
            let _ = writeln!(s, "racah tables with a negative weight/norm ratio: {negative_ratios}");
            s
        }
    };
    let stderr = if passed {
        String::new()
    } else {
        format!("verification failed: {}\n", failed.join(", "))
    };
    Ok(Output { stdout, stderr, passed })
}
