use std::fmt::Write as _;

use bannai_ito::bi_polynomials::{
    eval_hypergeometric, eval_monic, make_family_even, make_family_odd, norms_from_recurrence, orthogonality_residual,
    orthogonality_table, verify_roots, weight_signs, FamilyTable, TruncationFamily,
};
use bannai_ito::scalars::{encode_rational, format_real, parse_rational};
use bannai_ito::Rational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{triple, CliError, Format, RunConfig};
use crate::{BiArgs, FamilyKind, Output};

const RANDOM_POINTS: usize = 8;

fn family(args: &BiArgs) -> Result<TruncationFamily, CliError> {
    let [a, b, c] = triple(&args.params, "--params")?;
    Ok(match args.family {
        FamilyKind::Even => make_family_even(a, b, c, args.degree)?,
        FamilyKind::Odd => make_family_odd(a, b, c, args.degree)?,
    })
}

pub fn run(cfg: &RunConfig, args: &BiArgs) -> Result<Output, CliError> {
    let fam = family(args)?;
    if let Some(spec) = &args.action.eval {
        eval(cfg, &fam, spec)
    } else if args.action.table {
        table(cfg, fam)
    } else {
        verify(cfg, &fam)
    }
}

fn eval(cfg: &RunConfig, fam: &TruncationFamily, spec: &str) -> Result<Output, CliError> {
    let (n, x) = spec
        .split_once(',')
        .ok_or_else(|| CliError::Usage(format!("--eval expects n,x, got {spec:?}")))?;
    let n: usize = n
        .trim()
        .parse()
        .map_err(|_| CliError::Usage(format!("--eval degree {n:?} is not a nonnegative integer")))?;
    let x = parse_rational(x)?;
    let value = eval_monic(fam.bi(), n, &x)?;
    // the hypergeometric form is only defined up to the truncation degree
    let agrees = if n <= fam.degree() {
        Some(eval_hypergeometric(fam.bi(), n, &x)? == value)
    } else {
        None
    };
    let decimal = format_real(&cfg.precision.real(&value), cfg.digits());
    let stdout = match cfg.format {
        Format::Json => {
            let doc = json!({
                "family": fam,
                "n": n,
                "x": encode_rational(&x),
                "value": encode_rational(&value),
                "decimal": decimal,
                "hypergeometric_agrees": agrees,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => format!(
            "n,x,value,decimal\n{n},{},{},{decimal}\n",
            encode_rational(&x),
            encode_rational(&value)
        ),
        Format::Text => {
            let mut s = format!("P_{n}({x}) = {value}\n          ~ {decimal}\n");
            if let Some(a) = agrees {
                let _ = writeln!(s, "hypergeometric form {}", if a { "agrees" } else { "DISAGREES" });
            }
            s
        }
    };
    Ok(Output {
        stdout,
        stderr: String::new(),
        passed: agrees != Some(false),
    })
}

fn header(fam: &TruncationFamily) -> String {
    let names = match fam.degree() % 2 {
        0 => ["a", "b", "c"],
        _ => ["alpha", "beta", "gamma"],
    };
    let shape: Vec<String> = names.iter().zip(fam.shape()).map(|(k, v)| format!("{k}={v}")).collect();
    let bi = fam.bi();
    format!(
        "{} family {} N={}\nrho1={} rho2={} r1={} r2={}\n",
        fam.parity(),
        shape.join(" "),
        fam.degree(),
        bi.rho1(),
        bi.rho2(),
        bi.r1(),
        bi.r2()
    )
}

fn table(cfg: &RunConfig, fam: TruncationFamily) -> Result<Output, CliError> {
    let ft = FamilyTable::new(fam)?;
    let stdout = match cfg.format {
        Format::Json => ft.to_json() + "\n",
        Format::Csv => ft.table.to_csv(),
        Format::Text => {
            let mut s = header(&ft.family);
            let _ = writeln!(s, "{:>3}  {:>12}  {:>24}  {:>24}", "l", "x", "weight", "norm");
            for l in 0..=ft.family.degree() {
                let t = &ft.table;
                let _ = writeln!(s, "{l:>3}  {:>12}  {:>24}  {:>24}", t.x[l], t.omega[l], t.phi[l]);
            }
            s
        }
    };
    Ok(Output::ok(stdout))
}

struct Check {
    name: &'static str,
    residual: Rational,
}

fn verify(cfg: &RunConfig, fam: &TruncationFamily) -> Result<Output, CliError> {
    let table = orthogonality_table(fam)?;
    let mut checks = vec![
        Check {
            name: "orthogonality",
            residual: orthogonality_residual(fam, &table)?,
        },
        Check {
            name: "roots",
            residual: verify_roots(fam)?,
        },
    ];
    let norms = norms_from_recurrence(fam, &table.phi[0])?;
    let norm_gap = norms
        .iter()
        .zip(&table.phi)
        .map(|(a, b)| (a.clone() - b).abs())
        .max()
        .unwrap_or_default();
    checks.push(Check {
        name: "norms",
        residual: norm_gap,
    });

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut points = table.x.clone();
    points.extend((0..RANDOM_POINTS).map(|_| Rational::from((rng.random_range(-60..=60), rng.random_range(1..=24)))));
    let mut hyper_gap = Rational::new();
    for x in &points {
        for n in 0..=fam.degree() {
            let gap = (eval_monic(fam.bi(), n, x)? - eval_hypergeometric(fam.bi(), n, x)?).abs();
            hyper_gap = hyper_gap.max(gap);
        }
    }
    checks.push(Check {
        name: "hypergeometric",
        residual: hyper_gap,
    });

    let signs = weight_signs(&table);
    let passed = checks.iter().all(|c| c.residual.cmp0().is_eq());
    let stdout = match cfg.format {
        Format::Json => {
            let list: Vec<_> = checks
                .iter()
                .map(|c| json!({"name": c.name, "residual": encode_rational(&c.residual), "passed": c.residual.cmp0().is_eq()}))
                .collect();
            let doc = json!({
                "family": fam,
                "checks": list,
                "weight_signs": signs.pattern(),
                "passed": passed,
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            let mut s = String::from("check,residual,passed\n");
            for c in &checks {
                let _ = writeln!(
                    s,
                    "{},{},{}",
                    c.name,
                    encode_rational(&c.residual),
                    c.residual.cmp0().is_eq()
                );
            }
            s
        }
        Format::Text => {
            let mut s = header(fam);
            for c in &checks {
                let verdict = if c.residual.cmp0().is_eq() { "PASS" } else { "FAIL" };
                let _ = writeln!(s, "{verdict} {:<15} residual {}", c.name, c.residual);
            }
            let _ = writeln!(s, "weight signs {}", signs.pattern());
            s
        }
    };
    Ok(Output {
        stdout,
        stderr: String::new(),
        passed,
    })
}
