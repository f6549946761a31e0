use std::fmt::Write as _;

use bannai_ito::racah::{compare_with_oracle, exact_unitarity, racah_table, verify_unitarity, RacahTable};
use bannai_ito::scalars::{encode_rational, encode_real, format_real};
use bannai_ito::Float;
use serde_json::json;

use crate::config::{short, triple, CliError, Format, RunConfig};
use crate::{Output, RacahArgs};

const TEXT_DIGITS: usize = 20;

struct OracleSummary {
    deviation: Float,
    unitarity: Float,
    retries: usize,
}

pub fn run(cfg: &RunConfig, args: &RacahArgs) -> Result<Output, CliError> {
    let [m1, m2, m3] = triple(&args.mu, "--mu")?;
    let (table, oracle) = if args.oracle {
        let cmp = compare_with_oracle(m1, m2, m3, args.degree, cfg.precision)?;
        let summary = OracleSummary {
            deviation: cmp.deviation,
            unitarity: cmp.oracle.unitarity.clone(),
            retries: cmp.oracle.retries,
        };
        (cmp.table, Some(summary))
    } else {
        (racah_table(m1, m2, m3, args.degree, cfg.precision)?, None)
    };

    let float_unitarity = verify_unitarity(&table);
    let exact = exact_unitarity(&table);
    let tol = &cfg.tolerance;
    let mut failures = Vec::new();
    if !tol.accepts(&float_unitarity) {
        failures.push(format!("unitarity residual {}", short(&float_unitarity)));
    }
    if exact.cmp0().is_ne() {
        failures.push(format!("signed-product unitarity residual {exact}"));
    }
    if let Some(o) = &oracle {
        if !tol.accepts(&o.deviation) {
            failures.push(format!("oracle deviation {}", short(&o.deviation)));
        }
        if !tol.accepts(&o.unitarity) {
            failures.push(format!("oracle unitarity {}", short(&o.unitarity)));
        }
    }

    let mut stderr = String::new();
    let stdout = match cfg.format {
        Format::Json => {
            let doc = json!({
                "table": table,
                "unitarity": {"float": encode_real(&float_unitarity), "exact": encode_rational(&exact)},
                "oracle": oracle.as_ref().map(|o| json!({
                    "deviation": encode_real(&o.deviation),
                    "unitarity": encode_real(&o.unitarity),
                    "retries": o.retries,
                })),
                "tolerance": cfg.tolerance.to_string(),
                "passed": failures.is_empty(),
            });
            serde_json::to_string_pretty(&doc).expect("json") + "\n"
        }
        Format::Csv => {
            stderr = summary(&float_unitarity, &exact, oracle.as_ref());
            table.to_csv(cfg.digits())
        }
        Format::Text => text(&table) + &summary(&float_unitarity, &exact, oracle.as_ref()),
    };
    for f in &failures {
        let _ = writeln!(stderr, "FAIL {f}");
    }
    Ok(Output {
        stdout,
        stderr,
        passed: failures.is_empty(),
    })
}

fn summary(unitarity: &Float, exact: &bannai_ito::Rational, oracle: Option<&OracleSummary>) -> String {
    let mut s = format!("unitarity residual {} (signed products: {exact})\n", short(unitarity));
    if let Some(o) = oracle {
        let _ = writeln!(
            s,
            "oracle max ||R| - |R_oracle|| {}, oracle unitarity {}, precision retries {}",
            short(&o.deviation),
            short(&o.unitarity),
            o.retries
        );
    }
    s
}

fn text(t: &RacahTable) -> String {
    let mut s = format!(
        "mu = ({}, {}, {}), N = {}, mu4 = {}, eps4 = {}\n",
        t.mus[0], t.mus[1], t.mus[2], t.degree, t.mus[3], t.eps4
    );
    let width = TEXT_DIGITS + 8;
    let _ = write!(s, "{:>8}", "q12\\q23");
    for label in &t.q23 {
        let _ = write!(s, " {:>width$}", label.to_string());
    }
    s.push('\n');
    for (n, label) in t.q12.iter().enumerate() {
        let _ = write!(s, "{:>8}", label.to_string());
        for x in t.entries.row(n) {
            let _ = write!(s, " {:>width$}", format_real(x, TEXT_DIGITS));
        }
        s.push('\n');
    }
    if t.has_negative_ratio() {
        s.push_str("note: some weight/norm ratios are negative; entries use their absolute values\n");
    }
    s
}
