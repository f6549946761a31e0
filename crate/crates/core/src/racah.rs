//! Racah coefficients from Bannai-Ito polynomials,
//! `R[n][ℓ] = √(Ω_ℓ / Φ_{N,n}) P_n(x_ℓ)`, and their checks.
//!
//! Rows are labelled by the `K₁` eigenvalue `q₁₂ = θ_n`, columns by the `K₂`
//! eigenvalue `q₂₃ = θ*_ℓ`. Everything except the square roots is exact;
//! [`exact_unitarity`] checks orthogonality without them.
//!
//! Only `|R|` is physical. Each row is signed so that its `ℓ = 0` entry is
//! positive (or, if that entry vanishes, its first nonzero entry).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bi_polynomials::{orthogonality_table, polynomial_matrix, weight_signs, BiParams, WeightSignReport};
use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;
use crate::scalars::{
    decode_reals, encode_rational, encode_reals, format_real, parity_sign, pq_rows, pq_seq, Float, Precision, Rational,
    Sign,
};
use crate::sl_rep_oracle::{oracle_racah, positive_triple, OracleRacah};

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

#[derive(Clone, Debug, PartialEq)]
pub struct RacahTable {
    pub degree: usize,
    /// `(μ₁, μ₂, μ₃, μ₄)`.
    pub mus: Vec<Rational>,
    pub eps4: i64,
    /// Row labels `θ_n = (−1)^{n+1}(μ₁ + μ₂ + ½ + n)`.
    pub q12: Vec<Rational>,
    /// Column labels `θ*_ℓ = (−1)^{ℓ+1}(μ₂ + μ₃ + ½ + ℓ)`.
    pub q23: Vec<Rational>,
    pub grid: Vec<Rational>,
    pub omega: Vec<Rational>,
    pub phi: Vec<Rational>,
    /// `poly[n][ℓ] = P_n(x_ℓ)`.
    pub poly: Vec<Vec<Rational>>,
    /// Entries whose `Ω_ℓ / Φ_{N,n}` is negative; their root is taken of the
    /// absolute value.
    pub negative_under_root: Vec<Vec<bool>>,
    pub entries: DenseMatrix<Float>,
    pub precision: Precision,
}

fn alternating_label(base: &Rational, i: usize) -> Rational {
    (base.clone() + Rational::from(i as u64)) * -parity_sign(i)
}

/// The monic Bannai-Ito parameters attached to `(μ₁, μ₂, μ₃, N)`:
/// `ρ₁ = (μ₂+μ₃)/2`, `ρ₂ = (μ₁+ε₄μ₄)/2`, `r₁ = (μ₃−μ₂)/2`, `r₂ = (ε₄μ₄−μ₁)/2`.
pub fn identified_params(mus: &[Rational; 3], degree: usize) -> BiParams {
    let [m1, m2, m3] = mus;
    let e = (m1.clone() + m2 + m3 + Rational::from(degree as u64 + 1)) * parity_sign(degree);
    BiParams::new(
        (m2.clone() + m3) / 2u32,
        (m1.clone() + &e) / 2u32,
        (m3.clone() - m2) / 2u32,
        (e - m1) / 2u32,
    )
}

pub fn racah_table(
    mu1: Rational,
    mu2: Rational,
    mu3: Rational,
    degree: usize,
    precision: Precision,
) -> Result<RacahTable> {
    let mus = [mu1, mu2, mu3];
    let family = crate::bi_polynomials::make_family(mus.clone(), degree)?;
    if *family.bi() != identified_params(&mus, degree) {
        return Err(Error::TruncationViolation(
            "family parameters disagree with the Racah identification".into(),
        ));
    }
    let table = orthogonality_table(&family)?;
    let poly = polynomial_matrix(&family, &table)?;
    let size = degree + 1;
    let bits = precision.bits();
    let half = q(1, 2);
    let [m1, m2, m3] = &mus;
    let base12 = m1.clone() + m2 + &half;
    let base23 = m2.clone() + m3 + &half;

    let rows: Vec<(Vec<Float>, Vec<bool>)> = (0..size)
        .into_par_iter()
        .map(|n| {
            let ratios: Vec<Rational> = (0..size).map(|l| table.omega[l].clone() / &table.phi[n]).collect();
            let negative: Vec<bool> = ratios.iter().map(|r| r.cmp0().is_lt()).collect();
            let pivot = if poly[n][0].cmp0().is_ne() {
                Some(0)
            } else {
                (0..size).find(|&l| poly[n][l].cmp0().is_ne())
            };
            let flip = pivot.is_some_and(|l| poly[n][l].cmp0().is_lt());
            let row = (0..size)
                .map(|l| {
                    let root = Float::with_val(bits, &ratios[l].clone().abs()).sqrt();
                    let value = root * Float::with_val(bits, &poly[n][l]);
                    if flip {
                        -value
                    } else {
                        value
                    }
                })
                .collect();
            (row, negative)
        })
        .collect();
    let (entries, negative_under_root): (Vec<_>, Vec<_>) = rows.into_iter().unzip();

    let mu4 = m1.clone() + m2 + m3 + Rational::from(degree as u64 + 1);
    Ok(RacahTable {
        degree,
        mus: vec![m1.clone(), m2.clone(), m3.clone(), mu4],
        eps4: parity_sign(degree),
        q12: (0..size).map(|n| alternating_label(&base12, n)).collect(),
        q23: (0..size).map(|l| alternating_label(&base23, l)).collect(),
        grid: table.x,
        omega: table.omega,
        phi: table.phi,
        poly,
        negative_under_root,
        entries: DenseMatrix::from_rows(entries),
        precision,
    })
}

impl RacahTable {
    /// `n = |q₁₂| − μ₁ − μ₂ − ½` if that is an integer in `0..=N`.
    pub fn row_index(&self, q12: &Rational) -> Option<usize> {
        self.label_index(q12, &self.mus[0], &self.mus[1])
    }

    /// `ℓ = |q₂₃| − μ₂ − μ₃ − ½` if that is an integer in `0..=N`.
    pub fn column_index(&self, q23: &Rational) -> Option<usize> {
        self.label_index(q23, &self.mus[1], &self.mus[2])
    }

    fn label_index(&self, label: &Rational, a: &Rational, b: &Rational) -> Option<usize> {
        let k = label.clone().abs() - a - b - q(1, 2);
        if *k.denom() != 1 || k.cmp0().is_lt() {
            return None;
        }
        let k = k.numer().to_usize()?;
        (k <= self.degree).then_some(k)
    }

    pub fn has_negative_ratio(&self) -> bool {
        self.negative_under_root.iter().flatten().any(|&b| b)
    }

    pub fn weight_signs(&self) -> WeightSignReport {
        weight_signs(&crate::bi_polynomials::OrthogonalityTable {
            x: self.grid.clone(),
            omega: self.omega.clone(),
            phi: self.phi.clone(),
        })
    }

    /// CSV with a header of `q₂₃` labels and a first column of `q₁₂` labels.
    pub fn to_csv(&self, digits: usize) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["q12\\q23".to_string()];
        header.extend(self.q23.iter().map(encode_rational));
        w.write_record(&header).expect("in-memory write");
        for (n, label) in self.q12.iter().enumerate() {
            let mut record = vec![encode_rational(label)];
            record.extend(self.entries.row(n).iter().map(|x| format_real(x, digits)));
            w.write_record(&record).expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

#[derive(Serialize, Deserialize)]
struct TableWire {
    #[serde(rename = "N")]
    degree: usize,
    #[serde(with = "pq_seq")]
    mus: Vec<Rational>,
    eps4: i64,
    #[serde(with = "pq_seq")]
    q12: Vec<Rational>,
    #[serde(with = "pq_seq")]
    q23: Vec<Rational>,
    #[serde(with = "pq_seq")]
    grid: Vec<Rational>,
    #[serde(with = "pq_seq")]
    weights: Vec<Rational>,
    #[serde(with = "pq_seq")]
    norms: Vec<Rational>,
    #[serde(with = "pq_rows")]
    polynomials: Vec<Vec<Rational>>,
    negative_under_root: Vec<Vec<bool>>,
    precision_digits: u32,
    precision_bits: u32,
    entries: Vec<Vec<String>>,
}

impl Serialize for RacahTable {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        TableWire {
            degree: self.degree,
            mus: self.mus.clone(),
            eps4: self.eps4,
            q12: self.q12.clone(),
            q23: self.q23.clone(),
            grid: self.grid.clone(),
            weights: self.omega.clone(),
            norms: self.phi.clone(),
            polynomials: self.poly.clone(),
            negative_under_root: self.negative_under_root.clone(),
            precision_digits: self.precision.digits(),
            precision_bits: self.precision.bits(),
            entries: self.entries.to_rows().iter().map(|r| encode_reals(r)).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RacahTable {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = TableWire::deserialize(d)?;
        let size = w.degree + 1;
        let square = |rows: usize, cols: &[usize]| rows == size && cols.iter().all(|&c| c == size);
        let shapes_ok = w.mus.len() == 4
            && [w.q12.len(), w.q23.len(), w.grid.len(), w.weights.len(), w.norms.len()]
                .iter()
                .all(|&l| l == size)
            && square(
                w.polynomials.len(),
                &w.polynomials.iter().map(Vec::len).collect::<Vec<_>>(),
            )
            && square(
                w.negative_under_root.len(),
                &w.negative_under_root.iter().map(Vec::len).collect::<Vec<_>>(),
            )
            && square(w.entries.len(), &w.entries.iter().map(Vec::len).collect::<Vec<_>>());
        if !shapes_ok {
            return Err(D::Error::custom("Racah table fields have inconsistent sizes"));
        }
        let precision = Precision::new(w.precision_digits).map_err(D::Error::custom)?;
        let entries = w
            .entries
            .iter()
            .map(|r| decode_reals(r, w.precision_bits))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        Ok(RacahTable {
            degree: w.degree,
            mus: w.mus,
            eps4: w.eps4,
            q12: w.q12,
            q23: w.q23,
            grid: w.grid,
            omega: w.weights,
            phi: w.norms,
            poly: w.polynomials,
            negative_under_root: w.negative_under_root,
            entries: DenseMatrix::from_rows(entries),
            precision,
        })
    }
}

/// `max(|RRᵀ − I|, |RᵀR − I|)` on the real entries.
pub fn verify_unitarity(t: &RacahTable) -> Float {
    let r = &t.entries;
    let proto = r[(0, 0)].clone();
    let ident = DenseMatrix::identity_like(r.rows(), &proto);
    let rows = r.mul(&r.transpose()).sub(&ident).max_abs().expect("nonempty");
    let cols = r.transpose().mul(r).sub(&ident).max_abs().expect("nonempty");
    if rows > cols {
        rows
    } else {
        cols
    }
}

/// Orthogonality of rows and columns from the signed rational data alone.
///
/// For rows `G_nm = Σ_ℓ Ω_ℓ P_n P_m` must satisfy `G_nn = Φ_n` and
/// `G_nm = 0`; the residual reported is `|G_nn/Φ_n − 1|` and
/// `G_nm²/(Φ_nΦ_m)`. Columns use `H_ℓk = Σ_n P_n(x_ℓ)P_n(x_k)/Φ_n` with
/// `|Ω_ℓ H_ℓℓ − 1|` and `Ω_ℓΩ_k H_ℓk²`. These are squares of the entries of
/// `RRᵀ − I` and `RᵀR − I` off the diagonal, so no square root is needed.
pub fn exact_unitarity(t: &RacahTable) -> Rational {
    let size = t.degree + 1;
    let mut worst = Rational::new();
    let mut bump = |x: Rational| {
        let x = x.abs();
        if x > worst {
            worst = x;
        }
    };
    for n in 0..size {
        for m in n..size {
            let g = (0..size).fold(Rational::new(), |acc, l| {
                acc + t.omega[l].clone() * &t.poly[n][l] * &t.poly[m][l]
            });
            if n == m {
                bump(g / &t.phi[n] - 1u32);
            } else {
                bump(g.square() / (t.phi[n].clone() * &t.phi[m]));
            }
        }
    }
    for l in 0..size {
        for k in l..size {
            let h = (0..size).fold(Rational::new(), |acc, n| {
                acc + t.poly[n][l].clone() * &t.poly[n][k] / &t.phi[n]
            });
            if l == k {
                bump(h * &t.omega[l] - 1u32);
            } else {
                bump(h.square() * &t.omega[l] * &t.omega[k]);
            }
        }
    }
    worst
}

/// `max ||R_formula| − |R_oracle||`.
pub fn max_abs_deviation(t: &RacahTable, oracle: &OracleRacah) -> Result<Float> {
    if oracle.degree != t.degree {
        return Err(Error::DimensionMismatch {
            expected: t.degree + 1,
            found: oracle.degree + 1,
        });
    }
    let bits = t.precision.bits();
    let mut worst = Float::new(bits);
    for n in 0..=t.degree {
        for l in 0..=t.degree {
            let a = t.entries[(n, l)].clone().abs();
            let b = Float::with_val(bits, oracle.overlaps[(n, l)].clone().abs());
            let d = (a - b).abs();
            if d > worst {
                worst = d;
            }
        }
    }
    Ok(worst)
}

#[derive(Clone, Debug)]
pub struct OracleComparison {
    pub table: RacahTable,
    pub oracle: OracleRacah,
    pub deviation: Float,
}

/// Closed-form table against the brute-force oracle for `ε = (+, +, +)`.
pub fn compare_with_oracle(
    mu1: Rational,
    mu2: Rational,
    mu3: Rational,
    degree: usize,
    precision: Precision,
) -> Result<OracleComparison> {
    let params = positive_triple(&[mu1.clone(), mu2.clone(), mu3.clone()])?;
    let table = racah_table(mu1, mu2, mu3, degree, precision)?;
    let oracle = oracle_racah(&params, degree, precision)?;
    let deviation = max_abs_deviation(&table, &oracle)?;
    Ok(OracleComparison {
        table,
        oracle,
        deviation,
    })
}

/// Sign of every `Ω_ℓ / Φ_{N,n}`, row by row.
pub fn ratio_signs(t: &RacahTable) -> Vec<Vec<Sign>> {
    t.phi
        .iter()
        .map(|phi| t.omega.iter().map(|w| Sign::of(&(w.clone() / phi))).collect())
        .collect()
}
