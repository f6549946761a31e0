//! Monic Bannai-Ito polynomials: three-term recurrence, the two truncated
//! families with their orthogonality data, and the ₄F₃ representation.
//!
//! Everything here is exact. A family of degree `N` carries `N + 1`
//! orthogonal polynomials `P_0, ..., P_N` on the grid of roots of `P_{N+1}`.
//!
//! ```
//! use bannai_ito::bi_polynomials::{make_family_even, orthogonality_table, eval_monic};
//! use bannai_ito::scalars::Rational;
//!
//! let one = Rational::from(1);
//! let fam = make_family_even(one.clone(), one.clone(), one, 2).unwrap();
//! let table = orthogonality_table(&fam).unwrap();
//! assert_eq!(table.grid()[0], *fam.bi().rho1());
//! // every grid point is a root of P_{N+1}
//! for x in table.grid() {
//!     assert_eq!(eval_monic(fam.bi(), 3, x).unwrap(), Rational::new());
//! }
//! ```

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalars::{encode_rational, factorial, parity_sign, pochhammer, pq, pq_seq, Rational, Sign};

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn int(n: usize) -> Rational {
    Rational::from(n as i64)
}

/// The four recurrence parameters `ρ₁, ρ₂, r₁, r₂` and the derived
/// `g = ρ₁ + ρ₂ − r₁ − r₂`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BiParams {
    #[serde(with = "pq")]
    rho1: Rational,
    #[serde(with = "pq")]
    rho2: Rational,
    #[serde(with = "pq")]
    r1: Rational,
    #[serde(with = "pq")]
    r2: Rational,
    #[serde(with = "pq")]
    g: Rational,
}

impl BiParams {
    pub fn new(rho1: Rational, rho2: Rational, r1: Rational, r2: Rational) -> Self {
        let g = rho1.clone() + &rho2 - &r1 - &r2;
        BiParams { rho1, rho2, r1, r2, g }
    }

    pub fn rho1(&self) -> &Rational {
        &self.rho1
    }

    pub fn rho2(&self) -> &Rational {
        &self.rho2
    }

    pub fn r1(&self) -> &Rational {
        &self.r1
    }

    pub fn r2(&self) -> &Rational {
        &self.r2
    }

    pub fn g(&self) -> &Rational {
        &self.g
    }
}

impl<'de> Deserialize<'de> for BiParams {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Wire {
            #[serde(with = "pq")]
            rho1: Rational,
            #[serde(with = "pq")]
            rho2: Rational,
            #[serde(with = "pq")]
            r1: Rational,
            #[serde(with = "pq")]
            r2: Rational,
            #[serde(with = "pq")]
            g: Rational,
        }
        let w = Wire::deserialize(d)?;
        let params = BiParams::new(w.rho1, w.rho2, w.r1, w.r2);
        if params.g != w.g {
            return Err(serde::de::Error::custom("g does not equal rho1 + rho2 - r1 - r2"));
        }
        Ok(params)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parity {
    Even,
    Odd,
}

impl Parity {
    pub fn of(n: usize) -> Self {
        if n.is_multiple_of(2) {
            Parity::Even
        } else {
            Parity::Odd
        }
    }
}

impl fmt::Display for Parity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Parity::Even => "even",
            Parity::Odd => "odd",
        })
    }
}

/// A truncated family: `2(r₂ − ρ₁) = N + 1` for even `N` with shape
/// parameters `(a, b, c)`, or `2(ρ₁ + ρ₂) = −(N + 1)` for odd `N` with
/// `(α, β, γ)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(into = "FamilyWire", try_from = "FamilyWire")]
pub struct TruncationFamily {
    degree: usize,
    parity: Parity,
    shape: [Rational; 3],
    bi: BiParams,
}

#[derive(Clone, Serialize, Deserialize)]
struct FamilyWire {
    parity: Parity,
    #[serde(rename = "N")]
    degree: usize,
    #[serde(with = "pq_seq")]
    params: Vec<Rational>,
    bi: BiParams,
}

impl From<TruncationFamily> for FamilyWire {
    fn from(f: TruncationFamily) -> Self {
        FamilyWire {
            parity: f.parity,
            degree: f.degree,
            params: f.shape.to_vec(),
            bi: f.bi,
        }
    }
}

impl TryFrom<FamilyWire> for TruncationFamily {
    type Error = Error;

    fn try_from(w: FamilyWire) -> Result<Self> {
        let [a, b, c]: [Rational; 3] = w
            .params
            .try_into()
            .map_err(|_| Error::InvalidArgument("family needs exactly three parameters".into()))?;
        let fam = match w.parity {
            Parity::Even => make_family_even(a, b, c, w.degree)?,
            Parity::Odd => make_family_odd(a, b, c, w.degree)?,
        };
        if fam.bi != w.bi {
            return Err(Error::InvalidArgument(
                "stored recurrence parameters disagree with the family parameters".into(),
            ));
        }
        Ok(fam)
    }
}

impl TruncationFamily {
    /// Degree `N`; the family has `N + 1` members.
    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    /// `(a, b, c)` for even families, `(α, β, γ)` for odd ones.
    pub fn shape(&self) -> &[Rational; 3] {
        &self.shape
    }

    pub fn bi(&self) -> &BiParams {
        &self.bi
    }

    /// `U_n` from the family's factored closed form, independent of the
    /// recurrence coefficients.
    pub fn u_closed_form(&self, n: usize) -> Rational {
        let [a, b, c] = &self.shape;
        let nn = int(n);
        let big = int(self.degree);
        let denom = (a.clone() + b + &nn).square() * 16u32;
        let two_a = a.clone() * 2u32;
        let two_b = b.clone() * 2u32;
        let two_c = c.clone() * 2u32;
        let numer = match (self.parity, n.is_multiple_of(2)) {
            (Parity::Even, true) => {
                nn.clone()
                    * (big.clone() + &two_c + 1u32 - &nn)
                    * (nn.clone() + &two_a + &two_b)
                    * (nn.clone() + &two_a + &two_b + &two_c + &big + 1u32)
            }
            (Parity::Even, false) => {
                (big.clone() + 1u32 - &nn)
                    * (two_a.clone() + &nn)
                    * (two_b.clone() + &nn)
                    * (nn.clone() + &two_a + &two_b + &big + 1u32)
            }
            (Parity::Odd, true) => {
                nn.clone()
                    * (big.clone() + 1u32 - &nn)
                    * (nn.clone() + &two_a + &two_b)
                    * (nn.clone() + &two_a + &two_b + &big + 1u32)
            }
            (Parity::Odd, false) => {
                (big.clone() + &two_c + 1u32 - &nn)
                    * (two_a.clone() + &nn)
                    * (two_b.clone() + &nn)
                    * (nn.clone() + &two_a + &two_b + &two_c + &big + 1u32)
            }
        };
        numer / denom
    }

    /// Recurrence data for `n = 0, ..., N + 1`.
    pub fn recurrence(&self) -> Result<RecurrenceCoeffs> {
        recurrence_table(&self.bi, self.degree + 1)
    }
}

fn check_nonnegative(name: &'static str, value: &Rational) -> Result<()> {
    if value.cmp0().is_lt() {
        return Err(Error::NegativeParameter {
            name,
            value: value.to_string(),
        });
    }
    Ok(())
}

/// Even-`N` family. Zero parameters are accepted (the oscillator limit).
pub fn make_family_even(a: Rational, b: Rational, c: Rational, degree: usize) -> Result<TruncationFamily> {
    if !degree.is_multiple_of(2) {
        return Err(Error::BadParity {
            n: degree,
            expected: "even",
        });
    }
    check_nonnegative("a", &a)?;
    check_nonnegative("b", &b)?;
    check_nonnegative("c", &c)?;
    let big = int(degree);
    let bi = BiParams::new(
        (b.clone() + &c) / 2u32,
        (a.clone() * 2u32 + &b + &c + &big + 1u32) / 2u32,
        (c.clone() - &b) / 2u32,
        (b.clone() + &c + &big + 1u32) / 2u32,
    );
    let fam = TruncationFamily {
        degree,
        parity: Parity::Even,
        shape: [a, b, c],
        bi,
    };
    check_truncation(&fam)?;
    Ok(fam)
}

/// Odd-`N` family. Zero parameters are accepted (the oscillator limit).
pub fn make_family_odd(alpha: Rational, beta: Rational, gamma: Rational, degree: usize) -> Result<TruncationFamily> {
    if degree % 2 != 1 {
        return Err(Error::BadParity {
            n: degree,
            expected: "odd",
        });
    }
    check_nonnegative("alpha", &alpha)?;
    check_nonnegative("beta", &beta)?;
    check_nonnegative("gamma", &gamma)?;
    let big = int(degree);
    let bi = BiParams::new(
        (beta.clone() + &gamma) / 2u32,
        -(beta.clone() + &gamma + &big + 1u32) / 2u32,
        (gamma.clone() - &beta) / 2u32,
        -(alpha.clone() * 2u32 + &beta + &gamma + &big + 1u32) / 2u32,
    );
    let fam = TruncationFamily {
        degree,
        parity: Parity::Odd,
        shape: [alpha, beta, gamma],
        bi,
    };
    check_truncation(&fam)?;
    Ok(fam)
}

/// Family with the parity chosen from `N`.
pub fn make_family(shape: [Rational; 3], degree: usize) -> Result<TruncationFamily> {
    let [a, b, c] = shape;
    match Parity::of(degree) {
        Parity::Even => make_family_even(a, b, c, degree),
        Parity::Odd => make_family_odd(a, b, c, degree),
    }
}

fn check_truncation(fam: &TruncationFamily) -> Result<()> {
    let bi = &fam.bi;
    let target = int(fam.degree + 1);
    let ok = match fam.parity {
        Parity::Even => (bi.r2.clone() - &bi.rho1) * 2u32 == target,
        Parity::Odd => (bi.rho1.clone() + &bi.rho2) * 2u32 == -target,
    };
    if !ok {
        return Err(Error::TruncationViolation(format!(
            "{} family of degree {} does not satisfy its truncation identity",
            fam.parity, fam.degree
        )));
    }
    let rec = fam.recurrence()?;
    for n in 1..=fam.degree {
        if rec.u[n].cmp0().is_le() {
            return Err(Error::TruncationViolation(format!(
                "U_{n} = {} is not positive",
                rec.u[n]
            )));
        }
    }
    if !rec.u[fam.degree + 1].is_zero() {
        return Err(Error::TruncationViolation(format!(
            "U_{} = {} does not vanish",
            fam.degree + 1,
            rec.u[fam.degree + 1]
        )));
    }
    Ok(())
}

/// `A_n` and `C_n` of the monic recurrence
/// `P_{n+1} + (ρ₁ − A_n − C_n) P_n + A_{n−1} C_n P_{n−1} = x P_n`.
pub fn recurrence_coeffs(bi: &BiParams, n: usize) -> Result<(Rational, Rational)> {
    let nn = int(n);
    let two = |x: &Rational| x.clone() * 2u32;
    let a_den = (nn.clone() + 1u32 + &bi.g) * 4u32;
    if a_den.is_zero() {
        return Err(Error::SingularCoefficient { n });
    }
    let a = if n.is_multiple_of(2) {
        (nn.clone() + 1u32 + two(&bi.rho1) - two(&bi.r1)) * (nn.clone() + 1u32 + two(&bi.rho1) - two(&bi.r2)) / a_den
    } else {
        (nn.clone() + 1u32 + two(&bi.g)) * (nn.clone() + 1u32 + two(&bi.rho1) + two(&bi.rho2)) / a_den
    };
    if n == 0 {
        return Ok((a, Rational::new()));
    }
    let c_den = (nn.clone() + &bi.g) * 4u32;
    if c_den.is_zero() {
        return Err(Error::SingularCoefficient { n });
    }
    let c = if n.is_multiple_of(2) {
        -(nn.clone() * (nn.clone() - two(&bi.r1) - two(&bi.r2))) / c_den
    } else {
        -((nn.clone() - two(&bi.r2) + two(&bi.rho2)) * (nn.clone() - two(&bi.r1) + two(&bi.rho2))) / c_den
    };
    Ok((a, c))
}

/// Tabulated `A_n`, `C_n` and `U_n = A_{n−1} C_n` for `n = 0..=last`.
/// `U_0` is stored as zero.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RecurrenceCoeffs {
    #[serde(with = "pq_seq")]
    pub a: Vec<Rational>,
    #[serde(with = "pq_seq")]
    pub c: Vec<Rational>,
    #[serde(with = "pq_seq")]
    pub u: Vec<Rational>,
}

impl RecurrenceCoeffs {
    /// `d_n = A_n + C_n − ρ₁`, so that `P_{n+1} = (x + d_n) P_n − U_n P_{n−1}`.
    pub fn diagonal(&self, bi: &BiParams, n: usize) -> Rational {
        self.a[n].clone() + &self.c[n] - &bi.rho1
    }
}

pub fn recurrence_table(bi: &BiParams, last: usize) -> Result<RecurrenceCoeffs> {
    let mut a = Vec::<Rational>::with_capacity(last + 1);
    let mut c = Vec::with_capacity(last + 1);
    let mut u = Vec::with_capacity(last + 1);
    for n in 0..=last {
        let (an, cn) = recurrence_coeffs(bi, n)?;
        let un = if n == 0 {
            Rational::new()
        } else {
            a[n - 1].clone() * &cn
        };
        a.push(an);
        c.push(cn);
        u.push(un);
    }
    Ok(RecurrenceCoeffs { a, c, u })
}

/// `P_n(x)` from the three-term recurrence with `P_0 = 1`, `P_{−1} = 0`.
pub fn eval_monic(bi: &BiParams, n: usize, x: &Rational) -> Result<Rational> {
    Ok(eval_monic_all(bi, n, x)?.pop().expect("nonempty"))
}

/// `[P_0(x), ..., P_n(x)]`.
pub fn eval_monic_all(bi: &BiParams, n: usize, x: &Rational) -> Result<Vec<Rational>> {
    let mut values = Vec::with_capacity(n + 1);
    values.push(Rational::from(1));
    if n == 0 {
        return Ok(values);
    }
    let rec = recurrence_table(bi, n - 1)?;
    for k in 0..n {
        let mut next = (x.clone() + rec.diagonal(bi, k)) * &values[k];
        if k > 0 {
            next -= &(rec.u[k].clone() * &values[k - 1]);
        }
        values.push(next);
    }
    Ok(values)
}

/// Coefficients of `P_n` in ascending powers of `x`.
pub fn monic_coefficients(bi: &BiParams, n: usize) -> Result<Vec<Rational>> {
    let mut prev: Vec<Rational> = Vec::new();
    let mut cur = vec![Rational::from(1)];
    if n == 0 {
        return Ok(cur);
    }
    let rec = recurrence_table(bi, n - 1)?;
    for k in 0..n {
        let d = rec.diagonal(bi, k);
        let mut next = vec![Rational::new(); cur.len() + 1];
        for (i, coeff) in cur.iter().enumerate() {
            next[i + 1] += coeff;
            next[i] += &(d.clone() * coeff);
        }
        for (i, coeff) in prev.iter().enumerate() {
            next[i] -= &(rec.u[k].clone() * coeff);
        }
        prev = std::mem::replace(&mut cur, next);
    }
    Ok(cur)
}

/// `P_n(x) = W_n(x) − C_n W_{n−1}(x)` from the ₄F₃ representation.
///
/// The monic prefactors are folded into the sum as `(b + j)_{n−j}`, so a
/// vanishing lower parameter that is cancelled by the prefactor is not a
/// pole.
pub fn eval_hypergeometric(bi: &BiParams, n: usize, x: &Rational) -> Result<Rational> {
    let w_n = w_function(bi, n, x)?;
    if n == 0 {
        return Ok(w_n);
    }
    let (_, c_n) = recurrence_coeffs(bi, n)?;
    Ok(w_n - c_n * w_function(bi, n - 1, x)?)
}

/// Same as [`eval_hypergeometric`] but with the monic prefactors kept
/// separate from [`hyp_4f3_truncated`](crate::scalars::hyp_4f3_truncated).
/// Fails with [`Error::DenominatorPole`] where that split is singular.
pub fn eval_hypergeometric_literal(bi: &BiParams, n: usize, x: &Rational) -> Result<Rational> {
    let w = |m: usize| -> Result<Rational> {
        let (top, bottom, lead, prefactor) = w_parameters(bi, m, x);
        let k = m / 2;
        let lead_poch = pochhammer(&lead, k);
        if lead_poch.is_zero() {
            return Err(Error::DenominatorPole { term: k });
        }
        let kappa = bottom.iter().fold(Rational::from(1), |acc, b| acc * pochhammer(b, k)) / lead_poch;
        let series = crate::scalars::hyp_4f3_truncated(k, &top, &bottom, &Rational::from(1))?;
        Ok(prefactor * kappa * series)
    };
    let w_n = w(n)?;
    if n == 0 {
        return Ok(w_n);
    }
    let (_, c_n) = recurrence_coeffs(bi, n)?;
    Ok(w_n - c_n * w(n - 1)?)
}

/// Upper parameters, lower parameters, `(k + g + 1)` or `(k + g + 2)`, and
/// the polynomial prefactor of `W_m`.
fn w_parameters(bi: &BiParams, m: usize, x: &Rational) -> ([Rational; 3], [Rational; 3], Rational, Rational) {
    let k = int(m / 2);
    let half = q(1, 2);
    if m.is_multiple_of(2) {
        let lead = k + &bi.g + 1u32;
        (
            [lead.clone(), bi.rho2.clone() + x, bi.rho2.clone() - x],
            [
                bi.rho1.clone() + &bi.rho2 + 1u32,
                bi.rho2.clone() - &bi.r1 + &half,
                bi.rho2.clone() - &bi.r2 + &half,
            ],
            lead,
            Rational::from(1),
        )
    } else {
        let three_half = q(3, 2);
        let lead = k + &bi.g + 2u32;
        (
            [lead.clone(), bi.rho2.clone() + 1u32 + x, bi.rho2.clone() + 1u32 - x],
            [
                bi.rho1.clone() + &bi.rho2 + 2u32,
                bi.rho2.clone() - &bi.r1 + &three_half,
                bi.rho2.clone() - &bi.r2 + &three_half,
            ],
            lead,
            x.clone() - &bi.rho2,
        )
    }
}

fn w_function(bi: &BiParams, m: usize, x: &Rational) -> Result<Rational> {
    let (top, bottom, lead, prefactor) = w_parameters(bi, m, x);
    let k = m / 2;
    let denom = pochhammer(&lead, k);
    if denom.is_zero() {
        return Err(Error::DenominatorPole { term: k });
    }
    let minus_k = -int(k);
    let mut sum = Rational::new();
    for j in 0..=k {
        let mut term = pochhammer(&minus_k, j);
        for t in &top {
            term *= &pochhammer(t, j);
        }
        for b in &bottom {
            term *= &pochhammer(&(b.clone() + int(j)), k - j);
        }
        sum += &(term / factorial(j));
    }
    Ok(prefactor * sum / denom)
}

/// `ℓ = 2k + q` with `q ∈ {0, 1}`.
pub fn split_index(l: usize) -> (usize, usize) {
    (l / 2, l % 2)
}

/// Grid point `x_ℓ = ½[(−1)^ℓ (ℓ + s + ½) − ½]`, where `s` is `b + c` or
/// `β + γ`.
pub fn grid_point(b_plus_c: &Rational, l: usize) -> Rational {
    let inner = (int(l) + b_plus_c + q(1, 2)) * parity_sign(l);
    (inner - q(1, 2)) / 2u32
}

/// Grid, weights and normalizations of a truncated family.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrthogonalityTable {
    #[serde(rename = "grid", with = "pq_seq")]
    pub x: Vec<Rational>,
    #[serde(rename = "weights", with = "pq_seq")]
    pub omega: Vec<Rational>,
    #[serde(rename = "norms", with = "pq_seq")]
    pub phi: Vec<Rational>,
}

impl OrthogonalityTable {
    pub fn grid(&self) -> &[Rational] {
        &self.x
    }

    /// One row per `ℓ`: `l,x,weight,norm`, exact `p/q` values.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["l", "x", "weight", "norm"]).expect("in-memory write");
        for (l, ((x, omega), phi)) in self.x.iter().zip(&self.omega).zip(&self.phi).enumerate() {
            w.write_record([
                l.to_string(),
                encode_rational(x),
                encode_rational(omega),
                encode_rational(phi),
            ])
            .expect("in-memory write");
        }
        String::from_utf8(w.into_inner().expect("flush")).expect("utf-8")
    }
}

/// A family together with its orthogonality table, as written to JSON.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FamilyTable {
    pub family: TruncationFamily,
    #[serde(flatten)]
    pub table: OrthogonalityTable,
}

impl FamilyTable {
    pub fn new(family: TruncationFamily) -> Result<Self> {
        let table = orthogonality_table(&family)?;
        Ok(FamilyTable { family, table })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("table serializes")
    }
}

pub fn orthogonality_table(fam: &TruncationFamily) -> Result<OrthogonalityTable> {
    let [_, b, c] = &fam.shape;
    let bc = b.clone() + c;
    let size = fam.degree + 1;
    let x = (0..size).map(|l| grid_point(&bc, l)).collect();
    let omega = (0..size)
        .map(|l| match fam.parity {
            Parity::Even => weight_even(fam, l),
            Parity::Odd => weight_odd(fam, l),
        })
        .collect::<Result<Vec<_>>>()?;
    let phi = (0..size)
        .map(|n| match fam.parity {
            Parity::Even => norm_even(fam, n),
            Parity::Odd => norm_odd(fam, n),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OrthogonalityTable { x, omega, phi })
}

fn ratio(numer: Rational, denom: Rational, term: usize) -> Result<Rational> {
    if denom.is_zero() {
        return Err(Error::DenominatorPole { term });
    }
    Ok(numer / denom)
}

fn weight_even(fam: &TruncationFamily, l: usize) -> Result<Rational> {
    let [a, b, c] = &fam.shape;
    let (k, qq) = split_index(l);
    let half = q(1, 2);
    let n_half = q(fam.degree as i64, 2);
    let numer = pochhammer(&-n_half.clone(), k + qq)
        * pochhammer(&(half.clone() + b), k + qq)
        * pochhammer(&(b.clone() + c + 1u32), k)
        * pochhammer(&(q(3, 2) + a + b + c + &n_half), k);
    let denom = pochhammer(&(half.clone() + c), k + qq)
        * pochhammer(&(b.clone() + c + 1u32 + &n_half), k + qq)
        * pochhammer(&(half - a - &n_half), k)
        * factorial(k);
    Ok(ratio(numer, denom, l)? * parity_sign(qq))
}

fn weight_odd(fam: &TruncationFamily, l: usize) -> Result<Rational> {
    let [alpha, beta, gamma] = &fam.shape;
    let (k, qq) = split_index(l);
    let half = q(1, 2);
    let n_half = q(fam.degree as i64, 2);
    let numer = pochhammer(&q(1 - fam.degree as i64, 2), k)
        * pochhammer(&(half.clone() + beta), k + qq)
        * pochhammer(&(beta.clone() + gamma + 1u32), k)
        * pochhammer(&(alpha.clone() + beta + gamma + 1u32 + &n_half), k + qq);
    let denom = pochhammer(&(half + gamma), k + qq)
        * pochhammer(&(-alpha.clone() - &n_half), k + qq)
        * pochhammer(&(q(3, 2) + beta + gamma + &n_half), k)
        * factorial(k);
    Ok(ratio(numer, denom, l)? * parity_sign(qq))
}

fn norm_even(fam: &TruncationFamily, n: usize) -> Result<Rational> {
    let [a, b, c] = &fam.shape;
    let (k, qq) = split_index(n);
    let m = fam.degree / 2;
    assert!(m >= k + qq, "normalization index n = {n} exceeds degree {}", fam.degree);
    let half = q(1, 2);
    let mm = int(m);
    let kk = int(k);
    let ab = a.clone() + b;
    let prefactor = factorial(m) * factorial(k) / factorial(m - k - qq);
    let first = ratio(
        pochhammer(&(ab.clone() + 1u32 + &kk), m - k) * pochhammer(&(b.clone() + c + 1u32), m),
        pochhammer(&(half.clone() + a + &kk + int(qq)), m - k - qq) * pochhammer(&(half.clone() + c), m - k),
        n,
    )?;
    let second = ratio(
        pochhammer(&(half + b), k + qq)
            * pochhammer(&(mm.clone() + 1u32 + &ab), k + qq)
            * pochhammer(&(mm + q(3, 2) + &ab + c), k),
        pochhammer(&(kk + 1u32 + &ab), k + qq).square(),
        n,
    )?;
    Ok(prefactor * first * second)
}

fn norm_odd(fam: &TruncationFamily, n: usize) -> Result<Rational> {
    let [alpha, beta, gamma] = &fam.shape;
    let (k, qq) = split_index(n);
    let m = fam.degree.div_ceil(2);
    assert!(m > k, "normalization index n = {n} exceeds degree {}", fam.degree);
    let half = q(1, 2);
    let mm = int(m);
    let kk = int(k);
    let ab = alpha.clone() + beta;
    let prefactor = factorial(m - 1) * factorial(k) / factorial(m - k - 1);
    let first = ratio(
        pochhammer(&(ab.clone() + 1u32 + &kk), m - k) * pochhammer(&(beta.clone() + gamma + 1u32), m),
        pochhammer(&(half.clone() + &kk + int(qq) + alpha), m - k - qq)
            * pochhammer(&(half.clone() + gamma), m - k - qq),
        n,
    )?;
    let second = ratio(
        pochhammer(&(half.clone() + beta), k + qq)
            * pochhammer(&(mm.clone() + 1u32 + &ab), k)
            * pochhammer(&(mm + half + &ab + gamma), k + qq),
        pochhammer(&(kk + 1u32 + &ab), k + qq).square(),
        n,
    )?;
    Ok(prefactor * first * second)
}

/// Matrix `P_n(x_ℓ)` with rows `n = 0..=N` and columns `ℓ = 0..=N`.
pub fn polynomial_matrix(fam: &TruncationFamily, table: &OrthogonalityTable) -> Result<Vec<Vec<Rational>>> {
    let columns = table
        .x
        .iter()
        .map(|x| eval_monic_all(&fam.bi, fam.degree, x))
        .collect::<Result<Vec<_>>>()?;
    Ok((0..=fam.degree)
        .map(|n| columns.iter().map(|col| col[n].clone()).collect())
        .collect())
}

/// `max_{n,m} |Σ_ℓ Ω_ℓ P_n(x_ℓ) P_m(x_ℓ) − Φ_{N,n} δ_{nm}|`, exact.
pub fn orthogonality_residual(fam: &TruncationFamily, table: &OrthogonalityTable) -> Result<Rational> {
    let p = polynomial_matrix(fam, table)?;
    let size = fam.degree + 1;
    let mut worst = Rational::new();
    for n in 0..size {
        for m in n..size {
            let mut s = Rational::new();
            for (l, w) in table.omega.iter().enumerate() {
                s += &(w.clone() * &p[n][l] * &p[m][l]);
            }
            if n == m {
                s -= &table.phi[n];
            }
            let s = s.abs();
            if s > worst {
                worst = s;
            }
        }
    }
    Ok(worst)
}

/// `Φ_{N,0} · U_1 ⋯ U_n` for every `n`; must reproduce the explicit norms.
pub fn norms_from_recurrence(fam: &TruncationFamily, phi0: &Rational) -> Result<Vec<Rational>> {
    let rec = fam.recurrence()?;
    let mut out = Vec::with_capacity(fam.degree + 1);
    let mut acc = phi0.clone();
    out.push(acc.clone());
    for n in 1..=fam.degree {
        acc *= &rec.u[n];
        out.push(acc.clone());
    }
    Ok(out)
}

/// `max_ℓ |P_{N+1}(x_ℓ)|` over the family grid; zero for exact families.
pub fn verify_roots(fam: &TruncationFamily) -> Result<Rational> {
    let table = orthogonality_table(fam)?;
    root_residual(&fam.bi, fam.degree + 1, &table.x)
}

/// `max |P_degree(x)|` over the given points.
pub fn root_residual(bi: &BiParams, degree: usize, points: &[Rational]) -> Result<Rational> {
    let mut worst = Rational::new();
    for x in points {
        let v = eval_monic(bi, degree, x)?.abs();
        if v > worst {
            worst = v;
        }
    }
    Ok(worst)
}

/// Sign pattern of the weights and of the ratios `Ω_ℓ / Φ_{N,n}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightSignReport {
    pub omega: Vec<Sign>,
    /// `ratio[n][ℓ]` is the sign of `Ω_ℓ / Φ_{N,n}`.
    pub ratio: Vec<Vec<Sign>>,
    pub all_positive: bool,
}

impl WeightSignReport {
    pub fn pattern(&self) -> String {
        self.omega.iter().map(|s| s.symbol()).collect()
    }
}

pub fn weight_signs(table: &OrthogonalityTable) -> WeightSignReport {
    let omega: Vec<Sign> = table.omega.iter().map(Sign::of).collect();
    let ratio: Vec<Vec<Sign>> = table
        .phi
        .iter()
        .map(|phi| table.omega.iter().map(|w| Sign::of(&(w.clone() * phi))).collect())
        .collect();
    let all_positive = ratio.iter().flatten().all(|s| *s == Sign::Positive);
    WeightSignReport {
        omega,
        ratio,
        all_positive,
    }
}
