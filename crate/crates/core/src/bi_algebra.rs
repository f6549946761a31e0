//! The Bannai-Ito algebra realized by a Leonard pair: `K₁` diagonal, `K₂`
//! tridiagonal with unit superdiagonal, `K₃ = {K₁, K₂} − α₃`.
//!
//! The matrices are exact. Numerical work is confined to
//! [`leonard_triple_check`], which diagonalizes `K₂` and `K₃`.

use serde::{Deserialize, Serialize};

use crate::bi_polynomials::{eval_monic_all, make_family, recurrence_table, BiParams, TruncationFamily};
use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, to_real, DenseMatrix};
use crate::scalars::{encode_real, encode_reals, parity_sign, pq, pq_seq, Float, Precision, Rational, Sign, Tolerance};
use crate::sl_rep_oracle::label_spectrum;

fn q(n: i64, d: i64) -> Rational {
    Rational::from((n, d))
}

fn int(n: usize) -> Rational {
    Rational::from(n as u64)
}

/// `α₁ = −2(λ₁λ₂ + λ₃λ₄)`, `α₂ = −2(λ₁λ₄ + λ₂λ₃)`, `α₃ = 2(λ₁λ₃ + λ₂λ₄)`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StructureConstants {
    #[serde(with = "pq")]
    pub alpha1: Rational,
    #[serde(with = "pq")]
    pub alpha2: Rational,
    #[serde(with = "pq")]
    pub alpha3: Rational,
}

pub fn structure_constants(l: &[Rational; 4]) -> StructureConstants {
    let [l1, l2, l3, l4] = l;
    StructureConstants {
        alpha1: (l1.clone() * l2 + l3.clone() * l4) * -2i32,
        alpha2: (l1.clone() * l4 + l2.clone() * l3) * -2i32,
        alpha3: (l1.clone() * l3 + l2.clone() * l4) * 2i32,
    }
}

/// Images of `λ` under `π₁ = (12)(34)`, `π₂ = (13)(24)` and `π₃ = (14)(23)`.
pub fn klein_images(l: &[Rational; 4]) -> [[Rational; 4]; 3] {
    let [a, b, c, d] = l.clone();
    [
        [b.clone(), a.clone(), d.clone(), c.clone()],
        [c.clone(), d.clone(), a.clone(), b.clone()],
        [d, c, b, a],
    ]
}

/// Leonard pair for `(μ₁, μ₂, μ₃)` at degree `N`, with
/// `μ₄ = μ₁ + μ₂ + μ₃ + N + 1` and `ε₄ = (−1)^N`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LeonardPair {
    #[serde(rename = "N")]
    pub degree: usize,
    #[serde(with = "pq_seq")]
    pub mus: Vec<Rational>,
    pub eps4: i64,
    /// `θ_i = (−1)^{i+1}(μ₁ + μ₂ + ½ + i)`, the diagonal of `K₁`.
    #[serde(with = "pq_seq")]
    pub theta: Vec<Rational>,
    /// Diagonal of `K₂`.
    #[serde(with = "pq_seq")]
    pub b: Vec<Rational>,
    /// `u[n]` sits at position `(n, n−1)` of `K₂`; `u[0]` is unused and zero.
    #[serde(with = "pq_seq")]
    pub u: Vec<Rational>,
    /// `(κ₁, κ₂, κ₃)` of the Askey-Wilson relations.
    #[serde(with = "pq_seq")]
    pub kappa: Vec<Rational>,
}

/// `b_n` for `ε₄μ₄ = e`. The middle term carries a factor `n`, so it is
/// dropped at `n = 0`, which also covers `μ₁ = μ₂ = 0`.
pub fn b_coefficient(mu: &[Rational; 3], e: &Rational, n: usize) -> Result<Rational> {
    let [m1, m2, m3] = mu;
    let nn = int(n);
    let s12 = m1.clone() + m2;
    let head = m2.clone() + m3 + q(1, 2);
    let next = nn.clone() + 1u32 + &s12;
    if next.cmp0().is_eq() {
        return Err(Error::SingularDenominator { what: "b_n", n });
    }
    let here = nn.clone() + &s12;
    let minus_b = if n.is_multiple_of(2) {
        let middle = if n == 0 {
            Rational::new()
        } else {
            if here.cmp0().is_eq() {
                return Err(Error::SingularDenominator { what: "b_n", n });
            }
            nn.clone() * (nn.clone() + &s12 - m3 - e) / (here * 2u32)
        };
        let tail = (nn.clone() + 1u32 + m2.clone() * 2u32) * (next.clone() + m3 - e) / (next * 2u32);
        head + middle - tail
    } else {
        if here.cmp0().is_eq() {
            return Err(Error::SingularDenominator { what: "b_n", n });
        }
        let middle = (nn.clone() + m1.clone() * 2u32) * (nn.clone() + &s12 - m3 + e) / (here * 2u32);
        let tail = (nn.clone() + 1u32 + s12.clone() * 2u32) * (next.clone() + m3 + e) / (next * 2u32);
        head + middle - tail
    };
    Ok(-minus_b)
}

/// `u_n` for `n ≥ 1` and `ε₄μ₄ = e`.
pub fn u_coefficient(mu: &[Rational; 3], e: &Rational, n: usize) -> Result<Rational> {
    assert!(n >= 1, "u_n is defined for n >= 1");
    let [m1, m2, m3] = mu;
    let nn = int(n);
    let s12 = m1.clone() + m2;
    let here = nn.clone() + &s12;
    if here.cmp0().is_eq() {
        return Err(Error::SingularDenominator { what: "u_n", n });
    }
    let numer = if n.is_multiple_of(2) {
        nn.clone() * (nn.clone() + s12.clone() * 2u32) * (here.clone() + m3 + e) * (here.clone() - m3 - e)
    } else {
        (nn.clone() + m2.clone() * 2u32)
            * (nn.clone() + m1.clone() * 2u32)
            * (here.clone() + m3 - e)
            * (here.clone() - m3 + e)
    };
    Ok(-numer / (here.square() * 4u32))
}

pub fn build_leonard_pair(mu1: Rational, mu2: Rational, mu3: Rational, degree: usize) -> Result<LeonardPair> {
    for (name, v) in [("mu1", &mu1), ("mu2", &mu2), ("mu3", &mu3)] {
        if v.cmp0().is_lt() {
            return Err(Error::NegativeParameter {
                name,
                value: v.to_string(),
            });
        }
    }
    let eps4 = parity_sign(degree);
    let mu4 = mu1.clone() + &mu2 + &mu3 + int(degree + 1);
    let e = mu4.clone() * eps4;
    let mu = [mu1.clone(), mu2.clone(), mu3.clone()];
    let half = q(1, 2);
    let theta = (0..=degree)
        .map(|i| (mu1.clone() + &mu2 + &half + int(i)) * -parity_sign(i))
        .collect();
    let b = (0..=degree)
        .map(|n| b_coefficient(&mu, &e, n))
        .collect::<Result<Vec<_>>>()?;
    let mut u = vec![Rational::new()];
    for n in 1..=degree {
        let un = u_coefficient(&mu, &e, n)?;
        if un.cmp0().is_eq() {
            return Err(Error::NotIrreducible {
                operator: "K2",
                basis: "K1",
                detail: format!("u_{n} vanishes"),
            });
        }
        u.push(un);
    }
    let kappa = vec![
        (mu1.clone() * &mu2 + mu3.clone() * &e) * -2i32,
        (mu2.clone() * &mu3 + mu1.clone() * &e) * -2i32,
        (mu1.clone() * &mu3 + mu2.clone() * &e) * 4u32,
    ];
    Ok(LeonardPair {
        degree,
        mus: vec![mu1, mu2, mu3, mu4],
        eps4,
        theta,
        b,
        u,
        kappa,
    })
}

impl LeonardPair {
    fn mu3(&self) -> [Rational; 3] {
        [self.mus[0].clone(), self.mus[1].clone(), self.mus[2].clone()]
    }

    /// `ε₄μ₄`.
    pub fn signed_mu4(&self) -> Rational {
        self.mus[3].clone() * self.eps4
    }

    /// `(λ₁, λ₂, λ₃, λ₄) = (μ₁, μ₂, μ₃, ε₄μ₄)`.
    pub fn lambdas(&self) -> [Rational; 4] {
        [
            self.mus[0].clone(),
            self.mus[1].clone(),
            self.mus[2].clone(),
            self.signed_mu4(),
        ]
    }

    pub fn structure_constants(&self) -> StructureConstants {
        structure_constants(&self.lambdas())
    }

    /// `u_{N+1}` from the same closed form; vanishes on every valid pair.
    pub fn u_beyond(&self) -> Result<Rational> {
        u_coefficient(&self.mu3(), &self.signed_mu4(), self.degree + 1)
    }

    /// `θ*_s = (−1)^{s+1}(μ₂ + μ₃ + ½ + s)`, the spectrum of `K₂`.
    pub fn theta_star(&self, s: usize) -> Rational {
        (self.mus[1].clone() + &self.mus[2] + q(1, 2) + int(s)) * -parity_sign(s)
    }

    pub fn k1(&self) -> DenseMatrix<Rational> {
        DenseMatrix::diagonal(&self.theta)
    }

    pub fn k2(&self) -> DenseMatrix<Rational> {
        let size = self.degree + 1;
        let mut m = DenseMatrix::zeros_like(size, size, &Rational::new());
        for n in 0..size {
            m[(n, n)] = self.b[n].clone();
            if n + 1 < size {
                m[(n, n + 1)] = Rational::from(1);
                m[(n + 1, n)] = self.u[n + 1].clone();
            }
        }
        m
    }

    pub fn k3(&self) -> DenseMatrix<Rational> {
        let alpha3 = self.structure_constants().alpha3;
        self.k1().anticommutator(&self.k2()).shift_diagonal(&-alpha3)
    }

    /// Signs of `u_1, ..., u_N`.
    pub fn u_signs(&self) -> Vec<Sign> {
        self.u[1..].iter().map(Sign::of).collect()
    }
}

/// Closed forms at `μ₁ = μ₂ = μ₃ = 0`: `b₀ = (−1)^{N+1}(N+1)/2`, `b_i = 0`
/// otherwise, `u_n = (n + N + 1)(N + 1 − n)/4`.
///
/// The sign of `b₀` follows from `tr K₂ = Σ_s θ*_s`; the often quoted
/// `−(N+1)/2` is only right for even `N`.
pub fn degenerate_coefficients(degree: usize) -> (Vec<Rational>, Vec<Rational>) {
    let big = int(degree + 1);
    let mut b = vec![Rational::new(); degree + 1];
    b[0] = big.clone() * -parity_sign(degree) / 2u32;
    let mut u = vec![Rational::new()];
    for n in 1..=degree {
        u.push((int(n) + &big) * (big.clone() - int(n)) / 4u32);
    }
    (b, u)
}

fn max_abs_exact(m: &DenseMatrix<Rational>) -> Rational {
    m.max_abs().expect("nonempty matrix")
}

/// Exact max-norm residuals of the three anticommutation relations and of
/// the Casimir value.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BiAlgebraResiduals {
    /// `{K₁, K₂} − K₃ − α₃`, zero by the definition of `K₃`.
    #[serde(with = "pq")]
    pub anti_12: Rational,
    /// `{K₂, K₃} − K₁ − α₁`.
    #[serde(with = "pq")]
    pub anti_23: Rational,
    /// `{K₁, K₃} − K₂ − α₂`.
    #[serde(with = "pq")]
    pub anti_13: Rational,
    /// `K₁² + K₂² + K₃² − (Σλᵢ² − ¼)`.
    #[serde(with = "pq")]
    pub casimir: Rational,
}

impl BiAlgebraResiduals {
    pub fn all_zero(&self) -> bool {
        [&self.anti_12, &self.anti_23, &self.anti_13, &self.casimir]
            .iter()
            .all(|r| r.cmp0().is_eq())
    }
}

pub fn verify_bi_algebra(lp: &LeonardPair) -> BiAlgebraResiduals {
    let (k1, k2, k3) = (lp.k1(), lp.k2(), lp.k3());
    let sc = lp.structure_constants();
    let lam_sq = lp.lambdas().iter().fold(-q(1, 4), |acc, l| acc + l.clone().square());
    let casimir = k1.mul(&k1).add(&k2.mul(&k2)).add(&k3.mul(&k3)).shift_diagonal(&-lam_sq);
    BiAlgebraResiduals {
        anti_12: max_abs_exact(&k1.anticommutator(&k2).sub(&k3).shift_diagonal(&-sc.alpha3)),
        anti_23: max_abs_exact(&k2.anticommutator(&k3).sub(&k1).shift_diagonal(&-sc.alpha1)),
        anti_13: max_abs_exact(&k1.anticommutator(&k3).sub(&k2).shift_diagonal(&-sc.alpha2)),
        casimir: max_abs_exact(&casimir),
    }
}

/// Exact residuals of the two Askey-Wilson relations at `q = −1`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AwResiduals {
    /// `K₁²K₂ + 2K₁K₂K₁ + K₂K₁² − K₂ − κ₃K₁ − κ₂`.
    #[serde(with = "pq")]
    pub first: Rational,
    /// `K₂²K₁ + 2K₂K₁K₂ + K₁K₂² − K₁ − κ₃K₂ − κ₁`.
    #[serde(with = "pq")]
    pub second: Rational,
}

impl AwResiduals {
    pub fn all_zero(&self) -> bool {
        self.first.cmp0().is_eq() && self.second.cmp0().is_eq()
    }
}

fn aw_residual(a: &DenseMatrix<Rational>, b: &DenseMatrix<Rational>, k3: &Rational, k_const: &Rational) -> Rational {
    let aa = a.mul(a);
    let aba = a.mul(b).mul(a);
    let lhs = aa.mul(b).add(&aba.add(&aba)).add(&b.mul(&aa));
    max_abs_exact(&lhs.sub(b).sub(&a.scale(k3)).shift_diagonal(&-k_const.clone()))
}

pub fn verify_aw_relations(lp: &LeonardPair) -> AwResiduals {
    let (k1, k2) = (lp.k1(), lp.k2());
    AwResiduals {
        first: aw_residual(&k1, &k2, &lp.kappa[2], &lp.kappa[1]),
        second: aw_residual(&k2, &k1, &lp.kappa[2], &lp.kappa[0]),
    }
}

/// Thresholds for calling a matrix irreducible tridiagonal.
#[derive(Clone, Debug)]
pub struct BandTolerances {
    /// Entries off the three central diagonals must be below this.
    pub off_band: Tolerance,
    /// Sub- and superdiagonal entries must exceed this in absolute value.
    pub band: Float,
}

impl BandTolerances {
    /// `eps` off the band and `√eps` on it, with `eps` the precision's
    /// default tolerance.
    pub fn for_precision(precision: Precision) -> Self {
        let tol = precision.tolerance();
        let band = tol.eps().clone().sqrt();
        BandTolerances { off_band: tol, band }
    }
}

/// Band profile of one operator in the eigenbasis of another.
#[derive(Clone, Debug)]
pub struct BandCheck {
    pub basis: &'static str,
    pub operator: &'static str,
    pub off_band: Float,
    pub band_min: Float,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct TripleReport {
    /// Eigenvalues of `K₂` in label order `s`.
    pub k2_spectrum: Vec<Float>,
    /// Largest deviation from `θ*_s`.
    pub k2_deviation: Float,
    /// Eigenvalues of `K₃` ordered by absolute value.
    pub k3_spectrum: Vec<Float>,
    /// `+1` if `K₃` has spectrum `(−1)^i(μ₁ + μ₃ + ½ + i)`, `−1` for the
    /// opposite global sign.
    pub k3_sign: i64,
    pub k3_deviation: Float,
    pub bands: Vec<BandCheck>,
}

impl TripleReport {
    pub fn passed(&self) -> bool {
        self.bands.iter().all(|b| b.passed)
    }
}

fn symmetrize(m: &DenseMatrix<Rational>, d: &[Float]) -> DenseMatrix<Float> {
    let bits = d[0].prec();
    let mut out = DenseMatrix::zeros_like(m.rows(), m.cols(), &Float::new(bits));
    for i in 0..m.rows() {
        for j in 0..m.cols() {
            if m[(i, j)].cmp0().is_ne() {
                out[(i, j)] = Float::with_val(bits, &m[(i, j)]) * &d[j] / &d[i];
            }
        }
    }
    out
}

fn band_check(basis: &'static str, operator: &'static str, m: &DenseMatrix<Float>, tol: &BandTolerances) -> BandCheck {
    let (off_band, band_min) = m.band_profile();
    let band_min = band_min.unwrap_or_else(|| Float::with_val(off_band.prec(), f64::INFINITY));
    let passed = tol.off_band.accepts(&off_band) && band_min > tol.band;
    BandCheck {
        basis,
        operator,
        off_band,
        band_min,
        passed,
    }
}

/// Diagonalizes `K₂` and `K₃` and checks that each of `K₁, K₂, K₃` is
/// irreducible tridiagonal in the eigenbasis of each other one.
///
/// `K₂` is first made symmetric by the diagonal similarity
/// `d_n = d_{n−1} √u_n`, which needs every `u_n > 0`.
pub fn leonard_triple_check(lp: &LeonardPair, precision: Precision, tol: &BandTolerances) -> Result<TripleReport> {
    if let Some(n) = (1..=lp.degree).find(|&n| lp.u[n].cmp0().is_le()) {
        return Err(Error::NotIrreducible {
            operator: "K2",
            basis: "K1",
            detail: format!("u_{n} = {} is not positive, no real symmetric form", lp.u[n]),
        });
    }
    let bits = precision.bits();
    let mut d = vec![Float::with_val(bits, 1)];
    for n in 1..=lp.degree {
        let next = d[n - 1].clone() * Float::with_val(bits, &lp.u[n]).sqrt();
        d.push(next);
    }
    let k1 = to_real(&lp.k1(), bits);
    let k2 = symmetrize(&lp.k2(), &d);
    let k3 = symmetrize(&lp.k3(), &d);

    let e2 = symmetric_eigen(&k2)?;
    let eps = precision.tolerance();
    let base = lp.mus[1].clone() + &lp.mus[2] + q(1, 2);
    let labels = label_spectrum(&e2.values, &base, 1, lp.degree, &eps)?;
    let size = lp.degree + 1;
    let mut order2 = vec![0; size];
    for (j, &s) in labels.iter().enumerate() {
        order2[s] = j;
    }
    let k2_spectrum: Vec<Float> = order2.iter().map(|&j| e2.values[j].clone()).collect();
    let k2_deviation = k2_spectrum
        .iter()
        .enumerate()
        .map(|(s, v)| (Float::with_val(bits, &lp.theta_star(s)) - v).abs())
        .fold(Float::new(bits), |a, b| if b > a { b } else { a });

    let e3 = symmetric_eigen(&k3)?;
    let mut order3: Vec<usize> = (0..size).collect();
    order3.sort_by(|&a, &b| {
        e3.values[a]
            .clone()
            .abs()
            .partial_cmp(&e3.values[b].clone().abs())
            .expect("finite eigenvalues")
    });
    let k3_spectrum: Vec<Float> = order3.iter().map(|&j| e3.values[j].clone()).collect();
    let base3 = Float::with_val(bits, &(lp.mus[0].clone() + &lp.mus[2] + q(1, 2)));
    let deviation_for = |sign: i64| {
        k3_spectrum
            .iter()
            .enumerate()
            .map(|(i, v)| ((base3.clone() + i as u64) * (sign * parity_sign(i)) - v).abs())
            .fold(Float::new(bits), |a, b| if b > a { b } else { a })
    };
    let (plus, minus) = (deviation_for(1), deviation_for(-1));
    let (k3_sign, k3_deviation) = if plus <= minus { (1, plus) } else { (-1, minus) };
    if !eps.accepts(&k3_deviation) {
        return Err(Error::SpectrumMismatch {
            eigenvalue: encode_real(&k3_spectrum[0]),
            detail: format!(
                "K3 spectrum misses the alternating pattern by {}",
                encode_real(&k3_deviation)
            ),
        });
    }

    let reorder = |v: &DenseMatrix<Float>, order: &[usize]| {
        let mut out = v.clone();
        for (k, &j) in order.iter().enumerate() {
            for i in 0..size {
                out[(i, k)] = v[(i, j)].clone();
            }
        }
        out
    };
    let v2 = reorder(&e2.vectors, &order2);
    let v3 = reorder(&e3.vectors, &order3);
    let in_basis = |v: &DenseMatrix<Float>, m: &DenseMatrix<Float>| v.transpose().mul(m).mul(v);

    let bands = vec![
        band_check("K1", "K2", &k2, tol),
        band_check("K1", "K3", &k3, tol),
        band_check("K2", "K1", &in_basis(&v2, &k1), tol),
        band_check("K2", "K3", &in_basis(&v2, &k3), tol),
        band_check("K3", "K1", &in_basis(&v3, &k1), tol),
        band_check("K3", "K2", &in_basis(&v3, &k2), tol),
    ];
    Ok(TripleReport {
        k2_spectrum,
        k2_deviation,
        k3_spectrum,
        k3_sign,
        k3_deviation,
        bands,
    })
}

/// [`leonard_triple_check`] that fails on the first operator that is not
/// irreducible tridiagonal.
pub fn require_leonard_triple(lp: &LeonardPair, precision: Precision, tol: &BandTolerances) -> Result<TripleReport> {
    let report = leonard_triple_check(lp, precision, tol)?;
    if let Some(b) = report.bands.iter().find(|b| !b.passed) {
        return Err(Error::NotIrreducible {
            operator: b.operator,
            basis: b.basis,
            detail: format!(
                "off-band {} and smallest band entry {}",
                encode_real(&b.off_band),
                encode_real(&b.band_min)
            ),
        });
    }
    Ok(report)
}

/// Monic Bannai-Ito data recovered from a Leonard pair.
///
/// The eigenvector of `K₂` for `θ*_s` has components `(−2)ⁿ Pₙ(x_s)` with
/// `x_s = −θ*_s/2 − ¼`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extraction {
    pub bi: BiParams,
    pub family: TruncationFamily,
    pub grid: Vec<Rational>,
}

pub fn extract_polynomials(lp: &LeonardPair) -> Result<Extraction> {
    let [m1, m2, m3] = lp.mu3();
    let e = lp.signed_mu4();
    let bi = BiParams::new(
        (m2.clone() + &m3) / 2u32,
        (m1.clone() + &e) / 2u32,
        (m3.clone() - &m2) / 2u32,
        (e.clone() - &m1) / 2u32,
    );
    let big = int(lp.degree + 1);
    let truncated = if lp.degree.is_multiple_of(2) {
        (bi.r2().clone() - bi.rho1()) * 2u32 == big
    } else {
        (bi.rho1().clone() + bi.rho2()) * 2u32 == -big
    };
    if !truncated {
        return Err(Error::TruncationViolation(format!(
            "identified parameters miss the truncation identity at N = {}",
            lp.degree
        )));
    }
    let family = make_family([m1, m2, m3], lp.degree)?;
    if *family.bi() != bi {
        return Err(Error::TruncationViolation(
            "identified parameters differ from the family parametrization".into(),
        ));
    }
    let rec = recurrence_table(&bi, lp.degree)?;
    for n in 0..=lp.degree {
        if rec.diagonal(&bi, n) != lp.b[n].clone() / 2u32 + q(1, 4) {
            return Err(Error::TruncationViolation(format!(
                "diagonal recurrence coefficient differs at n = {n}"
            )));
        }
        if n >= 1 && rec.u[n] != lp.u[n].clone() / 4u32 {
            return Err(Error::TruncationViolation(format!("U_{n} differs from u_{n}/4")));
        }
    }
    let grid = (0..=lp.degree).map(|s| -lp.theta_star(s) / 2u32 - q(1, 4)).collect();
    Ok(Extraction { bi, family, grid })
}

/// `max_s |K₂ v_s − θ*_s v_s|` for `v_s = ((−2)ⁿ Pₙ(x_s))_n`, exact.
pub fn eigenvector_residual(lp: &LeonardPair, ext: &Extraction) -> Result<Rational> {
    let k2 = lp.k2();
    let mut worst = Rational::new();
    for (s, x) in ext.grid.iter().enumerate() {
        let p = eval_monic_all(&ext.bi, lp.degree, x)?;
        let mut scale = Rational::from(1);
        let v: Vec<Rational> = p
            .iter()
            .map(|pn| {
                let vn = pn.clone() * &scale;
                scale *= -2i32;
                vn
            })
            .collect();
        let theta = lp.theta_star(s);
        for i in 0..=lp.degree {
            let mut row = -(theta.clone() * &v[i]);
            for (j, vj) in v.iter().enumerate() {
                row += &(k2[(i, j)].clone() * vj);
            }
            let row = row.abs();
            if row > worst {
                worst = row;
            }
        }
    }
    Ok(worst)
}

/// Verification report for one Leonard pair, as written to JSON.
#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub params: LeonardPair,
    pub residuals: ReportResiduals,
    pub spectra: ReportSpectra,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportResiduals {
    /// `{K₁,K₂}`, `{K₂,K₃}`, `{K₁,K₃}` relations.
    #[serde(with = "pq_seq")]
    pub bi_algebra: Vec<Rational>,
    #[serde(with = "pq_seq")]
    pub aw: Vec<Rational>,
    #[serde(with = "pq")]
    pub casimir: Rational,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportSpectra {
    #[serde(with = "pq_seq")]
    pub k1: Vec<Rational>,
    pub k2: Vec<String>,
    pub k2_deviation: String,
    pub k3: Vec<String>,
    pub k3_sign: i64,
    pub tridiagonal: bool,
}

pub fn verification_report(lp: &LeonardPair, precision: Precision) -> Result<VerificationReport> {
    let alg = verify_bi_algebra(lp);
    let aw = verify_aw_relations(lp);
    let triple = leonard_triple_check(lp, precision, &BandTolerances::for_precision(precision))?;
    Ok(VerificationReport {
        params: lp.clone(),
        residuals: ReportResiduals {
            bi_algebra: vec![alg.anti_12, alg.anti_23, alg.anti_13],
            aw: vec![aw.first, aw.second],
            casimir: alg.casimir,
        },
        spectra: ReportSpectra {
            k1: lp.theta.clone(),
            k2: encode_reals(&triple.k2_spectrum),
            k2_deviation: encode_real(&triple.k2_deviation),
            k3: encode_reals(&triple.k3_spectrum),
            k3_sign: triple.k3_sign,
            tridiagonal: triple.passed(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(n: i64) -> Rational {
        Rational::from(n)
    }

    #[test]
    fn structure_constant_values() {
        let zero = structure_constants(&[r(0), r(0), r(0), q(7, 2)]);
        assert!(zero.alpha1.cmp0().is_eq() && zero.alpha2.cmp0().is_eq() && zero.alpha3.cmp0().is_eq());
        let ones = structure_constants(&[r(1), r(1), r(1), r(1)]);
        assert_eq!((ones.alpha1, ones.alpha2, ones.alpha3), (r(-4), r(-4), r(4)));
    }

    #[test]
    fn degenerate_pair_at_n2() {
        let lp = build_leonard_pair(r(0), r(0), r(0), 2).unwrap();
        assert_eq!(lp.b, vec![q(-3, 2), r(0), r(0)]);
        assert_eq!(lp.u[1], r(2));
        assert_eq!(lp.u[2], q(5, 4));
        let (b, u) = degenerate_coefficients(2);
        assert_eq!((b, u), (lp.b.clone(), lp.u.clone()));
        let odd = build_leonard_pair(r(0), r(0), r(0), 1).unwrap();
        assert_eq!(odd.b, vec![r(1), r(0)]);
        assert_eq!(degenerate_coefficients(1), (odd.b.clone(), odd.u.clone()));
        assert!(lp.u_beyond().unwrap().cmp0().is_eq());
    }

    #[test]
    fn small_pairs_satisfy_the_algebra() {
        let h = q(1, 2);
        let lp = build_leonard_pair(h.clone(), h.clone(), h, 1).unwrap();
        assert!(verify_bi_algebra(&lp).all_zero());
        let lp = build_leonard_pair(q(1, 2), r(1), q(3, 2), 3).unwrap();
        assert!(verify_aw_relations(&lp).all_zero());
        let lp = build_leonard_pair(r(2), r(0), q(1, 3), 0).unwrap();
        assert!(verify_bi_algebra(&lp).all_zero());
        assert!(verify_aw_relations(&lp).all_zero());
    }

    #[test]
    fn broken_pair_is_detected() {
        let mut lp = build_leonard_pair(r(1), r(1), r(1), 3).unwrap();
        lp.u[1] += r(1);
        assert!(!verify_bi_algebra(&lp).all_zero());
        assert!(!verify_aw_relations(&lp).all_zero());
        assert!(matches!(extract_polynomials(&lp), Err(Error::TruncationViolation(_))));
    }

    #[test]
    fn triple_check_small_cases() {
        let p = Precision::default();
        let tol = BandTolerances::for_precision(p);
        let h = q(1, 2);
        let lp = build_leonard_pair(h.clone(), h.clone(), h, 2).unwrap();
        let rep = require_leonard_triple(&lp, p, &tol).unwrap();
        assert_eq!(rep.k3_sign, 1);
        let bits = p.bits();
        for (i, v) in rep.k3_spectrum.iter().enumerate() {
            let want = Float::with_val(bits, &(q(3, 2) + int(i))) * parity_sign(i);
            assert!(p.tolerance().accepts(&(want - v)));
        }
        let lp = build_leonard_pair(r(0), r(0), r(0), 2).unwrap();
        let rep = require_leonard_triple(&lp, p, &tol).unwrap();
        assert!(rep.k3_spectrum[0] > 0.49 && rep.k3_spectrum[1] < -1.49);
    }

    #[test]
    fn extraction_identifies_family_parameters() {
        for n in [2usize, 3] {
            let lp = build_leonard_pair(r(1), r(1), r(1), n).unwrap();
            let ext = extract_polynomials(&lp).unwrap();
            assert_eq!(ext.family.shape(), &[r(1), r(1), r(1)]);
            assert!(eigenvector_residual(&lp, &ext).unwrap().cmp0().is_eq());
        }
    }

    #[test]
    fn klein_images_are_involutions() {
        let l = [r(1), r(2), r(3), r(4)];
        for img in klein_images(&l) {
            assert_ne!(img, l);
            let back = klein_images(&img);
            assert!(back.contains(&l));
        }
    }

    fn rational() -> impl Strategy<Value = Rational> {
        (0i64..9, 1i64..4).prop_map(|(n, d)| q(n, d))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn exact_algebra(a in rational(), b in rational(), c in rational(), n in 0usize..7) {
            let lp = build_leonard_pair(a, b, c, n).unwrap();
            prop_assert!(verify_bi_algebra(&lp).all_zero());
            prop_assert!(verify_aw_relations(&lp).all_zero());
            prop_assert!(lp.u_beyond().unwrap().cmp0().is_eq());
            prop_assert!(lp.u_signs().iter().all(|s| *s == Sign::Positive));
            let ext = extract_polynomials(&lp).unwrap();
            prop_assert!(eigenvector_residual(&lp, &ext).unwrap().cmp0().is_eq());
        }

        #[test]
        fn klein_invariance(l in proptest::array::uniform4((-20i64..20, 1i64..7))) {
            let l = l.map(|(n, d)| q(n, d));
            let base = structure_constants(&l);
            for img in klein_images(&l) {
                prop_assert_eq!(structure_constants(&img), base.clone());
            }
            let neg = l.clone().map(|x| -x);
            prop_assert_eq!(structure_constants(&neg), base);
        }
    }
}
