//! Explicit sl₋₁(2) representations and a brute-force Racah oracle.
//!
//! Operators are kept as noncommutative polynomials ([`OpExpr`]) in the
//! generators of each tensor factor and applied directly to basis states
//! `|n₁, ..., n_k⟩`. Every word is a product of ladder, weight and reflection
//! letters, so its action on a basis state is a single state with coefficient
//! `c √s` for rationals `c` and `s`. The Casimir operators preserve the total
//! level `n₁ + n₂ + n₃`, which makes the level-`m` matrices exact up to the
//! final conversion to reals; no truncation is involved.
//!
//! Nothing here uses the closed forms of the other modules.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{symmetric_eigen, DenseMatrix};
use crate::scalars::{
    decode_reals, encode_real, encode_reals, parity_sign, parse_real, pq, Float, Precision, Rational, Tolerance,
};

/// Maximum number of precision doublings after a degenerate or inconsistent
/// oracle run.
pub const MAX_RETRIES: usize = 2;

/// Parameters `(ε, μ)` of a positive-discrete-series module.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "ParamsWire")]
pub struct ModuleParams {
    epsilon: i8,
    #[serde(with = "pq")]
    mu: Rational,
}

#[derive(Deserialize)]
struct ParamsWire {
    epsilon: i8,
    #[serde(with = "pq")]
    mu: Rational,
}

impl TryFrom<ParamsWire> for ModuleParams {
    type Error = Error;

    fn try_from(w: ParamsWire) -> Result<Self> {
        ModuleParams::new(w.epsilon, w.mu)
    }
}

impl ModuleParams {
    pub fn new(epsilon: i8, mu: Rational) -> Result<Self> {
        if epsilon != 1 && epsilon != -1 {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be +1 or -1, got {epsilon}"
            )));
        }
        if mu.cmp0().is_lt() {
            return Err(Error::NegativeParameter {
                name: "mu",
                value: mu.to_string(),
            });
        }
        Ok(ModuleParams { epsilon, mu })
    }

    /// `ε = +1`.
    pub fn positive(mu: Rational) -> Result<Self> {
        Self::new(1, mu)
    }

    pub fn epsilon(&self) -> i8 {
        self.epsilon
    }

    pub fn mu(&self) -> &Rational {
        &self.mu
    }

    /// `λ = εμ`.
    pub fn lambda(&self) -> Rational {
        self.mu.clone() * i32::from(self.epsilon)
    }

    /// Eigenvalue `−εμ` of the module Casimir.
    pub fn casimir_value(&self) -> Rational {
        -self.lambda()
    }
}

impl fmt::Display for ModuleParams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(eps={:+}, mu={})", self.epsilon, self.mu)
    }
}

/// Three modules with `ε = +1` and the given `μ`.
pub fn positive_triple(mus: &[Rational; 3]) -> Result<[ModuleParams; 3]> {
    Ok([
        ModuleParams::positive(mus[0].clone())?,
        ModuleParams::positive(mus[1].clone())?,
        ModuleParams::positive(mus[2].clone())?,
    ])
}

/// `[n]_μ = n + μ(1 − (−1)ⁿ)`.
pub fn mu_number(n: usize, mu: &Rational) -> Rational {
    let base = Rational::from(n as u64);
    if n.is_multiple_of(2) {
        base
    } else {
        base + mu.clone() * 2u32
    }
}

/// Generator matrices on the first `cutoff` basis vectors of one module.
#[derive(Clone, Debug)]
pub struct Generators {
    pub j0: DenseMatrix<Float>,
    pub jp: DenseMatrix<Float>,
    pub jm: DenseMatrix<Float>,
    pub r: DenseMatrix<Float>,
}

impl Generators {
    /// `J₊J₋R − J₀R + R/2`.
    pub fn casimir(&self) -> DenseMatrix<Float> {
        let half = Float::with_val(self.r[(0, 0)].prec(), 0.5);
        self.jp
            .mul(&self.jm)
            .mul(&self.r)
            .sub(&self.j0.mul(&self.r))
            .add(&self.r.scale(&half))
    }
}

/// `J₊` is cut off at the last row, so relations hold only on the leading
/// `cutoff − 1` block.
pub fn build_generators(p: &ModuleParams, cutoff: usize, precision: Precision) -> Result<Generators> {
    if cutoff == 0 {
        return Err(Error::InvalidArgument("cutoff must be at least 1".into()));
    }
    let bits = precision.bits();
    let zero = Float::new(bits);
    let mut j0 = DenseMatrix::zeros_like(cutoff, cutoff, &zero);
    let mut jp = j0.clone();
    let mut jm = j0.clone();
    let mut r = j0.clone();
    for n in 0..cutoff {
        let weight = Rational::from(n as u64) + &p.mu + Rational::from((1, 2));
        j0[(n, n)] = Float::with_val(bits, &weight);
        r[(n, n)] = Float::with_val(bits, i64::from(p.epsilon) * parity_sign(n));
        if n + 1 < cutoff {
            let root = Float::with_val(bits, &mu_number(n + 1, &p.mu)).sqrt();
            jp[(n + 1, n)] = root.clone();
            jm[(n, n + 1)] = root;
        }
    }
    Ok(Generators { j0, jp, jm, r })
}

/// Generator of one tensor factor, indexed from zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Letter {
    Raise(usize),
    Lower(usize),
    Reflect(usize),
    Weight(usize),
}

impl Letter {
    fn mode(self) -> usize {
        match self {
            Letter::Raise(i) | Letter::Lower(i) | Letter::Reflect(i) | Letter::Weight(i) => i,
        }
    }
}

/// Rational combination of words in the generators. A word is written left
/// to right as an operator product, so its last letter acts first.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct OpExpr {
    terms: BTreeMap<Vec<Letter>, Rational>,
}

impl OpExpr {
    pub fn zero() -> Self {
        OpExpr::default()
    }

    pub fn scalar(c: Rational) -> Self {
        let mut e = OpExpr::zero();
        e.insert(Vec::new(), c);
        e
    }

    pub fn identity() -> Self {
        Self::scalar(Rational::from(1))
    }

    pub fn letter(l: Letter) -> Self {
        let mut e = OpExpr::zero();
        e.insert(vec![l], Rational::from(1));
        e
    }

    pub fn raise(i: usize) -> Self {
        Self::letter(Letter::Raise(i))
    }

    pub fn lower(i: usize) -> Self {
        Self::letter(Letter::Lower(i))
    }

    pub fn reflect(i: usize) -> Self {
        Self::letter(Letter::Reflect(i))
    }

    pub fn weight(i: usize) -> Self {
        Self::letter(Letter::Weight(i))
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[Letter], &Rational)> {
        self.terms.iter().map(|(w, c)| (w.as_slice(), c))
    }

    /// Number of tensor factors the expression touches.
    pub fn modes(&self) -> usize {
        self.terms.keys().flatten().map(|l| l.mode() + 1).max().unwrap_or(0)
    }

    pub fn scale(&self, c: &Rational) -> Self {
        let mut out = OpExpr::zero();
        for (w, x) in &self.terms {
            out.insert(w.clone(), x.clone() * c);
        }
        out
    }

    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn anticommutator(&self, other: &Self) -> Self {
        &(self * other) + &(other * self)
    }

    fn insert(&mut self, word: Vec<Letter>, c: Rational) {
        if c.cmp0().is_eq() {
            return;
        }
        let cancelled = {
            let entry = self.terms.entry(word.clone()).or_default();
            *entry += c;
            entry.cmp0().is_eq()
        };
        if cancelled {
            self.terms.remove(&word);
        }
    }
}

impl Add for &OpExpr {
    type Output = OpExpr;

    fn add(self, rhs: &OpExpr) -> OpExpr {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.insert(w.clone(), c.clone());
        }
        out
    }
}

impl Sub for &OpExpr {
    type Output = OpExpr;

    fn sub(self, rhs: &OpExpr) -> OpExpr {
        let mut out = self.clone();
        for (w, c) in &rhs.terms {
            out.insert(w.clone(), -c.clone());
        }
        out
    }
}

impl Mul for &OpExpr {
    type Output = OpExpr;

    fn mul(self, rhs: &OpExpr) -> OpExpr {
        let mut out = OpExpr::zero();
        for (wl, cl) in &self.terms {
            for (wr, cr) in &rhs.terms {
                let mut w = wl.clone();
                w.extend_from_slice(wr);
                out.insert(w, cl.clone() * cr);
            }
        }
        out
    }
}

impl Neg for &OpExpr {
    type Output = OpExpr;

    fn neg(self) -> OpExpr {
        self.scale(&Rational::from(-1))
    }
}

macro_rules! owned_ops {
    ($($tr:ident $method:ident),*) => {$(
        impl $tr for OpExpr {
            type Output = OpExpr;
            fn $method(self, rhs: OpExpr) -> OpExpr {
                (&self).$method(&rhs)
            }
        }
        impl $tr<&OpExpr> for OpExpr {
            type Output = OpExpr;
            fn $method(self, rhs: &OpExpr) -> OpExpr {
                (&self).$method(rhs)
            }
        }
    )*};
}

owned_ops!(Add add, Sub sub, Mul mul);

/// The four generators of an sl₋₁(2) realization, possibly built from
/// several tensor factors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SlGenerators {
    pub j0: OpExpr,
    pub jp: OpExpr,
    pub jm: OpExpr,
    pub r: OpExpr,
}

impl SlGenerators {
    pub fn mode(i: usize) -> Self {
        SlGenerators {
            j0: OpExpr::weight(i),
            jp: OpExpr::raise(i),
            jm: OpExpr::lower(i),
            r: OpExpr::reflect(i),
        }
    }

    /// Addition rule: `J₀ = J₀ᵃ + J₀ᵇ`, `J± = J±ᵃRᵇ + J±ᵇ`, `R = RᵃRᵇ`.
    pub fn coproduct(a: &Self, b: &Self) -> Self {
        SlGenerators {
            j0: &a.j0 + &b.j0,
            jp: &(&a.jp * &b.r) + &b.jp,
            jm: &(&a.jm * &b.r) + &b.jm,
            r: &a.r * &b.r,
        }
    }

    /// Twisted rule `J± = J±ᵃRᵇ + J±ᵇ R'`, with `R'` the reflection of a
    /// factor outside the pair. `J₀` and `R` are as in [`Self::coproduct`].
    pub fn twisted(a: &Self, b: &Self, outside: &OpExpr) -> Self {
        SlGenerators {
            j0: &a.j0 + &b.j0,
            jp: &(&a.jp * &b.r) + &(&b.jp * outside),
            jm: &(&a.jm * &b.r) + &(&b.jm * outside),
            r: &a.r * &b.r,
        }
    }

    /// `J₊J₋R − J₀R + R/2`.
    pub fn casimir(&self) -> OpExpr {
        let jpjm = &self.jp * &self.jm;
        &(&(&jpjm * &self.r) - &(&self.j0 * &self.r)) + &self.r.scale(&Rational::from((1, 2)))
    }

    /// Residual expressions of the defining relations; all vanish on a
    /// faithful realization.
    pub fn relation_residuals(&self) -> Vec<(&'static str, OpExpr)> {
        let two = Rational::from(2);
        vec![
            ("[J0,J+] - J+", &self.j0.commutator(&self.jp) - &self.jp),
            ("[J0,J-] + J-", &self.j0.commutator(&self.jm) + &self.jm),
            ("{J+,R}", self.jp.anticommutator(&self.r)),
            ("{J-,R}", self.jm.anticommutator(&self.r)),
            ("[J0,R]", self.j0.commutator(&self.r)),
            (
                "{J+,J-} - 2J0",
                &self.jp.anticommutator(&self.jm) - &self.j0.scale(&two),
            ),
            ("R^2 - 1", &(&self.r * &self.r) - &OpExpr::identity()),
        ]
    }
}

/// Occupation numbers `(n₁, ..., n_k)`.
pub type State = Vec<usize>;

/// All states with `n₁ + ... + n_k = level`, in ascending lexicographic
/// order (`n₁` most significant).
pub fn level_basis(modes: usize, level: usize) -> Vec<State> {
    fn fill(prefix: &mut State, modes: usize, left: usize, out: &mut Vec<State>) {
        if prefix.len() + 1 == modes {
            let mut s = prefix.clone();
            s.push(left);
            out.push(s);
            return;
        }
        for n in 0..=left {
            prefix.push(n);
            fill(prefix, modes, left - n, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes == 0 {
        if level == 0 {
            out.push(Vec::new());
        }
        return out;
    }
    fill(&mut Vec::new(), modes, level, &mut out);
    out
}

/// Action of one word: `word |state⟩ = c √s |state'⟩`, or `None` when the
/// result vanishes.
fn apply_word(word: &[Letter], params: &[ModuleParams], state: &[usize]) -> Option<(Rational, Rational, State)> {
    let mut st = state.to_vec();
    let mut coeff = Rational::from(1);
    let mut radicand = Rational::from(1);
    for letter in word.iter().rev() {
        match *letter {
            Letter::Raise(i) => {
                st[i] += 1;
                radicand *= mu_number(st[i], &params[i].mu);
            }
            Letter::Lower(i) => {
                if st[i] == 0 {
                    return None;
                }
                radicand *= mu_number(st[i], &params[i].mu);
                st[i] -= 1;
            }
            Letter::Reflect(i) => {
                if i64::from(params[i].epsilon) * parity_sign(st[i]) < 0 {
                    coeff = -coeff;
                }
            }
            Letter::Weight(i) => {
                coeff *= Rational::from(st[i] as u64) + &params[i].mu + Rational::from((1, 2));
            }
        }
        if radicand.cmp0().is_eq() || coeff.cmp0().is_eq() {
            return None;
        }
    }
    Some((coeff, radicand, st))
}

fn check_modes(expr: &OpExpr, params: &[ModuleParams]) -> Result<()> {
    if expr.modes() > params.len() {
        return Err(Error::InvalidArgument(format!(
            "operator acts on {} factors but {} modules were given",
            expr.modes(),
            params.len()
        )));
    }
    Ok(())
}

/// `expr |state⟩` as a sparse vector. Terms with equal radicands are
/// combined exactly before the square roots are taken.
pub fn apply(expr: &OpExpr, params: &[ModuleParams], state: &[usize], bits: u32) -> Result<BTreeMap<State, Float>> {
    check_modes(expr, params)?;
    let mut exact: BTreeMap<State, BTreeMap<Rational, Rational>> = BTreeMap::new();
    for (word, c) in expr.terms() {
        if let Some((coeff, radicand, target)) = apply_word(word, params, state) {
            *exact.entry(target).or_default().entry(radicand).or_default() += coeff * c;
        }
    }
    let mut out = BTreeMap::new();
    for (target, by_root) in exact {
        let mut value = Float::new(bits);
        for (radicand, coeff) in by_root {
            if coeff.cmp0().is_eq() {
                continue;
            }
            value += Float::with_val(bits, &radicand).sqrt() * &coeff;
        }
        if !value.is_zero() {
            out.insert(target, value);
        }
    }
    Ok(out)
}

/// Largest coefficient of `expr |n⟩` over all states of total level at most
/// `max_level`. Zero for an operator identity that holds exactly.
pub fn max_residual(expr: &OpExpr, params: &[ModuleParams], max_level: usize, bits: u32) -> Result<Float> {
    let mut worst = Float::new(bits);
    for level in 0..=max_level {
        for state in level_basis(params.len(), level) {
            for (_, v) in apply(expr, params, &state, bits)? {
                let v = v.abs();
                if v > worst {
                    worst = v;
                }
            }
        }
    }
    Ok(worst)
}

/// Matrix of a level-preserving operator on the level-`m` states of
/// `params.len()` factors, in [`level_basis`] order.
pub fn level_matrix(
    expr: &OpExpr,
    params: &[ModuleParams],
    m: usize,
    precision: Precision,
) -> Result<DenseMatrix<Float>> {
    let bits = precision.bits();
    let basis = level_basis(params.len(), m);
    let index: HashMap<&State, usize> = basis.iter().enumerate().map(|(i, s)| (s, i)).collect();
    let mut out = DenseMatrix::zeros_like(basis.len(), basis.len(), &Float::new(bits));
    for (j, state) in basis.iter().enumerate() {
        for (target, value) in apply(expr, params, state, bits)? {
            let i = *index.get(&target).ok_or(Error::LevelNotPreserved { level: m })?;
            out[(i, j)] = value;
        }
    }
    Ok(out)
}

fn pair_casimir(i: usize, j: usize, qi: &Rational, qj: &Rational) -> OpExpr {
    let ladder = &(&OpExpr::lower(i) * &OpExpr::raise(j)) - &(&OpExpr::raise(i) * &OpExpr::lower(j));
    let ri = OpExpr::reflect(i);
    let rj = OpExpr::reflect(j);
    let mut e = &ladder * &ri;
    e = e - (&ri * &rj).scale(&Rational::from((1, 2)));
    e = e + rj.scale(qi);
    e + ri.scale(qj)
}

/// `K₁ = 𝒬₁₂ = (J₋¹J₊² − J₊¹J₋²)R¹ − R¹R²/2 + Q₁R² + Q₂R¹`, with the module
/// Casimirs `Q_i` replaced by their values.
pub fn k1_expr(p: &[ModuleParams; 3]) -> OpExpr {
    pair_casimir(0, 1, &p[0].casimir_value(), &p[1].casimir_value())
}

/// `K₂ = 𝒬₂₃`, the same form on factors 2 and 3.
pub fn k2_expr(p: &[ModuleParams; 3]) -> OpExpr {
    pair_casimir(1, 2, &p[1].casimir_value(), &p[2].casimir_value())
}

/// `K₃ = (J₊¹J₋³ − J₋¹J₊³)R¹R² + R¹R³/2 − Q₁R³ − Q₃R¹`.
pub fn k3_expr(p: &[ModuleParams; 3]) -> OpExpr {
    let ladder = &(&OpExpr::raise(0) * &OpExpr::lower(2)) - &(&OpExpr::lower(0) * &OpExpr::raise(2));
    let r1 = OpExpr::reflect(0);
    let r2 = OpExpr::reflect(1);
    let r3 = OpExpr::reflect(2);
    let mut e = &(&ladder * &r1) * &r2;
    e = e + (&r1 * &r3).scale(&Rational::from((1, 2)));
    e = e - r3.scale(&p[0].casimir_value());
    e - r1.scale(&p[2].casimir_value())
}

/// `𝒬₄ = (J₋¹J₊³ − J₊¹J₋³)R¹ − Q₂R¹R³ + K₁R³ + K₂R¹`.
pub fn q4_expr(p: &[ModuleParams; 3]) -> OpExpr {
    let ladder = &(&OpExpr::lower(0) * &OpExpr::raise(2)) - &(&OpExpr::raise(0) * &OpExpr::lower(2));
    let r1 = OpExpr::reflect(0);
    let r3 = OpExpr::reflect(2);
    let mut e = &ladder * &r1;
    e = e - (&r1 * &r3).scale(&p[1].casimir_value());
    e = e + &k1_expr(p) * &r3;
    e + &k2_expr(p) * &r1
}

/// Total Casimir from the iterated addition rule on `(1 ⊕ 2) ⊕ 3`.
pub fn q4_coproduct_expr() -> OpExpr {
    let g12 = SlGenerators::coproduct(&SlGenerators::mode(0), &SlGenerators::mode(1));
    SlGenerators::coproduct(&g12, &SlGenerators::mode(2)).casimir()
}

/// Generators of the (3,1) pair under the twisted rule
/// `J± = J±¹R³ + J±³R²`, `R = R¹R³`.
pub fn twisted_31() -> SlGenerators {
    SlGenerators::twisted(&SlGenerators::mode(0), &SlGenerators::mode(2), &OpExpr::reflect(1))
}

/// Casimir `𝒬̃₃₁` of the twisted (3,1) pair.
pub fn twisted_31_expr() -> OpExpr {
    twisted_31().casimir()
}

/// Total generators rebuilt from the twisted pair:
/// `J± = J±⁽³¹⁾R² + J±²R³`, `R = R⁽³¹⁾R²`.
pub fn total_from_twisted() -> SlGenerators {
    SlGenerators::twisted(&twisted_31(), &SlGenerators::mode(1), &OpExpr::reflect(2))
}

/// Intermediate and total Casimir operators on the level-`m` subspace.
#[derive(Clone, Debug)]
pub struct CasimirMatrices {
    pub level: usize,
    pub basis: Vec<State>,
    pub k1: DenseMatrix<Float>,
    pub k2: DenseMatrix<Float>,
    pub k3: DenseMatrix<Float>,
    pub q4: DenseMatrix<Float>,
}

impl CasimirMatrices {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }
}

pub fn intermediate_casimirs(p: &[ModuleParams; 3], m: usize, precision: Precision) -> Result<CasimirMatrices> {
    Ok(CasimirMatrices {
        level: m,
        basis: level_basis(3, m),
        k1: level_matrix(&k1_expr(p), p, m, precision)?,
        k2: level_matrix(&k2_expr(p), p, m, precision)?,
        k3: level_matrix(&k3_expr(p), p, m, precision)?,
        q4: level_matrix(&q4_coproduct_expr(), p, m, precision)?,
    })
}

/// Max-norm residuals of the operator identities on one level subspace.
#[derive(Clone, Debug)]
pub struct IdentityReport {
    pub level: usize,
    /// `K₁` against the Casimir of the coproduct of factors 1 and 2.
    pub k1_coproduct: Float,
    /// `K₂` against the Casimir of the coproduct of factors 2 and 3.
    pub k2_coproduct: Float,
    /// Explicit `𝒬₄` against the iterated coproduct.
    pub q4_explicit: Float,
    /// `𝒬̃₃₁ + K₃`.
    pub twisted_plus_k3: Float,
    /// Total Casimir from the twisted route against `𝒬₄`.
    pub twisted_total: Float,
    /// `[K_i, 𝒬₄]` for `i = 1, 2, 3`.
    pub central: [Float; 3],
    /// `[K₁, K₂]`, expected to be far from zero once `m ≥ 1`.
    pub k1_k2_commutator: Float,
    /// `{K₁, K₂} − K₃ − 2λ₁λ₃ + 2λ₂𝒬₄`.
    pub anticommutator: Float,
}

impl IdentityReport {
    /// Largest residual among the relations that must vanish.
    pub fn worst(&self) -> Float {
        let mut worst = self.k1_coproduct.clone();
        for x in [
            &self.k2_coproduct,
            &self.q4_explicit,
            &self.twisted_plus_k3,
            &self.twisted_total,
            &self.central[0],
            &self.central[1],
            &self.central[2],
            &self.anticommutator,
        ] {
            if *x > worst {
                worst = x.clone();
            }
        }
        worst
    }
}

fn max_abs(m: &DenseMatrix<Float>) -> Float {
    m.max_abs().expect("nonempty matrix")
}

pub fn identity_report(p: &[ModuleParams; 3], m: usize, precision: Precision) -> Result<IdentityReport> {
    let cm = intermediate_casimirs(p, m, precision)?;
    let mat = |e: &OpExpr| level_matrix(e, p, m, precision);
    let k1c = mat(&SlGenerators::coproduct(&SlGenerators::mode(0), &SlGenerators::mode(1)).casimir())?;
    let k2c = mat(&SlGenerators::coproduct(&SlGenerators::mode(1), &SlGenerators::mode(2)).casimir())?;
    let q4e = mat(&q4_expr(p))?;
    let twisted = mat(&twisted_31_expr())?;
    let total = mat(&total_from_twisted().casimir())?;

    let bits = precision.bits();
    let l1l3 = Float::with_val(bits, &(p[0].lambda() * p[2].lambda() * 2u32));
    let l2 = Float::with_val(bits, &(p[1].lambda() * 2u32));
    let anti = cm
        .k1
        .anticommutator(&cm.k2)
        .sub(&cm.k3)
        .shift_diagonal(&-l1l3)
        .add(&cm.q4.scale(&l2));

    Ok(IdentityReport {
        level: m,
        k1_coproduct: max_abs(&cm.k1.sub(&k1c)),
        k2_coproduct: max_abs(&cm.k2.sub(&k2c)),
        q4_explicit: max_abs(&cm.q4.sub(&q4e)),
        twisted_plus_k3: max_abs(&twisted.add(&cm.k3)),
        twisted_total: max_abs(&total.sub(&cm.q4)),
        central: [
            max_abs(&cm.k1.commutator(&cm.q4)),
            max_abs(&cm.k2.commutator(&cm.q4)),
            max_abs(&cm.k3.commutator(&cm.q4)),
        ],
        k1_k2_commutator: max_abs(&cm.k1.commutator(&cm.k2)),
        anticommutator: max_abs(&anti),
    })
}

/// `𝒬̃₃₁` on the level-`m` subspace; fails unless `‖𝒬̃₃₁ + K₃‖ < tol`.
pub fn twisted_casimir(
    p: &[ModuleParams; 3],
    m: usize,
    precision: Precision,
    tol: &Tolerance,
) -> Result<DenseMatrix<Float>> {
    let twisted = level_matrix(&twisted_31_expr(), p, m, precision)?;
    let k3 = level_matrix(&k3_expr(p), p, m, precision)?;
    let residual = max_abs(&twisted.add(&k3));
    if !tol.accepts(&residual) {
        return Err(Error::IdentityViolation {
            identity: "Q31 = -K3",
            residual: encode_real(&residual),
        });
    }
    Ok(twisted)
}

/// `ε₄ = (−1)^N ε₁ε₂ε₃`, the eigenvalue of the total reflection on level `N`.
pub fn total_epsilon(p: &[ModuleParams; 3], n: usize) -> i64 {
    parity_sign(n) * p.iter().map(|x| i64::from(x.epsilon)).product::<i64>()
}

/// `μ₄ = μ₁ + μ₂ + μ₃ + N + 1`.
pub fn total_mu(p: &[ModuleParams; 3], n: usize) -> Rational {
    p.iter().fold(Rational::from(n as u64 + 1), |acc, x| acc + &x.mu)
}

/// Target eigenvalue `q₄ = −ε₄μ₄` of the total Casimir.
pub fn target_q4(p: &[ModuleParams; 3], n: usize) -> Rational {
    total_mu(p, n) * (-total_epsilon(p, n))
}

/// Assigns each eigenvalue its label `s` under
/// `value = sign (−1)^{s+1} (base + s)`, `0 ≤ s ≤ max_s`.
pub(crate) fn label_spectrum(
    values: &[Float],
    base: &Rational,
    sign: i64,
    max_s: usize,
    tol: &Tolerance,
) -> Result<Vec<usize>> {
    let mut labels = Vec::with_capacity(values.len());
    let mut seen = vec![false; max_s + 1];
    for v in values {
        let bits = v.prec();
        let base_f = Float::with_val(bits, base);
        let shifted = (v.clone().abs() - &base_f).round();
        let s = shifted.to_f64();
        let mismatch = |detail: String| Error::SpectrumMismatch {
            eigenvalue: encode_real(v),
            detail,
        };
        if !(0.0..=max_s as f64).contains(&s) {
            return Err(mismatch(format!("no label s in 0..={max_s}")));
        }
        let s = s as usize;
        let expected = (base_f + s as u64) * (sign * -parity_sign(s));
        let dev = expected - v;
        if !tol.accepts(&dev) {
            return Err(mismatch(format!(
                "nearest label s={s} is off by {}",
                encode_real(&dev.abs())
            )));
        }
        if seen[s] {
            return Err(mismatch(format!("label s={s} appears twice")));
        }
        seen[s] = true;
        labels.push(s);
    }
    Ok(labels)
}

fn smallest_gap(values: &[Float]) -> Option<Float> {
    let mut best: Option<Float> = None;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            let g = (values[i].clone() - &values[j]).abs();
            if best.as_ref().is_none_or(|b| g < *b) {
                best = Some(g);
            }
        }
    }
    best
}

/// Orthonormal basis of the `q₄` eigenspace as columns.
fn q4_eigenspace(
    cm: &CasimirMatrices,
    q4: &Rational,
    expected_dim: usize,
    tol: &Tolerance,
) -> Result<DenseMatrix<Float>> {
    let eig = symmetric_eigen(&cm.q4)?;
    let bits = eig.values[0].prec();
    let target = Float::with_val(bits, q4);
    let select = tol.sqrt();
    let cols: Vec<usize> = (0..eig.values.len())
        .filter(|&j| select.accepts(&(eig.values[j].clone() - &target)))
        .collect();
    if cols.len() != expected_dim {
        return Err(Error::DimensionMismatch {
            expected: expected_dim,
            found: cols.len(),
        });
    }
    let mut vs = DenseMatrix::zeros_like(cm.dimension(), cols.len(), &Float::new(bits));
    for (k, &j) in cols.iter().enumerate() {
        for i in 0..cm.dimension() {
            vs[(i, k)] = eig.vectors[(i, j)].clone();
        }
    }
    Ok(vs)
}

/// Eigen-decomposition of `Vᵀ K V`, lifted back to the level basis.
fn restricted_eigen(k: &DenseMatrix<Float>, vs: &DenseMatrix<Float>) -> Result<(Vec<Float>, DenseMatrix<Float>)> {
    let projected = vs.transpose().mul(k).mul(vs);
    let eig = symmetric_eigen(&projected)?;
    Ok((eig.values, vs.mul(&eig.vectors)))
}

/// Column `j` of `full`, with its sign fixed so that the first component
/// above `threshold` is positive.
fn phased_column(full: &DenseMatrix<Float>, j: usize, threshold: &Tolerance) -> Vec<Float> {
    let mut v = full.column(j);
    if let Some(first) = v.iter().find(|x| !threshold.accepts(x)) {
        if first.is_sign_negative() {
            for x in &mut v {
                *x = -x.clone();
            }
        }
    }
    v
}

/// Eigenvectors of `k` inside the eigenspace, ordered by label `s`.
fn labelled_basis(
    k: &DenseMatrix<Float>,
    vs: &DenseMatrix<Float>,
    base: &Rational,
    sign: i64,
    n: usize,
    tol: &Tolerance,
) -> Result<(Vec<Float>, Vec<Vec<Float>>)> {
    let (values, full) = restricted_eigen(k, vs)?;
    if let Some(gap) = smallest_gap(&values) {
        if gap.partial_cmp(tol.scaled(1000).eps()) != Some(std::cmp::Ordering::Greater) {
            return Err(Error::DegenerateSpectrum { gap: encode_real(&gap) });
        }
    }
    let labels = label_spectrum(&values, base, sign, n, tol)?;
    let threshold = tol.sqrt();
    let mut ordered_values = vec![Float::new(1); n + 1];
    let mut ordered = vec![Vec::new(); n + 1];
    for (j, &s) in labels.iter().enumerate() {
        ordered_values[s] = values[j].clone();
        ordered[s] = phased_column(&full, j, &threshold);
    }
    Ok((ordered_values, ordered))
}

/// Overlaps `⟨q₁₂ | q₂₃⟩` computed by direct diagonalization.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRacah {
    pub degree: usize,
    pub params: [ModuleParams; 3],
    pub q4: Rational,
    /// `K₁` eigenvalues in label order `s₁₂ = 0..=N`.
    pub k1_spectrum: Vec<Float>,
    /// `K₂` eigenvalues in label order `s₂₃ = 0..=N`.
    pub k2_spectrum: Vec<Float>,
    /// `overlaps[(s₁₂, s₂₃)]`.
    pub overlaps: DenseMatrix<Float>,
    /// `max |RᵀR − I|`.
    pub unitarity: Float,
    /// Precision of the reported values.
    pub precision: Precision,
    /// Number of precision doublings that were needed.
    pub retries: usize,
}

fn orthogonality_defect(r: &DenseMatrix<Float>) -> Float {
    let proto = r[(0, 0)].clone();
    let gram = r.transpose().mul(r);
    max_abs(&gram.sub(&DenseMatrix::identity_like(r.rows(), &proto)))
}

fn oracle_once(p: &[ModuleParams; 3], n: usize, precision: Precision) -> Result<OracleRacah> {
    let tol = precision.tolerance();
    let cm = intermediate_casimirs(p, n, precision)?;
    let q4 = target_q4(p, n);
    let vs = q4_eigenspace(&cm, &q4, n + 1, &tol)?;
    let half = Rational::from((1, 2));
    let base12 = p[0].mu.clone() + &p[1].mu + &half;
    let base23 = p[1].mu.clone() + &p[2].mu + &half;
    let sign12 = i64::from(p[0].epsilon * p[1].epsilon);
    let sign23 = i64::from(p[1].epsilon * p[2].epsilon);
    let (k1_spectrum, left) = labelled_basis(&cm.k1, &vs, &base12, sign12, n, &tol)?;
    let (k2_spectrum, right) = labelled_basis(&cm.k2, &vs, &base23, sign23, n, &tol)?;

    let bits = precision.bits();
    let mut overlaps = DenseMatrix::zeros_like(n + 1, n + 1, &Float::new(bits));
    for (a, u) in left.iter().enumerate() {
        for (b, v) in right.iter().enumerate() {
            let mut dot = Float::new(bits);
            for (x, y) in u.iter().zip(v) {
                dot += x.clone() * y;
            }
            overlaps[(a, b)] = dot;
        }
    }
    let unitarity = orthogonality_defect(&overlaps);
    Ok(OracleRacah {
        degree: n,
        params: p.clone(),
        q4,
        k1_spectrum,
        k2_spectrum,
        overlaps,
        unitarity,
        precision,
        retries: 0,
    })
}

/// Brute-force Racah overlaps at level `N`.
///
/// Each run is repeated at twice the precision and the two must agree to
/// the working tolerance. A degenerate, unconverged or inconsistent run is
/// retried with the precision doubled, at most [`MAX_RETRIES`] times.
pub fn oracle_racah(p: &[ModuleParams; 3], n: usize, precision: Precision) -> Result<OracleRacah> {
    let mut prec = precision;
    let mut last = None;
    for attempt in 0..=MAX_RETRIES {
        let run = oracle_once(p, n, prec).and_then(|lo| {
            let hi = oracle_once(p, n, prec.doubled())?;
            let diff = max_abs(&lo.overlaps.sub(&to_bits(&hi.overlaps, prec.bits())));
            if prec.tolerance().accepts(&diff) {
                Ok(lo)
            } else {
                Err(Error::PrecisionLoss {
                    deviation: encode_real(&diff),
                })
            }
        });
        match run {
            Ok(mut result) => {
                result.retries = attempt;
                return Ok(result);
            }
            Err(e @ (Error::DegenerateSpectrum { .. } | Error::PrecisionLoss { .. } | Error::NoConvergence { .. })) => {
                last = Some(e);
                prec = prec.doubled();
            }
            Err(e) => return Err(e),
        }
    }
    Err(match last {
        Some(Error::PrecisionLoss { deviation }) => Error::PrecisionLoss { deviation },
        Some(other) => Error::PrecisionLoss {
            deviation: other.to_string(),
        },
        None => unreachable!("loop runs at least once"),
    })
}

fn to_bits(m: &DenseMatrix<Float>, bits: u32) -> DenseMatrix<Float> {
    DenseMatrix::from_rows(
        m.to_rows()
            .into_iter()
            .map(|row| row.into_iter().map(|x| Float::with_val(bits, x)).collect())
            .collect(),
    )
}

/// Runs independent oracle cases in parallel; results keep the input order.
pub fn oracle_sweep(cases: &[([ModuleParams; 3], usize)], precision: Precision) -> Vec<Result<OracleRacah>> {
    cases.par_iter().map(|(p, n)| oracle_racah(p, *n, precision)).collect()
}

#[derive(Serialize, Deserialize)]
struct OracleWire {
    #[serde(rename = "N")]
    degree: usize,
    params: [ModuleParams; 3],
    #[serde(with = "pq")]
    q4: Rational,
    precision_digits: u32,
    precision_bits: u32,
    retries: usize,
    k1_spectrum: Vec<String>,
    k2_spectrum: Vec<String>,
    overlaps: Vec<Vec<String>>,
    unitarity: String,
}

impl Serialize for OracleRacah {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        OracleWire {
            degree: self.degree,
            params: self.params.clone(),
            q4: self.q4.clone(),
            precision_digits: self.precision.digits(),
            precision_bits: self.precision.bits(),
            retries: self.retries,
            k1_spectrum: encode_reals(&self.k1_spectrum),
            k2_spectrum: encode_reals(&self.k2_spectrum),
            overlaps: self.overlaps.to_rows().iter().map(|r| encode_reals(r)).collect(),
            unitarity: encode_real(&self.unitarity),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for OracleRacah {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let w = OracleWire::deserialize(d)?;
        let precision = Precision::new(w.precision_digits).map_err(D::Error::custom)?;
        let bits = w.precision_bits;
        let rows = w
            .overlaps
            .iter()
            .map(|r| decode_reals(r, bits))
            .collect::<Result<Vec<_>>>()
            .map_err(D::Error::custom)?;
        let size = w.degree + 1;
        if rows.len() != size || rows.iter().any(|r| r.len() != size) {
            return Err(D::Error::custom("overlap matrix has the wrong shape"));
        }
        Ok(OracleRacah {
            degree: w.degree,
            params: w.params,
            q4: w.q4,
            k1_spectrum: decode_reals(&w.k1_spectrum, bits).map_err(D::Error::custom)?,
            k2_spectrum: decode_reals(&w.k2_spectrum, bits).map_err(D::Error::custom)?,
            overlaps: DenseMatrix::from_rows(rows),
            unitarity: parse_real(&w.unitarity, bits).map_err(D::Error::custom)?,
            precision,
            retries: w.retries,
        })
    }
}

/// Spectrum of the coupled Casimir `𝒬₁₂` on one two-factor level.
#[derive(Clone, Debug)]
pub struct CgLevel {
    pub level: usize,
    /// Eigenvalues in label order `s = 0..=level`.
    pub eigenvalues: Vec<Float>,
    /// Largest deviation from `(−1)^{s+1}ε₁ε₂(μ₁+μ₂+½+s)`.
    pub deviation: Float,
    /// Eigenvalue of `R¹R²` on the level.
    pub reflection: i64,
}

#[derive(Clone, Debug)]
pub struct CgReport {
    pub levels: Vec<CgLevel>,
}

impl CgReport {
    pub fn max_deviation(&self) -> Float {
        self.levels
            .iter()
            .map(|l| l.deviation.clone())
            .reduce(|a, b| if b > a { b } else { a })
            .expect("at least one level")
    }
}

/// Diagonalizes `𝒬₁₂` of the coproduct on every level `N ≤ nmax` and checks
/// its spectrum and the value of `R¹R²`.
pub fn cg_spectrum_check(p1: &ModuleParams, p2: &ModuleParams, nmax: usize, precision: Precision) -> Result<CgReport> {
    let params = [p1.clone(), p2.clone()];
    let g = SlGenerators::coproduct(&SlGenerators::mode(0), &SlGenerators::mode(1));
    let casimir = g.casimir();
    let tol = precision.tolerance();
    let base = p1.mu.clone() + &p2.mu + Rational::from((1, 2));
    let sign = i64::from(p1.epsilon * p2.epsilon);
    let mut levels = Vec::with_capacity(nmax + 1);
    for level in 0..=nmax {
        let q12 = level_matrix(&casimir, &params, level, precision)?;
        let eig = symmetric_eigen(&q12)?;
        let labels = label_spectrum(&eig.values, &base, sign, level, &tol)?;
        let bits = precision.bits();
        let mut ordered = vec![Float::new(bits); level + 1];
        let mut deviation = Float::new(bits);
        for (v, &s) in eig.values.iter().zip(&labels) {
            let expected = (Float::with_val(bits, &base) + s as u64) * (sign * -parity_sign(s));
            let dev = (expected - v).abs();
            if dev > deviation {
                deviation = dev;
            }
            ordered[s] = v.clone();
        }

        let reflection = sign * parity_sign(level);
        let r = level_matrix(&g.r, &params, level, precision)?;
        let want = DenseMatrix::identity_like(level + 1, &Float::new(bits)).scale(&Float::with_val(bits, reflection));
        let r_dev = max_abs(&r.sub(&want));
        if !r_dev.is_zero() {
            return Err(Error::SpectrumMismatch {
                eigenvalue: reflection.to_string(),
                detail: format!("R1R2 on level {level} is not {reflection} times the identity"),
            });
        }
        levels.push(CgLevel {
            level,
            eigenvalues: ordered,
            deviation,
            reflection,
        });
    }
    Ok(CgReport { levels })
}

/// Spectrum of `K₃ = −𝒬̃₃₁` on the `q₄` eigenspace at level `N`.
#[derive(Clone, Debug)]
pub struct TwistedSpectrum {
    /// Eigenvalues ordered by absolute value.
    pub values: Vec<Float>,
    /// `+1` if the values are `(−1)^i ε₁ε₃(μ₁+μ₃+½+i)`, `−1` if they are the
    /// negatives of those.
    pub sign: i64,
    pub deviation: Float,
}

/// Both global signs of the expected pattern are accepted; the one observed
/// is reported.
pub fn twisted_spectrum(p: &[ModuleParams; 3], n: usize, precision: Precision) -> Result<TwistedSpectrum> {
    let tol = precision.tolerance();
    let cm = intermediate_casimirs(p, n, precision)?;
    let vs = q4_eigenspace(&cm, &target_q4(p, n), n + 1, &tol)?;
    let twisted = level_matrix(&twisted_31_expr(), p, n, precision)?;
    let (mut values, _) = restricted_eigen(&twisted.scale(&Float::with_val(precision.bits(), -1)), &vs)?;
    values.sort_by(|a, b| a.clone().abs().partial_cmp(&b.clone().abs()).expect("finite"));

    let bits = precision.bits();
    let base = Float::with_val(bits, &(p[0].mu.clone() + &p[2].mu + Rational::from((1, 2))));
    let pattern = i64::from(p[0].epsilon * p[2].epsilon);
    let deviation_for = |sign: i64| {
        values
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let expected = (base.clone() + i as u64) * (sign * pattern * parity_sign(i));
                (expected - v).abs()
            })
            .reduce(|a, b| if b > a { b } else { a })
            .expect("nonempty spectrum")
    };
    let plus = deviation_for(1);
    let minus = deviation_for(-1);
    let (sign, deviation) = if plus <= minus { (1, plus) } else { (-1, minus) };
    if !tol.accepts(&deviation) {
        return Err(Error::SpectrumMismatch {
            eigenvalue: encode_real(&values[0]),
            detail: format!(
                "K3 spectrum misses the alternating pattern by {}",
                encode_real(&deviation)
            ),
        });
    }
    Ok(TwistedSpectrum {
        values,
        sign,
        deviation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64, d: i64) -> Rational {
        Rational::from((n, d))
    }

    fn triple(a: Rational, b: Rational, c: Rational) -> [ModuleParams; 3] {
        positive_triple(&[a, b, c]).unwrap()
    }

    fn prec() -> Precision {
        Precision::default()
    }

    #[test]
    fn mu_numbers() {
        assert_eq!(mu_number(0, &q(7, 3)), 0);
        assert_eq!(mu_number(2, &q(7, 3)), 2);
        assert_eq!(mu_number(1, &q(3, 2)), 4);
    }

    #[test]
    fn module_params_are_validated() {
        assert!(ModuleParams::new(0, q(1, 2)).is_err());
        assert!(ModuleParams::new(1, q(-1, 2)).is_err());
        let p = ModuleParams::new(-1, q(3, 2)).unwrap();
        assert_eq!(p.casimir_value(), q(3, 2));
        let text = serde_json::to_string(&p).unwrap();
        assert_eq!(serde_json::from_str::<ModuleParams>(&text).unwrap(), p);
        assert!(serde_json::from_str::<ModuleParams>(r#"{"epsilon":2,"mu":"1/1"}"#).is_err());
    }

    #[test]
    fn truncated_generators_satisfy_relations_off_the_boundary() {
        for (eps, mu) in [(1, q(0, 1)), (1, q(3, 2)), (-1, q(2, 3))] {
            let p = ModuleParams::new(eps, mu.clone()).unwrap();
            let cutoff = 7;
            let g = build_generators(&p, cutoff, prec()).unwrap();
            let tol = prec().tolerance();
            let one = Float::with_val(prec().bits(), 1);
            let block = |m: &DenseMatrix<Float>| -> Float {
                let mut worst = Float::new(prec().bits());
                for i in 0..cutoff - 1 {
                    for j in 0..cutoff - 1 {
                        let v = m[(i, j)].clone().abs();
                        if v > worst {
                            worst = v;
                        }
                    }
                }
                worst
            };
            let ident = DenseMatrix::identity_like(cutoff, &one);
            assert!(g.r.mul(&g.r).sub(&ident).max_abs().unwrap().is_zero());
            let two_j0 = g.j0.scale(&Float::with_val(prec().bits(), 2));
            assert!(tol.accepts(&block(&g.jp.anticommutator(&g.jm).sub(&two_j0))));
            assert!(tol.accepts(&block(&g.j0.commutator(&g.jp).sub(&g.jp))));
            assert!(tol.accepts(&block(&g.jp.anticommutator(&g.r))));
            let casimir = g.casimir().shift_diagonal(&Float::with_val(prec().bits(), &p.lambda()));
            assert!(tol.accepts(&block(&casimir)), "eps={eps} mu={mu}");
            // [J-, J+] = 1 + 2 eps mu R
            let para =
                g.jm.commutator(&g.jp)
                    .sub(&ident)
                    .sub(&g.r.scale(&Float::with_val(prec().bits(), &(mu.clone() * 2u32 * i32::from(eps)))));
            assert!(tol.accepts(&block(&para)));
        }
    }

    #[test]
    fn symbolic_relations_hold_for_single_and_coupled_modules() {
        let params = [
            ModuleParams::new(1, q(1, 3)).unwrap(),
            ModuleParams::new(-1, q(5, 2)).unwrap(),
            ModuleParams::new(1, q(0, 1)).unwrap(),
        ];
        let bits = prec().bits();
        let tol = prec().tolerance();
        let single = SlGenerators::mode(0);
        let pair = SlGenerators::coproduct(&SlGenerators::mode(0), &SlGenerators::mode(1));
        let triple = SlGenerators::coproduct(&pair, &SlGenerators::mode(2));
        for g in [&single, &pair, &triple, &twisted_31(), &total_from_twisted()] {
            for (name, residual) in g.relation_residuals() {
                let r = max_residual(&residual, &params, 4, bits).unwrap();
                assert!(tol.accepts(&r), "{name}: {r}");
            }
        }
        // the module Casimir is the scalar -eps mu
        let q = &single.casimir() - &OpExpr::scalar(params[0].casimir_value());
        assert!(max_residual(&q, &params, 6, bits).unwrap().is_zero());
        // coupled Casimirs are central
        for g in [&pair, &triple] {
            let c = g.casimir();
            for x in [&g.jp, &g.jm, &g.j0, &g.r] {
                let r = max_residual(&c.commutator(x), &params, 3, bits).unwrap();
                assert!(tol.accepts(&r));
            }
        }
    }

    #[test]
    fn level_basis_order_and_size() {
        let b = level_basis(3, 2);
        assert_eq!(b.len(), 6);
        assert_eq!(b[0], vec![0, 0, 2]);
        assert_eq!(b[5], vec![2, 0, 0]);
        let mut sorted = b.clone();
        sorted.sort();
        assert_eq!(sorted, b);
        assert_eq!(level_basis(3, 5).len(), 21);
    }

    #[test]
    fn raising_operator_leaves_the_level() {
        let p = triple(q(1, 2), q(1, 2), q(1, 2));
        assert_eq!(
            level_matrix(&OpExpr::raise(0), &p, 1, prec()),
            Err(Error::LevelNotPreserved { level: 1 })
        );
        assert!(matches!(
            level_matrix(&OpExpr::raise(3), &p, 1, prec()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn level_zero_values() {
        let p = triple(q(1, 2), q(1, 3), q(2, 1));
        let cm = intermediate_casimirs(&p, 0, prec()).unwrap();
        assert_eq!(cm.dimension(), 1);
        let want = -(p[0].mu().clone() + p[1].mu() + q(1, 2));
        assert_eq!(cm.k1[(0, 0)], Float::with_val(prec().bits(), &want));
        let tw = twisted_casimir(&p, 0, prec(), &prec().tolerance()).unwrap();
        assert_eq!(tw[(0, 0)].clone() + &cm.k3[(0, 0)], 0);
    }

    #[test]
    fn operator_identities_on_levels() {
        for mus in [
            [q(1, 2), q(1, 2), q(1, 2)],
            [q(0, 1), q(0, 1), q(0, 1)],
            [q(1, 1), q(1, 2), q(3, 2)],
        ] {
            let p = positive_triple(&mus).unwrap();
            for m in 0..=3 {
                let rep = identity_report(&p, m, prec()).unwrap();
                assert!(prec().tolerance().accepts(&rep.worst()), "{mus:?} m={m}: {rep:?}");
                if m >= 1 {
                    assert!(rep.k1_k2_commutator > 0.1);
                }
                let cm = intermediate_casimirs(&p, m, prec()).unwrap();
                for k in [&cm.k1, &cm.k2, &cm.k3, &cm.q4] {
                    assert!(k.sub(&k.transpose()).max_abs().unwrap().is_zero());
                }
            }
        }
    }

    #[test]
    fn cg_spectrum_small_cases() {
        let zero = ModuleParams::positive(q(0, 1)).unwrap();
        let rep = cg_spectrum_check(&zero, &zero, 2, prec()).unwrap();
        let bits = prec().bits();
        let want = [q(-1, 2), q(3, 2), q(-5, 2)];
        for (v, w) in rep.levels[2].eigenvalues.iter().zip(&want) {
            assert!(prec().tolerance().accepts(&(v.clone() - Float::with_val(bits, w))));
        }
        assert_eq!(rep.levels[1].reflection, -1);

        let a = ModuleParams::new(-1, q(1, 2)).unwrap();
        let b = ModuleParams::new(1, q(1, 1)).unwrap();
        let rep = cg_spectrum_check(&a, &b, 3, prec()).unwrap();
        // N = 0: eps1 eps2 (-1)(mu1 + mu2 + 1/2)
        assert_eq!(rep.levels[0].eigenvalues[0], 2);
        assert_eq!(rep.levels[0].reflection, -1);
    }

    #[test]
    fn oracle_small_tables() {
        let p = triple(q(1, 2), q(1, 2), q(1, 2));
        let r0 = oracle_racah(&p, 0, prec()).unwrap();
        assert_eq!(r0.overlaps[(0, 0)].clone().abs(), 1);

        let r1 = oracle_racah(&p, 1, prec()).unwrap();
        let tol = prec().tolerance();
        assert!(tol.accepts(&r1.unitarity));
        let half = Float::with_val(prec().bits(), 0.5);
        let root = Float::with_val(prec().bits(), 3).sqrt() / 2u32;
        for (i, j, want) in [(0, 0, &half), (0, 1, &root), (1, 0, &root), (1, 1, &half)] {
            let got = r1.overlaps[(i, j)].clone().abs();
            assert!(tol.accepts(&(got - want)), "entry ({i},{j})");
        }
        assert_eq!(r1.retries, 0);
    }

    #[test]
    fn oracle_json_round_trip() {
        let p = triple(q(1, 1), q(1, 2), q(3, 2));
        let r = oracle_racah(&p, 2, prec()).unwrap();
        let text = serde_json::to_string(&r).unwrap();
        let back: OracleRacah = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn twisted_identity_and_k3_spectrum() {
        let p = triple(q(1, 2), q(1, 1), q(3, 2));
        let tol = prec().tolerance();
        for m in 0..=3 {
            twisted_casimir(&p, m, prec(), &tol).unwrap();
            let spec = twisted_spectrum(&p, m, prec()).unwrap();
            assert_eq!(spec.sign, 1);
        }
    }

    #[test]
    fn mixed_reflection_signs() {
        for eps in [[-1i8, 1, 1], [1, -1, 1], [1, 1, -1], [-1, -1, -1]] {
            let mus = [q(1, 2), q(1, 1), q(3, 2)];
            let p: Vec<_> = eps
                .iter()
                .zip(&mus)
                .map(|(e, m)| ModuleParams::new(*e, m.clone()).unwrap())
                .collect();
            let p: [ModuleParams; 3] = p.try_into().unwrap();
            for n in 0..=2 {
                let rep = identity_report(&p, n, prec()).unwrap();
                assert!(prec().tolerance().accepts(&rep.worst()));
                let r = oracle_racah(&p, n, prec()).unwrap();
                assert!(prec().tolerance().accepts(&r.unitarity));
                assert_eq!(twisted_spectrum(&p, n, prec()).unwrap().sign, 1);
            }
        }
    }

    #[test]
    fn oracle_sweep_keeps_order() {
        let cases: Vec<_> = (0..3).map(|n| (triple(q(1, 2), q(0, 1), q(1, 1)), n)).collect();
        let out = oracle_sweep(&cases, prec());
        for (n, r) in out.into_iter().enumerate() {
            assert_eq!(r.unwrap().degree, n);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn casimirs_commute_with_total(a in 0i64..6, b in 0i64..6, c in 0i64..6, m in 0usize..4) {
            let p = triple(q(a, 2), q(b, 3), q(c, 2));
            let rep = identity_report(&p, m, prec()).unwrap();
            prop_assert!(prec().tolerance().accepts(&rep.worst()));
        }
    }
}
