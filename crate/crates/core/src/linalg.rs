//! Small dense matrices over [`Field`] values and a symmetric eigen-solver
//! for high-precision reals.

use std::ops::{Index, IndexMut};

use crate::error::{Error, Result};
use crate::scalars::{Field, Float};

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Field> DenseMatrix<T> {
    /// All-zero matrix whose entries take their precision from `proto`.
    pub fn zeros_like(rows: usize, cols: usize, proto: &T) -> Self {
        DenseMatrix {
            rows,
            cols,
            data: vec![proto.zero_like(); rows * cols],
        }
    }

    pub fn identity_like(n: usize, proto: &T) -> Self {
        let mut m = Self::zeros_like(n, n, proto);
        for i in 0..n {
            m[(i, i)] = proto.one_like();
        }
        m
    }

    pub fn diagonal(values: &[T]) -> Self {
        let n = values.len();
        let proto = values.first().cloned();
        let mut m = DenseMatrix {
            rows: n,
            cols: n,
            data: Vec::with_capacity(n * n),
        };
        if let Some(p) = proto {
            m.data = vec![p.zero_like(); n * n];
            for (i, v) in values.iter().enumerate() {
                m[(i, i)] = v.clone();
            }
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        DenseMatrix {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<T> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self[(i, j)].clone());
            }
        }
        DenseMatrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Product that skips zero entries of the left factor; the matrices
    /// built here are mostly banded.
    pub fn mul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "dimension mismatch in product");
        let proto = self.proto(rhs);
        let mut out = Self::zeros_like(self.rows, rhs.cols, &proto);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..rhs.cols {
                    let b = &rhs[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += &(a.clone() * b);
                    }
                }
            }
        }
        out
    }

    pub fn add(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a.clone() + b)
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        self.zip_with(rhs, |a, b| a.clone() - b)
    }

    pub fn scale(&self, factor: &T) -> Self {
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a.clone() * factor).collect(),
        }
    }

    /// `self + shift * I`.
    pub fn shift_diagonal(&self, shift: &T) -> Self {
        let mut out = self.clone();
        for i in 0..self.rows.min(self.cols) {
            out[(i, i)] += shift;
        }
        out
    }

    /// `AB + BA`.
    pub fn anticommutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).add(&rhs.mul(self))
    }

    /// `AB - BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        self.mul(rhs).sub(&rhs.mul(self))
    }

    /// Largest absolute entry; zero for an empty matrix is not representable
    /// without a prototype, so empty matrices return `None`.
    pub fn max_abs(&self) -> Option<T> {
        let mut it = self.data.iter();
        let mut best = it.next()?.abs_value();
        for v in it {
            let a = v.abs_value();
            if a > best {
                best = a;
            }
        }
        Some(best)
    }

    /// Max-abs over entries with `|i - j| > 1`, and min-abs over the sub- and
    /// superdiagonal. Returns `None` for the band minimum on a 1x1 matrix.
    pub fn band_profile(&self) -> (T, Option<T>) {
        let proto = self.data[0].zero_like();
        let mut off = proto.clone();
        let mut band: Option<T> = None;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)].abs_value();
                if i.abs_diff(j) > 1 {
                    if a > off {
                        off = a;
                    }
                } else if i.abs_diff(j) == 1 {
                    band = Some(match band {
                        Some(b) if b < a => b,
                        _ => a,
                    });
                }
            }
        }
        (off, band)
    }

    fn proto(&self, other: &Self) -> T {
        self.data
            .first()
            .or_else(|| other.data.first())
            .expect("empty matrix")
            .zero_like()
    }

    fn zip_with(&self, rhs: &Self, f: impl Fn(&T, &T) -> T) -> Self {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch");
        DenseMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| f(a, b)).collect(),
        }
    }
}

impl<T> Index<(usize, usize)> for DenseMatrix<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for DenseMatrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Eigen-decomposition of a real symmetric matrix; `vectors` holds the
/// orthonormal eigenvectors as columns, in the same order as `values`.
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<Float>,
    pub vectors: DenseMatrix<Float>,
}

const MAX_SWEEPS: usize = 80;

/// Cyclic Jacobi eigen-solver at the precision of the input entries.
///
/// Converges to full working precision for the small matrices used here;
/// eigenvalues come out unsorted.
pub fn symmetric_eigen(a: &DenseMatrix<Float>) -> Result<SymmetricEigen> {
    let n = a.rows();
    assert_eq!(n, a.cols(), "symmetric_eigen needs a square matrix");
    if n == 0 {
        return Err(Error::InvalidArgument("empty matrix".into()));
    }
    let prec = a[(0, 0)].prec();
    let mut m = a.clone();
    let mut v = DenseMatrix::identity_like(n, &a[(0, 0)]);
    // off-diagonal mass below 2^-2(p-24) of the total is treated as converged;
    // rounding alone keeps it near 2^-2p n^2
    let scale = Float::with_val(prec, 1) >> (2 * prec.saturating_sub(24));

    for sweep in 0..MAX_SWEEPS {
        let mut off = Float::with_val(prec, 0);
        let mut total = Float::with_val(prec, 0);
        for i in 0..n {
            for j in 0..n {
                let sq = m[(i, j)].clone().square();
                if i != j {
                    off += &sq;
                }
                total += &sq;
            }
        }
        if off <= total * &scale {
            let values = (0..n).map(|i| m[(i, i)].clone()).collect();
            return Ok(SymmetricEigen { values, vectors: v });
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[(p, q)].is_zero() {
                    continue;
                }
                // an entry lost against both diagonal entries is rounding noise
                let g = m[(p, q)].clone().abs() * 100u32;
                let app = m[(p, p)].clone().abs();
                let aqq = m[(q, q)].clone().abs();
                if sweep > 3 && app.clone() + &g == app && aqq.clone() + &g == aqq {
                    m[(p, q)] = Float::with_val(prec, 0);
                    m[(q, p)] = Float::with_val(prec, 0);
                    continue;
                }
                rotate(&mut m, &mut v, p, q, prec);
            }
        }
    }
    Err(Error::NoConvergence { sweeps: MAX_SWEEPS })
}

fn rotate(m: &mut DenseMatrix<Float>, v: &mut DenseMatrix<Float>, p: usize, q: usize, prec: u32) {
    let n = m.rows();
    let apq = m[(p, q)].clone();
    let theta = (m[(q, q)].clone() - &m[(p, p)]) / (apq.clone() * 2u32);
    let root = (theta.clone().square() + 1u32).sqrt();
    let denom = theta.clone().abs() + &root;
    let mut t = Float::with_val(prec, 1) / denom;
    if theta.is_sign_negative() {
        t = -t;
    }
    let c = Float::with_val(prec, 1) / (t.clone().square() + 1u32).sqrt();
    let s = t.clone() * &c;
    let tau = s.clone() / (c.clone() + 1u32);
    let h = t * &apq;

    m[(p, p)] -= &h;
    m[(q, q)] += &h;
    m[(p, q)] = Float::with_val(prec, 0);
    m[(q, p)] = Float::with_val(prec, 0);
    for r in 0..n {
        if r == p || r == q {
            continue;
        }
        let g = m[(r, p)].clone();
        let hh = m[(r, q)].clone();
        let new_rp = g.clone() - s.clone() * (hh.clone() + g.clone() * &tau);
        let new_rq = hh.clone() + s.clone() * (g - hh * &tau);
        m[(r, p)] = new_rp.clone();
        m[(p, r)] = new_rp;
        m[(r, q)] = new_rq.clone();
        m[(q, r)] = new_rq;
    }
    for r in 0..n {
        let g = v[(r, p)].clone();
        let hh = v[(r, q)].clone();
        v[(r, p)] = g.clone() - s.clone() * (hh.clone() + g.clone() * &tau);
        v[(r, q)] = hh.clone() + s.clone() * (g - hh * &tau);
    }
}

/// Converts an exact matrix to reals at `bits` precision.
pub fn to_real(m: &DenseMatrix<crate::scalars::Rational>, bits: u32) -> DenseMatrix<Float> {
    DenseMatrix::from_rows(
        m.to_rows()
            .into_iter()
            .map(|row| row.iter().map(|x| Float::with_val(bits, x)).collect())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalars::{Precision, Rational};

    fn real_matrix(p: Precision, rows: &[&[i64]]) -> DenseMatrix<Float> {
        DenseMatrix::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&x| p.real_int(x)).collect())
                .collect(),
        )
    }

    #[test]
    fn exact_products_and_commutators() {
        let q = |x: i64| Rational::from(x);
        let a = DenseMatrix::from_rows(vec![vec![q(1), q(2)], vec![q(0), q(3)]]);
        let b = DenseMatrix::from_rows(vec![vec![q(0), q(1)], vec![q(1), q(0)]]);
        let ab = a.mul(&b);
        assert_eq!(ab, DenseMatrix::from_rows(vec![vec![q(2), q(1)], vec![q(3), q(0)]]));
        let comm = a.commutator(&b);
        assert_eq!(comm, DenseMatrix::from_rows(vec![vec![q(2), q(-2)], vec![q(2), q(-2)]]));
        assert_eq!(a.transpose().transpose(), a);
    }

    #[test]
    fn jacobi_recovers_known_spectrum() {
        let p = Precision::default();
        // eigenvalues 2 - sqrt 2, 2, 2 + sqrt 2
        let a = real_matrix(p, &[&[2, -1, 0], &[-1, 2, -1], &[0, -1, 2]]);
        let eig = symmetric_eigen(&a).unwrap();
        let mut values = eig.values.clone();
        values.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let sqrt2 = p.real_int(2).sqrt();
        let expected = [p.real_int(2) - &sqrt2, p.real_int(2), p.real_int(2) + &sqrt2];
        let tol = p.tolerance();
        for (got, want) in values.iter().zip(&expected) {
            assert!(tol.accepts(&(got.clone() - want)), "{got} vs {want}");
        }
        // A V = V diag(values)
        let av = a.mul(&eig.vectors);
        let vd = eig.vectors.mul(&DenseMatrix::diagonal(&eig.values));
        assert!(tol.accepts(&av.sub(&vd).max_abs().unwrap()));
        let vtv = eig.vectors.transpose().mul(&eig.vectors);
        let id = DenseMatrix::identity_like(3, &p.real_int(0));
        assert!(tol.accepts(&vtv.sub(&id).max_abs().unwrap()));
    }

    #[test]
    fn jacobi_handles_degenerate_and_diagonal_input() {
        let p = Precision::default();
        let a = real_matrix(p, &[&[1, 0, 0], &[0, 1, 0], &[0, 0, -4]]);
        let eig = symmetric_eigen(&a).unwrap();
        assert_eq!(eig.values[2], p.real_int(-4));
        let b = real_matrix(p, &[&[1, 1], &[1, 1]]);
        let eig = symmetric_eigen(&b).unwrap();
        let mut v = eig.values;
        v.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!(p.tolerance().accepts(&v[0]));
        assert!(p.tolerance().accepts(&(v[1].clone() - 2u32)));
    }

    #[test]
    fn jacobi_converges_on_rounded_degenerate_input() {
        // all-ones scaled by √2: a 14-fold zero eigenvalue and entries that are not exact
        let p = Precision::default().doubled();
        let bits = p.bits();
        let root = Float::with_val(bits, 2).sqrt();
        let n = 15;
        let a = DenseMatrix::from_rows(vec![vec![root.clone(); n]; n]);
        let eig = symmetric_eigen(&a).unwrap();
        let d = DenseMatrix::diagonal(&eig.values);
        let back = eig.vectors.mul(&d).mul(&eig.vectors.transpose());
        assert!(p.tolerance().accepts(&back.sub(&a).max_abs().unwrap()));
        let top = eig
            .values
            .iter()
            .cloned()
            .reduce(|x, y| if y > x { y } else { x })
            .unwrap();
        assert!(p.tolerance().accepts(&(top - root * 15u32)));
    }

    #[test]
    fn band_profile_of_tridiagonal() {
        let p = Precision::default();
        let a = real_matrix(p, &[&[1, 3, 0], &[2, 1, -5], &[0, 7, 1]]);
        let (off, band) = a.band_profile();
        assert!(off.is_zero());
        assert_eq!(band.unwrap(), p.real_int(2));
    }
}
