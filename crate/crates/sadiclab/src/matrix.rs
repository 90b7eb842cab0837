//! Exact square integer matrices.
//!
//! Products of incidence matrices grow exponentially, so entries are
//! arbitrary-precision integers. Only the operations the library needs are
//! provided: products, transposition, determinants (Bareiss), exact inverses
//! of unimodular matrices, characteristic polynomials (Faddeev–LeVerrier) and
//! second exterior powers.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Serialize, Serializer};

use crate::poly::IntPoly;
use crate::{Error, Result};

/// A square matrix with arbitrary-precision integer entries (row-major).
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    n: usize,
    data: Vec<BigInt>,
}

impl IntMatrix {
    pub fn zeros(n: usize) -> Self {
        IntMatrix {
            n,
            data: vec![BigInt::zero(); n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = BigInt::one();
        }
        m
    }

    /// Builds a matrix from rows; all rows must have the matrix dimension.
    pub fn from_rows(rows: &[Vec<i64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "matrix rows must form a square".into(),
            ));
        }
        Ok(IntMatrix {
            n,
            data: rows.iter().flatten().map(|&v| BigInt::from(v)).collect(),
        })
    }

    pub fn from_big_rows(rows: Vec<Vec<BigInt>>) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(
                "matrix rows must form a square".into(),
            ));
        }
        Ok(IntMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigInt {
        &self.data[i * self.n + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: BigInt) {
        self.data[i * self.n + j] = v;
    }

    pub fn rows(&self) -> Vec<Vec<BigInt>> {
        self.data
            .chunks(self.n.max(1))
            .map(|r| r.to_vec())
            .take(self.n)
            .collect()
    }

    pub fn mul(&self, other: &IntMatrix) -> IntMatrix {
        assert_eq!(self.n, other.n, "dimension mismatch in matrix product");
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let a = &self.data[i * n + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let b = &other.data[k * n + j];
                    if !b.is_zero() {
                        out.data[i * n + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[BigInt]) -> Vec<BigInt> {
        assert_eq!(
            self.n,
            v.len(),
            "dimension mismatch in matrix-vector product"
        );
        (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| &self.data[i * self.n + j] * &v[j])
                    .sum()
            })
            .collect()
    }

    pub fn mul_vec_i64(&self, v: &[i64]) -> Vec<BigInt> {
        let big: Vec<BigInt> = v.iter().map(|&x| BigInt::from(x)).collect();
        self.mul_vec(&big)
    }

    pub fn transpose(&self) -> IntMatrix {
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].clone();
            }
        }
        out
    }

    pub fn add(&self, other: &IntMatrix) -> IntMatrix {
        IntMatrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn trace(&self) -> BigInt {
        (0..self.n).map(|i| self.data[i * self.n + i].clone()).sum()
    }

    /// True iff every entry is strictly positive.
    pub fn is_positive(&self) -> bool {
        self.data.iter().all(|x| x.is_positive())
    }

    pub fn is_nonnegative(&self) -> bool {
        self.data.iter().all(|x| !x.is_negative())
    }

    /// Determinant by fraction-free Gaussian elimination (Bareiss).
    pub fn determinant(&self) -> BigInt {
        let n = self.n;
        if n == 0 {
            return BigInt::one();
        }
        let mut a = self.data.clone();
        let mut sign = BigInt::one();
        let mut prev = BigInt::one();
        for k in 0..n - 1 {
            if a[k * n + k].is_zero() {
                match (k + 1..n).find(|&r| !a[r * n + k].is_zero()) {
                    Some(r) => {
                        for j in 0..n {
                            a.swap(k * n + j, r * n + j);
                        }
                        sign = -sign;
                    }
                    None => return BigInt::zero(),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let v = &a[i * n + j] * &a[k * n + k] - &a[i * n + k] * &a[k * n + j];
                    a[i * n + j] = v / &prev;
                }
            }
            prev = a[k * n + k].clone();
        }
        sign * &a[n * n - 1]
    }

    /// Exact inverse of a unimodular matrix (determinant ±1).
    pub fn inverse_unimodular(&self) -> Result<IntMatrix> {
        let det = self.determinant();
        if det.abs() != BigInt::one() {
            return Err(Error::NotUnimodular(det.to_string()));
        }
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let minor = self.minor(j, i);
                let cof = if (i + j) % 2 == 0 {
                    minor.determinant()
                } else {
                    -minor.determinant()
                };
                out.data[i * n + j] = cof * &det;
            }
        }
        Ok(out)
    }

    fn minor(&self, row: usize, col: usize) -> IntMatrix {
        let n = self.n;
        let mut data = Vec::with_capacity((n - 1) * (n - 1));
        for i in (0..n).filter(|&i| i != row) {
            for j in (0..n).filter(|&j| j != col) {
                data.push(self.data[i * n + j].clone());
            }
        }
        IntMatrix { n: n - 1, data }
    }

    /// Characteristic polynomial `det(x·I − M)` by the Faddeev–LeVerrier
    /// recursion; all divisions are exact over the integers.
    pub fn char_poly(&self) -> IntPoly {
        let n = self.n;
        let mut coeffs = vec![BigInt::zero(); n + 1];
        coeffs[n] = BigInt::one();
        let mut mk = Self::zeros(n);
        for k in 1..=n {
            // M_k = A·M_{k-1} + c_{n-k+1}·I
            let mut next = self.mul(&mk);
            for i in 0..n {
                next.data[i * n + i] += &coeffs[n - k + 1];
            }
            mk = next;
            let t = self.mul(&mk).trace();
            let (q, r) = (-t).div_rem(&BigInt::from(k));
            debug_assert!(r.is_zero());
            coeffs[n - k] = q;
        }
        IntPoly::new(coeffs)
    }

    /// Second exterior power: the matrix of 2×2 minors indexed by pairs
    /// `i < j` in lexicographic order.
    pub fn wedge2(&self) -> IntMatrix {
        let pairs = pairs(self.n);
        let m = pairs.len();
        let mut out = Self::zeros(m);
        for (r, &(i1, i2)) in pairs.iter().enumerate() {
            for (c, &(j1, j2)) in pairs.iter().enumerate() {
                out.data[r * m + c] =
                    self.get(i1, j1) * self.get(i2, j2) - self.get(i1, j2) * self.get(i2, j1);
            }
        }
        out
    }

    /// Entries as `f64` rows (lossy for huge entries).
    pub fn to_f64_rows(&self) -> Vec<Vec<f64>> {
        self.rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(|x| x.to_f64().unwrap_or(f64::INFINITY))
                    .collect()
            })
            .collect()
    }

    /// Entries as `i64`, if they all fit.
    pub fn to_i64_rows(&self) -> Option<Vec<Vec<i64>>> {
        self.rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_i64()).collect())
            .collect()
    }

    /// Exact JSON text: an array of integer rows.
    pub fn to_json(&self) -> String {
        let rows: Vec<String> = self
            .rows()
            .iter()
            .map(|r| {
                format!(
                    "[{}]",
                    r.iter()
                        .map(BigInt::to_string)
                        .collect::<Vec<_>>()
                        .join(",")
                )
            })
            .collect();
        format!("[{}]", rows.join(","))
    }

    /// Parses the JSON text produced by [`IntMatrix::to_json`].
    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Parse {
            position: e.column(),
            message: e.to_string(),
        })?;
        let rows = value
            .as_array()
            .ok_or_else(|| parse_err("expected an array of rows"))?;
        let mut out = Vec::with_capacity(rows.len());
        for row in rows {
            let row = row
                .as_array()
                .ok_or_else(|| parse_err("expected a row array"))?;
            let mut r = Vec::with_capacity(row.len());
            for x in row {
                let v = x
                    .as_i64()
                    .ok_or_else(|| parse_err("expected an integer entry"))?;
                r.push(BigInt::from(v));
            }
            out.push(r);
        }
        Self::from_big_rows(out)
    }
}

fn parse_err(msg: &str) -> Error {
    Error::Parse {
        position: 0,
        message: msg.to_string(),
    }
}

/// Index pairs `(i, j)` with `i < j < n`, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect()
}

impl fmt::Display for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json())
    }
}

impl Serialize for IntMatrix {
    /// Rows of integers when every entry fits in `i64`, otherwise rows of
    /// decimal strings (JSON numbers cannot carry arbitrary precision in all
    /// consumers).
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.to_i64_rows() {
            Some(rows) => rows.serialize(s),
            None => self
                .rows()
                .iter()
                .map(|r| r.iter().map(BigInt::to_string).collect::<Vec<_>>())
                .collect::<Vec<_>>()
                .serialize(s),
        }
    }
}

/// Dense `f64` matrix helpers used by the floating-point parts of the crate.
pub mod dense {
    /// `a · b` for row-major square matrices of dimension `n`.
    pub fn mul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for k in 0..n {
                let x = a[i * n + k];
                if x == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out[i * n + j] += x * b[k * n + j];
                }
            }
        }
        out
    }

    /// Induced sup-norm (maximal absolute row sum).
    pub fn sup_norm(a: &[f64], n: usize) -> f64 {
        (0..n)
            .map(|i| a[i * n..(i + 1) * n].iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter().flatten().copied().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn m(rows: &[&[i64]]) -> IntMatrix {
        IntMatrix::from_rows(&rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap()
    }

    #[test]
    fn determinant_and_inverse() {
        let t = m(&[&[1, 1, 1], &[1, 0, 0], &[0, 1, 0]]);
        assert_eq!(t.determinant(), BigInt::from(1));
        let inv = t.inverse_unimodular().unwrap();
        assert_eq!(t.mul(&inv), IntMatrix::identity(3));
        let singular = m(&[&[1, 2], &[2, 4]]);
        assert!(singular.inverse_unimodular().is_err());
        assert_eq!(m(&[&[0, 1], &[1, 0]]).determinant(), BigInt::from(-1));
    }

    #[test]
    fn char_poly_tribonacci() {
        let t = m(&[&[1, 1, 1], &[1, 0, 0], &[0, 1, 0]]);
        let p = t.char_poly();
        let c: Vec<i64> = p.coeffs().iter().map(|x| x.to_i64().unwrap()).collect();
        assert_eq!(c, vec![-1, -1, -1, 1]);
    }

    #[test]
    fn wedge2_is_multiplicative() {
        let a = m(&[&[0, 1, 0], &[0, 0, 1], &[1, 0, 1]]);
        let b = m(&[&[1, 0, 0], &[0, 0, 1], &[0, 1, 1]]);
        assert_eq!(a.mul(&b).wedge2(), a.wedge2().mul(&b.wedge2()));
    }

    #[test]
    fn json_round_trip() {
        let a = m(&[&[1, 1, 1], &[1, 0, 0], &[0, 1, 0]]);
        assert_eq!(a.to_json(), "[[1,1,1],[1,0,0],[0,1,0]]");
        assert_eq!(IntMatrix::from_json(&a.to_json()).unwrap(), a);
        assert_eq!(serde_json::to_string(&a).unwrap(), a.to_json());
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = IntMatrix> {
        prop::collection::vec(-4i64..5, n * n).prop_map(move |v| {
            IntMatrix::from_rows(&v.chunks(n).map(|c| c.to_vec()).collect::<Vec<_>>()).unwrap()
        })
    }

    /// Characteristic polynomial evaluated at an integer `t` equals
    /// `det(t·I − M)` computed independently.
    fn eval_check(a: &IntMatrix, t: i64) -> bool {
        let n = a.dim();
        let mut shifted = IntMatrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let base = if i == j {
                    BigInt::from(t)
                } else {
                    BigInt::zero()
                };
                shifted.set(i, j, base - a.get(i, j));
            }
        }
        a.char_poly().eval(&BigInt::from(t)) == shifted.determinant()
    }

    proptest! {
        #[test]
        fn determinant_is_multiplicative(a in arb_matrix(3), b in arb_matrix(3)) {
            prop_assert_eq!(a.mul(&b).determinant(), a.determinant() * b.determinant());
        }

        #[test]
        fn char_poly_matches_determinant(a in arb_matrix(4), t in -3i64..4) {
            prop_assert!(eval_check(&a, t));
        }
    }
}
