//! Exact arithmetic in a real quadratic field `ℚ(√D)`.
//!
//! Elements are `a + b√D` with rational `a`, `b` and a fixed squarefree-free
//! (any non-square positive) `D`. Signs, comparisons and floors are decided
//! exactly, which makes the classical continued fraction and rotation codings
//! of quadratic irrationals fully exact.
//!
//! Rational elements (`b = 0`) belong to every field: they can be combined
//! with elements of any radicand, and compare equal regardless of the
//! radicand they were created with.

use std::cmp::Ordering;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::{Error, Result};

/// An element `a + b√D` of `ℚ(√D)`.
#[derive(Clone, Debug)]
pub struct QuadIrr {
    a: BigRational,
    b: BigRational,
    d: u64,
}

impl QuadIrr {
    /// `a + b√d`; `d` must be a positive non-square.
    pub fn new(a: BigRational, b: BigRational, d: u64) -> Result<Self> {
        let r = d.isqrt();
        if d == 0 || r * r == d {
            return Err(Error::InvalidArgument(format!(
                "{d} is not a positive non-square"
            )));
        }
        Ok(QuadIrr { a, b, d })
    }

    /// `(p + q√d) / r` from integers.
    pub fn from_ints(p: i64, q: i64, r: i64, d: u64) -> Result<Self> {
        if r == 0 {
            return Err(Error::InvalidArgument("zero denominator".into()));
        }
        let den = BigInt::from(r);
        Self::new(
            BigRational::new(p.into(), den.clone()),
            BigRational::new(q.into(), den),
            d,
        )
    }

    /// The rational number `q` viewed in `ℚ(√d)`.
    pub fn rational(q: BigRational, d: u64) -> Result<Self> {
        Self::new(q, BigRational::zero(), d)
    }

    pub fn rational_part(&self) -> &BigRational {
        &self.a
    }

    pub fn irrational_part(&self) -> &BigRational {
        &self.b
    }

    pub fn radicand(&self) -> u64 {
        self.d
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    /// Exact sign: `-1`, `0` or `1`.
    pub fn signum(&self) -> i32 {
        let sa = sign(&self.a);
        let sb = sign(&self.b);
        if sb == 0 {
            return sa;
        }
        if sa == 0 || sa == sb {
            return if sa == 0 { sb } else { sa };
        }
        // Opposite signs: compare a² with b²·d.
        let a2 = &self.a * &self.a;
        let b2d = &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d));
        match a2.cmp(&b2d) {
            Ordering::Greater => sa,
            Ordering::Less => sb,
            Ordering::Equal => 0,
        }
    }

    /// Galois conjugate `a − b√d`.
    pub fn conjugate(&self) -> Self {
        QuadIrr {
            a: self.a.clone(),
            b: -self.b.clone(),
            d: self.d,
        }
    }

    /// Field norm `a² − d b²`.
    pub fn norm(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * BigRational::from_integer(BigInt::from(self.d))
    }

    /// Multiplicative inverse.
    pub fn recip(&self) -> Result<Self> {
        let n = self.norm();
        if n.is_zero() {
            return Err(Error::Domain {
                map: "reciprocal",
                value: "0".into(),
            });
        }
        Ok(QuadIrr {
            a: &self.a / &n,
            b: -(&self.b / &n),
            d: self.d,
        })
    }

    /// Floating-point approximation.
    pub fn to_f64(&self) -> f64 {
        let a = self.a.to_f64().unwrap_or(f64::NAN);
        let b = self.b.to_f64().unwrap_or(f64::NAN);
        a + b * (self.d as f64).sqrt()
    }

    /// Exact floor, found from a float estimate and corrected exactly.
    pub fn floor(&self) -> BigInt {
        let est = self.to_f64();
        let mut k = if est.is_finite() {
            BigInt::from(est.floor() as i128)
        } else {
            // Fall back to integer bounds on each part.
            let root = BigInt::from(self.d.isqrt());
            (self.a.floor() + (&self.b * BigRational::from_integer(root)).floor()).to_integer()
        };
        loop {
            let diff = self.sub_int(&k);
            if diff.signum() < 0 {
                k -= 1;
                continue;
            }
            if diff.sub_int(&BigInt::one()).signum() >= 0 {
                k += 1;
                continue;
            }
            return k;
        }
    }

    /// Fractional part `x − ⌊x⌋`.
    pub fn fract(&self) -> Self {
        self.sub_int(&self.floor())
    }

    fn sub_int(&self, k: &BigInt) -> Self {
        QuadIrr {
            a: &self.a - BigRational::from_integer(k.clone()),
            b: self.b.clone(),
            d: self.d,
        }
    }

    /// Radicand of the field containing both operands.
    ///
    /// # Panics
    /// Panics when both operands are irrational in different fields.
    fn field(&self, other: &Self) -> u64 {
        if self.b.is_zero() {
            other.d
        } else if other.b.is_zero() {
            self.d
        } else {
            assert_eq!(
                self.d, other.d,
                "mixing elements of different quadratic fields"
            );
            self.d
        }
    }
}

impl PartialEq for QuadIrr {
    fn eq(&self, other: &Self) -> bool {
        self.a == other.a && self.b == other.b && (self.b.is_zero() || self.d == other.d)
    }
}

impl Eq for QuadIrr {}

impl Hash for QuadIrr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.a.hash(state);
        self.b.hash(state);
        if !self.b.is_zero() {
            self.d.hash(state);
        }
    }
}

fn sign(q: &BigRational) -> i32 {
    if q.is_positive() {
        1
    } else if q.is_negative() {
        -1
    } else {
        0
    }
}

impl PartialOrd for QuadIrr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for QuadIrr {
    fn cmp(&self, other: &Self) -> Ordering {
        (self - other).signum().cmp(&0)
    }
}

impl<'a> Add<&'a QuadIrr> for &'a QuadIrr {
    type Output = QuadIrr;
    fn add(self, o: &QuadIrr) -> QuadIrr {
        QuadIrr {
            a: &self.a + &o.a,
            b: &self.b + &o.b,
            d: self.field(o),
        }
    }
}

impl<'a> Sub<&'a QuadIrr> for &'a QuadIrr {
    type Output = QuadIrr;
    fn sub(self, o: &QuadIrr) -> QuadIrr {
        QuadIrr {
            a: &self.a - &o.a,
            b: &self.b - &o.b,
            d: self.field(o),
        }
    }
}

impl<'a> Mul<&'a QuadIrr> for &'a QuadIrr {
    type Output = QuadIrr;
    fn mul(self, o: &QuadIrr) -> QuadIrr {
        let field = self.field(o);
        let d = BigRational::from_integer(BigInt::from(field));
        QuadIrr {
            a: &self.a * &o.a + &self.b * &o.b * d,
            b: &self.a * &o.b + &self.b * &o.a,
            d: field,
        }
    }
}

impl<'a> Div<&'a QuadIrr> for &'a QuadIrr {
    type Output = QuadIrr;
    /// # Panics
    /// Panics on division by zero.
    fn div(self, o: &QuadIrr) -> QuadIrr {
        self * &o.recip().expect("division by zero in quadratic field")
    }
}

impl Neg for &QuadIrr {
    type Output = QuadIrr;
    fn neg(self) -> QuadIrr {
        QuadIrr {
            a: -self.a.clone(),
            b: -self.b.clone(),
            d: self.d,
        }
    }
}

impl fmt::Display for QuadIrr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}·√{}", self.a, self.b, self.d)
    }
}
