//! Continued fraction algorithms: the classical additive (Farey) and
//! multiplicative (Gauss) maps, Brun's algorithm in linear and projective
//! form, matrix expansions, and the natural extension of the Gauss map.
//!
//! Linear steps are generic over [`Scalar`], so the same code runs exactly on
//! rationals and approximately on `f64`.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::matrix::IntMatrix;
use crate::quadratic::QuadIrr;
use crate::sadic::{hilbert_diameter, DirectiveSequence};
use crate::substitution::Family;
use crate::{Error, Result};

/// Number types the linear algorithms run on.
pub trait Scalar: Clone + PartialOrd + fmt::Debug + fmt::Display + Send + Sync {
    fn scalar_zero() -> Self;
    fn from_i64(v: i64) -> Self;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    fn div(&self, o: &Self) -> Self;
    fn to_f64(&self) -> f64;
    fn to_json(&self) -> serde_json::Value;
    fn is_scalar_zero(&self) -> bool {
        *self == Self::scalar_zero()
    }
    fn is_scalar_negative(&self) -> bool {
        *self < Self::scalar_zero()
    }
}

impl Scalar for f64 {
    fn scalar_zero() -> Self {
        0.0
    }
    fn from_i64(v: i64) -> Self {
        v as f64
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn to_f64(&self) -> f64 {
        *self
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::json!(self)
    }
}

impl Scalar for BigRational {
    fn scalar_zero() -> Self {
        Zero::zero()
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
}

/// Quadratic irrationals. Integers are created as rationals, which combine
/// with elements of any quadratic field.
impl Scalar for QuadIrr {
    fn scalar_zero() -> Self {
        QuadIrr::rational(BigRational::zero(), 2).expect("2 is not a square")
    }
    fn from_i64(v: i64) -> Self {
        QuadIrr::rational(BigRational::from_integer(BigInt::from(v)), 2).expect("2 is not a square")
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn to_f64(&self) -> f64 {
        QuadIrr::to_f64(self)
    }
    fn to_json(&self) -> serde_json::Value {
        serde_json::Value::String(self.to_string())
    }
    fn is_scalar_zero(&self) -> bool {
        self.is_zero()
    }
    fn is_scalar_negative(&self) -> bool {
        self.signum() < 0
    }
}

// ---------------------------------------------------------------------------
// One-dimensional maps

/// The Farey map: `x ↦ (1−x)/x` for `x > ½`, `x ↦ x/(1−x)` for `x ≤ ½`.
pub fn farey_step(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::Domain {
            map: "Farey map",
            value: x.to_string(),
        });
    }
    Ok(if x > 0.5 {
        (1.0 - x) / x
    } else {
        x / (1.0 - x)
    })
}

/// Exact Farey map on rationals.
pub fn farey_step_exact(x: &BigRational) -> Result<BigRational> {
    let one = BigRational::one();
    if x.is_negative() || *x > one {
        return Err(Error::Domain {
            map: "Farey map",
            value: x.to_string(),
        });
    }
    let half = BigRational::new(1.into(), 2.into());
    Ok(if *x > half {
        (&one - x) / x
    } else {
        x / (&one - x)
    })
}

/// The Gauss map with its digit: `x ↦ (⌊1/x⌋, {1/x})`.
///
/// `x = 0` means the expansion has terminated (rational input).
pub fn gauss_step(x: f64) -> Result<(u64, f64)> {
    if x == 0.0 {
        return Err(Error::TerminatedExpansion);
    }
    if !(x > 0.0 && x <= 1.0) {
        return Err(Error::Domain {
            map: "Gauss map",
            value: x.to_string(),
        });
    }
    let inv = 1.0 / x;
    let a = inv.floor();
    Ok((a as u64, inv - a))
}

/// Exact Gauss map on rationals.
pub fn gauss_step_exact(x: &BigRational) -> Result<(BigInt, BigRational)> {
    if x.is_zero() {
        return Err(Error::TerminatedExpansion);
    }
    if x.is_negative() || *x > BigRational::one() {
        return Err(Error::Domain {
            map: "Gauss map",
            value: x.to_string(),
        });
    }
    let inv = x.recip();
    let a = inv.floor();
    Ok((a.to_integer(), inv - a))
}

/// Exact Gauss map on quadratic irrationals.
pub fn gauss_step_quadratic(x: &QuadIrr) -> Result<(BigInt, QuadIrr)> {
    match x.signum() {
        0 => return Err(Error::TerminatedExpansion),
        -1 => {
            return Err(Error::Domain {
                map: "Gauss map",
                value: x.to_string(),
            })
        }
        _ => {}
    }
    let inv = x.recip()?;
    let a = inv.floor();
    if a.is_zero() {
        return Err(Error::Domain {
            map: "Gauss map",
            value: x.to_string(),
        });
    }
    Ok((a, inv.fract()))
}

/// Floating-point continued fraction digits together with the number of
/// leading digits that are certified by a running error bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FloatExpansion {
    pub digits: Vec<u64>,
    /// Digits `digits[..reliable]` are guaranteed correct for any real within
    /// the initial rounding error of the input.
    pub reliable: usize,
    pub terminated: bool,
}

/// Continued fraction digits of `x ∈ (0,1)` by iterating the Gauss map in
/// double precision, with an error bound tracking when digits become
/// uncertain (a digit is uncertain once the error interval of `1/x`
/// straddles an integer).
pub fn cf_expand(x: f64, depth: usize) -> Result<FloatExpansion> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::Domain {
            map: "continued fraction expansion",
            value: x.to_string(),
        });
    }
    let mut digits = Vec::with_capacity(depth);
    let mut cur = x;
    let mut err = f64::EPSILON * x;
    let mut reliable = None;
    for k in 0..depth {
        if cur == 0.0 {
            return Ok(FloatExpansion {
                reliable: reliable.unwrap_or(digits.len()),
                digits,
                terminated: true,
            });
        }
        let inv = 1.0 / cur;
        let inv_err = err / (cur * (cur - err).max(f64::MIN_POSITIVE)) + f64::EPSILON * inv;
        let (a, rem) = gauss_step(cur)?;
        if reliable.is_none() && (err >= cur || (inv - inv_err).floor() != (inv + inv_err).floor())
        {
            reliable = Some(k);
        }
        digits.push(a);
        cur = rem;
        err = inv_err + f64::EPSILON;
    }
    Ok(FloatExpansion {
        reliable: reliable.unwrap_or(depth),
        digits,
        terminated: false,
    })
}

/// Exact continued fraction digits of a rational in `(0,1]`; stops when the
/// expansion terminates.
pub fn cf_expand_rational(x: &BigRational, depth: usize) -> Result<Vec<BigInt>> {
    let mut digits = Vec::new();
    let mut cur = x.clone();
    for _ in 0..depth {
        match gauss_step_exact(&cur) {
            Ok((a, rem)) => {
                digits.push(a);
                cur = rem;
            }
            Err(Error::TerminatedExpansion) => break,
            Err(e) => return Err(e),
        }
    }
    Ok(digits)
}

/// Exact continued fraction digits of a quadratic irrational in `(0,1)`.
pub fn cf_expand_quadratic(x: &QuadIrr, depth: usize) -> Result<Vec<BigInt>> {
    let mut digits = Vec::with_capacity(depth);
    let mut cur = x.clone();
    for _ in 0..depth {
        let (a, rem) = gauss_step_quadratic(&cur)?;
        digits.push(a);
        cur = rem;
    }
    Ok(digits)
}

/// `[a_0, a_1, …, a_{n−1}] = 1/(a_0 + 1/(a_1 + ⋯ + 1/a_{n−1}))`; `0` for an
/// empty list.
pub fn cf_reconstruct(digits: &[BigInt]) -> BigRational {
    let mut acc = BigRational::zero();
    for a in digits.iter().rev() {
        acc = (BigRational::from_integer(a.clone()) + acc).recip();
    }
    acc
}

/// Lengths of maximal runs of equal branch indices.
pub fn run_lengths(branches: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = Vec::new();
    let mut prev = None;
    for &b in branches {
        if Some(b) == prev {
            *out.last_mut().expect("run started") += 1;
        } else {
            out.push(1);
            prev = Some(b);
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Linear algorithms

/// A unimodular continued fraction algorithm `F(x) = M(x)^{-1} x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// On `[a:b]`: `M_1` if `a > b`, `M_2` if `a ≤ b`.
    ClassicalAdditive,
    /// On sorted `[w_1:w_2:w_3]`: subtract the second largest entry from the
    /// largest and sort.
    Brun,
}

impl Algorithm {
    pub fn parse(name: &str) -> Result<Self> {
        match name.trim().to_ascii_lowercase().as_str() {
            "classical" | "additive" | "farey" | "classical_additive" => {
                Ok(Algorithm::ClassicalAdditive)
            }
            "brun" => Ok(Algorithm::Brun),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm `{other}`"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ClassicalAdditive => "classical_additive",
            Algorithm::Brun => "brun",
        }
    }

    pub fn dim(self) -> usize {
        match self {
            Algorithm::ClassicalAdditive => 2,
            Algorithm::Brun => 3,
        }
    }

    /// Branch matrices `M_1, …` (0-based in the returned vector).
    pub fn branch_matrices(self) -> Vec<IntMatrix> {
        let rows: Vec<Vec<Vec<i64>>> = match self {
            Algorithm::ClassicalAdditive => {
                vec![vec![vec![1, 1], vec![0, 1]], vec![vec![1, 0], vec![1, 1]]]
            }
            Algorithm::Brun => vec![
                vec![vec![0, 1, 0], vec![0, 0, 1], vec![1, 0, 1]],
                vec![vec![1, 0, 0], vec![0, 0, 1], vec![0, 1, 1]],
                vec![vec![1, 0, 0], vec![0, 1, 0], vec![0, 1, 1]],
            ],
        };
        rows.iter()
            .map(|r| IntMatrix::from_rows(r).expect("square"))
            .collect()
    }

    /// The substitution family whose incidence matrices are the branch
    /// matrices.
    pub fn family(self) -> Family {
        match self {
            Algorithm::ClassicalAdditive => Family::Sturmian,
            Algorithm::Brun => Family::Brun,
        }
    }

    fn check_domain<T: Scalar>(self, x: &[T]) -> Result<()> {
        let bad = || Error::Domain {
            map: self.name(),
            value: format!("{x:?}"),
        };
        if x.len() != self.dim()
            || x.iter().any(Scalar::is_scalar_negative)
            || x.iter().all(Scalar::is_scalar_zero)
        {
            return Err(bad());
        }
        if self == Algorithm::Brun && !(x[0] <= x[1] && x[1] <= x[2]) {
            return Err(bad());
        }
        Ok(())
    }

    /// Branch index (0-based) of `x`. Ties are resolved by taking the first
    /// matching case, with the non-strict inequalities as in the case split.
    pub fn partition<T: Scalar>(self, x: &[T]) -> Result<usize> {
        self.check_domain(x)?;
        Ok(match self {
            Algorithm::ClassicalAdditive => usize::from(x[0] <= x[1]),
            Algorithm::Brun => {
                let diff = x[2].sub(&x[1]);
                if diff >= x[1] {
                    2
                } else if diff >= x[0] {
                    1
                } else {
                    0
                }
            }
        })
    }

    /// `M_i^{-1} x` for the branch `i` of `x` (unnormalised).
    pub fn apply_inverse<T: Scalar>(self, x: &[T]) -> Result<(usize, Vec<T>)> {
        let i = self.partition(x)?;
        let next = match (self, i) {
            (Algorithm::ClassicalAdditive, 0) => vec![x[0].sub(&x[1]), x[1].clone()],
            (Algorithm::ClassicalAdditive, _) => vec![x[0].clone(), x[1].sub(&x[0])],
            (Algorithm::Brun, 2) => vec![x[0].clone(), x[1].clone(), x[2].sub(&x[1])],
            (Algorithm::Brun, 1) => vec![x[0].clone(), x[2].sub(&x[1]), x[1].clone()],
            (Algorithm::Brun, _) => vec![x[2].sub(&x[1]), x[0].clone(), x[1].clone()],
        };
        Ok((i, next))
    }

    /// True when the algorithm has nothing left to subtract (the second
    /// largest coordinate vanished), i.e. the expansion of a rational
    /// direction terminated.
    pub fn terminated<T: Scalar>(self, x: &[T]) -> bool {
        match self {
            Algorithm::ClassicalAdditive => x[0].is_scalar_zero() || x[1].is_scalar_zero(),
            Algorithm::Brun => x[1].is_scalar_zero(),
        }
    }
}

/// A point of the projective simplex, stored with unit `l1` norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProjectivePoint(Vec<f64>);

impl ProjectivePoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() || coords.iter().any(|&c| c < 0.0 || !c.is_finite()) {
            return Err(Error::Domain {
                map: "projective simplex",
                value: format!("{coords:?}"),
            });
        }
        Ok(ProjectivePoint(normalize(&coords)?))
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }
}

fn normalize<T: Scalar>(x: &[T]) -> Result<Vec<T>> {
    let s = x.iter().fold(T::scalar_zero(), |acc, v| acc.add(v));
    if s.is_scalar_zero() {
        return Err(Error::Domain {
            map: "projective normalisation",
            value: "0".into(),
        });
    }
    Ok(x.iter().map(|v| v.div(&s)).collect())
}

/// One linear step: `(i, normalize(M_i^{-1} x))`.
pub fn linear_step<T: Scalar>(alg: Algorithm, x: &[T]) -> Result<(usize, Vec<T>)> {
    let (i, next) = alg.apply_inverse(x)?;
    Ok((i, normalize(&next)?))
}

/// The branch sequence of an algorithm on an input, with residual points.
#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<T> {
    pub algorithm: Algorithm,
    pub input: Vec<T>,
    /// 0-based branch indices `i_0, i_1, …`.
    pub branches: Vec<usize>,
    /// `residuals[n]` is the normalised point after `n` steps
    /// (`residuals[0]` is the normalised input).
    pub residuals: Vec<Vec<T>>,
    pub terminated: bool,
}

impl<T: Scalar> Expansion<T> {
    /// `M_{[0,n)} = M_{i_0} ⋯ M_{i_{n−1}}`.
    pub fn matrix_product(&self, n: usize) -> IntMatrix {
        let mats = self.algorithm.branch_matrices();
        self.branches[..n]
            .iter()
            .fold(IntMatrix::identity(self.algorithm.dim()), |p, &i| {
                p.mul(&mats[i])
            })
    }

    /// JSON record `{algorithm, input, branches, residuals}` (branches are
    /// 1-based as in the matrix names; exact values are strings).
    pub fn to_json(&self, with_matrices: bool) -> serde_json::Value {
        let vec_json =
            |v: &Vec<T>| serde_json::Value::Array(v.iter().map(Scalar::to_json).collect());
        let mut obj = serde_json::json!({
            "algorithm": self.algorithm.name(),
            "input": vec_json(&self.input),
            "branches": self.branches.iter().map(|b| b + 1).collect::<Vec<_>>(),
            "residuals": self.residuals.iter().map(vec_json).collect::<Vec<_>>(),
            "terminated": self.terminated,
        });
        if with_matrices {
            let product = self.matrix_product(self.branches.len());
            obj["matrix_product"] =
                serde_json::from_str(&product.to_json()).unwrap_or(serde_json::Value::Null);
        }
        obj
    }
}

/// Iterates the linear algorithm for at most `depth` steps, stopping early
/// when the expansion terminates.
pub fn expand<T: Scalar>(alg: Algorithm, x: &[T], depth: usize) -> Result<Expansion<T>> {
    alg.check_domain(x)?;
    let mut cur = normalize(x)?;
    let mut branches = Vec::with_capacity(depth);
    let mut residuals = vec![cur.clone()];
    let mut terminated = false;
    for _ in 0..depth {
        if alg.terminated(&cur) {
            terminated = true;
            break;
        }
        let (i, next) = linear_step(alg, &cur)?;
        branches.push(i);
        residuals.push(next.clone());
        cur = next;
    }
    Ok(Expansion {
        algorithm: alg,
        input: x.to_vec(),
        branches,
        residuals,
        terminated,
    })
}

/// `M_{[0,n)} · residual_n` in exact arithmetic.
pub fn reconstruct_exact(exp: &Expansion<BigRational>, n: usize) -> Vec<BigRational> {
    let p = exp.matrix_product(n);
    let r = &exp.residuals[n];
    (0..p.dim())
        .map(|i| {
            (0..p.dim())
                .map(|j| BigRational::from_integer(p.get(i, j).clone()) * &r[j])
                .sum()
        })
        .collect()
}

/// `M_{[0,n)} · residual_n` in floating point.
pub fn reconstruct_f64(exp: &Expansion<f64>, n: usize) -> Vec<f64> {
    let p = exp.matrix_product(n).to_f64_rows();
    let r = &exp.residuals[n];
    p.iter()
        .map(|row| row.iter().zip(r).map(|(a, b)| a * b).sum())
        .collect()
}

/// Hilbert diameters of the column cones of `M_{[0,n)}` for `n = 1, …`,
/// computed with a column-normalised floating-point product.
pub fn cone_diameters(alg: Algorithm, branches: &[usize]) -> Vec<f64> {
    let d = alg.dim();
    let mats: Vec<Vec<f64>> = alg
        .branch_matrices()
        .iter()
        .map(|m| crate::matrix::dense::from_rows(&m.to_f64_rows()))
        .collect();
    let mut p = crate::matrix::dense::from_rows(&IntMatrix::identity(d).to_f64_rows());
    let mut out = Vec::with_capacity(branches.len());
    for &b in branches {
        p = crate::matrix::dense::mul(&p, &mats[b], d);
        for j in 0..d {
            let s: f64 = (0..d).map(|i| p[i * d + j]).sum();
            for i in 0..d {
                p[i * d + j] /= s;
            }
        }
        let cols: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..d).map(|i| p[i * d + j]).collect())
            .collect();
        out.push(hilbert_diameter(&cols));
    }
    out
}

/// Converts an expansion into the finite directive sequence of the
/// substitution family whose incidence matrices are the branch matrices.
pub fn expansion_to_substitutions<T: Scalar>(
    exp: &Expansion<T>,
    family: Family,
) -> Result<DirectiveSequence> {
    let subs = family.substitutions();
    let mats = exp.algorithm.branch_matrices();
    if subs.len() != mats.len() || subs.iter().zip(&mats).any(|(s, m)| s.incidence() != *m) {
        return Err(Error::FamilyMismatch);
    }
    DirectiveSequence::finite(family, exp.branches.clone())
}

// ---------------------------------------------------------------------------
// Brun's projective map

/// Brun's projective map on `Δ = {0 ≤ x₁ ≤ x₂ ≤ 1}`, returning the case
/// number (1, 2 or 3, in the order `x₂ ≤ ½`, `½ ≤ x₂ ≤ 1−x₁`, `1−x₁ ≤ x₂`;
/// on a shared boundary the first case applies).
///
/// Case `b` corresponds to the linear branch matrix `M_{4−b}` for the lifted
/// vector `(x₁, x₂, 1)`.
pub fn brun_projective_step<T: Scalar>(x1: &T, x2: &T) -> Result<(u8, (T, T))> {
    let one = T::from_i64(1);
    if x1.is_scalar_negative() || x1 > x2 || *x2 > one {
        return Err(Error::Domain {
            map: "Brun projective map",
            value: format!("({x1}, {x2})"),
        });
    }
    let half = one.div(&T::from_i64(2));
    let rest = one.sub(x2);
    if *x2 <= half {
        Ok((1, (x1.div(&rest), x2.div(&rest))))
    } else if *x1 <= rest {
        Ok((2, (x1.div(x2), rest.div(x2))))
    } else {
        Ok((3, (rest.div(x2), x1.div(x2))))
    }
}

/// Branch index of the linear algorithm corresponding to a projective case.
pub fn brun_case_to_branch(case: u8) -> usize {
    3 - usize::from(case)
}

// ---------------------------------------------------------------------------
// Natural extension of the Gauss map

/// Which rectangle is the wider one (and has width 1).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    /// Left rectangle widest (`a = 1`); coordinates are `(b, c)`.
    Left,
    /// Right rectangle widest (`b = 1`); coordinates are `(a, d)`.
    Right,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }
}

/// A point of the two-rectangle model: on [`Side::Right`] the pair `(a, d)`
/// (width and height of the narrower, left rectangle); on [`Side::Left`] the
/// mirror pair for the narrower, right rectangle.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NatExtPoint {
    pub side: Side,
    pub a: f64,
    pub d: f64,
}

impl NatExtPoint {
    /// Whether `(a, d)` lies in the domain: `0 < a < 1`, `0 < d`, and the
    /// narrower rectangle lower than the wider one, i.e. `d < 1/(1+a)`.
    pub fn in_domain(&self) -> bool {
        self.a > 0.0 && self.a < 1.0 && self.d > 0.0 && self.d * (1.0 + self.a) < 1.0
    }
}

/// One restacking step `(a, d) ↦ ({1/a}, a − d a²)`; returns the digit
/// `⌊1/a⌋` needed to invert it. The wider rectangle switches sides.
pub fn natural_extension_step(p: NatExtPoint) -> Result<(u64, NatExtPoint)> {
    if !p.in_domain() {
        return Err(Error::Domain {
            map: "natural extension",
            value: format!("({}, {})", p.a, p.d),
        });
    }
    let (k, a1) = gauss_step(p.a)?;
    Ok((
        k,
        NatExtPoint {
            side: p.side.other(),
            a: a1,
            d: p.a - p.d * p.a * p.a,
        },
    ))
}

/// Inverse of [`natural_extension_step`] given the digit `k`:
/// `a = 1/(k + a')`, `d = (a − d')/a²`.
pub fn natural_extension_inverse(k: u64, p: NatExtPoint) -> Result<NatExtPoint> {
    if k == 0 || !(0.0..1.0).contains(&p.a) {
        return Err(Error::Domain {
            map: "inverse natural extension",
            value: format!("k={k}, a={}", p.a),
        });
    }
    let a = 1.0 / (k as f64 + p.a);
    Ok(NatExtPoint {
        side: p.side.other(),
        a,
        d: (a - p.d) / (a * a),
    })
}

/// Jacobian determinant of one step at `p`, by central finite differences.
///
/// The digit `k = ⌊1/a⌋` is frozen at its value at `p`, so the branch map is
/// smooth and the stencil may leave the digit cell. Steps are scaled per
/// coordinate: `a` moves by a small multiple of itself (the branch varies like
/// `1/a`), while the map is affine in `d`, so a unit-size step there is exact
/// up to rounding.
pub fn natural_extension_jacobian(p: NatExtPoint) -> Result<f64> {
    let (k, _) = natural_extension_step(p)?;
    let ha = 1e-5 * p.a;
    let hd = 0.25;
    let f = |a: f64, d: f64| -> (f64, f64) {
        let inv = 1.0 / a;
        (inv - k as f64, a - d * a * a)
    };
    let (fa_p, ga_p) = f(p.a + ha, p.d);
    let (fa_m, ga_m) = f(p.a - ha, p.d);
    let (fd_p, gd_p) = f(p.a, p.d + hd);
    let (fd_m, gd_m) = f(p.a, p.d - hd);
    let j11 = (fa_p - fa_m) / (2.0 * ha);
    let j21 = (ga_p - ga_m) / (2.0 * ha);
    let j12 = (fd_p - fd_m) / (2.0 * hd);
    let j22 = (gd_p - gd_m) / (2.0 * hd);
    Ok(j11 * j22 - j12 * j21)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    fn ints(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    #[test]
    fn farey_examples() {
        assert_eq!(farey_step(0.5).unwrap(), 1.0);
        assert_eq!(farey_step(0.0).unwrap(), 0.0);
        assert_eq!(farey_step_exact(&r(2, 3)).unwrap(), r(1, 2));
        assert!(farey_step(1.5).is_err());
    }

    #[test]
    fn gauss_examples() {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let (a, rem) = gauss_step(inv_phi).unwrap();
        assert_eq!(a, 1);
        assert!((rem - inv_phi).abs() < 1e-15);
        assert_eq!(
            gauss_step_exact(&r(2, 5)).unwrap(),
            (BigInt::from(2), r(1, 2))
        );
        assert_eq!(
            gauss_step_exact(&r(1, 1)).unwrap(),
            (BigInt::from(1), r(0, 1))
        );
        assert!(matches!(gauss_step(0.0), Err(Error::TerminatedExpansion)));
    }

    #[test]
    fn expansions() {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let e = cf_expand(inv_phi, 20).unwrap();
        assert_eq!(e.digits, vec![1; 20]);
        assert_eq!(e.reliable, 20);
        assert_eq!(cf_expand_rational(&r(2, 5), 10).unwrap(), ints(&[2, 2]));
        let sqrt2m1 = QuadIrr::from_ints(-1, 1, 1, 2).unwrap();
        assert_eq!(cf_expand_quadratic(&sqrt2m1, 12).unwrap(), ints(&[2; 12]));
        let phi_q = QuadIrr::from_ints(-1, 1, 2, 5).unwrap();
        assert_eq!(cf_expand_quadratic(&phi_q, 20).unwrap(), ints(&[1; 20]));
        // Float digits of √2 − 1 become unreliable eventually but start right.
        let f = cf_expand(2f64.sqrt() - 1.0, 40).unwrap();
        assert!(f.reliable >= 15 && f.digits[..f.reliable].iter().all(|&a| a == 2));
        assert_eq!(cf_reconstruct(&ints(&[2, 2])), r(2, 5));
    }

    #[test]
    fn linear_examples() {
        let (i, _) = linear_step(Algorithm::ClassicalAdditive, &[1.0, 1.0]).unwrap();
        assert_eq!(i, 1);
        let (i, next) = linear_step(Algorithm::Brun, &[r(1, 1), r(2, 1), r(7, 1)]).unwrap();
        assert_eq!(i, 2);
        assert_eq!(next, vec![r(1, 8), r(2, 8), r(5, 8)]);
        assert!(linear_step(Algorithm::Brun, &[2.0, 1.0, 3.0]).is_err());
        // A fixed ray of a branch matrix: M_2 of the classical algorithm fixes [0:1].
        let (_, fixed) = linear_step(Algorithm::ClassicalAdditive, &[0.0, 1.0]).unwrap();
        assert_eq!(fixed, vec![0.0, 1.0]);
    }

    #[test]
    fn brun_projective_examples() {
        let (b, (y1, y2)) = brun_projective_step(&0.2, &0.4).unwrap();
        assert_eq!(b, 1);
        assert!((y1 - 1.0 / 3.0).abs() < 1e-15 && (y2 - 2.0 / 3.0).abs() < 1e-15);
        let (_, (z1, _)) = brun_projective_step(&0.0, &0.7).unwrap();
        assert_eq!(z1, 0.0);
        assert!(brun_projective_step(&0.5, &0.4).is_err());
        let (b, _) = brun_projective_step(&r(1, 5), &r(3, 5)).unwrap();
        assert_eq!(b, 2);
        let (b, _) = brun_projective_step(&r(3, 5), &r(4, 5)).unwrap();
        assert_eq!(b, 3);
    }

    #[test]
    fn brun_matrices_match_family() {
        let exp = expand(Algorithm::Brun, &[r(1, 7), r(2, 7), r(4, 7)], 50).unwrap();
        let dir = expansion_to_substitutions(&exp, Family::Brun).unwrap();
        assert_eq!(
            dir.incidence_product(0, exp.branches.len()).unwrap(),
            exp.matrix_product(exp.branches.len())
        );
        assert!(matches!(
            expansion_to_substitutions(&exp, Family::Tribonacci),
            Err(Error::FamilyMismatch)
        ));
        let empty = expand(Algorithm::Brun, &[r(0, 1), r(0, 1), r(1, 1)], 5).unwrap();
        let d = expansion_to_substitutions(&empty, Family::Brun).unwrap();
        assert!(d.get(0).is_err());
    }

    #[test]
    fn exact_additive_expansion_of_quadratic_irrationals() {
        // √2 − 1 = [2, 2, 2, …]: runs of length 2.
        let x = QuadIrr::from_ints(-1, 1, 1, 2).unwrap();
        let one = <QuadIrr as Scalar>::from_i64(1);
        let exp = expand(Algorithm::ClassicalAdditive, &[one, x], 20).unwrap();
        assert!(!exp.terminated);
        let runs = run_lengths(&exp.branches);
        assert_eq!(runs[..runs.len() - 1], vec![2; runs.len() - 1][..]);
    }

    #[test]
    fn sturmian_digits_give_directive() {
        // x = 2/5 = [2,2]: (1, x) expands as M_1^2 M_2^2 …
        let exp = expand(Algorithm::ClassicalAdditive, &[r(1, 1), r(2, 5)], 100).unwrap();
        assert_eq!(run_lengths(&exp.branches), vec![2, 2]);
        assert!(exp.terminated);
        let dir = expansion_to_substitutions(&exp, Family::Sturmian).unwrap();
        assert_eq!(dir.indices(0, 4).unwrap(), vec![0, 0, 1, 1]);
    }

    #[test]
    fn natural_extension_examples() {
        let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
        let p = NatExtPoint {
            side: Side::Right,
            a: inv_phi,
            d: 0.3,
        };
        let (k, q) = natural_extension_step(p).unwrap();
        assert_eq!(k, 1);
        assert!((q.a - inv_phi).abs() < 1e-15);
        assert!(q.in_domain());
        let back = natural_extension_inverse(k, q).unwrap();
        assert!((back.a - p.a).abs() < 1e-12 && (back.d - p.d).abs() < 1e-12);
        assert_eq!(back.side, Side::Right);
        assert!((natural_extension_jacobian(p).unwrap() - 1.0).abs() < 1e-6);
        assert!(natural_extension_step(NatExtPoint {
            side: Side::Left,
            a: 0.0,
            d: 0.1
        })
        .is_err());
    }

    fn arb_delta() -> impl Strategy<Value = (f64, f64)> {
        (0.0f64..1.0, 0.0f64..1.0).prop_map(|(a, b)| if a <= b { (a, b) } else { (b, a) })
    }

    proptest! {
        #[test]
        fn rational_reconstruction_is_exact(p in 1i64..10_000, q in 1i64..10_000) {
            let x = r(p.min(q), p.max(q));
            let digits = cf_expand_rational(&x, 200).unwrap();
            prop_assert_eq!(cf_reconstruct(&digits), x);
        }

        #[test]
        fn linear_reconstruction_exact(a in 1i64..1000, b in 1i64..1000, c in 1i64..1000) {
            let mut v = [a, b, c];
            v.sort();
            let x: Vec<BigRational> = v.iter().map(|&t| r(t, 1)).collect();
            let exp = expand(Algorithm::Brun, &x, 40).unwrap();
            let n = exp.branches.len();
            let rec = reconstruct_exact(&exp, n);
            // Same projective direction as the input.
            let s: BigRational = rec.iter().sum();
            let t: BigRational = x.iter().sum();
            for (u, w) in rec.iter().zip(&x) {
                prop_assert_eq!(u / &s, w / &t);
            }
        }

        #[test]
        fn brun_projective_matches_linear((x1, x2) in arb_delta()) {
            prop_assume!(x2 > 0.0);
            let mut p = (x1, x2);
            let mut lin = vec![x1, x2, 1.0];
            for _ in 0..5 {
                let (case, next) = brun_projective_step(&p.0, &p.1).unwrap();
                let (branch, nl) = linear_step(Algorithm::Brun, &lin).unwrap();
                prop_assert_eq!(brun_case_to_branch(case), branch);
                p = next;
                lin = vec![nl[0] / nl[2], nl[1] / nl[2], 1.0];
                prop_assert!((lin[0] - p.0).abs() < 1e-6 && (lin[1] - p.1).abs() < 1e-6);
                if p.1 == 0.0 { break; }
            }
        }

        #[test]
        fn float_reconstruction(a in 0.01f64..1.0, b in 0.01f64..1.0) {
            let x = [1.0, a.min(b) / a.max(b)];
            let exp = expand(Algorithm::ClassicalAdditive, &x, 30).unwrap();
            let n = exp.branches.len();
            let rec = reconstruct_f64(&exp, n);
            let s: f64 = rec.iter().sum();
            let t: f64 = x.iter().sum();
            prop_assert!((rec[1] / s - x[1] / t).abs() < 1e-10);
        }
    }
}
