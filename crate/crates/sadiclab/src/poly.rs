//! Integer polynomials and irreducibility over ℚ.
//!
//! Characteristic polynomials of integer matrices are monic. For such a
//! polynomial `f`:
//!
//! * an integer root (a divisor of the constant term) certifies reducibility;
//! * for degree ≤ 3, the absence of integer roots certifies irreducibility;
//! * in general, the degree patterns of `f mod p` for primes `p` where `f`
//!   stays squarefree restrict the possible degrees of rational factors; if no
//!   proper factor degree survives, `f` is irreducible.
//!
//! When neither argument applies the verdict is reported as inconclusive.

use std::collections::BTreeSet;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Polynomial with integer coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct IntPoly(Vec<BigInt>);

impl IntPoly {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.len() > 1 && coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPoly(coeffs)
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, x: &BigInt) -> BigInt {
        self.0
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * x + c)
    }

    pub fn is_monic(&self) -> bool {
        self.0.last().is_some_and(One::is_one)
    }
}

impl fmt::Display for IntPoly {
    /// Renders e.g. `x^3 - x^2 - x - 1`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut out = String::new();
        for (k, c) in self.0.iter().enumerate().rev() {
            if c.is_zero() && self.0.len() > 1 {
                continue;
            }
            let neg = c.is_negative();
            let mag = c.abs();
            if out.is_empty() {
                if neg {
                    out.push('-');
                }
            } else {
                out.push_str(if neg { " - " } else { " + " });
            }
            let coef = if mag.is_one() && k > 0 {
                String::new()
            } else {
                mag.to_string()
            };
            let var = match k {
                0 => String::new(),
                1 => "x".to_string(),
                _ => format!("x^{k}"),
            };
            out.push_str(&coef);
            out.push_str(&var);
        }
        if out.is_empty() {
            out.push('0');
        }
        f.write_str(&out)
    }
}

/// Verdict of [`irreducibility_over_q`], with a human-checkable certificate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum Irreducibility {
    Irreducible { certificate: String },
    Reducible { certificate: String },
    Inconclusive { reason: String },
}

impl Irreducibility {
    pub fn is_irreducible(&self) -> bool {
        matches!(self, Irreducibility::Irreducible { .. })
    }

    pub fn is_reducible(&self) -> bool {
        matches!(self, Irreducibility::Reducible { .. })
    }
}

const DIVISOR_SEARCH_LIMIT: u64 = 1 << 40;
const PROBE_PRIMES: [u64; 24] = [
    3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89, 97,
];

/// Decides irreducibility of a monic integer polynomial over ℚ where possible.
pub fn irreducibility_over_q(f: &IntPoly) -> Irreducibility {
    let n = f.degree();
    if !f.is_monic() {
        return Irreducibility::Inconclusive {
            reason: "polynomial is not monic".into(),
        };
    }
    if n == 0 {
        return Irreducibility::Inconclusive {
            reason: "constant polynomial".into(),
        };
    }
    if n == 1 {
        return Irreducibility::Irreducible {
            certificate: "degree 1".into(),
        };
    }
    let c0 = &f.0[0];
    if c0.is_zero() {
        return Irreducibility::Reducible {
            certificate: "x divides the polynomial (root 0)".into(),
        };
    }
    let mut roots_excluded = false;
    if let Some(bound) = c0.abs().to_u64().filter(|&b| b <= DIVISOR_SEARCH_LIMIT) {
        for d in divisors(bound) {
            for cand in [BigInt::from(d), -BigInt::from(d)] {
                if f.eval(&cand).is_zero() {
                    return Irreducibility::Reducible {
                        certificate: format!("integer root {cand}"),
                    };
                }
            }
        }
        roots_excluded = true;
        if n <= 3 {
            return Irreducibility::Irreducible {
                certificate: format!(
                    "degree {n} with no rational root (divisors of {bound} checked)"
                ),
            };
        }
    }
    // Modular degree patterns.
    let mut possible: BTreeSet<usize> = (0..=n).collect();
    let mut used = Vec::new();
    for &p in &PROBE_PRIMES {
        let fp: Vec<u64> =
            f.0.iter()
                .map(|c| c.mod_floor(&BigInt::from(p)).to_u64().unwrap_or(0))
                .collect();
        let fp = modp::trim(fp);
        if fp.len() != n + 1 || !modp::is_squarefree(&fp, p) {
            continue;
        }
        let pattern = modp::distinct_degree_pattern(&fp, p);
        let sums = subset_sums(&pattern);
        possible = possible.intersection(&sums).copied().collect();
        used.push(format!("p={p}: {pattern:?}"));
        if possible.iter().all(|&k| k == 0 || k == n) {
            return Irreducibility::Irreducible {
                certificate: format!(
                    "factor degree patterns mod primes exclude proper factors ({})",
                    used.join("; ")
                ),
            };
        }
    }
    let reason = if roots_excluded {
        format!("no rational root; modular patterns allow factor degrees {possible:?}")
    } else {
        format!("constant term too large for divisor search; modular patterns allow factor degrees {possible:?}")
    };
    Irreducibility::Inconclusive { reason }
}

fn divisors(n: u64) -> Vec<u64> {
    let mut small = Vec::new();
    let mut large = Vec::new();
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            small.push(d);
            if d * d != n {
                large.push(n / d);
            }
        }
        d += 1;
    }
    small.extend(large.into_iter().rev());
    small
}

fn subset_sums(parts: &[usize]) -> BTreeSet<usize> {
    let mut sums = BTreeSet::from([0usize]);
    for &p in parts {
        let next: Vec<usize> = sums.iter().map(|s| s + p).collect();
        sums.extend(next);
    }
    sums
}

/// Dense polynomial arithmetic over `F_p` for small primes.
mod modp {
    /// Removes leading zero coefficients.
    pub fn trim(mut f: Vec<u64>) -> Vec<u64> {
        while f.len() > 1 && f.last() == Some(&0) {
            f.pop();
        }
        f
    }

    fn inv(a: u64, p: u64) -> u64 {
        pow(a, p - 2, p)
    }

    fn pow(mut a: u64, mut e: u64, p: u64) -> u64 {
        let mut r = 1;
        a %= p;
        while e > 0 {
            if e & 1 == 1 {
                r = r * a % p;
            }
            a = a * a % p;
            e >>= 1;
        }
        r
    }

    fn is_zero(f: &[u64]) -> bool {
        f.iter().all(|&c| c == 0)
    }

    fn deg(f: &[u64]) -> usize {
        f.iter().rposition(|&c| c != 0).unwrap_or(0)
    }

    pub fn rem(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut r = trim(a.to_vec());
        let db = deg(b);
        let lead_inv = inv(b[db], p);
        while !is_zero(&r) && deg(&r) >= db {
            let dr = deg(&r);
            let factor = r[dr] * lead_inv % p;
            let shift = dr - db;
            for i in 0..=db {
                r[i + shift] = (r[i + shift] + p - factor * b[i] % p) % p;
            }
            r = trim(r);
        }
        r
    }

    fn div(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let mut r = trim(a.to_vec());
        let db = deg(b);
        let lead_inv = inv(b[db], p);
        let mut q = vec![0u64; deg(&r).saturating_sub(db) + 1];
        while !is_zero(&r) && deg(&r) >= db {
            let dr = deg(&r);
            let factor = r[dr] * lead_inv % p;
            let shift = dr - db;
            q[shift] = factor;
            for i in 0..=db {
                r[i + shift] = (r[i + shift] + p - factor * b[i] % p) % p;
            }
            r = trim(r);
        }
        trim(q)
    }

    fn mul_mod(a: &[u64], b: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        let mut out = vec![0u64; a.len() + b.len()];
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] = (out[i + j] + x * y) % p;
            }
        }
        rem(&out, m, p)
    }

    fn pow_x(e: u64, m: &[u64], p: u64) -> Vec<u64> {
        // x^e mod m by square and multiply.
        let mut result = vec![1u64];
        let mut base = rem(&[0, 1], m, p);
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                result = mul_mod(&result, &base, m, p);
            }
            base = mul_mod(&base, &base, m, p);
            e >>= 1;
        }
        result
    }

    fn compose_pow_p(h: &[u64], m: &[u64], p: u64) -> Vec<u64> {
        // h^p mod m
        let mut result = vec![1u64];
        let mut base = h.to_vec();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = mul_mod(&result, &base, m, p);
            }
            base = mul_mod(&base, &base, m, p);
            e >>= 1;
        }
        result
    }

    pub fn gcd(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let (mut a, mut b) = (trim(a.to_vec()), trim(b.to_vec()));
        while !is_zero(&b) {
            let r = rem(&a, &b, p);
            a = b;
            b = r;
        }
        // normalise to monic
        let d = deg(&a);
        let li = inv(a[d], p);
        a.iter().map(|&c| c * li % p).collect()
    }

    fn derivative(f: &[u64], p: u64) -> Vec<u64> {
        trim(
            f.iter()
                .enumerate()
                .skip(1)
                .map(|(i, &c)| (i as u64 % p) * c % p)
                .collect(),
        )
    }

    pub fn is_squarefree(f: &[u64], p: u64) -> bool {
        let d = derivative(f, p);
        if is_zero(&d) {
            return false;
        }
        deg(&gcd(f, &d, p)) == 0
    }

    fn sub(a: &[u64], b: &[u64], p: u64) -> Vec<u64> {
        let n = a.len().max(b.len());
        let mut out = vec![0u64; n];
        for (i, slot) in out.iter_mut().enumerate() {
            let x = a.get(i).copied().unwrap_or(0);
            let y = b.get(i).copied().unwrap_or(0);
            *slot = (x + p - y) % p;
        }
        trim(out)
    }

    /// Degrees of the irreducible factors of a squarefree `f` over `F_p`
    /// (distinct-degree factorisation).
    pub fn distinct_degree_pattern(f: &[u64], p: u64) -> Vec<usize> {
        let mut rest = trim(f.to_vec());
        let mut pattern = Vec::new();
        let mut h = pow_x(p, &rest, p);
        let mut i = 1;
        while deg(&rest) >= 2 * i {
            let g = gcd(&rest, &sub(&h, &[0, 1], p), p);
            let dg = deg(&g);
            if dg > 0 {
                pattern.extend(std::iter::repeat(i).take(dg / i));
                rest = div(&rest, &g, p);
                h = rem(&h, &rest, p);
            }
            i += 1;
            h = compose_pow_p(&h, &rest, p);
        }
        if deg(&rest) > 0 {
            pattern.push(deg(&rest));
        }
        pattern
    }
}
