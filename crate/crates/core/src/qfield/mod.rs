//! Exact arithmetic in quadratic towers 𝕃 = 𝕂(√τ) over 𝕂 = ℚ or ℚ(√−D),
//! integer number-theory utilities, and rigorous embedding into complex balls.

pub mod ball;
pub mod radical;

pub use ball::{atan2, escalate, ln2, pi, Ball, RealBall, PRECISION_CAP};

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Trial-division bound; residues past it are resolved by exact primality
/// testing where possible and otherwise reported as a factoring failure.
const TRIAL_LIMIT: u64 = 1 << 21;

fn mulmod_u64(a: u64, b: u64, m: u64) -> u64 {
    ((a as u128 * b as u128) % m as u128) as u64
}

fn powmod_u64(mut b: u64, mut e: u64, m: u64) -> u64 {
    let mut acc: u64 = 1 % m;
    b %= m;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod_u64(acc, b, m);
        }
        b = mulmod_u64(b, b, m);
        e >>= 1;
    }
    acc
}

/// Deterministic Miller-Rabin, valid for all u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for p in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == p {
            return true;
        }
        if n % p == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut s = 0u32;
    while d & 1 == 0 {
        d >>= 1;
        s += 1;
    }
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod_u64(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mulmod_u64(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

fn factor_u64(mut n: u64) -> Result<Vec<(u64, u32)>> {
    debug_assert!(n >= 1);
    let mut out = Vec::new();
    for p in std::iter::once(2u64).chain((3..TRIAL_LIMIT).step_by(2)) {
        if p * p > n {
            break;
        }
        if n % p == 0 {
            let mut e = 0u32;
            while n % p == 0 {
                n /= p;
                e += 1;
            }
            out.push((p, e));
        }
    }
    if n > 1 {
        if n < TRIAL_LIMIT * TRIAL_LIMIT || is_prime_u64(n) {
            out.push((n, 1));
        } else {
            let s = (n as f64).sqrt() as u64;
            let s = [s.saturating_sub(1), s, s + 1]
                .into_iter()
                .find(|c| c.checked_mul(*c) == Some(n));
            match s {
                Some(root) if is_prime_u64(root) => out.push((root, 2)),
                _ => {
                    return Err(Error::FactorLimit(format!(
                        "residue {n} not factorable by trial division to {TRIAL_LIMIT}"
                    )))
                }
            }
        }
    }
    Ok(out)
}

/// Complete prime factorization of |n| for nonzero n.
pub fn factor(n: &BigInt) -> Result<Vec<(BigInt, u32)>> {
    if n.is_zero() {
        return Err(Error::Domain("factor(0)".into()));
    }
    if let Some(v) = n.magnitude().to_u64() {
        return Ok(factor_u64(v)?
            .into_iter()
            .map(|(p, e)| (BigInt::from(p), e))
            .collect());
    }
    let mut m = BigInt::from(n.magnitude().to_owned());
    let mut out: Vec<(BigInt, u32)> = Vec::new();
    for p in std::iter::once(2u64).chain((3..TRIAL_LIMIT).step_by(2)) {
        let pb = BigInt::from(p);
        if (&pb * &pb) > m {
            break;
        }
        if (&m % &pb).is_zero() {
            let mut e = 0u32;
            while (&m % &pb).is_zero() {
                m /= &pb;
                e += 1;
            }
            out.push((pb, e));
        }
        if let Some(v) = m.to_u64() {
            for (q, e) in factor_u64(v)? {
                out.push((BigInt::from(q), e));
            }
            out.sort();
            return Ok(out);
        }
    }
    if m.is_one() {
        return Ok(out);
    }
    Err(Error::FactorLimit(format!(
        "residue with {} bits not factorable by trial division",
        m.bits()
    )))
}

/// Squarefree kernel, preserving sign: the unique squarefree integer whose
/// quotient into n is a positive perfect square.
pub fn core(n: &BigInt) -> Result<BigInt> {
    if n.is_zero() {
        return Err(Error::Domain("core(0)".into()));
    }
    let mag = n.magnitude().to_owned();
    let mut m = match mag.to_u64() {
        Some(v) => v,
        None => {
            // Big path: full factorization (honest failure beyond the limit).
            let mut c = BigInt::one();
            for (p, e) in factor(n)? {
                if e % 2 == 1 {
                    c *= p;
                }
            }
            return Ok(if n.is_negative() { -c } else { c });
        }
    };
    let mut c: u64 = 1;
    for p in std::iter::once(2u64).chain((3..TRIAL_LIMIT).step_by(2)) {
        if p * p > m {
            break;
        }
        if m % p == 0 {
            let mut e = 0u32;
            while m % p == 0 {
                m /= p;
                e += 1;
            }
            if e % 2 == 1 {
                c *= p;
            }
        }
    }
    if m > 1 {
        // No prime factor below TRIAL_LIMIT remains. A perfect square here is
        // a prime square (even exponent, drops out); any non-square residue
        // below TRIAL_LIMIT^3 is squarefree (p^2 q would exceed it).
        let s = (m as f64).sqrt() as u64;
        let is_square = [s.saturating_sub(1), s, s + 1]
            .iter()
            .any(|c| c.checked_mul(*c) == Some(m));
        if !is_square {
            if m < TRIAL_LIMIT.saturating_mul(TRIAL_LIMIT).saturating_mul(TRIAL_LIMIT) {
                c = c
                    .checked_mul(m)
                    .ok_or_else(|| Error::FactorLimit("core overflow".into()))?;
            } else {
                return Err(Error::FactorLimit(format!(
                    "residue {m} too large to certify squarefree"
                )));
            }
        }
    }
    let c = BigInt::from(c);
    Ok(if n.is_negative() { -c } else { c })
}

/// Splits n = s·k² with s squarefree (same sign as n) and k ≥ 1.
pub fn square_split(n: &BigInt) -> Result<(BigInt, BigInt)> {
    let s = core(n)?;
    let q = n / &s;
    debug_assert!(q.is_positive());
    let k = q.sqrt();
    debug_assert_eq!(&k * &k, q);
    Ok((s, k))
}

/// p-adic valuation of a nonzero rational.
pub fn val_p(p: u64, x: &BigRational) -> Result<i64> {
    if p < 2 || !is_prime_u64(p) {
        return Err(Error::Input(format!("val_p requires a prime, got {p}")));
    }
    if x.is_zero() {
        return Err(Error::Domain("val_p(0) is +infinity".into()));
    }
    let pb = BigInt::from(p);
    let count = |v: &BigInt| -> i64 {
        let mut v = v.clone();
        let mut e = 0i64;
        while (&v % &pb).is_zero() {
            v /= &pb;
            e += 1;
        }
        e
    };
    Ok(count(x.numer()) - count(x.denom()))
}

/// The coefficient field 𝕂: the rationals or an imaginary quadratic field.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub struct BaseField {
    disc: i64,
}

impl BaseField {
    pub fn rational() -> Self {
        BaseField { disc: 0 }
    }

    /// 𝕂 = ℚ(√disc) for a negative squarefree disc.
    pub fn imaginary_quadratic(disc: i64) -> Result<Self> {
        if disc >= 0 {
            return Err(Error::Input(format!(
                "imaginary quadratic field needs a negative radicand, got {disc}"
            )));
        }
        let c = core(&BigInt::from(disc))?;
        if c != BigInt::from(disc) {
            return Err(Error::Input(format!("radicand {disc} is not squarefree")));
        }
        Ok(BaseField { disc })
    }

    pub fn is_rational(&self) -> bool {
        self.disc == 0
    }

    pub fn disc(&self) -> i64 {
        self.disc
    }
}

fn rat_int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

/// An element a + b√disc of 𝕂 (b = 0 when 𝕂 = ℚ).
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct KElem {
    base: BaseField,
    a: BigRational,
    b: BigRational,
}

impl KElem {
    pub fn new(base: BaseField, a: BigRational, b: BigRational) -> Result<Self> {
        if base.is_rational() && !b.is_zero() {
            return Err(Error::Input(
                "irrational coordinate over the rational base field".into(),
            ));
        }
        Ok(KElem { base, a, b })
    }

    pub fn from_rational(base: BaseField, a: BigRational) -> Self {
        KElem { base, a, b: BigRational::zero() }
    }

    pub fn zero(base: BaseField) -> Self {
        Self::from_rational(base, BigRational::zero())
    }

    pub fn one(base: BaseField) -> Self {
        Self::from_rational(base, BigRational::one())
    }

    pub fn base(&self) -> BaseField {
        self.base
    }

    pub fn a(&self) -> &BigRational {
        &self.a
    }

    pub fn b(&self) -> &BigRational {
        &self.b
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }

    pub fn is_rational(&self) -> bool {
        self.b.is_zero()
    }

    pub fn rational_value(&self) -> Option<&BigRational> {
        if self.b.is_zero() {
            Some(&self.a)
        } else {
            None
        }
    }

    fn assert_ctx(&self, other: &Self) {
        assert_eq!(self.base, other.base, "mixed base fields");
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        KElem { base: self.base, a: &self.a + &other.a, b: &self.b + &other.b }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        KElem { base: self.base, a: &self.a - &other.a, b: &self.b - &other.b }
    }

    pub fn neg(&self) -> Self {
        KElem { base: self.base, a: -self.a.clone(), b: -self.b.clone() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        let d = rat_int(self.base.disc);
        KElem {
            base: self.base,
            a: &self.a * &other.a + &self.b * &other.b * &d,
            b: &self.a * &other.b + &self.b * &other.a,
        }
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        KElem { base: self.base, a: &self.a * q, b: &self.b * q }
    }

    /// Complex conjugation within 𝕂 (identity when 𝕂 = ℚ).
    pub fn conj_base(&self) -> Self {
        KElem { base: self.base, a: self.a.clone(), b: -self.b.clone() }
    }

    /// Field norm to ℚ: a² − b²·disc.
    pub fn norm_q(&self) -> BigRational {
        &self.a * &self.a - &self.b * &self.b * rat_int(self.base.disc)
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm_q();
        if n.is_zero() {
            return Err(Error::Domain("division by zero in 𝕂".into()));
        }
        Ok(self.conj_base().scale(&n.recip()))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Algebraic integer test in 𝕂.
    pub fn is_integer(&self) -> bool {
        if self.b.is_zero() {
            return self.a.is_integer();
        }
        (&self.a * rat_int(2)).is_integer() && self.norm_q().is_integer()
    }

    /// Enclosure of the complex value at the given working precision.
    fn embed_wp(&self, wp: u32) -> Ball {
        let re = RealBall::from_rational(&self.a, wp);
        if self.b.is_zero() {
            return Ball::from_real(&re);
        }
        let d = RealBall::from_i64(-self.base.disc, wp);
        let root = d.sqrt().expect("positive radicand");
        let im = RealBall::from_rational(&self.b, wp).mul(&root);
        Ball::from_re_im(&re, &im)
    }
}

impl fmt::Display for KElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.b.is_zero() {
            write!(f, "{}", self.a)
        } else {
            write!(f, "{} + {}*sqrt({})", self.a, self.b, self.base.disc)
        }
    }
}

/// An element x + y√τ of 𝕃 = 𝕂(√τ), stored exactly.
///
/// Rational τ is normalized to a squarefree integer with the square part
/// folded into y, so equal values within one context have equal
/// representations. Arithmetic panics on mixed contexts (different base or τ):
/// that is a programming error, not a data condition.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct TowerElem {
    base: BaseField,
    tau: KElem,
    x: KElem,
    y: KElem,
}

impl TowerElem {
    pub fn new(base: BaseField, tau: KElem, x: KElem, y: KElem) -> Result<Self> {
        if tau.is_zero() {
            return Err(Error::Input("τ = 0 does not define a tower".into()));
        }
        assert_eq!(tau.base(), base, "mixed base fields");
        assert_eq!(x.base(), base, "mixed base fields");
        assert_eq!(y.base(), base, "mixed base fields");
        let (tau, x, y) = match tau.rational_value() {
            None => (tau, x, y),
            Some(t) => {
                // y√(p/q) = (y/q)√(pq); then pq = s·k² with s squarefree.
                let p = t.numer().clone();
                let q = t.denom().clone();
                let (s, k) = square_split(&(p * &q))?;
                let y = y.scale(&BigRational::new(k, q));
                let tau = KElem::from_rational(base, BigRational::from_integer(s.clone()));
                if s.is_one() {
                    // Trivial tower: fold √1 = 1.
                    return Ok(TowerElem { base, tau, x: x.add(&y), y: KElem::zero(base) });
                }
                if !base.is_rational() && s == BigInt::from(base.disc()) {
                    // √τ = √disc lies in 𝕂 itself.
                    let root = KElem::new(base, BigRational::zero(), BigRational::one())?;
                    return Ok(TowerElem {
                        base,
                        tau,
                        x: x.add(&y.mul(&root)),
                        y: KElem::zero(base),
                    });
                }
                (tau, x, y)
            }
        };
        Ok(TowerElem { base, tau, x, y })
    }

    pub fn from_k(base: BaseField, tau: KElem, x: KElem) -> Result<Self> {
        let zero = KElem::zero(base);
        Self::new(base, tau, x, zero)
    }

    pub fn from_rational(base: BaseField, tau: KElem, q: BigRational) -> Result<Self> {
        Self::from_k(base, tau, KElem::from_rational(base, q))
    }

    /// √τ itself as a tower element.
    pub fn sqrt_tau(base: BaseField, tau: KElem) -> Result<Self> {
        let zero = KElem::zero(base);
        let one = KElem::one(base);
        Self::new(base, tau, zero, one)
    }

    pub fn base(&self) -> BaseField {
        self.base
    }

    pub fn tau(&self) -> &KElem {
        &self.tau
    }

    pub fn x(&self) -> &KElem {
        &self.x
    }

    pub fn y(&self) -> &KElem {
        &self.y
    }

    pub fn is_zero(&self) -> bool {
        self.x.is_zero() && self.y.is_zero()
    }

    pub fn is_in_base(&self) -> bool {
        self.y.is_zero()
    }

    pub fn rational_value(&self) -> Option<&BigRational> {
        if self.y.is_zero() {
            self.x.rational_value()
        } else {
            None
        }
    }

    fn assert_ctx(&self, other: &Self) {
        assert_eq!(self.base, other.base, "mixed base fields");
        assert_eq!(self.tau, other.tau, "mixed towers (different τ)");
    }

    fn raw(&self, x: KElem, y: KElem) -> Self {
        TowerElem { base: self.base, tau: self.tau.clone(), x, y }
    }

    pub fn zero_like(&self) -> Self {
        self.raw(KElem::zero(self.base), KElem::zero(self.base))
    }

    pub fn one_like(&self) -> Self {
        self.raw(KElem::one(self.base), KElem::zero(self.base))
    }

    pub fn add(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        self.raw(self.x.add(&other.x), self.y.add(&other.y))
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        self.raw(self.x.sub(&other.x), self.y.sub(&other.y))
    }

    pub fn neg(&self) -> Self {
        self.raw(self.x.neg(), self.y.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        self.assert_ctx(other);
        let x = self.x.mul(&other.x).add(&self.y.mul(&other.y).mul(&self.tau));
        let y = self.x.mul(&other.y).add(&self.y.mul(&other.x));
        self.raw(x, y)
    }

    pub fn scale_k(&self, k: &KElem) -> Self {
        self.raw(self.x.mul(k), self.y.mul(k))
    }

    pub fn scale_rat(&self, q: &BigRational) -> Self {
        self.raw(self.x.scale(q), self.y.scale(q))
    }

    /// Galois conjugate over 𝕂: x + y√τ ↦ x − y√τ.
    pub fn conj(&self) -> Self {
        self.raw(self.x.clone(), self.y.neg())
    }

    /// Relative trace to 𝕂.
    pub fn trace_k(&self) -> KElem {
        self.x.scale(&rat_int(2))
    }

    /// Relative norm to 𝕂: x² − y²τ.
    pub fn norm_k(&self) -> KElem {
        self.x.mul(&self.x).sub(&self.y.mul(&self.y).mul(&self.tau))
    }

    pub fn inv(&self) -> Result<Self> {
        let n = self.norm_k();
        if n.is_zero() {
            return Err(Error::Domain("division by zero (or zero divisor) in 𝕃".into()));
        }
        let ninv = n.inv()?;
        Ok(self.conj().scale_k(&ninv))
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        if k == 0 {
            return self.one_like();
        }
        let mut base = self.clone();
        let mut acc: Option<TowerElem> = None;
        let mut e = k;
        loop {
            if e & 1 == 1 {
                acc = Some(match acc {
                    None => base.clone(),
                    Some(a) => a.mul(&base),
                });
            }
            e >>= 1;
            if e == 0 {
                break;
            }
            base = base.mul(&base);
        }
        acc.unwrap()
    }

    /// Algebraic integer test via exact trace/norm chains down the tower.
    pub fn is_alg_integer(&self) -> bool {
        if self.y.is_zero() {
            return self.x.is_integer();
        }
        self.trace_k().is_integer() && self.norm_k().is_integer()
    }

    /// Exact sign for real elements: base ℚ with τ > 0 rational (or y = 0 and
    /// x rational). Errors when the value is not certainly real.
    pub fn exact_sign_real(&self) -> Result<Ordering> {
        if self.y.is_zero() {
            return match self.x.rational_value() {
                Some(q) => Ok(q.cmp(&BigRational::zero())),
                None => Err(Error::Domain("sign of a complex value".into())),
            };
        }
        let tau = self
            .tau
            .rational_value()
            .ok_or_else(|| Error::Domain("sign with irrational τ".into()))?;
        if !tau.is_positive() || !self.base.is_rational() {
            return Err(Error::Domain("sign of a complex value".into()));
        }
        let x = self.x.rational_value().expect("rational base");
        let y = self.y.rational_value().expect("rational base");
        // sign(x + y√τ): compare x² vs y²τ on mixed-sign coordinates.
        let sx = x.cmp(&BigRational::zero());
        let sy = y.cmp(&BigRational::zero());
        if x.is_zero() {
            return Ok(sy);
        }
        if y.is_zero() || sx == sy {
            return Ok(sx);
        }
        let lhs = x * x;
        let rhs = y * y * tau;
        Ok(match lhs.cmp(&rhs) {
            Ordering::Greater => sx,
            Ordering::Less => sy,
            Ordering::Equal => Ordering::Equal,
        })
    }

    /// Rigorous enclosure of the complex value with the principal convention
    /// for √τ and √disc.
    pub fn embed(&self, precision_bits: u32) -> Result<Ball> {
        if precision_bits < 32 {
            return Err(Error::Input("embed requires at least 32 bits".into()));
        }
        let wp = precision_bits + 8;
        let xb = self.x.embed_wp(wp);
        if self.y.is_zero() {
            return Ok(xb.rescale(precision_bits));
        }
        let root = sqrt_k_ball(&self.tau, wp)?;
        let yb = self.y.embed_wp(wp);
        Ok(xb.add(&yb.mul(&root)).rescale(precision_bits))
    }
}

impl fmt::Display for TowerElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.y.is_zero() {
            write!(f, "{}", self.x)
        } else {
            write!(f, "({}) + ({})*sqrt({})", self.x, self.y, self.tau)
        }
    }
}

/// Principal square root of a 𝕂-element as a ball at working precision.
///
/// For a complex input a + bi the exact-sign formulas
/// Re = √((ρ+a)/2), Im = sign(b)·√((ρ−a)/2) with ρ = |z| avoid any branch
/// decision from inexact data: sign(b) is read off the exact representation.
pub fn sqrt_k_ball(k: &KElem, wp: u32) -> Result<Ball> {
    if let Some(t) = k.rational_value() {
        let mag = RealBall::from_rational(&t.abs(), wp).sqrt()?;
        return Ok(if t.is_negative() {
            Ball::from_re_im(&RealBall::zero(wp), &mag)
        } else {
            Ball::from_real(&mag)
        });
    }
    // z = a + b√disc with b ≠ 0; ρ² = a² − b²·disc exactly.
    let rho2 = k.norm_q();
    let rho = RealBall::from_rational(&rho2, wp).sqrt()?;
    let a = RealBall::from_rational(k.a(), wp);
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    let re = rho.add(&a).mul(&RealBall::from_rational(&half, wp)).sqrt()?;
    let im_mag = rho.sub(&a).mul(&RealBall::from_rational(&half, wp)).sqrt()?;
    let im = if k.b().is_negative() { im_mag.neg() } else { im_mag };
    Ok(Ball::from_re_im(&re, &im))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    fn q_tower(tau: i64, x: BigRational, y: BigRational) -> TowerElem {
        let base = BaseField::rational();
        TowerElem::new(
            base,
            KElem::from_rational(base, rat(tau, 1)),
            KElem::from_rational(base, x),
            KElem::from_rational(base, y),
        )
        .unwrap()
    }

    #[test]
    fn squarefree_kernel_examples() {
        assert_eq!(core(&big(1)).unwrap(), big(1));
        assert_eq!(core(&big(12)).unwrap(), big(3));
        assert_eq!(core(&big(-18)).unwrap(), big(-2));
        assert_eq!(core(&big(360)).unwrap(), big(10));
        assert!(core(&big(0)).is_err());
    }

    #[test]
    fn valuation_examples() {
        assert_eq!(val_p(3, &rat(18, 1)).unwrap(), 2);
        assert_eq!(val_p(2, &rat(5, 8)).unwrap(), -3);
        assert_eq!(val_p(5, &rat(7, 1)).unwrap(), 0);
        assert!(val_p(4, &rat(7, 1)).is_err());
        assert!(val_p(5, &rat(0, 1)).is_err());
    }

    #[test]
    fn conjugation_examples() {
        let e = q_tower(5, rat(3, 1), rat(2, 1));
        let c = e.conj();
        assert_eq!(c.y().rational_value().unwrap(), &rat(-2, 1));
        assert_eq!(c.conj(), e);

        let fixed = q_tower(5, rat(7, 1), rat(0, 1));
        assert_eq!(fixed.conj(), fixed);

        let n = q_tower(-3, rat(5, 2), rat(1, 2));
        assert_eq!(n.conj().y().rational_value().unwrap(), &rat(-1, 2));
    }

    #[test]
    fn algebraic_integer_examples() {
        assert!(q_tower(5, rat(1, 2), rat(1, 2)).is_alg_integer());
        assert!(!q_tower(2, rat(1, 2), rat(1, 2)).is_alg_integer());
        assert!(q_tower(-3, rat(0, 1), rat(1, 1)).is_alg_integer());
        assert!(q_tower(-3, rat(5, 2), rat(1, 2)).is_alg_integer());
        assert!(!q_tower(-3, rat(1, 2), rat(1, 1)).is_alg_integer());
    }

    #[test]
    fn tower_normalization_folds_square_parts() {
        // √12 = 2√3
        let e = q_tower(12, rat(0, 1), rat(1, 1));
        assert_eq!(e.tau().rational_value().unwrap(), &rat(3, 1));
        assert_eq!(e.y().rational_value().unwrap(), &rat(2, 1));
        // √(9/4) = 3/2 folds into the base coordinate
        let f = q_tower(9, rat(1, 1), rat(1, 2)).scale_rat(&rat(1, 1));
        assert!(f.is_in_base());
        assert_eq!(f.rational_value().unwrap(), &rat(5, 2));
    }

    #[test]
    fn embedding_meets_radius_contract() {
        // (5+√−3)/2 at 128 bits: radius within 2^{-124}·(1+|e|)
        let e = q_tower(-3, rat(5, 2), rat(1, 2));
        let b = e.embed(128).unwrap();
        assert!(b.re_ball().contains_rational(&rat(5, 2)));
        let im = b.im_ball();
        // √3/2 = 0.8660254037844386...
        assert_eq!(im.gt_rational(&rat(86602540, 100000000)), Some(true));
        assert_eq!(im.gt_rational(&rat(86602541, 100000000)), Some(false));
        let bound = RealBall::new_raw(big(0), big(1) << 4u32, 128); // 2^{-124}
        let rad = RealBall::new_raw(big(0), b.radius_scaled().clone(), 128);
        assert!(rad.rad_scaled() <= bound.rad_scaled());

        let zero = q_tower(5, rat(0, 1), rat(0, 1)).embed(64).unwrap();
        assert!(zero.is_exact());

        let g = q_tower(5, rat(3, 1), rat(2, 1)).embed(64).unwrap();
        // 3 + 2√5 = 7.4721359549995793...
        let re = g.re_ball();
        assert_eq!(re.gt_rational(&rat(74721359, 10000000)), Some(true));
        assert_eq!(re.gt_rational(&rat(74721360, 10000000)), Some(false));
        assert!(g.radius_scaled() <= &(big(1) << 4u32));
    }

    #[test]
    fn exact_sign_of_real_quadratic_values() {
        assert_eq!(
            q_tower(5, rat(3, 1), rat(-1, 1)).exact_sign_real().unwrap(),
            Ordering::Greater
        ); // 3 − √5 > 0
        assert_eq!(
            q_tower(5, rat(2, 1), rat(-1, 1)).exact_sign_real().unwrap(),
            Ordering::Less
        ); // 2 − √5 < 0
        assert_eq!(
            q_tower(4, rat(-2, 1), rat(1, 1)).exact_sign_real().unwrap(),
            Ordering::Equal
        ); // −2 + √4 = 0
        assert!(q_tower(-3, rat(1, 1), rat(1, 1)).exact_sign_real().is_err());
    }

    #[test]
    fn tower_field_axioms_spot_checks() {
        let e = q_tower(5, rat(3, 7), rat(-2, 3));
        let f = q_tower(5, rat(-1, 2), rat(4, 5));
        let prod = e.mul(&f);
        let back = prod.div(&f).unwrap();
        assert_eq!(back, e);
        assert_eq!(e.mul(&e.inv().unwrap()), e.one_like());
        // Conjugation is a homomorphism.
        assert_eq!(e.mul(&f).conj(), e.conj().mul(&f.conj()));
        assert_eq!(e.add(&f).conj(), e.conj().add(&f.conj()));
        // Norm multiplicativity.
        assert_eq!(
            prod.norm_k().a(),
            &(e.norm_k().a() * f.norm_k().a())
        );
    }

    #[test]
    fn imaginary_quadratic_base_arithmetic() {
        let base = BaseField::imaginary_quadratic(-7).unwrap();
        let tau = KElem::new(base, rat(2, 1), rat(1, 1)).unwrap(); // 2 + √−7
        let x = KElem::new(base, rat(1, 2), rat(1, 2)).unwrap();
        let y = KElem::one(base);
        let e = TowerElem::new(base, tau.clone(), x, y).unwrap();
        let n = e.norm_k();
        // x² − y²τ with x = (1+√−7)/2: x² = (1 + 2√−7 − 7)/4 = (−6+2√−7)/4
        assert_eq!(n.a(), &(rat(-3, 2) - rat(2, 1)));
        assert_eq!(n.b(), &(rat(1, 2) - rat(1, 1)));
        assert!(BaseField::imaginary_quadratic(-4).is_err());
        assert!(BaseField::imaginary_quadratic(3).is_err());
    }

    #[test]
    fn principal_power_spec_values() {
        let eight = Ball::from_rational(&rat(8, 1), 96);
        let r = eight.principal_power(2, 3).unwrap();
        assert!(r.re_ball().contains_rational(&rat(4, 1)));
        assert!(r.im_ball().contains_rational(&rat(0, 1)));

        let neg_eight = Ball::from_rational(&rat(-8, 1), 96);
        let c = neg_eight.principal_power(1, 3).unwrap();
        assert!(c.re_ball().contains_rational(&rat(1, 1)));
        // √3 = 1.7320508...
        assert_eq!(c.im_ball().gt_rational(&rat(17320508, 10000000)), Some(true));
        assert_eq!(c.im_ball().gt_rational(&rat(17320509, 10000000)), Some(false));
        let cubed = c.pow_u32(3);
        assert!(cubed.overlaps(&neg_eight));
    }

    #[test]
    fn embed_respects_conjugation_over_q() {
        let e = q_tower(7, rat(2, 3), rat(5, 4));
        let b1 = e.conj().embed(96).unwrap();
        let b2 = e.embed(96).unwrap();
        // Over ℚ with real τ the conjugate embedding is 2x − value.
        let twox = Ball::from_rational(&rat(4, 3), 96);
        assert!(b1.overlaps(&twox.sub(&b2)));
        // Complex τ: conj embeds to the complex conjugate.
        let n = q_tower(-3, rat(5, 2), rat(1, 2));
        let c1 = n.conj().embed(96).unwrap();
        let c2 = n.embed(96).unwrap().conj();
        assert!(c1.overlaps(&c2));
    }
}
