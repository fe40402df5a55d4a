//! Fixed-point ball arithmetic: rigorous midpoint/radius enclosures at an
//! explicit binary precision.
//!
//! A [`RealBall`] stores a real enclosure `[mid - rad, mid + rad] / 2^prec`
//! with integer `mid` and nonnegative integer `rad`. A [`Ball`] is a complex
//! disc `|z - (re_mid + i*im_mid)/2^prec| <= radius/2^prec`. Every operation
//! rounds midpoints to nearest and accounts for that rounding by enlarging the
//! radius, so the result always encloses the exact image of the inputs. Radius
//! arithmetic always rounds up.
//!
//! Binary operations align operands to the smaller precision. Nothing here
//! guesses: comparisons return `None` when the enclosures overlap, and branch
//! decisions that cannot be certified fail with `Error::PrecisionLoss` so the
//! caller can retry at doubled precision (see [`escalate`]).

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Hard cap for precision escalation. Beyond this the answer is reported as
/// indeterminate rather than guessed.
pub const PRECISION_CAP: u32 = 1 << 16;

/// Doubles the working precision until `f` certifies an answer or the cap is
/// reached. `f` returns `Ok(None)` when the current precision was not enough
/// to decide rigorously.
pub fn escalate<T>(start: u32, mut f: impl FnMut(u32) -> Result<Option<T>>) -> Result<T> {
    let mut p = start.max(32);
    loop {
        match f(p)? {
            Some(v) => return Ok(v),
            None => {
                if p >= PRECISION_CAP {
                    return Err(Error::PrecisionLoss(format!(
                        "undecided at precision cap {PRECISION_CAP}"
                    )));
                }
                p = (p * 2).min(PRECISION_CAP);
            }
        }
    }
}

/// Shift right `k` bits rounding to nearest, ties to even. Returns the shifted
/// value and whether the result is inexact.
fn shr_round(x: &BigInt, k: u32) -> (BigInt, bool) {
    if k == 0 {
        return (x.clone(), false);
    }
    let q: BigInt = x >> k;
    let rem: BigInt = x - (&q << k); // 0 <= rem < 2^k (shift floors)
    if rem.is_zero() {
        return (q, false);
    }
    let half: BigInt = BigInt::one() << (k - 1);
    let up = match rem.cmp(&half) {
        Ordering::Greater => true,
        Ordering::Less => false,
        Ordering::Equal => q.is_odd(),
    };
    (if up { q + 1 } else { q }, true)
}

/// Shift right `k` bits rounding up. For radius bookkeeping (`x >= 0`).
fn shr_ceil(x: &BigInt, k: u32) -> BigInt {
    if k == 0 {
        return x.clone();
    }
    let mask = (BigInt::one() << k) - 1;
    if (x & &mask).is_zero() {
        x >> k
    } else {
        (x >> k) + 1
    }
}

/// Nearest-integer division (ties away from zero). `b != 0`.
fn round_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if (&r * 2i32).magnitude() >= b.magnitude() {
        if (a.sign() == b.sign()) || r.is_zero() {
            q + 1
        } else {
            q - 1
        }
    } else {
        q
    }
}

/// Ceiling division for nonnegative `a`, positive `b`.
fn ceil_div(a: &BigInt, b: &BigInt) -> BigInt {
    let (q, r) = a.div_rem(b);
    if r.is_zero() {
        q
    } else {
        q + 1
    }
}

fn isqrt_floor(v: &BigInt) -> BigInt {
    debug_assert!(!v.is_negative());
    v.sqrt()
}

fn isqrt_ceil(v: &BigInt) -> BigInt {
    let s = isqrt_floor(v);
    if &(&s * &s) < v {
        s + 1
    } else {
        s
    }
}

/// A rigorous enclosure of a single real number.
#[derive(Clone, Debug)]
pub struct RealBall {
    mid: BigInt,
    rad: BigInt,
    prec: u32,
}

impl RealBall {
    pub fn new_raw(mid: BigInt, rad: BigInt, prec: u32) -> Self {
        debug_assert!(!rad.is_negative());
        RealBall { mid, rad, prec }
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn mid_scaled(&self) -> &BigInt {
        &self.mid
    }

    pub fn rad_scaled(&self) -> &BigInt {
        &self.rad
    }

    pub fn zero(prec: u32) -> Self {
        RealBall { mid: BigInt::zero(), rad: BigInt::zero(), prec }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_i64(1, prec)
    }

    pub fn from_i64(v: i64, prec: u32) -> Self {
        RealBall { mid: BigInt::from(v) << prec, rad: BigInt::zero(), prec }
    }

    pub fn from_bigint(v: &BigInt, prec: u32) -> Self {
        RealBall { mid: v << prec, rad: BigInt::zero(), prec }
    }

    /// Encloses `num/den`; exact (radius zero) when `den` is a power of two
    /// reachable at this precision.
    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        let scaled: BigInt = q.numer() << prec;
        let (mid, inexact) = {
            let (d, r) = scaled.div_rem(q.denom());
            if r.is_zero() {
                (d, false)
            } else {
                (round_div(&scaled, q.denom()), true)
            }
        };
        let rad = if inexact { BigInt::one() } else { BigInt::zero() };
        RealBall { mid, rad, prec }
    }

    pub fn is_exact(&self) -> bool {
        self.rad.is_zero()
    }

    /// Lower/upper bounds as exact rationals.
    pub fn lo_rational(&self) -> BigRational {
        BigRational::new(&self.mid - &self.rad, BigInt::one() << self.prec)
    }

    pub fn hi_rational(&self) -> BigRational {
        BigRational::new(&self.mid + &self.rad, BigInt::one() << self.prec)
    }

    fn lo_scaled(&self) -> BigInt {
        &self.mid - &self.rad
    }

    fn hi_scaled(&self) -> BigInt {
        &self.mid + &self.rad
    }

    /// Re-represents at precision `prec` (exact when raising).
    pub fn rescale(&self, prec: u32) -> Self {
        match prec.cmp(&self.prec) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let k = prec - self.prec;
                RealBall { mid: &self.mid << k, rad: &self.rad << k, prec }
            }
            Ordering::Less => {
                let k = self.prec - prec;
                let (mid, inexact) = shr_round(&self.mid, k);
                let mut rad = shr_ceil(&self.rad, k);
                if inexact {
                    rad += 1;
                }
                RealBall { mid, rad, prec }
            }
        }
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let p = self.prec.min(other.prec);
        (self.rescale(p), other.rescale(p))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        RealBall { mid: a.mid + b.mid, rad: a.rad + b.rad, prec: a.prec }
    }

    pub fn neg(&self) -> Self {
        RealBall { mid: -&self.mid, rad: self.rad.clone(), prec: self.prec }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let p = a.prec;
        let (mid, inexact) = shr_round(&(&a.mid * &b.mid), p);
        let err = a.mid.magnitude().to_owned() * b.rad.magnitude()
            + b.mid.magnitude().to_owned() * a.rad.magnitude()
            + a.rad.magnitude().to_owned() * b.rad.magnitude();
        let mut rad = shr_ceil(&BigInt::from(err), p);
        if inexact {
            rad += 1;
        }
        RealBall { mid, rad, prec: p }
    }

    /// Exact scaling by an integer.
    pub fn mul_int(&self, k: i64) -> Self {
        RealBall {
            mid: &self.mid * k,
            rad: &self.rad * k.unsigned_abs(),
            prec: self.prec,
        }
    }

    pub fn div_int(&self, k: i64) -> Self {
        debug_assert!(k != 0);
        let kb = BigInt::from(k);
        let mid = round_div(&self.mid, &kb);
        let rad = ceil_div(&self.rad, &BigInt::from(k.unsigned_abs())) + 1;
        RealBall { mid, rad, prec: self.prec }
    }

    /// Exact scaling by 2^k.
    pub fn shift_2exp(&self, k: i64) -> Self {
        if k >= 0 {
            RealBall {
                mid: &self.mid << (k as u32),
                rad: &self.rad << (k as u32),
                prec: self.prec,
            }
        } else {
            let s = (-k) as u32;
            let (mid, inexact) = shr_round(&self.mid, s);
            let mut rad = shr_ceil(&self.rad, s);
            if inexact {
                rad += 1;
            }
            RealBall { mid, rad, prec: self.prec }
        }
    }

    pub fn inv(&self) -> Result<Self> {
        let p = self.prec;
        let am = self.mid.magnitude().to_owned();
        if BigInt::from(am.clone()) <= self.rad {
            return Err(Error::PrecisionLoss(
                "inverse of an enclosure possibly containing zero".into(),
            ));
        }
        let scaled: BigInt = BigInt::one() << (2 * p);
        let mid = round_div(&scaled, &self.mid);
        let den = BigInt::from(am.clone()) * (BigInt::from(am) - &self.rad);
        let rad = ceil_div(&(&self.rad << (2 * p)), &den) + 1;
        Ok(RealBall { mid, rad, prec: p })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    /// Enclosure of |x|.
    pub fn abs(&self) -> Self {
        if !self.lo_scaled().is_negative() {
            self.clone()
        } else if !self.hi_scaled().is_positive() {
            self.neg()
        } else {
            let mx = self.mid.magnitude().to_owned() + self.rad.magnitude();
            let mid = (BigInt::from(mx) + 1i32) >> 1u32;
            RealBall { rad: mid.clone(), mid, prec: self.prec }
        }
    }

    /// Upper bound of |x| in ulps at own precision.
    pub(crate) fn abs_hi_scaled(&self) -> BigInt {
        BigInt::from(self.mid.magnitude().to_owned()) + &self.rad
    }

    /// Interval square root. Definitely-negative input is a domain error;
    /// a lower bound below zero is clipped (the enclosed value is taken to be
    /// in the domain).
    pub fn sqrt(&self) -> Result<Self> {
        let p = self.prec;
        let hi = self.hi_scaled();
        if hi.is_negative() {
            return Err(Error::Domain("sqrt of a negative enclosure".into()));
        }
        let lo = {
            let l = self.lo_scaled();
            if l.is_negative() {
                BigInt::zero()
            } else {
                l
            }
        };
        let s_lo = isqrt_floor(&(&lo << p));
        let s_hi = isqrt_ceil(&(&hi << p));
        let mid: BigInt = (&s_lo + &s_hi) >> 1u32;
        let rad: BigInt = ((&s_hi - &s_lo) >> 1u32) + 2;
        Ok(RealBall { mid, rad, prec: p })
    }

    /// Interval n-th root for nonnegative enclosures.
    pub fn nth_root(&self, n: u32) -> Result<Self> {
        if n == 0 {
            return Err(Error::Input("0th root".into()));
        }
        if n == 1 {
            return Ok(self.clone());
        }
        if n == 2 {
            return self.sqrt();
        }
        let p = self.prec;
        let hi = self.hi_scaled();
        if hi.is_negative() {
            return Err(Error::Domain("nth_root of a negative enclosure".into()));
        }
        let lo = {
            let l = self.lo_scaled();
            if l.is_negative() {
                BigInt::zero()
            } else {
                l
            }
        };
        let shift = p
            .checked_mul(n - 1)
            .ok_or_else(|| Error::Input("nth_root precision overflow".into()))?;
        let r_lo = (&lo << shift).nth_root(n);
        let mut r_hi = (&hi << shift).nth_root(n);
        if num_traits::pow::Pow::pow(&r_hi, n) < (&hi << shift) {
            r_hi += 1;
        }
        let mid: BigInt = (&r_lo + &r_hi) >> 1u32;
        let rad: BigInt = ((&r_hi - &r_lo) >> 1u32) + 2;
        Ok(RealBall { mid, rad, prec: p })
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        if k == 0 {
            return Self::one(self.prec);
        }
        let mut base = self.clone();
        let mut acc: Option<RealBall> = None;
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

    // ---- comparisons ----

    pub fn cmp_rational(&self, q: &BigRational) -> Option<Ordering> {
        // lo/2^p vs q  <=>  lo * den vs num << p
        let den = q.denom();
        let rhs: BigInt = q.numer() << self.prec;
        let lo = self.lo_scaled() * den;
        let hi = self.hi_scaled() * den;
        if lo > rhs {
            Some(Ordering::Greater)
        } else if hi < rhs {
            Some(Ordering::Less)
        } else if lo == rhs && hi == rhs {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn gt_rational(&self, q: &BigRational) -> Option<bool> {
        match self.cmp_rational(q) {
            Some(Ordering::Greater) => Some(true),
            Some(_) => Some(false),
            None => None,
        }
    }

    /// Rigorous strict comparison; `None` when the enclosures overlap.
    pub fn gt(&self, other: &Self) -> Option<bool> {
        let p = self.prec.max(other.prec);
        let a = self.rescale(p);
        let b = other.rescale(p);
        if a.lo_scaled() > b.hi_scaled() {
            Some(true)
        } else if a.hi_scaled() < b.lo_scaled() {
            Some(false)
        } else {
            None
        }
    }

    pub fn lt(&self, other: &Self) -> Option<bool> {
        other.gt(self)
    }

    pub fn sign_certain(&self) -> Option<Ordering> {
        if self.lo_scaled().is_positive() {
            Some(Ordering::Greater)
        } else if self.hi_scaled().is_negative() {
            Some(Ordering::Less)
        } else if self.mid.is_zero() && self.rad.is_zero() {
            Some(Ordering::Equal)
        } else {
            None
        }
    }

    pub fn contains_rational(&self, q: &BigRational) -> bool {
        let den = q.denom();
        let rhs: BigInt = q.numer() << self.prec;
        self.lo_scaled() * den <= rhs && self.hi_scaled() * den >= rhs
    }

    pub fn overlaps(&self, other: &Self) -> bool {
        let p = self.prec.max(other.prec);
        let a = self.rescale(p);
        let b = other.rescale(p);
        a.lo_scaled() <= b.hi_scaled() && b.lo_scaled() <= a.hi_scaled()
    }

    /// Enclosure of max(x, y) (resp. min) as intervals.
    pub fn max_enclosure(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let lo = a.lo_scaled().max(b.lo_scaled());
        let hi = a.hi_scaled().max(b.hi_scaled());
        Self::from_endpoints_scaled(lo, hi, a.prec)
    }

    pub fn min_enclosure(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let lo = a.lo_scaled().min(b.lo_scaled());
        let hi = a.hi_scaled().min(b.hi_scaled());
        Self::from_endpoints_scaled(lo, hi, a.prec)
    }

    fn from_endpoints_scaled(lo: BigInt, hi: BigInt, prec: u32) -> Self {
        debug_assert!(lo <= hi);
        // mid is the floor midpoint, so hi - mid >= mid - lo: one radius
        // covers both ends exactly (and stays 0 for lo == hi)
        let mid: BigInt = (&lo + &hi) >> 1u32;
        let rad: BigInt = &hi - &mid;
        RealBall { mid, rad, prec }
    }

    // ---- elementary functions ----

    /// Natural logarithm of a strictly positive enclosure.
    pub fn ln(&self) -> Result<Self> {
        let p = self.prec;
        if !self.lo_scaled().is_positive() {
            return if self.hi_scaled().is_positive() {
                Err(Error::PrecisionLoss("ln of an enclosure touching zero".into()))
            } else {
                Err(Error::Domain("ln of a nonpositive enclosure".into()))
            };
        }
        // Write x = m * 2^e with the mantissa enclosure inside roughly [1, 2).
        let bits = self.mid.bits() as i64;
        let e = bits - 1 - p as i64;
        let mant = self.shift_2exp(-e);
        // t = (m - 1)/(m + 1) in [0, 1/3] up to radius fuzz.
        let one = Self::one(p);
        let t = mant.sub(&one).div(&mant.add(&one))?;
        let ln_m = atanh_series(&t)?.mul_int(2);
        let l2 = ln2(p);
        Ok(ln_m.add(&l2.mul_int(e)))
    }

    /// Exponential. Errors on enclosures too wide or too large to be useful.
    pub fn exp(&self) -> Result<Self> {
        let p = self.prec;
        let bound: BigInt = BigInt::from(1u64 << 22) << p;
        if self.abs_hi_scaled() > bound {
            return Err(Error::Domain("exp argument out of supported range".into()));
        }
        let l2 = ln2(p);
        // Integer k with |x - k ln 2| small; any k is rigorous, mid-based is sharp.
        let k = {
            let num = self.mid.to_f64().unwrap_or(0.0);
            let den = l2.mid.to_f64().unwrap_or(1.0);
            (num / den).round() as i64
        };
        let s = self.sub(&l2.mul_int(k));
        // Series sum s^j/j! with ratio <= |s|/(j+1); |s| is about ln2/2.
        if s.abs_hi_scaled() > (BigInt::from(3i32) << (p - 2)) {
            return Err(Error::PrecisionLoss("exp reduction failed".into()));
        }
        let stop = BigInt::from(8i32);
        let mut term = Self::one(p);
        let mut acc = Self::one(p);
        let mut j: i64 = 1;
        loop {
            term = term.mul(&s).div_int(j);
            acc = acc.add(&term);
            let t_hi = term.abs_hi_scaled();
            if j >= 4 && t_hi <= stop {
                // Tail <= |term| * q/(1-q) with q <= |s|/(j+1) <= 1/2.
                acc.rad += t_hi + 1;
                break;
            }
            j += 1;
            if j > 4 * p as i64 + 64 {
                return Err(Error::PrecisionLoss("exp series did not converge".into()));
            }
        }
        Ok(acc.shift_2exp(k))
    }

    /// Arctangent on the full real line.
    pub fn atan(&self) -> Result<Self> {
        let p = self.prec;
        let quarter: BigInt = BigInt::one() << (p - 2);
        let one_s: BigInt = BigInt::one() << p;
        let mut t = self.clone();
        let mut doublings: u32 = 0;
        let mut flipped = false;
        loop {
            let a_hi = t.abs_hi_scaled();
            if a_hi <= quarter {
                break;
            }
            if !flipped && t.lo_scaled() >= one_s {
                // atan t = pi/2 - atan(1/t) for t >= 1.
                let inner = t.inv()?;
                let rest = inner.atan()?;
                let half_pi = pi(p).div_int(2);
                return Ok(apply_doublings(half_pi.sub(&rest), doublings));
            }
            if !flipped && t.hi_scaled() <= -&one_s {
                let inner = t.inv()?;
                let rest = inner.atan()?;
                let half_pi = pi(p).div_int(2);
                return Ok(apply_doublings(half_pi.neg().sub(&rest), doublings));
            }
            // Halve: atan t = 2 atan(t / (1 + sqrt(1 + t^2))).
            let denom = Self::one(p).add(&Self::one(p).add(&t.mul(&t)).sqrt()?);
            t = t.div(&denom)?;
            doublings += 1;
            flipped = true; // after one halving |t| < 1, flips no longer needed
            if doublings > p + 8 {
                return Err(Error::PrecisionLoss("atan reduction did not converge".into()));
            }
        }
        let series = atan_series(&t)?;
        Ok(apply_doublings(series, doublings))
    }

    /// Simultaneous sine and cosine for |x| up to about pi.
    pub fn sin_cos(&self) -> Result<(Self, Self)> {
        let p = self.prec;
        let bound: BigInt = BigInt::from(7i32) << (p - 1); // 3.5
        if self.abs_hi_scaled() > bound {
            return Err(Error::Domain("sin_cos argument outside reduced range".into()));
        }
        let stop = BigInt::from(8i32);
        let t2 = self.mul(self);
        let mut sin_acc = self.clone();
        let mut cos_acc = Self::one(p);
        let mut sin_term = self.clone();
        let mut cos_term = Self::one(p);
        let mut j: i64 = 1;
        loop {
            // cos term gains factor -x^2/((2j-1)(2j)), sin -x^2/((2j)(2j+1)).
            cos_term = cos_term.mul(&t2).div_int(-(2 * j - 1) * 2 * j);
            sin_term = sin_term.mul(&t2).div_int(-(2 * j) * (2 * j + 1));
            cos_acc = cos_acc.add(&cos_term);
            sin_acc = sin_acc.add(&sin_term);
            let c_hi = cos_term.abs_hi_scaled();
            let s_hi = sin_term.abs_hi_scaled();
            if j >= 3 && c_hi <= stop && s_hi <= stop {
                // Ratio below 12.25/42 < 1/3 from j >= 3: tail below half the
                // last term magnitude.
                cos_acc.rad += c_hi + 1;
                sin_acc.rad += s_hi + 1;
                break;
            }
            j += 1;
            if j > 4 * p as i64 + 64 {
                return Err(Error::PrecisionLoss("sin_cos series did not converge".into()));
            }
        }
        Ok((sin_acc, cos_acc))
    }

    // ---- conversions ----

    /// Midpoint as f64 (diagnostic only; saturates on huge exponents).
    pub fn mid_f64(&self) -> f64 {
        big_to_f64_scaled(&self.mid, self.prec)
    }

    pub fn rad_f64(&self) -> f64 {
        big_to_f64_scaled(&self.rad, self.prec)
    }

    /// Deterministic decimal rendering: `mid` with `sig` significant digits
    /// (round to nearest) plus a two-digit upper bound of the radius.
    pub fn to_decimal_string(&self, sig: usize) -> String {
        let mid_s = decimal_of_scaled(&self.mid, self.prec, sig, false);
        if self.rad.is_zero() {
            return mid_s;
        }
        let rad_s = decimal_of_scaled(&self.rad, self.prec, 2, true);
        format!("{mid_s} ± {rad_s}")
    }
}

fn apply_doublings(x: RealBall, k: u32) -> RealBall {
    x.mul_int(1i64 << k.min(62))
}

/// atanh series for |t| <= ~0.34: sum t^(2j+1)/(2j+1).
fn atanh_series(t: &RealBall) -> Result<RealBall> {
    let p = t.prec;
    let limit: BigInt = BigInt::from(3i32) << (p - 3); // 0.375
    if t.abs_hi_scaled() > limit {
        return Err(Error::PrecisionLoss("atanh series argument too large".into()));
    }
    let stop = BigInt::from(8i32);
    let t2 = t.mul(t);
    let mut term = t.clone();
    let mut acc = t.clone();
    let mut j: i64 = 1;
    loop {
        term = term.mul(&t2);
        acc = acc.add(&term.div_int(2 * j + 1));
        let t_hi = term.abs_hi_scaled();
        if t_hi <= stop {
            // Geometric tail with ratio t^2 <= 0.15.
            acc.rad += t_hi + 1;
            break;
        }
        j += 1;
        if j > 4 * p as i64 + 64 {
            return Err(Error::PrecisionLoss("atanh series did not converge".into()));
        }
    }
    Ok(acc)
}

/// Alternating atan series for |t| <= ~0.26.
fn atan_series(t: &RealBall) -> Result<RealBall> {
    let p = t.prec;
    let limit: BigInt = (BigInt::from(5i32) << p) / 16i32; // 0.3125
    if t.abs_hi_scaled() > limit {
        return Err(Error::PrecisionLoss("atan series argument too large".into()));
    }
    let stop = BigInt::from(8i32);
    let t2 = t.mul(t);
    let mut term = t.clone();
    let mut acc = t.clone();
    let mut j: i64 = 1;
    loop {
        term = term.mul(&t2).neg();
        acc = acc.add(&term.div_int(2 * j + 1));
        let t_hi = term.abs_hi_scaled();
        if t_hi <= stop {
            // Alternating with decreasing magnitude: tail below last term.
            acc.rad += t_hi + 1;
            break;
        }
        j += 1;
        if j > 4 * p as i64 + 64 {
            return Err(Error::PrecisionLoss("atan series did not converge".into()));
        }
    }
    Ok(acc)
}

thread_local! {
    static LN2_CACHE: RefCell<BTreeMap<u32, RealBall>> = RefCell::new(BTreeMap::new());
    static PI_CACHE: RefCell<BTreeMap<u32, RealBall>> = RefCell::new(BTreeMap::new());
}

/// ln 2 = 2 atanh(1/3).
pub fn ln2(prec: u32) -> RealBall {
    LN2_CACHE.with(|c| {
        if let Some(v) = c.borrow().get(&prec) {
            return v.clone();
        }
        let third = RealBall::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(3i32)),
            prec + 16,
        );
        let v = atanh_series(&third)
            .expect("atanh(1/3) converges")
            .mul_int(2)
            .rescale(prec);
        c.borrow_mut().insert(prec, v.clone());
        v
    })
}

/// pi via Machin's formula: pi = 16 atan(1/5) - 4 atan(1/239).
pub fn pi(prec: u32) -> RealBall {
    PI_CACHE.with(|c| {
        if let Some(v) = c.borrow().get(&prec) {
            return v.clone();
        }
        let wp = prec + 16;
        let a5 = atan_series(&RealBall::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(5i32)),
            wp,
        ))
        .expect("atan(1/5) converges");
        let a239 = atan_series(&RealBall::from_rational(
            &BigRational::new(BigInt::one(), BigInt::from(239i32)),
            wp,
        ))
        .expect("atan(1/239) converges");
        let v = a5.mul_int(16).sub(&a239.mul_int(4)).rescale(prec);
        c.borrow_mut().insert(prec, v.clone());
        v
    })
}

/// Quadrant-safe arctangent of y/x.
pub fn atan2(y: &RealBall, x: &RealBall) -> Result<RealBall> {
    if x.lo_scaled().is_positive() {
        return y.div(x)?.atan();
    }
    if y.lo_scaled().is_positive() {
        let half_pi = pi(y.prec.min(x.prec)).div_int(2);
        return Ok(half_pi.sub(&x.div(y)?.atan()?));
    }
    if y.hi_scaled().is_negative() {
        let half_pi = pi(y.prec.min(x.prec)).div_int(2);
        return Ok(half_pi.neg().sub(&x.div(y)?.atan()?));
    }
    if y.mid.is_zero() && y.rad.is_zero() && x.hi_scaled().is_negative() {
        return Ok(pi(x.prec));
    }
    Err(Error::PrecisionLoss("atan2 quadrant undecided".into()))
}

fn big_to_f64_scaled(x: &BigInt, prec: u32) -> f64 {
    if x.is_zero() {
        return 0.0;
    }
    let bits = x.bits();
    let (top, shift) = if bits > 63 {
        let s = bits - 63;
        ((x >> s).to_i64().unwrap(), s as i64)
    } else {
        (x.to_i64().unwrap(), 0)
    };
    (top as f64) * 2f64.powi((shift - prec as i64) as i32)
}

/// Deterministic decimal rendering of `x / 2^prec` with `sig` significant
/// digits; `round_up` renders an upper bound (for radii).
fn decimal_of_scaled(x: &BigInt, prec: u32, sig: usize, round_up: bool) -> String {
    if x.is_zero() {
        return "0".into();
    }
    let neg = x.is_negative();
    let mag = BigInt::from(x.magnitude().to_owned());
    // e10 ~ floor(log10(mag / 2^prec))
    let bits = mag.bits() as i64 - 1 - prec as i64;
    let mut e10 = (bits as f64 * std::f64::consts::LOG10_2).floor() as i64;
    // digits = round(mag * 10^(sig-1-e10) / 2^prec)
    let mut digits;
    loop {
        let k = sig as i64 - 1 - e10;
        let scaled = apply_pow10(&mag, k);
        let d = if round_up {
            ceil_div(&scaled, &(BigInt::one() << prec))
        } else {
            round_div(&scaled, &(BigInt::one() << prec))
        };
        let ds = d.to_string();
        if ds.len() > sig {
            e10 += 1;
            continue;
        }
        if ds.len() < sig {
            e10 -= 1;
            continue;
        }
        digits = ds;
        break;
    }
    // Render as d.ddd e±k.
    if sig > 1 {
        digits.insert(1, '.');
    }
    let sign = if neg { "-" } else { "" };
    format!("{sign}{digits}e{e10}")
}

fn apply_pow10(x: &BigInt, k: i64) -> BigInt {
    if k >= 0 {
        x * BigInt::from(10u32).pow(k as u32)
    } else {
        // Truncation here only perturbs the last kept digit by one ulp of the
        // rendering, acceptable for display rounding direction handled above.
        x / BigInt::from(10u32).pow((-k) as u32)
    }
}

/// A rigorous complex disc enclosure.
#[derive(Clone, Debug)]
pub struct Ball {
    re_mid: BigInt,
    im_mid: BigInt,
    radius: BigInt,
    precision_bits: u32,
}

impl Ball {
    pub fn new_raw(re_mid: BigInt, im_mid: BigInt, radius: BigInt, precision_bits: u32) -> Self {
        debug_assert!(!radius.is_negative());
        Ball { re_mid, im_mid, radius, precision_bits }
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn radius_scaled(&self) -> &BigInt {
        &self.radius
    }

    pub fn zero(prec: u32) -> Self {
        Ball {
            re_mid: BigInt::zero(),
            im_mid: BigInt::zero(),
            radius: BigInt::zero(),
            precision_bits: prec,
        }
    }

    pub fn one(prec: u32) -> Self {
        Self::from_real(&RealBall::one(prec))
    }

    pub fn from_real(r: &RealBall) -> Self {
        Ball {
            re_mid: r.mid.clone(),
            im_mid: BigInt::zero(),
            radius: r.rad.clone(),
            precision_bits: r.prec,
        }
    }

    pub fn from_re_im(re: &RealBall, im: &RealBall) -> Self {
        let p = re.prec.min(im.prec);
        let re = re.rescale(p);
        let im = im.rescale(p);
        Ball {
            re_mid: re.mid,
            im_mid: im.mid,
            radius: re.rad + im.rad,
            precision_bits: p,
        }
    }

    pub fn from_rational(q: &BigRational, prec: u32) -> Self {
        Self::from_real(&RealBall::from_rational(q, prec))
    }

    /// Component enclosure (a disc projects onto each axis with full radius).
    pub fn re_ball(&self) -> RealBall {
        RealBall {
            mid: self.re_mid.clone(),
            rad: self.radius.clone(),
            prec: self.precision_bits,
        }
    }

    pub fn im_ball(&self) -> RealBall {
        RealBall {
            mid: self.im_mid.clone(),
            rad: self.radius.clone(),
            prec: self.precision_bits,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.radius.is_zero()
    }

    pub fn rescale(&self, prec: u32) -> Self {
        match prec.cmp(&self.precision_bits) {
            Ordering::Equal => self.clone(),
            Ordering::Greater => {
                let k = prec - self.precision_bits;
                Ball {
                    re_mid: &self.re_mid << k,
                    im_mid: &self.im_mid << k,
                    radius: &self.radius << k,
                    precision_bits: prec,
                }
            }
            Ordering::Less => {
                let k = self.precision_bits - prec;
                let (re, ir) = shr_round(&self.re_mid, k);
                let (im, ii) = shr_round(&self.im_mid, k);
                let mut rad = shr_ceil(&self.radius, k);
                if ir || ii {
                    rad += 2;
                }
                Ball { re_mid: re, im_mid: im, radius: rad, precision_bits: prec }
            }
        }
    }

    fn aligned(&self, other: &Self) -> (Self, Self) {
        let p = self.precision_bits.min(other.precision_bits);
        (self.rescale(p), other.rescale(p))
    }

    pub fn add(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        Ball {
            re_mid: a.re_mid + b.re_mid,
            im_mid: a.im_mid + b.im_mid,
            radius: a.radius + b.radius,
            precision_bits: a.precision_bits,
        }
    }

    pub fn neg(&self) -> Self {
        Ball {
            re_mid: -&self.re_mid,
            im_mid: -&self.im_mid,
            radius: self.radius.clone(),
            precision_bits: self.precision_bits,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn conj(&self) -> Self {
        Ball {
            re_mid: self.re_mid.clone(),
            im_mid: -&self.im_mid,
            radius: self.radius.clone(),
            precision_bits: self.precision_bits,
        }
    }

    /// Upper bound of the midpoint modulus in ulps.
    fn mod_hi_scaled(&self) -> BigInt {
        let n2 = &self.re_mid * &self.re_mid + &self.im_mid * &self.im_mid;
        isqrt_ceil(&n2)
    }

    fn mod_lo_scaled(&self) -> BigInt {
        let n2 = &self.re_mid * &self.re_mid + &self.im_mid * &self.im_mid;
        isqrt_floor(&n2)
    }

    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = self.aligned(other);
        let p = a.precision_bits;
        let re_t = &a.re_mid * &b.re_mid - &a.im_mid * &b.im_mid;
        let im_t = &a.re_mid * &b.im_mid + &a.im_mid * &b.re_mid;
        let (re, re_inexact) = shr_round(&re_t, p);
        let (im, im_inexact) = shr_round(&im_t, p);
        let err = a.mod_hi_scaled() * &b.radius
            + b.mod_hi_scaled() * &a.radius
            + &a.radius * &b.radius;
        let mut rad = shr_ceil(&err, p);
        // Each rounded component is off by at most half an ulp, so one ulp
        // per component covers the midpoint shift; exact products stay exact.
        if re_inexact || im_inexact {
            rad += 2;
        }
        Ball { re_mid: re, im_mid: im, radius: rad, precision_bits: p }
    }

    pub fn mul_int(&self, k: i64) -> Self {
        Ball {
            re_mid: &self.re_mid * k,
            im_mid: &self.im_mid * k,
            radius: &self.radius * k.unsigned_abs(),
            precision_bits: self.precision_bits,
        }
    }

    pub fn div_int(&self, k: i64) -> Self {
        debug_assert!(k != 0);
        let kb = BigInt::from(k);
        Ball {
            re_mid: round_div(&self.re_mid, &kb),
            im_mid: round_div(&self.im_mid, &kb),
            radius: ceil_div(&self.radius, &BigInt::from(k.unsigned_abs())) + 2,
            precision_bits: self.precision_bits,
        }
    }

    pub fn mul_real(&self, r: &RealBall) -> Self {
        self.mul(&Ball::from_real(r))
    }

    pub fn inv(&self) -> Result<Self> {
        let p = self.precision_bits;
        let mod_lo = self.mod_lo_scaled();
        if mod_lo <= self.radius {
            return Err(Error::PrecisionLoss(
                "inverse of an enclosure possibly containing zero".into(),
            ));
        }
        let n2 = &self.re_mid * &self.re_mid + &self.im_mid * &self.im_mid;
        let re = round_div(&(&self.re_mid << (2 * p)), &n2);
        let im = round_div(&(-&self.im_mid << (2 * p)), &n2);
        let den = &mod_lo * (&mod_lo - &self.radius);
        let rad = ceil_div(&(&self.radius << (2 * p)), &den) + 2;
        Ok(Ball { re_mid: re, im_mid: im, radius: rad, precision_bits: p })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        Ok(self.mul(&other.inv()?))
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        if k == 0 {
            return Self::one(self.precision_bits);
        }
        let mut base = self.clone();
        let mut acc: Option<Ball> = None;
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

    /// Enclosure of |z|.
    pub fn abs(&self) -> RealBall {
        let p = self.precision_bits;
        if self.radius.is_zero() && (self.re_mid.is_zero() || self.im_mid.is_zero()) {
            // an exact ball on an axis has an exactly representable modulus
            let mid = if self.re_mid.is_zero() {
                self.im_mid.abs()
            } else {
                self.re_mid.abs()
            };
            return RealBall { mid, rad: BigInt::zero(), prec: p };
        }
        let m_lo = self.mod_lo_scaled();
        let m_hi = self.mod_hi_scaled() + 1;
        let lo = {
            let l = &m_lo - &self.radius;
            if l.is_negative() {
                BigInt::zero()
            } else {
                l
            }
        };
        let hi = m_hi + &self.radius;
        RealBall::from_endpoints_scaled(lo, hi, p)
    }

    /// Does this enclosure certainly exclude zero?
    pub fn excludes_zero(&self) -> bool {
        self.mod_lo_scaled() > self.radius
    }

    /// Do the two enclosures intersect? (Exact disc test.)
    pub fn overlaps(&self, other: &Self) -> bool {
        let p = self.precision_bits.max(other.precision_bits);
        let a = self.rescale(p);
        let b = other.rescale(p);
        let dr = &a.re_mid - &b.re_mid;
        let di = &a.im_mid - &b.im_mid;
        let d2 = &dr * &dr + &di * &di;
        let s = &a.radius + &b.radius;
        d2 <= &s * &s
    }

    /// Principal branch of w^(m/n) with the argument taken in (-pi, pi].
    ///
    /// Requires 0 < m < n with gcd(m, n) = 1 and an enclosure excluding zero.
    /// Fails with `PrecisionLoss` when the branch cannot be certified (an
    /// inexact enclosure meeting the negative real axis).
    pub fn principal_power(&self, m: u32, n: u32) -> Result<Ball> {
        if !(m >= 1 && m < n && gcd_u32(m, n) == 1) {
            return Err(Error::Input(format!(
                "principal_power requires 0 < m < n coprime, got {m}/{n}"
            )));
        }
        let p = self.precision_bits;
        if !self.excludes_zero() {
            if self.re_mid.is_zero() && self.im_mid.is_zero() && self.radius.is_zero() {
                return Err(Error::Domain("principal_power of zero".into()));
            }
            return Err(Error::PrecisionLoss(
                "principal_power of an enclosure possibly containing zero".into(),
            ));
        }
        let exact_real = self.im_mid.is_zero() && self.radius.is_zero();
        if exact_real {
            let re = self.re_ball();
            if self.re_mid.is_positive() {
                let mag = re.nth_root(n)?.pow_u32(m);
                return Ok(Ball::from_real(&mag));
            }
            // Negative real axis: argument is exactly pi.
            let mag = re.abs().nth_root(n)?.pow_u32(m);
            let ang = pi(p).mul_int(m as i64).div_int(n as i64);
            let (s, c) = ang.sin_cos()?;
            return Ok(Ball::from_re_im(&mag.mul(&c), &mag.mul(&s)));
        }
        let re = self.re_ball();
        let im = self.im_ball();
        let decidable = re.lo_scaled().is_positive()
            || im.lo_scaled().is_positive()
            || im.hi_scaled().is_negative();
        if !decidable {
            return Err(Error::PrecisionLoss(
                "principal_power branch undecided near the cut".into(),
            ));
        }
        let phi = atan2(&im, &re)?;
        let mag = self.abs().nth_root(n)?.pow_u32(m);
        let psi = phi.mul_int(m as i64).div_int(n as i64);
        let (s, c) = psi.sin_cos()?;
        Ok(Ball::from_re_im(&mag.mul(&c), &mag.mul(&s)))
    }

    /// Deterministic rendering "re + im i ± rad".
    pub fn to_decimal_string(&self, sig: usize) -> String {
        let re = decimal_of_scaled(&self.re_mid, self.precision_bits, sig, false);
        let im = decimal_of_scaled(&self.im_mid, self.precision_bits, sig, false);
        if self.radius.is_zero() {
            format!("{re} + {im}i")
        } else {
            let rad = decimal_of_scaled(&self.radius, self.precision_bits, 2, true);
            format!("{re} + {im}i ± {rad}")
        }
    }
}

pub(crate) fn gcd_u32(a: u32, b: u32) -> u32 {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    #[test]
    fn rational_embedding_encloses_value() {
        let b = RealBall::from_rational(&rat(1, 3), 64);
        assert!(b.contains_rational(&rat(1, 3)));
        assert!(b.rad <= BigInt::one());
        let e = RealBall::from_rational(&rat(3, 4), 64);
        assert!(e.is_exact());
    }

    #[test]
    fn arithmetic_encloses_exact_results() {
        let a = RealBall::from_rational(&rat(22, 7), 96);
        let b = RealBall::from_rational(&rat(-5, 13), 96);
        assert!(a.add(&b).contains_rational(&(rat(22, 7) + rat(-5, 13))));
        assert!(a.mul(&b).contains_rational(&(rat(22, 7) * rat(-5, 13))));
        assert!(a
            .div(&b)
            .unwrap()
            .contains_rational(&(rat(22, 7) / rat(-5, 13))));
    }

    #[test]
    fn sqrt_squares_back() {
        let two = RealBall::from_i64(2, 128);
        let s = two.sqrt().unwrap();
        assert!(s.mul(&s).contains_rational(&rat(2, 1)));
    }

    #[test]
    fn ln_exp_roundtrip_contains() {
        let x = RealBall::from_rational(&rat(17, 5), 128);
        let l = x.ln().unwrap();
        let back = l.exp().unwrap();
        assert!(back.contains_rational(&rat(17, 5)));
    }

    #[test]
    fn pi_matches_reference_digits() {
        let p = pi(128);
        // 3.14159265358979323846264338327950288 < pi < ...289
        let lo = rat(314159265358979323, 100000000000000000);
        let hi = rat(314159265358979324, 100000000000000000);
        assert_eq!(p.gt_rational(&lo), Some(true));
        assert_eq!(p.lt(&RealBall::from_rational(&hi, 128)), Some(true));
    }

    #[test]
    fn principal_power_of_minus_one_is_i() {
        let minus_one = Ball::from_rational(&rat(-1, 1), 128);
        let r = minus_one.principal_power(1, 2).unwrap();
        let re = r.re_ball();
        let im = r.im_ball();
        assert!(re.contains_rational(&rat(0, 1)));
        assert!(im.contains_rational(&rat(1, 1)));
        assert!(im.gt_rational(&rat(9, 10)) == Some(true));
    }

    #[test]
    fn principal_power_agrees_with_integer_power() {
        // (w^(m/n))^n encloses w^m for a few rational complex w off the cut.
        for (a, b) in [(3i64, 2i64), (-2, 5), (1, -7), (4, 1)] {
            let w = Ball::from_re_im(
                &RealBall::from_rational(&rat(a, 3), 160),
                &RealBall::from_rational(&rat(b, 3), 160),
            );
            let r = w.principal_power(2, 3).unwrap();
            let lhs = r.pow_u32(3);
            let rhs = w.pow_u32(2);
            assert!(lhs.overlaps(&rhs), "mismatch at ({a},{b})");
        }
    }

    #[test]
    fn escalation_reaches_decision() {
        let v = escalate(32, |p| {
            let b = RealBall::from_rational(&rat(1, 3), p);
            let c = b.mul(&RealBall::from_i64(3, p));
            Ok(c.gt_rational(&rat(99, 100)))
        })
        .unwrap();
        assert!(v);
    }

    #[test]
    fn decimal_rendering_is_stable() {
        let x = RealBall::from_rational(&rat(1, 3), 128);
        assert_eq!(x.to_decimal_string(10), x.to_decimal_string(10));
        let s = x.to_decimal_string(6);
        assert!(s.starts_with("3.33333e-1"), "{s}");
    }
}
