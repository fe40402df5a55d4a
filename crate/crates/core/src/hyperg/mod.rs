//! Hypergeometric approximant polynomials with exact rational coefficients,
//! their integrality invariants, and the growth-bound checker/calibrator.

pub mod remainder;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::qfield::ball::{escalate, RealBall, PRECISION_CAP};
use crate::qfield::{val_p, TowerElem};

fn check_params(m: u32, n: u32) -> Result<()> {
    if !(m >= 1 && m < n) {
        return Err(Error::Input(format!("need 0 < m < n, got m={m}, n={n}")));
    }
    if crate::qfield::ball::gcd_u32(m, n) != 1 {
        return Err(Error::Input(format!("need gcd(m,n)=1, got m={m}, n={n}")));
    }
    Ok(())
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Dense polynomial Σ coeffs[k]·x^k of degree exactly r, the degree-r
/// hypergeometric approximant for exponent m/n.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HypPoly {
    pub m: u32,
    pub n: u32,
    pub r: u32,
    pub coeffs: Vec<BigRational>,
}

/// coeffs[k] = ((−r)_k (−r−m/n)_k) / ((1−m/n)_k k!) computed by the exact
/// term ratio; constant term 1, degree exactly r.
pub fn x_coeffs(m: u32, n: u32, r: u32) -> Result<HypPoly> {
    check_params(m, n)?;
    let omega = rat(m as i64, n as i64);
    let mut coeffs = Vec::with_capacity(r as usize + 1);
    let mut c = BigRational::one();
    coeffs.push(c.clone());
    for k in 0..r {
        let kq = rat(k as i64, 1);
        let num = (&kq - rat(r as i64, 1)) * (&kq - rat(r as i64, 1) - &omega);
        let den = (&kq + BigRational::one() - &omega) * (&kq + BigRational::one());
        c = c * num / den;
        coeffs.push(c.clone());
    }
    Ok(HypPoly { m, n, r, coeffs })
}

/// Homogeneous evaluation Σ coeffs[k]·x^k·y^(r−k) in exact tower arithmetic.
pub fn x_star_eval(p: &HypPoly, x: &TowerElem, y: &TowerElem) -> TowerElem {
    let r = p.r as usize;
    // Homogeneous Horner: start at the top coefficient, multiply by x each
    // step and feed coefficients scaled by the growing power of y.
    let mut acc = x.zero_like().add(&x.one_like().scale_rat(&p.coeffs[r]));
    let mut ypow = x.one_like();
    for k in (0..r).rev() {
        ypow = ypow.mul(y);
        acc = acc.mul(x).add(&ypow.scale_rat(&p.coeffs[k]));
    }
    acc
}

/// Least common multiple of the reduced coefficient denominators.
pub fn denom_d(m: u32, n: u32, r: u32) -> Result<BigInt> {
    let p = x_coeffs(m, n, r)?;
    Ok(denom_of(&p))
}

pub fn denom_of(p: &HypPoly) -> BigInt {
    let mut d = BigInt::one();
    for c in &p.coeffs {
        d = d.lcm(c.denom());
    }
    d
}

/// Greatest common divisor of the numerators (in lowest terms) of the
/// coefficients of X(1 − d·x).
pub fn numer_n(m: u32, n: u32, d: &BigInt, r: u32) -> Result<BigInt> {
    if !d.is_positive() {
        return Err(Error::Input("shift scale d must be positive".into()));
    }
    let p = x_coeffs(m, n, r)?;
    Ok(numer_of(&p, d))
}

pub fn numer_of(p: &HypPoly, d: &BigInt) -> BigInt {
    let dd = denom_of(p);
    let scaled: Vec<BigInt> = p
        .coeffs
        .iter()
        .map(|c| c.numer() * (&dd / c.denom()))
        .collect();
    // Coefficient of x^j in Σ c_k (1-dx)^k equals (−d)^j Σ_{k≥j} c_k C(k,j);
    // with c_k scaled by the common denominator this is exact in integers.
    let r = p.r as usize;
    let mut g = BigInt::zero();
    let mut d_pow = BigInt::one();
    for j in 0..=r {
        let mut s = BigInt::zero();
        let mut binom = BigInt::one(); // C(j, j)
        for k in j..=r {
            s += &scaled[k] * &binom;
            // C(k+1, j) = C(k, j)·(k+1)/(k+1−j)
            binom = binom * BigInt::from((k + 1) as u64) / BigInt::from((k + 1 - j) as u64);
        }
        let b = s * &d_pow; // B_j up to sign, scaled by dd
        if !b.is_zero() {
            // numerator of B_j/dd in lowest terms
            let num = (&b / b.gcd(&dd)).abs();
            g = g.gcd(&num);
            if g.is_one() {
                return g;
            }
        }
        d_pow *= d;
    }
    g
}

/// The exact-exponent product ∏_{p|n} p^{min(v_p(d), v_p(n)+1/(p−1))}.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValuationProduct {
    /// Distinct primes dividing n, each with an exact rational exponent.
    pub factors: Vec<(u64, BigRational)>,
}

pub fn cal_n(d: &BigInt, n: u32) -> Result<ValuationProduct> {
    if !d.is_positive() || n < 1 {
        return Err(Error::Input("cal_n needs d, n >= 1".into()));
    }
    let mut factors = Vec::new();
    for (p, _) in crate::qfield::factor(&BigInt::from(n))? {
        let p64 = num_traits::ToPrimitive::to_u64(&p).expect("n fits u64");
        let vd = val_p(p64, &BigRational::from_integer(d.clone()))?;
        let vn = val_p(p64, &rat(n as i64, 1))?;
        let cap = rat(vn, 1) + BigRational::new(BigInt::one(), BigInt::from(p64 - 1));
        let e = rat(vd, 1).min(cap);
        factors.push((p64, e));
    }
    Ok(ValuationProduct { factors })
}

impl ValuationProduct {
    pub fn is_one(&self) -> bool {
        self.factors.iter().all(|(_, e)| e.is_zero())
    }

    /// Enclosure of (∏ p^{e_p})^mult.
    pub fn pow_ball(&self, mult: u32, prec: u32) -> Result<RealBall> {
        let wp = prec + 16;
        let mut acc = RealBall::one(wp);
        for (p, e) in &self.factors {
            let q = e * rat(mult as i64, 1);
            debug_assert!(!q.is_negative());
            let (int_part, num_rem) = q.numer().div_mod_floor(q.denom());
            let k = num_traits::ToPrimitive::to_u32(&int_part)
                .ok_or_else(|| Error::Input("valuation exponent overflow".into()))?;
            let int_factor = BigInt::from(*p).pow(k);
            acc = acc.mul(&RealBall::from_bigint(&int_factor, wp));
            if !num_rem.is_zero() {
                let b = num_traits::ToPrimitive::to_u32(q.denom())
                    .ok_or_else(|| Error::Input("valuation exponent denominator overflow".into()))?;
                let a = num_traits::ToPrimitive::to_u32(&num_rem).expect("reduced remainder");
                let frac_base = BigInt::from(*p).pow(a);
                let root = RealBall::from_bigint(&frac_base, wp).nth_root(b)?;
                acc = acc.mul(&root);
            }
        }
        Ok(acc.rescale(prec))
    }

    pub fn value_ball(&self, prec: u32) -> Result<RealBall> {
        self.pow_ball(1, prec)
    }
}

/// Exact telescoping products for the two Γ-ratio envelopes:
/// ∏_{j=1..r} j/(j − m/n) and ∏_{j=1..r} (j + m/n)/j.
pub fn gamma_ratio_bounds(m: u32, n: u32, r: u32) -> Result<(BigRational, BigRational)> {
    check_params(m, n)?;
    let omega = rat(m as i64, n as i64);
    let mut g1 = BigRational::one();
    let mut g2 = BigRational::one();
    for j in 1..=r as i64 {
        let jq = rat(j, 1);
        g1 *= &jq / (&jq - &omega);
        g2 *= (&jq + &omega) / &jq;
    }
    Ok((g1, g2))
}

/// Exact left side of the growth bound at index r:
/// max(1, γ₁_r, γ₂_r)·D_{n,r}/N_{d,n,r}.
pub fn growth_left_side(m: u32, n: u32, d: &BigInt, r: u32) -> Result<BigRational> {
    let (g1, g2) = gamma_ratio_bounds(m, n, r)?;
    let mx = g1.max(g2).max(BigRational::one());
    let dd = denom_d(m, n, r)?;
    let nn = numer_n(m, n, d, r)?;
    Ok(mx * BigRational::new(dd, nn))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CdVerdict {
    Pass,
    Fail,
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct CdRow {
    pub r: u32,
    pub left: BigRational,
    pub verdict: CdVerdict,
}

#[derive(Clone, Debug)]
pub struct CdReport {
    pub rows: Vec<CdRow>,
}

impl CdReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|row| row.verdict == CdVerdict::Pass)
    }

    pub fn failures(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|row| row.verdict == CdVerdict::Fail)
            .map(|row| row.r)
            .collect()
    }

    pub fn indeterminate(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|row| row.verdict == CdVerdict::Indeterminate)
            .map(|row| row.r)
            .collect()
    }
}

/// For each r ≤ r_max decides the strict inequality
/// left_r < C·(D/𝒩)^r rigorously. Exact left side; ball right side with
/// internal precision escalation. An undecidable row (e.g. inputs with fat
/// radii) is flagged, never silently passed.
pub fn check_cd_bound(
    m: u32,
    n: u32,
    d: &BigInt,
    c_n: &RealBall,
    d_n: &RealBall,
    r_max: u32,
) -> Result<CdReport> {
    check_params(m, n)?;
    if c_n.sign_certain() != Some(std::cmp::Ordering::Greater)
        || d_n.sign_certain() != Some(std::cmp::Ordering::Greater)
    {
        return Err(Error::Input("calibration constants must be positive".into()));
    }
    let nn = cal_n(d, n)?;
    let mut rows = Vec::with_capacity(r_max as usize + 1);
    for r in 0..=r_max {
        let left = growth_left_side(m, n, d, r)?;
        let start = c_n.precision().max(d_n.precision()).max(64);
        let verdict = match escalate(start, |wp| {
            let rhs = c_n
                .rescale(wp)
                .mul(&d_n.rescale(wp).pow_u32(r))
                .div(&nn.pow_ball(r, wp)?)?;
            Ok(rhs.gt_rational(&left))
        }) {
            Ok(true) => CdVerdict::Pass,
            Ok(false) => CdVerdict::Fail,
            Err(Error::PrecisionLoss(_)) => CdVerdict::Indeterminate,
            Err(e) => return Err(e),
        };
        rows.push(CdRow { r, left, verdict });
    }
    Ok(CdReport { rows })
}

/// Empirical calibration of the growth-bound constants.
///
/// D is set just above 𝒩·sup_r(left_r^{1/r}) over the calibration window
/// (r from 20 to r_max when r_max ≥ 20, else from 1), C just above
/// sup_r(left_r·(𝒩/D)^r) over all r ≤ r_max, each with a 1% margin. The
/// constants are returned as exact dyadic balls so downstream enclosures stay
/// tight. The third component is always true: these are fitted constants, not
/// proven ones, and every report built from them must carry that flag.
pub fn calibrate_cd(m: u32, n: u32, d: &BigInt, r_max: u32) -> Result<(RealBall, RealBall, bool)> {
    check_params(m, n)?;
    if r_max < 10 {
        return Err(Error::Input("calibration needs r_max >= 10".into()));
    }
    let wp: u32 = 128;
    let margin = rat(101, 100);
    let nn = cal_n(d, n)?;
    let nn_val = nn.value_ball(wp)?;

    let lefts: Vec<BigRational> = (0..=r_max)
        .map(|r| growth_left_side(m, n, d, r))
        .collect::<Result<_>>()?;

    let window_lo = if r_max >= 20 { 20 } else { 1 };
    let mut root_max = RealBall::zero(wp);
    for r in window_lo..=r_max {
        let root = RealBall::from_rational(&lefts[r as usize], wp).nth_root(r)?;
        root_max = root_max.max_enclosure(&root);
    }
    // Exact dyadic upper bound, 1% above the fitted supremum.
    let dyadic_upper = |q: BigRational| -> RealBall {
        let scaled = q * BigRational::from_integer(BigInt::one() << wp);
        let num = scaled.numer().div_ceil(scaled.denom());
        RealBall::new_raw(num, BigInt::zero(), wp)
    };
    let d_exact = dyadic_upper(nn_val.mul(&root_max).hi_rational() * &margin);

    let mut c_sup = RealBall::from_i64(1, wp);
    for r in 0..=r_max {
        let ratio = nn.pow_ball(r, wp)?.div(&d_exact.pow_u32(r))?;
        let cand = RealBall::from_rational(&lefts[r as usize], wp).mul(&ratio);
        c_sup = c_sup.max_enclosure(&cand);
    }
    let c_exact = dyadic_upper(c_sup.hi_rational() * &margin);

    let report = check_cd_bound(m, n, d, &c_exact, &d_exact, r_max)?;
    if !report.all_pass() {
        return Err(Error::Invariant(format!(
            "calibration self-check failed at r = {:?}",
            report.failures()
        )));
    }
    Ok((c_exact, d_exact, true))
}

/// Escalation helper reused by measure pipelines: largest precision allowed.
pub fn precision_ceiling() -> u32 {
    PRECISION_CAP
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qfield::{BaseField, KElem};

    fn big(n: i64) -> BigInt {
        BigInt::from(n)
    }

    #[test]
    fn coefficient_examples() {
        let p = x_coeffs(1, 3, 1).unwrap();
        assert_eq!(p.coeffs, vec![rat(1, 1), rat(2, 1)]);
        let p = x_coeffs(1, 2, 2).unwrap();
        assert_eq!(p.coeffs, vec![rat(1, 1), rat(10, 1), rat(5, 1)]);
        let p = x_coeffs(2, 5, 0).unwrap();
        assert_eq!(p.coeffs, vec![rat(1, 1)]);
        let p = x_coeffs(1, 3, 2).unwrap();
        assert_eq!(p.coeffs, vec![rat(1, 1), rat(7, 1), rat(14, 5)]);
        assert!(x_coeffs(3, 3, 1).is_err());
        assert!(x_coeffs(2, 4, 1).is_err());
    }

    #[test]
    fn coefficients_match_closed_pochhammer_products() {
        // Independent direct evaluation of the defining product formula.
        for (m, n) in [(1u32, 2u32), (1, 3), (2, 3), (1, 5), (4, 5)] {
            for r in 0..12u32 {
                let p = x_coeffs(m, n, r).unwrap();
                let omega = rat(m as i64, n as i64);
                for (k, c) in p.coeffs.iter().enumerate() {
                    let mut v = BigRational::one();
                    for j in 0..k as i64 {
                        let jq = rat(j, 1);
                        v *= (rat(-(r as i64), 1) + &jq)
                            * (rat(-(r as i64), 1) - &omega + &jq);
                        v /= (BigRational::one() - &omega + &jq) * (&jq + BigRational::one());
                    }
                    assert_eq!(c, &v, "m={m} n={n} r={r} k={k}");
                }
            }
        }
    }

    #[test]
    fn homogeneous_evaluation_examples() {
        let base = BaseField::rational();
        let tau = KElem::from_rational(base, rat(5, 1));
        let mk = |q: BigRational| {
            TowerElem::from_rational(base, tau.clone(), q).unwrap()
        };
        let p = x_coeffs(1, 3, 1).unwrap();
        let v = x_star_eval(&p, &mk(rat(2, 1)), &mk(rat(3, 1)));
        assert_eq!(v.rational_value().unwrap(), &rat(7, 1));

        let p5 = x_coeffs(2, 5, 4).unwrap();
        let v0 = x_star_eval(&p5, &mk(rat(0, 1)), &mk(rat(1, 1)));
        assert_eq!(v0.rational_value().unwrap(), &rat(1, 1));

        // (5±√−3)/2 in the tower with τ = −3.
        let nbase = BaseField::rational();
        let ntau = KElem::from_rational(nbase, rat(-3, 1));
        let eta = TowerElem::new(
            nbase,
            ntau.clone(),
            KElem::from_rational(nbase, rat(5, 2)),
            KElem::from_rational(nbase, rat(1, 2)),
        )
        .unwrap();
        let v = x_star_eval(&p, &eta, &eta.conj());
        assert_eq!(v.x().rational_value().unwrap(), &rat(15, 2));
        assert_eq!(v.y().rational_value().unwrap(), &rat(1, 2));
    }

    #[test]
    fn denominator_examples() {
        assert_eq!(denom_d(1, 3, 1).unwrap(), big(1));
        assert_eq!(denom_d(1, 3, 2).unwrap(), big(5));
        assert_eq!(denom_d(1, 2, 2).unwrap(), big(1));
    }

    #[test]
    fn denominator_is_minimal() {
        for (m, n, r) in [(1u32, 3u32, 5u32), (2, 5, 7), (1, 2, 9), (3, 4, 6)] {
            let p = x_coeffs(m, n, r).unwrap();
            let d = denom_of(&p);
            for c in &p.coeffs {
                assert!((c * BigRational::from_integer(d.clone())).is_integer());
            }
            for (q, _) in crate::qfield::factor(&d).unwrap() {
                let smaller = BigRational::from_integer(&d / &q);
                assert!(
                    p.coeffs.iter().any(|c| !(c * &smaller).is_integer()),
                    "D/{q} still clears denominators at ({m},{n},{r})"
                );
            }
        }
    }

    #[test]
    fn numerator_gcd_examples() {
        assert_eq!(numer_n(1, 3, &big(1), 1).unwrap(), big(1));
        assert_eq!(numer_n(1, 3, &big(3), 1).unwrap(), big(3));
        assert_eq!(numer_n(1, 3, &big(3), 2).unwrap(), big(9));
    }

    #[test]
    fn numerator_gcd_against_direct_shift() {
        // Independent oracle: expand X(1−dx) coefficient-by-coefficient in
        // rationals and take the gcd of reduced numerators.
        for (m, n, d, r) in [
            (1u32, 3u32, 3i64, 4u32),
            (1, 2, 2, 5),
            (2, 5, 5, 3),
            (1, 4, 8, 4),
        ] {
            let p = x_coeffs(m, n, r).unwrap();
            let mut shifted = vec![BigRational::zero(); r as usize + 1];
            // (1 − d x)^k expanded by repeated multiplication.
            let mut pow = vec![BigRational::one()];
            for (k, c) in p.coeffs.iter().enumerate() {
                for (j, b) in pow.iter().enumerate() {
                    shifted[j] += c * b;
                }
                if k < r as usize {
                    let mut next = vec![BigRational::zero(); pow.len() + 1];
                    for (j, b) in pow.iter().enumerate() {
                        next[j] += b;
                        next[j + 1] -= b * rat(d, 1);
                    }
                    pow = next;
                }
            }
            let mut g = BigInt::zero();
            for c in &shifted {
                if !c.is_zero() {
                    g = g.gcd(c.numer());
                }
            }
            assert_eq!(numer_n(m, n, &big(d), r).unwrap(), g, "({m},{n},{d},{r})");
        }
    }

    #[test]
    fn valuation_product_examples() {
        for n in [2u32, 3, 4, 6, 10] {
            let v = cal_n(&big(1), n).unwrap();
            assert!(v.is_one(), "n = {n}");
        }
        let v = cal_n(&big(3), 3).unwrap();
        assert_eq!(v.factors, vec![(3u64, rat(1, 1))]);
        let b = v.value_ball(96).unwrap();
        assert!(b.contains_rational(&rat(3, 1)));

        let v = cal_n(&big(9), 3).unwrap();
        assert_eq!(v.factors, vec![(3u64, rat(3, 2))]);
        let b = v.value_ball(96).unwrap();
        // 3^{3/2} = 5.196152...
        assert_eq!(b.gt_rational(&rat(5196152, 1000000)), Some(true));
        assert_eq!(b.gt_rational(&rat(5196153, 1000000)), Some(false));
    }

    #[test]
    fn gamma_ratio_examples() {
        assert_eq!(
            gamma_ratio_bounds(1, 3, 0).unwrap(),
            (rat(1, 1), rat(1, 1))
        );
        assert_eq!(
            gamma_ratio_bounds(1, 3, 2).unwrap(),
            (rat(9, 5), rat(14, 9))
        );
        assert_eq!(
            gamma_ratio_bounds(1, 2, 1).unwrap(),
            (rat(2, 1), rat(3, 2))
        );
    }

    #[test]
    fn growth_bound_checker_examples() {
        let ten = RealBall::from_i64(10, 64);
        let rep = check_cd_bound(1, 3, &big(1), &ten, &ten, 5).unwrap();
        assert!(rep.all_pass());

        let one = RealBall::from_i64(1, 64);
        let rep = check_cd_bound(1, 3, &big(1), &one, &one, 2).unwrap();
        assert!(rep.failures().contains(&2));
        assert_eq!(rep.rows[2].left, rat(9, 1));

        let two = RealBall::from_i64(2, 64);
        let rep = check_cd_bound(1, 3, &big(1), &two, &one, 0).unwrap();
        assert!(rep.all_pass());
    }

    #[test]
    fn calibration_is_self_consistent() {
        let (c, d, empirical) = calibrate_cd(1, 2, &big(1), 60).unwrap();
        assert!(empirical);
        let rep = check_cd_bound(1, 2, &big(1), &c, &d, 60).unwrap();
        assert!(rep.all_pass());

        let (c3, d3, _) = calibrate_cd(1, 3, &big(3), 60).unwrap();
        let rep3 = check_cd_bound(1, 3, &big(3), &c3, &d3, 60).unwrap();
        assert!(rep3.all_pass());
    }
}
