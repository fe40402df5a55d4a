//! Rigorous evaluation of the degree-(2r+1) remainder: directly as the
//! difference of the two polynomial branches, and independently as a
//! validated integral along the straight path from 1 to z.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use super::x_coeffs;
use crate::error::{Error, Result};
use crate::qfield::ball::{Ball, RealBall};

/// The enclosure must stay off (−∞, 0]: either certainly in the right
/// half-plane or with imaginary part certainly nonzero.
fn off_cut(z: &Ball) -> bool {
    z.re_ball().sign_certain() == Some(std::cmp::Ordering::Greater)
        || z.im_ball().sign_certain() == Some(std::cmp::Ordering::Greater)
        || z.im_ball().sign_certain() == Some(std::cmp::Ordering::Less)
}

/// z^{m/n}·z^r·X(1/z) − X(z) as a rigorous enclosure: the quantity whose
/// smallness drives the whole approximation scheme.
pub fn remainder_difference(z: &Ball, m: u32, n: u32, r: u32, precision: u32) -> Result<Ball> {
    if !off_cut(z) {
        return Err(Error::Domain(
            "remainder evaluation needs an enclosure off (-inf, 0]".into(),
        ));
    }
    let wp = precision + 32;
    let zb = z.rescale(wp);
    let p = x_coeffs(m, n, r)?;
    let root = zb.principal_power(m, n)?;
    // S1 = Σ c_k z^{r−k}, S2 = Σ c_k z^k, both by Horner.
    let mut s1 = Ball::from_rational(&p.coeffs[0], wp);
    for k in 1..=r as usize {
        s1 = s1.mul(&zb).add(&Ball::from_rational(&p.coeffs[k], wp));
    }
    let mut s2 = Ball::from_rational(&p.coeffs[r as usize], wp);
    for k in (0..r as usize).rev() {
        s2 = s2.mul(&zb).add(&Ball::from_rational(&p.coeffs[k], wp));
    }
    Ok(root.mul(&s1).sub(&s2).rescale(precision))
}

fn binom_big(n: u32, k: u32) -> BigInt {
    let mut b = BigInt::one();
    for i in 0..k {
        b = b * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    b
}

fn poly_mul(a: &[Ball], b: &[Ball], wp: u32) -> Vec<Ball> {
    let mut out = vec![Ball::zero(wp); a.len() + b.len() - 1];
    for (i, ai) in a.iter().enumerate() {
        for (j, bj) in b.iter().enumerate() {
            out[i + j] = out[i + j].add(&ai.mul(bj));
        }
    }
    out
}

fn poly_eval(p: &[Ball], at: &Ball) -> Ball {
    let mut acc = p[p.len() - 1].clone();
    for c in p.iter().rev().skip(1) {
        acc = acc.mul(at).add(c);
    }
    acc
}

/// The same remainder, evaluated as
/// pref·∫₁^z (1−t)^r (t−z)^r t^{m/n−r−1} dt with
/// pref = (m/n)·∏_{j=1..r}(j+m/n)/j, by validated series quadrature: the path
/// is cut into uniform subsegments, on each the integrand is expanded as a
/// polynomial in the path offset with ball coefficients plus a proven tail
/// bound, and monomials are integrated exactly.
pub fn remainder_integral(z: &Ball, m: u32, n: u32, r: u32, precision: u32) -> Result<Ball> {
    if !off_cut(z) {
        return Err(Error::Domain(
            "remainder evaluation needs an enclosure off (-inf, 0]".into(),
        ));
    }
    let wp = precision + 48;
    let zb = z.rescale(wp);
    let one = Ball::one(wp);
    let w1 = zb.sub(&one); // z − 1
    let omega = BigRational::new(BigInt::from(m), BigInt::from(n));
    let mut pref = omega.clone();
    for j in 1..=r as i64 {
        let jq = BigRational::from_integer(BigInt::from(j));
        pref *= (&jq + &omega) / &jq;
    }

    let w1_abs_hi = w1.abs().abs_hi_scaled();

    // Segment count: |δ|/|t₀| ≤ 1/4 and every path tube off the cut.
    let mut m_segs: u32 = 8;
    'choose: loop {
        for i in 0..m_segs {
            let s_c = BigRational::new(BigInt::from(2 * i + 1), BigInt::from(2 * m_segs));
            let t0 = one.add(&zb.sub(&one).mul(&Ball::from_rational(&s_c, wp)));
            let rho: BigInt = &w1_abs_hi / BigInt::from(2 * m_segs) + 1;
            let tube = t0.add(&Ball::new_raw(BigInt::zero(), BigInt::zero(), rho.clone(), wp));
            let ok_cut = off_cut(&tube) && tube.excludes_zero();
            let t0_lo = {
                let a = t0.abs();
                a.mid_scaled() - a.rad_scaled()
            };
            let ok_ratio = !t0_lo.is_negative() && BigInt::from(4) * &rho <= t0_lo;
            if !(ok_cut && ok_ratio) {
                if m_segs >= 1 << 12 {
                    return Err(Error::Domain(
                        "integration path cannot be separated from the branch cut".into(),
                    ));
                }
                m_segs *= 2;
                continue 'choose;
            }
        }
        break;
    }

    let mu = &omega - BigRational::from_integer(BigInt::from(r + 1)); // m/n − r − 1
    let mu_ceil_abs = (r + 1) as i64; // |μ| < r + 1
    let mut total = Ball::zero(wp);
    for i in 0..m_segs {
        let s_c = BigRational::new(BigInt::from(2 * i + 1), BigInt::from(2 * m_segs));
        let t0 = one.add(&w1.mul(&Ball::from_rational(&s_c, wp)));
        let rho: BigInt = &w1_abs_hi / BigInt::from(2 * m_segs) + 1;
        let delta_disc = Ball::new_raw(BigInt::zero(), BigInt::zero(), rho.clone(), wp);

        // A(δ) = (1 − t₀ − δ)^r and B(δ) = (t₀ − z + δ)^r as exact binomial
        // expansions with ball coefficients.
        let a0 = one.sub(&t0);
        let b0 = t0.sub(&zb);
        let mut a_poly = Vec::with_capacity(r as usize + 1);
        let mut b_poly = Vec::with_capacity(r as usize + 1);
        for k in 0..=r {
            let c = binom_big(r, k);
            let sign = if k % 2 == 0 { 1 } else { -1 };
            let a_c = a0
                .pow_u32(r - k)
                .mul(&Ball::from_rational(
                    &BigRational::from_integer(&c * BigInt::from(sign)),
                    wp,
                ));
            a_poly.push(a_c);
            b_poly.push(b0.pow_u32(r - k).mul(&Ball::from_rational(
                &BigRational::from_integer(c),
                wp,
            )));
        }
        let ab = if r == 0 {
            vec![one.clone()]
        } else {
            poly_mul(&a_poly, &b_poly, wp)
        };

        // C(δ) = t₀^μ (1 + δ/t₀)^μ: binomial series in x = δ/t₀ with |x| ≤ 1/4.
        let t0_mu = t0.principal_power(m, n)?.div(&t0.pow_u32(r + 1))?;
        let t0_inv = t0.inv()?;
        let q_hi = {
            // upper bound of |x| = ρ/|t₀| as a real ball
            let t0_abs = t0.abs();
            RealBall::new_raw(BigInt::zero(), rho.clone(), wp)
                .abs()
                .div(&t0_abs)?
                .abs()
        };
        let mut c_poly: Vec<Ball> = Vec::new();
        let mut coef = BigRational::one(); // C(μ, j)
        let mut t0_inv_pow = one.clone();
        let mut j: i64 = 0;
        let tail_coef;
        loop {
            c_poly.push(t0_inv_pow.mul(&Ball::from_rational(&coef, wp)));
            // next coefficient C(μ, j+1)
            let jq = BigRational::from_integer(BigInt::from(j));
            coef = &coef * (&mu - &jq) / (&jq + BigRational::one());
            t0_inv_pow = t0_inv_pow.mul(&t0_inv);
            j += 1;
            if j >= 2 * mu_ceil_abs + 2 {
                // From here each term shrinks by at least 3/8; stop once the
                // bound on the next term is negligible at working precision.
                let next_hi = RealBall::from_rational(&coef.abs(), wp)
                    .mul(&q_hi.pow_u32(j as u32))
                    .abs_hi_scaled();
                if next_hi <= BigInt::from(4) || j > 2 * (wp as i64) + 2 * mu_ceil_abs {
                    tail_coef = next_hi;
                    break;
                }
            }
        }
        // Tail of the series: ratio ≤ (1 + |μ|/(j+1))·|x| ≤ (3/2)(1/4) = 3/8,
        // so the tail is below 2·|next term| ≤ 2·tail_coef ulps (times |t₀^μ|).
        let full = poly_mul(&ab, &c_poly, wp)
            .iter()
            .map(|c| c.mul(&t0_mu))
            .collect::<Vec<_>>();

        // ∫ over the segment: δ = u·(z−1), u ∈ [−w, w], w = 1/(2M):
        // odd powers vanish, even powers give 2w^{k+1}/(k+1).
        let mut seg = Ball::zero(wp);
        let w_rat = BigRational::new(BigInt::one(), BigInt::from(2 * m_segs));
        let mut w1_pow = one.clone();
        let mut w_pow = w_rat.clone(); // w^{k+1}
        for (k, cf) in full.iter().enumerate() {
            if k % 2 == 0 {
                let weight = BigRational::from_integer(BigInt::from(2))
                    * &w_pow
                    / BigRational::from_integer(BigInt::from((k + 1) as u64));
                seg = seg.add(&cf.mul(&w1_pow).mul(&Ball::from_rational(&weight, wp)));
            }
            w1_pow = w1_pow.mul(&w1);
            w_pow *= &w_rat;
        }
        // Series-tail error: 2w·sup|A·B|·|t₀^μ|·2·tail_coef.
        let ab_sup = poly_eval(&ab, &delta_disc).abs().abs_hi_scaled();
        let t0_mu_hi = t0_mu.abs().abs_hi_scaled();
        let tail_ulps = {
            // (2w)·ab_sup·t0_mu_hi·2·tail_coef, all in ulps at wp: three
            // scaled factors need dividing by 2^{2wp}; round up and pad.
            let prod = BigInt::from(4) * ab_sup * t0_mu_hi * &tail_coef
                / BigInt::from(2 * m_segs);
            (prod >> (2 * wp)) + 2
        };
        seg = seg.add(&Ball::new_raw(BigInt::zero(), BigInt::zero(), tail_ulps, wp));
        total = total.add(&seg);
    }

    let result = total
        .mul(&w1)
        .mul(&Ball::from_rational(&pref, wp));
    Ok(result.rescale(precision))
}
