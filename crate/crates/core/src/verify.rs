//! Brute-force validation of a finished measure: scans every denominator up
//! to a bound and checks the claimed inequality |alpha - p/q| > 1/(c|q|^(k+1))
//! with rigorous enclosures, plus a certified continued-fraction oracle for
//! the rational-integer case.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::measures::pow_ball;
use crate::qfield::{core, Ball, RealBall};

/// Certified continued-fraction convergents of a real enclosure. The list
/// stops early either because the input is exactly rational (`exact`) or
/// because the enclosure could not certify the next partial quotient
/// (`truncation` holds the reason).
#[derive(Clone, Debug)]
pub struct Convergents {
    pub pairs: Vec<(BigInt, BigInt)>,
    pub exact: bool,
    pub truncation: Option<String>,
}

pub fn convergents(alpha: &RealBall, depth: u32) -> Convergents {
    cf_interval(alpha.lo_rational(), alpha.hi_rational(), depth)
}

/// Convergents of an exactly known rational target; always terminates with
/// the target itself as the final pair.
pub fn convergents_exact(alpha: &BigRational, depth: u32) -> Convergents {
    cf_interval(alpha.clone(), alpha.clone(), depth)
}

fn cf_interval(mut lo: BigRational, mut hi: BigRational, depth: u32) -> Convergents {
    let mut pairs: Vec<(BigInt, BigInt)> = Vec::new();
    let mut exact = false;
    let mut truncation = None;
    // p_{-2}/q_{-2} and p_{-1}/q_{-1} of the standard recurrence
    let (mut p2, mut q2) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    while (pairs.len() as u32) < depth {
        let fl = lo.floor();
        if fl != hi.floor() {
            truncation = Some(format!(
                "partial quotient {} undecided: the enclosure spans an integer boundary",
                pairs.len()
            ));
            break;
        }
        let a = fl.to_integer();
        let p = &a * &p1 + &p2;
        let q = &a * &q1 + &q2;
        pairs.push((p.clone(), q.clone()));
        p2 = std::mem::replace(&mut p1, p);
        q2 = std::mem::replace(&mut q1, q);
        let fr_lo = &lo - &fl;
        let fr_hi = &hi - &fl;
        if fr_hi.is_zero() {
            // both endpoints integral here, so the input was exactly rational
            exact = true;
            break;
        }
        if fr_lo.is_zero() {
            truncation = Some(format!(
                "partial quotient {}: the enclosure touches an integer, next step unbounded",
                pairs.len()
            ));
            break;
        }
        // x -> 1/(x - a) maps [fr_lo, fr_hi] to [1/fr_hi, 1/fr_lo]
        lo = fr_hi.recip();
        hi = fr_lo.recip();
    }
    Convergents { pairs, exact, truncation }
}

/// Outcome of a denominator scan. `worst_q` and `worst_p` are coordinates in
/// the ring basis {1, omega}; the rational-integer scan uses (value, 0).
/// `pass` is true only when every scanned margin certainly exceeds 1;
/// `indeterminate_q` lists denominators whose margin enclosure contained 1,
/// and `exact_hit` marks the degenerate case where alpha equals a scanned
/// fraction exactly (margin 0, automatic fail).
#[derive(Clone, Debug)]
pub struct ScanResult {
    pub q_max: u64,
    pub worst_q: (BigInt, BigInt),
    pub worst_p: (BigInt, BigInt),
    pub worst_margin: RealBall,
    pub pass: bool,
    pub exact_hit: bool,
    pub indeterminate_q: Vec<(BigInt, BigInt)>,
}

fn round_nearest(x: &BigRational) -> BigInt {
    let half = BigRational::new(BigInt::one(), BigInt::from(2));
    (x + half).floor().to_integer()
}

fn require_positive(b: &RealBall, what: &str) -> Result<()> {
    if b.gt_rational(&BigRational::zero()) != Some(true) {
        return Err(Error::Precondition(format!("{what} must certainly be positive")));
    }
    Ok(())
}

/// The enclosure of alpha must resolve distances down to q_max^(-kappa-2),
/// otherwise margins near good approximations are undecidable by design.
fn check_alpha_radius(rad: &BigRational, kappa: &RealBall, q_max: u64) -> Result<()> {
    if rad.is_zero() {
        return Ok(());
    }
    let k_hi = kappa.hi_rational().ceil().to_integer();
    let expo = (&k_hi + 2u32).max(BigInt::from(2));
    let expo: u32 = expo
        .try_into()
        .ok()
        .filter(|e| *e <= (1 << 20))
        .ok_or_else(|| Error::Input("kappa too large for a denominator scan".into()))?;
    let bound = BigRational::from(BigInt::from(q_max)).pow(expo as i32);
    if rad * &bound >= BigRational::one() {
        return Err(Error::Input(
            "alpha enclosure too wide for this q_max: raise the evaluation precision".into(),
        ));
    }
    Ok(())
}

struct MarginTracker {
    enclosure: Option<RealBall>,
    argmin: Option<(BigRational, (BigInt, BigInt), (BigInt, BigInt))>,
    all_above: bool,
    indeterminate_q: Vec<(BigInt, BigInt)>,
    exact_hit: bool,
}

impl MarginTracker {
    fn new() -> Self {
        MarginTracker {
            enclosure: None,
            argmin: None,
            all_above: true,
            indeterminate_q: Vec::new(),
            exact_hit: false,
        }
    }

    /// Record one margin ball. Returns false when scanning can stop (an
    /// exact zero margin cannot be undercut).
    fn record(&mut self, margin: RealBall, q: (BigInt, BigInt), p: (BigInt, BigInt)) -> bool {
        let zero = BigRational::zero();
        if margin.cmp_rational(&zero) == Some(Ordering::Equal) {
            self.exact_hit = true;
            self.all_above = false;
            self.enclosure = Some(match self.enclosure.take() {
                Some(e) => e.min_enclosure(&margin),
                None => margin.clone(),
            });
            self.argmin = Some((zero, q, p));
            return false;
        }
        match margin.gt_rational(&BigRational::one()) {
            Some(true) => {}
            Some(false) => self.all_above = false,
            None => {
                self.all_above = false;
                self.indeterminate_q.push(q.clone());
            }
        }
        let key = margin.lo_rational() + margin.hi_rational();
        self.enclosure = Some(match self.enclosure.take() {
            Some(e) => e.min_enclosure(&margin),
            None => margin,
        });
        match &self.argmin {
            Some((best, _, _)) if *best <= key => {}
            _ => self.argmin = Some((key, q, p)),
        }
        true
    }

    fn finish(self, q_max: u64) -> Result<ScanResult> {
        let (_, worst_q, worst_p) = self
            .argmin
            .ok_or_else(|| Error::Input("empty scan range".into()))?;
        Ok(ScanResult {
            q_max,
            worst_q,
            worst_p,
            worst_margin: self.enclosure.expect("enclosure set with argmin"),
            pass: self.all_above,
            exact_hit: self.exact_hit,
            indeterminate_q: self.indeterminate_q,
        })
    }
}

/// Scans every rational-integer denominator 1 <= q <= q_max with p the
/// nearest integer(s) to q*alpha and returns the minimal rigorous margin
/// |alpha - p/q| * c * q^(kappa+1).
pub fn scan_real(
    alpha: &RealBall,
    c: &RealBall,
    kappa: &RealBall,
    q_max: u64,
) -> Result<ScanResult> {
    if q_max == 0 || q_max > (1 << 40) {
        return Err(Error::Input("q_max must lie in 1..=2^40".into()));
    }
    require_positive(c, "c")?;
    require_positive(kappa, "kappa")?;
    let rad = (alpha.hi_rational() - alpha.lo_rational()) / BigRational::from(BigInt::from(2));
    check_alpha_radius(&rad, kappa, q_max)?;

    let wp = alpha.precision();
    let mut tracker = MarginTracker::new();
    'scan: for q in 1..=q_max {
        let zq = alpha.mul_int(q as i64);
        let q_ball = RealBall::from_i64(q as i64, wp);
        // margin = c * |q alpha - p| * q^kappa, shared power factor per q
        let q_pow = pow_ball(&q_ball, kappa)?;
        let p_lo = round_nearest(&zq.lo_rational());
        let p_hi = round_nearest(&zq.hi_rational());
        let mut p = p_lo.clone();
        while p <= p_hi {
            let dist = zq.sub(&RealBall::from_bigint(&p, wp)).abs();
            let margin = c.mul(&dist).mul(&q_pow);
            let keep_going = tracker.record(
                margin,
                (BigInt::from(q), BigInt::zero()),
                (p.clone(), BigInt::zero()),
            );
            if !keep_going {
                break 'scan;
            }
            p += 1u32;
        }
    }
    tracker.finish(q_max)
}

fn isqrt_floor(n: &BigInt) -> BigInt {
    if n.is_negative() {
        BigInt::zero()
    } else {
        n.sqrt()
    }
}

/// Ring-of-integers data for Q(sqrt(-d)): basis {1, omega} with norm form
/// N(a + b*omega) = a^2 + d b^2, or a^2 + ab + b^2 (1+d)/4 when d = 3 mod 4.
struct ImquadRing {
    d: BigInt,
    half_basis: bool,
}

impl ImquadRing {
    fn new(d: &BigInt) -> Result<Self> {
        if !d.is_positive() {
            return Err(Error::Input("the field discriminant parameter must be positive".into()));
        }
        if core(d)? != *d {
            return Err(Error::Input("the field parameter must be squarefree".into()));
        }
        let half_basis = d.mod_floor(&BigInt::from(4)) == BigInt::from(3);
        Ok(ImquadRing { d: d.clone(), half_basis })
    }

    fn norm(&self, a: &BigInt, b: &BigInt) -> BigInt {
        if self.half_basis {
            a * a + a * b + b * b * ((&self.d + 1) / 4)
        } else {
            a * a + &self.d * b * b
        }
    }

    /// All lattice points 0 < |a + b*omega| <= q_max, b-major order.
    fn points(&self, q_max: u64) -> Vec<(BigInt, BigInt)> {
        let qq = BigInt::from(q_max) * BigInt::from(q_max);
        let mut out = Vec::new();
        if self.half_basis {
            // (2a + b)^2 + d b^2 <= 4 q_max^2
            let b_max = isqrt_floor(&(&qq * 4 / &self.d));
            let mut b = -&b_max;
            while b <= b_max {
                let s = isqrt_floor(&(&qq * 4 - &self.d * &b * &b));
                // 2a + b in [-s, s]
                let a_lo = (-&s - &b).div_floor(&BigInt::from(2))
                    + if (-&s - &b).mod_floor(&BigInt::from(2)).is_zero() {
                        BigInt::zero()
                    } else {
                        BigInt::one()
                    };
                let a_hi = (&s - &b).div_floor(&BigInt::from(2));
                let mut a = a_lo;
                while a <= a_hi {
                    if !(a.is_zero() && b.is_zero()) {
                        out.push((a.clone(), b.clone()));
                    }
                    a += 1u32;
                }
                b += 1u32;
            }
        } else {
            let b_max = isqrt_floor(&(&qq / &self.d));
            let mut b = -&b_max;
            while b <= b_max {
                let a_max = isqrt_floor(&(&qq - &self.d * &b * &b));
                let mut a = -&a_max;
                while a <= a_max {
                    if !(a.is_zero() && b.is_zero()) {
                        out.push((a.clone(), b.clone()));
                    }
                    a += 1u32;
                }
                b += 1u32;
            }
        }
        out
    }
}

/// The nonzero ring-integer lattice points of Q(sqrt(-d)) with |q| <= q_max,
/// as coordinates over {1, omega}. Exposed for counting cross-checks.
pub fn imquad_lattice(q_max: u64, d: &BigInt) -> Result<Vec<(BigInt, BigInt)>> {
    Ok(ImquadRing::new(d)?.points(q_max))
}

/// Scans every ring integer q of Q(sqrt(-d)) with 0 < |q| <= q_max against
/// the nearest ring points p to q*alpha.
pub fn scan_imquad(
    alpha: &Ball,
    c: &RealBall,
    kappa: &RealBall,
    q_max: u64,
    d: &BigInt,
) -> Result<ScanResult> {
    if q_max == 0 || q_max > (1 << 20) {
        return Err(Error::Input("q_max must lie in 1..=2^20 for a lattice scan".into()));
    }
    require_positive(c, "c")?;
    require_positive(kappa, "kappa")?;
    let ring = ImquadRing::new(d)?;
    let wp = alpha.precision_bits();
    let two_pow = BigInt::one() << wp;
    let rad = BigRational::new(alpha.radius_scaled().clone(), two_pow);
    check_alpha_radius(&rad, kappa, q_max)?;

    let sqrt_d = RealBall::from_bigint(d, wp + 32).sqrt()?;
    let omega_im = if ring.half_basis {
        sqrt_d.div_int(2)
    } else {
        sqrt_d
    };
    let omega_re = if ring.half_basis {
        BigRational::new(BigInt::one(), BigInt::from(2))
    } else {
        BigRational::zero()
    };
    let kappa_half = kappa.div_int(2);
    let mut pow_cache: BTreeMap<BigInt, RealBall> = BTreeMap::new();

    let mut tracker = MarginTracker::new();
    'scan: for (a, b) in ring.points(q_max) {
        let q_re = RealBall::from_rational(&(BigRational::from(a.clone()) + &omega_re * &b), wp);
        let q_im = omega_im.mul(&RealBall::from_bigint(&b, wp));
        let q_ball = Ball::from_re_im(&q_re, &q_im);
        let z = q_ball.mul(alpha);

        // nearest lattice points: candidate second coordinates around
        // Im(z)/Im(omega), then first coordinates around Re(z) - v*Re(omega)
        let v_hat = z.im_ball().div(&omega_im)?;
        let v_lo = round_nearest(&v_hat.lo_rational()) - BigInt::one();
        let v_hi = round_nearest(&v_hat.hi_rational()) + BigInt::one();
        let mut best_dist: Option<RealBall> = None;
        let mut best_p: Option<(BigInt, BigInt)> = None;
        let mut v = v_lo.clone();
        while v <= v_hi {
            let re_res = z
                .re_ball()
                .sub(&RealBall::from_rational(&(&omega_re * &v), wp));
            let u_lo = round_nearest(&re_res.lo_rational()) - BigInt::one();
            let u_hi = round_nearest(&re_res.hi_rational()) + BigInt::one();
            let mut u = u_lo.clone();
            while u <= u_hi {
                let p_re =
                    RealBall::from_rational(&(BigRational::from(u.clone()) + &omega_re * &v), wp);
                let p_im = omega_im.mul(&RealBall::from_bigint(&v, wp));
                let p_ball = Ball::from_re_im(&p_re, &p_im);
                let dist = z.sub(&p_ball).abs();
                let better = match &best_dist {
                    Some(cur) => {
                        dist.lo_rational() + dist.hi_rational()
                            < cur.lo_rational() + cur.hi_rational()
                    }
                    None => true,
                };
                if better {
                    best_dist = Some(match best_dist.take() {
                        Some(cur) => cur.min_enclosure(&dist),
                        None => dist,
                    });
                    best_p = Some((u.clone(), v.clone()));
                } else {
                    let cur = best_dist.take().expect("set above");
                    best_dist = Some(cur.min_enclosure(&dist));
                }
                u += 1u32;
            }
            v += 1u32;
        }
        let dist = best_dist.expect("candidate grid nonempty");
        let p_coord = best_p.expect("candidate grid nonempty");

        let nq = ring.norm(&a, &b);
        let q_pow = match pow_cache.get(&nq) {
            Some(p) => p.clone(),
            None => {
                let p = pow_ball(&RealBall::from_bigint(&nq, wp), &kappa_half)?;
                pow_cache.insert(nq.clone(), p.clone());
                p
            }
        };
        let margin = c.mul(&dist).mul(&q_pow);
        if !tracker.record(margin, (a, b), p_coord) {
            break 'scan;
        }
    }
    tracker.finish(q_max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn golden(prec: u32) -> RealBall {
        let one = RealBall::from_i64(1, prec);
        RealBall::from_i64(5, prec)
            .sqrt()
            .unwrap()
            .add(&one)
            .div_int(2)
    }

    #[test]
    fn convergents_of_the_golden_ratio() {
        let cs = convergents(&golden(192), 5);
        let want = [(1, 1), (2, 1), (3, 2), (5, 3), (8, 5)];
        assert!(!cs.exact);
        assert!(cs.truncation.is_none());
        let got: Vec<(i64, i64)> = cs
            .pairs
            .iter()
            .map(|(p, q)| (i64::try_from(p).unwrap(), i64::try_from(q).unwrap()))
            .collect();
        assert_eq!(got, want);
    }

    #[test]
    fn convergents_of_sqrt_two_satisfy_pell() {
        let a = RealBall::from_i64(2, 192).sqrt().unwrap();
        let cs = convergents(&a, 8);
        assert!(cs.truncation.is_none());
        assert_eq!(cs.pairs[0], (BigInt::from(1), BigInt::from(1)));
        assert_eq!(cs.pairs[1], (BigInt::from(3), BigInt::from(2)));
        assert_eq!(cs.pairs[2], (BigInt::from(7), BigInt::from(5)));
        assert_eq!(cs.pairs[3], (BigInt::from(17), BigInt::from(12)));
        for (p, q) in &cs.pairs {
            let pell = p * p - BigInt::from(2) * q * q;
            assert!(pell == BigInt::one() || pell == BigInt::from(-1));
        }
    }

    #[test]
    fn convergents_terminate_on_exact_rationals() {
        let cs = convergents_exact(&rat(7, 3), 10);
        assert!(cs.exact);
        assert_eq!(
            cs.pairs,
            vec![
                (BigInt::from(2), BigInt::from(1)),
                (BigInt::from(7), BigInt::from(3)),
            ]
        );
    }

    #[test]
    fn convergents_truncate_on_wide_enclosures() {
        // radius large enough that the second quotient spans an integer
        let wide = RealBall::from_rational(&rat(3, 2), 8);
        let wobble = RealBall::new_raw(BigInt::zero(), BigInt::from(76), 8); // +/- 0.3
        let cs = convergents(&wide.add(&wobble), 10);
        assert!(cs.truncation.is_some());
        assert!((cs.pairs.len() as u32) < 10);
    }

    #[test]
    fn golden_ratio_scan_has_its_worst_margin_at_one() {
        let prec = 192;
        let phi = golden(prec);
        let c = RealBall::from_i64(3, prec);
        let kap = RealBall::from_i64(1, prec);
        let res = scan_real(&phi, &c, &kap, 1000).unwrap();
        assert!(res.pass);
        assert!(!res.exact_hit);
        assert!(res.indeterminate_q.is_empty());
        assert_eq!(res.worst_q, (BigInt::from(1), BigInt::zero()));
        assert_eq!(res.worst_p, (BigInt::from(2), BigInt::zero()));
        // reference margin 3(2 - phi)
        let two = RealBall::from_i64(2, prec);
        let reference = two.sub(&phi).mul_int(3);
        assert!(res.worst_margin.overlaps(&reference));
        assert!(res.worst_margin.gt_rational(&BigRational::one()) == Some(true));
    }

    #[test]
    fn scan_at_q_one_is_the_distance_to_the_integers() {
        let prec = 128;
        let a = RealBall::from_i64(3, prec).sqrt().unwrap();
        let c = RealBall::from_i64(2, prec);
        let kap = RealBall::from_rational(&rat(3, 2), prec);
        let res = scan_real(&a, &c, &kap, 1).unwrap();
        let dist = a.sub(&RealBall::from_i64(2, prec)).abs();
        assert!(res.worst_margin.overlaps(&dist.mul_int(2)));
    }

    #[test]
    fn rational_alpha_fails_automatically() {
        let a = RealBall::from_rational(&rat(1, 2), 128);
        let c = RealBall::from_i64(3, 128);
        let kap = RealBall::from_i64(1, 128);
        let res = scan_real(&a, &c, &kap, 4).unwrap();
        assert!(!res.pass);
        assert!(res.exact_hit);
        assert_eq!(res.worst_q, (BigInt::from(2), BigInt::zero()));
        assert_eq!(res.worst_p, (BigInt::from(1), BigInt::zero()));
        assert!(res.worst_margin.cmp_rational(&BigRational::zero()) == Some(Ordering::Equal));
    }

    #[test]
    fn worst_margin_is_monotone_in_q_max() {
        let prec = 192;
        let phi = golden(prec);
        let c = RealBall::from_i64(3, prec);
        let kap = RealBall::from_i64(1, prec);
        let small = scan_real(&phi, &c, &kap, 10).unwrap();
        let large = scan_real(&phi, &c, &kap, 500).unwrap();
        assert!(large.worst_margin.lo_rational() <= small.worst_margin.lo_rational());
        assert!(large.worst_margin.hi_rational() <= small.worst_margin.hi_rational());
    }

    #[test]
    fn worst_denominator_is_a_convergent_denominator() {
        let prec = 192;
        let a = RealBall::from_i64(2, prec).sqrt().unwrap();
        let c = RealBall::from_i64(3, prec);
        let kap = RealBall::from_i64(1, prec);
        let res = scan_real(&a, &c, &kap, 100).unwrap();
        assert!(res.pass);
        let cs = convergents(&a, 12);
        let qs: Vec<BigInt> = cs.pairs.iter().map(|(_, q)| q.clone()).collect();
        assert!(
            qs.contains(&res.worst_q.0),
            "worst q = {} not a convergent denominator",
            res.worst_q.0
        );
    }

    #[test]
    fn scan_rejects_underresolved_alpha() {
        let a = golden(16);
        let c = RealBall::from_i64(3, 16);
        let kap = RealBall::from_i64(1, 16);
        assert!(matches!(
            scan_real(&a, &c, &kap, 100_000),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn gaussian_disk_of_radius_five_has_eighty_points() {
        let pts = imquad_lattice(5, &BigInt::one()).unwrap();
        assert_eq!(pts.len(), 80);
    }

    #[test]
    fn eisenstein_lattice_counts_match_the_norm_form() {
        let d = BigInt::from(3);
        let pts = imquad_lattice(3, &d).unwrap();
        let ring = ImquadRing::new(&d).unwrap();
        let qq = BigInt::from(9);
        for (a, b) in &pts {
            assert!(ring.norm(a, b) <= qq);
            assert!(!(a.is_zero() && b.is_zero()));
        }
        // brute-force count over a generous box
        let mut count = 0;
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                let (a, b) = (BigInt::from(a), BigInt::from(b));
                if !(a.is_zero() && b.is_zero()) && ring.norm(&a, &b) <= qq {
                    count += 1;
                }
            }
        }
        assert_eq!(pts.len(), count);
    }

    #[test]
    fn gaussian_scan_of_a_real_target_matches_the_real_scan_at_the_worst_point() {
        let prec = 192;
        let phi = golden(prec);
        let alpha = Ball::from_real(&phi);
        let c = RealBall::from_i64(3, prec);
        let kap = RealBall::from_i64(1, prec);
        let res = scan_imquad(&alpha, &c, &kap, 5, &BigInt::one()).unwrap();
        assert!(res.pass, "indeterminate at {:?}", res.indeterminate_q);
        // units achieve the same margin as q = 1 in the real scan
        let ring = ImquadRing::new(&BigInt::one()).unwrap();
        assert!(ring.norm(&res.worst_q.0, &res.worst_q.1).is_one());
        let reference = RealBall::from_i64(2, prec).sub(&phi).mul_int(3);
        assert!(res.worst_margin.overlaps(&reference));
    }

    #[test]
    fn half_basis_scan_runs_and_certifies() {
        let prec = 192;
        // alpha = sqrt(2) + i sqrt(3), away from the Eisenstein lattice
        let re = RealBall::from_i64(2, prec).sqrt().unwrap();
        let im = RealBall::from_i64(3, prec).sqrt().unwrap();
        let alpha = Ball::from_re_im(&re, &im);
        let c = RealBall::from_i64(4, prec);
        let kap = RealBall::from_i64(1, prec);
        let res = scan_imquad(&alpha, &c, &kap, 4, &BigInt::from(3)).unwrap();
        assert!(res.indeterminate_q.is_empty());
        assert!(res.worst_margin.gt_rational(&BigRational::zero()) == Some(true));
    }
}
