//! Exact approximant pairs p_r, q_r built from the dense polynomial family
//! evaluated on a conjugate pair, with integrality and conjugacy certified in
//! exact arithmetic, plus rigorous per-index growth verification against the
//! measure constants.

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::error::{Error, Result};
use crate::hyperg::remainder::remainder_difference;
use crate::hyperg::{denom_d, numer_n, x_coeffs, x_star_eval};
use crate::measures::{
    d_search, h_sequence, measure_pair, measure_pair_near_one, MeasureReport, PairInstance,
    QuadIntInstance,
};
use crate::qfield::radical::RadElem;
use crate::qfield::{escalate, Ball, KElem, RealBall, TowerElem, PRECISION_CAP};

/// One exact approximant pair. `scale` is the base-field element
/// h_r·D_r/(g^r·N_r) that multiplies the two homogeneous polynomial values;
/// the integrality fields record the certificates (construction fails hard
/// if either is false, so they are true on every constructed pair).
#[derive(Clone, Debug)]
pub struct ApproximantPair {
    pub r: u32,
    pub p: TowerElem,
    pub q: TowerElem,
    pub p_integral: bool,
    pub q_integral: bool,
    pub h_r: RadElem,
    pub scale: KElem,
}

/// Builds the pair for index r with an explicit scale factor h_r and scaling
/// integer d. h_r/g^r must land in the base field; p and q must come out as
/// algebraic integers and exact conjugates, all verified exactly.
pub fn build_pq_with(
    inst: &PairInstance,
    r: u32,
    h_r: &RadElem,
    d: &BigInt,
) -> Result<ApproximantPair> {
    let m = inst.m();
    let n = inst.n();
    let poly = x_coeffs(m, n, r)?;
    let dd = denom_d(m, n, r)?;
    let nn = numer_n(m, n, d, r)?;
    let s_rad = h_r.div(&inst.g().pow_u32(r))?;
    let in_base = s_rad
        .in_tower()
        .filter(|t| t.y().is_zero())
        .map(|t| t.x().clone());
    let k = in_base.ok_or_else(|| {
        Error::Input("h_r over g^r must land in the base field".into())
    })?;
    let scale = k.scale(&BigRational::new(dd, nn));
    let eta = inst.eta();
    let seta = eta.conj();
    let p = x_star_eval(&poly, eta, &seta).scale_k(&scale);
    let q = x_star_eval(&poly, &seta, eta).scale_k(&scale);
    let p_integral = p.is_alg_integer();
    let q_integral = q.is_alg_integer();
    if !p_integral || !q_integral {
        return Err(Error::Invariant(format!(
            "approximant at r = {r} is not an algebraic integer: d, g or the \
             numerator scale is inconsistent"
        )));
    }
    if q != p.conj() {
        return Err(Error::Invariant(format!(
            "approximant conjugacy failed at r = {r}"
        )));
    }
    Ok(ApproximantPair { r, p, q, p_integral, q_integral, h_r: h_r.clone(), scale })
}

/// Pair for a generic instance: h_r = 1, which requires g^r to lie in the
/// base field (automatic for even r; odd r needs a base-field g).
pub fn build_pq(inst: &PairInstance, r: u32) -> Result<ApproximantPair> {
    let d = d_search(inst)?;
    let one = RadElem::from_tower(inst.eta().one_like());
    build_pq_with(inst, r, &one, &d)
}

/// Pair for the integer-parameterized route: h_r from the scaling chain.
pub fn build_pq_quad(inst: &QuadIntInstance, r: u32) -> Result<ApproximantPair> {
    let (h_r, _) = h_sequence(inst, r)?;
    let ch = inst.chain()?;
    build_pq_with(&inst.to_pair_instance()?, r, &h_r, &ch.d)
}

/// Per-index outcome of the growth verification. The option is `None` when
/// the enclosures could not certify the comparison either way, or (for the
/// pairwise fields) on the final row.
#[derive(Clone, Debug)]
pub struct GrowthRow {
    pub r: u32,
    pub q_abs: RealBall,
    pub rem_abs: RealBall,
    /// |q_r| <= k0 Q^r certified?
    pub q_within: Option<bool>,
    /// |q_r theta - p_r| <= l0 E^(-r) certified?
    pub rem_within: Option<bool>,
    /// p_r q_{r+1} - p_{r+1} q_r != 0 (exact)?
    pub det_nonzero: Option<bool>,
    /// p_r / p_{r+1} outside the base field (exact)?
    pub ratio_outside_base: Option<bool>,
}

/// Growth verification over 0..=r_max: rigorous per-index bound checks plus
/// empirical log-scale slopes fitted over the top two-thirds of the range.
#[derive(Clone, Debug)]
pub struct GrowthReport {
    pub rows: Vec<GrowthRow>,
    pub k0: RealBall,
    pub l0: RealBall,
    pub e: RealBall,
    pub q: RealBall,
    /// Fitted slope of log|q_r| against r, and its expected value log Q.
    pub q_slope: f64,
    pub q_slope_target: f64,
    /// Fitted slope of log|q_r theta - p_r| against r, and -log E.
    pub rem_slope: f64,
    pub rem_slope_target: f64,
    /// Start of the certified strictly-decreasing tail of the remainders.
    pub monotone_from: Option<u32>,
}

impl GrowthReport {
    /// Every per-index bound certified to hold.
    pub fn all_within(&self) -> bool {
        self.rows
            .iter()
            .all(|r| r.q_within == Some(true) && r.rem_within == Some(true))
    }

    /// Indices whose bound checks certified a violation (not indeterminate).
    pub fn violations(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|r| r.q_within == Some(false) || r.rem_within == Some(false))
            .map(|r| r.r)
            .collect()
    }

    /// Indices r where the pairwise determinant with r+1 vanishes.
    pub fn degeneracies(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|r| r.det_nonzero == Some(false))
            .map(|r| r.r)
            .collect()
    }

    /// Indices r where p_r/p_{r+1} fell into the base field.
    pub fn base_field_ratios(&self) -> Vec<u32> {
        self.rows
            .iter()
            .filter(|r| r.ratio_outside_base == Some(false))
            .map(|r| r.r)
            .collect()
    }

    pub fn slopes_within(&self, rel_tol: f64) -> bool {
        let q_ok = (self.q_slope - self.q_slope_target).abs()
            <= rel_tol * self.q_slope_target.abs();
        let rem_ok = (self.rem_slope - self.rem_slope_target).abs()
            <= rel_tol * self.rem_slope_target.abs();
        q_ok && rem_ok
    }
}

fn fit_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    if points.len() < 2 {
        return f64::NAN;
    }
    let sx: f64 = points.iter().map(|p| p.0).sum();
    let sy: f64 = points.iter().map(|p| p.1).sum();
    let sxx: f64 = points.iter().map(|p| p.0 * p.0).sum();
    let sxy: f64 = points.iter().map(|p| p.0 * p.1).sum();
    (n * sxy - sx * sy) / (n * sxx - sx * sx)
}

/// `x <= bound` as a three-way certified comparison.
fn within(x: &RealBall, bound: &RealBall) -> Option<bool> {
    match x.gt(bound) {
        Some(true) => Some(false),
        Some(false) => Some(true),
        None => None,
    }
}

fn theta_ball(inst: &PairInstance, prec: u32) -> Result<Ball> {
    let eta = inst.eta().clone();
    let seta = eta.conj();
    escalate(prec, |wp| {
        let eb = eta.embed(wp)?;
        let seb = seta.embed(wp)?;
        let ratio = match eb.div(&seb) {
            Ok(r) => r,
            Err(Error::PrecisionLoss(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        match ratio.principal_power(inst.m(), inst.n()) {
            Ok(t) => Ok(Some(t)),
            Err(Error::PrecisionLoss(_)) => Ok(None),
            Err(e) => Err(e),
        }
    })
}

fn verify_impl(
    inst: &PairInstance,
    rep: &MeasureReport,
    hs: &dyn Fn(u32) -> Result<RadElem>,
    near_one: bool,
    r_max: u32,
) -> Result<GrowthReport> {
    if !rep.ok() {
        return Err(Error::Precondition(
            "growth verification needs an instance whose measure preconditions all pass".into(),
        ));
    }
    let cd = rep
        .cd
        .as_ref()
        .ok_or_else(|| Error::Invariant("measure report carries no growth constants".into()))?;
    let prec = inst.precision_bits();
    // |q_r·theta - p_r| ~ E^(-r) is extracted from quantities of size Q^r,
    // so the cancellation costs about log2(QE) bits per index.
    let qe = rep.q.mid_f64() * rep.e.mid_f64();
    let bits_per_r = if qe.is_finite() && qe > 1.0 {
        (qe.log2().ceil() as u32).min(512) + 2
    } else {
        8
    };
    let wp = (prec + bits_per_r * r_max + 64).min(PRECISION_CAP);
    let theta = theta_ball(inst, wp)?;
    let omt = Ball::one(theta.precision_bits()).sub(&theta).abs();
    let cal_c = cd.c.rescale(wp);
    let k0 = inst.h().rescale(wp).mul_int(2).mul(&cal_c);
    let l0 = if near_one {
        inst.h().rescale(wp).mul(&omt).mul(&cal_c)
    } else {
        // tighter remainder coefficient for the trace/norm route
        inst.h()
            .rescale(wp)
            .mul(&omt)
            .mul(&cal_c)
            .mul_int(238)
            .div_int(100)
    };
    let e = rep.e.rescale(wp);
    let q = rep.q.rescale(wp);
    let e_inv = e.inv()?;

    let mut pairs = Vec::with_capacity(r_max as usize + 1);
    for r in 0..=r_max {
        pairs.push(build_pq_with(inst, r, &hs(r)?, &rep.d)?);
    }

    let mut rows = Vec::with_capacity(pairs.len());
    let mut q_pow = RealBall::one(wp);
    let mut e_inv_pow = RealBall::one(wp);
    let mut q_points = Vec::new();
    let mut rem_points = Vec::new();
    let fit_start = r_max / 3;
    for (i, pair) in pairs.iter().enumerate() {
        let r = pair.r;
        let pb = pair.p.embed(wp)?;
        let qb = pair.q.embed(wp)?;
        let q_abs = qb.abs();
        let rem_abs = qb.mul(&theta).sub(&pb).abs();
        let q_within = within(&q_abs, &k0.mul(&q_pow));
        let rem_within = within(&rem_abs, &l0.mul(&e_inv_pow));
        let (det_nonzero, ratio_outside_base) = match pairs.get(i + 1) {
            Some(next) => {
                let det = pair.p.mul(&next.q).sub(&next.p.mul(&pair.q));
                let outside = if next.p.is_zero() {
                    None
                } else {
                    Some(pair.p.mul(&next.p.conj()) != pair.p.conj().mul(&next.p))
                };
                (Some(!det.is_zero()), outside)
            }
            None => (None, None),
        };
        if r >= fit_start && r >= 1 {
            if let Ok(lq) = q_abs.ln() {
                q_points.push((f64::from(r), lq.mid_f64()));
            }
            if let Ok(lr) = rem_abs.ln() {
                rem_points.push((f64::from(r), lr.mid_f64()));
            }
        }
        rows.push(GrowthRow {
            r,
            q_abs: q_abs.rescale(prec),
            rem_abs: rem_abs.rescale(prec),
            q_within,
            rem_within,
            det_nonzero,
            ratio_outside_base,
        });
        q_pow = q_pow.mul(&q);
        e_inv_pow = e_inv_pow.mul(&e_inv);
    }

    // Certified strictly-decreasing suffix of the remainders.
    let mut monotone_from = None;
    for i in (0..rows.len().saturating_sub(1)).rev() {
        if rows[i + 1].rem_abs.lt(&rows[i].rem_abs) == Some(true) {
            monotone_from = Some(rows[i].r);
        } else {
            break;
        }
    }

    Ok(GrowthReport {
        rows,
        k0: k0.rescale(prec),
        l0: l0.rescale(prec),
        e: rep.e.clone(),
        q: rep.q.clone(),
        q_slope: fit_slope(&q_points),
        q_slope_target: rep.q.ln()?.mid_f64(),
        rem_slope: fit_slope(&rem_points),
        rem_slope_target: -rep.e.ln()?.mid_f64(),
        monotone_from,
    })
}

/// Growth verification for a generic instance (h_r = 1) on the trace/norm
/// route.
pub fn verify_bounds(inst: &PairInstance, r_max: u32) -> Result<GrowthReport> {
    let rep = measure_pair(inst)?;
    let one = RadElem::from_tower(inst.eta().one_like());
    verify_impl(inst, &rep, &|_| Ok(one.clone()), false, r_max)
}

/// Growth verification for a generic instance (h_r = 1) on the near-one
/// route.
pub fn verify_bounds_near_one(inst: &PairInstance, r_max: u32) -> Result<GrowthReport> {
    let rep = measure_pair_near_one(inst)?;
    let one = RadElem::from_tower(inst.eta().one_like());
    verify_impl(inst, &rep, &|_| Ok(one.clone()), true, r_max)
}

/// Growth verification for the integer-parameterized route, with h_r from
/// the scaling chain.
pub fn verify_bounds_quad(inst: &QuadIntInstance, r_max: u32) -> Result<GrowthReport> {
    let rep = crate::measures::measure_quad_int(inst)?;
    let pinst = inst.to_pair_instance()?;
    verify_impl(
        &pinst,
        &rep,
        &|r| h_sequence(inst, r).map(|(h, _)| h),
        false,
        r_max,
    )
}

/// Cross-checks one pair against the independent remainder evaluation:
/// q_r·theta - p_r must overlap scale·conj(eta)^r·remainder(eta/conj(eta)).
pub fn remainder_consistency(
    inst: &PairInstance,
    pair: &ApproximantPair,
    precision: u32,
) -> Result<bool> {
    let wp = precision + 2 * pair.r + 32;
    let eta = inst.eta();
    let seta = eta.conj();
    let eb = eta.embed(wp)?;
    let seb = seta.embed(wp)?;
    let z = eb.div(&seb)?;
    let theta = z.principal_power(inst.m(), inst.n())?;
    let lhs = pair.q.embed(wp)?.mul(&theta).sub(&pair.p.embed(wp)?);
    let rem = remainder_difference(&z, inst.m(), inst.n(), pair.r, wp)?;
    let scale_ball =
        TowerElem::from_k(inst.base(), eta.tau().clone(), pair.scale.clone())?.embed(wp)?;
    let rhs = scale_ball.mul(&seb.pow_u32(pair.r)).mul(&rem);
    Ok(lhs.overlaps(&rhs))
}
