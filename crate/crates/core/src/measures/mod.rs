//! Effective irrationality measures: kappa and c such that
//! |alpha - p/q| > 1/(c |q|^(kappa+1)) for algebraic integers p, q of the base
//! field, derived from growth data (k0, l0, E, Q) of an approximating
//! sequence or from a quadratic conjugate pair (eta, conj(eta)).
//!
//! Every pipeline returns a [`MeasureReport`]. Preconditions are evaluated
//! rigorously (exactly where the data is exact, by certified enclosures
//! otherwise) and recorded by name; a failed or undecided precondition still
//! yields a report, with `kappa` and `c` left as exact zeros and `ok()`
//! false. Nothing is asserted by a report whose `ok()` is false.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::hyperg::ValuationProduct;
use crate::qfield::{Ball, BaseField, KElem, RealBall, TowerElem};

mod chain;
mod pair;

pub use chain::{h_sequence, measure_quad_int, scale_chain, QuadIntInstance, ScaleChain};
pub use pair::{
    d_candidates, d_search, measure_pair, measure_pair_near_one, PairInstance, AUTO_CAL_R_MAX,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PreconditionStatus {
    Pass,
    Fail,
    /// Could not be certified either way within the precision ceiling.
    Indeterminate,
}

#[derive(Clone, Debug)]
pub struct Precondition {
    pub name: String,
    pub status: PreconditionStatus,
}

/// Growth-bound constants for the polynomial scaling: left side below
/// C·(D/N)^r for all r. `empirical` marks values fitted from finite data
/// rather than taken from a proved table.
#[derive(Clone, Debug)]
pub struct CdConstants {
    pub c: RealBall,
    pub d: RealBall,
    pub empirical: bool,
}

/// Outcome of one measure pipeline. `e`, `q`, `kappa`, `c` are enclosures of
/// the constants of |alpha - p/q| > 1/(c |q|^(kappa+1)); `d` and `n_dn` are
/// the scaling integer and its valuation product. Fields that a failed
/// precondition leaves undefined are exact zeros; check `ok()` first.
#[derive(Clone, Debug)]
pub struct MeasureReport {
    pub alpha: Ball,
    pub e: RealBall,
    pub q: RealBall,
    pub kappa: RealBall,
    pub c: RealBall,
    pub d: BigInt,
    pub n_dn: ValuationProduct,
    /// The growth constants the run used, when the pipeline calibrates any.
    pub cd: Option<CdConstants>,
    pub preconditions: Vec<Precondition>,
    pub empirical: bool,
    pub provenance: BTreeMap<String, String>,
}

impl MeasureReport {
    pub fn ok(&self) -> bool {
        self.preconditions
            .iter()
            .all(|p| p.status == PreconditionStatus::Pass)
    }

    pub fn status(&self, name: &str) -> Option<PreconditionStatus> {
        self.preconditions
            .iter()
            .find(|p| p.name == name)
            .map(|p| p.status)
    }

    /// exp(kappa·log E) must overlap Q. Vacuously true when `ok()` is false
    /// (the constants are placeholders then).
    pub fn kappa_consistent(&self) -> Result<bool> {
        if !self.ok() {
            return Ok(true);
        }
        let lhs = self.kappa.mul(&self.e.ln()?).exp()?;
        Ok(lhs.overlaps(&self.q))
    }
}

/// b^x for a certainly-positive base, via exp(x·log b).
pub(crate) fn pow_ball(base: &RealBall, expo: &RealBall) -> Result<RealBall> {
    base.ln()?.mul(expo).exp()
}

/// log Q / log E. Both arguments must certainly exceed 1.
pub fn kappa(e: &RealBall, q: &RealBall) -> Result<RealBall> {
    let one = BigRational::one();
    if e.gt_rational(&one) != Some(true) {
        return Err(Error::Precondition("E > 1 is not certified".into()));
    }
    if q.gt_rational(&one) != Some(true) {
        return Err(Error::Precondition("Q > 1 is not certified".into()));
    }
    q.ln()?.div(&e.ln()?)
}

/// 2·k0·Q·(max(1, 2·l0)·E)^kappa: the measure constant produced by the
/// approximation machinery from its four growth constants.
pub fn bound_c(k0: &RealBall, l0: &RealBall, e: &RealBall, q: &RealBall) -> Result<RealBall> {
    let kap = kappa(e, q)?;
    let lim = RealBall::one(l0.precision()).max_enclosure(&l0.mul_int(2));
    let arg = lim.mul(e);
    Ok(k0.mul(q).mul(&pow_ball(&arg, &kap)?).mul_int(2))
}

/// Numerical data of an approximating sequence: the embeddings theta_i, the
/// conjugates of beta and gamma, and the growth constants. theta[0] must be
/// exactly 1; `tau_abs` is |sqrt(tau)| for the quadratic route and exactly 1
/// over the rationals.
#[derive(Clone, Debug)]
pub struct ApproxSystem {
    pub s: usize,
    pub theta: Vec<Ball>,
    pub beta_conj: Vec<Ball>,
    pub gamma_conj: Vec<Ball>,
    pub k0: RealBall,
    pub l0: RealBall,
    pub e: RealBall,
    pub q: RealBall,
    pub tau_abs: RealBall,
}

impl ApproxSystem {
    fn validate(&self) -> Result<()> {
        if self.s < 2 {
            return Err(Error::Input("system degree must be at least 2".into()));
        }
        if self.theta.len() != self.s
            || self.beta_conj.len() != self.s
            || self.gamma_conj.len() != self.s
        {
            return Err(Error::Input("conjugate lists must have length s".into()));
        }
        let first = &self.theta[0];
        let diff = first.sub(&Ball::one(first.precision_bits()));
        if !diff.is_exact() || diff.excludes_zero() {
            return Err(Error::Input("theta[0] must be exactly 1".into()));
        }
        for (name, b) in [("k0", &self.k0), ("l0", &self.l0)] {
            if b.sign_certain() != Some(std::cmp::Ordering::Greater) {
                return Err(Error::Input(format!("{name} must be certainly positive")));
            }
        }
        Ok(())
    }
}

fn empty_valuation() -> ValuationProduct {
    ValuationProduct { factors: Vec::new() }
}

/// Measure for alpha = sum(conj_i(beta)·theta_i) / sum(conj_i(gamma)·theta_i)
/// with c = 2·(sum_i |conj_i(gamma)|)·k0·Q·max{E, 2·(sum_{i>=2}
/// |conj_i(beta) - alpha·conj_i(gamma)|)·l0·E}^kappa.
pub fn measure_system(sys: &ApproxSystem) -> Result<MeasureReport> {
    sys.validate()?;
    let prec = sys.theta[0].precision_bits();
    let mut num = Ball::zero(prec);
    let mut den = Ball::zero(prec);
    for i in 0..sys.s {
        num = num.add(&sys.beta_conj[i].mul(&sys.theta[i]));
        den = den.add(&sys.gamma_conj[i].mul(&sys.theta[i]));
    }
    if !den.excludes_zero() {
        return Err(Error::PrecisionLoss(
            "alpha denominator enclosure touches zero".into(),
        ));
    }
    let alpha = num.div(&den)?;
    let kap = kappa(&sys.e, &sys.q)?;
    let mut gamma_sum = RealBall::zero(prec);
    for g in &sys.gamma_conj {
        gamma_sum = gamma_sum.add(&g.abs());
    }
    let mut inner = RealBall::zero(prec);
    for i in 1..sys.s {
        inner = inner.add(&sys.beta_conj[i].sub(&alpha.mul(&sys.gamma_conj[i])).abs());
    }
    let arg = sys
        .e
        .max_enclosure(&inner.mul(&sys.l0).mul(&sys.e).mul_int(2));
    let c = gamma_sum
        .mul(&sys.k0)
        .mul(&sys.q)
        .mul(&pow_ball(&arg, &kap)?)
        .mul_int(2);
    let mut provenance = BTreeMap::new();
    provenance.insert(
        "alpha".into(),
        "sum_i conj_i(beta) theta_i / sum_i conj_i(gamma) theta_i".into(),
    );
    provenance.insert("kappa".into(), "log Q / log E".into());
    provenance.insert(
        "c".into(),
        "2 (sum_i |conj_i(gamma)|) k0 Q max{E, 2 (sum_{i>=2} |conj_i(beta) - alpha conj_i(gamma)|) l0 E}^kappa"
            .into(),
    );
    let pass = |name: &str| Precondition {
        name: name.into(),
        status: PreconditionStatus::Pass,
    };
    Ok(MeasureReport {
        alpha: alpha.rescale(prec),
        e: sys.e.clone(),
        q: sys.q.clone(),
        kappa: kap.rescale(prec),
        c: c.rescale(prec),
        d: BigInt::one(),
        n_dn: empty_valuation(),
        cd: None,
        preconditions: vec![pass("alpha denominator nonzero"), pass("E > 1"), pass("Q > 1")],
        empirical: false,
        provenance,
    })
}

/// Quadratic (s = 2) specialization with a sign choice:
/// alpha = (conj2(beta)·theta2 ± beta) / (conj2(gamma)·theta2 ± gamma) and
/// c = 2·|sqrt(tau)|·(|gamma|+|conj2(gamma)|)·k0·Q·max{E,
/// 2·|sqrt(tau)|·|conj2(beta) - alpha·conj2(gamma)|·l0·E}^kappa.
pub fn measure_system_quadratic(sys: &ApproxSystem, sign: i32) -> Result<MeasureReport> {
    sys.validate()?;
    if sys.s != 2 {
        return Err(Error::Input("quadratic route requires s = 2".into()));
    }
    if sign != 1 && sign != -1 {
        return Err(Error::Input("sign must be +1 or -1".into()));
    }
    let prec = sys.theta[0].precision_bits();
    // beta/gamma outside the base field: cross determinant must be nonzero.
    let cross = sys.beta_conj[0]
        .mul(&sys.gamma_conj[1])
        .sub(&sys.beta_conj[1].mul(&sys.gamma_conj[0]));
    if cross.is_exact() && !cross.excludes_zero() {
        return Err(Error::Domain("beta/gamma lies in the base field".into()));
    }
    if !cross.excludes_zero() {
        return Err(Error::PrecisionLoss(
            "beta/gamma base-field membership undecided".into(),
        ));
    }
    let combine = |hi: &Ball, lo: &Ball| {
        let t = hi.mul(&sys.theta[1]);
        if sign == 1 {
            t.add(lo)
        } else {
            t.sub(lo)
        }
    };
    let num = combine(&sys.beta_conj[1], &sys.beta_conj[0]);
    let den = combine(&sys.gamma_conj[1], &sys.gamma_conj[0]);
    if !den.excludes_zero() {
        return Err(Error::PrecisionLoss(
            "alpha denominator enclosure touches zero".into(),
        ));
    }
    let alpha = num.div(&den)?;
    let kap = kappa(&sys.e, &sys.q)?;
    let gamma_sum = sys.gamma_conj[0].abs().add(&sys.gamma_conj[1].abs());
    let dev = sys.beta_conj[1].sub(&alpha.mul(&sys.gamma_conj[1])).abs();
    let arg = sys.e.max_enclosure(
        &dev.mul(&sys.tau_abs).mul(&sys.l0).mul(&sys.e).mul_int(2),
    );
    let c = sys
        .tau_abs
        .mul(&gamma_sum)
        .mul(&sys.k0)
        .mul(&sys.q)
        .mul(&pow_ball(&arg, &kap)?)
        .mul_int(2);
    let mut provenance = BTreeMap::new();
    let op = if sign == 1 { "+" } else { "-" };
    provenance.insert(
        "alpha".into(),
        format!("(conj2(beta) theta2 {op} beta) / (conj2(gamma) theta2 {op} gamma)"),
    );
    provenance.insert("kappa".into(), "log Q / log E".into());
    provenance.insert(
        "c".into(),
        "2 |sqrt(tau)| (|gamma|+|conj2(gamma)|) k0 Q max{E, 2 |sqrt(tau)| |conj2(beta) - alpha conj2(gamma)| l0 E}^kappa"
            .into(),
    );
    let pass = |name: &str| Precondition {
        name: name.into(),
        status: PreconditionStatus::Pass,
    };
    Ok(MeasureReport {
        alpha: alpha.rescale(prec),
        e: sys.e.clone(),
        q: sys.q.clone(),
        kappa: kap.rescale(prec),
        c: c.rescale(prec),
        d: BigInt::one(),
        n_dn: empty_valuation(),
        cd: None,
        preconditions: vec![
            pass("beta/gamma ratio outside base field"),
            pass("alpha denominator nonzero"),
            pass("E > 1"),
            pass("Q > 1"),
        ],
        empirical: false,
        provenance,
    })
}

/// Root-of-unity twists that can be folded into eta. The returned nu
/// satisfies nu/conj(nu) = mu exactly, so replacing eta by nu·eta multiplies
/// eta/conj(eta) by mu.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MuKind {
    MinusOne,
    I,
    Zeta3,
    Zeta6,
}

impl MuKind {
    fn order(self) -> u32 {
        match self {
            MuKind::MinusOne => 2,
            MuKind::I => 4,
            MuKind::Zeta3 => 3,
            MuKind::Zeta6 => 6,
        }
    }
}

/// Produce nu with nu/conj(nu) a primitive root of unity of the requested
/// kind. The root-of-unity property and its exact order are certified by
/// exact tower arithmetic before returning.
pub fn mu_absorb(base: BaseField, tau: &KElem, kind: MuKind) -> Result<TowerElem> {
    let rat = |n: i64, d: i64| BigRational::new(BigInt::from(n), BigInt::from(d));
    let canonical = TowerElem::sqrt_tau(base, tau.clone())?;
    if canonical.is_in_base() {
        return Err(Error::Domain(
            "sqrt(tau) lies in the base field, so conjugation is trivial".into(),
        ));
    }
    let canon_tau = canonical.tau().clone();
    let require_tau = |ct: &KElem, v: i64| -> Result<()> {
        match ct.rational_value() {
            Some(t) if *t == rat(v, 1) => Ok(()),
            _ => Err(Error::Domain(format!(
                "twist needs a tower generated by sqrt({v})"
            ))),
        }
    };
    let k = |n: i64, d: i64| KElem::from_rational(base, rat(n, d));
    let nu = match kind {
        MuKind::MinusOne => canonical,
        MuKind::I => {
            require_tau(&canon_tau, -1)?;
            if base.disc() == -1 {
                return Err(Error::Domain(
                    "base field already contains the fourth root of unity".into(),
                ));
            }
            TowerElem::new(base, canon_tau, k(1, 1), k(1, 1))?
        }
        MuKind::Zeta3 => {
            require_tau(&canon_tau, -3)?;
            if base.disc() == -3 {
                return Err(Error::Domain(
                    "base field already contains the cube root of unity".into(),
                ));
            }
            TowerElem::new(base, canon_tau, k(1, 2), k(-1, 2))?
        }
        MuKind::Zeta6 => {
            require_tau(&canon_tau, -3)?;
            if base.disc() == -3 {
                return Err(Error::Domain(
                    "base field already contains the sixth root of unity".into(),
                ));
            }
            TowerElem::new(base, canon_tau, k(3, 1), k(1, 1))?
        }
    };
    let ratio = nu.div(&nu.conj())?;
    let one = nu.one_like();
    let mut pw = ratio.clone();
    for _ in 1..kind.order() {
        if pw == one {
            return Err(Error::Invariant("twist ratio has too small an order".into()));
        }
        pw = pw.mul(&ratio);
    }
    if pw != one {
        return Err(Error::Invariant("twist ratio is not a root of unity".into()));
    }
    Ok(nu)
}
