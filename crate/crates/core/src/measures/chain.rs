//! Rational-base pipeline for eta = (u1 + u2 sqrt(t))/2 with integer u1, u2,
//! t. A chain of gcd extractions produces the scaling element g, the scaling
//! integer d and the odd-index scale factors without any embedding, so every
//! value here is exact.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::qfield::radical::RadElem;
use crate::qfield::{core, square_split, BaseField, KElem, RealBall, TowerElem};

use super::pair::{self, measure_impl, Form, PairInstance};
use super::{CdConstants, MeasureReport};

/// Exact gcd data extracted from (u1, u2, t, n), together with the derived
/// scaling element g = g1 sqrt(g2) / sqrt(g3 g4 g5) and scaling integer d.
#[derive(Clone, Debug)]
pub struct ScaleChain {
    pub g1: BigInt,
    pub g2: BigInt,
    pub g3: BigInt,
    pub g4: BigInt,
    pub g5: BigInt,
    /// Square root of (t g3 / g2) / core(t g2 g3), scaled by |u2/g1|: the
    /// integer whose gcd with n steers g4.
    pub d1: BigInt,
    pub g: RadElem,
    pub d: BigInt,
}

/// Computes the scaling chain from the raw integers. Defined for any
/// u1 and nonzero u2, t, whether or not (u1 + u2 sqrt(t))/2 is an algebraic
/// integer, so it can also be exercised on inadmissible inputs.
pub fn scale_chain(u1: &BigInt, u2: &BigInt, t: &BigInt, n: u32) -> Result<ScaleChain> {
    if t.is_zero() {
        return Err(Error::Input("t must be nonzero".into()));
    }
    if u2.is_zero() {
        return Err(Error::Input("u2 must be nonzero".into()));
    }
    if n == 0 {
        return Err(Error::Input("n must be positive".into()));
    }
    let g1 = u1.gcd(u2);
    let u1g = u1 / &g1;
    let u2g = u2 / &g1;
    let g2 = u1g.gcd(t);
    let four = BigInt::from(4);
    let tm = t.mod_floor(&four);
    let diff_even = (&u1g - &u2g).is_even();
    let g3 = if tm == BigInt::one() && diff_even {
        BigInt::one()
    } else if tm == BigInt::from(3) && diff_even {
        BigInt::from(2)
    } else {
        four
    };
    let core_t = core(&(t * &g2 * &g3))?;
    // (t/g2) g3 over its own core: a positive perfect square by construction.
    let x = (t / &g2) * &g3;
    let inner = &x / &core_t;
    let (c, s) = square_split(&inner)?;
    if !c.is_one() {
        return Err(Error::Invariant(
            "the depressed radicand must be a perfect square".into(),
        ));
    }
    let d1 = u2g.abs() * &s;
    let nb = BigInt::from(n);
    let g4 = core_t.abs().gcd(&(&nb / d1.gcd(&nb)));
    let g5 = if n % 2 == 0 {
        let val = &u2g * &u2g * (t / &g2) * &g3;
        let v2 = val.trailing_zeros().expect("val is nonzero");
        let v2_target = 1 + 2 * u64::from(n.trailing_zeros());
        if v2 == v2_target {
            BigInt::from(2)
        } else {
            BigInt::one()
        }
    } else {
        BigInt::one()
    };
    let base = BaseField::rational();
    let tau = KElem::from_rational(base, BigRational::from_integer(t.clone()));
    let elem = TowerElem::from_rational(base, tau, BigRational::from_integer(g1.clone()))?;
    let scale = BigRational::new(g2.clone(), &g3 * &g4 * &g5);
    let g = RadElem::new(elem, &scale)?;
    let d_arg = (&u2g * &u2g * (t / &g2) * &g3 * &g4 * &g5).abs();
    let (_, d) = square_split(&d_arg)?;
    Ok(ScaleChain { g1, g2, g3, g4, g5, d1, g, d })
}

/// Input data for the rational-base pipeline. `new` insists that
/// (u1 + u2 sqrt(t))/2 is an algebraic integer; beta and gamma default to
/// eta and its conjugate when not supplied.
#[derive(Clone, Debug)]
pub struct QuadIntInstance {
    u1: BigInt,
    u2: BigInt,
    t: BigInt,
    m: u32,
    n: u32,
    eta: TowerElem,
    beta: TowerElem,
    gamma: TowerElem,
    sign: i32,
    cd: Option<CdConstants>,
    precision_bits: u32,
}

impl QuadIntInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        u1: BigInt,
        u2: BigInt,
        t: BigInt,
        m: u32,
        n: u32,
        beta: Option<TowerElem>,
        gamma: Option<TowerElem>,
        sign: i32,
        cd: Option<CdConstants>,
        precision_bits: u32,
    ) -> Result<Self> {
        if t.is_zero() {
            return Err(Error::Input("t must be nonzero".into()));
        }
        if u2.is_zero() {
            return Err(Error::Input("u2 must be nonzero".into()));
        }
        let base = BaseField::rational();
        let tau = KElem::from_rational(base, BigRational::from_integer(t.clone()));
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let eta = TowerElem::new(
            base,
            tau,
            KElem::from_rational(base, BigRational::from_integer(u1.clone()) * &half),
            KElem::from_rational(base, BigRational::from_integer(u2.clone()) * &half),
        )?;
        if !eta.is_alg_integer() {
            return Err(Error::Input(
                "(u1 + u2 sqrt(t))/2 must be an algebraic integer".into(),
            ));
        }
        let beta = beta.unwrap_or_else(|| eta.clone());
        let gamma = gamma.unwrap_or_else(|| eta.conj());
        Ok(QuadIntInstance {
            u1,
            u2,
            t,
            m,
            n,
            eta,
            beta,
            gamma,
            sign,
            cd,
            precision_bits,
        })
    }

    pub fn u1(&self) -> &BigInt {
        &self.u1
    }

    pub fn u2(&self) -> &BigInt {
        &self.u2
    }

    pub fn t(&self) -> &BigInt {
        &self.t
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn eta(&self) -> &TowerElem {
        &self.eta
    }

    pub fn beta(&self) -> &TowerElem {
        &self.beta
    }

    pub fn gamma(&self) -> &TowerElem {
        &self.gamma
    }

    pub fn sign(&self) -> i32 {
        self.sign
    }

    pub fn cd(&self) -> Option<&CdConstants> {
        self.cd.as_ref()
    }

    pub fn precision_bits(&self) -> u32 {
        self.precision_bits
    }

    pub fn chain(&self) -> Result<ScaleChain> {
        scale_chain(&self.u1, &self.u2, &self.t, self.n)
    }

    /// Repackages the instance for the conjugate-pair pipeline with the
    /// chain's g and the bound h = sqrt(2|t|).
    pub fn to_pair_instance(&self) -> Result<PairInstance> {
        self.pair_with(&self.chain()?)
    }

    fn pair_with(&self, ch: &ScaleChain) -> Result<PairInstance> {
        let two_t = BigInt::from(2) * self.t.abs();
        let h = RealBall::from_bigint(&two_t, self.precision_bits).sqrt()?;
        PairInstance::new(
            self.eta.clone(),
            self.beta.clone(),
            self.gamma.clone(),
            self.m,
            self.n,
            self.sign,
            ch.g.clone(),
            h,
            self.cd.clone(),
            self.precision_bits,
        )
    }
}

/// Scale factor for index r with its certificates: 1 for even r and
/// sqrt(core(g2 g3 g4 g5)) for odd r. Checks exactly that the factor over
/// g^r is rational and that its square stays within 2|t|, and returns the
/// factor together with the enclosure of the uniform bound sqrt(2|t|).
pub fn h_sequence(inst: &QuadIntInstance, r: u32) -> Result<(RadElem, RealBall)> {
    let ch = inst.chain()?;
    let one_t = inst.eta().one_like();
    let (h_r, h_sq) = if r % 2 == 0 {
        (RadElem::from_tower(one_t), BigInt::one())
    } else {
        let y = core(&(&ch.g2 * &ch.g3 * &ch.g4 * &ch.g5))?;
        debug_assert!(y.is_positive());
        (
            RadElem::new(one_t, &BigRational::from_integer(y.clone()))?,
            y,
        )
    };
    let quot = h_r.div(&ch.g.pow_u32(r))?;
    if quot.in_tower().and_then(|q| q.rational_value()).is_none() {
        return Err(Error::Invariant(
            "scale factor over the r-th power of g must be rational".into(),
        ));
    }
    let two_t = BigInt::from(2) * inst.t().abs();
    if h_sq > two_t {
        return Err(Error::Invariant(
            "scale factor exceeds its uniform bound".into(),
        ));
    }
    let bound = RealBall::from_bigint(&two_t, inst.precision_bits()).sqrt()?;
    Ok((h_r, bound))
}

/// Measure for the rational-base pipeline. Derives g and d from the scaling
/// chain, cross-checks d against the divisor search, and runs the
/// conjugate-pair measure in its trace/norm form.
pub fn measure_quad_int(inst: &QuadIntInstance) -> Result<MeasureReport> {
    let ch = inst.chain()?;
    let pinst = inst.pair_with(&ch)?;
    match pair::d_search(&pinst) {
        Ok(ds) => {
            if ds != ch.d {
                return Err(Error::Invariant(format!(
                    "scaling integer mismatch: chain gives {}, divisor search gives {ds}",
                    ch.d
                )));
            }
        }
        // A norm too composite to enumerate only disables the cross-check.
        Err(Error::FactorLimit(_)) => {}
        Err(e) => return Err(e),
    }
    let extra = [
        (
            "scaling chain",
            format!(
                "g1={} g2={} g3={} g4={} g5={} d1={}",
                ch.g1, ch.g2, ch.g3, ch.g4, ch.g5, ch.d1
            ),
        ),
        (
            "g",
            "g1 sqrt(g2) / sqrt(g3 g4 g5) from gcd data of (u1, u2, t, n)".to_string(),
        ),
        (
            "d",
            "square part of (u2/g1)^2 (t/g2) g3 g4 g5, cross-checked against the divisor search"
                .to_string(),
        ),
        (
            "eta",
            format!("(u1 + u2 sqrt(t))/2 with u1={} u2={} t={}", inst.u1, inst.u2, inst.t),
        ),
    ];
    measure_impl(&pinst, Form::Primary, Some(ch.d.clone()), &extra)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hyperg::calibrate_cd;
    use crate::measures::{measure_pair, PreconditionStatus};

    fn bi(v: i64) -> BigInt {
        BigInt::from(v)
    }

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(bi(n), bi(d))
    }

    fn chain(u1: i64, u2: i64, t: i64, n: u32) -> ScaleChain {
        scale_chain(&bi(u1), &bi(u2), &bi(t), n).unwrap()
    }

    fn tower_rat(t: i64, num: i64, den: i64) -> TowerElem {
        let b = BaseField::rational();
        TowerElem::from_rational(b, KElem::from_rational(b, rat(t, 1)), rat(num, den)).unwrap()
    }

    fn g_elem(t: i64, num: i64, den: i64, scale_n: i64, scale_d: i64) -> RadElem {
        RadElem::new(tower_rat(t, num, den), &rat(scale_n, scale_d)).unwrap()
    }

    #[test]
    fn chain_values_exact() {
        let c = chain(5, 1, -3, 3);
        assert_eq!(
            (&c.g1, &c.g2, &c.g3, &c.g4, &c.g5),
            (&bi(1), &bi(1), &bi(1), &bi(3), &bi(1))
        );
        assert_eq!(c.d1, bi(1));
        assert_eq!(c.d, bi(3));
        assert_eq!(c.g, g_elem(-3, 1, 1, 1, 3));

        let c = chain(10, 1, -3, 3);
        assert_eq!(
            (&c.g1, &c.g2, &c.g3, &c.g4, &c.g5),
            (&bi(1), &bi(1), &bi(4), &bi(3), &bi(1))
        );
        assert_eq!(c.d1, bi(2));
        assert_eq!(c.d, bi(6));
        assert_eq!(c.g, g_elem(-3, 1, 1, 1, 12));

        let c = chain(3, 1, 5, 2);
        assert_eq!(
            (&c.g1, &c.g2, &c.g3, &c.g4, &c.g5),
            (&bi(1), &bi(1), &bi(1), &bi(1), &bi(1))
        );
        assert_eq!(c.d1, bi(1));
        assert_eq!(c.d, bi(1));
        assert_eq!(c.g, RadElem::from_tower(tower_rat(5, 1, 1)));

        // nontrivial g2: eta = 3 + sqrt(-3)
        let c = chain(6, 2, -3, 3);
        assert_eq!(
            (&c.g1, &c.g2, &c.g3, &c.g4, &c.g5),
            (&bi(2), &bi(3), &bi(1), &bi(1), &bi(1))
        );
        assert_eq!(c.d, bi(1));
        assert_eq!(c.g, g_elem(-3, 2, 1, 3, 1));
    }

    #[test]
    fn instance_requires_an_algebraic_integer() {
        // u1 even, u2 odd: (10 + sqrt(-3))/2 is not an algebraic integer
        assert!(matches!(
            QuadIntInstance::new(bi(10), bi(1), bi(-3), 1, 3, None, None, -1, None, 64),
            Err(Error::Input(_))
        ));
        // both odd with t = 1 mod 4: fine
        QuadIntInstance::new(bi(5), bi(1), bi(-3), 1, 3, None, None, -1, None, 64).unwrap();
        // both even: fine
        QuadIntInstance::new(bi(6), bi(2), bi(-3), 1, 3, None, None, -1, None, 64).unwrap();
        // both odd with t = 2 mod 4: rejected
        assert!(matches!(
            QuadIntInstance::new(bi(3), bi(1), bi(6), 1, 3, None, None, 1, None, 64),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn defaults_are_eta_and_its_conjugate() {
        let inst =
            QuadIntInstance::new(bi(5), bi(1), bi(-3), 1, 3, None, None, -1, None, 64).unwrap();
        assert_eq!(inst.beta(), inst.eta());
        assert_eq!(inst.gamma(), &inst.eta().conj());
    }

    #[test]
    fn h_sequence_certificates() {
        let inst =
            QuadIntInstance::new(bi(5), bi(1), bi(-3), 1, 3, None, None, -1, None, 64).unwrap();
        let (h0, bound) = h_sequence(&inst, 0).unwrap();
        assert!(h0.in_tower().unwrap().rational_value().unwrap().is_one());
        assert!(!bound.contains_rational(&rat(0, 1)));
        let (h1, _) = h_sequence(&inst, 1).unwrap();
        assert_eq!(h1.radicand(), &bi(3));
        let quot = h1.div(&inst.chain().unwrap().g.pow_u32(1)).unwrap();
        assert_eq!(
            quot.in_tower().unwrap().rational_value().unwrap(),
            &rat(3, 1)
        );
        let (h2, _) = h_sequence(&inst, 2).unwrap();
        assert!(h2.in_tower().is_some());
        let (h3, _) = h_sequence(&inst, 3).unwrap();
        assert_eq!(h3.radicand(), &bi(3));

        // bound squared is 2|t| = 6
        let b2 = bound.mul(&bound);
        assert!(b2.contains_rational(&rat(6, 1)));
    }

    #[test]
    fn quad_int_measure_matches_pair_route() {
        let (c, d, emp) = calibrate_cd(1, 3, &bi(3), 60).unwrap();
        let cd = CdConstants { c, d, empirical: emp };
        let inst = QuadIntInstance::new(
            bi(5),
            bi(1),
            bi(-3),
            1,
            3,
            None,
            None,
            -1,
            Some(cd),
            128,
        )
        .unwrap();
        let rep = measure_quad_int(&inst).unwrap();
        assert!(rep.ok(), "preconditions: {:?}", rep.preconditions);
        assert_eq!(rep.d, bi(3));
        assert!(rep.kappa_consistent().unwrap());

        let pinst = inst.to_pair_instance().unwrap();
        let rep_pair = measure_pair(&pinst).unwrap();
        assert!(rep_pair.ok());
        assert_eq!(rep_pair.d, rep.d);
        assert!(rep.e.overlaps(&rep_pair.e));
        assert!(rep.q.overlaps(&rep_pair.q));
        assert!(rep.kappa.overlaps(&rep_pair.kappa));
        assert!(rep.c.overlaps(&rep_pair.c));
        assert!(rep.alpha.overlaps(&rep_pair.alpha));
        assert!(rep.provenance.contains_key("scaling chain"));
    }

    #[test]
    fn ratio_orientation_reported_honestly() {
        // eta = (3 + sqrt(5))/2 has ratio > 1: preconditions fail, report
        // still carries E and Q diagnostics.
        let inst =
            QuadIntInstance::new(bi(3), bi(1), bi(5), 1, 2, None, None, 1, None, 64).unwrap();
        let rep = measure_quad_int(&inst).unwrap();
        assert!(!rep.ok());
        assert_eq!(
            rep.status("eta ratio in the unit interval or unimodular, not -1"),
            Some(PreconditionStatus::Fail)
        );
        // flipped conjugate: (3 - sqrt(5))/2 over (3 + sqrt(5))/2 is in (0, 1)
        let inst2 =
            QuadIntInstance::new(bi(3), bi(-1), bi(5), 1, 2, None, None, 1, None, 64).unwrap();
        let rep2 = measure_quad_int(&inst2).unwrap();
        assert_eq!(
            rep2.status("eta ratio in the unit interval or unimodular, not -1"),
            Some(PreconditionStatus::Pass)
        );
    }
}
