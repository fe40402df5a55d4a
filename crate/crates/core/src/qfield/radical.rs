//! Values of the form e·√r with e a tower element and r a positive rational:
//! the shape of the scaling number g and of the odd-index scale factors h_r.
//!
//! The radicand is canonicalized to a squarefree positive integer with the
//! square part folded into e; when the radicand coincides with a rational τ
//! of the tower it is folded into the tower itself, so purely algebraic
//! identities (membership in 𝕃, integrality) stay decidable exactly.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed};

use super::ball::{Ball, RealBall};
use super::{square_split, TowerElem};
use crate::error::{Error, Result};

#[derive(Clone, PartialEq, Eq, Debug)]
pub struct RadElem {
    elem: TowerElem,
    rad: BigInt,
}

impl RadElem {
    /// e·√scale for a positive rational scale.
    pub fn new(elem: TowerElem, scale: &BigRational) -> Result<Self> {
        if !scale.is_positive() {
            return Err(Error::Input("radical scale must be positive".into()));
        }
        // √(p/q) = √(pq)/q
        let p = scale.numer().clone();
        let q = scale.denom().clone();
        let elem = elem.scale_rat(&BigRational::new(BigInt::one(), q.clone()));
        Self::canonical(elem, p * q)
    }

    pub fn from_tower(elem: TowerElem) -> Self {
        RadElem { elem, rad: BigInt::one() }
    }

    fn canonical(elem: TowerElem, rad: BigInt) -> Result<Self> {
        debug_assert!(rad.is_positive());
        let (s, k) = square_split(&rad)?;
        let mut elem = elem.scale_rat(&BigRational::from_integer(k));
        if s.is_one() {
            return Ok(RadElem { elem, rad: BigInt::one() });
        }
        if let Some(t) = elem.tau().rational_value() {
            if t == &BigRational::from_integer(s.clone()) {
                // √rad = √τ exactly (both positive real or the same principal
                // value is forced by s = τ > 0; negative τ never matches a
                // positive radicand).
                let root = TowerElem::sqrt_tau(elem.base(), elem.tau().clone())?;
                elem = elem.mul(&root);
                return Ok(RadElem { elem, rad: BigInt::one() });
            }
        }
        Ok(RadElem { elem, rad: s })
    }

    pub fn elem(&self) -> &TowerElem {
        &self.elem
    }

    /// Squarefree positive radicand (1 when the value lies in 𝕃).
    pub fn radicand(&self) -> &BigInt {
        &self.rad
    }

    pub fn is_zero(&self) -> bool {
        self.elem.is_zero()
    }

    pub fn in_tower(&self) -> Option<&TowerElem> {
        if self.rad.is_one() {
            Some(&self.elem)
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        RadElem { elem: self.elem.neg(), rad: self.rad.clone() }
    }

    pub fn mul_tower(&self, t: &TowerElem) -> Self {
        RadElem { elem: self.elem.mul(t), rad: self.rad.clone() }
    }

    pub fn scale_rat(&self, q: &BigRational) -> Self {
        RadElem { elem: self.elem.scale_rat(q), rad: self.rad.clone() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        let elem = self.elem.mul(&other.elem);
        if self.rad == other.rad {
            // √r·√r = r stays in the tower.
            return Ok(RadElem {
                elem: elem.scale_rat(&BigRational::from_integer(self.rad.clone())),
                rad: BigInt::one(),
            });
        }
        let g = self.rad.gcd(&other.rad);
        let rad = (&self.rad / &g) * (&other.rad / &g);
        Self::canonical(elem.scale_rat(&BigRational::from_integer(g)), rad)
    }

    pub fn inv(&self) -> Result<Self> {
        if self.is_zero() {
            return Err(Error::Domain("division by zero".into()));
        }
        // 1/(e√r) = (1/e)·√r/r
        let inv = self.elem.inv()?;
        Ok(RadElem {
            elem: inv.scale_rat(&BigRational::new(BigInt::one(), self.rad.clone())),
            rad: self.rad.clone(),
        })
    }

    pub fn div(&self, other: &Self) -> Result<Self> {
        self.mul(&other.inv()?)
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        let half = self.square().pow_u32(k / 2);
        if k % 2 == 0 {
            RadElem::from_tower(half)
        } else {
            self.mul_tower(&half)
        }
    }

    /// The exact square, which always lies back in the tower.
    pub fn square(&self) -> TowerElem {
        self.elem
            .mul(&self.elem)
            .scale_rat(&BigRational::from_integer(self.rad.clone()))
    }

    /// Algebraic integer test: w is an algebraic integer iff w² is (w satisfies
    /// x² − w², and conversely integrality is preserved under roots of monic
    /// integer polynomials).
    pub fn is_alg_integer(&self) -> bool {
        self.square().is_alg_integer()
    }

    /// Rigorous enclosure of the complex value (√rad ≥ 0 real).
    pub fn embed(&self, precision_bits: u32) -> Result<Ball> {
        let b = self.elem.embed(precision_bits + 8)?;
        if self.rad.is_one() {
            return Ok(b.rescale(precision_bits));
        }
        let root = RealBall::from_bigint(&self.rad, precision_bits + 8).sqrt()?;
        Ok(b.mul_real(&root).rescale(precision_bits))
    }

    /// Enclosure of |value|.
    pub fn abs_ball(&self, precision_bits: u32) -> Result<RealBall> {
        Ok(self.embed(precision_bits + 8)?.abs().rescale(precision_bits))
    }
}
