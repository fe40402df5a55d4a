//! Effective irrationality measures for ratios of quadratic conjugates.
//!
//! The library builds dense hypergeometric approximant polynomials with exact
//! rational coefficients, evaluates them on quadratic conjugates to produce
//! approximant sequences to algebraic targets, and turns rigorous growth and
//! remainder estimates into explicit irrationality-measure constants
//! (E, Q, κ, c). Every analytic quantity is carried as a midpoint/radius ball
//! whose radius is a proven bound; every algebraic identity is checked in
//! exact arithmetic.

pub mod approxseq;
pub mod error;
pub mod hyperg;
pub mod measures;
pub mod qfield;
pub mod verify;

pub use approxseq::{ApproximantPair, GrowthReport};
pub use error::{Error, Result};
pub use hyperg::HypPoly;
pub use measures::{MeasureReport, PairInstance, QuadIntInstance};
pub use qfield::ball::{Ball, RealBall, PRECISION_CAP};
pub use qfield::radical::RadElem;
pub use qfield::{BaseField, KElem, TowerElem};
pub use verify::{Convergents, ScanResult};
