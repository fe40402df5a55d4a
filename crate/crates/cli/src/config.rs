use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Deserialize;

use effirr::approxseq::{
    build_pq, build_pq_quad, verify_bounds, verify_bounds_near_one, verify_bounds_quad,
    ApproximantPair, GrowthReport,
};
use effirr::error::{Error, Result};
use effirr::measures::{
    measure_pair, measure_pair_near_one, measure_quad_int, CdConstants, MeasureReport,
    PairInstance, QuadIntInstance,
};
use effirr::qfield::{BaseField, KElem, RealBall, TowerElem, PRECISION_CAP};
use effirr::RadElem;

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Theorem2,
    Theorem3,
    Corollary1,
}

impl Mode {
    pub fn parse(s: &str) -> Result<Mode> {
        match s {
            "theorem2" => Ok(Mode::Theorem2),
            "theorem3" => Ok(Mode::Theorem3),
            "corollary1" => Ok(Mode::Corollary1),
            other => Err(Error::Input(format!(
                "unknown mode {other:?}: expected theorem2, theorem3 or corollary1"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Theorem2 => "theorem2",
            Mode::Theorem3 => "theorem3",
            Mode::Corollary1 => "corollary1",
        }
    }
}

/// Coordinates [[x_a, x_b], [y_a, y_b]] of x + y√τ, each pair over the base
/// field basis {1, √disc}. All entries are rational strings.
pub type TowerCoords = [[String; 2]; 2];

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct FieldConfig {
    pub disc: i64,
    pub tau: [String; 2],
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum EtaConfig {
    QuadInt { u1: String, u2: String, t: String },
    Tower(TowerCoords),
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct RadicalConfig {
    pub value: TowerCoords,
    pub root_scale: String,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct InstanceConfig {
    pub mode: Option<String>,
    pub precision_bits: Option<u32>,
    pub m: u32,
    pub n: u32,
    pub sign: Option<i32>,
    pub field: Option<FieldConfig>,
    pub eta: EtaConfig,
    pub beta: Option<TowerCoords>,
    pub gamma: Option<TowerCoords>,
    pub g: Option<RadicalConfig>,
    pub h: Option<String>,
    pub c_n: Option<String>,
    pub d_n: Option<String>,
}

pub struct LoadedConfig {
    pub raw: serde_json::Value,
    pub cfg: InstanceConfig,
}

pub fn load_instance(path: &str) -> Result<LoadedConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read config {path}: {e}")))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("config {path} is not valid JSON: {e}")))?;
    let cfg: InstanceConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("config {path} does not match the schema: {e}")))?;
    Ok(LoadedConfig { raw, cfg })
}

pub fn parse_rational(s: &str) -> Result<BigRational> {
    BigRational::from_str(s.trim())
        .map_err(|e| Error::Input(format!("bad rational {s:?}: {e}")))
}

pub fn parse_int(s: &str) -> Result<BigInt> {
    BigInt::from_str(s.trim()).map_err(|e| Error::Input(format!("bad integer {s:?}: {e}")))
}

/// Flag > config > default resolution for the working precision.
pub fn resolve_precision(flag: Option<u32>, cfg: Option<u32>) -> Result<u32> {
    let prec = flag.or(cfg).unwrap_or(256);
    if !(32..=PRECISION_CAP).contains(&prec) {
        return Err(Error::Input(format!(
            "precision_bits must lie in 32..={PRECISION_CAP}, got {prec}"
        )));
    }
    Ok(prec)
}

pub fn resolve_mode(flag: Option<&str>, cfg: Option<&str>) -> Result<Mode> {
    match flag.or(cfg) {
        Some(s) => Mode::parse(s),
        None => Err(Error::Input(
            "no mode given: pass --mode or set \"mode\" in the config".into(),
        )),
    }
}

fn kelem(base: BaseField, pair: &[String; 2]) -> Result<KElem> {
    KElem::new(base, parse_rational(&pair[0])?, parse_rational(&pair[1])?)
}

fn tower(base: BaseField, tau: &KElem, coords: &TowerCoords) -> Result<TowerElem> {
    let x = kelem(base, &coords[0])?;
    let y = kelem(base, &coords[1])?;
    TowerElem::new(base, tau.clone(), x, y)
}

/// A fully constructed instance, ready to run.
pub enum Built {
    Pair { inst: PairInstance, near_one: bool },
    Quad { inst: QuadIntInstance },
}

impl Built {
    pub fn measure(&self) -> Result<MeasureReport> {
        match self {
            Built::Pair { inst, near_one: false } => measure_pair(inst),
            Built::Pair { inst, near_one: true } => measure_pair_near_one(inst),
            Built::Quad { inst } => measure_quad_int(inst),
        }
    }

    pub fn growth(&self, r_max: u32) -> Result<GrowthReport> {
        match self {
            Built::Pair { inst, near_one: false } => verify_bounds(inst, r_max),
            Built::Pair { inst, near_one: true } => verify_bounds_near_one(inst, r_max),
            Built::Quad { inst } => verify_bounds_quad(inst, r_max),
        }
    }

    pub fn pair_at(&self, r: u32) -> Result<ApproximantPair> {
        match self {
            Built::Pair { inst, .. } => build_pq(inst, r),
            Built::Quad { inst } => build_pq_quad(inst, r),
        }
    }

    pub fn base(&self) -> Result<BaseField> {
        match self {
            Built::Pair { inst, .. } => Ok(inst.base()),
            Built::Quad { inst } => Ok(inst.to_pair_instance()?.base()),
        }
    }
}

fn growth_constants(cfg: &InstanceConfig, prec: u32) -> Result<Option<CdConstants>> {
    match (&cfg.c_n, &cfg.d_n) {
        (None, None) => Ok(None),
        (Some(c), Some(d)) => Ok(Some(CdConstants {
            c: RealBall::from_rational(&parse_rational(c)?, prec),
            d: RealBall::from_rational(&parse_rational(d)?, prec),
            // Supplied constants are taken on trust for all r; the tool has
            // only checked finitely many indices, so the run stays flagged.
            empirical: true,
        })),
        _ => Err(Error::Input(
            "c_n and d_n must be given together or not at all".into(),
        )),
    }
}

pub fn build(cfg: &InstanceConfig, mode: Mode, prec: u32) -> Result<Built> {
    let sign = cfg.sign.unwrap_or(1);
    let cd = growth_constants(cfg, prec)?;

    if mode == Mode::Corollary1 {
        if cfg.field.is_some() {
            return Err(Error::Input(
                "corollary1 works over the rational base field: drop the field block".into(),
            ));
        }
        if cfg.g.is_some() || cfg.h.is_some() {
            return Err(Error::Input(
                "corollary1 derives g and h from (u1, u2, t): drop the g and h fields".into(),
            ));
        }
        let EtaConfig::QuadInt { u1, u2, t } = &cfg.eta else {
            return Err(Error::Input(
                "corollary1 needs eta in the integer form {u1, u2, t}".into(),
            ));
        };
        let t_int = parse_int(t)?;
        let base = BaseField::rational();
        let tau = KElem::from_rational(base, BigRational::from_integer(t_int.clone()));
        let beta = cfg
            .beta
            .as_ref()
            .map(|c| tower(base, &tau, c))
            .transpose()?;
        let gamma = cfg
            .gamma
            .as_ref()
            .map(|c| tower(base, &tau, c))
            .transpose()?;
        let inst = QuadIntInstance::new(
            parse_int(u1)?,
            parse_int(u2)?,
            t_int,
            cfg.m,
            cfg.n,
            beta,
            gamma,
            sign,
            cd,
            prec,
        )?;
        return Ok(Built::Quad { inst });
    }

    // Generic routes: the tower context comes either from an explicit field
    // block (tau over 𝕂) or from the integer eta form (base ℚ, tau = t).
    let (base, tau) = match (&cfg.field, &cfg.eta) {
        (Some(f), _) => {
            let base = if f.disc == 0 {
                BaseField::rational()
            } else {
                BaseField::imaginary_quadratic(f.disc)?
            };
            (base, kelem(base, &f.tau)?)
        }
        (None, EtaConfig::QuadInt { t, .. }) => {
            let base = BaseField::rational();
            let tau = KElem::from_rational(base, BigRational::from_integer(parse_int(t)?));
            (base, tau)
        }
        (None, EtaConfig::Tower(_)) => {
            return Err(Error::Input(
                "tower coordinates need a field block carrying disc and tau".into(),
            ));
        }
    };

    let eta = match &cfg.eta {
        EtaConfig::Tower(coords) => tower(base, &tau, coords)?,
        EtaConfig::QuadInt { u1, u2, t: _ } => {
            let half = BigRational::new(BigInt::from(1), BigInt::from(2));
            let x = KElem::new(base, parse_rational(u1)? * &half, BigRational::from_integer(0.into()))?;
            let y = KElem::new(base, parse_rational(u2)? * &half, BigRational::from_integer(0.into()))?;
            TowerElem::new(base, tau.clone(), x, y)?
        }
    };
    let beta = match &cfg.beta {
        Some(c) => tower(base, &tau, c)?,
        None => eta.clone(),
    };
    let gamma = match &cfg.gamma {
        Some(c) => tower(base, &tau, c)?,
        None => eta.conj(),
    };
    let g = match &cfg.g {
        Some(rc) => RadElem::new(tower(base, &tau, &rc.value)?, &parse_rational(&rc.root_scale)?)?,
        None => RadElem::from_tower(eta.one_like()),
    };
    let h = match &cfg.h {
        Some(s) => RealBall::from_rational(&parse_rational(s)?, prec),
        None => RealBall::from_i64(1, prec),
    };
    let inst = PairInstance::new(
        eta,
        beta,
        gamma,
        cfg.m,
        cfg.n,
        sign,
        g,
        h,
        cd,
        prec,
    )?;
    Ok(Built::Pair { inst, near_one: mode == Mode::Theorem3 })
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum NSpec {
    One(u32),
    Many(Vec<u32>),
}

impl NSpec {
    pub fn list(&self) -> Vec<u32> {
        match self {
            NSpec::One(n) => vec![*n],
            NSpec::Many(v) => v.clone(),
        }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct SearchConfig {
    pub u1_max: u64,
    pub u2_max: Option<u64>,
    /// A single t, or an absolute bound sweeping every nonzero |t| <= t_abs_max.
    pub t: Option<String>,
    pub t_abs_max: Option<u64>,
    pub n: NSpec,
    pub m: Option<u32>,
    pub sign: Option<i32>,
    pub cal_d: String,
    pub cal_r_max: Option<u32>,
    pub precision_bits: Option<u32>,
}

impl SearchConfig {
    pub fn t_values(&self) -> Result<Vec<BigInt>> {
        match (&self.t, self.t_abs_max) {
            (Some(s), None) => Ok(vec![parse_int(s)?]),
            (None, Some(bound)) => {
                let mut out = Vec::new();
                for a in 1..=bound {
                    out.push(BigInt::from(-(a as i64)));
                    out.push(BigInt::from(a));
                }
                Ok(out)
            }
            _ => Err(Error::Input(
                "give exactly one of t (a single value) or t_abs_max (a sweep bound)".into(),
            )),
        }
    }
}

pub fn load_search(path: &str) -> Result<(serde_json::Value, SearchConfig)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Input(format!("cannot read config {path}: {e}")))?;
    let raw: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("config {path} is not valid JSON: {e}")))?;
    let cfg: SearchConfig = serde_json::from_str(&text)
        .map_err(|e| Error::Input(format!("config {path} does not match the schema: {e}")))?;
    Ok((raw, cfg))
}
