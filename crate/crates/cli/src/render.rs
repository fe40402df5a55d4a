use num_bigint::BigInt;
use num_rational::BigRational;
use serde_json::{json, Value};

use effirr::approxseq::{ApproximantPair, GrowthReport, GrowthRow};
use effirr::error::Result;
use effirr::hyperg::{CdReport, CdVerdict, ValuationProduct};
use effirr::measures::{CdConstants, MeasureReport, Precondition, PreconditionStatus};
use effirr::qfield::{Ball, KElem, RealBall, TowerElem};
use effirr::RadElem;
use effirr::verify::ScanResult;

/// Significant digits for decimal enclosure strings. Display only: the
/// underlying values stay exact or ball-bounded in the library.
const SIG: usize = 24;

pub fn rat_s(x: &BigRational) -> String {
    x.to_string()
}

pub fn int_s(x: &BigInt) -> String {
    x.to_string()
}

pub fn rb_s(x: &RealBall) -> String {
    x.to_decimal_string(SIG)
}

pub fn ball_s(x: &Ball) -> String {
    x.to_decimal_string(SIG)
}

/// Fitted slopes are diagnostics, not enclosures; fixed width keeps the
/// report byte-stable.
pub fn slope_s(x: f64) -> String {
    format!("{x:.6}")
}

pub fn kelem_v(x: &KElem) -> Value {
    json!([rat_s(x.a()), rat_s(x.b())])
}

pub fn tower_v(x: &TowerElem) -> Value {
    json!([kelem_v(x.x()), kelem_v(x.y())])
}

pub fn rad_v(x: &RadElem) -> Value {
    json!({
        "elem": tower_v(x.elem()),
        "radicand": int_s(x.radicand()),
    })
}

pub fn vp_v(x: &ValuationProduct, prec: u32) -> Result<Value> {
    let factors: Vec<Value> = x
        .factors
        .iter()
        .map(|(p, e)| json!([p.to_string(), rat_s(e)]))
        .collect();
    let value = if x.is_one() {
        "1".to_string()
    } else {
        rb_s(&x.value_ball(prec)?)
    };
    Ok(json!({ "factors": factors, "value": value }))
}

pub fn status_s(s: PreconditionStatus) -> &'static str {
    match s {
        PreconditionStatus::Pass => "pass",
        PreconditionStatus::Fail => "fail",
        PreconditionStatus::Indeterminate => "indeterminate",
    }
}

pub fn preconditions_v(ps: &[Precondition]) -> Value {
    Value::Array(
        ps.iter()
            .map(|p| json!({ "name": p.name, "status": status_s(p.status) }))
            .collect(),
    )
}

pub fn cd_v(cd: &CdConstants) -> Value {
    json!({
        "c_n": rb_s(&cd.c),
        "d_n": rb_s(&cd.d),
        "empirical": cd.empirical,
    })
}

fn with_prov(rep: &MeasureReport, key: &str, value: Value) -> Value {
    let p = rep
        .provenance
        .get(key)
        .cloned()
        .unwrap_or_else(|| "derived".to_string());
    json!({ "value": value, "provenance": p })
}

pub fn measure_v(rep: &MeasureReport) -> Result<Value> {
    let prec = rep.e.precision();
    Ok(json!({
        "alpha": with_prov(rep, "alpha", Value::String(ball_s(&rep.alpha))),
        "e": with_prov(rep, "e", Value::String(rb_s(&rep.e))),
        "q": with_prov(rep, "q", Value::String(rb_s(&rep.q))),
        "kappa": with_prov(rep, "kappa", Value::String(rb_s(&rep.kappa))),
        "c": with_prov(rep, "c", Value::String(rb_s(&rep.c))),
        "d": with_prov(rep, "d", Value::String(int_s(&rep.d))),
        "n_dn": with_prov(rep, "n_dn", vp_v(&rep.n_dn, prec)?),
        "growth_constants": rep.cd.as_ref().map(cd_v),
        "preconditions": preconditions_v(&rep.preconditions),
        "ok": rep.ok(),
        "empirical": rep.empirical,
        "provenance": rep.provenance,
    }))
}

pub fn pair_v(p: &ApproximantPair) -> Value {
    json!({
        "r": p.r,
        "p": tower_v(&p.p),
        "q": tower_v(&p.q),
        "p_integral": p.p_integral,
        "q_integral": p.q_integral,
        "h_r": rad_v(&p.h_r),
        "scale": kelem_v(&p.scale),
    })
}

fn row_v(row: &GrowthRow) -> Value {
    json!({
        "r": row.r,
        "q_abs": rb_s(&row.q_abs),
        "rem_abs": rb_s(&row.rem_abs),
        "q_within": row.q_within,
        "rem_within": row.rem_within,
        "det_nonzero": row.det_nonzero,
        "ratio_outside_base": row.ratio_outside_base,
    })
}

pub fn growth_v(g: &GrowthReport) -> Value {
    json!({
        "k0": rb_s(&g.k0),
        "l0": rb_s(&g.l0),
        "e": rb_s(&g.e),
        "q": rb_s(&g.q),
        "q_slope": slope_s(g.q_slope),
        "q_slope_target": slope_s(g.q_slope_target),
        "rem_slope": slope_s(g.rem_slope),
        "rem_slope_target": slope_s(g.rem_slope_target),
        "monotone_from": g.monotone_from,
        "all_within": g.all_within(),
        "violations": g.violations(),
        "degeneracies": g.degeneracies(),
        "base_field_ratios": g.base_field_ratios(),
        "rows": Value::Array(g.rows.iter().map(row_v).collect()),
    })
}

fn coord_v(q: &(BigInt, BigInt)) -> Value {
    json!([int_s(&q.0), int_s(&q.1)])
}

pub fn scan_v(s: &ScanResult) -> Value {
    json!({
        "q_max": s.q_max,
        "worst_q": coord_v(&s.worst_q),
        "worst_p": coord_v(&s.worst_p),
        "worst_margin": rb_s(&s.worst_margin),
        "pass": s.pass,
        "exact_hit": s.exact_hit,
        "indeterminate_q": Value::Array(s.indeterminate_q.iter().map(coord_v).collect()),
    })
}

pub fn verdict_s(v: CdVerdict) -> &'static str {
    match v {
        CdVerdict::Pass => "pass",
        CdVerdict::Fail => "fail",
        CdVerdict::Indeterminate => "indeterminate",
    }
}

pub fn cd_report_v(rep: &CdReport) -> Value {
    json!({
        "all_pass": rep.all_pass(),
        "failures": rep.failures(),
        "indeterminate": rep.indeterminate(),
        "rows": Value::Array(
            rep.rows
                .iter()
                .map(|r| json!({
                    "r": r.r,
                    "left": rat_s(&r.left),
                    "verdict": verdict_s(r.verdict),
                }))
                .collect(),
        ),
    })
}
