mod config;
mod render;

use std::cmp::Ordering;
use std::collections::BTreeMap;

use clap::{Parser, Subcommand};
use num_bigint::BigInt;
use serde_json::{json, Value};

use effirr::error::{Error, Result};
use effirr::hyperg::{
    cal_n, calibrate_cd, check_cd_bound, denom_d, gamma_ratio_bounds, numer_n, x_coeffs,
};
use effirr::measures::{measure_quad_int, CdConstants, QuadIntInstance};
use effirr::verify::{scan_imquad, scan_real};

use config::{Built, Mode};

#[derive(Parser)]
#[command(
    name = "effirr",
    version,
    about = "Rigorous effective irrationality measures from hypergeometric approximants"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print approximant polynomial coefficients and their scaling integers
    Poly {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        r: u32,
        /// Scaling integer: also print the numerator factor it induces
        #[arg(long)]
        d: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Tabulate denominators, numerator factors and ratio envelopes per index
    Constants {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = 10)]
        r_max: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Fit growth constants over a window, then re-check them rigorously
    Calibrate {
        #[arg(long)]
        m: u32,
        #[arg(long)]
        n: u32,
        #[arg(long)]
        d: String,
        #[arg(long, default_value_t = 200)]
        r_max: u32,
        #[arg(long)]
        out: Option<String>,
    },
    /// Compute the measure constants for a configured instance
    Measure {
        #[arg(long)]
        config: String,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Build the approximant sequence and certify its growth bounds
    Seq {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 30)]
        r_max: u32,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Measure, then scan every denominator up to a bound for violations
    Verify {
        #[arg(long)]
        config: String,
        #[arg(long, default_value_t = 1000)]
        q_max: u64,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        mode: Option<String>,
        #[arg(long)]
        out: Option<String>,
    },
    /// Grid-search integer instances and rank the admissible ones
    Search {
        #[arg(long)]
        config: String,
        #[arg(long)]
        precision: Option<u32>,
        #[arg(long)]
        out: Option<String>,
    },
}

impl Cmd {
    fn name(&self) -> &'static str {
        match self {
            Cmd::Poly { .. } => "poly",
            Cmd::Constants { .. } => "constants",
            Cmd::Calibrate { .. } => "calibrate",
            Cmd::Measure { .. } => "measure",
            Cmd::Seq { .. } => "seq",
            Cmd::Verify { .. } => "verify",
            Cmd::Search { .. } => "search",
        }
    }

    fn out(&self) -> Option<&str> {
        match self {
            Cmd::Poly { out, .. }
            | Cmd::Constants { out, .. }
            | Cmd::Calibrate { out, .. }
            | Cmd::Measure { out, .. }
            | Cmd::Seq { out, .. }
            | Cmd::Verify { out, .. }
            | Cmd::Search { out, .. } => out.as_deref(),
        }
    }
}

fn report(command: &str, body: Value) -> Value {
    let Value::Object(mut map) = body else {
        unreachable!("report bodies are always objects");
    };
    map.insert("version".into(), json!(env!("CARGO_PKG_VERSION")));
    map.insert("command".into(), json!(command));
    Value::Object(map)
}

fn code_of(e: &Error) -> i32 {
    match e {
        Error::Input(_) | Error::Domain(_) | Error::FactorLimit(_) => 3,
        Error::Precondition(_) => 1,
        Error::Invariant(_) | Error::PrecisionLoss(_) => 2,
    }
}

fn kind_of(e: &Error) -> &'static str {
    match e {
        Error::Input(_) => "input",
        Error::Domain(_) => "domain",
        Error::FactorLimit(_) => "factor-limit",
        Error::Precondition(_) => "precondition",
        Error::Invariant(_) => "invariant",
        Error::PrecisionLoss(_) => "precision-loss",
    }
}

fn cmd_poly(m: u32, n: u32, r: u32, d: Option<&str>) -> Result<(Value, i32)> {
    let poly = x_coeffs(m, n, r)?;
    let dd = denom_d(m, n, r)?;
    let numer = match d {
        Some(s) => {
            let di = config::parse_int(s)?;
            let nn = numer_n(m, n, &di, r)?;
            json!({ "d": render::int_s(&di), "value": render::int_s(&nn) })
        }
        None => Value::Null,
    };
    let coeffs: Vec<String> = poly.coeffs.iter().map(render::rat_s).collect();
    let body = json!({
        "m": m,
        "n": n,
        "r": r,
        "coefficients": coeffs,
        "denominator": render::int_s(&dd),
        "numerator": numer,
    });
    Ok((report("poly", body), 0))
}

fn cmd_constants(m: u32, n: u32, d: &str, r_max: u32) -> Result<(Value, i32)> {
    let di = config::parse_int(d)?;
    let vp = cal_n(&di, n)?;
    let mut rows = Vec::new();
    for r in 0..=r_max {
        let dr = denom_d(m, n, r)?;
        let nr = numer_n(m, n, &di, r)?;
        let (up, lo) = gamma_ratio_bounds(m, n, r)?;
        rows.push(json!({
            "r": r,
            "denominator": render::int_s(&dr),
            "numerator": render::int_s(&nr),
            "ratio_envelopes": [render::rat_s(&up), render::rat_s(&lo)],
        }));
    }
    let body = json!({
        "m": m,
        "n": n,
        "d": render::int_s(&di),
        "r_max": r_max,
        "valuation_product": render::vp_v(&vp, 128)?,
        "rows": rows,
    });
    Ok((report("constants", body), 0))
}

fn cmd_calibrate(m: u32, n: u32, d: &str, r_max: u32) -> Result<(Value, i32)> {
    let di = config::parse_int(d)?;
    let (c, dg, empirical) = calibrate_cd(m, n, &di, r_max)?;
    let chk = check_cd_bound(m, n, &di, &c, &dg, r_max)?;
    let code = if chk.all_pass() { 0 } else { 2 };
    let body = json!({
        "m": m,
        "n": n,
        "d": render::int_s(&di),
        "r_max": r_max,
        "c_n": render::rb_s(&c),
        "d_n": render::rb_s(&dg),
        "empirical": empirical,
        "check": render::cd_report_v(&chk),
    });
    Ok((report("calibrate", body), code))
}

struct Run {
    raw: Value,
    mode: Mode,
    prec: u32,
    built: Built,
}

fn prepare(cfgpath: &str, precision: Option<u32>, mode_flag: Option<&str>) -> Result<Run> {
    let loaded = config::load_instance(cfgpath)?;
    let mode = config::resolve_mode(mode_flag, loaded.cfg.mode.as_deref())?;
    let prec = config::resolve_precision(precision, loaded.cfg.precision_bits)?;
    let built = config::build(&loaded.cfg, mode, prec)?;
    Ok(Run { raw: loaded.raw, mode, prec, built })
}

fn cmd_measure(cfgpath: &str, precision: Option<u32>, mode_flag: Option<&str>) -> Result<(Value, i32)> {
    let run = prepare(cfgpath, precision, mode_flag)?;
    let rep = run.built.measure()?;
    let code = if rep.ok() { 0 } else { 1 };
    let body = json!({
        "instance": run.raw,
        "mode": run.mode.name(),
        "precision_bits": run.prec,
        "measure": render::measure_v(&rep)?,
        "empirical": rep.empirical,
    });
    Ok((report("measure", body), code))
}

fn cmd_seq(
    cfgpath: &str,
    r_max: u32,
    precision: Option<u32>,
    mode_flag: Option<&str>,
) -> Result<(Value, i32)> {
    let run = prepare(cfgpath, precision, mode_flag)?;
    let rep = run.built.measure()?;
    if !rep.ok() {
        let body = json!({
            "instance": run.raw,
            "mode": run.mode.name(),
            "precision_bits": run.prec,
            "measure": render::measure_v(&rep)?,
            "growth": Value::Null,
            "pairs": Value::Null,
            "empirical": rep.empirical,
        });
        return Ok((report("seq", body), 1));
    }
    let growth = run.built.growth(r_max)?;
    let mut pairs = Vec::new();
    for r in 0..=r_max {
        pairs.push(render::pair_v(&run.built.pair_at(r)?));
    }
    let ok = growth.all_within() && growth.degeneracies().is_empty();
    let body = json!({
        "instance": run.raw,
        "mode": run.mode.name(),
        "precision_bits": run.prec,
        "r_max": r_max,
        "measure": render::measure_v(&rep)?,
        "growth": render::growth_v(&growth),
        "pairs": pairs,
        "empirical": rep.empirical,
    });
    Ok((report("seq", body), if ok { 0 } else { 2 }))
}

fn cmd_verify(
    cfgpath: &str,
    q_max: u64,
    precision: Option<u32>,
    mode_flag: Option<&str>,
) -> Result<(Value, i32)> {
    let run = prepare(cfgpath, precision, mode_flag)?;
    let rep = run.built.measure()?;
    if !rep.ok() {
        let body = json!({
            "instance": run.raw,
            "mode": run.mode.name(),
            "precision_bits": run.prec,
            "measure": render::measure_v(&rep)?,
            "scan": Value::Null,
            "empirical": rep.empirical,
        });
        return Ok((report("verify", body), 1));
    }
    let base = run.built.base()?;
    let (target, scan) = if base.is_rational() {
        let im = rep.alpha.im_ball();
        if matches!(im.sign_certain(), Some(o) if o != Ordering::Equal) {
            return Err(Error::Input(
                "alpha has a certainly nonzero imaginary part: a rational scan needs a real target"
                    .into(),
            ));
        }
        let re = rep.alpha.re_ball();
        let scan = scan_real(&re, &rep.c, &rep.kappa, q_max)?;
        (json!({ "kind": "real", "re": render::rb_s(&re), "im": render::rb_s(&im) }), scan)
    } else {
        let d = BigInt::from(-base.disc());
        let scan = scan_imquad(&rep.alpha, &rep.c, &rep.kappa, q_max, &d)?;
        (json!({ "kind": "imaginary-quadratic", "d": render::int_s(&d) }), scan)
    };
    let body = json!({
        "instance": run.raw,
        "mode": run.mode.name(),
        "precision_bits": run.prec,
        "measure": render::measure_v(&rep)?,
        "target": target,
        "scan": render::scan_v(&scan),
        "empirical": rep.empirical,
    });
    Ok((report("verify", body), if scan.pass { 0 } else { 2 }))
}

fn cmd_search(cfgpath: &str, precision: Option<u32>) -> Result<(Value, i32)> {
    let (raw, cfg) = config::load_search(cfgpath)?;
    let prec = config::resolve_precision(precision, cfg.precision_bits)?;
    let m = cfg.m.unwrap_or(1);
    let sign = cfg.sign.unwrap_or(1);
    let u2_max = cfg.u2_max.unwrap_or(1);
    let cal_r_max = cfg.cal_r_max.unwrap_or(200);
    let cal_d = config::parse_int(&cfg.cal_d)?;
    let t_values = cfg.t_values()?;
    let n_list = cfg.n.list();

    let mut cals: BTreeMap<u32, CdConstants> = BTreeMap::new();
    for &n in &n_list {
        if cals.contains_key(&n) {
            continue;
        }
        let (c, dg, empirical) = calibrate_cd(m, n, &cal_d, cal_r_max)?;
        cals.insert(n, CdConstants { c, d: dg, empirical });
    }

    let mut hits: Vec<(f64, u64, u64, BigInt, u32, effirr::MeasureReport)> = Vec::new();
    let mut evaluated: u64 = 0;
    let mut rejected: u64 = 0;
    let mut failed: u64 = 0;
    for &n in &n_list {
        let cd = &cals[&n];
        for t in &t_values {
            for u2 in 1..=u2_max {
                for u1 in 1..=cfg.u1_max {
                    evaluated += 1;
                    let inst = QuadIntInstance::new(
                        BigInt::from(u1),
                        BigInt::from(u2),
                        t.clone(),
                        m,
                        n,
                        None,
                        None,
                        sign,
                        Some(cd.clone()),
                        prec,
                    );
                    let inst = match inst {
                        Ok(i) => i,
                        Err(_) => {
                            rejected += 1;
                            continue;
                        }
                    };
                    match measure_quad_int(&inst) {
                        Ok(rep) if rep.ok() => {
                            hits.push((rep.kappa.mid_f64(), u1, u2, t.clone(), n, rep))
                        }
                        Ok(_) => failed += 1,
                        Err(_) => rejected += 1,
                    }
                }
            }
        }
    }
    hits.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then_with(|| a.1.cmp(&b.1))
            .then_with(|| a.2.cmp(&b.2))
            .then_with(|| a.3.cmp(&b.3))
            .then_with(|| a.4.cmp(&b.4))
    });
    let rows: Vec<Value> = hits
        .iter()
        .map(|(_, u1, u2, t, n, rep)| {
            json!({
                "u1": u1,
                "u2": u2,
                "t": render::int_s(t),
                "n": n,
                "d": render::int_s(&rep.d),
                "e": render::rb_s(&rep.e),
                "q": render::rb_s(&rep.q),
                "kappa": render::rb_s(&rep.kappa),
                "c": render::rb_s(&rep.c),
            })
        })
        .collect();
    let cal_rows: BTreeMap<String, Value> = cals
        .iter()
        .map(|(n, cd)| (n.to_string(), render::cd_v(cd)))
        .collect();
    let code = if rows.is_empty() { 1 } else { 0 };
    let body = json!({
        "grid": raw,
        "m": m,
        "sign": sign,
        "precision_bits": prec,
        "calibrations": cal_rows,
        "counts": {
            "evaluated": evaluated,
            "construction_rejected": rejected,
            "precondition_failed": failed,
            "admissible": rows.len(),
        },
        "admissible": rows,
        "empirical": true,
    });
    Ok((report("search", body), code))
}

fn run(cmd: &Cmd) -> Result<(Value, i32)> {
    match cmd {
        Cmd::Poly { m, n, r, d, .. } => cmd_poly(*m, *n, *r, d.as_deref()),
        Cmd::Constants { m, n, d, r_max, .. } => cmd_constants(*m, *n, d, *r_max),
        Cmd::Calibrate { m, n, d, r_max, .. } => cmd_calibrate(*m, *n, d, *r_max),
        Cmd::Measure { config, precision, mode, .. } => {
            cmd_measure(config, *precision, mode.as_deref())
        }
        Cmd::Seq { config, r_max, precision, mode, .. } => {
            cmd_seq(config, *r_max, *precision, mode.as_deref())
        }
        Cmd::Verify { config, q_max, precision, mode, .. } => {
            cmd_verify(config, *q_max, *precision, mode.as_deref())
        }
        Cmd::Search { config, precision, .. } => cmd_search(config, *precision),
    }
}

fn main() {
    let cli = Cli::parse();
    let name = cli.cmd.name();
    let out = cli.cmd.out().map(String::from);
    let (value, code) = match run(&cli.cmd) {
        Ok(pair) => pair,
        Err(e) => (
            json!({
                "version": env!("CARGO_PKG_VERSION"),
                "command": name,
                "error": { "kind": kind_of(&e), "message": e.to_string() },
            }),
            code_of(&e),
        ),
    };
    let text = serde_json::to_string_pretty(&value).expect("report serialization") + "\n";
    match &out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                eprintln!("cannot write {path}: {e}");
                std::process::exit(3);
            }
        }
        None => print!("{text}"),
    }
    std::process::exit(code);
}
