use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use super::report::{beta_json, parse_json, to_json};
use super::{
    header, parse_int_list, read_input, single_int, write_output, CmdResult, Failure, Header, RunConfig,
    EXIT_OK, EXIT_PINCHING_VIOLATED,
};
use crate::bochner::{lowest_eigenvalue, mean_data, rho_ext, rho_full, t_operator, MeanCurvatureData, SecondFundamentalForm};
use crate::catalog::clifford_torus;
use crate::error::Error;
use crate::integral::{betti_integral_check, epsilon_ratio, epsilon_search_with, BettiReport, EpsilonConfig, EpsilonEstimate, SphereSampler};
use crate::pinching::{a_const, classify_equality, largest_root, pinch_poly, prop2_bound, EqualityCertificate};
use crate::verdict::{evaluate_points, render_verdict, summarize, Context, PointData, StatusSummary, Verdict};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckInput {
    n: Option<usize>,
    k: Option<usize>,
    p: usize,
    c: f64,
    operators: Vec<Vec<Vec<f64>>>,
}

#[derive(Serialize)]
struct PinchingReport {
    a: f64,
    r: f64,
    #[serde(rename = "P_at_phi_norm")]
    p_at_phi_norm: f64,
}

#[derive(Serialize)]
struct DirectionBound {
    direction: usize,
    /// `A` was negated to make its trace nonnegative.
    negated: bool,
    trace: f64,
    bound: f64,
    lowest_eigenvalue: f64,
}

#[derive(Serialize)]
struct CheckReport<'a> {
    header: Header<'a>,
    n: usize,
    k: usize,
    p: usize,
    c: f64,
    beta: Box<RawValue>,
    mean_curvature: MeanCurvatureData,
    rho_p_ext: f64,
    rho_p_full: f64,
    bound: f64,
    phi_p: f64,
    equality_certificate: EqualityCertificate,
    pinching_constants: PinchingReport,
    direction_bounds: Vec<DirectionBound>,
}

pub(crate) fn check(cfg: &RunConfig) -> CmdResult {
    let input: CheckInput = parse_json(&read_input(cfg)?, "check input JSON")?;
    let beta = SecondFundamentalForm::from_nested(&input.operators)?;
    if let Some(n) = input.n.filter(|&n| n != beta.n()) {
        return Err(Error::DimensionMismatch { expected: n, got: beta.n() }.into());
    }
    if let Some(k) = input.k.filter(|&k| k != beta.k()) {
        return Err(Error::DimensionMismatch { expected: k, got: beta.k() }.into());
    }
    if !input.c.is_finite() {
        return Err(Failure::input("c must be finite"));
    }
    let (n, p, c) = (beta.n(), input.p, input.c);
    let mean = mean_data(&beta);
    let free = mean.norm * mean.norm + c;
    if free < -cfg.tol_pinch {
        return Err(Error::Hypothesis(format!("H² + c = {free} < 0")).into());
    }
    let c_eff = c.max(-mean.norm * mean.norm);

    let ext = rho_ext(&beta, p)?;
    let bound = prop2_bound(&beta, p)?;
    let direction_bounds = beta
        .operators()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            let negated = a.trace() < 0.0;
            let a = if negated { a.negated() } else { a.clone() };
            Ok(DirectionBound {
                direction: i + 1,
                negated,
                trace: a.trace(),
                bound: crate::pinching::lemma1_bound(&a, p)?,
                lowest_eigenvalue: lowest_eigenvalue(&t_operator(&a, p)?)?,
            })
        })
        .collect::<Result<Vec<_>, Error>>()?;

    let report = CheckReport {
        header: header(cfg),
        n,
        k: beta.k(),
        p,
        c,
        beta: beta_json(&beta),
        rho_p_ext: ext,
        rho_p_full: rho_full(&beta, p, c)?,
        bound,
        phi_p: ext - bound,
        equality_certificate: classify_equality(&beta, p, c, cfg.tol_cluster)?,
        pinching_constants: PinchingReport {
            a: a_const(n, p, mean.norm, c_eff)?,
            r: largest_root(n, p, mean.norm, c_eff)?,
            p_at_phi_norm: pinch_poly(mean.traceless_norm, p, mean.norm, c, n)?,
        },
        mean_curvature: mean,
        direction_bounds,
    };
    write_output(cfg, &to_json(&report)?)?;
    Ok(EXIT_OK)
}

/// Radius grid entries; `None` stands for the minimal radius `√(p/n)`.
fn parse_r_grid(raw: &str) -> Result<Vec<Option<f64>>, Failure> {
    let bad = |what: &str| Failure::input(format!("--r-grid '{raw}': {what}"));
    let raw = raw.trim();
    let parts: Vec<&str> = raw.split(':').collect();
    if parts.len() == 3 {
        let nums: Vec<f64> = parts
            .iter()
            .map(|s| s.trim().parse::<f64>().map_err(|_| bad("expected start:stop:step")))
            .collect::<Result<_, _>>()?;
        let (start, stop, step) = (nums[0], nums[1], nums[2]);
        if !(step > 0.0) || !(stop >= start) {
            return Err(bad("need step > 0 and stop >= start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        return Ok((0..count)
            .map(|i| Some(((start + i as f64 * step) * 1e12).round() / 1e12))
            .collect());
    }
    if parts.len() != 1 {
        return Err(bad("expected start:stop:step or a comma list"));
    }
    raw.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| match s.trim() {
            "min" => Ok(None),
            t => t.parse::<f64>().map(Some).map_err(|_| bad("unparseable entry")),
        })
        .collect()
}

pub(crate) fn torus_scan(cfg: &RunConfig) -> CmdResult {
    let ns = parse_int_list(cfg.n.as_deref().unwrap_or("3:10"), "n")?;
    let ps = cfg.p.as_deref().map(|p| parse_int_list(p, "p")).transpose()?;
    let grid = parse_r_grid(cfg.r_grid.as_deref().unwrap_or("0.05:0.95:0.05"))?;

    let mut rows = Vec::new();
    for &n in &ns {
        if n < 3 {
            return Err(Failure::input(format!("--n: tangent dimension {n} < 3")));
        }
        let degrees: Vec<usize> = match &ps {
            Some(list) => list.iter().copied().filter(|&p| p >= 1 && 2 * p <= n).collect(),
            None => (1..=n / 2).collect(),
        };
        for p in degrees {
            for r in &grid {
                let r = r.unwrap_or_else(|| (p as f64 / n as f64).sqrt());
                let t = clifford_torus(n, p, r)?;
                let a = a_const(n, p, t.h, 1.0)?;
                let gap = t.s - a;
                let branch = if gap.abs() <= cfg.tol_pinch * a.abs().max(1.0) {
                    "equality"
                } else if gap > 0.0 {
                    "strict_above"
                } else {
                    "strict_below"
                };
                rows.push((n, p, r, t.h, t.s, a, gap, branch));
            }
        }
    }
    if rows.is_empty() {
        return Err(Failure::input("torus scan grid is empty"));
    }

    let mut out = String::new();
    let header_json = serde_json::to_string(&header(cfg)).map_err(|e| Failure::other(e.to_string()))?;
    out.push_str(&format!("# {header_json}\n"));
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::other(format!("csv: {e}"));
    w.write_record(["n", "p", "r", "H", "S", "a", "gap", "branch"]).map_err(io)?;
    for (n, p, r, h, s, a, gap, branch) in rows {
        w.write_record([
            n.to_string(),
            p.to_string(),
            r.to_string(),
            h.to_string(),
            s.to_string(),
            a.to_string(),
            gap.to_string(),
            branch.to_string(),
        ])
        .map_err(io)?;
    }
    let body = w.into_inner().map_err(|e| Failure::other(format!("csv: {e}")))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    write_output(cfg, &out)?;
    Ok(EXIT_OK)
}

#[derive(Deserialize)]
struct PointRow {
    point_id: String,
    #[serde(rename = "H")]
    h: f64,
    #[serde(rename = "S")]
    s: f64,
}

#[derive(Serialize)]
struct VerdictReport<'a> {
    header: Header<'a>,
    context: Context,
    context_source: &'static str,
    verdict: Verdict,
}

/// Splits the leading `#` lines (a JSON context block) from the CSV body.
fn split_preamble(text: &str) -> (String, usize) {
    let mut json = String::new();
    let mut lines = 0;
    for line in text.lines() {
        match line.trim_start().strip_prefix('#') {
            Some(rest) => {
                json.push_str(rest);
                json.push('\n');
                lines += 1;
            }
            None => break,
        }
    }
    (json, lines)
}

fn flag_context(cfg: &RunConfig) -> Result<Context, Failure> {
    let n = single_int(cfg.n.as_ref(), "n")?;
    let p = single_int(cfg.p.as_ref(), "p")?;
    let c = cfg
        .c
        .ok_or_else(|| Failure::input("--c is required when the CSV has no context block"))?;
    Ok(Context::new(n, p, c))
}

pub(crate) fn verdict(cfg: &RunConfig) -> CmdResult {
    let text = read_input(cfg)?;
    let (preamble, _) = split_preamble(&text);
    let (ctx, source) = if preamble.trim().is_empty() {
        (flag_context(cfg)?, "flags")
    } else {
        (parse_json::<Context>(&preamble, "context block")?, "csv_preamble")
    };
    ctx.validate()?;

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Failure::input(format!("cannot read CSV header: {e}")))?
        .clone();
    for col in ["point_id", "H", "S"] {
        if !headers.iter().any(|h| h == col) {
            return Err(Failure::input(format!("CSV header lacks column '{col}'")));
        }
    }
    let mut points = Vec::new();
    for row in reader.deserialize::<PointRow>() {
        let row = row.map_err(|e| {
            let at = e.position().map(|p| format!(" (line {})", p.line())).unwrap_or_default();
            Failure::input(format!("bad CSV row{at}: {e}"))
        })?;
        points.push(PointData::new(row.point_id, row.h, row.s));
    }
    if points.is_empty() {
        return Err(Failure::input("CSV contains no data rows"));
    }

    let statuses = evaluate_points(&points, &ctx, cfg.tol_pinch)?;
    let summary = summarize(&statuses);
    let verdict = render_verdict(&statuses, &ctx)?;
    let report = VerdictReport {
        header: header(cfg),
        context: ctx,
        context_source: source,
        verdict,
    };
    write_output(cfg, &to_json(&report)?)?;
    Ok(if summary == StatusSummary::ViolatedSomewhere {
        EXIT_PINCHING_VIOLATED
    } else {
        EXIT_OK
    })
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct WeightedPoint {
    weight: f64,
    operators: Vec<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct BettiInput {
    points: Vec<WeightedPoint>,
}

#[derive(Serialize)]
struct EpsilonReport<'a> {
    header: Header<'a>,
    estimate: EpsilonEstimate,
    best_beta: Box<RawValue>,
    /// `|g(2β) − g(β)| / g(β)` at the returned β.
    homogeneity_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    betti_check: Option<BettiReport>,
}

pub(crate) fn epsilon(cfg: &RunConfig) -> CmdResult {
    let n = single_int(cfg.n.as_ref(), "n")?;
    let p = single_int(cfg.p.as_ref(), "p")?;
    let k = cfg.k.ok_or_else(|| Failure::input("--k is required"))?;
    if cfg.restarts == 0 {
        return Err(Failure::input("--restarts must be at least 1"));
    }
    let mut ecfg = EpsilonConfig::new(cfg.restarts, cfg.seed);
    ecfg.index_tol = cfg.tol_index;
    ecfg.max_iter = cfg.max_iter;
    if let Some(s) = cfg.samples {
        ecfg.samples = s;
    }
    // parse the optional batch before the (slow) search
    let batch = match &cfg.input {
        Some(_) => Some(parse_json::<BettiInput>(&read_input(cfg)?, "point batch JSON")?),
        None => None,
    };

    let est = epsilon_search_with(n, k, p, &ecfg)?;
    let sampler = SphereSampler::uniform(k, ecfg.samples.max(2), cfg.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let g1 = epsilon_ratio(&est.best_beta, p, &sampler, cfg.tol_index)?;
    let g2 = epsilon_ratio(&est.best_beta.scaled(2.0), p, &sampler, cfg.tol_index)?;
    let homogeneity_residual = match (g1, g2) {
        (Some(a), Some(b)) => (a - b).abs() / a.abs().max(f64::MIN_POSITIVE),
        _ => f64::NAN,
    };

    let betti_check = match batch {
        Some(batch) => {
            let points = batch
                .points
                .iter()
                .map(|pt| Ok((pt.weight, SecondFundamentalForm::from_nested(&pt.operators)?)))
                .collect::<Result<Vec<_>, Error>>()?;
            let eps_hat = cfg.eps_hat.unwrap_or(est.best_value);
            Some(betti_integral_check(&points, p, eps_hat, &sampler, cfg.tol_index)?)
        }
        None => None,
    };

    let report = EpsilonReport {
        header: header(cfg),
        best_beta: beta_json(&est.best_beta),
        estimate: est,
        homogeneity_residual,
        betti_check,
    };
    write_output(cfg, &to_json(&report)?)?;
    Ok(EXIT_OK)
}
