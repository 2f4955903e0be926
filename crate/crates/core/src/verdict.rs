//! Pointwise pinching evaluation and the homology/rigidity conclusions that
//! follow from it.
//!
//! A verdict never claims anything about an actual manifold: it records which
//! theorem hypotheses the sampled data satisfies and states the corresponding
//! conclusion, with the samples as the only evidence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bochner::{mean_data, SecondFundamentalForm};
use crate::error::{Error, Result};
use crate::exterior::binomial;
use crate::pinching::a_const;

pub const DEFAULT_PINCH_TOL: f64 = 1e-9;

/// Slack in the Cauchy–Schwarz check `S >= nH²`.
const CS_SLACK: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointData {
    pub point_id: String,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "S")]
    pub s: f64,
    #[serde(skip)]
    pub spectra: Option<SecondFundamentalForm>,
}

impl PointData {
    pub fn new(point_id: impl Into<String>, h: f64, s: f64) -> Self {
        PointData {
            point_id: point_id.into(),
            h,
            s,
            spectra: None,
        }
    }

    /// Point data read off a second fundamental form.
    pub fn from_beta(point_id: impl Into<String>, beta: SecondFundamentalForm) -> Self {
        let m = mean_data(&beta);
        PointData {
            point_id: point_id.into(),
            h: m.norm,
            s: m.total_norm_sq,
            spectra: Some(beta),
        }
    }
}

fn yes() -> bool {
    true
}

/// Global hypotheses that cannot be read off pointwise data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Context {
    pub n: usize,
    pub p: usize,
    /// Lower bound for the ambient curvature operator; the sectional
    /// curvature when `space_form` is set.
    pub c: f64,
    #[serde(default)]
    pub compact: bool,
    #[serde(default)]
    pub minimal: bool,
    #[serde(default, rename = "H_positive")]
    pub h_positive: bool,
    /// Image contained in an open hemisphere (`c = 1` only).
    #[serde(default)]
    pub hemisphere: bool,
    /// Mean curvature at least 1 everywhere (`c = −1` only).
    #[serde(default, rename = "H_geq_1")]
    pub h_geq_1: bool,
    /// The ambient space is the simply connected space form of curvature `c`.
    #[serde(default = "yes")]
    pub space_form: bool,
    /// The submanifold is Kähler (user supplied; never detected).
    #[serde(default)]
    pub kaehler: bool,
}

impl Context {
    pub fn new(n: usize, p: usize, c: f64) -> Self {
        Context {
            n,
            p,
            c,
            compact: true,
            minimal: false,
            h_positive: false,
            hemisphere: false,
            h_geq_1: false,
            space_form: true,
            kaehler: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 || self.p < 1 || 2 * self.p > self.n {
            return Err(Error::domain(format!(
                "context needs n >= 3 and 1 <= p <= n/2, got n = {}, p = {}",
                self.n, self.p
            )));
        }
        if !self.c.is_finite() {
            return Err(Error::domain("context curvature bound c must be finite"));
        }
        if self.hemisphere && self.c != 1.0 {
            return Err(Error::domain("hemisphere flag only applies to c = 1"));
        }
        if self.h_geq_1 && self.c != -1.0 {
            return Err(Error::domain("H_geq_1 flag only applies to c = -1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PointStatus {
    Strict,
    Equality,
    Violated,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PointEvaluation {
    pub point_id: String,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "S")]
    pub s: f64,
    pub a: f64,
    /// `S − a(n,p,H,c)`.
    pub gap: f64,
    pub status: PointStatus,
}

/// Classifies every point against `S ≤ a(n,p,H,c)`.
pub fn evaluate_points(points: &[PointData], ctx: &Context, tol: f64) -> Result<Vec<PointEvaluation>> {
    ctx.validate()?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    if points.is_empty() {
        return Err(Error::domain("no sample points"));
    }
    let nf = ctx.n as f64;
    points
        .iter()
        .map(|pt| {
            let id = &pt.point_id;
            if !(pt.h.is_finite() && pt.s.is_finite()) || pt.h < 0.0 || pt.s < 0.0 {
                return Err(Error::domain(format!(
                    "point '{id}': H and S must be finite and nonnegative"
                )));
            }
            let nh2 = nf * pt.h * pt.h;
            if pt.s < nh2 - CS_SLACK * nh2.max(1.0) {
                return Err(Error::domain(format!(
                    "point '{id}': S = {} < nH² = {nh2}",
                    pt.s
                )));
            }
            if let Some(beta) = &pt.spectra {
                let m = mean_data(beta);
                if beta.n() != ctx.n
                    || (m.norm - pt.h).abs() > 1e-8 * pt.h.max(1.0)
                    || (m.total_norm_sq - pt.s).abs() > 1e-8 * pt.s.max(1.0)
                {
                    return Err(Error::domain(format!(
                        "point '{id}': attached second fundamental form disagrees with (H, S)"
                    )));
                }
            }
            let free = pt.h * pt.h + ctx.c;
            if free < -tol {
                return Err(Error::Hypothesis(format!(
                    "point '{id}': H² + c = {free} < 0"
                )));
            }
            let c_eff = if free < 0.0 { -pt.h * pt.h } else { ctx.c };
            let a = a_const(ctx.n, ctx.p, pt.h, c_eff)?;
            let scale = tol * a.abs().max(1.0);
            let gap = pt.s - a;
            let status = if gap.abs() <= scale {
                PointStatus::Equality
            } else if gap < 0.0 {
                PointStatus::Strict
            } else {
                PointStatus::Violated
            };
            Ok(PointEvaluation {
                point_id: id.clone(),
                h: pt.h,
                s: pt.s,
                a,
                gap,
                status,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StatusSummary {
    AllStrict,
    MixedWithStrict,
    AllEquality,
    ViolatedSomewhere,
}

pub fn summarize(statuses: &[PointEvaluation]) -> StatusSummary {
    let count = |s: PointStatus| statuses.iter().filter(|e| e.status == s).count();
    if count(PointStatus::Violated) > 0 {
        StatusSummary::ViolatedSomewhere
    } else if count(PointStatus::Strict) == statuses.len() {
        StatusSummary::AllStrict
    } else if count(PointStatus::Equality) == statuses.len() {
        StatusSummary::AllEquality
    } else {
        StatusSummary::MixedWithStrict
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Conclusion {
    pub theorem_id: String,
    pub text: String,
    pub conditions_used: Vec<String>,
    pub citation_quote: String,
    /// The conclusion rests on results about the ambient space that are not
    /// re-derived here.
    pub external_dependency: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub status_summary: StatusSummary,
    pub banner: String,
    pub sample_count: usize,
    pub conclusions: Vec<Conclusion>,
    /// `i ↦` upper bound for `b_i`, `p ≤ i ≤ n−p`.
    pub betti_bounds: BTreeMap<usize, usize>,
    pub rigidity_candidates: Vec<String>,
    pub points: Vec<PointEvaluation>,
}

struct Builder<'a> {
    ctx: &'a Context,
    conclusions: Vec<Conclusion>,
    candidates: Vec<String>,
}

impl Builder<'_> {
    fn add(&mut self, id: &str, text: impl Into<String>, conditions: &[&str], quote: &str) {
        self.push(id, text, conditions, quote, false);
    }

    fn add_external(&mut self, id: &str, text: impl Into<String>, conditions: &[&str], quote: &str) {
        self.push(id, text, conditions, quote, true);
    }

    fn push(&mut self, id: &str, text: impl Into<String>, conditions: &[&str], quote: &str, external: bool) {
        self.conclusions.push(Conclusion {
            theorem_id: id.to_string(),
            text: text.into(),
            conditions_used: conditions.iter().map(|s| s.to_string()).collect(),
            citation_quote: quote.to_string(),
            external_dependency: external,
        });
    }

    fn candidate(&mut self, c: String) {
        if !self.candidates.contains(&c) {
            self.candidates.push(c);
        }
    }

    fn clifford_candidates(&mut self, from: usize) {
        let n = self.ctx.n;
        for q in from..=n / 2 {
            self.candidate(format!("Clifford torus T^{n}_{q}(sqrt({q}/{n}))"));
        }
    }

    fn cp2_candidate(&mut self) {
        if self.ctx.n == 4 {
            self.candidate("standard embedding psi: CP^2_{4/3} -> S^7".to_string());
        }
    }
}

fn low_dim_topology(n: usize) -> Option<&'static str> {
    match n {
        3 => Some("; M is diffeomorphic to a spherical space form"),
        4 => Some("; the universal cover of M is homeomorphic to S^4"),
        _ => None,
    }
}

/// Turns per-point statuses into the applicable conclusions.
pub fn render_verdict(statuses: &[PointEvaluation], ctx: &Context) -> Result<Verdict> {
    ctx.validate()?;
    if statuses.is_empty() {
        return Err(Error::domain("no evaluated points"));
    }
    let (n, p, c) = (ctx.n, ctx.p, ctx.c);
    let summary = summarize(statuses);
    let banner = format!(
        "based on {} sampled points; equality means equality at every sample",
        statuses.len()
    );
    let mut b = Builder {
        ctx,
        conclusions: Vec::new(),
        candidates: Vec::new(),
    };
    let mut betti = BTreeMap::new();
    let finish = |b: Builder, betti| Verdict {
        status_summary: summary,
        banner: banner.clone(),
        sample_count: statuses.len(),
        conclusions: b.conclusions,
        betti_bounds: betti,
        rigidity_candidates: b.candidates,
        points: statuses.to_vec(),
    };

    if summary == StatusSummary::ViolatedSomewhere {
        let bad: Vec<&str> = statuses
            .iter()
            .filter(|e| e.status == PointStatus::Violated)
            .map(|e| e.point_id.as_str())
            .collect();
        b.add(
            "mainthm1",
            "pinching hypothesis fails; no conclusion",
            &[&format!("S > a(n,p,H,c) at {}", bad.join(", "))],
            "S <= a(n,p,H,c)",
        );
        return Ok(finish(b, betti));
    }

    let strict = statuses.iter().any(|e| e.status == PointStatus::Strict);
    let all_equality = summary == StatusSummary::AllEquality;

    if strict {
        b.add(
            "thm2",
            format!("no nontrivial harmonic {p}-form of constant length exists (in particular no parallel {p}-form)"),
            &["S < a(n,p,H,c) at a point", "H^2 + c >= 0"],
            "S >= a(n,p,H,c)",
        );
    } else {
        b.add(
            "thm2",
            format!("equality at every sample is compatible with a constant-length harmonic {p}-form"),
            &["S = a(n,p,H,c) at every sample", "H^2 + c >= 0"],
            "S >= a(n,p,H,c)",
        );
    }

    if !ctx.compact {
        return Ok(finish(b, betti));
    }

    for i in p..=n - p {
        betti.insert(i, binomial(n, i));
    }
    b.add(
        "mainthm1",
        format!("b_i(M) <= C({n},i) for {p} <= i <= {}", n - p),
        &["compact", "S <= a(n,p,H,c) everywhere", "H^2 + c >= 0"],
        "b_i(M^n) <= binom(n,i), p <= i <= n-p",
    );
    if strict {
        for i in p..=n - p {
            betti.insert(i, 0);
        }
        b.add(
            "mainthm1",
            format!("b_i(M) = 0 for {p} <= i <= {}", n - p),
            &["compact", "S < a(n,p,H,c) at a point"],
            "b_i(M^n) = 0, p <= i <= n-p",
        );
        if p == 1 {
            b.add(
                "mainthm1",
                "M is a real homology sphere",
                &["compact", "S < a(n,1,H,c) at a point", "p = 1"],
                "H^i(M^n; R) = 0, 1 <= i <= n-1",
            );
        }
    } else {
        b.add(
            "mainthm1",
            format!("if b_{p}(M) > 0 then every harmonic {p}-form is parallel"),
            &["compact", "S = a(n,p,H,c) at every sample"],
            "b_p(M^n) > 0 => S = a(n,p,H,c)",
        );
    }

    if ctx.space_form {
        space_form_conclusions(&mut b, &mut betti, statuses, strict, all_equality);
    }

    if ctx.kaehler && n % 2 == 0 {
        let m = n / 2;
        let q = 2 * (m / 2);
        let mut below = Vec::new();
        for e in statuses {
            let a = a_const(n, q, e.h, c.max(-e.h * e.h))?;
            if e.s < a - DEFAULT_PINCH_TOL * a.abs().max(1.0) {
                below.push(e.point_id.as_str());
            }
        }
        let text = if below.is_empty() {
            format!("samples are consistent with a Kaehler metric: S >= a({n},{q},H,c) everywhere")
        } else {
            format!(
                "no Kaehler metric: S < a({n},{q},H,c) at {}",
                below.join(", ")
            )
        };
        b.add("kaehler", text, &["Kaehler flag", "n even"], "S >= a(2m, 2[m/2], H, c)");
    }

    Ok(finish(b, betti))
}

fn space_form_conclusions(
    b: &mut Builder,
    betti: &mut BTreeMap<usize, usize>,
    statuses: &[PointEvaluation],
    strict: bool,
    all_equality: bool,
) {
    let ctx = b.ctx;
    let (n, p, c) = (ctx.n, ctx.p, ctx.c);
    let low_dim = low_dim_topology(n).unwrap_or("");
    let sphere_text = format!(
        "M is a real homology sphere with finite fundamental group admitting a metric of positive Ricci curvature{low_dim}"
    );

    if c == 1.0 && ctx.minimal {
        if strict {
            b.add(
                "thm.b",
                sphere_text.clone(),
                &["minimal", "c = 1", "S <= n", "S < n at a point"],
                "S <= n",
            );
        } else {
            b.add(
                "thm.b",
                "equality everywhere: rigidity candidates are a real homology sphere, a Clifford torus, or the standard CP^2 embedding",
                &["minimal", "c = 1", "S = n at every sample"],
                "S <= n",
            );
            b.candidate("real homology sphere with finite fundamental group".to_string());
            b.clifford_candidates(1);
            b.cp2_candidate();
        }
        match n {
            3 => b.add(
                "cor",
                if strict {
                    "M is diffeomorphic to a spherical space form"
                } else {
                    "M is the Clifford torus T^3_1(sqrt(1/3)) or diffeomorphic to a spherical space form"
                },
                &["minimal", "c = 1", "n = 3"],
                "S <= n, n = 3",
            ),
            4 => b.add(
                "cor",
                if strict {
                    "the universal cover of M is homeomorphic to S^4"
                } else {
                    "M is a Clifford torus T^4_p(sqrt(p/4)), p = 1, 2, the standard embedding of CP^2_{4/3} in S^7, or its universal cover is homeomorphic to S^4"
                },
                &["minimal", "c = 1", "n = 4"],
                "S <= n, n = 4",
            ),
            _ => {}
        }
    }

    if c == 1.0 {
        if all_equality {
            b.add(
                "thm.a",
                format!(
                    "either b_i(M) = 0 for {p} <= i <= {}, or: b_{p} > 0 forces a CW structure with cells only in dimensions 0, {p}, {}, {n}; b_q > 0 for some {p} < q <= n/2 forces f minimal and a Clifford torus T^{n}_q(sqrt(q/{n})) or the standard CP^2 embedding",
                    n - p,
                    n - p
                ),
                &["compact", "c = 1", "S = a(n,p,H,1) at every sample"],
                "H_i(M^n; G) = 0, i != 0, p, n-p, n",
            );
            b.clifford_candidates(p + 1);
            b.cp2_candidate();
            if ctx.h_positive && 2 * p < n {
                b.add(
                    "thm.a",
                    format!("if b_{p}(M) > 0 then f(M) is a torus T^{n}_{p}(r) with r > sqrt({p}/{n})"),
                    &["compact", "c = 1", "H > 0", "p < n/2"],
                    "T^n_p(r), r > sqrt(p/n)",
                );
                b.candidate(format!("torus T^{n}_{p}(r) with r > sqrt({p}/{n})"));
            }
        }
        if ctx.h_positive && 2 * p + 1 < n {
            b.add_external(
                "thm.a",
                format!(
                    "H_i(M; Z) = 0 for {p} <= i < {}, unless f(M) is a torus T^{n}_{p}(r) with r > sqrt({p}/{n})",
                    n - p
                ),
                &["compact", "c = 1", "H > 0", "p < (n-1)/2"],
                "H_i(M^n; Z) = 0, p <= i < n-p",
            );
        }

        if p == 1 {
            if strict {
                b.add(
                    "cor0",
                    sphere_text.clone(),
                    &["compact", "c = 1", "p = 1", "S < a(n,1,H,1) at a point"],
                    "S <= a(n,1,H,1)",
                );
                if ctx.h_positive {
                    b.add(
                        "cor0",
                        format!("M is homeomorphic to S^{n}"),
                        &["compact", "c = 1", "p = 1", "H > 0"],
                        "S^n",
                    );
                }
            } else {
                b.add(
                    "cor0",
                    format!("M is a real homology sphere, has a CW structure with cells only in dimensions 0, 1, {}, {n}, or is a Clifford torus T^{n}_q(sqrt(q/{n})) with q > 1 or the standard CP^2 embedding", n - 1),
                    &["compact", "c = 1", "p = 1", "S = a(n,1,H,1) at every sample"],
                    "S <= a(n,1,H,1)",
                );
                if ctx.h_positive {
                    b.add(
                        "cor0",
                        format!("M is homeomorphic to S^{n} or f(M) is a torus T^{n}_1(r) with r > 1/sqrt({n})"),
                        &["compact", "c = 1", "p = 1", "H > 0"],
                        "T^n_1(r), r > 1/sqrt(n)",
                    );
                    b.candidate(format!("torus T^{n}_1(r) with r > 1/sqrt({n})"));
                }
            }
        }

        let cap = 2.0 * ((n - 1) as f64).sqrt();
        if statuses.iter().all(|e| e.s <= cap * (1.0 + DEFAULT_PINCH_TOL)) {
            b.add(
                "cor1",
                format!("f(M) is a torus T^{n}_1(r) with r > 1/sqrt({n}), or M is a real homology sphere of positive Ricci curvature{low_dim}"),
                &["compact", "c = 1", "S <= 2 sqrt(n-1) at every sample"],
                "S <= 2 sqrt(n-1)",
            );
        }
    }

    if c == 0.0 || (c == 1.0 && ctx.hemisphere) {
        let setting = if c == 0.0 { "c = 0" } else { "c = 1, open hemisphere" };
        if 2 * p < n {
            for i in p..=n - p {
                betti.insert(i, 0);
            }
            b.add(
                "thm.A1",
                format!("b_i(M) = 0 for {p} <= i <= {}", n - p),
                &["compact", setting, "p < n/2"],
                "b_i(M^n) = 0, p <= i <= n-p",
            );
        } else if !strict {
            b.add(
                "thm.A1",
                format!("b_i(M) = 0 for i = {p}, or M has a CW structure with cells only in dimensions 0, {p}, {n}"),
                &["compact", setting, "p = n/2"],
                "cells in dimensions 0, n/2, n",
            );
        }
        if p == 1 {
            b.add(
                "thm.A1",
                sphere_text.clone(),
                &["compact", setting, "p = 1"],
                "H^i(M^n; R) = 0, 1 <= i <= n-1",
            );
        }
        if ctx.h_positive && (c == 1.0 || 2 * p + 1 < n) && 2 * p < n {
            b.add_external(
                "thm.A1",
                format!("H_i(M; Z) = 0 for {p} <= i < {}", n - p),
                &["compact", setting, "H > 0"],
                "H_i(M^n; Z) = 0, p <= i < n-p",
            );
        }
    }

    if c == -1.0 && ctx.h_geq_1 && 2 * p < n {
        for i in p..=n - p {
            betti.insert(i, 0);
        }
        b.add(
            "thm.d",
            format!("b_i(M) = 0 for {p} <= i <= {}", n - p),
            &["compact", "c = -1", "H >= 1", "p < n/2"],
            "b_i(M^n) = 0, p <= i <= n-p",
        );
    }
}
