//! Randomized self-check of the library invariants.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::report::to_json;
use super::{header, write_output, CmdResult, Header, RunConfig, EXIT_FAILURE, EXIT_OK};
use crate::bochner::{bochner_full, lowest_eigenvalue, quadratic_form, t_operator, t_spectrum_closed_form};
use crate::catalog::{clifford_torus, random_beta_with, BetaKind};
use crate::error::Result;
use crate::exterior::Endomorphism;
use crate::pinching::{a_const, largest_root, lemma1_bound, phi_p, pinch_poly};

#[derive(Debug, Serialize)]
struct PropertyResult {
    name: &'static str,
    trials: usize,
    failures: usize,
    /// Largest violation of the property's tolerance, in units of that tolerance.
    worst_ratio: f64,
    passed: bool,
}

#[derive(Serialize)]
struct SuiteReport<'a> {
    header: Header<'a>,
    all_passed: bool,
    properties: Vec<PropertyResult>,
}

struct Tally {
    name: &'static str,
    trials: usize,
    failures: usize,
    worst_ratio: f64,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Tally {
            name,
            trials: 0,
            failures: 0,
            worst_ratio: 0.0,
        }
    }

    /// Records a trial whose defect must not exceed `allowed`.
    fn record(&mut self, defect: f64, allowed: f64) {
        self.trials += 1;
        let ratio = if defect.is_nan() { f64::INFINITY } else { defect / allowed };
        self.worst_ratio = self.worst_ratio.max(ratio);
        if !(defect <= allowed) {
            self.failures += 1;
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name,
            trials: self.trials,
            failures: self.failures,
            worst_ratio: self.worst_ratio,
            passed: self.failures == 0,
        }
    }
}

fn random_symmetric(n: usize, rng: &mut ChaCha8Rng) -> Result<Endomorphism> {
    Ok(random_beta_with(n, 1, BetaKind::Generic, rng)?.operators()[0].clone())
}

fn run_suite(trials: usize, seed: u64) -> Result<Vec<PropertyResult>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();

    let mut t = Tally::new("closed_form_spectrum");
    for _ in 0..trials {
        let n = rng.random_range(3..=8);
        let p = rng.random_range(1..n);
        let a = random_symmetric(n, &mut rng)?;
        let mut dense = t_operator(&a, p)?.spectrum()?;
        let mut closed = t_spectrum_closed_form(&a.eigenvalues()?, p)?;
        dense.sort_by(f64::total_cmp);
        closed.sort_by(f64::total_cmp);
        let scale = closed.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let defect = dense.iter().zip(&closed).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        t.record(defect, 1e-8 * scale);
    }
    out.push(t.finish());

    let kinds = [BetaKind::Generic, BetaKind::Traceless, BetaKind::RankOneNormal];
    let mut t = Tally::new("phi_nonnegative");
    for i in 0..trials {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..=3);
        let p = rng.random_range(1..=n / 2);
        let beta = random_beta_with(n, k, kinds[i % kinds.len()], &mut rng)?;
        let phi = phi_p(&beta, p)?;
        t.record(-phi, 1e-8 * beta.norm_sq().max(1.0));
    }
    out.push(t.finish());

    let mut t = Tally::new("lemma_bound");
    for _ in 0..trials {
        let n = rng.random_range(3..=8);
        let p = rng.random_range(1..=n / 2);
        let mut a = random_symmetric(n, &mut rng)?;
        if a.trace() < 0.0 {
            a = a.negated();
        }
        let low = lowest_eigenvalue(&t_operator(&a, p)?)?;
        t.record(lemma1_bound(&a, p)? - low, 1e-8 * a.norm().powi(2).max(1.0));
    }
    out.push(t.finish());

    let mut t = Tally::new("threshold_identities");
    for _ in 0..trials {
        let n = rng.random_range(3..=10);
        let p = rng.random_range(1..=n / 2);
        let h: f64 = rng.random_range(0.0..3.0);
        let c = rng.random_range(-h * h..=2.0);
        let r = largest_root(n, p, h, c)?;
        let a = a_const(n, p, h, c)?;
        let scale = a.abs().max(1.0);
        let defect = ((a - (r * r + n as f64 * h * h)).abs() / scale)
            .max(pinch_poly(r, p, h, c, n)?.abs() / scale);
        t.record(defect, 1e-10);
    }
    out.push(t.finish());

    let mut t = Tally::new("root_monotonicity");
    for _ in 0..trials {
        let n = rng.random_range(3..=12);
        let h: f64 = rng.random_range(0.0..3.0);
        let c = rng.random_range(-h * h..=2.0);
        let roots = (1..=n / 2)
            .map(|p| largest_root(n, p, h, c))
            .collect::<Result<Vec<_>>>()?;
        let defect = roots.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max);
        t.record(defect, 1e-12 * roots.last().copied().unwrap_or(1.0).max(1.0));
    }
    out.push(t.finish());

    let mut t = Tally::new("torus_dichotomy");
    for n in 3..=10 {
        for p in 1..=n / 2 {
            for i in 1..=19 {
                let r = i as f64 * 0.05;
                let torus = clifford_torus(n, p, r)?;
                let gap = torus.s - a_const(n, p, torus.h, 1.0)?;
                // for p = n/2 the torus is symmetric under r <-> sqrt(1 - r²): equality throughout
                let equality_side = 2 * p == n || r * r >= p as f64 / n as f64 - 1e-12;
                let defect = match (equality_side, gap > 0.0) {
                    (true, _) => gap.abs(),
                    (false, true) => 0.0,
                    (false, false) => f64::INFINITY,
                };
                t.record(defect, 1e-10);
            }
        }
    }
    out.push(t.finish());

    let mut t = Tally::new("ricci_consistency");
    for _ in 0..trials {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..=3);
        let c: f64 = rng.random_range(-1.0..=1.0);
        let beta = random_beta_with(n, k, BetaKind::Generic, &mut rng)?;
        let op = bochner_full(&beta, 1, c)?;
        let mut defect: f64 = 0.0;
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            let gauss: f64 = (n as f64 - 1.0) * c
                + beta
                    .operators()
                    .iter()
                    .map(|a| {
                        let m = a.matrix();
                        a.trace() * m[(i, i)] - (m * m)[(i, i)]
                    })
                    .sum::<f64>();
            defect = defect.max((quadratic_form(&op, &e)? - gauss).abs());
        }
        t.record(defect, 1e-9 * beta.norm_sq().max(1.0));
    }
    out.push(t.finish());

    let mut t = Tally::new("phi_homogeneity");
    for _ in 0..trials {
        let n = rng.random_range(3..=8);
        let k = rng.random_range(1..=3);
        let p = rng.random_range(1..=n / 2);
        let beta = random_beta_with(n, k, BetaKind::Generic, &mut rng)?;
        let base = phi_p(&beta, p)?;
        for s in [0.5, 2.0, 10.0] {
            let scaled = phi_p(&beta.scaled(s), p)?;
            t.record((scaled - s * s * base).abs(), 1e-9 * (s * s * beta.norm_sq()).max(1.0));
        }
    }
    out.push(t.finish());

    Ok(out)
}

pub(crate) fn property_suite(cfg: &RunConfig) -> CmdResult {
    let trials = cfg.samples.unwrap_or(200);
    let properties = run_suite(trials, cfg.seed)?;
    let all_passed = properties.iter().all(|p| p.passed);
    let report = SuiteReport {
        header: header(cfg),
        all_passed,
        properties,
    };
    write_output(cfg, &to_json(&report)?)?;
    Ok(if all_passed { EXIT_OK } else { EXIT_FAILURE })
}
