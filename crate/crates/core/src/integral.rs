//! The index set `Λ_p(β)`, Monte-Carlo evaluation of
//! `ψ_p(β) = ∫_{Λ_p(β)} |det β♯(u)| dS_u`, a heuristic search for the constant
//! relating `φ_p` and `ψ_p`, and the integral Betti-number check.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bochner::{sharp_unchecked, SecondFundamentalForm};
use crate::catalog::{random_beta_with, BetaKind};
use crate::error::{Error, Result};
use crate::exterior::Endomorphism;
use crate::pinching::phi_p;

/// Relative threshold below which an eigenvalue counts as negative.
pub const DEFAULT_INDEX_TOL: f64 = 1e-9;

/// Slack in the pointwise `φ_p ≥ ε ψ_p^{2/n}` violation count.
pub const VIOLATION_SLACK: f64 = 1e-8;

const CHUNK: usize = 1024;

/// Number of eigenvalues below `−tol·max(1, ‖A‖)`.
pub fn index_of(a: &Endomorphism, tol: f64) -> Result<usize> {
    Ok(index_from_spectrum(&a.eigenvalues()?, a.norm(), tol))
}

fn index_from_spectrum(eigs: &[f64], norm: f64, tol: f64) -> usize {
    let cut = -tol * norm.max(1.0);
    eigs.iter().filter(|&&v| v < cut).count()
}

fn check_strict_half(n: usize, p: usize) -> Result<()> {
    if p < 1 || 2 * p >= n {
        return Err(Error::domain(format!(
            "need 1 <= p < n/2, got n = {n}, p = {p}"
        )));
    }
    Ok(())
}

/// Whether `p < index(β♯(u)) < n − p`.
pub fn in_lambda_set(beta: &SecondFundamentalForm, p: usize, u: &[f64], tol: f64) -> Result<bool> {
    let n = beta.n();
    check_strict_half(n, p)?;
    let a = crate::bochner::sharp(beta, u)?;
    let idx = index_of(&a, tol)?;
    Ok(p < idx && idx < n - p)
}

/// `|det β♯(u)|` on `Λ_p(β)`, zero elsewhere.
fn psi_integrand(beta: &SecondFundamentalForm, p: usize, u: &[f64], tol: f64) -> Result<(f64, bool)> {
    let n = beta.n();
    let a = sharp_unchecked(beta, u);
    let eigs = a.eigenvalues()?;
    let idx = index_from_spectrum(&eigs, a.norm(), tol);
    if p < idx && idx < n - p {
        Ok((eigs.iter().product::<f64>().abs(), true))
    } else {
        Ok((0.0, false))
    }
}

/// `Vol(S^m)` with `Vol(S^0) = 2` (counting measure).
pub fn sphere_volume(m: usize) -> f64 {
    match m {
        0 => 2.0,
        1 => 2.0 * PI,
        _ => 2.0 * PI / (m as f64 - 1.0) * sphere_volume(m - 2),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    UniformRandom,
    AntipodalPairs,
}

/// Sample points on the unit sphere of the normal space.
///
/// Points are generated in fixed-size chunks, each from its own seeded
/// stream, so estimates do not depend on the number of worker threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SphereSampler {
    pub k: usize,
    pub count: usize,
    pub seed: u64,
    pub method: SamplingMethod,
}

/// Default sample count for a given codimension.
pub fn default_sample_count(k: usize) -> usize {
    if k <= 3 {
        100_000
    } else {
        1_000_000
    }
}

struct Accum {
    sum: f64,
    sum_sq: f64,
    units: usize,
    in_set: usize,
}

impl SphereSampler {
    pub fn new(k: usize, count: usize, seed: u64, method: SamplingMethod) -> Result<Self> {
        if k < 1 {
            return Err(Error::domain("sphere sampler needs k >= 1"));
        }
        if count < 2 {
            return Err(Error::domain(format!("sample count must be at least 2, got {count}")));
        }
        Ok(SphereSampler {
            k,
            count,
            seed,
            method,
        })
    }

    pub fn uniform(k: usize, count: usize, seed: u64) -> Result<Self> {
        Self::new(k, count, seed, SamplingMethod::UniformRandom)
    }

    /// Number of points actually evaluated; the exact two-point set for `k = 1`.
    pub fn total_samples(&self) -> usize {
        match (self.k, self.method) {
            (1, _) => 2,
            (_, SamplingMethod::UniformRandom) => self.count,
            (_, SamplingMethod::AntipodalPairs) => 2 * (self.count / 2),
        }
    }

    fn unit_count(&self) -> usize {
        match self.method {
            SamplingMethod::UniformRandom => self.count,
            SamplingMethod::AntipodalPairs => self.count / 2,
        }
    }

    fn chunk_rng(&self, chunk: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(chunk as u64);
        rng
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        loop {
            let v: Vec<f64> = (0..self.k).map(|_| rng.sample(StandardNormal)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 1e-12 {
                return v.into_iter().map(|x| x / norm).collect();
            }
        }
    }

    /// All sample points in evaluation order.
    pub fn points(&self) -> Vec<Vec<f64>> {
        if self.k == 1 {
            return vec![vec![1.0], vec![-1.0]];
        }
        let units = self.unit_count();
        let mut out = Vec::with_capacity(self.total_samples());
        for chunk in 0..units.div_ceil(CHUNK) {
            let mut rng = self.chunk_rng(chunk);
            for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(units) {
                let u = self.draw(&mut rng);
                if self.method == SamplingMethod::AntipodalPairs {
                    let v: Vec<f64> = u.iter().map(|x| -x).collect();
                    out.push(u);
                    out.push(v);
                } else {
                    out.push(u);
                }
            }
        }
        out
    }

    /// Integrates `f` against `dS_u`. `f` returns the integrand value and
    /// whether the point counts as inside the integration set.
    fn integrate<F>(&self, f: F) -> Result<IntegralEstimate>
    where
        F: Fn(&[f64]) -> Result<(f64, bool)> + Sync,
    {
        let vol = sphere_volume(self.k - 1);
        if self.k == 1 {
            let (a, ia) = f(&[1.0])?;
            let (b, ib) = f(&[-1.0])?;
            return Ok(IntegralEstimate {
                value: a + b,
                std_error: 0.0,
                samples_in_set: ia as usize + ib as usize,
                total_samples: 2,
            });
        }
        let units = self.unit_count();
        let chunks: Vec<Result<Accum>> = (0..units.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut rng = self.chunk_rng(chunk);
                let mut acc = Accum {
                    sum: 0.0,
                    sum_sq: 0.0,
                    units: 0,
                    in_set: 0,
                };
                for _ in chunk * CHUNK..((chunk + 1) * CHUNK).min(units) {
                    let u = self.draw(&mut rng);
                    let (mut v, inside) = f(&u)?;
                    acc.in_set += inside as usize;
                    if self.method == SamplingMethod::AntipodalPairs {
                        let w: Vec<f64> = u.iter().map(|x| -x).collect();
                        let (vw, inside_w) = f(&w)?;
                        acc.in_set += inside_w as usize;
                        v = 0.5 * (v + vw);
                    }
                    acc.sum += v;
                    acc.sum_sq += v * v;
                    acc.units += 1;
                }
                Ok(acc)
            })
            .collect();
        let (mut sum, mut sum_sq, mut count, mut in_set) = (0.0, 0.0, 0usize, 0usize);
        for acc in chunks {
            let acc = acc?;
            sum += acc.sum;
            sum_sq += acc.sum_sq;
            count += acc.units;
            in_set += acc.in_set;
        }
        let m = count as f64;
        let mean = sum / m;
        let var = if count > 1 {
            ((sum_sq - m * mean * mean) / (m - 1.0)).max(0.0)
        } else {
            0.0
        };
        Ok(IntegralEstimate {
            value: vol * mean,
            std_error: vol * (var / m).sqrt(),
            samples_in_set: in_set,
            total_samples: self.total_samples(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegralEstimate {
    pub value: f64,
    pub std_error: f64,
    pub samples_in_set: usize,
    pub total_samples: usize,
}

/// Estimates `ψ_p(β)`; exact for `k = 1`.
pub fn psi_p(
    beta: &SecondFundamentalForm,
    p: usize,
    sampler: &SphereSampler,
    tol: f64,
) -> Result<IntegralEstimate> {
    check_strict_half(beta.n(), p)?;
    if sampler.k != beta.k() {
        return Err(Error::DimensionMismatch {
            expected: beta.k(),
            got: sampler.k,
        });
    }
    sampler.integrate(|u| psi_integrand(beta, p, u, tol))
}

/// `φ_p(β) / ψ_p(β)^{2/n}`, or `None` where `ψ_p(β) = 0`.
pub fn epsilon_ratio(
    beta: &SecondFundamentalForm,
    p: usize,
    sampler: &SphereSampler,
    tol: f64,
) -> Result<Option<f64>> {
    let psi = psi_p(beta, p, sampler, tol)?.value;
    if psi <= 0.0 {
        return Ok(None);
    }
    Ok(Some(phi_p(beta, p)? / psi.powf(2.0 / beta.n() as f64)))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Sphere samples per ψ evaluation (ignored for `k = 1`).
    pub samples: usize,
    pub index_tol: f64,
    pub step_tol: f64,
    pub max_iter: usize,
    /// Random draws per restart while looking for a start with `ψ > 0`.
    pub start_draws: usize,
}

impl EpsilonConfig {
    pub fn new(restarts: usize, seed: u64) -> Self {
        EpsilonConfig {
            restarts,
            seed,
            samples: 4096,
            index_tol: DEFAULT_INDEX_TOL,
            step_tol: 1e-7,
            max_iter: 500,
            start_draws: 64,
        }
    }
}

pub const EPSILON_CAVEAT: &str = "best_value is an UPPER estimate of the optimal constant \
obtained by multistart local search; it is not a certified lower bound";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonEstimate {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub best_value: f64,
    #[serde(skip)]
    pub best_beta: SecondFundamentalForm,
    /// ψ_p of `best_beta` under the search sampler, 1 up to sampling error.
    pub best_psi: IntegralEstimate,
    pub restarts: usize,
    /// Restarts that reached the feasible region.
    pub feasible_restarts: usize,
    pub evaluations: usize,
    pub caveat: String,
}

fn pack(beta: &SecondFundamentalForm) -> Vec<f64> {
    let n = beta.n();
    let mut x = Vec::with_capacity(beta.k() * n * (n + 1) / 2);
    for a in beta.operators() {
        for i in 0..n {
            for j in i..n {
                x.push(a.matrix()[(i, j)]);
            }
        }
    }
    x
}

fn unpack(x: &[f64], n: usize, k: usize) -> Result<SecondFundamentalForm> {
    let per = n * (n + 1) / 2;
    let ops = (0..k)
        .map(|op| {
            let mut m = nalgebra::DMatrix::zeros(n, n);
            let mut it = x[op * per..(op + 1) * per].iter();
            for i in 0..n {
                for j in i..n {
                    let v = *it.next().expect("length checked");
                    m[(i, j)] = v;
                    m[(j, i)] = v;
                }
            }
            Endomorphism::new(m)
        })
        .collect::<Result<Vec<_>>>()?;
    SecondFundamentalForm::new(ops)
}

fn normalize(x: &mut [f64]) {
    // the objective is scale invariant, so any norm on the parameters works
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

struct Search<'a> {
    n: usize,
    k: usize,
    p: usize,
    sampler: &'a SphereSampler,
    tol: f64,
}

impl Search<'_> {
    fn objective(&self, x: &[f64], evals: &mut usize) -> Result<f64> {
        *evals += 1;
        let beta = unpack(x, self.n, self.k)?;
        Ok(epsilon_ratio(&beta, self.p, self.sampler, self.tol)?.unwrap_or(f64::INFINITY))
    }

    /// Central-difference descent with backtracking from `x`.
    fn descend(&self, mut x: Vec<f64>, cfg: &EpsilonConfig, evals: &mut usize) -> Result<(Vec<f64>, f64)> {
        let mut fx = self.objective(&x, evals)?;
        let mut step = 0.1;
        let h = 1e-6;
        for _ in 0..cfg.max_iter {
            let mut grad = vec![0.0; x.len()];
            for i in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[i] += h;
                xm[i] -= h;
                let (fp, fm) = (self.objective(&xp, evals)?, self.objective(&xm, evals)?);
                grad[i] = if fp.is_finite() && fm.is_finite() {
                    (fp - fm) / (2.0 * h)
                } else {
                    0.0
                };
            }
            let gnorm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
            if gnorm == 0.0 || !gnorm.is_finite() {
                break;
            }
            let mut accepted = false;
            while step > cfg.step_tol {
                let mut trial: Vec<f64> = x.iter().zip(&grad).map(|(v, g)| v - step * g / gnorm).collect();
                normalize(&mut trial);
                let ft = self.objective(&trial, evals)?;
                if ft < fx {
                    x = trial;
                    fx = ft;
                    accepted = true;
                    step = (2.0 * step).min(1.0);
                    break;
                }
                step *= 0.5;
            }
            if !accepted {
                break;
            }
        }
        Ok((x, fx))
    }
}

/// Multistart local minimization of `φ_p/ψ_p^{2/n}` with default settings.
pub fn epsilon_search(n: usize, k: usize, p: usize, restarts: usize, seed: u64) -> Result<EpsilonEstimate> {
    epsilon_search_with(n, k, p, &EpsilonConfig::new(restarts, seed))
}

pub fn epsilon_search_with(n: usize, k: usize, p: usize, cfg: &EpsilonConfig) -> Result<EpsilonEstimate> {
    check_strict_half(n, p)?;
    if k < 1 {
        return Err(Error::domain("codimension k must be at least 1"));
    }
    if cfg.restarts < 1 {
        return Err(Error::domain("epsilon search needs at least one restart"));
    }
    // separate seed space for the sphere sampler (common random numbers)
    let sampler = SphereSampler::uniform(k, cfg.samples.max(2), cfg.seed ^ 0x9E37_79B9_7F4A_7C15)?;
    let search = Search {
        n,
        k,
        p,
        sampler: &sampler,
        tol: cfg.index_tol,
    };

    let runs: Vec<Result<(Option<(Vec<f64>, f64)>, usize)>> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(r as u64 + 1);
            let mut evals = 0;
            for _ in 0..cfg.start_draws {
                let beta = random_beta_with(n, k, BetaKind::Generic, &mut rng)?;
                let mut x = pack(&beta);
                normalize(&mut x);
                if search.objective(&x, &mut evals)?.is_finite() {
                    let best = search.descend(x, cfg, &mut evals)?;
                    return Ok((Some(best), evals));
                }
            }
            Ok((None, evals))
        })
        .collect();

    let mut best: Option<(Vec<f64>, f64)> = None;
    let (mut feasible, mut evaluations) = (0, 0);
    for run in runs {
        let (found, evals) = run?;
        evaluations += evals;
        if let Some((x, fx)) = found {
            feasible += 1;
            if best.as_ref().is_none_or(|(_, b)| fx < *b) {
                best = Some((x, fx));
            }
        }
    }
    let Some((x, value)) = best else {
        return Err(Error::SearchFailed(format!(
            "all {} restarts stayed in the region psi_p = 0 for (n, k, p) = ({n}, {k}, {p}); \
             try more restarts (the set may be empty when n - 2p < 2)",
            cfg.restarts
        )));
    };
    let beta = unpack(&x, n, k)?;
    let psi = psi_p(&beta, p, &sampler, cfg.index_tol)?.value;
    let best_beta = beta.scaled(psi.powf(-1.0 / n as f64));
    let best_psi = psi_p(&best_beta, p, &sampler, cfg.index_tol)?;
    Ok(EpsilonEstimate {
        n,
        k,
        p,
        best_value: value,
        best_beta,
        best_psi,
        restarts: cfg.restarts,
        feasible_restarts: feasible,
        evaluations,
        caveat: EPSILON_CAVEAT.to_string(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PointIntegrand {
    pub weight: f64,
    pub phi_p: f64,
    pub psi_p: f64,
    pub psi_std_error: f64,
    pub violates: bool,
}

pub const BETTI_BOUND_LABEL: &str = "heuristic (epsilon estimated)";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BettiReport {
    pub n: usize,
    pub k: usize,
    pub p: usize,
    pub eps_hat: f64,
    /// `Σ w |φ_p|^{n/2}`.
    pub lhs: f64,
    /// `Σ w ψ_p`.
    pub r_unit: f64,
    /// Bound on `Σ_{p<i<n−p} b_i`; `None` when `eps_hat = 0`.
    pub betti_sum_bound: Option<f64>,
    pub bound_label: String,
    pub violations: usize,
    pub points: Vec<PointIntegrand>,
}

/// Evaluates the integral inequality on weighted sample points.
pub fn betti_integral_check(
    points: &[(f64, SecondFundamentalForm)],
    p: usize,
    eps_hat: f64,
    sampler: &SphereSampler,
    tol: f64,
) -> Result<BettiReport> {
    let Some((_, first)) = points.first() else {
        return Err(Error::domain("betti check needs at least one point"));
    };
    let (n, k) = (first.n(), first.k());
    check_strict_half(n, p)?;
    if !(eps_hat >= 0.0) || !eps_hat.is_finite() {
        return Err(Error::domain(format!("eps_hat must be finite and nonnegative, got {eps_hat}")));
    }
    for (i, (w, beta)) in points.iter().enumerate() {
        if !(*w > 0.0) {
            return Err(Error::domain(format!("weight of point {i} must be positive, got {w}")));
        }
        if beta.n() != n || beta.k() != k {
            return Err(Error::domain(format!(
                "point {i} has (n, k) = ({}, {}), expected ({n}, {k})",
                beta.n(),
                beta.k()
            )));
        }
    }
    let nf = n as f64;
    let evaluated = points
        .par_iter()
        .map(|(w, beta)| {
            let phi = phi_p(beta, p)?;
            let psi = psi_p(beta, p, sampler, tol)?;
            let violates = phi < eps_hat * psi.value.powf(2.0 / nf) - VIOLATION_SLACK;
            Ok(PointIntegrand {
                weight: *w,
                phi_p: phi,
                psi_p: psi.value,
                psi_std_error: psi.std_error,
                violates,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let lhs = evaluated.iter().map(|e| e.weight * e.phi_p.abs().powf(nf / 2.0)).sum();
    let r_unit = evaluated.iter().map(|e| e.weight * e.psi_p).sum();
    let betti_sum_bound = (eps_hat > 0.0)
        .then(|| lhs / (eps_hat.powf(nf / 2.0) * sphere_volume(n + k - 1)));
    Ok(BettiReport {
        n,
        k,
        p,
        eps_hat,
        lhs,
        r_unit,
        betti_sum_bound,
        bound_label: BETTI_BOUND_LABEL.to_string(),
        violations: evaluated.iter().filter(|e| e.violates).count(),
        points: evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::random_beta;

    fn diag(d: &[f64]) -> Endomorphism {
        Endomorphism::from_diagonal(d).unwrap()
    }

    fn hyper(d: &[f64]) -> SecondFundamentalForm {
        SecondFundamentalForm::hypersurface(diag(d)).unwrap()
    }

    #[test]
    fn index_examples() {
        assert_eq!(index_of(&diag(&[1.0, 1.0, 1.0]), 1e-9).unwrap(), 0);
        assert_eq!(index_of(&diag(&[3.0, -1.0, -1.0, -1.0]), 1e-9).unwrap(), 3);
        assert_eq!(index_of(&diag(&[1e-15, -1.0]), 1e-6).unwrap(), 1);
        assert_eq!(index_of(&diag(&[-1e-15, -1.0]), 1e-6).unwrap(), 1);
    }

    #[test]
    fn lambda_set_examples() {
        let b = hyper(&[1.0, 1.0, -1.0, -1.0]);
        assert!(in_lambda_set(&b, 1, &[1.0], 1e-9).unwrap());
        let b = hyper(&[1.0, 1.0, 1.0, -1.0]);
        assert!(!in_lambda_set(&b, 1, &[1.0], 1e-9).unwrap());
        let z = SecondFundamentalForm::zero(5, 2).unwrap();
        assert!(!in_lambda_set(&z, 1, &[0.6, 0.8], 1e-9).unwrap());
        let z4 = SecondFundamentalForm::zero(4, 2).unwrap();
        assert!(in_lambda_set(&z4, 2, &[0.6, 0.8], 1e-9).is_err());
    }

    #[test]
    fn sphere_volumes() {
        assert_eq!(sphere_volume(0), 2.0);
        assert!((sphere_volume(1) - 2.0 * PI).abs() < 1e-15);
        assert!((sphere_volume(2) - 4.0 * PI).abs() < 1e-13);
        assert!((sphere_volume(3) - 2.0 * PI * PI).abs() < 1e-13);
        assert!((sphere_volume(4) - 8.0 * PI * PI / 3.0).abs() < 1e-12);
    }

    #[test]
    fn psi_examples() {
        let s = SphereSampler::uniform(1, 2, 0).unwrap();
        let e = psi_p(&hyper(&[1.0, 1.0, -1.0, -1.0]), 1, &s, 1e-9).unwrap();
        assert_eq!((e.value, e.std_error, e.samples_in_set), (2.0, 0.0, 2));
        let e = psi_p(&hyper(&[3.0, -1.0, -1.0, -1.0]), 1, &s, 1e-9).unwrap();
        assert_eq!(e.value, 0.0);
        let s3 = SphereSampler::uniform(3, 5000, 1).unwrap();
        let e = psi_p(&SecondFundamentalForm::zero(6, 3).unwrap(), 2, &s3, 1e-9).unwrap();
        assert_eq!((e.value, e.samples_in_set, e.total_samples), (0.0, 0, 5000));
    }

    #[test]
    fn sampler_validation() {
        assert!(SphereSampler::uniform(2, 1, 0).is_err());
        assert!(SphereSampler::uniform(0, 10, 0).is_err());
        let s = SphereSampler::uniform(1, 1000, 5).unwrap();
        assert_eq!(s.points(), vec![vec![1.0], vec![-1.0]]);
        let s = SphereSampler::new(3, 11, 5, SamplingMethod::AntipodalPairs).unwrap();
        let pts = s.points();
        assert_eq!(pts.len(), 10);
        for pair in pts.chunks(2) {
            assert!(pair[0].iter().zip(&pair[1]).all(|(a, b)| a == &-b));
        }
        let s = SphereSampler::uniform(4, 3000, 5).unwrap();
        assert!(s
            .points()
            .iter()
            .all(|u| (u.iter().map(|x| x * x).sum::<f64>() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn constant_integrand_gives_sphere_volume() {
        let s = SphereSampler::uniform(3, 4000, 2).unwrap();
        let e = s.integrate(|_| Ok((1.0, true))).unwrap();
        assert!((e.value - sphere_volume(2)).abs() < 1e-12);
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn psi_is_thread_count_independent() {
        let beta = random_beta(6, 2, BetaKind::Generic, 11).unwrap();
        let s = SphereSampler::uniform(2, 5000, 3).unwrap();
        let a = psi_p(&beta, 2, &s, 1e-9).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| psi_p(&beta, 2, &s, 1e-9).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn epsilon_ratio_is_scale_invariant() {
        let s = SphereSampler::uniform(1, 2, 0).unwrap();
        let beta = hyper(&[2.0, 1.0, -1.0, -3.0]);
        let g1 = epsilon_ratio(&beta, 1, &s, 1e-9).unwrap().unwrap();
        let g2 = epsilon_ratio(&beta.scaled(2.0), 1, &s, 1e-9).unwrap().unwrap();
        assert!((g1 - g2).abs() <= 1e-8 * g1.abs());
        assert!(epsilon_ratio(&hyper(&[1.0, 1.0, 1.0, 1.0]), 1, &s, 1e-9).unwrap().is_none());
    }

    #[test]
    fn epsilon_search_small_case() {
        let est = epsilon_search(4, 1, 1, 3, 7).unwrap();
        assert!(est.best_value > 0.0);
        assert!((est.best_psi.value - 1.0).abs() < 1e-9);
        let again = epsilon_search(4, 1, 1, 3, 7).unwrap();
        assert_eq!(est.best_value.to_bits(), again.best_value.to_bits());
        assert_eq!(est.best_beta, again.best_beta);
    }

    #[test]
    fn epsilon_search_fails_on_empty_index_set() {
        let err = epsilon_search(5, 1, 2, 2, 0).unwrap_err();
        assert!(matches!(err, Error::SearchFailed(_)));
        assert!(epsilon_search(4, 1, 1, 0, 0).is_err());
    }

    #[test]
    fn betti_check_umbilical_points() {
        let s = SphereSampler::uniform(1, 2, 0).unwrap();
        let pts: Vec<_> = (1..4)
            .map(|i| (1.0, hyper(&[i as f64; 5])))
            .collect();
        let rep = betti_integral_check(&pts, 1, 0.3, &s, 1e-9).unwrap();
        assert_eq!(rep.r_unit, 0.0);
        assert_eq!(rep.violations, 0);
        assert!(rep.lhs >= 0.0);
    }

    #[test]
    fn betti_check_equality_point() {
        let s = SphereSampler::uniform(1, 2, 0).unwrap();
        let pts = vec![(2.0, hyper(&[3.0, -1.0, -1.0, -1.0]))];
        let rep = betti_integral_check(&pts, 1, 1.0, &s, 1e-9).unwrap();
        assert!(rep.points[0].phi_p.abs() < 1e-10);
        assert_eq!(rep.points[0].psi_p, 0.0);
        assert_eq!(rep.violations, 0);
    }

    #[test]
    fn betti_check_validation() {
        let s = SphereSampler::uniform(1, 2, 0).unwrap();
        let mixed = vec![(1.0, hyper(&[1.0; 4])), (1.0, hyper(&[1.0; 5]))];
        assert!(betti_integral_check(&mixed, 1, 1.0, &s, 1e-9).is_err());
        let neg = vec![(-1.0, hyper(&[1.0; 4]))];
        assert!(betti_integral_check(&neg, 1, 1.0, &s, 1e-9).is_err());
        assert!(betti_integral_check(&[], 1, 1.0, &s, 1e-9).is_err());
    }
}
