//! Pinching constants, the sharp lower bounds for `T_A^[p]` and `B^[p](β)`,
//! the gap function `φ_p` and equality-case certificates.
//!
//! Conventions: `n` is the tangent dimension, `1 <= p <= n/2`, `H >= 0` is the
//! length of the mean curvature vector and `c` a lower bound for the ambient
//! curvature operator.

use serde::Serialize;

use crate::bochner::{mean_data, rho_ext, sharp_unchecked, SecondFundamentalForm};
use crate::error::{Error, Result};
use crate::exterior::Endomorphism;

/// Default gap rule for eigenvalue clustering.
pub const DEFAULT_CLUSTER_TOL: f64 = 1e-6;

/// Relative threshold declaring equality in the sharp Bochner bound.
pub const EQUALITY_TOL: f64 = 1e-8;

fn check_pair(n: usize, p: usize) -> Result<()> {
    if n < 2 || p < 1 || 2 * p > n {
        return Err(Error::domain(format!(
            "need 1 <= p <= n/2, got n = {n}, p = {p}"
        )));
    }
    Ok(())
}

/// `n(n−2p)/√(np(n−p))`, the linear coefficient of the pinching polynomial
/// per unit of `H`.
fn cross_coefficient(n: usize, p: usize) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    nf * (nf - 2.0 * pf) / (nf * pf * (nf - pf)).sqrt()
}

/// The pinching threshold
/// `a(n,p,t,c) = nc + n³t²/(2p(n−p)) − n|n−2p|t/(2p(n−p)) · √(n²t² + 4p(n−p)c)`.
pub fn a_const(n: usize, p: usize, t: f64, c: f64) -> Result<f64> {
    check_pair(n, p)?;
    if t < 0.0 {
        return Err(Error::domain(format!("a(n,p,t,c) needs t >= 0, got {t}")));
    }
    let (nf, pf) = (n as f64, p as f64);
    let q = pf * (nf - pf);
    let mut radicand = nf * nf * t * t + 4.0 * q * c;
    if radicand < 0.0 {
        if radicand >= -1e-12 * (nf * nf * t * t).max(1.0) {
            radicand = 0.0;
        } else {
            return Err(Error::domain(format!(
                "a(n,p,t,c) undefined: n²t² + 4p(n−p)c = {radicand} < 0"
            )));
        }
    }
    Ok(nf * c + nf.powi(3) * t * t / (2.0 * q)
        - nf * (nf - 2.0 * pf).abs() * t / (2.0 * q) * radicand.sqrt())
}

/// `P(t; p, H, c) = t² + n(n−2p)/√(np(n−p)) · H t − n(H² + c)`.
pub fn pinch_poly(t: f64, p: usize, h: f64, c: f64, n: usize) -> Result<f64> {
    check_pair(n, p)?;
    let nf = n as f64;
    Ok(t * t + cross_coefficient(n, p) * h * t - nf * (h * h + c))
}

/// Largest root `r(n,p,H,c)` of `P(·; p, H, c)`.
pub fn largest_root(n: usize, p: usize, h: f64, c: f64) -> Result<f64> {
    check_pair(n, p)?;
    if h < 0.0 {
        return Err(Error::domain(format!("H must be nonnegative, got {h}")));
    }
    let free = h * h + c;
    if free < 0.0 {
        return Err(Error::domain(format!("r(n,p,H,c) needs H² + c >= 0, got {free}")));
    }
    let nf = n as f64;
    let b = cross_coefficient(n, p) * h;
    let disc = (b * b + 4.0 * nf * free).sqrt();
    if b > 0.0 {
        // 2n(H²+c) / (b + √(b² + 4n(H²+c))), free of cancellation
        Ok(2.0 * nf * free / (b + disc))
    } else {
        Ok(0.5 * disc)
    }
}

/// `F_{n,p}(x, y) = p(n−p)/n · (n x² − n(n−2p)/√(np(n−p)) · x y − y²)`, for
/// `1 <= p < n/2`.
pub fn f_np(n: usize, p: usize, x: f64, y: f64) -> Result<f64> {
    if 2 * p >= n {
        return Err(Error::domain(format!(
            "F_(n,p) is defined for 1 <= p < n/2, got n = {n}, p = {p}"
        )));
    }
    check_pair(n, p)?;
    Ok(bound_form(n, p, x, y))
}

pub(crate) fn bound_form(n: usize, p: usize, x: f64, y: f64) -> f64 {
    let (nf, pf) = (n as f64, p as f64);
    pf * (nf - pf) / nf * (nf * x * x - cross_coefficient(n, p) * x * y - y * y)
}

/// Right-hand side of the sharp bound on the lowest eigenvalue of `T_A^[p]`
/// for `tr A >= 0`:
/// `¼(tr A)² − ¼((n−2p)/n · tr A + √(4p(n−p)/n) · ‖Å‖)²`.
pub fn lemma1_bound(a: &Endomorphism, p: usize) -> Result<f64> {
    let n = a.dim();
    check_pair(n, p)?;
    let tr = a.trace();
    if tr < -1e-12 {
        return Err(Error::domain(format!(
            "bound requires tr A >= 0 (got {tr}); negate A first, T_A = T_(-A)"
        )));
    }
    let tr = tr.max(0.0);
    let (nf, pf) = (n as f64, p as f64);
    let inner = (nf - 2.0 * pf) / nf * tr
        + (4.0 * pf * (nf - pf) / nf).sqrt() * a.traceless().norm();
    Ok(0.25 * tr * tr - 0.25 * inner * inner)
}

/// Right-hand side of the sharp bound on `ϱ_p(β)`:
/// `p(n−p)/n · (n‖𝖧_β‖² − n(n−2p)/√(np(n−p)) ‖𝖧_β‖‖β̊‖ − ‖β̊‖²)`.
pub fn prop2_bound(beta: &SecondFundamentalForm, p: usize) -> Result<f64> {
    check_pair(beta.n(), p)?;
    let m = mean_data(beta);
    Ok(bound_form(beta.n(), p, m.norm, m.traceless_norm))
}

/// `φ_p(β) = ϱ_p^ext(β) − prop2_bound(β, p)`; nonnegative, homogeneous of
/// degree 2.
pub fn phi_p(beta: &SecondFundamentalForm, p: usize) -> Result<f64> {
    Ok(rho_ext(beta, p)? - prop2_bound(beta, p)?)
}

/// Scale-aware equality threshold `EQUALITY_TOL · max(1, ‖β‖²)`.
pub fn equality_threshold(beta: &SecondFundamentalForm) -> f64 {
    EQUALITY_TOL * beta.norm_sq().max(1.0)
}

/// Scalar pinching data at a point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PinchingConstants {
    pub n: usize,
    pub p: usize,
    pub c: f64,
    pub h: f64,
}

impl PinchingConstants {
    pub fn new(n: usize, p: usize, c: f64, h: f64) -> Result<Self> {
        check_pair(n, p)?;
        if h < 0.0 || !h.is_finite() {
            return Err(Error::domain(format!("H must be finite and nonnegative, got {h}")));
        }
        Ok(PinchingConstants { n, p, c, h })
    }

    pub fn a(&self) -> Result<f64> {
        a_const(self.n, self.p, self.h, self.c)
    }

    pub fn r(&self) -> Result<f64> {
        largest_root(self.n, self.p, self.h, self.c)
    }

    pub fn poly(&self, t: f64) -> f64 {
        pinch_poly(t, self.p, self.h, self.c, self.n).expect("validated in new")
    }

    /// Right-hand side of the sharp submanifold bound,
    /// `p(n−p)/n · (n(H²+c) − …·H‖Φ‖ − ‖Φ‖²) = −p(n−p)/n · P(‖Φ‖)`.
    pub fn bochner_lower_bound(&self, traceless_norm: f64) -> f64 {
        let (nf, pf) = (self.n as f64, self.p as f64);
        -pf * (nf - pf) / nf * self.poly(traceless_norm)
    }
}

/// One eigenvalue cluster.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cluster {
    pub value: f64,
    pub multiplicity: usize,
}

/// Groups a sorted spectrum: a new cluster starts when consecutive values
/// differ by more than `gap`.
pub fn cluster_spectrum(sorted: &[f64], gap: f64) -> Vec<Cluster> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    let mut last = f64::NEG_INFINITY;
    for &v in sorted {
        match out.last_mut() {
            Some((sum, count)) if v - last <= gap => {
                *sum += v;
                *count += 1;
            }
            _ => out.push((v, 1)),
        }
        last = v;
    }
    out.into_iter()
        .map(|(sum, count)| Cluster {
            value: sum / count as f64,
            multiplicity: count,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DirectionReport {
    pub label: String,
    pub direction: Vec<f64>,
    pub clusters: Vec<Cluster>,
    /// Cluster multiplicities are exactly `{p, n−p}`.
    pub matches_pair: bool,
    /// `β♯(u)` vanishes within tolerance.
    pub vanishes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOneCheck {
    Holds,
    Fails,
    NotApplicable,
}

/// Structural evidence for the equality case of the sharp Bochner bound.
///
/// Only finitely many normal directions are inspected, so this is a partial
/// check of a statement about every unit normal.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EqualityCertificate {
    pub phi_p: f64,
    pub equality_detected: bool,
    pub direction_reports: Vec<DirectionReport>,
    pub rank_one_normal: RankOneCheck,
    /// `Some((p, n−p))` when every sampled direction is either zero or splits
    /// into exactly those multiplicities.
    pub multiplicity_pair: Option<(usize, usize)>,
    /// `λμ + c` from the two cluster means, hypersurfaces only.
    pub product_check: Option<f64>,
    pub partial: bool,
}

fn pair_matches(clusters: &[Cluster], n: usize, p: usize) -> bool {
    match clusters {
        [a, b] => {
            let (x, y) = (a.multiplicity, b.multiplicity);
            (x == p && y == n - p) || (x == n - p && y == p)
        }
        _ => false,
    }
}

/// Inspects β for the equality structure of the sharp Bochner bound.
pub fn classify_equality(
    beta: &SecondFundamentalForm,
    p: usize,
    c: f64,
    tol: f64,
) -> Result<EqualityCertificate> {
    let n = beta.n();
    check_pair(n, p)?;
    if !(tol > 0.0) {
        return Err(Error::domain(format!("tolerance must be positive, got {tol}")));
    }
    let k = beta.k();
    let mean = mean_data(beta);
    let phi = phi_p(beta, p)?;

    let mut directions: Vec<(String, Vec<f64>)> = (0..k)
        .map(|i| {
            let mut u = vec![0.0; k];
            u[i] = 1.0;
            (format!("xi_{}", i + 1), u)
        })
        .collect();
    let u_h: Option<Vec<f64>> = (mean.norm > 0.0)
        .then(|| mean.vector.iter().map(|x| x / mean.norm).collect());
    if let Some(u) = &u_h {
        directions.push(("mean_curvature".to_string(), u.clone()));
    }

    let mut reports = Vec::with_capacity(directions.len());
    for (label, u) in directions {
        let a = sharp_unchecked(beta, &u);
        let gap = tol * a.norm().max(1.0);
        let clusters = cluster_spectrum(&a.eigenvalues()?, gap);
        let vanishes = a.norm() <= tol * beta.norm().max(1.0);
        reports.push(DirectionReport {
            label,
            direction: u,
            matches_pair: pair_matches(&clusters, n, p),
            clusters,
            vanishes,
        });
    }

    let all_pairs = reports.iter().all(|r| r.matches_pair || r.vanishes)
        && reports.iter().any(|r| r.matches_pair);
    let multiplicity_pair = all_pairs.then_some((p, n - p));

    let rank_one_normal = match &u_h {
        None => RankOneCheck::NotApplicable,
        Some(u) => {
            let along = sharp_unchecked(beta, u);
            let worst = beta
                .operators()
                .iter()
                .zip(u)
                .map(|(a, &ui)| (a.matrix() - along.matrix() * ui).norm())
                .fold(0.0, f64::max);
            if worst <= tol * beta.norm() {
                RankOneCheck::Holds
            } else {
                RankOneCheck::Fails
            }
        }
    };

    let product_check = if k == 1 {
        match reports[0].clusters.as_slice() {
            [a, b] => Some(a.value * b.value + c),
            _ => None,
        }
    } else {
        None
    };

    Ok(EqualityCertificate {
        phi_p: phi,
        equality_detected: phi.abs() <= equality_threshold(beta),
        direction_reports: reports,
        rank_one_normal,
        multiplicity_pair,
        product_check,
        partial: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bochner::{lowest_eigenvalue, t_operator};

    fn diag(d: &[f64]) -> Endomorphism {
        Endomorphism::from_diagonal(d).unwrap()
    }

    fn hyper(d: &[f64]) -> SecondFundamentalForm {
        SecondFundamentalForm::hypersurface(diag(d)).unwrap()
    }

    #[test]
    fn a_const_examples() {
        for n in 3..=10 {
            for p in 1..=n / 2 {
                assert!((a_const(n, p, 0.0, 1.0).unwrap() - n as f64).abs() < 1e-12);
            }
        }
        // p = n/2: correction term vanishes
        let (n, t, c) = (6usize, 0.7, -0.2);
        let nf = n as f64;
        let want = nf * c + nf.powi(3) * t * t / (2.0 * (nf / 2.0).powi(2));
        assert!((a_const(n, 3, t, c).unwrap() - want).abs() < 1e-12);
        assert!((a_const(3, 1, 1.0 / 3.0, 1.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn a_const_rejects_negative_radicand() {
        let err = a_const(4, 1, 0.1, -1.0).unwrap_err();
        assert!(err.to_string().contains("n²t²"));
        assert!(a_const(4, 3, 0.0, 1.0).is_err());
    }

    #[test]
    fn pinch_poly_examples() {
        for n in 3..=9 {
            let v = pinch_poly((n as f64).sqrt(), 1, 0.0, 1.0, n).unwrap();
            assert!(v.abs() < 1e-12);
        }
        assert_eq!(pinch_poly(0.0, 2, 0.5, 1.0, 5).unwrap(), -5.0 * 1.25);
        let r = largest_root(7, 2, 0.8, -0.3).unwrap();
        assert!(pinch_poly(r, 2, 0.8, -0.3, 7).unwrap().abs() < 1e-10);
    }

    #[test]
    fn largest_root_examples() {
        for n in 3..=9 {
            let r = largest_root(n, 1, 0.0, 1.0).unwrap();
            assert!((r - (n as f64).sqrt()).abs() < 1e-12);
        }
        let r = largest_root(8, 4, 0.6, 0.5).unwrap();
        assert!((r - (8.0f64 * (0.36 + 0.5)).sqrt()).abs() < 1e-12);

        let r = largest_root(3, 1, 1.0 / 3.0, 1.0).unwrap();
        assert!((r - (8.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((r * r + 3.0 / 9.0 - 3.0).abs() < 1e-12);

        assert!(largest_root(4, 1, 0.5, -1.0).is_err());
        assert_eq!(largest_root(4, 1, 1.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn largest_root_is_stable_for_large_h() {
        // compare against the quadratic solved in the textbook form at a
        // moderate H where both are accurate, then push H
        let (n, p, c) = (9usize, 1usize, 1.0);
        let h = 1e6;
        let r = largest_root(n, p, h, c).unwrap();
        assert!(r > 0.0);
        let poly = pinch_poly(r, p, h, c, n).unwrap();
        assert!(poly.abs() <= 1e-9 * (n as f64) * (h * h + c));
    }

    #[test]
    fn f_np_examples() {
        assert!((f_np(5, 2, 1.3, 0.0).unwrap() - 6.0 * 1.69).abs() < 1e-12);
        assert!((f_np(5, 2, 0.0, 2.0).unwrap() + 6.0 / 5.0 * 4.0).abs() < 1e-12);
        let want = -(3.0 / 4.0) * (16.0 / 12f64.sqrt());
        assert!((f_np(4, 1, 1.0, 2.0).unwrap() - want).abs() < 1e-12);
        assert!(f_np(4, 2, 1.0, 1.0).is_err());
    }

    #[test]
    fn f_np_is_negative_scaled_poly_at_c_zero() {
        let (n, p, x, y) = (7usize, 2usize, 0.9, 1.7);
        let scale = (p * (n - p)) as f64 / n as f64;
        let via_poly = -scale * pinch_poly(y, p, x, 0.0, n).unwrap();
        assert!((f_np(n, p, x, y).unwrap() - via_poly).abs() < 1e-12);
    }

    #[test]
    fn lemma1_examples() {
        let id = Endomorphism::identity(3);
        let b = lemma1_bound(&id, 1).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
        let t = lowest_eigenvalue(&t_operator(&id, 1).unwrap()).unwrap();
        assert!((t - b).abs() < 1e-12);

        assert_eq!(lemma1_bound(&Endomorphism::zeros(4), 2).unwrap(), 0.0);

        let cone = diag(&[3.0, -1.0, -1.0, -1.0]);
        assert!((lemma1_bound(&cone, 1).unwrap() + 9.0).abs() < 1e-12);
        assert!(lemma1_bound(&diag(&[-3.0, 1.0, 1.0, 0.5]), 1).is_err());
    }

    #[test]
    fn prop2_examples() {
        assert_eq!(prop2_bound(&SecondFundamentalForm::zero(4, 2).unwrap(), 1).unwrap(), 0.0);
        let sphere = SecondFundamentalForm::hypersurface(Endomorphism::identity(3)).unwrap();
        assert!((prop2_bound(&sphere, 1).unwrap() - 2.0).abs() < 1e-12);
        assert!((prop2_bound(&hyper(&[3.0, -1.0, -1.0, -1.0]), 1).unwrap() + 9.0).abs() < 1e-12);
    }

    #[test]
    fn phi_examples() {
        assert_eq!(phi_p(&SecondFundamentalForm::zero(5, 2).unwrap(), 2).unwrap(), 0.0);
        assert!(phi_p(&hyper(&[3.0, -1.0, -1.0, -1.0]), 1).unwrap().abs() < 1e-10);

        let beta = SecondFundamentalForm::new(vec![
            Endomorphism::identity(4),
            diag(&[1.0, -1.0, 0.0, 0.0]),
        ])
        .unwrap();
        // ϱ = 2 (diag(2,2,3,3)); H = 1, ‖β̊‖ = √2
        let bound = 0.75 * (4.0 - 8.0 / 12f64.sqrt() * 2f64.sqrt() - 2.0);
        let phi = phi_p(&beta, 1).unwrap();
        assert!((phi - (2.0 - bound)).abs() < 1e-10);
        assert!(phi > 0.0);
    }

    #[test]
    fn two_cluster_equality_family() {
        // Equality iff the eigenvalues have opposite signs and the
        // multiplicity-(n−p) cluster dominates the trace, or p = n/2.
        for (n, p, lam, mu) in [
            (4usize, 1usize, 1.0, -0.4),
            (4, 1, 3.0, -1.0),
            (5, 2, 1.0, -2.0),
            (6, 2, -1.0, 2.0),
            (6, 3, 2.0, 1.0),
            (8, 4, -0.3, 1.7),
        ] {
            let mut d = vec![lam; p];
            d.extend(vec![mu; n - p]);
            let mut a = diag(&d);
            if a.trace() < 0.0 {
                a = a.negated();
            }
            let t = lowest_eigenvalue(&t_operator(&a, p).unwrap()).unwrap();
            let b = lemma1_bound(&a, p).unwrap();
            assert!((t - b).abs() < 1e-9, "n={n} p={p} λ={lam} μ={mu}: {t} vs {b}");
        }
    }

    #[test]
    fn two_cluster_outside_family_is_strict() {
        for (n, p, lam, mu) in [(3usize, 1usize, 2.0, 1.0), (3, 1, 1.0, 0.5), (4, 1, 1.0, -0.1)] {
            let mut d = vec![lam; p];
            d.extend(vec![mu; n - p]);
            let a = diag(&d);
            let t = lowest_eigenvalue(&t_operator(&a, p).unwrap()).unwrap();
            assert!(t - lemma1_bound(&a, p).unwrap() > 1e-3);
        }
    }

    #[test]
    fn degenerate_equality_collapse() {
        // μ = 0 with multiplicity n − p > p: strict gap unless A = 0
        for (n, p) in [(3usize, 1usize), (5, 2), (7, 3)] {
            let mut d = vec![1.5; p];
            d.extend(vec![0.0; n - p]);
            let a = diag(&d);
            let t = lowest_eigenvalue(&t_operator(&a, p).unwrap()).unwrap();
            assert!(t - lemma1_bound(&a, p).unwrap() > 1e-6);
        }
    }

    #[test]
    fn clustering() {
        let c = cluster_spectrum(&[-1.0, -1.0 + 1e-9, 2.0, 2.0, 2.0], 1e-6);
        assert_eq!(c.len(), 2);
        assert_eq!((c[0].multiplicity, c[1].multiplicity), (2, 3));
        assert!(cluster_spectrum(&[], 1.0).is_empty());
    }

    #[test]
    fn certificate_for_clifford_hypersurface() {
        let beta = hyper(&[1.0, 1.0, -1.0, -1.0]);
        let cert = classify_equality(&beta, 2, 1.0, DEFAULT_CLUSTER_TOL).unwrap();
        let clusters = &cert.direction_reports[0].clusters;
        assert_eq!(clusters.len(), 2);
        assert_eq!((clusters[0].value, clusters[0].multiplicity), (-1.0, 2));
        assert_eq!((clusters[1].value, clusters[1].multiplicity), (1.0, 2));
        assert_eq!(cert.multiplicity_pair, Some((2, 2)));
        assert_eq!(cert.product_check, Some(0.0));
        assert_eq!(cert.rank_one_normal, RankOneCheck::NotApplicable);
        assert!(cert.equality_detected);
    }

    #[test]
    fn certificate_for_traceless_cone() {
        let beta = hyper(&[3.0, -1.0, -1.0, -1.0]);
        let cert = classify_equality(&beta, 1, 0.0, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cert.multiplicity_pair, Some((1, 3)));
        assert!((cert.product_check.unwrap() + 3.0).abs() < 1e-12);
        assert!(cert.equality_detected);
    }

    #[test]
    fn certificate_rank_one_normal() {
        let beta = SecondFundamentalForm::new(vec![
            diag(&[3.0, 3.0, -1.0, -1.0, -1.0]),
            Endomorphism::zeros(5),
        ])
        .unwrap();
        let cert = classify_equality(&beta, 2, 0.0, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cert.rank_one_normal, RankOneCheck::Holds);
        assert_eq!(cert.multiplicity_pair, Some((2, 3)));
        assert_eq!(cert.direction_reports.len(), 3);
        assert!(cert.direction_reports[1].vanishes);
        assert!(cert.product_check.is_none());

        let spread = SecondFundamentalForm::new(vec![
            diag(&[3.0, 3.0, -1.0, -1.0, -1.0]),
            diag(&[1.0, -1.0, 0.0, 0.0, 0.0]),
        ])
        .unwrap();
        let cert = classify_equality(&spread, 2, 0.0, DEFAULT_CLUSTER_TOL).unwrap();
        assert_eq!(cert.rank_one_normal, RankOneCheck::Fails);
        assert_eq!(cert.multiplicity_pair, None);
    }

    #[test]
    fn constants_struct_agrees_with_free_functions() {
        let k = PinchingConstants::new(6, 2, 1.0, 0.4).unwrap();
        let r = k.r().unwrap();
        assert!((k.a().unwrap() - (r * r + 6.0 * 0.16)).abs() < 1e-10);
        assert!(k.bochner_lower_bound(r).abs() < 1e-10);
        assert!(PinchingConstants::new(6, 4, 1.0, 0.4).is_err());
    }
}
