//! Model second fundamental forms: Clifford tori, scalar data of known
//! minimal examples, and seeded random generators.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::bochner::SecondFundamentalForm;
use crate::error::{Error, Result};
use crate::exterior::Endomorphism;

/// `T^n_p(r) = S^p(r) × S^{n−p}(√(1−r²))` as a hypersurface of the unit sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TorusModel {
    pub n: usize,
    pub p: usize,
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    #[serde(skip)]
    pub beta: SecondFundamentalForm,
    pub h: f64,
    pub s: f64,
}

pub fn clifford_torus(n: usize, p: usize, r: f64) -> Result<TorusModel> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::domain(format!("torus radius must lie in (0, 1), got {r}")));
    }
    if n < 3 || p < 1 || 2 * p > n {
        return Err(Error::domain(format!(
            "need n >= 3 and 1 <= p <= n/2, got n = {n}, p = {p}"
        )));
    }
    let s2 = (1.0 - r * r).sqrt();
    let lambda = s2 / r;
    let mu = -r / s2;
    let mut diag = vec![lambda; p];
    diag.extend(std::iter::repeat(mu).take(n - p));
    let beta = SecondFundamentalForm::hypersurface(Endomorphism::from_diagonal(&diag)?)?;
    let (nf, pf) = (n as f64, p as f64);
    // pλ + (n−p)μ = (p − n r²)/(r√(1−r²)), exact zero at r² = p/n up to rounding
    let h = (pf - nf * r * r).abs() / (r * s2) / nf;
    let s = pf * lambda * lambda + (nf - pf) * mu * mu;
    Ok(TorusModel {
        n,
        p,
        r,
        lambda,
        mu,
        beta,
        h,
        s,
    })
}

impl TorusModel {
    /// The radius at which the torus is minimal, `√(p/n)`.
    pub fn minimal_radius(n: usize, p: usize) -> f64 {
        (p as f64 / n as f64).sqrt()
    }
}

/// Scalar invariants of a known minimal submanifold of a sphere.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KnownExample {
    pub name: String,
    /// Tangent dimension.
    pub n: usize,
    pub ambient: String,
    pub s_value: f64,
    pub minimal: bool,
    pub citation: String,
    /// The tangent dimension was inferred rather than stated by the source.
    pub n_inferred: bool,
    /// Parameter of a family member, when the entry belongs to a family.
    pub family_parameter: Option<usize>,
}

/// Member of the `CP²_{2m/(m+1)} → S^{m(m+2)}` family with parameter `m > 2`;
/// `S = 2m(m−1)`.
pub fn cp2_family(m: usize) -> Result<KnownExample> {
    if m <= 2 {
        return Err(Error::domain(format!("family parameter must exceed 2, got {m}")));
    }
    let mf = m as f64;
    Ok(KnownExample {
        name: format!("CP^2_{{{}/{}}} -> S^{}", 2 * m, m + 1, m * (m + 2)),
        n: 4,
        ambient: format!("S^{}", m * (m + 2)),
        s_value: 2.0 * mf * (mf - 1.0),
        minimal: true,
        citation: "S = 2n(n-1)".to_string(),
        n_inferred: false,
        family_parameter: Some(m),
    })
}

/// The fixed catalog of sharpness examples.
pub fn known_examples() -> Vec<KnownExample> {
    vec![
        KnownExample {
            name: "Cartan minimal hypersurface".to_string(),
            n: 3,
            ambient: "S^4".to_string(),
            s_value: 6.0,
            minimal: true,
            citation: "S = 6".to_string(),
            n_inferred: false,
            family_parameter: None,
        },
        KnownExample {
            name: "circle bundle over a flat minimal torus".to_string(),
            n: 3,
            ambient: "S^5".to_string(),
            s_value: 8.0,
            minimal: true,
            citation: "S = 8".to_string(),
            n_inferred: true,
            family_parameter: None,
        },
        cp2_family(3).expect("parameter 3 is valid"),
        KnownExample {
            name: "standard embedding CP^2_{4/3} -> S^7".to_string(),
            n: 4,
            ambient: "S^7".to_string(),
            s_value: 4.0,
            minimal: true,
            citation: "psi: CP^2_{4/3} -> S^7".to_string(),
            n_inferred: false,
            family_parameter: None,
        },
    ]
}

/// Families of random second fundamental forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BetaKind {
    Generic,
    Traceless,
    RankOneNormal,
    TwoCluster(usize),
}

impl fmt::Display for BetaKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BetaKind::Generic => f.write_str("generic"),
            BetaKind::Traceless => f.write_str("traceless"),
            BetaKind::RankOneNormal => f.write_str("rank_one_normal"),
            BetaKind::TwoCluster(p) => write!(f, "two_cluster({p})"),
        }
    }
}

impl FromStr for BetaKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s {
            "generic" => return Ok(BetaKind::Generic),
            "traceless" => return Ok(BetaKind::Traceless),
            "rank_one_normal" => return Ok(BetaKind::RankOneNormal),
            _ => {}
        }
        s.strip_prefix("two_cluster(")
            .and_then(|rest| rest.strip_suffix(')'))
            .and_then(|p| p.trim().parse::<usize>().ok())
            .map(BetaKind::TwoCluster)
            .ok_or_else(|| Error::domain(format!("unknown beta kind '{s}'")))
    }
}

fn uniform_symmetric<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-2.0..=2.0);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn unit_vector<R: Rng>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

/// Haar-distributed orthogonal matrix via QR of a Gaussian matrix with the
/// sign of `R`'s diagonal fixed.
pub fn random_rotation<R: Rng>(n: usize, rng: &mut R) -> DMatrix<f64> {
    let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

/// Draws a β of the given kind from an existing generator.
pub fn random_beta_with<R: Rng>(
    n: usize,
    k: usize,
    kind: BetaKind,
    rng: &mut R,
) -> Result<SecondFundamentalForm> {
    if n < 3 || k < 1 {
        return Err(Error::domain(format!("need n >= 3 and k >= 1, got n = {n}, k = {k}")));
    }
    let ops = match kind {
        BetaKind::Generic => (0..k)
            .map(|_| Endomorphism::new(uniform_symmetric(n, rng)))
            .collect::<Result<Vec<_>>>()?,
        BetaKind::Traceless => (0..k)
            .map(|_| Endomorphism::new(uniform_symmetric(n, rng)).map(|a| a.traceless()))
            .collect::<Result<Vec<_>>>()?,
        BetaKind::RankOneNormal => {
            let a = Endomorphism::new(uniform_symmetric(n, rng))?;
            unit_vector(k, rng).into_iter().map(|ui| a.scaled(ui)).collect()
        }
        BetaKind::TwoCluster(p) => {
            if p < 1 || p >= n {
                return Err(Error::domain(format!(
                    "two_cluster needs 1 <= p < n, got p = {p}, n = {n}"
                )));
            }
            let lambda = rng.random_range(-3.0..=3.0);
            let mu = rng.random_range(-3.0..=3.0);
            let mut d = vec![lambda; p];
            d.extend(std::iter::repeat(mu).take(n - p));
            let q = random_rotation(n, rng);
            let m = &q * DMatrix::from_diagonal(&d.into()) * q.transpose();
            let mut ops = vec![Endomorphism::symmetrized(m)?];
            ops.extend((1..k).map(|_| Endomorphism::zeros(n)));
            ops
        }
    };
    SecondFundamentalForm::new(ops)
}

/// Deterministic random β for a fixed seed.
pub fn random_beta(n: usize, k: usize, kind: BetaKind, seed: u64) -> Result<SecondFundamentalForm> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_beta_with(n, k, kind, &mut rng)
}
