//! Site-coupling obstruction `PĤ(1−P)ĤP`, its block decomposition, and the
//! twisted-automorphism covariance test.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::{Method, Propagator};
use crate::error::{LabError, Result};
use crate::gns::{GnsVector, DEFAULT_DOUBLED_CAP, HERMITIAN_TOL};
use crate::hamiltonians::{assemble, derive_seed, random_coupled, random_onsite, HamiltonianSpec};
use crate::lattice::{embed_at, site_expectation, ChainGeometry, LatticeOperator};
use crate::linalg::{self, CMat, HermitianEigen, C64};

/// `block_sum` at or below this counts as "no coupling across the site".
pub const COUPLING_TOL: f64 = 1e-16;

/// Largest covariance defect accepted as the escape-probe hypothesis.
pub const COVARIANCE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    OnSiteOnly,
    Coupled,
}

impl Classification {
    pub fn as_str(&self) -> &'static str {
        match self {
            Classification::OnSiteOnly => "on-site-only",
            Classification::Coupled => "coupled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObstructionReport {
    pub model: String,
    pub site: usize,
    /// `‖(1−P)ĤP‖`, spectral norm on the GNS space.
    pub obs_norm: f64,
    /// `‖(1−P)ĤP‖_HS / sqrt(rank P)`.
    pub obs_hs: f64,
    pub block_sum: f64,
    /// Smallest eigenvalue of `PĤ(1−P)ĤP` on the range of `P`.
    pub min_eigenvalue: f64,
    pub classification: Classification,
}

/// `H = Σ_{jk} |j⟩⟨k|_x ⊗ R_{jk}` together with the coupling content
/// `K_{jk}`, the part of `R_{jk}` not of the form `δ_{jk} R̄ + c_{jk}·1`.
#[derive(Debug, Clone)]
pub struct BlockDecomposition {
    pub site: usize,
    pub blocks: Vec<Vec<CMat>>,
    pub coupling: Vec<Vec<CMat>>,
    /// `Σ_{jk} ‖K_{jk}‖²_HS / dim(rest)`.
    pub block_sum: f64,
}

/// Indices of the full basis whose site-`x` digit is 0, in increasing order.
fn rest_bases(geom: &ChainGeometry, x: usize) -> Vec<usize> {
    (0..geom.dim()).filter(|&i| geom.digit(i, x) == 0).collect()
}

pub fn decompose_blocks(h: &HamiltonianSpec, x: usize) -> Result<BlockDecomposition> {
    decompose_operator(&assemble(h)?, x)
}

pub fn decompose_operator(h: &LatticeOperator, x: usize) -> Result<BlockDecomposition> {
    let geom = h.geometry();
    geom.check_site(x)?;
    let d = geom.site_dim();
    let stride = geom.stride(x);
    let bases = rest_bases(geom, x);
    let n = bases.len();
    let hd = h.dense();
    let blocks: Vec<Vec<CMat>> = (0..d)
        .map(|j| {
            (0..d)
                .map(|k| CMat::from_fn(n, n, |a, b| hd[(bases[a] + j * stride, bases[b] + k * stride)]))
                .collect()
        })
        .collect();
    let mean = blocks.iter().enumerate().fold(CMat::zeros(n, n), |acc, (j, row)| acc + &row[j]) / C64::from(d as f64);
    let id = linalg::identity(n);
    let mut block_sum = 0.0;
    let coupling: Vec<Vec<CMat>> = blocks
        .iter()
        .enumerate()
        .map(|(j, row)| {
            row.iter()
                .enumerate()
                .map(|(k, r)| {
                    let mut c = r.clone();
                    if j == k {
                        c -= &mean;
                    }
                    let tr = linalg::trace(&c) / n as f64;
                    c -= &id * tr;
                    block_sum += linalg::frobenius_sq(&c) / n as f64;
                    c
                })
                .collect()
        })
        .collect();
    Ok(BlockDecomposition {
        site: x,
        blocks,
        coupling,
        block_sum,
    })
}

/// Evaluates the obstruction at site `x` on the range of `P`.
pub fn obstruction(h: &HamiltonianSpec, x: usize) -> Result<ObstructionReport> {
    obstruction_of_operator(h.name(), &assemble(h)?, x)
}

pub fn obstruction_of_operator(model: &str, h: &LatticeOperator, x: usize) -> Result<ObstructionReport> {
    let geom = *h.geometry();
    geom.check_site(x)?;
    let deviation = h.hermiticity_defect();
    if deviation > HERMITIAN_TOL {
        return Err(LabError::NotSelfAdjoint { deviation });
    }
    let dim = geom.dim();
    if dim * dim > DEFAULT_DOUBLED_CAP {
        return Err(LabError::SizeCap {
            dim: dim * dim,
            cap: DEFAULT_DOUBLED_CAP,
        });
    }
    let d = geom.site_dim();
    let stride = geom.stride(x);
    let bases = rest_bases(&geom, x);
    let n = bases.len();
    let scale = C64::from(1.0 / (d as f64).sqrt());
    let storage = h.storage();

    // Columns: (1−P)Ĥ applied to the orthonormal basis 1_x ⊗ E_ab / √d of ran P.
    let columns: Vec<CMat> = (0..n * n)
        .into_par_iter()
        .map(|idx| {
            let (a, b) = (idx / n, idx % n);
            let mut v = CMat::zeros(dim, dim);
            for k in 0..d {
                v[(bases[a] + k * stride, bases[b] + k * stride)] = scale;
            }
            let c = storage.mul_dense(&v) - storage.dense_mul(&v);
            &c - site_expectation(&geom, &c, x)
        })
        .collect();
    let w = CMat::from_fn(dim * dim, n * n, |r, c| columns[c][(r / dim, r % dim)]);
    let gram = w.adjoint() * &w;
    let eig = HermitianEigen::new(&gram);
    let top = eig.values.last().copied().unwrap_or(0.0).max(0.0);
    let min_eigenvalue = eig.values.first().copied().unwrap_or(0.0);
    let obs_hs = (linalg::trace(&gram).re.max(0.0) / (n * n) as f64).sqrt();
    let blocks = decompose_operator(h, x)?;
    let classification = if blocks.block_sum <= COUPLING_TOL {
        Classification::OnSiteOnly
    } else {
        Classification::Coupled
    };
    Ok(ObstructionReport {
        model: model.to_string(),
        site: x,
        obs_norm: top.sqrt(),
        obs_hs,
        block_sum: blocks.block_sum,
        min_eigenvalue,
        classification,
    })
}

/// `obs_hs² / block_sum` on a seeded random coupled Hamiltonian on two open
/// sites; the constant relating the two is then asserted on all other chains.
pub fn calibrate_block_constant(d: usize) -> Result<f64> {
    let geom = ChainGeometry::open(2, d)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0xCA11B);
    let reference = random_coupled(geom, &mut rng)?;
    let report = obstruction(&reference, 0)?;
    Ok(report.obs_hs.powi(2) / report.block_sum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RandomFamily {
    Onsite,
    Coupled,
}

/// Obstruction reports for `count` random Hamiltonians; case `i` draws from
/// a generator seeded with `derive_seed(root_seed, i)`.
pub fn random_sweep(
    geom: ChainGeometry,
    family: RandomFamily,
    count: usize,
    root_seed: u64,
    x: usize,
) -> Result<Vec<ObstructionReport>> {
    (0..count)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(root_seed, i as u64));
            let spec = match family {
                RandomFamily::Onsite => random_onsite(geom, &mut rng)?,
                RandomFamily::Coupled => random_coupled(geom, &mut rng)?,
            };
            let mut report = obstruction(&spec, x)?;
            report.model = format!("{}#{i}", spec.name());
            Ok(report)
        })
        .collect()
}

/// `γ(g)`: conjugation by `⊗_x e^{ig n(x) B0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TwistSpec {
    generator: CMat,
    weights: Option<Vec<i64>>,
    strength: f64,
}

impl TwistSpec {
    /// Weights default to `n(x) = x`.
    pub fn new(generator: CMat, weights: Option<Vec<i64>>, strength: f64) -> Result<Self> {
        if generator.nrows() != generator.ncols() || generator.nrows() < 2 {
            return Err(LabError::InvalidArgument("twist generator must be a square d×d matrix".into()));
        }
        let deviation = linalg::hermiticity_defect(&generator);
        if deviation > HERMITIAN_TOL {
            return Err(LabError::NotSelfAdjoint { deviation });
        }
        Ok(Self {
            generator,
            weights,
            strength,
        })
    }

    pub fn generator(&self) -> &CMat {
        &self.generator
    }

    pub fn strength(&self) -> f64 {
        self.strength
    }

    pub fn with_strength(&self, g: f64) -> Self {
        Self {
            strength: g,
            ..self.clone()
        }
    }

    pub fn weight(&self, x: usize) -> i64 {
        match &self.weights {
            Some(w) => w.get(x).copied().unwrap_or(0),
            None => x as i64,
        }
    }

    /// `e^{ig n(x) B0}`.
    pub fn site_unitary(&self, x: usize) -> CMat {
        let theta = self.strength * self.weight(x) as f64;
        HermitianEigen::new(&self.generator).apply_fn(|e| C64::from_polar(1.0, theta * e))
    }

    fn check(&self, geom: &ChainGeometry) -> Result<()> {
        if self.generator.nrows() != geom.site_dim() {
            return Err(LabError::DimensionMismatch {
                expected: geom.site_dim(),
                found: self.generator.nrows(),
            });
        }
        if let Some(w) = &self.weights {
            if w.len() != geom.sites() {
                return Err(LabError::DimensionMismatch {
                    expected: geom.sites(),
                    found: w.len(),
                });
            }
        }
        Ok(())
    }
}

/// `γ(g)(A)`. Only sites in the support of `A` contribute.
pub fn twist(spec: &TwistSpec, a: &LatticeOperator) -> Result<LatticeOperator> {
    let geom = a.geometry();
    spec.check(geom)?;
    if spec.strength == 0.0 {
        return Ok(a.clone());
    }
    let mut m = a.dense().into_owned();
    for &x in a.support() {
        let u = spec.site_unitary(x);
        let left = embed_at(&u, x, geom)?;
        let right = embed_at(&u.adjoint(), x, geom)?;
        m = right.storage().dense_mul(&left.storage().mul_dense(&m));
    }
    LatticeOperator::from_dense(*geom, m)
}

/// Twisted two-site density block `(u_x ⊗ u_{x+1})(a ⊗ 1 + c)(u_x ⊗ u_{x+1})†`.
fn twisted_bond(h: &HamiltonianSpec, spec: &TwistSpec, x: usize, next: usize) -> CMat {
    let d = h.site_dim();
    let mut block = CMat::zeros(d * d, d * d);
    if let Some(a) = h.on_site() {
        block += linalg::kron(a, &linalg::identity(d));
    }
    if let Some(c) = h.coupling() {
        block += c;
    }
    let u = linalg::kron(&spec.site_unitary(x), &spec.site_unitary(next));
    &u * block * u.adjoint()
}

/// `max_x ‖σ_1(γ h_x γ⁻¹) − γ h_{x+1} γ⁻¹‖` over bulk bonds `x = 0..=L−3`.
///
/// The densities are two-site operators, so the comparison is carried out on
/// the local `d² × d²` blocks, which have the same norm as their embeddings.
pub fn covariance_defect(h: &HamiltonianSpec, spec: &TwistSpec) -> Result<f64> {
    let geom = h.geometry();
    spec.check(geom)?;
    if !geom.is_periodic() {
        return Err(LabError::InvalidArgument("covariance defect needs a periodic chain".into()));
    }
    if geom.sites() < 4 {
        return Err(LabError::ChainTooShort {
            needed: 4,
            sites: geom.sites(),
        });
    }
    let l = geom.sites();
    let mut defect: f64 = 0.0;
    for x in 0..=l - 3 {
        let here = twisted_bond(h, spec, x, x + 1);
        let there = twisted_bond(h, spec, x + 1, x + 2);
        defect = defect.max(linalg::spectral_norm(&(here - there)));
    }
    Ok(defect)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EscapeRow {
    pub candidate: String,
    pub g: f64,
    pub t: f64,
    /// `min_E ‖(Ĥ − E)v‖` for the normalized vector `v = A|Ω⟩/‖A|Ω⟩‖`.
    pub eigen_residual: f64,
    /// `‖(γ(g)A − A)|Ω⟩‖ / ‖A|Ω⟩‖`.
    pub twist_residual: f64,
    /// `‖(e^{itĤ} − e^{itE})v‖` with `E = ⟨v|Ĥv⟩`.
    pub propagation_residual: f64,
}

/// `min_E ‖(Ĥ − E)v‖ / ‖v‖` and the minimizing `E`.
pub fn eigen_residual(h: &LatticeOperator, v: &GnsVector) -> (f64, f64) {
    let norm = v.norm();
    if norm == 0.0 {
        return (0.0, 0.0);
    }
    let b = v.operator() / C64::from(norm);
    let hb = h.storage().mul_dense(&b) - h.storage().dense_mul(&b);
    let dim = h.dim() as f64;
    let energy = linalg::hs_inner(&b, &hb).re / dim;
    let sq = linalg::frobenius_sq(&hb) / dim - energy * energy;
    (sq.max(0.0).sqrt(), energy)
}

/// Tests whether any candidate `A|Ω⟩` is simultaneously close to an
/// `Ĥ`-eigenvector and to a `γ`-invariant vector.
pub fn eigenvector_escape_probe(
    h: &HamiltonianSpec,
    spec: &TwistSpec,
    candidates: &[(String, LatticeOperator)],
    ts: &[f64],
    gs: &[f64],
) -> Result<Vec<EscapeRow>> {
    for &g in gs {
        let defect = covariance_defect(h, &spec.with_strength(g))?;
        if defect > COVARIANCE_TOL {
            return Err(LabError::HypothesisViolated(format!(
                "twisted dynamics is not shift covariant at g = {g} (defect {defect:.3e})"
            )));
        }
    }
    let hop = assemble(h)?;
    let propagator = Propagator::new(&hop, Method::Auto)?;
    let mut rows = Vec::new();
    for (label, a) in candidates {
        let v = GnsVector::from_operator(a);
        let norm = v.norm();
        let (residual, energy) = eigen_residual(&hop, &v);
        for &g in gs {
            let twisted = GnsVector::from_operator(&twist(&spec.with_strength(g), a)?);
            let twist_residual = if norm == 0.0 { 0.0 } else { twisted.distance(&v) / norm };
            for &t in ts {
                let evolved = propagator.evolve_vector(&v, t)?;
                let phased = v.scale(C64::from_polar(1.0, energy * t));
                let propagation_residual = if norm == 0.0 { 0.0 } else { evolved.distance(&phased) / norm };
                rows.push(EscapeRow {
                    candidate: label.clone(),
                    g,
                    t,
                    eigen_residual: residual,
                    twist_residual,
                    propagation_residual,
                });
            }
        }
    }
    Ok(rows)
}
