//! Finite chains of `d`-level sites and operators with tracked support.
//!
//! Basis states are ordered with site 0 as the most significant digit, so an
//! operator `A` at site 1 of a two-site chain is `1 ⊗ A`.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::linalg::{self, CMat, Storage, C64, ZERO};

/// Default cap on the dense chain dimension `d^L`.
pub const DEFAULT_DENSE_CAP: usize = 4096;

/// A site belongs to the support when removing it changes the operator by more
/// than this (normalized Hilbert–Schmidt norm).
pub const SUPPORT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ChainGeometry {
    sites: usize,
    d: usize,
    boundary: Boundary,
    dim: usize,
}

impl ChainGeometry {
    pub fn new(sites: usize, d: usize, boundary: Boundary) -> Result<Self> {
        Self::with_cap(sites, d, boundary, DEFAULT_DENSE_CAP)
    }

    /// `cap` bounds `d^L`; larger chains are rejected.
    pub fn with_cap(sites: usize, d: usize, boundary: Boundary, cap: usize) -> Result<Self> {
        if d < 2 {
            return Err(LabError::InvalidDimension(d));
        }
        if sites == 0 {
            return Err(LabError::ChainTooShort { needed: 1, sites });
        }
        let dim = (0..sites)
            .try_fold(1usize, |acc, _| acc.checked_mul(d))
            .filter(|&n| n <= cap)
            .ok_or(LabError::SizeCap {
                dim: d.saturating_pow(sites as u32),
                cap,
            })?;
        Ok(Self {
            sites,
            d,
            boundary,
            dim,
        })
    }

    pub fn open(sites: usize, d: usize) -> Result<Self> {
        Self::new(sites, d, Boundary::Open)
    }

    pub fn periodic(sites: usize, d: usize) -> Result<Self> {
        Self::new(sites, d, Boundary::Periodic)
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn site_dim(&self) -> usize {
        self.d
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    /// Hilbert-space dimension `d^L`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn check_site(&self, x: usize) -> Result<()> {
        if x >= self.sites {
            return Err(LabError::SiteOutOfRange {
                site: x,
                sites: self.sites,
            });
        }
        Ok(())
    }

    /// Stride of site `x` in the basis index.
    pub fn stride(&self, x: usize) -> usize {
        self.d.pow((self.sites - 1 - x) as u32)
    }

    pub fn digit(&self, index: usize, x: usize) -> usize {
        (index / self.stride(x)) % self.d
    }

    pub fn with_digit(&self, index: usize, x: usize, value: usize) -> usize {
        let s = self.stride(x);
        index - self.digit(index, x) * s + value * s
    }

    /// Nearest-neighbour bonds `(x, x+1)`, including the wrap bond when periodic.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = (0..self.sites.saturating_sub(1)).map(|x| (x, x + 1)).collect();
        if self.is_periodic() && self.sites >= 2 {
            out.push((self.sites - 1, 0));
        }
        out
    }

    /// Site reached from `x` after translating by `y`, if it stays on the chain.
    pub fn translate(&self, x: usize, y: i64) -> Option<usize> {
        let l = self.sites as i64;
        let target = x as i64 + y;
        match self.boundary {
            Boundary::Periodic => Some(target.rem_euclid(l) as usize),
            Boundary::Open => (0..l).contains(&target).then_some(target as usize),
        }
    }

    /// Basis permutation implementing the cyclic translation of site slots by `y`.
    pub fn shift_permutation(&self, y: i64) -> Vec<usize> {
        let l = self.sites as i64;
        (0..self.dim)
            .map(|i| {
                let mut j = 0usize;
                for x in 0..self.sites {
                    let target = (x as i64 + y).rem_euclid(l) as usize;
                    j += self.digit(i, x) * self.stride(target);
                }
                j
            })
            .collect()
    }

    /// Unitary permutation matrix `T_y` with `T_y A T_y† = shift(A, y)`.
    pub fn translation_matrix(&self, y: i64) -> CMat {
        let perm = self.shift_permutation(y);
        let mut t = CMat::zeros(self.dim, self.dim);
        for (i, &j) in perm.iter().enumerate() {
            t[(j, i)] = linalg::ONE;
        }
        t
    }
}

/// An operator on the chain Hilbert space together with its support.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeOperator {
    storage: Storage,
    support: BTreeSet<usize>,
    geom: ChainGeometry,
}

impl LatticeOperator {
    /// Wraps a dense matrix and estimates its support.
    pub fn from_dense(geom: ChainGeometry, m: CMat) -> Result<Self> {
        check_shape(&geom, &m)?;
        let storage = Storage::auto_from_dense(m);
        let candidates: Vec<usize> = (0..geom.sites).collect();
        let support = estimate_support(&geom, &storage, &candidates, SUPPORT_TOL);
        Ok(Self {
            storage,
            support,
            geom,
        })
    }

    /// Dense matrix whose support is only searched among `candidates`.
    pub(crate) fn from_dense_within(geom: ChainGeometry, m: CMat, candidates: &BTreeSet<usize>) -> Self {
        let storage = Storage::auto_from_dense(m);
        let cands: Vec<usize> = candidates.iter().copied().collect();
        let support = estimate_support(&geom, &storage, &cands, SUPPORT_TOL);
        Self {
            storage,
            support,
            geom,
        }
    }

    pub(crate) fn from_storage_within(geom: ChainGeometry, storage: Storage, candidates: &[usize]) -> Self {
        let support = estimate_support(&geom, &storage, candidates, SUPPORT_TOL);
        Self {
            storage,
            support,
            geom,
        }
    }

    pub fn identity(geom: ChainGeometry) -> Self {
        let n = geom.dim;
        let triplets = (0..n).map(|i| (i, i, linalg::ONE)).collect();
        Self {
            storage: Storage::auto_from_triplets(n, triplets),
            support: BTreeSet::new(),
            geom,
        }
    }

    pub fn zero(geom: ChainGeometry) -> Self {
        Self {
            storage: Storage::auto_from_triplets(geom.dim, Vec::new()),
            support: BTreeSet::new(),
            geom,
        }
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geom
    }

    pub fn support(&self) -> &BTreeSet<usize> {
        &self.support
    }

    pub fn storage(&self) -> &Storage {
        &self.storage
    }

    pub fn dim(&self) -> usize {
        self.geom.dim
    }

    pub fn dense(&self) -> Cow<'_, CMat> {
        match &self.storage {
            Storage::Dense(m) => Cow::Borrowed(m),
            Storage::Sparse(s) => Cow::Owned(s.to_dense()),
        }
    }

    pub fn into_dense(self) -> CMat {
        match self.storage {
            Storage::Dense(m) => m,
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    fn same_geometry(&self, other: &Self) -> Result<()> {
        if self.geom != other.geom {
            return Err(LabError::GeometryMismatch);
        }
        Ok(())
    }

    fn union_support(&self, other: &Self) -> BTreeSet<usize> {
        self.support.union(&other.support).copied().collect()
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        let m = match (&self.storage, &other.storage) {
            (_, Storage::Dense(b)) => self.storage.mul_dense(b),
            (Storage::Dense(a), Storage::Sparse(s)) => s.dense_mul(a),
            (Storage::Sparse(a), Storage::Sparse(b)) => a.mul_dense(&b.to_dense()),
        };
        Ok(Self::from_dense_within(self.geom, m, &self.union_support(other)))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        let m = self.dense().into_owned() + other.dense().as_ref();
        Ok(Self::from_dense_within(self.geom, m, &self.union_support(other)))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        let m = self.dense().into_owned() - other.dense().as_ref();
        Ok(Self::from_dense_within(self.geom, m, &self.union_support(other)))
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.dense().into_owned() * s;
        Self::from_dense_within(self.geom, m, &self.support)
    }

    pub fn adjoint(&self) -> Self {
        Self::from_dense_within(self.geom, self.dense().adjoint(), &self.support)
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        let a = self.dense();
        let b = other.dense();
        let c = linalg::commutator(&a, &b);
        Ok(Self::from_dense_within(self.geom, c, &self.union_support(other)))
    }

    pub fn hermiticity_defect(&self) -> f64 {
        linalg::hermiticity_defect(&self.dense())
    }

    pub fn is_scalar(&self) -> bool {
        self.support.is_empty()
    }

    /// Normalized trace `tr(A)/d^L`.
    pub fn normalized_trace(&self) -> C64 {
        let t: C64 = match &self.storage {
            Storage::Dense(m) => linalg::trace(m),
            Storage::Sparse(s) => s.iter().filter(|(r, c, _)| r == c).map(|(_, _, v)| v).sum(),
        };
        t / self.geom.dim as f64
    }

    /// Re-estimate the support over every site.
    pub fn refresh_support(&mut self) {
        let all: Vec<usize> = (0..self.geom.sites).collect();
        self.support = estimate_support(&self.geom, &self.storage, &all, SUPPORT_TOL);
    }

    /// `‖A − E_x(A)‖` in the normalized Hilbert–Schmidt norm for every site,
    /// where `E_x` replaces the site-x factor by its normalized trace.
    pub fn locality_profile(&self) -> Vec<f64> {
        (0..self.geom.sites)
            .map(|x| site_residual(&self.geom, &self.storage, x))
            .collect()
    }
}

fn check_shape(geom: &ChainGeometry, m: &CMat) -> Result<()> {
    if m.nrows() != geom.dim || m.ncols() != geom.dim {
        return Err(LabError::DimensionMismatch {
            expected: geom.dim,
            found: m.nrows(),
        });
    }
    Ok(())
}

fn estimate_support(geom: &ChainGeometry, storage: &Storage, candidates: &[usize], tol: f64) -> BTreeSet<usize> {
    candidates
        .iter()
        .copied()
        .filter(|&x| site_residual(geom, storage, x) > tol)
        .collect()
}

/// Normalized HS norm of `A − E_x(A)`.
fn site_residual(geom: &ChainGeometry, storage: &Storage, x: usize) -> f64 {
    let d = geom.d;
    let n = geom.dim as f64;
    match storage {
        Storage::Dense(m) => {
            let e = site_expectation(geom, m, x);
            (linalg::frobenius_sq(&(m - e)) / n).sqrt()
        }
        Storage::Sparse(s) => {
            // Entries of E_x(A) keyed by (row, col) with the site-x digit zeroed.
            let mut partial: HashMap<(usize, usize), C64> = HashMap::new();
            let mut entries: HashMap<(usize, usize), C64> = HashMap::new();
            for (r, c, v) in s.iter() {
                entries.insert((r, c), v);
                if geom.digit(r, x) == geom.digit(c, x) {
                    let key = (geom.with_digit(r, x, 0), geom.with_digit(c, x, 0));
                    *partial.entry(key).or_insert(ZERO) += v / d as f64;
                }
            }
            let mut total = 0.0;
            for (&(r0, c0), &p) in &partial {
                for a in 0..d {
                    let key = (geom.with_digit(r0, x, a), geom.with_digit(c0, x, a));
                    let v = entries.remove(&key).unwrap_or(ZERO);
                    total += (v - p).norm_sqr();
                }
            }
            total += entries.values().map(|v| v.norm_sqr()).sum::<f64>();
            (total / n).sqrt()
        }
    }
}

/// `E_x(A) = 1_x ⊗ tr_x(A)/d`, the conditional expectation onto operators
/// acting trivially at site `x`.
pub fn site_expectation(geom: &ChainGeometry, a: &CMat, x: usize) -> CMat {
    let d = geom.d;
    let n = geom.dim;
    let stride = geom.stride(x);
    let mut out = CMat::zeros(n, n);
    for c in 0..n {
        if geom.digit(c, x) != 0 {
            continue;
        }
        for r in 0..n {
            if geom.digit(r, x) != 0 {
                continue;
            }
            let mut acc = ZERO;
            for k in 0..d {
                acc += a[(r + k * stride, c + k * stride)];
            }
            acc /= d as f64;
            if acc != ZERO {
                for k in 0..d {
                    out[(r + k * stride, c + k * stride)] = acc;
                }
            }
        }
    }
    out
}

/// `1 ⊗ … ⊗ A ⊗ … ⊗ 1` with `A` at site `x`.
pub fn embed_at(site_op: &CMat, x: usize, geom: &ChainGeometry) -> Result<LatticeOperator> {
    embed_sites(site_op, &[x], geom)
}

/// Embeds a `d^k × d^k` operator acting on the listed sites, in the listed order.
pub fn embed_sites(op: &CMat, sites: &[usize], geom: &ChainGeometry) -> Result<LatticeOperator> {
    let d = geom.d;
    let k = sites.len();
    let local = d.pow(k as u32);
    if op.nrows() != local || op.ncols() != local {
        return Err(LabError::DimensionMismatch {
            expected: local,
            found: op.nrows(),
        });
    }
    for (i, &x) in sites.iter().enumerate() {
        geom.check_site(x)?;
        if sites[..i].contains(&x) {
            return Err(LabError::InvalidArgument(format!("site {x} listed twice")));
        }
    }
    let strides: Vec<usize> = sites.iter().map(|&x| geom.stride(x)).collect();
    let offset = |a: usize| -> usize {
        let mut off = 0;
        let mut rem = a;
        for j in (0..k).rev() {
            off += (rem % d) * strides[j];
            rem /= d;
        }
        off
    };
    let offsets: Vec<usize> = (0..local).map(offset).collect();
    let nonzeros: Vec<(usize, usize, C64)> = (0..local)
        .flat_map(|a| (0..local).map(move |b| (a, b)))
        .filter_map(|(a, b)| {
            let v = op[(a, b)];
            (v != ZERO).then_some((a, b, v))
        })
        .collect();
    let mut triplets = Vec::with_capacity(nonzeros.len() * (geom.dim / local));
    for base in 0..geom.dim {
        if sites.iter().any(|&x| geom.digit(base, x) != 0) {
            continue;
        }
        for &(a, b, v) in &nonzeros {
            triplets.push((base + offsets[a], base + offsets[b], v));
        }
    }
    let storage = Storage::auto_from_triplets(geom.dim, triplets);
    Ok(LatticeOperator::from_storage_within(*geom, storage, sites))
}

/// Translation `σ_y`: moves the operator content of site `x` to site `x + y`.
pub fn shift(op: &LatticeOperator, y: i64) -> Result<LatticeOperator> {
    let geom = op.geom;
    let mut support = BTreeSet::new();
    for &x in &op.support {
        let target = geom.translate(x, y).ok_or(LabError::SupportLeavesChain {
            shift: y,
            sites: geom.sites,
        })?;
        support.insert(target);
    }
    let perm = geom.shift_permutation(y);
    let storage = match &op.storage {
        Storage::Dense(m) => {
            let n = geom.dim;
            let mut out = CMat::zeros(n, n);
            for c in 0..n {
                for r in 0..n {
                    out[(perm[r], perm[c])] = m[(r, c)];
                }
            }
            Storage::Dense(out)
        }
        Storage::Sparse(s) => Storage::Sparse(linalg::CsrMatrix::from_triplets(
            geom.dim,
            s.iter().map(|(r, c, v)| (perm[r], perm[c], v)).collect(),
        )),
    };
    Ok(LatticeOperator {
        storage,
        support,
        geom,
    })
}

/// Spectral norm of `AB − BA`; exactly zero for disjoint supports.
pub fn commutator_norm(a: &LatticeOperator, b: &LatticeOperator) -> Result<f64> {
    a.same_geometry(b)?;
    if a.support.is_disjoint(&b.support) {
        return Ok(0.0);
    }
    let c = linalg::commutator(&a.dense(), &b.dense());
    Ok(linalg::spectral_norm(&c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{identity, kron, max_abs_diff};
    use crate::weyl::pauli;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_op(d: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(d, d, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    #[test]
    fn identity_embedding_has_empty_support() {
        let g = ChainGeometry::open(3, 2).unwrap();
        let op = embed_at(&pauli::id(), 0, &g).unwrap();
        assert!(op.support().is_empty());
        assert_eq!(op.dense().as_ref(), &identity(8));
    }

    #[test]
    fn embed_x_on_second_site() {
        let g = ChainGeometry::open(2, 2).unwrap();
        let op = embed_at(&pauli::x(), 1, &g).unwrap();
        assert_eq!(op.dense().as_ref(), &kron(&pauli::id(), &pauli::x()));
        assert_eq!(op.support().iter().copied().collect::<Vec<_>>(), vec![1]);
    }

    #[test]
    fn embed_errors() {
        let g = ChainGeometry::open(2, 2).unwrap();
        assert!(matches!(embed_at(&pauli::x(), 2, &g), Err(LabError::SiteOutOfRange { .. })));
        assert!(matches!(
            embed_at(&identity(3), 0, &g),
            Err(LabError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn geometry_cap() {
        assert!(matches!(
            ChainGeometry::new(13, 2, Boundary::Open),
            Err(LabError::SizeCap { .. })
        ));
        assert!(ChainGeometry::with_cap(13, 2, Boundary::Open, 1 << 13).is_ok());
    }

    #[test]
    fn disjoint_supports_commute() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = ChainGeometry::open(3, 3).unwrap();
        let a = embed_at(&random_op(3, &mut rng), 0, &g).unwrap();
        let b = embed_at(&random_op(3, &mut rng), 1, &g).unwrap();
        assert!(max_abs_diff(&a.mul(&b).unwrap().dense(), &b.mul(&a).unwrap().dense()) < 1e-14);
        assert_eq!(commutator_norm(&a, &b).unwrap(), 0.0);
    }

    #[test]
    fn commutator_norm_examples() {
        let g = ChainGeometry::open(2, 2).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let z0 = embed_at(&pauli::z(), 0, &g).unwrap();
        assert!((commutator_norm(&x0, &z0).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(commutator_norm(&x0, &x0).unwrap(), 0.0);
        let other = ChainGeometry::open(3, 2).unwrap();
        let z_other = embed_at(&pauli::z(), 0, &other).unwrap();
        assert!(matches!(commutator_norm(&x0, &z_other), Err(LabError::GeometryMismatch)));
    }

    #[test]
    fn shift_examples() {
        let g = ChainGeometry::open(3, 2).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        assert_eq!(shift(&x0, 1).unwrap(), embed_at(&pauli::x(), 1, &g).unwrap());
        let id = LatticeOperator::identity(g);
        assert_eq!(shift(&id, 2).unwrap(), id);
        assert!(matches!(shift(&x0, -1), Err(LabError::SupportLeavesChain { .. })));

        let p = ChainGeometry::periodic(4, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let two = embed_sites(&random_op(4, &mut rng), &[1, 2], &p).unwrap();
        assert_eq!(shift(&two, 4).unwrap(), two);
        let wrapped = shift(&two, 3).unwrap();
        assert_eq!(wrapped.support().iter().copied().collect::<Vec<_>>(), vec![0, 1]);
    }

    #[test]
    fn translation_matrix_conjugates_to_shift() {
        let g = ChainGeometry::periodic(3, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let a = embed_sites(&random_op(9, &mut rng), &[0, 1], &g).unwrap();
        let t = g.translation_matrix(1);
        let lhs = &t * a.dense().as_ref() * t.adjoint();
        assert!(max_abs_diff(&lhs, &shift(&a, 1).unwrap().dense()) < 1e-14);
    }

    #[test]
    fn support_is_minimal() {
        let g = ChainGeometry::open(4, 2).unwrap();
        let xz = kron(&pauli::x(), &pauli::id());
        let op = embed_sites(&xz, &[1, 3], &g).unwrap();
        assert_eq!(op.support().iter().copied().collect::<Vec<_>>(), vec![1]);
        let x1 = embed_at(&pauli::x(), 1, &g).unwrap();
        assert!(x1.mul(&x1).unwrap().is_scalar());
        let mut dense = LatticeOperator::from_dense(g, x1.dense().into_owned()).unwrap();
        dense.refresh_support();
        assert_eq!(dense.support(), x1.support());
    }

    #[test]
    fn sparse_and_dense_residuals_agree() {
        let g = ChainGeometry::open(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let op = embed_sites(&random_op(4, &mut rng), &[0, 2], &g).unwrap();
        let sparse = Storage::Sparse(crate::linalg::CsrMatrix::from_dense(&op.dense()));
        let dense = Storage::Dense(op.dense().into_owned());
        for x in 0..3 {
            let a = site_residual(&g, &sparse, x);
            let b = site_residual(&g, &dense, x);
            assert!((a - b).abs() < 1e-12, "site {x}: {a} vs {b}");
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn shift_is_star_automorphism(seed in 0u64..1000, y in -5i64..5) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = ChainGeometry::periodic(4, 2).unwrap();
            let a = embed_sites(&random_op(4, &mut rng), &[0, 1], &g).unwrap();
            let b = embed_at(&random_op(2, &mut rng), 2, &g).unwrap();
            let ab = shift(&a.mul(&b).unwrap(), y).unwrap();
            let sab = shift(&a, y).unwrap().mul(&shift(&b, y).unwrap()).unwrap();
            prop_assert!(max_abs_diff(&ab.dense(), &sab.dense()) < 1e-12);
            let sadj = shift(&a.adjoint(), y).unwrap();
            prop_assert!(max_abs_diff(&sadj.dense(), &shift(&a, y).unwrap().adjoint().dense()) < 1e-12);
            prop_assert_eq!(shift(&shift(&a, y).unwrap(), -y).unwrap(), a);
        }

        #[test]
        fn shifted_disjoint_support_commutes(seed in 0u64..1000, y in 1i64..4) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = ChainGeometry::open(6, 2).unwrap();
            let a = embed_at(&random_op(2, &mut rng), 0, &g).unwrap();
            let b = embed_sites(&random_op(4, &mut rng), &[4, 5], &g).unwrap();
            let moved = shift(&a, y).unwrap();
            let c = crate::linalg::commutator(&moved.dense(), &b.dense());
            prop_assert_eq!(commutator_norm(&moved, &b).unwrap(), 0.0);
            prop_assert!(crate::linalg::max_abs(&c) < 1e-14);
        }
    }
}
