//! Tracial GNS representation in vectorized form.
//!
//! A GNS vector is a chain operator `B` with inner product
//! `⟨B|C⟩ = tr(B†C)/d^L`; the cyclic vector `Ω` is the identity. `Π(A)` acts by
//! left multiplication and the modular conjugation is `J|B⟩ = |B†⟩`, so `JAJ`
//! is right multiplication by `A†`. Superoperators are kept structural and are
//! only materialized as `d^{2L} × d^{2L}` matrices on request.

use std::fmt;
use std::sync::Arc;

use crate::error::{LabError, Result};
use crate::lattice::{site_expectation, ChainGeometry, LatticeOperator};
use crate::linalg::{self, CMat, Storage, C64, ONE, ZERO};
use crate::weyl::{self, WeylIndex};

/// Default cap on the doubled dimension `d^{2L}` for explicit matrices.
pub const DEFAULT_DOUBLED_CAP: usize = 4096;

/// Self-adjointness tolerance for generators.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GnsVector {
    op: CMat,
    geom: ChainGeometry,
}

impl GnsVector {
    /// `|Ω⟩`.
    pub fn omega(geom: ChainGeometry) -> Self {
        Self {
            op: linalg::identity(geom.dim()),
            geom,
        }
    }

    pub fn zero(geom: ChainGeometry) -> Self {
        Self {
            op: CMat::zeros(geom.dim(), geom.dim()),
            geom,
        }
    }

    /// `Π(A)|Ω⟩`.
    pub fn from_operator(a: &LatticeOperator) -> Self {
        Self {
            op: a.dense().into_owned(),
            geom: *a.geometry(),
        }
    }

    pub fn from_dense(geom: ChainGeometry, op: CMat) -> Result<Self> {
        if op.nrows() != geom.dim() || op.ncols() != geom.dim() {
            return Err(LabError::DimensionMismatch {
                expected: geom.dim(),
                found: op.nrows(),
            });
        }
        Ok(Self { op, geom })
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geom
    }

    pub fn operator(&self) -> &CMat {
        &self.op
    }

    pub fn into_operator(self) -> CMat {
        self.op
    }

    pub fn to_lattice_operator(&self) -> LatticeOperator {
        LatticeOperator::from_dense(self.geom, self.op.clone()).expect("shape checked on construction")
    }

    pub fn inner(&self, other: &Self) -> C64 {
        linalg::hs_inner(&self.op, &other.op) / self.geom.dim() as f64
    }

    pub fn norm(&self) -> f64 {
        (linalg::frobenius_sq(&self.op) / self.geom.dim() as f64).sqrt()
    }

    pub fn normalized(&self) -> Self {
        let n = self.norm();
        self.scale(C64::from(1.0 / n))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            op: &self.op * s,
            geom: self.geom,
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            op: &self.op + &other.op,
            geom: self.geom,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            op: &self.op - &other.op,
            geom: self.geom,
        }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        self.sub(other).norm()
    }

    /// Row-major coordinates `B_{ij}` at position `i·D + j`.
    pub fn vectorize(&self) -> nalgebra::DVector<C64> {
        let n = self.geom.dim();
        nalgebra::DVector::from_fn(n * n, |k, _| self.op[(k / n, k % n)])
    }

    pub fn from_vectorized(geom: ChainGeometry, v: &nalgebra::DVector<C64>) -> Self {
        let n = geom.dim();
        Self {
            op: CMat::from_fn(n, n, |i, j| v[i * n + j]),
            geom,
        }
    }
}

/// `J|B⟩ = |B†⟩`, antiunitary with `J² = 1`.
pub fn modular_conjugation(v: &GnsVector) -> GnsVector {
    GnsVector {
        op: v.op.adjoint(),
        geom: v.geom,
    }
}

/// A unitary on the GNS space that can be applied forwards or backwards.
pub trait SuperUnitary: Send + Sync + fmt::Debug {
    fn apply(&self, v: &GnsVector) -> Result<GnsVector>;
    fn apply_inverse(&self, v: &GnsVector) -> Result<GnsVector>;
}

#[derive(Debug, Clone)]
pub enum DoubledKind {
    Identity,
    /// `|B⟩ ↦ |AB⟩`.
    Left(CMat),
    /// `|B⟩ ↦ |BA⟩`.
    Right(CMat),
    /// `|B⟩ ↦ |HB − BH⟩`.
    Adjoint(Arc<Storage>),
    /// `|B⟩ ↦ |1_x ⊗ tr_x(B)/d⟩`.
    SiteExpectation(usize),
    /// A `d² × d²` map on the site-`x` operator content, row-major vectorized.
    LocalMap { site: usize, map: CMat },
    Scaled(C64, Box<DoubledOperator>),
    Sum(Vec<DoubledOperator>),
    /// Operator product; the last factor is applied first.
    Product(Vec<DoubledOperator>),
    Explicit(CMat),
    /// `W S W†`.
    Conjugated {
        inner: Box<DoubledOperator>,
        unitary: Arc<dyn SuperUnitary>,
    },
}

#[derive(Debug, Clone)]
pub struct DoubledOperator {
    kind: DoubledKind,
    geom: ChainGeometry,
}

impl DoubledOperator {
    pub fn new(kind: DoubledKind, geom: ChainGeometry) -> Self {
        Self { kind, geom }
    }

    pub fn identity(geom: ChainGeometry) -> Self {
        Self::new(DoubledKind::Identity, geom)
    }

    pub fn kind(&self) -> &DoubledKind {
        &self.kind
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geom
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        let mut factors = Vec::new();
        for op in [self, other] {
            match &op.kind {
                DoubledKind::Product(fs) => factors.extend(fs.iter().cloned()),
                _ => factors.push(op.clone()),
            }
        }
        Ok(Self::new(DoubledKind::Product(factors), self.geom))
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.same_geometry(other)?;
        Ok(Self::new(DoubledKind::Sum(vec![self.clone(), other.clone()]), self.geom))
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self::new(DoubledKind::Scaled(s, Box::new(self.clone())), self.geom)
    }

    /// `1 − self`.
    pub fn complement(&self) -> Self {
        Self::new(
            DoubledKind::Sum(vec![Self::identity(self.geom), self.scaled(-ONE)]),
            self.geom,
        )
    }

    pub fn conjugated(&self, unitary: Arc<dyn SuperUnitary>) -> Self {
        Self::new(
            DoubledKind::Conjugated {
                inner: Box::new(self.clone()),
                unitary,
            },
            self.geom,
        )
    }

    fn same_geometry(&self, other: &Self) -> Result<()> {
        if self.geom != other.geom {
            return Err(LabError::GeometryMismatch);
        }
        Ok(())
    }

    pub fn apply(&self, v: &GnsVector) -> Result<GnsVector> {
        if v.geom != self.geom {
            return Err(LabError::GeometryMismatch);
        }
        let geom = self.geom;
        let op = match &self.kind {
            DoubledKind::Identity => v.op.clone(),
            DoubledKind::Left(a) => a * &v.op,
            DoubledKind::Right(a) => &v.op * a,
            DoubledKind::Adjoint(h) => h.mul_dense(&v.op) - h.dense_mul(&v.op),
            DoubledKind::SiteExpectation(x) => site_expectation(&geom, &v.op, *x),
            DoubledKind::LocalMap { site, map } => apply_local_map(&geom, *site, map, &v.op),
            DoubledKind::Scaled(s, inner) => inner.apply(v)?.op * *s,
            DoubledKind::Sum(terms) => {
                let mut acc = CMat::zeros(geom.dim(), geom.dim());
                for t in terms {
                    acc += t.apply(v)?.op;
                }
                acc
            }
            DoubledKind::Product(factors) => {
                let mut cur = v.clone();
                for f in factors.iter().rev() {
                    cur = f.apply(&cur)?;
                }
                cur.op
            }
            DoubledKind::Explicit(m) => {
                return Ok(GnsVector::from_vectorized(geom, &(m * v.vectorize())));
            }
            DoubledKind::Conjugated { inner, unitary } => {
                let back = unitary.apply_inverse(v)?;
                let mid = inner.apply(&back)?;
                return unitary.apply(&mid);
            }
        };
        Ok(GnsVector { op, geom })
    }

    /// Explicit matrix in the row-major vectorized basis. The basis is
    /// orthonormal up to the global factor `d^L`, which cancels here.
    pub fn to_matrix(&self, cap: usize) -> Result<CMat> {
        let n = self.geom.dim();
        let big = n * n;
        if big > cap {
            return Err(LabError::SizeCap { dim: big, cap });
        }
        let id = linalg::identity(n);
        Ok(match &self.kind {
            DoubledKind::Identity => linalg::identity(big),
            DoubledKind::Left(a) => linalg::kron(a, &id),
            DoubledKind::Right(a) => linalg::kron(&id, &a.transpose()),
            DoubledKind::Adjoint(h) => {
                let h = h.to_dense();
                linalg::kron(&h, &id) - linalg::kron(&id, &h.transpose())
            }
            DoubledKind::Explicit(m) => m.clone(),
            DoubledKind::Scaled(s, inner) => inner.to_matrix(cap)? * *s,
            DoubledKind::Sum(terms) => {
                let mut acc = CMat::zeros(big, big);
                for t in terms {
                    acc += t.to_matrix(cap)?;
                }
                acc
            }
            DoubledKind::Product(factors) => {
                let mut acc = linalg::identity(big);
                for f in factors {
                    acc *= f.to_matrix(cap)?;
                }
                acc
            }
            _ => {
                let mut m = CMat::zeros(big, big);
                for k in 0..big {
                    let mut basis = CMat::zeros(n, n);
                    basis[(k / n, k % n)] = ONE;
                    let col = self.apply(&GnsVector { op: basis, geom: self.geom })?.vectorize();
                    m.set_column(k, &col);
                }
                m
            }
        })
    }
}

fn apply_local_map(geom: &ChainGeometry, x: usize, map: &CMat, b: &CMat) -> CMat {
    let d = geom.site_dim();
    let n = geom.dim();
    let stride = geom.stride(x);
    let mut out = CMat::zeros(n, n);
    for c0 in 0..n {
        if geom.digit(c0, x) != 0 {
            continue;
        }
        for r0 in 0..n {
            if geom.digit(r0, x) != 0 {
                continue;
            }
            let mut block = vec![ZERO; d * d];
            for c in 0..d {
                for e in 0..d {
                    block[c * d + e] = b[(r0 + c * stride, c0 + e * stride)];
                }
            }
            if block.iter().all(|z| *z == ZERO) {
                continue;
            }
            for a in 0..d {
                for bb in 0..d {
                    let row = a * d + bb;
                    let mut acc = ZERO;
                    for (col, &val) in block.iter().enumerate() {
                        acc += map[(row, col)] * val;
                    }
                    out[(r0 + a * stride, c0 + bb * stride)] = acc;
                }
            }
        }
    }
    out
}

/// `Π(A)`: left multiplication.
pub fn pi(a: &LatticeOperator) -> DoubledOperator {
    DoubledOperator::new(DoubledKind::Left(a.dense().into_owned()), *a.geometry())
}

/// `JAJ`: right multiplication by `A†`.
pub fn j_conjugate(a: &LatticeOperator) -> DoubledOperator {
    DoubledOperator::new(DoubledKind::Right(a.dense().adjoint()), *a.geometry())
}

/// The maximally entangled projector at site `x`, tensored with the identity:
/// in vectorized form the conditional expectation removing site-`x` content.
pub fn entangled_projector(x: usize, geom: &ChainGeometry) -> Result<DoubledOperator> {
    geom.check_site(x)?;
    Ok(DoubledOperator::new(DoubledKind::SiteExpectation(x), *geom))
}

/// Local (`d² × d²`) form of the entangled projector: `|1⟩⟩⟨⟨1| / d`.
pub fn entangled_projector_local(d: usize) -> CMat {
    let v = linalg::identity(d);
    let n = d * d;
    CMat::from_fn(n, n, |r, c| v[(r / d, r % d)] * v[(c / d, c % d)] / d as f64)
}

/// `Ĥ`: the commutator action `|B⟩ ↦ |HB − BH⟩`.
pub fn adjoint_generator(h: &LatticeOperator) -> Result<DoubledOperator> {
    let deviation = h.hermiticity_defect();
    if deviation > HERMITIAN_TOL {
        return Err(LabError::NotSelfAdjoint { deviation });
    }
    Ok(DoubledOperator::new(
        DoubledKind::Adjoint(Arc::new(h.storage().clone())),
        *h.geometry(),
    ))
}

/// `Ad_U` on a single site, `U ⊗ Ū` in row-major vectorization.
pub fn local_conjugation_map(u: &CMat) -> CMat {
    linalg::kron(u, &u.map(|z| z.conj()))
}

#[derive(Debug, Clone)]
pub struct WeylEigenspace {
    /// Exponent `k` of the eigenvalue `ω^k`.
    pub exponent: usize,
    pub eigenvalue: C64,
    /// Multiplicity on the single-site doubled space `M^d`.
    pub local_multiplicity: usize,
    /// Multiplicity on the full chain, `local · d^{2(L−1)}`.
    pub multiplicity: usize,
    pub projector: DoubledOperator,
}

/// Eigenprojections of `Π(U_r) J U_r J` at site `x`, i.e. of `|B⟩ ↦ |U B U†⟩`.
///
/// Eigenvalues come from a numerical Schur decomposition of the local map and
/// are checked to be `d`-th roots of unity; projectors use the exact
/// polynomial `P_k = (1/d) Σ_m ω^{−km} Ad_U^m`, valid because `Ad_U^d = 1`.
pub fn weyl_pair_projectors(r: &WeylIndex, x: usize, geom: &ChainGeometry) -> Result<Vec<WeylEigenspace>> {
    geom.check_site(x)?;
    let d = geom.site_dim();
    if r.dim() != d {
        return Err(LabError::DimensionMismatch {
            expected: d,
            found: r.dim(),
        });
    }
    let u = weyl::weyl_matrix(r)?;
    let ad = local_conjugation_map(&u);
    let mut counts = vec![0usize; d];
    for ev in linalg::general_eigenvalues(&ad) {
        let k = nearest_root_exponent(ev, d);
        let dist = (ev - weyl::root_of_unity(k as i64, d)).norm();
        if dist > 1e-10 {
            return Err(LabError::Invariant(format!(
                "eigenvalue {ev} is not a {d}-th root of unity (distance {dist:.3e})"
            )));
        }
        counts[k] += 1;
    }
    let powers: Vec<CMat> = std::iter::successors(Some(linalg::identity(d * d)), |p| Some(&ad * p))
        .take(d)
        .collect();
    let rest = geom.dim() / d;
    let mut out = Vec::new();
    for (k, &count) in counts.iter().enumerate() {
        if count == 0 {
            continue;
        }
        let mut proj = CMat::zeros(d * d, d * d);
        for (m, p) in powers.iter().enumerate() {
            proj += p * weyl::root_of_unity(-((k * m) as i64), d);
        }
        proj /= C64::from(d as f64);
        let rank = linalg::trace(&proj).re.round() as usize;
        if rank != count {
            return Err(LabError::Invariant(format!(
                "projector rank {rank} disagrees with eigenvalue count {count} for exponent {k}"
            )));
        }
        out.push(WeylEigenspace {
            exponent: k,
            eigenvalue: weyl::root_of_unity(k as i64, d),
            local_multiplicity: count,
            multiplicity: count * rest * rest,
            projector: DoubledOperator::new(DoubledKind::LocalMap { site: x, map: proj }, *geom),
        });
    }
    Ok(out)
}

fn nearest_root_exponent(z: C64, d: usize) -> usize {
    let turns = z.arg() / (2.0 * std::f64::consts::PI) * d as f64;
    (turns.round() as i64).rem_euclid(d as i64) as usize
}

/// Exact form: the Weyl basis labels `s` with `c(r, s) = k`, per exponent `k`.
pub fn weyl_pair_eigenspaces_exact(r: &WeylIndex) -> Result<Vec<(usize, Vec<WeylIndex>)>> {
    let d = r.dim();
    let mut groups: Vec<Vec<WeylIndex>> = vec![Vec::new(); d];
    for s in WeylIndex::all(d)? {
        groups[weyl::commutation_phase(r, &s)?].push(s);
    }
    Ok(groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .collect())
}

/// Weyl labels fixed by every `Ad_{U_r}`, computed with integer arithmetic.
pub fn joint_fixed_labels_exact(d: usize) -> Result<Vec<WeylIndex>> {
    let all = WeylIndex::all(d)?;
    let mut fixed = all.clone();
    for r in all.iter().filter(|r| !r.is_identity()) {
        fixed.retain(|s| weyl::commutation_phase(r, s).map(|c| c == 0).unwrap_or(false));
    }
    Ok(fixed)
}

/// Product over all `r ≠ 0` of the eigenvalue-1 projectors, as a local map.
pub fn joint_fixed_projector_local(d: usize) -> Result<CMat> {
    let geom = ChainGeometry::open(1, d)?;
    let mut acc = linalg::identity(d * d);
    for r in WeylIndex::all(d)?.into_iter().filter(|r| !r.is_identity()) {
        let spaces = weyl_pair_projectors(&r, 0, &geom)?;
        let fixed = spaces
            .iter()
            .find(|s| s.exponent == 0)
            .ok_or_else(|| LabError::Invariant("no eigenvalue 1".into()))?;
        if let DoubledKind::LocalMap { map, .. } = &fixed.projector.kind {
            acc = &acc * map;
        }
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{embed_at, embed_sites};
    use crate::linalg::max_abs_diff;
    use crate::weyl::pauli;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random(n: usize, rng: &mut ChaCha8Rng) -> CMat {
        CMat::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
    }

    fn geom(l: usize, d: usize) -> ChainGeometry {
        ChainGeometry::open(l, d).unwrap()
    }

    #[test]
    fn omega_is_normalized_and_tracial() {
        let g = geom(2, 3);
        let omega = GnsVector::omega(g);
        assert!((omega.inner(&omega) - ONE).norm() < 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = LatticeOperator::from_dense(g, random(9, &mut rng)).unwrap();
        let expect = omega.inner(&pi(&a).apply(&omega).unwrap());
        assert!((expect - a.normalized_trace()).norm() < 1e-14);
    }

    #[test]
    fn pi_examples() {
        let g = geom(2, 2);
        let omega = GnsVector::omega(g);
        let id = LatticeOperator::identity(g);
        assert_eq!(pi(&id).apply(&omega).unwrap(), omega);
        for r in WeylIndex::all(2).unwrap() {
            let u = embed_at(&weyl::weyl_matrix(&r).unwrap(), 1, &g).unwrap();
            let e = omega.inner(&pi(&u).apply(&omega).unwrap());
            let expected = if r.is_identity() { 1.0 } else { 0.0 };
            assert!((e - C64::from(expected)).norm() < 1e-15);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a = LatticeOperator::from_dense(g, random(4, &mut rng)).unwrap();
        let b = LatticeOperator::from_dense(g, random(4, &mut rng)).unwrap();
        let v = GnsVector::from_dense(g, random(4, &mut rng)).unwrap();
        let lhs = pi(&a).compose(&pi(&b)).unwrap().apply(&v).unwrap();
        let rhs = pi(&a.mul(&b).unwrap()).apply(&v).unwrap();
        assert!(lhs.distance(&rhs) < 1e-13);
    }

    #[test]
    fn j_conjugate_examples() {
        let g = geom(2, 2);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let omega = GnsVector::omega(g);
        assert_eq!(j_conjugate(&LatticeOperator::identity(g)).apply(&omega).unwrap(), omega);
        let a = LatticeOperator::from_dense(g, random(4, &mut rng)).unwrap();
        let b = LatticeOperator::from_dense(g, random(4, &mut rng)).unwrap();
        let v = GnsVector::from_dense(g, random(4, &mut rng)).unwrap();
        // left and right multiplications commute
        let lr = pi(&a).compose(&j_conjugate(&b)).unwrap().apply(&v).unwrap();
        let rl = j_conjugate(&b).compose(&pi(&a)).unwrap().apply(&v).unwrap();
        assert!(lr.distance(&rl) < 1e-13);
        // JAJ|Ω⟩ = Π(A†)|Ω⟩
        let lhs = j_conjugate(&a).apply(&omega).unwrap();
        let rhs = pi(&a.adjoint()).apply(&omega).unwrap();
        assert!(lhs.distance(&rhs) < 1e-14);
        // J(AB)J = JAJ · JBJ, the map A ↦ JA†J reverses order
        let ab = a.mul(&b).unwrap();
        let lhs = j_conjugate(&ab).apply(&v).unwrap();
        let rhs = j_conjugate(&a).compose(&j_conjugate(&b)).unwrap().apply(&v).unwrap();
        assert!(lhs.distance(&rhs) < 1e-13);
        let rev = j_conjugate(&ab.adjoint()).apply(&v).unwrap();
        let rev_rhs = j_conjugate(&b.adjoint())
            .compose(&j_conjugate(&a.adjoint()))
            .unwrap()
            .apply(&v)
            .unwrap();
        assert!(rev.distance(&rev_rhs) < 1e-13);
    }

    #[test]
    fn modular_conjugation_is_antiunitary_involution() {
        let g = geom(2, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = GnsVector::from_dense(g, random(9, &mut rng)).unwrap();
        let v = GnsVector::from_dense(g, random(9, &mut rng)).unwrap();
        let lhs = modular_conjugation(&u).inner(&modular_conjugation(&v));
        assert!((lhs - u.inner(&v).conj()).norm() < 1e-13);
        assert_eq!(modular_conjugation(&modular_conjugation(&u)), u);
    }

    #[test]
    fn entangled_projector_examples() {
        let g = geom(3, 2);
        let p = entangled_projector(1, &g).unwrap();
        let omega = GnsVector::omega(g);
        assert!(p.apply(&omega).unwrap().distance(&omega) < 1e-15);
        let x1 = GnsVector::from_operator(&embed_at(&pauli::x(), 1, &g).unwrap());
        assert_eq!(p.apply(&x1).unwrap().norm(), 0.0);
        let x2 = GnsVector::from_operator(&embed_at(&pauli::x(), 2, &g).unwrap());
        assert_eq!(p.apply(&x2).unwrap(), x2);
        assert!(matches!(entangled_projector(3, &g), Err(LabError::SiteOutOfRange { .. })));
    }

    #[test]
    fn entangled_projector_is_orthogonal_projector() {
        let g = geom(2, 2);
        let p = entangled_projector(0, &g).unwrap().to_matrix(DEFAULT_DOUBLED_CAP).unwrap();
        assert!(max_abs_diff(&(&p * &p), &p) < 1e-12);
        assert!(max_abs_diff(&p.adjoint(), &p) < 1e-12);
        // rank d^{2(L-1)}
        assert!((linalg::trace(&p).re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn local_map_matches_full_map() {
        let g = geom(2, 2);
        let local = entangled_projector_local(2);
        let lm = DoubledOperator::new(DoubledKind::LocalMap { site: 0, map: local }, g);
        let full = entangled_projector(0, &g).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let v = GnsVector::from_dense(g, random(4, &mut rng)).unwrap();
        assert!(lm.apply(&v).unwrap().distance(&full.apply(&v).unwrap()) < 1e-14);
    }

    #[test]
    fn adjoint_generator_examples() {
        let g = geom(2, 2);
        let zero = adjoint_generator(&LatticeOperator::identity(g)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let v = GnsVector::from_dense(g, random(4, &mut rng)).unwrap();
        assert!(zero.apply(&v).unwrap().norm() < 1e-15);

        let zz = embed_sites(&linalg::kron(&pauli::z(), &pauli::z()), &[0, 1], &g).unwrap();
        let h = adjoint_generator(&zz).unwrap();
        assert!(h.apply(&GnsVector::omega(g)).unwrap().norm() < 1e-15);
        let x0 = GnsVector::from_operator(&embed_at(&pauli::x(), 0, &g).unwrap());
        let out = h.apply(&x0).unwrap();
        // [Z⊗Z, X⊗1] = -2i Y⊗Z, normalized norm 2
        assert!((out.norm() - 2.0).abs() < 1e-13);

        let m = h.to_matrix(DEFAULT_DOUBLED_CAP).unwrap();
        assert!(max_abs_diff(&m, &m.adjoint()) < 1e-13);

        let bad = LatticeOperator::from_dense(g, random(4, &mut rng)).unwrap();
        assert!(matches!(adjoint_generator(&bad), Err(LabError::NotSelfAdjoint { .. })));
    }

    #[test]
    fn weyl_pair_identity_index() {
        let g = geom(2, 3);
        let spaces = weyl_pair_projectors(&WeylIndex::identity(3).unwrap(), 0, &g).unwrap();
        assert_eq!(spaces.len(), 1);
        assert_eq!(spaces[0].exponent, 0);
        let m = spaces[0].projector.to_matrix(DEFAULT_DOUBLED_CAP).unwrap();
        assert!(max_abs_diff(&m, &linalg::identity(81)) < 1e-12);
    }

    #[test]
    fn weyl_pair_qubit_single_site_multiplicities() {
        let g = geom(1, 2);
        for r in WeylIndex::all(2).unwrap().into_iter().filter(|r| !r.is_identity()) {
            let spaces = weyl_pair_projectors(&r, 0, &g).unwrap();
            let mut got: Vec<(usize, usize)> = spaces.iter().map(|s| (s.exponent, s.multiplicity)).collect();
            got.sort();
            assert_eq!(got, vec![(0, 2), (1, 2)]);
            // oracle: direct Hermitian eigen-decomposition of the 4×4 map, which
            // is real symmetric here because the qubit Weyl operators are ±Hermitian
            let u = weyl::weyl_matrix(&r).unwrap();
            let ad = local_conjugation_map(&u);
            let herm = (&ad + ad.adjoint()) * C64::from(0.5);
            let eig = linalg::HermitianEigen::new(&herm);
            let plus = eig.values.iter().filter(|v| (*v - 1.0).abs() < 1e-12).count();
            let minus = eig.values.iter().filter(|v| (*v + 1.0).abs() < 1e-12).count();
            assert_eq!((plus, minus), (2, 2));
        }
    }

    #[test]
    fn weyl_pair_projectors_resolve_identity() {
        for d in [2, 3] {
            let g = geom(2, d);
            for r in WeylIndex::all(d).unwrap() {
                let spaces = weyl_pair_projectors(&r, 1, &g).unwrap();
                let total: usize = spaces.iter().map(|s| s.multiplicity).sum();
                assert_eq!(total, d.pow(4));
                let mut sum = CMat::zeros(d * d, d * d);
                for s in &spaces {
                    if let DoubledKind::LocalMap { map, .. } = s.projector.kind() {
                        assert!(max_abs_diff(&(map * map), map) < 1e-12);
                        sum += map;
                    }
                }
                assert!(max_abs_diff(&sum, &linalg::identity(d * d)) < 1e-12);
            }
        }
    }

    #[test]
    fn joint_fixed_space_is_entangled_projector() {
        for d in [2, 3] {
            let joint = joint_fixed_projector_local(d).unwrap();
            assert!(max_abs_diff(&joint, &entangled_projector_local(d)) < 1e-10);
            let labels = joint_fixed_labels_exact(d).unwrap();
            assert_eq!(labels, vec![WeylIndex::identity(d).unwrap()]);
        }
        // full-chain dimension of the joint fixed space: d^{2(L-1)}
        let g = geom(2, 2);
        let p = entangled_projector(0, &g).unwrap().to_matrix(DEFAULT_DOUBLED_CAP).unwrap();
        assert_eq!(linalg::trace(&p).re.round() as usize, 2usize.pow(2));
    }

    #[test]
    fn exact_eigenspaces_match_numeric() {
        let g = geom(1, 3);
        for r in WeylIndex::all(3).unwrap() {
            let exact = weyl_pair_eigenspaces_exact(&r).unwrap();
            let numeric = weyl_pair_projectors(&r, 0, &g).unwrap();
            let e: Vec<(usize, usize)> = exact.iter().map(|(k, v)| (*k, v.len())).collect();
            let n: Vec<(usize, usize)> = numeric.iter().map(|s| (s.exponent, s.local_multiplicity)).collect();
            assert_eq!(e, n);
        }
    }

    #[test]
    fn faithfulness_on_weyl_basis() {
        // Π(A)|Ω⟩ = 0 iff A = 0, checked through the Gram matrix of the image
        // of a spanning basis being nonsingular.
        for (l, d) in [(2, 2), (3, 2), (2, 3)] {
            let g = geom(l, d);
            let omega = GnsVector::omega(g);
            let n = g.dim();
            let mut images = Vec::new();
            for k in 0..n * n {
                let mut b = CMat::zeros(n, n);
                b[(k / n, k % n)] = ONE;
                let a = LatticeOperator::from_dense(g, b).unwrap();
                images.push(pi(&a).apply(&omega).unwrap());
            }
            let gram = CMat::from_fn(n * n, n * n, |i, j| images[i].inner(&images[j]));
            let eig = linalg::HermitianEigen::new(&gram);
            assert!(eig.values[0] > 1e-12);
        }
    }
}
