//! Heisenberg-picture time evolution and the dynamical diagnostics built on it.
//!
//! `τ_t(A) = e^{iHt} A e^{−iHt}`; on GNS vectors this is `e^{itĤ}` with
//! `Ĥ = [H, ·]`. Two engines are available: dense eigendecomposition of `H`
//! and Lanczos propagation of the vectorized operator under `Ĥ`.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::gns::{entangled_projector, DoubledOperator, GnsVector, SuperUnitary, HERMITIAN_TOL};
use crate::lattice::{commutator_norm, shift, LatticeOperator};
use crate::linalg::{self, CMat, HermitianEigen, Storage, C64};

/// Chains with `d^L` above this use Krylov propagation under `Method::Auto`.
pub const KRYLOV_DIM_THRESHOLD: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    Krylov,
    Auto,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KrylovSettings {
    /// Target residual per step, relative to the vector norm.
    pub tolerance: f64,
    /// Largest Krylov subspace before the step is split.
    pub max_subspace: usize,
    /// Smallest admissible step, relative to the requested time.
    pub min_step_fraction: f64,
}

impl Default for KrylovSettings {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_subspace: 40,
            min_step_fraction: 1e-8,
        }
    }
}

#[derive(Debug, Clone)]
enum Engine {
    Exact(HermitianEigen),
    Krylov(Arc<Storage>),
}

/// Implements `τ_t` for a fixed Hamiltonian.
#[derive(Debug, Clone)]
pub struct Propagator {
    hamiltonian: LatticeOperator,
    engine: Engine,
    krylov: KrylovSettings,
    times: Vec<f64>,
}

impl Propagator {
    pub fn new(h: &LatticeOperator, method: Method) -> Result<Self> {
        Self::with_settings(h, method, KrylovSettings::default(), Vec::new())
    }

    pub fn with_settings(h: &LatticeOperator, method: Method, krylov: KrylovSettings, times: Vec<f64>) -> Result<Self> {
        let deviation = h.hermiticity_defect();
        if deviation > HERMITIAN_TOL {
            return Err(LabError::NotSelfAdjoint { deviation });
        }
        let resolved = match method {
            Method::Auto if h.dim() > KRYLOV_DIM_THRESHOLD => Method::Krylov,
            Method::Auto => Method::Exact,
            m => m,
        };
        let engine = match resolved {
            Method::Krylov => Engine::Krylov(Arc::new(h.storage().clone())),
            _ => Engine::Exact(HermitianEigen::new(&h.dense())),
        };
        Ok(Self {
            hamiltonian: h.clone(),
            engine,
            krylov,
            times,
        })
    }

    pub fn hamiltonian(&self) -> &LatticeOperator {
        &self.hamiltonian
    }

    pub fn method(&self) -> Method {
        match self.engine {
            Engine::Exact(_) => Method::Exact,
            Engine::Krylov(_) => Method::Krylov,
        }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Eigendecomposition of `H`, computed on demand for Krylov propagators.
    pub fn eigen(&self) -> HermitianEigen {
        match &self.engine {
            Engine::Exact(e) => e.clone(),
            Engine::Krylov(_) => HermitianEigen::new(&self.hamiltonian.dense()),
        }
    }

    /// `e^{iHt}`; only available for the exact engine.
    pub fn unitary(&self, t: f64) -> Option<CMat> {
        match &self.engine {
            Engine::Exact(e) => Some(e.unitary(t)),
            Engine::Krylov(_) => None,
        }
    }

    /// `‖e^{iHt} (e^{iHt})† − 1‖` (spectral norm).
    pub fn unitarity_defect(&self, t: f64) -> Option<f64> {
        let u = self.unitary(t)?;
        let n = u.nrows();
        Some(linalg::spectral_norm(&(&u * u.adjoint() - linalg::identity(n))))
    }

    /// `τ_t(B)` on a raw matrix.
    pub fn evolve_matrix(&self, b: &CMat, t: f64) -> Result<CMat> {
        if t == 0.0 {
            return Ok(b.clone());
        }
        match &self.engine {
            Engine::Exact(eig) => {
                let mut m = eig.to_eigenbasis(b);
                for (i, ei) in eig.values.iter().enumerate() {
                    for (j, ej) in eig.values.iter().enumerate() {
                        m[(i, j)] *= C64::from_polar(1.0, (ei - ej) * t);
                    }
                }
                Ok(eig.from_eigenbasis(&m))
            }
            Engine::Krylov(h) => krylov_adjoint_exp(h, b, t, &self.krylov),
        }
    }

    /// `τ_t(A)` with support re-estimated from conditional-expectation residuals.
    pub fn evolve_operator(&self, a: &LatticeOperator, t: f64) -> Result<LatticeOperator> {
        if a.geometry() != self.hamiltonian.geometry() {
            return Err(LabError::GeometryMismatch);
        }
        if t == 0.0 {
            return Ok(a.clone());
        }
        let m = self.evolve_matrix(&a.dense(), t)?;
        LatticeOperator::from_dense(*a.geometry(), m)
    }

    /// `e^{itĤ}|B⟩`.
    pub fn evolve_vector(&self, v: &GnsVector, t: f64) -> Result<GnsVector> {
        if v.geometry() != self.hamiltonian.geometry() {
            return Err(LabError::GeometryMismatch);
        }
        GnsVector::from_dense(*v.geometry(), self.evolve_matrix(v.operator(), t)?)
    }
}

/// `e^{itĤ}` packaged as a unitary on the GNS space.
#[derive(Debug, Clone)]
pub struct PropagationStep {
    propagator: Arc<Propagator>,
    t: f64,
}

impl PropagationStep {
    pub fn new(propagator: Arc<Propagator>, t: f64) -> Self {
        Self { propagator, t }
    }
}

impl SuperUnitary for PropagationStep {
    fn apply(&self, v: &GnsVector) -> Result<GnsVector> {
        self.propagator.evolve_vector(v, self.t)
    }

    fn apply_inverse(&self, v: &GnsVector) -> Result<GnsVector> {
        self.propagator.evolve_vector(v, -self.t)
    }
}

/// Either kind of doubled-space object.
#[derive(Debug, Clone)]
pub enum DoubledObject {
    Vector(GnsVector),
    Operator(DoubledOperator),
}

/// Evolves a GNS vector by `e^{itĤ}` or a superoperator `S` to `e^{itĤ} S e^{−itĤ}`.
pub fn evolve_doubled(p: &Arc<Propagator>, s: &DoubledObject, t: f64) -> Result<DoubledObject> {
    Ok(match s {
        DoubledObject::Vector(v) => DoubledObject::Vector(p.evolve_vector(v, t)?),
        DoubledObject::Operator(op) => {
            DoubledObject::Operator(op.conjugated(Arc::new(PropagationStep::new(Arc::clone(p), t))))
        }
    })
}

/// `‖(1 − P_x) τ_t(P_x) ψ‖` for the entangled projector at site `x`.
pub fn projector_leak(p: &Arc<Propagator>, x: usize, psi: &GnsVector, t: f64) -> Result<f64> {
    let geom = *psi.geometry();
    let proj = entangled_projector(x, &geom)?;
    let evolved = match evolve_doubled(p, &DoubledObject::Operator(proj.clone()), t)? {
        DoubledObject::Operator(op) => op,
        DoubledObject::Vector(_) => unreachable!(),
    };
    let out = proj.complement().apply(&evolved.apply(psi)?)?;
    Ok(out.norm())
}

/// Lanczos propagation of `e^{itĤ}B` with `Ĥ B = HB − BH`.
fn krylov_adjoint_exp(h: &Storage, b: &CMat, t: f64, settings: &KrylovSettings) -> Result<CMat> {
    let apply = |v: &CMat| h.mul_dense(v) - h.dense_mul(v);
    krylov_exp(apply, b, t, settings)
}

/// `e^{itL} v` for an operator `L` Hermitian in the Frobenius inner product.
pub fn krylov_exp(apply: impl Fn(&CMat) -> CMat, v: &CMat, t: f64, settings: &KrylovSettings) -> Result<CMat> {
    let norm0 = linalg::frobenius_sq(v).sqrt();
    if norm0 == 0.0 || t == 0.0 {
        return Ok(v.clone());
    }
    let min_step = t.abs() * settings.min_step_fraction;
    let mut current = v.clone();
    let mut remaining = t;
    let mut step = t;
    while remaining != 0.0 {
        if step.abs() > remaining.abs() {
            step = remaining;
        }
        match lanczos_step(&apply, &current, step, settings) {
            Ok(next) => {
                current = next;
                remaining -= step;
                if remaining.abs() <= f64::EPSILON * t.abs() {
                    remaining = 0.0;
                }
            }
            Err(residual) => {
                step *= 0.5;
                if step.abs() < min_step {
                    return Err(LabError::KrylovNonConvergence { residual });
                }
            }
        }
    }
    Ok(current)
}

/// One Lanczos step with full reorthogonalization. `Err` carries the residual
/// estimate when the subspace cap is reached without convergence.
fn lanczos_step(apply: &impl Fn(&CMat) -> CMat, v: &CMat, t: f64, settings: &KrylovSettings) -> std::result::Result<CMat, f64> {
    let beta0 = linalg::frobenius_sq(v).sqrt();
    let mut basis: Vec<CMat> = vec![v / C64::from(beta0)];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    loop {
        let j = basis.len() - 1;
        let mut w = apply(&basis[j]);
        let alpha = linalg::hs_inner(&basis[j], &w).re;
        alphas.push(alpha);
        for q in &basis {
            let c = linalg::hs_inner(q, &w);
            w -= q * c;
        }
        let beta = linalg::frobenius_sq(&w).sqrt();
        let m = alphas.len();
        let coeffs = tridiagonal_exp(&alphas, &betas, t);
        let breakdown = beta <= 1e-13 * (alpha.abs() + betas.last().copied().unwrap_or(0.0) + 1.0);
        if breakdown {
            return Ok(combine(&basis, &coeffs, beta0));
        }
        let residual = beta * coeffs[m - 1].norm() * t.abs().max(1.0);
        if residual <= settings.tolerance {
            return Ok(combine(&basis, &coeffs, beta0));
        }
        if m >= settings.max_subspace {
            return Err(residual);
        }
        betas.push(beta);
        basis.push(w / C64::from(beta));
    }
}

/// `e^{itT} e_1` for the real symmetric tridiagonal `T`.
fn tridiagonal_exp(alphas: &[f64], betas: &[f64], t: f64) -> Vec<C64> {
    let m = alphas.len();
    let mut tm = nalgebra::DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        tm[(i, i)] = alphas[i];
        if i + 1 < m {
            tm[(i, i + 1)] = betas[i];
            tm[(i + 1, i)] = betas[i];
        }
    }
    let eig = nalgebra::SymmetricEigen::new(tm);
    (0..m)
        .map(|i| {
            (0..m)
                .map(|k| {
                    let phase = C64::from_polar(1.0, eig.eigenvalues[k] * t);
                    phase * eig.eigenvectors[(i, k)] * eig.eigenvectors[(0, k)]
                })
                .sum()
        })
        .collect()
}

fn combine(basis: &[CMat], coeffs: &[C64], scale: f64) -> CMat {
    let mut out = CMat::zeros(basis[0].nrows(), basis[0].ncols());
    for (q, c) in basis.iter().zip(coeffs) {
        out += q * (*c * scale);
    }
    out
}

/// `‖[τ_t(σ_x A), B]‖` over a grid of separations and times.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LightConeScan {
    pub separations: Vec<i64>,
    pub times: Vec<f64>,
    /// `values[i][j]` belongs to `separations[i]`, `times[j]`.
    pub values: Vec<Vec<f64>>,
}

impl LightConeScan {
    pub fn value(&self, x: i64, t: f64) -> Option<f64> {
        let i = self.separations.iter().position(|&s| s == x)?;
        let j = self.times.iter().position(|&s| s == t)?;
        Some(self.values[i][j])
    }
}

pub fn light_cone_scan(
    p: &Propagator,
    a: &LatticeOperator,
    b: &LatticeOperator,
    xs: &[i64],
    ts: &[f64],
) -> Result<LightConeScan> {
    let geom = a.geometry();
    if geom.sites() < 4 {
        return Err(LabError::ChainTooShort {
            needed: 4,
            sites: geom.sites(),
        });
    }
    let shifted: Vec<LatticeOperator> = xs.iter().map(|&x| shift(a, x)).collect::<Result<_>>()?;
    let cells: Vec<(usize, usize)> = (0..xs.len()).flat_map(|i| (0..ts.len()).map(move |j| (i, j))).collect();
    let flat: Vec<f64> = cells
        .par_iter()
        .map(|&(i, j)| {
            let evolved = p.evolve_operator(&shifted[i], ts[j])?;
            commutator_norm(&evolved, b)
        })
        .collect::<Result<_>>()?;
    let values = flat.chunks(ts.len().max(1)).map(|c| c.to_vec()).collect();
    Ok(LightConeScan {
        separations: xs.to_vec(),
        times: ts.to_vec(),
        values,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CesaroMean {
    pub running: Vec<f64>,
    pub value: f64,
}

/// Running trapezoidal average `(1/T)∫_{t0}^{T} f` on a uniform grid.
pub fn cesaro_mean(times: &[f64], series: &[f64]) -> Result<CesaroMean> {
    if times.len() != series.len() || times.is_empty() {
        return Err(LabError::InvalidArgument("time grid and series must have equal, nonzero length".into()));
    }
    if times.len() > 1 {
        let dt = times[1] - times[0];
        if dt <= 0.0 {
            return Err(LabError::InvalidArgument("time grid must be increasing".into()));
        }
        for w in times.windows(2) {
            if ((w[1] - w[0]) - dt).abs() > 1e-9 * dt.max(1.0) {
                return Err(LabError::InvalidArgument("time grid must be uniform".into()));
            }
        }
    }
    let mut running = Vec::with_capacity(series.len());
    running.push(series[0]);
    let mut integral = 0.0;
    for k in 1..series.len() {
        integral += 0.5 * (series[k] + series[k - 1]) * (times[k] - times[k - 1]);
        running.push(integral / (times[k] - times[0]));
    }
    let value = *running.last().unwrap();
    Ok(CesaroMean { running, value })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{assemble, emch_radin, heisenberg, onsite_model, random_hermitian};
    use crate::lattice::{embed_at, ChainGeometry};
    use crate::linalg::max_abs_diff;
    use crate::weyl::pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn heis(l: usize) -> (ChainGeometry, LatticeOperator) {
        let g = ChainGeometry::periodic(l, 2).unwrap();
        (g, assemble(&heisenberg(g).unwrap()).unwrap())
    }

    #[test]
    fn time_zero_is_identity() {
        let (g, h) = heis(4);
        let p = Propagator::new(&h, Method::Exact).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        assert_eq!(p.evolve_operator(&x0, 0.0).unwrap(), x0);
    }

    #[test]
    fn emch_radin_conserves_z() {
        let g = ChainGeometry::periodic(5, 2).unwrap();
        let h = assemble(&emch_radin(g).unwrap()).unwrap();
        let p = Propagator::new(&h, Method::Exact).unwrap();
        let z0 = embed_at(&pauli::z(), 0, &g).unwrap();
        for t in [0.3, 1.0, 7.5] {
            let e = p.evolve_operator(&z0, t).unwrap();
            assert_eq!(e.dense().as_ref(), z0.dense().as_ref());
        }
        // τ_t(X_0) spreads to the neighbours only
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let e = p.evolve_operator(&x0, 0.4).unwrap();
        assert_eq!(e.support().iter().copied().collect::<Vec<_>>(), vec![0, 1, 4]);
    }

    #[test]
    fn heisenberg_two_site_overlap_matches_closed_form() {
        // On two periodic sites H = 2(XX+YY+ZZ) = 4·SWAP − 2, so
        // τ_t(X_0) = cos²(4t) X_0 + sin²(4t) X_1 + (i/2) sin(8t)[SWAP, X_0]
        // and the normalized overlap with X_0 is cos²(4t).
        let (g, h) = heis(2);
        let p = Propagator::new(&h, Method::Exact).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let v0 = GnsVector::from_operator(&x0);
        for t in [0.1, 0.25, 0.9] {
            let e = GnsVector::from_operator(&p.evolve_operator(&x0, t).unwrap());
            let overlap = v0.inner(&e);
            assert!((overlap.re - (4.0 * t).cos().powi(2)).abs() < 1e-12);
            assert!(overlap.im.abs() < 1e-12);
        }
    }

    #[test]
    fn unitarity_group_law_and_spectrum() {
        let (g, h) = heis(4);
        let p = Propagator::new(&h, Method::Exact).unwrap();
        for t in [0.0, 0.5, 2.0] {
            assert!(p.unitarity_defect(t).unwrap() < 1e-9);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let a = LatticeOperator::from_dense(g, random_hermitian(16, &mut rng)).unwrap();
        let direct = p.evolve_operator(&a, 1.1).unwrap();
        let stepped = p.evolve_operator(&p.evolve_operator(&a, 0.4).unwrap(), 0.7).unwrap();
        assert!(max_abs_diff(&direct.dense(), &stepped.dense()) < 1e-8);
        let before = HermitianEigen::new(&a.dense()).values;
        let after = HermitianEigen::new(&direct.dense()).values;
        for (x, y) in before.iter().zip(&after) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn krylov_matches_exact() {
        let (g, h) = heis(6);
        let exact = Propagator::new(&h, Method::Exact).unwrap();
        let krylov = Propagator::new(&h, Method::Krylov).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        for t in [0.2, 1.0, 3.0] {
            let a = exact.evolve_operator(&x0, t).unwrap();
            let b = krylov.evolve_operator(&x0, t).unwrap();
            assert!(max_abs_diff(&a.dense(), &b.dense()) < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn evolution_commutes_with_shift() {
        let (g, h) = heis(5);
        let p = Propagator::new(&h, Method::Exact).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let lhs = p.evolve_operator(&shift(&x0, 2).unwrap(), 0.8).unwrap();
        let rhs = shift(&p.evolve_operator(&x0, 0.8).unwrap(), 2).unwrap();
        assert!(max_abs_diff(&lhs.dense(), &rhs.dense()) < 1e-9);
    }

    #[test]
    fn rejects_non_hermitian() {
        let g = ChainGeometry::open(2, 2).unwrap();
        let mut m = CMat::zeros(4, 4);
        m[(0, 1)] = linalg::ONE;
        let a = LatticeOperator::from_dense(g, m).unwrap();
        assert!(matches!(Propagator::new(&a, Method::Exact), Err(LabError::NotSelfAdjoint { .. })));
    }

    #[test]
    fn krylov_non_convergence_is_reported() {
        let (_, h) = heis(4);
        let settings = KrylovSettings {
            tolerance: 0.0,
            max_subspace: 2,
            min_step_fraction: 0.1,
        };
        let p = Propagator::with_settings(&h, Method::Krylov, settings, vec![]).unwrap();
        let x0 = embed_at(&pauli::x(), 0, h.geometry()).unwrap();
        assert!(matches!(
            p.evolve_operator(&x0, 5.0),
            Err(LabError::KrylovNonConvergence { .. })
        ));
    }

    #[test]
    fn light_cone_examples() {
        let g = ChainGeometry::periodic(6, 2).unwrap();
        let h = assemble(&emch_radin(g).unwrap()).unwrap();
        let p = Propagator::new(&h, Method::Exact).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let scan = light_cone_scan(&p, &x0, &x0, &[0, 1, 2, 3], &[0.0, 0.5, 1.5]).unwrap();
        for &x in &[1, 2, 3] {
            assert_eq!(scan.value(x, 0.0), Some(0.0));
        }
        for &x in &[2, 3] {
            for &t in &[0.5, 1.5] {
                assert_eq!(scan.value(x, t), Some(0.0));
            }
        }
        assert!(scan.value(1, 0.5).unwrap() > 0.1);
        let short = ChainGeometry::periodic(3, 2).unwrap();
        let hs = assemble(&emch_radin(short).unwrap()).unwrap();
        let ps = Propagator::new(&hs, Method::Exact).unwrap();
        let xs0 = embed_at(&pauli::x(), 0, &short).unwrap();
        assert!(matches!(
            light_cone_scan(&ps, &xs0, &xs0, &[0], &[0.0]),
            Err(LabError::ChainTooShort { .. })
        ));
        let open = ChainGeometry::open(4, 2).unwrap();
        let ho = assemble(&emch_radin(open).unwrap()).unwrap();
        let po = Propagator::new(&ho, Method::Exact).unwrap();
        let xo = embed_at(&pauli::x(), 0, &open).unwrap();
        assert!(matches!(
            light_cone_scan(&po, &xo, &xo, &[5], &[0.0]),
            Err(LabError::SupportLeavesChain { .. })
        ));
    }

    #[test]
    fn heisenberg_light_cone_profile() {
        // regression values; dense numpy eigendecomposition agrees to 1e-9
        let geom = ChainGeometry::periodic(8, 2).unwrap();
        let p = Propagator::new(&assemble(&heisenberg(geom).unwrap()).unwrap(), Method::Exact).unwrap();
        let a = embed_at(&pauli::x(), 0, &geom).unwrap();
        let scan = light_cone_scan(&p, &a, &a, &[1, 2, 3, 4], &[0.5]).unwrap();
        let frozen = [1.9976962825838929, 1.6457123848936352, 1.051070365329018, 0.6073408783346039];
        for (x, v) in (1..=4).zip(frozen) {
            assert!((scan.value(x, 0.5).unwrap() - v).abs() < 1e-8, "x = {x}");
        }
        let profile: Vec<f64> = (1..=4).map(|x| scan.value(x, 0.5).unwrap()).collect();
        assert!(profile.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn heisenberg_projector_leak() {
        let geom = ChainGeometry::periodic(6, 2).unwrap();
        let p = Arc::new(Propagator::new(&assemble(&heisenberg(geom).unwrap()).unwrap(), Method::Exact).unwrap());
        let psi = GnsVector::from_operator(&embed_at(&pauli::x(), 0, &geom).unwrap()).normalized();
        let leak = projector_leak(&p, 0, &psi, 1.0).unwrap();
        assert!((leak - 0.5276479223579853).abs() < 1e-9);
        assert!(leak > 0.1);
        assert!(projector_leak(&p, 0, &psi, 0.0).unwrap() < 1e-14);
    }

    #[test]
    fn cesaro_examples() {
        let times: Vec<f64> = (0..=1000).map(|k| k as f64 * 0.01).collect();
        let constant = vec![0.7; times.len()];
        assert!((cesaro_mean(&times, &constant).unwrap().value - 0.7).abs() < 1e-14);
        let omega = 3.0;
        let cosine: Vec<f64> = times.iter().map(|t| (omega * t).cos()).collect();
        let mean = cesaro_mean(&times, &cosine).unwrap();
        for (k, m) in mean.running.iter().enumerate().skip(1) {
            let big_t = times[k];
            // analytic: sin(ωT)/(ωT), plus the trapezoid error
            assert!(m.abs() <= 2.0 / (omega * big_t) + 1e-4);
            assert!((m - (omega * big_t).sin() / (omega * big_t)).abs() < 1e-4);
        }
        assert!(cesaro_mean(&[0.0, 1.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
    }

    #[test]
    fn doubled_evolution_examples() {
        let g = ChainGeometry::periodic(4, 2).unwrap();
        let h = assemble(&heisenberg(g).unwrap()).unwrap();
        let p = Arc::new(Propagator::new(&h, Method::Exact).unwrap());
        let omega = GnsVector::omega(g);
        match evolve_doubled(&p, &DoubledObject::Vector(omega.clone()), 1.3).unwrap() {
            DoubledObject::Vector(v) => assert!(v.distance(&omega) < 1e-12),
            _ => panic!("kind changed"),
        }

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let onsite = assemble(&onsite_model(random_hermitian(2, &mut rng), g).unwrap()).unwrap();
        let po = Arc::new(Propagator::new(&onsite, Method::Exact).unwrap());
        let proj = entangled_projector(1, &g).unwrap();
        let evolved = match evolve_doubled(&po, &DoubledObject::Operator(proj.clone()), 0.9).unwrap() {
            DoubledObject::Operator(op) => op,
            _ => panic!("kind changed"),
        };
        let a = evolved.to_matrix(4096).unwrap();
        let b = proj.to_matrix(4096).unwrap();
        assert!(max_abs_diff(&a, &b) < 1e-12);
    }
}
