//! Spectrum of the doubled generator `Ĥ` and return-to-equilibrium series.
//!
//! The eigenvalues of `Ĥ = H ⊗ 1 − 1 ⊗ Hᵀ` are the differences `E_i − E_j`
//! with eigenvectors `|i⟩⟨j|`. `generator_spectrum` diagonalizes the doubled
//! matrix explicitly and checks it against that difference set; everything
//! else works in the eigenbasis of `H`.

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::gns::{GnsVector, DEFAULT_DOUBLED_CAP};
use crate::hamiltonians::{assemble, HamiltonianSpec};
use crate::lattice::{shift, LatticeOperator};
use crate::linalg::{self, CMat, HermitianEigen, C64, ZERO};

/// Frequencies `|E_i − E_j|` at or below this are treated as zero.
pub const ZERO_FREQUENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeOverlap {
    pub label: String,
    /// `‖P_0 v‖² / ‖v‖²`.
    pub zero_weight: f64,
    /// Weight of `v` on each distinct eigenvalue of `Ĥ`, eigenvalues ascending.
    pub profile: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSpacing {
    pub levels: usize,
    /// Mean of `min(s_i, s_{i+1}) / max(s_i, s_{i+1})` over distinct levels of `H`.
    pub mean_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub model: String,
    /// Eigenvalues of `Ĥ`, ascending, with multiplicity.
    pub eigenvalues: Vec<f64>,
    pub zero_multiplicity: usize,
    /// Largest deviation between the sorted spectrum and the sorted difference set.
    pub difference_set_error: f64,
    /// Largest deviation between the spectrum and its negation.
    pub symmetry_error: f64,
    pub overlaps: Vec<ProbeOverlap>,
    pub level_spacing: LevelSpacing,
}

fn check_doubled_cap(dim: usize) -> Result<()> {
    if dim * dim > DEFAULT_DOUBLED_CAP {
        return Err(LabError::SizeCap {
            dim: dim * dim,
            cap: DEFAULT_DOUBLED_CAP,
        });
    }
    Ok(())
}

/// `H ⊗ 1 − 1 ⊗ Hᵀ`, the row-major matrix of `B ↦ HB − BH`.
pub fn doubled_generator_matrix(h: &CMat) -> CMat {
    let n = h.nrows();
    let id = linalg::identity(n);
    linalg::kron(h, &id) - linalg::kron(&id, &h.transpose())
}

fn sorted_differences(values: &[f64]) -> Vec<f64> {
    let mut diffs: Vec<f64> = values.iter().flat_map(|a| values.iter().map(move |b| a - b)).collect();
    diffs.sort_by(f64::total_cmp);
    diffs
}

pub fn generator_spectrum(h: &HamiltonianSpec, probes: &[(String, LatticeOperator)]) -> Result<SpectrumReport> {
    let hop = assemble(h)?;
    check_doubled_cap(hop.dim())?;
    let hd = hop.dense();
    let mut eigenvalues: Vec<f64> = doubled_generator_matrix(&hd).symmetric_eigenvalues().iter().copied().collect();
    eigenvalues.sort_by(f64::total_cmp);

    let eig = HermitianEigen::new(&hd);
    let diffs = sorted_differences(&eig.values);
    let difference_set_error = eigenvalues
        .iter()
        .zip(&diffs)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let symmetry_error = eigenvalues
        .iter()
        .zip(eigenvalues.iter().rev())
        .map(|(a, b)| (a + b).abs())
        .fold(0.0, f64::max);
    let zero_multiplicity = eigenvalues.iter().filter(|e| e.abs() <= ZERO_FREQUENCY_TOL).count();

    let clusters = cluster_levels(&diffs);
    let overlaps = probes
        .iter()
        .map(|(label, a)| {
            let v = eig.to_eigenbasis(&a.dense());
            let total = linalg::frobenius_sq(&v);
            let mut weights = vec![0.0; clusters.len()];
            for (i, ei) in eig.values.iter().enumerate() {
                for (j, ej) in eig.values.iter().enumerate() {
                    let w = v[(i, j)].norm_sqr();
                    if w > 0.0 {
                        weights[cluster_index(&clusters, ei - ej)] += w;
                    }
                }
            }
            let scale = if total > 0.0 { 1.0 / total } else { 0.0 };
            let profile: Vec<(f64, f64)> = clusters.iter().zip(&weights).map(|(&c, &w)| (c, w * scale)).collect();
            let zero_weight = profile
                .iter()
                .filter(|(c, _)| c.abs() <= ZERO_FREQUENCY_TOL)
                .map(|(_, w)| w)
                .sum();
            ProbeOverlap {
                label: label.clone(),
                zero_weight,
                profile,
            }
        })
        .collect();

    Ok(SpectrumReport {
        model: h.name().to_string(),
        eigenvalues,
        zero_multiplicity,
        difference_set_error,
        symmetry_error,
        overlaps,
        level_spacing: level_spacing(&eig.values),
    })
}

/// Representatives of the distinct values of a sorted list, merged within
/// `ZERO_FREQUENCY_TOL`; a cluster containing 0 is represented by exactly 0.
fn cluster_levels(sorted: &[f64]) -> Vec<f64> {
    let mut reps: Vec<f64> = Vec::new();
    let mut start = f64::NAN;
    for &x in sorted {
        if reps.is_empty() || x - start > ZERO_FREQUENCY_TOL {
            reps.push(x);
            start = x;
        }
    }
    for r in reps.iter_mut() {
        if r.abs() <= ZERO_FREQUENCY_TOL {
            *r = 0.0;
        }
    }
    reps
}

fn cluster_index(reps: &[f64], x: f64) -> usize {
    let pos = reps.partition_point(|&r| r < x);
    let candidates = [pos.saturating_sub(1), pos.min(reps.len() - 1)];
    candidates
        .into_iter()
        .min_by(|&a, &b| (reps[a] - x).abs().total_cmp(&(reps[b] - x).abs()))
        .unwrap()
}

fn level_spacing(values: &[f64]) -> LevelSpacing {
    let levels = cluster_levels(values);
    let gaps: Vec<f64> = levels.windows(2).map(|w| w[1] - w[0]).collect();
    let ratios: Vec<f64> = gaps.windows(2).map(|w| w[0].min(w[1]) / w[0].max(w[1])).collect();
    let mean_ratio = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    LevelSpacing {
        levels: levels.len(),
        mean_ratio,
    }
}

/// How the perturbed GNS vector `|B⟩ = B|Ω⟩` is produced.
#[derive(Debug, Clone)]
pub enum Perturbation {
    /// `B = W` unitary. The perturbed state is again tracial.
    Unitary(LatticeOperator),
    /// `B` arbitrary, rescaled so that `‖B|Ω⟩‖ = 1`.
    Vector(LatticeOperator),
    /// `B = √ρ` for a positive `ρ`, rescaled so that `ω(ρ) = 1`.
    Density(LatticeOperator),
}

impl Perturbation {
    /// The density `ρ = BB†` of the perturbed state `A ↦ ⟨B|AB⟩ = ω(ρA)`.
    pub fn density(&self) -> Result<LatticeOperator> {
        match self {
            Perturbation::Unitary(w) => {
                let n = w.dim();
                let defect = linalg::max_abs_diff(&(w.dense().as_ref() * w.dense().adjoint()), &linalg::identity(n));
                if defect > 1e-10 {
                    return Err(LabError::InvalidArgument(format!(
                        "perturbation is not unitary (defect {defect:.3e})"
                    )));
                }
                Ok(LatticeOperator::identity(*w.geometry()))
            }
            Perturbation::Vector(b) => {
                let norm = GnsVector::from_operator(b).norm();
                if norm == 0.0 {
                    return Err(LabError::InvalidArgument("perturbation vector is zero".into()));
                }
                b.mul(&b.adjoint()).map(|r| r.scale(C64::from(1.0 / (norm * norm))))
            }
            Perturbation::Density(rho) => {
                let defect = rho.hermiticity_defect();
                if defect > 1e-10 {
                    return Err(LabError::NotSelfAdjoint { deviation: defect });
                }
                let eig = HermitianEigen::new(&rho.dense());
                if eig.values.first().copied().unwrap_or(0.0) < -1e-12 {
                    return Err(LabError::InvalidArgument("perturbation density is not positive".into()));
                }
                let tr = rho.normalized_trace().re;
                if tr <= 0.0 {
                    return Err(LabError::InvalidArgument("perturbation density has zero trace".into()));
                }
                Ok(rho.scale(C64::from(1.0 / tr)))
            }
        }
    }

    /// `B` with `‖B|Ω⟩‖ = 1`.
    pub fn vector(&self) -> Result<GnsVector> {
        match self {
            Perturbation::Unitary(w) => {
                self.density()?;
                Ok(GnsVector::from_operator(w))
            }
            Perturbation::Vector(b) => Ok(GnsVector::from_operator(b).normalized()),
            Perturbation::Density(_) => {
                let rho = self.density()?;
                let eig = HermitianEigen::new(&rho.dense());
                let root = eig.apply_fn(|e| C64::from(e.max(0.0).sqrt()));
                GnsVector::from_dense(*rho.geometry(), root)
            }
        }
    }
}

/// `f(t) = ω(ρ τ_t(a)) = Σ_{ij} c_{ij} e^{i(E_i − E_j)t}` in modal form.
#[derive(Debug, Clone)]
pub struct ModalSeries {
    frequencies: Vec<f64>,
    coefficients: Vec<C64>,
}

impl ModalSeries {
    pub fn new(eig: &HermitianEigen, rho: &CMat, a: &CMat) -> Self {
        let r = eig.to_eigenbasis(rho);
        let x = eig.to_eigenbasis(a);
        let n = eig.dim();
        let mut frequencies = Vec::with_capacity(n * n);
        let mut coefficients = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let c = r[(j, i)] * x[(i, j)] / n as f64;
                if c != ZERO {
                    frequencies.push(eig.values[i] - eig.values[j]);
                    coefficients.push(c);
                }
            }
        }
        Self {
            frequencies,
            coefficients,
        }
    }

    pub fn value(&self, t: f64) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .map(|(&w, &c)| c * C64::from_polar(1.0, w * t))
            .sum()
    }

    /// Weight of the zero frequencies, the `T → ∞` Cesàro limit.
    pub fn zero_component(&self) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .filter(|(w, _)| w.abs() <= ZERO_FREQUENCY_TOL)
            .map(|(_, &c)| c)
            .sum()
    }

    /// Exact `(1/T)∫_0^T f`, integrating each mode in closed form.
    pub fn cesaro_mean(&self, big_t: f64) -> C64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .map(|(&w, &c)| {
                if w.abs() <= ZERO_FREQUENCY_TOL {
                    c
                } else {
                    c * (C64::from_polar(1.0, w * big_t) - 1.0) / (C64::new(0.0, w) * big_t)
                }
            })
            .sum()
    }

    /// `Σ_{ω≠0} |c_ω| · 2/(|ω|T)`, a bound on `|cesaro_mean(T) − zero_component()|`.
    pub fn band(&self, big_t: f64) -> f64 {
        self.frequencies
            .iter()
            .zip(&self.coefficients)
            .filter(|(w, _)| w.abs() > ZERO_FREQUENCY_TOL)
            .map(|(&w, c)| c.norm() * 2.0 / (w.abs() * big_t))
            .sum()
    }

    /// Smallest nonzero `|ω|`, if any.
    pub fn min_gap(&self) -> Option<f64> {
        self.frequencies
            .iter()
            .map(|w| w.abs())
            .filter(|w| *w > ZERO_FREQUENCY_TOL)
            .min_by(f64::total_cmp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReturnReport {
    pub model: String,
    pub times: Vec<f64>,
    pub series: Vec<C64>,
    /// Running trapezoidal mean of the real part over `times`.
    pub running_mean: Vec<f64>,
    pub averaging_time: f64,
    /// Exact Cesàro mean at `averaging_time`.
    pub cesaro_mean: C64,
    /// Zero-eigenspace compression `⟨ρ|P_0|a⟩`.
    pub limit: C64,
    /// `ω(a) = tr(a)/d^L`.
    pub tracial: C64,
    /// `|cesaro_mean − tracial|`.
    pub offset: f64,
    /// Largest `|⟨ρ|P_0|σ_y a⟩ − ω(a)|` over translates away from the perturbation.
    pub memory_level: f64,
    pub band: f64,
    /// `memory_level + band`.
    pub floor: f64,
    pub returns: bool,
    /// `2π / (smallest nonzero frequency)`, the scale beyond which recurrences set in.
    pub horizon: Option<f64>,
}

impl ReturnReport {
    /// `offset / floor`, infinite when the floor vanishes.
    pub fn offset_ratio(&self) -> f64 {
        if self.floor == 0.0 {
            if self.offset == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.offset / self.floor
        }
    }
}

/// Time series `⟨B|Π(τ_t(a))|B⟩` for the perturbed vector, its Cesàro mean,
/// and the comparison against the tracial value.
///
/// The floor combines the offset that survives averaging on translates of
/// `a` that do not meet the perturbation (finite-size memory through global
/// conserved quantities) with the residual oscillation bound at `averaging_time`.
pub fn return_to_equilibrium(
    h: &HamiltonianSpec,
    perturbation: &Perturbation,
    a: &LatticeOperator,
    times: &[f64],
    averaging_time: f64,
) -> Result<ReturnReport> {
    let hop = assemble(h)?;
    let geom = *hop.geometry();
    if *a.geometry() != geom {
        return Err(LabError::GeometryMismatch);
    }
    if averaging_time <= 0.0 {
        return Err(LabError::InvalidArgument("averaging time must be positive".into()));
    }
    let rho = perturbation.density()?;
    if *rho.geometry() != geom {
        return Err(LabError::GeometryMismatch);
    }
    let eig = HermitianEigen::new(&hop.dense());
    let rho_d = rho.dense();
    let modal = ModalSeries::new(&eig, &rho_d, &a.dense());
    let series: Vec<C64> = times.iter().map(|&t| modal.value(t)).collect();
    let running_mean = if times.is_empty() {
        Vec::new()
    } else {
        let re: Vec<f64> = series.iter().map(|z| z.re).collect();
        crate::dynamics::cesaro_mean(times, &re)?.running
    };
    let tracial = a.normalized_trace();
    let cesaro = modal.cesaro_mean(averaging_time);
    let limit = modal.zero_component();

    let mut memory_level: f64 = 0.0;
    let mut translates = 0;
    for y in 1..geom.sites() as i64 {
        let Ok(moved) = shift(a, y) else { continue };
        if !moved.support().is_disjoint(rho.support()) {
            continue;
        }
        translates += 1;
        let far = ModalSeries::new(&eig, &rho_d, &moved.dense()).zero_component();
        memory_level = memory_level.max((far - moved.normalized_trace()).norm());
    }
    if translates == 0 && !rho.support().is_empty() {
        return Err(LabError::ChainTooShort {
            needed: a.support().len() + rho.support().len() + 1,
            sites: geom.sites(),
        });
    }
    let band = modal.band(averaging_time);
    let floor = memory_level + band;
    let offset = (cesaro - tracial).norm();
    Ok(ReturnReport {
        model: h.name().to_string(),
        times: times.to_vec(),
        series,
        running_mean,
        averaging_time,
        cesaro_mean: cesaro,
        limit,
        tracial,
        offset,
        memory_level,
        band,
        floor,
        returns: offset <= floor,
        horizon: modal.min_gap().map(|g| 2.0 * std::f64::consts::PI / g),
    })
}

/// `⟨ρ|P_0|a⟩` with `P_0` taken from an explicit eigendecomposition of the
/// doubled generator matrix; an oracle independent of the modal expansion.
pub fn zero_space_compression(h: &LatticeOperator, rho: &LatticeOperator, a: &LatticeOperator) -> Result<C64> {
    check_doubled_cap(h.dim())?;
    let doubled = doubled_generator_matrix(&h.dense());
    let eig = HermitianEigen::new(&doubled);
    let va = GnsVector::from_operator(a).vectorize();
    let vr = GnsVector::from_operator(rho).vectorize();
    let mut acc = ZERO;
    for (k, e) in eig.values.iter().enumerate() {
        if e.abs() <= ZERO_FREQUENCY_TOL {
            let col = eig.vectors.column(k);
            acc += col.dotc(&vr).conj() * col.dotc(&va);
        }
    }
    Ok(acc / h.dim() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonians::{emch_radin, heisenberg, onsite_model, random_coupled};
    use crate::lattice::{embed_at, embed_sites, ChainGeometry};
    use crate::weyl::pauli;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn density_perturbation(g: ChainGeometry) -> Perturbation {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let local = linalg::identity(2) + (pauli::x() * C64::from(0.5 * s)) + (pauli::z() * C64::from(0.5 * s));
        Perturbation::Density(embed_at(&local, 0, &g).unwrap())
    }

    #[test]
    fn zero_hamiltonian_spectrum() {
        let g = ChainGeometry::open(2, 2).unwrap();
        let spec = onsite_model(CMat::zeros(2, 2), g).unwrap();
        let r = generator_spectrum(&spec, &[]).unwrap();
        assert!(r.eigenvalues.iter().all(|e| *e == 0.0));
        assert_eq!(r.zero_multiplicity, 16);
    }

    #[test]
    fn difference_set_and_symmetry() {
        let g = ChainGeometry::periodic(3, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        for spec in [heisenberg(g).unwrap(), random_coupled(g, &mut rng).unwrap()] {
            let r = generator_spectrum(&spec, &[]).unwrap();
            assert!(r.difference_set_error < 1e-8);
            assert!(r.symmetry_error < 1e-8);
            assert!(r.zero_multiplicity >= 8);
        }
    }

    #[test]
    fn emch_radin_z_strings_are_invariant() {
        let g = ChainGeometry::periodic(3, 2).unwrap();
        let zz = linalg::kron(&pauli::z(), &pauli::z());
        let probes = vec![
            ("Z0".to_string(), embed_at(&pauli::z(), 0, &g).unwrap()),
            ("Z0Z2".to_string(), embed_sites(&zz, &[0, 2], &g).unwrap()),
            ("X0".to_string(), embed_at(&pauli::x(), 0, &g).unwrap()),
        ];
        let r = generator_spectrum(&emch_radin(g).unwrap(), &probes).unwrap();
        assert!((r.overlaps[0].zero_weight - 1.0).abs() < 1e-12);
        assert!((r.overlaps[1].zero_weight - 1.0).abs() < 1e-12);
        // flipping site 0 costs nothing when its two neighbours are anti-aligned
        assert!((r.overlaps[2].zero_weight - 0.5).abs() < 1e-12);
    }

    #[test]
    fn heisenberg_x0_zero_weight() {
        let g = ChainGeometry::periodic(4, 2).unwrap();
        let probes = vec![("X0".to_string(), embed_at(&pauli::x(), 0, &g).unwrap())];
        let r = generator_spectrum(&heisenberg(g).unwrap(), &probes).unwrap();
        let w = r.overlaps[0].zero_weight;
        let total: f64 = r.overlaps[0].profile.iter().map(|(_, w)| w).sum();
        assert!((total - 1.0).abs() < 1e-12);
        let oracle = zero_space_compression(&assemble(&heisenberg(g).unwrap()).unwrap(), &probes[0].1, &probes[0].1).unwrap();
        assert!((oracle.re - w).abs() < 1e-10);
        // frozen from the explicit doubled-space oracle
        assert!((w - ORACLE_HEIS4_X0_ZERO_WEIGHT).abs() < 1e-10, "{w}");
    }

    const ORACLE_HEIS4_X0_ZERO_WEIGHT: f64 = 0.4375;

    #[test]
    fn size_cap() {
        let g = ChainGeometry::periodic(7, 2).unwrap();
        assert!(matches!(
            generator_spectrum(&heisenberg(g).unwrap(), &[]),
            Err(LabError::SizeCap { .. })
        ));
    }

    #[test]
    fn identity_perturbation_gives_constant_series() {
        let g = ChainGeometry::periodic(4, 2).unwrap();
        let spec = heisenberg(g).unwrap();
        let a = embed_at(&pauli::x(), 0, &g).unwrap();
        let times: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let r = return_to_equilibrium(&spec, &Perturbation::Unitary(LatticeOperator::identity(g)), &a, &times, 1e9).unwrap();
        assert!(r.series.iter().all(|z| z.norm() < 1e-14));
        let w = LatticeOperator::from_dense(g, HermitianEigen::new(&a.dense()).unitary(1.0)).unwrap();
        let r = return_to_equilibrium(&spec, &Perturbation::Unitary(w), &a, &times, 1e9).unwrap();
        assert!(r.series.iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn emch_radin_does_not_return() {
        let g = ChainGeometry::periodic(6, 2).unwrap();
        let z0 = embed_at(&pauli::z(), 0, &g).unwrap();
        let times: Vec<f64> = (0..=200).map(|k| k as f64 * 0.05).collect();
        let r = return_to_equilibrium(&emch_radin(g).unwrap(), &density_perturbation(g), &z0, &times, 1e10).unwrap();
        let expected = 0.5 * std::f64::consts::FRAC_1_SQRT_2;
        assert!((r.offset - expected).abs() < 1e-10);
        assert!(r.series.iter().all(|z| (z.re - expected).abs() < 1e-12));
        assert!(!r.returns);
        assert!(r.offset_ratio() >= 5.0);
    }

    #[test]
    fn heisenberg_returns_within_floor() {
        let g = ChainGeometry::periodic(6, 2).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let r = return_to_equilibrium(&heisenberg(g).unwrap(), &density_perturbation(g), &x0, &[], 1e10).unwrap();
        assert!(r.returns, "offset {} floor {}", r.offset, r.floor);
        assert!(r.band < 1e-6);
    }

    #[test]
    fn modal_mean_matches_trapezoid_and_oracle() {
        let g = ChainGeometry::periodic(3, 2).unwrap();
        let spec = heisenberg(g).unwrap();
        let x0 = embed_at(&pauli::x(), 0, &g).unwrap();
        let times: Vec<f64> = (0..=20000).map(|k| k as f64 * 0.001).collect();
        let pert = density_perturbation(g);
        let r = return_to_equilibrium(&spec, &pert, &x0, &times, 20.0).unwrap();
        assert!((r.running_mean.last().unwrap() - r.cesaro_mean.re).abs() < 1e-6);
        let h = assemble(&spec).unwrap();
        let oracle = zero_space_compression(&h, &pert.density().unwrap(), &x0).unwrap();
        assert!((oracle - r.limit).norm() < 1e-10);
    }

    #[test]
    fn perturbation_vector_reproduces_density() {
        let g = ChainGeometry::open(2, 2).unwrap();
        let pert = density_perturbation(g);
        let v = pert.vector().unwrap();
        assert!((v.norm() - 1.0).abs() < 1e-12);
        let rho = pert.density().unwrap();
        let a = embed_at(&pauli::z(), 0, &g).unwrap();
        let via_vector = v.inner(&GnsVector::from_operator(&a.mul(&v.to_lattice_operator()).unwrap()));
        let via_density = rho.mul(&a).unwrap().normalized_trace();
        assert!((via_vector - via_density).norm() < 1e-12);
    }
}
