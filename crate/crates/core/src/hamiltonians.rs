//! Translation-covariant nearest-neighbour Hamiltonians on a chain.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::lattice::{embed_sites, ChainGeometry, LatticeOperator};
use crate::linalg::{self, CMat, Storage, C64, ONE, ZERO};
use crate::weyl::pauli;

/// Self-adjointness tolerance for the building blocks.
pub const BLOCK_HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianSpec {
    name: String,
    d: usize,
    on_site: Option<CMat>,
    coupling: Option<CMat>,
    geometry: ChainGeometry,
}

impl HamiltonianSpec {
    /// `coupling` acts on `|a⟩_x ⊗ |b⟩_{x+1}` at row-major index `a·d + b`.
    pub fn new(
        name: impl Into<String>,
        on_site: Option<CMat>,
        coupling: Option<CMat>,
        geometry: ChainGeometry,
    ) -> Result<Self> {
        let d = geometry.site_dim();
        let name = name.into();
        for (label, block, size) in [("on-site", &on_site, d), ("coupling", &coupling, d * d)] {
            if let Some(m) = block {
                if m.nrows() != size || m.ncols() != size {
                    return Err(LabError::DimensionMismatch {
                        expected: size,
                        found: m.nrows(),
                    });
                }
                let deviation = linalg::hermiticity_defect(m);
                if deviation > BLOCK_HERMITIAN_TOL {
                    return Err(LabError::InvalidModel(format!(
                        "{name}: {label} block is not self-adjoint (deviation {deviation:.3e})"
                    )));
                }
            }
        }
        Ok(Self {
            name,
            d,
            on_site,
            coupling,
            geometry,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn site_dim(&self) -> usize {
        self.d
    }

    pub fn on_site(&self) -> Option<&CMat> {
        self.on_site.as_ref()
    }

    pub fn coupling(&self) -> Option<&CMat> {
        self.coupling.as_ref()
    }

    pub fn geometry(&self) -> &ChainGeometry {
        &self.geometry
    }

    /// Same blocks on another chain.
    pub fn on_geometry(&self, geometry: ChainGeometry) -> Result<Self> {
        if geometry.site_dim() != self.d {
            return Err(LabError::DimensionMismatch {
                expected: self.d,
                found: geometry.site_dim(),
            });
        }
        Ok(Self {
            geometry,
            ..self.clone()
        })
    }

    pub fn has_coupling(&self) -> bool {
        self.coupling
            .as_ref()
            .map(|c| c.iter().any(|z| *z != ZERO))
            .unwrap_or(false)
    }

    /// Local density `h_x = a_x + c_{x,x+1}`, the term translated by the shift.
    pub fn density(&self, x: usize) -> Result<LatticeOperator> {
        let g = &self.geometry;
        g.check_site(x)?;
        let mut triplets = Vec::new();
        if let Some(a) = &self.on_site {
            triplets.extend(term_triplets(a, &[x], g)?);
        }
        if let Some(c) = &self.coupling {
            let next = g.translate(x, 1).ok_or(LabError::ChainTooShort {
                needed: x + 2,
                sites: g.sites(),
            })?;
            if next != x {
                triplets.extend(term_triplets(c, &[x, next], g)?);
            }
        }
        let sites: Vec<usize> = (0..g.sites()).collect();
        Ok(LatticeOperator::from_storage_within(
            *g,
            Storage::auto_from_triplets(g.dim(), triplets),
            &sites,
        ))
    }
}

fn term_triplets(op: &CMat, sites: &[usize], g: &ChainGeometry) -> Result<Vec<(usize, usize, C64)>> {
    let embedded = embed_sites(op, sites, g)?;
    Ok(match embedded.storage() {
        Storage::Sparse(s) => s.iter().collect(),
        Storage::Dense(m) => {
            let n = m.nrows();
            (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .filter_map(|(i, j)| (m[(i, j)] != ZERO).then_some((i, j, m[(i, j)])))
                .collect()
        }
    })
}

/// `H = Σ_x a_x + Σ_{bonds} c_{x,x+1}`. On periodic chains every site has a
/// bond to its right neighbour, including the wrap bond.
pub fn assemble(spec: &HamiltonianSpec) -> Result<LatticeOperator> {
    let g = &spec.geometry;
    let mut triplets = Vec::new();
    if let Some(a) = &spec.on_site {
        for x in 0..g.sites() {
            triplets.extend(term_triplets(a, &[x], g)?);
        }
    }
    if let Some(c) = &spec.coupling {
        for (x, y) in g.bonds() {
            triplets.extend(term_triplets(c, &[x, y], g)?);
        }
    }
    let sites: Vec<usize> = (0..g.sites()).collect();
    Ok(LatticeOperator::from_storage_within(
        *g,
        Storage::auto_from_triplets(g.dim(), triplets),
        &sites,
    ))
}

fn require_qubits(name: &str, geom: &ChainGeometry) -> Result<()> {
    if geom.site_dim() != 2 {
        return Err(LabError::InvalidModel(format!(
            "{name} is defined for d = 2, got d = {}",
            geom.site_dim()
        )));
    }
    Ok(())
}

fn pauli_pairs(terms: &[(CMat, CMat)]) -> CMat {
    let mut c = CMat::zeros(4, 4);
    for (a, b) in terms {
        c += linalg::kron(a, b);
    }
    c
}

/// `XX + YY + ZZ` on every bond.
pub fn heisenberg(geom: ChainGeometry) -> Result<HamiltonianSpec> {
    require_qubits("heisenberg", &geom)?;
    let c = pauli_pairs(&[
        (pauli::x(), pauli::x()),
        (pauli::y(), pauli::y()),
        (pauli::z(), pauli::z()),
    ]);
    HamiltonianSpec::new("heisenberg", None, Some(c), geom)
}

/// `XX + YY` on every bond.
pub fn xy_model(geom: ChainGeometry) -> Result<HamiltonianSpec> {
    require_qubits("xy", &geom)?;
    let c = pauli_pairs(&[(pauli::x(), pauli::x()), (pauli::y(), pauli::y())]);
    HamiltonianSpec::new("xy", None, Some(c), geom)
}

/// Diagonal `ZZ` interaction.
pub fn emch_radin(geom: ChainGeometry) -> Result<HamiltonianSpec> {
    require_qubits("emch_radin", &geom)?;
    let c = pauli_pairs(&[(pauli::z(), pauli::z())]);
    HamiltonianSpec::new("emch_radin", None, Some(c), geom)
}

fn check_levels(name: &str, d: usize, j: usize, k: usize) -> Result<()> {
    if j == k {
        return Err(LabError::InvalidModel(format!("{name}: levels must differ, got j = k = {j}")));
    }
    if j >= d || k >= d {
        return Err(LabError::InvalidModel(format!(
            "{name}: levels ({j}, {k}) out of range for d = {d}"
        )));
    }
    Ok(())
}

fn pair_ket(d: usize, a: usize, b: usize) -> usize {
    a * d + b
}

/// `|jk⟩⟨kj| + |kj⟩⟨jk|`: exchange of the levels `j`, `k` between neighbours.
pub fn exchange_model(j: usize, k: usize, geom: ChainGeometry) -> Result<HamiltonianSpec> {
    let d = geom.site_dim();
    check_levels("exchange", d, j, k)?;
    let mut c = CMat::zeros(d * d, d * d);
    c[(pair_ket(d, j, k), pair_ket(d, k, j))] = ONE;
    c[(pair_ket(d, k, j), pair_ket(d, j, k))] = ONE;
    HamiltonianSpec::new("exchange", None, Some(c), geom)
}

/// `|jj⟩⟨kk| + |kk⟩⟨jj|`: pair creation of level `j` out of level `k`, which
/// is not covariant under the level-difference twist.
pub fn pair_model(j: usize, k: usize, geom: ChainGeometry) -> Result<HamiltonianSpec> {
    let d = geom.site_dim();
    check_levels("pair", d, j, k)?;
    let mut c = CMat::zeros(d * d, d * d);
    c[(pair_ket(d, j, j), pair_ket(d, k, k))] = ONE;
    c[(pair_ket(d, k, k), pair_ket(d, j, j))] = ONE;
    HamiltonianSpec::new("pair", None, Some(c), geom)
}

/// The literal diagonal form `|jk⟩⟨jk| + h.c. = 2|jk⟩⟨jk|`.
pub fn pair_diagonal_model(j: usize, k: usize, geom: ChainGeometry) -> Result<HamiltonianSpec> {
    let d = geom.site_dim();
    check_levels("pair_diagonal", d, j, k)?;
    let mut c = CMat::zeros(d * d, d * d);
    c[(pair_ket(d, j, k), pair_ket(d, j, k))] = C64::from(2.0);
    HamiltonianSpec::new("pair_diagonal", None, Some(c), geom)
}

/// On-site only: `Σ_x a_x`.
pub fn onsite_model(a: CMat, geom: ChainGeometry) -> Result<HamiltonianSpec> {
    HamiltonianSpec::new("onsite", Some(a), None, geom)
}

/// `|j⟩⟨j| − |k⟩⟨k|`.
pub fn level_difference(d: usize, j: usize, k: usize) -> Result<CMat> {
    check_levels("level_difference", d, j, k)?;
    let mut b = CMat::zeros(d, d);
    b[(j, j)] = ONE;
    b[(k, k)] = -ONE;
    Ok(b)
}

/// Per-case seed for case `index` of a sweep rooted at `root` (splitmix64).
pub fn derive_seed(root: u64, index: u64) -> u64 {
    let mut z = root.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Draws a Hermitian matrix with independent Gaussian-like entries.
pub fn random_hermitian<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let a = CMat::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    (&a + a.adjoint()) * C64::from(0.5)
}

pub fn random_onsite<R: Rng + ?Sized>(geom: ChainGeometry, rng: &mut R) -> Result<HamiltonianSpec> {
    let a = random_hermitian(geom.site_dim(), rng);
    HamiltonianSpec::new("random_onsite", Some(a), None, geom)
}

pub fn random_coupled<R: Rng + ?Sized>(geom: ChainGeometry, rng: &mut R) -> Result<HamiltonianSpec> {
    let d = geom.site_dim();
    let a = random_hermitian(d, rng);
    let c = random_hermitian(d * d, rng);
    HamiltonianSpec::new("random_coupled", Some(a), Some(c), geom)
}

/// A complex matrix in config files: real part plus optional imaginary part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixSpec {
    pub fn to_matrix(&self) -> Result<CMat> {
        let n = self.re.len();
        let square = |rows: &Vec<Vec<f64>>| rows.len() == n && rows.iter().all(|r| r.len() == n);
        if n == 0 || !square(&self.re) || !self.im.as_ref().map(square).unwrap_or(true) {
            return Err(LabError::Config("matrix must be square and non-empty".into()));
        }
        Ok(CMat::from_fn(n, n, |i, j| {
            let im = self.im.as_ref().map(|m| m[i][j]).unwrap_or(0.0);
            C64::new(self.re[i][j], im)
        }))
    }

    pub fn from_matrix(m: &CMat) -> Self {
        let rows = |f: &dyn Fn(C64) -> f64| {
            (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| f(m[(i, j)])).collect())
                .collect()
        };
        let im_needed = m.iter().any(|z| z.im != 0.0);
        Self {
            re: rows(&|z| z.re),
            im: im_needed.then(|| rows(&|z| z.im)),
        }
    }
}

/// Declarative model selection, as it appears in experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelSpec {
    Heisenberg {},
    Xy {},
    EmchRadin {},
    Exchange { j: usize, k: usize },
    Pair { j: usize, k: usize },
    PairDiagonal { j: usize, k: usize },
    Onsite { matrix: MatrixSpec },
    Custom {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        on_site: Option<MatrixSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        coupling: Option<MatrixSpec>,
    },
}

impl ModelSpec {
    pub fn build(&self, geom: ChainGeometry) -> Result<HamiltonianSpec> {
        match self {
            ModelSpec::Heisenberg {} => heisenberg(geom),
            ModelSpec::Xy {} => xy_model(geom),
            ModelSpec::EmchRadin {} => emch_radin(geom),
            ModelSpec::Exchange { j, k } => exchange_model(*j, *k, geom),
            ModelSpec::Pair { j, k } => pair_model(*j, *k, geom),
            ModelSpec::PairDiagonal { j, k } => pair_diagonal_model(*j, *k, geom),
            ModelSpec::Onsite { matrix } => onsite_model(matrix.to_matrix()?, geom),
            ModelSpec::Custom { on_site, coupling } => HamiltonianSpec::new(
                "custom",
                on_site.as_ref().map(MatrixSpec::to_matrix).transpose()?,
                coupling.as_ref().map(MatrixSpec::to_matrix).transpose()?,
                geom,
            ),
        }
    }

    pub fn label(&self) -> String {
        match self {
            ModelSpec::Heisenberg {} => "heisenberg".into(),
            ModelSpec::Xy {} => "xy".into(),
            ModelSpec::EmchRadin {} => "emch_radin".into(),
            ModelSpec::Exchange { j, k } => format!("exchange_{j}{k}"),
            ModelSpec::Pair { j, k } => format!("pair_{j}{k}"),
            ModelSpec::PairDiagonal { j, k } => format!("pair_diagonal_{j}{k}"),
            ModelSpec::Onsite { .. } => "onsite".into(),
            ModelSpec::Custom { .. } => "custom".into(),
        }
    }

    /// Twist generator under which the model is expected to be covariant
    /// (or, for the pair models, the one exhibiting the failure).
    pub fn default_twist_generator(&self, d: usize) -> Result<CMat> {
        match self {
            ModelSpec::Exchange { j, k } | ModelSpec::Pair { j, k } | ModelSpec::PairDiagonal { j, k } => {
                level_difference(d, *j, *k)
            }
            _ if d == 2 => Ok(pauli::z()),
            _ => crate::weyl::clock(d).map(|z| (&z + z.adjoint()) * C64::from(0.5)),
        }
    }
}

/// Names and one-line descriptions of the built-in models.
pub fn model_catalog() -> Vec<(&'static str, &'static str)> {
    vec![
        ("heisenberg", "d = 2, coupling XX + YY + ZZ"),
        ("xy", "d = 2, coupling XX + YY"),
        ("emch_radin", "d = 2, diagonal coupling ZZ"),
        ("exchange", "levels j, k: |jk⟩⟨kj| + |kj⟩⟨jk|"),
        ("pair", "levels j, k: |jj⟩⟨kk| + |kk⟩⟨jj|"),
        ("pair_diagonal", "levels j, k: |jk⟩⟨jk| + h.c. (diagonal)"),
        ("onsite", "on-site matrix only, no coupling"),
        ("custom", "raw on-site (d×d) and coupling (d²×d²) Hermitian blocks"),
    ]
}
