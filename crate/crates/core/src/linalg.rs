//! Dense and sparse complex linear algebra shared by every module.
//!
//! Dense matrices are `nalgebra::DMatrix<Complex<f64>>`. The sparse type is a
//! minimal CSR matrix sufficient for Hamiltonian application in Krylov
//! propagation; nothing here tries to be a general sparse library.

use nalgebra::DMatrix;
use num_complex::Complex;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Below this dimension spectral norms use a full SVD.
pub const SVD_DIM_THRESHOLD: usize = 256;

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn trace(a: &CMat) -> C64 {
    a.diagonal().iter().sum()
}

/// `tr(A†B)` without normalization.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn frobenius_sq(a: &CMat) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

pub fn max_abs(a: &CMat) -> f64 {
    a.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape());
    a.iter()
        .zip(b.iter())
        .fold(0.0_f64, |m, (x, y)| m.max((x - y).norm()))
}

/// Largest entrywise deviation of `a` from its adjoint.
pub fn hermiticity_defect(a: &CMat) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn is_diagonal(a: &CMat) -> bool {
    let (r, c) = a.shape();
    for j in 0..c {
        for i in 0..r {
            if i != j && a[(i, j)] != ZERO {
                return false;
            }
        }
    }
    true
}

/// Spectral decomposition of a Hermitian matrix, eigenvalues ascending.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl HermitianEigen {
    /// Exactly diagonal inputs skip the solver so diagonal models stay exact.
    pub fn new(a: &CMat) -> Self {
        let n = a.nrows();
        if is_diagonal(a) {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
            let mut vectors = CMat::zeros(n, n);
            for (col, &row) in order.iter().enumerate() {
                vectors[(row, col)] = ONE;
            }
            let values = order.iter().map(|&i| a[(i, i)].re).collect();
            return Self { values, vectors };
        }
        let eig = nalgebra::SymmetricEigen::new(a.clone());
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
        let mut vectors = CMat::zeros(n, n);
        for (col, &src) in order.iter().enumerate() {
            vectors.set_column(col, &eig.eigenvectors.column(src));
        }
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        Self { values, vectors }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `V f(E) V†` for a scalar function of the eigenvalues.
    pub fn apply_fn(&self, f: impl Fn(f64) -> C64) -> CMat {
        let mut scaled = self.vectors.clone();
        for (j, &e) in self.values.iter().enumerate() {
            let fe = f(e);
            scaled.column_mut(j).scale_mut_complex(fe);
        }
        &scaled * self.vectors.adjoint()
    }

    /// `e^{iHt}`.
    pub fn unitary(&self, t: f64) -> CMat {
        self.apply_fn(|e| C64::from_polar(1.0, e * t))
    }

    /// `V† A V`.
    pub fn to_eigenbasis(&self, a: &CMat) -> CMat {
        self.vectors.adjoint() * a * &self.vectors
    }

    pub fn from_eigenbasis(&self, a: &CMat) -> CMat {
        &self.vectors * a * self.vectors.adjoint()
    }
}

trait ScaleComplex {
    fn scale_mut_complex(&mut self, s: C64);
}

impl<S> ScaleComplex for nalgebra::Matrix<C64, nalgebra::Dyn, nalgebra::U1, S>
where
    S: nalgebra::StorageMut<C64, nalgebra::Dyn, nalgebra::U1>,
{
    fn scale_mut_complex(&mut self, s: C64) {
        for z in self.iter_mut() {
            *z *= s;
        }
    }
}

/// Largest singular value.
///
/// Full SVD below [`SVD_DIM_THRESHOLD`]. Above it, (anti-)Hermitian inputs use
/// a symmetric eigensolver directly and general inputs the top eigenvalue of `A†A`.
pub fn spectral_norm(a: &CMat) -> f64 {
    if a.iter().all(|z| *z == ZERO) {
        return 0.0;
    }
    let dim = a.nrows().max(a.ncols());
    if dim < SVD_DIM_THRESHOLD {
        return a
            .clone()
            .singular_values()
            .iter()
            .fold(0.0_f64, |m, &s| m.max(s));
    }
    let scale = max_abs(a);
    let symmetric = if a.is_square() && hermiticity_defect(a) <= 1e-12 * scale {
        Some(a.clone())
    } else if a.is_square() && hermiticity_defect(&(a * I)) <= 1e-12 * scale {
        Some(a * I)
    } else {
        None
    };
    match symmetric {
        Some(h) => {
            let h = (&h + h.adjoint()) * C64::from(0.5);
            nalgebra::SymmetricEigen::new(h)
                .eigenvalues
                .iter()
                .fold(0.0_f64, |m, &e| m.max(e.abs()))
        }
        None => {
            let gram = a.adjoint() * a;
            let gram = (&gram + gram.adjoint()) * C64::from(0.5);
            nalgebra::SymmetricEigen::new(gram)
                .eigenvalues
                .iter()
                .fold(0.0_f64, |m, &e| m.max(e))
                .sqrt()
        }
    }
}

/// Eigenvalues of a general square complex matrix via the complex Schur form.
pub fn general_eigenvalues(a: &CMat) -> Vec<C64> {
    let schur = nalgebra::Schur::new(a.clone());
    let (_, t) = schur.unpack();
    (0..t.nrows()).map(|i| t[(i, i)]).collect()
}

/// Compressed-sparse-row complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl CsrMatrix {
    /// Duplicate entries are summed; explicit zeros are dropped.
    pub fn from_triplets(n: usize, mut triplets: Vec<(usize, usize, C64)>) -> Self {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut indptr = vec![0usize; n + 1];
        let mut indices = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..n {
            indptr[r + 1] += indptr[r];
        }
        let mut out = Self {
            n,
            indptr,
            indices,
            values,
        };
        out.prune();
        out
    }

    pub fn from_dense(a: &CMat) -> Self {
        let n = a.nrows();
        let mut triplets = Vec::new();
        for i in 0..n {
            for j in 0..n {
                let v = a[(i, j)];
                if v != ZERO {
                    triplets.push((i, j, v));
                }
            }
        }
        Self::from_triplets(n, triplets)
    }

    fn prune(&mut self) {
        let mut indptr = vec![0usize; self.n + 1];
        let mut indices = Vec::with_capacity(self.indices.len());
        let mut values = Vec::with_capacity(self.values.len());
        for r in 0..self.n {
            for k in self.indptr[r]..self.indptr[r + 1] {
                if self.values[k] != ZERO {
                    indices.push(self.indices[k]);
                    values.push(self.values[k]);
                }
            }
            indptr[r + 1] = indices.len();
        }
        self.indptr = indptr;
        self.indices = indices;
        self.values = values;
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn density(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        self.nnz() as f64 / (self.n as f64 * self.n as f64)
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.n).flat_map(move |r| {
            (self.indptr[r]..self.indptr[r + 1]).map(move |k| (r, self.indices[k], self.values[k]))
        })
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.n, self.n);
        for (r, c, v) in self.iter() {
            m[(r, c)] = v;
        }
        m
    }

    /// `S · B`.
    pub fn mul_dense(&self, b: &CMat) -> CMat {
        let mut out = CMat::zeros(self.n, b.ncols());
        for (r, c, v) in self.iter() {
            for j in 0..b.ncols() {
                out[(r, j)] += v * b[(c, j)];
            }
        }
        out
    }

    /// `B · S`.
    pub fn dense_mul(&self, b: &CMat) -> CMat {
        let mut out = CMat::zeros(b.nrows(), self.n);
        for (r, c, v) in self.iter() {
            for i in 0..b.nrows() {
                out[(i, c)] += b[(i, r)] * v;
            }
        }
        out
    }
}

/// Dense or sparse storage, chosen by density.
#[derive(Debug, Clone, PartialEq)]
pub enum Storage {
    Dense(CMat),
    Sparse(CsrMatrix),
}

/// Sparse storage is preferred below this fill fraction.
pub const SPARSE_DENSITY: f64 = 0.05;

impl Storage {
    pub fn auto_from_triplets(n: usize, triplets: Vec<(usize, usize, C64)>) -> Self {
        let csr = CsrMatrix::from_triplets(n, triplets);
        if csr.density() < SPARSE_DENSITY {
            Storage::Sparse(csr)
        } else {
            Storage::Dense(csr.to_dense())
        }
    }

    pub fn auto_from_dense(a: CMat) -> Self {
        let nnz = a.iter().filter(|z| **z != ZERO).count();
        let n = a.nrows();
        if n > 0 && (nnz as f64) / ((n * n) as f64) < SPARSE_DENSITY {
            Storage::Sparse(CsrMatrix::from_dense(&a))
        } else {
            Storage::Dense(a)
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Storage::Dense(m) => m.nrows(),
            Storage::Sparse(s) => s.dim(),
        }
    }

    pub fn to_dense(&self) -> CMat {
        match self {
            Storage::Dense(m) => m.clone(),
            Storage::Sparse(s) => s.to_dense(),
        }
    }

    pub fn is_sparse(&self) -> bool {
        matches!(self, Storage::Sparse(_))
    }

    /// `self · B`.
    pub fn mul_dense(&self, b: &CMat) -> CMat {
        match self {
            Storage::Dense(m) => m * b,
            Storage::Sparse(s) => s.mul_dense(b),
        }
    }

    /// `B · self`.
    pub fn dense_mul(&self, b: &CMat) -> CMat {
        match self {
            Storage::Dense(m) => b * m,
            Storage::Sparse(s) => s.dense_mul(b),
        }
    }
}
