//! Dense complex Hermitian matrices.
//!
//! Provides construction with enforced conjugate symmetry, a cyclic Jacobi
//! eigensolver, PSD verification and numerical rank. Matrices here are small
//! (transmit covariances, n up to a few dozen), so everything is dense and
//! row-major.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Tolerance used by [`HermitianMatrix::new`] to accept a matrix as Hermitian.
const HERMITIAN_TOL: f64 = 1e-12;

/// Jacobi stops once the off-diagonal Frobenius mass drops below this
/// fraction of the full Frobenius norm.
const JACOBI_REL_TOL: f64 = 1e-14;
const JACOBI_MAX_SWEEPS: usize = 100;

/// Default tolerance for [`is_psd`], scaled by `max(1, trace)`.
pub const DEFAULT_PSD_TOL: f64 = 1e-9;
/// Default relative tolerance for [`numerical_rank`], scaled by the largest
/// eigenvalue magnitude.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

/// An `n x n` complex Hermitian matrix stored row-major.
///
/// The lower triangle is always the exact conjugate of the upper triangle and
/// diagonal entries have an imaginary part of exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl HermitianMatrix {
    /// Builds a matrix from row-major entries.
    ///
    /// Entries must be finite and conjugate-symmetric to within `1e-12`
    /// (relative to the largest entry). The upper triangle is kept and the
    /// lower triangle is overwritten with its conjugate.
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("matrix dimension must be at least 1"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                found: entries.len(),
            });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("matrix entries must be finite"));
        }
        let scale = entries.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        let mut data = entries;
        for i in 0..dim {
            if data[i * dim + i].im.abs() > HERMITIAN_TOL * scale {
                return Err(Error::validation(format!(
                    "diagonal entry ({i},{i}) has a non-zero imaginary part"
                )));
            }
            data[i * dim + i].im = 0.0;
            for j in (i + 1)..dim {
                let upper = data[i * dim + j];
                let lower = data[j * dim + i];
                if (upper - lower.conj()).norm() > HERMITIAN_TOL * scale {
                    return Err(Error::validation(format!(
                        "entries ({i},{j}) and ({j},{i}) are not conjugates"
                    )));
                }
                data[j * dim + i] = upper.conj();
            }
        }
        Ok(Self { dim, data })
    }

    /// Builds a real-symmetric matrix from real row-major entries.
    pub fn from_real(dim: usize, entries: &[f64]) -> Result<Self> {
        Self::new(dim, entries.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be at least 1");
        Self {
            dim,
            data: vec![Complex64::new(0.0, 0.0); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::diagonal(&vec![1.0; dim])
    }

    /// `diag{d_1, ..., d_n}`.
    pub fn diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * m.dim + i] = Complex64::new(d, 0.0);
        }
        m
    }

    /// `scale * v v^dagger`.
    pub fn outer(scale: f64, v: &[Complex64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(scale * v[i].norm_sqr(), 0.0);
            for j in (i + 1)..n {
                let z = v[i] * v[j].conj() * scale;
                m.data[i * n + j] = z;
                m.data[j * n + i] = z.conj();
            }
        }
        m
    }

    /// `A A^dagger` for a row-major `n x r` factor `A`.
    pub fn gram(factor: &[Complex64], rows: usize, cols: usize) -> Self {
        assert_eq!(factor.len(), rows * cols, "factor shape mismatch");
        let row = |i: usize| &factor[i * cols..(i + 1) * cols];
        let mut m = Self::zeros(rows);
        for i in 0..rows {
            let ri = row(i);
            m.data[i * rows + i] = Complex64::new(ri.iter().map(|z| z.norm_sqr()).sum(), 0.0);
            for j in (i + 1)..rows {
                let z: Complex64 = ri.iter().zip(row(j)).map(|(a, b)| a * b.conj()).sum();
                m.data[i * rows + j] = z;
                m.data[j * rows + i] = z.conj();
            }
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.dim + j]
    }

    /// Sets entry `(i, j)` and its mirror `(j, i)`. Diagonal entries keep only
    /// the real part.
    pub fn set(&mut self, i: usize, j: usize, value: Complex64) {
        if i == j {
            self.data[i * self.dim + i] = Complex64::new(value.re, 0.0);
        } else {
            self.data[i * self.dim + j] = value;
            self.data[j * self.dim + i] = value.conj();
        }
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.dim).map(|i| self.data[i * self.dim + i].re).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diag().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest off-diagonal magnitude (0 for `n = 1`).
    pub fn max_abs_offdiag(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in (i + 1)..n {
                worst = worst.max(self.data[i * n + j].norm());
            }
        }
        worst
    }

    /// Entrywise sum of two matrices of equal dimension.
    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.dim != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: other.dim,
            });
        }
        Ok(Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        })
    }

    /// The quadratic form `h^T Q h^*`, i.e. `sum_ij h_i q_ij conj(h_j)`.
    ///
    /// Summation runs in row-major order; callers relying on bitwise
    /// reproducibility depend on that order.
    pub fn quadratic_form(&self, h: &[Complex64]) -> Result<Complex64> {
        if h.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: h.len(),
            });
        }
        let n = self.dim;
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                acc += h[i] * self.data[i * n + j] * h[j].conj();
            }
        }
        Ok(acc)
    }

    /// Upper bound on `|h^T Q h^*|` used to scale round-off checks.
    pub fn quadratic_form_scale(&self, h: &[Complex64]) -> f64 {
        let n = self.dim;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += h[i].norm() * self.data[i * n + j].norm() * h[j].norm();
            }
        }
        acc
    }
}

/// Eigenvalues sorted descending and the matching orthonormal eigenvectors.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Row-major `n x n`; column `k` is the eigenvector for `values[k]`.
    pub vectors: Vec<Complex64>,
    pub sweeps: usize,
}

impl EigenDecomposition {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn vector(&self, k: usize) -> Vec<Complex64> {
        let n = self.dim();
        (0..n).map(|i| self.vectors[i * n + k]).collect()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> HermitianMatrix {
        let n = self.dim();
        let mut m = HermitianMatrix::zeros(n);
        for i in 0..n {
            for j in i..n {
                let z: Complex64 = (0..n)
                    .map(|k| self.vectors[i * n + k] * self.values[k] * self.vectors[j * n + k].conj())
                    .sum();
                m.set(i, j, z);
            }
        }
        m
    }
}

/// Eigendecomposition by cyclic complex Jacobi rotations.
///
/// Each rotation first removes the phase of the pivot `q_pq` with a diagonal
/// unitary, then applies the real symmetric Jacobi rotation that annihilates
/// it. The result is a deterministic function of the input bits.
pub fn eig_hermitian(q: &HermitianMatrix) -> Result<EigenDecomposition> {
    if q.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation("matrix entries must be finite"));
    }
    let n = q.dim;
    let mut a = q.data.clone();
    let mut v = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        v[i * n + i] = Complex64::new(1.0, 0.0);
    }

    let threshold = JACOBI_REL_TOL * q.frobenius_norm();
    let off_norm = |a: &[Complex64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j].norm_sqr();
            }
        }
        s.sqrt()
    };

    let mut sweeps = 0;
    while sweeps < JACOBI_MAX_SWEEPS && off_norm(&a) > threshold {
        sweeps += 1;
        for p in 0..n {
            for r in (p + 1)..n {
                rotate(&mut a, &mut v, n, p, r);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| a[y * n + y].re.total_cmp(&a[x * n + x].re));
    let values = order.iter().map(|&k| a[k * n + k].re).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    for (dst, &src) in order.iter().enumerate() {
        for i in 0..n {
            vectors[i * n + dst] = v[i * n + src];
        }
    }
    Ok(EigenDecomposition {
        values,
        vectors,
        sweeps,
    })
}

/// One Jacobi rotation annihilating `a[p][r]`; `a` stays exactly Hermitian.
fn rotate(a: &mut [Complex64], v: &mut [Complex64], n: usize, p: usize, r: usize) {
    let z = a[p * n + r];
    let mag = z.norm();
    if mag == 0.0 {
        return;
    }
    let app = a[p * n + p].re;
    let arr = a[r * n + r].re;
    let phase = z / mag; // e^{i phi}
    let theta = (arr - app) / (2.0 * mag);
    let t = if theta >= 0.0 {
        1.0 / (theta + (theta * theta + 1.0).sqrt())
    } else {
        -1.0 / (-theta + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    // U = [[c, s], [-s e^{-i phi}, c e^{-i phi}]] acting on columns (p, r).
    let u10 = -phase.conj() * s;
    let u11 = phase.conj() * c;
    for k in 0..n {
        if k == p || k == r {
            continue;
        }
        let akp = a[k * n + p];
        let akr = a[k * n + r];
        let new_kp = akp * c + akr * u10;
        let new_kr = akp * s + akr * u11;
        a[k * n + p] = new_kp;
        a[k * n + r] = new_kr;
        a[p * n + k] = new_kp.conj();
        a[r * n + k] = new_kr.conj();
    }
    a[p * n + p] = Complex64::new(app - t * mag, 0.0);
    a[r * n + r] = Complex64::new(arr + t * mag, 0.0);
    a[p * n + r] = Complex64::new(0.0, 0.0);
    a[r * n + p] = Complex64::new(0.0, 0.0);

    for k in 0..n {
        let vkp = v[k * n + p];
        let vkr = v[k * n + r];
        v[k * n + p] = vkp * c + vkr * u10;
        v[k * n + r] = vkp * s + vkr * u11;
    }
}

/// True iff the smallest eigenvalue is at least `-tol * max(1, trace(Q))`.
pub fn is_psd(q: &HermitianMatrix, tol: f64) -> Result<bool> {
    Ok(min_eigen_violation(q, tol)? <= 0.0)
}

/// How far (in trace-scaled units) the smallest eigenvalue falls below
/// `-tol`; non-positive when the matrix passes [`is_psd`].
pub(crate) fn min_eigen_violation(q: &HermitianMatrix, tol: f64) -> Result<f64> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::validation("PSD tolerance must be finite and non-negative"));
    }
    let eig = eig_hermitian(q)?;
    let min = *eig.values.last().expect("dimension is at least 1");
    let scale = q.trace().max(1.0);
    Ok(-min / scale - tol)
}

/// Number of eigenvalues with `|lambda| > rel_tol * max |lambda|`.
pub fn numerical_rank(q: &HermitianMatrix, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(Error::validation("rank tolerance must lie in (0, 1)"));
    }
    let eig = eig_hermitian(q)?;
    let largest = eig.values.iter().map(|x| x.abs()).fold(0.0_f64, f64::max);
    if largest == 0.0 {
        return Ok(0);
    }
    Ok(eig.values.iter().filter(|x| x.abs() > rel_tol * largest).count())
}
