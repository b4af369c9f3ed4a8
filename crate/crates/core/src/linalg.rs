//! Dense complex matrices and the Hermitian eigensolver everything else leans on.
//!
//! The eigensolver is cyclic complex Jacobi. It is slow compared to a
//! tridiagonal QR but deterministic, dependency free, and accurate to a few
//! ulps for the `p <= ~300` sizes used here.

use std::ops::{Index, IndexMut, Mul, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

/// Absolute tolerance for the Hermitian precondition, scaled by `max(1, ‖A‖_max)`.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Unitarity tolerance for inputs of [`unitary_eigenbasis`].
pub const UNITARY_TOL: f64 = 1e-10;
/// Maximum accepted `‖Uv − (v†Uv)v‖` for a unitary eigenvector.
pub const EIGVEC_RESIDUAL_TOL: f64 = 1e-8;

const MAX_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        CMatrix { rows, cols, data }
    }

    /// Builds from row-major data; panics if the length is wrong.
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), rows * cols, "row-major data has wrong length");
        CMatrix { rows, cols, data }
    }

    /// Matrix whose columns are the given equal-length vectors.
    pub fn from_columns<V: AsRef<[Complex64]>>(columns: &[V]) -> Result<Self> {
        let cols = columns.len();
        let rows = columns.first().map_or(0, |c| c.as_ref().len());
        for c in columns {
            if c.as_ref().len() != rows {
                return Err(Error::DimensionMismatch {
                    expected: rows,
                    got: c.as_ref().len(),
                });
            }
        }
        Ok(Self::from_fn(rows, cols, |i, j| columns[j].as_ref()[i]))
    }

    pub fn diagonal(values: &[Complex64]) -> Self {
        let mut m = Self::zeros(values.len(), values.len());
        for (i, v) in values.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vec<Complex64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn columns(&self) -> Vec<Vec<Complex64>> {
        (0..self.cols).map(|j| self.column(j)).collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn scale(&self, s: Complex64) -> Self {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.norm()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `max |a_ij − b_ij|`; infinite on shape mismatch.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.re.is_finite() && x.im.is_finite())
    }

    /// `‖A − A†‖_max`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                dev = dev.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        dev
    }

    /// `(A + A†) / 2`.
    pub fn hermitize(&self) -> Self {
        let n = self.rows;
        Self::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(self[(i, i)].re, 0.0)
            } else {
                (self[(i, j)] + self[(j, i)].conj()) * 0.5
            }
        })
    }

    /// `‖A†A − I‖_max`.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).max_abs_diff(&CMatrix::identity(self.rows))
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> CMatrix {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            let out_row = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                for (o, b) in out_row.iter_mut().zip(rhs.row(k)) {
                    *o += a * b;
                }
            }
        }
        out
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Mul for &CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: &CMatrix) -> CMatrix {
        self.matmul(rhs)
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// `⟨f, g⟩ = Σ_t f(t)·conj(g(t))`.
#[inline]
pub fn inner(f: &[Complex64], g: &[Complex64]) -> Complex64 {
    f.iter().zip(g).map(|(a, b)| a * b.conj()).sum()
}

pub fn norm(f: &[Complex64]) -> f64 {
    f.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// Full spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Sorted in decreasing order.
    pub eigenvalues: Vec<f64>,
    /// Column `i` is the eigenvector for `eigenvalues[i]`.
    pub eigenvectors: CMatrix,
}

fn check_hermitian(a: &CMatrix) -> Result<()> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let dev = a.hermitian_deviation();
    if !(dev <= HERMITIAN_TOL * a.max_abs().max(1.0)) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(())
}

/// Cyclic Jacobi on a Hermitian working copy. Returns the diagonal and, if
/// requested, the accumulated rotations stored as rows (row `i` = eigenvector `i`).
fn jacobi(a: &CMatrix, want_vectors: bool) -> (Vec<f64>, Option<Vec<Complex64>>) {
    let n = a.rows();
    let mut m = a.hermitize().data;
    let mut vt = want_vectors.then(|| CMatrix::identity(n).data);
    if n <= 1 {
        return ((0..n).map(|i| m[i * n + i].re).collect(), vt);
    }

    let fro: f64 = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let target = f64::EPSILON * fro;
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i * n + j].norm_sqr();
            }
        }
        if off.sqrt() <= target || off == 0.0 {
            break;
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let beta = m[p * n + q];
                let b_abs = beta.norm();
                if b_abs == 0.0 || b_abs < 1e-3 * target / n as f64 {
                    continue;
                }
                let phase = beta / b_abs;
                let alpha = m[p * n + p].re;
                let gamma = m[q * n + q].re;
                let zeta = (gamma - alpha) / (2.0 * b_abs);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // U restricted to (p, q): [[c, s], [-s e^{-iφ}, c e^{-iφ}]]
                let em = phase.conj();
                let u_qp = -em * s;
                let u_qq = em * c;

                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    let new_p = apk * c + aqk * u_qp.conj();
                    let new_q = apk * s + aqk * u_qq.conj();
                    m[p * n + k] = new_p;
                    m[q * n + k] = new_q;
                    m[k * n + p] = new_p.conj();
                    m[k * n + q] = new_q.conj();
                }
                m[p * n + p] = Complex64::new(alpha - t * b_abs, 0.0);
                m[q * n + q] = Complex64::new(gamma + t * b_abs, 0.0);
                m[p * n + q] = ZERO;
                m[q * n + p] = ZERO;

                if let Some(v) = vt.as_mut() {
                    let (head, tail) = v.split_at_mut(q * n);
                    let vp = &mut head[p * n..(p + 1) * n];
                    let vq = &mut tail[..n];
                    for (x, y) in vp.iter_mut().zip(vq.iter_mut()) {
                        let xp = *x;
                        let xq = *y;
                        *x = xp * c + xq * u_qp;
                        *y = xp * s + xq * u_qq;
                    }
                }
            }
        }
    }
    ((0..n).map(|i| m[i * n + i].re).collect(), vt)
}

fn descending_order(values: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

/// Eigenvalues and orthonormal eigenvectors of a Hermitian matrix, eigenvalues
/// in decreasing order.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEig> {
    check_hermitian(a)?;
    let n = a.rows();
    let (diag, vt) = jacobi(a, true);
    let vt = vt.expect("vectors requested");
    let order = descending_order(&diag);
    let eigenvalues = order.iter().map(|&i| diag[i]).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |row, col| vt[order[col] * n + row]);
    Ok(HermitianEig {
        eigenvalues,
        eigenvectors,
    })
}

/// Eigenvalues only, in decreasing order.
pub fn hermitian_eigenvalues(a: &CMatrix) -> Result<Vec<f64>> {
    check_hermitian(a)?;
    let (diag, _) = jacobi(a, false);
    let order = descending_order(&diag);
    Ok(order.iter().map(|&i| diag[i]).collect())
}

/// Spectral norm of a Hermitian matrix, `max_i |λ_i|`.
pub fn op_norm(a: &CMatrix) -> Result<f64> {
    Ok(hermitian_eigenvalues(a)?
        .iter()
        .fold(0.0, |m: f64, x| m.max(x.abs())))
}

/// `Tr(A^k) = Σ λ_i^k` for Hermitian `A`.
pub fn trace_power(a: &CMatrix, k: u32) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidParameter("trace_power needs k >= 1".into()));
    }
    Ok(hermitian_eigenvalues(a)?
        .iter()
        .map(|x| x.powi(k as i32))
        .sum())
}

/// Gram matrix `G_ij = ⟨v_i, v_j⟩`. Exactly Hermitian: the lower triangle is
/// the conjugate of the upper one and the diagonal is real.
pub fn gram<V: AsRef<[Complex64]>>(vectors: &[V]) -> Result<CMatrix> {
    let n = vectors.len();
    let dim = vectors.first().map_or(0, |v| v.as_ref().len());
    for v in vectors {
        if v.as_ref().len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.as_ref().len(),
            });
        }
    }
    let mut g = CMatrix::zeros(n, n);
    for i in 0..n {
        let vi = vectors[i].as_ref();
        g[(i, i)] = Complex64::new(vi.iter().map(|x| x.norm_sqr()).sum(), 0.0);
        for j in (i + 1)..n {
            let x = inner(vi, vectors[j].as_ref());
            g[(i, j)] = x;
            g[(j, i)] = x.conj();
        }
    }
    Ok(g)
}

/// Rotates `v` so its largest-magnitude entry is real and positive. Entries
/// within a relative `1e-9` of the maximum count as ties; the lowest index wins.
pub fn normalize_phase(v: &mut [Complex64]) {
    let max = v.iter().fold(0.0_f64, |m, x| m.max(x.norm()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.norm() >= max * (1.0 - 1e-9))
        .expect("maximum exists");
    let rot = v[pivot].conj() / v[pivot].norm();
    for x in v.iter_mut() {
        *x *= rot;
    }
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
}

/// Orthonormal eigenbasis of a unitary matrix with simple spectrum.
#[derive(Debug, Clone)]
pub struct UnitaryEigenbasis {
    /// Phase-normalized unit eigenvectors.
    pub vectors: Vec<Vec<Complex64>>,
    /// `v†Uv` for each vector.
    pub eigenvalues: Vec<Complex64>,
}

/// Phase of the Hermitian pencil `αU + conj(α)U†` on the first attempt.
pub const PENCIL_PHASE: f64 = 0.5371;
const PENCIL_RETRIES: usize = 3;

fn angle_0_2pi(z: Complex64) -> f64 {
    let a = z.arg();
    if a < 0.0 {
        a + std::f64::consts::TAU
    } else {
        a
    }
}

/// Eigenbasis of a unitary `U` with `p` distinct eigenvalues.
///
/// Diagonalizes `H(α) = αU + conj(α)U†`, whose eigenvectors are those of `U`
/// unless two eigenvalues of `U` land on the same real part of `α·λ`. Each
/// vector is checked against `U` directly; on failure the phase of `α` is
/// doubled, up to three retries. Output is sorted by decreasing eigenvalue
/// angle in `[0, 2π)`.
pub fn unitary_eigenbasis(u: &CMatrix) -> Result<UnitaryEigenbasis> {
    if !u.is_square() {
        return Err(Error::NotSquare {
            rows: u.rows(),
            cols: u.cols(),
        });
    }
    let dev = u.unitarity_deviation();
    if !(dev <= UNITARY_TOL) {
        return Err(Error::InvalidParameter(format!(
            "matrix is not unitary (deviation {dev:e})"
        )));
    }
    let n = u.rows();
    let u_adj = u.adjoint();
    let mut worst = f64::INFINITY;
    let mut phase = PENCIL_PHASE;
    for _ in 0..=PENCIL_RETRIES {
        let alpha = Complex64::from_polar(1.0, phase);
        let h = CMatrix::from_fn(n, n, |i, j| alpha * u[(i, j)] + alpha.conj() * u_adj[(i, j)]);
        let eig = hermitian_eig(&h.hermitize())?;
        let mut vectors = Vec::with_capacity(n);
        let mut eigenvalues = Vec::with_capacity(n);
        worst = 0.0;
        for col in 0..n {
            let mut v = eig.eigenvectors.column(col);
            normalize_phase(&mut v);
            let uv = u.mul_vec(&v);
            let lambda = inner(&uv, &v);
            let residual = uv
                .iter()
                .zip(&v)
                .map(|(a, b)| (a - lambda * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            worst = worst.max(residual);
            vectors.push(v);
            eigenvalues.push(lambda);
        }
        if worst <= EIGVEC_RESIDUAL_TOL {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| {
                angle_0_2pi(eigenvalues[b])
                    .total_cmp(&angle_0_2pi(eigenvalues[a]))
                    .then(a.cmp(&b))
            });
            return Ok(UnitaryEigenbasis {
                vectors: order.iter().map(|&i| vectors[i].clone()).collect(),
                eigenvalues: order.iter().map(|&i| eigenvalues[i]).collect(),
            });
        }
        phase *= 2.0;
    }
    Err(Error::DegenerateSpectrum {
        residual: worst,
        attempts: PENCIL_RETRIES + 1,
    })
}
