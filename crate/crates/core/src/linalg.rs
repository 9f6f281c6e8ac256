//! Dense complex linear algebra for small matrices.
//!
//! Everything here is sized for the finite spectral triples handled by the
//! crate (Hilbert-space dimension up to a few dozen). The Hermitian
//! eigensolver is a cyclic complex Jacobi iteration; singular values of real
//! maps use one-sided (Hestenes) Jacobi, which keeps small singular values
//! accurate enough for kernel detection.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Complex = num_complex::Complex64;

/// Maximal Hermiticity residual accepted on input before symmetrization.
pub const HERMITIAN_INPUT_TOL: f64 = 1e-9;

const MAX_JACOBI_SWEEPS: usize = 100;

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixJson", into = "MatrixJson")]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex>,
}

/// Wire form: `{"rows": n, "cols": m, "data": [[re, im], ...]}`.
#[derive(Serialize, Deserialize)]
struct MatrixJson {
    rows: usize,
    cols: usize,
    data: Vec<[f64; 2]>,
}

impl TryFrom<MatrixJson> for ComplexMatrix {
    type Error = Error;

    fn try_from(m: MatrixJson) -> Result<Self> {
        let data = m.data.iter().map(|&[re, im]| Complex::new(re, im)).collect();
        ComplexMatrix::new(m.rows, m.cols, data)
    }
}

impl From<ComplexMatrix> for MatrixJson {
    fn from(m: ComplexMatrix) -> Self {
        MatrixJson {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{}", self.rows, self.cols)?;
        for i in 0..self.rows {
            let row: Vec<String> = (0..self.cols)
                .map(|j| {
                    let z = self[(i, j)];
                    format!("{:+.6}{:+.6}i", z.re, z.im)
                })
                .collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        Ok(())
    }
}

impl ComplexMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<Complex>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::validation("matrix dimensions must be positive"));
        }
        if data.len() != rows * cols {
            return Err(Error::dims(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::validation("matrix has non-finite entries"));
        }
        Ok(ComplexMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix {
            rows,
            cols,
            data: vec![Complex::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Complex::new(1.0, 0.0);
        }
        m
    }

    pub fn from_diag(diag: &[Complex]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from nested rows.
    pub fn from_rows(rows: &[Vec<Complex>]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|row| row.len() != c) {
            return Err(Error::dims("ragged rows"));
        }
        Self::new(r, c, rows.concat())
    }

    /// Real matrix from a row-major slice.
    pub fn from_real(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        Self::new(rows, cols, data.iter().map(|&x| Complex::new(x, 0.0)).collect())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[Complex] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn scale(&self, s: Complex) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn scale_real(&self, s: f64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&z| z * s).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::dims(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(self.matmul_unchecked(other))
    }

    fn matmul_unchecked(&self, other: &Self) -> Self {
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, &b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (r, c) = (self.rows * other.rows, self.cols * other.cols);
        let mut out = Self::zeros(r, c);
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self[(i, j)];
                for k in 0..other.rows {
                    for l in 0..other.cols {
                        out[(i * other.rows + k, j * other.cols + l)] = a * other[(k, l)];
                    }
                }
            }
        }
        out
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `max |m_ij - conj(m_ji)|`; infinite for non-square input.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut r: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                r = r.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        r
    }

    fn assert_same_shape(&self, other: &Self) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex;

    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.assert_same_shape(rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.assert_same_shape(rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

/// Panics on inner-dimension mismatch; use [`ComplexMatrix::matmul`] for a
/// checked product.
impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "inner dimension mismatch");
        self.matmul_unchecked(rhs)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

/// Square matrix equal to its conjugate transpose.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ComplexMatrix", into = "ComplexMatrix")]
pub struct HermitianMatrix(ComplexMatrix);

impl fmt::Debug for HermitianMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Hermitian{:?}", self.0)
    }
}

impl TryFrom<ComplexMatrix> for HermitianMatrix {
    type Error = Error;

    fn try_from(m: ComplexMatrix) -> Result<Self> {
        HermitianMatrix::new(m)
    }
}

impl From<HermitianMatrix> for ComplexMatrix {
    fn from(h: HermitianMatrix) -> Self {
        h.0
    }
}

impl HermitianMatrix {
    /// Accepts `m` when its Hermiticity residual is at most
    /// [`HERMITIAN_INPUT_TOL`], storing the symmetrized `(m + m†)/2`.
    pub fn new(m: ComplexMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::validation(format!(
                "Hermitian matrix must be square, got {}x{}",
                m.rows, m.cols
            )));
        }
        let residual = m.hermiticity_residual();
        if residual > HERMITIAN_INPUT_TOL {
            return Err(Error::validation(format!(
                "matrix is not Hermitian (residual {residual:.3e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking; for matrices Hermitian by construction.
    pub(crate) fn symmetrized(mut m: ComplexMatrix) -> Self {
        let n = m.rows;
        for i in 0..n {
            m[(i, i)].im = 0.0;
            for j in i + 1..n {
                let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
                m[(i, j)] = avg;
                m[(j, i)] = avg.conj();
            }
        }
        HermitianMatrix(m)
    }

    pub fn identity(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::identity(n))
    }

    pub fn zeros(n: usize) -> Self {
        HermitianMatrix(ComplexMatrix::zeros(n, n))
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let d: Vec<Complex> = diag.iter().map(|&x| Complex::new(x, 0.0)).collect();
        HermitianMatrix(ComplexMatrix::from_diag(&d))
    }

    pub fn dim(&self) -> usize {
        self.0.rows
    }

    pub fn as_matrix(&self) -> &ComplexMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// Real Hilbert–Schmidt pairing `Tr(A B)`.
    pub fn hs_inner(&self, other: &HermitianMatrix) -> f64 {
        // Tr(AB) = sum_ij a_ij b_ji = sum_ij a_ij conj(b_ij)
        self.0
            .data
            .iter()
            .zip(&other.0.data)
            .map(|(a, b)| a.re * b.re + a.im * b.im)
            .sum()
    }

    pub fn add(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(&self.0 - &other.0)
    }

    pub fn scale(&self, s: f64) -> HermitianMatrix {
        HermitianMatrix(self.0.scale_real(s))
    }

    /// Adds `s * other` in place.
    pub(crate) fn axpy(&mut self, s: f64, other: &HermitianMatrix) {
        for (a, b) in self.0.data.iter_mut().zip(&other.0.data) {
            *a += b * s;
        }
    }

    pub fn kron(&self, other: &HermitianMatrix) -> HermitianMatrix {
        HermitianMatrix(self.0.kron(&other.0))
    }

    pub fn eigh(&self) -> Eigen {
        let (values, vectors) = jacobi_eigh(&self.0);
        Eigen { values, vectors }
    }

    /// `max |λ|`, the operator norm of a Hermitian matrix.
    pub fn spectral_norm(&self) -> f64 {
        self.eigh().values.iter().fold(0.0_f64, |m, l| m.max(l.abs()))
    }

    /// Real coordinates `(re..., im...)` in which the Euclidean product is
    /// the Hilbert–Schmidt product.
    pub(crate) fn to_real_vec(&self) -> Vec<f64> {
        let d = &self.0.data;
        d.iter().map(|z| z.re).chain(d.iter().map(|z| z.im)).collect()
    }

    pub(crate) fn from_real_vec(n: usize, v: &[f64]) -> HermitianMatrix {
        let nn = n * n;
        let data = (0..nn).map(|k| Complex::new(v[k], v[nn + k])).collect();
        Self::symmetrized(ComplexMatrix { rows: n, cols: n, data })
    }

    /// Rebuilds `V diag(f(λ)) V†` from an eigendecomposition.
    pub(crate) fn from_eigen_map(eig: &Eigen, f: impl Fn(f64) -> f64) -> HermitianMatrix {
        let n = eig.values.len();
        let v = &eig.vectors;
        let mut out = ComplexMatrix::zeros(n, n);
        for (k, &lam) in eig.values.iter().enumerate() {
            let w = f(lam);
            if w == 0.0 {
                continue;
            }
            for i in 0..n {
                let vik = v[(i, k)] * w;
                for j in 0..n {
                    out[(i, j)] += vik * v[(j, k)].conj();
                }
            }
        }
        Self::symmetrized(out)
    }
}

/// Eigendecomposition `H = V diag(values) V†`, eigenvalues ascending.
#[derive(Clone, Debug)]
pub struct Eigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

/// Hermitian eigendecomposition of a validated matrix.
pub fn eigh(h: &HermitianMatrix) -> Eigen {
    h.eigh()
}

/// Largest singular value of `m`.
pub fn operator_norm(m: &ComplexMatrix) -> Result<f64> {
    if m.data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::validation("matrix has non-finite entries"));
    }
    let scale = m.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    if m.is_square() && m.hermiticity_residual() <= 1e-14 * scale {
        return Ok(HermitianMatrix::symmetrized(m.clone()).spectral_norm());
    }
    let gram = HermitianMatrix::symmetrized(&m.adjoint() * m);
    let top = gram.eigh().values.last().copied().unwrap_or(0.0);
    Ok(top.max(0.0).sqrt())
}

/// `AB - BA`.
pub fn commutator(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    if !a.is_square() || !b.is_square() || a.rows != b.rows {
        return Err(Error::dims(format!(
            "commutator needs equal square operands, got {}x{} and {}x{}",
            a.rows, a.cols, b.rows, b.cols
        )));
    }
    Ok(&(a * b) - &(b * a))
}

/// `i[A, B]`, Hermitian whenever `A` and `B` are.
pub(crate) fn i_commutator(a: &HermitianMatrix, b: &HermitianMatrix) -> HermitianMatrix {
    let c = &(a.as_matrix() * b.as_matrix()) - &(b.as_matrix() * a.as_matrix());
    HermitianMatrix::symmetrized(c.scale(Complex::new(0.0, 1.0)))
}

/// Hilbert–Schmidt inner product `Tr(A† B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<Complex> {
    if a.rows != b.rows || a.cols != b.cols {
        return Err(Error::dims("Hilbert-Schmidt product of differently shaped matrices"));
    }
    Ok(a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum())
}

fn jacobi_eigh(m: &ComplexMatrix) -> (Vec<f64>, ComplexMatrix) {
    let n = m.rows;
    let mut a = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm();
    if scale == 0.0 || n == 1 {
        let vals = (0..n).map(|i| a[(i, i)].re).collect();
        return (vals, v);
    }

    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[(p, q)].norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[(p, q)];
                let r = apq.norm();
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                if r == 0.0 || r <= 1e-18 * (app.abs() + aqq.abs()) {
                    a[(p, q)] = Complex::new(0.0, 0.0);
                    a[(q, p)] = Complex::new(0.0, 0.0);
                    continue;
                }
                let e = apq / r;
                let theta = (aqq - app) / (2.0 * r);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + (theta * theta + 1.0).sqrt())
                };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let ec = e.conj();

                // A <- A J, with J = [[c, s], [-s conj(e), c conj(e)]] on (p, q).
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp * c - akq * ec * s;
                    a[(k, q)] = akp * s + akq * ec * c;
                }
                // A <- J† A
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk * c - aqk * e * s;
                    a[(q, k)] = apk * s + aqk * e * c;
                }
                a[(p, q)] = Complex::new(0.0, 0.0);
                a[(q, p)] = Complex::new(0.0, 0.0);
                a[(p, p)] = Complex::new(app - t * r, 0.0);
                a[(q, q)] = Complex::new(aqq + t * r, 0.0);

                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = vkp * c - vkq * ec * s;
                    v[(k, q)] = vkp * s + vkq * ec * c;
                }
            }
        }
    }

    let raw: Vec<f64> = (0..n).map(|i| a[(i, i)].re).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| raw[i].total_cmp(&raw[j]));
    let values = order.iter().map(|&i| raw[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (new_col, &old_col) in order.iter().enumerate() {
        for k in 0..n {
            vectors[(k, new_col)] = v[(k, old_col)];
        }
    }
    (values, vectors)
}

/// Thin SVD of a real matrix given by columns: `A v_k = sigma_k u_k`,
/// `sigma` descending. `u_k` is zero where `sigma_k == 0`.
#[derive(Clone, Debug)]
pub(crate) struct RealSvd {
    pub sigma: Vec<f64>,
    pub u: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// One-sided Jacobi SVD.
pub(crate) fn svd_columns(columns: &[Vec<f64>]) -> RealSvd {
    let n = columns.len();
    let mut a = columns.to_vec();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            e
        })
        .collect();

    for _ in 0..80 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = dot(&a[i], &a[i]);
                let beta = dot(&a[j], &a[j]);
                let gamma = dot(&a[i], &a[j]);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let sgn = if zeta >= 0.0 { 1.0 } else { -1.0 };
                let t = sgn / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate_pair(&mut a, i, j, c, s);
                rotate_pair(&mut v, i, j, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let norms: Vec<f64> = a.iter().map(|col| norm(col)).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| norms[i]).collect();
    let u = order
        .iter()
        .map(|&i| {
            let s = norms[i];
            if s > 0.0 {
                a[i].iter().map(|x| x / s).collect()
            } else {
                vec![0.0; a[i].len()]
            }
        })
        .collect();
    let v = order.iter().map(|&i| v[i].clone()).collect();
    RealSvd { sigma, u, v }
}

fn rotate_pair(cols: &mut [Vec<f64>], i: usize, j: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(j);
    let (ci, cj) = (&mut left[i], &mut right[0]);
    for (x, y) in ci.iter_mut().zip(cj.iter_mut()) {
        let (xi, yj) = (*x, *y);
        *x = c * xi - s * yj;
        *y = s * xi + c * yj;
    }
}

/// Eigendecomposition of a real symmetric matrix given by rows.
pub(crate) fn symmetric_eigen(rows: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = rows.len();
    let data: Vec<Complex> = rows
        .iter()
        .flat_map(|r| r.iter().map(|&x| Complex::new(x, 0.0)))
        .collect();
    let h = HermitianMatrix::symmetrized(ComplexMatrix { rows: n, cols: n, data });
    let eig = h.eigh();
    let vecs = (0..n)
        .map(|k| (0..n).map(|i| eig.vectors[(i, k)].re).collect())
        .collect();
    (eig.values, vecs)
}
