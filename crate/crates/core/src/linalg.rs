//! Dense complex storage and the small-matrix kernels used by the
//! Krylov propagator.
//!
//! Large factorizations (eigendecompositions) are delegated to `faer`;
//! everything here is either storage or O(m^3) work on Krylov-sized
//! matrices.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense complex vector with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(data: Vec<Complex64>) -> Result<Self> {
        if let Some(i) = data.iter().position(|z| !is_finite(*z)) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        Ok(Self(data))
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![ZERO; n])
    }

    /// Unit vector on `site`.
    pub fn delta(n: usize, site: usize) -> Result<Self> {
        if site >= n {
            return Err(Error::SiteOutOfRange { index: site, len: n });
        }
        let mut v = vec![ZERO; n];
        v[site] = ONE;
        Ok(Self(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}

/// Dense row-major complex matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Dimension {
                expected: rows * cols,
                got: data.len(),
            });
        }
        if let Some(i) = data.iter().position(|z| !is_finite(*z)) {
            return Err(Error::NonFinite {
                row: i / cols.max(1),
                col: i % cols.max(1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self::from_row_major(rows, cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = ONE;
        }
        m
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

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    /// `y = M x`, rows accumulated left to right.
    pub fn matvec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(y.len(), self.rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = ComplexMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[i * self.cols + k];
                if a == ZERO {
                    continue;
                }
                let orow = &other.data[k * other.cols..(k + 1) * other.cols];
                let out_row = &mut out.data[i * other.cols..(i + 1) * other.cols];
                for (o, b) in out_row.iter_mut().zip(orow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> ComplexMatrix {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    fn add_scaled(&mut self, other: &ComplexMatrix, s: Complex64) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b * s;
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> ComplexMatrix {
        let mut out = ComplexMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        out
    }

    /// Largest absolute row sum.
    pub fn norm_inf(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Largest absolute column sum.
    pub fn norm_one(&self) -> f64 {
        let mut sums = vec![0.0; self.cols];
        for i in 0..self.rows {
            for (s, z) in sums.iter_mut().zip(self.row(i)) {
                *s += z.norm();
            }
        }
        sums.into_iter().fold(0.0, f64::max)
    }

    pub fn norm_fro(&self) -> f64 {
        norm(&self.data)
    }

    pub(crate) fn to_faer(&self) -> Mat<Complex64> {
        Mat::from_fn(self.rows, self.cols, |i, j| self.get(i, j))
    }

    /// Eigenvalues of a Hermitian matrix, ascending. Only the lower
    /// triangle is read.
    pub fn hermitian_eigenvalues(&self) -> Result<Vec<f64>> {
        if !self.is_square() {
            return Err(Error::Linalg("eigenvalues of a non-square matrix".into()));
        }
        self.to_faer()
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Linalg(format!("{e:?}")))
    }

    /// Eigenvalues of a general square matrix.
    pub fn eigenvalues(&self) -> Result<Vec<Complex64>> {
        if !self.is_square() {
            return Err(Error::Linalg("eigenvalues of a non-square matrix".into()));
        }
        self.to_faer().eigenvalues().map_err(|e| Error::Linalg(format!("{e:?}")))
    }

    /// Eigenvalues `S` and right eigenvectors `U` (columns) of a general
    /// square matrix, `A U = U diag(S)`.
    pub fn eigen_decomposition(&self) -> Result<(Vec<Complex64>, ComplexMatrix)> {
        if !self.is_square() {
            return Err(Error::Linalg("eigendecomposition of a non-square matrix".into()));
        }
        let evd = self.to_faer().eigen().map_err(|e| Error::Linalg(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        let u = evd.U();
        let n = self.rows;
        let vals = (0..n).map(|i| s[i]).collect();
        let vecs = ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)])?;
        Ok((vals, vecs))
    }

    /// Solves `A x = b` with faer's partially pivoted LU.
    pub fn solve_vector(&self, b: &[Complex64]) -> Result<Vec<Complex64>> {
        use faer::linalg::solvers::Solve;
        if !self.is_square() || b.len() != self.rows {
            return Err(Error::Dimension {
                expected: self.rows,
                got: b.len(),
            });
        }
        let lu = self.to_faer().partial_piv_lu();
        let rhs = Mat::from_fn(b.len(), 1, |i, _| b[i]);
        let x = lu.solve(&rhs);
        let out: Vec<Complex64> = (0..b.len()).map(|i| x[(i, 0)]).collect();
        if out.iter().any(|z| !is_finite(*z)) {
            return Err(Error::Linalg("singular matrix in solve".into()));
        }
        Ok(out)
    }

    /// Matrix exponential by scaling and squaring with a degree-13 Padé
    /// approximant. Intended for Krylov-sized matrices.
    pub fn expm(&self) -> Result<ComplexMatrix> {
        if !self.is_square() {
            return Err(Error::Linalg("expm of a non-square matrix".into()));
        }
        let n = self.rows;
        // Higham (2005) coefficients and theta_13.
        const B: [f64; 14] = [
            64764752532480000.0,
            32382376266240000.0,
            7771770303897600.0,
            1187353796428800.0,
            129060195264000.0,
            10559470521600.0,
            670442572800.0,
            33522128640.0,
            1323241920.0,
            40840800.0,
            960960.0,
            16380.0,
            182.0,
            1.0,
        ];
        const THETA_13: f64 = 5.371920351148152;

        let norm1 = self.norm_one();
        let s = if norm1 > THETA_13 {
            (norm1 / THETA_13).log2().ceil() as i32
        } else {
            0
        };
        let a = self.scale(Complex64::new(0.5f64.powi(s), 0.0));
        let ident = ComplexMatrix::identity(n);
        let a2 = a.matmul(&a);
        let a4 = a2.matmul(&a2);
        let a6 = a4.matmul(&a2);

        let c = |k: usize| Complex64::new(B[k], 0.0);

        let mut u_inner = a6.scale(c(13));
        u_inner.add_scaled(&a4, c(11));
        u_inner.add_scaled(&a2, c(9));
        let mut u_tmp = a6.matmul(&u_inner);
        u_tmp.add_scaled(&a6, c(7));
        u_tmp.add_scaled(&a4, c(5));
        u_tmp.add_scaled(&a2, c(3));
        u_tmp.add_scaled(&ident, c(1));
        let u = a.matmul(&u_tmp);

        let mut v_inner = a6.scale(c(12));
        v_inner.add_scaled(&a4, c(10));
        v_inner.add_scaled(&a2, c(8));
        let mut v = a6.matmul(&v_inner);
        v.add_scaled(&a6, c(6));
        v.add_scaled(&a4, c(4));
        v.add_scaled(&a2, c(2));
        v.add_scaled(&ident, c(0));

        // (V - U) R = (V + U)
        let mut p = v.clone();
        p.add_scaled(&u, ONE);
        let mut q = v;
        q.add_scaled(&u, -ONE);
        let mut r = lu_solve(&q, &p)?;
        for _ in 0..s {
            r = r.matmul(&r);
        }
        Ok(r)
    }
}

/// Solves `A X = B` by LU with partial pivoting.
pub fn lu_solve(a: &ComplexMatrix, b: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows;
    if !a.is_square() || b.rows != n {
        return Err(Error::Dimension {
            expected: n,
            got: b.rows,
        });
    }
    let mut lu = a.data.clone();
    let mut x = b.data.clone();
    let m = b.cols;
    for k in 0..n {
        let (piv, pmax) = (k..n)
            .map(|i| (i, lu[i * n + k].norm()))
            .fold((k, -1.0), |acc, v| if v.1 > acc.1 { v } else { acc });
        if pmax == 0.0 || !pmax.is_finite() {
            return Err(Error::Linalg("singular matrix in LU solve".into()));
        }
        if piv != k {
            for j in 0..n {
                lu.swap(k * n + j, piv * n + j);
            }
            for j in 0..m {
                x.swap(k * m + j, piv * m + j);
            }
        }
        let d = lu[k * n + k];
        for i in (k + 1)..n {
            let f = lu[i * n + k] / d;
            if f == ZERO {
                continue;
            }
            lu[i * n + k] = f;
            for j in (k + 1)..n {
                let t = lu[k * n + j];
                lu[i * n + j] -= f * t;
            }
            for j in 0..m {
                let t = x[k * m + j];
                x[i * m + j] -= f * t;
            }
        }
    }
    for k in (0..n).rev() {
        let d = lu[k * n + k];
        for j in 0..m {
            let mut acc = x[k * m + j];
            for i in (k + 1)..n {
                acc -= lu[k * n + i] * x[i * m + j];
            }
            x[k * m + j] = acc / d;
        }
    }
    ComplexMatrix::from_row_major(n, m, x)
}

#[inline]
pub(crate) fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

pub(crate) fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Conjugated inner product `<a, b>`.
pub(crate) fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).fold(ZERO, |acc, (x, y)| acc + x.conj() * y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_non_finite() {
        let r = ComplexMatrix::from_row_major(1, 2, vec![c(1.0, 0.0), c(f64::NAN, 0.0)]);
        assert!(matches!(r, Err(Error::NonFinite { row: 0, col: 1 })));
        assert!(ComplexVector::new(vec![c(0.0, f64::INFINITY)]).is_err());
    }

    #[test]
    fn expm_of_diagonal() {
        let m = ComplexMatrix::from_fn(3, 3, |i, j| if i == j { c(i as f64, -0.5 * i as f64) } else { ZERO }).unwrap();
        let e = m.expm().unwrap();
        for i in 0..3 {
            let want = c(i as f64, -0.5 * i as f64).exp();
            assert!((e.get(i, i) - want).norm() < 1e-13 * want.norm().max(1.0));
        }
        assert!(e.get(0, 1).norm() < 1e-15);
    }

    #[test]
    fn expm_of_rotation_generator() {
        // exp([[0, -t],[t, 0]]) = [[cos t, -sin t],[sin t, cos t]]
        for &t in &[0.1, 1.0, 7.5, 40.0] {
            let m = ComplexMatrix::from_row_major(2, 2, vec![ZERO, c(-t, 0.0), c(t, 0.0), ZERO]).unwrap();
            let e = m.expm().unwrap();
            assert!((e.get(0, 0) - c(t.cos(), 0.0)).norm() < 1e-12);
            assert!((e.get(1, 0) - c(t.sin(), 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn expm_of_nilpotent_jordan_block() {
        // exp(N) for the 3x3 shift is I + N + N^2/2.
        let m = ComplexMatrix::from_fn(3, 3, |i, j| if j == i + 1 { ONE } else { ZERO }).unwrap();
        let e = m.expm().unwrap();
        assert!((e.get(0, 1) - ONE).norm() < 1e-15);
        assert!((e.get(0, 2) - c(0.5, 0.0)).norm() < 1e-15);
        assert!((e.get(2, 0)).norm() < 1e-15);
    }

    #[test]
    fn lu_solve_recovers_solution() {
        let a = ComplexMatrix::from_fn(4, 4, |i, j| c(1.0 / (1.0 + i as f64 + j as f64), (i as f64 - j as f64) * 0.1)).unwrap();
        let x = ComplexMatrix::from_fn(4, 1, |i, _| c(i as f64, 1.0)).unwrap();
        let b = a.matmul(&x);
        let got = lu_solve(&a, &b).unwrap();
        for i in 0..4 {
            assert!((got.get(i, 0) - x.get(i, 0)).norm() < 1e-9);
        }
    }

    #[test]
    fn hermitian_eigenvalues_of_pauli_x() {
        let m = ComplexMatrix::from_row_major(2, 2, vec![ZERO, ONE, ONE, ZERO]).unwrap();
        let ev = m.hermitian_eigenvalues().unwrap();
        assert!((ev[0] + 1.0).abs() < 1e-14 && (ev[1] - 1.0).abs() < 1e-14);
    }
}
