//! Small dense row-major matrices and a Cholesky-based SPD solver.
//!
//! Everything here is sized for parameter spaces of a handful of
//! dimensions; no blocking or SIMD.

use std::fmt;
use std::ops::{Index, IndexMut};

use crate::error::{check_dim, Error, Result};

#[derive(Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, data: vec![0.0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_dim(rows * cols, data.len())?;
        Ok(Matrix { rows, cols, data })
    }

    /// Builds a matrix from equal-length rows. An empty slice gives a 0×0 matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_dim(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Matrix { rows: rows.len(), cols, data })
    }

    pub fn column(values: &[f64]) -> Self {
        Matrix { rows: values.len(), cols: 1, data: values.to_vec() }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_iter(&self) -> impl Iterator<Item = &[f64]> {
        // chunks_exact panics on zero width
        (0..self.rows).map(move |i| self.row(i))
    }

    pub fn col_values(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Matrix {
        let mut t = Matrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn matmul(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.cols, other.rows)?;
        let mut out = Matrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self[(i, l)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(l, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.cols, v.len())?;
        Ok(self.row_iter().map(|r| dot(r, v)).collect())
    }

    /// `selfᵀ · v` without materializing the transpose.
    pub fn tr_mat_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.rows, v.len())?;
        let mut out = vec![0.0; self.cols];
        for (r, &vi) in self.row_iter().zip(v) {
            for (o, &x) in out.iter_mut().zip(r) {
                *o += x * vi;
            }
        }
        Ok(out)
    }

    /// Gram matrix `selfᵀ · self`.
    pub fn gram(&self) -> Matrix {
        let mut g = Matrix::zeros(self.cols, self.cols);
        for r in self.row_iter() {
            for i in 0..self.cols {
                for j in i..self.cols {
                    g[(i, j)] += r[i] * r[j];
                }
            }
        }
        for i in 0..self.cols {
            for j in 0..i {
                g[(i, j)] = g[(j, i)];
            }
        }
        g
    }

    pub fn add(&self, other: &Matrix) -> Result<Matrix> {
        check_dim(self.rows, other.rows)?;
        check_dim(self.cols, other.cols)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(Matrix { rows: self.rows, cols: self.cols, data })
    }

    pub fn scale(&self, s: f64) -> Matrix {
        Matrix { rows: self.rows, cols: self.cols, data: self.data.iter().map(|a| a * s).collect() }
    }

    /// Max-abs entry norm.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, a| m.max(a.abs()))
    }

    /// Induced infinity norm (max absolute row sum).
    pub fn norm_inf(&self) -> f64 {
        self.row_iter().map(|r| r.iter().map(|a| a.abs()).sum::<f64>()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|a| a.is_finite())
    }

    /// Quadratic form `xᵀ · self · x`.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        Ok(dot(x, &self.mat_vec(x)?))
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in self.row_iter() {
            writeln!(f, "  {r:?}")?;
        }
        write!(f, "]")
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn checked_dot(a: &[f64], b: &[f64]) -> Result<f64> {
    check_dim(a.len(), b.len())?;
    Ok(dot(a, b))
}

/// Lower-triangular Cholesky factor `L` with `A = L·Lᵀ`.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: Matrix,
}

impl Cholesky {
    pub fn factor(a: &Matrix) -> Result<Self> {
        let (n, m) = a.shape();
        check_dim(n, m)?;
        let scale = a.max_abs().max(f64::MIN_POSITIVE);
        let mut l = Matrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                if (a[(i, j)] - a[(j, i)]).abs() > 1e-10 * scale {
                    return Err(Error::NotPositiveDefinite { pivot: j, value: f64::NAN });
                }
                let mut s = a[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::NotPositiveDefinite { pivot: j, value: s });
                    }
                    l[(j, j)] = s.sqrt();
                } else {
                    l[(i, j)] = s / l[(j, j)];
                }
            }
        }
        Ok(Cholesky { l })
    }

    pub fn lower(&self) -> &Matrix {
        &self.l
    }

    pub fn dim(&self) -> usize {
        self.l.rows()
    }

    /// Solves `A·x = b` for one right-hand side.
    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        check_dim(n, b.len())?;
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for k in 0..i {
                s -= l[(i, k)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for k in i + 1..n {
                s -= l[(k, i)] * y[k];
            }
            y[i] = s / l[(i, i)];
        }
        Ok(y)
    }

    pub fn solve(&self, b: &Matrix) -> Result<Matrix> {
        check_dim(self.dim(), b.rows())?;
        let mut out = Matrix::zeros(b.rows(), b.cols());
        for j in 0..b.cols() {
            let x = self.solve_vec(&b.col_values(j))?;
            for (i, v) in x.into_iter().enumerate() {
                out[(i, j)] = v;
            }
        }
        Ok(out)
    }

    /// `L·z`; maps standard normal draws to `N(0, A)`.
    pub fn lower_mul(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.l.mat_vec(z)
    }
}

/// Solves `A·X = B` for symmetric positive-definite `A`.
pub fn solve_spd(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    Cholesky::factor(a)?.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::Rng;
    use proptest::prelude::*;

    fn random_spd(rng: &mut Rng, n: usize) -> Matrix {
        let g = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.standard_normal()).collect()).unwrap();
        g.gram().add(&Matrix::identity(n).scale(0.5)).unwrap()
    }

    fn residual_ok(a: &Matrix, x: &Matrix, b: &Matrix) -> bool {
        let r = a.matmul(x).unwrap();
        let diff = r.add(&b.scale(-1.0)).unwrap();
        diff.max_abs() < 1e-9 * b.max_abs()
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let b = Matrix::from_rows(&[vec![1.0, 2.0], vec![-3.0, 4.5]]).unwrap();
        assert_eq!(solve_spd(&Matrix::identity(2), &b).unwrap(), b);
    }

    #[test]
    fn scaled_identity() {
        let x = solve_spd(&Matrix::identity(3).scale(2.0), &Matrix::identity(3)).unwrap();
        assert!(x.add(&Matrix::identity(3).scale(-0.5)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn random_4x4_inverse_residual() {
        let mut rng = Rng::new(7);
        let a = random_spd(&mut rng, 4);
        let x = solve_spd(&a, &Matrix::identity(4)).unwrap();
        assert!(residual_ok(&a, &x, &Matrix::identity(4)));
    }

    #[test]
    fn rejects_indefinite_and_asymmetric() {
        let a = Matrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        assert!(matches!(solve_spd(&a, &Matrix::identity(2)), Err(Error::NotPositiveDefinite { .. })));
        let a = Matrix::from_rows(&[vec![2.0, 1.0], vec![0.0, 2.0]]).unwrap();
        assert!(solve_spd(&a, &Matrix::identity(2)).is_err());
    }

    #[test]
    fn gram_matches_transpose_product() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.0]]).unwrap();
        assert_eq!(x.gram(), x.transpose().matmul(&x).unwrap());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn spd_round_trip(seed in any::<u64>(), n in 1usize..=16, cols in 1usize..4) {
            let mut rng = Rng::new(seed);
            let a = random_spd(&mut rng, n);
            let b = Matrix::from_vec(n, cols, (0..n * cols).map(|_| rng.standard_normal()).collect()).unwrap();
            let x = solve_spd(&a, &b).unwrap();
            prop_assert!(residual_ok(&a, &x, &b));
        }
    }
}
