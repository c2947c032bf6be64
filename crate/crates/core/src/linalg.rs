//! Small dense complex and real linear algebra.
//!
//! Machines in this crate have at most a few dozen states, so everything is
//! stored row-major in a flat `Vec` and multiplied naively.

use std::ops::{Add, Mul};

use num_complex::Complex64;
use num_traits::{One, Zero};

pub type C64 = Complex64;

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

pub type CMatrix = Matrix<C64>;
pub type RMatrix = Matrix<f64>;

impl<T> Matrix<T>
where
    T: Copy + Zero + One + Add<Output = T> + Mul<Output = T>,
{
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = T::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Option<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != ncols) {
            return None;
        }
        Some(Self {
            rows: nrows,
            cols: ncols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
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

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<T>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.cols, rhs.rows, "matmul shape mismatch");
        let mut out = Self::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                let rrow = rhs.row(k);
                let orow = &mut out.data[i * rhs.cols..(i + 1) * rhs.cols];
                for (o, &b) in orow.iter_mut().zip(rrow) {
                    *o = *o + a * b;
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[T]) -> Vec<T> {
        assert_eq!(self.cols, v.len(), "mul_vec shape mismatch");
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    /// `self^n` by repeated squaring.
    pub fn pow(&self, mut n: u64) -> Self {
        assert!(self.is_square());
        let mut result = Self::identity(self.rows);
        let mut base = self.clone();
        while n > 0 {
            if n & 1 == 1 {
                result = result.matmul(&base);
            }
            n >>= 1;
            if n > 0 {
                base = base.matmul(&base);
            }
        }
        result
    }

    /// Place `blocks` along the diagonal.
    pub fn block_diag(blocks: &[Self]) -> Self {
        let n: usize = blocks.iter().map(|b| b.rows).sum();
        let m: usize = blocks.iter().map(|b| b.cols).sum();
        let mut out = Self::zeros(n, m);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    out[(r0 + i, c0 + j)] = b[(i, j)];
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        out
    }
}

impl<T> std::ops::Index<(usize, usize)> for Matrix<T> {
    type Output = T;
    fn index(&self, (i, j): (usize, usize)) -> &T {
        &self.data[i * self.cols + j]
    }
}

impl<T> std::ops::IndexMut<(usize, usize)> for Matrix<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

impl CMatrix {
    pub fn from_real(m: &RMatrix) -> Self {
        Self::from_fn(m.rows, m.cols, |i, j| C64::new(m[(i, j)], 0.0))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    /// `max |(U†U − I)_ij|`; zero for an exactly unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let g = self.adjoint().matmul(self);
        let mut worst = 0.0f64;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - C64::new(target, 0.0)).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

pub fn norm(v: &[C64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// `⟨a|b⟩`, conjugating the left argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn basis(dim: usize, index: usize) -> Vec<C64> {
    let mut v = vec![C64::zero(); dim];
    v[index] = C64::one();
    v
}

/// Complete `first` (unit norm) to a unitary whose column 0 is `first`.
///
/// The remaining columns come from Gram–Schmidt over e₀, e₁, … in order,
/// skipping any basis vector already (numerically) in the span. Runs the
/// projection twice per vector to keep the result orthonormal to ~1e-15.
pub fn complete_to_unitary(first: &[C64]) -> CMatrix {
    let dim = first.len();
    let mut cols: Vec<Vec<C64>> = vec![first.to_vec()];
    for e in 0..dim {
        if cols.len() == dim {
            break;
        }
        let mut v = basis(dim, e);
        for _ in 0..2 {
            for c in &cols {
                let proj = inner(c, &v);
                for (vi, ci) in v.iter_mut().zip(c) {
                    *vi -= proj * ci;
                }
            }
        }
        let n = norm(&v);
        if n > 1e-8 {
            v.iter_mut().for_each(|x| *x /= n);
            cols.push(v);
        }
    }
    CMatrix::from_fn(dim, dim, |i, j| cols[j][i])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn pow_matches_repeated_product() {
        let th = 0.3f64;
        let r =
            RMatrix::from_rows(vec![vec![th.cos(), -th.sin()], vec![th.sin(), th.cos()]]).unwrap();
        let mut acc = RMatrix::identity(2);
        for _ in 0..13 {
            acc = acc.matmul(&r);
        }
        let p = r.pow(13);
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(acc[(i, j)], p[(i, j)], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn completion_is_unitary_with_prescribed_first_column() {
        for d in 1..=6 {
            let s = 1.0 / (d as f64).sqrt();
            let mut u = vec![C64::zero(); 2 * d];
            for j in 0..d {
                u[2 * j] = C64::new(s, 0.0);
            }
            let m = complete_to_unitary(&u);
            assert!(m.unitarity_defect() < 1e-12);
            for i in 0..2 * d {
                assert_abs_diff_eq!((m[(i, 0)] - u[i]).norm(), 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn block_diag_places_blocks() {
        let a = RMatrix::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        let b = RMatrix::from_rows(vec![vec![5.0]]).unwrap();
        let m = RMatrix::block_diag(&[a, b]);
        assert_eq!(m.rows(), 3);
        assert_eq!(m[(1, 0)], 3.0);
        assert_eq!(m[(2, 2)], 5.0);
        assert_eq!(m[(0, 2)], 0.0);
    }
}
