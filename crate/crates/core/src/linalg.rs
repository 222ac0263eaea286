//! Small dense complex linear algebra: row-major matrices and a cyclic Jacobi
//! eigensolver for Hermitian input.

use num_traits::{One, Zero};

use crate::scalar::{cr, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct CMatrix<T: Real> {
    rows: usize,
    cols: usize,
    data: Vec<C<T>>,
}

impl<T: Real> CMatrix<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C::one();
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    /// Builds a matrix whose columns are the given vectors.
    pub fn from_columns(cols: &[Vec<C<T>>]) -> Self {
        let rows = cols.first().map_or(0, Vec::len);
        Self::from_fn(rows, cols.len(), |r, c| cols[c][r])
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
    pub fn get(&self, r: usize, c: usize) -> C<T> {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: C<T>) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[C<T>] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn column(&self, c: usize) -> Vec<C<T>> {
        (0..self.rows).map(|r| self.get(r, c)).collect()
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.get(c, r).conj())
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a.is_zero() {
                    continue;
                }
                let orow = other.row(k);
                let dst = &mut out.data[r * other.cols..(r + 1) * other.cols];
                for (d, &b) in dst.iter_mut().zip(orow) {
                    *d += a * b;
                }
            }
        }
        out
    }

    /// `y = M x` written into `out`.
    pub fn mul_vec_into(&self, x: &[C<T>], out: &mut [C<T>]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        for (r, o) in out.iter_mut().enumerate() {
            let mut acc = C::zero();
            for (a, b) in self.row(r).iter().zip(x) {
                acc += *a * *b;
            }
            *o = acc;
        }
    }

    pub fn mul_vec(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::zero(); self.rows];
        self.mul_vec_into(x, &mut out);
        out
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&v| v * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect();
        Self { rows: self.rows, cols: self.cols, data }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.norm()))
    }

    pub fn frobenius(&self) -> T {
        self.data.iter().map(|v| v.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> T {
        let gram = self.adjoint().matmul(self);
        let (vals, _) = hermitian_eigen(&gram);
        vals.last().copied().unwrap_or_else(T::zero).max(T::zero()).sqrt()
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.is_square() && self.sub(&self.adjoint()).max_abs() <= tol
    }

    pub fn is_unitary(&self, tol: T) -> bool {
        self.is_square()
            && self.adjoint().matmul(self).sub(&Self::identity(self.rows)).max_abs() <= tol
    }

    pub fn as_slice(&self) -> &[C<T>] {
        &self.data
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi rotations.
///
/// Returns eigenvalues in ascending order and the matching orthonormal
/// eigenvectors as columns. Only the Hermitian part of `a` is used.
pub fn hermitian_eigen<T: Real>(a: &CMatrix<T>) -> (Vec<T>, CMatrix<T>) {
    assert!(a.is_square(), "eigendecomposition needs a square matrix");
    let n = a.rows;
    let half = T::lit(0.5);
    let mut m = a.add(&a.adjoint()).scale(cr(half));
    let mut v = CMatrix::<T>::identity(n);
    let scale = m.frobenius();
    if n < 2 || scale.is_zero() {
        let vals = (0..n).map(|i| m.get(i, i).re).collect();
        return (vals, v);
    }
    let target = T::epsilon() * scale;

    for _sweep in 0..100 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                off += m.get(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= target {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m.get(p, q);
                let r = apq.norm();
                if r <= target * T::epsilon() {
                    continue;
                }
                let phase = apq / cr(r);
                let app = m.get(p, p).re;
                let aqq = m.get(q, q).re;
                let theta = half * (r + r).atan2(aqq - app);
                let (s, co) = theta.sin_cos();
                let g_pp = cr(co);
                let g_pq = cr(s);
                let g_qp = phase.conj() * cr(-s);
                let g_qq = phase.conj() * cr(co);
                for k in 0..n {
                    let mkp = m.get(k, p);
                    let mkq = m.get(k, q);
                    m.set(k, p, mkp * g_pp + mkq * g_qp);
                    m.set(k, q, mkp * g_pq + mkq * g_qq);
                    let vkp = v.get(k, p);
                    let vkq = v.get(k, q);
                    v.set(k, p, vkp * g_pp + vkq * g_qp);
                    v.set(k, q, vkp * g_pq + vkq * g_qq);
                }
                for k in 0..n {
                    let mpk = m.get(p, k);
                    let mqk = m.get(q, k);
                    m.set(p, k, g_pp.conj() * mpk + g_qp.conj() * mqk);
                    m.set(q, k, g_pq.conj() * mpk + g_qq.conj() * mqk);
                }
                m.set(p, q, C::zero());
                m.set(q, p, C::zero());
                m.set(p, p, cr(m.get(p, p).re));
                m.set(q, q, cr(m.get(q, q).re));
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m.get(i, i).re.partial_cmp(&m.get(j, j).re).unwrap());
    let vals = order.iter().map(|&i| m.get(i, i).re).collect();
    let vecs = CMatrix::from_fn(n, n, |r, c| v.get(r, order[c]));
    (vals, vecs)
}

/// `V diag(f(λ)) V†`.
pub fn spectral_function<T: Real>(
    values: &[T],
    vectors: &CMatrix<T>,
    f: impl Fn(T) -> C<T>,
) -> CMatrix<T> {
    let n = values.len();
    let fv: Vec<C<T>> = values.iter().map(|&x| f(x)).collect();
    let scaled = CMatrix::from_fn(n, n, |r, c| vectors.get(r, c) * fv[c]);
    scaled.matmul(&vectors.adjoint())
}
