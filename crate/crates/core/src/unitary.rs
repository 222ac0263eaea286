//! Black-box unitaries: the only access the QPP routines have to `U`.

use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::{QiteError, Result};
use crate::linalg::CMatrix;
use crate::pauli::SpectrumInfo;
use crate::scalar::{Real, C};

pub trait UnitaryOp<T: Real>: Sync {
    /// Dimension of the register `U` acts on.
    fn dim(&self) -> usize;

    /// Writes `U x` (or `U† x` when `adjoint`) into `out`.
    fn apply_to(&self, x: &[C<T>], out: &mut [C<T>], adjoint: bool);

    fn apply_vec(&self, x: &[C<T>], adjoint: bool) -> Vec<C<T>> {
        let mut out = x.to_vec();
        self.apply_to(x, &mut out, adjoint);
        out
    }

    /// Dense materialization by acting on every basis vector.
    fn to_dense(&self) -> CMatrix<T> {
        let d = self.dim();
        let mut cols = Vec::with_capacity(d);
        let mut e = vec![C::new(T::zero(), T::zero()); d];
        for k in 0..d {
            e[k] = C::new(T::one(), T::zero());
            cols.push(self.apply_vec(&e, false));
            e[k] = C::new(T::zero(), T::zero());
        }
        CMatrix::from_columns(&cols)
    }
}

/// Explicit matrix with its adjoint cached.
#[derive(Clone, Debug)]
pub struct DenseUnitary<T: Real> {
    m: CMatrix<T>,
    m_dag: CMatrix<T>,
}

impl<T: Real> DenseUnitary<T> {
    pub fn new(m: CMatrix<T>) -> Result<Self> {
        if !m.is_square() {
            return Err(QiteError::DimensionMismatch { expected: m.rows(), got: m.cols() });
        }
        let dev = m.adjoint().matmul(&m).sub(&CMatrix::identity(m.rows())).max_abs();
        if dev > T::check_tol() {
            return Err(QiteError::NotUnitary(dev.as_f64()));
        }
        let m_dag = m.adjoint();
        Ok(Self { m, m_dag })
    }

    /// `e^{-itH}` from an exact spectrum.
    pub fn evolution(spec: &SpectrumInfo<T>, t: T) -> Self {
        let m = spec.evolution(t);
        let m_dag = m.adjoint();
        Self { m, m_dag }
    }

    pub fn matrix(&self) -> &CMatrix<T> {
        &self.m
    }
}

impl<T: Real> UnitaryOp<T> for DenseUnitary<T> {
    fn dim(&self) -> usize {
        self.m.rows()
    }

    fn apply_to(&self, x: &[C<T>], out: &mut [C<T>], adjoint: bool) {
        if adjoint {
            self.m_dag.mul_vec_into(x, out)
        } else {
            self.m.mul_vec_into(x, out)
        }
    }

    fn to_dense(&self) -> CMatrix<T> {
        self.m.clone()
    }
}

/// Counts every application of the wrapped unitary or its adjoint.
pub struct CountingUnitary<'a, T: Real, U: UnitaryOp<T> + ?Sized> {
    inner: &'a U,
    calls: AtomicU64,
    _marker: std::marker::PhantomData<T>,
}

impl<'a, T: Real, U: UnitaryOp<T> + ?Sized> CountingUnitary<'a, T, U> {
    pub fn new(inner: &'a U) -> Self {
        Self { inner, calls: AtomicU64::new(0), _marker: std::marker::PhantomData }
    }

    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }
}

impl<T: Real, U: UnitaryOp<T> + ?Sized> UnitaryOp<T> for CountingUnitary<'_, T, U> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn apply_to(&self, x: &[C<T>], out: &mut [C<T>], adjoint: bool) {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.apply_to(x, out, adjoint)
    }
}
