//! First-order product formula for `e^{-itH}` built from Pauli rotations.

use crate::error::{QiteError, Result};
use crate::ite::{prepare_ite_with, ITEResult, IteOptions};
use crate::pauli::{diagonalize, PauliString, PauliSum};
use crate::scalar::{Real, C};
use crate::statevector::{rotate_in_place, StateVector};
use crate::unitary::{DenseUnitary, UnitaryOp};

/// Largest step count the automatic rule will pick.
pub const MAX_AUTO_STEPS: usize = 1 << 22;

/// `[∏_j e^{-i(t/N) h_j σ_j}]^N`; within a step the terms act in input order.
#[derive(Clone, Debug)]
pub struct TrotterPlan<T: Real> {
    n: usize,
    steps: usize,
    /// `(σ_j, θ_j)` with `θ_j = 2 h_j t / N`, realized as `e^{-iθ_j σ_j / 2}`.
    sequence: Vec<(PauliString, T)>,
}

impl<T: Real> TrotterPlan<T> {
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn order(&self) -> usize {
        1
    }

    pub fn sequence(&self) -> &[(PauliString, T)] {
        &self.sequence
    }

    pub fn apply(&self, phi: &StateVector<T>) -> Result<StateVector<T>> {
        if phi.dim() != 1 << self.n {
            return Err(QiteError::DimensionMismatch { expected: 1 << self.n, got: phi.dim() });
        }
        StateVector::from_amplitudes(self.apply_vec(phi.amplitudes(), false))
    }
}

impl<T: Real> UnitaryOp<T> for TrotterPlan<T> {
    fn dim(&self) -> usize {
        1 << self.n
    }

    fn apply_to(&self, x: &[C<T>], out: &mut [C<T>], adjoint: bool) {
        out.copy_from_slice(x);
        for _ in 0..self.steps {
            if adjoint {
                for (p, th) in self.sequence.iter().rev() {
                    rotate_in_place(out, p, -*th);
                }
            } else {
                for (p, th) in &self.sequence {
                    rotate_in_place(out, p, *th);
                }
            }
        }
    }
}

pub fn build_trotter<T: Real>(h: &PauliSum<T>, t: T, n_steps: usize) -> Result<TrotterPlan<T>> {
    if n_steps == 0 {
        return Err(QiteError::InvalidArgument("Trotter step count must be at least 1".into()));
    }
    let scale = (t + t) / T::from_count(n_steps);
    let sequence = h.terms().iter().map(|(hj, p)| (p.clone(), *hj * scale)).collect();
    Ok(TrotterPlan { n: h.qubit_count(), steps: n_steps, sequence })
}

/// `(LΛt)²/N · e^{LΛt/N}`.
pub fn trotter_error_bound<T: Real>(terms: usize, lam: T, t: T, n_steps: usize) -> T {
    let a = T::from_count(terms) * lam * t;
    let n = T::from_count(n_steps);
    a * a / n * (a / n).exp()
}

/// Smallest power of two whose bound is at most `target`.
pub fn default_steps<T: Real>(h: &PauliSum<T>, t: T, target: T) -> Result<usize> {
    let mut n = 1usize;
    while trotter_error_bound(h.term_count(), h.max_abs_coeff(), t, n) > target {
        n *= 2;
        if n > MAX_AUTO_STEPS {
            return Err(QiteError::InvalidArgument(format!(
                "no step count up to {MAX_AUTO_STEPS} reaches Trotter bound {target}"
            )));
        }
    }
    Ok(n)
}

/// `‖U_plan − e^{-itH}‖` in operator norm, both sides dense.
pub fn measured_error<T: Real>(h: &PauliSum<T>, plan: &TrotterPlan<T>, t: T) -> Result<T> {
    let spec = diagonalize(h)?;
    Ok(plan.to_dense().sub(&spec.evolution(t)).spectral_norm())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrotterSteps {
    Count(usize),
    /// Smallest power of two with bound ≤ `min(Δ/4, ε)`.
    Auto,
    /// Dense `e^{-iH}` in place of the product formula.
    Exact,
}

#[derive(Clone, Debug)]
pub struct TrotterRun<T: Real> {
    pub result: ITEResult<T>,
    /// `None` for [`TrotterSteps::Exact`].
    pub steps: Option<usize>,
    /// Measured `‖U_plan − e^{-iH}‖`.
    pub eps_t: T,
}

/// ITE preparation with `U` replaced by the product formula at `t = 1`.
/// Fidelity is scored against the exact evolution under the true `H`.
pub fn prepare_ite_trotter<T: Real>(
    h: &PauliSum<T>,
    phi: &StateVector<T>,
    tau: T,
    lam: T,
    opts: &IteOptions<T>,
    steps: TrotterSteps,
) -> Result<TrotterRun<T>> {
    let spec = diagonalize(h)?;
    let exact = spec.evolution(T::one());
    let n = match steps {
        TrotterSteps::Exact => {
            let u = DenseUnitary::evolution(&spec, T::one());
            let result = prepare_ite_with(&u, &spec, phi, tau, lam, opts)?;
            return Ok(TrotterRun { result, steps: None, eps_t: T::zero() });
        }
        TrotterSteps::Count(n) => n,
        TrotterSteps::Auto => default_steps(h, T::one(), (spec.gap * T::lit(0.25)).min(opts.eps_target))?,
    };
    let plan = build_trotter(h, T::one(), n)?;
    let dense = plan.to_dense();
    let eps_t = dense.sub(&exact).spectral_norm();
    let half_gap = spec.gap * T::lit(0.5);
    if eps_t >= half_gap {
        return Err(QiteError::TrotterTooCoarse { eps_t: eps_t.as_f64(), half_gap: half_gap.as_f64() });
    }
    let u = DenseUnitary::new(dense)?;
    let result = prepare_ite_with(&u, &spec, phi, tau, lam, opts)?;
    Ok(TrotterRun { result, steps: Some(n), eps_t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::{build_heisenberg, normalize};

    #[test]
    fn single_term_is_exact() {
        let h = PauliSum::<f64>::new(2, vec![(0.7, "XY".parse().unwrap())]).unwrap();
        for n in [1, 3, 10] {
            let plan = build_trotter(&h, 1.0, n).unwrap();
            assert!(measured_error(&h, &plan, 1.0).unwrap() < 1e-12);
        }
    }

    #[test]
    fn commuting_terms_exact_at_one_step() {
        let h = PauliSum::<f64>::new(
            3,
            vec![(0.3, "ZZI".parse().unwrap()), (-0.5, "IZZ".parse().unwrap()), (0.2, "ZIZ".parse().unwrap())],
        )
        .unwrap();
        let plan = build_trotter(&h, 1.0, 1).unwrap();
        assert!(measured_error(&h, &plan, 1.0).unwrap() < 1e-12);
    }

    #[test]
    fn adjoint_inverts() {
        let h = normalize(&build_heisenberg::<f64>(3).unwrap()).unwrap();
        let plan = build_trotter(&h, 1.0, 5).unwrap();
        let d = plan.to_dense();
        let mut cols = Vec::new();
        for k in 0..8 {
            let e = StateVector::<f64>::basis(3, k);
            cols.push(plan.apply_vec(e.amplitudes(), true));
        }
        let dd = crate::linalg::CMatrix::from_columns(&cols);
        assert!(dd.matmul(&d).sub(&crate::linalg::CMatrix::identity(8)).max_abs() < 1e-12);
    }

    #[test]
    fn bound_arithmetic() {
        let b = trotter_error_bound(13, 0.5f64, 1.0, 1);
        assert!((b - 6.5f64.powi(2) * 6.5f64.exp()).abs() < 1e-9);
        assert!(trotter_error_bound(13, 0.5f64, 1.0, 1_000_000_000) < 1e-8 * 6.5f64.powi(2) * 2.0);
    }

    #[test]
    fn refuses_coarse_plan() {
        let h = normalize(&build_heisenberg::<f64>(4).unwrap()).unwrap();
        let phi = StateVector::zero_state(4);
        let opts = IteOptions { degree: Some(40), ..IteOptions::default() };
        let err = prepare_ite_trotter(&h, &phi, 5.0, 0.9, &opts, TrotterSteps::Count(1)).unwrap_err();
        assert!(matches!(err, QiteError::TrotterTooCoarse { .. }));
    }
}
