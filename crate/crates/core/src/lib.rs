//! Classical simulation of imaginary-time evolution through quantum phase
//! processing, with the adaptive ground-energy search built on top of it.

// NaN-rejecting guards are written as `!(x > 0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod approx;
pub mod error;
pub mod ground_search;
pub mod linalg;
pub mod ite;
pub mod pauli;
pub mod qpp;
pub mod scalar;
pub mod statevector;
pub mod trotter;
pub mod unitary;

pub use error::{QiteError, Result};
pub use scalar::Real;

pub type PauliSumF64 = pauli::PauliSum<f64>;
pub type PauliSumF32 = pauli::PauliSum<f32>;
pub type StateVectorF64 = statevector::StateVector<f64>;
pub type StateVectorF32 = statevector::StateVector<f32>;
pub type SpectrumF64 = pauli::SpectrumInfo<f64>;
