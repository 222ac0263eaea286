#![allow(dead_code)]

use qite_core::pauli::{build_heisenberg, normalize, Pauli, PauliString, PauliSum};
use qite_core::scalar::c;
use qite_core::statevector::StateVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LAMBDA0: f64 = -0.773_502_691_896_258_4;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn heisenberg4() -> PauliSum<f64> {
    normalize(&build_heisenberg(4).unwrap()).unwrap()
}

pub fn random_string(rng: &mut ChaCha8Rng, n: usize) -> PauliString {
    let paulis = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    PauliString::new((0..n).map(|_| paulis[rng.gen_range(0..4)]).collect()).unwrap()
}

/// Raw random sum of 2..=5 non-identity strings.
pub fn random_raw(rng: &mut ChaCha8Rng, n: usize) -> PauliSum<f64> {
    let terms = rng.gen_range(2..=5);
    let mut out = Vec::new();
    while out.len() < terms {
        let p = random_string(rng, n);
        if !p.is_identity() {
            out.push((rng.gen_range(-1.0..1.0), p));
        }
    }
    PauliSum::new(n, out).unwrap()
}

pub fn random_hamiltonian(rng: &mut ChaCha8Rng, n: usize) -> PauliSum<f64> {
    normalize(&random_raw(rng, n)).unwrap()
}

pub fn random_state(rng: &mut ChaCha8Rng, n: usize) -> StateVector<f64> {
    let amps = (0..1usize << n).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
    StateVector::normalize(amps).unwrap()
}
