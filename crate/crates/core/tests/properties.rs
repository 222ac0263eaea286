mod common;

use common::{random_hamiltonian, random_raw, random_state, random_string, rng};
use proptest::prelude::*;
use qite_core::approx::{fourier_fit, ApproxSpec, TrigPolynomial};
use qite_core::ground_search::{basis_change, sample_value};
use qite_core::linalg::CMatrix;
use qite_core::pauli::{diagonalize, normalize, Pauli, PauliString, PauliSum};
use qite_core::qpp::{apply_block, apply_spectral, block_joint};
use qite_core::scalar::{c, cr};
use qite_core::statevector::StateVector;
use qite_core::trotter::{build_trotter, measured_error, trotter_error_bound};
use qite_core::unitary::{DenseUnitary, UnitaryOp};
use rand::Rng;

fn max_diff(a: &[qite_core::scalar::C<f64>], b: &[qite_core::scalar::C<f64>]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

fn random_poly(seed: u64, degree: usize, sup: f64) -> TrigPolynomial<f64> {
    let mut r = rng(seed);
    let coeffs = (0..2 * degree + 1).map(|_| c(r.gen_range(-1.0..1.0), r.gen_range(-1.0..1.0))).collect();
    let p = TrigPolynomial::new(coeffs).unwrap();
    let s = p.sup_norm();
    p.scale(sup / s)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn dense_is_sum_of_terms(seed in any::<u64>(), n in 1usize..4) {
        let h = random_raw(&mut rng(seed), n);
        let mut acc = CMatrix::zeros(1 << n, 1 << n);
        for (hj, p) in h.terms() {
            acc = acc.add(&p.dense::<f64>().scale(cr(*hj)));
        }
        prop_assert!(h.dense().sub(&acc).max_abs() <= 1e-14);
        prop_assert!(h.dense().is_hermitian(1e-14));
    }

    #[test]
    fn diagonalization_reconstructs(seed in any::<u64>(), n in 1usize..4) {
        let h = random_raw(&mut rng(seed), n);
        let spec = diagonalize(&h).unwrap();
        let d = 1 << n;
        let v = &spec.eigenvectors;
        let rebuilt = CMatrix::from_fn(d, d, |r, col| {
            (0..d).map(|j| v.get(r, j) * v.get(col, j).conj() * spec.eigenvalues[j]).sum()
        });
        prop_assert!(h.dense().sub(&rebuilt).max_abs() <= 1e-10);
        prop_assert!(spec.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn normalize_is_idempotent_and_scale_free(seed in any::<u64>(), n in 1usize..4, s in 0.01f64..50.0) {
        let raw = random_raw(&mut rng(seed), n);
        let once = normalize(&raw).unwrap();
        let twice = normalize(&once).unwrap();
        let scaled = normalize(&raw.scaled(s)).unwrap();
        prop_assert!(once.dense().sub(&twice.dense()).max_abs() <= 1e-12);
        prop_assert!(once.dense().sub(&scaled.dense()).max_abs() <= 1e-12);
        let spec = diagonalize(&once).unwrap();
        prop_assert!(spec.ground_energy < 0.0);
        prop_assert!(spec.eigenvalues.iter().all(|l| l.abs() <= 1.0 + 1e-12));
    }

    #[test]
    fn rotation_matches_dense_and_preserves_norm(seed in any::<u64>(), n in 1usize..5, theta in -7.0f64..7.0) {
        let mut r = rng(seed);
        let p = random_string(&mut r, n);
        let phi = random_state(&mut r, n);
        let fast = phi.apply_pauli_rotation(&p, theta).unwrap();
        let dense = phi.apply_dense(&p.rotation_dense(theta)).unwrap();
        prop_assert!(max_diff(fast.amplitudes(), dense.amplitudes()) <= 1e-12);
        prop_assert!((fast.norm() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn commuting_rotations_compose_exactly(seed in any::<u64>(), n in 1usize..4, t in 0.1f64..3.0) {
        let mut r = rng(seed);
        let zs = [Pauli::I, Pauli::Z];
        let terms: Vec<(f64, PauliString)> = (0..4)
            .map(|_| (r.gen_range(-1.0..1.0), PauliString::new((0..n).map(|_| zs[r.gen_range(0..2)]).collect()).unwrap()))
            .collect();
        let h = PauliSum::new(n, terms.clone()).unwrap();
        let phi = random_state(&mut r, n);
        let mut out = phi.clone();
        for (hj, p) in &terms {
            out = out.apply_pauli_rotation(p, 2.0 * hj * t).unwrap();
        }
        let exact = phi.apply_dense(&diagonalize(&h).unwrap().evolution(t)).unwrap();
        prop_assert!(max_diff(out.amplitudes(), exact.amplitudes()) <= 1e-10);
    }

    #[test]
    fn block_matches_eigenbasis_and_contracts(seed in any::<u64>(), n in 1usize..4, degree in 0usize..12, sup in 0.05f64..1.0) {
        let mut r = rng(seed);
        let h = random_hamiltonian(&mut r, n);
        let spec = diagonalize(&h).unwrap();
        let phi = random_state(&mut r, n);
        let poly = random_poly(seed ^ 0x51, degree, sup);
        let u = DenseUnitary::evolution(&spec, 1.0);
        let block = apply_block(&poly, &u, &phi).unwrap();
        let eig = apply_spectral(&poly, &spec, &phi).unwrap();
        prop_assert!(max_diff(block.amplitudes(), eig.amplitudes()) <= 1e-10);
        prop_assert!(block.norm() <= poly.sup_norm() + 1e-12);
    }

    #[test]
    fn block_uses_two_l_queries(seed in any::<u64>(), degree in 0usize..10) {
        let mut r = rng(seed);
        let h = random_hamiltonian(&mut r, 2);
        let u = DenseUnitary::evolution(&diagonalize(&h).unwrap(), 1.0);
        let counter = qite_core::unitary::CountingUnitary::new(&u);
        apply_block(&random_poly(seed, degree, 0.5), &counter, &random_state(&mut r, 2)).unwrap();
        prop_assert_eq!(counter.calls(), 2 * degree as u64);
    }

    #[test]
    fn trotter_apply_matches_dense_plan(seed in any::<u64>(), n in 1usize..4, steps in 1usize..6, t in 0.1f64..2.0) {
        let mut r = rng(seed);
        let h = random_hamiltonian(&mut r, n);
        let phi = random_state(&mut r, n);
        let plan = build_trotter(&h, t, steps).unwrap();
        let fast = plan.apply(&phi).unwrap();
        let dense = phi.apply_dense(&plan.to_dense()).unwrap();
        prop_assert!(max_diff(fast.amplitudes(), dense.amplitudes()) <= 1e-10);
        let err = measured_error(&h, &plan, t).unwrap();
        prop_assert!(err <= trotter_error_bound(h.term_count(), h.max_abs_coeff(), t, steps) + 1e-12);
    }

    #[test]
    fn samples_are_bounded_by_scale(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let h = random_hamiltonian(&mut r, n);
        let scale = h.coeff_l1();
        for (hl, sigma) in h.terms() {
            for idx in 0..(2usize << n) {
                prop_assert!(sample_value(idx, n, *hl, sigma, scale).abs() <= scale);
            }
        }
    }

    #[test]
    fn basis_change_preserves_norm(seed in any::<u64>(), n in 1usize..4) {
        let mut r = rng(seed);
        let sigma = random_string(&mut r, n);
        let joint = random_state(&mut r, n + 1);
        let mut amps = joint.amplitudes().to_vec();
        basis_change(&mut amps, &sigma);
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        prop_assert!((norm - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn joint_state_branch_is_block_output(seed in any::<u64>(), n in 1usize..3) {
        let mut r = rng(seed);
        let h = random_hamiltonian(&mut r, n);
        let phi = random_state(&mut r, n);
        let u = DenseUnitary::evolution(&diagonalize(&h).unwrap(), 1.0);
        let branch = apply_block(&random_poly(seed, 3, 0.8), &u, &phi).unwrap();
        let joint = block_joint(&branch, &phi).unwrap();
        prop_assert!(max_diff(&joint.amplitudes()[..1 << n], branch.amplitudes()) <= 1e-12);
        prop_assert!(joint.is_normalized());
    }

    #[test]
    fn fit_respects_certificate(tau in 5.0f64..30.0, offset in 0.0f64..0.3, degree in 10usize..200) {
        let spec = ApproxSpec::new(tau, 0.5 + offset, 0.85).unwrap();
        let fit = fourier_fit(&spec, degree).unwrap();
        prop_assert!(fit.poly.sup_norm() <= 1.0 + 1e-9);
        let n = 997;
        for i in 0..n {
            let x = -1.0 + (spec.lambda + 1.0) * i as f64 / (n - 1) as f64;
            prop_assert!((fit.poly.eval(x) - cr(spec.f_exact(x))).norm() <= fit.eps + 1e-12);
        }
    }

    #[test]
    fn doubling_degree_does_not_hurt(tau in 5.0f64..25.0, degree in 10usize..400) {
        let spec = ApproxSpec::new(tau, 0.8, 0.85).unwrap();
        let a = fourier_fit(&spec, degree).unwrap().eps;
        let b = fourier_fit(&spec, 2 * degree).unwrap().eps;
        prop_assert!(b <= a + 1e-12);
    }
}

#[test]
fn sampling_tracks_amplitudes() {
    let mut r = rng(77);
    for seed in 0..4u64 {
        let phi: StateVector<f64> = random_state(&mut r, 3);
        let counts = phi.sample_counts(100_000, seed).unwrap();
        let tv: f64 = counts
            .iter()
            .zip(phi.probabilities())
            .map(|(&k, p)| (k as f64 / 1e5 - p).abs())
            .sum::<f64>()
            * 0.5;
        assert!(tv <= 0.02, "total variation {tv}");
        assert_eq!(counts, phi.sample_counts(100_000, seed).unwrap());
    }
}

#[test]
fn evolution_phases_eigenvectors() {
    let mut r = rng(5);
    let h = random_hamiltonian(&mut r, 3);
    let spec = diagonalize(&h).unwrap();
    let u = DenseUnitary::evolution(&spec, 1.0);
    for j in 0..spec.dim() {
        let psi = spec.eigenvector(j);
        let out = u.apply_vec(psi.amplitudes(), false);
        let phase = qite_core::scalar::cis(-spec.eigenvalues[j]);
        let want: Vec<_> = psi.amplitudes().iter().map(|a| a * phase).collect();
        assert!(max_diff(&out, &want) <= 1e-10);
    }
}
