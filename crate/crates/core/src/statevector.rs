//! Dense statevector simulation.
//!
//! The register layout is fixed crate-wide: qubit 0 is the most significant bit
//! of the amplitude index. When a state carries an ancilla it is qubit 0, so the
//! ancilla-|0> branch is the first half of the amplitude vector.
//!
//! Sampling draws shots in fixed blocks of [`SHOT_BLOCK`]; block `k` uses a
//! ChaCha8 stream `k` keyed by the seed, so results do not depend on how blocks
//! are scheduled across threads.

use std::io::{Read, Write};

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{QiteError, Result};
use crate::linalg::CMatrix;
use crate::pauli::PauliString;
use crate::scalar::{c, cr, Real, C};
use crate::unitary::UnitaryOp;

/// Shots drawn per RNG stream.
pub const SHOT_BLOCK: u64 = 1 << 16;

const DUMP_MAGIC: &[u8; 4] = b"QSV1";

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T: Real> {
    amps: Vec<C<T>>,
    qubits: usize,
    normalized: bool,
}

/// One computational-basis outcome. The ancilla bit is the leading qubit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct MeasurementRecord {
    pub bitstring: u64,
    pub ancilla_bit: u8,
    pub system_bits: u64,
}

impl MeasurementRecord {
    pub fn from_index(index: usize, qubits: usize) -> Self {
        let top = qubits - 1;
        Self {
            bitstring: index as u64,
            ancilla_bit: ((index >> top) & 1) as u8,
            system_bits: (index & ((1usize << top) - 1)) as u64,
        }
    }
}

fn qubits_of(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(QiteError::InvalidArgument(format!("amplitude count {len} is not 2^m with m >= 1")));
    }
    Ok(len.trailing_zeros() as usize)
}

impl<T: Real> StateVector<T> {
    pub fn basis(qubits: usize, index: usize) -> Self {
        let mut amps = vec![C::zero(); 1 << qubits];
        amps[index] = cr(T::one());
        Self { amps, qubits, normalized: true }
    }

    pub fn zero_state(qubits: usize) -> Self {
        Self::basis(qubits, 0)
    }

    /// Wraps amplitudes that must already have unit norm.
    pub fn from_amplitudes(amps: Vec<C<T>>) -> Result<Self> {
        let qubits = qubits_of(amps.len())?;
        let s = Self { amps, qubits, normalized: true };
        let n = s.norm();
        if (n - T::one()).abs() > T::check_tol() {
            return Err(QiteError::Unnormalized(n.as_f64()));
        }
        Ok(s)
    }

    /// Wraps amplitudes of arbitrary norm, flagged as unnormalized.
    pub fn unnormalized(amps: Vec<C<T>>) -> Result<Self> {
        let qubits = qubits_of(amps.len())?;
        Ok(Self { amps, qubits, normalized: false })
    }

    /// Rescales to unit norm.
    pub fn normalize(amps: Vec<C<T>>) -> Result<Self> {
        let mut s = Self::unnormalized(amps)?;
        let n = s.norm();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(QiteError::Unnormalized(n.as_f64()));
        }
        let inv = cr(T::one() / n);
        s.amps.iter_mut().for_each(|a| *a *= inv);
        s.normalized = true;
        Ok(s)
    }

    pub fn qubit_count(&self) -> usize {
        self.qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn amplitudes(&self) -> &[C<T>] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C<T>> {
        self.amps
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        self.check_dim(other.dim())?;
        Ok(self.amps.iter().zip(&other.amps).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.dim() {
            return Err(QiteError::DimensionMismatch { expected: self.dim(), got: d });
        }
        Ok(())
    }

    fn with_amps(&self, amps: Vec<C<T>>) -> Self {
        Self { amps, qubits: self.qubits, normalized: self.normalized }
    }

    pub fn apply_dense(&self, u: &CMatrix<T>) -> Result<Self> {
        self.check_dim(u.rows())?;
        self.check_dim(u.cols())?;
        let dev = u.adjoint().matmul(u).sub(&CMatrix::identity(u.rows())).max_abs();
        if dev > T::check_tol() {
            return Err(QiteError::NotUnitary(dev.as_f64()));
        }
        Ok(self.with_amps(u.mul_vec(&self.amps)))
    }

    pub fn apply_pauli(&self, p: &PauliString) -> Result<Self> {
        self.check_dim(1 << p.qubit_count())?;
        let mut out = vec![C::zero(); self.dim()];
        p.apply_into(&self.amps, &mut out);
        Ok(self.with_amps(out))
    }

    /// `e^{-iθP/2} = cos(θ/2) I - i sin(θ/2) P`.
    pub fn apply_pauli_rotation(&self, p: &PauliString, theta: T) -> Result<Self> {
        self.check_dim(1 << p.qubit_count())?;
        let mut amps = self.amps.clone();
        rotate_in_place(&mut amps, p, theta);
        Ok(self.with_amps(amps))
    }

    /// Applies `U` (or `U†`) to the system register when the leading ancilla
    /// equals `control_value`.
    pub fn apply_controlled<U: UnitaryOp<T> + ?Sized>(
        &self,
        u: &U,
        control_value: u8,
        dagger: bool,
    ) -> Result<Self> {
        if self.qubits < 2 {
            return Err(QiteError::MissingAncilla);
        }
        let half = self.dim() / 2;
        self.check_dim(2 * u.dim())?;
        let mut amps = self.amps.clone();
        let range = if control_value == 0 { 0..half } else { half..2 * half };
        let mut buf = vec![C::zero(); half];
        u.apply_to(&self.amps[range.clone()], &mut buf, dagger);
        amps[range].copy_from_slice(&buf);
        Ok(self.with_amps(amps))
    }

    /// Embeds `|0>_a ⊗ self` with the ancilla as the new leading qubit.
    pub fn with_ancilla(&self) -> Self {
        let mut amps = self.amps.clone();
        amps.resize(2 * self.dim(), C::zero());
        Self { amps, qubits: self.qubits + 1, normalized: self.normalized }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr().as_f64()).collect()
    }

    /// I.i.d. computational-basis samples.
    pub fn sample(&self, shots: u64, seed: u64) -> Result<Vec<MeasurementRecord>> {
        let idx = self.sample_indices(shots, seed)?;
        Ok(idx.into_iter().map(|i| MeasurementRecord::from_index(i, self.qubits)).collect())
    }

    /// Outcome histogram over basis indices. Draws the same shots as
    /// [`StateVector::sample`] for equal arguments.
    pub fn sample_counts(&self, shots: u64, seed: u64) -> Result<Vec<u64>> {
        let cdf = self.cdf()?;
        let dim = self.dim();
        let blocks = shots.div_ceil(SHOT_BLOCK);
        let partial: Vec<Vec<u64>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut counts = vec![0u64; dim];
                let n = block_len(shots, b);
                let mut rng = block_rng(seed, b);
                for _ in 0..n {
                    counts[draw(&cdf, &mut rng)] += 1;
                }
                counts
            })
            .collect();
        let mut total = vec![0u64; dim];
        for p in partial {
            total.iter_mut().zip(p).for_each(|(t, v)| *t += v);
        }
        Ok(total)
    }

    fn sample_indices(&self, shots: u64, seed: u64) -> Result<Vec<usize>> {
        let cdf = self.cdf()?;
        let blocks = shots.div_ceil(SHOT_BLOCK);
        let parts: Vec<Vec<usize>> = (0..blocks)
            .into_par_iter()
            .map(|b| {
                let mut rng = block_rng(seed, b);
                (0..block_len(shots, b)).map(|_| draw(&cdf, &mut rng)).collect()
            })
            .collect();
        Ok(parts.concat())
    }

    fn cdf(&self) -> Result<Vec<f64>> {
        if !self.normalized {
            return Err(QiteError::Unnormalized(self.norm().as_f64()));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = self
            .probabilities()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        if (acc - 1.0).abs() > T::CHECK_TOL.max(1e-10) {
            return Err(QiteError::Unnormalized(acc.sqrt()));
        }
        // guard against round-off leaving a gap above the last bin
        let last = cdf.len() - 1;
        cdf[last] = f64::INFINITY;
        Ok(cdf)
    }

    /// Binary dump: magic `QSV1`, u32 LE qubit count, then interleaved
    /// little-endian f64 (re, im) pairs.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&(self.qubits as u32).to_le_bytes())?;
        for a in &self.amps {
            w.write_all(&a.re.as_f64().to_le_bytes())?;
            w.write_all(&a.im.as_f64().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<Self> {
        let mut head = [0u8; 8];
        r.read_exact(&mut head)?;
        if &head[..4] != DUMP_MAGIC {
            return Err(QiteError::Format("bad statevector magic".into()));
        }
        let qubits = u32::from_le_bytes(head[4..8].try_into().unwrap()) as usize;
        if qubits == 0 || qubits > 30 {
            return Err(QiteError::Format(format!("unsupported qubit count {qubits}")));
        }
        let mut amps = Vec::with_capacity(1 << qubits);
        let mut buf = [0u8; 16];
        for _ in 0..(1usize << qubits) {
            r.read_exact(&mut buf)?;
            let re = f64::from_le_bytes(buf[..8].try_into().unwrap());
            let im = f64::from_le_bytes(buf[8..].try_into().unwrap());
            amps.push(c(T::lit(re), T::lit(im)));
        }
        let s = Self::unnormalized(amps)?;
        let n = s.norm();
        Ok(Self { normalized: (n - T::one()).abs() <= T::check_tol(), ..s })
    }
}

fn block_len(shots: u64, block: u64) -> u64 {
    (shots - block * SHOT_BLOCK).min(SHOT_BLOCK)
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

#[inline]
fn draw(cdf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

/// In-place `e^{-iθP/2}` on raw amplitudes.
pub fn rotate_in_place<T: Real>(amps: &mut [C<T>], p: &PauliString, theta: T) {
    let half = theta * T::lit(0.5);
    let (s, co) = half.sin_cos();
    let xm = p.x_mask();
    let zm = p.z_mask();
    let ph = p.y_phase::<T>();
    // P|b> = ph * sign(b) |b ^ xm>; coefficient of -i sin on the image.
    let coef = ph * c(T::zero(), -s);
    let sign = |b: usize| if (b & zm).count_ones() % 2 == 1 { -T::one() } else { T::one() };
    if xm == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            *a *= cr(co) + coef * cr(sign(b));
        }
        return;
    }
    for b in 0..amps.len() {
        let partner = b ^ xm;
        if partner < b {
            continue;
        }
        let ab = amps[b];
        let ap = amps[partner];
        amps[b] = ab * cr(co) + coef * cr(sign(partner)) * ap;
        amps[partner] = ap * cr(co) + coef * cr(sign(b)) * ab;
    }
}

/// `|<a|b>|` between normalized states.
pub fn fidelity<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    for s in [a, b] {
        if !s.normalized {
            return Err(QiteError::Unnormalized(s.norm().as_f64()));
        }
    }
    Ok(a.inner(b)?.norm().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::unitary::DenseUnitary;

    fn plus() -> StateVector<f64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        StateVector::from_amplitudes(vec![cr(h), cr(h)]).unwrap()
    }

    #[test]
    fn x_flips_zero() {
        let x = "X".parse::<PauliString>().unwrap().dense::<f64>();
        let out = StateVector::zero_state(1).apply_dense(&x).unwrap();
        assert_eq!(out, StateVector::basis(1, 1));
    }

    #[test]
    fn non_unitary_rejected() {
        let m = CMatrix::<f64>::identity(2).scale(cr(2.0));
        assert!(matches!(StateVector::zero_state(1).apply_dense(&m), Err(QiteError::NotUnitary(_))));
    }

    #[test]
    fn z_rotation_by_pi() {
        let z: PauliString = "Z".parse().unwrap();
        let out = StateVector::<f64>::zero_state(1).apply_pauli_rotation(&z, std::f64::consts::PI).unwrap();
        assert!((out.amplitudes()[0] - c(0.0, -1.0)).norm() < 1e-15);
    }

    #[test]
    fn controlled_respects_ancilla() {
        let x = DenseUnitary::new("X".parse::<PauliString>().unwrap().dense::<f64>()).unwrap();
        let s = StateVector::<f64>::zero_state(2);
        assert_eq!(s.apply_controlled(&x, 1, false).unwrap(), s);
        let s1 = StateVector::<f64>::basis(2, 0b10);
        assert_eq!(s1.apply_controlled(&x, 1, false).unwrap(), StateVector::basis(2, 0b11));
        assert!(StateVector::<f64>::zero_state(1).apply_controlled(&x, 1, false).is_err());
    }

    #[test]
    fn fidelity_examples() {
        let z = StateVector::<f64>::zero_state(1);
        let o = StateVector::<f64>::basis(1, 1);
        assert_eq!(fidelity(&z, &z).unwrap(), 1.0);
        assert_eq!(fidelity(&z, &o).unwrap(), 0.0);
        assert!((fidelity(&z, &plus()).unwrap() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-15);
        let un = StateVector::unnormalized(vec![cr(0.5), cr(0.0)]).unwrap();
        assert!(fidelity(&un, &z).is_err());
    }

    #[test]
    fn sampling_basis_state() {
        let recs = StateVector::<f64>::zero_state(2).sample(1000, 7).unwrap();
        assert!(recs.iter().all(|r| r.bitstring == 0));
    }

    #[test]
    fn sampling_plus_concentrates() {
        let shots = 1_000_000u64;
        let counts = plus().sample_counts(shots, 11).unwrap();
        let f0 = counts[0] as f64 / shots as f64;
        assert!((f0 - 0.5).abs() <= 5.0 * 0.0005, "f0 = {f0}");
    }

    #[test]
    fn samples_match_counts() {
        let s = StateVector::normalize(vec![cr(1.0), c(0.0, 2.0), cr(-0.5), cr(0.3)]).unwrap();
        let recs = s.sample(200_000, 3).unwrap();
        let counts = s.sample_counts(200_000, 3).unwrap();
        let mut from_recs = vec![0u64; 4];
        for r in &recs {
            from_recs[r.bitstring as usize] += 1;
        }
        assert_eq!(from_recs, counts);
        assert_eq!(s.sample(1000, 5).unwrap(), s.sample(1000, 5).unwrap());
        assert_ne!(s.sample(1000, 5).unwrap(), s.sample(1000, 6).unwrap());
    }

    #[test]
    fn record_layout() {
        let r = MeasurementRecord::from_index(0b101, 3);
        assert_eq!(r.ancilla_bit, 1);
        assert_eq!(r.system_bits, 0b01);
    }

    #[test]
    fn dump_round_trip() {
        let s = StateVector::normalize(vec![cr(1.0), c(0.0, 2.0), cr(-0.5), cr(0.3)]).unwrap();
        let mut buf = Vec::new();
        s.write_dump(&mut buf).unwrap();
        assert_eq!(buf.len(), 8 + 4 * 16);
        let back = StateVector::<f64>::read_dump(&buf[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rotation_f32() {
        let x: PauliString = "X".parse().unwrap();
        let out = StateVector::<f32>::zero_state(1).apply_pauli_rotation(&x, std::f32::consts::PI).unwrap();
        assert!((out.amplitudes()[1] - c(0.0f32, -1.0)).norm() < 1e-6);
    }
}
