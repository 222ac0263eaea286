//! Pauli strings, Hamiltonians as weighted Pauli sums, and the dense spectral
//! reference used throughout the crate.
//!
//! Bit convention: character `j` of a Pauli string acts on qubit `j`, and qubit
//! 0 is the most significant bit of a basis index. A string acts on a basis
//! state as
//!
//! ```text
//! P|b> = i^{#Y} (-1)^{popcount(b & zmask)} |b xor xmask>
//! ```
//!
//! where `xmask` marks X/Y sites and `zmask` marks Z/Y sites.

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{QiteError, Result};
use crate::linalg::{hermitian_eigen, spectral_function, CMatrix};
use crate::scalar::{c, cis, cr, Real, C};
use crate::statevector::StateVector;

/// Default qubit limit for dense diagonalization.
pub const DENSE_LIMIT: usize = 12;

/// Gap below which a spectrum is reported as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_char(ch: char) -> Option<Self> {
        match ch {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PauliString {
    ops: Vec<Pauli>,
}

impl PauliString {
    pub fn new(ops: Vec<Pauli>) -> Result<Self> {
        if ops.is_empty() {
            return Err(QiteError::InvalidArgument("empty Pauli string".into()));
        }
        if ops.len() > 63 {
            return Err(QiteError::InvalidArgument("Pauli string longer than 63 qubits".into()));
        }
        Ok(Self { ops })
    }

    pub fn identity(n: usize) -> Self {
        Self { ops: vec![Pauli::I; n] }
    }

    /// Single non-identity factor `p` on `site`.
    pub fn single(n: usize, site: usize, p: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n];
        ops[site] = p;
        Self { ops }
    }

    /// `p` on `a` and on `b`.
    pub fn pair(n: usize, a: usize, b: usize, p: Pauli) -> Self {
        let mut ops = vec![Pauli::I; n];
        ops[a] = p;
        ops[b] = p;
        Self { ops }
    }

    pub fn qubit_count(&self) -> usize {
        self.ops.len()
    }

    pub fn ops(&self) -> &[Pauli] {
        &self.ops
    }

    pub fn is_identity(&self) -> bool {
        self.ops.iter().all(|&p| p == Pauli::I)
    }

    #[inline]
    fn bit(&self, q: usize) -> usize {
        1usize << (self.ops.len() - 1 - q)
    }

    pub fn x_mask(&self) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| matches!(p, Pauli::X | Pauli::Y))
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    pub fn z_mask(&self) -> usize {
        self.ops
            .iter()
            .enumerate()
            .filter(|(_, &p)| matches!(p, Pauli::Z | Pauli::Y))
            .fold(0, |m, (q, _)| m | self.bit(q))
    }

    /// Mask of every non-identity site.
    pub fn support_mask(&self) -> usize {
        self.x_mask() | self.z_mask()
    }

    pub fn y_count(&self) -> usize {
        self.ops.iter().filter(|&&p| p == Pauli::Y).count()
    }

    /// `i^{#Y}`.
    pub fn y_phase<T: Real>(&self) -> C<T> {
        match self.y_count() % 4 {
            0 => c(T::one(), T::zero()),
            1 => c(T::zero(), T::one()),
            2 => c(-T::one(), T::zero()),
            _ => c(T::zero(), -T::one()),
        }
    }

    /// Writes `P x` into `out` (both of length `2^n`).
    pub fn apply_into<T: Real>(&self, x: &[C<T>], out: &mut [C<T>]) {
        let xm = self.x_mask();
        let zm = self.z_mask();
        let ph = self.y_phase::<T>();
        for (b, &amp) in x.iter().enumerate() {
            let v = amp * ph;
            out[b ^ xm] = if (b & zm).count_ones() % 2 == 1 { -v } else { v };
        }
    }

    pub fn dense<T: Real>(&self) -> CMatrix<T> {
        let dim = 1usize << self.qubit_count();
        let xm = self.x_mask();
        let zm = self.z_mask();
        let ph = self.y_phase::<T>();
        let mut m = CMatrix::zeros(dim, dim);
        for b in 0..dim {
            let v = if (b & zm).count_ones() % 2 == 1 { -ph } else { ph };
            m.set(b ^ xm, b, v);
        }
        m
    }

    /// Dense `e^{-iθP/2}`.
    pub fn rotation_dense<T: Real>(&self, theta: T) -> CMatrix<T> {
        let half = theta * T::lit(0.5);
        let dim = 1usize << self.qubit_count();
        let id = CMatrix::identity(dim).scale(cr(half.cos()));
        id.add(&self.dense::<T>().scale(c(T::zero(), -half.sin())))
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for p in &self.ops {
            write!(f, "{}", p.as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = QiteError;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .chars()
            .map(|ch| {
                Pauli::from_char(ch)
                    .ok_or_else(|| QiteError::Format(format!("invalid Pauli label {ch:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        PauliString::new(ops)
    }
}

/// `H = Σ_j h_j σ_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum<T: Real> {
    n: usize,
    terms: Vec<(T, PauliString)>,
    normalized: bool,
    shift: T,
}

impl<T: Real> PauliSum<T> {
    pub fn new(n: usize, terms: Vec<(T, PauliString)>) -> Result<Self> {
        if n == 0 {
            return Err(QiteError::InvalidArgument("qubit count must be positive".into()));
        }
        if terms.is_empty() {
            return Err(QiteError::InvalidArgument("a PauliSum needs at least one term".into()));
        }
        for (h, p) in &terms {
            if p.qubit_count() != n {
                return Err(QiteError::DimensionMismatch { expected: n, got: p.qubit_count() });
            }
            if !h.is_finite() {
                return Err(QiteError::InvalidArgument("non-finite coefficient".into()));
            }
        }
        Ok(Self { n, terms, normalized: false, shift: T::zero() })
    }

    pub fn qubit_count(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        1 << self.n
    }

    pub fn terms(&self) -> &[(T, PauliString)] {
        &self.terms
    }

    /// L.
    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    /// Λ = max_j |h_j|.
    pub fn max_abs_coeff(&self) -> T {
        self.terms.iter().fold(T::zero(), |m, (h, _)| m.max(h.abs()))
    }

    /// S = Σ_j |h_j|.
    pub fn coeff_l1(&self) -> T {
        self.terms.iter().map(|(h, _)| h.abs()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// Identity offset added during normalization (zero when none was needed).
    pub fn shift(&self) -> T {
        self.shift
    }

    pub fn scaled(&self, s: T) -> Self {
        Self {
            n: self.n,
            terms: self.terms.iter().map(|(h, p)| (*h * s, p.clone())).collect(),
            normalized: false,
            shift: T::zero(),
        }
    }

    pub fn dense(&self) -> CMatrix<T> {
        let dim = self.dim();
        let mut m = CMatrix::zeros(dim, dim);
        for (h, p) in &self.terms {
            let xm = p.x_mask();
            let zm = p.z_mask();
            let ph = p.y_phase::<T>() * cr(*h);
            for b in 0..dim {
                let v = if (b & zm).count_ones() % 2 == 1 { -ph } else { ph };
                let r = b ^ xm;
                m.set(r, b, m.get(r, b) + v);
            }
        }
        m
    }

    /// `H x` without materializing `H`.
    pub fn apply(&self, x: &[C<T>]) -> Vec<C<T>> {
        let mut out = vec![C::zero(); x.len()];
        let mut tmp = vec![C::zero(); x.len()];
        for (h, p) in &self.terms {
            p.apply_into(x, &mut tmp);
            for (o, t) in out.iter_mut().zip(&tmp) {
                *o += *t * cr(*h);
            }
        }
        out
    }

    /// `<x|H|x>` for a (not necessarily normalized) amplitude vector.
    pub fn expectation(&self, x: &[C<T>]) -> T {
        let hx = self.apply(x);
        x.iter().zip(&hx).map(|(a, b)| (a.conj() * b).re).sum()
    }

    /// Serializable form.
    pub fn to_file(&self) -> HamiltonianFile {
        HamiltonianFile {
            n: self.n,
            terms: self
                .terms
                .iter()
                .map(|(h, p)| TermRecord { coeff: h.as_f64(), pauli: p.to_string() })
                .collect(),
            normalized: self.normalized,
            shift: self.shift.as_f64(),
        }
    }

    pub fn from_file(file: &HamiltonianFile) -> Result<Self> {
        let terms = file
            .terms
            .iter()
            .map(|t| Ok((T::lit(t.coeff), t.pauli.parse::<PauliString>()?)))
            .collect::<Result<Vec<_>>>()?;
        let mut h = Self::new(file.n, terms)?;
        h.normalized = file.normalized;
        h.shift = T::lit(file.shift);
        Ok(h)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(s)?)
    }
}

/// On-disk Hamiltonian: `{"n", "terms": [{"coeff", "pauli"}], "normalized", "shift"}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HamiltonianFile {
    pub n: usize,
    pub terms: Vec<TermRecord>,
    #[serde(default)]
    pub normalized: bool,
    #[serde(default)]
    pub shift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermRecord {
    pub coeff: f64,
    pub pauli: String,
}

/// Open-chain Heisenberg model with a transverse X field:
/// `-Σ_j (X_j X_{j+1} + Y_j Y_{j+1} + Z_j Z_{j+1}) - ½ Σ_j X_j`, unnormalized.
pub fn build_heisenberg<T: Real>(n: usize) -> Result<PauliSum<T>> {
    if n < 2 {
        return Err(QiteError::InvalidArgument(format!("Heisenberg chain needs n >= 2, got {n}")));
    }
    let mut terms = Vec::with_capacity(4 * n - 3);
    for j in 0..n - 1 {
        for p in [Pauli::X, Pauli::Y, Pauli::Z] {
            terms.push((-T::one(), PauliString::pair(n, j, j + 1, p)));
        }
    }
    for j in 0..n {
        terms.push((T::lit(-0.5), PauliString::single(n, j, Pauli::X)));
    }
    PauliSum::new(n, terms)
}

/// Rescales `h` by its spectral radius so the spectrum lies in `[-1, 1]`.
///
/// If the rescaled ground energy is not negative, the spectrum is centred with
/// an identity term and stretched back to unit radius; the identity offset is
/// recorded in [`PauliSum::shift`].
pub fn normalize<T: Real>(h: &PauliSum<T>) -> Result<PauliSum<T>> {
    let spec = diagonalize(h)?;
    let radius = spec
        .eigenvalues
        .iter()
        .fold(T::zero(), |m, v| m.max(v.abs()));
    if radius <= T::epsilon() * T::lit(16.0) * (T::one() + h.coeff_l1()) {
        return Err(QiteError::ZeroHamiltonian);
    }
    let lo = spec.ground_energy / radius;
    let hi = *spec.eigenvalues.last().unwrap() / radius;
    if lo < T::zero() {
        let mut out = h.scaled(T::one() / radius);
        out.normalized = true;
        return Ok(out);
    }
    let half = T::lit(0.5);
    let (center, width) = if hi - lo > T::lit(DEGENERACY_TOL) {
        ((lo + hi) * half, (hi - lo) * half)
    } else {
        (lo + half, half)
    };
    let mut out = h.scaled(T::one() / (radius * width));
    let offset = -center / width;
    let id = PauliString::identity(h.n);
    match out.terms.iter_mut().find(|(_, p)| *p == id) {
        Some(term) => term.0 += offset,
        None => out.terms.push((offset, id)),
    }
    out.normalized = true;
    out.shift = offset;
    Ok(out)
}

/// Exact eigendecomposition of a Hamiltonian.
#[derive(Clone, Debug)]
pub struct SpectrumInfo<T: Real> {
    /// Ascending eigenvalues λ_j.
    pub eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: CMatrix<T>,
    /// Δ = λ_1 − λ_0 (zero for a one-dimensional space).
    pub gap: T,
    pub ground_energy: T,
    /// Set when Δ is below [`DEGENERACY_TOL`].
    pub degenerate: bool,
}

impl<T: Real> SpectrumInfo<T> {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn qubit_count(&self) -> usize {
        self.dim().trailing_zeros() as usize
    }

    pub fn eigenvector(&self, j: usize) -> StateVector<T> {
        StateVector::from_amplitudes(self.eigenvectors.column(j)).expect("orthonormal eigenvector")
    }

    pub fn ground_state(&self) -> StateVector<T> {
        self.eigenvector(0)
    }

    /// `c_j = <ψ_j|x>` for every eigenvector.
    pub fn coefficients(&self, x: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim();
        (0..n)
            .map(|j| {
                (0..n).fold(C::zero(), |acc, r| acc + self.eigenvectors.get(r, j).conj() * x[r])
            })
            .collect()
    }

    /// `Σ_j w_j |ψ_j>`.
    pub fn synthesize(&self, weights: &[C<T>]) -> Vec<C<T>> {
        let n = self.dim();
        (0..n)
            .map(|r| {
                weights
                    .iter()
                    .enumerate()
                    .fold(C::zero(), |acc, (j, w)| acc + self.eigenvectors.get(r, j) * *w)
            })
            .collect()
    }

    /// Dense `Σ_j f(λ_j)|ψ_j><ψ_j|`.
    pub fn function(&self, f: impl Fn(T) -> C<T>) -> CMatrix<T> {
        spectral_function(&self.eigenvalues, &self.eigenvectors, f)
    }

    /// Dense `e^{-itH}`.
    pub fn evolution(&self, t: T) -> CMatrix<T> {
        self.function(|l| cis(-t * l))
    }

    pub fn spectral_radius(&self) -> T {
        self.eigenvalues.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }
}

pub fn diagonalize<T: Real>(h: &PauliSum<T>) -> Result<SpectrumInfo<T>> {
    diagonalize_with_limit(h, DENSE_LIMIT)
}

pub fn diagonalize_with_limit<T: Real>(h: &PauliSum<T>, limit: usize) -> Result<SpectrumInfo<T>> {
    if h.qubit_count() > limit {
        return Err(QiteError::DenseLimit { qubits: h.qubit_count(), limit });
    }
    let (eigenvalues, eigenvectors) = hermitian_eigen(&h.dense());
    let ground_energy = eigenvalues[0];
    let gap = if eigenvalues.len() > 1 { eigenvalues[1] - eigenvalues[0] } else { T::zero() };
    Ok(SpectrumInfo {
        degenerate: gap < T::lit(DEGENERACY_TOL),
        eigenvalues,
        eigenvectors,
        gap,
        ground_energy,
    })
}

/// γ = |<ψ_0|φ>|.
pub fn overlap_gamma<T: Real>(spec: &SpectrumInfo<T>, phi: &StateVector<T>) -> Result<T> {
    if phi.dim() != spec.dim() {
        return Err(QiteError::DimensionMismatch { expected: spec.dim(), got: phi.dim() });
    }
    let c0 = spec.coefficients(phi.amplitudes())[0];
    Ok(c0.norm().min(T::one()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        let p: PauliString = "XIYZ".parse().unwrap();
        assert_eq!(p.to_string(), "XIYZ");
        assert!("XQ".parse::<PauliString>().is_err());
    }

    #[test]
    fn single_qubit_matrices() {
        let y = "Y".parse::<PauliString>().unwrap().dense::<f64>();
        assert_eq!(y.get(1, 0), c(0.0, 1.0));
        assert_eq!(y.get(0, 1), c(0.0, -1.0));
        let z = "Z".parse::<PauliString>().unwrap().dense::<f64>();
        assert_eq!(z.get(1, 1), c(-1.0, 0.0));
    }

    #[test]
    fn qubit_zero_is_msb() {
        let x0 = PauliString::single(2, 0, Pauli::X).dense::<f64>();
        // |00> -> |10> which is index 2
        assert_eq!(x0.get(2, 0), c(1.0, 0.0));
    }

    #[test]
    fn pauli_strings_are_involutory() {
        for s in ["XYZI", "YYYY", "ZIXY"] {
            let p = s.parse::<PauliString>().unwrap().dense::<f64>();
            assert!(p.is_hermitian(1e-15));
            assert!(p.matmul(&p).sub(&CMatrix::identity(16)).max_abs() < 1e-15);
        }
    }

    #[test]
    fn heisenberg_counts() {
        let h4 = build_heisenberg::<f64>(4).unwrap();
        assert_eq!(h4.term_count(), 13);
        assert_eq!(h4.max_abs_coeff(), 1.0);
        assert_eq!(build_heisenberg::<f64>(2).unwrap().term_count(), 5);
        assert!(build_heisenberg::<f64>(1).is_err());
    }

    #[test]
    fn normalize_minus_z() {
        let h = PauliSum::<f64>::new(1, vec![(-1.0, "Z".parse().unwrap())]).unwrap();
        let n = normalize(&h).unwrap();
        let s = diagonalize(&n).unwrap();
        assert_eq!(n.shift(), 0.0);
        assert!((s.eigenvalues[0] + 1.0).abs() < 1e-14 && (s.eigenvalues[1] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn normalize_identity_shifts() {
        let h = PauliSum::<f64>::new(1, vec![(1.0, "I".parse().unwrap())]).unwrap();
        let n = normalize(&h).unwrap();
        let s = diagonalize(&n).unwrap();
        assert!(s.ground_energy < 0.0);
        assert!(s.degenerate);
        assert!(n.shift() < 0.0);
        let again = normalize(&n).unwrap();
        assert!((diagonalize(&again).unwrap().ground_energy - s.ground_energy).abs() < 1e-12);
    }

    #[test]
    fn zero_hamiltonian_rejected() {
        let h = PauliSum::new(1, vec![(0.0, "Z".parse().unwrap())]).unwrap();
        assert_eq!(normalize(&h), Err(QiteError::ZeroHamiltonian));
    }

    #[test]
    fn z_spectrum() {
        let h = PauliSum::new(1, vec![(1.0, "Z".parse().unwrap())]).unwrap();
        let s = diagonalize(&h).unwrap();
        assert_eq!(s.eigenvalues, vec![-1.0, 1.0]);
        assert_eq!(s.gap, 2.0);
        assert!(!s.degenerate);
    }

    #[test]
    fn dense_limit_enforced() {
        let h = PauliSum::new(3, vec![(1.0, "ZZZ".parse().unwrap())]).unwrap();
        assert!(matches!(diagonalize_with_limit(&h, 2), Err(QiteError::DenseLimit { .. })));
    }

    #[test]
    fn json_round_trip() {
        let h = normalize(&build_heisenberg::<f64>(3).unwrap()).unwrap();
        let back = PauliSum::<f64>::from_json(&h.to_json().unwrap()).unwrap();
        assert_eq!(back, h);
        assert!(PauliSum::<f64>::from_json(r#"{"n":1,"terms":[],"bogus":1}"#).is_err());
    }

    #[test]
    fn apply_matches_dense() {
        let h = build_heisenberg::<f64>(3).unwrap();
        let x: Vec<C<f64>> = (0..8).map(|k| c(k as f64 * 0.1, 1.0 - k as f64 * 0.05)).collect();
        let a = h.apply(&x);
        let b = h.dense().mul_vec(&x);
        for (u, v) in a.iter().zip(&b) {
            assert!((u - v).norm() < 1e-14);
        }
    }
}
