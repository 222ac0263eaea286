//! Ground-energy search: the loss `𝓛(λ) = <φ|f(U)† H f(U)|φ>`, its
//! sampling estimator, the bracket bootstrap, the ternary decision rule, the
//! convergence test and the adaptive loop that ties them together.

use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::{fit_to_eps, target_g, ApproxSpec, DegreeSearch, TrigPolynomial, EPS_FLOOR};
use crate::error::{QiteError, Result};
use crate::pauli::{diagonalize, Pauli, PauliSum, SpectrumInfo};
use crate::qpp::{apply_block, block_joint};
use crate::scalar::{c, cr, Real, C};
use crate::statevector::StateVector;
use crate::unitary::{DenseUnitary, UnitaryOp};

/// z-score of the two-sided 95% interval.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Default cap on ternary iterations.
pub const MAX_ITERATIONS: usize = 200;

/// `Σ_j |c_j|² g(−λ_j)² λ_j`, with `g` the smooth extension of `f_{τ,λ}`.
pub fn loss_ideal<T: Real>(spectrum: &SpectrumInfo<T>, phi: &StateVector<T>, spec: &ApproxSpec<T>) -> T {
    spectrum
        .coefficients(phi.amplitudes())
        .iter()
        .zip(&spectrum.eigenvalues)
        .map(|(cj, &lj)| {
            let g = target_g(-lj, spec);
            cj.norm_sqr() * g * g * lj
        })
        .sum()
}

/// `Σ_j |c_j|² |F(−λ_j)|² λ_j`: the loss the QPP circuit actually measures.
pub fn loss_with_poly<T: Real>(spectrum: &SpectrumInfo<T>, phi: &StateVector<T>, poly: &TrigPolynomial<T>) -> T {
    spectrum
        .coefficients(phi.amplitudes())
        .iter()
        .zip(&spectrum.eigenvalues)
        .map(|(cj, &lj)| cj.norm_sqr() * poly.eval(-lj).norm_sqr() * lj)
        .sum()
}

/// Eigenbasis loss. With `use_f` the polynomial is refitted from `spec`
/// (its recorded degree, else its recorded ε, else ε = 1e-4).
pub fn loss_exact<T: Real>(h: &PauliSum<T>, phi: &StateVector<T>, spec: &ApproxSpec<T>, use_f: bool) -> Result<T> {
    let spectrum = diagonalize(h)?;
    if !use_f {
        return Ok(loss_ideal(&spectrum, phi, spec));
    }
    let poly = match spec.degree {
        Some(d) => crate::approx::fourier_fit(spec, d)?.poly,
        None => fit_to_eps(spec, spec.eps.unwrap_or(T::lit(1e-4)), DegreeSearch::default())?.poly,
    };
    Ok(loss_with_poly(&spectrum, phi, &poly))
}

/// `⌈8LΛ²τ³/B²⌉`.
pub fn shot_budget<T: Real>(terms: usize, lam: T, tau: T, b: T) -> Result<u64> {
    if !(b > T::zero()) {
        return Err(QiteError::InvalidArgument(format!("B must be positive, got {b}")));
    }
    let v = T::lit(8.0) * T::from_count(terms) * lam * lam * tau * tau * tau / (b * b);
    Ok(v.as_f64().ceil().max(1.0) as u64)
}

/// One loss estimate with its ancilla-0 tally.
///
/// Every ancilla-0 sample is `±S`; `plus` and `minus` count them (expected
/// counts in exact mode), so the raw sample list is recoverable from the tally.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LossEstimate<T: Real> {
    pub value: T,
    pub shots_used: u64,
    pub plus: T,
    pub minus: T,
    /// `S = Σ|h_l|`.
    pub scale: T,
    pub seed: u64,
    pub degree: usize,
    pub queries: u64,
}

impl<T: Real> LossEstimate<T> {
    pub fn ancilla_zero(&self) -> T {
        self.plus + self.minus
    }

    pub fn energy(&self) -> Option<EnergyEstimate<T>> {
        EnergyEstimate::from_tally(self.plus, self.minus, self.scale)
    }
}

/// Post-selected energy `S(2p̂ − 1)` with a 95% Agresti–Coull interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyEstimate<T: Real> {
    pub value: T,
    pub ci_low: T,
    pub ci_high: T,
    pub samples: T,
}

impl<T: Real> EnergyEstimate<T> {
    pub fn from_tally(plus: T, minus: T, scale: T) -> Option<Self> {
        let n = plus + minus;
        if !(n > T::zero()) {
            return None;
        }
        let p = plus / n;
        let (lo, hi) = agresti_coull(plus, n, T::lit(Z95));
        let map = |q: T| scale * (q + q - T::one());
        Some(Self { value: map(p), ci_low: map(lo), ci_high: map(hi), samples: n })
    }

    pub fn contains(&self, x: T) -> bool {
        self.ci_low <= x && x <= self.ci_high
    }

    pub fn half_width(&self) -> T {
        (self.ci_high - self.ci_low) * T::lit(0.5)
    }
}

/// Agresti–Coull interval for `successes` out of `n`, clamped to `[0, 1]`.
pub fn agresti_coull<T: Real>(successes: T, n: T, z: T) -> (T, T) {
    let z2 = z * z;
    let nt = n + z2;
    let pt = (successes + z2 * T::lit(0.5)) / nt;
    let half = z * (pt * (T::one() - pt) / nt).sqrt();
    ((pt - half).max(T::zero()), (pt + half).min(T::one()))
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    let mut z = seed ^ a.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ b.wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn apply_1q<T: Real>(amps: &mut [C<T>], bit: usize, m: [[C<T>; 2]; 2]) {
    let stride = 1usize << bit;
    for i in 0..amps.len() {
        if i & stride == 0 {
            let (a0, a1) = (amps[i], amps[i | stride]);
            amps[i] = m[0][0] * a0 + m[0][1] * a1;
            amps[i | stride] = m[1][0] * a0 + m[1][1] * a1;
        }
    }
}

/// Applies the per-site basis change `T` taking `σ` to a Z/I string, acting on
/// the system qubits of an ancilla+system register.
pub fn basis_change<T: Real>(joint: &mut [C<T>], sigma: &crate::pauli::PauliString) {
    let n = sigma.qubit_count();
    let r = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let had = [[cr(r), cr(r)], [cr(r), cr(-r)]];
    let sdg = [[cr(T::one()), cr(T::zero())], [cr(T::zero()), c(T::zero(), -T::one())]];
    for (q, p) in sigma.ops().iter().enumerate() {
        let bit = n - 1 - q;
        match p {
            Pauli::X => apply_1q(joint, bit, had),
            Pauli::Y => {
                apply_1q(joint, bit, sdg);
                apply_1q(joint, bit, had);
            }
            Pauli::I | Pauli::Z => {}
        }
    }
}

/// Sample value `(1 − b_0)·sign(h_l)·S·<b|Tσ_lT†|b>` for joint basis index `idx`.
pub fn sample_value<T: Real>(idx: usize, n: usize, h_l: T, sigma: &crate::pauli::PauliString, scale: T) -> T {
    if idx >> n & 1 == 1 {
        return T::zero();
    }
    let parity = (idx & sigma.support_mask()).count_ones() % 2;
    let s = if h_l < T::zero() { -scale } else { scale };
    if parity == 1 {
        -s
    } else {
        s
    }
}

/// Sampling estimator: draw term indices with weight `|h_l|/S`, rotate each
/// drawn term to the Z basis, sample the joint QPP output and average.
pub fn estimate_loss<T: Real, U: UnitaryOp<T> + ?Sized>(
    h: &PauliSum<T>,
    u: &U,
    phi: &StateVector<T>,
    poly: &TrigPolynomial<T>,
    shots: u64,
    seed: u64,
) -> Result<LossEstimate<T>> {
    if shots == 0 {
        return Err(QiteError::EmptySample);
    }
    let n = h.qubit_count();
    let scale = h.coeff_l1();
    let joint = block_joint(&apply_block(poly, u, phi)?, phi)?;
    let weights: Vec<f64> = h.terms().iter().map(|(hl, _)| hl.abs().as_f64()).collect();
    let dist = WeightedIndex::new(&weights).map_err(|_| QiteError::ZeroHamiltonian)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut per_term = vec![0u64; weights.len()];
    for _ in 0..shots {
        per_term[dist.sample(&mut rng)] += 1;
    }
    let (mut plus, mut minus) = (0u64, 0u64);
    for (l, &m_l) in per_term.iter().enumerate() {
        if m_l == 0 {
            continue;
        }
        let (h_l, sigma) = &h.terms()[l];
        let mut amps = joint.amplitudes().to_vec();
        basis_change(&mut amps, sigma);
        let rotated = StateVector::from_amplitudes(amps)?;
        let counts = rotated.sample_counts(m_l, mix(seed, l as u64 + 1, 0))?;
        for (idx, &k) in counts.iter().enumerate() {
            if k == 0 {
                continue;
            }
            let x = sample_value(idx, n, *h_l, sigma, scale);
            if x > T::zero() {
                plus += k;
            } else if x < T::zero() {
                minus += k;
            }
        }
    }
    let value = scale * T::lit((plus as f64 - minus as f64) / shots as f64);
    Ok(LossEstimate {
        value,
        shots_used: shots,
        plus: T::lit(plus as f64),
        minus: T::lit(minus as f64),
        scale,
        seed,
        degree: poly.degree(),
        queries: shots * 2 * poly.degree() as u64,
    })
}

/// Exact counterpart of [`estimate_loss`]: the estimator's mean, with the
/// ancilla-0 tally replaced by its expectation under `shots` draws.
pub fn expected_estimate<T: Real>(
    h: &PauliSum<T>,
    spectrum: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    poly: &TrigPolynomial<T>,
    shots: u64,
) -> LossEstimate<T> {
    let scale = h.coeff_l1();
    let w: Vec<C<T>> = spectrum
        .coefficients(phi.amplitudes())
        .iter()
        .zip(&spectrum.eigenvalues)
        .map(|(cj, &lj)| poly.eval(-lj) * *cj)
        .collect();
    let p0: T = w.iter().map(|v| v.norm_sqr()).sum();
    let value: T = w.iter().zip(&spectrum.eigenvalues).map(|(v, &lj)| v.norm_sqr() * lj).sum();
    let m = T::lit(shots as f64);
    // E[plus − minus] = M·L̃/S and E[plus + minus] = M·p0.
    let diff = m * value / scale;
    let tot = m * p0;
    LossEstimate {
        value,
        shots_used: shots,
        plus: (tot + diff) * T::lit(0.5),
        minus: (tot - diff) * T::lit(0.5),
        scale,
        seed: 0,
        degree: poly.degree(),
        queries: shots * 2 * poly.degree() as u64,
    }
}

/// Source of `𝓛̃(λ)` values for the search routines.
pub trait LossOracle<T: Real>: Sync {
    fn estimate(&self, tau: T, lam: T, shots: u64, seed: u64) -> Result<LossEstimate<T>>;
    /// `(L, Λ)` of the Hamiltonian.
    fn term_stats(&self) -> (usize, T);
}

/// Shared fitting policy: `ε = min(ε_max, B/(4τ))` unless fixed.
#[derive(Clone, Copy, Debug)]
pub struct FitPolicy<T: Real> {
    pub alpha: T,
    pub b: T,
    pub eps_max: T,
    pub eps_fixed: Option<T>,
    pub search: DegreeSearch,
}

impl<T: Real> FitPolicy<T> {
    pub fn new(alpha: T, b: T) -> Self {
        Self { alpha, b, eps_max: T::lit(1e-4), eps_fixed: None, search: DegreeSearch::default() }
    }

    pub fn eps(&self, tau: T) -> T {
        self.eps_fixed
            .unwrap_or_else(|| self.eps_max.min(self.b / (T::lit(4.0) * tau)))
            .max(T::lit(EPS_FLOOR))
    }

    pub fn fit(&self, tau: T, lam: T) -> Result<TrigPolynomial<T>> {
        let spec = ApproxSpec::new(tau, lam, self.alpha)?;
        Ok(fit_to_eps(&spec, self.eps(tau), self.search)?.poly)
    }
}

/// Infinite-shot surrogate: exact `𝓛̃` from the fitted `F`, with expected tallies.
pub struct ExactLoss<T: Real> {
    pub h: PauliSum<T>,
    pub spectrum: SpectrumInfo<T>,
    pub phi: StateVector<T>,
    pub policy: FitPolicy<T>,
}

impl<T: Real> ExactLoss<T> {
    pub fn new(h: &PauliSum<T>, phi: &StateVector<T>, policy: FitPolicy<T>) -> Result<Self> {
        Ok(Self { h: h.clone(), spectrum: diagonalize(h)?, phi: phi.clone(), policy })
    }
}

impl<T: Real> LossOracle<T> for ExactLoss<T> {
    fn estimate(&self, tau: T, lam: T, shots: u64, seed: u64) -> Result<LossEstimate<T>> {
        let poly = self.policy.fit(tau, lam)?;
        let mut est = expected_estimate(&self.h, &self.spectrum, &self.phi, &poly, shots);
        est.seed = seed;
        Ok(est)
    }

    fn term_stats(&self) -> (usize, T) {
        (self.h.term_count(), self.h.max_abs_coeff())
    }
}

/// Shot-sampled losses with `U = e^{-iH}` from the dense spectrum.
pub struct SampledLoss<T: Real> {
    pub h: PauliSum<T>,
    pub u: DenseUnitary<T>,
    pub phi: StateVector<T>,
    pub policy: FitPolicy<T>,
}

impl<T: Real> SampledLoss<T> {
    pub fn new(h: &PauliSum<T>, phi: &StateVector<T>, policy: FitPolicy<T>) -> Result<Self> {
        let u = DenseUnitary::evolution(&diagonalize(h)?, T::one());
        Ok(Self { h: h.clone(), u, phi: phi.clone(), policy })
    }
}

impl<T: Real> LossOracle<T> for SampledLoss<T> {
    fn estimate(&self, tau: T, lam: T, shots: u64, seed: u64) -> Result<LossEstimate<T>> {
        let poly = self.policy.fit(tau, lam)?;
        estimate_loss(&self.h, &self.u, &self.phi, &poly, shots, seed)
    }

    fn term_stats(&self) -> (usize, T) {
        (self.h.term_count(), self.h.max_abs_coeff())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartBranch {
    /// `𝓛̃(1 + 1/τ) ≤ −B` already.
    UpperEarly,
    Bisection,
    /// `𝓛̃(1/τ) > −B`; found by a descending scan instead.
    Scan,
}

#[derive(Clone, Debug)]
pub struct StartPoint<T: Real> {
    pub lambda: T,
    pub branch: StartBranch,
    pub evaluations: usize,
    pub halvings: usize,
    pub queries: u64,
}

/// Finds λ with `𝓛̃(λ) ≤ −B` and `𝓛̃(λ + 1/(2τ)) > −B` inside `[1/τ, 1 + 1/τ]`.
///
/// When `𝓛̃(1/τ) > −B` the bisection invariant is unavailable at the left end
/// (the bump cuts the ground component off for small λ), so the interval is
/// scanned downward from the right end at spacing `1/(2τ)`.
pub fn binary_search_start<T: Real, O: LossOracle<T> + ?Sized>(
    oracle: &O,
    tau: T,
    b: T,
    shots: u64,
    seed: u64,
) -> Result<StartPoint<T>> {
    let inv = T::one() / tau;
    let step = inv * T::lit(0.5);
    let neg_b = -b;
    let mut evals = 0usize;
    let mut queries = 0u64;
    let mut eval = |lam: T| -> Result<T> {
        let e = oracle.estimate(tau, lam, shots, mix(seed, 0xB15, evals as u64))?;
        evals += 1;
        queries += e.queries;
        Ok(e.value)
    };
    let mut lo = inv;
    let mut hi = T::one() + inv;
    if eval(hi)? <= neg_b {
        return Ok(StartPoint { lambda: hi, branch: StartBranch::UpperEarly, evaluations: evals, halvings: 0, queries });
    }
    if eval(lo)? > neg_b {
        let mut p = hi - step;
        while p >= lo {
            if eval(p)? <= neg_b {
                return Ok(StartPoint { lambda: p, branch: StartBranch::Scan, evaluations: evals, halvings: 0, queries });
            }
            p -= step;
        }
        return Err(QiteError::ThresholdNeverMet { neg_b: neg_b.as_f64() });
    }
    let mut halvings = 0;
    while hi - lo > step {
        let mid = (lo + hi) * T::lit(0.5);
        if eval(mid)? <= neg_b {
            lo = mid;
        } else {
            hi = mid;
        }
        halvings += 1;
    }
    Ok(StartPoint { lambda: lo, branch: StartBranch::Bisection, evaluations: evals, halvings, queries })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// `[λ_l, λ_r] ← [λ_lt, λ_r]`.
    LeftShrink,
    /// `[λ_l, λ_r] ← [λ_l, λ_rt]`.
    RightShrink,
}

/// `r = (𝓛̃(λ_lt) − 𝓛̃(λ_r))/𝓛̃(λ_r)`.
pub fn relative_change<T: Real>(loss_lt: T, loss_r: T) -> Result<T> {
    if loss_r == T::zero() {
        return Err(QiteError::ZeroDenominator);
    }
    Ok((loss_lt - loss_r) / loss_r)
}

/// Left-shrink iff `|r − (e^{4τδ} − 1)| > τ^{-1}(e^{4τδ} + 1)`.
pub fn ternary_decide<T: Real>(loss_lt: T, loss_r: T, tau: T, delta: T) -> Result<(Branch, T)> {
    let r = relative_change(loss_lt, loss_r)?;
    let e = (T::lit(4.0) * tau * delta).exp();
    let branch = if (r - (e - T::one())).abs() > (e + T::one()) / tau {
        Branch::LeftShrink
    } else {
        Branch::RightShrink
    };
    Ok((branch, r))
}

/// True iff the last two estimates lie in each other's intervals.
pub fn convergence_test_x<T: Real>(history: &[EnergyEstimate<T>]) -> bool {
    match history {
        [.., a, b] => a.contains(b.value) && b.contains(a.value),
        _ => false,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShotPolicy {
    /// `8LΛ²τ³/B²` at the current τ.
    Budget,
    /// The budget at the initial τ, held fixed.
    InitialBudget,
    Fixed(u64),
}

#[derive(Clone, Copy, Debug)]
pub struct SearchOptions<T: Real> {
    pub tau0: T,
    pub dt: T,
    pub b: T,
    pub shots: ShotPolicy,
    pub max_iterations: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct IterationRecord<T: Real> {
    pub i: usize,
    pub tau: T,
    pub lambda_lt: T,
    pub lambda_rt: T,
    /// Interval after the update.
    pub lambda_l: T,
    pub lambda_r: T,
    pub r: T,
    pub branch: Branch,
    pub energy: EnergyEstimate<T>,
    pub loss_lt: T,
    pub loss_r: T,
    pub shots: u64,
    pub queries: u64,
    pub cumulative_queries: u64,
}

#[derive(Clone, Debug)]
pub struct SearchOutcome<T: Real> {
    pub tau: T,
    pub lambda: T,
    pub lambda_l: T,
    pub energy: EnergyEstimate<T>,
    pub start: StartPoint<T>,
    pub records: Vec<IterationRecord<T>>,
    pub total_queries: u64,
}

impl<T: Real> SearchOutcome<T> {
    pub fn iterations(&self) -> usize {
        self.records.len()
    }
}

/// `⌈log_{3/2}(4τ/3)⌉`.
pub fn ternary_iteration_bound<T: Real>(tau: T) -> usize {
    ((T::lit(4.0) * tau / T::lit(3.0)).ln() / T::lit(1.5).ln()).ceil().as_f64().max(0.0) as usize
}

/// The adaptive ternary search loop, run until the interval is at most `1/τ`
/// and the convergence test passes.
pub fn run_adaptive_search<T: Real, O: LossOracle<T> + ?Sized>(
    oracle: &O,
    opts: &SearchOptions<T>,
) -> Result<SearchOutcome<T>> {
    if !(opts.tau0 > T::zero()) || opts.dt < T::zero() {
        return Err(QiteError::InvalidArgument("tau0 > 0 and dt >= 0 required".into()));
    }
    let (terms, lam_max) = oracle.term_stats();
    let initial = shot_budget(terms, lam_max, opts.tau0, opts.b)?;
    let shots_at = |tau: T| -> Result<u64> {
        match opts.shots {
            ShotPolicy::Budget => shot_budget(terms, lam_max, tau, opts.b),
            ShotPolicy::InitialBudget => Ok(initial),
            ShotPolicy::Fixed(m) => Ok(m),
        }
    };
    let mut tau = opts.tau0;
    let start = binary_search_start(oracle, tau, opts.b, shots_at(tau)?, opts.seed)?;
    let mut lambda_l = T::zero();
    let mut lambda_r = start.lambda;
    let mut history: Vec<EnergyEstimate<T>> = Vec::new();
    let mut records = Vec::new();
    let mut cumulative = start.queries;
    let third = T::one() / T::lit(3.0);
    while lambda_r - lambda_l > T::one() / tau || !convergence_test_x(&history) {
        let i = records.len();
        if i >= opts.max_iterations {
            return Err(QiteError::IterationCap(opts.max_iterations));
        }
        let shots = shots_at(tau)?;
        let delta = (lambda_r - lambda_l) * third;
        let lambda_lt = lambda_l + delta;
        let lambda_rt = lambda_r - delta;
        let (lt, rr) = rayon::join(
            || oracle.estimate(tau, lambda_lt, shots, mix(opts.seed, i as u64 + 1, 1)),
            || oracle.estimate(tau, lambda_r, shots, mix(opts.seed, i as u64 + 1, 2)),
        );
        let (lt, rr) = (lt?, rr?);
        let (branch, r) = ternary_decide(lt.value, rr.value, tau, delta)?;
        let (plus, minus) = match branch {
            Branch::LeftShrink => {
                lambda_l = lambda_lt;
                (rr.plus, rr.minus)
            }
            Branch::RightShrink => {
                lambda_r = lambda_rt;
                (lt.plus + rr.plus, lt.minus + rr.minus)
            }
        };
        let energy = EnergyEstimate::from_tally(plus, minus, rr.scale).ok_or(QiteError::EmptySample)?;
        history.push(energy);
        let queries = lt.queries + rr.queries;
        cumulative += queries;
        records.push(IterationRecord {
            i,
            tau,
            lambda_lt,
            lambda_rt,
            lambda_l,
            lambda_r,
            r,
            branch,
            energy,
            loss_lt: lt.value,
            loss_r: rr.value,
            shots,
            queries,
            cumulative_queries: cumulative,
        });
        tau += opts.dt;
    }
    let energy = *history.last().ok_or(QiteError::EmptySample)?;
    Ok(SearchOutcome { tau, lambda: lambda_r, lambda_l, energy, start, records, total_queries: cumulative })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::PauliString;

    #[test]
    fn agresti_coull_symmetric_at_half() {
        let (lo, hi) = agresti_coull(50.0f64, 100.0, Z95);
        assert!((lo + hi - 1.0).abs() < 1e-12);
        assert!(lo < 0.5 && hi > 0.5);
    }

    #[test]
    fn convergence_test_cases() {
        let e = EnergyEstimate { value: -0.5f64, ci_low: -0.6, ci_high: -0.4, samples: 100.0 };
        assert!(convergence_test_x(&[e, e]));
        let far = EnergyEstimate { value: -2.5, ci_low: -2.6, ci_high: -2.4, samples: 100.0 };
        assert!(!convergence_test_x(&[e, far]));
        assert!(!convergence_test_x(&[e]));
    }

    #[test]
    fn budget_scaling() {
        let a = shot_budget(13, 0.2f64, 20.0, 0.01).unwrap();
        let b = shot_budget(13, 0.2f64, 20.0, 0.02).unwrap();
        assert!((a as f64 / b as f64 - 4.0).abs() < 1e-3);
        assert!(shot_budget(13, 0.2f64, 20.0, 0.0).is_err());
    }

    #[test]
    fn decide_on_identity_ratio() {
        let tau = 20.0f64;
        let delta = 1.0 / (2.0 * tau);
        let lr = -0.3;
        let (b, r) = ternary_decide(lr * (4.0 * tau * delta).exp(), lr, tau, delta).unwrap();
        assert_eq!(b, Branch::RightShrink);
        assert!((r - (1f64.exp().powi(2) - 1.0)).abs() < 1e-12);
        assert!(ternary_decide(-1.0f64, 0.0, tau, delta).is_err());
    }

    #[test]
    fn basis_change_diagonalizes() {
        let sigma: PauliString = "XY".parse().unwrap();
        let dense = sigma.dense::<f64>();
        // T σ T† must be diagonal with entries (−1)^{parity}.
        let mut cols = Vec::new();
        for j in 0..4 {
            let mut v = vec![cr(0.0f64); 4];
            v[j] = cr(1.0);
            basis_change(&mut v, &sigma);
            cols.push(v);
        }
        let t = crate::linalg::CMatrix::from_columns(&cols);
        let conj = t.matmul(&dense).matmul(&t.adjoint());
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j {
                    if (i & sigma.support_mask()).count_ones() % 2 == 1 { -1.0 } else { 1.0 }
                } else {
                    0.0
                };
                assert!((conj.get(i, j) - cr(want)).norm() < 1e-12);
            }
        }
    }
}
