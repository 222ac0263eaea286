//! Imaginary-time evolution: the exact eigenbasis reference, the QPP-based
//! preparation pipeline, success-probability bounds, and a phase-estimation
//! style search for a normalization factor λ just above `|λ_0|`.


use crate::approx::{
    beta, fit_function, fit_to_eps, fourier_fit, ApproxSpec, DegreeSearch, TrigPolynomial,
};
use crate::error::{QiteError, Result};
use crate::pauli::{diagonalize, overlap_gamma, PauliSum, SpectrumInfo};
use crate::qpp::{
    apply_block, apply_comb, block_joint, postselect_branch, postselect_zero, synthesize_angles,
    QppMode, SynthesisOptions,
};
use crate::scalar::{cr, Real, C};
use crate::statevector::{fidelity, StateVector};
use crate::unitary::{DenseUnitary, UnitaryOp};

/// `e^{-τH}|φ>/‖·‖`, computed in the eigenbasis with `e^{-τλ_0}` factored out.
pub fn exact_ite<T: Real>(h: &PauliSum<T>, phi: &StateVector<T>, tau: T) -> Result<StateVector<T>> {
    exact_ite_spectral(&diagonalize(h)?, phi, tau)
}

pub fn exact_ite_spectral<T: Real>(
    spec: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    tau: T,
) -> Result<StateVector<T>> {
    if tau < T::zero() {
        return Err(QiteError::InvalidArgument(format!("tau must be non-negative, got {tau}")));
    }
    if spec.dim() != phi.dim() {
        return Err(QiteError::DimensionMismatch { expected: spec.dim(), got: phi.dim() });
    }
    let l0 = spec.ground_energy;
    let w: Vec<C<T>> = spec
        .coefficients(phi.amplitudes())
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(cj, &lj)| *cj * cr((-tau * (lj - l0)).exp()))
        .collect();
    StateVector::normalize(spec.synthesize(&w))
}

/// `‖e^{-τH}|φ>‖² = Σ_j |c_j|² e^{-2τλ_j}`.
pub fn ite_norm_sqr<T: Real>(spec: &SpectrumInfo<T>, phi: &StateVector<T>, tau: T) -> T {
    spec.coefficients(phi.amplitudes())
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(cj, &lj)| cj.norm_sqr() * (-(tau + tau) * lj).exp())
        .sum()
}

/// `sqrt(γ²)|ψ_0> + sqrt(1-γ²)|ψ_⊥>`, with `|ψ_⊥>` the equal superposition of
/// every excited eigenvector.
pub fn overlap_state<T: Real>(spec: &SpectrumInfo<T>, gamma_sq: T) -> Result<StateVector<T>> {
    if !(gamma_sq > T::zero() && gamma_sq <= T::one()) {
        return Err(QiteError::InvalidArgument(format!("gamma^2 must lie in (0, 1], got {gamma_sq}")));
    }
    let d = spec.dim();
    let rest = if d > 1 { ((T::one() - gamma_sq) / T::from_count(d - 1)).sqrt() } else { T::zero() };
    let mut w = vec![cr(rest); d];
    w[0] = cr(gamma_sq.sqrt());
    StateVector::normalize(spec.synthesize(&w))
}

#[derive(Clone, Copy, Debug)]
pub struct IteOptions<T: Real> {
    pub alpha: T,
    pub eps_target: T,
    pub mode: QppMode,
    /// Fixed degree; skips the ε-driven degree search.
    pub degree: Option<usize>,
    pub search: DegreeSearch,
    pub synthesis: SynthesisOptions,
}

impl<T: Real> Default for IteOptions<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.85),
            eps_target: T::lit(1e-4),
            mode: QppMode::Block,
            degree: None,
            search: DegreeSearch::default(),
            synthesis: SynthesisOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct ITEResult<T: Real> {
    pub state: StateVector<T>,
    pub success_prob: T,
    pub fidelity_to_exact: T,
    pub lambda_used: T,
    pub eps_used: T,
    /// `C = τ(λ − |λ_0|)`; negative when λ sits below `|λ_0|`.
    pub c_used: T,
    pub degree: usize,
    /// Applications of `U` or `U†`.
    pub queries: u64,
    pub spec: ApproxSpec<T>,
}

impl<T: Real> ITEResult<T> {
    pub fn infidelity(&self) -> T {
        T::one() - self.fidelity_to_exact
    }
}

/// Fit F for `(τ, λ)` per the options.
pub fn fit_for<T: Real>(tau: T, lam: T, opts: &IteOptions<T>) -> Result<(ApproxSpec<T>, TrigPolynomial<T>, T)> {
    let spec = ApproxSpec::new(tau, lam, opts.alpha)?;
    let fit = match opts.degree {
        Some(d) => fourier_fit(&spec, d)?,
        None => fit_to_eps(&spec, opts.eps_target, opts.search)?,
    };
    Ok((fit.spec, fit.poly, fit.eps))
}

/// Preparation with `U = e^{-iH}` built from the exact spectrum.
pub fn prepare_ite<T: Real>(
    h: &PauliSum<T>,
    phi: &StateVector<T>,
    tau: T,
    lam: T,
    opts: &IteOptions<T>,
) -> Result<ITEResult<T>> {
    let spec = diagonalize(h)?;
    let u = DenseUnitary::evolution(&spec, T::one());
    prepare_ite_with(&u, &spec, phi, tau, lam, opts)
}

/// Preparation with an arbitrary unitary; fidelity is scored against the exact
/// evolution under `truth`.
pub fn prepare_ite_with<T: Real, U: UnitaryOp<T> + ?Sized>(
    u: &U,
    truth: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    tau: T,
    lam: T,
    opts: &IteOptions<T>,
) -> Result<ITEResult<T>> {
    let (aspec, poly, eps) = fit_for(tau, lam, opts)?;
    prepare_with_poly(u, truth, phi, &aspec, &poly, eps, opts)
}

/// Runs QPP with an already fitted polynomial.
pub fn prepare_with_poly<T: Real, U: UnitaryOp<T> + ?Sized>(
    u: &U,
    truth: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    aspec: &ApproxSpec<T>,
    poly: &TrigPolynomial<T>,
    eps: T,
    opts: &IteOptions<T>,
) -> Result<ITEResult<T>> {
    let post = match opts.mode {
        QppMode::Block => postselect_branch(apply_block(poly, u, phi)?.into_amplitudes())?,
        QppMode::Comb => {
            let syn = synthesize_angles(poly, opts.synthesis)?;
            postselect_zero(&apply_comb(&syn.comb, u, &phi.with_ancilla())?)?
        }
    };
    let exact = exact_ite_spectral(truth, phi, aspec.tau)?;
    let fid = fidelity(&post.state, &exact)?;
    Ok(ITEResult {
        state: post.state,
        success_prob: post.success_prob,
        fidelity_to_exact: fid,
        lambda_used: aspec.lambda,
        eps_used: eps,
        c_used: aspec.tau * (aspec.lambda - truth.ground_energy.abs()),
        degree: poly.degree(),
        queries: 2 * poly.degree() as u64,
        spec: *aspec,
    })
}

/// `γ²α² e^{-2τ(λ_0+λ)} − ε`.
pub fn success_prob_lower<T: Real>(spec: &ApproxSpec<T>, gamma: T, lambda0: T, eps: T) -> T {
    gamma * gamma * spec.alpha * spec.alpha * (-(spec.tau + spec.tau) * (lambda0 + spec.lambda)).exp() - eps
}

/// Lower and upper bounds on `‖F(U)|φ>‖²` from the exact spectrum.
///
/// The upper bound expands `(|f| + ε)²` in full:
/// `α²(e^{-τλ}‖e^{-τH}φ‖)² + 2αε(e^{-τλ/2}‖e^{-τH/2}φ‖)² + ε²`. It assumes
/// `λ ≥ |λ_0|`.
pub fn success_prob_bounds<T: Real>(
    spec: &ApproxSpec<T>,
    spectrum: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    eps: T,
) -> Result<(T, T)> {
    let gamma = overlap_gamma(spectrum, phi)?;
    let lower = success_prob_lower(spec, gamma, spectrum.ground_energy, eps);
    let (tau, lam, a) = (spec.tau, spec.lambda, spec.alpha);
    let half = T::lit(0.5);
    let full = (-(tau + tau) * lam).exp() * ite_norm_sqr(spectrum, phi, tau);
    let halfn = (-tau * lam).exp() * ite_norm_sqr(spectrum, phi, tau * half);
    let upper = a * a * full + (a + a) * eps * halfn + eps * eps;
    Ok((lower, upper))
}

/// Lower bound on `|<ψ_exact|ψ_out>|` when every `|F − f| ≤ ε` on the spectrum.
///
/// With `w = f(H)φ`: `(1 − εA/‖w‖²)/sqrt(1 + 2εA/‖w‖² + ε²/‖w‖²)`,
/// `A = Σ|c_j|² f(λ_j)`. Clamped at 0.
pub fn fidelity_lower_bound<T: Real>(
    spec: &ApproxSpec<T>,
    spectrum: &SpectrumInfo<T>,
    phi: &StateVector<T>,
    eps: T,
) -> T {
    let (tau, lam, alpha) = (spec.tau, spec.lambda, spec.alpha);
    let full = ite_norm_sqr(spectrum, phi, tau);
    let half = ite_norm_sqr(spectrum, phi, tau * T::lit(0.5));
    if !(full > T::zero()) {
        return T::zero();
    }
    let a = eps * (tau * lam).exp() * half / (alpha * full);
    let b = eps * eps * ((tau + tau) * lam).exp() / (alpha * alpha * full);
    ((T::one() - a) / (T::one() + a + a + b).sqrt()).max(T::zero())
}

/// Step filter: 0 below `a − w`, smooth rise to 1 at `a`, flat to `1.5`, then a
/// wide smooth fall that reaches 0 before `π`.
fn step_filter<T: Real>(x: T, a: T, w: T) -> T {
    let top = T::lit(1.5);
    let end = T::PI() - T::lit(0.1);
    if x <= a - w || x >= end {
        T::zero()
    } else if x < a {
        beta((x - a + w) / w)
    } else if x <= top {
        T::one()
    } else {
        beta((end - x) / (end - top))
    }
}

#[derive(Clone, Debug)]
pub struct QpeEstimate<T: Real> {
    /// Upper end of the final bracket for `|λ_0|`.
    pub lambda: T,
    pub bracket: (T, T),
    pub nodes: usize,
    pub shots_per_node: u64,
    pub filter_degree: usize,
    pub queries: u64,
}

/// Bisection over a threshold `a` using a QPP step filter.
///
/// `gamma_floor` is a lower bound on γ; `None` takes it from the dense
/// spectrum. Each node measures the ancilla-0 frequency of the filtered state
/// with a Hoeffding-sized shot count and compares it against `γ²/2`.
pub fn estimate_lambda_qpe<T: Real>(
    h: &PauliSum<T>,
    phi: &StateVector<T>,
    precision: T,
    fail_prob: T,
    seed: u64,
    gamma_floor: Option<T>,
) -> Result<QpeEstimate<T>> {
    if !(precision > T::zero()) || !(fail_prob > T::zero() && fail_prob < T::one()) {
        return Err(QiteError::InvalidArgument("precision > 0 and fail_prob in (0,1) required".into()));
    }
    let spec = diagonalize(h)?;
    let gamma = match gamma_floor {
        Some(g) => g,
        None => overlap_gamma(&spec, phi)?,
    };
    if !(gamma > T::zero()) {
        return Err(QiteError::InvalidArgument("overlap gamma must be positive".into()));
    }
    let u = DenseUnitary::evolution(&spec, T::one());
    let g2 = gamma * gamma;
    let w = precision * T::lit(0.5);
    let half = T::lit(0.5);
    let max_nodes = (T::lit(2.0) / precision).log2().ceil().to_usize().unwrap_or(1).max(1);
    let node_fail = fail_prob / T::from_count(max_nodes);
    let margin = g2 * T::lit(0.25);
    let shots = ((T::lit(2.0) / node_fail).ln() / (T::lit(2.0) * margin * margin)).ceil().as_f64() as u64;
    let filter_tol = T::lit(0.1).min(gamma * T::lit(0.25));

    let mut lo = T::zero();
    let mut hi = T::one();
    let mut nodes = 0usize;
    let mut queries = 0u64;
    let mut degree = ((T::lit(8.0) / w).ceil().to_usize().unwrap_or(8)).max(8);
    while hi - lo > precision {
        if nodes >= 4 * max_nodes + 8 {
            return Err(QiteError::Bisection(format!("no convergence after {nodes} nodes")));
        }
        let mid = (lo + hi) * half;
        let a = mid + w * half;
        let (poly, d) = fit_filter(a, w, filter_tol, degree);
        degree = d;
        let branch = apply_block(&poly, &u, phi)?;
        let joint = block_joint(&branch, phi)?;
        let counts = joint.sample_counts(shots, node_seed(seed, nodes))?;
        let zero: u64 = counts[..phi.dim()].iter().sum();
        let p_hat = T::lit(zero as f64 / shots as f64);
        if p_hat >= g2 * half {
            lo = mid - w * half;
        } else {
            hi = mid + w * half;
        }
        nodes += 1;
        queries += shots * 2 * d as u64;
        if lo > hi {
            return Err(QiteError::Bisection(format!("empty bracket [{lo}, {hi}]")));
        }
    }
    Ok(QpeEstimate { lambda: hi, bracket: (lo, hi), nodes, shots_per_node: shots, filter_degree: degree, queries })
}

fn node_seed(seed: u64, node: usize) -> u64 {
    seed ^ (node as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

fn fit_filter<T: Real>(a: T, w: T, tol: T, start: usize) -> (TrigPolynomial<T>, usize) {
    let mut degree = start;
    loop {
        let poly = fit_function(|x| step_filter(x, a, w), degree);
        let m = 8 * degree;
        let two_pi = T::PI() + T::PI();
        let vals = poly.eval_circle(m.next_power_of_two());
        let n = vals.len();
        let err = vals
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let x = -T::PI() + two_pi * T::from_count(i) / T::from_count(n);
                (*v - cr(step_filter(x, a, w))).norm()
            })
            .fold(T::zero(), T::max);
        if err <= tol || degree > 1 << 16 {
            return (poly, degree);
        }
        degree *= 2;
    }
}
