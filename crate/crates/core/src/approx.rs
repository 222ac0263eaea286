//! Regularized exponential target and its trigonometric-polynomial fit.
//!
//! On `[-1, λ]` the target is `f(x) = α e^{τ(x-λ)}`. It is extended to a smooth
//! `2π`-periodic function with the bump
//!
//! ```text
//! β(z) = φ(z) / (φ(z) + φ(1-z)),   φ(z) = e^{-1/z} for z > 0, else 0
//! ρ(x) = 1                     on [-1, λ]
//!      = β((x + 1 + μ)/μ)      on (-1-μ, -1)
//!      = β((λ + μ - x)/μ)      on (λ, λ+μ)
//!      = 0                     elsewhere
//! g(x) = ρ(x) e^{τ(x-λ-μ)},    α = e^{-τμ}
//! ```
//!
//! Fourier coefficients of `g` come from trapezoidal quadrature (an FFT) on a
//! uniform grid of `[-π, π)`; truncation to `|k| ≤ L` gives the fit `F`.

use num_traits::Zero;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{QiteError, Result};
use crate::scalar::{c, cis, cr, Real, C};

/// Smallest ε target accepted by the degree search.
pub const EPS_FLOOR: f64 = 1e-10;

/// Default points on `[-1, λ]` used to certify ε.
pub const SUP_GRID: usize = 10_000;

/// Upper bound accepted for λ. The bootstrap search of the ground-energy
/// pipeline evaluates losses up to `1 + 1/τ`, so values past 1 are allowed.
pub const LAMBDA_MAX: f64 = 2.0;

fn bump_phi<T: Real>(z: T) -> T {
    if z > T::zero() {
        (-z.recip()).exp()
    } else {
        T::zero()
    }
}

/// Smooth ramp: 0 for `z ≤ 0`, 1 for `z ≥ 1`.
pub fn beta<T: Real>(z: T) -> T {
    if z <= T::zero() {
        return T::zero();
    }
    if z >= T::one() {
        return T::one();
    }
    let a = bump_phi(z);
    let b = bump_phi(T::one() - z);
    a / (a + b)
}

/// The cutoff ρ(x) for support `[-1, λ]` and transition width μ.
pub fn bump_rho<T: Real>(x: T, lam: T, mu: T) -> T {
    let one = T::one();
    if x >= -one && x <= lam {
        one
    } else if x > -one - mu && x < -one {
        beta((x + one + mu) / mu)
    } else if x > lam && x < lam + mu {
        beta((lam + mu - x) / mu)
    } else {
        T::zero()
    }
}

/// `sqrt((1+1/τ)e / ((1-1/τ)e² - 2/τ))`, or `+∞` when no α is admissible.
pub fn alpha_floor<T: Real>(tau: T) -> T {
    let e = T::E();
    let inv = tau.recip();
    let num = (T::one() + inv) * e;
    let den = (T::one() - inv) * e * e - (inv + inv);
    if den <= T::zero() {
        T::infinity()
    } else {
        (num / den).sqrt()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MuChoice<T> {
    pub mu: T,
    /// True for α = 1, where μ = 0 and the bump degenerates.
    pub at_boundary: bool,
}

/// μ = −ln(α)/τ.
pub fn choose_mu<T: Real>(tau: T, alpha: T) -> Result<MuChoice<T>> {
    if !(tau > T::zero()) {
        return Err(QiteError::InvalidArgument(format!("tau must be positive, got {tau}")));
    }
    if alpha == T::one() {
        return Ok(MuChoice { mu: T::zero(), at_boundary: true });
    }
    let floor = alpha_floor(tau);
    if !(alpha > floor) || alpha > T::one() {
        return Err(QiteError::AlphaOutOfRange {
            alpha: alpha.as_f64(),
            tau: tau.as_f64(),
            floor: floor.as_f64(),
        });
    }
    let mu = -alpha.ln() / tau;
    debug_assert!(mu * tau <= T::one());
    Ok(MuChoice { mu, at_boundary: false })
}

/// Parameters of the target and, once fitted, its degree and measured error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApproxSpec<T: Real> {
    pub tau: T,
    pub lambda: T,
    pub mu: T,
    pub alpha: T,
    pub degree: Option<usize>,
    pub eps: Option<T>,
}

impl<T: Real> ApproxSpec<T> {
    pub fn new(tau: T, lambda: T, alpha: T) -> Result<Self> {
        let choice = choose_mu(tau, alpha)?;
        if choice.at_boundary {
            return Err(QiteError::InvalidArgument("alpha = 1 leaves no room for the bump".into()));
        }
        if !(lambda > T::zero()) || lambda > T::lit(LAMBDA_MAX) {
            return Err(QiteError::InvalidArgument(format!(
                "lambda {lambda} outside (0, {LAMBDA_MAX}]"
            )));
        }
        Ok(Self { tau, lambda, mu: choice.mu, alpha, degree: None, eps: None })
    }

    /// `α e^{τ(x-λ)}`, the target on `[-1, λ]`.
    pub fn f_exact(&self, x: T) -> T {
        self.alpha * (self.tau * (x - self.lambda)).exp()
    }

    pub fn g(&self, x: T) -> T {
        target_g(x, self)
    }

    pub fn with_lambda(&self, lambda: T) -> Result<Self> {
        Self::new(self.tau, lambda, self.alpha)
    }
}

/// `g(x) = ρ(x) e^{τ(x-λ-μ)}`.
pub fn target_g<T: Real>(x: T, spec: &ApproxSpec<T>) -> T {
    let r = bump_rho(x, spec.lambda, spec.mu);
    if r.is_zero() {
        return T::zero();
    }
    r * (spec.tau * (x - spec.lambda - spec.mu)).exp()
}

/// `F(x) = Σ_{k=-L}^{L} c_k e^{ikx}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TrigPolynomial<T: Real> {
    coeffs: Vec<C<T>>,
}

impl<T: Real> TrigPolynomial<T> {
    /// Coefficients ordered `c_{-L}, …, c_L`.
    pub fn new(coeffs: Vec<C<T>>) -> Result<Self> {
        if coeffs.len().is_multiple_of(2) {
            return Err(QiteError::InvalidArgument("coefficient count must be odd".into()));
        }
        Ok(Self { coeffs })
    }

    pub fn constant(v: C<T>) -> Self {
        Self { coeffs: vec![v] }
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn coeffs(&self) -> &[C<T>] {
        &self.coeffs
    }

    /// `c_k` for `|k| ≤ L`, zero beyond.
    pub fn coeff(&self, k: i64) -> C<T> {
        let l = self.degree() as i64;
        if k.abs() > l {
            C::zero()
        } else {
            self.coeffs[(k + l) as usize]
        }
    }

    pub fn eval(&self, x: T) -> C<T> {
        let l = self.degree();
        let step = cis(x);
        let mut up = step;
        let mut down = step.conj();
        let mut acc = self.coeffs[l];
        for k in 1..=l {
            acc += self.coeffs[l + k] * up + self.coeffs[l - k] * down;
            up *= step;
            down *= step.conj();
        }
        acc
    }

    /// Values on the grid `x_m = -π + 2πm/M`.
    pub fn eval_circle(&self, m: usize) -> Vec<C<T>> {
        assert!(m > 2 * self.degree(), "circle grid too coarse for the degree");
        let l = self.degree() as i64;
        let mut buf = vec![C::zero(); m];
        for k in -l..=l {
            let sign = if k % 2 == 0 { T::one() } else { -T::one() };
            buf[k.rem_euclid(m as i64) as usize] = self.coeff(k) * cr(sign);
        }
        FftPlanner::new().plan_fft_inverse(m).process(&mut buf);
        buf
    }

    /// Maximum of |F| over a circle grid of at least `16·L` (and 4096) points.
    pub fn sup_norm(&self) -> T {
        let m = (16 * self.degree()).max(4096).next_power_of_two();
        self.eval_circle(m).iter().fold(T::zero(), |a, v| a.max(v.norm()))
    }

    pub fn scale(&self, s: T) -> Self {
        Self { coeffs: self.coeffs.iter().map(|v| *v * cr(s)).collect() }
    }

    pub fn truncate(&self, degree: usize) -> Self {
        let l = self.degree();
        let d = degree.min(l);
        Self { coeffs: self.coeffs[l - d..=l + d].to_vec() }
    }

    pub fn to_json(&self) -> Result<String> {
        let rec = TrigPolyRecord {
            degree: self.degree(),
            coeffs: self.coeffs.iter().map(|v| [v.re.as_f64(), v.im.as_f64()]).collect(),
        };
        Ok(serde_json::to_string(&rec)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let rec: TrigPolyRecord = serde_json::from_str(s)?;
        if rec.coeffs.len() != 2 * rec.degree + 1 {
            return Err(QiteError::Format("coefficient count does not match degree".into()));
        }
        Self::new(rec.coeffs.iter().map(|p| c(T::lit(p[0]), T::lit(p[1]))).collect())
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrigPolyRecord {
    degree: usize,
    coeffs: Vec<[f64; 2]>,
}

/// Fourier coefficients `c_k`, `-N/2 ≤ k < N/2`, of a periodic function from
/// `n` uniform samples on `[-π, π)`. Returned in frequency order.
pub struct Spectrum<T: Real> {
    n: usize,
    raw: Vec<C<T>>,
}

impl<T: Real> Spectrum<T> {
    pub fn of(g: impl Fn(T) -> T, n: usize) -> Self {
        let n = n.next_power_of_two().max(8);
        let two_pi = T::PI() + T::PI();
        let step = two_pi / T::from_count(n);
        let mut raw: Vec<C<T>> = (0..n).map(|m| cr(g(-T::PI() + step * T::from_count(m)))).collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut raw);
        let inv = T::from_count(n).recip();
        for (k, v) in raw.iter_mut().enumerate() {
            // e^{-ik x_m} = (-1)^k e^{-2πikm/n}; k ≡ k - n has the same parity for even n
            let sign = if k % 2 == 0 { inv } else { -inv };
            *v *= cr(sign);
        }
        Self { n, raw }
    }

    pub fn grid_size(&self) -> usize {
        self.n
    }

    pub fn coeff(&self, k: i64) -> C<T> {
        self.raw[k.rem_euclid(self.n as i64) as usize]
    }

    /// Truncation to `|k| ≤ degree`.
    pub fn truncate(&self, degree: usize) -> TrigPolynomial<T> {
        assert!(2 * degree < self.n, "degree too large for the quadrature grid");
        let l = degree as i64;
        TrigPolynomial { coeffs: (-l..=l).map(|k| self.coeff(k)).collect() }
    }
}

/// Caps `‖F‖_∞` at 1 by a global rescale; returns the factor used, if any.
pub fn cap_sup_norm<T: Real>(poly: TrigPolynomial<T>) -> (TrigPolynomial<T>, Option<T>) {
    let sup = poly.sup_norm();
    if sup > T::one() {
        let s = (T::one() - T::lit(1e-12)) / sup;
        (poly.scale(s), Some(s))
    } else {
        (poly, None)
    }
}

/// Trigonometric fit of an arbitrary real periodic function.
pub fn fit_function<T: Real>(g: impl Fn(T) -> T, degree: usize) -> TrigPolynomial<T> {
    let spec = Spectrum::of(g, 32 * degree.max(1));
    cap_sup_norm(spec.truncate(degree)).0
}

#[derive(Clone, Debug)]
pub struct Fit<T: Real> {
    pub poly: TrigPolynomial<T>,
    /// Measured sup error on `[-1, λ]`.
    pub eps: T,
    /// Rescale applied to keep `‖F‖_∞ ≤ 1`.
    pub rescaled: Option<T>,
    pub spec: ApproxSpec<T>,
}

/// Fits `g` at the given degree and certifies ε on `[-1, λ]`.
pub fn fourier_fit<T: Real>(spec: &ApproxSpec<T>, degree: usize) -> Result<Fit<T>> {
    if degree == 0 {
        return Err(QiteError::InvalidArgument("degree must be at least 1".into()));
    }
    let coeffs = Spectrum::of(|x| target_g(x, spec), 32 * degree);
    Ok(certify(spec, &coeffs, degree))
}

fn certify<T: Real>(spec: &ApproxSpec<T>, coeffs: &Spectrum<T>, degree: usize) -> Fit<T> {
    let (poly, rescaled) = cap_sup_norm(coeffs.truncate(degree));
    let eps = interval_error(spec, &poly, SUP_GRID);
    let mut spec = *spec;
    spec.degree = Some(degree);
    spec.eps = Some(eps);
    Fit { poly, eps, rescaled, spec }
}

/// Max of `|f(x) - F(x)|` over `points` uniform nodes of `[a, b]`.
pub fn sup_error<T: Real>(
    f_exact: impl Fn(T) -> T,
    poly: &TrigPolynomial<T>,
    a: T,
    b: T,
    points: usize,
) -> Result<T> {
    if !(a < b) {
        return Err(QiteError::InvalidArgument("sup_error needs a < b".into()));
    }
    let n = points.max(2);
    let h = (b - a) / T::from_count(n - 1);
    Ok((0..n)
        .map(|i| {
            let x = a + h * T::from_count(i);
            (poly.eval(x) - cr(f_exact(x))).norm()
        })
        .fold(T::zero(), T::max))
}

/// Sup error of `F` against `α e^{τ(x-λ)}` on `[-1, λ]`, using an inverse-FFT
/// circle grid with at least `points` nodes inside the interval plus exact
/// evaluation at both ends.
pub fn interval_error<T: Real>(spec: &ApproxSpec<T>, poly: &TrigPolynomial<T>, points: usize) -> T {
    let a = -T::one();
    let b = spec.lambda;
    let two_pi = T::PI() + T::PI();
    let need = (T::from_count(points) * two_pi / (b - a)).ceil().to_usize().unwrap_or(usize::MAX);
    let m = need.max(8 * poly.degree() + 8).next_power_of_two();
    let vals = poly.eval_circle(m);
    let step = two_pi / T::from_count(m);
    let mut worst = T::zero();
    for (i, v) in vals.iter().enumerate() {
        let x = -T::PI() + step * T::from_count(i);
        if x >= a && x <= b {
            worst = worst.max((*v - cr(spec.f_exact(x))).norm());
        }
    }
    for x in [a, b] {
        worst = worst.max((poly.eval(x) - cr(spec.f_exact(x))).norm());
    }
    worst
}

/// Degree window for [`fit_to_eps`], as multiples of τ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeSearch {
    pub min_factor: f64,
    pub max_factor: f64,
}

impl Default for DegreeSearch {
    fn default() -> Self {
        Self { min_factor: 1.0, max_factor: 512.0 }
    }
}

/// Smallest degree in the search window whose certified ε meets `eps_target`.
///
/// Coefficients are computed once on a grid sized for the largest candidate
/// and truncated per candidate.
pub fn fit_to_eps<T: Real>(spec: &ApproxSpec<T>, eps_target: T, search: DegreeSearch) -> Result<Fit<T>> {
    if eps_target < T::lit(EPS_FLOOR) {
        return Err(QiteError::EpsBelowFloor(eps_target.as_f64()));
    }
    let tau = spec.tau.as_f64();
    let mut lo = ((search.min_factor * tau).ceil() as usize).max(1);
    let mut hi = ((search.max_factor * tau).ceil() as usize).max(lo);
    let coeffs = Spectrum::of(|x| target_g(x, spec), 32 * hi);
    let top = certify(spec, &coeffs, hi);
    if top.eps > eps_target {
        return Err(QiteError::DegreeTooSmall {
            degree: hi,
            achieved: top.eps.as_f64(),
            requested: eps_target.as_f64(),
        });
    }
    let bottom = certify(spec, &coeffs, lo);
    if bottom.eps <= eps_target {
        return Ok(bottom);
    }
    let mut best = top;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        let fit = certify(spec, &coeffs, mid);
        if fit.eps <= eps_target {
            hi = mid;
            best = fit;
        } else {
            lo = mid;
        }
    }
    Ok(best)
}

/// Rows `(x, f_exact, Re F, |diff|)` on `[-1, λ]` for plotting.
pub fn fit_table<T: Real>(spec: &ApproxSpec<T>, poly: &TrigPolynomial<T>, points: usize) -> Vec<[T; 4]> {
    let n = points.max(2);
    let a = -T::one();
    let h = (spec.lambda - a) / T::from_count(n - 1);
    (0..n)
        .map(|i| {
            let x = a + h * T::from_count(i);
            let f = spec.f_exact(x);
            let v = poly.eval(x);
            [x, f, v.re, (v - cr(f)).norm()]
        })
        .collect()
}
