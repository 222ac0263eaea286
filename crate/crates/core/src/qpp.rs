//! Quantum phase processing: applying a trigonometric polynomial `F` to the
//! eigenphases of a black-box unitary.
//!
//! Two execution modes exist. Block mode computes `F(U)|φ> = Σ_k c_k U^k |φ>`
//! directly with `2L` queries. Comb mode runs the single-ancilla circuit
//!
//! ```text
//! V = A(θ_0) Π_{l=1..L} [ diag(U†, I) A(θ_{2l-1}) diag(I, U) A(θ_{2l}) ]
//! A(θ^Y, θ^Z) = R_y(θ^Y) R_z(θ^Z)       (on the ancilla, qubit 0)
//! ```
//!
//! whose ancilla-<0| block is `F(U)` up to a global phase when the angles
//! realize `F`.

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::approx::TrigPolynomial;
use crate::error::{QiteError, Result};
use crate::pauli::SpectrumInfo;
use crate::scalar::{c, cis, cr, Real, C};
use crate::statevector::StateVector;
use crate::unitary::UnitaryOp;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QppMode {
    Block,
    Comb,
}

/// `Σ_k c_k U^k |φ>`, using exactly `2L` applications of `U` or `U†`.
pub fn apply_block<T: Real, U: UnitaryOp<T> + ?Sized>(
    f: &TrigPolynomial<T>,
    u: &U,
    phi: &StateVector<T>,
) -> Result<StateVector<T>> {
    if u.dim() != phi.dim() {
        return Err(QiteError::DimensionMismatch { expected: u.dim(), got: phi.dim() });
    }
    let x = phi.amplitudes();
    let l = f.degree() as i64;
    let c0 = f.coeff(0);
    let mut out: Vec<C<T>> = x.iter().map(|a| *a * c0).collect();
    let mut cur = x.to_vec();
    let mut next = x.to_vec();
    for dagger in [false, true] {
        cur.copy_from_slice(x);
        for k in 1..=l {
            u.apply_to(&cur, &mut next, dagger);
            std::mem::swap(&mut cur, &mut next);
            let ck = f.coeff(if dagger { -k } else { k });
            for (o, v) in out.iter_mut().zip(&cur) {
                *o += *v * ck;
            }
        }
    }
    StateVector::unnormalized(out)
}

/// `Σ_j F(-λ_j) c_j |ψ_j>` for `U = e^{-iH}`; the eigenbasis oracle for
/// [`apply_block`].
pub fn apply_spectral<T: Real>(
    f: &TrigPolynomial<T>,
    spec: &SpectrumInfo<T>,
    phi: &StateVector<T>,
) -> Result<StateVector<T>> {
    if spec.dim() != phi.dim() {
        return Err(QiteError::DimensionMismatch { expected: spec.dim(), got: phi.dim() });
    }
    let coeffs = spec.coefficients(phi.amplitudes());
    let w: Vec<C<T>> = coeffs
        .iter()
        .zip(&spec.eigenvalues)
        .map(|(cj, &lj)| f.eval(-lj) * *cj)
        .collect();
    StateVector::unnormalized(spec.synthesize(&w))
}

/// Joint ancilla+system state for block mode: `|0>⊗F(U)|φ> + |1>⊗|rest>`.
///
/// `|rest>` is `sqrt(1 - ‖F(U)φ‖²)|φ>`. Any completion gives the same
/// statistics for observables that vanish on the ancilla-1 branch.
pub fn block_joint<T: Real>(branch: &StateVector<T>, phi: &StateVector<T>) -> Result<StateVector<T>> {
    let p0 = branch.norm_sqr().min(T::one());
    let tail = (T::one() - p0).max(T::zero()).sqrt();
    let mut amps = branch.amplitudes().to_vec();
    amps.extend(phi.amplitudes().iter().map(|a| *a * cr(tail)));
    StateVector::normalize(amps)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QPPComb {
    pub slots: usize,
    pub theta_y: Vec<f64>,
    pub theta_z: Vec<f64>,
}

impl QPPComb {
    pub fn new(theta_y: Vec<f64>, theta_z: Vec<f64>) -> Result<Self> {
        let slots = theta_y.len().saturating_sub(1);
        let comb = Self { slots, theta_y, theta_z };
        comb.validate()?;
        Ok(comb)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.slots + 1;
        if !self.slots.is_multiple_of(2) || self.theta_y.len() != n || self.theta_z.len() != n {
            return Err(QiteError::SlotMismatch { slots: self.slots });
        }
        Ok(())
    }

    /// Half the slot count: the degree of the realized polynomial.
    pub fn degree(&self) -> usize {
        self.slots / 2
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let c: Self = serde_json::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    /// `<0|W(x)|0>` where `W(x)` is the comb with `U` replaced by `e^{ix}`.
    pub fn response<T: Real>(&self, x: T) -> C<T> {
        let w = scalar_comb(&self.ay::<T>(), &self.az::<T>(), cis(x));
        w[0]
    }

    fn ay<T: Real>(&self) -> Vec<T> {
        self.theta_y.iter().map(|&v| T::lit(v)).collect()
    }

    fn az<T: Real>(&self) -> Vec<T> {
        self.theta_z.iter().map(|&v| T::lit(v)).collect()
    }
}

type M2<T> = [C<T>; 4];

fn m2_mul<T: Real>(a: &M2<T>, b: &M2<T>) -> M2<T> {
    [
        a[0] * b[0] + a[1] * b[2],
        a[0] * b[1] + a[1] * b[3],
        a[2] * b[0] + a[3] * b[2],
        a[2] * b[1] + a[3] * b[3],
    ]
}

/// `R_y(θ^Y) R_z(θ^Z)` as a row-major 2×2 matrix.
pub fn rotation_a<T: Real>(ty: T, tz: T) -> M2<T> {
    let half = T::lit(0.5);
    let (s, co) = (ty * half).sin_cos();
    let ez = cis(-tz * half);
    [ez * cr(co), ez.conj() * cr(-s), ez * cr(s), ez.conj() * cr(co)]
}

fn rotation_a_grad<T: Real>(ty: T, tz: T) -> (M2<T>, M2<T>) {
    let half = T::lit(0.5);
    let (s, co) = (ty * half).sin_cos();
    let ez = cis(-tz * half);
    let dy = [ez * cr(-s * half), ez.conj() * cr(-co * half), ez * cr(co * half), ez.conj() * cr(-s * half)];
    let i_half = c(T::zero(), half);
    let a = rotation_a(ty, tz);
    let dz = [a[0] * (-i_half), a[1] * i_half, a[2] * (-i_half), a[3] * i_half];
    (dy, dz)
}

fn signal_factors<T: Real>(z: C<T>) -> (M2<T>, M2<T>) {
    let one = cr(T::one());
    let zero = C::zero();
    // diag(U†, I) and diag(I, U) on an eigenvector with eigenvalue z
    ([z.conj(), zero, zero, one], [one, zero, zero, z])
}

/// Full 2×2 comb matrix for eigenvalue `z`.
fn scalar_comb<T: Real>(ty: &[T], tz: &[T], z: C<T>) -> M2<T> {
    let (dag0, ctl1) = signal_factors(z);
    let mut w = rotation_a(ty[0], tz[0]);
    let l = (ty.len() - 1) / 2;
    for layer in 1..=l {
        w = m2_mul(&w, &dag0);
        w = m2_mul(&w, &rotation_a(ty[2 * layer - 1], tz[2 * layer - 1]));
        w = m2_mul(&w, &ctl1);
        w = m2_mul(&w, &rotation_a(ty[2 * layer], tz[2 * layer]));
    }
    w
}

/// Runs the comb on a joint state whose leading qubit is the ancilla.
pub fn apply_comb<T: Real, U: UnitaryOp<T> + ?Sized>(
    comb: &QPPComb,
    u: &U,
    joint: &StateVector<T>,
) -> Result<StateVector<T>> {
    comb.validate()?;
    if joint.qubit_count() < 2 {
        return Err(QiteError::MissingAncilla);
    }
    let half = joint.dim() / 2;
    if u.dim() != half {
        return Err(QiteError::DimensionMismatch { expected: half, got: u.dim() });
    }
    let ty = comb.ay::<T>();
    let tz = comb.az::<T>();
    let mut amps = joint.amplitudes().to_vec();
    let mut buf = vec![C::zero(); half];
    let rotate = |amps: &mut [C<T>], a: M2<T>| {
        let (lo, hi) = amps.split_at_mut(half);
        for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
            let (u0, u1) = (*x0, *x1);
            *x0 = a[0] * u0 + a[1] * u1;
            *x1 = a[2] * u0 + a[3] * u1;
        }
    };
    // rightmost factor acts first
    let l = comb.degree();
    for layer in (1..=l).rev() {
        rotate(&mut amps, rotation_a(ty[2 * layer], tz[2 * layer]));
        u.apply_to(&amps[half..], &mut buf, false);
        amps[half..].copy_from_slice(&buf);
        rotate(&mut amps, rotation_a(ty[2 * layer - 1], tz[2 * layer - 1]));
        u.apply_to(&amps[..half], &mut buf, true);
        amps[..half].copy_from_slice(&buf);
    }
    rotate(&mut amps, rotation_a(ty[0], tz[0]));
    if joint.is_normalized() {
        StateVector::from_amplitudes(amps)
    } else {
        StateVector::unnormalized(amps)
    }
}

#[derive(Clone, Debug)]
pub struct PostSelectResult<T: Real> {
    pub state: StateVector<T>,
    pub success_prob: T,
}

/// Projects the ancilla onto |0> and renormalizes the system register.
pub fn postselect_zero<T: Real>(joint: &StateVector<T>) -> Result<PostSelectResult<T>> {
    if joint.qubit_count() < 2 {
        return Err(QiteError::MissingAncilla);
    }
    let half = joint.dim() / 2;
    postselect_branch(joint.amplitudes()[..half].to_vec())
}

/// Post-selection of an already extracted ancilla-0 branch.
pub fn postselect_branch<T: Real>(branch: Vec<C<T>>) -> Result<PostSelectResult<T>> {
    let p: T = branch.iter().map(|a| a.norm_sqr()).sum();
    if p.as_f64() < 1e-300 {
        return Err(QiteError::PostSelectionFailed(p.as_f64()));
    }
    Ok(PostSelectResult { state: StateVector::normalize(branch)?, success_prob: p })
}

/// Outcome of numerical angle finding.
#[derive(Clone, Debug)]
pub struct Synthesis {
    pub comb: QPPComb,
    /// Global phase `φ` with `e^{iφ} <0|W(x)|0> ≈ F(x)`.
    pub phase: f64,
    /// Max deviation on the check grid.
    pub residual: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct SynthesisOptions {
    pub tol: f64,
    pub restarts: usize,
    pub max_iter: usize,
    pub check_grid: usize,
    pub seed: u64,
}

impl Default for SynthesisOptions {
    fn default() -> Self {
        Self { tol: 1e-8, restarts: 64, max_iter: 400, check_grid: 1024, seed: 0x5eed }
    }
}

/// Angle finding by Levenberg–Marquardt on a phase grid, with seeded
/// random restarts. Works in `f64` regardless of the caller's scalar.
pub fn synthesize_angles<T: Real>(f: &TrigPolynomial<T>, opts: SynthesisOptions) -> Result<Synthesis> {
    let sup = f.sup_norm().as_f64();
    if sup > 1.0 - 1e-6 {
        return Err(QiteError::InvalidArgument(format!("sup |F| = {sup} leaves no completion headroom")));
    }
    let l = f.degree();
    if l == 0 {
        return Ok(constant_comb(f.coeff(0)));
    }
    let coeffs: Vec<C<f64>> = f.coeffs().iter().map(|v| c(v.re.as_f64(), v.im.as_f64())).collect();
    let target = TrigPolynomial::new(coeffs)?;
    let m_fit = (8 * (2 * l + 1)).max(64);
    let grid: Vec<f64> = (0..m_fit)
        .map(|m| -std::f64::consts::PI + 2.0 * std::f64::consts::PI * m as f64 / m_fit as f64)
        .collect();
    let want: Vec<C<f64>> = grid.iter().map(|&x| target.eval(x)).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let n_angles = 2 * l + 1;
    let mut best: Option<Synthesis> = None;
    for _ in 0..opts.restarts.max(1) {
        let mut p: Vec<f64> = (0..2 * n_angles + 1)
            .map(|_| rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI))
            .collect();
        levenberg_marquardt(&mut p, &grid, &want, n_angles, opts.max_iter, opts.tol * 1e-2);
        let comb = QPPComb::new(p[..n_angles].to_vec(), p[n_angles..2 * n_angles].to_vec())?;
        let phase = p[2 * n_angles];
        let residual = check_residual(&comb, phase, &target, opts.check_grid);
        let better = best.as_ref().is_none_or(|b| residual < b.residual);
        if better {
            best = Some(Synthesis { comb, phase, residual });
        }
        if residual <= opts.tol {
            break;
        }
    }
    let best = best.expect("at least one restart");
    if best.residual > opts.tol {
        return Err(QiteError::SynthesisFailed { residual: best.residual });
    }
    Ok(best)
}

fn constant_comb<T: Real>(c0: C<T>) -> Synthesis {
    // <0|R_y(θ)|0> = cos(θ/2)
    let mag = c0.norm().as_f64().min(1.0);
    let comb = QPPComb { slots: 0, theta_y: vec![2.0 * mag.acos()], theta_z: vec![0.0] };
    Synthesis { comb, phase: c0.arg().as_f64(), residual: 0.0 }
}

fn check_residual(comb: &QPPComb, phase: f64, target: &TrigPolynomial<f64>, m: usize) -> f64 {
    let g = cis(phase);
    (0..m)
        .map(|i| {
            let x = -std::f64::consts::PI + 2.0 * std::f64::consts::PI * i as f64 / m as f64;
            (g * comb.response::<f64>(x) - target.eval(x)).norm()
        })
        .fold(0.0, f64::max)
}

/// Residuals (re/im interleaved) and Jacobian for parameter vector
/// `[θ^Y (n), θ^Z (n), φ]`.
fn residual_jacobian(
    p: &[f64],
    grid: &[f64],
    want: &[C<f64>],
    n: usize,
    jac: Option<&mut Vec<f64>>,
) -> Vec<f64> {
    let np = p.len();
    let ty = &p[..n];
    let tz = &p[n..2 * n];
    let g = cis(p[2 * n]);
    let mut res = vec![0.0; 2 * grid.len()];
    let mut jac = jac;
    if let Some(j) = jac.as_deref_mut() {
        j.clear();
        j.resize(2 * grid.len() * np, 0.0);
    }
    let l = (n - 1) / 2;
    let rots: Vec<M2<f64>> = (0..n).map(|k| rotation_a(ty[k], tz[k])).collect();
    let grads: Vec<(M2<f64>, M2<f64>)> = (0..n).map(|k| rotation_a_grad(ty[k], tz[k])).collect();
    let id: M2<f64> = [cr(1.0), C::zero(), C::zero(), cr(1.0)];
    for (mi, &x) in grid.iter().enumerate() {
        let (dag0, ctl1) = signal_factors(cis(x));
        // factor list: A0, dag0, A1, ctl1, A2, dag0, A3, ...
        let mut factors: Vec<(Option<usize>, M2<f64>)> = Vec::with_capacity(2 * n);
        factors.push((Some(0), rots[0]));
        for layer in 1..=l {
            factors.push((None, dag0));
            factors.push((Some(2 * layer - 1), rots[2 * layer - 1]));
            factors.push((None, ctl1));
            factors.push((Some(2 * layer), rots[2 * layer]));
        }
        let nf = factors.len();
        let mut prefix = vec![id; nf + 1];
        for k in 0..nf {
            prefix[k + 1] = m2_mul(&prefix[k], &factors[k].1);
        }
        let resp = prefix[nf][0];
        let r = g * resp - want[mi];
        res[2 * mi] = r.re;
        res[2 * mi + 1] = r.im;
        if let Some(j) = jac.as_deref_mut() {
            let mut suffix = id;
            for k in (0..nf).rev() {
                if let Some(a) = factors[k].0 {
                    let (dy, dz) = &grads[a];
                    let vy = g * m2_mul(&m2_mul(&prefix[k], dy), &suffix)[0];
                    let vz = g * m2_mul(&m2_mul(&prefix[k], dz), &suffix)[0];
                    j[(2 * mi) * np + a] = vy.re;
                    j[(2 * mi + 1) * np + a] = vy.im;
                    j[(2 * mi) * np + n + a] = vz.re;
                    j[(2 * mi + 1) * np + n + a] = vz.im;
                }
                suffix = m2_mul(&factors[k].1, &suffix);
            }
            let vp = c(0.0, 1.0) * g * resp;
            j[(2 * mi) * np + 2 * n] = vp.re;
            j[(2 * mi + 1) * np + 2 * n] = vp.im;
        }
    }
    res
}

fn levenberg_marquardt(p: &mut [f64], grid: &[f64], want: &[C<f64>], n: usize, max_iter: usize, tol: f64) {
    let np = p.len();
    let mut jac = Vec::new();
    let mut res = residual_jacobian(p, grid, want, n, Some(&mut jac));
    let mut cost: f64 = res.iter().map(|r| r * r).sum();
    let mut damping = 1e-3;
    let nr = res.len();
    for _ in 0..max_iter {
        let max_abs = res.iter().fold(0.0f64, |m, r| m.max(r.abs()));
        if max_abs < tol {
            break;
        }
        let mut jtj = vec![0.0; np * np];
        let mut jtr = vec![0.0; np];
        for row in 0..nr {
            let jr = &jac[row * np..(row + 1) * np];
            for a in 0..np {
                jtr[a] += jr[a] * res[row];
                for b in a..np {
                    jtj[a * np + b] += jr[a] * jr[b];
                }
            }
        }
        for a in 0..np {
            for b in 0..a {
                jtj[a * np + b] = jtj[b * np + a];
            }
        }
        let mut improved = false;
        for _ in 0..12 {
            let mut sys = jtj.clone();
            for a in 0..np {
                sys[a * np + a] += damping * (1.0 + jtj[a * np + a]);
            }
            let Some(step) = solve_spd(&mut sys, &jtr, np) else {
                damping *= 10.0;
                continue;
            };
            let trial: Vec<f64> = p.iter().zip(&step).map(|(v, s)| v - s).collect();
            let r_trial = residual_jacobian(&trial, grid, want, n, None);
            let c_trial: f64 = r_trial.iter().map(|r| r * r).sum();
            if c_trial < cost {
                p.copy_from_slice(&trial);
                res = residual_jacobian(p, grid, want, n, Some(&mut jac));
                cost = c_trial;
                damping = (damping * 0.3).max(1e-15);
                improved = true;
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
}

/// Cholesky solve of a symmetric positive-definite system.
fn solve_spd(a: &mut [f64], b: &[f64], n: usize) -> Option<Vec<f64>> {
    for j in 0..n {
        let mut d = a[j * n + j];
        for k in 0..j {
            d -= a[j * n + k] * a[j * n + k];
        }
        if !(d > 0.0) {
            return None;
        }
        let d = d.sqrt();
        a[j * n + j] = d;
        for i in (j + 1)..n {
            let mut s = a[i * n + j];
            for k in 0..j {
                s -= a[i * n + k] * a[j * n + k];
            }
            a[i * n + j] = s / d;
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] -= a[i * n + k] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            y[i] -= a[k * n + i] * y[k];
        }
        y[i] /= a[i * n + i];
    }
    Some(y)
}
