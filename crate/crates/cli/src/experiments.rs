//! The five experiments. Each `run_*` returns typed rows, a JSON summary and
//! its runtime checks; [`execute`] writes them out.

use anyhow::{bail, Context, Result};
use qite_core::approx::fit_table;
use qite_core::ground_search::{
    run_adaptive_search, ternary_iteration_bound, Branch, ExactLoss, FitPolicy, IterationRecord, LossOracle,
    SampledLoss, SearchOptions, SearchOutcome, ShotPolicy, MAX_ITERATIONS,
};
use qite_core::ite::{fit_for, overlap_state, prepare_ite_with, success_prob_lower, IteOptions};
use qite_core::pauli::{build_heisenberg, diagonalize, normalize, overlap_gamma, PauliSum, SpectrumInfo};
use qite_core::qpp::QppMode;
use qite_core::statevector::StateVector;
use qite_core::trotter::{build_trotter, measured_error, trotter_error_bound};
use qite_core::unitary::DenseUnitary;
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{Experiment, ExperimentConfig, Mode};
use crate::output::{write_outputs, Check, CsvRow, Field};

/// Hamiltonian, its spectrum, and the input state of a run.
pub struct Problem {
    pub h: PauliSum<f64>,
    pub spectrum: SpectrumInfo<f64>,
    pub phi: StateVector<f64>,
    pub gamma: f64,
}

impl Problem {
    pub fn lambda0(&self) -> f64 {
        self.spectrum.ground_energy
    }

    pub fn summary(&self) -> Value {
        json!({
            "qubits": self.h.qubit_count(),
            "terms": self.h.term_count(),
            "max_abs_coeff": self.h.max_abs_coeff(),
            "shift": self.h.shift(),
            "lambda0": self.spectrum.ground_energy,
            "gap": self.spectrum.gap,
            "gamma": self.gamma,
        })
    }
}

pub fn load_hamiltonian(spec: &str) -> Result<PauliSum<f64>> {
    let raw = if spec == "heisenberg4" {
        build_heisenberg(4)?
    } else {
        let text = std::fs::read_to_string(spec).with_context(|| format!("reading hamiltonian {spec}"))?;
        PauliSum::from_json(&text)?
    };
    Ok(normalize(&raw)?)
}

/// `gamma_sq` set: overlap state with that weight on `|ψ_0>`; otherwise `|0…0>`.
pub fn load_problem(cfg: &ExperimentConfig) -> Result<Problem> {
    let h = load_hamiltonian(&cfg.hamiltonian)?;
    let spectrum = diagonalize(&h)?;
    let phi = match cfg.gamma_sq {
        Some(g) => overlap_state(&spectrum, g)?,
        None => StateVector::zero_state(h.qubit_count()),
    };
    let gamma = overlap_gamma(&spectrum, &phi)?;
    Ok(Problem { h, spectrum, phi, gamma })
}

fn ite_options(cfg: &ExperimentConfig) -> IteOptions<f64> {
    IteOptions {
        alpha: cfg.alpha,
        eps_target: cfg.eps_target,
        mode: match cfg.mode {
            Mode::Block => QppMode::Block,
            Mode::Comb => QppMode::Comb,
        },
        degree: cfg.degree,
        ..IteOptions::default()
    }
}

pub struct Run<R> {
    pub rows: Vec<R>,
    pub results: Value,
    pub checks: Vec<Check>,
}

/// Least-squares `(intercept, slope)`; `None` below two points or with zero spread.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> Option<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Some((my - slope * mx, slope))
}

// ---------------------------------------------------------------- lambda sweep

#[derive(Clone, Debug, PartialEq)]
pub struct LambdaRow {
    pub tau: f64,
    pub lambda: f64,
    pub eps: f64,
    pub success_prob: f64,
    /// `γ²α²e^{-2τ(λ_0+λ)} − ε`; NaN below `|λ_0|`, where it does not apply.
    pub lower_bound: f64,
    pub infidelity: f64,
}

impl CsvRow for LambdaRow {
    fn header() -> &'static [&'static str] {
        &["tau", "lambda", "eps", "success_prob", "lower_bound", "infidelity"]
    }

    fn fields(&self) -> Vec<Field> {
        [self.tau, self.lambda, self.eps, self.success_prob, self.lower_bound, self.infidelity]
            .into_iter()
            .map(Field::Num)
            .collect()
    }
}

fn lambda_points(p: &Problem, cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<Vec<LambdaRow>> {
    let opts = ite_options(cfg);
    let u = DenseUnitary::evolution(&p.spectrum, 1.0);
    let l0 = p.lambda0();
    lambdas
        .par_iter()
        .map(|&lam| {
            let r = prepare_ite_with(&u, &p.spectrum, &p.phi, cfg.tau, lam, &opts)?;
            let lower = if lam >= -l0 { success_prob_lower(&r.spec, p.gamma, l0, r.eps_used) } else { f64::NAN };
            Ok(LambdaRow {
                tau: cfg.tau,
                lambda: lam,
                eps: r.eps_used,
                success_prob: r.success_prob,
                lower_bound: lower,
                infidelity: r.infidelity(),
            })
        })
        .collect()
}

pub fn run_lambda_sweep(cfg: &ExperimentConfig) -> Result<Run<LambdaRow>> {
    if cfg.experiment != Experiment::LambdaSweep {
        bail!("experiment: expected lambda_sweep");
    }
    let p = load_problem(cfg)?;
    let rows = lambda_points(&p, cfg, &cfg.lambda_grid)?;
    let (tau, abs0) = (cfg.tau, -p.lambda0());
    let probe_l = [abs0 + 0.5 / tau, abs0, abs0 + 1.0 / tau, abs0 - 0.1];
    let probes = lambda_points(&p, cfg, &probe_l)?;
    let (mid, below) = (&probes[0], &probes[3]);

    let floor = cfg.alpha.powi(2) * p.gamma.powi(2) * (-2.0f64).exp() - mid.eps;
    let floor_check = Check::new(
        "success_floor",
        mid.success_prob >= floor,
        format!("p({:.6}) = {:.6e} vs floor {:.6e}", mid.lambda, mid.success_prob, floor),
    );

    let in_window: Vec<&LambdaRow> = rows
        .iter()
        .chain(&probes[..3])
        .filter(|r| r.lambda >= abs0 - 1e-12 && r.lambda <= abs0 + 1.0 / tau + 1e-12)
        .collect();
    let worst = in_window.iter().map(|r| r.infidelity).fold(0.0, f64::max);
    let best = in_window.iter().map(|r| r.infidelity).fold(f64::INFINITY, f64::min);
    let window = Check::new(
        "window_infidelity",
        !in_window.is_empty() && worst <= 1e-3,
        format!("{} points in window, max infidelity {worst:.3e}", in_window.len()),
    );

    let tail: Vec<&LambdaRow> = rows.iter().filter(|r| r.lambda > abs0 + 2.0 / tau && r.success_prob > 0.0).collect();
    let xs: Vec<f64> = tail.iter().map(|r| r.lambda).collect();
    let ys: Vec<f64> = tail.iter().map(|r| r.success_prob.ln()).collect();
    let decay = match linear_fit(&xs, &ys) {
        Some((a, b)) => {
            let worst_ratio =
                xs.iter().zip(&ys).map(|(x, y)| (y - (a + b * x)).abs().exp()).fold(1.0, f64::max);
            Check::new(
                "exp_decay_fit",
                worst_ratio <= 1.5,
                format!("{} points, fitted rate {b:.4}, worst ratio {worst_ratio:.4}", xs.len()),
            )
        }
        None => Check::new("exp_decay_fit", false, format!("{} points beyond |lambda0|+2/tau", xs.len())),
    };

    let contrast = Check::new(
        "below_window_contrast",
        below.infidelity >= 10.0 * best,
        format!("infidelity {:.3e} at |lambda0|-0.1 vs window minimum {best:.3e}", below.infidelity),
    );

    let results = json!({
        "points": rows.len(),
        "probe_lambda": probe_l,
        "probe_success_prob": probes.iter().map(|r| r.success_prob).collect::<Vec<_>>(),
        "probe_infidelity": probes.iter().map(|r| r.infidelity).collect::<Vec<_>>(),
        "problem": p.summary(),
    });
    Ok(Run { rows, results, checks: vec![floor_check, window, decay, contrast] })
}

// ------------------------------------------------------------------- tau sweep

#[derive(Clone, Debug, PartialEq)]
pub struct TauRow {
    pub tau: f64,
    pub lambda: f64,
    pub eps: f64,
    pub energy_expectation: f64,
    pub exact_ground_energy: f64,
    pub success_prob: f64,
    pub lower_bound: f64,
    pub infidelity: f64,
}

impl CsvRow for TauRow {
    fn header() -> &'static [&'static str] {
        &[
            "tau",
            "lambda",
            "eps",
            "energy_expectation",
            "exact_ground_energy",
            "success_prob",
            "lower_bound",
            "infidelity",
        ]
    }

    fn fields(&self) -> Vec<Field> {
        [
            self.tau,
            self.lambda,
            self.eps,
            self.energy_expectation,
            self.exact_ground_energy,
            self.success_prob,
            self.lower_bound,
            self.infidelity,
        ]
        .into_iter()
        .map(Field::Num)
        .collect()
    }
}

pub fn run_tau_sweep(cfg: &ExperimentConfig) -> Result<Run<TauRow>> {
    if cfg.experiment != Experiment::TauSweep {
        bail!("experiment: expected tau_sweep");
    }
    let p = load_problem(cfg)?;
    let opts = ite_options(cfg);
    let u = DenseUnitary::evolution(&p.spectrum, 1.0);
    let l0 = p.lambda0();
    let rows: Vec<TauRow> = cfg
        .tau_grid
        .par_iter()
        .map(|&tau| {
            let lam = -l0 + cfg.lambda_offset / tau;
            let r = prepare_ite_with(&u, &p.spectrum, &p.phi, tau, lam, &opts)?;
            Ok(TauRow {
                tau,
                lambda: lam,
                eps: r.eps_used,
                energy_expectation: p.h.expectation(r.state.amplitudes()),
                exact_ground_energy: l0,
                success_prob: r.success_prob,
                lower_bound: success_prob_lower(&r.spec, p.gamma, l0, r.eps_used),
                infidelity: r.infidelity(),
            })
        })
        .collect::<Result<_>>()?;

    let mut order: Vec<&TauRow> = rows.iter().collect();
    order.sort_by(|a, b| a.tau.total_cmp(&b.tau));
    let errs: Vec<f64> = order.iter().map(|r| (r.energy_expectation - l0).abs()).collect();
    let monotone = Check::new(
        "monotone_energy",
        errs.windows(2).all(|w| w[1] < w[0]),
        format!("energy errors {}", errs.iter().map(|e| format!("{e:.3e}")).collect::<Vec<_>>().join(" ")),
    );
    let last = order.last().expect("tau_grid is non-empty");
    let allowed = 2.0 * (-2.0 * last.tau * p.spectrum.gap).exp() / p.gamma.powi(2);
    let err_last = *errs.last().unwrap();
    let final_err = Check::new(
        "final_energy_error",
        err_last <= allowed,
        format!("tau {}: |E - lambda0| = {err_last:.3e}, allowed {allowed:.3e}", last.tau),
    );
    let above: Vec<f64> = rows.iter().map(|r| r.success_prob - r.lower_bound).collect();
    let min_margin = above.iter().copied().fold(f64::INFINITY, f64::min);
    let bound = Check::new(
        "success_above_bound",
        min_margin >= 0.0,
        format!("smallest margin p - lower bound = {min_margin:.3e}"),
    );
    let results = json!({ "problem": p.summary() });
    Ok(Run { rows, results, checks: vec![monotone, final_err, bound] })
}

// --------------------------------------------------------------- ground search

#[derive(Clone, Debug, PartialEq)]
pub struct IterationRow {
    pub i: usize,
    pub tau: f64,
    pub lambda_l: f64,
    pub lambda_r: f64,
    pub r: f64,
    pub branch: Branch,
    pub e_i: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub shots: u64,
    pub cumulative_queries: u64,
    pub abs_error: f64,
}

impl IterationRow {
    fn from_record(rec: &IterationRecord<f64>, lambda0: f64) -> Self {
        Self {
            i: rec.i,
            tau: rec.tau,
            lambda_l: rec.lambda_l,
            lambda_r: rec.lambda_r,
            r: rec.r,
            branch: rec.branch,
            e_i: rec.energy.value,
            ci_low: rec.energy.ci_low,
            ci_high: rec.energy.ci_high,
            shots: rec.shots,
            cumulative_queries: rec.cumulative_queries,
            abs_error: (rec.energy.value - lambda0).abs(),
        }
    }
}

impl CsvRow for IterationRow {
    fn header() -> &'static [&'static str] {
        &[
            "i",
            "tau",
            "lambda_l",
            "lambda_r",
            "r",
            "branch",
            "E_i",
            "ci_low",
            "ci_high",
            "shots",
            "cumulative_queries",
            "abs_error",
        ]
    }

    fn fields(&self) -> Vec<Field> {
        let branch = match self.branch {
            Branch::LeftShrink => "left_shrink",
            Branch::RightShrink => "right_shrink",
        };
        vec![
            Field::Int(self.i as u64),
            Field::Num(self.tau),
            Field::Num(self.lambda_l),
            Field::Num(self.lambda_r),
            Field::Num(self.r),
            Field::Text(branch.into()),
            Field::Num(self.e_i),
            Field::Num(self.ci_low),
            Field::Num(self.ci_high),
            Field::Int(self.shots),
            Field::Int(self.cumulative_queries),
            Field::Num(self.abs_error),
        ]
    }
}

/// Slope of `ln|E_i − λ_0|` against `ln(cumulative queries)` over iterations
/// whose error still exceeds their own CI half-width (the pre-floor regime).
/// Returns the slope, if at least two such points exist, and the point count.
pub fn pre_floor_slope(rows: &[IterationRow]) -> (Option<f64>, usize) {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.abs_error > 0.5 * (r.ci_high - r.ci_low) && r.abs_error > 0.0 && r.cumulative_queries > 0)
        .map(|r| ((r.cumulative_queries as f64).ln(), r.abs_error.ln()))
        .collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pts.iter().copied().unzip();
    (linear_fit(&xs, &ys).map(|(_, s)| s), pts.len())
}

/// Default threshold `B = γ²|λ_0|e^{-2}`.
pub fn default_b(p: &Problem) -> f64 {
    p.gamma.powi(2) * p.lambda0().abs() * (-2.0f64).exp()
}

pub fn search_with(p: &Problem, cfg: &ExperimentConfig) -> Result<SearchOutcome<f64>> {
    let b = cfg.b.unwrap_or_else(|| default_b(p));
    let policy = FitPolicy::new(cfg.alpha, b);
    let opts = SearchOptions {
        tau0: cfg.tau0,
        dt: cfg.dt,
        b,
        shots: ShotPolicy::Fixed(cfg.shots),
        max_iterations: MAX_ITERATIONS,
        seed: cfg.seed,
    };
    let oracle: Box<dyn LossOracle<f64>> = if cfg.exact_loss {
        Box::new(ExactLoss::new(&p.h, &p.phi, policy)?)
    } else {
        Box::new(SampledLoss::new(&p.h, &p.phi, policy)?)
    };
    Ok(run_adaptive_search(oracle.as_ref(), &opts)?)
}

pub fn run_ground_search(cfg: &ExperimentConfig) -> Result<Run<IterationRow>> {
    if cfg.experiment != Experiment::GroundSearch {
        bail!("experiment: expected ground_search");
    }
    let p = load_problem(cfg)?;
    let out = search_with(&p, cfg)?;
    let l0 = p.lambda0();
    let rows: Vec<IterationRow> = out.records.iter().map(|r| IterationRow::from_record(r, l0)).collect();
    let abs0 = l0.abs();
    let bound = ternary_iteration_bound(out.tau);
    let (slope, slope_points) = pre_floor_slope(&rows);
    let e = out.energy;
    let checks = vec![
        Check::new(
            "final_ci_contains_ground",
            e.contains(l0),
            format!("E = {:.6} in [{:.6}, {:.6}], lambda0 = {l0:.6}", e.value, e.ci_low, e.ci_high),
        ),
        Check::new(
            "lambda_in_window",
            out.lambda >= abs0 && out.lambda <= abs0 + 1.0 / out.tau,
            format!("lambda {:.6} vs [{abs0:.6}, {:.6}]", out.lambda, abs0 + 1.0 / out.tau),
        ),
        Check::new(
            "interval_length",
            out.lambda - out.lambda_l <= 1.0 / out.tau,
            format!("length {:.6} vs 1/tau {:.6}", out.lambda - out.lambda_l, 1.0 / out.tau),
        ),
        Check::new(
            "iteration_bound",
            out.iterations() <= bound,
            format!("{} iterations vs bound {bound}", out.iterations()),
        ),
        Check::new(
            "pre_floor_slope",
            slope.is_some_and(|s| s < 0.0),
            match slope {
                Some(s) => format!("slope {s:.4} over {slope_points} pre-floor points"),
                None => format!("{slope_points} pre-floor points, no regression"),
            },
        ),
    ];
    let results = json!({
        "problem": p.summary(),
        "b": cfg.b.unwrap_or_else(|| default_b(&p)),
        "start": {
            "lambda": out.start.lambda,
            "branch": out.start.branch,
            "evaluations": out.start.evaluations,
            "halvings": out.start.halvings,
        },
        "final": {
            "tau": out.tau,
            "lambda": out.lambda,
            "lambda_l": out.lambda_l,
            "energy": e.value,
            "ci_low": e.ci_low,
            "ci_high": e.ci_high,
            "iterations": out.iterations(),
            "iteration_bound": bound,
            "total_queries": out.total_queries,
        },
        "pre_floor_slope": slope,
    });
    Ok(Run { rows, results, checks })
}

// ------------------------------------------------------------ trotter diagnostic

#[derive(Clone, Debug, PartialEq)]
pub struct TrotterRow {
    pub n_steps: usize,
    pub measured_error: f64,
    pub bound: f64,
    /// Previous row's error over this one; NaN on the first row.
    pub ratio: f64,
}

impl CsvRow for TrotterRow {
    fn header() -> &'static [&'static str] {
        &["n_steps", "measured_error", "bound", "ratio"]
    }

    fn fields(&self) -> Vec<Field> {
        vec![Field::Int(self.n_steps as u64), Field::Num(self.measured_error), Field::Num(self.bound), Field::Num(self.ratio)]
    }
}

pub fn run_trotter_diag(cfg: &ExperimentConfig) -> Result<Run<TrotterRow>> {
    if cfg.experiment != Experiment::TrotterDiag {
        bail!("experiment: expected trotter_diag");
    }
    let h = load_hamiltonian(&cfg.hamiltonian)?;
    let t = cfg.time;
    let errs: Vec<f64> = cfg
        .n_grid
        .par_iter()
        .map(|&n| Ok(measured_error(&h, &build_trotter(&h, t, n)?, t)?))
        .collect::<Result<_>>()?;
    let rows: Vec<TrotterRow> = cfg
        .n_grid
        .iter()
        .enumerate()
        .map(|(k, &n)| TrotterRow {
            n_steps: n,
            measured_error: errs[k],
            bound: trotter_error_bound(h.term_count(), h.max_abs_coeff(), t, n),
            ratio: if k == 0 { f64::NAN } else { errs[k - 1] / errs[k] },
        })
        .collect();
    let within = rows.iter().all(|r| r.measured_error <= r.bound);
    let ratios: Vec<f64> = rows.iter().filter(|r| r.n_steps >= 16 && !r.ratio.is_nan()).map(|r| r.ratio).collect();
    let checks = vec![
        Check::new("within_bound", within, format!("{} step counts", rows.len())),
        Check::new(
            "ratio_near_four",
            !ratios.is_empty() && ratios.iter().all(|r| (3.5..=4.5).contains(r)),
            format!("ratios for N >= 16: {}", ratios.iter().map(|r| format!("{r:.4}")).collect::<Vec<_>>().join(" ")),
        ),
    ];
    let results = json!({ "terms": h.term_count(), "max_abs_coeff": h.max_abs_coeff(), "time": t });
    Ok(Run { rows, results, checks })
}

// ------------------------------------------------------------- approximation

#[derive(Clone, Debug, PartialEq)]
pub struct ApproxRow {
    pub x: f64,
    pub f_exact: f64,
    pub f_approx: f64,
    pub abs_diff: f64,
}

impl CsvRow for ApproxRow {
    fn header() -> &'static [&'static str] {
        &["x", "f_exact", "F", "abs_diff"]
    }

    fn fields(&self) -> Vec<Field> {
        [self.x, self.f_exact, self.f_approx, self.abs_diff].into_iter().map(Field::Num).collect()
    }
}

/// Rows plus the fitted polynomial as JSON.
pub fn run_approx_diag(cfg: &ExperimentConfig) -> Result<(Run<ApproxRow>, String)> {
    if cfg.experiment != Experiment::ApproxDiag {
        bail!("experiment: expected approx_diag");
    }
    let lam = match cfg.lambda {
        Some(l) => l,
        None => {
            let h = load_hamiltonian(&cfg.hamiltonian)?;
            diagonalize(&h)?.ground_energy.abs() + 0.5 / cfg.tau
        }
    };
    let (spec, poly, eps) = fit_for(cfg.tau, lam, &ite_options(cfg))?;
    let rows: Vec<ApproxRow> = fit_table(&spec, &poly, cfg.points)
        .into_iter()
        .map(|[x, f, v, d]| ApproxRow { x, f_exact: f, f_approx: v, abs_diff: d })
        .collect();
    let worst = rows.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    let checks = vec![Check::new(
        "sup_error",
        worst <= eps,
        format!("max |F - f| on the table {worst:.3e}, certified eps {eps:.3e}"),
    )];
    let results = json!({ "tau": cfg.tau, "lambda": lam, "mu": spec.mu, "degree": poly.degree(), "eps": eps });
    Ok((Run { rows, results, checks }, poly.to_json()?))
}

// ------------------------------------------------------------------- driver

#[derive(Clone, Debug)]
pub struct Report {
    pub checks: Vec<Check>,
    pub manifest_hash: String,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed || !c.enforced)
    }
}

fn finish<R: CsvRow>(cfg: &ExperimentConfig, mut run: Run<R>) -> Result<Report> {
    for c in &mut run.checks {
        c.enforced = cfg.enforces(&c.name);
    }
    let passed = run.checks.iter().all(|c| c.passed || !c.enforced);
    let manifest = json!({
        "experiment": cfg.experiment,
        "config": cfg,
        "results": run.results,
        "checks": run.checks,
        "passed": passed,
    });
    let hash = write_outputs(&cfg.output, &cfg.manifest_path(), &run.rows, &manifest)?;
    Ok(Report { checks: run.checks, manifest_hash: hash })
}

/// Runs the configured experiment and writes its CSV and manifest.
pub fn execute(cfg: &ExperimentConfig) -> Result<Report> {
    match cfg.experiment {
        Experiment::LambdaSweep => finish(cfg, run_lambda_sweep(cfg)?),
        Experiment::TauSweep => finish(cfg, run_tau_sweep(cfg)?),
        Experiment::GroundSearch => finish(cfg, run_ground_search(cfg)?),
        Experiment::TrotterDiag => finish(cfg, run_trotter_diag(cfg)?),
        Experiment::ApproxDiag => {
            let (run, poly) = run_approx_diag(cfg)?;
            std::fs::write(cfg.output.with_extension("poly.json"), poly)?;
            finish(cfg, run)
        }
    }
}
