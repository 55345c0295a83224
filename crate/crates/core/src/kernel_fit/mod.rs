//! Joint fit of the Λ coefficients η and kernel variables X so that the
//! rational-transform K⁽¹⁾ matches the mean-field K⁽¹⁾.

pub mod anneal;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bath_thermo::{bath_moments, build_lambda, BathMoments, ThermalState, TruncatedBath};
use crate::error::{Error, Result};
use crate::meanfield_kernel::{double_commutator_means, tabulate_k1_mf, DoubleCommutatorMeans, MeanFieldKernel};
use crate::rng::stream;
use crate::sme_kernel::{eval_k1_sme, sme_from_x, validate_constraints, SmeKernel, SmeParams, X_BOUND};
use crate::spin_model::SpinBathModel;
pub use anneal::{anneal, AnnealOptions, AnnealResult, TemperatureSummary};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FitProblem {
    pub eta_bound: f64,
    pub n_p: usize,
    pub x_bound: f64,
    pub t_max: f64,
    pub grid_dt: f64,
    /// Starting kernel variables; η starts at 0.
    pub x0: [f64; 4],
    /// Termination tolerance relative to ∫(K⁽¹⁾_MF)² at the starting η.
    pub rel_tol: f64,
    pub schedule: AnnealOptions,
    /// Run seed; set from the run configuration, not read from the fit section.
    #[serde(skip)]
    pub seed: u64,
}

impl Default for FitProblem {
    fn default() -> Self {
        Self {
            eta_bound: 300.0,
            n_p: 10,
            x_bound: X_BOUND,
            t_max: 30.0,
            grid_dt: 0.05,
            x0: [1.0, 0.1, 0.01, 1.0],
            rel_tol: 1e-7,
            schedule: AnnealOptions::default(),
            seed: 0,
        }
    }
}

impl FitProblem {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.into()));
        if !(self.eta_bound > 0.0 && self.x_bound > 0.0 && self.t_max > 0.0 && self.grid_dt > 0.0) {
            return bad("fit bounds, t_max and grid_dt must be positive");
        }
        if !(self.rel_tol > 0.0) {
            return bad("fit rel_tol must be positive");
        }
        let n = self.t_max / self.grid_dt;
        if (n - n.round()).abs() > 1e-9 * n.max(1.0) {
            return bad("grid_dt must divide t_max");
        }
        if self.x0.iter().any(|&x| !(0.0..=self.x_bound).contains(&x)) {
            return bad("x0 must lie in [0, x_bound]");
        }
        let s = &self.schedule;
        if s.ns == 0 || s.nt == 0 || s.neps == 0 || !(s.rt > 0.0 && s.rt < 1.0) || !(s.c > 0.0) {
            return bad("invalid annealing schedule");
        }
        Ok(())
    }

    pub fn n_steps(&self) -> usize {
        (self.t_max / self.grid_dt).round() as usize
    }

    fn lower_upper(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lb = vec![-self.eta_bound; self.n_p];
        let mut ub = vec![self.eta_bound; self.n_p];
        lb.extend([0.0; 4]);
        ub.extend([self.x_bound; 4]);
        (lb, ub)
    }
}

/// Trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values.len() {
        0 | 1 => 0.0,
        n => dt * (values.iter().sum::<f64>() - 0.5 * (values[0] + values[n - 1])),
    }
}

/// ∫(target − K⁽¹⁾_SME)² on the grid t_m = m·dt.
pub fn kernel_misfit(target: &[f64], kernel: &SmeKernel, dt: f64) -> f64 {
    let sq: Vec<f64> = target
        .iter()
        .enumerate()
        .map(|(m, &y)| (y - eval_k1_sme(kernel, m as f64 * dt)).powi(2))
        .collect();
    trapezoid(&sq, dt)
}

/// Everything the objective needs from the spin-bath model.
#[derive(Debug, Clone)]
pub struct KernelContext {
    pub bath: TruncatedBath,
    pub rho_b: ThermalState,
    pub dc: DoubleCommutatorMeans,
}

impl KernelContext {
    pub fn new(model: &SpinBathModel, bath: TruncatedBath, rho_b: ThermalState) -> Self {
        let dc = double_commutator_means(&model.h_sys, model.coupling_operator());
        Self { bath, rho_b, dc }
    }

    pub fn moments(&self, eta: &[f64]) -> BathMoments {
        bath_moments(&self.bath, &self.rho_b, &build_lambda(&self.bath, &self.rho_b, eta))
    }

    pub fn mean_field(&self, eta: &[f64]) -> Result<MeanFieldKernel> {
        MeanFieldKernel::new(&self.dc, &self.moments(eta))
    }
}

#[derive(Debug, Clone)]
struct MfEntry {
    k1_0: f64,
    k1: Vec<f64>,
}

/// Small cache of mean-field K⁽¹⁾ tables keyed by the exact η bits.
struct MfCache {
    entries: Vec<(Vec<u64>, Option<MfEntry>)>,
    capacity: usize,
}

impl MfCache {
    fn new(capacity: usize) -> Self {
        Self {
            entries: Vec::new(),
            capacity,
        }
    }

    fn get(&mut self, ctx: &KernelContext, eta: &[f64], dt: f64, n: usize) -> Option<MfEntry> {
        let key: Vec<u64> = eta.iter().map(|v| v.to_bits()).collect();
        if let Some(pos) = self.entries.iter().position(|(k, _)| *k == key) {
            let e = self.entries.remove(pos);
            let out = e.1.clone();
            self.entries.push(e);
            return out;
        }
        let val = ctx.mean_field(eta).ok().and_then(|mf| {
            tabulate_k1_mf(&mf, dt, n).ok().map(|k1| MfEntry {
                k1_0: mf.k1_at_zero(),
                k1,
            })
        });
        if self.entries.len() == self.capacity {
            self.entries.remove(0);
        }
        self.entries.push((key, val.clone()));
        val
    }
}

fn sme_candidate(x: &[f64], k1_0: f64) -> Option<SmeKernel> {
    if !(k1_0 > 0.0) {
        return None;
    }
    let p = sme_from_x([x[0], x[1], x[2], x[3]], k1_0).ok()?;
    if !validate_constraints(&p).all_pass() {
        return None;
    }
    SmeKernel::new(&p).ok()
}

/// f(η, X) = ∫₀^t_max (K⁽¹⁾_MF − K⁽¹⁾_SME)² dt, +∞ when infeasible.
pub fn objective_f(eta: &[f64], x: &[f64; 4], ctx: &KernelContext, p: &FitProblem) -> f64 {
    let mut cache = MfCache::new(1);
    objective_cached(eta, x, ctx, p, &mut cache)
}

fn objective_cached(eta: &[f64], x: &[f64], ctx: &KernelContext, p: &FitProblem, cache: &mut MfCache) -> f64 {
    if eta.iter().any(|e| !(e.abs() <= p.eta_bound)) || x.iter().any(|v| !(0.0..=p.x_bound).contains(v)) {
        return f64::INFINITY;
    }
    let Some(mf) = cache.get(ctx, eta, p.grid_dt, p.n_steps()) else {
        return f64::INFINITY;
    };
    match sme_candidate(x, mf.k1_0) {
        Some(k) => kernel_misfit(&mf.k1, &k, p.grid_dt),
        None => f64::INFINITY,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub eta: Vec<f64>,
    pub x: [f64; 4],
    pub sme: SmeParams,
    pub f_star: f64,
    pub f_initial: f64,
    /// ∫(K⁽¹⁾_MF)² at η*.
    pub mf_norm: f64,
    pub evals: usize,
    pub initial_temperature: f64,
    pub converged: bool,
    pub mean_field: MeanFieldKernel,
    pub trace: Vec<TemperatureSummary>,
}

impl FitResult {
    pub fn relative_misfit(&self) -> f64 {
        self.f_star / self.mf_norm
    }
}

/// Draws tried when η = 0 gives no mean-field kernel.
const START_DRAWS: usize = 10_000;

/// η = 0 if its mean-field kernel exists, else the first seeded uniform draw
/// in the η box that has one; returns η and ∫(K⁽¹⁾_MF)² there.
fn starting_eta(ctx: &KernelContext, p: &FitProblem) -> Result<(Vec<f64>, f64)> {
    let n = p.n_steps();
    let norm = |eta: &[f64]| -> Option<f64> {
        let k1 = tabulate_k1_mf(&ctx.mean_field(eta).ok()?, p.grid_dt, n).ok()?;
        let v = trapezoid(&k1.iter().map(|v| v * v).collect::<Vec<_>>(), p.grid_dt);
        (v.is_finite() && v > 0.0).then_some(v)
    };
    let eta0 = vec![0.0; p.n_p];
    if let Some(v) = norm(&eta0) {
        return Ok((eta0, v));
    }
    let mut rng = stream(p.seed, "fit_start");
    for _ in 0..START_DRAWS {
        let eta: Vec<f64> = (0..p.n_p).map(|_| rng.random_range(-p.eta_bound..=p.eta_bound)).collect();
        if let Some(v) = norm(&eta) {
            return Ok((eta, v));
        }
    }
    Err(Error::NoFeasiblePoint(START_DRAWS + 1))
}

/// Anneals (η, X). The RNG stream is `annealer` under `p.seed`.
pub fn fit_kernel(ctx: &KernelContext, p: &FitProblem) -> Result<FitResult> {
    p.validate()?;
    let n = p.n_steps();
    let (eta0, scale) = starting_eta(ctx, p)?;
    let mut opts = p.schedule;
    opts.eps = p.rel_tol * scale;
    let (lb, ub) = p.lower_upper();
    let mut start = eta0;
    start.extend(p.x0);

    let mut cache = MfCache::new(4);
    let np = p.n_p;
    let res = anneal(
        |v: &[f64]| objective_cached(&v[..np], &v[np..], ctx, p, &mut cache),
        &lb,
        &ub,
        &start,
        &opts,
        &mut stream(p.seed, "annealer"),
    )?;

    let eta = res.x_best[..np].to_vec();
    let x = [res.x_best[np], res.x_best[np + 1], res.x_best[np + 2], res.x_best[np + 3]];
    let mean_field = ctx.mean_field(&eta)?;
    let mf_k1 = tabulate_k1_mf(&mean_field, p.grid_dt, n)?;
    let mf_norm = trapezoid(&mf_k1.iter().map(|v| v * v).collect::<Vec<_>>(), p.grid_dt);
    let sme = sme_from_x(x, mean_field.k1_at_zero())?;
    let report = validate_constraints(&sme);
    if !report.all_pass() {
        return Err(Error::Constraint(report.to_text()));
    }
    Ok(FitResult {
        eta,
        x,
        sme,
        f_star: res.f_best,
        f_initial: res.f_initial,
        mf_norm,
        evals: res.evals,
        initial_temperature: res.initial_temperature,
        converged: res.converged,
        mean_field,
        trace: res.trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFit {
    pub b: f64,
    pub c: f64,
    pub f_star: f64,
    pub evals: usize,
    pub converged: bool,
}

/// Single-exponential member of the kernel family: γ = 0, μ = β + b, ν = βb
/// gives K⁽¹⁾(t) = c e^{−bt} for any β > 0.
pub fn single_exponential_kernel(b: f64, c: f64) -> SmeParams {
    let beta = 1.0;
    SmeParams::new(beta, beta + b, beta * b, 0.0, c)
}

/// Fits (b, c) of c·e^{−bt} to `target` sampled on t_m = m·grid_dt by the
/// same annealer and quadrature as [`fit_kernel`].
pub fn fit_single_exponential(target: &[f64], p: &FitProblem) -> Result<SyntheticFit> {
    p.validate()?;
    let dt = p.grid_dt;
    let c_hi = 10.0 * target.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(c_hi > 0.0) {
        return Err(Error::InvalidParameter("synthetic target is identically zero".into()));
    }
    let scale = trapezoid(&target.iter().map(|v| v * v).collect::<Vec<_>>(), dt);
    let mut opts = p.schedule;
    opts.eps = p.rel_tol * scale;
    let f = |v: &[f64]| {
        let (b, c) = (v[0], v[1]);
        let sq: Vec<f64> = target
            .iter()
            .enumerate()
            .map(|(m, &y)| (y - c * (-b * m as f64 * dt).exp()).powi(2))
            .collect();
        trapezoid(&sq, dt)
    };
    let res = anneal(
        f,
        &[0.0, 0.0],
        &[p.x_bound, c_hi],
        &[p.x0[0], 0.5 * c_hi],
        &opts,
        &mut stream(p.seed, "annealer"),
    )?;
    Ok(SyntheticFit {
        b: res.x_best[0],
        c: res.x_best[1],
        f_star: res.f_best,
        evals: res.evals,
        converged: res.converged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath_thermo::{thermal_state, truncate_bath, EigenOptions};
    use crate::spin_model::SystemParams;

    fn small_context() -> KernelContext {
        let params = SystemParams {
            n_spins: 6,
            ..Default::default()
        };
        let model = SpinBathModel::build(&params, &mut stream(3, "lattice")).unwrap();
        let tb = truncate_bath(&model.bath, 12, &EigenOptions::default()).unwrap();
        let rho = thermal_state(&tb, params.kbt).unwrap();
        KernelContext::new(&model, tb, rho)
    }

    #[test]
    fn trapezoid_exact_for_linear() {
        let v: Vec<f64> = (0..=10).map(|m| 2.0 * m as f64 * 0.1 + 1.0).collect();
        assert!((trapezoid(&v, 0.1) - 2.0).abs() < 1e-14);
    }

    #[test]
    fn misfit_vanishes_for_own_tabulation() {
        let p = SmeParams::new(45.9675, 46.4375, 21.6505, 106.1616, 1.1665e-3);
        let k = SmeKernel::new(&p).unwrap();
        let target: Vec<f64> = (0..=600).map(|m| eval_k1_sme(&k, m as f64 * 0.05)).collect();
        assert_eq!(kernel_misfit(&target, &k, 0.05), 0.0);
    }

    #[test]
    fn objective_nonnegative_and_penalised() {
        let ctx = small_context();
        let p = FitProblem::default();
        let eta = vec![0.0; p.n_p];
        let f = objective_f(&eta, &p.x0, &ctx, &p);
        assert!(f.is_finite() && f >= 0.0);
        // μ = 1 + 10 + 2 > 3β
        assert_eq!(objective_f(&eta, &[1.0, 10.0, 1.0, 1.0], &ctx, &p), f64::INFINITY);
        let mut far = eta.clone();
        far[0] = 400.0;
        assert_eq!(objective_f(&far, &p.x0, &ctx, &p), f64::INFINITY);
    }

    #[test]
    fn synthetic_exponential_is_recovered() {
        let (b, c) = (0.37, 1.2e-3);
        let p = FitProblem::default();
        let target: Vec<f64> = (0..=p.n_steps()).map(|m| c * (-b * m as f64 * p.grid_dt).exp()).collect();
        let fit = fit_single_exponential(&target, &p).unwrap();
        assert!((fit.b - b).abs() < 0.01 * b, "{fit:?}");
        assert!((fit.c - c).abs() < 0.01 * c, "{fit:?}");
        assert!(fit.f_star < 1e-10 * c * c * p.t_max);
    }

    #[test]
    fn single_exponential_member_matches_closed_form() {
        let p = single_exponential_kernel(0.37, 2.0);
        // γ = 0 places a root at the origin with zero weight.
        let den = |z: f64| z * z + p.mu * z + p.nu;
        assert!(den(-0.37).abs() < 1e-14);
        assert!((p.k1_laplace(crate::operator::c(0.5, 0.0)).re - 2.0 / 0.87).abs() < 1e-14);
    }
}
