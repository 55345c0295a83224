//! Run configuration, subcommand drivers and artifact persistence.
//!
//! ```toml
//! [model]
//! n_spins = 12
//! [bath]
//! n_B = 20
//! [sim]
//! t_end = 1000.0
//! [io]
//! out = "run"
//! seed = 1
//! ```

pub mod artifacts;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::bath_thermo::{bath_moments, build_lambda, thermal_state, truncate_bath, EigenOptions, ThermalState, TruncatedBath};
use crate::dynamics::{
    equilibrium_state, exact_propagate, integrate_sme, project_pi0, reference_initial_state, shifted_eigenbasis,
    to_mat3, uniform_grid, DensityMatrix, Mat3, SmeOptions, Trajectory,
};
use crate::error::{Error, Result};
use crate::kernel_fit::{fit_kernel, fit_single_exponential, FitProblem, FitResult, KernelContext, SyntheticFit};
use crate::meanfield_kernel::tabulate_mf;
use crate::observables::{compare, compute_observables, ComparisonReport, ObservableSeries};
use crate::rng::stream;
use crate::sme_kernel::{complete_monotonicity_check, kappa, tabulate_sme, validate_constraints, SmeKernel, SmeParams};
use crate::spin_model::{build_spin1_ops, build_system_hamiltonian, SpinBathModel, SystemParams};
use artifacts::*;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BathSection {
    #[serde(rename = "n_B")]
    pub n_b: usize,
    pub eigen: EigenOptions,
}

impl Default for BathSection {
    fn default() -> Self {
        Self {
            n_b: 20,
            eigen: EigenOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimSection {
    /// ns
    pub t_end: f64,
    /// ns
    pub output_dt: f64,
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SimSection {
    fn default() -> Self {
        let o = SmeOptions::default();
        Self {
            t_end: 1e5,
            output_dt: 1.0,
            rtol: o.rtol,
            atol: o.atol,
            max_steps: o.max_steps,
        }
    }
}

impl SimSection {
    pub fn sme_options(&self) -> SmeOptions {
        SmeOptions {
            rtol: self.rtol,
            atol: self.atol,
            max_steps: self.max_steps,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IoSection {
    pub out: PathBuf,
    pub seed: u64,
}

impl Default for IoSection {
    fn default() -> Self {
        Self {
            out: PathBuf::from("run"),
            seed: 1,
        }
    }
}

/// Target c·e^{−bt} for the synthetic fit mode of `fit`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticTarget {
    pub b: f64,
    pub c: f64,
}

/// Explicit SME kernel used instead of the fit artifact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSection {
    pub beta_s: f64,
    pub mu: f64,
    pub nu: f64,
    pub gamma: f64,
    pub k1_0: f64,
    #[serde(rename = "calBbar")]
    pub cal_bbar: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub model: SystemParams,
    pub bath: BathSection,
    pub fit: FitProblem,
    pub sim: SimSection,
    pub io: IoSection,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SyntheticTarget>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSection>,
}

impl RunConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(s).map_err(|e| Error::Config(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&s)
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.fit.validate()?;
        let bad = |m: String| Err(Error::Config(m));
        if self.bath.n_b == 0 {
            return bad("bath.n_B must be at least 1".into());
        }
        if self.model.n_spins < usize::BITS as usize && self.bath.n_b > 1usize << self.model.n_spins {
            return bad(format!("bath.n_B = {} exceeds the bath dimension 2^{}", self.bath.n_b, self.model.n_spins));
        }
        let s = &self.sim;
        if !(s.t_end >= 0.0 && s.t_end.is_finite()) {
            return bad("sim.t_end must be finite and non-negative".into());
        }
        if !(s.output_dt > 0.0) || !(s.rtol > 0.0) || !(s.atol > 0.0) || s.max_steps == 0 {
            return bad("sim.output_dt, sim.rtol, sim.atol and sim.max_steps must be positive".into());
        }
        if let Some(t) = self.synthetic {
            if !(t.b > 0.0 && t.b <= self.fit.x_bound && t.c != 0.0 && t.c.is_finite()) {
                return bad("synthetic.b must lie in (0, fit.x_bound] and synthetic.c must be finite and nonzero".into());
            }
        }
        Ok(())
    }

    /// Applies command-line overrides; the fit seed always follows `io.seed`.
    pub fn with_overrides(mut self, out: Option<PathBuf>, seed: Option<u64>) -> Self {
        if let Some(o) = out {
            self.io.out = o;
        }
        if let Some(s) = seed {
            self.io.seed = s;
        }
        self.fit.seed = self.io.seed;
        self
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Which {
    Sme,
    Exact,
    Both,
}

impl Which {
    pub fn runs_sme(self) -> bool {
        matches!(self, Self::Sme | Self::Both)
    }

    pub fn runs_exact(self) -> bool {
        matches!(self, Self::Exact | Self::Both)
    }
}

/// Persisted output of `build-model`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArtifact {
    pub params: SystemParams,
    pub seed: u64,
    pub positions: Vec<[i32; 3]>,
    pub bath: TruncatedBath,
    pub thermal: ThermalState,
}

/// Open run directory plus the manifest being updated by one command.
struct Session<'a> {
    cfg: &'a RunConfig,
    dir: RunDir,
    manifest: Manifest,
}

impl<'a> Session<'a> {
    fn start(cfg: &'a RunConfig, cmd: &str) -> Result<Self> {
        let dir = RunDir::create(&cfg.io.out)?;
        let mut manifest = Manifest::load_or_default(&dir)?;
        let toml = cfg.to_toml();
        manifest.config_sha256 = dir.write(CONFIG_TOML, toml.as_bytes())?;
        manifest.record(CONFIG_TOML, manifest.config_sha256.clone());
        manifest.seed = cfg.io.seed;
        manifest.record_command(cmd);
        Ok(Self { cfg, dir, manifest })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let h = self.dir.write(name, bytes)?;
        self.manifest.record(name, h);
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<()> {
        let h = self.dir.write_json(name, v)?;
        self.manifest.record(name, h);
        Ok(())
    }

    fn finish(self) -> Result<RunDir> {
        self.manifest.save(&self.dir)?;
        Ok(self.dir)
    }

    fn model(&self) -> Result<(ModelArtifact, SpinBathModel)> {
        if !self.dir.exists(BATH_JSON) {
            return Err(Error::Artifact(format!("{} missing; run build-model first", self.dir.path(BATH_JSON).display())));
        }
        let art: ModelArtifact = self.dir.read_json(BATH_JSON)?;
        if art.params != self.cfg.model || art.bath.n_b != self.cfg.bath.n_b || art.seed != self.cfg.io.seed {
            return Err(Error::Artifact("model artifact does not match the configuration; rerun build-model".into()));
        }
        let model = SpinBathModel::from_positions(&art.params, art.positions.clone())?;
        Ok((art, model))
    }

    /// SME parameters and 𝓑̄ from `[kernel]` if present, else from the fit artifact.
    fn kernel(&self) -> Result<(SmeParams, f64)> {
        if let Some(k) = self.cfg.kernel {
            return Ok((SmeParams::new(k.beta_s, k.mu, k.nu, k.gamma, k.k1_0), k.cal_bbar));
        }
        if !self.dir.exists(FIT_JSON) {
            return Err(Error::Artifact(format!(
                "{} missing and no [kernel] section; run fit first",
                self.dir.path(FIT_JSON).display()
            )));
        }
        let fit: FitResult = self.dir.read_json(FIT_JSON)?;
        Ok((fit.sme, fit.mean_field.cal_bbar))
    }
}

fn system_mats(model: &SpinBathModel) -> Result<(Mat3, Mat3)> {
    Ok((to_mat3(&model.h_sys)?, to_mat3(model.coupling_operator())?))
}

fn kv(out: &mut String, key: &str, v: f64) {
    writeln!(out, "{key}: {}", fmt_f64(v)).unwrap();
}

/// Geometry, truncated bath and thermal state.
pub fn cmd_build_model(cfg: &RunConfig) -> Result<String> {
    let mut sess = Session::start(cfg, "build-model")?;
    let model = SpinBathModel::build(&cfg.model, &mut stream(cfg.io.seed, "lattice"))?;
    let tb = truncate_bath(&model.bath, cfg.bath.n_b, &cfg.bath.eigen)?;
    let rho = thermal_state(&tb, cfg.model.kbt)?;
    let moments = bath_moments(&tb, &rho, &build_lambda(&tb, &rho, &[]));

    let mut report = String::new();
    writeln!(report, "n_spins: {}", cfg.model.n_spins).unwrap();
    writeln!(report, "n_B: {}", tb.n_b).unwrap();
    writeln!(report, "solver: {}", tb.solver).unwrap();
    kv(&mut report, "max_residual", tb.max_residual);
    for (i, (e, p)) in tb.evals.iter().zip(&rho.weights).enumerate() {
        kv(&mut report, &format!("eval_{i}"), *e);
        kv(&mut report, &format!("weight_{i}"), *p);
    }
    for (k, v) in moments.report_lines() {
        kv(&mut report, &k, v);
    }

    sess.write(POSITIONS_CSV, positions_csv(&model.geometry.positions).as_bytes())?;
    sess.write(BATH_REPORT, report.as_bytes())?;
    let art = ModelArtifact {
        params: cfg.model.clone(),
        seed: cfg.io.seed,
        positions: model.geometry.positions.clone(),
        bath: tb,
        thermal: rho,
    };
    sess.write_json(BATH_JSON, &art)?;
    let dir = sess.finish()?;
    Ok(format!(
        "model: {} spins, {} bath states, ground energy {:.6e} GHz -> {}",
        art.positions.len(),
        art.bath.n_b,
        art.bath.evals[0],
        dir.root().display()
    ))
}

/// Constraint report for `p` plus the closed-form V and Δ checks on the fit
/// grid. Pass/fail follows the constraints and V ≥ 0; Δ ≥ 0 is reported only.
pub fn constraint_text(p: &SmeParams, fit: &FitProblem) -> (String, bool) {
    let report = validate_constraints(p);
    let times: Vec<f64> = (0..=fit.n_steps()).map(|m| m as f64 * fit.grid_dt).collect();
    let mono = complete_monotonicity_check(p, &times);
    let ok = report.all_pass() && mono.v_nonnegative;
    let text = format!("{}# closed-form checks, delta not enforced\n{}", report.to_text(), mono.to_text());
    (text, ok)
}

/// Runs the kernel fit, or the synthetic single-exponential fit when
/// `[synthetic]` is configured.
pub fn cmd_fit(cfg: &RunConfig) -> Result<String> {
    let mut sess = Session::start(cfg, "fit")?;
    let p = &cfg.fit;
    let dt = p.grid_dt;
    let n = p.n_steps();

    if let Some(t) = cfg.synthetic {
        let target: Vec<f64> = (0..=n).map(|m| t.c * (-t.b * m as f64 * dt).exp()).collect();
        let r: SyntheticFit = fit_single_exponential(&target, p)?;
        sess.write_json(SYNTHETIC_FIT_JSON, &r)?;
        sess.finish()?;
        return Ok(format!(
            "synthetic fit: b = {:.6e} (target {:.6e}), c = {:.6e} (target {:.6e}), f* = {:.3e}, evals {}",
            r.b, t.b, r.c, t.c, r.f_star, r.evals
        ));
    }

    let (art, model) = sess.model()?;
    let ctx = KernelContext::new(&model, art.bath, art.thermal);
    let r = fit_kernel(&ctx, p)?;

    let (k0, k1) = tabulate_mf(&r.mean_field, dt, n)?;
    let mf_rows = (0..=n).map(|m| vec![m as f64 * dt, k0[m], k1[m]]);
    sess.write(KERNEL_MF_CSV, csv_string(&["t", "K0_mf", "K1_mf"], mf_rows).as_bytes())?;
    let sk = SmeKernel::new(&r.sme)?;
    let sme_rows = tabulate_sme(&sk, dt, n).into_iter().map(|r| r.to_vec());
    sess.write(KERNEL_SME_CSV, csv_string(&["t", "K0_sme", "K1_sme", "V", "R"], sme_rows).as_bytes())?;
    let (text, ok) = constraint_text(&r.sme, p);
    sess.write(CONSTRAINT_REPORT, text.as_bytes())?;
    sess.write_json(FIT_JSON, &r)?;
    sess.finish()?;
    if !ok {
        return Err(Error::Constraint(format!("fitted kernel fails validation:\n{text}")));
    }
    Ok(format!(
        "fit: f* = {:.6e} ({:.3e} of the mean-field norm), {} evaluations, converged {}",
        r.f_star,
        r.relative_misfit(),
        r.evals,
        r.converged
    ))
}

/// Validates the active kernel; an error if any condition fails.
pub fn cmd_validate_kernel(cfg: &RunConfig) -> Result<String> {
    let mut sess = Session::start(cfg, "validate-kernel")?;
    let (p, _) = sess.kernel()?;
    let (text, ok) = constraint_text(&p, &cfg.fit);
    sess.write(CONSTRAINT_REPORT, text.as_bytes())?;
    sess.finish()?;
    if ok {
        Ok(text)
    } else {
        Err(Error::Constraint(format!("kernel fails validation:\n{text}")))
    }
}

#[derive(Debug, Clone)]
pub struct SimulationOutput {
    pub trajectories: Vec<Trajectory>,
    pub observables: Vec<ObservableSeries>,
    pub comparison: Option<ComparisonReport>,
}

/// Propagates the reference initial state with the SME and/or the exact
/// truncated-bath dynamics.
pub fn run_simulation(cfg: &RunConfig, which: Which) -> Result<SimulationOutput> {
    let mut sess = Session::start(cfg, "simulate")?;
    let (art, model) = sess.model()?;
    let (h, s) = system_mats(&model)?;
    let psi0 = reference_initial_state();
    let rho0 = DensityMatrix::pure(&psi0)?;
    let grid = uniform_grid(cfg.sim.t_end, cfg.sim.output_dt)?;

    let kernel = if which.runs_sme() || sess.dir.exists(FIT_JSON) || cfg.kernel.is_some() {
        Some(sess.kernel()?)
    } else {
        None
    };
    let cal_bbar = match kernel {
        Some((_, b)) => b,
        None => bath_moments(&art.bath, &art.thermal, &build_lambda(&art.bath, &art.thermal, &[])).cal_bbar,
    };

    let mut trajectories = Vec::new();
    if let (true, Some((p, _))) = (which.runs_sme(), kernel) {
        let report = validate_constraints(&p);
        if !report.all_pass() {
            let names: Vec<&str> = report.failures().iter().map(|e| e.name.as_str()).collect();
            return Err(Error::Constraint(format!("refusing to run the SME: failing {}", names.join(", "))));
        }
        let k = SmeKernel::new(&p)?;
        trajectories.push(integrate_sme(&h, &s, cal_bbar, &k, &rho0, &grid, &cfg.sim.sme_options())?);
    }
    if which.runs_exact() {
        trajectories.push(exact_propagate(&art.bath, &model.h_sys, model.coupling_operator(), &psi0, cfg.model.kbt, &grid)?);
    }

    let mut observables = Vec::new();
    for traj in &trajectories {
        let kind = traj.kind.as_str();
        let obs = compute_observables(traj, &h, &s, cal_bbar);
        sess.write(&trajectory_csv(kind), trajectory_csv_string(traj).as_bytes())?;
        sess.write(&observables_csv(kind), observables_csv_string(&obs).as_bytes())?;
        observables.push(obs);
    }
    let comparison = if which == Which::Both {
        let rep = compare(&observables[1], &observables[0])?;
        sess.write(COMPARISON_REPORT, rep.to_text().as_bytes())?;
        Some(rep)
    } else {
        None
    };
    sess.finish()?;
    Ok(SimulationOutput {
        trajectories,
        observables,
        comparison,
    })
}

pub fn cmd_simulate(cfg: &RunConfig, which: Which) -> Result<String> {
    let out = run_simulation(cfg, which)?;
    let mut s = String::new();
    for (traj, obs) in out.trajectories.iter().zip(&out.observables) {
        let n = obs.len();
        writeln!(
            s,
            "{}: {} points, final purity {:.6e}, min eigenvalue {:.3e}",
            traj.kind.as_str(),
            n,
            obs.purity[n - 1],
            traj.diagnostics.min_eigenvalue
        )
        .unwrap();
    }
    if let Some(c) = &out.comparison {
        s.push_str(&c.to_text());
    }
    Ok(s)
}

/// Recomputes the comparison report from saved observable CSVs
/// (exact is the reference).
pub fn cmd_compare(cfg: &RunConfig) -> Result<String> {
    let mut sess = Session::start(cfg, "compare")?;
    let a = parse_observables_csv(&sess.dir.read_to_string(&observables_csv("exact"))?)?;
    let b = parse_observables_csv(&sess.dir.read_to_string(&observables_csv("sme"))?)?;
    let rep = compare(&a, &b)?;
    let text = rep.to_text();
    sess.write(COMPARISON_REPORT, text.as_bytes())?;
    sess.finish()?;
    Ok(text)
}

#[derive(Debug, Clone)]
pub struct EquilibriumOutput {
    pub kappa: f64,
    pub rho_inf: DensityMatrix,
    /// max |Π₀ρ(∞) − ρ(∞)|
    pub pi0_residual: f64,
    /// max |ρ_SME(t_end) − ρ(∞)| if an SME trajectory is present.
    pub sme_final_deviation: Option<f64>,
    pub report: String,
}

pub fn run_equilibrium(cfg: &RunConfig) -> Result<EquilibriumOutput> {
    let mut sess = Session::start(cfg, "equilibrium")?;
    let h = to_mat3(&build_system_hamiltonian(&cfg.model))?;
    let s = to_mat3(&build_spin1_ops().sx)?;
    let (p, cal_bbar) = sess.kernel()?;
    let kap = kappa(&p)?;
    let rho0 = DensityMatrix::pure(&reference_initial_state())?;
    let rho_inf = equilibrium_state(&h, &s, cal_bbar, kap, &rho0)?;
    let m = rho_inf.matrix();
    let pi0_residual = (project_pi0(&h, &s, cal_bbar, m) - m).iter().fold(0.0f64, |a, z| a.max(z.norm()));

    let traj_name = trajectory_csv("sme");
    let sme_final_deviation = if sess.dir.exists(&traj_name) {
        let rows = parse_csv(&sess.dir.read_to_string(&traj_name)?, &TRAJECTORY_COLUMNS)?;
        rows.last().map(|r| {
            let mut dev = 0.0f64;
            let mut k = 1;
            for i in 0..3 {
                for j in i..3 {
                    let z = crate::operator::c(r[k], r[k + 1]) - m[(i, j)];
                    dev = dev.max(z.norm());
                    k += 2;
                }
            }
            dev
        })
    } else {
        None
    };

    let (vals, u) = shifted_eigenbasis(&h, &s, cal_bbar);
    let pops = u.adjoint() * m * u;
    let mut text = String::new();
    kv(&mut text, "kappa", kap);
    kv(&mut text, "calBbar", cal_bbar);
    for i in 0..3 {
        kv(&mut text, &format!("level_{}", i + 1), vals[i]);
        kv(&mut text, &format!("population_{}", i + 1), pops[(i, i)].re);
    }
    for i in 0..3 {
        for j in i..3 {
            kv(&mut text, &format!("rho_re_{}{}", i + 1, j + 1), m[(i, j)].re);
            kv(&mut text, &format!("rho_im_{}{}", i + 1, j + 1), m[(i, j)].im);
        }
    }
    kv(&mut text, "pi0_residual", pi0_residual);
    if let Some(d) = sme_final_deviation {
        kv(&mut text, "sme_final_max_abs_deviation", d);
    }
    sess.write(EQUILIBRIUM_REPORT, text.as_bytes())?;
    sess.finish()?;
    Ok(EquilibriumOutput {
        kappa: kap,
        rho_inf,
        pi0_residual,
        sme_final_deviation,
        report: text,
    })
}

pub fn cmd_equilibrium(cfg: &RunConfig) -> Result<String> {
    run_equilibrium(cfg).map(|o| o.report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn desk(out: &Path) -> RunConfig {
        let s = format!(
            "[model]\nn_spins = 4\n[bath]\nn_B = 8\n[sim]\nt_end = 5.0\noutput_dt = 0.5\n[io]\nout = {:?}\nseed = 3\n",
            out.display().to_string()
        );
        RunConfig::from_toml_str(&s).unwrap().with_overrides(None, None)
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let back = RunConfig::from_toml_str(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = RunConfig::from_toml_str("[bath]\nn_B = 20\nnb = 3\n").unwrap_err().to_string();
        assert!(err.contains("nb"), "{err}");
        let err = RunConfig::from_toml_str("[modle]\n").unwrap_err().to_string();
        assert!(err.contains("modle"), "{err}");
    }

    #[test]
    fn oversized_truncation_is_rejected() {
        assert!(RunConfig::from_toml_str("[model]\nn_spins = 2\n[bath]\nn_B = 5\n").is_err());
    }

    #[test]
    fn seed_override_reaches_the_fit() {
        let cfg = RunConfig::default().with_overrides(Some("x".into()), Some(42));
        assert_eq!(cfg.io.seed, 42);
        assert_eq!(cfg.fit.seed, 42);
        assert_eq!(cfg.io.out, PathBuf::from("x"));
    }

    #[test]
    fn build_model_writes_artifacts() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = desk(tmp.path());
        cmd_build_model(&cfg).unwrap();
        let dir = RunDir::open(tmp.path()).unwrap();
        let pos = parse_positions_csv(&dir.read_to_string(POSITIONS_CSV).unwrap()).unwrap();
        assert_eq!(pos.len(), 4);
        let art: ModelArtifact = dir.read_json(BATH_JSON).unwrap();
        assert_eq!(art.bath.evals.len(), 8);
        let m = Manifest::load_or_default(&dir).unwrap();
        assert_eq!(m.seed, 3);
        assert_eq!(m.artifacts[BATH_JSON], sha256_hex(&std::fs::read(dir.path(BATH_JSON)).unwrap()));
    }

    #[test]
    fn exact_snapshot_at_zero_is_initial_state() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = desk(tmp.path());
        cfg.sim.t_end = 0.0;
        cmd_build_model(&cfg).unwrap();
        let out = run_simulation(&cfg, Which::Exact).unwrap();
        let rho0 = DensityMatrix::pure(&reference_initial_state()).unwrap();
        assert_eq!(out.trajectories[0].states.len(), 1);
        let d = (out.trajectories[0].states[0] - rho0.matrix()).iter().fold(0.0f64, |a, z| a.max(z.norm()));
        assert!(d < 1e-12, "{d}");
    }

    #[test]
    fn sme_refuses_failing_kernel() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = desk(tmp.path());
        cmd_build_model(&cfg).unwrap();
        cfg.kernel = Some(KernelSection {
            beta_s: 1.0,
            mu: 5.0,
            nu: 1.0,
            gamma: 1.0,
            k1_0: 1e-3,
            cal_bbar: 0.0,
        });
        let err = run_simulation(&cfg, Which::Sme).unwrap_err().to_string();
        assert!(err.contains("refusing") && err.contains("r_monotone_3beta_gt_mu"), "{err}");
        assert!(cmd_validate_kernel(&cfg).is_err());
    }

    #[test]
    fn missing_model_is_reported() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = desk(tmp.path());
        let err = run_simulation(&cfg, Which::Exact).unwrap_err().to_string();
        assert!(err.contains("build-model"), "{err}");
    }
}
