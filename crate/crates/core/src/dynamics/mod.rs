//! Reduced dynamics of the spin-1 system: the rational-kernel master equation
//! through auxiliary memory variables, the exact truncated-basis reference and
//! the long-time equilibrium state.

pub mod dop853;

use nalgebra::{DMatrix, Matrix3, SMatrix, Vector3};
use serde::{Deserialize, Serialize};

use crate::bath_thermo::{thermal_state, TruncatedBath};
use crate::error::{Error, Result};
use crate::operator::{c, eigh_sorted, kron, HermitianOperator, CMatrix, C64};
use crate::sme_kernel::{validate_constraints, SmeKernel};
pub use dop853::{Dop853Options, Dop853Stats};

pub type Mat3 = Matrix3<C64>;

/// Tolerance for Hermiticity and unit trace of a density matrix.
pub const STATE_TOL: f64 = 1e-12;

pub fn to_mat3(op: &HermitianOperator) -> Result<Mat3> {
    if op.dim() != 3 {
        return Err(Error::InvalidParameter(format!("expected a 3x3 operator, got dimension {}", op.dim())));
    }
    Ok(Mat3::from_fn(|i, j| op.matrix()[(i, j)]))
}

pub fn commutator3(a: &Mat3, b: &Mat3) -> Mat3 {
    a * b - b * a
}

/// [S,[S,X]]
pub fn double_commutator3(s: &Mat3, x: &Mat3) -> Mat3 {
    commutator3(s, &commutator3(s, x))
}

pub fn hermitian_part(m: &Mat3) -> Mat3 {
    (m + m.adjoint()) * c(0.5, 0.0)
}

fn max_abs(m: &Mat3) -> f64 {
    m.iter().fold(0.0, |a, z| a.max(z.norm()))
}

/// Ascending eigenvalues and eigenvectors of a 3×3 Hermitian matrix.
pub fn eigh3(m: &Mat3) -> (Vector3<f64>, Mat3) {
    let dm = CMatrix::from_fn(3, 3, |i, j| m[(i, j)]);
    let (vals, vecs) = eigh_sorted(&dm);
    (Vector3::new(vals[0], vals[1], vals[2]), Mat3::from_fn(|i, j| vecs[(i, j)]))
}

pub fn min_eigenvalue3(m: &Mat3) -> f64 {
    eigh3(&hermitian_part(m)).0[0]
}

/// A validated 3×3 density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Mat3);

impl DensityMatrix {
    pub fn new(m: Mat3) -> Result<Self> {
        let dev = max_abs(&(m - m.adjoint()));
        if dev > STATE_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let tr = m.trace();
        if (tr - c(1.0, 0.0)).norm() > STATE_TOL {
            return Err(Error::InvalidParameter(format!("density matrix trace {tr} differs from 1")));
        }
        Ok(Self(m))
    }

    /// |ψ⟩⟨ψ| for a normalised ψ.
    pub fn pure(psi: &Vector3<C64>) -> Result<Self> {
        Self::new(psi * psi.adjoint())
    }

    pub fn matrix(&self) -> &Mat3 {
        &self.0
    }

    pub fn purity(&self) -> f64 {
        (self.0 * self.0).trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        min_eigenvalue3(&self.0)
    }
}

/// Eigenvectors of S_X for eigenvalues −1, 0, +1 with real, non-negative
/// first components.
pub fn sx_eigenvectors() -> [Vector3<C64>; 3] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        Vector3::new(c(0.5, 0.0), c(-r, 0.0), c(0.5, 0.0)),
        Vector3::new(c(r, 0.0), c(0.0, 0.0), c(-r, 0.0)),
        Vector3::new(c(0.5, 0.0), c(r, 0.0), c(0.5, 0.0)),
    ]
}

/// ψ₀ = (√3|−⟩ + i|0⟩ + |+⟩)/√5 in the S_X eigenbasis; ⟨S_X⟩ = −0.4.
pub fn reference_initial_state() -> Vector3<C64> {
    let [m, z, p] = sx_eigenvectors();
    (m * c(3f64.sqrt(), 0.0) + z * c(0.0, 1.0) + p) * c(1.0 / 5f64.sqrt(), 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrajectoryKind {
    Sme,
    Exact,
}

impl TrajectoryKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Sme => "sme",
            Self::Exact => "exact",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    pub max_trace_error: f64,
    /// Largest anti-Hermitian part of the memory sum (zero for exact runs).
    pub max_memory_residue: f64,
    pub min_eigenvalue: f64,
    pub rhs_evals: usize,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub times: Vec<f64>,
    pub states: Vec<Mat3>,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    fn finish(kind: TrajectoryKind, times: Vec<f64>, states: Vec<Mat3>, mut diagnostics: TrajectoryDiagnostics) -> Self {
        diagnostics.max_trace_error = states.iter().map(|m| (m.trace() - c(1.0, 0.0)).norm()).fold(0.0, f64::max);
        diagnostics.min_eigenvalue = states.iter().map(min_eigenvalue3).fold(f64::INFINITY, f64::min);
        Self {
            kind,
            times,
            states,
            diagnostics,
        }
    }
}

/// t_j = j·dt for j = 0..=round(t_end/dt).
pub fn uniform_grid(t_end: f64, dt: f64) -> Result<Vec<f64>> {
    if !(t_end >= 0.0 && dt > 0.0) {
        return Err(Error::InvalidParameter("time grid needs t_end >= 0 and dt > 0".into()));
    }
    let n = (t_end / dt).round() as usize;
    Ok((0..=n).map(|j| j as f64 * dt).collect())
}

fn check_grid(t: &[f64]) -> Result<()> {
    if t.is_empty() || t[0] < 0.0 || t.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be non-empty, non-negative and strictly increasing".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SmeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub max_steps: usize,
}

impl Default for SmeOptions {
    fn default() -> Self {
        Self {
            rtol: 1e-10,
            atol: 1e-12,
            max_steps: 50_000_000,
        }
    }
}

const STATE_LEN: usize = 4 * 9 * 2;

fn unpack(y: &[f64], block: usize) -> Mat3 {
    let o = 18 * block;
    Mat3::from_fn(|i, j| {
        let k = o + 2 * (3 * i + j);
        c(y[k], y[k + 1])
    })
}

fn pack(m: &Mat3, y: &mut [f64], block: usize) {
    let o = 18 * block;
    for i in 0..3 {
        for j in 0..3 {
            let k = o + 2 * (3 * i + j);
            y[k] = m[(i, j)].re;
            y[k + 1] = m[(i, j)].im;
        }
    }
}

/// dρ/dt = −i[H + 𝓑̄S, ρ] − iK⁽⁰⁾(t)[S, ρ₀] − Herm ΣΩ_k,
/// dΩ_k/dt = a_k[S,[S,ρ]] + z_k Ω_k.
#[derive(Debug, Clone)]
pub struct SmeSystem {
    pub h_shifted: Mat3,
    pub s: Mat3,
    pub kernel: SmeKernel,
    pub rho0: Mat3,
    comm0: Mat3,
}

impl SmeSystem {
    pub fn new(h: &Mat3, s: &Mat3, cal_bbar: f64, kernel: &SmeKernel, rho0: &DensityMatrix) -> Self {
        let h_shifted = h + s * c(cal_bbar, 0.0);
        Self {
            h_shifted,
            s: *s,
            kernel: *kernel,
            rho0: *rho0.matrix(),
            comm0: commutator3(s, rho0.matrix()),
        }
    }

    fn k0(&self, t: f64) -> f64 {
        if self.kernel.params.k1_0 == 0.0 {
            return 0.0;
        }
        crate::sme_kernel::eval_k0_sme(&self.kernel, t)
    }

    /// Returns dρ/dt and the Ω sum for the packed state.
    fn derivatives(&self, t: f64, y: &[f64], dy: &mut [f64]) -> Mat3 {
        let rho = unpack(y, 0);
        let d = double_commutator3(&self.s, &rho);
        let mut sum = Mat3::zeros();
        for k in 0..3 {
            let om = unpack(y, k + 1);
            sum += om;
            let dom = d * self.kernel.a[k] + om * self.kernel.roots[k];
            pack(&dom, dy, k + 1);
        }
        let mi = c(0.0, -1.0);
        let drho = commutator3(&self.h_shifted, &rho) * mi + self.comm0 * (mi * self.k0(t)) - hermitian_part(&sum);
        pack(&drho, dy, 0);
        sum
    }

    pub fn rhs(&self, t: f64, y: &[f64], dy: &mut [f64]) {
        self.derivatives(t, y, dy);
    }

    pub fn initial_state(&self) -> Vec<f64> {
        let mut y = vec![0.0; STATE_LEN];
        pack(&self.rho0, &mut y, 0);
        y
    }

    /// dρ/dt at t = 0, where every Ω_k vanishes.
    pub fn initial_derivative(&self) -> Mat3 {
        let mut dy = vec![0.0; STATE_LEN];
        self.rhs(0.0, &self.initial_state(), &mut dy);
        unpack(&dy, 0)
    }
}

/// Integrates the rational-kernel master equation and samples ρ on `tgrid`.
/// The kernel must pass the constraint validator unless it is identically
/// zero (K⁽¹⁾(0) = 0).
pub fn integrate_sme(h: &Mat3, s: &Mat3, cal_bbar: f64, kernel: &SmeKernel, rho0: &DensityMatrix, tgrid: &[f64], opts: &SmeOptions) -> Result<Trajectory> {
    check_grid(tgrid)?;
    if kernel.params.k1_0 != 0.0 {
        let report = validate_constraints(&kernel.params);
        if !report.all_pass() {
            let names: Vec<&str> = report.failures().iter().map(|e| e.name.as_str()).collect();
            return Err(Error::Constraint(names.join(", ")));
        }
    }
    let sys = SmeSystem::new(h, s, cal_bbar, kernel, rho0);
    let mut states = Vec::with_capacity(tgrid.len());
    let mut residue: f64 = 0.0;
    let mut scratch = vec![0.0; STATE_LEN];
    let stats = dop853::integrate(
        |t, y, dy| sys.rhs(t, y, dy),
        0.0,
        &sys.initial_state(),
        tgrid,
        &Dop853Options {
            rtol: opts.rtol,
            atol: opts.atol,
            max_steps: opts.max_steps,
            ..Default::default()
        },
        |_, t, y| {
            let sum = sys.derivatives(t, y, &mut scratch);
            residue = residue.max(max_abs(&(sum - hermitian_part(&sum))));
            states.push(hermitian_part(&unpack(y, 0)));
        },
    )?;
    Ok(Trajectory::finish(
        TrajectoryKind::Sme,
        tgrid.to_vec(),
        states,
        TrajectoryDiagnostics {
            max_memory_residue: residue,
            rhs_evals: stats.evals,
            accepted_steps: stats.accepted,
            rejected_steps: stats.rejected,
            ..Default::default()
        },
    ))
}

/// Exact reference in the truncated bath eigenbasis.
///
/// H_tot = H⊗1 + S⊗B + 1⊗diag(e) on the 3n_B product space; each |ψ₀⟩⊗|e_i⟩
/// evolves through the eigendecomposition of H_tot and the bath is traced out
/// with Boltzmann weights.
#[derive(Debug, Clone)]
pub struct ExactPropagator {
    n_b: usize,
    energies: Vec<f64>,
    vecs: CMatrix,
    /// V† (ψ₀⊗e_i) √p_i, one column per bath state.
    coeffs: CMatrix,
}

impl ExactPropagator {
    pub fn new(tb: &TruncatedBath, h: &HermitianOperator, s: &HermitianOperator, psi0: &Vector3<C64>, kbt: f64) -> Result<Self> {
        let n_b = tb.n_b;
        let weights = thermal_state(tb, kbt)?.weights;
        let id_b = CMatrix::identity(n_b, n_b);
        let id_s = CMatrix::identity(3, 3);
        let e_b = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(n_b, tb.evals.iter().map(|&e| c(e, 0.0))));
        let h_tot = kron(h.matrix(), &id_b) + kron(s.matrix(), tb.b().matrix()) + kron(&id_s, &e_b);
        let h_tot = HermitianOperator::symmetrized(&h_tot);
        let (energies, vecs) = eigh_sorted(h_tot.matrix());
        let dim = 3 * n_b;
        let mut init = CMatrix::zeros(dim, n_b);
        for i in 0..n_b {
            let w = weights[i].sqrt();
            for sidx in 0..3 {
                init[(sidx * n_b + i, i)] = psi0[sidx] * w;
            }
        }
        let coeffs = vecs.adjoint() * init;
        Ok(Self {
            n_b,
            energies,
            vecs,
            coeffs,
        })
    }

    /// ρ(t), computed directly at t.
    pub fn state_at(&self, t: f64) -> Mat3 {
        let mut phased = self.coeffs.clone();
        for (m, &e) in self.energies.iter().enumerate() {
            let ph = C64::from_polar(1.0, -e * t);
            for col in 0..self.n_b {
                phased[(m, col)] *= ph;
            }
        }
        let psi: CMatrix = &self.vecs * phased;
        let n_b = self.n_b;
        let mut rho = Mat3::zeros();
        for a in 0..3 {
            for b in a..3 {
                let mut acc = c(0.0, 0.0);
                for bath in 0..n_b {
                    let ra = psi.row(a * n_b + bath);
                    let rb = psi.row(b * n_b + bath);
                    for i in 0..n_b {
                        acc += ra[i] * rb[i].conj();
                    }
                }
                rho[(a, b)] = acc;
                rho[(b, a)] = acc.conj();
            }
        }
        for a in 0..3 {
            rho[(a, a)] = c(rho[(a, a)].re, 0.0);
        }
        rho
    }

    pub fn dim(&self) -> usize {
        3 * self.n_b
    }
}

pub fn exact_propagate(tb: &TruncatedBath, h: &HermitianOperator, s: &HermitianOperator, psi0: &Vector3<C64>, kbt: f64, tgrid: &[f64]) -> Result<Trajectory> {
    check_grid(tgrid)?;
    let prop = ExactPropagator::new(tb, h, s, psi0, kbt)?;
    let states = tgrid.iter().map(|&t| prop.state_at(t)).collect();
    Ok(Trajectory::finish(TrajectoryKind::Exact, tgrid.to_vec(), states, TrajectoryDiagnostics::default()))
}

/// Eigenbasis of H + 𝓑̄S (ascending) used for Π₀ and the populations.
pub fn shifted_eigenbasis(h: &Mat3, s: &Mat3, cal_bbar: f64) -> (Vector3<f64>, Mat3) {
    eigh3(&(h + s * c(cal_bbar, 0.0)))
}

/// ρ(∞) = (1 + κΠ₀𝓛)⁻¹ Π₀ρ(0) with 𝓛 = [S,[S,·]] and Π₀ the projection on
/// the diagonal in the eigenbasis of H + 𝓑̄S.
pub fn equilibrium_state(h: &Mat3, s: &Mat3, cal_bbar: f64, kappa: f64, rho0: &DensityMatrix) -> Result<DensityMatrix> {
    let (vals, u) = shifted_eigenbasis(h, s, cal_bbar);
    let scale = vals.iter().fold(1.0f64, |a, v| a.max(v.abs()));
    let gap = (vals[1] - vals[0]).min(vals[2] - vals[1]);
    if gap <= 1e-10 * scale {
        return Err(Error::DegenerateSpectrum(gap));
    }
    let ud = u.adjoint();
    let s_e = ud * s * u;
    let rho_e = ud * rho0.matrix() * u;
    let pi0 = |m: &Mat3| Mat3::from_diagonal(&m.diagonal());

    let mut a = SMatrix::<C64, 9, 9>::zeros();
    for col in 0..9 {
        let mut e = Mat3::zeros();
        e[(col / 3, col % 3)] = c(1.0, 0.0);
        let img = e + pi0(&double_commutator3(&s_e, &e)) * c(kappa, 0.0);
        for row in 0..9 {
            a[(row, col)] = img[(row / 3, row % 3)];
        }
    }
    let rhs_m = pi0(&rho_e);
    let rhs = SMatrix::<C64, 9, 1>::from_fn(|r, _| rhs_m[(r / 3, r % 3)]);
    let lu = a.lu();
    if lu.u().diagonal().iter().any(|d| d.norm() < 1e-14) {
        return Err(Error::Singular);
    }
    let x = lu.solve(&rhs).ok_or(Error::Singular)?;
    let x_e = Mat3::from_fn(|i, j| x[3 * i + j]);
    let lab = hermitian_part(&(u * x_e * ud));
    DensityMatrix::new(lab)
}

/// Π₀X in the lab frame.
pub fn project_pi0(h: &Mat3, s: &Mat3, cal_bbar: f64, x: &Mat3) -> Mat3 {
    let (_, u) = shifted_eigenbasis(h, s, cal_bbar);
    let ud = u.adjoint();
    let d = Mat3::from_diagonal(&(ud * x * u).diagonal());
    u * d * ud
}

/// Index of the H + 𝓑̄S eigenvector with the largest overlap with the
/// S_X = 0 eigenstate.
pub fn sx_zero_level(h: &Mat3, s: &Mat3, cal_bbar: f64) -> usize {
    let (_, u) = shifted_eigenbasis(h, s, cal_bbar);
    let z = sx_eigenvectors()[1];
    (0..3)
        .max_by(|&a, &b| {
            let oa = (u.column(a).adjoint() * z)[0].norm();
            let ob = (u.column(b).adjoint() * z)[0].norm();
            oa.total_cmp(&ob)
        })
        .unwrap()
}

/// Dense unitary e^{−iHt} for a 3×3 Hermitian H.
pub fn unitary3(h: &Mat3, t: f64) -> Mat3 {
    let (vals, u) = eigh3(h);
    let d = Mat3::from_diagonal(&Vector3::from_fn(|i, _| C64::from_polar(1.0, -vals[i] * t)));
    u * d * u.adjoint()
}

pub fn as_dmatrix(m: &Mat3) -> DMatrix<C64> {
    DMatrix::from_fn(3, 3, |i, j| m[(i, j)])
}
