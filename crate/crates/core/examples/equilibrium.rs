//! Long-time limit of the SME: ρ(∞), its Π₀ residual and insensitivity to
//! the off-diagonal part of ρ(0).
//!
//! `cargo run --release --example equilibrium`

use nzme::dynamics::{equilibrium_state, project_pi0, reference_initial_state, shifted_eigenbasis, to_mat3, DensityMatrix};
use nzme::operator::c;
use nzme::sme_kernel::{kappa, SmeParams};
use nzme::spin_model::{build_spin1_ops, build_system_hamiltonian, SystemParams};

fn main() -> nzme::Result<()> {
    let params = SystemParams::default();
    let h = to_mat3(&build_system_hamiltonian(&params))?;
    let s = to_mat3(&build_spin1_ops().sx)?;
    let cal_bbar = 9.3276e-2;
    let kap = kappa(&SmeParams::new(45.9675, 46.4375, 21.6505, 106.1616, 1.1665e-3))?;
    let rho0 = DensityMatrix::pure(&reference_initial_state())?;

    let rho_inf = equilibrium_state(&h, &s, cal_bbar, kap, &rho0)?;
    let m = rho_inf.matrix();
    let residual = (project_pi0(&h, &s, cal_bbar, m) - m).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    println!("kappa = {kap:.6e}");
    println!("rho(inf) = {m:.6}");
    println!("max |Pi0 rho - rho| = {residual:.2e}");

    // Add a Hermitian off-diagonal perturbation in the shifted eigenbasis.
    let (_, u) = shifted_eigenbasis(&h, &s, cal_bbar);
    let mut e = u.adjoint() * rho0.matrix() * u;
    e[(0, 2)] += c(0.01, 0.02);
    e[(2, 0)] += c(0.01, -0.02);
    let perturbed = DensityMatrix::new(u * e * u.adjoint())?;
    let rho_p = equilibrium_state(&h, &s, cal_bbar, kap, &perturbed)?;
    let shift = (rho_p.matrix() - m).iter().fold(0.0f64, |a, z| a.max(z.norm()));
    println!("max change from off-diagonal perturbation = {shift:.2e}");
    Ok(())
}
