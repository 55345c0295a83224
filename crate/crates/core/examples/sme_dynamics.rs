//! Integrate the SME for the reference kernel and print the spin means,
//! purity and smallest eigenvalue.
//!
//! `cargo run --release --example sme_dynamics -- [t_end]`

use nzme::dynamics::{integrate_sme, reference_initial_state, to_mat3, uniform_grid, DensityMatrix, SmeOptions};
use nzme::observables::compute_observables;
use nzme::sme_kernel::{SmeKernel, SmeParams};
use nzme::spin_model::{build_spin1_ops, build_system_hamiltonian, SystemParams};

fn main() -> nzme::Result<()> {
    let t_end = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200.0);
    let params = SystemParams::default();
    let h = to_mat3(&build_system_hamiltonian(&params))?;
    let s = to_mat3(&build_spin1_ops().sx)?;
    let kernel = SmeKernel::new(&SmeParams::new(45.9675, 46.4375, 21.6505, 106.1616, 1.1665e-3))?;
    let cal_bbar = 9.3276e-2;
    let rho0 = DensityMatrix::pure(&reference_initial_state())?;

    let grid = uniform_grid(t_end, 1.0)?;
    let traj = integrate_sme(&h, &s, cal_bbar, &kernel, &rho0, &grid, &SmeOptions::default())?;
    let obs = compute_observables(&traj, &h, &s, cal_bbar);
    println!("{:>7} {:>10} {:>10} {:>10} {:>10} {:>11}", "t", "Sx", "Sy", "Sz", "purity", "min_eig");
    for j in (0..obs.len()).step_by((obs.len() / 20).max(1)) {
        println!(
            "{:7.1} {:+10.6} {:+10.6} {:+10.6} {:10.6} {:+11.3e}",
            obs.times[j], obs.sx[j], obs.sy[j], obs.sz[j], obs.purity[j], obs.min_eig[j]
        );
    }
    let d = &traj.diagnostics;
    println!(
        "rhs evals {}, accepted {}, rejected {}, max trace error {:.2e}, max memory residue {:.2e}",
        d.rhs_evals, d.accepted_steps, d.rejected_steps, d.max_trace_error, d.max_memory_residue
    );
    Ok(())
}
