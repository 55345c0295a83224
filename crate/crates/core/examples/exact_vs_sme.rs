//! Exact truncated-bath dynamics against the SME for a small bath, with the
//! comparison report.
//!
//! `cargo run --release --example exact_vs_sme -- [n_spins] [t_end]`

use nzme::bath_thermo::{thermal_state, truncate_bath, EigenOptions};
use nzme::dynamics::{exact_propagate, integrate_sme, reference_initial_state, to_mat3, uniform_grid, DensityMatrix, SmeOptions};
use nzme::kernel_fit::KernelContext;
use nzme::observables::{compare, compute_observables};
use nzme::rng::stream;
use nzme::sme_kernel::{SmeKernel, SmeParams};
use nzme::spin_model::{SpinBathModel, SystemParams};

fn main() -> nzme::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_spins = args.first().and_then(|s| s.parse().ok()).unwrap_or(8);
    let t_end = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(300.0);

    let params = SystemParams {
        n_spins,
        ..SystemParams::default()
    };
    let model = SpinBathModel::build(&params, &mut stream(1, "lattice"))?;
    let tb = truncate_bath(&model.bath, 20.min(1 << n_spins), &EigenOptions::default())?;
    let rho_b = thermal_state(&tb, params.kbt)?;
    let ctx = KernelContext::new(&model, tb.clone(), rho_b);
    let cal_bbar = ctx.moments(&[]).cal_bbar;

    let h = to_mat3(&model.h_sys)?;
    let s = to_mat3(model.coupling_operator())?;
    let psi0 = reference_initial_state();
    let grid = uniform_grid(t_end, 0.5)?;

    let exact = exact_propagate(&tb, &model.h_sys, model.coupling_operator(), &psi0, params.kbt, &grid)?;
    let kernel = SmeKernel::new(&SmeParams::new(45.9675, 46.4375, 21.6505, 106.1616, 1.1665e-3))?;
    let sme = integrate_sme(&h, &s, cal_bbar, &kernel, &DensityMatrix::pure(&psi0)?, &grid, &SmeOptions::default())?;

    let a = compute_observables(&exact, &h, &s, cal_bbar);
    let b = compute_observables(&sme, &h, &s, cal_bbar);
    let n = a.len() - 1;
    println!("final purity: exact {:.6}, sme {:.6}", a.purity[n], b.purity[n]);
    println!("final populations exact {:?}", a.rho_diag[n]);
    println!("final populations sme   {:?}", b.rho_diag[n]);
    print!("{}", compare(&a, &b)?.to_text());
    Ok(())
}
