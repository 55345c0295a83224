//! Annealed kernel fits: a synthetic single exponential with known answer,
//! then the mean-field kernel of a small bath under a short schedule.
//!
//! `cargo run --release --example kernel_fit -- [n_spins] [max_evals]`

use std::time::Instant;

use nzme::bath_thermo::{thermal_state, truncate_bath, EigenOptions};
use nzme::kernel_fit::{fit_kernel, fit_single_exponential, FitProblem, KernelContext};
use nzme::rng::stream;
use nzme::sme_kernel::validate_constraints;
use nzme::spin_model::{SpinBathModel, SystemParams};

fn main() -> nzme::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_spins = args.first().and_then(|s| s.parse().ok()).unwrap_or(8);
    let max_evals = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(40_000);

    let mut p = FitProblem::default();
    let (b, c) = (0.35, 1.2e-3);
    let target: Vec<f64> = (0..=p.n_steps()).map(|m| c * (-b * m as f64 * p.grid_dt).exp()).collect();
    let s = fit_single_exponential(&target, &p)?;
    println!("synthetic: b = {:.6} (target {b}), c = {:.6e} (target {c:e}), {} evals", s.b, s.c, s.evals);

    let params = SystemParams {
        n_spins,
        ..SystemParams::default()
    };
    let model = SpinBathModel::build(&params, &mut stream(1, "lattice"))?;
    let tb = truncate_bath(&model.bath, 20.min(1 << n_spins), &EigenOptions::default())?;
    let rho = thermal_state(&tb, params.kbt)?;
    let ctx = KernelContext::new(&model, tb, rho);

    p.schedule.max_evals = max_evals;
    p.seed = 1;
    let start = Instant::now();
    let r = fit_kernel(&ctx, &p)?;
    println!(
        "fit: f* = {:.4e}, f*/int K1_mf^2 = {:.4e}, {} evals, converged {}, {:.1} s",
        r.f_star,
        r.relative_misfit(),
        r.evals,
        r.converged,
        start.elapsed().as_secs_f64()
    );
    println!("eta* = {:?}", r.eta);
    println!("SME: {:?}", r.sme);
    print!("{}", validate_constraints(&r.sme).to_text());
    Ok(())
}
