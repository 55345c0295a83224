//! Relaxation function W(α, β, t) and the mean-field kernels of a small bath.
//!
//! `cargo run --release --example meanfield_kernel -- [n_spins]`

use nzme::bath_thermo::{thermal_state, truncate_bath, EigenOptions};
use nzme::kernel_fit::KernelContext;
use nzme::meanfield_kernel::{bessel::bessel_j1, eval_k0_mf, eval_k1_mf, eval_w};
use nzme::rng::stream;
use nzme::spin_model::{SpinBathModel, SystemParams};

fn main() -> nzme::Result<()> {
    let n_spins = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(8);

    println!("W(0, 1.5, t) against 2 J1(1.5 t)/(1.5 t):");
    for &t in &[0.5, 1.0, 5.0, 20.0] {
        let closed = 2.0 * bessel_j1(1.5 * t) / (1.5 * t);
        println!("  t={t:5.1}  W={:+.12e}  closed form={closed:+.12e}", eval_w(0.0, 1.5, t)?);
    }
    for &(a, b) in &[(1.1953, 1.7843), (1.4111, 1.4259)] {
        let row: Vec<String> = [0.0, 1.0, 5.0, 20.0].iter().map(|&t| eval_w(a, b, t).map(|w| format!("{w:+.6e}"))).collect::<nzme::Result<_>>()?;
        println!("W({a}, {b}, t) at t = 0, 1, 5, 20: {}", row.join(" "));
    }

    let params = SystemParams {
        n_spins,
        ..SystemParams::default()
    };
    let model = SpinBathModel::build(&params, &mut stream(1, "lattice"))?;
    let tb = truncate_bath(&model.bath, 20.min(1 << n_spins), &EigenOptions::default())?;
    let rho = thermal_state(&tb, params.kbt)?;
    let ctx = KernelContext::new(&model, tb, rho);
    println!("double-commutator means: {:?}", ctx.dc);

    let mf = ctx.mean_field(&[0.0; 10])?;
    for (k, ch) in mf.channels.channels.iter().enumerate() {
        println!("channel {}: alpha = {:+.6e}, beta = {:+.6e}", k + 1, ch.mf_alpha, ch.mf_beta);
    }
    println!("K1(0) = calB2 - calBbar^2 = {:.6e}", mf.k1_at_zero());
    println!("{:>6} {:>16} {:>16}", "t", "K0_mf", "K1_mf");
    for t in [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 30.0] {
        println!("{t:6.1} {:+16.8e} {:+16.8e}", eval_k0_mf(&mf, t)?, eval_k1_mf(&mf, t)?);
    }
    Ok(())
}
