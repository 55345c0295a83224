//! Diagonalize a random impurity bath and print its lowest levels and moments.
//!
//! `cargo run --release --example bath_spectrum -- [n_spins] [n_B] [seed]`

use std::time::Instant;

use nzme::bath_thermo::{bath_moments, build_lambda, thermal_state, truncate_bath, EigenOptions};
use nzme::rng::stream;
use nzme::spin_model::{SpinBathModel, SystemParams};

fn main() -> nzme::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let n_spins = args.first().and_then(|s| s.parse().ok()).unwrap_or(12);
    let n_b = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let seed = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1);

    let params = SystemParams {
        n_spins,
        ..SystemParams::default()
    };
    let model = SpinBathModel::build(&params, &mut stream(seed, "lattice"))?;
    println!("bath dimension 2^{n_spins} = {}", 1usize << n_spins);

    let start = Instant::now();
    let tb = truncate_bath(&model.bath, n_b, &EigenOptions::default())?;
    println!(
        "{} solver, n_B = {}, residual {:.2e}, {:.1} s",
        tb.solver,
        tb.n_b,
        tb.max_residual,
        start.elapsed().as_secs_f64()
    );
    for (i, e) in tb.evals.iter().enumerate() {
        println!("  e[{i:2}] = {e:+.9e}");
    }

    let rho = thermal_state(&tb, params.kbt)?;
    let lambda = build_lambda(&tb, &rho, &[0.0; 10]);
    for (k, v) in bath_moments(&tb, &rho, &lambda).report_lines() {
        println!("{k:>18} = {v:+.6e}");
    }
    Ok(())
}
