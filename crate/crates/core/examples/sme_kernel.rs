//! Reference SME kernel: derived quantities, constraint report and the
//! exponential-sum tabulation.
//!
//! `cargo run --release --example sme_kernel`

use nzme::sme_kernel::{complete_monotonicity_check, kappa, tabulate_sme, validate_constraints, SmeKernel, SmeParams};

fn main() -> nzme::Result<()> {
    let p = SmeParams::new(45.9675, 46.4375, 21.6505, 106.1616, 1.1665e-3);
    println!("V(0) = {:.6e}", p.v0());
    println!("lambda = {:.6e}", p.lambda());
    println!("lambda^2/4 - V(0) = {:.6e}", p.lambda().powi(2) / 4.0 - p.v0());
    println!("kappa = {:.6e}", kappa(&p)?);
    print!("{}", validate_constraints(&p).to_text());
    let times: Vec<f64> = (0..=600).map(|m| m as f64 * 0.05).collect();
    print!("{}", complete_monotonicity_check(&p, &times).to_text());

    let k = SmeKernel::new(&p)?;
    println!("roots: {:?}", k.roots);
    println!("{:>6} {:>16} {:>16} {:>14} {:>14}", "t", "K0_sme", "K1_sme", "V", "R");
    for row in tabulate_sme(&k, 0.5, 20) {
        println!("{:6.2} {:+16.8e} {:+16.8e} {:+14.6e} {:+14.6e}", row[0], row[1], row[2], row[3], row[4]);
    }
    Ok(())
}
