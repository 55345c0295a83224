//! Every CLI stage on a small configuration: build-model, fit, validate-kernel,
//! simulate both propagators, compare and equilibrium.
//!
//! `cargo run --release --example pipeline -- [out_dir]`

use nzme::cli_io::{
    cmd_build_model, cmd_compare, cmd_equilibrium, cmd_fit, cmd_simulate, cmd_validate_kernel, RunConfig, Which,
};

const CONFIG: &str = r#"
[model]
n_spins = 8

[bath]
n_B = 20

[fit]
schedule = { max_evals = 30000 }

[sim]
t_end = 200.0
output_dt = 0.5

[io]
seed = 7
"#;

fn main() -> nzme::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "target/pipeline_run".into());
    let cfg = RunConfig::from_toml_str(CONFIG)?.with_overrides(Some(out.into()), None);
    println!("{}", cmd_build_model(&cfg)?);
    println!("{}", cmd_fit(&cfg)?);
    print!("{}", cmd_validate_kernel(&cfg)?);
    print!("{}", cmd_simulate(&cfg, Which::Both)?);
    print!("{}", cmd_compare(&cfg)?);
    print!("{}", cmd_equilibrium(&cfg)?);
    println!("artifacts in {}", cfg.io.out.display());
    Ok(())
}
