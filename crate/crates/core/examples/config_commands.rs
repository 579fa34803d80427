//! Drive the command layer from configuration text, as the `rdlab` binary
//! does, and read the CSV back.
//!
//! ```bash
//! cargo run --release --example config_commands
//! ```

use rdlab::cli::{
    cmd_equilibrium, cmd_fit_rate, cmd_homogeneous_scan, cmd_simulate, cmd_validate, parse_config,
    read_csv,
};

const CONFIG: &str = "
# relaxation from two blocks with a slow third species
alpha = 2
d1 = 1
d2 = 0.5
d3 = 0.1
n = 64
t_end = 15
u0 = two-blocks 0.5 3
v0 = homogeneous 1
w0 = homogeneous 0.2
record_every = 20
n_grid = 2001
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = parse_config(CONFIG)?;
    println!("{}", cmd_equilibrium(&cfg)?.summary);
    println!("{}", cmd_homogeneous_scan(&cfg)?.summary);

    let mut csv = Vec::new();
    let (_, summary) = cmd_simulate(&cfg, &mut csv)?;
    println!("simulate: {summary}");
    let table = read_csv(csv.as_slice())?;
    println!("{}", cmd_validate(&table, 1e-11)?.summary);
    let fit = cmd_fit_rate(&table, "E_rel", 0.999)?;
    print!("{}", fit.report);
    println!("{}", fit.summary);
    Ok(())
}
