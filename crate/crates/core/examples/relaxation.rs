//! Relaxation of a cosine bump towards equilibrium, with the decay rates of
//! the relative entropy and the L¹ distance.
//!
//! ```bash
//! cargo run --release --example relaxation [trajectory.csv]
//! ```

use std::fs::File;
use std::io::BufWriter;

use rdlab::cli::{fit_rate, write_csv};
use rdlab::grid::{Field, Grid1D};
use rdlab::ineqlab::estimate_k_trajectory;
use rdlab::model::ReactionParams;
use rdlab::solver::{run, State, StepConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = ReactionParams::new(1.0, 1.0, 1.0, [1.0, 2.0, 3.0])?;
    let g = Grid1D::new(200)?;
    let u = Field::from_fn(&g, |x| 2.0 * (1.0 - (2.0 * std::f64::consts::PI * x).cos()));
    let s0 = State::new(0.0, u, Field::constant(&g, 2.0), Field::constant(&g, 0.0));
    let cfg = StepConfig {
        t_end: 20.0,
        record_every: 10,
        ..StepConfig::default()
    };
    let traj = run(&p, &g, &s0, &cfg)?;

    println!("{:>6} {:>12} {:>12} {:>12}", "t", "E_rel", "D", "L1");
    for d in traj.diagnostics().step_by(50).take(12) {
        println!(
            "{:>6.2} {:>12.4e} {:>12.4e} {:>12.4e}",
            d.t,
            d.relative_entropy,
            d.dissipation,
            d.l1_total()
        );
    }

    let fit = fit_rate(&traj.series(|d| d.relative_entropy))?;
    let k = estimate_k_trajectory(&traj)?;
    println!("equilibrium        {:?}", traj.equilibrium.components());
    println!(
        "E_rel decay rate   {:.6} (r² = {:.8})",
        fit.rate, fit.r_squared
    );
    println!("min D / E_rel      {:.6} at {:?}", k.min_ratio, k.argmin);
    println!(
        "steps              {} accepted, {} rejected, smallest dt {:e}",
        traj.stats.accepted, traj.stats.rejected, traj.stats.smallest_dt
    );
    println!("max mass deviation {:e}", traj.stats.max_mass_deviation);

    if let Some(path) = std::env::args().nth(1) {
        write_csv(&traj, &mut BufWriter::new(File::create(&path)?))?;
        println!("wrote {path}");
    }
    Ok(())
}
