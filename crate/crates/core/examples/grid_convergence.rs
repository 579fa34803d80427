//! Second-order convergence of the discrete Laplacian and Fisher information
//! against analytic values.
//!
//! ```bash
//! cargo run --example grid_convergence
//! ```

use std::f64::consts::PI;

use rdlab::grid::{fisher_information, laplacian_neumann, Field, Grid1D};

fn main() -> rdlab::Result<()> {
    println!("{:>6} {:>14} {:>14}", "n", "Fisher err", "Laplacian err");
    let mut prev: Option<(f64, f64)> = None;
    for n in [25, 50, 100, 200, 400, 800] {
        let g = Grid1D::new(n)?;
        let f = Field::from_fn(&g, |x| (2.0 + (PI * x).cos()).powi(2));
        let fisher = (fisher_information(&g, &f, 1.0)? - 2.0 * PI * PI).abs();
        let c = Field::from_fn(&g, |x| (PI * x).cos());
        let lap = laplacian_neumann(&g, &c)?;
        let lerr = g
            .centers()
            .zip(lap.iter())
            .map(|(x, l)| (l + PI * PI * (PI * x).cos()).abs())
            .fold(0.0, f64::max);
        match prev {
            Some((pf, pl)) => println!(
                "{n:>6} {fisher:>14.4e} {lerr:>14.4e}   ratios {:.3} {:.3}",
                pf / fisher,
                pl / lerr
            ),
            None => println!("{n:>6} {fisher:>14.4e} {lerr:>14.4e}"),
        }
        prev = Some((fisher, lerr));
    }
    Ok(())
}
