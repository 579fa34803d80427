//! Ratio of squared distance to squared reaction defect along the curve of
//! homogeneous states with fixed masses.
//!
//! ```bash
//! cargo run --example homogeneous_scan
//! ```

use rdlab::ineqlab::{homogeneous_ratio, homogeneous_scan};
use rdlab::model::{MassPair, ReactionParams};

fn main() -> rdlab::Result<()> {
    let p = ReactionParams::new(1.0, 1.0, 1.0, [1.0; 3])?;
    let m = MassPair::new(2.0, 2.0)?;
    let scan = homogeneous_scan(&p, &m, 10001)?;
    println!("mu_c range        [-1, {:.12}]", scan.mu_max);
    println!("ratio at mu_c=-1  {:.12}", scan.lower_end);
    println!("ratio at mu_max   {:.12}", scan.upper_end);
    println!(
        "limit at 0        {:.12} (left {:.12}, right {:.12})",
        scan.central_limit, scan.central_limit_left, scan.central_limit_right
    );
    println!(
        "sup               {:.12} at {:?}",
        scan.report.constant_estimate, scan.report.argmax
    );

    println!("\n{:>8} {:>14}", "mu_c", "ratio");
    let e = scan.equilibrium;
    for i in 0..=10 {
        let mu = -1.0 + (scan.mu_max + 1.0) * i as f64 / 10.0;
        if mu.abs() > 1e-9 {
            println!("{mu:>8.4} {:>14.8}", homogeneous_ratio(&p, &e, mu));
        }
    }

    println!("\nsup over other configurations:");
    for ((a, b, c), (m1, m2)) in [
        ((2.0, 1.0, 1.0), (3.0, 2.0)),
        ((1.0, 2.0, 3.0), (4.0, 5.0)),
        ((2.0, 2.0, 2.0), (0.5, 10.0)),
    ] {
        let p = ReactionParams::new(a, b, c, [1.0; 3])?;
        let s = homogeneous_scan(&p, &MassPair::new(m1, m2)?, 10001)?;
        println!(
            "  ({a},{b},{c}) M=({m1},{m2}): {:.8}",
            s.report.constant_estimate
        );
    }
    Ok(())
}
