//! Square-root distance estimate: given `K₁`, the smallest `K₂` with
//! `Σ‖√x − √x∞‖² ≤ K₁‖W^γ − U^αV^β‖² + K₂ Σ‖√x − mean √x‖²` on samples.
//!
//! ```bash
//! cargo run --release --example sqrt_distance
//! ```

use rdlab::grid::Grid1D;
use rdlab::ineqlab::{homogeneous_scan, verify_sqrt_distance, SamplerConfig};
use rdlab::model::{MassPair, ReactionParams};

fn main() -> rdlab::Result<()> {
    let p = ReactionParams::new(1.0, 1.0, 1.0, [1.0; 3])?;
    let m = MassPair::new(2.0, 2.0)?;
    let g = Grid1D::new(32)?;
    let base = homogeneous_scan(&p, &m, 10001)?.report.constant_estimate;
    println!("homogeneous constant {base:.6}");
    for factor in [1.0, 2.0, 5.0, 20.0] {
        let k1 = factor * base;
        let rep = verify_sqrt_distance(&p, &m, &g, 1000, k1, 4242, &SamplerConfig::default())?;
        println!(
            "K1 = {k1:>9.5}  ->  K2 = {:.6}  (uncovered homogeneous samples: {})",
            rep.k2, rep.uncovered
        );
    }
    Ok(())
}
