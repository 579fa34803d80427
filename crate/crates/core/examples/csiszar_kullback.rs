//! Relative entropy against squared L¹ distance on random admissible states,
//! and the classical per-species Pinsker bound.
//!
//! ```bash
//! cargo run --release --example csiszar_kullback
//! ```

use rdlab::grid::Grid1D;
use rdlab::ineqlab::{verify_ck, SamplerConfig};
use rdlab::model::{MassPair, ReactionParams};

fn main() -> rdlab::Result<()> {
    let g = Grid1D::new(32)?;
    for ((a, b, c), (m1, m2)) in [
        ((1.0, 1.0, 1.0), (2.0, 2.0)),
        ((2.0, 1.0, 1.0), (3.0, 2.0)),
        ((1.0, 2.0, 3.0), (4.0, 5.0)),
    ] {
        let p = ReactionParams::new(a, b, c, [1.0; 3])?;
        let rep = verify_ck(
            &p,
            &MassPair::new(m1, m2)?,
            &g,
            1000,
            11,
            &SamplerConfig::default(),
        )?;
        println!(
            "({a},{b},{c}) M=({m1},{m2}): C ≈ {:.6}  pinsker {} / {} violated, min margin {:.3e}",
            rep.report.min_ratio, rep.ckp_violations, rep.ckp_checked, rep.ckp_min_margin
        );
    }
    Ok(())
}
