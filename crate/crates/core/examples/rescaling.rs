//! Nondimensionalisation of physical rates, for both the `α + β ≠ γ` and the
//! `α + β = γ` branches, and the inverse map.
//!
//! ```bash
//! cargo run --example rescaling
//! ```

use rdlab::model::{rescale_params, ReactionParams};

fn main() -> rdlab::Result<()> {
    for ((a, b, c), (ell, k)) in [
        ((1.0, 1.0, 1.0), (4.0, 2.0)),
        ((2.0, 1.0, 1.0), (3.0, 0.5)),
        ((1.0, 2.0, 3.0), (8.0, 1.0)),
    ] {
        let p = ReactionParams::new(a, b, c, [1.0, 2.0, 3.0])?.with_rates(ell, k)?;
        let r = rescale_params(&p, 1.0)?;
        println!("({a},{b},{c}) ell={ell} k={k}");
        println!(
            "  time x{}  concentration x{}  w x{}  balanced order: {}",
            r.time_factor,
            r.concentration_factor,
            r.w_concentration_factor(),
            r.is_balanced_order()
        );
        println!(
            "  rescaled d = ({}, {}, {}), w equation factor {}",
            r.rescaled.d1, r.rescaled.d2, r.rescaled.d3, r.rescaled.w_scale
        );
        let back = r.original_params();
        println!("  recovered ell={} k={}", back.ell, back.k);
    }
    Ok(())
}
