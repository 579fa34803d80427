//! Margin `(b − a)/(a + b)` of the improved duality estimate for pairs of
//! diffusivities.
//!
//! ```bash
//! cargo run --example duality_margin
//! ```

use rdlab::ineqlab::duality_margin;

fn main() -> rdlab::Result<()> {
    for (a, b) in [
        (1.0, 1.0),
        (1.0, 3.0),
        (0.5, 2.0),
        (1.0, 100.0),
        (1e-3, 1e3),
    ] {
        let m = duality_margin(a, b)?;
        println!("d = ({a}, {b}): margin {m:.6}, room {:.6}", 1.0 - m);
    }
    Ok(())
}
