//! Empirical entropy–entropy-dissipation constant `min D/(E − E∞)` over
//! random admissible states, with and without spatial structure.
//!
//! ```bash
//! cargo run --release --example eed_constant [samples] [threads]
//! ```

use rdlab::grid::Grid1D;
use rdlab::ineqlab::{estimate_k_eed, SamplerConfig};
use rdlab::model::{MassPair, ReactionParams};

fn main() -> rdlab::Result<()> {
    let mut args = std::env::args().skip(1);
    let samples = args.next().and_then(|s| s.parse().ok()).unwrap_or(1000);
    let threads = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);
    let g = Grid1D::new(32)?;
    for d in [[1.0, 1.0, 1.0], [0.1, 1.0, 10.0], [0.01, 0.01, 0.01]] {
        let p = ReactionParams::new(1.0, 1.0, 1.0, d)?;
        let m = MassPair::new(2.0, 2.0)?;
        for homogeneous in [false, true] {
            let cfg = SamplerConfig {
                homogeneous,
                threads,
                ..SamplerConfig::default()
            };
            let rep = estimate_k_eed(&p, &m, &g, samples, 7, &cfg)?;
            println!(
                "d = {d:?} {:<13} K ≈ {:.6} (min at {:?}, {} samples)",
                if homogeneous {
                    "homogeneous"
                } else {
                    "inhomogeneous"
                },
                rep.min_ratio,
                rep.argmin,
                rep.n_samples
            );
        }
    }
    Ok(())
}
