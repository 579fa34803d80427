//! Pointwise check of `(a − b) ln(a/b) ≥ 4(√a − √b)²` on log-uniform pairs.
//!
//! ```bash
//! cargo run --release --example elementary_inequality
//! ```

use rdlab::ineqlab::check_elementary_inequality;

fn main() {
    let rep = check_elementary_inequality(100_000, 1);
    println!(
        "{} pairs, {} violations, smallest relative gap {:.3e}",
        rep.checked, rep.violations, rep.min_relative_gap
    );
}
