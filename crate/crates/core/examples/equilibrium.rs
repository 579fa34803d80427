//! Detailed-balance equilibria for a few stoichiometries and masses.
//!
//! ```bash
//! cargo run --example equilibrium
//! ```

use rdlab::model::{
    compute_equilibrium, equilibrium_residual, Equilibrium, MassPair, ReactionParams,
};

fn main() -> rdlab::Result<()> {
    let cases = [
        ((1.0, 1.0, 1.0), (2.0, 2.0)),
        ((1.0, 1.0, 1.0), (3.0, 2.0)),
        ((2.0, 1.0, 1.0), (2.0, 1.0)),
        ((1.0, 2.0, 3.0), (4.0, 5.0)),
        ((3.0, 3.0, 1.0), (1.0, 7.0)),
    ];
    println!("alpha beta gamma |   m1   m2 |      a_inf          b_inf          c_inf     | residual / bound");
    for ((a, b, c), (m1, m2)) in cases {
        let p = ReactionParams::new(a, b, c, [1.0; 3])?;
        let m = MassPair::new(m1, m2)?;
        let e = compute_equilibrium(&p, &m)?;
        let bound = Equilibrium::residual_bound(&p, &m);
        println!(
            "{a:>5} {b:>4} {c:>5} | {m1:>4} {m2:>4} | {:>14.10} {:>14.10} {:>14.10} | {:.1e} / {:.1e}",
            e.a_inf,
            e.b_inf,
            e.c_inf,
            equilibrium_residual(&e, &p),
            bound
        );
    }
    Ok(())
}
