//! Entropy, relative entropy, entropy dissipation and the Csiszár–Kullback
//! gap.
//!
//! All logarithms are taken of strictly positive arguments only; the values
//! at zero concentration are the continuous extensions of the integrands.

use crate::error::{invalid, Error, Result};
use crate::grid::{fisher_information, integrate, Field, Grid1D};
use crate::model::{stoich_pow, Equilibrium, ReactionParams};
use crate::solver::State;

/// Relative tolerance on the conservation laws accepted by [`ck_gap`].
pub const CK_CONSERVATION_TOL: f64 = 1e-10;

/// `x(ln x − 1)`, extended by 0 at `x = 0`.
#[inline]
pub fn entropy_density(x: f64) -> f64 {
    if x > 0.0 {
        x * (x.ln() - 1.0)
    } else {
        0.0
    }
}

/// `q(x, x∞) = x ln(x/x∞) − (x − x∞) ≥ 0`, extended by `x∞` at `x = 0`.
///
/// Close to equilibrium it is evaluated as `x∞·h(x/x∞ − 1)` with
/// `h(e) = (1+e)ln(1+e) − e` through `ln_1p`, which keeps full relative
/// accuracy where the direct formula cancels.
#[inline]
pub fn relative_entropy_density(x: f64, x_inf: f64) -> f64 {
    if !(x > 0.0) {
        return x_inf;
    }
    let e = (x - x_inf) / x_inf;
    let q = if e.abs() < 0.5 {
        x_inf * ((1.0 + e) * e.ln_1p() - e)
    } else {
        x * (x / x_inf).ln() - (x - x_inf)
    };
    // rounding may give −ε right at the minimum
    q.max(0.0)
}

/// `(a − b) ln(a/b)` with the continuous extensions: 0 when `a = b`,
/// `+∞` when exactly one of them vanishes.
#[inline]
pub fn reaction_dissipation_density(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else if a == 0.0 || b == 0.0 {
        f64::INFINITY
    } else {
        let diff = a - b;
        diff * (diff / b).ln_1p()
    }
}

/// `(a − b) ln(a/b) − 4(√a − √b)²`, nonnegative for all `a, b > 0`.
#[inline]
pub fn elementary_inequality_gap(a: f64, b: f64) -> f64 {
    let lhs = reaction_dissipation_density(a, b);
    let s = a.sqrt() + b.sqrt();
    let root_diff = (a - b) / s;
    lhs - 4.0 * root_diff * root_diff
}

/// `E = ∫ u(ln u − 1) + v(ln v − 1) + w(ln w − 1)`.
///
/// For rescaled systems with `α + β = γ` the `w` term carries the weight
/// [`ReactionParams::w_weight`]; use [`entropy_weighted`] for that case.
pub fn entropy(g: &Grid1D, s: &State) -> Result<f64> {
    entropy_weighted(g, s, 1.0)
}

pub fn entropy_weighted(g: &Grid1D, s: &State, w_weight: f64) -> Result<f64> {
    s.check(g)?;
    let sum_of = |f: &Field| f.iter().map(|&x| entropy_density(x)).sum::<f64>();
    Ok(g.dx() * (sum_of(&s.u) + sum_of(&s.v) + w_weight * sum_of(&s.w)))
}

fn check_equilibrium(e: &Equilibrium) -> Result<()> {
    for (name, x) in [("a_inf", e.a_inf), ("b_inf", e.b_inf), ("c_inf", e.c_inf)] {
        if !(x > 0.0) {
            return Err(invalid(
                name,
                format!("equilibrium component must be > 0, got {x}"),
            ));
        }
    }
    Ok(())
}

/// `∫ Σ q(x, x∞)` over the three species.
pub fn relative_entropy(g: &Grid1D, s: &State, e: &Equilibrium) -> Result<f64> {
    relative_entropy_weighted(g, s, e, 1.0)
}

pub fn relative_entropy_weighted(
    g: &Grid1D,
    s: &State,
    e: &Equilibrium,
    w_weight: f64,
) -> Result<f64> {
    s.check(g)?;
    check_equilibrium(e)?;
    let sum_of = |f: &Field, x_inf: f64| {
        f.iter()
            .map(|&x| relative_entropy_density(x, x_inf))
            .sum::<f64>()
    };
    Ok(g.dx() * (sum_of(&s.u, e.a_inf) + sum_of(&s.v, e.b_inf) + w_weight * sum_of(&s.w, e.c_inf)))
}

/// Breakdown of the entropy dissipation `D`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyReport {
    pub entropy: f64,
    /// `None` when no equilibrium was supplied.
    pub relative_entropy: Option<f64>,
    pub dissipation: f64,
    pub fisher_u: f64,
    pub fisher_v: f64,
    pub fisher_w: f64,
    /// `+∞` when some cell has exactly one of `u^α v^β`, `w^γ` equal to 0.
    pub reaction_term: f64,
}

impl EntropyReport {
    /// True when the reaction part of the dissipation is infinite.
    pub fn is_infinite(&self) -> bool {
        self.reaction_term.is_infinite()
    }
}

/// Reaction part `∫ (u^α v^β − w^γ) ln(u^α v^β / w^γ)`.
pub fn reaction_term(g: &Grid1D, p: &ReactionParams, s: &State) -> Result<f64> {
    s.check(g)?;
    let mut sum = 0.0;
    for i in 0..g.n_cells() {
        let a = stoich_pow(s.u[i], p.alpha) * stoich_pow(s.v[i], p.beta);
        let b = stoich_pow(s.w[i], p.gamma);
        sum += reaction_dissipation_density(a, b);
    }
    Ok(g.dx() * sum)
}

/// Entropy, dissipation and its four contributions.
pub fn dissipation(g: &Grid1D, p: &ReactionParams, s: &State) -> Result<EntropyReport> {
    s.check(g)?;
    let ww = p.w_weight();
    let fisher_u = fisher_information(g, &s.u, p.d1)?;
    let fisher_v = fisher_information(g, &s.v, p.d2)?;
    let fisher_w = ww * fisher_information(g, &s.w, p.d3)?;
    let reaction = reaction_term(g, p, s)?;
    Ok(EntropyReport {
        entropy: entropy_weighted(g, s, ww)?,
        relative_entropy: None,
        dissipation: fisher_u + fisher_v + fisher_w + reaction,
        fisher_u,
        fisher_v,
        fisher_w,
        reaction_term: reaction,
    })
}

/// [`dissipation`] plus the relative entropy against `e`.
pub fn entropy_report(
    g: &Grid1D,
    p: &ReactionParams,
    s: &State,
    e: &Equilibrium,
) -> Result<EntropyReport> {
    let mut r = dissipation(g, p, s)?;
    r.relative_entropy = Some(relative_entropy_weighted(g, s, e, p.w_weight())?);
    Ok(r)
}

/// `∫|x − x∞|`.
pub fn l1_distance(g: &Grid1D, f: &Field, x_inf: f64) -> Result<f64> {
    integrate(g, &f.map(|x| (x - x_inf).abs()))
}

/// Both sides of the Csiszár–Kullback type bound
/// `E − E∞ ≥ C (‖u−a∞‖₁² + ‖v−b∞‖₁² + ‖w−c∞‖₁²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkGap {
    pub lhs: f64,
    pub rhs: f64,
}

impl CkGap {
    /// `lhs / rhs`, `None` at equilibrium.
    pub fn ratio(&self) -> Option<f64> {
        (self.rhs > 0.0).then(|| self.lhs / self.rhs)
    }
}

/// Relative entropy and the sum of squared L¹ distances for a state on the
/// conservation manifold of `e`.
pub fn ck_gap(g: &Grid1D, p: &ReactionParams, s: &State, e: &Equilibrium) -> Result<CkGap> {
    s.check(g)?;
    check_equilibrium(e)?;
    let state_masses = s.masses(g, p)?;
    let eq_masses = p.masses_from_integrals(e.a_inf, e.b_inf, e.c_inf);
    let dev = eq_masses.relative_deviation(&state_masses);
    if !(dev <= CK_CONSERVATION_TOL) {
        return Err(Error::ConservationMismatch(format!(
            "state masses ({}, {}) vs equilibrium masses ({}, {}), relative deviation {dev:e}",
            state_masses.m1, state_masses.m2, eq_masses.m1, eq_masses.m2
        )));
    }
    let lu = l1_distance(g, &s.u, e.a_inf)?;
    let lv = l1_distance(g, &s.v, e.b_inf)?;
    let lw = l1_distance(g, &s.w, e.c_inf)?;
    Ok(CkGap {
        lhs: relative_entropy_weighted(g, s, e, p.w_weight())?,
        rhs: lu * lu + lv * lv + lw * lw,
    })
}

/// Classical Csiszár–Kullback–Pinsker check for one species:
/// returns `(∫ f ln(f/f̄), ‖f − f̄‖₁² / (2 f̄))`.
pub fn ckp_sides(g: &Grid1D, f: &Field) -> Result<(f64, f64)> {
    let mean = integrate(g, f)?;
    if !(mean > 0.0) {
        return Err(invalid("field", "mean must be positive"));
    }
    // ∫ f ln(f/f̄) = ∫ q(f, f̄) because ∫ (f − f̄) = 0
    let kl = integrate(g, &f.map(|x| relative_entropy_density(x, mean)))?;
    let l1 = l1_distance(g, f, mean)?;
    Ok((kl, l1 * l1 / (2.0 * mean)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{compute_equilibrium, MassPair};
    use std::f64::consts::E;

    fn grid(n: usize) -> Grid1D {
        Grid1D::new(n).unwrap()
    }

    fn homogeneous(g: &Grid1D, u: f64, v: f64, w: f64) -> State {
        State::homogeneous(g, u, v, w)
    }

    fn unit_eq() -> Equilibrium {
        Equilibrium {
            a_inf: 1.0,
            b_inf: 1.0,
            c_inf: 1.0,
            residual: 0.0,
        }
    }

    fn p111() -> ReactionParams {
        ReactionParams::new(1.0, 1.0, 1.0, [1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn entropy_examples() {
        let g = grid(8);
        assert!((entropy(&g, &homogeneous(&g, 1.0, 1.0, 1.0)).unwrap() + 3.0).abs() < 1e-14);
        assert!((entropy(&g, &homogeneous(&g, E, 1.0, 1.0)).unwrap() + 2.0).abs() < 1e-14);
        assert_eq!(entropy(&g, &homogeneous(&g, 0.0, 0.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn relative_entropy_examples() {
        let g = grid(5);
        let e = unit_eq();
        assert_eq!(
            relative_entropy(&g, &homogeneous(&g, 1.0, 1.0, 1.0), &e).unwrap(),
            0.0
        );
        let r = relative_entropy(&g, &homogeneous(&g, 2.0 * E, 1.0, 1.0), &e).unwrap();
        assert!((r - (2.0 * E * 2f64.ln() + 1.0)).abs() < 1e-13);
        assert!((r - 4.768_338_770_727_44).abs() < 1e-12);
        // vacuum: q(0, x∞) = x∞
        let r0 = relative_entropy(&g, &homogeneous(&g, 0.0, 1.0, 1.0), &e).unwrap();
        assert!((r0 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_rejects_zero_equilibrium() {
        let g = grid(3);
        let mut e = unit_eq();
        e.b_inf = 0.0;
        assert!(relative_entropy(&g, &homogeneous(&g, 1.0, 1.0, 1.0), &e).is_err());
    }

    #[test]
    fn relative_entropy_splits_into_fluctuation_and_mean_parts() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let g = grid(37);
        let e = Equilibrium {
            a_inf: 0.7,
            b_inf: 1.3,
            c_inf: 0.4,
            residual: 0.0,
        };
        for _ in 0..50 {
            let mut fld = || Field::new((0..37).map(|_| rng.gen_range(0.01..3.0)).collect());
            let s = State::new(0.0, fld(), fld(), fld());
            let total = relative_entropy(&g, &s, &e).unwrap();
            let mut split = 0.0;
            for (f, x_inf) in [(&s.u, e.a_inf), (&s.v, e.b_inf), (&s.w, e.c_inf)] {
                let mean = integrate(&g, f).unwrap();
                split += g.dx() * f.iter().map(|&x| x * (x / mean).ln()).sum::<f64>();
                split += mean * (mean / x_inf).ln() - (mean - x_inf);
            }
            assert!(
                (total - split).abs() <= 1e-12 * total.max(1.0),
                "{total} vs {split}"
            );
        }
    }

    #[test]
    fn dissipation_at_balance_is_zero() {
        let g = grid(6);
        for (a, b, c) in [(1.0, 1.0, 1.0), (2.0, 3.0, 1.5)] {
            let p = ReactionParams::new(a, b, c, [1.0, 2.0, 3.0]).unwrap();
            let r = dissipation(&g, &p, &homogeneous(&g, 1.0, 1.0, 1.0)).unwrap();
            assert_eq!(r.dissipation, 0.0);
        }
    }

    #[test]
    fn dissipation_homogeneous_reaction_only() {
        let g = grid(4);
        let r = dissipation(&g, &p111(), &homogeneous(&g, 1.0, 1.0, E)).unwrap();
        assert!((r.reaction_term - (E - 1.0)).abs() < 1e-14);
        assert_eq!(r.fisher_u + r.fisher_v + r.fisher_w, 0.0);
        assert!((r.dissipation - 1.718_281_828_459_045).abs() < 1e-14);
    }

    #[test]
    fn dissipation_fisher_only_on_balanced_profile() {
        // u = (1+x)², v = 1, w = u keeps u v = w pointwise
        let g = grid(400);
        let u = Field::from_fn(&g, |x| (1.0 + x) * (1.0 + x));
        let s = State::new(0.0, u.clone(), Field::constant(&g, 1.0), u);
        let p = ReactionParams::new(1.0, 1.0, 1.0, [1.0, 1.0, 1.0]).unwrap();
        let r = dissipation(&g, &p, &s).unwrap();
        assert_eq!(r.reaction_term, 0.0);
        assert!((r.fisher_u - 4.0).abs() <= 4.0 * g.dx() + 1e-10);
        assert_eq!(r.fisher_v, 0.0);
        assert!((r.dissipation - r.fisher_u - r.fisher_w).abs() < 1e-12);
    }

    #[test]
    fn dissipation_infinite_when_w_vanishes() {
        let g = grid(4);
        let r = dissipation(&g, &p111(), &homogeneous(&g, 2.0, 2.0, 0.0)).unwrap();
        assert!(r.is_infinite());
        assert_eq!(r.dissipation, f64::INFINITY);
        // both sides zero: no reaction dissipation
        let r = dissipation(&g, &p111(), &homogeneous(&g, 0.0, 2.0, 0.0)).unwrap();
        assert_eq!(r.reaction_term, 0.0);
    }

    #[test]
    fn ck_gap_at_equilibrium() {
        let g = grid(10);
        let gap = ck_gap(&g, &p111(), &homogeneous(&g, 1.0, 1.0, 1.0), &unit_eq()).unwrap();
        assert_eq!(gap, CkGap { lhs: 0.0, rhs: 0.0 });
        assert_eq!(gap.ratio(), None);
    }

    #[test]
    fn ck_gap_rejects_off_manifold_state() {
        let g = grid(10);
        let err = ck_gap(&g, &p111(), &homogeneous(&g, 1.1, 1.0, 1.0), &unit_eq()).unwrap_err();
        assert!(matches!(err, Error::ConservationMismatch(_)));
    }

    #[test]
    fn ck_gap_homogeneous_perturbation_by_hand() {
        // M = (2, 2): moving δ from c to a and b keeps both masses
        let g = grid(3);
        let p = p111();
        let e = compute_equilibrium(&p, &MassPair::new(2.0, 2.0).unwrap()).unwrap();
        let d = 0.25;
        let s = homogeneous(&g, 1.0 + d, 1.0 + d, 1.0 - d);
        let gap = ck_gap(&g, &p, &s, &e).unwrap();
        let q = |x: f64| x * x.ln() - (x - 1.0);
        assert!((gap.lhs - (2.0 * q(1.0 + d) + q(1.0 - d))).abs() < 1e-14);
        assert!((gap.rhs - 3.0 * d * d).abs() < 1e-14);
        // Taylor form q(1+δ) ≈ δ²/2 gives a ratio near 1/2
        assert!((gap.ratio().unwrap() - 0.5).abs() < 0.02);
    }

    #[test]
    fn ckp_sides_hold_on_two_level_field() {
        let g = grid(10);
        let f = Field::new((0..10).map(|i| if i < 5 { 0.5 } else { 1.5 }).collect());
        let (kl, bound) = ckp_sides(&g, &f).unwrap();
        assert!(kl >= bound);
        assert!((bound - 0.125).abs() < 1e-15);
    }

    #[test]
    fn entropy_is_additive_over_half_domains() {
        let half = grid(10);
        let full = grid(20);
        let profile: Vec<f64> = (0..10).map(|i| 0.3 + 0.2 * i as f64).collect();
        let s_half = State::new(
            0.0,
            Field::new(profile.clone()),
            Field::new(profile.iter().map(|x| 2.0 - 0.5 * x).collect()),
            Field::new(profile.iter().map(|x| x * x).collect()),
        );
        let double = |f: &Field| Field::new(f.iter().chain(f.iter()).copied().collect());
        let s_full = State::new(0.0, double(&s_half.u), double(&s_half.v), double(&s_half.w));
        let eh = entropy(&half, &s_half).unwrap();
        let ef = entropy(&full, &s_full).unwrap();
        assert!((eh - ef).abs() < 1e-14);
    }

    #[test]
    fn densities_are_continuous_at_the_limits() {
        assert_eq!(entropy_density(0.0), 0.0);
        assert!(entropy_density(1e-300).abs() < 1e-296);
        assert_eq!(relative_entropy_density(0.0, 2.0), 2.0);
        assert!((relative_entropy_density(1e-300, 2.0) - 2.0).abs() < 1e-290);
        assert_eq!(relative_entropy_density(3.0, 3.0), 0.0);
        // near equilibrium the density is ≈ (x − x∞)²/(2x∞) with full accuracy
        let d = relative_entropy_density(1.0 + 1e-7, 1.0);
        assert!((d / 0.5e-14 - 1.0).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn elementary_inequality(la in -15.0f64..15.0, lb in -15.0f64..15.0) {
                let (a, b) = (la.exp(), lb.exp());
                prop_assert!(elementary_inequality_gap(a, b) >= 0.0);
            }

            #[test]
            fn relative_entropy_nonnegative(
                f in proptest::collection::vec(0.0f64..5.0, 3 * 12),
                a in 0.1f64..3.0, b in 0.1f64..3.0, c in 0.1f64..3.0,
            ) {
                let g = Grid1D::new(12).unwrap();
                let s = State::new(
                    0.0,
                    Field::new(f[..12].to_vec()),
                    Field::new(f[12..24].to_vec()),
                    Field::new(f[24..].to_vec()),
                );
                let e = Equilibrium { a_inf: a, b_inf: b, c_inf: c, residual: 0.0 };
                prop_assert!(relative_entropy(&g, &s, &e).unwrap() >= 0.0);
                let p = ReactionParams::new(1.0, 2.0, 1.0, [0.5, 1.0, 2.0]).unwrap();
                let r = dissipation(&g, &p, &s).unwrap();
                prop_assert!(r.fisher_u >= 0.0 && r.fisher_v >= 0.0 && r.fisher_w >= 0.0);
                prop_assert!(r.reaction_term >= 0.0);
            }
        }
    }
}
