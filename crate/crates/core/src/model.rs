//! Reaction parameters, nondimensionalization, conserved masses and the
//! detailed-balance equilibrium of `αU + βV ⇌ γW`.

use crate::error::{invalid, Error, Result};

/// Largest integer exponent evaluated by repeated multiplication.
const MAX_INTEGER_POWER: f64 = 16.0;

/// `x^e` for a stoichiometric exponent `e ≥ 1` and `x ≥ 0`.
///
/// Small integer exponents use repeated multiplication; everything else goes
/// through `exp(e ln x)`.
#[inline]
pub fn stoich_pow(x: f64, e: f64) -> f64 {
    if e.fract() == 0.0 && e <= MAX_INTEGER_POWER {
        let mut acc = 1.0;
        for _ in 0..e as u32 {
            acc *= x;
        }
        acc
    } else if x == 0.0 {
        0.0
    } else {
        (e * x.ln()).exp()
    }
}

/// Stoichiometry, reaction rates and diffusivities of the system
///
/// ```text
/// u_t - d1 Δu = -α R
/// v_t - d2 Δv = -β R
/// w_t - d3 Δw =  γ s R,      R = ℓ u^α v^β - k w^γ
/// ```
///
/// with `s = w_scale` (1 except for rescaled systems with `α + β = γ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReactionParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub ell: f64,
    pub k: f64,
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
    /// Multiplier on the reaction term of the `w` equation.
    pub w_scale: f64,
}

impl ReactionParams {
    /// Rescaled parameters (`ℓ = k = 1`) with the given stoichiometry and
    /// diffusivities.
    pub fn new(alpha: f64, beta: f64, gamma: f64, d: [f64; 3]) -> Result<Self> {
        let p = Self {
            alpha,
            beta,
            gamma,
            ell: 1.0,
            k: 1.0,
            d1: d[0],
            d2: d[1],
            d3: d[2],
            w_scale: 1.0,
        };
        p.validate()?;
        Ok(p)
    }

    /// Same parameters with explicit forward/backward rates.
    pub fn with_rates(mut self, ell: f64, k: f64) -> Result<Self> {
        self.ell = ell;
        self.k = k;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("alpha", self.alpha),
            ("beta", self.beta),
            ("gamma", self.gamma),
        ] {
            if !(v >= 1.0) || !v.is_finite() {
                return Err(invalid(name, format!("{name} must be ≥ 1, got {v}")));
            }
        }
        for (name, v) in [
            ("ell", self.ell),
            ("k", self.k),
            ("d1", self.d1),
            ("d2", self.d2),
            ("d3", self.d3),
            ("w_scale", self.w_scale),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(invalid(name, format!("{name} must be > 0, got {v}")));
            }
        }
        Ok(())
    }

    pub fn diffusivities(&self) -> [f64; 3] {
        [self.d1, self.d2, self.d3]
    }

    /// True when both reaction rates are normalised to one.
    pub fn is_rescaled(&self) -> bool {
        self.ell == 1.0 && self.k == 1.0
    }

    /// Weight of `w` in the conserved quantities, the entropy and `Z`.
    ///
    /// Equal to one for every system except the rescaled `α + β = γ` case.
    pub fn w_weight(&self) -> f64 {
        1.0 / self.w_scale
    }

    /// Weighted masses `(γ∫u + α∫w, γ∫v + β∫w)` from the three integrals.
    pub fn masses_from_integrals(&self, int_u: f64, int_v: f64, int_w: f64) -> MassPair {
        let ww = self.w_weight();
        MassPair {
            m1: self.gamma * int_u + self.alpha * ww * int_w,
            m2: self.gamma * int_v + self.beta * ww * int_w,
        }
    }

    fn require_rescaled(&self) -> Result<()> {
        if !self.is_rescaled() {
            return Err(invalid(
                "ell",
                format!(
                    "operation requires rescaled rates ell = k = 1, got ell={} k={}",
                    self.ell, self.k
                ),
            ));
        }
        Ok(())
    }
}

/// Conserved masses `M₁ = ∫ γu + αw`, `M₂ = ∫ γv + βw` on the unit domain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MassPair {
    pub m1: f64,
    pub m2: f64,
}

impl MassPair {
    pub fn new(m1: f64, m2: f64) -> Result<Self> {
        let m = Self { m1, m2 };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m1 > 0.0) || !self.m1.is_finite() {
            return Err(invalid("m1", format!("m1 must be > 0, got {}", self.m1)));
        }
        if !(self.m2 > 0.0) || !self.m2.is_finite() {
            return Err(invalid("m2", format!("m2 must be > 0, got {}", self.m2)));
        }
        Ok(())
    }

    /// Largest relative deviation of `other` from `self`.
    pub fn relative_deviation(&self, other: &MassPair) -> f64 {
        let d1 = (other.m1 - self.m1).abs() / self.m1.abs();
        let d2 = (other.m2 - self.m2).abs() / self.m2.abs();
        d1.max(d2)
    }
}

/// Detailed-balance equilibrium `(a∞, b∞, c∞)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium {
    pub a_inf: f64,
    pub b_inf: f64,
    pub c_inf: f64,
    pub residual: f64,
}

impl Equilibrium {
    /// Tolerance on `residual` guaranteed by [`compute_equilibrium`].
    pub fn residual_bound(p: &ReactionParams, m: &MassPair) -> f64 {
        let scale = 1.0f64.max(m.m1).max(m.m2);
        1e-12 * scale.powf((p.alpha + p.beta).max(p.gamma))
    }

    pub fn components(&self) -> [f64; 3] {
        [self.a_inf, self.b_inf, self.c_inf]
    }
}

/// `|a∞^α b∞^β − c∞^γ|`.
pub fn equilibrium_residual(e: &Equilibrium, p: &ReactionParams) -> f64 {
    (stoich_pow(e.a_inf, p.alpha) * stoich_pow(e.b_inf, p.beta) - stoich_pow(e.c_inf, p.gamma))
        .abs()
}

const BISECTION_TOL: f64 = 1e-14;
const BISECTION_CAP: usize = 200;

/// Solves the balance `a^α b^β = c^γ` on the conservation manifold.
///
/// With `a = (M₁ − αc)/γ` and `b = (M₂ − βc)/γ` the left side is strictly
/// decreasing in `c` and the right side strictly increasing, so the root on
/// `[0, min(M₁/α, M₂/β)]` is unique and bisection always brackets it.
pub fn compute_equilibrium(p: &ReactionParams, m: &MassPair) -> Result<Equilibrium> {
    p.validate()?;
    p.require_rescaled()?;
    m.validate()?;

    let wa = p.alpha * p.w_weight();
    let wb = p.beta * p.w_weight();
    let a_of = |c: f64| ((m.m1 - wa * c) / p.gamma).max(0.0);
    let b_of = |c: f64| ((m.m2 - wb * c) / p.gamma).max(0.0);
    let defect = |c: f64| {
        stoich_pow(a_of(c), p.alpha) * stoich_pow(b_of(c), p.beta) - stoich_pow(c, p.gamma)
    };

    let mut lo = 0.0f64;
    let mut hi = (m.m1 / wa).min(m.m2 / wb);
    let mut converged = false;
    for _ in 0..BISECTION_CAP {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            converged = true;
            break;
        }
        if defect(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if !converged && hi - lo > BISECTION_TOL {
        return Err(Error::Internal(format!(
            "equilibrium bisection did not converge: bracket [{lo}, {hi}]"
        )));
    }
    // Pick whichever bracket end balances better.
    let c = if defect(lo).abs() <= defect(hi).abs() {
        lo
    } else {
        hi
    };
    let mut e = Equilibrium {
        a_inf: a_of(c),
        b_inf: b_of(c),
        c_inf: c,
        residual: 0.0,
    };
    e.residual = equilibrium_residual(&e, p);
    Ok(e)
}

/// Scale factors of the nondimensionalization to `ℓ = k = 1`, `|Ω| = 1`.
///
/// Physical and rescaled quantities are related by `t = time_factor·t̃`,
/// `x = space_factor·x̃`, `(u, v) = concentration_factor·(ũ, ṽ)` and
/// `w = concentration_factor·third_equation_factor·w̃`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RescaleReport {
    pub time_factor: f64,
    pub space_factor: f64,
    pub concentration_factor: f64,
    /// `(ℓ/k)^{1/γ}` when `α + β = γ`, otherwise 1.
    pub third_equation_factor: f64,
    pub rescaled: ReactionParams,
}

impl RescaleReport {
    /// True when the system fell into the `α + β = γ` branch.
    pub fn is_balanced_order(&self) -> bool {
        self.rescaled.alpha + self.rescaled.beta == self.rescaled.gamma
    }

    /// Concentration factor applied to `w`.
    pub fn w_concentration_factor(&self) -> f64 {
        self.concentration_factor * self.third_equation_factor
    }

    /// Undo the rescaling and recover the physical parameters.
    pub fn original_params(&self) -> ReactionParams {
        let r = &self.rescaled;
        let diff = self.space_factor * self.space_factor / self.time_factor;
        let (ell, k) = if self.is_balanced_order() {
            let ell = 1.0 / self.time_factor;
            (ell, ell / self.third_equation_factor.powf(r.gamma))
        } else {
            let order = r.alpha + r.beta - r.gamma;
            let cf = self.concentration_factor;
            let k = cf.powf(1.0 - r.gamma) / self.time_factor;
            (k / cf.powf(order), k)
        };
        ReactionParams {
            ell,
            k,
            d1: r.d1 * diff,
            d2: r.d2 * diff,
            d3: r.d3 * diff,
            w_scale: 1.0,
            ..*r
        }
    }
}

/// Nondimensionalise a physical system on a one-dimensional domain of
/// length `domain_measure`.
///
/// For `α + β ≠ γ` the reaction rates are both normalised. When
/// `α + β = γ` only `u`, `v` and time can be normalised; `w` is measured in
/// units of `(ℓ/k)^{1/γ}` and the `w` equation keeps the factor
/// `(k/ℓ)^{1/γ}` in `rescaled.w_scale`.
pub fn rescale_params(p: &ReactionParams, domain_measure: f64) -> Result<RescaleReport> {
    p.validate()?;
    if p.w_scale != 1.0 {
        return Err(invalid("w_scale", "parameters are already rescaled"));
    }
    if !(domain_measure > 0.0) || !domain_measure.is_finite() {
        return Err(invalid(
            "domain_measure",
            format!("domain measure must be > 0, got {domain_measure}"),
        ));
    }
    let space_factor = domain_measure;
    let order = p.alpha + p.beta - p.gamma;
    let (time_factor, concentration_factor, third) = if order != 0.0 {
        let ratio = p.k / p.ell;
        (
            ratio.powf((1.0 - p.gamma) / order) / p.k,
            ratio.powf(1.0 / order),
            1.0,
        )
    } else {
        (1.0 / p.ell, 1.0, (p.ell / p.k).powf(1.0 / p.gamma))
    };
    let diff = time_factor / (space_factor * space_factor);
    let rescaled = ReactionParams {
        ell: 1.0,
        k: 1.0,
        d1: p.d1 * diff,
        d2: p.d2 * diff,
        d3: p.d3 * diff,
        w_scale: 1.0 / third,
        ..*p
    };
    Ok(RescaleReport {
        time_factor,
        space_factor,
        concentration_factor,
        third_equation_factor: third,
        rescaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(alpha: f64, beta: f64, gamma: f64) -> ReactionParams {
        ReactionParams::new(alpha, beta, gamma, [1.0, 1.0, 1.0]).unwrap()
    }

    #[test]
    fn stoich_pow_matches_powf() {
        for &x in &[0.0, 0.3, 1.0, 2.5, 17.0] {
            for &e in &[1.0, 2.0, 3.0, 1.5, 2.25, 20.0] {
                let got = stoich_pow(x, e);
                let want = f64::powf(x, e);
                assert!((got - want).abs() <= 1e-13 * want.max(1.0), "{x}^{e}");
            }
        }
    }

    #[test]
    fn rejects_invalid_params() {
        assert!(ReactionParams::new(0.5, 1.0, 1.0, [1.0; 3]).is_err());
        assert!(ReactionParams::new(1.0, 1.0, 1.0, [1.0, 0.0, 1.0]).is_err());
        assert!(unit(1.0, 1.0, 1.0).with_rates(-1.0, 1.0).is_err());
        assert!(MassPair::new(0.0, 1.0).is_err());
    }

    #[test]
    fn rescale_identity_rates() {
        let r = rescale_params(&unit(1.0, 1.0, 1.0), 1.0).unwrap();
        assert_eq!(r.time_factor, 1.0);
        assert_eq!(r.space_factor, 1.0);
        assert_eq!(r.concentration_factor, 1.0);
        assert_eq!(r.third_equation_factor, 1.0);
        assert_eq!(r.rescaled, unit(1.0, 1.0, 1.0));
    }

    #[test]
    fn rescale_general_order() {
        let p = unit(1.0, 1.0, 1.0).with_rates(4.0, 2.0).unwrap();
        let r = rescale_params(&p, 1.0).unwrap();
        assert!((r.concentration_factor - 0.5).abs() < 1e-15);
        assert!((r.time_factor - 0.5).abs() < 1e-15);
        assert!(r.rescaled.is_rescaled());
        assert!(!r.is_balanced_order());
    }

    #[test]
    fn rescale_balanced_order() {
        let p = unit(1.0, 2.0, 3.0).with_rates(8.0, 1.0).unwrap();
        let r = rescale_params(&p, 1.0).unwrap();
        assert!((r.third_equation_factor - 2.0).abs() < 1e-15);
        assert!((r.rescaled.w_scale - 0.5).abs() < 1e-15);
        assert!(r.is_balanced_order());
    }

    #[test]
    fn rescale_round_trip() {
        let cases = [
            (1.0, 1.0, 1.0, 4.0, 2.0, 0.7),
            (2.0, 1.0, 1.0, 0.3, 5.0, 2.0),
            (1.0, 2.0, 3.0, 8.0, 1.0, 1.5),
            (2.0, 2.0, 1.0, 1.7, 0.2, 0.4),
        ];
        for (a, b, g, ell, k, len) in cases {
            let p = ReactionParams::new(a, b, g, [0.3, 1.1, 2.9])
                .unwrap()
                .with_rates(ell, k)
                .unwrap();
            let back = rescale_params(&p, len).unwrap().original_params();
            for (x, y) in [
                (p.ell, back.ell),
                (p.k, back.k),
                (p.d1, back.d1),
                (p.d2, back.d2),
                (p.d3, back.d3),
            ] {
                assert!((x - y).abs() <= 1e-14 * x, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn equilibrium_symmetric_is_exact() {
        let e =
            compute_equilibrium(&unit(1.0, 1.0, 1.0), &MassPair::new(2.0, 2.0).unwrap()).unwrap();
        assert!((e.a_inf - 1.0).abs() <= 1e-14);
        assert!((e.b_inf - 1.0).abs() <= 1e-14);
        assert!((e.c_inf - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn equilibrium_quadratic_case() {
        let e =
            compute_equilibrium(&unit(1.0, 1.0, 1.0), &MassPair::new(3.0, 2.0).unwrap()).unwrap();
        let s3 = 3f64.sqrt();
        assert!((e.a_inf - s3).abs() < 1e-13);
        assert!((e.b_inf - (s3 - 1.0)).abs() < 1e-13);
        assert!((e.c_inf - (3.0 - s3)).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_second_order_in_u() {
        // (2 - 2c)^2 (1 - c) = c has the root c = 1/2 (checked offline to 30 digits).
        let e =
            compute_equilibrium(&unit(2.0, 1.0, 1.0), &MassPair::new(2.0, 1.0).unwrap()).unwrap();
        assert!((e.c_inf - 0.5).abs() < 1e-14);
        assert!((e.a_inf - 1.0).abs() < 1e-13);
        assert!((e.b_inf - 0.5).abs() < 1e-13);
    }

    #[test]
    fn equilibrium_requires_rescaled_rates() {
        let p = unit(1.0, 1.0, 1.0).with_rates(2.0, 1.0).unwrap();
        assert!(compute_equilibrium(&p, &MassPair::new(1.0, 1.0).unwrap()).is_err());
    }

    #[test]
    fn residual_examples() {
        let p = unit(1.0, 1.0, 1.0);
        let eq = |a, b, c| Equilibrium {
            a_inf: a,
            b_inf: b,
            c_inf: c,
            residual: 0.0,
        };
        assert_eq!(equilibrium_residual(&eq(1.0, 1.0, 1.0), &p), 0.0);
        let s3 = 3f64.sqrt();
        assert!(equilibrium_residual(&eq(s3, s3 - 1.0, 3.0 - s3), &p) <= 1e-15);
        assert_eq!(equilibrium_residual(&eq(1.0, 1.0, 2.0), &p), 1.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn stoich() -> impl Strategy<Value = f64> {
            prop_oneof![Just(1.0), Just(2.0), Just(3.0), 1.0f64..4.0]
        }

        proptest! {
            #[test]
            fn equilibrium_conserves_and_balances(
                a in stoich(), b in stoich(), g in stoich(),
                m1 in 0.05f64..20.0, m2 in 0.05f64..20.0,
            ) {
                let p = ReactionParams::new(a, b, g, [1.0; 3]).unwrap();
                let m = MassPair::new(m1, m2).unwrap();
                let e = compute_equilibrium(&p, &m).unwrap();
                prop_assert!(e.a_inf > 0.0 && e.b_inf > 0.0 && e.c_inf > 0.0);
                prop_assert!((g * e.a_inf + a * e.c_inf - m1).abs() <= 1e-12 * m1);
                prop_assert!((g * e.b_inf + b * e.c_inf - m2).abs() <= 1e-12 * m2);
                prop_assert!(e.residual <= Equilibrium::residual_bound(&p, &m));
            }

            #[test]
            fn c_inf_monotone_in_m1(
                a in stoich(), b in stoich(), g in stoich(),
                m1 in 0.1f64..10.0, dm in 0.0f64..5.0, m2 in 0.1f64..10.0,
            ) {
                let p = ReactionParams::new(a, b, g, [1.0; 3]).unwrap();
                let lo = compute_equilibrium(&p, &MassPair::new(m1, m2).unwrap()).unwrap();
                let hi = compute_equilibrium(&p, &MassPair::new(m1 + dm, m2).unwrap()).unwrap();
                prop_assert!(hi.c_inf >= lo.c_inf - 1e-14);
            }
        }
    }
}
