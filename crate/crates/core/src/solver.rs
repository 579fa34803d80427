//! IMEX time integration: explicit mass-action reaction, backward-Euler
//! diffusion, step rejection for positivity and accuracy.

use crate::entropy::{entropy_report, l1_distance, EntropyReport};
use crate::error::{invalid, Error, Result};
use crate::grid::{integrate, solve_implicit_diffusion, Field, Grid1D};
use crate::model::{compute_equilibrium, stoich_pow, Equilibrium, MassPair, ReactionParams};

/// Cells below this fraction of the largest concentration are measured
/// against it when computing relative changes.
pub const RELATIVE_CHANGE_FLOOR: f64 = 1e-3;

/// Accepted steps before the step size is doubled again.
pub const GROWTH_STREAK: usize = 10;

/// Concentrations of the three species at time `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
    pub w: Field,
}

impl State {
    pub fn new(t: f64, u: Field, v: Field, w: Field) -> Self {
        Self { t, u, v, w }
    }

    pub fn homogeneous(g: &Grid1D, u: f64, v: f64, w: f64) -> Self {
        Self::new(
            0.0,
            Field::constant(g, u),
            Field::constant(g, v),
            Field::constant(g, w),
        )
    }

    /// Spatially constant state at the equilibrium values.
    pub fn at_equilibrium(g: &Grid1D, e: &Equilibrium) -> Self {
        Self::homogeneous(g, e.a_inf, e.b_inf, e.c_inf)
    }

    pub fn fields(&self) -> [&Field; 3] {
        [&self.u, &self.v, &self.w]
    }

    pub fn check(&self, g: &Grid1D) -> Result<()> {
        for f in self.fields() {
            g.check(f)?;
        }
        Ok(())
    }

    /// Shape and sign check.
    pub fn validate(&self, g: &Grid1D) -> Result<()> {
        self.check(g)?;
        for f in self.fields() {
            f.check_nonnegative()?;
        }
        Ok(())
    }

    pub fn masses(&self, g: &Grid1D, p: &ReactionParams) -> Result<MassPair> {
        Ok(p.masses_from_integrals(
            integrate(g, &self.u)?,
            integrate(g, &self.v)?,
            integrate(g, &self.w)?,
        ))
    }

    pub fn min_concentration(&self) -> f64 {
        self.fields()
            .iter()
            .map(|f| f.min())
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_concentration(&self) -> f64 {
        self.fields()
            .iter()
            .map(|f| f.max())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `R = ℓ u^α v^β − k w^γ`; positive means net forward reaction.
#[inline]
pub fn reaction_rate(p: &ReactionParams, u: f64, v: f64, w: f64) -> f64 {
    p.ell * stoich_pow(u, p.alpha) * stoich_pow(v, p.beta) - p.k * stoich_pow(w, p.gamma)
}

/// `max_i βγ u + αγ v + 2αβ w`, the quantity that obeys a maximum principle
/// when all diffusivities coincide.
pub fn z_linf(p: &ReactionParams, s: &State) -> f64 {
    let (cu, cv, cw) = (
        p.beta * p.gamma,
        p.alpha * p.gamma,
        2.0 * p.alpha * p.beta * p.w_weight(),
    );
    s.u.iter()
        .zip(s.v.iter())
        .zip(s.w.iter())
        .map(|((&u, &v), &w)| cu * u + cv * v + cw * w)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Why a step was refused.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rejection {
    /// The reaction or diffusion stage produced a negative cell.
    Negative { cell: usize },
    /// A pointwise relative change in the reaction stage exceeded `safety`.
    TooLarge { cell: usize, relative_change: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum StepOutcome {
    Accepted(State),
    Rejected(Rejection),
}

/// Advance `s` by one IMEX step of size `dt`.
pub fn step_imex(
    p: &ReactionParams,
    g: &Grid1D,
    s: &State,
    dt: f64,
    safety: f64,
) -> Result<StepOutcome> {
    if !(dt > 0.0) {
        return Err(invalid("dt", format!("step must be > 0, got {dt}")));
    }
    s.check(g)?;
    let n = g.n_cells();
    let floor = RELATIVE_CHANGE_FLOOR * s.max_concentration().max(0.0);
    let (sa, sb, sc) = (dt * p.alpha, dt * p.beta, dt * p.gamma * p.w_scale);

    let mut u = s.u.values.clone();
    let mut v = s.v.values.clone();
    let mut w = s.w.values.clone();
    for i in 0..n {
        let r = reaction_rate(p, u[i], v[i], w[i]);
        let (du, dv, dw) = (-sa * r, -sb * r, sc * r);
        for (old, delta) in [(u[i], du), (v[i], dv), (w[i], dw)] {
            let new = old + delta;
            if !(new >= 0.0) {
                return Ok(StepOutcome::Rejected(Rejection::Negative { cell: i }));
            }
            let rel = delta.abs() / old.max(floor);
            if rel > safety {
                return Ok(StepOutcome::Rejected(Rejection::TooLarge {
                    cell: i,
                    relative_change: rel,
                }));
            }
        }
        u[i] += du;
        v[i] += dv;
        w[i] += dw;
    }

    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let mut scratch = Vec::with_capacity(n);
    for (x, d) in [(&mut u, p.d1), (&mut v, p.d2), (&mut w, p.d3)] {
        solve_implicit_diffusion(dt * d * inv_dx2, x, &mut scratch);
        if let Some(cell) = x.iter().position(|&y| !(y >= 0.0)) {
            return Ok(StepOutcome::Rejected(Rejection::Negative { cell }));
        }
    }
    Ok(StepOutcome::Accepted(State::new(
        s.t + dt,
        Field::new(u),
        Field::new(v),
        Field::new(w),
    )))
}

/// Adaptive stepping controls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepConfig {
    pub dt_init: f64,
    pub dt_min: f64,
    pub safety: f64,
    pub t_end: f64,
    /// Record diagnostics every this many accepted steps.
    pub record_every: usize,
}

impl Default for StepConfig {
    fn default() -> Self {
        Self {
            dt_init: 1e-3,
            dt_min: 1e-12,
            safety: 0.2,
            t_end: 10.0,
            record_every: 1,
        }
    }
}

impl StepConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt_min > 0.0) {
            return Err(invalid(
                "dt_min",
                format!("dt_min must be > 0, got {}", self.dt_min),
            ));
        }
        if !(self.dt_init >= self.dt_min) || !self.dt_init.is_finite() {
            return Err(invalid(
                "dt_init",
                format!("dt_init must be ≥ dt_min, got {}", self.dt_init),
            ));
        }
        if !(self.safety > 0.0 && self.safety <= 1.0) {
            return Err(invalid(
                "safety",
                format!("safety must lie in (0, 1], got {}", self.safety),
            ));
        }
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return Err(invalid(
                "t_end",
                format!("t_end must be > 0, got {}", self.t_end),
            ));
        }
        if self.record_every == 0 {
            return Err(invalid("record_every", "record_every must be ≥ 1"));
        }
        Ok(())
    }
}

/// One recorded row of diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub t: f64,
    /// Size of the step that produced this row (0 for the initial row).
    pub dt: f64,
    pub mass1: f64,
    pub mass2: f64,
    pub entropy: f64,
    pub relative_entropy: f64,
    pub dissipation: f64,
    pub fisher_u: f64,
    pub fisher_v: f64,
    pub fisher_w: f64,
    pub reaction_term: f64,
    pub l1_u: f64,
    pub l1_v: f64,
    pub l1_w: f64,
    pub min_conc: f64,
}

impl Diagnostics {
    pub fn evaluate(
        g: &Grid1D,
        p: &ReactionParams,
        s: &State,
        e: &Equilibrium,
        dt: f64,
    ) -> Result<Self> {
        let m = s.masses(g, p)?;
        let EntropyReport {
            entropy,
            relative_entropy,
            dissipation,
            fisher_u,
            fisher_v,
            fisher_w,
            reaction_term,
        } = entropy_report(g, p, s, e)?;
        Ok(Self {
            t: s.t,
            dt,
            mass1: m.m1,
            mass2: m.m2,
            entropy,
            relative_entropy: relative_entropy.unwrap_or(f64::NAN),
            dissipation,
            fisher_u,
            fisher_v,
            fisher_w,
            reaction_term,
            l1_u: l1_distance(g, &s.u, e.a_inf)?,
            l1_v: l1_distance(g, &s.v, e.b_inf)?,
            l1_w: l1_distance(g, &s.w, e.c_inf)?,
            min_conc: s.min_concentration(),
        })
    }

    /// Total L¹ distance to equilibrium.
    pub fn l1_total(&self) -> f64 {
        self.l1_u + self.l1_v + self.l1_w
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub state: State,
    pub diagnostics: Diagnostics,
}

/// Per-step bookkeeping gathered over every accepted step, recorded or not.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RunStats {
    pub accepted: usize,
    pub rejected: usize,
    /// Largest `(E_{n+1} − E_n) / (1 + |E_n|)` over accepted steps.
    pub max_entropy_increase: f64,
    /// Largest relative mass deviation from the initial masses.
    pub max_mass_deviation: f64,
    pub max_z_linf: f64,
    pub smallest_dt: f64,
}

/// Recorded time series of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub grid: Grid1D,
    pub params: ReactionParams,
    pub masses: MassPair,
    pub equilibrium: Equilibrium,
    pub records: Vec<Record>,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn diagnostics(&self) -> impl Iterator<Item = &Diagnostics> + '_ {
        self.records.iter().map(|r| &r.diagnostics)
    }

    /// `(t, value)` pairs for one diagnostics column.
    pub fn series(&self, column: impl Fn(&Diagnostics) -> f64) -> Vec<(f64, f64)> {
        self.diagnostics().map(|d| (d.t, column(d))).collect()
    }

    pub fn last(&self) -> &Record {
        self.records
            .last()
            .expect("trajectory always holds the initial record")
    }
}

/// Integrate from `s0` to `cfg.t_end` with step halving on rejection and
/// doubling (capped at `dt_init`) after a streak of accepted steps.
pub fn run(p: &ReactionParams, g: &Grid1D, s0: &State, cfg: &StepConfig) -> Result<Trajectory> {
    p.validate()?;
    cfg.validate()?;
    s0.validate(g)?;
    let masses = s0.masses(g, p)?;
    masses.validate()?;
    let equilibrium = compute_equilibrium(p, &masses)?;

    let mut state = s0.clone();
    let mut records = vec![Record {
        diagnostics: Diagnostics::evaluate(g, p, &state, &equilibrium, 0.0)?,
        state: state.clone(),
    }];
    let mut stats = RunStats {
        max_entropy_increase: f64::NEG_INFINITY,
        max_z_linf: z_linf(p, &state),
        smallest_dt: f64::INFINITY,
        ..Default::default()
    };
    let mut entropy_prev = records[0].diagnostics.entropy;
    let mut dt = cfg.dt_init;
    let mut streak = 0usize;
    let mut since_record = 0usize;
    // relative slack so that rounding in t never produces a sliver step
    let t_eps = 1e-12 * cfg.t_end;

    while state.t < cfg.t_end - t_eps {
        let remaining = cfg.t_end - state.t;
        let last = dt >= remaining - t_eps;
        let h = if last { remaining } else { dt };
        match step_imex(p, g, &state, h, cfg.safety)? {
            StepOutcome::Accepted(mut next) => {
                if last {
                    next.t = cfg.t_end;
                }
                state = next;
                stats.accepted += 1;
                stats.smallest_dt = stats.smallest_dt.min(h);
                let m = state.masses(g, p)?;
                stats.max_mass_deviation =
                    stats.max_mass_deviation.max(masses.relative_deviation(&m));
                stats.max_z_linf = stats.max_z_linf.max(z_linf(p, &state));
                let entropy = crate::entropy::entropy_weighted(g, &state, p.w_weight())?;
                stats.max_entropy_increase = stats
                    .max_entropy_increase
                    .max((entropy - entropy_prev) / (1.0 + entropy_prev.abs()));
                entropy_prev = entropy;

                since_record += 1;
                if since_record >= cfg.record_every || state.t >= cfg.t_end - t_eps {
                    records.push(Record {
                        diagnostics: Diagnostics::evaluate(g, p, &state, &equilibrium, h)?,
                        state: state.clone(),
                    });
                    since_record = 0;
                }
                streak += 1;
                if streak >= GROWTH_STREAK {
                    dt = (2.0 * dt).min(cfg.dt_init);
                    streak = 0;
                }
            }
            StepOutcome::Rejected(_) => {
                stats.rejected += 1;
                streak = 0;
                dt = 0.5 * h;
                if dt < cfg.dt_min {
                    return Err(Error::StepUnderflow {
                        t: state.t,
                        dt,
                        min_conc: state.min_concentration(),
                        max_conc: state.max_concentration(),
                    });
                }
            }
        }
    }

    Ok(Trajectory {
        grid: *g,
        params: *p,
        masses,
        equilibrium,
        records,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p111(d: [f64; 3]) -> ReactionParams {
        ReactionParams::new(1.0, 1.0, 1.0, d).unwrap()
    }

    #[test]
    fn reaction_rate_examples() {
        let p = p111([1.0; 3]);
        assert_eq!(reaction_rate(&p, 1.0, 1.0, 1.0), 0.0);
        assert_eq!(reaction_rate(&p, 2.0, 1.0, 1.0), 1.0);
        let p = ReactionParams::new(2.0, 1.0, 3.0, [1.0; 3]).unwrap();
        assert_eq!(reaction_rate(&p, 2.0, 3.0, 1.0), 11.0);
    }

    #[test]
    fn z_linf_examples() {
        let g = Grid1D::new(4).unwrap();
        let p = p111([1.0; 3]);
        assert_eq!(z_linf(&p, &State::homogeneous(&g, 1.0, 1.0, 1.0)), 4.0);
        assert_eq!(z_linf(&p, &State::homogeneous(&g, 2.0, 0.0, 0.0)), 2.0);

        let p = ReactionParams::new(2.0, 1.0, 3.0, [1.0; 3]).unwrap();
        let s = State::new(
            0.0,
            Field::new(vec![0.1, 2.0, 0.4, 1.0]),
            Field::new(vec![3.0, 0.0, 0.2, 1.0]),
            Field::new(vec![0.0, 0.5, 1.5, 1.0]),
        );
        let brute = (0..4)
            .map(|i| 3.0 * s.u[i] + 6.0 * s.v[i] + 4.0 * s.w[i])
            .fold(f64::MIN, f64::max);
        assert_eq!(z_linf(&p, &s), brute);
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = Grid1D::new(16).unwrap();
        let p = ReactionParams::new(2.0, 1.0, 1.0, [0.3, 1.0, 2.0]).unwrap();
        let e = compute_equilibrium(&p, &MassPair::new(2.0, 1.0).unwrap()).unwrap();
        let s = State::at_equilibrium(&g, &e);
        let StepOutcome::Accepted(next) = step_imex(&p, &g, &s, 0.01, 0.2).unwrap() else {
            panic!("rejected at equilibrium");
        };
        assert!((next.t - 0.01).abs() < 1e-16);
        for (a, b) in next.fields().iter().zip(s.fields()) {
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn single_step_conserves_masses() {
        let g = Grid1D::new(50).unwrap();
        let p = ReactionParams::new(1.0, 2.0, 2.0, [1.0, 2.0, 3.0]).unwrap();
        let s = State::new(
            0.0,
            Field::from_fn(&g, |x| 1.0 + 0.5 * (6.0 * x).sin()),
            Field::from_fn(&g, |x| 0.8 + x),
            Field::from_fn(&g, |x| 0.3 + x * x),
        );
        let m0 = s.masses(&g, &p).unwrap();
        let StepOutcome::Accepted(next) = step_imex(&p, &g, &s, 1e-3, 0.2).unwrap() else {
            panic!("rejected");
        };
        let m1 = next.masses(&g, &p).unwrap();
        assert!((m1.m1 - m0.m1).abs() <= 1e-13 * m0.m1);
        assert!((m1.m2 - m0.m2).abs() <= 1e-13 * m0.m2);
    }

    #[test]
    fn oversized_step_is_rejected_not_clipped() {
        let g = Grid1D::new(4).unwrap();
        let p = p111([1.0; 3]);
        let s = State::homogeneous(&g, 2.0, 2.0, 0.5);
        let out = step_imex(&p, &g, &s, 1.0, 0.2).unwrap();
        assert!(matches!(
            out,
            StepOutcome::Rejected(Rejection::Negative { .. })
        ));
        let out = step_imex(&p, &g, &s, 0.05, 0.2).unwrap();
        assert!(matches!(
            out,
            StepOutcome::Rejected(Rejection::TooLarge { .. })
        ));
        assert!(step_imex(&p, &g, &s, 0.0, 0.2).is_err());
    }

    #[test]
    fn config_validation() {
        let ok = StepConfig::default();
        assert!(ok.validate().is_ok());
        assert!(StepConfig {
            dt_min: 1.0,
            dt_init: 0.1,
            ..ok
        }
        .validate()
        .is_err());
        assert!(StepConfig { safety: 0.0, ..ok }.validate().is_err());
        assert!(StepConfig { safety: 1.5, ..ok }.validate().is_err());
        assert!(StepConfig {
            record_every: 0,
            ..ok
        }
        .validate()
        .is_err());
    }

    #[test]
    fn run_at_equilibrium_is_stationary() {
        let g = Grid1D::new(20).unwrap();
        let p = p111([1.0, 2.0, 3.0]);
        let s0 = State::homogeneous(&g, 1.0, 1.0, 1.0);
        let cfg = StepConfig {
            t_end: 1.0,
            dt_init: 0.05,
            record_every: 3,
            ..Default::default()
        };
        let traj = run(&p, &g, &s0, &cfg).unwrap();
        let first = traj.records[0].diagnostics;
        assert!(traj.records.len() > 2);
        assert_eq!(traj.last().diagnostics.t, 1.0);
        for d in traj.diagnostics() {
            // constants pass through the tridiagonal solve with rounding only
            assert!(d.dissipation < 1e-25);
            assert!(d.relative_entropy < 1e-25);
            assert!((d.entropy - first.entropy).abs() < 1e-14);
            assert!(
                (d.mass1 - first.mass1).abs() < 1e-14,
                "{:e}",
                d.mass1 - first.mass1
            );
        }
        assert!(traj
            .records
            .windows(2)
            .all(|w| w[1].diagnostics.t > w[0].diagnostics.t));
    }

    #[test]
    fn final_row_lands_on_t_end() {
        // 1e-3 steps accumulate rounding in t over 15 000 steps
        let g = Grid1D::new(4).unwrap();
        let p = p111([1.0; 3]);
        let s0 = State::homogeneous(&g, 1.0, 2.0, 0.5);
        for t_end in [0.3, 1.7, 15.0] {
            let cfg = StepConfig {
                t_end,
                record_every: 1000,
                ..Default::default()
            };
            let traj = run(&p, &g, &s0, &cfg).unwrap();
            assert_eq!(traj.last().diagnostics.t, t_end);
            let t: Vec<f64> = traj.diagnostics().map(|d| d.t).collect();
            assert!(t.windows(2).all(|w| w[1] > w[0]));
        }
    }

    #[test]
    fn run_reports_underflow() {
        let g = Grid1D::new(4).unwrap();
        let p = p111([1.0; 3]);
        let s0 = State::homogeneous(&g, 2.0, 2.0, 0.0);
        let cfg = StepConfig {
            dt_init: 1e-2,
            dt_min: 1e-3,
            t_end: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            run(&p, &g, &s0, &cfg),
            Err(Error::StepUnderflow { .. })
        ));
    }

    #[test]
    fn run_rejects_zero_mass() {
        let g = Grid1D::new(4).unwrap();
        let p = p111([1.0; 3]);
        let s0 = State::homogeneous(&g, 0.0, 1.0, 0.0);
        assert!(run(&p, &g, &s0, &StepConfig::default()).is_err());
    }
}
