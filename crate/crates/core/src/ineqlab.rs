//! Empirical verification of the functional inequalities behind the
//! exponential convergence result, and estimation of their constants.
//!
//! Nothing here claims to reproduce optimal constants. Every estimate is an
//! extremum over a deterministic, seeded sample of admissible states, so a
//! reported constant is exactly what the sampled data supports.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::entropy::{ck_gap, ckp_sides, elementary_inequality_gap, entropy_report};
use crate::error::{invalid, Error, Result};
use crate::grid::{integrate, Field, Grid1D};
use crate::model::{compute_equilibrium, stoich_pow, Equilibrium, MassPair, ReactionParams};
use crate::solver::{State, Trajectory};

/// Relative entropies below this are treated as "at equilibrium".
pub const INFORMATIVE_REL_ENTROPY: f64 = 1e-12;

/// Half-width of the deleted neighbourhood around `μ_c = 0`.
pub const SCAN_GAP: f64 = 1e-6;

/// Where an extremal ratio was observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Locator {
    Sample(usize),
    Mu(f64),
    Time(f64),
}

/// Extremal ratios over a sample and the inequality constant they imply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioReport {
    /// Number of ratios that entered the extrema.
    pub n_samples: usize,
    pub min_ratio: f64,
    pub max_ratio: f64,
    pub argmin: Locator,
    pub argmax: Locator,
    pub constant_estimate: f64,
}

/// Ordered min/max reduction; the first occurrence wins ties so the result
/// does not depend on how the ratios were computed.
#[derive(Debug, Default)]
struct Extrema {
    n: usize,
    min: Option<(f64, Locator)>,
    max: Option<(f64, Locator)>,
}

impl Extrema {
    fn push(&mut self, ratio: f64, at: Locator) {
        self.n += 1;
        if self.min.is_none_or(|(m, _)| ratio < m) {
            self.min = Some((ratio, at));
        }
        if self.max.is_none_or(|(m, _)| ratio > m) {
            self.max = Some((ratio, at));
        }
    }

    fn finish(self, constant: impl FnOnce(f64, f64) -> f64) -> Option<RatioReport> {
        let (min_ratio, argmin) = self.min?;
        let (max_ratio, argmax) = self.max?;
        Some(RatioReport {
            n_samples: self.n,
            min_ratio,
            max_ratio,
            argmin,
            argmax,
            constant_estimate: constant(min_ratio, max_ratio),
        })
    }
}

// ---------------------------------------------------------------------------
// Homogeneous perturbations on the conservation manifold

/// Square roots of the equilibrium and the slopes of the constraint curves.
#[derive(Debug, Clone, Copy)]
struct RootEquilibrium {
    a: f64,
    b: f64,
    c: f64,
    kappa_a: f64,
    kappa_b: f64,
}

impl RootEquilibrium {
    fn new(p: &ReactionParams, e: &Equilibrium) -> Self {
        let (a, b, c) = (e.a_inf.sqrt(), e.b_inf.sqrt(), e.c_inf.sqrt());
        let ww = p.w_weight();
        Self {
            a,
            b,
            c,
            kappa_a: p.alpha * ww * e.c_inf / (p.gamma * e.a_inf),
            kappa_b: p.beta * ww * e.c_inf / (p.gamma * e.b_inf),
        }
    }

    fn mu_max(&self) -> f64 {
        -1.0 + (1.0 + (1.0 / self.kappa_a).min(1.0 / self.kappa_b)).sqrt()
    }

    /// `√(1 − κ μ(2+μ)) − 1` without cancellation near `μ = 0`.
    fn partner(kappa: f64, mu_c: f64) -> f64 {
        let x = kappa * mu_c * (2.0 + mu_c);
        let root = (1.0 - x).max(0.0).sqrt();
        -x / (root + 1.0)
    }
}

/// Perturbation `(μ_a, μ_b)` forced by the conservation laws for a given `μ_c`.
pub fn homogeneous_partners(p: &ReactionParams, e: &Equilibrium, mu_c: f64) -> (f64, f64) {
    let r = RootEquilibrium::new(p, e);
    (
        RootEquilibrium::partner(r.kappa_a, mu_c),
        RootEquilibrium::partner(r.kappa_b, mu_c),
    )
}

/// `((a−A∞)² + (b−B∞)² + (c−C∞)²) / (a^α b^β − c^γ)²` on the constraint curve
/// parametrised by `μ_c`, with `(a, b, c) = (A∞(1+μ_a), B∞(1+μ_b), C∞(1+μ_c))`.
pub fn homogeneous_ratio(p: &ReactionParams, e: &Equilibrium, mu_c: f64) -> f64 {
    ratio_on_curve(p, &RootEquilibrium::new(p, e), mu_c)
}

fn ratio_on_curve(p: &ReactionParams, r: &RootEquilibrium, mu_c: f64) -> f64 {
    let mu_a = RootEquilibrium::partner(r.kappa_a, mu_c);
    let mu_b = RootEquilibrium::partner(r.kappa_b, mu_c);
    let num = (r.a * mu_a).powi(2) + (r.b * mu_b).powi(2) + (r.c * mu_c).powi(2);
    let bracket = stoich_pow(1.0 + mu_c, p.gamma)
        - stoich_pow(1.0 + mu_a, p.alpha) * stoich_pow(1.0 + mu_b, p.beta);
    let den = stoich_pow(r.c, 2.0 * p.gamma) * bracket * bracket;
    num / den
}

/// Result of the homogeneous sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousScan {
    /// Ratios over the swept `μ_c` grid (deleted neighbourhood excluded).
    pub report: RatioReport,
    pub equilibrium: Equilibrium,
    pub mu_max: f64,
    /// Ratio at `μ_c = −1` (no `w`).
    pub lower_end: f64,
    /// Ratio at `μ_c = μ_max` (`u` or `v` exhausted).
    pub upper_end: f64,
    /// Value of the removable singularity at `μ_c = 0`.
    pub central_limit: f64,
    pub central_limit_left: f64,
    pub central_limit_right: f64,
}

/// Sweep homogeneous admissible states and bound the ratio of squared
/// distance to squared reaction defect.
pub fn homogeneous_scan(
    p: &ReactionParams,
    m: &MassPair,
    n_grid: usize,
) -> Result<HomogeneousScan> {
    if n_grid < 100 {
        return Err(invalid(
            "n_grid",
            format!("need at least 100 points, got {n_grid}"),
        ));
    }
    let e = compute_equilibrium(p, m)?;
    let r = RootEquilibrium::new(p, &e);
    let mu_max = r.mu_max();
    let span = mu_max + 1.0;

    let mut ext = Extrema::default();
    for i in 0..n_grid {
        let mu = if i == n_grid - 1 {
            mu_max
        } else {
            -1.0 + span * i as f64 / (n_grid - 1) as f64
        };
        if mu.abs() < SCAN_GAP {
            continue;
        }
        ext.push(ratio_on_curve(p, &r, mu), Locator::Mu(mu));
    }

    // one-sided Richardson: the ratio is smooth on each side with a linear
    // leading error term
    let h = SCAN_GAP;
    let right = 2.0 * ratio_on_curve(p, &r, h) - ratio_on_curve(p, &r, 2.0 * h);
    let left = 2.0 * ratio_on_curve(p, &r, -h) - ratio_on_curve(p, &r, -2.0 * h);
    let central = 0.5 * (left + right);

    let report = ext
        .finish(|_, max| max.max(central))
        .ok_or_else(|| Error::Internal("empty μ_c sweep".into()))?;
    Ok(HomogeneousScan {
        report,
        equilibrium: e,
        mu_max,
        lower_end: ratio_on_curve(p, &r, -1.0),
        upper_end: ratio_on_curve(p, &r, mu_max),
        central_limit: central,
        central_limit_left: left,
        central_limit_right: right,
    })
}

// ---------------------------------------------------------------------------
// Random admissible fields

/// A nonnegative state satisfying both conservation laws.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleSample {
    pub u: Field,
    pub v: Field,
    pub w: Field,
    pub masses: MassPair,
}

impl AdmissibleSample {
    pub fn to_state(&self) -> State {
        State::new(0.0, self.u.clone(), self.v.clone(), self.w.clone())
    }
}

/// Controls for the admissible-field sampler.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    /// Pointwise floor; `None` means `1e-6·min(M₁, M₂)`.
    pub floor_delta: Option<f64>,
    /// Maximum number of constant pieces per field.
    pub max_pieces: usize,
    /// Draw spatially constant fields only.
    pub homogeneous: bool,
    /// Worker threads for batch evaluation; results do not depend on it.
    pub threads: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            floor_delta: None,
            max_pieces: 8,
            homogeneous: false,
            threads: 1,
        }
    }
}

impl SamplerConfig {
    pub fn floor_for(&self, m: &MassPair) -> f64 {
        self.floor_delta.unwrap_or(1e-6 * m.m1.min(m.m2))
    }
}

/// Draw one admissible sample from `seed`.
pub fn sample_admissible(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    seed: u64,
    floor_delta: f64,
) -> Result<AdmissibleSample> {
    let cfg = SamplerConfig {
        floor_delta: Some(floor_delta),
        ..Default::default()
    };
    sample_with(p, m, g, &cfg, &mut ChaCha8Rng::seed_from_u64(seed))
}

fn sample_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Random nonnegative piecewise-constant profile with positive mean.
fn random_shape(g: &Grid1D, max_pieces: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = g.n_cells();
    let pieces = rng.gen_range(1..=max_pieces.clamp(1, n));
    let mut cuts: Vec<usize> = (0..pieces - 1).map(|_| rng.gen_range(1..n)).collect();
    cuts.push(n);
    cuts.sort_unstable();
    cuts.dedup();
    let mut shape = Vec::with_capacity(n);
    let mut start = 0;
    for &end in &cuts {
        let level = if rng.gen_bool(0.15) {
            0.0
        } else {
            let contrast = rng.gen_range(0.5..4.0);
            rng.gen::<f64>().powf(contrast)
        };
        shape.extend(std::iter::repeat_n(level, end - start));
        start = end;
    }
    if shape.iter().all(|&x| x == 0.0) {
        shape.iter_mut().for_each(|x| *x = 1.0);
    }
    shape
}

/// `floor + (mean − floor)·shape/⟨shape⟩`, whose integral is exactly `mean`
/// up to rounding.
fn field_with_mean(g: &Grid1D, shape: Vec<f64>, mean: f64, floor: f64) -> Field {
    let shape_mean = g.dx() * shape.iter().sum::<f64>();
    let scale = (mean - floor).max(0.0) / shape_mean;
    Field::new(shape.into_iter().map(|s| floor + scale * s).collect())
}

fn sample_with(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    cfg: &SamplerConfig,
    rng: &mut ChaCha8Rng,
) -> Result<AdmissibleSample> {
    p.validate()?;
    m.validate()?;
    let floor = cfg.floor_for(m);
    let (wa, wb) = (p.alpha * p.w_weight(), p.beta * p.w_weight());
    let w_max = ((m.m1 - p.gamma * floor) / wa).min((m.m2 - p.gamma * floor) / wb);
    if !(floor >= 0.0) || !(w_max > floor) {
        return Err(invalid(
            "floor_delta",
            format!("floor {floor} leaves no room for positive means (w mean ≤ {w_max})"),
        ));
    }
    // mix in draws that push w towards its floor or towards exhausting u or v
    let xi: f64 = match rng.gen_range(0..5) {
        0 => rng.gen::<f64>().powi(6),
        1 => 1.0 - rng.gen::<f64>().powi(6),
        _ => rng.gen(),
    };
    let w_mean = floor + xi * (w_max - floor);
    let u_mean = (m.m1 - wa * w_mean) / p.gamma;
    let v_mean = (m.m2 - wb * w_mean) / p.gamma;

    let pieces = if cfg.homogeneous { 1 } else { cfg.max_pieces };
    let w = field_with_mean(g, random_shape(g, pieces, rng), w_mean, floor);
    let u = field_with_mean(g, random_shape(g, pieces, rng), u_mean, floor);
    let v = field_with_mean(g, random_shape(g, pieces, rng), v_mean, floor);
    Ok(AdmissibleSample {
        u,
        v,
        w,
        masses: *m,
    })
}

/// Draw `n` samples from `(seed, index)` streams and evaluate `f` on each.
/// The output order is the sample order whatever the thread count.
fn map_samples<T: Send>(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    n: usize,
    seed: u64,
    cfg: &SamplerConfig,
    f: impl Fn(usize, AdmissibleSample) -> Result<T> + Sync,
) -> Result<Vec<T>> {
    let one = |i: usize| -> Result<T> {
        let s = sample_with(p, m, g, cfg, &mut sample_rng(seed, i))?;
        f(i, s)
    };
    if cfg.threads <= 1 {
        return (0..n).map(one).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.threads)
        .build()
        .map_err(|e| Error::Internal(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(one).collect())
}

/// Sample batch as plain states, mainly for inspection and plotting.
pub fn sample_batch(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    n: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<Vec<AdmissibleSample>> {
    map_samples(p, m, g, n, seed, cfg, |_, s| Ok(s))
}

// ---------------------------------------------------------------------------
// Inhomogeneous estimates

/// Outcome of the square-root distance estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SqrtDistanceReport {
    /// Ratios `(LHS − k1·part1)/part2` over samples with `part2 > 0`.
    pub report: Option<RatioReport>,
    pub k1: f64,
    /// Smallest `K₂ ≥ 0` making the estimate hold on every sample.
    pub k2: f64,
    pub n_samples: usize,
    /// Homogeneous samples (`part2 = 0`) with `LHS > k1·part1`.
    pub uncovered: usize,
}

/// Parts of the square-root estimate for one state:
/// `(Σ‖X − X∞‖², ‖W^γ − U^α V^β‖², Σ‖X − X̄‖²)` with `X = √x`.
pub fn sqrt_distance_parts(
    g: &Grid1D,
    p: &ReactionParams,
    s: &State,
    e: &Equilibrium,
) -> Result<(f64, f64, f64)> {
    s.check(g)?;
    let roots = [s.u.sqrt(), s.v.sqrt(), s.w.sqrt()];
    let inf = [e.a_inf.sqrt(), e.b_inf.sqrt(), e.c_inf.sqrt()];
    let dx = g.dx();
    let mut lhs = 0.0;
    let mut part2 = 0.0;
    for (x, x_inf) in roots.iter().zip(inf) {
        let mean = integrate(g, x)?;
        lhs += dx * x.iter().map(|&y| (y - x_inf).powi(2)).sum::<f64>();
        part2 += dx * x.iter().map(|&y| (y - mean).powi(2)).sum::<f64>();
    }
    let part1 = dx
        * (0..g.n_cells())
            .map(|i| {
                let d = stoich_pow(roots[2][i], p.gamma)
                    - stoich_pow(roots[0][i], p.alpha) * stoich_pow(roots[1][i], p.beta);
                d * d
            })
            .sum::<f64>();
    Ok((lhs, part1, part2))
}

/// Given `k1`, find the smallest `K₂` with
/// `Σ‖X−X∞‖² ≤ k1‖W^γ−U^αV^β‖² + K₂ Σ‖X−X̄‖²` on every sample.
pub fn verify_sqrt_distance(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    n_samples: usize,
    k1: f64,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<SqrtDistanceReport> {
    if !(k1 > 0.0) {
        return Err(invalid("k1", format!("k1 must be > 0, got {k1}")));
    }
    let e = compute_equilibrium(p, m)?;
    let parts = map_samples(p, m, g, n_samples, seed, cfg, |_, s| {
        sqrt_distance_parts(g, p, &s.to_state(), &e)
    })?;
    let mut ext = Extrema::default();
    let mut uncovered = 0;
    for (i, (lhs, part1, part2)) in parts.into_iter().enumerate() {
        let excess = lhs - k1 * part1;
        if part2 > 0.0 {
            ext.push(excess / part2, Locator::Sample(i));
        } else if excess > 0.0 {
            uncovered += 1;
        }
    }
    let report = ext.finish(|_, max| max.max(0.0));
    Ok(SqrtDistanceReport {
        k2: report.map_or(0.0, |r| r.constant_estimate),
        report,
        k1,
        n_samples,
        uncovered,
    })
}

/// `min D/(E − E∞)` over admissible samples; the minimum is the empirical
/// entropy–entropy-dissipation constant.
pub fn estimate_k_eed(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    n_samples: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<RatioReport> {
    let e = compute_equilibrium(p, m)?;
    let ratios = map_samples(p, m, g, n_samples, seed, cfg, |_, s| {
        eed_ratio(g, p, &s.to_state(), &e)
    })?;
    let mut ext = Extrema::default();
    for (i, r) in ratios.into_iter().enumerate() {
        if let Some(r) = r {
            ext.push(r, Locator::Sample(i));
        }
    }
    ext.finish(|min, _| min).ok_or_else(|| {
        Error::NoInformativeSamples(format!(
            "all {n_samples} samples have relative entropy below {INFORMATIVE_REL_ENTROPY:e}"
        ))
    })
}

/// `D/(E − E∞)` for one state, `None` when the state is at equilibrium.
/// Infinite dissipation gives `+∞`.
pub fn eed_ratio(
    g: &Grid1D,
    p: &ReactionParams,
    s: &State,
    e: &Equilibrium,
) -> Result<Option<f64>> {
    let r = entropy_report(g, p, s, e)?;
    let rel = r.relative_entropy.unwrap_or(0.0);
    Ok((rel >= INFORMATIVE_REL_ENTROPY).then(|| r.dissipation / rel))
}

/// Same estimate evaluated on the recorded rows of a simulation.
pub fn estimate_k_trajectory(traj: &Trajectory) -> Result<RatioReport> {
    let mut ext = Extrema::default();
    for d in traj.diagnostics() {
        if d.relative_entropy >= INFORMATIVE_REL_ENTROPY {
            ext.push(d.dissipation / d.relative_entropy, Locator::Time(d.t));
        }
    }
    if ext.n < 2 {
        return Err(Error::NoInformativeSamples(format!(
            "{} recorded rows with relative entropy ≥ {INFORMATIVE_REL_ENTROPY:e}, need 2",
            ext.n
        )));
    }
    Ok(ext.finish(|min, _| min).expect("non-empty"))
}

/// Csiszár–Kullback verification result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CkReport {
    /// Ratios `(E − E∞)/Σ‖x − x∞‖₁²`; the constant is their minimum.
    pub report: RatioReport,
    /// Species fields on which the classical bound was checked.
    pub ckp_checked: usize,
    pub ckp_violations: usize,
    /// Smallest `∫ f ln(f/f̄) − ‖f−f̄‖₁²/(2f̄)` observed.
    pub ckp_min_margin: f64,
}

pub fn verify_ck(
    p: &ReactionParams,
    m: &MassPair,
    g: &Grid1D,
    n_samples: usize,
    seed: u64,
    cfg: &SamplerConfig,
) -> Result<CkReport> {
    let e = compute_equilibrium(p, m)?;
    let rows = map_samples(p, m, g, n_samples, seed, cfg, |_, s| {
        let gap = ck_gap(g, p, &s.to_state(), &e)?;
        let mut margins = [0.0; 3];
        for (slot, f) in margins.iter_mut().zip([&s.u, &s.v, &s.w]) {
            let (kl, bound) = ckp_sides(g, f)?;
            *slot = kl - bound;
        }
        Ok((gap, margins))
    })?;
    let mut ext = Extrema::default();
    let mut checked = 0;
    let mut violations = 0;
    let mut min_margin = f64::INFINITY;
    for (i, (gap, margins)) in rows.into_iter().enumerate() {
        if gap.lhs >= INFORMATIVE_REL_ENTROPY {
            if let Some(r) = gap.ratio() {
                ext.push(r, Locator::Sample(i));
            }
        }
        for mg in margins {
            checked += 1;
            // the discrete bound is exact Pinsker on a probability vector;
            // allow only rounding
            if mg < -1e-14 {
                violations += 1;
            }
            min_margin = min_margin.min(mg);
        }
    }
    let report = ext.finish(|min, _| min).ok_or_else(|| {
        Error::NoInformativeSamples(format!("all {n_samples} samples are at equilibrium"))
    })?;
    Ok(CkReport {
        report,
        ckp_checked: checked,
        ckp_violations: violations,
        ckp_min_margin: min_margin,
    })
}

/// Outcome of the pointwise check `(a−b)ln(a/b) ≥ 4(√a−√b)²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ElementaryReport {
    pub checked: usize,
    pub violations: usize,
    /// Smallest gap relative to `(a−b)ln(a/b)` among pairs with `a ≠ b`.
    pub min_relative_gap: f64,
}

/// Check the elementary inequality on `n` log-uniform pairs in `[1e-8, 1e8]²`.
pub fn check_elementary_inequality(n: usize, seed: u64) -> ElementaryReport {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let span = 8.0 * std::f64::consts::LN_10;
    let mut violations = 0;
    let mut min_rel = f64::INFINITY;
    for _ in 0..n {
        let a = rng.gen_range(-span..span).exp();
        let b = rng.gen_range(-span..span).exp();
        let gap = elementary_inequality_gap(a, b);
        if gap < 0.0 {
            violations += 1;
        }
        let lhs = (a - b) * (a / b).ln();
        if lhs > 0.0 {
            min_rel = min_rel.min(gap / lhs);
        }
    }
    ElementaryReport {
        checked: n,
        violations,
        min_relative_gap: min_rel,
    }
}

/// `(b − a)/(a + b)` for the extreme diffusivities of a species pair; below 1
/// the improved duality estimate with `p′ = 2` closes.
pub fn duality_margin(d_a: f64, d_b: f64) -> Result<f64> {
    for (name, d) in [("d_a", d_a), ("d_b", d_b)] {
        if !(d > 0.0) || !d.is_finite() {
            return Err(invalid(name, format!("diffusivity must be > 0, got {d}")));
        }
    }
    let (lo, hi) = if d_a <= d_b { (d_a, d_b) } else { (d_b, d_a) };
    Ok((hi - lo) / (lo + hi))
}
