//! Uniform finite-volume grid on `[0, 1]` with zero-flux boundaries.

use std::ops::{Deref, DerefMut};

use crate::error::{invalid, Error, Result};

/// Uniform cell grid on the unit interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    n_cells: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(n_cells: usize) -> Result<Self> {
        if n_cells < 2 {
            return Err(invalid(
                "n_cells",
                format!("need at least 2 cells, got {n_cells}"),
            ));
        }
        Ok(Self {
            n_cells,
            dx: 1.0 / n_cells as f64,
        })
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Midpoint of cell `i`.
    pub fn center(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.dx
    }

    pub fn centers(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_cells).map(|i| self.center(i))
    }

    pub(crate) fn check(&self, f: &Field) -> Result<()> {
        if f.len() != self.n_cells {
            return Err(Error::LengthMismatch {
                expected: self.n_cells,
                got: f.len(),
            });
        }
        Ok(())
    }
}

/// Cell averages of one species.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Field {
    pub values: Vec<f64>,
}

impl Field {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn constant(g: &Grid1D, value: f64) -> Self {
        Self::new(vec![value; g.n_cells()])
    }

    /// Midpoint sampling of a closed-form profile.
    pub fn from_fn(g: &Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::new(g.centers().map(f).collect())
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self::new(self.values.iter().map(|&x| f(x)).collect())
    }

    /// Pointwise square root, the `U = √u` transform.
    pub fn sqrt(&self) -> Self {
        self.map(f64::sqrt)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Fails on the first negative cell.
    pub fn check_nonnegative(&self) -> Result<()> {
        match self.values.iter().position(|&x| !(x >= 0.0)) {
            Some(cell) => Err(Error::NegativeConcentration {
                cell,
                value: self.values[cell],
            }),
            None => Ok(()),
        }
    }
}

impl Deref for Field {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.values
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

impl From<Vec<f64>> for Field {
    fn from(values: Vec<f64>) -> Self {
        Self::new(values)
    }
}

/// Midpoint quadrature `dx·Σ f[i]`.
pub fn integrate(g: &Grid1D, f: &Field) -> Result<f64> {
    g.check(f)?;
    Ok(g.dx() * f.iter().sum::<f64>())
}

/// Conservative three-point Laplacian with zero flux through both ends.
pub fn laplacian_neumann(g: &Grid1D, f: &Field) -> Result<Field> {
    g.check(f)?;
    let n = g.n_cells();
    let inv_dx2 = 1.0 / (g.dx() * g.dx());
    let mut out = vec![0.0; n];
    for i in 0..n - 1 {
        let flux = (f[i + 1] - f[i]) * inv_dx2;
        out[i] += flux;
        out[i + 1] -= flux;
    }
    Ok(Field::new(out))
}

/// `4d Σ_faces (√f[i+1] − √f[i])² / dx`, the discrete `d∫|∇f|²/f`.
pub fn fisher_information(g: &Grid1D, f: &Field, d: f64) -> Result<f64> {
    g.check(f)?;
    f.check_nonnegative()?;
    let sum: f64 = f
        .windows(2)
        .map(|w| {
            let diff = w[1].sqrt() - w[0].sqrt();
            diff * diff
        })
        .sum();
    Ok(4.0 * d * sum / g.dx())
}

/// One backward-Euler diffusion step `(I − c·L) x_new = x` in place, where
/// `L` is the Neumann Laplacian scaled by `dx²` and `c = dt·d/dx²`.
///
/// The system is solved for the increment `x_new − x` with a right-hand side
/// assembled from face fluxes, so constants are reproduced exactly and the
/// rounding in the integral scales with the update instead of the state.
/// The matrix is strictly diagonally dominant for `c ≥ 0`, so the Thomas
/// sweep never pivots on zero.
pub(crate) fn solve_implicit_diffusion(c: f64, x: &mut [f64], scratch: &mut Vec<f64>) {
    let n = x.len();
    let mut rhs = vec![0.0; n];
    for i in 0..n - 1 {
        let flux = c * (x[i + 1] - x[i]);
        rhs[i] += flux;
        rhs[i + 1] -= flux;
    }
    thomas_neumann(c, &mut rhs, scratch);
    for (xi, di) in x.iter_mut().zip(&rhs) {
        *xi += di;
    }
}

/// Thomas algorithm for `(I − c·L) y = rhs`, overwriting `rhs` with `y`.
fn thomas_neumann(c: f64, rhs: &mut [f64], scratch: &mut Vec<f64>) {
    let n = rhs.len();
    scratch.clear();
    scratch.resize(n, 0.0);
    let diag = |i: usize| {
        if i == 0 || i == n - 1 {
            1.0 + c
        } else {
            1.0 + 2.0 * c
        }
    };
    let off = -c;
    // forward sweep; scratch holds the modified super-diagonal
    let mut denom = diag(0);
    scratch[0] = off / denom;
    rhs[0] /= denom;
    for i in 1..n {
        denom = diag(i) - off * scratch[i - 1];
        scratch[i] = off / denom;
        rhs[i] = (rhs[i] - off * rhs[i - 1]) / denom;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= scratch[i] * rhs[i + 1];
    }
}
