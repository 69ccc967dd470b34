//! Pointwise grid integrator and the L_p identity check built on it.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    band_width, check_common, enclosing_radius, finish, Diagnostics, IntegratorKind,
    SymmDiffResult, WeightKind, DEFAULT_BAND_MULTIPLIER,
};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::models::DensityModel;

const MAX_GRID_CELLS: usize = 400_000_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GridOptions {
    /// Cell side; `None` uses a quarter of the estimate's resolution.
    pub cell: Option<f64>,
    /// Half-width of the integration box around the model centre; `None`
    /// uses a radius that contains both superlevel sets.
    pub radius: Option<f64>,
}

struct Grid {
    dim: usize,
    per_axis: usize,
    cell: f64,
    lower: Vec<f64>,
}

impl Grid {
    fn new(center: &[f64], radius: f64, cell: f64) -> Result<Self> {
        let dim = center.len();
        let per_axis = ((2.0 * radius / cell).ceil() as usize).max(1);
        if per_axis.checked_pow(dim as u32).is_none_or(|t| t > MAX_GRID_CELLS) {
            return Err(Error::invalid(format!(
                "grid with {per_axis}^{dim} cells is too large; increase the cell size"
            )));
        }
        let half = 0.5 * per_axis as f64 * cell;
        Ok(Self { dim, per_axis, cell, lower: center.iter().map(|x| x - half).collect() })
    }

    fn cells(&self) -> usize {
        self.per_axis.pow(self.dim as u32)
    }

    fn volume(&self) -> f64 {
        self.cell.powi(self.dim as i32)
    }

    /// Applies `f` to every cell midpoint of row `row` (the first axis
    /// fixed), in order.
    fn row<T>(&self, row: usize, mut f: impl FnMut(&[f64]) -> T) -> Vec<T> {
        let mid = |k: usize, i: usize| self.lower[k] + (i as f64 + 0.5) * self.cell;
        match self.dim {
            1 => vec![f(&[mid(0, row)])],
            _ => (0..self.per_axis).map(|j| f(&[mid(0, row), mid(1, j)])).collect(),
        }
    }

    fn rows(&self) -> usize {
        self.per_axis
    }
}

fn setup(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    opts: &GridOptions,
) -> Result<(Grid, f64)> {
    check_common(est, truth, c)?;
    if est.dim() > 2 {
        return Err(Error::Unsupported(format!("grid integrator supports d ≤ 2 (got {})", est.dim())));
    }
    let cell = opts.cell.unwrap_or(0.25 * est.resolution());
    if !(cell > 0.0 && cell.is_finite()) {
        return Err(Error::invalid(format!("cell size {cell} must be positive")));
    }
    let band = band_width(est, DEFAULT_BAND_MULTIPLIER);
    if band > 0.0 {
        if let Ok(geom) = truth.geometry(c) {
            // band half-width in length units along the normal
            let reach = band / geom.min_slope();
            if cell > reach {
                return Err(Error::invalid(format!(
                    "cell {cell} exceeds the band width {reach}; the grid cannot resolve the band"
                )));
            }
        }
    }
    let center = truth.center();
    let radius = match opts.radius {
        Some(r) => r,
        None => enclosing_radius(est, truth, &center, c)?,
    };
    Ok((Grid::new(&center, radius, cell)?, band))
}

/// Midpoint rule over a cubic grid of `|I{f_n ≥ c} − I{f ≥ c}|·g`, using
/// only pointwise evaluations. Ties `f_n = c` count as inside.
pub fn symmdiff_grid(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
    opts: &GridOptions,
) -> Result<SymmDiffResult> {
    let (grid, band) = setup(est, truth, c, opts)?;
    let rows: Vec<f64> = (0..grid.rows())
        .into_par_iter()
        .map(|r| {
            grid.row(r, |x| {
                let f = truth.value(x);
                if (est.value(x) >= c) != (f >= c) {
                    weight.eval(f, c)
                } else {
                    0.0
                }
            })
            .iter()
            .sum::<f64>()
        })
        .collect();
    let value = rows.iter().sum::<f64>() * grid.volume();
    let diag = Diagnostics { band_width: band, grid_cells: grid.cells(), ..Default::default() };
    finish(value, weight, c, IntegratorKind::Grid, diag, est, truth)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LpIdentity {
    /// `∫₀^{c_max} d_{G_{p−1}}(C_n(c), C(c)) dc` from the line integrators
    pub lhs: f64,
    /// `(1/p)∫|f_n − f|^p` by the grid midpoint rule
    pub rhs: f64,
    pub c_max: f64,
    pub cells: usize,
    pub levels: usize,
}

/// Both sides of `∫₀^∞ G_{p−1}(C_n(c) Δ C(c)) dc = (1/p)∫|f_n − f|^p`,
/// where `G_{p−1}` has weight `|f − c|^{p−1}`. The left side evaluates the
/// functional with the default line integrator at `levels` midpoints of
/// `[c_max/64, c_max]` and on geometrically graded Gauss–Legendre panels
/// below (where only the truth's set moves); the right side is a grid
/// midpoint rule. `c_max` exceeds both fields' maxima.
pub fn lp_identity_check(
    est: &dyn Field,
    truth: &dyn DensityModel,
    p: f64,
    levels: usize,
    opts: &GridOptions,
) -> Result<LpIdentity> {
    if !(p >= 1.0) {
        return Err(Error::invalid(format!("identity needs p ≥ 1 (got {p})")));
    }
    if levels == 0 {
        return Err(Error::invalid("identity needs at least one level"));
    }
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), got: est.dim() });
    }
    let cell = opts.cell.unwrap_or(0.25 * est.resolution());
    let center = truth.center();
    let radius = match opts.radius {
        Some(r) => r,
        None => enclosing_radius(est, truth, &center, TAIL_LEVEL)?,
    };
    let grid = Grid::new(&center, radius, cell)?;
    let values: Vec<Vec<(f64, f64)>> = (0..grid.rows())
        .into_par_iter()
        .map(|r| grid.row(r, |x| (est.value(x), truth.value(x))))
        .collect();
    let rhs = values
        .iter()
        .map(|row| row.iter().map(|&(a, b)| (a - b).abs().powf(p)).sum::<f64>())
        .sum::<f64>()
        * grid.volume()
        / p;
    let grid_max = values.iter().flatten().map(|&(a, b)| a.max(b)).fold(0.0, f64::max);
    let c_max = 1.05 * grid_max.max(truth.sup_density());
    let weight = if p == 1.0 { WeightKind::Lebesgue } else { WeightKind::ExcessPower(p - 1.0) };
    let integrator = IntegratorKind::default_for(est.dim());
    let at = |c: f64| super::symmdiff(est, truth, c, weight, integrator).map(|r| r.value);

    let c_lo = c_max / 64.0;
    let dc = (c_max - c_lo) / levels as f64;
    let upper = (0..levels)
        .into_par_iter()
        .map(|k| at(c_lo + (k as f64 + 0.5) * dc))
        .collect::<Result<Vec<f64>>>()?
        .iter()
        .sum::<f64>()
        * dc;
    let gl = crate::quadrature::rule(LOW_NODES);
    let mut lower = 0.0;
    let mut hi = c_lo;
    for _ in 0..LOW_PANELS {
        let lo = 0.5 * hi;
        for (c, w) in gl.mapped(lo, hi) {
            lower += w * at(c)?;
        }
        hi = lo;
    }
    Ok(LpIdentity { lhs: upper + lower, rhs, c_max, cells: grid.cells(), levels })
}

const TAIL_LEVEL: f64 = 1e-12;
const LOW_NODES: usize = 6;
const LOW_PANELS: usize = 20;
