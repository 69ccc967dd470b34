//! Line-based integrators: rays, scanlines and the real line.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    band_width, check_common, enclosing_radius, finish, Diagnostics, IntegratorKind,
    MultiCrossingPolicy, SymmDiffResult, WeightKind, DEFAULT_BAND_MULTIPLIER,
};
use crate::error::{Error, Result};
use crate::field::{boundary_count, intersection, symmetric_difference, Field, Interval};
use crate::models::DensityModel;
use crate::quadrature;

const WEIGHT_NODES: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RadialOptions {
    pub angles: usize,
    pub band_multiplier: f64,
    pub policy: MultiCrossingPolicy,
}

impl Default for RadialOptions {
    fn default() -> Self {
        Self { angles: 1024, band_multiplier: DEFAULT_BAND_MULTIPLIER, policy: MultiCrossingPolicy::Segments }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanOptions {
    /// Line spacing; `None` uses a quarter of the estimate's resolution.
    pub spacing: Option<f64>,
    pub band_multiplier: f64,
}

impl Default for ScanOptions {
    fn default() -> Self {
        Self { spacing: None, band_multiplier: DEFAULT_BAND_MULTIPLIER }
    }
}

#[derive(Clone, Copy)]
enum Jacobian {
    /// `dt`
    Unit,
    /// `t dt` (polar rays from the origin of the line)
    Radial,
}

struct LineOutcome {
    value: f64,
    inside_band: f64,
    est_boundaries: usize,
    truth_boundaries: usize,
}

struct Line<'a> {
    est: &'a dyn Field,
    truth: &'a dyn Field,
    c: f64,
    weight: WeightKind,
    jacobian: Jacobian,
    band: f64,
    max_piece: f64,
}

impl Line<'_> {
    fn segment(&self, origin: &[f64], dir: &[f64], lo: f64, hi: f64) -> f64 {
        match (self.weight, self.jacobian) {
            (WeightKind::Lebesgue, Jacobian::Unit) => hi - lo,
            (WeightKind::Lebesgue, Jacobian::Radial) => 0.5 * (hi - lo) * (hi + lo),
            _ => {
                let pieces = ((hi - lo) / self.max_piece).ceil().max(1.0) as usize;
                let gl = quadrature::rule(WEIGHT_NODES);
                let step = (hi - lo) / pieces as f64;
                let mut x = vec![0.0; origin.len()];
                let mut total = 0.0;
                for k in 0..pieces {
                    let a = lo + k as f64 * step;
                    let b = if k + 1 == pieces { hi } else { a + step };
                    total += gl.integrate(a, b, |t| {
                        for ((xi, o), d) in x.iter_mut().zip(origin).zip(dir) {
                            *xi = o + t * d;
                        }
                        let g = self.weight.eval(self.truth.value(&x), self.c);
                        match self.jacobian {
                            Jacobian::Unit => g,
                            Jacobian::Radial => g * t,
                        }
                    });
                }
                total
            }
        }
    }

    fn run(&self, origin: &[f64], dir: &[f64], t0: f64, t1: f64) -> LineOutcome {
        let a = self.est.superlevel_on_line(origin, dir, t0, t1, self.c);
        let b = self.truth.superlevel_on_line(origin, dir, t0, t1, self.c);
        let pieces: Vec<Interval> = symmetric_difference(&a, &b).into_iter().map(|(iv, _)| iv).collect();
        let value = pieces.iter().map(|&(lo, hi)| self.segment(origin, dir, lo, hi)).sum();
        let inside_band = if self.band > 0.0 {
            let lower = if self.c - self.band <= 0.0 {
                vec![(t0, t1)]
            } else {
                self.truth.superlevel_on_line(origin, dir, t0, t1, self.c - self.band)
            };
            let upper = self.truth.superlevel_on_line(origin, dir, t0, t1, self.c + self.band);
            let band: Vec<Interval> = symmetric_difference(&lower, &upper).into_iter().map(|(iv, _)| iv).collect();
            intersection(&pieces, &band).iter().map(|&(lo, hi)| self.segment(origin, dir, lo, hi)).sum()
        } else {
            value
        };
        LineOutcome {
            value,
            inside_band,
            est_boundaries: boundary_count(&a, t0, t1),
            truth_boundaries: boundary_count(&b, t0, t1),
        }
    }
}

fn require_dim(est: &dyn Field, dim: usize, what: &str) -> Result<()> {
    if est.dim() != dim {
        return Err(Error::Unsupported(format!("{what} integrator needs d = {dim} (got d = {})", est.dim())));
    }
    Ok(())
}

/// Polar integration around the model centre: `angles` equally spaced
/// rays, each integrated exactly out to a radius that contains both
/// superlevel sets.
pub fn symmdiff_radial(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
    opts: &RadialOptions,
) -> Result<SymmDiffResult> {
    check_common(est, truth, c)?;
    require_dim(est, 2, "radial")?;
    if opts.angles == 0 {
        return Err(Error::invalid("radial integrator needs at least one angle"));
    }
    let center = truth.center();
    let reach = enclosing_radius(est, truth, &center, c)?;
    let band = band_width(est, opts.band_multiplier);
    let line = Line {
        est,
        truth,
        c,
        weight,
        jacobian: Jacobian::Radial,
        band,
        max_piece: 4.0 * truth.resolution(),
    };
    let d_theta = 2.0 * PI / opts.angles as f64;
    let outcomes: Vec<LineOutcome> = (0..opts.angles)
        .into_par_iter()
        .map(|j| {
            let th = (j as f64 + 0.5) * d_theta;
            line.run(&center, &[th.cos(), th.sin()], 0.0, reach)
        })
        .collect();
    let mut diag = Diagnostics { band_width: band, lines: opts.angles, ..Default::default() };
    let mut value = 0.0;
    let mut inside = 0.0;
    for o in &outcomes {
        value += o.value;
        inside += o.inside_band;
        diag.crossing_mismatches += usize::from(o.est_boundaries != o.truth_boundaries);
        diag.multi_crossings += usize::from(o.est_boundaries > 1);
        diag.no_crossings += usize::from(o.est_boundaries == 0);
    }
    value *= d_theta;
    diag.outside_band = (value - inside * d_theta).max(0.0);
    if opts.policy == MultiCrossingPolicy::FailoverToGrid && diag.multi_crossings * 100 > opts.angles {
        let mut res = super::symmdiff_grid(est, truth, c, weight, &super::GridOptions::default())?;
        res.diagnostics.failover = true;
        res.diagnostics.multi_crossings = diag.multi_crossings;
        return Ok(res);
    }
    finish(value, weight, c, IntegratorKind::Radial, diag, est, truth)
}

/// Parallel scanlines across the disc that contains both superlevel sets
/// (d = 2), combined by the midpoint rule in the line offset.
pub fn symmdiff_scan(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
    opts: &ScanOptions,
) -> Result<SymmDiffResult> {
    check_common(est, truth, c)?;
    require_dim(est, 2, "scan")?;
    let spacing = opts.spacing.unwrap_or(0.25 * est.resolution());
    if !(spacing > 0.0) {
        return Err(Error::invalid(format!("scanline spacing {spacing} must be positive")));
    }
    let center = truth.center();
    let reach = enclosing_radius(est, truth, &center, c)?;
    let band = band_width(est, opts.band_multiplier);
    let line = Line {
        est,
        truth,
        c,
        weight,
        jacobian: Jacobian::Unit,
        band,
        max_piece: 4.0 * truth.resolution(),
    };
    let count = ((2.0 * reach / spacing).ceil() as usize).max(1);
    let step = 2.0 * reach / count as f64;
    let outcomes: Vec<LineOutcome> = (0..count)
        .into_par_iter()
        .map(|k| {
            let off = -reach + (k as f64 + 0.5) * step;
            let half = (reach * reach - off * off).max(0.0).sqrt();
            line.run(&[center[0] + off, center[1] - half], &[0.0, 1.0], 0.0, 2.0 * half)
        })
        .collect();
    let mut diag = Diagnostics { band_width: band, lines: count, ..Default::default() };
    let mut value = 0.0;
    let mut inside = 0.0;
    for o in &outcomes {
        value += o.value;
        inside += o.inside_band;
        diag.crossing_mismatches += usize::from(o.est_boundaries != o.truth_boundaries);
    }
    value *= step;
    diag.outside_band = (value - inside * step).max(0.0);
    finish(value, weight, c, IntegratorKind::Scan, diag, est, truth)
}

/// Exact integration along the real line (d = 1).
pub fn symmdiff_1d(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
) -> Result<SymmDiffResult> {
    check_common(est, truth, c)?;
    require_dim(est, 1, "line")?;
    let center = truth.center();
    let reach = enclosing_radius(est, truth, &center, c)?;
    let band = band_width(est, DEFAULT_BAND_MULTIPLIER);
    let line = Line {
        est,
        truth,
        c,
        weight,
        jacobian: Jacobian::Unit,
        band,
        max_piece: 4.0 * truth.resolution(),
    };
    let o = line.run(&[center[0] - reach], &[1.0], 0.0, 2.0 * reach);
    let diag = Diagnostics {
        band_width: band,
        lines: 1,
        crossing_mismatches: usize::from(o.est_boundaries != o.truth_boundaries),
        multi_crossings: usize::from(o.est_boundaries > o.truth_boundaries),
        no_crossings: usize::from(o.est_boundaries == 0),
        outside_band: (o.value - o.inside_band).max(0.0),
        ..Default::default()
    };
    finish(o.value, weight, c, IntegratorKind::Line, diag, est, truth)
}
