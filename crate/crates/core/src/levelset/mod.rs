//! Plug-in level sets and the weighted symmetric-difference functional
//!
//! ```text
//! d_G(C_n, C) = ∫ |I{f_n(x) ≥ c} − I{f(x) ≥ c}| g(x) dx
//! ```
//!
//! Every integrator reduces the problem to lines: along a ray or scanline
//! both superlevel sets are exact unions of intervals (see
//! [`Field::superlevel_on_line`]), their symmetric difference is integrated
//! against the weight, and the line results are combined by an outer rule.
//!
//! | integrator | lines                      | outer rule                    |
//! |------------|----------------------------|-------------------------------|
//! | radial     | rays from the model centre | midpoint in angle, `r dr`     |
//! | scan       | parallel lines (d = 2)     | midpoint in the offset        |
//! | line       | the real line (d = 1)      | none                          |
//! | grid       | none (pointwise cells)     | midpoint rule on a cell grid  |
//!
//! The integration range always covers both superlevel sets completely, so
//! no contribution is dropped. The concentration band `|f − c| ≤ w`,
//! `w = ς√(ln n)/√(n h)`, is only reported as a diagnostic.

mod grid;
mod lines;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::models::DensityModel;

pub use grid::{lp_identity_check, symmdiff_grid, GridOptions};
pub use lines::{symmdiff_1d, symmdiff_radial, symmdiff_scan, RadialOptions, ScanOptions};

/// Default band multiplier ς.
pub const DEFAULT_BAND_MULTIPLIER: f64 = 4.0;

/// The weight `g` of the measure `G`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "p", rename_all = "snake_case")]
pub enum WeightKind {
    /// `g ≡ 1`
    Lebesgue,
    /// `g = |f − c|^p`
    ExcessPower(f64),
    /// `g = f`
    Density,
}

impl WeightKind {
    pub fn excess_power(p: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(Error::invalid(format!("excess power p = {p} must be ≥ 0")));
        }
        Ok(WeightKind::ExcessPower(p))
    }

    /// `lebesgue`, `density`, `excess` (p = 1) or `excess:<p>`.
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "lebesgue" => Ok(WeightKind::Lebesgue),
            "density" => Ok(WeightKind::Density),
            "excess" => Ok(WeightKind::ExcessPower(1.0)),
            other => match other.strip_prefix("excess:") {
                Some(p) => Self::excess_power(
                    p.parse().map_err(|_| Error::invalid(format!("bad excess power '{p}'")))?,
                ),
                None => Err(Error::invalid(format!(
                    "unknown weight '{other}' (expected lebesgue, density, excess or excess:<p>)"
                ))),
            },
        }
    }

    pub fn name(&self) -> String {
        match self {
            WeightKind::Lebesgue => "lebesgue".into(),
            WeightKind::Density => "density".into(),
            WeightKind::ExcessPower(p) => format!("excess:{p}"),
        }
    }

    /// `1/γ_g`: `p` for excess powers, 0 otherwise.
    pub fn inv_gamma(&self) -> f64 {
        match self {
            WeightKind::ExcessPower(p) => *p,
            _ => 0.0,
        }
    }

    /// `g` at a point where the true density is `f`.
    #[inline]
    pub fn eval(&self, f: f64, c: f64) -> f64 {
        match self {
            WeightKind::Lebesgue => 1.0,
            WeightKind::ExcessPower(p) => (f - c).abs().powf(*p),
            WeightKind::Density => f,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    Radial,
    Scan,
    Line,
    Grid,
}

impl IntegratorKind {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "radial" => Ok(IntegratorKind::Radial),
            "scan" => Ok(IntegratorKind::Scan),
            "line" => Ok(IntegratorKind::Line),
            "grid" => Ok(IntegratorKind::Grid),
            other => Err(Error::invalid(format!(
                "unknown integrator '{other}' (expected radial, scan, line or grid)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            IntegratorKind::Radial => "radial",
            IntegratorKind::Scan => "scan",
            IntegratorKind::Line => "line",
            IntegratorKind::Grid => "grid",
        }
    }
}

/// What to do when many rays cross the level more than once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MultiCrossingPolicy {
    /// Integrate every segment between successive crossings.
    #[default]
    Segments,
    /// Re-evaluate on a grid when more than 1% of rays cross more than once.
    FailoverToGrid,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Band half-width `w` in density units (0 when the estimate carries no
    /// sample size).
    pub band_width: f64,
    /// Rays or scanlines integrated.
    pub lines: usize,
    /// Lines on which the estimate boundary count differs from the truth's.
    pub crossing_mismatches: usize,
    /// Rays on which the estimate crosses the level more than once.
    pub multi_crossings: usize,
    /// Rays on which the estimate does not cross the level.
    pub no_crossings: usize,
    /// Part of the value coming from outside the band.
    pub outside_band: f64,
    /// Grid cells evaluated.
    pub grid_cells: usize,
    /// The radial result was replaced by a grid evaluation.
    pub failover: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SymmDiffResult {
    pub value: f64,
    pub weight: WeightKind,
    pub level: f64,
    pub integrator: IntegratorKind,
    pub diagnostics: Diagnostics,
}

impl IntegratorKind {
    /// Scanlines in d = 2, the real line in d = 1.
    pub fn default_for(dim: usize) -> Self {
        if dim == 1 {
            IntegratorKind::Line
        } else {
            IntegratorKind::Scan
        }
    }
}

/// `d_G` with the named integrator and its default options.
pub fn symmdiff(
    est: &dyn Field,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
    integrator: IntegratorKind,
) -> Result<SymmDiffResult> {
    match integrator {
        IntegratorKind::Radial => symmdiff_radial(est, truth, c, weight, &RadialOptions::default()),
        IntegratorKind::Scan => symmdiff_scan(est, truth, c, weight, &ScanOptions::default()),
        IntegratorKind::Line => symmdiff_1d(est, truth, c, weight),
        IntegratorKind::Grid => symmdiff_grid(est, truth, c, weight, &GridOptions::default()),
    }
}

static BOUND_CHECKS: AtomicU64 = AtomicU64::new(0);
static BOUND_VIOLATIONS: AtomicU64 = AtomicU64::new(0);

/// `(checks, violations)` of the Lebesgue measure bound since process start.
pub fn measure_bound_stats() -> (u64, u64) {
    (BOUND_CHECKS.load(Ordering::Relaxed), BOUND_VIOLATIONS.load(Ordering::Relaxed))
}

/// `λ(C_n Δ C) ≤ (∫f_n + ∫f)/c`, which is `2/c` for a fixed-n estimate.
fn check_measure_bound(value: f64, est: &dyn Field, truth: &dyn Field, c: f64) -> Result<()> {
    let (Some(a), Some(b)) = (est.total_mass(), truth.total_mass()) else {
        return Ok(());
    };
    let bound = (a + b) / c;
    BOUND_CHECKS.fetch_add(1, Ordering::Relaxed);
    if value > bound {
        BOUND_VIOLATIONS.fetch_add(1, Ordering::Relaxed);
        return Err(Error::Invariant(format!(
            "symmetric-difference measure {value} exceeds (∫f_n + ∫f)/c = {bound}"
        )));
    }
    Ok(())
}

/// `w = ς√(ln n)/√(n h)`.
pub fn band_half_width(n: usize, h: f64, multiplier: f64) -> f64 {
    multiplier * (n as f64).ln().sqrt() / (n as f64 * h).sqrt()
}

/// [`band_half_width`] from the estimate's sample metadata.
pub fn band_width(est: &dyn Field, multiplier: f64) -> f64 {
    match est.sample_info() {
        Some((n, h)) if n > 1 => band_half_width(n, h, multiplier),
        _ => 0.0,
    }
}

fn finish(
    value: f64,
    weight: WeightKind,
    c: f64,
    integrator: IntegratorKind,
    diagnostics: Diagnostics,
    est: &dyn Field,
    truth: &dyn Field,
) -> Result<SymmDiffResult> {
    if !(value >= 0.0 && value.is_finite()) {
        return Err(Error::Integrator(format!("symmetric difference evaluated to {value}")));
    }
    if weight == WeightKind::Lebesgue {
        check_measure_bound(value, est, truth, c)?;
    }
    Ok(SymmDiffResult { value, weight, level: c, integrator, diagnostics })
}

fn check_common(est: &dyn Field, truth: &dyn Field, c: f64) -> Result<()> {
    if est.dim() != truth.dim() {
        return Err(Error::DimensionMismatch { expected: truth.dim(), got: est.dim() });
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("level c = {c} must be positive")));
    }
    Ok(())
}

/// Radius around `center` containing both superlevel sets with a margin,
/// so no boundary falls on the end of a line.
fn enclosing_radius(est: &dyn Field, truth: &dyn Field, center: &[f64], c: f64) -> Result<f64> {
    let a = est.superlevel_radius(center, c).ok_or_else(|| {
        Error::Unsupported("estimate has no bounded superlevel set at this level".into())
    })?;
    let b = truth.superlevel_radius(center, c).ok_or_else(|| {
        Error::Unsupported("truth has no bounded superlevel set at this level".into())
    })?;
    Ok(a.max(b) + est.resolution().max(truth.resolution()))
}
