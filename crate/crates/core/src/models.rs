//! Analytic ground-truth densities with exact level-set geometry.

use std::f64::consts::PI;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::asymptotics::gaussian::{std_normal_cdf, std_normal_quantile};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::field::{Field, Interval};
use crate::rng;

/// A boundary point of a d = 1 level set and the signed slope `f′` there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Crossing {
    pub z: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    /// A circle of radius `radius` around `center` on which `|∇f| = slope`.
    Radial { center: Vec<f64>, radius: f64, slope: f64 },
    /// Finitely many points on the line.
    Crossings { points: Vec<Crossing> },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelSetGeometry {
    pub level: f64,
    pub boundary: Boundary,
    /// `P{X ∈ C(c)}`
    pub coverage: f64,
    /// Lebesgue measure of `C(c)`.
    pub measure: f64,
    /// `C(c)` as intervals (d = 1 only).
    pub intervals: Vec<Interval>,
}

impl LevelSetGeometry {
    /// Smallest boundary slope `inf |f′|` over the boundary.
    pub fn min_slope(&self) -> f64 {
        match &self.boundary {
            Boundary::Radial { slope, .. } => *slope,
            Boundary::Crossings { points } => {
                points.iter().map(|p| p.slope.abs()).fold(f64::INFINITY, f64::min)
            }
        }
    }
}

/// A density with gradient, sampler and (for the built-ins) closed-form
/// level-set geometry.
pub trait DensityModel: Field {
    fn name(&self) -> String;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    /// `sup f`.
    fn sup_density(&self) -> f64;

    /// A point around which polar integration is centred.
    fn center(&self) -> Vec<f64>;

    /// Appends `n` i.i.d. draws to `out`.
    fn sample_into(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>);

    fn geometry(&self, c: f64) -> Result<LevelSetGeometry> {
        let _ = c;
        Err(Error::Unsupported(format!("no closed-form geometry for model '{}'", self.name())))
    }

    /// `∫_{f ≥ c} f`.
    fn coverage(&self, c: f64) -> Result<f64> {
        Ok(self.geometry(c)?.coverage)
    }

    /// Closed-form inverse of `coverage`, when available.
    fn level_from_coverage_exact(&self, alpha: f64) -> Option<f64> {
        let _ = alpha;
        None
    }
}

/// `n` seeded i.i.d. draws.
pub fn sample(model: &dyn DensityModel, n: usize, seed: u64) -> Points {
    let mut r = rng::stream(seed, rng::POINT_STREAM);
    let mut out = Vec::with_capacity(n * model.dim());
    model.sample_into(&mut r, n, &mut out);
    Points::new(model.dim(), out).expect("sampler emits whole points")
}

/// Checks `0 < c < sup f`.
pub fn check_level(model: &dyn DensityModel, c: f64) -> Result<()> {
    let sup = model.sup_density();
    if !(c > 0.0 && c < sup) {
        return Err(Error::invalid(format!(
            "level c = {c} outside the admissible window (0, sup f = {sup})"
        )));
    }
    Ok(())
}

/// The level `c` with `∫_{f ≥ c} f = α`; closed form for the built-ins,
/// otherwise bisection on `c` to 1e-10 in coverage.
pub fn level_from_coverage(model: &dyn DensityModel, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("coverage α = {alpha} outside (0, 1)")));
    }
    if let Some(c) = model.level_from_coverage_exact(alpha) {
        return Ok(c);
    }
    let (mut lo, mut hi) = (0.0, model.sup_density());
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cov = model.coverage(mid)?;
        if (cov - alpha).abs() <= 1e-10 {
            return Ok(mid);
        }
        // coverage decreases in c
        if cov > alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= f64::EPSILON * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn gaussian_draws(rng: &mut ChaCha8Rng, mean: &[f64], n: usize, out: &mut Vec<f64>) {
    out.reserve(n * mean.len());
    for _ in 0..n {
        for m in mean {
            let z: f64 = rng.sample(StandardNormal);
            out.push(m + z);
        }
    }
}

/// Chord of the closed ball `|x − center| ≤ radius` on the line
/// `origin + t·dir`, clipped to `[t0, t1]`.
pub fn ball_chord(
    center: &[f64],
    radius: f64,
    origin: &[f64],
    dir: &[f64],
    t0: f64,
    t1: f64,
) -> Option<Interval> {
    // |o − m + t d|² ≤ r²  ⇔  a t² + 2 b t + q ≤ 0
    let mut a = 0.0;
    let mut b = 0.0;
    let mut q = -radius * radius;
    for ((o, m), d) in origin.iter().zip(center).zip(dir) {
        let w = o - m;
        a += d * d;
        b += w * d;
        q += w * w;
    }
    let disc = b * b - a * q;
    if disc < 0.0 || a == 0.0 {
        return None;
    }
    let root = disc.sqrt();
    let lo = ((-b - root) / a).max(t0);
    let hi = ((-b + root) / a).min(t1);
    (hi > lo).then_some((lo, hi))
}

/// Bivariate standard normal, optionally translated.
#[derive(Debug, Clone, PartialEq)]
pub struct Gauss2d {
    pub mean: [f64; 2],
}

impl Default for Gauss2d {
    fn default() -> Self {
        Self { mean: [0.0, 0.0] }
    }
}

impl Gauss2d {
    pub fn shifted(dx: f64, dy: f64) -> Self {
        Self { mean: [dx, dy] }
    }

    /// `r(c) = √(−2 ln(2πc))`.
    pub fn radius(c: f64) -> Result<f64> {
        if !(c > 0.0 && c < 1.0 / (2.0 * PI)) {
            return Err(Error::invalid(format!("level c = {c} outside (0, 1/(2π))")));
        }
        Ok((-2.0 * (2.0 * PI * c).ln()).sqrt())
    }
}

/// The bivariate standard normal model.
pub fn make_gauss2d() -> Gauss2d {
    Gauss2d::default()
}

impl Field for Gauss2d {
    fn dim(&self) -> usize {
        2
    }

    fn value(&self, x: &[f64]) -> f64 {
        let dx = x[0] - self.mean[0];
        let dy = x[1] - self.mean[1];
        (-0.5 * (dx * dx + dy * dy)).exp() / (2.0 * PI)
    }

    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64> {
        let off = (center[0] - self.mean[0]).hypot(center[1] - self.mean[1]);
        Some(off + Gauss2d::radius(level).unwrap_or(0.0))
    }

    fn resolution(&self) -> f64 {
        0.05
    }

    fn total_mass(&self) -> Option<f64> {
        Some(1.0)
    }

    fn superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> Vec<Interval> {
        if level <= 0.0 {
            return vec![(t0, t1)];
        }
        match Gauss2d::radius(level) {
            Ok(r) => ball_chord(&self.mean, r, origin, dir, t0, t1).into_iter().collect(),
            Err(_) => Vec::new(),
        }
    }
}

impl DensityModel for Gauss2d {
    fn name(&self) -> String {
        if self.mean == [0.0, 0.0] {
            "gauss2d".into()
        } else {
            format!("gauss2d+({},{})", self.mean[0], self.mean[1])
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let f = self.value(x);
        vec![-(x[0] - self.mean[0]) * f, -(x[1] - self.mean[1]) * f]
    }

    fn sup_density(&self) -> f64 {
        1.0 / (2.0 * PI)
    }

    fn center(&self) -> Vec<f64> {
        self.mean.to_vec()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
        gaussian_draws(rng, &self.mean, n, out);
    }

    fn geometry(&self, c: f64) -> Result<LevelSetGeometry> {
        let r = Gauss2d::radius(c)?;
        Ok(LevelSetGeometry {
            level: c,
            boundary: Boundary::Radial { center: self.mean.to_vec(), radius: r, slope: r * c },
            coverage: 1.0 - 2.0 * PI * c,
            measure: PI * r * r,
            intervals: Vec::new(),
        })
    }

    fn level_from_coverage_exact(&self, alpha: f64) -> Option<f64> {
        Some((1.0 - alpha) / (2.0 * PI))
    }
}

/// Univariate standard normal, optionally translated.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Gauss1d {
    pub mean: f64,
}

impl Gauss1d {
    /// Half-width `√(−2 ln(c√(2π)))` of the level set.
    pub fn half_width(c: f64) -> Result<f64> {
        let sup = 1.0 / (2.0 * PI).sqrt();
        if !(c > 0.0 && c < sup) {
            return Err(Error::invalid(format!("level c = {c} outside (0, 1/√(2π))")));
        }
        Ok((-2.0 * (c * (2.0 * PI).sqrt()).ln()).sqrt())
    }
}

/// The univariate standard normal model.
pub fn make_gauss1d() -> Gauss1d {
    Gauss1d::default()
}

impl Field for Gauss1d {
    fn dim(&self) -> usize {
        1
    }

    fn value(&self, x: &[f64]) -> f64 {
        let z = x[0] - self.mean;
        (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
    }

    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64> {
        Some((center[0] - self.mean).abs() + Gauss1d::half_width(level).unwrap_or(0.0))
    }

    fn resolution(&self) -> f64 {
        0.05
    }

    fn total_mass(&self) -> Option<f64> {
        Some(1.0)
    }

    fn superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> Vec<Interval> {
        if level <= 0.0 {
            return vec![(t0, t1)];
        }
        match Gauss1d::half_width(level) {
            Ok(z) => ball_chord(&[self.mean], z, origin, dir, t0, t1).into_iter().collect(),
            Err(_) => Vec::new(),
        }
    }
}

impl DensityModel for Gauss1d {
    fn name(&self) -> String {
        if self.mean == 0.0 {
            "gauss1d".into()
        } else {
            format!("gauss1d+{}", self.mean)
        }
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![-(x[0] - self.mean) * self.value(x)]
    }

    fn sup_density(&self) -> f64 {
        1.0 / (2.0 * PI).sqrt()
    }

    fn center(&self) -> Vec<f64> {
        vec![self.mean]
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
        gaussian_draws(rng, &[self.mean], n, out);
    }

    fn geometry(&self, c: f64) -> Result<LevelSetGeometry> {
        let z = Gauss1d::half_width(c)?;
        Ok(LevelSetGeometry {
            level: c,
            boundary: Boundary::Crossings {
                points: vec![
                    Crossing { z: self.mean - z, slope: z * c },
                    Crossing { z: self.mean + z, slope: -z * c },
                ],
            },
            coverage: 2.0 * std_normal_cdf(z) - 1.0,
            measure: 2.0 * z,
            intervals: vec![(self.mean - z, self.mean + z)],
        })
    }

    fn level_from_coverage_exact(&self, alpha: f64) -> Option<f64> {
        let z = std_normal_quantile(0.5 * (1.0 + alpha)).ok()?;
        Some((-0.5 * z * z).exp() / (2.0 * PI).sqrt())
    }
}

/// Built-in model by name.
pub fn model_by_name(name: &str) -> Result<Box<dyn DensityModel>> {
    match name {
        "gauss2d" => Ok(Box::new(make_gauss2d())),
        "gauss1d" => Ok(Box::new(make_gauss1d())),
        other => Err(Error::invalid(format!(
            "unknown model '{other}' (expected gauss2d or gauss1d)"
        ))),
    }
}
