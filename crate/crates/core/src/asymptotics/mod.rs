//! Normalizing rates, limiting variances and the mean constant of the
//! symmetric-difference functional.
//!
//! All variances are deterministic Gauss–Legendre quadratures of the
//! covariance kernel
//!
//! ```text
//! Υ(u, ρ) = P(Z₁ ≤ −|u|, W ≤ −|u|) − Φ(−|u|)²,   corr(Z₁, W) = ρ
//! ```
//!
//! over the normal offset `u` (truncated at |u| ≤ 8, where `Φ(−8) < 1e-15`)
//! and the kernel lag `t` (unit ball). With `u = s|f′|/(√c‖K‖₂)` the
//! variance for a boundary with `γ = 0` factorizes into
//!
//! ```text
//! σ² = Σ_boundary  g₁² (√c‖K‖₂/|f′|)^{1+2p} ∫∫ |u|^{2p} Υ(u, ρ(t)) dt du
//! ```
//!
//! summed over crossing points (d = 1) or integrated over a circle of
//! perimeter `2πr` (d = 2, radial), where `p = 1/γ_g` and `g₁` is the weight's
//! boundary factor: 1 for Lebesgue, `|f′|^p` for `|f − c|^p`, `c` for `g = f`.

pub mod gaussian;

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::levelset::WeightKind;
use crate::models::{Boundary, Crossing, DensityModel};
use crate::quadrature;

pub use gaussian::{indicator_covariance, phi2_orthant, upsilon};

/// Truncation of the normal-offset integrals.
pub const U_MAX: f64 = 8.0;
/// Default Gauss–Legendre nodes per axis.
pub const DEFAULT_NODES: usize = 64;

/// `a_{n,G} = (n/h)^{1/4}·(n h)^{inv_gamma/2}`.
pub fn norming(n: f64, h: f64, inv_gamma: f64) -> f64 {
    (n / h).powf(0.25) * (n * h).powf(0.5 * inv_gamma)
}

/// Finite-n proxy `√(n h^{1+2/d})` for the limit `γ`.
pub fn gamma_proxy(n: f64, h: f64, dim: usize) -> f64 {
    (n * h.powf(1.0 + 2.0 / dim as f64)).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum BoundaryShape {
    /// A circle of radius `radius` with `|∇f| = slope` on it.
    Radial { radius: f64, slope: f64 },
    /// Crossing points on the line.
    Crossings(Vec<Crossing>),
}

/// Parameters of the limit theorem for one level.
#[derive(Debug, Clone)]
pub struct AsymptoticSpec {
    pub level: f64,
    pub kernel: Kernel,
    pub gamma: f64,
    pub weight: WeightKind,
    pub boundary: BoundaryShape,
    /// Weights `c_j` of identical boundary components.
    pub components: Vec<f64>,
    pub nodes: usize,
}

impl AsymptoticSpec {
    /// Spec for `model` at level `c`; `gamma` must be 0 in d = 1.
    pub fn from_model(
        model: &dyn DensityModel,
        c: f64,
        kernel: &Kernel,
        weight: WeightKind,
        gamma: f64,
    ) -> Result<Self> {
        if kernel.dim() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), got: kernel.dim() });
        }
        crate::models::check_level(model, c)?;
        let geom = model.geometry(c)?;
        let boundary = match geom.boundary {
            Boundary::Radial { radius, slope, .. } => BoundaryShape::Radial { radius, slope },
            Boundary::Crossings { points } => BoundaryShape::Crossings(points),
        };
        let spec = Self {
            level: c,
            kernel: kernel.clone(),
            gamma,
            weight,
            boundary,
            components: vec![1.0],
            nodes: DEFAULT_NODES,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(Error::invalid(format!("γ = {} must be ≥ 0", self.gamma)));
        }
        if self.kernel.dim() == 1 && self.gamma != 0.0 {
            return Err(Error::invalid("γ must be 0 in dimension 1"));
        }
        if !(self.level > 0.0) {
            return Err(Error::invalid(format!("level c = {} must be positive", self.level)));
        }
        if self.components.is_empty() {
            return Err(Error::invalid("at least one boundary component is required"));
        }
        Ok(())
    }

    fn component_factor(&self) -> f64 {
        self.components.iter().map(|c| c * c).sum()
    }

    fn sqrt_c_norm(&self) -> f64 {
        self.level.sqrt() * self.kernel.l2_norm()
    }

    /// Boundary factor `g₁` of the weight at a slope `|f′|`.
    fn g1(&self, slope: f64) -> f64 {
        match self.weight {
            WeightKind::Lebesgue => 1.0,
            WeightKind::ExcessPower(p) => slope.powf(p),
            WeightKind::Density => self.level,
        }
    }

    fn radial(&self) -> Result<(f64, f64)> {
        match &self.boundary {
            BoundaryShape::Radial { radius, slope } => Ok((*radius, *slope)),
            _ => Err(Error::Unsupported("this variance needs a radially symmetric boundary".into())),
        }
    }

    fn crossings(&self) -> Result<&[Crossing]> {
        match &self.boundary {
            BoundaryShape::Crossings(points) if points.is_empty() => {
                Err(Error::invalid("boundary has no crossing points"))
            }
            BoundaryShape::Crossings(points) => Ok(points),
            _ => Err(Error::Unsupported("this variance needs a d = 1 boundary".into())),
        }
    }

    fn require_radial_kernel(&self) -> Result<()> {
        if self.kernel.is_radial() {
            Ok(())
        } else {
            Err(Error::Unsupported("variance formulas need a radial kernel".into()))
        }
    }
}

/// Tabulates `Υ(u, ρ(τ))` on Gauss–Legendre nodes of `u ∈ [0, 8]` and
/// `τ ∈ [0, 1]`.
struct UpsilonTable {
    u: Vec<(f64, f64)>,
    tau: Vec<(f64, f64)>,
    values: Vec<f64>,
}

impl UpsilonTable {
    fn new(kernel: &Kernel, nodes: usize) -> Result<Self> {
        let gl = quadrature::rule(nodes);
        let u: Vec<(f64, f64)> = gl.mapped(0.0, U_MAX).collect();
        let tau: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
        let mut values = Vec::with_capacity(u.len() * tau.len());
        for &(ui, _) in &u {
            for &(tj, _) in &tau {
                values.push(upsilon(ui, kernel.rho_radial(tj))?);
            }
        }
        Ok(Self { u, tau, values })
    }

    /// `Σ w_u w_τ u^power τ^tau_power Υ`.
    fn moment(&self, power: f64, tau_power: i32) -> f64 {
        let mut total = 0.0;
        for (i, &(ui, wu)) in self.u.iter().enumerate() {
            let mut inner = 0.0;
            for (j, &(tj, wt)) in self.tau.iter().enumerate() {
                inner += wt * tj.powi(tau_power) * self.values[i * self.tau.len() + j];
            }
            total += wu * ui.powf(power) * inner;
        }
        total
    }
}

/// `∫_ℝ ∫_{|t| ≤ 1, t ∈ ℝ²} |u|^power Υ(u, ρ(|t|)) dt du`.
pub fn radial_moment(kernel: &Kernel, power: f64, nodes: usize) -> Result<f64> {
    Ok(2.0 * 2.0 * PI * UpsilonTable::new(kernel, nodes)?.moment(power, 1))
}

/// `∫_ℝ ∫_{−1}^{1} |u|^power Υ(u, ρ(t)) dt du`.
pub fn line_moment(kernel: &Kernel, power: f64, nodes: usize) -> Result<f64> {
    Ok(2.0 * 2.0 * UpsilonTable::new(kernel, nodes)?.moment(power, 0))
}

/// Limiting variance of the Lebesgue functional for a radial boundary with
/// `γ = 0`: `2πr·(√c‖K‖₂/|f′|)·∫∫Υ`, which is
/// `(4π²‖K‖₂/√c)·2∫₀^∞∫₀^1 Υ(u, ρ(τ))τ dτ du` for the bivariate normal.
pub fn sigma2_lebesgue_radial(spec: &AsymptoticSpec) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    if spec.weight != WeightKind::Lebesgue {
        return Err(Error::invalid("sigma2_lebesgue_radial needs the Lebesgue weight"));
    }
    if spec.gamma != 0.0 {
        return Err(Error::Unsupported("γ > 0 needs sigma2_general_radial".into()));
    }
    let (radius, slope) = spec.radial()?;
    let j = radial_moment(&spec.kernel, 0.0, spec.nodes)?;
    Ok(spec.component_factor() * 2.0 * PI * radius * spec.sqrt_c_norm() / slope * j)
}

/// Limiting variance for a radial boundary, any built-in weight and any
/// `γ ≥ 0`. With `γ = 0` the substituted product form is used; otherwise
/// the full integrand is integrated directly.
pub fn sigma2_general_radial(spec: &AsymptoticSpec) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    let (radius, slope) = spec.radial()?;
    if spec.gamma > 0.0 {
        return sigma2_radial_direct(spec, spec.nodes);
    }
    let p = spec.weight.inv_gamma();
    let j = radial_moment(&spec.kernel, 2.0 * p, spec.nodes)?;
    let g1 = spec.g1(slope);
    let scale = spec.sqrt_c_norm() / slope;
    Ok(spec.component_factor() * 2.0 * PI * radius * g1 * g1 * scale.powf(1.0 + 2.0 * p) * j)
}

/// The radial variance integrated in the original variables: normal offset
/// `s`, lag `t = τ(cos φ, sin φ)` over the unit disc, and the boundary
/// angle absorbed by rotational symmetry (factor `2πr`). The offset
/// integral is split where either indicator threshold changes sign.
pub fn sigma2_radial_direct(spec: &AsymptoticSpec, nodes: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    let (radius, slope) = spec.radial()?;
    let sc = spec.sqrt_c_norm();
    let gamma = spec.gamma;
    let s_max = U_MAX * sc / slope;
    let gl = quadrature::rule(nodes);
    let taus: Vec<(f64, f64)> = gl.mapped(0.0, 1.0).collect();
    let phis: Vec<(f64, f64)> = gl.mapped(0.0, 2.0 * PI).collect();
    let mut total = 0.0;
    for &(tau, wt) in &taus {
        let rho = spec.kernel.rho_radial(tau);
        for &(phi, wp) in &phis {
            // inward normal at angle 0 is −e₁, so u·t = −τ cos φ
            let shift = -gamma * tau * phi.cos();
            let mut cuts = [-s_max - shift.abs(), 0.0, -shift, s_max + shift.abs()];
            cuts.sort_by(f64::total_cmp);
            let mut inner = 0.0;
            for w in cuts.windows(2) {
                if w[1] <= w[0] {
                    continue;
                }
                for (s, ws) in gl.mapped(w[0], w[1]) {
                    let a = -s * slope / sc;
                    let b = -(s + shift) * slope / sc;
                    let weight = match spec.weight {
                        WeightKind::Lebesgue => 1.0,
                        WeightKind::Density => spec.level * spec.level,
                        WeightKind::ExcessPower(p) => {
                            s.abs().powf(p) * slope.powf(2.0 * p) * (s + shift).abs().powf(p)
                        }
                    };
                    if weight == 0.0 {
                        continue;
                    }
                    inner += ws * weight * indicator_covariance(a, b, rho)?;
                }
            }
            total += wt * wp * tau * inner;
        }
    }
    Ok(spec.component_factor() * 2.0 * PI * radius * total)
}

/// Lebesgue variance for a radial boundary by direct quadrature of the
/// triple integral `(√c‖K‖₂ r/|f′|)∫_ℝ ∫₀^{2π} ∫_B Υ(u, ρ(t)) dt dθ du`
/// with the lag integrated over the unit disc in Cartesian coordinates.
pub fn sigma2_lebesgue_triple(spec: &AsymptoticSpec, nodes: usize, angles: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    let (radius, slope) = spec.radial()?;
    let gl = quadrature::rule(nodes);
    let mut total = 0.0;
    for j in 0..angles {
        // the integrand is free of the boundary angle; integrate it anyway
        let theta = 2.0 * PI * (j as f64 + 0.5) / angles as f64;
        let (st, ct) = theta.sin_cos();
        let mut slice = 0.0;
        for (lo, hi) in [(-U_MAX, 0.0), (0.0, U_MAX)] {
            for (u, wu) in gl.mapped(lo, hi) {
                let mut disc = 0.0;
                // quadrants, so the cusp of ρ at t = 0 sits on panel corners
                for (xa, xb) in [(-1.0, 0.0), (0.0, 1.0)] {
                    for (x, wx) in gl.mapped(xa, xb) {
                        let half = (1.0 - x * x).max(0.0).sqrt();
                        for (ya, yb) in [(-half, 0.0), (0.0, half)] {
                            for (y, wy) in gl.mapped(ya, yb) {
                                // lag rotated into the boundary frame at θ
                                let t = [ct * x - st * y, st * x + ct * y];
                                disc += wx * wy * upsilon(u, spec.kernel.rho(&t))?;
                            }
                        }
                    }
                }
                slice += wu * disc;
            }
        }
        total += slice * 2.0 * PI / angles as f64;
    }
    Ok(spec.component_factor() * radius * spec.sqrt_c_norm() / slope * total)
}

/// Closed reduction of the `|f − c|` variance for the bivariate normal,
/// `2π√c‖K‖₂³ ∫∫u²Υ`.
pub fn sigma2_excess_closed_gauss2d(c: f64, kernel: &Kernel, nodes: usize) -> Result<f64> {
    let j = radial_moment(kernel, 2.0, nodes)?;
    Ok(2.0 * PI * c.sqrt() * kernel.l2_norm().powi(3) * j)
}

/// Limiting variance in d = 1 by the substituted form
/// `Σᵢ g₁ᵢ²(√c‖K‖₂/|f′(zᵢ)|)^{1+2p} ∫∫|u|^{2p}Υ(u, ρ(t)) dt du`.
pub fn sigma2_1d(spec: &AsymptoticSpec) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    let points = spec.crossings()?;
    let p = spec.weight.inv_gamma();
    let j = line_moment(&spec.kernel, 2.0 * p, spec.nodes)?;
    let sc = spec.sqrt_c_norm();
    let sum: f64 = points
        .iter()
        .map(|z| {
            let slope = z.slope.abs();
            let g1 = spec.g1(slope);
            g1 * g1 * (sc / slope).powf(1.0 + 2.0 * p)
        })
        .sum();
    Ok(spec.component_factor() * sum * j)
}

/// The d = 1 variance integrated in the original offset variable `s`.
pub fn sigma2_1d_direct(spec: &AsymptoticSpec, nodes: usize) -> Result<f64> {
    spec.validate()?;
    spec.require_radial_kernel()?;
    let points = spec.crossings()?;
    let p = spec.weight.inv_gamma();
    let sc = spec.sqrt_c_norm();
    let gl = quadrature::rule(nodes);
    let mut total = 0.0;
    for z in points {
        let slope = z.slope.abs();
        let g1 = spec.g1(slope);
        let s_max = U_MAX * sc / slope;
        let mut acc = 0.0;
        for (lo, hi) in [(-s_max, 0.0), (0.0, s_max)] {
            for (s, ws) in gl.mapped(lo, hi) {
                let u = s * slope / sc;
                let mut inner = 0.0;
                for (tlo, thi) in [(-1.0, 0.0), (0.0, 1.0)] {
                    for (t, wt) in gl.mapped(tlo, thi) {
                        inner += wt * upsilon(u, spec.kernel.rho_radial(t))?;
                    }
                }
                acc += ws * s.abs().powf(2.0 * p) * inner;
            }
        }
        total += g1 * g1 * acc;
    }
    Ok(spec.component_factor() * total)
}

/// Limiting variance for whichever boundary the spec carries.
pub fn sigma2(spec: &AsymptoticSpec) -> Result<f64> {
    match spec.boundary {
        BoundaryShape::Radial { .. } => sigma2_general_radial(spec),
        BoundaryShape::Crossings(_) => sigma2_1d(spec),
    }
}

/// Limit of `√(n h)·λ(C_n Δ C)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanLimitConstant {
    /// `‖K‖₂√(2c/π)·∫_β dH/|∇f|`
    pub general: f64,
    /// `2‖K‖₂√(2π/c)`, the bivariate normal closed form
    pub closed: Option<f64>,
}

/// The mean constant from the boundary: perimeter over slope for a radial
/// boundary, `Σᵢ 1/|f′(zᵢ)|` in d = 1. `gauss2d` marks the bivariate
/// normal, for which the closed form is also returned.
pub fn mean_limit_constant(spec: &AsymptoticSpec, gauss2d: bool) -> Result<MeanLimitConstant> {
    let norm = spec.kernel.l2_norm();
    let c = spec.level;
    let boundary_integral = match &spec.boundary {
        BoundaryShape::Radial { radius, slope } => 2.0 * PI * radius / slope,
        BoundaryShape::Crossings(_) => spec.crossings()?.iter().map(|z| 1.0 / z.slope.abs()).sum(),
    };
    let general = norm * (2.0 * c / PI).sqrt() * boundary_integral;
    let closed = gauss2d.then(|| 2.0 * norm * (2.0 * PI / c).sqrt());
    Ok(MeanLimitConstant { general, closed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Field;
    use crate::models::{make_gauss1d, make_gauss2d};

    fn spec2(c: f64, weight: WeightKind) -> AsymptoticSpec {
        AsymptoticSpec::from_model(&make_gauss2d(), c, &Kernel::box_ball(2).unwrap(), weight, 0.0).unwrap()
    }

    #[test]
    fn norming_values() {
        assert!((norming(1e4, 0.01, 0.0) - 31.622_776_601_683_793).abs() < 1e-12);
        let (n, h) = (5e4, 1.36e-3);
        assert!((norming(n, h, 1.0) - (n * n * n * h).powf(0.25)).abs() < 1e-9 * norming(n, h, 1.0));
        assert_eq!(norming(1.0, 1.0, 2.5), 1.0);
        for &g in &[0.0, 0.5, 1.0, 2.0] {
            let a = norming(n, h, g);
            let expect = (n / h).sqrt() * (n * h).powf(g);
            assert!((a * a - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn general_equals_lebesgue_route() {
        let s = spec2(1.0 / (4.0 * PI), WeightKind::Lebesgue);
        let a = sigma2_lebesgue_radial(&s).unwrap();
        let b = sigma2_general_radial(&s).unwrap();
        assert!(a > 0.0 && a.is_finite());
        assert!((a - b).abs() <= 1e-10 * a);
    }

    #[test]
    fn gauss2d_prefactor_form() {
        // (4π²‖K‖₂/√c)·2∫₀^8∫₀^1 Υτ
        let c = 0.02;
        let s = spec2(c, WeightKind::Lebesgue);
        let k = Kernel::box_ball(2).unwrap();
        let gl = quadrature::rule(64);
        let mut j = 0.0;
        for (u, wu) in gl.mapped(0.0, U_MAX) {
            for (t, wt) in gl.mapped(0.0, 1.0) {
                j += wu * wt * t * upsilon(u, k.rho_radial(t)).unwrap();
            }
        }
        let expect = 4.0 * PI * PI * k.l2_norm() / c.sqrt() * 2.0 * j;
        assert!((sigma2_lebesgue_radial(&s).unwrap() - expect).abs() < 1e-12 * expect);
    }

    #[test]
    fn scales_as_inverse_sqrt_c() {
        // fix Υ and ‖K‖₂ by holding the moment; 2πr/|f′| = 2π/c for the
        // bivariate normal, so σ²·√c is constant
        let a = sigma2_lebesgue_radial(&spec2(0.01, WeightKind::Lebesgue)).unwrap();
        let b = sigma2_lebesgue_radial(&spec2(0.04, WeightKind::Lebesgue)).unwrap();
        assert!((a * 0.1 - b * 0.2).abs() < 1e-12 * a);
    }

    #[test]
    fn components_add() {
        let mut s = spec2(0.02, WeightKind::Lebesgue);
        let one = sigma2_general_radial(&s).unwrap();
        s.components = vec![1.0; 3];
        assert!((sigma2_general_radial(&s).unwrap() - 3.0 * one).abs() < 1e-12 * one);
        s.components = vec![2.0, 0.5];
        assert!((sigma2_general_radial(&s).unwrap() - 4.25 * one).abs() < 1e-12 * one);
    }

    #[test]
    fn excess_closed_matches_general() {
        let c = 1.0 / (4.0 * PI);
        let s = spec2(c, WeightKind::ExcessPower(1.0));
        let a = sigma2_general_radial(&s).unwrap();
        let b = sigma2_excess_closed_gauss2d(c, &s.kernel, 64).unwrap();
        assert!((a - b).abs() < 1e-12 * a);
    }

    #[test]
    fn one_d_routes_agree() {
        let m = make_gauss1d();
        let c = m.value(&[1.0]);
        let k = Kernel::box_ball(1).unwrap();
        let s = AsymptoticSpec::from_model(&m, c, &k, WeightKind::Lebesgue, 0.0).unwrap();
        let sub = sigma2_1d(&s).unwrap();
        let direct = sigma2_1d_direct(&s, 64).unwrap();
        assert!((sub - direct).abs() < 1e-3 * sub);
        // σ² = 2·(√c‖K‖₂/c)·J
        let j = line_moment(&k, 0.0, 64).unwrap();
        assert!((sub - 2.0 * c.sqrt() / c * j).abs() < 1e-12 * sub);
        let mut s1 = s.clone();
        if let BoundaryShape::Crossings(p) = &mut s1.boundary {
            p.truncate(1);
        }
        assert!((sigma2_1d(&s1).unwrap() * 2.0 - sub).abs() < 1e-12 * sub);
        let mut s0 = s.clone();
        s0.boundary = BoundaryShape::Crossings(Vec::new());
        assert!(sigma2_1d(&s0).is_err());
        assert!(AsymptoticSpec::from_model(&m, c, &k, WeightKind::Lebesgue, 0.3).is_err());
    }

    #[test]
    fn mean_limit_routes_agree() {
        let c = 1.0 / (4.0 * PI);
        let s = spec2(c, WeightKind::Lebesgue);
        let k = mean_limit_constant(&s, true).unwrap();
        let closed = k.closed.unwrap();
        assert!((closed - 8.0 * PI * 2f64.sqrt() / PI.sqrt()).abs() < 1e-12);
        assert!((closed - 20.053).abs() < 1e-3);
        assert!((k.general - closed).abs() < 1e-12 * closed);
        let k2 = mean_limit_constant(&spec2(0.5 * c, WeightKind::Lebesgue), true).unwrap();
        assert!((k2.closed.unwrap() - 2f64.sqrt() * closed).abs() < 1e-12 * closed);
    }

    #[test]
    fn direct_route_reduces_at_zero_gamma() {
        let c = 0.02;
        for w in [WeightKind::Lebesgue, WeightKind::ExcessPower(1.0), WeightKind::Density] {
            let s = spec2(c, w);
            let a = sigma2_general_radial(&s).unwrap();
            let b = sigma2_radial_direct(&s, 32).unwrap();
            assert!((a - b).abs() < 2e-3 * a, "{w:?}: {a} vs {b}");
        }
    }

    #[test]
    fn positive_gamma_is_finite_and_positive() {
        let mut s = spec2(0.02, WeightKind::Lebesgue);
        s.gamma = 0.5;
        let v = sigma2_general_radial(&AsymptoticSpec { nodes: 24, ..s }).unwrap();
        assert!(v > 0.0 && v.is_finite());
    }

    #[test]
    fn upsilon_monotone_and_bounded() {
        for i in 0..20 {
            let u = -3.0 + 0.3 * i as f64;
            let mut prev = -1.0;
            for j in 0..20 {
                let rho = j as f64 / 19.0;
                let v = upsilon(u, rho).unwrap();
                assert!((-1e-15..=0.25 + 1e-15).contains(&v));
                assert!(v >= prev - 1e-14);
                prev = v;
            }
        }
    }

    #[test]
    fn gamma_proxy_values() {
        assert!((gamma_proxy(100.0, 0.5, 2) - (100.0f64 * 0.25).sqrt()).abs() < 1e-12);
    }
}
