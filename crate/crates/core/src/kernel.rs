//! Compactly supported kernels on the closed ball of radius 1/2, their L2
//! norms and the normalized autocorrelation
//!
//! ```text
//! ρ(t) = ∫ K(u) K(u + t) du / ∫ K²(u) du
//! ```
//!
//! Two kernels are built in for d = 1 and d = 2: the uniform density on the
//! ball (`BoxBall`) and the normalized biweight-type profile
//! `C·(1 − (2|u|)²)²` (`RadialPolynomial`). Custom profiles can be supplied
//! as closures; their functionals are computed by Gauss–Legendre quadrature
//! with 64 nodes per axis.

use std::f64::consts::PI;
use std::fmt;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;

/// Support radius of every admissible kernel.
pub const SUPPORT_RADIUS: f64 = 0.5;

const RHO_TABLE_SIZE: usize = 1024;
const CUSTOM_NODES: usize = 64;
const MASS_TOL: f64 = 1e-6;
const MOMENT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KernelKind {
    BoxBall,
    RadialPolynomial,
    Custom,
}

impl KernelKind {
    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "box" | "box-ball" => Ok(KernelKind::BoxBall),
            "radpoly" | "radial-polynomial" => Ok(KernelKind::RadialPolynomial),
            other => Err(Error::invalid(format!(
                "unknown kernel '{other}' (expected box or radpoly)"
            ))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::BoxBall => "box",
            KernelKind::RadialPolynomial => "radpoly",
            KernelKind::Custom => "custom",
        }
    }
}

type Profile = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// A kernel profile together with its cached functionals.
#[derive(Clone)]
pub struct Kernel {
    dim: usize,
    kind: KernelKind,
    /// peak value κ for the built-ins; normalizing constant C for radpoly
    scale: f64,
    l2_norm_sq: f64,
    radial: bool,
    custom: Option<Profile>,
    rho_table: Arc<OnceLock<Vec<f64>>>,
}

impl fmt::Debug for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Kernel")
            .field("dim", &self.dim)
            .field("kind", &self.kind)
            .field("l2_norm_sq", &self.l2_norm_sq)
            .finish()
    }
}

/// Volume of the ball of radius 1/2 in R^d for d = 1, 2.
fn half_ball_volume(dim: usize) -> f64 {
    match dim {
        1 => 1.0,
        _ => PI / 4.0,
    }
}

fn check_builtin_dim(dim: usize) -> Result<()> {
    if dim == 1 || dim == 2 {
        Ok(())
    } else {
        Err(Error::Unsupported(format!(
            "built-in kernels exist for d = 1, 2 only (got d = {dim})"
        )))
    }
}

impl Kernel {
    /// Uniform density on the closed ball of radius 1/2.
    pub fn box_ball(dim: usize) -> Result<Self> {
        check_builtin_dim(dim)?;
        let kappa = 1.0 / half_ball_volume(dim);
        Ok(Self {
            dim,
            kind: KernelKind::BoxBall,
            scale: kappa,
            l2_norm_sq: kappa,
            radial: true,
            custom: None,
            rho_table: Arc::new(OnceLock::new()),
        })
    }

    /// `C·(1 − 4|u|²)²` on the ball of radius 1/2.
    pub fn radial_polynomial(dim: usize) -> Result<Self> {
        check_builtin_dim(dim)?;
        // ∫(1 − 4|u|²)² du = 8/15 (d = 1), π/12 (d = 2);
        // ∫(1 − 4|u|²)⁴ du = 128/315 (d = 1), π/20 (d = 2)
        let (norm, norm4) = match dim {
            1 => (8.0 / 15.0, 128.0 / 315.0),
            _ => (PI / 12.0, PI / 20.0),
        };
        let c = 1.0 / norm;
        Ok(Self {
            dim,
            kind: KernelKind::RadialPolynomial,
            scale: c,
            l2_norm_sq: c * c * norm4,
            radial: true,
            custom: None,
            rho_table: Arc::new(OnceLock::new()),
        })
    }

    pub fn builtin(kind: KernelKind, dim: usize) -> Result<Self> {
        match kind {
            KernelKind::BoxBall => Self::box_ball(dim),
            KernelKind::RadialPolynomial => Self::radial_polynomial(dim),
            KernelKind::Custom => Err(Error::invalid("custom kernels need a profile")),
        }
    }

    /// Wraps a user profile. `radial` declares the profile to depend on |u|
    /// only, which the variance routines require. The L2 norm is computed
    /// by quadrature and must converge.
    pub fn custom<F>(dim: usize, radial: bool, profile: F) -> Result<Self>
    where
        F: Fn(&[f64]) -> f64 + Send + Sync + 'static,
    {
        check_builtin_dim(dim)?;
        let profile: Profile = Arc::new(profile);
        let coarse = integrate_over_ball(dim, SUPPORT_RADIUS, CUSTOM_NODES, |u| {
            let k = profile(u);
            k * k
        });
        let fine = integrate_over_ball(dim, SUPPORT_RADIUS, 2 * CUSTOM_NODES, |u| {
            let k = profile(u);
            k * k
        });
        if !(coarse.is_finite() && (coarse - fine).abs() <= 1e-8 * fine.abs().max(1e-300)) {
            return Err(Error::Quadrature(format!(
                "∫K² did not converge for custom kernel ({coarse} vs {fine})"
            )));
        }
        Ok(Self {
            dim,
            kind: KernelKind::Custom,
            scale: f64::NAN,
            l2_norm_sq: fine,
            radial,
            custom: Some(profile),
            rho_table: Arc::new(OnceLock::new()),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn is_radial(&self) -> bool {
        self.radial
    }

    /// True when the profile is constant on its support.
    pub fn is_piecewise_constant(&self) -> bool {
        self.kind == KernelKind::BoxBall
    }

    /// Peak value `sup K`.
    pub fn peak(&self) -> f64 {
        match self.kind {
            KernelKind::BoxBall | KernelKind::RadialPolynomial => self.scale,
            KernelKind::Custom => {
                let mut best: f64 = 0.0;
                let gl = quadrature::rule(CUSTOM_NODES);
                for_each_tensor_node(self.dim, gl, -SUPPORT_RADIUS, SUPPORT_RADIUS, |u, _| {
                    best = best.max(self.eval(u).abs());
                });
                best
            }
        }
    }

    /// `K(u)`.
    pub fn eval(&self, u: &[f64]) -> f64 {
        match &self.custom {
            Some(p) => p(u),
            None => self.eval_radial_sq(u.iter().map(|x| x * x).sum()),
        }
    }

    /// `K(u)` for built-in kernels given `|u|²`.
    #[inline]
    pub fn eval_radial_sq(&self, r2: f64) -> f64 {
        if r2 > SUPPORT_RADIUS * SUPPORT_RADIUS {
            return 0.0;
        }
        match self.kind {
            KernelKind::BoxBall => self.scale,
            KernelKind::RadialPolynomial => {
                let v = 1.0 - 4.0 * r2;
                self.scale * v * v
            }
            KernelKind::Custom => {
                let mut u = vec![0.0; self.dim];
                u[0] = r2.sqrt();
                self.eval(&u)
            }
        }
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.l2_norm_sq
    }

    /// `‖K‖₂`.
    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq.sqrt()
    }

    /// Normalized autocorrelation at offset `t`.
    pub fn rho(&self, t: &[f64]) -> f64 {
        let tau = t.iter().map(|x| x * x).sum::<f64>().sqrt();
        if tau >= 2.0 * SUPPORT_RADIUS {
            return 0.0;
        }
        if self.radial {
            self.rho_radial(tau)
        } else {
            self.rho_by_quadrature(t)
        }
    }

    /// `ρ` as a function of `|t|`; requires a radial kernel.
    pub fn rho_radial(&self, tau: f64) -> f64 {
        let tau = tau.abs();
        if tau >= 1.0 {
            return 0.0;
        }
        match (self.kind, self.dim) {
            (KernelKind::BoxBall, 1) => 1.0 - tau,
            (KernelKind::BoxBall, _) => {
                // lens area of two discs of radius 1/2 at distance τ over π/4
                2.0 / PI * (tau.acos() - tau * (1.0 - tau * tau).sqrt())
            }
            _ => {
                let table = self.rho_table.get_or_init(|| self.build_rho_table());
                // cubic Lagrange on the four nodes i − 1 ..= i + 2
                let last = RHO_TABLE_SIZE as isize - 1;
                let x = tau * last as f64;
                let i = (x.floor() as isize).clamp(1, last - 2);
                let f = x - i as f64;
                let at = |k: isize| table[k as usize];
                let (a, b, c, d) = (at(i - 1), at(i), at(i + 1), at(i + 2));
                -f * (f - 1.0) * (f - 2.0) / 6.0 * a + (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0 * b
                    - (f + 1.0) * f * (f - 2.0) / 2.0 * c
                    + (f + 1.0) * f * (f - 1.0) / 6.0 * d
            }
        }
    }

    fn build_rho_table(&self) -> Vec<f64> {
        (0..RHO_TABLE_SIZE)
            .map(|i| {
                let tau = i as f64 / (RHO_TABLE_SIZE - 1) as f64;
                if i == 0 {
                    1.0
                } else if i == RHO_TABLE_SIZE - 1 {
                    0.0
                } else {
                    self.radial_autocorrelation(tau) / self.l2_norm_sq
                }
            })
            .collect()
    }

    /// `∫K(u)K(u + τe₁)du` for radial kernels by iterated quadrature over
    /// the lens-shaped overlap of the two supports.
    fn radial_autocorrelation(&self, tau: f64) -> f64 {
        let r = SUPPORT_RADIUS;
        let k2 = |x: f64, y: f64| {
            self.eval_radial_sq(x * x + y * y) * self.eval_radial_sq((x + tau) * (x + tau) + y * y)
        };
        match self.dim {
            1 => quadrature::rule(CUSTOM_NODES).integrate(-r, r - tau, |x| k2(x, 0.0)),
            _ => {
                // supports centred at 0 and −τe₁ overlap on x ∈ [−r, r − τ];
                // the disc at 0 binds left of x = −τ/2, the shifted one right of it
                let inner = quadrature::rule(16);
                let outer = quadrature::rule(CUSTOM_NODES);
                let slice = |x: f64| {
                    let half = if x <= -0.5 * tau {
                        (r * r - x * x).max(0.0).sqrt()
                    } else {
                        (r * r - (x + tau) * (x + tau)).max(0.0).sqrt()
                    };
                    inner.integrate(-half, half, |y| k2(x, y))
                };
                outer.integrate(-r, -0.5 * tau, slice) + outer.integrate(-0.5 * tau, r - tau, slice)
            }
        }
    }

    fn rho_by_quadrature(&self, t: &[f64]) -> f64 {
        let gl = quadrature::rule(CUSTOM_NODES);
        let mut acc = 0.0;
        let mut shifted = vec![0.0; self.dim];
        for_each_tensor_node(self.dim, gl, -SUPPORT_RADIUS, SUPPORT_RADIUS, |u, w| {
            for (s, (ui, ti)) in shifted.iter_mut().zip(u.iter().zip(t)) {
                *s = ui + ti;
            }
            acc += w * self.eval(u) * self.eval(&shifted);
        });
        acc / self.l2_norm_sq
    }

    /// Draws a point from the kernel density (used for smoothed-bootstrap
    /// sampling of a fitted estimate).
    pub fn sample_unit<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let peak = self.peak();
        loop {
            let u: Vec<f64> = (0..self.dim)
                .map(|_| rng.random_range(-SUPPORT_RADIUS..=SUPPORT_RADIUS))
                .collect();
            let k = self.eval(&u);
            if k > 0.0 && rng.random::<f64>() * peak <= k {
                return u;
            }
        }
    }
}

/// Visits tensor Gauss–Legendre nodes on [lo, hi]^d (d = 1, 2).
fn for_each_tensor_node<F: FnMut(&[f64], f64)>(
    dim: usize,
    gl: &quadrature::GaussLegendre,
    lo: f64,
    hi: f64,
    mut f: F,
) {
    let nodes: Vec<(f64, f64)> = gl.mapped(lo, hi).collect();
    match dim {
        1 => {
            for &(x, w) in &nodes {
                f(&[x], w);
            }
        }
        _ => {
            for &(x, wx) in &nodes {
                for &(y, wy) in &nodes {
                    f(&[x, y], wx * wy);
                }
            }
        }
    }
}

/// ∫ over the ball of radius `radius` centred at 0: an interval split at
/// ±1/2 in d = 1, polar Gauss–Legendre split at radius 1/2 in d = 2.
fn integrate_over_ball<F: FnMut(&[f64]) -> f64>(
    dim: usize,
    radius: f64,
    nodes: usize,
    mut f: F,
) -> f64 {
    let breaks = [-SUPPORT_RADIUS, SUPPORT_RADIUS];
    match dim {
        1 => quadrature::integrate_piecewise(nodes, -radius, radius, &breaks, |x| f(&[x])),
        _ => {
            let angular = quadrature::rule(nodes);
            quadrature::integrate_piecewise(nodes, 0.0, radius, &[SUPPORT_RADIUS], |r| {
                r * angular.integrate(0.0, 2.0 * PI, |th| f(&[r * th.cos(), r * th.sin()]))
            })
        }
    }
}

/// `‖K‖₂`; analytic for built-in kinds, quadrature otherwise.
pub fn kernel_l2_norm(k: &Kernel) -> f64 {
    k.l2_norm()
}

/// Normalized autocorrelation `ρ(t)`.
pub fn rho(k: &Kernel, t: &[f64]) -> f64 {
    k.rho(t)
}

/// An assumption a kernel fails to satisfy.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    pub assumption: &'static str,
    pub detail: String,
}

/// Checks the support, mass, boundedness, nonnegativity and first-moment
/// conditions numerically. An empty list means the kernel is admissible.
pub fn validate_kernel(k: &Kernel) -> Vec<Violation> {
    let mut out = Vec::new();
    let dim = k.dim;

    // probe the shell 1/2 < |u| ≤ 2 along a fan of directions
    let directions: Vec<Vec<f64>> = match dim {
        1 => vec![vec![1.0], vec![-1.0]],
        _ => (0..256)
            .map(|i| {
                let th = 2.0 * PI * (i as f64 + 0.5) / 256.0;
                vec![th.cos(), th.sin()]
            })
            .collect(),
    };
    let mut outer_radius = SUPPORT_RADIUS;
    let mut leaked = false;
    let probes = 2048;
    for dir in &directions {
        let at = |r: f64| -> Vec<f64> { dir.iter().map(|d| d * r).collect() };
        let mut last_nonzero: Option<usize> = None;
        for j in 1..=probes {
            let r = SUPPORT_RADIUS + 1.5 * j as f64 / probes as f64;
            if k.eval(&at(r)) != 0.0 {
                last_nonzero = Some(j);
            }
        }
        if let Some(j) = last_nonzero {
            leaked = true;
            // bisect for the edge of the support along this direction
            let step = 1.5 / probes as f64;
            let mut lo = SUPPORT_RADIUS + step * j as f64;
            let mut hi = lo + step;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if k.eval(&at(mid)) != 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            outer_radius = outer_radius.max(lo);
        }
    }
    if leaked {
        out.push(Violation {
            assumption: "kernel support",
            detail: format!("nonzero values up to |u| ≈ {outer_radius:.6} > 1/2"),
        });
    }

    let mut negative = false;
    let mut unbounded = false;
    let mass = integrate_over_ball(dim, outer_radius, CUSTOM_NODES, |u| {
        let v = k.eval(u);
        negative |= v < 0.0;
        unbounded |= !v.is_finite();
        v
    });
    if unbounded {
        out.push(Violation {
            assumption: "kernel bounded",
            detail: "non-finite kernel values".into(),
        });
    }
    if negative {
        out.push(Violation {
            assumption: "kernel nonnegative",
            detail: "kernel takes negative values".into(),
        });
    }
    if !unbounded && (mass - 1.0).abs() > MASS_TOL {
        out.push(Violation {
            assumption: "kernel mass",
            detail: format!("∫K = {mass:.9}"),
        });
    }

    let moment = integrate_over_ball(dim, outer_radius, CUSTOM_NODES, |u| {
        u.iter().sum::<f64>() * k.eval(u)
    });
    if !unbounded && moment.abs() > MOMENT_TOL {
        out.push(Violation {
            assumption: "kernel first moment",
            detail: format!("Σᵢ∫tᵢK(t)dt = {moment:.3e}"),
        });
    }
    out
}
