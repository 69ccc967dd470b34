//! Univariate and bivariate standard normal probabilities, and the
//! covariance kernels of indicator transforms of correlated Gaussians.
//!
//! `Φ` is evaluated as `erfc(-x/√2)/2` using the musl-derived `libm::erfc`,
//! which is accurate to about one ulp; the absolute error of `Φ` is below
//! 1e-16 everywhere.
//!
//! The bivariate distribution function uses the single-integral form
//!
//! ```text
//! Φ₂(h, k; ρ) = Φ(h)Φ(k) + (1/2π) ∫₀^ρ (1 − r²)^{−1/2} exp(−(h² − 2hkr + k²) / (2(1 − r²))) dr
//! ```
//!
//! after the substitution `r = sin φ`, which removes the endpoint singularity
//! at `|ρ| = 1`. The remaining smooth integral is done by adaptive
//! Gauss–Legendre to 1e-13 absolute.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};
use crate::quadrature;

const PHI2_TOL: f64 = 1e-13;

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * FRAC_1_SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Inverse of `Φ`: rational initial guess (Acklam) refined by Halley steps
/// against `std_normal_cdf`.
pub fn std_normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!("quantile level {p} outside (0, 1)")));
    }
    const A: [f64; 6] = [
        -3.969_683_028_665_376e1,
        2.209_460_984_245_205e2,
        -2.759_285_104_469_687e2,
        1.383_577_518_672_69e2,
        -3.066_479_806_614_716e1,
        2.506_628_277_459_239,
    ];
    const B: [f64; 5] = [
        -5.447_609_879_822_406e1,
        1.615_858_368_580_409e2,
        -1.556_989_798_598_866e2,
        6.680_131_188_771_972e1,
        -1.328_068_155_288_572e1,
    ];
    const C: [f64; 6] = [
        -7.784_894_002_430_293e-3,
        -3.223_964_580_411_365e-1,
        -2.400_758_277_161_838,
        -2.549_732_539_343_734,
        4.374_664_141_464_968,
        2.938_163_982_698_783,
    ];
    const D: [f64; 4] = [
        7.784_695_709_041_462e-3,
        3.224_671_290_700_398e-1,
        2.445_134_137_142_996,
        3.754_408_661_907_416,
    ];
    let p_low = 0.02425;
    let mut x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    for _ in 0..3 {
        let e = std_normal_cdf(x) - p;
        let u = e / std_normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

fn check_rho(rho: f64) -> Result<()> {
    if rho.is_nan() || rho.abs() > 1.0 {
        return Err(Error::invalid(format!("correlation {rho} outside [-1, 1]")));
    }
    Ok(())
}

/// `P(Z₁ ≤ h, Z₂ ≤ k)` for standard normals with correlation `rho`.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    check_rho(rho)?;
    let base = std_normal_cdf(h) * std_normal_cdf(k);
    if rho == 0.0 {
        return Ok(base);
    }
    let hk = h * k;
    let diff2 = (h - k) * (h - k);
    let sum2 = (h + k) * (h + k);
    // exponent (h² − 2hk sinφ + k²) / (2cos²φ), rearranged to stay finite
    // as |sinφ| → 1
    let integrand = |phi: f64| {
        let s = phi.sin();
        let c2 = phi.cos().powi(2);
        let expo = if s >= 0.0 {
            0.5 * (diff2 / c2 + 2.0 * hk / (1.0 + s))
        } else {
            0.5 * (sum2 / c2 - 2.0 * hk / (1.0 - s))
        };
        if expo.is_finite() {
            (-expo).exp()
        } else {
            0.0
        }
    };
    let upper = rho.asin();
    let integral = quadrature::adaptive(0.0, upper, PHI2_TOL * 2.0 * PI, integrand)?;
    Ok((base + integral / (2.0 * PI)).clamp(0.0, 1.0))
}

/// Orthant probability `P(Z₁ ≤ −|u|, W ≤ −|u|)` with `corr(Z₁, W) = rho`.
pub fn phi2_orthant(u: f64, rho: f64) -> Result<f64> {
    let a = -u.abs();
    bivariate_normal_cdf(a, a, rho)
}

/// Covariance of the two indicator transforms at a common threshold,
/// `Φ₂(−|u|, −|u|; ρ) − Φ(−|u|)²`.
///
/// For `u > 0` both transforms are `I{· < −u}`; for `u < 0` both are
/// `I{· ≥ −u}`, and the point symmetry of the centred bivariate normal maps
/// that case onto the first one.
pub fn upsilon(u: f64, rho: f64) -> Result<f64> {
    let p = std_normal_cdf(-u.abs());
    Ok(phi2_orthant(u, rho)? - p * p)
}

/// Covariance of `|I{Z₁ ≥ a} − I{0 ≥ a}|` and `|I{W ≥ b} − I{0 ≥ b}|` with
/// `corr(Z₁, W) = rho`; the two-threshold form of `upsilon`.
pub fn indicator_covariance(a: f64, b: f64, rho: f64) -> Result<f64> {
    // the event for threshold a is {Z < a} when a ≤ 0 and {Z ≥ a} otherwise;
    // both read as {s·Z ≤ −|a|} for a sign s
    let sa = if a <= 0.0 { 1.0 } else { -1.0 };
    let sb = if b <= 0.0 { 1.0 } else { -1.0 };
    let joint = bivariate_normal_cdf(-a.abs(), -b.abs(), sa * sb * rho)?;
    Ok(joint - std_normal_cdf(-a.abs()) * std_normal_cdf(-b.abs()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_reference_values() {
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-16);
        assert!((std_normal_cdf(-1.0) - 0.158_655_253_931_457_05).abs() < 1e-15);
        assert!((std_normal_cdf(1.959_963_984_540_054) - 0.975).abs() < 1e-15);
        assert!((std_normal_cdf(-8.0) - 6.220_960_574_271_785e-16).abs() < 1e-25);
    }

    #[test]
    fn quantile_inverts_cdf() {
        for &p in &[1e-12, 1e-6, 0.01, 0.3, 0.5, 0.8413, 0.975, 0.999_999] {
            let x = std_normal_quantile(p).unwrap();
            assert!((std_normal_cdf(x) - p).abs() < 1e-14 * p.max(1e-3), "{p}");
        }
        assert!(std_normal_quantile(0.0).is_err());
        assert!(std_normal_quantile(1.0).is_err());
    }

    #[test]
    fn sheppard_identity_at_origin() {
        for &rho in &[-0.9, -0.3, 0.0, 0.5, 0.99] {
            let v = bivariate_normal_cdf(0.0, 0.0, rho).unwrap();
            let exact = 0.25 + rho.asin() / (2.0 * PI);
            assert!((v - exact).abs() < 1e-12, "rho={rho}");
        }
        let v = phi2_orthant(0.0, 0.5).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_correlations() {
        let p = std_normal_cdf(-1.0);
        assert!((phi2_orthant(1.0, 1.0).unwrap() - p).abs() < 1e-12);
        assert!((phi2_orthant(-1.0, 1.0).unwrap() - p).abs() < 1e-12);
        assert!((phi2_orthant(1.3, 0.0).unwrap() - std_normal_cdf(-1.3).powi(2)).abs() < 1e-15);
        // P(Z ≤ -1, -Z ≤ -1) = 0
        assert!(phi2_orthant(1.0, -1.0).unwrap().abs() < 1e-12);
        assert!(bivariate_normal_cdf(0.0, 0.0, 1.5).is_err());
    }

    #[test]
    fn upsilon_boundary_values() {
        for i in 0..20 {
            let u = -4.0 + 0.4 * i as f64;
            let p = std_normal_cdf(-u.abs());
            assert!(upsilon(u, 0.0).unwrap().abs() < 1e-15);
            assert!((upsilon(u, 1.0).unwrap() - p * (1.0 - p)).abs() < 1e-12);
        }
        assert!((upsilon(0.0, 1.0).unwrap() - 0.25).abs() < 1e-12);
    }

    #[test]
    fn two_threshold_form_reduces_to_upsilon() {
        for &u in &[-2.0, -0.5, 0.0, 0.7, 2.5] {
            for &rho in &[0.0, 0.3, 0.9, 1.0] {
                let a = indicator_covariance(-u, -u, rho).unwrap();
                let b = upsilon(u, rho).unwrap();
                assert!((a - b).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn general_cdf_matches_symmetric_limits() {
        // P(Z1 ≤ h, Z2 ≤ +∞) = Φ(h)
        let v = bivariate_normal_cdf(0.3, 40.0, 0.6).unwrap();
        assert!((v - std_normal_cdf(0.3)).abs() < 1e-12);
        // exchangeability
        let a = bivariate_normal_cdf(-0.4, 1.1, -0.35).unwrap();
        let b = bivariate_normal_cdf(1.1, -0.4, -0.35).unwrap();
        assert!((a - b).abs() < 1e-14);
        // P(Z1 ≤ h, Z2 ≤ k) + P(Z1 ≤ h, Z2 > k) = Φ(h)
        let c = bivariate_normal_cdf(-0.4, -1.1, 0.35).unwrap();
        let d = std_normal_cdf(-0.4) - c;
        let e = bivariate_normal_cdf(-0.4, 1.1, -0.35).unwrap();
        assert!((d - e).abs() < 1e-12);
    }
}
