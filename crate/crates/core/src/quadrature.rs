//! Gauss–Legendre rules and a small adaptive integrator built on them.
//!
//! Rules are computed once per node count by Newton iteration on the
//! Legendre recurrence and cached for the lifetime of the process.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use crate::error::{Error, Result};

/// An n-point Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss–Legendre rule needs at least one node");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let nf = n as f64;
        for i in 0..n.div_ceil(2) {
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped onto [a, b].
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(&x, &w)| (mid + half * x, half * w))
    }

    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached rule with `n` nodes.
pub fn rule(n: usize) -> &'static GaussLegendre {
    static CACHE: OnceLock<Mutex<HashMap<usize, &'static GaussLegendre>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("quadrature cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| Box::leak(Box::new(GaussLegendre::new(n))))
}

/// Integrates `f` over [a, b] with a fixed `n`-point rule on each of the
/// pieces delimited by `breaks` (points outside (a, b) are ignored).
pub fn integrate_piecewise<F: FnMut(f64) -> f64>(
    n: usize,
    a: f64,
    b: f64,
    breaks: &[f64],
    mut f: F,
) -> f64 {
    let gl = rule(n);
    let mut cuts: Vec<f64> = Vec::with_capacity(breaks.len() + 2);
    cuts.push(a);
    cuts.extend(breaks.iter().copied().filter(|&x| x > a && x < b));
    cuts.push(b);
    cuts.sort_by(f64::total_cmp);
    cuts.windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| gl.integrate(w[0], w[1], &mut f))
        .sum()
}

/// Adaptive Gauss–Legendre: a 10-point and a 20-point estimate are compared
/// on each subinterval; intervals are bisected until the difference drops
/// below their share of `abs_tol`.
pub fn adaptive<F: FnMut(f64) -> f64>(a: f64, b: f64, abs_tol: f64, mut f: F) -> Result<f64> {
    const MAX_DEPTH: u32 = 40;
    if a == b {
        return Ok(0.0);
    }
    let lo = rule(10);
    let hi = rule(20);
    let mut total = 0.0;
    let mut stack = vec![(a, b, abs_tol, 0u32)];
    while let Some((x0, x1, tol, depth)) = stack.pop() {
        let coarse = lo.integrate(x0, x1, &mut f);
        let fine = hi.integrate(x0, x1, &mut f);
        if (fine - coarse).abs() <= tol || (x1 - x0).abs() < 1e-15 * (1.0 + x0.abs()) {
            total += fine;
        } else if depth >= MAX_DEPTH {
            return Err(Error::Quadrature(format!(
                "adaptive rule failed to converge on [{x0}, {x1}]"
            )));
        } else {
            let mid = 0.5 * (x0 + x1);
            stack.push((mid, x1, 0.5 * tol, depth + 1));
            stack.push((x0, mid, 0.5 * tol, depth + 1));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rule_integrates_polynomials_exactly() {
        let gl = GaussLegendre::new(8);
        // exact for degree <= 15
        let v = gl.integrate(0.0, 2.0, |x| x.powi(15));
        assert!((v - 2f64.powi(16) / 16.0).abs() < 1e-9);
        let s: f64 = gl.weights.iter().sum();
        assert!((s - 2.0).abs() < 1e-14);
    }

    #[test]
    fn odd_rules_have_center_node() {
        let gl = GaussLegendre::new(5);
        assert_eq!(gl.nodes[2], 0.0);
        assert!((gl.weights[2] - 128.0 / 225.0).abs() < 1e-14);
    }

    #[test]
    fn large_rule_is_accurate() {
        let v = rule(64).integrate(0.0, std::f64::consts::PI, f64::sin);
        assert!((v - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_endpoint_singularity() {
        let v = adaptive(0.0, 1.0, 1e-10, |x| x.sqrt()).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn piecewise_splits_at_kinks() {
        let v = integrate_piecewise(4, -1.0, 1.0, &[0.0, 5.0], f64::abs);
        assert!((v - 1.0).abs() < 1e-14);
    }
}
