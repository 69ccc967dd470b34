//! Kernel density estimates in the volume-bandwidth convention
//!
//! ```text
//! f_n(x) = (1/(n·h)) Σᵢ K((x − Xᵢ) / h^{1/d})
//! ```
//!
//! with per-axis scale `h^{1/d}`, and the Poissonized variant that sums over
//! the first `N ~ Poisson(n)` points of an i.i.d. stream with the same
//! denominator `n·h`.
//!
//! Points are binned on a uniform grid with cell side at least `h^{1/d}`, so
//! the support ball of radius `h^{1/d}/2` around a query meets only the 3^d
//! neighbouring cells. Along a line the estimate is piecewise constant (box
//! kernel) or piecewise quartic (radial polynomial kernel) between chord
//! endpoints of the support balls; [`KdeField`] sweeps those pieces exactly.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::Points;
use crate::error::{Error, Result};
use crate::field::{sampled_superlevel, Field, Interval};
use crate::kernel::{Kernel, KernelKind, SUPPORT_RADIUS};
use crate::models::{self, DensityModel};
use crate::rng;

const MAX_CELLS: usize = 1 << 24;
const POLY_SAMPLES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorMode {
    FixedN,
    Poissonized,
}

impl EstimatorMode {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorMode::FixedN => "fixed-n",
            EstimatorMode::Poissonized => "poissonized",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "h", rename_all = "kebab-case")]
pub enum BandwidthRule {
    /// `h = 1/√(n ln n)`
    RootNLogN,
    /// A volume bandwidth supplied by the caller.
    Explicit(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Bandwidth {
    pub h: f64,
    pub warnings: Vec<String>,
}

/// `n·h / ln n`, the finite-sample proxy for the bandwidth condition.
pub fn bandwidth_proxy(n: usize, h: f64) -> f64 {
    n as f64 * h / (n as f64).ln()
}

/// Volume bandwidth for sample size `n`. Warns when `n·h/ln n < 10`.
pub fn bandwidth_schedule(n: usize, rule: BandwidthRule) -> Result<Bandwidth> {
    if n < 3 {
        return Err(Error::invalid(format!("bandwidth schedule needs n ≥ 3 (got {n})")));
    }
    let h = match rule {
        BandwidthRule::RootNLogN => 1.0 / (n as f64 * (n as f64).ln()).sqrt(),
        BandwidthRule::Explicit(h) if h > 0.0 && h.is_finite() => h,
        BandwidthRule::Explicit(h) => {
            return Err(Error::invalid(format!("bandwidth must be positive (got {h})")));
        }
    };
    let mut warnings = Vec::new();
    let proxy = bandwidth_proxy(n, h);
    if proxy < 10.0 {
        warnings.push(format!("n·h/ln n = {proxy:.3} < 10: bandwidth too small for n = {n}"));
    }
    Ok(Bandwidth { h, warnings })
}

/// Per-axis scale `h^{1/d}` of a volume bandwidth.
pub fn axis_scale(h_volume: f64, dim: usize) -> f64 {
    h_volume.powf(1.0 / dim as f64)
}

/// Volume bandwidth of a per-axis scale.
pub fn volume_bandwidth(h_axis: f64, dim: usize) -> f64 {
    h_axis.powi(dim as i32)
}

/// Estimate restricted to one sweep piece, as a function of the line
/// parameter.
#[derive(Debug, Clone, Copy)]
enum Piece {
    /// constant `count·κ/(n h)`
    Count(usize),
    /// `Σ_k coef[k]·(t − mid)^k / (n h)`
    Quartic { mid: f64, coef: [f64; 5] },
}

#[derive(Debug, Clone)]
struct SpatialIndex {
    lower: Vec<f64>,
    upper: Vec<f64>,
    cell: f64,
    shape: Vec<usize>,
    /// CSR offsets into `coords`, cells in row-major order (last axis fastest)
    start: Vec<usize>,
    coords: Vec<f64>,
}

impl SpatialIndex {
    fn build(points: &[f64], dim: usize, min_cell: f64) -> Self {
        let n = points.len() / dim;
        let mut lower = vec![f64::INFINITY; dim];
        let mut upper = vec![f64::NEG_INFINITY; dim];
        for p in points.chunks_exact(dim) {
            for k in 0..dim {
                lower[k] = lower[k].min(p[k]);
                upper[k] = upper[k].max(p[k]);
            }
        }
        if n == 0 {
            lower = vec![0.0; dim];
            upper = vec![0.0; dim];
        }
        let mut cell = min_cell;
        let shape_for = |cell: f64| -> Vec<usize> {
            (0..dim).map(|k| ((upper[k] - lower[k]) / cell).floor() as usize + 1).collect()
        };
        let mut shape = shape_for(cell);
        while shape.iter().product::<usize>() > MAX_CELLS {
            cell *= 2.0;
            shape = shape_for(cell);
        }
        let total: usize = shape.iter().product();
        let cell_of = |p: &[f64]| -> usize {
            let mut idx = 0;
            for k in 0..dim {
                let i = (((p[k] - lower[k]) / cell).floor() as usize).min(shape[k] - 1);
                idx = idx * shape[k] + i;
            }
            idx
        };
        let mut start = vec![0usize; total + 1];
        let ids: Vec<usize> = points.chunks_exact(dim).map(cell_of).collect();
        for &c in &ids {
            start[c + 1] += 1;
        }
        for i in 0..total {
            start[i + 1] += start[i];
        }
        let mut fill = start.clone();
        let mut coords = vec![0.0; points.len()];
        for (p, &c) in points.chunks_exact(dim).zip(&ids) {
            let at = fill[c];
            coords[at * dim..(at + 1) * dim].copy_from_slice(p);
            fill[c] += 1;
        }
        Self { lower, upper, cell, shape, start, coords }
    }

    fn axis_index(&self, k: usize, x: f64) -> i64 {
        ((x - self.lower[k]) / self.cell).floor() as i64
    }

    /// Contiguous coordinate ranges covering every point in the 3^d cells
    /// around `x`.
    fn neighbourhood(&self, x: &[f64], mut visit: impl FnMut(&[f64])) {
        let dim = self.shape.len();
        let clamp = |k: usize, i: i64| -> Option<(usize, usize)> {
            let lo = (i - 1).max(0);
            let hi = (i + 1).min(self.shape[k] as i64 - 1);
            (lo <= hi).then_some((lo as usize, hi as usize))
        };
        match dim {
            1 => {
                if let Some((lo, hi)) = clamp(0, self.axis_index(0, x[0])) {
                    visit(&self.coords[self.start[lo]..self.start[hi + 1]]);
                }
            }
            _ => {
                let (Some((r0, r1)), Some((c0, c1))) =
                    (clamp(0, self.axis_index(0, x[0])), clamp(1, self.axis_index(1, x[1])))
                else {
                    return;
                };
                let nx = self.shape[1];
                for r in r0..=r1 {
                    let a = self.start[r * nx + c0] * 2;
                    let b = self.start[r * nx + c1 + 1] * 2;
                    visit(&self.coords[a..b]);
                }
            }
        }
    }

    /// Coordinate ranges covering every point within `reach` of the segment
    /// `origin + t·dir`, `t ∈ [t0, t1]`.
    fn along_segment(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        reach: f64,
        mut visit: impl FnMut(&[f64]),
    ) {
        let dim = self.shape.len();
        let at = |t: f64, k: usize| origin[k] + t * dir[k];
        match dim {
            1 => {
                let (a, b) = (at(t0, 0), at(t1, 0));
                let lo = self.axis_index(0, a.min(b) - reach).max(0);
                let hi = self.axis_index(0, a.max(b) + reach).min(self.shape[0] as i64 - 1);
                if lo <= hi {
                    visit(&self.coords[self.start[lo as usize]..self.start[hi as usize + 1]]);
                }
            }
            _ => {
                let (ny, nx) = (self.shape[0], self.shape[1]);
                let (ya, yb) = (at(t0, 0), at(t1, 0));
                let r_lo = self.axis_index(0, ya.min(yb) - reach).max(0);
                let r_hi = self.axis_index(0, ya.max(yb) + reach).min(ny as i64 - 1);
                for r in r_lo..=r_hi {
                    // part of the segment whose first coordinate lies in the
                    // row band widened by `reach`
                    let band_lo = self.lower[0] + r as f64 * self.cell - reach;
                    let band_hi = band_lo + self.cell + 2.0 * reach;
                    let (mut s0, mut s1) = (t0, t1);
                    if dir[0] != 0.0 {
                        let ta = (band_lo - origin[0]) / dir[0];
                        let tb = (band_hi - origin[0]) / dir[0];
                        s0 = s0.max(ta.min(tb));
                        s1 = s1.min(ta.max(tb));
                        if s1 < s0 {
                            continue;
                        }
                    } else if origin[0] < band_lo || origin[0] > band_hi {
                        continue;
                    }
                    let (xa, xb) = (at(s0, 1), at(s1, 1));
                    let c_lo = self.axis_index(1, xa.min(xb) - reach).max(0);
                    let c_hi = self.axis_index(1, xa.max(xb) + reach).min(nx as i64 - 1);
                    if c_lo > c_hi {
                        continue;
                    }
                    let ru = r as usize;
                    let a = self.start[ru * nx + c_lo as usize] * 2;
                    let b = self.start[ru * nx + c_hi as usize + 1] * 2;
                    visit(&self.coords[a..b]);
                }
            }
        }
    }
}

/// An evaluable kernel density estimate.
#[derive(Debug, Clone)]
pub struct KdeField {
    dim: usize,
    kernel: Kernel,
    h: f64,
    scale: f64,
    n: usize,
    count: usize,
    mode: EstimatorMode,
    denom: f64,
    index: SpatialIndex,
}

/// Builds an estimate from an i.i.d. stream. Fixed-n mode uses the first
/// `n` points; Poissonized mode draws `N ~ Poisson(n)` from the count stream
/// of `seed` and uses the first `N` points. Both divide by `n·h`.
pub fn build_kde(
    stream: &Points,
    n: usize,
    h: f64,
    kernel: &Kernel,
    mode: EstimatorMode,
    seed: u64,
) -> Result<KdeField> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("bandwidth must be positive (got {h})")));
    }
    if stream.dim() != kernel.dim() {
        return Err(Error::DimensionMismatch { expected: kernel.dim(), got: stream.dim() });
    }
    if n == 0 {
        return Err(Error::EmptyData("sample size n = 0".into()));
    }
    let count = match mode {
        EstimatorMode::FixedN => n,
        EstimatorMode::Poissonized => poisson_count(n, seed),
    };
    if stream.len() < count {
        return Err(Error::invalid(format!(
            "stream holds {} points but {count} are required",
            stream.len()
        )));
    }
    let dim = kernel.dim();
    let scale = axis_scale(h, dim);
    let used = &stream.coords()[..count * dim];
    Ok(KdeField {
        dim,
        kernel: kernel.clone(),
        h,
        scale,
        n,
        count,
        mode,
        denom: n as f64 * h,
        index: SpatialIndex::build(used, dim, scale),
    })
}

/// Fixed-n estimate from all of `points`.
pub fn fit(points: &Points, h: f64, kernel: &Kernel) -> Result<KdeField> {
    if points.is_empty() {
        return Err(Error::EmptyData("no data points".into()));
    }
    build_kde(points, points.len(), h, kernel, EstimatorMode::FixedN, 0)
}

/// `N ~ Poisson(n)` from the count stream of `seed`.
pub fn poisson_count(n: usize, seed: u64) -> usize {
    let mut r = rng::stream(seed, rng::COUNT_STREAM);
    let dist = Poisson::new(n as f64).expect("positive Poisson mean");
    dist.sample(&mut r) as usize
}

/// Simulates an estimate from `model`: the sample (and the Poisson count)
/// are drawn from streams keyed by `seed`, so the fixed-n and Poissonized
/// estimates for the same seed share their first `min(n, N)` points.
pub fn simulate_kde(
    model: &dyn DensityModel,
    n: usize,
    h: f64,
    kernel: &Kernel,
    mode: EstimatorMode,
    seed: u64,
) -> Result<KdeField> {
    let size = match mode {
        EstimatorMode::FixedN => n,
        EstimatorMode::Poissonized => poisson_count(n, seed),
    };
    let stream = models::sample(model, size, seed);
    build_kde(&stream, n, h, kernel, mode, seed)
}

/// `f_n(x)`.
pub fn evaluate(field: &KdeField, x: &[f64]) -> f64 {
    field.value(x)
}

impl KdeField {
    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    /// Volume bandwidth `h`.
    pub fn h(&self) -> f64 {
        self.h
    }

    /// Per-axis scale `h^{1/d}`.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Nominal sample size `n`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of points in the sum (`n`, or the Poisson draw).
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn mode(&self) -> EstimatorMode {
        self.mode
    }

    fn support(&self) -> f64 {
        SUPPORT_RADIUS * self.scale
    }

    fn builtin_radial(&self) -> bool {
        matches!(self.kernel.kind(), KernelKind::BoxBall | KernelKind::RadialPolynomial)
    }

    /// Smallest point count whose box-kernel value reaches `level`,
    /// computed with the same arithmetic as `value`.
    fn count_threshold(&self, level: f64) -> usize {
        let kappa = self.kernel.peak();
        let guess = (level * self.denom / kappa).ceil().max(0.0) as usize;
        let reaches = |k: usize| k as f64 * kappa / self.denom >= level;
        let mut k = guess;
        while k > 0 && reaches(k - 1) {
            k -= 1;
        }
        while !reaches(k) {
            k += 1;
        }
        k
    }

    /// Brute-force sum over every point, bypassing the index.
    pub fn value_brute_force(&self, x: &[f64]) -> f64 {
        let mut u = vec![0.0; self.dim];
        let mut acc = 0.0;
        for p in self.index.coords.chunks_exact(self.dim) {
            for k in 0..self.dim {
                u[k] = (x[k] - p[k]) / self.scale;
            }
            acc += self.kernel.eval(&u);
        }
        acc / self.denom
    }

    /// Visits the sweep pieces of the estimate along `origin + t·dir` on
    /// `[t0, t1]` in increasing order. Built-in kernels only.
    fn sweep(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        mut visit: impl FnMut(f64, f64, Piece),
    ) {
        if t1 <= t0 {
            return;
        }
        let rho = self.support();
        let rho2 = rho * rho;
        let a: f64 = dir.iter().map(|d| d * d).sum();
        let dim = self.dim;
        let box_kernel = self.kernel.is_piecewise_constant();

        // chords of the support balls that meet the segment
        let mut chords: Vec<(f64, f64, usize)> = Vec::new();
        let mut centres: Vec<f64> = Vec::new();
        self.index.along_segment(origin, dir, t0, t1, rho, |block| {
            for p in block.chunks_exact(dim) {
                let mut b = 0.0;
                let mut q = -rho2;
                for k in 0..dim {
                    let w = origin[k] - p[k];
                    b += w * dir[k];
                    q += w * w;
                }
                let disc = b * b - a * q;
                if disc < 0.0 {
                    continue;
                }
                let root = disc.sqrt();
                let lo = (-b - root) / a;
                let hi = (-b + root) / a;
                if hi < t0 || lo > t1 {
                    continue;
                }
                let id = centres.len() / dim;
                if !box_kernel {
                    centres.extend_from_slice(p);
                }
                chords.push((lo, hi, id));
            }
        });

        if box_kernel {
            let mut starts: Vec<f64> = chords.iter().map(|c| c.0).collect();
            let mut ends: Vec<f64> = chords.iter().map(|c| c.1).collect();
            starts.sort_by(f64::total_cmp);
            ends.sort_by(f64::total_cmp);
            let (mut i, mut j, mut count) = (0usize, 0usize, 0usize);
            let mut pos = t0;
            // apply every event at or before t0
            while i < starts.len() && starts[i] <= t0 {
                count += 1;
                i += 1;
            }
            while j < ends.len() && ends[j] < t0 {
                count -= 1;
                j += 1;
            }
            loop {
                let next = match (starts.get(i), ends.get(j)) {
                    (Some(&s), Some(&e)) => s.min(e),
                    (Some(&s), None) => s,
                    (None, Some(&e)) => e,
                    (None, None) => f64::INFINITY,
                };
                let stop = next.min(t1);
                if stop > pos {
                    visit(pos, stop, Piece::Count(count));
                    pos = stop;
                }
                if next >= t1 {
                    break;
                }
                while i < starts.len() && starts[i] == next {
                    count += 1;
                    i += 1;
                }
                while j < ends.len() && ends[j] == next {
                    count -= 1;
                    j += 1;
                }
            }
            return;
        }

        // smooth radial kernel: quartic pieces between chord endpoints
        let mut events: Vec<(f64, bool, usize)> = Vec::with_capacity(2 * chords.len());
        for &(lo, hi, id) in &chords {
            events.push((lo, true, id));
            events.push((hi, false, id));
        }
        events.sort_by(|x, y| x.0.total_cmp(&y.0));
        let mut active: Vec<usize> = Vec::new();
        let mut pos = t0;
        let mut e = 0;
        let scale2 = self.scale * self.scale;
        let kc = self.kernel.eval_radial_sq(0.0);
        loop {
            while e < events.len() && events[e].0 <= pos {
                let (_, enter, id) = events[e];
                if enter {
                    active.push(id);
                } else if let Some(at) = active.iter().position(|&x| x == id) {
                    active.swap_remove(at);
                }
                e += 1;
            }
            let next = events.get(e).map_or(f64::INFINITY, |x| x.0);
            let stop = next.min(t1);
            if stop > pos {
                let mid = 0.5 * (pos + stop);
                let mut coef = [0.0; 5];
                for &id in &active {
                    let p = &centres[id * dim..(id + 1) * dim];
                    let mut b = 0.0;
                    let mut q = 0.0;
                    for k in 0..dim {
                        let w = origin[k] + mid * dir[k] - p[k];
                        b += w * dir[k];
                        q += w * w;
                    }
                    // v(τ) = 1 − 4|x − p|²/s² = β₂τ² + β₁τ + β₀
                    let b2 = -4.0 * a / scale2;
                    let b1 = -8.0 * b / scale2;
                    let b0 = 1.0 - 4.0 * q / scale2;
                    coef[0] += kc * b0 * b0;
                    coef[1] += kc * 2.0 * b1 * b0;
                    coef[2] += kc * (b1 * b1 + 2.0 * b2 * b0);
                    coef[3] += kc * 2.0 * b2 * b1;
                    coef[4] += kc * b2 * b2;
                }
                visit(pos, stop, Piece::Quartic { mid, coef });
                pos = stop;
            }
            if next >= t1 {
                break;
            }
        }
    }

    fn piece_value(&self, piece: &Piece, t: f64) -> f64 {
        match *piece {
            Piece::Count(k) => k as f64 * self.kernel.peak() / self.denom,
            Piece::Quartic { mid, coef } => {
                let x = t - mid;
                let sum = (((coef[4] * x + coef[3]) * x + coef[2]) * x + coef[1]) * x + coef[0];
                sum.max(0.0) / self.denom
            }
        }
    }

    /// `∫ f_n dt` over `{t ∈ [t0, t1] : f_n ≥ level}` along the line.
    pub fn integrate_superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> f64 {
        if !self.builtin_radial() {
            return self
                .superlevel_on_line(origin, dir, t0, t1, level)
                .iter()
                .map(|&(lo, hi)| {
                    crate::quadrature::rule(16).integrate(lo, hi, |t| {
                        let x: Vec<f64> = origin.iter().zip(dir).map(|(o, d)| o + t * d).collect();
                        self.value(&x)
                    })
                })
                .sum();
        }
        let mut total = 0.0;
        let k_min = self.count_threshold(level);
        self.sweep(origin, dir, t0, t1, |lo, hi, piece| match piece {
            Piece::Count(k) => {
                if k >= k_min {
                    total += (hi - lo) * self.piece_value(&piece, lo);
                }
            }
            Piece::Quartic { .. } => {
                for (a, b) in self.quartic_superlevel(&piece, lo, hi, level) {
                    total += crate::quadrature::rule(3).integrate(a, b, |t| self.piece_value(&piece, t));
                }
            }
        });
        total
    }

    /// Superlevel part of a quartic piece: 8 samples per piece, each sign
    /// change refined by bisection.
    fn quartic_superlevel(&self, piece: &Piece, lo: f64, hi: f64, level: f64) -> Vec<Interval> {
        let inside = |t: f64| self.piece_value(piece, t) >= level;
        let mut out = Vec::new();
        let mut prev_t = lo;
        let mut prev_in = inside(lo);
        let mut start = prev_in.then_some(lo);
        for j in 1..=POLY_SAMPLES {
            let t = if j == POLY_SAMPLES { hi } else { lo + (hi - lo) * j as f64 / POLY_SAMPLES as f64 };
            let cur_in = inside(t);
            if cur_in != prev_in {
                let (mut a, mut b) = (prev_t, t);
                for _ in 0..60 {
                    let m = 0.5 * (a + b);
                    if inside(m) == prev_in {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                if cur_in {
                    start = Some(b);
                } else if let Some(s) = start.take() {
                    out.push((s, a));
                }
            }
            prev_t = t;
            prev_in = cur_in;
        }
        if let Some(s) = start {
            out.push((s, hi));
        }
        out
    }
}

fn push_merged(out: &mut Vec<Interval>, lo: f64, hi: f64) {
    match out.last_mut() {
        Some(last) if last.1 >= lo => last.1 = last.1.max(hi),
        _ => out.push((lo, hi)),
    }
}

impl Field for KdeField {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let inv = 1.0 / self.scale;
        let dim = self.dim;
        if self.kernel.is_piecewise_constant() {
            let mut count = 0usize;
            self.index.neighbourhood(x, |block| {
                for p in block.chunks_exact(dim) {
                    let mut r2 = 0.0;
                    for k in 0..dim {
                        let u = (x[k] - p[k]) * inv;
                        r2 += u * u;
                    }
                    count += usize::from(r2 <= SUPPORT_RADIUS * SUPPORT_RADIUS);
                }
            });
            return count as f64 * self.kernel.peak() / self.denom;
        }
        let mut acc = 0.0;
        let radial = self.builtin_radial();
        let mut u = vec![0.0; dim];
        self.index.neighbourhood(x, |block| {
            for p in block.chunks_exact(dim) {
                for k in 0..dim {
                    u[k] = (x[k] - p[k]) * inv;
                }
                acc += if radial {
                    self.kernel.eval_radial_sq(u.iter().map(|v| v * v).sum())
                } else {
                    self.kernel.eval(&u)
                };
            }
        });
        acc / self.denom
    }

    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64> {
        if level <= 0.0 {
            return None;
        }
        if self.count == 0 {
            return Some(0.0);
        }
        // farthest corner of the data box, plus the kernel support
        let mut far = 0.0;
        for ((x, lo), hi) in center.iter().zip(&self.index.lower).zip(&self.index.upper) {
            far += (x - lo).abs().max((x - hi).abs()).powi(2);
        }
        Some(far.sqrt() + self.support())
    }

    fn resolution(&self) -> f64 {
        self.support()
    }

    fn total_mass(&self) -> Option<f64> {
        Some(self.count as f64 / self.n as f64)
    }

    fn sample_info(&self) -> Option<(usize, f64)> {
        Some((self.n, self.h))
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
            return if t1 > t0 { vec![(t0, t1)] } else { Vec::new() };
        }
        if !self.builtin_radial() {
            return sampled_superlevel(self, origin, dir, t0, t1, level);
        }
        let mut out = Vec::new();
        let k_min = self.count_threshold(level);
        self.sweep(origin, dir, t0, t1, |lo, hi, piece| match piece {
            Piece::Count(k) => {
                if k >= k_min {
                    push_merged(&mut out, lo, hi);
                }
            }
            Piece::Quartic { .. } => {
                for (a, b) in self.quartic_superlevel(&piece, lo, hi, level) {
                    push_merged(&mut out, a, b);
                }
            }
        });
        out
    }
}

/// A fitted estimate treated as a ground-truth density (conditioning on
/// the reference sample). Sampling is the smoothed bootstrap.
#[derive(Debug, Clone)]
pub struct KdeModel {
    field: KdeField,
    points: Points,
    sup: f64,
    center: Vec<f64>,
}

impl KdeModel {
    pub fn new(points: Points, h: f64, kernel: &Kernel) -> Result<Self> {
        let field = fit(&points, h, kernel)?;
        let center = points.mean();
        // the supremum is attained near a data point; the box kernel attains
        // it exactly at some point's support overlap, a scan over the data
        // and a fine grid around the mode bounds it from below
        let mut sup: f64 = 0.0;
        for p in points.iter() {
            sup = sup.max(field.value(p));
        }
        let sup = sup.max(field.value(&center)) * (1.0 + 1e-12);
        Ok(Self { field, points, sup, center })
    }

    pub fn field(&self) -> &KdeField {
        &self.field
    }

    pub fn points(&self) -> &Points {
        &self.points
    }

    /// Scanline quadrature of `∫_{f ≥ c} f` with line spacing `h^{1/d}/8`.
    pub fn coverage_by_scan(field: &KdeField, c: f64) -> f64 {
        let dim = field.dim;
        let lo = &field.index.lower;
        let hi = &field.index.upper;
        let pad = field.support();
        match dim {
            1 => field.integrate_superlevel_on_line(&[0.0], &[1.0], lo[0] - pad, hi[0] + pad, c),
            _ => {
                let step = field.scale / 8.0;
                let y0 = lo[0] - pad;
                let lines = ((hi[0] + pad - y0) / step).ceil() as usize;
                (0..lines)
                    .map(|j| {
                        let y = y0 + (j as f64 + 0.5) * step;
                        step * field.integrate_superlevel_on_line(
                            &[y, 0.0],
                            &[0.0, 1.0],
                            lo[1] - pad,
                            hi[1] + pad,
                            c,
                        )
                    })
                    .sum()
            }
        }
    }
}

impl Field for KdeModel {
    fn dim(&self) -> usize {
        self.field.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.field.value(x)
    }

    fn superlevel_radius(&self, center: &[f64], level: f64) -> Option<f64> {
        self.field.superlevel_radius(center, level)
    }

    fn resolution(&self) -> f64 {
        self.field.resolution()
    }

    fn total_mass(&self) -> Option<f64> {
        self.field.total_mass()
    }

    fn superlevel_on_line(
        &self,
        origin: &[f64],
        dir: &[f64],
        t0: f64,
        t1: f64,
        level: f64,
    ) -> Vec<Interval> {
        self.field.superlevel_on_line(origin, dir, t0, t1, level)
    }
}

impl DensityModel for KdeModel {
    fn name(&self) -> String {
        format!("kde(n={}, h={})", self.points.len(), self.field.h)
    }

    /// Gradient by central differences at a tenth of the kernel scale.
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let step = 0.1 * self.field.scale;
        (0..self.dim())
            .map(|k| {
                let mut a = x.to_vec();
                let mut b = x.to_vec();
                a[k] += step;
                b[k] -= step;
                (self.value(&a) - self.value(&b)) / (2.0 * step)
            })
            .collect()
    }

    fn sup_density(&self) -> f64 {
        self.sup
    }

    fn center(&self) -> Vec<f64> {
        self.center.clone()
    }

    fn sample_into(&self, rng: &mut ChaCha8Rng, n: usize, out: &mut Vec<f64>) {
        let m = self.points.len();
        for _ in 0..n {
            let i = rng.random_range(0..m);
            let u = self.field.kernel.sample_unit(rng);
            for (p, ui) in self.points.point(i).iter().zip(u) {
                out.push(p + self.field.scale * ui);
            }
        }
    }

    fn coverage(&self, c: f64) -> Result<f64> {
        Ok(Self::coverage_by_scan(&self.field, c))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_gauss2d;

    fn box1() -> Kernel {
        Kernel::box_ball(1).unwrap()
    }

    #[test]
    fn single_point_box() {
        let p = Points::new(1, vec![0.0]).unwrap();
        let f = fit(&p, 1.0, &box1()).unwrap();
        assert_eq!(f.value(&[0.0]), 1.0);
        assert_eq!(f.value(&[0.6]), 0.0);
        assert_eq!(f.value(&[0.5]), 1.0);
        assert_eq!(f.total_mass(), Some(1.0));
    }

    #[test]
    fn poissonized_empty_draw_is_zero() {
        // find a seed whose Poisson(1) draw is zero
        let seed = (0..1000).find(|&s| poisson_count(1, s) == 0).unwrap();
        let p = Points::new(1, vec![0.0, 0.1]).unwrap();
        let f = build_kde(&p, 1, 1.0, &box1(), EstimatorMode::Poissonized, seed).unwrap();
        assert_eq!(f.count(), 0);
        assert_eq!(f.value(&[0.0]), 0.0);
        assert!(f.superlevel_on_line(&[0.0], &[1.0], -1.0, 1.0, 1e-9).is_empty());
    }

    #[test]
    fn duplicated_data_same_estimate() {
        let m = make_gauss2d();
        let p = models::sample(&m, 500, 3);
        let mut q = p.clone();
        q.extend(&p).unwrap();
        let k = Kernel::radial_polynomial(2).unwrap();
        let a = fit(&p, 0.05, &k).unwrap();
        let b = fit(&q, 0.05, &k).unwrap();
        for x in models::sample(&m, 200, 4).iter() {
            assert!((a.value(x) - b.value(x)).abs() < 1e-12 * a.value(x).max(1.0));
        }
    }

    #[test]
    fn indexed_matches_brute_force() {
        let m = make_gauss2d();
        let p = models::sample(&m, 2000, 11);
        for kernel in [Kernel::box_ball(2).unwrap(), Kernel::radial_polynomial(2).unwrap()] {
            let f = fit(&p, 0.01, &kernel).unwrap();
            for x in models::sample(&m, 1000, 12).iter() {
                assert!((f.value(x) - f.value_brute_force(x)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bandwidth_values() {
        let b = bandwidth_schedule(50_000, BandwidthRule::RootNLogN).unwrap();
        assert!((b.h - 1.0 / (50_000f64 * 50_000f64.ln()).sqrt()).abs() < 1e-18);
        assert!((b.h - 1.360e-3).abs() < 1e-6);
        // n·h/ln n ≈ 6.3 at this n
        assert_eq!(b.warnings.len(), 1);
        assert_eq!(bandwidth_schedule(100, BandwidthRule::Explicit(0.01)).unwrap().h, 0.01);
        assert!(bandwidth_schedule(100, BandwidthRule::Explicit(0.0)).is_err());
        assert_eq!(bandwidth_schedule(100, BandwidthRule::Explicit(0.01)).unwrap().warnings.len(), 1);
        assert!((axis_scale(0.04, 2) - 0.2).abs() < 1e-15);
        assert!((volume_bandwidth(0.2, 2) - 0.04).abs() < 1e-15);
    }

    #[test]
    fn sweep_matches_pointwise_evaluation() {
        let m = make_gauss2d();
        let p = models::sample(&m, 3000, 5);
        for kernel in [Kernel::box_ball(2).unwrap(), Kernel::radial_polynomial(2).unwrap()] {
            let f = fit(&p, 0.004, &kernel).unwrap();
            let level = 0.03;
            for j in 0..20 {
                let th = j as f64 * 0.31;
                let dir = [th.cos(), th.sin()];
                let iv = f.superlevel_on_line(&[0.1, -0.2], &dir, -4.0, 4.0, level);
                for i in 0..4001 {
                    let t = -4.0 + 8.0 * i as f64 / 4000.0;
                    let x = [0.1 + t * dir[0], -0.2 + t * dir[1]];
                    let near_edge = iv.iter().any(|&(lo, hi)| (t - lo).abs() < 1e-9 || (t - hi).abs() < 1e-9);
                    if near_edge {
                        continue;
                    }
                    let inside = iv.iter().any(|&(lo, hi)| lo <= t && t <= hi);
                    let v = f.value(&x);
                    if (v - level).abs() > 1e-9 {
                        assert_eq!(inside, v >= level, "{:?} t={t} v={v}", kernel.kind());
                    }
                }
            }
        }
    }

    #[test]
    fn fixed_n_mass_is_one() {
        let m = make_gauss2d();
        let p = models::sample(&m, 400, 8);
        for kernel in [Kernel::box_ball(2).unwrap(), Kernel::radial_polynomial(2).unwrap()] {
            let f = fit(&p, 0.02, &kernel).unwrap();
            let mass = KdeModel::coverage_by_scan(&f, 1e-300);
            assert!((mass - 1.0).abs() < 1e-3, "{mass}");
        }
    }
}
