//! Subsampling variance estimation and the online anomaly test.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::asymptotics::{self, AsymptoticSpec};
use crate::data::Points;
use crate::error::{Error, Result};
use crate::field::{Field, ShiftedField};
use crate::kde::{self, BandwidthRule, EstimatorMode, KdeField};
use crate::kernel::Kernel;
use crate::levelset::{self, IntegratorKind, WeightKind};
use crate::models::{self, DensityModel};
use crate::rng;

/// Default subsample exponent: `m_n = ⌈n^0.7⌉`.
pub const DEFAULT_SUBSAMPLE_EXPONENT: f64 = 0.7;
/// Default two-sided rejection threshold.
pub const DEFAULT_THRESHOLD: f64 = 1.96;
/// Reference samples with `n·h/ln n` below this cannot support a test.
pub const MIN_REFERENCE_PROXY: f64 = 3.0;

#[derive(Debug, Clone, Serialize)]
pub struct SubsampleVarianceResult {
    pub m_n: usize,
    pub subsamples: usize,
    pub h_m: f64,
    /// `d_G` of each subsample estimate.
    pub xi: Vec<f64>,
    /// Sample variance of `a_{m,G}·ξ_i` (divisor `ς_n − 1`).
    pub estimate: f64,
}

/// `m_n = ⌈n^exponent⌉`.
pub fn subsample_size(n: usize, exponent: f64) -> usize {
    (n as f64).powf(exponent).ceil() as usize
}

/// Splits a seeded random subset of `points` into `⌊n/m⌋` disjoint
/// subsamples of size `m`, estimates `d_G` on each with the default
/// bandwidth for `m`, and returns the sample variance of the normalized
/// values. Points are put in canonical order first, so the partition
/// depends on the seed and not on the input order.
pub fn subsample_variance(
    points: &Points,
    truth: &dyn DensityModel,
    c: f64,
    weight: WeightKind,
    kernel: &Kernel,
    m_n: usize,
    seed: u64,
) -> Result<SubsampleVarianceResult> {
    let n = points.len();
    if m_n == 0 {
        return Err(Error::invalid("subsample size must be positive"));
    }
    let count = n / m_n;
    if count < 2 {
        return Err(Error::invalid(format!(
            "n = {n} points give {count} subsample(s) of size {m_n}; at least 2 are needed"
        )));
    }
    let canonical = points.canonical();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng::stream(seed, rng::SHUFFLE_STREAM));
    let h_m = kde::bandwidth_schedule(m_n, BandwidthRule::RootNLogN)?.h;
    let integrator = IntegratorKind::default_for(points.dim());
    let xi = order
        .chunks_exact(m_n)
        .take(count)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|idx| {
            let sub = canonical.select(idx);
            let f = kde::fit(&sub, h_m, kernel)?;
            Ok(levelset::symmdiff(&f, truth, c, weight, integrator)?.value)
        })
        .collect::<Result<Vec<f64>>>()?;
    let a = asymptotics::norming(m_n as f64, h_m, weight.inv_gamma());
    let scaled: Vec<f64> = xi.iter().map(|x| a * x).collect();
    let estimate = sample_variance(&scaled);
    Ok(SubsampleVarianceResult { m_n, subsamples: count, h_m, xi, estimate })
}

/// Unbiased sample variance; 0 for fewer than two values.
pub fn sample_variance(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (x.len() - 1) as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Calibration {
    /// Mean from the limiting mean constant, σ from the limiting variance.
    Closed,
    /// Mean and σ from `reps` seeded null replications drawn from the
    /// reference.
    Simulated { reps: usize, seed: u64 },
}

impl Calibration {
    pub fn name(&self) -> &'static str {
        match self {
            Calibration::Closed => "closed",
            Calibration::Simulated { .. } => "simulated",
        }
    }
}

/// Level used for the estimate's set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Centering {
    /// The reference level `c`.
    #[default]
    Reference,
    /// `c_n` with `∫_{f_n ≥ c_n} f_n = α`.
    EstimateCoverage,
}

#[derive(Debug, Clone)]
pub struct TestOptions {
    pub alpha: f64,
    pub calibration: Calibration,
    pub threshold: f64,
    pub centering: Centering,
    pub kernel: Kernel,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestOutcome {
    pub z: f64,
    pub threshold: f64,
    pub reject: bool,
    pub n: usize,
    pub h: f64,
    pub c: f64,
    /// Level of the estimate's set (`c`, or `c_n` with estimate centering).
    pub c_est: f64,
    pub alpha: f64,
    pub d_lambda: f64,
    pub mean: f64,
    pub sigma: f64,
    pub calibration: &'static str,
}

/// `c_n` with `∫_{f_n ≥ c_n} f_n = α`, by bisection on the exact
/// line integrals of the estimate.
pub fn coverage_level(field: &KdeField, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("α = {alpha} must lie in (0, 1)")));
    }
    let mass = kde::KdeModel::coverage_by_scan(field, f64::MIN_POSITIVE);
    if mass < alpha {
        return Err(Error::invalid(format!("estimate mass {mass} is below α = {alpha}")));
    }
    let (mut lo, mut hi) = (0.0, field.kernel().peak() / field.h() * field.count() as f64 / field.n() as f64);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if kde::KdeModel::coverage_by_scan(field, mid) >= alpha {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo)
}

/// Lebesgue symmetric difference of the batch estimate's set against the
/// reference set at `c`.
fn statistic(
    field: &KdeField,
    reference: &dyn DensityModel,
    c: f64,
    opts: &TestOptions,
) -> Result<(f64, f64)> {
    let integrator = IntegratorKind::default_for(field.dim());
    match opts.centering {
        Centering::Reference => {
            Ok((levelset::symmdiff(field, reference, c, WeightKind::Lebesgue, integrator)?.value, c))
        }
        Centering::EstimateCoverage => {
            let c_n = coverage_level(field, opts.alpha)?;
            let shifted = ShiftedField { inner: field, shift: c_n - c };
            Ok((levelset::symmdiff(&shifted, reference, c, WeightKind::Lebesgue, integrator)?.value, c_n))
        }
    }
}

/// Null mean and σ of `d_λ` for batches of size `n` from the reference.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NullCalibration {
    pub n: usize,
    pub h: f64,
    pub c: f64,
    pub mean: f64,
    pub sigma: f64,
    pub source: &'static str,
}

pub fn calibrate(reference: &dyn DensityModel, n: usize, opts: &TestOptions) -> Result<NullCalibration> {
    let c = models::level_from_coverage(reference, opts.alpha)?;
    let h = kde::bandwidth_schedule(n, BandwidthRule::RootNLogN)?.h;
    let rate = asymptotics::norming(n as f64, h, 0.0);
    let (mean, sigma) = match opts.calibration {
        Calibration::Closed => {
            let spec = AsymptoticSpec::from_model(reference, c, &opts.kernel, WeightKind::Lebesgue, 0.0)?;
            let mean = asymptotics::mean_limit_constant(&spec, false)?.general / (n as f64 * h).sqrt();
            (mean, asymptotics::sigma2(&spec)?.sqrt())
        }
        Calibration::Simulated { reps, seed } => {
            if reps < 2 {
                return Err(Error::invalid("simulated calibration needs at least 2 replications"));
            }
            let null = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let s = rng::derive_seed(seed, n as u64, r as u64);
                    let f = kde::simulate_kde(reference, n, h, &opts.kernel, EstimatorMode::FixedN, s)?;
                    statistic(&f, reference, c, opts).map(|(d, _)| d).map_err(|e| Error::Replication {
                        n,
                        rep: r,
                        source: Box::new(e),
                    })
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean = null.iter().sum::<f64>() / reps as f64;
            (mean, rate * sample_variance(&null).sqrt())
        }
    };
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Quadrature(format!("calibrated σ = {sigma} is not positive")));
    }
    Ok(NullCalibration { n, h, c, mean, sigma, source: opts.calibration.name() })
}

/// Tests whether `batch` comes from `reference`: rejects when
/// `|(n/h)^{1/4}(d_λ − mean)|/σ` exceeds the threshold, with `d_λ` the
/// Lebesgue symmetric difference at the level of coverage `α`.
pub fn online_test(reference: &dyn DensityModel, batch: &Points, opts: &TestOptions) -> Result<TestOutcome> {
    if batch.is_empty() {
        return Err(Error::EmptyData("empty batch".into()));
    }
    let cal = calibrate(reference, batch.len(), opts)?;
    online_test_calibrated(reference, batch, opts, &cal)
}

/// [`online_test`] against a precomputed calibration for the batch size.
pub fn online_test_calibrated(
    reference: &dyn DensityModel,
    batch: &Points,
    opts: &TestOptions,
    cal: &NullCalibration,
) -> Result<TestOutcome> {
    if batch.dim() != reference.dim() {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: batch.dim() });
    }
    if batch.len() != cal.n {
        return Err(Error::invalid(format!("calibration is for n = {} but the batch has {} points", cal.n, batch.len())));
    }
    let n = cal.n;
    let field = kde::fit(batch, cal.h, &opts.kernel)?;
    let (d, c_est) = statistic(&field, reference, cal.c, opts)?;
    let z = asymptotics::norming(n as f64, cal.h, 0.0) * (d - cal.mean) / cal.sigma;
    Ok(TestOutcome {
        z,
        threshold: opts.threshold,
        reject: z.abs() > opts.threshold,
        n,
        h: cal.h,
        c: cal.c,
        c_est,
        alpha: opts.alpha,
        d_lambda: d,
        mean: cal.mean,
        sigma: cal.sigma,
        calibration: cal.source,
    })
}

/// Fits a reference sample as the truth. Fails when `n·h/ln n` is below
/// [`MIN_REFERENCE_PROXY`]; the returned warnings flag values below 10.
pub fn reference_from_sample(points: Points, kernel: &Kernel) -> Result<(kde::KdeModel, Vec<String>)> {
    let n = points.len();
    let bw = kde::bandwidth_schedule(n, BandwidthRule::RootNLogN)?;
    let proxy = kde::bandwidth_proxy(n, bw.h);
    if proxy < MIN_REFERENCE_PROXY {
        return Err(Error::invalid(format!(
            "reference sample of {n} points gives n·h/ln n = {proxy:.3} < {MIN_REFERENCE_PROXY}"
        )));
    }
    Ok((kde::KdeModel::new(points, bw.h, kernel)?, bw.warnings))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_gauss2d;

    fn opts(calibration: Calibration) -> TestOptions {
        TestOptions {
            alpha: 0.95,
            calibration,
            threshold: DEFAULT_THRESHOLD,
            centering: Centering::Reference,
            kernel: Kernel::box_ball(2).unwrap(),
        }
    }

    #[test]
    fn degenerate_subsamples_have_zero_variance() {
        let m = make_gauss2d();
        let p = Points::new(2, [0.1, -0.2].repeat(400)).unwrap();
        let r = subsample_variance(&p, &m, 0.05, WeightKind::Lebesgue, &Kernel::box_ball(2).unwrap(), 100, 3)
            .unwrap();
        assert_eq!(r.subsamples, 4);
        assert_eq!(r.estimate, 0.0);
    }

    #[test]
    fn subsample_variance_ignores_input_order() {
        let m = make_gauss2d();
        let p = models::sample(&m, 3000, 9);
        let rev: Vec<usize> = (0..p.len()).rev().collect();
        let k = Kernel::box_ball(2).unwrap();
        let a = subsample_variance(&p, &m, 0.05, WeightKind::Lebesgue, &k, 300, 4).unwrap();
        let b = subsample_variance(&p.select(&rev), &m, 0.05, WeightKind::Lebesgue, &k, 300, 4).unwrap();
        assert_eq!(a.estimate, b.estimate);
        assert!(a.estimate > 0.0);
        assert!(subsample_variance(&p, &m, 0.05, WeightKind::Lebesgue, &k, 2000, 4).is_err());
    }

    #[test]
    fn sample_variance_is_permutation_invariant() {
        let x = [1.0, 4.0, 2.5, -1.0];
        let y = [2.5, -1.0, 4.0, 1.0];
        assert_eq!(sample_variance(&x), sample_variance(&y));
        assert!((sample_variance(&[1.0, 3.0]) - 2.0).abs() < 1e-15);
    }

    #[test]
    fn simulated_test_is_deterministic() {
        let m = make_gauss2d();
        let batch = models::sample(&m, 2000, 77);
        let o = opts(Calibration::Simulated { reps: 20, seed: 5 });
        let a = online_test(&m, &batch, &o).unwrap();
        let b = online_test(&m, &batch, &o).unwrap();
        assert_eq!(a.z.to_bits(), b.z.to_bits());
        assert_eq!(a.reject, a.z.abs() > a.threshold);
        assert!(a.sigma > 0.0);
    }

    #[test]
    fn mean_valued_statistic_gives_zero() {
        let m = make_gauss2d();
        let batch = models::sample(&m, 2000, 80);
        let o = opts(Calibration::Closed);
        let mut cal = calibrate(&m, 2000, &o).unwrap();
        let first = online_test_calibrated(&m, &batch, &o, &cal).unwrap();
        cal.mean = first.d_lambda;
        let again = online_test_calibrated(&m, &batch, &o, &cal).unwrap();
        assert_eq!(again.z, 0.0);
        assert!(!again.reject);
        assert!(online_test_calibrated(&m, &batch.prefix(1000), &o, &cal).is_err());
    }

    #[test]
    fn closed_calibration_runs() {
        let m = make_gauss2d();
        let batch = models::sample(&m, 2000, 78);
        let o = online_test(&m, &batch, &opts(Calibration::Closed)).unwrap();
        assert!(o.z.is_finite());
        assert_eq!(o.calibration, "closed");
    }

    #[test]
    fn coverage_level_inverts_mass() {
        let m = make_gauss2d();
        let batch = models::sample(&m, 5000, 79);
        // a continuous kernel makes the mass continuous in the level
        let f = kde::fit(&batch, 0.02, &Kernel::radial_polynomial(2).unwrap()).unwrap();
        let c_n = coverage_level(&f, 0.5).unwrap();
        let mass = kde::KdeModel::coverage_by_scan(&f, c_n);
        assert!((mass - 0.5).abs() < 1e-6, "{mass}");
        let o = TestOptions { centering: Centering::EstimateCoverage, ..opts(Calibration::Closed) };
        let out = online_test(&m, &batch, &o).unwrap();
        assert!(out.c_est > 0.0 && out.c_est != out.c);
    }

    #[test]
    fn tiny_reference_is_rejected() {
        let p = models::sample(&make_gauss2d(), 20, 1);
        assert!(reference_from_sample(p, &Kernel::box_ball(2).unwrap()).is_err());
    }
}
