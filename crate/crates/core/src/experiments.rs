//! Seeded Monte Carlo harness for the finite-n behaviour of `d_G`.
//!
//! Replication `rep` at sample size `n` uses the seed
//! `derive_seed(base, n, rep)` and nothing else, so every record is
//! reproducible on its own and results do not depend on scheduling.
//! Records are returned sorted by `(n, rep)`.

use std::io::{Read, Write};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::asymptotics::{self, gaussian::std_normal_cdf};
use crate::error::{Error, Result};
use crate::kde::{self, BandwidthRule, EstimatorMode};
use crate::kernel::{Kernel, KernelKind};
use crate::levelset::{self, IntegratorKind, WeightKind, DEFAULT_BAND_MULTIPLIER};
use crate::models::{self, DensityModel};
use crate::rng;

/// The level, given directly or as a coverage probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LevelChoice {
    Level(f64),
    Coverage(f64),
}

impl LevelChoice {
    pub fn resolve(self, model: &dyn DensityModel) -> Result<f64> {
        let c = match self {
            LevelChoice::Level(c) => c,
            LevelChoice::Coverage(alpha) => models::level_from_coverage(model, alpha)?,
        };
        models::check_level(model, c)?;
        Ok(c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub model: String,
    pub kernel: KernelKind,
    pub weight: WeightKind,
    pub level: LevelChoice,
    pub n_values: Vec<usize>,
    pub bandwidth: BandwidthRule,
    pub reps: usize,
    pub seed: u64,
    pub mode: EstimatorMode,
    /// `None` picks scanlines in d = 2 and the line in d = 1.
    pub integrator: Option<IntegratorKind>,
    /// Record wall-clock time per replication (otherwise 0, keeping the
    /// output byte-reproducible).
    pub timings: bool,
}

impl ExperimentPlan {
    pub fn new(model: &str, n_values: Vec<usize>, reps: usize, seed: u64) -> Self {
        Self {
            model: model.to_string(),
            kernel: KernelKind::BoxBall,
            weight: WeightKind::Lebesgue,
            level: LevelChoice::Coverage(0.95),
            n_values,
            bandwidth: BandwidthRule::RootNLogN,
            reps,
            seed,
            mode: EstimatorMode::FixedN,
            integrator: None,
            timings: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.reps < 2 {
            return Err(Error::invalid(format!("need at least 2 replications (got {})", self.reps)));
        }
        if self.n_values.is_empty() {
            return Err(Error::invalid("no sample sizes given"));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("sample sizes must be strictly ascending"));
        }
        Ok(())
    }

    fn setup(&self) -> Result<Setup> {
        self.validate()?;
        let model = models::model_by_name(&self.model)?;
        let kernel = Kernel::builtin(self.kernel, model.dim())?;
        let c = self.level.resolve(model.as_ref())?;
        let integrator = self.integrator.unwrap_or(IntegratorKind::default_for(model.dim()));
        Ok(Setup { model, kernel, c, integrator })
    }

    fn bandwidth_for(&self, n: usize) -> Result<f64> {
        Ok(kde::bandwidth_schedule(n, self.bandwidth)?.h)
    }
}

struct Setup {
    model: Box<dyn DensityModel>,
    kernel: Kernel,
    c: f64,
    integrator: IntegratorKind,
}

impl Setup {
    fn replicate(&self, plan: &ExperimentPlan, n: usize, h: f64, rep: usize, mode: EstimatorMode) -> Result<Raw> {
        let seed = rng::derive_seed(plan.seed, n as u64, rep as u64);
        let start = plan.timings.then(Instant::now);
        let value = kde::simulate_kde(self.model.as_ref(), n, h, &self.kernel, mode, seed)
            .and_then(|f| levelset::symmdiff(&f, self.model.as_ref(), self.c, plan.weight, self.integrator))
            .map_err(|e| Error::Replication { n, rep, source: Box::new(e) })?
            .value;
        let runtime_ms = start.map_or(0, |t| t.elapsed().as_millis() as u64);
        Ok(Raw { rep, seed, value, runtime_ms })
    }
}

struct Raw {
    rep: usize,
    seed: u64,
    value: f64,
    runtime_ms: u64,
}

/// One replication. The CSV header is `n,h,rep,seed,dG,std_dG,runtime_ms`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReplicationRecord {
    pub n: usize,
    pub h: f64,
    pub rep: usize,
    pub seed: u64,
    #[serde(rename = "dG")]
    pub d_g: f64,
    /// `a_{n,G}·(d_G − mean over the batch)`
    #[serde(rename = "std_dG")]
    pub std_dg: f64,
    pub runtime_ms: u64,
}

pub fn write_records<W: Write>(records: &[ReplicationRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<ReplicationRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize().map(|x| x.map_err(Error::from)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub n: usize,
    pub h: f64,
    pub reps: usize,
    /// `a_{n,G}`
    pub norming: f64,
    pub mean: f64,
    pub variance: f64,
    /// Monte Carlo standard error of the mean.
    pub mean_se: f64,
    pub skewness: f64,
    pub excess_kurtosis: f64,
    /// Kolmogorov–Smirnov distance of the empirically standardized values
    /// to the standard normal (tests shape, not location).
    pub ks: f64,
    /// `a_{n,G}²·variance`
    pub scaled_variance: f64,
    /// `√(n h)·mean`
    pub scaled_mean: f64,
}

/// Moments and normality diagnostics of one batch of `d_G` values.
pub fn summarize(n: usize, h: f64, norming: f64, values: &[f64]) -> Summary {
    let r = values.len() as f64;
    let mean = values.iter().sum::<f64>() / r;
    let central = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / r;
    let (m2, m3, m4) = (central(2), central(3), central(4));
    let variance = if values.len() > 1 { m2 * r / (r - 1.0) } else { 0.0 };
    let (skewness, excess_kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2) - 3.0) } else { (0.0, 0.0) };
    let sd = variance.sqrt();
    let mut z: Vec<f64> =
        values.iter().map(|v| if sd > 0.0 { (v - mean) / sd } else { 0.0 }).collect();
    z.sort_by(f64::total_cmp);
    let ks = z
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = std_normal_cdf(x);
            ((i + 1) as f64 / r - p).max(p - i as f64 / r)
        })
        .fold(0.0, f64::max);
    Summary {
        n,
        h,
        reps: values.len(),
        norming,
        mean,
        variance,
        mean_se: (variance / r).sqrt(),
        skewness,
        excess_kurtosis,
        ks,
        scaled_variance: norming * norming * variance,
        scaled_mean: (n as f64 * h).sqrt() * mean,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CltRun {
    pub level: f64,
    pub integrator: IntegratorKind,
    pub records: Vec<ReplicationRecord>,
    pub summaries: Vec<Summary>,
}

fn run_batches(
    plan: &ExperimentPlan,
    setup: &Setup,
    mode: EstimatorMode,
) -> Result<(Vec<ReplicationRecord>, Vec<Summary>)> {
    let mut records = Vec::new();
    let mut summaries = Vec::new();
    for &n in &plan.n_values {
        let h = plan.bandwidth_for(n)?;
        let raw = (0..plan.reps)
            .into_par_iter()
            .map(|rep| setup.replicate(plan, n, h, rep, mode))
            .collect::<Result<Vec<Raw>>>()?;
        let values: Vec<f64> = raw.iter().map(|r| r.value).collect();
        let a = asymptotics::norming(n as f64, h, plan.weight.inv_gamma());
        let summary = summarize(n, h, a, &values);
        records.extend(raw.into_iter().map(|r| ReplicationRecord {
            n,
            h,
            rep: r.rep,
            seed: r.seed,
            d_g: r.value,
            std_dg: a * (r.value - summary.mean),
            runtime_ms: r.runtime_ms,
        }));
        summaries.push(summary);
    }
    Ok((records, summaries))
}

/// `R` replications of `d_G` at every `n` of the plan, in the plan's
/// estimator mode.
pub fn run_clt_experiment(plan: &ExperimentPlan) -> Result<CltRun> {
    let setup = plan.setup()?;
    let (records, summaries) = run_batches(plan, &setup, plan.mode)?;
    Ok(CltRun { level: setup.c, integrator: setup.integrator, records, summaries })
}

/// Limiting constants for the plan's configuration, where available.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TheoryReference {
    pub level: f64,
    pub sigma2: f64,
    /// Limit of `√(n h)·E λ(C_n Δ C)` (Lebesgue weight only).
    pub mean_constant: Option<f64>,
}

pub fn theory_reference(plan: &ExperimentPlan) -> Result<TheoryReference> {
    let setup = plan.setup()?;
    let spec = asymptotics::AsymptoticSpec::from_model(setup.model.as_ref(), setup.c, &setup.kernel, plan.weight, 0.0)?;
    let sigma2 = asymptotics::sigma2(&spec)?;
    let mean_constant = if plan.weight == WeightKind::Lebesgue {
        Some(asymptotics::mean_limit_constant(&spec, false)?.general)
    } else {
        None
    };
    Ok(TheoryReference { level: setup.c, sigma2, mean_constant })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoissonizationSummary {
    pub n: usize,
    pub reps: usize,
    pub fixed_mean: f64,
    pub poisson_mean: f64,
    pub fixed_second_moment: f64,
    pub poisson_second_moment: f64,
    /// Combined MC standard error of `E_fixed[d²] − 2·E_poisson[d²]`.
    pub moment_se: f64,
    /// Combined MC standard error of the difference of means.
    pub mean_diff_se: f64,
    /// `E_fixed[d²] ≤ 2·E_poisson[d²] + 3·moment_se`
    pub moment_inequality: bool,
    /// `|mean difference| < 4·mean_diff_se`
    pub means_agree: bool,
    pub skipped: Option<String>,
    pub fixed: Vec<f64>,
    pub poisson: Vec<f64>,
}

/// Paired fixed-n and Poissonized replications sharing their seeds (and
/// hence the first `min(n, N)` sample points).
pub fn run_poissonization_check(plan: &ExperimentPlan) -> Result<Vec<PoissonizationSummary>> {
    let setup = plan.setup()?;
    let mut out = Vec::new();
    for &n in &plan.n_values {
        let h = plan.bandwidth_for(n)?;
        let pairs = (0..plan.reps)
            .into_par_iter()
            .map(|rep| {
                let a = setup.replicate(plan, n, h, rep, EstimatorMode::FixedN)?;
                let b = setup.replicate(plan, n, h, rep, EstimatorMode::Poissonized)?;
                Ok((a.value, b.value))
            })
            .collect::<Result<Vec<(f64, f64)>>>()?;
        let (fixed, poisson): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        out.push(poissonization_summary(n, fixed, poisson));
    }
    Ok(out)
}

fn mean_and_se(x: &[f64]) -> (f64, f64) {
    let r = x.len() as f64;
    let m = x.iter().sum::<f64>() / r;
    let var = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (r - 1.0);
    (m, (var / r).sqrt())
}

pub fn poissonization_summary(n: usize, fixed: Vec<f64>, poisson: Vec<f64>) -> PoissonizationSummary {
    let reps = fixed.len();
    let sq = |x: &[f64]| x.iter().map(|v| v * v).collect::<Vec<f64>>();
    let (fixed_mean, se_f) = mean_and_se(&fixed);
    let (poisson_mean, se_p) = mean_and_se(&poisson);
    let (fixed_m2, se_f2) = mean_and_se(&sq(&fixed));
    let (poisson_m2, se_p2) = mean_and_se(&sq(&poisson));
    let moment_se = (se_f2 * se_f2 + 4.0 * se_p2 * se_p2).sqrt();
    let mean_diff_se = (se_f * se_f + se_p * se_p).sqrt();
    let skipped = (reps < 3).then(|| format!("{reps} replications are too few for a Monte Carlo error"));
    PoissonizationSummary {
        n,
        reps,
        fixed_mean,
        poisson_mean,
        fixed_second_moment: fixed_m2,
        poisson_second_moment: poisson_m2,
        moment_se,
        mean_diff_se,
        moment_inequality: skipped.is_none() && fixed_m2 <= 2.0 * poisson_m2 + 3.0 * moment_se,
        means_agree: skipped.is_none() && (fixed_mean - poisson_mean).abs() < 4.0 * mean_diff_se,
        skipped,
        fixed,
        poisson,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MultilevelResult {
    pub n: usize,
    pub levels: Vec<f64>,
    pub correlation: Vec<Vec<f64>>,
    pub max_off_diagonal: f64,
    /// `4/√R`
    pub threshold: f64,
    pub independent: bool,
    pub warnings: Vec<String>,
}

/// Empirical correlations of `d_G` across levels, each replication
/// evaluating every level on one estimate, at the largest `n` of the plan.
pub fn run_multilevel_correlation(plan: &ExperimentPlan, levels: &[LevelChoice]) -> Result<MultilevelResult> {
    let setup = plan.setup()?;
    let model = setup.model.as_ref();
    let cs = levels.iter().map(|l| l.resolve(model)).collect::<Result<Vec<f64>>>()?;
    if cs.is_empty() {
        return Err(Error::invalid("no levels given"));
    }
    for (i, a) in cs.iter().enumerate() {
        if cs[..i].contains(a) {
            return Err(Error::invalid(format!("levels must be distinct (c = {a} repeated)")));
        }
    }
    let n = *plan.n_values.last().expect("validated plan has sample sizes");
    let h = plan.bandwidth_for(n)?;
    let mut warnings = Vec::new();
    let w = levelset::band_half_width(n, h, DEFAULT_BAND_MULTIPLIER);
    let mut sorted = cs.clone();
    sorted.sort_by(f64::total_cmp);
    for p in sorted.windows(2) {
        if p[1] - p[0] < 2.0 * w {
            warnings.push(format!(
                "bands of half-width {w:.4} around c = {:.5} and c = {:.5} overlap",
                p[0], p[1]
            ));
        }
    }
    let rows = (0..plan.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = rng::derive_seed(plan.seed, n as u64, rep as u64);
            let wrap = |e| Error::Replication { n, rep, source: Box::new(e) };
            let f = kde::simulate_kde(model, n, h, &setup.kernel, plan.mode, seed).map_err(wrap)?;
            cs.iter()
                .map(|&c| Ok(levelset::symmdiff(&f, model, c, plan.weight, setup.integrator).map_err(wrap)?.value))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<Vec<f64>>>>()?;
    let correlation = correlation_matrix(&rows, cs.len());
    let max_off_diagonal = correlation
        .iter()
        .enumerate()
        .flat_map(|(i, row)| row.iter().enumerate().filter(move |&(j, _)| j != i).map(|(_, v)| v.abs()))
        .fold(0.0, f64::max);
    let threshold = 4.0 / (plan.reps as f64).sqrt();
    Ok(MultilevelResult {
        n,
        levels: cs,
        correlation,
        max_off_diagonal,
        threshold,
        independent: max_off_diagonal <= threshold,
        warnings,
    })
}

/// Pearson correlations of the columns of `rows`.
pub fn correlation_matrix(rows: &[Vec<f64>], m: usize) -> Vec<Vec<f64>> {
    let r = rows.len() as f64;
    let means: Vec<f64> = (0..m).map(|j| rows.iter().map(|x| x[j]).sum::<f64>() / r).collect();
    let cov = |a: usize, b: usize| rows.iter().map(|x| (x[a] - means[a]) * (x[b] - means[b])).sum::<f64>();
    (0..m)
        .map(|a| {
            (0..m)
                .map(|b| {
                    if a == b {
                        return 1.0;
                    }
                    let d = (cov(a, a) * cov(b, b)).sqrt();
                    if d > 0.0 {
                        cov(a, b) / d
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}
