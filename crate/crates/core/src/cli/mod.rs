//! Command-line front end. Exit codes: 0 success, 1 usage or input error,
//! 2 numerical failure.

mod args;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Parser;
use serde::Serialize;
use serde_json::json;

pub use args::*;

use crate::assumptions::{self, check_configuration};
use crate::asymptotics::{self, AsymptoticSpec};
use crate::data::{read_points_file, Points};
use crate::error::{Error, Result};
use crate::experiments::{self, ExperimentPlan, LevelChoice};
use crate::inference::{self, Calibration, Centering, TestOptions};
use crate::kde::{self, BandwidthRule, EstimatorMode};
use crate::kernel::{Kernel, KernelKind};
use crate::levelset::{self, GridOptions, IntegratorKind, RadialOptions, ScanOptions, WeightKind};
use crate::models::{self, DensityModel};
use crate::SCHEMA_VERSION;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;

/// Parses `argv` (including the program name), runs the subcommand and
/// returns the exit code. Messages go to stderr.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match cli.threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build()
            .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))
            .and_then(|pool| pool.install(|| dispatch(&cli.command))),
        None => dispatch(&cli.command),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                EXIT_NUMERICAL
            } else {
                EXIT_USAGE
            }
        }
    }
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Estimate(a) => estimate(a),
        Command::Sigma(a) => sigma(a),
        Command::Sim(a) => sim(a),
        Command::Variance(a) => variance(a),
        Command::Test(a) => test(a),
        Command::Check(a) => check(a),
    }
}

fn kernel_kind(k: KernelArg) -> KernelKind {
    match k {
        KernelArg::Box => KernelKind::BoxBall,
        KernelArg::Radpoly => KernelKind::RadialPolynomial,
    }
}

fn integrator_kind(i: IntegratorArg) -> IntegratorKind {
    match i {
        IntegratorArg::Radial => IntegratorKind::Radial,
        IntegratorArg::Scan => IntegratorKind::Scan,
        IntegratorArg::Line => IntegratorKind::Line,
        IntegratorArg::Grid => IntegratorKind::Grid,
    }
}

impl Common {
    fn level_choice(&self) -> LevelChoice {
        match (self.c, self.alpha) {
            (Some(c), _) => LevelChoice::Level(c),
            (None, Some(a)) => LevelChoice::Coverage(a),
            (None, None) => LevelChoice::Coverage(0.95),
        }
    }

    fn resolve(&self) -> Result<(Box<dyn DensityModel>, Kernel, f64)> {
        let model = models::model_by_name(&self.model)?;
        let kernel = Kernel::builtin(kernel_kind(self.kernel), model.dim())?;
        let c = self.level_choice().resolve(model.as_ref())?;
        Ok((model, kernel, c))
    }
}

impl BandwidthArgs {
    fn rule(&self, dim: usize) -> BandwidthRule {
        match (self.h_volume, self.h_axis) {
            (Some(h), _) => BandwidthRule::Explicit(h),
            (None, Some(s)) => BandwidthRule::Explicit(kde::volume_bandwidth(s, dim)),
            (None, None) => BandwidthRule::RootNLogN,
        }
    }

    fn resolve(&self, n: usize, dim: usize) -> Result<f64> {
        let bw = kde::bandwidth_schedule(n, self.rule(dim))?;
        for w in &bw.warnings {
            eprintln!("warning: {w}");
        }
        Ok(bw.h)
    }
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => fs::write(p, text)?,
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(value)? + "\n")
}

fn document<C: Serialize, R: Serialize, S: Serialize>(command: &str, config: &C, resolved: R, result: S) -> serde_json::Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "command": command,
        "config": config,
        "resolved": resolved,
        "result": result,
    })
}

fn estimate(a: &EstimateArgs) -> Result<()> {
    let (model, kernel, c) = a.common.resolve()?;
    let weight = WeightKind::parse(&a.weight)?;
    let points = match (&a.data, a.n) {
        (Some(path), _) => read_points_file(path)?,
        (None, Some(n)) => {
            let seed = a.seed.ok_or_else(|| Error::invalid("--n requires --seed"))?;
            models::sample(model.as_ref(), n, seed)
        }
        (None, None) => return Err(Error::invalid("either --data or --n is required")),
    };
    if points.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: points.dim() });
    }
    let n = points.len();
    let h = a.bandwidth.resolve(n, model.dim())?;
    let field = kde::fit(&points, h, &kernel)?;
    let integrator = a.integrator.map(integrator_kind).unwrap_or(IntegratorKind::default_for(model.dim()));
    let truth = model.as_ref();
    let result = match integrator {
        IntegratorKind::Radial => {
            let mut o = RadialOptions::default();
            if let Some(k) = a.angles {
                o.angles = k;
            }
            levelset::symmdiff_radial(&field, truth, c, weight, &o)?
        }
        IntegratorKind::Scan => {
            levelset::symmdiff_scan(&field, truth, c, weight, &ScanOptions { spacing: a.spacing, ..Default::default() })?
        }
        IntegratorKind::Line => levelset::symmdiff_1d(&field, truth, c, weight)?,
        IntegratorKind::Grid => {
            levelset::symmdiff_grid(&field, truth, c, weight, &GridOptions { cell: a.cell, radius: None })?
        }
    };
    let text = match a.format {
        FormatArg::Csv => format!(
            "d_G,c,weight,integrator,n,h\n{:?},{:?},{},{},{},{:?}\n",
            result.value,
            c,
            weight.name(),
            integrator.name(),
            n,
            h
        ),
        FormatArg::Json => to_json(&document(
            "estimate",
            a,
            json!({ "c": c, "n": n, "h": h, "integrator": integrator }),
            &result,
        ))?,
    };
    emit(a.out.as_deref(), &text)
}

fn sigma(a: &SigmaArgs) -> Result<()> {
    let (model, kernel, c) = a.common.resolve()?;
    let weight = WeightKind::parse(&a.weight)?;
    let dim = model.dim();
    let nh = match a.n {
        Some(n) => Some((n, a.bandwidth.resolve(n, dim)?)),
        None => None,
    };
    let (gamma, gamma_source) = match (a.gamma, nh) {
        (Some(g), _) => (g, "given"),
        (None, Some((n, h))) if dim > 1 => (asymptotics::gamma_proxy(n as f64, h, dim), "proxy"),
        _ => (0.0, "default"),
    };
    let mut spec = AsymptoticSpec::from_model(model.as_ref(), c, &kernel, weight, gamma)?;
    spec.nodes = a.nodes;
    let sigma2 = asymptotics::sigma2(&spec)?;
    let gauss2d = a.common.model == "gauss2d";
    let mean_limit = asymptotics::mean_limit_constant(&spec, gauss2d)?;
    let norming = nh.map(|(n, h)| asymptotics::norming(n as f64, h, weight.inv_gamma()));
    let result = json!({
        "sigma2": sigma2,
        "norming": norming,
        "norming_form": "(n/h)^(1/4)·(n h)^(p/2)",
        "inv_gamma": weight.inv_gamma(),
        "mean_limit_constant": mean_limit,
    });
    let resolved = json!({
        "c": c,
        "gamma": gamma,
        "gamma_source": gamma_source,
        "n": nh.map(|x| x.0),
        "h": nh.map(|x| x.1),
        "kernel_l2_norm": kernel.l2_norm(),
    });
    emit(a.out.as_deref(), &to_json(&document("sigma", a, resolved, result))?)
}

fn sim(a: &SimArgs) -> Result<()> {
    let model = models::model_by_name(&a.common.model)?;
    let mut plan = ExperimentPlan::new(&a.common.model, a.n.clone(), a.reps, a.seed);
    plan.kernel = kernel_kind(a.common.kernel);
    plan.weight = WeightKind::parse(&a.weight)?;
    plan.level = a.common.level_choice();
    plan.bandwidth = a.bandwidth.rule(model.dim());
    plan.integrator = a.integrator.map(integrator_kind);
    plan.timings = a.timings;
    plan.validate()?;
    for &n in &plan.n_values {
        a.bandwidth.resolve(n, model.dim())?;
    }
    fs::create_dir_all(&a.out_dir)?;
    let modes: &[(EstimatorMode, &str)] = match a.mode {
        ModeArg::Fixed => &[(EstimatorMode::FixedN, "records.csv")],
        ModeArg::Poisson => &[(EstimatorMode::Poissonized, "records.csv")],
        ModeArg::Both => &[(EstimatorMode::FixedN, "records_fixed.csv"), (EstimatorMode::Poissonized, "records_poisson.csv")],
    };
    let mut runs = Vec::new();
    for &(mode, file) in modes {
        plan.mode = mode;
        let run = experiments::run_clt_experiment(&plan)?;
        let f = fs::File::create(a.out_dir.join(file))?;
        experiments::write_records(&run.records, std::io::BufWriter::new(f))?;
        runs.push((mode, file, run));
    }
    plan.mode = modes[0].0;
    let poissonization = if runs.len() == 2 {
        plan.n_values
            .iter()
            .map(|&n| {
                let values = |k: usize| -> Vec<f64> {
                    runs[k].2.records.iter().filter(|r| r.n == n).map(|r| r.d_g).collect()
                };
                let mut s = experiments::poissonization_summary(n, values(0), values(1));
                s.fixed.clear();
                s.poisson.clear();
                s
            })
            .collect::<Vec<_>>()
    } else {
        Vec::new()
    };
    let multilevel = if a.alphas.is_empty() {
        None
    } else {
        let mut levels = vec![plan.level];
        levels.extend(a.alphas.iter().map(|&x| LevelChoice::Coverage(x)));
        Some(experiments::run_multilevel_correlation(&plan, &levels)?)
    };
    let theory = experiments::theory_reference(&plan).ok();
    let batches: Vec<_> = runs
        .iter()
        .map(|(mode, file, run)| json!({ "mode": mode, "records": file, "summaries": run.summaries }))
        .collect();
    let result = json!({
        "batches": batches,
        "theory": theory,
        "poissonization": poissonization,
        "multilevel": multilevel,
        "standardization": "KS uses the empirical mean and standard deviation",
    });
    let resolved = json!({ "c": runs[0].2.level, "integrator": runs[0].2.integrator, "plan": plan });
    fs::write(a.out_dir.join("summary.json"), to_json(&document("sim", a, resolved, result))?)?;
    Ok(())
}

fn load_or_simulate(data: &Option<PathBuf>, n: Option<usize>, model: &dyn DensityModel, seed: u64) -> Result<Points> {
    let points = match (data, n) {
        (Some(path), _) => read_points_file(path)?,
        (None, Some(n)) => models::sample(model, n, seed),
        (None, None) => return Err(Error::invalid("either --data or --n is required")),
    };
    if points.dim() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: points.dim() });
    }
    Ok(points)
}

fn variance(a: &VarianceArgs) -> Result<()> {
    let (model, kernel, c) = a.common.resolve()?;
    let weight = WeightKind::parse(&a.weight)?;
    let points = load_or_simulate(&a.data, a.n, model.as_ref(), a.seed)?;
    let m = a.m.unwrap_or_else(|| inference::subsample_size(points.len(), a.m_exponent));
    let r = inference::subsample_variance(&points, model.as_ref(), c, weight, &kernel, m, a.seed)?;
    let reference = AsymptoticSpec::from_model(model.as_ref(), c, &kernel, weight, 0.0)
        .and_then(|s| asymptotics::sigma2(&s))
        .ok();
    let result = json!({
        "m_n": r.m_n,
        "subsamples": r.subsamples,
        "h_m": r.h_m,
        "estimate": r.estimate,
        "sigma2_limit": reference,
        "xi": r.xi,
    });
    let resolved = json!({ "c": c, "n": points.len() });
    emit(a.out.as_deref(), &to_json(&document("variance", a, resolved, result))?)
}

fn parse_source<'a>(spec: &'a str, what: &str) -> Result<(&'a str, &'a str)> {
    spec.split_once(':')
        .ok_or_else(|| Error::invalid(format!("{what} must be model:<name> or csv:<path> (got '{spec}')")))
}

fn test(a: &TestArgs) -> Result<()> {
    let (kind, value) = parse_source(&a.reference, "--reference")?;
    let mut warnings = Vec::new();
    let reference: Box<dyn DensityModel> = match kind {
        "model" => models::model_by_name(value)?,
        "csv" => {
            let pts = read_points_file(Path::new(value))?;
            let kernel = Kernel::builtin(kernel_kind(a.kernel), pts.dim())?;
            let (m, w) = inference::reference_from_sample(pts, &kernel)?;
            warnings = w;
            Box::new(m)
        }
        other => return Err(Error::invalid(format!("unknown reference kind '{other}'"))),
    };
    for w in &warnings {
        eprintln!("warning: reference {w}");
    }
    let (kind, value) = parse_source(&a.batch, "--batch")?;
    if kind != "csv" {
        return Err(Error::invalid("--batch must be csv:<path>"));
    }
    let batch = read_points_file(Path::new(value))?;
    if batch.dim() != reference.dim() {
        return Err(Error::DimensionMismatch { expected: reference.dim(), got: batch.dim() });
    }
    let opts = TestOptions {
        alpha: a.alpha,
        calibration: match a.calibration {
            CalibrationArg::Simulated => Calibration::Simulated { reps: a.reps, seed: a.seed },
            CalibrationArg::Closed => Calibration::Closed,
        },
        threshold: a.threshold,
        centering: match a.centering {
            CenteringArg::Reference => Centering::Reference,
            CenteringArg::Estimate => Centering::EstimateCoverage,
        },
        kernel: Kernel::builtin(kernel_kind(a.kernel), reference.dim())?,
    };
    let outcome = inference::online_test(reference.as_ref(), &batch, &opts)?;
    let resolved = json!({ "reference": reference.name(), "warnings": warnings });
    emit(a.out.as_deref(), &to_json(&document("test", a, resolved, &outcome))?)
}

fn check(a: &CheckArgs) -> Result<()> {
    let model = models::model_by_name(&a.common.model)?;
    let kernel = Kernel::builtin(kernel_kind(a.common.kernel), model.dim())?;
    // an out-of-window level is reported by the table, not rejected
    let c = match a.common.level_choice() {
        LevelChoice::Level(c) => c,
        LevelChoice::Coverage(alpha) => models::level_from_coverage(model.as_ref(), alpha)?,
    };
    let h = kde::bandwidth_schedule(a.n, a.bandwidth.rule(model.dim()))?.h;
    let checks = check_configuration(model.as_ref(), &kernel, a.n, h, c);
    let overall = assumptions::overall(&checks);
    let text = match a.format {
        FormatArg::Csv => {
            let mut s = String::from("assumption,status,detail\n");
            for ch in &checks {
                s.push_str(&format!("{},{},\"{}\"\n", ch.assumption, ch.status.name(), ch.detail));
            }
            s
        }
        FormatArg::Json => to_json(&document(
            "check",
            a,
            json!({ "c": c, "h": h }),
            json!({ "checks": checks, "overall": overall }),
        ))?,
    };
    emit(None, &text)
}
