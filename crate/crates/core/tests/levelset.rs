use std::f64::consts::PI;

use levelset_clt::field::Field;
use levelset_clt::kde::{self, EstimatorMode};
use levelset_clt::kernel::Kernel;
use levelset_clt::levelset::{
    lp_identity_check, measure_bound_stats, symmdiff, symmdiff_1d, symmdiff_grid, symmdiff_radial, symmdiff_scan,
    GridOptions, IntegratorKind, MultiCrossingPolicy, RadialOptions, ScanOptions, WeightKind,
};
use levelset_clt::models::{self, make_gauss1d, make_gauss2d, Gauss1d, Gauss2d};
use levelset_clt::quadrature;
use proptest::prelude::*;

/// `λ(A Δ B)` for two discs of radius `r` whose centres are `δ` apart.
fn disc_symmdiff(r: f64, delta: f64) -> f64 {
    if delta >= 2.0 * r {
        return 2.0 * PI * r * r;
    }
    let lens = 2.0 * r * r * (delta / (2.0 * r)).acos() - 0.5 * delta * (4.0 * r * r - delta * delta).sqrt();
    2.0 * (PI * r * r - lens)
}

#[test]
fn shifted_gaussian_matches_lens_formula() {
    let truth = make_gauss2d();
    let c = 0.05;
    let r = Gauss2d::radius(c).unwrap();
    for delta in [0.05, 0.3, 1.0] {
        let est = Gauss2d::shifted(delta, 0.0);
        let expect = disc_symmdiff(r, delta);
        let radial = symmdiff_radial(&est, &truth, c, WeightKind::Lebesgue, &RadialOptions::default()).unwrap();
        let scan = symmdiff_scan(&est, &truth, c, WeightKind::Lebesgue, &ScanOptions { spacing: Some(1e-3), ..Default::default() })
            .unwrap();
        assert!((radial.value - expect).abs() < 1e-5 * expect.max(1.0), "radial δ={delta}: {} vs {expect}", radial.value);
        assert!((scan.value - expect).abs() < 1e-4 * expect, "scan δ={delta}: {} vs {expect}", scan.value);
    }
}

#[test]
fn weighted_functional_matches_planar_quadrature() {
    // oracle: tensor Gauss–Legendre over a box, split at the two disc edges
    // along each vertical line
    let truth = make_gauss2d();
    let est = Gauss2d::shifted(0.4, 0.0);
    let c = 0.05;
    let r = Gauss2d::radius(c).unwrap();
    for weight in [WeightKind::ExcessPower(1.0), WeightKind::Density, WeightKind::ExcessPower(2.0)] {
        let gl = quadrature::rule(64);
        let mut expect = 0.0;
        let xs = [-r, -r + 0.4, r, r + 0.4];
        for w in xs.windows(2) {
            for (x, wx) in gl.mapped(w[0], w[1]) {
                let h0 = (r * r - x * x).max(0.0).sqrt();
                let h1 = (r * r - (x - 0.4) * (x - 0.4)).max(0.0).sqrt();
                let (lo, hi) = if h0 < h1 { (h0, h1) } else { (h1, h0) };
                for (a, b) in [(-hi, -lo), (lo, hi)] {
                    for (y, wy) in gl.mapped(a, b) {
                        expect += wx * wy * weight.eval(truth.value(&[x, y]), c);
                    }
                }
            }
        }
        let got = symmdiff_scan(&est, &truth, c, weight, &ScanOptions { spacing: Some(1e-3), ..Default::default() })
            .unwrap()
            .value;
        assert!((got - expect).abs() < 1e-3 * expect, "{weight:?}: {got} vs {expect}");
    }
}

#[test]
fn one_dimensional_shift_is_twice_the_offset() {
    let truth = make_gauss1d();
    let est = Gauss1d { mean: 0.25 };
    let c = 0.2;
    let r = symmdiff_1d(&est, &truth, c, WeightKind::Lebesgue).unwrap();
    assert!((r.value - 0.5).abs() < 1e-12, "{}", r.value);
    assert_eq!(r.diagnostics.crossing_mismatches, 0);
}

#[test]
fn integrators_agree_on_an_estimate() {
    let truth = make_gauss2d();
    let pts = models::sample(&truth, 4000, 21);
    let c = 0.05;
    for kernel in [Kernel::box_ball(2).unwrap(), Kernel::radial_polynomial(2).unwrap()] {
        let f = kde::fit(&pts, 0.01, &kernel).unwrap();
        for weight in [WeightKind::Lebesgue, WeightKind::ExcessPower(1.0), WeightKind::Density] {
            let scan = symmdiff_scan(&f, &truth, c, weight, &ScanOptions::default()).unwrap().value;
            let radial = symmdiff_radial(&f, &truth, c, weight, &RadialOptions { angles: 8192, ..Default::default() })
                .unwrap()
                .value;
            let grid = symmdiff_grid(&f, &truth, c, weight, &GridOptions { cell: Some(0.003), radius: None }).unwrap().value;
            assert!((scan - radial).abs() < 0.01 * scan, "{weight:?}: scan {scan} radial {radial}");
            assert!((scan - grid).abs() < 0.01 * scan, "{weight:?}: scan {scan} grid {grid}");
        }
    }
}

#[test]
fn ties_count_as_inside() {
    // one point: f_n = κ/h on the disc of radius h^{1/2}/2, shifted so that
    // the level sits exactly on that value
    let truth = make_gauss2d();
    let h = 0.01;
    let f = kde::fit(&levelset_clt::data::Points::new(2, vec![0.0, 0.0]).unwrap(), h, &Kernel::box_ball(2).unwrap()).unwrap();
    let c = 0.1;
    let shifted = levelset_clt::field::ShiftedField { inner: &f, shift: f.value(&[0.0, 0.0]) - c };
    let got = symmdiff_scan(&shifted, &truth, c, WeightKind::Lebesgue, &ScanOptions { spacing: Some(2e-4), ..Default::default() })
        .unwrap()
        .value;
    let r = Gauss2d::radius(c).unwrap();
    let expect = PI * r * r - PI * 0.25 * h;
    assert!((got - expect).abs() < 1e-4 * expect, "{got} vs {expect}");
}

#[test]
fn grid_rejects_cells_wider_than_the_band() {
    let truth = make_gauss2d();
    let f = kde::fit(&models::sample(&truth, 1000, 2), 1e-3, &Kernel::box_ball(2).unwrap()).unwrap();
    let opts = GridOptions { cell: Some(1e4), radius: None };
    assert!(symmdiff_grid(&f, &truth, 0.05, WeightKind::Lebesgue, &opts).is_err());
}

#[test]
fn multi_crossing_failover_switches_to_grid() {
    let truth = make_gauss2d();
    let pts = models::sample(&truth, 2000, 3);
    let f = kde::fit(&pts, 0.002, &Kernel::box_ball(2).unwrap()).unwrap();
    let opts = RadialOptions { angles: 256, policy: MultiCrossingPolicy::FailoverToGrid, ..Default::default() };
    let r = symmdiff_radial(&f, &truth, 0.05, WeightKind::Lebesgue, &opts).unwrap();
    assert!(r.diagnostics.failover);
    assert_eq!(r.integrator, IntegratorKind::Grid);
}

#[test]
fn lp_identity_on_one_field() {
    let truth = make_gauss2d();
    let f = kde::simulate_kde(&truth, 5000, 1.0 / (5000f64 * 5000f64.ln()).sqrt(), &Kernel::box_ball(2).unwrap(), EstimatorMode::FixedN, 8)
        .unwrap();
    for p in [1.0, 2.0] {
        let id = lp_identity_check(&f, &truth, p, 200, &GridOptions::default()).unwrap();
        assert!((id.lhs - id.rhs).abs() < 0.03 * id.rhs, "p={p}: {id:?}");
    }
}

#[test]
fn measure_bound_never_violated() {
    let truth = make_gauss2d();
    for seed in 0..5 {
        let f = kde::simulate_kde(&truth, 1000, 0.004, &Kernel::box_ball(2).unwrap(), EstimatorMode::Poissonized, seed).unwrap();
        let v = symmdiff(&f, &truth, 0.02, WeightKind::Lebesgue, IntegratorKind::Scan).unwrap().value;
        assert!(v <= (f.total_mass().unwrap() + 1.0) / 0.02);
    }
    let (checks, violations) = measure_bound_stats();
    assert!(checks >= 5);
    assert_eq!(violations, 0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lens_formula_for_random_shifts(dx in -1.5f64..1.5, dy in -1.5f64..1.5, c in 0.01f64..0.12) {
        let truth = make_gauss2d();
        let est = Gauss2d::shifted(dx, dy);
        let r = Gauss2d::radius(c).unwrap();
        let expect = disc_symmdiff(r, (dx * dx + dy * dy).sqrt());
        let got = symmdiff_radial(&est, &truth, c, WeightKind::Lebesgue, &RadialOptions::default()).unwrap().value;
        prop_assert!((got - expect).abs() < 1e-4 * expect.max(0.1));
        let bound = 2.0 / c;
        prop_assert!(got <= bound);
    }

    #[test]
    fn functional_is_nonnegative_and_zero_on_truth(c in 0.01f64..0.15) {
        let truth = make_gauss2d();
        let v = symmdiff_scan(&truth, &truth, c, WeightKind::Lebesgue, &ScanOptions { spacing: Some(0.01), ..Default::default() })
            .unwrap()
            .value;
        prop_assert_eq!(v, 0.0);
    }
}
