//! Acceptance suite: one test per criterion, each printing a PASS or FAIL
//! line with the measured values.

use std::io::Write;
use std::time::{Duration, Instant};

use mdimlab::constructions::{
    basel_tail, convergent_sequence_space, cylinder_chart_system, cantor_cylinder_system,
    damped_sequence, horseshoe_cascade, koch_points, power_growth_sequence, tent2, tent3,
    tent3_map, truncated_cascade, CascadeSpec, LambdaRule,
};
use mdimlab::counting::{
    max_separated, min_cover, min_spanning, CountMode, CountOptions, OrbitContext,
};
use mdimlab::estimators::{
    box_count, box_report, damping_witness, growth_rate, lap_series, mdim_estimate, sep_series,
    GrowthSeries, NetRule, RateEntry,
};
use mdimlab::experiment::perturbation_sweep;
use mdimlab::spaces::{sample_net, Point, PointCloud, Space};
use mdimlab::systems::{c0_distance, toral_fix_count, MapSystem, PiecewiseAffineMap, System};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn verdict(criterion: u32, pass: bool, elapsed: Duration, limit_s: u64, detail: &str) {
    let within = elapsed.as_secs_f64() < limit_s as f64;
    let ok = pass && within;
    // written to the process stdout directly so the line survives output capture
    let _ = writeln!(
        std::io::stdout().lock(),
        "criterion {criterion}: {} ({:.2} s of {limit_s} s) {detail}",
        if ok { "PASS" } else { "FAIL" },
        elapsed.as_secs_f64()
    );
    assert!(pass, "criterion {criterion} failed: {detail}");
    assert!(within, "criterion {criterion} exceeded {limit_s} s");
}

/// A random point set whose pairwise distances, and their halves, stay
/// away from `ε` so that strict and non-strict thresholds agree.
fn generic_instance(rng: &mut ChaCha8Rng, max_points: usize) -> (PointCloud, f64) {
    loop {
        let n = rng.gen_range(2..=max_points);
        let dim = rng.gen_range(1..=3);
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        let cloud = PointCloud::from_coords(dim, coords).unwrap();
        let eps = rng.gen_range(0.05..0.9);
        let generic = (0..n).all(|i| {
            (0..n).all(|j| {
                let d = cloud.distance(i, j);
                i == j || ((d - eps).abs() > 1e-9 && (d - eps / 2.0).abs() > 1e-9)
            })
        });
        if generic {
            return (cloud, eps);
        }
    }
}

fn cloud_context(cloud: PointCloud) -> OrbitContext {
    let n = cloud.len();
    let space = Space::cloud(cloud);
    let system: System = MapSystem::Identity { space }.into();
    OrbitContext::new(&system, 1, (0..n).map(Point::Site).collect()).unwrap()
}

#[test]
fn criterion_01_inequality_chain() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let opts = CountOptions::exact();
    let mut violations = 0;
    for _ in 0..100 {
        let (cloud, eps) = generic_instance(&mut rng, 14);
        let ctx = cloud_context(cloud);
        let span = min_spanning(&ctx, eps, &opts).unwrap();
        let sep = max_separated(&ctx, eps, &opts).unwrap();
        let cov = min_cover(&ctx, eps, &opts).unwrap();
        let span_half = min_spanning(&ctx, eps / 2.0, &opts).unwrap();
        for r in [&span, &sep, &cov, &span_half] {
            assert_eq!(r.mode, CountMode::Exact);
        }
        if !(span.count <= sep.count && sep.count <= cov.count && cov.count <= span_half.count) {
            violations += 1;
        }
    }
    verdict(1, violations == 0, start.elapsed(), 60, &format!("violations = {violations} of 100"));
}

#[test]
fn criterion_02_tent_entropy() {
    let start = Instant::now();
    let laps = lap_series(&tent3_map(), &(1..=10).collect::<Vec<_>>()).unwrap();
    let fit = growth_rate(&laps, 2).unwrap();
    let lap_ok = (fit.rate - 3f64.ln()).abs() < 1e-12 && fit.max_residual < 1e-12;

    let system: System = tent3().into();
    let rule = NetRule { mesh: 1e-3, max_ratio: 0.25 };
    let horizons: Vec<usize> = (1..=8).collect();
    let (series, results) =
        sep_series(&system, 0.01, &horizons, &rule, &CountOptions::default(), 1_000_000_000).unwrap();
    let sep_fit = growth_rate(&series, 2).unwrap();
    let rel = (sep_fit.rate - 3f64.ln()).abs() / 3f64.ln();
    let counts: Vec<usize> = results.iter().map(|r| r.count).collect();
    verdict(
        2,
        lap_ok && rel < 0.15,
        start.elapsed(),
        120,
        &format!(
            "lap rate = {:.15} (residual {:.1e}); sep rate = {:.4} vs log 3 = {:.4} (rel. error {:.3}); sep counts {counts:?}",
            fit.rate,
            fit.max_residual,
            sep_fit.rate,
            3f64.ln(),
            rel
        ),
    );
}

#[test]
fn criterion_03_cantor_box_dimension() {
    let start = Instant::now();
    let space = Space::cantor(10);
    let covers: Vec<_> = (2..=8)
        .map(|k| box_count(&space, |m| sample_net(&space, m), 3f64.powi(-k), &CountOptions::default()).unwrap())
        .collect();
    let report = box_report(&covers, 3).unwrap();
    let target = 2f64.ln() / 3f64.ln();
    let pass = (report.lower_estimate - target).abs() <= 0.05 && (report.upper_estimate - target).abs() <= 0.05;
    let counts: Vec<usize> = covers.iter().map(|c| c.count).collect();
    verdict(
        3,
        pass,
        start.elapsed(),
        30,
        &format!(
            "lower = {:.4}, upper = {:.4}, target = {target:.4}; N(3^-k) = {counts:?}",
            report.lower_estimate, report.upper_estimate
        ),
    );
}

#[test]
fn criterion_04_cylinder_shift() {
    let start = Instant::now();
    let opts = CountOptions::exact();
    let horizons: Vec<usize> = (1..=4).collect();
    let mut entries = Vec::new();
    let mut bound_ok = true;
    let mut details = Vec::new();
    for k in 1..=3usize {
        let eps = 0.95 * 3f64.powi(-(k as i32));
        assert!(eps >= 3f64.powi(-(k as i32 + 1)) && eps < 3f64.powi(-(k as i32)));
        let mut results = Vec::new();
        for &n in &horizons {
            // chart of the cylinder system at scale k: the block shift by k
            // symbols, on all 2^(nk) words of length nk
            let system: System = cylinder_chart_system(k, n * k).unwrap().into();
            let net = sample_net(&system.space(), 1e-9).unwrap();
            assert_eq!(net.len(), 1 << (n * k));
            let ctx = OrbitContext::new(&system, n, net).unwrap();
            let r = max_separated(&ctx, eps, &opts).unwrap();
            bound_ok &= r.mode == CountMode::Exact && r.count >= 1usize << (n * k);
            results.push(r);
        }
        details.push(format!("k={k}: sep = {:?}", results.iter().map(|r| r.count).collect::<Vec<_>>()));
        let series = GrowthSeries::from_counts(eps, &results).unwrap();
        entries.push(RateEntry::from_series(&series, 1).unwrap());
    }
    let report = mdim_estimate(&entries, 3).unwrap();
    let pass = bound_ok && report.lower_estimate >= 0.55 && report.upper_estimate <= 0.72;

    // the cylinder system on the ambient word metric, for reference
    let ambient: System = cantor_cylinder_system(1, 8).unwrap().into();
    let net = sample_net(&ambient.space(), 1e-9).unwrap();
    let ambient_counts: Vec<usize> = horizons
        .iter()
        .map(|&n| {
            let ctx = OrbitContext::new(&ambient, n, net.clone()).unwrap();
            max_separated(&ctx, 0.95 / 3.0, &opts).unwrap().count
        })
        .collect();
    verdict(
        4,
        pass,
        start.elapsed(),
        300,
        &format!(
            "sep ≥ 2^(nk): {bound_ok}; mdim lower = {:.4}, upper = {:.4}; {}; ambient k=1 sep at 0.95/3 = {ambient_counts:?}",
            report.lower_estimate,
            report.upper_estimate,
            details.join("; ")
        ),
    );
}

#[test]
fn criterion_05_toral_fixed_points() {
    let start = Instant::now();
    let lambda = (3.0 + 5f64.sqrt()) / 2.0;
    let mut mismatches = Vec::new();
    for n in 1..=12u32 {
        let count = toral_fix_count([[2, 1], [1, 1]], n).unwrap();
        let expected = (lambda.powi(n as i32) + lambda.powi(-(n as i32)) - 2.0).round() as u128;
        if count != expected {
            mismatches.push((n, count, expected));
        }
    }
    verdict(5, mismatches.is_empty(), start.elapsed(), 1, &format!("mismatches = {mismatches:?}"));
}

#[test]
fn criterion_06_cascade_horseshoes() {
    let start = Instant::now();
    let spec = CascadeSpec::linear(6);
    let psi = horseshoe_cascade(&spec).unwrap();
    let map = psi.to_pam().unwrap();
    let a = spec.a_values();
    let horseshoes: Vec<bool> = (1..=3)
        .map(|n| map.verify_horseshoe(a[n - 1], a[n], 3usize.pow(n as u32)).holds)
        .collect();
    let mut distances = Vec::new();
    let mut bound_ok = true;
    for n in 1..=4 {
        let d = c0_distance(&truncated_cascade(&spec, n).unwrap(), &psi, 1e-3).unwrap();
        let bound = basel_tail(n + 1);
        bound_ok &= d <= bound + 1e-9;
        distances.push(format!("n={n}: {d:.6} ≤ {bound:.6}"));
    }
    verdict(
        6,
        horseshoes.iter().all(|&h| h) && bound_ok,
        start.elapsed(),
        30,
        &format!("horseshoes {horseshoes:?}; truncation distances {}", distances.join(", ")),
    );
}

#[test]
fn criterion_07_discontinuity_evidence() {
    let start = Instant::now();
    let spec = CascadeSpec::linear(8);
    let deltas = [0.2, 0.1, 0.05];
    let epsilons: Vec<f64> = (2..=9).map(|k| 3f64.powi(-k)).collect();
    let horizons: Vec<usize> = (1..=20).collect();
    let rows =
        perturbation_sweep(&PiecewiseAffineMap::identity(), Some(&spec), &deltas, &epsilons, &horizons).unwrap();
    let pass = rows.iter().all(|r| r.c0_distance <= r.delta && r.mdim_lower > 0.5);
    let detail: Vec<String> = rows
        .iter()
        .map(|r| format!("δ={}: d_C0 = {:.4}, mdim ∈ [{:.3}, {:.3}]", r.delta, r.c0_distance, r.mdim_lower, r.mdim_upper))
        .collect();
    verdict(7, pass, start.elapsed(), 300, &detail.join("; "));
}

#[test]
fn criterion_08_damping() {
    let start = Instant::now();
    let undamped = power_growth_sequence(tent2());
    let damped = damped_sequence(undamped.clone(), LambdaRule::Harmonic, 0).unwrap();

    let probes: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();
    let table = damping_witness(&damped, &probes, 1000).unwrap();
    let collapse = table.iter().find(|(_, s)| *s < 0.01).map(|(k, _)| *k);

    let eps = 0.05;
    let horizons: Vec<usize> = (1..=4).collect();
    let opts = CountOptions::default();
    let budget = 1_000_000_000;
    let (damped_series, damped_counts) =
        sep_series(&damped.clone().into(), eps, &horizons, &NetRule::quarter(eps), &opts, budget).unwrap();
    let damped_rate = growth_rate(&damped_series, 1).unwrap().rate;
    let (_, undamped_counts) =
        sep_series(&undamped.clone().into(), eps, &horizons, &NetRule::quarter(eps), &opts, budget).unwrap();
    let logs: Vec<f64> = undamped_counts.iter().map(|r| r.log_count()).collect();
    let increments: Vec<f64> = logs.windows(2).map(|w| w[1] - w[0]).collect();
    let superexponential = increments.windows(2).all(|w| w[1] > w[0]);

    let pass = collapse.is_some() && damped_rate < 0.05 && superexponential;
    verdict(
        8,
        pass,
        start.elapsed(),
        120,
        &format!(
            "sup < 0.01 first at k = {collapse:?}; damped sep {:?} (rate {damped_rate:.3}, needs < 0.05); undamped sep {:?} (log increments {increments:.3?})",
            damped_counts.iter().map(|r| r.count).collect::<Vec<_>>(),
            undamped_counts.iter().map(|r| r.count).collect::<Vec<_>>()
        ),
    );
}

fn random_map(rng: &mut ChaCha8Rng) -> PiecewiseAffineMap {
    let pieces = rng.gen_range(1..=4);
    let mut xs: Vec<f64> = (0..pieces - 1).map(|_| rng.gen::<f64>()).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    let vs = xs.iter().map(|_| rng.gen::<f64>()).collect();
    PiecewiseAffineMap::new(xs, vs).unwrap()
}

#[test]
fn criterion_09_product_submultiplicativity() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let opts = CountOptions::exact();
    let mut violations = 0;
    let mut checked = 0;
    for _ in 0..50 {
        let phi = MapSystem::interval(random_map(&mut rng));
        let psi = MapSystem::interval(random_map(&mut rng));
        let n = rng.gen_range(1..=3);
        let eps = rng.gen_range(0.05..0.5);
        let xs: Vec<f64> = (0..rng.gen_range(2..=12)).map(|_| rng.gen::<f64>()).collect();
        let ys: Vec<f64> = (0..rng.gen_range(2..=12)).map(|_| rng.gen::<f64>()).collect();
        let left = OrbitContext::new(&phi.clone().into(), n, xs.iter().map(|&x| Point::Real(x)).collect()).unwrap();
        let right = OrbitContext::new(&psi.clone().into(), n, ys.iter().map(|&y| Point::Real(y)).collect()).unwrap();
        let product_net: Vec<Point> = xs
            .iter()
            .flat_map(|&x| ys.iter().map(move |&y| Point::Tuple(vec![Point::Real(x), Point::Real(y)])))
            .collect();
        let both = OrbitContext::new(&MapSystem::product(phi, psi).into(), n, product_net).unwrap();
        let a = min_cover(&left, eps, &opts).unwrap();
        let b = min_cover(&right, eps, &opts).unwrap();
        let c = min_cover(&both, 2.0 * eps, &opts).unwrap();
        assert_eq!(c.mode, CountMode::Exact);
        checked += 1;
        if c.count > a.count * b.count {
            violations += 1;
        }
    }
    verdict(9, violations == 0, start.elapsed(), 60, &format!("violations = {violations} of {checked}"));
}

#[test]
fn criterion_10_box_dimension_side_cases() {
    let start = Instant::now();
    let opts = CountOptions::default();
    let koch = Space::cloud(koch_points(6).unwrap());
    let koch_covers: Vec<_> = (2..=5)
        .map(|k| box_count(&koch, |m| sample_net(&koch, m), 1.0001 * 3f64.powi(-k), &opts).unwrap())
        .collect();
    let koch_report = box_report(&koch_covers, 3).unwrap();
    let koch_target = 4f64.ln() / 3f64.ln();
    let koch_ok = (koch_report.lower_estimate - koch_target).abs() <= 0.08
        && (koch_report.upper_estimate - koch_target).abs() <= 0.08;

    let a = Space::cloud(convergent_sequence_space(10_000).unwrap());
    let a_covers: Vec<_> = (4..=10)
        .map(|k| box_count(&a, |m| sample_net(&a, m), 2f64.powi(-k), &opts).unwrap())
        .collect();
    let a_report = box_report(&a_covers, 3).unwrap();
    let a_ok = (a_report.lower_estimate - 0.5).abs() <= 0.1;
    verdict(
        10,
        koch_ok && a_ok,
        start.elapsed(),
        60,
        &format!(
            "Koch [{:.4}, {:.4}] vs {koch_target:.4} (modes {:?}); A lower = {:.4} (modes {:?})",
            koch_report.lower_estimate,
            koch_report.upper_estimate,
            koch_covers.iter().map(|c| c.mode).collect::<Vec<_>>(),
            a_report.lower_estimate,
            a_covers.iter().map(|c| c.mode).collect::<Vec<_>>()
        ),
    );
}
