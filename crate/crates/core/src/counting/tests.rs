use super::*;
use crate::spaces::{sample_net, PointCloud, Space};
use crate::systems::{MapSystem, PiecewiseAffineMap};
use proptest::prelude::*;

fn identity() -> System {
    MapSystem::interval(PiecewiseAffineMap::identity()).into()
}

fn tent2() -> MapSystem {
    MapSystem::interval(PiecewiseAffineMap::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).unwrap())
}

fn tent3() -> MapSystem {
    MapSystem::interval(
        PiecewiseAffineMap::new(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], vec![0.0, 1.0, 0.0, 1.0])
            .unwrap(),
    )
}

fn reals(xs: &[f64]) -> Vec<Point> {
    xs.iter().map(|&x| Point::Real(x)).collect()
}

fn ctx(system: &System, horizon: usize, net: Vec<Point>) -> OrbitContext {
    OrbitContext::new(system, horizon, net).unwrap()
}

/// Pairwise distance matrix of a context.
fn matrix(c: &OrbitContext) -> Vec<Vec<f64>> {
    (0..c.len())
        .map(|i| (0..c.len()).map(|j| c.distance(i, j)).collect())
        .collect()
}

fn brute_sep(d: &[Vec<f64>], eps: f64) -> usize {
    let n = d.len();
    (1u32..1 << n)
        .filter(|&m| {
            (0..n).all(|i| (0..n).all(|j| i == j || m >> i & 1 == 0 || m >> j & 1 == 0 || d[i][j] > eps))
        })
        .map(u32::count_ones)
        .max()
        .unwrap() as usize
}

fn brute_span(d: &[Vec<f64>], eps: f64) -> usize {
    let n = d.len();
    (1u32..1 << n)
        .filter(|&m| (0..n).all(|p| (0..n).any(|c| m >> c & 1 == 1 && d[p][c] < eps)))
        .map(u32::count_ones)
        .min()
        .unwrap() as usize
}

fn brute_cov(d: &[Vec<f64>], eps: f64) -> usize {
    let n = d.len();
    let full = (1usize << n) - 1;
    let clique = |m: usize| {
        (0..n).all(|i| (0..n).all(|j| m >> i & 1 == 0 || m >> j & 1 == 0 || i == j || d[i][j] < eps))
    };
    let mut best = vec![usize::MAX; full + 1];
    best[0] = 0;
    for mask in 1..=full {
        let low = mask & mask.wrapping_neg();
        let mut sub = mask;
        while sub > 0 {
            if sub & low != 0 && clique(sub) && best[mask ^ sub] != usize::MAX {
                best[mask] = best[mask].min(best[mask ^ sub] + 1);
            }
            sub = (sub - 1) & mask;
        }
    }
    best[full]
}

#[test]
fn identity_orbits_reduce_to_ambient_distance() {
    let c = ctx(&identity(), 5, reals(&[0.1, 0.7]));
    assert_eq!(c.distance(0, 1), (0.7f64 - 0.1).abs());
    assert_eq!(c.distance(1, 1), 0.0);
}

#[test]
fn tent2_two_step_distance() {
    let d = orbit_distance(&tent2().into(), 2, &Point::Real(0.0), &Point::Real(0.5)).unwrap();
    assert_eq!(d, 1.0);
    let d1 = orbit_distance(&tent2().into(), 1, &Point::Real(0.0), &Point::Real(0.5)).unwrap();
    assert_eq!(d1, 0.5);
}

#[test]
fn separated_examples() {
    let c = ctx(&identity(), 1, reals(&[0.0, 0.3, 0.6, 1.0]));
    let r = max_separated(&c, 0.5, &CountOptions::exact()).unwrap();
    assert_eq!(r.count, 2);
    assert_eq!(r.count, brute_sep(&matrix(&c), 0.5));
    assert_eq!(r.witness.len(), r.count);
    assert_eq!(max_separated(&c, 1.5, &CountOptions::exact()).unwrap().count, 1);
}

#[test]
fn cantor_shift_separation() {
    let (n, k) = (2usize, 1usize);
    let space = Space::cantor(n + k);
    let net = sample_net(&space, 3f64.powi(-((n + k) as i32))).unwrap();
    let sigma: System = MapSystem::shift(space, 1, 0).unwrap().into();
    let c = ctx(&sigma, n, net);
    let r = max_separated(&c, 0.2, &CountOptions::exact()).unwrap();
    assert!(r.count >= 1 << (n * k));
}

#[test]
fn spanning_examples() {
    let c = ctx(&identity(), 1, reals(&[0.0, 0.5, 1.0]));
    let r = min_spanning(&c, 0.6, &CountOptions::exact()).unwrap();
    assert_eq!(r.count, 1);
    assert_eq!(r.witness, vec![Point::Real(0.5)]);
    assert_eq!(min_spanning(&c, 2.0, &CountOptions::exact()).unwrap().count, 1);
    let single = ctx(&identity(), 1, reals(&[0.4]));
    assert_eq!(min_spanning(&single, 0.01, &CountOptions::exact()).unwrap().count, 1);
}

#[test]
fn cover_examples() {
    let c = ctx(&identity(), 1, reals(&[0.0, 0.5, 1.0]));
    assert_eq!(min_cover(&c, 0.6, &CountOptions::exact()).unwrap().count, 2);
    assert_eq!(min_cover(&c, 1.5, &CountOptions::exact()).unwrap().count, 1);
    assert_eq!(min_cover(&c, 0.5, &CountOptions::exact()).unwrap().count, 3);
    // same instance on the circle goes through the clique solver
    let circle = ctx(
        &MapSystem::Identity { space: Space::Circle }.into(),
        1,
        vec![Point::Angle(0.0), Point::Angle(0.25), Point::Angle(0.5)],
    );
    assert_eq!(min_cover(&circle, 0.3, &CountOptions::exact()).unwrap().count, 2);
}

#[test]
fn exact_cap_is_enforced() {
    let net = sample_net(&Space::Interval, 0.001).unwrap();
    let c = ctx(&identity(), 1, net);
    let opts = CountOptions {
        exact_cap: 10,
        ..CountOptions::exact()
    };
    assert!(matches!(
        max_separated(&c, 0.5, &opts),
        Err(Error::ExactCapExceeded { .. })
    ));
    let auto = CountOptions {
        exact_cap: 10,
        ..CountOptions::default()
    };
    let r = max_separated(&c, 0.5, &auto).unwrap();
    assert_eq!(r.mode, CountMode::GreedyLower);
    assert_eq!(r.count, 2);
}

#[test]
fn budget_is_enforced() {
    let net = sample_net(&Space::Interval, 0.01).unwrap();
    let err = OrbitContext::with_budget(&identity(), 10, net, 100);
    assert!(matches!(err, Err(Error::BudgetExceeded { budget: 100, .. })));
}

#[test]
fn grid_greedy_agrees_with_definition() {
    let net = sample_net(&Space::Interval, 1.0 / 40_000.0).unwrap();
    let c = ctx(&tent3().into(), 3, net);
    let r = max_separated(&c, 0.05, &CountOptions::greedy()).unwrap();
    let idx: Vec<usize> = r
        .witness
        .iter()
        .map(|p| c.net().iter().position(|q| q == p).unwrap())
        .collect();
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            assert!(c.distance(i, j) > 0.05);
        }
    }
    // maximality spot check: every 97th point conflicts with the witness
    for p in (0..c.len()).step_by(97) {
        assert!(idx.iter().any(|&i| c.distance(p, i) <= 0.05));
    }
    let s = min_spanning(&c, 0.05, &CountOptions::greedy()).unwrap();
    for p in (0..c.len()).step_by(97) {
        let centres: Vec<usize> = s
            .witness
            .iter()
            .map(|w| c.net().iter().position(|q| q == w).unwrap())
            .collect();
        assert!(centres.iter().any(|&i| c.distance(p, i) < 0.05));
    }
}

#[test]
fn line_cover_matches_clique_solver() {
    let xs = [0.0, 0.05, 0.12, 0.3, 0.31, 0.33, 0.5, 0.74, 0.75, 0.9];
    let line = ctx(&identity(), 1, reals(&xs));
    let cloud = PointCloud::from_table(
        xs.len(),
        xs.iter()
            .flat_map(|a| xs.iter().map(move |b| (a - b).abs()))
            .collect(),
    )
    .unwrap();
    let sites: Vec<Point> = (0..xs.len()).map(Point::Site).collect();
    let table = ctx(&MapSystem::Identity { space: Space::cloud(cloud) }.into(), 1, sites);
    for eps in [0.04, 0.1, 0.21, 0.4, 0.77] {
        let a = min_cover(&line, eps, &CountOptions::exact()).unwrap().count;
        let b = min_cover(&table, eps, &CountOptions::exact()).unwrap().count;
        assert_eq!(a, b);
        assert_eq!(a, brute_cov(&matrix(&line), eps));
    }
}

#[test]
fn csv_row_layout() {
    let c = ctx(&identity(), 1, reals(&[0.0, 0.3, 0.6, 1.0]));
    let r = max_separated(&c, 0.5, &CountOptions::exact()).unwrap();
    let row = r.csv_row("identity", 3);
    assert_eq!(row, format!("identity,sep,1,0.5,exact,2,{},3", 2f64.ln()));
    assert_eq!(CSV_HEADER.split(',').count(), row.split(',').count());
}

fn cloud_strategy(max: usize) -> impl Strategy<Value = (Vec<f64>, f64)> {
    (2usize..=max).prop_flat_map(|n| {
        (prop::collection::vec(0.0f64..1.0, 2 * n), 0.05f64..0.8)
    })
}

fn cloud_context(coords: Vec<f64>) -> OrbitContext {
    let cloud = PointCloud::from_coords(2, coords).unwrap();
    let n = cloud.len();
    ctx(
        &MapSystem::Identity { space: Space::cloud(cloud) }.into(),
        1,
        (0..n).map(Point::Site).collect(),
    )
}

fn generic(d: &[Vec<f64>], eps: f64) -> bool {
    d.iter()
        .flatten()
        .all(|&x| (x - eps).abs() > 1e-9 && (x - eps / 2.0).abs() > 1e-9)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_solvers_match_brute_force((coords, eps) in cloud_strategy(9)) {
        let c = cloud_context(coords);
        let d = matrix(&c);
        let exact = CountOptions::exact();
        prop_assert_eq!(max_separated(&c, eps, &exact).unwrap().count, brute_sep(&d, eps));
        prop_assert_eq!(min_spanning(&c, eps, &exact).unwrap().count, brute_span(&d, eps));
        prop_assert_eq!(min_cover(&c, eps, &exact).unwrap().count, brute_cov(&d, eps));
    }

    #[test]
    fn inequality_chain((coords, eps) in cloud_strategy(12)) {
        let c = cloud_context(coords);
        prop_assume!(generic(&matrix(&c), eps));
        let exact = CountOptions::exact();
        let span = min_spanning(&c, eps, &exact).unwrap().count;
        let sep = max_separated(&c, eps, &exact).unwrap().count;
        let cov = min_cover(&c, eps, &exact).unwrap().count;
        let span_half = min_spanning(&c, eps / 2.0, &exact).unwrap().count;
        prop_assert!(span <= sep && sep <= cov && cov <= span_half);
    }

    #[test]
    fn greedy_brackets_exact((coords, eps) in cloud_strategy(12)) {
        let c = cloud_context(coords);
        let (exact, greedy) = (CountOptions::exact(), CountOptions::greedy());
        prop_assert!(max_separated(&c, eps, &greedy).unwrap().count <= max_separated(&c, eps, &exact).unwrap().count);
        prop_assert!(min_spanning(&c, eps, &greedy).unwrap().count >= min_spanning(&c, eps, &exact).unwrap().count);
        prop_assert!(min_cover(&c, eps, &greedy).unwrap().count >= min_cover(&c, eps, &exact).unwrap().count);
    }

    #[test]
    fn monotone_in_epsilon_and_horizon(seed in 0u64..1000, eps in 0.05f64..0.5) {
        let shift = (seed as f64) / 1000.0 * 0.01;
        let net = reals(&(0..12).map(|i| (i as f64 / 12.0 + shift).min(1.0)).collect::<Vec<_>>());
        let sys: System = tent3().into();
        let exact = CountOptions::exact();
        for q in [Quantity::Sep, Quantity::Span, Quantity::Cov] {
            let mut previous = 0;
            for n in 1..=3 {
                let c = ctx(&sys, n, net.clone());
                let here = count(&c, q, eps, &exact).unwrap().count;
                prop_assert!(here >= previous);
                previous = here;
                let coarser = count(&c, q, eps * 1.5, &exact).unwrap().count;
                prop_assert!(coarser <= here);
            }
        }
    }

    #[test]
    fn power_inequality(offset in 0.0f64..0.05, eps in 0.05f64..0.4, p in 2u64..4, n in 1usize..3) {
        let net = reals(&(0..10).map(|i| i as f64 / 10.0 + offset).collect::<Vec<_>>());
        let powered: System = MapSystem::iterate(tent3(), p).unwrap().into();
        let base: System = tent3().into();
        let exact = CountOptions::exact();
        let lhs = max_separated(&ctx(&powered, n, net.clone()), eps, &exact).unwrap().count;
        let rhs = max_separated(&ctx(&base, p as usize * n, net), eps, &exact).unwrap().count;
        prop_assert!(lhs <= rhs);
    }
}
