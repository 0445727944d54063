//! Factories for the named systems, spaces and point clouds.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{PointCloud, Space};
use crate::systems::{Domain, MapSystem, NonAutonomousSystem, PiecewiseAffineMap};

/// `x ↦ |1 − |3x − 1||`.
pub fn tent3_map() -> PiecewiseAffineMap {
    PiecewiseAffineMap::new(vec![0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0], vec![0.0, 1.0, 0.0, 1.0])
        .expect("valid tent")
}

/// `x ↦ 1 − |2x − 1|`.
pub fn tent2_map() -> PiecewiseAffineMap {
    PiecewiseAffineMap::new(vec![0.0, 0.5, 1.0], vec![0.0, 1.0, 0.0]).expect("valid tent")
}

pub fn tent3() -> MapSystem {
    MapSystem::interval(tent3_map())
}

pub fn tent2() -> MapSystem {
    MapSystem::interval(tent2_map())
}

pub fn identity_map() -> MapSystem {
    MapSystem::interval(PiecewiseAffineMap::identity())
}

/// Growth law for the tent powers used on each cascade block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MRule {
    /// `m_n = n`.
    Linear,
    /// `m_n = n²`.
    Quadratic,
    /// `m_1, m_2, …` given explicitly.
    Custom(Vec<u64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CascadeSpec {
    pub m: MRule,
    pub block_count: usize,
    /// Build the induced circle map instead of the interval map.
    #[serde(default)]
    pub circle: bool,
}

impl Default for CascadeSpec {
    fn default() -> Self {
        Self {
            m: MRule::Linear,
            block_count: 6,
            circle: false,
        }
    }
}

/// `(6/π²) Σ_{k > n} 1/k²`, summed directly up to a large cutoff and
/// finished with the Euler–Maclaurin tail.
pub fn basel_tail(n: usize) -> f64 {
    let cutoff = (n + 1).max(1000);
    let mut direct = 0.0;
    for k in ((n + 1)..cutoff).rev() {
        direct += 1.0 / (k as f64 * k as f64);
    }
    let m = (cutoff - 1) as f64;
    let rest = 1.0 / m - 1.0 / (2.0 * m * m) + 1.0 / (6.0 * m.powi(3)) - 1.0 / (30.0 * m.powi(5));
    6.0 / (PI * PI) * (direct + rest)
}

impl CascadeSpec {
    pub fn linear(block_count: usize) -> Self {
        Self {
            block_count,
            ..Self::default()
        }
    }

    pub fn m(&self, n: usize) -> Result<u64> {
        match &self.m {
            MRule::Linear => Ok(n as u64),
            MRule::Quadratic => Ok((n * n) as u64),
            MRule::Custom(values) => values.get(n - 1).copied().ok_or_else(|| {
                Error::InvalidParameter(format!("custom m has no entry for block {n}"))
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.block_count == 0 {
            return Err(Error::InvalidParameter("block_count must be ≥ 1".into()));
        }
        let ms = (1..=self.block_count)
            .map(|n| self.m(n))
            .collect::<Result<Vec<_>>>()?;
        if ms[0] == 0 || ms.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter("m must be positive and strictly increasing".into()));
        }
        Ok(())
    }

    /// `a_0 = 0, a_n = Σ_{k ≤ n} 6/(π² k²)` for `n ≤ block_count`.
    pub fn a_values(&self) -> Vec<f64> {
        let mut a = vec![0.0];
        let mut total = 0.0;
        for k in 1..=self.block_count {
            total += 6.0 / (PI * PI * (k * k) as f64);
            a.push(total);
        }
        a
    }
}

/// Piecewise-affine map equal to `T_n⁻¹ ∘ g^{m_n} ∘ T_n` on each block
/// `[a_{n−1}, a_n]`, `n ≤ blocks`, and the identity on `[a_blocks, 1]`.
fn cascade_map(spec: &CascadeSpec, blocks: usize) -> Result<PiecewiseAffineMap> {
    spec.validate()?;
    let a = spec.a_values();
    let g = tent3_map();
    let mut xs = vec![0.0];
    let mut vs = vec![0.0];
    for n in 1..=blocks {
        let (left, right) = (a[n - 1], a[n]);
        let len = right - left;
        let block = g.iterate(spec.m(n)?)?;
        let place = |t: f64| {
            if t == 0.0 {
                left
            } else if t == 1.0 {
                right
            } else {
                left + t * len
            }
        };
        for (&b, &v) in block.breakpoints().iter().zip(block.values()).skip(1) {
            xs.push(place(b));
            vs.push(place(v));
        }
    }
    if *xs.last().unwrap() < 1.0 {
        xs.push(1.0);
        vs.push(1.0);
    }
    if spec.circle {
        PiecewiseAffineMap::lift(xs, vs)
    } else {
        PiecewiseAffineMap::new(xs, vs)
    }
}

fn wrap_map(spec: &CascadeSpec, map: PiecewiseAffineMap) -> MapSystem {
    MapSystem::Pam {
        map,
        domain: if spec.circle {
            Domain::Circle
        } else {
            Domain::Interval
        },
    }
}

pub fn horseshoe_cascade(spec: &CascadeSpec) -> Result<MapSystem> {
    Ok(wrap_map(spec, cascade_map(spec, spec.block_count)?))
}

/// The cascade on `[0, a_{n+1}]`, identity beyond.
pub fn truncated_cascade(spec: &CascadeSpec, n: usize) -> Result<MapSystem> {
    if n == 0 || n + 1 > spec.block_count {
        return Err(Error::InvalidParameter(format!(
            "truncation {n} needs 1 ≤ n and n + 1 ≤ {}",
            spec.block_count
        )));
    }
    Ok(wrap_map(spec, cascade_map(spec, n + 1)?))
}

/// On each cylinder of length `k` the map keeps the prefix and shifts the
/// remaining symbols by `k`.
pub fn cantor_cylinder_system(k: usize, depth: usize) -> Result<MapSystem> {
    if k == 0 {
        return Err(Error::InvalidParameter("cylinder length must be ≥ 1".into()));
    }
    MapSystem::shift(Space::cantor(depth), k, k)
}

/// The cylinder system read through the chart that strips the prefix:
/// `σ^k` on words.
pub fn cylinder_chart_system(k: usize, depth: usize) -> Result<MapSystem> {
    MapSystem::shift(Space::cantor(depth), k, 0)
}

/// `f_i = tent2^{(i+1)/2}` for odd `i`, `x ↦ x / 2^{i/2}` for even `i`.
pub fn ks_alternating() -> NonAutonomousSystem {
    NonAutonomousSystem::new("alternating tent powers and halvings", |i| {
        if i % 2 == 1 {
            MapSystem::Iterate {
                base: Box::new(tent2()),
                power: i.div_ceil(2) as u64,
            }
        } else {
            MapSystem::Scaled {
                factor: 0.5f64.powi((i / 2) as i32),
                base: Box::new(identity_map()),
            }
        }
    })
}

/// Damping factors `λ_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum LambdaRule {
    /// `λ_i = 1 − 1/(i + 1)`.
    Harmonic,
    Constant { value: f64 },
}

impl LambdaRule {
    pub fn value(&self, i: usize) -> f64 {
        match self {
            LambdaRule::Harmonic => 1.0 - 1.0 / (i as f64 + 1.0),
            LambdaRule::Constant { value } => *value,
        }
    }
}

/// `g_i = λ_{shift+i} · f_i`. The base maps must fix 0.
pub fn damped_sequence(
    base: NonAutonomousSystem,
    lambda: LambdaRule,
    shift: usize,
) -> Result<NonAutonomousSystem> {
    if *base.space() != Space::Interval {
        return Err(Error::InvalidParameter("damping needs interval maps".into()));
    }
    if let LambdaRule::Constant { value } = lambda {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidParameter(format!("λ = {value} outside [0, 1]")));
        }
    }
    for i in 1..=16 {
        let at_zero = base.map(i).eval_scalar(0.0);
        if at_zero != 0.0 {
            return Err(Error::InvalidParameter(format!("f_{i}(0) = {at_zero}; base maps must fix 0")));
        }
    }
    let description = format!("damped ({lambda:?}, shift {shift}) {}", base.description());
    Ok(NonAutonomousSystem::new(description, move |i| MapSystem::Scaled {
        factor: lambda.value(shift + i),
        base: Box::new(base.map(i)),
    }))
}

/// `f_i = base^{2^i}`.
pub fn power_growth_sequence(base: MapSystem) -> NonAutonomousSystem {
    NonAutonomousSystem::new("power-of-two iterates", move |i| MapSystem::PowerOfTwo {
        base: Box::new(base.clone()),
        log2: i as u32,
    })
}

/// Vertices of the depth-`depth` Koch polyline from `(0, 0)` to `(1, 0)`,
/// in curve order.
pub fn koch_points(depth: usize) -> Result<PointCloud> {
    if depth == 0 || depth > 8 {
        return Err(Error::InvalidParameter(format!("Koch depth {depth} not in 1..=8")));
    }
    let mut pts = vec![(0.0f64, 0.0f64), (1.0, 0.0)];
    let (s, c) = (PI / 3.0).sin_cos();
    for _ in 0..depth {
        let mut next = Vec::with_capacity(pts.len() * 4);
        for w in pts.windows(2) {
            let ((x0, y0), (x1, y1)) = (w[0], w[1]);
            let (dx, dy) = ((x1 - x0) / 3.0, (y1 - y0) / 3.0);
            let a = (x0 + dx, y0 + dy);
            let b = (x0 + 2.0 * dx, y0 + 2.0 * dy);
            let peak = (a.0 + dx * c - dy * s, a.1 + dx * s + dy * c);
            next.extend([w[0], a, peak, b]);
        }
        next.push(*pts.last().unwrap());
        pts = next;
    }
    PointCloud::from_coords(2, pts.into_iter().flat_map(|(x, y)| [x, y]).collect())
}

/// `{0} ∪ {1/n : 1 ≤ n ≤ count}` on the line.
pub fn convergent_sequence_space(count: usize) -> Result<PointCloud> {
    if count < 10 {
        return Err(Error::InvalidParameter(format!("need at least 10 terms, got {count}")));
    }
    let mut coords = vec![0.0];
    coords.extend((1..=count).map(|n| 1.0 / n as f64));
    PointCloud::from_coords(1, coords)
}

/// A map equal to `base` away from `[x0, x0 + δ]`, where `x0` is the
/// smallest fixed point of `base`: the cascade is placed affinely on
/// `[x0, x0 + δ/2]` and joined to `base` by a segment on `[x0 + δ/2, x0 + δ]`.
pub fn splice_cascade(
    base: &PiecewiseAffineMap,
    spec: &CascadeSpec,
    delta: f64,
) -> Result<(PiecewiseAffineMap, f64)> {
    let x0 = base.smallest_fixed_point().ok_or(Error::NoFixedPoint)?;
    if !(delta > 0.0) || x0 + delta > 1.0 {
        return Err(Error::InvalidParameter(format!(
            "splice [{x0}, {x0} + {delta}] does not fit in [0, 1]"
        )));
    }
    let interval_spec = CascadeSpec {
        circle: false,
        ..spec.clone()
    };
    let cascade = cascade_map(&interval_spec, spec.block_count)?;
    let offset = (base.eval(x0) - x0).round();
    let half = x0 + delta / 2.0;
    let end = x0 + delta;
    let mut xs = Vec::new();
    let mut vs = Vec::new();
    for (&b, &v) in base.breakpoints().iter().zip(base.values()) {
        if b < x0 {
            xs.push(b);
            vs.push(v);
        }
    }
    for (&b, &v) in cascade.breakpoints().iter().zip(cascade.values()) {
        let x = if b == 1.0 { half } else { x0 + b * (delta / 2.0) };
        let y = if v == 1.0 { half } else { x0 + v * (delta / 2.0) };
        xs.push(x);
        vs.push(y + offset);
    }
    if end < 1.0 {
        xs.push(end);
        vs.push(base.eval(end));
    }
    for (&b, &v) in base.breakpoints().iter().zip(base.values()) {
        if b > end {
            xs.push(b);
            vs.push(v);
        }
    }
    if *xs.last().unwrap() < 1.0 {
        xs.push(1.0);
        vs.push(base.eval(1.0));
    }
    let map = if base.is_lift() {
        PiecewiseAffineMap::lift(xs, vs)?
    } else {
        PiecewiseAffineMap::new(xs, vs)?
    };
    Ok((map, x0))
}

/// Registry entry for the command line.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstructionInfo {
    pub id: &'static str,
    pub parameters: &'static str,
    pub kind: &'static str,
}

pub fn list_constructions() -> Vec<ConstructionInfo> {
    let row = |id, parameters, kind| ConstructionInfo { id, parameters, kind };
    vec![
        row("tent3", "-", "interval map, three full laps"),
        row("tent2", "-", "interval map, two full laps"),
        row("identity", "-", "interval map"),
        row("horseshoe_cascade", "blocks, m (linear|quadratic|[..]), circle", "interval map with nested horseshoes"),
        row("truncated_cascade", "blocks, m, n", "interval map, cascade cut after block n+1"),
        row("cantor_cylinder", "k, depth", "symbolic map on the Cantor set"),
        row("cantor_cylinder_chart", "k, depth", "block shift by k symbols"),
        row("cantor_words", "depth", "space only"),
        row("ks_alternating", "-", "non-autonomous interval sequence"),
        row("power_growth", "base (tent2|tent3)", "non-autonomous sequence f_i = base^(2^i)"),
        row("damped_power_growth", "base, lambda, shift", "damped non-autonomous sequence"),
        row("koch", "depth", "planar point cloud"),
        row("convergent_sequence", "count", "point cloud on the line"),
        row("random_cloud", "points, dim", "seeded uniform cloud in the unit cube"),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::Point;
    use crate::systems::c0_distance;

    #[test]
    fn tents() {
        let g = tent3();
        assert_eq!(g.eval_scalar(0.0), 0.0);
        assert_eq!(g.eval_scalar(1.0), 1.0);
        assert_eq!(g.lap_count().unwrap(), 3);
        let psi = tent2();
        assert_eq!(psi.eval_scalar(0.5), 1.0);
        assert_eq!(psi.eval_scalar(1.0), 0.0);
        assert_eq!(psi.lap_count().unwrap(), 2);
    }

    #[test]
    fn a_values_and_tail() {
        let spec = CascadeSpec::linear(12);
        let a = spec.a_values();
        assert!(a.windows(2).all(|w| w[1] > w[0]));
        assert!(a[12] < 1.0);
        for n in 1..=12 {
            assert!((1.0 - a[n] - basel_tail(n)).abs() < 1e-10);
        }
        // the tail against a long direct sum
        let direct: f64 = (6..2_000_000).rev().map(|k| 1.0 / (k as f64 * k as f64)).sum::<f64>();
        assert!((basel_tail(5) - 6.0 / (PI * PI) * direct).abs() < 1e-6);
    }

    #[test]
    fn cascade_fixes_block_endpoints_and_is_continuous() {
        let spec = CascadeSpec::linear(4);
        let psi = horseshoe_cascade(&spec).unwrap();
        for &a in &spec.a_values() {
            assert_eq!(psi.eval_scalar(a), a);
        }
        let map = psi.to_pam().unwrap();
        // continuity: a breakpoint's stored value equals the limit from the left piece
        for i in 1..map.breakpoints().len() - 1 {
            let (x, v) = (map.breakpoints()[i], map.values()[i]);
            assert_eq!(map.eval(x), v);
        }
    }

    #[test]
    fn first_block_peak() {
        let spec = CascadeSpec::linear(1);
        let psi = horseshoe_cascade(&spec).unwrap();
        let a1 = spec.a_values()[1];
        assert!((psi.eval_scalar(a1 / 3.0) - a1).abs() < 1e-15);
        // dense-grid oracle against the formula on J_1
        for i in 0..=300 {
            let x = a1 * i as f64 / 300.0;
            let t = x / a1;
            let expected = a1 * (1.0 - (3.0 * t - 1.0).abs()).abs();
            assert!((psi.eval_scalar(x) - expected).abs() < 1e-12);
        }
        assert_eq!(psi.eval_scalar(0.9), 0.9);
    }

    #[test]
    fn blocks_are_horseshoes() {
        let spec = CascadeSpec::linear(3);
        let map = horseshoe_cascade(&spec).unwrap().to_pam().unwrap();
        let a = spec.a_values();
        for n in 1..=3 {
            let s = 3usize.pow(n as u32);
            assert!(map.verify_horseshoe(a[n - 1], a[n], s).holds);
            assert!(!map.verify_horseshoe(a[n - 1], a[n], s + 1).holds);
        }
    }

    #[test]
    fn truncations_approach_the_cascade() {
        let spec = CascadeSpec::linear(6);
        let full = horseshoe_cascade(&spec).unwrap();
        let mut previous = f64::INFINITY;
        for n in 1..=4 {
            let cut = truncated_cascade(&spec, n).unwrap();
            let d = c0_distance(&cut, &full, 1e-3).unwrap();
            assert!(d <= basel_tail(n + 1) + 1e-9);
            assert!(d <= previous);
            previous = d;
            assert_eq!(cut.eval_scalar(1.0), 1.0);
            let a = spec.a_values();
            for i in 0..=200 {
                let x = a[n + 1] * i as f64 / 200.0;
                assert_eq!(cut.eval_scalar(x), full.eval_scalar(x));
            }
        }
        assert!(truncated_cascade(&spec, 6).is_err());
    }

    #[test]
    fn invalid_specs() {
        let bad = CascadeSpec {
            m: MRule::Custom(vec![2, 2]),
            block_count: 2,
            circle: false,
        };
        assert!(horseshoe_cascade(&bad).is_err());
        assert!(horseshoe_cascade(&CascadeSpec { m: MRule::Quadratic, block_count: 4, circle: false }).is_err());
    }

    #[test]
    fn circle_cascade() {
        let spec = CascadeSpec { circle: true, ..CascadeSpec::linear(2) };
        let psi = horseshoe_cascade(&spec).unwrap();
        assert_eq!(psi.space(), Space::Circle);
        assert_eq!(psi.eval_scalar(0.0), 0.0);
    }

    #[test]
    fn cylinder_system() {
        let f = cantor_cylinder_system(1, 5).unwrap();
        let p = Point::word(&[0, 2, 0, 2, 0]);
        assert_eq!(f.evaluate(&p).unwrap(), Point::word(&[0, 0, 2, 0]));
        let q = Point::word(&[2, 2, 2, 0, 2]);
        let mut x = q.clone();
        for _ in 0..4 {
            x = f.evaluate(&x).unwrap();
            let Point::Word(w) = &x else { panic!() };
            assert_eq!(w.symbol(0), 2);
        }
    }

    #[test]
    fn ks_examples() {
        let ks = ks_alternating();
        assert_eq!(ks.compose_window(1, 1, &Point::Real(0.5)).unwrap(), Point::Real(1.0));
        assert_eq!(ks.map(2).evaluate(&Point::Real(1.0)).unwrap(), Point::Real(0.5));
        assert_eq!(ks.compose_window(1, 2, &Point::Real(1.0)).unwrap(), Point::Real(0.0));
        for i in 0..=50 {
            let Point::Real(y) = ks.compose_window(1, 2, &Point::Real(i as f64 / 50.0)).unwrap() else { panic!() };
            assert!((0.0..=0.5).contains(&y));
        }
    }

    #[test]
    fn damping_rules() {
        let base = power_growth_sequence(tent2());
        let same = damped_sequence(base.clone(), LambdaRule::Constant { value: 1.0 }, 0).unwrap();
        let zero = damped_sequence(base.clone(), LambdaRule::Constant { value: 0.0 }, 0).unwrap();
        for i in 1..=4 {
            for k in 0..=20 {
                let x = k as f64 / 20.0;
                assert_eq!(same.map(i).eval_scalar(x), base.map(i).eval_scalar(x));
                assert_eq!(zero.map(i).eval_scalar(x), 0.0);
            }
        }
        // harmonic product telescopes to n / (n + k)
        for n in [1usize, 5] {
            let product: f64 = (1..=50).map(|i| LambdaRule::Harmonic.value(n + i)).product();
            assert!((product - (n as f64 + 1.0) / (n as f64 + 51.0)).abs() < 1e-12);
        }
        let shifted = NonAutonomousSystem::constant(MapSystem::interval(
            PiecewiseAffineMap::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap(),
        ));
        assert!(damped_sequence(shifted, LambdaRule::Harmonic, 0).is_err());
    }

    #[test]
    fn power_growth() {
        let seq = power_growth_sequence(tent3());
        for k in 0..=30 {
            let x = k as f64 / 30.0;
            let twice = tent3().eval_scalar(tent3().eval_scalar(x));
            assert_eq!(seq.map(1).eval_scalar(x), twice);
        }
        assert_eq!(seq.map(2).lap_count().unwrap(), 81);
    }

    #[test]
    fn koch_vertices() {
        assert_eq!(koch_points(1).unwrap().len(), 5);
        for depth in 1..=5 {
            let cloud = koch_points(depth).unwrap();
            assert_eq!(cloud.len(), 4usize.pow(depth as u32) + 1);
            assert!((cloud.distance(0, cloud.len() - 1) - 1.0).abs() < 1e-12);
        }
        assert!(koch_points(9).is_err());
    }

    #[test]
    fn convergent_sequence() {
        let a = convergent_sequence_space(10).unwrap();
        assert_eq!(a.len(), 11);
        let gap = (1..a.len())
            .flat_map(|i| (1..a.len()).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a.distance(i, j))
            .fold(f64::INFINITY, f64::min);
        assert!((gap - (1.0 / 9.0 - 1.0 / 10.0)).abs() < 1e-15);
        assert!(convergent_sequence_space(9).is_err());
    }

    #[test]
    fn splice_into_identity() {
        let spec = CascadeSpec::linear(3);
        let (map, x0) = splice_cascade(&PiecewiseAffineMap::identity(), &spec, 0.1).unwrap();
        assert_eq!(x0, 0.0);
        let d = map.c0_distance(&PiecewiseAffineMap::identity()).unwrap();
        assert!(d <= 0.1);
        let a1 = spec.a_values()[1] * 0.05;
        assert!(map.verify_horseshoe(0.0, a1, 3).holds);
        assert_eq!(map.eval(0.5), 0.5);
        let no_fixed = PiecewiseAffineMap::new(vec![0.0, 1.0], vec![0.5, 1.0]).unwrap();
        assert!(matches!(splice_cascade(&no_fixed, &spec, 0.1), Err(Error::NoFixedPoint)));
    }

    #[test]
    fn registry_ids_are_unique() {
        let rows = list_constructions();
        assert!(rows.len() >= 3);
        let mut ids: Vec<&str> = rows.iter().map(|r| r.id).collect();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), rows.len());
        for id in ["tent3", "horseshoe_cascade", "cantor_cylinder"] {
            assert!(ids.contains(&id));
        }
    }
}
