use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap on symbolic iteration depth.
pub const ITERATION_CAP: u64 = 12;
/// Default cap on the number of affine pieces an iterate may have.
pub const PIECE_BUDGET: usize = 2_000_000;

/// Continuous piecewise-affine map of `[0, 1]`.
///
/// A `lift` map may take values outside `[0, 1]`; it describes a circle map
/// whose values are read mod 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PamRepr", into = "PamRepr")]
pub struct PiecewiseAffineMap {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    lift: bool,
}

#[derive(Serialize, Deserialize)]
struct PamRepr {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    lift: bool,
}

impl TryFrom<PamRepr> for PiecewiseAffineMap {
    type Error = Error;

    fn try_from(r: PamRepr) -> Result<Self> {
        if r.lift {
            Self::lift(r.breakpoints, r.values)
        } else {
            Self::new(r.breakpoints, r.values)
        }
    }
}

impl From<PiecewiseAffineMap> for PamRepr {
    fn from(m: PiecewiseAffineMap) -> Self {
        PamRepr {
            breakpoints: m.breakpoints,
            values: m.values,
            lift: m.lift,
        }
    }
}

/// Result of a horseshoe search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorseshoeCheck {
    pub holds: bool,
    /// Cut points `a = c_0 < c_1 < … < c_k ≤ b` found by the search.
    pub partition: Vec<f64>,
    pub refutation: Option<Refutation>,
}

/// A subinterval whose image misses part of the target interval.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Refutation {
    pub subinterval: (f64, f64),
    pub missing: (f64, f64),
}

impl PiecewiseAffineMap {
    pub fn new(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validate(&breakpoints, &values)?;
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidMap(format!("value {v} outside [0, 1]")));
        }
        Ok(Self {
            breakpoints,
            values,
            lift: false,
        })
    }

    /// A lift of a circle map; values are arbitrary finite reals.
    pub fn lift(breakpoints: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        Self::validate(&breakpoints, &values)?;
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidMap(format!("non-finite value {v}")));
        }
        Ok(Self {
            breakpoints,
            values,
            lift: true,
        })
    }

    fn validate(breakpoints: &[f64], values: &[f64]) -> Result<()> {
        if breakpoints.len() < 2 || breakpoints.len() != values.len() {
            return Err(Error::InvalidMap(format!(
                "{} breakpoints and {} values",
                breakpoints.len(),
                values.len()
            )));
        }
        if breakpoints[0] != 0.0 || *breakpoints.last().unwrap() != 1.0 {
            return Err(Error::InvalidMap("breakpoints must run from 0 to 1".into()));
        }
        if breakpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidMap("breakpoints must increase strictly".into()));
        }
        Ok(())
    }

    pub fn identity() -> Self {
        Self::new(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap()
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_lift(&self) -> bool {
        self.lift
    }

    pub fn pieces(&self) -> usize {
        self.breakpoints.len() - 1
    }

    /// Index `i` of the piece `[b_i, b_{i+1}]` holding `x`.
    fn piece_of(&self, x: f64) -> usize {
        let i = self.breakpoints.partition_point(|&b| b <= x);
        i.clamp(1, self.breakpoints.len() - 1) - 1
    }

    /// Exact at breakpoints, affine in between; `x` is clamped to `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        let x = x.clamp(0.0, 1.0);
        let i = self.piece_of(x);
        let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
        let (v0, v1) = (self.values[i], self.values[i + 1]);
        if x == b0 {
            return v0;
        }
        if x == b1 {
            return v1;
        }
        v0 + (x - b0) / (b1 - b0) * (v1 - v0)
    }

    pub fn slopes(&self) -> impl Iterator<Item = f64> + '_ {
        self.breakpoints
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(b, v)| (v[1] - v[0]) / (b[1] - b[0]))
    }

    /// Largest absolute slope.
    pub fn lipschitz(&self) -> f64 {
        self.slopes().map(f64::abs).fold(0.0, f64::max)
    }

    /// `self ∘ inner`, computed by pulling the breakpoints of `self` back
    /// through every piece of `inner`.
    pub fn compose(&self, inner: &PiecewiseAffineMap) -> Result<Self> {
        self.compose_within(inner, PIECE_BUDGET)
    }

    pub fn compose_within(&self, inner: &PiecewiseAffineMap, budget: usize) -> Result<Self> {
        if inner.lift || self.lift {
            return Err(Error::InvalidMap(
                "symbolic composition of circle lifts is not supported".into(),
            ));
        }
        let mut xs = Vec::with_capacity(inner.breakpoints.len() * 2);
        let mut vs = Vec::with_capacity(inner.breakpoints.len() * 2);
        xs.push(0.0);
        vs.push(self.eval(inner.values[0]));
        for i in 0..inner.pieces() {
            let (b0, b1) = (inner.breakpoints[i], inner.breakpoints[i + 1]);
            let (v0, v1) = (inner.values[i], inner.values[i + 1]);
            if v0 != v1 {
                let (lo, hi) = (v0.min(v1), v0.max(v1));
                let start = self.breakpoints.partition_point(|&c| c <= lo);
                let end = self.breakpoints.partition_point(|&c| c < hi);
                let crossings = start..end;
                let mut push = |k: usize| {
                    let c = self.breakpoints[k];
                    let x = b0 + (c - v0) / (v1 - v0) * (b1 - b0);
                    if x > *xs.last().unwrap() && x < b1 {
                        xs.push(x);
                        vs.push(self.values[k]);
                    }
                };
                if v1 > v0 {
                    crossings.for_each(&mut push);
                } else {
                    crossings.rev().for_each(&mut push);
                }
            }
            xs.push(b1);
            vs.push(self.eval(v1));
            if xs.len() > budget + 1 {
                return Err(Error::PieceBudget {
                    pieces: xs.len() - 1,
                    budget,
                });
            }
        }
        Ok(Self {
            breakpoints: xs,
            values: vs,
            lift: false,
        })
    }

    /// `self^power` by symbolic iteration.
    pub fn iterate(&self, power: u64) -> Result<Self> {
        self.iterate_within(power, ITERATION_CAP, PIECE_BUDGET)
    }

    pub fn iterate_within(&self, power: u64, cap: u64, budget: usize) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidParameter("iteration power must be ≥ 1".into()));
        }
        if power > cap {
            return Err(Error::IterationCap { power, cap });
        }
        let mut acc = self.clone();
        for _ in 1..power {
            acc = self.compose_within(&acc, budget)?;
        }
        Ok(acc)
    }

    /// Number of maximal monotone pieces.
    pub fn lap_count(&self) -> usize {
        laps(self.slopes())
    }

    /// Laps of the restriction to `[a, b]`.
    pub fn lap_count_on(&self, a: f64, b: f64) -> usize {
        let (xs, vs) = self.restrict(a, b);
        laps(
            xs.windows(2)
                .zip(vs.windows(2))
                .map(|(x, v)| (v[1] - v[0]) / (x[1] - x[0])),
        )
    }

    /// Breakpoints and values of the restriction to `[a, b]`.
    fn restrict(&self, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
        let mut xs = vec![a];
        let mut vs = vec![self.eval(a)];
        for (&x, &v) in self.breakpoints.iter().zip(&self.values) {
            if x > a && x < b {
                xs.push(x);
                vs.push(v);
            }
        }
        if b > a {
            xs.push(b);
            vs.push(self.eval(b));
        }
        (xs, vs)
    }

    /// Exact image `[min, max]` of `[a, b]`.
    pub fn image(&self, a: f64, b: f64) -> (f64, f64) {
        let (_, vs) = self.restrict(a, b);
        let lo = vs.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (lo, hi)
    }

    /// Searches for a split of `[a, b]` into `s` consecutive closed pieces
    /// whose images each contain `[a, b]`.
    ///
    /// Cuts are placed greedily at the earliest point where the running
    /// image covers `[a, b]`; this maximises the room left for later pieces,
    /// so a failure of the greedy search refutes every partition.
    pub fn verify_horseshoe(&self, a: f64, b: f64, s: usize) -> HorseshoeCheck {
        let (xs, vs) = self.restrict(a, b);
        let mut cuts = vec![a];
        let mut start = 0usize;
        let mut start_x = a;
        let mut start_v = vs[0];
        let mut found = 0usize;
        while found < s && start_x < b {
            match earliest_cover(&xs, &vs, start, start_x, start_v, a, b) {
                Some((x, piece)) => {
                    found += 1;
                    cuts.push(x);
                    start_x = x;
                    start = piece;
                    start_v = self.eval(x);
                }
                None => break,
            }
        }
        if found >= s {
            // the last piece absorbs the remainder of [a, b]
            *cuts.last_mut().unwrap() = b;
            return HorseshoeCheck {
                holds: true,
                partition: cuts,
                refutation: None,
            };
        }
        let last = *cuts.last().unwrap();
        let (lo, hi) = self.image(last, b);
        let missing = if lo > a { (a, lo.min(b)) } else { (hi.max(a), b) };
        HorseshoeCheck {
            holds: false,
            partition: cuts,
            refutation: Some(Refutation {
                subinterval: (last, b),
                missing,
            }),
        }
    }

    /// Smallest `x ∈ [0, 1)` with `f(x) = x` (mod 1 for lifts).
    pub fn smallest_fixed_point(&self) -> Option<f64> {
        for i in 0..self.pieces() {
            let (b0, b1) = (self.breakpoints[i], self.breakpoints[i + 1]);
            let g0 = self.values[i] - b0;
            let g1 = self.values[i + 1] - b1;
            let target = if self.lift {
                let k = g0.min(g1).ceil();
                if k > g0.max(g1) {
                    continue;
                }
                k
            } else {
                if g0.min(g1) > 0.0 || g0.max(g1) < 0.0 {
                    continue;
                }
                0.0
            };
            let x = if g0 == target {
                b0
            } else if g1 == target {
                b1
            } else {
                b0 + (target - g0) / (g1 - g0) * (b1 - b0)
            };
            if x < 1.0 {
                return Some(x);
            }
        }
        None
    }

    /// Exact supremum of `|self − other|` (arc distance for lifts) over
    /// the merged breakpoint set.
    pub fn c0_distance(&self, other: &PiecewiseAffineMap) -> Result<f64> {
        if self.lift != other.lift {
            return Err(Error::SpaceMismatch);
        }
        let mut grid: Vec<f64> = self
            .breakpoints
            .iter()
            .chain(&other.breakpoints)
            .copied()
            .collect();
        grid.sort_by(f64::total_cmp);
        grid.dedup();
        let diff = |x: f64| self.eval(x) - other.eval(x);
        if !self.lift {
            return Ok(grid.iter().map(|&x| diff(x).abs()).fold(0.0, f64::max));
        }
        let mut best = 0.0f64;
        for w in grid.windows(2) {
            let (d0, d1) = (diff(w[0]), diff(w[1]));
            best = best.max(arc(d0)).max(arc(d1));
            let (lo, hi) = (d0.min(d1), d0.max(d1));
            if (lo - 0.5).ceil() <= hi - 0.5 {
                return Ok(0.5);
            }
        }
        Ok(best)
    }
}

fn arc(d: f64) -> f64 {
    let r = d.rem_euclid(1.0);
    r.min(1.0 - r)
}

fn laps(slopes: impl Iterator<Item = f64>) -> usize {
    let mut count = 1;
    let mut sign = 0i8;
    for s in slopes {
        let current = if s > 0.0 {
            1
        } else if s < 0.0 {
            -1
        } else {
            continue;
        };
        if sign != 0 && current != sign {
            count += 1;
        }
        sign = current;
    }
    count
}

/// Earliest `x` after `(start_x, start_v)` in piece `start` such that the
/// image of `[start_x, x]` contains `[a, b]`.
fn earliest_cover(
    xs: &[f64],
    vs: &[f64],
    start: usize,
    start_x: f64,
    start_v: f64,
    a: f64,
    b: f64,
) -> Option<(f64, usize)> {
    let mut reached_low = start_v <= a;
    let mut reached_high = start_v >= b;
    let mut x0 = start_x;
    let mut v0 = start_v;
    for i in start..xs.len() - 1 {
        let (x1, v1) = (xs[i + 1], vs[i + 1]);
        if x1 <= x0 {
            continue;
        }
        let hit = |level: f64| {
            if v1 == level {
                x1
            } else {
                (x0 + (level - v0) / (v1 - v0) * (x1 - x0)).clamp(x0, x1)
            }
        };
        let mut low_at = None;
        let mut high_at = None;
        if !reached_low && v1 <= a {
            low_at = Some(hit(a));
        }
        if !reached_high && v1 >= b {
            high_at = Some(hit(b));
        }
        reached_low |= low_at.is_some();
        reached_high |= high_at.is_some();
        if reached_low && reached_high {
            let x = match (low_at, high_at) {
                (Some(l), Some(h)) => l.max(h),
                (Some(l), None) => l,
                (None, Some(h)) => h,
                (None, None) => x0,
            };
            return Some((x, i));
        }
        x0 = x1;
        v0 = v1;
    }
    None
}
