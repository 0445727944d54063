//! Evaluable dynamics.

mod markov;
mod pam;
mod toral;

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{distance, sample_net, Point, ProductIndex, Space};

pub use markov::MarkovPartition;
pub use pam::{HorseshoeCheck, PiecewiseAffineMap, Refutation, ITERATION_CAP, PIECE_BUDGET};
pub use toral::toral_fix_count;

/// Longest orbit [`MapSystem::PowerOfTwo`] follows before giving up on
/// finding a cycle.
const CYCLE_SEARCH_LIMIT: u64 = 1 << 24;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    Interval,
    Circle,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MapSystem {
    Identity {
        space: Space,
    },
    Pam {
        #[serde(flatten)]
        map: PiecewiseAffineMap,
        domain: Domain,
    },
    /// Drops `block` symbols (or coordinates) per step after keeping the
    /// first `prefix` fixed.
    ShiftLike {
        space: Space,
        block: usize,
        #[serde(default)]
        prefix: usize,
    },
    Iterate {
        base: Box<MapSystem>,
        power: u64,
    },
    /// `base^(2^log2)`, evaluated with cycle detection.
    PowerOfTwo {
        base: Box<MapSystem>,
        log2: u32,
    },
    DirectProduct {
        left: Box<MapSystem>,
        right: Box<MapSystem>,
    },
    /// `x ↦ factor · base(x)` on the interval.
    Scaled {
        factor: f64,
        base: Box<MapSystem>,
    },
}

impl MapSystem {
    pub fn interval(map: PiecewiseAffineMap) -> Self {
        MapSystem::Pam {
            map,
            domain: Domain::Interval,
        }
    }

    pub fn circle(map: PiecewiseAffineMap) -> Self {
        MapSystem::Pam {
            map,
            domain: Domain::Circle,
        }
    }

    pub fn iterate(base: MapSystem, power: u64) -> Result<Self> {
        if power == 0 {
            return Err(Error::InvalidParameter("iteration power must be ≥ 1".into()));
        }
        Ok(MapSystem::Iterate {
            base: Box::new(base),
            power,
        })
    }

    pub fn product(left: MapSystem, right: MapSystem) -> Self {
        MapSystem::DirectProduct {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn shift(space: Space, block: usize, prefix: usize) -> Result<Self> {
        if block == 0 {
            return Err(Error::InvalidParameter("shift block must be ≥ 1".into()));
        }
        if !matches!(space, Space::CantorWords { .. } | Space::Product { .. }) {
            return Err(Error::InvalidParameter(format!(
                "shifts act on words or products, not {}",
                space.name()
            )));
        }
        Ok(MapSystem::ShiftLike {
            space,
            block,
            prefix,
        })
    }

    pub fn space(&self) -> Space {
        match self {
            MapSystem::Identity { space } | MapSystem::ShiftLike { space, .. } => space.clone(),
            MapSystem::Pam { domain, .. } => match domain {
                Domain::Interval => Space::Interval,
                Domain::Circle => Space::Circle,
            },
            MapSystem::Iterate { base, .. }
            | MapSystem::PowerOfTwo { base, .. }
            | MapSystem::Scaled { base, .. } => base.space(),
            MapSystem::DirectProduct { left, right } => {
                Space::sum_product(left.space(), right.space())
            }
        }
    }

    /// Whether points are plain reals (interval or circle).
    pub fn is_scalar(&self) -> bool {
        matches!(self.space(), Space::Interval | Space::Circle)
    }

    pub fn evaluate(&self, p: &Point) -> Result<Point> {
        match (self, p) {
            (MapSystem::Identity { space }, _) => {
                space.check(p)?;
                Ok(p.clone())
            }
            (MapSystem::Pam { domain, .. }, Point::Real(x)) if *domain == Domain::Interval => {
                Ok(Point::Real(self.eval_scalar(*x)))
            }
            (MapSystem::Pam { domain, .. }, Point::Angle(x)) if *domain == Domain::Circle => {
                Ok(Point::Angle(self.eval_scalar(*x)))
            }
            (MapSystem::ShiftLike { space, block, prefix }, _) => {
                space.check(p)?;
                shift_point(space, *block, *prefix, p)
            }
            (MapSystem::Iterate { base, power }, _) => iterate_point(base, p, *power),
            (MapSystem::PowerOfTwo { base, log2 }, _) => power_of_two_point(base, p, *log2),
            (MapSystem::DirectProduct { left, right }, Point::Tuple(pair)) if pair.len() == 2 => {
                Ok(Point::Tuple(vec![left.evaluate(&pair[0])?, right.evaluate(&pair[1])?]))
            }
            (MapSystem::Scaled { factor, base }, Point::Real(_)) => match base.evaluate(p)? {
                Point::Real(y) => Ok(Point::Real(factor * y)),
                other => Err(Error::PointMismatch {
                    expected: "real",
                    found: other.kind(),
                }),
            },
            _ => Err(Error::PointMismatch {
                expected: self.space().name(),
                found: p.kind(),
            }),
        }
    }

    /// Fast path for scalar systems; callers guarantee [`Self::is_scalar`].
    pub fn eval_scalar(&self, x: f64) -> f64 {
        match self {
            MapSystem::Identity { .. } => x,
            MapSystem::Pam { map, domain } => {
                let y = map.eval(x);
                match domain {
                    Domain::Interval => y,
                    Domain::Circle => wrap(y),
                }
            }
            MapSystem::Iterate { base, power } => {
                let mut y = x;
                for _ in 0..*power {
                    let next = base.eval_scalar(y);
                    if next == y {
                        break;
                    }
                    y = next;
                }
                y
            }
            MapSystem::PowerOfTwo { base, log2 } => {
                power_of_two_scalar(base, x, *log2).unwrap_or(f64::NAN)
            }
            MapSystem::Scaled { factor, base } => factor * base.eval_scalar(x),
            MapSystem::ShiftLike { .. } | MapSystem::DirectProduct { .. } => f64::NAN,
        }
    }

    /// Lipschitz constant of one step with respect to the space metric.
    pub fn lipschitz(&self) -> f64 {
        match self {
            MapSystem::Identity { .. } => 1.0,
            MapSystem::Pam { map, .. } => map.lipschitz(),
            MapSystem::ShiftLike { space, block, .. } => match space {
                Space::Product { .. } => 2f64.powi(*block as i32),
                _ => 3f64.powi(*block as i32),
            },
            MapSystem::Iterate { base, power } => base.lipschitz().powf(*power as f64),
            MapSystem::PowerOfTwo { base, log2 } => base.lipschitz().powf(2f64.powi(*log2 as i32)),
            MapSystem::DirectProduct { left, right } => left.lipschitz().max(right.lipschitz()),
            MapSystem::Scaled { factor, base } => factor.abs() * base.lipschitz(),
        }
    }

    /// Flattens a scalar system to a single piecewise-affine map.
    pub fn to_pam(&self) -> Result<PiecewiseAffineMap> {
        match self {
            MapSystem::Identity { space: Space::Interval } => Ok(PiecewiseAffineMap::identity()),
            MapSystem::Pam { map, .. } => Ok(map.clone()),
            MapSystem::Iterate { base, power } => base.to_pam()?.iterate(*power),
            MapSystem::PowerOfTwo { base, log2 } => base.to_pam()?.iterate(1u64 << log2),
            MapSystem::Scaled { factor, base } => {
                let inner = base.to_pam()?;
                let values = inner.values().iter().map(|v| factor * v).collect();
                PiecewiseAffineMap::new(inner.breakpoints().to_vec(), values)
            }
            _ => Err(Error::InvalidMap(format!(
                "{} is not a piecewise-affine interval system",
                self.space().name()
            ))),
        }
    }

    /// Number of maximal monotone pieces of a scalar system.
    pub fn lap_count(&self) -> Result<usize> {
        Ok(self.to_pam()?.lap_count())
    }
}

fn wrap(y: f64) -> f64 {
    let r = y.rem_euclid(1.0);
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

fn iterate_point(base: &MapSystem, p: &Point, power: u64) -> Result<Point> {
    let mut y = p.clone();
    for _ in 0..power {
        let next = base.evaluate(&y)?;
        if next == y {
            break;
        }
        y = next;
    }
    Ok(y)
}

fn power_of_two_scalar(base: &MapSystem, x: f64, log2: u32) -> Result<f64> {
    let steps = 1u64.checked_shl(log2).filter(|_| log2 < 64);
    let mut seen: HashMap<u64, u64> = HashMap::new();
    let mut y = x;
    let mut t = 0u64;
    loop {
        if let Some(total) = steps {
            if t == total {
                return Ok(y);
            }
        }
        if let Some(&first) = seen.get(&y.to_bits()) {
            let period = t - first;
            let remaining = match steps {
                Some(total) => (total - t) % period,
                // 2^log2 mod period, without forming 2^log2
                None => {
                    let target = pow_mod(2, log2 as u64, period);
                    (target + period - (t % period)) % period
                }
            };
            for _ in 0..remaining {
                y = base.eval_scalar(y);
            }
            return Ok(y);
        }
        if t >= CYCLE_SEARCH_LIMIT {
            return Err(Error::IterationCap {
                power: t,
                cap: CYCLE_SEARCH_LIMIT,
            });
        }
        seen.insert(y.to_bits(), t);
        y = base.eval_scalar(y);
        t += 1;
    }
}

fn pow_mod(base: u64, exp: u64, modulus: u64) -> u64 {
    let m = modulus as u128;
    let mut result = 1u128 % m;
    let mut b = base as u128 % m;
    let mut e = exp;
    while e > 0 {
        if e & 1 == 1 {
            result = result * b % m;
        }
        b = b * b % m;
        e >>= 1;
    }
    result as u64
}

fn power_of_two_point(base: &MapSystem, p: &Point, log2: u32) -> Result<Point> {
    match p {
        Point::Real(x) if base.is_scalar() => Ok(Point::Real(power_of_two_scalar(base, *x, log2)?)),
        Point::Angle(x) if base.is_scalar() => {
            Ok(Point::Angle(power_of_two_scalar(base, *x, log2)?))
        }
        _ if log2 < 24 => iterate_point(base, p, 1u64 << log2),
        _ => Err(Error::IterationCap {
            power: u64::MAX,
            cap: CYCLE_SEARCH_LIMIT,
        }),
    }
}

/// A fixed reference point used to pad truncated shifts.
pub fn anchor(space: &Space) -> Result<Point> {
    match space {
        Space::Interval => Ok(Point::Real(0.0)),
        Space::Circle => Ok(Point::Angle(0.0)),
        _ => sample_net(space, space.diameter().max(f64::MIN_POSITIVE))?
            .into_iter()
            .next()
            .ok_or(Error::EmptyNet),
    }
}

fn shift_point(space: &Space, block: usize, prefix: usize, p: &Point) -> Result<Point> {
    match (space, p) {
        (Space::CantorWords { .. }, Point::Word(w)) => {
            Ok(Point::Word(w.drop_after_prefix(prefix, block)))
        }
        (Space::Product { base, .. }, Point::Tuple(comps)) => {
            let pad = anchor(base)?;
            let keep = prefix.min(comps.len());
            let mut out: Vec<Point> = comps[..keep].to_vec();
            out.extend(comps.iter().skip(keep + block).cloned());
            out.resize(comps.len(), pad);
            Ok(Point::Tuple(out))
        }
        _ => Err(Error::PointMismatch {
            expected: space.name(),
            found: p.kind(),
        }),
    }
}

/// Generator rule of a non-autonomous system: index `i ≥ 1` to `f_i`.
pub type Generator = Arc<dyn Fn(usize) -> MapSystem + Send + Sync>;

/// A sequence `(f_i)_{i ≥ 1}` of self-maps of one space.
#[derive(Clone)]
pub struct NonAutonomousSystem {
    generator: Generator,
    description: String,
    space: Space,
}

impl fmt::Debug for NonAutonomousSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NonAutonomousSystem")
            .field("description", &self.description)
            .field("space", &self.space)
            .finish()
    }
}

impl NonAutonomousSystem {
    /// The space is read from `generator(1)`.
    pub fn new(
        description: impl Into<String>,
        generator: impl Fn(usize) -> MapSystem + Send + Sync + 'static,
    ) -> Self {
        let space = generator(1).space();
        Self {
            generator: Arc::new(generator),
            description: description.into(),
            space,
        }
    }

    pub fn constant(map: MapSystem) -> Self {
        let description = format!("constant {}", map.space().name());
        Self::new(description, move |_| map.clone())
    }

    pub fn map(&self, i: usize) -> MapSystem {
        (self.generator)(i.max(1))
    }

    pub fn description(&self) -> &str {
        &self.description
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// `f_{start+length−1} ∘ … ∘ f_start` applied to `p`.
    pub fn compose_window(&self, start: usize, length: usize, p: &Point) -> Result<Point> {
        let mut y = p.clone();
        for i in start..start + length {
            y = self.map(i).evaluate(&y)?;
        }
        Ok(y)
    }
}

/// Autonomous or non-autonomous dynamics on one space.
#[derive(Debug, Clone)]
pub enum System {
    Autonomous(MapSystem),
    NonAutonomous(NonAutonomousSystem),
}

impl System {
    pub fn space(&self) -> Space {
        match self {
            System::Autonomous(m) => m.space(),
            System::NonAutonomous(n) => n.space().clone(),
        }
    }

    /// The map applied at step `i ≥ 1`.
    pub fn step(&self, i: usize) -> MapSystem {
        match self {
            System::Autonomous(m) => m.clone(),
            System::NonAutonomous(n) => n.map(i),
        }
    }
}

impl From<MapSystem> for System {
    fn from(m: MapSystem) -> Self {
        System::Autonomous(m)
    }
}

impl From<NonAutonomousSystem> for System {
    fn from(n: NonAutonomousSystem) -> Self {
        System::NonAutonomous(n)
    }
}

/// Lower bound for `sup_x d(a(x), b(x))`: the maximum over a `mesh`-net,
/// or the exact supremum when both systems are piecewise affine.
pub fn c0_distance(a: &MapSystem, b: &MapSystem, mesh: f64) -> Result<f64> {
    let space = a.space();
    if space != b.space() {
        return Err(Error::SpaceMismatch);
    }
    if let (Ok(f), Ok(g)) = (a.to_pam(), b.to_pam()) {
        return f.c0_distance(&g);
    }
    let net = sample_net(&space, mesh)?;
    let mut best = 0.0f64;
    for p in &net {
        best = best.max(distance(&space, &a.evaluate(p)?, &b.evaluate(p)?)?);
    }
    Ok(best)
}

/// Shift on the full-line product `base^ℤ` truncated at `depth`.
pub fn bilateral_shift(base: Space, depth: usize) -> MapSystem {
    MapSystem::ShiftLike {
        space: Space::product(base, ProductIndex::FullLine, depth),
        block: 1,
        prefix: 0,
    }
}
