//! Bowen-metric counts `sep`, `span` and `cov` over finite nets.
//!
//! Separation is strict (`d_n > ε`); spanning and cover cells use `d_n < ε`.

mod bits;
mod exact;
mod greedy;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{arc_distance, distance, CloudMetric, Point, Space};
use crate::systems::{MapSystem, System};

use bits::Bits;
use exact::Search;

/// Default limit on net size × horizon.
pub const DEFAULT_BUDGET: u64 = 10_000_000;
/// Default largest connected component handed to an exact solver.
pub const DEFAULT_EXACT_CAP: usize = 2000;
/// Largest net for which all pairwise distances are examined.
pub const PAIRWISE_LIMIT: usize = 20_000;

pub const CSV_HEADER: &str = "system_id,quantity,n,epsilon,mode,count,log_count,wall_ms";

/// The budget, overridden by `MDIMLAB_BUDGET` when set.
pub fn default_budget() -> u64 {
    std::env::var("MDIMLAB_BUDGET")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Sep,
    Span,
    Cov,
}

impl fmt::Display for Quantity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Quantity::Sep => "sep",
            Quantity::Span => "span",
            Quantity::Cov => "cov",
        })
    }
}

/// Requested solver.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Exact,
    Greedy,
    #[default]
    Auto,
}

/// What a count certifies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountMode {
    Exact,
    GreedyLower,
    GreedyUpper,
}

impl fmt::Display for CountMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CountMode::Exact => "exact",
            CountMode::GreedyLower => "greedy_lower",
            CountMode::GreedyUpper => "greedy_upper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountOptions {
    pub mode: Mode,
    pub exact_cap: usize,
    pub node_limit: u64,
}

impl Default for CountOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Auto,
            exact_cap: DEFAULT_EXACT_CAP,
            node_limit: 1_000_000,
        }
    }
}

impl CountOptions {
    pub fn exact() -> Self {
        Self {
            mode: Mode::Exact,
            ..Self::default()
        }
    }

    pub fn greedy() -> Self {
        Self {
            mode: Mode::Greedy,
            ..Self::default()
        }
    }
}

/// How an exact answer was established.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// Independent components solved separately.
    pub components: usize,
    /// Branch-and-bound nodes explored.
    pub nodes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub quantity: Quantity,
    pub count: usize,
    pub mode: CountMode,
    /// Separated points, spanning centres, or one representative per cell.
    pub witness: Vec<Point>,
    pub epsilon: f64,
    pub horizon: usize,
    pub certificate: Option<Certificate>,
}

impl CountResult {
    pub fn log_count(&self) -> f64 {
        (self.count as f64).ln()
    }

    pub fn csv_row(&self, system_id: &str, wall_ms: u128) -> String {
        format!(
            "{system_id},{},{},{},{},{},{},{wall_ms}",
            self.quantity,
            self.horizon,
            self.epsilon,
            self.mode,
            self.count,
            self.log_count()
        )
    }
}

enum Orbits {
    /// Row-major `net.len() × horizon` coordinates.
    Scalar { circle: bool, values: Vec<f64> },
    General(Vec<Vec<Point>>),
}

/// A net together with the cached length-`horizon` orbit of every point.
pub struct OrbitContext {
    space: Space,
    horizon: usize,
    net: Vec<Point>,
    orbits: Orbits,
}

impl OrbitContext {
    pub fn new(system: &System, horizon: usize, net: Vec<Point>) -> Result<Self> {
        Self::with_budget(system, horizon, net, default_budget())
    }

    /// Fails with [`Error::BudgetExceeded`] when `net.len() × horizon`
    /// exceeds `budget`.
    pub fn with_budget(
        system: &System,
        horizon: usize,
        net: Vec<Point>,
        budget: u64,
    ) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::InvalidParameter("horizon must be ≥ 1".into()));
        }
        if net.is_empty() {
            return Err(Error::EmptyNet);
        }
        let needed = (net.len() as u64).saturating_mul(horizon as u64);
        if needed > budget {
            return Err(Error::BudgetExceeded { budget, needed });
        }
        let space = system.space();
        net.par_iter().try_for_each(|p| space.check(p))?;
        let steps: Vec<MapSystem> = (1..horizon).map(|i| system.step(i)).collect();
        let orbits = match scalar_kind(&space, &steps) {
            Some(ScalarKind::Line { circle }) => {
                let mut values = vec![0.0; net.len() * horizon];
                values
                    .par_chunks_mut(horizon)
                    .zip(&net)
                    .for_each(|(row, p)| {
                        let mut x = p.as_real().unwrap_or(f64::NAN);
                        row[0] = x;
                        for (slot, f) in row[1..].iter_mut().zip(&steps) {
                            x = f.eval_scalar(x);
                            *slot = x;
                        }
                    });
                if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
                    return Err(Error::InvalidMap(format!("orbit left the space at {bad}")));
                }
                Orbits::Scalar { circle, values }
            }
            Some(ScalarKind::Cloud(coords)) => {
                let mut values = Vec::with_capacity(net.len() * horizon);
                for p in &net {
                    let Point::Site(i) = p else { unreachable!() };
                    values.extend(std::iter::repeat(coords[*i]).take(horizon));
                }
                Orbits::Scalar {
                    circle: false,
                    values,
                }
            }
            None => {
                let orbits = net
                    .par_iter()
                    .map(|p| {
                        let mut orbit = Vec::with_capacity(horizon);
                        orbit.push(p.clone());
                        for f in &steps {
                            let next = f.evaluate(orbit.last().unwrap())?;
                            orbit.push(next);
                        }
                        Ok(orbit)
                    })
                    .collect::<Result<Vec<_>>>()?;
                Orbits::General(orbits)
            }
        };
        Ok(Self {
            space,
            horizon,
            net,
            orbits,
        })
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn net(&self) -> &[Point] {
        &self.net
    }

    pub fn len(&self) -> usize {
        self.net.len()
    }

    pub fn is_empty(&self) -> bool {
        self.net.is_empty()
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    /// `d_n` between net points `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.orbits {
            Orbits::Scalar { circle, values } => {
                let h = self.horizon;
                let a = &values[i * h..(i + 1) * h];
                let b = &values[j * h..(j + 1) * h];
                let gap = |(x, y): (&f64, &f64)| {
                    if *circle {
                        arc_distance(*x, *y)
                    } else {
                        (x - y).abs()
                    }
                };
                a.iter().zip(b).map(gap).fold(0.0, f64::max)
            }
            Orbits::General(orbits) => orbits[i]
                .iter()
                .zip(&orbits[j])
                .map(|(p, q)| distance(&self.space, p, q).unwrap_or(f64::INFINITY))
                .fold(0.0, f64::max),
        }
    }

    fn scalar_values(&self) -> Option<(&[f64], bool)> {
        match &self.orbits {
            Orbits::Scalar { circle, values } => Some((values, *circle)),
            Orbits::General(_) => None,
        }
    }

    /// Neighbour lists of the graph joining `i ≠ j` when `edge(d_n(i, j))`.
    fn neighbours(&self, edge: impl Fn(f64) -> bool + Sync) -> Vec<Vec<u32>> {
        let n = self.len();
        let upper: Vec<Vec<u32>> = (0..n)
            .into_par_iter()
            .map(|i| {
                ((i + 1)..n)
                    .filter(|&j| edge(self.distance(i, j)))
                    .map(|j| j as u32)
                    .collect()
            })
            .collect();
        let mut lists = upper.clone();
        for (i, row) in upper.iter().enumerate() {
            for &j in row {
                lists[j as usize].push(i as u32);
            }
        }
        lists
    }
}

enum ScalarKind<'a> {
    Line { circle: bool },
    Cloud(&'a [f64]),
}

fn scalar_kind<'a>(space: &'a Space, steps: &[MapSystem]) -> Option<ScalarKind<'a>> {
    match space {
        Space::Interval => steps
            .iter()
            .all(MapSystem::is_scalar)
            .then_some(ScalarKind::Line { circle: false }),
        Space::Circle => steps
            .iter()
            .all(MapSystem::is_scalar)
            .then_some(ScalarKind::Line { circle: true }),
        Space::PointCloud(cloud) => match cloud.metric() {
            CloudMetric::Euclidean { dim: 1, coords }
                if steps.iter().all(|f| matches!(f, MapSystem::Identity { .. })) =>
            {
                Some(ScalarKind::Cloud(coords))
            }
            _ => None,
        },
        _ => None,
    }
}

/// `d_n(p, q)` computed directly from the system.
pub fn orbit_distance(system: &System, horizon: usize, p: &Point, q: &Point) -> Result<f64> {
    let ctx = OrbitContext::with_budget(system, horizon, vec![p.clone(), q.clone()], u64::MAX)?;
    Ok(ctx.distance(0, 1))
}

/// Largest subset of the net with pairwise `d_n > ε`.
pub fn max_separated(ctx: &OrbitContext, epsilon: f64, opts: &CountOptions) -> Result<CountResult> {
    count(ctx, Quantity::Sep, epsilon, opts)
}

/// Fewest net points within `d_n < ε` of every net point.
pub fn min_spanning(ctx: &OrbitContext, epsilon: f64, opts: &CountOptions) -> Result<CountResult> {
    count(ctx, Quantity::Span, epsilon, opts)
}

/// Fewest subsets of `d_n`-diameter `< ε` covering the net.
pub fn min_cover(ctx: &OrbitContext, epsilon: f64, opts: &CountOptions) -> Result<CountResult> {
    count(ctx, Quantity::Cov, epsilon, opts)
}

pub fn count(
    ctx: &OrbitContext,
    quantity: Quantity,
    epsilon: f64,
    opts: &CountOptions,
) -> Result<CountResult> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::InvalidParameter(format!("epsilon {epsilon} must be positive")));
    }
    if quantity == Quantity::Cov && ctx.horizon == 1 {
        if let Some((values, false)) = ctx.scalar_values() {
            return Ok(finish(ctx, quantity, epsilon, CountMode::Exact, greedy::line_cover(values, epsilon), None));
        }
    }
    let exact = match opts.mode {
        Mode::Greedy => None,
        Mode::Exact => Some(solve_exact(ctx, quantity, epsilon, opts)?),
        Mode::Auto => match solve_exact(ctx, quantity, epsilon, opts) {
            Ok(found) => Some(found),
            Err(Error::ExactCapExceeded { .. } | Error::SearchLimit(_)) => None,
            Err(e) => return Err(e),
        },
    };
    if let Some((chosen, certificate)) = exact {
        return Ok(finish(ctx, quantity, epsilon, CountMode::Exact, chosen, Some(certificate)));
    }
    let (chosen, mode) = match quantity {
        Quantity::Sep => (greedy::separated(ctx, epsilon), CountMode::GreedyLower),
        Quantity::Span => (greedy::spanning(ctx, epsilon), CountMode::GreedyUpper),
        Quantity::Cov => (greedy::cover(ctx, epsilon), CountMode::GreedyUpper),
    };
    Ok(finish(ctx, quantity, epsilon, mode, chosen, None))
}

fn finish(
    ctx: &OrbitContext,
    quantity: Quantity,
    epsilon: f64,
    mode: CountMode,
    chosen: Vec<usize>,
    certificate: Option<Certificate>,
) -> CountResult {
    CountResult {
        quantity,
        count: chosen.len(),
        mode,
        witness: chosen.iter().map(|&i| ctx.net[i].clone()).collect(),
        epsilon,
        horizon: ctx.horizon,
        certificate,
    }
}

/// Solves each connected component of the relevant graph exactly.
fn solve_exact(
    ctx: &OrbitContext,
    quantity: Quantity,
    epsilon: f64,
    opts: &CountOptions,
) -> Result<(Vec<usize>, Certificate)> {
    if ctx.len() > PAIRWISE_LIMIT {
        return Err(Error::ExactCapExceeded {
            size: ctx.len(),
            cap: PAIRWISE_LIMIT,
        });
    }
    // sep conflicts are pairs with d ≤ ε; span and cov join pairs with d < ε
    let lists = match quantity {
        Quantity::Sep => ctx.neighbours(|d| d <= epsilon),
        Quantity::Span | Quantity::Cov => ctx.neighbours(|d| d < epsilon),
    };
    let components = components(&lists);
    if let Some(big) = components.iter().map(Vec::len).max().filter(|&s| s > opts.exact_cap) {
        return Err(Error::ExactCapExceeded {
            size: big,
            cap: opts.exact_cap,
        });
    }
    let mut search = Search::new(opts.node_limit);
    let mut chosen = Vec::new();
    for members in &components {
        let local = local_adjacency(members, &lists);
        let is_clique = local.iter().all(|row| row.count() + 1 == members.len());
        let picked: Vec<usize> = if is_clique {
            vec![0]
        } else {
            match quantity {
                Quantity::Sep => {
                    let separated: Vec<Bits> = local
                        .iter()
                        .enumerate()
                        .map(|(v, row)| {
                            let mut c = Bits::full(members.len()).and_not(row);
                            c.remove(v);
                            c
                        })
                        .collect();
                    exact::max_clique(&separated, &mut search)?
                }
                Quantity::Span => {
                    let balls: Vec<Bits> = local
                        .iter()
                        .enumerate()
                        .map(|(v, row)| {
                            let mut b = row.clone();
                            b.insert(v);
                            b
                        })
                        .collect();
                    exact::min_set_cover(&balls, members.len(), &mut search)?
                }
                Quantity::Cov => {
                    let cliques = exact::maximal_cliques(&local)?;
                    exact::min_set_cover(&cliques, members.len(), &mut search)?
                        .into_iter()
                        .map(|c| cliques[c].first().unwrap())
                        .collect()
                }
            }
        };
        chosen.extend(picked.into_iter().map(|v| members[v]));
    }
    chosen.sort_unstable();
    Ok((
        chosen,
        Certificate {
            components: components.len(),
            nodes: search.nodes,
        },
    ))
}

fn components(lists: &[Vec<u32>]) -> Vec<Vec<usize>> {
    let n = lists.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut stack = vec![start];
        let mut members = Vec::new();
        while let Some(v) = stack.pop() {
            members.push(v);
            for &w in &lists[v] {
                if !seen[w as usize] {
                    seen[w as usize] = true;
                    stack.push(w as usize);
                }
            }
        }
        members.sort_unstable();
        out.push(members);
    }
    out
}

fn local_adjacency(members: &[usize], lists: &[Vec<u32>]) -> Vec<Bits> {
    let index: std::collections::HashMap<usize, usize> =
        members.iter().enumerate().map(|(k, &v)| (v, k)).collect();
    members
        .iter()
        .map(|&v| {
            let mut row = Bits::new(members.len());
            for &w in &lists[v] {
                row.insert(index[&(w as usize)]);
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests;
