//! Finite stand-ins for compact metric spaces.
//!
//! Every [`Space`] evaluates its metric exactly on its own point
//! representation; infinite products are truncated at a recorded depth and
//! [`tail_bound`] reports how much metric mass the truncation discards.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest net [`sample_net`] will materialise.
pub const NET_LIMIT: usize = 50_000_000;

/// A symbolic sequence `(s_1, …, s_L, t, t, t, …)` whose tail repeats `t`.
///
/// Trailing symbols equal to the tail are stripped on construction so two
/// words denote the same sequence iff they compare equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    symbols: Vec<u8>,
    tail: u8,
}

impl Word {
    pub fn new(mut symbols: Vec<u8>, tail: u8) -> Self {
        while symbols.last() == Some(&tail) {
            symbols.pop();
        }
        Self { symbols, tail }
    }

    /// Explicit symbols before the repeating tail.
    pub fn symbols(&self) -> &[u8] {
        &self.symbols
    }

    pub fn tail(&self) -> u8 {
        self.tail
    }

    /// Symbol at 0-based position `i`.
    pub fn symbol(&self, i: usize) -> u8 {
        self.symbols.get(i).copied().unwrap_or(self.tail)
    }

    /// Drops the first `count` symbols.
    pub fn drop_front(&self, count: usize) -> Self {
        let symbols = self.symbols.iter().skip(count).copied().collect();
        Self::new(symbols, self.tail)
    }

    /// Keeps the first `keep` symbols and drops the next `count` after them.
    pub fn drop_after_prefix(&self, keep: usize, count: usize) -> Self {
        let mut symbols: Vec<u8> = (0..keep).map(|i| self.symbol(i)).collect();
        symbols.extend(self.symbols.iter().skip(keep + count).copied());
        Self::new(symbols, self.tail)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Point {
    Real(f64),
    Angle(f64),
    Word(Word),
    Tuple(Vec<Point>),
    /// Index into a [`PointCloud`].
    Site(usize),
}

impl Point {
    pub fn kind(&self) -> &'static str {
        match self {
            Point::Real(_) => "real",
            Point::Angle(_) => "angle",
            Point::Word(_) => "word",
            Point::Tuple(_) => "tuple",
            Point::Site(_) => "site",
        }
    }

    pub fn as_real(&self) -> Option<f64> {
        match self {
            Point::Real(x) | Point::Angle(x) => Some(*x),
            _ => None,
        }
    }

    pub fn word(symbols: &[u8]) -> Self {
        Point::Word(Word::new(symbols.to_vec(), 0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductIndex {
    /// Coordinates `i = 1, 2, …` with weights `2^-i`.
    HalfLine,
    /// Coordinates `i ∈ ℤ` with weights `2^-|i|`.
    FullLine,
}

impl ProductIndex {
    /// Number of stored coordinates at truncation depth `depth`.
    pub fn coordinates(self, depth: usize) -> usize {
        match self {
            ProductIndex::HalfLine => depth,
            ProductIndex::FullLine => 2 * depth + 1,
        }
    }

    /// Weight of the coordinate stored at `slot`.
    pub fn weight(self, depth: usize, slot: usize) -> f64 {
        let exponent = match self {
            ProductIndex::HalfLine => slot + 1,
            ProductIndex::FullLine => slot.abs_diff(depth),
        };
        0.5f64.powi(exponent as i32)
    }

    /// Sum of all weights over the untruncated index set.
    fn total_weight(self) -> f64 {
        match self {
            ProductIndex::HalfLine => 1.0,
            ProductIndex::FullLine => 3.0,
        }
    }
}

/// Distances between finitely many sites.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "metric", rename_all = "snake_case")]
pub enum CloudMetric {
    /// Row-major symmetric `n × n` table.
    Table { n: usize, entries: Vec<f64> },
    /// Euclidean distance between rows of a `len × dim` coordinate matrix.
    Euclidean { dim: usize, coords: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    #[serde(flatten)]
    metric: CloudMetric,
    diameter: f64,
}

impl PointCloud {
    /// Validates symmetry, a zero diagonal, positive off-diagonal entries
    /// and (for tables up to 400 sites) the triangle inequality.
    pub fn from_table(n: usize, entries: Vec<f64>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::InvalidTable(format!(
                "expected {} entries for {n} sites, got {}",
                n * n,
                entries.len()
            )));
        }
        let at = |i: usize, j: usize| entries[i * n + j];
        let mut diameter = 0.0f64;
        for i in 0..n {
            if at(i, i) != 0.0 {
                return Err(Error::InvalidTable(format!("nonzero diagonal at {i}")));
            }
            for j in (i + 1)..n {
                let d = at(i, j);
                if !(d.is_finite() && d > 0.0) || d != at(j, i) {
                    return Err(Error::InvalidTable(format!(
                        "entry ({i}, {j}) = {d} is not a positive symmetric distance"
                    )));
                }
                diameter = diameter.max(d);
            }
        }
        if n <= 400 {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        if at(i, k) > at(i, j) + at(j, k) + 1e-12 {
                            return Err(Error::InvalidTable(format!(
                                "triangle inequality fails on ({i}, {j}, {k})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self {
            metric: CloudMetric::Table { n, entries },
            diameter,
        })
    }

    /// Sites given by coordinates in `dim`-dimensional Euclidean space.
    pub fn from_coords(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 || coords.is_empty() || coords.len() % dim != 0 {
            return Err(Error::InvalidTable(format!(
                "{} coordinates do not form rows of dimension {dim}",
                coords.len()
            )));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidTable("non-finite coordinate".into()));
        }
        let mut cloud = Self {
            metric: CloudMetric::Euclidean { dim, coords },
            diameter: 0.0,
        };
        cloud.diameter = if dim == 1 {
            let coords = cloud.coords().unwrap().0;
            let lo = coords.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = coords.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            hi - lo
        } else {
            let n = cloud.len();
            (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| cloud.distance(i, j))
                .fold(0.0, f64::max)
        };
        Ok(cloud)
    }

    pub fn len(&self) -> usize {
        match &self.metric {
            CloudMetric::Table { n, .. } => *n,
            CloudMetric::Euclidean { dim, coords } => coords.len() / dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn metric(&self) -> &CloudMetric {
        &self.metric
    }

    /// `(coords, dim)` for Euclidean clouds.
    pub fn coords(&self) -> Option<(&[f64], usize)> {
        match &self.metric {
            CloudMetric::Euclidean { dim, coords } => Some((coords, *dim)),
            CloudMetric::Table { .. } => None,
        }
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        match &self.metric {
            CloudMetric::Table { n, entries } => entries[i * n + j],
            CloudMetric::Euclidean { dim, coords } => {
                let a = &coords[i * dim..(i + 1) * dim];
                let b = &coords[j * dim..(j + 1) * dim];
                if *dim == 1 {
                    return (a[0] - b[0]).abs();
                }
                a.iter()
                    .zip(b)
                    .map(|(x, y)| (x - y) * (x - y))
                    .sum::<f64>()
                    .sqrt()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }
}

fn cantor_alphabet() -> Vec<u8> {
    vec![0, 2]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Space {
    /// `[0, 1]` with `|x − y|`.
    Interval,
    /// `ℝ/ℤ` with arc length `min(|x − y|, 1 − |x − y|)`.
    Circle,
    /// Words over `alphabet` with at most `depth` explicit symbols and
    /// `d(x, y) = Σ 3^-n |x_n − y_n|`.
    CantorWords {
        depth: usize,
        #[serde(default = "cantor_alphabet")]
        alphabet: Vec<u8>,
    },
    /// `base^K` truncated at `depth`, weighted by `2^-|i|`.
    Product {
        base: Box<Space>,
        index: ProductIndex,
        depth: usize,
    },
    /// `X × Y` with the sum metric.
    SumProduct { left: Box<Space>, right: Box<Space> },
    PointCloud(Arc<PointCloud>),
}

impl Space {
    pub fn cantor(depth: usize) -> Self {
        Space::CantorWords {
            depth,
            alphabet: cantor_alphabet(),
        }
    }

    pub fn product(base: Space, index: ProductIndex, depth: usize) -> Self {
        Space::Product {
            base: Box::new(base),
            index,
            depth,
        }
    }

    pub fn sum_product(left: Space, right: Space) -> Self {
        Space::SumProduct {
            left: Box::new(left),
            right: Box::new(right),
        }
    }

    pub fn cloud(cloud: PointCloud) -> Self {
        Space::PointCloud(Arc::new(cloud))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Space::Interval => "interval",
            Space::Circle => "circle",
            Space::CantorWords { .. } => "cantor_words",
            Space::Product { .. } => "product",
            Space::SumProduct { .. } => "sum_product",
            Space::PointCloud(_) => "point_cloud",
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Space::Interval => 1.0,
            Space::Circle => 0.5,
            Space::CantorWords { alphabet, .. } => symbol_spread(alphabet) / 2.0,
            Space::Product { base, index, .. } => base.diameter() * index.total_weight(),
            Space::SumProduct { left, right } => left.diameter() + right.diameter(),
            Space::PointCloud(cloud) => cloud.diameter(),
        }
    }

    /// Checks that `p` is a point of this space.
    pub fn check(&self, p: &Point) -> Result<()> {
        let mismatch = || Error::PointMismatch {
            expected: self.name(),
            found: p.kind(),
        };
        match (self, p) {
            (Space::Interval, Point::Real(x)) => {
                if (0.0..=1.0).contains(x) {
                    Ok(())
                } else {
                    Err(Error::PointOutOfRange(format!("{x} not in [0, 1]")))
                }
            }
            (Space::Circle, Point::Angle(x)) => {
                if (0.0..1.0).contains(x) {
                    Ok(())
                } else {
                    Err(Error::PointOutOfRange(format!("{x} not in [0, 1)")))
                }
            }
            (Space::CantorWords { depth, alphabet }, Point::Word(w)) => {
                if w.tail() != alphabet[0] || w.symbols().len() > *depth {
                    return Err(Error::PointOutOfRange(format!(
                        "word {:?} exceeds depth {depth} or has a foreign tail",
                        w.symbols()
                    )));
                }
                match w.symbols().iter().find(|s| !alphabet.contains(s)) {
                    Some(s) => Err(Error::PointOutOfRange(format!("symbol {s} not in alphabet"))),
                    None => Ok(()),
                }
            }
            (Space::Product { base, index, depth }, Point::Tuple(comps)) => {
                if comps.len() != index.coordinates(*depth) {
                    return Err(Error::PointOutOfRange(format!(
                        "{} coordinates at depth {depth}",
                        comps.len()
                    )));
                }
                comps.iter().try_for_each(|c| base.check(c))
            }
            (Space::SumProduct { left, right }, Point::Tuple(comps)) if comps.len() == 2 => {
                left.check(&comps[0])?;
                right.check(&comps[1])
            }
            (Space::PointCloud(cloud), Point::Site(i)) => {
                if *i < cloud.len() {
                    Ok(())
                } else {
                    Err(Error::PointOutOfRange(format!("site {i} of {}", cloud.len())))
                }
            }
            _ => Err(mismatch()),
        }
    }
}

fn symbol_spread(alphabet: &[u8]) -> f64 {
    let lo = alphabet.iter().min().copied().unwrap_or(0);
    let hi = alphabet.iter().max().copied().unwrap_or(0);
    f64::from(hi - lo)
}

/// `3^-i` for `i ≥ 0`, exact reciprocal of an exact power.
pub(crate) fn third_power(i: usize) -> f64 {
    1.0 / 3f64.powi(i as i32)
}

/// `Σ 3^-n |x_n − y_n|` summed from the deepest explicit term upwards.
pub fn word_distance(p: &Word, q: &Word) -> f64 {
    let explicit = p.symbols().len().max(q.symbols().len());
    let tail_gap = f64::from(p.tail().abs_diff(q.tail()));
    let mut total = tail_gap * third_power(explicit) / 2.0;
    for i in (0..explicit).rev() {
        let gap = p.symbol(i).abs_diff(q.symbol(i));
        if gap != 0 {
            total += f64::from(gap) * third_power(i + 1);
        }
    }
    total
}

/// The real number `Σ x_n 3^-n` a word encodes.
pub fn embed_word(w: &Word) -> f64 {
    let explicit = w.symbols().len();
    let mut total = f64::from(w.tail()) * third_power(explicit) / 2.0;
    for i in (0..explicit).rev() {
        total += f64::from(w.symbol(i)) * third_power(i + 1);
    }
    total
}

pub fn arc_distance(x: f64, y: f64) -> f64 {
    let r = (x - y).abs();
    r.min(1.0 - r)
}

/// Metric of `space`; products are summed over their stored coordinates
/// only (see [`tail_bound`]).
pub fn distance(space: &Space, p: &Point, q: &Point) -> Result<f64> {
    let mismatch = |found: &Point| Error::PointMismatch {
        expected: space.name(),
        found: found.kind(),
    };
    match (space, p, q) {
        (Space::Interval, Point::Real(x), Point::Real(y)) => Ok((x - y).abs()),
        (Space::Circle, Point::Angle(x), Point::Angle(y)) => Ok(arc_distance(*x, *y)),
        (Space::CantorWords { .. }, Point::Word(a), Point::Word(b)) => Ok(word_distance(a, b)),
        (Space::Product { base, index, depth }, Point::Tuple(a), Point::Tuple(b)) => {
            let slots = index.coordinates(*depth);
            if a.len() != slots || b.len() != slots {
                return Err(Error::PointOutOfRange(format!(
                    "product points must carry {slots} coordinates"
                )));
            }
            let mut total = 0.0;
            for (slot, (x, y)) in a.iter().zip(b).enumerate() {
                total += index.weight(*depth, slot) * distance(base, x, y)?;
            }
            Ok(total)
        }
        (Space::SumProduct { left, right }, Point::Tuple(a), Point::Tuple(b))
            if a.len() == 2 && b.len() == 2 =>
        {
            Ok(distance(left, &a[0], &b[0])? + distance(right, &a[1], &b[1])?)
        }
        (Space::PointCloud(cloud), Point::Site(i), Point::Site(j)) => {
            if *i >= cloud.len() || *j >= cloud.len() {
                return Err(Error::PointOutOfRange(format!("site index beyond {}", cloud.len())));
            }
            Ok(cloud.distance(*i, *j))
        }
        _ => {
            space.check(p)?;
            space.check(q)?;
            Err(mismatch(q))
        }
    }
}

/// Upper bound on the metric mass of product coordinates beyond `depth`.
pub fn tail_bound(space: &Space, depth: usize) -> Result<f64> {
    match space {
        Space::Product { base, index, .. } => {
            let sides = match index {
                ProductIndex::HalfLine => 1.0,
                ProductIndex::FullLine => 2.0,
            };
            Ok(sides * base.diameter() * 0.5f64.powi(depth.min(2000) as i32))
        }
        _ => Err(Error::NotAProduct),
    }
}

/// Deterministic `mesh`-dense subset of `space` without duplicates.
pub fn sample_net(space: &Space, mesh: f64) -> Result<Vec<Point>> {
    if !(mesh > 0.0) || !mesh.is_finite() {
        return Err(Error::InvalidMesh(mesh));
    }
    match space {
        Space::Interval => {
            let m = grid_cells(1.0 / mesh)?;
            Ok((0..=m).map(|i| Point::Real(i as f64 / m as f64)).collect())
        }
        Space::Circle => {
            let m = grid_cells(1.0 / mesh)?;
            Ok((0..m).map(|i| Point::Angle(i as f64 / m as f64)).collect())
        }
        Space::CantorWords { depth, alphabet } => {
            let spread = symbol_spread(alphabet) / 2.0;
            let mut length = 0;
            while length < *depth && spread * third_power(length) > mesh * (1.0 + 1e-12) {
                length += 1;
            }
            let size = (alphabet.len() as u128).pow(length as u32);
            if size > NET_LIMIT as u128 {
                return Err(Error::NetTooLarge {
                    size,
                    limit: NET_LIMIT,
                });
            }
            Ok(all_words(alphabet, length)
                .into_iter()
                .map(|symbols| Point::Word(Word::new(symbols, alphabet[0])))
                .collect())
        }
        Space::Product { base, index, depth } => {
            let slots = index.coordinates(*depth);
            let stored: f64 = (0..slots).map(|s| index.weight(*depth, s)).sum();
            let base_net = sample_net(base, mesh / stored)?;
            let size = (base_net.len() as u128).saturating_pow(slots as u32);
            if size > NET_LIMIT as u128 {
                return Err(Error::NetTooLarge {
                    size,
                    limit: NET_LIMIT,
                });
            }
            Ok(cartesian(&vec![base_net; slots]))
        }
        Space::SumProduct { left, right } => {
            let a = sample_net(left, mesh / 2.0)?;
            let b = sample_net(right, mesh / 2.0)?;
            let size = a.len() as u128 * b.len() as u128;
            if size > NET_LIMIT as u128 {
                return Err(Error::NetTooLarge {
                    size,
                    limit: NET_LIMIT,
                });
            }
            Ok(a.iter()
                .flat_map(|x| b.iter().map(move |y| Point::Tuple(vec![x.clone(), y.clone()])))
                .collect())
        }
        Space::PointCloud(cloud) => Ok((0..cloud.len()).map(Point::Site).collect()),
    }
}

fn grid_cells(cells: f64) -> Result<usize> {
    let m = (cells * (1.0 - 1e-12)).ceil().max(1.0);
    if m > NET_LIMIT as f64 {
        return Err(Error::NetTooLarge {
            size: m as u128,
            limit: NET_LIMIT,
        });
    }
    Ok(m as usize)
}

fn all_words(alphabet: &[u8], length: usize) -> Vec<Vec<u8>> {
    let mut words = vec![Vec::with_capacity(length)];
    for _ in 0..length {
        words = words
            .into_iter()
            .flat_map(|w| {
                alphabet.iter().map(move |&s| {
                    let mut next = w.clone();
                    next.push(s);
                    next
                })
            })
            .collect();
    }
    words
}

fn cartesian(factors: &[Vec<Point>]) -> Vec<Point> {
    let mut out: Vec<Vec<Point>> = vec![Vec::new()];
    for factor in factors {
        out = out
            .into_iter()
            .flat_map(|prefix| {
                factor.iter().map(move |p| {
                    let mut next = prefix.clone();
                    next.push(p.clone());
                    next
                })
            })
            .collect();
    }
    out.into_iter().map(Point::Tuple).collect()
}

/// Splits a point of `(X × Y)^K` into its `X^K` and `Y^K` coordinates.
pub fn theta_reindex(p: &Point) -> Result<(Point, Point)> {
    let Point::Tuple(comps) = p else {
        return Err(Error::PointMismatch {
            expected: "product of pairs",
            found: p.kind(),
        });
    };
    let mut xs = Vec::with_capacity(comps.len());
    let mut ys = Vec::with_capacity(comps.len());
    for c in comps {
        match c {
            Point::Tuple(pair) if pair.len() == 2 => {
                xs.push(pair[0].clone());
                ys.push(pair[1].clone());
            }
            other => {
                return Err(Error::PointMismatch {
                    expected: "pair",
                    found: other.kind(),
                })
            }
        }
    }
    Ok((Point::Tuple(xs), Point::Tuple(ys)))
}
